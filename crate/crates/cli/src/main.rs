//! Command-line interface: solve instances, audit assignments, check
//! lottery envy-freeness, decompose matrices, and run the admission
//! experiment.
//!
//! Exit codes: 0 success or all properties pass, 1 a property fails or the
//! feasibility check is negative, 2 usage or input error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use fair_assign::admission::{
    csv_from_rows, experiment_svg, AdmissionConfig, BiasModel,
};
use fair_assign::audit::{
    check_1lef_lottery, check_1lef_matrix, check_lef_lottery, check_oe, check_prop, check_sef,
    AuditReport,
};
use fair_assign::eating::{cycle_elimination, probabilistic_serial_full, unit_time_eating};
use fair_assign::io::{
    assignment_to_json, load_assignment, load_instance, load_lottery, lottery_to_json,
    matrix_names, save_assignment, save_lottery,
};
use fair_assign::lefsolve::{lef_feasible, LefOutcome};
use fair_assign::lottery::{bvn_decompose, rsd};
use fair_assign::model::assignment_from_lottery;
use fair_assign::{Instance, Lottery, RandomAssignment, RandomPriority, Rational};

#[derive(Parser)]
#[command(
    name = "fair-assign",
    version,
    about = "Random assignment under uncertain priorities: solvers, audits, experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute an assignment (ps, ce, ute) or a lottery (rsd) for an instance.
    Solve {
        /// Algorithm to run.
        #[arg(long)]
        alg: Algorithm,
        /// Instance JSON file.
        #[arg(long)]
        instance: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Audit an assignment (and optionally a lottery inducing it) against
    /// fairness and efficiency properties.
    Audit {
        /// Comma-separated properties: sef, oe, prop, 1lef, lef.
        #[arg(long, value_delimiter = ',', required = true)]
        props: Vec<PropArg>,
        /// Instance JSON file.
        #[arg(long)]
        instance: PathBuf,
        /// Assignment JSON file.
        #[arg(long)]
        assignment: PathBuf,
        /// Lottery JSON file; switches 1lef to lottery mode, required for lef.
        #[arg(long)]
        lottery: Option<PathBuf>,
    },
    /// Decide whether any lottery inducing the assignment is
    /// envy-free in likelihoods.
    Lefcheck {
        /// Instance JSON file.
        #[arg(long)]
        instance: PathBuf,
        /// Assignment JSON file.
        #[arg(long)]
        assignment: PathBuf,
    },
    /// Decompose an assignment matrix into a lottery over deterministic
    /// assignments.
    Decompose {
        /// Assignment JSON file.
        #[arg(long)]
        assignment: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the school-admission bias experiment and write mean envy-pair
    /// counts as CSV.
    Experiment {
        /// Number of schools.
        #[arg(long)]
        schools: usize,
        /// Bias scale parameter.
        #[arg(long)]
        beta: f64,
        /// Bias model: multiplicative or additive.
        #[arg(long)]
        bias_model: BiasArg,
        /// Total number of students.
        #[arg(long, default_value_t = 35)]
        students: usize,
        /// Number of disadvantaged students.
        #[arg(long, default_value_t = 10)]
        disadvantaged: usize,
        /// Priority samples per trial.
        #[arg(long, default_value_t = 1000)]
        q: usize,
        /// Number of trials.
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Base RNG seed; trial k uses seed XOR k.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// CSV output file.
        #[arg(long)]
        out: PathBuf,
        /// Optional SVG bar chart output file.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Algorithm {
    Ps,
    Ce,
    Ute,
    Rsd,
}

#[derive(Clone, Copy, ValueEnum)]
enum PropArg {
    Sef,
    Oe,
    Prop,
    #[value(name = "1lef")]
    OneLef,
    Lef,
}

#[derive(Clone, Copy, ValueEnum)]
enum BiasArg {
    Multiplicative,
    Additive,
}

impl From<BiasArg> for BiasModel {
    fn from(arg: BiasArg) -> BiasModel {
        match arg {
            BiasArg::Multiplicative => BiasModel::Multiplicative,
            BiasArg::Additive => BiasModel::Additive,
        }
    }
}

fn main() -> ExitCode {
    if let Err(message) = configure_threads() {
        eprintln!("error: {message}");
        return ExitCode::from(2);
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve { alg, instance, out } => cmd_solve(alg, &instance, out.as_deref()),
        Command::Audit { props, instance, assignment, lottery } => {
            cmd_audit(&props, &instance, &assignment, lottery.as_deref())
        }
        Command::Lefcheck { instance, assignment } => cmd_lefcheck(&instance, &assignment),
        Command::Decompose { assignment, out } => cmd_decompose(&assignment, out.as_deref()),
        Command::Experiment {
            schools,
            beta,
            bias_model,
            students,
            disadvantaged,
            q,
            trials,
            seed,
            out,
            svg,
        } => cmd_experiment(
            schools,
            beta,
            bias_model.into(),
            students,
            disadvantaged,
            q,
            trials,
            seed,
            &out,
            svg.as_deref(),
        ),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

/// `FAIR_ASSIGN_THREADS` caps trial parallelism; 0 or unset means automatic.
fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("FAIR_ASSIGN_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .parse()
        .map_err(|_| format!("FAIR_ASSIGN_THREADS must be a non-negative integer, got {raw:?}"))?;
    if threads == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| format!("could not configure thread pool: {e}"))
}

fn emit(out: Option<&Path>, text: &str, write: impl FnOnce(&Path) -> Result<(), String>) -> Result<(), String> {
    match out {
        Some(path) => write(path),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn cmd_solve(alg: Algorithm, instance: &Path, out: Option<&Path>) -> Result<u8, String> {
    let (inst, prio) = load_instance::<Rational>(instance).map_err(|e| e.to_string())?;
    match alg {
        Algorithm::Ps | Algorithm::Ce | Algorithm::Ute => {
            let p = match alg {
                Algorithm::Ps => probabilistic_serial_full(&inst),
                Algorithm::Ce => cycle_elimination(&inst, &prio),
                _ => unit_time_eating(&inst, &prio),
            }
            .map_err(|e| e.to_string())?;
            emit(out, &assignment_to_json(&p, &inst), |path| {
                save_assignment(path, &p, &inst).map_err(|e| e.to_string())
            })?;
        }
        Algorithm::Rsd => {
            let lottery = rsd(&inst, &prio).map_err(|e| e.to_string())?;
            emit(out, &lottery_to_json(&lottery, &inst), |path| {
                save_lottery(path, &lottery, &inst).map_err(|e| e.to_string())
            })?;
        }
    }
    Ok(0)
}

fn load_audit_inputs(
    instance: &Path,
    assignment: &Path,
    lottery: Option<&Path>,
) -> Result<(Instance, RandomPriority, RandomAssignment, Option<Lottery>), String> {
    let (inst, prio) = load_instance::<Rational>(instance).map_err(|e| e.to_string())?;
    let p = load_assignment::<Rational>(assignment, &inst).map_err(|e| e.to_string())?;
    let lottery = match lottery {
        Some(path) => {
            let l = load_lottery::<Rational>(path, &inst).map_err(|e| e.to_string())?;
            if assignment_from_lottery(&l) != p {
                return Err("lottery does not induce the assignment matrix".into());
            }
            Some(l)
        }
        None => None,
    };
    Ok((inst, prio, p, lottery))
}

fn cmd_audit(
    props: &[PropArg],
    instance: &Path,
    assignment: &Path,
    lottery: Option<&Path>,
) -> Result<u8, String> {
    if props.iter().any(|p| matches!(p, PropArg::Lef)) && lottery.is_none() {
        return Err("property lef needs --lottery".into());
    }
    let (inst, prio, p, lottery) = load_audit_inputs(instance, assignment, lottery)?;
    let mut all_pass = true;
    for prop in props {
        let report: AuditReport = match (prop, &lottery) {
            (PropArg::Sef, _) => check_sef(&p, &prio, &inst),
            (PropArg::Oe, _) => check_oe(&p, &inst),
            (PropArg::Prop, _) => check_prop(&p, &prio, &inst),
            (PropArg::OneLef, Some(l)) => check_1lef_lottery(l, &prio, &inst),
            (PropArg::OneLef, None) => check_1lef_matrix(&p, &prio, &inst),
            (PropArg::Lef, Some(l)) => check_lef_lottery(l, &prio, &inst),
            (PropArg::Lef, None) => unreachable!("lef requires a lottery"),
        }
        .map_err(|e| e.to_string())?;
        all_pass &= report.passed();
        println!("{}", report.to_json());
    }
    Ok(if all_pass { 0 } else { 1 })
}

fn cmd_lefcheck(instance: &Path, assignment: &Path) -> Result<u8, String> {
    let (inst, prio) = load_instance::<Rational>(instance).map_err(|e| e.to_string())?;
    let p = load_assignment::<Rational>(assignment, &inst).map_err(|e| e.to_string())?;
    match lef_feasible(&p, &prio, &inst) {
        Ok(LefOutcome::Feasible(lottery)) => {
            println!("feasible");
            println!("{}", lottery_to_json(&lottery, &inst));
            Ok(0)
        }
        Ok(LefOutcome::Infeasible(cert)) => {
            println!("infeasible");
            print!("{cert}");
            Ok(1)
        }
        Err(e) => Err(e.to_string()),
    }
}

fn cmd_decompose(assignment: &Path, out: Option<&Path>) -> Result<u8, String> {
    let text = std::fs::read_to_string(assignment)
        .map_err(|e| format!("{}: {e}", assignment.display()))?;
    let (agents, items) = matrix_names(&text).map_err(|e| e.to_string())?;
    let prefs = vec![(0..items.len()).collect::<Vec<_>>(); agents.len()];
    let inst = Instance::new(agents, items, prefs).map_err(|e| e.to_string())?;
    let p = fair_assign::io::parse_assignment::<Rational>(&text, &inst)
        .map_err(|e| e.to_string())?;
    let lottery = bvn_decompose(&p).map_err(|e| e.to_string())?;
    emit(out, &lottery_to_json(&lottery, &inst), |path| {
        save_lottery(path, &lottery, &inst).map_err(|e| e.to_string())
    })?;
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_experiment(
    schools: usize,
    beta: f64,
    bias_model: BiasModel,
    students: usize,
    disadvantaged: usize,
    q: usize,
    trials: usize,
    seed: u64,
    out: &Path,
    svg: Option<&Path>,
) -> Result<u8, String> {
    let config =
        AdmissionConfig::standard(schools, beta, bias_model, students, disadvantaged, q, trials, seed)
            .map_err(|e| e.to_string())?;
    let rows = fair_assign::admission::run_experiment(&config).map_err(|e| e.to_string())?;
    std::fs::write(out, csv_from_rows(&rows, &config))
        .map_err(|e| format!("{}: {e}", out.display()))?;
    if let Some(path) = svg {
        std::fs::write(path, experiment_svg(&rows))
            .map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(0)
}
