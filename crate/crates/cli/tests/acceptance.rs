//! End-to-end acceptance checks, one test per criterion. Tests share a lock
//! so timing-sensitive checks never compete for the CPU; each prints a
//! `criterion N: pass` line on success.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::{Mutex, MutexGuard};
use std::time::{Duration, Instant};

use fair_assign::admission::{run_experiment, AdmissionConfig, BiasModel, Mechanism};
use fair_assign::audit::{
    check_1lef_lottery, check_1lef_matrix, check_lef_lottery, check_oe, check_oe_bruteforce,
    check_prop, check_sef, Witness,
};
use fair_assign::eating::{cycle_elimination, unit_time_eating};
use fair_assign::io::load_instance;
use fair_assign::lefsolve::{lef_feasible, LefOutcome};
use fair_assign::lottery::{bvn_component_bound, bvn_decompose, rsd};
use fair_assign::model::{
    assignment_from_lottery, Instance, Lottery, RandomAssignment, RandomPriority,
    SimpleAssignment, SimplePriority,
};
use fair_assign::{ratio, Rational};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

static GATE: Mutex<()> = Mutex::new(());

fn gate() -> MutexGuard<'static, ()> {
    match GATE.lock() {
        Ok(guard) => guard,
        Err(poisoned) => poisoned.into_inner(),
    }
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn load_fixture(name: &str) -> (Instance, RandomPriority) {
    load_instance::<Rational>(&fixture(name)).expect("fixture loads")
}

fn random_setup(rng: &mut ChaCha8Rng, max_n: usize) -> (Instance, RandomPriority) {
    let n = rng.random_range(2..=max_n);
    let m = rng.random_range(n..=n + 2);
    let agents: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
    let items: Vec<String> = (0..m).map(|j| format!("i{j}")).collect();
    let prefs: Vec<Vec<usize>> = (0..n)
        .map(|_| {
            let mut p: Vec<usize> = (0..m).collect();
            p.shuffle(rng);
            p
        })
        .collect();
    let inst = Instance::new(agents, items, prefs).unwrap();
    let orders = rng.random_range(1..=4);
    let weights: Vec<i64> = (0..orders).map(|_| rng.random_range(1..=4)).collect();
    let total: i64 = weights.iter().sum();
    let entries = weights
        .into_iter()
        .map(|w| {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            (SimplePriority::new(order).unwrap(), ratio(w, total))
        })
        .collect();
    (inst, RandomPriority::new(entries).unwrap())
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, m: usize) -> RandomAssignment {
    let parts = rng.random_range(1..=4);
    let weights: Vec<i64> = (0..parts).map(|_| rng.random_range(1..=4)).collect();
    let total: i64 = weights.iter().sum();
    let entries: Vec<(SimpleAssignment, Rational)> = weights
        .into_iter()
        .map(|w| {
            let mut perm: Vec<usize> = (0..m).collect();
            perm.shuffle(rng);
            perm.truncate(n);
            (SimpleAssignment::new(perm, m).unwrap(), ratio(w, total))
        })
        .collect();
    assignment_from_lottery(&Lottery::new(entries).unwrap())
}

#[test]
fn criterion_01_property_matrix_on_random_instances() {
    let _gate = gate();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..200 {
        let (inst, prio) = random_setup(&mut rng, 6);

        let ce = cycle_elimination(&inst, &prio).unwrap();
        assert!(check_oe(&ce, &inst).unwrap().passed());
        assert!(check_sef(&ce, &prio, &inst).unwrap().passed());
        assert!(check_1lef_matrix(&ce, &prio, &inst).unwrap().passed());

        let ute = unit_time_eating(&inst, &prio).unwrap();
        assert!(check_oe(&ute, &inst).unwrap().passed());
        assert!(check_sef(&ute, &prio, &inst).unwrap().passed());
        assert!(check_prop(&ute, &prio, &inst).unwrap().passed());

        let lottery = rsd(&inst, &prio).unwrap();
        assert!(check_lef_lottery(&lottery, &prio, &inst).unwrap().passed());
        assert!(check_1lef_lottery(&lottery, &prio, &inst).unwrap().passed());
        let induced = assignment_from_lottery(&lottery);
        assert!(check_prop(&induced, &prio, &inst).unwrap().passed());
    }
    assert!(start.elapsed() < Duration::from_secs(60), "took {:?}", start.elapsed());
    println!(
        "criterion 1: pass — CE (oe, sef, 1lef), UTE (oe, sef, prop), RSD (lef, 1lef, prop) \
         on 200/200 random instances in {:?}",
        start.elapsed()
    );
}

#[test]
fn criterion_02_four_agent_fixture_oe_but_no_lef() {
    let _gate = gate();
    let start = Instant::now();
    let (inst, prio) = load_fixture("crossed_pairs.json");
    for p in [cycle_elimination(&inst, &prio).unwrap(), unit_time_eating(&inst, &prio).unwrap()] {
        assert!(check_oe(&p, &inst).unwrap().passed());
        assert!(matches!(
            lef_feasible(&p, &prio, &inst).unwrap(),
            LefOutcome::Infeasible(_)
        ));
    }
    assert!(start.elapsed() < Duration::from_secs(5), "took {:?}", start.elapsed());
    println!(
        "criterion 2: pass — crossed_pairs CE and UTE satisfy OE yet admit no inducing LEF lottery \
         ({:?})",
        start.elapsed()
    );
}

#[test]
fn criterion_03_five_agent_fixture_sef_but_no_lef() {
    let _gate = gate();
    let start = Instant::now();
    let (inst, prio) = load_fixture("five_agent.json");
    for p in [cycle_elimination(&inst, &prio).unwrap(), unit_time_eating(&inst, &prio).unwrap()] {
        assert!(check_sef(&p, &prio, &inst).unwrap().passed());
        assert!(matches!(
            lef_feasible(&p, &prio, &inst).unwrap(),
            LefOutcome::Infeasible(_)
        ));
    }
    assert!(start.elapsed() < Duration::from_secs(10), "took {:?}", start.elapsed());
    println!(
        "criterion 3: pass — five_agent CE and UTE satisfy SEF yet admit no inducing LEF lottery \
         ({:?})",
        start.elapsed()
    );
}

#[test]
fn criterion_04_prop_and_1lef_separate_the_algorithms() {
    let _gate = gate();
    let (inst, prio) = load_fixture("crossed_pairs.json");
    let ce = cycle_elimination(&inst, &prio).unwrap();
    assert!(!check_prop(&ce, &prio, &inst).unwrap().passed());
    assert!(check_1lef_matrix(&ce, &prio, &inst).unwrap().passed());

    let ute = unit_time_eating(&inst, &prio).unwrap();
    assert!(check_prop(&ute, &prio, &inst).unwrap().passed());
    assert!(!check_1lef_matrix(&ute, &prio, &inst).unwrap().passed());
    println!("criterion 4: pass — CE fails PROP and UTE fails 1-LEF on the shared fixture");
}

#[test]
fn criterion_05_rsd_fails_ordinal_efficiency_with_item_cycle() {
    let _gate = gate();
    let (inst, prio) = load_fixture("rsd_oe.json");
    let induced = assignment_from_lottery(&rsd(&inst, &prio).unwrap());
    let report = check_oe(&induced, &inst).unwrap();
    assert!(!report.passed());
    let cycle = report
        .witnesses
        .iter()
        .find_map(|w| match w {
            Witness::ItemCycle { items, .. } => Some(items.clone()),
            _ => None,
        })
        .expect("cycle witness");
    assert_eq!(cycle.len(), 2);
    assert!(cycle.contains(&"a".to_string()));
    assert!(cycle.contains(&"b".to_string()));
    println!("criterion 5: pass — uniform RSD admits the a/b trading cycle");
}

#[test]
fn criterion_06_structural_check_agrees_with_exhaustive_solver() {
    let _gate = gate();
    let mut rng = ChaCha8Rng::seed_from_u64(601);
    for _ in 0..500 {
        let n = rng.random_range(2..=4);
        let m = rng.random_range(n..=4);
        let agents: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
        let items: Vec<String> = (0..m).map(|j| format!("i{j}")).collect();
        let prefs: Vec<Vec<usize>> = (0..n)
            .map(|_| {
                let mut p: Vec<usize> = (0..m).collect();
                p.shuffle(&mut rng);
                p
            })
            .collect();
        let inst = Instance::new(agents, items, prefs).unwrap();
        let p = random_matrix(&mut rng, inst.n(), inst.m());
        let fast = check_oe(&p, &inst).unwrap().passed();
        let exact = check_oe_bruteforce(&p, &inst).unwrap().passed();
        assert_eq!(fast, exact, "disagreement on n={} m={}", inst.n(), inst.m());
    }
    println!("criterion 6: pass — graph audit equals the exhaustive check on 500/500 matrices");
}

#[test]
fn criterion_07_decomposition_round_trips_exactly() {
    let _gate = gate();
    let mut rng = ChaCha8Rng::seed_from_u64(701);
    for _ in 0..200 {
        let n = rng.random_range(1..=8);
        let m = rng.random_range(n..=8);
        let p = random_matrix(&mut rng, n, m);
        let lottery = bvn_decompose(&p).unwrap();
        assert_eq!(assignment_from_lottery(&lottery), p);
        assert!(lottery.entries().len() <= bvn_component_bound(p.m()));
    }
    println!("criterion 7: pass — 200/200 exact decomposition round trips within the bound");
}

#[test]
fn criterion_08_experiment_reproduces_the_sign_structure() {
    let _gate = gate();
    let start = Instant::now();
    for bias_model in [BiasModel::Multiplicative, BiasModel::Additive] {
        for schools in [1usize, 2, 3] {
            for beta in [0.2, 0.5, 0.8] {
                let config =
                    AdmissionConfig::standard(schools, beta, bias_model, 35, 10, 200, 20, 42)
                        .unwrap();
                let rows = run_experiment(&config).unwrap();
                let mean = |mechanism: Mechanism| {
                    rows.iter()
                        .find(|r| r.algorithm == mechanism)
                        .expect("mechanism row")
                        .mean_envy_pairs
                };
                let cell = format!("l={schools} beta={beta} {bias_model}");
                assert_eq!(mean(Mechanism::CycleElimination), 0.0, "{cell}");
                assert_eq!(mean(Mechanism::UnitTimeEating), 0.0, "{cell}");
                if schools >= 2 {
                    assert!(mean(Mechanism::Naive) > 0.0, "{cell}");
                    assert!(mean(Mechanism::RandomNaive) > 0.0, "{cell}");
                }
                if schools == 1 && bias_model == BiasModel::Multiplicative {
                    assert_eq!(mean(Mechanism::RandomNaive), 0.0, "{cell}");
                    assert!(mean(Mechanism::RandomRooney) > 0.0, "{cell}");
                }
            }
        }
    }
    assert!(start.elapsed() < Duration::from_secs(600), "took {:?}", start.elapsed());
    println!(
        "criterion 8: pass — desk-scale experiment grid has the expected zero/positive envy \
         structure in {:?}",
        start.elapsed()
    );
}

#[test]
fn criterion_09_eating_algorithms_scale_to_three_hundred_agents() {
    let _gate = gate();
    let mut rng = ChaCha8Rng::seed_from_u64(901);
    let n = 300;
    let agents: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
    let items: Vec<String> = (0..n).map(|j| format!("x{j}")).collect();
    let prefs: Vec<Vec<usize>> = (0..n)
        .map(|_| {
            let mut p: Vec<usize> = (0..n).collect();
            p.shuffle(&mut rng);
            p
        })
        .collect();
    let inst = Instance::new(agents, items, prefs).unwrap();
    let weight = ratio(1, 50);
    let entries: Vec<(SimplePriority, Rational)> = (0..50)
        .map(|_| {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            (SimplePriority::new(order).unwrap(), weight.clone())
        })
        .collect();
    let prio = RandomPriority::new(entries).unwrap();

    let start = Instant::now();
    let ce = cycle_elimination(&inst, &prio).unwrap();
    let ce_time = start.elapsed();
    assert!(ce_time < Duration::from_secs(5), "cycle elimination took {ce_time:?}");

    let start = Instant::now();
    let ute = unit_time_eating(&inst, &prio).unwrap();
    let ute_time = start.elapsed();
    assert!(ute_time < Duration::from_secs(5), "unit-time eating took {ute_time:?}");

    assert_eq!(ce.n(), n);
    assert_eq!(ute.n(), n);
    println!(
        "criterion 9: pass — n=m=300, 50 orders: cycle elimination {ce_time:?}, \
         unit-time eating {ute_time:?}"
    );
}

fn run_cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fair-assign"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn criterion_10_cli_reruns_are_byte_identical() {
    let _gate = gate();
    let dir = tempfile::tempdir().unwrap();
    let crossed_pairs = fixture("crossed_pairs.json");
    let crossed_pairs = crossed_pairs.to_str().unwrap();
    let out_a = dir.path().join("solve_a.json");
    let out_b = dir.path().join("solve_b.json");
    for alg in ["ps", "ce", "ute", "rsd"] {
        for out in [&out_a, &out_b] {
            let output = run_cli(&[
                "solve",
                "--alg",
                alg,
                "--instance",
                crossed_pairs,
                "--out",
                out.to_str().unwrap(),
            ]);
            assert_eq!(output.status.code(), Some(0));
        }
        assert_eq!(
            std::fs::read(&out_a).unwrap(),
            std::fs::read(&out_b).unwrap(),
            "solve --alg {alg} varies between runs"
        );
    }

    let ce_out = dir.path().join("ce.json");
    run_cli(&["solve", "--alg", "ce", "--instance", crossed_pairs, "--out", ce_out.to_str().unwrap()]);
    let ce_out = ce_out.to_str().unwrap();

    let audit_args =
        ["audit", "--props", "sef,oe,prop,1lef", "--instance", crossed_pairs, "--assignment", ce_out];
    let first = run_cli(&audit_args);
    let second = run_cli(&audit_args);
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(first.status.code(), Some(1));
    assert_eq!(second.status.code(), Some(1));

    let lef_args = ["lefcheck", "--instance", crossed_pairs, "--assignment", ce_out];
    let first = run_cli(&lef_args);
    let second = run_cli(&lef_args);
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(first.status.code(), Some(1));

    let decompose_args = ["decompose", "--assignment", ce_out];
    let first = run_cli(&decompose_args);
    let second = run_cli(&decompose_args);
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(first.status.code(), Some(0));

    let csv_a = dir.path().join("exp_a.csv");
    let csv_b = dir.path().join("exp_b.csv");
    let svg_a = dir.path().join("exp_a.svg");
    let svg_b = dir.path().join("exp_b.svg");
    for (csv, svg) in [(&csv_a, &svg_a), (&csv_b, &svg_b)] {
        let output = run_cli(&[
            "experiment",
            "--schools",
            "2",
            "--beta",
            "0.5",
            "--bias-model",
            "multiplicative",
            "--students",
            "12",
            "--disadvantaged",
            "4",
            "--q",
            "40",
            "--trials",
            "5",
            "--seed",
            "42",
            "--out",
            csv.to_str().unwrap(),
            "--svg",
            svg.to_str().unwrap(),
        ]);
        assert_eq!(output.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&csv_a).unwrap(), std::fs::read(&csv_b).unwrap());
    assert_eq!(std::fs::read(&svg_a).unwrap(), std::fs::read(&svg_b).unwrap());

    println!("criterion 10: pass — solve, audit, lefcheck, decompose, experiment rerun byte-identically");
}
