//! School-admission simulation: biased score generation, posterior
//! debiasing, stable-matching baselines, and a Monte-Carlo harness that
//! counts stochastic envy pairs per mechanism.
//!
//! Floating point is confined to score generation and posterior sampling;
//! everything downstream of the sampled priority is exact rational with
//! weights `1/q`. Trial `k` of an experiment uses the RNG stream seeded
//! with `seed ^ k`.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use rayon::prelude::*;

use crate::audit::{count_envy_pairs, AuditError};
use crate::eating::{cycle_elimination, unit_time_eating, EatingError};
use crate::lottery::LotteryError;
use crate::model::{
    assignment_from_lottery, uniform_weight, Instance, Lottery, ModelError, RandomAssignment,
    RandomPriority, SimpleAssignment, SimplePriority,
};
use crate::Rational;

const GRID_POINTS: usize = 10_000;
const TAIL_MASS: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum AdmissionError {
    #[error("disadvantaged count {n_dis} exceeds student count {students}")]
    TooManyDisadvantaged { n_dis: usize, students: usize },
    #[error("capacities sum to {total}, more than {students} students")]
    CapacityOverflow { total: usize, students: usize },
    #[error("capacity list has {found} entries for {expected} schools")]
    CapacityCountMismatch { expected: usize, found: usize },
    #[error("bias scale must be positive, got {0}")]
    NonPositiveBeta(f64),
    #[error("need at least one student")]
    NoStudents,
    #[error("need at least one school")]
    NoSchools,
    #[error("need at least one priority sample")]
    NoSamples,
    #[error("need at least one trial")]
    NoTrials,
    #[error("school preference list is not a permutation of the schools")]
    BadSchoolPreference,
    #[error("distribution parameters are invalid: {0}")]
    BadDistribution(String),
    #[error("posterior density is zero everywhere on the grid")]
    ZeroPosterior,
    #[error("priority sample batch is empty or ragged")]
    BadSampleBatch,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eating(#[from] EatingError),
    #[error(transparent)]
    Lottery(#[from] LotteryError),
    #[error(transparent)]
    Audit(#[from] AuditError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiasModel {
    Multiplicative,
    Additive,
}

impl fmt::Display for BiasModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BiasModel::Multiplicative => write!(f, "multiplicative"),
            BiasModel::Additive => write!(f, "additive"),
        }
    }
}

/// Score and bias distributions supported by the generative model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dist {
    Exponential { rate: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl Dist {
    pub fn density(&self, x: f64) -> f64 {
        match *self {
            Dist::Exponential { rate } => {
                if x >= 0.0 && x.is_finite() {
                    rate * (-rate * x).exp()
                } else {
                    0.0
                }
            }
            Dist::Uniform { lo, hi } => {
                if x >= lo && x <= hi && hi > lo {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Result<f64, AdmissionError> {
        match *self {
            Dist::Exponential { rate } => {
                let exp = rand_distr::Exp::new(rate)
                    .map_err(|e| AdmissionError::BadDistribution(e.to_string()))?;
                Ok(exp.sample(rng))
            }
            Dist::Uniform { lo, hi } => {
                if hi < lo {
                    return Err(AdmissionError::BadDistribution(format!(
                        "uniform bounds out of order: {lo} > {hi}"
                    )));
                }
                if hi == lo {
                    return Ok(lo);
                }
                Ok(rng.random_range(lo..hi))
            }
        }
    }

    /// Support interval for grid tabulation, truncated where the tail mass
    /// drops below `TAIL_MASS`.
    fn grid_bounds(&self) -> (f64, f64) {
        match *self {
            Dist::Exponential { rate } => (0.0, -TAIL_MASS.ln() / rate),
            Dist::Uniform { lo, hi } => (lo, hi),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdmissionConfig {
    pub students: usize,
    pub disadvantaged: usize,
    pub schools: usize,
    pub capacities: Vec<usize>,
    pub bias_model: BiasModel,
    pub beta: f64,
    pub capability: Dist,
    pub bias: Dist,
    pub q: usize,
    pub trials: usize,
    pub seed: u64,
}

impl AdmissionConfig {
    /// The benchmark setup: every school holds `⌊students/(schools+1)⌋`
    /// seats, the remainder forms a least-preferred dummy school, and the
    /// distributions follow the bias model (multiplicative: capability
    /// Exp(1), bias Exp(β); additive: capability U(0,2), bias U(0,β)).
    #[allow(clippy::too_many_arguments)]
    pub fn standard(
        schools: usize,
        beta: f64,
        bias_model: BiasModel,
        students: usize,
        disadvantaged: usize,
        q: usize,
        trials: usize,
        seed: u64,
    ) -> Result<AdmissionConfig, AdmissionError> {
        let per_school = if schools == 0 { 0 } else { students / (schools + 1) };
        let (capability, bias) = match bias_model {
            BiasModel::Multiplicative => {
                (Dist::Exponential { rate: 1.0 }, Dist::Exponential { rate: beta })
            }
            BiasModel::Additive => {
                (Dist::Uniform { lo: 0.0, hi: 2.0 }, Dist::Uniform { lo: 0.0, hi: beta })
            }
        };
        let config = AdmissionConfig {
            students,
            disadvantaged,
            schools,
            capacities: vec![per_school; schools],
            bias_model,
            beta,
            capability,
            bias,
            q,
            trials,
            seed,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), AdmissionError> {
        if self.students == 0 {
            return Err(AdmissionError::NoStudents);
        }
        if self.schools == 0 {
            return Err(AdmissionError::NoSchools);
        }
        if self.disadvantaged > self.students {
            return Err(AdmissionError::TooManyDisadvantaged {
                n_dis: self.disadvantaged,
                students: self.students,
            });
        }
        if self.capacities.len() != self.schools {
            return Err(AdmissionError::CapacityCountMismatch {
                expected: self.schools,
                found: self.capacities.len(),
            });
        }
        let total: usize = self.capacities.iter().sum();
        if total > self.students {
            return Err(AdmissionError::CapacityOverflow { total, students: self.students });
        }
        if self.beta <= 0.0 || self.beta.is_nan() {
            return Err(AdmissionError::NonPositiveBeta(self.beta));
        }
        if self.q == 0 {
            return Err(AdmissionError::NoSamples);
        }
        if self.trials == 0 {
            return Err(AdmissionError::NoTrials);
        }
        Ok(())
    }

    /// Seats in the dummy school; the seat total always equals the student
    /// count.
    pub fn dummy_capacity(&self) -> usize {
        self.students - self.capacities.iter().sum::<usize>()
    }

    /// Students `0..disadvantaged` carry bias; the rest are perceived
    /// exactly.
    pub fn is_disadvantaged(&self, student: usize) -> bool {
        student < self.disadvantaged
    }
}

/// One draw of the generative model: true capabilities, bias parameters for
/// the disadvantaged students, and the perceived scores they produce.
#[derive(Debug, Clone)]
pub struct ScoreSet {
    pub true_scores: Vec<f64>,
    pub biases: Vec<f64>,
    pub perceived: Vec<f64>,
}

pub fn sample_scores<R: Rng>(
    config: &AdmissionConfig,
    rng: &mut R,
) -> Result<ScoreSet, AdmissionError> {
    let mut true_scores = Vec::with_capacity(config.students);
    for _ in 0..config.students {
        true_scores.push(config.capability.sample(rng)?);
    }
    let mut biases = Vec::with_capacity(config.disadvantaged);
    for _ in 0..config.disadvantaged {
        biases.push(config.bias.sample(rng)?);
    }
    let perceived = true_scores
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            if config.is_disadvantaged(i) {
                match config.bias_model {
                    BiasModel::Multiplicative => biases[i] * x,
                    BiasModel::Additive => x + biases[i],
                }
            } else {
                x
            }
        })
        .collect();
    Ok(ScoreSet { true_scores, biases, perceived })
}

/// Tabulated posterior over a disadvantaged student's bias parameter given
/// their perceived score, sampled by inverse CDF with linear interpolation.
#[derive(Debug, Clone)]
pub struct PosteriorSampler {
    grid: Vec<f64>,
    density: Vec<f64>,
    cdf: Vec<f64>,
}

pub fn posterior_sampler(
    perceived: f64,
    config: &AdmissionConfig,
) -> Result<PosteriorSampler, AdmissionError> {
    let (lo, hi) = config.bias.grid_bounds();
    if hi <= lo {
        return Ok(PosteriorSampler { grid: vec![lo], density: vec![1.0], cdf: vec![1.0] });
    }
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..GRID_POINTS).map(|k| lo + step * k as f64).collect();
    let density: Vec<f64> = grid
        .iter()
        .map(|&b| {
            let debiased = match config.bias_model {
                BiasModel::Multiplicative => perceived / b,
                BiasModel::Additive => perceived - b,
            };
            config.bias.density(b) * config.capability.density(debiased)
        })
        .collect();
    let mut cdf = vec![0.0; GRID_POINTS];
    for k in 1..GRID_POINTS {
        cdf[k] = cdf[k - 1] + (density[k - 1] + density[k]) * 0.5 * step;
    }
    let total = cdf[GRID_POINTS - 1];
    if total <= 0.0 || !total.is_finite() {
        return Err(AdmissionError::ZeroPosterior);
    }
    for value in &mut cdf {
        *value /= total;
    }
    Ok(PosteriorSampler { grid, density, cdf })
}

impl PosteriorSampler {
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.grid.len() == 1 {
            return self.grid[0];
        }
        let u: f64 = rng.random();
        let idx = self.cdf.partition_point(|&c| c < u).min(self.grid.len() - 1).max(1);
        let (c0, c1) = (self.cdf[idx - 1], self.cdf[idx]);
        let (b0, b1) = (self.grid[idx - 1], self.grid[idx]);
        if c1 > c0 {
            b0 + (u - c0) / (c1 - c0) * (b1 - b0)
        } else {
            b0
        }
    }

    /// Grid point with the highest tabulated density.
    pub fn mode(&self) -> f64 {
        let mut best = 0;
        for k in 1..self.density.len() {
            if self.density[k] > self.density[best] {
                best = k;
            }
        }
        self.grid[best]
    }

    /// Tabulated cumulative probability at the last grid point below `b`.
    pub fn cdf_at(&self, b: f64) -> f64 {
        let idx = self.grid.partition_point(|&g| g < b);
        if idx == 0 {
            0.0
        } else {
            self.cdf[(idx - 1).min(self.cdf.len() - 1)]
        }
    }
}

/// Seat-level preferences from per-student school rankings: every seat of a
/// preferred school precedes any seat of a less-preferred one, lower seat
/// index first within a school, dummy seats last.
pub fn induce_seat_preferences(
    school_prefs: &[Vec<usize>],
    capacities: &[usize],
    dummy_capacity: usize,
) -> Result<Vec<Vec<usize>>, AdmissionError> {
    let schools = capacities.len();
    let mut offsets = vec![0usize; schools];
    let mut acc = 0;
    for (k, &c) in capacities.iter().enumerate() {
        offsets[k] = acc;
        acc += c;
    }
    let seats = acc + dummy_capacity;
    let mut result = Vec::with_capacity(school_prefs.len());
    for ranking in school_prefs {
        let mut seen = vec![false; schools];
        if ranking.len() != schools {
            return Err(AdmissionError::BadSchoolPreference);
        }
        let mut order = Vec::with_capacity(seats);
        for &school in ranking {
            if school >= schools || seen[school] {
                return Err(AdmissionError::BadSchoolPreference);
            }
            seen[school] = true;
            for seat in 0..capacities[school] {
                order.push(offsets[school] + seat);
            }
        }
        for seat in 0..dummy_capacity {
            order.push(acc + seat);
        }
        result.push(order);
    }
    Ok(result)
}

/// The admission market as an assignment instance: students against seats,
/// named `s{school}_{seat}` with dummy seats `dummy_{seat}`.
pub fn admission_instance(
    school_prefs: &[Vec<usize>],
    config: &AdmissionConfig,
) -> Result<Instance, AdmissionError> {
    let prefs = induce_seat_preferences(school_prefs, &config.capacities, config.dummy_capacity())?;
    let agents = (1..=config.students).map(|i| i.to_string()).collect();
    let mut items = Vec::with_capacity(config.students);
    for (school, &c) in config.capacities.iter().enumerate() {
        for seat in 0..c {
            items.push(format!("s{}_{}", school + 1, seat + 1));
        }
    }
    for seat in 0..config.dummy_capacity() {
        items.push(format!("dummy_{}", seat + 1));
    }
    Ok(Instance::new(agents, items, prefs)?)
}

fn ranking_by_score(scores: &[f64]) -> SimplePriority {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    SimplePriority::new(order).expect("sorted indices form a permutation")
}

/// Ranking by descending perceived score, ties broken by student index.
pub fn perceived_priority(scores: &ScoreSet) -> SimplePriority {
    ranking_by_score(&scores.perceived)
}

/// Ranking by descending true score, ties broken by student index.
pub fn true_priority(scores: &ScoreSet) -> SimplePriority {
    ranking_by_score(&scores.true_scores)
}

/// Merges per-draw debiased score vectors into a random priority with
/// uniform weights, ranking each draw by descending score.
pub fn priority_from_samples(samples: &[Vec<f64>]) -> Result<RandomPriority, AdmissionError> {
    if samples.is_empty() || samples.iter().any(|row| row.len() != samples[0].len()) {
        return Err(AdmissionError::BadSampleBatch);
    }
    let weight: Rational = uniform_weight(samples.len());
    let entries = samples
        .iter()
        .map(|scores| (ranking_by_score(scores), weight.clone()))
        .collect();
    Ok(RandomPriority::new(entries)?)
}

/// Draws `q` bias vectors from the per-student posteriors, debiases the
/// perceived scores, and returns the resulting `1/q`-weighted priority.
pub fn sample_random_priority<R: Rng>(
    scores: &ScoreSet,
    config: &AdmissionConfig,
    rng: &mut R,
) -> Result<RandomPriority, AdmissionError> {
    let samplers: Vec<PosteriorSampler> = scores.perceived[..config.disadvantaged]
        .iter()
        .map(|&x| posterior_sampler(x, config))
        .collect::<Result<_, _>>()?;
    let mut samples = Vec::with_capacity(config.q);
    for _ in 0..config.q {
        let debiased: Vec<f64> = scores
            .perceived
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                if config.is_disadvantaged(i) {
                    let b = samplers[i].sample(rng);
                    match config.bias_model {
                        BiasModel::Multiplicative => x / b,
                        BiasModel::Additive => x - b,
                    }
                } else {
                    x
                }
            })
            .collect();
        samples.push(debiased);
    }
    priority_from_samples(&samples)
}

/// Rewrites a priority so every prefix of length `t` holds at least
/// `⌊t·n_dis/N⌋` disadvantaged students, otherwise preserving the input
/// order within each group.
pub fn rooney_reorder(prio: &SimplePriority, disadvantaged: &[bool]) -> SimplePriority {
    let n = disadvantaged.len();
    let n_dis = disadvantaged.iter().filter(|&&d| d).count();
    let ranks = prio.ranks();
    let dis: Vec<usize> = prio.order().iter().copied().filter(|&s| disadvantaged[s]).collect();
    let adv: Vec<usize> = prio.order().iter().copied().filter(|&s| !disadvantaged[s]).collect();
    let mut order = Vec::with_capacity(n);
    let (mut i, mut j) = (0, 0);
    while i < dis.len() && j < adv.len() {
        let quota = n_dis * (i + j + 1) / n;
        if i < quota || ranks[dis[i]] < ranks[adv[j]] {
            order.push(dis[i]);
            i += 1;
        } else {
            order.push(adv[j]);
            j += 1;
        }
    }
    order.extend_from_slice(&dis[i..]);
    order.extend_from_slice(&adv[j..]);
    SimplePriority::new(order).expect("merge of two disjoint subsequences is a permutation")
}

/// Student-proposing deferred acceptance where every seat ranks students by
/// the single priority; with a common priority this coincides with serial
/// dictatorship.
pub fn stable_match(
    inst: &Instance,
    prio: &SimplePriority,
) -> Result<SimpleAssignment, AdmissionError> {
    if prio.len() != inst.n() {
        return Err(
            ModelError::DimensionMismatch { expected: inst.n(), found: prio.len() }.into()
        );
    }
    let ranks = prio.ranks();
    let mut holder: Vec<Option<usize>> = vec![None; inst.m()];
    let mut next = vec![0usize; inst.n()];
    let mut free: Vec<usize> = (0..inst.n()).rev().collect();
    while let Some(student) = free.pop() {
        let seat = inst.pref_order(student)[next[student]];
        next[student] += 1;
        match holder[seat] {
            None => holder[seat] = Some(student),
            Some(current) => {
                if ranks[student] < ranks[current] {
                    holder[seat] = Some(student);
                    free.push(current);
                } else {
                    free.push(student);
                }
            }
        }
    }
    let mut items = vec![0usize; inst.n()];
    for (seat, occupant) in holder.iter().enumerate() {
        if let Some(student) = occupant {
            items[*student] = seat;
        }
    }
    let result = SimpleAssignment::new(items, inst.m())?;
    debug_assert_eq!(
        result,
        crate::lottery::serial_dictatorship(inst, prio).expect("dictatorship on same inputs"),
        "deferred acceptance under a common priority must match serial dictatorship"
    );
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mechanism {
    Naive,
    RandomNaive,
    Rooney,
    RandomRooney,
    CycleElimination,
    UnitTimeEating,
}

pub const MECHANISMS: [Mechanism; 6] = [
    Mechanism::Naive,
    Mechanism::RandomNaive,
    Mechanism::Rooney,
    Mechanism::RandomRooney,
    Mechanism::CycleElimination,
    Mechanism::UnitTimeEating,
];

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = match self {
            Mechanism::Naive => "N",
            Mechanism::RandomNaive => "RN",
            Mechanism::Rooney => "R",
            Mechanism::RandomRooney => "RR",
            Mechanism::CycleElimination => "CE",
            Mechanism::UnitTimeEating => "UTE",
        };
        write!(f, "{label}")
    }
}

/// Envy-pair counts from a single trial, indexed by [`MECHANISMS`] order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialCounts(pub [usize; 6]);

impl TrialCounts {
    pub fn count(&self, mechanism: Mechanism) -> usize {
        self.0[MECHANISMS.iter().position(|&m| m == mechanism).expect("mechanism listed")]
    }
}

fn lottery_of<F>(prio: &RandomPriority, mut run: F) -> Result<RandomAssignment, AdmissionError>
where
    F: FnMut(&SimplePriority) -> Result<SimpleAssignment, AdmissionError>,
{
    let entries = prio
        .entries()
        .iter()
        .map(|(sigma, w)| Ok((run(sigma)?, w.clone())))
        .collect::<Result<Vec<_>, AdmissionError>>()?;
    Ok(assignment_from_lottery(&Lottery::new(entries)?))
}

/// Runs one trial: draw school preferences and scores, build the sampled
/// priority, evaluate all six mechanisms, and count stochastic envy pairs
/// for each.
pub fn run_trial(config: &AdmissionConfig, seed: u64) -> Result<TrialCounts, AdmissionError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let school_prefs: Vec<Vec<usize>> = (0..config.students)
        .map(|_| {
            let mut prefs: Vec<usize> = (0..config.schools).collect();
            prefs.shuffle(&mut rng);
            prefs
        })
        .collect();
    let inst = admission_instance(&school_prefs, config)?;
    let scores = sample_scores(config, &mut rng)?;
    let sigma_hat = perceived_priority(&scores);
    let prio = sample_random_priority(&scores, config, &mut rng)?;
    let disadvantaged: Vec<bool> =
        (0..config.students).map(|i| config.is_disadvantaged(i)).collect();

    let naive = RandomAssignment::from_simple(&stable_match(&inst, &sigma_hat)?);
    let random_naive = lottery_of(&prio, |sigma| stable_match(&inst, sigma))?;
    let rooney =
        RandomAssignment::from_simple(&stable_match(&inst, &rooney_reorder(&sigma_hat, &disadvantaged))?);
    let random_rooney =
        lottery_of(&prio, |sigma| stable_match(&inst, &rooney_reorder(sigma, &disadvantaged)))?;
    let ce = cycle_elimination(&inst, &prio)?;
    let ute = unit_time_eating(&inst, &prio)?;

    let outputs = [naive, random_naive, rooney, random_rooney, ce, ute];
    let mut counts = [0usize; 6];
    for (slot, p) in counts.iter_mut().zip(&outputs) {
        *slot = count_envy_pairs(p, &prio, &inst)?;
    }
    Ok(TrialCounts(counts))
}

/// One CSV row of the experiment output.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub ell: usize,
    pub beta: f64,
    pub bias_model: BiasModel,
    pub algorithm: Mechanism,
    pub mean_envy_pairs: f64,
}

/// Runs all trials in parallel (trial `k` seeded with `seed ^ k`) and
/// averages the envy-pair counts per mechanism.
pub fn run_experiment(config: &AdmissionConfig) -> Result<Vec<ExperimentRow>, AdmissionError> {
    config.validate()?;
    let counts: Vec<TrialCounts> = (0..config.trials as u64)
        .into_par_iter()
        .map(|k| run_trial(config, config.seed ^ k))
        .collect::<Result<_, _>>()?;
    let rows = MECHANISMS
        .iter()
        .map(|&mechanism| {
            let total: usize = counts.iter().map(|c| c.count(mechanism)).sum();
            ExperimentRow {
                ell: config.schools,
                beta: config.beta,
                bias_model: config.bias_model,
                algorithm: mechanism,
                mean_envy_pairs: total as f64 / config.trials as f64,
            }
        })
        .collect();
    Ok(rows)
}

pub fn experiment_csv(config: &AdmissionConfig) -> Result<String, AdmissionError> {
    Ok(csv_from_rows(&run_experiment(config)?, config))
}

pub fn csv_from_rows(rows: &[ExperimentRow], config: &AdmissionConfig) -> String {
    let mut out = String::from("ell,beta,bias_model,algorithm,mean_envy_pairs,trials,q,seed\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.ell,
            row.beta,
            row.bias_model,
            row.algorithm,
            row.mean_envy_pairs,
            config.trials,
            config.q,
            config.seed
        ));
    }
    out
}

/// Bar chart of mean envy pairs: one group per `(ell, beta)` pair, one bar
/// per mechanism.
pub fn experiment_svg(rows: &[ExperimentRow]) -> String {
    let mut groups: Vec<(usize, String)> = Vec::new();
    for row in rows {
        let key = format!("l={} b={}", row.ell, row.beta);
        if !groups.iter().any(|(_, k)| *k == key) {
            groups.push((groups.len(), key));
        }
    }
    let bar = 22.0;
    let gap = 30.0;
    let group_width = 6.0 * bar + gap;
    let height = 260.0;
    let plot = 200.0;
    let width = 40.0 + group_width * groups.len() as f64;
    let max = rows.iter().map(|r| r.mean_envy_pairs).fold(1.0_f64, f64::max);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         font-family=\"monospace\" font-size=\"10\">\n"
    );
    let palette = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"];
    for row in rows {
        let group = groups
            .iter()
            .find(|(_, k)| *k == format!("l={} b={}", row.ell, row.beta))
            .map(|(idx, _)| *idx)
            .unwrap_or(0);
        let slot = MECHANISMS.iter().position(|&m| m == row.algorithm).unwrap_or(0);
        let x = 40.0 + group as f64 * group_width + slot as f64 * bar;
        let h = plot * row.mean_envy_pairs / max;
        let y = 20.0 + plot - h;
        svg.push_str(&format!(
            "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{:.1}\" height=\"{h:.1}\" fill=\"{}\"/>\n",
            bar - 2.0,
            palette[slot]
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
            x + (bar - 2.0) / 2.0,
            height - 26.0,
            row.algorithm
        ));
    }
    for (idx, key) in &groups {
        let x = 40.0 + *idx as f64 * group_width + 3.0 * bar;
        svg.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{key}</text>\n",
            height - 10.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"10\" y=\"16\">max {max}</text>\n</svg>\n"
    ));
    svg
}
