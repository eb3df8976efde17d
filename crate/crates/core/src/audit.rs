//! Property audits over random assignments and lotteries.
//!
//! Every check returns an [`AuditReport`] whose witnesses are concrete
//! counterexamples: an envying pair with the violated prefix, an item cycle
//! with the trading matrix that dominates the input, or a lottery pair with
//! the probability gap. Passing reports carry no witnesses.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::model::{
    Instance, Lottery, ModelError, RandomAssignment, RandomPriority, SimpleAssignment,
};
pub use crate::model::{baseline_allocation, priority_likelihoods};
use crate::scalar::{from_count, Scalar};
use crate::simplex::{self, Constraint, LinearProgram, LpResult, Relation};

#[derive(Debug, thiserror::Error)]
pub enum AuditError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("distribution lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("brute-force efficiency oracle supports at most {limit} agents and items, got {n}x{m}")]
    TooLarge { n: usize, m: usize, limit: usize },
    #[error("internal solver error: {0}")]
    Internal(String),
}

/// Property a report speaks about. Serialized names match the CLI flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Property {
    Sef,
    Oe,
    Prop,
    #[serde(rename = "1lef")]
    OneLef,
    Lef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Name-keyed allocation matrix used inside witnesses.
pub type MatrixDoc = BTreeMap<String, BTreeMap<String, String>>;

/// Machine-checkable counterexample attached to a failing report.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// Agent `agent`'s rank distribution weakly dominates `other`'s, yet its
    /// allocation fails to dominate at the given 1-based preference prefix.
    EnvyPair { agent: String, other: String, prefix: usize },
    /// The allocation falls below the rank-distribution baseline at the
    /// given 1-based preference prefix.
    PropShortfall { agent: String, prefix: usize },
    /// `agent` always outranks `other` yet holds `held` with positive
    /// probability while `other` holds the strictly better `preferred`.
    RankedPair { agent: String, other: String, preferred: String, held: String },
    /// A pairwise lottery guarantee falls short: `agent` must beat `other`
    /// with probability at least `required` but only achieves `actual`.
    /// `example` is a support assignment where `other` does at least as well.
    LotteryPair {
        agent: String,
        other: String,
        required: String,
        actual: String,
        example: BTreeMap<String, String>,
    },
    /// Trading cycle among items: each listed item's holder strictly prefers
    /// the previous item in the cycle. `dominating` realizes the trade.
    ItemCycle { items: Vec<String>, dominating: MatrixDoc },
    /// `agent` holds `held` with positive probability although the strictly
    /// better `preferred` still has unallocated supply.
    WastedItem { agent: String, preferred: String, held: String, dominating: MatrixDoc },
    /// An assignment that stochastically dominates the audited one, found by
    /// the brute-force linear program.
    Dominating { dominating: MatrixDoc },
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub property: Property,
    pub verdict: Verdict,
    pub witnesses: Vec<Witness>,
}

impl AuditReport {
    fn from_witnesses(property: Property, witnesses: Vec<Witness>) -> Self {
        let verdict = if witnesses.is_empty() { Verdict::Pass } else { Verdict::Fail };
        AuditReport { property, verdict, witnesses }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Whether `x` weakly first-order stochastically dominates `y` with respect
/// to the preference order `order` (items from most to least preferred).
pub fn sd_dominates<S: Scalar>(x: &[S], y: &[S], order: &[usize]) -> Result<bool, AuditError> {
    Ok(sd_first_violation(x, y, order)?.is_none())
}

/// First 1-based prefix of `order` where `x`'s cumulative mass drops below
/// `y`'s, or `None` when `x` dominates `y`.
pub fn sd_first_violation<S: Scalar>(
    x: &[S],
    y: &[S],
    order: &[usize],
) -> Result<Option<usize>, AuditError> {
    if x.len() != y.len() {
        return Err(AuditError::LengthMismatch { left: x.len(), right: y.len() });
    }
    if order.len() != x.len() {
        return Err(AuditError::LengthMismatch { left: order.len(), right: x.len() });
    }
    let mut cum_x = S::zero();
    let mut cum_y = S::zero();
    for (t, &item) in order.iter().enumerate() {
        cum_x = cum_x + x[item].clone();
        cum_y = cum_y + y[item].clone();
        if cum_x < cum_y {
            return Ok(Some(t + 1));
        }
    }
    Ok(None)
}

fn check_dims<S: Scalar>(p: &RandomAssignment<S>, inst: &Instance) -> Result<(), AuditError> {
    if p.n() != inst.n() {
        return Err(ModelError::DimensionMismatch { expected: inst.n(), found: p.n() }.into());
    }
    if p.m() != inst.m() {
        return Err(ModelError::DimensionMismatch { expected: inst.m(), found: p.m() }.into());
    }
    Ok(())
}

fn check_prio_dims<S: Scalar>(
    prio: &RandomPriority<S>,
    inst: &Instance,
) -> Result<(), AuditError> {
    if prio.n() != inst.n() {
        return Err(ModelError::DimensionMismatch { expected: inst.n(), found: prio.n() }.into());
    }
    Ok(())
}

use crate::io::matrix_doc;

/// All stochastic envy pairs: ordered pairs `(i, j)` where `i`'s rank
/// distribution weakly dominates `j`'s but `i`'s allocation does not
/// dominate `j`'s under `i`'s own preferences. The third component is the
/// first violated 1-based prefix.
fn envy_pairs<S: Scalar>(
    p: &RandomAssignment<S>,
    prio: &RandomPriority<S>,
    inst: &Instance,
) -> Result<Vec<(usize, usize, usize)>, AuditError> {
    check_dims(p, inst)?;
    check_prio_dims(prio, inst)?;
    let dists = crate::model::rank_distributions(prio);
    let identity: Vec<usize> = (0..inst.n()).collect();
    let mut pairs = Vec::new();
    for i in 0..inst.n() {
        for j in 0..inst.n() {
            if i == j || !sd_dominates(&dists[i], &dists[j], &identity)? {
                continue;
            }
            if let Some(prefix) = sd_first_violation(p.row(i), p.row(j), inst.pref_order(i))? {
                pairs.push((i, j, prefix));
            }
        }
    }
    Ok(pairs)
}

/// Stochastic envy-freeness: whenever agent `i`'s rank distribution weakly
/// dominates agent `j`'s, `i`'s allocation must dominate `j`'s under `i`'s
/// preferences.
pub fn check_sef<S: Scalar>(
    p: &RandomAssignment<S>,
    prio: &RandomPriority<S>,
    inst: &Instance,
) -> Result<AuditReport, AuditError> {
    let witnesses = envy_pairs(p, prio, inst)?
        .into_iter()
        .map(|(i, j, prefix)| Witness::EnvyPair {
            agent: inst.agent_name(i).to_string(),
            other: inst.agent_name(j).to_string(),
            prefix,
        })
        .collect();
    Ok(AuditReport::from_witnesses(Property::Sef, witnesses))
}

/// Number of stochastic envy pairs, the quantity reported by the admission
/// experiment. Same predicate as [`check_sef`], different surface.
pub fn count_envy_pairs<S: Scalar>(
    p: &RandomAssignment<S>,
    prio: &RandomPriority<S>,
    inst: &Instance,
) -> Result<usize, AuditError> {
    Ok(envy_pairs(p, prio, inst)?.len())
}

/// Proportionality: each agent's allocation must weakly dominate the
/// baseline that grants it its rank distribution's mass on its own favorite
/// items.
pub fn check_prop<S: Scalar>(
    p: &RandomAssignment<S>,
    prio: &RandomPriority<S>,
    inst: &Instance,
) -> Result<AuditReport, AuditError> {
    check_dims(p, inst)?;
    check_prio_dims(prio, inst)?;
    let baseline = baseline_allocation(prio, inst)?;
    let mut witnesses = Vec::new();
    for agent in 0..inst.n() {
        if let Some(prefix) =
            sd_first_violation(p.row(agent), baseline.row(agent), inst.pref_order(agent))?
        {
            witnesses.push(Witness::PropShortfall {
                agent: inst.agent_name(agent).to_string(),
                prefix,
            });
        }
    }
    Ok(AuditReport::from_witnesses(Property::Prop, witnesses))
}

/// Item-level improvement relation of an allocation: edge `a -> b` when some
/// agent holds `b` with positive probability but strictly prefers `a`.
/// `edge[a][b]` stores the lowest such agent.
fn improvement_edges<S: Scalar>(
    p: &RandomAssignment<S>,
    inst: &Instance,
) -> Vec<Vec<Option<usize>>> {
    let m = inst.m();
    let mut edge: Vec<Vec<Option<usize>>> = vec![vec![None; m]; m];
    for agent in 0..inst.n() {
        let pref = inst.pref_order(agent);
        for (r, &held) in pref.iter().enumerate() {
            if p.entry(agent, held).is_zero() {
                continue;
            }
            for &better in &pref[..r] {
                if edge[better][held].is_none() {
                    edge[better][held] = Some(agent);
                }
            }
        }
    }
    edge
}

/// Searches the improvement relation for a directed cycle; returns the items
/// along it, cycle-ordered.
fn find_cycle(edge: &[Vec<Option<usize>>]) -> Option<Vec<usize>> {
    let m = edge.len();
    // 0 = unvisited, 1 = on the current path, 2 = finished.
    let mut state = vec![0u8; m];
    let mut path: Vec<(usize, usize)> = Vec::new();
    for start in 0..m {
        if state[start] != 0 {
            continue;
        }
        path.push((start, 0));
        state[start] = 1;
        while let Some(&(v, cursor)) = path.last() {
            if cursor >= m {
                state[v] = 2;
                path.pop();
                continue;
            }
            path.last_mut().expect("path nonempty").1 = cursor + 1;
            let w = cursor;
            if edge[v][w].is_none() {
                continue;
            }
            match state[w] {
                0 => {
                    state[w] = 1;
                    path.push((w, 0));
                }
                1 => {
                    let pos = path.iter().position(|&(u, _)| u == w).unwrap();
                    return Some(path[pos..].iter().map(|&(u, _)| u).collect());
                }
                _ => {}
            }
        }
    }
    None
}

/// Ordinal efficiency: the allocation is wasteful if some agent holds an
/// item while a strictly better one (for that agent) has slack supply, and
/// cyclic if the improvement relation admits a cycle. Either defect yields a
/// dominating trade, which the witness carries.
pub fn check_oe<S: Scalar>(
    p: &RandomAssignment<S>,
    inst: &Instance,
) -> Result<AuditReport, AuditError> {
    check_dims(p, inst)?;
    let m = inst.m();
    let edge = improvement_edges(p, inst);

    let slack: Vec<bool> = (0..m).map(|item| p.column_sum(item) < S::one()).collect();
    for preferred in 0..m {
        if !slack[preferred] {
            continue;
        }
        for held in 0..m {
            if let Some(agent) = edge[preferred][held] {
                let dominating = waste_trade(p, inst, agent, preferred, held);
                let witness = Witness::WastedItem {
                    agent: inst.agent_name(agent).to_string(),
                    preferred: inst.item_name(preferred).to_string(),
                    held: inst.item_name(held).to_string(),
                    dominating,
                };
                return Ok(AuditReport::from_witnesses(Property::Oe, vec![witness]));
            }
        }
    }

    if let Some(cycle) = find_cycle(&edge) {
        let dominating = cycle_trade(p, inst, &edge, &cycle);
        let witness = Witness::ItemCycle {
            items: cycle.iter().map(|&item| inst.item_name(item).to_string()).collect(),
            dominating,
        };
        return Ok(AuditReport::from_witnesses(Property::Oe, vec![witness]));
    }
    Ok(AuditReport::from_witnesses(Property::Oe, Vec::new()))
}

fn waste_trade<S: Scalar>(
    p: &RandomAssignment<S>,
    inst: &Instance,
    agent: usize,
    preferred: usize,
    held: usize,
) -> MatrixDoc {
    let slack = S::one() - p.column_sum(preferred);
    let held_mass = p.entry(agent, held).clone();
    let eps = if held_mass < slack { held_mass } else { slack };
    let mut rows: Vec<Vec<S>> = (0..p.n()).map(|i| p.row(i).to_vec()).collect();
    rows[agent][preferred] = rows[agent][preferred].clone() + eps.clone();
    rows[agent][held] = rows[agent][held].clone() - eps;
    let q = RandomAssignment::new(rows).expect("waste trade stays valid");
    matrix_doc(&q, inst)
}

fn cycle_trade<S: Scalar>(
    p: &RandomAssignment<S>,
    inst: &Instance,
    edge: &[Vec<Option<usize>>],
    cycle: &[usize],
) -> MatrixDoc {
    let k = cycle.len();
    let traders: Vec<usize> = (0..k)
        .map(|t| edge[cycle[t]][cycle[(t + 1) % k]].expect("cycle edge has an agent"))
        .collect();
    let mut eps: Option<S> = None;
    for t in 0..k {
        let mass = p.entry(traders[t], cycle[(t + 1) % k]).clone();
        eps = Some(match eps {
            None => mass,
            Some(current) => {
                if mass < current {
                    mass
                } else {
                    current
                }
            }
        });
    }
    let eps = eps.expect("cycle is nonempty");
    let mut rows: Vec<Vec<S>> = (0..p.n()).map(|i| p.row(i).to_vec()).collect();
    for t in 0..k {
        let (gain, lose) = (cycle[t], cycle[(t + 1) % k]);
        rows[traders[t]][gain] = rows[traders[t]][gain].clone() + eps.clone();
        rows[traders[t]][lose] = rows[traders[t]][lose].clone() - eps.clone();
    }
    let q = RandomAssignment::new(rows).expect("cycle trade stays valid");
    matrix_doc(&q, inst)
}

const BRUTEFORCE_LIMIT: usize = 4;

/// Brute-force ordinal efficiency oracle: a linear program searches for any
/// valid allocation that weakly dominates the input at every preference
/// prefix with strictly larger total prefix mass. Exact and exhaustive, but
/// limited to tiny instances.
pub fn check_oe_bruteforce<S: Scalar>(
    p: &RandomAssignment<S>,
    inst: &Instance,
) -> Result<AuditReport, AuditError> {
    check_dims(p, inst)?;
    let (n, m) = (inst.n(), inst.m());
    if n > BRUTEFORCE_LIMIT || m > BRUTEFORCE_LIMIT {
        return Err(AuditError::TooLarge { n, m, limit: BRUTEFORCE_LIMIT });
    }

    let var = |agent: usize, item: usize| agent * m + item;
    // Prefix mass of item at rank r counts in m - r prefixes, so maximizing
    // the weighted sum maximizes total prefix mass.
    let mut objective = vec![S::zero(); n * m];
    for agent in 0..n {
        for (r, &item) in inst.pref_order(agent).iter().enumerate() {
            objective[var(agent, item)] = from_count::<S>(m - r);
        }
    }
    let base = (0..n).fold(S::zero(), |acc, agent| {
        inst.pref_order(agent).iter().enumerate().fold(acc, |acc, (r, &item)| {
            acc + from_count::<S>(m - r) * p.entry(agent, item).clone()
        })
    });

    let mut constraints = Vec::new();
    for agent in 0..n {
        let mut coeffs = vec![S::zero(); n * m];
        for item in 0..m {
            coeffs[var(agent, item)] = S::one();
        }
        constraints.push(Constraint { coeffs, relation: Relation::Eq, rhs: S::one() });
    }
    for item in 0..m {
        let mut coeffs = vec![S::zero(); n * m];
        for agent in 0..n {
            coeffs[var(agent, item)] = S::one();
        }
        constraints.push(Constraint { coeffs, relation: Relation::Le, rhs: S::one() });
    }
    for agent in 0..n {
        let pref = inst.pref_order(agent);
        let mut cum = S::zero();
        for t in 0..m - 1 {
            cum = cum + p.entry(agent, pref[t]).clone();
            let mut coeffs = vec![S::zero(); n * m];
            for &item in &pref[..=t] {
                coeffs[var(agent, item)] = S::one();
            }
            constraints.push(Constraint {
                coeffs,
                relation: Relation::Ge,
                rhs: cum.clone(),
            });
        }
    }

    let program = LinearProgram { vars: n * m, constraints, objective };
    match simplex::solve(&program) {
        LpResult::Optimal { x, value } => {
            if value > base {
                let rows: Vec<Vec<S>> =
                    (0..n).map(|agent| x[agent * m..(agent + 1) * m].to_vec()).collect();
                let q = RandomAssignment::new(rows)
                    .map_err(|e| AuditError::Internal(format!("dominating point invalid: {e}")))?;
                let witness = Witness::Dominating { dominating: matrix_doc(&q, inst) };
                Ok(AuditReport::from_witnesses(Property::Oe, vec![witness]))
            } else {
                Ok(AuditReport::from_witnesses(Property::Oe, Vec::new()))
            }
        }
        LpResult::Infeasible(_) => {
            Err(AuditError::Internal("dominance program lost the input point".into()))
        }
        LpResult::Unbounded => {
            Err(AuditError::Internal("dominance program cannot be unbounded".into()))
        }
    }
}

/// Pairs `(i, j)` where `i` outranks `j` with probability one.
fn certain_pairs<S: Scalar>(prio: &RandomPriority<S>) -> Vec<(usize, usize)> {
    let w = priority_likelihoods(prio);
    let n = prio.n();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && w[i][j].is_one() {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

/// One-shot lottery envy-freeness, matrix form: whenever `i` outranks `j`
/// with certainty, there must be no pair of items `a` strictly better than
/// `b` for `i` such that `i` holds `b` and `j` holds `a`, each with positive
/// probability.
pub fn check_1lef_matrix<S: Scalar>(
    p: &RandomAssignment<S>,
    prio: &RandomPriority<S>,
    inst: &Instance,
) -> Result<AuditReport, AuditError> {
    check_dims(p, inst)?;
    check_prio_dims(prio, inst)?;
    let mut witnesses = Vec::new();
    for (i, j) in certain_pairs(prio) {
        let pref = inst.pref_order(i);
        'pair: for (r, &held) in pref.iter().enumerate() {
            if p.entry(i, held).is_zero() {
                continue;
            }
            for &preferred in &pref[..r] {
                if !p.entry(j, preferred).is_zero() {
                    witnesses.push(Witness::RankedPair {
                        agent: inst.agent_name(i).to_string(),
                        other: inst.agent_name(j).to_string(),
                        preferred: inst.item_name(preferred).to_string(),
                        held: inst.item_name(held).to_string(),
                    });
                    break 'pair;
                }
            }
        }
    }
    Ok(AuditReport::from_witnesses(Property::OneLef, witnesses))
}

fn assignment_doc(f: &SimpleAssignment, inst: &Instance) -> BTreeMap<String, String> {
    (0..f.n())
        .map(|agent| {
            (inst.agent_name(agent).to_string(), inst.item_name(f.item_of(agent)).to_string())
        })
        .collect()
}

/// Probability under the lottery that `i` receives an item it strictly
/// prefers to `j`'s, together with a support assignment where it does not
/// (when one exists).
fn beat_probability<'l, S: Scalar>(
    lottery: &'l Lottery<S>,
    inst: &Instance,
    i: usize,
    j: usize,
) -> (S, Option<&'l SimpleAssignment>) {
    let mut prob = S::zero();
    let mut example = None;
    for (f, weight) in lottery.entries() {
        if inst.prefers(i, f.item_of(i), f.item_of(j)) {
            prob = prob + weight.clone();
        } else if example.is_none() {
            example = Some(f);
        }
    }
    (prob, example)
}

fn check_lottery_dims<S: Scalar>(
    lottery: &Lottery<S>,
    inst: &Instance,
) -> Result<(), AuditError> {
    if lottery.n() != inst.n() {
        return Err(
            ModelError::DimensionMismatch { expected: inst.n(), found: lottery.n() }.into()
        );
    }
    if lottery.m() != inst.m() {
        return Err(
            ModelError::DimensionMismatch { expected: inst.m(), found: lottery.m() }.into()
        );
    }
    Ok(())
}

/// Lottery envy-freeness of a concrete lottery: for every ordered pair, the
/// probability that `i` beats `j` item-wise must reach the probability that
/// `i` outranks `j` under the priority.
pub fn check_lef_lottery<S: Scalar>(
    lottery: &Lottery<S>,
    prio: &RandomPriority<S>,
    inst: &Instance,
) -> Result<AuditReport, AuditError> {
    check_lottery_dims(lottery, inst)?;
    check_prio_dims(prio, inst)?;
    let w = priority_likelihoods(prio);
    let mut witnesses = Vec::new();
    for i in 0..inst.n() {
        for j in 0..inst.n() {
            if i == j || w[i][j].is_zero() {
                continue;
            }
            let (prob, example) = beat_probability(lottery, inst, i, j);
            if prob < w[i][j] {
                witnesses.push(Witness::LotteryPair {
                    agent: inst.agent_name(i).to_string(),
                    other: inst.agent_name(j).to_string(),
                    required: w[i][j].to_string(),
                    actual: prob.to_string(),
                    example: example
                        .map(|f| assignment_doc(f, inst))
                        .unwrap_or_default(),
                });
            }
        }
    }
    Ok(AuditReport::from_witnesses(Property::Lef, witnesses))
}

/// One-shot lottery envy-freeness of a concrete lottery: pairs ranked with
/// certainty must be beaten with certainty.
pub fn check_1lef_lottery<S: Scalar>(
    lottery: &Lottery<S>,
    prio: &RandomPriority<S>,
    inst: &Instance,
) -> Result<AuditReport, AuditError> {
    check_lottery_dims(lottery, inst)?;
    check_prio_dims(prio, inst)?;
    let mut witnesses = Vec::new();
    for (i, j) in certain_pairs(prio) {
        let (prob, example) = beat_probability(lottery, inst, i, j);
        if !prob.is_one() {
            witnesses.push(Witness::LotteryPair {
                agent: inst.agent_name(i).to_string(),
                other: inst.agent_name(j).to_string(),
                required: S::one().to_string(),
                actual: prob.to_string(),
                example: example.map(|f| assignment_doc(f, inst)).unwrap_or_default(),
            });
        }
    }
    Ok(AuditReport::from_witnesses(Property::OneLef, witnesses))
}
