//! Simultaneous-eating mechanisms over the stochastic-dominance graph.
//!
//! Three exact mechanisms live here:
//!
//! - [`probabilistic_serial`]: every participating agent eats its favorite
//!   available item at unit speed from time 0 to 1;
//! - [`cycle_elimination`]: agents are layered by the condensation of the
//!   stochastic-dominance graph over rank distributions, and each layer runs
//!   probabilistic serial against whatever supply earlier layers left;
//! - [`unit_time_eating`]: one unit-length phase per rank, during which each
//!   agent eats at the probability it holds that rank.

use crate::model::{
    check_same_n, rank_distributions, Instance, ModelError, RandomAssignment, RandomPriority,
};
use crate::scalar::{from_count, total, Scalar};

#[derive(Debug, thiserror::Error)]
pub enum EatingError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("total item supply {supply} is below the number of eating agents ({agents})")]
    InsufficientSupply { supply: String, agents: usize },
    #[error("supply for item {0} is negative")]
    NegativeSupply(usize),
}

/// Directed graph over agents: edge `i -> j` present exactly when agent `i`'s
/// rank distribution weakly first-order stochastically dominates agent `j`'s.
#[derive(Debug, Clone)]
pub struct SdGraph {
    adj: Vec<Vec<bool>>,
}

impl SdGraph {
    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.adj[from][to]
    }

    pub fn successors(&self, from: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[from].iter().enumerate().filter(|(_, &e)| e).map(|(j, _)| j)
    }
}

/// Builds the stochastic-dominance graph of a random priority. Dominance is
/// weak: every prefix of `i`'s rank distribution carries at least as much
/// mass as `j`'s, so mutual edges mark equal distributions.
pub fn build_sd_graph<S: Scalar>(prio: &RandomPriority<S>) -> SdGraph {
    let n = prio.n();
    let dists = rank_distributions(prio);
    let prefixes: Vec<Vec<S>> = dists
        .iter()
        .map(|dist| {
            dist.iter()
                .scan(S::zero(), |acc, p| {
                    *acc = acc.clone() + p.clone();
                    Some(acc.clone())
                })
                .collect()
        })
        .collect();
    let mut adj = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                // The final prefix is 1 on both sides, so it never decides.
                adj[i][j] = (0..n - 1).all(|t| prefixes[i][t] >= prefixes[j][t]);
            }
        }
    }
    SdGraph { adj }
}

/// Condensation of an [`SdGraph`]: strongly connected components listed in
/// topological order (every DAG edge goes from a lower to a higher component
/// index), members sorted within each component.
#[derive(Debug, Clone)]
pub struct Condensation {
    comp_of: Vec<usize>,
    comps: Vec<Vec<usize>>,
    succ: Vec<Vec<usize>>,
}

impl Condensation {
    pub fn len(&self) -> usize {
        self.comps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn component_of(&self, agent: usize) -> usize {
        self.comp_of[agent]
    }

    pub fn components(&self) -> &[Vec<usize>] {
        &self.comps
    }

    /// Distinct successor components of `comp`, sorted.
    pub fn successors(&self, comp: usize) -> &[usize] {
        &self.succ[comp]
    }

    /// In-degree of every component in the DAG.
    pub fn in_degrees(&self) -> Vec<usize> {
        let mut indeg = vec![0; self.comps.len()];
        for succ in &self.succ {
            for &s in succ {
                indeg[s] += 1;
            }
        }
        indeg
    }
}

/// Condenses the graph with an iterative Tarjan pass.
pub fn condense(graph: &SdGraph) -> Condensation {
    let n = graph.n();
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut counter = 0usize;
    let mut comps: Vec<Vec<usize>> = Vec::new();

    struct Frame {
        v: usize,
        next: usize,
    }

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        let mut frames = vec![Frame { v: root, next: 0 }];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(frame) = frames.last_mut() {
            let v = frame.v;
            let mut advanced = false;
            while frame.next < n {
                let w = frame.next;
                frame.next += 1;
                if w == v || !graph.has_edge(v, w) {
                    continue;
                }
                if index[w] == UNSEEN {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    frames.push(Frame { v: w, next: 0 });
                    advanced = true;
                    break;
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            }
            if advanced {
                continue;
            }
            frames.pop();
            if let Some(parent) = frames.last() {
                low[parent.v] = low[parent.v].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack nonempty");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                comps.push(comp);
            }
        }
    }

    // Tarjan emits components children-first; reverse for topological order.
    comps.reverse();
    let mut comp_of = vec![0usize; n];
    for (c, comp) in comps.iter().enumerate() {
        for &v in comp {
            comp_of[v] = c;
        }
    }
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); comps.len()];
    for v in 0..n {
        for w in graph.successors(v) {
            let (cv, cw) = (comp_of[v], comp_of[w]);
            if cv != cw && !succ[cv].contains(&cw) {
                debug_assert!(cv < cw, "condensation order is topological");
                succ[cv].push(cw);
            }
        }
    }
    for s in &mut succ {
        s.sort_unstable();
    }
    Condensation { comp_of, comps, succ }
}

/// Result of a partial eating run: one allocation row per participating
/// agent, plus the item supply left over for later runs.
#[derive(Debug, Clone)]
pub struct EatingOutcome<S: Scalar> {
    /// `rows[k]` is the allocation of the `k`-th participating agent.
    pub rows: Vec<Vec<S>>,
    pub remaining: Vec<S>,
}

/// Runs simultaneous eating at unit speed for the given agents against the
/// given supply. Each agent always eats its favorite item with positive
/// supply; between exhaustion events consumption is linear, so the whole run
/// takes at most `m + 1` steps. Requires total supply of at least one unit
/// per participating agent, which guarantees every agent can eat until time 1.
pub fn probabilistic_serial<S: Scalar>(
    inst: &Instance,
    agents: &[usize],
    supply: &[S],
) -> Result<EatingOutcome<S>, EatingError> {
    let m = inst.m();
    if supply.len() != m {
        return Err(ModelError::DimensionMismatch { expected: m, found: supply.len() }.into());
    }
    if let Some(item) = supply.iter().position(|s| *s < S::zero()) {
        return Err(EatingError::NegativeSupply(item));
    }
    let available = total(supply);
    if available < from_count::<S>(agents.len()) {
        return Err(EatingError::InsufficientSupply {
            supply: available.to_string(),
            agents: agents.len(),
        });
    }

    let mut rows = vec![vec![S::zero(); m]; agents.len()];
    let mut remaining = supply.to_vec();
    let mut ptr = vec![0usize; agents.len()];
    let one = S::one();
    let mut t = S::zero();
    while t < one && !agents.is_empty() {
        let mut eaters = vec![0usize; m];
        for (slot, &agent) in agents.iter().enumerate() {
            let pref = inst.pref_order(agent);
            while remaining[pref[ptr[slot]]].is_zero() {
                ptr[slot] += 1;
            }
            eaters[pref[ptr[slot]]] += 1;
        }
        let mut dt = one.clone() - t.clone();
        for item in 0..m {
            if eaters[item] > 0 {
                let cap = remaining[item].clone() / from_count::<S>(eaters[item]);
                if cap < dt {
                    dt = cap;
                }
            }
        }
        for (slot, &agent) in agents.iter().enumerate() {
            let target = inst.pref_order(agent)[ptr[slot]];
            rows[slot][target] = rows[slot][target].clone() + dt.clone();
        }
        for item in 0..m {
            if eaters[item] > 0 {
                remaining[item] =
                    remaining[item].clone() - dt.clone() * from_count::<S>(eaters[item]);
            }
        }
        t = t + dt;
    }
    Ok(EatingOutcome { rows, remaining })
}

/// Probabilistic serial over the whole instance with unit supply per item.
pub fn probabilistic_serial_full<S: Scalar>(
    inst: &Instance,
) -> Result<RandomAssignment<S>, EatingError> {
    let agents: Vec<usize> = (0..inst.n()).collect();
    let supply = vec![S::one(); inst.m()];
    let outcome = probabilistic_serial(inst, &agents, &supply)?;
    Ok(RandomAssignment::new(outcome.rows)?)
}

/// Cycle elimination: condenses the stochastic-dominance graph of the
/// priority, then repeatedly runs probabilistic serial for the agents in the
/// current sources of the component DAG, feeding each round the supply the
/// previous rounds left over. Components whose agents share identical rank
/// distributions therefore eat together, and dominated components only eat
/// once every dominating component has finished.
pub fn cycle_elimination<S: Scalar>(
    inst: &Instance,
    prio: &RandomPriority<S>,
) -> Result<RandomAssignment<S>, EatingError> {
    check_same_n(inst, prio)?;
    let cond = condense(&build_sd_graph(prio));
    let mut indeg = cond.in_degrees();
    let mut alive = vec![true; cond.len()];
    let mut pending = cond.len();
    let mut supply = vec![S::one(); inst.m()];
    let mut rows: Vec<Vec<S>> = vec![Vec::new(); inst.n()];
    while pending > 0 {
        let layer: Vec<usize> =
            (0..cond.len()).filter(|&c| alive[c] && indeg[c] == 0).collect();
        debug_assert!(!layer.is_empty(), "component DAG always has a source");
        let mut agents: Vec<usize> = Vec::new();
        for &c in &layer {
            agents.extend_from_slice(&cond.components()[c]);
        }
        agents.sort_unstable();
        let outcome = probabilistic_serial(inst, &agents, &supply)?;
        supply = outcome.remaining;
        for (slot, &agent) in agents.iter().enumerate() {
            rows[agent] = outcome.rows[slot].clone();
        }
        for &c in &layer {
            alive[c] = false;
            pending -= 1;
            for &s in cond.successors(c) {
                indeg[s] -= 1;
            }
        }
    }
    Ok(RandomAssignment::new(rows)?)
}

/// Unit-time eating: phase `t` lasts one time unit, and during it agent `i`
/// eats its favorite available item at rate `Pr[i is ranked t-th]`. The
/// aggregate eating rate is exactly one in every phase, so supply lasts
/// through all `n` phases whenever `m >= n`.
pub fn unit_time_eating<S: Scalar>(
    inst: &Instance,
    prio: &RandomPriority<S>,
) -> Result<RandomAssignment<S>, EatingError> {
    ute_impl(inst, prio).map(|(p, _)| p)
}

fn ute_impl<S: Scalar>(
    inst: &Instance,
    prio: &RandomPriority<S>,
) -> Result<(RandomAssignment<S>, usize), EatingError> {
    check_same_n(inst, prio)?;
    let (n, m) = (inst.n(), inst.m());
    let mut rates = vec![vec![S::zero(); n]; n];
    for (sigma, weight) in prio.entries() {
        for (t, &agent) in sigma.order().iter().enumerate() {
            rates[t][agent] = rates[t][agent].clone() + weight.clone();
        }
    }

    let mut rows = vec![vec![S::zero(); m]; n];
    let mut remaining = vec![S::one(); m];
    let mut ptr = vec![0usize; n];
    let mut exhaustions = 0usize;
    for t in 0..n {
        let active: Vec<usize> = (0..n).filter(|&i| rates[t][i] > S::zero()).collect();
        debug_assert!(!active.is_empty(), "every phase has an eater");
        let phase_end = from_count::<S>(t + 1);
        let mut tau = from_count::<S>(t);
        while tau < phase_end {
            let mut item_rate = vec![S::zero(); m];
            for &i in &active {
                let pref = inst.pref_order(i);
                while remaining[pref[ptr[i]]].is_zero() {
                    ptr[i] += 1;
                }
                let target = pref[ptr[i]];
                item_rate[target] = item_rate[target].clone() + rates[t][i].clone();
            }
            let mut dt = phase_end.clone() - tau.clone();
            for item in 0..m {
                if item_rate[item] > S::zero() {
                    let cap = remaining[item].clone() / item_rate[item].clone();
                    if cap < dt {
                        dt = cap;
                    }
                }
            }
            for &i in &active {
                let target = inst.pref_order(i)[ptr[i]];
                rows[i][target] = rows[i][target].clone() + rates[t][i].clone() * dt.clone();
            }
            for item in 0..m {
                if item_rate[item] > S::zero() {
                    remaining[item] =
                        remaining[item].clone() - item_rate[item].clone() * dt.clone();
                    if remaining[item].is_zero() {
                        exhaustions += 1;
                    }
                }
            }
            tau = tau + dt;
        }
    }
    debug_assert!(exhaustions <= m);
    Ok((RandomAssignment::new(rows)?, exhaustions))
}
