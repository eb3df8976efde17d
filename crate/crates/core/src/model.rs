//! Core types: instances, priorities, assignments, and lotteries.
//!
//! All probability-carrying types are generic over [`Scalar`] and default to
//! the exact [`Rational`](crate::Rational). Constructors validate every
//! invariant up front, so downstream algorithms can assume well-formed data.

use std::collections::BTreeMap;

use crate::scalar::{from_count, total, Scalar};
use crate::Rational;

/// Validation failure for a model type.
#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("agent list is empty")]
    NoAgents,
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("unknown item `{0}`")]
    UnknownItem(String),
    #[error("no preference list for agent `{0}`")]
    MissingPreferences(String),
    #[error("preference list for agent `{0}` is not a permutation of the items")]
    PreferencesNotPermutation(String),
    #[error("priority order is not a permutation of the agents")]
    OrderNotPermutation,
    #[error("priority list is empty")]
    EmptyPriority,
    #[error("lottery is empty")]
    EmptyLottery,
    #[error("cannot parse `{0}` as a rational number")]
    BadRational(String),
    #[error("weight {0} is not positive")]
    NonPositiveWeight(String),
    #[error("weights sum to {0}, expected 1")]
    WeightSumNotOne(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("assignment entry for agent {agent}, item {item} is negative")]
    NegativeEntry { agent: usize, item: usize },
    #[error("row for agent {agent} sums to {sum}, expected 1")]
    RowSumNotOne { agent: usize, sum: String },
    #[error("column for item {item} sums to {sum}, which exceeds 1")]
    ColumnOversubscribed { item: usize, sum: String },
    #[error("assignment maps two agents to item {0}")]
    NotInjective(usize),
    #[error("item index {0} out of range")]
    ItemOutOfRange(usize),
    #[error("fewer items than agents after padding: {items} < {agents}")]
    TooFewItems { items: usize, agents: usize },
}

/// Prefix used for padding items appended when an instance has fewer items
/// than agents.
pub const DUMMY_PREFIX: &str = "__dummy_";

/// An assignment problem: `n` agents with strict preference orders over `m`
/// items, `m >= n`. Instances with fewer items than agents are completed at
/// construction time by appending dummy items that every agent ranks last.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    agents: Vec<String>,
    items: Vec<String>,
    /// `prefs[i][r]` is the item agent `i` ranks at position `r` (0 = best).
    prefs: Vec<Vec<usize>>,
    /// `ranks[i][j]` is the position of item `j` in agent `i`'s order.
    ranks: Vec<Vec<usize>>,
    agent_idx: BTreeMap<String, usize>,
    item_idx: BTreeMap<String, usize>,
}

impl Instance {
    /// Builds an instance from names and per-agent preference lists given as
    /// item indices. If there are fewer items than agents, dummy items named
    /// `__dummy_1`, `__dummy_2`, ... are appended and ranked below all real
    /// items in every preference list, preserving item index order.
    pub fn new(
        agents: Vec<String>,
        mut items: Vec<String>,
        mut prefs: Vec<Vec<usize>>,
    ) -> Result<Self, ModelError> {
        if agents.is_empty() {
            return Err(ModelError::NoAgents);
        }
        if prefs.len() != agents.len() {
            return Err(ModelError::DimensionMismatch {
                expected: agents.len(),
                found: prefs.len(),
            });
        }
        let real_items = items.len();
        for (agent, pref) in agents.iter().zip(&prefs) {
            if !is_permutation(pref, real_items) {
                return Err(ModelError::PreferencesNotPermutation(agent.clone()));
            }
        }
        for k in real_items..agents.len() {
            items.push(format!("{DUMMY_PREFIX}{}", k - real_items + 1));
            for pref in &mut prefs {
                pref.push(k);
            }
        }
        let agent_idx = index_names(&agents)?;
        let item_idx = index_names(&items)?;
        let ranks = prefs
            .iter()
            .map(|pref| {
                let mut rank = vec![0; items.len()];
                for (r, &item) in pref.iter().enumerate() {
                    rank[item] = r;
                }
                rank
            })
            .collect();
        Ok(Instance { agents, items, prefs, ranks, agent_idx, item_idx })
    }

    pub fn n(&self) -> usize {
        self.agents.len()
    }

    pub fn m(&self) -> usize {
        self.items.len()
    }

    pub fn agents(&self) -> &[String] {
        &self.agents
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn agent_name(&self, agent: usize) -> &str {
        &self.agents[agent]
    }

    pub fn item_name(&self, item: usize) -> &str {
        &self.items[item]
    }

    pub fn agent_index(&self, name: &str) -> Option<usize> {
        self.agent_idx.get(name).copied()
    }

    pub fn item_index(&self, name: &str) -> Option<usize> {
        self.item_idx.get(name).copied()
    }

    /// Agent `i`'s items from most to least preferred.
    pub fn pref_order(&self, agent: usize) -> &[usize] {
        &self.prefs[agent]
    }

    /// Position of `item` in agent `i`'s order, 0 = most preferred.
    pub fn rank_of(&self, agent: usize, item: usize) -> usize {
        self.ranks[agent][item]
    }

    /// Whether agent `i` strictly prefers item `a` to item `b`.
    pub fn prefers(&self, agent: usize, a: usize, b: usize) -> bool {
        self.ranks[agent][a] < self.ranks[agent][b]
    }
}

fn is_permutation(seq: &[usize], len: usize) -> bool {
    if seq.len() != len {
        return false;
    }
    let mut seen = vec![false; len];
    for &v in seq {
        if v >= len || seen[v] {
            return false;
        }
        seen[v] = true;
    }
    true
}

fn index_names(names: &[String]) -> Result<BTreeMap<String, usize>, ModelError> {
    let mut map = BTreeMap::new();
    for (i, name) in names.iter().enumerate() {
        if map.insert(name.clone(), i).is_some() {
            return Err(ModelError::DuplicateName(name.clone()));
        }
    }
    Ok(map)
}

/// A strict priority order over agents: `order[r]` is the agent ranked `r`-th
/// (0 = highest priority).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SimplePriority {
    order: Vec<usize>,
}

impl SimplePriority {
    pub fn new(order: Vec<usize>) -> Result<Self, ModelError> {
        if !is_permutation(&order, order.len()) || order.is_empty() {
            return Err(ModelError::OrderNotPermutation);
        }
        Ok(SimplePriority { order })
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Agents from highest to lowest priority.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// `ranks()[i]` is agent `i`'s position, 0 = highest priority.
    pub fn ranks(&self) -> Vec<usize> {
        let mut ranks = vec![0; self.order.len()];
        for (r, &agent) in self.order.iter().enumerate() {
            ranks[agent] = r;
        }
        ranks
    }
}

/// A probability distribution over strict priority orders. Entries are kept
/// in a canonical form: duplicate orders merged, sorted lexicographically,
/// weights positive and summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomPriority<S: Scalar = Rational> {
    entries: Vec<(SimplePriority, S)>,
}

impl<S: Scalar> RandomPriority<S> {
    pub fn new(entries: Vec<(SimplePriority, S)>) -> Result<Self, ModelError> {
        if entries.is_empty() {
            return Err(ModelError::EmptyPriority);
        }
        let n = entries[0].0.len();
        for (sigma, weight) in &entries {
            if sigma.len() != n {
                return Err(ModelError::DimensionMismatch { expected: n, found: sigma.len() });
            }
            if *weight <= S::zero() {
                return Err(ModelError::NonPositiveWeight(weight.to_string()));
            }
        }
        let sum = entries.iter().fold(S::zero(), |acc, (_, w)| acc + w.clone());
        if !sum.is_one() {
            return Err(ModelError::WeightSumNotOne(sum.to_string()));
        }
        Ok(RandomPriority { entries: merge_weighted(entries) })
    }

    /// The deterministic distribution concentrated on one order.
    pub fn point(sigma: SimplePriority) -> Self {
        RandomPriority { entries: vec![(sigma, S::one())] }
    }

    /// Number of agents ranked by every order in the distribution.
    pub fn n(&self) -> usize {
        self.entries[0].0.len()
    }

    pub fn entries(&self) -> &[(SimplePriority, S)] {
        &self.entries
    }
}

/// A deterministic assignment: each agent holds exactly one item, no item is
/// held twice. Items not listed are simply left unassigned (`m >= n`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SimpleAssignment {
    /// `items[i]` is the item held by agent `i`.
    items: Vec<usize>,
    m: usize,
}

impl SimpleAssignment {
    pub fn new(items: Vec<usize>, m: usize) -> Result<Self, ModelError> {
        if items.len() > m {
            return Err(ModelError::TooFewItems { items: m, agents: items.len() });
        }
        let mut held = vec![false; m];
        for &item in &items {
            if item >= m {
                return Err(ModelError::ItemOutOfRange(item));
            }
            if held[item] {
                return Err(ModelError::NotInjective(item));
            }
            held[item] = true;
        }
        Ok(SimpleAssignment { items, m })
    }

    pub fn n(&self) -> usize {
        self.items.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Item held by `agent`.
    pub fn item_of(&self, agent: usize) -> usize {
        self.items[agent]
    }

    pub fn items(&self) -> &[usize] {
        &self.items
    }
}

/// A doubly substochastic allocation matrix: rows are agents and sum to one,
/// columns are items and sum to at most one, entries are nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomAssignment<S: Scalar = Rational> {
    rows: Vec<Vec<S>>,
}

impl<S: Scalar> RandomAssignment<S> {
    pub fn new(rows: Vec<Vec<S>>) -> Result<Self, ModelError> {
        if rows.is_empty() {
            return Err(ModelError::NoAgents);
        }
        let m = rows[0].len();
        if m < rows.len() {
            return Err(ModelError::TooFewItems { items: m, agents: rows.len() });
        }
        for (agent, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(ModelError::DimensionMismatch { expected: m, found: row.len() });
            }
            for (item, p) in row.iter().enumerate() {
                if *p < S::zero() {
                    return Err(ModelError::NegativeEntry { agent, item });
                }
            }
            let sum = total(row);
            if !sum.is_one() {
                return Err(ModelError::RowSumNotOne { agent, sum: sum.to_string() });
            }
        }
        for item in 0..m {
            let sum = rows.iter().fold(S::zero(), |acc, row| acc + row[item].clone());
            if sum > S::one() {
                return Err(ModelError::ColumnOversubscribed { item, sum: sum.to_string() });
            }
        }
        Ok(RandomAssignment { rows })
    }

    /// The 0/1 matrix of a deterministic assignment.
    pub fn from_simple(f: &SimpleAssignment) -> Self {
        let mut rows = vec![vec![S::zero(); f.m()]; f.n()];
        for agent in 0..f.n() {
            rows[agent][f.item_of(agent)] = S::one();
        }
        RandomAssignment { rows }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn m(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, agent: usize) -> &[S] {
        &self.rows[agent]
    }

    pub fn entry(&self, agent: usize, item: usize) -> &S {
        &self.rows[agent][item]
    }

    /// Total mass allocated from `item`'s column.
    pub fn column_sum(&self, item: usize) -> S {
        self.rows.iter().fold(S::zero(), |acc, row| acc + row[item].clone())
    }
}

/// A probability distribution over deterministic assignments, kept canonical
/// the same way as [`RandomPriority`].
#[derive(Debug, Clone, PartialEq)]
pub struct Lottery<S: Scalar = Rational> {
    entries: Vec<(SimpleAssignment, S)>,
}

impl<S: Scalar> Lottery<S> {
    pub fn new(entries: Vec<(SimpleAssignment, S)>) -> Result<Self, ModelError> {
        if entries.is_empty() {
            return Err(ModelError::EmptyLottery);
        }
        let (n, m) = (entries[0].0.n(), entries[0].0.m());
        for (f, weight) in &entries {
            if f.n() != n || f.m() != m {
                return Err(ModelError::DimensionMismatch { expected: n, found: f.n() });
            }
            if *weight <= S::zero() {
                return Err(ModelError::NonPositiveWeight(weight.to_string()));
            }
        }
        let sum = entries.iter().fold(S::zero(), |acc, (_, w)| acc + w.clone());
        if !sum.is_one() {
            return Err(ModelError::WeightSumNotOne(sum.to_string()));
        }
        Ok(Lottery { entries: merge_weighted(entries) })
    }

    pub fn n(&self) -> usize {
        self.entries[0].0.n()
    }

    pub fn m(&self) -> usize {
        self.entries[0].0.m()
    }

    pub fn entries(&self) -> &[(SimpleAssignment, S)] {
        &self.entries
    }
}

/// Sorts weighted entries by key and merges duplicates, preserving total
/// weight. Canonical form makes equality and serialized output stable.
fn merge_weighted<K: Ord + Clone, S: Scalar>(mut entries: Vec<(K, S)>) -> Vec<(K, S)> {
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    let mut merged: Vec<(K, S)> = Vec::with_capacity(entries.len());
    for (key, weight) in entries {
        match merged.last_mut() {
            Some((last, w)) if *last == key => *w = w.clone() + weight,
            _ => merged.push((key, weight)),
        }
    }
    merged
}

/// Marginal rank distribution of `agent` under a random priority: entry `r`
/// is the probability that the agent is ranked `r`-th.
pub fn rank_distribution<S: Scalar>(prio: &RandomPriority<S>, agent: usize) -> Vec<S> {
    let n = prio.n();
    let mut dist = vec![S::zero(); n];
    for (sigma, weight) in prio.entries() {
        let rank = sigma.order().iter().position(|&a| a == agent).expect("agent in order");
        dist[rank] = dist[rank].clone() + weight.clone();
    }
    dist
}

/// Rank distributions of all agents at once, one aggregation pass over the
/// priority entries. `result[i][r]` is `Pr[agent i is ranked r-th]`.
pub fn rank_distributions<S: Scalar>(prio: &RandomPriority<S>) -> Vec<Vec<S>> {
    let n = prio.n();
    let mut dists = vec![vec![S::zero(); n]; n];
    for (sigma, weight) in prio.entries() {
        for (rank, &agent) in sigma.order().iter().enumerate() {
            dists[agent][rank] = dists[agent][rank].clone() + weight.clone();
        }
    }
    dists
}

/// `W[i][j]` is the probability that agent `i` outranks agent `j` under the
/// random priority. Diagonal entries are zero.
pub fn priority_likelihoods<S: Scalar>(prio: &RandomPriority<S>) -> Vec<Vec<S>> {
    let n = prio.n();
    let mut w = vec![vec![S::zero(); n]; n];
    for (sigma, weight) in prio.entries() {
        let ranks = sigma.ranks();
        for i in 0..n {
            for j in 0..n {
                if i != j && ranks[i] < ranks[j] {
                    w[i][j] = w[i][j].clone() + weight.clone();
                }
            }
        }
    }
    w
}

/// Expected allocation matrix of a lottery.
pub fn assignment_from_lottery<S: Scalar>(lottery: &Lottery<S>) -> RandomAssignment<S> {
    let mut rows = vec![vec![S::zero(); lottery.m()]; lottery.n()];
    for (f, weight) in lottery.entries() {
        for agent in 0..f.n() {
            let item = f.item_of(agent);
            rows[agent][item] = rows[agent][item].clone() + weight.clone();
        }
    }
    RandomAssignment { rows }
}

/// Baseline share vector used by proportionality checks: agent `i` receives
/// probability `S_i(r)` of its `r`-th favorite item, where `S_i` is the
/// agent's rank distribution under the priority.
pub fn baseline_allocation<S: Scalar>(
    prio: &RandomPriority<S>,
    inst: &Instance,
) -> Result<RandomAssignment<S>, ModelError> {
    if prio.n() != inst.n() {
        return Err(ModelError::DimensionMismatch { expected: inst.n(), found: prio.n() });
    }
    let mut rows = vec![vec![S::zero(); inst.m()]; inst.n()];
    for agent in 0..inst.n() {
        let dist = rank_distribution(prio, agent);
        for (r, p) in dist.into_iter().enumerate() {
            let item = inst.pref_order(agent)[r];
            rows[agent][item] = p;
        }
    }
    Ok(RandomAssignment { rows })
}

pub(crate) fn check_same_n<S: Scalar>(
    inst: &Instance,
    prio: &RandomPriority<S>,
) -> Result<(), ModelError> {
    if prio.n() != inst.n() {
        return Err(ModelError::DimensionMismatch { expected: inst.n(), found: prio.n() });
    }
    Ok(())
}

pub(crate) fn uniform_weight<S: Scalar>(count: usize) -> S {
    S::one() / from_count::<S>(count)
}
