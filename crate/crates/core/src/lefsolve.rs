//! Exact feasibility solver for lottery envy-freeness.
//!
//! Given an allocation matrix, the solver asks whether any lottery over the
//! matrix's support induces it while granting every ordered pair of agents
//! its outranking probability: `Pr[f(i) better than f(j) for i]` at least
//! `Pr[i outranks j]`. Restricting to support-consistent assignments is
//! lossless, because any inducing lottery can only use assignments whose
//! cells carry positive probability.

use std::fmt;

use crate::audit::check_lef_lottery;
use crate::model::{
    assignment_from_lottery, priority_likelihoods, Instance, Lottery, ModelError,
    RandomAssignment, RandomPriority, SimpleAssignment,
};
use crate::scalar::Scalar;
use crate::simplex::{self, Constraint, LinearProgram, LpResult, Relation};

/// Agent count above which the solver refuses to enumerate support
/// assignments.
pub const AGENT_LIMIT: usize = 8;

#[derive(Debug, thiserror::Error)]
pub enum LefError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("feasibility solving is limited to {limit} agents, got {n}")]
    TooLarge { n: usize, limit: usize },
    #[error("internal solver error: {0}")]
    Internal(String),
}

/// The linear feasibility program behind [`lef_feasible`], exposed for
/// inspection: the candidate assignments and the pairwise guarantees their
/// lottery weights must meet.
#[derive(Debug, Clone)]
pub struct LefProgram<S: Scalar> {
    pub assignments: Vec<SimpleAssignment>,
    /// `(i, j, q)`: agent `i` outranks agent `j` with probability `q > 0`.
    pub pairs: Vec<(usize, usize, S)>,
}

/// Proof that no inducing lottery meets the guarantees: the residual
/// violation the solver could not clear and the final tableau rows that
/// retain it.
#[derive(Debug, Clone)]
pub struct LefCertificate<S: Scalar> {
    pub residual: S,
    pub rows: Vec<String>,
}

impl<S: Scalar> fmt::Display for LefCertificate<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "infeasible: minimal total constraint violation {} over weights w0..; \
             unsatisfiable tableau rows:",
            self.residual
        )?;
        for row in &self.rows {
            writeln!(f, "  {row}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum LefOutcome<S: Scalar> {
    /// A lottery inducing the matrix and meeting every pairwise guarantee.
    Feasible(Lottery<S>),
    Infeasible(LefCertificate<S>),
}

/// All deterministic assignments that stay within the support of `p`, in
/// lexicographic agent-by-agent order.
pub fn enumerate_support_assignments<S: Scalar>(
    p: &RandomAssignment<S>,
) -> Result<Vec<SimpleAssignment>, LefError> {
    let (n, m) = (p.n(), p.m());
    if n > AGENT_LIMIT {
        return Err(LefError::TooLarge { n, limit: AGENT_LIMIT });
    }
    let mut result = Vec::new();
    let mut items = vec![0usize; n];
    let mut used = vec![false; m];
    fn descend<S: Scalar>(
        p: &RandomAssignment<S>,
        agent: usize,
        items: &mut Vec<usize>,
        used: &mut Vec<bool>,
        result: &mut Vec<SimpleAssignment>,
    ) {
        if agent == p.n() {
            result.push(
                SimpleAssignment::new(items.clone(), p.m()).expect("support choice is injective"),
            );
            return;
        }
        for item in 0..p.m() {
            if used[item] || p.entry(agent, item).is_zero() {
                continue;
            }
            used[item] = true;
            items[agent] = item;
            descend(p, agent + 1, items, used, result);
            used[item] = false;
        }
    }
    descend(p, 0, &mut items, &mut used, &mut result);
    Ok(result)
}

/// Builds the feasibility program for `p` under `prio`.
pub fn lef_program<S: Scalar>(
    p: &RandomAssignment<S>,
    prio: &RandomPriority<S>,
    inst: &Instance,
) -> Result<LefProgram<S>, LefError> {
    if p.n() != inst.n() || prio.n() != inst.n() {
        return Err(ModelError::DimensionMismatch { expected: inst.n(), found: p.n() }.into());
    }
    if p.m() != inst.m() {
        return Err(ModelError::DimensionMismatch { expected: inst.m(), found: p.m() }.into());
    }
    let assignments = enumerate_support_assignments(p)?;
    let w = priority_likelihoods(prio);
    let mut pairs = Vec::new();
    for i in 0..inst.n() {
        for j in 0..inst.n() {
            if i != j && !w[i][j].is_zero() {
                pairs.push((i, j, w[i][j].clone()));
            }
        }
    }
    Ok(LefProgram { assignments, pairs })
}

/// Decides whether any lottery induces `p` and satisfies lottery
/// envy-freeness under `prio`. Feasible outcomes carry a concrete lottery,
/// re-validated against both requirements before being returned.
pub fn lef_feasible<S: Scalar>(
    p: &RandomAssignment<S>,
    prio: &RandomPriority<S>,
    inst: &Instance,
) -> Result<LefOutcome<S>, LefError> {
    let program = lef_program(p, prio, inst)?;
    let vars = program.assignments.len();
    let mut constraints = Vec::new();
    for agent in 0..inst.n() {
        for item in 0..inst.m() {
            if p.entry(agent, item).is_zero() {
                continue;
            }
            let coeffs: Vec<S> = program
                .assignments
                .iter()
                .map(|f| if f.item_of(agent) == item { S::one() } else { S::zero() })
                .collect();
            constraints.push(Constraint {
                coeffs,
                relation: Relation::Eq,
                rhs: p.entry(agent, item).clone(),
            });
        }
    }
    for (i, j, bound) in &program.pairs {
        let coeffs: Vec<S> = program
            .assignments
            .iter()
            .map(|f| {
                if inst.prefers(*i, f.item_of(*i), f.item_of(*j)) {
                    S::one()
                } else {
                    S::zero()
                }
            })
            .collect();
        constraints.push(Constraint { coeffs, relation: Relation::Ge, rhs: bound.clone() });
    }

    let lp = LinearProgram { vars, constraints, objective: vec![S::zero(); vars] };
    match simplex::solve(&lp) {
        LpResult::Optimal { x, .. } => {
            let entries: Vec<(SimpleAssignment, S)> = program
                .assignments
                .into_iter()
                .zip(x)
                .filter(|(_, weight)| !weight.is_zero())
                .collect();
            let lottery = Lottery::new(entries).map_err(|e| {
                LefError::Internal(format!("solver lottery failed validation: {e}"))
            })?;
            if assignment_from_lottery(&lottery) != *p {
                return Err(LefError::Internal("solver lottery does not induce the input".into()));
            }
            let report = check_lef_lottery(&lottery, prio, inst)
                .map_err(|e| LefError::Internal(format!("witness audit failed: {e}")))?;
            if !report.passed() {
                return Err(LefError::Internal("solver lottery fails the pairwise audit".into()));
            }
            Ok(LefOutcome::Feasible(lottery))
        }
        LpResult::Infeasible(evidence) => {
            let rows = evidence
                .rows
                .iter()
                .map(|(coeffs, rhs)| render_row(coeffs, rhs))
                .collect();
            Ok(LefOutcome::Infeasible(LefCertificate { residual: evidence.residual, rows }))
        }
        LpResult::Unbounded => {
            Err(LefError::Internal("feasibility program cannot be unbounded".into()))
        }
    }
}

fn render_row<S: Scalar>(coeffs: &[S], rhs: &S) -> String {
    let mut parts: Vec<String> = Vec::new();
    for (k, coeff) in coeffs.iter().enumerate() {
        if coeff.is_zero() {
            continue;
        }
        if coeff.is_one() {
            parts.push(format!("w{k}"));
        } else {
            parts.push(format!("{coeff}*w{k}"));
        }
    }
    let lhs = if parts.is_empty() { "0".to_string() } else { parts.join(" + ") };
    format!("{lhs} = {rhs}")
}
