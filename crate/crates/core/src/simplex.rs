//! Exact two-phase simplex over the crate's scalar types.
//!
//! Small and deliberately simple: dense tableau, Bland's rule in both phases
//! (so the solver never cycles and is fully deterministic), artificial
//! variables for equalities and `>=` rows. Problem sizes in this crate are a
//! few hundred variables at most.

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Relation {
    Eq,
    Le,
    Ge,
}

#[derive(Debug, Clone)]
pub(crate) struct Constraint<S> {
    pub coeffs: Vec<S>,
    pub relation: Relation,
    pub rhs: S,
}

/// `maximize objective . x` subject to the constraints and `x >= 0`.
#[derive(Debug, Clone)]
pub(crate) struct LinearProgram<S> {
    pub vars: usize,
    pub constraints: Vec<Constraint<S>>,
    pub objective: Vec<S>,
}

#[derive(Debug, Clone)]
pub(crate) enum LpResult<S> {
    Optimal { x: Vec<S>, value: S },
    Infeasible(InfeasibilityEvidence<S>),
    Unbounded,
}

/// What remains when phase one cannot clear the artificial variables.
#[derive(Debug, Clone)]
pub(crate) struct InfeasibilityEvidence<S> {
    /// Minimal total constraint violation.
    pub residual: S,
    /// Final tableau rows still carrying a positive artificial basic
    /// variable: coefficients over the original variables plus the
    /// unsatisfied right-hand side.
    pub rows: Vec<(Vec<S>, S)>,
}

struct Tableau<S> {
    rows: Vec<Vec<S>>,
    rhs: Vec<S>,
    cost: Vec<S>,
    cost_rhs: S,
    basis: Vec<usize>,
    cols: usize,
}

impl<S: Scalar> Tableau<S> {
    fn pivot(&mut self, row: usize, col: usize) {
        let factor = self.rows[row][col].clone();
        for value in &mut self.rows[row] {
            *value = value.clone() / factor.clone();
        }
        self.rhs[row] = self.rhs[row].clone() / factor;
        for r in 0..self.rows.len() {
            if r == row {
                continue;
            }
            let scale = self.rows[r][col].clone();
            if scale.is_zero() {
                continue;
            }
            for c in 0..self.cols {
                let delta = scale.clone() * self.rows[row][c].clone();
                self.rows[r][c] = self.rows[r][c].clone() - delta;
            }
            self.rhs[r] = self.rhs[r].clone() - scale * self.rhs[row].clone();
        }
        let scale = self.cost[col].clone();
        if !scale.is_zero() {
            for c in 0..self.cols {
                let delta = scale.clone() * self.rows[row][c].clone();
                self.cost[c] = self.cost[c].clone() - delta;
            }
            self.cost_rhs = self.cost_rhs.clone() - scale * self.rhs[row].clone();
        }
        self.basis[row] = col;
    }

    /// Minimizes the current cost row with Bland's rule. Returns false when
    /// the problem is unbounded below.
    fn run(&mut self, usable_cols: usize) -> bool {
        loop {
            let Some(entering) = (0..usable_cols).find(|&c| self.cost[c] < S::zero()) else {
                return true;
            };
            let mut leaving: Option<usize> = None;
            let mut best: Option<S> = None;
            for r in 0..self.rows.len() {
                if self.rows[r][entering] > S::zero() {
                    let bound = self.rhs[r].clone() / self.rows[r][entering].clone();
                    let better = match &best {
                        None => true,
                        Some(current) => {
                            bound < *current
                                || (bound == *current
                                    && self.basis[r] < self.basis[leaving.unwrap()])
                        }
                    };
                    if better {
                        best = Some(bound);
                        leaving = Some(r);
                    }
                }
            }
            match leaving {
                Some(row) => self.pivot(row, entering),
                None => return false,
            }
        }
    }
}

pub(crate) fn solve<S: Scalar>(lp: &LinearProgram<S>) -> LpResult<S> {
    assert_eq!(lp.objective.len(), lp.vars);
    let slack_count =
        lp.constraints.iter().filter(|c| c.relation != Relation::Eq).count();

    // Flip rows with negative rhs first; that can exchange `<=` and `>=`.
    let mut coeffs: Vec<Vec<S>> = Vec::with_capacity(lp.constraints.len());
    let mut relations: Vec<Relation> = Vec::with_capacity(lp.constraints.len());
    let mut rhs: Vec<S> = Vec::with_capacity(lp.constraints.len());
    for con in &lp.constraints {
        assert_eq!(con.coeffs.len(), lp.vars);
        if con.rhs < S::zero() {
            coeffs.push(con.coeffs.iter().map(|v| -v.clone()).collect());
            relations.push(match con.relation {
                Relation::Eq => Relation::Eq,
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
            });
            rhs.push(-con.rhs.clone());
        } else {
            coeffs.push(con.coeffs.clone());
            relations.push(con.relation);
            rhs.push(con.rhs.clone());
        }
    }

    let n_rows = coeffs.len();
    let slack_start = lp.vars;
    let artificial_start = slack_start + slack_count;
    let artificials =
        relations.iter().filter(|&&rel| rel != Relation::Le).count();
    let cols = artificial_start + artificials;

    let mut rows = vec![vec![S::zero(); cols]; n_rows];
    let mut basis = vec![0usize; n_rows];
    let mut next_slack = slack_start;
    let mut next_artificial = artificial_start;
    for r in 0..n_rows {
        rows[r][..lp.vars].clone_from_slice(&coeffs[r]);
        match relations[r] {
            Relation::Le => {
                rows[r][next_slack] = S::one();
                basis[r] = next_slack;
                next_slack += 1;
            }
            Relation::Ge => {
                rows[r][next_slack] = -S::one();
                next_slack += 1;
                rows[r][next_artificial] = S::one();
                basis[r] = next_artificial;
                next_artificial += 1;
            }
            Relation::Eq => {
                rows[r][next_artificial] = S::one();
                basis[r] = next_artificial;
                next_artificial += 1;
            }
        }
    }

    // Phase one: minimize the sum of artificial variables.
    let mut cost = vec![S::zero(); cols];
    for c in artificial_start..cols {
        cost[c] = S::one();
    }
    let mut tab = Tableau { rows, rhs, cost, cost_rhs: S::zero(), basis, cols };
    for r in 0..n_rows {
        if tab.basis[r] >= artificial_start {
            // Price the basic artificial out of the cost row.
            for c in 0..cols {
                tab.cost[c] = tab.cost[c].clone() - tab.rows[r][c].clone();
            }
            tab.cost_rhs = tab.cost_rhs.clone() - tab.rhs[r].clone();
        }
    }
    let bounded = tab.run(cols);
    debug_assert!(bounded, "phase one is bounded below by zero");
    let residual = -tab.cost_rhs.clone();
    if residual > S::zero() {
        let rows = (0..n_rows)
            .filter(|&r| tab.basis[r] >= artificial_start && tab.rhs[r] > S::zero())
            .map(|r| (tab.rows[r][..lp.vars].to_vec(), tab.rhs[r].clone()))
            .collect();
        return LpResult::Infeasible(InfeasibilityEvidence { residual, rows });
    }

    // Drive zero-valued artificials out of the basis so phase two can ignore
    // the artificial columns entirely.
    for r in 0..n_rows {
        if tab.basis[r] >= artificial_start {
            if let Some(c) = (0..artificial_start).find(|&c| !tab.rows[r][c].is_zero()) {
                tab.pivot(r, c);
            }
        }
    }
    let keep: Vec<usize> = (0..n_rows).filter(|&r| tab.basis[r] < artificial_start).collect();
    if keep.len() < n_rows {
        tab.rows = keep.iter().map(|&r| tab.rows[r].clone()).collect();
        tab.rhs = keep.iter().map(|&r| tab.rhs[r].clone()).collect();
        tab.basis = keep.iter().map(|&r| tab.basis[r]).collect();
    }

    // Phase two: minimize the negated objective over original plus slack
    // columns.
    tab.cost = vec![S::zero(); cols];
    for c in 0..lp.vars {
        tab.cost[c] = -lp.objective[c].clone();
    }
    tab.cost_rhs = S::zero();
    for r in 0..tab.rows.len() {
        let b = tab.basis[r];
        let scale = tab.cost[b].clone();
        if !scale.is_zero() {
            for c in 0..cols {
                let delta = scale.clone() * tab.rows[r][c].clone();
                tab.cost[c] = tab.cost[c].clone() - delta;
            }
            tab.cost_rhs = tab.cost_rhs.clone() - scale * tab.rhs[r].clone();
        }
    }
    if !tab.run(artificial_start) {
        return LpResult::Unbounded;
    }

    let mut x = vec![S::zero(); lp.vars];
    for r in 0..tab.rows.len() {
        if tab.basis[r] < lp.vars {
            x[tab.basis[r]] = tab.rhs[r].clone();
        }
    }
    let value = lp
        .objective
        .iter()
        .zip(&x)
        .fold(S::zero(), |acc, (c, v)| acc + c.clone() * v.clone());
    LpResult::Optimal { x, value }
}
