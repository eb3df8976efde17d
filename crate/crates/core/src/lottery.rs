//! Lottery mechanisms and decomposition of allocation matrices.

use crate::model::{
    check_same_n, Instance, Lottery, ModelError, RandomAssignment, RandomPriority,
    SimpleAssignment, SimplePriority,
};
use crate::scalar::Scalar;

#[derive(Debug, thiserror::Error)]
pub enum LotteryError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("decomposition failed: {0}")]
    Internal(String),
}

/// Upper bound on the number of deterministic assignments
/// [`bvn_decompose`] emits for an `n x m` matrix.
pub fn bvn_component_bound(m: usize) -> usize {
    (m - 1) * (m - 1) + 1
}

/// Serial dictatorship: agents pick their favorite remaining item in
/// priority order.
pub fn serial_dictatorship(
    inst: &Instance,
    sigma: &SimplePriority,
) -> Result<SimpleAssignment, LotteryError> {
    if sigma.len() != inst.n() {
        return Err(ModelError::DimensionMismatch { expected: inst.n(), found: sigma.len() }.into());
    }
    let mut taken = vec![false; inst.m()];
    let mut items = vec![0usize; inst.n()];
    for &agent in sigma.order() {
        let pick = inst
            .pref_order(agent)
            .iter()
            .copied()
            .find(|&item| !taken[item])
            .expect("at least as many items as agents");
        taken[pick] = true;
        items[agent] = pick;
    }
    Ok(SimpleAssignment::new(items, inst.m())?)
}

/// Random serial dictatorship: one dictatorship per priority order, weighted
/// by that order's probability.
pub fn rsd<S: Scalar>(
    inst: &Instance,
    prio: &RandomPriority<S>,
) -> Result<Lottery<S>, LotteryError> {
    check_same_n(inst, prio)?;
    let mut entries = Vec::with_capacity(prio.entries().len());
    for (sigma, weight) in prio.entries() {
        entries.push((serial_dictatorship(inst, sigma)?, weight.clone()));
    }
    Ok(Lottery::new(entries)?)
}

/// Birkhoff-von-Neumann decomposition: expresses the allocation matrix as a
/// lottery over deterministic assignments. The matrix is padded to a square
/// doubly stochastic one with dummy rows absorbing leftover column mass,
/// perfect matchings on the positive entries are extracted until nothing
/// remains, and the resulting components are reduced until at most
/// `(m - 1)^2 + 1` distinct assignments carry weight.
pub fn bvn_decompose<S: Scalar>(p: &RandomAssignment<S>) -> Result<Lottery<S>, LotteryError> {
    let (n, m) = (p.n(), p.m());
    let mut matrix: Vec<Vec<S>> = (0..n).map(|agent| p.row(agent).to_vec()).collect();
    let mut residual: Vec<S> = (0..m).map(|item| S::one() - p.column_sum(item)).collect();
    for _ in n..m {
        let mut row = vec![S::zero(); m];
        let mut need = S::one();
        for item in 0..m {
            if need.is_zero() {
                break;
            }
            if residual[item].is_zero() {
                continue;
            }
            let take =
                if residual[item] < need { residual[item].clone() } else { need.clone() };
            row[item] = take.clone();
            residual[item] = residual[item].clone() - take.clone();
            need = need - take;
        }
        debug_assert!(need.is_zero(), "column residuals cover every dummy row");
        matrix.push(row);
    }

    let mut match_of_row: Vec<Option<usize>> = vec![None; m];
    let mut match_of_col: Vec<Option<usize>> = vec![None; m];
    for row in 0..m {
        if !augment(&matrix, row, &mut match_of_row, &mut match_of_col) {
            return Err(LotteryError::Internal("no perfect matching on positive entries".into()));
        }
    }

    let mut entries: Vec<(SimpleAssignment, S)> = Vec::new();
    let mut left = S::one();
    while !left.is_zero() {
        let mut theta = left.clone();
        for row in 0..m {
            let col = match_of_row[row].expect("matching is perfect");
            if matrix[row][col] < theta {
                theta = matrix[row][col].clone();
            }
        }
        let items: Vec<usize> =
            (0..n).map(|row| match_of_row[row].expect("matching is perfect")).collect();
        entries.push((SimpleAssignment::new(items, m)?, theta.clone()));
        left = left - theta.clone();

        let mut freed: Vec<usize> = Vec::new();
        for row in 0..m {
            let col = match_of_row[row].expect("matching is perfect");
            matrix[row][col] = matrix[row][col].clone() - theta.clone();
            if matrix[row][col].is_zero() && !left.is_zero() {
                match_of_row[row] = None;
                match_of_col[col] = None;
                freed.push(row);
            }
        }
        for row in freed {
            if match_of_row[row].is_none()
                && !augment(&matrix, row, &mut match_of_row, &mut match_of_col)
            {
                return Err(LotteryError::Internal(
                    "no perfect matching on positive entries".into(),
                ));
            }
        }
    }

    let lottery = Lottery::new(entries)?;
    let bound = bvn_component_bound(m);
    if lottery.entries().len() <= bound {
        return Ok(lottery);
    }
    let reduced = caratheodory_reduce(lottery.entries().to_vec(), n, m, bound)?;
    Ok(Lottery::new(reduced)?)
}

/// Augmenting-path search for Kuhn's matching algorithm, deterministic by
/// scanning columns in index order.
fn augment<S: Scalar>(
    matrix: &[Vec<S>],
    row: usize,
    match_of_row: &mut [Option<usize>],
    match_of_col: &mut [Option<usize>],
) -> bool {
    let m = match_of_col.len();
    let mut visited = vec![false; m];
    try_augment(matrix, row, match_of_row, match_of_col, &mut visited)
}

fn try_augment<S: Scalar>(
    matrix: &[Vec<S>],
    row: usize,
    match_of_row: &mut [Option<usize>],
    match_of_col: &mut [Option<usize>],
    visited: &mut [bool],
) -> bool {
    for col in 0..matrix[row].len() {
        if visited[col] || matrix[row][col].is_zero() {
            continue;
        }
        visited[col] = true;
        let free = match match_of_col[col] {
            None => true,
            Some(other) => try_augment(matrix, other, match_of_row, match_of_col, visited),
        };
        if free {
            match_of_row[row] = Some(col);
            match_of_col[col] = Some(row);
            return true;
        }
    }
    false
}

/// Shrinks a weighted combination of assignments without changing the
/// induced matrix: while more than `bound` components remain, an affine
/// dependence among the assignment indicator vectors is found and used to
/// drive one weight to zero.
fn caratheodory_reduce<S: Scalar>(
    mut entries: Vec<(SimpleAssignment, S)>,
    n: usize,
    m: usize,
    bound: usize,
) -> Result<Vec<(SimpleAssignment, S)>, LotteryError> {
    while entries.len() > bound {
        let lambda = affine_dependence(&entries, n, m)
            .ok_or_else(|| LotteryError::Internal("expected affine dependence".into()))?;
        let mut tau: Option<S> = None;
        for (coeff, (_, weight)) in lambda.iter().zip(&entries) {
            if *coeff > S::zero() {
                let limit = weight.clone() / coeff.clone();
                if tau.as_ref().is_none_or(|t| limit < *t) {
                    tau = Some(limit);
                }
            }
        }
        let tau = tau
            .ok_or_else(|| LotteryError::Internal("dependence has no positive entry".into()))?;
        for ((_, weight), coeff) in entries.iter_mut().zip(&lambda) {
            *weight = weight.clone() - tau.clone() * coeff.clone();
        }
        entries.retain(|(_, weight)| !weight.is_zero());
    }
    Ok(entries)
}

/// A nonzero `lambda` with `sum lambda = 0` and
/// `sum lambda_t . indicator(f_t) = 0`, or `None` if the vectors are
/// affinely independent. Found by Gaussian elimination on the homogeneous
/// system.
fn affine_dependence<S: Scalar>(
    entries: &[(SimpleAssignment, S)],
    n: usize,
    m: usize,
) -> Option<Vec<S>> {
    let cols = entries.len();
    let mut rows: Vec<Vec<S>> = Vec::with_capacity(n * m + 1);
    for agent in 0..n {
        for item in 0..m {
            let row: Vec<S> = entries
                .iter()
                .map(|(f, _)| {
                    if f.item_of(agent) == item {
                        S::one()
                    } else {
                        S::zero()
                    }
                })
                .collect();
            if row.iter().any(|v| !v.is_zero()) {
                rows.push(row);
            }
        }
    }
    rows.push(vec![S::one(); cols]);

    let mut pivot_of_col: Vec<Option<usize>> = vec![None; cols];
    let mut rank = 0usize;
    for col in 0..cols {
        let Some(pivot) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, pivot);
        let factor = rows[rank][col].clone();
        for value in &mut rows[rank] {
            *value = value.clone() / factor.clone();
        }
        for r in 0..rows.len() {
            if r == rank || rows[r][col].is_zero() {
                continue;
            }
            let scale = rows[r][col].clone();
            for c in 0..cols {
                let delta = scale.clone() * rows[rank][c].clone();
                rows[r][c] = rows[r][c].clone() - delta;
            }
        }
        pivot_of_col[col] = Some(rank);
        rank += 1;
    }

    let free = (0..cols).find(|&c| pivot_of_col[c].is_none())?;
    let mut lambda = vec![S::zero(); cols];
    lambda[free] = S::one();
    for col in 0..cols {
        if let Some(row) = pivot_of_col[col] {
            lambda[col] = -rows[row][free].clone();
        }
    }
    Some(lambda)
}
