//! Random assignment under uncertain priorities.
//!
//! The crate models one-sided matching problems where agents have strict
//! preferences over items and the priority order over agents is itself
//! random. It provides:
//!
//! - exact simultaneous-eating mechanisms ([`eating`]): probabilistic serial,
//!   cycle elimination over the stochastic-dominance graph, and unit-time
//!   eating driven by rank distributions;
//! - lottery mechanisms and decompositions ([`lottery`]): serial dictatorship,
//!   random serial dictatorship, and Birkhoff-von-Neumann decomposition;
//! - fairness audits ([`audit`]): ordinal efficiency, stochastic envy-freeness,
//!   lottery envy-freeness and its one-shot relaxation, and proportionality,
//!   each reporting machine-checkable witnesses;
//! - an exact feasibility solver for lottery envy-freeness ([`lefsolve`]);
//! - a school-admission simulation with biased observed scores and posterior
//!   debiasing ([`admission`]).
//!
//! All probability mass is carried by a [`Scalar`] type, by default the exact
//! [`Rational`], so algorithm outputs and audit verdicts are never subject to
//! rounding.

pub mod admission;
pub mod audit;
pub mod eating;
pub mod io;
pub mod lefsolve;
pub mod lottery;
pub mod model;
pub mod scalar;

mod simplex;

pub use model::{
    assignment_from_lottery, baseline_allocation, priority_likelihoods, rank_distribution,
    rank_distributions, Instance, Lottery, ModelError, RandomAssignment, RandomPriority,
    SimpleAssignment, SimplePriority,
};
pub use scalar::Scalar;

/// Exact rational scalar used by default for all probability mass.
pub type Rational = num_rational::BigRational;

/// Convenience constructor for an exact rational from machine integers.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(num.into(), den.into())
}

#[cfg(test)]
pub(crate) mod testfix;
