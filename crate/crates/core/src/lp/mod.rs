//! Linear programming kernels used by column generation and the pricing bounds.

mod knapsack;
mod simplex;

pub use knapsack::fractional_knapsack;
pub use simplex::{fixed12, solve_lp, Column, LpProblem, LpSolution, LpStatus, RowKind, Simplex, Tolerances};
