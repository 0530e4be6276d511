//! Toolkit for mathematical programs with vanishing constraints (MPVC):
//!
//! ```text
//! min f(x)   s.t.  g(x) <= 0,  h(x) = 0,  H_i(x) >= 0,  G_i(x) H_i(x) <= 0
//! ```
//!
//! The crate models such programs over an expression DSL, evaluates the
//! tailored and classical l1 exact penalty functions, certifies or refutes
//! constraint qualifications at feasible points via rank tests and small
//! linear programs, probes tangent and linearized cones numerically, and runs
//! empirical audits (error bounds, penalty exactness sweeps, implication-chain
//! checks) on concrete instances.

pub mod cones;
pub mod cq;
pub mod empirics;
pub mod expr;
pub mod model;
pub mod numerics;
pub mod penalty;
pub mod solver;

pub use expr::{Expr, ExprError, VarSpace};
pub use model::{IndexSets, MpvcProblem, Residuals};
pub use penalty::{OmegaPoint, PenaltyValue};
