//! MPVC problem container, feasibility residuals, and active index-set
//! classification at a point.

mod file;
pub mod fixtures;

use crate::expr::{self, Expr, ExprError, VarSpace};
use crate::penalty::{dist_omega, OmegaPoint};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

/// Activity tolerance used when none is given: a value v is "zero" iff
/// |v| <= tol, and "positive" iff v > tol.
pub const DEFAULT_ACTIVE_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("an MPVC needs at least one vanishing-constraint pair")]
    NoVanishingConstraints,
    #[error("constraint expressions must be smooth, but {family}[{index}] uses abs/min/max")]
    NonsmoothConstraint { family: &'static str, index: usize },
    #[error("expression references variable index {index}, but the problem has {dim} variables")]
    VarOutOfRange { index: usize, dim: usize },
    #[error("point has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point is infeasible: residual {residual:.6e} exceeds tolerance {tol:.1e}")]
    InfeasiblePoint { residual: f64, tol: f64 },
    #[error("problem file, line {line}: {msg}")]
    File { line: usize, msg: String },
}

/// A mathematical program with vanishing constraints:
///
/// ```text
/// min f(x)  s.t.  g_i(x) <= 0,  h_j(x) = 0,
///                 H_i(x) >= 0,  G_i(x) * H_i(x) <= 0
/// ```
///
/// The equality family is indexed by a single count `l`, used consistently
/// for both the constraint list and the multiplier vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpvcProblem {
    name: String,
    vars: VarSpace,
    objective: Expr,
    g: Vec<Expr>,
    h: Vec<Expr>,
    vc: Vec<(Expr, Expr)>,
}

impl MpvcProblem {
    /// Validates and builds a problem. Requires at least one vanishing pair;
    /// constraints must be smooth; every expression must fit the variable
    /// space.
    pub fn new(
        name: impl Into<String>,
        vars: VarSpace,
        objective: Expr,
        g: Vec<Expr>,
        h: Vec<Expr>,
        vc: Vec<(Expr, Expr)>,
    ) -> Result<Self, ModelError> {
        if vc.is_empty() {
            return Err(ModelError::NoVanishingConstraints);
        }
        let dim = vars.dim();
        let check_dim = |e: &Expr| -> Result<(), ModelError> {
            match e.max_var_index() {
                Some(i) if i >= dim => Err(ModelError::VarOutOfRange { index: i, dim }),
                _ => Ok(()),
            }
        };
        check_dim(&objective)?;
        for (family, exprs) in [("g", &g), ("h", &h)] {
            for (i, e) in exprs.iter().enumerate() {
                check_dim(e)?;
                if e.contains_nonsmooth() {
                    return Err(ModelError::NonsmoothConstraint { family, index: i });
                }
            }
        }
        for (i, (gi, hi)) in vc.iter().enumerate() {
            for (family, e) in [("G", gi), ("H", hi)] {
                check_dim(e)?;
                if e.contains_nonsmooth() {
                    return Err(ModelError::NonsmoothConstraint { family, index: i });
                }
            }
        }
        Ok(MpvcProblem {
            name: name.into(),
            vars,
            objective,
            g,
            h,
            vc,
        })
    }

    /// Parses the problem file format (see the crate README).
    pub fn from_str(text: &str) -> Result<Self, ModelError> {
        file::parse_problem(text)
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| ModelError::File {
            line: 0,
            msg: format!("{}: {e}", path.as_ref().display()),
        })?;
        file::parse_problem(&text)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn vars(&self) -> &VarSpace {
        &self.vars
    }

    pub fn dim(&self) -> usize {
        self.vars.dim()
    }

    pub fn objective(&self) -> &Expr {
        &self.objective
    }

    pub fn ineq(&self) -> &[Expr] {
        &self.g
    }

    pub fn eq(&self) -> &[Expr] {
        &self.h
    }

    pub fn vc(&self) -> &[(Expr, Expr)] {
        &self.vc
    }

    /// Number of inequality constraints m.
    pub fn num_ineq(&self) -> usize {
        self.g.len()
    }

    /// Number of equality constraints l.
    pub fn num_eq(&self) -> usize {
        self.h.len()
    }

    /// Number of vanishing-constraint pairs q.
    pub fn num_vc(&self) -> usize {
        self.vc.len()
    }

    fn check_point(&self, x: &[f64]) -> Result<(), ModelError> {
        if x.len() != self.dim() {
            return Err(ModelError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> Result<f64, ModelError> {
        self.check_point(x)?;
        Ok(expr::eval(&self.objective, x)?)
    }

    /// Values of all vanishing pairs at `x`, as (G_i, H_i) points.
    pub fn vc_values(&self, x: &[f64]) -> Result<Vec<OmegaPoint>, ModelError> {
        self.check_point(x)?;
        self.vc
            .iter()
            .map(|(gi, hi)| {
                Ok(OmegaPoint::new(
                    expr::eval(gi, x)?,
                    expr::eval(hi, x)?,
                ))
            })
            .collect()
    }
}

/// Constraint gradients at a point, one row per constraint function.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub g: Vec<Vec<f64>>,
    pub h: Vec<Vec<f64>>,
    /// Per pair: (grad G_i, grad H_i).
    pub vc: Vec<(Vec<f64>, Vec<f64>)>,
}

/// Evaluates every constraint gradient at `x`.
pub fn gradients(prob: &MpvcProblem, x: &[f64]) -> Result<Gradients, ModelError> {
    prob.check_point(x)?;
    let g = prob
        .ineq()
        .iter()
        .map(|e| Ok(expr::grad(e, x)?))
        .collect::<Result<_, ModelError>>()?;
    let h = prob
        .eq()
        .iter()
        .map(|e| Ok(expr::grad(e, x)?))
        .collect::<Result<_, ModelError>>()?;
    let vc = prob
        .vc()
        .iter()
        .map(|(gi, hi)| Ok((expr::grad(gi, x)?, expr::grad(hi, x)?)))
        .collect::<Result<_, ModelError>>()?;
    Ok(Gradients { g, h, vc })
}

/// Active index-set partition at a feasible point. Indices are zero-based;
/// the `Display` rendering is one-based to match the usual notation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexSets {
    /// Active inequality constraints: |g_i| <= tol.
    #[serde(rename = "I_g")]
    pub i_g: BTreeSet<usize>,
    /// Pairs with H_i > tol.
    #[serde(rename = "I_+")]
    pub i_plus: BTreeSet<usize>,
    /// Pairs with |H_i| <= tol.
    #[serde(rename = "I_0")]
    pub i_zero: BTreeSet<usize>,
    /// H_i > tol and |G_i| <= tol.
    #[serde(rename = "I_+0")]
    pub i_plus_zero: BTreeSet<usize>,
    /// H_i > tol and G_i < -tol.
    #[serde(rename = "I_+-")]
    pub i_plus_minus: BTreeSet<usize>,
    /// |H_i| <= tol and G_i > tol.
    #[serde(rename = "I_0+")]
    pub i_zero_plus: BTreeSet<usize>,
    /// |H_i| <= tol and G_i < -tol.
    #[serde(rename = "I_0-")]
    pub i_zero_minus: BTreeSet<usize>,
    /// Biactive pairs: |H_i| <= tol and |G_i| <= tol.
    #[serde(rename = "I_00")]
    pub i_biactive: BTreeSet<usize>,
    pub tol_active: f64,
}

impl fmt::Display for IndexSets {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn set(f: &mut fmt::Formatter<'_>, name: &str, s: &BTreeSet<usize>) -> fmt::Result {
            write!(f, "{name} = {{")?;
            for (k, i) in s.iter().enumerate() {
                if k > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", i + 1)?;
            }
            write!(f, "}}")
        }
        set(f, "I_g", &self.i_g)?;
        write!(f, "  ")?;
        set(f, "I_+", &self.i_plus)?;
        write!(f, "  ")?;
        set(f, "I_0", &self.i_zero)?;
        write!(f, "  ")?;
        set(f, "I_+0", &self.i_plus_zero)?;
        write!(f, "  ")?;
        set(f, "I_+-", &self.i_plus_minus)?;
        write!(f, "  ")?;
        set(f, "I_0+", &self.i_zero_plus)?;
        write!(f, "  ")?;
        set(f, "I_0-", &self.i_zero_minus)?;
        write!(f, "  ")?;
        set(f, "I_00", &self.i_biactive)
    }
}

/// Per-family feasibility residuals at a point; `total` sums every entry and
/// vanishes exactly on the feasible set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub g_plus: Vec<f64>,
    pub h_abs: Vec<f64>,
    pub vc_dist: Vec<f64>,
    pub total: f64,
}

/// Evaluates the aggregated l1 constraint residual at `x`.
pub fn residuals(prob: &MpvcProblem, x: &[f64]) -> Result<Residuals, ModelError> {
    prob.check_point(x)?;
    let g_plus: Vec<f64> = prob
        .ineq()
        .iter()
        .map(|e| Ok(expr::eval(e, x)?.max(0.0)))
        .collect::<Result<_, ModelError>>()?;
    let h_abs: Vec<f64> = prob
        .eq()
        .iter()
        .map(|e| Ok(expr::eval(e, x)?.abs()))
        .collect::<Result<_, ModelError>>()?;
    let vc_dist: Vec<f64> = prob
        .vc_values(x)?
        .into_iter()
        .map(dist_omega)
        .collect();
    let total = g_plus.iter().sum::<f64>() + h_abs.iter().sum::<f64>() + vc_dist.iter().sum::<f64>();
    Ok(Residuals {
        g_plus,
        h_abs,
        vc_dist,
        total,
    })
}

/// True iff the total residual at `x` is at most `tol`.
pub fn is_feasible(prob: &MpvcProblem, x: &[f64], tol: f64) -> Result<bool, ModelError> {
    Ok(residuals(prob, x)?.total <= tol)
}

/// Classifies the active index sets at a point feasible up to `tol_active`.
///
/// Infeasible points are refused: the partition is only meaningful on the
/// feasible set.
pub fn classify(
    prob: &MpvcProblem,
    x: &[f64],
    tol_active: f64,
) -> Result<IndexSets, ModelError> {
    let res = residuals(prob, x)?;
    if res.total > tol_active {
        return Err(ModelError::InfeasiblePoint {
            residual: res.total,
            tol: tol_active,
        });
    }
    let tol = tol_active;
    let mut sets = IndexSets {
        i_g: BTreeSet::new(),
        i_plus: BTreeSet::new(),
        i_zero: BTreeSet::new(),
        i_plus_zero: BTreeSet::new(),
        i_plus_minus: BTreeSet::new(),
        i_zero_plus: BTreeSet::new(),
        i_zero_minus: BTreeSet::new(),
        i_biactive: BTreeSet::new(),
        tol_active,
    };
    for (i, e) in prob.ineq().iter().enumerate() {
        if expr::eval(e, x)?.abs() <= tol {
            sets.i_g.insert(i);
        }
    }
    for (i, pair) in prob.vc_values(x)?.into_iter().enumerate() {
        let (a, b) = (pair.a, pair.b);
        if b > tol {
            sets.i_plus.insert(i);
            if a.abs() <= tol {
                sets.i_plus_zero.insert(i);
            } else {
                sets.i_plus_minus.insert(i);
            }
        } else if b.abs() <= tol {
            sets.i_zero.insert(i);
            if a > tol {
                sets.i_zero_plus.insert(i);
            } else if a < -tol {
                sets.i_zero_minus.insert(i);
            } else {
                sets.i_biactive.insert(i);
            }
        } else {
            return Err(ModelError::InfeasiblePoint {
                residual: res.total,
                tol: tol_active,
            });
        }
    }
    Ok(sets)
}
