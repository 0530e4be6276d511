//! Cone machinery for the vanishing-constraint geometry: the tangent cone of
//! Ω, the piecewise limiting normal cone, two linearized cones of the
//! feasible set, and a numerical membership probe for the true tangent cone.

use crate::model::{self, IndexSets, ModelError, MpvcProblem, DEFAULT_ACTIVE_TOL};
use crate::penalty::OmegaPoint;
use crate::solver;
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConesError {
    #[error("base point ({a}, {b}) lies outside the vanishing-constraint set")]
    BaseNotInOmega { a: f64, b: f64 },
    #[error("direction has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("direction is zero")]
    ZeroDirection,
    #[error("probe base point is infeasible (residual {0:.3e})")]
    InfeasibleBase(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Tangent-cone membership for Ω = {(a, b) : b >= 0, ab <= 0} at `base`,
/// with `a` the G-value and `b` the H-value.
///
/// The per-case table, derived from the definition and validated against the
/// arc-feasibility oracle in the tests:
///
/// | base              | T_Omega(base)                  |
/// |-------------------|--------------------------------|
/// | a < 0, b > 0      | all of R^2                     |
/// | a = 0, b > 0      | d_a <= 0                       |
/// | a < 0, b = 0      | d_b >= 0                       |
/// | a > 0, b = 0      | d_b = 0                        |
/// | a = 0, b = 0      | d_b >= 0 and d_a * d_b <= 0    |
///
/// Base classification uses the activity tolerance; the direction tests are
/// exact.
pub fn in_omega_tangent(base: OmegaPoint, d: [f64; 2]) -> Result<bool, ConesError> {
    let tol = DEFAULT_ACTIVE_TOL;
    if !base.in_omega(tol) {
        return Err(ConesError::BaseNotInOmega { a: base.a, b: base.b });
    }
    let (a, b) = (base.a, base.b);
    if b > tol {
        if a < -tol {
            Ok(true)
        } else {
            // a is active (|a| <= tol): locally {a <= 0}.
            Ok(d[0] <= 0.0)
        }
    } else {
        // b active.
        if a < -tol {
            Ok(d[1] >= 0.0)
        } else if a > tol {
            Ok(d[1] == 0.0)
        } else {
            Ok(d[1] >= 0.0 && d[0] * d[1] <= 0.0)
        }
    }
}

/// Sign pattern of the base point in the normal-cone table, written in the
/// table's own (first, second) order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormalConeCase {
    /// first > 0, second < 0
    PosNeg,
    /// first > 0, second = 0
    PosZero,
    /// first = 0, second = 0
    ZeroZero,
    /// first = 0, second < 0
    ZeroNeg,
    /// first = 0, second > 0
    ZeroPos,
}

/// One branch of the piecewise limiting normal cone, with a membership
/// predicate on normal vectors (xi, zeta).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalConeBranch {
    pub case: NormalConeCase,
    /// Human-readable constraint on (xi, zeta).
    pub constraint: String,
}

impl NormalConeBranch {
    /// Tests (xi, zeta) against the branch constraints, with |v| <= tol
    /// meaning v = 0.
    pub fn contains(&self, xi: f64, zeta: f64, tol: f64) -> bool {
        match self.case {
            NormalConeCase::PosNeg => xi.abs() <= tol && zeta.abs() <= tol,
            NormalConeCase::PosZero => xi.abs() <= tol && zeta >= -tol,
            NormalConeCase::ZeroZero => zeta >= -tol && (xi * zeta).abs() <= tol,
            NormalConeCase::ZeroNeg => xi <= tol && zeta.abs() <= tol,
            NormalConeCase::ZeroPos => zeta.abs() <= tol,
        }
    }
}

/// Branch of the limiting normal cone of the vanishing-constraint set at the
/// pair value `(h, g)`.
///
/// The piecewise table is parametrized with the H-value first, i.e. over
/// {(a, b) : a >= 0, ab <= 0}; `xi` pairs with the H-component and `zeta`
/// with the G-component of a normal vector. Callers holding a `(G, H)` pair
/// therefore pass `(h, g)` here. Errors if `(h, g)` violates `h >= 0` or
/// `h*g <= 0` beyond the activity tolerance.
pub fn normal_cone_omega(h: f64, g: f64) -> Result<NormalConeBranch, ConesError> {
    let tol = DEFAULT_ACTIVE_TOL;
    if h < -tol || h * g > tol {
        return Err(ConesError::BaseNotInOmega { a: h, b: g });
    }
    let (case, constraint) = if h > tol {
        if g < -tol {
            (NormalConeCase::PosNeg, "xi = 0, zeta = 0")
        } else if g.abs() <= tol {
            (NormalConeCase::PosZero, "xi = 0, zeta >= 0")
        } else {
            return Err(ConesError::BaseNotInOmega { a: h, b: g });
        }
    } else if g > tol {
        (NormalConeCase::ZeroPos, "xi in R, zeta = 0")
    } else if g < -tol {
        (NormalConeCase::ZeroNeg, "xi <= 0, zeta = 0")
    } else {
        (NormalConeCase::ZeroZero, "zeta >= 0, xi * zeta = 0")
    };
    Ok(NormalConeBranch {
        case,
        constraint: constraint.to_string(),
    })
}

/// A linear condition of a linearized cone that a direction violated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeViolation {
    pub family: String,
    pub index: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_dim(prob: &MpvcProblem, d: &[f64]) -> Result<(), ConesError> {
    if d.len() != prob.dim() {
        return Err(ConesError::DimensionMismatch {
            expected: prob.dim(),
            got: d.len(),
        });
    }
    Ok(())
}

/// First violated condition of the MPVC-linearized cone at `x`, or `None`
/// when `d` is a member. All comparisons are exact against zero.
pub fn linearized_mpvc_violation(
    prob: &MpvcProblem,
    x: &[f64],
    sets: &IndexSets,
    d: &[f64],
) -> Result<Option<ConeViolation>, ConesError> {
    check_dim(prob, d)?;
    let grads = model::gradients(prob, x)?;
    for &i in &sets.i_g {
        if dot(&grads.g[i], d) > 0.0 {
            return Ok(Some(ConeViolation {
                family: "grad_g.d <= 0".into(),
                index: i,
            }));
        }
    }
    for (j, gh) in grads.h.iter().enumerate() {
        if dot(gh, d) != 0.0 {
            return Ok(Some(ConeViolation {
                family: "grad_h.d = 0".into(),
                index: j,
            }));
        }
    }
    for &i in &sets.i_zero_plus {
        if dot(&grads.vc[i].1, d) != 0.0 {
            return Ok(Some(ConeViolation {
                family: "grad_H.d = 0".into(),
                index: i,
            }));
        }
    }
    for &i in sets.i_biactive.iter().chain(&sets.i_zero_minus) {
        if dot(&grads.vc[i].1, d) < 0.0 {
            return Ok(Some(ConeViolation {
                family: "grad_H.d >= 0".into(),
                index: i,
            }));
        }
    }
    for &i in &sets.i_plus_zero {
        if dot(&grads.vc[i].0, d) > 0.0 {
            return Ok(Some(ConeViolation {
                family: "grad_G.d <= 0".into(),
                index: i,
            }));
        }
    }
    Ok(None)
}

/// Membership of `d` in the MPVC-linearized cone at `x`.
pub fn in_linearized_mpvc(
    prob: &MpvcProblem,
    x: &[f64],
    sets: &IndexSets,
    d: &[f64],
) -> Result<bool, ConesError> {
    Ok(linearized_mpvc_violation(prob, x, sets, d)?.is_none())
}

/// First violated condition of the product-form linearized cone
/// {d : grad F.d in T_Delta(F(x))}, which adds the biactive coupling
/// (grad G.d)(grad H.d) <= 0 on top of the MPVC-linearized conditions.
pub fn linearized_product_violation(
    prob: &MpvcProblem,
    x: &[f64],
    sets: &IndexSets,
    d: &[f64],
) -> Result<Option<ConeViolation>, ConesError> {
    check_dim(prob, d)?;
    let grads = model::gradients(prob, x)?;
    for &i in &sets.i_g {
        if dot(&grads.g[i], d) > 0.0 {
            return Ok(Some(ConeViolation {
                family: "grad_g.d <= 0".into(),
                index: i,
            }));
        }
    }
    for (j, gh) in grads.h.iter().enumerate() {
        if dot(gh, d) != 0.0 {
            return Ok(Some(ConeViolation {
                family: "grad_h.d = 0".into(),
                index: j,
            }));
        }
    }
    for (i, (gg, gh)) in grads.vc.iter().enumerate() {
        let da = dot(gg, d);
        let db = dot(gh, d);
        if sets.i_plus_zero.contains(&i) && da > 0.0 {
            return Ok(Some(ConeViolation {
                family: "grad_G.d <= 0".into(),
                index: i,
            }));
        }
        if sets.i_zero_minus.contains(&i) && db < 0.0 {
            return Ok(Some(ConeViolation {
                family: "grad_H.d >= 0".into(),
                index: i,
            }));
        }
        if sets.i_zero_plus.contains(&i) && db != 0.0 {
            return Ok(Some(ConeViolation {
                family: "grad_H.d = 0".into(),
                index: i,
            }));
        }
        if sets.i_biactive.contains(&i) {
            if db < 0.0 {
                return Ok(Some(ConeViolation {
                    family: "grad_H.d >= 0".into(),
                    index: i,
                }));
            }
            if da * db > 0.0 {
                return Ok(Some(ConeViolation {
                    family: "(grad_G.d)(grad_H.d) <= 0".into(),
                    index: i,
                }));
            }
        }
    }
    Ok(None)
}

/// Membership of `d` in the product-form linearized cone at `x`.
pub fn in_linearized_product(
    prob: &MpvcProblem,
    x: &[f64],
    sets: &IndexSets,
    d: &[f64],
) -> Result<bool, ConesError> {
    Ok(linearized_product_violation(prob, x, sets, d)?.is_none())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProbeOutcome {
    Yes,
    No,
    Inconclusive,
}

/// One schedule entry of the tangent probe: the nearest feasible point found
/// to `x + t d` and its normalized correction distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSample {
    pub t: f64,
    pub projected: Vec<f64>,
    /// l1 distance from the projected point to `x + t d`, divided by `t`.
    pub corrected: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentProbe {
    pub outcome: ProbeOutcome,
    pub samples: Vec<ProbeSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    /// Decreasing arc parameters t.
    pub schedule: Vec<f64>,
    /// Every tail correction must stay at or below this for YES.
    pub match_tol: f64,
    /// The final correction must fall to this for YES; keeps directions that
    /// sit at a small fixed angle off the tangent cone out of YES.
    pub yes_tol: f64,
    /// A tail correction at least this large counts toward NO.
    pub no_margin: f64,
    /// A point is accepted as feasible when residual <= feas_frac * t.
    pub feas_frac: f64,
    /// Iteration budget per projection search.
    pub search_iters: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            schedule: vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
            match_tol: 0.1,
            yes_tol: 1e-3,
            no_margin: 0.25,
            feas_frac: 1e-3,
            search_iters: 220,
        }
    }
}

/// Numerically probes whether `d` is tangent to the feasible set at `x`.
///
/// For each t in the schedule the probe looks for a feasible point close to
/// `x + t d` by direct search on `|z - target|_1 + beta * residual(z)`; the
/// direction is YES when the normalized corrections vanish over the last
/// three schedule entries, NO when they stay above `no_margin`, and
/// INCONCLUSIVE otherwise (including projection failures). `d` need not be
/// normalized; it is scaled to unit l1 norm first.
pub fn tangent_probe(
    prob: &MpvcProblem,
    x: &[f64],
    d: &[f64],
    cfg: &ProbeConfig,
) -> Result<TangentProbe, ConesError> {
    check_dim(prob, d)?;
    check_dim(prob, x)?;
    let base_residual = model::residuals(prob, x)?.total;
    if base_residual > DEFAULT_ACTIVE_TOL {
        return Err(ConesError::InfeasibleBase(base_residual));
    }
    let norm: f64 = d.iter().map(|v| v.abs()).sum();
    if norm == 0.0 {
        return Err(ConesError::ZeroDirection);
    }
    let dir: Vec<f64> = d.iter().map(|v| v / norm).collect();

    let mut samples = Vec::with_capacity(cfg.schedule.len());
    for &t in &cfg.schedule {
        let target: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + t * di).collect();
        let feas_cut = cfg.feas_frac * t;
        let l1 = |z: &[f64]| -> f64 {
            z.iter()
                .zip(&target)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
        };

        // Best feasible point seen anywhere during the searches; the base
        // point always qualifies, so a candidate exists.
        let best: RefCell<(f64, Vec<f64>, f64)> =
            RefCell::new((l1(x), x.to_vec(), base_residual));
        let objective = |z: &[f64]| -> Option<f64> {
            let res = model::residuals(prob, z).ok()?.total;
            let dist = l1(z);
            if res <= feas_cut {
                let mut b = best.borrow_mut();
                if dist < b.0 {
                    *b = (dist, z.to_vec(), res);
                }
            }
            Some(dist + 1e3 * res)
        };

        let midpoint: Vec<f64> = x
            .iter()
            .zip(&target)
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        let base = x.to_vec();
        for start in [&target, &midpoint, &base] {
            solver::compass_search(
                &objective,
                start,
                t / 2.0,
                0.5,
                t * 1e-5,
                cfg.search_iters,
            );
        }

        let (dist, projected, residual) = best.into_inner();
        samples.push(ProbeSample {
            t,
            projected,
            corrected: dist / t,
            residual,
        });
    }

    let tail = samples.len().min(3);
    let tail_samples = &samples[samples.len() - tail..];
    let vanishes = tail_samples.iter().all(|s| s.corrected <= cfg.match_tol)
        && tail_samples.last().is_some_and(|s| s.corrected <= cfg.yes_tol);
    let outcome = if vanishes {
        ProbeOutcome::Yes
    } else if tail_samples.iter().all(|s| s.corrected >= cfg.no_margin) {
        ProbeOutcome::No
    } else {
        ProbeOutcome::Inconclusive
    };
    Ok(TangentProbe { outcome, samples })
}

/// Combined membership data for one direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeMembershipReport {
    pub direction: Vec<f64>,
    pub in_l_mpvc: bool,
    pub in_l_product: bool,
    pub tangent: ProbeOutcome,
    /// The first linearized condition `d` violates, when any.
    pub violated: Option<ConeViolation>,
    /// Feasible arc samples from the tangent probe.
    pub samples: Vec<ProbeSample>,
}

/// Evaluates both linearized memberships and the tangent probe for `d`.
pub fn membership_report(
    prob: &MpvcProblem,
    x: &[f64],
    sets: &IndexSets,
    d: &[f64],
    cfg: &ProbeConfig,
) -> Result<ConeMembershipReport, ConesError> {
    let violated = linearized_mpvc_violation(prob, x, sets, d)?;
    let in_l_mpvc = violated.is_none();
    let product_violation = linearized_product_violation(prob, x, sets, d)?;
    let probe = tangent_probe(prob, x, d, cfg)?;
    Ok(ConeMembershipReport {
        direction: d.to_vec(),
        in_l_mpvc,
        in_l_product: product_violation.is_none(),
        tangent: probe.outcome,
        violated: violated.or(product_violation),
        samples: probe.samples,
    })
}

/// Deterministic unit directions in the l1 norm: evenly spaced angles in the
/// plane, a seeded Gaussian batch in higher dimensions, and the two signs on
/// a line.
pub fn unit_directions(dim: usize, count: usize) -> Vec<Vec<f64>> {
    use rand::{Rng, SeedableRng};
    let mut out = Vec::with_capacity(count);
    match dim {
        0 => {}
        1 => {
            for k in 0..count {
                out.push(vec![if k % 2 == 0 { 1.0 } else { -1.0 }]);
            }
        }
        2 => {
            for k in 0..count {
                let theta = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / count as f64;
                let (s, c) = theta.sin_cos();
                let norm = c.abs() + s.abs();
                out.push(vec![c / norm, s / norm]);
            }
        }
        _ => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
            while out.len() < count {
                let mut v: Vec<f64> = (0..dim)
                    .map(|_| {
                        // Box-Muller from two uniforms.
                        let u1: f64 = rng.gen_range(1e-12..1.0);
                        let u2: f64 = rng.gen_range(0.0..1.0);
                        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
                    })
                    .collect();
                let norm: f64 = v.iter().map(|x| x.abs()).sum();
                if norm > 1e-9 {
                    v.iter_mut().for_each(|x| *x /= norm);
                    out.push(v);
                }
            }
        }
    }
    out
}
