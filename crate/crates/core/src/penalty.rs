//! The vanishing-constraint set Ω, its closed-form l1 distance, and the two
//! exact penalty functions built on it.

use crate::model::{self, ModelError, MpvcProblem};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PenaltyError {
    #[error("penalty weight must be nonnegative, got {0}")]
    NegativeAlpha(f64),
    #[error("the classical l1 penalty is defined only for problems without g or h constraints")]
    HasGeneralConstraints,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A point of the plane carrying one vanishing-constraint pair: `a` holds the
/// G-value and `b` the H-value. Ω = {(a, b) : b >= 0, a*b <= 0}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaPoint {
    pub a: f64,
    pub b: f64,
}

impl OmegaPoint {
    pub fn new(a: f64, b: f64) -> Self {
        OmegaPoint { a, b }
    }

    /// Membership in Ω up to `tol`: `b >= -tol` and `a*b <= tol`.
    pub fn in_omega(&self, tol: f64) -> bool {
        self.b >= -tol && self.a * self.b <= tol
    }
}

/// l1 distance from `p` to Ω: `max{0, -b, min{a, b}}`.
pub fn dist_omega(p: OmegaPoint) -> f64 {
    0.0f64.max(-p.b).max(p.a.min(p.b))
}

/// An evaluated penalty: `total = objective + alpha * violation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyValue {
    pub objective: f64,
    pub violation: f64,
    pub alpha: f64,
    pub total: f64,
}

/// Tailored penalty: objective plus `alpha` times the aggregate residual
/// `sum g+ + sum |h| + sum dist_Omega(G_i, H_i)`.
pub fn penalty_tailored(
    prob: &MpvcProblem,
    x: &[f64],
    alpha: f64,
) -> Result<PenaltyValue, PenaltyError> {
    if alpha < 0.0 {
        return Err(PenaltyError::NegativeAlpha(alpha));
    }
    let objective = prob.objective_value(x)?;
    let violation = model::residuals(prob, x)?.total;
    Ok(PenaltyValue {
        objective,
        violation,
        alpha,
        total: objective + alpha * violation,
    })
}

/// Classical l1 penalty `f + alpha sum max{-H_i, 0} + alpha sum max{G_i H_i, 0}`,
/// defined only for problems with empty g and h families.
pub fn penalty_l1(
    prob: &MpvcProblem,
    x: &[f64],
    alpha: f64,
) -> Result<PenaltyValue, PenaltyError> {
    if alpha < 0.0 {
        return Err(PenaltyError::NegativeAlpha(alpha));
    }
    if prob.num_ineq() != 0 || prob.num_eq() != 0 {
        return Err(PenaltyError::HasGeneralConstraints);
    }
    let objective = prob.objective_value(x)?;
    let mut violation = 0.0;
    for pair in prob.vc_values(x)? {
        violation += (-pair.b).max(0.0) + (pair.a * pair.b).max(0.0);
    }
    Ok(PenaltyValue {
        objective,
        violation,
        alpha,
        total: objective + alpha * violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Brute-force l1 projection onto Ω over a grid, the independent oracle
    /// for `dist_omega`. Ω ∩ grid splits into the quadrant {a <= 0, b >= 0}
    /// (separable coordinate scans) and the axis {b = 0}; the minimum over
    /// both equals the minimum over every grid point of Ω.
    fn grid_dist_omega(p: OmegaPoint, span: f64, step: f64) -> f64 {
        let n = (span / step).round() as i64;
        let mut best_axis = f64::INFINITY;
        for k in -n..=n {
            let za = k as f64 * step;
            let d = (p.a - za).abs() + p.b.abs();
            if d < best_axis {
                best_axis = d;
            }
        }
        let mut best_a = f64::INFINITY;
        for k in -n..=0 {
            let za = k as f64 * step;
            let d = (p.a - za).abs();
            if d < best_a {
                best_a = d;
            }
        }
        let mut best_b = f64::INFINITY;
        for k in 0..=n {
            let zb = k as f64 * step;
            let d = (p.b - zb).abs();
            if d < best_b {
                best_b = d;
            }
        }
        best_axis.min(best_a + best_b)
    }

    #[test]
    fn dist_omega_spot_values() {
        assert_eq!(dist_omega(OmegaPoint::new(-1.0, 2.0)), 0.0);
        // Frozen from the grid oracle (span 10, step 1e-3).
        assert_eq!(dist_omega(OmegaPoint::new(3.0, -2.0)), 2.0);
        assert_eq!(dist_omega(OmegaPoint::new(2.0, 1.0)), 1.0);
        assert_eq!(dist_omega(OmegaPoint::new(1.0, 1.0)), 1.0);
        for (a, b) in [(3.0, -2.0), (2.0, 1.0), (1.0, 1.0), (-1.0, 2.0)] {
            let oracle = grid_dist_omega(OmegaPoint::new(a, b), 10.0, 1e-3);
            assert!((dist_omega(OmegaPoint::new(a, b)) - oracle).abs() <= 2e-3);
        }
    }

    #[test]
    fn dist_omega_zero_iff_member() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100_000 {
            let p = OmegaPoint::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let dist = dist_omega(p);
            assert_eq!(dist == 0.0, p.in_omega(0.0), "at {p:?}");
            assert!(dist >= 0.0);
        }
    }

    #[test]
    fn dist_omega_matches_grid_oracle_on_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let step = 1e-2;
        for _ in 0..10_000 {
            let p = OmegaPoint::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let oracle = grid_dist_omega(p, 10.0, step);
            assert!(
                (dist_omega(p) - oracle).abs() <= 2.0 * step,
                "at {p:?}: closed {} vs grid {}",
                dist_omega(p),
                oracle
            );
        }
    }

    #[test]
    fn tailored_penalty_on_remark_problem() {
        let prob = fixtures::ex22();
        for alpha in [0.0, 0.1, 1.0, 10.0] {
            let v = penalty_tailored(&prob, &[0.0, 0.0], alpha).unwrap();
            assert_eq!(v.total, 0.0);
        }
        // (-t, t) with t = 1/2: f = 1/2, violation = dist_Omega(1/2, 1/2) = 1/2.
        let v = penalty_tailored(&prob, &[-0.5, 0.5], 1.0).unwrap();
        assert_eq!(v.objective, 0.5);
        assert_eq!(v.violation, 0.5);
        assert_eq!(v.total, 1.0);
    }

    #[test]
    fn tailored_penalty_is_objective_on_feasible_points() {
        let prob = fixtures::ex22();
        for x in [[0.0, 0.0], [-1.0, 0.0], [0.0, 2.0]] {
            let v = penalty_tailored(&prob, &x, 7.5).unwrap();
            assert_eq!(v.violation, 0.0);
            assert_eq!(v.total, v.objective);
            let l1 = penalty_tailored(&prob, &x, 0.0).unwrap();
            assert_eq!(l1.total, v.objective);
        }
    }

    #[test]
    fn tailored_penalty_monotone_in_alpha() {
        let prob = fixtures::ex22();
        let x = [0.5, 0.5];
        let mut last = penalty_tailored(&prob, &x, 0.0).unwrap().total;
        for alpha in [0.5, 1.0, 2.0, 4.0] {
            let v = penalty_tailored(&prob, &x, alpha).unwrap();
            assert!(v.total > last);
            last = v.total;
        }
    }

    #[test]
    fn l1_penalty_values() {
        let prob = fixtures::ex22_no_g();
        // (1,1): H = 1 >= 0, G*H = -1 <= 0, f = 2.
        let v = penalty_l1(&prob, &[1.0, 1.0], 2.0).unwrap();
        assert_eq!(v.total, 2.0);
        // (1,-1): f = 2, max{-H,0} = 1, G*H = 1 > 0.
        let v = penalty_l1(&prob, &[1.0, -1.0], 1.0).unwrap();
        assert_eq!(v.total, 4.0);
    }

    #[test]
    fn l1_penalty_rejects_bad_inputs() {
        let with_g = fixtures::ex22();
        assert!(matches!(
            penalty_l1(&with_g, &[0.0, 0.0], 1.0),
            Err(PenaltyError::HasGeneralConstraints)
        ));
        let prob = fixtures::ex22_no_g();
        assert!(matches!(
            penalty_l1(&prob, &[0.0, 0.0], -1.0),
            Err(PenaltyError::NegativeAlpha(_))
        ));
        assert!(matches!(
            penalty_tailored(&with_g, &[0.0, 0.0], -0.5),
            Err(PenaltyError::NegativeAlpha(_))
        ));
    }

    #[test]
    fn penalties_agree_on_feasible_points() {
        let prob = fixtures::ex22_no_g();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut checked = 0;
        while checked < 200 {
            let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            if !model::is_feasible(&prob, &x, 0.0).unwrap() {
                continue;
            }
            let alpha = rng.gen_range(0.0..10.0);
            let t = penalty_tailored(&prob, &x, alpha).unwrap();
            let l = penalty_l1(&prob, &x, alpha).unwrap();
            assert_eq!(t.total, l.total);
            assert_eq!(t.total, t.objective);
            checked += 1;
        }
    }
}
