//! Derivative-free minimization of the exact penalty function: compass
//! search with diagonal probes, multistart, and an ascending-alpha
//! continuation loop for standalone solves.
//!
//! The penalty is nonsmooth exactly where the interesting structure sits, so
//! the solver never touches derivatives.

use crate::model::{self, ModelError, MpvcProblem};
use crate::penalty::{penalty_tailored, PenaltyError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("alpha schedule must be nonempty and ascending")]
    BadAlphaSchedule,
    #[error("no start point produced a finite objective")]
    NoUsableStart,
    #[error(transparent)]
    Penalty(#[from] PenaltyError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Multistart direct-search configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    /// Explicit start points; when empty, `default_starts` around the origin
    /// are used.
    pub starts: Vec<Vec<f64>>,
    /// Iteration budget per start.
    pub max_iterations: usize,
    pub initial_step: f64,
    /// Step multiplier on a failed sweep, in (0, 1).
    pub shrink: f64,
    /// Search stops once the step falls below this.
    pub stop_step: f64,
    /// Ascending penalty weights for `solve_mpvc`.
    pub alpha_schedule: Vec<f64>,
    pub feas_tol: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            starts: Vec::new(),
            max_iterations: 4_000,
            initial_step: 0.25,
            shrink: 0.5,
            stop_step: 1e-9,
            alpha_schedule: vec![0.1, 1.0, 10.0, 100.0],
            feas_tol: 1e-8,
        }
    }
}

impl SolveConfig {
    /// Eight deterministic starts in the box `center ± half_width`, spread by
    /// a van der Corput lattice.
    pub fn starts_around(center: &[f64], half_width: f64) -> Vec<Vec<f64>> {
        let mut starts = vec![center.to_vec()];
        for k in 1..8u32 {
            let mut p = center.to_vec();
            for (i, pi) in p.iter_mut().enumerate() {
                let base = [2u32, 3, 5, 7, 11, 13, 17, 19, 23, 29][i % 10];
                *pi += half_width * (2.0 * van_der_corput(k, base) - 1.0);
            }
            starts.push(p);
        }
        starts
    }
}

fn van_der_corput(mut k: u32, base: u32) -> f64 {
    let mut denom = 1.0;
    let mut out = 0.0;
    while k > 0 {
        denom *= base as f64;
        out += (k % base) as f64 / denom;
        k /= base;
    }
    out
}

/// Result of a penalty minimization or a full solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub best_point: Vec<f64>,
    pub best_value: f64,
    pub residual_total: f64,
    pub alpha: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub(crate) struct SearchOutcome {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub hit_stop_step: bool,
}

/// Compass search with diagonal probes from one start point.
///
/// The probe order is fixed (per coordinate + before -, then pairwise
/// diagonals in index order) and the first strict decrease is taken, so runs
/// are deterministic. An objective error at a probe aborts the start and
/// returns the best point so far; an error at the start itself yields `None`.
pub(crate) fn compass_search<F>(
    objective: F,
    start: &[f64],
    initial_step: f64,
    shrink: f64,
    stop_step: f64,
    max_iterations: usize,
) -> Option<SearchOutcome>
where
    F: Fn(&[f64]) -> Option<f64>,
{
    let n = start.len();
    let mut x = start.to_vec();
    let mut fx = match objective(&x) {
        Some(v) if v.is_finite() => v,
        _ => return None,
    };
    let mut probes: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut d = vec![0.0; n];
            d[i] = sign;
            probes.push(d);
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let mut d = vec![0.0; n];
                d[i] = si;
                d[j] = sj;
                probes.push(d);
            }
        }
    }

    let mut step = initial_step;
    let mut iterations = 0;
    let mut hit_stop_step = false;
    while iterations < max_iterations {
        if step < stop_step {
            hit_stop_step = true;
            break;
        }
        iterations += 1;
        let mut moved = false;
        'sweep: for d in &probes {
            let cand: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + step * di).collect();
            match objective(&cand) {
                Some(v) if v.is_finite() => {
                    if v < fx {
                        x = cand;
                        fx = v;
                        moved = true;
                        break 'sweep;
                    }
                }
                Some(_) => {}
                None => {
                    return Some(SearchOutcome {
                        point: x,
                        value: fx,
                        iterations,
                        hit_stop_step: false,
                    });
                }
            }
        }
        if !moved {
            step *= shrink;
        }
    }
    Some(SearchOutcome {
        point: x,
        value: fx,
        iterations,
        hit_stop_step,
    })
}

fn lexicographically_smaller(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

/// Minimizes the tailored penalty at a fixed `alpha` across the configured
/// starts; the winner is the smallest value, ties broken by lexicographic
/// point order.
pub fn minimize_penalty(
    prob: &MpvcProblem,
    alpha: f64,
    cfg: &SolveConfig,
) -> Result<SolveResult, SolverError> {
    if alpha < 0.0 {
        return Err(SolverError::Penalty(PenaltyError::NegativeAlpha(alpha)));
    }
    let starts = if cfg.starts.is_empty() {
        SolveConfig::starts_around(&vec![0.0; prob.dim()], 0.5)
    } else {
        cfg.starts.clone()
    };
    let objective =
        |z: &[f64]| -> Option<f64> { penalty_tailored(prob, z, alpha).ok().map(|p| p.total) };

    let mut best: Option<SearchOutcome> = None;
    let mut total_iterations = 0;
    for start in &starts {
        let Some(out) = compass_search(
            &objective,
            start,
            cfg.initial_step,
            cfg.shrink,
            cfg.stop_step,
            cfg.max_iterations,
        ) else {
            continue;
        };
        total_iterations += out.iterations;
        best = match best {
            None => Some(out),
            Some(cur) => {
                if out.value < cur.value
                    || (out.value == cur.value
                        && lexicographically_smaller(&out.point, &cur.point))
                {
                    Some(out)
                } else {
                    Some(cur)
                }
            }
        };
    }
    let best = best.ok_or(SolverError::NoUsableStart)?;
    let residual_total = model::residuals(prob, &best.point)?.total;
    Ok(SolveResult {
        residual_total,
        alpha,
        iterations: total_iterations,
        converged: best.hit_stop_step,
        best_value: best.value,
        best_point: best.point,
    })
}

/// Penalty continuation along the ascending alpha schedule, warm-starting
/// each stage from the previous best point and stopping early once the
/// residual falls below `feas_tol`.
pub fn solve_mpvc(prob: &MpvcProblem, cfg: &SolveConfig) -> Result<SolveResult, SolverError> {
    if cfg.alpha_schedule.is_empty()
        || cfg.alpha_schedule.windows(2).any(|w| w[1] <= w[0])
        || cfg.alpha_schedule[0] < 0.0
    {
        return Err(SolverError::BadAlphaSchedule);
    }
    let base_starts = if cfg.starts.is_empty() {
        SolveConfig::starts_around(&vec![0.0; prob.dim()], 0.5)
    } else {
        cfg.starts.clone()
    };
    let mut result: Option<SolveResult> = None;
    let mut iterations = 0;
    for &alpha in &cfg.alpha_schedule {
        let mut stage_cfg = cfg.clone();
        stage_cfg.starts = match &result {
            Some(prev) => {
                let mut s = vec![prev.best_point.clone()];
                s.extend(base_starts.iter().cloned());
                s
            }
            None => base_starts.clone(),
        };
        let stage = minimize_penalty(prob, alpha, &stage_cfg)?;
        iterations += stage.iterations;
        let done = stage.residual_total <= cfg.feas_tol;
        result = Some(stage);
        if done {
            break;
        }
    }
    let mut result = result.expect("schedule is nonempty");
    result.iterations = iterations;
    result.converged = result.residual_total <= cfg.feas_tol;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expr, VarSpace};
    use crate::model::fixtures;

    #[test]
    fn remark_problem_minimizer_is_origin() {
        let prob = fixtures::ex22();
        let cfg = SolveConfig {
            starts: vec![vec![0.3, 0.3]],
            ..SolveConfig::default()
        };
        let out = minimize_penalty(&prob, 1.0, &cfg).unwrap();
        assert!(out.best_point.iter().all(|v| v.abs() <= 1e-6), "{out:?}");
        assert!(out.best_value.abs() <= 1e-6);
    }

    #[test]
    fn unconstrained_quadratic_recovers_minimum() {
        let vars = VarSpace::new(["x1", "x2"]).unwrap();
        let e = |s: &str| parse_expr(s, &vars).unwrap();
        // Feasible everywhere near the minimum: H stays positive, G negative.
        let prob = crate::model::MpvcProblem::new(
            "quad",
            vars.clone(),
            e("(x1 - 0.25)^2 + (x2 + 0.5)^2"),
            vec![],
            vec![],
            vec![(e("-1"), e("x1 + 10"))],
        )
        .unwrap();
        let out = minimize_penalty(&prob, 0.0, &SolveConfig::default()).unwrap();
        assert!((out.best_point[0] - 0.25).abs() <= 1e-7);
        assert!((out.best_point[1] + 0.5).abs() <= 1e-7);
    }

    #[test]
    fn penalized_ex21_matches_dense_grid_argmin() {
        // ex21 constraints with a shifted objective pulling away from the
        // feasible corner.
        let base = fixtures::ex21();
        let vars = base.vars().clone();
        let e = |s: &str| parse_expr(s, &vars).unwrap();
        let prob = crate::model::MpvcProblem::new(
            "ex21-shifted",
            vars.clone(),
            e("(x1 - 1)^2 + x2^2"),
            base.ineq().to_vec(),
            vec![],
            base.vc().to_vec(),
        )
        .unwrap();
        let alpha = 10.0;

        // Dense-grid oracle over [-2, 2]^2, 401 points per axis.
        let step = 0.01;
        let mut best = (f64::INFINITY, vec![0.0, 0.0]);
        for i in -200..=200 {
            for j in -200..=200 {
                let x = [i as f64 * step, j as f64 * step];
                let v = penalty_tailored(&prob, &x, alpha).unwrap().total;
                if v < best.0 {
                    best = (v, x.to_vec());
                }
            }
        }

        let out = minimize_penalty(&prob, alpha, &SolveConfig::default()).unwrap();
        assert!(
            out.best_value <= best.0 + 1e-9,
            "solver {} should not lose to the grid {}",
            out.best_value,
            best.0
        );
        for (s, g) in out.best_point.iter().zip(&best.1) {
            assert!((s - g).abs() <= 2.0 * step, "{out:?} vs grid {best:?}");
        }
    }

    #[test]
    fn best_value_never_exceeds_start_values() {
        let prob = fixtures::ex41();
        let cfg = SolveConfig::default();
        let starts = SolveConfig::starts_around(&[0.0, 0.0], 0.5);
        for alpha in [0.0, 1.0, 10.0] {
            let out = minimize_penalty(&prob, alpha, &cfg).unwrap();
            for s in &starts {
                let v = penalty_tailored(&prob, s, alpha).unwrap().total;
                assert!(out.best_value <= v + 1e-12);
            }
        }
    }

    #[test]
    fn more_iterations_never_hurt() {
        let prob = fixtures::ex22();
        let lean = SolveConfig {
            max_iterations: 150,
            ..SolveConfig::default()
        };
        let rich = SolveConfig {
            max_iterations: 300,
            ..SolveConfig::default()
        };
        for alpha in [0.1, 1.0, 10.0] {
            let a = minimize_penalty(&prob, alpha, &lean).unwrap();
            let b = minimize_penalty(&prob, alpha, &rich).unwrap();
            assert!(b.best_value <= a.best_value + 1e-12);
        }
    }

    #[test]
    fn solve_fixtures_to_feasibility() {
        for prob in [fixtures::ex21(), fixtures::ex22(), fixtures::ex41()] {
            let out = solve_mpvc(&prob, &SolveConfig::default()).unwrap();
            assert!(out.converged, "{}: {out:?}", prob.name());
            assert!(out.residual_total <= 1e-8);
        }
        let out = solve_mpvc(&fixtures::ex22(), &SolveConfig::default()).unwrap();
        assert!(out.best_point.iter().all(|v| v.abs() <= 1e-6));
    }

    #[test]
    fn infeasible_problem_reports_nonconvergence() {
        let vars = VarSpace::new(["x1"]).unwrap();
        let e = |s: &str| parse_expr(s, &vars).unwrap();
        let prob = crate::model::MpvcProblem::new(
            "infeasible",
            vars.clone(),
            e("0"),
            vec![],
            vec![e("x1"), e("x1 - 1")],
            vec![(e("-1"), e("1"))],
        )
        .unwrap();
        let out = solve_mpvc(&prob, &SolveConfig::default()).unwrap();
        assert!(!out.converged);
        assert!((out.residual_total - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn feasible_start_exits_first_stage() {
        let vars = VarSpace::new(["x1"]).unwrap();
        let e = |s: &str| parse_expr(s, &vars).unwrap();
        let prob = crate::model::MpvcProblem::new(
            "easy",
            vars.clone(),
            e("x1^2"),
            vec![],
            vec![],
            vec![(e("-1"), e("x1 + 5"))],
        )
        .unwrap();
        let out = solve_mpvc(&prob, &SolveConfig::default()).unwrap();
        assert!(out.converged);
        assert!((out.alpha - 0.1).abs() < 1e-12, "stopped at stage one");
    }

    #[test]
    fn bad_schedules_rejected() {
        let prob = fixtures::ex22();
        let cfg = SolveConfig {
            alpha_schedule: vec![1.0, 0.5],
            ..SolveConfig::default()
        };
        assert!(matches!(
            solve_mpvc(&prob, &cfg),
            Err(SolverError::BadAlphaSchedule)
        ));
        let cfg = SolveConfig {
            alpha_schedule: vec![],
            ..SolveConfig::default()
        };
        assert!(matches!(
            solve_mpvc(&prob, &cfg),
            Err(SolverError::BadAlphaSchedule)
        ));
    }
}
