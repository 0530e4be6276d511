//! Empirical harnesses: local error-bound scans, penalty exactness sweeps,
//! numerical ACQ probing, and implication-chain audits over a generated
//! corpus. Everything is seeded and bit-reproducible.

use crate::cones::{self, ConesError, ProbeConfig, ProbeOutcome};
use crate::cq::{self, CqError, CqName, CqStatus};
use crate::expr::Expr;
use crate::model::{self, ModelError, MpvcProblem};
use crate::expr::VarSpace;
use crate::solver::{self, SolveConfig, SolverError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Samples with residual below this are excluded from error-bound ratios.
pub const RATIO_FLOOR: f64 = 1e-10;
/// A ratio beyond this raises the unbounded flag.
pub const RATIO_CAP: f64 = 1e8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmpiricsError {
    #[error("alphas must be nonnegative and ascending")]
    BadAlphaGrid,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Cones(#[from] ConesError),
    #[error(transparent)]
    Cq(#[from] CqError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// One error-bound sample: distance-to-feasible-set estimate against the
/// constraint residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSample {
    pub x: Vec<f64>,
    pub dist_feasible: f64,
    pub residual: f64,
    pub ratio: f64,
}

/// Result of scanning the local error bound around a feasible center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBoundScan {
    pub center: Vec<f64>,
    pub radius: f64,
    pub samples: usize,
    pub records: Vec<ScanSample>,
    /// Largest observed ratio; 0 when no sample cleared the ratio floor.
    pub c_hat: f64,
    pub unbounded_flag: bool,
    /// Accuracy claimed by the distance oracle (2 grid steps for n <= 2).
    pub oracle_error_bar: f64,
    /// True when the distance oracle is the multistart descent, not the grid.
    pub approximate: bool,
}

/// Scans `dist_C(x) / residual(x)` over points of the l1 ball around a
/// feasible center.
///
/// For n <= 2 the distance oracle is a dense feasibility grid over a box two
/// radii wide (step radius/200) and samples are snapped onto that lattice so
/// the recorded ratios stay within the oracle's resolution; for larger n the
/// distance comes from a multistart projection descent and is labeled
/// approximate.
pub fn scan_error_bound(
    prob: &MpvcProblem,
    center: &[f64],
    radius: f64,
    samples: usize,
    seed: u64,
) -> Result<ErrorBoundScan, EmpiricsError> {
    let n = prob.dim();
    let base = model::residuals(prob, center)?.total;
    if base > model::DEFAULT_ACTIVE_TOL {
        return Err(ModelError::InfeasiblePoint {
            residual: base,
            tol: model::DEFAULT_ACTIVE_TOL,
        }
        .into());
    }
    let step = radius / 200.0;
    let grid_oracle = n <= 2;

    // Feasible lattice points of the box, for the grid oracle.
    let mut feasible_grid: Vec<Vec<f64>> = Vec::new();
    if grid_oracle {
        let mut offsets = vec![-200i64; n];
        loop {
            let z: Vec<f64> = center
                .iter()
                .zip(&offsets)
                .map(|(c, &o)| c + o as f64 * step)
                .collect();
            if model::residuals(prob, &z)?.total <= 1e-9 {
                feasible_grid.push(z);
            }
            let mut k = 0;
            loop {
                if k == n {
                    break;
                }
                offsets[k] += 1;
                if offsets[k] <= 200 {
                    break;
                }
                offsets[k] = -200;
                k += 1;
            }
            if k == n {
                break;
            }
        }
    }

    let dist_to_feasible = |x: &[f64]| -> Result<f64, EmpiricsError> {
        if grid_oracle {
            let best = feasible_grid
                .iter()
                .map(|z| {
                    z.iter()
                        .zip(x)
                        .map(|(a, b)| (a - b).abs())
                        .sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min);
            Ok(best)
        } else {
            // Multistart projection descent: exact-penalty projection onto
            // the feasible set, keeping the best feasible visit.
            let target = x.to_vec();
            let best = std::cell::RefCell::new(
                center
                    .iter()
                    .zip(&target)
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>(),
            );
            let objective = |z: &[f64]| -> Option<f64> {
                let res = model::residuals(prob, z).ok()?.total;
                let dist: f64 = z
                    .iter()
                    .zip(&target)
                    .map(|(a, b)| (a - b).abs())
                    .sum();
                if res <= 1e-9 {
                    let mut b = best.borrow_mut();
                    if dist < *b {
                        *b = dist;
                    }
                }
                Some(dist + 1e3 * res)
            };
            let center_start = center.to_vec();
            for start in [&target, &center_start] {
                solver::compass_search(&objective, start, radius / 4.0, 0.5, radius * 1e-7, 600);
            }
            Ok(best.into_inner())
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    let mut c_hat: f64 = 0.0;
    let mut unbounded_flag = false;
    for _ in 0..samples {
        // Uniform in the l1 ball: exponential spacings for the direction,
        // a radial power correction for volume.
        let mut x: Vec<f64> = (0..n)
            .map(|_| {
                let e = -(rng.gen_range(1e-12..1.0f64)).ln();
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                sign * e
            })
            .collect();
        let norm: f64 = x.iter().map(|v| v.abs()).sum();
        let r = radius * rng.gen_range(0.0..1.0f64).powf(1.0 / n as f64);
        for (xi, c) in x.iter_mut().zip(center) {
            *xi = c + *xi / norm * r;
        }
        if grid_oracle {
            for (xi, c) in x.iter_mut().zip(center) {
                *xi = c + ((*xi - c) / step).round() * step;
            }
        }
        let residual = model::residuals(prob, &x)?.total;
        if residual <= RATIO_FLOOR {
            continue;
        }
        let dist = dist_to_feasible(&x)?;
        let ratio = dist / residual;
        if ratio > RATIO_CAP {
            unbounded_flag = true;
        }
        c_hat = c_hat.max(ratio);
        records.push(ScanSample {
            x,
            dist_feasible: dist,
            residual,
            ratio,
        });
    }
    Ok(ErrorBoundScan {
        center: center.to_vec(),
        radius,
        samples,
        records,
        c_hat,
        unbounded_flag,
        oracle_error_bar: 2.0 * step,
        approximate: !grid_oracle,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub minimizer: Vec<f64>,
    pub penalty_value: f64,
    pub dist_to_center: f64,
}

/// Alpha sweep of penalty minimizers around a reference point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyProfile {
    pub center: Vec<f64>,
    pub rows: Vec<SweepRow>,
    /// First grid alpha from which every later minimizer stays within
    /// `exact_tol` of the center.
    pub alpha_bar: Option<f64>,
    pub exact_tol: f64,
}

/// Minimizes the tailored penalty for each alpha, multistarting around the
/// center, and estimates the stabilization threshold.
pub fn penalty_sweep(
    prob: &MpvcProblem,
    center: &[f64],
    alphas: &[f64],
    inner: &SolveConfig,
) -> Result<PenaltyProfile, EmpiricsError> {
    if alphas.is_empty()
        || alphas[0] < 0.0
        || alphas.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(EmpiricsError::BadAlphaGrid);
    }
    let mut cfg = inner.clone();
    if cfg.starts.is_empty() {
        cfg.starts = SolveConfig::starts_around(center, 0.5);
    }
    let exact_tol = 1e-6;
    let mut rows = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let out = solver::minimize_penalty(prob, alpha, &cfg)?;
        let dist = out
            .best_point
            .iter()
            .zip(center)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>();
        rows.push(SweepRow {
            alpha,
            minimizer: out.best_point,
            penalty_value: out.best_value,
            dist_to_center: dist,
        });
    }
    let mut alpha_bar = None;
    for k in 0..rows.len() {
        if rows[k..].iter().all(|r| r.dist_to_center <= exact_tol) {
            alpha_bar = Some(rows[k].alpha);
            break;
        }
    }
    Ok(PenaltyProfile {
        center: center.to_vec(),
        rows,
        alpha_bar,
        exact_tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AcqVerdict {
    /// No sampled counterexample; never a proof.
    Corroborated,
    Refuted,
}

/// Probe of `T_C(x) = linearized cone` on sampled directions, for both the
/// MPVC-linearized cone and the product-form cone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcqProbeReport {
    pub directions: usize,
    pub reports: Vec<cones::ConeMembershipReport>,
    pub acq_mpvc: AcqVerdict,
    pub acq_product: AcqVerdict,
    /// Directions inside the respective linearized cone whose tangent probe
    /// answered NO.
    pub counterexamples_mpvc: Vec<Vec<f64>>,
    pub counterexamples_product: Vec<Vec<f64>>,
    /// Sampled directions in the MPVC-linearized cone but not in the product
    /// cone (the biactive coupling gap).
    pub mpvc_only_directions: usize,
}

/// Samples unit directions and compares linearized membership against the
/// numerical tangent probe. A REFUTED verdict carries the counterexample
/// directions; CORROBORATED only means no counterexample was sampled.
pub fn probe_acq(
    prob: &MpvcProblem,
    x: &[f64],
    directions: usize,
    cfg: &ProbeConfig,
) -> Result<AcqProbeReport, ConesError> {
    let sets = model::classify(prob, x, model::DEFAULT_ACTIVE_TOL)?;
    let dirs = cones::unit_directions(prob.dim(), directions);
    let mut reports = Vec::with_capacity(dirs.len());
    let mut counterexamples_mpvc = Vec::new();
    let mut counterexamples_product = Vec::new();
    let mut mpvc_only = 0;
    for d in dirs {
        let rep = cones::membership_report(prob, x, &sets, &d, cfg)?;
        if rep.in_l_mpvc && !rep.in_l_product {
            mpvc_only += 1;
        }
        if rep.in_l_mpvc && rep.tangent == ProbeOutcome::No {
            counterexamples_mpvc.push(d.clone());
        }
        if rep.in_l_product && rep.tangent == ProbeOutcome::No {
            counterexamples_product.push(d.clone());
        }
        reports.push(rep);
    }
    Ok(AcqProbeReport {
        directions,
        reports,
        acq_mpvc: if counterexamples_mpvc.is_empty() {
            AcqVerdict::Corroborated
        } else {
            AcqVerdict::Refuted
        },
        acq_product: if counterexamples_product.is_empty() {
            AcqVerdict::Corroborated
        } else {
            AcqVerdict::Refuted
        },
        counterexamples_mpvc,
        counterexamples_product,
        mpvc_only_directions: mpvc_only,
    })
}

/// Corpus generator settings; the defaults match the audit harness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub instances: usize,
    pub max_dim: usize,
    pub max_degree: u32,
    pub max_ineq: usize,
    pub max_eq: usize,
    pub max_vc: usize,
    /// Fraction of pairs forced biactive at the anchor point.
    pub biactive_fraction: f64,
    pub probe_directions: usize,
    /// Iteration budget of each probe projection, kept lean for corpus runs.
    pub probe_search_iters: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            instances: 200,
            max_dim: 3,
            max_degree: 3,
            max_ineq: 2,
            max_eq: 2,
            max_vc: 2,
            biactive_fraction: 0.5,
            probe_directions: 12,
            probe_search_iters: 120,
        }
    }
}

/// Random polynomial with the given constant term: every random monomial has
/// degree >= 1, so the value at the origin is exactly `constant`.
fn random_polynomial(
    rng: &mut ChaCha8Rng,
    dim: usize,
    max_degree: u32,
    constant: f64,
) -> Expr {
    let terms = rng.gen_range(1..=3);
    let mut e: Option<Expr> = None;
    for _ in 0..terms {
        let coeff = [0.5, 1.0, 1.5, 2.0][rng.gen_range(0..4)]
            * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let degree = rng.gen_range(1..=max_degree);
        let mut mono = Expr::constant(coeff);
        for _ in 0..degree {
            mono = Expr::mul(mono, Expr::var(rng.gen_range(0..dim)));
        }
        e = Some(match e {
            Some(acc) => Expr::add(acc, mono),
            None => mono,
        });
    }
    let body = e.expect("at least one term");
    if constant == 0.0 {
        body
    } else {
        Expr::add(body, Expr::constant(constant))
    }
}

/// Instance of the generated corpus: a random polynomial MPVC anchored so
/// the origin is feasible with a controlled index-set population.
pub fn generate_instance(cfg: &GeneratorConfig, seed: u64, index: u64) -> MpvcProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index + 1);
    let dim = rng.gen_range(1..=cfg.max_dim);
    let names: Vec<String> = (0..dim).map(|i| format!("x{}", i + 1)).collect();
    let vars = VarSpace::new(names).expect("generated names are valid");

    let objective = random_polynomial(&mut rng, dim, cfg.max_degree, 0.0);
    let m = rng.gen_range(0..=cfg.max_ineq);
    let l = rng.gen_range(0..=cfg.max_eq);
    let q = rng.gen_range(1..=cfg.max_vc);

    let g = (0..m)
        .map(|_| {
            let active = rng.gen_bool(0.5);
            let c = if active { 0.0 } else { -1.0 };
            random_polynomial(&mut rng, dim, cfg.max_degree, c)
        })
        .collect();
    let h = (0..l)
        .map(|_| random_polynomial(&mut rng, dim, cfg.max_degree, 0.0))
        .collect();
    let vc = (0..q)
        .map(|_| {
            // (G(0), H(0)) constants per target class; all keep the origin
            // feasible.
            let (gc, hc) = if rng.gen_bool(cfg.biactive_fraction) {
                (0.0, 0.0)
            } else {
                match rng.gen_range(0..4) {
                    0 => (-1.0, 1.0), // H > 0 > G
                    1 => (0.0, 1.0),  // G active, H > 0
                    2 => (-1.0, 0.0), // H active, G < 0
                    _ => (1.0, 0.0),  // H active, G > 0
                }
            };
            (
                random_polynomial(&mut rng, dim, cfg.max_degree, gc),
                random_polynomial(&mut rng, dim, cfg.max_degree, hc),
            )
        })
        .collect();
    MpvcProblem::new(
        format!("gen-{index}"),
        vars,
        objective,
        g,
        h,
        vc,
    )
    .expect("generated instances are valid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceAudit {
    pub index: u64,
    pub name: String,
    pub dim: usize,
    pub statuses: Vec<(CqName, CqStatus)>,
    pub chain_violations: Vec<String>,
    pub acq_mpvc: AcqVerdict,
    pub acq_product: AcqVerdict,
    pub discrepancies: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub seed: u64,
    pub instances: usize,
    pub chain_violation_total: usize,
    /// Instances where the quasinormality verdict and the ACQ probe strain
    /// the expected implication; reported, never failed.
    pub implication_strain_total: usize,
    pub per_instance: Vec<InstanceAudit>,
}

/// Runs the full CQ report and the ACQ probe over a generated corpus and
/// aggregates chain violations (which must be zero) and implication-strain
/// counts. Bit-reproducible for a fixed `(cfg, seed)`.
pub fn audit_corpus(cfg: &GeneratorConfig, seed: u64) -> Result<AuditReport, EmpiricsError> {
    let mut per_instance = Vec::with_capacity(cfg.instances);
    let mut chain_total = 0;
    let mut strain_total = 0;
    for index in 0..cfg.instances as u64 {
        let prob = generate_instance(cfg, seed, index);
        let x = vec![0.0; prob.dim()];
        let mut report_cfg = cq::ReportConfig {
            probe_directions: cfg.probe_directions,
            ..cq::ReportConfig::default()
        };
        report_cfg.probe.search_iters = cfg.probe_search_iters;
        let report = cq::full_report_with(&prob, &x, &report_cfg)?;
        chain_total += report.chain_violations.len();
        let strain = report
            .discrepancies
            .iter()
            .any(|d| d.contains("tangent probe"));
        if strain {
            strain_total += 1;
        }
        per_instance.push(InstanceAudit {
            index,
            name: prob.name().to_string(),
            dim: prob.dim(),
            statuses: report.verdicts.iter().map(|v| (v.cq, v.status)).collect(),
            chain_violations: report.chain_violations,
            acq_mpvc: report.acq.acq_mpvc,
            acq_product: report.acq.acq_product,
            discrepancies: report.discrepancies,
        });
    }
    Ok(AuditReport {
        seed,
        instances: cfg.instances,
        chain_violation_total: chain_total,
        implication_strain_total: strain_total,
        per_instance,
    })
}

#[cfg(test)]
mod tests;
