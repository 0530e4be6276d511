//! Certificates and refuters for the MPVC constraint qualifications at a
//! feasible point: LICQ and MFCQ (rank tests plus a direction LP), GMFCQ
//! (branchwise multiplier LPs), and sampling-based refuters for generalized
//! pseudonormality and quasinormality.
//!
//! Statuses are deliberately asymmetric: a REFUTED verdict always carries a
//! re-checkable certificate, while pseudonormality and quasinormality can
//! only reach CERTIFIED through the implication chain (their defining
//! conditions quantify over all sequences, which sampling cannot prove).

use crate::cones::ConesError;
use crate::empirics;
use crate::model::{
    self, Gradients, IndexSets, ModelError, MpvcProblem, DEFAULT_ACTIVE_TOL,
};
use crate::numerics::{
    self, DenseMatrix, LpOutcome, LpProblem, LpRow, LpStatus, NumericsError, Relation, VarBound,
};
use crate::{cones, expr};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

/// Strictness margin for the MFCQ direction LP optimum.
pub const EPS_STRICT: f64 = 1e-9;
/// Maximum biactive count; beyond it branch enumeration refuses to run.
pub const BRANCH_CAP: usize = 16;
/// Numerical-rank tolerance for gradient stacks.
pub const RANK_TOL: f64 = 1e-9;
/// A multiplier component below this magnitude counts as zero.
pub const ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CqError {
    #[error("biactive set has {biactive} indices; the branch cap is {cap}")]
    BranchCapExceeded { biactive: usize, cap: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Cones(#[from] ConesError),
    #[error("internal: {0}")]
    Internal(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CqName {
    Licq,
    Mfcq,
    Gmfcq,
    Pseudonormality,
    Quasinormality,
}

impl fmt::Display for CqName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CqName::Licq => "MPVC-LICQ",
            CqName::Mfcq => "MPVC-MFCQ",
            CqName::Gmfcq => "MPVC-GMFCQ",
            CqName::Pseudonormality => "MPVC-generalized-pseudonormality",
            CqName::Quasinormality => "MPVC-generalized-quasinormality",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CqStatus {
    Certified,
    Refuted,
    NoViolationFound,
}

impl fmt::Display for CqStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CqStatus::Certified => "CERTIFIED",
            CqStatus::Refuted => "REFUTED",
            CqStatus::NoViolationFound => "NO-VIOLATION-FOUND",
        };
        f.write_str(s)
    }
}

/// Which side of the biactive complementarity a branch pins to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BranchSide {
    /// eta_H_i = 0, eta_G_i >= 0 free to move.
    EtaHZero,
    /// eta_G_i = 0, eta_H_i free.
    EtaGZero,
}

/// A multiplier (lambda, mu, eta_H, eta_G) with its biactive branch tags.
/// Nonzero multipliers are kept l1-normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierVector {
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub eta_h: Vec<f64>,
    pub eta_g: Vec<f64>,
    /// Branch tag per biactive index.
    pub branch: BTreeMap<usize, BranchSide>,
}

impl MultiplierVector {
    pub fn l1_norm(&self) -> f64 {
        self.lambda
            .iter()
            .chain(&self.mu)
            .chain(&self.eta_h)
            .chain(&self.eta_g)
            .map(|v| v.abs())
            .sum()
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.l1_norm() <= tol
    }

    fn normalize(&mut self) {
        let norm = self.l1_norm();
        if norm > 0.0 {
            for v in self
                .lambda
                .iter_mut()
                .chain(&mut self.mu)
                .chain(&mut self.eta_h)
                .chain(&mut self.eta_g)
            {
                *v /= norm;
            }
        }
    }
}

/// Result of re-checking a multiplier against conditions (i) and (ii).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierCheck {
    /// l1 norm of the weighted gradient sum.
    pub stationarity_residual: f64,
    pub sign_violations: Vec<String>,
}

impl MultiplierCheck {
    pub fn ok(&self, residual_tol: f64) -> bool {
        self.stationarity_residual <= residual_tol && self.sign_violations.is_empty()
    }
}

/// Independently re-verifies conditions (i) and (ii) for a multiplier.
pub fn verify_multiplier(
    prob: &MpvcProblem,
    x: &[f64],
    sets: &IndexSets,
    m: &MultiplierVector,
) -> Result<MultiplierCheck, CqError> {
    let grads = model::gradients(prob, x)?;
    let n = prob.dim();
    let mut sum = vec![0.0; n];
    for (i, gi) in grads.g.iter().enumerate() {
        for k in 0..n {
            sum[k] += m.lambda[i] * gi[k];
        }
    }
    for (j, hj) in grads.h.iter().enumerate() {
        for k in 0..n {
            sum[k] += m.mu[j] * hj[k];
        }
    }
    for (i, (gg, gh)) in grads.vc.iter().enumerate() {
        for k in 0..n {
            sum[k] += m.eta_g[i] * gg[k] - m.eta_h[i] * gh[k];
        }
    }
    let stationarity_residual = sum.iter().map(|v| v.abs()).sum();

    let mut violations = Vec::new();
    for i in 0..prob.num_ineq() {
        if sets.i_g.contains(&i) {
            if m.lambda[i] < -ZERO_TOL {
                violations.push(format!("lambda[{i}] < 0 on I_g"));
            }
        } else if m.lambda[i].abs() > ZERO_TOL {
            violations.push(format!("lambda[{i}] != 0 off I_g"));
        }
    }
    for i in 0..prob.num_vc() {
        let eg = m.eta_g[i];
        let eh = m.eta_h[i];
        let in_gzero_families = sets.i_plus_minus.contains(&i)
            || sets.i_zero_minus.contains(&i)
            || sets.i_zero_plus.contains(&i);
        if in_gzero_families && eg.abs() > ZERO_TOL {
            violations.push(format!("eta_G[{i}] != 0 on I_+- / I_0- / I_0+"));
        }
        if (sets.i_plus_zero.contains(&i) || sets.i_biactive.contains(&i)) && eg < -ZERO_TOL {
            violations.push(format!("eta_G[{i}] < 0 on I_+0 / I_00"));
        }
        if sets.i_plus.contains(&i) && eh.abs() > ZERO_TOL {
            violations.push(format!("eta_H[{i}] != 0 on I_+"));
        }
        if sets.i_zero_minus.contains(&i) && eh < -ZERO_TOL {
            violations.push(format!("eta_H[{i}] < 0 on I_0-"));
        }
        if sets.i_biactive.contains(&i) {
            if eh.abs() > ZERO_TOL && eg.abs() > ZERO_TOL {
                violations.push(format!("eta_H[{i}] * eta_G[{i}] != 0 on I_00"));
            }
            match m.branch.get(&i) {
                Some(BranchSide::EtaHZero) if eh.abs() > ZERO_TOL => {
                    violations.push(format!("branch pins eta_H[{i}] = 0"));
                }
                Some(BranchSide::EtaGZero) if eg.abs() > ZERO_TOL => {
                    violations.push(format!("branch pins eta_G[{i}] = 0"));
                }
                None => violations.push(format!("biactive index {i} has no branch tag")),
                _ => {}
            }
        }
    }
    let norm = m.l1_norm();
    if norm > ZERO_TOL && (norm - 1.0).abs() > 1e-9 {
        violations.push(format!("l1 norm {norm} is not 1"));
    }
    Ok(MultiplierCheck {
        stationarity_residual,
        sign_violations: violations,
    })
}

/// Machine-checkable evidence attached to a verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Certificate {
    /// Gradient-stack rank data; `dependence` combines the rows to zero when
    /// they are dependent.
    Rank {
        rows: usize,
        cols: usize,
        rank: usize,
        tol: f64,
        dependence: Option<Vec<f64>>,
    },
    /// A strictly feasible direction for the MFCQ system with its LP slack.
    Direction { d: Vec<f64>, slack: f64 },
    /// An LP stage that failed, with its optimum.
    LpStage { stage: String, optimum: f64 },
    /// A nonzero multiplier satisfying (i)-(ii).
    Multiplier(MultiplierVector),
    /// A multiplier together with the sampled ray witnessing condition (iii).
    MultiplierWithSequence {
        multiplier: MultiplierVector,
        direction: Vec<f64>,
        tail: Vec<f64>,
    },
    /// Certified through the implication chain from a stronger CQ.
    Downgrade { from: CqName },
    /// All branch systems were infeasible.
    BranchesInfeasible { branches: usize },
    /// Negative search result; records the effort spent.
    SearchExhausted {
        directions: usize,
        schedule: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CqVerdict {
    pub cq: CqName,
    pub status: CqStatus,
    pub certificate: Certificate,
    pub notes: String,
}

fn stack_active_gradients(grads: &Gradients, sets: &IndexSets) -> Vec<Vec<f64>> {
    let mut rows = Vec::new();
    for &i in &sets.i_g {
        rows.push(grads.g[i].clone());
    }
    for h in &grads.h {
        rows.push(h.clone());
    }
    for &i in sets.i_plus_zero.iter().chain(&sets.i_biactive) {
        rows.push(grads.vc[i].0.clone());
    }
    for &i in &sets.i_zero {
        rows.push(grads.vc[i].1.clone());
    }
    rows
}

/// LICQ: the active gradient stack must have full row rank.
pub fn check_licq(
    prob: &MpvcProblem,
    x: &[f64],
    sets: &IndexSets,
) -> Result<CqVerdict, CqError> {
    let grads = model::gradients(prob, x)?;
    let rows = stack_active_gradients(&grads, sets);
    let nrows = rows.len();
    let matrix = DenseMatrix::from_rows(&rows)?;
    let rank = if nrows == 0 {
        0
    } else {
        numerics::rank(&matrix, RANK_TOL)
    };
    let certified = rank == nrows;
    let dependence = if certified {
        None
    } else {
        numerics::null_row_combination(&matrix, RANK_TOL)
    };
    Ok(CqVerdict {
        cq: CqName::Licq,
        status: if certified {
            CqStatus::Certified
        } else {
            CqStatus::Refuted
        },
        certificate: Certificate::Rank {
            rows: nrows,
            cols: prob.dim(),
            rank,
            tol: RANK_TOL,
            dependence,
        },
        notes: if certified {
            format!("{nrows} active gradients are linearly independent")
        } else {
            format!("rank {rank} < {nrows} active gradients")
        },
    })
}

/// MFCQ: the equality-family gradients must be independent and a direction
/// must satisfy the strict sign system; decided by a rank test plus the LP
/// `max s` over the linearized conditions with `s <= 1`.
pub fn check_mfcq(
    prob: &MpvcProblem,
    x: &[f64],
    sets: &IndexSets,
) -> Result<CqVerdict, CqError> {
    let grads = model::gradients(prob, x)?;
    let n = prob.dim();

    let mut eq_rows: Vec<Vec<f64>> = grads.h.clone();
    for &i in sets.i_zero_plus.iter().chain(&sets.i_biactive) {
        eq_rows.push(grads.vc[i].1.clone());
    }
    if !eq_rows.is_empty() {
        let matrix = DenseMatrix::from_rows(&eq_rows)?;
        let rank = numerics::rank(&matrix, RANK_TOL);
        if rank < eq_rows.len() {
            let dependence = numerics::null_row_combination(&matrix, RANK_TOL);
            return Ok(CqVerdict {
                cq: CqName::Mfcq,
                status: CqStatus::Refuted,
                certificate: Certificate::Rank {
                    rows: eq_rows.len(),
                    cols: n,
                    rank,
                    tol: RANK_TOL,
                    dependence,
                },
                notes: "equality-family gradients are dependent".into(),
            });
        }
    }

    // Variables (d, s); maximize s with s <= 1 exploiting homogeneity.
    let mut rows = Vec::new();
    let with_s = |coeffs: &[f64], s_coeff: f64| -> Vec<f64> {
        let mut r = coeffs.to_vec();
        r.push(s_coeff);
        r
    };
    for h in &grads.h {
        rows.push(LpRow {
            coeffs: with_s(h, 0.0),
            rel: Relation::Eq,
            rhs: 0.0,
        });
    }
    for &i in sets.i_zero_plus.iter().chain(&sets.i_biactive) {
        rows.push(LpRow {
            coeffs: with_s(&grads.vc[i].1, 0.0),
            rel: Relation::Eq,
            rhs: 0.0,
        });
    }
    for &i in &sets.i_g {
        rows.push(LpRow {
            coeffs: with_s(&grads.g[i], 1.0),
            rel: Relation::Le,
            rhs: 0.0,
        });
    }
    for &i in &sets.i_zero_minus {
        let neg: Vec<f64> = grads.vc[i].1.iter().map(|v| -v).collect();
        rows.push(LpRow {
            coeffs: with_s(&neg, 1.0),
            rel: Relation::Le,
            rhs: 0.0,
        });
    }
    for &i in sets.i_plus_zero.iter().chain(&sets.i_biactive) {
        rows.push(LpRow {
            coeffs: with_s(&grads.vc[i].0, 1.0),
            rel: Relation::Le,
            rhs: 0.0,
        });
    }
    let mut objective = vec![0.0; n + 1];
    objective[n] = 1.0;
    let mut bounds = vec![VarBound::Free; n];
    bounds.push(VarBound::NonNegUpper(1.0));
    let lp = LpProblem {
        objective,
        rows,
        bounds,
    };
    let out = numerics::solve_lp(&lp)?;
    if out.status != LpStatus::Optimal {
        return Err(CqError::Internal(format!(
            "direction LP ended {:?}, expected optimal",
            out.status
        )));
    }
    let slack = out.value;
    if slack > EPS_STRICT {
        Ok(CqVerdict {
            cq: CqName::Mfcq,
            status: CqStatus::Certified,
            certificate: Certificate::Direction {
                d: out.x[..n].to_vec(),
                slack,
            },
            notes: "strictly feasible direction found".into(),
        })
    } else {
        Ok(CqVerdict {
            cq: CqName::Mfcq,
            status: CqStatus::Refuted,
            certificate: Certificate::LpStage {
                stage: "direction-lp".into(),
                optimum: slack,
            },
            notes: "no direction satisfies the strict system (LP optimum ~ 0)".into(),
        })
    }
}

/// One complementarity branch with its multiplier-existence outcome. The
/// reported LP describes the norm-1 multiplier system: OPTIMAL when a
/// nonzero multiplier exists, INFEASIBLE otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchOutcome {
    pub branch: BTreeMap<usize, BranchSide>,
    pub lp: LpOutcome,
    pub multiplier: Option<MultiplierVector>,
}

#[derive(Debug, Clone, Copy)]
enum SignedVar {
    Lambda(usize),
    EtaG(usize),
    EtaH0m(usize),
}

#[derive(Debug, Clone, Copy)]
enum FreeVar {
    Mu(usize),
    EtaH(usize),
}

/// Enumerates every biactive complementarity branch and decides, per branch,
/// whether a nonzero multiplier satisfying (i)-(ii) exists.
///
/// The decision splits soundly in two: an LP maximizing the sign-constrained
/// mass under an l1 cap (cancellation across a split free pair cannot fake a
/// nonzero multiplier), and a rank test catching multipliers supported on
/// the free components alone.
pub fn enumerate_multiplier_branches(
    prob: &MpvcProblem,
    x: &[f64],
    sets: &IndexSets,
) -> Result<Vec<BranchOutcome>, CqError> {
    let biactive: Vec<usize> = sets.i_biactive.iter().copied().collect();
    if biactive.len() > BRANCH_CAP {
        return Err(CqError::BranchCapExceeded {
            biactive: biactive.len(),
            cap: BRANCH_CAP,
        });
    }
    let grads = model::gradients(prob, x)?;
    let n = prob.dim();
    let mut outcomes = Vec::with_capacity(1 << biactive.len());

    for mask in 0u64..(1u64 << biactive.len()) {
        let mut branch = BTreeMap::new();
        for (bit, &i) in biactive.iter().enumerate() {
            let side = if mask & (1 << bit) != 0 {
                BranchSide::EtaGZero
            } else {
                BranchSide::EtaHZero
            };
            branch.insert(i, side);
        }

        let mut signed: Vec<SignedVar> = Vec::new();
        for &i in &sets.i_g {
            signed.push(SignedVar::Lambda(i));
        }
        for i in 0..prob.num_vc() {
            let eta_g_allowed = sets.i_plus_zero.contains(&i)
                || (sets.i_biactive.contains(&i) && branch[&i] == BranchSide::EtaHZero);
            if eta_g_allowed {
                signed.push(SignedVar::EtaG(i));
            }
            if sets.i_zero_minus.contains(&i) {
                signed.push(SignedVar::EtaH0m(i));
            }
        }
        let mut free: Vec<FreeVar> = Vec::new();
        for j in 0..prob.num_eq() {
            free.push(FreeVar::Mu(j));
        }
        for i in 0..prob.num_vc() {
            let eta_h_free = sets.i_zero_plus.contains(&i)
                || (sets.i_biactive.contains(&i) && branch[&i] == BranchSide::EtaGZero);
            if eta_h_free {
                free.push(FreeVar::EtaH(i));
            }
        }

        let signed_col = |v: SignedVar, k: usize| -> f64 {
            match v {
                SignedVar::Lambda(i) => grads.g[i][k],
                SignedVar::EtaG(i) => grads.vc[i].0[k],
                SignedVar::EtaH0m(i) => -grads.vc[i].1[k],
            }
        };
        let free_col = |v: FreeVar, k: usize| -> f64 {
            match v {
                FreeVar::Mu(j) => grads.h[j][k],
                FreeVar::EtaH(i) => -grads.vc[i].1[k],
            }
        };

        // Columns: signed vars, then (plus, minus) pairs per free var.
        let ncols = signed.len() + 2 * free.len();
        let mut rows = Vec::with_capacity(n + 1);
        for k in 0..n {
            let mut coeffs = Vec::with_capacity(ncols);
            for &v in &signed {
                coeffs.push(signed_col(v, k));
            }
            for &v in &free {
                let c = free_col(v, k);
                coeffs.push(c);
                coeffs.push(-c);
            }
            rows.push(LpRow {
                coeffs,
                rel: Relation::Eq,
                rhs: 0.0,
            });
        }
        rows.push(LpRow {
            coeffs: vec![1.0; ncols],
            rel: Relation::Le,
            rhs: 1.0,
        });
        let mut objective = vec![0.0; ncols];
        for (pos, _) in signed.iter().enumerate() {
            objective[pos] = 1.0;
        }
        let lp = LpProblem {
            objective,
            rows,
            bounds: vec![VarBound::NonNeg; ncols],
        };
        let lp_raw = numerics::solve_lp(&lp)?;

        let mut multiplier: Option<MultiplierVector> = None;
        if lp_raw.status == LpStatus::Optimal && lp_raw.value > EPS_STRICT {
            let mut m = MultiplierVector {
                lambda: vec![0.0; prob.num_ineq()],
                mu: vec![0.0; prob.num_eq()],
                eta_h: vec![0.0; prob.num_vc()],
                eta_g: vec![0.0; prob.num_vc()],
                branch: branch.clone(),
            };
            for (pos, &v) in signed.iter().enumerate() {
                let val = lp_raw.x[pos];
                match v {
                    SignedVar::Lambda(i) => m.lambda[i] = val,
                    SignedVar::EtaG(i) => m.eta_g[i] = val,
                    SignedVar::EtaH0m(i) => m.eta_h[i] = val,
                }
            }
            for (pos, &v) in free.iter().enumerate() {
                let val =
                    lp_raw.x[signed.len() + 2 * pos] - lp_raw.x[signed.len() + 2 * pos + 1];
                match v {
                    FreeVar::Mu(j) => m.mu[j] = val,
                    FreeVar::EtaH(i) => m.eta_h[i] = val,
                }
            }
            m.normalize();
            multiplier = Some(m);
        }

        if multiplier.is_none() && !free.is_empty() {
            // A multiplier supported on the free components alone exists iff
            // the corresponding gradient rows are dependent.
            let free_rows: Vec<Vec<f64>> = free
                .iter()
                .map(|&v| (0..n).map(|k| free_col(v, k)).collect())
                .collect();
            let matrix = DenseMatrix::from_rows(&free_rows)?;
            if let Some(y) = numerics::null_row_combination(&matrix, RANK_TOL) {
                let mut m = MultiplierVector {
                    lambda: vec![0.0; prob.num_ineq()],
                    mu: vec![0.0; prob.num_eq()],
                    eta_h: vec![0.0; prob.num_vc()],
                    eta_g: vec![0.0; prob.num_vc()],
                    branch: branch.clone(),
                };
                for (pos, &v) in free.iter().enumerate() {
                    match v {
                        FreeVar::Mu(j) => m.mu[j] = y[pos],
                        FreeVar::EtaH(i) => m.eta_h[i] = y[pos],
                    }
                }
                m.normalize();
                multiplier = Some(m);
            }
        }

        let lp_summary = match &multiplier {
            Some(m) => LpOutcome {
                status: LpStatus::Optimal,
                value: 1.0,
                x: m
                    .lambda
                    .iter()
                    .chain(&m.mu)
                    .chain(&m.eta_g)
                    .chain(&m.eta_h)
                    .copied()
                    .collect(),
            },
            None => LpOutcome {
                status: LpStatus::Infeasible,
                value: 0.0,
                x: Vec::new(),
            },
        };
        outcomes.push(BranchOutcome {
            branch,
            lp: lp_summary,
            multiplier,
        });
    }
    Ok(outcomes)
}

/// GMFCQ holds iff no branch admits a nonzero multiplier.
pub fn check_gmfcq(
    prob: &MpvcProblem,
    x: &[f64],
    sets: &IndexSets,
) -> Result<CqVerdict, CqError> {
    let outcomes = enumerate_multiplier_branches(prob, x, sets)?;
    let branches = outcomes.len();
    match outcomes.into_iter().find_map(|o| o.multiplier) {
        Some(m) => Ok(CqVerdict {
            cq: CqName::Gmfcq,
            status: CqStatus::Refuted,
            certificate: Certificate::Multiplier(m),
            notes: "a nonzero multiplier satisfies (i)-(ii)".into(),
        }),
        None => Ok(CqVerdict {
            cq: CqName::Gmfcq,
            status: CqStatus::Certified,
            certificate: Certificate::BranchesInfeasible { branches },
            notes: format!("all {branches} branch systems are infeasible"),
        }),
    }
}

/// Search configuration for the sequence-based refuters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefuterConfig {
    /// Deterministic well-spread unit directions.
    pub spread_directions: usize,
    /// Additional seeded random unit directions.
    pub random_directions: usize,
    /// Decreasing step values; the last `len - 2` form the tail that must
    /// stay sign-consistent.
    pub schedule: Vec<f64>,
    /// Strict positivity threshold on sampled values.
    pub pos_tol: f64,
    pub seed: u64,
}

impl Default for RefuterConfig {
    fn default() -> Self {
        RefuterConfig {
            spread_directions: 64,
            random_directions: 32,
            schedule: vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
            pos_tol: 1e-14,
            seed: 0xd1ce,
        }
    }
}

impl RefuterConfig {
    fn directions(&self, dim: usize) -> Vec<Vec<f64>> {
        use rand::{Rng, SeedableRng};
        let mut dirs = cones::unit_directions(dim, self.spread_directions);
        for i in 0..dim {
            for sign in [1.0, -1.0] {
                let mut d = vec![0.0; dim];
                d[i] = sign;
                dirs.push(d);
            }
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(self.seed);
        while dirs.len() < self.spread_directions + 2 * dim + self.random_directions {
            let mut d: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm: f64 = d.iter().map(|v| v.abs()).sum();
            if norm > 1e-9 {
                d.iter_mut().for_each(|v| *v /= norm);
                dirs.push(d);
            }
        }
        dirs
    }

    fn tail(&self) -> &[f64] {
        let len = self.schedule.len();
        let start = len.saturating_sub(len.saturating_sub(2).max(1));
        &self.schedule[start..]
    }
}

/// Weighted constraint sum of the pseudonormality condition (iii).
fn weighted_sum(prob: &MpvcProblem, y: &[f64], m: &MultiplierVector) -> Result<f64, CqError> {
    let mut total = 0.0;
    for (i, e) in prob.ineq().iter().enumerate() {
        if m.lambda[i] != 0.0 {
            total += m.lambda[i] * expr::eval(e, y).map_err(ModelError::from)?;
        }
    }
    for (j, e) in prob.eq().iter().enumerate() {
        if m.mu[j] != 0.0 {
            total += m.mu[j] * expr::eval(e, y).map_err(ModelError::from)?;
        }
    }
    for (i, (gi, hi)) in prob.vc().iter().enumerate() {
        if m.eta_g[i] != 0.0 {
            total += m.eta_g[i] * expr::eval(gi, y).map_err(ModelError::from)?;
        }
        if m.eta_h[i] != 0.0 {
            total -= m.eta_h[i] * expr::eval(hi, y).map_err(ModelError::from)?;
        }
    }
    Ok(total)
}

fn collect_multipliers(outcomes: &[BranchOutcome]) -> Vec<MultiplierVector> {
    outcomes.iter().filter_map(|o| o.multiplier.clone()).collect()
}

/// Searches for a sequence violating generalized pseudonormality: a
/// direction along which the weighted constraint sum stays strictly positive
/// for every tail step. CERTIFIED is only reachable through GMFCQ.
pub fn refute_pseudonormality(
    prob: &MpvcProblem,
    x: &[f64],
    sets: &IndexSets,
    cfg: &RefuterConfig,
) -> Result<CqVerdict, CqError> {
    let outcomes = enumerate_multiplier_branches(prob, x, sets)?;
    let multipliers = collect_multipliers(&outcomes);
    if multipliers.is_empty() {
        return Ok(CqVerdict {
            cq: CqName::Pseudonormality,
            status: CqStatus::Certified,
            certificate: Certificate::Downgrade { from: CqName::Gmfcq },
            notes: "GMFCQ holds, which implies generalized pseudonormality".into(),
        });
    }
    let dirs = cfg.directions(prob.dim());
    let tail = cfg.tail().to_vec();
    for m in &multipliers {
        for d in &dirs {
            let mut all_positive = true;
            for &t in &tail {
                let y: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + t * di).collect();
                if !(weighted_sum(prob, &y, m)? > cfg.pos_tol) {
                    all_positive = false;
                    break;
                }
            }
            if all_positive {
                return Ok(CqVerdict {
                    cq: CqName::Pseudonormality,
                    status: CqStatus::Refuted,
                    certificate: Certificate::MultiplierWithSequence {
                        multiplier: m.clone(),
                        direction: d.clone(),
                        tail,
                    },
                    notes: "weighted constraint sum stays positive along the sampled ray".into(),
                });
            }
        }
    }
    Ok(CqVerdict {
        cq: CqName::Pseudonormality,
        status: CqStatus::NoViolationFound,
        certificate: Certificate::SearchExhausted {
            directions: dirs.len(),
            schedule: cfg.schedule.clone(),
        },
        notes: format!(
            "{} multipliers x {} directions found no violating sequence",
            multipliers.len(),
            dirs.len()
        ),
    })
}

/// Per-component sign conditions of generalized quasinormality (iii) at a
/// sampled point.
fn quasinormality_signs_hold(
    prob: &MpvcProblem,
    y: &[f64],
    m: &MultiplierVector,
    pos_tol: f64,
) -> Result<bool, CqError> {
    for (i, e) in prob.ineq().iter().enumerate() {
        if m.lambda[i] > ZERO_TOL
            && !(expr::eval(e, y).map_err(ModelError::from)? > pos_tol)
        {
            return Ok(false);
        }
    }
    for (j, e) in prob.eq().iter().enumerate() {
        if m.mu[j].abs() > ZERO_TOL
            && !(m.mu[j] * expr::eval(e, y).map_err(ModelError::from)? > pos_tol)
        {
            return Ok(false);
        }
    }
    for (i, (gi, hi)) in prob.vc().iter().enumerate() {
        if m.eta_h[i].abs() > ZERO_TOL
            && !(m.eta_h[i] * expr::eval(hi, y).map_err(ModelError::from)? < -pos_tol)
        {
            return Ok(false);
        }
        if m.eta_g[i] > ZERO_TOL
            && !(expr::eval(gi, y).map_err(ModelError::from)? > pos_tol)
        {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Searches for a sequence violating generalized quasinormality: all
/// per-component sign conditions must hold simultaneously at every tail
/// step. CERTIFIED is only reachable through the chain.
pub fn refute_quasinormality(
    prob: &MpvcProblem,
    x: &[f64],
    sets: &IndexSets,
    cfg: &RefuterConfig,
) -> Result<CqVerdict, CqError> {
    let outcomes = enumerate_multiplier_branches(prob, x, sets)?;
    let multipliers = collect_multipliers(&outcomes);
    if multipliers.is_empty() {
        return Ok(CqVerdict {
            cq: CqName::Quasinormality,
            status: CqStatus::Certified,
            certificate: Certificate::Downgrade {
                from: CqName::Pseudonormality,
            },
            notes: "GMFCQ holds, so pseudonormality and quasinormality follow".into(),
        });
    }
    let dirs = cfg.directions(prob.dim());
    let tail = cfg.tail().to_vec();
    for m in &multipliers {
        for d in &dirs {
            let mut all_hold = true;
            for &t in &tail {
                let y: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + t * di).collect();
                if !quasinormality_signs_hold(prob, &y, m, cfg.pos_tol)? {
                    all_hold = false;
                    break;
                }
            }
            if all_hold {
                return Ok(CqVerdict {
                    cq: CqName::Quasinormality,
                    status: CqStatus::Refuted,
                    certificate: Certificate::MultiplierWithSequence {
                        multiplier: m.clone(),
                        direction: d.clone(),
                        tail,
                    },
                    notes: "all component sign conditions hold along the sampled ray".into(),
                });
            }
        }
    }
    Ok(CqVerdict {
        cq: CqName::Quasinormality,
        status: CqStatus::NoViolationFound,
        certificate: Certificate::SearchExhausted {
            directions: dirs.len(),
            schedule: cfg.schedule.clone(),
        },
        notes: format!(
            "{} multipliers x {} directions found no violating sequence",
            multipliers.len(),
            dirs.len()
        ),
    })
}

/// Configuration for `full_report_with`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub tol_active: f64,
    pub refuter: RefuterConfig,
    pub probe_directions: usize,
    pub probe: cones::ProbeConfig,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            tol_active: DEFAULT_ACTIVE_TOL,
            refuter: RefuterConfig::default(),
            probe_directions: 60,
            probe: cones::ProbeConfig::default(),
        }
    }
}

/// All CQ verdicts at a point plus the numerical ACQ probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullReport {
    pub sets: IndexSets,
    /// LICQ, MFCQ, GMFCQ, pseudonormality, quasinormality, in chain order.
    pub verdicts: Vec<CqVerdict>,
    pub acq: empirics::AcqProbeReport,
    /// Pairs where a stronger CQ is CERTIFIED while a weaker one is REFUTED;
    /// always empty unless a checker is buggy.
    pub chain_violations: Vec<String>,
    /// Observations worth surfacing (implication strain between the
    /// quasinormality verdict and the ACQ probe, linearized-cone gaps).
    pub discrepancies: Vec<String>,
}

/// Detects CERTIFIED-above-REFUTED pairs in a chain-ordered verdict list.
pub fn chain_violations(verdicts: &[CqVerdict]) -> Vec<String> {
    let mut out = Vec::new();
    for i in 0..verdicts.len() {
        if verdicts[i].status != CqStatus::Certified {
            continue;
        }
        for j in i + 1..verdicts.len() {
            if verdicts[j].status == CqStatus::Refuted {
                out.push(format!(
                    "{} CERTIFIED but weaker {} REFUTED",
                    verdicts[i].cq, verdicts[j].cq
                ));
            }
        }
    }
    out
}

pub fn full_report(prob: &MpvcProblem, x: &[f64]) -> Result<FullReport, CqError> {
    full_report_with(prob, x, &ReportConfig::default())
}

pub fn full_report_with(
    prob: &MpvcProblem,
    x: &[f64],
    cfg: &ReportConfig,
) -> Result<FullReport, CqError> {
    let sets = model::classify(prob, x, cfg.tol_active)?;
    let verdicts = vec![
        check_licq(prob, x, &sets)?,
        check_mfcq(prob, x, &sets)?,
        check_gmfcq(prob, x, &sets)?,
        refute_pseudonormality(prob, x, &sets, &cfg.refuter)?,
        refute_quasinormality(prob, x, &sets, &cfg.refuter)?,
    ];
    let acq = empirics::probe_acq(prob, x, cfg.probe_directions, &cfg.probe)?;
    let chain = chain_violations(&verdicts);

    let mut discrepancies = Vec::new();
    let quasi = &verdicts[4];
    if acq.acq_mpvc == empirics::AcqVerdict::Refuted && quasi.status != CqStatus::Refuted {
        let witness = acq
            .counterexamples_mpvc
            .first()
            .map(|d| format!("{d:?}"))
            .unwrap_or_default();
        discrepancies.push(format!(
            "quasinormality was not refuted ({}), yet a linearized direction {} failed the tangent probe",
            quasi.status, witness
        ));
    }
    if acq.mpvc_only_directions > 0 {
        discrepancies.push(format!(
            "{} sampled directions lie in the MPVC-linearized cone but outside the product cone",
            acq.mpvc_only_directions
        ));
    }
    Ok(FullReport {
        sets,
        verdicts,
        acq,
        chain_violations: chain,
        discrepancies,
    })
}
