//! Small dense linear algebra and linear programming used by the certificate
//! machinery: numerical rank, row-dependence witnesses, and a deterministic
//! two-phase simplex with Bland's anti-cycling rule.
//!
//! Everything here targets desk-scale systems (tens of variables); clarity
//! and determinism win over speed.

use serde::{Deserialize, Serialize};
use thiserror::Error;

const EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("matrix data has {got} entries, expected {rows}x{cols}")]
    BadShape { rows: usize, cols: usize, got: usize },
    #[error("LP row {row} has {got} coefficients, expected {expected}")]
    RowDimension { row: usize, expected: usize, got: usize },
    #[error("LP has {got} bounds, expected one per variable ({expected})")]
    BoundDimension { expected: usize, got: usize },
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NumericsError> {
        if data.len() != rows * cols {
            return Err(NumericsError::BadShape {
                rows,
                cols,
                got: data.len(),
            });
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Stacks row vectors; all must share a length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, NumericsError> {
        let cols = rows.first().map_or(0, Vec::len);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(NumericsError::RowDimension {
                    row: i,
                    expected: cols,
                    got: r.len(),
                });
            }
        }
        Ok(DenseMatrix {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Numerical rank by row reduction with partial pivoting; pivots of magnitude
/// at most `tol * max|entry|` count as zero. An empty matrix has rank 0.
pub fn rank(m: &DenseMatrix, tol: f64) -> usize {
    assert!(tol > 0.0, "rank tolerance must be positive");
    if m.rows == 0 || m.cols == 0 {
        return 0;
    }
    let cutoff = tol * m.max_abs();
    if cutoff == 0.0 {
        return 0;
    }
    let mut a = m.clone();
    let mut rank = 0;
    let mut row = 0;
    for col in 0..a.cols {
        if row >= a.rows {
            break;
        }
        let mut pivot = row;
        for r in row + 1..a.rows {
            if a.get(r, col).abs() > a.get(pivot, col).abs() {
                pivot = r;
            }
        }
        if a.get(pivot, col).abs() <= cutoff {
            continue;
        }
        for c in 0..a.cols {
            let tmp = a.get(row, c);
            a.set(row, c, a.get(pivot, c));
            a.set(pivot, c, tmp);
        }
        let p = a.get(row, col);
        for r in row + 1..a.rows {
            let factor = a.get(r, col) / p;
            if factor != 0.0 {
                for c in col..a.cols {
                    let v = a.get(r, c) - factor * a.get(row, c);
                    a.set(r, c, v);
                }
            }
        }
        rank += 1;
        row += 1;
    }
    rank
}

/// A nonzero `y` with `M y ≈ 0`, if the columns of `M` are dependent.
///
/// Computed from the reduced row echelon form; the returned vector has its
/// free coordinate set to 1.
pub fn nullspace_vector(m: &DenseMatrix, tol: f64) -> Option<Vec<f64>> {
    assert!(tol > 0.0);
    if m.cols == 0 {
        return None;
    }
    if m.rows == 0 {
        let mut y = vec![0.0; m.cols];
        y[0] = 1.0;
        return Some(y);
    }
    let cutoff = tol * m.max_abs().max(1e-300);
    let mut a = m.clone();
    let mut pivot_col_of_row: Vec<usize> = Vec::new();
    let mut row = 0;
    for col in 0..a.cols {
        if row >= a.rows {
            break;
        }
        let mut pivot = row;
        for r in row + 1..a.rows {
            if a.get(r, col).abs() > a.get(pivot, col).abs() {
                pivot = r;
            }
        }
        if a.get(pivot, col).abs() <= cutoff {
            continue;
        }
        for c in 0..a.cols {
            let tmp = a.get(row, c);
            a.set(row, c, a.get(pivot, c));
            a.set(pivot, c, tmp);
        }
        let p = a.get(row, col);
        for c in 0..a.cols {
            a.set(row, c, a.get(row, c) / p);
        }
        for r in 0..a.rows {
            if r != row {
                let factor = a.get(r, col);
                if factor != 0.0 {
                    for c in 0..a.cols {
                        let v = a.get(r, c) - factor * a.get(row, c);
                        a.set(r, c, v);
                    }
                }
            }
        }
        pivot_col_of_row.push(col);
        row += 1;
    }
    let pivot_cols: Vec<usize> = pivot_col_of_row.clone();
    let free_col = (0..a.cols).find(|c| !pivot_cols.contains(c))?;
    let mut y = vec![0.0; a.cols];
    y[free_col] = 1.0;
    for (r, &pc) in pivot_col_of_row.iter().enumerate() {
        y[pc] = -a.get(r, free_col);
    }
    Some(y)
}

/// A nonzero coefficient vector combining the rows of `m` to zero, if they
/// are linearly dependent.
pub fn null_row_combination(m: &DenseMatrix, tol: f64) -> Option<Vec<f64>> {
    if m.rows == 0 {
        return None;
    }
    nullspace_vector(&m.transpose(), tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpRow {
    pub coeffs: Vec<f64>,
    pub rel: Relation,
    pub rhs: f64,
}

/// Per-variable bounds: lower is either 0 or unbounded, upper either finite
/// or absent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum VarBound {
    NonNeg,
    Free,
    NonNegUpper(f64),
    FreeUpper(f64),
}

/// Maximization LP over rows `a·x rel b` with per-variable bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub rows: Vec<LpRow>,
    pub bounds: Vec<VarBound>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpOutcome {
    pub status: LpStatus,
    pub value: f64,
    pub x: Vec<f64>,
}

struct Tableau {
    // rows x (ncols + 1); last entry of each row is the rhs
    a: Vec<Vec<f64>>,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.a[row][col];
        for v in self.a[row].iter_mut() {
            *v /= p;
        }
        for r in 0..self.a.len() {
            if r != row {
                let factor = self.a[r][col];
                if factor != 0.0 {
                    for c in 0..=self.ncols {
                        self.a[r][c] -= factor * self.a[row][c];
                    }
                }
            }
        }
        self.basis[row] = col;
    }

    /// Maximizes `c`ᵀx over the current basis with Bland's rule: the entering
    /// column is the lowest-index improving one, and ratio-test ties resolve
    /// to the row with the smallest basic variable. Columns marked in
    /// `blocked` never enter. Returns false when unbounded.
    fn simplex(&mut self, c: &[f64], blocked: &[bool]) -> bool {
        loop {
            // Reduced costs against the current basis.
            let mut reduced = c.to_vec();
            for (r, &b) in self.basis.iter().enumerate() {
                let cb = c[b];
                if cb != 0.0 {
                    for j in 0..self.ncols {
                        reduced[j] -= cb * self.a[r][j];
                    }
                }
            }
            let entering = (0..self.ncols)
                .find(|&j| !blocked[j] && !self.basis.contains(&j) && reduced[j] > EPS);
            let Some(col) = entering else {
                return true;
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.a.len() {
                let coeff = self.a[r][col];
                if coeff > EPS {
                    let ratio = self.a[r][self.ncols] / coeff;
                    match leave {
                        None => leave = Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - EPS
                                || (ratio < lratio + EPS && self.basis[r] < self.basis[lr])
                            {
                                leave = Some((r, ratio));
                            }
                        }
                    }
                }
            }
            match leave {
                Some((row, _)) => self.pivot(row, col),
                None => return false,
            }
        }
    }

    fn value_of(&self, col: usize) -> f64 {
        self.basis
            .iter()
            .position(|&b| b == col)
            .map_or(0.0, |r| self.a[r][self.ncols])
    }
}

/// Solves a small dense LP exactly enough for certificate work: two-phase
/// simplex, deterministic for identical input.
pub fn solve_lp(p: &LpProblem) -> Result<LpOutcome, NumericsError> {
    let n = p.objective.len();
    if p.bounds.len() != n {
        return Err(NumericsError::BoundDimension {
            expected: n,
            got: p.bounds.len(),
        });
    }
    for (i, row) in p.rows.iter().enumerate() {
        if row.coeffs.len() != n {
            return Err(NumericsError::RowDimension {
                row: i,
                expected: n,
                got: row.coeffs.len(),
            });
        }
    }

    // Expand free variables into nonnegative pairs; collect upper bounds as
    // extra rows so every tableau variable has lower bound 0.
    let mut col_of_var: Vec<(usize, Option<usize>)> = Vec::with_capacity(n);
    let mut ncols = 0;
    for b in &p.bounds {
        match b {
            VarBound::NonNeg | VarBound::NonNegUpper(_) => {
                col_of_var.push((ncols, None));
                ncols += 1;
            }
            VarBound::Free | VarBound::FreeUpper(_) => {
                col_of_var.push((ncols, Some(ncols + 1)));
                ncols += 2;
            }
        }
    }
    let expand = |coeffs: &[f64]| -> Vec<f64> {
        let mut row = vec![0.0; ncols];
        for (j, &c) in coeffs.iter().enumerate() {
            let (pos, neg) = col_of_var[j];
            row[pos] += c;
            if let Some(neg) = neg {
                row[neg] -= c;
            }
        }
        row
    };

    let mut rows: Vec<(Vec<f64>, Relation, f64)> = p
        .rows
        .iter()
        .map(|r| (expand(&r.coeffs), r.rel, r.rhs))
        .collect();
    for (j, b) in p.bounds.iter().enumerate() {
        let upper = match b {
            VarBound::NonNegUpper(u) | VarBound::FreeUpper(u) => Some(*u),
            _ => None,
        };
        if let Some(u) = upper {
            let mut unit = vec![0.0; n];
            unit[j] = 1.0;
            rows.push((expand(&unit), Relation::Le, u));
        }
    }
    for (coeffs, rel, rhs) in rows.iter_mut() {
        if *rhs < 0.0 {
            coeffs.iter_mut().for_each(|c| *c = -*c);
            *rhs = -*rhs;
            *rel = match rel {
                Relation::Le => Relation::Ge,
                Relation::Eq => Relation::Eq,
                Relation::Ge => Relation::Le,
            };
        }
    }

    // Slack, surplus, and artificial columns.
    let m = rows.len();
    let mut total_cols = ncols;
    let mut slack_col: Vec<Option<usize>> = vec![None; m];
    let mut artificial_col: Vec<Option<usize>> = vec![None; m];
    for (i, (_, rel, _)) in rows.iter().enumerate() {
        match rel {
            Relation::Le => {
                slack_col[i] = Some(total_cols);
                total_cols += 1;
            }
            Relation::Ge => {
                slack_col[i] = Some(total_cols);
                total_cols += 1;
                artificial_col[i] = Some(total_cols);
                total_cols += 1;
            }
            Relation::Eq => {
                artificial_col[i] = Some(total_cols);
                total_cols += 1;
            }
        }
    }

    let mut tab = Tableau {
        a: vec![vec![0.0; total_cols + 1]; m],
        basis: vec![0; m],
        ncols: total_cols,
    };
    for (i, (coeffs, rel, rhs)) in rows.iter().enumerate() {
        tab.a[i][..ncols].copy_from_slice(coeffs);
        tab.a[i][total_cols] = *rhs;
        match rel {
            Relation::Le => {
                let s = slack_col[i].expect("le rows have slack");
                tab.a[i][s] = 1.0;
                tab.basis[i] = s;
            }
            Relation::Ge => {
                let s = slack_col[i].expect("ge rows have surplus");
                let art = artificial_col[i].expect("ge rows have artificial");
                tab.a[i][s] = -1.0;
                tab.a[i][art] = 1.0;
                tab.basis[i] = art;
            }
            Relation::Eq => {
                let art = artificial_col[i].expect("eq rows have artificial");
                tab.a[i][art] = 1.0;
                tab.basis[i] = art;
            }
        }
    }

    let is_artificial: Vec<bool> = (0..total_cols)
        .map(|c| artificial_col.iter().any(|&a| a == Some(c)))
        .collect();

    // Phase 1: drive the artificial variables to zero.
    if is_artificial.iter().any(|&b| b) {
        let phase1_c: Vec<f64> = (0..total_cols)
            .map(|c| if is_artificial[c] { -1.0 } else { 0.0 })
            .collect();
        let blocked = vec![false; total_cols];
        tab.simplex(&phase1_c, &blocked);
        let infeas: f64 = (0..total_cols)
            .filter(|&c| is_artificial[c])
            .map(|c| tab.value_of(c))
            .sum();
        if infeas > 1e-7 {
            return Ok(LpOutcome {
                status: LpStatus::Infeasible,
                value: 0.0,
                x: vec![0.0; n],
            });
        }
        // Pivot leftover artificials out of the basis where possible.
        for r in 0..m {
            if is_artificial[tab.basis[r]] {
                if let Some(col) =
                    (0..total_cols).find(|&c| !is_artificial[c] && tab.a[r][c].abs() > EPS)
                {
                    tab.pivot(r, col);
                }
            }
        }
    }

    // Phase 2 with artificial columns blocked.
    let mut phase2_c = vec![0.0; total_cols];
    for (j, &cj) in p.objective.iter().enumerate() {
        let (pos, neg) = col_of_var[j];
        phase2_c[pos] += cj;
        if let Some(neg) = neg {
            phase2_c[neg] -= cj;
        }
    }
    if !tab.simplex(&phase2_c, &is_artificial) {
        return Ok(LpOutcome {
            status: LpStatus::Unbounded,
            value: f64::INFINITY,
            x: vec![0.0; n],
        });
    }

    let mut x = vec![0.0; n];
    for (j, &(pos, neg)) in col_of_var.iter().enumerate() {
        x[j] = tab.value_of(pos) - neg.map_or(0.0, |c| tab.value_of(c));
    }
    let value = p
        .objective
        .iter()
        .zip(&x)
        .map(|(c, v)| c * v)
        .sum();
    Ok(LpOutcome {
        status: LpStatus::Optimal,
        value,
        x,
    })
}

#[cfg(test)]
mod tests;
