use super::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mat(rows: &[&[f64]]) -> DenseMatrix {
    DenseMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
}

#[test]
fn rank_spot_values() {
    assert_eq!(rank(&mat(&[&[1.0, 0.0], &[0.0, 1.0]]), 1e-10), 2);
    assert_eq!(rank(&mat(&[&[1.0, -1.0], &[1.0, -1.0]]), 1e-10), 1);
    // Gradient stack {∇g, ∇G, ∇H} of the ex21 corner: hand row reduction
    // leaves two independent rows.
    assert_eq!(rank(&mat(&[&[1.0, -1.0], &[0.0, 1.0], &[1.0, 0.0]]), 1e-10), 2);
    assert_eq!(rank(&DenseMatrix::zeros(0, 3), 1e-10), 0);
    assert_eq!(rank(&DenseMatrix::zeros(3, 3), 1e-10), 0);
}

#[test]
fn rank_equals_transpose_rank_on_random_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..300 {
        let rows = rng.gen_range(1..=8);
        let cols = rng.gen_range(1..=8);
        let mut m = DenseMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                // Small integers keep rank decisions exact.
                m.set(r, c, rng.gen_range(-3i32..=3) as f64);
            }
        }
        assert_eq!(rank(&m, 1e-10), rank(&m.transpose(), 1e-10));
    }
}

#[test]
fn null_row_combination_witnesses_dependence() {
    let m = mat(&[&[1.0, -1.0], &[0.0, 1.0], &[1.0, 0.0]]);
    let y = null_row_combination(&m, 1e-10).unwrap();
    assert!(y.iter().any(|v| v.abs() > 1e-9));
    for c in 0..m.cols() {
        let combo: f64 = (0..m.rows()).map(|r| y[r] * m.get(r, c)).sum();
        assert!(combo.abs() <= 1e-9);
    }
    let indep = mat(&[&[1.0, 0.0], &[0.0, 1.0]]);
    assert!(null_row_combination(&indep, 1e-10).is_none());
}

#[test]
fn lp_simple_bounded() {
    let p = LpProblem {
        objective: vec![1.0],
        rows: vec![LpRow {
            coeffs: vec![1.0],
            rel: Relation::Le,
            rhs: 3.0,
        }],
        bounds: vec![VarBound::NonNeg],
    };
    let out = solve_lp(&p).unwrap();
    assert_eq!(out.status, LpStatus::Optimal);
    assert!((out.value - 3.0).abs() <= 1e-9);
}

#[test]
fn lp_direction_subproblem_shape() {
    // max s  s.t.  d1 + s <= 0, d2 = 0, d1 free, 0 <= s <= 1.
    let p = LpProblem {
        objective: vec![0.0, 0.0, 1.0],
        rows: vec![
            LpRow {
                coeffs: vec![1.0, 0.0, 1.0],
                rel: Relation::Le,
                rhs: 0.0,
            },
            LpRow {
                coeffs: vec![0.0, 1.0, 0.0],
                rel: Relation::Eq,
                rhs: 0.0,
            },
        ],
        bounds: vec![
            VarBound::Free,
            VarBound::Free,
            VarBound::NonNegUpper(1.0),
        ],
    };
    let out = solve_lp(&p).unwrap();
    assert_eq!(out.status, LpStatus::Optimal);
    assert!((out.value - 1.0).abs() <= 1e-9);
    assert!((out.x[0] + 1.0).abs() <= 1e-9, "d1 should sit at -1");
    assert!(out.x[1].abs() <= 1e-9);
}

#[test]
fn lp_infeasible() {
    let p = LpProblem {
        objective: vec![0.0],
        rows: vec![
            LpRow {
                coeffs: vec![1.0],
                rel: Relation::Eq,
                rhs: 1.0,
            },
            LpRow {
                coeffs: vec![1.0],
                rel: Relation::Eq,
                rhs: 2.0,
            },
        ],
        bounds: vec![VarBound::Free],
    };
    assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Infeasible);
}

#[test]
fn lp_unbounded() {
    let p = LpProblem {
        objective: vec![1.0],
        rows: vec![],
        bounds: vec![VarBound::NonNeg],
    };
    assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Unbounded);
}

#[test]
fn lp_dimension_errors() {
    let p = LpProblem {
        objective: vec![1.0, 2.0],
        rows: vec![LpRow {
            coeffs: vec![1.0],
            rel: Relation::Le,
            rhs: 1.0,
        }],
        bounds: vec![VarBound::NonNeg, VarBound::NonNeg],
    };
    assert!(matches!(
        solve_lp(&p),
        Err(NumericsError::RowDimension { row: 0, .. })
    ));
}

#[test]
fn lp_deterministic() {
    let p = LpProblem {
        objective: vec![1.0, 1.0],
        rows: vec![
            LpRow {
                coeffs: vec![1.0, 1.0],
                rel: Relation::Le,
                rhs: 2.0,
            },
            LpRow {
                coeffs: vec![1.0, -1.0],
                rel: Relation::Ge,
                rhs: 0.0,
            },
        ],
        bounds: vec![VarBound::NonNeg, VarBound::NonNeg],
    };
    let a = solve_lp(&p).unwrap();
    let b = solve_lp(&p).unwrap();
    assert_eq!(a, b);
}

// ---- brute-force vertex enumeration oracle -------------------------------

/// Solves an n x n linear system by Gaussian elimination; test-local so the
/// oracle shares nothing with the library path.
fn solve_square(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap()
        })?;
        if m[pivot][col].abs() < 1e-9 {
            return None;
        }
        m.swap(col, pivot);
        for r in 0..n {
            if r != col {
                let f = m[r][col] / m[col][col];
                for c in col..=n {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

/// All size-`n` index subsets of `0..k`, lexicographically.
fn combinations(k: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(n);
    fn rec(start: usize, k: usize, n: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == n {
            out.push(current.clone());
            return;
        }
        for i in start..k {
            current.push(i);
            rec(i + 1, k, n, current, out);
            current.pop();
        }
    }
    rec(0, k, n, &mut current, &mut out);
    out
}

#[test]
fn lp_matches_vertex_enumeration_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _case in 0..200 {
        let n = rng.gen_range(1..=4usize);
        let nrows = rng.gen_range(0..=5usize);
        let upper = 4.0;
        let rows: Vec<LpRow> = (0..nrows)
            .map(|_| LpRow {
                coeffs: (0..n).map(|_| rng.gen_range(-3i32..=3) as f64).collect(),
                rel: if rng.gen_bool(0.8) {
                    Relation::Le
                } else {
                    Relation::Ge
                },
                rhs: rng.gen_range(-2i32..=4) as f64,
            })
            .collect();
        let objective: Vec<f64> = (0..n).map(|_| rng.gen_range(-3i32..=3) as f64).collect();
        let p = LpProblem {
            objective: objective.clone(),
            rows: rows.clone(),
            bounds: vec![VarBound::NonNegUpper(upper); n],
        };

        // Pool every constraint as (coeffs, rhs, relation); vertices are the
        // feasible solutions of n active constraints.
        let mut pool: Vec<(Vec<f64>, f64)> = Vec::new();
        for r in &rows {
            pool.push((r.coeffs.clone(), r.rhs));
        }
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            pool.push((e.clone(), 0.0));
            pool.push((e, upper));
        }
        let feasible = |x: &[f64]| -> bool {
            for r in &rows {
                let lhs: f64 = r.coeffs.iter().zip(x).map(|(c, v)| c * v).sum();
                match r.rel {
                    Relation::Le if lhs > r.rhs + 1e-7 => return false,
                    Relation::Ge if lhs < r.rhs - 1e-7 => return false,
                    Relation::Eq if (lhs - r.rhs).abs() > 1e-7 => return false,
                    _ => {}
                }
            }
            x.iter().all(|&v| (-1e-7..=upper + 1e-7).contains(&v))
        };
        let mut best: Option<f64> = None;
        for idx in combinations(pool.len(), n) {
            let a: Vec<Vec<f64>> = idx.iter().map(|&i| pool[i].0.clone()).collect();
            let b: Vec<f64> = idx.iter().map(|&i| pool[i].1).collect();
            if let Some(x) = solve_square(&a, &b) {
                if feasible(&x) {
                    let v: f64 = objective.iter().zip(&x).map(|(c, v)| c * v).sum();
                    best = Some(best.map_or(v, |b: f64| b.max(v)));
                }
            }
        }

        let out = solve_lp(&p).unwrap();
        match best {
            Some(v) => {
                assert_eq!(out.status, LpStatus::Optimal, "oracle found vertex {v}");
                assert!(
                    (out.value - v).abs() <= 1e-7 * (1.0 + v.abs()),
                    "simplex {} vs vertex enumeration {v}",
                    out.value
                );
                assert!(feasible(&out.x), "returned point must be feasible");
            }
            None => assert_eq!(out.status, LpStatus::Infeasible),
        }
    }
}
