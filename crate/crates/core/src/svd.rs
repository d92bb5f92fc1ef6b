//! One-sided Jacobi SVD for small dense complex matrices.
//!
//! Columns of `A` are rotated pairwise until mutually orthogonal; the column
//! norms are then the singular values and the accumulated rotations form `V`.
//! Sweep order is fixed, so results are bit-reproducible.

use num_complex::Complex64;

const MAX_SWEEPS: usize = 100;
const EPS: f64 = 1e-15;

/// `A = U Σ V†` with `A` row-major `m × n`.
#[derive(Clone, Debug)]
pub struct Svd {
    pub rows: usize,
    pub cols: usize,
    /// Descending, length `min(m, n)`.
    pub singular_values: Vec<f64>,
    /// Column `k` of U, length `m`, for each singular value.
    pub u: Vec<Vec<Complex64>>,
    /// Column `k` of V, length `n`, for each singular value.
    pub v: Vec<Vec<Complex64>>,
}

fn col_dot(a: &[Vec<Complex64>], p: usize, q: usize) -> Complex64 {
    a[p].iter().zip(&a[q]).map(|(x, y)| x.conj() * y).sum()
}

fn col_norm2(c: &[Complex64]) -> f64 {
    c.iter().map(|x| x.norm_sqr()).sum()
}

pub fn jacobi_svd(rows: usize, cols: usize, data: &[Complex64]) -> Svd {
    assert_eq!(data.len(), rows * cols, "matrix data has wrong length");
    // Work on columns.
    let mut a: Vec<Vec<Complex64>> = (0..cols).map(|j| (0..rows).map(|i| data[i * cols + j]).collect()).collect();
    let mut v: Vec<Vec<Complex64>> = (0..cols)
        .map(|j| (0..cols).map(|i| if i == j { Complex64::new(1.0, 0.0) } else { Complex64::default() }).collect())
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = col_norm2(&a[p]);
                let beta = col_norm2(&a[q]);
                let gamma = col_dot(&a, p, q);
                let g = gamma.norm();
                if g == 0.0 || g <= EPS * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma.conj() / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = if zeta >= 0.0 { 1.0 } else { -1.0 } / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for cols_ in [&mut a, &mut v] {
                    for i in 0..cols_[p].len() {
                        let xp = cols_[p][i];
                        let xq = cols_[q][i] * phase;
                        cols_[p][i] = xp * c - xq * s;
                        cols_[q][i] = xp * s + xq * c;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<(f64, usize)> = a.iter().enumerate().map(|(j, c)| (col_norm2(c).sqrt(), j)).collect();
    order.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    order.truncate(rows.min(cols));

    let mut u: Vec<Vec<Complex64>> = Vec::with_capacity(order.len());
    let mut vs = Vec::with_capacity(order.len());
    let mut svals = Vec::with_capacity(order.len());
    for &(s, j) in &order {
        let mut col: Vec<Complex64> = if s > 0.0 { a[j].iter().map(|x| x / s).collect() } else { vec![Complex64::default(); rows] };
        // Re-orthogonalize; tiny singular values have inaccurate directions.
        for prev in &u {
            let d: Complex64 = prev.iter().zip(&col).map(|(x, y)| x.conj() * y).sum();
            for (c, p) in col.iter_mut().zip(prev) {
                *c -= d * p;
            }
        }
        let n = col_norm2(&col).sqrt();
        if n > 1e-8 {
            col.iter_mut().for_each(|c| *c /= n);
        } else {
            col = complete_basis(&u, rows);
        }
        u.push(col);
        vs.push(v[j].clone());
        svals.push(s);
    }
    Svd {
        rows,
        cols,
        singular_values: svals,
        u,
        v: vs,
    }
}

/// First standard basis vector that survives projection out of `basis`.
fn complete_basis(basis: &[Vec<Complex64>], dim: usize) -> Vec<Complex64> {
    for e in 0..dim {
        let mut col = vec![Complex64::default(); dim];
        col[e] = Complex64::new(1.0, 0.0);
        for prev in basis {
            let d = prev[e].conj();
            for (c, p) in col.iter_mut().zip(prev) {
                *c -= d * p;
            }
        }
        let n = col_norm2(&col).sqrt();
        if n > 1e-6 {
            col.iter_mut().for_each(|c| *c /= n);
            return col;
        }
    }
    unreachable!("basis smaller than the dimension always has a completion")
}
