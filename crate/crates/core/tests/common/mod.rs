//! Independent reference implementations used by the integration tests.
//! Plain f64 arithmetic, written from the textbook formulas and sharing no
//! code with the library.
#![allow(dead_code)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fact(n: i32) -> f64 {
    assert!(n >= 0, "factorial of {n}");
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

fn sign(n: i32) -> f64 {
    if n.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

fn tri(a: i32, b: i32, c: i32) -> bool {
    c <= a + b && c >= (a - b).abs() && (a + b + c) % 2 == 0
}

/// `⟨j1 m1; j2 m2|j m⟩`, doubled arguments, Racah's closed sum.
pub fn cg(j1: i32, m1: i32, j2: i32, m2: i32, j: i32, m: i32) -> f64 {
    if m1 + m2 != m || !tri(j1, j2, j) || m1.abs() > j1 || m2.abs() > j2 || m.abs() > j {
        return 0.0;
    }
    if (j1 + m1) % 2 != 0 || (j2 + m2) % 2 != 0 || (j + m) % 2 != 0 {
        return 0.0;
    }
    let h = |x: i32| x / 2;
    let pre = ((j + 1) as f64 * fact(h(j + j1 - j2)) * fact(h(j - j1 + j2)) * fact(h(j1 + j2 - j)) / fact(h(j1 + j2 + j) + 1)).sqrt()
        * (fact(h(j + m)) * fact(h(j - m)) * fact(h(j1 - m1)) * fact(h(j1 + m1)) * fact(h(j2 - m2)) * fact(h(j2 + m2))).sqrt();
    let mut sum = 0.0;
    for k in 0..=h(j1 + j2 - j) {
        let d = [
            h(j1 + j2 - j) - k,
            h(j1 - m1) - k,
            h(j2 + m2) - k,
            h(j - j2 + m1) + k,
            h(j - j1 - m2) + k,
        ];
        if d.iter().any(|&x| x < 0) {
            continue;
        }
        sum += sign(k) / (fact(k) * d.iter().map(|&x| fact(x)).product::<f64>());
    }
    pre * sum
}

/// 3-j symbol from the Clebsch-Gordan oracle.
pub fn three_j(j1: i32, j2: i32, j3: i32, m1: i32, m2: i32, m3: i32) -> f64 {
    if m1 + m2 + m3 != 0 {
        return 0.0;
    }
    sign((j1 - j2 - m3) / 2) / ((j3 + 1) as f64).sqrt() * cg(j1, m1, j2, m2, j3, -m3)
}

fn delta(a: i32, b: i32, c: i32) -> f64 {
    (fact((a + b - c) / 2) * fact((a - b + c) / 2) * fact((-a + b + c) / 2) / fact((a + b + c) / 2 + 1)).sqrt()
}

/// `{j1 j2 j3; j4 j5 j6}`, doubled arguments, Racah formula.
pub fn six_j(a: i32, b: i32, c: i32, d: i32, e: i32, f: i32) -> f64 {
    if !(tri(a, b, c) && tri(a, e, f) && tri(d, b, f) && tri(d, e, c)) {
        return 0.0;
    }
    let pre = delta(a, b, c) * delta(a, e, f) * delta(d, b, f) * delta(d, e, c);
    let lo = [(a + b + c), (a + e + f), (d + b + f), (d + e + c)].into_iter().max().unwrap() / 2;
    let hi = [(a + b + d + e), (a + c + d + f), (b + c + e + f)].into_iter().min().unwrap() / 2;
    let mut sum = 0.0;
    for t in lo..=hi {
        let den = fact(t - (a + b + c) / 2)
            * fact(t - (a + e + f) / 2)
            * fact(t - (d + b + f) / 2)
            * fact(t - (d + e + c) / 2)
            * fact((a + b + d + e) / 2 - t)
            * fact((a + c + d + f) / 2 - t)
            * fact((b + c + e + f) / 2 - t);
        sum += sign(t) * fact(t + 1) / den;
    }
    pre * sum
}

/// `⟨F m|d_q|F' m'⟩` by expanding both hyperfine states in the uncoupled
/// `|I m_I⟩|J m_J⟩` basis (I coupled first) and applying the fine-structure
/// Wigner-Eckart theorem `⟨J m_J|d_q|J' m_J'⟩ = D ⟨J' m_J'; 1 q|J m_J⟩`.
/// All arguments doubled except `q`.
pub fn dipole_uncoupled(i: i32, jg: i32, je: i32, f: i32, m: i32, fg: i32, mg: i32, q: i32, d: f64) -> f64 {
    let mut sum = 0.0;
    for mi in (-i..=i).step_by(2) {
        for mj in (-je..=je).step_by(2) {
            let a = cg(i, mi, je, mj, f, m);
            if a == 0.0 {
                continue;
            }
            for mjg in (-jg..=jg).step_by(2) {
                let b = cg(i, mi, jg, mjg, fg, mg);
                if b == 0.0 {
                    continue;
                }
                sum += a * b * cg(jg, mjg, 2, 2 * q, je, mj);
            }
        }
    }
    sum * d
}

/// Eigenvalues of a real symmetric matrix by cyclic two-sided Jacobi
/// rotations, descending.
pub fn symmetric_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _ in 0..200 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

/// The expected sodium amplitudes along +ẑ, written out by hand: rows
/// (F=1 σ+, F=2 σ+, F=1 σ−, F=2 σ−), columns (|1,−1⟩, |2,−1⟩, |1,1⟩, |2,1⟩).
pub fn sodium_z_matrix() -> Vec<Vec<f64>> {
    let s = 1.0 / (2.0 * 2f64.sqrt());
    let r3 = 3f64.sqrt();
    vec![
        vec![s, 0.0, 0.0, 0.0],
        vec![0.0, r3 * s, 0.0, 0.0],
        vec![0.0, 0.0, s, 0.0],
        vec![0.0, 0.0, 0.0, -r3 * s],
    ]
}

/// Entropy in bits from the Jacobi eigenvalues of `M Mᵀ`.
pub fn oracle_entropy(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    let k = m[0].len();
    let rho: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| (0..k).map(|c| m[i][c] * m[j][c]).sum()).collect()).collect();
    symmetric_eigenvalues(rho).into_iter().filter(|&p| p > 1e-300).map(|p| -p * p.log2()).sum()
}

/// `⟨ψ|O(a) ⊗ O(b)|ψ⟩` with `ψ` flattened photon-major and
/// `O(θ) = cos 2θ X + sin 2θ Z`, built as an explicit 4×4 Kronecker product.
pub fn chsh_correlation_oracle(psi: &[Complex64; 4], a: f64, b: f64) -> f64 {
    let o = |t: f64| [[(2.0 * t).sin(), (2.0 * t).cos()], [(2.0 * t).cos(), -(2.0 * t).sin()]];
    let (oa, ob) = (o(a), o(b));
    let mut kron = [[0.0; 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    kron[2 * i + k][2 * j + l] = oa[i][j] * ob[k][l];
                }
            }
        }
    }
    let mut e = Complex64::default();
    for r in 0..4 {
        for c in 0..4 {
            e += psi[r].conj() * kron[r][c] * psi[c];
        }
    }
    let n: f64 = psi.iter().map(|x| x.norm_sqr()).sum();
    e.re / n
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_unit_vector(rng: &mut impl Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 0.1 && n < 1.0 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

pub fn random_state(rng: &mut impl Rng, rows: usize, cols: usize) -> Vec<Vec<Complex64>> {
    let mut m: Vec<Vec<Complex64>> = (0..rows)
        .map(|_| (0..cols).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
        .collect();
    let n: f64 = m.iter().flatten().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    m.iter_mut().flatten().for_each(|x| *x /= n);
    m
}
