//! Bipartite entanglement of photon ⊗ atom pure states.

use num_complex::Complex64;

use crate::atom::AtomSpec;
use crate::error::{Error, Result};
use crate::pair::{scattered_spinor_with, CondensateSpinor, PumpConfig, ScatterOptions};
use crate::svd::jacobi_svd;
use crate::vector::Vec3;

/// Default threshold on the second Schmidt coefficient for
/// [`is_factorized`].
pub const FACTORIZED_TOL: f64 = 1e-10;
/// Amplitudes below this magnitude do not count towards the support.
pub const SUPPORT_TOL: f64 = 1e-12;
/// Schmidt coefficients at or below this are dropped.
const SCHMIDT_CUTOFF: f64 = 1e-14;
/// Relative gap below which two Schmidt coefficients count as degenerate.
const DEGENERATE: f64 = 1e-12;

/// Dense photon × atom amplitude matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct AmplitudeMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl AmplitudeMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        AmplitudeMatrix {
            rows,
            cols,
            data: vec![Complex64::default(); rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || cols == 0 || rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("amplitude matrix must be rectangular and non-empty"));
        }
        Ok(AmplitudeMatrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Rows and columns holding at least one amplitude above
    /// [`SUPPORT_TOL`].
    pub fn support(&self) -> (Vec<usize>, Vec<usize>) {
        let big = |a: Complex64| a.norm() > SUPPORT_TOL;
        let rows = (0..self.rows).filter(|&r| (0..self.cols).any(|c| big(self.get(r, c)))).collect();
        let cols = (0..self.cols).filter(|&c| (0..self.rows).any(|r| big(self.get(r, c)))).collect();
        (rows, cols)
    }

    /// The state as a 2×2 block over its support, padded with the first
    /// unsupported labels when the support is smaller.
    pub fn two_by_two(&self) -> Result<[[Complex64; 2]; 2]> {
        let (rows, cols) = self.support();
        if rows.len() > 2 || cols.len() > 2 {
            return Err(Error::NotTwoByTwo {
                rows: rows.len(),
                cols: cols.len(),
            });
        }
        let pad = |mut sel: Vec<usize>, dim: usize| {
            let extra: Vec<usize> = (0..dim).filter(|i| !sel.contains(i)).collect();
            for i in extra {
                if sel.len() == 2 {
                    break;
                }
                sel.push(i);
            }
            sel.sort_unstable();
            sel
        };
        let rows = pad(rows, self.rows);
        let cols = pad(cols, self.cols);
        let mut out = [[Complex64::default(); 2]; 2];
        for (i, &r) in rows.iter().enumerate() {
            for (j, &c) in cols.iter().enumerate() {
                out[i][j] = self.get(r, c);
            }
        }
        Ok(out)
    }
}

impl AsRef<AmplitudeMatrix> for AmplitudeMatrix {
    fn as_ref(&self) -> &AmplitudeMatrix {
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchmidtResult {
    /// Descending, strictly positive.
    pub coefficients: Vec<f64>,
    /// Orthonormal vectors over the photon labels.
    pub photon_basis: Vec<Vec<Complex64>>,
    /// Orthonormal vectors over the atom labels.
    pub atom_basis: Vec<Vec<Complex64>>,
}

impl SchmidtResult {
    /// `Σ_i c_i |p_i⟩|a_i⟩` as a matrix.
    pub fn reconstruct(&self) -> AmplitudeMatrix {
        let rows = self.photon_basis.first().map_or(0, Vec::len);
        let cols = self.atom_basis.first().map_or(0, Vec::len);
        let mut m = AmplitudeMatrix::zeros(rows, cols);
        for ((c, p), a) in self.coefficients.iter().zip(&self.photon_basis).zip(&self.atom_basis) {
            for r in 0..rows {
                for k in 0..cols {
                    m.data[r * cols + k] += p[r] * a[k] * *c;
                }
            }
        }
        m
    }
}

/// Index of the first component within a factor 1e-9 of the largest.
fn lead_index(v: &[Complex64]) -> usize {
    let max = v.iter().map(|x| x.norm()).fold(0.0, f64::max);
    v.iter().position(|x| x.norm() >= max * (1.0 - 1e-9)).unwrap_or(0)
}

/// Schmidt decomposition of a normalized pure state.
///
/// Each photon vector has its leading component real positive; within a
/// degenerate block, terms are ordered by the position of that component.
pub fn schmidt<S: AsRef<AmplitudeMatrix> + ?Sized>(state: &S) -> SchmidtResult {
    let m = state.as_ref();
    let svd = jacobi_svd(m.rows, m.cols, &m.data);
    let mut terms: Vec<(f64, Vec<Complex64>, Vec<Complex64>)> = Vec::new();
    for k in 0..svd.singular_values.len() {
        let s = svd.singular_values[k];
        if s <= SCHMIDT_CUTOFF {
            continue;
        }
        let mut p = svd.u[k].clone();
        let mut a: Vec<Complex64> = svd.v[k].iter().map(|x| x.conj()).collect();
        let lead = p[lead_index(&p)];
        let rot = lead.conj() / lead.norm();
        p.iter_mut().for_each(|x| *x *= rot);
        a.iter_mut().for_each(|x| *x /= rot);
        terms.push((s, p, a));
    }
    terms.sort_by(|x, y| {
        if (x.0 - y.0).abs() <= DEGENERATE * x.0.max(y.0) {
            lead_index(&x.1).cmp(&lead_index(&y.1))
        } else {
            y.0.total_cmp(&x.0)
        }
    });
    let mut out = SchmidtResult {
        coefficients: Vec::new(),
        photon_basis: Vec::new(),
        atom_basis: Vec::new(),
    };
    for (s, p, a) in terms {
        out.coefficients.push(s);
        out.photon_basis.push(p);
        out.atom_basis.push(a);
    }
    out
}

/// Von Neumann entropy of either reduced state, in bits.
pub fn entanglement_entropy<S: AsRef<AmplitudeMatrix> + ?Sized>(state: &S) -> f64 {
    entropy_of(&schmidt(state).coefficients)
}

/// `−Σ c² log₂ c²` with `0 log 0 = 0`.
pub fn entropy_of(coefficients: &[f64]) -> f64 {
    coefficients
        .iter()
        .map(|c| c * c)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum::<f64>()
        .max(0.0)
}

/// Binary entropy `h(p)` in bits.
pub fn binary_entropy(p: f64) -> f64 {
    entropy_of(&[p.sqrt(), (1.0 - p).max(0.0).sqrt()])
}

/// Entropy below which a Schmidt-rank-two state has second coefficient
/// below `tol`; `h(tol²)`.
pub fn entropy_threshold(tol: f64) -> f64 {
    binary_entropy(tol * tol)
}

/// `2|det|` of the state restricted to its (at most) 2×2 support.
pub fn concurrence_2x2<S: AsRef<AmplitudeMatrix> + ?Sized>(state: &S) -> Result<f64> {
    let m = state.as_ref().two_by_two()?;
    Ok((2.0 * (m[0][0] * m[1][1] - m[0][1] * m[1][0]).norm()).min(1.0))
}

/// Concurrence of a state whose photon side has at most two labels,
/// `2 c₁ c₂` from the Schmidt coefficients. Equals [`concurrence_2x2`] on
/// 2×2 states and extends it to 2×N.
pub fn concurrence_two_photon_labels<S: AsRef<AmplitudeMatrix> + ?Sized>(state: &S) -> Result<f64> {
    let m = state.as_ref();
    let (rows, cols) = m.support();
    if rows.len() > 2 {
        return Err(Error::NotTwoByTwo {
            rows: rows.len(),
            cols: cols.len(),
        });
    }
    let c = schmidt(m).coefficients;
    Ok(match c.as_slice() {
        [a, b, ..] => (2.0 * a * b).min(1.0),
        _ => 0.0,
    })
}

/// True when the second Schmidt coefficient is below `tol`.
pub fn is_factorized<S: AsRef<AmplitudeMatrix> + ?Sized>(state: &S, tol: f64) -> bool {
    schmidt(state).coefficients.get(1).copied().unwrap_or(0.0) < tol
}

/// `|⟨S_k1|S_k2⟩|` between the atomic spinors of the two polarization
/// branches.
pub fn conditional_overlap(spec: &AtomSpec, pump: &PumpConfig, phi0: &CondensateSpinor, k: &Vec3) -> Result<f64> {
    conditional_overlap_with(spec, pump, phi0, k, &ScatterOptions::default())
}

pub fn conditional_overlap_with(
    spec: &AtomSpec,
    pump: &PumpConfig,
    phi0: &CondensateSpinor,
    k: &Vec3,
    opts: &ScatterOptions,
) -> Result<f64> {
    let s1 = scattered_spinor_with(spec, pump, phi0, k, 1, opts)?;
    let s2 = scattered_spinor_with(spec, pump, phi0, k, 2, opts)?;
    if s1.is_empty() {
        return Err(Error::UndefinedOverlap(1));
    }
    if s2.is_empty() {
        return Err(Error::UndefinedOverlap(2));
    }
    let d: Complex64 = s1.amplitudes.iter().zip(&s2.amplitudes).map(|(a, b)| a.conj() * b).sum();
    Ok(d.norm().min(1.0))
}
