//! Small fixed-size vector helpers for real and complex 3-vectors.

use num_complex::Complex64;

pub type Vec3 = [f64; 3];
pub type CVec3 = [Complex64; 3];

pub fn norm(v: &Vec3) -> f64 {
    dot(v, v).sqrt()
}

pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn scale(v: &Vec3, s: f64) -> Vec3 {
    [v[0] * s, v[1] * s, v[2] * s]
}

pub fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Hermitian inner product `⟨a, b⟩ = Σ conj(a_i) b_i`.
pub fn hdot(a: &CVec3, b: &CVec3) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Bilinear product `Σ a_i b_i` (no conjugation).
pub fn bdot(a: &CVec3, b: &CVec3) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn cnorm(v: &CVec3) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn conj(v: &CVec3) -> CVec3 {
    [v[0].conj(), v[1].conj(), v[2].conj()]
}

pub fn real(v: &Vec3) -> CVec3 {
    [v[0].into(), v[1].into(), v[2].into()]
}

/// `⟨ε, k̂⟩` for a complex polarization and a real direction.
pub fn transverse_overlap(eps: &CVec3, k: &Vec3) -> f64 {
    hdot(eps, &real(k)).norm()
}
