//! Photon modes, the single-photon dipole coupling `g` and the effective
//! two-photon (Raman) coupling `G` obtained after adiabatic elimination of
//! the excited manifold.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::atom::{detuning, excited_index_checked, ground_index_checked, spherical_basis_vectors, AtomSpec, SublevelId};
use crate::error::{Error, Result};
use crate::vector::{bdot, cnorm, conj, norm, transverse_overlap, CVec3, Vec3};

/// Tolerance on unit-norm and transversality invariants.
pub const INVARIANT_TOL: f64 = 1e-12;

/// Half-angle of the cone around ±ẑ inside which the circular basis is used.
pub const POLE_CONE: f64 = 1e-9;

/// A photon mode: propagation direction, polarization label and vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PhotonMode {
    direction: Vec3,
    lambda: u8,
    polarization: CVec3,
    field_per_photon: f64,
}

impl PhotonMode {
    pub fn new(direction: Vec3, lambda: u8, polarization: CVec3) -> Result<Self> {
        check_unit(&direction)?;
        if !(lambda == 1 || lambda == 2) {
            return Err(Error::invalid(format!("polarization index {lambda} is not 1 or 2")));
        }
        if (cnorm(&polarization) - 1.0).abs() > INVARIANT_TOL {
            return Err(Error::invalid("polarization vector is not unit-norm"));
        }
        if transverse_overlap(&polarization, &direction) > INVARIANT_TOL {
            return Err(Error::invalid("polarization is not transverse to the propagation direction"));
        }
        Ok(PhotonMode {
            direction,
            lambda,
            polarization,
            field_per_photon: 1.0,
        })
    }

    /// Sets the electric field per photon `E_k` (default 1).
    pub fn with_field(mut self, field_per_photon: f64) -> Self {
        self.field_per_photon = field_per_photon;
        self
    }

    pub fn direction(&self) -> Vec3 {
        self.direction
    }
    pub fn lambda(&self) -> u8 {
        self.lambda
    }
    pub fn polarization(&self) -> CVec3 {
        self.polarization
    }
    pub fn field_per_photon(&self) -> f64 {
        self.field_per_photon
    }

    /// Projections `ε_q* · ε` for `q = -1, 0, +1`.
    fn spherical_components(&self) -> [Complex64; 3] {
        let basis = spherical_basis_vectors();
        [
            bdot(&conj(&basis[0]), &self.polarization),
            bdot(&conj(&basis[1]), &self.polarization),
            bdot(&conj(&basis[2]), &self.polarization),
        ]
    }
}

fn check_unit(k: &Vec3) -> Result<()> {
    let n = norm(k);
    if !n.is_finite() || (n - 1.0).abs() > INVARIANT_TOL {
        return Err(Error::invalid(format!("direction {k:?} is not a unit vector")));
    }
    Ok(())
}

/// Deterministic transverse polarization pair for direction `k`.
///
/// Away from the poles this is `(θ̂, φ̂)` of spherical coordinates. Within
/// [`POLE_CONE`] of ±ẑ it is the circular pair `(ε_{+1}, ε_{-1})`.
pub fn polarization_basis(k: &Vec3) -> Result<(CVec3, CVec3)> {
    check_unit(k)?;
    let rho = k[0].hypot(k[1]);
    if rho <= POLE_CONE {
        let basis = spherical_basis_vectors();
        return Ok((basis[2], basis[0]));
    }
    let cos_t = k[2];
    let (cos_p, sin_p) = (k[0] / rho, k[1] / rho);
    let theta_hat = [cos_t * cos_p, cos_t * sin_p, -rho];
    let phi_hat = [-sin_p, cos_p, 0.0];
    let c = |v: [f64; 3]| [v[0].into(), v[1].into(), v[2].into()];
    Ok((c(theta_hat), c(phi_hat)))
}

/// Both detection modes `(k, λ=1)` and `(k, λ=2)`.
pub fn photon_modes(k: &Vec3) -> Result<[PhotonMode; 2]> {
    let (e1, e2) = polarization_basis(k)?;
    Ok([PhotonMode::new(*k, 1, e1)?, PhotonMode::new(*k, 2, e2)?])
}

/// Sparse coupling map keyed by (bra, ket) sublevels; absent means zero.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CouplingTensor {
    pub entries: BTreeMap<(SublevelId, SublevelId), Complex64>,
}

impl CouplingTensor {
    pub fn get(&self, bra: &SublevelId, ket: &SublevelId) -> Complex64 {
        self.entries.get(&(*bra, *ket)).copied().unwrap_or_default()
    }
}

/// Dense `g[e][g]` over (excited, ground) sublevel indices.
pub(crate) fn single_photon_table(spec: &AtomSpec, mode: &PhotonMode) -> Vec<Complex64> {
    let comps = mode.spherical_components();
    let ng = spec.ground_sublevels().len();
    let ne = spec.excited_sublevels().len();
    let mut out = vec![Complex64::default(); ne * ng];
    for e in 0..ne {
        for g in 0..ng {
            let mut acc = Complex64::default();
            for (qi, c) in comps.iter().enumerate() {
                let d = spec.dipole_by_index(e, g, qi as i32 - 1);
                if d != 0.0 {
                    acc += c * d;
                }
            }
            out[e * ng + g] = acc * mode.field_per_photon;
        }
    }
    out
}

/// Single-photon coupling `g_kλ(F m, F' m') = E_k Σ_q (ε_q*·ε_kλ) ⟨F m|e r·ε_q|F' m'⟩`
/// with ħ set to one.
pub fn single_photon_coupling(
    spec: &AtomSpec,
    mode: &PhotonMode,
    excited: &SublevelId,
    ground: &SublevelId,
) -> Result<Complex64> {
    let e = excited_index_checked(spec, excited)?;
    let g = ground_index_checked(spec, ground)?;
    let comps = mode.spherical_components();
    let mut acc = Complex64::default();
    for (qi, c) in comps.iter().enumerate() {
        acc += c * spec.dipole_by_index(e, g, qi as i32 - 1);
    }
    Ok(acc * mode.field_per_photon)
}

/// All non-zero single-photon couplings of a mode.
pub fn single_photon_tensor(spec: &AtomSpec, mode: &PhotonMode) -> CouplingTensor {
    let table = single_photon_table(spec, mode);
    let ng = spec.ground_sublevels().len();
    let mut entries = BTreeMap::new();
    for (e, es) in spec.excited_sublevels().iter().enumerate() {
        for (g, gs) in spec.ground_sublevels().iter().enumerate() {
            let v = table[e * ng + g];
            if v != Complex64::default() {
                entries.insert((*es, *gs), v);
            }
        }
    }
    CouplingTensor { entries }
}

/// Numerator `Σ_e g*_out(e, final) g_in(e, initial)` of the effective
/// coupling, from dense single-photon tables.
pub(crate) fn raman_numerator(spec: &AtomSpec, g_out: &[Complex64], g_in: &[Complex64], fin: usize, init: usize) -> Complex64 {
    let ng = spec.ground_sublevels().len();
    (0..spec.excited_sublevels().len())
        .map(|e| g_out[e * ng + fin].conj() * g_in[e * ng + init])
        .sum()
}

/// Effective coupling with an explicitly supplied detuning `Δ` of the
/// initial level.
pub fn effective_coupling_for_detuning(
    spec: &AtomSpec,
    delta: f64,
    out_mode: &PhotonMode,
    in_mode: &PhotonMode,
    final_level: &SublevelId,
    initial: &SublevelId,
) -> Result<Complex64> {
    let fin = ground_index_checked(spec, final_level)?;
    let init = ground_index_checked(spec, initial)?;
    if delta == 0.0 {
        return Err(Error::SingularDetuning {
            level: initial.f.to_string(),
        });
    }
    let g_out = single_photon_table(spec, out_mode);
    let g_in = single_photon_table(spec, in_mode);
    Ok(raman_numerator(spec, &g_out, &g_in, fin, init) / delta)
}

/// Effective two-photon coupling
/// `G = Σ_{F''m''} g*_out(F''m'', F m) g_in(F''m'', F'm') / Δ(F')`
/// for absorbing from `in_mode` and emitting into `out_mode` while the atom
/// goes from `initial` to `final_level`.
pub fn effective_coupling(
    spec: &AtomSpec,
    laser: f64,
    out_mode: &PhotonMode,
    in_mode: &PhotonMode,
    final_level: &SublevelId,
    initial: &SublevelId,
) -> Result<Complex64> {
    ground_index_checked(spec, initial)?;
    let delta = detuning(spec, laser, initial.f)?;
    effective_coupling_for_detuning(spec, delta, out_mode, in_mode, final_level, initial)
}

/// All non-zero effective couplings `(final, initial) → G`.
pub fn effective_tensor(spec: &AtomSpec, laser: f64, out_mode: &PhotonMode, in_mode: &PhotonMode) -> Result<CouplingTensor> {
    let g_out = single_photon_table(spec, out_mode);
    let g_in = single_photon_table(spec, in_mode);
    let mut entries = BTreeMap::new();
    for (i, is) in spec.ground_sublevels().iter().enumerate() {
        let delta = detuning(spec, laser, is.f)?;
        if delta == 0.0 {
            return Err(Error::SingularDetuning { level: is.f.to_string() });
        }
        for (f, fs) in spec.ground_sublevels().iter().enumerate() {
            let v = raman_numerator(spec, &g_out, &g_in, f, i);
            if v != Complex64::default() {
                entries.insert((*fs, *is), v / delta);
            }
        }
    }
    Ok(CouplingTensor { entries })
}
