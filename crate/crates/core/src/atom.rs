//! Alkali-like atomic species: hyperfine manifolds, dipole matrix elements,
//! detunings and the spherical polarization basis.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::angular::{clebsch_gordan, wigner_6j, HalfInt};
use crate::error::{Error, Result};

/// Default far-off-resonance threshold for `|Δ(F')|/Γ`.
pub const DEFAULT_VALIDITY_THRESHOLD: f64 = 100.0;

const SODIUM_JSON: &str = include_str!("../data/sodium.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Manifold {
    Ground,
    Excited,
}

/// A hyperfine sublevel `|F m⟩` of one manifold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SublevelId {
    pub manifold: Manifold,
    pub f: HalfInt,
    pub m: HalfInt,
}

impl SublevelId {
    pub fn ground(f: HalfInt, m: HalfInt) -> Self {
        SublevelId {
            manifold: Manifold::Ground,
            f,
            m,
        }
    }

    pub fn excited(f: HalfInt, m: HalfInt) -> Self {
        SublevelId {
            manifold: Manifold::Excited,
            f,
            m,
        }
    }

    /// Serialization key `"2F:2m"`.
    pub fn key(&self) -> String {
        format!("{}:{}", self.f.doubled(), self.m.doubled())
    }
}

/// On-disk atom description. Frequencies in Hz, angular momenta doubled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct AtomSpecFile {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
    pub doubled_I: i32,
    pub doubled_ground_J: i32,
    pub doubled_excited_J: i32,
    /// Keyed by doubled ground F as a decimal string.
    pub ground_splittings_hz: BTreeMap<String, f64>,
    pub resonance_hz: f64,
    pub linewidth_hz: f64,
    pub mass_kg: f64,
    #[serde(default = "default_dipole")]
    pub reduced_dipole: f64,
}

fn default_dipole() -> f64 {
    1.0
}

/// An atomic species with a single ground and a single excited fine-structure
/// level, each split into hyperfine manifolds. Immutable once built; the
/// dipole table is computed at construction.
#[derive(Clone, Debug)]
pub struct AtomSpec {
    name: String,
    nuclear_spin: HalfInt,
    ground_j: HalfInt,
    excited_j: HalfInt,
    /// δ(F') in rad/s.
    ground_splittings: BTreeMap<HalfInt, f64>,
    /// ω_a in rad/s.
    resonance: f64,
    /// Γ in rad/s.
    linewidth: f64,
    mass: f64,
    reduced_dipole: f64,
    ground: Vec<SublevelId>,
    excited: Vec<SublevelId>,
    /// `dipoles[(e * ground.len() + g) * 3 + (q + 1)]`
    dipoles: Vec<f64>,
}

fn coupled_levels(a: HalfInt, b: HalfInt) -> Vec<HalfInt> {
    let lo = (a - b).abs().doubled();
    let hi = (a + b).doubled();
    (lo..=hi).step_by(2).map(HalfInt::from_doubled).collect()
}

fn sublevels(manifold: Manifold, levels: &[HalfInt]) -> Vec<SublevelId> {
    levels
        .iter()
        .flat_map(|&f| f.projections().map(move |m| SublevelId { manifold, f, m }))
        .collect()
}

impl AtomSpec {
    /// Builds a species from SI-like inputs. Splittings, resonance and
    /// linewidth are angular frequencies in rad/s.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        nuclear_spin: HalfInt,
        ground_j: HalfInt,
        excited_j: HalfInt,
        ground_splittings: BTreeMap<HalfInt, f64>,
        resonance: f64,
        linewidth: f64,
        mass: f64,
        reduced_dipole: f64,
    ) -> Result<Self> {
        if nuclear_spin.doubled() < 0 || ground_j.doubled() < 0 || excited_j.doubled() < 0 {
            return Err(Error::invalid("angular momenta must be non-negative"));
        }
        let dj = (excited_j - ground_j).doubled();
        if dj % 2 != 0 || dj.abs() > 2 || (ground_j.doubled() == 0 && excited_j.doubled() == 0) {
            return Err(Error::invalid(format!(
                "J'={ground_j} -> J={excited_j} is not an electric-dipole transition"
            )));
        }
        if !(resonance > 0.0 && resonance.is_finite()) {
            return Err(Error::invalid("resonance frequency must be positive"));
        }
        if !(linewidth > 0.0 && linewidth.is_finite()) {
            return Err(Error::invalid("linewidth must be positive"));
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::invalid("mass must be positive"));
        }
        if !reduced_dipole.is_finite() || reduced_dipole == 0.0 {
            return Err(Error::invalid("reduced dipole must be finite and non-zero"));
        }

        let ground_levels = coupled_levels(nuclear_spin, ground_j);
        let excited_levels = coupled_levels(nuclear_spin, excited_j);
        let keys: Vec<HalfInt> = ground_splittings.keys().copied().collect();
        if keys != ground_levels {
            return Err(Error::invalid(format!(
                "ground splittings must be given for exactly F' = {}",
                ground_levels.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(", ")
            )));
        }
        if ground_splittings[&ground_levels[0]] != 0.0 {
            return Err(Error::invalid("splitting of the lowest ground level must be 0"));
        }
        if ground_splittings.values().any(|&d| !(d >= 0.0 && d.is_finite())) {
            return Err(Error::invalid("ground splittings must be non-negative"));
        }
        // The phase (−1)^(−I−J'−F) must be ±1.
        for f in &excited_levels {
            let exponent = -(nuclear_spin + ground_j + *f).doubled();
            if exponent % 2 != 0 {
                return Err(Error::invalid(format!(
                    "non-integral phase exponent −I−J'−F for F={f}"
                )));
            }
        }

        let ground = sublevels(Manifold::Ground, &ground_levels);
        let excited = sublevels(Manifold::Excited, &excited_levels);
        let mut spec = AtomSpec {
            name: name.into(),
            nuclear_spin,
            ground_j,
            excited_j,
            ground_splittings,
            resonance,
            linewidth,
            mass,
            reduced_dipole,
            ground,
            excited,
            dipoles: Vec::new(),
        };
        spec.dipoles = spec.compute_dipole_table()?;
        Ok(spec)
    }

    pub fn from_file_record(rec: &AtomSpecFile) -> Result<Self> {
        let mut splittings = BTreeMap::new();
        for (key, hz) in &rec.ground_splittings_hz {
            let doubled: i32 = key.trim().parse().map_err(|_| {
                Error::invalid(format!("ground_splittings_hz key `{key}` is not a doubled F"))
            })?;
            splittings.insert(HalfInt::from_doubled(doubled), TAU * hz);
        }
        AtomSpec::new(
            rec.name.clone(),
            HalfInt::from_doubled(rec.doubled_I),
            HalfInt::from_doubled(rec.doubled_ground_J),
            HalfInt::from_doubled(rec.doubled_excited_J),
            splittings,
            TAU * rec.resonance_hz,
            TAU * rec.linewidth_hz,
            rec.mass_kg,
            rec.reduced_dipole,
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rec: AtomSpecFile = serde_json::from_str(text)
            .map_err(|e| Error::invalid(format!("atom specification: {e}")))?;
        Self::from_file_record(&rec)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::invalid(format!("reading {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// The shipped sodium D2 preset (I = 3/2, J' = 1/2, J = 3/2).
    pub fn sodium() -> Self {
        Self::from_json(SODIUM_JSON).expect("bundled sodium preset is valid")
    }

    /// Raw JSON of the bundled sodium preset.
    pub fn sodium_json() -> &'static str {
        SODIUM_JSON
    }

    pub fn to_file_record(&self) -> AtomSpecFile {
        AtomSpecFile {
            name: self.name.clone(),
            comment: None,
            doubled_I: self.nuclear_spin.doubled(),
            doubled_ground_J: self.ground_j.doubled(),
            doubled_excited_J: self.excited_j.doubled(),
            ground_splittings_hz: self
                .ground_splittings
                .iter()
                .map(|(f, d)| (f.doubled().to_string(), d / TAU))
                .collect(),
            resonance_hz: self.resonance / TAU,
            linewidth_hz: self.linewidth / TAU,
            mass_kg: self.mass,
            reduced_dipole: self.reduced_dipole,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn nuclear_spin(&self) -> HalfInt {
        self.nuclear_spin
    }
    pub fn ground_j(&self) -> HalfInt {
        self.ground_j
    }
    pub fn excited_j(&self) -> HalfInt {
        self.excited_j
    }
    pub fn resonance(&self) -> f64 {
        self.resonance
    }
    pub fn linewidth(&self) -> f64 {
        self.linewidth
    }
    pub fn mass(&self) -> f64 {
        self.mass
    }
    pub fn reduced_dipole(&self) -> f64 {
        self.reduced_dipole
    }

    pub fn ground_levels(&self) -> Vec<HalfInt> {
        self.ground_splittings.keys().copied().collect()
    }

    pub fn excited_levels(&self) -> Vec<HalfInt> {
        coupled_levels(self.nuclear_spin, self.excited_j)
    }

    /// δ(F') in rad/s.
    pub fn splitting(&self, level: HalfInt) -> Result<f64> {
        self.ground_splittings
            .get(&level)
            .copied()
            .ok_or_else(|| Error::invalid(format!("F'={level} is not a ground hyperfine level of {}", self.name)))
    }

    /// Ground sublevels ordered by (F, m).
    pub fn ground_sublevels(&self) -> &[SublevelId] {
        &self.ground
    }

    /// Excited sublevels ordered by (F, m).
    pub fn excited_sublevels(&self) -> &[SublevelId] {
        &self.excited
    }

    pub fn ground_index(&self, f: HalfInt, m: HalfInt) -> Option<usize> {
        self.ground.iter().position(|s| s.f == f && s.m == m)
    }

    pub(crate) fn excited_index(&self, f: HalfInt, m: HalfInt) -> Option<usize> {
        self.excited.iter().position(|s| s.f == f && s.m == m)
    }

    /// Tabulated `⟨e|e r·ε_q|g⟩` by sublevel indices.
    pub(crate) fn dipole_by_index(&self, excited: usize, ground: usize, q: i32) -> f64 {
        self.dipoles[(excited * self.ground.len() + ground) * 3 + (q + 1) as usize]
    }

    fn compute_dipole_table(&self) -> Result<Vec<f64>> {
        let mut table = vec![0.0; self.excited.len() * self.ground.len() * 3];
        for (ei, e) in self.excited.iter().enumerate() {
            for (gi, g) in self.ground.iter().enumerate() {
                for q in -1..=1 {
                    table[(ei * self.ground.len() + gi) * 3 + (q + 1) as usize] =
                        self.reduced_element(e.f, e.m, g.f, g.m, q)?;
                }
            }
        }
        Ok(table)
    }

    /// `⟨F m|e r·ε_q|F' m'⟩` from the Clebsch-Gordan coefficient and the
    /// 6-j symbol `{I J' F'; 1 F J}`.
    fn reduced_element(&self, f: HalfInt, m: HalfInt, fg: HalfInt, mg: HalfInt, q: i32) -> Result<f64> {
        let q = HalfInt::from_int(q);
        if m != mg + q {
            return Ok(0.0);
        }
        let cg = clebsch_gordan(fg, mg, HalfInt::ONE, q, f, m)?;
        if cg.value == 0.0 {
            return Ok(0.0);
        }
        let sixj = wigner_6j(self.nuclear_spin, self.ground_j, fg, HalfInt::ONE, f, self.excited_j)?;
        let exponent = -(self.nuclear_spin + self.ground_j + f).doubled() / 2;
        let sign = if exponent.rem_euclid(2) == 0 { -1.0 } else { 1.0 };
        let degeneracy = f64::from(fg.multiplicity() * self.excited_j.multiplicity());
        Ok(sign * degeneracy.sqrt() * self.reduced_dipole * cg.value * sixj.value)
    }
}

/// `ε_q` for `q = -1, 0, +1` (index `q + 1`): `ε_∓1 = ±(x̂ ∓ iŷ)/√2`,
/// `ε_0 = ẑ`.
pub fn spherical_basis_vectors() -> [[Complex64; 3]; 3] {
    let r = FRAC_1_SQRT_2;
    let z = Complex64::new(0.0, 0.0);
    [
        [Complex64::new(r, 0.0), Complex64::new(0.0, -r), z],
        [z, z, Complex64::new(1.0, 0.0)],
        [Complex64::new(-r, 0.0), Complex64::new(0.0, -r), z],
    ]
}

/// `ε_q` for a single `q ∈ {-1, 0, +1}`.
pub fn spherical_basis_vector(q: i32) -> [Complex64; 3] {
    assert!((-1..=1).contains(&q), "q must be -1, 0 or +1");
    spherical_basis_vectors()[(q + 1) as usize]
}

fn check_sublevel(spec: &AtomSpec, s: &SublevelId, manifold: Manifold) -> Result<usize> {
    if s.manifold != manifold {
        return Err(Error::invalid(format!(
            "sublevel |{} {}⟩ belongs to the {:?} manifold, expected {:?}",
            s.f, s.m, s.manifold, manifold
        )));
    }
    let idx = match manifold {
        Manifold::Ground => spec.ground_index(s.f, s.m),
        Manifold::Excited => spec.excited_index(s.f, s.m),
    };
    idx.ok_or_else(|| Error::invalid(format!("|{} {}⟩ is not a {:?} sublevel of {}", s.f, s.m, manifold, spec.name)))
}

/// Dipole matrix element `⟨F m|e r·ε_q|F' m'⟩` between an excited and a
/// ground sublevel.
pub fn dipole_matrix_element(spec: &AtomSpec, excited: &SublevelId, ground: &SublevelId, q: i32) -> Result<f64> {
    if !(-1..=1).contains(&q) {
        return Err(Error::invalid(format!("q = {q} is not a spherical component")));
    }
    let e = check_sublevel(spec, excited, Manifold::Excited)?;
    let g = check_sublevel(spec, ground, Manifold::Ground)?;
    Ok(spec.dipole_by_index(e, g, q))
}

pub(crate) fn ground_index_checked(spec: &AtomSpec, s: &SublevelId) -> Result<usize> {
    check_sublevel(spec, s, Manifold::Ground)
}

pub(crate) fn excited_index_checked(spec: &AtomSpec, s: &SublevelId) -> Result<usize> {
    check_sublevel(spec, s, Manifold::Excited)
}

/// `Δ(F') = ω_L − ω_a + δ(F')` in rad/s; negative for red detuning.
pub fn detuning(spec: &AtomSpec, laser: f64, level: HalfInt) -> Result<f64> {
    Ok(laser - spec.resonance + spec.splitting(level)?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidityReport {
    /// `(F', |Δ(F')|/Γ)` for every ground level.
    pub ratios: Vec<(HalfInt, f64)>,
    pub threshold: f64,
    pub pass: bool,
}

/// Checks `|Δ(F')|/Γ > threshold` for every ground level.
pub fn validity_check(spec: &AtomSpec, laser: f64, threshold: f64) -> ValidityReport {
    let ratios: Vec<(HalfInt, f64)> = spec
        .ground_splittings
        .iter()
        .map(|(&f, &delta)| (f, (laser - spec.resonance + delta).abs() / spec.linewidth))
        .collect();
    let pass = ratios.iter().all(|&(_, r)| r > threshold);
    ValidityReport {
        ratios,
        threshold,
        pass,
    }
}
