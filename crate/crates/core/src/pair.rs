//! The atom-photon pair state created when a pump photon scatters off a
//! condensate atom into a detection direction.
//!
//! For each transverse polarization `λ` of the detected photon the scattered
//! atom is left in the spinor `Σ_{F'm'} G_{kλ,K1}(Fm, F'm') φ₀(F'm')`.
//! The joint state stacks both branches, labels each photon by the frequency
//! fixed by energy conservation (ground splitting and recoil), normalizes,
//! and fixes the global phase so the first non-zero amplitude is real and
//! positive.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::angular::HalfInt;
use crate::atom::{detuning, validity_check, AtomSpec, SublevelId, DEFAULT_VALIDITY_THRESHOLD};
use crate::coupling::{photon_modes, raman_numerator, single_photon_table, PhotonMode, INVARIANT_TOL};
use crate::entanglement::AmplitudeMatrix;
use crate::error::{Error, Result};
use crate::vector::{cnorm, norm, scale, sub, transverse_overlap, CVec3, Vec3};

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Relative size below which an unnormalized branch counts as zero.
const ZERO_BRANCH: f64 = 1e-12;
/// Relative magnitude below which an amplitude is ignored when fixing the
/// global phase.
const PHASE_CUTOFF: f64 = 1e-12;

/// Pump laser and condensate source, treated as undepleted classical fields.
#[derive(Clone, Debug, PartialEq)]
pub struct PumpConfig {
    direction: Vec3,
    polarization: CVec3,
    /// ω_L in rad/s.
    laser: f64,
    amplitude: Complex64,
    atom_number: f64,
}

impl PumpConfig {
    pub fn new(direction: Vec3, polarization: CVec3, laser: f64, amplitude: Complex64, atom_number: f64) -> Result<Self> {
        if (norm(&direction) - 1.0).abs() > INVARIANT_TOL {
            return Err(Error::invalid("pump direction is not a unit vector"));
        }
        if (cnorm(&polarization) - 1.0).abs() > INVARIANT_TOL {
            return Err(Error::invalid("pump polarization is not unit-norm"));
        }
        if transverse_overlap(&polarization, &direction) > INVARIANT_TOL {
            return Err(Error::invalid("pump polarization is not transverse to the pump direction"));
        }
        if !(laser > 0.0 && laser.is_finite()) {
            return Err(Error::invalid("laser frequency must be positive"));
        }
        if !(amplitude.norm().is_finite()) {
            return Err(Error::invalid("pump amplitude must be finite"));
        }
        if !(atom_number >= 1.0 && atom_number.is_finite()) {
            return Err(Error::invalid("atom number must be at least 1"));
        }
        Ok(PumpConfig {
            direction,
            polarization,
            laser,
            amplitude,
            atom_number,
        })
    }

    /// Pump along ŷ, π-polarized along ẑ, unit amplitude, one atom.
    pub fn y_propagating_pi(laser: f64) -> Self {
        PumpConfig::new(
            [0.0, 1.0, 0.0],
            [0.0.into(), 0.0.into(), 1.0.into()],
            laser,
            Complex64::new(1.0, 0.0),
            1.0,
        )
        .expect("fixed pump geometry is valid")
    }

    pub fn with_source(mut self, amplitude: Complex64, atom_number: f64) -> Result<Self> {
        self = PumpConfig::new(self.direction, self.polarization, self.laser, amplitude, atom_number)?;
        Ok(self)
    }

    pub fn direction(&self) -> Vec3 {
        self.direction
    }
    pub fn polarization(&self) -> CVec3 {
        self.polarization
    }
    pub fn laser(&self) -> f64 {
        self.laser
    }
    pub fn amplitude(&self) -> Complex64 {
        self.amplitude
    }
    pub fn atom_number(&self) -> f64 {
        self.atom_number
    }

    /// The pump as photon mode `(K, λ=1)`.
    pub fn mode(&self) -> PhotonMode {
        PhotonMode::new(self.direction, 1, self.polarization).expect("pump invariants checked at construction")
    }

    /// Pump wave vector `K = ω_L/c · K̂` in 1/m.
    pub fn wavevector(&self) -> Vec3 {
        scale(&self.direction, self.laser / SPEED_OF_LIGHT)
    }
}

/// Internal state of the condensate mode over ground sublevels.
#[derive(Clone, Debug, PartialEq)]
pub struct CondensateSpinor {
    amplitudes: BTreeMap<(HalfInt, HalfInt), Complex64>,
}

impl CondensateSpinor {
    /// Entries keyed by `(F', m')`; must be unit-norm within 1e-12.
    pub fn new(amplitudes: BTreeMap<(HalfInt, HalfInt), Complex64>) -> Result<Self> {
        let n2: f64 = amplitudes.values().map(|a| a.norm_sqr()).sum();
        if (n2 - 1.0).abs() > INVARIANT_TOL {
            return Err(Error::invalid(format!("condensate spinor has norm² {n2}, expected 1")));
        }
        for (f, m) in amplitudes.keys() {
            if (f.doubled() - m.doubled()) % 2 != 0 || m.doubled().abs() > f.doubled() {
                return Err(Error::invalid(format!("|{f} {m}⟩ is not a valid sublevel")));
            }
        }
        Ok(CondensateSpinor { amplitudes })
    }

    /// A condensate fully in `|F' m'⟩`.
    pub fn single(f: HalfInt, m: HalfInt) -> Result<Self> {
        Self::new(BTreeMap::from([((f, m), Complex64::new(1.0, 0.0))]))
    }

    pub fn amplitudes(&self) -> &BTreeMap<(HalfInt, HalfInt), Complex64> {
        &self.amplitudes
    }

    /// Ground levels carrying non-zero population.
    pub fn occupied_levels(&self) -> Vec<HalfInt> {
        let mut out: Vec<HalfInt> = self
            .amplitudes
            .iter()
            .filter(|(_, a)| a.norm_sqr() > 0.0)
            .map(|((f, _), _)| *f)
            .collect();
        out.dedup();
        out
    }

    fn dense(&self, spec: &AtomSpec) -> Result<Vec<Complex64>> {
        let mut out = vec![Complex64::default(); spec.ground_sublevels().len()];
        for (&(f, m), &a) in &self.amplitudes {
            let idx = spec
                .ground_index(f, m)
                .ok_or_else(|| Error::invalid(format!("condensate sublevel |{f} {m}⟩ is not a ground sublevel of {}", spec.name())))?;
            out[idx] = a;
        }
        Ok(out)
    }
}

/// Knobs shared by the state builders.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScatterOptions {
    /// Minimum `|Δ(F')|/Γ` over all ground levels.
    pub validity_threshold: f64,
    /// When false a failed validity check is ignored (warn-only mode).
    pub enforce_validity: bool,
    /// Channels of different final level closer than this (rad/s) are
    /// flagged unresolvable.
    pub spectral_resolution: f64,
}

impl Default for ScatterOptions {
    fn default() -> Self {
        ScatterOptions {
            validity_threshold: DEFAULT_VALIDITY_THRESHOLD,
            enforce_validity: true,
            spectral_resolution: TAU * 1e6,
        }
    }
}

/// Normalized atomic spinor correlated with one detected photon mode.
#[derive(Clone, Debug, PartialEq)]
pub struct ScatteredSpinor {
    /// Ground sublevels, ordered like [`AtomSpec::ground_sublevels`].
    pub basis: Vec<SublevelId>,
    /// Unit-norm amplitudes aligned with `basis`; empty when the branch
    /// vanishes.
    pub amplitudes: Vec<Complex64>,
    /// Norm of the unnormalized `G·φ₀` vector; zero for a vanishing branch.
    pub normalization: f64,
    pub mode: PhotonMode,
}

impl ScatteredSpinor {
    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn amplitude(&self, f: HalfInt, m: HalfInt) -> Complex64 {
        self.basis
            .iter()
            .position(|s| s.f == f && s.m == m)
            .and_then(|i| self.amplitudes.get(i).copied())
            .unwrap_or_default()
    }
}

fn check_physics(spec: &AtomSpec, pump: &PumpConfig, cond: &CondensateSpinor, opts: &ScatterOptions) -> Result<()> {
    for f in cond.occupied_levels() {
        if detuning(spec, pump.laser, f)? == 0.0 {
            return Err(Error::SingularDetuning { level: f.to_string() });
        }
    }
    if opts.enforce_validity {
        let report = validity_check(spec, pump.laser, opts.validity_threshold);
        if !report.pass {
            let (level, ratio) = report
                .ratios
                .iter()
                .copied()
                .find(|&(_, r)| r <= opts.validity_threshold)
                .expect("failed report has a failing level");
            return Err(Error::NearResonance {
                level: level.to_string(),
                ratio,
                threshold: opts.validity_threshold,
            });
        }
    }
    Ok(())
}

/// Unnormalized branch vector `Σ_{F'm'} G(Fm, F'm') φ₀(F'm')` and the
/// magnitude scale used to decide whether it vanishes.
fn raw_branch(spec: &AtomSpec, pump: &PumpConfig, phi0: &[Complex64], mode: &PhotonMode) -> Result<(Vec<Complex64>, f64)> {
    let g_in = single_photon_table(spec, &pump.mode());
    let g_out = single_photon_table(spec, mode);
    let ng = spec.ground_sublevels().len();
    let mut out = vec![Complex64::default(); ng];
    let mut min_delta = f64::INFINITY;
    for (init, a) in phi0.iter().enumerate() {
        if *a == Complex64::default() {
            continue;
        }
        let delta = detuning(spec, pump.laser, spec.ground_sublevels()[init].f)?;
        if delta == 0.0 {
            return Err(Error::SingularDetuning {
                level: spec.ground_sublevels()[init].f.to_string(),
            });
        }
        min_delta = min_delta.min(delta.abs());
        for (fin, slot) in out.iter_mut().enumerate() {
            *slot += raman_numerator(spec, &g_out, &g_in, fin, init) / delta * a;
        }
    }
    let d = spec.reduced_dipole();
    let scale = d * d * mode.field_per_photon() * pump.mode().field_per_photon() / min_delta;
    Ok((out, scale))
}

fn branch_to_spinor(spec: &AtomSpec, raw: Vec<Complex64>, scale: f64, mode: PhotonMode) -> ScatteredSpinor {
    let n = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    let basis = spec.ground_sublevels().to_vec();
    if !(n > ZERO_BRANCH * scale) {
        return ScatteredSpinor {
            basis,
            amplitudes: Vec::new(),
            normalization: 0.0,
            mode,
        };
    }
    ScatteredSpinor {
        basis,
        amplitudes: raw.into_iter().map(|a| a / n).collect(),
        normalization: n,
        mode,
    }
}

/// Atomic spinor `|S_kλ⟩` paired with a photon detected along `k` with
/// polarization index `lambda`, using default options.
pub fn scattered_spinor(spec: &AtomSpec, pump: &PumpConfig, phi0: &CondensateSpinor, k: &Vec3, lambda: u8) -> Result<ScatteredSpinor> {
    scattered_spinor_with(spec, pump, phi0, k, lambda, &ScatterOptions::default())
}

pub fn scattered_spinor_with(
    spec: &AtomSpec,
    pump: &PumpConfig,
    phi0: &CondensateSpinor,
    k: &Vec3,
    lambda: u8,
    opts: &ScatterOptions,
) -> Result<ScatteredSpinor> {
    if !(lambda == 1 || lambda == 2) {
        return Err(Error::invalid(format!("polarization index {lambda} is not 1 or 2")));
    }
    check_physics(spec, pump, phi0, opts)?;
    let mode = photon_modes(k)?[(lambda - 1) as usize].clone();
    let dense = phi0.dense(spec)?;
    let (raw, scale) = raw_branch(spec, pump, &dense, &mode)?;
    Ok(branch_to_spinor(spec, raw, scale, mode))
}

/// Frequency (rad/s) of the photon emitted along `k` when the atom ends in
/// ground level `final_level`: `ω = ω_L − δ(F) − ħ|K − k(ω)|²/2m`, with the
/// condensate in the zero-offset level.
pub fn photon_frequency(spec: &AtomSpec, pump: &PumpConfig, k: &Vec3, final_level: HalfInt) -> Result<f64> {
    let base = spec
        .ground_levels()
        .into_iter()
        .find(|&f| spec.splitting(f).map(|d| d == 0.0).unwrap_or(false))
        .ok_or_else(|| Error::invalid("no ground level has zero splitting offset"))?;
    photon_frequency_from(spec, pump, k, base, final_level)
}

/// As [`photon_frequency`] for a condensate in ground level `initial`:
/// `ω = ω_L + δ(initial) − δ(F) − recoil`.
pub fn photon_frequency_from(spec: &AtomSpec, pump: &PumpConfig, k: &Vec3, initial: HalfInt, final_level: HalfInt) -> Result<f64> {
    if (norm(k) - 1.0).abs() > INVARIANT_TOL {
        return Err(Error::invalid("detection direction is not a unit vector"));
    }
    let base = pump.laser + spec.splitting(initial)? - spec.splitting(final_level)?;
    let big_k = pump.wavevector();
    let recoil = |omega: f64| {
        let q = sub(&big_k, &scale(k, omega / SPEED_OF_LIGHT));
        HBAR * (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]) / (2.0 * spec.mass())
    };
    let mut omega = base;
    for _ in 0..100 {
        let next = base - recoil(omega);
        if !(next > 0.0) {
            return Err(Error::Numerical("photon frequency became non-positive".into()));
        }
        if (next - omega).abs() <= 1e-15 * next {
            return Ok(next);
        }
        omega = next;
    }
    Err(Error::Numerical("photon frequency iteration did not converge".into()))
}

/// One photon label of the joint state.
#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    /// Final ground level of the atom; keys the frequency channel.
    pub final_level: HalfInt,
    pub lambda: u8,
    /// rad/s
    pub omega: f64,
    pub polarization: CVec3,
}

impl Channel {
    /// Serialization key `"omega_hz:lambda"`.
    pub fn key(&self) -> String {
        format!("{}:{}", self.omega / TAU, self.lambda)
    }
}

/// Joint atom-photon state over (channel) ⊗ (ground sublevel).
#[derive(Clone, Debug, PartialEq)]
pub struct PairState {
    pub direction: Vec3,
    pub channels: Vec<Channel>,
    pub atom_basis: Vec<SublevelId>,
    pub amplitudes: AmplitudeMatrix,
    /// `ħ(K − k)` in kg·m/s with the nominal `|k| = ω_L/c`.
    pub recoil_momentum: Vec3,
    /// `ħk` in kg·m/s, same convention.
    pub photon_momentum: Vec3,
    /// `N₀|β_L|² Σ_λ N_kλ²` (relative rate units).
    pub emission_weight: f64,
    /// False if two channels of different final level lie within the
    /// spectral resolution.
    pub resolvable: bool,
}

impl AsRef<AmplitudeMatrix> for PairState {
    fn as_ref(&self) -> &AmplitudeMatrix {
        &self.amplitudes
    }
}

impl PairState {
    pub fn amplitude(&self, channel: usize, atom: usize) -> Complex64 {
        self.amplitudes.get(channel, atom)
    }

    /// Amplitude for (final F, λ) ⊗ |F m⟩, zero if any label is absent.
    pub fn amplitude_by_label(&self, final_level: HalfInt, lambda: u8, f: HalfInt, m: HalfInt) -> Complex64 {
        let row = self.channels.iter().position(|c| c.final_level == final_level && c.lambda == lambda);
        let col = self.atom_basis.iter().position(|s| s.f == f && s.m == m);
        match (row, col) {
            (Some(r), Some(c)) => self.amplitudes.get(r, c),
            _ => Complex64::default(),
        }
    }

    /// Total probability of each final level.
    pub fn level_probabilities(&self) -> Vec<(HalfInt, f64)> {
        let mut out: Vec<(HalfInt, f64)> = Vec::new();
        for (r, ch) in self.channels.iter().enumerate() {
            let p: f64 = (0..self.atom_basis.len()).map(|c| self.amplitudes.get(r, c).norm_sqr()).sum();
            match out.iter_mut().find(|(f, _)| *f == ch.final_level) {
                Some(slot) => slot.1 += p,
                None => out.push((ch.final_level, p)),
            }
        }
        out
    }

    /// Probability of each photon channel.
    pub fn channel_probabilities(&self) -> Vec<f64> {
        (0..self.channels.len())
            .map(|r| (0..self.atom_basis.len()).map(|c| self.amplitudes.get(r, c).norm_sqr()).sum())
            .collect()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }
}

fn fix_global_phase(m: &mut AmplitudeMatrix) {
    let max = m.data.iter().map(|a| a.norm()).fold(0.0, f64::max);
    if let Some(first) = m.data.iter().find(|a| a.norm() > PHASE_CUTOFF * max).copied() {
        let rot = first.conj() / first.norm();
        for a in &mut m.data {
            *a *= rot;
        }
        // Exactly real for the reference entry.
        if let Some(a) = m.data.iter_mut().find(|a| a.norm() > PHASE_CUTOFF * max) {
            *a = Complex64::new(a.norm(), 0.0);
        }
    }
}

/// Builds the normalized joint state for detection along `k` with default
/// options.
pub fn build_pair_state(spec: &AtomSpec, pump: &PumpConfig, phi0: &CondensateSpinor, k: &Vec3) -> Result<PairState> {
    build_pair_state_with(spec, pump, phi0, k, &ScatterOptions::default())
}

pub fn build_pair_state_with(
    spec: &AtomSpec,
    pump: &PumpConfig,
    phi0: &CondensateSpinor,
    k: &Vec3,
    opts: &ScatterOptions,
) -> Result<PairState> {
    let occupied = phi0.occupied_levels();
    let initial = match occupied.as_slice() {
        [f] => *f,
        _ => {
            return Err(Error::invalid(
                "frequency labels need a condensate occupying a single ground hyperfine level",
            ))
        }
    };
    check_physics(spec, pump, phi0, opts)?;
    let modes = photon_modes(k)?;
    let dense = phi0.dense(spec)?;

    let mut branches = Vec::with_capacity(2);
    for mode in &modes {
        let (raw, scale) = raw_branch(spec, pump, &dense, mode)?;
        let n = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let keep = n > ZERO_BRANCH * scale;
        branches.push((raw, if keep { n } else { 0.0 }));
    }
    let total2: f64 = branches.iter().map(|(_, n)| n * n).sum();
    if total2 == 0.0 {
        return Err(Error::EmptyState(format!("no scattering into direction {k:?}")));
    }

    let atom_basis = spec.ground_sublevels().to_vec();
    let levels = spec.ground_levels();
    let mut channels = Vec::new();
    for &f in &levels {
        let omega = photon_frequency_from(spec, pump, k, initial, f)?;
        for mode in &modes {
            channels.push(Channel {
                final_level: f,
                lambda: mode.lambda(),
                omega,
                polarization: mode.polarization(),
            });
        }
    }

    let cols = atom_basis.len();
    let mut matrix = AmplitudeMatrix::zeros(channels.len(), cols);
    let total = total2.sqrt();
    for (r, ch) in channels.iter().enumerate() {
        let (raw, n) = &branches[(ch.lambda - 1) as usize];
        if *n == 0.0 {
            continue;
        }
        for (c, s) in atom_basis.iter().enumerate() {
            if s.f == ch.final_level {
                matrix.set(r, c, raw[c] / total);
            }
        }
    }
    fix_global_phase(&mut matrix);

    let mut resolvable = true;
    for a in &channels {
        for b in &channels {
            if a.final_level != b.final_level && (a.omega - b.omega).abs() < opts.spectral_resolution {
                resolvable = false;
            }
        }
    }

    let photon_momentum = scale(k, HBAR * pump.laser / SPEED_OF_LIGHT);
    let pump_momentum = scale(&pump.direction, HBAR * pump.laser / SPEED_OF_LIGHT);
    Ok(PairState {
        direction: *k,
        channels,
        atom_basis,
        amplitudes: matrix,
        recoil_momentum: sub(&pump_momentum, &photon_momentum),
        photon_momentum,
        emission_weight: pump.atom_number * pump.amplitude.norm_sqr() * total2,
        resolvable,
    })
}

/// Projects onto the photon channel of final level `level` and renormalizes.
pub fn spectral_filter(state: &PairState, level: HalfInt) -> Result<PairState> {
    let rows: Vec<usize> = (0..state.channels.len())
        .filter(|&r| state.channels[r].final_level == level)
        .collect();
    if rows.is_empty() {
        return Err(Error::invalid(format!("no photon channel for final level F={level}")));
    }
    let cols: Vec<usize> = (0..state.atom_basis.len())
        .filter(|&c| state.atom_basis[c].f == level)
        .collect();
    let mut matrix = AmplitudeMatrix::zeros(rows.len(), cols.len());
    let mut p = 0.0;
    for (i, &r) in rows.iter().enumerate() {
        for (j, &c) in cols.iter().enumerate() {
            let a = state.amplitudes.get(r, c);
            p += a.norm_sqr();
            matrix.set(i, j, a);
        }
    }
    if !(p > 1e-24) {
        return Err(Error::EmptyState(format!("channel F={level} has zero probability")));
    }
    let n = p.sqrt();
    for a in &mut matrix.data {
        *a /= n;
    }
    fix_global_phase(&mut matrix);
    Ok(PairState {
        direction: state.direction,
        channels: rows.iter().map(|&r| state.channels[r].clone()).collect(),
        atom_basis: cols.iter().map(|&c| state.atom_basis[c]).collect(),
        amplitudes: matrix,
        recoil_momentum: state.recoil_momentum,
        photon_momentum: state.photon_momentum,
        emission_weight: state.emission_weight * p,
        resolvable: true,
    })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelRecord {
    key: String,
    omega_hz: f64,
    lambda: u8,
    final_doubled_f: i32,
    polarization: [[f64; 2]; 3],
}

fn c2(a: Complex64) -> Value {
    json!([a.re, a.im])
}

impl PairState {
    /// JSON form: complex numbers as `[re, im]`, channels keyed
    /// `"omega_hz:lambda"`, atom basis keyed `"2F:2m"`. Only entries whose
    /// atom level matches the channel's final level are written.
    pub fn to_json_value(&self) -> Value {
        let channels: Vec<Value> = self
            .channels
            .iter()
            .map(|c| {
                serde_json::to_value(ChannelRecord {
                    key: c.key(),
                    omega_hz: c.omega / TAU,
                    lambda: c.lambda,
                    final_doubled_f: c.final_level.doubled(),
                    polarization: c.polarization.map(|z| [z.re, z.im]),
                })
                .expect("channel record serializes")
            })
            .collect();
        let mut amps = Map::new();
        for (r, ch) in self.channels.iter().enumerate() {
            let mut row = Map::new();
            for (c, s) in self.atom_basis.iter().enumerate() {
                if s.f == ch.final_level {
                    row.insert(s.key(), c2(self.amplitudes.get(r, c)));
                }
            }
            amps.insert(ch.key(), Value::Object(row));
        }
        json!({
            "direction": self.direction,
            "channels": channels,
            "atom_basis": self.atom_basis.iter().map(|s| s.key()).collect::<Vec<_>>(),
            "amplitudes": amps,
            "recoil_momentum_kg_m_s": self.recoil_momentum,
            "photon_momentum_kg_m_s": self.photon_momentum,
            "emission_weight": self.emission_weight,
            "resolvable": self.resolvable,
        })
    }

    pub fn from_json_value(v: &Value) -> Result<Self> {
        let bad = |what: &str| Error::invalid(format!("pair state JSON: {what}"));
        let vec3 = |key: &str| -> Result<Vec3> { serde_json::from_value(v.get(key).cloned().ok_or_else(|| bad(key))?).map_err(|e| bad(&e.to_string())) };
        let records: Vec<ChannelRecord> =
            serde_json::from_value(v.get("channels").cloned().ok_or_else(|| bad("channels"))?).map_err(|e| bad(&e.to_string()))?;
        let basis_keys: Vec<String> =
            serde_json::from_value(v.get("atom_basis").cloned().ok_or_else(|| bad("atom_basis"))?).map_err(|e| bad(&e.to_string()))?;
        let atom_basis = basis_keys
            .iter()
            .map(|k| parse_sublevel_key(k).map(|(f, m)| SublevelId::ground(f, m)))
            .collect::<Result<Vec<_>>>()?;
        let channels: Vec<Channel> = records
            .iter()
            .map(|r| Channel {
                final_level: HalfInt::from_doubled(r.final_doubled_f),
                lambda: r.lambda,
                omega: r.omega_hz * TAU,
                polarization: r.polarization.map(|[re, im]| Complex64::new(re, im)),
            })
            .collect();
        let amps: BTreeMap<String, BTreeMap<String, [f64; 2]>> =
            serde_json::from_value(v.get("amplitudes").cloned().ok_or_else(|| bad("amplitudes"))?).map_err(|e| bad(&e.to_string()))?;
        let mut matrix = AmplitudeMatrix::zeros(channels.len(), atom_basis.len());
        for (r, rec) in records.iter().enumerate() {
            let Some(row) = amps.get(&rec.key) else { continue };
            for (key, [re, im]) in row {
                let c = basis_keys.iter().position(|k| k == key).ok_or_else(|| bad(&format!("unknown atom key {key}")))?;
                matrix.set(r, c, Complex64::new(*re, *im));
            }
        }
        Ok(PairState {
            direction: vec3("direction")?,
            channels,
            atom_basis,
            amplitudes: matrix,
            recoil_momentum: vec3("recoil_momentum_kg_m_s")?,
            photon_momentum: vec3("photon_momentum_kg_m_s")?,
            emission_weight: v.get("emission_weight").and_then(Value::as_f64).ok_or_else(|| bad("emission_weight"))?,
            resolvable: v.get("resolvable").and_then(Value::as_bool).ok_or_else(|| bad("resolvable"))?,
        })
    }
}

/// Parses `"2F:2m"`.
pub fn parse_sublevel_key(key: &str) -> Result<(HalfInt, HalfInt)> {
    let bad = || Error::invalid(format!("`{key}` is not a \"2F:2m\" sublevel key"));
    let (f, m) = key.split_once(':').ok_or_else(bad)?;
    let f: i32 = f.trim().parse().map_err(|_| bad())?;
    let m: i32 = m.trim().parse().map_err(|_| bad())?;
    Ok((HalfInt::from_doubled(f), HalfInt::from_doubled(m)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(d: i32) -> HalfInt {
        HalfInt::from_doubled(d)
    }

    fn sodium_setup() -> (AtomSpec, PumpConfig, CondensateSpinor) {
        let na = AtomSpec::sodium();
        let pump = PumpConfig::y_propagating_pi(na.resonance() - TAU * 1e10);
        let cond = CondensateSpinor::single(h(2), h(0)).unwrap();
        (na, pump, cond)
    }

    #[test]
    fn sigma_branches_along_z() {
        let (na, pump, cond) = sodium_setup();
        let z = [0.0, 0.0, 1.0];
        let sp = scattered_spinor(&na, &pump, &cond, &z, 1).unwrap();
        let a1 = sp.amplitude(h(2), h(-2));
        let a2 = sp.amplitude(h(4), h(-2));
        let ratio = a2 / a1;
        assert!((ratio - Complex64::from(3f64.sqrt())).norm() < 1e-12, "{ratio}");
        assert!((a1.norm() - 0.5).abs() < 1e-12);

        let sm = scattered_spinor(&na, &pump, &cond, &z, 2).unwrap();
        let ratio = sm.amplitude(h(4), h(2)) / sm.amplitude(h(2), h(2));
        assert!((ratio + Complex64::from(3f64.sqrt())).norm() < 1e-12, "{ratio}");
        assert!((sp.normalization - sm.normalization).abs() < 1e-12 * sp.normalization);
    }

    #[test]
    fn condensate_must_be_normalized() {
        let m = BTreeMap::from([((h(2), h(0)), Complex64::new(0.5, 0.0))]);
        assert!(CondensateSpinor::new(m).is_err());
        assert!(CondensateSpinor::single(h(2), h(1)).is_err());
    }

    #[test]
    fn filter_rejects_missing_level() {
        let (na, pump, cond) = sodium_setup();
        let s = build_pair_state(&na, &pump, &cond, &[0.0, 0.0, 1.0]).unwrap();
        assert!(matches!(spectral_filter(&s, h(0)), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn frequency_infinite_mass_limit() {
        let mut rec = AtomSpec::sodium().to_file_record();
        rec.mass_kg = 1e30;
        let heavy = AtomSpec::from_file_record(&rec).unwrap();
        let pump = PumpConfig::y_propagating_pi(heavy.resonance() - TAU * 1e10);
        let w = photon_frequency(&heavy, &pump, &[0.0, 0.0, 1.0], h(2)).unwrap();
        assert_eq!(w, pump.laser());
    }

    #[test]
    fn json_round_trip() {
        let (na, pump, cond) = sodium_setup();
        let s = build_pair_state(&na, &pump, &cond, &[0.0, 0.0, 1.0]).unwrap();
        let v = s.to_json_value();
        let back = PairState::from_json_value(&v).unwrap();
        assert_eq!(back.channels.len(), s.channels.len());
        for (a, b) in back.amplitudes.data.iter().zip(&s.amplitudes.data) {
            assert_eq!(a, b);
        }
        for (a, b) in back.channels.iter().zip(&s.channels) {
            assert!((a.omega - b.omega).abs() <= 1e-15 * b.omega * 4.0);
        }
    }

    #[test]
    fn sublevel_keys() {
        assert_eq!(parse_sublevel_key("4:-2").unwrap(), (h(4), h(-2)));
        assert!(parse_sublevel_key("4").is_err());
        assert!(parse_sublevel_key("a:b").is_err());
    }
}
