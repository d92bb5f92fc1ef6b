//! CHSH correlations of a 2×2 photon ⊗ atom state, analytic and sampled.
//!
//! Measurement model. In the two supported labels of each side, ordered as
//! they appear in the state (σ+ before σ− for the photon, lower m first for
//! the atom), both parties measure
//!
//! ```text
//! O(θ) = cos 2θ · X + sin 2θ · Z
//! ```
//!
//! i.e. a linear analyzer whose `θ = 0` axis is `(|0⟩ + |1⟩)/√2` and whose
//! orthogonal axis is `(|0⟩ − |1⟩)/√2`. Angles are analyzer (half) angles,
//! so the symmetric Bell state gives `E(a, b) = cos(2a − 2b)` and the
//! antisymmetric one `E(a, b) = −cos(2a + 2b)`.

use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::entanglement::AmplitudeMatrix;
use crate::error::{Error, Result};

/// Identifier of the sampling generator, recorded in outputs.
pub const GENERATOR: &str = "rand_chacha-0.3/ChaCha20Rng; stream = block index; block = 4096 trials";
/// Trials per independently seeded block.
pub const BLOCK: usize = 4096;

const GRID_STEPS: usize = 360;
const DESCENT_TOL: f64 = 1e-10;
const TIE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeasurementSetting {
    pub photon_angle: f64,
    pub atom_angle: f64,
}

/// Analyzer angles `(a, a′, b, b′)` in radians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChshSettings {
    pub a: f64,
    pub a_prime: f64,
    pub b: f64,
    pub b_prime: f64,
}

impl ChshSettings {
    pub fn new(a: f64, a_prime: f64, b: f64, b_prime: f64) -> Result<Self> {
        if ![a, a_prime, b, b_prime].iter().all(|x| x.is_finite()) {
            return Err(Error::invalid("measurement angles must be finite"));
        }
        Ok(ChshSettings { a, a_prime, b, b_prime })
    }

    /// `(0, π/4, π/8, 3π/8)`.
    pub fn standard() -> Self {
        use std::f64::consts::PI;
        ChshSettings {
            a: 0.0,
            a_prime: PI / 4.0,
            b: PI / 8.0,
            b_prime: 3.0 * PI / 8.0,
        }
    }

    /// Setting pair `i` in the order (a,b), (a,b′), (a′,b), (a′,b′).
    pub fn pair(&self, i: usize) -> MeasurementSetting {
        let photon_angle = if i < 2 { self.a } else { self.a_prime };
        let atom_angle = if i.is_multiple_of(2) { self.b } else { self.b_prime };
        MeasurementSetting { photon_angle, atom_angle }
    }
}

/// Signs of the four correlations in `S`.
const CHSH_SIGNS: [f64; 4] = [1.0, -1.0, 1.0, 1.0];

fn u(theta: f64) -> [f64; 2] {
    [(2.0 * theta).cos(), (2.0 * theta).sin()]
}

/// `+1` eigenvector of `O(θ)`.
fn analyzer(theta: f64) -> [f64; 2] {
    let (s, c) = theta.sin_cos();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    [(c + s) * r, (c - s) * r]
}

fn observable(theta: f64) -> [[f64; 2]; 2] {
    let [c, s] = u(theta);
    [[s, c], [c, -s]]
}

/// `E(a, b) = ⟨ψ| O(a) ⊗ O(b) |ψ⟩`.
pub fn correlation<S: AsRef<AmplitudeMatrix> + ?Sized>(state: &S, a: f64, b: f64) -> Result<f64> {
    let m = state.as_ref().two_by_two()?;
    Ok(correlation_2x2(&m, a, b))
}

fn correlation_2x2(m: &[[Complex64; 2]; 2], a: f64, b: f64) -> f64 {
    let oa = observable(a);
    let ob = observable(b);
    let mut e = Complex64::default();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    e += m[i][j].conj() * oa[i][k] * ob[j][l] * m[k][l];
                }
            }
        }
    }
    e.re / norm2(m)
}

fn norm2(m: &[[Complex64; 2]; 2]) -> f64 {
    m.iter().flatten().map(|a| a.norm_sqr()).sum()
}

/// `S = E(a,b) − E(a,b′) + E(a′,b) + E(a′,b′)`.
pub fn chsh<S: AsRef<AmplitudeMatrix> + ?Sized>(state: &S, settings: &ChshSettings) -> Result<f64> {
    let m = state.as_ref().two_by_two()?;
    Ok(chsh_2x2(&m, settings))
}

fn chsh_2x2(m: &[[Complex64; 2]; 2], s: &ChshSettings) -> f64 {
    (0..4)
        .map(|i| {
            let p = s.pair(i);
            CHSH_SIGNS[i] * correlation_2x2(m, p.photon_angle, p.atom_angle)
        })
        .sum()
}

/// Correlation tensor `T_ij = ⟨σ_i ⊗ σ_j⟩` over `{X, Z}`, so that
/// `E(a, b) = u(a)ᵀ T u(b)` with `u(θ) = (cos 2θ, sin 2θ)`.
fn correlation_tensor(m: &[[Complex64; 2]; 2]) -> [[f64; 2]; 2] {
    use std::f64::consts::FRAC_PI_4;
    // E(0,0)=T_xx, E(π/4,π/4)=T_zz, E(0,π/4)=T_xz, E(π/4,0)=T_zx.
    [
        [correlation_2x2(m, 0.0, 0.0), correlation_2x2(m, 0.0, FRAC_PI_4)],
        [correlation_2x2(m, FRAC_PI_4, 0.0), correlation_2x2(m, FRAC_PI_4, FRAC_PI_4)],
    ]
}

fn mat_vec(t: &[[f64; 2]; 2], v: [f64; 2]) -> [f64; 2] {
    [t[0][0] * v[0] + t[0][1] * v[1], t[1][0] * v[0] + t[1][1] * v[1]]
}

fn mat_t_vec(t: &[[f64; 2]; 2], v: [f64; 2]) -> [f64; 2] {
    [t[0][0] * v[0] + t[1][0] * v[1], t[0][1] * v[0] + t[1][1] * v[1]]
}

fn dot2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn s_from_tensor(t: &[[f64; 2]; 2], x: &[f64; 4]) -> f64 {
    let [a, ap, b, bp] = x.map(u);
    dot2(a, mat_vec(t, [b[0] - bp[0], b[1] - bp[1]])) + dot2(ap, mat_vec(t, [b[0] + bp[0], b[1] + bp[1]]))
}

/// Angle in `[0, π)` maximizing `w · u(θ)`.
fn best_angle(w: [f64; 2]) -> f64 {
    let pi = std::f64::consts::PI;
    let x = (0.5 * w[1].atan2(w[0])).rem_euclid(pi);
    if pi - x < 1e-12 {
        0.0
    } else {
        x
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChshOptimum {
    pub settings: ChshSettings,
    pub s: f64,
}

/// Maximizes `S` over the four analyzer angles: an exhaustive scan of the
/// `π/360` grid in `[0, π)` followed by exact coordinate ascent.
pub fn optimize_chsh<S: AsRef<AmplitudeMatrix> + ?Sized>(state: &S) -> Result<ChshOptimum> {
    let m = state.as_ref().two_by_two()?;
    let t = correlation_tensor(&m);
    let step = std::f64::consts::PI / GRID_STEPS as f64;
    let grid: Vec<[f64; 2]> = (0..GRID_STEPS).map(|n| u(n as f64 * step)).collect();

    // For fixed (b, b′) the best a and a′ are independent; scan order is
    // b, then b′, with the first maximum kept.
    let argmax = |w: [f64; 2]| {
        let mut best = (f64::NEG_INFINITY, 0usize);
        for (n, g) in grid.iter().enumerate() {
            let v = dot2(*g, w);
            if v > best.0 + TIE {
                best = (v, n);
            }
        }
        best
    };
    let mut best = (f64::NEG_INFINITY, [0usize; 4]);
    for (nb, ub) in grid.iter().enumerate() {
        for (nbp, ubp) in grid.iter().enumerate() {
            let (va, na) = argmax(mat_vec(&t, [ub[0] - ubp[0], ub[1] - ubp[1]]));
            let (vap, nap) = argmax(mat_vec(&t, [ub[0] + ubp[0], ub[1] + ubp[1]]));
            let s = va + vap;
            let idx = [na, nap, nb, nbp];
            if s > best.0 + TIE || ((s - best.0).abs() <= TIE && idx < best.1) {
                best = (s, idx);
            }
        }
    }

    let mut x = best.1.map(|n| n as f64 * step);
    let mut s = s_from_tensor(&t, &x);
    for _ in 0..10_000 {
        let [ub, ubp] = [u(x[2]), u(x[3])];
        x[0] = best_angle(mat_vec(&t, [ub[0] - ubp[0], ub[1] - ubp[1]]));
        x[1] = best_angle(mat_vec(&t, [ub[0] + ubp[0], ub[1] + ubp[1]]));
        let [ua2, uap2] = [u(x[0]), u(x[1])];
        x[2] = best_angle(mat_t_vec(&t, [ua2[0] + uap2[0], ua2[1] + uap2[1]]));
        x[3] = best_angle(mat_t_vec(&t, [uap2[0] - ua2[0], uap2[1] - ua2[1]]));
        let next = s_from_tensor(&t, &x);
        let done = next - s <= DESCENT_TOL;
        if next >= s {
            s = next;
        }
        if done {
            break;
        }
    }
    let settings = ChshSettings::new(x[0], x[1], x[2], x[3])?;
    Ok(ChshOptimum {
        s: chsh_2x2(&m, &settings),
        settings,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct EventRecord {
    pub trial: u64,
    /// 0 for `a`, 1 for `a′`.
    pub setting_a: u8,
    /// 0 for `b`, 1 for `b′`.
    pub setting_b: u8,
    pub photon_outcome: i8,
    pub atom_outcome: i8,
}

impl EventRecord {
    pub fn setting_a_label(&self) -> &'static str {
        ["a", "a'"][self.setting_a as usize]
    }
    pub fn setting_b_label(&self) -> &'static str {
        ["b", "b'"][self.setting_b as usize]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SettingStats {
    pub trials: u64,
    pub correlation: f64,
    pub analytic: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleResult {
    #[serde(skip)]
    pub events: Vec<EventRecord>,
    /// Ordered (a,b), (a,b′), (a′,b), (a′,b′).
    pub per_setting: [SettingStats; 4],
    pub s_estimate: f64,
    pub standard_error: f64,
    pub seed: u64,
    pub generator: &'static str,
}

/// Outcome probabilities `(++, +−, −+, −−)` for one setting pair.
fn joint_probabilities(m: &[[Complex64; 2]; 2], a: f64, b: f64) -> [f64; 4] {
    let n = norm2(m);
    let amp = |x: [f64; 2], y: [f64; 2]| {
        let mut s = Complex64::default();
        for i in 0..2 {
            for j in 0..2 {
                s += m[i][j] * x[i] * y[j];
            }
        }
        s.norm_sqr() / n
    };
    let (ap, am) = (analyzer(a), analyzer(a + std::f64::consts::FRAC_PI_2));
    let (bp, bm) = (analyzer(b), analyzer(b + std::f64::consts::FRAC_PI_2));
    [amp(ap, bp), amp(ap, bm), amp(am, bp), amp(am, bm)]
}

/// Simulates `n` trials. Each trial picks one of the four setting pairs
/// uniformly and draws both outcomes from the exact joint distribution.
/// Trial blocks of [`BLOCK`] use ChaCha20 stream `block` of `seed`, so the
/// record is independent of the rayon worker count.
pub fn sample_events<S: AsRef<AmplitudeMatrix> + ?Sized>(
    state: &S,
    settings: &ChshSettings,
    n: u64,
    seed: u64,
) -> Result<SampleResult> {
    if n == 0 {
        return Err(Error::invalid("number of samples must be at least 1"));
    }
    let m = state.as_ref().two_by_two()?;
    let probs: Vec<[f64; 4]> = (0..4)
        .map(|i| {
            let p = settings.pair(i);
            joint_probabilities(&m, p.photon_angle, p.atom_angle)
        })
        .collect();
    let blocks = n.div_ceil(BLOCK as u64);
    let events: Vec<EventRecord> = (0..blocks)
        .into_par_iter()
        .flat_map_iter(|block| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(block);
            let start = block * BLOCK as u64;
            let end = (start + BLOCK as u64).min(n);
            let probs = &probs;
            (start..end).map(move |trial| {
                let pair = rng.gen_range(0..4usize);
                let r: f64 = rng.gen();
                let p = &probs[pair];
                let mut acc = 0.0;
                let mut outcome = 3;
                for (k, pk) in p.iter().enumerate() {
                    acc += pk;
                    if r < acc {
                        outcome = k;
                        break;
                    }
                }
                EventRecord {
                    trial,
                    setting_a: (pair / 2) as u8,
                    setting_b: (pair % 2) as u8,
                    photon_outcome: if outcome < 2 { 1 } else { -1 },
                    atom_outcome: if outcome % 2 == 0 { 1 } else { -1 },
                }
            })
        })
        .collect();
    Ok(summarize(&m, settings, events, seed))
}

fn summarize(m: &[[Complex64; 2]; 2], settings: &ChshSettings, events: Vec<EventRecord>, seed: u64) -> SampleResult {
    let mut counts = [0u64; 4];
    let mut sums = [0i64; 4];
    for e in &events {
        let i = (e.setting_a * 2 + e.setting_b) as usize;
        counts[i] += 1;
        sums[i] += (e.photon_outcome * e.atom_outcome) as i64;
    }
    let per_setting: [SettingStats; 4] = std::array::from_fn(|i| {
        let p = settings.pair(i);
        SettingStats {
            trials: counts[i],
            correlation: if counts[i] > 0 { sums[i] as f64 / counts[i] as f64 } else { 0.0 },
            analytic: correlation_2x2(m, p.photon_angle, p.atom_angle),
        }
    });
    let s_estimate = (0..4).map(|i| CHSH_SIGNS[i] * per_setting[i].correlation).sum();
    let variance: f64 = per_setting
        .iter()
        .map(|st| if st.trials > 0 { (1.0 - st.correlation * st.correlation) / st.trials as f64 } else { 1.0 })
        .sum();
    SampleResult {
        events,
        per_setting,
        s_estimate,
        standard_error: variance.sqrt(),
        seed,
        generator: GENERATOR,
    }
}

/// Writes events as CSV with columns
/// `trial,setting_a_label,setting_b_label,photon_outcome,atom_outcome`.
pub fn write_events_csv<W: Write>(events: &[EventRecord], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["trial", "setting_a_label", "setting_b_label", "photon_outcome", "atom_outcome"])?;
    for e in events {
        w.write_record([
            e.trial.to_string(),
            e.setting_a_label().to_string(),
            e.setting_b_label().to_string(),
            e.photon_outcome.to_string(),
            e.atom_outcome.to_string(),
        ])?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

    fn bell(sign: f64) -> AmplitudeMatrix {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        AmplitudeMatrix::from_rows(&[vec![h, 0.0.into()], vec![0.0.into(), h * sign]]).unwrap()
    }

    #[test]
    fn symmetric_pattern() {
        let s = bell(1.0);
        for (a, b) in [(0.0, 0.0), (0.3, -0.2), (1.0, 0.25)] {
            let e = correlation(&s, a, b).unwrap();
            assert!((e - (2.0 * a - 2.0 * b).cos()).abs() < 1e-14);
        }
        assert!(correlation(&s, 0.0, PI / 4.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn antisymmetric_pattern() {
        let s = bell(-1.0);
        for (a, b) in [(0.0, 0.0), (0.3, -0.2), (1.0, 0.25)] {
            let e = correlation(&s, a, b).unwrap();
            assert!((e + (2.0 * a + 2.0 * b).cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn standard_settings_reach_tsirelson() {
        let s = chsh(&bell(1.0), &ChshSettings::standard()).unwrap();
        assert!((s - 2.0 * SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn analyzer_is_eigenvector() {
        for th in [0.0, 0.4, 2.0] {
            let o = observable(th);
            let v = analyzer(th);
            let w = [o[0][0] * v[0] + o[0][1] * v[1], o[1][0] * v[0] + o[1][1] * v[1]];
            assert!((w[0] - v[0]).abs() < 1e-15 && (w[1] - v[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        let p = joint_probabilities(&bell(1.0).two_by_two().unwrap(), 0.3, 1.1);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_samples_rejected() {
        assert!(sample_events(&bell(1.0), &ChshSettings::standard(), 0, 1).is_err());
    }
}
