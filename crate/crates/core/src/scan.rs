//! Sphere scans of entanglement measures over the detection direction.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::angular::HalfInt;
use crate::atom::AtomSpec;
use crate::entanglement::{concurrence_two_photon_labels, conditional_overlap_with, entanglement_entropy};
use crate::error::{Error, Result};
use crate::pair::{build_pair_state_with, spectral_filter, CondensateSpinor, PumpConfig, ScatterOptions};
use crate::vector::{norm, real, scale, sub, Vec3};

pub const MIN_RESOLUTION: f64 = PI / 1800.0;
pub const MAX_RESOLUTION: f64 = PI / 6.0;
/// Values within this of the maximum count as ties in [`argmax_direction`].
pub const ARGMAX_TIE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Measure {
    Entropy,
    /// Concurrence of the state filtered to the photon channel of the given
    /// final level.
    ConcurrenceAfterFilter(HalfInt),
    ConditionalOverlap,
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Measure::Entropy => write!(f, "entropy"),
            Measure::ConcurrenceAfterFilter(l) => write!(f, "concurrence_after_filter({l})"),
            Measure::ConditionalOverlap => write!(f, "conditional_overlap"),
        }
    }
}

impl FromStr for Measure {
    type Err = Error;

    /// Accepts `entropy`, `conditional_overlap` and
    /// `concurrence_after_filter(F)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "entropy" => return Ok(Measure::Entropy),
            "conditional_overlap" => return Ok(Measure::ConditionalOverlap),
            _ => {}
        }
        if let Some(arg) = s.strip_prefix("concurrence_after_filter(").and_then(|r| r.strip_suffix(')')) {
            let level: HalfInt = arg.parse().map_err(|_| Error::invalid(format!("bad filter level `{arg}`")))?;
            return Ok(Measure::ConcurrenceAfterFilter(level));
        }
        Err(Error::invalid(format!(
            "unknown measure `{s}` (expected entropy, concurrence_after_filter(F) or conditional_overlap)"
        )))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeFlag {
    Ok,
    /// No scattering into the direction (or the filtered channel).
    Empty,
    /// A polarization branch vanishes, so the overlap is undefined.
    Undefined,
}

impl NodeFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            NodeFlag::Ok => "ok",
            NodeFlag::Empty => "empty",
            NodeFlag::Undefined => "undefined",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanNode {
    pub theta: f64,
    pub phi: f64,
    pub direction: Vec3,
    /// NaN when flagged.
    pub measure: f64,
    pub flag: NodeFlag,
    /// `(2F, P(F))` per final level of the unfiltered state; empty when
    /// the state is empty.
    pub channel_weights: Vec<(i32, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanMap {
    pub measure_name: String,
    /// Requested resolution, radians.
    pub resolution: f64,
    pub theta_step: f64,
    pub phi_step: f64,
    pub nodes: Vec<ScanNode>,
}

/// Equiangular nodes `(θ, φ)`, θ-major. Both poles are single nodes with
/// `φ = 0`; steps are the largest divisors of π and 2π not exceeding
/// `resolution`.
pub fn sphere_grid(resolution: f64) -> Result<(f64, f64, Vec<(f64, f64)>)> {
    if !(MIN_RESOLUTION * (1.0 - 1e-12)..=MAX_RESOLUTION * (1.0 + 1e-12)).contains(&resolution) {
        return Err(Error::invalid(format!(
            "scan resolution {resolution} rad is outside [π/1800, π/6]"
        )));
    }
    let nt = (PI / resolution - 1e-9).ceil() as usize;
    let np = (2.0 * PI / resolution - 1e-9).ceil() as usize;
    let (dt, dp) = (PI / nt as f64, 2.0 * PI / np as f64);
    let mut nodes = vec![(0.0, 0.0)];
    for i in 1..nt {
        for j in 0..np {
            nodes.push((i as f64 * dt, j as f64 * dp));
        }
    }
    nodes.push((PI, 0.0));
    Ok((dt, dp, nodes))
}

pub fn direction(theta: f64, phi: f64) -> Vec3 {
    if theta == 0.0 {
        return [0.0, 0.0, 1.0];
    }
    if theta == PI {
        return [0.0, 0.0, -1.0];
    }
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [st * cp, st * sp, ct]
}

/// The measure for one detection direction, with its flag.
pub fn evaluate_direction(
    spec: &AtomSpec,
    pump: &PumpConfig,
    phi0: &CondensateSpinor,
    k: &Vec3,
    measure: Measure,
    opts: &ScatterOptions,
) -> Result<(f64, NodeFlag, Vec<(i32, f64)>)> {
    let state = match build_pair_state_with(spec, pump, phi0, k, opts) {
        Ok(s) => s,
        Err(Error::EmptyState(_)) => return Ok((f64::NAN, NodeFlag::Empty, Vec::new())),
        Err(e) => return Err(e),
    };
    let weights = state.level_probabilities().into_iter().map(|(f, p)| (f.doubled(), p)).collect();
    let value = match measure {
        Measure::Entropy => Ok(entanglement_entropy(&state)),
        Measure::ConcurrenceAfterFilter(level) => spectral_filter(&state, level).and_then(|s| concurrence_two_photon_labels(&s)),
        Measure::ConditionalOverlap => conditional_overlap_with(spec, pump, phi0, k, opts),
    };
    match value {
        Ok(v) => Ok((v, NodeFlag::Ok, weights)),
        Err(Error::EmptyState(_)) => Ok((f64::NAN, NodeFlag::Empty, weights)),
        Err(Error::UndefinedOverlap(_)) => Ok((f64::NAN, NodeFlag::Undefined, weights)),
        Err(e) => Err(e),
    }
}

/// Evaluates `measure` at every grid node in parallel; node order is the
/// grid order regardless of scheduling.
pub fn scan_sphere(
    spec: &AtomSpec,
    pump: &PumpConfig,
    phi0: &CondensateSpinor,
    resolution: f64,
    measure: Measure,
    opts: &ScatterOptions,
) -> Result<ScanMap> {
    let (theta_step, phi_step, grid) = sphere_grid(resolution)?;
    let nodes = grid
        .par_iter()
        .map(|&(theta, phi)| {
            let k = direction(theta, phi);
            let (measure, flag, channel_weights) = evaluate_direction(spec, pump, phi0, &k, measure, opts)?;
            Ok(ScanNode {
                theta,
                phi,
                direction: k,
                measure,
                flag,
                channel_weights,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanMap {
        measure_name: measure.to_string(),
        resolution,
        theta_step,
        phi_step,
        nodes,
    })
}

/// Largest measure over unflagged nodes; ties within [`ARGMAX_TIE`] go to
/// the smallest `(θ, φ)`.
pub fn argmax_direction(map: &ScanMap) -> Result<&ScanNode> {
    let mut best: Option<&ScanNode> = None;
    for n in map.nodes.iter().filter(|n| n.flag == NodeFlag::Ok) {
        best = match best {
            None => Some(n),
            Some(b) => {
                let better = n.measure > b.measure + ARGMAX_TIE
                    || ((n.measure - b.measure).abs() <= ARGMAX_TIE && (n.theta, n.phi) < (b.theta, b.phi));
                Some(if better { n } else { b })
            }
        };
    }
    best.ok_or(Error::EmptyScan)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    /// Angle of the linear pump polarization from the first transverse axis.
    pub angle: f64,
    pub measure: f64,
    pub flag: NodeFlag,
}

/// Real transverse axes of the pump: the projection of ẑ (x̂ along ±ẑ)
/// and `K × e1`.
fn pump_axes(k: &Vec3) -> (Vec3, Vec3) {
    let zp = sub(&[0.0, 0.0, 1.0], &scale(k, k[2]));
    let e1 = if norm(&zp) > 1e-9 { scale(&zp, 1.0 / norm(&zp)) } else { [1.0, 0.0, 0.0] };
    let e2 = [k[1] * e1[2] - k[2] * e1[1], k[2] * e1[0] - k[0] * e1[2], k[0] * e1[1] - k[1] * e1[0]];
    (e1, e2)
}

/// Sweeps the pump through `steps` linear polarizations `cos χ e1 + sin χ e2`,
/// `χ = nπ/steps`, at a fixed detection direction.
pub fn polarization_sweep(
    spec: &AtomSpec,
    pump: &PumpConfig,
    phi0: &CondensateSpinor,
    k: &Vec3,
    steps: usize,
    measure: Measure,
    opts: &ScatterOptions,
) -> Result<Vec<SweepPoint>> {
    if steps == 0 {
        return Err(Error::invalid("polarization sweep needs at least one step"));
    }
    let (e1, e2) = pump_axes(&pump.direction());
    (0..steps)
        .into_par_iter()
        .map(|n| {
            let angle = n as f64 * PI / steps as f64;
            let (s, c) = angle.sin_cos();
            let eps = real(&[c * e1[0] + s * e2[0], c * e1[1] + s * e2[1], c * e1[2] + s * e2[2]]);
            let p = PumpConfig::new(pump.direction(), eps, pump.laser(), pump.amplitude(), pump.atom_number())?;
            let (measure, flag, _) = evaluate_direction(spec, &p, phi0, k, measure, opts)?;
            Ok(SweepPoint { angle, measure, flag })
        })
        .collect()
}

/// CSV with columns `theta_rad,phi_rad,kx,ky,kz,measure,flag`.
pub fn write_scan_csv<W: Write>(map: &ScanMap, out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theta_rad", "phi_rad", "kx", "ky", "kz", "measure", "flag"])?;
    for n in &map.nodes {
        w.write_record([
            n.theta.to_string(),
            n.phi.to_string(),
            n.direction[0].to_string(),
            n.direction[1].to_string(),
            n.direction[2].to_string(),
            n.measure.to_string(),
            n.flag.as_str().to_string(),
        ])?;
    }
    w.flush()
}
