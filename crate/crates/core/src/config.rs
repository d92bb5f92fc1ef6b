//! Run configuration files: strict JSON, units in key names, frequencies in
//! Hz (converted to rad/s by exactly 2π).

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::atom::{AtomSpec, DEFAULT_VALIDITY_THRESHOLD};
use crate::bell::ChshSettings;
use crate::pair::{parse_sublevel_key, CondensateSpinor, PumpConfig, ScatterOptions};
use crate::scan::Measure;
use crate::vector::{CVec3, Vec3};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("config key `{key}`: {message}")]
    Value { key: String, message: String },
}

fn value_err(key: &str, message: impl ToString) -> ConfigError {
    ConfigError::Value {
        key: key.to_string(),
        message: message.to_string(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpSection {
    pub direction: Vec3,
    /// Complex components as `[re, im]`.
    pub polarization: [[f64; 2]; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub laser_frequency_hz: Option<f64>,
    /// Offset from the atomic resonance; alternative to
    /// `laser_frequency_hz`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub laser_detuning_hz: Option<f64>,
    #[serde(default = "unit_amplitude")]
    pub amplitude: [f64; 2],
    #[serde(default = "one")]
    pub atom_number: f64,
}

fn unit_amplitude() -> [f64; 2] {
    [1.0, 0.0]
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CondensateSection {
    /// Keyed `"2F:2m"`, values `[re, im]`.
    pub amplitudes: BTreeMap<String, [f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub resolution_rad: f64,
    pub measure: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionsSection {
    #[serde(default = "default_threshold")]
    pub validity_threshold: f64,
    #[serde(default = "yes")]
    pub enforce_validity: bool,
    #[serde(default = "default_resolution_hz")]
    pub spectral_resolution_hz: f64,
}

impl Default for OptionsSection {
    fn default() -> Self {
        OptionsSection {
            validity_threshold: default_threshold(),
            enforce_validity: true,
            spectral_resolution_hz: default_resolution_hz(),
        }
    }
}

fn default_threshold() -> f64 {
    DEFAULT_VALIDITY_THRESHOLD
}

fn yes() -> bool {
    true
}

fn default_resolution_hz() -> f64 {
    1e6
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BellSection {
    /// Final level whose photon channel is kept before the test, e.g. "1".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter_level: Option<String>,
    /// `[a, a′, b, b′]`; the optimum is used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub settings_rad: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
}

/// On-disk run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    /// Relative to the config file; the built-in sodium spec when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atom_spec_path: Option<PathBuf>,
    pub pump: PumpSection,
    pub condensate: CondensateSection,
    pub detection: DetectionSection,
    #[serde(default)]
    pub options: OptionsSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bell: Option<BellSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
}

/// A validated configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub file: RunConfigFile,
    pub spec: AtomSpec,
    pub pump: PumpConfig,
    pub condensate: CondensateSpinor,
    pub options: ScatterOptions,
    pub direction: Option<Vec3>,
    pub scan: Option<(f64, Measure)>,
    pub bell_settings: Option<ChshSettings>,
    /// SHA-256 of the raw config bytes.
    pub config_hash: String,
    /// SHA-256 of the canonical atom spec JSON.
    pub atom_spec_hash: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Hash of the atom spec's canonical serialization.
pub fn atom_spec_hash(spec: &AtomSpec) -> String {
    let canon = serde_json::to_vec(&spec.to_file_record()).expect("atom spec serializes");
    sha256_hex(&canon)
}

fn complex(v: [f64; 2]) -> Complex64 {
    Complex64::new(v[0], v[1])
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let bytes = std::fs::read(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_bytes(&bytes, path.parent().unwrap_or(Path::new(".")), path)
    }

    /// Parses config bytes; `base` resolves a relative `atom_spec_path`.
    pub fn from_bytes(bytes: &[u8], base: &Path, name: &Path) -> Result<Self, ConfigError> {
        let file: RunConfigFile = serde_json::from_slice(bytes).map_err(|e| ConfigError::Parse {
            path: name.to_path_buf(),
            message: e.to_string(),
        })?;
        let spec = match &file.atom_spec_path {
            Some(p) => {
                let full = if p.is_absolute() { p.clone() } else { base.join(p) };
                AtomSpec::from_path(&full).map_err(|e| value_err("atom_spec_path", e))?
            }
            None => AtomSpec::sodium(),
        };

        let p = &file.pump;
        let laser = match (p.laser_frequency_hz, p.laser_detuning_hz) {
            (Some(f), None) => f * TAU,
            (None, Some(d)) => spec.resonance() + d * TAU,
            _ => {
                return Err(value_err(
                    "pump.laser_frequency_hz",
                    "give exactly one of laser_frequency_hz and laser_detuning_hz",
                ))
            }
        };
        let pol: CVec3 = p.polarization.map(complex);
        let pump = PumpConfig::new(p.direction, pol, laser, complex(p.amplitude), p.atom_number).map_err(|e| value_err("pump", e))?;

        let mut amps = BTreeMap::new();
        for (key, v) in &file.condensate.amplitudes {
            let k = parse_sublevel_key(key).map_err(|e| value_err(&format!("condensate.amplitudes.{key}"), e))?;
            if spec.ground_index(k.0, k.1).is_none() {
                return Err(value_err(&format!("condensate.amplitudes.{key}"), "not a ground sublevel of the atom"));
            }
            amps.insert(k, complex(*v));
        }
        let condensate = CondensateSpinor::new(amps).map_err(|e| value_err("condensate.amplitudes", e))?;

        let o = &file.options;
        if !(o.validity_threshold >= 0.0 && o.spectral_resolution_hz >= 0.0) {
            return Err(value_err("options", "thresholds must be non-negative"));
        }
        let options = ScatterOptions {
            validity_threshold: o.validity_threshold,
            enforce_validity: o.enforce_validity,
            spectral_resolution: o.spectral_resolution_hz * TAU,
        };

        let direction = file.detection.direction;
        let scan = match &file.detection.scan {
            Some(s) => {
                let m: Measure = s.measure.parse().map_err(|e| value_err("detection.scan.measure", e))?;
                crate::scan::sphere_grid(s.resolution_rad).map_err(|e| value_err("detection.scan.resolution_rad", e))?;
                Some((s.resolution_rad, m))
            }
            None => None,
        };
        if direction.is_none() && scan.is_none() {
            return Err(value_err("detection", "needs `direction` or `scan`"));
        }
        let bell_settings = match file.bell.as_ref().and_then(|b| b.settings_rad) {
            Some([a, ap, b, bp]) => Some(ChshSettings::new(a, ap, b, bp).map_err(|e| value_err("bell.settings_rad", e))?),
            None => None,
        };
        if let Some(fmt) = file.output.as_ref().and_then(|o| o.format.as_deref()) {
            if fmt != "json" && fmt != "csv" {
                return Err(value_err("output.format", format!("`{fmt}` is not json or csv")));
            }
        }

        Ok(RunConfig {
            atom_spec_hash: atom_spec_hash(&spec),
            config_hash: sha256_hex(bytes),
            file,
            spec,
            pump,
            condensate,
            options,
            direction,
            scan,
            bell_settings,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "pump": {"direction": [0, 1, 0], "polarization": [[0, 0], [0, 0], [1, 0]], "laser_detuning_hz": -1e10},
        "condensate": {"amplitudes": {"2:0": [1, 0]}},
        "detection": {"direction": [0, 0, 1]}
    }"#;

    fn parse(s: &str) -> Result<RunConfig, ConfigError> {
        RunConfig::from_bytes(s.as_bytes(), Path::new("."), Path::new("test.json"))
    }

    #[test]
    fn minimal_config() {
        let c = parse(BASE).unwrap();
        assert_eq!(c.spec.name(), AtomSpec::sodium().name());
        assert!((c.pump.laser() - (c.spec.resonance() - TAU * 1e10)).abs() < 1.0);
        assert_eq!(c.options, ScatterOptions::default());
    }

    #[test]
    fn unknown_key_is_named() {
        let bad = BASE.replace("\"polarization\"", "\"polarisation\"");
        let msg = parse(&bad).unwrap_err().to_string();
        assert!(msg.contains("polarisation"), "{msg}");
    }

    #[test]
    fn both_laser_keys_rejected() {
        let bad = BASE.replace("\"laser_detuning_hz\": -1e10", "\"laser_detuning_hz\": -1e10, \"laser_frequency_hz\": 5e14");
        assert!(parse(&bad).is_err());
    }

    #[test]
    fn hash_is_stable() {
        let a = parse(BASE).unwrap();
        let b = parse(BASE).unwrap();
        assert_eq!(a.config_hash, b.config_hash);
        assert_eq!(a.atom_spec_hash.len(), 64);
    }
}
