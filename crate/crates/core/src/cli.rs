//! The `raman-pair` command line.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 physics or
//! numerical-domain error.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::angular::{clebsch_gordan, triangle_ok, wigner_3j, wigner_6j, CoupledValue, HalfInt};
use crate::bell::{optimize_chsh, sample_events, write_events_csv, ChshSettings, GENERATOR};
use crate::config::{ConfigError, RunConfig};
use crate::entanglement::{
    concurrence_2x2, conditional_overlap_with, entanglement_entropy, is_factorized, schmidt, FACTORIZED_TOL,
};
use crate::error::Error;
use crate::pair::{build_pair_state_with, spectral_filter, PairState};
use crate::scan::{argmax_direction, scan_sphere, write_scan_csv, Measure};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PHYSICS: i32 = 3;
/// Largest doubled angular momentum accepted by `tables`.
pub const TABLES_MAX_DOUBLED_J: i32 = 12;
/// Environment variable capping worker threads (0 = automatic).
pub const THREADS_ENV: &str = "RAMAN_PAIR_THREADS";

#[derive(Parser, Debug)]
#[command(name = "raman-pair", version, about = "Atom-photon pair states from Raman scattering off a spinor condensate")]
pub struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Joint atom-photon state for the configured detection direction.
    State,
    /// State after keeping only the photon channel of one final level.
    Filter {
        /// Final ground level F, e.g. 1 or 3/2.
        #[arg(long)]
        level: String,
    },
    /// Scan the detection direction over the sphere.
    Scan {
        /// Grid resolution in degrees; overrides the config.
        #[arg(long)]
        resolution_deg: Option<f64>,
        /// entropy, concurrence_after_filter(F) or conditional_overlap.
        #[arg(long)]
        measure: Option<String>,
    },
    /// CHSH analysis of a (filtered) 2x2 state.
    Chsh {
        /// Final level to filter on before the test.
        #[arg(long)]
        level: Option<String>,
        /// Number of simulated trials; analytic only when absent.
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Write sampled events as CSV.
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// CSV dump of Clebsch-Gordan, 3-j and 6-j values.
    Tables {
        #[arg(long)]
        max_doubled_j: i32,
    },
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Physics(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_physics() {
            Failure::Physics(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Config(format!("i/o error: {e}"))
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) => n,
            Err(_) => {
                eprintln!("error: {THREADS_ENV}=`{v}` is not a non-negative integer");
                return EXIT_CONFIG;
            }
        },
        Err(_) => 0,
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return EXIT_CONFIG;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(()) => EXIT_OK,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            EXIT_CONFIG
        }
        Err(Failure::Physics(m)) => {
            eprintln!("error: {m}");
            EXIT_PHYSICS
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    if let Command::Tables { max_doubled_j } = cli.command {
        return cmd_tables(cli, max_doubled_j);
    }
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::Config("--config <path> is required".into()))?;
    let cfg = RunConfig::from_path(path)?;
    match &cli.command {
        Command::State => cmd_state(cli, &cfg, None),
        Command::Filter { level } => cmd_state(cli, &cfg, Some(parse_level(level)?)),
        Command::Scan { resolution_deg, measure } => cmd_scan(cli, &cfg, *resolution_deg, measure.as_deref()),
        Command::Chsh {
            level,
            samples,
            seed,
            events,
        } => cmd_chsh(cli, &cfg, level.as_deref(), *samples, *seed, events.as_deref()),
        Command::Tables { .. } => unreachable!(),
    }
}

fn parse_level(s: &str) -> Result<HalfInt, Failure> {
    s.parse::<HalfInt>().map_err(|_| Failure::Config(format!("`{s}` is not an angular momentum")))
}

fn format_of(cli: &Cli, cfg: Option<&RunConfig>) -> Format {
    cli.format.unwrap_or_else(|| {
        match cfg.and_then(|c| c.file.output.as_ref()).and_then(|o| o.format.as_deref()) {
            Some("csv") => Format::Csv,
            _ => Format::Json,
        }
    })
}

fn output_path(cli: &Cli, cfg: Option<&RunConfig>) -> Option<PathBuf> {
    cli.output
        .clone()
        .or_else(|| cfg.and_then(|c| c.file.output.as_ref()).and_then(|o| o.path.clone()))
}

fn metadata(cfg: Option<&RunConfig>, extra: &[(&str, Value)]) -> Value {
    let mut m = Map::new();
    m.insert("tool".into(), json!("raman-pair"));
    m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    if let Some(c) = cfg {
        m.insert("config_sha256".into(), json!(c.config_hash));
        m.insert("atom_spec_sha256".into(), json!(c.atom_spec_hash));
    }
    for (k, v) in extra {
        m.insert((*k).into(), v.clone());
    }
    Value::Object(m)
}

fn emit_bytes(path: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, bytes)?,
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn emit_json(path: Option<&Path>, v: &Value) -> Result<(), Failure> {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    emit_bytes(path, s.as_bytes())
}

/// CSV goes to `path`, its metadata to `path.meta.json`.
fn emit_csv(path: Option<&Path>, csv: Vec<u8>, meta: &Value) -> Result<(), Failure> {
    emit_bytes(path, &csv)?;
    if let Some(p) = path {
        let mut side = p.as_os_str().to_owned();
        side.push(".meta.json");
        emit_json(Some(Path::new(&side)), &json!({ "metadata": meta }))?;
    }
    Ok(())
}

fn pump_echo(cfg: &RunConfig) -> Value {
    serde_json::to_value(&cfg.file.pump).expect("pump section serializes")
}

fn analysis(cfg: &RunConfig, state: &PairState, filtered: bool) -> Value {
    let sch = schmidt(state);
    let overlap = match conditional_overlap_with(&cfg.spec, &cfg.pump, &cfg.condensate, &state.direction, &cfg.options) {
        Ok(v) => json!(v),
        Err(_) => Value::Null,
    };
    let channels: Vec<Value> = state
        .channels
        .iter()
        .zip(state.channel_probabilities())
        .map(|(c, p)| json!({ "channel": c.key(), "probability": p }))
        .collect();
    let levels: Vec<Value> = state
        .level_probabilities()
        .into_iter()
        .map(|(f, p)| json!({ "final_level": f.to_string(), "probability": p }))
        .collect();
    let mut a = json!({
        "entropy_bits": entanglement_entropy(state),
        "schmidt_coefficients": sch.coefficients,
        "channel_probabilities": channels,
        "level_probabilities": levels,
        "conditional_overlap": overlap,
        "factorized": is_factorized(state, FACTORIZED_TOL),
    });
    if filtered {
        a["concurrence"] = match concurrence_2x2(state) {
            Ok(c) => json!(c),
            Err(_) => Value::Null,
        };
    }
    a
}

fn state_csv(state: &PairState) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["channel", "omega_hz", "lambda", "atom", "re", "im"]).expect("in-memory csv");
    for (r, ch) in state.channels.iter().enumerate() {
        for (c, s) in state.atom_basis.iter().enumerate() {
            if s.f != ch.final_level {
                continue;
            }
            let a = state.amplitude(r, c);
            w.write_record([
                ch.key(),
                (ch.omega / std::f64::consts::TAU).to_string(),
                ch.lambda.to_string(),
                s.key(),
                a.re.to_string(),
                a.im.to_string(),
            ])
            .expect("in-memory csv");
        }
    }
    w.into_inner().expect("in-memory csv")
}

fn direction_of(cfg: &RunConfig) -> Result<[f64; 3], Failure> {
    cfg.direction
        .ok_or_else(|| Failure::Config("config key `detection.direction` is required for this command".into()))
}

fn build(cfg: &RunConfig, level: Option<HalfInt>) -> Result<PairState, Failure> {
    let k = direction_of(cfg)?;
    let state = build_pair_state_with(&cfg.spec, &cfg.pump, &cfg.condensate, &k, &cfg.options)?;
    if !state.resolvable && level.is_some() {
        eprintln!("warning: photon channels are closer than the spectral resolution; filtering is not physically resolvable");
    }
    Ok(match level {
        Some(l) => spectral_filter(&state, l)?,
        None => state,
    })
}

fn cmd_state(cli: &Cli, cfg: &RunConfig, level: Option<HalfInt>) -> Result<(), Failure> {
    let state = build(cfg, level)?;
    let meta = metadata(Some(cfg), &[]);
    let out = output_path(cli, Some(cfg));
    match format_of(cli, Some(cfg)) {
        Format::Csv => emit_csv(out.as_deref(), state_csv(&state), &meta),
        Format::Json => {
            let mut v = json!({
                "metadata": meta,
                "pump": pump_echo(cfg),
                "state": state.to_json_value(),
                "analysis": analysis(cfg, &state, level.is_some()),
            });
            if let Some(l) = level {
                v["filter_level"] = json!(l.to_string());
            }
            emit_json(out.as_deref(), &v)
        }
    }
}

fn cmd_scan(cli: &Cli, cfg: &RunConfig, resolution_deg: Option<f64>, measure: Option<&str>) -> Result<(), Failure> {
    let resolution = match (resolution_deg, cfg.scan) {
        (Some(d), _) => d.to_radians(),
        (None, Some((r, _))) => r,
        (None, None) => return Err(Failure::Config("no scan resolution: pass --resolution-deg or set detection.scan".into())),
    };
    let measure: Measure = match (measure, cfg.scan) {
        (Some(m), _) => m.parse()?,
        (None, Some((_, m))) => m,
        (None, None) => Measure::ConcurrenceAfterFilter(HalfInt::from_int(1)),
    };
    crate::scan::sphere_grid(resolution)?;
    let map = scan_sphere(&cfg.spec, &cfg.pump, &cfg.condensate, resolution, measure, &cfg.options)?;
    let best = argmax_direction(&map)?;
    eprintln!(
        "argmax: theta_rad={} phi_rad={} k=({}, {}, {}) {}={}",
        best.theta, best.phi, best.direction[0], best.direction[1], best.direction[2], map.measure_name, best.measure
    );
    let meta = metadata(
        Some(cfg),
        &[
            ("measure", json!(map.measure_name)),
            ("resolution_rad", json!(resolution)),
            ("pump", pump_echo(cfg)),
        ],
    );
    let out = output_path(cli, Some(cfg));
    match format_of(cli, Some(cfg)) {
        Format::Csv => {
            let mut buf = Vec::new();
            write_scan_csv(&map, &mut buf)?;
            emit_csv(out.as_deref(), buf, &meta)
        }
        Format::Json => {
            let nodes: Vec<Value> = map
                .nodes
                .iter()
                .map(|n| {
                    json!({
                        "theta_rad": n.theta,
                        "phi_rad": n.phi,
                        "direction": n.direction,
                        "measure": if n.measure.is_nan() { Value::Null } else { json!(n.measure) },
                        "flag": n.flag.as_str(),
                        "channel_weights": n.channel_weights.iter().map(|(f, p)| json!({"doubled_f": f, "probability": p})).collect::<Vec<_>>(),
                    })
                })
                .collect();
            let v = json!({
                "metadata": meta,
                "theta_step_rad": map.theta_step,
                "phi_step_rad": map.phi_step,
                "argmax": { "theta_rad": best.theta, "phi_rad": best.phi, "direction": best.direction, "value": best.measure },
                "nodes": nodes,
            });
            emit_json(out.as_deref(), &v)
        }
    }
}

fn cmd_chsh(
    cli: &Cli,
    cfg: &RunConfig,
    level: Option<&str>,
    samples: Option<u64>,
    seed: Option<u64>,
    events: Option<&Path>,
) -> Result<(), Failure> {
    let bell = cfg.file.bell.as_ref();
    let level = match level.or_else(|| bell.and_then(|b| b.filter_level.as_deref())) {
        Some(l) => Some(parse_level(l)?),
        None => None,
    };
    let samples = samples.or_else(|| bell.and_then(|b| b.samples));
    let seed = seed.or_else(|| bell.and_then(|b| b.seed)).unwrap_or(0);
    let state = build(cfg, level)?;
    let optimum = optimize_chsh(&state)?;
    let settings: ChshSettings = cfg.bell_settings.unwrap_or(optimum.settings);
    let at_settings = crate::bell::chsh(&state, &settings)?;

    let mut extra = vec![];
    let mut sampling = Value::Null;
    if let Some(n) = samples {
        extra.push(("seed", json!(seed)));
        extra.push(("generator", json!(GENERATOR)));
        let res = sample_events(&state, &settings, n, seed)?;
        if let Some(p) = events {
            let mut buf = Vec::new();
            write_events_csv(&res.events, &mut buf)?;
            emit_bytes(Some(p), &buf)?;
        }
        sampling = serde_json::to_value(&res).expect("sample result serializes");
        sampling["samples"] = json!(n);
    } else if events.is_some() {
        return Err(Failure::Config("--events needs --samples".into()));
    }
    let v = json!({
        "metadata": metadata(Some(cfg), &extra),
        "filter_level": level.map(|l| l.to_string()),
        "convention": "O(theta) = cos(2 theta) X + sin(2 theta) Z on the two supported labels of each side",
        "optimum": optimum,
        "settings": settings,
        "s_at_settings": at_settings,
        "sampling": sampling,
    });
    emit_json(output_path(cli, Some(cfg)).as_deref(), &v)
}

fn exact_string(c: &CoupledValue) -> String {
    c.exact.as_ref().map(|e| e.to_string()).unwrap_or_default()
}

/// Writes every non-trivial CG, 3-j and 6-j value with doubled arguments up
/// to `n`. Columns: symbol, six doubled arguments, value, signed square.
pub fn write_tables<W: Write>(n: i32, out: W) -> Result<(), Error> {
    if !(0..=TABLES_MAX_DOUBLED_J).contains(&n) {
        return Err(Error::InvalidInput(format!(
            "--max-doubled-j {n} is outside 0..={TABLES_MAX_DOUBLED_J}"
        )));
    }
    let io = |e: csv::Error| Error::Numerical(format!("csv write failed: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["symbol", "d1", "d2", "d3", "d4", "d5", "d6", "value", "signed_square"]).map_err(io)?;
    let js: Vec<HalfInt> = (0..=n).map(HalfInt::from_doubled).collect();
    let mut row = |sym: &str, d: [i32; 6], c: CoupledValue| -> Result<(), Error> {
        let mut rec = vec![sym.to_string()];
        rec.extend(d.iter().map(|x| x.to_string()));
        rec.push(c.value.to_string());
        rec.push(exact_string(&c));
        w.write_record(&rec).map_err(io)
    };
    for &j1 in &js {
        for &j2 in &js {
            for &j3 in &js {
                if !triangle_ok(j1, j2, j3) {
                    continue;
                }
                for m1 in j1.projections() {
                    for m2 in j2.projections() {
                        let m3 = -(m1 + m2);
                        if m3.abs() > j3 || (j3 - m3).doubled() % 2 != 0 {
                            continue;
                        }
                        let d = [j1, j2, j3, m1, m2, m3].map(HalfInt::doubled);
                        row("3j", d, wigner_3j(j1, j2, j3, m1, m2, m3)?)?;
                        let m = m1 + m2;
                        let d = [j1, m1, j2, m2, j3, m].map(HalfInt::doubled);
                        row("cg", d, clebsch_gordan(j1, m1, j2, m2, j3, m)?)?;
                    }
                }
            }
        }
    }
    for &j1 in &js {
        for &j2 in &js {
            for &j3 in &js {
                if !triangle_ok(j1, j2, j3) {
                    continue;
                }
                for &j4 in &js {
                    for &j5 in &js {
                        if !triangle_ok(j4, j5, j3) {
                            continue;
                        }
                        for &j6 in &js {
                            if triangle_ok(j1, j5, j6) && triangle_ok(j4, j2, j6) {
                                let d = [j1, j2, j3, j4, j5, j6].map(HalfInt::doubled);
                                row("6j", d, wigner_6j(j1, j2, j3, j4, j5, j6)?)?;
                            }
                        }
                    }
                }
            }
        }
    }
    w.flush().map_err(|e| Error::Numerical(e.to_string()))
}

fn cmd_tables(cli: &Cli, n: i32) -> Result<(), Failure> {
    let mut buf = Vec::new();
    write_tables(n, &mut buf)?;
    emit_csv(
        cli.output.as_deref(),
        buf,
        &metadata(None, &[("max_doubled_j", json!(n))]),
    )
}
