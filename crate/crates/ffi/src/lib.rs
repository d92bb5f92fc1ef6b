//! C ABI over `raman_pair`.
//!
//! Objects are opaque heap handles released with the matching `_free`
//! function. Every fallible call returns an [`RpStatus`]; on failure the
//! message is kept per thread and read with [`rp_last_error`].
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use raman_pair::bell::{optimize_chsh, sample_events, ChshSettings};
use raman_pair::{
    build_pair_state, concurrence_2x2, entanglement_entropy, spectral_filter, AtomSpec, CondensateSpinor, Error,
    HalfInt, PairState, PumpConfig,
};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    SingularDetuning = 3,
    NearResonance = 4,
    EmptyState = 5,
    NotTwoByTwo = 6,
    UndefinedOverlap = 7,
    Numerical = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// Atom species handle.
pub struct RpAtomSpec(AtomSpec);

/// Joint atom-photon state handle.
pub struct RpPairState(PairState);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> RpStatus {
    match e {
        Error::InvalidInput(_) => RpStatus::InvalidInput,
        Error::SingularDetuning { .. } => RpStatus::SingularDetuning,
        Error::NearResonance { .. } => RpStatus::NearResonance,
        Error::EmptyState(_) | Error::EmptyScan => RpStatus::EmptyState,
        Error::NotTwoByTwo { .. } => RpStatus::NotTwoByTwo,
        Error::UndefinedOverlap(_) => RpStatus::UndefinedOverlap,
        Error::Numerical(_) => RpStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (RpStatus, String)>) -> RpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RpStatus::Ok,
        Ok(Err((s, m))) => {
            set_error(m);
            s
        }
        Err(_) => {
            set_error("internal panic");
            RpStatus::Panic
        }
    }
}

fn lib(e: Error) -> (RpStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (RpStatus, String) {
    (RpStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (RpStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn read3(p: *const f64, what: &str) -> Result<[f64; 3], (RpStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok([*p, *p.add(1), *p.add(2)])
}

unsafe fn write_out<T>(p: *mut T, v: T, what: &str) -> Result<(), (RpStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    *p = v;
    Ok(())
}

/// Library version, static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (truncated,
/// always NUL-terminated when `len > 0`). Returns the full message length
/// excluding the terminator.
#[no_mangle]
pub unsafe extern "C" fn rp_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// The built-in sodium D2 species. Never null.
#[no_mangle]
pub extern "C" fn rp_atom_spec_sodium() -> *mut RpAtomSpec {
    Box::into_raw(Box::new(RpAtomSpec(AtomSpec::sodium())))
}

/// Parses an atom species from its JSON file format.
#[no_mangle]
pub unsafe extern "C" fn rp_atom_spec_from_json(json: *const c_char, out: *mut *mut RpAtomSpec) -> RpStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json).to_str().map_err(|e| (RpStatus::InvalidInput, format!("json is not UTF-8: {e}")))?;
        let spec = AtomSpec::from_json(text).map_err(lib)?;
        write_out(out, Box::into_raw(Box::new(RpAtomSpec(spec))), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn rp_atom_spec_free(spec: *mut RpAtomSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Resonance angular frequency in rad/s.
#[no_mangle]
pub unsafe extern "C" fn rp_atom_spec_resonance(spec: *const RpAtomSpec, out: *mut f64) -> RpStatus {
    guard(|| write_out(out, deref(spec, "spec")?.0.resonance(), "out"))
}

/// Builds the joint state for a condensate in the single sublevel
/// `(doubled_f, doubled_m)`.
///
/// `pump_dir`, `k`: 3 doubles. `pump_pol`: 6 doubles, interleaved
/// `re, im` per Cartesian component. `laser`: rad/s.
#[no_mangle]
pub unsafe extern "C" fn rp_pair_state_build(
    spec: *const RpAtomSpec,
    pump_dir: *const f64,
    pump_pol: *const f64,
    laser: f64,
    doubled_f: i32,
    doubled_m: i32,
    k: *const f64,
    out: *mut *mut RpPairState,
) -> RpStatus {
    guard(|| {
        let spec = &deref(spec, "spec")?.0;
        let dir = read3(pump_dir, "pump_dir")?;
        if pump_pol.is_null() {
            return Err(null("pump_pol"));
        }
        let pol: [Complex64; 3] = std::array::from_fn(|i| Complex64::new(*pump_pol.add(2 * i), *pump_pol.add(2 * i + 1)));
        let k = read3(k, "k")?;
        let pump = PumpConfig::new(dir, pol, laser, Complex64::new(1.0, 0.0), 1.0).map_err(lib)?;
        let cond = CondensateSpinor::single(HalfInt::from_doubled(doubled_f), HalfInt::from_doubled(doubled_m)).map_err(lib)?;
        let state = build_pair_state(spec, &pump, &cond, &k).map_err(lib)?;
        write_out(out, Box::into_raw(Box::new(RpPairState(state))), "out")
    })
}

/// Keeps only the photon channel of final level `doubled_level`.
#[no_mangle]
pub unsafe extern "C" fn rp_pair_state_filter(
    state: *const RpPairState,
    doubled_level: i32,
    out: *mut *mut RpPairState,
) -> RpStatus {
    guard(|| {
        let s = spectral_filter(&deref(state, "state")?.0, HalfInt::from_doubled(doubled_level)).map_err(lib)?;
        write_out(out, Box::into_raw(Box::new(RpPairState(s))), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn rp_pair_state_free(state: *mut RpPairState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Photon channels (rows) and atomic sublevels (columns).
#[no_mangle]
pub unsafe extern "C" fn rp_pair_state_shape(state: *const RpPairState, rows: *mut usize, cols: *mut usize) -> RpStatus {
    guard(|| {
        let m = &deref(state, "state")?.0.amplitudes;
        write_out(rows, m.rows, "rows")?;
        write_out(cols, m.cols, "cols")
    })
}

/// Row-major amplitudes as interleaved `re, im`; `len` counts doubles and
/// must be at least `2 * rows * cols`.
#[no_mangle]
pub unsafe extern "C" fn rp_pair_state_amplitudes(state: *const RpPairState, buf: *mut f64, len: usize) -> RpStatus {
    guard(|| {
        let m = &deref(state, "state")?.0.amplitudes;
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len < 2 * m.data.len() {
            return Err((RpStatus::BufferTooSmall, format!("need {} doubles, got {len}", 2 * m.data.len())));
        }
        for (i, a) in m.data.iter().enumerate() {
            *buf.add(2 * i) = a.re;
            *buf.add(2 * i + 1) = a.im;
        }
        Ok(())
    })
}

/// Entanglement entropy in bits.
#[no_mangle]
pub unsafe extern "C" fn rp_pair_state_entropy(state: *const RpPairState, out: *mut f64) -> RpStatus {
    guard(|| write_out(out, entanglement_entropy(&deref(state, "state")?.0), "out"))
}

/// Concurrence; the state must have a 2×2 support.
#[no_mangle]
pub unsafe extern "C" fn rp_pair_state_concurrence(state: *const RpPairState, out: *mut f64) -> RpStatus {
    guard(|| {
        let c = concurrence_2x2(&deref(state, "state")?.0).map_err(lib)?;
        write_out(out, c, "out")
    })
}

/// Maximal CHSH value; `settings` (4 doubles, may be null) receives
/// `a, a′, b, b′`.
#[no_mangle]
pub unsafe extern "C" fn rp_chsh_optimum(state: *const RpPairState, s: *mut f64, settings: *mut f64) -> RpStatus {
    guard(|| {
        let opt = optimize_chsh(&deref(state, "state")?.0).map_err(lib)?;
        write_out(s, opt.s, "s")?;
        if !settings.is_null() {
            let st = opt.settings;
            for (i, v) in [st.a, st.a_prime, st.b, st.b_prime].into_iter().enumerate() {
                *settings.add(i) = v;
            }
        }
        Ok(())
    })
}

/// Simulated CHSH run of `n` trials at `settings` (4 doubles).
#[no_mangle]
pub unsafe extern "C" fn rp_chsh_sample(
    state: *const RpPairState,
    settings: *const f64,
    n: u64,
    seed: u64,
    s: *mut f64,
    standard_error: *mut f64,
) -> RpStatus {
    guard(|| {
        let st = &deref(state, "state")?.0;
        if settings.is_null() {
            return Err(null("settings"));
        }
        let cs = ChshSettings::new(*settings, *settings.add(1), *settings.add(2), *settings.add(3)).map_err(lib)?;
        let r = sample_events(st, &cs, n, seed).map_err(lib)?;
        write_out(s, r.s_estimate, "s")?;
        write_out(standard_error, r.standard_error, "standard_error")
    })
}
