//! C interface to `loqc`.
//!
//! Objects cross the boundary as opaque handles created by `*_new` or
//! out-parameters and released with the matching `*_free`. Every fallible
//! call returns a [`LoqcStatus`]; the message of the last failure on the
//! calling thread is available from [`loqc_last_error`]. Complex matrices
//! are passed as row-major arrays of interleaved `(re, im)` doubles, mode
//! indices are 1-based.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use loqc::fock::{self, AncillaSpec, ModeMatrix, OccupationVector};
use loqc::gates::{self, DualRailEncoding};
use loqc::metrics::{self, GateMap};
use loqc::optimize::{self, AnsatzKind, OptimizerConfig, Problem};
use loqc::reck::{self, Decomposition};
use loqc::Error;
use num_complex::Complex64;

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LoqcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    CapacityExceeded = 4,
    ZeroGateMap = 5,
    UnknownTarget = 6,
    Numerical = 7,
    Parse = 8,
    Io = 9,
    Panic = 10,
}

impl From<&Error> for LoqcStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Dimension(_) => LoqcStatus::DimensionMismatch,
            Error::Capacity(_) => LoqcStatus::CapacityExceeded,
            Error::Validation(_) => LoqcStatus::InvalidArgument,
            Error::ZeroGateMap => LoqcStatus::ZeroGateMap,
            Error::UnknownTarget(_) => LoqcStatus::UnknownTarget,
            Error::Fit(_)
            | Error::Continuation(_)
            | Error::Consistency(_)
            | Error::StructuralBreak { .. } => LoqcStatus::Numerical,
            Error::Parse(_) | Error::Json(_) | Error::Csv(_) => LoqcStatus::Parse,
            Error::Io(_) => LoqcStatus::Io,
        }
    }
}

/// Opaque square complex mode matrix.
pub struct LoqcModeMatrix(ModeMatrix);

/// Opaque post-selected gate map.
pub struct LoqcGateMap(GateMap);

/// Opaque beamsplitter/phase-shifter factorization.
pub struct LoqcDecomposition(Decomposition);

/// One beamsplitter `T(i, j)`, `i > j`, 1-based modes.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LoqcRotation {
    pub i: usize,
    pub j: usize,
    pub omega: f64,
    pub phi: f64,
}

/// Optimizer knobs; start from `loqc_optimizer_settings_default`.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoqcOptimizerSettings {
    pub epsilon: f64,
    pub n_restarts: usize,
    pub max_iterations: usize,
    pub gradient_step: f64,
    pub convergence_tol: f64,
    pub rng_seed: u64,
    /// `false` for the Knill ansatz, `true` for a full unitary.
    pub full_unitary: bool,
}

/// Summary of an optimized device.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LoqcPoint {
    pub epsilon: f64,
    pub delta: f64,
    pub success: f64,
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(e: Error) -> LoqcStatus {
    let status = LoqcStatus::from(&e);
    set_error(e.to_string());
    status
}

fn null(what: &str) -> LoqcStatus {
    set_error(format!("{what} is NULL"));
    LoqcStatus::NullPointer
}

/// Runs `f`, turning errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), LoqcStatus>>(f: F) -> LoqcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LoqcStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            LoqcStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, LoqcStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], LoqcStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], LoqcStatus> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn out<T>(p: *mut T, value: T, what: &str) -> Result<(), LoqcStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

unsafe fn string<'a>(p: *const c_char, what: &str) -> Result<&'a str, LoqcStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not UTF-8"));
        LoqcStatus::InvalidArgument
    })
}

fn write_matrix(m: &nalgebra::DMatrix<Complex64>, buf: &mut [f64]) {
    let n = m.ncols();
    for i in 0..m.nrows() {
        for j in 0..n {
            buf[2 * (i * n + j)] = m[(i, j)].re;
            buf[2 * (i * n + j) + 1] = m[(i, j)].im;
        }
    }
}

/// Message of the last failed call on this thread, or NULL. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn loqc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn loqc_status_name(status: LoqcStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        LoqcStatus::Ok => b"ok\0",
        LoqcStatus::NullPointer => b"null pointer\0",
        LoqcStatus::InvalidArgument => b"invalid argument\0",
        LoqcStatus::DimensionMismatch => b"dimension mismatch\0",
        LoqcStatus::CapacityExceeded => b"capacity exceeded\0",
        LoqcStatus::ZeroGateMap => b"zero gate map\0",
        LoqcStatus::UnknownTarget => b"unknown target\0",
        LoqcStatus::Numerical => b"numerical failure\0",
        LoqcStatus::Parse => b"parse error\0",
        LoqcStatus::Io => b"i/o error\0",
        LoqcStatus::Panic => b"internal panic\0",
    };
    s.as_ptr().cast()
}

/// Builds an `n x n` matrix from `2 n^2` interleaved doubles.
///
/// # Safety
/// `re_im` must point to `2 n^2` doubles and `out_matrix` must be writable.
#[no_mangle]
pub unsafe extern "C" fn loqc_mode_matrix_new(
    n: usize,
    re_im: *const f64,
    out_matrix: *mut *mut LoqcModeMatrix,
) -> LoqcStatus {
    guard(|| {
        if n == 0 {
            set_error("matrix must have at least one mode".into());
            return Err(LoqcStatus::InvalidArgument);
        }
        let data = slice(re_im, 2 * n * n, "re_im")?;
        let m = nalgebra::DMatrix::from_fn(n, n, |i, j| {
            Complex64::new(data[2 * (i * n + j)], data[2 * (i * n + j) + 1])
        });
        let m = ModeMatrix::new(m).map_err(fail)?;
        out(
            out_matrix,
            Box::into_raw(Box::new(LoqcModeMatrix(m))),
            "out_matrix",
        )
    })
}

/// # Safety
/// `out_matrix` must be writable.
#[no_mangle]
pub unsafe extern "C" fn loqc_mode_matrix_identity(
    n: usize,
    out_matrix: *mut *mut LoqcModeMatrix,
) -> LoqcStatus {
    guard(|| {
        if n == 0 {
            set_error("matrix must have at least one mode".into());
            return Err(LoqcStatus::InvalidArgument);
        }
        out(
            out_matrix,
            Box::into_raw(Box::new(LoqcModeMatrix(ModeMatrix::identity(n)))),
            "out_matrix",
        )
    })
}

/// # Safety
/// `m` must come from this library and not be used afterwards. NULL is a
/// no-op.
#[no_mangle]
pub unsafe extern "C" fn loqc_mode_matrix_free(m: *mut LoqcModeMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Number of modes, or 0 for NULL.
///
/// # Safety
/// `m` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn loqc_mode_matrix_n_modes(m: *const LoqcModeMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.n_modes())
}

/// Copies the entries into `buf` (`2 n^2` doubles).
///
/// # Safety
/// `m` must be live; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn loqc_mode_matrix_entries(
    m: *const LoqcModeMatrix,
    buf: *mut f64,
    len: usize,
) -> LoqcStatus {
    guard(|| {
        let m = &deref(m, "matrix")?.0;
        let need = 2 * m.n_modes() * m.n_modes();
        if len < need {
            set_error(format!("buffer holds {len} doubles, {need} needed"));
            return Err(LoqcStatus::DimensionMismatch);
        }
        write_matrix(m.entries(), slice_mut(buf, need, "buf")?);
        Ok(())
    })
}

/// `max |U†U - I|`.
///
/// # Safety
/// `m` must be live; `error` writable.
#[no_mangle]
pub unsafe extern "C" fn loqc_mode_matrix_unitarity_error(
    m: *const LoqcModeMatrix,
    error: *mut f64,
) -> LoqcStatus {
    guard(|| {
        let m = &deref(m, "matrix")?.0;
        out(error, m.unitarity_error(), "error")
    })
}

/// `<output| U |input>` for photon-number vectors of length `n_modes`.
///
/// # Safety
/// `input` and `output` must hold `n_modes` values; `re`, `im` writable.
#[no_mangle]
pub unsafe extern "C" fn loqc_transition_amplitude(
    m: *const LoqcModeMatrix,
    input: *const u32,
    output: *const u32,
    n_modes: usize,
    re: *mut f64,
    im: *mut f64,
) -> LoqcStatus {
    guard(|| {
        let m = &deref(m, "matrix")?.0;
        let i = OccupationVector::new(slice(input, n_modes, "input")?.to_vec());
        let o = OccupationVector::new(slice(output, n_modes, "output")?.to_vec());
        let a = fock::transition_amplitude(m, &i, &o).map_err(fail)?;
        out(re, a.re, "re")?;
        out(im, a.im, "im")
    })
}

/// Post-selected gate map of `u` in the standard dual-rail layout: qubits
/// on the first modes, `n_ancilla` ancilla modes last.
///
/// # Safety
/// `ancilla_in` and `pattern` must hold `n_ancilla` values.
#[no_mangle]
pub unsafe extern "C" fn loqc_gate_map_extract(
    u: *const LoqcModeMatrix,
    ancilla_in: *const u32,
    pattern: *const u32,
    n_ancilla: usize,
    out_map: *mut *mut LoqcGateMap,
) -> LoqcStatus {
    guard(|| {
        let u = &deref(u, "u")?.0;
        let n = u.n_modes();
        if n < n_ancilla + 2 || !(n - n_ancilla).is_multiple_of(2) {
            set_error(format!(
                "{n} modes cannot hold dual-rail qubits plus {n_ancilla} ancilla modes"
            ));
            return Err(LoqcStatus::DimensionMismatch);
        }
        let anc = AncillaSpec::new(
            slice(ancilla_in, n_ancilla, "ancilla_in")?.to_vec(),
            slice(pattern, n_ancilla, "pattern")?.to_vec(),
        )
        .map_err(fail)?;
        let enc = DualRailEncoding::standard((n - n_ancilla) / 2, n_ancilla);
        let map = fock::extract_gate_map(u, &enc, &anc).map_err(fail)?;
        out(
            out_map,
            Box::into_raw(Box::new(LoqcGateMap(map))),
            "out_map",
        )
    })
}

/// # Safety
/// `map` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn loqc_gate_map_free(map: *mut LoqcGateMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Side `2^q` of the logical block, or 0 for NULL.
///
/// # Safety
/// `map` must be NULL or live.
#[no_mangle]
pub unsafe extern "C" fn loqc_gate_map_dimension(map: *const LoqcGateMap) -> usize {
    map.as_ref().map_or(0, |m| m.0.dimension())
}

/// Copies the logical block into `buf` (`2 d^2` doubles).
///
/// # Safety
/// `map` must be live; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn loqc_gate_map_entries(
    map: *const LoqcGateMap,
    buf: *mut f64,
    len: usize,
) -> LoqcStatus {
    guard(|| {
        let map = &deref(map, "map")?.0;
        let d = map.dimension();
        if len < 2 * d * d {
            set_error(format!("buffer holds {len} doubles, {} needed", 2 * d * d));
            return Err(LoqcStatus::DimensionMismatch);
        }
        write_matrix(map.entries(), slice_mut(buf, 2 * d * d, "buf")?);
        Ok(())
    })
}

/// Fidelity against a built-in target (`"cz"`, `"cnot"`, `"cs:0.5"`, ...).
///
/// # Safety
/// `map` live, `target` a NUL-terminated string, `fidelity` writable.
#[no_mangle]
pub unsafe extern "C" fn loqc_fidelity(
    map: *const LoqcGateMap,
    target: *const c_char,
    fidelity: *mut f64,
) -> LoqcStatus {
    guard(|| {
        let map = &deref(map, "map")?.0;
        let t = gates::parse_target(string(target, "target")?).map_err(fail)?;
        out(
            fidelity,
            metrics::fidelity(map, &t).map_err(fail)?,
            "fidelity",
        )
    })
}

/// Success probability of `map` produced by `u` with `n_photons` photons.
///
/// # Safety
/// `map` and `u` live, `success` writable.
#[no_mangle]
pub unsafe extern "C" fn loqc_success(
    map: *const LoqcGateMap,
    u: *const LoqcModeMatrix,
    n_photons: u32,
    success: *mut f64,
) -> LoqcStatus {
    guard(|| {
        let map = &deref(map, "map")?.0;
        let u = &deref(u, "u")?.0;
        out(success, metrics::success(map, u, n_photons), "success")
    })
}

#[no_mangle]
pub extern "C" fn loqc_optimizer_settings_default() -> LoqcOptimizerSettings {
    let c = OptimizerConfig::default();
    LoqcOptimizerSettings {
        epsilon: c.epsilon,
        n_restarts: c.n_restarts,
        max_iterations: c.max_iterations,
        gradient_step: c.gradient_step,
        convergence_tol: c.convergence_tol,
        rng_seed: c.rng_seed,
        full_unitary: c.ansatz == AnsatzKind::Full,
    }
}

/// Best CZ device (two qubits, ancillas `(1,1)` heralded on `(1,1)`, rails
/// 1 and 3 passive for the Knill ansatz). `out_u` may be NULL.
///
/// # Safety
/// `settings` live, `point` writable, `out_u` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn loqc_maximize_cz(
    settings: *const LoqcOptimizerSettings,
    point: *mut LoqcPoint,
    out_u: *mut *mut LoqcModeMatrix,
) -> LoqcStatus {
    guard(|| {
        let s = deref(settings, "settings")?;
        let config = OptimizerConfig {
            epsilon: s.epsilon,
            n_restarts: s.n_restarts,
            max_iterations: s.max_iterations,
            gradient_step: s.gradient_step,
            convergence_tol: s.convergence_tol,
            rng_seed: s.rng_seed,
            ansatz: if s.full_unitary {
                AnsatzKind::Full
            } else {
                AnsatzKind::Knill
            },
            threads: None,
        };
        let best = optimize::maximize(&config, &Problem::knill_cz()).map_err(fail)?;
        out(
            point,
            LoqcPoint {
                epsilon: best.epsilon,
                delta: best.delta,
                success: best.success,
                objective: best.objective,
                converged: best.converged,
                iterations: best.iterations,
            },
            "point",
        )?;
        if !out_u.is_null() {
            out_u.write(Box::into_raw(Box::new(LoqcModeMatrix(best.u))));
        }
        Ok(())
    })
}

/// # Safety
/// `u` live, `out_decomposition` writable.
#[no_mangle]
pub unsafe extern "C" fn loqc_decompose(
    u: *const LoqcModeMatrix,
    out_decomposition: *mut *mut LoqcDecomposition,
) -> LoqcStatus {
    guard(|| {
        let d = reck::decompose(&deref(u, "u")?.0).map_err(fail)?;
        out(
            out_decomposition,
            Box::into_raw(Box::new(LoqcDecomposition(d))),
            "out_decomposition",
        )
    })
}

/// # Safety
/// `d` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn loqc_decomposition_free(d: *mut LoqcDecomposition) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// # Safety
/// `d` NULL or live.
#[no_mangle]
pub unsafe extern "C" fn loqc_decomposition_n_modes(d: *const LoqcDecomposition) -> usize {
    d.as_ref().map_or(0, |d| d.0.n_modes)
}

/// # Safety
/// `d` NULL or live.
#[no_mangle]
pub unsafe extern "C" fn loqc_decomposition_rotation_count(d: *const LoqcDecomposition) -> usize {
    d.as_ref().map_or(0, |d| d.0.rotations.len())
}

/// Rotation `index` in physical order.
///
/// # Safety
/// `d` live, `rotation` writable.
#[no_mangle]
pub unsafe extern "C" fn loqc_decomposition_rotation(
    d: *const LoqcDecomposition,
    index: usize,
    rotation: *mut LoqcRotation,
) -> LoqcStatus {
    guard(|| {
        let d = &deref(d, "decomposition")?.0;
        let r = d.rotations.get(index).ok_or_else(|| {
            set_error(format!("rotation {index} of {}", d.rotations.len()));
            LoqcStatus::InvalidArgument
        })?;
        let (i, j) = r.modes_one_based();
        out(
            rotation,
            LoqcRotation {
                i,
                j,
                omega: r.omega,
                phi: r.phi,
            },
            "rotation",
        )
    })
}

/// Copies the `n_modes` output phases.
///
/// # Safety
/// `d` live; `phases` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn loqc_decomposition_output_phases(
    d: *const LoqcDecomposition,
    phases: *mut f64,
    len: usize,
) -> LoqcStatus {
    guard(|| {
        let d = &deref(d, "decomposition")?.0;
        if len < d.n_modes {
            set_error(format!("buffer holds {len} phases, {} needed", d.n_modes));
            return Err(LoqcStatus::DimensionMismatch);
        }
        slice_mut(phases, d.n_modes, "phases")?.copy_from_slice(&d.output_phases);
        Ok(())
    })
}

/// # Safety
/// `d` live, `out_matrix` writable.
#[no_mangle]
pub unsafe extern "C" fn loqc_decomposition_reconstruct(
    d: *const LoqcDecomposition,
    out_matrix: *mut *mut LoqcModeMatrix,
) -> LoqcStatus {
    guard(|| {
        let m = reck::reconstruct(&deref(d, "decomposition")?.0);
        out(
            out_matrix,
            Box::into_raw(Box::new(LoqcModeMatrix(m))),
            "out_matrix",
        )
    })
}

/// Circuit JSON; release with `loqc_string_free`.
///
/// # Safety
/// `d` live, `json` writable.
#[no_mangle]
pub unsafe extern "C" fn loqc_decomposition_to_json(
    d: *const LoqcDecomposition,
    json: *mut *mut c_char,
) -> LoqcStatus {
    guard(|| {
        let text = reck::circuit_json(&deref(d, "decomposition")?.0).map_err(fail)?;
        let c = CString::new(text).expect("JSON has no NUL");
        out(json, c.into_raw(), "json")
    })
}

/// Parses circuit JSON.
///
/// # Safety
/// `json` NUL-terminated, `out_decomposition` writable.
#[no_mangle]
pub unsafe extern "C" fn loqc_decomposition_from_json(
    json: *const c_char,
    out_decomposition: *mut *mut LoqcDecomposition,
) -> LoqcStatus {
    guard(|| {
        let d = reck::parse_circuit(string(json, "json")?).map_err(fail)?;
        out(
            out_decomposition,
            Box::into_raw(Box::new(LoqcDecomposition(d))),
            "out_decomposition",
        )
    })
}

/// # Safety
/// `s` must come from this library. NULL is a no-op.
#[no_mangle]
pub unsafe extern "C" fn loqc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
