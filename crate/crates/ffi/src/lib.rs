//! C ABI over the `becv` library.
//!
//! Conventions:
//! - Every fallible function returns a [`BecvStatus`] and writes results
//!   through out-pointers. On failure the out-pointers are left untouched and
//!   [`becv_last_error`] describes the problem.
//! - Objects are opaque handles created by `becv_*_new`/`_from_*` functions and
//!   released with the matching `_free`. Passing NULL to a `_free` is a no-op.
//! - Strings returned as `char *` are owned by the caller and released with
//!   [`becv_string_free`].
//! - Panics never cross the boundary; they surface as `BECV_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use becv::certifier::{certify, ppt_measure, CertificationReport, CertifierConfig};
use becv::circuit::{
    apply_loss, bound_state_preset, paper_circuit, paper_partition, simulate_circuit, CircuitSpec, LossSpec,
};
use becv::error::Error;
use becv::gaussian::{physicality_margin, symplectic_eigenvalues, CovarianceMatrix, GaussianState, ModePartition};
use becv::io::CovarianceFile;
use becv::tomography::{bootstrap_certify, default_setting_plan, generate_dataset, BootstrapConfig, QuadratureDataset};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BecvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidState = 3,
    UnphysicalSource = 4,
    /// The separability program was undecided; widen the tolerance.
    Indeterminate = 5,
    SearchExhausted = 6,
    Unidentifiable = 7,
    Format = 8,
    Io = 9,
    /// A bug inside the library; the message holds the panic payload.
    Panic = 10,
}

/// Shipped circuits for [`becv_circuit_preset`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BecvPreset {
    PaperCircuit = 0,
    BoundState = 1,
}

pub struct BecvState(GaussianState);
pub struct BecvPartition(ModePartition);
pub struct BecvReport(CertificationReport);
pub struct BecvCircuit(CircuitSpec);
pub struct BecvDataset(QuadratureDataset);

/// Bootstrap statistics. Significances are NaN when undefined.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BecvBootstrapSummary {
    pub resample_count: usize,
    pub indeterminate: usize,
    pub e_mean: f64,
    pub e_std: f64,
    pub p_mean: f64,
    pub p_std: f64,
    pub phys_mean: f64,
    pub phys_std: f64,
    pub significance_e: f64,
    pub significance_p: f64,
    pub significance_phys: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> BecvStatus {
    match e {
        Error::InvalidArgument(_) => BecvStatus::InvalidArgument,
        Error::InvalidState(_) => BecvStatus::InvalidState,
        Error::UnphysicalSource { .. } => BecvStatus::UnphysicalSource,
        Error::Indeterminate { .. } => BecvStatus::Indeterminate,
        Error::SearchExhausted { .. } => BecvStatus::SearchExhausted,
        Error::Unidentifiable(_) => BecvStatus::Unidentifiable,
        Error::Format { .. } | Error::Json(_) => BecvStatus::Format,
        Error::Io(_) => BecvStatus::Io,
    }
}

/// Internal failure: status plus message.
struct Fail(BecvStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(BecvStatus::NullPointer, format!("{what} is NULL"))
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> BecvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BecvStatus::Ok,
        Ok(Err(Fail(status, message))) => {
            set_error(&message);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("panic: {msg}"));
            BecvStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn text<'a>(s: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|_| Fail(BecvStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn write_slice(values: &[f64], out: *mut f64, len: usize) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    if len < values.len() {
        return Err(Fail(BecvStatus::InvalidArgument, format!("buffer holds {len} values, need {}", values.len())));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    Ok(())
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

/// Message of the last failed call on this thread; empty if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn becv_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, statically allocated.
#[no_mangle]
pub extern "C" fn becv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be NULL or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn becv_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// States.

/// Builds a state from a row-major `2n x 2n` covariance matrix (vacuum = I).
///
/// # Safety
/// `matrix` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn becv_state_new(
    n_modes: usize,
    matrix: *const f64,
    len: usize,
    out: *mut *mut BecvState,
) -> BecvStatus {
    guard(|| {
        if matrix.is_null() {
            return Err(null("matrix"));
        }
        let values = std::slice::from_raw_parts(matrix, len);
        let cov = CovarianceMatrix::from_row_major(n_modes, values)?;
        put(out, BecvState(GaussianState::new(cov)))
    })
}

/// Reads a covariance JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn becv_state_read(path: *const c_char, out: *mut *mut BecvState) -> BecvStatus {
    guard(|| {
        let file = CovarianceFile::read(PathBuf::from(text(path, "path")?))?;
        put(out, BecvState(file.state()?))
    })
}

/// # Safety
/// `state` must be NULL or a handle from this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn becv_state_free(state: *mut BecvState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// # Safety
/// `state` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn becv_state_n_modes(state: *const BecvState) -> usize {
    state.as_ref().map_or(0, |s| s.0.n_modes())
}

/// Copies the row-major covariance matrix into `out` (`len >= 4 n^2`).
///
/// # Safety
/// `state` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn becv_state_matrix(state: *const BecvState, out: *mut f64, len: usize) -> BecvStatus {
    guard(|| write_slice(&get(state, "state")?.0.cov.to_row_major(), out, len))
}

/// Smallest eigenvalue of `γ + iσ`; negative means unphysical.
///
/// # Safety
/// `state` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn becv_physicality_margin(state: *const BecvState, out: *mut f64) -> BecvStatus {
    guard(|| {
        let m = physicality_margin(&get(state, "state")?.0);
        write_slice(&[m], out, 1)
    })
}

/// Ascending symplectic eigenvalues into `out` (`len >= n`).
///
/// # Safety
/// `state` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn becv_symplectic_eigenvalues(state: *const BecvState, out: *mut f64, len: usize) -> BecvStatus {
    guard(|| write_slice(&symplectic_eigenvalues(&get(state, "state")?.0)?, out, len))
}

/// Passes `mode` through a channel of transmission `efficiency`.
///
/// # Safety
/// `state` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn becv_apply_loss(
    state: *const BecvState,
    mode: usize,
    efficiency: f64,
    out: *mut *mut BecvState,
) -> BecvStatus {
    guard(|| {
        let lossy = apply_loss(&get(state, "state")?.0, &LossSpec { mode, efficiency })?;
        put(out, BecvState(lossy))
    })
}

// Partitions.

/// Parses a one-based bipartition such as `"1,4|2,3"`.
///
/// # Safety
/// `spec` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn becv_partition_parse(
    spec: *const c_char,
    n_modes: usize,
    out: *mut *mut BecvPartition,
) -> BecvStatus {
    guard(|| put(out, BecvPartition(ModePartition::parse(text(spec, "spec")?, n_modes)?)))
}

/// # Safety
/// `partition` must be NULL or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn becv_partition_free(partition: *mut BecvPartition) {
    if !partition.is_null() {
        drop(Box::from_raw(partition));
    }
}

// Certification.

/// `P`: smallest eigenvalue of the partially transposed `γ + iσ`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn becv_ppt_measure(
    state: *const BecvState,
    partition: *const BecvPartition,
    out: *mut f64,
) -> BecvStatus {
    guard(|| {
        let p = ppt_measure(&get(state, "state")?.0, &get(partition, "partition")?.0)?;
        write_slice(&[p], out, 1)
    })
}

/// Full certification. `tol <= 0` selects the default tolerance.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn becv_certify(
    state: *const BecvState,
    partition: *const BecvPartition,
    tol: f64,
    allow_unphysical: c_int,
    out: *mut *mut BecvReport,
) -> BecvStatus {
    guard(|| {
        let mut cfg = if tol > 0.0 { CertifierConfig::with_tol(tol) } else { CertifierConfig::default() };
        cfg.allow_unphysical = allow_unphysical != 0;
        let report = certify(&get(state, "state")?.0, &get(partition, "partition")?.0, &cfg)?;
        put(out, BecvReport(report))
    })
}

/// # Safety
/// `report` must be NULL or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn becv_report_free(report: *mut BecvReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// `E`; NaN for a NULL handle.
///
/// # Safety
/// `report` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn becv_report_entanglement(report: *const BecvReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.0.entanglement)
}

/// `P`; NaN for a NULL handle.
///
/// # Safety
/// `report` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn becv_report_ppt_margin(report: *const BecvReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.0.ppt_margin)
}

/// Physicality margin; NaN for a NULL handle.
///
/// # Safety
/// `report` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn becv_report_physicality(report: *const BecvReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.0.physicality)
}

/// Classification label such as `"bound-entangled"`, statically allocated;
/// NULL for a NULL handle.
///
/// # Safety
/// `report` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn becv_report_classification(report: *const BecvReport) -> *const c_char {
    let Some(r) = report.as_ref() else { return ptr::null() };
    use becv::certifier::Classification::*;
    let s: &'static [u8] = match r.0.classification {
        BoundEntangled => b"bound-entangled\0",
        FreeEntangled => b"free-entangled\0",
        EntangledPptBoundary => b"entangled-ppt-boundary\0",
        Separable => b"separable\0",
        SeparableBoundary => b"separable-boundary\0",
        Unphysical => b"unphysical\0",
    };
    s.as_ptr().cast()
}

/// The report as JSON; free with [`becv_string_free`].
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn becv_report_to_json(report: *const BecvReport, out: *mut *mut c_char) -> BecvStatus {
    guard(|| {
        let json = serde_json::to_string_pretty(&get(report, "report")?.0).map_err(Error::from)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = owned_string(json);
        Ok(())
    })
}

// Circuits.

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn becv_circuit_preset(which: BecvPreset, out: *mut *mut BecvCircuit) -> BecvStatus {
    guard(|| {
        let spec = match which {
            BecvPreset::PaperCircuit => paper_circuit([0.5; 4], paper_partition()),
            BecvPreset::BoundState => bound_state_preset(),
        };
        put(out, BecvCircuit(spec))
    })
}

/// Parses a circuit from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn becv_circuit_parse(json: *const c_char, out: *mut *mut BecvCircuit) -> BecvStatus {
    guard(|| put(out, BecvCircuit(CircuitSpec::parse(text(json, "json")?)?)))
}

/// # Safety
/// `circuit` must be NULL or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn becv_circuit_free(circuit: *mut BecvCircuit) {
    if !circuit.is_null() {
        drop(Box::from_raw(circuit));
    }
}

/// Output state of the circuit.
///
/// # Safety
/// `circuit` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn becv_circuit_simulate(circuit: *const BecvCircuit, out: *mut *mut BecvState) -> BecvStatus {
    guard(|| put(out, BecvState(simulate_circuit(&get(circuit, "circuit")?.0)?)))
}

/// The circuit's partition; `InvalidArgument` if it has none.
///
/// # Safety
/// `circuit` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn becv_circuit_partition(
    circuit: *const BecvCircuit,
    out: *mut *mut BecvPartition,
) -> BecvStatus {
    guard(|| {
        let p = get(circuit, "circuit")?.0.partition.clone();
        let p = p.ok_or_else(|| Fail(BecvStatus::InvalidArgument, "circuit has no partition".into()))?;
        put(out, BecvPartition(p))
    })
}

// Tomography.

/// Samples `count` joint outcomes per setting of the default plan.
///
/// # Safety
/// `state` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn becv_dataset_generate(
    state: *const BecvState,
    count: usize,
    seed: u64,
    out: *mut *mut BecvDataset,
) -> BecvStatus {
    guard(|| {
        let s = &get(state, "state")?.0;
        let plan = default_setting_plan(s.n_modes())?;
        put(out, BecvDataset(generate_dataset(s, &plan, count, seed)?))
    })
}

/// Reads a binary dataset file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn becv_dataset_read(path: *const c_char, out: *mut *mut BecvDataset) -> BecvStatus {
    guard(|| put(out, BecvDataset(QuadratureDataset::read(text(path, "path")?)?)))
}

/// Writes the binary dataset container.
///
/// # Safety
/// `dataset` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn becv_dataset_write(dataset: *const BecvDataset, path: *const c_char) -> BecvStatus {
    guard(|| Ok(get(dataset, "dataset")?.0.write(text(path, "path")?)?))
}

/// # Safety
/// `dataset` must be NULL or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn becv_dataset_free(dataset: *mut BecvDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Bootstraps E, P and physicality with resampling per setting.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn becv_bootstrap(
    dataset: *const BecvDataset,
    partition: *const BecvPartition,
    resamples: usize,
    seed: u64,
    out: *mut BecvBootstrapSummary,
) -> BecvStatus {
    guard(|| {
        let config = BootstrapConfig { resamples, seed, ..BootstrapConfig::default() };
        let r = bootstrap_certify(&get(dataset, "dataset")?.0, &get(partition, "partition")?.0, &config)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = BecvBootstrapSummary {
            resample_count: r.resample_count,
            indeterminate: r.indeterminate,
            e_mean: r.e_mean,
            e_std: r.e_std,
            p_mean: r.p_mean,
            p_std: r.p_std,
            phys_mean: r.phys_mean,
            phys_std: r.phys_std,
            significance_e: r.significance_e.unwrap_or(f64::NAN),
            significance_p: r.significance_p.unwrap_or(f64::NAN),
            significance_phys: r.significance_phys.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}
