//! C ABI over the `disctest` library.
//!
//! Every fallible function returns a [`DtStatus`]; on failure a message is
//! available from [`dt_last_error_message`] on the same thread. Results are
//! written through out-pointers. Training sets and experiments are opaque
//! handles released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use disctest::bounds::chernoff_information;
use disctest::config::{parse_config, preset_source, ConfigError};
use disctest::report::{errors_csv, exponents_csv};
use disctest::simulate::{
    run_experiment_with_workers, ExperimentConfig, ExperimentResult, TestKind,
};
use disctest::{
    classify_ks, classify_mmd, ks_distance, mmd2_unbiased, DistributionModel, Error, Kernel,
    SampleSequence, TrainingSet, Verdict,
};

/// Status code returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    InvalidConfig = 4,
    Unsupported = 5,
    /// The handle is not in a state that allows the call, e.g. reading
    /// results before `dt_experiment_run`.
    InvalidState = 6,
    BufferTooSmall = 7,
    Panic = 99,
}

/// Test selector for experiment accessors.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DtTest {
    Likelihood = 0,
    Mmd = 1,
    Ks = 2,
}

impl From<DtTest> for TestKind {
    fn from(t: DtTest) -> Self {
        match t {
            DtTest::Likelihood => TestKind::Likelihood,
            DtTest::Mmd => TestKind::Mmd,
            DtTest::Ks => TestKind::Ks,
        }
    }
}

/// Classification result. Indices are zero-based.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtVerdict {
    pub cluster: usize,
    pub member: usize,
    pub score: f64,
}

impl From<Verdict> for DtVerdict {
    fn from(v: Verdict) -> Self {
        Self {
            cluster: v.cluster,
            member: v.member,
            score: v.score,
        }
    }
}

/// Opaque training-set builder.
pub struct DtTraining {
    dim: usize,
    clusters: Vec<Vec<SampleSequence>>,
}

/// Opaque experiment: a parsed config plus, after a run, its results.
pub struct DtExperiment {
    config: ExperimentConfig,
    result: Option<ExperimentResult>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(DtStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::DimensionMismatch { .. } => DtStatus::DimensionMismatch,
            Error::Unsupported(_) => DtStatus::Unsupported,
            _ => DtStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure(DtStatus::InvalidConfig, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(DtStatus::NullPointer, format!("`{what}` is null"))
}

/// Runs `f`, converting errors and panics into a status and a stored message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            DtStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            DtStatus::Panic
        }
    }
}

/// # Safety
/// `data` must point to `len` readable doubles, or be anything when `len` is 0.
unsafe fn slice<'a>(data: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

/// # Safety
/// `data` must point to `len * dim` readable doubles in row-major order.
unsafe fn sequence(
    data: *const f64,
    len: usize,
    dim: usize,
    what: &str,
) -> Result<SampleSequence, Failure> {
    let total = len
        .checked_mul(dim)
        .ok_or_else(|| Failure(DtStatus::InvalidArgument, "sequence size overflows".into()))?;
    let values = slice(data, total, what)?;
    Ok(SampleSequence::from_flat(values.to_vec(), dim)?)
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn string<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        Failure(
            DtStatus::InvalidArgument,
            format!("`{what}` is not valid UTF-8"),
        )
    })
}

/// Message for the last failed call on this thread, or null after a
/// successful call. Valid until the next call into this library on the same
/// thread.
#[no_mangle]
pub extern "C" fn dt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Unbiased squared MMD between two sequences of `dim`-dimensional points
/// stored row-major, under a Gaussian RBF kernel.
///
/// # Safety
/// `x` and `y` must point to `nx * dim` and `ny * dim` doubles; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn dt_mmd2_unbiased(
    x: *const f64,
    nx: usize,
    y: *const f64,
    ny: usize,
    dim: usize,
    bandwidth: f64,
    out_value: *mut f64,
) -> DtStatus {
    guard(|| {
        let out_value = out(out_value, "out_value")?;
        let kernel = Kernel::GaussianRbf { bandwidth };
        kernel.validate()?;
        let x = sequence(x, nx, dim, "x")?;
        let y = sequence(y, ny, dim, "y")?;
        *out_value = mmd2_unbiased(&kernel, &x, &y)?;
        Ok(())
    })
}

/// Two-sample Kolmogorov–Smirnov distance between scalar sequences.
///
/// # Safety
/// `x` and `y` must point to `nx` and `ny` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dt_ks_distance(
    x: *const f64,
    nx: usize,
    y: *const f64,
    ny: usize,
    out_value: *mut f64,
) -> DtStatus {
    guard(|| {
        let out_value = out(out_value, "out_value")?;
        let x = sequence(x, nx, 1, "x")?;
        let y = sequence(y, ny, 1, "y")?;
        *out_value = ks_distance(&x, &y)?;
        Ok(())
    })
}

/// Chernoff information in nats between two isotropic Gaussians of
/// dimension `dim`.
///
/// # Safety
/// `mean1` and `mean2` must point to `dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dt_chernoff_gaussian(
    mean1: *const f64,
    variance1: f64,
    mean2: *const f64,
    variance2: f64,
    dim: usize,
    out_value: *mut f64,
) -> DtStatus {
    guard(|| {
        let out_value = out(out_value, "out_value")?;
        if dim == 0 {
            return Err(Failure(
                DtStatus::InvalidArgument,
                "dim must be positive".into(),
            ));
        }
        let p = DistributionModel::gaussian(slice(mean1, dim, "mean1")?.to_vec(), variance1)?;
        let q = DistributionModel::gaussian(slice(mean2, dim, "mean2")?.to_vec(), variance2)?;
        *out_value = chernoff_information(&p, &q)?;
        Ok(())
    })
}

/// New empty training set for points of dimension `dim`.
///
/// # Safety
/// `out_handle` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dt_training_new(dim: usize, out_handle: *mut *mut DtTraining) -> DtStatus {
    guard(|| {
        let out_handle = out(out_handle, "out_handle")?;
        if dim == 0 {
            return Err(Failure(
                DtStatus::InvalidArgument,
                "dim must be positive".into(),
            ));
        }
        *out_handle = Box::into_raw(Box::new(DtTraining {
            dim,
            clusters: Vec::new(),
        }));
        Ok(())
    })
}

/// Appends a member sequence to cluster `cluster`. Clusters are created in
/// order: `cluster` may be an existing index or the next new one.
///
/// # Safety
/// `handle` must come from `dt_training_new`; `data` must point to
/// `len * dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn dt_training_add_member(
    handle: *mut DtTraining,
    cluster: usize,
    data: *const f64,
    len: usize,
) -> DtStatus {
    guard(|| {
        let t = handle.as_mut().ok_or_else(|| null("handle"))?;
        let seq = sequence(data, len, t.dim, "data")?;
        if seq.is_empty() {
            return Err(Failure(
                DtStatus::InvalidArgument,
                "member sequence is empty".into(),
            ));
        }
        match cluster.cmp(&t.clusters.len()) {
            std::cmp::Ordering::Less => t.clusters[cluster].push(seq),
            std::cmp::Ordering::Equal => t.clusters.push(vec![seq]),
            std::cmp::Ordering::Greater => {
                return Err(Failure(
                    DtStatus::InvalidArgument,
                    format!("cluster {cluster} skips index {}", t.clusters.len()),
                ))
            }
        }
        Ok(())
    })
}

/// # Safety
/// `handle` must be null or come from `dt_training_new`, and not be used again.
#[no_mangle]
pub unsafe extern "C" fn dt_training_free(handle: *mut DtTraining) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

unsafe fn classify_with(
    handle: *const DtTraining,
    y: *const f64,
    len: usize,
    out_verdict: *mut DtVerdict,
    f: impl FnOnce(&TrainingSet, &SampleSequence) -> disctest::Result<Verdict>,
) -> DtStatus {
    guard(|| {
        let out_verdict = out(out_verdict, "out_verdict")?;
        let t = handle.as_ref().ok_or_else(|| null("handle"))?;
        let train = TrainingSet::new(t.clusters.clone())?;
        let y = sequence(y, len, t.dim, "y")?;
        *out_verdict = f(&train, &y)?.into();
        Ok(())
    })
}

/// MMD nearest-member classification with a Gaussian RBF kernel.
///
/// # Safety
/// `handle` must be a live training set; `y` must point to `len * dim`
/// doubles; `out_verdict` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dt_classify_mmd(
    handle: *const DtTraining,
    y: *const f64,
    len: usize,
    bandwidth: f64,
    out_verdict: *mut DtVerdict,
) -> DtStatus {
    classify_with(handle, y, len, out_verdict, |train, y| {
        let kernel = Kernel::GaussianRbf { bandwidth };
        kernel.validate()?;
        classify_mmd(train, y, &kernel)
    })
}

/// KS nearest-member classification. Scalar training sets only.
///
/// # Safety
/// As for `dt_classify_mmd`.
#[no_mangle]
pub unsafe extern "C" fn dt_classify_ks(
    handle: *const DtTraining,
    y: *const f64,
    len: usize,
    out_verdict: *mut DtVerdict,
) -> DtStatus {
    classify_with(handle, y, len, out_verdict, classify_ks)
}

fn new_experiment(config: ExperimentConfig, out_handle: &mut *mut DtExperiment) {
    *out_handle = Box::into_raw(Box::new(DtExperiment {
        config,
        result: None,
    }));
}

/// Parses an experiment config from TOML text.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out_handle` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dt_experiment_from_toml(
    toml: *const c_char,
    out_handle: *mut *mut DtExperiment,
) -> DtStatus {
    guard(|| {
        let out_handle = out(out_handle, "out_handle")?;
        new_experiment(parse_config(string(toml, "toml")?)?, out_handle);
        Ok(())
    })
}

/// Loads a bundled preset by name.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out_handle` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dt_experiment_from_preset(
    name: *const c_char,
    out_handle: *mut *mut DtExperiment,
) -> DtStatus {
    guard(|| {
        let out_handle = out(out_handle, "out_handle")?;
        new_experiment(
            parse_config(preset_source(string(name, "name")?)?)?,
            out_handle,
        );
        Ok(())
    })
}

/// Overrides seed and trial count before running. A `trials` of 0 keeps the
/// configured value.
///
/// # Safety
/// `handle` must be a live experiment.
#[no_mangle]
pub unsafe extern "C" fn dt_experiment_configure(
    handle: *mut DtExperiment,
    seed: u64,
    trials: usize,
) -> DtStatus {
    guard(|| {
        let e = handle.as_mut().ok_or_else(|| null("handle"))?;
        e.config.seed = seed;
        if trials > 0 {
            e.config.trials = trials;
        }
        e.result = None;
        Ok(())
    })
}

/// Runs the Monte Carlo experiment on `workers` threads (0 for all cores).
///
/// # Safety
/// `handle` must be a live experiment.
#[no_mangle]
pub unsafe extern "C" fn dt_experiment_run(handle: *mut DtExperiment, workers: usize) -> DtStatus {
    guard(|| {
        let e = handle.as_mut().ok_or_else(|| null("handle"))?;
        e.result = Some(run_experiment_with_workers(&e.config, workers)?);
        Ok(())
    })
}

fn result(e: &DtExperiment) -> Result<&ExperimentResult, Failure> {
    e.result
        .as_ref()
        .ok_or_else(|| Failure(DtStatus::InvalidState, "experiment has not been run".into()))
}

fn curve(e: &DtExperiment, test: DtTest) -> Result<&disctest::simulate::ErrorCurve, Failure> {
    let kind = TestKind::from(test);
    result(e)?.curve(kind).ok_or_else(|| {
        Failure(
            DtStatus::InvalidArgument,
            format!("test `{kind}` is not part of this experiment"),
        )
    })
}

/// Estimated error probability and Wilson half-width at test length `n`.
///
/// # Safety
/// `handle` must be a live experiment; out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn dt_experiment_error(
    handle: *const DtExperiment,
    test: DtTest,
    n: usize,
    out_error: *mut f64,
    out_half_width: *mut f64,
) -> DtStatus {
    guard(|| {
        let out_error = out(out_error, "out_error")?;
        let out_half_width = out(out_half_width, "out_half_width")?;
        let e = handle.as_ref().ok_or_else(|| null("handle"))?;
        let p = curve(e, test)?.at(n).ok_or_else(|| {
            Failure(
                DtStatus::InvalidArgument,
                format!("n = {n} is not on the grid"),
            )
        })?;
        *out_error = p.estimate;
        *out_half_width = p.half_width;
        Ok(())
    })
}

/// Fitted error exponent in bits per sample. `out_is_lower_bound` is set to
/// 1 when too few grid points had errors to regress.
///
/// # Safety
/// `handle` must be a live experiment; out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn dt_experiment_exponent(
    handle: *const DtExperiment,
    test: DtTest,
    out_exponent: *mut f64,
    out_is_lower_bound: *mut i32,
) -> DtStatus {
    guard(|| {
        let out_exponent = out(out_exponent, "out_exponent")?;
        let out_is_lower_bound = out(out_is_lower_bound, "out_is_lower_bound")?;
        let e = handle.as_ref().ok_or_else(|| null("handle"))?;
        let c = curve(e, test)?;
        *out_exponent = c.exponent.exponent();
        *out_is_lower_bound = i32::from(matches!(
            c.exponent,
            disctest::simulate::ExponentEstimate::LowerBound { .. }
        ));
        Ok(())
    })
}

unsafe fn copy_text(
    text: &str,
    buf: *mut c_char,
    cap: usize,
    out_len: *mut usize,
) -> Result<(), Failure> {
    *out(out_len, "out_len")? = text.len() + 1;
    if cap < text.len() + 1 {
        return Err(Failure(
            DtStatus::BufferTooSmall,
            format!("need {} bytes, got {cap}", text.len() + 1),
        ));
    }
    if buf.is_null() {
        return Err(null("buf"));
    }
    ptr::copy_nonoverlapping(text.as_ptr(), buf.cast(), text.len());
    *buf.add(text.len()) = 0;
    Ok(())
}

/// Writes errors.csv (`which` = 0) or exponents.csv (`which` = 1) into `buf`
/// as a NUL-terminated string. `out_len` always receives the required size
/// including the terminator, so a call with `cap` 0 queries it.
///
/// # Safety
/// `handle` must be a live experiment; `buf` must have `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn dt_experiment_csv(
    handle: *const DtExperiment,
    which: i32,
    buf: *mut c_char,
    cap: usize,
    out_len: *mut usize,
) -> DtStatus {
    guard(|| {
        let e = handle.as_ref().ok_or_else(|| null("handle"))?;
        let r = result(e)?;
        let text = match which {
            0 => errors_csv(r),
            1 => exponents_csv(r),
            other => {
                return Err(Failure(
                    DtStatus::InvalidArgument,
                    format!("unknown csv selector {other}"),
                ))
            }
        };
        copy_text(&text, buf, cap, out_len)
    })
}

/// # Safety
/// `handle` must be null or a live experiment, and not be used again.
#[no_mangle]
pub unsafe extern "C" fn dt_experiment_free(handle: *mut DtExperiment) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}
