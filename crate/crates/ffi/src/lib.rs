//! C ABI for qnormal3d.
//!
//! Every fallible function returns a [`QnStatus`] and writes its result
//! through an out pointer. On failure, [`qn_last_error_message`] describes the
//! most recent error on the calling thread. Models are opaque handles created
//! by [`qn_model_new`] and released by [`qn_model_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use qnormal3d::densities::{f_cn, f_n, f_r, pm_kernel};
use qnormal3d::moments::{cov_yz, mixed_moment_h, var_z};
use qnormal3d::polynomials::q_hermite;
use qnormal3d::sampler::{sample_3d, SamplerConfig};
use qnormal3d::{DensityForm, Error, MarginalForm, Model, ModelParams, TruncationConfig};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QnStatus {
    Ok = 0,
    InvalidParameter = 1,
    Domain = 2,
    NonConvergence = 3,
    DegenerateConditioning = 4,
    DegenerateRecurrence = 5,
    InsufficientSamples = 6,
    NullPointer = 7,
    Panic = 8,
}

/// Representation of the three-dimensional density.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QnDensityForm {
    Product = 0,
    Series = 1,
    Closed = 2,
}

/// Representation of the one-dimensional marginal.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QnMarginalForm {
    Squares = 0,
    Rogers = 1,
    EvenSeries = 2,
    Ratio = 3,
}

impl From<QnDensityForm> for DensityForm {
    fn from(f: QnDensityForm) -> Self {
        match f {
            QnDensityForm::Product => DensityForm::Product,
            QnDensityForm::Series => DensityForm::Series,
            QnDensityForm::Closed => DensityForm::Closed,
        }
    }
}

impl From<QnMarginalForm> for MarginalForm {
    fn from(f: QnMarginalForm) -> Self {
        match f {
            QnMarginalForm::Squares => MarginalForm::Squares,
            QnMarginalForm::Rogers => MarginalForm::Rogers,
            QnMarginalForm::EvenSeries => MarginalForm::EvenSeries,
            QnMarginalForm::Ratio => MarginalForm::Ratio,
        }
    }
}

/// Opaque model handle.
pub struct QnModel {
    model: Model,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg).unwrap_or_else(|_| CString::from(c"error message contained a NUL byte"));
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> QnStatus {
    match e {
        Error::InvalidParameter { .. } => QnStatus::InvalidParameter,
        Error::Domain { .. } => QnStatus::Domain,
        Error::NonConvergence { .. } => QnStatus::NonConvergence,
        Error::DegenerateConditioning { .. } => QnStatus::DegenerateConditioning,
        Error::DegenerateRecurrence { .. } => QnStatus::DegenerateRecurrence,
        Error::InsufficientSamples { .. } => QnStatus::InsufficientSamples,
    }
}

fn null_buffer() -> QnStatus {
    set_error("output buffer is null".into());
    QnStatus::NullPointer
}

/// Runs `f`, storing its value through `out` and translating errors and panics.
fn guard<T>(out: *mut T, f: impl FnOnce() -> Result<T, Error>) -> QnStatus {
    if out.is_null() {
        set_error("output pointer is null".into());
        return QnStatus::NullPointer;
    }
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(v)) => {
            // SAFETY: checked non-null; the caller guarantees it is valid and aligned.
            unsafe { out.write(v) };
            QnStatus::Ok
        }
        Ok(Err(e)) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            QnStatus::Panic
        }
    }
}

fn with_model<T>(model: *const QnModel, out: *mut T, f: impl FnOnce(&Model) -> Result<T, Error>) -> QnStatus {
    // SAFETY: the caller passes null or a handle from `qn_model_new`.
    match unsafe { model.as_ref() } {
        Some(m) => guard(out, || f(&m.model)),
        None => {
            set_error("model handle is null".into());
            QnStatus::NullPointer
        }
    }
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qn_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => c"unknown",
    };
    VERSION.as_ptr()
}

/// Creates a model with default truncation settings.
///
/// # Safety
/// `out` must be null or valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn qn_model_new(rho12: f64, rho13: f64, rho23: f64, q: f64, out: *mut *mut QnModel) -> QnStatus {
    guard(out, || {
        let p = ModelParams::new(rho12, rho13, rho23, q)?;
        let model = Model::new(p, &TruncationConfig::default())?;
        Ok(Box::into_raw(Box::new(QnModel { model })))
    })
}

/// Releases a model; null is ignored.
///
/// # Safety
/// `model` must be null or a handle from [`qn_model_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qn_model_free(model: *mut QnModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Half-width L of the support [-L, L].
///
/// # Safety
/// `model` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn qn_model_half_width(model: *const QnModel, out: *mut f64) -> QnStatus {
    with_model(model, out, |m| Ok(m.half_width()))
}

/// Joint density of (X, Y, Z).
///
/// # Safety
/// `model` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn qn_model_f3d(
    model: *const QnModel,
    x: f64,
    y: f64,
    z: f64,
    form: QnDensityForm,
    out: *mut f64,
) -> QnStatus {
    with_model(model, out, |m| m.f_3d(x, y, z, form.into()))
}

/// Joint density of (Y, Z).
///
/// # Safety
/// `model` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn qn_model_fyz(model: *const QnModel, y: f64, z: f64, out: *mut f64) -> QnStatus {
    with_model(model, out, |m| m.f_yz(y, z))
}

/// Marginal density of Z.
///
/// # Safety
/// `model` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn qn_model_fz(model: *const QnModel, z: f64, form: QnMarginalForm, out: *mut f64) -> QnStatus {
    with_model(model, out, |m| m.f_z(z, form.into()))
}

/// Density of X given Y = y, Z = z.
///
/// # Safety
/// `model` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn qn_model_fx_given_yz(
    model: *const QnModel,
    x: f64,
    y: f64,
    z: f64,
    out: *mut f64,
) -> QnStatus {
    with_model(model, out, |m| m.f_x_given_yz(x, y, z))
}

/// Density of (Y, Z) given X = x.
///
/// # Safety
/// `model` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn qn_model_fyz_given_x(
    model: *const QnModel,
    y: f64,
    z: f64,
    x: f64,
    out: *mut f64,
) -> QnStatus {
    with_model(model, out, |m| m.f_yz_given_x(y, z, x))
}

/// Covariance of Y and Z.
///
/// # Safety
/// `model` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn qn_model_cov_yz(model: *const QnModel, out: *mut f64) -> QnStatus {
    with_model(model, out, |m| cov_yz(m.params()))
}

/// E H_m(Y) H_n(Z).
///
/// # Safety
/// `model` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn qn_model_mixed_moment(model: *const QnModel, m: u32, n: u32, out: *mut f64) -> QnStatus {
    with_model(model, out, |md| mixed_moment_h(m, n, md.params(), None, md.cfg()))
}

/// Draws `n` points by Gibbs sampling with default burn-in, thinning and
/// grid, writing x, y, z triples to `out`, which must hold `3 n` values.
///
/// # Safety
/// `model` must be null or a live handle; `out` must be null or valid for
/// `3 n` writes.
#[no_mangle]
pub unsafe extern "C" fn qn_model_sample(model: *const QnModel, seed: u64, n: usize, out: *mut f64) -> QnStatus {
    if out.is_null() {
        return null_buffer();
    }
    let mut done = ();
    with_model(model, &mut done, |m| {
        let draws = sample_3d(m.params(), &SamplerConfig::new(seed, n)?)?;
        // SAFETY: the caller guarantees room for 3 n values.
        let buf = std::slice::from_raw_parts_mut(out, 3 * n);
        for (dst, v) in buf.chunks_exact_mut(3).zip(&draws) {
            dst.copy_from_slice(v);
        }
        Ok(())
    })
}

/// q-Normal density f_N(x|q).
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn qn_f_n(x: f64, q: f64, out: *mut f64) -> QnStatus {
    guard(out, || f_n(x, q, &TruncationConfig::default()))
}

/// Conditional q-Normal density f_CN(x|y,rho,q).
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn qn_f_cn(x: f64, y: f64, rho: f64, q: f64, out: *mut f64) -> QnStatus {
    guard(out, || f_cn(x, y, rho, q, &TruncationConfig::default()))
}

/// Rogers density f_R(x|beta,q).
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn qn_f_r(x: f64, beta: f64, q: f64, out: *mut f64) -> QnStatus {
    guard(out, || f_r(x, beta, q, &TruncationConfig::default()))
}

/// Poisson–Mehler kernel as an infinite product.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn qn_pm_kernel(x: f64, y: f64, rho: f64, q: f64, out: *mut f64) -> QnStatus {
    guard(out, || {
        pm_kernel(x, y, rho, q, &TruncationConfig::default(), DensityForm::Product)
    })
}

/// Variance of the Z marginal for product correlation r.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn qn_var_z(r: f64, q: f64, out: *mut f64) -> QnStatus {
    guard(out, || var_z(r, q))
}

/// Writes H_0(x|q), ..., H_n(x|q) to `out`, which must hold `n + 1` values.
///
/// # Safety
/// `out` must be null or valid for `n + 1` writes.
#[no_mangle]
pub unsafe extern "C" fn qn_q_hermite(n: u32, x: f64, q: f64, out: *mut f64) -> QnStatus {
    if out.is_null() {
        return null_buffer();
    }
    let mut done = ();
    guard(&mut done, || {
        let seq = q_hermite(n, x, q);
        // SAFETY: the caller guarantees room for n + 1 values.
        std::slice::from_raw_parts_mut(out, n as usize + 1).copy_from_slice(seq.values());
        Ok(())
    })
}
