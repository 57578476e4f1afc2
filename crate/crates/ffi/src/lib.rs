//! C ABI over `entdetect`.
//!
//! Objects are opaque handles created by `ed_*_new`/`ed_*_build` and released
//! with the matching `ed_*_free`. Every fallible call returns an [`EdStatus`];
//! on failure `ed_last_error_message` describes the error for the calling
//! thread. Complex matrices cross the boundary as row-major interleaved
//! `[re, im]` doubles.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use entdetect::criteria::{
    joint_purity_criterion, joint_purity_free_criterion, loo_criterion, npt_criterion,
    povm_correlation_criterion, rescaled_joint_criterion, CriterionId, CriterionReport,
    RescaledVariant,
};
use entdetect::basis::gell_mann_basis;
use entdetect::estimate::{estimate_ratios, PovmParams, RatioOptions};
use entdetect::linalg::{CMatrix, DensityMatrix, HermitianOp, C64};
use entdetect::nalgebra::DMatrix;
use entdetect::povm::{build_povm, feasible_x_range, max_feasible_x, NmPovm, NmPovmSpec};
use entdetect::sampler::{Chain, SamplerConfig};
use entdetect::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    Positivity = 4,
    Numeric = 5,
    Panic = 6,
}

pub const ED_CRITERION_LOO: u32 = 0;
pub const ED_CRITERION_POVM_CORR: u32 = 1;
pub const ED_CRITERION_JOINT_PURITY: u32 = 2;
pub const ED_CRITERION_JOINT_PURITY_FREE: u32 = 3;
pub const ED_CRITERION_RESCALED: u32 = 4;
pub const ED_CRITERION_NPT: u32 = 5;

/// An (N,M)-POVM.
pub struct EdPovm(NmPovm);

/// A bipartite density matrix.
pub struct EdState(DensityMatrix);

/// An unbounded hit-and-run chain.
pub struct EdSampler(Chain);

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EdReport {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub detected: bool,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EdRatio {
    pub ratio: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub n_detected: u64,
}

/// `(N, M, x)` of one side's POVM.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdPovmParams {
    pub n: u32,
    pub m: u32,
    pub x: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("NUL bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> EdStatus {
    match err {
        Error::DimensionMismatch { .. } | Error::NotSquare { .. } | Error::InvalidDimension(_) => {
            EdStatus::Dimension
        }
        Error::PositivityViolation { .. } | Error::NotInterior { .. } => EdStatus::Positivity,
        e if e.is_numeric() => EdStatus::Numeric,
        _ => EdStatus::InvalidArgument,
    }
}

struct Failure(EdStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(EdStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(EdStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> EdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EdStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            EdStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn read_matrix(entries: *const f64, dim: usize) -> Result<CMatrix, Failure> {
    if entries.is_null() {
        return Err(null("entries"));
    }
    let s = std::slice::from_raw_parts(entries, 2 * dim * dim);
    Ok(CMatrix::from_fn(dim, dim, |r, c| {
        let k = 2 * (r * dim + c);
        C64::new(s[k], s[k + 1])
    }))
}

unsafe fn write_matrix(m: &CMatrix, dst: *mut f64) -> Result<(), Failure> {
    if dst.is_null() {
        return Err(null("output buffer"));
    }
    let n = m.nrows();
    let s = std::slice::from_raw_parts_mut(dst, 2 * n * n);
    for r in 0..n {
        for c in 0..n {
            let z = m[(r, c)];
            s[2 * (r * n + c)] = z.re;
            s[2 * (r * n + c) + 1] = z.im;
        }
    }
    Ok(())
}

fn criterion(id: u32) -> Result<CriterionId, Failure> {
    Ok(match id {
        ED_CRITERION_LOO => CriterionId::Loo,
        ED_CRITERION_POVM_CORR => CriterionId::PovmCorr,
        ED_CRITERION_JOINT_PURITY => CriterionId::JointPurity,
        ED_CRITERION_JOINT_PURITY_FREE => CriterionId::JointPurityFree,
        ED_CRITERION_RESCALED => CriterionId::Rescaled,
        ED_CRITERION_NPT => CriterionId::Npt,
        other => return Err(invalid(format!("unknown criterion {other}"))),
    })
}

unsafe fn povm_params(p: *const EdPovmParams) -> Option<PovmParams> {
    p.as_ref().map(|p| PovmParams {
        n: p.n as usize,
        m: p.m as usize,
        x: p.x,
    })
}

fn write_report(r: CriterionReport, dst: &mut EdReport) {
    *dst = EdReport {
        lhs: r.lhs,
        rhs: r.rhs,
        margin: r.margin,
        detected: r.detected,
    };
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ed_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds the canonical `(N, M, x)` POVM on `C^d`. `o_prime` is either null
/// or a row-major orthogonal `(d²-1) × (d²-1)` matrix.
///
/// # Safety
/// `o_prime` must be null or point to `(d²-1)²` doubles; `out` must be valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn ed_povm_build(
    d: u32,
    n: u32,
    m: u32,
    x: f64,
    o_prime: *const f64,
    out_povm: *mut *mut EdPovm,
) -> EdStatus {
    guard(|| {
        let dst = out(out_povm, "out_povm")?;
        let spec = NmPovmSpec::new(d as usize, n as usize, m as usize, x);
        let o = if o_prime.is_null() {
            None
        } else {
            let k = (d as usize * d as usize).saturating_sub(1);
            let s = std::slice::from_raw_parts(o_prime, k * k);
            Some(DMatrix::from_row_slice(k, k, s))
        };
        let povm = build_povm(&spec, o.as_ref())?;
        *dst = Box::into_raw(Box::new(EdPovm(povm)));
        Ok(())
    })
}

/// # Safety
/// `povm` must be null or a handle from [`ed_povm_build`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ed_povm_free(povm: *mut EdPovm) {
    if !povm.is_null() {
        drop(Box::from_raw(povm));
    }
}

/// Number of elements `NM`, or 0 for a null handle.
///
/// # Safety
/// `povm` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ed_povm_num_elements(povm: *const EdPovm) -> usize {
    povm.as_ref().map_or(0, |p| p.0.elements().len())
}

/// Copies element `index` (`α M + a`) into `out`, `2 d²` doubles.
///
/// # Safety
/// `povm` must be a live handle and `out` must hold `2 d²` doubles.
#[no_mangle]
pub unsafe extern "C" fn ed_povm_element(povm: *const EdPovm, index: usize, out: *mut f64) -> EdStatus {
    guard(|| {
        let p = deref(povm, "povm")?;
        let e = p
            .0
            .elements()
            .get(index)
            .ok_or_else(|| invalid(format!("element index {index} out of range")))?;
        write_matrix(e.matrix(), out)
    })
}

/// Validates and wraps a `(d_a d_b)²` density matrix.
///
/// # Safety
/// `entries` must point to `2 (d_a d_b)²` doubles; `out_state` must be valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn ed_state_new(
    d_a: u32,
    d_b: u32,
    entries: *const f64,
    out_state: *mut *mut EdState,
) -> EdStatus {
    guard(|| {
        let dst = out(out_state, "out_state")?;
        let dims = (d_a as usize, d_b as usize);
        if dims.0 == 0 || dims.1 == 0 {
            return Err(Failure(EdStatus::Dimension, "dimensions must be positive".into()));
        }
        let m = read_matrix(entries, dims.0 * dims.1)?;
        let rho = DensityMatrix::new(HermitianOp::new(m)?, dims)?;
        *dst = Box::into_raw(Box::new(EdState(rho)));
        Ok(())
    })
}

/// # Safety
/// `state` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ed_state_free(state: *mut EdState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Evaluates one criterion. The POVM handles are required for POVM_CORR,
/// JOINT_PURITY and JOINT_PURITY_FREE; RESCALED takes `x̃` from them when
/// given (SIC, `x̃ = 1`, otherwise); LOO and NPT ignore them.
///
/// # Safety
/// Handles must be null or live; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ed_evaluate(
    state: *const EdState,
    criterion_id: u32,
    povm_a: *const EdPovm,
    povm_b: *const EdPovm,
    out_report: *mut EdReport,
) -> EdStatus {
    guard(|| {
        let rho = &deref(state, "state")?.0;
        let dst = out(out_report, "out_report")?;
        let id = criterion(criterion_id)?;
        let pair = || -> Result<(&NmPovm, &NmPovm), Failure> {
            Ok((&deref(povm_a, "povm_a")?.0, &deref(povm_b, "povm_b")?.0))
        };
        let report = match id {
            CriterionId::Npt => npt_criterion(rho)?,
            CriterionId::Loo => {
                let (da, db) = rho.dims();
                loo_criterion(rho, &gell_mann_basis(da)?, &gell_mann_basis(db)?)?
            }
            CriterionId::PovmCorr => {
                let (a, b) = pair()?;
                povm_correlation_criterion(rho, a, b)?
            }
            CriterionId::JointPurity => {
                let (a, b) = pair()?;
                joint_purity_criterion(rho, a, b)?
            }
            CriterionId::JointPurityFree => {
                let (a, b) = pair()?;
                joint_purity_free_criterion(rho, a, b)?
            }
            CriterionId::Rescaled => {
                let xt = |p: *const EdPovm| p.as_ref().map_or(1.0, |p| p.0.spec().scaled_x());
                rescaled_joint_criterion(rho, xt(povm_a), xt(povm_b), RescaledVariant::PurityFree)?
            }
        };
        write_report(report, dst);
        Ok(())
    })
}

/// Rescaled joint-probability criterion at `(x̃_A, x̃_B)`; the purity-dependent
/// bound when `purity_dependent` is set, the purity-free one otherwise.
///
/// # Safety
/// `state` must be live; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ed_rescaled(
    state: *const EdState,
    x_tilde_a: f64,
    x_tilde_b: f64,
    purity_dependent: bool,
    out_report: *mut EdReport,
) -> EdStatus {
    guard(|| {
        let rho = &deref(state, "state")?.0;
        let dst = out(out_report, "out_report")?;
        let variant = if purity_dependent {
            RescaledVariant::Purity
        } else {
            RescaledVariant::PurityFree
        };
        write_report(rescaled_joint_criterion(rho, x_tilde_a, x_tilde_b, variant)?, dst);
        Ok(())
    })
}

fn sampler_config(d_a: u32, d_b: u32, seed: u64, n: usize, burn_in: i64, thinning: i64) -> SamplerConfig {
    let mut config = SamplerConfig::new((d_a as usize, d_b as usize), seed, n);
    if burn_in >= 0 {
        config.burn_in = burn_in as usize;
    }
    if thinning > 0 {
        config.thinning = thinning as usize;
    }
    config
}

/// Starts a chain at the maximally mixed state. Negative `burn_in` and
/// non-positive `thinning` select the defaults.
///
/// # Safety
/// `out_sampler` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ed_sampler_new(
    d_a: u32,
    d_b: u32,
    seed: u64,
    burn_in: i64,
    thinning: i64,
    out_sampler: *mut *mut EdSampler,
) -> EdStatus {
    guard(|| {
        let dst = out(out_sampler, "out_sampler")?;
        let config = sampler_config(d_a, d_b, seed, usize::MAX, burn_in, thinning);
        *dst = Box::into_raw(Box::new(EdSampler(Chain::new(&config, seed, usize::MAX)?)));
        Ok(())
    })
}

/// Advances the chain and copies the next emitted state into `out`
/// (`2 (d_a d_b)²` doubles).
///
/// # Safety
/// `sampler` must be live; `out` must hold `2 (d_a d_b)²` doubles.
#[no_mangle]
pub unsafe extern "C" fn ed_sampler_next(sampler: *mut EdSampler, out: *mut f64) -> EdStatus {
    guard(|| {
        let s = sampler.as_mut().ok_or_else(|| null("sampler"))?;
        if out.is_null() {
            return Err(null("output buffer"));
        }
        let rho = s.0.next().ok_or_else(|| invalid("sampler exhausted"))??;
        write_matrix(rho.matrix(), out)
    })
}

/// # Safety
/// `sampler` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ed_sampler_free(sampler: *mut EdSampler) {
    if !sampler.is_null() {
        drop(Box::from_raw(sampler));
    }
}

/// Volume ratios of `n_criteria` criteria over one shared sample set, written
/// to `out[0..n_criteria]`. Null POVM parameters select the SIC of that side.
///
/// # Safety
/// `criteria` must hold `n_criteria` ids and `out` room for as many results;
/// parameter pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn ed_estimate_ratios(
    d_a: u32,
    d_b: u32,
    seed: u64,
    n_samples: u64,
    burn_in: i64,
    thinning: i64,
    criteria: *const u32,
    n_criteria: usize,
    povm_a: *const EdPovmParams,
    povm_b: *const EdPovmParams,
    out_ratios: *mut EdRatio,
) -> EdStatus {
    guard(|| {
        if criteria.is_null() {
            return Err(null("criteria"));
        }
        if out_ratios.is_null() {
            return Err(null("out_ratios"));
        }
        let ids = std::slice::from_raw_parts(criteria, n_criteria)
            .iter()
            .map(|&c| criterion(c))
            .collect::<Result<Vec<_>, _>>()?;
        let config = sampler_config(d_a, d_b, seed, n_samples as usize, burn_in, thinning);
        let options = RatioOptions {
            criteria: ids,
            povm_a: povm_params(povm_a),
            povm_b: povm_params(povm_b),
            ..RatioOptions::default()
        };
        let est = estimate_ratios(&config, &options)?;
        let dst = std::slice::from_raw_parts_mut(out_ratios, n_criteria);
        for (d, e) in dst.iter_mut().zip(est) {
            *d = EdRatio {
                ratio: e.ratio,
                std_error: e.std_error,
                n_samples: e.n_samples as u64,
                n_detected: e.n_detected as u64,
            };
        }
        Ok(())
    })
}

/// The admissible interval `(low, high]` of `x`.
///
/// # Safety
/// Output pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ed_feasible_x_range(
    d: u32,
    n: u32,
    m: u32,
    out_low: *mut f64,
    out_high: *mut f64,
) -> EdStatus {
    guard(|| {
        let lo = out(out_low, "out_low")?;
        let hi = out(out_high, "out_high")?;
        if d == 0 || m < 2 {
            return Err(invalid("need d >= 1 and M >= 2"));
        }
        let r = feasible_x_range(d as usize, n as usize, m as usize);
        *lo = r.low;
        *hi = r.high;
        Ok(())
    })
}

/// Largest `x` at which the canonical frame yields a positive POVM.
///
/// # Safety
/// `out_x` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ed_max_feasible_x(d: u32, n: u32, m: u32, out_x: *mut f64) -> EdStatus {
    guard(|| {
        let dst = out(out_x, "out_x")?;
        *dst = max_feasible_x(d as usize, n as usize, m as usize, None)?;
        Ok(())
    })
}
