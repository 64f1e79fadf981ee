//! C ABI over `hom-metrology`.
//!
//! States are opaque handles created by one of the `hom_state_*`
//! constructors and released with [`hom_state_free`]. Every fallible call
//! returns a [`HomStatus`]; on failure the message is retrievable with
//! [`hom_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use hom_metrology::estimation::{crb, mc_crb_study};
use hom_metrology::grid::UniformGrid;
use hom_metrology::metrology::{
    coincidence_probability, fisher_information, max_fisher, ratio_curve, Probe, VisibilityModel,
};
use hom_metrology::spectra::{
    cat_from_channels, make_state_default, moments, SpectralAmplitude, StateDescriptor,
};
use hom_metrology::wigner::CutModel;
use hom_metrology::Error;
use num_complex::Complex64;

/// Status code returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HomStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    Grid = 3,
    NotNormalized = 4,
    Unsupported = 5,
    OutOfRange = 6,
    Degenerate = 7,
    ZeroInformation = 8,
    NonConvergence = 9,
    Parse = 10,
    Io = 11,
    Panic = 12,
}

impl From<&Error> for HomStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidParameter(_) => HomStatus::InvalidParameter,
            Error::Grid(_) => HomStatus::Grid,
            Error::NotNormalized { .. } => HomStatus::NotNormalized,
            Error::Unsupported(_) => HomStatus::Unsupported,
            Error::OutOfRange { .. } => HomStatus::OutOfRange,
            Error::Degenerate(_) => HomStatus::Degenerate,
            Error::ZeroInformation(_) => HomStatus::ZeroInformation,
            Error::NonConvergence(_) => HomStatus::NonConvergence,
            Error::Parse(_) | Error::Json(_) | Error::Csv(_) => HomStatus::Parse,
            Error::Io(_) => HomStatus::Io,
        }
    }
}

/// Opaque state handle.
pub struct HomState {
    probe: Probe,
    amplitude: Option<SpectralAmplitude>,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct HomMoments {
    pub mean: f64,
    pub variance: f64,
    pub temporal_variance: f64,
    pub phase_space_area: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct HomCutPoint {
    pub w: f64,
    pub w1: f64,
    pub w2: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct HomFisherMax {
    pub tau_m: f64,
    pub f_tilde: f64,
    /// Non-zero when the value is the unit-visibility limit at τ = 0.
    pub limit: i32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct HomCrb {
    pub crb: f64,
    pub quantum_bound: f64,
    pub fisher: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct HomEstimate {
    pub tau_hat: f64,
    pub bias: f64,
    pub empirical_std: f64,
    pub crb: f64,
    pub ratio_to_crb: f64,
    pub clipped: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Run `f`, translating errors and panics into a status and a stored message.
fn guard(f: impl FnOnce() -> Result<(), (HomStatus, String)>) -> HomStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            HomStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            HomStatus::Panic
        }
    }
}

fn lift<T>(r: hom_metrology::Result<T>) -> Result<T, (HomStatus, String)> {
    r.map_err(|e| (HomStatus::from(&e), e.to_string()))
}

fn null(what: &str) -> (HomStatus, String) {
    (HomStatus::NullPointer, format!("{what} is NULL"))
}

unsafe fn state_ref<'a>(s: *const HomState) -> Result<&'a HomState, (HomStatus, String)> {
    // SAFETY: caller passes a handle from a constructor that has not been freed.
    unsafe { s.as_ref() }.ok_or_else(|| null("state"))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), (HomStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    // SAFETY: non-null and, per the caller contract, valid for writes.
    unsafe { out.write(value) };
    Ok(())
}

fn vis(v: f64) -> Result<VisibilityModel, (HomStatus, String)> {
    lift(VisibilityModel::new(v))
}

unsafe fn construct(
    out: *mut *mut HomState,
    build: impl FnOnce() -> hom_metrology::Result<HomState>,
) -> HomStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output handle"));
        }
        let state = lift(build())?;
        // SAFETY: checked non-null above.
        unsafe { *out = Box::into_raw(Box::new(state)) };
        Ok(())
    })
}

fn from_descriptor(desc: StateDescriptor) -> hom_metrology::Result<HomState> {
    let amp = make_state_default(&desc)?;
    let probe = if desc.analytic_variance().is_some() {
        Probe::analytic(&desc)?
    } else {
        Probe::numeric(&amp, desc.label())?
    };
    Ok(HomState {
        probe,
        amplitude: Some(amp),
    })
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hom_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length excluding the NUL,
/// or 0 when there is no pending error.
///
/// # Safety
/// `buf` must be NULL or valid for `len` bytes of writes.
#[no_mangle]
pub unsafe extern "C" fn hom_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            // SAFETY: buf valid for len bytes; n + 1 ≤ len.
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// Gaussian state with intensity standard deviation `sigma` (rad/ps).
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn hom_state_gauss(sigma: f64, out: *mut *mut HomState) -> HomStatus {
    unsafe { construct(out, || from_descriptor(StateDescriptor::Gauss { sigma })) }
}

/// Flat spectrum of full width `delta_omega` (rad/ps).
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn hom_state_rect(delta_omega: f64, out: *mut *mut HomState) -> HomStatus {
    unsafe {
        construct(out, || {
            from_descriptor(StateDescriptor::Rect { delta_omega })
        })
    }
}

/// Two flat blocks of width `delta_omega_prime` at `±omega_prime` (rad/ps).
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn hom_state_cat(
    omega_prime: f64,
    delta_omega_prime: f64,
    out: *mut *mut HomState,
) -> HomStatus {
    unsafe {
        construct(out, || {
            from_descriptor(StateDescriptor::Cat {
                omega_prime,
                delta_omega_prime,
            })
        })
    }
}

/// Two-block state from filter channels given in nm.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn hom_state_cat_from_channels(
    lambda_a_nm: f64,
    lambda_b_nm: f64,
    width_nm: f64,
    lambda_ref_nm: f64,
    out: *mut *mut HomState,
) -> HomStatus {
    unsafe {
        construct(out, || {
            from_descriptor(cat_from_channels(
                lambda_a_nm,
                lambda_b_nm,
                width_nm,
                lambda_ref_nm,
            )?)
        })
    }
}

/// Phase-matching state `sinc(a ω² + b ω + c)`.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn hom_state_sinc_pm(
    a: f64,
    b: f64,
    c: f64,
    out: *mut *mut HomState,
) -> HomStatus {
    unsafe { construct(out, || from_descriptor(StateDescriptor::SincPm { a, b, c })) }
}

/// Tabulated amplitude on a uniform grid symmetric about zero; normalized on ingest.
///
/// # Safety
/// `omega`, `re` and `im` must each be valid for `len` reads; `out` for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn hom_state_tabulated(
    omega: *const f64,
    re: *const f64,
    im: *const f64,
    len: usize,
    out: *mut *mut HomState,
) -> HomStatus {
    if omega.is_null() || re.is_null() || im.is_null() {
        set_error("sample arrays must not be NULL".into());
        return HomStatus::NullPointer;
    }
    // SAFETY: non-null, valid for len reads per contract.
    let (omega, re, im) = unsafe {
        (
            std::slice::from_raw_parts(omega, len),
            std::slice::from_raw_parts(re, len),
            std::slice::from_raw_parts(im, len),
        )
    };
    unsafe {
        construct(out, || {
            let grid = UniformGrid::from_points(omega, hom_metrology::io::GRID_SPACING_TOL)?;
            let values = re
                .iter()
                .zip(im)
                .map(|(&r, &i)| Complex64::new(r, i))
                .collect();
            from_descriptor(StateDescriptor::Tabulated { grid, values })
        })
    }
}

/// Reference cut `cos(√(2a) τ)`; has no spectral amplitude.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn hom_state_cosine(a: f64, out: *mut *mut HomState) -> HomStatus {
    unsafe {
        construct(out, || {
            Ok(HomState {
                probe: Probe::cosine(a)?,
                amplitude: None,
            })
        })
    }
}

/// Release a handle. NULL is ignored.
///
/// # Safety
/// `state` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hom_state_free(state: *mut HomState) {
    if !state.is_null() {
        // SAFETY: handle came from Box::into_raw in a constructor.
        drop(unsafe { Box::from_raw(state) });
    }
}

/// Spectral moments of the sampled amplitude.
///
/// # Safety
/// `state` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn hom_state_moments(
    state: *const HomState,
    out: *mut HomMoments,
) -> HomStatus {
    guard(|| {
        let s = unsafe { state_ref(state) }?;
        let amp = s.amplitude.as_ref().ok_or((
            HomStatus::Unsupported,
            "the cosine reference has no spectral amplitude".to_string(),
        ))?;
        let m = lift(moments(amp))?;
        unsafe {
            write_out(
                out,
                HomMoments {
                    mean: m.mean,
                    variance: m.variance,
                    temporal_variance: m.temporal_variance,
                    phase_space_area: m.phase_space_area,
                },
            )
        }
    })
}

/// Quantum Fisher information (ps⁻²) for the correlated configuration.
///
/// # Safety
/// `state` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn hom_state_qfi(state: *const HomState, out: *mut f64) -> HomStatus {
    guard(|| {
        let s = unsafe { state_ref(state) }?;
        unsafe { write_out(out, s.probe.qfi()) }
    })
}

/// Wigner cut and its first two delay derivatives at `tau` (ps).
///
/// # Safety
/// `state` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn hom_cut_eval(
    state: *const HomState,
    tau: f64,
    out: *mut HomCutPoint,
) -> HomStatus {
    guard(|| {
        let s = unsafe { state_ref(state) }?;
        let p = lift(s.probe.eval(tau))?;
        unsafe {
            write_out(
                out,
                HomCutPoint {
                    w: p.w,
                    w1: p.w1,
                    w2: p.w2,
                },
            )
        }
    })
}

/// Coincidence probability at visibility `v` and delay `tau`.
///
/// # Safety
/// `state` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn hom_coincidence_probability(
    state: *const HomState,
    v: f64,
    tau: f64,
    out: *mut f64,
) -> HomStatus {
    guard(|| {
        let s = unsafe { state_ref(state) }?;
        let p = lift(coincidence_probability(&s.probe, &vis(v)?, tau))?;
        unsafe { write_out(out, p) }
    })
}

/// Fisher information (ps⁻²) at visibility `v` and delay `tau`.
///
/// # Safety
/// `state` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn hom_fisher_information(
    state: *const HomState,
    v: f64,
    tau: f64,
    out: *mut f64,
) -> HomStatus {
    guard(|| {
        let s = unsafe { state_ref(state) }?;
        let f = lift(fisher_information(&s.probe, &vis(v)?, tau))?;
        unsafe { write_out(out, f.value) }
    })
}

/// Delay and value of the maximal Fisher information at visibility `v`.
///
/// # Safety
/// `state` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn hom_max_fisher(
    state: *const HomState,
    v: f64,
    out: *mut HomFisherMax,
) -> HomStatus {
    guard(|| {
        let s = unsafe { state_ref(state) }?;
        let m = lift(max_fisher(&s.probe, &vis(v)?))?;
        unsafe {
            write_out(
                out,
                HomFisherMax {
                    tau_m: m.tau_m,
                    f_tilde: m.f_tilde,
                    limit: m.limit as i32,
                },
            )
        }
    })
}

/// `F̃_V / ℱ` for each of the `len` visibilities in `v`, written to `ratios`.
///
/// # Safety
/// `state` must be a live handle; `v` valid for `len` reads and `ratios` for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn hom_ratio_curve(
    state: *const HomState,
    v: *const f64,
    len: usize,
    ratios: *mut f64,
) -> HomStatus {
    guard(|| {
        let s = unsafe { state_ref(state) }?;
        if v.is_null() || ratios.is_null() {
            return Err(null("visibility or ratio array"));
        }
        // SAFETY: non-null, valid for len elements per contract.
        let vs = unsafe { std::slice::from_raw_parts(v, len) };
        let c = lift(ratio_curve(&s.probe, vs))?;
        let out = unsafe { std::slice::from_raw_parts_mut(ratios, len) };
        out.copy_from_slice(&c.ratios);
        Ok(())
    })
}

/// Classical and quantum Cramér-Rao bounds (ps) for `trials` pairs.
///
/// # Safety
/// `state` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn hom_crb(
    state: *const HomState,
    v: f64,
    tau: f64,
    trials: u64,
    out: *mut HomCrb,
) -> HomStatus {
    guard(|| {
        let s = unsafe { state_ref(state) }?;
        let c = lift(crb(&s.probe, &vis(v)?, tau, trials))?;
        unsafe {
            write_out(
                out,
                HomCrb {
                    crb: c.crb,
                    quantum_bound: c.quantum_bound,
                    fisher: c.fisher,
                },
            )
        }
    })
}

/// Seeded Monte Carlo study of the single-delay estimator.
///
/// # Safety
/// `state` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn hom_mc_crb_study(
    state: *const HomState,
    v: f64,
    tau_true: f64,
    trials: u64,
    replicates: u64,
    seed: u64,
    out: *mut HomEstimate,
) -> HomStatus {
    guard(|| {
        let s = unsafe { state_ref(state) }?;
        let r = lift(mc_crb_study(
            &s.probe,
            &vis(v)?,
            tau_true,
            trials,
            replicates as usize,
            seed,
        ))?;
        unsafe {
            write_out(
                out,
                HomEstimate {
                    tau_hat: r.tau_hat,
                    bias: r.bias,
                    empirical_std: r.empirical_std,
                    crb: r.crb,
                    ratio_to_crb: r.ratio_to_crb,
                    clipped: r.clipped as u64,
                },
            )
        }
    })
}
