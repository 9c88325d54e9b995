//! C ABI over `semiglobal`.
//!
//! Operators are opaque heap handles created by `sg_operator_*` and released
//! with [`sg_operator_free`]. Every function returns an [`SgStatus`]; on
//! failure a message is kept per thread and read back with
//! [`sg_last_error_message`]. Output buffers are caller-owned and must hold
//! at least the number of elements stated in each function's docs.

use semiglobal::bvp::{
    burgers_default_guess, solve_burgers, solve_tanh, tanh_front_guess, BurgersProblem, NewtonOptions,
    NewtonReport, TanhProblem,
};
use semiglobal::chebcore::{make_subdomain, Mapping};
use semiglobal::error::Error;
use semiglobal::linalg::c64;
use semiglobal::overlap::{assemble_multi_interval, assemble_pair, GlobalOperator, Method, OverlapSpec};
use semiglobal::stability::{assemble_eigensystem, filter_spurious, solve_base_flow, solve_spectrum, FlowParams};
use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Result code of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidMapping = 3,
    InterfaceMismatch = 4,
    Overlap = 5,
    Singular = 6,
    Eigen = 7,
    NoBracket = 8,
    /// Newton stopped before reaching tolerance; outputs are still written.
    NotConverged = 9,
    BufferTooSmall = 10,
    Internal = 11,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SgMapKind {
    /// `p0 = a`, `p1 = b`.
    Linear = 0,
    /// `p0 = rc`, `p1 = l1`.
    Algebraic = 1,
    /// `p0 = l`, `p1 = b`, `p2 = offset`.
    RationalOffset = 2,
}

/// A coordinate mapping; unused parameters are ignored.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct SgMapping {
    pub kind: SgMapKind,
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SgMethod {
    OnePoint = 0,
    TwoPoint = 1,
    PseudoMulti = 2,
    TaylorMulti = 3,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct SgNewtonReport {
    pub iterations: usize,
    pub converged: bool,
    pub final_residual: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct SgFlowParams {
    pub reynolds: f64,
    pub peclet: f64,
    pub visc_log_ratio: f64,
    pub interface_loc: f64,
    pub interface_width: f64,
    pub k_axial_re: f64,
    pub k_axial_im: f64,
    pub m_azimuthal: i32,
    /// Modes with `|omega|` above this are dropped.
    pub filter_threshold: f64,
}

/// Opaque global derivative operator.
pub struct SgOperator {
    inner: GlobalOperator,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SgStatus {
    match e {
        Error::InvalidArgument(_) | Error::Config(_) | Error::Io(_) => SgStatus::InvalidArgument,
        Error::InvalidMapping(_) => SgStatus::InvalidMapping,
        Error::InterfaceMismatch(_) => SgStatus::InterfaceMismatch,
        Error::Overlap(_) => SgStatus::Overlap,
        Error::Singular(_) => SgStatus::Singular,
        Error::Eigen(_) => SgStatus::Eigen,
        Error::NoBracket { .. } => SgStatus::NoBracket,
    }
}

struct Fail(SgStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(SgStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, recording any error or panic.
fn guard(f: impl FnOnce() -> Result<SgStatus, Fail>) -> SgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err(Fail(s, msg))) => {
            set_error(msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            SgStatus::Internal
        }
    }
}

fn mapping(m: &SgMapping) -> Result<Mapping, Error> {
    match m.kind {
        SgMapKind::Linear => Mapping::linear(m.p0, m.p1),
        SgMapKind::Algebraic => Mapping::algebraic(m.p0, m.p1),
        SgMapKind::RationalOffset => Mapping::rational_offset(m.p0, m.p1, m.p2),
    }
}

unsafe fn op_ref<'a>(op: *const SgOperator) -> Result<&'a GlobalOperator, Fail> {
    op.as_ref().map(|o| &o.inner).ok_or_else(|| null("operator"))
}

unsafe fn out_slice<'a>(ptr: *mut f64, len: usize, need: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if ptr.is_null() {
        return Err(null(what));
    }
    if len < need {
        return Err(Fail(SgStatus::BufferTooSmall, format!("{what} holds {len}, needs {need}")));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, need))
}

unsafe fn in_slice<'a>(ptr: *const f64, len: usize, need: usize, what: &str) -> Result<&'a [f64], Fail> {
    if ptr.is_null() {
        return Err(null(what));
    }
    if len != need {
        return Err(Fail(SgStatus::InvalidArgument, format!("{what} has {len} values, operator has {need}")));
    }
    Ok(std::slice::from_raw_parts(ptr, need))
}

fn publish(out: *mut *mut SgOperator, op: GlobalOperator) -> SgStatus {
    unsafe { *out = Box::into_raw(Box::new(SgOperator { inner: op })) };
    SgStatus::Ok
}

/// Copies the last error on this thread into `buf` as a NUL-terminated
/// string, truncating to `len - 1` bytes. Returns the full message length
/// excluding the terminator, or 0 if there is no error.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes of writes.
#[no_mangle]
pub unsafe extern "C" fn sg_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn sg_status_string(status: SgStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        SgStatus::Ok => b"ok\0",
        SgStatus::NullPointer => b"null pointer\0",
        SgStatus::InvalidArgument => b"invalid argument\0",
        SgStatus::InvalidMapping => b"invalid mapping\0",
        SgStatus::InterfaceMismatch => b"interface mismatch\0",
        SgStatus::Overlap => b"overlap layout\0",
        SgStatus::Singular => b"singular system\0",
        SgStatus::Eigen => b"eigensolver failed\0",
        SgStatus::NoBracket => b"no bracket\0",
        SgStatus::NotConverged => b"not converged\0",
        SgStatus::BufferTooSmall => b"buffer too small\0",
        SgStatus::Internal => b"internal error\0",
    };
    s.as_ptr().cast()
}

/// Operator on one mapped Chebyshev grid of `n_points` nodes.
///
/// # Safety
/// `map` must be null or point to a valid [`SgMapping`]; `out` must be null
/// or valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn sg_operator_single(map: *const SgMapping, n_points: usize, out: *mut *mut SgOperator) -> SgStatus {
    guard(|| {
        let m = map.as_ref().ok_or_else(|| null("map"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let s = make_subdomain(mapping(m)?, n_points, 1)?;
        Ok(publish(out, GlobalOperator::from_subdomain(&s)))
    })
}

/// Fuses two overlapping subdomains. `weight_a` blends rows on shared
/// nodes; `taylor_terms` is used by the Taylor method only.
///
/// # Safety
/// `map_a` and `map_b` must be null or valid; `out` must be null or valid
/// for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn sg_operator_pair(
    method: SgMethod,
    map_a: *const SgMapping,
    n_a: usize,
    map_b: *const SgMapping,
    n_b: usize,
    weight_a: f64,
    taylor_terms: usize,
    out: *mut *mut SgOperator,
) -> SgStatus {
    guard(|| {
        let ma = map_a.as_ref().ok_or_else(|| null("map_a"))?;
        let mb = map_b.as_ref().ok_or_else(|| null("map_b"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let method = match method {
            SgMethod::OnePoint => Method::OnePoint,
            SgMethod::TwoPoint => Method::TwoPoint,
            SgMethod::PseudoMulti => Method::PseudoMulti,
            SgMethod::TaylorMulti => Method::TaylorMulti,
        };
        let order = if method == Method::TaylorMulti { taylor_terms.max(1) } else { 1 };
        let spec = OverlapSpec { weight_a, taylor_terms, ..OverlapSpec::default() };
        let a = make_subdomain(mapping(ma)?, n_a, order)?;
        let b = make_subdomain(mapping(mb)?, n_b, order)?;
        Ok(publish(out, assemble_pair(method, &a, &b, &spec)?))
    })
}

/// Chains `n_sub` linear subintervals of `[a, b]` overlapping by `delta`.
///
/// # Safety
/// `out` must be null or valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn sg_operator_multi_interval(
    a: f64,
    b: f64,
    n_sub: usize,
    nodes_per: usize,
    delta: f64,
    taylor_terms: usize,
    out: *mut *mut SgOperator,
) -> SgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = OverlapSpec { taylor_terms, ..OverlapSpec::default() };
        Ok(publish(out, assemble_multi_interval(a, b, n_sub, nodes_per, delta, &spec)?))
    })
}

/// Releases an operator. Null is ignored.
///
/// # Safety
/// `op` must be null or a handle from `sg_operator_*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sg_operator_free(op: *mut SgOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Number of global nodes, or 0 for a null handle.
///
/// # Safety
/// `op` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sg_operator_len(op: *const SgOperator) -> usize {
    op.as_ref().map_or(0, |o| o.inner.len())
}

/// Writes the sorted physical nodes; `buf` needs `sg_operator_len` entries.
///
/// # Safety
/// `op` must be null or live; `buf` must be null or valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn sg_operator_nodes(op: *const SgOperator, buf: *mut f64, len: usize) -> SgStatus {
    guard(|| {
        let op = op_ref(op)?;
        out_slice(buf, len, op.len(), "buf")?.copy_from_slice(&op.nodes);
        Ok(SgStatus::Ok)
    })
}

/// Writes `D^order` row-major; `buf` needs `n * n` entries.
///
/// # Safety
/// `op` must be null or live; `buf` must be null or valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn sg_operator_derivative(op: *const SgOperator, order: usize, buf: *mut f64, len: usize) -> SgStatus {
    guard(|| {
        let op = op_ref(op)?;
        if order == 0 {
            return Err(Fail(SgStatus::InvalidArgument, "derivative order must be at least 1".into()));
        }
        let n = op.len();
        let dst = out_slice(buf, len, n * n, "buf")?;
        let d = op.derivative_of_order(order);
        for i in 0..n {
            for j in 0..n {
                dst[i * n + j] = d[(i, j)];
            }
        }
        Ok(SgStatus::Ok)
    })
}

/// Applies `D^order` to nodal values `u`, writing to `du`; both hold `n` values.
///
/// # Safety
/// `op` must be null or live; `u` and `du` must be null or valid for `n` elements.
#[no_mangle]
pub unsafe extern "C" fn sg_operator_apply(
    op: *const SgOperator,
    order: usize,
    u: *const f64,
    du: *mut f64,
    n: usize,
) -> SgStatus {
    guard(|| {
        let op = op_ref(op)?;
        if order == 0 {
            return Err(Fail(SgStatus::InvalidArgument, "derivative order must be at least 1".into()));
        }
        let u = in_slice(u, n, op.len(), "u")?;
        let v = semiglobal::linalg::matvec(&op.derivative_of_order(order), u);
        out_slice(du, n, op.len(), "du")?.copy_from_slice(&v);
        Ok(SgStatus::Ok)
    })
}

fn finish(rep: NewtonReport, u: &mut [f64], report: *mut SgNewtonReport) -> SgStatus {
    u.copy_from_slice(&rep.solution);
    if let Some(r) = unsafe { report.as_mut() } {
        *r = SgNewtonReport { iterations: rep.iterations, converged: rep.converged, final_residual: rep.final_residual() };
    }
    if rep.converged {
        SgStatus::Ok
    } else {
        set_error(format!("Newton stopped after {} iterations at residual {:e}", rep.iterations, rep.final_residual()));
        SgStatus::NotConverged
    }
}

/// Solves `nu u'' - u u' = 0` on `[0, 1]` with Robin ends. `guess` may be
/// null for the default guess; otherwise it and `u` hold `n` values.
/// `report` may be null.
///
/// # Safety
/// `op` must be null or live; non-null buffers must be valid for `n` elements;
/// `report` must be null or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn sg_solve_burgers(
    op: *const SgOperator,
    nu: f64,
    alpha_bc: f64,
    kappa: f64,
    guess: *const f64,
    u: *mut f64,
    n: usize,
    report: *mut SgNewtonReport,
) -> SgStatus {
    guard(|| {
        let op = op_ref(op)?;
        let p = BurgersProblem::new(nu, alpha_bc, kappa)?;
        let g = if guess.is_null() { burgers_default_guess(op, &p) } else { in_slice(guess, n, op.len(), "guess")?.to_vec() };
        let out = out_slice(u, n, op.len(), "u")?;
        let rep = solve_burgers(op, &p, &g, &NewtonOptions::default())?;
        Ok(finish(rep, out, report))
    })
}

/// Solves the tanh front problem on `[0, truncation]`. `guess` may be null
/// for a logistic front twice as wide as the exact one.
///
/// # Safety
/// As for [`sg_solve_burgers`].
#[no_mangle]
pub unsafe extern "C" fn sg_solve_tanh(
    op: *const SgOperator,
    theta: f64,
    truncation: f64,
    guess: *const f64,
    u: *mut f64,
    n: usize,
    report: *mut SgNewtonReport,
) -> SgStatus {
    guard(|| {
        let op = op_ref(op)?;
        let p = TanhProblem::new(theta, truncation)?;
        let g = if guess.is_null() { tanh_front_guess(op, &p, 2.0) } else { in_slice(guess, n, op.len(), "guess")?.to_vec() };
        let out = out_slice(u, n, op.len(), "u")?;
        let rep = solve_tanh(op, &p, &g, &NewtonOptions::default())?;
        Ok(finish(rep, out, report))
    })
}

/// Temporal eigenvalues of core-annular pipe flow on `op` (which must span
/// `[0, 1]`), most unstable first. Writes up to `cap` values into `re` and
/// `im` and the total count into `count`; if `cap` is too small the first
/// `cap` are written and `BufferTooSmall` is returned.
///
/// # Safety
/// `op` must be null or live; `params` null or valid; `re` and `im` null or
/// valid for `cap` writes; `count` null or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn sg_stability_spectrum(
    op: *const SgOperator,
    params: *const SgFlowParams,
    re: *mut f64,
    im: *mut f64,
    cap: usize,
    count: *mut usize,
) -> SgStatus {
    guard(|| {
        let op = op_ref(op)?;
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        if re.is_null() || im.is_null() || count.is_null() {
            return Err(null("output"));
        }
        let flow = FlowParams::new(
            p.reynolds,
            p.peclet,
            p.visc_log_ratio,
            p.interface_loc,
            p.interface_width,
            c64::new(p.k_axial_re, p.k_axial_im),
            p.m_azimuthal,
        )?;
        let base = solve_base_flow(op, &flow)?;
        let sys = assemble_eigensystem(op, &base, &flow)?;
        let modes = filter_spurious(solve_spectrum(&sys)?, p.filter_threshold);
        *count = modes.len();
        let k = modes.len().min(cap);
        let (re, im) = (std::slice::from_raw_parts_mut(re, k), std::slice::from_raw_parts_mut(im, k));
        for (i, m) in modes.iter().take(k).enumerate() {
            re[i] = m.omega.re;
            im[i] = m.omega.im;
        }
        if k < modes.len() {
            return Err(Fail(SgStatus::BufferTooSmall, format!("{} modes, room for {cap}", modes.len())));
        }
        Ok(SgStatus::Ok)
    })
}
