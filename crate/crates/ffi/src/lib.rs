//! C ABI for `mplab`.
//!
//! Spaces and mechanisms are opaque heap handles released with their `_free`
//! functions. Every fallible call returns an [`MplabStatus`]; on failure the
//! message is kept per thread and can be copied out with
//! [`mplab_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use mplab::gallery::{fg_ultrametric_cube, UltrametricProfile};
use mplab::mechanism::{self, Mechanism};
use mplab::metric::{DistanceMatrix, FiniteBimetricSpace, Label, PointId};
use mplab::{scales, Error};

/// Opaque finite bimetric space.
pub struct MplabSpace(FiniteBimetricSpace);

/// Opaque mechanism bound to the space it was built on.
pub struct MplabMechanism(Mechanism);

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MplabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Structural = 3,
    InvalidSpace = 4,
    CapExceeded = 5,
    NotUltrametric = 6,
    NotSingleMetric = 7,
    Io = 8,
    Internal = 9,
    Panic = 10,
    BufferTooSmall = 11,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> MplabStatus {
    match err {
        Error::Structural(_) | Error::Json(_) | Error::Csv(_) => MplabStatus::Structural,
        Error::Domain(_) => MplabStatus::InvalidArgument,
        Error::Invalid(_) => MplabStatus::InvalidSpace,
        Error::CapExceeded { .. } | Error::ScaleCapExceeded { .. } | Error::SizeCap { .. } => {
            MplabStatus::CapExceeded
        }
        Error::NotUltrametric => MplabStatus::NotUltrametric,
        Error::NotSingleMetric => MplabStatus::NotSingleMetric,
        Error::Io(_) => MplabStatus::Io,
        Error::AtAlpha { source, .. } => status_of(source),
        _ => MplabStatus::Internal,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (MplabStatus, String)>) -> MplabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MplabStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside mplab".into());
            MplabStatus::Panic
        }
    }
}

fn lib<T>(r: mplab::Result<T>) -> Result<T, (MplabStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (MplabStatus, String) {
    (MplabStatus::NullPointer, format!("{what} is null"))
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (MplabStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(p: *mut T, v: T, what: &str) -> Result<(), (MplabStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(v);
    Ok(())
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (MplabStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| (MplabStatus::InvalidArgument, format!("{what} is not UTF-8: {e}")))
}

fn check_point(space: &FiniteBimetricSpace, x: usize) -> Result<PointId, (MplabStatus, String)> {
    lib(space.check_point(PointId(x)))?;
    Ok(PointId(x))
}

/// Copies the calling thread's last error message (NUL-terminated, truncated
/// to `cap - 1` bytes) into `buf`. Returns the full message length.
///
/// # Safety
/// `buf` must be null or point to at least `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn mplab_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

fn finish_space(
    space: mplab::Result<FiniteBimetricSpace>,
    out: *mut *mut MplabSpace,
) -> Result<(), (MplabStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    let space = lib(space)?;
    let report = space.validate();
    if !report.is_clean() {
        return Err((MplabStatus::InvalidSpace, Error::Invalid(Box::new(report)).to_string()));
    }
    unsafe { out.write(Box::into_raw(Box::new(MplabSpace(space)))) };
    Ok(())
}

/// Parses and validates a space from its JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mplab_space_from_json(json: *const c_char, out: *mut *mut MplabSpace) -> MplabStatus {
    guard(|| {
        let text = c_str(json, "json")?;
        finish_space(FiniteBimetricSpace::from_json_str(text), out)
    })
}

/// Reads and validates a space JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mplab_space_read_json(path: *const c_char, out: *mut *mut MplabSpace) -> MplabStatus {
    guard(|| {
        let path = c_str(path, "path")?;
        finish_space(FiniteBimetricSpace::read_json(path), out)
    })
}

/// Builds a space from row-major `n x n` matrices. `rho2` may be null, in
/// which case both metrics are `rho1`.
///
/// # Safety
/// `rho1` (and `rho2` if non-null) must point to `n * n` doubles.
#[no_mangle]
pub unsafe extern "C" fn mplab_space_from_matrices(
    n: usize,
    rho1: *const f64,
    rho2: *const f64,
    ultrametric2: bool,
    out: *mut *mut MplabSpace,
) -> MplabStatus {
    guard(|| {
        if rho1.is_null() {
            return Err(null("rho1"));
        }
        let len = n
            .checked_mul(n)
            .ok_or((MplabStatus::InvalidArgument, "n * n overflows".to_string()))?;
        let matrix = |p: *const f64| {
            let flat = std::slice::from_raw_parts(p, len);
            DistanceMatrix::from_rows(flat.chunks(n.max(1)).map(<[f64]>::to_vec).collect())
        };
        let r1 = lib(matrix(rho1))?;
        let r2 = if rho2.is_null() { None } else { Some(lib(matrix(rho2))?) };
        let labels = (0..n).map(|i| Label::Name(i.to_string())).collect();
        finish_space(FiniteBimetricSpace::new(labels, r1, r2, ultrametric2), out)
    })
}

/// The binary-string Baire cube of depth `depth` with `f = g = r^(-k)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mplab_space_gallery_baire(r: f64, depth: usize, out: *mut *mut MplabSpace) -> MplabStatus {
    guard(|| finish_space(UltrametricProfile::baire(r, depth).and_then(|p| fg_ultrametric_cube(&p)), out))
}

/// # Safety
/// `space` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mplab_space_free(space: *mut MplabSpace) {
    if !space.is_null() {
        drop(Box::from_raw(space));
    }
}

/// Number of points, or 0 for a null handle.
///
/// # Safety
/// `space` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mplab_space_len(space: *const MplabSpace) -> usize {
    space.as_ref().map_or(0, |s| s.0.len())
}

#[derive(Clone, Copy)]
enum Scale {
    Entropic,
    Diametric,
    Doubling,
    Outer,
}

unsafe fn scale(space: *const MplabSpace, alpha: f64, which: Scale, out: *mut f64) -> MplabStatus {
    guard(|| {
        let z = &as_ref(space, "space")?.0;
        let v = match which {
            Scale::Entropic => lib(scales::entropic_scale(z, alpha))?.value,
            Scale::Diametric => lib(scales::diametric_scale(z, alpha))?.value,
            Scale::Doubling => lib(scales::doubling_scale(z, alpha))?.value,
            Scale::Outer => lib(scales::outer_scale(z, alpha))?.value,
        };
        write_out(out, v, "out")
    })
}

/// # Safety
/// `space` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mplab_entropic_scale(space: *const MplabSpace, alpha: f64, out: *mut f64) -> MplabStatus {
    scale(space, alpha, Scale::Entropic, out)
}

/// # Safety
/// `space` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mplab_diametric_scale(space: *const MplabSpace, alpha: f64, out: *mut f64) -> MplabStatus {
    scale(space, alpha, Scale::Diametric, out)
}

/// Single-metric spaces only.
///
/// # Safety
/// `space` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mplab_doubling_scale(space: *const MplabSpace, alpha: f64, out: *mut f64) -> MplabStatus {
    scale(space, alpha, Scale::Doubling, out)
}

/// Single-metric spaces only.
///
/// # Safety
/// `space` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mplab_outer_scale(space: *const MplabSpace, alpha: f64, out: *mut f64) -> MplabStatus {
    scale(space, alpha, Scale::Outer, out)
}

fn resolution(s: f64) -> Option<f64> {
    (!s.is_nan()).then_some(s)
}

unsafe fn finish_mech(m: mplab::Result<Mechanism>, out: *mut *mut MplabMechanism) -> Result<(), (MplabStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    let m = lib(m)?;
    out.write(Box::into_raw(Box::new(MplabMechanism(m))));
    Ok(())
}

/// Exponential mechanism; pass NaN for `net_s` to use the default resolution.
///
/// # Safety
/// `space` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mplab_mechanism_exponential(
    space: *const MplabSpace,
    alpha: f64,
    net_s: f64,
    out: *mut *mut MplabMechanism,
) -> MplabStatus {
    guard(|| {
        let z = &as_ref(space, "space")?.0;
        finish_mech(mechanism::build_exponential(z, alpha, resolution(net_s)), out)
    })
}

/// Relaxed mechanism for ultrametric `rho2`; NaN `relax_s` selects the default.
///
/// # Safety
/// `space` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mplab_mechanism_ultrametric_relaxed(
    space: *const MplabSpace,
    alpha: f64,
    relax_s: f64,
    out: *mut *mut MplabMechanism,
) -> MplabStatus {
    guard(|| {
        let z = &as_ref(space, "space")?.0;
        finish_mech(mechanism::build_ultrametric_relaxed(z, alpha, resolution(relax_s)), out)
    })
}

/// # Safety
/// `space` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mplab_mechanism_constant(
    space: *const MplabSpace,
    y0: usize,
    out: *mut *mut MplabMechanism,
) -> MplabStatus {
    guard(|| {
        let z = &as_ref(space, "space")?.0;
        finish_mech(mechanism::build_constant(z, PointId(y0)), out)
    })
}

/// # Safety
/// `mech` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mplab_mechanism_free(mech: *mut MplabMechanism) {
    if !mech.is_null() {
        drop(Box::from_raw(mech));
    }
}

/// Size of the output support, or 0 for a null handle.
///
/// # Safety
/// `mech` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mplab_mechanism_net_len(mech: *const MplabMechanism) -> usize {
    mech.as_ref().map_or(0, |m| m.0.net().len())
}

fn check_input(m: &Mechanism, x: usize) -> Result<PointId, (MplabStatus, String)> {
    if x >= m.inputs() {
        return Err((MplabStatus::InvalidArgument, format!("input {x} out of range ({})", m.inputs())));
    }
    Ok(PointId(x))
}

/// Writes the output distribution of input `x`: point ids into `ids` and
/// probabilities into `probs`, both of capacity `cap >= net_len`.
///
/// # Safety
/// `ids` and `probs` must point to `cap` writable elements.
#[no_mangle]
pub unsafe extern "C" fn mplab_mechanism_distribution(
    mech: *const MplabMechanism,
    x: usize,
    ids: *mut usize,
    probs: *mut f64,
    cap: usize,
) -> MplabStatus {
    guard(|| {
        let m = &as_ref(mech, "mechanism")?.0;
        let x = check_input(m, x)?;
        if ids.is_null() || probs.is_null() {
            return Err(null("output buffer"));
        }
        let dist = m.output_distribution(x);
        if cap < dist.support.len() {
            return Err((
                MplabStatus::BufferTooSmall,
                format!("need {} slots, got {cap}", dist.support.len()),
            ));
        }
        for (i, (y, p)) in dist.support.iter().enumerate() {
            ids.add(i).write(y.0);
            probs.add(i).write(*p);
        }
        Ok(())
    })
}

/// One draw from the output distribution of `x` under `seed`.
///
/// # Safety
/// `mech` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mplab_mechanism_sample(
    mech: *const MplabMechanism,
    x: usize,
    seed: u64,
    out: *mut usize,
) -> MplabStatus {
    guard(|| {
        let m = &as_ref(mech, "mechanism")?.0;
        let x = check_input(m, x)?;
        write_out(out, m.sample(x, seed).0, "out")
    })
}

/// Exhaustive privacy audit at the mechanism's own alpha.
///
/// # Safety
/// Handles must be live; `max_slope` and `pass` writable.
#[no_mangle]
pub unsafe extern "C" fn mplab_audit(
    mech: *const MplabMechanism,
    space: *const MplabSpace,
    max_slope: *mut f64,
    pass: *mut bool,
) -> MplabStatus {
    guard(|| {
        let m = &as_ref(mech, "mechanism")?.0;
        let z = &as_ref(space, "space")?.0;
        if max_slope.is_null() || pass.is_null() {
            return Err(null("output"));
        }
        let a = lib(mechanism::audit_privacy(m, z))?;
        max_slope.write(a.max_slope);
        pass.write(a.pass);
        Ok(())
    })
}

/// Exact worst-case expected error `sup_x E rho2(M(x), x)`.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mplab_exact_accuracy(
    mech: *const MplabMechanism,
    space: *const MplabSpace,
    out: *mut f64,
) -> MplabStatus {
    guard(|| {
        let m = &as_ref(mech, "mechanism")?.0;
        let z = &as_ref(space, "space")?.0;
        check_sizes(m, z)?;
        write_out(out, mechanism::exact_accuracy(m, z).sup_error, "out")
    })
}

fn check_sizes(m: &Mechanism, z: &FiniteBimetricSpace) -> Result<(), (MplabStatus, String)> {
    if m.inputs() != z.len() {
        return Err((
            MplabStatus::InvalidArgument,
            format!("mechanism has {} inputs, space has {} points", m.inputs(), z.len()),
        ));
    }
    Ok(())
}

/// Monte-Carlo estimate of the worst per-input mean error; `stderr` is NaN
/// when `trials == 1`.
///
/// # Safety
/// Handles must be live; `mean` and `stderr` writable.
#[no_mangle]
pub unsafe extern "C" fn mplab_accuracy_mc(
    mech: *const MplabMechanism,
    space: *const MplabSpace,
    trials: u64,
    seed: u64,
    mean: *mut f64,
    stderr: *mut f64,
) -> MplabStatus {
    guard(|| {
        let m = &as_ref(mech, "mechanism")?.0;
        let z = &as_ref(space, "space")?.0;
        check_sizes(m, z)?;
        if mean.is_null() || stderr.is_null() {
            return Err(null("output"));
        }
        let acc = lib(mechanism::accuracy_mc(m, z, trials, seed))?;
        let mc = acc.mc.expect("monte carlo ran");
        mean.write(mc.sup_mean);
        stderr.write(mc.sup_stderr.unwrap_or(f64::NAN));
        Ok(())
    })
}

/// Checks a point id against a space.
///
/// # Safety
/// `space` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mplab_space_check_point(space: *const MplabSpace, x: usize) -> MplabStatus {
    guard(|| {
        let z = &as_ref(space, "space")?.0;
        check_point(z, x).map(|_| ())
    })
}
