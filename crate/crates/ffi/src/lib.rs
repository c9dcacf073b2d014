//! C interface to the reduced integrator. Systems and trajectories are
//! opaque handles; every call returns a [`WongStatus`] and the message of the
//! last failure on the calling thread is available from
//! [`wong_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nalgebra::DVector;
use wong_core::chart_system::{builtin, ChartSystem};
use wong_core::wong::{self, IntegrateOptions, Method, Trajectory, WongState};
use wong_core::WongError;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WongStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnknownSystem = 3,
    DimensionMismatch = 4,
    /// Degenerate orbit, Gribov horizon, solver or step failure.
    NumericalFailure = 5,
    Io = 6,
    Panic = 7,
}

/// Chart system handle.
pub struct WongSystem(ChartSystem);

/// Trajectory handle.
pub struct WongTrajectory(Trajectory);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &WongError) -> WongStatus {
    match e {
        WongError::UnknownSystem(_) => WongStatus::UnknownSystem,
        WongError::DimensionMismatch(_) | WongError::ShapeMismatch(_) => WongStatus::DimensionMismatch,
        WongError::Config(_) => WongStatus::InvalidArgument,
        WongError::Io(_) => WongStatus::Io,
        _ => WongStatus::NumericalFailure,
    }
}

fn guard(f: impl FnOnce() -> Result<(), WongStatus>) -> WongStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WongStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside wong");
            WongStatus::Panic
        }
    }
}

fn fail(e: WongError) -> WongStatus {
    set_error(e.to_string());
    status_of(&e)
}

fn null() -> WongStatus {
    set_error("null pointer argument");
    WongStatus::NullPointer
}

unsafe fn vector(ptr: *const f64, n: usize) -> Result<DVector<f64>, WongStatus> {
    if ptr.is_null() && n > 0 {
        return Err(null());
    }
    Ok(if n == 0 { DVector::zeros(0) } else { DVector::from_column_slice(std::slice::from_raw_parts(ptr, n)) })
}

unsafe fn write(out: *mut f64, v: &DVector<f64>) -> Result<(), WongStatus> {
    if out.is_null() && !v.is_empty() {
        return Err(null());
    }
    if !v.is_empty() {
        ptr::copy_nonoverlapping(v.as_ptr(), out, v.len());
    }
    Ok(())
}

unsafe fn state(sys: &ChartSystem, q: *const f64, v: *const f64, p: *const f64) -> Result<WongState, WongStatus> {
    Ok(WongState::new(vector(q, sys.n_p())?, vector(v, sys.n_p())?, vector(p, sys.n_g())?))
}

unsafe fn system<'a>(h: *const WongSystem) -> Result<&'a ChartSystem, WongStatus> {
    h.as_ref().map(|s| &s.0).ok_or_else(null)
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn wong_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Creates a builtin system by name.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wong_system_new(name: *const c_char, out: *mut *mut WongSystem) -> WongStatus {
    guard(|| {
        if name.is_null() || out.is_null() {
            return Err(null());
        }
        *out = ptr::null_mut();
        let name = CStr::from_ptr(name).to_str().map_err(|_| {
            set_error("system name is not UTF-8");
            WongStatus::InvalidArgument
        })?;
        let sys = builtin(name).map_err(fail)?;
        *out = Box::into_raw(Box::new(WongSystem(sys)));
        Ok(())
    })
}

/// # Safety
/// `sys` must be null or a handle from [`wong_system_new`] not freed before.
#[no_mangle]
pub unsafe extern "C" fn wong_system_free(sys: *mut WongSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Chart dimension `n_p` and group dimension `n_g`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wong_system_dims(sys: *const WongSystem, n_p: *mut usize, n_g: *mut usize) -> WongStatus {
    guard(|| {
        let s = system(sys)?;
        if n_p.is_null() || n_g.is_null() {
            return Err(null());
        }
        *n_p = s.n_p();
        *n_g = s.n_g();
        Ok(())
    })
}

/// Right-hand side of the reduced equations at `(q, v, p)`. `q`, `v`, `dv`
/// hold `n_p` values and `p`, `dp` hold `n_g`.
///
/// # Safety
/// Arrays must have the lengths above.
#[no_mangle]
pub unsafe extern "C" fn wong_rhs(sys: *const WongSystem, q: *const f64, v: *const f64, p: *const f64, dv: *mut f64, dp: *mut f64) -> WongStatus {
    guard(|| {
        let s = system(sys)?;
        let st = state(s, q, v, p)?;
        let (a, b) = wong::wong_rhs(s, &st, &Default::default()).map_err(fail)?;
        write(dv, &a)?;
        write(dp, &b)
    })
}

/// Conserved energy of a state.
///
/// # Safety
/// Arrays as in [`wong_rhs`]; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn wong_energy(sys: *const WongSystem, q: *const f64, v: *const f64, p: *const f64, out: *mut f64) -> WongStatus {
    guard(|| {
        let s = system(sys)?;
        let st = state(s, q, v, p)?;
        if out.is_null() {
            return Err(null());
        }
        *out = wong::energy(s, &st).map_err(fail)?;
        Ok(())
    })
}

/// Integrates with fixed-step RK4 and constraint projection.
///
/// # Safety
/// Arrays as in [`wong_rhs`]; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn wong_integrate(
    sys: *const WongSystem,
    q: *const f64,
    v: *const f64,
    p: *const f64,
    dt: f64,
    n_steps: usize,
    out: *mut *mut WongTrajectory,
) -> WongStatus {
    guard(|| {
        let s = system(sys)?;
        if out.is_null() {
            return Err(null());
        }
        *out = ptr::null_mut();
        let st = state(s, q, v, p)?;
        let opts = IntegrateOptions {
            method: Method::Rk4,
            ..Default::default()
        };
        let tr = wong::integrate(s, &st, dt, n_steps, &opts).map_err(fail)?;
        *out = Box::into_raw(Box::new(WongTrajectory(tr)));
        Ok(())
    })
}

/// # Safety
/// `tr` must be null or a handle from [`wong_integrate`] not freed before.
#[no_mangle]
pub unsafe extern "C" fn wong_trajectory_free(tr: *mut WongTrajectory) {
    if !tr.is_null() {
        drop(Box::from_raw(tr));
    }
}

/// Number of recorded states, including the initial one; 0 for null.
///
/// # Safety
/// `tr` must be null or a valid handle.
#[no_mangle]
pub unsafe extern "C" fn wong_trajectory_len(tr: *const WongTrajectory) -> usize {
    tr.as_ref().map_or(0, |t| t.0.len())
}

/// Time, state and energy at record `i`. Any output pointer may be null.
///
/// # Safety
/// `tr` must be valid; non-null outputs must hold `n_p`, `n_p`, `n_g` values.
#[no_mangle]
pub unsafe extern "C" fn wong_trajectory_get(
    tr: *const WongTrajectory,
    i: usize,
    t: *mut f64,
    q: *mut f64,
    v: *mut f64,
    p: *mut f64,
    energy: *mut f64,
) -> WongStatus {
    guard(|| {
        let tr = &tr.as_ref().ok_or_else(null)?.0;
        if i >= tr.len() {
            set_error(format!("record {i} out of range (length {})", tr.len()));
            return Err(WongStatus::InvalidArgument);
        }
        let s = &tr.states[i];
        if !t.is_null() {
            *t = tr.times[i];
        }
        if !energy.is_null() {
            *energy = tr.diagnostics[i].energy;
        }
        for (out, x) in [(q, &s.q_star), (v, &s.v), (p, &s.p)] {
            if !out.is_null() {
                write(out, x)?;
            }
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;

    fn message() -> String {
        let mut buf = vec![0 as c_char; 256];
        let n = unsafe { wong_last_error_message(buf.as_mut_ptr(), buf.len()) };
        let s = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned();
        assert_eq!(n, s.len());
        s
    }

    #[test]
    fn unknown_system_sets_code_and_message() {
        let name = CString::new("nowhere").unwrap();
        let mut h = ptr::null_mut();
        assert_eq!(unsafe { wong_system_new(name.as_ptr(), &mut h) }, WongStatus::UnknownSystem);
        assert!(h.is_null());
        assert!(message().contains("nowhere"));
    }

    #[test]
    fn null_arguments_are_rejected() {
        let mut h = ptr::null_mut();
        assert_eq!(unsafe { wong_system_new(ptr::null(), &mut h) }, WongStatus::NullPointer);
        let (mut a, mut b) = (0, 0);
        assert_eq!(unsafe { wong_system_dims(ptr::null(), &mut a, &mut b) }, WongStatus::NullPointer);
        assert_eq!(unsafe { wong_trajectory_len(ptr::null()) }, 0);
        unsafe {
            wong_system_free(ptr::null_mut());
            wong_trajectory_free(ptr::null_mut());
        }
    }

    #[test]
    fn rhs_matches_the_library() {
        let name = CString::new("su2_twovector").unwrap();
        let mut h = ptr::null_mut();
        assert_eq!(unsafe { wong_system_new(name.as_ptr(), &mut h) }, WongStatus::Ok);
        let q = [0.3, -0.2, 1.4, 0.1, 0.9, -0.3];
        let v = [0.1, 0.2, -0.1, 0.3, 0.0, 0.2];
        let p = [0.5, -0.4, 0.2];
        let (mut dv, mut dp) = ([0.0; 6], [0.0; 3]);
        assert_eq!(unsafe { wong_rhs(h, q.as_ptr(), v.as_ptr(), p.as_ptr(), dv.as_mut_ptr(), dp.as_mut_ptr()) }, WongStatus::Ok);
        let sys = builtin("su2_twovector").unwrap();
        let st = WongState::new(DVector::from_row_slice(&q), DVector::from_row_slice(&v), DVector::from_row_slice(&p));
        let (a, b) = wong::wong_rhs(&sys, &st, &Default::default()).unwrap();
        assert_eq!(a.as_slice(), &dv);
        assert_eq!(b.as_slice(), &dp);
        unsafe { wong_system_free(h) };
    }
}
