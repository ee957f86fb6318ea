//! C ABI for the torsion calculators: opaque handles, integer status codes,
//! and a thread-local message for the last failure.  The header is generated
//! by cbindgen into `include/torsionlab.h`.

use std::cell::RefCell;
use std::ffi::{c_char, c_double, c_int, CStr, CString};
use std::ptr;

use num_complex::Complex64 as C64;
use torsionlab::assembly::{symmetric_space_torsion, SymmetricSpaceFamily, TorusElement};
use torsionlab::chain::{torsion_acyclic, torsion_with_cohomology, CohomologyMetric, GammaComplex};
use torsionlab::error::Error;
use torsionlab::schema::{complex_from_schema, ComplexSchema};
use torsionlab::zeta::{psi_scalar, ZetaAccuracy};

/// Status codes shared with the command-line interface.
pub const TL_OK: c_int = 0;
pub const TL_ERR_OTHER: c_int = 1;
pub const TL_ERR_DOMAIN: c_int = 2;
pub const TL_ERR_PRECISION: c_int = 3;
pub const TL_ERR_NOT_ACYCLIC: c_int = 4;
pub const TL_ERR_MISMATCH: c_int = 5;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn status_of(e: &Error) -> c_int {
    match e {
        Error::Structure(_)
        | Error::Contract(_)
        | Error::UnsupportedSpace(_)
        | Error::Schema(_)
        | Error::Json(_)
        | Error::Io(_) => TL_ERR_DOMAIN,
        Error::Precision { .. } => TL_ERR_PRECISION,
        Error::NotAcyclic { .. } | Error::NotQuasiIso { .. } => TL_ERR_NOT_ACYCLIC,
        Error::Mismatch { .. } => TL_ERR_MISMATCH,
        _ => TL_ERR_OTHER,
    }
}

fn fail(e: &Error) -> c_int {
    let msg = CString::new(e.to_string()).unwrap_or_else(|_| CString::new("error").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = msg);
    status_of(e)
}

fn fail_domain(msg: &str) -> c_int {
    fail(&Error::Contract(msg.into()))
}

/// Message describing the most recent failure on this thread.  The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tl_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Evaluate `psi(lambda, a, tau)` with `lambda = exp(2 pi i lambda_phase)`.
/// `accuracy <= 0` selects the default target.
#[no_mangle]
pub extern "C" fn tl_psi(
    lambda_phase: c_double,
    a: c_double,
    tau: c_double,
    accuracy: c_double,
    out_re: *mut c_double,
    out_im: *mut c_double,
) -> c_int {
    if out_re.is_null() || out_im.is_null() {
        return fail_domain("output pointers must not be null");
    }
    let acc = if accuracy > 0.0 {
        match ZetaAccuracy::new(accuracy) {
            Ok(acc) => acc,
            Err(e) => return fail(&e),
        }
    } else {
        ZetaAccuracy::default()
    };
    let lam = C64::new(0.0, 2.0 * std::f64::consts::PI * lambda_phase).exp();
    match psi_scalar(lam, a, tau, &acc) {
        Ok(v) => {
            unsafe {
                *out_re = v.re;
                *out_im = v.im;
            }
            TL_OK
        }
        Err(e) => fail(&e),
    }
}

/// An equivariant cochain complex with an optional cohomology metric.
pub struct TlComplex {
    complex: GammaComplex,
    metric: Option<CohomologyMetric>,
}

/// Parse a complex from schema JSON.  Returns null on failure; the status
/// is recoverable through `tl_last_error`.
#[no_mangle]
pub extern "C" fn tl_complex_from_json(json: *const c_char) -> *mut TlComplex {
    if json.is_null() {
        fail_domain("input must not be null");
        return ptr::null_mut();
    }
    let raw = match unsafe { CStr::from_ptr(json) }.to_str() {
        Ok(s) => s,
        Err(_) => {
            fail_domain("input is not valid UTF-8");
            return ptr::null_mut();
        }
    };
    let schema: ComplexSchema = match serde_json::from_str(raw) {
        Ok(s) => s,
        Err(e) => {
            fail(&Error::Schema(e.to_string()));
            return ptr::null_mut();
        }
    };
    match complex_from_schema(&schema) {
        Ok((complex, metric)) => Box::into_raw(Box::new(TlComplex { complex, metric })),
        Err(e) => {
            fail(&e);
            ptr::null_mut()
        }
    }
}

/// Release a complex handle.  Null is ignored.
#[no_mangle]
pub extern "C" fn tl_complex_free(handle: *mut TlComplex) {
    if !handle.is_null() {
        drop(unsafe { Box::from_raw(handle) });
    }
}

/// Number of conjugacy classes of the acting group.
#[no_mangle]
pub extern "C" fn tl_complex_class_count(handle: *const TlComplex) -> c_int {
    if handle.is_null() {
        return -1;
    }
    let h = unsafe { &*handle };
    h.complex.group().class_count() as c_int
}

/// Torsion of the complex as one complex number per conjugacy class,
/// interleaved re/im into `out` (length `2 * tl_complex_class_count`).
/// Uses the stored metric when present, otherwise requires acyclicity.
#[no_mangle]
pub extern "C" fn tl_complex_torsion(handle: *const TlComplex, out: *mut c_double) -> c_int {
    if handle.is_null() || out.is_null() {
        return fail_domain("handle and output must not be null");
    }
    let h = unsafe { &*handle };
    let rho = match &h.metric {
        Some(mu) => torsion_with_cohomology(&h.complex, mu),
        None => torsion_acyclic(&h.complex),
    };
    match rho {
        Ok(rho) => {
            for (i, v) in rho.class_values().iter().enumerate() {
                unsafe {
                    *out.add(2 * i) = v.re;
                    *out.add(2 * i + 1) = v.im;
                }
            }
            TL_OK
        }
        Err(e) => fail(&e),
    }
}

/// Weyl-formula torsion of `SO(2m)/SO(2p-1)xSO(2m-2p+1)` at the torus
/// element with coordinates `num[i]/den[i]`, `i < m`.
#[no_mangle]
pub extern "C" fn tl_symmetric_so_even(
    m: c_int,
    p: c_int,
    num: *const i64,
    den: *const i64,
    out: *mut c_double,
) -> c_int {
    if m <= 0 || p <= 0 || num.is_null() || den.is_null() || out.is_null() {
        return fail_domain("need positive parameters and non-null pointers");
    }
    let rank = m as usize;
    let coords: Vec<(i64, i64)> = (0..rank)
        .map(|i| unsafe { (*num.add(i), *den.add(i)) })
        .collect();
    let t = match TorusElement::new(&coords) {
        Ok(t) => t,
        Err(e) => return fail(&e),
    };
    let family = SymmetricSpaceFamily::SoEven { m: rank, p: p as usize };
    match symmetric_space_torsion(&family, &t, &ZetaAccuracy::default()) {
        Ok(v) => {
            unsafe { *out = v };
            TL_OK
        }
        Err(e) => fail(&e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;

    #[test]
    fn psi_round_trip() {
        let (mut re, mut im) = (0.0, 0.0);
        let rc = tl_psi(0.0, 0.25, 0.0, 0.0, &mut re, &mut im);
        assert_eq!(rc, TL_OK);
        assert!((re - std::f64::consts::LN_2).abs() < 1e-9);
        assert!(im.abs() < 1e-9);
        // bad accuracy reports a domain error with a message
        assert_eq!(tl_psi(0.0, 0.25, 0.0, -0.0, &mut re, &mut im), TL_OK);
        assert_eq!(tl_psi(0.0, 0.25, 0.0, 0.0, std::ptr::null_mut(), &mut im), TL_ERR_DOMAIN);
        let msg = unsafe { CStr::from_ptr(tl_last_error()) }.to_str().unwrap();
        assert!(!msg.is_empty());
    }

    #[test]
    fn complex_handle_life_cycle() {
        let g = torsionlab::group::FiniteGroup::cyclic(3).unwrap();
        let cx = torsionlab::random::random_acyclic_complex(&g, 0, &[2, 2], 9).unwrap();
        let json = serde_json::to_string(&torsionlab::schema::complex_to_schema(&cx, None)).unwrap();
        let cjson = CString::new(json).unwrap();
        let handle = tl_complex_from_json(cjson.as_ptr());
        assert!(!handle.is_null());
        let count = tl_complex_class_count(handle);
        assert_eq!(count, 3);
        let mut out = vec![0.0f64; 2 * count as usize];
        assert_eq!(tl_complex_torsion(handle, out.as_mut_ptr()), TL_OK);
        let expected = torsion_acyclic(&cx).unwrap();
        for (i, v) in expected.class_values().iter().enumerate() {
            assert!((out[2 * i] - v.re).abs() < 1e-9);
            assert!((out[2 * i + 1] - v.im).abs() < 1e-9);
        }
        tl_complex_free(handle);
        // malformed input yields null and a schema status
        let bad = CString::new("{}").unwrap();
        assert!(tl_complex_from_json(bad.as_ptr()).is_null());
    }

    #[test]
    fn symmetric_evaluation() {
        let num = [1i64, 0];
        let den = [2i64, 1];
        let mut out = 0.0;
        let rc = tl_symmetric_so_even(2, 1, num.as_ptr(), den.as_ptr(), &mut out);
        assert_eq!(rc, TL_OK);
        assert!((out + 4.0 * std::f64::consts::LN_2).abs() < 1e-8);
        assert_eq!(
            tl_symmetric_so_even(0, 1, num.as_ptr(), den.as_ptr(), &mut out),
            TL_ERR_DOMAIN
        );
    }
}
