//! C interface to `valgebra`.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_from_*`
//! functions and released with the matching `*_free`. Every fallible call
//! returns a [`VgStatus`]; the message of the last failure on the calling
//! thread is available from [`vg_last_error`]. Arithmetic is double precision.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use valgebra::dynamics::{dynamical_degree_empirical, spectral_degree};
use valgebra::geometry::{LinearMap, Polytope};
use valgebra::{io, mixed_volume, ConvMode, Error, Valuation};

/// Status codes; the nonzero values match the command-line exit codes where
/// they overlap.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VgStatus {
    Ok = 0,
    NullPointer = 1,
    Malformed = 2,
    Precondition = 3,
    NoConvergence = 4,
    Hypothesis = 5,
    Panic = 6,
}

/// Convolution coefficient selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VgConvMode {
    Unit = 0,
    Paper = 1,
}

/// Opaque convex polytope.
pub struct VgBody(Polytope<f64>);

/// Opaque valuation.
pub struct VgValuation(Valuation<f64>);

/// Opaque linear map.
pub struct VgMap(LinearMap<f64>);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> VgStatus {
    match e.exit_code() {
        2 => VgStatus::Malformed,
        4 => VgStatus::NoConvergence,
        5 => VgStatus::Hypothesis,
        _ => VgStatus::Precondition,
    }
}

enum Fail {
    Null,
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> VgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VgStatus::Ok,
        Ok(Err(Fail::Null)) => {
            set_error("null pointer argument".into());
            VgStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            VgStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null)
}

unsafe fn json_arg(s: *const c_char) -> Result<serde_json::Value, Fail> {
    if s.is_null() {
        return Err(Fail::Null);
    }
    let text = CStr::from_ptr(s).to_str().map_err(|_| Error::Parse("input is not UTF-8".into()))?;
    Ok(serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?)
}

unsafe fn write<T>(out: *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null);
    }
    out.write(v);
    Ok(())
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len - 1` bytes) and returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn vg_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn vg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Parses a body from `{"dim": n, "vertices": [...]}`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vg_body_from_json(json: *const c_char, out: *mut *mut VgBody) -> VgStatus {
    guard(|| {
        let body = io::parse_body(&json_arg(json)?)?;
        write(out, Box::into_raw(Box::new(VgBody(body))))
    })
}

/// Convex hull of `count` points in dimension `dim`, stored row by row.
///
/// # Safety
/// `coords` must point to `dim * count` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vg_body_from_points(
    dim: usize,
    coords: *const f64,
    count: usize,
    out: *mut *mut VgBody,
) -> VgStatus {
    guard(|| {
        if coords.is_null() {
            return Err(Fail::Null);
        }
        if dim == 0 || count == 0 {
            return Err(Error::Precondition("empty point set".into()).into());
        }
        let flat = std::slice::from_raw_parts(coords, dim * count);
        let pts = flat.chunks(dim).map(|c| c.to_vec()).collect();
        let body = Polytope::from_points(dim, pts)?;
        write(out, Box::into_raw(Box::new(VgBody(body))))
    })
}

/// # Safety
/// `body` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vg_body_free(body: *mut VgBody) {
    if !body.is_null() {
        drop(Box::from_raw(body));
    }
}

/// # Safety
/// `body` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vg_body_volume(body: *const VgBody, out: *mut f64) -> VgStatus {
    guard(|| write(out, deref(body)?.0.volume()))
}

/// # Safety
/// `body` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vg_body_dim(body: *const VgBody, out: *mut usize) -> VgStatus {
    guard(|| write(out, deref(body)?.0.dim()))
}

/// Mixed volume of `count` bodies, where `count` equals their dimension.
///
/// # Safety
/// `bodies` must point to `count` live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vg_mixed_volume(bodies: *const *const VgBody, count: usize, out: *mut f64) -> VgStatus {
    guard(|| {
        if bodies.is_null() {
            return Err(Fail::Null);
        }
        let refs = std::slice::from_raw_parts(bodies, count)
            .iter()
            .map(|&b| deref(b).map(|b| &b.0))
            .collect::<Result<Vec<_>, _>>()?;
        write(out, mixed_volume::mixed_volume(&refs)?)
    })
}

/// Parses a valuation from `{"dim", "degree", "terms"}` JSON.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vg_valuation_from_json(json: *const c_char, out: *mut *mut VgValuation) -> VgStatus {
    guard(|| {
        let v = io::parse_valuation(&json_arg(json)?)?;
        write(out, Box::into_raw(Box::new(VgValuation(v))))
    })
}

/// # Safety
/// `v` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vg_valuation_free(v: *mut VgValuation) {
    if !v.is_null() {
        drop(Box::from_raw(v));
    }
}

/// # Safety
/// `v` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vg_valuation_degree(v: *const VgValuation, out: *mut usize) -> VgStatus {
    guard(|| write(out, deref(v)?.0.degree()))
}

/// `phi(L)`.
///
/// # Safety
/// `v` and `body` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vg_valuation_evaluate(v: *const VgValuation, body: *const VgBody, out: *mut f64) -> VgStatus {
    guard(|| write(out, deref(v)?.0.evaluate(&deref(body)?.0)?))
}

/// Convolution `a * b`; a degree-0 result is read with
/// [`vg_valuation_constant`].
///
/// # Safety
/// `a` and `b` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vg_valuation_convolve(
    a: *const VgValuation,
    b: *const VgValuation,
    mode: VgConvMode,
    out: *mut *mut VgValuation,
) -> VgStatus {
    guard(|| {
        let mode = match mode {
            VgConvMode::Unit => ConvMode::Unit,
            VgConvMode::Paper => ConvMode::Paper,
        };
        let c = deref(a)?.0.convolve(&deref(b)?.0, mode)?;
        write(out, Box::into_raw(Box::new(VgValuation(c))))
    })
}

/// Value of a degree-0 valuation.
///
/// # Safety
/// `v` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vg_valuation_constant(v: *const VgValuation, out: *mut f64) -> VgStatus {
    guard(|| write(out, deref(v)?.0.constant()?))
}

/// Linear map from `dim * dim` doubles in row-major order.
///
/// # Safety
/// `rows` must point to `dim * dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vg_map_from_rows(dim: usize, rows: *const f64, out: *mut *mut VgMap) -> VgStatus {
    guard(|| {
        if rows.is_null() {
            return Err(Fail::Null);
        }
        if dim == 0 {
            return Err(Error::Precondition("dimension must be positive".into()).into());
        }
        let flat = std::slice::from_raw_parts(rows, dim * dim);
        let g = LinearMap::new(flat.chunks(dim).map(|r| r.to_vec()).collect())?;
        write(out, Box::into_raw(Box::new(VgMap(g))))
    })
}

/// # Safety
/// `g` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vg_map_free(g: *mut VgMap) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Acts on a body: `g(body)`.
///
/// # Safety
/// `g` and `body` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vg_map_apply(g: *const VgMap, body: *const VgBody, out: *mut *mut VgBody) -> VgStatus {
    guard(|| {
        let image = deref(g)?.0.apply_polytope(&deref(body)?.0)?;
        write(out, Box::into_raw(Box::new(VgBody(image))))
    })
}

/// `|det g|^{-1}` times the product of the `codeg` largest eigenvalue moduli.
///
/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vg_spectral_degree(g: *const VgMap, codeg: usize, out: *mut f64) -> VgStatus {
    guard(|| write(out, spectral_degree(&deref(g)?.0, codeg)?))
}

/// k-th root of the degree of `g^kmax` relative to the unit cube.
///
/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vg_dynamical_degree(g: *const VgMap, codeg: usize, kmax: u32, out: *mut f64) -> VgStatus {
    guard(|| {
        let g = &deref(g)?.0;
        let n = g.dim();
        let b = io::reference_from_body(&format!("unit-cube-d{n}"), Polytope::unit_cube(n), false)?;
        let report = dynamical_degree_empirical(g, codeg, &b, kmax)?;
        write(out, report.final_root())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;

    fn last_error() -> String {
        let mut buf = vec![0 as c_char; 256];
        let n = unsafe { vg_last_error(buf.as_mut_ptr(), buf.len()) };
        let s = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned();
        assert_eq!(s.len(), n.min(255));
        s
    }

    #[test]
    fn body_round_trip() {
        let json = CString::new(r#"{"dim":2,"vertices":[[0,0],[2,0],[0,1],[2,1]]}"#).unwrap();
        let mut b = ptr::null_mut();
        unsafe {
            assert_eq!(vg_body_from_json(json.as_ptr(), &mut b), VgStatus::Ok);
            let mut v = 0.0;
            assert_eq!(vg_body_volume(b, &mut v), VgStatus::Ok);
            assert_eq!(v, 2.0);
            let arr = [b as *const VgBody, b as *const VgBody];
            assert_eq!(vg_mixed_volume(arr.as_ptr(), 2, &mut v), VgStatus::Ok);
            assert_eq!(v, 2.0);
            assert_eq!(vg_mixed_volume(arr.as_ptr(), 1, &mut v), VgStatus::Precondition);
            assert!(last_error().contains("arity"));
            vg_body_free(b);
        }
    }

    #[test]
    fn error_codes() {
        let bad = CString::new("{not json").unwrap();
        let mut b = ptr::null_mut();
        unsafe {
            assert_eq!(vg_body_from_json(bad.as_ptr(), &mut b), VgStatus::Malformed);
            assert!(b.is_null());
            assert_eq!(vg_body_from_json(ptr::null(), &mut b), VgStatus::NullPointer);
            let mut v = 0.0;
            assert_eq!(vg_body_volume(ptr::null(), &mut v), VgStatus::NullPointer);
            assert_eq!(last_error(), "null pointer argument");
        }
    }

    #[test]
    fn maps_and_valuations() {
        let rows = [3.0, 0.0, 0.0, 2.0];
        let mut g = ptr::null_mut();
        let pts = [0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        let mut sq = ptr::null_mut();
        let psi = CString::new(
            r#"{"dim":2,"degree":1,"terms":[{"weight":1,"bodies":[{"dim":2,"vertices":[[0,0],[1,0],[0,1],[1,1]]}]}]}"#,
        )
        .unwrap();
        let mut v = ptr::null_mut();
        unsafe {
            assert_eq!(vg_map_from_rows(2, rows.as_ptr(), &mut g), VgStatus::Ok);
            let mut d = 0.0;
            assert_eq!(vg_spectral_degree(g, 1, &mut d), VgStatus::Ok);
            assert!((d - 0.5).abs() < 1e-12);
            assert_eq!(vg_dynamical_degree(g, 1, 30, &mut d), VgStatus::Ok);
            assert!((d - 0.5).abs() < 0.03);
            assert_eq!(vg_body_from_points(2, pts.as_ptr(), 4, &mut sq), VgStatus::Ok);
            let mut img = ptr::null_mut();
            assert_eq!(vg_map_apply(g, sq, &mut img), VgStatus::Ok);
            let mut area = 0.0;
            vg_body_volume(img, &mut area);
            assert_eq!(area, 6.0);
            assert_eq!(vg_valuation_from_json(psi.as_ptr(), &mut v), VgStatus::Ok);
            let mut val = 0.0;
            assert_eq!(vg_valuation_evaluate(v, img, &mut val), VgStatus::Ok);
            assert!((val - 2.5).abs() < 1e-12);
            let mut c = ptr::null_mut();
            assert_eq!(vg_valuation_convolve(v, v, VgConvMode::Paper, &mut c), VgStatus::Ok);
            assert_eq!(vg_valuation_constant(c, &mut val), VgStatus::Ok);
            assert!((val - 0.5).abs() < 1e-12);
            vg_valuation_free(c);
            vg_valuation_free(v);
            vg_body_free(img);
            vg_body_free(sq);
            vg_map_free(g);
        }
    }
}
