//! C ABI over `willmore-core`.
//!
//! Every function returns a [`WillmoreStatus`]; results go through out
//! pointers. Charts are opaque handles created by `willmore_chart_new` and
//! released with `willmore_chart_free`. The message of the last failure on
//! the calling thread is available from `willmore_last_error`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use willmore_core::asymptotics::dilated_energy_closed;
use willmore_core::conformal::{push_forward_chart, AmbientMap};
use willmore_core::energy::energy;
use willmore_core::families::{family_energy_closed, ProductFamily};
use willmore_core::obstruction::obstruction_norms;
use willmore_core::variation::{jacobi_spectrum, Surface};
use willmore_core::{make_family_chart, parse_family, Error, ImmersionChart};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WillmoreStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Domain = 4,
    Unsupported = 5,
    Degenerate = 6,
    MapSingularity = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Opaque chart handle.
pub struct WillmoreChart {
    chart: ImmersionChart,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> WillmoreStatus {
    match e {
        Error::Domain(_) => WillmoreStatus::Domain,
        Error::Parameter { .. } | Error::Config(_) => WillmoreStatus::InvalidArgument,
        Error::Unsupported(_) | Error::UnsupportedOrder { .. } => WillmoreStatus::Unsupported,
        Error::Degenerate { .. } => WillmoreStatus::Degenerate,
        Error::MapSingularity(_) => WillmoreStatus::MapSingularity,
    }
}

struct Fail(WillmoreStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> WillmoreStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WillmoreStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            WillmoreStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(WillmoreStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(WillmoreStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

fn null(name: &str) -> Fail {
    Fail(WillmoreStatus::NullPointer, format!("{name} is null"))
}

unsafe fn chart_ref<'a>(p: *const WillmoreChart) -> Result<&'a ImmersionChart, Fail> {
    p.as_ref().map(|c| &c.chart).ok_or_else(|| null("chart"))
}

unsafe fn put<T>(p: *mut T, v: T, name: &str) -> Result<(), Fail> {
    if p.is_null() {
        return Err(null(name));
    }
    p.write(v);
    Ok(())
}

/// Builds a family chart from a tag (`s2xs2`, `anchor`, `ellipsoid`, ...)
/// and a `key=value,...` parameter list (may be null for defaults).
///
/// # Safety
/// `family` and `params` must be null or NUL-terminated strings; `out` must
/// be null or writable.
#[no_mangle]
pub unsafe extern "C" fn willmore_chart_new(family: *const c_char, params: *const c_char, out: *mut *mut WillmoreChart) -> WillmoreStatus {
    guard(|| {
        let tag = text(family, "family")?;
        let params = if params.is_null() { "" } else { text(params, "params")? };
        if out.is_null() {
            return Err(null("out"));
        }
        let chart = make_family_chart(parse_family(tag, params)?)?;
        out.write(Box::into_raw(Box::new(WillmoreChart { chart })));
        Ok(())
    })
}

/// Releases a chart; null is ignored.
///
/// # Safety
/// `chart` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn willmore_chart_free(chart: *mut WillmoreChart) {
    if !chart.is_null() {
        drop(Box::from_raw(chart));
    }
}

/// Intrinsic dimension and the dimension of the ambient space after any maps.
///
/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn willmore_chart_dims(chart: *const WillmoreChart, out_k: *mut u32, out_ambient: *mut u32) -> WillmoreStatus {
    guard(|| {
        let c = chart_ref(chart)?;
        put(out_k, c.k as u32, "out_k")?;
        put(out_ambient, c.natural_background().embedding_dim() as u32, "out_ambient")
    })
}

/// Energy `E`, `Ē = 128 E` (NaN when `k = 2`), and area at a quadrature resolution.
///
/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn willmore_chart_energy(
    chart: *const WillmoreChart,
    resolution: u32,
    out_e: *mut f64,
    out_ebar: *mut f64,
    out_area: *mut f64,
) -> WillmoreStatus {
    guard(|| {
        let c = chart_ref(chart)?;
        if out_e.is_null() || out_ebar.is_null() || out_area.is_null() {
            return Err(null("output"));
        }
        let r = energy(c, c.natural_background(), resolution as usize)?;
        put(out_e, r.e, "out_e")?;
        put(out_ebar, r.ebar.unwrap_or(f64::NAN), "out_ebar")?;
        put(out_area, r.area, "out_area")
    })
}

/// Sup-norm of the obstruction field and its value relative to the summed term sizes.
///
/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn willmore_chart_obstruction(
    chart: *const WillmoreChart,
    resolution: u32,
    out_sup: *mut f64,
    out_scaled_sup: *mut f64,
) -> WillmoreStatus {
    guard(|| {
        let c = chart_ref(chart)?;
        if out_sup.is_null() || out_scaled_sup.is_null() {
            return Err(null("output"));
        }
        let n = obstruction_norms(c, c.natural_background(), resolution as usize)?;
        put(out_sup, n.sup, "out_sup")?;
        put(out_scaled_sup, n.scaled_sup, "out_scaled_sup")
    })
}

/// New chart: the stereographic image of a sphere-background chart.
///
/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn willmore_chart_stereographic(chart: *const WillmoreChart, out: *mut *mut WillmoreChart) -> WillmoreStatus {
    guard(|| {
        let c = chart_ref(chart)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let pushed = push_forward_chart(c, AmbientMap::Stereographic)?;
        out.write(Box::into_raw(Box::new(WillmoreChart { chart: pushed })));
        Ok(())
    })
}

/// Closed-form `Ē` of a product family (`s2xs2`, `s1xs3`, `s1s1s2`, `torus4`)
/// at ratio parameters `t[0..len]`.
///
/// # Safety
/// `t` must point to `len` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn willmore_family_energy(family: *const c_char, t: *const f64, len: usize, out: *mut f64) -> WillmoreStatus {
    guard(|| {
        let f = ProductFamily::from_tag(text(family, "family")?)?;
        if t.is_null() {
            return Err(null("t"));
        }
        let t = std::slice::from_raw_parts(t, len);
        put(out, family_energy_closed(f, t)?, "out")
    })
}

/// `Ē` of the dilated anchor ring `δ_a(T_{1,1/√2})` from its one-dimensional integral.
///
/// # Safety
/// `out` must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn willmore_dilated_energy(a: f64, resolution: u32, out: *mut f64) -> WillmoreStatus {
    guard(|| put(out, dilated_energy_closed(a, resolution as usize)?, "out"))
}

/// Jacobi spectrum of `s4` or `s2xs2`: writes up to `capacity` rows of
/// (eigenvalue, multiplicity) and the full row count to `out_len`.
/// Returns `BufferTooSmall` when `capacity` is short; `out_len` is still set.
///
/// # Safety
/// `lambdas` and `mults` must hold `capacity` elements.
#[no_mangle]
pub unsafe extern "C" fn willmore_jacobi_spectrum(
    surface: *const c_char,
    jmax: u32,
    lambdas: *mut i64,
    mults: *mut u64,
    capacity: usize,
    out_len: *mut usize,
) -> WillmoreStatus {
    guard(|| {
        let table = jacobi_spectrum(Surface::from_tag(text(surface, "surface")?)?, jmax)?;
        put(out_len, table.rows.len(), "out_len")?;
        if table.rows.len() > capacity {
            return Err(Fail(WillmoreStatus::BufferTooSmall, format!("need {} rows, capacity {capacity}", table.rows.len())));
        }
        if lambdas.is_null() || mults.is_null() {
            return Err(null("output"));
        }
        for (i, r) in table.rows.iter().enumerate() {
            lambdas.add(i).write(r.lambda);
            mults.add(i).write(r.mult);
        }
        Ok(())
    })
}

/// Copies the calling thread's last error message (NUL-terminated, possibly
/// truncated) into `buf` and returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn willmore_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            buf.add(n).write(0);
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn willmore_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
