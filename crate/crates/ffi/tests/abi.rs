use std::ffi::{c_char, CStr, CString};
use std::ptr;

use willmore_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    unsafe { willmore_last_error(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn chart(family: &str, params: &str) -> *mut WillmoreChart {
    let f = CString::new(family).unwrap();
    let p = CString::new(params).unwrap();
    let mut out = ptr::null_mut();
    let st = unsafe { willmore_chart_new(f.as_ptr(), p.as_ptr(), &mut out) };
    assert_eq!(st, WillmoreStatus::Ok, "{}", last_error());
    assert!(!out.is_null());
    out
}

#[test]
fn round_sphere_energy() {
    let c = chart("s4", "");
    let (mut k, mut n) = (0u32, 0u32);
    assert_eq!(unsafe { willmore_chart_dims(c, &mut k, &mut n) }, WillmoreStatus::Ok);
    assert_eq!(k, 4);
    let (mut e, mut ebar, mut area) = (f64::NAN, f64::NAN, f64::NAN);
    assert_eq!(unsafe { willmore_chart_energy(c, 12, &mut e, &mut ebar, &mut area) }, WillmoreStatus::Ok);
    assert!((ebar - 128.0 * std::f64::consts::PI.powi(2)).abs() < 1e-9, "{ebar}");
    assert!((area - 8.0 * std::f64::consts::PI.powi(2) / 3.0).abs() < 1e-9, "{area}");
    unsafe { willmore_chart_free(c) };
}

#[test]
fn s2xs2_matches_family_closed_form() {
    let c = chart("s2xs2", "r1=0.7071067811865476,r2=0.7071067811865476");
    let (mut e, mut ebar, mut area) = (0.0, 0.0, 0.0);
    assert_eq!(unsafe { willmore_chart_energy(c, 12, &mut e, &mut ebar, &mut area) }, WillmoreStatus::Ok);
    let fam = CString::new("s2xs2").unwrap();
    let t = [1.0];
    let mut closed = 0.0;
    assert_eq!(unsafe { willmore_family_energy(fam.as_ptr(), t.as_ptr(), t.len(), &mut closed) }, WillmoreStatus::Ok);
    assert!((ebar - closed).abs() <= 1e-8 * closed.abs().max(1.0), "{ebar} vs {closed}");
    let (mut sup, mut scaled) = (f64::NAN, f64::NAN);
    assert_eq!(unsafe { willmore_chart_obstruction(c, 8, &mut sup, &mut scaled) }, WillmoreStatus::Unsupported);
    let mut img = ptr::null_mut();
    assert_eq!(unsafe { willmore_chart_stereographic(c, &mut img) }, WillmoreStatus::Ok);
    assert_eq!(unsafe { willmore_chart_obstruction(img, 8, &mut sup, &mut scaled) }, WillmoreStatus::Ok);
    assert!(scaled < 1e-8, "{scaled}");
    unsafe { willmore_chart_free(img) };
    unsafe { willmore_chart_free(c) };
}

#[test]
fn stereographic_handle_is_independent() {
    let c = chart("s2xs2", "r1=0.6,r2=0.8");
    let mut img = ptr::null_mut();
    assert_eq!(unsafe { willmore_chart_stereographic(c, &mut img) }, WillmoreStatus::Ok);
    unsafe { willmore_chart_free(c) };
    let (mut k, mut n) = (0u32, 0u32);
    assert_eq!(unsafe { willmore_chart_dims(img, &mut k, &mut n) }, WillmoreStatus::Ok);
    assert_eq!((k, n), (4, 5));
    unsafe { willmore_chart_free(img) };
}

#[test]
fn errors_map_to_status_codes() {
    let mut out = ptr::null_mut();
    let bad = CString::new("no-such-family").unwrap();
    let st = unsafe { willmore_chart_new(bad.as_ptr(), ptr::null(), &mut out) };
    assert_ne!(st, WillmoreStatus::Ok);
    assert!(out.is_null());
    assert!(!last_error().is_empty());

    assert_eq!(unsafe { willmore_chart_new(ptr::null(), ptr::null(), &mut out) }, WillmoreStatus::NullPointer);
    assert_eq!(unsafe { willmore_chart_energy(ptr::null(), 8, ptr::null_mut(), ptr::null_mut(), ptr::null_mut()) }, WillmoreStatus::NullPointer);

    let mut v = 0.0;
    assert_eq!(unsafe { willmore_dilated_energy(-1.0, 32, &mut v) }, WillmoreStatus::Domain);
    assert!(last_error().contains("domain"), "{}", last_error());

    let invalid = [0xffu8 as c_char, 0];
    assert_eq!(unsafe { willmore_chart_new(invalid.as_ptr(), ptr::null(), &mut out) }, WillmoreStatus::InvalidUtf8);
    unsafe { willmore_chart_free(ptr::null_mut()) };
}

#[test]
fn spectrum_reports_required_capacity() {
    let s = CString::new("s4").unwrap();
    let mut len = 0usize;
    let st = unsafe { willmore_jacobi_spectrum(s.as_ptr(), 3, ptr::null_mut(), ptr::null_mut(), 0, &mut len) };
    assert_eq!(st, WillmoreStatus::BufferTooSmall);
    assert_eq!(len, 4);
    let mut lam = vec![0i64; len];
    let mut mult = vec![0u64; len];
    assert_eq!(unsafe { willmore_jacobi_spectrum(s.as_ptr(), 3, lam.as_mut_ptr(), mult.as_mut_ptr(), len, &mut len) }, WillmoreStatus::Ok);
    assert_eq!(lam, vec![-4, 0, 6, 14]);
    assert_eq!(mult, vec![1, 5, 14, 30]);
}

#[test]
fn dilated_energy_matches_chart_quadrature() {
    let c = chart("dilated", "R=1,r=0.7071067811865476,a=2");
    let (mut e, mut ebar, mut area) = (0.0, 0.0, 0.0);
    assert_eq!(unsafe { willmore_chart_energy(c, 24, &mut e, &mut ebar, &mut area) }, WillmoreStatus::Ok);
    unsafe { willmore_chart_free(c) };
    let mut v = 0.0;
    assert_eq!(unsafe { willmore_dilated_energy(2.0, 64, &mut v) }, WillmoreStatus::Ok);
    assert!((ebar - v).abs() <= 1e-6 * v.abs(), "{ebar} vs {v}");
}

#[test]
fn last_error_truncates_and_reports_length() {
    let mut v = 0.0;
    unsafe { willmore_dilated_energy(0.0, 32, &mut v) };
    let full = unsafe { willmore_last_error(ptr::null_mut(), 0) };
    let mut small = [1 as c_char; 4];
    assert_eq!(unsafe { willmore_last_error(small.as_mut_ptr(), small.len()) }, full);
    assert_eq!(small[3], 0);
    assert!(full > 3);
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(willmore_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_is_generated() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/willmore.h")).unwrap();
    for sym in ["willmore_chart_new", "willmore_chart_free", "willmore_last_error", "WILLMORE_STATUS_DOMAIN", "typedef struct WillmoreChart WillmoreChart"] {
        assert!(h.contains(sym), "missing {sym}");
    }
}
