use std::ffi::{CStr, CString};
use std::ptr;

use domagg_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(domagg_last_error()).to_string_lossy().into_owned() }
}

unsafe fn atoms(x: &[f64], p: &[f64]) -> *mut DomaggDistribution {
    let mut d = ptr::null_mut();
    assert_eq!(domagg_distribution_atoms(x.as_ptr(), p.as_ptr(), x.len(), &mut d), DomaggStatus::Ok);
    d
}

#[test]
fn nested_pair_through_the_abi() {
    unsafe {
        let f1 = atoms(&[0.0, 1.0], &[0.5, 0.5]);
        let f2 = atoms(&[0.0, 2.0], &[0.75, 0.25]);
        let set = [f1 as *const _, f2 as *const _];
        let spec = CString::new("es:0.5").unwrap();
        let mut m = ptr::null_mut();
        assert_eq!(domagg_measure_parse(spec.as_ptr(), &mut m), DomaggStatus::Ok);
        let (mut wr, mut ma) = (0.0, 0.0);
        assert_eq!(domagg_wr_value(m, set.as_ptr(), 2, &mut wr), DomaggStatus::Ok);
        assert_eq!(domagg_ma_value(m, DomaggOrder::Ssd, set.as_ptr(), 2, &mut ma), DomaggStatus::Ok);
        // both laws have ES_0.5 = 1 and π₂ ≥ π₁ everywhere, so the SSD
        // supremum is F2 itself
        assert!((wr - 1.0).abs() < 1e-12);
        assert!((ma - 1.0).abs() < 1e-12, "{ma}");
        let mut sup = ptr::null_mut();
        assert_eq!(domagg_supremum(DomaggOrder::Fsd, set.as_ptr(), 2, 0, &mut sup), DomaggStatus::Ok);
        let mut q = 0.0;
        assert_eq!(domagg_distribution_quantile(sup, 0.9, &mut q), DomaggStatus::Ok);
        assert_eq!(q, 2.0);
        domagg_distribution_free(sup);
        domagg_measure_free(m);
        domagg_distribution_free(f1);
        domagg_distribution_free(f2);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let mut d = ptr::null_mut();
        let bad = [0.3, 0.3];
        let x = [0.0, 1.0];
        assert_eq!(domagg_distribution_atoms(x.as_ptr(), bad.as_ptr(), 2, &mut d), DomaggStatus::InvalidArgument);
        assert!(d.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(domagg_distribution_atoms(ptr::null(), bad.as_ptr(), 2, &mut d), DomaggStatus::NullPointer);
        assert!(last_error().contains("locations"));
        let spec = CString::new("es:1.5").unwrap();
        let mut m = ptr::null_mut();
        assert_eq!(domagg_measure_parse(spec.as_ptr(), &mut m), DomaggStatus::InvalidArgument);
        let normal = CString::new("normal:0:1").unwrap();
        assert_eq!(domagg_distribution_parse(normal.as_ptr(), &mut d), DomaggStatus::Ok);
        let mut sup = ptr::null_mut();
        assert_eq!(domagg_wasserstein_sup_ssd(d, 1.0, 0.1, &mut sup), DomaggStatus::Unbounded);
        domagg_distribution_free(d);
    }
}

#[test]
fn json_round_trip() {
    unsafe {
        let d = atoms(&[-1.0, 0.5, 3.0], &[0.2, 0.5, 0.3]);
        let mut s = ptr::null_mut();
        assert_eq!(domagg_distribution_to_json(d, &mut s), DomaggStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(domagg_distribution_from_json(s, &mut back), DomaggStatus::Ok);
        let (mut a, mut b) = (0.0, 0.0);
        for x in [-2.0, -1.0, 0.0, 0.5, 1.0, 3.0] {
            domagg_distribution_pi(d, x, &mut a);
            domagg_distribution_pi(back, x, &mut b);
            assert_eq!(a, b);
        }
        domagg_string_free(s);
        domagg_distribution_free(d);
        domagg_distribution_free(back);
    }
}

#[test]
fn program_buffer_protocol() {
    let json = r#"{"actions":{"kind":"fixed","action":[1.0]},"loss":{"kind":"linear"},
        "scenarios":{"kind":"finite_clouds","clouds":[{"kind":"points","points":[[3.0],[-1.0],[2.0],[5.0],[0.0]]}]},
        "measure":{"kind":"es","alpha":0.6}}"#;
    let json = CString::new(json).unwrap();
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(domagg_program_from_json(json.as_ptr(), &mut p), DomaggStatus::Ok);
        let (mut obj, mut len) = (0.0, 0usize);
        assert_eq!(domagg_program_solve(p, DomaggApproach::Wr, &mut obj, ptr::null_mut(), 0, &mut len), DomaggStatus::BufferTooSmall);
        assert_eq!(len, 1);
        let mut a = [0.0];
        assert_eq!(domagg_program_solve(p, DomaggApproach::Wr, &mut obj, a.as_mut_ptr(), 1, &mut len), DomaggStatus::Ok);
        assert!((obj - 4.0).abs() < 1e-7);
        assert!((a[0] - 1.0).abs() < 1e-9);
        domagg_program_free(p);
    }
}
