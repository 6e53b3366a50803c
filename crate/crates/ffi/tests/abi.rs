use htype_ffi::*;
use std::ffi::CString;
use std::ptr;

#[test]
fn model_roundtrip_and_errors() {
    unsafe {
        let id = CString::new("qhopf-s7").unwrap();
        let mut h = ptr::null_mut();
        assert_eq!(htype_model_new(id.as_ptr(), &mut h), HtypeStatus::Ok);
        let (mut n, mut m) = (0usize, 0usize);
        assert_eq!(htype_model_dims(h, &mut n, &mut m), HtypeStatus::Ok);
        assert_eq!((n, m), (4, 3));
        let (mut k, mut t) = (0.0, 0.0);
        let p = [0.0f64; 7];
        assert_eq!(htype_model_invariants(h, p.as_ptr(), 7, &mut k, &mut t), HtypeStatus::Ok);
        assert!((k - 12.0).abs() < 1e-9 && (t + 12.0).abs() < 1e-9);
        htype_model_free(h);

        let bad = CString::new("torus").unwrap();
        let mut h2 = ptr::null_mut();
        assert_eq!(htype_model_new(bad.as_ptr(), &mut h2), HtypeStatus::UnknownModel);
        assert!(h2.is_null());
        let mut buf = [0 as std::ffi::c_char; 64];
        let len = htype_last_error(buf.as_mut_ptr(), buf.len());
        assert!(len > 0);
        assert_eq!(htype_model_dims(ptr::null(), &mut n, &mut m), HtypeStatus::NullPointer);
    }
}

#[test]
fn kernel_value_at_origin() {
    unsafe {
        let mut k = ptr::null_mut();
        assert_eq!(htype_kernel_new(2, 1, &mut k), HtypeStatus::Ok);
        let mut v = 0.0;
        assert_eq!(htype_kernel_value(k, 1.0, [0.0; 3].as_ptr(), 3, &mut v), HtypeStatus::Ok);
        assert!((v - 1.0 / 32.0).abs() < 1e-14);
        assert_eq!(htype_kernel_value(k, 1.0, [0.0; 2].as_ptr(), 2, &mut v), HtypeStatus::InvalidArgument);
        htype_kernel_free(k);
        let mut k2 = ptr::null_mut();
        assert_eq!(htype_kernel_new(3, 1, &mut k2), HtypeStatus::Inadmissible);
    }
}

#[test]
fn header_declares_entry_points() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/htype.h")).unwrap();
    for f in ["htype_model_new", "htype_model_free", "htype_kernel_value", "htype_c1", "htype_last_error", "HTYPE_STATUS_RANK_DEFICIENT"] {
        assert!(h.contains(f), "{f}");
    }
}
