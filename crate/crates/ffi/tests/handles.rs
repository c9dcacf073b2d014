use std::ffi::CString;
use std::ptr;

use wong_ffi::*;

#[test]
fn integrate_through_handles() {
    let name = CString::new("so2_halfplane").unwrap();
    let mut sys = ptr::null_mut();
    unsafe {
        assert_eq!(wong_system_new(name.as_ptr(), &mut sys), WongStatus::Ok);
        let (mut np, mut ng) = (0, 0);
        assert_eq!(wong_system_dims(sys, &mut np, &mut ng), WongStatus::Ok);
        assert_eq!((np, ng), (2, 1));

        let (q, v, p) = ([1.5, 0.0], [0.2, 0.0], [0.3]);
        let mut e0 = 0.0;
        assert_eq!(wong_energy(sys, q.as_ptr(), v.as_ptr(), p.as_ptr(), &mut e0), WongStatus::Ok);

        let mut tr = ptr::null_mut();
        assert_eq!(wong_integrate(sys, q.as_ptr(), v.as_ptr(), p.as_ptr(), 1e-2, 100, &mut tr), WongStatus::Ok);
        assert_eq!(wong_trajectory_len(tr), 101);
        let (mut t, mut e) = (0.0, 0.0);
        let (mut qo, mut vo, mut po) = ([0.0; 2], [0.0; 2], [0.0; 1]);
        assert_eq!(wong_trajectory_get(tr, 100, &mut t, qo.as_mut_ptr(), vo.as_mut_ptr(), po.as_mut_ptr(), &mut e), WongStatus::Ok);
        assert!((t - 1.0).abs() < 1e-12);
        assert!((e - e0).abs() <= 1e-10 * e0.abs());
        assert_eq!(po[0], 0.3);
        assert_eq!(
            wong_trajectory_get(tr, 101, ptr::null_mut(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut()),
            WongStatus::InvalidArgument
        );
        wong_trajectory_free(tr);

        let mut bad = ptr::null_mut();
        assert_eq!(wong_integrate(sys, q.as_ptr(), v.as_ptr(), p.as_ptr(), -1.0, 10, &mut bad), WongStatus::InvalidArgument);
        assert!(bad.is_null());
        let len = wong_last_error_message(ptr::null_mut(), 0);
        assert!(len > 0);
        wong_system_free(sys);
    }
}

#[test]
fn header_declares_the_interface() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/wong.h")).unwrap();
    for f in [
        "wong_last_error_message",
        "wong_system_new",
        "wong_system_free",
        "wong_system_dims",
        "wong_rhs",
        "wong_energy",
        "wong_integrate",
        "wong_trajectory_free",
        "wong_trajectory_len",
        "wong_trajectory_get",
        "typedef struct WongSystem WongSystem",
        "WONG_STATUS_NUMERICAL_FAILURE = 5",
    ] {
        assert!(header.contains(f), "{f} missing from header");
    }
}
