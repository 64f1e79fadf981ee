use std::ffi::CStr;
use std::ptr;

use hom_metrology_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    let n = unsafe { hom_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 0, "expected a pending error");
    unsafe { CStr::from_ptr(buf.as_ptr()) }
        .to_string_lossy()
        .into_owned()
}

fn gauss(sigma: f64) -> *mut HomState {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { hom_state_gauss(sigma, &mut s) }, HomStatus::Ok);
    assert!(!s.is_null());
    s
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(hom_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn gaussian_round_trip() {
    let s = gauss(1.0);
    let mut m = HomMoments::default();
    assert_eq!(unsafe { hom_state_moments(s, &mut m) }, HomStatus::Ok);
    assert!((m.variance - 1.0).abs() < 1e-9);
    assert!((m.phase_space_area - 0.25).abs() < 1e-6);

    let mut p = 0.0;
    assert_eq!(
        unsafe { hom_coincidence_probability(s, 0.95, 0.0, &mut p) },
        HomStatus::Ok
    );
    assert!((p - 0.025).abs() < 1e-15);

    let mut f = 0.0;
    assert_eq!(
        unsafe { hom_fisher_information(s, 1.0, 0.0, &mut f) },
        HomStatus::Ok
    );
    assert!((f - 1.0).abs() < 1e-12);

    let mut mx = HomFisherMax::default();
    assert_eq!(unsafe { hom_max_fisher(s, 0.994, &mut mx) }, HomStatus::Ok);
    assert!((mx.f_tilde - 0.85277).abs() < 1e-4 && mx.limit == 0);

    let mut c = HomCrb::default();
    assert_eq!(
        unsafe { hom_crb(s, 1.0, 0.0, 10_000, &mut c) },
        HomStatus::Ok
    );
    assert!((c.crb - 0.01).abs() < 1e-12);

    let vs = [0.83, 0.994];
    let mut r = [0.0; 2];
    assert_eq!(
        unsafe { hom_ratio_curve(s, vs.as_ptr(), 2, r.as_mut_ptr()) },
        HomStatus::Ok
    );
    assert!(r[0] < r[1]);

    let mut e = HomEstimate::default();
    assert_eq!(
        unsafe { hom_mc_crb_study(s, 0.99, 0.5, 10_000, 60, 1, &mut e) },
        HomStatus::Ok
    );
    assert!(e.crb > 0.0 && e.empirical_std > 0.0);
    unsafe { hom_state_free(s) };
}

#[test]
fn errors_carry_codes_and_messages() {
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { hom_state_gauss(-1.0, &mut s) },
        HomStatus::InvalidParameter
    );
    assert!(s.is_null());
    assert!(last_error().contains("sigma"), "{}", last_error());

    assert_eq!(
        unsafe { hom_state_cat(1.0, 4.0, &mut s) },
        HomStatus::InvalidParameter
    );

    let g = gauss(1.0);
    let mut c = HomCrb::default();
    assert_eq!(
        unsafe { hom_crb(g, 0.9, 0.0, 10_000, &mut c) },
        HomStatus::ZeroInformation
    );
    let mut p = 0.0;
    assert_eq!(
        unsafe { hom_coincidence_probability(g, 1.5, 0.0, &mut p) },
        HomStatus::InvalidParameter
    );
    assert_eq!(
        unsafe { hom_coincidence_probability(ptr::null(), 0.5, 0.0, &mut p) },
        HomStatus::NullPointer
    );
    assert_eq!(
        unsafe { hom_coincidence_probability(g, 0.5, 0.0, ptr::null_mut()) },
        HomStatus::NullPointer
    );
    assert_eq!(
        unsafe { hom_state_gauss(1.0, ptr::null_mut()) },
        HomStatus::NullPointer
    );

    // a success clears the pending message
    assert_eq!(
        unsafe { hom_coincidence_probability(g, 0.5, 0.0, &mut p) },
        HomStatus::Ok
    );
    assert_eq!(unsafe { hom_last_error_message(ptr::null_mut(), 0) }, 0);
    unsafe { hom_state_free(g) };
    unsafe { hom_state_free(ptr::null_mut()) };
}

#[test]
fn truncated_error_buffer() {
    let mut s = ptr::null_mut();
    assert_ne!(unsafe { hom_state_rect(0.0, &mut s) }, HomStatus::Ok);
    let full = unsafe { hom_last_error_message(ptr::null_mut(), 0) };
    let mut buf = [0x7f as std::ffi::c_char; 8];
    assert_eq!(
        unsafe { hom_last_error_message(buf.as_mut_ptr(), buf.len()) },
        full
    );
    assert_eq!(buf[7], 0);
}

#[test]
fn cosine_reference_has_no_amplitude() {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { hom_state_cosine(0.5, &mut s) }, HomStatus::Ok);
    let mut m = HomMoments::default();
    assert_eq!(
        unsafe { hom_state_moments(s, &mut m) },
        HomStatus::Unsupported
    );
    let mut f = 0.0;
    assert_eq!(
        unsafe { hom_fisher_information(s, 1.0, 0.3, &mut f) },
        HomStatus::Ok
    );
    assert!((f - 1.0).abs() < 1e-9);
    unsafe { hom_state_free(s) };
}

#[test]
fn tabulated_and_channel_states() {
    let n = 2001;
    let h = 0.01;
    let omega: Vec<f64> = (0..n).map(|i| (i as f64 - 1000.0) * h).collect();
    let re: Vec<f64> = omega.iter().map(|w| (-w * w / 4.0).exp()).collect();
    let im = vec![0.0; n];
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { hom_state_tabulated(omega.as_ptr(), re.as_ptr(), im.as_ptr(), n, &mut s) },
        HomStatus::Ok
    );
    let mut q = 0.0;
    assert_eq!(unsafe { hom_state_qfi(s, &mut q) }, HomStatus::Ok);
    assert!((q - 1.0).abs() < 1e-6, "{q}");
    let mut p = HomCutPoint::default();
    assert_eq!(unsafe { hom_cut_eval(s, 0.5, &mut p) }, HomStatus::Ok);
    assert!((p.w - (-0.125f64).exp()).abs() < 1e-6);
    unsafe { hom_state_free(s) };

    let mut irregular = omega.clone();
    irregular[10] += 0.003;
    assert_eq!(
        unsafe { hom_state_tabulated(irregular.as_ptr(), re.as_ptr(), im.as_ptr(), n, &mut s) },
        HomStatus::Grid
    );

    assert_eq!(
        unsafe { hom_state_cat_from_channels(1530.0, 1560.0, 5.0, 1544.8, &mut s) },
        HomStatus::Ok
    );
    let mut mx = HomFisherMax::default();
    assert_eq!(unsafe { hom_max_fisher(s, 0.994, &mut mx) }, HomStatus::Ok);
    let mut q = 0.0;
    unsafe { hom_state_qfi(s, &mut q) };
    assert!((mx.f_tilde / q - 0.97).abs() < 0.02);
    unsafe { hom_state_free(s) };
}
