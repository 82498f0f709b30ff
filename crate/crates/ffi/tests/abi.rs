use std::ffi::{CStr, CString};
use std::ptr;

use becv_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(becv_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn certify_preset_through_handles() {
    unsafe {
        let mut circuit = ptr::null_mut();
        assert_eq!(becv_circuit_preset(BecvPreset::BoundState, &mut circuit), BecvStatus::Ok);
        let mut state = ptr::null_mut();
        assert_eq!(becv_circuit_simulate(circuit, &mut state), BecvStatus::Ok);
        assert_eq!(becv_state_n_modes(state), 4);
        let spec = CString::new("1,4|2,3").unwrap();
        let mut partition = ptr::null_mut();
        assert_eq!(becv_partition_parse(spec.as_ptr(), 4, &mut partition), BecvStatus::Ok);
        let mut report = ptr::null_mut();
        assert_eq!(becv_certify(state, partition, 0.0, 0, &mut report), BecvStatus::Ok);
        let class = CStr::from_ptr(becv_report_classification(report)).to_str().unwrap();
        assert_eq!(class, "bound-entangled");
        assert!(becv_report_entanglement(report) > 0.01);
        let mut p = f64::NAN;
        assert_eq!(becv_ppt_measure(state, partition, &mut p), BecvStatus::Ok);
        assert_eq!(p, becv_report_ppt_margin(report));

        let mut json = ptr::null_mut();
        assert_eq!(becv_report_to_json(report, &mut json), BecvStatus::Ok);
        assert!(CStr::from_ptr(json).to_str().unwrap().contains("\"bound-entangled\""));
        becv_string_free(json);

        becv_report_free(report);
        becv_partition_free(partition);
        becv_state_free(state);
        becv_circuit_free(circuit);
    }
}

#[test]
fn state_round_trip_and_loss() {
    unsafe {
        let m = [0.5, 0.0, 0.0, 2.0];
        let mut state = ptr::null_mut();
        assert_eq!(becv_state_new(1, m.as_ptr(), 4, &mut state), BecvStatus::Ok);
        let mut lossy = ptr::null_mut();
        assert_eq!(becv_apply_loss(state, 0, 0.9, &mut lossy), BecvStatus::Ok);
        let mut out = [0.0; 4];
        assert_eq!(becv_state_matrix(lossy, out.as_mut_ptr(), 4), BecvStatus::Ok);
        assert_eq!(out, [0.55, 0.0, 0.0, 1.9]);
        let mut short = [0.0; 3];
        assert_eq!(becv_state_matrix(lossy, short.as_mut_ptr(), 3), BecvStatus::InvalidArgument);
        let mut margin = 0.0;
        assert_eq!(becv_physicality_margin(state, &mut margin), BecvStatus::Ok);
        assert!(margin.abs() < 1e-12);
        let mut nu = [0.0; 1];
        assert_eq!(becv_symplectic_eigenvalues(state, nu.as_mut_ptr(), 1), BecvStatus::Ok);
        assert!((nu[0] - 1.0).abs() < 1e-12);
        becv_state_free(lossy);
        becv_state_free(state);
    }
}

#[test]
fn errors_carry_status_and_message() {
    unsafe {
        let mut state = ptr::null_mut();
        let m = [1.0; 3];
        assert_eq!(becv_state_new(1, m.as_ptr(), 3, &mut state), BecvStatus::InvalidArgument);
        assert!(state.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(becv_state_new(1, ptr::null(), 4, &mut state), BecvStatus::NullPointer);
        assert_eq!(last_error(), "matrix is NULL");

        let bad = CString::new(r#"{"sources":[{"kind":"squeezed_thermal","v_min":0.5,"v_max":1.0}]}"#).unwrap();
        let mut circuit = ptr::null_mut();
        assert_eq!(becv_circuit_parse(bad.as_ptr(), &mut circuit), BecvStatus::Format);
        assert!(last_error().contains("source 1"), "{}", last_error());

        let path = CString::new("/nonexistent/cov.json").unwrap();
        assert_eq!(becv_state_read(path.as_ptr(), &mut state), BecvStatus::Io);

        // Freeing NULL is a no-op.
        becv_state_free(ptr::null_mut());
        becv_report_free(ptr::null_mut());
        becv_string_free(ptr::null_mut());
        assert!(becv_report_entanglement(ptr::null()).is_nan());
        assert!(becv_report_classification(ptr::null()).is_null());
    }
}

#[test]
fn dataset_and_bootstrap() {
    unsafe {
        let m = [1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0];
        let mut state = ptr::null_mut();
        assert_eq!(becv_state_new(2, m.as_ptr(), 16, &mut state), BecvStatus::Ok);
        let mut data = ptr::null_mut();
        assert_eq!(becv_dataset_generate(state, 1000, 7, &mut data), BecvStatus::Ok);
        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("d.bin").to_str().unwrap()).unwrap();
        assert_eq!(becv_dataset_write(data, path.as_ptr()), BecvStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(becv_dataset_read(path.as_ptr(), &mut back), BecvStatus::Ok);

        let spec = CString::new("1|2").unwrap();
        let mut partition = ptr::null_mut();
        assert_eq!(becv_partition_parse(spec.as_ptr(), 2, &mut partition), BecvStatus::Ok);
        let mut a = BecvBootstrapSummary::default();
        let mut b = BecvBootstrapSummary::default();
        assert_eq!(becv_bootstrap(data, partition, 5, 3, &mut a), BecvStatus::Ok);
        assert_eq!(becv_bootstrap(back, partition, 5, 3, &mut b), BecvStatus::Ok);
        assert_eq!(a.resample_count, 5);
        assert_eq!(a.e_mean.to_bits(), b.e_mean.to_bits());
        assert_eq!(becv_bootstrap(data, partition, 1, 3, &mut a), BecvStatus::Ok);
        assert!(a.significance_e.is_nan());

        becv_partition_free(partition);
        becv_dataset_free(back);
        becv_dataset_free(data);
        becv_state_free(state);
    }
}
