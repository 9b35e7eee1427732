use std::ffi::CStr;
use std::ptr;

use gpac_ffi::*;

fn blobs() -> (Vec<f64>, Vec<i64>, usize) {
    let data = gpac::synth::BlobSpec::grid(3, 50, 10.0, 1.0).generate(2).unwrap();
    (data.features().to_vec(), data.labels().unwrap().to_vec(), data.n())
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(gpac_last_error_message()) }.to_string_lossy().into_owned()
}

#[test]
fn fit_through_handles() {
    let (features, labels, n) = blobs();
    unsafe {
        let mut ds = ptr::null_mut();
        assert_eq!(gpac_dataset_new(features.as_ptr(), n, 2, labels.as_ptr(), &mut ds), GpacStatus::Ok);
        let params = gpac_params_default(3);
        let mut res = ptr::null_mut();
        assert_eq!(gpac_fit(ds, &params, &mut res), GpacStatus::Ok);
        assert_eq!(gpac_result_n(res), n);
        assert_eq!(gpac_result_clusters(res), 3);
        assert!(gpac_result_epochs(res) >= 1);

        let mut pred = vec![0usize; n];
        assert_eq!(gpac_result_labels(res, pred.as_mut_ptr(), n), GpacStatus::Ok);
        let mut probs = vec![0.0; n * 3];
        assert_eq!(gpac_result_probs(res, probs.as_mut_ptr(), n * 3), GpacStatus::Ok);
        for row in probs.chunks_exact(3) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }

        let pred: Vec<i64> = pred.iter().map(|&p| p as i64).collect();
        let mut acc = 0.0;
        assert_eq!(gpac_acc(pred.as_ptr(), labels.as_ptr(), n, &mut acc), GpacStatus::Ok);
        assert!(acc >= 0.99);
        let (mut nmi, mut ari) = (0.0, 0.0);
        assert_eq!(gpac_nmi(pred.as_ptr(), labels.as_ptr(), n, &mut nmi), GpacStatus::Ok);
        assert_eq!(gpac_ari(pred.as_ptr(), labels.as_ptr(), n, &mut ari), GpacStatus::Ok);
        assert!(nmi > 0.9 && ari > 0.9);

        gpac_result_free(res);
        gpac_dataset_free(ds);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    let (features, _, n) = blobs();
    unsafe {
        let mut ds = ptr::null_mut();
        assert_eq!(gpac_dataset_new(ptr::null(), n, 2, ptr::null(), &mut ds), GpacStatus::NullPointer);
        assert!(last_error().contains("null"));

        let bad = [1.0, f64::NAN, 2.0, 3.0];
        assert_eq!(gpac_dataset_new(bad.as_ptr(), 2, 2, ptr::null(), &mut ds), GpacStatus::InvalidDataset);
        assert!(!last_error().is_empty());

        assert_eq!(gpac_dataset_new(features.as_ptr(), n, 2, ptr::null(), &mut ds), GpacStatus::Ok);
        let mut params = gpac_params_default(3);
        params.m = 0.5;
        let mut res = ptr::null_mut();
        assert_eq!(gpac_fit(ds, &params, &mut res), GpacStatus::InvalidConfig);
        assert!(res.is_null());
        assert!(last_error().contains('m'), "{}", last_error());

        params = gpac_params_default(3);
        params.max_epochs = 2;
        assert_eq!(gpac_fit(ds, &params, &mut res), GpacStatus::Ok);
        let mut small = vec![0usize; 3];
        assert_eq!(gpac_result_labels(res, small.as_mut_ptr(), 3), GpacStatus::InvalidArgument);
        assert_eq!(gpac_result_labels(ptr::null(), small.as_mut_ptr(), 3), GpacStatus::NullPointer);
        assert_eq!(gpac_result_n(ptr::null()), 0);

        gpac_result_free(res);
        gpac_dataset_free(ds);
        gpac_dataset_free(ptr::null_mut());
        gpac_result_free(ptr::null_mut());
    }
}

#[test]
fn version_and_header() {
    let v = unsafe { CStr::from_ptr(gpac_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/gpac.h")).unwrap();
    for name in ["gpac_fit", "gpac_dataset_new", "gpac_result_probs", "gpac_last_error_message", "GpacParams"] {
        assert!(header.contains(name), "header lacks {name}");
    }
}
