//! Exercise the C ABI the way a foreign caller would: through raw
//! pointers and status codes only.

use std::ffi::CStr;
use std::ptr;

use epca_capi::*;

fn wave_buffer(n: usize, m: usize) -> Vec<f64> {
    // rank-2 oscillation plus a small deterministic ripple
    let mut data = Vec::with_capacity(n * m);
    for i in 0..n {
        let a = (i as f64 * 0.7).sin() * 3.0;
        let b = (i as f64 * 1.3).cos() * 1.5;
        for j in 0..m {
            let u1 = (2.0 * std::f64::consts::PI * j as f64 / m as f64).sin();
            let u2 = (4.0 * std::f64::consts::PI * j as f64 / m as f64).sin();
            data.push(a * u1 + b * u2 + 1e-3 * ((i * m + j) as f64).sin());
        }
    }
    data
}

fn make_matrix(data: &[f64], n: usize, m: usize) -> *mut EpcaMatrix {
    let mut handle = ptr::null_mut();
    let status = unsafe { epca_matrix_new(data.as_ptr(), n, m, &mut handle) };
    assert_eq!(status, EpcaStatus::Ok);
    assert!(!handle.is_null());
    handle
}

#[test]
fn matrix_roundtrip() {
    let data = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    let m = make_matrix(&data, 2, 3);
    unsafe {
        assert_eq!(epca_matrix_nrows(m), 2);
        assert_eq!(epca_matrix_ncols(m), 3);
        let mut out = [0.0; 6];
        assert_eq!(epca_matrix_copy(m, out.as_mut_ptr(), 6), EpcaStatus::Ok);
        assert_eq!(out, data);
        // wrong buffer size is a shape error
        assert_eq!(
            epca_matrix_copy(m, out.as_mut_ptr(), 5),
            EpcaStatus::ShapeError
        );
        epca_matrix_free(m);
    }
}

#[test]
fn invalid_input_sets_message() {
    let data = [1.0, f64::NAN];
    let mut handle = ptr::null_mut();
    let status = unsafe { epca_matrix_new(data.as_ptr(), 1, 2, &mut handle) };
    assert_eq!(status, EpcaStatus::InvalidInput);
    let msg = unsafe { CStr::from_ptr(epca_last_error_message()) };
    assert!(!msg.to_bytes().is_empty());
}

#[test]
fn null_arguments_are_rejected() {
    unsafe {
        let mut handle = ptr::null_mut();
        assert_eq!(
            epca_matrix_new(ptr::null(), 2, 2, &mut handle),
            EpcaStatus::NullPointer
        );
        let data = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(
            epca_matrix_new(data.as_ptr(), 2, 2, ptr::null_mut()),
            EpcaStatus::NullPointer
        );
        // frees tolerate null
        epca_matrix_free(ptr::null_mut());
        epca_pca_free(ptr::null_mut());
        epca_ensemble_free(ptr::null_mut());
        epca_rpca_free(ptr::null_mut());
    }
}

#[test]
fn pca_through_the_abi() {
    let (n, m) = (200, 16);
    let data = wave_buffer(n, m);
    let matrix = make_matrix(&data, n, m);
    unsafe {
        let mut model = ptr::null_mut();
        assert_eq!(epca_pca_fit(matrix, 2, &mut model), EpcaStatus::Ok);
        assert_eq!(epca_pca_rank(model), 2);
        assert_eq!(epca_pca_dim(model), m);
        let mut comps = vec![0.0; 2 * m];
        assert_eq!(
            epca_pca_components(model, comps.as_mut_ptr(), comps.len()),
            EpcaStatus::Ok
        );
        for row in comps.chunks(m) {
            let norm: f64 = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-10);
        }
        let mut eig = [0.0; 2];
        assert_eq!(
            epca_pca_eigenvalues(model, eig.as_mut_ptr(), 2),
            EpcaStatus::Ok
        );
        assert!(eig[0] > eig[1] && eig[1] > 0.0);
        // rank larger than the dimension is rejected
        let mut bad = ptr::null_mut();
        assert_eq!(epca_pca_fit(matrix, m + 1, &mut bad), EpcaStatus::InvalidRank);
        epca_pca_free(model);
        epca_matrix_free(matrix);
    }
}

#[test]
fn ensemble_through_the_abi() {
    let (n, m) = (150, 12);
    let data = wave_buffer(n, m);
    let matrix = make_matrix(&data, n, m);
    unsafe {
        let mut options = epca_ensemble_options_default(2, 42);
        options.bags = 20;
        let mut model = ptr::null_mut();
        assert_eq!(epca_ensemble_fit(matrix, options, &mut model), EpcaStatus::Ok);
        assert_eq!(epca_ensemble_rank(model), 2);
        assert_eq!(epca_ensemble_dim(model), m);

        let mut comps = vec![0.0; 2 * m];
        assert_eq!(
            epca_ensemble_components(model, comps.as_mut_ptr(), comps.len()),
            EpcaStatus::Ok
        );
        let mut mean = [0.0; 2];
        let mut var = [0.0; 2];
        assert_eq!(
            epca_ensemble_eigenvalue_mean(model, mean.as_mut_ptr(), 2),
            EpcaStatus::Ok
        );
        assert_eq!(
            epca_ensemble_eigenvalue_variance(model, var.as_mut_ptr(), 2),
            EpcaStatus::Ok
        );
        assert!(mean[0] > mean[1]);
        assert!(var.iter().all(|&v| v >= 0.0));

        let mut band = vec![0.0; 2 * m];
        assert_eq!(
            epca_ensemble_confidence_band(model, 0, band.as_mut_ptr(), band.len()),
            EpcaStatus::Ok
        );
        let (lo, hi) = band.split_at(m);
        for (l, h) in lo.iter().zip(hi) {
            assert!(l <= h);
        }
        assert_eq!(
            epca_ensemble_confidence_band(model, 5, band.as_mut_ptr(), band.len()),
            EpcaStatus::InvalidRank
        );

        // same seed twice gives identical components
        let mut model2 = ptr::null_mut();
        assert_eq!(epca_ensemble_fit(matrix, options, &mut model2), EpcaStatus::Ok);
        let mut comps2 = vec![0.0; 2 * m];
        assert_eq!(
            epca_ensemble_components(model2, comps2.as_mut_ptr(), comps2.len()),
            EpcaStatus::Ok
        );
        assert_eq!(comps, comps2);

        epca_ensemble_free(model);
        epca_ensemble_free(model2);
        epca_matrix_free(matrix);
    }
}

#[test]
fn rpca_through_the_abi() {
    let (n, m) = (60, 20);
    let mut data = wave_buffer(n, m);
    data[7] += 10.0;
    data[333] -= 10.0;
    let matrix = make_matrix(&data, n, m);
    unsafe {
        let mut options = epca_rpca_options_default();
        options.alpha = 1.0 / (n as f64).sqrt();
        let mut result = ptr::null_mut();
        assert_eq!(epca_rpca_run(matrix, options, &mut result), EpcaStatus::Ok);
        assert!(epca_rpca_converged(result));
        assert!(!epca_rpca_timed_out(result));
        assert!(epca_rpca_iterations(result) >= 1);
        assert!(epca_rpca_residual(result) < 1e-6);

        let mut l = ptr::null_mut();
        let mut s = ptr::null_mut();
        assert_eq!(epca_rpca_low_rank(result, &mut l), EpcaStatus::Ok);
        assert_eq!(epca_rpca_sparse(result, &mut s), EpcaStatus::Ok);
        let mut lbuf = vec![0.0; n * m];
        let mut sbuf = vec![0.0; n * m];
        assert_eq!(epca_matrix_copy(l, lbuf.as_mut_ptr(), n * m), EpcaStatus::Ok);
        assert_eq!(epca_matrix_copy(s, sbuf.as_mut_ptr(), n * m), EpcaStatus::Ok);
        // L + S reproduces X up to the solver tolerance
        let mut worst: f64 = 0.0;
        for i in 0..n * m {
            worst = worst.max((lbuf[i] + sbuf[i] - data[i]).abs());
        }
        assert!(worst < 1e-4, "max |L+S-X| = {worst}");
        // the injected spikes land in S
        assert!(sbuf[7].abs() > 5.0);
        assert!(sbuf[333].abs() > 5.0);

        epca_matrix_free(l);
        epca_matrix_free(s);
        epca_rpca_free(result);
        epca_matrix_free(matrix);
    }
}

#[test]
fn invalid_rpca_options_rejected() {
    let data = [1.0, 0.0, 0.0, 1.0];
    let matrix = make_matrix(&data, 2, 2);
    unsafe {
        let mut options = epca_rpca_options_default();
        options.alpha = 0.0;
        let mut result = ptr::null_mut();
        assert_eq!(
            epca_rpca_run(matrix, options, &mut result),
            EpcaStatus::InvalidInput
        );
        epca_matrix_free(matrix);
    }
}
