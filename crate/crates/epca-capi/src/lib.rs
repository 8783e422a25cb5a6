//! C ABI for the epca toolkit: opaque handles, integer error codes and a
//! thread-local last-error message. The header is generated by cbindgen at
//! build time into `include/epca.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use epca::epca::EpcaModel;
use epca::kmeans::KmeansParams;
use epca::pca::PcaModel;
use epca::rpca::{rpca_ialm, RpcaConfig, RpcaResult};
use epca::{fit_epca, fit_pca, DataMatrix, EpcaConfig, Error};

/// Status code returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpcaStatus {
    Ok = 0,
    InvalidInput = 1,
    ShapeError = 2,
    InvalidRank = 3,
    IoError = 4,
    NullPointer = 5,
    Panic = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> EpcaStatus {
    match err {
        Error::ShapeError(_) => EpcaStatus::ShapeError,
        Error::InvalidRank { .. } => EpcaStatus::InvalidRank,
        Error::Io(_) => EpcaStatus::IoError,
        _ => EpcaStatus::InvalidInput,
    }
}

/// Message for the most recent error on this thread. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn epca_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

fn guard<F: FnOnce() -> Result<(), (EpcaStatus, String)>>(f: F) -> EpcaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EpcaStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            EpcaStatus::Panic
        }
    }
}

fn lib_err(err: Error) -> (EpcaStatus, String) {
    (status_of(&err), err.to_string())
}

fn null_err(what: &str) -> (EpcaStatus, String) {
    (EpcaStatus::NullPointer, format!("{what} is null"))
}

/// Opaque row-major matrix of samples by features.
pub struct EpcaMatrix(DataMatrix);
/// Opaque classical PCA model.
pub struct EpcaPcaModel(PcaModel);
/// Opaque ensemble PCA model with uncertainty bands.
pub struct EpcaEnsembleModel(EpcaModel);
/// Opaque Robust PCA decomposition result.
pub struct EpcaRpcaResult(RpcaResult);

/// Ensemble PCA parameters. `bag_size = 0` uses the dataset size.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct EpcaEnsembleOptions {
    pub bags: usize,
    pub bag_size: usize,
    pub d: usize,
    pub seed: u64,
    pub confidence: f64,
}

/// Robust PCA parameters. `mu0 = 0` picks the scale automatically;
/// `timeout < 0` disables the wall-clock budget.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct EpcaRpcaOptions {
    pub alpha: f64,
    pub mu0: f64,
    pub rho: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub timeout: f64,
}

/// Default ensemble options: 100 bags, full-size bags, 95% bands.
#[no_mangle]
pub extern "C" fn epca_ensemble_options_default(d: usize, seed: u64) -> EpcaEnsembleOptions {
    EpcaEnsembleOptions {
        bags: 100,
        bag_size: 0,
        d,
        seed,
        confidence: 0.95,
    }
}

/// Default RPCA options: alpha 0.20, 120 s budget.
#[no_mangle]
pub extern "C" fn epca_rpca_options_default() -> EpcaRpcaOptions {
    let c = RpcaConfig::default();
    EpcaRpcaOptions {
        alpha: c.alpha,
        mu0: 0.0,
        rho: c.rho,
        tol: c.tol,
        max_iter: c.max_iter,
        timeout: c.timeout.unwrap_or(-1.0),
    }
}

/// Create a matrix from a row-major buffer of `nrows * ncols` doubles.
///
/// # Safety
/// `data` must point to `nrows * ncols` readable doubles and `out` must be
/// a valid location for one pointer.
#[no_mangle]
pub unsafe extern "C" fn epca_matrix_new(
    data: *const f64,
    nrows: usize,
    ncols: usize,
    out: *mut *mut EpcaMatrix,
) -> EpcaStatus {
    guard(|| {
        if data.is_null() {
            return Err(null_err("data"));
        }
        if out.is_null() {
            return Err(null_err("out"));
        }
        let slice = std::slice::from_raw_parts(data, nrows * ncols);
        let matrix = nalgebra::DMatrix::from_row_slice(nrows, ncols, slice);
        let dm = DataMatrix::new(matrix).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(EpcaMatrix(dm)));
        Ok(())
    })
}

/// # Safety
/// `matrix` must be a pointer from this library or null.
#[no_mangle]
pub unsafe extern "C" fn epca_matrix_free(matrix: *mut EpcaMatrix) {
    if !matrix.is_null() {
        drop(Box::from_raw(matrix));
    }
}

/// # Safety
/// `matrix` must be a valid matrix handle.
#[no_mangle]
pub unsafe extern "C" fn epca_matrix_nrows(matrix: *const EpcaMatrix) -> usize {
    matrix.as_ref().map_or(0, |m| m.0.nrows())
}

/// # Safety
/// `matrix` must be a valid matrix handle.
#[no_mangle]
pub unsafe extern "C" fn epca_matrix_ncols(matrix: *const EpcaMatrix) -> usize {
    matrix.as_ref().map_or(0, |m| m.0.ncols())
}

/// Copy the matrix into a caller buffer of `nrows * ncols` doubles,
/// row-major.
///
/// # Safety
/// `out` must hold at least `nrows * ncols` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn epca_matrix_copy(
    matrix: *const EpcaMatrix,
    out: *mut f64,
    len: usize,
) -> EpcaStatus {
    guard(|| {
        let m = matrix.as_ref().ok_or_else(|| null_err("matrix"))?;
        if out.is_null() {
            return Err(null_err("out"));
        }
        let (n, c) = (m.0.nrows(), m.0.ncols());
        if len != n * c {
            return Err((
                EpcaStatus::ShapeError,
                format!("buffer holds {len} values, matrix has {}", n * c),
            ));
        }
        let dst = std::slice::from_raw_parts_mut(out, len);
        for i in 0..n {
            for j in 0..c {
                dst[i * c + j] = m.0.inner()[(i, j)];
            }
        }
        Ok(())
    })
}

/// Fit classical PCA with `d` components.
///
/// # Safety
/// `matrix` must be a valid handle and `out` a valid location.
#[no_mangle]
pub unsafe extern "C" fn epca_pca_fit(
    matrix: *const EpcaMatrix,
    d: usize,
    out: *mut *mut EpcaPcaModel,
) -> EpcaStatus {
    guard(|| {
        let m = matrix.as_ref().ok_or_else(|| null_err("matrix"))?;
        if out.is_null() {
            return Err(null_err("out"));
        }
        let model = fit_pca(&m.0, d).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(EpcaPcaModel(model)));
        Ok(())
    })
}

/// # Safety
/// `model` must be a pointer from this library or null.
#[no_mangle]
pub unsafe extern "C" fn epca_pca_free(model: *mut EpcaPcaModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a valid model handle.
#[no_mangle]
pub unsafe extern "C" fn epca_pca_rank(model: *const EpcaPcaModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.components.len())
}

/// # Safety
/// `model` must be a valid model handle.
#[no_mangle]
pub unsafe extern "C" fn epca_pca_dim(model: *const EpcaPcaModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.mean.len())
}

unsafe fn copy_vectors(
    rows: &[nalgebra::DVector<f64>],
    out: *mut f64,
    len: usize,
) -> Result<(), (EpcaStatus, String)> {
    if out.is_null() {
        return Err(null_err("out"));
    }
    let total: usize = rows.iter().map(|r| r.len()).sum();
    if len != total {
        return Err((
            EpcaStatus::ShapeError,
            format!("buffer holds {len} values, expected {total}"),
        ));
    }
    let dst = std::slice::from_raw_parts_mut(out, len);
    let mut offset = 0;
    for row in rows {
        dst[offset..offset + row.len()].copy_from_slice(row.as_slice());
        offset += row.len();
    }
    Ok(())
}

unsafe fn copy_scalars(values: &[f64], out: *mut f64, len: usize) -> Result<(), (EpcaStatus, String)> {
    if out.is_null() {
        return Err(null_err("out"));
    }
    if len != values.len() {
        return Err((
            EpcaStatus::ShapeError,
            format!("buffer holds {len} values, expected {}", values.len()),
        ));
    }
    std::slice::from_raw_parts_mut(out, len).copy_from_slice(values);
    Ok(())
}

/// Copy the `d` unit components, row-major (`d * dim` doubles).
///
/// # Safety
/// `out` must hold `epca_pca_rank * epca_pca_dim` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn epca_pca_components(
    model: *const EpcaPcaModel,
    out: *mut f64,
    len: usize,
) -> EpcaStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null_err("model"))?;
        copy_vectors(&m.0.components, out, len)
    })
}

/// Copy the `d` eigenvalues, descending.
///
/// # Safety
/// `out` must hold `epca_pca_rank` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn epca_pca_eigenvalues(
    model: *const EpcaPcaModel,
    out: *mut f64,
    len: usize,
) -> EpcaStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null_err("model"))?;
        copy_scalars(&m.0.eigenvalues, out, len)
    })
}

/// Fit ensemble PCA.
///
/// # Safety
/// `matrix` must be a valid handle and `out` a valid location.
#[no_mangle]
pub unsafe extern "C" fn epca_ensemble_fit(
    matrix: *const EpcaMatrix,
    options: EpcaEnsembleOptions,
    out: *mut *mut EpcaEnsembleModel,
) -> EpcaStatus {
    guard(|| {
        let m = matrix.as_ref().ok_or_else(|| null_err("matrix"))?;
        if out.is_null() {
            return Err(null_err("out"));
        }
        let config = EpcaConfig {
            bags: options.bags,
            bag_size: (options.bag_size > 0).then_some(options.bag_size),
            d: options.d,
            seed: options.seed,
            kmeans: KmeansParams::default(),
            confidence: options.confidence,
        };
        let model = fit_epca(&m.0, &config).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(EpcaEnsembleModel(model)));
        Ok(())
    })
}

/// # Safety
/// `model` must be a pointer from this library or null.
#[no_mangle]
pub unsafe extern "C" fn epca_ensemble_free(model: *mut EpcaEnsembleModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a valid model handle.
#[no_mangle]
pub unsafe extern "C" fn epca_ensemble_rank(model: *const EpcaEnsembleModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.components.len())
}

/// # Safety
/// `model` must be a valid model handle.
#[no_mangle]
pub unsafe extern "C" fn epca_ensemble_dim(model: *const EpcaEnsembleModel) -> usize {
    model
        .as_ref()
        .and_then(|m| m.0.components.first())
        .map_or(0, |c| c.len())
}

/// Copy the aggregated unit components, row-major (`d * dim` doubles).
///
/// # Safety
/// `out` must hold `rank * dim` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn epca_ensemble_components(
    model: *const EpcaEnsembleModel,
    out: *mut f64,
    len: usize,
) -> EpcaStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null_err("model"))?;
        copy_vectors(&m.0.components, out, len)
    })
}

/// Copy the per-component eigenvalue means.
///
/// # Safety
/// `out` must hold `rank` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn epca_ensemble_eigenvalue_mean(
    model: *const EpcaEnsembleModel,
    out: *mut f64,
    len: usize,
) -> EpcaStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null_err("model"))?;
        copy_scalars(&m.0.eigenvalue_mean, out, len)
    })
}

/// Copy the per-component eigenvalue variances.
///
/// # Safety
/// `out` must hold `rank` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn epca_ensemble_eigenvalue_variance(
    model: *const EpcaEnsembleModel,
    out: *mut f64,
    len: usize,
) -> EpcaStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null_err("model"))?;
        copy_scalars(&m.0.eigenvalue_variance, out, len)
    })
}

/// Copy the confidence band for component `k`: `dim` lower bounds followed
/// by `dim` upper bounds.
///
/// # Safety
/// `out` must hold `2 * dim` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn epca_ensemble_confidence_band(
    model: *const EpcaEnsembleModel,
    k: usize,
    out: *mut f64,
    len: usize,
) -> EpcaStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null_err("model"))?;
        let (lo, hi) = m.0.component_ci.get(k).ok_or((
            EpcaStatus::InvalidRank,
            format!("component {k} out of range"),
        ))?;
        copy_vectors(&[lo.clone(), hi.clone()], out, len)
    })
}

/// Run Robust PCA (principal component pursuit).
///
/// # Safety
/// `matrix` must be a valid handle and `out` a valid location.
#[no_mangle]
pub unsafe extern "C" fn epca_rpca_run(
    matrix: *const EpcaMatrix,
    options: EpcaRpcaOptions,
    out: *mut *mut EpcaRpcaResult,
) -> EpcaStatus {
    guard(|| {
        let m = matrix.as_ref().ok_or_else(|| null_err("matrix"))?;
        if out.is_null() {
            return Err(null_err("out"));
        }
        let config = RpcaConfig {
            alpha: options.alpha,
            mu0: (options.mu0 > 0.0).then_some(options.mu0),
            rho: options.rho,
            tol: options.tol,
            max_iter: options.max_iter,
            timeout: (options.timeout >= 0.0).then_some(options.timeout),
        };
        let result = rpca_ialm(&m.0, &config).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(EpcaRpcaResult(result)));
        Ok(())
    })
}

/// # Safety
/// `result` must be a pointer from this library or null.
#[no_mangle]
pub unsafe extern "C" fn epca_rpca_free(result: *mut EpcaRpcaResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// # Safety
/// `result` must be a valid result handle.
#[no_mangle]
pub unsafe extern "C" fn epca_rpca_iterations(result: *const EpcaRpcaResult) -> usize {
    result.as_ref().map_or(0, |r| r.0.iterations)
}

/// # Safety
/// `result` must be a valid result handle.
#[no_mangle]
pub unsafe extern "C" fn epca_rpca_converged(result: *const EpcaRpcaResult) -> bool {
    result.as_ref().is_some_and(|r| r.0.converged)
}

/// # Safety
/// `result` must be a valid result handle.
#[no_mangle]
pub unsafe extern "C" fn epca_rpca_timed_out(result: *const EpcaRpcaResult) -> bool {
    result.as_ref().is_some_and(|r| r.0.timed_out)
}

/// # Safety
/// `result` must be a valid result handle.
#[no_mangle]
pub unsafe extern "C" fn epca_rpca_residual(result: *const EpcaRpcaResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.0.residual)
}

/// New matrix handle holding the low-rank estimate L.
///
/// # Safety
/// `result` must be a valid result handle and `out` a valid location.
#[no_mangle]
pub unsafe extern "C" fn epca_rpca_low_rank(
    result: *const EpcaRpcaResult,
    out: *mut *mut EpcaMatrix,
) -> EpcaStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null_err("result"))?;
        if out.is_null() {
            return Err(null_err("out"));
        }
        *out = Box::into_raw(Box::new(EpcaMatrix(r.0.l.clone())));
        Ok(())
    })
}

/// New matrix handle holding the sparse estimate S.
///
/// # Safety
/// `result` must be a valid result handle and `out` a valid location.
#[no_mangle]
pub unsafe extern "C" fn epca_rpca_sparse(
    result: *const EpcaRpcaResult,
    out: *mut *mut EpcaMatrix,
) -> EpcaStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null_err("result"))?;
        if out.is_null() {
            return Err(null_err("out"));
        }
        *out = Box::into_raw(Box::new(EpcaMatrix(r.0.s.clone())));
        Ok(())
    })
}
