//! Dataset ingestion, synthetic generators, and model/report serialization.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DataMatrix;
use crate::seed;

/// CSV parsing options.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CsvOptions {
    pub delimiter: u8,
    pub has_header: bool,
    /// Zero-based column indices to drop (e.g. a label column).
    pub drop_columns: Vec<usize>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            has_header: false,
            drop_columns: Vec::new(),
        }
    }
}

/// Where a dataset comes from: a CSV file or a seeded synthetic generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DatasetSource {
    Csv {
        path: String,
        #[serde(default)]
        options: CsvOptions,
    },
    Wave {
        n: usize,
        m: usize,
        sigma_a: f64,
        sigma_b: f64,
        floor: f64,
        seed: u64,
    },
    LowRankSparse {
        n: usize,
        m: usize,
        rank: usize,
        fraction: f64,
        magnitude: f64,
        seed: u64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    #[serde(flatten)]
    pub source: DatasetSource,
}

impl DatasetSpec {
    pub fn resolve(&self) -> Result<DataMatrix> {
        let x = match &self.source {
            DatasetSource::Csv { path, options } => load_csv(Path::new(path), options)?,
            DatasetSource::Wave {
                n,
                m,
                sigma_a,
                sigma_b,
                floor,
                seed,
            } => synth_wave(*n, *m, *sigma_a, *sigma_b, *floor, *seed)?.0,
            DatasetSource::LowRankSparse {
                n,
                m,
                rank,
                fraction,
                magnitude,
                seed,
            } => synth_low_rank_sparse(*n, *m, *rank, *fraction, *magnitude, *seed)?.0,
        };
        if x.nrows() < 2 {
            return Err(Error::InsufficientSamples { n: x.nrows() });
        }
        Ok(x)
    }
}

/// Load a numeric CSV file into a DataMatrix.
pub fn load_csv(path: &Path, options: &CsvOptions) -> Result<DataMatrix> {
    let file = File::open(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(options.has_header)
        .flexible(false)
        .from_reader(BufReader::new(file));

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let header_offset = if options.has_header { 1 } else { 0 };
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
        let mut row = Vec::new();
        for (j, cell) in record.iter().enumerate() {
            if options.drop_columns.contains(&j) {
                continue;
            }
            let value: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                row: i + header_offset,
                col: j,
                value: cell.to_string(),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    row: i + header_offset,
                    col: j,
                    value: cell.to_string(),
                });
            }
            row.push(value);
        }
        rows.push(row);
    }
    DataMatrix::from_rows(&rows)
}

/// Write a matrix as a plain numeric CSV (no header).
pub fn save_matrix_csv(x: &DataMatrix, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for i in 0..x.nrows() {
        let row: Vec<String> = (0..x.ncols())
            .map(|j| format!("{:?}", x.inner()[(i, j)]))
            .collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Two-mode synthetic wave: orthonormal sinusoidal components with Gaussian
/// amplitudes plus an optional dense noise floor. Returns the matrix, the
/// true components, and the analytic eigenvalues (sigma_a^2, sigma_b^2).
pub fn synth_wave(
    n: usize,
    m: usize,
    sigma_a: f64,
    sigma_b: f64,
    floor: f64,
    seed_value: u64,
) -> Result<(DataMatrix, [DVector<f64>; 2], [f64; 2])> {
    if n < 2 || m < 3 {
        return Err(Error::InvalidInput("wave needs n >= 2 and m >= 3".into()));
    }
    if !(sigma_a > sigma_b) || !(sigma_b > 0.0) {
        return Err(Error::InvalidInput(
            "need sigma_a > sigma_b > 0 for a separated spectrum".into(),
        ));
    }
    if !(floor >= 0.0) {
        return Err(Error::InvalidInput("noise floor must be >= 0".into()));
    }
    // one and two full periods across the features; exactly orthogonal
    let mut u1 = DVector::from_fn(m, |j, _| (2.0 * std::f64::consts::PI * j as f64 / m as f64).sin());
    let mut u2 = DVector::from_fn(m, |j, _| (4.0 * std::f64::consts::PI * j as f64 / m as f64).sin());
    u1 /= u1.norm();
    u2 /= u2.norm();
    crate::linalg::orient_sign(&mut u1);
    crate::linalg::orient_sign(&mut u2);

    let mut rng = seed::rng(seed_value, &[seed::tag::SYNTH, 0]);
    let da = Normal::new(0.0, sigma_a).unwrap();
    let db = Normal::new(0.0, sigma_b).unwrap();
    let mut x = DMatrix::zeros(n, m);
    for i in 0..n {
        let a = da.sample(&mut rng);
        let b = db.sample(&mut rng);
        for j in 0..m {
            x[(i, j)] = a * u1[j] + b * u2[j];
        }
    }
    if floor > 0.0 {
        let de = Normal::new(0.0, floor).unwrap();
        for v in x.iter_mut() {
            *v += de.sample(&mut rng);
        }
    }
    Ok((
        DataMatrix::new(x)?,
        [u1, u2],
        [sigma_a * sigma_a, sigma_b * sigma_b],
    ))
}

/// Low-rank-plus-sparse fixture: L0 from Gaussian factors, S0 with a given
/// fraction of entries set to +/- magnitude. Returns (X, L0, S0).
pub fn synth_low_rank_sparse(
    n: usize,
    m: usize,
    rank: usize,
    fraction: f64,
    magnitude: f64,
    seed_value: u64,
) -> Result<(DataMatrix, DMatrix<f64>, DMatrix<f64>)> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidInput(format!(
            "fraction must be in [0,1], got {fraction}"
        )));
    }
    if rank == 0 || rank > n.min(m) {
        return Err(Error::InvalidRank {
            d: rank,
            max: n.min(m),
        });
    }
    let mut rng = seed::rng(seed_value, &[seed::tag::SYNTH, 1]);
    let std = Normal::new(0.0, 1.0).unwrap();
    let a = DMatrix::from_fn(n, rank, |_, _| std.sample(&mut rng));
    let b = DMatrix::from_fn(rank, m, |_, _| std.sample(&mut rng));
    let l0 = a * b;

    let count = ((fraction * (n * m) as f64).ceil() as usize).min(n * m);
    let positions = rand::seq::index::sample(&mut rng, n * m, count);
    let mut s0 = DMatrix::zeros(n, m);
    for pos in positions.iter() {
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        s0[(pos / m, pos % m)] = sign * magnitude;
    }
    let x = DataMatrix::new(&l0 + &s0)?;
    Ok((x, l0, s0))
}

/// Serialize any model or report to pretty JSON. Numeric fields round-trip
/// exactly (shortest f64 representation).
pub fn save_json<T: Serialize>(entity: &T, path: &Path) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(file, entity)
        .map_err(|e| Error::InvalidInput(format!("serialize: {e}")))?;
    Ok(())
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = BufReader::new(File::open(path)?);
    serde_json::from_reader(file).map_err(|e| Error::InvalidInput(format!("deserialize: {e}")))
}

/// One row of the trial-level report table: one (method, dataset, trial,
/// component) cell. A timed-out run contributes a single row with
/// `pct_rel_error = NaN`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ReportRow {
    pub method: String,
    pub dataset: String,
    pub noise_kind: String,
    pub noise_params: String,
    pub trial: usize,
    pub component_index: usize,
    pub pct_rel_error: f64,
    pub elapsed_s: f64,
    pub timed_out: bool,
}

/// Flatten per-run reports into table rows.
pub fn report_rows(reports: &[crate::eval::ErrorReport]) -> Vec<ReportRow> {
    let mut rows = Vec::new();
    for r in reports {
        if r.timed_out && r.errors.is_empty() {
            rows.push(ReportRow {
                method: r.method.clone(),
                dataset: r.dataset.clone(),
                noise_kind: r.noise_kind.clone(),
                noise_params: r.noise_params.clone(),
                trial: r.trial,
                component_index: 0,
                pct_rel_error: f64::NAN,
                elapsed_s: r.elapsed_s,
                timed_out: true,
            });
            continue;
        }
        for (component_index, &err) in r.errors.iter().enumerate() {
            rows.push(ReportRow {
                method: r.method.clone(),
                dataset: r.dataset.clone(),
                noise_kind: r.noise_kind.clone(),
                noise_params: r.noise_params.clone(),
                trial: r.trial,
                component_index,
                pct_rel_error: err,
                elapsed_s: r.elapsed_s,
                timed_out: r.timed_out,
            });
        }
    }
    rows
}

/// Write the trial-level report table as CSV. With `with_timing` the full
/// schema including `elapsed_s` is written; without it the table contains
/// only the deterministic columns, so reruns with the same seed produce
/// byte-identical files.
pub fn save_report(rows: &[ReportRow], path: &Path, with_timing: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    let header_full = [
        "method",
        "dataset",
        "noise_kind",
        "noise_params",
        "trial",
        "component_index",
        "pct_rel_error",
        "elapsed_s",
        "timed_out",
    ];
    let io_err = |e: csv::Error| Error::InvalidInput(format!("write report: {e}"));
    if with_timing {
        w.write_record(header_full).map_err(io_err)?;
    } else {
        let cols: Vec<&str> = header_full
            .iter()
            .copied()
            .filter(|&c| c != "elapsed_s")
            .collect();
        w.write_record(&cols).map_err(io_err)?;
    }
    for row in rows {
        let mut record = vec![
            row.method.clone(),
            row.dataset.clone(),
            row.noise_kind.clone(),
            row.noise_params.clone(),
            row.trial.to_string(),
            row.component_index.to_string(),
            format!("{:?}", row.pct_rel_error),
        ];
        if with_timing {
            record.push(format!("{:?}", row.elapsed_s));
        }
        record.push(row.timed_out.to_string());
        w.write_record(&record).map_err(io_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Read back a full-schema report table written by `save_report`.
pub fn load_report(path: &Path) -> Result<Vec<ReportRow>> {
    let mut reader = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let mut rows = Vec::new();
    for record in reader.deserialize() {
        let row: ReportRow =
            record.map_err(|e| Error::InvalidInput(format!("read report: {e}")))?;
        rows.push(row);
    }
    Ok(rows)
}
