//! File export and import: MatrixMarket coordinate files for sparse
//! matrices, one-value-per-line CSV for vectors, spectrum CSVs with JSON
//! sidecars, and JSON solver reports.
//!
//! Floats are written in Rust's shortest round-trip form, so every file
//! written here parses back to bit-identical values; the round-trip tests
//! below hold to equality, not tolerance.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;
use crate::spectral::SpectrumReport;
use crate::symbols::PhysicalParams;

/// Writes a sparse matrix in MatrixMarket coordinate format (1-based
/// indices, `general` symmetry — boundary closures break symmetry, so no
/// storage is saved by declaring it).
pub fn write_matrix_market(path: impl AsRef<Path>, m: &CsrMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", m.nrows, m.ncols, m.nnz())?;
    for row in 0..m.nrows {
        for k in m.indptr[row]..m.indptr[row + 1] {
            writeln!(w, "{} {} {}", row + 1, m.indices[k] + 1, m.values[k])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a MatrixMarket coordinate file written by [`write_matrix_market`]
/// (real, general; `%`-comment lines are skipped).
pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<CsrMatrix> {
    let path = path.as_ref();
    let mut lines = BufReader::new(File::open(path)?).lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if !header.starts_with("%%MatrixMarket matrix coordinate real") {
        return Err(Error::InvalidArgument(format!(
            "{} is not a real coordinate MatrixMarket file (header {header:?})",
            path.display()
        )));
    }
    let mut dims = None;
    let mut triplets = Vec::new();
    for line in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let mut parts = line.split_whitespace();
        if dims.is_none() {
            let nrows = parse_field(parts.next(), line)?;
            let ncols = parse_field(parts.next(), line)?;
            let nnz: usize = parse_field(parts.next(), line)?;
            dims = Some((nrows, ncols));
            triplets.reserve(nnz);
        } else {
            let i: usize = parse_field(parts.next(), line)?;
            let j: usize = parse_field(parts.next(), line)?;
            let v: f64 = parse_field(parts.next(), line)?;
            if i == 0 || j == 0 {
                return Err(Error::InvalidArgument(format!(
                    "coordinate entries are 1-based, got line {line:?}"
                )));
            }
            triplets.push((i - 1, j - 1, v));
        }
    }
    let (nrows, ncols) = dims.ok_or_else(|| {
        Error::InvalidArgument(format!("{} has no size line", path.display()))
    })?;
    csr_from_triplets(nrows, ncols, triplets)
}

fn parse_field<T: std::str::FromStr>(field: Option<&str>, line: &str) -> Result<T> {
    field
        .and_then(|f| f.parse().ok())
        .ok_or_else(|| Error::InvalidArgument(format!("malformed MatrixMarket line {line:?}")))
}

fn csr_from_triplets(
    nrows: usize,
    ncols: usize,
    mut triplets: Vec<(usize, usize, f64)>,
) -> Result<CsrMatrix> {
    for &(i, j, _) in &triplets {
        if i >= nrows || j >= ncols {
            return Err(Error::DimensionMismatch(format!(
                "entry ({i}, {j}) outside declared {nrows}x{ncols} shape"
            )));
        }
    }
    triplets.sort_by_key(|&(i, j, _)| (i, j));
    let mut indptr = vec![0usize; nrows + 1];
    let mut indices = Vec::with_capacity(triplets.len());
    let mut values = Vec::with_capacity(triplets.len());
    for (i, j, v) in triplets {
        indptr[i + 1] += 1;
        indices.push(j);
        values.push(v);
    }
    for r in 0..nrows {
        indptr[r + 1] += indptr[r];
    }
    Ok(CsrMatrix { nrows, ncols, indptr, indices, values })
}

/// Writes a vector as CSV, one value per line.
pub fn write_vector_csv(path: impl AsRef<Path>, v: &DVector<f64>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for x in v.iter() {
        writeln!(w, "{x}")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a one-value-per-line CSV back into a vector.
pub fn read_vector_csv(path: impl AsRef<Path>) -> Result<DVector<f64>> {
    let mut out = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        out.push(line.parse::<f64>().map_err(|_| {
            Error::InvalidArgument(format!("non-numeric CSV line {line:?}"))
        })?);
    }
    Ok(DVector::from_vec(out))
}

/// The metadata half of a spectrum export: everything in the report except
/// the two value columns, which live in the CSV.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectrumMeta {
    pub label: String,
    pub n: usize,
    pub params: PhysicalParams,
    pub sup_discrepancy: f64,
    pub mean_discrepancy: f64,
}

impl From<&SpectrumReport> for SpectrumMeta {
    fn from(r: &SpectrumReport) -> Self {
        SpectrumMeta {
            label: r.label.clone(),
            n: r.n,
            params: r.params,
            sup_discrepancy: r.sup_discrepancy,
            mean_discrepancy: r.mean_discrepancy,
        }
    }
}

/// Writes a spectrum comparison as `index,matrix_value,symbol_value` CSV
/// plus a `.json` sidecar next to it carrying the metadata; returns the
/// sidecar path.
pub fn write_spectrum_report(csv_path: impl AsRef<Path>, report: &SpectrumReport) -> Result<PathBuf> {
    let csv_path = csv_path.as_ref();
    let mut w = BufWriter::new(File::create(csv_path)?);
    writeln!(w, "index,matrix_value,symbol_value")?;
    for (i, (m, s)) in report.matrix_values.iter().zip(&report.symbol_values).enumerate() {
        writeln!(w, "{i},{m},{s}")?;
    }
    w.flush()?;
    let sidecar = csv_path.with_extension("json");
    write_json(&sidecar, &SpectrumMeta::from(report))?;
    Ok(sidecar)
}

/// Reads the two value columns of a spectrum CSV back.
pub fn read_spectrum_csv(path: impl AsRef<Path>) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut matrix = Vec::new();
    let mut symbol = Vec::new();
    for (lineno, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if lineno == 0 {
            continue;
        }
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != 3 {
            return Err(Error::InvalidArgument(format!(
                "spectrum CSV line {lineno} has {} fields, expected 3",
                fields.len()
            )));
        }
        matrix.push(fields[1].parse::<f64>().map_err(|_| {
            Error::InvalidArgument(format!("bad matrix value on line {lineno}"))
        })?);
        symbol.push(fields[2].parse::<f64>().map_err(|_| {
            Error::InvalidArgument(format!("bad symbol value on line {lineno}"))
        })?);
    }
    Ok((matrix, symbol))
}

/// Serializes any serde value as pretty-printed JSON.
pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Deserializes a JSON file written by [`write_json`].
pub fn read_json<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

#[cfg(test)]
mod tests {
    use std::sync::atomic::{AtomicUsize, Ordering};

    use super::*;
    use crate::assembly::{assemble_saddle_system, SaddleSystem};
    use crate::grid::build_staggered_grid;

    static COUNTER: AtomicUsize = AtomicUsize::new(0);

    fn scratch_path(name: &str) -> PathBuf {
        let id = COUNTER.fetch_add(1, Ordering::Relaxed);
        std::env::temp_dir().join(format!("pipeflow-io-{}-{id}-{name}", std::process::id()))
    }

    fn small_system() -> SaddleSystem {
        let grid = build_staggered_grid(6, 1.0, |_| 0.025, 1.0).unwrap();
        assemble_saddle_system(&grid, 1, 3, None, 1000.0, 1e-3, 1.0).unwrap()
    }

    #[test]
    fn matrix_market_round_trips_exactly() {
        let sys = small_system();
        let csr = sys.momentum.to_csr();
        let path = scratch_path("momentum.mtx");
        write_matrix_market(&path, &csr).unwrap();
        let back = read_matrix_market(&path).unwrap();
        assert_eq!(back.nrows, csr.nrows);
        assert_eq!(back.ncols, csr.ncols);
        assert_eq!(back.indptr, csr.indptr);
        assert_eq!(back.indices, csr.indices);
        assert_eq!(back.values, csr.values);
        std::fs::remove_file(path).unwrap();
    }

    #[test]
    fn matrix_market_header_and_indices_are_one_based() {
        let csr = CsrMatrix {
            nrows: 2,
            ncols: 3,
            indptr: vec![0, 1, 2],
            indices: vec![2, 0],
            values: vec![1.5, -2.0],
        };
        let path = scratch_path("tiny.mtx");
        write_matrix_market(&path, &csr).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "%%MatrixMarket matrix coordinate real general");
        assert_eq!(lines[1], "2 3 2");
        assert_eq!(lines[2], "1 3 1.5");
        assert_eq!(lines[3], "2 1 -2");
        std::fs::remove_file(path).unwrap();
    }

    #[test]
    fn matrix_market_reader_rejects_foreign_headers() {
        let path = scratch_path("bad.mtx");
        std::fs::write(&path, "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n")
            .unwrap();
        assert!(matches!(read_matrix_market(&path), Err(Error::InvalidArgument(_))));
        std::fs::remove_file(path).unwrap();
    }

    #[test]
    fn vector_csv_round_trips_exactly() {
        let v = DVector::from_fn(17, |i, _| ((i as f64) * 0.7318).sin() * 1e-3);
        let path = scratch_path("vec.csv");
        write_vector_csv(&path, &v).unwrap();
        let back = read_vector_csv(&path).unwrap();
        assert_eq!(back, v);
        std::fs::remove_file(path).unwrap();
    }

    #[test]
    fn spectrum_export_writes_csv_and_sidecar() {
        use crate::spectral::SpectrumReport;
        use crate::symbols::PhysicalParams;

        let params = PhysicalParams::new(0.025, 1e-3, 1000.0, 1.0, 1.0 / 6.0).unwrap();
        let matrix_values = vec![0.5, 0.1, 0.4, 0.2];
        let branches = vec![vec![0.1, 0.2], vec![0.4, 0.5]];
        let report = SpectrumReport::new("laplacian", 6, params, matrix_values, &branches).unwrap();
        let csv = scratch_path("spectrum.csv");
        let sidecar = write_spectrum_report(&csv, &report).unwrap();

        let (matrix, symbol) = read_spectrum_csv(&csv).unwrap();
        assert_eq!(matrix, report.matrix_values);
        assert_eq!(symbol, report.symbol_values);

        let meta: SpectrumMeta = read_json(&sidecar).unwrap();
        assert_eq!(meta.label, "laplacian");
        assert_eq!(meta.n, 6);
        assert_eq!(meta.sup_discrepancy, report.sup_discrepancy);

        std::fs::remove_file(csv).unwrap();
        std::fs::remove_file(sidecar).unwrap();
    }
}
