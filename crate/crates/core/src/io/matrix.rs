//! Dense matrices and vectors from MatrixMarket (`.mtx`) or CSV files.

use std::fs::File;
use std::path::Path;

use nalgebra::DMatrix;
use nalgebra_sparse::io::{load_coo_from_matrix_market_file, save_to_matrix_market_file};
use nalgebra_sparse::CooMatrix;

use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::linalg::RowMatrix;
use crate::losses::LossFamily;

fn is_mtx(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("mtx"))
}

fn parse_err(path: &Path, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("{}: {msg}", path.display()))
}

fn read_mtx(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let coo: CooMatrix<f64> =
        load_coo_from_matrix_market_file(path).map_err(|e| parse_err(path, e))?;
    let dense = DMatrix::from(&coo);
    let (m, n) = dense.shape();
    let mut data = Vec::with_capacity(m * n);
    for i in 0..m {
        data.extend(dense.row(i).iter());
    }
    Ok((m, n, data))
}

/// Numeric CSV rows. A first row that does not parse is taken as a header;
/// lines starting with `#` are comments.
fn read_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| parse_err(path, e))?;
    let mut rows = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| parse_err(path, e))?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(r) => rows.push(r),
            Err(_) if k == 0 => continue,
            Err(e) => return Err(parse_err(path, format!("record {}: {e}", k + 1))),
        }
    }
    Ok(rows)
}

fn require_file(path: &Path) -> Result<()> {
    if !path.is_file() {
        return Err(Error::Config(format!(
            "{}: not a readable file",
            path.display()
        )));
    }
    Ok(())
}

/// Reads a dense matrix. `.mtx` files may be coordinate or array format;
/// anything else is read as CSV with one row per line.
pub fn read_matrix(path: impl AsRef<Path>) -> Result<RowMatrix> {
    let path = path.as_ref();
    require_file(path)?;
    if is_mtx(path) {
        let (m, n, data) = read_mtx(path)?;
        return RowMatrix::new(m, n, data);
    }
    let rows = read_csv(path)?;
    if rows.is_empty() {
        return Err(parse_err(path, "no numeric rows"));
    }
    if let Some(k) = rows.iter().position(|r| r.len() != rows[0].len()) {
        return Err(parse_err(
            path,
            format!(
                "row {} has {} fields, expected {}",
                k + 1,
                rows[k].len(),
                rows[0].len()
            ),
        ));
    }
    RowMatrix::from_rows(&rows)
}

/// Reads a vector stored as a single row or a single column.
pub fn read_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    require_file(path)?;
    let (m, n, data) = if is_mtx(path) {
        read_mtx(path)?
    } else {
        let rows = read_csv(path)?;
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(parse_err(path, "ragged rows"));
        }
        (m, n, rows.concat())
    };
    if m != 1 && n != 1 {
        return Err(parse_err(
            path,
            format!("expected a vector, found a {m}x{n} matrix"),
        ));
    }
    Ok(data)
}

/// Writes a matrix as MatrixMarket coordinate (`.mtx`) or CSV. Values are
/// written in shortest round-trip form.
pub fn write_matrix(path: impl AsRef<Path>, a: &RowMatrix) -> Result<()> {
    let path = path.as_ref();
    if is_mtx(path) {
        let mut coo = CooMatrix::new(a.rows(), a.cols());
        for i in 0..a.rows() {
            for (j, &v) in a.row(i).iter().enumerate() {
                if v != 0.0 {
                    coo.push(i, j, v);
                }
            }
        }
        save_to_matrix_market_file(&coo, path)?;
        return Ok(());
    }
    let mut w = csv::Writer::from_writer(File::create(path)?);
    for i in 0..a.rows() {
        w.write_record(a.row(i).iter().map(|v| v.to_string()))
            .map_err(|e| parse_err(path, e))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a column vector.
pub fn write_vector(path: impl AsRef<Path>, v: &[f64]) -> Result<()> {
    let a = RowMatrix::new(v.len(), 1, v.to_vec())?;
    write_matrix(path, &a)
}

/// Matrix file, optional shift file (zeros when absent) and loss JSON.
pub fn load_instance(
    matrix: impl AsRef<Path>,
    shift: Option<&Path>,
    loss_json: &str,
) -> Result<ProblemInstance> {
    let a = read_matrix(matrix)?;
    let b = shift.map(read_vector).transpose()?;
    let loss = LossFamily::from_json(loss_json)?;
    ProblemInstance::new(a, b, loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    const MTX_3X2: &str =
        "%%MatrixMarket matrix coordinate real general\n3 2 4\n1 1 1.5\n2 2 -2\n3 1 0.25\n3 2 4\n";

    #[test]
    fn matrix_market_with_shift() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.mtx");
        let b = dir.path().join("b.csv");
        fs::write(&a, MTX_3X2).unwrap();
        fs::write(&b, "1\n2\n3\n").unwrap();
        let inst = load_instance(&a, Some(&b), r#"{"kind":"huber"}"#).unwrap();
        assert_eq!((inst.rows(), inst.cols()), (3, 2));
        assert_eq!(inst.matrix().row(2), &[0.25, 4.0]);
        assert_eq!(inst.shift(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn absent_shift_is_zero_and_short_shift_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.mtx");
        fs::write(&a, MTX_3X2).unwrap();
        let inst = load_instance(&a, None, r#"{"kind":"power","p":1.5}"#).unwrap();
        assert_eq!(inst.shift(), &[0.0; 3]);
        let b = dir.path().join("b.csv");
        fs::write(&b, "1,2\n").unwrap();
        assert!(matches!(
            load_instance(&a, Some(&b), r#"{"kind":"huber"}"#),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn zero_row_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        fs::write(&a, "x,y\n1,0\n0,0\n").unwrap();
        assert!(matches!(
            load_instance(&a, None, r#"{"kind":"huber"}"#),
            Err(Error::ZeroRow(1))
        ));
    }

    #[test]
    fn malformed_files() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        fs::write(&a, "1,2\n3,oops\n").unwrap();
        assert!(matches!(read_matrix(&a), Err(Error::Parse(_))));
        let m = dir.path().join("m.mtx");
        fs::write(&m, "not a header\n").unwrap();
        assert!(matches!(read_matrix(&m), Err(Error::Parse(_))));
    }

    #[test]
    fn write_read_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let a = RowMatrix::from_rows(&[vec![0.1, 0.0], vec![1.0 / 3.0, -7e-300]]).unwrap();
        for name in ["a.mtx", "a.csv"] {
            let p = dir.path().join(name);
            write_matrix(&p, &a).unwrap();
            assert_eq!(read_matrix(&p).unwrap(), a);
        }
        let p = dir.path().join("v.mtx");
        write_vector(&p, &[1.0, 0.0, -2.5]).unwrap();
        assert_eq!(read_vector(&p).unwrap(), vec![1.0, 0.0, -2.5]);
    }
}
