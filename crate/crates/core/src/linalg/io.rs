//! Matrix file formats.
//!
//! Two interchangeable encodings:
//! * CSV, one matrix row per line, comma separated.
//! * A binary layout: the 8-byte magic `L1HMAT00`, two little-endian `u64`
//!   counts (rows, cols), then `rows*cols` little-endian IEEE-754 doubles in
//!   row-major order. The binary round trip is bit exact.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::dense::DenseMatrix;

pub const BINARY_MAGIC: &[u8; 8] = b"L1HMAT00";

#[derive(Debug, Error)]
pub enum MatrixIoError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("bad binary header: {0}")]
    BadHeader(String),
    #[error("invalid matrix: {0}")]
    Invalid(String),
}

fn invalid(e: crate::error::SolverError) -> MatrixIoError {
    MatrixIoError::Invalid(e.to_string())
}

pub fn write_csv(m: &DenseMatrix, w: &mut impl Write) -> Result<(), MatrixIoError> {
    for i in 0..m.rows() {
        let line = m
            .row(i)
            .iter()
            .map(|v| format!("{v:?}"))
            .collect::<Vec<_>>()
            .join(",");
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_csv(r: &mut impl Read) -> Result<DenseMatrix, MatrixIoError> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut count = 0;
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| MatrixIoError::Parse {
                line: lineno + 1,
                message: format!("cannot parse {field:?} as a real number"),
            })?;
            data.push(v);
            count += 1;
        }
        match cols {
            None => cols = Some(count),
            Some(c) if c != count => {
                return Err(MatrixIoError::Parse {
                    line: lineno + 1,
                    message: format!("expected {c} fields, found {count}"),
                })
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = cols.ok_or(MatrixIoError::Parse {
        line: 0,
        message: "empty input".into(),
    })?;
    DenseMatrix::new(rows, cols, data).map_err(invalid)
}

pub fn write_binary(m: &DenseMatrix, w: &mut impl Write) -> Result<(), MatrixIoError> {
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&(m.rows() as u64).to_le_bytes())?;
    w.write_all(&(m.cols() as u64).to_le_bytes())?;
    for v in m.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary(r: &mut impl Read) -> Result<DenseMatrix, MatrixIoError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != BINARY_MAGIC {
        return Err(MatrixIoError::BadHeader(format!(
            "magic mismatch: {magic:02x?}"
        )));
    }
    let mut buf8 = [0u8; 8];
    r.read_exact(&mut buf8)?;
    let rows = u64::from_le_bytes(buf8) as usize;
    r.read_exact(&mut buf8)?;
    let cols = u64::from_le_bytes(buf8) as usize;
    let count = rows
        .checked_mul(cols)
        .ok_or_else(|| MatrixIoError::BadHeader("size overflow".into()))?;
    let mut data = Vec::with_capacity(count);
    for _ in 0..count {
        r.read_exact(&mut buf8)?;
        data.push(f64::from_le_bytes(buf8));
    }
    DenseMatrix::new(rows, cols, data).map_err(invalid)
}

/// Reads a matrix file, sniffing the binary magic and falling back to CSV.
pub fn read_matrix_file(path: &Path) -> Result<DenseMatrix, MatrixIoError> {
    let bytes = fs::read(path)?;
    if bytes.len() >= 8 && &bytes[..8] == BINARY_MAGIC {
        read_binary(&mut &bytes[..])
    } else {
        read_csv(&mut &bytes[..])
    }
}

/// Writes a matrix file; `binary` selects the encoding.
pub fn write_matrix_file(m: &DenseMatrix, path: &Path, binary: bool) -> Result<(), MatrixIoError> {
    let mut buf = Vec::new();
    if binary {
        write_binary(m, &mut buf)?;
    } else {
        write_csv(m, &mut buf)?;
    }
    fs::write(path, buf)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DenseMatrix {
        DenseMatrix::new(
            2,
            3,
            vec![1.0, -2.5, 3.25e-17, f64::MIN_POSITIVE, 4.0, -0.0],
        )
        .unwrap()
    }

    #[test]
    fn binary_roundtrip_is_bit_exact() {
        let m = sample();
        let mut buf = Vec::new();
        write_binary(&m, &mut buf).unwrap();
        let m2 = read_binary(&mut &buf[..]).unwrap();
        assert_eq!(m.rows(), m2.rows());
        assert_eq!(m.cols(), m2.cols());
        for (a, b) in m.data().iter().zip(m2.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        let mut buf2 = Vec::new();
        write_binary(&m2, &mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn csv_roundtrip_preserves_values() {
        let m = sample();
        let mut buf = Vec::new();
        write_csv(&m, &mut buf).unwrap();
        let m2 = read_csv(&mut &buf[..]).unwrap();
        for (a, b) in m.data().iter().zip(m2.data()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn csv_rejects_ragged_rows() {
        let text = b"1,2,3\n4,5\n";
        assert!(read_csv(&mut &text[..]).is_err());
    }

    #[test]
    fn binary_rejects_bad_magic() {
        let bytes = b"NOTMAGIC\x00\x00";
        assert!(read_binary(&mut &bytes[..]).is_err());
    }
}
