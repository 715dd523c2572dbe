//! Minimal PGM (portable graymap) reader for the image-slice experiments.
//! Accepts plain (P2) and binary (P5) files, 8- or 16-bit.

use std::io;

use crate::linalg::DenseMatrix;

use super::super::linalg::io::MatrixIoError;

fn parse_err(message: impl Into<String>) -> MatrixIoError {
    MatrixIoError::Parse {
        line: 0,
        message: message.into(),
    }
}

/// Reads a PGM image into a matrix of raw intensity values.
pub fn read_pgm(bytes: &[u8]) -> Result<DenseMatrix, MatrixIoError> {
    let mut pos = 0usize;

    // Header tokens may be separated by whitespace and '#' comments.
    let next_token = |pos: &mut usize| -> Result<String, MatrixIoError> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if start == *pos {
            return Err(parse_err("unexpected end of PGM header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };

    let magic = next_token(&mut pos)?;
    let binary = match magic.as_str() {
        "P2" => false,
        "P5" => true,
        other => return Err(parse_err(format!("not a PGM file (magic {other:?})"))),
    };
    let cols: usize = next_token(&mut pos)?
        .parse()
        .map_err(|_| parse_err("bad width"))?;
    let rows: usize = next_token(&mut pos)?
        .parse()
        .map_err(|_| parse_err("bad height"))?;
    let maxval: u32 = next_token(&mut pos)?
        .parse()
        .map_err(|_| parse_err("bad maxval"))?;
    if maxval == 0 || maxval > 65_535 {
        return Err(parse_err(format!("unsupported maxval {maxval}")));
    }

    let count = rows * cols;
    let mut data = Vec::with_capacity(count);
    if binary {
        // Exactly one whitespace byte separates the header from the raster.
        pos += 1;
        let wide = maxval > 255;
        let need = count * if wide { 2 } else { 1 };
        if bytes.len() < pos + need {
            return Err(MatrixIoError::Io(io::Error::new(
                io::ErrorKind::UnexpectedEof,
                "truncated PGM raster",
            )));
        }
        for i in 0..count {
            let v = if wide {
                u16::from_be_bytes([bytes[pos + 2 * i], bytes[pos + 2 * i + 1]]) as f64
            } else {
                bytes[pos + i] as f64
            };
            data.push(v);
        }
    } else {
        for _ in 0..count {
            let v: f64 = next_token(&mut pos)?
                .parse()
                .map_err(|_| parse_err("bad raster value"))?;
            data.push(v);
        }
    }
    DenseMatrix::new(rows, cols, data).map_err(|e| parse_err(e.to_string()))
}

/// Writes a matrix as an 8-bit binary PGM, scaling values into [0, 255].
pub fn write_pgm(m: &DenseMatrix) -> Vec<u8> {
    let max = m.max_abs().max(1e-12);
    let mut out = format!("P5\n{} {}\n255\n", m.cols(), m.rows()).into_bytes();
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let v = (m.get(i, j).max(0.0) / max * 255.0).round() as u8;
            out.push(v);
        }
    }
    out
}
