//! On-disk formats.
//!
//! MREC (text measurement record):
//!
//! ```text
//! MREC 1 n=<n> m=<m> scheme=<kind> noise=<tag>
//! <u-hex> <v-hex> <value> <stderr>        (m lines)
//! ```
//!
//! DMAT (binary density matrix): the 8 ASCII bytes `DMAT0001` padded with NUL
//! to 16 bytes, a little-endian `u32` dimension `d`, then `d^2` entries as
//! little-endian `f64` pairs `(re, im)` in row-major order.

use std::io::{BufRead, BufReader, Read, Write};

use crate::error::{Result, TomoError};
use crate::pauli::PauliLabel;
use crate::sampling::{MeasurementRecord, NoiseModel, SamplingScheme, SchemeKind};
use crate::{CMatrix, C64};

pub const DMAT_MAGIC: [u8; 16] = *b"DMAT0001\0\0\0\0\0\0\0\0";

/// Largest dimension accepted when reading a DMAT file.
pub const DMAT_MAX_DIM: u32 = 1 << 14;

fn format_err(line: usize, msg: impl std::fmt::Display) -> TomoError {
    TomoError::Format(format!("line {line}: {msg}"))
}

pub fn write_mrec<W: Write>(mut w: W, record: &MeasurementRecord) -> Result<()> {
    let scheme = record.scheme();
    writeln!(
        w,
        "MREC 1 n={} m={} scheme={} noise={}",
        scheme.qubits(),
        record.len(),
        scheme.kind(),
        record.noise()
    )?;
    for ((p, v), s) in record.labels().iter().zip(record.values()).zip(record.stderr()) {
        writeln!(w, "{:x} {:x} {v:?} {s:?}", p.x_mask(), p.z_mask())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_mrec<R: Read>(r: R) -> Result<MeasurementRecord> {
    let mut lines = BufReader::new(r).lines();
    let header = match lines.next() {
        Some(line) => line?,
        None => return Err(format_err(1, "empty file")),
    };
    let mut fields = header.split_whitespace();
    if fields.next() != Some("MREC") || fields.next() != Some("1") {
        return Err(format_err(1, "expected header `MREC 1 ...`"));
    }
    let (mut n, mut m, mut kind, mut noise) = (None, None, None, None);
    for f in fields {
        let (key, value) = f
            .split_once('=')
            .ok_or_else(|| format_err(1, format!("malformed header field {f:?}")))?;
        let bad = |e: &dyn std::fmt::Display| format_err(1, format!("{key}: {e}"));
        match key {
            "n" => n = Some(value.parse::<u32>().map_err(|e| bad(&e))?),
            "m" => m = Some(value.parse::<usize>().map_err(|e| bad(&e))?),
            "scheme" => kind = Some(value.parse::<SchemeKind>().map_err(|e| bad(&e))?),
            "noise" => noise = Some(value.parse::<NoiseModel>().map_err(|e| bad(&e))?),
            other => return Err(format_err(1, format!("unknown header field {other:?}"))),
        }
    }
    let missing = |k: &str| format_err(1, format!("header lacks {k}="));
    let n = n.ok_or_else(|| missing("n"))?;
    let m = m.ok_or_else(|| missing("m"))?;
    let kind = kind.ok_or_else(|| missing("scheme"))?;
    let noise = noise.ok_or_else(|| missing("noise"))?;

    let mut labels = Vec::with_capacity(m.min(1 << 24));
    let mut values = Vec::with_capacity(labels.capacity());
    let mut stderr = Vec::with_capacity(labels.capacity());
    for (k, line) in lines.enumerate() {
        let lineno = k + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 4 {
            return Err(format_err(lineno, format!("expected 4 columns, found {}", cols.len())));
        }
        let u = u64::from_str_radix(cols[0], 16).map_err(|e| format_err(lineno, format!("u: {e}")))?;
        let v = u64::from_str_radix(cols[1], 16).map_err(|e| format_err(lineno, format!("v: {e}")))?;
        let label = PauliLabel::new(n, u, v).map_err(|e| format_err(lineno, e))?;
        let value: f64 = cols[2].parse().map_err(|e| format_err(lineno, format!("value: {e}")))?;
        let err: f64 = cols[3].parse().map_err(|e| format_err(lineno, format!("stderr: {e}")))?;
        labels.push(label);
        values.push(value);
        stderr.push(err);
    }
    if labels.len() != m {
        return Err(TomoError::Format(format!("header announces m={m} but {} rows follow", labels.len())));
    }
    let scheme = SamplingScheme::from_labels(n, kind, labels).map_err(|e| TomoError::Format(e.to_string()))?;
    MeasurementRecord::new(scheme, values, stderr, noise).map_err(|e| TomoError::Format(e.to_string()))
}

pub fn write_dmat<W: Write>(mut w: W, m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(TomoError::InvalidInput("DMAT stores square matrices only".into()));
    }
    let d = u32::try_from(m.nrows()).map_err(|_| TomoError::InvalidInput("dimension exceeds u32".into()))?;
    w.write_all(&DMAT_MAGIC)?;
    w.write_all(&d.to_le_bytes())?;
    let mut buf = Vec::with_capacity(16 * m.ncols());
    for i in 0..m.nrows() {
        buf.clear();
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dmat<R: Read>(r: R) -> Result<CMatrix> {
    let mut r = BufReader::new(r);
    let mut magic = [0u8; 16];
    r.read_exact(&mut magic)
        .map_err(|_| TomoError::Format("DMAT: truncated magic".into()))?;
    if magic != DMAT_MAGIC {
        return Err(TomoError::Format("DMAT: bad magic".into()));
    }
    let mut dbuf = [0u8; 4];
    r.read_exact(&mut dbuf)
        .map_err(|_| TomoError::Format("DMAT: truncated dimension".into()))?;
    let d = u32::from_le_bytes(dbuf);
    if d == 0 || d > DMAT_MAX_DIM {
        return Err(TomoError::Format(format!("DMAT: dimension {d} outside 1..={DMAT_MAX_DIM}")));
    }
    let d = d as usize;
    let mut m = CMatrix::zeros(d, d);
    let mut row = vec![0u8; 16 * d];
    for i in 0..d {
        r.read_exact(&mut row)
            .map_err(|_| TomoError::Format(format!("DMAT: truncated at row {i}")))?;
        for j in 0..d {
            let re = f64::from_le_bytes(row[16 * j..16 * j + 8].try_into().unwrap());
            let im = f64::from_le_bytes(row[16 * j + 8..16 * j + 16].try_into().unwrap());
            m[(i, j)] = C64::new(re, im);
        }
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(TomoError::Format("DMAT: trailing bytes".into()));
    }
    Ok(m)
}
