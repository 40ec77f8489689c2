//! On-disk formats.
//!
//! Raw arrays (`.srr`):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "SRR1"
//! 4       1     dtype: 0 = float32 real, 1 = complex64 (re, im interleaved)
//! 5       4     rows, u32 little-endian
//! 9       4     cols, u32 little-endian
//! 13      ...   row-major little-endian payload
//! ```
//!
//! Trajectories are plain text: a `# sraar-trajectory v1` header followed
//! by one `index beta_x beta_y` line per readout row.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Displacement, MotionTrajectory, SquareArray};

pub const RAW_MAGIC: &[u8; 4] = b"SRR1";
pub const RAW_HEADER_LEN: usize = 13;
pub const TRAJECTORY_HEADER: &str = "# sraar-trajectory v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum DType {
    Float32 = 0,
    Complex64 = 1,
}

impl DType {
    pub fn element_size(self) -> usize {
        match self {
            DType::Float32 => 4,
            DType::Complex64 => 8,
        }
    }

    fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(DType::Float32),
            1 => Ok(DType::Complex64),
            other => Err(Error::Format(format!("unknown dtype code {other}"))),
        }
    }
}

/// Decoded contents of a raw array file, before any shape validation.
#[derive(Debug, Clone, PartialEq)]
pub struct RawArray {
    pub dtype: DType,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl RawArray {
    /// Converts into a square power-of-two array.
    pub fn into_square<D>(self) -> Result<SquareArray<D>> {
        if self.rows != self.cols {
            return Err(Error::Dimension(format!(
                "array is {}x{}, expected square",
                self.rows, self.cols
            )));
        }
        SquareArray::from_vec(self.rows, self.data)
    }
}

pub fn encode_raw(dtype: DType, rows: usize, cols: usize, data: &[Complex64]) -> Result<Vec<u8>> {
    if data.len() != rows * cols {
        return Err(Error::Dimension(format!(
            "payload has {} samples, header says {rows}x{cols}",
            data.len()
        )));
    }
    let rows32 = u32::try_from(rows).map_err(|_| Error::Dimension("too many rows".into()))?;
    let cols32 = u32::try_from(cols).map_err(|_| Error::Dimension("too many columns".into()))?;
    let mut out = Vec::with_capacity(RAW_HEADER_LEN + data.len() * dtype.element_size());
    out.extend_from_slice(RAW_MAGIC);
    out.push(dtype as u8);
    out.extend_from_slice(&rows32.to_le_bytes());
    out.extend_from_slice(&cols32.to_le_bytes());
    for z in data {
        out.extend_from_slice(&(z.re as f32).to_le_bytes());
        if dtype == DType::Complex64 {
            out.extend_from_slice(&(z.im as f32).to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_raw(bytes: &[u8]) -> Result<RawArray> {
    if bytes.len() < RAW_HEADER_LEN {
        return Err(Error::Format(format!(
            "file is {} bytes, shorter than the {RAW_HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    if &bytes[0..4] != RAW_MAGIC {
        return Err(Error::Format("bad magic, expected SRR1".into()));
    }
    let dtype = DType::from_code(bytes[4])?;
    let rows = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[9..13].try_into().unwrap()) as usize;
    let payload = &bytes[RAW_HEADER_LEN..];
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(dtype.element_size()))
        .ok_or_else(|| Error::Format("header dimensions overflow".into()))?;
    if payload.len() != expected {
        return Err(Error::Format(format!(
            "payload is {} bytes, header implies {expected}",
            payload.len()
        )));
    }
    let f32_at = |i: usize| f32::from_le_bytes(payload[4 * i..4 * i + 4].try_into().unwrap()) as f64;
    let data = match dtype {
        DType::Float32 => (0..rows * cols).map(|i| Complex64::new(f32_at(i), 0.0)).collect(),
        DType::Complex64 => (0..rows * cols)
            .map(|i| Complex64::new(f32_at(2 * i), f32_at(2 * i + 1)))
            .collect(),
    };
    Ok(RawArray {
        dtype,
        rows,
        cols,
        data,
    })
}

pub fn read_raw(path: impl AsRef<Path>) -> Result<RawArray> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_raw(&bytes)
}

/// Reads a raw file as a square array of either dtype.
pub fn read_square<D>(path: impl AsRef<Path>) -> Result<SquareArray<D>> {
    read_raw(path)?.into_square()
}

pub fn write_raw<D>(path: impl AsRef<Path>, array: &SquareArray<D>, dtype: DType) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_raw(dtype, array.rows(), array.cols(), array.data())?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn format_trajectory(traj: &MotionTrajectory) -> String {
    let mut out = String::with_capacity(32 * (traj.len() + 1));
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for (i, d) in traj.lines().iter().enumerate() {
        // `{}` on f64 prints the shortest representation that parses back
        // to the same value.
        writeln!(out, "{i} {} {}", d.x, d.y).unwrap();
    }
    out
}

pub fn parse_trajectory(text: &str) -> Result<MotionTrajectory> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == TRAJECTORY_HEADER => {}
        _ => {
            return Err(Error::Format(format!(
                "missing trajectory header '{TRAJECTORY_HEADER}'"
            )))
        }
    }
    let mut out = Vec::new();
    for (expected, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Format(format!(
                "trajectory line {expected}: expected 3 fields, got {}",
                fields.len()
            )));
        }
        let index: usize = fields[0]
            .parse()
            .map_err(|_| Error::Format(format!("bad index '{}'", fields[0])))?;
        if index != expected {
            return Err(Error::Format(format!(
                "trajectory indices must be contiguous from 0: expected {expected}, got {index}"
            )));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::Format(format!("bad displacement '{s}'")))
        };
        out.push(Displacement::new(parse(fields[1])?, parse(fields[2])?));
    }
    MotionTrajectory::new(out).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_trajectory(path: impl AsRef<Path>, traj: &MotionTrajectory) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_trajectory(traj)).map_err(|e| Error::io(path, e))
}

pub fn read_trajectory(path: impl AsRef<Path>) -> Result<MotionTrajectory> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trajectory(&text)
}

/// 16-bit binary PGM (P5) of the pixel moduli, linearly stretched so the
/// minimum maps to 0 and the maximum to 65535. A constant image maps to 0.
pub fn encode_pgm<D>(array: &SquareArray<D>) -> Vec<u8> {
    let moduli = array.moduli();
    let lo = moduli.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = moduli.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    let mut out = format!("P5\n{} {}\n65535\n", array.cols(), array.rows()).into_bytes();
    out.reserve(moduli.len() * 2);
    for m in moduli {
        let v = if range > 0.0 {
            ((m - lo) / range * 65535.0).round().clamp(0.0, 65535.0) as u16
        } else {
            0
        };
        out.extend_from_slice(&v.to_be_bytes());
    }
    out
}

pub fn write_pgm<D>(path: impl AsRef<Path>, array: &SquareArray<D>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(array)).map_err(|e| Error::io(path, e))
}
