//! DFF1 field files.
//!
//! Layout (little endian): magic `DFF1` | u8 d | u8 flags (bit 0: space-time)
//! | u16 m | u32 N | u32 M | f64 L | 20 zero bytes | payload of `(re, im)`
//! f64 pairs. The payload is component-major, then x-fastest grid order, and
//! time-major outermost for space-time fields.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{GridSpec, SpaceTimeField, SpatialField, C64};
use crate::error::{IoError, Result};

pub const MAGIC: &[u8; 4] = b"DFF1";
pub const HEADER_LEN: usize = 44;
const FLAG_SPACE_TIME: u8 = 1;

/// Header fields plus the decoded payload.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldFile {
    Spatial(SpatialField),
    SpaceTime(SpaceTimeField),
}

fn header(grid: &GridSpec, space_time: bool) -> Result<[u8; HEADER_LEN], IoError> {
    let m = u16::try_from(grid.components).map_err(|_| IoError::Overflow(format!("m = {}", grid.components)))?;
    let n = u32::try_from(grid.n).map_err(|_| IoError::Overflow(format!("N = {}", grid.n)))?;
    let mt = u32::try_from(grid.time_samples)
        .map_err(|_| IoError::Overflow(format!("M = {}", grid.time_samples)))?;
    let mut h = [0u8; HEADER_LEN];
    h[0..4].copy_from_slice(MAGIC);
    h[4] = grid.d as u8;
    h[5] = if space_time { FLAG_SPACE_TIME } else { 0 };
    h[6..8].copy_from_slice(&m.to_le_bytes());
    h[8..12].copy_from_slice(&n.to_le_bytes());
    h[12..16].copy_from_slice(&mt.to_le_bytes());
    h[16..24].copy_from_slice(&grid.side.to_le_bytes());
    Ok(h)
}

fn push_values(out: &mut Vec<u8>, values: &[C64]) {
    for v in values {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
}

pub fn encode_spatial(f: &SpatialField) -> Result<Vec<u8>, IoError> {
    let mut out = header(f.grid(), false)?.to_vec();
    push_values(&mut out, f.values());
    Ok(out)
}

pub fn encode_space_time(f: &SpaceTimeField) -> Result<Vec<u8>, IoError> {
    let mut out = header(f.grid(), true)?.to_vec();
    for s in f.slices() {
        push_values(&mut out, s.values());
    }
    Ok(out)
}

/// Decodes a DFF1 byte buffer. Never returns a partially filled field.
pub fn decode(bytes: &[u8]) -> Result<FieldFile, IoError> {
    if bytes.len() < HEADER_LEN {
        return Err(IoError::Header(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[0..4] != MAGIC {
        return Err(IoError::Header("magic bytes do not read DFF1".into()));
    }
    let d = bytes[4] as usize;
    let flags = bytes[5];
    if flags & !FLAG_SPACE_TIME != 0 {
        return Err(IoError::Header(format!("unknown flag bits {flags:#04x}")));
    }
    if bytes[24..HEADER_LEN].iter().any(|&b| b != 0) {
        return Err(IoError::Header("reserved padding is not zero".into()));
    }
    let m = u16::from_le_bytes([bytes[6], bytes[7]]) as usize;
    let n = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let mt = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let side = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let space_time = flags & FLAG_SPACE_TIME != 0;

    let grid = GridSpec::new(d, n, side, mt, m).map_err(|e| IoError::Header(e.to_string()))?;
    let slices = if space_time { mt } else { 1 };
    let expected = grid
        .n
        .checked_pow(d as u32)
        .and_then(|p| p.checked_mul(m))
        .and_then(|p| p.checked_mul(slices))
        .and_then(|p| p.checked_mul(16))
        .ok_or_else(|| IoError::Overflow(format!("payload size of d={d} N={n} m={m} M={mt}")))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != expected {
        return Err(IoError::Truncated { expected, found: payload.len() });
    }
    let mut values = Vec::with_capacity(expected / 16);
    for pair in payload.chunks_exact(16) {
        let re = f64::from_le_bytes(pair[0..8].try_into().unwrap());
        let im = f64::from_le_bytes(pair[8..16].try_into().unwrap());
        if !(re.is_finite() && im.is_finite()) {
            return Err(IoError::Header("payload holds a non-finite value".into()));
        }
        values.push(C64::new(re, im));
    }
    if space_time {
        let per = grid.len();
        let slices = values.chunks(per).map(|c| SpatialField::from_raw(grid, c.to_vec())).collect();
        let st = SpaceTimeField::new(grid, slices).map_err(|e| IoError::Header(e.to_string()))?;
        Ok(FieldFile::SpaceTime(st))
    } else {
        Ok(FieldFile::Spatial(SpatialField::from_raw(grid, values)))
    }
}

/// Writes through a temporary sibling and renames, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

pub fn write_spatial(path: &Path, f: &SpatialField) -> Result<()> {
    Ok(write_atomic(path, &encode_spatial(f)?)?)
}

pub fn write_space_time(path: &Path, f: &SpaceTimeField) -> Result<()> {
    Ok(write_atomic(path, &encode_space_time(f)?)?)
}

pub fn read(path: &Path) -> Result<FieldFile> {
    let bytes = fs::read(path).map_err(IoError::from)?;
    Ok(decode(&bytes)?)
}
