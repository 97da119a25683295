//! Little-endian binary encoding helpers for checkpoint files.
//!
//! All checkpoints share the same primitives: fixed-width integers, 64-bit
//! floats and length-prefixed UTF-8 strings, everything little-endian.

use std::io::{Read, Write};

use crate::error::{Error, Result};

fn wrap(e: std::io::Error) -> Error {
    Error::Contract(format!("checkpoint i/o: {e}"))
}

pub(crate) fn write_u8(w: &mut impl Write, v: u8) -> Result<()> {
    w.write_all(&[v]).map_err(wrap)
}

pub(crate) fn write_u32(w: &mut impl Write, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes()).map_err(wrap)
}

pub(crate) fn write_u64(w: &mut impl Write, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes()).map_err(wrap)
}

pub(crate) fn write_f64(w: &mut impl Write, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes()).map_err(wrap)
}

pub(crate) fn write_f64_slice(w: &mut impl Write, vs: &[f64]) -> Result<()> {
    for v in vs {
        write_f64(w, *v)?;
    }
    Ok(())
}

pub(crate) fn write_string(w: &mut impl Write, s: &str) -> Result<()> {
    write_u32(w, s.len() as u32)?;
    w.write_all(s.as_bytes()).map_err(wrap)
}

pub(crate) fn read_u8(r: &mut impl Read) -> Result<u8> {
    let mut buf = [0u8; 1];
    r.read_exact(&mut buf).map_err(wrap)?;
    Ok(buf[0])
}

pub(crate) fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf).map_err(wrap)?;
    Ok(u32::from_le_bytes(buf))
}

pub(crate) fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf).map_err(wrap)?;
    Ok(u64::from_le_bytes(buf))
}

pub(crate) fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf).map_err(wrap)?;
    Ok(f64::from_le_bytes(buf))
}

pub(crate) fn read_f64_vec(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(read_f64(r)?);
    }
    Ok(out)
}

pub(crate) fn read_string(r: &mut impl Read) -> Result<String> {
    let len = read_u32(r)? as usize;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf).map_err(wrap)?;
    String::from_utf8(buf).map_err(|e| Error::Contract(format!("checkpoint string: {e}")))
}

/// Check a 4-byte magic tag and a format version.
pub(crate) fn expect_header(r: &mut impl Read, magic: &[u8; 4], version: u32) -> Result<()> {
    let mut got = [0u8; 4];
    r.read_exact(&mut got).map_err(wrap)?;
    if &got != magic {
        return Err(Error::Contract(format!(
            "bad checkpoint magic {:?}, expected {:?}",
            got, magic
        )));
    }
    let got_version = read_u32(r)?;
    if got_version != version {
        return Err(Error::Contract(format!(
            "unsupported checkpoint version {got_version}, expected {version}"
        )));
    }
    Ok(())
}

pub(crate) fn write_header(w: &mut impl Write, magic: &[u8; 4], version: u32) -> Result<()> {
    w.write_all(magic).map_err(wrap)?;
    write_u32(w, version)
}
