//! Little-endian helpers shared by the binary containers.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub(crate) fn put_u32(w: &mut impl Write, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn put_u64(w: &mut impl Write, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn put_f64(w: &mut impl Write, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn put_f64s(w: &mut impl Write, vs: &[f64]) -> Result<()> {
    for &v in vs {
        put_f64(w, v)?;
    }
    Ok(())
}

fn fill<const N: usize>(r: &mut impl Read, context: &'static str) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| Error::Format {
        context,
        reason: format!("truncated input ({e})"),
    })?;
    Ok(buf)
}

pub(crate) fn get_u32(r: &mut impl Read, context: &'static str) -> Result<u32> {
    Ok(u32::from_le_bytes(fill(r, context)?))
}

pub(crate) fn get_u64(r: &mut impl Read, context: &'static str) -> Result<u64> {
    Ok(u64::from_le_bytes(fill(r, context)?))
}

pub(crate) fn get_f64(r: &mut impl Read, context: &'static str) -> Result<f64> {
    Ok(f64::from_le_bytes(fill(r, context)?))
}

pub(crate) fn get_f64s(r: &mut impl Read, n: usize, context: &'static str) -> Result<Vec<f64>> {
    (0..n).map(|_| get_f64(r, context)).collect()
}

pub(crate) fn get_len(r: &mut impl Read, context: &'static str) -> Result<usize> {
    let v = get_u64(r, context)?;
    // keeps a corrupt header from requesting an absurd allocation
    if v > (1 << 40) {
        return Err(Error::Format {
            context,
            reason: format!("implausible length {v}"),
        });
    }
    Ok(v as usize)
}

pub(crate) fn expect_magic(r: &mut impl Read, magic: &[u8; 4], context: &'static str) -> Result<u32> {
    let got: [u8; 4] = fill(r, context)?;
    if &got != magic {
        return Err(Error::Format {
            context,
            reason: format!("bad magic {got:?}"),
        });
    }
    get_u32(r, context)
}

pub(crate) fn expect_eof(r: &mut impl Read, context: &'static str) -> Result<()> {
    let mut extra = [0u8; 1];
    match r.read(&mut extra)? {
        0 => Ok(()),
        _ => Err(Error::Format {
            context,
            reason: "trailing bytes".into(),
        }),
    }
}
