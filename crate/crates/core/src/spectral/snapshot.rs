//! Binary field snapshots.
//!
//! Layout: a 64-byte header
//!
//! | offset | type      | content                     |
//! |--------|-----------|-----------------------------|
//! | 0      | `[u8; 8]` | magic `NSCFIELD`            |
//! | 8      | `u32`     | format version (1)          |
//! | 12     | `u32`     | grid size `n`               |
//! | 16     | `u32`     | component count             |
//! | 20     | `u32`     | reserved, zero              |
//! | 24     | `f64`     | time stamp                  |
//! | 32     | (none)    | zero padding up to 64       |
//!
//! followed by little-endian `(re, im)` pairs of `f64`, component-major, with
//! wavevectors in row-major order over `ξ_i ∈ [−n/2, n/2)`. Modes outside the
//! dealiased band are written as zeros and ignored on reading.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::field::PeriodicField;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"NSCFIELD";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 64;

pub fn write_snapshot(path: &Path, field: &PeriodicField, time: f64) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_to(&mut w, field, time).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_to<W: Write>(w: &mut W, field: &PeriodicField, time: f64) -> std::io::Result<()> {
    let mut header = [0u8; HEADER_LEN];
    header[..8].copy_from_slice(MAGIC);
    header[8..12].copy_from_slice(&VERSION.to_le_bytes());
    header[12..16].copy_from_slice(&(field.n() as u32).to_le_bytes());
    header[16..20].copy_from_slice(&(field.ncomp() as u32).to_le_bytes());
    header[24..32].copy_from_slice(&time.to_le_bytes());
    w.write_all(&header)?;
    let half = (field.n() / 2) as i64;
    for c in 0..field.ncomp() {
        for k0 in -half..half {
            for k1 in -half..half {
                for k2 in -half..half {
                    let v = field.mode(c, [k0, k1, k2]);
                    w.write_all(&v.re.to_le_bytes())?;
                    w.write_all(&v.im.to_le_bytes())?;
                }
            }
        }
    }
    Ok(())
}

/// Reads a snapshot, returning the field and its time stamp.
pub fn read_snapshot(path: &Path) -> Result<(PeriodicField, f64)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)
        .map_err(|_| Error::Format(format!("{}: truncated header", path.display())))?;
    if &header[..8] != MAGIC {
        return Err(Error::Format(format!("{}: bad magic", path.display())));
    }
    let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().expect("4 bytes"));
    let version = u32_at(8);
    if version != VERSION {
        return Err(Error::Format(format!(
            "{}: unsupported version {version}",
            path.display()
        )));
    }
    let n = u32_at(12) as usize;
    let ncomp = u32_at(16) as usize;
    let time = f64::from_le_bytes(header[24..32].try_into().expect("8 bytes"));
    let mut field = PeriodicField::zeros(n, ncomp)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let half = (n / 2) as i64;
    let mut buf = [0u8; 16];
    for c in 0..ncomp {
        for k0 in -half..half {
            for k1 in -half..half {
                for k2 in -half..half {
                    r.read_exact(&mut buf).map_err(|_| {
                        Error::Format(format!("{}: truncated coefficient data", path.display()))
                    })?;
                    if k2 < 0 {
                        continue;
                    }
                    if let Some((idx, _)) = field.slot([k0, k1, k2]) {
                        let re = f64::from_le_bytes(buf[..8].try_into().expect("8 bytes"));
                        let im = f64::from_le_bytes(buf[8..].try_into().expect("8 bytes"));
                        field.comp_mut(c)[idx] = Complex64::new(re, im);
                    }
                }
            }
        }
    }
    Ok((field, time))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::field::random_band_limited;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.bin");
        let f = random_band_limited(8, 3, 2, 11).unwrap();
        write_snapshot(&path, &f, 0.125).unwrap();
        let bytes = std::fs::metadata(&path).unwrap().len();
        assert_eq!(bytes, 64 + 3 * 512 * 16);
        let (g, t) = read_snapshot(&path).unwrap();
        assert_eq!(t, 0.125);
        assert_eq!(g.coeffs(), f.coeffs());
    }

    #[test]
    fn rejects_bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.bin");
        std::fs::write(&path, [0u8; 80]).unwrap();
        assert!(matches!(read_snapshot(&path), Err(Error::Format(_))));
    }
}
