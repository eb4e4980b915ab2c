//! 16-bit binary PGM (P5) depth rasters.
//!
//! On disk a sample is millimeters as a big-endian u16 with maxval 65535;
//! 0 marks an invalid pixel. Values are converted to meters on load.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::depth::{DepthImage, DepthImageError, INVALID_DEPTH};

const MAXVAL: u32 = 65535;

#[derive(Debug, Error)]
pub enum PgmError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a binary PGM: expected magic P5")]
    BadMagic,
    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),
    #[error("unsupported maxval {0}, expected {MAXVAL}")]
    UnsupportedMaxval(u32),
    #[error("pixel data ended early: expected {expected} bytes, got {got}")]
    TruncatedData { expected: usize, got: usize },
    #[error(transparent)]
    Depth(#[from] DepthImageError),
}

/// Encode a depth raster as a 16-bit P5 PGM.
///
/// Depths round to the nearest millimeter and saturate at 65.535 m; depths
/// under half a millimeter quantize to the invalid sentinel.
pub fn write_pgm<W: Write>(image: &DepthImage, mut w: W) -> io::Result<()> {
    write!(w, "P5\n{} {}\n{}\n", image.width(), image.height(), MAXVAL)?;
    let mut buf = Vec::with_capacity(image.values().len() * 2);
    for &v in image.values() {
        let mm = if v == INVALID_DEPTH {
            0u16
        } else {
            (v * 1000.0).round().min(f64::from(MAXVAL)) as u16
        };
        buf.extend_from_slice(&mm.to_be_bytes());
    }
    w.write_all(&buf)
}

pub fn save_pgm<P: AsRef<Path>>(image: &DepthImage, path: P) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_pgm(image, &mut w)?;
    w.flush()
}

pub fn load_pgm<P: AsRef<Path>>(path: P) -> Result<DepthImage, PgmError> {
    read_pgm(BufReader::new(File::open(path)?))
}

/// Decode a 16-bit P5 PGM into a depth raster in meters.
pub fn read_pgm<R: Read>(mut r: R) -> Result<DepthImage, PgmError> {
    let mut data = Vec::new();
    r.read_to_end(&mut data)?;
    if data.len() < 2 || &data[..2] != b"P5" {
        return Err(PgmError::BadMagic);
    }
    let mut pos = 2;
    let width = read_header_number(&data, &mut pos)?;
    let height = read_header_number(&data, &mut pos)?;
    let maxval = read_header_number(&data, &mut pos)?;
    if maxval != MAXVAL {
        return Err(PgmError::UnsupportedMaxval(maxval));
    }
    // Exactly one whitespace byte separates the header from the samples.
    match data.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => {
            return Err(PgmError::MalformedHeader(
                "missing whitespace before pixel data".into(),
            ))
        }
    }
    let n = width as usize * height as usize;
    let expected = n * 2;
    let pixels = &data[pos..];
    if pixels.len() < expected {
        return Err(PgmError::TruncatedData { expected, got: pixels.len() });
    }
    let values = pixels[..expected]
        .chunks_exact(2)
        .map(|c| f64::from(u16::from_be_bytes([c[0], c[1]])) / 1000.0)
        .collect();
    Ok(DepthImage::new(width, height, values)?)
}

/// Read the next unsigned decimal in the header, skipping whitespace and
/// `#` comments.
fn read_header_number(data: &[u8], pos: &mut usize) -> Result<u32, PgmError> {
    loop {
        match data.get(*pos) {
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(b'#') => {
                while let Some(&b) = data.get(*pos) {
                    *pos += 1;
                    if b == b'\n' {
                        break;
                    }
                }
            }
            Some(b) if b.is_ascii_digit() => break,
            Some(b) => {
                return Err(PgmError::MalformedHeader(format!(
                    "unexpected byte 0x{b:02x} at offset {pos}"
                )))
            }
            None => {
                return Err(PgmError::MalformedHeader("header ended early".into()));
            }
        }
    }
    let start = *pos;
    while matches!(data.get(*pos), Some(b) if b.is_ascii_digit()) {
        *pos += 1;
    }
    std::str::from_utf8(&data[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| PgmError::MalformedHeader(format!("bad number at offset {start}")))
}
