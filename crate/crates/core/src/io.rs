//! Image files.
//!
//! GPIM is a headered raw format: the bytes `GPIM`, `u32` height, `u32`
//! width (both little-endian), then `height·width` little-endian `f64`
//! pixels in row-major order. Binary PGM (`P5`, 8 or 16 bit) can be
//! imported and is scaled to `[0, 1]`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Vector;

#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    pub height: usize,
    pub width: usize,
    /// Row-major pixels.
    pub pixels: Vector,
}

impl Image {
    pub fn new(height: usize, width: usize, pixels: Vector) -> Result<Self> {
        pixels.check_dim(height * width)?;
        Ok(Self { height, width, pixels })
    }
}

pub fn encode_gpim(img: &Image) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 8 * img.pixels.dim());
    out.extend_from_slice(b"GPIM");
    out.extend_from_slice(&(img.height as u32).to_le_bytes());
    out.extend_from_slice(&(img.width as u32).to_le_bytes());
    for v in img.pixels.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_gpim(bytes: &[u8]) -> Result<Image> {
    if bytes.len() < 12 || &bytes[..4] != b"GPIM" {
        return Err(Error::MalformedImage("missing GPIM header".into()));
    }
    let h = u32::from_le_bytes(bytes[4..8].try_into().expect("four bytes")) as usize;
    let w = u32::from_le_bytes(bytes[8..12].try_into().expect("four bytes")) as usize;
    if h == 0 || w == 0 {
        return Err(Error::MalformedImage("zero image dimension".into()));
    }
    let expected = h.checked_mul(w).and_then(|n| n.checked_mul(8)).map(|n| n + 12);
    if expected != Some(bytes.len()) {
        return Err(Error::MalformedImage(format!("{h}x{w} image needs {:?} bytes, file has {}", expected, bytes.len())));
    }
    let px = bytes[12..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("eight bytes"))).collect();
    let pixels = Vector::new(px).map_err(|_| Error::MalformedImage("non-finite pixel".into()))?;
    Image::new(h, w, pixels)
}

/// Parses a binary PGM, returning pixels scaled by `1/maxval`.
pub fn decode_pgm(bytes: &[u8]) -> Result<Image> {
    let mut pos = 0;
    let mut token = || -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::MalformedImage("truncated PGM header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token()? != "P5" {
        return Err(Error::MalformedImage("only binary PGM (P5) is supported".into()));
    }
    let parse = |s: String| s.parse::<usize>().map_err(|_| Error::MalformedImage(format!("bad PGM number {s:?}")));
    let w = parse(token()?)?;
    let h = parse(token()?)?;
    let maxval = parse(token()?)?;
    if w == 0 || h == 0 || maxval == 0 || maxval > 65535 {
        return Err(Error::MalformedImage("invalid PGM dimensions or maxval".into()));
    }
    // exactly one whitespace byte separates the header from the raster
    let data = &bytes[(pos + 1).min(bytes.len())..];
    let depth = if maxval < 256 { 1 } else { 2 };
    if data.len() < w * h * depth {
        return Err(Error::MalformedImage("PGM raster is truncated".into()));
    }
    let scale = 1.0 / maxval as f64;
    let px: Vec<f64> = (0..w * h)
        .map(|i| {
            let v = if depth == 1 { data[i] as f64 } else { u16::from_be_bytes([data[2 * i], data[2 * i + 1]]) as f64 };
            v * scale
        })
        .collect();
    Image::new(h, w, Vector::new(px)?)
}

/// Reads GPIM or PGM, chosen by the file's magic bytes.
pub fn read_image(path: &Path) -> Result<Image> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(b"GPIM") {
        decode_gpim(&bytes)
    } else if bytes.starts_with(b"P5") {
        decode_pgm(&bytes)
    } else {
        Err(Error::MalformedImage(format!("{}: neither GPIM nor PGM", path.display())))
    }
}

pub fn write_gpim(path: &Path, img: &Image) -> Result<()> {
    std::fs::write(path, encode_gpim(img))?;
    Ok(())
}

/// `10·log10(1 / MSE)`, peak value 1.
pub fn psnr(estimate: &Vector, reference: &Vector) -> f64 {
    let mse = estimate.sub(reference).norm_sq() / reference.dim() as f64;
    -10.0 * mse.log10()
}
