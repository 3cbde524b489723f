//! 64-bit DCT perceptual hash.
//!
//! Recipe (bit-exact):
//! 1. Area-average resample the grayscale raster to 32×32 (`f64` intensities).
//! 2. Orthonormal 2-D DCT-II, keeping only the top-left 8×8 low-frequency block.
//! 3. Coefficients with magnitude ≤ 1e-9 × the largest magnitude are snapped to 0,
//!    so flat images do not hash their floating-point residue.
//! 4. Bit `k = 8·row + col` is set iff coefficient `k` is strictly greater than the
//!    median of all 64 coefficients (mean of the two middle values).
//! 5. Bit `k` is stored at position `63 − k` of the `u64`, so the hex form reads
//!    row-major from the most significant nibble.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use image::GrayImage;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Hash length in bits.
pub const HASH_BITS: u32 = 64;

const RESAMPLE: usize = 32;
const BLOCK: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PerceptualHash(pub u64);

impl PerceptualHash {
    pub fn bits(self) -> u64 {
        self.0
    }

    /// Parses exactly 16 hex digits.
    pub fn from_hex(s: &str) -> Result<Self> {
        if s.len() != 16 {
            return Err(Error::Input(format!(
                "perceptual hash must be 16 hex chars ({HASH_BITS} bits), got {} chars",
                s.len()
            )));
        }
        u64::from_str_radix(s, 16)
            .map(PerceptualHash)
            .map_err(|e| Error::Input(format!("bad perceptual hash `{s}`: {e}")))
    }

    /// Builds a hash from a bit string, bit 0 first. The slice must hold exactly 64 bits.
    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        if bits.len() != HASH_BITS as usize {
            return Err(Error::Input(format!(
                "hash length mismatch: expected {HASH_BITS} bits, got {}",
                bits.len()
            )));
        }
        let mut v = 0u64;
        for (k, &b) in bits.iter().enumerate() {
            if b {
                v |= 1 << (63 - k);
            }
        }
        Ok(PerceptualHash(v))
    }

    pub fn to_hex(self) -> String {
        format!("{:016x}", self.0)
    }
}

impl fmt::Display for PerceptualHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl FromStr for PerceptualHash {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_hex(s)
    }
}

impl Serialize for PerceptualHash {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for PerceptualHash {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        PerceptualHash::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// Number of differing bit positions.
#[inline]
pub fn hamming_distance(a: PerceptualHash, b: PerceptualHash) -> u32 {
    (a.0 ^ b.0).count_ones()
}

pub fn compute_phash(image: &GrayImage) -> Result<PerceptualHash> {
    let (w, h) = image.dimensions();
    if w == 0 || h == 0 {
        return Err(Error::Input("empty raster".into()));
    }
    let small = resample_area(image.as_raw(), w as usize, h as usize, RESAMPLE);
    let coeffs = dct_low_block(&small);
    Ok(hash_from_coefficients(&coeffs))
}

/// Builds a hash from a raw row-major 8-bit grayscale buffer.
pub fn compute_phash_raw(width: u32, height: u32, pixels: Vec<u8>) -> Result<PerceptualHash> {
    if width == 0 || height == 0 || pixels.is_empty() {
        return Err(Error::Input("empty raster".into()));
    }
    let image = GrayImage::from_raw(width, height, pixels).ok_or_else(|| {
        Error::Input(format!("raster buffer does not match {width}x{height}"))
    })?;
    compute_phash(&image)
}

/// Decodes an image file and hashes its luma channel.
pub fn phash_file(path: &Path) -> Result<PerceptualHash> {
    let img = image::open(path)
        .map_err(|e| Error::Input(format!("cannot decode {}: {e}", path.display())))?;
    compute_phash(&img.to_luma8())
}

fn hash_from_coefficients(coeffs: &[f64; BLOCK * BLOCK]) -> PerceptualHash {
    let max_abs = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let snap = max_abs * 1e-9;
    let mut c = *coeffs;
    for x in c.iter_mut() {
        if x.abs() <= snap {
            *x = 0.0;
        }
    }
    let mut sorted = c;
    sorted.sort_by(f64::total_cmp);
    let mid = BLOCK * BLOCK / 2;
    let median = (sorted[mid - 1] + sorted[mid]) / 2.0;
    let mut bits = 0u64;
    for (k, &v) in c.iter().enumerate() {
        if v > median {
            bits |= 1 << (63 - k);
        }
    }
    PerceptualHash(bits)
}

/// Area-weighted resample of a `w×h` raster to `n×n`.
fn resample_area(pixels: &[u8], w: usize, h: usize, n: usize) -> Vec<f64> {
    let col_weights = axis_weights(w, n);
    let row_weights = axis_weights(h, n);
    let mut out = vec![0.0; n * n];
    for (oy, rows) in row_weights.iter().enumerate() {
        for (ox, cols) in col_weights.iter().enumerate() {
            let mut acc = 0.0;
            let mut area = 0.0;
            for &(sy, wy) in rows {
                let row = &pixels[sy * w..(sy + 1) * w];
                for &(sx, wx) in cols {
                    acc += row[sx] as f64 * wx * wy;
                    area += wx * wy;
                }
            }
            out[oy * n + ox] = acc / area;
        }
    }
    out
}

/// For each output cell along one axis, the source indices it covers and their coverage.
fn axis_weights(src: usize, n: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = src as f64 / n as f64;
    (0..n)
        .map(|o| {
            let lo = o as f64 * scale;
            let hi = (o + 1) as f64 * scale;
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(src).max(first + 1);
            (first..last)
                .filter_map(|s| {
                    let cover = (hi.min(s as f64 + 1.0) - lo.max(s as f64)).max(0.0);
                    (cover > 0.0).then_some((s, cover))
                })
                .collect()
        })
        .collect()
}

/// Top-left 8×8 block of the orthonormal 2-D DCT-II of a 32×32 block,
/// row-major by (vertical frequency, horizontal frequency).
fn dct_low_block(input: &[f64]) -> [f64; BLOCK * BLOCK] {
    let n = RESAMPLE;
    let basis: Vec<Vec<f64>> = (0..BLOCK)
        .map(|u| {
            let alpha = if u == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
            (0..n)
                .map(|x| alpha * (PI * (2 * x + 1) as f64 * u as f64 / (2 * n) as f64).cos())
                .collect()
        })
        .collect();

    // Rows first: row_freq[y][v] = Σ_x f(y, x) · basis[v][x]
    let mut row_freq = vec![[0.0f64; BLOCK]; n];
    for y in 0..n {
        let row = &input[y * n..(y + 1) * n];
        for v in 0..BLOCK {
            row_freq[y][v] = row.iter().zip(&basis[v]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = [0.0; BLOCK * BLOCK];
    for u in 0..BLOCK {
        for v in 0..BLOCK {
            out[u * BLOCK + v] = (0..n).map(|y| basis[u][y] * row_freq[y][v]).sum();
        }
    }
    out
}
