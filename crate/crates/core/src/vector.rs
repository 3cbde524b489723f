//! Dense f32 vector helpers shared by the store, index and rerankers.
//!
//! Every vector handed out by the store is unit length, so cosine similarity
//! reduces to [`dot`].

use crate::error::{Error, Result};

/// Tolerance on `‖v‖₂ = 1` for stored vectors.
pub const UNIT_NORM_TOLERANCE: f32 = 1e-5;

/// Dot product, unrolled in lanes of 8 so the compiler vectorizes it.
#[inline]
pub fn dot(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f32; 8];
    let chunks_a = a.chunks_exact(8);
    let chunks_b = b.chunks_exact(8);
    let tail: f32 = chunks_a
        .remainder()
        .iter()
        .zip(chunks_b.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (ca, cb) in chunks_a.zip(chunks_b) {
        for lane in 0..8 {
            acc[lane] += ca[lane] * cb[lane];
        }
    }
    acc.iter().sum::<f32>() + tail
}

#[inline]
pub fn norm(v: &[f32]) -> f32 {
    v.iter().map(|x| (*x as f64) * (*x as f64)).sum::<f64>().sqrt() as f32
}

/// Normalizes `v` in place. Rejects zero-norm and non-finite vectors.
pub fn normalize_in_place(v: &mut [f32]) -> Result<()> {
    if let Some(pos) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::Input(format!("non-finite component at position {pos}")));
    }
    let n = v.iter().map(|x| (*x as f64) * (*x as f64)).sum::<f64>().sqrt();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::Input("zero-norm vector".into()));
    }
    for x in v.iter_mut() {
        *x = (*x as f64 / n) as f32;
    }
    Ok(())
}

pub fn normalized(v: &[f32]) -> Result<Vec<f32>> {
    let mut out = v.to_vec();
    normalize_in_place(&mut out)?;
    Ok(out)
}

/// Cosine similarity of two vectors of equal dimension. Does not assume unit length.
pub fn cosine(a: &[f32], b: &[f32]) -> Result<f32> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Input("cosine of a zero vector".into()));
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}
