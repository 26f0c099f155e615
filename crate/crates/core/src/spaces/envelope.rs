use serde::Serialize;

use super::norms::{band_norms, Space};
use crate::error::{Error, Result};
use crate::field::Field;

/// Bound on `sum a_j^2` and `a_0` for an envelope to count as admissible.
pub const ENVELOPE_CONSTANT: f64 = 4.0;

/// Slowly varying sequence dominating the weighted band norms of a field.
#[derive(Debug, Clone, Serialize)]
pub struct FrequencyEnvelope {
    pub delta: f64,
    pub a: Vec<f64>,
    pub norm_of_u: f64,
    /// Weighted band norms `2^{sj} ||S_j u||` the envelope was built from.
    pub bands: Vec<f64>,
}

impl FrequencyEnvelope {
    /// `a_j = 2^{-delta j} + ||u||^{-1} max_k 2^{-delta |j - k|} B_k` from weighted band norms `B_k`.
    pub fn from_bands(bands: Vec<f64>, delta: f64) -> Result<Self> {
        let norm = bands.iter().map(|b| b * b).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::UndefinedEnvelope);
        }
        let a = (0..bands.len())
            .map(|j| {
                let tail = bands
                    .iter()
                    .enumerate()
                    .map(|(k, b)| (-delta * (j as f64 - k as f64).abs()).exp2() * b)
                    .fold(0.0, f64::max);
                (-delta * j as f64).exp2() + tail / norm
            })
            .collect();
        Ok(FrequencyEnvelope { delta, a, norm_of_u: norm, bands })
    }

    pub fn sum_sq(&self) -> f64 {
        self.a.iter().map(|a| a * a).sum()
    }

    pub fn sum_sq_ok(&self) -> bool {
        let s = self.sum_sq();
        (1.0 / ENVELOPE_CONSTANT..=ENVELOPE_CONSTANT).contains(&s)
    }

    pub fn a0_ok(&self) -> bool {
        self.a.first().is_some_and(|a| (1.0 / ENVELOPE_CONSTANT..=ENVELOPE_CONSTANT).contains(a))
    }

    /// `a_j <= 2^{delta |j - k|} a_k` for every pair.
    pub fn slowly_varying(&self) -> bool {
        self.a.iter().enumerate().all(|(j, aj)| {
            self.a.iter().enumerate().all(|(k, ak)| {
                *aj <= (self.delta * (j as f64 - k as f64).abs()).exp2() * ak * (1.0 + 1e-12)
            })
        })
    }

    /// `B_j <= a_j ||u||` for every band.
    pub fn dominates(&self) -> bool {
        self.bands.iter().zip(&self.a).all(|(b, a)| *b <= a * self.norm_of_u * (1.0 + 1e-12))
    }
}

/// Default slack exponent: `min(1/4, (s - d/2 - 2)/2)` above the threshold, else 0.1.
pub fn default_delta(s: f64, d: usize) -> f64 {
    let gap = s - d as f64 / 2.0 - 2.0;
    if gap > 0.0 {
        (gap / 2.0).min(0.25)
    } else {
        0.1
    }
}

/// Envelope of `u` in `l^1 H^s`, `l^1 X^s` or `l^1 Y^s`.
pub fn frequency_envelope(u: &Field, s: f64, space: Space, delta: f64) -> Result<FrequencyEnvelope> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Parameter(format!("envelope slack delta = {delta} outside (0, 1)")));
    }
    let bands = band_norms(u, space)?
        .into_iter()
        .enumerate()
        .map(|(j, b)| (s * j as f64).exp2() * b)
        .collect();
    FrequencyEnvelope::from_bands(bands, delta)
}
