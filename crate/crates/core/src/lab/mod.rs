//! Randomized ensembles, per-sample estimate ratios and frequency regressions.

mod baselines;
mod estimates;
mod scan;
#[cfg(test)]
mod tests;

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use baselines::{baseline, BASELINES, BASELINE_SLACK};
pub use estimates::{verify, CommutatorSymbol, Estimate, VerifyParams, ESTIMATES};
pub use scan::{smoothing_scan, ScanKind, ScanSpec, INHOMOGENEOUS_SPREAD, SMOOTHING_SLOPE, SMOOTHING_SLOPE_TOL};

use crate::error::{Error, Result};
use crate::field::{Field, GridSpec, SpaceTimeField, SpatialField, C64};
use crate::field::spectral::{apply_radial, apply_symbol};
use crate::lp::phi;

/// Default regression tolerance on the frequency slope.
pub const SLOPE_TOL: f64 = 0.1;

/// Lab grid: `d = 1`, `N = 1024`, `L = 8`, 64 time samples.
pub fn default_grid() -> GridSpec {
    GridSpec { d: 1, n: 1024, side: 8.0, time_samples: 64, components: 1 }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    Spatial,
    Spacetime,
}

/// Deterministic ensemble of band-limited random fields.
///
/// Sample `i` carries bands `0..=top(i)`, where `top` cycles through
/// `1..=j_max` unless `bands` pins an explicit range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSpec {
    pub seed: u64,
    pub count: usize,
    /// `||S_j u||_{L^2} = amplitude * 2^{-spectrum j}`.
    pub spectrum: f64,
    /// Gaussian windows per band piece; 0 leaves the noise unwindowed.
    pub bump_centers: usize,
    pub amplitude: f64,
    pub grid: GridSpec,
    pub bands: Option<[usize; 2]>,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        EnsembleSpec {
            seed: 7,
            count: 100,
            spectrum: 2.75,
            bump_centers: 2,
            amplitude: 0.1,
            grid: default_grid(),
            bands: None,
        }
    }
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.count == 0 {
            return Err(Error::Parameter("ensemble count must be positive".into()));
        }
        if !(self.amplitude.is_finite() && self.amplitude > 0.0) || !self.spectrum.is_finite() {
            return Err(Error::Parameter("ensemble amplitude and spectrum must be finite, amplitude > 0".into()));
        }
        if let Some([lo, hi]) = self.bands {
            if lo > hi || hi > self.grid.j_max() {
                return Err(Error::BandOverflow { j: hi.max(lo), j_max: self.grid.j_max() });
            }
        }
        Ok(())
    }

    /// Band range of sample `i`.
    pub fn band_range(&self, i: usize) -> (usize, usize) {
        match self.bands {
            Some([lo, hi]) => (lo, hi),
            None => {
                let jm = self.grid.j_max().max(1);
                (0, 1 + i % jm)
            }
        }
    }

    fn rng(&self, sample: usize, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(sample as u64 * 64 + stream);
        rng
    }
}

fn periodic_gaussian(grid: &GridSpec, x: [f64; 2], c: [f64; 2], width: f64) -> f64 {
    let mut r2 = 0.0;
    for k in 0..grid.d {
        let mut d = (x[k] - c[k]).rem_euclid(grid.side);
        if d > grid.side / 2.0 {
            d -= grid.side;
        }
        r2 += d * d;
    }
    (-r2 / (2.0 * width * width)).exp()
}

/// One band piece: noise times Gaussian windows, filtered by `phi_j^4`, normalized.
///
/// The fourth power concentrates the piece where `phi_j` dominates its
/// neighbours, so `||S_j u||` follows the spectrum law despite the steep decay.
fn band_piece(spec: &EnsembleSpec, rng: &mut ChaCha8Rng, j: usize) -> Result<SpatialField> {
    let grid = spec.grid;
    let scalar = GridSpec { components: 1, ..grid };
    let values: Vec<C64> = (0..grid.len()).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let mut noise = SpatialField::new(grid, values)?;
    if spec.bump_centers > 0 {
        let width = grid.side / 8.0;
        let centers: Vec<[f64; 2]> = (0..spec.bump_centers)
            .map(|_| [rng.gen_range(0.0..grid.side), if grid.d == 2 { rng.gen_range(0.0..grid.side) } else { 0.0 }])
            .collect();
        let window = SpatialField::from_fn(scalar, |_, x| {
            C64::new(centers.iter().map(|c| periodic_gaussian(&grid, x, *c, width)).sum(), 0.0)
        });
        let pts = grid.points();
        for a in 0..grid.components {
            noise.component_mut(a).iter_mut().zip(&window.values()[..pts]).for_each(|(z, w)| *z *= w);
        }
    }
    let piece = apply_radial(&noise, |r| phi(j, r).powi(4));
    let norm = piece.norm_l2();
    let target = spec.amplitude * (-spec.spectrum * j as f64).exp2();
    Ok(if norm == 0.0 { piece } else { piece.scale(C64::new(target / norm, 0.0)) })
}

/// `e^{i t Laplacian} u0`, the free Schrödinger flow at time `t`.
pub fn free_flow(u0: &SpatialField, t: f64) -> SpatialField {
    apply_symbol(u0, |xi, _| C64::from_polar(1.0, -(xi[0] * xi[0] + xi[1] * xi[1]) * t))
}

/// Free Schrödinger evolution `e^{-i t |xi|^2}` sampled on the grid's time slices.
pub fn free_evolution(u0: &SpatialField) -> SpaceTimeField {
    let grid = *u0.grid();
    let slices = (0..grid.time_samples).map(|n| free_flow(u0, grid.time(n))).collect();
    SpaceTimeField::new(grid, slices).expect("slices share the grid")
}

/// Sample `i` of the ensemble; `stream` separates independent fields of one sample.
///
/// Space-time samples are the free evolutions of the spatial ones.
pub fn random_field(spec: &EnsembleSpec, sample: usize, stream: u64, which: Which) -> Result<Field> {
    spec.validate()?;
    let mut rng = spec.rng(sample, stream);
    let (lo, hi) = spec.band_range(sample);
    let mut u = SpatialField::zeros(spec.grid);
    for j in lo..=hi {
        u = u.add(&band_piece(spec, &mut rng, j)?);
    }
    Ok(match which {
        Which::Spatial => Field::Spatial(u),
        Which::Spacetime => Field::SpaceTime(free_evolution(&u)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub sample: usize,
    pub band: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub name: String,
    pub samples: Vec<Sample>,
    pub max_ratio: f64,
    pub mean_ratio: f64,
    /// Least-squares slope of `log2 ratio` against the band index.
    pub log2_slope: Option<f64>,
    pub insufficient_points: bool,
    /// Which side uses an upper bound in place of an exact norm.
    pub bound_note: String,
    pub baseline: Option<f64>,
    pub pass: bool,
}

/// Least-squares slope of `y` against `x`; `None` with fewer than two distinct `x`.
pub fn regression_slope(points: &[(f64, f64)]) -> Option<f64> {
    let n = points.len() as f64;
    if n < 2.0 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

impl EstimateReport {
    /// Summary statistics and the regression over samples with a positive ratio.
    pub fn from_samples(name: &str, samples: Vec<Sample>, bound_note: &str) -> Result<Self> {
        if let Some(s) = samples.iter().find(|s| !(s.rhs > 0.0) || !s.ratio.is_finite()) {
            return Err(Error::Parameter(format!(
                "{name}: sample {} band {} has rhs {:e} and ratio {:e}",
                s.sample, s.band, s.rhs, s.ratio
            )));
        }
        let max_ratio = samples.iter().map(|s| s.ratio).fold(0.0, f64::max);
        let mean_ratio = if samples.is_empty() {
            0.0
        } else {
            samples.iter().map(|s| s.ratio).sum::<f64>() / samples.len() as f64
        };
        let points: Vec<(f64, f64)> =
            samples.iter().filter(|s| s.ratio > 0.0).map(|s| (s.band as f64, s.ratio.log2())).collect();
        let log2_slope = regression_slope(&points);
        Ok(EstimateReport {
            name: name.to_string(),
            samples,
            max_ratio,
            mean_ratio,
            log2_slope,
            insufficient_points: log2_slope.is_none(),
            bound_note: bound_note.to_string(),
            baseline: None,
            pass: false,
        })
    }

    /// Sets `pass` from the slope tolerance and an optional pinned baseline.
    pub fn judge(mut self, slope_tol: f64, baseline: Option<f64>) -> Self {
        self.baseline = baseline;
        let slope_ok = self.log2_slope.is_some_and(|s| s <= slope_tol);
        let ratio_ok = baseline.is_none_or(|b| self.max_ratio <= b * BASELINE_SLACK);
        self.pass = slope_ok && ratio_ok;
        self
    }

    /// Columns `sample, band, lhs, rhs, ratio`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sample,band,lhs,rhs,ratio\n");
        for s in &self.samples {
            let _ = writeln!(out, "{},{},{:e},{:e},{:e}", s.sample, s.band, s.lhs, s.rhs, s.ratio);
        }
        out
    }

    /// Summary `{name, max, mean, slope, pass, ...}`.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "name": self.name,
            "max": self.max_ratio,
            "mean": self.mean_ratio,
            "slope": self.log2_slope,
            "pass": self.pass,
            "baseline": self.baseline,
            "insufficient_points": self.insufficient_points,
            "bound": self.bound_note,
        })
    }
}
