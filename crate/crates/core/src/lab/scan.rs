use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EstimateReport, Sample};
use crate::error::{Error, Result};
use crate::field::spectral::product;
use crate::field::{GridSpec, SpaceTimeField, SpatialField, C64};
use crate::linear::{free_frequencies, rotate, solve_freq_localized, step_size, Coeff, LinearProblem, Metric, PropagatorConfig};
use crate::lp::{project_spatial, Projection};
use crate::spaces::Densities;

/// Expected homogeneous slope of `log2 ||u_j||_X` against `j`.
pub const SMOOTHING_SLOPE: f64 = -0.5;
pub const SMOOTHING_SLOPE_TOL: f64 = 0.15;
/// Largest admissible spread `max/min` of the inhomogeneous `X_j` response.
pub const INHOMOGENEOUS_SPREAD: f64 = 4.0;
/// Width of the window that cuts the inhomogeneous forcing out of a free wave.
const WINDOW: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanKind {
    /// Band-`j` data, no forcing: `||u_j||_X / ||u_{0j}||_{L^2}`.
    Homogeneous,
    /// Zero data, band-`j` forcing of unit `Y_j` norm: `||u_j||_{X_j}`.
    ///
    /// The forcing is the free wave of the packet seen through a fixed
    /// window, so it stays resonant while the wave crosses the window.
    Inhomogeneous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSpec {
    pub grid: GridSpec,
    pub j_range: [usize; 2],
    /// Amplitude `eps` of the metric `g = 1 + eps (1 + cos(2 pi x_1 / L)) / 2`; 0 for `g = I`.
    pub metric_amplitude: f64,
    pub kind: ScanKind,
}

impl Default for ScanSpec {
    fn default() -> Self {
        ScanSpec {
            grid: GridSpec { d: 1, n: 65536, side: 256.0, time_samples: 64, components: 1 },
            j_range: [3, 7],
            metric_amplitude: 0.0,
            kind: ScanKind::Homogeneous,
        }
    }
}

/// Unit-`L^2` band-`j` packet centred at `L/4` and moving along the first axis.
fn packet(grid: GridSpec, j: usize) -> Result<SpatialField> {
    let k0 = std::f64::consts::TAU / grid.side;
    let xi = ((j as f64).exp2() * 1.2 / k0).round() * k0;
    let c = grid.side / 4.0;
    let width = 4.0;
    let f = SpatialField::from_fn(grid, |_, x| {
        let r2 = (x[0] - c).powi(2) + if grid.d == 2 { (x[1] - c).powi(2) } else { 0.0 };
        C64::from_polar((-r2 / (2.0 * width * width)).exp(), xi * x[0])
    });
    let f = project_spatial(&f, Projection::Band(j))?;
    Ok(f.scale(C64::new(1.0 / f.norm_l2(), 0.0)))
}

fn metric(grid: &GridSpec, eps: f64) -> Metric {
    if eps == 0.0 {
        return Metric::identity(grid.d);
    }
    let scalar = GridSpec { components: 1, ..*grid };
    let k = std::f64::consts::TAU / grid.side;
    let g = SpatialField::from_fn(scalar, |_, x| C64::new(1.0 + eps * 0.5 * (1.0 + (k * x[0]).cos()), 0.0));
    let entries = (0..grid.d)
        .map(|a| (0..grid.d).map(|b| if a == b { Coeff::Static(g.clone()) } else { Coeff::real(0.0) }).collect())
        .collect();
    Metric { entries }
}

/// Local smoothing scan over a range of bands.
///
/// Homogeneous scans pass when the slope is `-0.5 +- 0.15`; inhomogeneous
/// scans when the `X_j` responses stay within a factor [`INHOMOGENEOUS_SPREAD`].
pub fn smoothing_scan(spec: &ScanSpec, cfg: &PropagatorConfig) -> Result<EstimateReport> {
    spec.grid.validate()?;
    let [lo, hi] = spec.j_range;
    if lo > hi {
        return Err(Error::Parameter(format!("empty band range {lo}..={hi}")));
    }
    if hi > spec.grid.j_max() {
        return Err(Error::BandOverflow { j: hi, j_max: spec.grid.j_max() });
    }
    let grid = GridSpec { components: 1, ..spec.grid };
    let g = metric(&grid, spec.metric_amplitude);
    let run = |j: usize| -> Result<Sample> {
        let data = packet(grid, j)?;
        match spec.kind {
            ScanKind::Homogeneous => {
                let p = LinearProblem::free(data.clone()).with_metric(g.clone());
                let u = solve_freq_localized(j, &p, cfg)?.u;
                let x = Densities::of(&u).x_norm(None);
                let n = data.norm_l2();
                Ok(Sample { sample: 0, band: j, lhs: x, rhs: n, ratio: x / n })
            }
            ScanKind::Inhomogeneous => {
                // a free wave of the solver's own flow, seen through a fixed window
                let step = step_size(&LinearProblem::free(data.clone()), cfg);
                let cfg = PropagatorConfig { substeps: Some((grid.dt() / step).round() as usize), ..*cfg };
                let omega = free_frequencies(&grid, Some(step));
                let c = grid.side / 4.0;
                let window = SpatialField::from_fn(grid, |_, x| {
                    C64::new((-(x[0] - c).powi(2) / (2.0 * WINDOW * WINDOW)).exp(), 0.0)
                });
                let h: Vec<SpatialField> = (0..grid.time_samples)
                    .map(|n| project_spatial(&product(&rotate(&data, &omega, grid.time(n)), &window), Projection::Band(j)))
                    .collect::<Result<_>>()?;
                let h = SpaceTimeField::new(grid, h)?;
                let scale = C64::new(1.0 / Densities::of(&h).yj(j, None), 0.0);
                let profile: Vec<SpatialField> =
                    h.slices().iter().enumerate().map(|(n, s)| rotate(s, &omega, -grid.time(n)).scale(scale)).collect();
                let profile = SpaceTimeField::new(grid, profile)?;
                let p = LinearProblem::free(SpatialField::zeros(grid))
                    .with_metric(g.clone())
                    .with_free_frame_forcing(profile, Some(step));
                let u = solve_freq_localized(j, &p, &cfg)?.u;
                let xj = Densities::of(&u).xj(j, None);
                Ok(Sample { sample: 0, band: j, lhs: xj, rhs: 1.0, ratio: xj })
            }
        }
    };
    let samples: Vec<Sample> = (lo..=hi).into_par_iter().map(run).collect::<Result<_>>()?;
    let name = match spec.kind {
        ScanKind::Homogeneous => "smoothing_homogeneous",
        ScanKind::Inhomogeneous => "smoothing_inhomogeneous",
    };
    let mut report = EstimateReport::from_samples(name, samples, "rhs uses Y_upper")?;
    report.pass = match spec.kind {
        ScanKind::Homogeneous => report.log2_slope.is_some_and(|s| (s - SMOOTHING_SLOPE).abs() <= SMOOTHING_SLOPE_TOL),
        ScanKind::Inhomogeneous => {
            let min = report.samples.iter().map(|s| s.ratio).fold(f64::INFINITY, f64::min);
            !report.insufficient_points && report.max_ratio <= INHOMOGENEOUS_SPREAD * min
        }
    };
    Ok(report)
}
