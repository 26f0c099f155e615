use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{random_field, EnsembleSpec, EstimateReport, Sample, Which, SLOPE_TOL};
use crate::error::{Error, Result};
use crate::expr::{MetricSpec, NonlinearitySpec};
use crate::field::spectral::{apply_symbol, product};
use crate::field::{derivative, Field, SpaceTimeField, SpatialField, C64};
use crate::lp::{project_spatial, Projection};
use crate::quasi::compute_fj;
use crate::spaces::{band_norms, default_delta, frequency_envelope, pairing_tx, weighted_sum, Densities, Space};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimate {
    Algebra,
    Moser,
    Bilinear1,
    Bilinear2,
    Bilinear3,
    Commutator,
    Bernstein,
    FjBound,
    Duality,
}

pub const ESTIMATES: [Estimate; 9] = [
    Estimate::Algebra,
    Estimate::Moser,
    Estimate::Bilinear1,
    Estimate::Bilinear2,
    Estimate::Bilinear3,
    Estimate::Commutator,
    Estimate::Bernstein,
    Estimate::FjBound,
    Estimate::Duality,
];

impl Estimate {
    pub fn name(&self) -> &'static str {
        match self {
            Estimate::Algebra => "algebra",
            Estimate::Moser => "moser",
            Estimate::Bilinear1 => "bilinear1",
            Estimate::Bilinear2 => "bilinear2",
            Estimate::Bilinear3 => "bilinear3",
            Estimate::Commutator => "commutator",
            Estimate::Bernstein => "bernstein",
            Estimate::FjBound => "fj_bound",
            Estimate::Duality => "duality",
        }
    }

    /// Band-indexed variants report one sample per `S_k` piece.
    pub fn is_band_indexed(&self) -> bool {
        matches!(self, Estimate::Bilinear3 | Estimate::Commutator | Estimate::FjBound)
    }
}

impl FromStr for Estimate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ESTIMATES.iter().copied().find(|e| e.name() == s).ok_or_else(|| {
            let known: Vec<&str> = ESTIMATES.iter().map(Estimate::name).collect();
            Error::Parameter(format!("unknown estimate {s:?}; known: {}", known.join(", ")))
        })
    }
}

/// Order-zero multiplier in the commutator estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommutatorSymbol {
    Identity,
    /// `xi_1 / <xi>`.
    Riesz,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyParams {
    /// Regularity; defaults to `d/2 + 2.25`.
    pub s: Option<f64>,
    /// Second regularity of the bilinear bounds; defaults to the top of its range.
    pub sigma: Option<f64>,
    /// `F` for the Moser and `f_j` estimates.
    pub nonlinearity: String,
    /// Separation in `S_{<k-gap} g` of the commutator estimate.
    pub gap: usize,
    pub symbol: CommutatorSymbol,
    pub slope_tol: f64,
}

impl Default for VerifyParams {
    fn default() -> Self {
        VerifyParams {
            s: None,
            sigma: None,
            nonlinearity: "abs2(u)*u".into(),
            gap: 4,
            symbol: CommutatorSymbol::Riesz,
            slope_tol: SLOPE_TOL,
        }
    }
}

struct Norms {
    d: usize,
    delta_s: f64,
}

impl Norms {
    fn x(&self, u: &SpaceTimeField, s: f64) -> Result<f64> {
        Ok(weighted_sum(&band_norms(&Field::SpaceTime(u.clone()), Space::X)?, s))
    }

    fn y(&self, u: &SpaceTimeField, s: f64) -> Result<f64> {
        Ok(weighted_sum(&band_norms(&Field::SpaceTime(u.clone()), Space::Y)?, s))
    }

    fn envelope(&self, u: &SpaceTimeField, s: f64) -> Result<Vec<f64>> {
        Ok(frequency_envelope(&Field::SpaceTime(u.clone()), s, Space::X, default_delta(self.delta_s, self.d))?.a)
    }
}

fn st(f: Field) -> SpaceTimeField {
    match f {
        Field::SpaceTime(u) => u,
        Field::Spatial(u) => SpaceTimeField::constant_in_time(&u),
    }
}

fn mul(u: &SpaceTimeField, v: &SpaceTimeField) -> SpaceTimeField {
    u.zip_slices(v, product)
}

fn band(u: &SpaceTimeField, p: Projection) -> Result<SpaceTimeField> {
    u.try_map_slices(|s| project_spatial(s, p))
}

fn row(sample: usize, band: usize, lhs: f64, rhs: f64) -> Sample {
    Sample { sample, band, lhs, rhs, ratio: lhs / rhs }
}

fn check_sigma(name: &str, sigma: f64, hi: f64) -> Result<()> {
    if !(0.0..=hi).contains(&sigma) {
        return Err(Error::Parameter(format!("{name}: sigma = {sigma} outside [0, {hi}]")));
    }
    Ok(())
}

/// `nabla . [S_{<k-gap} g, A(D)] nabla` applied to one slice.
fn commutator_slice(g_lo: &SpatialField, w: &SpatialField, symbol: CommutatorSymbol) -> Result<SpatialField> {
    let a = |f: &SpatialField| match symbol {
        CommutatorSymbol::Identity => f.clone(),
        CommutatorSymbol::Riesz => {
            apply_symbol(f, |xi, _| C64::new(xi[0] / (1.0 + xi[0] * xi[0] + xi[1] * xi[1]).sqrt(), 0.0))
        }
    };
    let mut acc = SpatialField::zeros(*w.grid());
    for axis in 1..=w.grid().d {
        let dw = derivative(w, axis)?;
        let c = product(g_lo, &a(&dw)).sub(&a(&product(g_lo, &dw)));
        acc = acc.add(&derivative(&c, axis)?);
    }
    Ok(acc)
}

/// Per-sample ratios of one inequality over the ensemble, with the frequency regression.
///
/// `Y` norms on the left-hand side use the upper bound `Y_upper`, which can
/// only enlarge the ratios.
pub fn verify(estimate: Estimate, spec: &EnsembleSpec, params: &VerifyParams) -> Result<EstimateReport> {
    spec.validate()?;
    let d = spec.grid.d;
    let s = params.s.unwrap_or(d as f64 / 2.0 + 2.25);
    let half = d as f64 / 2.0;
    let needs_high = !matches!(estimate, Estimate::Algebra | Estimate::Moser | Estimate::Bernstein | Estimate::Duality);
    if needs_high && !(s > half + 2.0) {
        return Err(Error::Parameter(format!("{}: needs s > d/2 + 2, got {s}", estimate.name())));
    }
    if !(s > half) {
        return Err(Error::Parameter(format!("{}: needs s > d/2, got {s}", estimate.name())));
    }
    let sigma = match estimate {
        Estimate::Bilinear1 => {
            let v = params.sigma.unwrap_or(s - 1.0);
            check_sigma("bilinear1", v, s - 1.0)?;
            v
        }
        Estimate::Bilinear2 | Estimate::Bilinear3 => {
            let v = params.sigma.unwrap_or(s);
            check_sigma(estimate.name(), v, s)?;
            v
        }
        _ => s,
    };
    let f = NonlinearitySpec::parse(std::slice::from_ref(&params.nonlinearity))?;
    let metric = MetricSpec::conformal(d);
    let norms = Norms { d, delta_s: s };
    let j_max = spec.grid.j_max();

    let per_sample = |i: usize| -> Result<Vec<Sample>> {
        let top = spec.band_range(i).1;
        let u = st(random_field(spec, i, 0, Which::Spacetime)?);
        let v = || -> Result<SpaceTimeField> { Ok(st(random_field(spec, i, 1, Which::Spacetime)?)) };
        Ok(match estimate {
            Estimate::Algebra => {
                let v = v()?;
                vec![row(i, top, norms.x(&mul(&u, &v), s)?, norms.x(&u, s)? * norms.x(&v, s)?)]
            }
            Estimate::Moser => {
                let fu = u.try_map_slices(|x| Ok(f.evaluate(x)?))?;
                let nu = norms.x(&u, s)?;
                vec![row(i, top, norms.x(&fu, s)?, nu * (1.0 + nu))]
            }
            Estimate::Bilinear2 => {
                let v = v()?;
                vec![row(i, top, norms.y(&mul(&u, &v), sigma)?, norms.x(&u, s - 1.0)? * norms.x(&v, sigma - 1.0)?)]
            }
            Estimate::Bilinear1 => {
                let v = v()?;
                vec![row(i, top, norms.y(&mul(&u, &v), sigma)?, norms.x(&u, s - 2.0)? * norms.x(&v, sigma)?)]
            }
            Estimate::Bilinear3 => {
                let v = v()?;
                let (a, b) = (norms.envelope(&u, s)?, norms.envelope(&v, sigma)?);
                let base = norms.x(&u, s - 2.0)? * norms.x(&v, sigma)?;
                let mut rows = Vec::new();
                for k in 0..=j_max {
                    let high = if k >= 4 { band(&v, Projection::AtLeast(k - 4))? } else { v.clone() };
                    let w = band(&mul(&u, &high), Projection::Band(k))?;
                    rows.push(row(i, k, norms.y(&w, sigma)?, (a[k] + b[k]) * base));
                }
                rows
            }
            Estimate::Commutator => {
                let g = match random_field(spec, i, 2, Which::Spatial)? {
                    Field::Spatial(g) => g.map(|z| C64::new(z.re, 0.0)),
                    Field::SpaceTime(_) => unreachable!("spatial sample requested"),
                };
                let g_norm = norms.x(&SpaceTimeField::constant_in_time(&g), s)?;
                let mut rows = Vec::new();
                for k in params.gap + 1..=j_max {
                    let g_lo = project_spatial(&g, Projection::AtMost(k - params.gap - 1))?;
                    let uk = band(&u, Projection::Band(k))?;
                    let c = uk.try_map_slices(|x| commutator_slice(&g_lo, x, params.symbol))?;
                    rows.push(row(i, k, norms.y(&c, 0.0)?, g_norm * norms.x(&uk, 0.0)?));
                }
                rows
            }
            Estimate::Bernstein => vec![row(i, top, u.norm_sup(), norms.x(&u, s)?)],
            Estimate::FjBound => {
                let a = norms.envelope(&u, s)?;
                let nu = norms.x(&u, s)?;
                let mut rows = Vec::new();
                // below band 5 the split g = g_{<j-4} + g_{>j-4} is degenerate
                for j in 5..=j_max {
                    let fj = compute_fj(&u, &metric, &f, j)?.f_j;
                    rows.push(row(i, j, norms.y(&fj, s)?, a[j] * nu * nu));
                }
                rows
            }
            Estimate::Duality => {
                let v = v()?;
                let lhs = pairing_tx(&v, &u)?.norm();
                let rhs = Densities::of(&v).y_upper(None).0 * Densities::of(&u).x_norm(None);
                vec![row(i, top, lhs, rhs)]
            }
        })
    };

    let rows: Vec<Vec<Sample>> = (0..spec.count).into_par_iter().map(per_sample).collect::<Result<_>>()?;
    let note = match estimate {
        Estimate::Bilinear1 | Estimate::Bilinear2 | Estimate::Bilinear3 | Estimate::Commutator | Estimate::FjBound => {
            "lhs uses Y_upper"
        }
        Estimate::Duality => "rhs uses Y_upper",
        _ => "exact norms",
    };
    let report = EstimateReport::from_samples(estimate.name(), rows.into_iter().flatten().collect(), note)?;
    Ok(report.judge(params.slope_tol, None))
}
