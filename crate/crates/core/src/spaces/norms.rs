use serde::{Deserialize, Serialize};

use super::cubes::{cube_sums, CubePartition};
use crate::error::{Error, Result};
use crate::field::{inner_product, Field, GridSpec, SpaceTimeField, SpatialField, C64};
use crate::lp::{self, DyadicBand, Projection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Exponent {
    One,
    Two,
    Inf,
}

/// Base space `U` inside `l^p_j U`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaseNorm {
    L2,
    L2tx,
    LinfL2,
}

/// Which `l^1 s` scale: `l^1 H^s`, `l^1 X^s` or `l^1 Y^s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Space {
    H,
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dyadic {
    Xj,
    Yj,
}

/// Squared moduli of a space-time field per slice, plus the trapezoid time integral.
///
/// Every norm below depends on the field only through these densities.
#[derive(Debug, Clone)]
pub struct Densities {
    grid: GridSpec,
    slices: Vec<Vec<f64>>,
    weights: Vec<f64>,
    integrated: Vec<f64>,
}

impl Densities {
    pub fn of(u: &SpaceTimeField) -> Self {
        let slices: Vec<Vec<f64>> = u.slices().iter().map(|s| s.density()).collect();
        let weights = u.time_weights();
        let mut integrated = vec![0.0; u.grid().points()];
        for (s, w) in slices.iter().zip(&weights) {
            for (o, r) in integrated.iter_mut().zip(s) {
                *o += w * r;
            }
        }
        Densities { grid: *u.grid(), slices, weights, integrated }
    }

    pub fn integrated(&self) -> &[f64] {
        &self.integrated
    }

    fn weighted(&self, w: &[f64]) -> Vec<f64> {
        self.integrated.iter().zip(w).map(|(r, c)| r * c * c).collect()
    }

    fn slice_norms(&self, w: Option<&[f64]>) -> Vec<f64> {
        let vol = self.grid.cell_volume();
        self.slices
            .iter()
            .map(|s| {
                let m: f64 = match w {
                    Some(w) => s.iter().zip(w).map(|(r, c)| r * c * c).sum(),
                    None => s.iter().sum(),
                };
                (m * vol).sqrt()
            })
            .collect()
    }

    /// `sup_t ||c u(t)||_{L^2}` for the cutoff `c` (or 1).
    pub fn linf_l2(&self, w: Option<&[f64]>) -> f64 {
        self.slice_norms(w).into_iter().fold(0.0, f64::max)
    }

    /// `int ||c u(t)||_{L^2} dt`.
    pub fn l1_l2(&self, w: Option<&[f64]>) -> f64 {
        self.slice_norms(w).iter().zip(&self.weights).map(|(n, t)| n * t).sum()
    }

    pub fn l2tx(&self, w: Option<&[f64]>) -> f64 {
        let vol = self.grid.cell_volume();
        let m: f64 = match w {
            Some(w) => self.integrated.iter().zip(w).map(|(r, c)| r * c * c).sum(),
            None => self.integrated.iter().sum(),
        };
        (m * vol).sqrt()
    }

    pub fn x_norm(&self, w: Option<&[f64]>) -> f64 {
        match w {
            Some(w) => x_norm_density(&self.grid, &self.weighted(w)),
            None => x_norm_density(&self.grid, &self.integrated),
        }
    }

    pub fn y_upper(&self, w: Option<&[f64]>) -> (f64, usize) {
        match w {
            Some(w) => y_upper_density(&self.grid, &self.weighted(w)),
            None => y_upper_density(&self.grid, &self.integrated),
        }
    }

    pub fn xj(&self, j: usize, w: Option<&[f64]>) -> f64 {
        (j as f64 / 2.0).exp2() * self.x_norm(w) + self.linf_l2(w)
    }

    pub fn yj(&self, j: usize, w: Option<&[f64]>) -> f64 {
        ((-(j as f64) / 2.0).exp2() * self.y_upper(w).0).min(self.l1_l2(w))
    }
}

/// `sup_l sup_Q 2^{-l/2} ||u||_{L^2([0,1] x Q)}` from the time-integrated density.
pub fn x_norm_density(grid: &GridSpec, integrated: &[f64]) -> f64 {
    (0..=grid.max_scale())
        .map(|l| {
            let best = cube_sums(grid, integrated, l).into_iter().fold(0.0, f64::max);
            (-(l as f64) / 2.0).exp2() * best.sqrt()
        })
        .fold(0.0, f64::max)
}

/// Smallest single-scale atomic sum `sum_Q 2^{l/2} ||f||_{L^2([0,1] x Q)}` and its scale.
pub fn y_upper_density(grid: &GridSpec, integrated: &[f64]) -> (f64, usize) {
    (0..=grid.max_scale())
        .map(|l| {
            let s: f64 = cube_sums(grid, integrated, l).iter().map(|m| m.sqrt()).sum();
            ((l as f64 / 2.0).exp2() * s, l)
        })
        .fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a })
}

/// Local energy norm with sharp cube restrictions.
pub fn x_norm(u: &SpaceTimeField) -> f64 {
    x_norm_density(u.grid(), &u.time_integrated_density())
}

/// Two-sided bound on the atomic norm `||f||_Y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct YBounds {
    pub upper: f64,
    pub lower: f64,
    /// Scale of the cube family realizing `upper`.
    pub upper_scale: usize,
}

/// `lower <= ||f||_Y <= upper`.
///
/// The upper bound splits `f` along one anchored cube family (each normalized
/// piece is an atom). The lower bound is `max |<f, u>| / ||u||_X` over the
/// probes: the restrictions `1_Q f`, their phase-aligned indicators
/// `1_Q f / |f|`, the smooth tents `chi_Q` and `f` itself.
pub fn y_bounds(f: &SpaceTimeField) -> YBounds {
    let grid = *f.grid();
    let dens = Densities::of(f);
    let (upper, upper_scale) = dens.y_upper(None);
    if f.is_zero() {
        return YBounds { upper: 0.0, lower: 0.0, upper_scale };
    }
    let vol = grid.cell_volume();
    let weights = f.time_weights();
    let pts = grid.points();

    // integrated |f| and integrated support indicator, per grid point
    let mut abs_int = vec![0.0; pts];
    let mut supp_int = vec![0.0; pts];
    for (s, w) in f.slices().iter().zip(&weights) {
        for a in 0..grid.components {
            for (p, v) in s.component(a).iter().enumerate() {
                let r = v.norm();
                abs_int[p] += w * r;
                if r > 0.0 {
                    supp_int[p] += w;
                }
            }
        }
    }

    let mut lower = dens.l2tx(None).powi(2) / dens.x_norm(None);
    for l in 0..=grid.max_scale() {
        let mass = cube_sums(&grid, dens.integrated(), l);
        let absm = cube_sums(&grid, &abs_int, l);
        for (q, (&m, &am)) in mass.iter().zip(&absm).enumerate() {
            if m == 0.0 {
                continue;
            }
            let ind: Vec<f64> = (0..pts).map(|p| if super::cubes::cube_of(&grid, l, p) == q { 1.0 } else { 0.0 }).collect();
            let restricted: Vec<f64> = dens.integrated().iter().zip(&ind).map(|(r, i)| r * i).collect();
            lower = lower.max(m / x_norm_density(&grid, &restricted));
            let phase: Vec<f64> = supp_int.iter().zip(&ind).map(|(r, i)| r * i).collect();
            let xp = x_norm_density(&grid, &phase);
            if xp > 0.0 {
                lower = lower.max(am / xp);
            }
        }
        // smooth tents, constant in time and in every component
        let part = CubePartition::new(&grid, l).expect("scale within box");
        for q in 0..part.len() {
            let chi = part.cutoff(q);
            let mut pair = C64::new(0.0, 0.0);
            for (s, w) in f.slices().iter().zip(&weights) {
                for a in 0..grid.components {
                    let c: C64 = s.component(a).iter().zip(chi).map(|(v, c)| v.conj() * c).sum();
                    pair += c * *w;
                }
            }
            let tent: Vec<f64> = chi.iter().map(|c| c * c * grid.components as f64).collect();
            let xt = x_norm_density(&grid, &tent);
            if xt > 0.0 {
                lower = lower.max(pair.norm() * vol / xt);
            }
        }
    }
    YBounds { upper, lower: lower.min(f64::MAX), upper_scale }
}

/// `X_j` or `Y_j` norm of a band-localized space-time field.
pub fn weighted_dyadic_norm(b: &DyadicBand, which: Dyadic) -> Result<f64> {
    let Field::SpaceTime(u) = &b.field else {
        return Err(Error::Tag("X_j / Y_j norms need a space-time field".into()));
    };
    let d = Densities::of(u);
    Ok(match which {
        Dyadic::Xj => d.xj(b.j, None),
        Dyadic::Yj => d.yj(b.j, None),
    })
}

fn fold_exponent(terms: impl Iterator<Item = f64>, p: Exponent) -> f64 {
    match p {
        Exponent::One => terms.sum(),
        Exponent::Two => terms.map(|t| t * t).sum::<f64>().sqrt(),
        Exponent::Inf => terms.fold(0.0, f64::max),
    }
}

/// `||u||_{l^p_j U}` with the smooth cutoffs `chi_Q` at scale `j` (clamped to the box).
pub fn lpj_norm(u: &Field, p: Exponent, j: usize, base: BaseNorm) -> Result<f64> {
    let part = CubePartition::clamped(u.grid(), j);
    lpj_norm_with(u, p, &part, base, false)
}

pub fn lpj_norm_with(u: &Field, p: Exponent, part: &CubePartition, base: BaseNorm, freq: bool) -> Result<f64> {
    let cut = part.cutoffs(freq);
    match (u, base) {
        (Field::Spatial(f), BaseNorm::L2) => {
            let rho = f.density();
            let vol = f.grid().cell_volume();
            Ok(fold_exponent(
                cut.iter().map(|c| (rho.iter().zip(c).map(|(r, c)| r * c * c).sum::<f64>() * vol).sqrt()),
                p,
            ))
        }
        (Field::SpaceTime(f), BaseNorm::L2tx | BaseNorm::LinfL2) => {
            let d = Densities::of(f);
            Ok(fold_exponent(
                cut.iter().map(|c| if base == BaseNorm::L2tx { d.l2tx(Some(c)) } else { d.linf_l2(Some(c)) }),
                p,
            ))
        }
        _ => Err(Error::Tag(format!("base norm {base:?} does not apply to this field"))),
    }
}

/// `sum_Q ||chi_Q u||` at scale `j` in `L^2`, `X_j` or `Y_j`.
pub fn l1j_band_norm(band: &Field, j: usize, space: Space, freq_localized: bool) -> Result<f64> {
    let part = CubePartition::clamped(band.grid(), j);
    let cut = part.cutoffs(freq_localized);
    match (band, space) {
        (Field::Spatial(_), Space::H) => lpj_norm_with(band, Exponent::One, &part, BaseNorm::L2, freq_localized),
        (Field::SpaceTime(f), Space::X | Space::Y) => {
            let d = Densities::of(f);
            Ok(cut
                .iter()
                .map(|c| if space == Space::X { d.xj(j, Some(c)) } else { d.yj(j, Some(c)) })
                .sum())
        }
        (Field::SpaceTime(f), Space::H) => {
            // l^1 H^s of a space-time field is read at t = 0
            l1j_band_norm(&Field::Spatial(f.slice(0).clone()), j, Space::H, freq_localized)
        }
        _ => Err(Error::Tag(format!("{space:?} norms need a space-time field"))),
    }
}

/// Unweighted band norms `||S_j u||_{l^1_j U_j}` for `j = 0..=j_max`.
pub fn band_norms(u: &Field, space: Space) -> Result<Vec<f64>> {
    (0..=u.grid().j_max())
        .map(|j| {
            let b = lp::project(u, Projection::Band(j))?;
            l1j_band_norm(&b, j, space, true)
        })
        .collect()
}

/// `(sum_j 2^{2sj} b_j^2)^{1/2}` for unweighted band norms `b_j`.
pub fn weighted_sum(bands: &[f64], s: f64) -> f64 {
    bands
        .iter()
        .enumerate()
        .map(|(j, b)| ((s * j as f64).exp2() * b).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// `||u||_{l^1 H^s}`, `||u||_{l^1 X^s}` or `||u||_{l^1 Y^s}`.
pub fn l1_sobolev_norm(u: &Field, s: f64, space: Space) -> Result<f64> {
    if s < 0.0 {
        return Err(Error::Parameter(format!("regularity s = {s} must be nonnegative")));
    }
    Ok(weighted_sum(&band_norms(u, space)?, s))
}

/// Space-time `L^2` pairing `int_0^1 <f, u> dt` (trapezoid rule).
pub fn pairing_tx(f: &SpaceTimeField, u: &SpaceTimeField) -> Result<C64> {
    let w = f.time_weights();
    let mut acc = C64::new(0.0, 0.0);
    for ((a, b), t) in f.slices().iter().zip(u.slices()).zip(w) {
        acc += inner_product(a, b)? * t;
    }
    Ok(acc)
}

/// `||u||_{L^infinity}` over all samples.
pub fn sup_norm(u: &Field) -> f64 {
    match u {
        Field::Spatial(f) => f.norm_sup(),
        Field::SpaceTime(f) => f.norm_sup(),
    }
}

/// Convenience: `l^1 H^s` of a spatial field.
pub fn l1_hs(u: &SpatialField, s: f64) -> Result<f64> {
    l1_sobolev_norm(&Field::Spatial(u.clone()), s, Space::H)
}

pub fn l1_xs(u: &SpaceTimeField, s: f64) -> Result<f64> {
    l1_sobolev_norm(&Field::SpaceTime(u.clone()), s, Space::X)
}

pub fn l1_ys(u: &SpaceTimeField, s: f64) -> Result<f64> {
    l1_sobolev_norm(&Field::SpaceTime(u.clone()), s, Space::Y)
}
