use serde::Serialize;

use crate::error::Result;
use crate::expr::{MetricSpec, NonlinearitySpec};
use crate::field::spectral::product;
use crate::field::{derivative, GridSpec, SpaceTimeField, SpatialField, C64};
use crate::linear::lowpass_field;
use crate::lp::{project_spatial, Projection};

type Entries = Vec<Vec<SpatialField>>;

/// Repeats a one-component field across `m` components.
fn broadcast(g: &SpatialField, m: usize) -> SpatialField {
    if m == 1 {
        g.clone()
    } else {
        SpatialField::stack(&vec![g.clone(); m]).expect("same grid")
    }
}

/// `sum_{kl} d_k (g^{kl} d_l u)` with dealiased products; linear in `g`.
pub fn div_grad(g: &[Vec<SpatialField>], u: &SpatialField) -> Result<SpatialField> {
    let m = u.grid().components;
    let mut acc = SpatialField::zeros(*u.grid());
    for (k, row) in g.iter().enumerate() {
        let mut flux = SpatialField::zeros(*u.grid());
        for (l, e) in row.iter().enumerate() {
            flux = flux.add(&product(&broadcast(e, m), &derivative(u, l + 1)?));
        }
        acc = acc.add(&derivative(&flux, k + 1)?);
    }
    Ok(acc)
}

/// Second-order finite-difference `d/dt` on the output slices.
pub fn time_derivative(u: &SpaceTimeField) -> SpaceTimeField {
    let grid = *u.grid();
    let m = grid.time_samples;
    let h = grid.dt();
    let s = u.slices();
    let comb = |terms: &[(f64, usize)]| {
        let mut out = SpatialField::zeros(*s[0].grid());
        for (c, n) in terms {
            out = out.add(&s[*n].scale(C64::new(c / h, 0.0)));
        }
        out
    };
    let slices = (0..m)
        .map(|n| match n {
            0 if m >= 3 => comb(&[(-1.5, 0), (2.0, 1), (-0.5, 2)]),
            0 => comb(&[(-1.0, 0), (1.0, 1)]),
            n if n == m - 1 && m >= 3 => comb(&[(1.5, n), (-2.0, n - 1), (0.5, n - 2)]),
            n if n == m - 1 => comb(&[(1.0, n), (-1.0, n - 1)]),
            n => comb(&[(0.5, n + 1), (-0.5, n - 1)]),
        })
        .collect();
    SpaceTimeField::new(grid, slices).expect("slices share the grid")
}

/// `i u_t + d_k g^{kl}(u) d_l u - F(u, grad u)` on the output slices.
pub fn equation_residual(u: &SpaceTimeField, metric: &MetricSpec, f: &NonlinearitySpec) -> Result<SpaceTimeField> {
    let ut = time_derivative(u);
    let slices = u
        .slices()
        .iter()
        .zip(ut.slices())
        .map(|(s, st)| {
            let g = metric.evaluate(s)?;
            Ok(st.scale(C64::new(0.0, 1.0)).add(&div_grad(&g, s)?).sub(&f.evaluate(s)?))
        })
        .collect::<Result<Vec<_>>>()?;
    SpaceTimeField::new(*u.grid(), slices)
}

fn split(g: &Entries, j: usize) -> Result<(Entries, Entries)> {
    let lo: Entries =
        g.iter().map(|r| r.iter().map(|e| lowpass_field(e, j)).collect::<Result<Vec<_>>>()).collect::<Result<_>>()?;
    let hi = g.iter().zip(&lo).map(|(r, q)| r.iter().zip(q).map(|(a, b)| a.sub(b)).collect()).collect();
    Ok((lo, hi))
}

/// `f_j` and its three terms for one band.
#[derive(Debug, Clone)]
pub struct FjTerms {
    pub j: usize,
    pub f_j: SpaceTimeField,
    /// `S_j F(u, grad u)`.
    pub source: SpaceTimeField,
    /// `S_j d g_{>j-4} d u`.
    pub high_coefficient: SpaceTimeField,
    /// `[S_j, d g_{<j-4} d] u`.
    pub commutator: SpaceTimeField,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FjNorms {
    pub j: usize,
    pub f_j: f64,
    pub source: f64,
    pub high_coefficient: f64,
    pub commutator: f64,
}

impl FjTerms {
    /// Space-time `L^2` norms of each term.
    pub fn norms(&self) -> FjNorms {
        FjNorms {
            j: self.j,
            f_j: self.f_j.norm_l2tx(),
            source: self.source.norm_l2tx(),
            high_coefficient: self.high_coefficient.norm_l2tx(),
            commutator: self.commutator.norm_l2tx(),
        }
    }
}

/// `f_j = S_j F - S_j d g_{>j-4} d u - [S_j, d g_{<j-4} d] u`.
///
/// With `L_j = i d_t + d g_{<j-4} d` this makes `L_j S_j u - f_j` equal to
/// `S_j` of the full equation residual.
pub fn compute_fj(u: &SpaceTimeField, metric: &MetricSpec, f: &NonlinearitySpec, j: usize) -> Result<FjTerms> {
    let sj = |x: &SpatialField| project_spatial(x, Projection::Band(j));
    let mut src = Vec::new();
    let mut high = Vec::new();
    let mut comm = Vec::new();
    let mut total = Vec::new();
    for s in u.slices() {
        let g = metric.evaluate(s)?;
        let (lo, hi) = split(&g, j)?;
        let a = sj(&f.evaluate(s)?)?;
        let b = sj(&div_grad(&hi, s)?)?;
        let c = sj(&div_grad(&lo, s)?)?.sub(&div_grad(&lo, &sj(s)?)?);
        total.push(a.sub(&b).sub(&c));
        src.push(a);
        high.push(b);
        comm.push(c);
    }
    let grid = *u.grid();
    Ok(FjTerms {
        j,
        f_j: SpaceTimeField::new(grid, total)?,
        source: SpaceTimeField::new(grid, src)?,
        high_coefficient: SpaceTimeField::new(grid, high)?,
        commutator: SpaceTimeField::new(grid, comm)?,
    })
}

/// `L_j S_j u` with the discrete time derivative used throughout.
fn principal(u_j: &SpaceTimeField, metric: &MetricSpec, u: &SpaceTimeField, j: usize) -> Result<SpaceTimeField> {
    let ut = time_derivative(u_j);
    let slices = u
        .slices()
        .iter()
        .zip(u_j.slices())
        .zip(ut.slices())
        .map(|((s, sj), st)| {
            let (lo, _) = split(&metric.evaluate(s)?, j)?;
            Ok(st.scale(C64::new(0.0, 1.0)).add(&div_grad(&lo, sj)?))
        })
        .collect::<Result<Vec<_>>>()?;
    SpaceTimeField::new(*u.grid(), slices)
}

/// `max_j ||L_j S_j u - f_j - S_j R(u)||_{L^2} / ||u||_{L^2}` over all admissible bands.
///
/// The identity is exact, so this measures only the decomposition code.
pub fn para_residual(u: &SpaceTimeField, metric: &MetricSpec, f: &NonlinearitySpec) -> Result<f64> {
    let norm = u.norm_l2tx();
    if norm == 0.0 {
        return Ok(0.0);
    }
    let r = equation_residual(u, metric, f)?;
    let grid: GridSpec = *u.grid();
    let mut worst: f64 = 0.0;
    for j in 0..=grid.j_max() {
        let band = |x: &SpaceTimeField| x.try_map_slices(|s| project_spatial(s, Projection::Band(j)));
        let u_j = band(u)?;
        let lhs = principal(&u_j, metric, u, j)?;
        let fj = compute_fj(u, metric, f, j)?;
        let diff = lhs.sub(&fj.f_j).sub(&band(&r)?);
        worst = worst.max(diff.norm_l2tx() / norm);
    }
    Ok(worst)
}
