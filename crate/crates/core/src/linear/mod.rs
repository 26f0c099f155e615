//! Divergence-form linear Schrödinger propagator with energy and Morawetz diagnostics.
//!
//! The equation is `i u_t - A u + V . grad u + W u = h` with the self-adjoint
//! `A = -d_k g^{kl} d_l`. Internally `A = A0 + P (A - A0) P`, where `A0` is the
//! spectral `-Laplacian` and `P` the dealiasing projection, so `A` stays
//! exactly symmetric in the discrete pairing.

mod banded;
mod diagnostics;
mod operator;
mod solver;

pub use diagnostics::{energy_identity_residual, morawetz_residual, MorawetzReport, MorawetzSpec};
pub(crate) use solver::Forcing;
pub use solver::{free_frequencies, rotate, solve_freq_localized, solve_linear, step_size, InnerSolver, PropagatorConfig, SolveReport, StepDiagnostics};
pub(crate) use solver::lowpass_field;

use operator::{Frozen, Tables};

use crate::error::{Error, Result};
use crate::field::{spectral_transform, Direction, Field, GridSpec, SpaceTimeField, SpatialField, C64};
use crate::spaces;

const SYMMETRY_TOL: f64 = 1e-12;

/// A scalar coefficient that may vary in space and time.
#[derive(Debug, Clone, PartialEq)]
pub enum Coeff {
    Constant(C64),
    Static(SpatialField),
    Dynamic(SpaceTimeField),
}

impl Coeff {
    pub fn real(v: f64) -> Self {
        Coeff::Constant(C64::new(v, 0.0))
    }

    /// Values at time `t`, linearly interpolated between slices.
    pub fn values_at(&self, grid: &GridSpec, t: f64) -> Vec<C64> {
        match self {
            Coeff::Constant(c) => vec![*c; grid.points()],
            Coeff::Static(f) => f.component(0).to_vec(),
            Coeff::Dynamic(f) => {
                let (n, theta) = slice_position(f.grid(), t);
                let (a, b) = (f.slice(n).component(0), f.slice(n + 1).component(0));
                a.iter().zip(b).map(|(a, b)| a * (1.0 - theta) + b * theta).collect()
            }
        }
    }

    pub fn constant(&self) -> Option<C64> {
        match self {
            Coeff::Constant(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_time_dependent(&self) -> bool {
        matches!(self, Coeff::Dynamic(_))
    }

    /// The coefficient as a space-time field on `grid`.
    pub fn to_space_time(&self, grid: &GridSpec) -> SpaceTimeField {
        let scalar = GridSpec { components: 1, ..*grid };
        match self {
            Coeff::Constant(c) => SpaceTimeField::from_fn(scalar, |_, _, _| *c),
            Coeff::Static(f) => {
                SpaceTimeField::new(scalar, vec![f.select(0); scalar.time_samples]).expect("slices share the grid")
            }
            Coeff::Dynamic(f) => f.clone(),
        }
    }

    fn check(&self, grid: &GridSpec, name: &str) -> Result<()> {
        let ok = match self {
            Coeff::Constant(_) => true,
            Coeff::Static(f) => f.grid().same_space(grid) && f.grid().components == 1,
            Coeff::Dynamic(f) => {
                f.grid().same_space(grid) && f.grid().components == 1 && f.grid().time_samples == grid.time_samples
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Dimension(format!("coefficient {name} is not a scalar field on the problem grid")))
        }
    }
}

/// Index of the slice interval containing `t` and the offset within it.
fn slice_position(grid: &GridSpec, t: f64) -> (usize, f64) {
    let m = grid.time_samples;
    let s = (t / grid.dt()).clamp(0.0, (m - 1) as f64);
    let n = (s.floor() as usize).min(m - 2);
    (n, s - n as f64)
}

/// Real symmetric metric `g^{kl}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    pub entries: Vec<Vec<Coeff>>,
}

impl Metric {
    pub fn identity(d: usize) -> Self {
        Metric {
            entries: (0..d).map(|k| (0..d).map(|l| Coeff::real(if k == l { 1.0 } else { 0.0 })).collect()).collect(),
        }
    }

    pub fn from_spatial(g: Vec<Vec<SpatialField>>) -> Self {
        Metric { entries: g.into_iter().map(|r| r.into_iter().map(Coeff::Static).collect()).collect() }
    }

    pub fn from_space_time(g: Vec<Vec<SpaceTimeField>>) -> Self {
        Metric { entries: g.into_iter().map(|r| r.into_iter().map(Coeff::Dynamic).collect()).collect() }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn is_time_dependent(&self) -> bool {
        self.entries.iter().flatten().any(Coeff::is_time_dependent)
    }

    fn validate(&self, grid: &GridSpec) -> Result<()> {
        let d = grid.d;
        if self.entries.len() != d || self.entries.iter().any(|r| r.len() != d) {
            return Err(Error::Dimension(format!("metric must be {d}x{d}")));
        }
        for (k, row) in self.entries.iter().enumerate() {
            for (l, e) in row.iter().enumerate() {
                e.check(grid, &format!("g{}{}", k + 1, l + 1))?;
            }
        }
        for n in 0..grid.time_samples {
            let t = grid.time(n);
            let vals: Vec<Vec<Vec<C64>>> =
                self.entries.iter().map(|r| r.iter().map(|e| e.values_at(grid, t)).collect()).collect();
            for k in 0..d {
                for l in 0..d {
                    let scale = |z: &C64| SYMMETRY_TOL * (1.0 + z.norm());
                    if let Some(z) = vals[k][l].iter().find(|z| z.im.abs() > scale(z)) {
                        return Err(Error::Parameter(format!("metric entry g{}{} is not real: {z}", k + 1, l + 1)));
                    }
                    if vals[k][l].iter().zip(&vals[l][k]).any(|(a, b)| (a - b).norm() > scale(a)) {
                        return Err(Error::Parameter(format!("metric is not symmetric in ({}, {})", k + 1, l + 1)));
                    }
                }
            }
            if !self.is_time_dependent() {
                break;
            }
        }
        Ok(())
    }

    /// `g - I` at time `t`; entries that vanish identically are `None`.
    fn deviation(&self, grid: &GridSpec, t: f64) -> Vec<Vec<Option<Vec<f64>>>> {
        self.entries
            .iter()
            .enumerate()
            .map(|(k, r)| {
                r.iter()
                    .enumerate()
                    .map(|(l, e)| {
                        let delta = if k == l { 1.0 } else { 0.0 };
                        if e.constant().is_some_and(|c| c.re == delta) {
                            return None;
                        }
                        Some(e.values_at(grid, t).iter().map(|z| z.re - delta).collect())
                    })
                    .collect()
            })
            .collect()
    }
}

/// How the slices of the forcing are stored.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ForcingFrame {
    /// Slices are `h(t_n)`, interpolated linearly in between.
    #[default]
    Lab,
    /// Slices are `e^{i t_n omega(D)} h(t_n)` with `omega` from
    /// [`free_frequencies`]. The profile is interpolated and rotated back
    /// exactly, so forcing that oscillates like a free wave stays resolved
    /// between slices.
    Free { step: Option<f64> },
}

/// Data for one linear solve on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct LinearProblem {
    /// Space-time grid: `time_samples` output slices, `components` of `u`.
    pub grid: GridSpec,
    pub g: Metric,
    /// Gradient potential, one coefficient per axis.
    pub v: Option<Vec<Coeff>>,
    pub w: Option<Coeff>,
    pub h: Option<SpaceTimeField>,
    pub h_frame: ForcingFrame,
    pub u0: SpatialField,
}

impl LinearProblem {
    /// Free evolution of `u0` sampled on `grid.time_samples` slices.
    pub fn free(u0: SpatialField) -> Self {
        let grid = *u0.grid();
        LinearProblem { grid, g: Metric::identity(grid.d), v: None, w: None, h: None, h_frame: ForcingFrame::Lab, u0 }
    }

    pub fn with_metric(mut self, g: Metric) -> Self {
        self.g = g;
        self
    }

    pub fn with_forcing(mut self, h: SpaceTimeField) -> Self {
        self.h = Some(h);
        self.h_frame = ForcingFrame::Lab;
        self
    }

    /// Forcing given by its free-frame profile, see [`ForcingFrame::Free`].
    pub fn with_free_frame_forcing(mut self, profile: SpaceTimeField, step: Option<f64>) -> Self {
        self.h = Some(profile);
        self.h_frame = ForcingFrame::Free { step };
        self
    }

    /// The forcing `h(t_n)` on the output slices.
    pub fn forcing_slices(&self) -> Option<SpaceTimeField> {
        let h = self.h.as_ref()?;
        Some(match self.h_frame {
            ForcingFrame::Lab => h.clone(),
            ForcingFrame::Free { step } => {
                let omega = free_frequencies(&self.grid, step);
                let slices = h.slices().iter().enumerate().map(|(n, s)| rotate(s, &omega, self.grid.time(n))).collect();
                SpaceTimeField::new(self.grid, slices).expect("slices share the grid")
            }
        })
    }

    pub fn with_potentials(mut self, v: Option<Vec<Coeff>>, w: Option<Coeff>) -> Self {
        self.v = v;
        self.w = w;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let grid = &self.grid;
        if !self.u0.grid().same_space(grid) || self.u0.grid().components != grid.components {
            return Err(Error::Dimension("initial data does not match the problem grid".into()));
        }
        self.g.validate(grid)?;
        if let Some(v) = &self.v {
            if v.len() != grid.d {
                return Err(Error::Dimension(format!("V needs {} components", grid.d)));
            }
            for (l, c) in v.iter().enumerate() {
                c.check(grid, &format!("V{}", l + 1))?;
            }
        }
        if let Some(w) = &self.w {
            w.check(grid, "W")?;
        }
        if let Some(h) = &self.h {
            let hg = h.grid();
            if !hg.same_space(grid) || hg.components != grid.components || hg.time_samples != grid.time_samples {
                return Err(Error::Dimension("forcing does not match the problem grid".into()));
            }
        }
        Ok(())
    }

    /// Smallness gauge `max_{kl} ||g^{kl} - delta^{kl}||_{l^1 X^s}`.
    pub fn metric_gauge(&self, s: f64) -> Result<f64> {
        let mut worst: f64 = 0.0;
        let scalar = GridSpec { components: 1, ..self.grid };
        for (k, row) in self.g.entries.iter().enumerate() {
            for (l, e) in row.iter().enumerate() {
                let delta = C64::new(if k == l { 1.0 } else { 0.0 }, 0.0);
                if e.constant() == Some(delta) {
                    continue;
                }
                let dev = e.to_space_time(&scalar).map_slices(|f| f.map(|z| z - delta));
                worst = worst.max(spaces::l1_sobolev_norm(&Field::SpaceTime(dev), s, spaces::Space::X)?);
            }
        }
        Ok(worst)
    }

    fn all_constant(&self) -> bool {
        self.g.entries.iter().flatten().all(|e| e.constant().is_some())
            && self.v.iter().flatten().all(|e| e.constant().is_some())
            && self.w.as_ref().is_none_or(|e| e.constant().is_some())
    }

    fn frozen(&self, t: f64) -> Frozen {
        let grid = &self.grid;
        let nonzero = |c: &Coeff| c.constant() != Some(C64::new(0.0, 0.0));
        Frozen {
            dg: self.g.deviation(grid, t),
            v: match &self.v {
                Some(v) => v.iter().map(|c| nonzero(c).then(|| c.values_at(grid, t))).collect(),
                None => vec![None; grid.d],
            },
            w: self.w.as_ref().filter(|c| nonzero(c)).map(|c| c.values_at(grid, t)),
        }
    }

    /// Diagonal symbol of `A + B` when every coefficient is constant.
    fn constant_symbol(&self, t: &Tables) -> Option<Vec<C64>> {
        if !self.all_constant() {
            return None;
        }
        let d = self.grid.d;
        let g: Vec<Vec<f64>> =
            self.g.entries.iter().map(|r| r.iter().map(|e| e.constant().expect("constant").re).collect()).collect();
        let v: Vec<C64> = match &self.v {
            Some(v) => v.iter().map(|c| c.constant().expect("constant")).collect(),
            None => vec![C64::new(0.0, 0.0); d],
        };
        let w = self.w.as_ref().and_then(Coeff::constant).unwrap_or_default();
        Some(
            (0..t.points())
                .map(|p| {
                    let mut s = C64::new(t.a0[p], 0.0);
                    if t.mask[p] {
                        for k in 0..d {
                            for l in 0..d {
                                let delta = if k == l { 1.0 } else { 0.0 };
                                s -= (g[k][l] - delta) * t.dsym[k][p] * t.dsym[l][p];
                            }
                            s -= v[k] * t.dsym[k][p];
                        }
                        s -= w;
                    }
                    s
                })
                .collect(),
        )
    }
}

/// `A f = -sum d_k (g^{kl} d_l f)` with spectral derivatives and dealiased products.
pub fn apply_a(g: &[Vec<SpatialField>], f: &SpatialField) -> Result<SpatialField> {
    let grid = *f.grid();
    let metric = Metric::from_spatial(g.to_vec());
    let probe = GridSpec { time_samples: 2, ..grid };
    metric.validate(&GridSpec { components: 1, ..probe })?;
    let tables = Tables::new(&grid);
    let frozen = Frozen { dg: metric.deviation(&grid, 0.0), v: vec![None; grid.d], w: None };
    let coeffs = spectral_transform(f, Direction::Forward);
    let pts = grid.points();
    let mut out = Vec::with_capacity(grid.len());
    for c in coeffs.values().chunks(pts) {
        out.extend(frozen.apply_a(&tables, c));
    }
    let out = SpatialField::new(grid, out)?;
    Ok(spectral_transform(&out, Direction::Inverse))
}
