use num_complex::Complex64;

use super::GridSpec;
use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Complex `m`-component field sampled on a periodic grid.
///
/// Values are stored component-major, x fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialField {
    grid: GridSpec,
    values: Vec<C64>,
}

impl SpatialField {
    pub fn new(grid: GridSpec, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(p) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::Config(format!("non-finite value at index {p}")));
        }
        Ok(SpatialField { grid, values })
    }

    /// Trusted constructor for values produced by finite arithmetic on valid fields.
    pub(crate) fn from_raw(grid: GridSpec, values: Vec<C64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        SpatialField { grid, values }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        SpatialField { grid, values: vec![C64::new(0.0, 0.0); grid.len()] }
    }

    /// Samples `f(component, x)` at every grid point.
    pub fn from_fn(grid: GridSpec, f: impl Fn(usize, [f64; 2]) -> C64) -> Self {
        let pts = grid.points();
        let mut values = Vec::with_capacity(grid.len());
        for a in 0..grid.components {
            for p in 0..pts {
                values.push(f(a, grid.coords(p)));
            }
        }
        SpatialField { grid, values }
    }

    /// Plane wave `e^{i xi . x}` in every component.
    pub fn plane_wave(grid: GridSpec, xi: [f64; 2]) -> Self {
        Self::from_fn(grid, |_, x| C64::from_polar(1.0, xi[0] * x[0] + xi[1] * x[1]))
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn component(&self, a: usize) -> &[C64] {
        let pts = self.grid.points();
        &self.values[a * pts..(a + 1) * pts]
    }

    pub fn component_mut(&mut self, a: usize) -> &mut [C64] {
        let pts = self.grid.points();
        &mut self.values[a * pts..(a + 1) * pts]
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        SpatialField::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &SpatialField, f: impl Fn(C64, C64) -> C64) -> Self {
        debug_assert_eq!(self.values.len(), other.values.len());
        SpatialField::from_raw(
            self.grid,
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        )
    }

    pub fn scale(&self, c: C64) -> Self {
        self.map(|v| v * c)
    }

    pub fn add(&self, other: &SpatialField) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SpatialField) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    /// Pointwise product, component by component.
    pub fn mul(&self, other: &SpatialField) -> Self {
        self.zip_map(other, |a, b| a * b)
    }

    /// `L^2` norm with cell weight `(L/N)^d`, summed over components.
    pub fn norm_l2(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    pub fn norm_sup(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    /// Pointwise squared modulus summed over components, one value per grid point.
    pub fn density(&self) -> Vec<f64> {
        let pts = self.grid.points();
        let mut out = vec![0.0; pts];
        for a in 0..self.grid.components {
            for (o, v) in out.iter_mut().zip(self.component(a)) {
                *o += v.norm_sqr();
            }
        }
        out
    }

    /// Field with a single component `a` of `self`.
    pub fn select(&self, a: usize) -> Self {
        let grid = GridSpec { components: 1, ..self.grid };
        SpatialField::from_raw(grid, self.component(a).to_vec())
    }

    /// Stacks one-component fields into a multi-component field.
    pub fn stack(parts: &[SpatialField]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::Dimension("no components".into()))?;
        let grid = GridSpec { components: parts.len(), ..first.grid };
        let mut values = Vec::with_capacity(grid.len());
        for p in parts {
            if !p.grid.same_space(&grid) || p.grid.components != 1 {
                return Err(Error::Dimension("stacked fields must share one spatial grid".into()));
            }
            values.extend_from_slice(&p.values);
        }
        Ok(SpatialField::from_raw(grid, values))
    }

    pub fn max_abs_diff(&self, other: &SpatialField) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

/// `M` spatial slices at the times `t_n = n / (M - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    grid: GridSpec,
    slices: Vec<SpatialField>,
}

impl SpaceTimeField {
    pub fn new(grid: GridSpec, slices: Vec<SpatialField>) -> Result<Self> {
        if slices.len() != grid.time_samples {
            return Err(Error::Dimension(format!(
                "expected {} time slices, got {}",
                grid.time_samples,
                slices.len()
            )));
        }
        if slices.iter().all(|s| s.grid.same_space(&grid) && s.grid.components == grid.components) {
            let slices = slices.into_iter().map(|s| SpatialField { grid, values: s.values }).collect();
            Ok(SpaceTimeField { grid, slices })
        } else {
            Err(Error::Dimension("slices must share the space-time grid".into()))
        }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        SpaceTimeField { grid, slices: vec![SpatialField::zeros(grid); grid.time_samples] }
    }

    /// Time-independent extension of a spatial field.
    pub fn constant_in_time(f: &SpatialField) -> Self {
        SpaceTimeField { grid: f.grid, slices: vec![f.clone(); f.grid.time_samples] }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(usize, f64, [f64; 2]) -> C64) -> Self {
        let slices = (0..grid.time_samples)
            .map(|n| {
                let t = grid.time(n);
                SpatialField::from_fn(grid, |a, x| f(a, t, x))
            })
            .collect();
        SpaceTimeField { grid, slices }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn slices(&self) -> &[SpatialField] {
        &self.slices
    }

    pub fn slice(&self, n: usize) -> &SpatialField {
        &self.slices[n]
    }

    pub fn into_slices(self) -> Vec<SpatialField> {
        self.slices
    }

    pub fn map_slices(&self, f: impl Fn(&SpatialField) -> SpatialField) -> Self {
        SpaceTimeField { grid: self.grid, slices: self.slices.iter().map(f).collect() }
    }

    pub fn try_map_slices(&self, f: impl Fn(&SpatialField) -> Result<SpatialField>) -> Result<Self> {
        let slices = self.slices.iter().map(f).collect::<Result<Vec<_>>>()?;
        let grid = slices.first().map(|s| GridSpec { time_samples: self.grid.time_samples, ..s.grid });
        Ok(SpaceTimeField { grid: grid.unwrap_or(self.grid), slices })
    }

    pub fn zip_slices(&self, other: &SpaceTimeField, f: impl Fn(&SpatialField, &SpatialField) -> SpatialField) -> Self {
        SpaceTimeField {
            grid: self.grid,
            slices: self.slices.iter().zip(&other.slices).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn add(&self, other: &SpaceTimeField) -> Self {
        self.zip_slices(other, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &SpaceTimeField) -> Self {
        self.zip_slices(other, |a, b| a.sub(b))
    }

    pub fn scale(&self, c: C64) -> Self {
        self.map_slices(|s| s.scale(c))
    }

    /// Trapezoid weights of the `M` time samples on `[0, 1]`.
    pub fn time_weights(&self) -> Vec<f64> {
        trapezoid_weights(self.grid.time_samples)
    }

    /// `int_0^1 |u(t, x)|^2 dt` at every grid point (trapezoid rule).
    pub fn time_integrated_density(&self) -> Vec<f64> {
        let w = self.time_weights();
        let mut out = vec![0.0; self.grid.points()];
        for (s, wn) in self.slices.iter().zip(w) {
            for (o, r) in out.iter_mut().zip(s.density()) {
                *o += wn * r;
            }
        }
        out
    }

    /// `L^2_{t,x}` norm over `[0,1] x` box.
    pub fn norm_l2tx(&self) -> f64 {
        (self.time_integrated_density().iter().sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    /// `sup_t ||u(t)||_{L^2}` over the time samples.
    pub fn norm_linf_l2(&self) -> f64 {
        self.slices.iter().map(|s| s.norm_l2()).fold(0.0, f64::max)
    }

    /// `int_0^1 ||u(t)||_{L^2} dt` (trapezoid rule).
    pub fn norm_l1_l2(&self) -> f64 {
        self.slices.iter().zip(self.time_weights()).map(|(s, w)| w * s.norm_l2()).sum()
    }

    pub fn norm_sup(&self) -> f64 {
        self.slices.iter().map(|s| s.norm_sup()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.slices.iter().all(|s| s.is_zero())
    }

    pub fn max_abs_diff(&self, other: &SpaceTimeField) -> f64 {
        self.slices.iter().zip(&other.slices).map(|(a, b)| a.max_abs_diff(b)).fold(0.0, f64::max)
    }
}

pub fn trapezoid_weights(m: usize) -> Vec<f64> {
    let h = 1.0 / (m - 1) as f64;
    let mut w = vec![h; m];
    w[0] *= 0.5;
    w[m - 1] *= 0.5;
    w
}

/// A field that may carry time dependence; norms and projections accept either.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Spatial(SpatialField),
    SpaceTime(SpaceTimeField),
}

impl Field {
    pub fn grid(&self) -> &GridSpec {
        match self {
            Field::Spatial(f) => f.grid(),
            Field::SpaceTime(f) => f.grid(),
        }
    }

    /// Applies a slice-wise linear operation.
    pub fn map_slices(&self, f: impl Fn(&SpatialField) -> SpatialField) -> Self {
        match self {
            Field::Spatial(s) => Field::Spatial(f(s)),
            Field::SpaceTime(st) => Field::SpaceTime(st.map_slices(f)),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Field::Spatial(f) => f.is_zero(),
            Field::SpaceTime(f) => f.is_zero(),
        }
    }
}

impl From<SpatialField> for Field {
    fn from(f: SpatialField) -> Self {
        Field::Spatial(f)
    }
}

impl From<SpaceTimeField> for Field {
    fn from(f: SpaceTimeField) -> Self {
        Field::SpaceTime(f)
    }
}
