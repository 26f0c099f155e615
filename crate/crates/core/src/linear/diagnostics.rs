use serde::Serialize;

use super::operator::{Frozen, Tables};
use super::{Forcing, LinearProblem};
use crate::error::{Error, Result};
use crate::field::{spectral_transform, Direction, GridSpec, SpaceTimeField, C64};
use crate::lp::phi0;

/// Multiplier `M = (m d_axis + d_axis m) / (i 2^j)` along one axis.
///
/// The profile `m` has `m' = 2^{-l} psi^2(2^{-l}(x - c))` with `psi = 1` on
/// `|s| <= 1`; on the torus a negative copy sits at `c + L/2` so that `m`
/// is periodic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MorawetzSpec {
    pub l: usize,
    /// Axis in `1..=d`.
    pub axis: usize,
    pub center: f64,
    /// Constant profile `m = c` instead of the bump antiderivative.
    pub constant: Option<f64>,
}

impl MorawetzSpec {
    pub fn new(l: usize, axis: usize, center: f64) -> Self {
        MorawetzSpec { l, axis, center, constant: None }
    }

    pub fn constant(value: f64, axis: usize) -> Self {
        MorawetzSpec { l: 0, axis, center: 0.0, constant: Some(value) }
    }

    fn bump(&self, grid: &GridSpec, x: f64) -> f64 {
        let half = grid.side / 2.0;
        let r = (x - self.center).rem_euclid(grid.side);
        let r = if r >= half { r - grid.side } else { r };
        phi0((r * (-(self.l as f64)).exp2()).abs())
    }

    /// `(m, psi)` sampled along the axis.
    fn profile(&self, grid: &GridSpec) -> Result<(Vec<f64>, Vec<f64>)> {
        if self.axis == 0 || self.axis > grid.d {
            return Err(Error::Dimension(format!("Morawetz axis {} outside 1..={}", self.axis, grid.d)));
        }
        let n = grid.n;
        let dx = grid.dx();
        if let Some(c) = self.constant {
            return Ok((vec![c; n], vec![0.0; n]));
        }
        let width = (self.l as f64 + 3.0).exp2();
        if width > grid.side {
            return Err(Error::Scale { j: self.l, side: grid.side });
        }
        let psi: Vec<f64> = (0..n).map(|i| self.bump(grid, i as f64 * dx)).collect();
        let scale = (-(self.l as f64)).exp2();
        let mut dm: Vec<C64> = (0..n)
            .map(|i| C64::new(scale * (psi[i].powi(2) - psi[(i + n / 2) % n].powi(2)), 0.0))
            .collect();
        let line = GridSpec { d: 1, ..*grid };
        crate::field::spectral::fft_component(&line, &mut dm, Direction::Forward);
        for (i, c) in dm.iter_mut().enumerate() {
            let xi = line.wavenumber(i);
            *c = if i == 0 || line.is_nyquist(i) { C64::new(0.0, 0.0) } else { *c / C64::new(0.0, xi) };
        }
        crate::field::spectral::fft_component(&line, &mut dm, Direction::Inverse);
        Ok((dm.iter().map(|z| z.re).collect(), psi))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MorawetzReport {
    /// Identity residual per output interval (entry 0 is 0).
    pub residual: Vec<f64>,
    /// `<u, i[A, M] u>` per output slice.
    pub commutator: Vec<f64>,
    /// `2^{-l} 2^{2j} ||psi(2^{-l}(x - c)) u||^2` per output slice.
    pub localized_energy: Vec<f64>,
    /// `||u||^2` per output slice.
    pub mass: Vec<f64>,
}

impl MorawetzReport {
    pub fn max_residual(&self) -> f64 {
        self.residual.iter().copied().fold(0.0, f64::max)
    }

    /// Largest `(0.5 * 2^{-j} E - C) / ||u||^2` over slices: the lower-order
    /// slack the positive commutator bound needs.
    pub fn positivity_slack(&self, j: usize) -> f64 {
        let s = (-(j as f64)).exp2();
        self.commutator
            .iter()
            .zip(&self.localized_energy)
            .zip(&self.mass)
            .map(|((c, e), m)| if *m > 0.0 { (0.5 * s * e - c) / m } else { 0.0 })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn slice_coefficients(u: &SpaceTimeField) -> Vec<Vec<C64>> {
    u.slices().iter().map(|s| spectral_transform(s, Direction::Forward).into_values()).collect()
}

/// Coefficients of `f = V . grad u + W u - h`, so that `(D_t + A) u = f`.
fn effective_forcing(t: &Tables, frozen: &Frozen, c: &[C64], h: Option<&[C64]>) -> Vec<C64> {
    let mut f = frozen.lower_order(t, c);
    f.iter_mut().for_each(|z| *z = -*z);
    if let Some(h) = h {
        f.iter_mut().zip(h).for_each(|(z, h)| *z -= h);
    }
    f
}

fn midpoint(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect()
}

/// `|(||u^{n+1}||^2 - ||u^n||^2)/(2 dt) - Im <f_mid, u_mid>|` per output interval.
pub fn energy_identity_residual(p: &LinearProblem, u: &SpaceTimeField) -> Result<Vec<f64>> {
    let grid = p.grid;
    let t = Tables::new(&grid);
    let pts = grid.points();
    let coeffs = slice_coefficients(u);
    let h = Forcing::new(p);
    let dt = grid.dt();
    let mut out = vec![0.0];
    for n in 1..grid.time_samples {
        let tm = grid.time(n - 1) + 0.5 * dt;
        let frozen = p.frozen(tm);
        let hm = h.as_ref().map(|f| f.at(tm));
        let (a, b) = (&coeffs[n - 1], &coeffs[n]);
        let lhs = (t.pairing(b, b).re - t.pairing(a, a).re) / (2.0 * dt);
        let mid = midpoint(a, b);
        let mut rate = 0.0;
        for (k, c) in mid.chunks(pts).enumerate() {
            let f = effective_forcing(&t, &frozen, c, hm.as_ref().map(|h| &h[k * pts..(k + 1) * pts]));
            rate += t.pairing(&f, c).im;
        }
        out.push((lhs - rate).abs());
    }
    Ok(out)
}

struct Multiplier<'a> {
    t: &'a Tables,
    m: Vec<f64>,
    axis: usize,
    scale: C64,
}

impl Multiplier<'_> {
    /// `m(x)` broadcast over the grid from its profile along the axis.
    fn at(&self, p: usize) -> f64 {
        let n = self.t.grid.n;
        let i = if self.axis == 0 { p % n } else { p / n };
        self.m[i]
    }

    fn apply(&self, c: &[C64]) -> Vec<C64> {
        let t = self.t;
        let mut du: Vec<C64> = c.iter().zip(&t.dsym[self.axis]).map(|(v, s)| v * s).collect();
        t.inverse(&mut du);
        let mut u = c.to_vec();
        t.inverse(&mut u);
        for (p, (a, b)) in du.iter_mut().zip(u.iter_mut()).enumerate() {
            let m = self.at(p);
            *a *= m;
            *b *= m;
        }
        t.forward(&mut du);
        t.forward(&mut u);
        du.iter().zip(&u).zip(&t.dsym[self.axis]).map(|((a, b), s)| (a + s * b) * self.scale).collect()
    }
}

/// Discrete Morawetz identity
/// `d/dt <u, M u> = -2 Im <M u, f> + <u, i[A, M] u>` checked per output interval,
/// plus the commutator and localized energy per slice.
pub fn morawetz_residual(
    p: &LinearProblem,
    u: &SpaceTimeField,
    spec: &MorawetzSpec,
    j: usize,
) -> Result<MorawetzReport> {
    let grid = p.grid;
    let t = Tables::new(&grid);
    let pts = grid.points();
    let (m, psi) = spec.profile(&grid)?;
    let mult = Multiplier { t: &t, m, axis: spec.axis - 1, scale: C64::new(0.0, -(-(j as f64)).exp2()) };
    let coeffs = slice_coefficients(u);
    let h = Forcing::new(p);
    let dt = grid.dt();

    let pair_m = |c: &[C64]| -> f64 { c.chunks(pts).map(|c| t.pairing(c, &mult.apply(c)).re).sum() };
    let commutator = |frozen: &Frozen, c: &[C64]| -> f64 {
        c.chunks(pts)
            .map(|c| {
                let am = frozen.apply_a(&t, &mult.apply(c));
                let ma = mult.apply(&frozen.apply_a(&t, c));
                let comm: Vec<C64> = am.iter().zip(&ma).map(|(x, y)| C64::new(0.0, 1.0) * (x - y)).collect();
                t.pairing(c, &comm).re
            })
            .sum()
    };

    let mut residual = vec![0.0];
    for n in 1..grid.time_samples {
        let tm = grid.time(n - 1) + 0.5 * dt;
        let frozen = p.frozen(tm);
        let hm = h.as_ref().map(|f| f.at(tm));
        let (a, b) = (&coeffs[n - 1], &coeffs[n]);
        let lhs = (pair_m(b) - pair_m(a)) / dt;
        let mid = midpoint(a, b);
        let mut rhs = commutator(&frozen, &mid);
        for (k, c) in mid.chunks(pts).enumerate() {
            let f = effective_forcing(&t, &frozen, c, hm.as_ref().map(|h| &h[k * pts..(k + 1) * pts]));
            rhs -= 2.0 * t.pairing(&mult.apply(c), &f).im;
        }
        residual.push((lhs - rhs).abs());
    }

    let weight = (-(spec.l as f64)).exp2() * (2.0 * j as f64).exp2();
    let mut comm = Vec::new();
    let mut energy = Vec::new();
    let mut mass = Vec::new();
    for (n, c) in coeffs.iter().enumerate() {
        comm.push(commutator(&p.frozen(grid.time(n)), c));
        let s = u.slice(n);
        let mut local = 0.0;
        for a in 0..grid.components {
            for (q, v) in s.component(a).iter().enumerate() {
                let i = if spec.axis == 1 { q % grid.n } else { q / grid.n };
                local += (psi[i] * v.norm()).powi(2);
            }
        }
        energy.push(weight * local * grid.cell_volume());
        mass.push(s.norm_l2().powi(2));
    }
    Ok(MorawetzReport { residual, commutator: comm, localized_energy: energy, mass })
}
