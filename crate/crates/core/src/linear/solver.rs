use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::banded::BandedCn;
use super::operator::{Frozen, Tables};
use super::{diagnostics, Coeff, ForcingFrame, LinearProblem, Metric};
use crate::error::{Error, Result};
use crate::field::spectral::{apply_symbol, spectral_radius};
use crate::field::{spectral_transform, Direction, GridSpec, SpaceTimeField, SpatialField, C64};
use crate::lp::{self, Projection};

const LEAKAGE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagatorConfig {
    pub fixed_point_tol: f64,
    pub max_inner_iters: usize,
    /// Internal steps per output interval; `None` picks `dt <= 0.5 * 4^{-j_active}`.
    pub substeps: Option<usize>,
    pub inner: InnerSolver,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        PropagatorConfig { fixed_point_tol: 1e-10, max_inner_iters: 200, substeps: None, inner: InnerSolver::FixedPoint }
    }
}

/// Solver for the implicit midpoint equation of each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerSolver {
    /// Fixed-point iteration preconditioned by the constant-coefficient inverse.
    #[default]
    FixedPoint,
    /// Banded LU in Fourier space for `d = 1` static metrics with a narrow
    /// spectrum and no lower-order terms; other problems fall back to `FixedPoint`.
    Banded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepDiagnostics {
    pub step: usize,
    pub t: f64,
    pub l2: f64,
    /// Energy identity residual over the interval ending at this slice.
    pub energy_residual: f64,
    pub morawetz_residual: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub u: SpaceTimeField,
    pub substeps: usize,
    /// Largest number of fixed-point iterations any step needed.
    pub inner_iterations: usize,
    pub steps: Vec<StepDiagnostics>,
    pub warnings: Vec<String>,
}

impl SolveReport {
    pub fn attach_morawetz(&mut self, residual: &[f64]) {
        for (s, r) in self.steps.iter_mut().zip(residual) {
            s.morawetz_residual = Some(*r);
        }
    }

    pub fn max_energy_residual(&self) -> f64 {
        self.steps.iter().map(|s| s.energy_residual).fold(0.0, f64::max)
    }

    /// Largest `| ||u(t)|| - ||u(0)|| |` over the output slices.
    pub fn l2_drift(&self) -> f64 {
        let l0 = self.steps.first().map_or(0.0, |s| s.l2);
        self.steps.iter().map(|s| (s.l2 - l0).abs()).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,t,l2,energy_residual,morawetz_residual\n");
        for s in &self.steps {
            let m = s.morawetz_residual.map(|v| format!("{v:e}")).unwrap_or_default();
            let _ = writeln!(out, "{},{},{:e},{:e},{}", s.step, s.t, s.l2, s.energy_residual, m);
        }
        out
    }
}

/// Highest band index carrying mass in the data.
fn active_band(p: &LinearProblem) -> usize {
    let mut r = spectral_radius(&p.u0, 1e-12);
    if let Some(h) = &p.h {
        for s in h.slices() {
            r = r.max(spectral_radius(s, 1e-12));
        }
    }
    if r <= 1.0 {
        0
    } else {
        (r.log2().ceil() as usize).saturating_sub(1)
    }
}

fn auto_substeps(p: &LinearProblem) -> usize {
    let dt_max = 0.5 * (-2.0 * active_band(p) as f64).exp2();
    (p.grid.dt() / dt_max).ceil().max(1.0) as usize
}

fn coefficients(f: &SpatialField) -> Vec<C64> {
    spectral_transform(f, Direction::Forward).into_values()
}

fn synthesize(grid: &GridSpec, c: Vec<C64>) -> SpatialField {
    let f = SpatialField::from_raw(*grid, c);
    spectral_transform(&f, Direction::Inverse)
}

/// Forcing coefficients per slice, interpolated in time.
pub(crate) struct Forcing {
    slices: Vec<Vec<C64>>,
    dt: f64,
    pts: usize,
    /// Free-frame frequencies per mode.
    omega: Option<Vec<f64>>,
}

impl Forcing {
    pub fn new(p: &LinearProblem) -> Option<Self> {
        p.h.as_ref().map(|h| Forcing {
            slices: h.slices().iter().map(coefficients).collect(),
            dt: h.grid().dt(),
            pts: p.grid.points(),
            omega: match p.h_frame {
                ForcingFrame::Lab => None,
                ForcingFrame::Free { step } => Some(free_frequencies(&p.grid, step)),
            },
        })
    }

    fn profile(&self, t: f64) -> Vec<C64> {
        let m = self.slices.len();
        let s = (t / self.dt).clamp(0.0, (m - 1) as f64);
        let n = (s.floor() as usize).min(m - 2);
        let th = s - n as f64;
        self.slices[n].iter().zip(&self.slices[n + 1]).map(|(a, b)| a * (1.0 - th) + b * th).collect()
    }

    fn phases(&self, omega: &[f64], t: f64) -> Vec<C64> {
        omega.iter().map(|w| C64::from_polar(1.0, -w * t)).collect()
    }

    pub fn at(&self, t: f64) -> Vec<C64> {
        let mut c = self.profile(t);
        if let Some(omega) = &self.omega {
            let ph = self.phases(omega, t);
            c.chunks_mut(self.pts).for_each(|ch| ch.iter_mut().zip(&ph).for_each(|(z, p)| *z *= p));
        }
        c
    }

    /// Midpoint values of consecutive steps of size `dt` from `t0`; free-frame
    /// phases advance by one multiplication per step.
    pub fn midpoints(&self, t0: f64, dt: f64) -> Midpoints<'_> {
        let rot = self.omega.as_ref().map(|w| (self.phases(w, t0 + 0.5 * dt), self.phases(w, dt)));
        Midpoints { forcing: self, t: t0 + 0.5 * dt, dt, rot }
    }
}

pub(crate) struct Midpoints<'a> {
    forcing: &'a Forcing,
    t: f64,
    dt: f64,
    rot: Option<(Vec<C64>, Vec<C64>)>,
}

impl Midpoints<'_> {
    pub fn next_step(&mut self) -> Vec<C64> {
        let mut c = self.forcing.profile(self.t);
        if let Some((ph, step)) = &mut self.rot {
            c.chunks_mut(self.forcing.pts).for_each(|ch| ch.iter_mut().zip(ph.iter()).for_each(|(z, p)| *z *= p));
            ph.iter_mut().zip(step.iter()).for_each(|(p, s)| *p *= s);
        }
        self.t += self.dt;
        c
    }
}

/// `e^{-i t omega(D)} f` for per-mode frequencies `omega`.
pub fn rotate(f: &SpatialField, omega: &[f64], t: f64) -> SpatialField {
    apply_symbol(f, |_, p| C64::from_polar(1.0, -omega[p] * t))
}

/// Step size the solver uses for `p` under `cfg`.
pub fn step_size(p: &LinearProblem, cfg: &PropagatorConfig) -> f64 {
    p.grid.dt() / cfg.substeps.unwrap_or_else(|| auto_substeps(p)).max(1) as f64
}

/// Frequencies of the free flow per mode: `|xi|^2`, or the Crank–Nicolson
/// phase rate `2 atan(|xi|^2 dt / 2) / dt` for a step `dt`.
pub fn free_frequencies(grid: &GridSpec, step: Option<f64>) -> Vec<f64> {
    let t = Tables::new(grid);
    match step {
        None => t.a0,
        Some(dt) => t.a0.iter().map(|a| 2.0 * (0.5 * a * dt).atan() / dt).collect(),
    }
}

fn check_finite(c: &[C64], step: usize) -> Result<()> {
    if c.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NotFinite { step })
    }
}

/// Implicit-midpoint (Crank–Nicolson) solve of the linear problem on `[0, 1]`.
///
/// The state is kept as Fourier coefficients. Each step solves
/// `(1 + i dt/2 A0) ubar = u - i dt/2 (N ubar + h_mid)` by fixed-point
/// iteration, `N` the variable part of `A + B`, then sets `u+ = 2 ubar - u`.
pub fn solve_linear(p: &LinearProblem, cfg: &PropagatorConfig) -> Result<SolveReport> {
    p.validate()?;
    let grid = p.grid;
    let tables = Tables::new(&grid);
    let pts = grid.points();
    let substeps = cfg.substeps.unwrap_or_else(|| auto_substeps(p)).max(1);
    let dt = grid.dt() / substeps as f64;
    let half = C64::new(0.0, 0.5 * dt);
    let forcing = Forcing::new(p);

    let mut state = coefficients(&p.u0);
    let mut slices = vec![p.u0.clone()];
    let mut inner_max = 0;

    if let Some(symbol) = p.constant_symbol(&tables) {
        // diagonal in Fourier space: every step is an exact division
        let denom: Vec<C64> = symbol.iter().map(|s| 1.0 + half * s).collect();
        let step_factor: Vec<C64> = symbol.iter().zip(&denom).map(|(s, d)| (1.0 - half * s) / d).collect();
        let interval: Vec<C64> = step_factor.iter().map(|f| f.powu(substeps as u32)).collect();
        for n in 1..grid.time_samples {
            match &forcing {
                None => {
                    for chunk in state.chunks_mut(pts) {
                        chunk.iter_mut().zip(&interval).for_each(|(c, f)| *c *= f);
                    }
                }
                Some(h) => {
                    let mut mids = h.midpoints(grid.time(n - 1), dt);
                    for _ in 0..substeps {
                        let hm = mids.next_step();
                        for (chunk, hc) in state.chunks_mut(pts).zip(hm.chunks(pts)) {
                            for (((c, d), f), h) in chunk.iter_mut().zip(&denom).zip(&step_factor).zip(hc) {
                                *c = *c * f - 2.0 * half * h / d;
                            }
                        }
                    }
                }
            }
            check_finite(&state, n * substeps)?;
            slices.push(synthesize(&grid, state.clone()));
        }
    } else {
        let static_frozen = (!p.g.is_time_dependent()
            && !p.v.iter().flatten().any(Coeff::is_time_dependent)
            && !p.w.as_ref().is_some_and(Coeff::is_time_dependent))
        .then(|| p.frozen(0.0));
        let precond: Vec<C64> = tables.a0.iter().map(|a| 1.0 + half * a).collect();
        let direct = match (cfg.inner, &static_frozen) {
            (InnerSolver::Banded, Some(f)) => BandedCn::new(&tables, f, half),
            _ => None,
        };
        let mut prev = state.clone();
        for n in 1..grid.time_samples {
            let mut mids = forcing.as_ref().map(|h| h.midpoints(grid.time(n - 1), dt));
            for s in 0..substeps {
                let step = (n - 1) * substeps + s;
                let tm = grid.time(n - 1) + (s as f64 + 0.5) * dt;
                let owned;
                let frozen: &Frozen = match &static_frozen {
                    Some(f) => f,
                    None => {
                        owned = p.frozen(tm);
                        &owned
                    }
                };
                let hm = mids.as_mut().map(Midpoints::next_step);
                let mut next = Vec::with_capacity(state.len());
                for (a, (u, up)) in state.chunks(pts).zip(prev.chunks(pts)).enumerate() {
                    let rhs: Vec<C64> = match &hm {
                        Some(h) => u.iter().zip(&h[a * pts..(a + 1) * pts]).map(|(u, h)| u - half * h).collect(),
                        None => u.to_vec(),
                    };
                    if let Some(lu) = &direct {
                        let mid = lu.solve(&rhs);
                        inner_max = inner_max.max(1);
                        next.extend(mid.iter().zip(u).map(|(m, u)| 2.0 * m - u));
                        continue;
                    }
                    let scale = tables.norm(&rhs).max(f64::MIN_POSITIVE);
                    // extrapolated midpoint as the first guess
                    let mut mid: Vec<C64> = u.iter().zip(up).map(|(u, v)| u + 0.5 * (u - v)).collect();
                    let mut converged = false;
                    let mut residual = f64::INFINITY;
                    for k in 1..=cfg.max_inner_iters {
                        let nu = frozen.perturbation(&tables, &mid);
                        let new: Vec<C64> =
                            rhs.iter().zip(&nu).zip(&precond).map(|((r, v), d)| (r - half * v) / d).collect();
                        let diff: Vec<C64> = new.iter().zip(&mid).map(|(a, b)| a - b).collect();
                        residual = tables.norm(&diff) / scale;
                        mid = new;
                        inner_max = inner_max.max(k);
                        if !residual.is_finite() {
                            return Err(Error::NotFinite { step });
                        }
                        if residual <= cfg.fixed_point_tol || frozen.is_trivial() {
                            converged = true;
                            break;
                        }
                    }
                    if !converged {
                        return Err(Error::InnerSolve { step, residual });
                    }
                    next.extend(mid.iter().zip(u).map(|(m, u)| 2.0 * m - u));
                }
                prev = std::mem::replace(&mut state, next);
                check_finite(&state, step)?;
            }
            slices.push(synthesize(&grid, state.clone()));
        }
    }

    let u = SpaceTimeField::new(grid, slices)?;
    let energy = diagnostics::energy_identity_residual(p, &u)?;
    let steps = u
        .slices()
        .iter()
        .enumerate()
        .map(|(n, s)| StepDiagnostics {
            step: n,
            t: grid.time(n),
            l2: s.norm_l2(),
            energy_residual: energy[n],
            morawetz_residual: None,
        })
        .collect();
    Ok(SolveReport { u, substeps, inner_iterations: inner_max, steps, warnings: Vec::new() })
}

/// Keeps only frequencies below band `j - 4` of `c - delta`.
/// `g_{<j-4}`: the part of `f` below band `j - 4`, or its mean when no band lies there.
pub(crate) fn lowpass_field(f: &SpatialField, j: usize) -> Result<SpatialField> {
    if j >= 5 {
        lp::project_spatial(f, Projection::AtMost(j - 5))
    } else {
        let pts = f.grid().points();
        let mut out = f.clone();
        for a in 0..f.grid().components {
            let c = out.component_mut(a);
            let mean = c.iter().sum::<C64>() / pts as f64;
            c.iter_mut().for_each(|z| *z = mean);
        }
        Ok(out)
    }
}

fn lowpass(c: &Coeff, j: usize, delta: f64) -> Result<Coeff> {
    let cut = |f: &SpatialField| -> Result<SpatialField> {
        let low = lowpass_field(&f.map(|z| z - delta), j)?;
        Ok(low.map(|z| z + delta))
    };
    Ok(match c {
        Coeff::Constant(_) => c.clone(),
        Coeff::Static(f) => Coeff::Static(cut(f)?),
        Coeff::Dynamic(f) => Coeff::Dynamic(f.try_map_slices(cut)?),
    })
}

/// Fraction of `L^2` mass outside `[2^{j-2}, 2^{j+2}]`.
fn leakage(f: &SpatialField, j: usize) -> f64 {
    let lo = (j as f64 - 2.0).exp2();
    let hi = (j as f64 + 2.0).exp2();
    let c = spectral_transform(f, Direction::Forward);
    let grid = *f.grid();
    let pts = grid.points();
    let (mut inside, mut total) = (0.0, 0.0);
    for chunk in c.values().chunks(pts) {
        for (p, v) in chunk.iter().enumerate() {
            let xi = grid.frequency(p);
            let r = xi[0].hypot(xi[1]);
            total += v.norm_sqr();
            if (lo..=hi).contains(&r) || (j <= 2 && r < lo) {
                inside += v.norm_sqr();
            }
        }
    }
    if total == 0.0 {
        0.0
    } else {
        (total - inside) / total
    }
}

/// Band-`j` evolution with the metric low-passed below band `j - 4`.
///
/// `p.u0` and `p.h` should already be band-`j` localized; a warning is
/// recorded when the solution leaks out of `[2^{j-2}, 2^{j+2}]`.
pub fn solve_freq_localized(j: usize, p: &LinearProblem, cfg: &PropagatorConfig) -> Result<SolveReport> {
    let d = p.grid.d;
    let entries = p
        .g
        .entries
        .iter()
        .enumerate()
        .map(|(k, r)| {
            r.iter().enumerate().map(|(l, e)| lowpass(e, j, if k == l { 1.0 } else { 0.0 })).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    debug_assert_eq!(entries.len(), d);
    let local = LinearProblem { g: Metric { entries }, ..p.clone() };
    let mut report = solve_linear(&local, cfg)?;
    for (n, s) in report.u.slices().iter().enumerate() {
        let leak = leakage(s, j);
        if leak > LEAKAGE_TOL {
            report.warnings.push(format!("band {j} leakage {leak:.3e} at slice {n}"));
            break;
        }
    }
    Ok(report)
}
