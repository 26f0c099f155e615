//! Picard iteration for `i u_t + d_k g^{kl}(u) d_l u = F(u, grad u)` with
//! frozen coefficients, plus the paradifferential and stability diagnostics.

mod para;
#[cfg(test)]
mod tests;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use para::{compute_fj, div_grad, equation_residual, para_residual, time_derivative, FjNorms, FjTerms};

use crate::error::{Error, Result};
use crate::expr::{MetricSpec, NonlinearitySpec};
use crate::field::{Field, GridSpec, SpaceTimeField, SpatialField, C64};
use crate::linear::{solve_linear, Coeff, LinearProblem, Metric, PropagatorConfig};
use crate::lp::{project_spatial, Projection};
use crate::spaces::{default_delta, frequency_envelope, l1_hs, l1_xs, FrequencyEnvelope, Space};

/// Default smallness threshold on `||u0||_{l^1 H^s}`.
pub const DEFAULT_EPS0: f64 = 1e-2;

/// Default regularity `d/2 + 2.25`.
pub fn default_s(d: usize) -> f64 {
    d as f64 / 2.0 + 2.25
}

#[derive(Debug, Clone)]
pub struct QuasilinearProblem {
    pub metric: MetricSpec,
    pub f: NonlinearitySpec,
    pub u0: SpatialField,
    pub s: f64,
    pub eps0: f64,
    /// Measured `||u0||_{l^1 H^s}`.
    pub eps_gauge: f64,
}

impl QuasilinearProblem {
    /// Validates the specs, the regularity and the smallness of the data.
    ///
    /// The output slices of `u0.grid()` are the space-time grid of every iterate.
    pub fn new(metric: MetricSpec, f: NonlinearitySpec, u0: SpatialField, s: f64, eps0: f64) -> Result<Self> {
        let grid = *u0.grid();
        if metric.dim() != grid.d {
            return Err(Error::Dimension(format!("metric is {}x{} on a {}-d grid", metric.dim(), metric.dim(), grid.d)));
        }
        if f.components.len() != grid.components {
            return Err(Error::Dimension(format!(
                "F has {} components, u0 has {}",
                f.components.len(),
                grid.components
            )));
        }
        metric.validate(grid.components).into_result()?;
        f.validate(grid.d).into_result()?;
        let floor = grid.d as f64 / 2.0 + 2.0;
        if !(s > floor) {
            return Err(Error::Parameter(format!("regularity s = {s} must exceed d/2 + 2 = {floor}")));
        }
        if grid.time_samples < 2 {
            return Err(Error::Config("the problem grid needs at least two time samples".into()));
        }
        let eps_gauge = l1_hs(&u0, s)?;
        if eps_gauge > eps0 {
            return Err(Error::Smallness { gauge: eps_gauge, eps0 });
        }
        Ok(QuasilinearProblem { metric, f, u0, s, eps0, eps_gauge })
    }

    pub fn grid(&self) -> GridSpec {
        *self.u0.grid()
    }

    /// Same equation with new data, revalidated.
    pub fn with_data(&self, u0: SpatialField) -> Result<Self> {
        QuasilinearProblem::new(self.metric.clone(), self.f.clone(), u0, self.s, self.eps0)
    }

    /// Linear problem of one Picard step with coefficients frozen at `w`.
    pub fn linearize(&self, w: &SpaceTimeField) -> Result<LinearProblem> {
        let grid = self.grid();
        let d = grid.d;
        let scalar = GridSpec { components: 1, ..grid };
        let per_slice = w.slices().iter().map(|s| self.metric.evaluate(s)).collect::<std::result::Result<Vec<_>, _>>()?;
        let mut entries = Vec::with_capacity(d);
        for k in 0..d {
            let mut row = Vec::with_capacity(d);
            for l in 0..d {
                let slices: Vec<SpatialField> = per_slice.iter().map(|g| g[k][l].clone()).collect();
                let first = slices[0].values()[0];
                let flat = slices.iter().all(|s| s.values().iter().all(|z| *z == first));
                row.push(if flat {
                    Coeff::Constant(C64::new(first.re, 0.0))
                } else {
                    Coeff::Dynamic(SpaceTimeField::new(scalar, slices)?)
                });
            }
            entries.push(row);
        }
        let forcing = w.slices().iter().map(|s| self.f.evaluate(s)).collect::<std::result::Result<Vec<_>, _>>()?;
        let h = SpaceTimeField::new(grid, forcing)?;
        let mut p = LinearProblem::free(self.u0.clone()).with_metric(Metric { entries });
        if !h.is_zero() {
            p = p.with_forcing(h);
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IterationConfig {
    /// Stop once `||u^{(n+1)} - u^{(n)}||_{l^1 X^{s-1}}` falls below this.
    pub tol: f64,
    pub max_iters: usize,
    pub propagator: PropagatorConfig,
}

impl Default for IterationConfig {
    fn default() -> Self {
        IterationConfig { tol: 1e-9, max_iters: 12, propagator: PropagatorConfig::default() }
    }
}

/// Iterates `u^{(1)}, u^{(2)}, ...` from `u^{(0)} = 0` with their norms.
#[derive(Debug, Clone)]
pub struct IterationTrace {
    pub iterates: Vec<SpaceTimeField>,
    /// `||u^{(n)}||_{l^1 X^s}`.
    pub norms: Vec<f64>,
    /// `||u^{(n)} - u^{(n-1)}||_{l^1 X^{s-1}}`.
    pub diffs: Vec<f64>,
    /// `diffs[n] / diffs[n-1]`; `None` for the first step or after an exact zero.
    pub ratios: Vec<Option<f64>>,
    /// `||u0||_{l^1 H^s}`.
    pub u0_norm: f64,
    pub s: f64,
    pub converged: bool,
}

impl IterationTrace {
    pub fn solution(&self) -> &SpaceTimeField {
        self.iterates.last().expect("a trace holds at least one iterate")
    }

    pub fn iterations(&self) -> usize {
        self.iterates.len()
    }

    /// `||u||_{l^1 X^s} / ||u0||_{l^1 H^s}` for the last iterate (0 for zero data).
    pub fn uniform_bound(&self) -> f64 {
        let last = *self.norms.last().unwrap_or(&0.0);
        if self.u0_norm == 0.0 {
            0.0
        } else {
            last / self.u0_norm
        }
    }

    /// Largest contraction ratio from step `from` on (1-based step numbers).
    pub fn max_ratio_from(&self, from: usize) -> f64 {
        self.ratios.iter().enumerate().filter(|(n, _)| n + 1 >= from).filter_map(|(_, r)| *r).fold(0.0, f64::max)
    }

    /// Columns `n, l1Xs, diff_sminus1, contraction_ratio`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,l1Xs,diff_sminus1,contraction_ratio\n");
        for (n, ((x, d), r)) in self.norms.iter().zip(&self.diffs).zip(&self.ratios).enumerate() {
            let r = r.map(|r| format!("{r:e}")).unwrap_or_default();
            let _ = writeln!(out, "{},{x:e},{d:e},{r}", n + 1);
        }
        out
    }
}

/// Runs the frozen-coefficient Picard iteration.
///
/// Two consecutive steps with contraction ratio `>= 1` abort with
/// [`Error::Divergence`], which carries the trace so far.
pub fn iterate(p: &QuasilinearProblem, cfg: &IterationConfig) -> Result<IterationTrace> {
    if cfg.max_iters == 0 {
        return Err(Error::Config("max_iters must be positive".into()));
    }
    let grid = p.grid();
    let mut trace = IterationTrace {
        iterates: Vec::new(),
        norms: Vec::new(),
        diffs: Vec::new(),
        ratios: Vec::new(),
        u0_norm: p.eps_gauge,
        s: p.s,
        converged: false,
    };
    let mut prev = SpaceTimeField::zeros(grid);
    let mut growing = 0;
    for n in 0..cfg.max_iters {
        let next = solve_linear(&p.linearize(&prev)?, &cfg.propagator)?.u;
        let diff = l1_xs(&next.sub(&prev), p.s - 1.0)?;
        let ratio = trace.diffs.last().filter(|d| **d > 0.0).map(|d| diff / d);
        trace.norms.push(l1_xs(&next, p.s)?);
        trace.diffs.push(diff);
        trace.ratios.push(ratio);
        trace.iterates.push(next.clone());
        if diff <= cfg.tol {
            trace.converged = true;
            break;
        }
        growing = if ratio.is_some_and(|r| r >= 1.0) { growing + 1 } else { 0 };
        if growing >= 2 {
            return Err(Error::Divergence { iters: n + 1, ratio: ratio.unwrap_or(f64::INFINITY), trace: Box::new(trace) });
        }
        prev = next;
    }
    Ok(trace)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LipschitzProbe {
    /// `||u1 - u2||_{l^1 X^{s-1}} / ||u1(0) - u2(0)||_{l^1 H^{s-1}}`.
    pub ratio: f64,
    /// Set when the data coincide and the ratio is 0 by convention.
    pub identical: bool,
}

/// Paired solves measuring the weak Lipschitz constant in `l^1 X^{s-1}`.
pub fn lipschitz_probe(p1: &QuasilinearProblem, p2: &QuasilinearProblem, cfg: &IterationConfig) -> Result<LipschitzProbe> {
    if p1.metric != p2.metric || p1.f != p2.f || p1.grid() != p2.grid() || p1.s != p2.s {
        return Err(Error::Config("Lipschitz probe needs problems sharing metric, F, grid and s".into()));
    }
    let gap = l1_hs(&p1.u0.sub(&p2.u0), p1.s - 1.0)?;
    if gap == 0.0 {
        return Ok(LipschitzProbe { ratio: 0.0, identical: true });
    }
    let u1 = iterate(p1, cfg)?;
    let u2 = iterate(p2, cfg)?;
    let diff = l1_xs(&u1.solution().sub(u2.solution()), p1.s - 1.0)?;
    Ok(LipschitzProbe { ratio: diff / gap, identical: false })
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopePersistence {
    /// Envelope of `u0` in `l^1 H^s`.
    pub a: FrequencyEnvelope,
    /// Envelope of the solution in `l^1 X^s`.
    pub b: FrequencyEnvelope,
    /// `max_j b_j / a_j`.
    pub c: f64,
}

/// Compares the data envelope with the solution envelope.
pub fn envelope_persistence(p: &QuasilinearProblem, trace: &IterationTrace) -> Result<EnvelopePersistence> {
    let delta = default_delta(p.s, p.grid().d);
    let a = frequency_envelope(&Field::Spatial(p.u0.clone()), p.s, Space::H, delta)?;
    let b = frequency_envelope(&Field::SpaceTime(trace.solution().clone()), p.s, Space::X, delta)?;
    let c = a.a.iter().zip(&b.a).map(|(a, b)| b / a).fold(0.0, f64::max);
    Ok(EnvelopePersistence { a, b, c })
}

/// `||u||_{l^1 X^{s+n}} / (||u0||_{l^1 H^{s+n}} + ||u||^2_{l^1 X^s})`.
pub fn higher_regularity_probe(p: &QuasilinearProblem, trace: &IterationTrace, n_extra: usize) -> Result<f64> {
    let u = trace.solution();
    let s1 = p.s + n_extra as f64;
    let lhs = l1_xs(u, s1)?;
    let rhs = l1_hs(&p.u0, s1)? + l1_xs(u, p.s)?.powi(2);
    Ok(if rhs == 0.0 { 0.0 } else { lhs / rhs })
}

/// `||u^{(k)} - u||_{l^1 X^s}` for data truncated to `S_{<=k} u0`, one entry per level.
pub fn continuous_dependence(p: &QuasilinearProblem, cfg: &IterationConfig, levels: &[usize]) -> Result<Vec<f64>> {
    let full = iterate(p, cfg)?;
    levels
        .iter()
        .map(|&k| {
            let q = p.with_data(project_spatial(&p.u0, Projection::AtMost(k))?)?;
            let u = iterate(&q, cfg)?;
            l1_xs(&u.solution().sub(full.solution()), p.s)
        })
        .collect()
}
