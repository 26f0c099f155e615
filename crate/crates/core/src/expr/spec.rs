use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::eval::{evaluate, EvalContext};
use super::parser::parse;
use super::tree::Expr;
use super::ExprError;
use crate::field::{GridSpec, SpatialField, C64};

pub const PRESETS: [&str; 3] = ["cubic", "deriv-quadratic", "conformal"];

const PROBES: usize = 16;
const PROBE_SEED: u64 = 0x5eed_0016;
const SYMMETRY_TOL: f64 = 1e-12;

/// Symmetric real metric `g(u)`, one expression per entry.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpec {
    pub entries: Vec<Vec<Expr>>,
}

/// Nonlinearity `F(u, grad u)`, one expression per component.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearitySpec {
    pub components: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub entry: String,
    pub condition: String,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub failures: Vec<Failure>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn fail(&mut self, entry: impl Into<String>, condition: &str, detail: impl Into<String>) {
        self.failures.push(Failure { entry: entry.into(), condition: condition.into(), detail: detail.into() });
    }

    pub fn into_result(self) -> Result<(), ExprError> {
        match self.failures.first() {
            None => Ok(()),
            Some(f) => Err(ExprError::Invalid(format!("{}: {} ({})", f.entry, f.condition, f.detail))),
        }
    }
}

/// Smooth random probe with a few low modes per component.
fn probe(grid: GridSpec, rng: &mut ChaCha8Rng, amp: f64) -> SpatialField {
    let k0 = 2.0 * std::f64::consts::PI / grid.side;
    let modes: Vec<_> = (0..grid.components * 3)
        .map(|_| {
            let c = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * amp;
            (c, [rng.gen_range(-2..=2) as f64 * k0, rng.gen_range(-2..=2) as f64 * k0])
        })
        .collect();
    SpatialField::from_fn(grid, |a, x| {
        modes[a * 3..a * 3 + 3]
            .iter()
            .map(|(c, k)| c * C64::from_polar(1.0, k[0] * x[0] + k[1] * x[1]))
            .sum()
    })
}

fn probe_grid(d: usize, m: usize) -> GridSpec {
    GridSpec::new(d, 32, 8.0, 2, m.max(1)).expect("probe grid is valid")
}

impl MetricSpec {
    pub fn parse(rows: &[Vec<String>]) -> Result<Self, ExprError> {
        let entries =
            rows.iter().map(|r| r.iter().map(|s| parse(s)).collect::<Result<Vec<_>, _>>()).collect::<Result<_, _>>()?;
        Ok(MetricSpec { entries })
    }

    /// `(1 + |u|^2) I_d`.
    pub fn conformal(d: usize) -> Self {
        let diag = parse("1+abs2(u)").expect("preset parses");
        let entries =
            (0..d).map(|k| (0..d).map(|l| if k == l { diag.clone() } else { Expr::real(0.0) }).collect()).collect();
        MetricSpec { entries }
    }

    pub fn identity(d: usize) -> Self {
        let entries =
            (0..d).map(|k| (0..d).map(|l| Expr::real(if k == l { 1.0 } else { 0.0 })).collect()).collect();
        MetricSpec { entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn sources(&self) -> Vec<Vec<String>> {
        self.entries.iter().map(|r| r.iter().map(Expr::unparse).collect()).collect()
    }

    /// Dealiased entries `g^{kl}(u)`; the real part is kept.
    pub fn evaluate(&self, u: &SpatialField) -> Result<Vec<Vec<SpatialField>>, ExprError> {
        let ctx = EvalContext::new(u);
        self.entries
            .iter()
            .map(|r| r.iter().map(|e| Ok(evaluate(e, &ctx)?.map(|z| C64::new(z.re, 0.0)))).collect())
            .collect()
    }

    /// `d/de g(u + e w)` at `e = 0`.
    pub fn directional(&self, u: &SpatialField, w: &SpatialField) -> Result<Vec<Vec<SpatialField>>, ExprError> {
        let ctx = EvalContext::new(u).with_direction(w);
        self.entries.iter().map(|r| r.iter().map(|e| evaluate(&e.directional(), &ctx)).collect()).collect()
    }

    /// True when every entry is a constant expression.
    pub fn is_constant(&self) -> bool {
        self.entries.iter().flatten().all(|e| e.max_indices().0.is_none())
    }

    pub fn validate(&self, m: usize) -> ValidationReport {
        let mut report = ValidationReport::default();
        let d = self.dim();
        if !(1..=2).contains(&d) || self.entries.iter().any(|r| r.len() != d) {
            report.fail("g", "shape", format!("expected a square matrix of side 1 or 2, got {d} rows"));
            return report;
        }
        for (k, row) in self.entries.iter().enumerate() {
            for (l, e) in row.iter().enumerate() {
                let name = format!("g{}{}", k + 1, l + 1);
                if e.uses_gradient() {
                    report.fail(&name, "depends on du", e.unparse());
                }
                if let Some(c) = e.max_indices().0.filter(|c| *c >= m) {
                    report.fail(&name, "component", format!("u{} with {m} components", c + 1));
                }
            }
        }
        if !report.passed() {
            return report;
        }
        let grid = probe_grid(d, m);
        let zero = SpatialField::zeros(grid);
        let ctx = EvalContext::new(&zero);
        for (k, row) in self.entries.iter().enumerate() {
            for (l, e) in row.iter().enumerate() {
                let name = format!("g{}{}", k + 1, l + 1);
                let target = C64::new(if k == l { 1.0 } else { 0.0 }, 0.0);
                match ctx.pointwise(e) {
                    Ok(v) => {
                        if let Some(z) = v.iter().find(|z| **z != target) {
                            report.fail(&name, "g(0) = I", format!("value {z} at u = 0"));
                        }
                    }
                    Err(err) => report.fail(&name, "evaluation", err.to_string()),
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
        for n in 0..PROBES {
            let u = probe(grid, &mut rng, 0.5);
            let ctx = EvalContext::new(&u);
            let values: Result<Vec<Vec<Vec<C64>>>, _> =
                self.entries.iter().map(|r| r.iter().map(|e| ctx.pointwise(e)).collect()).collect();
            let values = match values {
                Ok(v) => v,
                Err(err) => {
                    report.fail("g", "evaluation", format!("probe {n}: {err}"));
                    continue;
                }
            };
            for k in 0..d {
                for l in 0..d {
                    let name = format!("g{}{}", k + 1, l + 1);
                    if let Some(z) = values[k][l].iter().find(|z| z.im.abs() > SYMMETRY_TOL * (1.0 + z.re.abs())) {
                        report.fail(&name, "real", format!("value {z} on probe {n}"));
                    }
                    let asym = values[k][l].iter().zip(&values[l][k]).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                    if l > k && asym > SYMMETRY_TOL {
                        report.fail(&name, "symmetric", format!("|g{}{} - g{}{}| = {asym:e} on probe {n}", k + 1, l + 1, l + 1, k + 1));
                    }
                }
            }
            if !report.passed() {
                break;
            }
        }
        report
    }
}

impl NonlinearitySpec {
    pub fn parse(components: &[String]) -> Result<Self, ExprError> {
        Ok(NonlinearitySpec { components: components.iter().map(|s| parse(s)).collect::<Result<_, _>>()? })
    }

    pub fn zero(m: usize) -> Self {
        NonlinearitySpec { components: vec![Expr::real(0.0); m] }
    }

    pub fn sources(&self) -> Vec<String> {
        self.components.iter().map(Expr::unparse).collect()
    }

    pub fn uses_gradient(&self) -> bool {
        self.components.iter().any(Expr::uses_gradient)
    }

    /// Dealiased `F(u, grad u)` with one component per expression.
    pub fn evaluate(&self, u: &SpatialField) -> Result<SpatialField, ExprError> {
        let ctx = if self.uses_gradient() { EvalContext::with_gradient(u) } else { EvalContext::new(u) };
        let parts = self.components.iter().map(|e| evaluate(e, &ctx)).collect::<Result<Vec<_>, _>>()?;
        Ok(SpatialField::stack(&parts).expect("components share a grid"))
    }

    /// `d/de F(u + e w)` at `e = 0`.
    pub fn directional(&self, u: &SpatialField, w: &SpatialField) -> Result<SpatialField, ExprError> {
        let ctx = EvalContext::with_gradient(u).with_direction(w);
        let parts = self.components.iter().map(|e| evaluate(&e.directional(), &ctx)).collect::<Result<Vec<_>, _>>()?;
        Ok(SpatialField::stack(&parts).expect("components share a grid"))
    }

    /// `||F(eps w)|| / eps` at `eps = 1e-3` divided by the same at `1e-4`.
    pub fn vanishing_ratio(&self, d: usize) -> Result<f64, ExprError> {
        let grid = probe_grid(d, self.components.len());
        let w = probe(grid, &mut ChaCha8Rng::seed_from_u64(PROBE_SEED), 1.0);
        let r = |eps: f64| -> Result<f64, ExprError> {
            Ok(self.evaluate(&w.scale(C64::new(eps, 0.0)))?.norm_l2() / eps)
        };
        let (hi, lo) = (r(1e-3)?, r(1e-4)?);
        Ok(if lo == 0.0 { f64::INFINITY } else { hi / lo })
    }

    pub fn validate(&self, d: usize) -> ValidationReport {
        let mut report = ValidationReport::default();
        let m = self.components.len();
        if m == 0 {
            report.fail("F", "shape", "no components");
            return report;
        }
        for (a, e) in self.components.iter().enumerate() {
            let (comp, axis) = e.max_indices();
            if let Some(c) = comp.filter(|c| *c >= m) {
                report.fail(format!("F{}", a + 1), "component", format!("u{} with {m} components", c + 1));
            }
            if let Some(k) = axis.filter(|k| *k > d) {
                report.fail(format!("F{}", a + 1), "axis", format!("dx{k} in dimension {d}"));
            }
        }
        if !report.passed() {
            return report;
        }
        let grid = probe_grid(d, m);
        let zero = SpatialField::zeros(grid);
        let ctx = EvalContext::with_gradient(&zero);
        for (a, e) in self.components.iter().enumerate() {
            match ctx.pointwise(e) {
                Ok(v) => {
                    if let Some(z) = v.iter().find(|z| **z != C64::new(0.0, 0.0)) {
                        report.fail(format!("F{}", a + 1), "F(0) = 0", format!("value {z} at u = 0"));
                    }
                }
                Err(err) => report.fail(format!("F{}", a + 1), "evaluation", err.to_string()),
            }
        }
        if !report.passed() {
            return report;
        }
        match self.vanishing_ratio(d) {
            Ok(ratio) if ratio >= 5.0 => {}
            Ok(ratio) => report.fail("F", "quadratic vanishing", format!("ratio {ratio:.3} < 5")),
            Err(err) => report.fail("F", "evaluation", err.to_string()),
        }
        report
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    Metric(MetricSpec),
    Nonlinearity(NonlinearitySpec),
}

/// Named catalog entry; the metric preset is built for dimension `d`.
pub fn preset(name: &str, d: usize) -> Result<Preset, ExprError> {
    let f = |src: &str| Preset::Nonlinearity(NonlinearitySpec { components: vec![parse(src).expect("preset parses")] });
    match name {
        "cubic" => Ok(f("abs2(u)*u")),
        "deriv-quadratic" => Ok(f("conj(u)*dx1(u)")),
        "conformal" => Ok(Preset::Metric(MetricSpec::conformal(d))),
        _ => Err(ExprError::Invalid(format!("unknown preset {name:?}; known: {}", PRESETS.join(", ")))),
    }
}
