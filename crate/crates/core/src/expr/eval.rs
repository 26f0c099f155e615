use super::tree::{BinaryOp, Expr, UnaryOp};
use super::ExprError;
use crate::field::spectral::{dealias, derivative};
use crate::field::{SpatialField, C64};

const SINGULAR: f64 = 1e-14;

/// Values of `u`, `grad u` and optionally a direction `w` on one grid.
///
/// Gradients are stored per axis, each holding every component.
#[derive(Debug, Clone)]
pub struct EvalContext<'a> {
    pub u: &'a SpatialField,
    pub du: Option<Vec<SpatialField>>,
    pub w: Option<&'a SpatialField>,
    pub dw: Option<Vec<SpatialField>>,
}

fn gradient(f: &SpatialField) -> Vec<SpatialField> {
    (1..=f.grid().d).map(|k| derivative(f, k).expect("axis within dimension")).collect()
}

impl<'a> EvalContext<'a> {
    pub fn new(u: &'a SpatialField) -> Self {
        EvalContext { u, du: None, w: None, dw: None }
    }

    /// Context with spectral derivatives of `u`.
    pub fn with_gradient(u: &'a SpatialField) -> Self {
        EvalContext { u, du: Some(gradient(u)), w: None, dw: None }
    }

    /// Adds a direction `w` and its gradient.
    pub fn with_direction(mut self, w: &'a SpatialField) -> Self {
        self.dw = Some(gradient(w));
        self.w = Some(w);
        self
    }

    fn leaf(&self, f: &SpatialField, comp: usize) -> Result<Vec<C64>, ExprError> {
        let available = f.grid().components;
        if comp >= available {
            return Err(ExprError::Component { comp, available });
        }
        Ok(f.component(comp).to_vec())
    }

    fn axis(&self, axis: usize) -> Result<usize, ExprError> {
        let d = self.u.grid().d;
        if axis == 0 || axis > d {
            return Err(ExprError::Axis { axis, d });
        }
        Ok(axis - 1)
    }

    /// Pointwise values without the final dealiasing.
    pub fn pointwise(&self, e: &Expr) -> Result<Vec<C64>, ExprError> {
        let n = self.u.grid().points();
        Ok(match e {
            Expr::Const(c) => vec![*c; n],
            Expr::U(c) => self.leaf(self.u, *c)?,
            Expr::W(c) => self.leaf(self.w.ok_or(ExprError::MissingDirection)?, *c)?,
            Expr::Du { comp, axis } => {
                let k = self.axis(*axis)?;
                self.leaf(&self.du.as_ref().ok_or(ExprError::MissingGradient)?[k], *comp)?
            }
            Expr::Dw { comp, axis } => {
                let k = self.axis(*axis)?;
                self.leaf(&self.dw.as_ref().ok_or(ExprError::MissingDirection)?[k], *comp)?
            }
            Expr::Unary(op, a) => {
                let mut v = self.pointwise(a)?;
                for z in &mut v {
                    *z = match op {
                        UnaryOp::Neg => -*z,
                        UnaryOp::Conj => z.conj(),
                        UnaryOp::Real => C64::new(z.re, 0.0),
                        UnaryOp::Imag => C64::new(z.im, 0.0),
                        UnaryOp::Abs2 => C64::new(z.norm_sqr(), 0.0),
                    };
                }
                v
            }
            Expr::Binary(op, a, b) => {
                let mut x = self.pointwise(a)?;
                let y = self.pointwise(b)?;
                for (p, (l, r)) in x.iter_mut().zip(&y).enumerate() {
                    *l = match op {
                        BinaryOp::Add => *l + r,
                        BinaryOp::Sub => *l - r,
                        BinaryOp::Mul => *l * r,
                        BinaryOp::Div => {
                            if r.norm() < SINGULAR {
                                return Err(ExprError::Singular { point: p, value: r.norm() });
                            }
                            *l / r
                        }
                    };
                }
                x
            }
        })
    }
}

/// Evaluates `e` on the grid as a one-component dealiased field.
pub fn evaluate(e: &Expr, ctx: &EvalContext<'_>) -> Result<SpatialField, ExprError> {
    let values = ctx.pointwise(e)?;
    if let Some(p) = values.iter().position(|z| !z.is_finite()) {
        return Err(ExprError::Singular { point: p, value: f64::INFINITY });
    }
    let grid = ctx.u.grid().with_components(1).expect("one component is valid");
    Ok(dealias(&SpatialField::from_raw(grid, values)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::field::GridSpec;

    fn grid() -> GridSpec {
        GridSpec::spatial(1, 64, 8.0).unwrap()
    }

    #[test]
    fn cubic_matches_direct_product() {
        let g = grid();
        let u = SpatialField::from_fn(g, |_, x| C64::new(0.1 * (x[0]).cos(), 0.05));
        let got = evaluate(&parse("abs2(u)*u").unwrap(), &EvalContext::new(&u)).unwrap();
        let direct = dealias(&u.map(|z| z * z.norm_sqr()));
        assert!(got.max_abs_diff(&direct) < 1e-14);
    }

    #[test]
    fn gradient_leaf_uses_spectral_derivative() {
        let g = grid();
        let xi = 2.0 * std::f64::consts::PI / 8.0 * 3.0;
        let u = SpatialField::plane_wave(g, [xi, 0.0]);
        let got = evaluate(&parse("dx1(u)").unwrap(), &EvalContext::with_gradient(&u)).unwrap();
        let expect = u.scale(C64::new(0.0, xi));
        assert!(got.max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn evaluation_errors() {
        let g = grid();
        let u = SpatialField::zeros(g);
        let ctx = EvalContext::new(&u);
        assert!(matches!(evaluate(&parse("1/u").unwrap(), &ctx), Err(ExprError::Singular { point: 0, .. })));
        assert!(matches!(evaluate(&parse("dx1(u)").unwrap(), &ctx), Err(ExprError::MissingGradient)));
        assert!(matches!(evaluate(&parse("u2").unwrap(), &ctx), Err(ExprError::Component { comp: 1, .. })));
        let ctx = EvalContext::with_gradient(&u);
        assert!(matches!(evaluate(&parse("dx2(u)").unwrap(), &ctx), Err(ExprError::Axis { axis: 2, d: 1 })));
    }

    #[test]
    fn directional_derivative_matches_difference_quotient() {
        let g = grid();
        let u = SpatialField::from_fn(g, |_, x| C64::new(0.3 * (x[0] * 0.785).sin(), 0.1));
        let w = SpatialField::from_fn(g, |_, x| C64::new(0.2, 0.4 * (x[0] * 1.57).cos()));
        let f = parse("abs2(u)*u + conj(u)*dx1(u)/(2+real(u))").unwrap();
        let df = evaluate(&f.directional(), &EvalContext::with_gradient(&u).with_direction(&w)).unwrap();
        let eps = 1e-6;
        let up = u.add(&w.scale(C64::new(eps, 0.0)));
        let um = u.sub(&w.scale(C64::new(eps, 0.0)));
        let fp = evaluate(&f, &EvalContext::with_gradient(&up)).unwrap();
        let fm = evaluate(&f, &EvalContext::with_gradient(&um)).unwrap();
        let fd = fp.sub(&fm).scale(C64::new(0.5 / eps, 0.0));
        assert!(df.max_abs_diff(&fd) < 1e-7, "{}", df.max_abs_diff(&fd));
    }
}
