use crate::field::spectral::{dealias_keep, derivative_symbol, fft_component};
use crate::field::{Direction, GridSpec, C64};

/// Per-grid spectral tables shared by every step.
#[derive(Debug, Clone)]
pub(crate) struct Tables {
    pub grid: GridSpec,
    /// `i xi_k` per axis (Nyquist mapped to zero).
    pub dsym: Vec<Vec<C64>>,
    /// Symbol of `-Laplacian` built from the same derivative symbols.
    pub a0: Vec<f64>,
    pub mask: Vec<bool>,
}

impl Tables {
    pub fn new(grid: &GridSpec) -> Self {
        let pts = grid.points();
        let dsym: Vec<Vec<C64>> =
            (0..grid.d).map(|k| (0..pts).map(|p| derivative_symbol(grid, k, p)).collect()).collect();
        let a0 = (0..pts).map(|p| dsym.iter().map(|s| s[p].norm_sqr()).sum()).collect();
        let mask = (0..pts).map(|p| dealias_keep(grid, p)).collect();
        Tables { grid: *grid, dsym, a0, mask }
    }

    pub fn points(&self) -> usize {
        self.grid.points()
    }

    pub fn forward(&self, data: &mut [C64]) {
        fft_component(&self.grid, data, Direction::Forward);
    }

    pub fn inverse(&self, data: &mut [C64]) {
        fft_component(&self.grid, data, Direction::Inverse);
    }

    fn masked(&self, c: &[C64]) -> Vec<C64> {
        c.iter().zip(&self.mask).map(|(v, k)| if *k { *v } else { C64::new(0.0, 0.0) }).collect()
    }

    /// Physical values of `d/dx_k` applied to coefficients `c`.
    fn grad_phys(&self, c: &[C64], k: usize) -> Vec<C64> {
        let mut g: Vec<C64> = c.iter().zip(&self.dsym[k]).map(|(v, s)| v * s).collect();
        self.inverse(&mut g);
        g
    }

    /// `L^2` pairing from coefficients: `L^d sum conj(a_k) b_k`.
    pub fn pairing(&self, a: &[C64], b: &[C64]) -> C64 {
        let s: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
        s * self.grid.side.powi(self.grid.d as i32)
    }

    pub fn norm(&self, a: &[C64]) -> f64 {
        self.pairing(a, a).re.max(0.0).sqrt()
    }
}

/// Coefficients frozen at one time, in physical values.
///
/// `dg` holds `g - I` (`None` where it vanishes identically); `v` and `w`
/// enter through `B u = -V . grad u - W u`.
#[derive(Debug, Clone, Default)]
pub(crate) struct Frozen {
    pub dg: Vec<Vec<Option<Vec<f64>>>>,
    pub v: Vec<Option<Vec<C64>>>,
    pub w: Option<Vec<C64>>,
}

impl Frozen {
    pub fn is_trivial(&self) -> bool {
        self.dg.iter().flatten().all(Option::is_none) && self.v.iter().all(Option::is_none) && self.w.is_none()
    }

    fn has_metric(&self) -> bool {
        self.dg.iter().flatten().any(Option::is_some)
    }

    fn has_lower(&self) -> bool {
        self.v.iter().any(Option::is_some) || self.w.is_some()
    }

    /// Coefficients of `P (A - A0) P u + P B P u` for one component.
    pub fn perturbation(&self, t: &Tables, c: &[C64]) -> Vec<C64> {
        self.terms(t, c, true, true)
    }

    fn terms(&self, t: &Tables, c: &[C64], metric: bool, lower: bool) -> Vec<C64> {
        let pts = t.points();
        let mut acc = vec![C64::new(0.0, 0.0); pts];
        let metric = metric && self.has_metric();
        let lower = lower && self.has_lower();
        if !metric && !lower {
            return acc;
        }
        let m = t.masked(c);
        let need_grad = metric || (lower && self.v.iter().any(Option::is_some));
        let grads: Vec<Vec<C64>> =
            if need_grad { (0..t.grid.d).map(|l| t.grad_phys(&m, l)).collect() } else { Vec::new() };
        if metric {
            for (k, row) in self.dg.iter().enumerate() {
                if row.iter().all(Option::is_none) {
                    continue;
                }
                let mut q = vec![C64::new(0.0, 0.0); pts];
                for (l, e) in row.iter().enumerate() {
                    if let Some(e) = e {
                        q.iter_mut().zip(e).zip(&grads[l]).for_each(|((o, g), d)| *o += d * *g);
                    }
                }
                t.forward(&mut q);
                acc.iter_mut().zip(&q).zip(&t.dsym[k]).for_each(|((o, q), s)| *o -= s * q);
            }
        }
        if lower {
            let mut b = vec![C64::new(0.0, 0.0); pts];
            for (l, v) in self.v.iter().enumerate() {
                if let Some(v) = v {
                    b.iter_mut().zip(v).zip(&grads[l]).for_each(|((o, v), d)| *o -= v * d);
                }
            }
            if let Some(w) = &self.w {
                let mut u = m.clone();
                t.inverse(&mut u);
                b.iter_mut().zip(w).zip(&u).for_each(|((o, w), u)| *o -= w * u);
            }
            t.forward(&mut b);
            acc.iter_mut().zip(&b).for_each(|(o, b)| *o += b);
        }
        acc.iter_mut().zip(&t.mask).for_each(|(o, k)| {
            if !k {
                *o = C64::new(0.0, 0.0);
            }
        });
        acc
    }

    /// Coefficients of `B u` alone.
    pub fn lower_order(&self, t: &Tables, c: &[C64]) -> Vec<C64> {
        self.terms(t, c, false, true)
    }

    /// Coefficients of `A u` for one component.
    pub fn apply_a(&self, t: &Tables, c: &[C64]) -> Vec<C64> {
        let mut out = self.terms(t, c, true, false);
        out.iter_mut().zip(c).zip(&t.a0).for_each(|((o, c), a)| *o += c * *a);
        out
    }
}
