//! Direct Crank–Nicolson solve for one-dimensional static metrics whose
//! deviation from the identity has few Fourier modes.

use super::operator::{Frozen, Tables};
use crate::field::C64;

/// Largest Fourier bandwidth of `g - 1` handled directly.
pub(crate) const MAX_BANDWIDTH: usize = 64;
/// Coefficients of `g - 1` below this fraction of the largest are dropped.
const MODE_CUTOFF: f64 = 1e-14;

/// LU factors of `1 + i dt/2 (A0 + P (A - A0) P)` in centred frequency order.
#[derive(Debug, Clone)]
pub(crate) struct BandedCn {
    n: usize,
    b: usize,
    /// Row `p` holds columns `p - b ..= p + b`.
    band: Vec<C64>,
    inv_diag: Vec<C64>,
}

impl BandedCn {
    /// `None` unless `d = 1`, only the metric is present and its deviation is narrow.
    pub fn new(t: &Tables, frozen: &Frozen, half: C64) -> Option<Self> {
        if t.grid.d != 1 || frozen.v.iter().any(Option::is_some) || frozen.w.is_some() {
            return None;
        }
        let n = t.grid.n;
        let mut e: Vec<C64> = match &frozen.dg[0][0] {
            Some(dg) => dg.iter().map(|x| C64::new(*x, 0.0)).collect(),
            None => vec![C64::new(0.0, 0.0); n],
        };
        t.forward(&mut e);
        let top = e.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let signed = |i: usize| if i <= n / 2 { i as i64 } else { i as i64 - n as i64 };
        let b = (0..n).filter(|&i| e[i].norm() > MODE_CUTOFF * top).map(|i| signed(i).unsigned_abs() as usize).max().unwrap_or(0);
        // products stay alias-free only while the band is small next to the dealiased range
        if b > MAX_BANDWIDTH || 6 * b > n {
            return None;
        }
        let w = 2 * b + 1;
        let mut band = vec![C64::new(0.0, 0.0); n * w];
        for p in 0..n {
            let i = Self::index(n, p);
            band[p * w + b] = 1.0 + half * t.a0[i];
            if !t.mask[i] {
                continue;
            }
            let xi = t.dsym[0][i].im;
            for m in -(b as i64)..=(b as i64) {
                let q = p as i64 - m;
                if q < 0 || q >= n as i64 {
                    continue;
                }
                let iq = Self::index(n, q as usize);
                if !t.mask[iq] {
                    continue;
                }
                let em = e[m.rem_euclid(n as i64) as usize];
                if em.norm() <= MODE_CUTOFF * top {
                    continue;
                }
                band[p * w + (b as i64 - m) as usize] += half * em * xi * t.dsym[0][iq].im;
            }
        }
        let mut lu = BandedCn { n, b, band, inv_diag: Vec::new() };
        lu.factor();
        lu.inv_diag = (0..n).map(|r| 1.0 / lu.band[lu.at(r, r)]).collect();
        Some(lu)
    }

    /// FFT index of centred position `p`.
    fn index(n: usize, p: usize) -> usize {
        (p + n - n / 2) % n
    }

    fn at(&self, r: usize, c: usize) -> usize {
        r * (2 * self.b + 1) + (c + self.b - r)
    }

    /// In-place LU without pivoting; the Hermitian part of the matrix is the identity.
    fn factor(&mut self) {
        let (n, b) = (self.n, self.b);
        for k in 0..n {
            let pivot = self.band[self.at(k, k)];
            for r in k + 1..n.min(k + b + 1) {
                let l = self.band[self.at(r, k)] / pivot;
                let rk = self.at(r, k);
                self.band[rk] = l;
                for c in k + 1..n.min(k + b + 1) {
                    let (rc, kc) = (self.at(r, c), self.at(k, c));
                    let v = self.band[kc];
                    self.band[rc] -= l * v;
                }
            }
        }
    }

    /// Solves for one component of Fourier coefficients in FFT order.
    pub fn solve(&self, rhs: &[C64]) -> Vec<C64> {
        let (n, b) = (self.n, self.b);
        let shift = n - n / 2;
        let mut x = rhs.to_vec();
        x.rotate_left(shift);
        for r in 0..n {
            let mut acc = x[r];
            for c in r.saturating_sub(b)..r {
                acc -= self.band[self.at(r, c)] * x[c];
            }
            x[r] = acc;
        }
        for r in (0..n).rev() {
            let mut acc = x[r];
            for c in r + 1..n.min(r + b + 1) {
                acc -= self.band[self.at(r, c)] * x[c];
            }
            x[r] = acc * self.inv_diag[r];
        }
        x.rotate_right(shift);
        x
    }
}
