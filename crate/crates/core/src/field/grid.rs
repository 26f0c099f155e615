use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Periodic sampling grid on the box `[0, L)^d` together with the time
/// sampling `t_n = n / (M - 1)` of the unit interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub d: usize,
    pub n: usize,
    pub side: f64,
    pub time_samples: usize,
    pub components: usize,
}

impl GridSpec {
    pub fn new(d: usize, n: usize, side: f64, time_samples: usize, components: usize) -> Result<Self> {
        let g = GridSpec { d, n, side, time_samples, components };
        g.validate()?;
        Ok(g)
    }

    /// One-component grid with the default 64 time samples.
    pub fn spatial(d: usize, n: usize, side: f64) -> Result<Self> {
        Self::new(d, n, side, 64, 1)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d == 1 || self.d == 2) {
            return Err(Error::Config(format!("dimension d = {} not in {{1, 2}}", self.d)));
        }
        if !self.n.is_power_of_two() || self.n < 16 {
            return Err(Error::Config(format!("N = {} must be a power of two >= 16", self.n)));
        }
        if self.time_samples < 2 {
            return Err(Error::Config(format!("M = {} must be at least 2", self.time_samples)));
        }
        if self.components == 0 {
            return Err(Error::Config("m must be at least 1".into()));
        }
        if !(self.side.is_finite() && self.side > 0.0) {
            return Err(Error::Config(format!("box side L = {} must be positive", self.side)));
        }
        // cube partitions need L = 2^q with a whole number of cells per unit length
        let q = self.side.log2();
        if q.fract() != 0.0 || q < 0.0 || self.side > self.n as f64 {
            return Err(Error::Config(format!(
                "box side L = {} must be a power of two between 1 and N",
                self.side
            )));
        }
        if self.max_band_raw() < 0.0 {
            return Err(Error::Config("grid too coarse to resolve band 0".into()));
        }
        Ok(())
    }

    fn max_band_raw(&self) -> f64 {
        (self.n as f64 * PI / self.side).log2() - 2.0
    }

    /// Largest admissible Littlewood-Paley band (two bands of dealiasing margin).
    pub fn j_max(&self) -> usize {
        self.max_band_raw().floor() as usize
    }

    /// Largest cube scale `l` with `2^l <= L`.
    pub fn max_scale(&self) -> usize {
        self.side.log2() as usize
    }

    pub fn dx(&self) -> f64 {
        self.side / self.n as f64
    }

    pub fn points(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn len(&self) -> usize {
        self.points() * self.components
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.d as i32)
    }

    pub fn nyquist(&self) -> f64 {
        PI * self.n as f64 / self.side
    }

    /// Sup-norm frequency radius kept by the dealiasing projection.
    pub fn dealias_cutoff(&self) -> f64 {
        2.0 / 3.0 * self.nyquist()
    }

    pub fn dt(&self) -> f64 {
        1.0 / (self.time_samples - 1) as f64
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt()
    }

    /// Wavenumber `2 pi k / L` of FFT index `i` along one axis.
    pub fn wavenumber(&self, i: usize) -> f64 {
        let k = if i <= self.n / 2 { i as i64 } else { i as i64 - self.n as i64 };
        2.0 * PI * k as f64 / self.side
    }

    /// Coordinates of flat point index `p` (x fastest).
    pub fn coords(&self, p: usize) -> [f64; 2] {
        let dx = self.dx();
        [(p % self.n) as f64 * dx, (p / self.n) as f64 * dx]
    }

    /// Frequency vector of flat spectral index `p`; the second entry is zero for `d = 1`.
    pub fn frequency(&self, p: usize) -> [f64; 2] {
        if self.d == 1 {
            [self.wavenumber(p), 0.0]
        } else {
            [self.wavenumber(p % self.n), self.wavenumber(p / self.n)]
        }
    }

    /// Whether index `i` along one axis is the (unpaired) Nyquist mode.
    pub fn is_nyquist(&self, i: usize) -> bool {
        i == self.n / 2
    }

    pub fn with_time_samples(&self, m: usize) -> Result<Self> {
        Self::new(self.d, self.n, self.side, m, self.components)
    }

    pub fn with_components(&self, m: usize) -> Result<Self> {
        Self::new(self.d, self.n, self.side, self.time_samples, m)
    }

    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(self.d, n, self.side, self.time_samples, self.components)
    }

    /// Same spatial grid regardless of time sampling and component count.
    pub fn same_space(&self, other: &GridSpec) -> bool {
        self.d == other.d && self.n == other.n && self.side == other.side
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(3, 64, 8.0, 4, 1).is_err());
        assert!(GridSpec::new(1, 100, 8.0, 4, 1).is_err());
        assert!(GridSpec::new(1, 8, 8.0, 4, 1).is_err());
        assert!(GridSpec::new(1, 64, 8.0, 1, 1).is_err());
        assert!(GridSpec::new(1, 64, 8.0, 4, 0).is_err());
        assert!(GridSpec::new(1, 64, 6.0, 4, 1).is_err());
        assert!(GridSpec::new(1, 64, -1.0, 4, 1).is_err());
    }

    #[test]
    fn band_limits() {
        // N pi / L = 1024 pi / 4 ~ 804, log2 ~ 9.65
        let g = GridSpec::new(1, 1024, 4.0, 2, 1).unwrap();
        assert_eq!(g.j_max(), 7);
        let g = GridSpec::new(1, 1024, 64.0, 2, 1).unwrap();
        assert_eq!(g.j_max(), 3);
        assert_eq!(g.max_scale(), 6);
    }

    #[test]
    fn wavenumbers_follow_fft_order() {
        let g = GridSpec::new(1, 16, 2.0, 2, 1).unwrap();
        assert_eq!(g.wavenumber(0), 0.0);
        assert!((g.wavenumber(1) - PI).abs() < 1e-15);
        assert!((g.wavenumber(15) + PI).abs() < 1e-15);
    }
}
