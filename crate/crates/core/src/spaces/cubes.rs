use crate::error::{Error, Result};
use crate::field::spectral::apply_radial;
use crate::field::{GridSpec, SpatialField, C64};
use crate::lp::{phi0, smooth_step};

/// One-dimensional cutoff with `sum_k beta(y - k) = 1`, supported in `[-1/4, 5/4]`.
fn beta(y: f64) -> f64 {
    smooth_step((y + 0.25) / 0.5) * (1.0 - smooth_step((y - 0.75) / 0.5))
}

/// Tiling of the torus by anchored axis cubes of side `2^j`, with a smooth
/// partition of unity `chi_Q` and its frequency-localized variant `S_0 chi_Q`.
#[derive(Debug, Clone)]
pub struct CubePartition {
    grid: GridSpec,
    j: usize,
    per_axis: usize,
    chi: Vec<Vec<f64>>,
    chi_freq: Vec<Vec<f64>>,
}

impl CubePartition {
    pub fn new(grid: &GridSpec, j: usize) -> Result<Self> {
        let side = (j as f64).exp2();
        if side > grid.side {
            return Err(Error::Scale { j, side: grid.side });
        }
        let per_axis = (grid.side / side) as usize;
        let points_per_side = (side / grid.dx()).round() as usize;
        let profiles: Vec<Vec<f64>> = (0..per_axis)
            .map(|k| {
                (0..grid.n)
                    .map(|i| {
                        // cube k starts at grid index k * points_per_side
                        let rel = (i + grid.n - k * points_per_side) % grid.n;
                        let y = rel as f64 / points_per_side as f64;
                        let kk = per_axis as f64;
                        beta(y) + beta(y - kk) + beta(y + kk)
                    })
                    .collect()
            })
            .collect();
        let count = per_axis.pow(grid.d as u32);
        let pts = grid.points();
        let scalar = GridSpec { components: 1, ..*grid };
        let mut chi = Vec::with_capacity(count);
        let mut chi_freq = Vec::with_capacity(count);
        for q in 0..count {
            let (kx, ky) = (q % per_axis, q / per_axis);
            let c: Vec<f64> = if grid.d == 1 {
                profiles[kx].clone()
            } else {
                (0..pts).map(|p| profiles[kx][p % grid.n] * profiles[ky][p / grid.n]).collect()
            };
            let field = SpatialField::from_raw(scalar, c.iter().map(|&v| C64::new(v, 0.0)).collect());
            let smooth = apply_radial(&field, phi0);
            chi_freq.push(smooth.values().iter().map(|v| v.re).collect());
            chi.push(c);
        }
        Ok(CubePartition { grid: *grid, j, per_axis, chi, chi_freq })
    }

    /// Partition at scale `j`, clamped to the whole box when `2^j > L`.
    pub fn clamped(grid: &GridSpec, j: usize) -> Self {
        Self::new(grid, j.min(grid.max_scale())).expect("clamped scale fits the box")
    }

    pub fn scale(&self) -> usize {
        self.j
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.chi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chi.is_empty()
    }

    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    /// Lower corner of cube `q`.
    pub fn corner(&self, q: usize) -> [f64; 2] {
        let side = (self.j as f64).exp2();
        [(q % self.per_axis) as f64 * side, (q / self.per_axis) as f64 * side]
    }

    pub fn cutoff(&self, q: usize) -> &[f64] {
        &self.chi[q]
    }

    pub fn freq_cutoff(&self, q: usize) -> &[f64] {
        &self.chi_freq[q]
    }

    pub fn cutoffs(&self, freq_localized: bool) -> &[Vec<f64>] {
        if freq_localized {
            &self.chi_freq
        } else {
            &self.chi
        }
    }
}

/// Sums of `density` over the anchored cubes of side `2^l` (sharp indicators),
/// multiplied by the cell volume.
pub fn cube_sums(grid: &GridSpec, density: &[f64], l: usize) -> Vec<f64> {
    let pps = ((l as f64).exp2() / grid.dx()).round() as usize;
    let per_axis = grid.n / pps;
    let vol = grid.cell_volume();
    if grid.d == 1 {
        density.chunks(pps).map(|c| c.iter().sum::<f64>() * vol).collect()
    } else {
        let mut out = vec![0.0; per_axis * per_axis];
        for (p, r) in density.iter().enumerate() {
            let (x, y) = (p % grid.n, p / grid.n);
            out[(y / pps) * per_axis + x / pps] += r;
        }
        out.iter_mut().for_each(|v| *v *= vol);
        out
    }
}

/// Index of the scale-`l` cube containing grid point `p`.
pub fn cube_of(grid: &GridSpec, l: usize, p: usize) -> usize {
    let pps = ((l as f64).exp2() / grid.dx()).round() as usize;
    let per_axis = grid.n / pps;
    if grid.d == 1 {
        p / pps
    } else {
        ((p / grid.n) / pps) * per_axis + (p % grid.n) / pps
    }
}
