//! FFT-based transforms, spectral differentiation, dealiasing and the `L^2` pairing.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::{Fft, FftPlanner};

use super::{GridSpec, SpatialField, C64};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Inverse,
}

type PlanCache = Mutex<HashMap<(usize, Direction), Arc<dyn Fft<f64>>>>;

fn plan(n: usize, dir: Direction) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<PlanCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap_or_else(|e| e.into_inner());
    map.entry((n, dir))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            match dir {
                Direction::Forward => planner.plan_fft_forward(n),
                Direction::Inverse => planner.plan_fft_inverse(n),
            }
        })
        .clone()
}

/// In-place transform of one component (`N^d` values, x fastest).
///
/// Forward produces coefficients `c_k = N^{-d} sum_x f(x) e^{-i xi_k . x}`;
/// inverse is the unnormalized synthesis, so the pair is an exact inverse.
pub fn fft_component(grid: &GridSpec, data: &mut [C64], dir: Direction) {
    let n = grid.n;
    let fft = plan(n, dir);
    let mut scratch = vec![C64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    fft.process_with_scratch(data, &mut scratch);
    if grid.d == 2 {
        let mut col = vec![C64::new(0.0, 0.0); n];
        for x in 0..n {
            for y in 0..n {
                col[y] = data[y * n + x];
            }
            fft.process_with_scratch(&mut col, &mut scratch);
            for y in 0..n {
                data[y * n + x] = col[y];
            }
        }
    }
    if dir == Direction::Forward {
        let s = 1.0 / grid.points() as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }
}

fn transform_values(grid: &GridSpec, values: &mut [C64], dir: Direction) {
    let pts = grid.points();
    for chunk in values.chunks_mut(pts) {
        fft_component(grid, chunk, dir);
    }
}

/// Forward: grid values to Fourier coefficients. Inverse: coefficients to values.
pub fn spectral_transform(f: &SpatialField, dir: Direction) -> SpatialField {
    let mut out = f.clone();
    transform_values(f.grid(), out.values_mut(), dir);
    out
}

/// Multiplies every Fourier coefficient by `symbol(xi)`; the symbol receives
/// the frequency vector and the flat spectral index.
pub fn apply_symbol(f: &SpatialField, symbol: impl Fn([f64; 2], usize) -> C64) -> SpatialField {
    let grid = *f.grid();
    let mut out = f.clone();
    let pts = grid.points();
    let table: Vec<C64> = (0..pts).map(|p| symbol(grid.frequency(p), p)).collect();
    for chunk in out.values_mut().chunks_mut(pts) {
        fft_component(&grid, chunk, Direction::Forward);
        chunk.iter_mut().zip(&table).for_each(|(v, s)| *v *= s);
        fft_component(&grid, chunk, Direction::Inverse);
    }
    out
}

/// Real radial multiplier `m(|xi|)`.
pub fn apply_radial(f: &SpatialField, m: impl Fn(f64) -> f64) -> SpatialField {
    apply_symbol(f, |xi, _| C64::new(m(xi[0].hypot(xi[1])), 0.0))
}

/// Symbol `i xi_axis`, with the unpaired Nyquist mode mapped to zero.
pub fn derivative_symbol(grid: &GridSpec, axis: usize, p: usize) -> C64 {
    let i = if axis == 0 { p % grid.n } else { p / grid.n };
    if grid.is_nyquist(i) {
        return C64::new(0.0, 0.0);
    }
    C64::new(0.0, grid.frequency(p)[axis])
}

/// Spectral derivative `d/dx_axis`, `axis` in `1..=d`.
pub fn derivative(f: &SpatialField, axis: usize) -> Result<SpatialField> {
    let grid = *f.grid();
    if axis == 0 || axis > grid.d {
        return Err(Error::Dimension(format!("axis {axis} outside 1..={}", grid.d)));
    }
    Ok(apply_symbol(f, |_, p| derivative_symbol(&grid, axis - 1, p)))
}

/// Whether spectral index `p` survives the 2/3 dealiasing projection.
pub fn dealias_keep(grid: &GridSpec, p: usize) -> bool {
    let xi = grid.frequency(p);
    xi[0].abs().max(xi[1].abs()) <= grid.dealias_cutoff()
}

/// Projection onto `|xi|_inf <= (2/3) Nyquist`.
pub fn dealias(f: &SpatialField) -> SpatialField {
    let grid = *f.grid();
    apply_symbol(f, |_, p| if dealias_keep(&grid, p) { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
}

/// Dealiased pointwise product.
pub fn product(f: &SpatialField, g: &SpatialField) -> SpatialField {
    dealias(&f.mul(g))
}

/// `<f, g> = int conj(f) g dx`, summed over components.
pub fn inner_product(f: &SpatialField, g: &SpatialField) -> Result<C64> {
    if f.grid().same_space(g.grid()) && f.grid().components == g.grid().components {
        let s: C64 = f.values().iter().zip(g.values()).map(|(a, b)| a.conj() * b).sum();
        Ok(s * f.grid().cell_volume())
    } else {
        Err(Error::Dimension("inner product of fields on different grids".into()))
    }
}

/// `L^2` norm computed from Fourier coefficients: `L^{d/2} (sum |c_k|^2)^{1/2}`.
pub fn coefficient_norm(coeffs: &SpatialField) -> f64 {
    let g = coeffs.grid();
    (coeffs.values().iter().map(|c| c.norm_sqr()).sum::<f64>() * g.side.powi(g.d as i32)).sqrt()
}

/// Largest spectral radius `|xi|` carrying relative mass above `rel` (per component sum).
pub fn spectral_radius(f: &SpatialField, rel: f64) -> f64 {
    let c = spectral_transform(f, Direction::Forward);
    let grid = *f.grid();
    let pts = grid.points();
    let mut mass = vec![0.0; pts];
    for chunk in c.values().chunks(pts) {
        for (m, v) in mass.iter_mut().zip(chunk) {
            *m += v.norm_sqr();
        }
    }
    let total: f64 = mass.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    (0..pts)
        .filter(|&p| mass[p] > rel * total)
        .map(|p| {
            let xi = grid.frequency(p);
            xi[0].hypot(xi[1])
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random(grid: GridSpec, seed: u64) -> SpatialField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SpatialField::new(
            grid,
            (0..grid.len()).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect(),
        )
        .unwrap()
    }

    fn band_limited(grid: GridSpec, seed: u64, kmax: f64) -> SpatialField {
        let f = random(grid, seed);
        apply_symbol(&f, |xi, _| if xi[0].abs().max(xi[1].abs()) <= kmax { 1.0.into() } else { 0.0.into() })
    }

    fn grids() -> Vec<GridSpec> {
        vec![
            GridSpec::new(1, 64, 8.0, 2, 1).unwrap(),
            GridSpec::new(1, 1024, 16.0, 2, 2).unwrap(),
            GridSpec::new(2, 32, 4.0, 2, 1).unwrap(),
            GridSpec::new(2, 128, 16.0, 2, 1).unwrap(),
        ]
    }

    #[test]
    fn constant_has_single_coefficient() {
        let g = GridSpec::new(2, 32, 4.0, 2, 1).unwrap();
        let one = SpatialField::from_fn(g, |_, _| C64::new(1.0, 0.0));
        let c = spectral_transform(&one, Direction::Forward);
        assert!((c.values()[0] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(c.values()[1..].iter().all(|v| v.norm() < 1e-15));
    }

    #[test]
    fn plane_wave_hits_its_lattice_point() {
        let g = GridSpec::new(2, 32, 4.0, 2, 1).unwrap();
        let xi = [2.0 * PI * 3.0 / 4.0, -2.0 * PI / 4.0];
        let c = spectral_transform(&SpatialField::plane_wave(g, xi), Direction::Forward);
        let target = 3 + (32 - 1) * 32;
        for (p, v) in c.values().iter().enumerate() {
            let want = if p == target { 1.0 } else { 0.0 };
            assert!((v.norm() - want).abs() < 1e-13, "index {p}");
        }
    }

    #[test]
    fn round_trip_and_parseval() {
        for (k, g) in grids().into_iter().enumerate() {
            let f = random(g, k as u64);
            let c = spectral_transform(&f, Direction::Forward);
            let back = spectral_transform(&c, Direction::Inverse);
            let rel = back.sub(&f).norm_l2() / f.norm_l2();
            assert!(rel <= 1e-13, "round trip {rel}");
            let p = (coefficient_norm(&c) - f.norm_l2()).abs() / f.norm_l2();
            assert!(p <= 1e-12, "parseval {p}");
        }
    }

    #[test]
    fn derivative_of_plane_wave() {
        let g = GridSpec::new(1, 64, 8.0, 2, 1).unwrap();
        let xi = 2.0 * PI * 5.0 / 8.0;
        let f = SpatialField::plane_wave(g, [xi, 0.0]);
        let df = derivative(&f, 1).unwrap();
        assert!(df.max_abs_diff(&f.scale(C64::new(0.0, xi))) < 1e-12);
        let one = SpatialField::from_fn(g, |_, _| 1.0.into());
        assert!(derivative(&one, 1).unwrap().norm_sup() < 1e-14);
        assert!(derivative(&one, 2).is_err());
    }

    #[test]
    fn derivative_symbol_on_every_mode() {
        let g = GridSpec::new(2, 16, 4.0, 2, 1).unwrap();
        for p in 0..g.points() {
            let (ix, iy) = (p % 16, p / 16);
            if g.is_nyquist(ix) || g.is_nyquist(iy) {
                continue;
            }
            let xi = g.frequency(p);
            let f = SpatialField::plane_wave(g, xi);
            for axis in 1..=2 {
                let df = derivative(&f, axis).unwrap();
                assert!(df.max_abs_diff(&f.scale(C64::new(0.0, xi[axis - 1]))) < 1e-11);
            }
        }
    }

    #[test]
    fn leibniz_rule_on_band_limited_fields() {
        for (k, g) in grids().into_iter().enumerate() {
            let kmax = g.nyquist() / 3.0;
            let f = band_limited(g, 10 + k as u64, kmax);
            let h = band_limited(g, 20 + k as u64, kmax);
            for axis in 1..=g.d {
                let lhs = derivative(&f.mul(&h), axis).unwrap();
                let rhs = f.mul(&derivative(&h, axis).unwrap()).add(&h.mul(&derivative(&f, axis).unwrap()));
                assert!(lhs.sub(&rhs).norm_l2() <= 1e-10 * lhs.norm_l2());
            }
        }
    }

    #[test]
    fn inner_product_properties() {
        let g = GridSpec::new(1, 64, 8.0, 2, 1).unwrap();
        let f = band_limited(g, 1, g.dealias_cutoff());
        let h = band_limited(g, 2, g.dealias_cutoff());
        let ff = inner_product(&f, &f).unwrap();
        assert!(ff.re >= 0.0 && ff.im.abs() < 1e-12);
        assert!((ff.re - f.norm_l2().powi(2)).abs() < 1e-10);
        // conjugate-linear in the first slot
        let c = C64::new(0.3, -1.2);
        let lhs = inner_product(&f.scale(c), &h).unwrap();
        assert!((lhs - c.conj() * inner_product(&f, &h).unwrap()).norm() < 1e-12);
        // periodic integration by parts
        let a = inner_product(&f, &derivative(&h, 1).unwrap()).unwrap();
        let b = inner_product(&derivative(&f, 1).unwrap(), &h).unwrap();
        assert!((a + b).norm() <= 1e-10 * a.norm().max(1.0));
        let w1 = SpatialField::plane_wave(g, [2.0 * PI / 8.0, 0.0]);
        let w2 = SpatialField::plane_wave(g, [4.0 * PI / 8.0, 0.0]);
        assert!(inner_product(&w1, &w2).unwrap().norm() < 1e-12);
        let other = GridSpec::new(1, 128, 8.0, 2, 1).unwrap();
        assert!(inner_product(&f, &SpatialField::zeros(other)).is_err());
    }
}
