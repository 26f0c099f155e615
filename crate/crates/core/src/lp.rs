//! Littlewood-Paley projections, angular wedges and frequency-localized cube cutoffs.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::field::spectral::{apply_radial, apply_symbol};
use crate::field::{Field, GridSpec, SpatialField, C64};
use crate::spaces::CubePartition;

fn flat(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Smooth monotone step: 0 for `t <= 0`, 1 for `t >= 1`.
pub fn smooth_step(t: f64) -> f64 {
    let a = flat(t);
    let b = flat(1.0 - t);
    a / (a + b)
}

/// Radial profile with `phi0 = 1` on `[0, 1]` and `phi0 = 0` on `[2, inf)`.
pub fn phi0(r: f64) -> f64 {
    1.0 - smooth_step(r - 1.0)
}

/// Band profile `phi_j(r) = phi0(2^{-j} r) - phi0(2^{-j+1} r)`, `phi_0 = phi0`.
pub fn phi(j: usize, r: f64) -> f64 {
    if j == 0 {
        phi0(r)
    } else {
        let s = (-(j as f64)).exp2();
        phi0(s * r) - phi0(2.0 * s * r)
    }
}

/// Symbol of `S_{<=n}` (the sum of bands `0..=n`).
pub fn leq_symbol(n: usize, r: f64) -> f64 {
    phi0((-(n as f64)).exp2() * r)
}

/// Symbol of `S_{>=n}`.
pub fn geq_symbol(n: usize, r: f64) -> f64 {
    if n == 0 {
        1.0
    } else {
        1.0 - leq_symbol(n - 1, r)
    }
}

/// Symbol of the widened reproducer `sum_{j-1 <= l <= j+1} phi_l`, equal to 1 on the support of `phi_j`.
pub fn widened_symbol(j: usize, r: f64) -> f64 {
    let lo = if j >= 2 { leq_symbol(j - 2, r) } else { 0.0 };
    leq_symbol(j + 1, r) - lo
}

/// The radial bump `phi0` with the nodes where it leaves 1 and reaches 0.
#[derive(Debug, Clone, Copy)]
pub struct BumpProfile {
    pub flat_until: f64,
    pub zero_from: f64,
}

impl Default for BumpProfile {
    fn default() -> Self {
        BumpProfile { flat_until: 1.0, zero_from: 2.0 }
    }
}

impl BumpProfile {
    pub fn phi0(&self, r: f64) -> f64 {
        phi0(r)
    }

    pub fn phi(&self, j: usize, r: f64) -> f64 {
        phi(j, r)
    }
}

/// Radial frequency annulus of band `j`: `[2^{j-1}, 2^{j+1}]`, band 0 is `[0, 2]`.
pub fn band_annulus(j: usize) -> (f64, f64) {
    if j == 0 {
        (0.0, 2.0)
    } else {
        ((j as f64 - 1.0).exp2(), (j as f64 + 1.0).exp2())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    Band(usize),
    AtMost(usize),
    AtLeast(usize),
}

impl Projection {
    pub fn symbol(&self, r: f64) -> f64 {
        match *self {
            Projection::Band(j) => phi(j, r),
            Projection::AtMost(n) => leq_symbol(n, r),
            Projection::AtLeast(n) => geq_symbol(n, r),
        }
    }
}

/// A frequency-localized piece `S_j u`.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicBand {
    pub j: usize,
    pub field: Field,
}

fn check_band(grid: &GridSpec, j: usize) -> Result<()> {
    if j > grid.j_max() {
        return Err(Error::BandOverflow { j, j_max: grid.j_max() });
    }
    Ok(())
}

/// Applies `S_j`, `S_{<=n}` or `S_{>=n}` to a spatial field.
///
/// Low-pass cuts below zero (for example `g_{<j-4}` with small `j`) are the
/// caller's business; the band index itself must be admissible on the grid.
pub fn project_spatial(f: &SpatialField, mode: Projection) -> Result<SpatialField> {
    let n = match mode {
        Projection::Band(j) | Projection::AtMost(j) | Projection::AtLeast(j) => j,
    };
    check_band(f.grid(), n)?;
    Ok(apply_radial(f, |r| mode.symbol(r)))
}

pub fn project(f: &Field, mode: Projection) -> Result<Field> {
    match f {
        Field::Spatial(s) => Ok(Field::Spatial(project_spatial(s, mode)?)),
        Field::SpaceTime(st) => Ok(Field::SpaceTime(st.try_map_slices(|s| project_spatial(s, mode))?)),
    }
}

/// `S_j f` as a band record.
pub fn band(f: &Field, j: usize) -> Result<DyadicBand> {
    Ok(DyadicBand { j, field: project(f, Projection::Band(j))? })
}

/// Widened reproducer `S~_j` with `S_j S~_j = S_j`.
pub fn widen(f: &SpatialField, j: usize) -> Result<SpatialField> {
    check_band(f.grid(), j)?;
    Ok(apply_radial(f, |r| widened_symbol(j, r)))
}

/// Partition of the frequency sphere into cones about the coordinate axes.
///
/// For `d = 1` the two wedges are the half-lines `xi > 0` and `xi < 0`. For
/// `d = 2` wedge `k` is the double cone about axis `k` whose profile is 1
/// within `half_angle - w` of the axis and vanishes beyond `half_angle + w`,
/// `w = half_angle / 3`; the raw profiles are normalized by their sum.
#[derive(Debug, Clone, Copy)]
pub struct WedgeSystem {
    pub d: usize,
    pub half_angle: f64,
}

impl WedgeSystem {
    pub fn new(d: usize) -> Self {
        WedgeSystem { d, half_angle: PI / 4.0 }
    }

    pub fn with_half_angle(d: usize, half_angle_deg: f64) -> Result<Self> {
        let a = half_angle_deg.to_radians();
        // support edge a + a/3 must stay within 60 degrees, and cones must cover the circle
        if !(a * 4.0 / 3.0 <= PI / 3.0 + 1e-12 && a * 4.0 / 3.0 > PI / 4.0) {
            return Err(Error::Parameter(format!("wedge half-angle {half_angle_deg} deg out of range")));
        }
        Ok(WedgeSystem { d, half_angle: a })
    }

    pub fn count(&self) -> usize {
        2
    }

    fn raw(&self, k: usize, xi: [f64; 2]) -> f64 {
        let r = xi[0].hypot(xi[1]);
        let c = (xi[k].abs() / r).min(1.0);
        let angle = c.acos();
        let w = self.half_angle / 3.0;
        1.0 - smooth_step((angle - (self.half_angle - w)) / (2.0 * w))
    }

    /// Angular profile `theta_k(xi / |xi|)`, `k` in `1..=2`.
    pub fn theta(&self, k: usize, xi: [f64; 2]) -> f64 {
        if self.d == 1 {
            return match (k, xi[0] >= 0.0) {
                (1, true) | (2, false) => 1.0,
                _ => 0.0,
            };
        }
        if xi[0] == 0.0 && xi[1] == 0.0 {
            return 0.5;
        }
        let a = self.raw(0, xi);
        let b = self.raw(1, xi);
        if k == 1 {
            a / (a + b)
        } else {
            b / (a + b)
        }
    }
}

fn wedge_spatial(w: &WedgeSystem, f: &SpatialField, j: usize, k: usize) -> SpatialField {
    apply_symbol(f, |xi, _| C64::new(w.theta(k, xi) * widened_symbol(j, xi[0].hypot(xi[1])), 0.0))
}

/// `Theta_{j,k}`: angular cutoff times the widened band reproducer.
pub fn wedge_project(w: &WedgeSystem, b: &DyadicBand, k: usize) -> Result<DyadicBand> {
    if k == 0 || k > w.count() {
        return Err(Error::Parameter(format!("wedge index {k} outside 1..={}", w.count())));
    }
    check_band(b.field.grid(), b.j)?;
    Ok(DyadicBand { j: b.j, field: b.field.map_slices(|s| wedge_spatial(w, s, b.j, k)) })
}

/// Multiplies `f` by the frequency-localized cutoff `S_0 chi_Q` of cube `q`.
pub fn freq_localized_cutoff(partition: &CubePartition, q: usize, f: &SpatialField) -> SpatialField {
    let chi = partition.freq_cutoff(q);
    let pts = f.grid().points();
    let mut out = f.clone();
    for a in 0..f.grid().components {
        out.component_mut(a).iter_mut().zip(&chi[..pts]).for_each(|(v, c)| *v *= c);
    }
    out
}

/// CSV table of the radial profiles on `[0, 2^{bands+1}]`.
pub fn dump_profiles(bands: usize, samples: usize) -> String {
    let mut s = String::from("r,phi0");
    for j in 0..=bands {
        let _ = write!(s, ",phi_{j}");
    }
    s.push_str(",sum\n");
    let rmax = (bands as f64 + 1.0).exp2();
    for i in 0..samples {
        let r = rmax * i as f64 / (samples - 1) as f64;
        let _ = write!(s, "{r:.6},{:.16e}", phi0(r));
        let mut total = 0.0;
        for j in 0..=bands {
            let p = phi(j, r);
            total += p;
            let _ = write!(s, ",{p:.16e}");
        }
        let _ = writeln!(s, ",{total:.16e}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::spectral::spectral_transform;
    use crate::field::Direction;
    use rand::{Rng, SeedableRng};

    fn grid1() -> GridSpec {
        GridSpec::new(1, 1024, 16.0, 2, 1).unwrap()
    }

    fn noise(grid: GridSpec, seed: u64) -> SpatialField {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let v = (0..grid.len()).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        SpatialField::new(grid, v).unwrap()
    }

    #[test]
    fn profile_values() {
        assert_eq!(phi0(0.3), 1.0);
        assert_eq!(phi0(1.0), 1.0);
        assert_eq!(phi0(2.0), 0.0);
        assert_eq!(phi0(7.0), 0.0);
        assert!((phi0(1.5) - 0.5).abs() < 1e-15);
        let mut prev = 1.0;
        for i in 0..=400 {
            let v = phi0(i as f64 * 0.01);
            assert!(v <= prev && v >= 0.0);
            prev = v;
        }
    }

    #[test]
    fn partition_of_unity_on_radial_samples() {
        for i in 0..4000 {
            let r = i as f64 * 0.0625;
            let s: f64 = (0..=12).map(|j| phi(j, r)).sum();
            assert!((s - 1.0).abs() <= 1e-14, "r = {r}: {s}");
            assert!((0..=12).all(|j| phi(j, r) >= 0.0));
        }
    }

    #[test]
    fn band_keeps_plane_wave_at_its_center() {
        let g = grid1();
        for j in 1..=g.j_max() {
            // 2^j lies on the lattice 2 pi k / 16 only for suitable k; the nearest lattice point is on the flat top
            let k = ((j as f64).exp2() * 16.0 / (2.0 * PI)).round();
            let xi = 2.0 * PI * k / 16.0;
            assert!((phi(j, xi) - 1.0).abs() < 1e-9);
            let w = SpatialField::plane_wave(g, [xi, 0.0]);
            let p = project_spatial(&w, Projection::Band(j)).unwrap();
            assert!(p.max_abs_diff(&w) < 1e-9);
        }
    }

    #[test]
    fn band_overflow() {
        let g = grid1();
        let f = noise(g, 1);
        assert!(matches!(
            project_spatial(&f, Projection::Band(g.j_max() + 1)),
            Err(Error::BandOverflow { .. })
        ));
    }

    #[test]
    fn disjoint_bands_annihilate() {
        let g = grid1();
        let f = noise(g, 2);
        for j in 0..=g.j_max() - 3 {
            let a = project_spatial(&project_spatial(&f, Projection::Band(j + 3)).unwrap(), Projection::Band(j)).unwrap();
            assert!(a.norm_l2() <= 1e-12 * f.norm_l2());
        }
    }

    #[test]
    fn widened_reproducer() {
        let g = grid1();
        let f = noise(g, 3);
        for j in 0..=g.j_max() {
            let sj = project_spatial(&f, Projection::Band(j)).unwrap();
            let a = project_spatial(&sj, Projection::Band(j)).unwrap();
            let b = project_spatial(&widen(&f, j).unwrap(), Projection::Band(j)).unwrap();
            // S_j S~_j = S_j exactly, so the idempotence defect compares S_j S_j against S_j
            assert!(b.sub(&sj).norm_l2() <= 1e-12 * f.norm_l2());
            assert!(a.norm_l2() <= sj.norm_l2() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn projections_commute_with_grid_shifts() {
        let g = grid1();
        let f = noise(g, 4);
        let shift = 37;
        let shifted = |h: &SpatialField| {
            let v = h.values();
            SpatialField::new(g, (0..g.n).map(|i| v[(i + shift) % g.n]).collect()).unwrap()
        };
        let a = shifted(&project_spatial(&f, Projection::Band(3)).unwrap());
        let b = project_spatial(&shifted(&f), Projection::Band(3)).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-13);
    }

    #[test]
    fn band_support_annulus() {
        let g = grid1();
        let f = noise(g, 5);
        for j in 0..=g.j_max() {
            let c = spectral_transform(&project_spatial(&f, Projection::Band(j)).unwrap(), Direction::Forward);
            let (lo, hi) = band_annulus(j);
            let (mut inside, mut outside) = (0.0, 0.0);
            for (p, v) in c.values().iter().enumerate() {
                let r = g.frequency(p)[0].abs();
                if r >= lo && r <= hi {
                    inside += v.norm_sqr();
                } else {
                    outside += v.norm_sqr();
                }
            }
            assert!(outside <= 1e-12 * (inside + outside));
        }
    }

    #[test]
    fn wedges_in_two_dimensions() {
        let g = GridSpec::new(2, 128, 16.0, 2, 1).unwrap();
        let w = WedgeSystem::new(2);
        let j = 2;
        let xi = [2.0 * PI * 10.0 / 16.0, 0.0];
        let wave = Field::Spatial(SpatialField::plane_wave(g, xi));
        let b = band(&wave, j).unwrap();
        let t1 = wedge_project(&w, &b, 1).unwrap();
        let t2 = wedge_project(&w, &b, 2).unwrap();
        let (Field::Spatial(bf), Field::Spatial(f1), Field::Spatial(f2)) = (&b.field, &t1.field, &t2.field) else {
            unreachable!()
        };
        assert!(f1.max_abs_diff(bf) < 1e-10);
        assert!(f2.norm_l2() <= 1e-10 * bf.norm_l2());

        for seed in 0..4 {
            let f = Field::Spatial(noise(g, seed));
            for j in 0..=g.j_max() {
                let b = band(&f, j).unwrap();
                let Field::Spatial(bs) = &b.field else { unreachable!() };
                let mut sum = SpatialField::zeros(g);
                let mut energy = 0.0;
                for k in 1..=2 {
                    let Field::Spatial(p) = wedge_project(&w, &b, k).unwrap().field else { unreachable!() };
                    energy += p.norm_l2().powi(2);
                    sum = sum.add(&p);
                }
                assert!(sum.sub(bs).norm_l2() <= 1e-12 * bs.norm_l2().max(1e-300));
                let nbhd = widen(bs, j).unwrap().norm_l2().powi(2);
                assert!(energy <= 2.0 * nbhd * (1.0 + 1e-12));
            }
        }
        for i in 0..360 {
            let a = (i as f64).to_radians();
            let xi = [a.cos(), a.sin()];
            assert!((w.theta(1, xi) + w.theta(2, xi) - 1.0).abs() < 1e-15);
            // supported within 60 degrees of the axis
            let from_axis = xi[0].abs().min(1.0).acos();
            if from_axis > PI / 3.0 {
                assert_eq!(w.theta(1, xi), 0.0);
            }
        }
    }

    #[test]
    fn wedges_in_one_dimension_are_half_lines() {
        let g = grid1();
        let w = WedgeSystem::new(1);
        let b = band(&Field::Spatial(noise(g, 7)), 4).unwrap();
        let Field::Spatial(p1) = wedge_project(&w, &b, 1).unwrap().field else { unreachable!() };
        let c = spectral_transform(&p1, Direction::Forward);
        for (p, v) in c.values().iter().enumerate() {
            if g.frequency(p)[0] < 0.0 {
                assert!(v.norm() < 1e-15);
            }
        }
        assert!(wedge_project(&w, &b, 3).is_err());
    }

    #[test]
    fn half_angle_range() {
        assert!(WedgeSystem::with_half_angle(2, 45.0).is_ok());
        assert!(WedgeSystem::with_half_angle(2, 30.0).is_err());
        assert!(WedgeSystem::with_half_angle(2, 50.0).is_err());
    }

    #[test]
    fn dump_has_header_and_rows() {
        let csv = dump_profiles(3, 11);
        assert_eq!(csv.lines().count(), 12);
        assert!(csv.starts_with("r,phi0,phi_0,phi_1,phi_2,phi_3,sum"));
    }
}
