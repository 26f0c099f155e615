use proptest::prelude::*;

use super::*;
use crate::field::{Field, SpaceTimeField};
use crate::lp::{project_spatial, Projection};
use crate::spaces::{band_norms, weighted_sum, Space};

fn small_spec() -> EnsembleSpec {
    EnsembleSpec {
        count: 6,
        grid: GridSpec { d: 1, n: 512, side: 8.0, time_samples: 8, components: 1 },
        ..EnsembleSpec::default()
    }
}

fn spatial(f: Field) -> SpatialField {
    match f {
        Field::Spatial(u) => u,
        Field::SpaceTime(_) => panic!("expected a spatial field"),
    }
}

fn x_norm(u: &SpaceTimeField, s: f64) -> f64 {
    weighted_sum(&band_norms(&Field::SpaceTime(u.clone()), Space::X).unwrap(), s)
}

#[test]
fn ensemble_is_deterministic() {
    let spec = small_spec();
    for which in [Which::Spatial, Which::Spacetime] {
        let a = random_field(&spec, 3, 1, which).unwrap();
        let b = random_field(&spec, 3, 1, which).unwrap();
        assert_eq!(a, b);
    }
    let other = random_field(&EnsembleSpec { seed: 8, ..small_spec() }, 3, 1, Which::Spatial).unwrap();
    assert_ne!(other, random_field(&spec, 3, 1, Which::Spatial).unwrap());
    let p = VerifyParams::default();
    let r1 = verify(Estimate::Algebra, &spec, &p).unwrap();
    let r2 = verify(Estimate::Algebra, &spec, &p).unwrap();
    assert_eq!(r1.to_csv(), r2.to_csv());
}

#[test]
fn band_energies_follow_the_spectrum_law() {
    let spec = EnsembleSpec { bands: Some([0, 5]), ..EnsembleSpec::default() };
    for i in 0..4 {
        let u = spatial(random_field(&spec, i, 0, Which::Spatial).unwrap());
        for j in 0..=5 {
            let measured = project_spatial(&u, Projection::Band(j)).unwrap().norm_l2();
            let target = spec.amplitude * (-spec.spectrum * j as f64).exp2();
            let r = measured / target;
            assert!((0.7..=1.3).contains(&r), "sample {i} band {j}: {r}");
        }
    }
}

#[test]
fn one_window_one_band_is_a_localized_packet() {
    let spec = EnsembleSpec { bands: Some([4, 4]), bump_centers: 1, ..EnsembleSpec::default() };
    let u = spatial(random_field(&spec, 0, 0, Which::Spatial).unwrap());
    let g = *u.grid();
    let dx = g.side / g.n as f64;
    let vals = u.values();
    let peak = (0..g.n).max_by(|&a, &b| vals[a].norm().total_cmp(&vals[b].norm())).unwrap();
    let total: f64 = vals.iter().map(|z| z.norm_sqr()).sum();
    let near: f64 = (0..g.n)
        .filter(|&p| {
            let d = ((p as f64 - peak as f64) * dx).rem_euclid(g.side);
            d.min(g.side - d) <= g.side / 4.0
        })
        .map(|p| vals[p].norm_sqr())
        .sum();
    assert!(near / total > 0.99, "{}", near / total);
    let band = project_spatial(&u, Projection::Band(4)).unwrap().norm_l2();
    assert!(band / u.norm_l2() > 0.95);
}

#[test]
fn moser_with_the_identity_map() {
    let p = VerifyParams { nonlinearity: "u".into(), ..VerifyParams::default() };
    let r = verify(Estimate::Moser, &small_spec(), &p).unwrap();
    for s in &r.samples {
        assert!((s.ratio * (1.0 + s.lhs) - 1.0).abs() <= 1e-12, "{s:?}");
    }
    let tiny = EnsembleSpec { amplitude: 1e-6, ..small_spec() };
    let r = verify(Estimate::Moser, &tiny, &p).unwrap();
    assert!(r.samples.iter().all(|s| (s.ratio - 1.0).abs() <= 1e-4));
}

#[test]
fn algebra_against_a_constant_factor() {
    let spec = small_spec();
    let u = match random_field(&spec, 2, 0, Which::Spacetime).unwrap() {
        Field::SpaceTime(u) => u,
        Field::Spatial(_) => unreachable!(),
    };
    let one = SpaceTimeField::from_fn(spec.grid, |_, _, _| C64::new(1.0, 0.0));
    let s = 2.75;
    let ratio = x_norm(&u.zip_slices(&one, crate::field::spectral::product), s) / (x_norm(&u, s) * x_norm(&one, s));
    assert!(ratio.is_finite() && ratio > 0.0);
}

#[test]
fn identity_symbol_commutes() {
    let spec = EnsembleSpec { count: 3, ..EnsembleSpec::default() };
    let p = VerifyParams { symbol: CommutatorSymbol::Identity, ..VerifyParams::default() };
    let r = verify(Estimate::Commutator, &spec, &p).unwrap();
    assert!(!r.samples.is_empty());
    assert!(r.samples.iter().all(|s| s.lhs == 0.0 && s.rhs > 0.0));
}

#[test]
fn parameter_errors() {
    assert!(matches!("bogus".parse::<Estimate>(), Err(Error::Parameter(_))));
    for e in ESTIMATES {
        assert_eq!(e.name().parse::<Estimate>().unwrap(), e);
    }
    let spec = small_spec();
    let bad = [
        (Estimate::Bilinear1, Some(2.0)),
        (Estimate::Bilinear2, Some(-0.1)),
        (Estimate::Bilinear3, Some(3.0)),
    ];
    for (e, sigma) in bad {
        let p = VerifyParams { sigma, ..VerifyParams::default() };
        assert!(matches!(verify(e, &spec, &p), Err(Error::Parameter(_))), "{e:?}");
    }
    let rough = VerifyParams { s: Some(2.25), ..VerifyParams::default() };
    assert!(matches!(verify(Estimate::FjBound, &spec, &rough), Err(Error::Parameter(_))));
    let over = EnsembleSpec { bands: Some([0, 30]), ..small_spec() };
    assert!(matches!(verify(Estimate::Algebra, &over, &VerifyParams::default()), Err(Error::BandOverflow { .. })));
}

#[test]
fn single_band_scan_has_no_slope() {
    let spec = ScanSpec {
        grid: GridSpec { d: 1, n: 512, side: 32.0, time_samples: 9, components: 1 },
        j_range: [3, 3],
        ..ScanSpec::default()
    };
    let r = smoothing_scan(&spec, &crate::linear::PropagatorConfig::default()).unwrap();
    assert_eq!(r.samples.len(), 1);
    assert!(r.insufficient_points && r.log2_slope.is_none() && !r.pass);
}

#[test]
fn judging_and_baselines() {
    let rows = |r: [f64; 3]| (0..3).map(|k| Sample { sample: 0, band: k, lhs: r[k], rhs: 1.0, ratio: r[k] }).collect();
    let flat = EstimateReport::from_samples("t", rows([0.5, 0.5, 0.5]), "exact norms").unwrap();
    assert_eq!(flat.log2_slope, Some(0.0));
    assert!(flat.clone().judge(0.1, Some(0.4)).pass);
    assert!(!flat.clone().judge(0.1, Some(0.39)).pass);
    let growing = EstimateReport::from_samples("t", rows([0.25, 0.5, 1.0]), "exact norms").unwrap();
    assert!((growing.log2_slope.unwrap() - 1.0).abs() < 1e-12 && !growing.judge(0.1, None).pass);
    let bad = vec![Sample { sample: 0, band: 0, lhs: 1.0, rhs: 0.0, ratio: f64::INFINITY }];
    assert!(EstimateReport::from_samples("t", bad, "").is_err());
    for e in ESTIMATES {
        assert!(baseline(e.name()).is_some_and(|b| b.is_finite() && b > 0.0));
    }
    assert_eq!(flat.to_csv().lines().next(), Some("sample,band,lhs,rhs,ratio"));
}

proptest! {
    #[test]
    fn regression_recovers_linear_trends(a in -5.0f64..5.0, b in -3.0f64..3.0, n in 2usize..12) {
        let pts: Vec<(f64, f64)> = (0..n).map(|k| (k as f64, a + b * k as f64)).collect();
        let slope = regression_slope(&pts).unwrap();
        prop_assert!((slope - b).abs() <= 1e-9 * (1.0 + b.abs()));
    }

    #[test]
    fn band_ranges_cycle_within_the_grid(i in 0usize..1000) {
        let spec = EnsembleSpec::default();
        let (lo, hi) = spec.band_range(i);
        prop_assert!(lo == 0 && hi >= 1 && hi <= spec.grid.j_max());
    }
}
