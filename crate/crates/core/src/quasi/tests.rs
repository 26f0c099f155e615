use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::expr::{preset, Preset};

const TAU: f64 = std::f64::consts::TAU;

fn cubic() -> NonlinearitySpec {
    match preset("cubic", 1).unwrap() {
        Preset::Nonlinearity(f) => f,
        _ => unreachable!(),
    }
}

fn grid() -> GridSpec {
    GridSpec::new(1, 128, 16.0, 17, 1).unwrap()
}

fn packet(grid: GridSpec, amp: f64) -> SpatialField {
    SpatialField::from_fn(grid, |_, x| C64::from_polar(amp * (-(x[0] - 8.0).powi(2) / 2.0).exp(), 1.5 * x[0]))
}

fn scaled_to_gauge(u: SpatialField, s: f64, gauge: f64) -> SpatialField {
    let n = l1_hs(&u, s).unwrap();
    u.scale(C64::new(gauge / n, 0.0))
}

fn random_space_time(grid: GridSpec, seed: u64, amp: f64) -> SpaceTimeField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k0 = TAU / grid.side;
    let modes: Vec<(C64, f64, f64)> = (0..10)
        .map(|_| {
            let c = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * amp;
            (c, rng.gen_range(-20..=20) as f64 * k0, rng.gen_range(-3.0..3.0))
        })
        .collect();
    SpaceTimeField::from_fn(grid, |_, t, x| modes.iter().map(|(c, k, w)| c * C64::from_polar(1.0, k * x[0] + w * t)).sum())
}

#[test]
fn div_grad_of_identity_is_laplacian() {
    let g = GridSpec::spatial(2, 32, 8.0).unwrap();
    let xi = [TAU * 2.0 / 8.0, TAU * 3.0 / 8.0];
    let w = SpatialField::plane_wave(g, xi);
    let s = GridSpec { components: 1, ..g };
    let one = SpatialField::from_fn(s, |_, _| C64::new(1.0, 0.0));
    let zero = SpatialField::zeros(s);
    let lap = div_grad(&[vec![one.clone(), zero.clone()], vec![zero, one]], &w).unwrap();
    assert!(lap.max_abs_diff(&w.scale(C64::new(-(xi[0] * xi[0] + xi[1] * xi[1]), 0.0))) < 1e-10);
}

#[test]
fn time_derivative_is_exact_on_quadratics() {
    let g = GridSpec::new(1, 16, 4.0, 9, 1).unwrap();
    let u = SpaceTimeField::from_fn(g, |_, t, x| C64::new(t * t + x[0], 3.0 * t));
    let ut = time_derivative(&u);
    let exact = SpaceTimeField::from_fn(g, |_, t, _| C64::new(2.0 * t, 3.0));
    assert!(ut.max_abs_diff(&exact) < 1e-12);
}

#[test]
fn fj_with_flat_metric_is_the_projected_source() {
    let u = random_space_time(grid(), 1, 0.5);
    for j in 0..=grid().j_max() {
        let t = compute_fj(&u, &MetricSpec::identity(1), &cubic(), j).unwrap();
        let n = t.norms();
        assert!(n.high_coefficient <= 1e-12 * n.source.max(1.0), "{n:?}");
        assert!(n.commutator <= 1e-12 * n.source.max(1.0), "{n:?}");
        assert!(t.f_j.max_abs_diff(&t.source) <= 1e-12);
    }
    let zero = SpaceTimeField::zeros(grid());
    let t = compute_fj(&zero, &MetricSpec::conformal(1), &cubic(), 2).unwrap();
    assert!(t.f_j.is_zero());
}

#[test]
fn paradifferential_identity_holds_on_arbitrary_fields() {
    let deriv = match preset("deriv-quadratic", 1).unwrap() {
        Preset::Nonlinearity(f) => f,
        _ => unreachable!(),
    };
    let g = GridSpec::new(1, 256, 16.0, 9, 1).unwrap();
    for seed in 0..6 {
        let u = random_space_time(g, seed, 0.7);
        for f in [cubic(), deriv.clone()] {
            let r = para_residual(&u, &MetricSpec::conformal(1), &f).unwrap();
            assert!(r <= 1e-10, "seed {seed}: {r:e}");
        }
    }
    let zero = SpaceTimeField::zeros(g);
    assert_eq!(para_residual(&zero, &MetricSpec::conformal(1), &cubic()).unwrap(), 0.0);
}

#[test]
fn zero_data_converges_in_one_step() {
    let p = QuasilinearProblem::new(MetricSpec::conformal(1), cubic(), SpatialField::zeros(grid()), 2.75, 1e-2).unwrap();
    let trace = iterate(&p, &IterationConfig::default()).unwrap();
    assert_eq!(trace.iterations(), 1);
    assert!(trace.converged && trace.solution().is_zero());
    assert_eq!(trace.uniform_bound(), 0.0);
}

#[test]
fn free_problem_is_reproduced_in_two_steps() {
    let u0 = scaled_to_gauge(packet(grid(), 1.0), 2.75, 1e-3);
    let p = QuasilinearProblem::new(MetricSpec::identity(1), NonlinearitySpec::zero(1), u0.clone(), 2.75, 1e-2).unwrap();
    let trace = iterate(&p, &IterationConfig::default()).unwrap();
    assert_eq!(trace.iterations(), 2);
    assert_eq!(trace.diffs[1], 0.0);
    let free = solve_linear(&LinearProblem::free(u0), &PropagatorConfig::default()).unwrap().u;
    assert!(trace.solution().max_abs_diff(&free) < 1e-14);
}

#[test]
fn small_cubic_data_contracts() {
    let u0 = scaled_to_gauge(packet(grid(), 1.0), 2.75, 1e-3);
    let p = QuasilinearProblem::new(MetricSpec::conformal(1), cubic(), u0, 2.75, 1e-2).unwrap();
    let trace = iterate(&p, &IterationConfig::default()).unwrap();
    assert!(trace.converged && trace.iterations() <= 8, "{}", trace.to_csv());
    assert!(trace.max_ratio_from(2) <= 0.5);
    assert!(trace.to_csv().starts_with("n,l1Xs,diff_sminus1,contraction_ratio\n1,"));
}

#[test]
fn problem_validation() {
    let u0 = packet(grid(), 1.0);
    let big = QuasilinearProblem::new(MetricSpec::conformal(1), cubic(), u0.clone(), 2.75, 1e-2);
    assert!(matches!(big, Err(Error::Smallness { .. })));
    let u0 = scaled_to_gauge(u0, 2.75, 1e-3);
    let rough = QuasilinearProblem::new(MetricSpec::conformal(1), cubic(), u0.clone(), 2.5, 1e-2);
    assert!(matches!(rough, Err(Error::Parameter(_))));
    let flat = QuasilinearProblem::new(MetricSpec::conformal(2), cubic(), u0.clone(), 2.75, 1e-2);
    assert!(matches!(flat, Err(Error::Dimension(_))));
    let linear = NonlinearitySpec::parse(&["u".to_string()]).unwrap();
    assert!(QuasilinearProblem::new(MetricSpec::conformal(1), linear, u0, 2.75, 1e-2).is_err());
}

#[test]
fn zero_iterate_freezes_a_constant_metric() {
    let u0 = scaled_to_gauge(packet(grid(), 1.0), 2.75, 1e-3);
    let p = QuasilinearProblem::new(MetricSpec::conformal(1), cubic(), u0, 2.75, 1e-2).unwrap();
    let lin = p.linearize(&SpaceTimeField::zeros(grid())).unwrap();
    assert_eq!(lin.g, Metric::identity(1));
    assert!(lin.h.is_none());
}

#[test]
fn lipschitz_probe_conventions() {
    let u0 = scaled_to_gauge(packet(grid(), 1.0), 2.75, 1e-3);
    let p = QuasilinearProblem::new(MetricSpec::conformal(1), cubic(), u0.clone(), 2.75, 1e-2).unwrap();
    let same = lipschitz_probe(&p, &p, &IterationConfig::default()).unwrap();
    assert!(same.identical && same.ratio == 0.0);
    let bump = SpatialField::from_fn(grid(), |_, x| C64::new(1e-4 * (-(x[0] - 6.0).powi(2)).exp(), 0.0));
    let q = p.with_data(u0.add(&bump)).unwrap();
    let r = lipschitz_probe(&p, &q, &IterationConfig::default()).unwrap();
    assert!(!r.identical && r.ratio.is_finite() && r.ratio > 0.0);
}

#[test]
fn envelopes_are_normalized() {
    let u0 = scaled_to_gauge(packet(grid(), 1.0), 2.75, 1e-3);
    let run = |u: SpatialField| {
        let p = QuasilinearProblem::new(MetricSpec::conformal(1), cubic(), u, 2.75, 1e-2).unwrap();
        let t = iterate(&p, &IterationConfig::default()).unwrap();
        envelope_persistence(&p, &t).unwrap()
    };
    let (full, half) = (run(u0.clone()), run(u0.scale(C64::new(0.5, 0.0))));
    for (x, y) in full.a.a.iter().zip(&half.a.a) {
        assert!((x - y).abs() <= 1e-12 * x);
    }
    for (x, y) in full.b.a.iter().zip(&half.b.a) {
        assert!((x - y).abs() <= 1e-4 * x);
    }
    assert!(full.c.is_finite() && full.c > 0.0);
}
