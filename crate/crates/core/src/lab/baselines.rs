/// Pinned `max_ratio` per estimate on the committed ensemble
/// (`EnsembleSpec::default()` with the committed `VerifyParams`).
pub const BASELINES: [(&str, f64); 9] = [
    ("algebra", 3.2988e-1),
    ("moser", 6.5761e-3),
    ("bilinear1", 1.1813e-1),
    ("bilinear2", 2.8669e-1),
    ("bilinear3", 4.1323e-2),
    ("commutator", 6.0109e-4),
    ("bernstein", 1.5296e-1),
    ("fj_bound", 6.0238e-2),
    ("duality", 7.2171e-1),
];

/// Allowed growth of `max_ratio` over its baseline.
pub const BASELINE_SLACK: f64 = 1.25;

pub fn baseline(name: &str) -> Option<f64> {
    BASELINES.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
}
