//! JSON run configuration. Every block is optional; each command reads the
//! blocks it needs and rejects unknown keys anywhere in the document.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{preset, MetricSpec, NonlinearitySpec, Preset};
use crate::field::io::{self, FieldFile};
use crate::field::{GridSpec, SpatialField, C64};
use crate::lab::{self, EnsembleSpec, ScanSpec, VerifyParams, Which};
use crate::linear::PropagatorConfig;
use crate::spaces::{l1_hs, BaseNorm, Exponent};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: Option<GridSpec>,
    pub metric: Option<MetricSource>,
    #[serde(rename = "F")]
    pub f: Option<NonlinearitySource>,
    pub u0: Option<DataSource>,
    /// Field the metric of `solve-linear` is frozen at; zero when absent.
    pub background: Option<DataSource>,
    pub s: Option<f64>,
    pub eps0: Option<f64>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub propagator: Option<PropagatorConfig>,
    pub seed: Option<u64>,
    pub ensemble: Option<EnsembleSpec>,
    pub verify: Option<VerifyParams>,
    pub scan: Option<ScanSpec>,
    pub norms: Option<Vec<NormTag>>,
    pub profiles: Option<ProfileSpec>,
    pub checks: Option<Checks>,
}

/// A preset name or a `d x d` array of expressions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MetricSource {
    Preset(String),
    Rows(Vec<Vec<String>>),
}

/// A preset name or one expression per component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NonlinearitySource {
    Preset(String),
    Components(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    /// DFF1 file, relative to the configuration file.
    File(PathBuf),
    Packet(PacketSpec),
    /// First sample of the lab ensemble with the given seed, carrying every band.
    Random(RandomSpec),
}

/// `exp(-(x - c)^2 / 2 w^2 + i k x_1)`, rescaled so that `||u0||_{l^1 H^s} = gauge`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PacketSpec {
    pub gauge: f64,
    /// Centre as a fraction of the box side.
    pub center: f64,
    pub width: f64,
    pub frequency: f64,
}

impl Default for PacketSpec {
    fn default() -> Self {
        PacketSpec { gauge: 1e-3, center: 0.5, width: 1.0, frequency: 1.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomSpec {
    pub seed: u64,
    pub gauge: f64,
    pub spectrum: f64,
}

impl Default for RandomSpec {
    fn default() -> Self {
        RandomSpec { seed: 7, gauge: 1e-3, spectrum: 2.75 }
    }
}

/// Sequence exponent of `l^p_j`, written `"1"`, `"2"` or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum P {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "inf")]
    Inf,
}

impl From<P> for Exponent {
    fn from(p: P) -> Self {
        match p {
            P::One => Exponent::One,
            P::Two => Exponent::Two,
            P::Inf => Exponent::Inf,
        }
    }
}

/// One requested norm with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", deny_unknown_fields)]
pub enum NormTag {
    #[serde(rename = "l1jL2")]
    L1jL2 { j: usize },
    #[serde(rename = "lpjU")]
    LpjU { p: P, j: usize, base: BaseNorm },
    X,
    Yupper,
    Ylower,
    Xj { j: usize },
    Yj { j: usize },
    #[serde(rename = "l1Hs")]
    L1Hs { s: f64 },
    #[serde(rename = "l1Xs")]
    L1Xs { s: f64 },
    #[serde(rename = "l1Ys")]
    L1Ys { s: f64 },
}

impl NormTag {
    pub fn label(&self) -> &'static str {
        match self {
            NormTag::L1jL2 { .. } => "l1jL2",
            NormTag::LpjU { .. } => "lpjU",
            NormTag::X => "X",
            NormTag::Yupper => "Yupper",
            NormTag::Ylower => "Ylower",
            NormTag::Xj { .. } => "Xj",
            NormTag::Yj { .. } => "Yj",
            NormTag::L1Hs { .. } => "l1Hs",
            NormTag::L1Xs { .. } => "l1Xs",
            NormTag::L1Ys { .. } => "l1Ys",
        }
    }

    /// Parameters as `key=value` pairs joined by `;`.
    pub fn params(&self) -> String {
        match self {
            NormTag::L1jL2 { j } | NormTag::Xj { j } | NormTag::Yj { j } => format!("j={j}"),
            NormTag::LpjU { p, j, base } => {
                let p = match p {
                    P::One => "1",
                    P::Two => "2",
                    P::Inf => "inf",
                };
                format!("p={p};j={j};base={base:?}")
            }
            NormTag::L1Hs { s } | NormTag::L1Xs { s } | NormTag::L1Ys { s } => format!("s={s}"),
            NormTag::X | NormTag::Yupper | NormTag::Ylower => String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileSpec {
    pub bands: usize,
    pub samples: usize,
}

impl Default for ProfileSpec {
    fn default() -> Self {
        ProfileSpec { bands: 6, samples: 513 }
    }
}

/// Thresholds enforced under `--assert`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Checks {
    pub max_contraction: f64,
    pub contraction_from: usize,
    pub max_iterations: usize,
    pub max_envelope_ratio: f64,
    /// Largest energy-identity residual of an unforced linear solve.
    pub max_energy_residual: f64,
}

impl Default for Checks {
    fn default() -> Self {
        Checks {
            max_contraction: 0.5,
            contraction_from: 2,
            max_iterations: 8,
            max_envelope_ratio: 10.0,
            max_energy_residual: 1e-8,
        }
    }
}

/// Parses a configuration document; syntax errors carry line and column.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid configuration: {e}")))
}

/// A parsed configuration and the directory its relative paths refer to.
#[derive(Debug, Clone, Default)]
pub struct Loaded {
    pub config: RunConfig,
    pub base: PathBuf,
}

impl Loaded {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let config = parse_config(&text)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Loaded { config, base })
    }

    pub fn grid(&self) -> Result<GridSpec> {
        let g = self.config.grid.ok_or_else(|| Error::Config("missing \"grid\" block".into()))?;
        g.validate()?;
        Ok(g)
    }

    pub fn metric(&self, d: usize) -> Result<MetricSpec> {
        match &self.config.metric {
            None => Ok(MetricSpec::identity(d)),
            Some(MetricSource::Rows(rows)) => Ok(MetricSpec::parse(rows)?),
            Some(MetricSource::Preset(name)) => match preset(name, d)? {
                Preset::Metric(g) => Ok(g),
                Preset::Nonlinearity(_) => Err(Error::Config(format!("preset {name:?} is not a metric"))),
            },
        }
    }

    pub fn nonlinearity(&self, m: usize) -> Result<NonlinearitySpec> {
        match &self.config.f {
            None => Ok(NonlinearitySpec::zero(m)),
            Some(NonlinearitySource::Components(c)) => Ok(NonlinearitySpec::parse(c)?),
            Some(NonlinearitySource::Preset(name)) => match preset(name, 1)? {
                Preset::Nonlinearity(f) => Ok(f),
                Preset::Metric(_) => Err(Error::Config(format!("preset {name:?} is not a nonlinearity"))),
            },
        }
    }

    /// Builds a data field on `grid`, normalized in `l^1 H^s` where a gauge applies.
    pub fn data(&self, src: &DataSource, grid: GridSpec, s: f64) -> Result<SpatialField> {
        let scalar = GridSpec { time_samples: grid.time_samples, ..grid };
        let (u, gauge) = match src {
            DataSource::File(p) => {
                let path = if p.is_absolute() { p.clone() } else { self.base.join(p) };
                return match io::read(&path)? {
                    FieldFile::Spatial(u) if u.grid().same_space(&grid) && u.grid().components == grid.components => {
                        Ok(SpatialField::new(scalar, u.into_values())?)
                    }
                    FieldFile::Spatial(u) => {
                        Err(Error::Dimension(format!("{} holds a field on {:?}, expected {grid:?}", path.display(), u.grid())))
                    }
                    FieldFile::SpaceTime(_) => {
                        Err(Error::Config(format!("{} holds a space-time field, expected initial data", path.display())))
                    }
                };
            }
            DataSource::Packet(p) => {
                let (c, w, k) = (p.center * grid.side, p.width, p.frequency);
                let u = SpatialField::from_fn(scalar, |_, x| {
                    let r2 = (x[0] - c).powi(2) + if grid.d == 2 { (x[1] - c).powi(2) } else { 0.0 };
                    C64::from_polar((-r2 / (2.0 * w * w)).exp(), k * x[0])
                });
                (u, p.gauge)
            }
            DataSource::Random(r) => {
                let spec = EnsembleSpec {
                    seed: self.config.seed.unwrap_or(r.seed),
                    count: 1,
                    spectrum: r.spectrum,
                    grid: scalar,
                    bands: Some([0, grid.j_max()]),
                    ..EnsembleSpec::default()
                };
                let u = match lab::random_field(&spec, 0, 0, Which::Spatial)? {
                    crate::field::Field::Spatial(u) => u,
                    crate::field::Field::SpaceTime(u) => u.slice(0).clone(),
                };
                (u, r.gauge)
            }
        };
        let n = l1_hs(&u, s)?;
        if n == 0.0 {
            return Err(Error::Config("generated data vanish".into()));
        }
        Ok(u.scale(C64::new(gauge / n, 0.0)))
    }
}
