//! Command-line front end: argument parsing, dispatch and the exit-code contract.
//!
//! Exit codes: 0 success, 1 validation error, 2 numerical failure, 3 failed
//! `--assert` check. Every failure prints one `ERROR <code> <module> <detail>`
//! line on stderr. Outputs are written only after the computation succeeded,
//! each through a temporary file and a rename.

pub mod config;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};

use crate::error::Error;
use crate::field::io::{self, FieldFile};
use crate::field::{Field, GridSpec, SpaceTimeField, SpatialField};
use crate::lab::{self, EnsembleSpec, Estimate, EstimateReport, ScanSpec};
use crate::linear::{self, InnerSolver, LinearProblem, Metric, MorawetzSpec, PropagatorConfig};
use crate::quasi::{self, IterationConfig, QuasilinearProblem};
use crate::spaces::{self, Space};
use config::{Checks, DataSource, Loaded, NormTag, PacketSpec};

#[derive(Debug, Parser)]
#[command(name = "qls", version, about = "Dyadic norms, estimate lab and solvers for quasilinear Schrödinger equations")]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (for `verify`, a `.csv` path names the report itself).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides every seed in the config (ensemble and random data).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for the parallel library calls.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Exit with code 3 when the command's acceptance checks fail.
    #[arg(long, global = true)]
    pub assert: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Norms of a field, one CSV row per requested norm.
    Norms {
        /// DFF1 field; otherwise `u0` of the configuration.
        #[arg(long)]
        field: Option<PathBuf>,
    },
    /// Frequency envelope `(j, a_j)` of a field.
    Envelope {
        #[arg(long)]
        field: Option<PathBuf>,
    },
    /// One estimate over the random ensemble.
    Verify {
        #[arg(long)]
        estimate: String,
        #[arg(long)]
        count: Option<usize>,
    },
    /// Linear propagator with energy and Morawetz diagnostics.
    SolveLinear,
    /// Picard iteration for the quasilinear problem.
    Solve,
    /// Local smoothing scan over a band range.
    SmoothingScan,
    /// Littlewood-Paley profiles as CSV.
    DumpProfiles,
}

/// A failure mapped onto the exit-code contract.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: i32,
    pub module: &'static str,
    pub detail: String,
}

impl Failure {
    fn validation(module: &'static str, detail: impl Into<String>) -> Self {
        Failure { code: 1, module, detail: detail.into() }
    }

    fn assertion(module: &'static str, detail: impl Into<String>) -> Self {
        Failure { code: 3, module, detail: detail.into() }
    }

    /// The `ERROR` record, flattened to one line.
    pub fn record(&self) -> String {
        let detail = self.detail.split_whitespace().collect::<Vec<_>>().join(" ");
        format!("ERROR {} {} {}", self.code, self.module, detail)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: e.exit_code(), module: e.module(), detail: e.to_string() }
    }
}

type Outcome<T = ()> = std::result::Result<T, Failure>;

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let f = Failure::validation("cli", e.kind().to_string());
            eprint!("{e}");
            eprintln!("{}", f.record());
            return f.code;
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("{}", f.record());
            f.code
        }
    }
}

pub fn dispatch(cli: &Cli) -> Outcome {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::validation("cli", "--threads must be positive"));
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let loaded = match &cli.config {
        Some(p) => Loaded::read(p).map_err(|e| Failure { module: "cli", ..e.into() })?,
        None => Loaded::default(),
    };
    let out = Output { dir: cli.out.clone().unwrap_or_else(|| PathBuf::from(".")), command: name(&cli.command) };
    let checks = loaded.config.checks.clone().unwrap_or_default();
    match &cli.command {
        Command::Norms { field } => norms(cli, &loaded, field.as_deref(), &out),
        Command::Envelope { field } => envelope(cli, &loaded, field.as_deref(), &out),
        Command::Verify { estimate, count } => verify(cli, &loaded, estimate, *count),
        Command::SolveLinear => solve_linear(cli, &loaded, &checks, &out),
        Command::Solve => solve(cli, &loaded, &checks, &out),
        Command::SmoothingScan => smoothing_scan(cli, &loaded, &out),
        Command::DumpProfiles => dump_profiles(cli, &loaded, &out),
    }
}

fn name(c: &Command) -> &'static str {
    match c {
        Command::Norms { .. } => "norms",
        Command::Envelope { .. } => "envelope",
        Command::Verify { .. } => "verify",
        Command::SolveLinear => "solve-linear",
        Command::Solve => "solve",
        Command::SmoothingScan => "smoothing-scan",
        Command::DumpProfiles => "dump-profiles",
    }
}

struct Output {
    dir: PathBuf,
    command: &'static str,
}

impl Output {
    fn path(&self, file: &str) -> PathBuf {
        self.dir.join(file)
    }
}

/// CSV body behind a `#` provenance line, the only line that changes between reruns.
fn stamped(command: &str, body: &str) -> String {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    format!("# qls {} {command} unix={secs}\n{body}", env!("CARGO_PKG_VERSION"))
}

fn write_all(files: Vec<(PathBuf, Vec<u8>)>) -> Outcome {
    for (path, _) in &files {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)
                .map_err(|e| Failure::validation("cli", format!("cannot create {}: {e}", dir.display())))?;
        }
    }
    for (path, bytes) in files {
        io::write_atomic(&path, &bytes).map_err(Error::from)?;
    }
    Ok(())
}

fn json_bytes(v: &serde_json::Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s.into_bytes()
}

fn regularity(loaded: &Loaded, d: usize) -> f64 {
    loaded.config.s.unwrap_or_else(|| quasi::default_s(d))
}

/// `--field`, else `u0` of the configuration (a default packet when absent).
fn input_field(loaded: &Loaded, field: Option<&Path>) -> Outcome<Field> {
    if let Some(p) = field {
        return Ok(match io::read(p)? {
            FieldFile::Spatial(u) => Field::Spatial(u),
            FieldFile::SpaceTime(u) => Field::SpaceTime(u),
        });
    }
    let grid = loaded.grid()?;
    let src = loaded.config.u0.clone().unwrap_or(DataSource::Packet(PacketSpec::default()));
    Ok(Field::Spatial(loaded.data(&src, grid, regularity(loaded, grid.d))?))
}

/// Space-time version of a field; initial data are evolved by the free flow.
fn space_time(f: &Field) -> SpaceTimeField {
    match f {
        Field::SpaceTime(u) => u.clone(),
        Field::Spatial(u) => lab::free_evolution(u),
    }
}

fn default_norms(s: f64) -> Vec<NormTag> {
    vec![
        NormTag::L1jL2 { j: 0 },
        NormTag::X,
        NormTag::Yupper,
        NormTag::Ylower,
        NormTag::L1Hs { s },
        NormTag::L1Xs { s },
        NormTag::L1Ys { s },
    ]
}

fn norm_value(tag: &NormTag, f: &Field) -> crate::Result<f64> {
    use spaces::Dyadic;
    let st = || Field::SpaceTime(space_time(f));
    match tag {
        NormTag::L1jL2 { j } => match f {
            Field::Spatial(_) => spaces::lpj_norm(f, spaces::Exponent::One, *j, spaces::BaseNorm::L2),
            Field::SpaceTime(_) => spaces::lpj_norm(f, spaces::Exponent::One, *j, spaces::BaseNorm::L2tx),
        },
        NormTag::LpjU { p, j, base } => spaces::lpj_norm(f, (*p).into(), *j, *base),
        NormTag::X => Ok(spaces::x_norm(&space_time(f))),
        NormTag::Yupper => Ok(spaces::y_bounds(&space_time(f)).upper),
        NormTag::Ylower => Ok(spaces::y_bounds(&space_time(f)).lower),
        NormTag::Xj { j } => spaces::weighted_dyadic_norm(&crate::lp::band(&st(), *j)?, Dyadic::Xj),
        NormTag::Yj { j } => spaces::weighted_dyadic_norm(&crate::lp::band(&st(), *j)?, Dyadic::Yj),
        NormTag::L1Hs { s } => match f {
            Field::Spatial(u) => spaces::l1_hs(u, *s),
            Field::SpaceTime(u) => spaces::l1_hs(u.slice(0), *s),
        },
        NormTag::L1Xs { s } => spaces::l1_xs(&space_time(f), *s),
        NormTag::L1Ys { s } => spaces::l1_ys(&space_time(f), *s),
    }
}

fn norms(cli: &Cli, loaded: &Loaded, field: Option<&Path>, out: &Output) -> Outcome {
    let f = input_field(loaded, field)?;
    let s = regularity(loaded, f.grid().d);
    let tags = loaded.config.norms.clone().unwrap_or_else(|| default_norms(s));
    let mut body = String::from("norm,params,value\n");
    let mut bad = Vec::new();
    for tag in &tags {
        let v = norm_value(tag, &f)?;
        if !v.is_finite() || v < 0.0 {
            bad.push(format!("{}({})={v}", tag.label(), tag.params()));
        }
        body.push_str(&format!("{},{},{v:e}\n", tag.label(), tag.params()));
    }
    write_all(vec![(out.path("norms.csv"), stamped(out.command, &body).into_bytes())])?;
    if cli.assert && !bad.is_empty() {
        return Err(Failure::assertion("dyadic_spaces", format!("invalid norm values: {}", bad.join(" "))));
    }
    Ok(())
}

fn envelope(cli: &Cli, loaded: &Loaded, field: Option<&Path>, out: &Output) -> Outcome {
    let f = input_field(loaded, field)?;
    let d = f.grid().d;
    let s = regularity(loaded, d);
    let space = if matches!(f, Field::Spatial(_)) { Space::H } else { Space::X };
    let env = spaces::frequency_envelope(&f, s, space, spaces::default_delta(s, d))?;
    let mut body = String::from("j,a_j\n");
    for (j, a) in env.a.iter().enumerate() {
        body.push_str(&format!("{j},{a:e}\n"));
    }
    write_all(vec![(out.path("envelope.csv"), stamped(out.command, &body).into_bytes())])?;
    if cli.assert {
        // sum a_j^2 grows like 1 / (1 - 2^{-2 delta}) for spread-out spectra, so only structure is checked
        let failed: Vec<&str> = [
            (env.a0_ok(), "a_0 outside [1/C, C]"),
            (env.slowly_varying(), "not slowly varying"),
            (env.dominates(), "does not dominate the band norms"),
        ]
        .iter()
        .filter(|(ok, _)| !ok)
        .map(|(_, m)| *m)
        .collect();
        if !failed.is_empty() {
            return Err(Failure::assertion("dyadic_spaces", format!("envelope {}", failed.join("; "))));
        }
    }
    Ok(())
}

/// Report paths: `--out x.csv` names the report, otherwise a directory.
fn report_paths(out: Option<&Path>) -> (PathBuf, PathBuf) {
    match out {
        Some(p) if p.extension().is_some_and(|e| e == "csv") => (p.to_path_buf(), p.with_extension("json")),
        Some(dir) => (dir.join("report.csv"), dir.join("summary.json")),
        None => (PathBuf::from("report.csv"), PathBuf::from("summary.json")),
    }
}

fn write_report(command: &str, r: &EstimateReport, out: Option<&Path>) -> Outcome {
    let (csv, json) = report_paths(out);
    write_all(vec![(csv, stamped(command, &r.to_csv()).into_bytes()), (json, json_bytes(&r.summary_json()))])
}

fn verify(cli: &Cli, loaded: &Loaded, estimate: &str, count: Option<usize>) -> Outcome {
    let e: Estimate = estimate
        .parse()
        .map_err(|_| Failure::validation("estimate_lab", format!("unknown-estimate {estimate:?}")))?;
    let mut spec = loaded.config.ensemble.clone().unwrap_or_default();
    if let Some(seed) = cli.seed.or(loaded.config.seed) {
        spec.seed = seed;
    }
    if let Some(k) = count {
        spec.count = k;
    }
    let params = loaded.config.verify.clone().unwrap_or_default();
    let mut report = lab::verify(e, &spec, &params)?;
    // the pinned baseline only describes the committed ensemble and parameters
    if spec == EnsembleSpec::default() && params == lab::VerifyParams::default() {
        report = report.judge(params.slope_tol, lab::baseline(e.name()));
    }
    write_report("verify", &report, cli.out.as_deref())?;
    if cli.assert && !report.pass {
        return Err(Failure::assertion("estimate_lab", format!("{} failed: {}", e.name(), report.summary_json())));
    }
    Ok(())
}

/// Metric `g(background)` frozen in time.
fn frozen_metric(loaded: &Loaded, grid: GridSpec, s: f64) -> Outcome<Metric> {
    let spec = loaded.metric(grid.d)?;
    let w = match &loaded.config.background {
        Some(src) => loaded.data(src, grid, s)?,
        None => SpatialField::zeros(grid),
    };
    let g = spec.evaluate(&w).map_err(Error::from)?;
    Ok(Metric::from_spatial(g))
}

fn solve_linear(cli: &Cli, loaded: &Loaded, checks: &Checks, out: &Output) -> Outcome {
    let grid = loaded.grid()?;
    let s = regularity(loaded, grid.d);
    let src = loaded.config.u0.clone().unwrap_or(DataSource::Packet(PacketSpec::default()));
    let u0 = loaded.data(&src, grid, s)?;
    let p = LinearProblem::free(u0).with_metric(frozen_metric(loaded, grid, s)?);
    let cfg = loaded.config.propagator.unwrap_or_default();
    let mut report = linear::solve_linear(&p, &cfg)?;
    let m = MorawetzSpec::new(0, 1, grid.side / 2.0);
    let mor = linear::morawetz_residual(&p, &report.u, &m, 0)?;
    report.attach_morawetz(&mor.residual);
    write_all(vec![
        (out.path("solution.dff"), io::encode_space_time(&report.u).map_err(Error::from)?),
        (out.path("diagnostics.csv"), stamped(out.command, &report.to_csv()).into_bytes()),
    ])?;
    if cli.assert && report.max_energy_residual() > checks.max_energy_residual {
        return Err(Failure::assertion(
            "linear_prop",
            format!("energy residual {:e} > {:e}", report.max_energy_residual(), checks.max_energy_residual),
        ));
    }
    Ok(())
}

fn solve(cli: &Cli, loaded: &Loaded, checks: &Checks, out: &Output) -> Outcome {
    let grid = loaded.grid()?;
    let s = regularity(loaded, grid.d);
    let src = loaded.config.u0.clone().ok_or_else(|| Failure::validation("quasilinear", "missing \"u0\""))?;
    let u0 = loaded.data(&src, grid, s)?;
    let p = QuasilinearProblem::new(
        loaded.metric(grid.d)?,
        loaded.nonlinearity(grid.components)?,
        u0,
        s,
        loaded.config.eps0.unwrap_or(quasi::DEFAULT_EPS0),
    )?;
    let defaults = IterationConfig::default();
    let cfg = IterationConfig {
        tol: loaded.config.tol.unwrap_or(defaults.tol),
        max_iters: loaded.config.max_iters.unwrap_or(defaults.max_iters),
        propagator: loaded.config.propagator.unwrap_or(defaults.propagator),
    };
    let trace = quasi::iterate(&p, &cfg)?;
    let env = quasi::envelope_persistence(&p, &trace)?;
    let mut env_csv = String::from("j,a_j,b_j\n");
    for (j, (a, b)) in env.a.a.iter().zip(&env.b.a).enumerate() {
        env_csv.push_str(&format!("{j},{a:e},{b:e}\n"));
    }
    write_all(vec![
        (out.path("solution.dff"), io::encode_space_time(trace.solution()).map_err(Error::from)?),
        (out.path("trace.csv"), stamped(out.command, &trace.to_csv()).into_bytes()),
        (out.path("envelope.csv"), stamped(out.command, &env_csv).into_bytes()),
    ])?;
    if cli.assert {
        let ratio = trace.max_ratio_from(checks.contraction_from);
        let mut failed = Vec::new();
        if !trace.converged {
            failed.push(format!("no convergence in {} iterations", trace.iterations()));
        }
        if trace.iterations() > checks.max_iterations {
            failed.push(format!("{} iterations > {}", trace.iterations(), checks.max_iterations));
        }
        if ratio > checks.max_contraction {
            failed.push(format!("contraction ratio {ratio:.3} > {}", checks.max_contraction));
        }
        if !(env.c <= checks.max_envelope_ratio) {
            failed.push(format!("envelope ratio {:.3} > {}", env.c, checks.max_envelope_ratio));
        }
        if !failed.is_empty() {
            return Err(Failure::assertion("quasilinear", failed.join("; ")));
        }
    }
    Ok(())
}

fn smoothing_scan(cli: &Cli, loaded: &Loaded, out: &Output) -> Outcome {
    let spec = loaded.config.scan.clone().unwrap_or_else(ScanSpec::default);
    let cfg = loaded.config.propagator.unwrap_or(PropagatorConfig { inner: InnerSolver::Banded, ..Default::default() });
    let report = lab::smoothing_scan(&spec, &cfg)?;
    let csv = out.path("scan.csv");
    write_report(out.command, &report, Some(&csv))?;
    if cli.assert && !report.pass {
        return Err(Failure::assertion("estimate_lab", format!("smoothing scan failed: {}", report.summary_json())));
    }
    Ok(())
}

fn dump_profiles(cli: &Cli, loaded: &Loaded, out: &Output) -> Outcome {
    let p = loaded.config.profiles.clone().unwrap_or_default();
    if p.samples < 2 {
        return Err(Failure::validation("lp_multipliers", "profiles need at least two samples"));
    }
    let body = crate::lp::dump_profiles(p.bands, p.samples);
    write_all(vec![(out.path("profiles.csv"), stamped(out.command, &body).into_bytes())])?;
    if cli.assert {
        // partition of unity wherever every contributing band is tabulated
        let top = (p.bands as f64).exp2();
        let worst = (0..p.samples)
            .map(|i| top * i as f64 / (p.samples - 1) as f64)
            .map(|r| ((0..=p.bands).map(|j| crate::lp::phi(j, r)).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max);
        if worst > 1e-14 {
            return Err(Failure::assertion("lp_multipliers", format!("partition of unity defect {worst:e}")));
        }
    }
    Ok(())
}
