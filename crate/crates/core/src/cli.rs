//! Command-line front end.
//!
//! Options come from flags, then an optional TOML file given by `--config`,
//! then built-in defaults, in that order of precedence. The default seed may
//! also be set with the `SYMCONE_SEED` environment variable. Lorentz algebras
//! are selected with `--dim`, the ambient dimension `n + 1`; matrix kinds with
//! `--rank`.
//!
//! Exit codes: 0 when every check has its expected outcome, 1 when any does
//! not, 2 when nothing failed but some MCMC run was out of its acceptance band,
//! 64 for usage errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::distributions::{
    format_f64, sample_gig, sample_wishart, singular_shape_rank, GigMethod, GigParams, McmcConfig, SampleBatch, WishartMethod,
    WishartParams,
};
use crate::error::{ConeError, Result};
use crate::jordan_algebra::{Algebra, AlgebraKind, Element};
use crate::verification::{
    check_algebra_axioms, check_cauchy_additive, check_determinant_identities, check_fe_cone,
    check_fe_univariate_abcd, check_fe_univariate_g_alpha, check_hua, check_involution, check_jacobian,
    check_perturbed_fe_rejects, check_pexider_log, density_factorization_check, density_factorization_swapped,
    my_negative_control, my_property_test, over_constant_sets, CheckReport, Fe1dConstants, FeSolutionConstants,
    GAlphaConstants, IndependenceConfig, IndependenceReport, REPORT_SCHEMA_VERSION,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

pub const SEED_ENV: &str = "SYMCONE_SEED";
const DEFAULT_SEED: u64 = 42;

#[derive(Parser, Debug)]
#[command(name = "symcone", version, about = "Symmetric cone identities, samplers and Matsumoto-Yor checks")]
struct Cli {
    /// Worker threads for the checks (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one family of residual checks.
    Check {
        #[command(subcommand)]
        which: CheckCommand,
    },
    /// Draw a batch from a cone distribution.
    Sample {
        #[command(subcommand)]
        which: SampleCommand,
    },
    /// Run a statistical test.
    Test {
        #[command(subcommand)]
        which: TestCommand,
    },
    /// Run every residual check on one algebra.
    Suite(RunArgs),
}

#[derive(Subcommand, Debug)]
enum CheckCommand {
    /// Jordan algebra axioms.
    Algebra(RunArgs),
    /// det(P(x)y) = (det x)² det y and Det P(x) = (det x)^(2 dim/r).
    Determinant(RunArgs),
    /// Hua's identity.
    Hua(RunArgs),
    /// Ψ∘Ψ = id.
    Involution(RunArgs),
    /// Closed-form Jacobian of Ψ against finite differences.
    Jacobian(RunArgs),
    /// Cone functional-equation family, with additive and Pexider pieces and a perturbed control.
    FeCone(RunArgs),
    /// Univariate functional-equation families.
    Fe1d(RunArgs),
    /// Density factorisation under Ψ, with a swapped-parameter control.
    Factorization(RunArgs),
}

#[derive(Subcommand, Debug)]
enum SampleCommand {
    /// Wishart γ_{p,a}.
    Wishart(RunArgs),
    /// Generalized inverse Gaussian μ_{p,a,b}.
    Gig(RunArgs),
}

#[derive(Subcommand, Debug)]
enum TestCommand {
    /// Forward Matsumoto-Yor independence screen.
    MyProperty(RunArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodName {
    Auto,
    Bartlett,
    Spectral,
    Rejection,
    Metropolis,
}

/// Options shared by every subcommand; every field is optional so that the
/// config file can fill gaps.
#[derive(Args, Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunArgs {
    /// sym-real, herm-complex or lorentz.
    #[arg(long)]
    pub kind: Option<String>,
    /// Rank of a matrix algebra.
    #[arg(long)]
    pub rank: Option<usize>,
    /// Ambient dimension n + 1 of a Lorentz algebra.
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides every per-check default tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// TOML file with any of these options (kebab-case keys).
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Shape parameter.
    #[arg(long, allow_negative_numbers = true)]
    pub p: Option<f64>,
    /// "identity", "diag:v1,…,vr" or "coords:c1,…,c_dim".
    #[arg(long)]
    pub a: Option<String>,
    #[arg(long)]
    pub b: Option<String>,
    /// Sample size.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_enum)]
    pub method: Option<MethodName>,
    #[arg(long)]
    pub permutations: Option<usize>,
    /// Random constant sets for functional-equation checks.
    #[arg(long)]
    pub sets: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub thinning: Option<usize>,
    /// Also run the dependent-data control in `test my-property`.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub negative_control: Option<bool>,
}

impl RunArgs {
    fn overlay(self, file: RunArgs) -> RunArgs {
        RunArgs {
            kind: self.kind.or(file.kind),
            rank: self.rank.or(file.rank),
            dim: self.dim.or(file.dim),
            trials: self.trials.or(file.trials),
            seed: self.seed.or(file.seed),
            tol: self.tol.or(file.tol),
            out: self.out.or(file.out),
            format: self.format.or(file.format),
            config: self.config,
            p: self.p.or(file.p),
            a: self.a.or(file.a),
            b: self.b.or(file.b),
            n: self.n.or(file.n),
            method: self.method.or(file.method),
            permutations: self.permutations.or(file.permutations),
            sets: self.sets.or(file.sets),
            burn_in: self.burn_in.or(file.burn_in),
            thinning: self.thinning.or(file.thinning),
            negative_control: self.negative_control.or(file.negative_control),
        }
    }
}

/// Fully resolved options for one run.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub algebra: Algebra,
    pub trials: usize,
    pub seed: u64,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub p: Option<f64>,
    pub a: Element,
    pub b: Element,
    pub n: usize,
    pub method: MethodName,
    pub permutations: usize,
    pub sets: usize,
    pub mcmc: McmcConfig,
    pub negative_control: bool,
}

fn usage(msg: impl Into<String>) -> ConeError {
    ConeError::Parse(msg.into())
}

impl RunConfig {
    fn resolve(args: RunArgs) -> Result<RunConfig> {
        let file = match &args.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
                toml::from_str::<RunArgs>(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))?
            }
            None => RunArgs::default(),
        };
        let args = args.overlay(file);
        let kind = AlgebraKind::parse(args.kind.as_deref().unwrap_or("sym-real"))?;
        let algebra = match kind {
            AlgebraKind::Lorentz => {
                if let Some(r) = args.rank {
                    if r != 2 {
                        return Err(usage(format!("the Lorentz algebra has rank 2, got --rank {r}")));
                    }
                }
                Algebra::from_kind(kind, args.dim.unwrap_or(3))?
            }
            _ => {
                let rank = args.rank.unwrap_or(2);
                let alg = Algebra::from_kind(kind, rank)?;
                if let Some(d) = args.dim {
                    if d != alg.dim() {
                        return Err(usage(format!("--dim {d} does not match {alg} (dim {})", alg.dim())));
                    }
                }
                alg
            }
        };
        let seed = match args.seed {
            Some(s) => s,
            None => match std::env::var(SEED_ENV) {
                Ok(v) => v.trim().parse().map_err(|_| usage(format!("{SEED_ENV} must be an integer, got '{v}'")))?,
                Err(_) => DEFAULT_SEED,
            },
        };
        if let Some(t) = args.tol {
            if !(t >= 0.0) {
                return Err(usage(format!("--tol must be non-negative, got {t}")));
            }
        }
        let a = parse_element(args.a.as_deref().unwrap_or("identity"), algebra)?;
        let b = parse_element(args.b.as_deref().unwrap_or("identity"), algebra)?;
        let defaults = McmcConfig::default();
        Ok(RunConfig {
            algebra,
            trials: args.trials.unwrap_or(1000),
            seed,
            tol: args.tol,
            out: args.out,
            format: args.format.unwrap_or(Format::Json),
            p: args.p,
            a,
            b,
            n: args.n.unwrap_or(10_000),
            method: args.method.unwrap_or(MethodName::Auto),
            permutations: args.permutations.unwrap_or(500),
            sets: args.sets.unwrap_or(20).max(1),
            mcmc: McmcConfig {
                burn_in: args.burn_in.unwrap_or(defaults.burn_in),
                thinning: args.thinning.unwrap_or(defaults.thinning),
                ..defaults
            },
            negative_control: args.negative_control.unwrap_or(false),
        })
    }

    fn tol_or(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    /// Shape for the distribution-based commands: `--p`, else `max(2, dim/r)`.
    fn shape(&self) -> f64 {
        self.p.unwrap_or_else(|| self.algebra.dim_over_rank().max(2.0))
    }
}

/// Parse `identity`, `diag:v1,…,vr` (matrix kinds) or `coords:c1,…,c_dim`.
pub fn parse_element(spec: &str, alg: Algebra) -> Result<Element> {
    let spec = spec.trim();
    let numbers = |body: &str| -> Result<Vec<f64>> {
        body.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| usage(format!("'{t}' is not a number in '{spec}'"))))
            .collect()
    };
    if spec == "identity" {
        Ok(Element::identity(alg))
    } else if let Some(body) = spec.strip_prefix("diag:") {
        if !alg.is_matrix_kind() {
            return Err(usage("diag: needs a matrix algebra; use coords: for Lorentz"));
        }
        let values = numbers(body)?;
        if values.len() != alg.rank() {
            return Err(ConeError::CoordinateLength { expected: alg.rank(), got: values.len() });
        }
        Element::diag(alg, &values)
    } else if let Some(body) = spec.strip_prefix("coords:") {
        Element::new(alg, numbers(body)?)
    } else {
        Err(usage(format!("cannot parse element '{spec}'; expected identity, diag:… or coords:…")))
    }
}

/// Default tolerances per check.
pub mod tolerance {
    pub const AXIOMS: f64 = 1e-10;
    pub const DETERMINANT: f64 = 1e-8;
    pub const HUA: f64 = 1e-8;
    pub const INVOLUTION: f64 = 1e-9;
    pub const JACOBIAN: f64 = 1e-4;
    pub const FUNCTIONAL: f64 = 1e-8;
    pub const FACTORIZATION: f64 = 1e-10;
}

/// The JSON document written for checks and tests.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: String,
    pub seed: u64,
    pub pass: bool,
    pub inconclusive: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub reports: Vec<CheckReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub independence: Vec<IndependenceReport>,
}

impl RunReport {
    fn new(command: &str, seed: u64, reports: Vec<CheckReport>, independence: Vec<IndependenceReport>) -> Self {
        let pass = reports.iter().all(|r| r.ok()) && independence.iter().all(|r| r.ok());
        let inconclusive =
            reports.iter().any(|r| r.inconclusive) || independence.iter().any(|r| r.inconclusive);
        RunReport { schema_version: REPORT_SCHEMA_VERSION, command: command.to_string(), seed, pass, inconclusive, reports, independence }
    }

    pub fn exit_code(&self) -> i32 {
        if !self.pass {
            EXIT_FAIL
        } else if self.inconclusive {
            EXIT_INCONCLUSIVE
        } else {
            EXIT_PASS
        }
    }

    fn summary_lines(&self) -> Vec<String> {
        self.reports
            .iter()
            .map(|r| r.summary_line())
            .chain(self.independence.iter().flat_map(|r| r.summary_lines()))
            .collect()
    }

    fn to_csv(&self) -> String {
        let mut out = String::new();
        if !self.reports.is_empty() {
            out.push_str("check,algebra,trials,max_residual,mean_residual,tolerance,pass,negative_control,seed,errors\n");
            for r in &self.reports {
                let alg = r.algebra.map(|a| a.to_string()).unwrap_or_else(|| "scalar".into());
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{}\n",
                    r.check,
                    alg,
                    r.trials,
                    format_f64(r.max_residual),
                    format_f64(r.mean_residual),
                    format_f64(r.tolerance),
                    r.pass,
                    r.negative_control,
                    r.seed,
                    r.errors
                ));
            }
        }
        if !self.independence.is_empty() {
            out.push_str("check,algebra,test,target,statistic,p_value\n");
            for r in &self.independence {
                for t in &r.independence {
                    out.push_str(&format!(
                        "{},{},independence,\"{}\",{},{}\n",
                        r.check,
                        r.algebra,
                        t.pair,
                        format_f64(t.dcor),
                        format_f64(t.p_value)
                    ));
                }
                for m in &r.marginals {
                    out.push_str(&format!(
                        "{},{},marginal-ks,\"{}\",{},{}\n",
                        r.check,
                        r.algebra,
                        m.functional,
                        format_f64(m.statistic),
                        format_f64(m.p_value)
                    ));
                }
            }
        }
        out
    }
}

fn residual_checks(cfg: &RunConfig, which: &str) -> Result<Vec<CheckReport>> {
    let alg = cfg.algebra;
    let (n, seed) = (cfg.trials, cfg.seed);
    let reports = match which {
        "algebra" => vec![check_algebra_axioms(alg, n, seed, cfg.tol_or(tolerance::AXIOMS))],
        "determinant" => vec![check_determinant_identities(alg, n, seed, cfg.tol_or(tolerance::DETERMINANT))],
        "hua" => vec![check_hua(alg, n, seed, cfg.tol_or(tolerance::HUA))],
        "involution" => vec![check_involution(alg, n, seed, cfg.tol_or(tolerance::INVOLUTION))],
        "jacobian" => vec![check_jacobian(alg, n, seed, cfg.tol_or(tolerance::JACOBIAN))],
        "fe-cone" => {
            let tol = cfg.tol_or(tolerance::FUNCTIONAL);
            vec![
                over_constant_sets("cauchy-additive", cfg.sets, seed, |rng, s| {
                    let f = FeSolutionConstants::random(alg, rng).f;
                    check_cauchy_additive(alg, &f, n, s, tol)
                }),
                over_constant_sets("pexider-log", cfg.sets, seed, |rng, s| {
                    let k = FeSolutionConstants::random(alg, rng);
                    check_pexider_log(alg, k.q, k.gamma[0], k.gamma[1], n, s, tol)
                }),
                over_constant_sets("fe-cone", cfg.sets, seed, |rng, s| {
                    check_fe_cone(alg, &FeSolutionConstants::random(alg, rng), n, s, tol)
                }),
                over_constant_sets("fe-cone-perturbed", cfg.sets, seed, |rng, s| {
                    check_perturbed_fe_rejects(alg, &FeSolutionConstants::random(alg, rng), 0.1, n, s, tol)
                }),
            ]
        }
        "fe-1d" => {
            let tol = cfg.tol_or(tolerance::FUNCTIONAL);
            vec![
                over_constant_sets("fe-1d-g-alpha", cfg.sets, seed, |rng, s| {
                    check_fe_univariate_g_alpha(GAlphaConstants::random(rng), n, s, tol)
                }),
                over_constant_sets("fe-1d-abcd", cfg.sets, seed, |rng, s| {
                    check_fe_univariate_abcd(&Fe1dConstants::random(rng), n, s, tol)
                }),
            ]
        }
        "factorization" => {
            let tol = cfg.tol_or(tolerance::FACTORIZATION);
            let p = cfg.shape();
            let mut reports = vec![density_factorization_check(alg, p, &cfg.a, &cfg.b, n, seed, tol)?];
            // the control needs a ≠ b
            let b = if cfg.a == cfg.b { cfg.b.scale(2.0) } else { cfg.b.clone() };
            reports.push(density_factorization_swapped(alg, p, &cfg.a, &b, n, seed, tol)?);
            reports
        }
        other => unreachable!("unknown check {other}"),
    };
    Ok(reports)
}

const SUITE: [&str; 8] = ["algebra", "determinant", "hua", "involution", "jacobian", "fe-cone", "fe-1d", "factorization"];

fn wishart_method(cfg: &RunConfig) -> Result<WishartMethod> {
    match cfg.method {
        MethodName::Auto => Ok(WishartMethod::Auto),
        MethodName::Bartlett => Ok(WishartMethod::Bartlett),
        MethodName::Spectral => Ok(WishartMethod::Spectral),
        MethodName::Metropolis => Ok(WishartMethod::Metropolis(cfg.mcmc.clone())),
        MethodName::Rejection => Err(usage("rejection sampling applies to gig only")),
    }
}

fn gig_method(cfg: &RunConfig) -> Result<GigMethod> {
    match cfg.method {
        MethodName::Auto | MethodName::Rejection => Ok(GigMethod::Rejection),
        MethodName::Metropolis => Ok(GigMethod::Metropolis(cfg.mcmc.clone())),
        m => Err(usage(format!("{m:?} sampling applies to wishart only"))),
    }
}

enum Outcome {
    Report(RunReport),
    Batch(SampleBatch),
}

/// Validate all options first; anything failing here is a usage error.
enum Plan {
    Checks(String, Vec<&'static str>),
    Wishart(WishartParams, WishartMethod),
    Gig(GigParams, GigMethod),
    My(IndependenceConfig),
}

fn plan(command: &Command) -> Result<(Plan, RunConfig)> {
    let check_name = |c: &CheckCommand| -> (&'static str, RunArgs) {
        match c {
            CheckCommand::Algebra(a) => ("algebra", a.clone()),
            CheckCommand::Determinant(a) => ("determinant", a.clone()),
            CheckCommand::Hua(a) => ("hua", a.clone()),
            CheckCommand::Involution(a) => ("involution", a.clone()),
            CheckCommand::Jacobian(a) => ("jacobian", a.clone()),
            CheckCommand::FeCone(a) => ("fe-cone", a.clone()),
            CheckCommand::Fe1d(a) => ("fe-1d", a.clone()),
            CheckCommand::Factorization(a) => ("factorization", a.clone()),
        }
    };
    match command {
        Command::Check { which } => {
            let (name, args) = check_name(which);
            let cfg = RunConfig::resolve(args)?;
            if name == "factorization" {
                validate_factorization(&cfg)?;
            }
            Ok((Plan::Checks(format!("check {name}"), vec![name]), cfg))
        }
        Command::Suite(args) => {
            let cfg = RunConfig::resolve(args.clone())?;
            validate_factorization(&cfg)?;
            Ok((Plan::Checks("suite".into(), SUITE.to_vec()), cfg))
        }
        Command::Sample { which: SampleCommand::Wishart(args) } => {
            let cfg = RunConfig::resolve(args.clone())?;
            let params = WishartParams::new(cfg.shape(), cfg.a.clone())?;
            let method = wishart_method(&cfg)?;
            let bound = params.algebra().dim_over_rank() - 1.0;
            let singular_ok = !matches!(method, WishartMethod::Metropolis(_))
                && singular_shape_rank(params.p, params.algebra()).is_some();
            if !(params.p > bound || singular_ok) {
                return Err(ConeError::ShapeOutOfRange { p: params.p, bound });
            }
            Ok((Plan::Wishart(params, method), cfg))
        }
        Command::Sample { which: SampleCommand::Gig(args) } => {
            let cfg = RunConfig::resolve(args.clone())?;
            let p = cfg.p.ok_or_else(|| usage("sample gig needs --p"))?;
            let params = GigParams::new(p, cfg.a.clone(), cfg.b.clone())?;
            let method = gig_method(&cfg)?;
            Ok((Plan::Gig(params, method), cfg))
        }
        Command::Test { which: TestCommand::MyProperty(args) } => {
            let cfg = RunConfig::resolve(args.clone())?;
            let p = cfg.shape();
            WishartParams::new(p, cfg.a.clone())?;
            GigParams::new(-p, cfg.a.clone(), cfg.b.clone())?;
            let bound = cfg.algebra.dim_over_rank() - 1.0;
            if !(p > bound) {
                return Err(ConeError::ShapeOutOfRange { p, bound });
            }
            let (gig, wishart) = match cfg.method {
                MethodName::Metropolis => {
                    (GigMethod::Metropolis(cfg.mcmc.clone()), WishartMethod::Metropolis(cfg.mcmc.clone()))
                }
                MethodName::Auto | MethodName::Rejection => (GigMethod::Rejection, WishartMethod::Auto),
                m => return Err(usage(format!("{m:?} is not a method for test my-property"))),
            };
            let ic = IndependenceConfig { permutations: cfg.permutations, gig_method: gig, wishart_method: wishart, ..Default::default() };
            Ok((Plan::My(ic), cfg))
        }
    }
}

fn validate_factorization(cfg: &RunConfig) -> Result<()> {
    cfg.a.require_cone(0.0)?;
    cfg.b.require_cone(0.0)?;
    let p = cfg.shape();
    let bound = cfg.algebra.dim_over_rank() - 1.0;
    if p > bound {
        Ok(())
    } else {
        Err(ConeError::ShapeOutOfRange { p, bound })
    }
}

fn execute(plan: Plan, cfg: &RunConfig) -> Result<Outcome> {
    match plan {
        Plan::Checks(command, names) => {
            let mut reports = Vec::new();
            for name in names {
                reports.extend(residual_checks(cfg, name)?);
            }
            Ok(Outcome::Report(RunReport::new(&command, cfg.seed, reports, Vec::new())))
        }
        Plan::Wishart(params, method) => Ok(Outcome::Batch(sample_wishart(&params, cfg.n, cfg.seed, &method)?)),
        Plan::Gig(params, method) => Ok(Outcome::Batch(sample_gig(&params, cfg.n, cfg.seed, &method)?)),
        Plan::My(ic) => {
            let p = cfg.shape();
            let mut runs = vec![my_property_test(cfg.algebra, p, &cfg.a, &cfg.b, cfg.n, cfg.seed, &ic)?];
            if cfg.negative_control {
                runs.push(my_negative_control(cfg.algebra, p, &cfg.a, &cfg.b, cfg.n, cfg.seed, &ic)?);
            }
            Ok(Outcome::Report(RunReport::new("test my-property", cfg.seed, Vec::new(), runs)))
        }
    }
}

fn write_file(path: &Path, body: &str) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, body)
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serialisable");
    s.push('\n');
    s
}

/// Write results and return the exit code.
fn emit(outcome: Outcome, cfg: &RunConfig) -> std::io::Result<i32> {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    match outcome {
        Outcome::Report(report) => {
            let body = match cfg.format {
                Format::Json => to_json(&report),
                Format::Csv => report.to_csv(),
            };
            let lines = report.summary_lines();
            match &cfg.out {
                Some(path) => {
                    write_file(path, &body)?;
                    let mut o = stdout.lock();
                    for l in &lines {
                        writeln!(o, "{l}")?;
                    }
                }
                None => {
                    let mut e = stderr.lock();
                    for l in &lines {
                        writeln!(e, "{l}")?;
                    }
                    stdout.lock().write_all(body.as_bytes())?;
                }
            }
            Ok(report.exit_code())
        }
        Outcome::Batch(batch) => {
            let meta = to_json(&batch.metadata());
            let body = match cfg.format {
                Format::Json => to_json(&serde_json::json!({
                    "metadata": batch.metadata(),
                    "samples": batch.samples.iter().map(|s| s.as_slice().to_vec()).collect::<Vec<_>>(),
                })),
                Format::Csv => batch.to_csv(),
            };
            let status = if batch.inconclusive() { "INCONCLUSIVE" } else { "PASS" };
            let line = format!(
                "{status} sample {} [{}] n={} seed={}{}",
                batch.sampler,
                batch.algebra,
                batch.len(),
                batch.seed,
                batch.mcmc.as_ref().map(|m| format!(" acceptance={:.3}", m.acceptance_rate)).unwrap_or_default()
            );
            match &cfg.out {
                Some(path) => {
                    write_file(path, &body)?;
                    if cfg.format == Format::Csv {
                        let mut meta_path = path.clone().into_os_string();
                        meta_path.push(".meta.json");
                        write_file(Path::new(&meta_path), &meta)?;
                    }
                    writeln!(stdout.lock(), "{line}")?;
                }
                None => {
                    writeln!(stderr.lock(), "{line}")?;
                    stdout.lock().write_all(body.as_bytes())?;
                }
            }
            Ok(if batch.inconclusive() { EXIT_INCONCLUSIVE } else { EXIT_PASS })
        }
    }
}

/// Run the CLI on `argv` (including the program name) and return the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    let (plan, cfg) = match plan(&cli.command) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let body = || match execute(plan, &cfg) {
        Ok(outcome) => match emit(outcome, &cfg) {
            Ok(code) => code,
            Err(e) => {
                eprintln!("error: cannot write output: {e}");
                EXIT_FAIL
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAIL
        }
    };
    match cli.threads {
        Some(0) => {
            eprintln!("error: --threads must be at least 1");
            EXIT_USAGE
        }
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(body),
            Err(e) => {
                eprintln!("error: cannot start thread pool: {e}");
                EXIT_FAIL
            }
        },
        None => body(),
    }
}

pub fn main_exit_code() -> i32 {
    run(std::env::args_os())
}
