//! Residual checks for the algebraic identities and functional-equation
//! solution families, the density factorisation behind the Matsumoto-Yor map,
//! and a Monte Carlo screen of the forward independence property.
//!
//! Scalar residuals are `|L − R| / max(1, |L|, |R|)`; element residuals use
//! the trace-form norm in the same way. Determinant identities use the plain
//! relative error since both sides are positive. A residual check passes when
//! the largest residual is at most the tolerance. Trial `i` draws from stream
//! `i` of the seed and reductions run in trial order, so reports do not depend
//! on thread count.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::{
    gig_log_density_unnorm, sample_gig, sample_wishart, wishart_log_density_unnorm, GigMethod, GigParams,
    SampleBatch, WishartMethod, WishartParams,
};
use crate::error::{ConeError, Result};
use crate::jordan_algebra::{random_cone_point, random_cone_point_banded, random_element, Algebra, Element};
use crate::my_transform::{compare_jacobian, hua_lhs, hua_rhs, my_map, DEFAULT_FD_STEP};
use crate::rng::{derive_seed, stream_rng, StreamRng};
use crate::stats;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Spread added to random cone points so every eigenvalue is at least this.
const CONE_SPREAD: f64 = 0.1;

/// Eigenvalue band for Jacobian test points.
pub const JACOBIAN_BAND: (f64, f64) = (0.2, 5.0);

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub algebra: Option<Algebra>,
    pub trials: usize,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Negative controls are expected to fail.
    pub negative_control: bool,
    pub seed: u64,
    /// Trials that raised a numerical error; any error fails the check.
    pub errors: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_error: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub p_values: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub significance: Option<f64>,
    pub inconclusive: bool,
}

impl CheckReport {
    fn from_residuals(check: &str, alg: Option<Algebra>, seed: u64, tol: f64, results: Vec<Result<f64>>) -> Self {
        let trials = results.len();
        let mut max_residual = 0.0f64;
        let mut sum = 0.0;
        let mut ok = 0usize;
        let mut errors = 0;
        let mut first_error = None;
        for r in results {
            match r {
                Ok(v) => {
                    max_residual = max_residual.max(v);
                    sum += v;
                    ok += 1;
                }
                Err(e) => {
                    errors += 1;
                    first_error.get_or_insert_with(|| e.to_string());
                }
            }
        }
        let mean_residual = if ok > 0 { sum / ok as f64 } else { 0.0 };
        CheckReport {
            check: check.to_string(),
            algebra: alg,
            trials,
            max_residual,
            mean_residual,
            tolerance: tol,
            pass: errors == 0 && max_residual <= tol,
            negative_control: false,
            seed,
            errors,
            first_error,
            p_values: Vec::new(),
            significance: None,
            inconclusive: false,
        }
    }

    /// Whether the outcome is the expected one: a pass, or a fail for a
    /// negative control.
    pub fn ok(&self) -> bool {
        self.pass != self.negative_control
    }

    /// Combine reports of the same check run over several constant sets.
    pub fn merge(check: &str, reports: &[CheckReport]) -> CheckReport {
        let first = reports.first().expect("at least one report");
        let trials: usize = reports.iter().map(|r| r.trials).sum();
        let weighted: f64 = reports.iter().map(|r| r.mean_residual * (r.trials - r.errors) as f64).sum();
        let good: usize = reports.iter().map(|r| r.trials - r.errors).sum();
        CheckReport {
            check: check.to_string(),
            algebra: first.algebra,
            trials,
            max_residual: reports.iter().map(|r| r.max_residual).fold(0.0, f64::max),
            mean_residual: if good > 0 { weighted / good as f64 } else { 0.0 },
            tolerance: first.tolerance,
            pass: reports.iter().all(|r| r.pass),
            negative_control: first.negative_control,
            seed: first.seed,
            errors: reports.iter().map(|r| r.errors).sum(),
            first_error: reports.iter().find_map(|r| r.first_error.clone()),
            p_values: reports.iter().flat_map(|r| r.p_values.iter().copied()).collect(),
            significance: first.significance,
            inconclusive: reports.iter().any(|r| r.inconclusive),
        }
    }

    /// One line for terminal output.
    pub fn summary_line(&self) -> String {
        let status = match (self.ok(), self.inconclusive) {
            (_, true) => "INCONCLUSIVE",
            (true, false) => "PASS",
            (false, false) => "FAIL",
        };
        let alg = self.algebra.map(|a| a.to_string()).unwrap_or_else(|| "scalar".into());
        let control = if self.negative_control { " (negative control)" } else { "" };
        format!(
            "{status} {}{control} [{alg}] trials={} max_residual={:.3e} tol={:.1e} errors={}",
            self.check, self.trials, self.max_residual, self.tolerance, self.errors
        )
    }
}

/// `|l − r| / max(1, |l|, |r|)`.
pub fn scalar_residual(l: f64, r: f64) -> f64 {
    let d = (l - r).abs();
    if d.is_nan() {
        return f64::INFINITY;
    }
    d / 1f64.max(l.abs()).max(r.abs())
}

/// `|l − r| / max(|l|, |r|)`, zero when both vanish.
pub fn relative_residual(l: f64, r: f64) -> f64 {
    let scale = l.abs().max(r.abs());
    if scale == 0.0 {
        return 0.0;
    }
    let d = (l - r).abs() / scale;
    if d.is_nan() {
        f64::INFINITY
    } else {
        d
    }
}

/// `‖l − r‖ / max(1, ‖l‖, ‖r‖)` in the trace-form norm.
pub fn element_residual(l: &Element, r: &Element) -> Result<f64> {
    let d = l.checked_sub(r)?.norm();
    Ok(d / 1f64.max(l.norm()).max(r.norm()))
}

fn run_trials<F>(n: usize, seed: u64, trial: F) -> Vec<Result<f64>>
where
    F: Fn(&mut StreamRng) -> Result<f64> + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|i| trial(&mut stream_rng(seed, i as u64)))
        .collect()
}

fn cone_point(alg: Algebra, rng: &mut StreamRng) -> Element {
    random_cone_point(alg, rng, CONE_SPREAD)
}

// ---- algebraic identities --------------------------------------------------------

/// `xy = yx`, `x(x²y) = x²(xy)`, `xe = x` and `⟨x, yz⟩ = ⟨xy, z⟩` on random
/// triples; the residual of a trial is the worst of the four.
pub fn check_algebra_axioms(alg: Algebra, n: usize, seed: u64, tol: f64) -> CheckReport {
    let results = run_trials(n, seed, |rng| {
        let x = random_element(alg, rng);
        let y = random_element(alg, rng);
        let z = random_element(alg, rng);
        let x2 = x.square();
        let comm = element_residual(&x.jordan(&y)?, &y.jordan(&x)?)?;
        let jordan = element_residual(&x.jordan(&x2.jordan(&y)?)?, &x2.jordan(&x.jordan(&y)?)?)?;
        let unit = element_residual(&x.jordan(&Element::identity(alg))?, &x)?;
        let assoc = scalar_residual(x.inner(&y.jordan(&z)?)?, x.jordan(&y)?.inner(&z)?);
        Ok(comm.max(jordan).max(unit).max(assoc))
    });
    CheckReport::from_residuals("algebra-axioms", Some(alg), seed, tol, results)
}

/// `det(P(x)y) = (det x)² det y` and `Det P(x) = (det x)^(2 dim/r)` on random
/// cone points, as relative errors.
pub fn check_determinant_identities(alg: Algebra, n: usize, seed: u64, tol: f64) -> CheckReport {
    let exponent = 2.0 * alg.dim_over_rank();
    let results = run_trials(n, seed, |rng| {
        let x = cone_point(alg, rng);
        let y = cone_point(alg, rng);
        let px = x.quad_rep();
        let dx = x.det();
        let sandwich = relative_residual(px.apply(&y)?.det(), dx * dx * y.det());
        let operator = relative_residual(px.det(), dx.powf(exponent));
        Ok(sandwich.max(operator))
    });
    CheckReport::from_residuals("determinant-identities", Some(alg), seed, tol, results)
}

/// Hua's identity `a⁻¹ − (a+b)⁻¹ = (a + P(a)b⁻¹)⁻¹` on random cone pairs.
pub fn check_hua(alg: Algebra, n: usize, seed: u64, tol: f64) -> CheckReport {
    let results = run_trials(n, seed, |rng| {
        let a = cone_point(alg, rng);
        let b = cone_point(alg, rng);
        element_residual(&hua_lhs(&a, &b)?, &hua_rhs(&a, &b)?)
    });
    CheckReport::from_residuals("hua", Some(alg), seed, tol, results)
}

/// `Ψ(Ψ(x, y)) = (x, y)` on random cone pairs.
pub fn check_involution(alg: Algebra, n: usize, seed: u64, tol: f64) -> CheckReport {
    let results = run_trials(n, seed, |rng| {
        let x = cone_point(alg, rng);
        let y = cone_point(alg, rng);
        let once = my_map(&x, &y)?;
        let twice = my_map(&once.first, &once.second)?;
        Ok(element_residual(&twice.first, &x)?.max(element_residual(&twice.second, &y)?))
    });
    CheckReport::from_residuals("involution", Some(alg), seed, tol, results)
}

/// Closed-form Jacobian determinant of `Ψ` against central differences at
/// points with eigenvalues in [`JACOBIAN_BAND`].
pub fn check_jacobian(alg: Algebra, n: usize, seed: u64, tol: f64) -> CheckReport {
    let (lo, hi) = JACOBIAN_BAND;
    let results = run_trials(n, seed, |rng| {
        let u = random_cone_point_banded(alg, rng, lo, hi);
        let v = random_cone_point_banded(alg, rng, lo, hi);
        Ok(compare_jacobian(&u, &v, DEFAULT_FD_STEP, tol)?.rel_error)
    });
    CheckReport::from_residuals("jacobian", Some(alg), seed, tol, results)
}

// ---- functional equations --------------------------------------------------------

/// `f(x) = ⟨f_vec, x⟩` satisfies `f(x) + f(y) = f(x + y)`.
pub fn check_cauchy_additive(alg: Algebra, f_vec: &Element, n: usize, seed: u64, tol: f64) -> CheckReport {
    let results = run_trials(n, seed, |rng| {
        let x = cone_point(alg, rng);
        let y = cone_point(alg, rng);
        let lhs = f_vec.inner(&x)? + f_vec.inner(&y)?;
        let rhs = f_vec.inner(&x.checked_add(&y)?)?;
        Ok(scalar_residual(lhs, rhs))
    });
    CheckReport::from_residuals("cauchy-additive", Some(alg), seed, tol, results)
}

/// `f₁(x) + f₂(y) = f₃(P(x^(1/2))y)` for `fᵢ = q log det + const`, with the
/// constants `γ₁`, `γ₂`, `γ₁ + γ₂`.
pub fn check_pexider_log(alg: Algebra, q: f64, gamma1: f64, gamma2: f64, n: usize, seed: u64, tol: f64) -> CheckReport {
    let results = run_trials(n, seed, |rng| {
        let x = cone_point(alg, rng);
        let y = cone_point(alg, rng);
        let lhs = q * x.log_det()? + gamma1 + q * y.log_det()? + gamma2;
        let z = x.sqrt()?.quad_rep().apply(&y)?;
        let rhs = q * z.log_det()? + gamma1 + gamma2;
        Ok(scalar_residual(lhs, rhs))
    });
    CheckReport::from_residuals("pexider-log", Some(alg), seed, tol, results)
}

/// Constants `A, B, C, D` of `g(x) = Ax + B log x + C`, `α(x) = Ax² + B log x + D`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GAlphaConstants {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl GAlphaConstants {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        GAlphaConstants {
            a: rng.random_range(-3.0..=3.0),
            b: rng.random_range(-3.0..=3.0),
            c: rng.random_range(-5.0..=5.0),
            d: rng.random_range(-5.0..=5.0),
        }
    }
}

/// Positive scalars spread over several orders of magnitude.
fn positive_scalar<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    10f64.powf(rng.random_range(-1.0..=1.0))
}

/// `g(x(x+y)) − g(y(x+y)) = α(x) − α(y)` for the stated `g`, `α`.
pub fn check_fe_univariate_g_alpha(k: GAlphaConstants, n: usize, seed: u64, tol: f64) -> CheckReport {
    let g = |x: f64| k.a * x + k.b * x.ln() + k.c;
    let alpha = |x: f64| k.a * x * x + k.b * x.ln() + k.d;
    let results = run_trials(n, seed, |rng| {
        let x = positive_scalar(rng);
        let y = positive_scalar(rng);
        Ok(scalar_residual(g(x * (x + y)) - g(y * (x + y)), alpha(x) - alpha(y)))
    });
    CheckReport::from_residuals("fe-1d-g-alpha", None, seed, tol, results)
}

/// Constants of the univariate four-function family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Fe1dConstants {
    p: f64,
    f: f64,
    g: f64,
    c: [f64; 4],
}

impl Fe1dConstants {
    /// Rejects constants unless `C₁ + C₂ = C₃ + C₄` up to rounding.
    pub fn new(p: f64, f: f64, g: f64, c: [f64; 4]) -> Result<Self> {
        let gap = (c[0] + c[1]) - (c[2] + c[3]);
        let scale = c.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if gap.abs() > 1e-12 * scale {
            return Err(ConeError::InvalidConstants(format!(
                "C1 + C2 must equal C3 + C4, difference is {gap}"
            )));
        }
        Ok(Fe1dConstants { p, f, g, c })
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let c1 = rng.random_range(-5.0..=5.0);
        let c2 = rng.random_range(-5.0..=5.0);
        let c3 = rng.random_range(-5.0..=5.0);
        Fe1dConstants {
            p: rng.random_range(-3.0..=3.0),
            f: rng.random_range(-1.0..=1.0),
            g: rng.random_range(-1.0..=1.0),
            c: [c1, c2, c3, c1 + c2 - c3],
        }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn f(&self) -> f64 {
        self.f
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn c(&self) -> [f64; 4] {
        self.c
    }
}

/// `A(x) + B(y) = C((x+y)⁻¹) + D(x⁻¹ − (x+y)⁻¹)` with
/// `A = −p log x + fx + g/x + C₁`, `B = p log x + fx + C₂`,
/// `C = −p log x + gx + f/x + C₃`, `D = p log x + gx + C₄`.
pub fn check_fe_univariate_abcd(k: &Fe1dConstants, n: usize, seed: u64, tol: f64) -> CheckReport {
    let Fe1dConstants { p, f, g, c } = *k;
    let fa = |x: f64| -p * x.ln() + f * x + g / x + c[0];
    let fb = |x: f64| p * x.ln() + f * x + c[1];
    let fc = |x: f64| -p * x.ln() + g * x + f / x + c[2];
    let fd = |x: f64| p * x.ln() + g * x + c[3];
    let results = run_trials(n, seed, |rng| {
        let x = positive_scalar(rng);
        let y = positive_scalar(rng);
        let s = 1.0 / (x + y);
        // x⁻¹ − (x+y)⁻¹ written without cancellation
        let w = y / (x * (x + y));
        Ok(scalar_residual(fa(x) + fb(y), fc(s) + fd(w)))
    });
    CheckReport::from_residuals("fe-1d-abcd", None, seed, tol, results)
}

/// Constants `q, f, g, γ₁, γ₂, γ₃` of the cone solution family.
#[derive(Clone, Debug, PartialEq)]
pub struct FeSolutionConstants {
    pub q: f64,
    pub f: Element,
    pub g: Element,
    pub gamma: [f64; 3],
}

impl FeSolutionConstants {
    pub fn zero(alg: Algebra) -> Self {
        FeSolutionConstants { q: 0.0, f: Element::zeros(alg), g: Element::zeros(alg), gamma: [0.0; 3] }
    }

    /// `|q| ≤ 3`, `‖f‖, ‖g‖ ≤ 1`, `|γᵢ| ≤ 5`.
    pub fn random<R: Rng + ?Sized>(alg: Algebra, rng: &mut R) -> Self {
        let ball = |rng: &mut R| {
            let v = random_element(alg, rng);
            let radius: f64 = rng.random_range(0.0..=1.0);
            v.scale(radius / v.norm().max(f64::MIN_POSITIVE))
        };
        let f = ball(rng);
        let g = ball(rng);
        FeSolutionConstants {
            q: rng.random_range(-3.0..=3.0),
            f,
            g,
            gamma: [rng.random_range(-5.0..=5.0), rng.random_range(-5.0..=5.0), rng.random_range(-5.0..=5.0)],
        }
    }

    /// `a(x) = q log det x + ⟨f, x⟩ + ⟨g, x⁻¹⟩ + γ₁ + γ₃`.
    pub fn a(&self, x: &Element) -> Result<f64> {
        Ok(self.q * x.log_det()? + self.f.inner(x)? + self.g.inner(&x.inverse()?)? + self.gamma[0] + self.gamma[2])
    }

    /// `b(x) = −q log det x + ⟨f, x⟩ + γ₂`.
    pub fn b(&self, x: &Element) -> Result<f64> {
        Ok(-self.q * x.log_det()? + self.f.inner(x)? + self.gamma[1])
    }

    /// `c(x) = q log det x + ⟨g, x⟩ + ⟨f, x⁻¹⟩ + γ₃`.
    pub fn c(&self, x: &Element) -> Result<f64> {
        Ok(self.q * x.log_det()? + self.g.inner(x)? + self.f.inner(&x.inverse()?)? + self.gamma[2])
    }

    /// `d(x) = −q log det x + ⟨g, x⟩ + γ₁ + γ₂`.
    pub fn d(&self, x: &Element) -> Result<f64> {
        Ok(-self.q * x.log_det()? + self.g.inner(x)? + self.gamma[0] + self.gamma[1])
    }
}

fn fe_cone_residuals(alg: Algebra, k: &FeSolutionConstants, perturbation: f64, n: usize, seed: u64) -> Vec<Result<f64>> {
    run_trials(n, seed, |rng| {
        let x = cone_point(alg, rng);
        let y = cone_point(alg, rng);
        let pair = my_map(&x, &y)?;
        let lhs = k.a(&x)? + perturbation * x.det().sqrt() + k.b(&y)?;
        let rhs = k.c(&pair.first)? + k.d(&pair.second)?;
        Ok(scalar_residual(lhs, rhs))
    })
}

/// `a(x) + b(y) = c((x+y)⁻¹) + d(x⁻¹ − (x+y)⁻¹)` for the stated family.
pub fn check_fe_cone(alg: Algebra, k: &FeSolutionConstants, n: usize, seed: u64, tol: f64) -> CheckReport {
    CheckReport::from_residuals("fe-cone", Some(alg), seed, tol, fe_cone_residuals(alg, k, 0.0, n, seed))
}

/// [`check_fe_cone`] with `perturbation·(det x)^(1/2)` added to `a`. The
/// report is a negative control: `pass` still means every residual is within
/// tolerance, and the expected outcome is a failure.
pub fn check_perturbed_fe_rejects(
    alg: Algebra,
    k: &FeSolutionConstants,
    perturbation: f64,
    n: usize,
    seed: u64,
    tol: f64,
) -> CheckReport {
    let mut report = CheckReport::from_residuals(
        "fe-cone-perturbed",
        Some(alg),
        seed,
        tol,
        fe_cone_residuals(alg, k, perturbation, n, seed),
    );
    report.negative_control = true;
    report
}

/// Run `check` over `sets` random constant sets, set `j` seeded by
/// `derive_seed(seed, j)`, and merge.
pub fn over_constant_sets(
    check: &str,
    sets: usize,
    seed: u64,
    run: impl Fn(&mut StreamRng, u64) -> CheckReport,
) -> CheckReport {
    let reports: Vec<CheckReport> = (0..sets)
        .map(|j| {
            let set_seed = derive_seed(seed, j as u64);
            let mut rng = stream_rng(set_seed, u64::MAX);
            run(&mut rng, set_seed)
        })
        .collect();
    let mut merged = CheckReport::merge(check, &reports);
    merged.seed = seed;
    merged
}

// ---- densities ------------------------------------------------------------------

/// Log-densities (unnormalised) entering the factorisation of the joint law
/// of `(U, V) = Ψ(X, Y)`.
struct FactorizationSides {
    x_law: GigParams,
    y_law: WishartParams,
    u_law: GigParams,
    v_law: WishartParams,
}

impl FactorizationSides {
    fn new(p: f64, a: &Element, b: &Element) -> Result<Self> {
        Ok(FactorizationSides {
            x_law: GigParams::new(-p, a.clone(), b.clone())?,
            y_law: WishartParams::new(p, a.clone())?,
            u_law: GigParams::new(-p, b.clone(), a.clone())?,
            v_law: WishartParams::new(p, b.clone())?,
        })
    }

    /// `ln f_U(u) + ln f_V(v) − ln[J · f_X(x) f_Y(y)]`, `(x, y) = Ψ(u, v)`.
    fn log_gap(&self, u: &Element, v: &Element) -> Result<f64> {
        let alg = u.algebra();
        let lhs = gig_log_density_unnorm(&self.u_law, u)? + wishart_log_density_unnorm(&self.v_law, v)?;
        let s = u.checked_add(v)?;
        let xy = my_map(u, v)?;
        let log_jac = -2.0 * alg.dim_over_rank() * (u.log_det()? + s.log_det()?);
        let rhs = log_jac
            + gig_log_density_unnorm(&self.x_law, &xy.first)?
            + wishart_log_density_unnorm(&self.y_law, &xy.second)?;
        Ok(lhs - rhs)
    }
}

fn factorization_report(
    check: &str,
    sides: &FactorizationSides,
    alg: Algebra,
    n: usize,
    seed: u64,
    tol: f64,
) -> CheckReport {
    let e = Element::identity(alg);
    let values: Vec<Result<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            if i == 0 {
                // the point u = v = e is always included
                return sides.log_gap(&e, &e);
            }
            let mut rng = stream_rng(seed, i as u64);
            let u = cone_point(alg, &mut rng);
            let v = cone_point(alg, &mut rng);
            sides.log_gap(&u, &v)
        })
        .collect();
    let finite: Vec<f64> = values.iter().filter_map(|r| r.as_ref().ok().copied()).collect();
    let centre = stats::mean(&finite);
    let residuals = values.into_iter().map(|r| r.map(|g| (g - centre).abs())).collect();
    CheckReport::from_residuals(check, Some(alg), seed, tol, residuals)
}

/// Checks that `f_U(u) f_V(v) / [(det u det(u+v))^(−2 dim/r) f_X(x) f_Y(y)]`,
/// with `(x, y) = Ψ(u, v)`, is constant over random pairs. Here `X ~ μ_{−p,a,b}`,
/// `Y ~ γ_{p,a}`, `U ~ μ_{−p,b,a}`, `V ~ γ_{p,b}`, all unnormalised, so the
/// constant is a ratio of normalising constants. The residual is the largest
/// deviation of the log-ratio from its mean; the pair `u = v = e` is trial 0.
pub fn density_factorization_check(alg: Algebra, p: f64, a: &Element, b: &Element, n: usize, seed: u64, tol: f64) -> Result<CheckReport> {
    let sides = FactorizationSides::new(p, a, b)?;
    Ok(factorization_report("density-factorization", &sides, alg, n, seed, tol))
}

/// Negative control: the `U` and `V` laws use `(a, b)` in place of `(b, a)`,
/// which breaks constancy whenever `a ≠ b`.
pub fn density_factorization_swapped(alg: Algebra, p: f64, a: &Element, b: &Element, n: usize, seed: u64, tol: f64) -> Result<CheckReport> {
    let mut sides = FactorizationSides::new(p, a, b)?;
    sides.u_law = GigParams::new(-p, a.clone(), b.clone())?;
    sides.v_law = WishartParams::new(p, a.clone())?;
    let mut report = factorization_report("density-factorization-swapped", &sides, alg, n, seed, tol);
    report.negative_control = true;
    Ok(report)
}

// ---- forward Matsumoto-Yor property ---------------------------------------------

/// Settings for [`my_property_test`].
#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IndependenceConfig {
    pub permutations: usize,
    /// Family-wise level; each of the individual tests runs at
    /// `significance / (number of tests)`.
    pub significance: f64,
    pub gig_method: GigMethod,
    pub wishart_method: WishartMethod,
}

impl Default for IndependenceConfig {
    fn default() -> Self {
        IndependenceConfig {
            permutations: 500,
            significance: 0.01,
            gig_method: GigMethod::Rejection,
            wishart_method: WishartMethod::Auto,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairTest {
    pub pair: String,
    pub pearson: f64,
    pub dcor: f64,
    pub p_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarginalTest {
    pub functional: String,
    pub statistic: f64,
    pub p_value: f64,
    pub n_eff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndependenceReport {
    pub check: String,
    pub algebra: Algebra,
    pub p: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub n: usize,
    pub seed: u64,
    pub permutations: usize,
    pub samplers: Vec<String>,
    pub functionals: Vec<String>,
    /// Pearson correlations among `functionals`.
    pub correlation: Vec<Vec<f64>>,
    pub independence: Vec<PairTest>,
    pub marginals: Vec<MarginalTest>,
    pub significance: f64,
    pub per_test_level: f64,
    pub pass: bool,
    pub negative_control: bool,
    pub inconclusive: bool,
}

impl IndependenceReport {
    pub fn p_values(&self) -> Vec<f64> {
        self.independence
            .iter()
            .map(|t| t.p_value)
            .chain(self.marginals.iter().map(|m| m.p_value))
            .collect()
    }

    pub fn min_independence_p(&self) -> f64 {
        self.independence.iter().map(|t| t.p_value).fold(1.0, f64::min)
    }

    /// A pass, or for the dependent-data control, some independence test
    /// rejecting at `significance`.
    pub fn ok(&self) -> bool {
        if self.negative_control {
            self.min_independence_p() < self.significance
        } else {
            self.pass
        }
    }

    pub fn summary_lines(&self) -> Vec<String> {
        let status = |ok: bool| if ok { "PASS" } else { "FAIL" };
        let level = if self.negative_control { self.significance } else { self.per_test_level };
        let mut lines = Vec::new();
        for t in &self.independence {
            let ok = if self.negative_control { t.p_value < level } else { t.p_value > level };
            lines.push(format!(
                "{} {} independence {} [{}] n={} dcor={:.4} p={:.4}",
                status(ok),
                self.check,
                t.pair,
                self.algebra,
                self.n,
                t.dcor,
                t.p_value
            ));
        }
        for m in &self.marginals {
            lines.push(format!(
                "{} {} marginal {} [{}] n={} ks={:.5} p={:.4}",
                status(self.negative_control || m.p_value > level),
                self.check,
                m.functional,
                self.algebra,
                self.n,
                m.statistic,
                m.p_value
            ));
        }
        if self.inconclusive {
            lines.push(format!("INCONCLUSIVE {} [{}] MCMC acceptance out of band", self.check, self.algebra));
        }
        lines
    }
}

fn functional_n_eff(batch: &SampleBatch, values: &[f64]) -> f64 {
    if batch.is_mcmc() {
        stats::effective_sample_size(values)
    } else {
        values.len() as f64
    }
}

fn ks_marginal(name: &str, observed: &[f64], observed_eff: f64, fresh: &[f64], fresh_eff: f64) -> MarginalTest {
    let r = stats::ks_two_sample(observed, fresh, Some(observed_eff), Some(fresh_eff));
    MarginalTest { functional: name.to_string(), statistic: r.statistic, p_value: r.p_value, n_eff: observed_eff.min(fresh_eff) }
}

fn my_experiment(
    alg: Algebra,
    p: f64,
    a: &Element,
    b: &Element,
    n: usize,
    seed: u64,
    config: &IndependenceConfig,
    dependent: bool,
) -> Result<IndependenceReport> {
    if a.algebra() != alg || b.algebra() != alg {
        return Err(ConeError::AlgebraMismatch { left: alg, right: if a.algebra() != alg { a.algebra() } else { b.algebra() } });
    }
    let x_law = GigParams::new(-p, a.clone(), b.clone())?;
    let y_law = WishartParams::new(p, a.clone())?;
    let u_law = GigParams::new(-p, b.clone(), a.clone())?;
    let v_law = WishartParams::new(p, b.clone())?;

    let xs = sample_gig(&x_law, n, derive_seed(seed, 1), &config.gig_method)?;
    let ys = sample_wishart(&y_law, n, derive_seed(seed, 2), &config.wishart_method)?;
    let fresh_v = sample_wishart(&v_law, n, derive_seed(seed, 3), &config.wishart_method)?;
    let fresh_u = sample_gig(&u_law, n, derive_seed(seed, 4), &config.gig_method)?;

    let pairs: Vec<(Element, Element)> = xs
        .samples
        .par_iter()
        .zip(ys.samples.par_iter())
        .map(|(x, y)| {
            let y = if dependent { x.checked_add(y)? } else { y.clone() };
            let m = my_map(x, &y)?;
            Ok((m.first, m.second))
        })
        .collect::<Result<_>>()?;

    let tr_u: Vec<f64> = pairs.iter().map(|(u, _)| u.trace()).collect();
    let tr_v: Vec<f64> = pairs.iter().map(|(_, v)| v.trace()).collect();
    let det_u: Vec<f64> = pairs.iter().map(|(u, _)| u.det()).collect();
    let det_v: Vec<f64> = pairs.iter().map(|(_, v)| v.det()).collect();
    let a_u: Vec<f64> = pairs.iter().map(|(u, _)| a.inner(u)).collect::<Result<_>>()?;
    let b_v: Vec<f64> = pairs.iter().map(|(_, v)| b.inner(v)).collect::<Result<_>>()?;

    let names = ["tr U", "tr V", "det U", "det V", "<a,U>", "<b,V>"];
    let columns = [&tr_u, &tr_v, &det_u, &det_v, &a_u, &b_v];
    let correlation = columns
        .iter()
        .map(|x| columns.iter().map(|y| stats::pearson(x, y)).collect())
        .collect();

    let independence = [(0usize, 1usize), (2, 3), (4, 5)]
        .iter()
        .enumerate()
        .map(|(k, &(i, j))| {
            let r = stats::dcor_permutation_test(columns[i], columns[j], config.permutations, derive_seed(seed, 10 + k as u64));
            PairTest {
                pair: format!("({}, {})", names[i], names[j]),
                pearson: stats::pearson(columns[i], columns[j]),
                dcor: r.statistic,
                p_value: r.p_value,
            }
        })
        .collect::<Vec<_>>();

    let chain_u = xs.is_mcmc() || ys.is_mcmc();
    let eff = |values: &[f64]| if chain_u { stats::effective_sample_size(values) } else { values.len() as f64 };
    let fv_tr = fresh_v.functional(|v| v.trace());
    let fv_det = fresh_v.functional(|v| v.det());
    let fu_tr = fresh_u.functional(|u| u.trace());
    let fu_det = fresh_u.functional(|u| u.det());
    let marginals = vec![
        ks_marginal("tr V", &tr_v, eff(&tr_v), &fv_tr, functional_n_eff(&fresh_v, &fv_tr)),
        ks_marginal("det V", &det_v, eff(&det_v), &fv_det, functional_n_eff(&fresh_v, &fv_det)),
        ks_marginal("tr U", &tr_u, eff(&tr_u), &fu_tr, functional_n_eff(&fresh_u, &fu_tr)),
        ks_marginal("det U", &det_u, eff(&det_u), &fu_det, functional_n_eff(&fresh_u, &fu_det)),
    ];

    let tests = independence.len() + marginals.len();
    let per_test_level = config.significance / tests as f64;
    let pass = independence.iter().all(|t| t.p_value > per_test_level)
        && marginals.iter().all(|m| m.p_value > per_test_level);
    let inconclusive = [&xs, &ys, &fresh_u, &fresh_v].iter().any(|s| s.inconclusive());
    let samplers = [&xs, &ys, &fresh_u, &fresh_v].iter().map(|s| s.sampler.clone()).collect();

    Ok(IndependenceReport {
        check: if dependent { "my-negative-control".into() } else { "my-property".into() },
        algebra: alg,
        p,
        a: a.as_slice().to_vec(),
        b: b.as_slice().to_vec(),
        n,
        seed,
        permutations: config.permutations,
        samplers,
        functionals: names.iter().map(|s| s.to_string()).collect(),
        correlation,
        independence,
        marginals,
        significance: config.significance,
        per_test_level,
        pass,
        negative_control: dependent,
        inconclusive,
    })
}

/// Draws `X ~ μ_{−p,a,b}` and `Y ~ γ_{p,a}` independently, maps them through
/// `Ψ`, and screens `U`, `V` for independence with distance-correlation
/// permutation tests on `(tr U, tr V)`, `(det U, det V)` and `(⟨a,U⟩, ⟨b,V⟩)`.
/// The marginals of `V` and `U` are compared with fresh draws of `γ_{p,b}`
/// and `μ_{−p,b,a}` by two-sample KS on trace and determinant. Scalar
/// functionals make this a screen, not a proof of independence.
pub fn my_property_test(
    alg: Algebra,
    p: f64,
    a: &Element,
    b: &Element,
    n: usize,
    seed: u64,
    config: &IndependenceConfig,
) -> Result<IndependenceReport> {
    my_experiment(alg, p, a, b, n, seed, config, false)
}

/// The same pipeline with `Y` replaced by `X + Y`, which makes `U` and `V`
/// dependent.
pub fn my_negative_control(
    alg: Algebra,
    p: f64,
    a: &Element,
    b: &Element,
    n: usize,
    seed: u64,
    config: &IndependenceConfig,
) -> Result<IndependenceReport> {
    my_experiment(alg, p, a, b, n, seed, config, true)
}
