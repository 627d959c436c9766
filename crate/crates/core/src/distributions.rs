//! Wishart `γ_{p,a}` and generalized inverse Gaussian `μ_{p,a,b}` laws on a
//! symmetric cone: densities, Laplace transform, and samplers.
//!
//! Densities are taken with respect to the Lebesgue measure of the trace form
//! `⟨x, y⟩ = tr(x∘y)`. For the matrix kinds that is the measure of the stored
//! coordinates; Lorentz coordinates are scaled by `√2` relative to it, so a
//! density in raw Lorentz coordinates carries an extra factor `2^(dim/2)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ConeError, Result};
use crate::jordan_algebra::{Algebra, AlgebraKind, Element, LinearOperator};
use crate::quadrature::{integrate, log_integrate_half_line};
use crate::rng::stream_rng;
use crate::stats;

/// Samples drawn per RNG stream when a batch is split into blocks.
pub const BLOCK_SIZE: usize = 1024;

const MAX_REJECTION_ATTEMPTS: usize = 1_000_000;

/// Lower bound on `p` for an absolutely continuous Wishart: `dim/r − 1`.
pub fn continuous_shape_bound(alg: Algebra) -> f64 {
    alg.dim_over_rank() - 1.0
}

fn require_shape(p: f64, alg: Algebra) -> Result<()> {
    let bound = continuous_shape_bound(alg);
    if p > bound {
        Ok(())
    } else {
        Err(ConeError::ShapeOutOfRange { p, bound })
    }
}

/// For a matrix cone and a singular point `p = m·d/2` of the Gindikin set,
/// `0 < m < r`, the number `m` of Gaussian outer products that make up a draw.
pub fn singular_shape_rank(p: f64, alg: Algebra) -> Option<usize> {
    if !alg.is_matrix_kind() || p <= 0.0 || p > continuous_shape_bound(alg) {
        return None;
    }
    let m = 2.0 * p / alg.peirce() as f64;
    let k = m.round();
    ((m - k).abs() < 1e-9 && k >= 1.0 && (k as usize) < alg.rank()).then_some(k as usize)
}

fn require_sampleable_shape(p: f64, alg: Algebra) -> Result<()> {
    match singular_shape_rank(p, alg) {
        Some(_) => Ok(()),
        None => require_shape(p, alg),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WishartParams {
    pub p: f64,
    pub a: Element,
}

impl WishartParams {
    pub fn new(p: f64, a: Element) -> Result<Self> {
        a.require_cone(0.0)?;
        if !p.is_finite() {
            return Err(ConeError::ShapeOutOfRange { p, bound: continuous_shape_bound(a.algebra()) });
        }
        Ok(WishartParams { p, a })
    }

    pub fn algebra(&self) -> Algebra {
        self.a.algebra()
    }

    /// `E[Y] = p·a⁻¹`.
    pub fn mean(&self) -> Result<Element> {
        Ok(self.a.inverse()?.scale(self.p))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GigParams {
    pub p: f64,
    pub a: Element,
    pub b: Element,
}

impl GigParams {
    pub fn new(p: f64, a: Element, b: Element) -> Result<Self> {
        if a.algebra() != b.algebra() {
            return Err(ConeError::AlgebraMismatch { left: a.algebra(), right: b.algebra() });
        }
        a.require_cone(0.0)?;
        b.require_cone(0.0)?;
        Ok(GigParams { p, a, b })
    }

    pub fn algebra(&self) -> Algebra {
        self.a.algebra()
    }

    /// Parameters of the law of `X⁻¹` when `X ~ μ_{p,a,b}`, namely `μ_{−p,b,a}`.
    pub fn reciprocal(&self) -> GigParams {
        GigParams { p: -self.p, a: self.b.clone(), b: self.a.clone() }
    }
}

/// `ln Γ_V(p) = ((dim − r)/2)·ln 2π + Σ_{j=1..r} ln Γ(p − (j−1)d/2)`.
pub fn ln_gamma_cone(p: f64, alg: Algebra) -> Result<f64> {
    require_shape(p, alg)?;
    let r = alg.rank();
    let d = alg.peirce() as f64;
    let head = (alg.dim() - r) as f64 / 2.0 * (2.0 * std::f64::consts::PI).ln();
    Ok(head + (0..r).map(|j| libm::lgamma(p - j as f64 * d / 2.0)).sum::<f64>())
}

/// The cone Gamma function `Γ_V(p)`.
pub fn gamma_cone(p: f64, alg: Algebra) -> Result<f64> {
    Ok(ln_gamma_cone(p, alg)?.exp())
}

/// `p·ln det a − ln Γ_V(p) + (p − dim/r)·ln det x − ⟨a, x⟩`.
pub fn wishart_log_density(params: &WishartParams, x: &Element) -> Result<f64> {
    let alg = params.algebra();
    require_shape(params.p, alg)?;
    let ld_x = x.log_det()?;
    Ok(params.p * params.a.log_det()? - ln_gamma_cone(params.p, alg)?
        + (params.p - alg.dim_over_rank()) * ld_x
        - params.a.inner(x)?)
}

/// Log-density of `γ_{p,a}` up to its normalising constant.
pub fn wishart_log_density_unnorm(params: &WishartParams, x: &Element) -> Result<f64> {
    let alg = params.algebra();
    Ok((params.p - alg.dim_over_rank()) * x.log_det()? - params.a.inner(x)?)
}

/// Laplace transform `E exp(−⟨σ, Y⟩) = (det a / det(a + σ))^p`.
pub fn wishart_laplace(params: &WishartParams, sigma: &Element) -> Result<f64> {
    let shifted = params.a.checked_add(sigma)?;
    shifted.require_cone(0.0)?;
    Ok((params.p * (params.a.log_det()? - shifted.log_det()?)).exp())
}

/// `(p − dim/r)·ln det x − ⟨a, x⟩ − ⟨b, x⁻¹⟩`.
pub fn gig_log_density_unnorm(params: &GigParams, x: &Element) -> Result<f64> {
    let alg = params.algebra();
    let ld = x.log_det()?;
    Ok((params.p - alg.dim_over_rank()) * ld - params.a.inner(x)? - params.b.inner(&x.inverse()?)?)
}

fn rank1_scalars(params: &GigParams) -> Result<(f64, f64, f64)> {
    let alg = params.algebra();
    if alg.dim() != 1 {
        return Err(ConeError::Unsupported(format!(
            "GIG normalising constant by quadrature is rank-1 only, got {alg}"
        )));
    }
    Ok((params.p, params.a.as_slice()[0], params.b.as_slice()[0]))
}

/// `ln K_p(a, b) = ln ∫₀^∞ x^(p−1) e^(−ax−b/x) dx`, rank 1 only.
pub fn gig_log_norm_constant_rank1(params: &GigParams) -> Result<f64> {
    let (p, a, b) = rank1_scalars(params)?;
    Ok(log_integrate_half_line(|x| (p - 1.0) * x.ln() - a * x - b / x, 1e-12))
}

/// `K_p(a, b)` by adaptive quadrature, rank 1 only.
pub fn gig_norm_constant_rank1(params: &GigParams) -> Result<f64> {
    Ok(gig_log_norm_constant_rank1(params)?.exp())
}

/// Rank-1 GIG CDF at each of `points` (any order), by quadrature in log scale.
pub fn gig_cdf_rank1(params: &GigParams, points: &[f64]) -> Result<Vec<f64>> {
    let (p, a, b) = rank1_scalars(params)?;
    let log_k = gig_log_norm_constant_rank1(params)?;
    // integrand in s = ln x, normalised
    let g = move |s: f64| (p * s - a * s.exp() - b * (-s).exp() - log_k).exp();
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| points[i].total_cmp(&points[j]));
    let mut out = vec![0.0; points.len()];
    // left end where the integrand is negligible
    let first = points.get(*order.first().unwrap_or(&0)).copied().unwrap_or(1.0).max(f64::MIN_POSITIVE);
    let mut lo = first.ln().min(0.0);
    while g(lo) > 1e-300 && lo > -700.0 {
        lo -= 1.0;
    }
    let mut acc = 0.0;
    let mut prev = lo;
    for &i in &order {
        let s = points[i].max(f64::MIN_POSITIVE).ln();
        if s > prev {
            acc += integrate(g, prev, s, 1e-15, 1e-12).value;
            prev = s;
        }
        out[i] = acc.min(1.0);
    }
    Ok(out)
}

// ---- samplers ---------------------------------------------------------------

/// Configuration of the random-walk Metropolis sampler.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McmcConfig {
    pub burn_in: usize,
    pub thinning: usize,
    /// Initial proposal std as a fraction of the start point's scale.
    pub proposal_scale: f64,
    pub target_acceptance: f64,
    /// Acceptance rates outside this band flag the chain as unreliable.
    pub acceptance_band: (f64, f64),
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            burn_in: 5000,
            thinning: 10,
            proposal_scale: 0.15,
            target_acceptance: 0.3,
            acceptance_band: (0.1, 0.7),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McmcInfo {
    pub burn_in: usize,
    pub thinning: usize,
    pub proposal_std: f64,
    pub acceptance_rate: f64,
    /// False when the post-adaptation acceptance rate left the configured band.
    pub in_band: bool,
}

/// Random-walk Metropolis on coordinates with a Gaussian proposal. The
/// proposal std adapts during burn-in (batches of 100 steps, multiplicative
/// updates toward the target rate) and is frozen afterwards, so the retained
/// chain is a plain symmetric-proposal Metropolis chain. Proposals outside the
/// open cone are rejected.
pub fn metropolis<R, F>(start: Element, n: usize, config: &McmcConfig, log_density: F, rng: &mut R) -> Result<(Vec<Element>, McmcInfo)>
where
    R: Rng + ?Sized,
    F: Fn(&Element) -> Result<f64>,
{
    let alg = start.algebra();
    let mut current = start;
    let mut current_ld = log_density(&current)?;
    let scale = (current.norm() / (alg.rank() as f64).sqrt()).max(1e-3);
    let mut std = config.proposal_scale * scale;
    let thinning = config.thinning.max(1);

    let step = |current: &mut Element, current_ld: &mut f64, std: f64, rng: &mut R| -> bool {
        let noise = Normal::new(0.0, std).expect("positive std");
        let coords = current.coords().map(|c| c + noise.sample(rng));
        let proposal = Element::from_dvector(alg, coords).expect("same length");
        if !proposal.in_cone(0.0) {
            return false;
        }
        let ld = match log_density(&proposal) {
            Ok(v) if v.is_finite() => v,
            _ => return false,
        };
        let u: f64 = rng.random();
        if u.ln() < ld - *current_ld {
            *current = proposal;
            *current_ld = ld;
            true
        } else {
            false
        }
    };

    let batch = 100;
    let mut accepted_batch = 0;
    for t in 0..config.burn_in {
        if step(&mut current, &mut current_ld, std, rng) {
            accepted_batch += 1;
        }
        if (t + 1) % batch == 0 {
            let rate = accepted_batch as f64 / batch as f64;
            std *= (2.0 * (rate - config.target_acceptance)).exp();
            accepted_batch = 0;
        }
    }

    let mut out = Vec::with_capacity(n);
    let mut accepted = 0usize;
    for _ in 0..n {
        for _ in 0..thinning {
            if step(&mut current, &mut current_ld, std, rng) {
                accepted += 1;
            }
        }
        out.push(current.clone());
    }
    let total = (n * thinning).max(1);
    let acceptance_rate = accepted as f64 / total as f64;
    let (lo, hi) = config.acceptance_band;
    let info = McmcInfo {
        burn_in: config.burn_in,
        thinning,
        proposal_std: std,
        acceptance_rate,
        in_band: acceptance_rate >= lo && acceptance_rate <= hi,
    };
    Ok((out, info))
}

/// `γ_{p,e}` on a matrix cone via the Bartlett construction: `X = T·T*` with
/// `T` lower triangular, `T_ii² ~ Gamma(p − (i−1)d/2, 1)` and every real
/// component below the diagonal `N(0, 1/2)`.
fn bartlett_standard<R: Rng + ?Sized>(alg: Algebra, p: f64, rng: &mut R) -> Element {
    let r = alg.rank();
    let d = alg.peirce() as f64;
    let half = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid");
    let diag: Vec<f64> = (0..r)
        .map(|i| {
            let shape = p - i as f64 * d / 2.0;
            Gamma::new(shape, 1.0).expect("shape checked").sample(rng).sqrt()
        })
        .collect();
    match alg.kind() {
        AlgebraKind::SymReal => {
            let mut t = DMatrix::zeros(r, r);
            for i in 0..r {
                t[(i, i)] = diag[i];
                for j in 0..i {
                    t[(i, j)] = half.sample(rng);
                }
            }
            Element::from_real_symmetric(alg, &(&t * t.transpose())).expect("shape")
        }
        AlgebraKind::HermComplex => {
            let mut t = DMatrix::from_element(r, r, Complex64::new(0.0, 0.0));
            for i in 0..r {
                t[(i, i)] = Complex64::new(diag[i], 0.0);
                for j in 0..i {
                    t[(i, j)] = Complex64::new(half.sample(rng), half.sample(rng));
                }
            }
            Element::from_hermitian(alg, &(&t * t.adjoint())).expect("shape")
        }
        AlgebraKind::Lorentz => unreachable!("Bartlett is for matrix kinds"),
    }
}

/// Singular `γ_{p,e}` with `p = m·d/2`: `X = Σ g_k g_k*` over `m` vectors
/// whose real components are `N(0, 1/2)`. Draws lie on the cone boundary.
fn gaussian_sum_standard<R: Rng + ?Sized>(alg: Algebra, m: usize, rng: &mut R) -> Element {
    let r = alg.rank();
    let half = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid");
    match alg.kind() {
        AlgebraKind::SymReal => {
            let g = DMatrix::from_fn(r, m, |_, _| half.sample(rng));
            Element::from_real_symmetric(alg, &(&g * g.transpose())).expect("shape")
        }
        AlgebraKind::HermComplex => {
            let g = DMatrix::from_fn(r, m, |_, _| Complex64::new(half.sample(rng), half.sample(rng)));
            Element::from_hermitian(alg, &(&g * g.adjoint())).expect("shape")
        }
        AlgebraKind::Lorentz => unreachable!("singular draws are for matrix kinds"),
    }
}

/// `γ_{p,e}` on the Lorentz cone, exactly, in spectral-polar coordinates.
///
/// With `x = λ₁c₁ + λ₂c₂`, `c± = (1, ±ω)/2`, Lebesgue measure is proportional
/// to `(λ₁−λ₂)^(n−1) dλ dω`. Writing `S = λ₁+λ₂`, `T = λ₁/S`, the density
/// factorises as `S^(2p−1)e^(−S)` times `(T(1−T))^q |2T−1|^(n−1)`, with
/// `q = p − dim/r` and `ω` uniform on the sphere. `T` is drawn by rejection from
/// `Beta(q+1, q+1)`.
fn lorentz_spectral_standard<R: Rng + ?Sized>(alg: Algebra, p: f64, rng: &mut R) -> Element {
    let n = alg.dim() - 1;
    let q = p - alg.dim_over_rank();
    let s = Gamma::new(2.0 * p, 1.0).expect("shape checked").sample(rng);
    let beta = Beta::new(q + 1.0, q + 1.0).expect("q > -1");
    let t = loop {
        let b: f64 = beta.sample(rng);
        let w = (2.0 * b - 1.0).abs();
        let u: f64 = rng.random();
        if u < w.powi(n as i32 - 1) {
            break b.max(1.0 - b);
        }
    };
    let mut dir: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    let rho = s * (2.0 * t - 1.0) / 2.0;
    dir.iter_mut().for_each(|v| *v *= rho / norm);
    let mut coords = vec![s / 2.0];
    coords.extend(dir);
    Element::new(alg, coords).expect("length")
}

/// How to sample a Wishart law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WishartMethod {
    /// Bartlett on matrix kinds, spectral on Lorentz.
    Auto,
    Bartlett,
    Spectral,
    Metropolis(McmcConfig),
}

impl WishartMethod {
    fn resolve(&self, alg: Algebra) -> Result<WishartMethod> {
        match (self, alg.kind()) {
            (WishartMethod::Auto, AlgebraKind::Lorentz) => Ok(WishartMethod::Spectral),
            (WishartMethod::Auto, _) => Ok(WishartMethod::Bartlett),
            (WishartMethod::Bartlett, AlgebraKind::Lorentz) => {
                Err(ConeError::Unsupported("Bartlett sampling needs a matrix cone".into()))
            }
            (WishartMethod::Spectral, k) if k != AlgebraKind::Lorentz => {
                Err(ConeError::Unsupported("spectral sampling is implemented for the Lorentz cone".into()))
            }
            (m, _) => Ok(m.clone()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            WishartMethod::Auto => "auto",
            WishartMethod::Bartlett => "bartlett",
            WishartMethod::Spectral => "spectral",
            WishartMethod::Metropolis(_) => "metropolis",
        }
    }
}

/// Exact i.i.d. Wishart draws: `γ_{p,e}` transported to `γ_{p,a}` by `P(a^(−1/2))`.
#[derive(Clone, Debug)]
pub struct WishartSampler {
    params: WishartParams,
    transport: LinearOperator,
    singular: Option<usize>,
}

impl WishartSampler {
    pub fn new(params: &WishartParams) -> Result<Self> {
        require_sampleable_shape(params.p, params.algebra())?;
        let transport = params.a.power(-0.5)?.quad_rep();
        let singular = singular_shape_rank(params.p, params.algebra());
        Ok(WishartSampler { params: params.clone(), transport, singular })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Element {
        let alg = self.params.algebra();
        let standard = match (alg.kind(), self.singular) {
            (_, Some(m)) => gaussian_sum_standard(alg, m, rng),
            (AlgebraKind::Lorentz, None) => lorentz_spectral_standard(alg, self.params.p, rng),
            _ => bartlett_standard(alg, self.params.p, rng),
        };
        self.transport.apply(&standard).expect("same algebra")
    }
}

/// Which envelope the exact GIG rejection sampler uses.
#[derive(Clone, Debug)]
enum GigEnvelope {
    /// `γ_{p,a}` proposal, accept `exp(−⟨b, x⁻¹⟩)`; needs `p > dim/r − 1`.
    Wishart(WishartSampler),
    /// `Z⁻¹` with `Z ~ γ_{−p,b}`, accept `exp(−⟨a, x⟩)`; needs `−p > dim/r − 1`.
    InverseWishart(WishartSampler),
    /// `γ_{s,a}` proposal with `s > max(p, dim/r − 1)`; accept
    /// `det(w)^k e^(−⟨b,w⟩) / sup`, `w = x⁻¹`, `k = s − p`.
    Tilted { proposal: WishartSampler, k: f64, log_sup: f64 },
}

/// Exact i.i.d. GIG draws by rejection from a Wishart-type envelope.
#[derive(Clone, Debug)]
pub struct GigRejectionSampler {
    params: GigParams,
    envelope: GigEnvelope,
}

impl GigRejectionSampler {
    pub fn new(params: &GigParams) -> Result<Self> {
        let alg = params.algebra();
        let bound = continuous_shape_bound(alg);
        let envelope = if params.p > bound {
            GigEnvelope::Wishart(WishartSampler::new(&WishartParams::new(params.p, params.a.clone())?)?)
        } else if -params.p > bound {
            GigEnvelope::InverseWishart(WishartSampler::new(&WishartParams::new(-params.p, params.b.clone())?)?)
        } else {
            let s = bound + 0.5;
            let k = s - params.p;
            let r = alg.rank() as f64;
            let log_sup = k * (r * k.ln() - params.b.log_det()? - r);
            GigEnvelope::Tilted {
                proposal: WishartSampler::new(&WishartParams::new(s, params.a.clone())?)?,
                k,
                log_sup,
            }
        };
        Ok(GigRejectionSampler { params: params.clone(), envelope })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Element> {
        for _ in 0..MAX_REJECTION_ATTEMPTS {
            let (x, log_accept) = match &self.envelope {
                GigEnvelope::Wishart(w) => {
                    let x = w.draw(rng);
                    let Ok(xi) = x.inverse() else { continue };
                    let la = -self.params.b.inner(&xi)?;
                    (x, la)
                }
                GigEnvelope::InverseWishart(w) => {
                    let Ok(x) = w.draw(rng).inverse() else { continue };
                    let la = -self.params.a.inner(&x)?;
                    (x, la)
                }
                GigEnvelope::Tilted { proposal, k, log_sup } => {
                    let x = proposal.draw(rng);
                    let Ok(w) = x.inverse() else { continue };
                    let Ok(ld) = w.log_det() else { continue };
                    let la = k * ld - self.params.b.inner(&w)? - log_sup;
                    (x, la)
                }
            };
            let u: f64 = rng.random();
            if u.ln() < log_accept && x.in_cone(0.0) {
                return Ok(x);
            }
        }
        Err(ConeError::Sampler(format!(
            "GIG rejection sampler exceeded {MAX_REJECTION_ATTEMPTS} attempts"
        )))
    }
}

/// How to sample a GIG law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GigMethod {
    Rejection,
    Metropolis(McmcConfig),
}

impl GigMethod {
    pub fn name(&self) -> &'static str {
        match self {
            GigMethod::Rejection => "rejection",
            GigMethod::Metropolis(_) => "metropolis",
        }
    }
}

/// Parameters as recorded alongside a batch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamsRecord {
    pub family: String,
    pub p: f64,
    pub a: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
}

impl From<&WishartParams> for ParamsRecord {
    fn from(w: &WishartParams) -> Self {
        ParamsRecord { family: "wishart".into(), p: w.p, a: w.a.as_slice().to_vec(), b: None }
    }
}

impl From<&GigParams> for ParamsRecord {
    fn from(g: &GigParams) -> Self {
        ParamsRecord {
            family: "gig".into(),
            p: g.p,
            a: g.a.as_slice().to_vec(),
            b: Some(g.b.as_slice().to_vec()),
        }
    }
}

/// A batch of draws with the metadata needed to reproduce it.
#[derive(Clone, Debug)]
pub struct SampleBatch {
    pub algebra: Algebra,
    pub params: ParamsRecord,
    pub samples: Vec<Element>,
    pub seed: u64,
    pub sampler: String,
    pub mcmc: Option<McmcInfo>,
}

/// JSON sidecar describing a batch.
#[derive(Clone, Debug, Serialize)]
pub struct BatchMetadata<'a> {
    pub schema_version: u32,
    pub algebra: Algebra,
    pub params: &'a ParamsRecord,
    pub n: usize,
    pub seed: u64,
    pub sampler: &'a str,
    pub mcmc: &'a Option<McmcInfo>,
}

pub const SAMPLE_SCHEMA_VERSION: u32 = 1;

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Whether the batch came from a chain rather than i.i.d. draws.
    pub fn is_mcmc(&self) -> bool {
        self.mcmc.is_some()
    }

    /// MCMC acceptance fell outside the configured band.
    pub fn inconclusive(&self) -> bool {
        self.mcmc.as_ref().is_some_and(|m| !m.in_band)
    }

    pub fn metadata(&self) -> BatchMetadata<'_> {
        BatchMetadata {
            schema_version: SAMPLE_SCHEMA_VERSION,
            algebra: self.algebra,
            params: &self.params,
            n: self.samples.len(),
            seed: self.seed,
            sampler: &self.sampler,
            mcmc: &self.mcmc,
        }
    }

    /// Header row of basis labels, then one sample per row at 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = self.algebra.basis_labels().join(",");
        out.push('\n');
        for s in &self.samples {
            let row: Vec<String> = s.as_slice().iter().map(|v| format_f64(*v)).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Values of `f` over the batch.
    pub fn functional(&self, f: impl Fn(&Element) -> f64) -> Vec<f64> {
        self.samples.iter().map(f).collect()
    }

    /// Mean of `f` with its Monte Carlo standard error; chains use their
    /// effective sample size.
    pub fn estimate(&self, f: impl Fn(&Element) -> f64) -> MonteCarloEstimate {
        let values = self.functional(f);
        let n_eff = if self.is_mcmc() { stats::effective_sample_size(&values) } else { values.len() as f64 };
        MonteCarloEstimate {
            mean: stats::mean(&values),
            std_error: (stats::variance(&values) / n_eff).sqrt(),
            n_eff,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_eff: f64,
}

/// `{:.16e}`: 17 significant digits, enough to round-trip any f64.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Draw `n` i.i.d. samples in blocks of [`BLOCK_SIZE`], block `k` on stream `k`.
fn blocked<F>(n: usize, seed: u64, draw: F) -> Result<Vec<Element>>
where
    F: Fn(&mut crate::rng::StreamRng) -> Result<Element> + Sync,
{
    let blocks = n.div_ceil(BLOCK_SIZE);
    let parts: Vec<Result<Vec<Element>>> = (0..blocks)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k as u64);
            let len = BLOCK_SIZE.min(n - k * BLOCK_SIZE);
            (0..len).map(|_| draw(&mut rng)).collect()
        })
        .collect();
    let mut out = Vec::with_capacity(n);
    for part in parts {
        out.extend(part?);
    }
    Ok(out)
}

/// `n` draws from `γ_{p,a}`; at the singular points of a matrix cone they lie on the boundary.
pub fn sample_wishart(params: &WishartParams, n: usize, seed: u64, method: &WishartMethod) -> Result<SampleBatch> {
    let alg = params.algebra();
    let method = method.resolve(alg)?;
    match method {
        // a chain needs a density, which singular laws lack
        WishartMethod::Metropolis(_) => require_shape(params.p, alg)?,
        _ => require_sampleable_shape(params.p, alg)?,
    }
    let singular = singular_shape_rank(params.p, alg).is_some();
    let (samples, mcmc) = match &method {
        WishartMethod::Metropolis(config) => {
            let mut rng = stream_rng(seed, 0);
            let start = params.mean()?;
            let (s, info) = metropolis(start, n, config, |x| wishart_log_density_unnorm(params, x), &mut rng)?;
            (s, Some(info))
        }
        _ => {
            let sampler = WishartSampler::new(params)?;
            (blocked(n, seed, |rng| Ok(sampler.draw(rng)))?, None)
        }
    };
    Ok(SampleBatch {
        algebra: alg,
        params: params.into(),
        samples,
        seed,
        sampler: if singular { "wishart-singular".into() } else { format!("wishart-{}", method.name()) },
        mcmc,
    })
}

/// `n` draws from `μ_{p,a,b}`.
pub fn sample_gig(params: &GigParams, n: usize, seed: u64, method: &GigMethod) -> Result<SampleBatch> {
    let alg = params.algebra();
    let (samples, mcmc) = match method {
        GigMethod::Metropolis(config) => {
            let mut rng = stream_rng(seed, 0);
            let start = Element::identity(alg);
            let (s, info) = metropolis(start, n, config, |x| gig_log_density_unnorm(params, x), &mut rng)?;
            (s, Some(info))
        }
        GigMethod::Rejection => {
            let sampler = GigRejectionSampler::new(params)?;
            (blocked(n, seed, |rng| sampler.draw(rng))?, None)
        }
    };
    Ok(SampleBatch {
        algebra: alg,
        params: params.into(),
        samples,
        seed,
        sampler: format!("gig-{}", method.name()),
        mcmc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn r1() -> Algebra {
        Algebra::sym_real(1).unwrap()
    }

    fn s(v: f64) -> Element {
        Element::new(r1(), vec![v]).unwrap()
    }

    #[test]
    fn wishart_density_examples() {
        let w = WishartParams::new(1.0, s(1.0)).unwrap();
        assert_relative_eq!(wishart_log_density(&w, &s(1.0)).unwrap(), -1.0, epsilon = 1e-14);
        let w = WishartParams::new(2.0, s(1.0)).unwrap();
        assert_relative_eq!(wishart_log_density(&w, &s(2.0)).unwrap(), 2f64.ln() - 2.0, epsilon = 1e-14);
    }

    #[test]
    fn wishart_density_integrates_to_one_rank1() {
        let w = WishartParams::new(2.5, s(1.0)).unwrap();
        let r = integrate(
            |x| if x > 0.0 { wishart_log_density(&w, &s(x)).unwrap().exp() } else { 0.0 },
            0.0,
            50.0,
            1e-13,
            1e-12,
        );
        assert_relative_eq!(r.value, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn density_preconditions() {
        let alg = Algebra::sym_real(2).unwrap();
        let w = WishartParams::new(0.5, Element::identity(alg)).unwrap();
        assert!(matches!(
            wishart_log_density(&w, &Element::identity(alg)),
            Err(ConeError::ShapeOutOfRange { .. })
        ));
        let w = WishartParams::new(2.0, Element::identity(alg)).unwrap();
        let outside = Element::diag(alg, &[1.0, -1.0]).unwrap();
        assert!(matches!(wishart_log_density(&w, &outside), Err(ConeError::NotInCone { .. })));
        assert!(WishartParams::new(2.0, outside).is_err());
    }

    #[test]
    fn gamma_cone_examples() {
        for &p in &[0.5, 1.0, 3.7] {
            assert_relative_eq!(gamma_cone(p, r1()).unwrap(), libm::tgamma(p), max_relative = 1e-13);
        }
        let alg = Algebra::sym_real(2).unwrap();
        let expected = (2.0 * std::f64::consts::PI).sqrt() * std::f64::consts::PI.sqrt() / 2.0;
        assert_relative_eq!(gamma_cone(2.0, alg).unwrap(), expected, max_relative = 1e-13);
        assert!(gamma_cone(0.5, alg).is_err());
    }

    #[test]
    fn laplace_examples() {
        let alg = Algebra::sym_real(2).unwrap();
        let e = Element::identity(alg);
        let w = WishartParams::new(1.5, e.clone()).unwrap();
        assert_eq!(wishart_laplace(&w, &Element::zeros(alg)).unwrap(), 1.0);
        assert_relative_eq!(wishart_laplace(&w, &e).unwrap(), 0.125, max_relative = 1e-14);
        let w1 = WishartParams::new(2.0, s(1.0)).unwrap();
        assert_relative_eq!(wishart_laplace(&w1, &s(1.0)).unwrap(), 0.25, max_relative = 1e-14);
        assert!(wishart_laplace(&w1, &s(-2.0)).is_err());
    }

    #[test]
    fn gig_density_examples() {
        let g = GigParams::new(-1.0, s(1.0), s(1.0)).unwrap();
        assert_relative_eq!(gig_log_density_unnorm(&g, &s(1.0)).unwrap(), -2.0, epsilon = 1e-14);
        let alg = Algebra::herm_complex(2).unwrap();
        let a = Element::diag(alg, &[1.0, 2.0]).unwrap();
        let b = Element::diag(alg, &[3.0, 0.5]).unwrap();
        let g = GigParams::new(0.7, a.clone(), b.clone()).unwrap();
        let v = gig_log_density_unnorm(&g, &Element::identity(alg)).unwrap();
        assert_relative_eq!(v, -a.trace() - b.trace(), epsilon = 1e-13);
    }

    #[test]
    fn gig_norm_constant_closed_form() {
        for &(a, b) in &[(1.0, 1.0), (2.0, 0.5), (0.3, 4.0)] {
            let g = GigParams::new(0.5, s(a), s(b)).unwrap();
            let expected = (std::f64::consts::PI / a).sqrt() * (-2.0 * (a * b).sqrt()).exp();
            assert_relative_eq!(gig_norm_constant_rank1(&g).unwrap(), expected, max_relative = 1e-8);
        }
    }

    #[test]
    fn gig_norm_constant_symmetry_and_limit() {
        let g = GigParams::new(1.7, s(2.0), s(2.0)).unwrap();
        let k1 = gig_norm_constant_rank1(&g).unwrap();
        let k2 = gig_norm_constant_rank1(&g.reciprocal()).unwrap();
        assert_relative_eq!(k1, k2, max_relative = 1e-10);
        let g = GigParams::new(1.0, s(2.0), s(1e-12)).unwrap();
        assert_relative_eq!(gig_norm_constant_rank1(&g).unwrap(), 0.5, max_relative = 1e-6);
        let alg = Algebra::sym_real(2).unwrap();
        let e = Element::identity(alg);
        assert!(gig_norm_constant_rank1(&GigParams::new(1.0, e.clone(), e).unwrap()).is_err());
    }

    #[test]
    fn gig_reciprocal_density_identity() {
        // μ_{p,a,b}(x) dx = μ_{−p,b,a}(1/x) · x^(−2) dx, as densities:
        // f_{p,a,b}(x)/K_p(a,b) = f_{−p,b,a}(1/x)/K_{−p}(b,a) · x^(−2)
        let g = GigParams::new(-1.3, s(0.7), s(2.1)).unwrap();
        let h = g.reciprocal();
        let (lk_g, lk_h) = (gig_log_norm_constant_rank1(&g).unwrap(), gig_log_norm_constant_rank1(&h).unwrap());
        for &x in &[0.1, 0.5, 1.0, 3.0, 9.0] {
            let lhs = gig_log_density_unnorm(&g, &s(x)).unwrap() - lk_g;
            let rhs = gig_log_density_unnorm(&h, &s(1.0 / x)).unwrap() - lk_h - 2.0 * x.ln();
            assert_relative_eq!(lhs, rhs, epsilon = 1e-8);
        }
    }

    #[test]
    fn gig_cdf_is_monotone_to_one() {
        let g = GigParams::new(-1.0, s(1.0), s(1.0)).unwrap();
        let pts = [5.0, 0.2, 1.0, 50.0, 0.01];
        let c = gig_cdf_rank1(&g, &pts).unwrap();
        assert!(c[4] < c[1] && c[1] < c[2] && c[2] < c[0] && c[0] < c[3]);
        assert_relative_eq!(c[3], 1.0, epsilon = 1e-8);
        assert!(c[4] < 1e-10);
    }

    #[test]
    fn lorentz_spectral_sampler_mean() {
        let alg = Algebra::lorentz(3).unwrap();
        let a = Element::new(alg, vec![2.0, 0.5, -0.3, 0.2]).unwrap();
        let w = WishartParams::new(2.2, a).unwrap();
        let batch = sample_wishart(&w, 40_000, 5, &WishartMethod::Auto).unwrap();
        let mean = w.mean().unwrap();
        for k in 0..alg.dim() {
            let est = batch.estimate(|x| x.as_slice()[k]);
            assert!((est.mean - mean.as_slice()[k]).abs() < 4.0 * est.std_error, "coord {k}: {est:?}");
        }
    }

    #[test]
    fn samples_are_in_cone_and_seeded() {
        let alg = Algebra::herm_complex(3).unwrap();
        let e = Element::identity(alg);
        let w = WishartParams::new(3.0, e.clone()).unwrap();
        let b1 = sample_wishart(&w, 3000, 9, &WishartMethod::Auto).unwrap();
        let b2 = sample_wishart(&w, 3000, 9, &WishartMethod::Auto).unwrap();
        assert_eq!(b1.samples, b2.samples);
        assert!(b1.samples.iter().all(|x| x.in_cone(0.0)));
        let g = GigParams::new(0.3, e.clone(), e).unwrap();
        let gb = sample_gig(&g, 500, 1, &GigMethod::Rejection).unwrap();
        assert!(gb.samples.iter().all(|x| x.in_cone(0.0)));
    }

    #[test]
    fn sampler_shape_errors() {
        let alg = Algebra::sym_real(3).unwrap();
        let w = WishartParams::new(0.9, Element::identity(alg)).unwrap();
        assert!(matches!(
            sample_wishart(&w, 10, 1, &WishartMethod::Auto),
            Err(ConeError::ShapeOutOfRange { .. })
        ));
        let lw = WishartParams::new(2.0, Element::identity(Algebra::lorentz(2).unwrap())).unwrap();
        assert!(sample_wishart(&lw, 10, 1, &WishartMethod::Bartlett).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let alg = Algebra::sym_real(2).unwrap();
        let w = WishartParams::new(2.0, Element::identity(alg)).unwrap();
        let batch = sample_wishart(&w, 5, 3, &WishartMethod::Auto).unwrap();
        let csv = batch.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "e11,e22,s12");
        for (line, x) in lines.zip(&batch.samples) {
            let parsed: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
            assert_eq!(parsed.as_slice(), x.as_slice());
        }
    }
}
