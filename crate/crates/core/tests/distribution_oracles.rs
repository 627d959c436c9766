//! Statistical and quadrature oracles for the Wishart and GIG laws.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use symcone::distributions::*;
use symcone::rng::stream_rng;
use symcone::stats::{ks_one_sample, ks_two_sample};
use symcone::{Algebra, Element};

fn sym(r: usize) -> Algebra {
    Algebra::sym_real(r).unwrap()
}

/// Composite Simpson rule with `m` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
    let h = (b - a) / m as f64;
    let mut s = f(a) + f(b);
    for i in 1..m {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// `∫ (det x)^(p − 3/2) e^(−tr x) dx` over the 2×2 cone in orthonormal
/// coordinates `(x11, x22, s)`, `s = √2·x12`, by nested Simpson rules.
/// The inner variable is `s = √(2 x11 x22)·sin θ`.
fn sym2_gamma_by_grid(p: f64) -> f64 {
    let q = p - 1.5;
    let inner = |x11: f64, x22: f64| {
        let r = (2.0 * x11 * x22).sqrt();
        let half = std::f64::consts::FRAC_PI_2;
        simpson(
            |t: f64| {
                let det = x11 * x22 * t.cos().powi(2);
                if det <= 0.0 {
                    0.0
                } else {
                    det.powf(q) * r * t.cos()
                }
            },
            -half,
            half,
            64,
        )
    };
    simpson(
        |x11| simpson(|x22| inner(x11, x22) * (-x11 - x22).exp(), 0.0, 45.0, 600),
        0.0,
        45.0,
        600,
    )
}

#[test]
fn gamma_cone_matches_three_dimensional_quadrature() {
    let exact = (2.0 * std::f64::consts::PI).sqrt() * std::f64::consts::PI.sqrt() / 2.0;
    let grid = sym2_gamma_by_grid(2.0);
    assert!((grid - exact).abs() < 1e-5 * exact, "grid {grid} vs {exact}");
    assert!((gamma_cone(2.0, sym(2)).unwrap() - exact).abs() < 1e-13 * exact);
    let p = 2.7;
    let grid = sym2_gamma_by_grid(p);
    assert!((grid - gamma_cone(p, sym(2)).unwrap()).abs() < 1e-4 * grid);
}

/// Importance sampling with `x = L·Lᵀ`, `L11, L22 ~ Exp(1)`, `L21 ~ N(0, 1)`.
/// In coordinates `(x11, x22, √2·x12)` the proposal density is
/// `q_L(L) / (4·√2·L11²·L22)`.
#[test]
fn wishart_density_normalises_by_importance_sampling() {
    let alg = sym(2);
    let a = Element::new(alg, vec![1.3, 0.7, 0.4]).unwrap();
    let w = WishartParams::new(1.9, a).unwrap();
    let mut rng = stream_rng(99, 0);
    let n = 200_000;
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    for _ in 0..n {
        let l11: f64 = rng.sample(Exp1);
        let l22: f64 = rng.sample(Exp1);
        let l21: f64 = rng.sample(StandardNormal);
        let x = Element::new(alg, vec![l11 * l11, l21 * l21 + l22 * l22, std::f64::consts::SQRT_2 * l11 * l21]).unwrap();
        let log_q_l = -l11 - l22 - 0.5 * l21 * l21 - 0.5 * (2.0 * std::f64::consts::PI).ln();
        let log_q = log_q_l - (4.0 * std::f64::consts::SQRT_2 * l11 * l11 * l22).ln();
        let wgt = (wishart_log_density(&w, &x).unwrap() - log_q).exp();
        sum += wgt;
        sum2 += wgt * wgt;
    }
    let mean = sum / n as f64;
    let se = ((sum2 / n as f64 - mean * mean) / n as f64).sqrt();
    assert!((mean - 1.0).abs() < 0.02, "IS estimate {mean} ± {se}");
}

#[test]
fn rank1_wishart_mean() {
    let w = WishartParams::new(1.0, Element::identity(sym(1))).unwrap();
    let n = 100_000;
    let b = sample_wishart(&w, n, 1, &WishartMethod::Auto).unwrap();
    let m = b.estimate(|x| x.trace()).mean;
    assert!((m - 1.0).abs() < 4.0 / (n as f64).sqrt(), "{m}");
}

#[test]
fn sym2_wishart_mean_is_p_times_a_inverse() {
    let alg = sym(2);
    let w = WishartParams::new(2.0, Element::identity(alg)).unwrap();
    let n = 100_000;
    let b = sample_wishart(&w, n, 2, &WishartMethod::Auto).unwrap();
    let target = [2.0, 2.0, 0.0];
    for k in 0..3 {
        let m = b.estimate(|x| x.as_slice()[k]).mean;
        assert!((m - target[k]).abs() < 5.0 / (n as f64).sqrt(), "coord {k}: {m}");
    }
}

/// γ_{p,a} on 2×2 real symmetric matrices is the classical Wishart
/// `W(k = 2p, Σ = (2a)⁻¹)`, whose entries satisfy
/// `Cov(W_ij, W_kl) = k(Σ_ik Σ_jl + Σ_il Σ_jk)`.
#[test]
fn sym2_wishart_matches_classical_parameterisation() {
    let alg = sym(2);
    let a = Element::new(alg, vec![1.5, 0.8, 0.5]).unwrap();
    let p = 2.3;
    let w = WishartParams::new(p, a.clone()).unwrap();
    let sigma = a.inverse().unwrap().scale(0.5).to_real_symmetric().unwrap();
    let k = 2.0 * p;
    let b = sample_wishart(&w, 300_000, 3, &WishartMethod::Auto).unwrap();
    let mats: Vec<_> = b.samples.iter().map(|x| x.to_real_symmetric().unwrap()).collect();
    for (i, j) in [(0, 0), (1, 1), (0, 1)] {
        let vals: Vec<f64> = mats.iter().map(|m| m[(i, j)]).collect();
        let mean = symcone::stats::mean(&vals);
        let var = symcone::stats::variance(&vals);
        let mean_exact = k * sigma[(i, j)];
        let var_exact = k * (sigma[(i, j)] * sigma[(i, j)] + sigma[(i, i)] * sigma[(j, j)]);
        assert!((mean - mean_exact).abs() < 0.01 * mean_exact.abs().max(0.1), "mean {i}{j}: {mean} vs {mean_exact}");
        assert!((var - var_exact).abs() < 0.03 * var_exact, "var {i}{j}: {var} vs {var_exact}");
    }
}

fn laplace_probes_agree(w: &WishartParams, batch: &SampleBatch, probes: &[Element]) {
    for sigma in probes {
        let exact = wishart_laplace(w, sigma).unwrap();
        let est = batch.estimate(|x| (-sigma.inner(x).unwrap()).exp());
        assert!(
            (est.mean - exact).abs() < 3.0 * est.std_error,
            "{}: {} vs {exact} (se {})",
            batch.sampler,
            est.mean,
            est.std_error
        );
    }
}

#[test]
fn laplace_probes_on_every_kind() {
    let cases = [
        (Algebra::herm_complex(2).unwrap(), 2.5, vec![1.2, 0.9, 0.2, -0.3]),
        (Algebra::herm_complex(3).unwrap(), 3.5, vec![1.0, 1.5, 0.8, 0.1, 0.2, 0.0, 0.1, -0.2, 0.1]),
        (sym(3), 1.6, vec![1.0, 2.0, 1.5, 0.3, -0.2, 0.4]),
        (Algebra::lorentz(3).unwrap(), 1.8, vec![2.0, 0.4, -0.6, 0.3]),
    ];
    for (alg, p, a) in cases {
        let a = Element::new(alg, a).unwrap();
        let w = WishartParams::new(p, a).unwrap();
        let b = sample_wishart(&w, 50_000, 4, &WishartMethod::Auto).unwrap();
        assert!(b.samples.iter().all(|x| x.in_cone(0.0)));
        let e = Element::identity(alg);
        let mut skew = e.scale(0.7);
        skew = skew + Element::basis(alg, alg.dim() - 1).scale(0.3);
        laplace_probes_agree(&w, &b, &[e.scale(0.3), skew, e.scale(2.0)]);
    }
}

#[test]
fn lorentz_exact_and_metropolis_samplers_agree() {
    let alg = Algebra::lorentz(2).unwrap();
    let a = Element::new(alg, vec![1.5, -0.3, 0.6]).unwrap();
    let w = WishartParams::new(2.0, a).unwrap();
    let exact = sample_wishart(&w, 20_000, 5, &WishartMethod::Spectral).unwrap();
    let chain = sample_wishart(&w, 20_000, 6, &WishartMethod::Metropolis(McmcConfig::default())).unwrap();
    assert!(!chain.inconclusive());
    for f in [|x: &Element| x.trace(), |x: &Element| x.det()] {
        let (u, v) = (exact.functional(f), chain.functional(f));
        let ess = symcone::stats::effective_sample_size(&v);
        let r = ks_two_sample(&u, &v, None, Some(ess));
        assert!(r.p_value > 0.01, "{r:?}");
    }
}

fn one(v: f64) -> Element {
    Element::new(sym(1), vec![v]).unwrap()
}

#[test]
fn gig_rejection_matches_quadrature_cdf() {
    // p = −1 is the inverse-Wishart envelope, p = 2 the Wishart one, p = 0 the tilted one
    for (k, &(p, a, b)) in [(-1.0, 1.0, 1.0), (2.0, 0.5, 3.0), (0.0, 1.5, 0.4)].iter().enumerate() {
        let g = GigParams::new(p, one(a), one(b)).unwrap();
        let n = 10_000;
        let batch = sample_gig(&g, n, 10 + k as u64, &GigMethod::Rejection).unwrap();
        let xs = batch.functional(|x| x.trace());
        let cdf = gig_cdf_rank1(&g, &xs).unwrap();
        let mut pairs: Vec<(f64, f64)> = xs.iter().copied().zip(cdf).collect();
        pairs.sort_by(|l, r| l.0.total_cmp(&r.0));
        let sorted_cdf: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let d = symcone::stats::ks_statistic_sorted_cdf(&sorted_cdf);
        assert!(d < 1.63 / (n as f64).sqrt(), "p={p}: D = {d}");
        let r = ks_one_sample(&xs, |x| gig_cdf_rank1(&g, &[x]).unwrap()[0]);
        assert!((r.statistic - d).abs() < 1e-9);
    }
}

#[test]
fn gig_metropolis_matches_quadrature_cdf_rank1() {
    let g = GigParams::new(-1.0, one(1.0), one(1.0)).unwrap();
    let chain = sample_gig(&g, 20_000, 21, &GigMethod::Metropolis(McmcConfig::default())).unwrap();
    let v = chain.functional(|x| x.trace());
    let ess = symcone::stats::effective_sample_size(&v);
    assert!(ess > 10_000.0, "ess {ess}");
    let d = ks_one_sample(&v, |x| gig_cdf_rank1(&g, &[x]).unwrap()[0]).statistic;
    assert!(d < 1.63 / ess.sqrt(), "D = {d}, ess {ess}");
}

#[test]
fn gig_reciprocal_property_on_det() {
    let alg = sym(2);
    let a = Element::new(alg, vec![1.0, 2.0, 0.3]).unwrap();
    let b = Element::new(alg, vec![0.6, 0.9, -0.2]).unwrap();
    for p in [0.3, 2.0, -1.7] {
        let g = GigParams::new(p, a.clone(), b.clone()).unwrap();
        let xs = sample_gig(&g, 10_000, 30, &GigMethod::Rejection).unwrap();
        let ys = sample_gig(&g.reciprocal(), 10_000, 31, &GigMethod::Rejection).unwrap();
        let inv_det: Vec<f64> = xs.samples.iter().map(|x| 1.0 / x.det()).collect();
        let r = ks_two_sample(&inv_det, &ys.functional(|y| y.det()), None, None);
        assert!(r.p_value > 0.01, "p={p}: {r:?}");
    }
}

#[test]
fn gig_metropolis_matches_rejection_rank2() {
    let alg = sym(2);
    let e = Element::identity(alg);
    let g = GigParams::new(-2.0, e.clone(), e).unwrap();
    let exact = sample_gig(&g, 10_000, 40, &GigMethod::Rejection).unwrap();
    let chain = sample_gig(&g, 20_000, 41, &GigMethod::Metropolis(McmcConfig::default())).unwrap();
    assert!(chain.mcmc.as_ref().unwrap().in_band);
    let (u, v) = (exact.functional(|x| x.trace()), chain.functional(|x| x.trace()));
    let ess = symcone::stats::effective_sample_size(&v);
    assert!(ks_two_sample(&u, &v, None, Some(ess)).p_value > 0.01);
}

#[test]
fn batches_are_in_cone_and_reproducible_across_thread_counts() {
    let alg = Algebra::herm_complex(2).unwrap();
    let g = GigParams::new(0.4, Element::identity(alg), Element::identity(alg).scale(2.0)).unwrap();
    let one_thread = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let b1 = one_thread.install(|| sample_gig(&g, 5000, 8, &GigMethod::Rejection).unwrap());
    let b4 = four.install(|| sample_gig(&g, 5000, 8, &GigMethod::Rejection).unwrap());
    assert_eq!(b1.samples, b4.samples);
    assert!(b1.samples.iter().all(|x| x.in_cone(0.0)));
}


#[test]
fn singular_wishart_points_have_the_right_laplace_transform_and_rank() {
    let cases = [
        (sym(3), 0.5, 1, vec![1.0, 2.0, 1.5, 0.3, -0.2, 0.4]),
        (sym(3), 1.0, 2, vec![1.0, 2.0, 1.5, 0.3, -0.2, 0.4]),
        (Algebra::herm_complex(3).unwrap(), 1.0, 1, vec![1.0, 1.5, 0.8, 0.1, 0.2, 0.0, 0.1, -0.2, 0.1]),
        (Algebra::herm_complex(3).unwrap(), 2.0, 2, vec![1.0, 1.5, 0.8, 0.1, 0.2, 0.0, 0.1, -0.2, 0.1]),
    ];
    for (alg, p, m, a) in cases {
        assert_eq!(singular_shape_rank(p, alg), Some(m));
        let w = WishartParams::new(p, Element::new(alg, a).unwrap()).unwrap();
        let b = sample_wishart(&w, 50_000, 7, &WishartMethod::Auto).unwrap();
        assert_eq!(b.sampler, "wishart-singular");
        for x in b.samples.iter().take(100) {
            let ev = x.eigenvalues();
            let positive = ev.iter().filter(|&&l| l > 1e-9 * ev[0]).count();
            assert_eq!(positive, m, "{alg} p={p}: {ev:?}");
        }
        let e = Element::identity(alg);
        laplace_probes_agree(&w, &b, &[e.scale(0.3), e.scale(1.0) + Element::basis(alg, 1).scale(0.5), e.scale(2.0)]);
        assert!(sample_wishart(&w, 10, 7, &WishartMethod::Metropolis(McmcConfig::default())).is_err());
    }
    assert_eq!(singular_shape_rank(0.7, sym(3)), None);
    assert!(sample_wishart(&WishartParams::new(0.7, Element::identity(sym(3))).unwrap(), 10, 1, &WishartMethod::Auto).is_err());
}
