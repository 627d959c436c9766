//! Scalar statistics used by the sampler and independence checks.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::rng::stream_rng;

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// One-sample Kolmogorov–Smirnov statistic `sup |F_n − F|`.
pub fn ks_statistic<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> f64 {
    let xs = sorted(xs);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0, |acc: f64, (i, &x)| {
        let f = cdf(x);
        let above = (i as f64 + 1.0) / n - f;
        let below = f - i as f64 / n;
        acc.max(above).max(below)
    })
}

/// One-sample statistic against CDF values already evaluated at the sorted sample.
pub fn ks_statistic_sorted_cdf(cdf_at_sorted: &[f64]) -> f64 {
    let n = cdf_at_sorted.len() as f64;
    cdf_at_sorted.iter().enumerate().fold(0.0, |acc: f64, (i, &f)| {
        acc.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    })
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample_statistic(xs: &[f64], ys: &[f64]) -> f64 {
    let xs = sorted(xs);
    let ys = sorted(ys);
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let t = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= t {
            i += 1;
        }
        while j < ys.len() && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Survival function of the Kolmogorov distribution, `P(K > λ)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi theta form, converges fast for small λ
        let pi2 = std::f64::consts::PI.powi(2);
        let w = (2.0 * std::f64::consts::PI).sqrt() / lambda;
        let cdf: f64 = (0..20)
            .map(|k| {
                let odd = (2 * k + 1) as f64;
                (-odd * odd * pi2 / (8.0 * lambda * lambda)).exp()
            })
            .sum::<f64>()
            * w;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let s: f64 = (1..=100)
            .map(|k| {
                let k = k as f64;
                let sign = if k as u64 % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * k * k * lambda * lambda).exp()
            })
            .sum();
        (2.0 * s).clamp(0.0, 1.0)
    }
}

/// Asymptotic p-value for a KS statistic `d` at effective size `n_eff`,
/// with Stephens' small-sample correction.
pub fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    let sn = n_eff.sqrt();
    kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample KS test; `n_eff_*` override the sample sizes (e.g. with MCMC
/// effective sample sizes).
pub fn ks_two_sample(xs: &[f64], ys: &[f64], n_eff_x: Option<f64>, n_eff_y: Option<f64>) -> KsResult {
    let statistic = ks_two_sample_statistic(xs, ys);
    let n = n_eff_x.unwrap_or(xs.len() as f64);
    let m = n_eff_y.unwrap_or(ys.len() as f64);
    KsResult { statistic, p_value: ks_p_value(statistic, n * m / (n + m)) }
}

/// One-sample KS test against a CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> KsResult {
    let statistic = ks_statistic(xs, cdf);
    KsResult { statistic, p_value: ks_p_value(statistic, xs.len() as f64) }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// Effective sample size of a stationary series via Geyer's initial positive
/// sequence estimator, capped at `n`.
pub fn effective_sample_size(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 4 {
        return n as f64;
    }
    let m = mean(xs);
    let c: Vec<f64> = xs.iter().map(|x| x - m).collect();
    let var = c.iter().map(|x| x * x).sum::<f64>() / n as f64;
    if var == 0.0 {
        return n as f64;
    }
    let rho = |lag: usize| -> f64 {
        c[..n - lag].iter().zip(&c[lag..]).map(|(a, b)| a * b).sum::<f64>() / (n as f64 * var)
    };
    let mut tau = -1.0;
    let mut k = 0;
    while 2 * k + 1 < n {
        let pair = rho(2 * k) + rho(2 * k + 1);
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        k += 1;
    }
    (n as f64 / tau.max(1.0)).min(n as f64)
}

/// Fenwick tree over `[f64; 4]` payloads.
struct Fenwick {
    tree: Vec<[f64; 4]>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Fenwick { tree: vec![[0.0; 4]; n + 1] }
    }

    fn add(&mut self, idx: usize, v: [f64; 4]) {
        let mut i = idx + 1;
        while i < self.tree.len() {
            for k in 0..4 {
                self.tree[i][k] += v[k];
            }
            i += i & i.wrapping_neg();
        }
    }

    /// Sum over positions `< idx`.
    fn prefix(&self, idx: usize) -> [f64; 4] {
        let mut out = [0.0; 4];
        let mut i = idx;
        while i > 0 {
            for k in 0..4 {
                out[k] += self.tree[i][k];
            }
            i -= i & i.wrapping_neg();
        }
        out
    }
}

/// Row sums `Σ_j |v_i − v_j|` for every `i`, in O(n log n).
fn abs_row_sums(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let total: f64 = v.iter().sum();
    let mut out = vec![0.0; n];
    let mut prefix = 0.0;
    for (k, &i) in order.iter().enumerate() {
        let x = v[i];
        let below = x * k as f64 - prefix;
        let above = (total - prefix - x) - x * (n - k - 1) as f64;
        out[i] = below + above;
        prefix += x;
    }
    out
}

/// Dense ranks (ties share a rank) and the number of distinct values.
fn dense_ranks(v: &[f64]) -> (Vec<usize>, usize) {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0; v.len()];
    let mut r = 0;
    for (k, &i) in order.iter().enumerate() {
        if k > 0 && v[i] != v[order[k - 1]] {
            r += 1;
        }
        ranks[i] = r;
    }
    (ranks, r + 1)
}

/// Precomputed state for the squared sample distance covariance (V-statistic)
/// of two univariate samples, evaluable under permutations of the second.
///
/// Uses `Σ_{i,j} |x_i−x_j||y_i−y_j| = 2 Σ_{i<j in x-order} (x_j−x_i)|y_j−y_i|`,
/// split by the sign of `y_j − y_i` and accumulated with a Fenwick tree over
/// y-ranks, so one evaluation costs O(n log n).
pub struct DistanceCovariance {
    x: Vec<f64>,
    y: Vec<f64>,
    x_order: Vec<usize>,
    y_rank: Vec<usize>,
    y_levels: usize,
    a_row: Vec<f64>,
    b_row: Vec<f64>,
    a_total: f64,
    b_total: f64,
}

impl DistanceCovariance {
    pub fn new(x: &[f64], y: &[f64]) -> Self {
        assert_eq!(x.len(), y.len(), "samples must pair up");
        assert!(!x.is_empty(), "empty sample");
        // centring is harmless (translation invariance) and tames cancellation
        let (mx, my) = (mean(x), mean(y));
        let x: Vec<f64> = x.iter().map(|v| v - mx).collect();
        let y: Vec<f64> = y.iter().map(|v| v - my).collect();
        let mut x_order: Vec<usize> = (0..x.len()).collect();
        x_order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
        let (y_rank, y_levels) = dense_ranks(&y);
        let a_row = abs_row_sums(&x);
        let b_row = abs_row_sums(&y);
        let a_total = a_row.iter().sum();
        let b_total = b_row.iter().sum();
        DistanceCovariance { x, y, x_order, y_rank, y_levels, a_row, b_row, a_total, b_total }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// dCov²ₙ with `y` re-indexed by `perm` (`y_i ← y_{perm[i]}`), or unpermuted.
    pub fn dcov2(&self, perm: Option<&[usize]>) -> f64 {
        let n = self.x.len();
        let idx = |i: usize| perm.map_or(i, |p| p[i]);
        let mut tree = Fenwick::new(self.y_levels);
        let mut all = [0.0; 4];
        let mut cross = 0.0;
        for &i in &self.x_order {
            let xi = self.x[i];
            let yi = self.y[idx(i)];
            let ri = self.y_rank[idx(i)];
            // sums over earlier points with smaller y: [count, Σy, Σx, Σxy]
            let lo = tree.prefix(ri);
            let hi = [all[0] - lo[0], all[1] - lo[1], all[2] - lo[2], all[3] - lo[3]];
            let term = |s: [f64; 4]| xi * yi * s[0] - xi * s[1] - yi * s[2] + s[3];
            cross += term(lo) - term(hi);
            let v = [1.0, yi, xi, xi * yi];
            tree.add(ri, v);
            for k in 0..4 {
                all[k] += v[k];
            }
        }
        let nf = n as f64;
        let s1 = 2.0 * cross / (nf * nf);
        let s2 = self.a_total * self.b_total / nf.powi(4);
        let s3: f64 = (0..n).map(|i| self.a_row[i] * self.b_row[idx(i)]).sum::<f64>() / nf.powi(3);
        (s1 + s2 - 2.0 * s3).max(0.0)
    }
}

/// Sample distance correlation of two univariate samples.
pub fn distance_correlation(x: &[f64], y: &[f64]) -> f64 {
    let vxy = DistanceCovariance::new(x, y).dcov2(None);
    let vx = DistanceCovariance::new(x, x).dcov2(None);
    let vy = DistanceCovariance::new(y, y).dcov2(None);
    if vx <= 0.0 || vy <= 0.0 {
        return 0.0;
    }
    (vxy / (vx * vy).sqrt()).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PermutationResult {
    pub statistic: f64,
    pub p_value: f64,
    pub permutations: usize,
}

/// Permutation test of independence using distance correlation.
///
/// Permutation `k` draws from stream `k` of `seed`, so the p-value does not
/// depend on how the work is scheduled.
pub fn dcor_permutation_test(x: &[f64], y: &[f64], permutations: usize, seed: u64) -> PermutationResult {
    let ws = DistanceCovariance::new(x, y);
    let observed = ws.dcov2(None);
    let vx = DistanceCovariance::new(x, x).dcov2(None);
    let vy = DistanceCovariance::new(y, y).dcov2(None);
    let statistic = if vx > 0.0 && vy > 0.0 { (observed / (vx * vy).sqrt()).sqrt() } else { 0.0 };
    let n = x.len();
    let threshold = observed * (1.0 - 1e-12);
    let exceed = (0..permutations)
        .into_par_iter()
        .filter(|&k| {
            let mut rng = stream_rng(seed, k as u64);
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            ws.dcov2(Some(&perm)) >= threshold
        })
        .count();
    PermutationResult {
        statistic,
        p_value: (1 + exceed) as f64 / (1 + permutations) as f64,
        permutations,
    }
}
