//! Empirical summaries and nonparametric tests used by the experiments.

use libm::erfc;

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return f64::NAN;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

pub fn std_dev(x: &[f64]) -> f64 {
    variance(x).sqrt()
}

fn sorted(x: &[f64]) -> Vec<f64> {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Linear-interpolation quantile of already sorted data (R type 7).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quantile(x: &[f64], p: f64) -> f64 {
    quantile_sorted(&sorted(x), p)
}

pub fn quantiles(x: &[f64], ps: &[f64]) -> Vec<f64> {
    let s = sorted(x);
    ps.iter().map(|&p| quantile_sorted(&s, p)).collect()
}

pub fn median(x: &[f64]) -> f64 {
    quantile(x, 0.5)
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Complementary Kolmogorov distribution, `P(K > lambda)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    let sq = n_eff.sqrt();
    kolmogorov_q((sq + 0.12 + 0.11 / sq) * d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF.
pub fn ks_one_sample(x: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let s = sorted(x);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in s.iter().enumerate() {
        let f = cdf(v);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    KsResult {
        statistic: d,
        p_value: ks_p_value(d, n),
    }
}

/// Two-sample Kolmogorov–Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let a = sorted(a);
    let b = sorted(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    KsResult {
        statistic: d,
        p_value: ks_p_value(d, na * nb / (na + nb)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MannWhitney {
    /// U statistic of the first sample.
    pub u: f64,
    pub z: f64,
    /// One-sided p-value for the alternative "first sample tends to be smaller".
    pub p_less: f64,
}

/// Mann–Whitney U test with mid-ranks, tie-corrected variance and continuity
/// correction (normal approximation).
pub fn mann_whitney_less(a: &[f64], b: &[f64]) -> MannWhitney {
    let na = a.len() as f64;
    let nb = b.len() as f64;
    let mut all: Vec<(f64, bool)> = a.iter().map(|&v| (v, true)).chain(b.iter().map(|&v| (v, false))).collect();
    all.sort_by(|x, y| x.0.total_cmp(&y.0));
    let n = all.len();
    let mut rank_sum_a = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        rank_sum_a += all[i..=j].iter().filter(|e| e.1).count() as f64 * mid;
        i = j + 1;
    }
    let u = rank_sum_a - na * (na + 1.0) / 2.0;
    let nf = n as f64;
    let var = na * nb / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
    if var <= 0.0 {
        return MannWhitney { u, z: 0.0, p_less: 1.0 };
    }
    let z = (u - na * nb / 2.0 + 0.5) / var.sqrt();
    MannWhitney {
        u,
        z,
        p_less: normal_cdf(z),
    }
}

/// Decile comparison between a reference sample and a candidate sample.
#[derive(Debug, Clone, PartialEq)]
pub struct DecileMatch {
    pub reference: Vec<f64>,
    pub candidate: Vec<f64>,
    /// `|q_cand - q_ref| / max(|q_ref|, s)` per decile, where `s` is half the
    /// reference 0.4–0.6 spread. The floor keeps the median (≈ 0 for a
    /// symmetric law) on the same scale as its neighbours.
    pub rel_err: Vec<f64>,
    pub max_rel_err: f64,
}

pub const DECILES: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

pub fn decile_match(reference: &[f64], candidate: &[f64]) -> DecileMatch {
    let r = quantiles(reference, &DECILES);
    let c = quantiles(candidate, &DECILES);
    let floor = (r[5] - r[3]) / 2.0;
    let rel_err: Vec<f64> = r
        .iter()
        .zip(&c)
        .map(|(qr, qc)| (qc - qr).abs() / qr.abs().max(floor))
        .collect();
    let max_rel_err = rel_err.iter().copied().fold(0.0, f64::max);
    DecileMatch {
        reference: r,
        candidate: c,
        rel_err,
        max_rel_err,
    }
}
