//! Estimators and goodness-of-fit statistics used by the experiments.

use serde::Serialize;

/// Running mean and variance (Welford), mergeable in a fixed order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct MeanVar {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl MeanVar {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &MeanVar) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let d = other.mean - self.mean;
        self.mean += d * other.count as f64 / n;
        self.m2 += other.m2 + d * d * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return f64::NAN;
        }
        self.m2 / (self.count - 1) as f64
    }

    /// Standard error of the mean.
    pub fn se(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }
}

impl FromIterator<f64> for MeanVar {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = MeanVar::default();
        for x in iter {
            m.push(x);
        }
        m
    }
}

/// Mean and standard error pooled over independent streams, merged in order.
pub fn pooled_mean_se(streams: &[Vec<f64>]) -> (f64, f64) {
    let mut acc = MeanVar::default();
    for s in streams {
        acc.merge(&s.iter().copied().collect());
    }
    (acc.mean, acc.se())
}

/// One-sample Kolmogorov-Smirnov distance against a continuous CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// KS distance between the empirical sub-distribution of `on_axis` (values
/// on one axis out of `n_total` draws) and a reference sub-distribution
/// function `g` with `g(0) = 0` and `g(inf)` the axis mass.
///
/// `g_between(a, b)` must return the reference mass in `(a, b]`; it is
/// accumulated along the sorted samples.
pub fn ks_subdistribution(on_axis: &[f64], n_total: usize, mut g_between: impl FnMut(f64, f64) -> f64) -> f64 {
    let mut xs = on_axis.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = n_total as f64;
    let mut g = 0.0;
    let mut prev = 0.0;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        g += g_between(prev, x);
        prev = x;
        d = d.max((g - i as f64 / n).abs()).max(((i + 1) as f64 / n - g).abs());
    }
    d = d.max((g_between(prev, f64::INFINITY) + g - xs.len() as f64 / n).abs());
    d
}

/// Two-sample KS distance between sub-distributions: `a` and `b` hold the
/// values on one axis, `na` and `nb` the total draw counts.
pub fn ks_two_sample_sub(a: &[f64], na: usize, b: &[f64], nb: usize) -> f64 {
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(f64::total_cmp);
    xb.sort_by(f64::total_cmp);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xa.len() || j < xb.len() {
        let x = match (xa.get(i), xb.get(j)) {
            (Some(&p), Some(&q)) => p.min(q),
            (Some(&p), None) => p,
            (None, Some(&q)) => q,
            (None, None) => break,
        };
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    d
}

/// Two-sample KS distance of ordinary samples.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    ks_two_sample_sub(a, a.len(), b, b.len())
}

/// Asymptotic p-value of a two-sample KS distance `d`.
pub fn ks_p_value(d: f64, na: usize, nb: usize) -> f64 {
    let en = ((na * nb) as f64 / (na + nb) as f64).sqrt();
    kolmogorov_q((en + 0.12 + 0.11 / en) * d)
}

/// `Q(x) = 2 sum_{k >= 1} (-1)^(k-1) exp(-2 k^2 x^2)`.
pub fn kolmogorov_q(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

fn top_k_sorted_desc(samples: &[f64], k: usize) -> Vec<f64> {
    let mut xs: Vec<f64> = samples.iter().copied().filter(|x| *x > 0.0).collect();
    xs.sort_by(|a, b| b.total_cmp(a));
    xs.truncate(k + 1);
    xs
}

/// Hill estimate of the tail index from the `k` largest samples.
pub fn hill_exponent(samples: &[f64], k: usize) -> f64 {
    let xs = top_k_sorted_desc(samples, k);
    if xs.len() < k + 1 || k == 0 {
        return f64::NAN;
    }
    let threshold = xs[k].ln();
    let s: f64 = xs[..k].iter().map(|x| x.ln() - threshold).sum();
    k as f64 / s
}

/// Hill estimate when values at `cap` are right-censored there.
pub fn hill_exponent_censored(samples: &[f64], k: usize, cap: f64) -> f64 {
    let xs = top_k_sorted_desc(samples, k);
    if xs.len() < k + 1 || k == 0 {
        return f64::NAN;
    }
    let threshold = xs[k].ln();
    let observed = xs[..k].iter().filter(|&&x| x < cap).count();
    let s: f64 = xs[..k].iter().map(|x| x.min(cap).ln() - threshold).sum();
    observed as f64 / s
}

/// Default tail sample size: 1% of the data, at least 1000.
pub fn hill_k(n: usize) -> usize {
    (n / 100).max(1000).min(n.saturating_sub(1))
}

/// Empirical quantile by the nearest-rank rule.
pub fn quantile(samples: &[f64], q: f64) -> f64 {
    if samples.is_empty() {
        return f64::NAN;
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let rank = ((q * xs.len() as f64).ceil() as usize).clamp(1, xs.len());
    xs[rank - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_var_merge_matches_single_pass() {
        let xs = [1.0, 4.0, 2.0, 8.0, 5.0, 7.0];
        let all: MeanVar = xs.iter().copied().collect();
        let mut a: MeanVar = xs[..2].iter().copied().collect();
        a.merge(&xs[2..].iter().copied().collect());
        assert!((a.mean - all.mean).abs() < 1e-15);
        assert!((a.variance() - all.variance()).abs() < 1e-13);
    }

    #[test]
    fn kolmogorov_tail_values() {
        assert!((kolmogorov_q(1.36) - 0.0494).abs() < 1e-3);
        assert!((kolmogorov_q(1.63) - 0.0098).abs() < 1e-3);
    }
}
