//! Descriptive statistics, Kolmogorov-Smirnov distances and Monte Carlo
//! standard errors used by the samplers' diagnostics and by the tests.

use statrs::function::erf::erfc;

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance (`n - 1` denominator).
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

pub fn std_dev(x: &[f64]) -> f64 {
    variance(x).sqrt()
}

pub fn weighted_mean(x: &[f64], w: &[f64]) -> f64 {
    let total: f64 = w.iter().sum();
    x.iter().zip(w).map(|(v, wi)| v * wi).sum::<f64>() / total
}

/// Weighted variance around the weighted mean, with reliability weights
/// correction `1 / (1 - Σw²)` on normalised weights.
pub fn weighted_variance(x: &[f64], w: &[f64]) -> f64 {
    let total: f64 = w.iter().sum();
    let m = weighted_mean(x, w);
    let s2: f64 = x
        .iter()
        .zip(w)
        .map(|(v, wi)| wi / total * (v - m).powi(2))
        .sum();
    let sum_sq: f64 = w.iter().map(|wi| (wi / total).powi(2)).sum();
    if sum_sq < 1.0 {
        s2 / (1.0 - sum_sq)
    } else {
        0.0
    }
}

/// Median with the average of the two middle values for even lengths.
pub fn median(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Linear-interpolation quantile of an unweighted sample.
pub fn quantile(x: &[f64], p: f64) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = p.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// Smallest value whose cumulative normalised weight reaches `p`.
pub fn weighted_quantile(x: &[f64], w: &[f64], p: f64) -> f64 {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let total: f64 = w.iter().sum();
    let mut acc = 0.0;
    for &i in &idx {
        acc += w[i] / total;
        if acc >= p {
            return x[i];
        }
    }
    x[*idx.last().expect("non-empty sample")]
}

pub fn normal_cdf(x: f64, mean: f64, sd: f64) -> f64 {
    0.5 * erfc(-(x - mean) / (sd * std::f64::consts::SQRT_2))
}

/// Sup distance between the weighted empirical CDF of `x` and `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(x: &[f64], w: Option<&[f64]>, cdf: F) -> f64 {
    let n = x.len();
    let uniform = vec![1.0; n];
    let w = w.unwrap_or(&uniform);
    let total: f64 = w.iter().sum();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut below = 0.0;
    let mut d: f64 = 0.0;
    let mut k = 0;
    while k < n {
        let v = x[idx[k]];
        let mut mass = 0.0;
        while k < n && x[idx[k]] == v {
            mass += w[idx[k]] / total;
            k += 1;
        }
        let f = cdf(v);
        d = d.max((f - below).abs()).max((below + mass - f).abs());
        below += mass;
    }
    d
}

/// Two-sample (optionally weighted) Kolmogorov-Smirnov distance.
pub fn ks_two_sample(a: &[f64], wa: Option<&[f64]>, b: &[f64], wb: Option<&[f64]>) -> f64 {
    let ecdf = |x: &[f64], w: Option<&[f64]>| -> Vec<(f64, f64)> {
        let n = x.len();
        let uniform = vec![1.0; n];
        let w = w.unwrap_or(&uniform);
        let total: f64 = w.iter().sum();
        let mut pts: Vec<(f64, f64)> = x.iter().copied().zip(w.iter().map(|v| v / total)).collect();
        pts.sort_by(|p, q| p.0.total_cmp(&q.0));
        pts
    };
    let pa = ecdf(a, wa);
    let pb = ecdf(b, wb);
    let (mut i, mut j) = (0, 0);
    let (mut fa, mut fb) = (0.0, 0.0);
    let mut d: f64 = 0.0;
    while i < pa.len() || j < pb.len() {
        let next = match (pa.get(i), pb.get(j)) {
            (Some(p), Some(q)) => p.0.min(q.0),
            (Some(p), None) => p.0,
            (None, Some(q)) => q.0,
            (None, None) => break,
        };
        while i < pa.len() && pa[i].0 == next {
            fa += pa[i].1;
            i += 1;
        }
        while j < pb.len() && pb[j].0 == next {
            fb += pb[j].1;
            j += 1;
        }
        d = d.max((fa - fb).abs());
    }
    d
}

/// Asymptotic Kolmogorov survival function `P(K > t)`.
pub fn kolmogorov_sf(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    if t < 0.3 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = 2.0 * (-2.0 * kf * kf * t * t).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    s.clamp(0.0, 1.0)
}

/// One-sample KS p-value with the Stephens small-sample correction.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d)
}

/// Critical KS distance at level `alpha` for sample size `n`.
pub fn ks_critical(alpha: f64, n: usize) -> f64 {
    // bisection on the corrected asymptotic law
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if ks_pvalue(mid, n) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Kish effective sample size of a weight vector.
pub fn effective_sample_size(w: &[f64]) -> f64 {
    let s: f64 = w.iter().sum();
    let s2: f64 = w.iter().map(|v| v * v).sum();
    s * s / s2
}

/// Monte Carlo standard error of the mean of a correlated series by
/// non-overlapping batch means (`sqrt(len)` batches).
pub fn batch_means_se(x: &[f64]) -> f64 {
    let n = x.len();
    let batches = ((n as f64).sqrt().floor() as usize).max(2);
    let size = n / batches;
    if size == 0 {
        return (variance(x) / n as f64).sqrt();
    }
    let means: Vec<f64> = (0..batches)
        .map(|b| mean(&x[b * size..(b + 1) * size]))
        .collect();
    (variance(&means) / batches as f64).sqrt()
}

/// Weighted Gaussian kernel density estimate on `points` equally spaced
/// abscissae covering the sample range plus three bandwidths either side.
/// Bandwidth is Silverman's rule with the Kish effective sample size.
pub fn kde_grid(x: &[f64], w: Option<&[f64]>, points: usize) -> Vec<(f64, f64)> {
    if x.is_empty() || points < 2 {
        return Vec::new();
    }
    let unit = vec![1.0; x.len()];
    let w = w.unwrap_or(&unit);
    let total: f64 = w.iter().sum();
    let sd = weighted_variance(x, w).sqrt();
    let iqr = (weighted_quantile(x, w, 0.75) - weighted_quantile(x, w, 0.25)) / 1.349;
    let spread = if iqr > 0.0 { sd.min(iqr) } else { sd };
    let mut bw = 0.9 * spread * effective_sample_size(w).powf(-0.2);
    if !(bw > 0.0) {
        bw = 1e-3 * x[0].abs().max(1.0);
    }
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min) - 3.0 * bw;
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 3.0 * bw;
    let norm = 1.0 / (total * bw * (2.0 * std::f64::consts::PI).sqrt());
    (0..points)
        .map(|k| {
            let g = lo + (hi - lo) * k as f64 / (points - 1) as f64;
            let d: f64 = x
                .iter()
                .zip(w)
                .map(|(v, wi)| wi * (-0.5 * ((g - v) / bw).powi(2)).exp())
                .sum();
            (g, d * norm)
        })
        .collect()
}
