//! Small statistical toolkit shared by the experiments.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{LabError, Result};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn std_error(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Weighted mean and the standard error of the ratio estimator.
pub fn weighted_mean(xs: &[f64], ws: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ws.len());
    let n = xs.len() as f64;
    let sw: f64 = ws.iter().sum();
    if sw <= 0.0 || xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = xs.iter().zip(ws).map(|(x, w)| x * w).sum::<f64>() / sw;
    let wbar = sw / n;
    let resid: Vec<f64> = xs.iter().zip(ws).map(|(x, w)| w * (x - m) / wbar).collect();
    let se = if xs.len() > 1 {
        (resid.iter().map(|r| r * r).sum::<f64>() / (n - 1.0) / n).sqrt()
    } else {
        f64::NAN
    };
    (m, se)
}

/// Linear-interpolated quantile of a sample, `q` in `[0, 1]`.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Ordinary least squares fit `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub r_squared: f64,
    pub n: usize,
}

pub fn ols(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(LabError::Contract("ols: x and y differ in length".into()));
    }
    let n = x.len();
    if n < 2 {
        return Err(LabError::Degenerate("ols needs at least two points".into()));
    }
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(LabError::Degenerate("ols: x has zero spread".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let e = b - intercept - slope * a;
            e * e
        })
        .sum();
    let slope_se = if n > 2 {
        (sse / (n - 2) as f64 / sxx).sqrt()
    } else {
        f64::NAN
    };
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(LinearFit {
        slope,
        intercept,
        slope_se,
        r_squared,
        n,
    })
}

/// Upper tail of the chi-square distribution.
pub fn chi_square_sf(stat: f64, df: f64) -> f64 {
    if df <= 0.0 {
        return 1.0;
    }
    if !stat.is_finite() {
        return 0.0;
    }
    let dist = ChiSquared::new(df).expect("positive degrees of freedom");
    dist.sf(stat.max(0.0))
}

pub fn normal_cdf(x: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").cdf(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub df: f64,
    pub p_value: f64,
    /// Mean design effect the statistic was divided by (1 when uncorrected).
    pub design_effect: f64,
}

/// Goodness of fit of observed counts to expected probabilities. Cells are
/// merged from the right until every expected count is at least `min_expected`.
pub fn chi_square_gof(observed: &[u64], probs: &[f64], min_expected: f64) -> ChiSquareResult {
    assert_eq!(observed.len(), probs.len());
    let total: u64 = observed.iter().sum();
    let mut obs = Vec::new();
    let mut exp = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&ob, &p) in observed.iter().zip(probs) {
        o += ob as f64;
        e += p * total as f64;
        if e >= min_expected {
            obs.push(o);
            exp.push(e);
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        if let (Some(lo), Some(le)) = (obs.last_mut(), exp.last_mut()) {
            *lo += o;
            *le += e;
        } else {
            obs.push(o);
            exp.push(e);
        }
    }
    let stat: f64 = obs
        .iter()
        .zip(&exp)
        .map(|(o, e)| if *e > 0.0 { (o - e) * (o - e) / e } else { 0.0 })
        .sum();
    let df = (obs.len() as f64 - 1.0).max(0.0);
    ChiSquareResult {
        statistic: stat,
        df,
        p_value: chi_square_sf(stat, df),
        design_effect: 1.0,
    }
}

/// Pearson test of independence on an `r x c` table. Empty rows and columns
/// are dropped.
pub fn chi_square_independence(table: &[Vec<u64>]) -> ChiSquareResult {
    let rows: Vec<&Vec<u64>> = table.iter().filter(|r| r.iter().sum::<u64>() > 0).collect();
    let ncol = rows.first().map_or(0, |r| r.len());
    let col_tot: Vec<f64> = (0..ncol).map(|c| rows.iter().map(|r| r[c] as f64).sum()).collect();
    let keep: Vec<usize> = (0..ncol).filter(|&c| col_tot[c] > 0.0).collect();
    let total: f64 = col_tot.iter().sum();
    let mut stat = 0.0;
    for r in &rows {
        let rt: f64 = r.iter().map(|&v| v as f64).sum();
        for &c in &keep {
            let e = rt * col_tot[c] / total;
            let o = r[c] as f64;
            stat += (o - e) * (o - e) / e;
        }
    }
    let df = ((rows.len() as f64 - 1.0) * (keep.len() as f64 - 1.0)).max(0.0);
    ChiSquareResult {
        statistic: stat,
        df,
        p_value: chi_square_sf(stat, df),
        design_effect: 1.0,
    }
}

/// Categorical counts grouped in independent clusters (one cluster per
/// independent replicate). Observations inside a cluster may be dependent.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClusteredCounts {
    pub clusters: Vec<Vec<u64>>,
}

impl ClusteredCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, counts: Vec<u64>) {
        self.clusters.push(counts);
    }

    pub fn width(&self) -> usize {
        self.clusters.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn totals(&self, width: usize) -> Vec<u64> {
        let mut t = vec![0; width];
        for c in &self.clusters {
            for (i, v) in c.iter().enumerate() {
                t[i] += v;
            }
        }
        t
    }

    /// Per-category ratio of the cluster-robust variance of the proportion
    /// to its multinomial variance.
    fn design_effects(&self, width: usize) -> Vec<Option<f64>> {
        let totals = self.totals(width);
        let n: f64 = totals.iter().sum::<u64>() as f64;
        let m = self.clusters.len() as f64;
        (0..width)
            .map(|b| {
                let p = totals[b] as f64 / n;
                if p <= 0.0 || p >= 1.0 || m < 2.0 {
                    return None;
                }
                let s: f64 = self
                    .clusters
                    .iter()
                    .map(|c| {
                        let nc: f64 = c.iter().sum::<u64>() as f64;
                        let ncb = c.get(b).copied().unwrap_or(0) as f64;
                        (ncb - p * nc).powi(2)
                    })
                    .sum();
                let robust = m / (m - 1.0) * s / (n * n);
                Some(robust / (p * (1.0 - p) / n))
            })
            .collect()
    }
}

/// Two-sample homogeneity test of categorical distributions with a first-order
/// Rao-Scott correction for within-cluster dependence. Categories whose pooled
/// count is below `min_pooled` are merged into their right neighbour.
pub fn chi_square_two_sample(a: &ClusteredCounts, b: &ClusteredCounts, min_pooled: u64) -> ChiSquareResult {
    let width = a.width().max(b.width());
    let ta = a.totals(width);
    let tb = b.totals(width);
    // merge sparse categories
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut cur = Vec::new();
    let mut acc = 0;
    for i in 0..width {
        cur.push(i);
        acc += ta[i] + tb[i];
        if acc >= min_pooled {
            groups.push(std::mem::take(&mut cur));
            acc = 0;
        }
    }
    if !cur.is_empty() {
        match groups.last_mut() {
            Some(g) => g.extend(cur),
            None => groups.push(cur),
        }
    }
    let merge = |c: &ClusteredCounts| ClusteredCounts {
        clusters: c
            .clusters
            .iter()
            .map(|v| {
                groups
                    .iter()
                    .map(|g| g.iter().map(|&i| v.get(i).copied().unwrap_or(0)).sum())
                    .collect()
            })
            .collect(),
    };
    let (ma, mb) = (merge(a), merge(b));
    let k = groups.len();
    let table = vec![ma.totals(k), mb.totals(k)];
    let mut res = chi_square_independence(&table);
    let deffs: Vec<f64> = ma
        .design_effects(k)
        .into_iter()
        .chain(mb.design_effects(k))
        .flatten()
        .collect();
    let deff = if deffs.is_empty() { 1.0 } else { mean(&deffs).max(1.0) };
    res.statistic /= deff;
    res.p_value = chi_square_sf(res.statistic, res.df);
    res.design_effect = deff;
    res
}

/// Kolmogorov distribution tail `Q(lambda) = 2 sum (-1)^{j-1} exp(-2 j^2 lambda^2)`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=200 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov-Smirnov test (asymptotic p-value with the
/// Stephens small-sample correction).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(LabError::Degenerate("ks test on an empty sample".into()));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let t = x[i].min(y[j]);
        while i < x.len() && x[i] <= t {
            i += 1;
        }
        while j < y.len() && y[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let ne = (n * m / (n + m)).sqrt();
    let p = kolmogorov_q((ne + 0.12 + 0.11 / ne) * d);
    Ok(KsResult {
        statistic: d,
        p_value: p,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AndersonDarling {
    /// Statistic with the small-sample adjustment `A^2 (1 + 0.75/n + 2.25/n^2)`.
    pub statistic: f64,
    pub p_value: f64,
}

/// Anderson-Darling test of normality with mean and variance estimated from
/// the sample (D'Agostino and Stephens p-value approximation).
pub fn anderson_darling_normal(xs: &[f64]) -> Result<AndersonDarling> {
    let n = xs.len();
    if n < 8 {
        return Err(LabError::Degenerate("anderson-darling needs at least 8 points".into()));
    }
    let m = mean(xs);
    let sd = variance(xs).sqrt();
    if !(sd > 0.0) {
        return Err(LabError::Degenerate("anderson-darling on a constant sample".into()));
    }
    let mut z: Vec<f64> = xs.iter().map(|x| (x - m) / sd).collect();
    z.sort_by(f64::total_cmp);
    let nf = n as f64;
    let mut s = 0.0;
    for i in 0..n {
        let fi = normal_cdf(z[i]).clamp(1e-300, 1.0 - 1e-16);
        let fr = normal_cdf(z[n - 1 - i]).clamp(1e-300, 1.0 - 1e-16);
        s += (2.0 * i as f64 + 1.0) * (fi.ln() + (1.0 - fr).ln());
    }
    let a2 = -nf - s / nf;
    let a = a2 * (1.0 + 0.75 / nf + 2.25 / (nf * nf));
    let p = if a >= 0.6 {
        (1.2937 - 5.709 * a + 0.0186 * a * a).exp()
    } else if a >= 0.34 {
        (0.9177 - 4.279 * a - 1.38 * a * a).exp()
    } else if a >= 0.2 {
        1.0 - (-8.318 + 42.796 * a - 59.938 * a * a).exp()
    } else {
        1.0 - (-13.436 + 101.14 * a - 223.73 * a * a).exp()
    };
    Ok(AndersonDarling {
        statistic: a,
        p_value: p.clamp(0.0, 1.0),
    })
}

/// Wilson score interval for a binomial proportion at `z` standard errors.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Total variation distance between an empirical histogram and a law.
/// Mass of the law beyond the histogram is counted in full.
pub fn total_variation(counts: &[u64], probs: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return f64::NAN;
    }
    let len = counts.len().max(probs.len());
    let mut tv = 0.0;
    let mut covered = 0.0;
    for i in 0..len {
        let e = counts.get(i).copied().unwrap_or(0) as f64 / n as f64;
        let p = probs.get(i).copied().unwrap_or(0.0);
        covered += p;
        tv += (e - p).abs();
    }
    tv += (1.0 - covered).max(0.0);
    tv / 2.0
}

/// Smallest p-value times the number of tests, capped at 1.
pub fn bonferroni(p_values: &[f64]) -> f64 {
    let min = p_values.iter().copied().fold(1.0, f64::min);
    (min * p_values.len() as f64).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn ols_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 0.5 * v).collect();
        let f = ols(&x, &y).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12);
        assert!((f.intercept - 3.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!(ols(&[1.0, 1.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn quantiles() {
        let v = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(median(&v), 2.5);
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
    }

    #[test]
    fn chi_square_sf_known() {
        // P(chi2_1 > 3.841) = 0.05
        assert!((chi_square_sf(3.841458820694124, 1.0) - 0.05).abs() < 1e-9);
    }

    #[test]
    fn ks_identical_and_shifted() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a: Vec<f64> = (0..2000).map(|_| rng.sample(StandardNormal)).collect();
        let b: Vec<f64> = (0..2000).map(|_| rng.sample(StandardNormal)).collect();
        let c: Vec<f64> = b.iter().map(|v| v + 0.3).collect();
        assert!(ks_two_sample(&a, &b).unwrap().p_value > 0.01);
        assert!(ks_two_sample(&a, &c).unwrap().p_value < 1e-6);
        assert_eq!(ks_two_sample(&a, &a).unwrap().statistic, 0.0);
    }

    #[test]
    fn kolmogorov_tail_values() {
        // Q(1.358) ~ 0.05
        assert!((kolmogorov_q(1.358) - 0.05).abs() < 1e-3);
    }

    #[test]
    fn anderson_darling_detects_skew() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g: Vec<f64> = (0..1000).map(|_| rng.sample(StandardNormal)).collect();
        let e: Vec<f64> = (0..1000).map(|_| -rng.random::<f64>().ln()).collect();
        assert!(anderson_darling_normal(&g).unwrap().p_value > 0.01);
        assert!(anderson_darling_normal(&e).unwrap().p_value < 1e-4);
    }

    #[test]
    fn wilson_contains_truth() {
        let (lo, hi) = wilson_interval(30, 100, 1.96);
        assert!(lo < 0.3 && hi > 0.3);
        assert_eq!(wilson_interval(0, 0, 1.96), (0.0, 1.0));
    }

    #[test]
    fn tv_counts_missing_mass() {
        assert_eq!(total_variation(&[5, 5], &[0.5, 0.5]), 0.0);
        assert!((total_variation(&[10], &[0.5, 0.5]) - 0.5).abs() < 1e-12);
        assert!((total_variation(&[10], &[0.5]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn gof_and_independence() {
        let r = chi_square_gof(&[25, 25, 25, 25], &[0.25; 4], 5.0);
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.df, 3.0);
        let t = chi_square_independence(&[vec![10, 20], vec![20, 40]]);
        assert!(t.statistic.abs() < 1e-12);
    }

    #[test]
    fn rao_scott_inflates_for_duplicated_clusters() {
        // Each cluster repeats the same category many times: strong dependence.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut a = ClusteredCounts::new();
        let mut b = ClusteredCounts::new();
        for _ in 0..100 {
            let mut ca = vec![0; 3];
            ca[rng.random_range(0..3)] = 50;
            a.push(ca);
            let mut cb = vec![0; 3];
            cb[rng.random_range(0..3)] = 50;
            b.push(cb);
        }
        let r = chi_square_two_sample(&a, &b, 5);
        assert!(r.design_effect > 20.0);
        assert!(r.p_value > 0.001);
    }

    #[test]
    fn weighted_mean_reduces_to_mean() {
        let x = [1.0, 2.0, 3.0];
        let (m, _) = weighted_mean(&x, &[1.0, 1.0, 1.0]);
        assert!((m - 2.0).abs() < 1e-12);
        let (m, _) = weighted_mean(&x, &[0.0, 0.0, 2.0]);
        assert!((m - 3.0).abs() < 1e-12);
    }
}
