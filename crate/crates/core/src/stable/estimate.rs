use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::path::{PathSummary, StepPath};
use crate::stats::{bonferroni, ks_two_sample, ols, quantile, KsResult};

/// Magnitudes of the frequency grid, in units of the studentized sample.
pub const ECF_GRID: (f64, f64, usize) = (0.25, 4.0, 16);

/// Log-log regression of the empirical characteristic exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcfFit {
    pub alpha: f64,
    pub alpha_se: f64,
    /// Fitted `c` in studentized units.
    pub scale: f64,
    pub r_squared: f64,
    /// Studentizing factor (median coordinate interquartile range).
    pub iqr: f64,
    /// `(|xi|, -log |phi|)` pairs used in the fit.
    pub points: Vec<(f64, f64)>,
}

impl EcfFit {
    /// Normal-approximation band `alpha +- z se`.
    pub fn band(&self, z: f64) -> (f64, f64) {
        (self.alpha - z * self.alpha_se, self.alpha + z * self.alpha_se)
    }
}

fn directions(d: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for i in 0..d {
        let mut e = vec![0.0; d];
        e[i] = 1.0;
        out.push(e);
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..d {
        for j in i + 1..d {
            for sign in [1.0, -1.0] {
                let mut e = vec![0.0; d];
                e[i] = h;
                e[j] = sign * h;
                out.push(e);
            }
        }
    }
    out
}

/// Estimates the index of an isotropic stable sample from the slope of
/// `log(-log |phi(xi)|)` against `log |xi|`. The sample is divided by its
/// median coordinate interquartile range first; grid points where the
/// modulus is within `2 / sqrt(n)` of 0 or 1 are dropped.
pub fn estimate_alpha_ecf(samples: &[Vec<f64>]) -> Result<EcfFit> {
    let n = samples.len();
    if n < 10 {
        return Err(LabError::Degenerate(format!("ecf estimate needs samples, got {n}")));
    }
    let d = samples[0].len();
    let iqrs: Vec<f64> = (0..d)
        .map(|i| {
            let xs: Vec<f64> = samples.iter().map(|v| v[i]).collect();
            quantile(&xs, 0.75) - quantile(&xs, 0.25)
        })
        .collect();
    let iqr = quantile(&iqrs, 0.5);
    if !(iqr > 0.0) {
        return Err(LabError::Degenerate("sample has zero interquartile range".into()));
    }
    let dirs = directions(d);
    let (lo, hi, m) = ECF_GRID;
    let band = 2.0 / (n as f64).sqrt();
    let mut points = Vec::new();
    for g in 0..m {
        let r = lo * (hi / lo).powf(g as f64 / (m - 1) as f64);
        let mut modulus = 0.0;
        for e in &dirs {
            let (mut re, mut im) = (0.0, 0.0);
            for v in samples {
                let arg: f64 = r * v.iter().zip(e).map(|(a, b)| a * b).sum::<f64>() / iqr;
                re += arg.cos();
                im += arg.sin();
            }
            modulus += (re * re + im * im).sqrt() / n as f64;
        }
        modulus /= dirs.len() as f64;
        if modulus > band && modulus < 1.0 - band {
            points.push((r, -modulus.ln()));
        }
    }
    if points.len() < 3 {
        return Err(LabError::Degenerate(format!(
            "only {} usable frequencies in the ecf grid",
            points.len()
        )));
    }
    let x: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let fit = ols(&x, &y)?;
    Ok(EcfFit {
        alpha: fit.slope,
        alpha_se: fit.slope_se,
        scale: fit.intercept.exp(),
        r_squared: fit.r_squared,
        iqr,
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HillEstimate {
    pub alpha: f64,
    pub tail_points: usize,
    pub std_err: f64,
}

/// Hill estimator on the largest `top_fraction` of the magnitudes.
pub fn estimate_alpha_hill(magnitudes: &[f64], top_fraction: f64) -> Result<HillEstimate> {
    if magnitudes.iter().any(|&m| !(m > 0.0)) {
        return Err(LabError::Contract("hill estimator needs positive magnitudes".into()));
    }
    let k = (top_fraction * magnitudes.len() as f64).floor() as usize;
    if k < 10 || k >= magnitudes.len() {
        return Err(LabError::Degenerate(format!("hill estimator needs at least 10 tail points, got {k}")));
    }
    let mut v = magnitudes.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    let base = v[k].ln();
    let s: f64 = v[..k].iter().map(|x| x.ln() - base).sum();
    if s <= 0.0 {
        return Err(LabError::Degenerate("tail of the sample is constant".into()));
    }
    let alpha = k as f64 / s;
    Ok(HillEstimate {
        alpha,
        tail_points: k,
        std_err: alpha / (k as f64).sqrt(),
    })
}

/// Hill estimates over several tail fractions. A heavy tail gives a flat
/// profile; light tails make the estimate grow as the fraction shrinks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HillProfile {
    pub points: Vec<(f64, HillEstimate)>,
    /// Estimate at the smallest fraction over the estimate at the largest.
    pub drift: f64,
    pub heavy_tailed: bool,
}

pub fn hill_profile(magnitudes: &[f64], fractions: &[f64], max_drift: f64) -> Result<HillProfile> {
    let mut fr = fractions.to_vec();
    fr.sort_by(f64::total_cmp);
    let points = fr
        .iter()
        .map(|&f| estimate_alpha_hill(magnitudes, f).map(|h| (f, h)))
        .collect::<Result<Vec<_>>>()?;
    let (first, last) = match (points.first(), points.last()) {
        (Some(a), Some(b)) => (a.1.alpha, b.1.alpha),
        _ => return Err(LabError::Contract("hill profile needs fractions".into())),
    };
    let drift = first / last;
    Ok(HillProfile {
        points,
        drift,
        heavy_tailed: drift <= max_drift,
    })
}

pub fn summarize_ensemble(paths: &[StepPath], qs: &[f64]) -> Vec<PathSummary> {
    paths.iter().map(|p| PathSummary::of(p, qs)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathTestReport {
    pub sizes: (usize, usize),
    pub tests: Vec<(String, KsResult)>,
    pub combined_p: f64,
    pub level: f64,
    pub pass: bool,
}

/// Kolmogorov-Smirnov tests on each scalar functional of two ensembles of
/// path summaries, combined by Bonferroni.
pub fn two_sample_path_test(a: &[PathSummary], b: &[PathSummary], level: f64) -> Result<PathTestReport> {
    let (fa, fb) = match (a.first(), b.first()) {
        (Some(x), Some(y)) => (x.functionals(), y.functionals()),
        _ => return Err(LabError::Degenerate("empty ensemble".into())),
    };
    if fa.len() != fb.len() || fa.iter().zip(&fb).any(|(x, y)| x.0 != y.0) {
        return Err(LabError::Contract("ensembles carry different functionals".into()));
    }
    let cols = |e: &[PathSummary]| -> Vec<Vec<f64>> {
        let rows: Vec<Vec<(String, f64)>> = e.iter().map(PathSummary::functionals).collect();
        (0..fa.len()).map(|i| rows.iter().map(|r| r[i].1).collect()).collect()
    };
    let (ca, cb) = (cols(a), cols(b));
    let mut tests = Vec::new();
    for (i, (name, _)) in fa.iter().enumerate() {
        tests.push((name.clone(), ks_two_sample(&ca[i], &cb[i])?));
    }
    let combined_p = bonferroni(&tests.iter().map(|t| t.1.p_value).collect::<Vec<_>>());
    Ok(PathTestReport {
        sizes: (a.len(), b.len()),
        tests,
        combined_p,
        level,
        pass: combined_p > level,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stable::{sample_stable_path, StableParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Exp1, StandardNormal};

    #[test]
    fn ecf_recovers_stable_index() {
        let p = StableParams::new(1.2, 1.0, 2).unwrap();
        let fit = estimate_alpha_ecf(&p.sample_points(1.0, 10_000, 8)).unwrap();
        assert!((1.1..=1.3).contains(&fit.alpha), "{}", fit.alpha);
        assert!(fit.r_squared > 0.99);
    }

    #[test]
    fn ecf_gaussian_is_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts: Vec<Vec<f64>> = (0..10_000)
            .map(|_| vec![rng.sample(StandardNormal), rng.sample(StandardNormal)])
            .collect();
        let fit = estimate_alpha_ecf(&pts).unwrap();
        assert!((fit.alpha - 2.0).abs() < 0.1, "{}", fit.alpha);
    }

    #[test]
    fn ecf_rejects_zeros() {
        assert!(estimate_alpha_ecf(&vec![vec![0.0, 0.0]; 2000]).is_err());
    }

    #[test]
    fn hill_on_pareto() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let xs: Vec<f64> = (0..100_000).map(|_| rng.random::<f64>().powf(-1.0 / 1.5)).collect();
        let h = estimate_alpha_hill(&xs, 0.05).unwrap();
        assert!((h.alpha - 1.5).abs() < 0.1, "{}", h.alpha);
    }

    #[test]
    fn hill_flags_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let xs: Vec<f64> = (0..100_000).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let prof = hill_profile(&xs, &[0.001, 0.01, 0.1], 1.3).unwrap();
        assert!(!prof.heavy_tailed, "{}", prof.drift);
        let ys: Vec<f64> = (0..100_000).map(|_| rng.random::<f64>().powf(-1.0 / 1.5)).collect();
        assert!(hill_profile(&ys, &[0.001, 0.01, 0.1], 1.3).unwrap().heavy_tailed);
    }

    #[test]
    fn hill_rejects_constant() {
        assert!(estimate_alpha_hill(&[2.0; 1000], 0.1).is_err());
        assert!(estimate_alpha_hill(&[1.0, 2.0, 3.0], 0.5).is_err());
    }

    fn ensemble(alpha: f64, count: usize, seed: u64) -> Vec<PathSummary> {
        let p = StableParams::new(alpha, 1.0, 2).unwrap();
        (0..count as u64)
            .map(|i| PathSummary::of(&sample_stable_path(&p, 64, seed + i).unwrap(), &[1.0, 2.0]))
            .collect()
    }

    #[test]
    fn same_law_passes() {
        let a = ensemble(1.2, 400, 0);
        let b = ensemble(1.2, 400, 10_000);
        let r = two_sample_path_test(&a, &b, 0.01).unwrap();
        assert!(r.pass, "{}", r.combined_p);
        assert_eq!(r.tests.len(), 6);
    }

    #[test]
    fn stable_against_gaussian_fails() {
        let a = ensemble(1.2, 400, 0);
        let b = ensemble(2.0, 400, 10_000);
        assert!(!two_sample_path_test(&a, &b, 0.01).unwrap().pass);
    }
}
