//! Isotropic stable processes, estimators of the index, path-space
//! two-sample tests and the i.i.d. surrogate sums.

pub mod estimate;
pub mod surrogate;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

pub use estimate::{
    estimate_alpha_ecf, estimate_alpha_hill, hill_profile, summarize_ensemble, two_sample_path_test, EcfFit,
    HillEstimate, HillProfile, PathTestReport, ECF_GRID,
};
pub use surrogate::{long_edge_mass, surrogate_sum, EndpointPool, SurrogateConfig, SurrogatePath};

use crate::error::{LabError, Result};
use crate::path::StepPath;
use crate::stats::median;

/// An isotropic stable process in `R^d` whose increments over time `t` have
/// characteristic function `exp(-c t |xi|^alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableParams {
    pub alpha: f64,
    pub scale: f64,
    pub d: usize,
}

impl StableParams {
    pub fn new(alpha: f64, scale: f64, d: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) || !(scale > 0.0) || !(1..=4).contains(&d) {
            return Err(LabError::InvalidConfig(format!(
                "stable law needs alpha in (0, 2], c > 0 and 1 <= d <= 4; got {alpha}, {scale}, {d}"
            )));
        }
        Ok(Self { alpha, scale, d })
    }

    /// Draws one increment of duration `t`.
    pub fn increment<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> Vec<f64> {
        let spread = (self.scale * t).powf(1.0 / self.alpha);
        let mix = if self.alpha >= 2.0 {
            2f64.sqrt()
        } else {
            (2.0 * positive_stable(self.alpha / 2.0, rng)).sqrt()
        };
        (0..self.d)
            .map(|_| mix * spread * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }

    pub fn sample_points(&self, t: f64, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| self.increment(t, &mut rng)).collect()
    }
}

/// Positive stable variable with Laplace transform `exp(-lambda^a)`,
/// `0 < a < 1`, by the Kanter representation.
pub fn positive_stable<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    let u = rng.random::<f64>() * std::f64::consts::PI;
    let w: f64 = rng.sample(Exp1);
    let left = (a * u).sin() / u.sin().powf(1.0 / a);
    let right = (((1.0 - a) * u).sin() / w).powf((1.0 - a) / a);
    left * right
}

/// Path on `[0, 1]` with `n_steps` independent increments of duration `1 / n_steps`.
pub fn sample_stable_path(p: &StableParams, n_steps: usize, seed: u64) -> Result<StepPath> {
    if n_steps == 0 {
        return Err(LabError::Contract("stable path needs at least one step".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dt = 1.0 / n_steps as f64;
    let mut values = vec![0.0; p.d];
    let mut pos = vec![0.0; p.d];
    for _ in 0..n_steps {
        for (x, dx) in pos.iter_mut().zip(p.increment(dt, &mut rng)) {
            *x += dx;
        }
        values.extend_from_slice(&pos);
    }
    StepPath::new(p.d, values)
}

/// Scale `c` for which the median norm of a unit-time increment matches
/// that of `points`, at a fixed index.
pub fn fit_scale(points: &[Vec<f64>], alpha: f64, seed: u64) -> Result<f64> {
    let d = points.first().map(Vec::len).ok_or_else(|| LabError::Degenerate("no points to fit".into()))?;
    let norm = |v: &Vec<f64>| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = median(&points.iter().map(norm).collect::<Vec<_>>());
    if !(target > 0.0) {
        return Err(LabError::Degenerate("median norm is zero".into()));
    }
    let unit = StableParams::new(alpha, 1.0, d)?;
    let reference = median(&unit.sample_points(1.0, 20_000, seed).iter().map(norm).collect::<Vec<_>>());
    Ok((target / reference).powf(alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{mean, variance};

    #[test]
    fn half_stable_is_inverse_gamma() {
        // a = 1/2 gives 1/(2 G^2) whose median is 1/(2 * 0.6745^2)
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..40_000).map(|_| positive_stable(0.5, &mut rng)).collect();
        let want = 1.0 / (2.0 * 0.674_489_75f64.powi(2));
        assert!((median(&xs) / want - 1.0).abs() < 0.03);
    }

    #[test]
    fn gaussian_case_covariance() {
        let p = StableParams::new(2.0, 0.7, 2).unwrap();
        let t = 0.5;
        let pts = p.sample_points(t, 20_000, 9);
        let want = 2.0 * p.scale * t;
        for i in 0..2 {
            let xs: Vec<f64> = pts.iter().map(|v| v[i]).collect();
            let sd = want * (2.0 / xs.len() as f64).sqrt();
            assert!((variance(&xs) - want).abs() < 3.0 * sd);
        }
        let cov = mean(&pts.iter().map(|v| v[0] * v[1]).collect::<Vec<_>>());
        assert!(cov.abs() < 3.0 * want / (pts.len() as f64).sqrt());
    }

    #[test]
    fn characteristic_function_closed_form() {
        let p = StableParams::new(1.2, 0.8, 2).unwrap();
        let t = 0.25;
        let pts = p.sample_points(t, 50_000, 4);
        for r in [0.5, 1.0, 2.0] {
            let re = mean(&pts.iter().map(|v| (r * v[0]).cos()).collect::<Vec<_>>());
            let want = (-p.scale * t * f64::powf(r, p.alpha)).exp();
            assert!((re - want).abs() < 4.0 / (2.0 * pts.len() as f64).sqrt(), "r={r} {re} {want}");
        }
    }

    #[test]
    fn path_shape() {
        let p = StableParams::new(1.5, 1.0, 3).unwrap();
        let path = sample_stable_path(&p, 64, 1).unwrap();
        assert_eq!(path.intervals(), 64);
        assert_eq!(path.value(0), &[0.0, 0.0, 0.0]);
        assert!(sample_stable_path(&p, 0, 1).is_err());
    }

    #[test]
    fn scale_fit_recovers_scale() {
        let p = StableParams::new(1.2, 2.5, 2).unwrap();
        let c = fit_scale(&p.sample_points(1.0, 20_000, 5), 1.2, 6).unwrap();
        assert!((c / 2.5 - 1.0).abs() < 0.05, "{c}");
    }
}
