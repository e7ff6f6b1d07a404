//! Path functionals of walks: rescaling, short-jump maxima, truncated drift,
//! new-vertex counters and return probabilities.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};

use super::{walk_step, WalkPath};
use crate::env::hash::child_seed;
use crate::env::Environment;
use crate::error::{LabError, Result};
use crate::lattice::LatticePoint;
use crate::path::{PathSummary, StepPath};
use crate::stats::{ols, LinearFit};

/// `t -> n^{-1/alpha} X_{floor(nt)}` on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaledPath {
    pub alpha: f64,
    pub n: usize,
    pub scale: f64,
    pub points: Vec<LatticePoint>,
}

pub fn rescale(path: &WalkPath, alpha: f64) -> RescaledPath {
    let n = path.len();
    RescaledPath {
        alpha,
        n,
        scale: (n.max(1) as f64).powf(-1.0 / alpha),
        points: path.steps.clone(),
    }
}

impl RescaledPath {
    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    /// `n^{-1/alpha} X_{floor(nt)}`.
    pub fn value_at(&self, t: f64) -> Vec<f64> {
        let i = ((t * self.n as f64).floor() as usize).min(self.n);
        self.scaled(i)
    }

    /// Linear interpolation between consecutive grid values.
    pub fn interpolated_at(&self, t: f64) -> Vec<f64> {
        let x = t * self.n as f64;
        let i = (x.floor() as usize).min(self.n);
        if i == self.n {
            return self.scaled(i);
        }
        let frac = x - i as f64;
        let (a, b) = (self.scaled(i), self.scaled(i + 1));
        a.iter().zip(&b).map(|(u, v)| u + frac * (v - u)).collect()
    }

    fn scaled(&self, i: usize) -> Vec<f64> {
        self.points[i].coords().iter().map(|&c| c as f64 * self.scale).collect()
    }

    /// The same function as a [`StepPath`] on `n` intervals.
    pub fn to_step_path(&self) -> StepPath {
        if self.n == 0 {
            return StepPath::constant(&self.scaled(0));
        }
        let values = self
            .points
            .iter()
            .flat_map(|p| p.coords().iter().map(|&c| c as f64 * self.scale))
            .collect();
        StepPath::new(self.dim(), values).expect("n >= 1 gives at least two points")
    }

    pub fn summary(&self, qs: &[f64]) -> PathSummary {
        PathSummary::of(&self.to_step_path(), qs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortJumpStats {
    pub k: u32,
    pub epsilon: f64,
    pub threshold: f64,
    pub w_k: f64,
    /// `S_m` for `m < 2^k`, with `S_0 = 0`.
    pub partial_sums: Vec<LatticePoint>,
    pub short_steps: usize,
}

/// Largest rescaled partial sum of the steps no longer than `2^{(1/alpha - eps) k}`.
pub fn short_jump_max(path: &WalkPath, k: u32, epsilon: f64, alpha: f64) -> Result<ShortJumpStats> {
    let horizon = 1usize << k;
    if path.steps.len() < horizon {
        return Err(LabError::PathTooShort {
            needed: horizon,
            have: path.steps.len(),
        });
    }
    let threshold = 2f64.powf((1.0 / alpha - epsilon) * k as f64);
    let thr_sq = threshold * threshold;
    let mut s = LatticePoint::origin(path.steps[0].dim());
    let mut partial_sums = Vec::with_capacity(horizon);
    partial_sums.push(s);
    let mut best = 0.0f64;
    let mut short_steps = 0;
    for m in 1..horizon {
        let j = path.jump(m);
        if j.norm_sq() <= thr_sq {
            s = s + j;
            short_steps += 1;
        }
        partial_sums.push(s);
        best = best.max(s.norm_sq());
    }
    Ok(ShortJumpStats {
        k,
        epsilon,
        threshold,
        w_k: best.sqrt() * 2f64.powf(-(k as f64) / alpha),
        partial_sums,
        short_steps,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalDrift {
    pub x: LatticePoint,
    pub cutoff: f64,
    pub value: Vec<f64>,
}

/// `sum_{y ~ x, |y - x| <= cutoff} (y - x) / deg(x)`.
pub fn truncated_drift(x: LatticePoint, env: &mut Environment, cutoff: f64) -> Result<LocalDrift> {
    let d = env.dim();
    let nb = env.neighbors(x)?;
    let mut value = vec![0.0; d];
    if !nb.is_empty() {
        let w = 1.0 / nb.len() as f64;
        for &y in nb {
            let j = y - x;
            if j.norm() <= cutoff {
                for (v, &c) in value.iter_mut().zip(j.coords()) {
                    *v += c as f64 * w;
                }
            }
        }
    }
    Ok(LocalDrift { x, cutoff, value })
}

/// New-vertex counters of a quenched ensemble, indexed by `i = 1..=n` at `i - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiCounts {
    /// Vertices new to the walk and to every earlier walk.
    pub phi: Vec<Vec<u32>>,
    /// Vertices new to the walk itself.
    pub phi_tilde: Vec<Vec<u32>>,
}

pub fn new_vertex_counter(paths: &[WalkPath]) -> PhiCounts {
    let mut earlier: FxHashSet<LatticePoint> = FxHashSet::default();
    let mut phi = Vec::with_capacity(paths.len());
    let mut phi_tilde = Vec::with_capacity(paths.len());
    for p in paths {
        let mut own: FxHashSet<LatticePoint> = FxHashSet::default();
        own.insert(p.steps[0]);
        let (mut a, mut b) = (0u32, 0u32);
        let mut row = Vec::with_capacity(p.len());
        let mut row_tilde = Vec::with_capacity(p.len());
        for &x in &p.steps[1..] {
            if own.insert(x) {
                b += 1;
                if !earlier.contains(&x) {
                    a += 1;
                }
            }
            row.push(a);
            row_tilde.push(b);
        }
        earlier.extend(own);
        phi.push(row);
        phi_tilde.push(row_tilde);
    }
    PhiCounts { phi, phi_tilde }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnRow {
    pub n: usize,
    /// Number of (start, lag) pairs or walks behind the estimate.
    pub trials: u64,
    pub returns: u64,
    pub p_hat: f64,
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnProfile {
    pub rows: Vec<ReturnRow>,
    /// OLS fit of `ln p_hat` on `ln n` over rows with at least one return.
    pub fit: Option<LinearFit>,
    /// Rows with fewer returns than this are flagged as imprecise.
    pub imprecise: Vec<usize>,
}

const MIN_RETURNS: u64 = 10;

fn finish(rows: Vec<ReturnRow>) -> ReturnProfile {
    let used: Vec<&ReturnRow> = rows.iter().filter(|r| r.returns > 0).collect();
    let fit = if used.len() >= 2 {
        let x: Vec<f64> = used.iter().map(|r| (r.n as f64).ln()).collect();
        let y: Vec<f64> = used.iter().map(|r| r.p_hat.ln()).collect();
        ols(&x, &y).ok()
    } else {
        None
    };
    let imprecise = rows.iter().filter(|r| r.returns < MIN_RETURNS).map(|r| r.n).collect();
    ReturnProfile { rows, fit, imprecise }
}

/// Estimates `P_x(X_n = x)` in a fixed environment from `trials` independent
/// walks per `n`, all started at `x`.
pub fn return_probability_profile(
    env: &mut Environment,
    x: LatticePoint,
    n_list: &[usize],
    trials: usize,
    seed: u64,
) -> Result<ReturnProfile> {
    if trials == 0 {
        return Ok(ReturnProfile {
            rows: Vec::new(),
            fit: None,
            imprecise: Vec::new(),
        });
    }
    let mut rows = Vec::with_capacity(n_list.len());
    for (a, &n) in n_list.iter().enumerate() {
        let mut returns = 0u64;
        for t in 0..trials as u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(child_seed(child_seed(seed, a as u64), t));
            let mut y = x;
            for _ in 0..n {
                y = walk_step(y, env, &mut rng)?;
            }
            returns += (y == x) as u64;
        }
        let p = returns as f64 / trials as f64;
        rows.push(ReturnRow {
            n,
            trials: trials as u64,
            returns,
            p_hat: p,
            std_err: (p * (1.0 - p) / trials as f64).sqrt(),
        });
    }
    Ok(finish(rows))
}

/// Stationary-start estimate of the return probability from long walks:
/// for every `n`, the fraction of pairs `(m, m + l)` with `m < starts` and
/// `n <= l < 2n` such that `X_{m+l} = X_m`. Each walk is one cluster for the
/// standard error.
pub fn lag_return_profile(paths: &[WalkPath], n_list: &[usize], starts: usize) -> Result<ReturnProfile> {
    let mut rows = Vec::with_capacity(n_list.len());
    let mut visits: Vec<FxHashMap<LatticePoint, Vec<u32>>> = Vec::with_capacity(paths.len());
    for p in paths {
        let mut v: FxHashMap<LatticePoint, Vec<u32>> = FxHashMap::default();
        for (t, &x) in p.steps.iter().enumerate() {
            v.entry(x).or_default().push(t as u32);
        }
        visits.push(v);
    }
    for &n in n_list {
        let mut per_walk = Vec::with_capacity(paths.len());
        for (p, v) in paths.iter().zip(&visits) {
            if p.steps.len() < starts + 2 * n {
                return Err(LabError::PathTooShort {
                    needed: starts + 2 * n,
                    have: p.steps.len(),
                });
            }
            let mut count = 0u64;
            for times in v.values() {
                for (i, &m) in times.iter().enumerate() {
                    if m as usize >= starts {
                        break;
                    }
                    let rest = &times[i + 1..];
                    let lo = rest.partition_point(|&u| (u as usize) < m as usize + n);
                    let hi = rest.partition_point(|&u| (u as usize) < m as usize + 2 * n);
                    count += (hi - lo) as u64;
                }
            }
            per_walk.push(count);
        }
        let pairs = (starts * n) as f64;
        let rates: Vec<f64> = per_walk.iter().map(|&c| c as f64 / pairs).collect();
        let returns: u64 = per_walk.iter().sum();
        rows.push(ReturnRow {
            n,
            trials: (paths.len() * starts * n) as u64,
            returns,
            p_hat: crate::stats::mean(&rates),
            std_err: crate::stats::std_error(&rates),
        });
    }
    Ok(finish(rows))
}

/// `P_x(X_2 = x) = sum_{y ~ x} 1 / (deg x * deg y)`.
pub fn exact_two_step_return(env: &mut Environment, x: LatticePoint) -> Result<f64> {
    let nb = env.neighbors(x)?.to_vec();
    if nb.is_empty() {
        return Ok(1.0);
    }
    let mut p = 0.0;
    for y in &nb {
        p += 1.0 / env.degree(*y)? as f64;
    }
    Ok(p / nb.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvConfig;

    fn line(xs: &[i64]) -> WalkPath {
        WalkPath::from_points(xs.iter().map(|&x| LatticePoint::new(&[x]).unwrap()).collect(), 8).unwrap()
    }

    #[test]
    fn rescale_floor_values() {
        let r = rescale(&line(&[0, 1, 2, 3, 4]), 1.0);
        for (t, want) in [(0.0, 0.0), (0.25, 0.25), (0.5, 0.5), (0.74, 0.5), (1.0, 1.0)] {
            assert!((r.value_at(t)[0] - want).abs() < 1e-12, "t = {t}");
        }
        assert!((r.interpolated_at(0.375)[0] - 0.375).abs() < 1e-12);
    }

    #[test]
    fn rescale_one_step() {
        let r = rescale(&line(&[0, 7]), 1.5);
        assert_eq!(r.value_at(0.99), vec![0.0]);
        assert_eq!(r.value_at(1.0), vec![7.0]);
    }

    #[test]
    fn constant_path_rescales_to_zero() {
        let r = rescale(&line(&[0, 0, 0]), 1.2);
        assert!(r.to_step_path().lq_norm(2.0) == 0.0);
    }

    #[test]
    fn short_jump_cases() {
        // k = 2, alpha = 1, eps = 0.5 -> threshold 2
        let all_long = line(&[0, 5, 10, 15]);
        assert_eq!(short_jump_max(&all_long, 2, 0.5, 1.0).unwrap().w_k, 0.0);
        let one_short = line(&[0, 1, 6, 11]);
        assert!((short_jump_max(&one_short, 2, 0.5, 1.0).unwrap().w_k - 0.25).abs() < 1e-12);
        let alternating = line(&[0, 1, 0, 1]);
        assert!((short_jump_max(&alternating, 2, 0.5, 1.0).unwrap().w_k - 0.25).abs() < 1e-12);
        assert!(matches!(
            short_jump_max(&line(&[0, 1]), 2, 0.5, 1.0),
            Err(LabError::PathTooShort { .. })
        ));
    }

    #[test]
    fn phi_examples() {
        let p = line(&[0, 1, 0, 2]);
        let c = new_vertex_counter(&[p.clone(), p]);
        assert_eq!(c.phi_tilde[0], vec![1, 1, 2]);
        assert_eq!(c.phi[0], vec![1, 1, 2]);
        assert_eq!(c.phi[1], vec![0, 0, 0]);
        assert_eq!(new_vertex_counter(&[line(&[0, 0, 0])]).phi[0], vec![0, 0]);
    }

    #[test]
    fn drift_of_grid_vertex() {
        let cfg = EnvConfig {
            beta: 0.0,
            ..EnvConfig::desk_default(3)
        };
        let mut env = Environment::new(cfg).unwrap();
        let x = LatticePoint::new(&[5, -2]).unwrap();
        assert_eq!(truncated_drift(x, &mut env, 10.0).unwrap().value, vec![0.0, 0.0]);
    }

    #[test]
    fn drift_matches_resummation() {
        let mut env = Environment::new(EnvConfig::desk_default(17)).unwrap();
        let x = LatticePoint::new(&[3, 1]).unwrap();
        let nb = env.neighbors(x).unwrap().to_vec();
        let mut want = [0.0; 2];
        for y in &nb {
            if (*y - x).norm() <= 4.5 {
                want[0] += (y.coord(0) - 3) as f64;
                want[1] += (y.coord(1) - 1) as f64;
            }
        }
        let got = truncated_drift(x, &mut env, 4.5).unwrap().value;
        for i in 0..2 {
            assert!((got[i] - want[i] / nb.len() as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn lag_pairs_counted() {
        // returns to 0 at lags 2 and 4 from m = 0; from m = 1 (at 1) lag 2 hits 1
        let p = line(&[0, 1, 0, 1, 0, 1]);
        let r = lag_return_profile(&[p], &[2], 2).unwrap();
        // m = 0: lags 2, 3 -> X_2 = 0 yes, X_3 = 1 no; m = 1: X_3 = 1 yes, X_4 = 0 no
        assert_eq!(r.rows[0].returns, 2);
        assert!((r.rows[0].p_hat - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_trials_gives_empty_table() {
        let mut env = Environment::new(EnvConfig::desk_default(1)).unwrap();
        let o = LatticePoint::origin(2);
        assert!(return_probability_profile(&mut env, o, &[2, 4], 0, 1).unwrap().rows.is_empty());
    }
}
