use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coupling::{geometric_variable, Endpoint, UniformStream};
use crate::env::hash::child_seed;
use crate::env::prob::sphere_area;
use crate::env::shell::ShellSampler;
use crate::env::{EdgeProbModel, EnvConfig};
use crate::error::{LabError, Result};
use crate::lattice::LatticePoint;
use crate::path::StepPath;

/// Empirical local characteristics of long-edge endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointPool {
    pub entries: Vec<Endpoint>,
}

impl EndpointPool {
    pub fn new(entries: Vec<Endpoint>) -> Self {
        Self { entries }
    }

    /// Endpoint with only its `2d` lattice neighbours and no local returns.
    pub fn lattice(d: usize) -> Self {
        Self::new(vec![Endpoint::new(2 * d as u32, 0.0)])
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Endpoint {
        self.entries[rng.random_range(0..self.entries.len())]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateConfig {
    pub k: u32,
    pub epsilon: f64,
    pub epsilon1: f64,
    pub c_hat: f64,
    pub env: EnvConfig,
    pub pool: EndpointPool,
}

impl SurrogateConfig {
    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        if !(self.epsilon1 > 0.0 && self.epsilon1 < self.epsilon && self.epsilon < 1.0) {
            return Err(LabError::InvalidConfig(format!(
                "need 0 < epsilon1 < epsilon < 1, got {} and {}",
                self.epsilon1, self.epsilon
            )));
        }
        if !(self.c_hat > 0.0 && self.c_hat < 1.0) {
            return Err(LabError::InvalidConfig(format!("c_hat must lie in (0, 1), got {}", self.c_hat)));
        }
        if self.pool.entries.is_empty() {
            return Err(LabError::InvalidConfig("endpoint pool is empty".into()));
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        self.env.alpha()
    }

    /// Jumps longer than this enter the sum.
    pub fn threshold(&self) -> f64 {
        2f64.powf((1.0 / self.alpha() - self.epsilon) * self.k as f64)
    }

    /// Jumps longer than this belong to the main part.
    pub fn main_threshold(&self) -> f64 {
        2f64.powf((1.0 / self.alpha() - self.epsilon1) * self.k as f64)
    }
}

/// `sum_{|x| > threshold} p(x)`: lattice sum up to `radius`, continuum tail beyond.
pub fn long_edge_mass(model: &EdgeProbModel, threshold: f64, radius: i64) -> f64 {
    let r = radius as f64;
    let mut s = 0.0;
    if threshold < r {
        for j in LatticePoint::origin(model.d).cube_around(radius) {
            let len = j.norm();
            if len > threshold && len <= r {
                s += model.prob(j);
            }
        }
    }
    let edge = threshold.max(r);
    let d = model.d as f64;
    s + model.beta * sphere_area(model.d) * edge.powf(d - model.s) / (model.s - d)
}

/// One surrogate sample. Paths are rescaled by `n^{-1/alpha}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogatePath {
    pub n: usize,
    pub d: usize,
    pub scale: f64,
    /// `Z_i` split into main and remainder parts, `n * d` values each.
    pub z_main: Vec<f64>,
    pub z_rest: Vec<f64>,
    /// Steps whose fresh vertex carries some long edge.
    pub with_long_edge: usize,
    /// Steps with `sigma = 1`.
    pub crossed: usize,
    /// Indexed by `floor(i c_hat)`.
    pub frak_x: StepPath,
    pub frak_m: StepPath,
    pub frak_n: StepPath,
}

impl SurrogatePath {
    pub fn z(&self, i: usize) -> Vec<f64> {
        (0..self.d)
            .map(|c| self.z_main[i * self.d + c] + self.z_rest[i * self.d + c])
            .collect()
    }

    pub fn z_norms(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.z(i).iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect()
    }

    pub fn nonzero(&self) -> usize {
        (0..self.n).filter(|&i| self.z(i).iter().any(|&v| v != 0.0)).count()
    }

    /// The sum indexed by a new-vertex counter, `phi[i] <= n`.
    pub fn phi_indexed(&self, phi: &[u64]) -> Result<StepPath> {
        let both: Vec<f64> = self.z_main.iter().zip(&self.z_rest).map(|(a, b)| a + b).collect();
        indexed_path(&both, self.d, self.scale, phi.iter().map(|&p| p as usize))
    }
}

fn indexed_path(z: &[f64], d: usize, scale: f64, counts: impl Iterator<Item = usize>) -> Result<StepPath> {
    let n = z.len() / d;
    let mut values = Vec::new();
    let mut acc = vec![0.0; d];
    let mut used = 0;
    for c in counts {
        if c > n {
            return Err(LabError::Contract(format!("index {c} beyond {n} surrogate variables")));
        }
        if c < used {
            return Err(LabError::Contract("surrogate index must not decrease".into()));
        }
        while used < c {
            for (a, v) in acc.iter_mut().zip(&z[used * d..(used + 1) * d]) {
                *a += v;
            }
            used += 1;
        }
        values.extend(acc.iter().map(|a| a * scale));
    }
    StepPath::new(d, values)
}

/// Draws `n` i.i.d. variables `Z_i = sigma_i sum_{|x| > threshold} x w_i(x)`
/// and their partial sums over `floor(i c_hat)`, `i = 0..=n`.
pub fn surrogate_sum(cfg: &SurrogateConfig, n: usize, seed: u64) -> Result<SurrogatePath> {
    cfg.validate()?;
    let d = cfg.env.d;
    let model = EdgeProbModel::from_config(&cfg.env);
    let thr = cfg.threshold();
    let thr_main = cfg.main_threshold();
    let inner = (thr / (d as f64).sqrt()).floor() as i64;
    let mut z_main = vec![0.0; n * d];
    let mut z_rest = vec![0.0; n * d];
    let mut with_long_edge = 0;
    let mut crossed = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if inner < cfg.env.max_jump {
        let sampler = ShellSampler::new(model, inner, cfg.env.max_jump);
        let draws = sampler.sample_many(n as u64, &mut rng);
        let mut i = 0;
        while i < draws.len() {
            let copy = draws[i].0 as usize;
            let mut j = i;
            let mut jumps = Vec::new();
            while j < draws.len() && draws[j].0 as usize == copy {
                if draws[j].1.norm() > thr {
                    jumps.push(draws[j].1);
                }
                j += 1;
            }
            i = j;
            if jumps.is_empty() {
                continue;
            }
            with_long_edge += 1;
            let (v, x) = (cfg.pool.draw(&mut rng), cfg.pool.draw(&mut rng));
            let mut sv = UniformStream::new(child_seed(seed, 2 * copy as u64 + 1));
            let mut sx = UniformStream::new(child_seed(seed, 2 * copy as u64 + 2));
            let r = |e: Endpoint, s: &mut UniformStream| -> Result<Option<u64>> {
                let q = e.crossing_parameter();
                if q > 0.0 {
                    geometric_variable(q, s).map(Some)
                } else {
                    Ok(None)
                }
            };
            let far = match (r(v, &mut sv)?, r(x, &mut sx)?) {
                (Some(a), Some(b)) => a > b,
                (None, Some(_)) => true,
                _ => false,
            };
            if !far {
                continue;
            }
            crossed += 1;
            for jmp in jumps {
                let target = if jmp.norm() > thr_main { &mut z_main } else { &mut z_rest };
                for c in 0..d {
                    target[copy * d + c] += jmp.coord(c) as f64;
                }
            }
        }
    }
    let scale = (n.max(1) as f64).powf(-1.0 / cfg.alpha());
    let idx = || (0..=n).map(|i| (i as f64 * cfg.c_hat).floor() as usize);
    let both: Vec<f64> = z_main.iter().zip(&z_rest).map(|(a, b)| a + b).collect();
    Ok(SurrogatePath {
        frak_x: indexed_path(&both, d, scale, idx())?,
        frak_m: indexed_path(&z_main, d, scale, idx())?,
        frak_n: indexed_path(&z_rest, d, scale, idx())?,
        n,
        d,
        scale,
        z_main,
        z_rest,
        with_long_edge,
        crossed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(k: u32) -> SurrogateConfig {
        SurrogateConfig {
            k,
            epsilon: 0.1,
            epsilon1: 0.05,
            c_hat: 0.6,
            env: EnvConfig::desk_default(0),
            pool: EndpointPool::lattice(2),
        }
    }

    #[test]
    fn threshold_beyond_range_gives_zero() {
        let mut c = cfg(12);
        c.env.max_jump = 20;
        let s = surrogate_sum(&c, 1000, 1).unwrap();
        assert_eq!(s.with_long_edge, 0);
        assert!(s.frak_x.endpoint().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn split_adds_up() {
        let s = surrogate_sum(&cfg(10), 4000, 2).unwrap();
        for i in 0..=s.frak_x.intervals() {
            for c in 0..2 {
                let sum = s.frak_m.value(i)[c] + s.frak_n.value(i)[c];
                assert!((s.frak_x.value(i)[c] - sum).abs() < 1e-9);
            }
        }
        assert!(s.crossed <= s.with_long_edge);
    }

    #[test]
    fn long_edge_frequency_matches_tail_sum() {
        let c = cfg(10);
        let n = 200_000;
        let s = surrogate_sum(&c, n, 3).unwrap();
        let model = EdgeProbModel::from_config(&c.env);
        let mass = long_edge_mass(&model, c.threshold(), 400);
        let p = 1.0 - (-mass).exp();
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((s.with_long_edge as f64 - n as f64 * p).abs() < 4.0 * sd, "{} vs {}", s.with_long_edge, n as f64 * p);
    }

    #[test]
    fn lattice_pool_crosses_with_geometric_odds() {
        // q = 4/5 on both sides: P(R_v > R_x) = q(1-q)/(1-(1-q)^2) = 1/6
        let s = surrogate_sum(&cfg(8), 300_000, 4).unwrap();
        let f = s.crossed as f64 / s.with_long_edge as f64;
        let sd = (f * (1.0 - f) / s.with_long_edge as f64).sqrt();
        assert!((f - 1.0 / 6.0).abs() < 4.0 * sd, "{f}");
    }

    #[test]
    fn phi_indexing() {
        let s = surrogate_sum(&cfg(8), 1000, 5).unwrap();
        let p = s.phi_indexed(&[0, 1, 1, 3]).unwrap();
        assert_eq!(p.value(0), &[0.0, 0.0]);
        assert!(s.phi_indexed(&[0, 2000]).is_err());
        assert!(s.phi_indexed(&[0, 5, 3]).is_err());
    }
}
