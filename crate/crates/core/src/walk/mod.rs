//! Simple random walks on revealed environments.

pub mod export;
pub mod functionals;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use functionals::{
    lag_return_profile, new_vertex_counter, rescale, return_probability_profile, short_jump_max,
    truncated_drift, PhiCounts, RescaledPath, ReturnProfile, ReturnRow, ShortJumpStats,
};

use crate::env::Environment;
use crate::error::{LabError, Result};
use crate::lattice::LatticePoint;

/// Default cap on the number of steps a single walk may store.
pub const DEFAULT_STEP_BUDGET: usize = 1 << 25;

/// How a step relates to the environment's structural cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpClass {
    /// Self-loop at an isolated vertex.
    Stay,
    /// Along a hash-resolved pair.
    Short,
    /// Along a shell-sampled pair.
    Long,
}

impl JumpClass {
    pub fn as_str(self) -> &'static str {
        match self {
            JumpClass::Stay => "stay",
            JumpClass::Short => "short",
            JumpClass::Long => "long",
        }
    }
}

/// One walk `X_0 = 0, X_1, ..., X_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkPath {
    pub steps: Vec<LatticePoint>,
    pub env_seed: u64,
    pub walk_seed: u64,
    /// Class of step `i` (from `X_{i-1}` to `X_i`) at index `i - 1`.
    pub jump_log: Vec<JumpClass>,
    /// Vertices whose neighbourhoods this walk revealed for the first time.
    pub revealed: usize,
}

impl WalkPath {
    /// Number of steps `n`.
    pub fn len(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `X_i - X_{i-1}` for `1 <= i <= n`.
    pub fn jump(&self, i: usize) -> LatticePoint {
        self.steps[i] - self.steps[i - 1]
    }

    pub fn endpoint(&self) -> LatticePoint {
        *self.steps.last().expect("walk has at least X_0")
    }

    /// The first `n + 1` points as a walk of `n` steps.
    pub fn prefix(&self, n: usize) -> WalkPath {
        WalkPath {
            steps: self.steps[..=n].to_vec(),
            env_seed: self.env_seed,
            walk_seed: self.walk_seed,
            jump_log: self.jump_log[..n].to_vec(),
            revealed: self.revealed,
        }
    }

    /// Builds a path from raw points (for tests and replays). Steps are
    /// classified against `short_cutoff` in sup-norm.
    pub fn from_points(steps: Vec<LatticePoint>, short_cutoff: i64) -> Result<Self> {
        if steps.is_empty() {
            return Err(LabError::Contract("a walk has at least one point".into()));
        }
        let jump_log = steps
            .windows(2)
            .map(|w| classify(w[1] - w[0], short_cutoff))
            .collect();
        Ok(Self {
            steps,
            env_seed: 0,
            walk_seed: 0,
            jump_log,
            revealed: 0,
        })
    }
}

fn classify(j: LatticePoint, short_cutoff: i64) -> JumpClass {
    match j.norm_inf() {
        0 => JumpClass::Stay,
        n if n <= short_cutoff => JumpClass::Short,
        _ => JumpClass::Long,
    }
}

/// One step from `x`: a uniform neighbour, or `x` itself when isolated.
pub fn walk_step<R: Rng + ?Sized>(x: LatticePoint, env: &mut Environment, rng: &mut R) -> Result<LatticePoint> {
    let nb = env.neighbors(x)?;
    if nb.is_empty() {
        return Ok(x);
    }
    Ok(nb[rng.random_range(0..nb.len())])
}

/// Runs `n` steps from the origin with the default step budget.
pub fn run_walk(env: &mut Environment, n: usize, walk_seed: u64) -> Result<WalkPath> {
    run_walk_from(env, LatticePoint::origin(env.dim()), n, walk_seed, DEFAULT_STEP_BUDGET)
}

/// Runs `n` steps from `start`, refusing horizons above `budget`.
pub fn run_walk_from(
    env: &mut Environment,
    start: LatticePoint,
    n: usize,
    walk_seed: u64,
    budget: usize,
) -> Result<WalkPath> {
    if n > budget {
        return Err(LabError::HorizonTooLarge {
            requested: n,
            budget,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(walk_seed);
    let cutoff = env.config().short_cutoff;
    let before = env.revealed_count();
    let mut steps = Vec::with_capacity(n + 1);
    let mut jump_log = Vec::with_capacity(n);
    let mut x = start;
    steps.push(x);
    for _ in 0..n {
        let y = walk_step(x, env, &mut rng)?;
        jump_log.push(classify(y - x, cutoff));
        steps.push(y);
        x = y;
    }
    Ok(WalkPath {
        steps,
        env_seed: env.config().seed,
        walk_seed,
        jump_log,
        revealed: env.revealed_count() - before,
    })
}

/// Whether the cluster of `x` has at least `limit` vertices (breadth-first,
/// revealing as it goes, stopping as soon as the answer is known).
pub fn cluster_reaches(env: &mut Environment, x: LatticePoint, limit: usize) -> Result<bool> {
    let mut seen = rustc_hash::FxHashSet::default();
    let mut queue = std::collections::VecDeque::new();
    seen.insert(x);
    queue.push_back(x);
    while let Some(v) = queue.pop_front() {
        if seen.len() >= limit {
            return Ok(true);
        }
        for &u in env.neighbors(v)? {
            if seen.insert(u) {
                queue.push_back(u);
            }
        }
    }
    Ok(seen.len() >= limit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvConfig;

    fn pt(c: &[i64]) -> LatticePoint {
        LatticePoint::new(c).unwrap()
    }

    #[test]
    fn zero_steps() {
        let mut env = Environment::new(EnvConfig::desk_default(1)).unwrap();
        let p = run_walk(&mut env, 0, 5).unwrap();
        assert_eq!(p.steps, vec![pt(&[0, 0])]);
    }

    #[test]
    fn replay_is_identical() {
        let cfg = EnvConfig::desk_default(7);
        let a = run_walk(&mut Environment::new(cfg.clone()).unwrap(), 2000, 3).unwrap();
        let b = run_walk(&mut Environment::new(cfg).unwrap(), 2000, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn steps_follow_open_edges() {
        let mut env = Environment::new(EnvConfig::desk_default(9)).unwrap();
        let p = run_walk(&mut env, 3000, 1).unwrap();
        for i in 1..=p.len() {
            let (a, b) = (p.steps[i - 1], p.steps[i]);
            assert!(env.pair_state(a, b).unwrap().is_open());
        }
    }

    #[test]
    fn isolated_start_stays() {
        let cfg = EnvConfig {
            beta: 0.0,
            nn_open: false,
            ..EnvConfig::desk_default(1)
        };
        let mut env = Environment::new(cfg).unwrap();
        let p = run_walk(&mut env, 10, 1).unwrap();
        assert!(p.steps.iter().all(|x| x.is_origin()));
        assert!(p.jump_log.iter().all(|&c| c == JumpClass::Stay));
    }

    #[test]
    fn budget_enforced() {
        let mut env = Environment::new(EnvConfig::desk_default(1)).unwrap();
        let r = run_walk_from(&mut env, pt(&[0, 0]), 100, 1, 10);
        assert!(matches!(r, Err(LabError::HorizonTooLarge { .. })));
    }

    #[test]
    fn grid_cluster_is_large() {
        let mut env = Environment::new(EnvConfig::desk_default(1)).unwrap();
        assert!(cluster_reaches(&mut env, pt(&[0, 0]), 500).unwrap());
    }
}
