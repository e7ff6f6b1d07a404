//! Regeneration times of a single walk and the block decomposition of its
//! new-vertex count.

use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};

use super::CouplingParams;
use crate::env::Environment;
use crate::error::Result;
use crate::lattice::LatticePoint;
use crate::walk::WalkPath;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegenerationTimes {
    /// Times the walk stands at an endpoint of a long edge not seen before.
    pub discoveries: Vec<usize>,
    /// The far endpoint of each discovered edge.
    pub far_ends: Vec<LatticePoint>,
    /// Discoveries after which the walk is near the far endpoint one phase later.
    pub times: Vec<usize>,
    pub beta_tilde: usize,
    pub beta: usize,
    /// Largest gap between consecutive discoveries, counting `0` and the horizon.
    pub max_gap_tilde: usize,
    pub max_gap: usize,
}

fn max_gap(times: &[usize], n: usize) -> usize {
    let mut prev = 0;
    let mut best = 0;
    for &t in times.iter().chain(std::iter::once(&n)) {
        best = best.max(t - prev);
        prev = t;
    }
    best
}

pub fn regeneration_times(path: &WalkPath, env: &mut Environment, params: &CouplingParams) -> Result<RegenerationTimes> {
    let n = path.len();
    let t_special = params.special_length();
    let mut seen: FxHashSet<(LatticePoint, LatticePoint)> = FxHashSet::default();
    let mut visited: FxHashSet<LatticePoint> = FxHashSet::default();
    let mut discoveries = Vec::new();
    let mut far_ends = Vec::new();
    for (i, &x) in path.steps.iter().enumerate() {
        if !visited.insert(x) {
            continue;
        }
        let mut first_new = None;
        for &y in env.neighbors(x)? {
            if params.is_long(y - x) && seen.insert(LatticePoint::canonical_pair(x, y)) && first_new.is_none() {
                first_new = Some(y);
            }
        }
        if let Some(y) = first_new {
            discoveries.push(i);
            far_ends.push(y);
        }
    }
    let times: Vec<usize> = discoveries
        .iter()
        .zip(&far_ends)
        .filter(|&(&m, &y)| m + t_special <= n && params.in_ball(y, path.steps[m + t_special]))
        .map(|(&m, _)| m)
        .collect();
    Ok(RegenerationTimes {
        beta_tilde: discoveries.len(),
        beta: times.len(),
        max_gap_tilde: max_gap(&discoveries, n),
        max_gap: max_gap(&times, n),
        discoveries,
        far_ends,
        times,
    })
}

/// Points bucketed in cubes of side `r` for radius queries.
pub(crate) struct Buckets {
    r: f64,
    side: i64,
    cells: FxHashMap<LatticePoint, Vec<LatticePoint>>,
}

impl Buckets {
    pub(crate) fn new(r: f64) -> Self {
        Self {
            r,
            side: (r.ceil() as i64).max(1),
            cells: FxHashMap::default(),
        }
    }

    fn cell(&self, x: LatticePoint) -> LatticePoint {
        let c: Vec<i64> = x.coords().iter().map(|v| v.div_euclid(self.side)).collect();
        LatticePoint::new(&c).expect("same dimension")
    }

    pub(crate) fn insert(&mut self, x: LatticePoint) {
        let c = self.cell(x);
        self.cells.entry(c).or_default().push(x);
    }

    /// Some stored point within distance `r` of `x`.
    pub(crate) fn near(&self, x: LatticePoint) -> bool {
        self.cell(x).cube_around(1).iter().any(|c| {
            self.cells
                .get(c)
                .is_some_and(|pts| pts.iter().any(|&p| (p - x).norm() <= self.r))
        })
    }
}

/// Per-block new-vertex counts and the pieces of the direct count they leave out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockCounts {
    /// Counts of the blocks ending at each regeneration time.
    pub blocks: Vec<u64>,
    /// Number of distinct vertices first visited at times `1..=n`.
    pub direct: u64,
    pub block_sum: u64,
    /// First visits to vertices carrying an edge longer than the ball radius.
    pub long_attached: u64,
    /// First visits inside a block lying within the ball radius of the earlier path.
    pub reentries: u64,
    /// First visits in the settling windows and after the last regeneration time.
    pub outside_blocks: u64,
}

impl BlockCounts {
    /// Upper bound on `|direct - block_sum|` from the reported pieces.
    pub fn correction(&self) -> u64 {
        self.long_attached + self.reentries + self.outside_blocks
    }
}

/// Splits the walk at its regeneration times. The first block counts new
/// vertices without edges longer than `2^{epsilon1 k}`, later blocks count
/// vertices new within the block, far from the path before the block, and
/// with no edge longer than the ball radius.
pub fn block_counts(
    path: &WalkPath,
    env: &mut Environment,
    params: &CouplingParams,
    epsilon1: f64,
    regen: &RegenerationTimes,
) -> Result<BlockCounts> {
    let n = path.len();
    let t_special = params.special_length();
    let radius = params.ball_radius();
    let first_cut = 2f64.powf(epsilon1 * params.k as f64);
    let max_len = |env: &mut Environment, x: LatticePoint| -> Result<f64> {
        Ok(env.neighbors(x)?.iter().map(|&y| (y - x).norm()).fold(0.0, f64::max))
    };

    let mut globally_new = vec![false; n + 1];
    let mut seen = FxHashSet::default();
    for (i, &x) in path.steps.iter().enumerate() {
        globally_new[i] = seen.insert(x);
    }
    let direct = globally_new[1..].iter().filter(|&&b| b).count() as u64;

    let mut long_attached = 0;
    for (i, &x) in path.steps.iter().enumerate().skip(1) {
        if globally_new[i] && max_len(env, x)? > radius {
            long_attached += 1;
        }
    }

    let mut blocks = Vec::new();
    let mut reentries = 0;
    let mut in_block = vec![false; n + 1];
    let mut prefix = Buckets::new(radius);
    let mut added = 0;
    let mut start = 0;
    for (j, &m) in regen.times.iter().enumerate() {
        let mut count = 0;
        if j == 0 {
            let mut local = FxHashSet::default();
            for i in 0..=m {
                let x = path.steps[i];
                in_block[i] = true;
                if local.insert(x) && max_len(env, x)? <= first_cut {
                    count += 1;
                }
            }
        } else {
            while added <= start {
                prefix.insert(path.steps[added]);
                added += 1;
            }
            let mut local: FxHashSet<LatticePoint> = path.steps[start..(start + t_special).min(m)].iter().copied().collect();
            for i in start + t_special..=m {
                let x = path.steps[i];
                in_block[i] = true;
                if !local.insert(x) {
                    continue;
                }
                if prefix.near(x) {
                    if globally_new[i] {
                        reentries += 1;
                    }
                    continue;
                }
                if max_len(env, x)? <= radius {
                    count += 1;
                }
            }
        }
        blocks.push(count);
        start = m;
    }
    let outside_blocks = (1..=n).filter(|&i| globally_new[i] && !in_block[i]).count() as u64;
    Ok(BlockCounts {
        block_sum: blocks.iter().sum(),
        blocks,
        direct,
        long_attached,
        reentries,
        outside_blocks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvConfig;

    #[test]
    fn gaps_include_ends() {
        assert_eq!(max_gap(&[], 10), 10);
        assert_eq!(max_gap(&[3, 4], 10), 6);
        assert_eq!(max_gap(&[7], 10), 7);
    }

    #[test]
    fn no_long_edges_means_no_regeneration() {
        let cfg = EnvConfig {
            beta: 0.0,
            ..EnvConfig::desk_default(3)
        };
        let mut env = Environment::new(cfg).unwrap();
        let p = crate::walk::run_walk(&mut env, 512, 2).unwrap();
        let params = CouplingParams::new(9, 0.1, 0.2, 0.25, 1.2).unwrap();
        let r = regeneration_times(&p, &mut env, &params).unwrap();
        assert_eq!((r.beta, r.beta_tilde, r.max_gap), (0, 0, 512));
        let b = block_counts(&p, &mut env, &params, 0.1, &r).unwrap();
        assert_eq!(b.block_sum, 0);
        assert_eq!(b.outside_blocks, b.direct);
    }

    #[test]
    fn buckets_radius_query() {
        let mut b = Buckets::new(2.5);
        b.insert(LatticePoint::new(&[0, 0]).unwrap());
        assert!(b.near(LatticePoint::new(&[2, 1]).unwrap()));
        assert!(!b.near(LatticePoint::new(&[2, 2]).unwrap()));
        assert!(b.near(LatticePoint::new(&[-1, -2]).unwrap()));
    }
}
