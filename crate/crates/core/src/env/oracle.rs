//! Statistical comparison of the lazy backend against the exact box.

use serde::{Deserialize, Serialize};

use crate::env::hash::child_seed;
use crate::env::{BackendKind, EdgeProbModel, EnvConfig, Environment};
use crate::error::Result;
use crate::lattice::LatticePoint;
use crate::stats::{chi_square_two_sample, ChiSquareResult, ClusteredCounts};

/// Number of logarithmic shells for the occupancy comparison.
pub const OCCUPANCY_SHELLS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendComparison {
    pub half_width: i64,
    pub trials: usize,
    pub mean_degree_exact: f64,
    pub mean_degree_lazy: f64,
    /// `sum_x sum_{y in box} p(y - x) / |box|`.
    pub mean_degree_box: f64,
    pub long_edges_exact: u64,
    pub long_edges_lazy: u64,
    pub degree: ChiSquareResult,
    pub long_length: ChiSquareResult,
    pub shell_occupancy: ChiSquareResult,
}

impl BackendComparison {
    pub fn passes(&self, level: f64) -> bool {
        [&self.degree, &self.long_length, &self.shell_occupancy]
            .iter()
            .all(|t| t.p_value > level)
    }
}

/// Mean degree of the box graph: every `j` weighted by the fraction of box
/// vertices `x` with `x + j` still in the box.
pub fn box_mean_degree(model: &EdgeProbModel, n: i64) -> f64 {
    let side = (2 * n + 1) as f64;
    LatticePoint::origin(model.d)
        .cube_around(2 * n)
        .into_iter()
        .filter(|j| !j.is_origin())
        .map(|j| {
            let frac: f64 = j.coords().iter().map(|&c| (side - c.abs() as f64) / side).product();
            model.prob(j) * frac
        })
        .sum()
}

struct Sample {
    degrees: Vec<u64>,
    lengths: Vec<u64>,
    shells: Vec<u64>,
    degree_sum: u64,
    long_edges: u64,
}

fn bump(v: &mut Vec<u64>, i: usize) {
    if v.len() <= i {
        v.resize(i + 1, 0);
    }
    v[i] += 1;
}

fn shell_index(len: f64, inner: f64, outer: f64) -> usize {
    let t = (len / inner).ln() / (outer / inner).ln();
    ((t * OCCUPANCY_SHELLS as f64) as usize).min(OCCUPANCY_SHELLS - 1)
}

fn summarize(env: &mut Environment, n: i64) -> Result<Sample> {
    let d = env.dim();
    let cutoff = env.config().short_cutoff;
    let verts = LatticePoint::origin(d).cube_around(n);
    let mut degrees = Vec::new();
    let mut degree_sum = 0;
    for &x in &verts {
        let k = env.degree(x)?;
        degree_sum += k as u64;
        bump(&mut degrees, k);
    }
    let inner = cutoff as f64;
    let outer = 2.0 * n as f64 * (d as f64).sqrt() + 1.0;
    let mut lengths = Vec::new();
    let mut shells = vec![0; OCCUPANCY_SHELLS];
    let mut long_edges = 0;
    for (x, y) in env.open_edges() {
        let j = y - x;
        if j.norm_inf() <= cutoff {
            continue;
        }
        long_edges += 1;
        let len = j.norm();
        bump(&mut lengths, len.floor() as usize);
        shells[shell_index(len, inner, outer)] += 1;
    }
    Ok(Sample {
        degrees,
        lengths,
        shells,
        degree_sum,
        long_edges,
    })
}

/// Runs `trials` independent realizations of each backend on `[-n, n]^d`
/// and compares the degree law, the long-edge length law and the occupancy
/// of logarithmic length shells. Each realization is one cluster for the
/// design-effect correction of the chi-square statistics.
pub fn oracle_compare_backends(cfg: &EnvConfig, n: i64, trials: usize, seed: u64) -> Result<BackendComparison> {
    let mut deg = (ClusteredCounts::new(), ClusteredCounts::new());
    let mut len = (ClusteredCounts::new(), ClusteredCounts::new());
    let mut occ = (ClusteredCounts::new(), ClusteredCounts::new());
    let mut deg_sum = (0u64, 0u64);
    let mut long = (0u64, 0u64);
    for t in 0..trials as u64 {
        let exact_cfg = cfg
            .with_seed(child_seed(seed, 2 * t))
            .with_backend(BackendKind::ExactBoxed { half_width: n });
        let mut exact = Environment::new(exact_cfg)?;
        let s = summarize(&mut exact, n)?;
        deg.0.push(s.degrees);
        len.0.push(s.lengths);
        occ.0.push(s.shells);
        deg_sum.0 += s.degree_sum;
        long.0 += s.long_edges;

        let mut lazy = Environment::lazy_windowed(cfg.with_seed(child_seed(seed, 2 * t + 1)), n)?;
        let s = summarize(&mut lazy, n)?;
        deg.1.push(s.degrees);
        len.1.push(s.lengths);
        occ.1.push(s.shells);
        deg_sum.1 += s.degree_sum;
        long.1 += s.long_edges;
    }
    let vertices = ((2 * n + 1) as f64).powi(cfg.d as i32) * trials as f64;
    Ok(BackendComparison {
        half_width: n,
        trials,
        mean_degree_exact: deg_sum.0 as f64 / vertices,
        mean_degree_lazy: deg_sum.1 as f64 / vertices,
        mean_degree_box: box_mean_degree(&EdgeProbModel::from_config(cfg), n),
        long_edges_exact: long.0,
        long_edges_lazy: long.1,
        degree: chi_square_two_sample(&deg.0, &deg.1, 20),
        long_length: chi_square_two_sample(&len.0, &len.1, 20),
        shell_occupancy: chi_square_two_sample(&occ.0, &occ.1, 20),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_beta_has_no_long_edges() {
        let cfg = EnvConfig {
            beta: 0.0,
            ..EnvConfig::desk_default(0)
        };
        let r = oracle_compare_backends(&cfg, 10, 3, 1).unwrap();
        assert_eq!(r.long_edges_exact, 0);
        assert_eq!(r.long_edges_lazy, 0);
        assert_eq!(r.mean_degree_exact, r.mean_degree_lazy);
    }

    #[test]
    fn shell_index_range() {
        assert_eq!(shell_index(8.0, 8.0, 100.0), 0);
        assert_eq!(shell_index(100.0, 8.0, 100.0), OCCUPANCY_SHELLS - 1);
    }
}
