//! Cluster decomposition of boxes and the cluster-size experiments.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::env::hash::child_seed;
use crate::env::{BackendKind, EnvConfig, Environment};
use crate::error::{LabError, Result};
use crate::lattice::LatticePoint;
use crate::stats::{ols, quantile, wilson_interval, LinearFit};

/// Disjoint sets with path halving and union by size; ties go to the smaller root.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let g = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = g;
            x = g;
        }
        x
    }

    pub fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        let (sa, sb) = (self.size[ra as usize], self.size[rb as usize]);
        let (root, child) = if sa > sb || (sa == sb && ra < rb) { (ra, rb) } else { (rb, ra) };
        self.parent[child as usize] = root;
        self.size[root as usize] = sa + sb;
    }

    pub fn set_size(&mut self, x: u32) -> u32 {
        let r = self.find(x);
        self.size[r as usize]
    }
}

/// Row-major indexing of the box `[-n, n]^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxIndex {
    pub d: usize,
    pub n: i64,
}

impl BoxIndex {
    pub fn side(&self) -> usize {
        (2 * self.n + 1) as usize
    }

    pub fn len(&self) -> usize {
        self.side().pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, x: LatticePoint) -> Option<usize> {
        if !x.in_box(self.n) {
            return None;
        }
        Some(x.coords().iter().fold(0, |acc, &c| acc * self.side() + (c + self.n) as usize))
    }

    pub fn point(&self, mut i: usize) -> LatticePoint {
        let mut c = vec![0; self.d];
        for axis in (0..self.d).rev() {
            c[axis] = (i % self.side()) as i64 - self.n;
            i /= self.side();
        }
        LatticePoint::new(&c).expect("dimension already validated")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterDecomposition {
    pub bounds: BoxIndex,
    /// Cluster id (the root's box index) of every box vertex.
    pub labels: Vec<u32>,
    /// Cluster sizes in descending order.
    pub sizes: Vec<u32>,
    pub largest: u32,
}

impl ClusterDecomposition {
    pub fn label(&self, x: LatticePoint) -> Option<u32> {
        self.bounds.index(x).map(|i| self.labels[i])
    }

    pub fn n1(&self) -> u32 {
        self.sizes.first().copied().unwrap_or(0)
    }

    /// Size of the second largest cluster, 0 if there is only one.
    pub fn n2(&self) -> u32 {
        self.sizes.get(1).copied().unwrap_or(0)
    }

    pub fn in_largest(&self, x: LatticePoint) -> bool {
        self.label(x) == Some(self.largest)
    }

    pub fn size_of(&self, x: LatticePoint) -> Option<u32> {
        let l = self.label(x)?;
        Some(self.labels.iter().filter(|&&m| m == l).count() as u32)
    }
}

/// Union-find over the open edges with both endpoints in `[-n, n]^d`.
pub fn decompose(env: &Environment, n: i64) -> Result<ClusterDecomposition> {
    match env.config().backend {
        BackendKind::ExactBoxed { half_width } if half_width >= n => {}
        _ => {
            return Err(LabError::BackendMismatch(format!(
                "cluster decomposition of [-{n}, {n}]^d needs an exact box at least that large"
            )))
        }
    }
    let bounds = BoxIndex { d: env.dim(), n };
    let mut uf = UnionFind::new(bounds.len());
    for (x, y) in env.edges() {
        if let (Some(a), Some(b)) = (bounds.index(x), bounds.index(y)) {
            uf.union(a as u32, b as u32);
        }
    }
    let labels: Vec<u32> = (0..bounds.len() as u32).map(|i| uf.find(i)).collect();
    let mut roots: Vec<(u32, u32)> = labels
        .iter()
        .enumerate()
        .filter(|&(i, &l)| i as u32 == l)
        .map(|(_, &l)| (uf.size[l as usize], l))
        .collect();
    roots.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(ClusterDecomposition {
        bounds,
        largest: roots[0].1,
        sizes: roots.iter().map(|r| r.0).collect(),
        labels,
    })
}

/// Cluster sizes of the box graph by breadth-first search, descending.
pub fn bfs_cluster_sizes(env: &Environment, n: i64) -> Vec<u32> {
    let bounds = BoxIndex { d: env.dim(), n };
    let mut seen = vec![false; bounds.len()];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..bounds.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut size = 0;
        while let Some(i) = queue.pop_front() {
            size += 1;
            for &y in env.known_neighbors(bounds.point(i)) {
                if let Some(j) = bounds.index(y) {
                    if !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        sizes.push(size);
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

/// One row of the cluster CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRecord {
    pub n: i64,
    pub seed: u64,
    pub n1: u32,
    pub n2: u32,
    /// Whether the origin reaches outside the box (only set by escape runs).
    pub escape: Option<bool>,
}

pub fn records_csv(rows: &[ClusterRecord]) -> String {
    let mut out = String::from("N,seed,n_1,n_2,escape\n");
    for r in rows {
        let e = match r.escape {
            Some(true) => "1",
            Some(false) => "0",
            None => "",
        };
        out.push_str(&format!("{},{},{},{},{}\n", r.n, r.seed, r.n1, r.n2, e));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondClusterRow {
    pub n: i64,
    pub trials: usize,
    pub n1_median: f64,
    pub n2_median: f64,
    pub n2_q90: f64,
    pub n2_max: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondClusterTable {
    pub rows: Vec<SecondClusterRow>,
    pub records: Vec<ClusterRecord>,
    /// `ln median n_2` against `ln N`.
    pub power_fit: Option<LinearFit>,
    /// `ln median n_2` against `ln ln N`: the polylog exponent.
    pub polylog_fit: Option<LinearFit>,
}

/// Exact-box decompositions of `[-N, N]^d` for every `N` in `n_list`.
pub fn second_cluster_scaling(cfg: &EnvConfig, n_list: &[i64], trials: usize, seed: u64) -> Result<SecondClusterTable> {
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for (a, &n) in n_list.iter().enumerate() {
        let mut n1 = Vec::with_capacity(trials);
        let mut n2 = Vec::with_capacity(trials);
        for t in 0..trials as u64 {
            let s = child_seed(child_seed(seed, a as u64), t);
            let env = Environment::new(cfg.with_seed(s).with_backend(BackendKind::ExactBoxed { half_width: n }))?;
            let dec = decompose(&env, n)?;
            n1.push(dec.n1() as f64);
            n2.push(dec.n2() as f64);
            records.push(ClusterRecord {
                n,
                seed: s,
                n1: dec.n1(),
                n2: dec.n2(),
                escape: None,
            });
        }
        if trials == 0 {
            continue;
        }
        rows.push(SecondClusterRow {
            n,
            trials,
            n1_median: quantile(&n1, 0.5),
            n2_median: quantile(&n2, 0.5),
            n2_q90: quantile(&n2, 0.9),
            n2_max: n2.iter().fold(0.0f64, |m, &v| m.max(v)) as u32,
        });
    }
    let used: Vec<&SecondClusterRow> = rows.iter().filter(|r| r.n2_median > 0.0).collect();
    let fit = |f: &dyn Fn(f64) -> f64| {
        if used.len() < 2 {
            return None;
        }
        let x: Vec<f64> = used.iter().map(|r| f(r.n as f64)).collect();
        let y: Vec<f64> = used.iter().map(|r| r.n2_median.ln()).collect();
        ols(&x, &y).ok()
    };
    let power_fit = fit(&|n: f64| n.ln());
    let polylog_fit = fit(&|n: f64| n.ln().ln());
    Ok(SecondClusterTable {
        rows,
        records,
        power_fit,
        polylog_fit,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeEstimate {
    pub n: i64,
    pub trials: usize,
    /// Realizations with the origin outside the largest cluster of the box.
    pub conditioned: usize,
    pub escapes: usize,
    pub p_hat: Option<f64>,
    pub interval: Option<(f64, f64)>,
}

impl EscapeEstimate {
    pub fn null_event(&self) -> bool {
        self.conditioned == 0
    }
}

/// `P(0 connects outside [-N, N]^d | 0 not in the largest cluster of the box)`.
/// Connections are followed inside the box of half-width `2N`.
pub fn escape_given_not_largest(cfg: &EnvConfig, n: i64, trials: usize, seed: u64) -> Result<EscapeEstimate> {
    let d = cfg.d;
    let origin = LatticePoint::origin(d);
    let mut conditioned = 0;
    let mut escapes = 0;
    for t in 0..trials as u64 {
        let env = Environment::new(
            cfg.with_seed(child_seed(seed, t))
                .with_backend(BackendKind::ExactBoxed { half_width: 2 * n }),
        )?;
        let inner = decompose(&env, n)?;
        if inner.in_largest(origin) {
            continue;
        }
        conditioned += 1;
        let outer = decompose(&env, 2 * n)?;
        let l = outer.label(origin).expect("origin in box");
        let escaped = outer
            .labels
            .iter()
            .enumerate()
            .any(|(i, &m)| m == l && !outer.bounds.point(i).in_box(n));
        escapes += escaped as usize;
    }
    let (p_hat, interval) = if conditioned > 0 {
        (
            Some(escapes as f64 / conditioned as f64),
            Some(wilson_interval(escapes as u64, conditioned as u64, 1.96)),
        )
    } else {
        (None, None)
    };
    Ok(EscapeEstimate {
        n,
        trials,
        conditioned,
        escapes,
        p_hat,
        interval,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact(cfg: EnvConfig, n: i64) -> Environment {
        Environment::new(cfg.with_backend(BackendKind::ExactBoxed { half_width: n })).unwrap()
    }

    #[test]
    fn empty_graph_is_all_singletons() {
        let cfg = EnvConfig {
            beta: 0.0,
            nn_open: false,
            ..EnvConfig::desk_default(1)
        };
        let dec = decompose(&exact(cfg, 4), 4).unwrap();
        assert_eq!(dec.sizes, vec![1; 81]);
    }

    #[test]
    fn grid_is_one_cluster() {
        let cfg = EnvConfig {
            beta: 0.0,
            ..EnvConfig::desk_default(1)
        };
        let dec = decompose(&exact(cfg, 5), 5).unwrap();
        assert_eq!(dec.sizes, vec![121]);
        assert_eq!(dec.n2(), 0);
    }

    #[test]
    fn matches_bfs() {
        let cfg = EnvConfig {
            beta: 0.5,
            nn_open: false,
            ..EnvConfig::desk_default(0)
        };
        for seed in 0..5 {
            let env = exact(cfg.with_seed(seed), 8);
            assert_eq!(decompose(&env, 8).unwrap().sizes, bfs_cluster_sizes(&env, 8));
        }
    }

    #[test]
    fn lazy_backend_rejected() {
        let env = Environment::new(EnvConfig::desk_default(0)).unwrap();
        assert!(matches!(decompose(&env, 4), Err(LabError::BackendMismatch(_))));
    }

    #[test]
    fn box_index_round_trip() {
        let b = BoxIndex { d: 3, n: 2 };
        for i in 0..b.len() {
            assert_eq!(b.index(b.point(i)), Some(i));
        }
    }

    #[test]
    fn forced_grid_has_null_conditioning() {
        let cfg = EnvConfig {
            beta: 0.0,
            ..EnvConfig::desk_default(0)
        };
        let e = escape_given_not_largest(&cfg, 4, 3, 1).unwrap();
        assert!(e.null_event());
        assert_eq!(e.p_hat, None);
    }

    #[test]
    fn csv_rows() {
        let r = ClusterRecord {
            n: 8,
            seed: 3,
            n1: 200,
            n2: 4,
            escape: Some(true),
        };
        assert_eq!(records_csv(&[r]), "N,seed,n_1,n_2,escape\n8,3,200,4,1\n");
    }
}
