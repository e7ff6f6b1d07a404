//! Long-range percolation environments revealed on demand.
//!
//! Pairs at sup-norm distance at most `short_cutoff` are resolved by a
//! counter-based hash of the unordered pair, so their state is a pure function
//! of the seed. Longer pairs are sampled per vertex, shell by shell, and the
//! outcome is written into a ledger so that no pair is ever decided twice.

pub mod config;
pub mod hash;
pub mod oracle;
pub mod prob;
pub mod shell;
pub mod snapshot;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

pub use config::{alpha, BackendKind, EnvConfig, Regime};
pub use prob::{edge_probability, EdgeProbModel};

use crate::error::{LabError, Result};
use crate::lattice::LatticePoint;
use hash::{ordered_pair_hash, pair_hash, vertex_stream_seed};
use shell::ShellSampler;

const FAR_STREAM_TAG: u64 = 0xfa7;
/// Exact boxes with at most this many unordered pairs are built by hashing every pair.
const HASHED_PAIR_LIMIT: u128 = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairState {
    Open,
    Closed,
}

impl PairState {
    pub fn is_open(self) -> bool {
        self == PairState::Open
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RevealKind {
    Local,
    Far,
}

/// One entry of the revelation log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RevealEvent {
    pub vertex: LatticePoint,
    pub kind: RevealKind,
    /// Open edges newly found by this call.
    pub found: usize,
}

#[derive(Debug, Clone, Default)]
struct VertexRecord {
    adj: Vec<LatticePoint>,
    local_done: bool,
    far_done: bool,
}

/// The subgraph induced on a closed Euclidean ball.
#[derive(Debug, Clone, PartialEq)]
pub struct BallGraph {
    pub center: LatticePoint,
    pub radius: f64,
    /// Ball vertices in lexicographic order.
    pub vertices: Vec<LatticePoint>,
    /// Neighbour indices into `vertices`, restricted to the ball.
    pub adjacency: Vec<Vec<usize>>,
}

impl BallGraph {
    pub fn index_of(&self, v: LatticePoint) -> Option<usize> {
        self.vertices.binary_search(&v).ok()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }
}

#[derive(Debug, Clone, Copy)]
struct LocalEntry {
    offset: LatticePoint,
    /// Open iff the top 53 bits of the pair hash are below this.
    threshold: u64,
}

fn threshold(p: f64) -> u64 {
    (p * (1u64 << 53) as f64).ceil() as u64
}

#[inline]
fn hashed_open(seed: u64, x: LatticePoint, y: LatticePoint, threshold: u64) -> bool {
    (pair_hash(seed, x, y) >> 11) < threshold
}

#[derive(Debug, Clone)]
pub struct Environment {
    config: EnvConfig,
    model: EdgeProbModel,
    local: Vec<LocalEntry>,
    far: ShellSampler,
    /// Restricts the lazy backend to a box (used to compare against the exact one).
    window: Option<i64>,
    records: FxHashMap<LatticePoint, VertexRecord>,
    log: Vec<RevealEvent>,
    logging: bool,
}

impl Environment {
    pub fn new(config: EnvConfig) -> Result<Self> {
        config.validate()?;
        let model = EdgeProbModel::from_config(&config);
        let local = local_entries(&model, config.short_cutoff);
        let outer = match config.backend {
            BackendKind::ExactBoxed { half_width } => 2 * half_width,
            BackendKind::LazyShell => config.max_jump,
        };
        let far = ShellSampler::new(model, config.short_cutoff, outer.max(config.short_cutoff));
        let mut env = Self {
            config,
            model,
            local,
            far,
            window: None,
            records: FxHashMap::default(),
            log: Vec::new(),
            logging: false,
        };
        if let BackendKind::ExactBoxed { half_width } = env.config.backend {
            env.build_box(half_width);
        }
        Ok(env)
    }

    /// A lazy environment that only ever reports edges inside `[-n, n]^d`.
    pub fn lazy_windowed(config: EnvConfig, n: i64) -> Result<Self> {
        if n < 1 {
            return Err(LabError::InvalidConfig("window half-width must be at least 1".into()));
        }
        let config = config.with_backend(BackendKind::LazyShell);
        let mut env = Self::new(config)?;
        let outer = (2 * n).min(env.config.max_jump).max(env.config.short_cutoff);
        env.far = ShellSampler::new(env.model, env.config.short_cutoff, outer);
        env.window = Some(n);
        Ok(env)
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn model(&self) -> &EdgeProbModel {
        &self.model
    }

    pub fn dim(&self) -> usize {
        self.config.d
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.config.backend, BackendKind::ExactBoxed { .. })
    }

    /// Half-width of the box the environment lives in, if any.
    pub fn box_half_width(&self) -> Option<i64> {
        match self.config.backend {
            BackendKind::ExactBoxed { half_width } => Some(half_width),
            BackendKind::LazyShell => self.window,
        }
    }

    /// Upper bound on the connection mass beyond the maximum jump range.
    pub fn truncation_bound(&self) -> f64 {
        if self.box_half_width().is_some() {
            return 0.0;
        }
        self.model.tail_mass_bound(self.config.max_jump as f64)
    }

    pub fn set_logging(&mut self, on: bool) {
        self.logging = on;
    }

    pub fn reveal_log(&self) -> &[RevealEvent] {
        &self.log
    }

    pub fn revealed_count(&self) -> usize {
        self.records.len()
    }

    fn check_point(&self, x: LatticePoint) -> Result<()> {
        if x.dim() != self.config.d {
            return Err(LabError::Contract(format!(
                "vertex {x} has dimension {} but the environment has d = {}",
                x.dim(),
                self.config.d
            )));
        }
        if let Some(n) = self.box_half_width() {
            if !x.in_box(n) {
                return Err(LabError::OutOfBox(x.to_string(), n));
            }
        }
        Ok(())
    }

    fn inside(&self, y: LatticePoint) -> bool {
        self.box_half_width().is_none_or(|n| y.in_box(n))
    }

    /// Whether `{x, y}` is decided by the hash (short pair) rather than by sampling.
    pub fn is_short_pair(&self, x: LatticePoint, y: LatticePoint) -> bool {
        (y - x).norm_inf() <= self.config.short_cutoff
    }

    /// State of a short pair straight from the hash; no ledger access.
    pub fn hashed_state(&self, x: LatticePoint, y: LatticePoint) -> PairState {
        let p = self.model.prob(y - x);
        if hashed_open(self.config.seed, x, y, threshold(p)) {
            PairState::Open
        } else {
            PairState::Closed
        }
    }

    /// State of the pair `{x, y}`. Short pairs come from the hash; long pairs
    /// come from the ledger, sampling the long edges of `x` first if needed.
    pub fn pair_state(&mut self, x: LatticePoint, y: LatticePoint) -> Result<PairState> {
        self.check_point(x)?;
        self.check_point(y)?;
        if x == y {
            return Err(LabError::Contract("pair_state(x, x): no self-loops".into()));
        }
        if self.is_short_pair(x, y) {
            return Ok(self.hashed_state(x, y));
        }
        if !self.is_exact() && !self.is_far_done(x) && !self.is_far_done(y) {
            self.sample_incident_long_edges(x)?;
        }
        let open = self.records.get(&x).is_some_and(|r| r.adj.contains(&y));
        Ok(if open { PairState::Open } else { PairState::Closed })
    }

    /// Whether the state of `{x, y}` is already fixed.
    pub fn is_determined(&self, x: LatticePoint, y: LatticePoint) -> bool {
        if self.is_exact() || self.is_short_pair(x, y) {
            return true;
        }
        self.is_far_done(x) || self.is_far_done(y)
    }

    fn is_far_done(&self, x: LatticePoint) -> bool {
        self.records.get(&x).is_some_and(|r| r.far_done)
    }

    fn is_local_done(&self, x: LatticePoint) -> bool {
        self.records.get(&x).is_some_and(|r| r.local_done)
    }

    /// Whether every incident pair of `x` is determined.
    pub fn is_revealed(&self, x: LatticePoint) -> bool {
        if self.is_exact() {
            return true;
        }
        self.records.get(&x).is_some_and(|r| r.local_done && r.far_done)
    }

    fn link(&mut self, x: LatticePoint, y: LatticePoint) {
        self.records.entry(x).or_default().adj.push(y);
        self.records.entry(y).or_default().adj.push(x);
    }

    fn reveal_local(&mut self, x: LatticePoint) {
        if self.is_local_done(x) {
            return;
        }
        let seed = self.config.seed;
        let mut found = 0;
        for i in 0..self.local.len() {
            let e = self.local[i];
            let y = x + e.offset;
            if !hashed_open(seed, x, y, e.threshold) {
                continue;
            }
            if self.inside(y) && !self.is_local_done(y) {
                self.link(x, y);
                found += 1;
            }
        }
        self.records.entry(x).or_default().local_done = true;
        if self.logging {
            self.log.push(RevealEvent {
                vertex: x,
                kind: RevealKind::Local,
                found,
            });
        }
    }

    /// Samples the long edges of `x` shell by shell and marks `x` long-complete.
    /// Pairs already fixed by earlier calls are skipped. Returns the long
    /// neighbours found by this call.
    pub fn sample_incident_long_edges(&mut self, x: LatticePoint) -> Result<Vec<LatticePoint>> {
        self.check_point(x)?;
        if self.is_exact() {
            return Err(LabError::BackendMismatch(
                "the exact backend enumerates long edges at construction".into(),
            ));
        }
        if self.is_far_done(x) {
            return Err(LabError::Contract(format!("vertex {x} is already long-complete")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(vertex_stream_seed(self.config.seed, x, FAR_STREAM_TAG));
        let mut found = Vec::new();
        for j in self.far.sample(&mut rng) {
            let y = x + j;
            if !self.inside(y) || self.is_far_done(y) {
                continue;
            }
            self.link(x, y);
            found.push(y);
        }
        self.records.entry(x).or_default().far_done = true;
        if self.logging {
            self.log.push(RevealEvent {
                vertex: x,
                kind: RevealKind::Far,
                found: found.len(),
            });
        }
        Ok(found)
    }

    /// Determines every pair incident to `x`.
    pub fn ensure_revealed(&mut self, x: LatticePoint) -> Result<()> {
        self.check_point(x)?;
        if self.is_exact() {
            return Ok(());
        }
        self.reveal_local(x);
        if !self.is_far_done(x) {
            self.sample_incident_long_edges(x)?;
        }
        Ok(())
    }

    /// All neighbours of `x`, revealing it first.
    pub fn neighbors(&mut self, x: LatticePoint) -> Result<&[LatticePoint]> {
        self.ensure_revealed(x)?;
        Ok(self.records.get(&x).map_or(&[][..], |r| &r.adj[..]))
    }

    pub fn degree(&mut self, x: LatticePoint) -> Result<usize> {
        Ok(self.neighbors(x)?.len())
    }

    /// Neighbours recorded so far, without revealing anything.
    pub fn known_neighbors(&self, x: LatticePoint) -> &[LatticePoint] {
        self.records.get(&x).map_or(&[][..], |r| &r.adj[..])
    }

    /// Reveals the ball `|y - x| <= r` and returns the graph it induces.
    pub fn reveal_ball(&mut self, x: LatticePoint, r: f64) -> Result<BallGraph> {
        self.check_point(x)?;
        let mut vertices = x.closed_ball(r);
        if let Some(n) = self.box_half_width() {
            if self.is_exact() && vertices.iter().any(|v| !v.in_box(n)) {
                return Err(LabError::OutOfBox(format!("ball around {x} of radius {r}"), n));
            }
            vertices.retain(|v| v.in_box(n));
        }
        let needs_far = 2 * (r.floor() as i64) > self.config.short_cutoff;
        for &v in &vertices {
            if needs_far {
                self.ensure_revealed(v)?;
            } else if !self.is_exact() {
                self.reveal_local(v);
            }
        }
        let r2 = r * r;
        let adjacency = vertices
            .iter()
            .map(|&v| {
                let mut nb: Vec<usize> = self
                    .known_neighbors(v)
                    .iter()
                    .filter(|&&u| (u - x).norm_sq() <= r2)
                    .map(|&u| vertices.binary_search(&u).expect("ball vertex"))
                    .collect();
                nb.sort_unstable();
                nb
            })
            .collect();
        Ok(BallGraph {
            center: x,
            radius: r,
            vertices,
            adjacency,
        })
    }

    /// Every recorded open edge once as a canonical pair, in no particular order.
    pub fn edges(&self) -> impl Iterator<Item = (LatticePoint, LatticePoint)> + '_ {
        self.records
            .iter()
            .flat_map(|(&x, r)| r.adj.iter().filter(move |&&y| x < y).map(move |&y| (x, y)))
    }

    /// Every recorded open edge once, as canonical pairs in sorted order.
    pub fn open_edges(&self) -> Vec<(LatticePoint, LatticePoint)> {
        let mut out: Vec<_> = self.edges().collect();
        out.sort();
        out
    }

    /// Fills an exact box: short pairs by hash, long pairs either by hashing
    /// every pair (small boxes) or by per-vertex shell sampling restricted to
    /// partners that are lexicographically larger.
    fn build_box(&mut self, n: i64) {
        let d = self.config.d;
        let side = (2 * n + 1) as u128;
        let pairs = side.pow(d as u32) * (side.pow(d as u32) - 1) / 2;
        let seed = self.config.seed;
        if pairs <= HASHED_PAIR_LIMIT {
            let offsets: Vec<LocalEntry> = LatticePoint::origin(d)
                .cube_around(2 * n)
                .into_iter()
                .filter(|&j| j > LatticePoint::origin(d))
                .map(|j| LocalEntry {
                    offset: j,
                    threshold: threshold(self.model.prob(j)),
                })
                .filter(|e| e.threshold > 0)
                .collect();
            for e in &offsets {
                // x ranges over the box intersected with the box shifted by -offset
                let lo: Vec<i64> = e.offset.coords().iter().map(|&j| (-n).max(-n - j)).collect();
                let hi: Vec<i64> = e.offset.coords().iter().map(|&j| n.min(n - j)).collect();
                let mut c = lo.clone();
                'outer: loop {
                    let x = LatticePoint::from_slice(&c);
                    let y = x + e.offset;
                    if (ordered_pair_hash(seed, x, y) >> 11) < e.threshold {
                        self.link(x, y);
                    }
                    for axis in (0..d).rev() {
                        c[axis] += 1;
                        if c[axis] <= hi[axis] {
                            continue 'outer;
                        }
                        c[axis] = lo[axis];
                    }
                    break;
                }
            }
        } else {
            let origin = LatticePoint::origin(d);
            let verts = origin.cube_around(n);
            let positive: Vec<LocalEntry> = self.local.iter().copied().filter(|e| e.offset > origin).collect();
            for &x in &verts {
                for e in &positive {
                    let y = x + e.offset;
                    if y.in_box(n) && hashed_open(seed, x, y, e.threshold) {
                        self.link(x, y);
                    }
                }
                let mut rng = ChaCha8Rng::seed_from_u64(vertex_stream_seed(seed, x, FAR_STREAM_TAG));
                for j in self.far.sample(&mut rng) {
                    let y = x + j;
                    if j > origin && y.in_box(n) {
                        self.link(x, y);
                    }
                }
            }
        }
        for r in self.records.values_mut() {
            r.local_done = true;
            r.far_done = true;
        }
    }
}

fn local_entries(model: &EdgeProbModel, cutoff: i64) -> Vec<LocalEntry> {
    prob::LocalTable::new(model, cutoff)
        .entries
        .into_iter()
        .map(|(offset, p)| LocalEntry {
            offset,
            threshold: threshold(p),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(c: &[i64]) -> LatticePoint {
        LatticePoint::new(c).unwrap()
    }

    fn lazy(seed: u64) -> Environment {
        Environment::new(EnvConfig::desk_default(seed)).unwrap()
    }

    #[test]
    fn threshold_matches_unit_comparison() {
        for h in [0u64, 1 << 11, u64::MAX, 0x8000_0000_0000_0000, 12345678901234567] {
            for p in [0.0, 1e-9, 0.25, 0.5, 0.999, 1.0] {
                assert_eq!((h >> 11) < threshold(p), hash::to_unit(h) < p, "h={h} p={p}");
            }
        }
    }

    #[test]
    fn pair_state_is_symmetric_and_stable() {
        let mut env = lazy(11);
        let x = pt(&[0, 0]);
        for y in x.cube_around(20) {
            if y == x {
                continue;
            }
            let a = env.pair_state(x, y).unwrap();
            let b = env.pair_state(y, x).unwrap();
            assert_eq!(a, b);
            assert_eq!(a, env.pair_state(x, y).unwrap());
        }
    }

    #[test]
    fn nearest_neighbours_forced_open() {
        let mut env = lazy(3);
        let g = env.reveal_ball(pt(&[5, 5]), 1.0).unwrap();
        let c = g.index_of(pt(&[5, 5])).unwrap();
        assert_eq!(g.adjacency[c].len(), 4);
    }

    #[test]
    fn reveal_ball_idempotent() {
        let mut env = lazy(4);
        let a = env.reveal_ball(pt(&[0, 0]), 3.0).unwrap();
        let edges = env.open_edges();
        let b = env.reveal_ball(pt(&[0, 0]), 3.0).unwrap();
        assert_eq!(a, b);
        assert_eq!(edges, env.open_edges());
    }

    #[test]
    fn long_complete_twice_is_error() {
        let mut env = lazy(5);
        let x = pt(&[0, 0]);
        env.sample_incident_long_edges(x).unwrap();
        assert!(env.sample_incident_long_edges(x).is_err());
    }

    #[test]
    fn adjacency_symmetric_after_walk_like_reveals() {
        let mut env = lazy(6);
        let mut x = pt(&[0, 0]);
        for i in 0..500 {
            let nb = env.neighbors(x).unwrap().to_vec();
            x = nb[i % nb.len()];
        }
        for (a, b) in env.open_edges() {
            assert!(env.known_neighbors(a).contains(&b));
            assert!(env.known_neighbors(b).contains(&a));
        }
        for (&v, r) in &env.records {
            let mut s = r.adj.clone();
            s.sort();
            s.dedup();
            assert_eq!(s.len(), r.adj.len(), "duplicate neighbour at {v}");
        }
    }

    #[test]
    fn exact_box_contained_and_consistent() {
        let cfg = EnvConfig::desk_default(8).with_backend(BackendKind::ExactBoxed { half_width: 6 });
        let mut env = Environment::new(cfg).unwrap();
        for (a, b) in env.open_edges() {
            assert!(a.in_box(6) && b.in_box(6));
            assert!(env.pair_state(a, b).unwrap().is_open());
        }
        assert!(matches!(env.pair_state(pt(&[0, 0]), pt(&[7, 0])), Err(LabError::OutOfBox(..))));
        // short pairs agree with the pure hash in both backends
        let mut lazy_env = Environment::lazy_windowed(EnvConfig::desk_default(8), 6).unwrap();
        for y in pt(&[0, 0]).cube_around(4) {
            if !y.is_origin() {
                assert_eq!(
                    env.pair_state(pt(&[0, 0]), y).unwrap(),
                    lazy_env.pair_state(pt(&[0, 0]), y).unwrap()
                );
            }
        }
    }

    #[test]
    fn sampled_exact_box_stays_inside() {
        let cfg = EnvConfig {
            nn_open: false,
            beta: 0.5,
            ..EnvConfig::desk_default(2)
        }
        .with_backend(BackendKind::ExactBoxed { half_width: 60 });
        let env = Environment::new(cfg).unwrap();
        let edges = env.open_edges();
        assert!(!edges.is_empty());
        for (a, b) in edges {
            assert!(a.in_box(60) && b.in_box(60));
            assert!(env.known_neighbors(b).contains(&a));
        }
    }

    #[test]
    fn zero_beta_only_grid() {
        let cfg = EnvConfig {
            beta: 0.0,
            ..EnvConfig::desk_default(1)
        };
        let mut env = Environment::new(cfg).unwrap();
        let mut nb = env.neighbors(pt(&[3, -2])).unwrap().to_vec();
        nb.sort();
        assert_eq!(nb, vec![pt(&[2, -2]), pt(&[3, -3]), pt(&[3, -1]), pt(&[4, -2])]);
    }
}
