//! Bookkeeping for the coupling of walks with independent variables:
//! geometric variables from a shared uniform stream, local characteristics
//! of long-edge endpoints, the crossing-parity law, error classification
//! and regeneration times.

pub mod events;
pub mod regen;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use events::{detect_bad_events, ErrorEvent, ErrorKind, ErrorLedger, EventReport, PhaseState, SettleRecord};
pub use regen::{block_counts, regeneration_times, BlockCounts, RegenerationTimes};

use crate::env::hash::child_seed;
use crate::env::{BallGraph, Environment};
use crate::error::{LabError, Result};
use crate::lattice::LatticePoint;
use crate::stats::{bonferroni, chi_square_gof, chi_square_independence, total_variation, ChiSquareResult};

/// The scale parameters `k, epsilon, gamma, delta` and the index `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingParams {
    pub k: u32,
    pub epsilon: f64,
    pub gamma: f64,
    pub delta: f64,
    pub alpha: f64,
}

impl CouplingParams {
    pub fn new(k: u32, epsilon: f64, gamma: f64, delta: f64, alpha: f64) -> Result<Self> {
        let ok = |v: f64| v > 0.0 && v < 1.0;
        if !ok(epsilon) || !ok(gamma) || !ok(delta) || !(alpha > 0.0 && alpha < 2.0) {
            return Err(LabError::InvalidConfig(format!(
                "need epsilon, gamma, delta in (0, 1) and alpha in (0, 2); got {epsilon}, {gamma}, {delta}, {alpha}"
            )));
        }
        Ok(Self {
            k,
            epsilon,
            gamma,
            delta,
            alpha,
        })
    }

    /// Edges longer than `2^{(1/alpha - epsilon) k}` are long.
    pub fn long_threshold(&self) -> f64 {
        2f64.powf((1.0 / self.alpha - self.epsilon) * self.k as f64)
    }

    pub fn is_long(&self, j: LatticePoint) -> bool {
        j.norm() > self.long_threshold()
    }

    /// `2^{delta k}`.
    pub fn ball_radius(&self) -> f64 {
        2f64.powf(self.delta * self.k as f64)
    }

    pub fn in_ball(&self, center: LatticePoint, u: LatticePoint) -> bool {
        (u - center).norm_sq() <= 2f64.powf(2.0 * self.delta * self.k as f64)
    }

    /// Integer return horizon `floor(2^{gamma k})`, at least 1.
    pub fn return_horizon(&self) -> usize {
        (2f64.powf(self.gamma * self.k as f64).floor() as usize).max(1)
    }

    /// Special phase length `ceil(2^{gamma k + 1})`.
    pub fn special_length(&self) -> usize {
        2f64.powf(self.gamma * self.k as f64 + 1.0).ceil() as usize
    }

    pub fn horizon(&self) -> usize {
        1usize << self.k
    }
}

/// A lazily extended i.i.d. uniform sequence `Uni(0), Uni(1), ...`.
#[derive(Debug, Clone)]
pub struct UniformStream {
    rng: ChaCha8Rng,
    values: Vec<f64>,
}

impl UniformStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            values: Vec::new(),
        }
    }

    pub fn get(&mut self, i: usize) -> f64 {
        while self.values.len() <= i {
            let u = self.rng.random::<f64>();
            self.values.push(u);
        }
        self.values[i]
    }
}

/// `R(t) = min{i >= 0 : Uni(i) < t}`.
pub fn geometric_variable(t: f64, stream: &mut UniformStream) -> Result<u64> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(LabError::Contract(format!("geometric parameter must lie in (0, 1], got {t}")));
    }
    let mut i = 0;
    while stream.get(i) >= t {
        i += 1;
    }
    Ok(i as u64)
}

/// Parameter `(1 - p) d / (1 + (1 - p) d)` of the crossing count law.
pub fn crossing_parameter(local_degree: u32, return_prob: f64) -> f64 {
    let a = (1.0 - return_prob) * local_degree as f64;
    a / (1.0 + a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReturnMethod {
    Exact,
    MonteCarlo { walks: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalCharacteristics {
    pub v: LatticePoint,
    pub local_degree: u32,
    pub return_prob: f64,
    pub method: ReturnMethod,
    pub params: CouplingParams,
}

impl LocalCharacteristics {
    pub fn crossing_parameter(&self) -> f64 {
        crossing_parameter(self.local_degree, self.return_prob)
    }
}

/// Balls with more vertices than this use Monte Carlo for the return probability.
pub const EXACT_BALL_LIMIT: usize = 200_000;
const MC_WALKS: usize = 20_000;

/// Local degree and local return probability of `v`: the walk on the graph
/// induced by `B(v, 2^{delta k})` started at `v`, returning within
/// `floor(2^{gamma k})` steps.
pub fn local_characteristics(
    v: LatticePoint,
    env: &mut Environment,
    params: &CouplingParams,
    seed: u64,
) -> Result<LocalCharacteristics> {
    let ball = env.reveal_ball(v, params.ball_radius())?;
    let c = ball.index_of(v).expect("center lies in its ball");
    let local_degree = ball.adjacency[c].len() as u32;
    let h = params.return_horizon();
    let (return_prob, method) = if local_degree == 0 {
        (1.0, ReturnMethod::Exact)
    } else if ball.vertices.len() <= EXACT_BALL_LIMIT {
        (return_probability_dp(&ball, c, h), ReturnMethod::Exact)
    } else {
        (
            return_probability_mc(&ball, c, h, MC_WALKS, seed),
            ReturnMethod::MonteCarlo { walks: MC_WALKS },
        )
    };
    Ok(LocalCharacteristics {
        v,
        local_degree,
        return_prob,
        method,
        params: *params,
    })
}

/// `P(the walk on the ball graph returns to c within h steps)` by propagating
/// the distribution of the not-yet-returned walk.
pub fn return_probability_dp(ball: &BallGraph, c: usize, h: usize) -> f64 {
    let n = ball.vertices.len();
    let mut mass = vec![0.0; n];
    let start = &ball.adjacency[c];
    if start.is_empty() {
        return 1.0;
    }
    for &u in start {
        mass[u] += 1.0 / start.len() as f64;
    }
    let mut returned = 0.0;
    let mut next = vec![0.0; n];
    for _ in 1..h {
        next.iter_mut().for_each(|m| *m = 0.0);
        for (u, &m) in mass.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            let nb = &ball.adjacency[u];
            let w = m / nb.len() as f64;
            for &y in nb {
                if y == c {
                    returned += w;
                } else {
                    next[y] += w;
                }
            }
        }
        std::mem::swap(&mut mass, &mut next);
    }
    returned
}

pub fn return_probability_mc(ball: &BallGraph, c: usize, h: usize, walks: usize, seed: u64) -> f64 {
    let start = &ball.adjacency[c];
    if start.is_empty() {
        return 1.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..walks {
        let mut u = start[rng.random_range(0..start.len())];
        for _ in 1..h {
            let nb = &ball.adjacency[u];
            u = nb[rng.random_range(0..nb.len())];
            if u == c {
                hits += 1;
                break;
            }
        }
    }
    hits as f64 / walks as f64
}

/// One endpoint's parameters for the excursion model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Endpoint {
    pub local_degree: u32,
    pub return_prob: f64,
}

impl Endpoint {
    pub fn new(local_degree: u32, return_prob: f64) -> Self {
        Self {
            local_degree,
            return_prob,
        }
    }

    pub fn crossing_parameter(&self) -> f64 {
        crossing_parameter(self.local_degree, self.return_prob)
    }

    /// Escape never happens from this endpoint.
    pub fn is_degenerate(&self) -> bool {
        self.crossing_parameter() == 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcursionLaw {
    pub trials: u64,
    /// Histogram of `R(v)`, `None` overall when `v` is degenerate.
    pub r_v: Option<Vec<u64>>,
    pub r_x: Option<Vec<u64>>,
    /// Joint histogram capped at the last bin, when both are finite.
    pub joint: Option<Vec<Vec<u64>>>,
    /// Trials that settled at the far endpoint's side.
    pub far_side: u64,
    /// Trials where neither side ever escapes.
    pub undetermined: u64,
}

fn bump(v: &mut Vec<u64>, i: usize) {
    if v.len() <= i {
        v.resize(i + 1, 0);
    }
    v[i] += 1;
}

/// Runs the excursion dynamics of a walk started at `v` on a long edge
/// `(v, x)`: at the current endpoint `e` an excursion crosses the edge with
/// probability `1/(1 + d_e)`, returns locally with probability
/// `p_e d_e / (1 + d_e)` and escapes otherwise. Each endpoint's excursions
/// continue until its first escape so that both `R(v)` and `R(x)` are
/// observed; the walk settles where the first escape along its own route
/// happens.
pub fn excursion_simulator(v: Endpoint, x: Endpoint, trials: u64, seed: u64) -> ExcursionLaw {
    const JOINT_CAP: usize = 12;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r_v = Vec::new();
    let mut r_x = Vec::new();
    let mut joint = vec![vec![0u64; JOINT_CAP + 1]; JOINT_CAP + 1];
    let mut far_side = 0;
    let mut undetermined = 0;
    // crossings made from an endpoint before its first escape
    let run = |e: Endpoint, rng: &mut ChaCha8Rng| -> Option<u64> {
        if e.is_degenerate() {
            return None;
        }
        let d = e.local_degree as f64;
        let (p_cross, p_local) = (1.0 / (1.0 + d), e.return_prob * d / (1.0 + d));
        let mut crossings = 0;
        loop {
            let u: f64 = rng.random();
            if u < p_cross {
                crossings += 1;
            } else if u >= p_cross + p_local {
                return Some(crossings);
            }
        }
    };
    for _ in 0..trials {
        let a = run(v, &mut rng);
        let b = run(x, &mut rng);
        if let Some(a) = a {
            bump(&mut r_v, a as usize);
        }
        if let Some(b) = b {
            bump(&mut r_x, b as usize);
        }
        if let (Some(a), Some(b)) = (a, b) {
            joint[(a as usize).min(JOINT_CAP)][(b as usize).min(JOINT_CAP)] += 1;
        }
        // the walk alternates v, x, v, ...; after c crossings from each side it
        // is back at v, and escapes there if R(v) = c
        match (a, b) {
            (None, None) => undetermined += 1,
            (None, Some(_)) => far_side += 1,
            (Some(_), None) => {}
            (Some(a), Some(b)) => far_side += (a > b) as u64,
        }
    }
    let finite = !v.is_degenerate() && !x.is_degenerate();
    ExcursionLaw {
        trials,
        r_v: (!v.is_degenerate()).then_some(r_v),
        r_x: (!x.is_degenerate()).then_some(r_x),
        joint: finite.then_some(joint),
        far_side,
        undetermined,
    }
}

/// `P(Geom(q) = i)` for `i < len`.
pub fn geometric_pmf(q: f64, len: usize) -> Vec<f64> {
    (0..len).map(|i| q * (1.0 - q).powi(i as i32)).collect()
}

/// `P(R_v > R_x)` for independent geometric variables.
pub fn far_side_probability(q_v: f64, q_x: f64) -> f64 {
    q_x * (1.0 - q_v) / (1.0 - (1.0 - q_x) * (1.0 - q_v))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingCell {
    pub local_degree: u32,
    pub return_prob: f64,
    pub q: f64,
    pub tv_v: f64,
    pub tv_x: f64,
    pub gof_v: ChiSquareResult,
    pub independence: ChiSquareResult,
    pub far_fraction: f64,
    pub far_exact: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    pub trials: u64,
    pub cells: Vec<CrossingCell>,
    pub max_tv: f64,
    /// Bonferroni-combined independence p-value over the grid.
    pub independence_p: f64,
    pub degenerate: Vec<(u32, f64)>,
}

/// Checks the crossing-count law on a grid of symmetric endpoint parameters.
pub fn verify_crossing_claim(grid: &[(u32, f64)], trials: u64, seed: u64) -> CrossingReport {
    let mut cells = Vec::new();
    let mut degenerate = Vec::new();
    for (i, &(d, p)) in grid.iter().enumerate() {
        let e = Endpoint::new(d, p);
        if e.is_degenerate() {
            degenerate.push((d, p));
            continue;
        }
        let law = excursion_simulator(e, e, trials, child_seed(seed, i as u64));
        let q = e.crossing_parameter();
        let r_v = law.r_v.expect("finite");
        let r_x = law.r_x.expect("finite");
        let pmf_v = geometric_pmf(q, r_v.len());
        let pmf_x = geometric_pmf(q, r_x.len());
        let mut tail_v = pmf_v.clone();
        let last = tail_v.len() - 1;
        tail_v[last] += (1.0 - q).powi(r_v.len() as i32);
        cells.push(CrossingCell {
            local_degree: d,
            return_prob: p,
            q,
            tv_v: total_variation(&r_v, &pmf_v),
            tv_x: total_variation(&r_x, &pmf_x),
            gof_v: chi_square_gof(&r_v, &tail_v, 5.0),
            independence: chi_square_independence(&merge_sparse(law.joint.expect("finite"), trials)),
            far_fraction: law.far_side as f64 / trials as f64,
            far_exact: far_side_probability(q, q),
        });
    }
    let ps: Vec<f64> = cells.iter().map(|c| c.independence.p_value).collect();
    CrossingReport {
        trials,
        max_tv: cells.iter().map(|c| c.tv_v.max(c.tv_x)).fold(0.0, f64::max),
        independence_p: if ps.is_empty() { 1.0 } else { bonferroni(&ps) },
        cells,
        degenerate,
    }
}

/// Truncates a joint table so that every kept row and column carries at
/// least 1% of the mass; the remainder goes to the last kept index.
fn merge_sparse(table: Vec<Vec<u64>>, total: u64) -> Vec<Vec<u64>> {
    let n = table.len();
    let row: Vec<u64> = table.iter().map(|r| r.iter().sum()).collect();
    let col: Vec<u64> = (0..n).map(|c| table.iter().map(|r| r[c]).sum()).collect();
    let cut = |m: &[u64]| {
        (0..n)
            .take_while(|&i| m[i..].iter().sum::<u64>() * 100 >= total)
            .count()
            .max(1)
    };
    let (kr, kc) = (cut(&row), cut(&col));
    let mut out = vec![vec![0u64; kc]; kr];
    for (i, r) in table.iter().enumerate() {
        for (j, &v) in r.iter().enumerate() {
            out[i.min(kr - 1)][j.min(kc - 1)] += v;
        }
    }
    out
}

/// The localized graph of a long edge: two balls and the bridge between
/// their centres.
#[derive(Debug, Clone)]
pub struct LocalizedGraph {
    pub v_ball: BallGraph,
    pub x_ball: BallGraph,
}

impl LocalizedGraph {
    pub fn new(env: &mut Environment, v: LatticePoint, x: LatticePoint, params: &CouplingParams) -> Result<Self> {
        let r = params.ball_radius();
        Ok(Self {
            v_ball: env.reveal_ball(v, r)?,
            x_ball: env.reveal_ball(x, r)?,
        })
    }
}

/// Outcome of running the localized walk for one special phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SettleCheck {
    /// The event that the walk escapes both centres before the phase ends and never comes back.
    pub good: bool,
    /// Side predicted from the excursion decomposition (`true` = far side).
    pub predicted_far: Option<bool>,
    /// Side of the walk at the escape time.
    pub observed_far: Option<bool>,
}

/// Replays a walk `Y_0 = v, ..., Y_T` on a localized graph. Positions are
/// given as `(far side?, vertex)` pairs; `v` and `x` are the two centres.
pub fn settle_check(traj: &[(bool, LatticePoint)], v: LatticePoint, x: LatticePoint, h: usize) -> SettleCheck {
    let t_end = traj.len() - 1;
    let at_centre = |s: usize| traj[s].1 == v || traj[s].1 == x;
    // tau*: first s >= h whose last h positions avoid both centres
    let mut tau = None;
    let mut run = 0;
    for s in 0..=t_end {
        run = if at_centre(s) { 0 } else { run + 1 };
        if s >= h && run >= h {
            tau = Some(s);
            break;
        }
    }
    let good = match tau {
        Some(t) => t < t_end && (t..=t_end).all(|s| !at_centre(s)),
        None => false,
    };
    // first excursion from a centre that does not return within h steps
    let mut predicted = None;
    for s in 0..t_end {
        if !at_centre(s) {
            continue;
        }
        let e = traj[s].1;
        let other = if e == v { x } else { v };
        if traj[s + 1].1 == other {
            continue;
        }
        if s + h > t_end {
            break;
        }
        if (s + 1..=s + h).all(|r| traj[r].1 != e) {
            predicted = Some(e == x);
            break;
        }
    }
    SettleCheck {
        good,
        predicted_far: predicted,
        observed_far: tau.map(|t| traj[t].0),
    }
}

/// Runs the walk on a localized graph for `steps` steps from `v`.
pub fn run_localized<R: Rng + ?Sized>(g: &LocalizedGraph, steps: usize, rng: &mut R) -> Vec<(bool, LatticePoint)> {
    let v = g.v_ball.center;
    let mut side = false;
    let mut i = g.v_ball.index_of(v).expect("centre");
    let mut out = vec![(false, v)];
    for _ in 0..steps {
        let ball = if side { &g.x_ball } else { &g.v_ball };
        let at_centre = ball.vertices[i] == ball.center;
        let deg = ball.adjacency[i].len() + at_centre as usize;
        let pick = rng.random_range(0..deg);
        if pick == ball.adjacency[i].len() {
            side = !side;
            let other = if side { &g.x_ball } else { &g.v_ball };
            i = other.index_of(other.center).expect("centre");
        } else {
            i = ball.adjacency[i][pick];
        }
        let ball = if side { &g.x_ball } else { &g.v_ball };
        out.push((side, ball.vertices[i]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvConfig;

    fn params() -> CouplingParams {
        CouplingParams::new(10, 0.1, 0.2, 0.25, 1.2).unwrap()
    }

    #[test]
    fn derived_scales() {
        let p = params();
        assert_eq!(p.return_horizon(), 4);
        assert_eq!(p.special_length(), 8);
        assert!((p.ball_radius() - 2f64.powf(2.5)).abs() < 1e-12);
    }

    #[test]
    fn geometric_at_one_is_zero() {
        let mut s = UniformStream::new(1);
        for _ in 0..100 {
            assert_eq!(geometric_variable(1.0, &mut s).unwrap(), 0);
        }
        assert!(geometric_variable(0.0, &mut s).is_err());
    }

    #[test]
    fn geometric_monotone_on_shared_stream() {
        for seed in 0..200 {
            let mut s = UniformStream::new(seed);
            let a = geometric_variable(0.25, &mut s).unwrap();
            let b = geometric_variable(0.5, &mut s).unwrap();
            assert!(b <= a);
        }
    }

    #[test]
    fn isolated_centre_returns_surely() {
        let cfg = EnvConfig {
            beta: 0.0,
            nn_open: false,
            ..EnvConfig::desk_default(0)
        };
        let mut env = Environment::new(cfg).unwrap();
        let lc = local_characteristics(LatticePoint::origin(2), &mut env, &params(), 0).unwrap();
        assert_eq!(lc.local_degree, 0);
        assert_eq!(lc.return_prob, 1.0);
    }

    #[test]
    fn pendant_vertex_returns_in_two_steps() {
        let a = LatticePoint::new(&[0, 0]).unwrap();
        let b = LatticePoint::new(&[1, 0]).unwrap();
        let ball = BallGraph {
            center: a,
            radius: 2.0,
            vertices: vec![a, b],
            adjacency: vec![vec![1], vec![0]],
        };
        assert_eq!(return_probability_dp(&ball, 0, 2), 1.0);
        assert_eq!(return_probability_dp(&ball, 0, 1), 0.0);
    }

    #[test]
    fn dp_matches_monte_carlo() {
        let mut env = Environment::new(EnvConfig::desk_default(8)).unwrap();
        let ball = env.reveal_ball(LatticePoint::origin(2), 4.0).unwrap();
        let c = ball.index_of(LatticePoint::origin(2)).unwrap();
        let exact = return_probability_dp(&ball, c, 6);
        let walks = 40_000;
        let mc = return_probability_mc(&ball, c, 6, walks, 3);
        let sd = (exact * (1.0 - exact) / walks as f64).sqrt();
        assert!((mc - exact).abs() < 4.0 * sd, "{mc} vs {exact}");
    }

    #[test]
    fn half_parameter_cell() {
        let e = Endpoint::new(1, 0.0);
        assert_eq!(e.crossing_parameter(), 0.5);
        let law = excursion_simulator(e, e, 100_000, 5);
        let p0 = law.r_v.unwrap()[0] as f64 / 1e5;
        assert!((p0 - 0.5).abs() < 0.01);
    }

    #[test]
    fn degenerate_endpoint_flagged() {
        let law = excursion_simulator(Endpoint::new(3, 1.0), Endpoint::new(2, 0.3), 1000, 1);
        assert!(law.r_v.is_none());
        assert_eq!(law.far_side, 1000);
        let law = excursion_simulator(Endpoint::new(3, 1.0), Endpoint::new(0, 0.0), 10, 1);
        assert_eq!(law.undetermined, 10);
    }

    #[test]
    fn far_side_formula_against_double_sum() {
        for (a, b) in [(0.5, 0.5), (0.2, 0.7), (0.9, 0.1)] {
            let mut s = 0.0;
            for i in 0..400 {
                for j in 0..i {
                    s += a * (1.0f64 - a).powi(i) * b * (1.0f64 - b).powi(j);
                }
            }
            assert!((s - far_side_probability(a, b)).abs() < 1e-12);
        }
    }

    #[test]
    fn settle_check_by_hand() {
        let p = |x: i64| (x >= 100, LatticePoint::new(&[x, 0]).unwrap());
        let v = LatticePoint::new(&[0, 0]).unwrap();
        let x = LatticePoint::new(&[100, 0]).unwrap();
        // cross, come back, escape on the near side
        let traj: Vec<_> = [0, 100, 0, 1, 2, 3, 4, 5].iter().map(|&c| p(c)).collect();
        let c = settle_check(&traj, v, x, 2);
        assert!(c.good);
        assert_eq!(c.predicted_far, Some(false));
        assert_eq!(c.observed_far, Some(false));
        // never leaves the centres
        let traj: Vec<_> = [0, 100, 0, 100].iter().map(|&c| p(c)).collect();
        assert!(!settle_check(&traj, v, x, 2).good);
    }
}
