//! Replay of walks to classify coupling errors and the rare events that
//! control them.

use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};

use super::{settle_check, CouplingParams};
use crate::env::Environment;
use crate::error::Result;
use crate::lattice::LatticePoint;
use crate::walk::WalkPath;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    /// A known long edge is found again after its special phase.
    Rediscovered,
    /// Several long edges at a new vertex, or a far endpoint near known territory.
    Crowded,
    /// An endpoint has a further edge longer than the ball radius.
    DegreeMismatch,
    /// A new long edge shows up during a special phase.
    NewEdgeInSpecial,
    /// The walk leaves the localized graph during a special phase.
    EarlyExit,
    /// The walk does not escape both endpoints for good within the phase.
    NoEscape,
}

impl ErrorKind {
    pub const ALL: [ErrorKind; 6] = [
        ErrorKind::Rediscovered,
        ErrorKind::Crowded,
        ErrorKind::DegreeMismatch,
        ErrorKind::NewEdgeInSpecial,
        ErrorKind::EarlyExit,
        ErrorKind::NoEscape,
    ];

    /// Type number 1 to 6.
    pub fn number(self) -> usize {
        self as usize + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorEvent {
    pub walk: usize,
    pub time: usize,
    pub kind: ErrorKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorLedger {
    pub counts: [u64; 6],
    pub events: Vec<ErrorEvent>,
}

impl ErrorLedger {
    pub fn record(&mut self, walk: usize, time: usize, kind: ErrorKind) {
        self.counts[kind.number() - 1] += 1;
        self.events.push(ErrorEvent { walk, time, kind });
    }

    pub fn count(&self, kind: ErrorKind) -> u64 {
        self.counts[kind.number() - 1]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// No error of any type.
    pub fn is_good(&self) -> bool {
        self.total() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PhaseState {
    Main,
    Special {
        entry: usize,
        v: LatticePoint,
        x: LatticePoint,
    },
}

/// One special phase that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SettleRecord {
    pub walk: usize,
    pub entry: usize,
    pub v: LatticePoint,
    pub x: LatticePoint,
    /// The walk stayed in the localized graph and escaped for good.
    pub good: bool,
    pub predicted_far: Option<bool>,
    pub observed_far: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventReport {
    pub params: CouplingParams,
    pub walks: usize,
    pub ledger: ErrorLedger,
    pub settles: Vec<SettleRecord>,
    pub discoveries: usize,
    /// Walks 1 and 2 touch the same long edge.
    pub f_star: bool,
    /// Events of the first walk.
    pub d_event: bool,
    pub e_event: bool,
    pub f_event: bool,
    pub g_event: bool,
}

impl EventReport {
    pub fn h_event(&self) -> bool {
        self.d_event || self.e_event || self.f_event || self.g_event
    }
}

fn long_neighbours(env: &mut Environment, x: LatticePoint, params: &CouplingParams) -> Result<Vec<LatticePoint>> {
    Ok(env
        .neighbors(x)?
        .iter()
        .copied()
        .filter(|&y| params.is_long(y - x))
        .collect())
}

fn local_degree(env: &mut Environment, x: LatticePoint, params: &CouplingParams) -> Result<(usize, usize)> {
    let nb = env.neighbors(x)?;
    let local = nb.iter().filter(|&&y| params.in_ball(x, y)).count();
    Ok((nb.len(), local))
}

/// Replays the walks in order on their shared environment, classifying the
/// six coupling error types, and evaluates the rare events of the first two walks.
pub fn detect_bad_events(paths: &[WalkPath], env: &mut Environment, params: &CouplingParams) -> Result<EventReport> {
    let t_special = params.special_length();
    let h = params.return_horizon();
    let radius = params.ball_radius();
    let mut ledger = ErrorLedger::default();
    let mut settles = Vec::new();
    let mut known: FxHashSet<LatticePoint> = FxHashSet::default();
    let mut discovered: FxHashMap<(LatticePoint, LatticePoint), (usize, usize)> = FxHashMap::default();

    for (l, path) in paths.iter().enumerate() {
        let n = path.len();
        let mut i = 0;
        while i <= n {
            let xi = path.steps[i];
            let longs = long_neighbours(env, xi, params)?;
            if known.contains(&xi) {
                let mut again = false;
                for &y in &longs {
                    let key = LatticePoint::canonical_pair(xi, y);
                    match discovered.get(&key) {
                        Some(&(w, t)) => again |= w != l || i >= t + t_special,
                        None => {
                            discovered.insert(key, (l, i));
                        }
                    }
                }
                if again {
                    ledger.record(l, i, ErrorKind::Rediscovered);
                }
                known.extend(longs);
                i += 1;
                continue;
            }
            for &y in &longs {
                discovered.insert(LatticePoint::canonical_pair(xi, y), (l, i));
            }
            if longs.is_empty() {
                known.insert(xi);
                i += 1;
                continue;
            }
            let crowded = longs.len() >= 2 || longs[0].closed_ball(radius).iter().any(|u| known.contains(u));
            if crowded {
                ledger.record(l, i, ErrorKind::Crowded);
                known.insert(xi);
                known.extend(longs);
                i += 1;
                continue;
            }
            let (v, x) = (xi, longs[0]);
            let (deg_v, loc_v) = local_degree(env, v, params)?;
            let (deg_x, loc_x) = local_degree(env, x, params)?;
            if deg_v != loc_v + 1 || deg_x != loc_x + 1 {
                ledger.record(l, i, ErrorKind::DegreeMismatch);
            }
            known.insert(v);
            known.insert(x);
            let end = i + t_special;
            let mut exited = false;
            let mut new_edge = false;
            for t in i + 1..=end.min(n) {
                let (a, b) = (path.steps[t - 1], path.steps[t]);
                let inside = (params.in_ball(v, a) && params.in_ball(v, b))
                    || (params.in_ball(x, a) && params.in_ball(x, b))
                    || LatticePoint::canonical_pair(a, b) == LatticePoint::canonical_pair(v, x);
                exited |= !inside;
                if !known.contains(&b) {
                    let lb = long_neighbours(env, b, params)?;
                    if !lb.is_empty() {
                        new_edge = true;
                        for &y in &lb {
                            discovered.entry(LatticePoint::canonical_pair(b, y)).or_insert((l, t));
                        }
                    }
                    known.extend(lb);
                }
                known.insert(b);
            }
            if new_edge {
                ledger.record(l, i, ErrorKind::NewEdgeInSpecial);
            }
            if exited {
                ledger.record(l, i, ErrorKind::EarlyExit);
            } else if end <= n {
                let traj: Vec<(bool, LatticePoint)> = path.steps[i..=end]
                    .iter()
                    .map(|&y| (params.in_ball(x, y), y))
                    .collect();
                let c = settle_check(&traj, v, x, h);
                if !c.good {
                    ledger.record(l, i, ErrorKind::NoEscape);
                }
                settles.push(SettleRecord {
                    walk: l,
                    entry: i,
                    v,
                    x,
                    good: c.good,
                    predicted_far: c.predicted_far,
                    observed_far: c.observed_far,
                });
            }
            i = end + 1;
        }
        // vertices of finished walks count as found, as do their long partners
        for &y in &path.steps {
            if !known.contains(&y) {
                known.insert(y);
            }
        }
    }

    let (d_event, e_event, f_event, g_event) = match paths.first() {
        Some(p) => first_walk_events(p, env, params)?,
        None => (false, false, false, false),
    };
    let f_star = if paths.len() >= 2 {
        let a = touched_long_edges(&paths[0], env, params)?;
        let b = touched_long_edges(&paths[1], env, params)?;
        a.iter().any(|e| b.contains(e))
    } else {
        false
    };
    Ok(EventReport {
        params: *params,
        walks: paths.len(),
        ledger,
        settles,
        discoveries: discovered.len(),
        f_star,
        d_event,
        e_event,
        f_event,
        g_event,
    })
}

fn touched_long_edges(
    path: &WalkPath,
    env: &mut Environment,
    params: &CouplingParams,
) -> Result<FxHashSet<(LatticePoint, LatticePoint)>> {
    let mut out = FxHashSet::default();
    let mut seen = FxHashSet::default();
    for &a in &path.steps {
        if seen.insert(a) {
            for b in long_neighbours(env, a, params)? {
                out.insert(LatticePoint::canonical_pair(a, b));
            }
        }
    }
    Ok(out)
}

fn first_walk_events(path: &WalkPath, env: &mut Environment, params: &CouplingParams) -> Result<(bool, bool, bool, bool)> {
    let n = path.len();
    let t_special = params.special_length();
    let h = params.return_horizon();
    let radius = params.ball_radius();
    let mut first: FxHashMap<LatticePoint, usize> = FxHashMap::default();
    let mut last: FxHashMap<LatticePoint, usize> = FxHashMap::default();
    for (t, &x) in path.steps.iter().enumerate() {
        first.entry(x).or_insert(t);
        last.insert(x, t);
    }
    let edges = touched_long_edges(path, env, params)?;
    let (mut d, mut e, mut f) = (false, false, false);
    for &(a, b) in &edges {
        let (fa, fb) = (first.get(&a).copied(), first.get(&b).copied());
        if let (Some(fa), Some(fb)) = (fa, fb) {
            let (early, t_late) = if fa < fb { (a, fb) } else { (b, fa) };
            d |= path.steps[t_late - 1] != early;
        }
        if !e {
            for (p, q) in [(a, b), (b, a)] {
                e |= env
                    .neighbors(p)?
                    .iter()
                    .any(|&u| u != q && (u - p).norm() >= radius && (u - q).norm() >= radius);
            }
        }
        let t0 = fa.into_iter().chain(fb).min().expect("one endpoint visited");
        let t1 = [a, b].iter().filter_map(|y| last.get(y)).max().copied().expect("visited");
        f |= t1 >= t0 + t_special;
    }
    let mut g = false;
    for j in 0..=n {
        let xj = path.steps[j];
        let longs = long_neighbours(env, xj, params)?;
        if longs.is_empty() {
            continue;
        }
        let window = &path.steps[j + 1..=(j + t_special).min(n)];
        let crossed = window.iter().any(|y| longs.contains(y));
        let strayed = path.steps[j..=(j + h).min(n)].iter().any(|&y| (y - xj).norm() > radius);
        if !crossed && strayed {
            g = true;
            break;
        }
    }
    Ok((d, e, f, g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvConfig;

    fn pt(c: &[i64]) -> LatticePoint {
        LatticePoint::new(c).unwrap()
    }

    #[test]
    fn grid_walk_has_clean_ledger() {
        let cfg = EnvConfig {
            beta: 0.0,
            ..EnvConfig::desk_default(2)
        };
        let mut env = Environment::new(cfg).unwrap();
        let p = crate::walk::run_walk(&mut env, 1 << 10, 1).unwrap();
        let params = CouplingParams::new(10, 0.1, 0.2, 0.25, 1.2).unwrap();
        let r = detect_bad_events(&[p.clone(), p], &mut env, &params).unwrap();
        assert!(r.ledger.is_good());
        assert!(!r.h_event() && !r.f_star);
        assert_eq!(r.discoveries, 0);
    }

    #[test]
    fn ledger_counts() {
        let mut l = ErrorLedger::default();
        l.record(0, 5, ErrorKind::EarlyExit);
        l.record(1, 9, ErrorKind::EarlyExit);
        assert_eq!(l.count(ErrorKind::EarlyExit), 2);
        assert_eq!(l.counts[4], 2);
        assert!(!l.is_good());
    }

    #[test]
    fn kind_numbers() {
        let n: Vec<usize> = ErrorKind::ALL.iter().map(|k| k.number()).collect();
        assert_eq!(n, vec![1, 2, 3, 4, 5, 6]);
        let _ = pt(&[0]);
    }
}
