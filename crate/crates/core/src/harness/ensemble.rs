use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::{sample_environment, ExperimentSpec, MeasureMode};
use crate::env::hash::child_seed;
use crate::env::EnvConfig;
use crate::error::Result;
use crate::path::PathSummary;
use crate::walk::{new_vertex_counter, rescale, run_walk, short_jump_max};

/// What one walk of the shared ensemble contributes to the experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkRecord {
    pub weight: f64,
    /// `W_k` indexed by `k = 0..=k_max`.
    pub w_k: Vec<f64>,
    /// Rescaled endpoint at the largest `k`.
    pub endpoint: Vec<f64>,
    pub summary: PathSummary,
    /// Lengths of the long jumps.
    pub long_jumps: Vec<f64>,
    /// Self-new vertex counts at times `1..=2^k`.
    pub phi_tilde: Vec<u32>,
    pub truncation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleKey {
    pub env: EnvConfig,
    pub k_max: u32,
    pub trials: usize,
    pub epsilon: f64,
    pub qs: Vec<f64>,
    pub measure: MeasureMode,
    pub seed: u64,
}

impl EnsembleKey {
    pub fn of(spec: &ExperimentSpec) -> Result<Self> {
        Ok(Self {
            env: spec.env.clone(),
            k_max: spec.k_max()?,
            trials: spec.trials,
            epsilon: spec.epsilon,
            qs: spec.qs.clone(),
            measure: spec.measure,
            seed: spec.seed,
        })
    }
}

type Cached = (EnsembleKey, Arc<Vec<WalkRecord>>);

static LAST: Mutex<Option<Cached>> = Mutex::new(None);

/// One walk of `2^{k_max}` steps per environment, reduced to per-walk records.
/// The most recent ensemble is kept in memory so that experiments sharing
/// the same key reuse it.
pub fn walk_ensemble(spec: &ExperimentSpec) -> Result<Arc<Vec<WalkRecord>>> {
    let key = EnsembleKey::of(spec)?;
    if let Some((k, v)) = LAST.lock().expect("ensemble cache").as_ref() {
        if *k == key {
            return Ok(Arc::clone(v));
        }
    }
    let k_max = spec.k_max()?;
    let n = 1usize << k_max;
    let alpha = spec.env.alpha();
    let cutoff = spec.env.short_cutoff;
    let walk_seeds = child_seed(spec.seed, 1 << 40);
    let mut out = Vec::with_capacity(spec.trials);
    for i in 0..spec.trials as u64 {
        let (mut env, weight) = sample_environment(&spec.env, spec.measure, spec.seed, i, n)?;
        let path = run_walk(&mut env, n, child_seed(walk_seeds, i))?;
        let w_k = (0..=k_max)
            .map(|k| short_jump_max(&path, k, spec.epsilon, alpha).map(|s| s.w_k))
            .collect::<Result<Vec<_>>>()?;
        let rp = rescale(&path, alpha);
        let long_jumps = (1..=n)
            .map(|t| path.jump(t))
            .filter(|j| j.norm_inf() > cutoff)
            .map(|j| j.norm())
            .collect();
        out.push(WalkRecord {
            weight,
            w_k,
            endpoint: rp.value_at(1.0),
            summary: rp.summary(&spec.qs),
            long_jumps,
            phi_tilde: new_vertex_counter(std::slice::from_ref(&path)).phi_tilde.remove(0),
            truncation: env.truncation_bound(),
        });
    }
    let records = Arc::new(out);
    *LAST.lock().expect("ensemble cache") = Some((key, Arc::clone(&records)));
    Ok(records)
}
