//! Piecewise-constant paths on `[0, 1]` and their scalar functionals.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// A step function on `[0, 1]` given by its values `v_0, ..., v_m` at the
/// grid times `i/m`: it equals `v_i` on `[i/m, (i+1)/m)` and `v_m` at `t = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepPath {
    dim: usize,
    /// `(m + 1) * dim` values, time-major.
    values: Vec<f64>,
}

impl StepPath {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || values.len() < 2 * dim || values.len() % dim != 0 {
            return Err(LabError::Contract(format!(
                "step path needs at least two points of dimension {dim}, got {} values",
                values.len()
            )));
        }
        Ok(Self { dim, values })
    }

    /// The constant path `v`.
    pub fn constant(v: &[f64]) -> Self {
        let mut values = v.to_vec();
        values.extend_from_slice(v);
        Self { dim: v.len(), values }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of intervals `m`.
    pub fn intervals(&self) -> usize {
        self.values.len() / self.dim - 1
    }

    /// Value at grid time `i/m`, `i <= m`.
    pub fn value(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// Value at time `t` in `[0, 1]`.
    pub fn at(&self, t: f64) -> &[f64] {
        let m = self.intervals();
        let i = ((t * m as f64).floor() as usize).min(m);
        self.value(i)
    }

    /// Re-expresses the path on `factor * m` intervals without changing it.
    pub fn refine(&self, factor: usize) -> Self {
        let m = self.intervals();
        let mut values = Vec::with_capacity((m * factor + 1) * self.dim);
        for i in 0..m {
            for _ in 0..factor {
                values.extend_from_slice(self.value(i));
            }
        }
        values.extend_from_slice(self.value(m));
        Self { dim: self.dim, values }
    }

    /// Value at `t = 1`.
    pub fn endpoint(&self) -> &[f64] {
        self.value(self.intervals())
    }

    /// `(int_0^1 |f(t)|^q dt)^{1/q}`.
    pub fn lq_norm(&self, q: f64) -> f64 {
        let m = self.intervals();
        let s: f64 = (0..m).map(|i| norm(self.value(i)).powf(q)).sum();
        (s / m as f64).powf(1.0 / q)
    }

    /// `sup_{t <= t_max} |f(t)|`.
    pub fn sup_norm_until(&self, t_max: f64) -> f64 {
        let m = self.intervals();
        let last = ((t_max * m as f64).floor() as usize).min(m);
        (0..=last).map(|i| norm(self.value(i))).fold(0.0, f64::max)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Exact `L^q[0,1]` distance between two step paths on arbitrary uniform grids.
pub fn lq_path_distance(a: &StepPath, b: &StepPath, q: f64) -> Result<f64> {
    if !(q >= 1.0) || !q.is_finite() {
        return Err(LabError::Contract(format!("L^q distance needs 1 <= q < inf, got {q}")));
    }
    if a.dim != b.dim {
        return Err(LabError::Contract("paths differ in dimension".into()));
    }
    let (ma, mb) = (a.intervals() as u128, b.intervals() as u128);
    // walk the merged breakpoints i/ma and j/mb with exact integer comparisons
    let (mut i, mut j) = (0u128, 0u128);
    let mut t_prev = 0.0;
    let mut acc = 0.0;
    let mut diff = vec![0.0; a.dim];
    while i < ma && j < mb {
        let next_a = (i + 1) * mb;
        let next_b = (j + 1) * ma;
        let (t_next, adv_a, adv_b) = match next_a.cmp(&next_b) {
            std::cmp::Ordering::Less => ((i + 1) as f64 / ma as f64, true, false),
            std::cmp::Ordering::Greater => ((j + 1) as f64 / mb as f64, false, true),
            std::cmp::Ordering::Equal => ((i + 1) as f64 / ma as f64, true, true),
        };
        for (k, d) in diff.iter_mut().enumerate() {
            *d = a.value(i as usize)[k] - b.value(j as usize)[k];
        }
        acc += norm(&diff).powf(q) * (t_next - t_prev);
        t_prev = t_next;
        if adv_a {
            i += 1;
        }
        if adv_b {
            j += 1;
        }
    }
    Ok(acc.powf(1.0 / q))
}

/// Scalar functionals of a path used in the two-sample comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSummary {
    pub endpoint: Vec<f64>,
    pub endpoint_norm: f64,
    /// `(q, L^q norm)` pairs.
    pub lq_norms: Vec<(f64, f64)>,
    pub sup_half: f64,
}

impl PathSummary {
    pub fn of(path: &StepPath, qs: &[f64]) -> Self {
        let endpoint = path.endpoint().to_vec();
        Self {
            endpoint_norm: norm(&endpoint),
            endpoint,
            lq_norms: qs.iter().map(|&q| (q, path.lq_norm(q))).collect(),
            sup_half: path.sup_norm_until(0.5),
        }
    }

    /// Named scalar functionals in a fixed order.
    pub fn functionals(&self) -> Vec<(String, f64)> {
        let mut out: Vec<(String, f64)> = self
            .endpoint
            .iter()
            .enumerate()
            .map(|(i, v)| (format!("endpoint_{i}"), *v))
            .collect();
        out.push(("endpoint_norm".into(), self.endpoint_norm));
        for (q, v) in &self.lq_norms {
            out.push((format!("lq_norm_q{q}"), *v));
        }
        out.push(("sup_to_half".into(), self.sup_half));
        out
    }

    /// The same summary for the path scaled by `c` in space.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            endpoint: self.endpoint.iter().map(|v| v * c).collect(),
            endpoint_norm: self.endpoint_norm * c.abs(),
            lq_norms: self.lq_norms.iter().map(|&(q, v)| (q, v * c.abs())).collect(),
            sup_half: self.sup_half * c.abs(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_to_self_is_zero() {
        let p = StepPath::new(2, vec![0.0, 0.0, 1.0, -2.0, 3.0, 0.5]).unwrap();
        assert_eq!(p.intervals(), 2);
        assert_eq!(lq_path_distance(&p, &p, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn constant_distance() {
        let a = StepPath::constant(&[0.0, 0.0]);
        let b = StepPath::constant(&[3.0, 4.0]);
        assert!((lq_path_distance(&a, &b, 2.0).unwrap() - 5.0).abs() < 1e-12);
        assert!((lq_path_distance(&a, &b, 1.0).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn refinement_invariant() {
        let a = StepPath::new(1, vec![0.0, 1.0, 4.0, 4.0]).unwrap();
        let b = StepPath::new(1, vec![2.0, -1.0, 7.0]).unwrap();
        for q in [1.0, 2.0, 3.5] {
            let d0 = lq_path_distance(&a, &b, q).unwrap();
            let d1 = lq_path_distance(&a.refine(2), &b.refine(3), q).unwrap();
            assert!((d0 - d1).abs() < 1e-12);
        }
    }

    #[test]
    fn mixed_grid_by_hand() {
        // a = 0 on [0,1/2), 1 on [1/2,1); b = 0 on [0,1/3), 3 on [1/3,2/3), 0 after
        let a = StepPath::new(1, vec![0.0, 1.0, 9.0]).unwrap();
        let b = StepPath::new(1, vec![0.0, 3.0, 0.0, -9.0]).unwrap();
        // |a-b| = 0 on [0,1/3), 3 on [1/3,1/2), 2 on [1/2,2/3), 1 on [2/3,1)
        let want = 3.0 / 6.0 + 2.0 / 6.0 + 1.0 / 3.0;
        assert!((lq_path_distance(&a, &b, 1.0).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn rejects_small_q() {
        let a = StepPath::constant(&[0.0]);
        assert!(lq_path_distance(&a, &a, 0.5).is_err());
    }

    #[test]
    fn summary_values() {
        let p = StepPath::new(1, vec![0.0, -2.0, 1.0, 3.0, 5.0]).unwrap();
        let s = PathSummary::of(&p, &[1.0]);
        assert_eq!(s.endpoint, vec![5.0]);
        assert_eq!(s.sup_half, 2.0);
        assert!((s.lq_norms[0].1 - 1.5).abs() < 1e-12);
    }
}
