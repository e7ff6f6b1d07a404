use crate::env::config::EnvConfig;
use crate::error::{LabError, Result};
use crate::lattice::LatticePoint;

/// Connection probability `p(j) = min(1, beta |j|^-s)`, with nearest
/// neighbours optionally forced open.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeProbModel {
    pub d: usize,
    pub s: f64,
    pub beta: f64,
    pub nn_open: bool,
}

impl EdgeProbModel {
    pub fn from_config(cfg: &EnvConfig) -> Self {
        Self {
            d: cfg.d,
            s: cfg.s,
            beta: cfg.beta,
            nn_open: cfg.nn_open,
        }
    }

    /// `p(j)` for `j != 0`. The caller guarantees `j` is nonzero.
    #[inline]
    pub fn prob(&self, j: LatticePoint) -> f64 {
        if self.nn_open && j.norm_l1() == 1 {
            return 1.0;
        }
        self.radial(j.norm_sq().sqrt())
    }

    /// `min(1, beta r^-s)` as a function of the Euclidean length.
    #[inline]
    pub fn radial(&self, r: f64) -> f64 {
        if self.beta == 0.0 {
            return 0.0;
        }
        (self.beta * r.powf(-self.s)).min(1.0)
    }

    /// Upper bound of `p` over displacements with `|j|_inf > a`.
    pub fn dominating(&self, a: i64) -> f64 {
        self.radial((a + 1) as f64)
    }

    /// `sum_{|j| > r} beta |j|^-s` bounded above by the continuum integral
    /// shifted inward by `sqrt(d)/2`; used as a truncation bound.
    pub fn tail_mass_bound(&self, r: f64) -> f64 {
        if self.beta == 0.0 {
            return 0.0;
        }
        let d = self.d as f64;
        let inner = (r - d.sqrt() / 2.0).max(1.0);
        // surface area of the unit sphere in R^d
        let area = sphere_area(self.d);
        self.beta * area * inner.powf(d - self.s) / (self.s - d)
    }
}

/// Surface area of the unit sphere `S^{d-1}`.
pub fn sphere_area(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI,
        4 => 2.0 * std::f64::consts::PI * std::f64::consts::PI,
        _ => unreachable!("dimension checked at config validation"),
    }
}

/// `p(j)` under `cfg`, rejecting the self-loop `j = 0`.
pub fn edge_probability(j: LatticePoint, cfg: &EnvConfig) -> Result<f64> {
    if j.dim() != cfg.d {
        return Err(LabError::Contract(format!(
            "displacement {j} has dimension {} but config has d = {}",
            j.dim(),
            cfg.d
        )));
    }
    if j.is_origin() {
        return Err(LabError::Contract("edge_probability(0) is undefined: no self-loops".into()));
    }
    Ok(EdgeProbModel::from_config(cfg).prob(j))
}

/// Precomputed probabilities for every nonzero `j` with `|j|_inf <= r`.
#[derive(Debug, Clone)]
pub struct LocalTable {
    pub cutoff: i64,
    pub entries: Vec<(LatticePoint, f64)>,
}

impl LocalTable {
    pub fn new(model: &EdgeProbModel, cutoff: i64) -> Self {
        let origin = LatticePoint::origin(model.d);
        let entries = origin
            .cube_around(cutoff)
            .into_iter()
            .filter(|j| !j.is_origin())
            .map(|j| (j, model.prob(j)))
            .filter(|&(_, p)| p > 0.0)
            .collect();
        Self { cutoff, entries }
    }

    /// Expected number of open local pairs at a vertex.
    pub fn mean_degree(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(s: f64, beta: f64, nn_open: bool) -> EnvConfig {
        EnvConfig {
            s,
            beta,
            nn_open,
            ..EnvConfig::desk_default(0)
        }
    }

    fn pt(c: &[i64]) -> LatticePoint {
        LatticePoint::new(c).unwrap()
    }

    #[test]
    fn examples() {
        let p = edge_probability(pt(&[3, 4]), &cfg(3.0, 1.0, false)).unwrap();
        assert!((p - 0.008).abs() < 1e-15);
        let p = edge_probability(pt(&[1, 0]), &cfg(3.7, 0.01, true)).unwrap();
        assert_eq!(p, 1.0);
        let p = edge_probability(pt(&[1, 1]), &cfg(4.0, 2.0, false)).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
    }

    #[test]
    fn self_loop_rejected() {
        assert!(edge_probability(pt(&[0, 0]), &cfg(3.2, 1.0, true)).is_err());
    }

    #[test]
    fn symmetric_and_bounded() {
        let m = EdgeProbModel::from_config(&cfg(3.2, 5.0, false));
        for j in LatticePoint::origin(2).cube_around(4) {
            if j.is_origin() {
                continue;
            }
            let p = m.prob(j);
            assert!((0.0..=1.0).contains(&p));
            assert_eq!(p, m.prob(-j));
        }
    }

    #[test]
    fn tail_bound_dominates_partial_sum() {
        let m = EdgeProbModel::from_config(&cfg(3.2, 1.0, true));
        let r = 8.0;
        // direct sum over 8 < |j|_inf <= 400, a lower bound of the full tail
        let sum: f64 = LatticePoint::origin(2)
            .cube_around(400)
            .into_iter()
            .filter(|j| j.norm_inf() > 8)
            .map(|j| m.prob(j))
            .sum();
        assert!(m.tail_mass_bound(r) > sum);
    }
}
