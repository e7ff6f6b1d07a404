//! Shell-by-shell sampling of independent Bernoulli edge fields.
//!
//! Displacements are grouped into sup-norm annuli `(a, b]` with `b = min(2a, R)`.
//! Each group is sampled exactly: the number of candidates is
//! `Binomial(group size, p_bar)` with `p_bar` the largest `p(j)` in the group,
//! candidates are placed uniformly without replacement, and each one is kept
//! with probability `p(j) / p_bar`. Small groups are enumerated directly.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use rustc_hash::FxHashSet;

use crate::env::prob::EdgeProbModel;
use crate::lattice::LatticePoint;

/// Groups at most this large are enumerated point by point.
const ENUMERATE_LIMIT: u128 = 256;
/// Groups whose dominating probability exceeds this are enumerated as well.
const DENSE_LIMIT: f64 = 0.25;
/// Above this many trials the Binomial count is replaced by a Poisson count.
const BINOMIAL_LIMIT: u128 = 1 << 62;

#[derive(Debug, Clone, Copy, PartialEq)]
enum CountLaw {
    Enumerate,
    Binomial(Binomial),
    Poisson(Poisson<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShellGroup {
    /// Exclusive inner sup-norm radius.
    pub inner: i64,
    /// Inclusive outer sup-norm radius.
    pub outer: i64,
    /// Number of lattice points in the annulus.
    pub size: u128,
    /// Dominating probability on the annulus.
    pub p_bar: f64,
    law: CountLaw,
}

impl ShellGroup {
    fn new(model: &EdgeProbModel, inner: i64, outer: i64) -> Self {
        let size = annulus_size(model.d, inner, outer);
        let p_bar = model.dominating(inner);
        let law = if size <= ENUMERATE_LIMIT || p_bar <= 0.0 || p_bar > DENSE_LIMIT {
            CountLaw::Enumerate
        } else {
            count_law(size, p_bar)
        };
        Self {
            inner,
            outer,
            size,
            p_bar,
            law,
        }
    }

    /// All points of the annulus, in lexicographic order.
    pub fn points(&self, d: usize) -> Vec<LatticePoint> {
        LatticePoint::origin(d)
            .cube_around(self.outer)
            .into_iter()
            .filter(|j| j.norm_inf() > self.inner)
            .collect()
    }

    fn uniform_point<R: Rng + ?Sized>(&self, d: usize, rng: &mut R) -> LatticePoint {
        let mut c = [0i64; crate::lattice::MAX_DIM];
        loop {
            for v in c.iter_mut().take(d) {
                *v = rng.random_range(-self.outer..=self.outer);
            }
            if c[..d].iter().any(|x| x.abs() > self.inner) {
                return LatticePoint::from_slice(&c[..d]);
            }
        }
    }
}

/// Number of points with `a < |j|_inf <= b` in `Z^d`.
pub fn annulus_size(d: usize, a: i64, b: i64) -> u128 {
    let outer = (2 * b as u128 + 1).pow(d as u32);
    let inner = (2 * a as u128 + 1).pow(d as u32);
    outer - inner
}

/// Partition of `(inner, outer]` into dyadic sup-norm annuli.
#[derive(Debug, Clone)]
pub struct ShellSampler {
    model: EdgeProbModel,
    groups: Vec<ShellGroup>,
}

impl ShellSampler {
    pub fn new(model: EdgeProbModel, inner: i64, outer: i64) -> Self {
        assert!(inner >= 0 && outer >= inner);
        let mut groups = Vec::new();
        let mut a = inner;
        while a < outer {
            let b = (2 * a.max(1)).min(outer);
            let g = ShellGroup::new(&model, a, b);
            if g.p_bar > 0.0 {
                groups.push(g);
            }
            a = b;
        }
        Self { model, groups }
    }

    pub fn groups(&self) -> &[ShellGroup] {
        &self.groups
    }

    pub fn model(&self) -> &EdgeProbModel {
        &self.model
    }

    /// Samples the open displacements of one independent Bernoulli field.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<LatticePoint> {
        let mut out = Vec::new();
        for g in &self.groups {
            self.sample_group(g, rng, &mut out);
        }
        out
    }

    fn sample_group<R: Rng + ?Sized>(&self, g: &ShellGroup, rng: &mut R, out: &mut Vec<LatticePoint>) {
        let d = self.model.d;
        let count = match g.law {
            CountLaw::Enumerate => {
                for j in g.points(d) {
                    let p = self.model.prob(j);
                    if p > 0.0 && rng.random::<f64>() < p {
                        out.push(j);
                    }
                }
                return;
            }
            CountLaw::Binomial(b) => b.sample(rng),
            CountLaw::Poisson(p) => p.sample(rng) as u64,
        };
        if count == 0 {
            return;
        }
        let mut seen: FxHashSet<LatticePoint> = FxHashSet::default();
        while (seen.len() as u64) < count {
            let j = g.uniform_point(d, rng);
            if !seen.insert(j) {
                continue;
            }
            // thinning to the exact probability
            let keep = self.model.prob(j) / g.p_bar;
            if keep >= 1.0 || rng.random::<f64>() < keep {
                out.push(j);
            }
        }
    }

    /// Samples `copies` independent fields at once; returns `(copy, j)` pairs
    /// sorted by copy index. Cost is proportional to the number of candidates,
    /// not to `copies`.
    pub fn sample_many<R: Rng + ?Sized>(&self, copies: u64, rng: &mut R) -> Vec<(u64, LatticePoint)> {
        let d = self.model.d;
        let mut out = Vec::new();
        if copies == 0 {
            return out;
        }
        for g in &self.groups {
            let trials = g.size.saturating_mul(copies as u128);
            let count = match count_law(trials, g.p_bar) {
                CountLaw::Binomial(b) => b.sample(rng),
                CountLaw::Poisson(p) => p.sample(rng) as u64,
                CountLaw::Enumerate => unreachable!(),
            };
            let mut seen: FxHashSet<(u64, LatticePoint)> = FxHashSet::default();
            while (seen.len() as u64) < count {
                let copy = rng.random_range(0..copies);
                let j = g.uniform_point(d, rng);
                if !seen.insert((copy, j)) {
                    continue;
                }
                let keep = self.model.prob(j) / g.p_bar;
                if keep >= 1.0 || rng.random::<f64>() < keep {
                    out.push((copy, j));
                }
            }
        }
        out.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
        out
    }

    /// Exact `sum p(j)` over the sampled region, by direct summation.
    /// Only feasible for modest outer radii.
    pub fn exact_mean(&self) -> f64 {
        let d = self.model.d;
        self.groups
            .iter()
            .map(|g| g.points(d).into_iter().map(|j| self.model.prob(j)).sum::<f64>())
            .sum()
    }
}

fn count_law(trials: u128, p: f64) -> CountLaw {
    if trials <= BINOMIAL_LIMIT {
        CountLaw::Binomial(Binomial::new(trials as u64, p.min(1.0)).expect("valid binomial parameters"))
    } else {
        // Le Cam: total variation to the binomial is at most trials * p^2.
        CountLaw::Poisson(Poisson::new(trials as f64 * p).expect("positive rate"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::config::EnvConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model() -> EdgeProbModel {
        EdgeProbModel::from_config(&EnvConfig::desk_default(0))
    }

    #[test]
    fn annulus_sizes() {
        assert_eq!(annulus_size(2, 0, 1), 8);
        assert_eq!(annulus_size(2, 1, 2), 16);
        assert_eq!(annulus_size(1, 3, 5), 4);
        let g = ShellGroup::new(&model(), 3, 6);
        assert_eq!(g.points(2).len() as u128, g.size);
    }

    #[test]
    fn groups_cover_range() {
        let s = ShellSampler::new(model(), 8, 1000);
        let gs = s.groups();
        assert_eq!(gs.first().unwrap().inner, 8);
        assert_eq!(gs.last().unwrap().outer, 1000);
        for w in gs.windows(2) {
            assert_eq!(w[0].outer, w[1].inner);
        }
    }

    #[test]
    fn samples_stay_in_range() {
        let s = ShellSampler::new(model(), 8, 200);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            for j in s.sample(&mut rng) {
                assert!(j.norm_inf() > 8 && j.norm_inf() <= 200);
            }
        }
    }

    #[test]
    fn zero_beta_is_empty() {
        let m = EdgeProbModel { beta: 0.0, ..model() };
        let s = ShellSampler::new(m, 8, 1 << 40);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(s.sample(&mut rng).is_empty());
        assert!(s.sample_many(1000, &mut rng).is_empty());
    }
}
