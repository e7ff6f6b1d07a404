use proptest::prelude::*;

use lrp_lab::cluster::{bfs_cluster_sizes, decompose};
use lrp_lab::coupling::{
    crossing_parameter, geometric_variable, regeneration_times, CouplingParams, ErrorKind, ErrorLedger, UniformStream,
};
use lrp_lab::env::{edge_probability, BackendKind, EnvConfig, Environment};
use lrp_lab::path::{lq_path_distance, StepPath};
use lrp_lab::stable::{surrogate_sum, EndpointPool, SurrogateConfig};
use lrp_lab::walk::{new_vertex_counter, rescale, run_walk, short_jump_max, WalkPath};
use lrp_lab::LatticePoint;

fn pt(c: &[i64]) -> LatticePoint {
    LatticePoint::new(c).unwrap()
}

fn boxed(seed: u64, n: i64) -> Environment {
    let cfg = EnvConfig::desk_default(seed).with_backend(BackendKind::ExactBoxed { half_width: n });
    Environment::new(cfg).unwrap()
}

fn config_strategy() -> impl Strategy<Value = EnvConfig> {
    (2usize..=3, 0.05f64..0.95, 0.1f64..3.0, any::<bool>(), any::<u64>()).prop_map(|(d, frac, beta, nn, seed)| {
        EnvConfig {
            d,
            s: d as f64 + 1.0 + frac,
            beta,
            nn_open: nn,
            ..EnvConfig::desk_default(seed)
        }
    })
}

fn small_vec(d: usize) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-40i64..=40, d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn edge_probability_is_symmetric_and_bounded(cfg in config_strategy(), c in small_vec(3)) {
        let j = pt(&c[..cfg.d]);
        prop_assume!(!j.is_origin());
        let p = edge_probability(j, &cfg).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert_eq!(p, edge_probability(-j, &cfg).unwrap());
        if cfg.nn_open && j.norm_l1() == 1 {
            prop_assert_eq!(p, 1.0);
        } else {
            let want = (cfg.beta * j.norm().powf(-cfg.s)).min(1.0);
            prop_assert!((p - want).abs() <= 1e-12 * want.max(1e-300));
        }
    }

    #[test]
    fn alpha_lies_in_stable_range(cfg in config_strategy()) {
        cfg.validate().unwrap();
        let a = cfg.alpha();
        prop_assert!(a > 0.0 && a < 2.0);
    }

    #[test]
    fn canonical_pair_ignores_order(a in small_vec(2), b in small_vec(2)) {
        let (x, y) = (pt(&a), pt(&b));
        prop_assert_eq!(LatticePoint::canonical_pair(x, y), LatticePoint::canonical_pair(y, x));
    }

    #[test]
    fn pair_states_are_stable_and_symmetric(seed in any::<u64>(), a in small_vec(2), b in small_vec(2)) {
        let (x, y) = (pt(&a), pt(&b));
        prop_assume!(x != y);
        let mut env = Environment::new(EnvConfig::desk_default(seed)).unwrap();
        let first = env.pair_state(x, y).unwrap();
        prop_assert_eq!(first, env.pair_state(y, x).unwrap());
        env.ensure_revealed(x).unwrap();
        env.ensure_revealed(y).unwrap();
        prop_assert_eq!(first, env.pair_state(x, y).unwrap());
    }

    #[test]
    fn open_edges_listed_at_both_ends(seed in any::<u64>(), steps in 50usize..400) {
        let mut env = Environment::new(EnvConfig::desk_default(seed)).unwrap();
        run_walk(&mut env, steps, seed ^ 1).unwrap();
        for (x, y) in env.open_edges() {
            prop_assert!(env.known_neighbors(x).contains(&y));
            prop_assert!(env.known_neighbors(y).contains(&x));
        }
    }

    #[test]
    fn exact_box_edges_stay_inside(seed in any::<u64>(), n in 2i64..10) {
        let env = boxed(seed, n);
        for (x, y) in env.edges() {
            prop_assert!(x.in_box(n) && y.in_box(n));
        }
    }

    #[test]
    fn replay_is_deterministic(seed in any::<u64>(), steps in 10usize..300) {
        let mut a = Environment::new(EnvConfig::desk_default(seed)).unwrap();
        let mut b = Environment::new(EnvConfig::desk_default(seed)).unwrap();
        let pa = run_walk(&mut a, steps, 7).unwrap();
        let pb = run_walk(&mut b, steps, 7).unwrap();
        prop_assert_eq!(&pa.steps, &pb.steps);
        let mut ea = a.open_edges();
        let mut eb = b.open_edges();
        ea.sort();
        eb.sort();
        prop_assert_eq!(ea, eb);
    }

    #[test]
    fn walks_follow_open_edges(seed in any::<u64>(), steps in 1usize..500) {
        let mut env = Environment::new(EnvConfig::desk_default(seed)).unwrap();
        let path = run_walk(&mut env, steps, seed.wrapping_add(3)).unwrap();
        prop_assert_eq!(path.len(), steps);
        prop_assert!(path.steps[0].is_origin());
        for w in path.steps.windows(2) {
            prop_assert!(env.pair_state(w[0], w[1]).unwrap().is_open());
        }
    }

    #[test]
    fn rescaled_path_starts_at_zero(seed in any::<u64>(), steps in 1usize..300) {
        let mut env = Environment::new(EnvConfig::desk_default(seed)).unwrap();
        let path = run_walk(&mut env, steps, 11).unwrap();
        let r = rescale(&path, 1.2);
        prop_assert!(r.value_at(0.0).iter().all(|&v| v == 0.0));
        let sp = r.to_step_path();
        let jumps = (1..=sp.intervals()).filter(|&i| sp.value(i) != sp.value(i - 1)).count();
        prop_assert!(jumps <= steps);
    }

    #[test]
    fn short_jump_max_matches_brute_force(seed in any::<u64>(), k in 4u32..9, eps in 0.01f64..0.3) {
        let mut env = Environment::new(EnvConfig::desk_default(seed)).unwrap();
        let path = run_walk(&mut env, 1 << k, 5).unwrap();
        let stats = short_jump_max(&path, k, eps, 1.2).unwrap();
        prop_assert!(stats.w_k >= 0.0);
        let thr = 2f64.powf((1.0 / 1.2 - eps) * k as f64);
        let mut s = [0i64; 2];
        let mut best = 0f64;
        for i in 1..(1usize << k) {
            let j = path.jump(i);
            if j.norm() <= thr {
                s[0] += j.coord(0);
                s[1] += j.coord(1);
            }
            best = best.max(((s[0] * s[0] + s[1] * s[1]) as f64).sqrt());
        }
        let want = best * 2f64.powf(-(k as f64) / 1.2);
        prop_assert!((stats.w_k - want).abs() <= 1e-12 * want.max(1.0));
    }

    #[test]
    fn short_jump_max_vanishes_below_unit_threshold(seed in any::<u64>(), k in 4u32..9) {
        let mut env = Environment::new(EnvConfig::desk_default(seed)).unwrap();
        let path = run_walk(&mut env, 1 << k, 2).unwrap();
        let stats = short_jump_max(&path, k, 0.9, 1.2).unwrap();
        prop_assert_eq!(stats.w_k, 0.0);
    }

    #[test]
    fn new_vertex_counts_are_monotone(seed in any::<u64>(), walks in 1usize..4, steps in 1usize..200) {
        let mut env = Environment::new(EnvConfig::desk_default(seed)).unwrap();
        let paths: Vec<WalkPath> = (0..walks).map(|w| run_walk(&mut env, steps, w as u64).unwrap()).collect();
        let counts = new_vertex_counter(&paths);
        for (phi, tilde) in counts.phi.iter().zip(&counts.phi_tilde) {
            let mut prev = (0, 0);
            for (&a, &b) in phi.iter().zip(tilde) {
                prop_assert!(a - prev.0 <= 1 && b - prev.1 <= 1);
                prop_assert!(a <= b);
                prev = (a, b);
            }
        }
    }

    #[test]
    fn union_find_partitions_box(seed in any::<u64>(), n in 1i64..12) {
        let env = boxed(seed, n);
        let dec = decompose(&env, n).unwrap();
        let total: u64 = dec.sizes.iter().map(|&s| s as u64).sum();
        prop_assert_eq!(total, ((2 * n + 1) as u64).pow(2));
        prop_assert_eq!(&dec.sizes, &bfs_cluster_sizes(&env, n));
        for (x, y) in env.edges() {
            prop_assert_eq!(dec.label(x), dec.label(y));
        }
        prop_assert_eq!(&dec, &decompose(&env, n).unwrap());
    }

    #[test]
    fn ledger_is_good_iff_empty(kinds in prop::collection::vec(0usize..6, 0..10)) {
        let mut ledger = ErrorLedger::default();
        for (t, &k) in kinds.iter().enumerate() {
            ledger.record(0, t, ErrorKind::ALL[k]);
        }
        prop_assert_eq!(ledger.total(), kinds.len() as u64);
        prop_assert_eq!(ledger.is_good(), kinds.is_empty());
    }

    #[test]
    fn geometric_variable_is_monotone_in_t(seed in any::<u64>(), t1 in 0.05f64..1.0, t2 in 0.05f64..1.0) {
        let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        let mut s = UniformStream::new(seed);
        let r_lo = geometric_variable(lo, &mut s).unwrap();
        let r_hi = geometric_variable(hi, &mut s).unwrap();
        prop_assert!(r_hi <= r_lo);
    }

    #[test]
    fn crossing_parameter_in_unit_interval(d in 0u32..50, p in 0.0f64..1.0) {
        let q = crossing_parameter(d, p);
        prop_assert!((0.0..1.0).contains(&q));
    }

    #[test]
    fn regeneration_times_increase(seed in any::<u64>(), k in 8u32..11) {
        let mut env = Environment::new(EnvConfig::desk_default(seed)).unwrap();
        let path = run_walk(&mut env, 1 << k, 9).unwrap();
        let params = CouplingParams::new(k, 0.1, 0.2, 0.25, 1.2).unwrap();
        let regen = regeneration_times(&path, &mut env, &params).unwrap();
        for w in regen.times.windows(2) {
            prop_assert!(w[0] < w[1]);
        }
        prop_assert!(regen.times.iter().all(|&t| t <= 1 << k));
        prop_assert!(regen.beta <= regen.beta_tilde);
    }

    #[test]
    fn path_distance_is_a_metric(
        a in prop::collection::vec(-5.0f64..5.0, 2..12),
        b in prop::collection::vec(-5.0f64..5.0, 2..12),
        c in prop::collection::vec(-5.0f64..5.0, 2..12),
        q in 1.0f64..4.0,
        factor in 1usize..5,
    ) {
        let (pa, pb, pc) = (StepPath::new(1, a).unwrap(), StepPath::new(1, b).unwrap(), StepPath::new(1, c).unwrap());
        let ab = lq_path_distance(&pa, &pb, q).unwrap();
        prop_assert!(lq_path_distance(&pa, &pa, q).unwrap() == 0.0);
        prop_assert!((ab - lq_path_distance(&pb, &pa, q).unwrap()).abs() <= 1e-12);
        let via = lq_path_distance(&pa, &pc, q).unwrap() + lq_path_distance(&pc, &pb, q).unwrap();
        prop_assert!(ab <= via + 1e-9);
        let refined = lq_path_distance(&pa.refine(factor), &pb, q).unwrap();
        prop_assert!((ab - refined).abs() <= 1e-9 * (1.0 + ab));
    }

    #[test]
    fn surrogate_parts_add_up(seed in any::<u64>(), n in 1usize..200) {
        let cfg = SurrogateConfig {
            k: 10,
            epsilon: 0.1,
            epsilon1: 0.05,
            c_hat: 0.5,
            env: EnvConfig::desk_default(0),
            pool: EndpointPool::lattice(2),
        };
        prop_assert!(cfg.threshold() < cfg.main_threshold());
        let s = surrogate_sum(&cfg, n, seed).unwrap();
        prop_assert!(s.crossed <= s.with_long_edge);
        prop_assert!(s.nonzero() <= s.crossed);
        let (x, m, r) = (s.frak_x.endpoint(), s.frak_m.endpoint(), s.frak_n.endpoint());
        for c in 0..2 {
            prop_assert!((x[c] - m[c] - r[c]).abs() <= 1e-9 * (1.0 + x[c].abs()));
        }
    }
}

#[test]
fn isolated_origin_stays_put() {
    let cfg = EnvConfig {
        nn_open: false,
        beta: 1e-9,
        ..EnvConfig::desk_default(4)
    };
    let mut env = Environment::new(cfg).unwrap();
    let path = run_walk(&mut env, 64, 1).unwrap();
    assert!(path.steps.iter().all(|x| x.is_origin()));
}

#[test]
fn point_dimension_matches_input() {
    assert_eq!(pt(&[1, -2, 3]).dim(), 3);
    assert!(LatticePoint::new(&[]).is_err());
}
