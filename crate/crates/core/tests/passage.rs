mod common;

use crystal_fpp::fpp::{
    passage_between_points, passage_times, percolation_region, restricted_passage, sample_configuration, Configuration, SeedPlan,
    TimeDistribution,
};
use crystal_fpp::lattice::{build_preset, instantiate_window, Window, WindowOptions};
use proptest::prelude::*;

fn preset_windows() -> Vec<(&'static str, Window)> {
    let opts = WindowOptions::default();
    let mut out = Vec::new();
    for (name, lo, hi) in [
        ("cubic2", vec![-6, -6], vec![6, 6]),
        ("cubic3", vec![-2, -2, -2], vec![2, 2, 2]),
        ("triangular", vec![-6, -6], vec![6, 6]),
        ("honeycomb", vec![-4, -4], vec![4, 4]),
        ("honeycomb-shifted", vec![-4, -4], vec![4, 4]),
        ("diamond", vec![-2, -2, -1], vec![2, 2, 2]),
    ] {
        let (l, r) = build_preset(name).unwrap();
        let w = Window::with_bounds(&l, &r, lo, hi, opts).unwrap();
        assert!(w.vertex_count() <= 200, "{name}");
        out.push((name, w));
    }
    out
}

#[test]
fn dijkstra_equals_relaxation_oracle() {
    let laws = [TimeDistribution::exponential(1.0).unwrap(), TimeDistribution::bernoulli(0.5).unwrap(), TimeDistribution::uniform(0.5, 2.0).unwrap()];
    for (name, w) in preset_windows() {
        for seed in 0..50u32 {
            let config = Configuration::sample(&w, &laws[seed as usize % 3], SeedPlan::new(11, 0), seed);
            let source = (seed as usize * 37) % w.vertex_count();
            let res = passage_times(&w, &config, source).unwrap();
            assert_eq!(res.times, common::bellman_ford(&w, &config, source), "{name} seed {seed}");
        }
    }
}

#[test]
fn golden_exponential_configuration() {
    let (l, r) = build_preset("cubic2").unwrap();
    let w = instantiate_window(&l, &r, 1).unwrap();
    let c = sample_configuration(&w, &TimeDistribution::exponential(1.0).unwrap(), 42);
    assert_eq!(&c.times()[..4], &[0.875883378255026, 1.4939367483634283, 0.6516636411528097, 1.468700634267201]);
    let res = passage_times(&w, &c, w.lookup(0, &[0, 0]).unwrap()).unwrap();
    assert_eq!(res.times[1], 0.6516636411528097);
    assert_eq!(res.times[8], 2.4413380422677147);
}

#[test]
fn translated_pairs_have_the_same_law() {
    let (l, r) = build_preset("cubic2").unwrap();
    let w = instantiate_window(&l, &r, 8).unwrap();
    let exp = TimeDistribution::exponential(1.0).unwrap();
    let (x, y) = (w.lookup(0, &[-1, 0]).unwrap(), w.lookup(0, &[1, 1]).unwrap());
    let (xb, yb) = (w.lookup(0, &[0, 0]).unwrap(), w.lookup(0, &[2, 1]).unwrap());
    let n = 2000u32;
    let plan = SeedPlan::new(5, 0);
    let a: Vec<f64> = (0..n).map(|i| passage_times(&w, &Configuration::sample(&w, &exp, plan, i), x).unwrap().times[y]).collect();
    let b: Vec<f64> = (n..2 * n).map(|i| passage_times(&w, &Configuration::sample(&w, &exp, plan, i), xb).unwrap().times[yb]).collect();
    let d = common::ks_statistic(&a, &b);
    assert!(d < common::ks_critical_001(a.len(), b.len()), "KS statistic {d}");
}

#[test]
fn restriction_only_increases_times() {
    let (l, r) = build_preset("triangular").unwrap();
    let w = instantiate_window(&l, &r, 4).unwrap();
    let c = Configuration::sample(&w, &TimeDistribution::exponential(1.0).unwrap(), SeedPlan::new(1, 0), 0);
    let (x, y) = (w.lookup(0, &[0, 0]).unwrap(), w.lookup(0, &[2, -1]).unwrap());
    let full = passage_times(&w, &c, x).unwrap().times[y];
    let mut prev = f64::INFINITY;
    for radius in 2..=4 {
        let t = restricted_passage(&w, &c, x, y, radius).unwrap();
        assert!(t <= prev && t >= full);
        prev = t;
    }
    assert_eq!(prev, full);
    assert_eq!(restricted_passage(&w, &c, x, y, 1).unwrap(), f64::INFINITY);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn triangle_inequality_and_symmetry(seed in 0u64..1_000_000, a in 0usize..49, b in 0usize..49, c in 0usize..49) {
        let (l, r) = build_preset("cubic2").unwrap();
        let w = instantiate_window(&l, &r, 3).unwrap();
        let config = sample_configuration(&w, &TimeDistribution::exponential(1.0).unwrap(), seed);
        let t = |s: usize| passage_times(&w, &config, s).unwrap().times;
        let (ta, tb) = (t(a), t(b));
        prop_assert!(ta[c] <= ta[b] + tb[c] + 1e-9);
        prop_assert!((ta[b] - tb[a]).abs() <= 1e-9);
    }

    #[test]
    fn percolation_regions_are_nested(seed in 0u64..1_000_000, s in 0.0f64..3.0, ds in 0.0f64..3.0) {
        let (l, r) = build_preset("honeycomb").unwrap();
        let w = instantiate_window(&l, &r, 3).unwrap();
        let config = sample_configuration(&w, &TimeDistribution::uniform(0.0, 1.0).unwrap(), seed);
        let res = passage_times(&w, &config, w.lookup(0, &[0, 0]).unwrap()).unwrap();
        let small = percolation_region(&res, s);
        let big = percolation_region(&res, s + ds);
        prop_assert!(small.iter().all(|v| big.binary_search(v).is_ok()));
        prop_assert!(small.contains(&res.source));
    }

    #[test]
    fn point_passage_is_symmetric(seed in 0u64..1_000_000, x in proptest::collection::vec(-2.0f64..2.0, 2), y in proptest::collection::vec(-2.0f64..2.0, 2)) {
        let (l, r) = build_preset("triangular").unwrap();
        let w = instantiate_window(&l, &r, 3).unwrap();
        let config = sample_configuration(&w, &TimeDistribution::exponential(2.0).unwrap(), seed);
        let xy = passage_between_points(&w, &config, &x, &y).unwrap();
        let yx = passage_between_points(&w, &config, &y, &x).unwrap();
        prop_assert_eq!(xy.time, yx.time);
    }
}
