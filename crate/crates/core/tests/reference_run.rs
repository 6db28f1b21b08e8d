//! Analyses of the default d = 4 construction (desk scale, three stages,
//! seed 1), built once and shared.

use std::sync::OnceLock;

use iet_core::analysis::{
    build_nested_family, frostman_weights, illumination_proportion, keane_check, run_plane_family,
    survival_proportion, two_measure_evidence, BirkhoffConfig, NestedConfig, ShadowConfig,
};
use iet_core::construction::{make_schedule, run_construction, ConstructionConfig, ConstructionRun, ExponentMap};
use iet_core::induction::IntExchange;
use num_traits::ToPrimitive;

fn run() -> &'static ConstructionRun {
    static RUN: OnceLock<ConstructionRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let schedule = make_schedule(0, ExponentMap::desk(), 3).unwrap();
        run_construction(&schedule, &ConstructionConfig::new(4), 1).unwrap()
    })
}

#[test]
fn run_is_reproducible_and_valid() {
    let r = run();
    assert!(r.verify().is_ok());
    let schedule = make_schedule(0, ExponentMap::desk(), 3).unwrap();
    let again = run_construction(&schedule, &ConstructionConfig::new(4), 1).unwrap();
    assert_eq!(serde_json::to_string(r).unwrap(), serde_json::to_string(&again).unwrap());
}

#[test]
fn candidate_has_no_short_connection() {
    // lengths M 1 follow the whole constructed path
    let m = run().matrix();
    let lens: Vec<i128> = (0..4).map(|i| m.row(i).iter().sum::<num_bigint::BigInt>().to_i128().unwrap()).collect();
    let t = IntExchange::from_lengths(&lens, &run().start_permutation());
    assert_eq!(keane_check(&t, 100_000), None);
}

#[test]
fn clusters_average_apart() {
    let ev = two_measure_evidence(run(), &BirkhoffConfig::default()).unwrap();
    assert!(ev.separated, "gap {} spread {}", ev.gap, ev.spread);
    assert!(ev.gap > 10.0 * ev.spread);
}

#[test]
fn nested_family_is_nested() {
    let fam = run_plane_family(run()).unwrap();
    let report = build_nested_family(run(), &fam, &NestedConfig { planes: 2, ..Default::default() }).unwrap();
    assert_eq!(report.tree_sizes.len(), 3);
    assert!(report.tree_sizes.windows(2).all(|w| w[1] >= w[0]));
    for p in &report.planes {
        assert!(p.nesting);
        let f = &p.family;
        assert!(f.retained.iter().all(|&a| a > 0.0 && a <= 1.0 + 1e-12), "{:?}", f.retained);
        assert!(f.radii.windows(2).all(|w| w[1].0 <= w[0].0), "{:?}", f.radii);
        for (k, level) in f.levels.iter().enumerate().skip(1) {
            assert!(level.iter().all(|c| c.parent.is_some_and(|i| i < f.levels[k - 1].len())));
        }
        // each parent with children passes its mass on unchanged
        let mu = frostman_weights(f).unwrap();
        for k in 1..f.levels.len() {
            let mut passed = vec![0.0; f.levels[k - 1].len()];
            for (c, w) in f.levels[k].iter().zip(&mu.weights[k]) {
                passed[c.parent.unwrap()] += w;
            }
            for (i, &m) in passed.iter().enumerate() {
                if m > 0.0 {
                    assert!((m - mu.weights[k - 1][i]).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn shadow_proportions_are_proportions() {
    let fam = run_plane_family(run()).unwrap();
    let cfg = ShadowConfig { samples: 100, ..Default::default() };
    let il = illumination_proportion(run(), 1, 0.5, &fam.u, &cfg).unwrap();
    let sv = survival_proportion(run(), 1, 0.5, &cfg).unwrap();
    for r in [&il, &sv] {
        assert!(r.samples > 0);
        assert!((0.0..=1.0).contains(&r.estimate));
    }
    let again = survival_proportion(run(), 1, 0.5, &cfg).unwrap();
    assert_eq!(sv.estimate, again.estimate);
    assert!(survival_proportion(run(), 1, 0.95, &cfg).is_err());
}
