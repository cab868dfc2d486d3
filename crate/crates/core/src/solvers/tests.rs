use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::scenario::{sample_scenario, true_bistatic_ranges, Scenario, ScenarioParams};

fn dist(a: Point2, b: Point2) -> f64 {
    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
}

/// Objectives written directly from their sums, independent of the solver code.
fn oracle_weighted(ms: &MeasurementSet, nodes: &Nodes, w: &[f64], x: Point2) -> f64 {
    let mut f = 0.0;
    for (s, g) in nodes.gnbs.iter().enumerate() {
        for (k, u) in nodes.ues.iter().enumerate() {
            f += w[k] * (ms.get(s, k) - dist(x, *g) - dist(x, *u)).powi(2);
        }
    }
    f
}

fn oracle_differencing(ms: &MeasurementSet, nodes: &Nodes, x: Point2) -> f64 {
    let (sn, kn) = (nodes.gnbs.len(), nodes.ues.len());
    let mut f = 0.0;
    for s in 0..sn {
        for k in 0..kn {
            for k2 in k + 1..kn {
                let d = ms.get(s, k) - ms.get(s, k2);
                f += (d - (dist(x, nodes.ues[k]) - dist(x, nodes.ues[k2]))).powi(2);
            }
        }
    }
    for k in 0..kn {
        for s in 0..sn {
            for s2 in s + 1..sn {
                let d = ms.get(s2, k) - ms.get(s, k);
                f += (d - (dist(x, nodes.gnbs[s2]) - dist(x, nodes.gnbs[s]))).powi(2);
            }
        }
    }
    f
}

fn central_difference(f: impl Fn(Point2) -> f64, x: Point2, h: f64) -> Point2 {
    Point2::new(
        (f(Point2::new(x.x + h, x.y)) - f(Point2::new(x.x - h, x.y))) / (2.0 * h),
        (f(Point2::new(x.x, x.y + h)) - f(Point2::new(x.x, x.y - h))) / (2.0 * h),
    )
}

fn relative_error(analytic: Point2, numeric: Point2) -> f64 {
    (analytic - numeric).norm() / numeric.norm().max(1.0)
}

fn noisy_case(seed: u64) -> (Scenario, MeasurementSet) {
    let sc = sample_scenario(&ScenarioParams::default(), seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ms = true_bistatic_ranges(&sc);
    for r in ms.ranges.iter_mut() {
        *r += rng.random_range(-1.5..1.5);
    }
    (sc, ms)
}

fn random_point(rng: &mut impl Rng) -> Point2 {
    Point2::new(rng.random_range(-100.0..100.0), rng.random_range(-100.0..100.0))
}

fn exact_case(seed: u64) -> (Scenario, MeasurementSet) {
    let p = ScenarioParams {
        outlier_max: 0.0,
        ..ScenarioParams::default()
    };
    let sc = sample_scenario(&p, seed).unwrap();
    let ms = true_bistatic_ranges(&sc);
    (sc, ms)
}

#[test]
fn objectives_match_oracle() {
    let (sc, ms) = noisy_case(1);
    let nodes = sc.nodes();
    let w: Vec<f64> = (1..=6).map(|k| k as f64 / 21.0).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let x = random_point(&mut rng);
        let a = irls_objective(&ms, &nodes, &w, x);
        assert!((a - oracle_weighted(&ms, &nodes, &w, x)).abs() <= 1e-10 * a.max(1.0));
        let diffs = PathDifferences::new(&ms).unwrap();
        let b = diffs.objective(&nodes, x);
        assert!((b - oracle_differencing(&ms, &nodes, x)).abs() <= 1e-10 * b.max(1.0));
    }
}

#[test]
fn gradients_match_finite_differences() {
    let h = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..100 {
        let (sc, ms) = noisy_case(100 + trial);
        let nodes = sc.nodes();
        let x = random_point(&mut rng);
        let ones = vec![1.0; 6];
        let ls_fd = central_difference(|p| oracle_weighted(&ms, &nodes, &ones, p), x, h);
        assert!(relative_error(ls_gradient(&ms, &nodes, x), ls_fd) < 1e-5);

        let w: Vec<f64> = (0..6).map(|_| rng.random::<f64>()).collect();
        let irls_fd = central_difference(|p| oracle_weighted(&ms, &nodes, &w, p), x, h);
        assert!(relative_error(irls_gradient(&ms, &nodes, &w, x), irls_fd) < 1e-5);

        let diffs = PathDifferences::new(&ms).unwrap();
        let prop_fd = central_difference(|p| oracle_differencing(&ms, &nodes, p), x, h);
        assert!(relative_error(diffs.gradient(&nodes, x), prop_fd) < 1e-5);
    }
}

#[test]
fn ls_stays_at_truth_on_exact_data() {
    let (sc, ms) = exact_case(4);
    let r = solve_ls(&ms, &sc.nodes(), &SolverConfig::default(), sc.target).unwrap();
    assert!(r.converged);
    assert_eq!(r.iterations, 1);
    assert!(r.error_to(sc.target) < 1e-9);
}

#[test]
fn ls_recovers_truth_from_centroid() {
    let cfg = SolverConfig::default();
    for seed in 0..10 {
        let (sc, ms) = exact_case(seed);
        let nodes = sc.nodes();
        let r = solve_ls(&ms, &nodes, &cfg, nodes.centroid()).unwrap();
        assert!(r.converged);
        // the stopping rule leaves a residual of order threshold / (step * curvature)
        let tight = SolverConfig {
            ls_threshold: 1e-7,
            ..cfg.clone()
        };
        let r = solve_ls(&ms, &nodes, &tight, nodes.centroid()).unwrap();
        assert!(r.error_to(sc.target) < 1e-3, "seed {seed}: {}", r.error_to(sc.target));
    }
}

#[test]
fn underdetermined_and_mismatched_inputs() {
    let ms = MeasurementSet::from_ranges(1, 2, vec![10.0, 12.0]).unwrap();
    let nodes = Nodes {
        gnbs: vec![Point2::ORIGIN],
        ues: vec![Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)],
    };
    let cfg = SolverConfig::default();
    assert!(matches!(
        solve_ls(&ms, &nodes, &cfg, Point2::ORIGIN),
        Err(Error::Underdetermined { measurements: 2 })
    ));
    assert!(matches!(
        solve_irls(&ms, &nodes, &cfg, Point2::ORIGIN),
        Err(Error::Underdetermined { .. })
    ));
    let ms = MeasurementSet::from_ranges(1, 3, vec![10.0, 12.0, 11.0]).unwrap();
    assert!(matches!(
        solve_ls(&ms, &nodes, &cfg, Point2::ORIGIN),
        Err(Error::Config(_))
    ));
}

#[test]
fn residuals_examples() {
    let (sc, mut ms) = exact_case(6);
    let nodes = sc.nodes();
    assert!(residuals(&ms, &nodes, sc.target).iter().all(|e| e.abs() < 1e-9));
    let d = 4.2;
    let v = ms.get(2, 3);
    ms.set(2, 3, v + d);
    let e = residuals(&ms, &nodes, sc.target);
    for (k, ek) in e.iter().enumerate() {
        let expect = if k == 3 { d / 6.0 } else { 0.0 };
        assert!((ek - expect).abs() < 1e-9);
    }
}

#[test]
fn residuals_match_direct_computation() {
    let (sc, ms) = noisy_case(8);
    let nodes = sc.nodes();
    let x = Point2::new(12.0, -30.0);
    let e = residuals(&ms, &nodes, x);
    for k in 0..6 {
        let direct: f64 = (0..6)
            .map(|s| (ms.get(s, k) - dist(x, nodes.gnbs[s]) - dist(x, nodes.ues[k])).abs())
            .sum::<f64>()
            / 6.0;
        assert!((e[k] - direct).abs() < 1e-10);
    }
}

#[test]
fn irls_downweights_biased_ue() {
    let cfg = SolverConfig::default();
    let mut checked = 0;
    for seed in 0..20 {
        let (sc, mut ms) = exact_case(seed);
        let nodes = sc.nodes();
        for s in 0..6 {
            let v = ms.get(s, 2);
            ms.set(s, 2, v + 20.0);
        }
        let init = initial_point(&ms, &nodes, &cfg, Method::Irls).unwrap();
        let irls = solve_irls(&ms, &nodes, &cfg, init).unwrap();
        let ls = solve_ls(&ms, &nodes, &cfg, initial_point(&ms, &nodes, &cfg, Method::Ls).unwrap()).unwrap();
        assert!(irls.converged, "seed {seed}");
        let total: f64 = irls.ue_weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(irls.ue_weights[2] < 0.05, "seed {seed}: {:?}", irls.ue_weights);
        assert!(irls.error_to(sc.target) < ls.error_to(sc.target), "seed {seed}");
        checked += 1;
    }
    assert_eq!(checked, 20);
}

#[test]
fn irls_weights_stay_on_simplex() {
    let cfg = SolverConfig {
        record_trace: true,
        ..SolverConfig::default()
    };
    for seed in 0..30 {
        let (sc, ms) = noisy_case(seed);
        let nodes = sc.nodes();
        let init = initial_point(&ms, &nodes, &cfg, Method::Irls).unwrap();
        let r = solve_irls(&ms, &nodes, &cfg, init).unwrap();
        assert_eq!(r.ue_weights.len(), 6);
        assert!((r.ue_weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(r.ue_weights.iter().all(|w| (0.0..=1.0).contains(w)));
    }
}

#[test]
fn irls_with_far_start_rejects_every_ue() {
    let (sc, ms) = exact_case(2);
    let r = solve_irls(&ms, &sc.nodes(), &SolverConfig::default(), Point2::new(900.0, 900.0)).unwrap();
    assert!(!r.converged);
    assert_eq!(r.iterations, 1);
}

#[test]
fn gnb_pair_arithmetic_and_sign() {
    let ms = MeasurementSet::from_ranges(2, 1, vec![10.0, 14.0]).unwrap();
    let d = difference_gnb_pairs(&ms).unwrap();
    assert_eq!(
        d,
        vec![GnbPairDifference {
            ue: 0,
            first: 0,
            second: 1,
            value: 4.0
        }]
    );
    let ms = MeasurementSet::from_ranges(1, 2, vec![10.0, 14.0]).unwrap();
    let d = difference_ue_pairs(&ms).unwrap();
    assert_eq!(
        d,
        vec![UePairDifference {
            gnb: 0,
            first: 0,
            second: 1,
            value: -4.0
        }]
    );
}

#[test]
fn difference_counts_and_errors() {
    let (_, ms) = noisy_case(3);
    assert_eq!(difference_gnb_pairs(&ms).unwrap().len(), 6 * 15);
    assert_eq!(difference_ue_pairs(&ms).unwrap().len(), 6 * 15);
    let one_gnb = MeasurementSet::from_ranges(1, 3, vec![1.0, 2.0, 3.0]).unwrap();
    assert!(matches!(
        difference_gnb_pairs(&one_gnb),
        Err(Error::InsufficientGeometry(_))
    ));
    let one_ue = MeasurementSet::from_ranges(3, 1, vec![1.0, 2.0, 3.0]).unwrap();
    assert!(matches!(
        difference_ue_pairs(&one_ue),
        Err(Error::InsufficientGeometry(_))
    ));
    let nodes = Nodes {
        gnbs: vec![Point2::ORIGIN; 3],
        ues: vec![Point2::new(5.0, 0.0)],
    };
    assert!(matches!(
        solve_proposed(&one_ue, &nodes, &SolverConfig::default(), Point2::ORIGIN),
        Err(Error::InsufficientGeometry(_))
    ));
}

#[test]
fn differences_match_geometry_on_exact_data() {
    let (sc, ms) = exact_case(12);
    for d in difference_gnb_pairs(&ms).unwrap() {
        let expect = dist(sc.target, sc.gnbs[d.second]) - dist(sc.target, sc.gnbs[d.first]);
        assert!((d.value - expect).abs() < 1e-9);
    }
    for d in difference_ue_pairs(&ms).unwrap() {
        let expect = dist(sc.target, sc.ues[d.first]) - dist(sc.target, sc.ues[d.second]);
        assert!((d.value - expect).abs() < 1e-9);
    }
}

/// Rounds to a multiple of 2^-20 m so that adding another such value to a
/// range below 2^30 m is exact.
fn dyadic(x: f64) -> f64 {
    (x * 1048576.0).round() / 1048576.0
}

#[test]
fn link_excess_cancels_in_matching_differences() {
    let (_, mut ms) = noisy_case(13);
    for r in ms.ranges.iter_mut() {
        *r = dyadic(*r);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let ue_excess: Vec<f64> = (0..6).map(|_| dyadic(rng.random_range(0.0..10.0))).collect();
    let gnb_excess: Vec<f64> = (0..6).map(|_| dyadic(rng.random_range(0.0..10.0))).collect();

    let mut per_ue = ms.clone();
    let mut per_gnb = ms.clone();
    for s in 0..6 {
        for k in 0..6 {
            per_ue.set(s, k, ms.get(s, k) + ue_excess[k]);
            per_gnb.set(s, k, ms.get(s, k) + gnb_excess[s]);
        }
    }
    let bits = |v: Vec<f64>| v.into_iter().map(f64::to_bits).collect::<Vec<_>>();
    let gnb_values = |m: &MeasurementSet| bits(difference_gnb_pairs(m).unwrap().iter().map(|d| d.value).collect());
    let ue_values = |m: &MeasurementSet| bits(difference_ue_pairs(m).unwrap().iter().map(|d| d.value).collect());
    assert_eq!(gnb_values(&ms), gnb_values(&per_ue));
    assert_eq!(ue_values(&ms), ue_values(&per_gnb));
}

#[test]
fn proposed_recovers_truth_under_common_bias() {
    let cfg = SolverConfig {
        proposed_threshold: 1e-9,
        ..SolverConfig::default()
    };
    for seed in 0..10 {
        let (sc, mut ms) = exact_case(seed);
        for r in ms.ranges.iter_mut() {
            *r += 9.0;
        }
        let nodes = sc.nodes();
        let init = initial_point(&ms, &nodes, &cfg, Method::Differencing).unwrap();
        let r = solve_proposed(&ms, &nodes, &cfg, init).unwrap();
        assert!(r.converged, "seed {seed}");
        assert!(r.error_to(sc.target) < 1e-3, "seed {seed}: {}", r.error_to(sc.target));
    }
}

#[test]
fn fusion_examples() {
    let cfg = SolverConfig::default();
    let base = LocalizationResult {
        estimate: Point2::ORIGIN,
        converged: true,
        iterations: 3,
        ue_weights: vec![0.5, 0.5],
        method: Method::Irls,
        trace: Vec::new(),
    };
    let star = LocalizationResult {
        estimate: Point2::new(2.0, 2.0),
        method: Method::Differencing,
        ..base.clone()
    };
    assert_eq!(fuse(&base, &star, &cfg).estimate, Point2::new(1.0, 1.0));
    let diverged = LocalizationResult {
        converged: false,
        ..base.clone()
    };
    assert_eq!(fuse(&diverged, &star, &cfg).estimate, star.estimate);
    let irls_only = SolverConfig {
        fusion_irls_weight: 1.0,
        fusion_proposed_weight: 0.0,
        ..cfg.clone()
    };
    assert_eq!(fuse(&base, &star, &irls_only).estimate, base.estimate);
    let both_bad = fuse(
        &diverged,
        &LocalizationResult {
            converged: false,
            ..star.clone()
        },
        &cfg,
    );
    assert!(!both_bad.converged);
    assert_eq!(both_bad.estimate, star.estimate);
    assert_eq!(both_bad.method, Method::Proposed);
}

#[test]
fn config_validation() {
    let bad = [
        SolverConfig {
            irls_step: 0.0,
            ..SolverConfig::default()
        },
        SolverConfig {
            fusion_irls_weight: 0.7,
            ..SolverConfig::default()
        },
        SolverConfig {
            max_iterations: 0,
            ..SolverConfig::default()
        },
        SolverConfig {
            initialization: Initialization::GridSearch {
                center: Point2::ORIGIN,
                side: 0.0,
                points: 4,
            },
            ..SolverConfig::default()
        },
    ];
    for c in bad {
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }
    SolverConfig::default().validate().unwrap();
}

#[test]
fn result_json_fields() {
    let r = LocalizationResult {
        estimate: Point2::new(1.5, -2.0),
        converged: true,
        iterations: 42,
        ue_weights: vec![0.25, 0.75],
        method: Method::Irls,
        trace: Vec::new(),
    };
    let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
    assert_eq!(v["estimate"]["x"], 1.5);
    assert_eq!(v["converged"], true);
    assert_eq!(v["iterations"], 42);
    assert_eq!(v["method"], "irls");
    assert_eq!(v["ue_weights"][1], 0.75);
    assert!(v.get("trace").is_none());
}

#[test]
fn grid_search_picks_nearby_start() {
    let (sc, ms) = exact_case(20);
    let nodes = sc.nodes();
    let cfg = SolverConfig::default();
    for m in [Method::Ls, Method::Differencing] {
        let p = initial_point(&ms, &nodes, &cfg, m).unwrap();
        // 20 points over 150 m leave at most half a diagonal cell to the truth
        assert!(p.distance(sc.target) <= 0.5 * (150.0 / 19.0) * 2f64.sqrt() + 1e-9);
    }
    let centroid = SolverConfig {
        initialization: Initialization::Centroid,
        ..cfg
    };
    assert_eq!(
        initial_point(&ms, &nodes, &centroid, Method::Ls).unwrap(),
        nodes.centroid()
    );
}
