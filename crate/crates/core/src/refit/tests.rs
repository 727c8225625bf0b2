use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::graph::complete_to_cpdag;
use crate::scoring::ols_rss;
use crate::sem::{random_joint_model, sample, InterventionSpec, JointModelConfig};

fn sequential(mut cfg: LassoConfig) -> LassoConfig {
    cfg.parallel = false;
    cfg
}

fn simulated(p: usize, n: usize, seed: u64) -> (Vec<SemModel>, MultiDataset, Dag) {
    let cfg = JointModelConfig {
        p,
        k: 2,
        core_edges: p as f64,
        extra_edges: 2,
        seed,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sim = random_joint_model(&cfg, &mut rng).unwrap();
    let xs = sim.models.iter().map(|m| sample(m, n, &mut rng)).collect();
    let data = MultiDataset::new(xs, None).unwrap();
    let union = crate::graph::union_graph(&sim.dags).unwrap();
    (sim.models, data, union)
}

#[test]
fn config_validation() {
    assert!(LassoConfig::default().validate().is_ok());
    assert!(LassoConfig::fixed(-1.0).validate().is_err());
    let mut cfg = LassoConfig::default();
    cfg.cv_folds = 1;
    assert!(cfg.validate().is_err());
    cfg = LassoConfig::default();
    cfg.lambda2 = PenaltyChoice::CrossValidated {
        grid_size: 0,
        min_ratio: 0.1,
    };
    assert!(matches!(cfg.validate(), Err(RefitError::GridEmpty)));
}

#[test]
fn empty_union_gives_zero_weights_and_column_variances() {
    let (_, data, _) = simulated(6, 200, 1);
    let fit = refit_classes(&data, &Dag::empty(6), &LassoConfig::default()).unwrap();
    for k in 0..2 {
        let m = &fit.per_class[k];
        assert!(m.weights().iter().all(|&w| w == 0.0));
        for j in 0..6 {
            let x = data.class_data(k).column(j);
            assert!((m.omega()[j] - x.norm_squared() / 200.0).abs() < 1e-12);
        }
    }
    assert_eq!(fit.total_edges(), 0);
}

#[test]
fn zero_penalty_matches_ols_rss() {
    let (_, data, union) = simulated(8, 150, 2);
    let fit = refit_classes(&data, &union, &LassoConfig::fixed(0.0)).unwrap();
    assert!(fit.lasso_converged);
    for k in 0..2 {
        for j in 0..8 {
            let pa: Vec<usize> = union.parents(j).iter().copied().collect();
            let rss = ols_rss(&data, k, j, &pa).unwrap();
            assert!((fit.per_class[k].omega()[j] - rss / 150.0).abs() < 1e-9);
        }
    }
}

#[test]
fn support_is_contained_in_union() {
    let (_, data, union) = simulated(10, 100, 3);
    for cfg in [LassoConfig::default(), LassoConfig::fixed(0.0), LassoConfig::fixed(0.2)] {
        let fit = refit_classes(&data, &union, &cfg).unwrap();
        for m in &fit.per_class {
            for (i, j) in m.dag().edges() {
                assert!(union.has_edge(i, j));
            }
            assert!(m.omega().iter().all(|&o| o > 0.0));
        }
    }
}

#[test]
fn parallel_and_sequential_refits_agree() {
    let (_, data, union) = simulated(10, 120, 4);
    for scope in [PenaltyScope::PerNode, PenaltyScope::Global] {
        let cfg = LassoConfig {
            scope,
            ..Default::default()
        };
        let a = refit_classes(&data, &union, &cfg).unwrap();
        let b = refit_classes(&data, &union, &sequential(cfg)).unwrap();
        assert_eq!(a.per_class, b.per_class);
        assert_eq!(a.chosen_penalty, b.chosen_penalty);
    }
}

#[test]
fn global_scope_uses_one_penalty() {
    let (_, data, union) = simulated(8, 150, 5);
    let cfg = LassoConfig {
        scope: PenaltyScope::Global,
        ..Default::default()
    };
    let fit = refit_classes(&data, &union, &cfg).unwrap();
    let used: BTreeSet<u64> = fit
        .chosen_penalty
        .iter()
        .flatten()
        .flatten()
        .map(|v| v.to_bits())
        .collect();
    assert_eq!(used.len(), 1);
}

#[test]
fn accurate_on_large_samples() {
    let (models, data, union) = simulated(10, 10_000, 6);
    let fit = refit_classes(&data, &union, &LassoConfig::default()).unwrap();
    for (k, truth) in models.iter().enumerate() {
        let err = (fit.per_class[k].weights() - truth.weights()).norm();
        assert!(err <= 0.1 * truth.weights().norm(), "class {k}: {err}");
    }
}

#[test]
fn absent_edge_is_shrunk_to_zero_above_threshold() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let with = SemModel::from_edges(2, [(0, 1, 0.9)], vec![1.0, 1.0]).unwrap();
    let without = SemModel::from_edges(2, [], vec![1.0, 1.0]).unwrap();
    let data = MultiDataset::new(
        vec![sample(&with, 2_000, &mut rng), sample(&without, 2_000, &mut rng)],
        None,
    )
    .unwrap();
    let x = data.class_data(1);
    let threshold = 2.0 * x.column(0).dot(&x.column(1)).abs() / 2_000.0;
    let union = Dag::new(2, [(0, 1)]).unwrap();
    let fit = refit_classes(&data, &union, &LassoConfig::fixed(threshold * 1.01)).unwrap();
    assert_eq!(fit.per_class[1].weights()[(0, 1)], 0.0);
    assert!(fit.per_class[0].weights()[(0, 1)] > 0.5);
}

#[test]
fn intervened_targets_have_no_parents() {
    let (_, data, union) = simulated(6, 200, 8);
    let target = (0..6).find(|&j| !union.parents(j).is_empty()).unwrap();
    let spec = InterventionSpec::new(vec![BTreeSet::new(), BTreeSet::from([target])], 6).unwrap();
    let classes = (0..2).map(|k| data.class_data(k).clone()).collect();
    let data = MultiDataset::new(classes, Some(spec)).unwrap();
    let fit = refit_classes(&data, &union, &LassoConfig::fixed(0.0)).unwrap();
    assert!(fit.per_class[1].weights().column(target).iter().all(|&w| w == 0.0));
    assert!(fit.per_class[0].weights().column(target).iter().any(|&w| w != 0.0));
    assert_eq!(fit.chosen_penalty[1][target], None);
}

#[test]
fn too_few_rows_for_folds() {
    let x = DMatrix::from_fn(5, 2, |r, c| (r + c * r) as f64);
    let data = MultiDataset::new(vec![x], None).unwrap();
    let union = Dag::new(2, [(0, 1)]).unwrap();
    assert!(matches!(
        refit_classes(&data, &union, &LassoConfig::default()),
        Err(RefitError::TooFewRows { n: 5, folds: 10 })
    ));
}

#[test]
fn standardized_fit_with_zero_penalty_is_unchanged() {
    let (_, data, union) = simulated(6, 300, 9);
    let plain = refit_classes(&data, &union, &LassoConfig::fixed(0.0)).unwrap();
    let mut cfg = LassoConfig::fixed(0.0);
    cfg.standardize = true;
    cfg.tol = 1e-11;
    let std = refit_classes(&data, &union, &cfg).unwrap();
    for k in 0..2 {
        assert!((plain.per_class[k].weights() - std.per_class[k].weights()).amax() < 1e-6);
    }
}

#[test]
fn sparsest_extension_single_member_matches_refit() {
    let union = Dag::new(3, [(0, 1), (2, 1)]).unwrap();
    let m = SemModel::from_edges(3, [(0, 1, 0.6), (2, 1, -0.4)], vec![1.0; 3]).unwrap();
    let data = MultiDataset::new(
        vec![sample(&m, 200, &mut ChaCha8Rng::seed_from_u64(10))],
        None,
    )
    .unwrap();
    let cpdag = complete_to_cpdag(&union);
    let cfg = LassoConfig::fixed(0.05);
    let a = sparsest_extension_refit(&data, &cpdag, &cfg, 10).unwrap();
    let b = refit_classes(&data, &union, &cfg).unwrap();
    assert_eq!(a.per_class, b.per_class);
    assert_eq!(a.union, union);
}

#[test]
fn sparsest_extension_prefers_matching_orientation() {
    // class 0: chain 0 -> 1 -> 2; class 1: 0 -> 1, 0 -> 2; the union is a
    // triangle whose class has six members. Members whose per-class refits
    // are Markov equivalent to the truth reach the minimum; every other
    // member needs strictly more edges.
    let a = SemModel::from_edges(3, [(0, 1, 0.8), (1, 2, 0.8)], vec![1.0; 3]).unwrap();
    let b = SemModel::from_edges(3, [(0, 1, -0.7), (0, 2, 0.9)], vec![1.0; 3]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let data = MultiDataset::new(
        vec![sample(&a, 20_000, &mut rng), sample(&b, 20_000, &mut rng)],
        None,
    )
    .unwrap();
    let truth = Dag::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
    let cpdag = complete_to_cpdag(&truth);
    let cfg = LassoConfig::fixed(0.05);
    let matches = |fit: &FitResult| {
        complete_to_cpdag(&fit.class_dag(0)) == complete_to_cpdag(a.dag())
            && complete_to_cpdag(&fit.class_dag(1)) == complete_to_cpdag(b.dag())
    };
    let mut matching = 0;
    for dag in enumerate_class(&cpdag, 100).dags {
        let fit = refit_classes(&data, &dag, &cfg).unwrap();
        if matches(&fit) {
            matching += 1;
            assert_eq!(fit.total_edges(), 4);
        } else {
            assert!(fit.total_edges() > 4, "{:?}", dag.edges().collect::<Vec<_>>());
        }
    }
    assert_eq!(matching, 2);
    let best = sparsest_extension_refit(&data, &cpdag, &cfg, 100).unwrap();
    assert_eq!(best.union, truth);
    assert!(matches(&best));
    assert_eq!(&best.class_dag(0), a.dag());
    assert_eq!(&best.class_dag(1), b.dag());
    assert!(matches!(
        sparsest_extension_refit(&data, &cpdag, &cfg, 1),
        Err(RefitError::ClassTooLarge { cap: 1 })
    ));
}

#[test]
fn joint_pipeline_runs_end_to_end() {
    let (_, data, _) = simulated(8, 400, 12);
    let scfg = ScoreConfig::from_scaling(2.0, 8, data.n());
    let fit = joint_ges(
        &data,
        &scfg,
        &SearchConfig::default(),
        &LassoConfig::default(),
        ExtensionChoice::Canonical,
    )
    .unwrap();
    assert!(fit.union_cpdag.as_ref().unwrap().is_cpdag());
    assert!(fit.search_score.is_some());
    assert_eq!(fit.trace.len(), fit.summary().trace_len);
    for m in &fit.per_class {
        for (i, j) in m.dag().edges() {
            assert!(fit.union.has_edge(i, j));
        }
    }
    let json = serde_json::to_string(&fit.summary()).unwrap();
    let back: FitSummary = serde_json::from_str(&json).unwrap();
    assert_eq!(back, fit.summary());

    let sparsest = joint_ges(
        &data,
        &scfg,
        &SearchConfig::default(),
        &LassoConfig::default(),
        ExtensionChoice::Sparsest { cap: 1000 },
    )
    .unwrap();
    assert!(sparsest.total_edges() <= fit.total_edges());
}

#[test]
fn lasso_config_json() {
    let cfg: LassoConfig =
        serde_json::from_str(r#"{"lambda2": {"mode": "fixed", "value": 0.1}, "cv_folds": 5}"#).unwrap();
    assert_eq!(cfg.lambda2, PenaltyChoice::Fixed { value: 0.1 });
    assert_eq!(cfg.cv_folds, 5);
    assert!(serde_json::from_str::<LassoConfig>(r#"{"folds": 5}"#).is_err());
}
