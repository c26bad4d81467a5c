use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use sever_core::attacks::{apply_attack, AttackSpec};
use sever_core::baselines::{baseline_scores, run_baseline, run_ransac, BaselineKind, RansacConfig, RansacSelection};
use sever_core::filter::{
    compute_scores_indexed, randomized_filter, top_p_count, top_p_filter, FilterConfig, FilterMode,
};
use sever_core::harness::generators::{gen_classification, gen_regression};
use sever_core::learners::{achieved_gamma, fit_ridge_closed_form, fit_subgradient};
use sever_core::linalg::{center_rows, mean_rows, norm, top_right_singular_vector, Matrix};
use sever_core::{
    run_sever, Dataset, Learner, LearnerConfig, LossKind, LossModel, RidgeLearner, SeverConfig, SubgradientLearner,
};

fn gauss_matrix(seed: u64, r: usize, c: usize) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<f64> = (0..r * c).map(|_| StandardNormal.sample(&mut rng)).collect();
    Matrix::from_vec(r, c, v).unwrap()
}

fn regression_data(seed: u64, n: usize, d: usize) -> Dataset {
    gen_regression(n, 1, d, 0.1, seed).unwrap().train
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn power_iteration_beats_random_directions(seed in any::<u64>(), r in 1usize..=10, c in 1usize..=10) {
        let m = gauss_matrix(seed, r, c);
        let sv = top_right_singular_vector(&m, 1e-8, 1000, seed).unwrap();
        let mv = norm(&m.mul_vec(&sv.vector));
        let slack = 1e-8 * m.frobenius_norm();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        for _ in 0..1000 {
            let u: Vec<f64> = (0..c).map(|_| StandardNormal.sample(&mut rng)).collect();
            let un = norm(&u);
            let u: Vec<f64> = u.iter().map(|v| v / un).collect();
            prop_assert!(mv >= norm(&m.mul_vec(&u)) - slack);
        }
    }

    #[test]
    fn singular_vector_ignores_positive_scaling(seed in any::<u64>(), r in 1usize..=10, c in 1usize..=10, k in 0.01f64..100.0) {
        let m = gauss_matrix(seed, r, c);
        let a = top_right_singular_vector(&m, 1e-10, 5000, 1).unwrap();
        let b = top_right_singular_vector(&m.scaled(k), 1e-10, 5000, 1).unwrap();
        // a near-tie between the top two singular values leaves the direction ill-defined
        prop_assume!(a.converged && b.converged);
        prop_assert!(dot(&a.vector, &b.vector).abs() > 1.0 - 1e-6);
    }

    #[test]
    fn centered_rows_have_zero_mean(seed in any::<u64>(), r in 1usize..=20, c in 1usize..=10) {
        let m = gauss_matrix(seed, r, c).scaled(50.0);
        let mu = mean_rows(&m).unwrap();
        let z = mean_rows(&center_rows(&m, &mu).unwrap()).unwrap();
        prop_assert!(z.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn hinge_gradient_vanishes_beyond_the_margin(seed in any::<u64>(), d in 1usize..=6) {
        let m = gauss_matrix(seed, 2, d);
        let (w, x) = (m.row(0), m.row(1));
        let t = dot(w, x);
        prop_assume!(t.abs() > 1.0);
        let y = t.signum();
        let data = Dataset::new(Matrix::from_rows(&[x]).unwrap(), vec![y]).unwrap();
        let g = LossModel::hinge(0.0).grad(w, data.sample(0)).unwrap();
        prop_assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn logistic_gradient_is_bounded(seed in any::<u64>(), d in 1usize..=6, scale in 0.1f64..1e3) {
        let m = gauss_matrix(seed, 2, d);
        let w: Vec<f64> = m.row(0).iter().map(|v| v * scale).collect();
        let x = m.row(1);
        for y in [-1.0, 1.0] {
            let data = Dataset::new(Matrix::from_rows(&[x]).unwrap(), vec![y]).unwrap();
            let g = LossModel::logistic(0.0).grad(&w, data.sample(0)).unwrap();
            prop_assert!(norm(&g) <= norm(x) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn squared_gradient_vanishes_on_exact_fit(seed in any::<u64>(), d in 1usize..=6) {
        let m = gauss_matrix(seed, 2, d);
        let (w, x) = (m.row(0), m.row(1));
        let data = Dataset::new(Matrix::from_rows(&[x]).unwrap(), vec![dot(w, x)]).unwrap();
        let g = LossModel::squared(0.0).grad(w, data.sample(0)).unwrap();
        prop_assert!(g.iter().all(|&v| v == 0.0));
        let off = Dataset::new(Matrix::from_rows(&[x]).unwrap(), vec![dot(w, x) + 1.0]).unwrap();
        prop_assert!(LossModel::squared(0.0).grad(w, off.sample(0)).unwrap().iter().any(|&v| v != 0.0));
    }

    #[test]
    fn ridge_is_permutation_invariant(seed in any::<u64>(), n in 5usize..60, d in 1usize..8, lambda in 1e-4f64..1.0) {
        let data = regression_data(seed, n, d);
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rand::seq::SliceRandom::shuffle(&mut order[..], &mut rng);
        let a = fit_ridge_closed_form(&data, lambda).unwrap();
        let b = fit_ridge_closed_form(&data.subset(&order), lambda).unwrap();
        for (u, v) in a.iter().zip(&b) {
            prop_assert!((u - v).abs() < 1e-8);
        }
    }

    #[test]
    fn learners_report_gamma_honestly(seed in any::<u64>(), kind in 0usize..3) {
        let (model, data, learner): (LossModel, Dataset, Box<dyn Learner>) = match kind {
            0 => (LossModel::squared(0.01), regression_data(seed, 80, 5), Box::new(RidgeLearner)),
            1 => (
                LossModel::hinge(1e-2),
                gen_classification(80, 1, 5, 0.1, seed).unwrap().train,
                Box::new(SubgradientLearner::new(LearnerConfig { max_epochs: 200, ..LearnerConfig::default() })),
            ),
            _ => (
                LossModel::logistic(1e-2),
                gen_classification(80, 1, 5, 0.1, seed).unwrap().train,
                Box::new(SubgradientLearner::new(LearnerConfig { max_epochs: 200, ..LearnerConfig::default() })),
            ),
        };
        let fit = learner.fit(&model, &data, None).unwrap();
        prop_assert!(achieved_gamma(&model, &data, &fit.w, learner.domain_radius()) <= fit.gamma + 1e-9);
    }

    #[test]
    fn filter_fixed_point_is_exact(seed in any::<u64>(), n in 2usize..40, sigma in 0.01f64..3.0) {
        let m = gauss_matrix(seed, n, 3);
        let report = compute_scores_indexed(&m, seed).unwrap();
        let cfg = FilterConfig { sigma, mode: FilterMode::Randomized, seed, ..FilterConfig::default() };
        let dec = randomized_filter(&report, &cfg).unwrap();
        let quiet = report.mean_score() <= cfg.threshold_mult * sigma * sigma;
        prop_assert_eq!(dec.removed.is_empty(), quiet);
    }

    #[test]
    fn filters_partition_their_input(seed in any::<u64>(), n in 1usize..50, p in 0.0f64..0.99) {
        let m = gauss_matrix(seed, n, 4).scaled(10.0);
        let ids: Vec<usize> = (0..n).map(|i| 3 * i + 7).collect();
        let report = sever_core::filter::compute_scores(&m, &ids, seed).unwrap();
        prop_assert!(report.scores.iter().all(|&s| s >= 0.0));
        prop_assert!((norm(&report.direction) - 1.0).abs() < 1e-6);
        let cfg = FilterConfig { sigma: 0.1, seed, ..FilterConfig::default() };
        for dec in [randomized_filter(&report, &cfg).unwrap(), top_p_filter(&report, p).unwrap()] {
            let mut all: Vec<usize> = dec.kept.iter().chain(&dec.removed).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(&all, &ids);
        }
        prop_assert_eq!(top_p_filter(&report, p).unwrap().removed.len(), top_p_count(p, n));
    }

    #[test]
    fn scores_scale_quadratically(seed in any::<u64>(), n in 2usize..40, c in 0.01f64..100.0) {
        let m = gauss_matrix(seed, n, 4);
        let a = compute_scores_indexed(&m, 5).unwrap();
        let b = compute_scores_indexed(&m.scaled(c), 5).unwrap();
        let sv = top_right_singular_vector(&m, 1e-10, 5000, 1).unwrap();
        prop_assume!(sv.converged);
        prop_assert!(dot(&a.direction, &b.direction).abs() > 1.0 - 1e-6);
        for (x, y) in a.scores.iter().zip(&b.scores) {
            prop_assert!((c * c * x - y).abs() <= 1e-8 * y.abs().max(c * c * a.scores.iter().cloned().fold(0.0, f64::max)));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn practical_sever_bookkeeping(seed in any::<u64>(), p in 0.01f64..0.2, r in 1usize..5, per_class in any::<bool>()) {
        let data = gen_classification(120, 1, 4, 0.1, seed).unwrap().train;
        let model = LossModel::logistic(1e-2);
        let learner = SubgradientLearner::new(LearnerConfig { max_epochs: 60, ..LearnerConfig::default() });
        let cfg = SeverConfig::practical(p, r).with_seed(seed).with_per_class(per_class);
        let out = run_sever(&model, &data, &learner, &cfg).unwrap();
        prop_assert_eq!(out.rounds_run, r);
        prop_assert_eq!(out.removed_per_round.len(), r);

        // independent count of ceil(p·active) per group per round
        let mut active: Vec<usize> = if per_class {
            let (pos, neg) = data.class_counts();
            vec![pos, neg]
        } else {
            vec![data.len()]
        };
        let mut seen = std::collections::HashSet::new();
        for removed in &out.removed_per_round {
            let expect: usize = active.iter().map(|&a| top_p_count(p, a)).sum();
            prop_assert_eq!(removed.len(), expect);
            for &i in removed {
                prop_assert!(seen.insert(i), "id {} removed twice", i);
            }
            if per_class {
                let pos = removed.iter().filter(|&&i| data.labels()[i] > 0.0).count();
                active[0] -= pos;
                active[1] -= removed.len() - pos;
            } else {
                active[0] -= removed.len();
            }
        }
        prop_assert_eq!(out.retained.iter().filter(|&&k| !k).count(), seen.len());
    }

    #[test]
    fn theoretical_sever_shrinks_and_certifies(seed in any::<u64>(), n in 20usize..80, sigma in 0.05f64..2.0) {
        let data = regression_data(seed, n, 3);
        let model = LossModel::squared(0.01);
        let cfg = SeverConfig::theoretical(sigma).with_seed(seed);
        let out = run_sever(&model, &data, &RidgeLearner, &cfg).unwrap();
        prop_assert!(out.rounds_run <= n);
        let mut active = n;
        for removed in &out.removed_per_round {
            prop_assert!(!removed.is_empty());
            active -= removed.len();
        }
        prop_assert_eq!(out.retained.iter().filter(|&&k| k).count(), active);
        prop_assert!(out.achieved_gamma <= LearnerConfig::default().gamma_target + 1e-6);
        let again = run_sever(&model, &data, &RidgeLearner, &cfg).unwrap();
        prop_assert_eq!(out.w, again.w);
        prop_assert_eq!(out.removed_per_round, again.removed_per_round);
    }

    #[test]
    fn baseline_scores_are_nonnegative_and_equivariant(seed in any::<u64>(), kind in 0usize..4) {
        let kind = [BaselineKind::L2, BaselineKind::Loss, BaselineKind::Gradient, BaselineKind::GradientCentered][kind];
        let data = regression_data(seed, 30, 4);
        let model = LossModel::squared(0.01);
        let w = fit_ridge_closed_form(&data, 0.01).unwrap();
        let ids: Vec<usize> = (0..30).collect();
        let a = baseline_scores(kind, &model, &w, &data, &ids).unwrap();
        prop_assert!(a.scores.iter().all(|&s| s >= 0.0));
        let rev: Vec<usize> = ids.iter().rev().copied().collect();
        let b = baseline_scores(kind, &model, &w, &data, &rev).unwrap();
        for (j, &i) in rev.iter().enumerate() {
            prop_assert!((b.scores[j] - a.scores[i]).abs() <= 1e-9 * a.scores[i].max(1.0));
        }
    }

    #[test]
    fn attacks_only_add(seed in any::<u64>(), eps in 0.01f64..0.3, flip in any::<bool>()) {
        let data = if flip {
            gen_classification(50, 1, 3, 0.1, seed).unwrap().train
        } else {
            regression_data(seed, 50, 3)
        };
        let spec = if flip { AttackSpec::label_flip(eps, None, seed) } else { AttackSpec::ridge(eps, 2.0, 1.0, seed) };
        let out = apply_attack(&data, &spec).unwrap();
        let k = (eps * 50.0).round() as usize;
        prop_assert_eq!(out.data.len(), 50 + k);
        prop_assert_eq!(out.outlier_count(), k);
        for i in 0..50 {
            prop_assert_eq!(out.data.features().row(i), data.features().row(i));
            prop_assert_eq!(out.data.labels()[i], data.labels()[i]);
            prop_assert!(!out.is_outlier[i]);
        }
    }
}

#[test]
fn subgradient_objective_never_increases() {
    let data = regression_data(3, 200, 5);
    let model = LossModel::squared(0.01);
    let max_row = data.features().row_iter().map(|r| dot(r, r)).fold(0.0, f64::max);
    let mut prev = f64::INFINITY;
    for epochs in 1..40 {
        let cfg = LearnerConfig {
            max_epochs: epochs,
            step_size: 1.0 / (2.0 * max_row),
            gamma_target: 1e-300,
            ..LearnerConfig::default()
        };
        let w = fit_subgradient(&model, &data, &cfg, None).unwrap().w;
        let obj = model.objective(&w, &data).unwrap();
        assert!(obj <= prev + 1e-12, "epoch {epochs}: {obj} > {prev}");
        prev = obj;
    }
}

#[test]
fn sever_recovers_from_the_ridge_attack() {
    let model = LossModel::squared(0.01);
    for seed in 0..5 {
        let s = gen_regression(1000, 1, 20, 0.1, seed).unwrap();
        let bad = apply_attack(&s.train, &AttackSpec::ridge(0.1, 1.0, 1.0, seed)).unwrap();
        let sever = run_sever(&model, &bad.data, &RidgeLearner, &SeverConfig::practical(0.05, 4)).unwrap();
        let plain = fit_ridge_closed_form(&bad.data, 0.01).unwrap();
        let err = |w: &[f64]| norm(&w.iter().zip(&s.w_star).map(|(a, b)| a - b).collect::<Vec<_>>());
        assert!(err(&sever.w) <= 0.5 * norm(&s.w_star), "seed {seed}: sever error {}", err(&sever.w));
        assert!(err(&plain) >= 0.9 * norm(&s.w_star), "seed {seed}: plain error {}", err(&plain));
    }
}

#[test]
fn no_defense_keeps_every_sample() {
    let data = regression_data(1, 40, 3);
    let out = run_baseline(
        BaselineKind::NoDefense,
        &LossModel::squared(0.01),
        &data,
        &RidgeLearner,
        &SeverConfig::practical(0.1, 3),
    )
    .unwrap();
    assert!(out.retained.iter().all(|&k| k));
    assert_eq!(out.learner_calls, 1);
    assert_eq!(out.w, fit_ridge_closed_form(&data, 0.01).unwrap());
}

#[test]
fn honest_ransac_ignores_the_test_set() {
    let s = gen_regression(100, 50, 4, 0.1, 2).unwrap();
    let other = gen_regression(100, 50, 4, 0.1, 99).unwrap();
    let model = LossModel::squared(0.01);
    let cfg = RansacConfig {
        selection: RansacSelection::MedianTrainLoss,
        num_rounds: 20,
        ..RansacConfig::for_dim(4)
    };
    let a = run_ransac(&model, &s.train, &RidgeLearner, &cfg, Some(&s.test)).unwrap();
    let b = run_ransac(&model, &s.train, &RidgeLearner, &cfg, Some(&other.test)).unwrap();
    let c = run_ransac(&model, &s.train, &RidgeLearner, &cfg, None).unwrap();
    assert_eq!(a.w, b.w);
    assert_eq!(a.w, c.w);
}

#[test]
fn hinge_kind_reports_classification() {
    assert!(LossKind::Hinge.is_classification());
    assert!(!LossKind::Squared.is_classification());
}
