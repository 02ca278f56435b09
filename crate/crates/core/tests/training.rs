mod common;

use proptest::prelude::*;
use rand::Rng;
use seqbound::prob::{rng_from_seed, sample_prior, Alphabet, JointDist, LabelPrior, PriorKind};
use seqbound::train::{
    ce_gradient, ce_loss, generate_dataset, train, Dataset, DatasetSpec, GroundTruthSpec, Init, InitSpec, ModelParams,
    StopReason, TrainConfig, TrainExperiment,
};

fn finite_difference(params: &ModelParams, config: &TrainConfig, i: usize, h: f64) -> f64 {
    let shifted = |d: f64| {
        let mut logits = params.logits().to_vec();
        logits[i] += d;
        let p = ModelParams::new(params.x_size(), params.c_size(), logits).unwrap();
        ce_loss(&p, config).unwrap()
    };
    (shifted(h) - shifted(-h)) / (2.0 * h)
}

fn random_setup(seed: u64) -> (ModelParams, TrainConfig) {
    let mut rng = rng_from_seed(seed);
    let c = rng.random_range(2..=3);
    let a = Alphabet::new(rng.random_range(c + 1..=6), c, rng.random_range(2..=4)).unwrap();
    let kind = common::random_kind(&mut rng);
    let truth = common::random_joint(a, kind, false, rng.random());
    let seqs = generate_dataset(&truth, 40, rng.random());
    let config = TrainConfig::new(truth.prior().clone(), Dataset::from_sequences(a.x_size(), &seqs).unwrap());
    (ModelParams::random(a.x_size(), c, rng.random(), 1.0), config)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn gradient_matches_finite_differences(seed in any::<u64>()) {
        let (params, config) = random_setup(seed);
        let g = ce_gradient(&params, &config).unwrap();
        for (i, &gi) in g.iter().enumerate() {
            let fd = finite_difference(&params, &config, i, 1e-5);
            prop_assert!((gi - fd).abs() <= 1e-5 * gi.abs().max(fd.abs()) + 1e-9, "{i}: {gi} vs {fd}");
        }
    }

    #[test]
    fn loss_is_shift_invariant_per_column(seed in any::<u64>(), shift in -3.0f64..3.0) {
        let (params, config) = random_setup(seed);
        let c_size = params.c_size();
        let shifted: Vec<f64> =
            params.logits().iter().enumerate().map(|(i, &v)| if i % c_size == 0 { v + shift } else { v }).collect();
        let p2 = ModelParams::new(params.x_size(), c_size, shifted).unwrap();
        prop_assert!((ce_loss(&params, &config).unwrap() - ce_loss(&p2, &config).unwrap()).abs() < 1e-12);
        // gradient columns sum to zero
        let g = ce_gradient(&params, &config).unwrap();
        for c in 0..c_size {
            let s: f64 = (0..params.x_size()).map(|x| g[x * c_size + c]).sum();
            prop_assert!(s.abs() < 1e-12);
        }
    }
}

fn small_truth() -> JointDist {
    let a = Alphabet::new(4, 2, 3).unwrap();
    let prior = LabelPrior::bigram(3, vec![0.9, 0.1], vec![vec![0.2, 0.8], vec![0.7, 0.3]]).unwrap();
    JointDist::structured(a, prior, common::random_cond(&a, 11)).unwrap()
}

#[test]
fn optimum_start_stays_flat() {
    let truth = small_truth();
    let data = Dataset::from_distribution(&truth.marginal_x().unwrap());
    let mut config = TrainConfig::new(truth.prior().clone(), data);
    config.eval_reference = Some(truth.clone());
    let init = ModelParams::from_conditional(truth.cond().unwrap());
    let (params, traj) = train(&config, Init::Params(init)).unwrap();
    assert_eq!(traj.stop, StopReason::GradientTolerance);
    let first = traj.points[0].loss;
    assert!(traj.points.iter().all(|p| (p.loss - first).abs() < 1e-8));
    assert_eq!(traj.points.last().unwrap().delta_bar, Some(0.0));
    let learned = params.conditional();
    for (r, s) in learned.rows().iter().zip(truth.cond().unwrap().rows()) {
        for (u, v) in r.iter().zip(&s) {
            assert!((u - v).abs() < 1e-12);
        }
    }
}

#[test]
fn population_training_recovers_the_truth() {
    let truth = small_truth();
    let data = Dataset::from_distribution(&truth.marginal_x().unwrap());
    let mut config = TrainConfig::new(truth.prior().clone(), data);
    config.eval_reference = Some(truth);
    config.step_size = 2.0;
    config.seed = 3;
    let (_, traj) = train(&config, Init::Random { scale: 1.0 }).unwrap();
    assert!(traj.is_monotone());
    let last = traj.points.last().unwrap();
    assert!(last.kl.unwrap() < 1e-8, "{last:?}");
    assert!(last.delta_bar.unwrap() < 1e-6, "{last:?}");
}

#[test]
fn dense_lm_training_is_monotone() {
    let a = Alphabet::new(3, 2, 2).unwrap();
    let prior = sample_prior(&a, PriorKind::Dense, 4).unwrap();
    let truth = JointDist::structured(a, prior.clone(), common::random_cond(&a, 5)).unwrap();
    let data = Dataset::from_sequences(3, &generate_dataset(&truth, 300, 1)).unwrap();
    let mut config = TrainConfig::new(prior, data);
    config.max_iters = 200;
    let (_, traj) = train(&config, Init::Random { scale: 1.0 }).unwrap();
    assert!(traj.is_monotone());
    assert!(traj.points.iter().all(|p| p.kl.is_none() && p.delta_bar.is_none()));
}

fn experiment(max_iters: usize) -> TrainExperiment {
    let truth = small_truth();
    TrainExperiment {
        ground_truth: GroundTruthSpec {
            alphabet: *truth.alphabet(),
            prior: truth.prior().clone(),
            cond: None,
            cond_seed: 11,
            cond_concentration: 1.0,
        },
        dataset: DatasetSpec::Sampled { size: 500, seed: 2 },
        init: InitSpec::Random { seed: 9, scale: 1.0 },
        step_size: 1.0,
        max_iters,
        smoothing_epsilon: 1e-12,
    }
}

#[test]
fn experiments_are_deterministic() {
    let (a, b) = (experiment(40).run().unwrap(), experiment(40).run().unwrap());
    assert_eq!(a.trajectory, b.trajectory);
    assert_eq!(a.params, b.params);
    assert_eq!(a.sequences, b.sequences);
    assert_eq!(a.trajectory.points.len(), 41);
    assert_eq!(a.trajectory.stop, StopReason::MaxIters);
}

#[test]
fn experiment_config_roundtrip() {
    let e = experiment(10);
    let text = serde_json::to_string(&e).unwrap();
    assert!(text.contains("\"kind\":\"sampled\""));
    let back: TrainExperiment = serde_json::from_str(&text).unwrap();
    assert_eq!(back, e);
    let minimal = r#"{
        "ground_truth": {"alphabet": {"x_size": 3, "c_size": 2, "seq_len": 2},
                         "prior": {"kind": "position_unigram", "tables": [[1.0, 0.0], [0.0, 1.0]]}},
        "dataset": {"kind": "population"},
        "init": {"kind": "ground_truth"},
        "step_size": 1.0
    }"#;
    let m: TrainExperiment = serde_json::from_str(minimal).unwrap();
    assert_eq!(m.max_iters, 5000);
    assert_eq!(m.smoothing_epsilon, 1e-12);
    let out = m.run().unwrap();
    assert_eq!(out.final_report.delta_bar, 0.0);
    assert!(out.sequences.is_none());
}

#[test]
fn trajectory_csv_schema() {
    let out = experiment(3).run().unwrap();
    let mut buf = Vec::new();
    out.trajectory.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("iter,loss,grad_inf_norm,kl,delta_bar"));
    assert_eq!(lines.count(), 4);
}
