use bayes_assess::data::{assign_groups, estimate_group_weights};
use bayes_assess::metrics::{ece_exact, ece_posterior, groupwise_ece_posterior, reliability_diagram};
use bayes_assess::rng::rng_from_seed;
use bayes_assess::{synth_pool, BetaPosterior, PartitionSpec, Pool, PredictionRecord, SynthSpec};

fn point_mass(theta: f64) -> BetaPosterior {
    BetaPosterior::new(1e9 * theta, 1e9 * (1.0 - theta)).unwrap()
}

fn two_class_pool(class0: &[f64], class1: &[f64]) -> Pool {
    let mut records = Vec::new();
    for &c in class0 {
        records.push(vec![c, 1.0 - c]);
    }
    for &c in class1 {
        records.push(vec![1.0 - c, c]);
    }
    Pool::new(
        records
            .into_iter()
            .enumerate()
            .map(|(i, scores)| PredictionRecord {
                id: format!("r{i}"),
                scores,
                label: None,
                attributes: Default::default(),
            })
            .collect(),
    )
    .unwrap()
}

const BINS: usize = 10;

#[test]
fn single_bin_class_reduces_to_one_term() {
    let pool = two_class_pool(&[0.75, 0.75, 0.75], &[0.95]);
    let idx = assign_groups(&pool, &PartitionSpec::ClassAndBin { num_bins: BINS }).unwrap();
    let mut posts = vec![BetaPosterior::uniform(); idx.num_groups()];
    let g = idx.class_bin_group(0, 7).unwrap();

    posts[g] = point_mass(0.6);
    let mut rng = rng_from_seed(3);
    let e = groupwise_ece_posterior(&idx, &posts, 0, 2000, &mut rng).unwrap();
    assert!((e.summary.mean - 0.15).abs() < 1e-4);

    // Non-degenerate bin: E|theta - 0.75| for theta ~ Beta(3, 2), by midpoint rule.
    let b = BetaPosterior::new(3.0, 2.0).unwrap();
    posts[g] = b;
    let n = 100_000;
    let exact: f64 = (0..n)
        .map(|i| {
            let x = (i as f64 + 0.5) / n as f64;
            (x - 0.75).abs() * b.ln_pdf(x).exp() / n as f64
        })
        .sum();
    let e = groupwise_ece_posterior(&idx, &posts, 0, 50_000, &mut rng).unwrap();
    assert!((e.summary.mean - exact).abs() < 0.005, "{} vs {exact}", e.summary.mean);
}

#[test]
fn point_masses_match_hand_classwise_sum() {
    let pool = two_class_pool(&[0.75, 0.75, 0.95, 0.55], &[0.65]);
    let idx = assign_groups(&pool, &PartitionSpec::ClassAndBin { num_bins: BINS }).unwrap();
    let mut posts = vec![BetaPosterior::uniform(); idx.num_groups()];
    for (bin, theta) in [(5, 0.7), (7, 0.6), (9, 0.9)] {
        posts[idx.class_bin_group(0, bin).unwrap()] = point_mass(theta);
    }
    // 0.5*|0.6-0.75| + 0.25*|0.9-0.95| + 0.25*|0.7-0.55|
    let mut rng = rng_from_seed(4);
    let e = groupwise_ece_posterior(&idx, &posts, 0, 2000, &mut rng).unwrap();
    assert!((e.summary.mean - 0.125).abs() < 1e-4);
    assert!(groupwise_ece_posterior(&idx, &posts, 2, 10, &mut rng).is_err());
}

#[test]
fn weighted_classwise_equals_marginal_when_bins_coincide() {
    // Class 0 lives in bins 7 and 9, class 1 in bins 5 and 6.
    let pool = two_class_pool(&[0.72, 0.78, 0.95], &[0.55, 0.52, 0.65, 0.61, 0.68]);
    let cb = assign_groups(&pool, &PartitionSpec::ClassAndBin { num_bins: BINS }).unwrap();
    let sb = assign_groups(&pool, &PartitionSpec::ScoreBin { num_bins: BINS }).unwrap();
    let theta = |bin: usize| 0.3 + 0.06 * bin as f64;

    let mut posts = vec![BetaPosterior::uniform(); cb.num_groups()];
    for k in 0..2 {
        for b in 0..BINS {
            posts[cb.class_bin_group(k, b).unwrap()] = point_mass(theta(b));
        }
    }
    let class_weight = estimate_group_weights(
        &assign_groups(&pool, &PartitionSpec::PredictedClass).unwrap(),
    )
    .unwrap();
    let mut rng = rng_from_seed(5);
    let classwise: f64 = (0..2)
        .map(|k| {
            class_weight[k] * groupwise_ece_posterior(&cb, &posts, k, 2000, &mut rng).unwrap().summary.mean
        })
        .sum();

    let conf: Vec<f64> = (0..BINS).map(|b| sb.mean_confidence(b).unwrap_or(0.0)).collect();
    let thetas: Vec<f64> = (0..BINS).map(theta).collect();
    let marginal = ece_exact(sb.weights(), &thetas, &conf).unwrap();
    assert!((classwise - marginal).abs() < 1e-4, "{classwise} vs {marginal}");
}

#[test]
fn overconfident_pool_sits_below_diagonal() {
    let mut spec = SynthSpec::new(SynthSpec::linear_profile(10, 0.5, 0.85), 5000, 21);
    spec.calibration_offset = 0.1;
    let pool = synth_pool(&spec).unwrap();
    let idx = assign_groups(&pool, &PartitionSpec::ScoreBin { num_bins: BINS }).unwrap();
    let posts: Vec<BetaPosterior> = (0..BINS)
        .map(|b| {
            let outcomes = idx.members(b).iter().map(|&i| pool.record(i).is_correct().unwrap());
            BetaPosterior::uniform().update_all(outcomes)
        })
        .collect();
    let mut rng = rng_from_seed(6);
    let d = reliability_diagram(&posts, idx.weights(), idx.mean_confidences(), 0.95, 2000, &mut rng)
        .unwrap();
    let mut populated = 0;
    for bin in &d.bins {
        if let Some(s) = bin.confidence {
            populated += 1;
            assert!(bin.accuracy.mean < s, "bin {} mean {} vs s {s}", bin.bin, bin.accuracy.mean);
        }
    }
    assert!(populated >= 4);
    assert!((d.ece.summary.mean - 0.1).abs() < 0.03);
}

#[test]
fn uniform_pool_weights_concentrate() {
    for seed in 0..20 {
        let pool = synth_pool(&SynthSpec::new(vec![0.8; 10], 1000, seed)).unwrap();
        let idx = assign_groups(&pool, &PartitionSpec::PredictedClass).unwrap();
        let w = estimate_group_weights(&idx).unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        // Binomial(1000, 0.1) has sd 0.0095; 0.05 is over five of them.
        assert!(w.iter().all(|p| (p - 0.1).abs() < 0.05), "seed {seed}: {w:?}");
    }
}

#[test]
fn ece_posterior_rejects_mismatched_lengths() {
    let mut rng = rng_from_seed(0);
    assert!(ece_posterior(&[BetaPosterior::uniform()], &[0.5, 0.5], &[0.5], 10, &mut rng).is_err());
}
