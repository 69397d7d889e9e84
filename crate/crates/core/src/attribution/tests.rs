use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::framing::{swap_features, Placement, SwapSpec};
use crate::models::{Arch, Classifier, ClassifierConfig, LinearScoreModel};

const A: usize = 3;
const T: usize = 6;

fn frame(values: Vec<f64>, id: usize) -> PaddedFrame {
    PaddedFrame {
        data: values,
        alpha: A,
        len: T,
        placement: Placement::Middle,
        signal_feature: 1,
        time_offset: 1,
        window_len: 4,
        noise_seed: 0,
        source_window_id: id,
        label: 0,
    }
}

fn random_frame(rng: &mut ChaCha8Rng, id: usize) -> PaddedFrame {
    frame((0..A * T).map(|_| rng.random_range(-2.0..2.0)).collect(), id)
}

fn linear(rng: &mut ChaCha8Rng) -> (LinearScoreModel, Vec<Vec<f64>>) {
    let w: Vec<Vec<f64>> = (0..2)
        .map(|_| (0..A * T).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    (LinearScoreModel::new(A, T, &w, &[0.3, -0.2]).unwrap(), w)
}

fn small_net(arch: Arch) -> Classifier {
    let mut cfg = ClassifierConfig::new(arch, A, T, 2, 11);
    cfg.hidden_size = 8;
    Classifier::build(cfg).unwrap()
}

fn score(model: &dyn ScoreModel, x: &[f64], target: usize) -> f64 {
    batch_logits(model, &[x]).unwrap()[0][target]
}

#[test]
fn ig_on_linear_model_is_weight_times_displacement() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (m, w) = linear(&mut rng);
    let f = random_frame(&mut rng, 0);
    let b: Vec<f64> = (0..A * T).map(|_| rng.random_range(-1.0..1.0)).collect();
    for (ig, base) in [
        (IntegratedGradients::new(50).unwrap(), vec![0.0; A * T]),
        (IntegratedGradients::new(7).unwrap().with_baseline(b.clone()), b.clone()),
    ] {
        let map = &ig.explain(&m, std::slice::from_ref(&f), &[1], 0).unwrap()[0];
        for c in 0..A * T {
            assert!((map.values[c] - w[1][c] * (f.data[c] - base[c])).abs() < 1e-12);
        }
    }
}

#[test]
fn ig_at_baseline_is_zero() {
    let m = small_net(Arch::Recurrent);
    let f = frame(vec![0.0; A * T], 0);
    let map = &IntegratedGradients::new(10).unwrap().explain(&m, &[f], &[0], 0).unwrap()[0];
    assert!(map.values.iter().all(|&v| v == 0.0));
}

#[test]
fn ig_completeness_gap_shrinks_with_steps() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for arch in Arch::ALL {
        let m = small_net(arch);
        let f = random_frame(&mut rng, 0);
        let target = 1;
        let delta = score(&m, &f.data, target) - score(&m, &[0.0; A * T], target);
        let gap = |k: usize| {
            let map = &IntegratedGradients::new(k).unwrap().explain(&m, std::slice::from_ref(&f), &[target], 0).unwrap()[0];
            (map.values.iter().sum::<f64>() - delta).abs()
        };
        let (g8, g64, g512) = (gap(8), gap(64), gap(512));
        if g8 < 1e-12 {
            // Piecewise-linear path without kinks: the sum is already exact.
            continue;
        }
        assert!(g8 > g64 && g64 > g512, "{arch}: {g8} {g64} {g512}");
    }
}

#[test]
fn ig_rejects_too_few_steps() {
    assert!(matches!(IntegratedGradients::new(1), Err(Error::Config(_))));
    let cfg = AttributionConfig { ig_steps: 1, ..Default::default() };
    assert!(cfg.explainer(ExplainerKind::IG, &[]).is_err());
}

#[test]
fn fa_on_linear_model_is_weight_times_input() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (m, mut w) = linear(&mut rng);
    w[0][5] = 0.0;
    let m0 = LinearScoreModel::new(A, T, &w, &[0.0, 0.0]).unwrap();
    let f = random_frame(&mut rng, 0);
    let fa = FeatureAblation::default();
    let map = &fa.explain(&m, std::slice::from_ref(&f), &[0], 0).unwrap()[0];
    let map0 = &fa.explain(&m0, std::slice::from_ref(&f), &[0], 0).unwrap()[0];
    for c in 0..A * T {
        assert!((map0.values[c] - w[0][c] * f.data[c]).abs() < 1e-12);
    }
    assert_eq!(map0.values[5], 0.0);
    assert_eq!(map.values.len(), A * T);
}

#[test]
fn fa_rows_sum_to_row_ablation_drop() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m = small_net(Arch::Attention);
    let f = random_frame(&mut rng, 0);
    let fa = FeatureAblation {
        granularity: Granularity::PerFeatureRow,
        ..Default::default()
    };
    let map = &fa.explain(&m, std::slice::from_ref(&f), &[1], 0).unwrap()[0];
    let full = score(&m, &f.data, 1);
    for n in 0..A {
        let mut x = f.data.clone();
        x[n * T..(n + 1) * T].iter_mut().for_each(|v| *v = 0.0);
        let drop = full - score(&m, &x, 1);
        let sum: f64 = map.row(n).iter().sum();
        assert!((sum - drop).abs() < 1e-12, "row {n}: {sum} vs {drop}");
    }
}

#[test]
fn fa_noise_baseline_is_seeded() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let m = small_net(Arch::TemporalConv);
    let f = random_frame(&mut rng, 0);
    let fa = FeatureAblation {
        baseline: FaBaseline::NoiseResample,
        ..Default::default()
    };
    let a = fa.explain(&m, std::slice::from_ref(&f), &[0], 9).unwrap();
    let b = fa.explain(&m, std::slice::from_ref(&f), &[0], 9).unwrap();
    let c = fa.explain(&m, &[f], &[0], 10).unwrap();
    assert_eq!(a, b);
    assert_ne!(a[0].values, c[0].values);
}

#[test]
fn fp_needs_a_batch() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (m, _) = linear(&mut rng);
    let fp = FeaturePermutation::new(3).unwrap();
    let err = fp.explain(&m, &[random_frame(&mut rng, 0)], &[0], 0).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
}

#[test]
fn fp_of_identical_frames_is_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let m = small_net(Arch::Recurrent);
    let f = random_frame(&mut rng, 0);
    let frames = vec![f.clone(), f.clone(), f];
    let maps = FeaturePermutation::new(2).unwrap().explain(&m, &frames, &[0, 0, 0], 1).unwrap();
    assert!(maps.iter().all(|m| m.values.iter().all(|&v| v == 0.0)));
}

#[test]
fn fp_ignores_unused_cells() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (_, mut w) = linear(&mut rng);
    w[1][4] = 0.0;
    let m = LinearScoreModel::new(A, T, &w, &[0.0, 0.0]).unwrap();
    let frames: Vec<_> = (0..5).map(|i| random_frame(&mut rng, i)).collect();
    let maps = FeaturePermutation::new(4).unwrap().explain(&m, &frames, &[1; 5], 2).unwrap();
    for map in &maps {
        assert!(map.values[4].abs() < 1e-12);
    }
}

#[test]
fn fp_converges_to_linear_expectation() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (m, w) = linear(&mut rng);
    let b = 8;
    let frames: Vec<_> = (0..b).map(|i| random_frame(&mut rng, i)).collect();
    let maps = FeaturePermutation::new(1000).unwrap().explain(&m, &frames, &[0; 8], 3).unwrap();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for c in 0..A * T {
        let mean = frames.iter().map(|f| f.data[c]).sum::<f64>() / b as f64;
        for (f, map) in frames.iter().zip(&maps) {
            let expected = w[0][c] * (f.data[c] - mean);
            worst = worst.max((map.values[c] - expected).abs());
            scale = scale.max(expected.abs());
        }
    }
    assert!(worst < 0.05 * scale, "max deviation {worst} vs scale {scale}");
}

#[test]
fn explainers_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let m = small_net(Arch::Attention);
    let frames: Vec<_> = (0..3).map(|i| random_frame(&mut rng, i)).collect();
    let cfg = AttributionConfig { fp_repetitions: 2, ig_steps: 8, ..Default::default() };
    for kind in ExplainerKind::ALL {
        let e = cfg.explainer(kind, &frames).unwrap();
        let targets = resolve_targets(&m, &frames, cfg.target).unwrap();
        assert_eq!(e.explain(&m, &frames, &targets, 5).unwrap(), e.explain(&m, &frames, &targets, 5).unwrap());
    }
}

#[test]
fn swapping_rows_of_a_row_symmetric_model_swaps_map_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (_, mut w) = linear(&mut rng);
    for c in &mut w {
        for t in 0..T {
            c[2 * T + t] = c[T + t];
        }
    }
    let m = LinearScoreModel::new(A, T, &w, &[0.0, 0.1]).unwrap();
    let f = random_frame(&mut rng, 0);
    let swap = SwapSpec::new(1, 2, A).unwrap();
    let g = swap_features(&f, swap).unwrap();
    let explainers: Vec<Box<dyn Explainer>> = vec![
        Box::new(IntegratedGradients::new(16).unwrap()),
        Box::new(FeatureAblation::default()),
    ];
    for e in explainers {
        let s = &e.explain(&m, std::slice::from_ref(&f), &[1], 0).unwrap()[0];
        let s_star = &e.explain(&m, std::slice::from_ref(&g), &[1], 0).unwrap()[0];
        // Equal up to the order in which the dot products are summed.
        for n in 0..A {
            for (x, y) in s.row(n).iter().zip(s_star.row(swap.target(n))) {
                assert!((x - y).abs() < 1e-12, "{}", e.name());
            }
        }
    }
}

#[test]
fn map_text_round_trips_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let f = random_frame(&mut rng, 42);
    let values: Vec<f64> = (0..A * T).map(|_| rng.random_range(-1e3..1e3) / 7.0).collect();
    let map = SaliencyMap::new(values, &f, "FA", 1, 99).unwrap();
    let back = SaliencyMap::from_text(&map.to_text()).unwrap();
    assert_eq!(back, map);
    assert_eq!(back.to_text(), map.to_text());
}

#[test]
fn map_rejects_non_finite_values() {
    let f = frame(vec![0.0; A * T], 0);
    let mut v = vec![0.0; A * T];
    v[3] = f64::NAN;
    assert!(matches!(SaliencyMap::new(v, &f, "IG", 0, 0), Err(Error::Numeric(_))));
}

#[test]
fn keywords_round_trip() {
    for s in ["zeros", "dataset-mean"] {
        assert_eq!(s.parse::<IgBaseline>().unwrap().to_string(), s);
    }
    for s in ["per_cell", "per_feature_row"] {
        assert_eq!(s.parse::<Granularity>().unwrap().to_string(), s);
    }
    assert_eq!("ig".parse::<ExplainerKind>().unwrap(), ExplainerKind::IG);
    assert!("shap".parse::<ExplainerKind>().is_err());
}

#[test]
fn label_targets_follow_frames() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let (m, _) = linear(&mut rng);
    let mut f = random_frame(&mut rng, 0);
    f.label = 1;
    assert_eq!(resolve_targets(&m, &[f], TargetPolicy::Label).unwrap(), vec![1]);
}
