use super::protocol::batches;
use super::*;
use crate::attribution::{FeaturePermutation, IntegratedGradients};
use crate::data::{synthesize, LabeledWindow, SyntheticSpec};
use crate::error::Error;
use crate::framing::{FrameSpec, Placement, SwapSpec};
use crate::models::{Arch, Classifier, ClassifierConfig, LinearScoreModel};

fn windows(n: usize) -> Vec<LabeledWindow> {
    let ds = synthesize(&SyntheticSpec {
        num_windows: n,
        length: 12,
        ..SyntheticSpec::default()
    })
    .unwrap();
    ds.train
}

fn model(arch: Arch, len: usize) -> Classifier {
    let mut cfg = ClassifierConfig::new(arch, 4, len, 2, 1);
    cfg.hidden_size = 8;
    Classifier::build(cfg).unwrap()
}

fn frame_len(d: usize) -> usize {
    FrameSpec::default().validate(d).unwrap()
}

#[test]
fn batch_ranges_avoid_singletons() {
    assert_eq!(batches(5, 2), vec![0..2, 2..5]);
    assert_eq!(batches(4, 2), vec![0..2, 2..4]);
    assert_eq!(batches(1, 16), vec![0..1]);
    assert_eq!(batches(17, 16), vec![0..17]);
    assert!(batches(0, 4).is_empty());
}

#[test]
fn oracle_is_perfectly_consistent() {
    let ws = windows(6);
    let len = frame_len(12);
    let ctx = AuditContext::new("synthetic", 5);
    for arch in Arch::ALL {
        let m = model(arch, len);
        for oracle in [OracleExplainer::default(), OracleExplainer { negate: true }] {
            let recs = consistency_eval(&m, &ws, &oracle, &Placement::ALL, &ctx).unwrap();
            assert_eq!(recs.len(), 6 * 3);
            assert_eq!(recs[0].comparison, "top-middle");
            assert_eq!(recs[2].comparison, "middle-bottom");
            for r in &recs {
                assert_eq!((r.tau, r.rho), (Some(1.0), Some(1.0)), "{arch} {r:?}");
                assert!(r.recall.iter().all(Option::is_some));
            }
        }
    }
}

#[test]
fn oracle_is_perfectly_robust_and_label_symmetric() {
    let ws = windows(5);
    let len = frame_len(12);
    let ctx = AuditContext::new("synthetic", 2);
    let (a, b) = (model(Arch::Recurrent, len), model(Arch::Attention, len));
    let recs = robustness_eval(&a, &b, &ws, SwapSpec::new(1, 3, 4).unwrap(), &OracleExplainer::default(), Placement::Middle, &ctx).unwrap();
    assert!(recs.iter().all(|r| r.tau == Some(1.0) && r.rho == Some(1.0)));
    assert_eq!(recs[0].comparison, "swap-1-3@middle");
    assert!(recs[0].recall[0].is_none() && recs[0].recall[1].is_some());

    let ig = IntegratedGradients::new(8).unwrap();
    let x = robustness_eval(&a, &b, &ws, SwapSpec::new(1, 3, 4).unwrap(), &ig, Placement::Middle, &ctx).unwrap();
    let y = robustness_eval(&a, &b, &ws, SwapSpec::new(3, 1, 4).unwrap(), &ig, Placement::Middle, &ctx).unwrap();
    assert_eq!(x, y);
}

#[test]
fn row_symmetric_twins_are_perfectly_robust() {
    let ws = windows(4);
    let len = frame_len(12);
    let mut w = vec![vec![0.0; 4 * len], vec![0.0; 4 * len]];
    for (c, wc) in w.iter_mut().enumerate() {
        for t in 0..len {
            let v = ((t * 7 + c * 3) % 11) as f64 / 5.0 - 1.0;
            wc[len + t] = v;
            wc[2 * len + t] = v;
            wc[t] = 0.3;
        }
    }
    let m = LinearScoreModel::new(4, len, &w, &[0.0, 0.0]).unwrap();
    let ctx = AuditContext::new("synthetic", 0);
    let ig = IntegratedGradients::new(4).unwrap();
    let recs = robustness_eval(&m, &m, &ws, SwapSpec::new(1, 2, 4).unwrap(), &ig, Placement::Middle, &ctx).unwrap();
    for r in recs {
        assert_eq!(r.tau, Some(1.0));
        assert!((r.rho.unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn noise_is_uncorrelated_on_average() {
    let ws = windows(60);
    let len = frame_len(12);
    let m = model(Arch::TemporalConv, len);
    let ctx = AuditContext::new("synthetic", 9);
    let recs = consistency_eval(&m, &ws, &NoiseExplainer, &Placement::ALL, &ctx).unwrap();
    let taus: Vec<f64> = recs.iter().filter_map(|r| r.tau).collect();
    let s = MetricSummary::of(&taus).unwrap();
    assert!(s.mean.abs() < 0.1, "{s:?}");
}

#[test]
fn errors_carry_coordinates() {
    let ws = windows(2)[..1].to_vec();
    let m = model(Arch::Recurrent, frame_len(12));
    let ctx = AuditContext::new("synthetic", 0);
    let fp = FeaturePermutation::new(2).unwrap();
    let err = consistency_eval(&m, &ws, &fp, &Placement::ALL, &ctx).unwrap_err();
    match &err {
        Error::At { dataset, model, explainer, .. } => {
            assert_eq!((dataset.as_str(), model.as_str(), explainer.as_str()), ("synthetic", "recurrent", "FP"));
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(err.root(), Error::Config(_)));
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn consistency_needs_two_placements() {
    let m = model(Arch::Recurrent, frame_len(12));
    let ctx = AuditContext::new("synthetic", 0);
    assert!(consistency_eval(&m, &windows(2), &NoiseExplainer, &[Placement::Top], &ctx).is_err());
}
