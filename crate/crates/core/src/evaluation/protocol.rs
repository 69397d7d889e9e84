use std::ops::Range;

use super::metrics::{kendall_tau, pearson_rho, recall_at_k};
use super::records::{placement_index, EvaluationRecord};
use crate::attribution::{resolve_targets, Explainer, SaliencyMap, TargetPolicy};
use crate::data::LabeledWindow;
use crate::error::{Error, Result};
use crate::framing::{aoi_cells, frame_seed, pad_window, swap_features, FrameSpec, PaddedFrame, Placement, SwapSpec};
use crate::models::ScoreModel;
use crate::seed::derive_seed;

/// Settings shared by the consistency and robustness audits.
#[derive(Clone, Debug, PartialEq)]
pub struct AuditContext {
    pub dataset: String,
    pub master_seed: u64,
    pub frame: FrameSpec,
    /// Recall cut-off; the window length when `None`.
    pub k: Option<usize>,
    pub target: TargetPolicy,
    /// Windows explained together; cross-batch explainers see this many.
    pub batch_size: usize,
}

impl AuditContext {
    pub fn new(dataset: impl Into<String>, master_seed: u64) -> Self {
        Self {
            dataset: dataset.into(),
            master_seed,
            frame: FrameSpec::default(),
            k: None,
            target: TargetPolicy::Predicted,
            batch_size: 16,
        }
    }

    pub fn frame_for(&self, w: &LabeledWindow, p: Placement) -> Result<PaddedFrame> {
        pad_window(w, &self.frame, p, frame_seed(self.master_seed, &self.dataset, w.window_id, p))
    }

    fn explain_seed(&self, model: &str, explainer: &str, tag: &str, first_window: usize) -> u64 {
        derive_seed(
            self.master_seed,
            &format!("explain/{}/{model}/{explainer}/{tag}/{first_window}", self.dataset),
        )
    }

    fn recall(&self, map: &SaliencyMap, cells: &[(usize, usize)]) -> Result<f64> {
        let k = self.k.unwrap_or(cells.len());
        let idx: Vec<usize> = cells.iter().map(|&(n, t)| n * map.len + t).collect();
        recall_at_k(&map.values, &idx, k)
    }

    fn at(&self, model: &str, explainer: &str, windows: &[LabeledWindow], e: Error) -> Error {
        let window = match windows {
            [w] => w.window_id.to_string(),
            [first, .., last] => format!("{}..{}", first.window_id, last.window_id),
            [] => "-".into(),
        };
        Error::At {
            dataset: self.dataset.clone(),
            model: model.to_string(),
            explainer: explainer.to_string(),
            window,
            source: Box::new(e),
        }
    }
}

/// Consecutive ranges of at most `size` items, none of length one unless
/// `n == 1`.
pub(crate) fn batches(n: usize, size: usize) -> Vec<Range<usize>> {
    let size = size.max(2);
    let mut out: Vec<Range<usize>> = (0..n).step_by(size).map(|s| s..(s + size).min(n)).collect();
    if out.len() > 1 && out.last().is_some_and(|r| r.len() == 1) {
        let last = out.pop().expect("non-empty");
        out.last_mut().expect("non-empty").end = last.end;
    }
    out
}

/// Undefined correlations become `None`; anything else is an error.
fn defined(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::UndefinedCorrelation(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn explain_windows(
    model: &dyn ScoreModel,
    explainer: &dyn Explainer,
    frames: &[PaddedFrame],
    policy: TargetPolicy,
    seed: u64,
) -> Result<Vec<SaliencyMap>> {
    let targets = resolve_targets(model, frames, policy)?;
    explainer.explain(model, frames, &targets, seed)
}

/// Explains every window at each placement and compares the maps over the
/// window's own cells, pair by pair.
///
/// One record per window and placement pair (`top-middle`, `top-bottom`,
/// `middle-bottom` for all three placements). Each record carries the
/// recall of every evaluated placement for that window.
pub fn consistency_eval(
    model: &dyn ScoreModel,
    windows: &[LabeledWindow],
    explainer: &dyn Explainer,
    placements: &[Placement],
    ctx: &AuditContext,
) -> Result<Vec<EvaluationRecord>> {
    let mut placements = placements.to_vec();
    placements.sort();
    placements.dedup();
    if placements.len() < 2 {
        return Err(Error::config("consistency needs at least two placements"));
    }
    let (mname, ename) = (model.label(), explainer.name().to_string());
    let mut records = Vec::new();
    for range in batches(windows.len(), ctx.batch_size) {
        let chunk = &windows[range];
        let wrap = |e| ctx.at(&mname, &ename, chunk, e);
        let mut per_placement = Vec::with_capacity(placements.len());
        for &p in &placements {
            let frames = chunk.iter().map(|w| ctx.frame_for(w, p)).collect::<Result<Vec<_>>>().map_err(wrap)?;
            let seed = ctx.explain_seed(&mname, &ename, p.name(), chunk[0].window_id);
            let maps = explain_windows(model, explainer, &frames, ctx.target, seed).map_err(wrap)?;
            per_placement.push((p, frames, maps));
        }
        for (wi, w) in chunk.iter().enumerate() {
            let wrap = |e| ctx.at(&mname, &ename, std::slice::from_ref(w), e);
            let mut ranks = Vec::with_capacity(placements.len());
            let mut recall = [None; 3];
            for (p, frames, maps) in &per_placement {
                let cells = aoi_cells(&frames[wi]);
                ranks.push(maps[wi].ranking(&cells));
                recall[placement_index(*p)] = Some(ctx.recall(&maps[wi], &cells).map_err(wrap)?);
            }
            for i in 0..placements.len() {
                for j in i + 1..placements.len() {
                    records.push(EvaluationRecord {
                        dataset: ctx.dataset.clone(),
                        model: mname.clone(),
                        explainer: ename.clone(),
                        window_id: w.window_id,
                        comparison: format!("{}-{}", placements[i], placements[j]),
                        tau: defined(kendall_tau(&ranks[i], &ranks[j])).map_err(wrap)?,
                        rho: defined(pearson_rho(&ranks[i], &ranks[j])).map_err(wrap)?,
                        recall,
                    });
                }
            }
        }
    }
    Ok(records)
}

/// Compares explanations of a model trained on plain frames with those of
/// its twin trained on feature-swapped frames.
///
/// The window's cells in the plain map `S` are matched with the cells they
/// moved to in the swapped map `S*`. The recall column of `placement`
/// holds the recall of `S*` over those moved cells.
pub fn robustness_eval(
    plain: &dyn ScoreModel,
    swapped: &dyn ScoreModel,
    windows: &[LabeledWindow],
    swap: SwapSpec,
    explainer: &dyn Explainer,
    placement: Placement,
    ctx: &AuditContext,
) -> Result<Vec<EvaluationRecord>> {
    let (mname, ename) = (plain.label(), explainer.name().to_string());
    let (i, j) = swap.rows();
    let (i, j) = (i.min(j), i.max(j));
    let comparison = format!("swap-{i}-{j}@{placement}");
    let mut records = Vec::new();
    for range in batches(windows.len(), ctx.batch_size) {
        let chunk = &windows[range];
        let wrap = |e| ctx.at(&mname, &ename, chunk, e);
        let frames = chunk
            .iter()
            .map(|w| ctx.frame_for(w, placement))
            .collect::<Result<Vec<_>>>()
            .map_err(wrap)?;
        let moved = frames.iter().map(|f| swap_features(f, swap)).collect::<Result<Vec<_>>>().map_err(wrap)?;
        let first = chunk[0].window_id;
        let s = explain_windows(plain, explainer, &frames, ctx.target, ctx.explain_seed(&mname, &ename, &format!("{placement}/plain"), first))
            .map_err(wrap)?;
        let s_star = explain_windows(swapped, explainer, &moved, ctx.target, ctx.explain_seed(&mname, &ename, &format!("{placement}/swapped"), first))
            .map_err(wrap)?;
        for (k, w) in chunk.iter().enumerate() {
            let wrap = |e| ctx.at(&mname, &ename, std::slice::from_ref(w), e);
            let cells = aoi_cells(&frames[k]);
            let cells_star: Vec<(usize, usize)> = cells.iter().map(|&(n, t)| (swap.target(n), t)).collect();
            let a = s[k].ranking(&cells);
            let b = s_star[k].ranking(&cells_star);
            let mut recall = [None; 3];
            recall[placement_index(placement)] = Some(ctx.recall(&s_star[k], &cells_star).map_err(wrap)?);
            records.push(EvaluationRecord {
                dataset: ctx.dataset.clone(),
                model: mname.clone(),
                explainer: ename.clone(),
                window_id: w.window_id,
                comparison: comparison.clone(),
                tau: defined(kendall_tau(&a, &b)).map_err(wrap)?,
                rho: defined(pearson_rho(&a, &b)).map_err(wrap)?,
                recall,
            });
        }
    }
    Ok(records)
}
