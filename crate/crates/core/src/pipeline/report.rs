//! Tables derived from evaluation records.
//!
//! Every number here is a plain function of the records CSV: correlation
//! cells are `mean±std` (population std) of the defined `tau`/`rho` values
//! of one (dataset, model, explainer) group, recall cells are means of the
//! non-empty `recall_*` fields.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::attribution::SaliencyMap;
use crate::error::{Error, Result};
use crate::evaluation::{EvaluationRecord, MetricSummary};
use crate::framing::Placement;

pub const MISSING: &str = "n/a";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ReportFormat {
    #[default]
    Csv,
    Md,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "md" => Ok(ReportFormat::Md),
            _ => Err(Error::config(format!("unknown report format {s:?}"))),
        }
    }
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Md => "md",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Study {
    Consistency,
    Robustness,
}

impl Study {
    pub fn name(self) -> &'static str {
        match self {
            Study::Consistency => "consistency",
            Study::Robustness => "robustness",
        }
    }

    fn selects(self, r: &EvaluationRecord) -> bool {
        r.is_robustness() == (self == Study::Robustness)
    }
}

pub type CellKey = (String, String, String);

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationCell {
    pub key: CellKey,
    pub records: usize,
    pub tau: Option<MetricSummary>,
    pub rho: Option<MetricSummary>,
}

impl CorrelationCell {
    pub fn tau_excluded(&self) -> usize {
        self.records - self.tau.map_or(0, |s| s.count)
    }

    pub fn rho_excluded(&self) -> usize {
        self.records - self.rho.map_or(0, |s| s.count)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecallCell {
    pub key: CellKey,
    /// Mean recall at top, middle, bottom.
    pub means: [Option<f64>; 3],
}

fn key(r: &EvaluationRecord) -> CellKey {
    (r.dataset.clone(), r.model.clone(), r.explainer.clone())
}

/// Records of one study grouped by cell, in order of first appearance.
fn groups(records: &[EvaluationRecord], study: Study) -> Vec<(CellKey, Vec<&EvaluationRecord>)> {
    let mut out: Vec<(CellKey, Vec<&EvaluationRecord>)> = Vec::new();
    for r in records.iter().filter(|r| study.selects(r)) {
        let k = key(r);
        match out.iter_mut().find(|(g, _)| *g == k) {
            Some((_, v)) => v.push(r),
            None => out.push((k, vec![r])),
        }
    }
    out
}

pub fn correlation_table(records: &[EvaluationRecord], study: Study) -> Vec<CorrelationCell> {
    groups(records, study)
        .into_iter()
        .map(|(key, rs)| {
            let taus: Vec<f64> = rs.iter().filter_map(|r| r.tau).collect();
            let rhos: Vec<f64> = rs.iter().filter_map(|r| r.rho).collect();
            CorrelationCell {
                key,
                records: rs.len(),
                tau: MetricSummary::of(&taus),
                rho: MetricSummary::of(&rhos),
            }
        })
        .collect()
}

pub fn recall_table(records: &[EvaluationRecord], study: Study) -> Vec<RecallCell> {
    groups(records, study)
        .into_iter()
        .map(|(key, rs)| {
            let mut means = [None; 3];
            for (i, p) in Placement::ALL.into_iter().enumerate() {
                let v: Vec<f64> = rs.iter().filter_map(|r| r.recall_at(p)).collect();
                means[i] = MetricSummary::of(&v).map(|s| s.mean);
            }
            RecallCell { key, means }
        })
        .collect()
}

fn cell(s: Option<MetricSummary>) -> String {
    s.map(|s| s.cell()).unwrap_or_else(|| MISSING.to_string())
}

fn mean_cell(v: Option<f64>) -> String {
    v.map(|m| format!("{m:.3}")).unwrap_or_else(|| MISSING.to_string())
}

pub fn render_correlation(cells: &[CorrelationCell], study: Study, format: ReportFormat) -> String {
    let mut s = String::new();
    match format {
        ReportFormat::Csv => {
            s.push_str("dataset,model,explainer,tau,rho,records,tau_excluded,rho_excluded\n");
            for c in cells {
                let (d, m, e) = &c.key;
                let _ = writeln!(
                    s,
                    "{d},{m},{e},{},{},{},{},{}",
                    cell(c.tau),
                    cell(c.rho),
                    c.records,
                    c.tau_excluded(),
                    c.rho_excluded()
                );
            }
        }
        ReportFormat::Md => {
            let _ = writeln!(s, "## {} ranking analysis\n", capitalize(study.name()));
            s.push_str("Cells are mean±std over windows and compared pairs; std is the population standard deviation. ");
            s.push_str("Saliency maps are oriented features × time.\n\n");
            s.push_str("| dataset | model | explainer | Kendall τ | Pearson ρ |\n|---|---|---|---|---|\n");
            let mut notes = Vec::new();
            for c in cells {
                let (d, m, e) = &c.key;
                let mut mark = String::new();
                if c.tau_excluded() + c.rho_excluded() > 0 {
                    notes.push(format!(
                        "{d}/{m}/{e}: undefined τ in {} and ρ in {} of {} records (constant rankings), excluded",
                        c.tau_excluded(),
                        c.rho_excluded(),
                        c.records
                    ));
                    mark = format!(" [{}]", notes.len());
                }
                let _ = writeln!(s, "| {d} | {m} | {e} | {}{mark} | {}{mark} |", cell(c.tau), cell(c.rho));
            }
            for (i, n) in notes.iter().enumerate() {
                let _ = writeln!(s, "\n[{}] {n}", i + 1);
            }
        }
    }
    s
}

pub fn render_recall(cells: &[RecallCell], study: Study, format: ReportFormat) -> String {
    let mut s = String::new();
    match format {
        ReportFormat::Csv => {
            s.push_str("dataset,model,explainer,top,middle,bottom\n");
            for c in cells {
                let (d, m, e) = &c.key;
                let [t, mi, b] = c.means.map(mean_cell);
                let _ = writeln!(s, "{d},{m},{e},{t},{mi},{b}");
            }
        }
        ReportFormat::Md => {
            let _ = writeln!(s, "## {} Recall@k\n", capitalize(study.name()));
            s.push_str("| dataset | model | explainer | Top | Middle | Bottom |\n|---|---|---|---|---|---|\n");
            for c in cells {
                let (d, m, e) = &c.key;
                let [t, mi, b] = c.means.map(mean_cell);
                let _ = writeln!(s, "| {d} | {m} | {e} | {t} | {mi} | {b} |");
            }
            if cells.iter().any(|c| c.means.iter().any(Option::is_none)) {
                let _ = writeln!(s, "\n{MISSING}: placement not evaluated in this study");
            }
        }
    }
    s
}

/// Absolute correlation values, one line per record, for distribution
/// plots.
pub fn coefficients_csv(records: &[EvaluationRecord]) -> String {
    let mut s = String::from("study,dataset,model,explainer,window_id,comparison,abs_tau,abs_rho\n");
    let abs = |v: Option<f64>| v.map(|x| format!("{}", x.abs())).unwrap_or_default();
    for r in records {
        let study = if r.is_robustness() { Study::Robustness } else { Study::Consistency };
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            study.name(),
            r.dataset,
            r.model,
            r.explainer,
            r.window_id,
            r.comparison,
            abs(r.tau),
            abs(r.rho)
        );
    }
    s
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
}

/// Writes the consistency, robustness and recall tables plus the
/// coefficient list into `dir`, returning the paths written.
pub fn write_tables(records: &[EvaluationRecord], dir: impl AsRef<Path>, format: ReportFormat) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let ext = format.extension();
    let mut files = Vec::new();
    for study in [Study::Consistency, Study::Robustness] {
        let corr = correlation_table(records, study);
        if corr.is_empty() {
            continue;
        }
        let recall = recall_table(records, study);
        for (name, body) in [
            (format!("{}_table.{ext}", study.name()), render_correlation(&corr, study, format)),
            (format!("{}_recall.{ext}", study.name()), render_recall(&recall, study, format)),
        ] {
            let p = dir.join(name);
            std::fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
            files.push(p);
        }
    }
    let p = dir.join("coefficients.csv");
    std::fs::write(&p, coefficients_csv(records)).map_err(|e| Error::io(&p, e))?;
    files.push(p);
    Ok(files)
}

/// Per-row sums and the total of a saliency map, recomputed from its file.
pub fn map_summary(map: &SaliencyMap) -> String {
    let mut s = format!(
        "explainer={} target={} frame={} placement={} shape={}x{}\n",
        map.explainer, map.target, map.frame_id, map.placement, map.alpha, map.len
    );
    let mut total = 0.0;
    for n in 0..map.alpha {
        let sum: f64 = map.row(n).iter().sum();
        total += sum;
        let _ = writeln!(s, "row {n}: sum={sum:.16e}");
    }
    let _ = writeln!(s, "total={total:.16e}");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(model: &str, comparison: &str, tau: Option<f64>, rho: Option<f64>) -> EvaluationRecord {
        EvaluationRecord {
            dataset: "d".into(),
            model: model.into(),
            explainer: "FP".into(),
            window_id: 0,
            comparison: comparison.into(),
            tau,
            rho,
            recall: [Some(0.5), Some(1.0), None],
        }
    }

    #[test]
    fn two_point_cell() {
        let rs = vec![rec("m", "top-middle", Some(0.0), Some(0.0)), rec("m", "top-bottom", Some(1.0), Some(1.0))];
        let t = correlation_table(&rs, Study::Consistency);
        let csv = render_correlation(&t, Study::Consistency, ReportFormat::Csv);
        assert!(csv.contains("d,m,FP,0.500±0.500,0.500±0.500,2,0,0"));
        assert!(correlation_table(&rs, Study::Robustness).is_empty());
    }

    #[test]
    fn undefined_cells_render_as_missing_with_a_note() {
        let rs = vec![rec("m", "top-middle", None, Some(0.25)), rec("m", "top-bottom", None, None)];
        let t = correlation_table(&rs, Study::Consistency);
        let md = render_correlation(&t, Study::Consistency, ReportFormat::Md);
        assert!(md.contains(&format!("| d | m | FP | {MISSING} [1] | 0.250±0.000 [1] |")), "{md}");
        assert!(md.contains("[1] d/m/FP: undefined τ in 2 and ρ in 1 of 2 records"));
    }

    #[test]
    fn recall_means_and_groups_keep_first_appearance_order() {
        let rs = vec![
            rec("b", "swap-1-2@middle", Some(1.0), Some(1.0)),
            rec("a", "swap-1-2@middle", Some(1.0), Some(1.0)),
        ];
        let t = recall_table(&rs, Study::Robustness);
        assert_eq!(t[0].key.1, "b");
        let csv = render_recall(&t, Study::Robustness, ReportFormat::Csv);
        assert!(csv.contains(&format!("d,b,FP,0.500,1.000,{MISSING}")));
    }
}
