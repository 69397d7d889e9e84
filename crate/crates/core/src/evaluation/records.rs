use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::framing::Placement;

pub const RECORD_HEADER: [&str; 10] = [
    "dataset",
    "model",
    "explainer",
    "window_id",
    "comparison",
    "tau",
    "rho",
    "recall_top",
    "recall_middle",
    "recall_bottom",
];

/// One compared pair of saliency maps for one window.
///
/// Missing values (an undefined correlation, or a recall for a placement the
/// comparison does not involve) are `None` and written as empty fields.
#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationRecord {
    pub dataset: String,
    pub model: String,
    pub explainer: String,
    pub window_id: usize,
    pub comparison: String,
    pub tau: Option<f64>,
    pub rho: Option<f64>,
    /// Indexed top, middle, bottom.
    pub recall: [Option<f64>; 3],
}

impl EvaluationRecord {
    pub fn recall_at(&self, p: Placement) -> Option<f64> {
        self.recall[placement_index(p)]
    }

    pub fn is_robustness(&self) -> bool {
        self.comparison.starts_with("swap-")
    }
}

pub(crate) fn placement_index(p: Placement) -> usize {
    match p {
        Placement::Top => 0,
        Placement::Middle => 1,
        Placement::Bottom => 2,
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

pub fn write_records<W: Write>(out: W, records: &[EvaluationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let fail = |e: csv::Error| Error::Contract(format!("writing records: {e}"));
    w.write_record(RECORD_HEADER).map_err(fail)?;
    for r in records {
        w.write_record([
            r.dataset.clone(),
            r.model.clone(),
            r.explainer.clone(),
            r.window_id.to_string(),
            r.comparison.clone(),
            opt(r.tau),
            opt(r.rho),
            opt(r.recall[0]),
            opt(r.recall[1]),
            opt(r.recall[2]),
        ])
        .map_err(fail)?;
    }
    w.flush().map_err(|e| Error::Contract(format!("writing records: {e}")))
}

pub fn save_records(path: impl AsRef<Path>, records: &[EvaluationRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_records(std::io::BufWriter::new(file), records)
}

/// Parses a records CSV; errors carry the 1-based line number.
pub fn read_records<R: Read>(input: R) -> Result<Vec<EvaluationRecord>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rd.headers().map_err(|e| Error::parse(1, e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != RECORD_HEADER {
        return Err(Error::parse(1, format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut out = Vec::new();
    for (i, row) in rd.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::parse(line, e.to_string()))?;
        if row.len() != RECORD_HEADER.len() {
            return Err(Error::parse(line, format!("{} fields, expected {}", row.len(), RECORD_HEADER.len())));
        }
        let num = |k: usize| -> Result<Option<f64>> {
            let f = row[k].trim();
            if f.is_empty() {
                return Ok(None);
            }
            let v: f64 = f
                .parse()
                .map_err(|_| Error::parse(line, format!("{} is not a number: {f:?}", RECORD_HEADER[k])))?;
            let bounds = if k < 7 { -1.0..=1.0 } else { 0.0..=1.0 };
            if !bounds.contains(&v) {
                return Err(Error::parse(line, format!("{} = {v} out of range", RECORD_HEADER[k])));
            }
            Ok(Some(v))
        };
        out.push(EvaluationRecord {
            dataset: row[0].to_string(),
            model: row[1].to_string(),
            explainer: row[2].to_string(),
            window_id: row[3]
                .trim()
                .parse()
                .map_err(|_| Error::parse(line, format!("bad window_id {:?}", &row[3])))?,
            comparison: row[4].to_string(),
            tau: num(5)?,
            rho: num(6)?,
            recall: [num(7)?, num(8)?, num(9)?],
        });
    }
    Ok(out)
}

pub fn load_records(path: impl AsRef<Path>) -> Result<Vec<EvaluationRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_records(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(tau: Option<f64>) -> EvaluationRecord {
        EvaluationRecord {
            dataset: "synthetic".into(),
            model: "recurrent".into(),
            explainer: "IG".into(),
            window_id: 3,
            comparison: "top-middle".into(),
            tau,
            rho: Some(0.1 + 0.2),
            recall: [Some(0.25), None, Some(1.0 / 3.0)],
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let rs = vec![rec(Some(-0.123456789012345)), rec(None)];
        let mut buf = Vec::new();
        write_records(&mut buf, &rs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("dataset,model,explainer,window_id,comparison,tau,rho,recall_top,recall_middle,recall_bottom\n"));
        assert!(text.contains(",top-middle,,0.30000000000000004,0.25,,"));
        assert_eq!(read_records(buf.as_slice()).unwrap(), rs);
    }

    #[test]
    fn malformed_rows_report_their_line() {
        let text = format!("{}\nd,m,IG,0,top-middle,0.5,0.5,,,\nd,m,IG,1,top-middle,abc,0.5,,,\n", RECORD_HEADER.join(","));
        match read_records(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let text = format!("{}\nd,m,IG,0,top-middle,1.5,0.5,,,\n", RECORD_HEADER.join(","));
        assert!(read_records(text.as_bytes()).is_err());
        assert!(read_records("a,b\n".as_bytes()).is_err());
    }
}
