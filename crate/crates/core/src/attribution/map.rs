use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::framing::{PaddedFrame, Placement};

/// Importance score for every cell of one explained frame, stored
/// feature-major like the frame itself.
#[derive(Clone, Debug, PartialEq)]
pub struct SaliencyMap {
    pub values: Vec<f64>,
    pub alpha: usize,
    pub len: usize,
    pub explainer: String,
    pub target: usize,
    pub frame_id: usize,
    pub placement: Placement,
    pub seed: u64,
}

impl SaliencyMap {
    pub fn new(values: Vec<f64>, frame: &PaddedFrame, explainer: &str, target: usize, seed: u64) -> Result<Self> {
        if values.len() != frame.data.len() {
            return Err(Error::dim(format!(
                "map has {} cells, frame has {}",
                values.len(),
                frame.data.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("{explainer} produced a non-finite attribution")));
        }
        Ok(Self {
            values,
            alpha: frame.alpha,
            len: frame.len,
            explainer: explainer.to_string(),
            target,
            frame_id: frame.source_window_id,
            placement: frame.placement,
            seed,
        })
    }

    pub fn at(&self, feature: usize, time: usize) -> f64 {
        self.values[feature * self.len + time]
    }

    pub fn row(&self, feature: usize) -> &[f64] {
        &self.values[feature * self.len..(feature + 1) * self.len]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.alpha, self.len)
    }

    /// Values at the given cells, in the given order.
    pub fn ranking(&self, cells: &[(usize, usize)]) -> Vec<f64> {
        cells.iter().map(|&(n, t)| self.at(n, t)).collect()
    }

    /// `#` metadata line, then one comma-separated row per feature with
    /// 17 significant digits, which round-trips every `f64` exactly.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "# explainer={} target={} frame={} placement={} seed={}\n",
            self.explainer, self.target, self.frame_id, self.placement, self.seed
        );
        for n in 0..self.alpha {
            for (t, v) in self.row(n).iter().enumerate() {
                if t > 0 {
                    s.push(',');
                }
                let _ = write!(s, "{v:.16e}");
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, head) = lines.next().ok_or_else(|| Error::parse(1, "empty map file"))?;
        let meta = head
            .strip_prefix('#')
            .ok_or_else(|| Error::parse(1, "missing metadata line"))?;
        let mut explainer = None;
        let (mut target, mut frame_id, mut seed) = (None, None, None);
        let mut placement = None;
        for tok in meta.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| Error::parse(1, format!("bad metadata token {tok:?}")))?;
            let bad = |_| Error::parse(1, format!("bad value for {k}"));
            match k {
                "explainer" => explainer = Some(v.to_string()),
                "target" => target = Some(v.parse().map_err(bad)?),
                "frame" => frame_id = Some(v.parse().map_err(bad)?),
                "seed" => seed = Some(v.parse().map_err(bad)?),
                "placement" => placement = Some(v.parse()?),
                _ => {}
            }
        }
        let mut values = Vec::new();
        let mut alpha = 0;
        let mut len = None;
        for (i, line) in lines {
            let row = line
                .split(',')
                .map(|f| f.trim().parse::<f64>().map_err(|_| Error::parse(i + 1, format!("non-numeric value {f:?}"))))
                .collect::<Result<Vec<_>>>()?;
            match len {
                None => len = Some(row.len()),
                Some(l) if l != row.len() => {
                    return Err(Error::parse(i + 1, format!("row has {} values, expected {l}", row.len())));
                }
                _ => {}
            }
            values.extend(row);
            alpha += 1;
        }
        let missing = |k: &str| Error::parse(1, format!("metadata lacks {k}"));
        Ok(Self {
            values,
            alpha,
            len: len.ok_or_else(|| Error::parse(2, "map has no rows"))?,
            explainer: explainer.ok_or_else(|| missing("explainer"))?,
            target: target.ok_or_else(|| missing("target"))?,
            frame_id: frame_id.ok_or_else(|| missing("frame"))?,
            placement: placement.unwrap_or(Placement::Middle),
            seed: seed.ok_or_else(|| missing("seed"))?,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    /// Coarse text heatmap, one line per feature, darker glyphs for larger
    /// magnitudes.
    pub fn heatmap(&self) -> String {
        const GLYPHS: &[char] = &[' ', '.', ':', '-', '=', '+', '*', '#', '%', '@'];
        let max = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut s = String::new();
        for n in 0..self.alpha {
            for &v in self.row(n) {
                let q = if max > 0.0 {
                    ((v.abs() / max) * (GLYPHS.len() - 1) as f64).round() as usize
                } else {
                    0
                };
                s.push(GLYPHS[q]);
            }
            s.push('\n');
        }
        s
    }
}
