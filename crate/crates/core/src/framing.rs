//! Padded frames that simulate overlapping sliding windows.
//!
//! A univariate window of length `d` is embedded in an `α × T` frame
//! (features × time, `T = ⌊β·d⌋`) at the top, middle, or bottom of the time
//! axis of one feature row. Every other cell is seeded N(0,1) noise. The
//! cells holding the real window form the *area of interest*.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rand_distr::{Distribution, StandardNormal};

use crate::autodiff::Tensor;
use crate::data::LabeledWindow;
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Placement {
    Top,
    Middle,
    Bottom,
}

impl Placement {
    pub const ALL: [Placement; 3] = [Placement::Top, Placement::Middle, Placement::Bottom];

    pub fn name(self) -> &'static str {
        match self {
            Placement::Top => "top",
            Placement::Middle => "middle",
            Placement::Bottom => "bottom",
        }
    }

    /// First time column of a length-`d` window inside `frame_len` columns.
    pub fn offset(self, frame_len: usize, d: usize) -> usize {
        match self {
            Placement::Top => 0,
            Placement::Middle => (frame_len - d) / 2,
            Placement::Bottom => frame_len - d,
        }
    }
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Placement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "top" => Ok(Placement::Top),
            "middle" => Ok(Placement::Middle),
            "bottom" => Ok(Placement::Bottom),
            other => Err(Error::config(format!("unknown placement {other:?}"))),
        }
    }
}

/// Exact rational time-axis expansion factor β.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExpansionRatio {
    num: u64,
    den: u64,
}

impl ExpansionRatio {
    /// β must lie strictly between 1 and 3.
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num <= den || num >= 3 * den {
            return Err(Error::config(format!(
                "expansion ratio {num}/{den} must satisfy 1 < β < 3"
            )));
        }
        Ok(Self { num, den })
    }

    /// Frame length `⌊β·d⌋`, computed exactly.
    pub fn frame_len(self, d: usize) -> usize {
        (self.num as u128 * d as u128 / self.den as u128) as usize
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl Default for ExpansionRatio {
    fn default() -> Self {
        Self { num: 5, den: 3 }
    }
}

impl fmt::Display for ExpansionRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for ExpansionRatio {
    type Err = Error;

    /// Accepts `"5/3"` or a finite decimal such as `"1.05"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::config(format!("cannot parse expansion ratio {s:?}"));
        if let Some((n, d)) = s.split_once('/') {
            let n = n.trim().parse().map_err(|_| bad())?;
            let d = d.trim().parse().map_err(|_| bad())?;
            return Self::new(n, d);
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if frac.len() > 12 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let den = 10u64.pow(frac.len() as u32);
        let int: u64 = int.parse().map_err(|_| bad())?;
        let frac: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        Self::new(int * den + frac, den)
    }
}

/// Frame geometry shared by every frame of an experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrameSpec {
    /// Number of feature rows α.
    pub alpha: usize,
    pub ratio: ExpansionRatio,
    /// Row that carries the real window.
    pub signal_feature: usize,
}

impl Default for FrameSpec {
    fn default() -> Self {
        Self {
            alpha: 4,
            ratio: ExpansionRatio::default(),
            signal_feature: 1,
        }
    }
}

impl FrameSpec {
    /// Checks the geometry for windows of length `d` and returns `T`.
    pub fn validate(&self, d: usize) -> Result<usize> {
        // Source windows are univariate, so α must exceed one feature.
        if self.alpha < 2 {
            return Err(Error::config(format!("alpha {} must exceed 1", self.alpha)));
        }
        if self.signal_feature >= self.alpha {
            return Err(Error::config(format!(
                "signal feature {} outside {} rows",
                self.signal_feature, self.alpha
            )));
        }
        let t = self.ratio.frame_len(d);
        if t < d + 2 {
            return Err(Error::config(format!(
                "β={} gives T={t} for d={d}: no room for distinct placements",
                self.ratio
            )));
        }
        Ok(t)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PaddedFrame {
    /// `alpha × len` values, row-major (feature-major).
    pub data: Vec<f64>,
    pub alpha: usize,
    /// Number of time columns `T`.
    pub len: usize,
    pub placement: Placement,
    pub signal_feature: usize,
    pub time_offset: usize,
    pub window_len: usize,
    pub noise_seed: u64,
    pub source_window_id: usize,
    pub label: usize,
}

impl PaddedFrame {
    pub fn at(&self, feature: usize, time: usize) -> f64 {
        self.data[feature * self.len + time]
    }

    pub fn row(&self, feature: usize) -> &[f64] {
        &self.data[feature * self.len..(feature + 1) * self.len]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.alpha, self.len)
    }

    pub fn to_tensor(&self) -> Tensor {
        Tensor::new(&[self.alpha, self.len], self.data.clone()).expect("frame shape is consistent")
    }

    /// Debug dump: one `#` metadata line, then one comma-delimited row per
    /// feature. Values use shortest round-trip formatting, so
    /// [`PaddedFrame::from_text`] restores the frame exactly.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "# placement={} signal_feature={} time_offset={} seed={} d={} window_id={} label={}\n",
            self.placement,
            self.signal_feature,
            self.time_offset,
            self.noise_seed,
            self.window_len,
            self.source_window_id,
            self.label
        );
        for n in 0..self.alpha {
            let row: Vec<String> = self.row(n).iter().map(|v| format!("{v}")).collect();
            let _ = writeln!(s, "{}", row.join(","));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty frame file"))?;
        if !header.starts_with('#') {
            return Err(Error::parse(1, "frame file must start with a # metadata line"));
        }
        let meta: std::collections::HashMap<&str, &str> = header
            .trim_start_matches('#')
            .split_whitespace()
            .filter_map(|t| t.split_once('='))
            .collect();
        let get = |k: &str| -> Result<&str> {
            meta.get(k)
                .copied()
                .ok_or_else(|| Error::parse(1, format!("missing metadata field {k}")))
        };
        let num = |k: &str| -> Result<u64> {
            get(k)?
                .parse()
                .map_err(|_| Error::parse(1, format!("bad metadata field {k}")))
        };
        let placement: Placement = get("placement")?.parse().map_err(|_| Error::parse(1, "bad placement"))?;
        let mut data = Vec::new();
        let mut len = None;
        let mut alpha = 0;
        for (i, line) in lines {
            let row = line
                .split(',')
                .map(|f| f.trim().parse::<f64>().map_err(|_| Error::parse(i + 1, format!("non-numeric field {f:?}"))))
                .collect::<Result<Vec<f64>>>()?;
            if *len.get_or_insert(row.len()) != row.len() {
                return Err(Error::parse(i + 1, "ragged frame row"));
            }
            data.extend(row);
            alpha += 1;
        }
        let len = len.ok_or_else(|| Error::parse(2, "frame has no rows"))?;
        let frame = PaddedFrame {
            data,
            alpha,
            len,
            placement,
            signal_feature: num("signal_feature")? as usize,
            time_offset: num("time_offset")? as usize,
            window_len: num("d")? as usize,
            noise_seed: num("seed")?,
            source_window_id: num("window_id")? as usize,
            label: num("label")? as usize,
        };
        if frame.signal_feature >= alpha || frame.time_offset + frame.window_len > len {
            return Err(Error::parse(1, "area of interest lies outside the frame"));
        }
        Ok(frame)
    }
}

/// Noise seed of a frame, fixed per (dataset, window, placement) so train-time
/// and explain-time frames coincide.
pub fn frame_seed(master: u64, dataset: &str, window_id: usize, placement: Placement) -> u64 {
    derive_seed(master, &format!("frame/{dataset}/{window_id}/{placement}"))
}

pub fn pad_window(window: &LabeledWindow, spec: &FrameSpec, placement: Placement, seed: u64) -> Result<PaddedFrame> {
    let d = window.len();
    let len = spec.validate(d)?;
    let alpha = spec.alpha;
    let mut rng = rng_from(seed);
    let mut data: Vec<f64> = (0..alpha * len).map(|_| StandardNormal.sample(&mut rng)).collect();
    let offset = placement.offset(len, d);
    let start = spec.signal_feature * len + offset;
    data[start..start + d].copy_from_slice(&window.values);
    Ok(PaddedFrame {
        data,
        alpha,
        len,
        placement,
        signal_feature: spec.signal_feature,
        time_offset: offset,
        window_len: d,
        noise_seed: seed,
        source_window_id: window.window_id,
        label: window.label,
    })
}

/// Exchange of two feature rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SwapSpec {
    i: usize,
    j: usize,
}

impl SwapSpec {
    pub fn new(i: usize, j: usize, alpha: usize) -> Result<Self> {
        if i == j {
            return Err(Error::config(format!("swap needs two distinct rows, got {i} and {j}")));
        }
        if i >= alpha || j >= alpha {
            return Err(Error::config(format!("swap rows ({i}, {j}) outside {alpha} rows")));
        }
        Ok(Self { i, j })
    }

    pub fn rows(self) -> (usize, usize) {
        (self.i, self.j)
    }

    /// Where row `n` ends up after the swap.
    pub fn target(self, n: usize) -> usize {
        if n == self.i {
            self.j
        } else if n == self.j {
            self.i
        } else {
            n
        }
    }
}

pub fn swap_features(frame: &PaddedFrame, swap: SwapSpec) -> Result<PaddedFrame> {
    let (i, j) = swap.rows();
    if i >= frame.alpha || j >= frame.alpha {
        return Err(Error::config(format!("swap rows ({i}, {j}) outside {} rows", frame.alpha)));
    }
    let mut out = frame.clone();
    let t = frame.len;
    out.data[i * t..(i + 1) * t].copy_from_slice(frame.row(j));
    out.data[j * t..(j + 1) * t].copy_from_slice(frame.row(i));
    out.signal_feature = swap.target(frame.signal_feature);
    Ok(out)
}

/// Area-of-interest cells `(feature, time)`, ordered by window timestamp, so
/// the k-th cell of any placement holds the window's k-th value.
pub fn aoi_cells(frame: &PaddedFrame) -> Vec<(usize, usize)> {
    (0..frame.window_len)
        .map(|k| (frame.signal_feature, frame.time_offset + k))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window(d: usize) -> LabeledWindow {
        LabeledWindow {
            values: (0..d).map(|k| k as f64 * 0.25 - 1.0).collect(),
            label: 1,
            window_id: 42,
        }
    }

    #[test]
    fn default_geometry_offsets() {
        let spec = FrameSpec::default();
        let w = window(24);
        let offsets: Vec<usize> = Placement::ALL
            .iter()
            .map(|&p| {
                let f = pad_window(&w, &spec, p, 1).unwrap();
                assert_eq!(f.len, 40);
                f.time_offset
            })
            .collect();
        assert_eq!(offsets, vec![0, 8, 16]);
    }

    #[test]
    fn degenerate_ratio_is_rejected() {
        let spec = FrameSpec {
            ratio: "1.05".parse().unwrap(),
            ..FrameSpec::default()
        };
        assert!(matches!(pad_window(&window(10), &spec, Placement::Top, 0), Err(Error::Config(_))));
        assert!("3".parse::<ExpansionRatio>().is_err());
        assert!("1".parse::<ExpansionRatio>().is_err());
        assert_eq!("1.5".parse::<ExpansionRatio>().unwrap().frame_len(10), 15);
    }

    #[test]
    fn window_is_embedded_exactly() {
        let spec = FrameSpec::default();
        let w = window(24);
        for p in Placement::ALL {
            let f = pad_window(&w, &spec, p, 3).unwrap();
            let got: Vec<f64> = aoi_cells(&f).iter().map(|&(n, t)| f.at(n, t)).collect();
            assert_eq!(got, w.values);
            assert_eq!(pad_window(&w, &spec, p, 3).unwrap(), f);
        }
    }

    #[test]
    fn swap_rules() {
        let spec = FrameSpec::default();
        let f = pad_window(&window(24), &spec, Placement::Middle, 5).unwrap();
        let s = SwapSpec::new(1, 3, 4).unwrap();
        let g = swap_features(&f, s).unwrap();
        assert_eq!(g.row(3), f.row(1));
        assert_eq!(g.signal_feature, 3);
        assert_eq!(aoi_cells(&g), (8..32).map(|t| (3, t)).collect::<Vec<_>>());
        assert_eq!(swap_features(&g, s).unwrap(), f);

        let noise_only = swap_features(&f, SwapSpec::new(0, 2, 4).unwrap()).unwrap();
        assert_eq!(aoi_cells(&noise_only), aoi_cells(&f));
        assert!(SwapSpec::new(2, 2, 4).is_err());
        assert!(SwapSpec::new(0, 4, 4).is_err());
    }

    #[test]
    fn text_dump_round_trips() {
        let f = pad_window(&window(24), &FrameSpec::default(), Placement::Bottom, 77).unwrap();
        assert_eq!(PaddedFrame::from_text(&f.to_text()).unwrap(), f);
    }
}
