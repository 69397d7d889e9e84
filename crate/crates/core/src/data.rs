//! UCR-style univariate classification data.
//!
//! Input files hold one window per line: a class label followed by `d`
//! values, separated by commas or tabs. Labels are remapped to `0..C` in
//! order of first appearance. The canonical output format is the same line
//! layout, comma-delimited, preceded by a `#` header such as
//! `# name=IPD classes=2 d=24 labels=1|2`; when a header lists `labels`,
//! body labels are read as indices into that list.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::seed::rng_from;

/// One univariate window with its class.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledWindow {
    pub values: Vec<f64>,
    pub label: usize,
    pub window_id: usize,
}

impl LabeledWindow {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Normalization {
    pub mean: f64,
    pub std: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub train: Vec<LabeledWindow>,
    pub test: Vec<LabeledWindow>,
    pub num_classes: usize,
    /// Original label text for each remapped class index.
    pub label_names: Vec<String>,
    pub normalization: Option<Normalization>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Delimiter {
    #[default]
    Auto,
    Comma,
    Tab,
}

impl Delimiter {
    fn detect(self, first_line: &str) -> char {
        match self {
            Delimiter::Comma => ',',
            Delimiter::Tab => '\t',
            Delimiter::Auto if first_line.contains('\t') => '\t',
            Delimiter::Auto => ',',
        }
    }
}

/// Header fields of a canonical file.
#[derive(Default)]
struct Header {
    name: Option<String>,
    labels: Option<Vec<String>>,
}

fn parse_header(line: &str) -> Header {
    let mut h = Header::default();
    for token in line.trim_start_matches('#').split_whitespace() {
        if let Some((k, v)) = token.split_once('=') {
            match k {
                "name" => h.name = Some(v.to_string()),
                "labels" => h.labels = Some(v.split('|').map(str::to_string).collect()),
                _ => {}
            }
        }
    }
    h
}

fn label_key(field: &str) -> String {
    match field.parse::<f64>() {
        Ok(v) => format!("{v}"),
        Err(_) => field.to_string(),
    }
}

/// Incremental parser shared by single-file and train/test-pair loading so
/// that both files use one label mapping.
struct UcrReader {
    delimiter: Delimiter,
    label_index: HashMap<String, usize>,
    label_names: Vec<String>,
    fixed_labels: bool,
    name: Option<String>,
    width: Option<usize>,
    next_id: usize,
}

impl UcrReader {
    fn new(delimiter: Delimiter) -> Self {
        Self {
            delimiter,
            label_index: HashMap::new(),
            label_names: Vec::new(),
            fixed_labels: false,
            name: None,
            width: None,
            next_id: 0,
        }
    }

    fn read(&mut self, text: &str) -> Result<Vec<LabeledWindow>> {
        let mut out = Vec::new();
        let mut sep = None;
        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('#') {
                let h = parse_header(line);
                if h.name.is_some() {
                    self.name = h.name;
                }
                if let Some(labels) = h.labels {
                    if !self.fixed_labels {
                        self.label_index = labels
                            .iter()
                            .enumerate()
                            .map(|(i, _)| (i.to_string(), i))
                            .collect();
                        self.label_names = labels;
                        self.fixed_labels = true;
                    }
                }
                continue;
            }
            let sep = *sep.get_or_insert_with(|| self.delimiter.detect(line));
            let fields: Vec<&str> = line.split(sep).map(str::trim).collect();
            match self.width {
                None => {
                    if fields.len() < 4 {
                        return Err(Error::parse(lineno, format!(
                            "a window needs at least 3 values, found {}",
                            fields.len().saturating_sub(1)
                        )));
                    }
                    self.width = Some(fields.len());
                }
                Some(w) if w != fields.len() => {
                    return Err(Error::parse(lineno, format!(
                        "ragged row: {} fields where {w} were expected",
                        fields.len()
                    )));
                }
                Some(_) => {}
            }
            let label = self.label(fields[0], lineno)?;
            let values = fields[1..]
                .iter()
                .map(|f| {
                    f.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| Error::parse(lineno, format!("non-numeric field {f:?}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            out.push(LabeledWindow {
                values,
                label,
                window_id: self.next_id,
            });
            self.next_id += 1;
        }
        Ok(out)
    }

    fn label(&mut self, field: &str, lineno: usize) -> Result<usize> {
        if field.is_empty() {
            return Err(Error::parse(lineno, "missing label"));
        }
        if self.fixed_labels {
            let key = label_key(field);
            return self
                .label_index
                .get(&key)
                .copied()
                .ok_or_else(|| Error::parse(lineno, format!("label {field:?} not in header")));
        }
        let key = label_key(field);
        let next = self.label_names.len();
        let idx = *self.label_index.entry(key).or_insert(next);
        if idx == next {
            self.label_names.push(field.to_string());
        }
        Ok(idx)
    }

    fn finish(self, fallback_name: &str, train: Vec<LabeledWindow>, test: Vec<LabeledWindow>) -> Result<Dataset> {
        if train.is_empty() && test.is_empty() {
            return Err(Error::EmptyDataset(fallback_name.to_string()));
        }
        Ok(Dataset {
            name: self.name.unwrap_or_else(|| fallback_name.to_string()),
            num_classes: self.label_names.len(),
            label_names: self.label_names,
            train,
            test,
            normalization: None,
        })
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn stem_name(path: &Path) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    stem.trim_end_matches("_TRAIN")
        .trim_end_matches("_TEST")
        .to_string()
}

/// Parses UCR text. Every window lands in `train`; call [`Dataset::split`]
/// to carve out a test partition.
pub fn parse_ucr_str(text: &str, name: &str, delimiter: Delimiter) -> Result<Dataset> {
    let mut reader = UcrReader::new(delimiter);
    let windows = reader.read(text)?;
    reader.finish(name, windows, Vec::new())
}

pub fn parse_ucr(path: impl AsRef<Path>, delimiter: Delimiter) -> Result<Dataset> {
    let path = path.as_ref();
    parse_ucr_str(&read_text(path)?, &stem_name(path), delimiter)
}

/// Loads an archive's native TRAIN/TEST pair with one shared label mapping.
pub fn parse_ucr_pair(train: impl AsRef<Path>, test: impl AsRef<Path>, delimiter: Delimiter) -> Result<Dataset> {
    let (train, test) = (train.as_ref(), test.as_ref());
    let mut reader = UcrReader::new(delimiter);
    let tr = reader.read(&read_text(train)?)?;
    let te = reader.read(&read_text(test)?)?;
    if tr.is_empty() {
        return Err(Error::EmptyDataset(train.display().to_string()));
    }
    reader.finish(&stem_name(train), tr, te)
}

impl Dataset {
    pub fn window_len(&self) -> usize {
        self.train
            .first()
            .or(self.test.first())
            .map_or(0, LabeledWindow::len)
    }

    pub fn windows(&self) -> impl Iterator<Item = &LabeledWindow> {
        self.train.iter().chain(&self.test)
    }

    /// Seeded shuffle of all windows into `ratio` train / `1 - ratio` test.
    /// Both partitions keep ascending window ids.
    pub fn split(mut self, ratio: f64, seed: u64) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::config(format!("split ratio {ratio} must lie in (0, 1)")));
        }
        let mut all: Vec<LabeledWindow> = self.train.drain(..).chain(self.test.drain(..)).collect();
        all.sort_by_key(|w| w.window_id);
        let n = all.len();
        let n_train = ((n as f64) * ratio).round() as usize;
        if n_train == 0 || n_train == n {
            return Err(Error::EmptyDataset(format!(
                "{}: {n} windows cannot be split at ratio {ratio}",
                self.name
            )));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng_from(seed));
        let mut is_train = vec![false; n];
        for &i in &order[..n_train] {
            is_train[i] = true;
        }
        for (w, train) in all.into_iter().zip(is_train) {
            if train {
                self.train.push(w);
            } else {
                self.test.push(w);
            }
        }
        Ok(self)
    }

    /// z-scores both partitions with the pooled train mean and population std.
    pub fn normalize(&self) -> Result<Self> {
        if self.train.is_empty() {
            return Err(Error::EmptyDataset(format!("{}: empty train split", self.name)));
        }
        let values = || self.train.iter().flat_map(|w| w.values.iter().copied());
        let n = values().count() as f64;
        let mean = values().sum::<f64>() / n;
        let var = values().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        if !(std > 0.0) || !std.is_finite() {
            return Err(Error::DegenerateDataset(format!(
                "{}: train values have zero variance",
                self.name
            )));
        }
        let apply = |ws: &[LabeledWindow]| {
            ws.iter()
                .map(|w| LabeledWindow {
                    values: w.values.iter().map(|v| (v - mean) / std).collect(),
                    ..w.clone()
                })
                .collect()
        };
        Ok(Dataset {
            train: apply(&self.train),
            test: apply(&self.test),
            normalization: Some(Normalization { mean, std }),
            ..self.clone()
        })
    }

    fn header(&self) -> String {
        format!(
            "# name={} classes={} d={} labels={}",
            self.name,
            self.num_classes,
            self.window_len(),
            self.label_names.join("|")
        )
    }

    /// Canonical text for one partition.
    pub fn to_canonical(&self, windows: &[LabeledWindow]) -> String {
        let mut s = self.header();
        s.push('\n');
        for w in windows {
            let _ = write!(s, "{}", w.label);
            for v in &w.values {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        s
    }

    /// Writes `<name>_TRAIN.csv` and, when non-empty, `<name>_TEST.csv`.
    pub fn write_canonical(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written = Vec::new();
        for (suffix, part) in [("TRAIN", &self.train), ("TEST", &self.test)] {
            if part.is_empty() && suffix == "TEST" {
                continue;
            }
            let path = dir.join(format!("{}_{suffix}.csv", self.name));
            fs::write(&path, self.to_canonical(part)).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }

    /// Short content hash over both partitions.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.to_canonical(&self.train).as_bytes());
        h.update(b"--\n");
        h.update(self.to_canonical(&self.test).as_bytes());
        hex::encode(&h.finalize()[..8])
    }
}

/// Generator settings for a dataset whose discriminative region is known.
///
/// Class `c` carries a Gaussian bump of height `amplitude` and width
/// `width` centred at `(c + 0.5)·d/C`; every other cell is N(0,1). With two
/// classes the bump sits in the first or second half of the window.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub name: String,
    pub length: usize,
    pub num_windows: usize,
    pub num_classes: usize,
    pub amplitude: f64,
    pub width: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            name: "synthetic".into(),
            length: 24,
            num_windows: 400,
            num_classes: 2,
            amplitude: 3.0,
            width: 3.0,
            seed: 0,
        }
    }
}

pub fn synthesize(spec: &SyntheticSpec) -> Result<Dataset> {
    if spec.length < 8 {
        return Err(Error::config(format!("synthetic length {} < 8", spec.length)));
    }
    if spec.num_windows < 2 || spec.num_classes < 2 {
        return Err(Error::config("synthetic data needs at least 2 windows and 2 classes"));
    }
    if !(spec.width > 0.0) || !spec.amplitude.is_finite() {
        return Err(Error::config("synthetic bump needs a positive width and finite amplitude"));
    }
    let mut rng = rng_from(spec.seed);
    let d = spec.length as f64;
    let c = spec.num_classes as f64;
    let windows = (0..spec.num_windows)
        .map(|i| {
            let label = rng.random_range(0..spec.num_classes);
            let centre = (label as f64 + 0.5) * d / c;
            let values = (0..spec.length)
                .map(|t| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    let u = (t as f64 - centre) / spec.width;
                    z + spec.amplitude * (-0.5 * u * u).exp()
                })
                .collect();
            LabeledWindow {
                values,
                label,
                window_id: i,
            }
        })
        .collect();
    Ok(Dataset {
        name: spec.name.clone(),
        train: windows,
        test: Vec::new(),
        num_classes: spec.num_classes,
        label_names: (0..spec.num_classes).map(|k| k.to_string()).collect(),
        normalization: None,
    })
}
