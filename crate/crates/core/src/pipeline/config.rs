//! Flat `key = value` experiment configuration.
//!
//! One setting per line, `#` starts a comment, keys are dotted paths:
//!
//! ```text
//! seed = 7
//! datasets = synthetic
//! dataset.synthetic.kind = synthetic
//! models = recurrent, temporal_conv, attention
//! train.epochs = 40
//! ```
//!
//! Environment variables prefixed `SAUDIT_` override file values; the rest
//! of the name is lower-cased and `__` becomes `.`, so
//! `SAUDIT_TRAIN__LEARNING_RATE=0.01` sets `train.learning_rate`.
//! Unknown keys are rejected.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::attribution::{AttributionConfig, ExplainerKind};
use crate::data::{Delimiter, SyntheticSpec};
use crate::error::{Error, Result};
use crate::framing::{ExpansionRatio, FrameSpec, Placement};
use crate::models::{AdamConfig, Arch, TrainConfig};

pub const ENV_PREFIX: &str = "SAUDIT_";

/// Parsed key-value pairs, remembering which ones were read.
#[derive(Debug, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, usize)>,
    used: RefCell<BTreeSet<String>>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(i + 1, format!("expected key = value, got {line:?}")))?;
            let k = k.trim().to_ascii_lowercase();
            if k.is_empty() {
                return Err(Error::parse(i + 1, "empty key"));
            }
            if entries.insert(k.clone(), (v.trim().to_string(), i + 1)).is_some() {
                return Err(Error::parse(i + 1, format!("duplicate key {k}")));
            }
        }
        Ok(Self {
            entries,
            used: RefCell::default(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_ascii_lowercase(), (value.into(), 0));
    }

    /// Applies `SAUDIT_*` variables from `vars`.
    pub fn apply_env<I: IntoIterator<Item = (String, String)>>(&mut self, vars: I) {
        for (name, value) in vars {
            if let Some(rest) = name.strip_prefix(ENV_PREFIX) {
                let key = rest.to_ascii_lowercase().replace("__", ".");
                self.set(&key, value);
            }
        }
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.used.borrow_mut().insert(key.to_string());
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    fn parsed<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| self.bad(key, v)),
        }
    }

    fn keyword<T: FromStr<Err = Error>>(&self, key: &str, default: T) -> Result<T> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse(),
        }
    }

    fn list<T: FromStr<Err = Error>>(&self, key: &str, default: Vec<T>) -> Result<Vec<T>> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::parse).collect(),
        }
    }

    fn bad(&self, key: &str, value: &str) -> Error {
        let line = self.entries.get(key).map(|e| e.1).unwrap_or(0);
        let what = format!("invalid value {value:?} for {key}");
        if line > 0 {
            Error::Config(format!("line {line}: {what}"))
        } else {
            Error::Config(what)
        }
    }

    fn unused(&self) -> Vec<String> {
        let used = self.used.borrow();
        self.entries.keys().filter(|k| !used.contains(*k)).cloned().collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DatasetSource {
    Synthetic {
        name: String,
        spec: SyntheticSpec,
        split_ratio: f64,
    },
    Ucr {
        name: String,
        train: PathBuf,
        /// Without a test file the train file is split.
        test: Option<PathBuf>,
        delimiter: Delimiter,
        split_ratio: f64,
    },
}

impl DatasetSource {
    pub fn name(&self) -> &str {
        match self {
            DatasetSource::Synthetic { name, .. } | DatasetSource::Ucr { name, .. } => name,
        }
    }
}

/// Which two feature rows the robustness audit exchanges.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SwapChoice {
    /// The signal row and another row drawn from the master seed.
    Random,
    Pair(usize, usize),
}

impl FromStr for SwapChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim() == "random" {
            return Ok(SwapChoice::Random);
        }
        let parts: Vec<&str> = s.split([',', '-']).map(str::trim).collect();
        match parts[..] {
            [i, j] => match (i.parse(), j.parse()) {
                (Ok(i), Ok(j)) => Ok(SwapChoice::Pair(i, j)),
                _ => Err(Error::config(format!("bad swap {s:?}"))),
            },
            _ => Err(Error::config(format!("swap must be \"random\" or \"i-j\", got {s:?}"))),
        }
    }
}

impl std::fmt::Display for SwapChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SwapChoice::Random => f.write_str("random"),
            SwapChoice::Pair(i, j) => write!(f, "{i}-{j}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelSize {
    pub hidden_size: usize,
    pub num_layers: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub datasets: Vec<DatasetSource>,
    pub frame: FrameSpec,
    /// Placements used to train the classifiers and in the consistency audit.
    pub placements: Vec<Placement>,
    pub models: Vec<Arch>,
    pub model_sizes: BTreeMap<Arch, ModelSize>,
    pub explainers: Vec<ExplainerKind>,
    pub attribution: AttributionConfig,
    /// Windows explained together by cross-batch explainers.
    pub fp_batch: usize,
    pub train: TrainConfig,
    pub k: Option<usize>,
    /// 0 keeps every test window.
    pub max_test_windows: usize,
    pub consistency: bool,
    pub robustness: bool,
    pub swap: SwapChoice,
    /// Placements the swapped twins are trained on and audited at.
    pub robustness_placements: Vec<Placement>,
}

fn fmt_list<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let seed = raw.parsed("seed", 0u64)?;
        let names: Vec<String> = match raw.get("datasets") {
            None => vec!["synthetic".into()],
            Some(v) => v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
        };
        let mut datasets = Vec::new();
        for name in names {
            let key = |k: &str| format!("dataset.{name}.{k}");
            let split_ratio = raw.parsed(&key("split_ratio"), 0.7)?;
            let kind = raw.get(&key("kind")).unwrap_or(if name == "synthetic" { "synthetic" } else { "ucr" });
            let source = match kind {
                "synthetic" => {
                    let d = SyntheticSpec::default();
                    DatasetSource::Synthetic {
                        spec: SyntheticSpec {
                            name: name.clone(),
                            length: raw.parsed(&key("length"), d.length)?,
                            num_windows: raw.parsed(&key("num_windows"), d.num_windows)?,
                            num_classes: raw.parsed(&key("num_classes"), d.num_classes)?,
                            amplitude: raw.parsed(&key("amplitude"), d.amplitude)?,
                            width: raw.parsed(&key("width"), d.width)?,
                            seed: raw.parsed(&key("seed"), crate::seed::derive_seed(seed, &format!("synthetic/{name}")))?,
                        },
                        name,
                        split_ratio,
                    }
                }
                "ucr" => DatasetSource::Ucr {
                    train: raw
                        .get(&key("train"))
                        .map(PathBuf::from)
                        .ok_or_else(|| Error::config(format!("{} is required", key("train"))))?,
                    test: raw.get(&key("test")).map(PathBuf::from),
                    delimiter: match raw.get(&key("delimiter")).unwrap_or("auto") {
                        "auto" => Delimiter::Auto,
                        "comma" => Delimiter::Comma,
                        "tab" => Delimiter::Tab,
                        other => return Err(raw.bad(&key("delimiter"), other)),
                    },
                    name,
                    split_ratio,
                },
                other => return Err(raw.bad(&key("kind"), other)),
            };
            datasets.push(source);
        }

        let fd = FrameSpec::default();
        let frame = FrameSpec {
            alpha: raw.parsed("frame.alpha", fd.alpha)?,
            ratio: raw.keyword::<ExpansionRatio>("frame.beta", fd.ratio)?,
            signal_feature: raw.parsed("frame.signal_feature", fd.signal_feature)?,
        };

        let models = raw.list("models", Arch::ALL.to_vec())?;
        let hidden = raw.parsed("model.hidden_size", 32usize)?;
        let layers: Option<usize> = match raw.get("model.num_layers") {
            None => None,
            Some(v) => Some(v.parse().map_err(|_| raw.bad("model.num_layers", v))?),
        };
        let mut model_sizes = BTreeMap::new();
        for arch in Arch::ALL {
            let p = format!("model.{arch}");
            model_sizes.insert(
                arch,
                ModelSize {
                    hidden_size: raw.parsed(&format!("{p}.hidden_size"), hidden)?,
                    num_layers: raw.parsed(&format!("{p}.num_layers"), layers.unwrap_or(arch.default_layers()))?,
                },
            );
        }

        let ad = AttributionConfig::default();
        let attribution = AttributionConfig {
            ig_steps: raw.parsed("attribution.ig_steps", ad.ig_steps)?,
            ig_baseline: raw.keyword("attribution.ig_baseline", ad.ig_baseline)?,
            fa_baseline: raw.keyword("attribution.fa_baseline", ad.fa_baseline)?,
            fp_repetitions: raw.parsed("attribution.fp_repetitions", ad.fp_repetitions)?,
            granularity: raw.keyword("attribution.granularity", ad.granularity)?,
            target: raw.keyword("attribution.target", ad.target)?,
            score: raw.keyword("attribution.score", ad.score)?,
        };

        let td = TrainConfig::default();
        let train = TrainConfig {
            epochs: raw.parsed("train.epochs", td.epochs)?,
            batch_size: raw.parsed("train.batch_size", td.batch_size)?,
            learning_rate: raw.parsed("train.learning_rate", td.learning_rate)?,
            adam: AdamConfig {
                beta1: raw.parsed("train.beta1", td.adam.beta1)?,
                beta2: raw.parsed("train.beta2", td.adam.beta2)?,
                epsilon: raw.parsed("train.epsilon", td.adam.epsilon)?,
            },
            patience: raw.parsed("train.patience", td.patience)?,
            seed,
        };

        let k = match raw.get("eval.k") {
            None | Some("") | Some("auto") => None,
            Some(v) => Some(v.parse().map_err(|_| raw.bad("eval.k", v))?),
        };

        let cfg = Self {
            name: raw.get("name").unwrap_or("experiment").to_string(),
            seed,
            output_dir: PathBuf::from(raw.get("output_dir").unwrap_or("out")),
            datasets,
            frame,
            placements: raw.list("frame.placements", Placement::ALL.to_vec())?,
            models,
            model_sizes,
            explainers: raw.list("explainers", ExplainerKind::ALL.to_vec())?,
            attribution,
            fp_batch: raw.parsed("attribution.fp_batch", 16)?,
            train,
            k,
            max_test_windows: raw.parsed("eval.max_test_windows", 0)?,
            consistency: raw.parsed("eval.consistency", true)?,
            robustness: raw.parsed("eval.robustness", true)?,
            swap: raw.keyword("robustness.swap", SwapChoice::Random)?,
            robustness_placements: raw.list("robustness.placements", vec![Placement::Middle])?,
        };
        let unused = raw.unused();
        if !unused.is_empty() {
            return Err(Error::config(format!("unknown keys: {}", unused.join(", "))));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_raw(&RawConfig::parse(text)?)
    }

    /// Reads a file and applies `SAUDIT_*` overrides from the process
    /// environment.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut raw = RawConfig::load(path)?;
        raw.apply_env(std::env::vars());
        Self::from_raw(&raw)
    }

    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() || self.models.is_empty() || self.explainers.is_empty() {
            return Err(Error::config("at least one dataset, model and explainer are required"));
        }
        let mut names = BTreeSet::new();
        for d in &self.datasets {
            if !names.insert(d.name()) {
                return Err(Error::config(format!("dataset {} listed twice", d.name())));
            }
            let r = match d {
                DatasetSource::Synthetic { split_ratio, .. } | DatasetSource::Ucr { split_ratio, .. } => *split_ratio,
            };
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::config(format!("split ratio {r} outside (0, 1)")));
            }
        }
        if self.frame.alpha < 2 || self.frame.signal_feature >= self.frame.alpha {
            return Err(Error::config("frame needs alpha >= 2 and signal_feature < alpha"));
        }
        if self.placements.is_empty() || self.robustness_placements.is_empty() {
            return Err(Error::config("placement lists must not be empty"));
        }
        if self.train.epochs < 1 {
            return Err(Error::config("train.epochs must be at least 1"));
        }
        if self.fp_batch < 2 {
            return Err(Error::config("attribution.fp_batch must be at least 2"));
        }
        if self.k == Some(0) {
            return Err(Error::config("eval.k must be positive"));
        }
        if let SwapChoice::Pair(i, j) = self.swap {
            crate::framing::SwapSpec::new(i, j, self.frame.alpha)?;
        }
        self.train.validate()?;
        self.attribution.validate()
    }

    /// Every setting, one `key = value` per line, in a fixed order. Parsing
    /// the echo reproduces the configuration.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("name", self.name.clone());
        kv("seed", self.seed.to_string());
        kv("output_dir", self.output_dir.display().to_string());
        kv("datasets", self.datasets.iter().map(|d| d.name().to_string()).collect::<Vec<_>>().join(","));
        for d in &self.datasets {
            match d {
                DatasetSource::Synthetic { name, spec, split_ratio } => {
                    let p = format!("dataset.{name}");
                    kv(&format!("{p}.kind"), "synthetic".into());
                    kv(&format!("{p}.split_ratio"), split_ratio.to_string());
                    kv(&format!("{p}.length"), spec.length.to_string());
                    kv(&format!("{p}.num_windows"), spec.num_windows.to_string());
                    kv(&format!("{p}.num_classes"), spec.num_classes.to_string());
                    kv(&format!("{p}.amplitude"), spec.amplitude.to_string());
                    kv(&format!("{p}.width"), spec.width.to_string());
                    kv(&format!("{p}.seed"), spec.seed.to_string());
                }
                DatasetSource::Ucr { name, train, test, delimiter, split_ratio } => {
                    let p = format!("dataset.{name}");
                    kv(&format!("{p}.kind"), "ucr".into());
                    kv(&format!("{p}.split_ratio"), split_ratio.to_string());
                    kv(&format!("{p}.train"), train.display().to_string());
                    if let Some(t) = test {
                        kv(&format!("{p}.test"), t.display().to_string());
                    }
                    let delim = match delimiter {
                        Delimiter::Auto => "auto",
                        Delimiter::Comma => "comma",
                        Delimiter::Tab => "tab",
                    };
                    kv(&format!("{p}.delimiter"), delim.into());
                }
            }
        }
        kv("frame.alpha", self.frame.alpha.to_string());
        kv("frame.beta", self.frame.ratio.to_string());
        kv("frame.signal_feature", self.frame.signal_feature.to_string());
        kv("frame.placements", fmt_list(&self.placements));
        kv("models", fmt_list(&self.models));
        for (arch, size) in &self.model_sizes {
            kv(&format!("model.{arch}.hidden_size"), size.hidden_size.to_string());
            kv(&format!("model.{arch}.num_layers"), size.num_layers.to_string());
        }
        kv("explainers", fmt_list(&self.explainers));
        let a = &self.attribution;
        kv("attribution.ig_steps", a.ig_steps.to_string());
        kv("attribution.ig_baseline", a.ig_baseline.to_string());
        kv("attribution.fa_baseline", a.fa_baseline.to_string());
        kv("attribution.fp_repetitions", a.fp_repetitions.to_string());
        kv("attribution.fp_batch", self.fp_batch.to_string());
        kv("attribution.granularity", a.granularity.to_string());
        kv("attribution.target", a.target.to_string());
        kv("attribution.score", a.score.to_string());
        let t = &self.train;
        kv("train.epochs", t.epochs.to_string());
        kv("train.batch_size", t.batch_size.to_string());
        kv("train.learning_rate", t.learning_rate.to_string());
        kv("train.beta1", t.adam.beta1.to_string());
        kv("train.beta2", t.adam.beta2.to_string());
        kv("train.epsilon", t.adam.epsilon.to_string());
        kv("train.patience", t.patience.to_string());
        kv("eval.k", self.k.map(|k| k.to_string()).unwrap_or_else(|| "auto".into()));
        kv("eval.max_test_windows", self.max_test_windows.to_string());
        kv("eval.consistency", self.consistency.to_string());
        kv("eval.robustness", self.robustness.to_string());
        kv("robustness.swap", self.swap.to_string());
        kv("robustness.placements", fmt_list(&self.robustness_placements));
        s
    }

    /// Short hash of the echo.
    pub fn hash(&self) -> String {
        hex::encode(&Sha256::digest(self.echo().as_bytes())[..8])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_cover_the_full_matrix() {
        let c = ExperimentConfig::parse("").unwrap();
        assert_eq!(c.models, Arch::ALL.to_vec());
        assert_eq!(c.explainers, ExplainerKind::ALL.to_vec());
        assert_eq!(c.frame.alpha, 4);
        assert_eq!(c.frame.ratio.to_string(), "5/3");
        assert_eq!(c.train.epochs, 100);
        assert_eq!(c.attribution.ig_steps, 50);
        assert_eq!(c.swap, SwapChoice::Random);
        assert_eq!(c.datasets[0].name(), "synthetic");
    }

    #[test]
    fn echo_round_trips() {
        let text = "seed = 11\nmodels = recurrent, attention # two\nmodel.attention.hidden_size = 16\n\
                    train.learning_rate = 0.003\nrobustness.swap = 1-3\neval.k = 5\n";
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.model_sizes[&Arch::Attention].hidden_size, 16);
        assert_eq!(c.model_sizes[&Arch::Recurrent].hidden_size, 32);
        let again = ExperimentConfig::parse(&c.echo()).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.hash(), c.hash());
    }

    #[test]
    fn environment_overrides_file_values() {
        let mut raw = RawConfig::parse("train.learning_rate = 0.1\n").unwrap();
        raw.apply_env([
            ("SAUDIT_TRAIN__LEARNING_RATE".to_string(), "0.01".to_string()),
            ("SAUDIT_EVAL__MAX_TEST_WINDOWS".to_string(), "5".to_string()),
            ("HOME".to_string(), "/root".to_string()),
        ]);
        let c = ExperimentConfig::from_raw(&raw).unwrap();
        assert_eq!(c.train.learning_rate, 0.01);
        assert_eq!(c.max_test_windows, 5);
    }

    #[test]
    fn errors_are_configuration_errors() {
        for text in [
            "train.epoch = 3",
            "models = lstm, gru",
            "explainers = SHAP",
            "train.learning_rate = -1",
            "attribution.ig_steps = 1",
            "robustness.swap = 2-2",
            "dataset.ipd.kind = ucr\ndatasets = ipd",
            "frame.beta = 3",
        ] {
            let e = ExperimentConfig::parse(text).unwrap_err();
            assert_eq!(e.exit_code(), 1, "{text}: {e}");
        }
        assert!(matches!(RawConfig::parse("no equals sign"), Err(Error::Parse { line: 1, .. })));
        assert!(RawConfig::parse("a = 1\na = 2").is_err());
    }
}
