//! Binary checkpoint format.
//!
//! ```text
//! 8 bytes   magic "SALCKPT\0"
//! u32 LE    format version (1)
//! u32 LE    header length N
//! N bytes   UTF-8 header, one `key=value` per line
//! u64 LE    parameter count P
//! P × f64   parameters, little-endian, in declaration order
//! ```
//!
//! The header holds the model configuration, the dataset fingerprint and
//! one `history=epoch,loss,accuracy` line per recorded epoch.

use std::fs;
use std::path::Path;

use super::{param_specs, Arch, Classifier, ClassifierConfig, EpochRecord};
use crate::autodiff::Tensor;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"SALCKPT\0";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    model: Classifier,
    history: Vec<EpochRecord>,
    fingerprint: String,
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::Parse {
        line: 0,
        message: format!("checkpoint: {}", msg.into()),
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| corrupt("truncated"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

impl Checkpoint {
    pub fn new(model: Classifier, history: Vec<EpochRecord>, fingerprint: String) -> Self {
        Self {
            model,
            history,
            fingerprint,
        }
    }

    pub fn model(&self) -> &Classifier {
        &self.model
    }

    pub fn into_model(self) -> Classifier {
        self.model
    }

    pub fn history(&self) -> &[EpochRecord] {
        &self.history
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let c = self.model.config();
        let mut header = format!(
            "arch={}\nhidden_size={}\nnum_layers={}\nnum_classes={}\ninput_features={}\nseq_len={}\nseed={}\nfingerprint={}\n",
            c.arch, c.hidden_size, c.num_layers, c.num_classes, c.input_features, c.seq_len, c.seed, self.fingerprint
        );
        for h in &self.history {
            header.push_str(&format!("history={},{},{}\n", h.epoch, h.loss, h.accuracy));
        }
        let params = self.model.flat_params();
        let mut out = Vec::with_capacity(24 + header.len() + 8 * params.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(header.as_bytes());
        out.extend_from_slice(&(params.len() as u64).to_le_bytes());
        for p in params {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { buf: bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(corrupt("bad magic"));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(corrupt(format!("unsupported version {version}")));
        }
        let n = r.u32()? as usize;
        let header = std::str::from_utf8(r.take(n)?).map_err(|_| corrupt("header is not UTF-8"))?;

        let mut kv = std::collections::HashMap::new();
        let mut history = Vec::new();
        for line in header.lines() {
            let (k, v) = line.split_once('=').ok_or_else(|| corrupt(format!("header line {line:?}")))?;
            if k == "history" {
                let f: Vec<&str> = v.split(',').collect();
                if f.len() != 3 {
                    return Err(corrupt(format!("history entry {v:?}")));
                }
                history.push(EpochRecord {
                    epoch: f[0].parse().map_err(|_| corrupt("history epoch"))?,
                    loss: f[1].parse().map_err(|_| corrupt("history loss"))?,
                    accuracy: f[2].parse().map_err(|_| corrupt("history accuracy"))?,
                });
            } else {
                kv.insert(k, v);
            }
        }
        let get = |k: &str| kv.get(k).copied().ok_or_else(|| corrupt(format!("missing {k}")));
        let num = |k: &str| -> Result<usize> { get(k)?.parse().map_err(|_| corrupt(format!("bad {k}"))) };
        let config = ClassifierConfig {
            arch: get("arch")?.parse::<Arch>()?,
            hidden_size: num("hidden_size")?,
            num_layers: num("num_layers")?,
            num_classes: num("num_classes")?,
            input_features: num("input_features")?,
            seq_len: num("seq_len")?,
            seed: get("seed")?.parse().map_err(|_| corrupt("bad seed"))?,
        };
        config.validate()?;
        let fingerprint = get("fingerprint")?.to_string();

        let count = r.u64()? as usize;
        let specs = param_specs(&config);
        let expected: usize = specs.iter().map(|s| s.shape.iter().product::<usize>()).sum();
        if count != expected {
            return Err(corrupt(format!("{count} parameters, configuration implies {expected}")));
        }
        let raw = r.take(count.checked_mul(8).ok_or_else(|| corrupt("size overflow"))?)?;
        if r.pos != bytes.len() {
            return Err(corrupt("trailing bytes"));
        }
        let mut flat = raw.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")));
        let params = specs
            .iter()
            .map(|s| Tensor::new(&s.shape, flat.by_ref().take(s.shape.iter().product()).collect()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            model: Classifier::from_params(config, params)?,
            history,
            fingerprint,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
