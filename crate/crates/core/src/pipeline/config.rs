use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::bcjr::{DEFAULT_MAX_COPIES, DRIFT_FACTOR};
use crate::channel::IdsChannelParams;

/// Trials per grid point unless overridden.
pub const DEFAULT_TRIALS: u64 = 409_600;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum OuterSpec {
    /// alist file, relative paths resolved against the config's directory.
    Alist { path: PathBuf },
    /// `mackay_96_48` or `hamming74`.
    Builtin { name: String },
    Protograph {
        matrix: Vec<Vec<u32>>,
        lift: usize,
        q: usize,
        seed: u64,
    },
    /// No outer code: random words of length `n` over GF(q).
    Uncoded { n: usize, q: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InnerSpec {
    /// Marker digits such as `"001"`, inserted after every `interval` outer symbols.
    Marker { marker: String, interval: usize },
    /// Comma-separated octal generators; the offset is drawn once from `offset_seed`
    /// (the experiment seed when absent).
    Conv {
        polys: String,
        #[serde(default)]
        offset_seed: Option<u64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerDecoder {
    Bcjr,
    BcjrJoint,
    BcjrConv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OuterDecoder {
    #[default]
    None,
    Bp,
}

fn default_bp_iters() -> usize {
    50
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecoderChain {
    pub inner: InnerDecoder,
    #[serde(default)]
    pub outer: OuterDecoder,
    #[serde(default = "default_bp_iters")]
    pub bp_iters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![*v],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

fn default_i_max() -> usize {
    2
}

/// Grid of `p_ins = p_del = p` values crossed with substitution probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelGrid {
    pub p: Vec<f64>,
    pub p_sub: OneOrMany,
    #[serde(default = "default_i_max")]
    pub i_max: usize,
}

impl ChannelGrid {
    /// Points in `p_sub`-major, `p`-minor order.
    pub fn points(&self) -> Vec<IdsChannelParams> {
        let mut out = Vec::new();
        for s in self.p_sub.values() {
            for &p in &self.p {
                out.push(IdsChannelParams {
                    p_ins: p,
                    p_del: p,
                    p_sub: s,
                    i_max: self.i_max,
                });
            }
        }
        out
    }
}

/// Number of received copies per trial: fixed, or drawn uniformly from `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Copies {
    Fixed(usize),
    Range([usize; 2]),
}

impl Default for Copies {
    fn default() -> Self {
        Copies::Fixed(1)
    }
}

impl Copies {
    pub fn bounds(&self) -> (usize, usize) {
        match *self {
            Copies::Fixed(m) => (m, m),
            Copies::Range([a, b]) => (a, b),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Copies::Fixed(m) => m.to_string(),
            Copies::Range([a, b]) => format!("{a}-{b}"),
        }
    }
}

/// A fixed outer word: `"zeros"`, `"alternating"` (0, 1, 0, 1, ...) or explicit symbols.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CodewordSpec {
    Named(String),
    Symbols(Vec<u8>),
}

fn default_trials() -> u64 {
    DEFAULT_TRIALS
}

fn default_seed() -> u64 {
    1
}

fn default_drift_factor() -> f64 {
    DRIFT_FACTOR
}

fn default_max_copies() -> usize {
    DEFAULT_MAX_COPIES
}

fn default_name() -> String {
    "experiment".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub outer: OuterSpec,
    pub inner: InnerSpec,
    pub channel: ChannelGrid,
    #[serde(default)]
    pub copies: Copies,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub decoder: DecoderChain,
    /// Output prefix; `<prefix>.csv` and `<prefix>.json` are written when set.
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub histogram: bool,
    /// Score inner-only marker chains on outer-data positions only.
    #[serde(default)]
    pub exclude_markers: bool,
    #[serde(default)]
    pub allow_rare: bool,
    #[serde(default)]
    pub threads: Option<usize>,
    /// Transmit this word in every trial instead of random codewords.
    #[serde(default)]
    pub codeword: Option<CodewordSpec>,
    #[serde(default = "default_drift_factor")]
    pub drift_factor: f64,
    #[serde(default = "default_max_copies")]
    pub max_copies: usize,
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig =
            serde_path_to_error::deserialize(de).map_err(|e| PipelineError::Config {
                field: e.path().to_string(),
                msg: e.inner().to_string(),
            })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Config {
            field: ".".into(),
            msg: format!("cannot read {}: {e}", path.display()),
        })?;
        let mut cfg = Self::from_json(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(b) if p.is_relative() => b.join(p),
            _ => p.to_path_buf(),
        }
    }

    /// Structural checks that need no code files. Copies above the cap are
    /// reported as [`PipelineError::DecodeCap`].
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |field: &str, msg: String| {
            Err(PipelineError::Config {
                field: field.into(),
                msg,
            })
        };
        if self.trials == 0 {
            return bad("trials", "must be at least 1".into());
        }
        if self.channel.p.is_empty() {
            return bad("channel.p", "grid is empty".into());
        }
        if self.channel.p_sub.values().is_empty() {
            return bad("channel.p_sub", "grid is empty".into());
        }
        for (i, ch) in self.channel.points().iter().enumerate() {
            if let Err(e) = ch.validate() {
                return bad(&format!("channel[{i}]"), e.to_string());
            }
            if ch.p_del >= 1.0 {
                return bad(&format!("channel[{i}]"), "p_del must be below 1".into());
            }
        }
        if !(self.drift_factor >= 0.0 && self.drift_factor.is_finite()) {
            return bad("drift_factor", "must be finite and non-negative".into());
        }
        if self.threads == Some(0) {
            return bad("threads", "must be at least 1".into());
        }
        if self.decoder.outer == OuterDecoder::Bp && self.decoder.bp_iters == 0 {
            return bad("decoder.bp_iters", "must be at least 1".into());
        }
        let (m_min, m_max) = self.copies.bounds();
        if m_min == 0 || m_min > m_max {
            return bad("copies", format!("invalid copy range [{m_min}, {m_max}]"));
        }
        match (&self.inner, self.decoder.inner) {
            (InnerSpec::Marker { interval, .. }, InnerDecoder::Bcjr | InnerDecoder::BcjrJoint) => {
                if *interval == 0 {
                    return bad("inner.interval", "must be at least 1".into());
                }
            }
            (InnerSpec::Conv { .. }, InnerDecoder::BcjrConv) => {}
            (_, d) => {
                return bad(
                    "decoder.inner",
                    format!("{d:?} does not match the inner code type"),
                )
            }
        }
        if matches!(
            self.decoder.inner,
            InnerDecoder::Bcjr | InnerDecoder::BcjrConv
        ) && m_max != 1
        {
            return bad("copies", "single-copy decoder needs copies = 1".into());
        }
        if self.decoder.inner == InnerDecoder::BcjrJoint && m_max > self.max_copies {
            return Err(PipelineError::DecodeCap {
                copies: m_max,
                cap: self.max_copies,
            });
        }
        if self.decoder.outer == OuterDecoder::Bp && matches!(self.outer, OuterSpec::Uncoded { .. })
        {
            return bad(
                "decoder.outer",
                "belief propagation needs an outer code".into(),
            );
        }
        if let OuterSpec::Uncoded { n, q } = self.outer {
            if n == 0 || !q.is_power_of_two() || q < 2 {
                return bad("outer", format!("invalid uncoded shape n = {n}, q = {q}"));
            }
        }
        if let Some(CodewordSpec::Named(s)) = &self.codeword {
            if s != "zeros" && s != "alternating" {
                return bad("codeword", format!("unknown pattern {s:?}"));
            }
        }
        Ok(())
    }
}
