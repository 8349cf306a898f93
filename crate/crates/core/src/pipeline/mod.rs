//! Monte Carlo harness: encode, transmit, decode and score, one trial at a
//! time, with every trial seeded from `(seed, grid point, trial index)` so
//! results do not depend on how trials are scheduled across workers.

mod config;
mod run;
mod train;

pub use config::{
    ChannelGrid, CodewordSpec, Copies, DecoderChain, ExperimentConfig, InnerDecoder, InnerSpec,
    OneOrMany, OuterDecoder, OuterSpec, DEFAULT_TRIALS,
};
pub use run::{
    per_position_histogram, run_experiment, run_with_histograms, write_histogram_csv,
    write_results, PositionHistogram, ResultRow, RESULTS_VERSION,
};
pub use train::{generate_training_set, DatasetKind, DatasetOptions};

use std::path::PathBuf;

use rand::Rng;
use thiserror::Error;

use crate::bcjr::{
    bcjr_conv, bcjr_joint_with, bcjr_marker, drift_bound, marker_priors, BcjrError, DriftWindow,
    JointOptions, PosteriorMatrix,
};
use crate::bp::{bp_decode, BpConfig, BpError};
use crate::channel::{transmit, trial_rng, ChannelError, IdsChannelParams, ReceivedSeq, TrialRng};
use crate::features::dataset::DatasetError;
use crate::features::FeatureError;
use crate::galois::{GfError, GfParams, Symbol};
use crate::inner::{
    conv_encode, gen_offset, ConvCodeSpec, InnerError, MarkerLayout, MarkerSpec, OffsetSeq,
};
use crate::outer::{lift_protograph, parse_alist, CodeError, LinearBlockCode, Protograph};

const MACKAY_96_48: &str = include_str!("../../codes/mackay_96_33_964.alist");

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config error at {field}: {msg}")]
    Config { field: String, msg: String },
    #[error("refusing to decode {copies} copies jointly (cap {cap})")]
    DecodeCap { copies: usize, cap: usize },
    #[error(
        "grid point {point}: only {errors} bit errors in {trials} trials; raise the trial count or allow rare events"
    )]
    RareEvent {
        point: String,
        errors: u64,
        trials: u64,
    },
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Inner(#[from] InnerError),
    #[error(transparent)]
    Field(#[from] GfError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Bcjr(#[from] BcjrError),
    #[error(transparent)]
    Bp(#[from] BpError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("writing {path}: {msg}")]
    Output { path: PathBuf, msg: String },
    #[error("worker pool: {0}")]
    Pool(String),
}

impl PipelineError {
    /// Process exit code for the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config { .. }
            | PipelineError::Code(_)
            | PipelineError::Inner(_)
            | PipelineError::Field(_) => 2,
            PipelineError::DecodeCap { .. } => 3,
            PipelineError::RareEvent { .. } => 4,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) enum InnerCode {
    Marker {
        spec: MarkerSpec,
        layout: MarkerLayout,
    },
    Conv {
        spec: ConvCodeSpec,
        offset: OffsetSeq,
    },
}

/// A configuration with its codes loaded.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub cfg: ExperimentConfig,
    pub field: GfParams,
    pub outer: Option<LinearBlockCode>,
    pub n_out: usize,
    pub n_in: usize,
    pub points: Vec<IdsChannelParams>,
    pub(crate) inner: InnerCode,
    fixed: Option<Vec<Symbol>>,
}

/// One sampled transmission.
#[derive(Debug, Clone)]
pub(crate) struct Sample {
    pub outer: Vec<Symbol>,
    pub inner: Vec<Symbol>,
    pub received: Vec<ReceivedSeq>,
}

/// Estimate and reference for one trial; `estimate` is `None` on a decoding failure.
pub(crate) struct Scored {
    pub reference: Vec<Symbol>,
    pub estimate: Option<Vec<Symbol>>,
}

fn config_err(field: &str, msg: impl Into<String>) -> PipelineError {
    PipelineError::Config {
        field: field.into(),
        msg: msg.into(),
    }
}

impl Experiment {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self, PipelineError> {
        cfg.validate()?;
        let (outer, field, n_out) = match &cfg.outer {
            OuterSpec::Alist { path } => {
                let path = cfg.resolve(path);
                let text = std::fs::read_to_string(&path).map_err(|e| {
                    config_err("outer.path", format!("cannot read {}: {e}", path.display()))
                })?;
                let code = parse_alist(&text)?;
                let (f, n) = (code.field().clone(), code.n());
                (Some(code), f, n)
            }
            OuterSpec::Builtin { name } => {
                let code = match name.as_str() {
                    "mackay_96_48" => parse_alist(MACKAY_96_48)?,
                    "hamming74" => LinearBlockCode::hamming74(),
                    other => {
                        return Err(config_err(
                            "outer.name",
                            format!("unknown builtin code {other:?}"),
                        ))
                    }
                };
                let (f, n) = (code.field().clone(), code.n());
                (Some(code), f, n)
            }
            OuterSpec::Protograph {
                matrix,
                lift,
                q,
                seed,
            } => {
                let field = GfParams::with_order(*q)?;
                let proto = Protograph::new(matrix.clone())?;
                let code = lift_protograph(&proto, *lift, &field, &mut trial_rng(*seed, 0))?;
                let n = code.n();
                (Some(code), field, n)
            }
            OuterSpec::Uncoded { n, q } => (None, GfParams::with_order(*q)?, *n),
        };
        let (inner, n_in) = match &cfg.inner {
            InnerSpec::Marker { marker, interval } => {
                let spec = MarkerSpec::parse(marker, *interval, &field)?;
                let layout = spec.layout(n_out);
                let n_in = layout.n_in();
                (InnerCode::Marker { spec, layout }, n_in)
            }
            InnerSpec::Conv { polys, offset_seed } => {
                if field.order() != 2 {
                    return Err(config_err(
                        "inner",
                        "convolutional inner code needs a binary outer alphabet",
                    ));
                }
                let spec = ConvCodeSpec::parse_octal(polys)?;
                let n_in = spec.coded_len(n_out);
                let offset = gen_offset(n_in, offset_seed.unwrap_or(cfg.seed));
                (InnerCode::Conv { spec, offset }, n_in)
            }
        };
        let fixed = match &cfg.codeword {
            None => None,
            Some(spec) => {
                let word: Vec<Symbol> = match spec {
                    CodewordSpec::Named(s) if s == "zeros" => vec![Symbol::ZERO; n_out],
                    CodewordSpec::Named(_) => (0..n_out).map(|i| Symbol((i % 2) as u8)).collect(),
                    CodewordSpec::Symbols(v) => v.iter().map(|&b| Symbol(b)).collect(),
                };
                if word.len() != n_out {
                    return Err(config_err(
                        "codeword",
                        format!("length {} but the outer length is {n_out}", word.len()),
                    ));
                }
                if let Some(s) = word.iter().find(|s| !field.contains(**s)) {
                    return Err(config_err(
                        "codeword",
                        format!("symbol {s} is outside GF({})", field.order()),
                    ));
                }
                if let Some(code) = &outer {
                    if !code.is_codeword(&word) {
                        return Err(config_err("codeword", "not a codeword of the outer code"));
                    }
                }
                Some(word)
            }
        };
        Ok(Experiment {
            cfg: cfg.clone(),
            field,
            outer,
            n_out,
            n_in,
            points: cfg.channel.points(),
            inner,
            fixed,
        })
    }

    pub fn outer_id(&self) -> String {
        match &self.outer {
            Some(c) => c.name().to_string(),
            None => format!("uncoded-{}-gf{}", self.n_out, self.field.order()),
        }
    }

    pub fn inner_id(&self) -> String {
        match &self.inner {
            InnerCode::Marker { spec, .. } => {
                let m: String = spec.marker.iter().map(|s| s.to_string()).collect();
                format!("marker-{m}-{}", spec.interval)
            }
            InnerCode::Conv { spec, offset } => {
                format!("conv-{}-offset{}", spec.octal(), offset.seed)
            }
        }
    }

    /// Drift window used at `ch`.
    pub fn window(&self, ch: &IdsChannelParams) -> Result<DriftWindow, PipelineError> {
        Ok(drift_bound(
            self.n_in,
            ch.p_del.max(ch.p_ins),
            self.cfg.drift_factor,
        )?)
    }

    pub(crate) fn layout(&self) -> Option<&MarkerLayout> {
        match &self.inner {
            InnerCode::Marker { layout, .. } => Some(layout),
            InnerCode::Conv { .. } => None,
        }
    }

    pub(crate) fn rng(&self, point: usize, trial: u64) -> TrialRng {
        trial_rng(self.cfg.seed, ((point as u64) << 40) | trial)
    }

    pub(crate) fn sample(
        &self,
        ch: &IdsChannelParams,
        rng: &mut TrialRng,
    ) -> Result<Sample, PipelineError> {
        let (m_min, m_max) = self.cfg.copies.bounds();
        let copies = if m_min == m_max {
            m_min
        } else {
            rng.gen_range(m_min..=m_max)
        };
        let outer = match (&self.fixed, &self.outer) {
            (Some(w), _) => w.clone(),
            (None, Some(code)) => code.encode(&code.random_message(rng))?,
            (None, None) => {
                let q = self.field.order();
                (0..self.n_out)
                    .map(|_| Symbol(rng.gen_range(0..q) as u8))
                    .collect()
            }
        };
        let inner = match &self.inner {
            InnerCode::Marker { spec, .. } => spec.encode(&outer).0,
            InnerCode::Conv { spec, offset } => {
                let bits: Vec<u8> = outer.iter().map(|s| s.0).collect();
                conv_encode(&bits, spec, offset)?
                    .into_iter()
                    .map(Symbol)
                    .collect()
            }
        };
        let received = (0..copies)
            .map(|_| transmit(&inner, &self.field, ch, rng).map(|(r, _)| r))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Sample {
            outer,
            inner,
            received,
        })
    }

    /// Inner posteriors of a marker-coded sample, `None` on a decoding failure.
    pub(crate) fn marker_posteriors(
        &self,
        s: &Sample,
        ch: &IdsChannelParams,
        win: &DriftWindow,
    ) -> Result<Option<PosteriorMatrix<f64>>, PipelineError> {
        let layout = self.layout().expect("marker inner code");
        let priors = marker_priors::<f64>(layout, self.field.order());
        let res = match self.cfg.decoder.inner {
            InnerDecoder::BcjrJoint => bcjr_joint_with(
                &s.received,
                &priors,
                ch,
                win,
                JointOptions {
                    max_copies: self.cfg.max_copies,
                },
            )
            .map(|d| d.posteriors),
            _ => bcjr_marker(&s.received[0], &priors, ch, win),
        };
        recoverable(res)
    }

    pub(crate) fn score(
        &self,
        s: &Sample,
        ch: &IdsChannelParams,
        win: &DriftWindow,
    ) -> Result<Scored, PipelineError> {
        let bp_cfg = BpConfig {
            max_iters: self.cfg.decoder.bp_iters,
            early_stop: true,
        };
        let bp = self.cfg.decoder.outer == OuterDecoder::Bp;
        match &self.inner {
            InnerCode::Marker { layout, .. } => {
                let post = self.marker_posteriors(s, ch, win)?;
                if bp {
                    let code = self.outer.as_ref().expect("validated");
                    let estimate = match post {
                        Some(p) => Some(
                            bp_decode(code, &p.select_rows(&layout.data_positions), &bp_cfg)?.hard,
                        ),
                        None => None,
                    };
                    Ok(Scored {
                        reference: s.outer.clone(),
                        estimate,
                    })
                } else if self.cfg.exclude_markers {
                    let estimate =
                        post.map(|p| p.select_rows(&layout.data_positions).hard_decision());
                    Ok(Scored {
                        reference: s.outer.clone(),
                        estimate,
                    })
                } else {
                    Ok(Scored {
                        reference: s.inner.clone(),
                        estimate: post.map(|p| p.hard_decision()),
                    })
                }
            }
            InnerCode::Conv { spec, offset } => {
                let post = recoverable(bcjr_conv::<f64>(&s.received[0], spec, offset, ch, win))?;
                let estimate = match post {
                    None => None,
                    Some(p) if bp => Some(
                        bp_decode(self.outer.as_ref().expect("validated"), &p.outer, &bp_cfg)?.hard,
                    ),
                    Some(p) => Some(p.outer.hard_decision()),
                };
                Ok(Scored {
                    reference: s.outer.clone(),
                    estimate,
                })
            }
        }
    }

    /// Inner position of each scored position, for the marker-distance annotation.
    pub(crate) fn scored_inner_positions(&self) -> Option<Vec<usize>> {
        let layout = self.layout()?;
        let data_only = self.cfg.exclude_markers || self.cfg.decoder.outer == OuterDecoder::Bp;
        Some(if data_only {
            layout.data_positions.clone()
        } else {
            (0..layout.n_in()).collect()
        })
    }
}

/// Decoding failures caused by the received sequence become `None`.
fn recoverable<X>(r: Result<X, BcjrError>) -> Result<Option<X>, PipelineError> {
    match r {
        Ok(x) => Ok(Some(x)),
        Err(BcjrError::OutOfWindow { .. } | BcjrError::ZeroProbability { .. }) => Ok(None),
        Err(BcjrError::CopyCap { copies, cap, .. }) => {
            Err(PipelineError::DecodeCap { copies, cap })
        }
        Err(e) => Err(e.into()),
    }
}
