//! Transformer inputs built from received sequences: drift-indexed sliding
//! windows, generator-derived cross-attention masks, padded multi-copy
//! batches, ECCT inputs, and the on-disk dataset format.
//!
//! Window tensors are token-major. Each token is flattened drift-index
//! major, symbol (or state output) minor, so the feature at
//! `(j, xi)` sits at `j * q + xi`. Reads that fall outside the received
//! sequence are filled with a neutral pad value.

mod batch;
pub mod dataset;
mod ecct;

pub use batch::{build_multicopy_batch, MultiCopyBatch};
pub use ecct::{apply_ecct_output, bin, build_ecct_features, phi, EcctFeatures};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bcjr::{emission_prob, BcjrError, DriftWindow, PosteriorMatrix};
use crate::channel::{IdsChannelParams, ReceivedSeq};
use crate::galois::Symbol;
use crate::inner::{conv_generator_matrix, ConvCodeSpec, OffsetSeq};
use crate::real::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FeatureError {
    #[error("{what}: expected {expected}, got {got}")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("the aggregated window is defined for binary alphabets only (q = {0})")]
    NotBinary(usize),
    #[error("{copies} copies exceed the padded batch size {max}")]
    TooManyCopies { copies: usize, max: usize },
    #[error("{copies} copies fall below the minimum of {min}")]
    TooFewCopies { copies: usize, min: usize },
    #[error("an empty batch has no feature layout")]
    EmptyBatch,
    #[error(transparent)]
    Prior(#[from] BcjrError),
}

/// Named axis of a tensor layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub size: usize,
}

impl Axis {
    pub fn new(name: &str, size: usize) -> Self {
        Axis {
            name: name.to_string(),
            size,
        }
    }
}

/// Semantic description of a `tokens x features` matrix: one token axis and
/// the feature axes in flattening order (last axis fastest).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorLayout {
    pub token_axis: Axis,
    pub feature_axes: Vec<Axis>,
}

impl TensorLayout {
    pub fn features(&self) -> usize {
        self.feature_axes.iter().map(|a| a.size).product()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTensor<T> {
    pub layout: TensorLayout,
    pub data: Vec<T>,
}

impl<T: Real> FeatureTensor<T> {
    pub fn zeros(layout: TensorLayout) -> Self {
        let n = layout.token_axis.size * layout.features();
        FeatureTensor {
            layout,
            data: vec![T::zero(); n],
        }
    }

    #[inline]
    pub fn tokens(&self) -> usize {
        self.layout.token_axis.size
    }

    #[inline]
    pub fn features(&self) -> usize {
        self.layout.features()
    }

    #[inline]
    pub fn token(&self, t: usize) -> &[T] {
        let f = self.features();
        &self.data[t * f..(t + 1) * f]
    }

    #[inline]
    pub fn token_mut(&mut self, t: usize) -> &mut [T] {
        let f = self.features();
        &mut self.data[t * f..(t + 1) * f]
    }

    /// Entry of a window tensor at token `t`, drift index `j`, symbol `x`.
    #[inline]
    pub fn at(&self, t: usize, j: usize, x: usize) -> T {
        let inner = self.layout.feature_axes.last().map_or(1, |a| a.size);
        self.token(t)[j * inner + x]
    }

    pub fn to_f32(&self) -> Vec<f32> {
        self.data.iter().map(|v| v.as_f64() as f32).collect()
    }

    pub fn cast<U: Real>(&self) -> FeatureTensor<U> {
        FeatureTensor {
            layout: self.layout.clone(),
            data: self.data.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }
}

/// Row-major boolean matrix; `true` means attention is permitted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttentionMask {
    pub rows: usize,
    pub cols: usize,
    pub allowed: Vec<bool>,
}

impl AttentionMask {
    pub fn from_rows(rows: &[Vec<bool>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged mask");
        AttentionMask {
            rows: rows.len(),
            cols,
            allowed: rows.concat(),
        }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        self.allowed[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[bool] {
        &self.allowed[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut allowed = vec![false; self.allowed.len()];
        for r in 0..self.rows {
            for c in 0..self.cols {
                allowed[c * self.rows + r] = self.get(r, c);
            }
        }
        AttentionMask {
            rows: self.cols,
            cols: self.rows,
            allowed,
        }
    }

    /// One string of `0`/`1` per row.
    pub fn to_strings(&self) -> Vec<String> {
        (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .map(|&b| if b { '1' } else { '0' })
                    .collect()
            })
            .collect()
    }

    pub fn from_strings(rows: &[String]) -> Option<Self> {
        let parsed: Option<Vec<Vec<bool>>> = rows
            .iter()
            .map(|s| {
                s.chars()
                    .map(|c| match c {
                        '0' => Some(false),
                        '1' => Some(true),
                        _ => None,
                    })
                    .collect()
            })
            .collect();
        let parsed = parsed?;
        let cols = parsed.first().map_or(0, Vec::len);
        parsed
            .iter()
            .all(|r| r.len() == cols)
            .then(|| Self::from_rows(&parsed))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowOptions {
    /// Use the prior alone instead of `prior * F` (the emission factor is dropped).
    pub drop_emission_factor: bool,
}

fn window_layout(tokens: usize, win: &DriftWindow, inner: Axis) -> TensorLayout {
    TensorLayout {
        token_axis: Axis::new("position", tokens),
        feature_axes: vec![Axis::new("drift", win.width()), inner],
    }
}

/// Received position read by input position `i` under drift `d`, if any.
#[inline]
fn read_at(i: usize, d: isize, n_rec: usize) -> Option<usize> {
    let p = i as isize + d;
    (p >= 0 && (p as usize) < n_rec).then_some(p as usize)
}

fn check_priors<T: Real>(
    r: &ReceivedSeq,
    priors: &PosteriorMatrix<T>,
) -> Result<PosteriorMatrix<T>, FeatureError> {
    if priors.rows() != r.source_len {
        return Err(FeatureError::Shape {
            what: "prior rows",
            expected: r.source_len,
            got: priors.rows(),
        });
    }
    Ok(priors.normalized_prior()?)
}

/// `Y[i, j, xi] = P(x_i = xi) F(xi, r[i + d_j])`, with `1/q` where
/// `i + d_j` is not a received position.
pub fn build_symbol_window<T: Real>(
    r: &ReceivedSeq,
    priors: &PosteriorMatrix<T>,
    ch: &IdsChannelParams,
    win: &DriftWindow,
) -> Result<FeatureTensor<T>, FeatureError> {
    build_symbol_window_with(r, priors, ch, win, WindowOptions::default())
}

pub fn build_symbol_window_with<T: Real>(
    r: &ReceivedSeq,
    priors: &PosteriorMatrix<T>,
    ch: &IdsChannelParams,
    win: &DriftWindow,
    opts: WindowOptions,
) -> Result<FeatureTensor<T>, FeatureError> {
    let priors = check_priors(r, priors)?;
    let q = priors.q();
    let n_in = r.source_len;
    let pad = T::one() / T::of(q as f64);
    let mut out = FeatureTensor::zeros(window_layout(n_in, win, Axis::new("symbol", q)));
    for i in 0..n_in {
        let prior = priors.row(i);
        let tok = out.token_mut(i);
        for j in 0..win.width() {
            let cell = &mut tok[j * q..(j + 1) * q];
            match read_at(i, win.drift(j), r.len()) {
                None => cell.iter_mut().for_each(|v| *v = pad),
                Some(p) => {
                    for (x, v) in cell.iter_mut().enumerate() {
                        *v = if opts.drop_emission_factor {
                            prior[x]
                        } else {
                            prior[x]
                                * T::of(emission_prob(Symbol(x as u8), r.symbols[p], ch.p_sub, q))
                        };
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `Y[i, j] = sum_xi P(x_i = xi) F(xi, r[i + d_j])` for binary alphabets.
/// Out-of-range reads are 1, the sum of the symbol window's pad entries.
pub fn build_aggregated_window<T: Real>(
    r: &ReceivedSeq,
    priors: &PosteriorMatrix<T>,
    ch: &IdsChannelParams,
    win: &DriftWindow,
) -> Result<FeatureTensor<T>, FeatureError> {
    if priors.q() != 2 {
        return Err(FeatureError::NotBinary(priors.q()));
    }
    let full = build_symbol_window(r, priors, ch, win)?;
    let layout = TensorLayout {
        token_axis: full.layout.token_axis.clone(),
        feature_axes: vec![Axis::new("drift", win.width())],
    };
    let mut out = FeatureTensor::zeros(layout);
    for i in 0..full.tokens() {
        let src = full.token(i);
        for (j, v) in out.token_mut(i).iter_mut().enumerate() {
            *v = src[2 * j] + src[2 * j + 1];
        }
    }
    Ok(out)
}

/// Per trellis section `i` and drift `d_j`, the joint probability of the
/// section emitting output pattern `zeta` under a uniform prior and of the
/// `n_c` received bits starting at `n_c i + d_j`, offset removed, with no
/// insertions or deletions.
///
/// Bit `l` of the pattern index is the `l`-th coded bit of the section.
/// Entries whose reads leave either the received sequence or the offset
/// are filled with `1 / 2^n_c`.
pub fn build_state_window<T: Real>(
    r: &ReceivedSeq,
    spec: &ConvCodeSpec,
    offset: &OffsetSeq,
    ch: &IdsChannelParams,
    win: &DriftWindow,
) -> Result<FeatureTensor<T>, FeatureError> {
    let n_c = spec.n_c();
    let n_in = r.source_len;
    if !n_in.is_multiple_of(n_c) {
        return Err(FeatureError::Shape {
            what: "transmitted length (multiple of n_c)",
            expected: n_c * (n_in / n_c + 1),
            got: n_in,
        });
    }
    if offset.len() != n_in {
        return Err(FeatureError::Shape {
            what: "offset length",
            expected: n_in,
            got: offset.len(),
        });
    }
    let sections = n_in / n_c;
    let patterns = 1usize << n_c;
    let uniform = T::one() / T::of(patterns as f64);
    let f_match = T::of(1.0 - ch.p_sub);
    let f_miss = T::of(ch.p_sub);
    let limit = r.len().min(n_in);
    let mut out = FeatureTensor::zeros(window_layout(
        sections,
        win,
        Axis::new("state_output", patterns),
    ));
    let mut seen = vec![0u8; n_c];
    for i in 0..sections {
        let tok = out.token_mut(i);
        for j in 0..win.width() {
            let cell = &mut tok[j * patterns..(j + 1) * patterns];
            let start = (n_c * i) as isize + win.drift(j);
            if start < 0 || start as usize + n_c > limit {
                cell.iter_mut().for_each(|v| *v = uniform);
                continue;
            }
            let s = start as usize;
            for (l, b) in seen.iter_mut().enumerate() {
                *b = r.symbols[s + l].0 ^ offset.bits[s + l];
            }
            for (z, v) in cell.iter_mut().enumerate() {
                let mut p = uniform;
                for (l, &b) in seen.iter().enumerate() {
                    p *= if ((z >> l) & 1) as u8 == b {
                        f_match
                    } else {
                        f_miss
                    };
                }
                *v = p;
            }
        }
    }
    Ok(out)
}

/// Supports of `G^T` (codeword positions attending to message sections) and
/// of `G` (the reverse), where `G` is the banded generator of the
/// zero-terminated code.
pub fn build_cross_masks(spec: &ConvCodeSpec, n_msg: usize) -> (AttentionMask, AttentionMask) {
    let g: Vec<Vec<bool>> = conv_generator_matrix(spec, n_msg)
        .into_iter()
        .map(|row| row.into_iter().map(|b| b != 0).collect())
        .collect();
    let g = AttentionMask::from_rows(&g);
    (g.transpose(), g)
}
