use serde::{Deserialize, Serialize};

use super::{Axis, FeatureError, FeatureTensor, TensorLayout};
use crate::real::Real;

/// Windows of `M_k` copies stacked along the token axis and padded to
/// `m_max` copies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiCopyBatch<T> {
    /// `m_max * n_in` tokens; pad tokens are zero.
    pub tensor: FeatureTensor<T>,
    pub copies: usize,
    pub m_min: usize,
    pub m_max: usize,
    /// Position of each token within its sequence.
    pub position: Vec<u32>,
    /// Copy index of each token, `t / n_in`.
    pub copy: Vec<u32>,
    /// `true` for pad tokens, excluded from attention and aggregation.
    pub pad: Vec<bool>,
}

impl<T> MultiCopyBatch<T> {
    pub fn real_tokens(&self) -> usize {
        self.pad.iter().filter(|&&p| !p).count()
    }
}

pub fn build_multicopy_batch<T: Real>(
    tensors: &[FeatureTensor<T>],
    m_min: usize,
    m_max: usize,
) -> Result<MultiCopyBatch<T>, FeatureError> {
    let first = tensors.first().ok_or(FeatureError::EmptyBatch)?;
    let copies = tensors.len();
    if copies > m_max {
        return Err(FeatureError::TooManyCopies { copies, max: m_max });
    }
    if copies < m_min {
        return Err(FeatureError::TooFewCopies { copies, min: m_min });
    }
    let n_in = first.tokens();
    let width = first.features();
    for t in tensors {
        if t.tokens() != n_in {
            return Err(FeatureError::Shape {
                what: "tokens per copy",
                expected: n_in,
                got: t.tokens(),
            });
        }
        if t.layout.feature_axes != first.layout.feature_axes {
            return Err(FeatureError::Shape {
                what: "features per token",
                expected: width,
                got: t.features(),
            });
        }
    }
    let total = m_max * n_in;
    let layout = TensorLayout {
        token_axis: Axis::new("copy_position", total),
        feature_axes: first.layout.feature_axes.clone(),
    };
    let mut data = Vec::with_capacity(total * width);
    for t in tensors {
        data.extend_from_slice(&t.data);
    }
    data.resize(total * width, T::zero());
    let position = (0..total).map(|t| (t % n_in) as u32).collect();
    let copy = (0..total).map(|t| (t / n_in) as u32).collect();
    let pad = (0..total).map(|t| t >= copies * n_in).collect();
    Ok(MultiCopyBatch {
        tensor: FeatureTensor { layout, data },
        copies,
        m_min,
        m_max,
        position,
        copy,
        pad,
    })
}
