use super::{
    consume_backward, consume_forward, fill_trans, ins_backward, ins_forward, BcjrError,
    DriftWindow, Kernel, PosteriorMatrix,
};
use crate::channel::{IdsChannelParams, ReceivedSeq};
use crate::real::{normalize, Real};

/// Copies accepted by [`bcjr_joint`] unless overridden.
pub const DEFAULT_MAX_COPIES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JointOptions {
    /// Refuse inputs with more copies than this; the trellis grows as `delta^M`.
    pub max_copies: usize,
}

impl Default for JointOptions {
    fn default() -> Self {
        JointOptions {
            max_copies: DEFAULT_MAX_COPIES,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointDecode<T> {
    pub posteriors: PosteriorMatrix<T>,
    /// Drift-tuple states over all trellis sections, `n_in * delta^M`.
    pub trellis_states: usize,
}

/// Joint BCJR over `rs.len()` independent received copies of one word.
pub fn bcjr_joint<T: Real>(
    rs: &[ReceivedSeq],
    priors: &PosteriorMatrix<T>,
    ch: &IdsChannelParams,
    win: &DriftWindow,
) -> Result<JointDecode<T>, BcjrError> {
    bcjr_joint_with(rs, priors, ch, win, JointOptions::default())
}

/// Visits the start index of every line of the tensor along one axis.
#[inline]
fn for_each_line(size: usize, stride: usize, width: usize, mut f: impl FnMut(usize)) {
    let block = stride * width;
    for outer in (0..size).step_by(block) {
        for inner in 0..stride {
            f(outer + inner);
        }
    }
}

pub fn bcjr_joint_with<T: Real>(
    rs: &[ReceivedSeq],
    priors: &PosteriorMatrix<T>,
    ch: &IdsChannelParams,
    win: &DriftWindow,
    opts: JointOptions,
) -> Result<JointDecode<T>, BcjrError> {
    let m = rs.len();
    if m == 0 {
        return Err(BcjrError::NoCopies);
    }
    let n = priors.rows();
    let q = priors.q();
    let width = win.width();
    if m > opts.max_copies {
        let states = (n as u128).saturating_mul((width as u128).saturating_pow(m as u32));
        return Err(BcjrError::CopyCap {
            copies: m,
            cap: opts.max_copies,
            states,
        });
    }
    let mut w_end = 0usize;
    let strides: Vec<usize> = (0..m).map(|k| width.pow(k as u32)).collect();
    for (k, r) in rs.iter().enumerate() {
        if r.source_len != n {
            return Err(BcjrError::Dimension {
                what: "prior rows vs. transmitted length",
                expected: r.source_len,
                got: n,
            });
        }
        w_end += win.check_final(r.drift(), Some(k))? * strides[k];
    }
    let priors = &priors.normalized_prior()?;
    let kern = Kernel::<T>::new(ch, q)?;
    let c = kern.ins_powers();
    let size = width.pow(m as u32);
    let w0: usize = (0..m)
        .map(|k| win.index(0).expect("window contains 0") * strides[k])
        .sum();
    let n_rec: Vec<isize> = rs.iter().map(|r| r.len() as isize).collect();

    let insert = |v: &mut [T], i: usize| {
        for k in 0..m {
            let limit = n_rec[k] - i as isize;
            for_each_line(size, strides[k], width, |b| {
                ins_forward(v, b, strides[k], win, limit, &c)
            });
        }
    };
    // trans[k][w] = p_T F(x, r^k[i + d]) for hypothesized symbol x.
    let mut trans = vec![vec![T::zero(); width]; m];
    let fill = |trans: &mut [Vec<T>], i: usize, x: usize| {
        for (k, t) in trans.iter_mut().enumerate() {
            fill_trans(t, win, i, &rs[k].symbols, kern.p_trans, |y| {
                kern.emission(x, y)
            });
        }
    };

    let mut alpha = vec![T::zero(); (n + 1) * size];
    alpha[w0] = T::one();
    let mut iota = vec![T::zero(); size];
    let mut tmp = vec![T::zero(); size];
    for i in 0..n {
        iota.copy_from_slice(&alpha[i * size..(i + 1) * size]);
        insert(&mut iota, i);
        let next = &mut alpha[(i + 1) * size..(i + 2) * size];
        for x in 0..q {
            let px = priors.get(i, x);
            if px == T::zero() {
                continue;
            }
            fill(&mut trans, i, x);
            tmp.copy_from_slice(&iota);
            for k in 0..m {
                for_each_line(size, strides[k], width, |b| {
                    consume_forward(&mut tmp, b, strides[k], width, kern.p_del, &trans[k])
                });
            }
            for (a, &t) in next.iter_mut().zip(&tmp) {
                *a += px * t;
            }
        }
        let s = normalize(next);
        if !(s > T::zero() && s.is_finite()) {
            return Err(BcjrError::ZeroProbability { step: i + 1 });
        }
    }

    let mut post = PosteriorMatrix::zeros(n, q);
    let mut beta = vec![T::zero(); size];
    beta[w_end] = T::one();
    let mut chi = vec![T::zero(); size];
    for i in (0..n).rev() {
        iota.copy_from_slice(&alpha[i * size..(i + 1) * size]);
        insert(&mut iota, i);
        chi.iter_mut().for_each(|v| *v = T::zero());
        for x in 0..q {
            let px = priors.get(i, x);
            if px == T::zero() {
                continue;
            }
            fill(&mut trans, i, x);
            tmp.copy_from_slice(&beta);
            for k in 0..m {
                for_each_line(size, strides[k], width, |b| {
                    consume_backward(&mut tmp, b, strides[k], width, kern.p_del, &trans[k])
                });
            }
            let mut dot = T::zero();
            for ((acc, &t), &a) in chi.iter_mut().zip(&tmp).zip(&iota) {
                *acc += px * t;
                dot += a * t;
            }
            post.row_mut(i)[x] = px * dot;
        }
        post.normalize_row(i, i + 1)?;
        for k in 0..m {
            let limit = n_rec[k] - i as isize;
            for_each_line(size, strides[k], width, |b| {
                ins_backward(&mut chi, b, strides[k], win, limit, &c)
            });
        }
        let s = normalize(&mut chi);
        if !(s > T::zero() && s.is_finite()) {
            return Err(BcjrError::ZeroProbability { step: i });
        }
        std::mem::swap(&mut beta, &mut chi);
    }
    Ok(JointDecode {
        posteriors: post,
        trellis_states: n * size,
    })
}
