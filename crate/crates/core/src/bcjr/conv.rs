use super::{
    consume_backward, consume_forward, fill_trans, ins_backward, ins_forward, BcjrError,
    DriftWindow, Kernel, PosteriorMatrix,
};
use crate::channel::{IdsChannelParams, ReceivedSeq};
use crate::inner::{ConvCodeSpec, OffsetSeq};
use crate::real::{normalize, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct ConvPosteriors<T> {
    /// Message bits, `n_msg x 2`.
    pub outer: PosteriorMatrix<T>,
    /// Transmitted (offset-added) codeword bits, `n_in x 2`.
    pub inner: PosteriorMatrix<T>,
}

/// BCJR on the product of encoder memory states and drift.
///
/// Each trellis section emits `n_c` coded bits; every bit is preceded by up
/// to `I_max` insertions and then deleted or transmitted. Message bits carry
/// uniform priors and the `m` termination inputs are fixed to zero, so the
/// path must end in memory state 0 with drift `n_rec - n_in`.
pub fn bcjr_conv<T: Real>(
    r: &ReceivedSeq,
    spec: &ConvCodeSpec,
    offset: &OffsetSeq,
    ch: &IdsChannelParams,
    win: &DriftWindow,
) -> Result<ConvPosteriors<T>, BcjrError> {
    let n_c = spec.n_c();
    let n_in = r.source_len;
    if !n_in.is_multiple_of(n_c) || n_in / n_c <= spec.memory {
        return Err(BcjrError::Dimension {
            what: "transmitted length for this code",
            expected: n_c * (n_in / n_c).max(spec.memory + 1),
            got: n_in,
        });
    }
    if offset.len() != n_in {
        return Err(BcjrError::Dimension {
            what: "offset length",
            expected: n_in,
            got: offset.len(),
        });
    }
    let steps = n_in / n_c;
    let n_msg = steps - spec.memory;
    let kern = Kernel::<T>::new(ch, 2)?;
    let c = kern.ins_powers();
    let width = win.width();
    let n_rec = r.len() as isize;
    let w_end = win.check_final(r.drift(), None)?;
    let w0 = win.index(0).expect("window contains 0");
    let n_states = spec.num_states();
    let layer = n_states * width;
    let half = T::of(0.5);

    // trans[p][y] for transmitted bit y at coded position p.
    let mut trans = vec![T::zero(); n_in * 2 * width];
    for p in 0..n_in {
        for y in 0..2 {
            let t = &mut trans[(p * 2 + y) * width..(p * 2 + y + 1) * width];
            fill_trans(t, win, p, &r.symbols, kern.p_trans, |rv| {
                kern.emission(y, rv)
            });
        }
    }
    let trans_of = |p: usize, y: usize| &trans[(p * 2 + y) * width..(p * 2 + y + 1) * width];
    // Edge table: (next state, per-bit transmitted symbol) for each (t, s, u).
    let edge = |t: usize, s: usize, u: u8| {
        let (out, next) = spec.step(s, u);
        let ys: Vec<usize> = (0..n_c)
            .map(|l| (ConvCodeSpec::output_bit(out, l) ^ offset.bits[t * n_c + l]) as usize)
            .collect();
        (next, ys)
    };
    let inputs = |t: usize| if t < n_msg { &[0u8, 1][..] } else { &[0u8][..] };
    let prior = |t: usize| if t < n_msg { half } else { T::one() };

    let mut alpha = vec![T::zero(); (steps + 1) * layer];
    alpha[w0] = T::one();
    let mut v = vec![T::zero(); width];
    for t in 0..steps {
        let (done, rest) = alpha.split_at_mut((t + 1) * layer);
        let cur = &done[t * layer..];
        let next = &mut rest[..layer];
        for s in 0..n_states {
            let src = &cur[s * width..(s + 1) * width];
            if src.iter().all(|&a| a == T::zero()) {
                continue;
            }
            for &u in inputs(t) {
                let (ns, ys) = edge(t, s, u);
                v.copy_from_slice(src);
                for (l, &y) in ys.iter().enumerate() {
                    let p = t * n_c + l;
                    ins_forward(&mut v, 0, 1, win, n_rec - p as isize, &c);
                    consume_forward(&mut v, 0, 1, width, kern.p_del, trans_of(p, y));
                }
                let pu = prior(t);
                for (a, &b) in next[ns * width..(ns + 1) * width].iter_mut().zip(&v) {
                    *a += pu * b;
                }
            }
        }
        let sum = normalize(next);
        if !(sum > T::zero() && sum.is_finite()) {
            return Err(BcjrError::ZeroProbability { step: t + 1 });
        }
    }

    let mut outer = PosteriorMatrix::zeros(n_msg, 2);
    let mut inner = PosteriorMatrix::zeros(n_in, 2);
    let mut beta = vec![T::zero(); layer];
    beta[w_end] = T::one();
    let mut prev = vec![T::zero(); layer];
    for t in (0..steps).rev() {
        prev.iter_mut().for_each(|x| *x = T::zero());
        let cur = &alpha[t * layer..(t + 1) * layer];
        let mut bit_mass = [T::zero(); 2];
        let mut coded_mass = vec![[T::zero(); 2]; n_c];
        for s in 0..n_states {
            let a_s = &cur[s * width..(s + 1) * width];
            for &u in inputs(t) {
                let (ns, ys) = edge(t, s, u);
                v.copy_from_slice(&beta[ns * width..(ns + 1) * width]);
                if v.iter().all(|&b| b == T::zero()) {
                    continue;
                }
                for (l, &y) in ys.iter().enumerate().rev() {
                    let p = t * n_c + l;
                    consume_backward(&mut v, 0, 1, width, kern.p_del, trans_of(p, y));
                    ins_backward(&mut v, 0, 1, win, n_rec - p as isize, &c);
                }
                let pu = prior(t);
                let mut dot = T::zero();
                for ((acc, &b), &a) in prev[s * width..(s + 1) * width].iter_mut().zip(&v).zip(a_s)
                {
                    *acc += pu * b;
                    dot += a * b;
                }
                let pe = pu * dot;
                bit_mass[u as usize] += pe;
                for (l, &y) in ys.iter().enumerate() {
                    coded_mass[l][y] += pe;
                }
            }
        }
        if t < n_msg {
            outer.row_mut(t).copy_from_slice(&bit_mass);
            outer.normalize_row(t, t + 1)?;
        }
        for (l, m) in coded_mass.iter().enumerate() {
            let p = t * n_c + l;
            inner.row_mut(p).copy_from_slice(m);
            inner.normalize_row(p, t + 1)?;
        }
        let sum = normalize(&mut prev);
        if !(sum > T::zero() && sum.is_finite()) {
            return Err(BcjrError::ZeroProbability { step: t });
        }
        std::mem::swap(&mut beta, &mut prev);
    }
    Ok(ConvPosteriors { outer, inner })
}
