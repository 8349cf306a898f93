use super::{
    consume_backward, consume_forward, ins_backward, ins_forward, BcjrError, DriftWindow, Kernel,
    PosteriorMatrix,
};
use crate::channel::{IdsChannelParams, ReceivedSeq};
use crate::real::{normalize, Real};

/// Single-copy BCJR with per-position symbol priors.
///
/// Marker positions are expressed through degenerate prior rows; data
/// positions normally carry uniform rows. The final drift
/// `n_rec - n_in` must lie inside `win`.
pub fn bcjr_marker<T: Real>(
    r: &ReceivedSeq,
    priors: &PosteriorMatrix<T>,
    ch: &IdsChannelParams,
    win: &DriftWindow,
) -> Result<PosteriorMatrix<T>, BcjrError> {
    let n = priors.rows();
    let q = priors.q();
    if r.source_len != n {
        return Err(BcjrError::Dimension {
            what: "prior rows vs. transmitted length",
            expected: r.source_len,
            got: n,
        });
    }
    let priors = &priors.normalized_prior()?;
    let k = Kernel::<T>::new(ch, q)?;
    let c = k.ins_powers();
    let width = win.width();
    let n_rec = r.len() as isize;
    let w_end = win.check_final(r.drift(), None)?;
    let w0 = win.index(0).expect("window contains 0");
    let rs = &r.symbols;

    // Transmission weight at drift index w for row i: p_T * sum_x prior(x) F(x, y).
    let trans_row = |i: usize, trans: &mut [T]| {
        let row = priors.row(i);
        let total: T = row.iter().copied().sum();
        for (w, t) in trans.iter_mut().enumerate() {
            let idx = i as isize + win.drift(w);
            *t = if idx >= 0 && idx < n_rec {
                let y = rs[idx as usize].value();
                k.p_trans * (k.f_miss * total + (k.f_match - k.f_miss) * row[y])
            } else {
                T::zero()
            };
        }
    };

    let mut alpha = vec![T::zero(); (n + 1) * width];
    alpha[w0] = T::one();
    let mut trans = vec![T::zero(); width];
    for i in 0..n {
        let (done, rest) = alpha.split_at_mut((i + 1) * width);
        let next = &mut rest[..width];
        next.copy_from_slice(&done[i * width..]);
        ins_forward(next, 0, 1, win, n_rec - i as isize, &c);
        trans_row(i, &mut trans);
        consume_forward(next, 0, 1, width, k.p_del, &trans);
        let s = normalize(next);
        if !(s > T::zero() && s.is_finite()) {
            return Err(BcjrError::ZeroProbability { step: i + 1 });
        }
    }

    let mut post = PosteriorMatrix::zeros(n, q);
    let mut beta = vec![T::zero(); width];
    beta[w_end] = T::one();
    let mut iota = vec![T::zero(); width];
    let mut by_symbol = vec![T::zero(); q];
    for i in (0..n).rev() {
        iota.copy_from_slice(&alpha[i * width..(i + 1) * width]);
        ins_forward(&mut iota, 0, 1, win, n_rec - i as isize, &c);

        // Deletion mass and transmission mass split by the received symbol.
        let mut del = T::zero();
        by_symbol.iter_mut().for_each(|v| *v = T::zero());
        for w in 0..width {
            if iota[w] == T::zero() {
                continue;
            }
            if w > 0 {
                del += iota[w] * beta[w - 1];
            }
            let idx = i as isize + win.drift(w);
            if idx >= 0 && idx < n_rec {
                by_symbol[rs[idx as usize].value()] += iota[w] * beta[w];
            }
        }
        let trans_total: T = by_symbol.iter().copied().sum();
        let row = post.row_mut(i);
        for (x, out) in row.iter_mut().enumerate() {
            let f_sum = k.f_miss * trans_total + (k.f_match - k.f_miss) * by_symbol[x];
            *out = priors.get(i, x) * (k.p_del * del + k.p_trans * f_sum);
        }
        post.normalize_row(i, i + 1)?;

        trans_row(i, &mut trans);
        consume_backward(&mut beta, 0, 1, width, k.p_del, &trans);
        ins_backward(&mut beta, 0, 1, win, n_rec - i as isize, &c);
        let s = normalize(&mut beta);
        if !(s > T::zero() && s.is_finite()) {
            return Err(BcjrError::ZeroProbability { step: i });
        }
    }
    Ok(post)
}
