//! MAP symbol posteriors over the IDS channel by forward-backward recursion
//! on drift trellises.
//!
//! The drift `d` before input symbol `i` (0-based count of consumed symbols)
//! is the number of insertions minus deletions so far, so the next
//! transmitted symbol lands at received position `i + d`. Every consumed
//! symbol is preceded by `k <= I_max` insertions, each emitting a uniform
//! symbol, and then either deleted or transmitted through the substitution
//! kernel `F`. Recursions run in the linear domain, each step normalized.
//!
//! * [`bcjr_marker`] single received copy, per-symbol priors (markers carry degenerate priors).
//! * [`bcjr_joint`] `M` copies of the same word on the product drift trellis.
//! * [`bcjr_conv`] zero-terminated convolutional inner code with offset.

mod conv;
mod joint;
mod marker;

pub use conv::{bcjr_conv, ConvPosteriors};
pub use joint::{bcjr_joint, bcjr_joint_with, JointDecode, JointOptions, DEFAULT_MAX_COPIES};
pub use marker::bcjr_marker;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::IdsChannelParams;
use crate::galois::Symbol;
use crate::inner::MarkerLayout;
use crate::real::{argmax, normalize, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BcjrError {
    #[error("final drift {drift}{} lies outside the window [{d_min}, {d_max}]", copy_suffix(*.copy))]
    OutOfWindow {
        drift: isize,
        d_min: isize,
        d_max: isize,
        copy: Option<usize>,
    },
    #[error("all trellis paths have zero probability at step {step}")]
    ZeroProbability { step: usize },
    #[error("{what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("prior row {row} is not a non-negative finite vector")]
    BadPrior { row: usize },
    #[error(
        "joint decoding of {copies} copies exceeds the cap of {cap}: the product trellis would hold {states} states"
    )]
    CopyCap {
        copies: usize,
        cap: usize,
        states: u128,
    },
    #[error("at least one received copy is required")]
    NoCopies,
    #[error("invalid drift window: {0}")]
    Window(String),
    #[error("symbol alphabet must have at least two letters")]
    Alphabet,
}

fn copy_suffix(copy: Option<usize>) -> String {
    copy.map(|c| format!(" of copy {c}")).unwrap_or_default()
}

/// Range of drift values tracked by a decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DriftWindow {
    pub d_min: isize,
    pub d_max: isize,
}

impl DriftWindow {
    pub fn new(d_min: isize, d_max: isize) -> Result<Self, BcjrError> {
        if d_min > 0 || d_max < 0 {
            return Err(BcjrError::Window(format!(
                "[{d_min}, {d_max}] must contain 0"
            )));
        }
        Ok(DriftWindow { d_min, d_max })
    }

    pub fn symmetric(d_max: usize) -> Self {
        DriftWindow {
            d_min: -(d_max as isize),
            d_max: d_max as isize,
        }
    }

    /// Number of drift states, `d_max - d_min + 1`.
    pub fn width(&self) -> usize {
        (self.d_max - self.d_min + 1) as usize
    }

    pub fn contains(&self, d: isize) -> bool {
        (self.d_min..=self.d_max).contains(&d)
    }

    /// Drift value at window index `w`.
    #[inline]
    pub fn drift(&self, w: usize) -> isize {
        self.d_min + w as isize
    }

    pub fn index(&self, d: isize) -> Option<usize> {
        self.contains(d).then(|| (d - self.d_min) as usize)
    }

    pub(crate) fn check_final(
        &self,
        drift: isize,
        copy: Option<usize>,
    ) -> Result<usize, BcjrError> {
        self.index(drift).ok_or(BcjrError::OutOfWindow {
            drift,
            d_min: self.d_min,
            d_max: self.d_max,
            copy,
        })
    }
}

/// Symmetric window `d_max = ceil(factor * sqrt(n_in p_del / (1 - p_del)))`.
pub fn drift_bound(n_in: usize, p_del: f64, factor: f64) -> Result<DriftWindow, BcjrError> {
    if !(0.0..1.0).contains(&p_del) {
        return Err(BcjrError::Window(format!(
            "p_del = {p_del} must lie in [0, 1)"
        )));
    }
    if !(factor >= 0.0 && factor.is_finite()) {
        return Err(BcjrError::Window(format!(
            "factor {factor} must be finite and non-negative"
        )));
    }
    let d = (factor * (n_in as f64 * p_del / (1.0 - p_del)).sqrt()).ceil();
    Ok(DriftWindow::symmetric(d as usize))
}

/// Default drift window factor.
pub const DRIFT_FACTOR: f64 = 5.0;

/// Row-stochastic `n x q` matrix of per-position symbol probabilities.
/// Also used for priors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorMatrix<T> {
    rows: usize,
    q: usize,
    data: Vec<T>,
}

impl<T: Real> PosteriorMatrix<T> {
    pub fn uniform(rows: usize, q: usize) -> Self {
        PosteriorMatrix {
            rows,
            q,
            data: vec![T::one() / T::of(q as f64); rows * q],
        }
    }

    pub fn zeros(rows: usize, q: usize) -> Self {
        PosteriorMatrix {
            rows,
            q,
            data: vec![T::zero(); rows * q],
        }
    }

    /// Indicator rows for a known word.
    pub fn degenerate(word: &[Symbol], q: usize) -> Self {
        let mut m = Self::zeros(word.len(), q);
        for (i, s) in word.iter().enumerate() {
            m.row_mut(i)[s.value()] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self, BcjrError> {
        let q = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * q);
        for r in rows {
            if r.len() != q {
                return Err(BcjrError::Dimension {
                    what: "row length",
                    expected: q,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(PosteriorMatrix {
            rows: rows.len(),
            q,
            data,
        })
    }

    pub fn from_flat(rows: usize, q: usize, data: Vec<T>) -> Result<Self, BcjrError> {
        if data.len() != rows * q {
            return Err(BcjrError::Dimension {
                what: "flat data length",
                expected: rows * q,
                got: data.len(),
            });
        }
        Ok(PosteriorMatrix { rows, q, data })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn q(&self) -> usize {
        self.q
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.q..(i + 1) * self.q]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.q..(i + 1) * self.q]
    }

    #[inline]
    pub fn get(&self, i: usize, x: usize) -> T {
        self.data[i * self.q + x]
    }

    pub fn as_flat(&self) -> &[T] {
        &self.data
    }

    /// Per-row argmax, ties toward the smaller symbol.
    pub fn hard_decision(&self) -> Vec<Symbol> {
        (0..self.rows)
            .map(|i| Symbol(argmax(self.row(i)) as u8))
            .collect()
    }

    /// Largest deviation of any row sum from 1.
    pub fn max_row_defect(&self) -> f64 {
        (0..self.rows)
            .map(|i| (self.row(i).iter().copied().sum::<T>().as_f64() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.q), (other.rows, other.q));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a.as_f64() - b.as_f64()).abs())
            .fold(0.0, f64::max)
    }

    /// Submatrix of the listed rows.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.q);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        PosteriorMatrix {
            rows: idx.len(),
            q: self.q,
            data,
        }
    }

    pub fn cast<U: Real>(&self) -> PosteriorMatrix<U> {
        PosteriorMatrix {
            rows: self.rows,
            q: self.q,
            data: self.data.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }

    /// Checks every row is a non-negative finite nonzero vector and returns
    /// the row-normalized copy the recursions work with.
    pub(crate) fn normalized_prior(&self) -> Result<Self, BcjrError> {
        let mut out = self.clone();
        for i in 0..self.rows {
            let r = out.row_mut(i);
            if r.iter().any(|v| !v.is_finite() || *v < T::zero()) {
                return Err(BcjrError::BadPrior { row: i });
            }
            let s = normalize(r);
            if !(s > T::zero() && s.is_finite()) {
                return Err(BcjrError::BadPrior { row: i });
            }
        }
        Ok(out)
    }

    /// Normalizes row `i`, failing on a zero row.
    pub(crate) fn normalize_row(&mut self, i: usize, step: usize) -> Result<(), BcjrError> {
        let s = normalize(self.row_mut(i));
        if s > T::zero() && s.is_finite() {
            Ok(())
        } else {
            Err(BcjrError::ZeroProbability { step })
        }
    }
}

/// Uniform rows at data positions, indicator rows at marker positions.
pub fn marker_priors<T: Real>(layout: &MarkerLayout, q: usize) -> PosteriorMatrix<T> {
    let mut p = PosteriorMatrix::uniform(layout.n_in(), q);
    for (i, slot) in layout.slots.iter().enumerate() {
        if let Some(s) = slot {
            let row = p.row_mut(i);
            row.iter_mut().for_each(|v| *v = T::zero());
            row[s.value()] = T::one();
        }
    }
    p
}

/// Channel constants converted to the working scalar.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Kernel<T> {
    pub p_del: T,
    pub p_trans: T,
    /// `p_ins / q`: weight of one insertion, uniform emission included.
    pub ins: T,
    pub i_max: usize,
    /// `F(x, y)` for `x == y`.
    pub f_match: T,
    /// `F(x, y)` for `x != y`.
    pub f_miss: T,
}

impl<T: Real> Kernel<T> {
    pub fn new(ch: &IdsChannelParams, q: usize) -> Result<Self, BcjrError> {
        if q < 2 {
            return Err(BcjrError::Alphabet);
        }
        Ok(Kernel {
            p_del: T::of(ch.p_del),
            p_trans: T::of(ch.p_trans()),
            ins: T::of(ch.p_ins / q as f64),
            i_max: ch.i_max,
            f_match: T::of(1.0 - ch.p_sub),
            f_miss: T::of(ch.p_sub / (q - 1) as f64),
        })
    }

    #[inline]
    pub fn emission(&self, x: usize, y: usize) -> T {
        if x == y {
            self.f_match
        } else {
            self.f_miss
        }
    }

    /// `c_k = (p_ins / q)^k`, `k = 0..=I_max`.
    pub fn ins_powers(&self) -> Vec<T> {
        let mut v = Vec::with_capacity(self.i_max + 1);
        let mut c = T::one();
        for _ in 0..=self.i_max {
            v.push(c);
            c *= self.ins;
        }
        v
    }
}

/// Substitution kernel `F(x, y)`: `1 - p_sub` on a match, `p_sub / (q - 1)` otherwise.
pub fn emission_prob(x: Symbol, y: Symbol, p_sub: f64, q: usize) -> f64 {
    if x == y {
        1.0 - p_sub
    } else {
        p_sub / (q - 1) as f64
    }
}

/// Insertion sweep along a strided axis of a state tensor.
///
/// `dst[d] = [pos + d <= n_rec] * sum_k c_k src[d - k]`, where `pos` is the
/// number of symbols consumed so far and `d` the drift at window index `w`.
/// Runs in place from the top index down.
#[inline]
pub(crate) fn ins_forward<T: Real>(
    v: &mut [T],
    base: usize,
    stride: usize,
    win: &DriftWindow,
    limit: isize,
    c: &[T],
) {
    let width = win.width();
    for w in (0..width).rev() {
        let at = base + w * stride;
        if win.drift(w) > limit {
            v[at] = T::zero();
            continue;
        }
        let mut acc = v[at];
        for (k, &ck) in c.iter().enumerate().skip(1) {
            if k > w {
                break;
            }
            acc += ck * v[at - k * stride];
        }
        v[at] = acc;
    }
}

/// Transpose of [`ins_forward`]: `dst[w] = sum_k c_k [valid(w + k)] src[w + k]`.
#[inline]
pub(crate) fn ins_backward<T: Real>(
    v: &mut [T],
    base: usize,
    stride: usize,
    win: &DriftWindow,
    limit: isize,
    c: &[T],
) {
    let width = win.width();
    for w in 0..width {
        let at = base + w * stride;
        let mut acc = if win.drift(w) <= limit {
            v[at]
        } else {
            T::zero()
        };
        for (k, &ck) in c.iter().enumerate().skip(1) {
            let wk = w + k;
            if wk >= width {
                break;
            }
            if win.drift(wk) <= limit {
                acc += ck * v[at + k * stride];
            }
        }
        v[at] = acc;
    }
}

/// Consumption along an axis: `dst[w] = p_del src[w + 1] + trans[w] src[w]`.
#[inline]
pub(crate) fn consume_forward<T: Real>(
    v: &mut [T],
    base: usize,
    stride: usize,
    width: usize,
    p_del: T,
    trans: &[T],
) {
    for w in 0..width {
        let at = base + w * stride;
        let next = if w + 1 < width {
            v[at + stride]
        } else {
            T::zero()
        };
        v[at] = p_del * next + trans[w] * v[at];
    }
}

/// Transpose of [`consume_forward`]: `dst[w] = trans[w] src[w] + p_del src[w - 1]`.
#[inline]
pub(crate) fn consume_backward<T: Real>(
    v: &mut [T],
    base: usize,
    stride: usize,
    width: usize,
    p_del: T,
    trans: &[T],
) {
    for w in (0..width).rev() {
        let at = base + w * stride;
        let prev = if w > 0 { v[at - stride] } else { T::zero() };
        v[at] = trans[w] * v[at] + p_del * prev;
    }
}

/// Fills `trans[w] = p_trans * e(w)` for the symbol consumed after `pos`
/// symbols, where `e(w)` is `emit(r[pos + d])` when that received index
/// exists and zero otherwise.
#[inline]
pub(crate) fn fill_trans<T: Real>(
    trans: &mut [T],
    win: &DriftWindow,
    pos: usize,
    r: &[Symbol],
    p_trans: T,
    mut emit: impl FnMut(usize) -> T,
) {
    for (w, t) in trans.iter_mut().enumerate() {
        let idx = pos as isize + win.drift(w);
        *t = if idx >= 0 && (idx as usize) < r.len() {
            p_trans * emit(r[idx as usize].value())
        } else {
            T::zero()
        };
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drift_bound_examples() {
        assert_eq!(drift_bound(144, 0.0, 5.0).unwrap().width(), 1);
        let w = drift_bound(144, 0.02, 5.0).unwrap();
        assert_eq!((w.d_max, w.width()), (9, 19));
        assert_eq!(drift_bound(196, 0.05, 5.0).unwrap().d_max, 17);
        assert_eq!(drift_bound(144, 0.05, 5.0).unwrap().d_max, 14);
        assert!(drift_bound(10, 1.0, 5.0).is_err());
    }

    #[test]
    fn window_must_contain_zero() {
        assert!(DriftWindow::new(1, 3).is_err());
        assert!(DriftWindow::new(-2, -1).is_err());
        let w = DriftWindow::new(-2, 3).unwrap();
        assert_eq!(
            (w.width(), w.index(-2), w.index(3), w.index(4)),
            (6, Some(0), Some(5), None)
        );
    }

    #[test]
    fn emission_rows_sum_to_one() {
        for q in [2usize, 4, 8] {
            for p in [0.0, 0.012, 0.3] {
                for y in 0..q {
                    let s: f64 = (0..q)
                        .map(|x| emission_prob(Symbol(x as u8), Symbol(y as u8), p, q))
                        .sum();
                    assert!((s - 1.0).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn strided_ops_are_mutual_transposes() {
        // <A x, y> == <x, A^T y> for each single-axis operator.
        let win = DriftWindow::new(-3, 4).unwrap();
        let n = win.width();
        let c = [1.0, 0.3, 0.07];
        let trans: Vec<f64> = (0..n).map(|w| 0.1 + 0.05 * w as f64).collect();
        let x: Vec<f64> = (0..n).map(|i| ((i * 7 + 3) % 5) as f64 + 0.5).collect();
        let y: Vec<f64> = (0..n).map(|i| ((i * 3 + 1) % 4) as f64 + 0.25).collect();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();
        for limit in [-1isize, 2, 10] {
            let (mut ax, mut aty) = (x.clone(), y.clone());
            ins_forward(&mut ax, 0, 1, &win, limit, &c);
            ins_backward(&mut aty, 0, 1, &win, limit, &c);
            assert!((dot(&ax, &y) - dot(&x, &aty)).abs() < 1e-12);
        }
        let (mut ax, mut aty) = (x.clone(), y.clone());
        consume_forward(&mut ax, 0, 1, n, 0.2, &trans);
        consume_backward(&mut aty, 0, 1, n, 0.2, &trans);
        assert!((dot(&ax, &y) - dot(&x, &aty)).abs() < 1e-12);
    }

    #[test]
    fn hard_decision_ties_go_low() {
        let m = PosteriorMatrix::from_rows(&[vec![0.5, 0.5], vec![0.2, 0.8]]).unwrap();
        assert_eq!(m.hard_decision(), vec![Symbol(0), Symbol(1)]);
    }
}
