//! Probability-domain sum-product decoding of GF(q) LDPC codes.
//!
//! Flooding schedule: every check node updates from the previous round's
//! variable messages, then every variable node updates. Check nodes map each
//! incoming message through its edge weight (`y = h x`) and combine the
//! others by convolution over the additive group of GF(q). Messages are
//! floored at [`MESSAGE_FLOOR`] and renormalized after every update.

use thiserror::Error;

use crate::bcjr::PosteriorMatrix;
use crate::galois::Symbol;
use crate::outer::LinearBlockCode;
use crate::real::{argmax, normalize, Real};

/// Smallest probability a message entry may take.
pub const MESSAGE_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BpError {
    #[error("channel probabilities have {got} rows, code length is {expected}")]
    Length { expected: usize, got: usize },
    #[error("channel probabilities are over {got} symbols, code field has {expected}")]
    Field { expected: usize, got: usize },
    #[error("max_iters must be at least 1")]
    Iterations,
    #[error("check order must be a permutation of 0..{0}")]
    Order(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BpConfig {
    pub max_iters: usize,
    /// Stop as soon as the hard decision satisfies every check (tested
    /// before the first iteration as well).
    pub early_stop: bool,
}

impl Default for BpConfig {
    fn default() -> Self {
        BpConfig {
            max_iters: 50,
            early_stop: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BpOutput<T> {
    pub hard: Vec<Symbol>,
    pub marginals: PosteriorMatrix<T>,
    pub converged: bool,
    /// Iterations run; 0 when the channel decision was already a codeword.
    pub iterations: usize,
}

struct Edge {
    var: usize,
    /// Index of `x` in the weight-mapped domain: `mul[x] = h x`.
    mul: Vec<usize>,
}

/// Tanner graph with edges stored check-major.
struct Graph {
    edges: Vec<Edge>,
    check_ptr: Vec<usize>,
    var_edges: Vec<Vec<usize>>,
}

impl Graph {
    fn new(code: &LinearBlockCode) -> Self {
        let h = code.parity_check();
        let f = code.field();
        let mut edges = Vec::with_capacity(h.nonzeros());
        let mut check_ptr = vec![0];
        let mut var_edges = vec![Vec::new(); h.cols()];
        for r in 0..h.rows() {
            for c in 0..h.cols() {
                let w = h.get(r, c);
                if w.0 != 0 {
                    var_edges[c].push(edges.len());
                    let mul = f.elements().map(|x| f.mul(w, x).value()).collect();
                    edges.push(Edge { var: c, mul });
                }
            }
            check_ptr.push(edges.len());
        }
        Graph {
            edges,
            check_ptr,
            var_edges,
        }
    }
}

fn floor_normalize<T: Real>(v: &mut [T]) {
    let eps = T::of(MESSAGE_FLOOR);
    for x in v.iter_mut() {
        if !(*x >= eps) {
            *x = eps;
        }
    }
    normalize(v);
}

/// `out[a ^ b] += u[a] v[b]`.
#[inline]
fn xor_convolve<T: Real>(u: &[T], v: &[T], out: &mut [T]) {
    out.iter_mut().for_each(|o| *o = T::zero());
    for (a, &ua) in u.iter().enumerate() {
        if ua == T::zero() {
            continue;
        }
        for (b, &vb) in v.iter().enumerate() {
            out[a ^ b] += ua * vb;
        }
    }
}

pub fn bp_decode<T: Real>(
    code: &LinearBlockCode,
    channel: &PosteriorMatrix<T>,
    cfg: &BpConfig,
) -> Result<BpOutput<T>, BpError> {
    let order: Vec<usize> = (0..code.parity_check().rows()).collect();
    bp_decode_ordered(code, channel, cfg, &order)
}

/// [`bp_decode`] with an explicit check processing order. Under the
/// flooding schedule the result does not depend on it.
#[doc(hidden)]
pub fn bp_decode_ordered<T: Real>(
    code: &LinearBlockCode,
    channel: &PosteriorMatrix<T>,
    cfg: &BpConfig,
    check_order: &[usize],
) -> Result<BpOutput<T>, BpError> {
    let n = code.n();
    let q = code.field().order();
    if channel.rows() != n {
        return Err(BpError::Length {
            expected: n,
            got: channel.rows(),
        });
    }
    if channel.q() != q {
        return Err(BpError::Field {
            expected: q,
            got: channel.q(),
        });
    }
    if cfg.max_iters == 0 {
        return Err(BpError::Iterations);
    }
    let m = code.parity_check().rows();
    let mut seen = vec![false; m];
    if check_order.len() != m
        || check_order
            .iter()
            .any(|&c| c >= m || std::mem::replace(&mut seen[c], true))
    {
        return Err(BpError::Order(m));
    }

    let mut prior = channel.clone();
    for i in 0..n {
        floor_normalize(prior.row_mut(i));
    }
    let syndrome_ok = |hard: &[Symbol]| code.is_codeword(hard);

    let hard0 = channel.hard_decision();
    if cfg.early_stop && syndrome_ok(&hard0) {
        return Ok(BpOutput {
            hard: hard0,
            marginals: prior,
            converged: true,
            iterations: 0,
        });
    }

    let g = Graph::new(code);
    let ne = g.edges.len();
    let mut v2c = vec![T::zero(); ne * q];
    let mut c2v = vec![T::zero(); ne * q];
    for (e, edge) in g.edges.iter().enumerate() {
        v2c[e * q..(e + 1) * q].copy_from_slice(prior.row(edge.var));
    }
    let mut beliefs = prior.clone();
    let mut hard = hard0;
    let mut converged = false;
    let mut iterations = 0;

    let max_deg = g
        .check_ptr
        .windows(2)
        .map(|w| w[1] - w[0])
        .max()
        .unwrap_or(0);
    let mut fwd = vec![T::zero(); (max_deg + 1) * q];
    let mut bwd = vec![T::zero(); (max_deg + 1) * q];
    let mut mapped = vec![T::zero(); max_deg * q];
    let mut s = vec![T::zero(); q];

    for it in 1..=cfg.max_iters {
        iterations = it;
        for &c in check_order {
            let (lo, hi) = (g.check_ptr[c], g.check_ptr[c + 1]);
            let d = hi - lo;
            for (k, e) in (lo..hi).enumerate() {
                let dst = &mut mapped[k * q..(k + 1) * q];
                for (x, &y) in g.edges[e].mul.iter().enumerate() {
                    dst[y] = v2c[e * q + x];
                }
            }
            // fwd[k] combines edges before k, bwd[k] edges from k on.
            fwd[..q].iter_mut().for_each(|v| *v = T::zero());
            fwd[0] = T::one();
            for k in 0..d {
                let (done, rest) = fwd.split_at_mut((k + 1) * q);
                xor_convolve(&done[k * q..], &mapped[k * q..(k + 1) * q], &mut rest[..q]);
            }
            bwd[d * q..(d + 1) * q]
                .iter_mut()
                .for_each(|v| *v = T::zero());
            bwd[d * q] = T::one();
            for k in (0..d).rev() {
                let (head, tail) = bwd.split_at_mut((k + 1) * q);
                xor_convolve(&tail[..q], &mapped[k * q..(k + 1) * q], &mut head[k * q..]);
            }
            for (k, e) in (lo..hi).enumerate() {
                xor_convolve(
                    &fwd[k * q..(k + 1) * q],
                    &bwd[(k + 1) * q..(k + 2) * q],
                    &mut s,
                );
                let out = &mut c2v[e * q..(e + 1) * q];
                for (x, &y) in g.edges[e].mul.iter().enumerate() {
                    out[x] = s[y];
                }
                floor_normalize(out);
            }
        }

        for v in 0..n {
            let es = &g.var_edges[v];
            let p = prior.row(v);
            // Forward partial products, then a backward sweep.
            let mut acc: Vec<T> = p.to_vec();
            for &e in es {
                v2c[e * q..(e + 1) * q].copy_from_slice(&acc);
                for (a, &m) in acc.iter_mut().zip(&c2v[e * q..(e + 1) * q]) {
                    *a *= m;
                }
                normalize(&mut acc);
            }
            let belief = beliefs.row_mut(v);
            belief.copy_from_slice(&acc);
            normalize(belief);
            let mut back = vec![T::one(); q];
            for &e in es.iter().rev() {
                let out = &mut v2c[e * q..(e + 1) * q];
                for (o, &b) in out.iter_mut().zip(&back) {
                    *o *= b;
                }
                floor_normalize(out);
                for (b, &m) in back.iter_mut().zip(&c2v[e * q..(e + 1) * q]) {
                    *b *= m;
                }
                normalize(&mut back);
            }
        }
        hard = (0..n)
            .map(|v| Symbol(argmax(beliefs.row(v)) as u8))
            .collect();
        if cfg.early_stop && syndrome_ok(&hard) {
            converged = true;
            break;
        }
    }
    if !converged {
        converged = syndrome_ok(&hard);
    }
    Ok(BpOutput {
        hard,
        marginals: beliefs,
        converged,
        iterations,
    })
}
