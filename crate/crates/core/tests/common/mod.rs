//! Exhaustive reference computations shared by integration tests.
//!
//! Everything here enumerates channel event traces explicitly instead of
//! running a trellis recursion, so it is independent of the decoders.
#![allow(dead_code)]

use idscodec_core::bcjr::PosteriorMatrix;
use idscodec_core::channel::{IdsChannelParams, ReceivedSeq};
use idscodec_core::galois::Symbol;
use idscodec_core::inner::{conv_encode, ConvCodeSpec, OffsetSeq};

/// One way the channel could have produced a received sequence: for each
/// input position, the number of insertions before it and the received
/// index it was transmitted to (`None` when deleted).
#[derive(Debug, Clone)]
pub struct Trace {
    pub inserts: Vec<usize>,
    pub landed: Vec<Option<usize>>,
}

impl Trace {
    /// Probability of the event sequence excluding the substitution kernel.
    pub fn weight(&self, ch: &IdsChannelParams, q: usize) -> f64 {
        let mut w = 1.0;
        for (k, l) in self.inserts.iter().zip(&self.landed) {
            w *= (ch.p_ins / q as f64).powi(*k as i32);
            w *= if l.is_some() {
                1.0 - ch.p_ins - ch.p_del
            } else {
                ch.p_del
            };
        }
        w
    }
}

/// Calls `visit` on every trace with at most `i_max` insertions per input
/// symbol mapping `n` inputs onto exactly `n_rec` received symbols.
pub fn for_each_trace(n: usize, n_rec: usize, i_max: usize, mut visit: impl FnMut(&Trace)) {
    fn go(
        i: usize,
        j: usize,
        n: usize,
        n_rec: usize,
        i_max: usize,
        cur: &mut Trace,
        visit: &mut dyn FnMut(&Trace),
    ) {
        if i == n {
            if j == n_rec {
                visit(cur);
            }
            return;
        }
        // Each remaining symbol accounts for at most i_max + 1 received symbols.
        if j > n_rec || n_rec - j > (n - i) * (i_max + 1) {
            return;
        }
        for k in 0..=i_max {
            if j + k > n_rec {
                break;
            }
            cur.inserts.push(k);
            cur.landed.push(None);
            go(i + 1, j + k, n, n_rec, i_max, cur, visit);
            cur.landed.pop();
            if j + k < n_rec {
                cur.landed.push(Some(j + k));
                go(i + 1, j + k + 1, n, n_rec, i_max, cur, visit);
                cur.landed.pop();
            }
            cur.inserts.pop();
        }
    }
    let mut cur = Trace {
        inserts: Vec::with_capacity(n),
        landed: Vec::with_capacity(n),
    };
    go(0, 0, n, n_rec, i_max, &mut cur, &mut visit);
}

pub fn enumerate_traces(n: usize, n_rec: usize, i_max: usize) -> Vec<Trace> {
    let mut out = Vec::new();
    for_each_trace(n, n_rec, i_max, |t| out.push(t.clone()));
    out
}

pub fn f(x: usize, y: usize, p_sub: f64, q: usize) -> f64 {
    if x == y {
        1.0 - p_sub
    } else {
        p_sub / (q - 1) as f64
    }
}

/// Per-position emission vectors `g_i(x)` for one trace.
fn emission_vectors(t: &Trace, r: &[Symbol], p_sub: f64, q: usize) -> Vec<Vec<f64>> {
    t.landed
        .iter()
        .map(|l| match l {
            None => vec![1.0; q],
            Some(j) => (0..q).map(|x| f(x, r[*j].value(), p_sub, q)).collect(),
        })
        .collect()
}

/// Marginalizes `prior_i(x) g_i(x) prod_{j != i} sum_x prior_j g_j` over a
/// set of trace tuples, each given as its scalar weight and per-position
/// emission vectors (already multiplied across copies).
fn marginals(
    terms: impl Iterator<Item = (f64, Vec<Vec<f64>>)>,
    priors: &[Vec<f64>],
) -> (Vec<Vec<f64>>, f64) {
    let n = priors.len();
    let q = priors.first().map_or(0, Vec::len);
    let mut acc = vec![vec![0.0; q]; n];
    let mut total = 0.0;
    for (w, g) in terms {
        let sums: Vec<f64> = (0..n)
            .map(|i| (0..q).map(|x| priors[i][x] * g[i][x]).sum())
            .collect();
        let all: f64 = sums.iter().product();
        total += w * all;
        for i in 0..n {
            let others: f64 = (0..n).filter(|&j| j != i).map(|j| sums[j]).product();
            for x in 0..q {
                acc[i][x] += w * priors[i][x] * g[i][x] * others;
            }
        }
    }
    (normalize_rows(acc), total)
}

fn normalize_rows(mut m: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    for row in &mut m {
        let s: f64 = row.iter().sum();
        if s > 0.0 {
            row.iter_mut().for_each(|v| *v /= s);
        }
    }
    m
}

/// Exact single-copy posteriors and the total likelihood `P(r)`.
pub fn oracle_marker(
    r: &ReceivedSeq,
    priors: &[Vec<f64>],
    ch: &IdsChannelParams,
    q: usize,
) -> (Vec<Vec<f64>>, f64) {
    let traces = enumerate_traces(priors.len(), r.len(), ch.i_max);
    marginals(
        traces.iter().map(|t| {
            (
                t.weight(ch, q),
                emission_vectors(t, &r.symbols, ch.p_sub, q),
            )
        }),
        priors,
    )
}

/// Same quantity by enumerating every input word as well as every trace.
pub fn oracle_marker_words(
    r: &ReceivedSeq,
    priors: &[Vec<f64>],
    ch: &IdsChannelParams,
    q: usize,
) -> Vec<Vec<f64>> {
    let n = priors.len();
    let traces = enumerate_traces(n, r.len(), ch.i_max);
    let mut acc = vec![vec![0.0; q]; n];
    let words = q.pow(n as u32);
    for code in 0..words {
        let x: Vec<usize> = (0..n).map(|i| (code / q.pow(i as u32)) % q).collect();
        let px: f64 = (0..n).map(|i| priors[i][x[i]]).product();
        if px == 0.0 {
            continue;
        }
        let mut like = 0.0;
        for t in &traces {
            let mut w = t.weight(ch, q);
            for (i, l) in t.landed.iter().enumerate() {
                if let Some(j) = l {
                    w *= f(x[i], r.symbols[*j].value(), ch.p_sub, q);
                }
            }
            like += w;
        }
        for i in 0..n {
            acc[i][x[i]] += px * like;
        }
    }
    normalize_rows(acc)
}

/// Exact posteriors given several received copies of one word.
pub fn oracle_joint(
    rs: &[ReceivedSeq],
    priors: &[Vec<f64>],
    ch: &IdsChannelParams,
    q: usize,
) -> (Vec<Vec<f64>>, f64) {
    let n = priors.len();
    let per_copy: Vec<Vec<(f64, Vec<Vec<f64>>)>> = rs
        .iter()
        .map(|r| {
            enumerate_traces(n, r.len(), ch.i_max)
                .iter()
                .map(|t| {
                    (
                        t.weight(ch, q),
                        emission_vectors(t, &r.symbols, ch.p_sub, q),
                    )
                })
                .collect()
        })
        .collect();
    // Cartesian product over copies.
    let mut combos: Vec<(f64, Vec<Vec<f64>>)> = vec![(1.0, vec![vec![1.0; q]; n])];
    for traces in &per_copy {
        let mut next = Vec::with_capacity(combos.len() * traces.len());
        for (w, g) in &combos {
            for (wt, gt) in traces {
                let prod: Vec<Vec<f64>> = g
                    .iter()
                    .zip(gt)
                    .map(|(a, b)| a.iter().zip(b).map(|(u, v)| u * v).collect())
                    .collect();
                next.push((w * wt, prod));
            }
        }
        combos = next;
    }
    marginals(combos.into_iter(), priors)
}

/// Exact convolutional posteriors by enumerating every message and every
/// trace: returns (message-bit posteriors, transmitted-bit posteriors).
pub fn oracle_conv(
    r: &ReceivedSeq,
    spec: &ConvCodeSpec,
    offset: &OffsetSeq,
    ch: &IdsChannelParams,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n_in = r.source_len;
    let n_msg = n_in / spec.n_c() - spec.memory;
    let words: Vec<(Vec<u8>, Vec<u8>)> = (0..1usize << n_msg)
        .map(|code| {
            let msg: Vec<u8> = (0..n_msg).map(|i| ((code >> i) & 1) as u8).collect();
            let x = conv_encode(&msg, spec, offset).expect("valid offset");
            (msg, x)
        })
        .collect();
    let mut like = vec![0.0; words.len()];
    for_each_trace(n_in, r.len(), ch.i_max, |t| {
        let w = t.weight(ch, 2);
        for ((_, x), l) in words.iter().zip(like.iter_mut()) {
            let mut v = w;
            for (i, landed) in t.landed.iter().enumerate() {
                if let Some(j) = landed {
                    v *= f(x[i] as usize, r.symbols[*j].value(), ch.p_sub, 2);
                }
            }
            *l += v;
        }
    });
    let mut outer = vec![vec![0.0; 2]; n_msg];
    let mut inner = vec![vec![0.0; 2]; n_in];
    for ((msg, x), &l) in words.iter().zip(&like) {
        for (i, &u) in msg.iter().enumerate() {
            outer[i][u as usize] += l;
        }
        for (i, &b) in x.iter().enumerate() {
            inner[i][b as usize] += l;
        }
    }
    (normalize_rows(outer), normalize_rows(inner))
}

pub fn to_rows(m: &PosteriorMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

pub fn max_dev(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(u, v)| (u - v).abs()))
        .fold(0.0, f64::max)
}

use idscodec_core::channel::{transmit, trial_rng};
use idscodec_core::galois::GfParams;
use rand::Rng;

/// One point of the small oracle grid.
#[derive(Debug, Clone, Copy)]
pub struct GridPoint {
    pub q: usize,
    pub n: usize,
    pub p_ins: f64,
    pub p_del: f64,
    pub p_sub: f64,
}

impl GridPoint {
    pub fn channel(&self) -> IdsChannelParams {
        IdsChannelParams::new(self.p_ins, self.p_del, self.p_sub, 2).unwrap()
    }
}

/// `q in {2,4}` x `n` x `p_ins, p_del in {0.05, 0.15}` x `p_sub in {0, 0.1}`.
pub fn oracle_grid(lengths: &[usize]) -> Vec<GridPoint> {
    let mut v = Vec::new();
    for q in [2, 4] {
        for &n in lengths {
            for p_ins in [0.05, 0.15] {
                for p_del in [0.05, 0.15] {
                    for p_sub in [0.0, 0.1] {
                        v.push(GridPoint {
                            q,
                            n,
                            p_ins,
                            p_del,
                            p_sub,
                        });
                    }
                }
            }
        }
    }
    v
}

/// Random word, priors (one degenerate marker-like row, a skewed row, the
/// rest uniform) and `copies` received sequences with nonzero likelihood
/// under the capped channel.
pub fn grid_instance(
    pt: &GridPoint,
    copies: usize,
    seed: u64,
) -> (Vec<Symbol>, Vec<Vec<f64>>, Vec<ReceivedSeq>) {
    let field = GfParams::with_order(pt.q).unwrap();
    let ch = pt.channel();
    let mut rng = trial_rng(seed, 0);
    let x: Vec<Symbol> = (0..pt.n)
        .map(|_| Symbol(rng.gen_range(0..pt.q) as u8))
        .collect();
    let mut priors = vec![vec![1.0 / pt.q as f64; pt.q]; pt.n];
    let marker = pt.n / 2;
    priors[marker] = (0..pt.q)
        .map(|s| if s == x[marker].value() { 1.0 } else { 0.0 })
        .collect();
    let skew: Vec<f64> = (0..pt.q).map(|s| 1.0 + s as f64).collect();
    let tot: f64 = skew.iter().sum();
    priors[0] = skew.iter().map(|v| v / tot).collect();
    let mut rs = Vec::new();
    let mut stream = 1;
    while rs.len() < copies {
        let (r, _) = transmit(&x, &field, &ch, &mut trial_rng(seed, stream)).unwrap();
        stream += 1;
        let drift = r.drift();
        if drift > (pt.n * ch.i_max) as isize {
            continue;
        }
        if oracle_marker(&r, &priors, &ch, pt.q).1 > 0.0 {
            rs.push(r);
        }
    }
    (x, priors, rs)
}
