//! Insertion/deletion/substitution channel simulator.
//!
//! Each input symbol enters a small state machine: with probability `p_ins`
//! a uniformly random symbol is emitted and the machine stays on the same
//! input symbol; with `p_del` the input symbol is consumed silently; with the
//! remaining probability it is transmitted, replaced by a uniformly chosen
//! *different* symbol with probability `p_sub`. The simulator never caps the
//! number of insertions; `i_max` is only carried for the decoders.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::galois::{GfParams, Symbol};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("probability {name} = {value} outside [0, 1]")]
    Probability { name: &'static str, value: f64 },
    #[error("p_ins + p_del = {0} exceeds 1")]
    Total(f64),
    #[error("p_ins must be below 1 or the channel never consumes a symbol")]
    InsertionOnly,
    #[error("number of copies must be at least 1")]
    NoCopies,
    #[error("symbol {0} is not in the field")]
    Symbol(Symbol),
}

/// Channel probabilities plus the decoder-side insertion cap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdsChannelParams {
    pub p_ins: f64,
    pub p_del: f64,
    pub p_sub: f64,
    /// Maximum insertions per consumed symbol assumed by trellis decoders.
    pub i_max: usize,
}

impl IdsChannelParams {
    pub fn new(p_ins: f64, p_del: f64, p_sub: f64, i_max: usize) -> Result<Self, ChannelError> {
        let ch = IdsChannelParams {
            p_ins,
            p_del,
            p_sub,
            i_max,
        };
        ch.validate()?;
        Ok(ch)
    }

    /// Channel with `p_ins = p_del = p`, the sweep axis of most experiments.
    pub fn symmetric(p: f64, p_sub: f64, i_max: usize) -> Result<Self, ChannelError> {
        Self::new(p, p, p_sub, i_max)
    }

    pub fn noiseless() -> Self {
        IdsChannelParams {
            p_ins: 0.0,
            p_del: 0.0,
            p_sub: 0.0,
            i_max: 0,
        }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        for (name, value) in [
            ("p_ins", self.p_ins),
            ("p_del", self.p_del),
            ("p_sub", self.p_sub),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ChannelError::Probability { name, value });
            }
        }
        let total = self.p_ins + self.p_del;
        if total > 1.0 + 1e-12 {
            return Err(ChannelError::Total(total));
        }
        if self.p_ins >= 1.0 {
            return Err(ChannelError::InsertionOnly);
        }
        Ok(())
    }

    /// Transmission probability `1 - p_ins - p_del`.
    #[inline]
    pub fn p_trans(&self) -> f64 {
        (1.0 - self.p_ins - self.p_del).max(0.0)
    }
}

/// A received sequence together with the length of the sequence that was sent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReceivedSeq {
    pub symbols: Vec<Symbol>,
    pub source_len: usize,
}

impl ReceivedSeq {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Final drift `n_rec - n_in`.
    pub fn drift(&self) -> isize {
        self.symbols.len() as isize - self.source_len as isize
    }
}

/// What happened to one input symbol after its insertions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Deleted,
    Transmitted,
    Substituted(Symbol),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolEvents {
    /// Symbols inserted before the input symbol was consumed, in emission order.
    pub inserted: Vec<Symbol>,
    pub outcome: Outcome,
}

/// Ground-truth record of a channel realization, one entry per input symbol.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EventTrace {
    pub events: Vec<SymbolEvents>,
}

impl EventTrace {
    /// Re-applies the recorded events to `input`.
    pub fn replay(&self, input: &[Symbol]) -> Vec<Symbol> {
        let mut out = Vec::with_capacity(input.len());
        for (x, ev) in input.iter().zip(&self.events) {
            out.extend_from_slice(&ev.inserted);
            match ev.outcome {
                Outcome::Deleted => {}
                Outcome::Transmitted => out.push(*x),
                Outcome::Substituted(s) => out.push(s),
            }
        }
        out
    }

    pub fn insertions(&self) -> usize {
        self.events.iter().map(|e| e.inserted.len()).sum()
    }

    pub fn deletions(&self) -> usize {
        self.events
            .iter()
            .filter(|e| e.outcome == Outcome::Deleted)
            .count()
    }

    pub fn substitutions(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e.outcome, Outcome::Substituted(_)))
            .count()
    }

    /// Largest number of insertions preceding a single input symbol.
    pub fn max_run(&self) -> usize {
        self.events
            .iter()
            .map(|e| e.inserted.len())
            .max()
            .unwrap_or(0)
    }
}

/// Counter-based generator for one Monte Carlo trial: the same
/// `(seed, stream)` pair always yields the same sequence, independently of
/// how trials are scheduled across threads.
pub type TrialRng = ChaCha12Rng;

pub fn trial_rng(seed: u64, stream: u64) -> TrialRng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform symbol different from `x`.
fn substitute<R: Rng + ?Sized>(x: Symbol, q: usize, rng: &mut R) -> Symbol {
    let s = rng.gen_range(0..q - 1) as u8;
    Symbol(if s >= x.0 { s + 1 } else { s })
}

/// Sends `x` through one channel realization.
pub fn transmit<R: Rng + ?Sized>(
    x: &[Symbol],
    field: &GfParams,
    ch: &IdsChannelParams,
    rng: &mut R,
) -> Result<(ReceivedSeq, EventTrace), ChannelError> {
    ch.validate()?;
    let q = field.order();
    let p_ins = ch.p_ins;
    let p_id = ch.p_ins + ch.p_del;
    let mut out = Vec::with_capacity(x.len() + 8);
    let mut events = Vec::with_capacity(x.len());
    for &sym in x {
        if !field.contains(sym) {
            return Err(ChannelError::Symbol(sym));
        }
        let mut inserted = Vec::new();
        let outcome = loop {
            let u: f64 = rng.gen();
            if u < p_ins {
                let s = Symbol(rng.gen_range(0..q) as u8);
                inserted.push(s);
                out.push(s);
            } else if u < p_id {
                break Outcome::Deleted;
            } else if q > 1 && ch.p_sub > 0.0 && rng.gen::<f64>() < ch.p_sub {
                let s = substitute(sym, q, rng);
                out.push(s);
                break Outcome::Substituted(s);
            } else {
                out.push(sym);
                break Outcome::Transmitted;
            }
        };
        events.push(SymbolEvents { inserted, outcome });
    }
    Ok((
        ReceivedSeq {
            symbols: out,
            source_len: x.len(),
        },
        EventTrace { events },
    ))
}

/// `m` independent realizations of the same input, drawn sequentially from `rng`.
pub fn transmit_multi<R: Rng + ?Sized>(
    x: &[Symbol],
    field: &GfParams,
    ch: &IdsChannelParams,
    m: usize,
    rng: &mut R,
) -> Result<Vec<(ReceivedSeq, EventTrace)>, ChannelError> {
    if m == 0 {
        return Err(ChannelError::NoCopies);
    }
    (0..m).map(|_| transmit(x, field, ch, rng)).collect()
}
