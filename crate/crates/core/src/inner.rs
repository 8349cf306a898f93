//! Inner codes: periodic marker insertion and zero-terminated rate-1/n_c
//! convolutional codes with a pseudorandom offset.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::trial_rng;
use crate::galois::{GfParams, Symbol};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InnerError {
    #[error("marker must contain at least one symbol")]
    EmptyMarker,
    #[error("marker interval must be at least 1")]
    ZeroInterval,
    #[error("marker symbol {0:?} is not a digit of GF({1})")]
    MarkerSymbol(char, usize),
    #[error("invalid octal generator polynomial {0:?}")]
    Octal(String),
    #[error("convolutional code needs at least one generator polynomial")]
    NoPolynomials,
    #[error("memory {0} is outside the supported range 1..=16")]
    Memory(usize),
    #[error("offset has length {got}, expected {expected}")]
    OffsetLength { expected: usize, got: usize },
    #[error("convolutional input must be binary, found {0}")]
    NonBinary(u8),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkerSpec {
    pub marker: Vec<Symbol>,
    pub interval: usize,
}

/// Where markers sit in an inner codeword of a given outer length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkerLayout {
    /// `Some(s)` at marker positions, `None` at outer-data positions.
    pub slots: Vec<Option<Symbol>>,
    /// Inner positions of outer symbols, in outer order.
    pub data_positions: Vec<usize>,
}

impl MarkerLayout {
    pub fn n_in(&self) -> usize {
        self.slots.len()
    }

    pub fn is_marker(&self, i: usize) -> bool {
        self.slots[i].is_some()
    }

    pub fn marker_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.map(|_| i))
    }

    /// Distance from inner position `i` to the closest marker symbol.
    pub fn distance_to_marker(&self, i: usize) -> Option<usize> {
        self.marker_positions().map(|p| p.abs_diff(i)).min()
    }
}

impl MarkerSpec {
    pub fn new(marker: Vec<Symbol>, interval: usize) -> Result<Self, InnerError> {
        if marker.is_empty() {
            return Err(InnerError::EmptyMarker);
        }
        if interval == 0 {
            return Err(InnerError::ZeroInterval);
        }
        Ok(MarkerSpec { marker, interval })
    }

    /// Parses a digit string such as `"001"` or `"32"` into field symbols.
    pub fn parse(marker: &str, interval: usize, field: &GfParams) -> Result<Self, InnerError> {
        let q = field.order();
        let symbols = marker
            .chars()
            .map(|c| match c.to_digit(10) {
                Some(d) if (d as usize) < q => Ok(Symbol(d as u8)),
                _ => Err(InnerError::MarkerSymbol(c, q)),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(symbols, interval)
    }

    pub fn len(&self) -> usize {
        self.marker.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marker.is_empty()
    }

    /// `n_out + n_m * floor(n_out / N_m)`.
    pub fn inner_len(&self, n_out: usize) -> usize {
        n_out + self.marker.len() * (n_out / self.interval)
    }

    pub fn layout(&self, n_out: usize) -> MarkerLayout {
        let mut slots = Vec::with_capacity(self.inner_len(n_out));
        let mut data_positions = Vec::with_capacity(n_out);
        for j in 0..n_out {
            data_positions.push(slots.len());
            slots.push(None);
            if (j + 1) % self.interval == 0 {
                slots.extend(self.marker.iter().map(|&s| Some(s)));
            }
        }
        MarkerLayout {
            slots,
            data_positions,
        }
    }

    /// Inserts the marker after every complete block of `interval` symbols.
    pub fn encode(&self, outer: &[Symbol]) -> (Vec<Symbol>, MarkerLayout) {
        let layout = self.layout(outer.len());
        let mut out = Vec::with_capacity(layout.n_in());
        let mut data = outer.iter();
        for slot in &layout.slots {
            out.push(match slot {
                Some(s) => *s,
                None => *data.next().expect("layout matches outer length"),
            });
        }
        (out, layout)
    }

    /// Removes marker positions, recovering the outer word.
    pub fn strip<X: Copy>(&self, inner: &[X], layout: &MarkerLayout) -> Vec<X> {
        layout.data_positions.iter().map(|&p| inner[p]).collect()
    }
}

pub fn marker_encode(outer: &[Symbol], spec: &MarkerSpec) -> (Vec<Symbol>, MarkerLayout) {
    spec.encode(outer)
}

/// Binary rate-1/n_c feed-forward convolutional code.
///
/// Polynomials are stored as `m + 1` bit masks whose most significant bit is
/// the tap on the current input and whose bit 0 is the tap on the input `m`
/// steps back.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvCodeSpec {
    pub polys: Vec<u32>,
    pub memory: usize,
}

impl ConvCodeSpec {
    pub fn new(polys: Vec<u32>) -> Result<Self, InnerError> {
        if polys.is_empty() {
            return Err(InnerError::NoPolynomials);
        }
        if let Some(&p) = polys.iter().find(|&&p| p == 0) {
            return Err(InnerError::Octal(format!("{p:o}")));
        }
        let bits = polys
            .iter()
            .map(|p| 32 - p.leading_zeros() as usize)
            .max()
            .unwrap_or(0);
        let memory = bits - 1;
        if !(1..=16).contains(&memory) {
            return Err(InnerError::Memory(memory));
        }
        Ok(ConvCodeSpec { polys, memory })
    }

    /// Parses comma-separated octal polynomials, e.g. `"5,7"`.
    pub fn parse_octal(text: &str) -> Result<Self, InnerError> {
        let polys = text
            .split(',')
            .map(|s| {
                let s = s.trim();
                u32::from_str_radix(s, 8).map_err(|_| InnerError::Octal(s.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(polys)
    }

    /// The (2,1,2) code with generators 5 and 7 (octal).
    pub fn g57() -> Self {
        Self::new(vec![0o5, 0o7]).expect("valid generators")
    }

    pub fn n_c(&self) -> usize {
        self.polys.len()
    }

    pub fn num_states(&self) -> usize {
        1 << self.memory
    }

    /// Coded length for `n_msg` message bits, including termination.
    pub fn coded_len(&self, n_msg: usize) -> usize {
        self.n_c() * (n_msg + self.memory)
    }

    pub fn octal(&self) -> String {
        self.polys
            .iter()
            .map(|p| format!("{p:o}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Output bits for input `u` from memory state `s`, and the next state.
    #[inline]
    pub fn step(&self, s: usize, u: u8) -> (u32, usize) {
        let reg = ((u as u32) << self.memory) | s as u32;
        let mut out = 0;
        for (j, &g) in self.polys.iter().enumerate() {
            out |= ((reg & g).count_ones() & 1) << j;
        }
        (out, (reg >> 1) as usize)
    }

    /// Coded bits of one step, in output order.
    #[inline]
    pub fn output_bit(out: u32, j: usize) -> u8 {
        ((out >> j) & 1) as u8
    }

    /// Response to a single 1 input from the zero state, `n_c * (m + 1)` bits.
    pub fn impulse_response(&self) -> Vec<u8> {
        let mut s = 0;
        let mut bits = Vec::with_capacity(self.n_c() * (self.memory + 1));
        for t in 0..=self.memory {
            let (out, next) = self.step(s, u8::from(t == 0));
            bits.extend((0..self.n_c()).map(|j| Self::output_bit(out, j)));
            s = next;
        }
        bits
    }
}

/// Pseudorandom binary offset added to the convolutional codeword.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OffsetSeq {
    pub bits: Vec<u8>,
    pub seed: u64,
    pub stream: u64,
}

impl OffsetSeq {
    pub fn zeros(n: usize) -> Self {
        OffsetSeq {
            bits: vec![0; n],
            seed: 0,
            stream: u64::MAX,
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// Offset of length `n_in` regenerated deterministically from `seed`.
pub fn gen_offset(n_in: usize, seed: u64) -> OffsetSeq {
    gen_offset_for(n_in, seed, 0)
}

/// Offset for the `index`-th transmission under `base_seed`.
pub fn gen_offset_for(n_in: usize, base_seed: u64, index: u64) -> OffsetSeq {
    let mut rng = trial_rng(base_seed, index);
    let bits = (0..n_in).map(|_| u8::from(rng.gen::<bool>())).collect();
    OffsetSeq {
        bits,
        seed: base_seed,
        stream: index,
    }
}

/// Zero-terminates, encodes and XORs the offset.
pub fn conv_encode(
    msg: &[u8],
    spec: &ConvCodeSpec,
    offset: &OffsetSeq,
) -> Result<Vec<u8>, InnerError> {
    let n_in = spec.coded_len(msg.len());
    if offset.len() != n_in {
        return Err(InnerError::OffsetLength {
            expected: n_in,
            got: offset.len(),
        });
    }
    if let Some(&b) = msg.iter().find(|&&b| b > 1) {
        return Err(InnerError::NonBinary(b));
    }
    let mut out = Vec::with_capacity(n_in);
    let mut s = 0;
    for &u in msg.iter().chain(std::iter::repeat_n(&0, spec.memory)) {
        let (o, next) = spec.step(s, u);
        out.extend((0..spec.n_c()).map(|j| ConvCodeSpec::output_bit(o, j)));
        s = next;
    }
    debug_assert_eq!(s, 0);
    for (c, &o) in out.iter_mut().zip(&offset.bits) {
        *c ^= o;
    }
    Ok(out)
}

/// Banded block-code generator of shape `(n_msg + m) x n_c (n_msg + m)`.
pub fn conv_generator_matrix(spec: &ConvCodeSpec, n_msg: usize) -> Vec<Vec<u8>> {
    let rows = n_msg + spec.memory;
    let cols = spec.n_c() * rows;
    let imp = spec.impulse_response();
    (0..rows)
        .map(|j| {
            let mut row = vec![0u8; cols];
            for (k, &b) in imp.iter().enumerate() {
                if let Some(slot) = row.get_mut(spec.n_c() * j + k) {
                    *slot = b;
                }
            }
            row
        })
        .collect()
}
