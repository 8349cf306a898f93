//! Concatenated coding for insertion/deletion/substitution channels.
//!
//! Outer LDPC codes over GF(2^p), marker and convolutional inner codes, an
//! IDS channel simulator, exact BCJR inner decoders, belief propagation,
//! transformer feature construction and a Monte Carlo harness.
//!
//! Probability-carrying types are generic over [`real::Real`]; the aliases
//! below fix the scalar for the common cases.

pub mod bcjr;
pub mod bp;
pub mod channel;
pub mod features;
pub mod galois;
pub mod inner;
pub mod outer;
pub mod pipeline;
pub mod real;

pub use bcjr::{DriftWindow, PosteriorMatrix};
pub use channel::{IdsChannelParams, ReceivedSeq};
pub use galois::{GfParams, Symbol};
pub use outer::LinearBlockCode;

/// Double-precision posteriors, the default for decoding.
pub type Posteriors = PosteriorMatrix<f64>;
/// Single-precision posteriors.
pub type Posteriors32 = PosteriorMatrix<f32>;
/// Feature tensors as exported to datasets.
pub type Features = features::FeatureTensor<f32>;
/// Double-precision feature tensors.
pub type Features64 = features::FeatureTensor<f64>;
/// Belief propagation output in double precision.
pub type BpResult = bp::BpOutput<f64>;
