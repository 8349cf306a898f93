use serde::{Deserialize, Serialize};

use super::FeatureError;
use crate::bcjr::PosteriorMatrix;
use crate::galois::Symbol;
use crate::outer::LinearBlockCode;
use crate::real::Real;

/// Bipolar map: bit 0 to +1, bit 1 to -1.
#[inline]
pub fn phi(bit: u8) -> f64 {
    if bit == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Inverse of [`phi`] by sign; zero maps to bit 0.
#[inline]
pub fn bin(v: f64) -> u8 {
    u8::from(v < 0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcctFeatures {
    /// Soft bipolar estimate `2 P(x = 0) - 1` per outer bit.
    pub x_phi: Vec<f64>,
    pub magnitude: Vec<f64>,
    /// `phi(H bin(x_phi))`, one entry per check.
    pub syndrome_bipolar: Vec<f64>,
    /// `bin(x_phi * phi(x))` when the true codeword is known.
    pub target_noise: Option<Vec<u8>>,
}

impl EcctFeatures {
    /// Magnitudes followed by the bipolar syndrome.
    pub fn input(&self) -> Vec<f64> {
        self.magnitude
            .iter()
            .chain(&self.syndrome_bipolar)
            .copied()
            .collect()
    }
}

pub fn build_ecct_features<T: Real>(
    code: &LinearBlockCode,
    inner_posteriors: &PosteriorMatrix<T>,
    true_outer: Option<&[Symbol]>,
) -> Result<EcctFeatures, FeatureError> {
    let q = code.field().order();
    if q != 2 || inner_posteriors.q() != 2 {
        return Err(FeatureError::NotBinary(q.max(inner_posteriors.q())));
    }
    let n = code.n();
    if inner_posteriors.rows() != n {
        return Err(FeatureError::Shape {
            what: "posterior rows",
            expected: n,
            got: inner_posteriors.rows(),
        });
    }
    if let Some(x) = true_outer {
        if x.len() != n {
            return Err(FeatureError::Shape {
                what: "true codeword length",
                expected: n,
                got: x.len(),
            });
        }
    }
    let x_phi: Vec<f64> = (0..n)
        .map(|i| 2.0 * inner_posteriors.get(i, 0).as_f64() - 1.0)
        .collect();
    let magnitude = x_phi.iter().map(|v| v.abs()).collect();
    let hard: Vec<Symbol> = x_phi.iter().map(|&v| Symbol(bin(v))).collect();
    let syn = code.syndrome(&hard).expect("length checked");
    let syndrome_bipolar = syn.iter().map(|s| phi(s.0)).collect();
    let target_noise = true_outer.map(|x| {
        x_phi
            .iter()
            .zip(x)
            .map(|(&v, s)| bin(v * phi(s.0)))
            .collect()
    });
    Ok(EcctFeatures {
        x_phi,
        magnitude,
        syndrome_bipolar,
        target_noise,
    })
}

/// Final outer estimate `bin(-z_hat * sign(x_phi))`, with `sign(0) = +1`.
pub fn apply_ecct_output(z_hat: &[f64], x_phi: &[f64]) -> Vec<u8> {
    assert_eq!(z_hat.len(), x_phi.len(), "length mismatch");
    z_hat
        .iter()
        .zip(x_phi)
        .map(|(&z, &x)| {
            let s = if x < 0.0 { -1.0 } else { 1.0 };
            bin(-z * s)
        })
        .collect()
}
