//! Extended-real exponent values with the optimizing parameters attached.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// An exponent in nats on the extended real line.
///
/// `-inf` arises only for source terms over an empty message class, and
/// `+inf` only for channel-minus-source objectives built on such a term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentValue {
    #[serde(with = "extended")]
    pub value: f64,
    /// Maximizing `ρ`, when a `ρ`-maximization produced the value.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rho: Option<f64>,
    /// Minimizing `(λ₁, λ₂)`, when a dual minimization produced the value.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambda: Option<[f64; 2]>,
}

impl ExponentValue {
    pub fn finite(value: f64) -> Self {
        ExponentValue { value, rho: None, lambda: None }
    }

    pub const fn pos_inf() -> Self {
        ExponentValue { value: f64::INFINITY, rho: None, lambda: None }
    }

    pub const fn neg_inf() -> Self {
        ExponentValue { value: f64::NEG_INFINITY, rho: None, lambda: None }
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = Some(rho);
        self
    }

    pub fn with_lambda(mut self, lambda: [f64; 2]) -> Self {
        self.lambda = Some(lambda);
        self
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

/// A bare extended real that serializes infinities as strings.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Ext(#[serde(with = "extended")] pub f64);

impl From<f64> for Ext {
    fn from(v: f64) -> Self {
        Ext(v)
    }
}

/// Difference `a - b` of extended reals; equal infinities compare as 0.
pub fn ext_sub(a: f64, b: f64) -> f64 {
    if a.is_infinite() && a == b {
        0.0
    } else {
        a - b
    }
}

/// Serializes non-finite values as the strings `"inf"` / `"-inf"`.
pub mod extended {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else if *v < 0.0 {
            s.serialize_str("-inf")
        } else {
            s.serialize_str("nan")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => match t.as_str() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not an extended real: {other}"))),
            },
        }
    }
}
