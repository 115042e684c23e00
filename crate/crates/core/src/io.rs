//! JSON and CSV documents.
//!
//! Exact rationals travel as `["numerator", "denominator"]` decimal-string
//! pairs, so every document round-trips bit-exactly.

use std::path::Path;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::construction::{CantorApproximation, LambdaSequence};
use crate::enclosure::{to_f64, Precision, RationalEnclosure};
use crate::error::{Error, Result};

/// Twelve significant digits for human reading.
pub fn decimal(x: &BigRational) -> String {
    format!("{:.11e}", to_f64(x))
}

pub fn rational_pair(x: &BigRational) -> [String; 2] {
    [x.numer().to_string(), x.denom().to_string()]
}

pub fn parse_pair(pair: &[String; 2]) -> Result<BigRational> {
    let num: BigInt = pair[0]
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad numerator {:?}", pair[0])))?;
    let den: BigInt = pair[1]
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad denominator {:?}", pair[1])))?;
    if den.is_zero() {
        return Err(Error::Parse("zero denominator".into()));
    }
    Ok(BigRational::new(num, den))
}

/// `serde(with)` adapter for a single rational.
pub mod exact {
    use super::*;

    pub fn serialize<S: Serializer>(x: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
        rational_pair(x).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BigRational, D::Error> {
        let pair = <[String; 2]>::deserialize(d)?;
        parse_pair(&pair).map_err(serde::de::Error::custom)
    }
}

/// `serde(with)` adapter for a list of rationals.
pub mod exact_vec {
    use super::*;

    pub fn serialize<S: Serializer>(xs: &[BigRational], s: S) -> std::result::Result<S::Ok, S::Error> {
        xs.iter().map(rational_pair).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<BigRational>, D::Error> {
        let pairs = <Vec<[String; 2]>>::deserialize(d)?;
        pairs
            .iter()
            .map(|p| parse_pair(p).map_err(serde::de::Error::custom))
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct EnclosureDoc {
    lo: [String; 2],
    hi: [String; 2],
    lo_decimal: String,
    hi_decimal: String,
    width_decimal: String,
}

/// `serde(with)` adapter for an enclosure; decimals are written for
/// reading and ignored on input.
pub mod enclosure {
    use super::*;

    pub fn serialize<S: Serializer>(e: &RationalEnclosure, s: S) -> std::result::Result<S::Ok, S::Error> {
        EnclosureDoc {
            lo: rational_pair(e.lo()),
            hi: rational_pair(e.hi()),
            lo_decimal: decimal(e.lo()),
            hi_decimal: decimal(e.hi()),
            width_decimal: decimal(&e.width()),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<RationalEnclosure, D::Error> {
        let doc = EnclosureDoc::deserialize(d)?;
        let lo = parse_pair(&doc.lo).map_err(serde::de::Error::custom)?;
        let hi = parse_pair(&doc.hi).map_err(serde::de::Error::custom)?;
        if lo > hi {
            return Err(serde::de::Error::custom("enclosure with lo > hi"));
        }
        Ok(RationalEnclosure::new(lo, hi))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceDocument {
    #[serde(with = "exact_vec")]
    pub prefix: Vec<BigRational>,
    #[serde(with = "exact")]
    pub tail_ratio: BigRational,
    #[serde(with = "exact")]
    pub tail_base: BigRational,
    pub depth: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<usize>,
}

impl SequenceDocument {
    pub fn from_sequence(seq: &LambdaSequence) -> Self {
        SequenceDocument {
            prefix: seq.prefix().to_vec(),
            tail_ratio: seq.tail_ratio().clone(),
            tail_base: seq.tail_base().clone(),
            depth: seq.depth(),
            level: None,
        }
    }

    pub fn from_approximation(approx: &CantorApproximation) -> Self {
        SequenceDocument { level: Some(approx.level()), ..Self::from_sequence(approx.lambda()) }
    }

    pub fn to_sequence(&self) -> Result<LambdaSequence> {
        if self.depth != self.prefix.len() {
            return Err(Error::Parse(format!(
                "depth {} does not match {} prefix entries",
                self.depth,
                self.prefix.len()
            )));
        }
        LambdaSequence::new(self.prefix.clone(), self.tail_ratio.clone(), self.tail_base.clone())
    }

    /// The stored level, or the full depth when none was recorded.
    pub fn to_approximation(&self, prec: Precision) -> Result<CantorApproximation> {
        let seq = self.to_sequence()?;
        CantorApproximation::new(&seq, self.level.unwrap_or(seq.depth()), prec)
    }
}

pub fn sequence_to_json(seq: &LambdaSequence) -> Result<String> {
    Ok(serde_json::to_string_pretty(&SequenceDocument::from_sequence(seq))?)
}

pub fn sequence_from_json(text: &str) -> Result<LambdaSequence> {
    serde_json::from_str::<SequenceDocument>(text)?.to_sequence()
}

pub fn approximation_to_json(approx: &CantorApproximation) -> Result<String> {
    Ok(serde_json::to_string_pretty(&SequenceDocument::from_approximation(approx))?)
}

pub fn approximation_from_json(text: &str, prec: Precision) -> Result<CantorApproximation> {
    serde_json::from_str::<SequenceDocument>(text)?.to_approximation(prec)
}

/// Reads a sequence document from disk.
pub fn read_sequence_document(path: &Path) -> Result<SequenceDocument> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
