//! Binary-string universe with wildcard patterns such as `1***1`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pattern(Vec<Option<u8>>);

impl Pattern {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn matches(&self, bits: &[u8]) -> bool {
        self.0.len() == bits.len() && self.0.iter().zip(bits).all(|(p, b)| p.is_none_or(|v| v == *b))
    }

    pub fn random<R: Rng + ?Sized>(len: usize, wildcard_prob: f64, rng: &mut R) -> Self {
        Pattern(
            (0..len)
                .map(|_| if rng.random::<f64>() < wildcard_prob { None } else { Some(rng.random_range(0..2u8)) })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternParseError(pub char);

impl fmt::Display for PatternParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unexpected pattern symbol {:?}", self.0)
    }
}

impl std::error::Error for PatternParseError {}

impl FromStr for Pattern {
    type Err = PatternParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(Some(0)),
                '1' => Ok(Some(1)),
                '*' => Ok(None),
                other => Err(PatternParseError(other)),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Pattern)
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.0 {
            f.write_str(match p {
                Some(0) => "0",
                Some(_) => "1",
                None => "*",
            })?;
        }
        Ok(())
    }
}

/// Every string of `len` bits, in counting order.
pub fn universe(len: usize) -> Vec<Vec<u8>> {
    (0..1u32 << len).map(|v| (0..len).rev().map(|i| ((v >> i) & 1) as u8).collect()).collect()
}

pub fn parse_bits(s: &str) -> Option<Vec<u8>> {
    s.chars()
        .map(|c| match c {
            '0' => Some(0),
            '1' => Some(1),
            _ => None,
        })
        .collect()
}

pub fn as_features(bits: &[u8]) -> Vec<f64> {
    bits.iter().map(|&b| f64::from(b)).collect()
}

/// Negative selection over patterns: random patterns are kept when they match no
/// self string.
pub fn censor_patterns<R: Rng + ?Sized>(
    self_set: &[Vec<u8>],
    len: usize,
    count: usize,
    attempt_cap: u64,
    rng: &mut R,
) -> Vec<Pattern> {
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < count && attempts < attempt_cap {
        attempts += 1;
        let p = Pattern::random(len, 0.5, rng);
        if !self_set.iter().any(|s| p.matches(s)) && !out.contains(&p) {
            out.push(p);
        }
    }
    out
}
