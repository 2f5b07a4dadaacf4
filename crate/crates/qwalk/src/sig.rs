//! Signatures, extended signatures and point configurations in ℤ.
//!
//! A signature of length N is a weakly decreasing integer N-tuple
//! λ₁ ≥ … ≥ λ_N. It labels an N-point configuration in ℤ through
//! `a(k) = λ_{N−k+1} + k − 1`, so the zero signature is the densely packed
//! configuration {0, 1, …, N−1}. Extended signatures allow a leading run of
//! +∞ coordinates; the number of finite parts is the class index of the
//! block the signature belongs to.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Weakly decreasing integer tuple; `N = 0` is the empty signature ∅.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Signature {
    parts: Vec<i64>,
}

impl Signature {
    pub fn new(parts: Vec<i64>) -> Result<Self> {
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidSignature(format!(
                "parts must be weakly decreasing, got {parts:?}"
            )));
        }
        Ok(Signature { parts })
    }

    /// The empty signature ∅ (the unique element of level 0).
    pub fn empty() -> Self {
        Signature { parts: Vec::new() }
    }

    /// The zero signature 0_N.
    pub fn zero(n: usize) -> Self {
        Signature { parts: vec![0; n] }
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn parts(&self) -> &[i64] {
        &self.parts
    }

    /// 0-based access: `part(0)` is λ₁, the largest part.
    pub fn part(&self, i: usize) -> i64 {
        self.parts[i]
    }

    /// |λ| = λ₁ + … + λ_N.
    pub fn weight(&self) -> i64 {
        self.parts.iter().sum()
    }

    /// λ + c in every coordinate.
    pub fn shifted(&self, c: i64) -> Signature {
        Signature {
            parts: self.parts.iter().map(|p| p + c).collect(),
        }
    }

    /// The point configuration a(k) = λ_{N−k+1} + k − 1, k = 1..N.
    pub fn to_config(&self) -> PointConfig {
        let n = self.parts.len();
        let points = (1..=n)
            .map(|k| self.parts[n - k] + k as i64 - 1)
            .collect();
        PointConfig { points }
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.parts.iter().map(|p| p.to_string()).collect();
        write!(f, "{}", s.join(","))
    }
}

impl FromStr for Signature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Signature::empty());
        }
        let parts = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<i64>()
                    .map_err(|e| Error::InvalidSignature(format!("bad part {t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Signature::new(parts)
    }
}

/// Strictly increasing N-point configuration in ℤ.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct PointConfig {
    points: Vec<i64>,
}

impl PointConfig {
    pub fn new(points: Vec<i64>) -> Result<Self> {
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(format!(
                "points must be strictly increasing, got {points:?}"
            )));
        }
        Ok(PointConfig { points })
    }

    pub fn points(&self) -> &[i64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Exact inverse of [`Signature::to_config`].
    pub fn to_signature(&self) -> Signature {
        let n = self.points.len();
        let parts = (0..n)
            .map(|i| {
                // λ_i (1-based i+1) = a(N−i) − (N−i−1)
                let k = n - i; // a-index, 1-based
                self.points[k - 1] - (k as i64 - 1)
            })
            .collect();
        Signature { parts }
    }
}

/// μ ≺ λ: λ₁ ≥ μ₁ ≥ λ₂ ≥ … ≥ μ_{N−1} ≥ λ_N. Lengths must differ by one,
/// with μ shorter; ∅ ≺ ν holds for every ν of length 1.
pub fn interlaces(mu: &Signature, lambda: &Signature) -> Result<bool> {
    if mu.len() + 1 != lambda.len() {
        return Err(Error::LengthMismatch(format!(
            "interlacing needs |λ| = |μ| + 1, got {} and {}",
            lambda.len(),
            mu.len()
        )));
    }
    for i in 0..mu.len() {
        if !(lambda.part(i) >= mu.part(i) && mu.part(i) >= lambda.part(i + 1)) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// All μ ≺ λ, enumerated coordinate by coordinate. μ_i ranges over
/// [λ_{i+1}, λ_i], so every emitted tuple is weakly decreasing by
/// construction and the count is Π_i (λ_i − λ_{i+1} + 1).
pub fn interlacing_below(lambda: &Signature) -> Vec<Signature> {
    let n = lambda.len();
    if n == 0 {
        return Vec::new();
    }
    fn rec(lambda: &Signature, i: usize, current: &mut Vec<i64>, out: &mut Vec<Signature>) {
        if i == lambda.len() - 1 {
            out.push(Signature {
                parts: current.clone(),
            });
            return;
        }
        for m in lambda.part(i + 1)..=lambda.part(i) {
            current.push(m);
            rec(lambda, i + 1, current, out);
            current.pop();
        }
    }
    let mut out = Vec::new();
    rec(lambda, 0, &mut Vec::with_capacity(n - 1), &mut out);
    out
}

/// Π_i (λ_i − λ_{i+1} + 1), the number of interlacing signatures below λ.
pub fn interlacing_count(lambda: &Signature) -> u128 {
    let n = lambda.len();
    if n == 0 {
        return 0;
    }
    (0..n - 1)
        .map(|i| (lambda.part(i) - lambda.part(i + 1) + 1) as u128)
        .product()
}

/// Signature with a leading run of +∞ coordinates. The infinite count is
/// explicit so arithmetic on the finite parts stays exact.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct ExtendedSignature {
    n_infinite: usize,
    finite: Signature,
}

impl ExtendedSignature {
    pub fn new(n_infinite: usize, finite: Signature) -> Self {
        ExtendedSignature { n_infinite, finite }
    }

    /// A fully finite extended signature.
    pub fn finite(sig: Signature) -> Self {
        ExtendedSignature {
            n_infinite: 0,
            finite: sig,
        }
    }

    /// The unique all-infinite signature of the given level.
    pub fn all_infinite(level: usize) -> Self {
        ExtendedSignature {
            n_infinite: level,
            finite: Signature::empty(),
        }
    }

    /// Total level N (infinite plus finite coordinates).
    pub fn level(&self) -> usize {
        self.n_infinite + self.finite.len()
    }

    /// Class index k: the number of finite coordinates, identifying the
    /// block of the level-N splitting the signature belongs to.
    pub fn class_index(&self) -> usize {
        self.finite.len()
    }

    pub fn n_infinite(&self) -> usize {
        self.n_infinite
    }

    pub fn finite_parts(&self) -> &Signature {
        &self.finite
    }

    pub fn is_fully_finite(&self) -> bool {
        self.n_infinite == 0
    }
}

impl fmt::Display for ExtendedSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut toks: Vec<String> = vec!["inf".to_string(); self.n_infinite];
        toks.extend(self.finite.parts().iter().map(|p| p.to_string()));
        write!(f, "{}", toks.join(","))
    }
}

impl FromStr for ExtendedSignature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(ExtendedSignature::finite(Signature::empty()));
        }
        let mut n_inf = 0usize;
        let mut finite = Vec::new();
        for tok in s.split(',') {
            let tok = tok.trim();
            if tok == "inf" {
                if !finite.is_empty() {
                    return Err(Error::InvalidSignature(
                        "infinite coordinates must lead".into(),
                    ));
                }
                n_inf += 1;
            } else {
                finite.push(tok.parse::<i64>().map_err(|e| {
                    Error::InvalidSignature(format!("bad part {tok:?}: {e}"))
                })?);
            }
        }
        Ok(ExtendedSignature::new(n_inf, Signature::new(finite)?))
    }
}
