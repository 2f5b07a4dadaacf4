//! Rational Schur functions at geometric specializations.
//!
//! All chain formulas evaluate Schur functions at the geometric point
//! ξ = (1, q⁻¹, …, q^{1−N}). At that point the value has the closed form
//!
//! ```text
//! s_λ(1, …, q^{1−N}) = q^{−((N−1)λ₁ + … + λ_{N−1})}
//!                      · Π_{i<j} (1 − q^{λ_i−i−λ_j+j}) / (1 − q^{j−i})
//! ```
//!
//! which is always positive, so it is carried as a log-magnitude. The slow
//! branching-rule evaluator [`schur_branching_eval`] is kept as an
//! independent oracle for small cases; it supports arbitrary real points
//! and signs.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::sig::{interlacing_below, Signature};

/// The geometric specialization point (ξ₁, …, ξ_N) = (1, q⁻¹, …, q^{1−N}).
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct GeometricSpec {
    q: f64,
    n: usize,
}

impl GeometricSpec {
    /// Degenerate q near 0 or 1 is rejected: q must lie in [1e-6, 1 − 1e-6].
    pub fn new(q: f64, n: usize) -> Result<Self> {
        if !(1e-6..=1.0 - 1e-6).contains(&q) {
            return Err(Error::InvalidParameter(format!(
                "q must lie in [1e-6, 1-1e-6], got {q}"
            )));
        }
        Ok(GeometricSpec { q, n })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// ξ_i = q^{1−i} for 1-based i.
    pub fn xi(&self, i: usize) -> f64 {
        self.q.powi(1 - i as i32)
    }

    /// ln ξ_i.
    pub fn log_xi(&self, i: usize) -> f64 {
        (1.0 - i as f64) * self.q.ln()
    }

    /// Same q at a different level.
    pub fn at_level(&self, n: usize) -> GeometricSpec {
        GeometricSpec { q: self.q, n }
    }
}

/// ln s_λ(1, q⁻¹, …, q^{1−N}); N = 0 gives ln 1 = 0.
pub fn log_principal_specialization(lambda: &Signature, spec: &GeometricSpec) -> Result<f64> {
    let n = spec.n();
    if lambda.len() != n {
        return Err(Error::LengthMismatch(format!(
            "signature length {} vs level {}",
            lambda.len(),
            n
        )));
    }
    let q = spec.q();
    let lnq = q.ln();
    let mut log = 0.0;
    for i in 0..n {
        // exponent −(N−1)λ₁ − (N−2)λ₂ − … − λ_{N−1}
        log -= ((n - 1 - i) as f64) * lambda.part(i) as f64 * lnq;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            // λ_i − i − λ_j + j with 1-based indices; always ≥ j − i ≥ 1
            let e = lambda.part(i) - lambda.part(j) + (j as i64 - i as i64);
            log += (-q.powi(e as i32)).ln_1p();
            log -= (-q.powi((j - i) as i32)).ln_1p();
        }
    }
    Ok(log)
}

/// s_λ at the geometric point, exponentiated; overflows to +inf for large λ.
pub fn principal_specialization(lambda: &Signature, spec: &GeometricSpec) -> Result<f64> {
    Ok(log_principal_specialization(lambda, spec)?.exp())
}

/// ln(s_μ(ξ)/s_λ(ξ)), both at the same geometric point.
pub fn log_schur_ratio(mu: &Signature, lambda: &Signature, spec: &GeometricSpec) -> Result<f64> {
    Ok(log_principal_specialization(mu, spec)? - log_principal_specialization(lambda, spec)?)
}

pub fn schur_ratio(mu: &Signature, lambda: &Signature, spec: &GeometricSpec) -> Result<f64> {
    Ok(log_schur_ratio(mu, lambda, spec)?.exp())
}

/// Slow branching-rule evaluation of s_λ(x₁, …, x_N):
/// s_λ(x₁..x_N) = Σ_{μ≺λ} x_N^{|λ|−|μ|} s_μ(x₁..x_{N−1}), s_∅ = 1.
///
/// Intended as an oracle for N ≤ 6 and small parts. Negative parts are
/// allowed (Laurent monomials); x_i = 0 is rejected when a negative
/// exponent would arise.
pub fn schur_branching_eval(lambda: &Signature, xs: &[f64]) -> Result<f64> {
    if lambda.len() != xs.len() {
        return Err(Error::LengthMismatch(format!(
            "signature length {} vs {} variables",
            lambda.len(),
            xs.len()
        )));
    }
    let mut memo: HashMap<Signature, f64> = HashMap::new();
    eval_rec(lambda, xs, &mut memo)
}

fn eval_rec(lambda: &Signature, xs: &[f64], memo: &mut HashMap<Signature, f64>) -> Result<f64> {
    let n = lambda.len();
    if n == 0 {
        return Ok(1.0);
    }
    if let Some(&v) = memo.get(lambda) {
        return Ok(v);
    }
    let x = xs[n - 1];
    let mut total = 0.0;
    for mu in interlacing_below(lambda) {
        let e = lambda.weight() - mu.weight();
        let inner = eval_rec(&mu, xs, memo)?;
        total += int_pow(x, e)? * inner;
    }
    memo.insert(lambda.clone(), total);
    Ok(total)
}

fn int_pow(x: f64, e: i64) -> Result<f64> {
    if x == 0.0 && e < 0 {
        return Err(Error::InvalidParameter(
            "zero variable with negative exponent".into(),
        ));
    }
    if x == 0.0 && e == 0 {
        return Ok(1.0);
    }
    Ok(x.powi(e as i32))
}
