//! Admissible one-step functions g(x) and their Laurent coefficients.
//!
//! An admissible function is a finite product of elementary factors
//!
//! ```text
//! x, x⁻¹, (1+βx), (1+βx⁻¹), exp(γx), exp(γx⁻¹), (1−αx)⁻¹, (1−αx⁻¹)⁻¹
//! ```
//!
//! expanded as a Laurent series g(x) = Σ_k c_k x^k on the annulus
//! 1 ≤ |x| ≤ q^{1−N} containing the geometric specialization point. All
//! coefficients of an admissible function are nonnegative. `(1−αx)⁻¹` is
//! only admissible up to the level N where α < q^{N−1}; the other factors
//! work at every level.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::schur::GeometricSpec;

const POLE_EPS: f64 = 1e-12;

/// One elementary factor of an admissible function.
#[derive(Clone, Copy, PartialEq, Debug)]
pub enum ElementaryFactor {
    /// x (deterministic shift up)
    MonomialUp,
    /// x⁻¹ (deterministic shift down)
    MonomialDown,
    /// 1 + βx, β > 0
    BernoulliUp(f64),
    /// 1 + βx⁻¹, β > 0
    BernoulliDown(f64),
    /// exp(γx), γ > 0
    PoissonUp(f64),
    /// exp(γx⁻¹), γ > 0
    PoissonDown(f64),
    /// (1 − αx)⁻¹, 0 < α < q^{N−1}: finite-N only
    GeomUp(f64),
    /// (1 − αx⁻¹)⁻¹, 0 < α < 1: admissible at every level
    GeomDown(f64),
}

use ElementaryFactor::*;

impl ElementaryFactor {
    fn validate(&self) -> Result<()> {
        match *self {
            BernoulliUp(b) | BernoulliDown(b) if b <= 0.0 => Err(Error::InvalidParameter(
                format!("bernoulli parameter must be positive, got {b}"),
            )),
            PoissonUp(g) | PoissonDown(g) if g <= 0.0 => Err(Error::InvalidParameter(
                format!("poisson parameter must be positive, got {g}"),
            )),
            GeomUp(a) if a <= 0.0 => Err(Error::InvalidParameter(format!(
                "geometric parameter must be positive, got {a}"
            ))),
            GeomDown(a) if !(0.0..1.0).contains(&a) || a == 0.0 => Err(Error::InvalidParameter(
                format!("geom_down requires 0 < α < 1, got {a}"),
            )),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let needs_inverse = matches!(
            self,
            MonomialDown | BernoulliDown(_) | PoissonDown(_) | GeomDown(_)
        );
        if needs_inverse && z.norm() < POLE_EPS {
            return Err(Error::PoleProximity);
        }
        Ok(match *self {
            MonomialUp => z,
            MonomialDown => 1.0 / z,
            BernoulliUp(b) => 1.0 + b * z,
            BernoulliDown(b) => 1.0 + b / z,
            PoissonUp(g) => (g * z).exp(),
            PoissonDown(g) => (g / z).exp(),
            GeomUp(a) => {
                if (z - 1.0 / a).norm() < POLE_EPS {
                    return Err(Error::PoleProximity);
                }
                1.0 / (1.0 - a * z)
            }
            GeomDown(a) => {
                if (z - a).norm() < POLE_EPS {
                    return Err(Error::PoleProximity);
                }
                1.0 / (1.0 - a / z)
            }
        })
    }

    /// ln of the factor at a positive real point; all factor values are
    /// positive there. Errors if a geometric factor has its pole at or
    /// below x.
    pub fn log_eval_pos(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Err(Error::InvalidParameter("point must be positive".into()));
        }
        Ok(match *self {
            MonomialUp => x.ln(),
            MonomialDown => -x.ln(),
            BernoulliUp(b) => (b * x).ln_1p(),
            BernoulliDown(b) => (b / x).ln_1p(),
            PoissonUp(g) => g * x,
            PoissonDown(g) => g / x,
            GeomUp(a) => {
                if a * x >= 1.0 {
                    return Err(Error::Inadmissible(format!(
                        "(1-αx)^-1 evaluated at x = {x} ≥ 1/α = {}",
                        1.0 / a
                    )));
                }
                -(-a * x).ln_1p()
            }
            GeomDown(a) => {
                if a / x >= 1.0 {
                    return Err(Error::Inadmissible(format!(
                        "(1-α/x)^-1 evaluated at x = {x} ≤ α = {a}"
                    )));
                }
                -(-a / x).ln_1p()
            }
        })
    }

    /// Largest level N at which this factor is admissible (α < q^{N−1} for
    /// geom_up), or `None` when it is admissible at every level.
    pub fn max_level(&self, q: f64) -> Option<usize> {
        match *self {
            GeomUp(a) => {
                let mut m = 0usize;
                while q.powi(m as i32) > a && m < 1_000_000 {
                    m += 1;
                }
                // q^{m-1} > α ≥ q^m: admissible while N−1 ≤ m−1
                Some(m)
            }
            _ => None,
        }
    }

    fn token(&self) -> String {
        match *self {
            MonomialUp => "monomial_up".into(),
            MonomialDown => "monomial_down".into(),
            BernoulliUp(b) => format!("bernoulli_up:{b}"),
            BernoulliDown(b) => format!("bernoulli_down:{b}"),
            PoissonUp(g) => format!("poisson_up:{g}"),
            PoissonDown(g) => format!("poisson_down:{g}"),
            GeomUp(a) => format!("geom_up:{a}"),
            GeomDown(a) => format!("geom_down:{a}"),
        }
    }

    fn parse_token(tok: &str) -> Result<Self> {
        let mut it = tok.splitn(2, ':');
        let name = it.next().unwrap_or("").trim();
        let param = it.next().map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("bad factor parameter in {tok:?}: {e}")))
        });
        let factor = match (name, param) {
            ("monomial_up", None) => MonomialUp,
            ("monomial_down", None) => MonomialDown,
            ("bernoulli_up", Some(p)) => BernoulliUp(p?),
            ("bernoulli_down", Some(p)) => BernoulliDown(p?),
            ("poisson_up", Some(p)) => PoissonUp(p?),
            ("poisson_down", Some(p)) => PoissonDown(p?),
            ("geom_up", Some(p)) => GeomUp(p?),
            ("geom_down", Some(p)) => GeomDown(p?),
            _ => {
                return Err(Error::Config(format!(
                    "unknown factor {tok:?}; expected kind:param like bernoulli_up:1.0"
                )))
            }
        };
        factor.validate()?;
        Ok(factor)
    }
}

/// g(x) = Π factors; the empty product is the constant 1 (identity kernel).
#[derive(Clone, PartialEq, Debug)]
pub struct AdmissibleFunction {
    factors: Vec<ElementaryFactor>,
}

impl AdmissibleFunction {
    pub fn new(factors: Vec<ElementaryFactor>) -> Result<Self> {
        for f in &factors {
            f.validate()?;
        }
        Ok(AdmissibleFunction { factors })
    }

    /// g ≡ 1.
    pub fn one() -> Self {
        AdmissibleFunction {
            factors: Vec::new(),
        }
    }

    pub fn single(f: ElementaryFactor) -> Result<Self> {
        f.validate()?;
        Ok(AdmissibleFunction { factors: vec![f] })
    }

    pub fn factors(&self) -> &[ElementaryFactor] {
        &self.factors
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    /// g^k by repeating the factor list.
    pub fn pow(&self, k: usize) -> AdmissibleFunction {
        let mut factors = Vec::with_capacity(self.factors.len() * k);
        for _ in 0..k {
            factors.extend_from_slice(&self.factors);
        }
        AdmissibleFunction { factors }
    }

    /// Product of several admissible functions.
    pub fn product<'a>(gs: impl IntoIterator<Item = &'a AdmissibleFunction>) -> AdmissibleFunction {
        let mut factors = Vec::new();
        for g in gs {
            factors.extend_from_slice(&g.factors);
        }
        AdmissibleFunction { factors }
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let mut v = Complex64::new(1.0, 0.0);
        for f in &self.factors {
            v *= f.eval(z)?;
        }
        Ok(v)
    }

    /// Σ of factor logs at a positive real point.
    pub fn log_eval_pos(&self, x: f64) -> Result<f64> {
        let mut s = 0.0;
        for f in &self.factors {
            s += f.log_eval_pos(x)?;
        }
        Ok(s)
    }

    /// Complex log of g(z) as a sum of principal factor logs; its exp equals
    /// g(z) exactly, which keeps kernel integrands finite when direct
    /// products would overflow.
    pub fn log_eval(&self, z: Complex64) -> Result<Complex64> {
        let mut s = Complex64::new(0.0, 0.0);
        for f in &self.factors {
            s += f.eval(z)?.ln();
        }
        Ok(s)
    }

    /// Checks every factor against the level bound.
    pub fn admissible_at(&self, spec: &GeometricSpec) -> Result<()> {
        for f in &self.factors {
            if let Some(max_n) = f.max_level(spec.q()) {
                if spec.n() > max_n {
                    return Err(Error::Inadmissible(format!(
                        "{} only admissible up to level {max_n}, requested {}",
                        f.token(),
                        spec.n()
                    )));
                }
            }
        }
        Ok(())
    }

    /// True when g lies in the level-∞ class (no geom_up factor).
    pub fn admissible_at_infinity(&self) -> bool {
        !self.factors.iter().any(|f| matches!(f, GeomUp(_)))
    }

    /// Largest pole radius among down-type geometric factors, if any; the
    /// kernel w-contour must stay outside these.
    pub fn max_geom_down_pole(&self) -> Option<f64> {
        self.factors
            .iter()
            .filter_map(|f| match f {
                GeomDown(a) => Some(*a),
                _ => None,
            })
            .fold(None, |acc, a| Some(acc.map_or(a, |m: f64| m.max(a))))
    }

    /// Smallest pole radius among up-type geometric factors (1/α), if any.
    pub fn min_geom_up_pole(&self) -> Option<f64> {
        self.factors
            .iter()
            .filter_map(|f| match f {
                GeomUp(a) => Some(1.0 / *a),
                _ => None,
            })
            .fold(None, |acc, p| Some(acc.map_or(p, |m: f64| m.min(p))))
    }
}

impl fmt::Display for AdmissibleFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        let toks: Vec<String> = self.factors.iter().map(|x| x.token()).collect();
        write!(f, "{}", toks.join("*"))
    }
}

impl FromStr for AdmissibleFunction {
    type Err = Error;

    /// Compact factor string, e.g. `"bernoulli_up:1.0*poisson_down:0.5"`;
    /// `"1"` is the identity.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "1" {
            return Ok(AdmissibleFunction::one());
        }
        let factors = s
            .split('*')
            .map(ElementaryFactor::parse_token)
            .collect::<Result<Vec<_>>>()?;
        Ok(AdmissibleFunction { factors })
    }
}

/// Laurent coefficients c_lo..c_hi of an admissible function, together with
/// a bound on the weighted mass left outside the window.
#[derive(Clone, Debug)]
pub struct LaurentWindow {
    lo: i64,
    coeffs: Vec<f64>,
    pub tail_bound: f64,
}

impl LaurentWindow {
    pub fn delta() -> Self {
        LaurentWindow {
            lo: 0,
            coeffs: vec![1.0],
            tail_bound: 0.0,
        }
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.coeffs.len() as i64 - 1
    }

    /// c_k; zero outside the window.
    pub fn get(&self, k: i64) -> f64 {
        if k < self.lo || k > self.hi() {
            0.0
        } else {
            self.coeffs[(k - self.lo) as usize]
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, &c)| (self.lo + i as i64, c))
    }

    /// Σ_k c_k z^k.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        // Horner over the shifted polynomial Σ c_k z^{k-lo}, then restore z^lo
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc * z.powi(self.lo as i32)
    }

    fn convolve(&self, other: &LaurentWindow, mass_self: f64, mass_other: f64) -> LaurentWindow {
        let lo = self.lo + other.lo;
        let mut coeffs = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        LaurentWindow {
            lo,
            coeffs,
            tail_bound: self.tail_bound * mass_other + other.tail_bound * mass_self,
        }
    }
}

/// Weight applied to coefficient k when bounding neglected mass: the series
/// is used on the annulus 1 ≤ |x| ≤ q^{1−N}, so up-coefficients are weighted
/// by the outer radius and down-coefficients by 1.
fn weight(k: i64, w_up: f64) -> f64 {
    if k > 0 {
        w_up.powi(k.min(10_000) as i32)
    } else {
        1.0
    }
}

/// Weighted coefficient mass Σ_k c_k·w(k) of a single factor, in closed form.
fn factor_weighted_mass(f: &ElementaryFactor, w_up: f64) -> Result<f64> {
    let m = match *f {
        MonomialUp => w_up,
        MonomialDown => 1.0,
        BernoulliUp(b) => 1.0 + b * w_up,
        BernoulliDown(b) => 1.0 + b,
        PoissonUp(g) => (g * w_up).exp(),
        PoissonDown(g) => g.exp(),
        GeomUp(a) => {
            if a * w_up >= 1.0 {
                return Err(Error::Inadmissible(format!(
                    "geom_up:{a} used above its maximal level (α·q^(1-N) ≥ 1)"
                )));
            }
            1.0 / (1.0 - a * w_up)
        }
        GeomDown(a) => 1.0 / (1.0 - a),
    };
    if !m.is_finite() {
        return Err(Error::EnumerationBudget(
            "coefficient window mass overflows at this level".into(),
        ));
    }
    Ok(m)
}

fn factor_window(f: &ElementaryFactor, tol: f64, w_up: f64) -> Result<LaurentWindow> {
    let win = match *f {
        MonomialUp => LaurentWindow {
            lo: 1,
            coeffs: vec![1.0],
            tail_bound: 0.0,
        },
        MonomialDown => LaurentWindow {
            lo: -1,
            coeffs: vec![1.0],
            tail_bound: 0.0,
        },
        BernoulliUp(b) => LaurentWindow {
            lo: 0,
            coeffs: vec![1.0, b],
            tail_bound: 0.0,
        },
        BernoulliDown(b) => LaurentWindow {
            lo: -1,
            coeffs: vec![b, 1.0],
            tail_bound: 0.0,
        },
        PoissonUp(g) => poisson_window(g, w_up, tol, true),
        PoissonDown(g) => poisson_window(g, 1.0, tol, false),
        GeomUp(a) => {
            if a * w_up >= 1.0 {
                return Err(Error::Inadmissible(format!(
                    "geom_up:{a} used above its maximal level"
                )));
            }
            geometric_window(a, w_up, tol, true)
        }
        GeomDown(a) => geometric_window(a, 1.0, tol, false),
    };
    Ok(win)
}

/// Truncated exp(γx^{±1}): c_{±k} = γ^k/k! with weighted tail < tol.
fn poisson_window(g: f64, w: f64, tol: f64, up: bool) -> LaurentWindow {
    let mut coeffs = vec![1.0];
    let mut term = 1.0f64; // γ^k/k!
    let mut wterm; // weighted
    let mut k = 0usize;
    loop {
        k += 1;
        term *= g / k as f64;
        wterm = term * w.powi(k as i32);
        coeffs.push(term);
        let ratio = g * w / (k as f64 + 1.0);
        if ratio < 0.5 && 2.0 * wterm * ratio < tol {
            break;
        }
        if k > 5_000 {
            break;
        }
    }
    let tail = 2.0 * wterm * (g * w / (k as f64 + 1.0));
    if up {
        LaurentWindow {
            lo: 0,
            coeffs,
            tail_bound: tail,
        }
    } else {
        coeffs.reverse();
        LaurentWindow {
            lo: -(k as i64),
            coeffs,
            tail_bound: tail,
        }
    }
}

/// Truncated (1−αx^{±1})⁻¹: c_{±k} = α^k with weighted tail < tol.
fn geometric_window(a: f64, w: f64, tol: f64, up: bool) -> LaurentWindow {
    let r = a * w;
    let mut coeffs = vec![1.0];
    let mut term = 1.0f64;
    let mut k = 0usize;
    while term * r / (1.0 - r) >= tol && k < 50_000 {
        k += 1;
        term *= r;
        coeffs.push(a.powi(k as i32));
    }
    let tail = term * r / (1.0 - r);
    if up {
        LaurentWindow {
            lo: 0,
            coeffs,
            tail_bound: tail,
        }
    } else {
        coeffs.reverse();
        LaurentWindow {
            lo: -(k as i64),
            coeffs,
            tail_bound: tail,
        }
    }
}

/// Laurent coefficients of g at the given level, by coefficient convolution
/// of per-factor closed forms. The neglected coefficients carry weighted
/// mass below `tol`, with up-shifts weighted by the outer annulus radius
/// q^{1−N}.
pub fn laurent_coeffs(
    g: &AdmissibleFunction,
    tol: f64,
    spec: &GeometricSpec,
) -> Result<LaurentWindow> {
    if tol <= 0.0 {
        return Err(Error::InvalidParameter("tol must be positive".into()));
    }
    g.admissible_at(spec)?;
    let w_up = spec.q().powi(-(spec.n() as i32 - 1).max(0));
    if g.is_one() {
        return Ok(LaurentWindow::delta());
    }
    let masses = g
        .factors()
        .iter()
        .map(|f| factor_weighted_mass(f, w_up))
        .collect::<Result<Vec<f64>>>()?;
    let total_mass: f64 = masses.iter().product();
    if !total_mass.is_finite() {
        return Err(Error::EnumerationBudget(
            "coefficient window mass overflows at this level".into(),
        ));
    }
    let nf = g.factors().len() as f64;
    let per_factor_tol = tol / (nf * (total_mass + 1.0));
    let mut win: Option<LaurentWindow> = None;
    let mut mass_acc = 1.0f64;
    for (f, m) in g.factors().iter().zip(&masses) {
        let fw = factor_window(f, per_factor_tol, w_up)?;
        win = Some(match win {
            None => fw,
            Some(acc) => acc.convolve(&fw, mass_acc, *m),
        });
        mass_acc *= m;
    }
    let mut win = win.unwrap();
    if win.coeffs.len() > 200_000 {
        return Err(Error::EnumerationBudget(format!(
            "coefficient window of length {} exceeds budget",
            win.coeffs.len()
        )));
    }
    // clamp convolution noise; admissible coefficients are nonnegative
    for c in &mut win.coeffs {
        if *c < 0.0 {
            debug_assert!(*c > -1e-13, "materially negative Laurent coefficient");
            *c = 0.0;
        }
    }
    Ok(win)
}

/// Coefficients of exp(t(γ₊x + γ₋x⁻¹)):
/// c_k = Σ_{m ≥ max(0,−k)} (tγ₊)^{k+m}(tγ₋)^m / ((k+m)!·m!).
pub fn time_semigroup_coeffs(
    gamma_plus: f64,
    gamma_minus: f64,
    t: f64,
    tol: f64,
    spec: &GeometricSpec,
) -> Result<LaurentWindow> {
    if gamma_plus < 0.0 || gamma_minus < 0.0 || t < 0.0 {
        return Err(Error::InvalidParameter(
            "semigroup needs γ₊, γ₋, t ≥ 0".into(),
        ));
    }
    if tol <= 0.0 {
        return Err(Error::InvalidParameter("tol must be positive".into()));
    }
    let up = t * gamma_plus;
    let dn = t * gamma_minus;
    if up == 0.0 && dn == 0.0 {
        return Ok(LaurentWindow::delta());
    }
    let w_up = spec.q().powi(-(spec.n() as i32 - 1).max(0));
    let coeff = |k: i64| -> f64 {
        let mut sum = 0.0f64;
        let m0 = (-k).max(0);
        // term at m: up^{k+m} dn^m / ((k+m)! m!)
        let mut term = {
            let mut t = 1.0f64;
            for j in 1..=(k + m0) {
                t *= up / j as f64;
            }
            for j in 1..=m0 {
                t *= dn / j as f64;
            }
            t
        };
        let mut m = m0;
        loop {
            sum += term;
            m += 1;
            term *= up * dn / ((k + m) as f64 * m as f64);
            if term < sum.abs() * 1e-18 + 1e-320 || m > m0 + 2_000 {
                break;
            }
        }
        sum
    };
    // grow the window symmetrically until weighted edge terms drop below tol
    let mut lo = 0i64;
    let mut hi = 0i64;
    let budget = 20_000i64;
    while hi - lo < budget {
        let up_edge = coeff(hi + 1) * weight(hi + 1, w_up);
        let dn_edge = coeff(lo - 1);
        // geometric-decay margin: stop once edges are far below tol
        if up_edge < tol * 1e-2 && dn_edge < tol * 1e-2 {
            break;
        }
        if up_edge >= dn_edge {
            hi += 1;
        } else {
            lo -= 1;
        }
    }
    if hi - lo >= budget {
        return Err(Error::EnumerationBudget(
            "semigroup window exceeds budget".into(),
        ));
    }
    let coeffs: Vec<f64> = (lo..=hi).map(coeff).collect();
    let tail = coeff(hi + 1) * weight(hi + 1, w_up) + coeff(lo - 1);
    Ok(LaurentWindow {
        lo,
        coeffs,
        tail_bound: 10.0 * tail,
    })
}
