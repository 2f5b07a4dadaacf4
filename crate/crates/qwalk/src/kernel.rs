//! Space-time correlation kernels by contour quadrature.
//!
//! The chain started from the packed state has determinantal correlation
//! functions ρ_n = det[K(x_i,t_i; x_j,t_j)]. At level N the kernel is
//!
//! ```text
//! K^N(x₁,t₁;x₂,t₂) = −(1/2πi)∮_C w^{−(x₁−x₂+1)} Π_{t=t₂}^{t₁−1} g_t(w) dw · 1_{t₁>t₂}
//!   + (1/2πi)² ∮_C dw ∮_{C'_N} dz  Π_{t<t₁}g_t(w)/Π_{t<t₂}g_t(z)
//!       · Π_{ℓ=0}^{N−1} (1−q^ℓw)/(1−q^ℓz) · z^{x₂}/w^{x₁+1} · 1/(w−z)
//! ```
//!
//! where C circles 0 only and C'_N encloses exactly the poles q^{−ℓ},
//! ℓ < N. C'_N is realized as a union of small circles, one per pole: a
//! single enclosing circle passes within a fixed distance of the pole at
//! z = 1 while its radius grows like q^{1−N}, which stalls the trapezoid
//! rule already for moderate N. In the N→∞ limit the finite product becomes
//! (w;q)∞/(z;q)∞ and C'_N opens into a downward vertical line between C and
//! the point 1, integrated here in a sinh-stretched parameter with adaptive
//! truncation.
//!
//! Continuous real times replace the products by exp((t₁−t₂)(γ₊w+γ₋/w));
//! that extension is validated against the exact semigroup chains rather
//! than taken as ground truth.

use num_complex::Complex64;

use crate::contour::{circle_integral, circle_nodes, sinh_line_nodes, QuadOptions};
use crate::det::det_complex;
use crate::error::{Error, Result};
use crate::laurent::{laurent_coeffs, time_semigroup_coeffs, AdmissibleFunction};
use crate::schur::GeometricSpec;
use crate::sig::Signature;
use crate::transitions::{prob_from_window, WINDOW_TOL};

/// (w;q)_∞ = Π_{i≥0}(1−wq^i), truncated once the remaining factors cannot
/// move the value by a relative `tol`.
pub fn qpochhammer(w: Complex64, q: f64, tol: f64) -> Complex64 {
    qpochhammer_log(w, q, tol).exp()
}

/// Σ_i Log(1−wq^i); exponentiating reproduces the product exactly while
/// keeping huge |w| representable.
pub fn qpochhammer_log(w: Complex64, q: f64, tol: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut wq = w;
    let mut i = 0;
    while wq.norm() > tol * 0.1 && i < 10_000 {
        acc += (1.0 - wq).ln();
        wq *= q;
        i += 1;
    }
    // first-order tail: ln(1−u) ≈ −u summed over the remaining geometric u
    acc -= wq / (1.0 - q);
    acc
}

/// One space-time point (x, t). Discrete drives require integer t.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct SpaceTimePoint {
    pub x: i64,
    pub t: f64,
}

impl SpaceTimePoint {
    pub fn new(x: i64, t: f64) -> Self {
        SpaceTimePoint { x, t }
    }

    pub fn discrete(x: i64, t: usize) -> Self {
        SpaceTimePoint { x, t: t as f64 }
    }
}

/// The driving sequence: a constant g, one g per step, or continuous time.
#[derive(Clone, Debug)]
pub enum Drive {
    Constant(AdmissibleFunction),
    PerStep(Vec<AdmissibleFunction>),
    Continuous { gamma_plus: f64, gamma_minus: f64 },
}

#[derive(Clone, Copy, PartialEq, Debug)]
pub enum Level {
    Finite(usize),
    Infinite,
}

/// Everything defining K^N or K: q, the level, and the drive.
#[derive(Clone, Debug)]
pub struct KernelSpec {
    pub q: f64,
    pub level: Level,
    pub drive: Drive,
}

impl KernelSpec {
    pub fn constant(q: f64, level: Level, g: AdmissibleFunction) -> Result<Self> {
        let ks = KernelSpec {
            q,
            level,
            drive: Drive::Constant(g),
        };
        ks.validate()?;
        Ok(ks)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1e-6..=1.0 - 1e-6).contains(&self.q) {
            return Err(Error::InvalidParameter(format!(
                "q must lie in [1e-6, 1-1e-6], got {}",
                self.q
            )));
        }
        match (&self.level, &self.drive) {
            (Level::Finite(n), Drive::Constant(g)) => {
                g.admissible_at(&GeometricSpec::new(self.q, *n)?)?
            }
            (Level::Finite(n), Drive::PerStep(gs)) => {
                let spec = GeometricSpec::new(self.q, *n)?;
                for g in gs {
                    g.admissible_at(&spec)?;
                }
            }
            (Level::Infinite, Drive::Constant(g)) => {
                if !g.admissible_at_infinity() {
                    return Err(Error::Inadmissible(
                        "geom_up factors are finite-N only; not admissible at level ∞".into(),
                    ));
                }
            }
            (Level::Infinite, Drive::PerStep(gs)) => {
                if gs.iter().any(|g| !g.admissible_at_infinity()) {
                    return Err(Error::Inadmissible(
                        "geom_up factors are finite-N only; not admissible at level ∞".into(),
                    ));
                }
            }
            (
                _,
                Drive::Continuous {
                    gamma_plus,
                    gamma_minus,
                },
            ) => {
                if *gamma_plus < 0.0 || *gamma_minus < 0.0 {
                    return Err(Error::InvalidParameter("rates must be ≥ 0".into()));
                }
            }
        }
        Ok(())
    }

    fn g_at(&self, t: usize) -> Result<&AdmissibleFunction> {
        match &self.drive {
            Drive::Constant(g) => Ok(g),
            Drive::PerStep(gs) => gs
                .get(t)
                .ok_or_else(|| Error::Config(format!("drive sequence has no g_{t}; extend it"))),
            Drive::Continuous { .. } => Err(Error::Config(
                "discrete g requested from a continuous drive".into(),
            )),
        }
    }

    fn require_time(&self, t: f64) -> Result<()> {
        if t < 0.0 {
            return Err(Error::InvalidParameter("times must be ≥ 0".into()));
        }
        if !matches!(self.drive, Drive::Continuous { .. }) && t.fract() != 0.0 {
            return Err(Error::InvalidParameter(format!(
                "discrete drives need integer times, got {t}"
            )));
        }
        Ok(())
    }

    /// Log of Π_{t=a}^{b−1} g_t(z), or (b−a)(γ₊z+γ₋/z) for continuous time.
    fn log_drive_prod(&self, z: Complex64, a: f64, b: f64) -> Result<Complex64> {
        if b <= a {
            return Ok(Complex64::new(0.0, 0.0));
        }
        match &self.drive {
            Drive::Continuous {
                gamma_plus,
                gamma_minus,
            } => Ok((b - a) * (gamma_plus * z + gamma_minus / z)),
            _ => {
                let mut acc = Complex64::new(0.0, 0.0);
                for t in (a as usize)..(b as usize) {
                    acc += self.g_at(t)?.log_eval(z)?;
                }
                Ok(acc)
            }
        }
    }

    /// Largest geom_down pole among drive functions used before `t_max`.
    fn max_drive_pole(&self, t_max: usize) -> f64 {
        match &self.drive {
            Drive::Constant(g) => g.max_geom_down_pole().unwrap_or(0.0),
            Drive::PerStep(gs) => gs
                .iter()
                .take(t_max.max(1))
                .filter_map(|g| g.max_geom_down_pole())
                .fold(0.0, f64::max),
            Drive::Continuous { .. } => 0.0,
        }
    }

    fn min_geom_up_pole(&self, t_max: usize) -> f64 {
        match &self.drive {
            Drive::Constant(g) => g.min_geom_up_pole().unwrap_or(f64::INFINITY),
            Drive::PerStep(gs) => gs
                .iter()
                .take(t_max.max(1))
                .filter_map(|g| g.min_geom_up_pole())
                .fold(f64::INFINITY, f64::min),
            Drive::Continuous { .. } => f64::INFINITY,
        }
    }
}

/// Contour geometry: the w-circle radius r₀, the vertical-line abscissa for
/// the limit kernel, and quadrature controls.
#[derive(Clone, Copy, Debug)]
pub struct ContourPlan {
    pub w_radius: f64,
    pub line_re: f64,
    pub tol: f64,
    pub start_nodes: usize,
    pub max_nodes: usize,
}

impl ContourPlan {
    /// Default: |w| = √q with the line halfway between the w-circle and 1.
    pub fn for_q(q: f64) -> Self {
        let r0 = q.sqrt();
        ContourPlan {
            w_radius: r0,
            line_re: (1.0 + r0) / 2.0,
            tol: 1e-10,
            start_nodes: 64,
            max_nodes: 1 << 15,
        }
    }

    pub fn with_w_radius(mut self, r: f64) -> Self {
        self.w_radius = r;
        self
    }

    pub fn with_line_re(mut self, c: f64) -> Self {
        self.line_re = c;
        self
    }

    fn quad(&self) -> QuadOptions {
        QuadOptions {
            tol: self.tol,
            start_nodes: self.start_nodes,
            max_nodes: self.max_nodes,
        }
    }
}

fn validate_w_contour(ks: &KernelSpec, plan: &ContourPlan, t_max: usize) -> Result<()> {
    let r0 = plan.w_radius;
    if !(0.0..1.0).contains(&r0) || r0 == 0.0 {
        return Err(Error::Quadrature(format!(
            "w-radius {r0} must lie in (0,1)"
        )));
    }
    let pole = ks.max_drive_pole(t_max);
    if r0 <= pole + 1e-9 {
        return Err(Error::Quadrature(format!(
            "w-radius {r0} must exceed the geom_down pole at {pole}"
        )));
    }
    // C must stay clear of the innermost z-circle around 1
    if r0 >= (1.0 + ks.q) / 2.0 - 1e-9 {
        return Err(Error::Quadrature(format!(
            "w-radius {r0} reaches the z-contour around 1 (q = {})",
            ks.q
        )));
    }
    Ok(())
}

/// K^N(p₁, p₂) with the z-contour realized as one circle per pole q^{−ℓ}.
pub fn kernel_finite_n(
    p1: SpaceTimePoint,
    p2: SpaceTimePoint,
    ks: &KernelSpec,
    plan: &ContourPlan,
) -> Result<Complex64> {
    let n = match ks.level {
        Level::Finite(n) => n,
        Level::Infinite => {
            return Err(Error::InvalidParameter(
                "kernel_finite_n needs a finite level".into(),
            ))
        }
    };
    ks.validate()?;
    ks.require_time(p1.t)?;
    ks.require_time(p2.t)?;
    let t_max = p1.t.max(p2.t) as usize + 1;
    validate_w_contour(ks, plan, t_max)?;
    let q = ks.q;
    // geom_up poles must stay outside every z-circle
    let outer_z = q.powi(1 - n as i32) * (1.0 + (1.0 - q) / 2.0);
    if ks.min_geom_up_pole(t_max) <= outer_z {
        return Err(Error::Quadrature(
            "geom_up pole falls inside the z-contour at this level".into(),
        ));
    }

    let single = single_time_term(p1, p2, ks, plan)?;

    let pole_logs = |z: Complex64| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for l in 0..n {
            acc += (1.0 - q.powi(l as i32) * z).ln();
        }
        acc
    };
    let a_fn = |w: Complex64| -> Result<Complex64> {
        let lg = ks.log_drive_prod(w, 0.0, p1.t)?;
        Ok((lg + pole_logs(w) - (p1.x + 1) as f64 * w.ln()).exp())
    };
    let b_fn = |z: Complex64| -> Result<Complex64> {
        let lg = ks.log_drive_prod(z, 0.0, p2.t)?;
        Ok((p2.x as f64 * z.ln() - lg - pole_logs(z)).exp())
    };

    let mut m = plan.start_nodes.max(16);
    let mut prev: Option<Complex64> = None;
    loop {
        let (wn, ww) = circle_nodes(Complex64::new(0.0, 0.0), plan.w_radius, m);
        let mut zn = Vec::new();
        let mut zw = Vec::new();
        for l in 0..n {
            let center = q.powi(-(l as i32));
            let (mut a, mut b) =
                circle_nodes(Complex64::new(center, 0.0), center * (1.0 - q) / 2.0, m);
            zn.append(&mut a);
            zw.append(&mut b);
        }
        let bs: Vec<Complex64> = zn
            .iter()
            .zip(&zw)
            .map(|(&z, &wz)| Ok(b_fn(z)? * wz))
            .collect::<Result<_>>()?;
        let mut acc = Complex64::new(0.0, 0.0);
        for (&w, &cw) in wn.iter().zip(&ww) {
            let aw = a_fn(w)? * cw;
            if aw.norm() == 0.0 {
                continue;
            }
            let mut inner = Complex64::new(0.0, 0.0);
            for (&z, &bz) in zn.iter().zip(&bs) {
                inner += bz / (w - z);
            }
            acc += aw * inner;
        }
        let val = single + acc;
        if let Some(p) = prev {
            if (val - p).norm() < plan.tol * (1.0 + val.norm()) {
                return Ok(val);
            }
        }
        prev = Some(val);
        m *= 2;
        if m > plan.max_nodes {
            return Err(Error::Quadrature(format!(
                "finite-N kernel did not stabilize within {} nodes per circle",
                plan.max_nodes
            )));
        }
    }
}

/// −(1/2πi)∮ w^{−(x₁−x₂+1)} Π_{t=t₂}^{t₁−1} g_t(w) dw · 1_{t₁>t₂}.
fn single_time_term(
    p1: SpaceTimePoint,
    p2: SpaceTimePoint,
    ks: &KernelSpec,
    plan: &ContourPlan,
) -> Result<Complex64> {
    if p1.t <= p2.t {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let e = -(p1.x - p2.x + 1) as f64;
    let mut failed = None;
    let v = circle_integral(
        Complex64::new(0.0, 0.0),
        plan.w_radius,
        &plan.quad(),
        |w| match ks.log_drive_prod(w, p2.t, p1.t) {
            Ok(lg) => (lg + e * w.ln()).exp(),
            Err(err) => {
                failed = Some(err);
                Complex64::new(f64::NAN, f64::NAN)
            }
        },
    )?;
    if let Some(err) = failed {
        return Err(err);
    }
    Ok(-v)
}

/// The N→∞ kernel K(p₁, p₂).
pub fn kernel_limit(
    p1: SpaceTimePoint,
    p2: SpaceTimePoint,
    ks: &KernelSpec,
    plan: &ContourPlan,
) -> Result<Complex64> {
    if ks.level != Level::Infinite {
        return Err(Error::InvalidParameter("kernel_limit needs level ∞".into()));
    }
    ks.validate()?;
    ks.require_time(p1.t)?;
    ks.require_time(p2.t)?;
    let t_max = p1.t.max(p2.t) as usize + 1;
    validate_w_contour(ks, plan, t_max)?;
    let c = plan.line_re;
    if c <= plan.w_radius + 1e-3 || c >= 1.0 - 1e-3 {
        return Err(Error::Quadrature(format!(
            "line abscissa {c} must lie strictly between the w-circle ({}) and 1",
            plan.w_radius
        )));
    }
    let q = ks.q;
    let ptol = (plan.tol * 1e-3).min(1e-14);
    let a_fn = |w: Complex64| -> Result<Complex64> {
        let lg = ks.log_drive_prod(w, 0.0, p1.t)?;
        Ok((lg + qpochhammer_log(w, q, ptol) - (p1.x + 1) as f64 * w.ln()).exp())
    };
    let b_fn = |z: Complex64| -> Result<Complex64> {
        let lg = ks.log_drive_prod(z, 0.0, p2.t)?;
        Ok((p2.x as f64 * z.ln() - lg - qpochhammer_log(z, q, ptol)).exp())
    };
    let single = single_time_term(p1, p2, ks, plan)?;

    let b_scale = b_fn(Complex64::new(c, 0.0))?.norm().max(1e-290);
    let mut m = plan.start_nodes.max(16);
    let mut h = 0.05f64;
    let mut cutoff = b_scale * 1e-13;
    let mut prev: Option<Complex64> = None;
    for _ in 0..7 {
        let mut berr = None;
        let (zn, zw) = sinh_line_nodes(c, h, 42.0, |z| match b_fn(z) {
            Ok(v) => v.norm() > cutoff,
            Err(e) => {
                berr = Some(e);
                false
            }
        })?;
        if let Some(e) = berr {
            return Err(e);
        }
        let bs: Vec<Complex64> = zn
            .iter()
            .zip(&zw)
            .map(|(&z, &wz)| Ok(b_fn(z)? * wz))
            .collect::<Result<_>>()?;
        let (wn, ww) = circle_nodes(Complex64::new(0.0, 0.0), plan.w_radius, m);
        let mut acc = Complex64::new(0.0, 0.0);
        for (&w, &cw) in wn.iter().zip(&ww) {
            let aw = a_fn(w)? * cw;
            if aw.norm() == 0.0 {
                continue;
            }
            let mut inner = Complex64::new(0.0, 0.0);
            for (&z, &bz) in zn.iter().zip(&bs) {
                inner += bz / (w - z);
            }
            acc += aw * inner;
        }
        let val = single + acc;
        if let Some(p) = prev {
            if (val - p).norm() < plan.tol * (1.0 + val.norm()) {
                return Ok(val);
            }
        }
        prev = Some(val);
        m *= 2;
        h /= 2.0;
        cutoff /= 16.0;
    }
    Err(Error::Quadrature(
        "limit kernel did not stabilize under refinement".into(),
    ))
}

/// Kernel dispatch on the level.
pub fn kernel(
    p1: SpaceTimePoint,
    p2: SpaceTimePoint,
    ks: &KernelSpec,
    plan: &ContourPlan,
) -> Result<Complex64> {
    match ks.level {
        Level::Finite(_) => kernel_finite_n(p1, p2, ks, plan),
        Level::Infinite => kernel_limit(p1, p2, ks, plan),
    }
}

/// ρ_n(points) = det[K(p_i, p_j)]. The points must be pairwise distinct; a
/// large imaginary residue in the determinant signals quadrature failure.
pub fn correlation_fn(
    points: &[SpaceTimePoint],
    ks: &KernelSpec,
    plan: &ContourPlan,
) -> Result<f64> {
    let n = points.len();
    if n == 0 {
        return Ok(1.0);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if points[i] == points[j] {
                return Err(Error::InvalidParameter(format!(
                    "correlation points must be pairwise distinct, got {:?} twice",
                    points[i]
                )));
            }
        }
    }
    let mut m = nalgebra::DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = kernel(points[i], points[j], ks, plan)?;
        }
    }
    let det = det_complex(m);
    if det.im.abs() > 1e-8 {
        return Err(Error::Quadrature(format!(
            "correlation determinant has imaginary residue {}",
            det.im
        )));
    }
    let re = det.re;
    if !(-1e-8..=1.0 + 1e-8).contains(&re) {
        return Err(Error::Quadrature(format!(
            "correlation value {re} outside [0,1] beyond tolerance"
        )));
    }
    Ok(re.clamp(0.0, 1.0))
}

/// One-time law of the chain at time t₀ as a (possibly two-sided) Schur
/// measure: Prob(λ) = (Π_i 1/G(ξ_i)) · det[c_{λ_i−i+j}] · s_λ(ξ), where G is
/// the drive product up to t₀ and {c_k} its coefficients.
pub fn schur_measure_prob(lambda: &Signature, t0: f64, ks: &KernelSpec) -> Result<f64> {
    let n = match ks.level {
        Level::Finite(n) => n,
        Level::Infinite => {
            return Err(Error::InvalidParameter(
                "schur_measure_prob needs a finite level".into(),
            ))
        }
    };
    if lambda.len() != n {
        return Err(Error::LengthMismatch(format!(
            "signature length {} vs level {n}",
            lambda.len()
        )));
    }
    ks.require_time(t0)?;
    let spec = GeometricSpec::new(ks.q, n)?;
    let (window, log_norm) = match &ks.drive {
        Drive::Continuous {
            gamma_plus,
            gamma_minus,
        } => {
            let window = time_semigroup_coeffs(*gamma_plus, *gamma_minus, t0, WINDOW_TOL, &spec)?;
            let log_norm = (1..=n)
                .map(|i| {
                    let xi = spec.xi(i);
                    t0 * (gamma_plus * xi + gamma_minus / xi)
                })
                .sum();
            (window, log_norm)
        }
        _ => {
            let steps = t0 as usize;
            let gs: Vec<&AdmissibleFunction> =
                (0..steps).map(|t| ks.g_at(t)).collect::<Result<_>>()?;
            let prod = AdmissibleFunction::product(gs);
            let window = laurent_coeffs(&prod, WINDOW_TOL, &spec)?;
            let mut log_norm = 0.0;
            for i in 1..=n {
                log_norm += prod.log_eval_pos(spec.xi(i))?;
            }
            (window, log_norm)
        }
    };
    prob_from_window(&window, log_norm, &spec, &Signature::zero(n), lambda)
}

/// The static equal-time Schur-measure kernel, written exactly as the
/// double contour integral with the product Π_ℓ (1−w/ξ_ℓ)/(1−z/ξ_ℓ) over
/// ξ_ℓ = q^{1−ℓ}. Kept as an independent code path: the dynamical kernel at
/// equal times must reduce to it.
pub fn static_schur_kernel(
    x1: i64,
    x2: i64,
    t0: usize,
    g: &AdmissibleFunction,
    spec: &GeometricSpec,
    plan: &ContourPlan,
) -> Result<Complex64> {
    let n = spec.n();
    let q = spec.q();
    let xi: Vec<f64> = (1..=n).map(|i| spec.xi(i)).collect();
    let g_pow = |z: Complex64| -> Result<Complex64> { Ok(g.log_eval(z)? * t0 as f64) };
    let a_fn = |w: Complex64| -> Result<Complex64> {
        let mut lg = g_pow(w)?;
        for &x in &xi {
            lg += (1.0 - w / x).ln();
        }
        Ok((lg - (x1 + 1) as f64 * w.ln()).exp())
    };
    let b_fn = |z: Complex64| -> Result<Complex64> {
        let mut lg = x2 as f64 * z.ln() - g_pow(z)?;
        for &x in &xi {
            lg -= (1.0 - z / x).ln();
        }
        Ok(lg.exp())
    };
    let mut m = plan.start_nodes.max(16);
    let mut prev: Option<Complex64> = None;
    loop {
        let (wn, ww) = circle_nodes(Complex64::new(0.0, 0.0), plan.w_radius, m);
        let mut zn = Vec::new();
        let mut zw = Vec::new();
        for &x in &xi {
            let (mut a, mut b) = circle_nodes(Complex64::new(x, 0.0), x * (1.0 - q) / 2.0, m);
            zn.append(&mut a);
            zw.append(&mut b);
        }
        let bs: Vec<Complex64> = zn
            .iter()
            .zip(&zw)
            .map(|(&z, &wz)| Ok(b_fn(z)? * wz))
            .collect::<Result<_>>()?;
        let mut acc = Complex64::new(0.0, 0.0);
        for (&w, &cw) in wn.iter().zip(&ww) {
            let aw = a_fn(w)? * cw;
            let mut inner = Complex64::new(0.0, 0.0);
            for (&z, &bz) in zn.iter().zip(&bs) {
                inner += bz / (w - z);
            }
            acc += aw * inner;
        }
        if let Some(p) = prev {
            if (acc - p).norm() < plan.tol * (1.0 + acc.norm()) {
                return Ok(acc);
            }
        }
        prev = Some(acc);
        m *= 2;
        if m > plan.max_nodes {
            return Err(Error::Quadrature("static kernel did not stabilize".into()));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transitions::{chain_distribution, exact_correlation};

    fn bernoulli1() -> AdmissibleFunction {
        "bernoulli_up:1".parse().unwrap()
    }

    fn binom(n: u64, k: u64) -> f64 {
        let mut v = 1.0;
        for i in 0..k {
            v = v * (n - i) as f64 / (i + 1) as f64;
        }
        v
    }

    #[test]
    fn qpochhammer_basics() {
        // (0; q)∞ = 1
        let one = qpochhammer(Complex64::new(0.0, 0.0), 0.5, 1e-14);
        assert!((one.re - 1.0).abs() < 1e-14 && one.im == 0.0);

        // (q; q)∞ at q = 1/2 against the direct partial product
        let mut direct = 1.0f64;
        for i in 1..200 {
            direct *= 1.0 - 0.5f64.powi(i);
        }
        let v = qpochhammer(Complex64::new(0.5, 0.0), 0.5, 1e-14);
        assert!((v.re - direct).abs() < 1e-14, "{} vs {direct}", v.re);

        // functional equation (w;q)∞ = (1−w)(wq;q)∞
        let w = Complex64::new(0.3, -0.7);
        let lhs = qpochhammer(w, 0.4, 1e-13);
        let rhs = (1.0 - w) * qpochhammer(w * 0.4, 0.4, 1e-13);
        assert!((lhs - rhs).norm() < 1e-12 * rhs.norm());
    }

    #[test]
    fn single_walker_diagonal_is_binomial() {
        // N = 1, ξ₁ = 1, g = 1+x: ρ₁(x, t) = C(t, x)/2^t
        let ks = KernelSpec::constant(0.5, Level::Finite(1), bernoulli1()).unwrap();
        let plan = ContourPlan::for_q(0.5);
        for t in 0..=3usize {
            for x in -1i64..=4 {
                let k = kernel_finite_n(
                    SpaceTimePoint::discrete(x, t),
                    SpaceTimePoint::discrete(x, t),
                    &ks,
                    &plan,
                )
                .unwrap();
                let expect = if (0..=t as i64).contains(&x) {
                    binom(t as u64, x as u64) / 2f64.powi(t as i32)
                } else {
                    0.0
                };
                assert!(
                    (k.re - expect).abs() < 1e-9 && k.im.abs() < 1e-10,
                    "t={t} x={x}: {k} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn packed_start_diagonal_finite_n() {
        let ks = KernelSpec::constant(0.5, Level::Finite(3), bernoulli1()).unwrap();
        let plan = ContourPlan::for_q(0.5);
        for x in -3i64..=6 {
            let k = kernel_finite_n(
                SpaceTimePoint::discrete(x, 0),
                SpaceTimePoint::discrete(x, 0),
                &ks,
                &plan,
            )
            .unwrap();
            let expect = if (0..3).contains(&x) { 1.0 } else { 0.0 };
            assert!((k.re - expect).abs() < 1e-9, "x={x}: {}", k.re);
        }
    }

    #[test]
    fn density_sums_to_particle_count() {
        let ks = KernelSpec::constant(0.5, Level::Finite(2), bernoulli1()).unwrap();
        let plan = ContourPlan::for_q(0.5);
        let mut total = 0.0;
        for x in -6i64..=12 {
            total += kernel_finite_n(
                SpaceTimePoint::discrete(x, 2),
                SpaceTimePoint::discrete(x, 2),
                &ks,
                &plan,
            )
            .unwrap()
            .re;
        }
        assert!((total - 2.0).abs() < 1e-6, "Σρ₁ = {total}");
    }

    #[test]
    fn correlations_match_chain_enumeration() {
        // N = 2, q = 0.5, g = 1+x, times ≤ 2: ρ₁ and ρ₂ including multi-time
        let ks = KernelSpec::constant(0.5, Level::Finite(2), bernoulli1()).unwrap();
        let plan = ContourPlan::for_q(0.5);
        let spec = GeometricSpec::new(0.5, 2).unwrap();
        let gs = [bernoulli1()];
        for (x, t) in [(0i64, 1usize), (1, 1), (2, 1), (3, 2), (0, 2)] {
            let rho = correlation_fn(&[SpaceTimePoint::discrete(x, t)], &ks, &plan).unwrap();
            let exact = exact_correlation(&[(x, t)], &gs, &spec, 1e-13).unwrap();
            assert!((rho - exact).abs() < 1e-6, "ρ₁({x},{t}): {rho} vs {exact}");
        }
        for pts in [
            [(0i64, 1usize), (1, 1)],
            [(1, 1), (2, 2)],
            [(2, 1), (0, 2)],
            [(1, 0), (2, 1)],
        ] {
            let stp: Vec<SpaceTimePoint> = pts
                .iter()
                .map(|&(x, t)| SpaceTimePoint::discrete(x, t))
                .collect();
            let rho = correlation_fn(&stp, &ks, &plan).unwrap();
            let exact = exact_correlation(&pts, &gs, &spec, 1e-13).unwrap();
            assert!((rho - exact).abs() < 1e-6, "ρ₂{pts:?}: {rho} vs {exact}");
        }
    }

    #[test]
    fn limit_kernel_diagonal_at_time_zero() {
        let ks = KernelSpec::constant(0.5, Level::Infinite, bernoulli1()).unwrap();
        let plan = ContourPlan::for_q(0.5);
        for x in [-3i64, -1, 0, 1, 4] {
            let k = kernel_limit(
                SpaceTimePoint::discrete(x, 0),
                SpaceTimePoint::discrete(x, 0),
                &ks,
                &plan,
            )
            .unwrap();
            let expect = if x >= 0 { 1.0 } else { 0.0 };
            assert!(
                (k.re - expect).abs() < 1e-6 && k.im.abs() < 1e-8,
                "x={x}: {k}"
            );
        }
    }

    #[test]
    fn limit_kernel_contour_invariance() {
        let ks = KernelSpec::constant(0.5, Level::Infinite, bernoulli1()).unwrap();
        let p1 = SpaceTimePoint::discrete(1, 2);
        let p2 = SpaceTimePoint::discrete(0, 1);
        let mut vals = Vec::new();
        for r0 in [0.3, 0.5, 0.7] {
            for c in [0.85, 0.9] {
                let plan = ContourPlan::for_q(0.5).with_w_radius(r0).with_line_re(c);
                vals.push(kernel_limit(p1, p2, &ks, &plan).unwrap());
            }
        }
        for v in &vals[1..] {
            assert!((v - vals[0]).norm() < 1e-9, "{v} vs {}", vals[0]);
        }
    }

    #[test]
    fn finite_kernel_contour_invariance() {
        let ks = KernelSpec::constant(0.5, Level::Finite(3), bernoulli1()).unwrap();
        let p1 = SpaceTimePoint::discrete(2, 1);
        let p2 = SpaceTimePoint::discrete(0, 2);
        let base = kernel_finite_n(p1, p2, &ks, &ContourPlan::for_q(0.5)).unwrap();
        for r0 in [0.3, 0.55] {
            let v =
                kernel_finite_n(p1, p2, &ks, &ContourPlan::for_q(0.5).with_w_radius(r0)).unwrap();
            assert!((v - base).norm() < 1e-9);
        }
    }

    #[test]
    fn finite_kernel_converges_to_limit() {
        let ks_inf = KernelSpec::constant(0.5, Level::Infinite, bernoulli1()).unwrap();
        let plan = ContourPlan::for_q(0.5);
        let p1 = SpaceTimePoint::discrete(1, 1);
        let p2 = SpaceTimePoint::discrete(0, 2);
        let limit = kernel_limit(p1, p2, &ks_inf, &plan).unwrap();
        // the discrepancy decays like q^N
        let mut prev_err = f64::INFINITY;
        for n in [4usize, 8, 16, 24] {
            let ks = KernelSpec::constant(0.5, Level::Finite(n), bernoulli1()).unwrap();
            let err = (kernel_finite_n(p1, p2, &ks, &plan).unwrap() - limit).norm();
            assert!(err < prev_err.max(1e-11) * 1.5, "N={n}: {err}");
            prev_err = err;
        }
        assert!(prev_err < 1e-6);
    }

    #[test]
    fn equal_time_kernel_reduces_to_static_schur_kernel() {
        let ks = KernelSpec::constant(0.5, Level::Finite(3), bernoulli1()).unwrap();
        let spec = GeometricSpec::new(0.5, 3).unwrap();
        let plan = ContourPlan::for_q(0.5);
        let t0 = 2usize;
        for (x1, x2) in [(0i64, 0i64), (1, 0), (3, 2), (-1, 2), (4, 4), (2, 5)] {
            let dynamic = kernel_finite_n(
                SpaceTimePoint::discrete(x1, t0),
                SpaceTimePoint::discrete(x2, t0),
                &ks,
                &plan,
            )
            .unwrap();
            let xstatic = static_schur_kernel(x1, x2, t0, &bernoulli1(), &spec, &plan).unwrap();
            assert!(
                (dynamic - xstatic).norm() < 1e-9,
                "({x1},{x2}): {dynamic} vs {xstatic}"
            );
        }
    }

    #[test]
    fn schur_measure_examples() {
        let ks = KernelSpec::constant(0.5, Level::Finite(2), bernoulli1()).unwrap();
        let zero = Signature::zero(2);
        // t₀ = 0: delta at 0
        assert!((schur_measure_prob(&zero, 0.0, &ks).unwrap() - 1.0).abs() < 1e-14);
        // t₀ = 1 equals one transition step from 0
        let one_step =
            schur_measure_prob(&Signature::new(vec![1, 0]).unwrap(), 1.0, &ks).unwrap();
        assert!((one_step - 0.5).abs() < 1e-13);
        // t₀ = 2 matches the exact chain distribution
        let spec = GeometricSpec::new(0.5, 2).unwrap();
        let dist = chain_distribution(2, &[bernoulli1()], &spec, 1e-13).unwrap();
        for (la, p) in dist.iter() {
            let sm = schur_measure_prob(la, 2.0, &ks).unwrap();
            assert!((sm - p).abs() < 1e-12, "{la}: {sm} vs {p}");
        }
    }

    #[test]
    fn continuous_time_single_particle_is_poisson() {
        // N = 1, γ₋ = 0: ρ₁(x, t) = e^{−t} t^x / x!
        let ks = KernelSpec {
            q: 0.5,
            level: Level::Finite(1),
            drive: Drive::Continuous {
                gamma_plus: 1.0,
                gamma_minus: 0.0,
            },
        };
        let plan = ContourPlan::for_q(0.5);
        let t = 0.7;
        let mut fact = 1.0;
        for x in 0i64..5 {
            if x > 0 {
                fact *= x as f64;
            }
            let k = kernel_finite_n(
                SpaceTimePoint::new(x, t),
                SpaceTimePoint::new(x, t),
                &ks,
                &plan,
            )
            .unwrap();
            let expect = (-t).exp() * t.powi(x as i32) / fact;
            assert!((k.re - expect).abs() < 1e-10, "x={x}: {} vs {expect}", k.re);
        }
    }

    #[test]
    fn continuous_time_kernel_matches_semigroup_chain() {
        // N = 2: equal-time ρ₁ from the kernel vs the exact semigroup row
        use crate::transitions::semigroup_distribution;
        let (gp, gm, t) = (0.8, 0.3, 0.6);
        let spec = GeometricSpec::new(0.5, 2).unwrap();
        let dist = semigroup_distribution(gp, gm, t, &spec, 1e-12).unwrap();
        let ks = KernelSpec {
            q: 0.5,
            level: Level::Finite(2),
            drive: Drive::Continuous {
                gamma_plus: gp,
                gamma_minus: gm,
            },
        };
        let plan = ContourPlan::for_q(0.5);
        for x in -4i64..=6 {
            let mut exact = 0.0;
            for (la, p) in dist.iter() {
                if la.to_config().points().binary_search(&x).is_ok() {
                    exact += p;
                }
            }
            let rho = correlation_fn(&[SpaceTimePoint::new(x, t)], &ks, &plan).unwrap();
            assert!((rho - exact).abs() < 1e-7, "x={x}: {rho} vs {exact}");
        }
    }

    #[test]
    fn contour_violations_are_reported() {
        let g: AdmissibleFunction = "geom_down:0.8".parse().unwrap();
        let ks = KernelSpec::constant(0.5, Level::Finite(2), g).unwrap();
        // default w-radius √q ≈ 0.707 sits below the pole at 0.8
        let err = kernel_finite_n(
            SpaceTimePoint::discrete(0, 1),
            SpaceTimePoint::discrete(0, 1),
            &ks,
            &ContourPlan::for_q(0.5),
        );
        assert!(err.is_err());
    }
}
