//! Contour quadrature primitives.
//!
//! Circles use uniform-angle trapezoid sums, which are spectrally accurate
//! for integrands analytic in a neighborhood of the contour. Infinite
//! vertical lines use an equal-step trapezoid, either directly (Gaussian
//! decay) or in a sinh-stretched parameter (super-polynomial decay), with
//! the truncation extended adaptively until the tail stops contributing.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    /// Stop refining once successive values differ by less than this.
    pub tol: f64,
    pub start_nodes: usize,
    pub max_nodes: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            tol: 1e-10,
            start_nodes: 64,
            max_nodes: 1 << 20,
        }
    }
}

impl QuadOptions {
    pub fn with_tol(tol: f64) -> Self {
        QuadOptions {
            tol,
            ..QuadOptions::default()
        }
    }
}

/// Nodes and weights such that (1/2πi)∮ f(z) dz ≈ Σ_j w_j f(z_j) on a
/// positively oriented circle.
pub fn circle_nodes(center: Complex64, radius: f64, m: usize) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut zs = Vec::with_capacity(m);
    let mut ws = Vec::with_capacity(m);
    for j in 0..m {
        let th = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
        let e = Complex64::from_polar(1.0, th);
        zs.push(center + radius * e);
        ws.push(radius / m as f64 * e);
    }
    (zs, ws)
}

/// (1/2πi)∮ f(z) dz over the circle |z − center| = radius, doubling the
/// node count until two successive refinements agree.
pub fn circle_integral<F>(
    center: Complex64,
    radius: f64,
    opts: &QuadOptions,
    mut f: F,
) -> Result<Complex64>
where
    F: FnMut(Complex64) -> Complex64,
{
    let mut m = opts.start_nodes.max(8);
    let mut prev = eval_circle(center, radius, m, &mut f);
    loop {
        m *= 2;
        if m > opts.max_nodes {
            return Err(Error::Quadrature(format!(
                "circle integral at {center} did not stabilize within {} nodes",
                opts.max_nodes
            )));
        }
        let cur = eval_circle(center, radius, m, &mut f);
        if (cur - prev).norm() < opts.tol * (1.0 + cur.norm()) {
            return Ok(cur);
        }
        prev = cur;
    }
}

fn eval_circle<F>(center: Complex64, radius: f64, m: usize, f: &mut F) -> Complex64
where
    F: FnMut(Complex64) -> Complex64,
{
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..m {
        let th = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
        let e = Complex64::from_polar(1.0, th);
        acc += f(center + radius * e) * e;
    }
    acc * radius / m as f64
}

/// (1/2πi)∫ f(u) du along the upward vertical line Re u = x0, for
/// integrands with at least Gaussian decay in |Im u|. Equal-step trapezoid;
/// the half-extent grows until the tail panel is negligible and the step
/// halves until the value stabilizes.
pub fn line_integral_upward<F>(x0: f64, opts: &QuadOptions, mut f: F) -> Result<Complex64>
where
    F: FnMut(Complex64) -> Complex64,
{
    let mut h = 0.25f64;
    let mut t = 8.0f64;
    let mut prev: Option<Complex64> = None;
    for _ in 0..30 {
        // extend until the outermost panel stops mattering
        let mut val = eval_line(x0, h, t, &mut f);
        loop {
            let extended = eval_line(x0, h, t + 4.0, &mut f);
            if (extended - val).norm() <= opts.tol * 1e-2 * (1.0 + extended.norm()) {
                val = extended;
                break;
            }
            t += 4.0;
            val = extended;
            if t > 1e4 {
                return Err(Error::Quadrature(
                    "vertical line integrand does not decay".into(),
                ));
            }
        }
        if let Some(p) = prev {
            if (val - p).norm() < opts.tol * (1.0 + val.norm()) {
                return Ok(val);
            }
        }
        prev = Some(val);
        h /= 2.0;
        if (2.0 * t / h) as usize > opts.max_nodes {
            return Err(Error::Quadrature(
                "vertical line integral did not stabilize within node budget".into(),
            ));
        }
    }
    Err(Error::Quadrature(
        "vertical line integral did not converge".into(),
    ))
}

fn eval_line<F>(x0: f64, h: f64, t: f64, f: &mut F) -> Complex64
where
    F: FnMut(Complex64) -> Complex64,
{
    // (1/2πi)·∫ f dz with dz = i dy gives (1/2π)·Σ f(x0 + iy) h
    let k_max = (t / h).ceil() as i64;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in -k_max..=k_max {
        acc += f(Complex64::new(x0, k as f64 * h));
    }
    acc * h / (2.0 * std::f64::consts::PI)
}

/// Nodes and weights such that (1/2πi)∫_{c+i∞}^{c−i∞} f(z) dz ≈ Σ w_j f(z_j)
/// (note the downward orientation), with the line parametrized as
/// z = c + i·sinh(v) and v sampled uniformly. `keep` inspects each node and
/// returns false once nodes of that sign of v stopped contributing; the
/// builder stops a side after several consecutive rejections.
pub fn sinh_line_nodes<K>(
    c: f64,
    h: f64,
    v_cap: f64,
    mut keep: K,
) -> Result<(Vec<Complex64>, Vec<f64>)>
where
    K: FnMut(Complex64) -> bool,
{
    let mut zs = Vec::new();
    let mut ws = Vec::new();
    for side in [1.0f64, -1.0] {
        let mut k = if side > 0.0 { 0i64 } else { -1 };
        let mut consecutive_dead = 0;
        loop {
            let v = k as f64 * h;
            if v.abs() > v_cap {
                return Err(Error::Quadrature(
                    "vertical line integrand does not decay".into(),
                ));
            }
            let z = Complex64::new(c, v.sinh());
            if keep(z) {
                consecutive_dead = 0;
            } else {
                consecutive_dead += 1;
                if consecutive_dead >= 6 {
                    break;
                }
            }
            zs.push(z);
            // dz = i cosh(v) dv and the downward orientation flips the sign:
            // (1/2πi)∫_{+i∞}^{−i∞} f dz = −(1/2π)∫_{−∞}^{∞} f(z(v)) cosh v dv
            ws.push(-h * v.cosh() / (2.0 * std::f64::consts::PI));
            k += side as i64;
        }
    }
    Ok((zs, ws))
}
