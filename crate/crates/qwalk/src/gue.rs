//! GUE corner minima and the closed-form limit density det[𝔊_{k−l}(y_l)].
//!
//! The normalization has real N(0,1) diagonal entries and complex
//! off-diagonal entries whose real and imaginary parts carry variance 1/2.
//! `GUE₁ⁿ` is the joint law of the smallest eigenvalues of the nested
//! top-left corners, listed increasingly: (λ₁ⁿ ≤ λ₁^{n−1} ≤ … ≤ λ₁¹).
//!
//! 𝔊_n(z) = (1/2πi)∫ uⁿ exp(u²/2 + uz) du over an upward vertical line
//! crossing the real axis left of the origin. For n ≥ 0 the integrand is
//! entire and 𝔊_n = (d/dz)ⁿ 𝔊₀ has the Hermite closed form; for n < 0 the
//! line's position matters, and the left-of-zero choice is the one that
//! makes det[𝔊_{k−l}(y_l)] a probability density (its y_n-marginal is then
//! exactly standard normal).

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::contour::{line_integral_upward, QuadOptions};
use crate::error::{Error, Result};

/// Smallest corner eigenvalues [λ₁ⁿ, λ₁^{n−1}, …, λ₁¹], weakly increasing.
#[derive(Clone, Debug)]
pub struct GueMinorSample {
    pub values: Vec<f64>,
}

/// Draws one Hermitian GUE matrix and returns the smallest eigenvalue of
/// each leading corner.
pub fn sample_gue_corners<R: Rng + ?Sized>(n: usize, rng: &mut R) -> GueMinorSample {
    assert!(n >= 1, "need at least one corner");
    let mut re = DMatrix::<f64>::zeros(n, n);
    let mut im = DMatrix::<f64>::zeros(n, n);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        re[(i, i)] = StandardNormal.sample(rng);
        for j in (i + 1)..n {
            let x: f64 = StandardNormal.sample(rng);
            let y: f64 = StandardNormal.sample(rng);
            re[(i, j)] = s * x;
            re[(j, i)] = s * x;
            im[(i, j)] = s * y;
            im[(j, i)] = -s * y;
        }
    }
    let mut values = Vec::with_capacity(n);
    for k in (1..=n).rev() {
        values.push(smallest_eigenvalue(&re, &im, k));
    }
    GueMinorSample { values }
}

/// Smallest eigenvalue of the k×k corner via the real-symmetric embedding
/// [[X, −Y], [Y, X]], whose spectrum is that of X+iY with multiplicity two.
fn smallest_eigenvalue(re: &DMatrix<f64>, im: &DMatrix<f64>, k: usize) -> f64 {
    let mut b = DMatrix::<f64>::zeros(2 * k, 2 * k);
    for i in 0..k {
        for j in 0..k {
            b[(i, j)] = re[(i, j)];
            b[(k + i, k + j)] = re[(i, j)];
            b[(i, k + j)] = -im[(i, j)];
            b[(k + i, j)] = im[(i, j)];
        }
    }
    let eig = b.symmetric_eigen();
    eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

fn std_phi(z: f64) -> f64 {
    (-z * z / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn std_cdf(z: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    Normal::new(0.0, 1.0).unwrap().cdf(z)
}

/// 𝔊_n(z): Hermite recurrence for n ≥ 0; for n ∈ {−1, −2} the left-line
/// antiderivatives in closed form (Φ−1 and φ−z(1−Φ), both vanishing at
/// z → +∞); deeper negative orders fall back to the contour.
pub fn gauss_gn(n: i64, z: f64) -> f64 {
    if n >= 0 {
        let phi = std_phi(z);
        if n == 0 {
            return phi;
        }
        // 𝔊_{k+1} = −z·𝔊_k − k·𝔊_{k−1}, stable for the orders used here
        let mut prev = phi;
        let mut cur = -z * phi;
        for k in 1..n {
            let next = -z * cur - k as f64 * prev;
            prev = cur;
            cur = next;
        }
        cur
    } else if n == -1 {
        std_cdf(z) - 1.0
    } else if n == -2 {
        std_phi(z) - z * (1.0 - std_cdf(z))
    } else {
        gauss_gn_contour(n, z).expect("left-line contour for negative order converges")
    }
}

/// Direct contour evaluation of 𝔊_n(z) along an upward vertical line left
/// of the origin. Valid for every n; the independent route against the
/// closed forms, and the definition for deep negative orders.
///
/// The abscissa tracks the saddle at u = −z when z > 0 so the integrand
/// scale e^{u₀²/2+u₀z} stays moderate; far negative z loses digits to
/// cancellation and is outside this routine's intended range.
pub fn gauss_gn_contour(n: i64, z: f64) -> Result<f64> {
    let u0 = if z > 0.5 { -z.min(30.0) } else { -0.5 };
    let v = line_integral_upward(u0, &QuadOptions::with_tol(1e-12), |u| {
        u.powi(n as i32) * (u * u / 2.0 + u * z).exp()
    })?;
    if v.im.abs() > 1e-9 * (1.0 + v.re.abs()) {
        return Err(Error::Quadrature(format!(
            "G_{n}({z}) carries imaginary residue {}",
            v.im
        )));
    }
    Ok(v.re)
}

/// det[𝔊_{k−l}(y_l)] on the ordered cone y₁ ≤ … ≤ y_n; unordered input is
/// rejected rather than symmetrized.
pub fn gue1_density(ys: &[f64]) -> Result<f64> {
    let n = ys.len();
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one value".into()));
    }
    if ys.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter(format!(
            "density defined on the ordered cone only, got {ys:?}"
        )));
    }
    let mut m = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        for l in 0..n {
            m[(k, l)] = gauss_gn(k as i64 - l as i64, ys[l]);
        }
    }
    let det = if n == 1 { m[(0, 0)] } else { m.determinant() };
    if det < -1e-10 {
        return Err(Error::Quadrature(format!(
            "density determinant {det} is materially negative"
        )));
    }
    Ok(det.max(0.0))
}

/// Joint CDF of GUE₁² at (s, u): P(λ₁² ≤ s, λ₁¹ ≤ u), evaluated by 1D
/// quadrature of the closed-form inner integral. Serves as the reference
/// law for sampled corner minima.
pub fn gue2_joint_cdf(s: f64, u: f64) -> f64 {
    let m = s.min(u);
    if m < -12.0 {
        return 0.0;
    }
    // ∫_{y1}^{u} ρ(y1, y2) dy2 = 𝔊₀(y1)(𝔊₋₁(u) − 𝔊₋₁(y1))
    //                           − 𝔊₁(y1)(𝔊₋₂(u) − 𝔊₋₂(y1))
    let g1u = gauss_gn(-1, u);
    let g2u = gauss_gn(-2, u);
    let lo = -12.0f64;
    let steps = 2000usize;
    let h = (m - lo) / steps as f64;
    let integrand = |y: f64| {
        gauss_gn(0, y) * (g1u - gauss_gn(-1, y)) - gauss_gn(1, y) * (g2u - gauss_gn(-2, y))
    };
    let mut acc = 0.5 * (integrand(lo) + integrand(m));
    for i in 1..steps {
        acc += integrand(lo + i as f64 * h);
    }
    acc * h
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn phi(z: f64) -> f64 {
        (-z * z / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()
    }

    fn std_normal_cdf(z: f64) -> f64 {
        use statrs::distribution::{ContinuousCDF, Normal};
        Normal::new(0.0, 1.0).unwrap().cdf(z)
    }

    #[test]
    fn gn_low_orders() {
        for z in [-2.3f64, -0.4, 0.0, 1.1, 2.8] {
            assert!((gauss_gn(0, z) - phi(z)).abs() < 1e-15);
            assert!((gauss_gn(1, z) + z * phi(z)).abs() < 1e-14);
            // finite differences of G0 reproduce G1
            let eps = 1e-5;
            let fd = (gauss_gn(0, z + eps) - gauss_gn(0, z - eps)) / (2.0 * eps);
            assert!((fd - gauss_gn(1, z)).abs() < 1e-9);
        }
    }

    #[test]
    fn contour_route_matches_hermite_for_nonnegative_orders() {
        for n in 0..=10i64 {
            for z in [-1.7f64, 0.0, 0.9, 2.1] {
                let closed = gauss_gn(n, z);
                let contour = gauss_gn_contour(n, z).unwrap();
                assert!(
                    (closed - contour).abs() <= 1e-10 * closed.abs().max(1.0),
                    "n={n}, z={z}: {closed} vs {contour}"
                );
            }
        }
    }

    #[test]
    fn negative_orders_are_antiderivatives() {
        // d/dz G(-1) = G0 and d/dz G(-2) = G(-1), with decay at the ends
        for z in [-1.2f64, 0.0, 0.7] {
            let eps = 1e-4;
            let fd = (gauss_gn(-1, z + eps) - gauss_gn(-1, z - eps)) / (2.0 * eps);
            assert!((fd - gauss_gn(0, z)).abs() < 1e-8);
            let fd2 = (gauss_gn(-2, z + eps) - gauss_gn(-2, z - eps)) / (2.0 * eps);
            assert!((fd2 - gauss_gn(-1, z)).abs() < 1e-8);
        }
        // left-line branch: G(-1)(z) = Phi(z) - 1, vanishing at z → +∞
        for z in [-2.0f64, 0.0, 1.5] {
            assert!((gauss_gn(-1, z) - (std_normal_cdf(z) - 1.0)).abs() < 1e-10);
        }
        assert!(gauss_gn(-1, 30.0).abs() < 1e-12);
        assert!(gauss_gn(-2, 30.0).abs() < 1e-10);
        // the contour route agrees with the closed forms for n < 0
        for z in [-4.0f64, -1.0, 0.2, 3.0] {
            for n in [-1i64, -2] {
                let c = gauss_gn_contour(n, z).unwrap();
                assert!(
                    (c - gauss_gn(n, z)).abs() < 1e-9 * (1.0 + gauss_gn(n, z).abs()),
                    "n={n} z={z}: {c} vs {}",
                    gauss_gn(n, z)
                );
            }
        }
    }

    #[test]
    fn density_basics() {
        // n = 1: standard normal density
        for z in [-1.0f64, 0.3] {
            assert!((gue1_density(&[z]).unwrap() - phi(z)).abs() < 1e-14);
        }
        // ordered-cone domain is enforced
        assert!(gue1_density(&[1.0, 0.0]).is_err());
        assert!(gue1_density(&[]).is_err());
    }

    #[test]
    fn n2_density_y2_marginal_is_standard_normal() {
        // integral over y1 up to y2 must equal phi(y2) exactly
        for y2 in [-1.5f64, 0.0, 0.8, 2.0] {
            let lo = -10.0;
            let steps = 4000;
            let h = (y2 - lo) / steps as f64;
            let f = |y1: f64| gue1_density(&[y1, y2]).unwrap();
            let mut acc = 0.5 * (f(lo) + f(y2));
            for i in 1..steps {
                acc += f(lo + i as f64 * h);
            }
            let marg = acc * h;
            assert!(
                (marg - phi(y2)).abs() < 1e-6,
                "y2={y2}: {marg} vs {}",
                phi(y2)
            );
        }
    }

    #[test]
    fn n2_density_integrates_to_one() {
        // 2D trapezoid over the cone y1 <= y2
        let lo = -8.0f64;
        let hi = 8.0f64;
        let n = 400usize;
        let h = (hi - lo) / n as f64;
        let mut total = 0.0;
        for i in 0..=n {
            let y1 = lo + i as f64 * h;
            let wi = if i == 0 || i == n { 0.5 } else { 1.0 };
            for j in i..=n {
                let y2 = lo + j as f64 * h;
                let wj = if j == i || j == n { 0.5 } else { 1.0 };
                total += wi * wj * gue1_density(&[y1, y2]).unwrap();
            }
        }
        total *= h * h;
        assert!((total - 1.0).abs() < 1e-4, "integral = {total}");
    }

    #[test]
    fn corners_interlace_and_base_case_is_normal() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let reps = 20_000;
        let mut acc1 = 0.0;
        for _ in 0..reps {
            let s = sample_gue_corners(3, &mut rng);
            assert_eq!(s.values.len(), 3);
            assert!(s.values[0] <= s.values[1] + 1e-12);
            assert!(s.values[1] <= s.values[2] + 1e-12);
            acc1 += s.values[2]; // the 1x1 corner is N(0,1)
        }
        let mean = acc1 / reps as f64;
        assert!(mean.abs() < 4.0 / (reps as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn sampled_smallest_eigenvalue_mean_matches_quadrature() {
        // E[smallest of 2x2] by 2D quadrature of the density vs sampling
        let lo = -8.0f64;
        let hi = 8.0f64;
        let n = 300usize;
        let h = (hi - lo) / n as f64;
        let mut expect = 0.0;
        for i in 0..=n {
            let y1 = lo + i as f64 * h;
            let wi = if i == 0 || i == n { 0.5 } else { 1.0 };
            for j in i..=n {
                let y2 = lo + j as f64 * h;
                let wj = if j == i || j == n { 0.5 } else { 1.0 };
                expect += wi * wj * y1 * gue1_density(&[y1, y2]).unwrap();
            }
        }
        expect *= h * h;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let reps = 40_000;
        let mut acc = 0.0;
        let mut acc2 = 0.0;
        for _ in 0..reps {
            let v = sample_gue_corners(2, &mut rng).values[0];
            acc += v;
            acc2 += v * v;
        }
        let mean = acc / reps as f64;
        let sd = (acc2 / reps as f64 - mean * mean).sqrt();
        assert!(
            (mean - expect).abs() < 3.0 * sd / (reps as f64).sqrt(),
            "sampled {mean} vs quadrature {expect}"
        );
    }

    #[test]
    fn joint_cdf_grid_matches_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let reps = 40_000usize;
        let samples: Vec<(f64, f64)> = (0..reps)
            .map(|_| {
                let s = sample_gue_corners(2, &mut rng);
                (s.values[0], s.values[1])
            })
            .collect();
        for (s, u) in [(-1.0f64, 0.0f64), (0.0, 0.5), (-0.5, -0.5), (1.0, 1.5)] {
            let theory = gue2_joint_cdf(s, u);
            let emp = samples.iter().filter(|&&(a, b)| a <= s && b <= u).count() as f64
                / reps as f64;
            let sd = (theory * (1.0 - theory) / reps as f64).sqrt();
            assert!(
                (emp - theory).abs() < 4.0 * sd + 1e-3,
                "F({s},{u}): {emp} vs {theory}"
            );
        }
        // total mass
        assert!((gue2_joint_cdf(10.0, 10.0) - 1.0).abs() < 1e-6);
    }
}
