//! PushASEP with particle-dependent rates.
//!
//! N particles on ℤ, numbered left to right. Particle n carries a right
//! clock of rate a·ζ_n and a left clock of rate b/ζ_n. A right ring moves
//! the particle right when the neighboring site is free (blocking); a left
//! ring moves it left and pushes the maximal contiguous block it lands on.
//!
//! The transition probability has the exact determinantal form
//!
//! ```text
//! P_t(x | y) = Π_i ζ_i^{x_i−y_i} e^{−atζ_i−bt/ζ_i} · det[F_{k,l}(x_l−y_k)]
//! F_{k,l}(x) = (1/2πi)∮ Π_{i<k}(1−ζ_i z)/Π_{j<l}(1−ζ_j z) · z^{x−1} e^{btz+at/z} dz
//! ```
//!
//! over a small circle around 0. At large times, after normalizing the
//! slowest rate to 1, the particles with ζ = 1 fluctuate on the √t scale
//! like GUE corner minima while faster particles trail at geometric O(1)
//! gaps; [`rescale`] and [`limit_density`] implement that reference law.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::contour::{circle_integral, QuadOptions};
use crate::det::det_row_scaled;
use crate::error::{Error, Result};
use crate::gue::gue1_density;

/// Rates (ζ_1..ζ_N, a, b); at least one of a, b must be positive.
#[derive(Clone, Debug)]
pub struct PushAsepSystem {
    zeta: Vec<f64>,
    pub a: f64,
    pub b: f64,
}

impl PushAsepSystem {
    pub fn new(zeta: Vec<f64>, a: f64, b: f64) -> Result<Self> {
        if zeta.is_empty() {
            return Err(Error::InvalidParameter("need at least one particle".into()));
        }
        if zeta.iter().any(|&z| z <= 0.0 || !z.is_finite()) {
            return Err(Error::InvalidParameter(
                "all ζ must be positive and finite".into(),
            ));
        }
        if a < 0.0 || b < 0.0 || a + b <= 0.0 {
            return Err(Error::InvalidParameter(
                "need a, b ≥ 0 with a + b > 0".into(),
            ));
        }
        Ok(PushAsepSystem { zeta, a, b })
    }

    pub fn n(&self) -> usize {
        self.zeta.len()
    }

    pub fn zeta(&self) -> &[f64] {
        &self.zeta
    }
}

/// One right-clock (is_right) or left-clock ring of particle `idx`.
pub(crate) fn apply_event(positions: &mut [i64], idx: usize, is_right: bool) {
    if is_right {
        if idx + 1 >= positions.len() || positions[idx + 1] > positions[idx] + 1 {
            positions[idx] += 1;
        }
    } else {
        positions[idx] -= 1;
        // push the maximal contiguous block to the left
        for m in (0..idx).rev() {
            if positions[m] == positions[m + 1] {
                positions[m] -= 1;
            } else {
                break;
            }
        }
    }
    debug_assert!(
        positions.windows(2).all(|w| w[0] < w[1]),
        "positions must stay strictly increasing: {positions:?}"
    );
}

/// Exact continuous-time simulation up to time `t` from `start`: one global
/// exponential clock at the total rate plus categorical selection of which
/// of the 2N clocks rang.
pub fn simulate<R: Rng + ?Sized>(
    sys: &PushAsepSystem,
    start: &[i64],
    t: f64,
    rng: &mut R,
) -> Result<Vec<i64>> {
    let n = sys.n();
    if start.len() != n {
        return Err(Error::LengthMismatch(format!(
            "{} start positions for {n} particles",
            start.len()
        )));
    }
    if start.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "start positions must be strictly increasing".into(),
        ));
    }
    let mut rates = Vec::with_capacity(2 * n);
    for i in 0..n {
        rates.push(sys.a * sys.zeta[i]); // right clock of particle i
        rates.push(sys.b / sys.zeta[i]); // left clock of particle i
    }
    let total: f64 = rates.iter().sum();
    let mut positions = start.to_vec();
    if total <= 0.0 {
        return Ok(positions);
    }
    let exp = Exp::new(total).expect("positive rate");
    let mut clock = 0.0f64;
    loop {
        clock += exp.sample(rng);
        if clock > t {
            return Ok(positions);
        }
        let mut u = rng.random::<f64>() * total;
        let mut which = 2 * n - 1;
        for (i, &r) in rates.iter().enumerate() {
            if u < r {
                which = i;
                break;
            }
            u -= r;
        }
        apply_event(&mut positions, which / 2, which % 2 == 0);
    }
}

/// Driving kind of the discrete sequential-update column dynamics.
#[derive(Clone, Copy, Debug)]
pub enum ColumnKind {
    /// g = 1+βx: right jumps with blocking; particle k jumps with
    /// probability q^{1−k}β/(1+q^{1−k}β)
    BernoulliUp(f64),
    /// g = 1+β/x: left jumps with pushing; particle k jumps with
    /// probability q^{k−1}β/(1+q^{k−1}β)
    BernoulliDown(f64),
}

/// Runs the right-to-left sequential update for `steps` steps from the
/// densely packed start y_k = 1−k; returns the strictly decreasing column
/// y_1 > y_2 > … .
pub fn simulate_discrete_column<R: Rng + ?Sized>(
    kind: ColumnKind,
    q: f64,
    n_particles: usize,
    steps: usize,
    rng: &mut R,
) -> Vec<i64> {
    let mut y: Vec<i64> = (0..n_particles).map(|i| -(i as i64)).collect();
    for _ in 0..steps {
        let mut z = y.clone();
        for i in 0..n_particles {
            match kind {
                ColumnKind::BernoulliUp(beta) => {
                    if i > 0 && y[i] == z[i - 1] - 1 {
                        // blocked by the already-updated right neighbor
                        z[i] = y[i];
                    } else {
                        let w = q.powi(-(i as i32)) * beta;
                        let p = w / (1.0 + w);
                        z[i] = y[i] + i64::from(rng.random::<f64>() < p);
                    }
                }
                ColumnKind::BernoulliDown(beta) => {
                    if i > 0 && y[i] == z[i - 1] {
                        // pushed by the right neighbor landing on this site
                        z[i] = y[i] - 1;
                    } else {
                        let w = q.powi(i as i32) * beta;
                        let p = w / (1.0 + w);
                        z[i] = y[i] - i64::from(rng.random::<f64>() < p);
                    }
                }
            }
        }
        y = z;
        debug_assert!(y.windows(2).all(|w| w[0] > w[1]), "column order broken");
    }
    y
}

/// Radius near the minimum of the max-modulus bound
/// r^{x−1}·e^{at/r + btr}, capped strictly below every pole 1/ζ_j. Keeping
/// the contour at the saddle keeps the trapezoid sum free of catastrophic
/// cancellation for large |x|.
fn radius_for(sys: &PushAsepSystem, t: f64, x: i64) -> f64 {
    let zmax = sys.zeta.iter().cloned().fold(f64::MIN, f64::max);
    let r_hi = 0.8 / zmax.max(0.8);
    let r_lo = r_hi * 1e-4;
    let (at, bt) = (sys.a * t, sys.b * t);
    let m = (x - 1) as f64;
    let phi = |r: f64| m * r.ln() + if at > 0.0 { at / r } else { 0.0 } + bt * r;
    let mut best = (r_hi * 0.5, phi(r_hi * 0.5));
    for i in 0..=200 {
        let r = r_lo * (r_hi / r_lo).powf(i as f64 / 200.0);
        let v = phi(r);
        if v < best.1 {
            best = (r, v);
        }
    }
    best.0
}

/// F_{k,l}(x) at time t (k, l are 1-based).
pub fn f_kl(k: usize, l: usize, x: i64, t: f64, sys: &PushAsepSystem) -> Result<f64> {
    let n = sys.n();
    if k < 1 || l < 1 || k > n || l > n {
        return Err(Error::InvalidParameter(format!(
            "need 1 ≤ k,l ≤ {n}, got ({k},{l})"
        )));
    }
    let (val, log_scale) = f_kl_scaled(k, l, x, t, sys)?;
    Ok(val * log_scale.exp())
}

/// F_{k,l}·e^{−S} with S = (x−1)·ln r + at/r + btr pulled out, so the
/// quadrature works on (z/r)^{x−1}·exp(btz + at/z − btr − at/r), whose
/// modulus is at most the ζ-product on the contour.
fn f_kl_scaled(k: usize, l: usize, x: i64, t: f64, sys: &PushAsepSystem) -> Result<(f64, f64)> {
    let r = radius_for(sys, t, x);
    let scale = (x - 1) as f64 * r.ln() + sys.a * t / r + sys.b * t * r;
    let zeta = sys.zeta.clone();
    let (a, b) = (sys.a, sys.b);
    let exp_off = a * t / r + b * t * r;
    let f = move |z: Complex64| -> Complex64 {
        let mut v = (b * t * z + a * t / z - exp_off).exp();
        v *= (z / r).powi((x - 1) as i32);
        for &zi in &zeta[..k - 1] {
            v *= 1.0 - zi * z;
        }
        for &zj in &zeta[..l - 1] {
            v /= 1.0 - zj * z;
        }
        v
    };
    let opts = QuadOptions {
        tol: 1e-12,
        start_nodes: 64,
        max_nodes: 1 << 17,
    };
    let v = circle_integral(Complex64::new(0.0, 0.0), r, &opts, f)?;
    if v.im.abs() > 1e-9 * (1.0 + v.re.abs()) {
        return Err(Error::Quadrature(format!(
            "F_{{{k},{l}}}({x}) has imaginary residue {}",
            v.im
        )));
    }
    Ok((v.re, scale))
}

/// Exact transition probability P_t(x | y) by the determinantal formula.
pub fn exact_transition(x: &[i64], y: &[i64], t: f64, sys: &PushAsepSystem) -> Result<f64> {
    let n = sys.n();
    if x.len() != n || y.len() != n {
        return Err(Error::LengthMismatch(format!(
            "positions must have length {n}"
        )));
    }
    if x.windows(2).any(|w| w[0] >= w[1]) || y.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "positions must be strictly increasing".into(),
        ));
    }
    if t < 0.0 {
        return Err(Error::InvalidParameter("time must be ≥ 0".into()));
    }
    let r = common_radius(sys);
    let scale = sys.a * t / r + sys.b * t * r;
    let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        for l in 0..n {
            let (v, _) = f_kl_scaled(k + 1, l + 1, x[l] - y[k], t, sys, r)?;
            m[(k, l)] = v;
        }
    }
    let (det, log_rows) = det_row_scaled(m);
    if det == 0.0 {
        return Ok(0.0);
    }
    let mut log_p = log_rows + det.abs().ln() + n as f64 * scale;
    for i in 0..n {
        log_p += (x[i] - y[i]) as f64 * sys.zeta[i].ln();
        log_p -= sys.a * t * sys.zeta[i] + sys.b * t / sys.zeta[i];
    }
    let p = det.signum() * log_p.exp();
    if !p.is_finite() {
        return Err(Error::Quadrature("nonfinite transition value".into()));
    }
    if !(-1e-6..=1.0 + 1e-6).contains(&p) {
        return Err(Error::Quadrature(format!(
            "transition probability {p} outside [0,1]: quadrature instability"
        )));
    }
    Ok(p.clamp(0.0, 1.0))
}

/// The asymptotic cluster structure after the normalization ζ_N = 1:
/// D = {n_1 < … < n_h = N} with ζ = 1 on D and ζ > 1 off D.
#[derive(Clone, Debug)]
pub struct ClusterStructure {
    /// 1-based indices with ζ = 1, ending with N.
    pub d: Vec<usize>,
    zeta: Vec<f64>,
}

impl ClusterStructure {
    pub fn h(&self) -> usize {
        self.d.len()
    }

    /// (1-based index j, ζ_j) for every j ∉ D; the gap X_{j+1} − X_j is
    /// asymptotically geometric with parameter ζ_j⁻¹.
    pub fn off_d(&self) -> Vec<(usize, f64)> {
        (1..=self.zeta.len())
            .filter(|j| !self.d.contains(j))
            .map(|j| (j, self.zeta[j - 1]))
            .collect()
    }
}

/// Validates the normalization and extracts the clusters. A ζ below 1
/// before the end means the system splits into independently evolving
/// parts and is rejected with that guidance.
pub fn cluster_structure(sys: &PushAsepSystem) -> Result<ClusterStructure> {
    let n = sys.n();
    let mut d = Vec::new();
    for (i, &z) in sys.zeta.iter().enumerate() {
        if z == 1.0 {
            d.push(i + 1);
        } else if z < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "ζ_{} = {z} < 1: normalize so the slowest rate is 1, and split the \
                 system at any particle k with ζ_k below the following rates — the \
                 first k and the last N−k particles behave independently at large times",
                i + 1
            )));
        }
    }
    if d.last() != Some(&n) {
        return Err(Error::InvalidParameter(
            "normalization requires ζ_N = 1".into(),
        ));
    }
    Ok(ClusterStructure {
        d,
        zeta: sys.zeta.clone(),
    })
}

/// Rescaled positions: x̃_i = (X_{n_i} − (a−b)t)/√((a+b)t) for each cluster
/// representative n_i ∈ D, and the integer gaps X_{j+1} − X_j for j ∉ D.
#[derive(Clone, Debug)]
pub struct RescaledObservation {
    pub tilde: Vec<f64>,
    /// (1-based left index j, gap X_{j+1} − X_j ≥ 1)
    pub gaps: Vec<(usize, i64)>,
}

pub fn rescale(positions: &[i64], t: f64, sys: &PushAsepSystem) -> Result<RescaledObservation> {
    let cluster = cluster_structure(sys)?;
    if positions.len() != sys.n() {
        return Err(Error::LengthMismatch("positions vs system size".into()));
    }
    if t <= 0.0 {
        return Err(Error::InvalidParameter("need t > 0 to rescale".into()));
    }
    let drift = (sys.a - sys.b) * t;
    let sd = ((sys.a + sys.b) * t).sqrt();
    let tilde = cluster
        .d
        .iter()
        .map(|&ni| (positions[ni - 1] as f64 - drift) / sd)
        .collect();
    let gaps = cluster
        .off_d()
        .iter()
        .map(|&(j, _)| (j, positions[j] - positions[j - 1]))
        .collect();
    Ok(RescaledObservation { tilde, gaps })
}

/// Geometric mass (1−p)p^{g−1} on {1, 2, …} with p = ζ⁻¹.
pub fn geometric_gap_mass(zeta: f64, gap: i64) -> f64 {
    if gap < 1 {
        return 0.0;
    }
    let p = 1.0 / zeta;
    (1.0 - p) * p.powi((gap - 1) as i32)
}

/// The large-time reference density: Π_{j∉D} (1−ζ_j⁻¹)ζ_j^{1−gap_j} times
/// the GUE corner-minima density det[𝔊_{k−l}(x̃_l)] of the cluster
/// representatives.
pub fn limit_density(obs: &RescaledObservation, cluster: &ClusterStructure) -> Result<f64> {
    if obs.tilde.len() != cluster.h() {
        return Err(Error::LengthMismatch(
            "one rescaled value per cluster required".into(),
        ));
    }
    let mut mass = 1.0;
    for &(j, gap) in &obs.gaps {
        let zeta = cluster.zeta[j - 1];
        if gap < 1 {
            return Err(Error::InvalidParameter(format!(
                "gap at {j} must be ≥ 1, got {gap}"
            )));
        }
        mass *= geometric_gap_mass(zeta, gap);
    }
    Ok(mass * gue1_density(&obs.tilde)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    #[test]
    fn blocking_and_pushing_rules() {
        // right clock of the left particle in (0,1) is blocked
        let mut pos = vec![0i64, 1];
        apply_event(&mut pos, 0, true);
        assert_eq!(pos, vec![0, 1]);
        // left clock of the right particle pushes the block
        let mut pos = vec![0i64, 1];
        apply_event(&mut pos, 1, false);
        assert_eq!(pos, vec![-1, 0]);
        // free right move
        let mut pos = vec![0i64, 2];
        apply_event(&mut pos, 0, true);
        assert_eq!(pos, vec![1, 2]);
        // a long block cascades
        let mut pos = vec![3i64, 4, 5, 6];
        apply_event(&mut pos, 3, false);
        assert_eq!(pos, vec![2, 3, 4, 5]);
    }

    #[test]
    fn single_free_particle_is_poisson() {
        let sys = PushAsepSystem::new(vec![1.0], 1.0, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (t, reps) = (3.0, 100_000);
        let mut acc = 0.0;
        for _ in 0..reps {
            acc += simulate(&sys, &[7], t, &mut rng).unwrap()[0] as f64 - 7.0;
        }
        let mean = acc / reps as f64;
        let sigma = (t / reps as f64).sqrt();
        assert!((mean - t).abs() < 4.0 * sigma, "mean {mean} vs {t}");
    }

    #[test]
    fn f_kl_diagonal_oracles() {
        // k = l, b = 0: F(x) = (at)^x/x! for x ≥ 0, 0 for x < 0
        let sys = PushAsepSystem::new(vec![2.0, 1.0], 0.7, 0.0).unwrap();
        let t = 1.3;
        let at: f64 = 0.7 * 1.3;
        let mut fact = 1.0;
        for x in 0i64..6 {
            if x > 0 {
                fact *= x as f64;
            }
            let f = f_kl(1, 1, x, t, &sys).unwrap();
            let expect = at.powi(x as i32) / fact;
            assert!((f - expect).abs() < 1e-12 * expect.max(1.0), "x={x}");
        }
        assert!(f_kl(1, 1, -1, t, &sys).unwrap().abs() < 1e-12);

        // k = l, a = 0: F(x) = (bt)^{−x}/(−x)! for x ≤ 0
        let sys = PushAsepSystem::new(vec![2.0, 1.0], 0.0, 0.4).unwrap();
        let bt: f64 = 0.4 * 1.3;
        let mut fact = 1.0;
        for x in 0i64..6 {
            if x > 0 {
                fact *= x as f64;
            }
            let f = f_kl(2, 2, -x, t, &sys).unwrap();
            let expect = bt.powi(x as i32) / fact;
            assert!((f - expect).abs() < 1e-12 * expect.max(1.0), "x={x}");
        }

        // t = 0: F(x) = 1_{x=0}
        let sys = PushAsepSystem::new(vec![1.5, 1.0], 0.5, 0.5).unwrap();
        assert!((f_kl(1, 1, 0, 0.0, &sys).unwrap() - 1.0).abs() < 1e-13);
        assert!(f_kl(1, 1, 2, 0.0, &sys).unwrap().abs() < 1e-13);
    }

    #[test]
    fn exact_transition_single_particle() {
        // N = 1, b = 0: e^{−at}(at)^{x−y}/(x−y)!
        let sys = PushAsepSystem::new(vec![1.0], 0.9, 0.0).unwrap();
        let t = 1.7;
        let at: f64 = 0.9 * t;
        let mut fact = 1.0;
        for d in 0i64..6 {
            if d > 0 {
                fact *= d as f64;
            }
            let p = exact_transition(&[3 + d], &[3], t, &sys).unwrap();
            let expect = (-at).exp() * at.powi(d as i32) / fact;
            assert!((p - expect).abs() < 1e-12, "d={d}: {p} vs {expect}");
        }
    }

    #[test]
    fn exact_transition_normalizes() {
        let sys = PushAsepSystem::new(vec![2.0, 1.0], 0.5, 0.5).unwrap();
        let y = [-1i64, 0];
        let mut total = 0.0;
        for x1 in -12i64..12 {
            for x2 in (x1 + 1)..13 {
                total += exact_transition(&[x1, x2], &y, 1.0, &sys).unwrap();
            }
        }
        assert!((total - 1.0).abs() < 1e-6, "Σ = {total}");
    }

    #[test]
    fn exact_transition_time_additivity() {
        let sys = PushAsepSystem::new(vec![2.0, 1.0], 0.6, 0.4).unwrap();
        let y = [0i64, 1];
        let x = [1i64, 3];
        let (t1, t2) = (0.5, 0.8);
        let mut composed = 0.0;
        for m1 in -8i64..10 {
            for m2 in (m1 + 1)..11 {
                let p1 = exact_transition(&[m1, m2], &y, t1, &sys).unwrap();
                if p1 > 1e-14 {
                    composed += p1 * exact_transition(&x, &[m1, m2], t2, &sys).unwrap();
                }
            }
        }
        let direct = exact_transition(&x, &y, t1 + t2, &sys).unwrap();
        assert!((composed - direct).abs() < 1e-5, "{composed} vs {direct}");
    }

    #[test]
    fn exact_transition_matches_simulation() {
        let sys = PushAsepSystem::new(vec![2.0, 1.0], 0.5, 0.5).unwrap();
        let y = [-1i64, 0];
        let t = 1.0;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let reps = 200_000;
        let mut counts: HashMap<Vec<i64>, usize> = HashMap::new();
        for _ in 0..reps {
            let end = simulate(&sys, &y, t, &mut rng).unwrap();
            *counts.entry(end).or_insert(0) += 1;
        }
        for (xs, c) in counts {
            let freq = c as f64 / reps as f64;
            if freq < 5e-4 {
                continue;
            }
            let p = exact_transition(&xs, &y, t, &sys).unwrap();
            let sd = (p * (1.0 - p) / reps as f64).sqrt();
            assert!((freq - p).abs() < 5.0 * sd + 1e-4, "{xs:?}: {freq} vs {p}");
        }
    }

    #[test]
    fn column_never_moves_without_drive() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        // the β → 0 limit, checked through a tiny β
        let y = simulate_discrete_column(ColumnKind::BernoulliUp(1e-12), 0.5, 4, 5, &mut rng);
        assert_eq!(y, vec![0, -1, -2, -3]);
    }

    #[test]
    fn two_particle_column_step_law() {
        // one up-step with β = 1, q = 0.5 from (0, −1):
        // p₁ = 1/2; p₂ = 2/3 when free, blocked otherwise:
        //   (0,−1): 1/2 ; (1,0): 1/2·2/3 = 1/3 ; (1,−1): 1/2·1/3 = 1/6
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let reps = 200_000;
        let mut counts: HashMap<Vec<i64>, usize> = HashMap::new();
        for _ in 0..reps {
            let z = simulate_discrete_column(ColumnKind::BernoulliUp(1.0), 0.5, 2, 1, &mut rng);
            *counts.entry(z).or_insert(0) += 1;
        }
        let expect = [
            (vec![0i64, -1], 0.5),
            (vec![1, 0], 1.0 / 3.0),
            (vec![1, -1], 1.0 / 6.0),
        ];
        for (cfg, p) in expect {
            let freq = counts.get(&cfg).copied().unwrap_or(0) as f64 / reps as f64;
            let sd = (p * (1.0 - p) / reps as f64).sqrt();
            assert!((freq - p).abs() < 5.0 * sd, "{cfg:?}: {freq} vs {p}");
        }
    }

    #[test]
    fn up_step_equals_down_step_with_shift() {
        // 1+βx = (βx)(1+β⁻¹/x): an up-step with β matches a down-step with
        // β⁻¹ followed by a +1 shift, in distribution
        let (beta, q, n, steps) = (0.8f64, 0.5f64, 3usize, 2usize);
        let reps = 120_000;
        let mut up_counts: HashMap<Vec<i64>, f64> = HashMap::new();
        let mut down_counts: HashMap<Vec<i64>, f64> = HashMap::new();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..reps {
            let u = simulate_discrete_column(ColumnKind::BernoulliUp(beta), q, n, steps, &mut rng);
            *up_counts.entry(u).or_insert(0.0) += 1.0 / reps as f64;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..reps {
            let mut d = simulate_discrete_column(
                ColumnKind::BernoulliDown(1.0 / beta),
                q,
                n,
                steps,
                &mut rng,
            );
            for v in &mut d {
                *v += steps as i64;
            }
            *down_counts.entry(d).or_insert(0.0) += 1.0 / reps as f64;
        }
        for (cfg, p) in &up_counts {
            let pd = down_counts.get(cfg).copied().unwrap_or(0.0);
            if *p > 0.005 {
                assert!((p - pd).abs() < 0.01, "{cfg:?}: {p} vs {pd}");
            }
        }
    }

    #[test]
    fn rescale_and_limit_density() {
        // h = 1, N = 1: the limit is the standard normal density in x̃
        let sys = PushAsepSystem::new(vec![1.0], 1.0, 0.5).unwrap();
        let cl = cluster_structure(&sys).unwrap();
        let t = 400.0f64;
        let x = ((1.0 - 0.5) * t + 1.3 * (1.5 * t).sqrt()).round() as i64;
        let obs = rescale(&[x], t, &sys).unwrap();
        let d = limit_density(&obs, &cl).unwrap();
        let phi =
            (-obs.tilde[0] * obs.tilde[0] / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        assert!((d - phi).abs() < 1e-12);
        assert!(obs.gaps.is_empty());

        // N = 2, ζ = (2,1), gap 1: (1−1/2)(1/2)⁰·𝔊₀(x̃)
        let sys = PushAsepSystem::new(vec![2.0, 1.0], 1.0, 0.5).unwrap();
        let cl = cluster_structure(&sys).unwrap();
        let obs = RescaledObservation {
            tilde: vec![0.4],
            gaps: vec![(1, 1)],
        };
        let d = limit_density(&obs, &cl).unwrap();
        let phi = (-0.4f64 * 0.4 / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        assert!((d - 0.5 * phi).abs() < 1e-12);
    }

    #[test]
    fn geometric_masses_sum_to_one() {
        let total: f64 = (1..200).map(|g| geometric_gap_mass(2.0, g)).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(geometric_gap_mass(2.0, 0), 0.0);
    }

    #[test]
    fn cluster_validation() {
        let sys = PushAsepSystem::new(vec![3.0, 2.0, 1.0], 1.0, 0.5).unwrap();
        let cl = cluster_structure(&sys).unwrap();
        assert_eq!(cl.d, vec![3]);
        assert_eq!(cl.off_d(), vec![(1, 3.0), (2, 2.0)]);

        let sys = PushAsepSystem::new(vec![1.0, 1.0], 1.0, 0.5).unwrap();
        assert_eq!(cluster_structure(&sys).unwrap().d, vec![1, 2]);

        // non-normalized rates are rejected with splitting guidance
        let sys = PushAsepSystem::new(vec![0.5, 1.0], 1.0, 0.5).unwrap();
        assert!(cluster_structure(&sys).is_err());
        let sys = PushAsepSystem::new(vec![2.0, 1.5], 1.0, 0.5).unwrap();
        assert!(cluster_structure(&sys).is_err());
    }
}
