//! System parameters of the critical many-sources regime and the closed-form
//! asymptotic landmarks derived from them.
//!
//! A system is `n` i.i.d. sources with per-period demand distribution `X` and
//! a service capacity of `s` per period. Stability requires `nμ < s`; the
//! interesting regime keeps the slack `γ = (s − nμ)/√s` of order one. From
//! `(n, s, X)` this module derives the clustering constants
//!
//! * `a₀ = √(2μ)/σ`, `b₀ = γ√μ/(σ√2)` (so `b₀ = γa₀/2` identically),
//! * `β = b₀√2` (the drift of the limiting Gaussian random walk),
//! * `d₀ = 2γμ/σ²` (the scale of the dominant root minus one),
//!
//! and exposes the closed-form first-order predictions for where the zeros of
//! `z^s − A(z)` sit: `ẑ_j` inside the unit disk, `Ẑ(t)` outside, and the
//! saddle point and dominant-root landmarks `ẑ_sp`, `Ẑ₀`. These predictions
//! seed the Newton iterations in [`crate::roots`] and are exact only to
//! `O(1/s)`; nothing downstream trusts them beyond that.

use std::fmt;

use num_complex::Complex64;

use crate::distkit::SourceDistribution;

/// Errors constructing [`SystemParams`].
#[derive(Debug, Clone, PartialEq)]
pub enum ScaleError {
    /// The aggregate mean demand `nμ` reaches or exceeds the capacity `s`;
    /// no stationary queue exists.
    Unstable { mu_a: f64, s: u32 },
    /// `degree(X) ≤ s/n`: the aggregate PGF `X(z)^n` has degree at most `s`,
    /// so `z^s − A(z)` has no zeros outside the unit disk and the pole-based
    /// tail machinery does not apply.
    DegreeTooSmall { degree: usize, n: u32, s: u32 },
}

impl fmt::Display for ScaleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScaleError::Unstable { mu_a, s } => {
                write!(f, "unstable system: aggregate mean {mu_a} >= capacity {s}")
            }
            ScaleError::DegreeTooSmall { degree, n, s } => {
                write!(
                    f,
                    "demand degree {degree} <= s/n = {s}/{n}; \
                     no zeros outside the unit disk"
                )
            }
        }
    }
}

impl std::error::Error for ScaleError {}

/// A stable `(n, s, X)` system with its derived scaling constants.
#[derive(Debug, Clone)]
pub struct SystemParams {
    /// Number of i.i.d. demand sources.
    pub n: u32,
    /// Service capacity per period.
    pub s: u32,
    /// Per-source demand distribution.
    pub dist: SourceDistribution,
    /// Slack parameter `γ = (s − nμ)/√s > 0`.
    pub gamma: f64,
    /// Utilization `ρ = nμ/s ∈ (0, 1)`.
    pub rho: f64,
    /// Clustering constant `a₀ = √(2μ)/σ`.
    pub a0: f64,
    /// Clustering constant `b₀ = γ√μ/(σ√2)`.
    pub b0: f64,
    /// Gaussian-random-walk drift `β = b₀√2`.
    pub beta: f64,
    /// Dominant-root scale `d₀ = 2γμ/σ²` (`Ẑ₀ = 1 + d₀/√s`).
    pub d0: f64,
    /// Aggregate mean `μ_A = nμ`.
    pub mu_a: f64,
}

/// Builds [`SystemParams`], checking stability and the degree condition.
///
/// # Errors
///
/// * [`ScaleError::Unstable`] if `nμ ≥ s`.
/// * [`ScaleError::DegreeTooSmall`] if `degree(X) ≤ s/n`.
pub fn derive_params(n: u32, s: u32, dist: SourceDistribution) -> Result<SystemParams, ScaleError> {
    assert!(n > 0 && s > 0, "n and s must be positive");
    let mu = dist.mu();
    let sigma = dist.sigma2().sqrt();
    let mu_a = f64::from(n) * mu;
    if mu_a >= f64::from(s) {
        return Err(ScaleError::Unstable { mu_a, s });
    }
    if (dist.degree() as u64) * u64::from(n) <= u64::from(s) {
        return Err(ScaleError::DegreeTooSmall { degree: dist.degree(), n, s });
    }
    let sqrt_s = f64::from(s).sqrt();
    let gamma = (f64::from(s) - mu_a) / sqrt_s;
    let a0 = (2.0 * mu).sqrt() / sigma;
    let b0 = gamma * mu.sqrt() / (sigma * std::f64::consts::SQRT_2);
    Ok(SystemParams {
        n,
        s,
        dist,
        gamma,
        rho: mu_a / f64::from(s),
        a0,
        b0,
        beta: b0 * std::f64::consts::SQRT_2,
        d0: 2.0 * gamma * mu / (sigma * sigma),
        mu_a,
    })
}

/// Smallest capacity achieving drift `beta` for `n` sources:
/// `s = ⌈nμ + β σ √n⌉`.
///
/// Ceiling rounding keeps `γ > 0`; the resulting slack satisfies
/// `γ = βσ/√μ + O(1/√s)` (the ceiling contributes the `O(1/√s)`).
pub fn capacity_for(n: u32, beta: f64, dist: &SourceDistribution) -> u32 {
    assert!(beta > 0.0, "beta must be positive");
    let nf = f64::from(n);
    let raw = nf * dist.mu() + beta * dist.sigma2().sqrt() * nf.sqrt();
    raw.ceil() as u32
}

impl SystemParams {
    /// First-order location `ẑ_j` of the `j`-th zero of `z^s − A(z)` inside
    /// the unit disk:
    ///
    /// `ẑ_j = 1 + (a₀/√s)(b₀ − √(b₀² − 2πij))`, with `ẑ_0 = 1` exactly and
    /// conjugate symmetry `ẑ_j = conj(ẑ_{s−j})` for `j > s/2`.
    ///
    /// Accurate to `O(1/s)` only for `j = o(s)`; beyond roughly `s/(4π)` the
    /// prediction leaves the unit disk and is useless as a Newton seed.
    ///
    /// # Panics
    ///
    /// If `j ≥ s`.
    pub fn asym_interior_zero(&self, j: u32) -> Complex64 {
        assert!(j < self.s, "interior index {j} out of range 0..{}", self.s);
        if j == 0 {
            return Complex64::new(1.0, 0.0);
        }
        if 2 * j > self.s {
            return self.asym_interior_zero(self.s - j).conj();
        }
        let sqrt_s = f64::from(self.s).sqrt();
        let disc = Complex64::new(self.b0 * self.b0, -std::f64::consts::TAU * f64::from(j));
        Complex64::new(1.0, 0.0) + self.a0 / sqrt_s * (self.b0 - disc.sqrt())
    }

    /// First-order location `Ẑ(t)` of the exterior zeros:
    ///
    /// `Ẑ(t) = 1 + (a₀/√s)(√(b₀² − 2πit) + b₀)` with the principal square
    /// root, so `Ẑ(−t) = conj Ẑ(t)` and `Ẑ(0) = 1 + d₀/√s` is real.
    ///
    /// Half-integer `t` is allowed (the remainder contour passes through
    /// `Ẑ(±½)`).
    pub fn asym_exterior_zero(&self, t: f64) -> Complex64 {
        let sqrt_s = f64::from(self.s).sqrt();
        let disc = Complex64::new(self.b0 * self.b0, -std::f64::consts::TAU * t);
        Complex64::new(1.0, 0.0) + self.a0 / sqrt_s * (disc.sqrt() + self.b0)
    }

    /// Closed-form saddle-point and dominant-root predictions
    /// `(ẑ_sp, Ẑ₀) = (1 + d₀/(2√s), 1 + d₀/√s)`.
    ///
    /// The midpoint identity `ẑ_sp = (1 + Ẑ₀)/2` holds exactly by
    /// construction.
    pub fn asym_landmarks(&self) -> (f64, f64) {
        let sqrt_s = f64::from(self.s).sqrt();
        let z0_hat = 1.0 + self.d0 / sqrt_s;
        let z_sp_hat = 1.0 + self.d0 / (2.0 * sqrt_s);
        (z_sp_hat, z0_hat)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn instance_f() -> SystemParams {
        derive_params(180, 100, SourceDistribution::bernoulli(0.5).unwrap()).unwrap()
    }

    fn instance_g() -> SystemParams {
        derive_params(2, 1, SourceDistribution::bernoulli(0.4).unwrap()).unwrap()
    }

    #[test]
    fn instance_f_constants_are_exact() {
        let p = instance_f();
        assert_eq!(p.mu_a, 90.0);
        assert_eq!(p.gamma, 1.0);
        assert_eq!(p.rho, 0.9);
        assert_eq!(p.a0, 2.0);
        assert!((p.b0 - 1.0).abs() < 1e-15);
        assert!((p.beta - std::f64::consts::SQRT_2).abs() < 1e-15);
        assert!((p.d0 - 4.0).abs() < 1e-14);
        // b0 = gamma * a0 / 2 identically.
        assert!((p.b0 - p.gamma * p.a0 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn instance_g_constants() {
        let p = instance_g();
        assert!((p.gamma - 0.2).abs() < 1e-15);
        assert!((p.mu_a - 0.8).abs() < 1e-15);
        assert!((p.rho - 0.8).abs() < 1e-15);
        assert!((p.d0 - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn unstable_and_degree_errors() {
        let d = SourceDistribution::bernoulli(0.6).unwrap();
        assert_eq!(
            derive_params(2, 1, d).unwrap_err(),
            ScaleError::Unstable { mu_a: 1.2, s: 1 }
        );
        // degree 1 <= s/n = 2/2: the aggregate never exceeds capacity and no
        // exterior zero exists.
        let d = SourceDistribution::bernoulli(0.4).unwrap();
        assert_eq!(
            derive_params(2, 2, d).unwrap_err(),
            ScaleError::DegreeTooSmall { degree: 1, n: 2, s: 2 }
        );
    }

    #[test]
    fn capacity_examples() {
        let d = SourceDistribution::bernoulli(0.5).unwrap();
        assert_eq!(capacity_for(100, 1.0, &d), 55);
        assert_eq!(capacity_for(180, std::f64::consts::SQRT_2, &d), 100);
        assert_eq!(capacity_for(4, 0.1, &d), 3);
    }

    #[test]
    fn capacity_family_hits_gamma_one() {
        // The test family used throughout: beta = sqrt(2) makes the target
        // slack betas/sqrt(mu) = 1, and the ceiling happens to land on
        // gamma = 1 exactly for these source counts.
        let d = SourceDistribution::bernoulli(0.5).unwrap();
        for (n, s) in [(40u32, 25u32), (180, 100), (760, 400), (3120, 1600)] {
            assert_eq!(capacity_for(n, std::f64::consts::SQRT_2, &d), s);
            let p = derive_params(n, s, d.clone()).unwrap();
            assert_eq!(p.gamma, 1.0, "gamma at n={n}");
            // General contract: gamma within 1/sqrt(s) of beta*sigma/sqrt(mu).
            let target = std::f64::consts::SQRT_2 * d.sigma2().sqrt() / d.mu().sqrt();
            assert!((p.gamma - target).abs() <= 1.0 / f64::from(s).sqrt());
        }
    }

    #[test]
    fn interior_seed_examples() {
        let p = instance_f();
        // Value computed from the closed form with a0=2, b0=1, s=100.
        let z1 = p.asym_interior_zero(1);
        let expect = Complex64::new(0.816_274_443_604_095_4, 0.327_483_286_033_572_36);
        assert!((z1 - expect).norm() < 1e-15, "z1 = {z1}");
        // Conjugate symmetry across j and s-j is exact by construction.
        assert_eq!(p.asym_interior_zero(99), z1.conj());
        assert_eq!(p.asym_interior_zero(0), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn interior_seeds_leave_the_disk_near_j_of_order_s() {
        // |ẑ_j| < 1 holds only up to j ≈ s/(4π); on this instance the seed
        // exits the unit disk at j = 8. The root finder guards on exactly
        // this, so pin the crossing point.
        let p = instance_f();
        for j in 1..=7 {
            assert!(p.asym_interior_zero(j).norm() < 1.0, "j={j}");
        }
        assert!(p.asym_interior_zero(8).norm() >= 1.0);
    }

    #[test]
    fn exterior_seed_examples() {
        let p = instance_f();
        let z0 = p.asym_exterior_zero(0.0);
        assert!((z0 - Complex64::new(1.4, 0.0)).norm() < 1e-15);
        // Real part at t = 1/2 (the remainder-contour crossing).
        let zh = p.asym_exterior_zero(0.5);
        assert!((zh.re - 1.493_152_121_243_412_3).abs() < 1e-14);
        // Conjugacy between t and -t.
        let z1 = p.asym_exterior_zero(1.0);
        assert_eq!(p.asym_exterior_zero(-1.0), z1.conj());
        assert!(z1.im < 0.0, "positive branch sits in the lower half-plane");
    }

    #[test]
    fn landmarks_and_midpoint_identity() {
        let p = instance_f();
        let (z_sp_hat, z0_hat) = p.asym_landmarks();
        assert!((z_sp_hat - 1.2).abs() < 1e-15);
        assert!((z0_hat - 1.4).abs() < 1e-15);
        assert_eq!(z0_hat - z_sp_hat, z_sp_hat - 1.0);

        let g = instance_g();
        let (_, z0_hat_g) = g.asym_landmarks();
        assert!((z0_hat_g - (1.0 + 2.0 / 3.0)).abs() < 1e-14);
    }

    #[test]
    fn interior_and_exterior_seeds_share_the_unified_form() {
        // At (j, t) = (0, 0) the minus branch gives 1 and the plus branch
        // gives 1 + 2 a0 b0 / sqrt(s).
        let p = instance_f();
        assert_eq!(p.asym_interior_zero(0), Complex64::new(1.0, 0.0));
        let z0 = p.asym_exterior_zero(0.0);
        let expect = 1.0 + 2.0 * p.a0 * p.b0 / f64::from(p.s).sqrt();
        assert!((z0.re - expect).abs() < 1e-15 && z0.im == 0.0);
    }
}
