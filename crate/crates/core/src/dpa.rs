//! Dominant-pole and corrected multi-pole tail approximations: saddle data,
//! the contour integral `I(Z)` and the interior-zero product it identifies
//! with, exact and asymptotic front factors, the `J(d)` integral, the
//! remainder contour with its lower bound, and the tail estimates
//! themselves.
//!
//! Everything multiplicative runs in log space: products over up to `s − 1`
//! interior zeros, powers `Z^{s−1}`, and tail powers `Z^{−(N+1)}` are all
//! assembled as sums of logs and exponentiated once, so nothing overflows
//! for `s` in the thousands and relative accuracy is uniform in `s`.

use std::fmt;

use num_complex::Complex64;

use crate::grw;
use crate::numerics::{adaptive_simpson, circle_mean, NeumaierSum};
use crate::roots::{ratio_w, PoleSet};
use crate::scaling::SystemParams;

/// Saddle-point data of `g(z) = −ln z + (n/s) ln X(z)`.
#[derive(Debug, Clone, Copy)]
pub struct SaddleData {
    /// The real saddle point in `(1, Z₀)`.
    pub z_sp: f64,
    /// `B = exp(s·g(z_sp)) = A(z_sp)/z_sp^s ∈ (0, 1)`.
    pub b: f64,
    /// `η = g″(z_sp) > 0`, the curvature at the saddle.
    pub eta: f64,
}

/// How a [`FrontFactor`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrontFactorMethod {
    /// Residue product over all interior zeros — the reference method.
    ExactProduct,
    /// The zeta-series limit shared with the walk front factor.
    ZetaApprox,
    /// The saddle-point `J(d)`-integral asymptotics.
    JIntegralApprox,
}

/// A tail-series coefficient `c_k/(1 − Z_k)`.
#[derive(Debug, Clone, Copy)]
pub struct FrontFactor {
    /// Index of the exterior zero it belongs to.
    pub k: i64,
    /// The coefficient; real and positive for `k = 0` under
    /// [`FrontFactorMethod::ExactProduct`].
    pub value: Complex64,
    /// Provenance of the value.
    pub method: FrontFactorMethod,
}

/// Which estimator produced a [`TailEstimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailMethod {
    /// Lindley-iteration oracle.
    ExactOracle,
    /// Leading dominant-pole term.
    DpaLeading,
    /// Dominant pole plus `M` conjugate correction pairs.
    DpaCorrected(u32),
    /// Gaussian-walk limit.
    GrwLimit,
}

/// A tail probability estimate `P(Q > N)` with its provenance.
#[derive(Debug, Clone, Copy)]
pub struct TailEstimate {
    /// Tail level.
    pub n: u64,
    /// Estimator.
    pub method: TailMethod,
    /// Estimated probability (approximations may leak slightly above exact
    /// bounds, but never outside `[0, 1.5]`).
    pub value: f64,
}

/// The segment-plus-arc remainder contour.
#[derive(Debug, Clone)]
pub struct ContourSpec {
    /// Horizontal half-width parameter of the segment crossing.
    pub x0: f64,
    /// Vertical extent parameter; the segment spans `±y0/√s`.
    pub y0: f64,
    /// Real-axis crossing `ξ = Re Ẑ(½)` of the segment.
    pub xi: f64,
    /// Arc radius, `R² = ξ² + y0²/s`.
    pub r: f64,
    /// Sampled segment from `(ξ, −y0/√s)` up to `(ξ, +y0/√s)`.
    pub segment_points: Vec<Complex64>,
    /// Sampled arc from the upper join counterclockwise to the lower join.
    pub arc_points: Vec<Complex64>,
}

/// Failures of the approximation layer.
#[derive(Debug, Clone, Copy)]
pub enum DpaError {
    /// `Z` sits (numerically) on the integration circle.
    OnContour { modulus: f64, radius: f64 },
    /// Circle quadrature exceeded its node cap without settling.
    QuadratureStall { nodes: usize },
    /// The product was evaluated exactly at an interior zero.
    PoleHit { z_re: f64, z_im: f64 },
    /// Argument outside the formula's domain of validity.
    DomainError { value: f64, limit: f64 },
    /// A conjugate-symmetric assembly retained a non-negligible imaginary
    /// part — a numerics corruption canary, not a model property.
    ResidueLeak { im: f64 },
}

impl fmt::Display for DpaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DpaError::OnContour { modulus, radius } => {
                write!(f, "|Z| = {modulus} lies on the integration circle of radius {radius}")
            }
            DpaError::QuadratureStall { nodes } => {
                write!(f, "circle quadrature did not settle at {nodes} nodes")
            }
            DpaError::PoleHit { z_re, z_im } => {
                write!(f, "evaluation point ({z_re}, {z_im}) coincides with an interior zero")
            }
            DpaError::DomainError { value, limit } => {
                write!(f, "argument {value} outside domain (limit {limit})")
            }
            DpaError::ResidueLeak { im } => {
                write!(f, "conjugate assembly leaked imaginary mass {im:e}")
            }
        }
    }
}

impl std::error::Error for DpaError {}

/// Saddle quantities: `B` in log space, `η` by the analytic second
/// derivative of `g` from the PGF derivatives.
pub fn saddle_data(p: &SystemParams, z_sp: f64) -> SaddleData {
    let z = Complex64::new(z_sp, 0.0);
    let (x, xp, xpp) = p.dist.pgf_derivs(z);
    let ratio = f64::from(p.n) / f64::from(p.s);
    let b = (f64::from(p.n) * x.re.ln() - f64::from(p.s) * z_sp.ln()).exp();
    let lx = xp.re / x.re;
    let eta = 1.0 / (z_sp * z_sp) + ratio * (xpp.re / x.re - lx * lx);
    SaddleData { z_sp, b, eta }
}

/// The contour integral
/// `I(Z) = (1/2πi) ∮_{|z|=z_sp} ln(1 − A(z)/z^s)/(Z − z) dz`
/// by the doubling trapezoid rule.
///
/// On the saddle circle `|A(z)/z^s| ≤ B < 1`, so the principal log never
/// crosses its cut. The nearest integrand singularities (the clustered
/// zeros) sit `Θ(1/√s)` off the contour, hence the node floor
/// `max(4096, 64·⌈√s⌉)`.
///
/// # Errors
///
/// * [`DpaError::OnContour`] if `|Z|` is within `1e-9` of the circle.
/// * [`DpaError::QuadratureStall`] past `2^20` nodes.
pub fn contour_i(p: &SystemParams, z_big: Complex64, z_sp: f64) -> Result<Complex64, DpaError> {
    assert!(z_big.norm() >= 1.0 - 1e-12, "contour_i requires |Z| >= 1");
    if (z_big.norm() - z_sp).abs() < 1e-9 {
        return Err(DpaError::OnContour { modulus: z_big.norm(), radius: z_sp });
    }
    let start = 4096usize.max(64 * (f64::from(p.s).sqrt().ceil() as usize));
    let f = |z: Complex64| ratio_w(p, z).ln() * z / (z_big - z);
    circle_mean(z_sp, start, 1e-9, 1 << 20, f)
        .map_err(|nodes| DpaError::QuadratureStall { nodes })
}

/// `ln P(Z) = Σ_{j=1}^{s−1} ln(1 − z_j/Z)` over the interior zeros
/// (conjugate pairs are both present in the sum, so the result is real for
/// real `Z` up to rounding).
///
/// # Errors
///
/// [`DpaError::PoleHit`] if `Z` coincides with an interior zero.
pub fn log_p(p: &SystemParams, poles: &PoleSet, z_big: Complex64) -> Result<Complex64, DpaError> {
    let _ = p;
    let mut re = NeumaierSum::new();
    let mut im = NeumaierSum::new();
    for zero in &poles.interior[1..] {
        if (z_big - zero.value).norm() < 1e-14 {
            return Err(DpaError::PoleHit { z_re: z_big.re, z_im: z_big.im });
        }
        let term = (Complex64::new(1.0, 0.0) - zero.value / z_big).ln();
        re.add(term.re);
        im.add(term.im);
    }
    Ok(Complex64::new(re.total(), im.total()))
}

/// Verification mode tying [`log_p`] to [`contour_i`]: returns
/// `(product side, contour side, |difference|)` of the identity
///
/// * `Z = 1`:           `ln P(1)         = ln(s − μ_A) + I(1)`,
/// * `1 < |Z| < z_sp`:   `ln P(Z) = −ln(1−1/Z) + ln(1−A(Z)/Z^s) + I(Z)`,
/// * `|Z| > z_sp`:       `ln P(Z) = −ln(1−1/Z) + I(Z)`.
///
/// # Errors
///
/// Propagates [`log_p`] and [`contour_i`] errors.
pub fn product_contour_identity(
    p: &SystemParams,
    poles: &PoleSet,
    z_big: Complex64,
    z_sp: f64,
) -> Result<(Complex64, Complex64, f64), DpaError> {
    let one = Complex64::new(1.0, 0.0);
    let lhs = log_p(p, poles, if (z_big - one).norm() < 1e-12 { one } else { z_big })?;
    let rhs = if (z_big - one).norm() < 1e-12 {
        Complex64::new((f64::from(p.s) - p.mu_a).ln(), 0.0) + contour_i(p, one, z_sp)?
    } else {
        let base = -(one - z_big.inv()).ln() + contour_i(p, z_big, z_sp)?;
        if z_big.norm() < z_sp {
            base + ratio_w(p, z_big).ln()
        } else {
            base
        }
    };
    Ok((lhs, rhs, (lhs - rhs).norm()))
}

/// The exact front factor `c_k/(1 − Z_k)`: the residue product over all
/// interior zeros, assembled in log space. `Z_k^{s−1}` is eliminated
/// through `Z_k^s = A(Z_k)`, so the only exponentiation is of an O(1)
/// quantity. The `k = 0` value is real; its imaginary rounding dust is
/// zeroed.
///
/// # Panics
///
/// If `poles` does not hold the exterior zero `Z_k`.
pub fn front_factor_exact(p: &SystemParams, poles: &PoleSet, k: i64) -> FrontFactor {
    let zk = poles
        .exterior_by_index(k)
        .unwrap_or_else(|| panic!("front_factor_exact: Z_{k} not present in PoleSet"))
        .value;
    let (x, xp, _) = p.dist.pgf_derivs(zk);
    let mut re = NeumaierSum::new();
    let mut im = NeumaierSum::new();
    let one = Complex64::new(1.0, 0.0);
    for zero in &poles.interior[1..] {
        let term = (zk - zero.value).ln() - (one - zero.value).ln();
        re.add(term.re);
        im.add(term.im);
    }
    // sZ^{s−1} − A′(Z) = Z^{s−1}·w with w = s − n·Z·X′/X at a zero.
    let w = f64::from(p.s) - f64::from(p.n) * zk * xp / x;
    let log_zs1 = f64::from(p.n) * x.ln() - zk.ln();
    let exponent = Complex64::new(re.total(), im.total()) - log_zs1;
    let mut value = -(f64::from(p.s) - p.mu_a) * exponent.exp() / w;
    if k == 0 {
        value.im = 0.0;
    }
    FrontFactor { k, value, method: FrontFactorMethod::ExactProduct }
}

/// The prefactor ratio `[−(s−μ_A)/(sZ₀^{s−1} − A′(Z₀))]·Z₀^{s−1}`, which
/// tends to 1 as `s` grows. Computed as `−(s−μ_A)/(s − n·Z₀·X′/X)` — the
/// same quantity with `Z₀^{s−1}` cancelled analytically, so it cannot
/// overflow.
pub fn dominant_prefactor_ratio(p: &SystemParams, z0: f64) -> f64 {
    let (x, xp, _) = p.dist.pgf_derivs(Complex64::new(z0, 0.0));
    let w = f64::from(p.s) - f64::from(p.n) * z0 * xp.re / x.re;
    -(f64::from(p.s) - p.mu_a) / w
}

/// `J(d) = (1/π) ∫₀^∞ d/(t² + d²) · ln(1 − B e^{−t²}) dt`, truncated at
/// `t_max = √(37 + ln B)` where the integrand falls below `1e-16`, by
/// adaptive Simpson quadrature at relative tolerance `1e-10`.
///
/// # Errors
///
/// [`DpaError::DomainError`] unless `Re d > 0` (which keeps `t² + d²` away
/// from zero on the path).
pub fn j_integral(sd: &SaddleData, d: Complex64) -> Result<Complex64, DpaError> {
    if d.re <= 0.0 {
        return Err(DpaError::DomainError { value: d.re, limit: 0.0 });
    }
    let b = sd.b;
    let d2 = d * d;
    let t_max = (37.0 + b.ln()).sqrt();
    let f = |t: f64| {
        let kernel = d / (t * t + d2);
        kernel * (1.0 - b * (-t * t).exp()).ln()
    };
    Ok(adaptive_simpson(&f, 0.0, t_max, 1e-10, 1e-16) / std::f64::consts::PI)
}

/// The saddle-point approximation of the front factor,
/// `exp(J(d̂_k) + J(d̂_0)) / (2 d̂_k (d̂_k + d̂_0))` with `d̂_0 = b₀` and
/// `d̂_k = (b₀² − 2πik)^{1/2}` (principal branch, so `arg d̂_k ∈ (−π/4, π/4)`).
///
/// # Panics
///
/// If `|k| > √s` (outside the regime where the approximation is meant).
///
/// # Errors
///
/// Propagates [`j_integral`] errors.
pub fn front_factor_approx(
    p: &SystemParams,
    sd: &SaddleData,
    k: i64,
) -> Result<FrontFactor, DpaError> {
    assert!(
        (k.unsigned_abs() as f64) <= f64::from(p.s).sqrt(),
        "front_factor_approx is only valid for |k| <= sqrt(s)"
    );
    let d0 = Complex64::new(p.b0, 0.0);
    let dk = if k == 0 {
        d0
    } else {
        let d = Complex64::new(p.b0 * p.b0, -std::f64::consts::TAU * k.unsigned_abs() as f64)
            .sqrt();
        if k > 0 {
            d
        } else {
            d.conj()
        }
    };
    let value = (j_integral(sd, dk)? + j_integral(sd, d0)?).exp() / (2.0 * dk * (dk + d0));
    Ok(FrontFactor { k, value, method: FrontFactorMethod::JIntegralApprox })
}

/// Leading dominant-pole tail `P(Q > N) ≈ ff₀ · Z₀^{−(N+1)}`, the power in
/// log space.
pub fn tail_dpa(ff0: &FrontFactor, z0: f64, n: u64) -> TailEstimate {
    debug_assert_eq!(ff0.k, 0);
    let value = ff0.value.re * (-((n + 1) as f64) * z0.ln()).exp();
    assert!((0.0..=1.5).contains(&value), "dpa tail escaped [0, 1.5]: {value}");
    TailEstimate { n, method: TailMethod::DpaLeading, value }
}

/// Corrected tail: the full conjugate-symmetric sum
/// `Σ_{k=−M}^{M} ff_k · Z_k^{−(N+1)}` with exact front factors. `M = 0`
/// reproduces [`tail_dpa`] bit for bit.
///
/// # Panics
///
/// If `poles` holds fewer than `M` exterior pairs.
///
/// # Errors
///
/// [`DpaError::ResidueLeak`] if the assembled imaginary part reaches
/// `1e-12` — conjugate pairing makes the true value real, so residual
/// imaginary mass indicates corrupted inputs.
pub fn tail_corrected(
    p: &SystemParams,
    poles: &PoleSet,
    n: u64,
    m: u32,
) -> Result<TailEstimate, DpaError> {
    assert!(
        poles.k_max() >= i64::from(m),
        "tail_corrected needs exterior zeros through k = {m}"
    );
    let power = -((n + 1) as f64);
    let mut acc = Complex64::new(0.0, 0.0);
    for k in -i64::from(m)..=i64::from(m) {
        let ff = front_factor_exact(p, poles, k);
        let zk = poles.exterior_by_index(k).unwrap().value;
        acc += ff.value * (power * zk.ln()).exp();
    }
    if acc.im.abs() >= 1e-12 {
        return Err(DpaError::ResidueLeak { im: acc.im });
    }
    let value = acc.re;
    assert!((0.0..=1.5).contains(&value), "corrected tail escaped [0, 1.5]: {value}");
    Ok(TailEstimate { n, method: TailMethod::DpaCorrected(m), value })
}

/// Builds the remainder contour: a vertical segment crossing the real axis
/// at `ξ = Re Ẑ(½)` between `(ξ, ±y0/√s)`, closed by the counterclockwise
/// arc of radius `R = √(ξ² + y0²/s)`, with 1024 samples on each piece.
/// Here `x0 = Re[a₀(√(b₀² + πi) − b₀)]` and `y0² = 2·(2γμ/σ²) + 2x0²`.
pub fn build_contour_k(p: &SystemParams) -> ContourSpec {
    let x0 = (Complex64::new(p.b0 * p.b0, std::f64::consts::PI).sqrt() - p.b0).re * p.a0;
    let y0 = (2.0 * p.d0 + 2.0 * x0 * x0).sqrt();
    let xi = p.asym_exterior_zero(0.5).re;
    let sqrt_s = f64::from(p.s).sqrt();
    let r = (xi * xi + y0 * y0 / f64::from(p.s)).sqrt();
    let half = y0 / sqrt_s;

    const POINTS: usize = 1024;
    let mut segment_points = Vec::with_capacity(POINTS);
    for i in 0..POINTS {
        let t = i as f64 / (POINTS - 1) as f64;
        segment_points.push(Complex64::new(xi, -half + 2.0 * half * t));
    }
    let theta_join = (half).atan2(xi);
    let mut arc_points = Vec::with_capacity(POINTS);
    for i in 0..POINTS {
        let t = i as f64 / (POINTS - 1) as f64;
        let theta = theta_join + (std::f64::consts::TAU - 2.0 * theta_join) * t;
        arc_points.push(Complex64::from_polar(r, theta));
    }
    ContourSpec { x0, y0, xi, r, segment_points, arc_points }
}

/// Minimum of `|1 − A(z)/z^s|` over every sampled contour point (computed
/// from logs, so it is exact under branch jumps). A result bounded away
/// from 0 certifies the remainder estimate numerically.
pub fn bound_check_k(p: &SystemParams, spec: &ContourSpec) -> f64 {
    spec.segment_points
        .iter()
        .chain(spec.arc_points.iter())
        .map(|&z| ratio_w(p, z).norm())
        .fold(f64::INFINITY, f64::min)
}

/// The zeta-series limit of the front factor: `h(√2·b₀)` of the walk
/// module — the value the exact `k = 0` front factor approaches as `s`
/// grows.
///
/// # Errors
///
/// [`DpaError::DomainError`] when `b₀ ≥ √(2π)` (series domain edge).
pub fn zeta_front_factor(p: &SystemParams) -> Result<f64, DpaError> {
    grw::h_beta(std::f64::consts::SQRT_2 * p.b0).map_err(|_| DpaError::DomainError {
        value: p.b0,
        limit: std::f64::consts::TAU.sqrt(),
    })
}
