//! The Gaussian-random-walk limit: `ζ(½ − r)` coefficients, the series for
//! `P(M_β = 0)` and the front factor `h(β)`, an independent Spitzer-identity
//! oracle, and the scaling map between queue and walk coordinates.
//!
//! Here `M_β` is the all-time maximum of a random walk with `Normal(−β, 1)`
//! increments. Two independent routes to `P(M_β = 0)` are provided: the
//! zeta series (valid for `β < 2√π`) and termwise Spitzer summation over
//! normal tail probabilities (valid for every `β > 0`); their agreement is
//! the module's cross-check. The `ζ(½ − r)` values themselves are computed
//! two ways as well — the functional equation applied to Euler–Maclaurin
//! values at `r + ½`, and direct Euler–Maclaurin continuation at `½ − r`.

use std::fmt;
use std::sync::OnceLock;

use crate::numerics::NeumaierSum;
use crate::scaling::SystemParams;

/// Largest `r` for which `ζ(½ − r)` is tabulated; also the hard cap of the
/// series in [`prob_max_zero`] / [`h_beta`].
const R_MAX: u32 = 60;

/// Walk coordinates produced by [`map_scalings`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrwParams {
    /// Drift `β = √2·b₀` of the limiting walk (must be positive).
    pub beta: f64,
    /// Scaled tail level `K = L√μ/σ`.
    pub k: f64,
}

/// Failures of the series layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GrwError {
    /// `ζ(½ − r)` requested beyond the tabulated range.
    OutOfRange { r: u32, max: u32 },
    /// Argument outside the open interval where the series converges.
    DomainError { value: f64, limit: f64 },
}

impl fmt::Display for GrwError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GrwError::OutOfRange { r, max } => {
                write!(f, "zeta coefficient index {r} exceeds supported maximum {max}")
            }
            GrwError::DomainError { value, limit } => {
                write!(f, "argument {value} outside the series domain (0, {limit})")
            }
        }
    }
}

impl std::error::Error for GrwError {}

/// `B_{2i}/(2i)!` for `i = 1..=12`, as exact rational literals.
const BERN_OVER_FACT: [f64; 12] = [
    (1.0 / 6.0) / 2.0,
    (-1.0 / 30.0) / 24.0,
    (1.0 / 42.0) / 720.0,
    (-1.0 / 30.0) / 40_320.0,
    (5.0 / 66.0) / 3_628_800.0,
    (-691.0 / 2730.0) / 479_001_600.0,
    (7.0 / 6.0) / 87_178_291_200.0,
    (-3617.0 / 510.0) / 20_922_789_888_000.0,
    (43_867.0 / 798.0) / 6_402_373_705_728_000.0,
    (-174_611.0 / 330.0) / 2_432_902_008_176_640_000.0,
    (854_513.0 / 138.0) / 1_124_000_727_777_607_680_000.0,
    (-236_364_091.0 / 2730.0) / 620_448_401_733_239_439_360_000.0,
];

/// `ζ(s)` by Euler–Maclaurin with `N = 32` initial terms and `J = 12`
/// correction terms: accurate to well below `1e-14` for real
/// `s ∈ (−23, 1) ∪ (1, 64)`, which covers every argument used here.
fn zeta_em(s: f64) -> f64 {
    const N: f64 = 32.0;
    let mut acc = NeumaierSum::new();
    for j in 1..32u32 {
        acc.add(f64::from(j).powf(-s));
    }
    acc.add(N.powf(1.0 - s) / (s - 1.0));
    acc.add(0.5 * N.powf(-s));
    // Correction term i carries the rising product s(s+1)…(s+2i−2).
    let mut rising = s;
    for (i, b) in BERN_OVER_FACT.iter().enumerate() {
        let i = i as f64 + 1.0;
        acc.add(b * rising * N.powf(-s - 2.0 * i + 1.0));
        rising *= (s + 2.0 * i - 1.0) * (s + 2.0 * i);
    }
    acc.total()
}

fn zeta_half_table() -> &'static [f64; R_MAX as usize + 1] {
    static TABLE: OnceLock<[f64; R_MAX as usize + 1]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [0.0f64; R_MAX as usize + 1];
        t[0] = zeta_em(0.5);
        // ζ(½−r) = 2^{½−r} π^{−½−r} sin(π(½−r)/2) Γ(½+r) ζ(½+r), with
        // sin(π(½−r)/2) = ±√2/2 exactly, sign pattern (+,−,−,+) in r mod 4,
        // and Γ(½+r) built iteratively from Γ(½) = √π.
        let mut gamma = std::f64::consts::PI.sqrt();
        for (r, slot) in t.iter_mut().enumerate().skip(1) {
            gamma *= r as f64 - 0.5;
            let sign = match r % 4 {
                0 | 3 => 1.0,
                _ => -1.0,
            };
            let rf = r as f64;
            *slot = 2.0f64.powf(0.5 - rf)
                * std::f64::consts::PI.powf(-0.5 - rf)
                * sign
                * std::f64::consts::FRAC_1_SQRT_2
                * gamma
                * zeta_em(rf + 0.5);
        }
        t
    })
}

/// `ζ(½ − r)` via the functional equation on Euler–Maclaurin values at
/// `r + ½` (direct Euler–Maclaurin at `½` itself when `r = 0`).
///
/// # Errors
///
/// [`GrwError::OutOfRange`] for `r > 60`.
pub fn zeta_half(r: u32) -> Result<f64, GrwError> {
    if r > R_MAX {
        return Err(GrwError::OutOfRange { r, max: R_MAX });
    }
    Ok(zeta_half_table()[r as usize])
}

/// `ζ(½ − r)` by direct Euler–Maclaurin continuation at the negative
/// argument — an evaluation independent of the functional-equation route,
/// used for cross-validation.
///
/// # Errors
///
/// [`GrwError::OutOfRange`] for `r > 20` (the direct expansion's remainder
/// is only controlled down to arguments around `−20`).
pub fn zeta_half_alt(r: u32) -> Result<f64, GrwError> {
    if r > 20 {
        return Err(GrwError::OutOfRange { r, max: 20 });
    }
    Ok(zeta_em(0.5 - f64::from(r)))
}

/// The shared series `Σ_r ζ(½−r)·c^r/(r!(2r+1))` with `c = −β²/2`,
/// truncated at `|term| < 1e-16`, capped at `r = 60`, and guarded so every
/// retained term is strictly smaller than its predecessor (the terms of a
/// convergent instance always are).
fn zeta_series(c: f64) -> f64 {
    let table = zeta_half_table();
    let mut acc = NeumaierSum::new();
    let mut power = 1.0f64;
    let mut factorial = 1.0f64;
    let mut prev = f64::INFINITY;
    for (r, &zeta) in table.iter().enumerate() {
        let term = zeta * power / (factorial * (2.0 * r as f64 + 1.0));
        if term.abs() < 1e-16 || term.abs() >= prev {
            break;
        }
        acc.add(term);
        prev = term.abs();
        power *= c;
        factorial *= r as f64 + 1.0;
    }
    acc.total()
}

const TWO_SQRT_PI: f64 = 3.544_907_701_811_032;

fn check_beta(beta: f64) -> Result<(), GrwError> {
    if beta > 0.0 && beta < TWO_SQRT_PI {
        Ok(())
    } else {
        Err(GrwError::DomainError { value: beta, limit: TWO_SQRT_PI })
    }
}

/// `P(M_β = 0) = √2·β·exp{(β/√(2π)) Σ_r ζ(½−r)(−β²/2)^r/(r!(2r+1))}`.
///
/// # Errors
///
/// [`GrwError::DomainError`] unless `0 < β < 2√π` (the series diverges at
/// the upper edge).
pub fn prob_max_zero(beta: f64) -> Result<f64, GrwError> {
    check_beta(beta)?;
    let s = zeta_series(-0.5 * beta * beta);
    Ok(std::f64::consts::SQRT_2 * beta * (beta / std::f64::consts::TAU.sqrt() * s).exp())
}

/// The front factor `h(β) = exp{(β√2/√π) Σ_r ζ(½−r)(−β²/2)^r/(r!(2r+1))}`,
/// satisfying `h(β) = (P(M_β = 0)/(√2β))²`.
///
/// # Errors
///
/// Same domain as [`prob_max_zero`].
pub fn h_beta(beta: f64) -> Result<f64, GrwError> {
    check_beta(beta)?;
    let s = zeta_series(-0.5 * beta * beta);
    Ok((beta * std::f64::consts::SQRT_2 / std::f64::consts::PI.sqrt() * s).exp())
}

/// `P(M_β = 0)` by Spitzer's identity, `exp(−Σ_k P(S_k > 0)/k)` with
/// `P(S_k > 0) = Φ(−β√k)` — an oracle independent of the zeta series and
/// valid for every `β > 0`. Terms are added until they drop below `1e-18`;
/// `Φ` is evaluated through the complementary error function.
pub fn spitzer_oracle(beta: f64) -> f64 {
    assert!(beta > 0.0, "spitzer_oracle requires a positive drift");
    let mut acc = NeumaierSum::new();
    for k in 1..=50_000_000u64 {
        let kf = k as f64;
        let term = 0.5 * libm::erfc(beta * kf.sqrt() / std::f64::consts::SQRT_2) / kf;
        if term < 1e-18 {
            break;
        }
        acc.add(term);
    }
    (-acc.total()).exp()
}

/// Tail of the walk maximum, `P(M_β > K) ≈ h(β)·e^{−2βK}`, clamped to at
/// most 1.
///
/// # Errors
///
/// Propagates the [`h_beta`] domain check.
pub fn grw_tail(beta: f64, k: f64) -> Result<f64, GrwError> {
    assert!(k > 0.0, "grw_tail requires a positive level");
    Ok((h_beta(beta)? * (-2.0 * beta * k).exp()).min(1.0))
}

/// Maps a queue instance and tail level `N` to walk coordinates:
/// `β = √2·b₀`, `L = (N+1)/√s`, `K = L√μ/σ`. Returns the walk parameters
/// plus `L` (the queue-side label for the same level).
pub fn map_scalings(p: &SystemParams, n: u64) -> (GrwParams, f64) {
    let l = (n as f64 + 1.0) / f64::from(p.s).sqrt();
    let k = l * p.dist.mu().sqrt() / p.dist.sigma2().sqrt();
    (GrwParams { beta: p.beta, k }, l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distkit::SourceDistribution;
    use crate::scaling::derive_params;

    /// ζ(½) and ζ(−½) to full precision, from published high-precision
    /// tables.
    const ZETA_HALF: f64 = -1.460_354_508_809_586_8;
    const ZETA_MINUS_HALF: f64 = -0.207_886_224_977_354_57;

    /// Reference `P(M_β = 0)` values from an independent high-precision
    /// evaluation of the same series.
    const P_REF: [(f64, f64); 6] = [
        (0.1, 0.133_419_444_051_240_4),
        (0.25, 0.305_698_996_222_728_4),
        (0.5, 0.529_325_149_799_276_6),
        (1.0, 0.800_543_118_055_635_3),
        (2.0, 0.976_269_097_868_288),
        (3.0, 0.998_645_463_400_002_5),
    ];

    #[test]
    fn zeta_values_match_references() {
        assert!((zeta_half(0).unwrap() - ZETA_HALF).abs() < 1e-13);
        assert!((zeta_half(1).unwrap() - ZETA_MINUS_HALF).abs() < 1e-13);
        assert!(matches!(zeta_half(61), Err(GrwError::OutOfRange { r: 61, max: 60 })));
        assert!(zeta_half(60).is_ok());
    }

    #[test]
    fn functional_equation_agrees_with_direct_continuation() {
        for r in 0..=6u32 {
            let main = zeta_half(r).unwrap();
            let alt = zeta_half_alt(r).unwrap();
            // The direct continuation at 1/2 - r sums terms up to
            // ~32^(r+1/2) that cancel down to an O(1) value, so its noise
            // floor grows like 32^(r+1/2)/(r+1/2) times machine epsilon;
            // past r = 6 the comparison stops being informative in f64.
            let floor = 32.0f64.powf(r as f64 + 0.5) / (r as f64 + 0.5) * 5e-16;
            assert!(
                (main - alt).abs() < 1e-10f64.max(floor),
                "r={r}: {main} vs {alt} (floor {floor:e})"
            );
        }
        assert!(matches!(zeta_half_alt(21), Err(GrwError::OutOfRange { .. })));
    }

    #[test]
    fn series_matches_references_and_spitzer() {
        for &(beta, reference) in &P_REF {
            let p = prob_max_zero(beta).unwrap();
            assert!(
                (p - reference).abs() < 1e-12,
                "beta={beta}: {p:.16} vs {reference:.16}"
            );
            let oracle = spitzer_oracle(beta);
            assert!(
                (p - oracle).abs() < 1e-8,
                "beta={beta}: series {p:.12} vs Spitzer {oracle:.12}"
            );
            assert!(p > 0.0 && p < 1.0);
        }
    }

    #[test]
    fn domain_edges() {
        assert!(matches!(prob_max_zero(0.0), Err(GrwError::DomainError { .. })));
        assert!(matches!(prob_max_zero(-1.0), Err(GrwError::DomainError { .. })));
        assert!(matches!(prob_max_zero(TWO_SQRT_PI), Err(GrwError::DomainError { .. })));
        assert!(matches!(h_beta(4.0), Err(GrwError::DomainError { .. })));
        // The Spitzer route keeps working where the series refuses.
        let p4 = spitzer_oracle(4.0);
        assert!(p4 > 0.999 && p4 < 1.0);
        let p6 = spitzer_oracle(6.0);
        assert!(p6 > p4 && p6 < 1.0);
    }

    #[test]
    fn h_identity_green_across_the_domain() {
        // h(β) = (P(M_β = 0)/(√2 β))², checked on a deterministic spread of
        // 20 points in (0, 3.5).
        let mut state = 0x2545_f491_4f6c_dd1du64;
        for _ in 0..20 {
            state = state.wrapping_mul(6_364_136_223_846_793_005).wrapping_add(1);
            let u = (state >> 11) as f64 / (1u64 << 53) as f64;
            let beta = 1e-3 + 3.499 * u;
            let h = h_beta(beta).unwrap();
            let p = prob_max_zero(beta).unwrap();
            let rhs = (p / (std::f64::consts::SQRT_2 * beta)).powi(2);
            assert!((h - rhs).abs() < 1e-12, "beta={beta}: {h} vs {rhs}");
        }
    }

    #[test]
    fn h_limits_and_reference_value() {
        // h(√2) doubles as the front-factor limit of the b0=1 family.
        let h = h_beta(std::f64::consts::SQRT_2).unwrap();
        assert!((h - 0.207_479_832_254_890_5).abs() < 1e-12);
        assert!((h_beta(1e-8).unwrap() - 1.0).abs() < 1e-7);
    }

    #[test]
    fn tail_composition_and_monotonicity() {
        let beta = std::f64::consts::SQRT_2;
        let t = grw_tail(beta, 1.0).unwrap();
        let expected = h_beta(beta).unwrap() * (-2.0 * beta).exp();
        assert_eq!(t, expected);
        assert_eq!(grw_tail(beta, 1e6).unwrap(), 0.0);
        let mut prev = f64::INFINITY;
        for k in [0.5, 1.0, 2.0, 4.0] {
            let t = grw_tail(beta, k).unwrap();
            assert!(t < prev);
            prev = t;
        }
        assert!(grw_tail(2.0, 1.0).unwrap() < grw_tail(1.0, 1.0).unwrap());
    }

    #[test]
    fn scaling_map_round_trips() {
        let p = derive_params(180, 100, SourceDistribution::bernoulli(0.5).unwrap()).unwrap();
        let (gp, l) = map_scalings(&p, 9);
        assert!((gp.beta - std::f64::consts::SQRT_2).abs() < 1e-15);
        assert!((l - 1.0).abs() < 1e-15);
        assert!((gp.k - std::f64::consts::SQRT_2).abs() < 1e-14);
        // Exponent consistency: 2βK = 2Lγμ/σ² = L·d₀, the decay exponent
        // the dominant pole produces through (N+1)·ln Z₀ ≈ L·d₀.
        assert!((2.0 * gp.beta * gp.k - l * p.d0).abs() < 1e-12);
        // Round trip L ↔ K.
        let l_back = gp.k * p.dist.sigma2().sqrt() / p.dist.mu().sqrt();
        assert!((l_back - l).abs() < 1e-12);
    }
}
