//! Exact stationary quantities for the batch-service queue: the aggregate
//! demand PMF, the stationary queue distribution by fixed-point iteration of
//! the Lindley recursion, exact tail probabilities, the product form of the
//! queue PGF over the interior roots, and the contour-integral identity for
//! `ln P(Q = 0)`.
//!
//! The Lindley iteration is the ground truth everything else is judged
//! against, so it runs entirely on compensated (Neumaier) arithmetic:
//! convolution cells, the reflection head, truncation scans, the
//! normalization total, and the step-delta are all compensated. Without
//! this, per-iteration rounding of order `1e-16` is amplified by the slow
//! mixing of near-critical instances into a floor around `1e-13`; with it,
//! the iteration settles to a genuine fixed point and cross-checks against
//! closed forms at the `1e-15` level.

use std::fmt;

use num_complex::Complex64;

use crate::distkit::SourceDistribution;
use crate::numerics::{circle_mean, NeumaierSum};
use crate::roots::{ratio_w, PoleSet};
use crate::scaling::SystemParams;

/// Mass below this threshold may be dropped beyond the truncation point of
/// the stationary PMF. Chosen two orders below the `1e-15`/`1e-16` gates the
/// distribution is later held to, so truncation never shows up in them.
const TRUNCATION_EPS: f64 = 1e-18;

/// The stationary queue-length distribution and its convergence
/// certificate.
#[derive(Debug, Clone)]
pub struct StationaryDistribution {
    /// `pmf[i] = P(Q = i)` for `i = 0..=truncation_t`, normalized.
    pub pmf: Vec<f64>,
    /// Largest retained queue length.
    pub truncation_t: usize,
    /// Upper bound on the stationary mass beyond `truncation_t`.
    pub tail_mass_bound: f64,
    /// Fixed-point sweeps performed.
    pub iterations: u64,
    /// Final L1 distance between consecutive sweeps.
    pub step_delta: f64,
}

impl StationaryDistribution {
    /// Mean queue length `Σ i·q_i`.
    pub fn mean(&self) -> f64 {
        let mut acc = NeumaierSum::new();
        for (i, &q) in self.pmf.iter().enumerate() {
            acc.add(i as f64 * q);
        }
        acc.total()
    }

    /// CSV dump with header `i,q_i,cumulative`; floats print as the shortest
    /// digit string that parses back to the same bits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,q_i,cumulative\n");
        let mut cum = NeumaierSum::new();
        for (i, &q) in self.pmf.iter().enumerate() {
            cum.add(q);
            out.push_str(&format!("{i},{q},{}\n", cum.total()));
        }
        out
    }
}

/// Failures of the exact-computation layer.
#[derive(Debug, Clone)]
pub enum ExactError {
    /// The aggregate PMF would exceed a million cells.
    TooLarge { n: u32, degree: usize, cells: u64 },
    /// The Lindley iteration hit its sweep cap without meeting the
    /// convergence or plateau criteria.
    NoConvergence { iterations: u64, step_delta: f64 },
    /// A tail was requested beyond the truncation point while the truncated
    /// mass bound is too large to answer `0` honestly.
    BeyondTruncation { requested: u64, truncation_t: usize, tail_mass_bound: f64 },
    /// The product form was evaluated at or beyond the dominant root.
    OutsideDomain { z: Complex64, z0: f64 },
    /// The contour quadrature failed to converge within the node cap.
    QuadratureStall { nodes: usize },
}

impl fmt::Display for ExactError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExactError::TooLarge { n, degree, cells } => {
                write!(f, "aggregate of {n} sources of degree {degree} needs {cells} cells (cap 1e6)")
            }
            ExactError::NoConvergence { iterations, step_delta } => {
                write!(f, "Lindley iteration stalled after {iterations} sweeps (delta {step_delta:e})")
            }
            ExactError::BeyondTruncation { requested, truncation_t, tail_mass_bound } => {
                write!(
                    f,
                    "tail at {requested} is beyond truncation {truncation_t} with mass bound {tail_mass_bound:e}"
                )
            }
            ExactError::OutsideDomain { z, z0 } => {
                write!(f, "PGF evaluated at {z} with |z| outside the disk of radius Z0 = {z0}")
            }
            ExactError::QuadratureStall { nodes } => {
                write!(f, "contour quadrature did not settle at {nodes} nodes")
            }
        }
    }
}

impl std::error::Error for ExactError {}

/// Convolution of two PMFs with one compensated accumulator per output
/// cell.
fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len() - 1);
    for m in 0..a.len() + b.len() - 1 {
        let lo = (m + 1).saturating_sub(b.len());
        let hi = (m + 1).min(a.len());
        let mut cell = NeumaierSum::new();
        for i in lo..hi {
            cell.add(a[i] * b[m - i]);
        }
        out.push(cell.total());
    }
    out
}

/// PMF of the total demand `A = X_1 + … + X_n` (i.i.d.), by binary
/// exponentiation of the convolution.
///
/// # Errors
///
/// [`ExactError::TooLarge`] when `n · degree(X) > 10^6`.
pub fn aggregate_pmf(dist: &SourceDistribution, n: u32) -> Result<Vec<f64>, ExactError> {
    let cells = u64::from(n) * dist.degree() as u64;
    if cells > 1_000_000 {
        return Err(ExactError::TooLarge { n, degree: dist.degree(), cells });
    }
    let mut result = vec![1.0f64];
    let mut base = dist.pmf().to_vec();
    let mut exp = n;
    while exp > 0 {
        if exp & 1 == 1 {
            result = convolve(&result, &base);
        }
        exp >>= 1;
        if exp > 0 {
            base = convolve(&base, &base);
        }
    }
    Ok(result)
}

/// Stationary distribution of `Q_{k+1} = max(Q_k + A_k − s, 0)` by
/// fixed-point iteration from `δ_0`, fully compensated.
///
/// Each sweep convolves with the aggregate PMF, folds the mass at or below
/// `s` into cell 0, truncates where the remaining tail is below `1e-18`,
/// renormalizes, and measures the L1 step. Iteration stops when the step
/// falls below `2e-16`, or after three consecutive sweeps in which a step
/// already below `1e-13` stopped shrinking (the rounding floor of a slowly
/// mixing chain), or at a million sweeps.
///
/// # Errors
///
/// * Propagates [`ExactError::TooLarge`] from the aggregate.
/// * [`ExactError::NoConvergence`] if the sweep cap is hit while the step is
///   still above `1e-13`.
pub fn stationary_lindley(p: &SystemParams) -> Result<StationaryDistribution, ExactError> {
    let kernel = aggregate_pmf(&p.dist, p.n)?;
    let s = p.s as usize;
    let mut q = vec![1.0f64];
    let mut prev_delta = f64::INFINITY;
    let mut plateau = 0u32;
    let cap = 1_000_000u64;

    for sweep in 1..=cap {
        let conv = convolve(&q, &kernel);

        // Reflect: everything at or below service capacity lands on 0.
        let head_end = s.min(conv.len() - 1);
        let mut head = NeumaierSum::new();
        for &v in &conv[..=head_end] {
            head.add(v);
        }
        let mut next = Vec::with_capacity(conv.len().saturating_sub(s).max(1));
        next.push(head.total());
        next.extend_from_slice(&conv[head_end + 1..]);

        // Truncate where the remaining tail mass drops below threshold.
        let mut suffix = NeumaierSum::new();
        let mut keep = next.len();
        for i in (1..next.len()).rev() {
            let with_cell = suffix.total() + next[i];
            if with_cell >= TRUNCATION_EPS {
                break;
            }
            suffix.add(next[i]);
            keep = i;
        }
        let tail_bound = suffix.total();
        next.truncate(keep);

        // Renormalize: the sub-stochastic drift from truncation must not
        // accumulate across sweeps.
        let mut total = NeumaierSum::new();
        for &v in &next {
            total.add(v);
        }
        let norm = total.total();
        for v in &mut next {
            *v /= norm;
        }

        let mut delta = NeumaierSum::new();
        for i in 0..next.len().max(q.len()) {
            let a = next.get(i).copied().unwrap_or(0.0);
            let b = q.get(i).copied().unwrap_or(0.0);
            delta.add((a - b).abs());
        }
        let d = delta.total();
        q = next;

        let converged = d < 2e-16;
        if d < 1e-13 && d >= prev_delta * 0.999 {
            plateau += 1;
        } else {
            plateau = 0;
        }
        prev_delta = d;

        if converged || plateau >= 3 {
            return Ok(StationaryDistribution {
                truncation_t: q.len() - 1,
                pmf: q,
                tail_mass_bound: tail_bound,
                iterations: sweep,
                step_delta: d,
            });
        }
        if sweep == cap {
            if d < 1e-13 {
                return Ok(StationaryDistribution {
                    truncation_t: q.len() - 1,
                    pmf: q,
                    tail_mass_bound: tail_bound,
                    iterations: sweep,
                    step_delta: d,
                });
            }
            return Err(ExactError::NoConvergence { iterations: sweep, step_delta: d });
        }
    }
    unreachable!("loop returns at the cap")
}

/// Exact tail `P(Q > n) = 1 − Σ_{i≤n} q_i`, clamped to `[0, 1]`.
///
/// # Errors
///
/// [`ExactError::BeyondTruncation`] if `n` exceeds the truncation point and
/// the truncated mass bound is above `1e-15`; otherwise such tails are
/// answered as exactly 0.
pub fn tail_exact(q: &StationaryDistribution, n: u64) -> Result<f64, ExactError> {
    if n >= q.pmf.len() as u64 {
        return if q.tail_mass_bound <= 1e-15 {
            Ok(0.0)
        } else {
            Err(ExactError::BeyondTruncation {
                requested: n,
                truncation_t: q.truncation_t,
                tail_mass_bound: q.tail_mass_bound,
            })
        };
    }
    let mut prefix = NeumaierSum::new();
    for &v in &q.pmf[..=n as usize] {
        prefix.add(v);
    }
    Ok((1.0 - prefix.total()).clamp(0.0, 1.0))
}

/// The queue PGF in product form,
/// `Q(z) = (s − μ_A)(z − 1)/(z^s − A(z)) · Π_{j=1}^{s−1} (z − z_j)/(1 − z_j)`,
/// evaluated in log space so it works for `s` in the thousands.
///
/// `z` within `1e-6` of 1 returns exactly 1 (the removable singularity).
///
/// # Errors
///
/// [`ExactError::OutsideDomain`] when `|z| ≥ Z₀ − 1e-9`, where the PGF
/// diverges.
pub fn q_pgf_product(
    p: &SystemParams,
    poles: &PoleSet,
    z: Complex64,
) -> Result<Complex64, ExactError> {
    let one = Complex64::new(1.0, 0.0);
    if (z - one).norm() < 1e-6 {
        return Ok(one);
    }
    let z0 = poles.z0();
    if z.norm() >= z0 - 1e-9 {
        return Err(ExactError::OutsideDomain { z, z0 });
    }

    // ln(z^s − A(z)) by factoring out whichever exponential dominates, so
    // neither piece overflows and the cancellation happens inside expm1.
    let (x, _, _) = p.dist.pgf_derivs(z);
    let u = f64::from(p.s) * z.ln();
    let v = f64::from(p.n) * x.ln();
    let ln_den = if u.re >= v.re {
        u + (-crate::numerics::complex_expm1(v - u)).ln()
    } else {
        v + crate::numerics::complex_expm1(u - v).ln()
    };

    let mut sum_re = NeumaierSum::new();
    let mut sum_im = NeumaierSum::new();
    for zero in &poles.interior[1..] {
        let term = (z - zero.value).ln() - (one - zero.value).ln();
        sum_re.add(term.re);
        sum_im.add(term.im);
    }
    let ln_q = (f64::from(p.s) - p.mu_a).ln() + (z - one).ln() - ln_den
        + Complex64::new(sum_re.total(), sum_im.total());
    Ok(ln_q.exp())
}

/// `ln P(Q = 0)` from the contour identity: the mean over the circle
/// `|z| = radius` of `ln(1 − A(z)/z^s)/(z − 1)`, evaluated by the doubling
/// trapezoid rule (exponentially convergent for this analytic periodic
/// integrand).
///
/// The radius must lie strictly between 1 and `Z₀` with
/// `|A(z)/z^s| < 1` on the circle — the saddle radius always qualifies —
/// so the principal log never crosses its cut.
///
/// # Errors
///
/// [`ExactError::QuadratureStall`] if doublings exceed `2^20` nodes before
/// two successive levels agree to `1e-10`.
pub fn pollaczek_log_q0(p: &SystemParams, radius: f64) -> Result<f64, ExactError> {
    let start = 4096usize.max(64 * (f64::from(p.s).sqrt().ceil() as usize));
    let f = |z: Complex64| ratio_w(p, z).ln() / (z - Complex64::new(1.0, 0.0));
    match circle_mean(radius, start, 1e-10, 1 << 20, f) {
        Ok(v) => Ok(v.re),
        Err(nodes) => Err(ExactError::QuadratureStall { nodes }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distkit::SourceDistribution;
    use crate::roots::find_poles;
    use crate::scaling::derive_params;

    fn instance_f() -> SystemParams {
        derive_params(180, 100, SourceDistribution::bernoulli(0.5).unwrap()).unwrap()
    }

    fn instance_g() -> SystemParams {
        derive_params(2, 1, SourceDistribution::bernoulli(0.4).unwrap()).unwrap()
    }

    /// Reference values for the n=180, s=100, Bernoulli(1/2) instance from
    /// an independent high-precision implementation of the same recursion.
    const Q0_F: f64 = 0.934_139_821_053_062_1;
    const MEAN_F: f64 = 0.236_019_566_936_825_21;
    const TAILS_F: [(u64, f64); 4] = [
        (5, 1.303_911_980_037_009_1e-2),
        (10, 1.770_978_437_956_927_1e-3),
        (15, 1.899_142_901_609_085_5e-4),
        (20, 1.954_963_066_785_886_4e-5),
    ];

    #[test]
    fn aggregate_small_cases_are_exact() {
        let b = SourceDistribution::bernoulli(0.5).unwrap();
        // Dyadic masses convolve without rounding.
        assert_eq!(
            aggregate_pmf(&b, 4).unwrap(),
            vec![0.0625, 0.25, 0.375, 0.25, 0.0625]
        );
        let g = SourceDistribution::bernoulli(0.4).unwrap();
        let a = aggregate_pmf(&g, 2).unwrap();
        assert!((a[0] - 0.36).abs() < 1e-16);
        assert!((a[1] - 0.48).abs() < 1e-16);
        assert!((a[2] - 0.16).abs() < 1e-16);
    }

    #[test]
    fn aggregate_rejects_oversized_requests() {
        let pmf: Vec<f64> = vec![1.0 / 601.0; 601];
        let d = SourceDistribution::from_pmf(&pmf).unwrap();
        match aggregate_pmf(&d, 2000) {
            Err(ExactError::TooLarge { cells, .. }) => assert_eq!(cells, 1_200_000),
            other => panic!("expected TooLarge, got {other:?}"),
        }
    }

    #[test]
    fn two_source_instance_matches_geometric_closed_form() {
        // n=2 Bernoulli(0.4), s=1: birth–death chain with stationary law
        // q_i = (5/9)(4/9)^i.
        let q = stationary_lindley(&instance_g()).unwrap();
        assert!(q.step_delta < 1e-13);
        let r: f64 = 4.0 / 9.0;
        for (i, &v) in q.pmf.iter().enumerate() {
            let exact = (5.0 / 9.0) * r.powi(i as i32);
            assert!(
                (v - exact).abs() < 1e-12,
                "i={i}: {v} vs {exact} (diff {:e})",
                (v - exact).abs()
            );
        }
        // The compensated iteration does far better than the gate above.
        let worst = q
            .pmf
            .iter()
            .enumerate()
            .map(|(i, &v)| (v - (5.0 / 9.0) * r.powi(i as i32)).abs())
            .fold(0.0f64, f64::max);
        assert!(worst < 1e-14, "worst deviation {worst:e}");
    }

    #[test]
    fn many_sources_instance_matches_reference() {
        let q = stationary_lindley(&instance_f()).unwrap();
        assert!((q.pmf[0] - Q0_F).abs() < 1e-14, "q0 = {:.17}", q.pmf[0]);
        assert!((q.mean() - MEAN_F).abs() < 1e-13 * MEAN_F);
        for &(n, reference) in &TAILS_F {
            let t = tail_exact(&q, n).unwrap();
            // The absolute floor covers the 1 − Σ cancellation: a single
            // rounding grain (~2e-16) in the prefix sum is a visible
            // *relative* error once the tail is small.
            assert!(
                (t - reference).abs() < 1e-12 * reference + 5e-16,
                "tail({n}) = {t:e} vs {reference:e}"
            );
        }
        // Normalization held to compensated accuracy.
        let total: f64 = q.pmf.iter().sum();
        assert!((total - 1.0).abs() < 1e-13);
        assert!(q.tail_mass_bound < 1e-18);
    }

    #[test]
    fn tails_beyond_truncation_are_zero_when_bound_allows() {
        let q = stationary_lindley(&instance_g()).unwrap();
        assert_eq!(tail_exact(&q, 1_000_000).unwrap(), 0.0);

        // With a fat fake bound the same request must refuse instead.
        let mut fat = q.clone();
        fat.tail_mass_bound = 1e-6;
        match tail_exact(&fat, 1_000_000) {
            Err(ExactError::BeyondTruncation { requested, .. }) => {
                assert_eq!(requested, 1_000_000)
            }
            other => panic!("expected BeyondTruncation, got {other:?}"),
        }
    }

    #[test]
    fn product_form_agrees_with_iteration_and_series() {
        let p = instance_f();
        let poles = find_poles(&p, 0).unwrap();
        let q = stationary_lindley(&p).unwrap();

        // Q(0) = q_0.
        let q0 = q_pgf_product(&p, &poles, Complex64::new(0.0, 0.0)).unwrap();
        assert!((q0.re - q.pmf[0]).abs() < 1e-13);
        assert!(q0.im.abs() < 1e-13);

        // Q(z) = Σ q_i z^i at a real point inside the disk.
        let z = Complex64::new(0.8, 0.0);
        let qz = q_pgf_product(&p, &poles, z).unwrap();
        let mut series = NeumaierSum::new();
        let mut zp = 1.0f64;
        for &v in &q.pmf {
            series.add(v * zp);
            zp *= 0.8;
        }
        assert!((qz.re - series.total()).abs() < 1e-13 * series.total());

        // And at a genuinely complex point, against the same series.
        let z = Complex64::new(0.3, 0.55);
        let qz = q_pgf_product(&p, &poles, z).unwrap();
        let mut acc = Complex64::new(0.0, 0.0);
        let mut zp = Complex64::new(1.0, 0.0);
        for &v in &q.pmf {
            acc += v * zp;
            zp *= z;
        }
        assert!((qz - acc).norm() < 1e-12);
        // Conjugate symmetry of a real series.
        let qbar = q_pgf_product(&p, &poles, z.conj()).unwrap();
        assert!((qbar - qz.conj()).norm() < 1e-12);
    }

    #[test]
    fn product_form_domain_rules() {
        let p = instance_f();
        let poles = find_poles(&p, 0).unwrap();
        let one = q_pgf_product(&p, &poles, Complex64::new(1.0 + 1e-7, 0.0)).unwrap();
        assert_eq!(one, Complex64::new(1.0, 0.0));
        // Between 1 and Z0 the PGF exists and exceeds 1 (positive
        // coefficients).
        let v = q_pgf_product(&p, &poles, Complex64::new(1.3, 0.0)).unwrap();
        assert!(v.re > 1.0 && v.im.abs() < 1e-12);
        let z0 = poles.z0();
        assert!(matches!(
            q_pgf_product(&p, &poles, Complex64::new(z0 - 1e-12, 0.0)),
            Err(ExactError::OutsideDomain { .. })
        ));
    }

    #[test]
    fn contour_identity_for_log_q0() {
        // Independent reference for the n=180, s=100 instance; also cross-
        // checked against the iteration below.
        let p = instance_f();
        let poles = find_poles(&p, 0).unwrap();
        let lq0 = pollaczek_log_q0(&p, poles.saddle.value.re).unwrap();
        assert!((lq0 - (-0.068_129_150_615_813_9)).abs() < 1e-10);
        let q = stationary_lindley(&p).unwrap();
        assert!((lq0 - q.pmf[0].ln()).abs() < 1e-10);

        // Two-source instance: ln q_0 = ln(5/9) exactly.
        let g = instance_g();
        let lq0 = pollaczek_log_q0(&g, 1.5).unwrap();
        assert!((lq0 - (5.0f64 / 9.0).ln()).abs() < 1e-10);
    }

    #[test]
    fn csv_round_trips_and_accumulates() {
        let q = stationary_lindley(&instance_g()).unwrap();
        let csv = q.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("i,q_i,cumulative"));
        let mut last_cum = 0.0f64;
        for (i, line) in lines.enumerate() {
            let mut parts = line.split(',');
            assert_eq!(parts.next().unwrap().parse::<usize>().unwrap(), i);
            let qi: f64 = parts.next().unwrap().parse().unwrap();
            assert_eq!(qi, q.pmf[i], "shortest repr must round-trip bit-exactly");
            last_cum = parts.next().unwrap().parse().unwrap();
        }
        assert!((last_cum - 1.0).abs() < 1e-13);
    }
}
