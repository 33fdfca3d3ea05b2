//! Finite discrete per-source demand distributions and their generating
//! functions.
//!
//! A [`SourceDistribution`] is a validated probability mass function on
//! `0..=m` together with cached moments. It evaluates the probability
//! generating function `X(z) = Σ p_j z^j`, its first two derivatives, and the
//! principal-branch logarithms `ln X(z)` and `n·ln X(z)` needed everywhere
//! else in the crate. All downstream contour and root-finding work assumes
//! the *aperiodic* case (the gcd of support-point differences is 1), which
//! guarantees `|X(z)| < X(r)` on every circle `|z| = r` away from the
//! positive real axis; construction rejects anything else.
//!
//! Only finite-support distributions are representable. That keeps the radius
//! of convergence infinite and every evaluation entire, at the price of
//! excluding e.g. Poisson demand.

use std::fmt;

use num_complex::Complex64;
use serde::Deserialize;

/// Validation and evaluation errors for [`SourceDistribution`].
#[derive(Debug, Clone, PartialEq)]
pub enum DistError {
    /// A pmf entry was negative or not finite.
    NegativeMass { index: usize, value: f64 },
    /// The pmf summed to `total`, farther than `1e-9` from 1.
    NotNormalized { total: f64 },
    /// The distribution is a point mass; the scaling theory needs σ² > 0.
    ZeroVariance,
    /// Support-point differences share a common divisor `gcd > 1`; on such a
    /// lattice `|X(z)|` attains its maximum off the positive real axis and
    /// the contour machinery breaks down.
    LatticePeriodic { gcd: usize },
    /// `X(z)` landed on (or within `1e-14` of) the negative real axis, where
    /// the principal logarithm is ambiguous.
    BranchAmbiguity { x_re: f64, x_im: f64 },
}

impl fmt::Display for DistError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistError::NegativeMass { index, value } => {
                write!(f, "pmf entry {index} is {value}, not a finite probability")
            }
            DistError::NotNormalized { total } => {
                write!(f, "pmf sums to {total}, more than 1e-9 away from 1")
            }
            DistError::ZeroVariance => {
                write!(f, "distribution is a point mass (zero variance)")
            }
            DistError::LatticePeriodic { gcd } => {
                write!(f, "support lies on a lattice with span {gcd} (must be 1)")
            }
            DistError::BranchAmbiguity { x_re, x_im } => {
                write!(
                    f,
                    "X(z) = {x_re}+{x_im}i is on the negative real axis; \
                     principal log is ambiguous"
                )
            }
        }
    }
}

impl std::error::Error for DistError {}

/// Errors from parsing a JSON distribution file.
#[derive(Debug)]
pub enum DistFileError {
    /// The text was not valid JSON of the form `{"name": ..., "pmf": [...]}`.
    Malformed { detail: String },
    /// The JSON parsed but the pmf failed validation.
    Invalid(DistError),
}

impl fmt::Display for DistFileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistFileError::Malformed { detail } => {
                write!(f, "malformed distribution file: {detail}")
            }
            DistFileError::Invalid(e) => write!(f, "invalid distribution: {e}"),
        }
    }
}

impl std::error::Error for DistFileError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            DistFileError::Malformed { .. } => None,
            DistFileError::Invalid(e) => Some(e),
        }
    }
}

#[derive(Deserialize)]
struct DistFile {
    #[serde(default)]
    #[allow(dead_code)] // the name is documentation for humans, not used here
    name: String,
    pmf: Vec<f64>,
}

/// A validated finite demand distribution with cached moments.
///
/// Construction normalizes the pmf (after checking the raw sum is within
/// `1e-9` of 1), trims trailing zero entries, and precomputes the mean
/// `μ = X′(1)`, the variance `σ²`, and the span (gcd of support-point
/// differences, always 1 after validation).
#[derive(Debug, Clone, PartialEq)]
pub struct SourceDistribution {
    pmf: Vec<f64>,
    mu: f64,
    sigma2: f64,
    support_span: usize,
    /// Cached `X″(1)`, so evaluations at `z = 1` are exact.
    xpp_at_one: f64,
}

impl SourceDistribution {
    /// Validates and normalizes a pmf `[p_0, p_1, ..., p_m]`.
    ///
    /// # Errors
    ///
    /// * [`DistError::NegativeMass`] — an entry is negative, NaN, or infinite
    ///   (an empty slice reports index 0).
    /// * [`DistError::NotNormalized`] — `|Σ p_j − 1| > 1e-9`.
    /// * [`DistError::ZeroVariance`] — a point mass.
    /// * [`DistError::LatticePeriodic`] — support differences share a gcd > 1.
    pub fn from_pmf(probs: &[f64]) -> Result<Self, DistError> {
        if probs.is_empty() {
            return Err(DistError::NegativeMass { index: 0, value: f64::NAN });
        }
        for (index, &value) in probs.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(DistError::NegativeMass { index, value });
            }
        }
        let total = crate::numerics::neumaier_sum(probs.iter().copied());
        if (total - 1.0).abs() > 1e-9 {
            return Err(DistError::NotNormalized { total });
        }

        let mut pmf: Vec<f64> = probs.iter().map(|p| p / total).collect();
        while pmf.len() > 1 && *pmf.last().unwrap() == 0.0 {
            pmf.pop();
        }

        let mut mean = crate::numerics::NeumaierSum::new();
        let mut second = crate::numerics::NeumaierSum::new(); // Σ j(j-1) p_j = X″(1)
        for (j, &p) in pmf.iter().enumerate() {
            let jf = j as f64;
            mean.add(jf * p);
            second.add(jf * (jf - 1.0) * p);
        }
        let mu = mean.total();
        let xpp_at_one = second.total();
        let sigma2 = xpp_at_one + mu - mu * mu;
        if sigma2 <= 0.0 {
            return Err(DistError::ZeroVariance);
        }

        let support: Vec<usize> =
            pmf.iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(j, _)| j).collect();
        let mut gcd = 0usize;
        for pair in support.windows(2) {
            gcd = gcd_usize(gcd, pair[1] - pair[0]);
        }
        // A non-degenerate distribution has at least two support points, so
        // gcd is the span of the support lattice.
        if gcd != 1 {
            return Err(DistError::LatticePeriodic { gcd });
        }

        Ok(Self { pmf, mu, sigma2, support_span: gcd, xpp_at_one })
    }

    /// Bernoulli demand: `P(X=1) = p`, `P(X=0) = 1-p`.
    ///
    /// # Errors
    ///
    /// Propagates [`DistError::ZeroVariance`] for `p ∈ {0, 1}` and
    /// [`DistError::NegativeMass`] for `p` outside `[0, 1]`.
    pub fn bernoulli(p: f64) -> Result<Self, DistError> {
        Self::from_pmf(&[1.0 - p, p])
    }

    /// Parses the JSON distribution format `{"name": string, "pmf": [...]}`.
    ///
    /// # Errors
    ///
    /// [`DistFileError::Malformed`] for JSON/shape problems,
    /// [`DistFileError::Invalid`] if the pmf fails [`Self::from_pmf`].
    pub fn from_json_str(text: &str) -> Result<Self, DistFileError> {
        let file: DistFile = serde_json::from_str(text)
            .map_err(|e| DistFileError::Malformed { detail: e.to_string() })?;
        Self::from_pmf(&file.pmf).map_err(DistFileError::Invalid)
    }

    /// The normalized pmf, trailing zeros trimmed.
    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    /// Polynomial degree `m` of `X(z)` (largest support point).
    pub fn degree(&self) -> usize {
        self.pmf.len() - 1
    }

    /// Mean `μ = X′(1)`.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Variance `σ² = X″(1) + μ − μ²`.
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// gcd of support-point differences; always 1 for a validated instance.
    pub fn support_span(&self) -> usize {
        self.support_span
    }

    /// Evaluates `(X(z), X′(z), X″(z))` by a single Horner sweep.
    ///
    /// At `z = 1` the cached moments are returned, so the triple is exactly
    /// `(1, μ, X″(1))` there.
    pub fn pgf_derivs(&self, z: Complex64) -> (Complex64, Complex64, Complex64) {
        if z == Complex64::new(1.0, 0.0) {
            return (
                Complex64::new(1.0, 0.0),
                Complex64::new(self.mu, 0.0),
                Complex64::new(self.xpp_at_one, 0.0),
            );
        }
        let mut f = Complex64::new(0.0, 0.0);
        let mut fp = Complex64::new(0.0, 0.0);
        let mut fpp = Complex64::new(0.0, 0.0);
        for &c in self.pmf.iter().rev() {
            fpp = fpp * z + 2.0 * fp;
            fp = fp * z + f;
            f = f * z + c;
        }
        (f, fp, fpp)
    }

    /// Principal-branch `ln X(z)`.
    ///
    /// # Errors
    ///
    /// [`DistError::BranchAmbiguity`] when `X(z)` is zero or within `1e-14`
    /// of the negative real axis, where the principal branch is ill-defined.
    pub fn log_pgf(&self, z: Complex64) -> Result<Complex64, DistError> {
        let (x, _, _) = self.pgf_derivs(z);
        if x.norm() == 0.0 || (x.re < 0.0 && x.im.abs() <= 1e-14) {
            return Err(DistError::BranchAmbiguity { x_re: x.re, x_im: x.im });
        }
        Ok(x.ln())
    }

    /// `ln A(z) = n · ln X(z)` for the aggregate of `n` i.i.d. sources.
    ///
    /// Callers should exponentiate only *differences* such as
    /// `n ln X(z) − s ln z`; the raw value overflows `exp` for large `n`.
    ///
    /// # Errors
    ///
    /// Propagates [`DistError::BranchAmbiguity`] from [`Self::log_pgf`].
    pub fn log_aggregate(&self, n: u32, z: Complex64) -> Result<Complex64, DistError> {
        Ok(f64::from(n) * self.log_pgf(z)?)
    }
}

fn gcd_usize(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd_usize(b, a % b)
    }
}
