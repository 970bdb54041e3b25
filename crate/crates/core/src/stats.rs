//! Sample covariance, the Gaussian log-likelihood, deviance, degrees of
//! freedom and chi-square tail probabilities.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::AncestralGraph;
use crate::linalg;

/// Empirical covariance `S` with the sample size it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStats {
    s: DMatrix<f64>,
    n: usize,
    mean_adjusted: bool,
}

impl SampleStats {
    /// Wraps a covariance (or correlation) matrix supplied directly. Only
    /// positive definiteness is checked; `n` is taken on trust.
    pub fn from_covariance(s: DMatrix<f64>, n: usize, mean_adjusted: bool) -> Result<Self> {
        if !s.is_square() {
            return Err(Error::DimensionMismatch { expected: s.nrows(), found: s.ncols() });
        }
        if n == 0 {
            return Err(Error::SampleTooSmall { n, p: s.nrows() });
        }
        let scale = s.diagonal().iter().fold(1.0_f64, |a, &d| a.max(d.abs()));
        if !linalg::is_symmetric(&s, 1e-12 * scale) {
            return Err(Error::NotPositiveDefinite("sample covariance is not symmetric"));
        }
        linalg::cholesky(&s, "sample covariance")?;
        Ok(SampleStats { s, n, mean_adjusted })
    }

    pub fn s(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.s.nrows()
    }

    pub fn mean_adjusted(&self) -> bool {
        self.mean_adjusted
    }

    /// Statistics of the variables `order`, in that order.
    pub fn select(&self, order: &[usize]) -> Result<SampleStats> {
        if let Some(&bad) = order.iter().find(|&&v| v >= self.p()) {
            return Err(Error::UnknownVertex(bad));
        }
        let s = DMatrix::from_fn(order.len(), order.len(), |a, b| self.s[(order[a], order[b])]);
        SampleStats::from_covariance(s, self.n, self.mean_adjusted)
    }
}

/// `S = Y Yᵀ / n` for data with one row per variable and one column per
/// observation; with `mean_adjusted` the row means are removed first.
pub fn empirical_covariance(y: &DMatrix<f64>, mean_adjusted: bool) -> Result<SampleStats> {
    let (p, n) = y.shape();
    let needed = if mean_adjusted { p + 1 } else { p };
    if n < needed {
        return Err(Error::SampleTooSmall { n, p });
    }
    let centered;
    let data = if mean_adjusted {
        let means = y.column_mean();
        centered = DMatrix::from_fn(p, n, |i, m| y[(i, m)] - means[i]);
        &centered
    } else {
        y
    };
    let s = linalg::symmetrize(&((data * data.transpose()) / n as f64));
    linalg::cholesky(&s, "sample covariance")?;
    Ok(SampleStats { s, n, mean_adjusted })
}

/// `tr(Σ^-1 S)` and `log|Σ|`.
fn trace_and_log_det(sigma: &DMatrix<f64>, s: &DMatrix<f64>) -> Result<(f64, f64)> {
    if sigma.shape() != s.shape() {
        return Err(Error::DimensionMismatch { expected: s.nrows(), found: sigma.nrows() });
    }
    let chol = linalg::cholesky(sigma, "sigma")?;
    let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let trace = chol.solve(s).trace();
    Ok((trace, log_det))
}

/// `ℓ(Σ) = -(n/2) log|Σ| - (n/2) tr(Σ^-1 S)`, dropping the additive constant.
pub fn log_likelihood(sigma: &DMatrix<f64>, stats: &SampleStats) -> Result<f64> {
    let (trace, log_det) = trace_and_log_det(sigma, &stats.s)?;
    let half_n = stats.n as f64 / 2.0;
    Ok(-half_n * log_det - half_n * trace)
}

/// `2ℓ(S) - 2ℓ(Σ̂) = n [tr(Σ̂^-1 S) - log|Σ̂^-1 S| - p]`.
pub fn deviance(sigma_hat: &DMatrix<f64>, stats: &SampleStats) -> Result<f64> {
    let (trace, log_det_sigma) = trace_and_log_det(sigma_hat, &stats.s)?;
    let log_det_s = linalg::log_det_spd(&stats.s, "sample covariance")?;
    Ok(stats.n as f64 * (trace - (log_det_s - log_det_sigma) - stats.p() as f64))
}

/// One free parameter per vertex and per edge, subtracted from the
/// `p(p+1)/2` of the saturated model.
pub fn degrees_of_freedom(g: &AncestralGraph) -> usize {
    let p = g.p();
    p * (p + 1) / 2 - p - g.edge_count()
}

/// Upper tail `P(χ²_df > dev)`.
pub fn chi_square_pvalue(dev: f64, df: usize) -> Result<f64> {
    if df == 0 {
        return Err(Error::InvalidDf(0));
    }
    if dev <= 0.0 {
        return Ok(1.0);
    }
    Ok(regularized_gamma_q(df as f64 / 2.0, dev / 2.0))
}

/// Lanczos approximation (g = 7, 9 terms).
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + 7.5;
    let mut sum = COEF[0];
    for (k, &c) in COEF.iter().enumerate().skip(1) {
        sum += c / (x + k as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + sum.ln()
}

const GAMMA_EPS: f64 = 1e-15;
const GAMMA_MAX_TERMS: usize = 10_000;

/// `Q(a, x) = Γ(a, x) / Γ(a)`: series below `x = a + 1`, continued fraction
/// above.
pub fn regularized_gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_continued_fraction(a, x)
    }
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..GAMMA_MAX_TERMS {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * GAMMA_EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_q_continued_fraction(a: f64, x: f64) -> f64 {
    // modified Lentz
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..GAMMA_MAX_TERMS {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < GAMMA_EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}
