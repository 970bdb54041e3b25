//! Seeded multivariate normal simulation and the bidirected-cycle scaling
//! experiment.
//!
//! Random numbers come from ChaCha8 (`rand_chacha::ChaCha8Rng`). Uniforms
//! are `rng.random::<f64>()`, i.e. 53 random mantissa bits in `[0, 1)`.
//! Standard normals use the Marsaglia polar method, consuming uniform pairs
//! until one lands strictly inside the unit disc and emitting both normals of
//! the accepted pair in order. In the experiment the generator for replicate
//! `r` at dimension `p` is seeded with the master seed and switched to stream
//! `(p << 32) | r`, so any single cell can be rerun on its own.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{self, FitConfig};
use crate::fixtures::bidirected_cycle;
use crate::linalg;
use crate::param::CovarianceMatrix;
use crate::stats;

/// The covariance of a chordless bidirected cycle: unit variances and `rho`
/// between cyclic neighbors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleSpec {
    p: usize,
    rho: f64,
}

impl CycleSpec {
    pub fn new(p: usize, rho: f64) -> Result<Self> {
        if p < 3 {
            return Err(Error::InvalidConfig(format!("a cycle needs at least 3 vertices, got {p}")));
        }
        if !rho.is_finite() {
            return Err(Error::InvalidConfig(format!("rho must be finite, got {rho}")));
        }
        Ok(CycleSpec { p, rho })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
}

pub fn cycle_covariance(spec: CycleSpec) -> Result<CovarianceMatrix> {
    let p = spec.p;
    let mut m = DMatrix::identity(p, p);
    for i in 0..p {
        let j = (i + 1) % p;
        m[(i, j)] = spec.rho;
        m[(j, i)] = spec.rho;
    }
    linalg::cholesky(&m, "cycle covariance")?;
    CovarianceMatrix::new(m)
}

/// Standard normal deviates by the polar method.
#[derive(Debug, Clone)]
pub struct PolarNormal<R> {
    rng: R,
    spare: Option<f64>,
}

impl<R: Rng> PolarNormal<R> {
    pub fn new(rng: R) -> Self {
        PolarNormal { rng, spare: None }
    }

    pub fn sample(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.rng.random::<f64>() - 1.0;
            let v = 2.0 * self.rng.random::<f64>() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * f);
                return u * f;
            }
        }
    }
}

fn sample_with(sigma: &DMatrix<f64>, n: usize, rng: ChaCha8Rng) -> Result<DMatrix<f64>> {
    let l = linalg::cholesky(sigma, "sigma")?.l();
    let p = sigma.nrows();
    let mut normals = PolarNormal::new(rng);
    // column-major fill: observation by observation
    let z = DMatrix::from_fn(p, n, |_, _| 0.0);
    let z = z.map(|_| normals.sample());
    Ok(l * z)
}

/// `n` draws from `N(0, sigma)`, one column per observation.
pub fn sample_mvn(sigma: &DMatrix<f64>, n: usize, seed: u64) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::SampleTooSmall { n, p: sigma.nrows() });
    }
    sample_with(sigma, n, ChaCha8Rng::seed_from_u64(seed))
}

/// Generator for one cell of the scaling experiment.
pub fn replicate_rng(seed: u64, p: usize, replicate: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((p as u64) << 32) | replicate as u64);
    rng
}

/// CPU time consumed so far by the calling thread, in seconds.
pub fn thread_cpu_seconds() -> f64 {
    let mut ts = libc::timespec { tv_sec: 0, tv_nsec: 0 };
    // SAFETY: `ts` is a valid, writable timespec.
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_THREAD_CPUTIME_ID, &mut ts) };
    if rc != 0 {
        return 0.0;
    }
    ts.tv_sec as f64 + ts.tv_nsec as f64 * 1e-9
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateRecord {
    pub p: usize,
    pub replicate: usize,
    /// Full ICF cycles; zero when the fit failed outright.
    pub iterations: usize,
    pub converged: bool,
    pub cpu_seconds: f64,
    pub deviance: f64,
    /// Largest drop of the log-likelihood between consecutive cycles.
    pub max_log_likelihood_decrease: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PSummary {
    pub p: usize,
    pub replicates: usize,
    pub mean_iterations: f64,
    pub min_iterations: usize,
    pub max_iterations: usize,
    pub mean_cpu_seconds: f64,
    /// Fits that errored or hit the cycle budget.
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub records: Vec<ReplicateRecord>,
    pub summaries: Vec<PSummary>,
}

impl ExperimentReport {
    pub fn failures(&self) -> usize {
        self.summaries.iter().map(|s| s.failures).sum()
    }

    pub fn iteration_counts(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.iterations).collect()
    }
}

fn run_replicate(p: usize, replicate: usize, sigma: &DMatrix<f64>, seed: u64, config: &FitConfig) -> ReplicateRecord {
    let g = bidirected_cycle(p);
    let start = thread_cpu_seconds();
    let outcome = sample_with(sigma, p + 30, replicate_rng(seed, p, replicate))
        .and_then(|y| stats::empirical_covariance(&y, true))
        .and_then(|s| fit::fit(&g, &s, config));
    let cpu_seconds = thread_cpu_seconds() - start;
    match outcome {
        Ok(res) => ReplicateRecord {
            p,
            replicate,
            iterations: res.iterations,
            converged: res.converged,
            cpu_seconds,
            deviance: res.deviance,
            max_log_likelihood_decrease: res.max_log_likelihood_decrease(),
            error: None,
        },
        Err(e) => ReplicateRecord {
            p,
            replicate,
            iterations: 0,
            converged: false,
            cpu_seconds,
            deviance: f64::NAN,
            max_log_likelihood_decrease: 0.0,
            error: Some(e.to_string()),
        },
    }
}

fn summarize(p: usize, records: &[ReplicateRecord]) -> PSummary {
    let k = records.len();
    let its: Vec<usize> = records.iter().map(|r| r.iterations).collect();
    PSummary {
        p,
        replicates: k,
        mean_iterations: its.iter().sum::<usize>() as f64 / k as f64,
        min_iterations: its.iter().copied().min().unwrap_or(0),
        max_iterations: its.iter().copied().max().unwrap_or(0),
        mean_cpu_seconds: records.iter().map(|r| r.cpu_seconds).sum::<f64>() / k as f64,
        failures: records.iter().filter(|r| !r.converged).count(),
    }
}

/// For each `p`, fits the bidirected-cycle model to `replicates` samples of
/// size `p + 30` drawn from the cycle covariance with correlation `rho`.
/// Replicates run in parallel; records come back in `(p, replicate)` order.
pub fn run_scaling_experiment(
    p_values: &[usize],
    replicates: usize,
    rho: f64,
    seed: u64,
    config: &FitConfig,
) -> Result<ExperimentReport> {
    config.validate()?;
    let mut records = Vec::with_capacity(p_values.len() * replicates);
    let mut summaries = Vec::new();
    if replicates == 0 {
        return Ok(ExperimentReport { records, summaries });
    }
    for &p in p_values {
        let sigma = cycle_covariance(CycleSpec::new(p, rho)?)?.into_inner();
        let cell: Vec<ReplicateRecord> =
            (0..replicates).into_par_iter().map(|r| run_replicate(p, r, &sigma, seed, config)).collect();
        summaries.push(summarize(p, &cell));
        records.extend(cell);
    }
    Ok(ExperimentReport { records, summaries })
}
