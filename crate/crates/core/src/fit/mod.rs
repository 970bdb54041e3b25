//! Maximum likelihood fitting: IPF for `Λ`, then ICF for `(B, Ω)`.
//!
//! The likelihood factorizes into the marginal of `un_G` (depending on `Λ`
//! only) and the conditional of the rest (depending on `(B, Ω)` only), so
//! `Λ̂` is fitted once and then held fixed while ICF cycles.
//!
//! ICF is an iterative partial maximization. Each full cycle cannot decrease
//! the likelihood, but the limit may be a local maximum or saddle point;
//! [`FitConfig::restarts`] adds randomized starts and keeps the best.

pub mod icf;
pub mod ipf;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{AncestralGraph, EdgeKind, Link};
use crate::linalg::{self, SubsetIndex};
use crate::mseparation;
use crate::param::{self, CovarianceMatrix, ParamSet};
use crate::stats::{self, SampleStats};

pub use icf::{icf_step, IcfState, IcfUpdate};
pub use ipf::{fit_undirected_ipf, maximal_cliques};

pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_MAX_CYCLES: usize = 5000;

/// How `Λ` is obtained before the ICF cycles.
#[derive(Debug, Clone, PartialEq)]
pub enum LambdaMode {
    /// Iterative proportional fitting on the undirected part.
    Ipf,
    /// A caller-supplied feasible `Λ₀`.
    Fixed(DMatrix<f64>),
    Identity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    /// Stop once no entry of `Σ̂` moves by this much over a full cycle.
    pub tolerance: f64,
    pub max_cycles: usize,
    pub lambda_mode: LambdaMode,
    /// Extra randomized starting points; the fit with the highest likelihood
    /// is returned.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            tolerance: DEFAULT_TOLERANCE,
            max_cycles: DEFAULT_MAX_CYCLES,
            lambda_mode: LambdaMode::Ipf,
            restarts: 0,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidConfig(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.max_cycles == 0 {
            return Err(Error::InvalidConfig("max_cycles must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub sigma_hat: CovarianceMatrix,
    pub params: ParamSet,
    pub log_likelihood: f64,
    pub deviance: f64,
    pub df: usize,
    /// Full ICF cycles through `V \ un_G`.
    pub iterations: usize,
    pub converged: bool,
    /// Log-likelihood at the start and after every cycle of the returned run.
    pub log_likelihood_trace: Vec<f64>,
}

impl FitResult {
    /// Concentration matrix of `un_G`.
    pub fn lambda_hat(&self) -> &DMatrix<f64> {
        self.params.lambda()
    }

    pub fn beta_hat(&self) -> &DMatrix<f64> {
        self.params.beta()
    }

    pub fn omega_hat(&self) -> &DMatrix<f64> {
        self.params.omega()
    }

    /// `Λ̂^-1`, the fitted covariance of `un_G`.
    pub fn lambda_covariance(&self) -> Result<DMatrix<f64>> {
        linalg::spd_inverse(self.params.lambda(), "lambda")
    }

    /// Largest drop of the log-likelihood between consecutive cycles (zero
    /// when the trace never decreases).
    pub fn max_log_likelihood_decrease(&self) -> f64 {
        self.log_likelihood_trace.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max)
    }

    pub fn p_value(&self) -> Option<f64> {
        stats::chi_square_pvalue(self.deviance, self.df).ok()
    }
}

fn check_inputs(g: &AncestralGraph, stats: &SampleStats) -> Result<()> {
    if stats.p() != g.p() {
        return Err(Error::DimensionMismatch { expected: g.p(), found: stats.p() });
    }
    Ok(())
}

fn fit_lambda(g: &AncestralGraph, stats: &SampleStats, config: &FitConfig) -> Result<DMatrix<f64>> {
    let un = SubsetIndex::new(g.p(), g.un());
    match &config.lambda_mode {
        LambdaMode::Identity => Ok(DMatrix::identity(un.len(), un.len())),
        LambdaMode::Fixed(l) => {
            // validated through the parameter set
            let probe = ParamSet::new(
                g,
                l.clone(),
                DMatrix::identity(g.p() - un.len(), g.p() - un.len()),
                DMatrix::zeros(g.p(), g.p()),
            )?;
            Ok(probe.lambda().clone())
        }
        LambdaMode::Ipf => {
            if un.is_empty() {
                return Ok(DMatrix::zeros(0, 0));
            }
            let g_un = g.induced_subgraph(un.members())?;
            ipf::fit_undirected_ipf(&g_un, &un.gather(stats.s()), config.tolerance, config.max_cycles)
        }
    }
}

/// Runs ICF cycles from `start` until `Σ̂` settles or the cycle budget runs
/// out.
pub fn run_icf(g: &AncestralGraph, stats: &SampleStats, start: ParamSet, config: &FitConfig) -> Result<FitResult> {
    let mut state = IcfState::new(g, stats, start)?;
    let mut trace = vec![state.log_likelihood()?];
    let mut converged = false;
    while state.cycles() < config.max_cycles {
        let change = state.cycle()?;
        trace.push(state.log_likelihood()?);
        if change < config.tolerance {
            converged = true;
            break;
        }
    }
    let iterations = state.cycles();
    let params = state.into_params();
    finish(g, stats, params, iterations, converged, trace)
}

fn finish(
    g: &AncestralGraph,
    stats: &SampleStats,
    params: ParamSet,
    iterations: usize,
    converged: bool,
    log_likelihood_trace: Vec<f64>,
) -> Result<FitResult> {
    let sigma_hat = param::build_sigma(&params)?;
    let log_likelihood = stats::log_likelihood(sigma_hat.as_matrix(), stats)?;
    let deviance = stats::deviance(sigma_hat.as_matrix(), stats)?;
    Ok(FitResult {
        sigma_hat,
        params,
        log_likelihood,
        deviance,
        df: stats::degrees_of_freedom(g),
        iterations,
        converged,
        log_likelihood_trace,
    })
}

/// Randomized feasible start: `B` entries on directed edges drawn from
/// `U(-1, 1)`, `Ω` with a scaled diagonal of `S` and random bidirected
/// covariances shrunk until positive definite.
pub fn random_start(
    g: &AncestralGraph,
    stats: &SampleStats,
    lambda: DMatrix<f64>,
    rng: &mut impl Rng,
) -> Result<ParamSet> {
    let p = g.p();
    let mut beta = DMatrix::zeros(p, p);
    for e in g.edges().iter().filter(|e| e.kind == EdgeKind::Directed) {
        beta[(e.b, e.a)] = rng.random_range(-1.0..1.0);
    }
    let not_un = SubsetIndex::new(p, g.not_un());
    let d = not_un.len();
    let diag: Vec<f64> = (0..d).map(|a| stats.s()[(not_un.full(a), not_un.full(a))] * rng.random_range(0.5..1.5)).collect();
    let mut off = DMatrix::zeros(d, d);
    for a in 0..d {
        for b in (a + 1)..d {
            if g.link(not_un.full(a), not_un.full(b)) == Link::Bidirected {
                let r = rng.random_range(-0.9..0.9) * (diag[a] * diag[b]).sqrt();
                off[(a, b)] = r;
                off[(b, a)] = r;
            }
        }
    }
    let diag = DMatrix::from_diagonal(&DVector::from_vec(diag));
    let mut shrink = 1.0;
    loop {
        let omega = &diag + &off * shrink;
        if linalg::cholesky(&omega, "omega").is_ok() {
            return ParamSet::new_unchecked(g, lambda, omega, beta);
        }
        shrink *= 0.5;
    }
}

/// Maximum likelihood fit of the Gaussian ancestral graph model of `g`.
///
/// `g` must be maximal. The result is not guaranteed to be the global
/// maximum.
pub fn fit(g: &AncestralGraph, stats: &SampleStats, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    check_inputs(g, stats)?;
    if let Some((i, j)) = mseparation::unseparable_pair(g) {
        return Err(Error::NotMaximal(i, j));
    }
    let lambda = fit_lambda(g, stats, config)?;
    let start = IcfState::default_start(g, stats, lambda.clone())?;
    let mut best = run_icf(g, stats, start, config)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for _ in 0..config.restarts {
        let start = random_start(g, stats, lambda.clone(), &mut rng)?;
        // a bad random start may hit a degenerate design; skip it
        if let Ok(candidate) = run_icf(g, stats, start, config) {
            if candidate.log_likelihood > best.log_likelihood {
                best = candidate;
            }
        }
    }
    Ok(best)
}

/// Closed-form fit for graphs without bidirected edges: one regression of
/// each vertex outside `un_G` on its parents.
pub fn fit_dag_closed_form(g: &AncestralGraph, stats: &SampleStats, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    check_inputs(g, stats)?;
    if g.edges().iter().any(|e| e.kind == EdgeKind::Bidirected) {
        return Err(Error::InvalidConfig("closed-form fit needs a graph without bidirected edges".into()));
    }
    let p = g.p();
    let s = stats.s();
    let lambda = fit_lambda(g, stats, config)?;
    let not_un = g.not_un();
    let mut beta = DMatrix::zeros(p, p);
    let mut omega = DMatrix::zeros(not_un.len(), not_un.len());
    for (a, &i) in not_un.iter().enumerate() {
        let pa = g.parents(i);
        let pa_idx = SubsetIndex::new(p, pa.to_vec());
        let s_pa = pa_idx.gather(s);
        let s_pa_i = DVector::from_iterator(pa.len(), pa.iter().map(|&j| s[(j, i)]));
        let coef = linalg::solve_spd(&s_pa, &s_pa_i, "parent covariance").map_err(|_| Error::SingularDesign(i))?;
        for (c, &j) in pa.iter().enumerate() {
            beta[(i, j)] = coef[c];
        }
        omega[(a, a)] = s[(i, i)] - s_pa_i.dot(&coef);
    }
    let params = ParamSet::new_unchecked(g, lambda, omega, beta)?;
    let sigma = param::build_sigma(&params)?;
    let ll = stats::log_likelihood(sigma.as_matrix(), stats)?;
    finish(g, stats, params, 1, true, vec![ll])
}
