//! Iterative conditional fitting of `(B, Ω)` with `Λ` held fixed.
//!
//! For each `i ∉ un_G` in turn, `Y_i` is regressed on its parents `Y_pa(i)`
//! and on the pseudo-variables `Z_sp(i)` built from the residuals of the
//! other vertices. The coefficients are the new `β_i,pa(i)` and
//! `ω_i,sp(i)`; the residual variance is `ω_{ii.-i}`, from which `ω_ii` is
//! recovered. All regressions are expressed through the sample covariance,
//! so raw data is never touched.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::AncestralGraph;
use crate::linalg;
use crate::param::{self, ParamSet};
use crate::stats::{self, SampleStats};

/// New values for the row of vertex `i` produced by one update.
#[derive(Debug, Clone, PartialEq)]
pub struct IcfUpdate {
    pub vertex: usize,
    /// `(j, β_ij)` for `j ∈ pa(i)`.
    pub beta: Vec<(usize, f64)>,
    /// `(k, ω_ik)` for `k ∈ sp(i)`.
    pub omega: Vec<(usize, f64)>,
    /// `ω_{ii.-i}`, the residual variance of the regression.
    pub conditional_variance: f64,
    pub omega_ii: f64,
}

impl IcfUpdate {
    pub fn apply(&self, params: &mut ParamSet) {
        let i = self.vertex;
        for &(j, b) in &self.beta {
            params.beta[(i, j)] = b;
        }
        let idx = params.not_un_index().clone();
        let pi = idx.pos(i).expect("updated vertex lies outside un_G");
        for &(k, w) in &self.omega {
            let pk = idx.pos(k).expect("spouse lies outside un_G");
            params.omega[(pi, pk)] = w;
            params.omega[(pk, pi)] = w;
        }
        params.omega[(pi, pi)] = self.omega_ii;
    }

    /// Largest absolute change this update makes to `params`.
    pub fn max_change(&self, params: &ParamSet) -> f64 {
        let i = self.vertex;
        let idx = params.not_un_index();
        let pi = idx.pos(i).expect("updated vertex lies outside un_G");
        let mut worst = (params.omega[(pi, pi)] - self.omega_ii).abs();
        for &(j, b) in &self.beta {
            worst = worst.max((params.beta[(i, j)] - b).abs());
        }
        for &(k, w) in &self.omega {
            let pk = idx.pos(k).expect("spouse lies outside un_G");
            worst = worst.max((params.omega[(pi, pk)] - w).abs());
        }
        worst
    }
}

/// One conditional fitting step for vertex `i ∉ un_G`.
///
/// Holds `Ω_{-i,-i}` and every other row of `B` fixed, forms the
/// pseudo-variables from the resulting residuals, and regresses `Y_i` on
/// `(Y_pa(i), Z_sp(i))` by least squares.
pub fn icf_step(g: &AncestralGraph, i: usize, params: &ParamSet, stats: &SampleStats) -> Result<IcfUpdate> {
    let p = g.p();
    if i >= p {
        return Err(Error::UnknownVertex(i));
    }
    if g.in_un(i) {
        return Err(Error::InvalidConfig(format!("vertex {i} belongs to the undirected part")));
    }
    let s = stats.s();
    let pa = g.parents(i);
    let sp = g.spouses(i);
    let (rest, weights) = param::pseudo_variable_weights(g, params, i)?;

    // Each covariate is a linear combination of Y: parents are unit rows,
    // pseudo-variables are weights * (I - B)_{rest, .}.
    let k = pa.len() + sp.len();
    let mut design = DMatrix::zeros(k, p);
    for (a, &j) in pa.iter().enumerate() {
        design[(a, j)] = 1.0;
    }
    if !sp.is_empty() {
        let resid_rows = rest.gather_rows(&params.i_minus_beta());
        design.rows_mut(pa.len(), sp.len()).copy_from(&(&weights * resid_rows));
    }

    let (coef, conditional_variance) = if k == 0 {
        (DVector::zeros(0), s[(i, i)])
    } else {
        let ds = &design * s;
        let gram = linalg::symmetrize(&(&ds * design.transpose()));
        let cross = ds.column(i).into_owned();
        let chol = linalg::cholesky(&gram, "design").map_err(|_| Error::SingularDesign(i))?;
        let coef = chol.solve(&cross);
        (coef.clone(), s[(i, i)] - cross.dot(&coef))
    };
    if conditional_variance <= 0.0 || !conditional_variance.is_finite() {
        return Err(Error::SingularDesign(i));
    }

    let beta = pa.iter().enumerate().map(|(a, &j)| (j, coef[a])).collect();
    let omega: Vec<(usize, f64)> = sp.iter().enumerate().map(|(a, &kk)| (kk, coef[pa.len() + a])).collect();

    // ω_ii = ω_{ii.-i} + Ω_{i,-i} (Ω_{-i,-i})^-1 Ω_{-i,i}; the rows of the
    // inverse needed here are exactly `weights`.
    let mut quad = 0.0;
    for (a, &(_, wa)) in omega.iter().enumerate() {
        for &(l, wl) in &omega {
            let pl = rest.pos(l).expect("spouse lies in V \\ (un_G ∪ {i})");
            quad += wa * weights[(a, pl)] * wl;
        }
    }

    Ok(IcfUpdate { vertex: i, beta, omega, conditional_variance, omega_ii: conditional_variance + quad })
}

/// Running ICF state: the current parameters and the covariance they imply.
#[derive(Debug, Clone)]
pub struct IcfState<'a> {
    g: &'a AncestralGraph,
    stats: &'a SampleStats,
    params: ParamSet,
    sigma: DMatrix<f64>,
    cycles: usize,
}

impl<'a> IcfState<'a> {
    pub fn new(g: &'a AncestralGraph, stats: &'a SampleStats, start: ParamSet) -> Result<Self> {
        let sigma = param::build_sigma(&start)?.into_inner();
        Ok(IcfState { g, stats, params: start, sigma, cycles: 0 })
    }

    /// `B = 0`, `Ω = diag(S)` on `V \ un_G`, and the given `Λ`.
    pub fn default_start(g: &AncestralGraph, stats: &SampleStats, lambda: DMatrix<f64>) -> Result<ParamSet> {
        let not_un = g.not_un();
        let omega = DMatrix::from_diagonal(&DVector::from_iterator(
            not_un.len(),
            not_un.iter().map(|&i| stats.s()[(i, i)]),
        ));
        ParamSet::new_unchecked(g, lambda, omega, DMatrix::zeros(g.p(), g.p()))
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn cycles(&self) -> usize {
        self.cycles
    }

    pub fn log_likelihood(&self) -> Result<f64> {
        stats::log_likelihood(&self.sigma, self.stats)
    }

    /// Updates vertex `i` in place.
    pub fn step(&mut self, i: usize) -> Result<IcfUpdate> {
        let update = icf_step(self.g, i, &self.params, self.stats)?;
        update.apply(&mut self.params);
        Ok(update)
    }

    /// One full cycle over `V \ un_G` in ascending order. Returns the largest
    /// absolute change of any entry of `Σ̂`.
    pub fn cycle(&mut self) -> Result<f64> {
        for i in self.g.not_un() {
            self.step(i)?;
        }
        let sigma = param::build_sigma(&self.params)?.into_inner();
        let change = linalg::max_abs_diff(&sigma, &self.sigma);
        self.sigma = sigma;
        self.cycles += 1;
        Ok(change)
    }

    pub fn into_params(self) -> ParamSet {
        self.params
    }
}
