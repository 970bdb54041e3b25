//! The `(Λ, B, Ω)` parameterization of a Gaussian ancestral graph model.
//!
//! `Λ` is the concentration matrix of the undirected part `un_G`, `Ω` the
//! residual covariance of `V \ un_G`, and `B` holds one regression
//! coefficient per directed edge (`β_ij` for `j -> i`). Together they define
//!
//! ```text
//! Σ = (I - B)^-1 blockdiag(Λ^-1, Ω) (I - B)^-T
//! ```

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{AncestralGraph, Link};
use crate::linalg::{self, SubsetIndex};

const SYMMETRY_TOL: f64 = 1e-12;

/// A symmetric positive-definite `V x V` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix(DMatrix<f64>);

impl CovarianceMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        let scale = m.diagonal().iter().fold(1.0_f64, |a, &d| a.max(d.abs()));
        if !linalg::is_symmetric(&m, SYMMETRY_TOL * scale) {
            return Err(Error::NotPositiveDefinite("covariance is not symmetric"));
        }
        linalg::cholesky(&m, "covariance")?;
        Ok(CovarianceMatrix(m))
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }
}

/// Residuals `ε = (I - B) Y`, one row per variable.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualMatrix(DMatrix<f64>);

impl ResidualMatrix {
    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    un: SubsetIndex,
    not_un: SubsetIndex,
    /// `un_G x un_G`
    pub(crate) lambda: DMatrix<f64>,
    /// `(V \ un_G) x (V \ un_G)`
    pub(crate) omega: DMatrix<f64>,
    /// `V x V`, `beta[(i, j)]` is the coefficient of `Y_j` for `Y_i`.
    pub(crate) beta: DMatrix<f64>,
}

impl ParamSet {
    /// Checks the sparsity patterns against `g` and positive definiteness of
    /// `lambda` and `omega`.
    pub fn new(g: &AncestralGraph, lambda: DMatrix<f64>, omega: DMatrix<f64>, beta: DMatrix<f64>) -> Result<Self> {
        let params = Self::new_unchecked(g, lambda, omega, beta)?;
        params.check_pattern(g)?;
        if !params.lambda.is_empty() {
            linalg::cholesky(&params.lambda, "lambda")?;
        }
        if !params.omega.is_empty() {
            linalg::cholesky(&params.omega, "omega")?;
        }
        Ok(params)
    }

    /// Only dimensions are checked.
    pub(crate) fn new_unchecked(
        g: &AncestralGraph,
        lambda: DMatrix<f64>,
        omega: DMatrix<f64>,
        beta: DMatrix<f64>,
    ) -> Result<Self> {
        let p = g.p();
        let un = SubsetIndex::new(p, g.un());
        let not_un = SubsetIndex::new(p, g.not_un());
        for (m, n) in [(&lambda, un.len()), (&omega, not_un.len()), (&beta, p)] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch { expected: n, found: m.nrows().max(m.ncols()) });
            }
        }
        Ok(ParamSet { un, not_un, lambda, omega, beta })
    }

    /// `Λ = I`, `Ω = I`, `B = 0`.
    pub fn identity(g: &AncestralGraph) -> Self {
        let (u, d) = (g.un().len(), g.not_un().len());
        Self::new_unchecked(g, DMatrix::identity(u, u), DMatrix::identity(d, d), DMatrix::zeros(g.p(), g.p()))
            .expect("dimensions agree")
    }

    fn check_pattern(&self, g: &AncestralGraph) -> Result<()> {
        for (m, idx, want, name) in
            [(&self.lambda, &self.un, Link::Undirected, "lambda"), (&self.omega, &self.not_un, Link::Bidirected, "omega")]
        {
            if !linalg::is_symmetric(m, SYMMETRY_TOL) {
                return Err(Error::NotPositiveDefinite(name));
            }
            for a in 0..idx.len() {
                for b in 0..idx.len() {
                    if a != b && m[(a, b)] != 0.0 && g.link(idx.full(a), idx.full(b)) != want {
                        return Err(Error::SparsityViolated(name));
                    }
                }
            }
        }
        for i in 0..g.p() {
            for j in 0..g.p() {
                if self.beta[(i, j)] != 0.0 && g.link(i, j) != Link::In {
                    return Err(Error::SparsityViolated("beta"));
                }
            }
        }
        Ok(())
    }

    pub fn lambda(&self) -> &DMatrix<f64> {
        &self.lambda
    }

    pub fn omega(&self) -> &DMatrix<f64> {
        &self.omega
    }

    pub fn beta(&self) -> &DMatrix<f64> {
        &self.beta
    }

    pub fn un_index(&self) -> &SubsetIndex {
        &self.un
    }

    pub fn not_un_index(&self) -> &SubsetIndex {
        &self.not_un
    }

    pub fn p(&self) -> usize {
        self.beta.nrows()
    }

    /// `Ω` embedded into a `V x V` matrix, zero on `un_G`.
    pub fn omega_full(&self) -> DMatrix<f64> {
        self.not_un.scatter(&self.omega)
    }

    /// `Λ` embedded into a `V x V` matrix, zero outside `un_G`.
    pub fn lambda_full(&self) -> DMatrix<f64> {
        self.un.scatter(&self.lambda)
    }

    /// `I - B`.
    pub fn i_minus_beta(&self) -> DMatrix<f64> {
        DMatrix::identity(self.p(), self.p()) - &self.beta
    }

    /// Recovers `(Λ, B, Ω)` from a covariance in the model: `Λ` inverts the
    /// `un_G` block, each row of `B` regresses a vertex on its parents, and
    /// `Ω` is the residual covariance restricted to the bidirected pattern.
    pub fn from_sigma(g: &AncestralGraph, sigma: &DMatrix<f64>) -> Result<Self> {
        let p = g.p();
        if sigma.nrows() != p || sigma.ncols() != p {
            return Err(Error::DimensionMismatch { expected: p, found: sigma.nrows() });
        }
        let un = SubsetIndex::new(p, g.un());
        let not_un = SubsetIndex::new(p, g.not_un());
        let mut lambda = linalg::spd_inverse(&un.gather(sigma), "sigma block on un_G")?;
        for x in 0..un.len() {
            for y in 0..un.len() {
                if x != y && g.link(un.full(x), un.full(y)) != Link::Undirected {
                    lambda[(x, y)] = 0.0;
                }
            }
        }
        let mut beta = DMatrix::zeros(p, p);
        for i in 0..p {
            let pa = g.parents(i);
            if pa.is_empty() {
                continue;
            }
            let pa_idx = SubsetIndex::new(p, pa.to_vec());
            let cross = nalgebra::DVector::from_fn(pa.len(), |a, _| sigma[(pa[a], i)]);
            let coef = linalg::solve_spd(&pa_idx.gather(sigma), &cross, "parent covariance")?;
            for (a, &j) in pa.iter().enumerate() {
                beta[(i, j)] = coef[a];
            }
        }
        let a = DMatrix::identity(p, p) - &beta;
        let resid = &a * sigma * a.transpose();
        let mut omega = not_un.gather(&resid);
        for x in 0..not_un.len() {
            for y in 0..not_un.len() {
                if x != y && g.link(not_un.full(x), not_un.full(y)) != Link::Bidirected {
                    omega[(x, y)] = 0.0;
                }
            }
        }
        let omega = linalg::symmetrize(&omega);
        ParamSet::new(g, lambda, omega, beta)
    }

    /// `ω_{ii.-i}`: the variance of `ε_i` given the other residuals of
    /// `V \ un_G`.
    pub fn conditional_variance(&self, i: usize) -> Result<f64> {
        let pos = self.not_un.pos(i).ok_or(Error::UnknownVertex(i))?;
        let rest = self.not_un.without(i);
        let full = self.omega_full();
        let o_rest = rest.gather(&full);
        let cross = nalgebra::DVector::from_fn(rest.len(), |a, _| full[(rest.full(a), i)]);
        let solved = solve_or_singular(&o_rest, &cross)?;
        Ok(self.omega[(pos, pos)] - cross.dot(&solved))
    }
}

fn solve_or_singular(m: &DMatrix<f64>, b: &nalgebra::DVector<f64>) -> Result<nalgebra::DVector<f64>> {
    linalg::solve_spd(m, b, "omega_{-i,-i}").map_err(|_| Error::SingularMatrix("omega_{-i,-i}"))
}

/// `Ψ = blockdiag(Λ^-1, Ω)` as a `V x V` matrix.
pub fn psi(params: &ParamSet) -> Result<DMatrix<f64>> {
    let lambda_inv = linalg::spd_inverse(&params.lambda, "lambda")?;
    if !params.omega.is_empty() {
        linalg::cholesky(&params.omega, "omega")?;
    }
    Ok(params.un.scatter(&lambda_inv) + params.omega_full())
}

/// `Σ` from the parameters.
pub fn build_sigma(params: &ParamSet) -> Result<CovarianceMatrix> {
    let psi = psi(params)?;
    let a = params.i_minus_beta();
    let a_inv = a.lu().try_inverse().ok_or(Error::SingularMatrix("I - B"))?;
    let sigma = linalg::symmetrize(&(&a_inv * psi * a_inv.transpose()));
    CovarianceMatrix::new(sigma)
}

/// `ε = (I - B) Y` for data with one row per variable.
pub fn residuals(y: &DMatrix<f64>, beta: &DMatrix<f64>) -> Result<ResidualMatrix> {
    if beta.nrows() != y.nrows() || beta.ncols() != y.nrows() {
        return Err(Error::DimensionMismatch { expected: y.nrows(), found: beta.nrows() });
    }
    Ok(ResidualMatrix(y - beta * y))
}

/// Weights `[(Ω_{-i,-i})^-1]_{sp(i), .}` turning the residuals of
/// `V \ (un_G ∪ {i})` into the pseudo-variables `Z_sp(i)`.
///
/// Returns the index of `V \ (un_G ∪ {i})` and a `|sp(i)| x |V \ (un_G ∪ {i})|`
/// matrix.
pub fn pseudo_variable_weights(
    g: &AncestralGraph,
    params: &ParamSet,
    i: usize,
) -> Result<(SubsetIndex, DMatrix<f64>)> {
    if !params.not_un.contains(i) {
        return Err(Error::UnknownVertex(i));
    }
    let rest = params.not_un.without(i);
    let sp = g.spouses(i);
    if sp.is_empty() {
        return Ok((rest, DMatrix::zeros(0, 0)));
    }
    let o_rest = rest.gather(&params.omega_full());
    let chol = linalg::cholesky(&o_rest, "omega_{-i,-i}").map_err(|_| Error::SingularMatrix("omega_{-i,-i}"))?;
    let sp_pos = rest.positions_of(sp).expect("spouses lie outside un_G");
    let mut unit = DMatrix::zeros(rest.len(), sp.len());
    for (c, &k) in sp_pos.iter().enumerate() {
        unit[(k, c)] = 1.0;
    }
    let cols = chol.solve(&unit);
    Ok((rest, cols.transpose()))
}

/// Pseudo-variables `Z_sp(i)`, one row per spouse of `i` in ascending order.
pub fn pseudo_variables(
    g: &AncestralGraph,
    params: &ParamSet,
    eps: &ResidualMatrix,
    i: usize,
) -> Result<DMatrix<f64>> {
    let (rest, weights) = pseudo_variable_weights(g, params, i)?;
    let n = eps.0.ncols();
    if eps.0.nrows() != params.p() {
        return Err(Error::DimensionMismatch { expected: params.p(), found: eps.0.nrows() });
    }
    if weights.nrows() == 0 {
        return Ok(DMatrix::zeros(0, n));
    }
    Ok(weights * rest.gather_rows(&eps.0))
}
