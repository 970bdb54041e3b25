//! Dense helpers shared by the numeric modules: Cholesky-backed solves,
//! log-determinants, and index bookkeeping for submatrices.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

pub(crate) fn cholesky(m: &DMatrix<f64>, what: &'static str) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(m.clone()).ok_or(Error::NotPositiveDefinite(what))
}

/// `log|M|` of a symmetric positive-definite matrix from its triangular
/// factor.
pub fn log_det_spd(m: &DMatrix<f64>, what: &'static str) -> Result<f64> {
    let chol = cholesky(m, what)?;
    Ok(2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

pub fn spd_inverse(m: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    if m.nrows() == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let inv = cholesky(m, what)?.inverse();
    Ok(symmetrize(&inv))
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    m.is_square() && (0..m.nrows()).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= tol))
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// A subset of `0..p` together with the translation between full indices and
/// compacted positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetIndex {
    members: Vec<usize>,
    position: Vec<Option<usize>>,
}

impl SubsetIndex {
    /// `members` must be distinct and below `p`.
    pub fn new(p: usize, members: Vec<usize>) -> Self {
        let mut position = vec![None; p];
        for (k, &v) in members.iter().enumerate() {
            debug_assert!(position[v].is_none(), "repeated member {v}");
            position[v] = Some(k);
        }
        SubsetIndex { members, position }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Size of the full index universe.
    pub fn universe(&self) -> usize {
        self.position.len()
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn contains(&self, v: usize) -> bool {
        self.position.get(v).is_some_and(Option::is_some)
    }

    /// Compacted position of full index `v`.
    pub fn pos(&self, v: usize) -> Option<usize> {
        self.position.get(v).copied().flatten()
    }

    /// Full index of compacted position `k`.
    pub fn full(&self, k: usize) -> usize {
        self.members[k]
    }

    pub fn without(&self, v: usize) -> SubsetIndex {
        let members = self.members.iter().copied().filter(|&m| m != v).collect();
        SubsetIndex::new(self.universe(), members)
    }

    /// Rows and columns of a full `p x p` matrix restricted to this subset.
    pub fn gather(&self, full: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |a, b| full[(self.members[a], self.members[b])])
    }

    /// Rows of a full matrix restricted to this subset.
    pub fn gather_rows(&self, full: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(self.len(), full.ncols(), |a, c| full[(self.members[a], c)])
    }

    /// Compacted positions of `vs`, or `None` if one is not a member.
    pub fn positions_of(&self, vs: &[usize]) -> Option<Vec<usize>> {
        vs.iter().map(|&v| self.pos(v)).collect()
    }

    /// Embeds a compact matrix into a zero `p x p` matrix.
    pub fn scatter(&self, compact: &DMatrix<f64>) -> DMatrix<f64> {
        let p = self.universe();
        let mut full = DMatrix::zeros(p, p);
        for (a, &i) in self.members.iter().enumerate() {
            for (b, &j) in self.members.iter().enumerate() {
                full[(i, j)] = compact[(a, b)];
            }
        }
        full
    }
}

/// Solves `M x = b` for symmetric positive-definite `M`.
pub fn solve_spd(m: &DMatrix<f64>, b: &DVector<f64>, what: &'static str) -> Result<DVector<f64>> {
    if m.nrows() == 0 {
        return Ok(DVector::zeros(0));
    }
    Ok(cholesky(m, what)?.solve(b))
}
