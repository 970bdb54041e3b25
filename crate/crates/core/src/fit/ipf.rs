//! Iterative proportional fitting for the undirected part.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::AncestralGraph;
use crate::linalg::{self, SubsetIndex};

/// Maximal cliques by Bron-Kerbosch with pivoting, each sorted ascending.
pub fn maximal_cliques(g: &AncestralGraph, vertices: &[usize]) -> Vec<Vec<usize>> {
    fn expand(
        g: &AncestralGraph,
        r: &mut Vec<usize>,
        mut p: Vec<usize>,
        mut x: Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if p.is_empty() {
            if x.is_empty() {
                let mut clique = r.clone();
                clique.sort_unstable();
                out.push(clique);
            }
            return;
        }
        let pivot = *p
            .iter()
            .chain(&x)
            .max_by_key(|&&u| p.iter().filter(|&&v| g.adjacent(u, v)).count())
            .expect("p is nonempty");
        let candidates: Vec<usize> = p.iter().copied().filter(|&v| !g.adjacent(pivot, v)).collect();
        for v in candidates {
            r.push(v);
            let np = p.iter().copied().filter(|&w| g.adjacent(v, w)).collect();
            let nx = x.iter().copied().filter(|&w| g.adjacent(v, w)).collect();
            expand(g, r, np, nx, out);
            r.pop();
            p.retain(|&w| w != v);
            x.push(v);
        }
    }

    let mut out = Vec::new();
    expand(g, &mut Vec::new(), vertices.to_vec(), Vec::new(), &mut out);
    out.sort();
    out
}

/// Connected components of the undirected graph `g`, each ascending.
fn components(g: &AncestralGraph) -> Vec<Vec<usize>> {
    let p = g.p();
    let mut comp = vec![usize::MAX; p];
    let mut out = Vec::new();
    for start in 0..p {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut members = vec![start];
        comp[start] = id;
        let mut k = 0;
        while k < members.len() {
            let v = members[k];
            for &w in g.neighbors(v) {
                if comp[w] == usize::MAX {
                    comp[w] = id;
                    members.push(w);
                }
            }
            k += 1;
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

/// Fits the concentration matrix `Λ̂` of an undirected graph to the sample
/// covariance `s` by cycling through maximal cliques. Each step sets the
/// fitted clique marginal equal to the empirical one while keeping the
/// conditional distribution of the rest given the clique.
///
/// Stops once every fitted clique block is within `tolerance` of `s`.
pub fn fit_undirected_ipf(
    g: &AncestralGraph,
    s: &DMatrix<f64>,
    tolerance: f64,
    max_sweeps: usize,
) -> Result<DMatrix<f64>> {
    let p = g.p();
    if s.shape() != (p, p) {
        return Err(Error::DimensionMismatch { expected: p, found: s.nrows() });
    }
    if let Some(e) = g.edges().iter().find(|e| e.kind != crate::graph::EdgeKind::Undirected) {
        return Err(Error::InvalidConfig(format!("IPF needs an undirected graph, found {e}")));
    }
    linalg::cholesky(s, "undirected covariance block")?;

    let mut lambda = DMatrix::zeros(p, p);
    for comp in components(g) {
        let idx = SubsetIndex::new(p, comp.clone());
        let local = g.induced_subgraph(&comp)?;
        let s_local = idx.gather(s);
        let k = fit_component(&local, &s_local, tolerance, max_sweeps)?;
        for (a, &i) in comp.iter().enumerate() {
            for (b, &j) in comp.iter().enumerate() {
                lambda[(i, j)] = k[(a, b)];
            }
        }
    }
    Ok(lambda)
}

fn fit_component(g: &AncestralGraph, s: &DMatrix<f64>, tolerance: f64, max_sweeps: usize) -> Result<DMatrix<f64>> {
    let p = g.p();
    let all: Vec<usize> = (0..p).collect();
    let cliques = maximal_cliques(g, &all);
    if cliques.len() == 1 {
        return linalg::spd_inverse(s, "undirected covariance block");
    }

    let mut k = DMatrix::from_diagonal(&s.diagonal().map(|d| 1.0 / d));
    let clique_stats: Vec<(SubsetIndex, SubsetIndex, DMatrix<f64>)> = cliques
        .iter()
        .map(|c| {
            let idx = SubsetIndex::new(p, c.clone());
            let rest = SubsetIndex::new(p, all.iter().copied().filter(|v| !c.contains(v)).collect());
            let s_inv = linalg::spd_inverse(&idx.gather(s), "clique covariance")?;
            Ok((idx, rest, s_inv))
        })
        .collect::<Result<_>>()?;

    for _ in 0..max_sweeps {
        for (idx, rest, s_inv) in &clique_stats {
            // K_CC <- S_CC^-1 + K_CR K_RR^-1 K_RC
            let k_cr = DMatrix::from_fn(idx.len(), rest.len(), |a, b| k[(idx.full(a), rest.full(b))]);
            let k_rr = rest.gather(&k);
            let carry = if rest.is_empty() {
                DMatrix::zeros(idx.len(), idx.len())
            } else {
                let chol = linalg::cholesky(&k_rr, "concentration")?;
                &k_cr * chol.solve(&k_cr.transpose())
            };
            let block = linalg::symmetrize(&(s_inv + carry));
            for a in 0..idx.len() {
                for b in 0..idx.len() {
                    k[(idx.full(a), idx.full(b))] = block[(a, b)];
                }
            }
        }
        let sigma = linalg::spd_inverse(&k, "concentration")?;
        let worst = clique_stats
            .iter()
            .map(|(idx, _, _)| linalg::max_abs_diff(&idx.gather(&sigma), &idx.gather(s)))
            .fold(0.0, f64::max);
        if worst < tolerance {
            return Ok(k);
        }
    }
    Err(Error::MaxIterationsExceeded(max_sweeps))
}
