#![allow(dead_code)]

use agfit::graph::{AncestralGraph, Edge, EdgeKind, Link};
use agfit::param::ParamSet;
use agfit::stats::SampleStats;
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

/// Random ancestral graph: a random undirected part first, then a random
/// DAG over the rest in a random order, then bidirected edges between pairs
/// that are neither adjacent nor ancestrally related.
pub fn random_ancestral_graph(p: usize, density: f64, rng: &mut impl Rng) -> AncestralGraph {
    let mut order: Vec<usize> = (0..p).collect();
    order.shuffle(rng);
    let n_un = rng.random_range(0..=p);
    let mut edges = Vec::new();
    let mut adj = vec![vec![false; p]; p];
    for a in 0..p {
        for b in (a + 1)..p {
            if !rng.random_bool(density) {
                continue;
            }
            let (u, v) = (order[a], order[b]);
            let e = if b < n_un { Edge::undirected(u, v) } else { Edge::directed(u, v) };
            edges.push(e);
            adj[u][v] = true;
            adj[v][u] = true;
        }
    }
    let dag = AncestralGraph::new(p, edges.clone()).expect("ordered construction is ancestral");
    for a in n_un..p {
        for b in (a + 1)..p {
            let (u, v) = (order[a], order[b]);
            if adj[u][v] || dag.is_ancestor(u, v) || dag.is_ancestor(v, u) {
                continue;
            }
            if rng.random_bool(density) {
                edges.push(Edge::bidirected(u, v));
            }
        }
    }
    AncestralGraph::new(p, edges).expect("bidirected edges between unrelated vertices keep the graph ancestral")
}

pub fn random_maximal_graph(p: usize, density: f64, rng: &mut impl Rng) -> AncestralGraph {
    let g = random_ancestral_graph(p, density, rng);
    agfit::mseparation::maximal_completion(&g).expect("completion of a small graph")
}

pub fn random_dag(p: usize, density: f64, rng: &mut impl Rng) -> AncestralGraph {
    let mut order: Vec<usize> = (0..p).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for a in 0..p {
        for b in (a + 1)..p {
            if rng.random_bool(density) {
                edges.push(Edge::directed(order[a], order[b]));
            }
        }
    }
    AncestralGraph::new(p, edges).expect("ordered DAG")
}

/// Number of candidate edge assignments on `p` vertices: five states
/// (none, -, ->, <-, <->) for each pair.
pub fn candidate_count(p: usize) -> usize {
    5usize.pow((p * p.saturating_sub(1) / 2) as u32)
}

/// Decodes candidate `code` in base five over the pairs; `None` if the
/// resulting mixed graph is not ancestral.
pub fn ancestral_graph_from_code(p: usize, code: usize) -> Option<AncestralGraph> {
    let mut c = code;
    let mut edges = Vec::new();
    for i in 0..p {
        for j in (i + 1)..p {
            match c % 5 {
                1 => edges.push(Edge::undirected(i, j)),
                2 => edges.push(Edge::directed(i, j)),
                3 => edges.push(Edge::directed(j, i)),
                4 => edges.push(Edge::bidirected(i, j)),
                _ => {}
            }
            c /= 5;
        }
    }
    AncestralGraph::new(p, edges).ok()
}

/// Every ancestral graph on `p` labelled vertices.
pub fn all_ancestral_graphs(p: usize) -> Vec<AncestralGraph> {
    (0..candidate_count(p)).filter_map(|code| ancestral_graph_from_code(p, code)).collect()
}

/// `an(C)` by following directed edges backwards from the edge list.
pub fn oracle_ancestors(g: &AncestralGraph, c: &[bool]) -> Vec<bool> {
    let mut an = c.to_vec();
    loop {
        let mut changed = false;
        for e in g.edges() {
            if e.kind == EdgeKind::Directed && an[e.b] && !an[e.a] {
                an[e.a] = true;
                changed = true;
            }
        }
        if !changed {
            return an;
        }
    }
}

fn arrow_at(g: &AncestralGraph, from: usize, at: usize) -> bool {
    matches!(g.link(from, at), Link::Bidirected | Link::Out)
}

/// Whether some simple path between `i` and `j` is m-connecting given `c`,
/// by enumerating every simple path.
pub fn brute_force_m_connected(g: &AncestralGraph, i: usize, j: usize, c: &[bool]) -> bool {
    let an_c = oracle_ancestors(g, c);
    let p = g.p();
    fn extend(
        g: &AncestralGraph,
        path: &mut Vec<usize>,
        visited: &mut [bool],
        j: usize,
        c: &[bool],
        an_c: &[bool],
        p: usize,
    ) -> bool {
        let v = *path.last().expect("nonempty path");
        for w in 0..p {
            if visited[w] || !g.adjacent(v, w) {
                continue;
            }
            if path.len() >= 2 {
                let u = path[path.len() - 2];
                let collider = arrow_at(g, u, v) && arrow_at(g, w, v);
                let open = if collider { an_c[v] } else { !c[v] };
                if !open {
                    continue;
                }
            }
            if w == j {
                return true;
            }
            visited[w] = true;
            path.push(w);
            let found = extend(g, path, visited, j, c, an_c, p);
            path.pop();
            visited[w] = false;
            if found {
                return true;
            }
        }
        false
    }
    let mut visited = vec![false; p];
    visited[i] = true;
    extend(g, &mut vec![i], &mut visited, j, c, &an_c, p)
}

pub fn random_spd(p: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(p, p + 4, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose() / (p + 4) as f64 + DMatrix::identity(p, p) * 0.2
}

/// Sparse symmetric matrix on `pattern` with a dominant diagonal.
fn random_pattern_pd(members: &[usize], g: &AncestralGraph, link: Link, rng: &mut impl Rng) -> DMatrix<f64> {
    let k = members.len();
    let mut m = DMatrix::<f64>::zeros(k, k);
    for a in 0..k {
        for b in (a + 1)..k {
            if g.link(members[a], members[b]) == link {
                let v = rng.random_range(-1.0..1.0);
                m[(a, b)] = v;
                m[(b, a)] = v;
            }
        }
    }
    for a in 0..k {
        let off: f64 = (0..k).filter(|&b| b != a).map(|b| m[(a, b)].abs()).sum();
        m[(a, a)] = off + rng.random_range(0.2..1.5);
    }
    m
}

pub fn random_params(g: &AncestralGraph, rng: &mut impl Rng) -> ParamSet {
    let p = g.p();
    let lambda = random_pattern_pd(&g.un(), g, Link::Undirected, rng);
    let omega = random_pattern_pd(&g.not_un(), g, Link::Bidirected, rng);
    let mut beta = DMatrix::zeros(p, p);
    for e in g.edges().iter().filter(|e| e.kind == EdgeKind::Directed) {
        beta[(e.b, e.a)] = rng.random_range(-1.0..1.0);
    }
    ParamSet::new(g, lambda, omega, beta).expect("pattern and definiteness hold by construction")
}

/// `Σ_ij - Σ_iC Σ_CC^-1 Σ_Cj` with an explicit inverse.
pub fn partial_covariance(sigma: &DMatrix<f64>, i: usize, j: usize, c: &[usize]) -> f64 {
    if c.is_empty() {
        return sigma[(i, j)];
    }
    let k = c.len();
    let s_cc = DMatrix::from_fn(k, k, |a, b| sigma[(c[a], c[b])]);
    let inv = s_cc.try_inverse().expect("conditioning block invertible");
    let mut acc = sigma[(i, j)];
    for a in 0..k {
        for b in 0..k {
            acc -= sigma[(i, c[a])] * inv[(a, b)] * sigma[(c[b], j)];
        }
    }
    acc
}

/// Free parameters of a Gaussian ancestral graph model as a flat vector:
/// `Λ` diagonal and undirected edges, `Ω` diagonal and bidirected edges, then
/// one coefficient per directed edge.
pub struct FreeParameters {
    p: usize,
    un: Vec<usize>,
    not_un: Vec<usize>,
    lambda_off: Vec<(usize, usize)>,
    omega_off: Vec<(usize, usize)>,
    directed: Vec<(usize, usize)>,
}

impl FreeParameters {
    pub fn new(g: &AncestralGraph) -> Self {
        let un = g.un();
        let not_un = g.not_un();
        let pairs = |members: &[usize], link: Link| {
            let mut v = Vec::new();
            for a in 0..members.len() {
                for b in (a + 1)..members.len() {
                    if g.link(members[a], members[b]) == link {
                        v.push((a, b));
                    }
                }
            }
            v
        };
        FreeParameters {
            p: g.p(),
            lambda_off: pairs(&un, Link::Undirected),
            omega_off: pairs(&not_un, Link::Bidirected),
            directed: g.edges().iter().filter(|e| e.kind == EdgeKind::Directed).map(|e| (e.b, e.a)).collect(),
            un,
            not_un,
        }
    }

    pub fn len(&self) -> usize {
        self.un.len() + self.lambda_off.len() + self.not_un.len() + self.omega_off.len() + self.directed.len()
    }

    /// `Σ(x)`, or `None` when `Λ` or `Ω` is not positive definite.
    pub fn sigma(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        let mut it = x.iter().copied();
        let (ku, kn) = (self.un.len(), self.not_un.len());
        let mut lambda = DMatrix::zeros(ku, ku);
        for a in 0..ku {
            lambda[(a, a)] = it.next()?;
        }
        for &(a, b) in &self.lambda_off {
            let v = it.next()?;
            lambda[(a, b)] = v;
            lambda[(b, a)] = v;
        }
        let mut omega = DMatrix::zeros(kn, kn);
        for a in 0..kn {
            omega[(a, a)] = it.next()?;
        }
        for &(a, b) in &self.omega_off {
            let v = it.next()?;
            omega[(a, b)] = v;
            omega[(b, a)] = v;
        }
        let mut beta = DMatrix::zeros(self.p, self.p);
        for &(i, j) in &self.directed {
            beta[(i, j)] = it.next()?;
        }
        lambda.clone().cholesky()?;
        omega.clone().cholesky()?;
        let mut psi = DMatrix::zeros(self.p, self.p);
        let lambda_inv = lambda.try_inverse()?;
        for (a, &i) in self.un.iter().enumerate() {
            for (b, &j) in self.un.iter().enumerate() {
                psi[(i, j)] = lambda_inv[(a, b)];
            }
        }
        for (a, &i) in self.not_un.iter().enumerate() {
            for (b, &j) in self.not_un.iter().enumerate() {
                psi[(i, j)] = omega[(a, b)];
            }
        }
        let a = (DMatrix::identity(self.p, self.p) - beta).try_inverse()?;
        Some(&a * psi * a.transpose())
    }

    /// A random feasible point near the scale of `s`.
    pub fn random_start(&self, s: &DMatrix<f64>, rng: &mut impl Rng) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.len());
        x.extend(self.un.iter().map(|&i| rng.random_range(0.5..1.5) / s[(i, i)]));
        x.extend(self.lambda_off.iter().map(|_| rng.random_range(-0.1..0.1)));
        x.extend(self.not_un.iter().map(|&i| rng.random_range(0.5..1.5) * s[(i, i)]));
        x.extend(self.omega_off.iter().map(|_| rng.random_range(-0.1..0.1)));
        x.extend(self.directed.iter().map(|_| rng.random_range(-1.0..1.0)));
        x
    }
}

/// `-(n/2) log|Σ| - (n/2) tr(Σ^-1 S)` by determinant and explicit inverse.
pub fn oracle_log_likelihood(sigma: &DMatrix<f64>, stats: &SampleStats) -> f64 {
    let n = stats.n() as f64;
    let det = sigma.determinant();
    if det <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let inv = match sigma.clone().try_inverse() {
        Some(m) => m,
        None => return f64::NEG_INFINITY,
    };
    -n / 2.0 * det.ln() - n / 2.0 * (inv * stats.s()).trace()
}

/// Nelder-Mead minimization of `f` from `x0` with initial step `step`.
pub fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], step: f64, max_evals: usize, ftol: f64) -> (Vec<f64>, f64) {
    let d = x0.len();
    if d == 0 {
        return (Vec::new(), f(x0));
    }
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for k in 0..d {
        let mut x = x0.to_vec();
        x[k] += if x[k].abs() > 1e-8 { step * x[k].abs().max(0.1) } else { step };
        simplex.push(x);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| f(x)).collect();
    let mut evals = d + 1;
    while evals < max_evals {
        let mut idx: Vec<usize> = (0..=d).collect();
        idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = idx.iter().map(|&k| simplex[k].clone()).collect();
        values = idx.iter().map(|&k| values[k]).collect();
        if (values[d] - values[0]).abs() <= ftol * (1.0 + values[0].abs()) && values[d].is_finite() {
            break;
        }
        let centroid: Vec<f64> = (0..d).map(|k| simplex[..d].iter().map(|x| x[k]).sum::<f64>() / d as f64).collect();
        let point = |t: f64| -> Vec<f64> { (0..d).map(|k| centroid[k] + t * (simplex[d][k] - centroid[k])).collect() };
        let xr = point(-1.0);
        let fr = f(&xr);
        evals += 1;
        if fr < values[0] {
            let xe = point(-2.0);
            let fe = f(&xe);
            evals += 1;
            if fe < fr {
                simplex[d] = xe;
                values[d] = fe;
            } else {
                simplex[d] = xr;
                values[d] = fr;
            }
        } else if fr < values[d - 1] {
            simplex[d] = xr;
            values[d] = fr;
        } else {
            let (xc, fc) = if fr < values[d] {
                let x = point(-0.5);
                let v = f(&x);
                (x, v)
            } else {
                let x = point(0.5);
                let v = f(&x);
                (x, v)
            };
            evals += 1;
            if fc < values[d].min(fr) {
                simplex[d] = xc;
                values[d] = fc;
            } else {
                for k in 1..=d {
                    simplex[k] = (0..d).map(|t| simplex[0][t] + 0.5 * (simplex[k][t] - simplex[0][t])).collect();
                    values[k] = f(&simplex[k]);
                }
                evals += d;
            }
        }
    }
    let best = (0..=d).min_by(|&a, &b| values[a].total_cmp(&values[b])).expect("nonempty simplex");
    (simplex[best].clone(), values[best])
}

/// Best log-likelihood found by Nelder-Mead from `restarts` random starts,
/// each restarted from its own optimum until it stops improving.
pub fn optimizer_log_likelihood(g: &AncestralGraph, stats: &SampleStats, restarts: usize, rng: &mut impl Rng) -> f64 {
    let free = FreeParameters::new(g);
    let f = |x: &[f64]| -> f64 {
        match free.sigma(x) {
            Some(sigma) => -oracle_log_likelihood(&sigma, stats),
            None => f64::INFINITY,
        }
    };
    let mut best = f64::INFINITY;
    for _ in 0..restarts {
        let mut x = free.random_start(stats.s(), rng);
        let mut fx = f(&x);
        let mut step = 0.3;
        for _ in 0..60 {
            let (nx, nf) = nelder_mead(&f, &x, step, 20_000, 1e-15);
            let gain = fx - nf;
            x = nx;
            fx = nf;
            step = (step * 0.5).max(1e-4);
            if gain.abs() < 1e-12 {
                break;
            }
        }
        best = best.min(fx);
    }
    -best
}
