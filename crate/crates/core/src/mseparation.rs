//! m-separation queries, the pairwise independences they imply, and
//! maximality.
//!
//! Separation is decided by a reachability search over states
//! `(vertex, arrowhead at vertex on the edge used to arrive)`. A move through
//! an intermediate vertex is allowed when the vertex is a noncollider outside
//! `C`, or a collider inside `an(C)`. Each state is visited at most once, so a
//! query costs `O(|V| + |E|)`.

use crate::error::{Error, Result};
use crate::graph::{AncestralGraph, Edge, VertexSet};

/// Exhaustive searches over conditioning sets refuse graphs larger than this
/// unless told otherwise.
pub const DEFAULT_VERTEX_LIMIT: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeparationQuery {
    a: VertexSet,
    b: VertexSet,
    c: VertexSet,
}

impl SeparationQuery {
    /// `A`, `B` nonempty, all three pairwise disjoint.
    pub fn new(a: VertexSet, b: VertexSet, c: VertexSet) -> Result<Self> {
        if a.is_empty() || b.is_empty() || !a.is_disjoint(&b) || !a.is_disjoint(&c) || !b.is_disjoint(&c) {
            return Err(Error::OverlappingSets);
        }
        Ok(SeparationQuery { a, b, c })
    }

    pub fn from_slices(a: &[usize], b: &[usize], c: &[usize]) -> Result<Self> {
        Self::new(a.iter().copied().collect(), b.iter().copied().collect(), c.iter().copied().collect())
    }

    pub fn a(&self) -> &VertexSet {
        &self.a
    }

    pub fn b(&self) -> &VertexSet {
        &self.b
    }

    pub fn c(&self) -> &VertexSet {
        &self.c
    }
}

/// `Y_A ⊥⊥ Y_B | Y_C`, with whether the graph implies it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndependenceStatement {
    pub a: VertexSet,
    pub b: VertexSet,
    pub c: VertexSet,
    pub holds: bool,
}

/// A non-adjacent pair and its first separating set (by size, then
/// lexicographically), if one exists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairwiseSeparation {
    pub i: usize,
    pub j: usize,
    pub separator: Option<VertexSet>,
}

/// Vertices reachable from `start` by m-connecting walks given `C`.
///
/// `in_c` and `in_an_c` are membership masks of `C` and `an(C)`.
fn m_reachable(g: &AncestralGraph, start: usize, in_c: &[bool], in_an_c: &[bool]) -> Vec<bool> {
    let p = g.p();
    // visited[2 * v + head]
    let mut visited = vec![false; 2 * p];
    let mut reached = vec![false; p];
    let mut stack = Vec::new();

    for e in incident_edges(g, start) {
        let w = e.other(start);
        let head = e.arrowhead_at(w) as usize;
        if !visited[2 * w + head] {
            visited[2 * w + head] = true;
            stack.push((w, head == 1));
        }
    }

    while let Some((v, head_in)) = stack.pop() {
        reached[v] = true;
        for e in incident_edges(g, v) {
            let collider = head_in && e.arrowhead_at(v);
            let passable = if collider { in_an_c[v] } else { !in_c[v] };
            if !passable {
                continue;
            }
            let w = e.other(v);
            let head = e.arrowhead_at(w) as usize;
            if !visited[2 * w + head] {
                visited[2 * w + head] = true;
                stack.push((w, head == 1));
            }
        }
    }
    reached
}

fn incident_edges(g: &AncestralGraph, v: usize) -> impl Iterator<Item = Edge> + '_ {
    (0..g.p()).filter_map(move |w| g.edge_between(v, w))
}

fn masks(g: &AncestralGraph, c: &[usize]) -> (Vec<bool>, Vec<bool>) {
    let mut in_c = vec![false; g.p()];
    for &v in c {
        in_c[v] = true;
    }
    (in_c, g.ancestor_mask(c))
}

fn check_vertices<'a>(g: &AncestralGraph, vs: impl IntoIterator<Item = &'a usize>) -> Result<()> {
    for &v in vs {
        if v >= g.p() {
            return Err(Error::UnknownVertex(v));
        }
    }
    Ok(())
}

/// Whether some path between `i` and `j` is m-connecting given `C`.
pub fn m_connecting_path_exists(g: &AncestralGraph, i: usize, j: usize, c: &VertexSet) -> Result<bool> {
    check_vertices(g, [&i, &j].into_iter().chain(c))?;
    if i == j || c.contains(&i) || c.contains(&j) {
        return Err(Error::OverlappingSets);
    }
    let c: Vec<usize> = c.iter().copied().collect();
    let (in_c, in_an_c) = masks(g, &c);
    Ok(m_reachable(g, i, &in_c, &in_an_c)[j])
}

/// Whether every `i ∈ A`, `j ∈ B` are m-separated given `C`.
pub fn m_separated(g: &AncestralGraph, q: &SeparationQuery) -> Result<bool> {
    check_vertices(g, q.a.iter().chain(&q.b).chain(&q.c))?;
    let c: Vec<usize> = q.c.iter().copied().collect();
    let (in_c, in_an_c) = masks(g, &c);
    for &i in &q.a {
        let reached = m_reachable(g, i, &in_c, &in_an_c);
        if q.b.iter().any(|&j| reached[j]) {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn independence_statement(g: &AncestralGraph, q: &SeparationQuery) -> Result<IndependenceStatement> {
    Ok(IndependenceStatement { a: q.a.clone(), b: q.b.clone(), c: q.c.clone(), holds: m_separated(g, q)? })
}

/// Subsets of `items` ordered by size, then lexicographically by position.
pub(crate) fn subsets_by_size(items: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    (0..=items.len()).flat_map(move |k| Combinations::new(items, k))
}

struct Combinations<'a> {
    items: &'a [usize],
    idx: Vec<usize>,
    done: bool,
}

impl<'a> Combinations<'a> {
    fn new(items: &'a [usize], k: usize) -> Self {
        Combinations { items, idx: (0..k).collect(), done: k > items.len() }
    }
}

impl Iterator for Combinations<'_> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.idx.iter().map(|&t| self.items[t]).collect();
        let n = self.items.len();
        let k = self.idx.len();
        // advance to the next combination
        let mut pos = k;
        loop {
            if pos == 0 {
                self.done = true;
                break;
            }
            pos -= 1;
            if self.idx[pos] < n - k + pos {
                self.idx[pos] += 1;
                for t in pos + 1..k {
                    self.idx[t] = self.idx[t - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

fn guard(g: &AncestralGraph, limit: usize) -> Result<()> {
    if g.p() > limit {
        Err(Error::TooManyVertices { p: g.p(), limit })
    } else {
        Ok(())
    }
}

/// First separating set for `i`, `j` by exhaustive search, if any.
pub fn first_separator(g: &AncestralGraph, i: usize, j: usize) -> Option<VertexSet> {
    let others: Vec<usize> = (0..g.p()).filter(|&v| v != i && v != j).collect();
    let found = subsets_by_size(&others).find(|c| {
        let (in_c, in_an_c) = masks(g, c);
        !m_reachable(g, i, &in_c, &in_an_c)[j]
    });
    found.map(|c| c.into_iter().collect())
}

/// For every non-adjacent pair `i < j`, the first separating set.
pub fn implied_pairwise_independences(g: &AncestralGraph) -> Result<Vec<PairwiseSeparation>> {
    implied_pairwise_independences_with_limit(g, DEFAULT_VERTEX_LIMIT)
}

pub fn implied_pairwise_independences_with_limit(g: &AncestralGraph, limit: usize) -> Result<Vec<PairwiseSeparation>> {
    guard(g, limit)?;
    let p = g.p();
    let mut out = Vec::new();
    for i in 0..p {
        for j in (i + 1)..p {
            if !g.adjacent(i, j) {
                out.push(PairwiseSeparation { i, j, separator: first_separator(g, i, j) });
            }
        }
    }
    Ok(out)
}

/// Exhaustive maximality check: every non-adjacent pair has a separating set.
pub fn is_maximal(g: &AncestralGraph) -> Result<bool> {
    is_maximal_with_limit(g, DEFAULT_VERTEX_LIMIT)
}

pub fn is_maximal_with_limit(g: &AncestralGraph, limit: usize) -> Result<bool> {
    Ok(implied_pairwise_independences_with_limit(g, limit)?.iter().all(|s| s.separator.is_some()))
}

/// Non-adjacent pair with no separating set, tested against the single
/// candidate `ant({i, j}) \ {i, j}`. Polynomial, so usable at any size.
pub fn unseparable_pair(g: &AncestralGraph) -> Option<(usize, usize)> {
    let p = g.p();
    for i in 0..p {
        for j in (i + 1)..p {
            if !g.adjacent(i, j) && anterior_separator(g, i, j).is_none() {
                return Some((i, j));
            }
        }
    }
    None
}

/// Vertices with a path to `set` made of undirected edges and directed edges
/// pointing towards `set`.
pub fn anterior_mask(g: &AncestralGraph, set: &[usize]) -> Vec<bool> {
    let mut mask = vec![false; g.p()];
    let mut stack = Vec::new();
    for &v in set {
        if !mask[v] {
            mask[v] = true;
            stack.push(v);
        }
    }
    while let Some(v) = stack.pop() {
        for &u in g.parents(v).iter().chain(g.neighbors(v)) {
            if !mask[u] {
                mask[u] = true;
                stack.push(u);
            }
        }
    }
    mask
}

/// `ant({i, j}) \ {i, j}` if it m-separates `i` and `j`. In an ancestral
/// graph this set separates a non-adjacent pair whenever any set does.
pub fn anterior_separator(g: &AncestralGraph, i: usize, j: usize) -> Option<VertexSet> {
    let mut c = anterior_mask(g, &[i, j]);
    c[i] = false;
    c[j] = false;
    let c: Vec<usize> = (0..g.p()).filter(|&v| c[v]).collect();
    let (in_c, in_an_c) = masks(g, &c);
    if m_reachable(g, i, &in_c, &in_an_c)[j] {
        None
    } else {
        Some(c.into_iter().collect())
    }
}

/// Adds bidirected edges between non-adjacent pairs that have no separating
/// set until the graph is maximal.
pub fn maximal_completion(g: &AncestralGraph) -> Result<AncestralGraph> {
    maximal_completion_with_limit(g, DEFAULT_VERTEX_LIMIT)
}

pub fn maximal_completion_with_limit(g: &AncestralGraph, limit: usize) -> Result<AncestralGraph> {
    let mut current = g.clone();
    loop {
        let missing: Vec<Edge> = implied_pairwise_independences_with_limit(&current, limit)?
            .into_iter()
            .filter(|s| s.separator.is_none())
            .map(|s| Edge::bidirected(s.i, s.j))
            .collect();
        if missing.is_empty() {
            return Ok(current);
        }
        current = current.with_added_edges(missing)?;
    }
}

/// Whether two graphs on the same vertices imply the same pairwise
/// m-separations for every conditioning set.
pub fn same_independence_model(g: &AncestralGraph, h: &AncestralGraph, limit: usize) -> Result<bool> {
    guard(g, limit)?;
    if g.p() != h.p() {
        return Err(Error::DimensionMismatch { expected: g.p(), found: h.p() });
    }
    let p = g.p();
    for i in 0..p {
        for j in (i + 1)..p {
            let others: Vec<usize> = (0..p).filter(|&v| v != i && v != j).collect();
            for c in subsets_by_size(&others) {
                let (gc, gan) = masks(g, &c);
                let (hc, han) = masks(h, &c);
                if m_reachable(g, i, &gc, &gan)[j] != m_reachable(h, i, &hc, &han)[j] {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}
