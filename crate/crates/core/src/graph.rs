//! Ancestral graphs: mixed graphs with undirected, directed and bidirected
//! edges, validated on construction and immutable afterwards.
//!
//! Vertices are dense indices `0..p`, each carrying a string label. All
//! relations (neighbors, spouses, parents, children, ancestors) are computed
//! once at validation time.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

pub type VertexSet = BTreeSet<usize>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    Undirected,
    /// Stored with orientation `a -> b`.
    Directed,
    Bidirected,
}

/// An edge between `a` and `b`. For directed edges `a` is the tail and `b`
/// the head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub kind: EdgeKind,
}

impl Edge {
    pub fn undirected(a: usize, b: usize) -> Self {
        Edge { a, b, kind: EdgeKind::Undirected }
    }

    pub fn directed(tail: usize, head: usize) -> Self {
        Edge { a: tail, b: head, kind: EdgeKind::Directed }
    }

    pub fn bidirected(a: usize, b: usize) -> Self {
        Edge { a, b, kind: EdgeKind::Bidirected }
    }

    /// Mark of this edge at endpoint `v`: `true` for an arrowhead.
    pub fn arrowhead_at(&self, v: usize) -> bool {
        match self.kind {
            EdgeKind::Undirected => false,
            EdgeKind::Bidirected => true,
            EdgeKind::Directed => v == self.b,
        }
    }

    pub fn other(&self, v: usize) -> usize {
        if v == self.a {
            self.b
        } else {
            self.a
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sym = match self.kind {
            EdgeKind::Undirected => "-",
            EdgeKind::Directed => "->",
            EdgeKind::Bidirected => "<->",
        };
        write!(f, "{} {} {}", self.a, sym, self.b)
    }
}

/// How vertex `i` is linked to vertex `j`, seen from `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    None,
    Undirected,
    /// `i -> j`
    Out,
    /// `i <- j`
    In,
    Bidirected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AncestralGraph {
    labels: Vec<String>,
    edges: Vec<Edge>,
    links: Vec<Link>,
    ne: Vec<Vec<usize>>,
    sp: Vec<Vec<usize>>,
    pa: Vec<Vec<usize>>,
    ch: Vec<Vec<usize>>,
    /// `ancestors[i][j]` is true iff `j ∈ an(i)`.
    ancestors: Vec<Vec<bool>>,
    in_un: Vec<bool>,
}

impl AncestralGraph {
    /// Validates an edge list over `p` vertices labelled `"0"`, `"1"`, ...
    pub fn new(p: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        let labels = (0..p).map(|i| i.to_string()).collect();
        Self::with_labels(labels, edges)
    }

    pub fn with_labels(labels: Vec<String>, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        let p = labels.len();
        let mut links = vec![Link::None; p * p];
        let mut edge_list = Vec::new();
        for e in edges {
            if e.a >= p {
                return Err(Error::UnknownVertex(e.a));
            }
            if e.b >= p {
                return Err(Error::UnknownVertex(e.b));
            }
            if e.a == e.b {
                return Err(Error::SelfLoop(e.a));
            }
            if links[e.a * p + e.b] != Link::None {
                return Err(Error::MultiEdge(e.a.min(e.b), e.a.max(e.b)));
            }
            let (from_a, from_b) = match e.kind {
                EdgeKind::Undirected => (Link::Undirected, Link::Undirected),
                EdgeKind::Directed => (Link::Out, Link::In),
                EdgeKind::Bidirected => (Link::Bidirected, Link::Bidirected),
            };
            links[e.a * p + e.b] = from_a;
            links[e.b * p + e.a] = from_b;
            edge_list.push(e);
        }

        let mut ne = vec![Vec::new(); p];
        let mut sp = vec![Vec::new(); p];
        let mut pa = vec![Vec::new(); p];
        let mut ch = vec![Vec::new(); p];
        for i in 0..p {
            for j in 0..p {
                match links[i * p + j] {
                    Link::None => {}
                    Link::Undirected => ne[i].push(j),
                    Link::Bidirected => sp[i].push(j),
                    Link::In => pa[i].push(j),
                    Link::Out => ch[i].push(j),
                }
            }
        }

        let ancestors = (0..p).map(|i| reverse_reach(&pa, i)).collect::<Vec<_>>();

        for i in 0..p {
            if !ne[i].is_empty() && !(pa[i].is_empty() && sp[i].is_empty()) {
                return Err(Error::ConditionOneViolated(i));
            }
        }
        for i in 0..p {
            if pa[i].iter().chain(&sp[i]).any(|&j| ancestors[j][i]) {
                return Err(Error::ConditionTwoViolated(i));
            }
        }

        let in_un = (0..p).map(|i| pa[i].is_empty() && sp[i].is_empty()).collect();
        edge_list.sort_by_key(|e| (e.a.min(e.b), e.a.max(e.b)));

        Ok(AncestralGraph { labels, edges: edge_list, links, ne, sp, pa, ch, ancestors, in_un })
    }

    /// Builds a graph from the integer adjacency coding: `a_ij = a_ji = 1`
    /// for `i - j`, `a_ij = a_ji = 2` for `i <-> j`, `a_ij = 1, a_ji = 0` for
    /// `i -> j`.
    pub fn from_adjacency(labels: Vec<String>, matrix: &[Vec<u8>]) -> Result<Self> {
        let p = labels.len();
        if matrix.len() != p {
            return Err(Error::DimensionMismatch { expected: p, found: matrix.len() });
        }
        for (row, r) in matrix.iter().enumerate() {
            if r.len() != p {
                return Err(Error::NotSquare { rows: p, row, cols: r.len() });
            }
        }
        let mut edges = Vec::new();
        for i in 0..p {
            match matrix[i][i] {
                0 => {}
                1 | 2 => return Err(Error::SelfLoop(i)),
                _ => return Err(Error::InvalidCoding(i, i)),
            }
            for j in (i + 1)..p {
                let edge = match (matrix[i][j], matrix[j][i]) {
                    (0, 0) => None,
                    (1, 1) => Some(Edge::undirected(i, j)),
                    (2, 2) => Some(Edge::bidirected(i, j)),
                    (1, 0) => Some(Edge::directed(i, j)),
                    (0, 1) => Some(Edge::directed(j, i)),
                    _ => return Err(Error::InvalidCoding(i, j)),
                };
                edges.extend(edge);
            }
        }
        Self::with_labels(labels, edges)
    }

    pub fn to_adjacency(&self) -> Vec<Vec<u8>> {
        let p = self.p();
        let mut m = vec![vec![0u8; p]; p];
        for e in &self.edges {
            match e.kind {
                EdgeKind::Undirected => {
                    m[e.a][e.b] = 1;
                    m[e.b][e.a] = 1;
                }
                EdgeKind::Bidirected => {
                    m[e.a][e.b] = 2;
                    m[e.b][e.a] = 2;
                }
                EdgeKind::Directed => m[e.a][e.b] = 1,
            }
        }
        m
    }

    pub fn p(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn link(&self, i: usize, j: usize) -> Link {
        self.links[i * self.p() + j]
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.link(i, j) != Link::None
    }

    /// Edge between `i` and `j` as stored, if any.
    pub fn edge_between(&self, i: usize, j: usize) -> Option<Edge> {
        match self.link(i, j) {
            Link::None => None,
            Link::Undirected => Some(Edge::undirected(i, j)),
            Link::Bidirected => Some(Edge::bidirected(i, j)),
            Link::Out => Some(Edge::directed(i, j)),
            Link::In => Some(Edge::directed(j, i)),
        }
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.ne[i]
    }

    pub fn spouses(&self, i: usize) -> &[usize] {
        &self.sp[i]
    }

    pub fn parents(&self, i: usize) -> &[usize] {
        &self.pa[i]
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.ch[i]
    }

    /// `(ne(i), sp(i), pa(i))`.
    pub fn relations(&self, i: usize) -> Result<(VertexSet, VertexSet, VertexSet)> {
        self.check_vertex(i)?;
        Ok((
            self.ne[i].iter().copied().collect(),
            self.sp[i].iter().copied().collect(),
            self.pa[i].iter().copied().collect(),
        ))
    }

    /// `an(A)`: every vertex with a directed path into `A`, plus `A` itself.
    pub fn ancestors<'a>(&self, set: impl IntoIterator<Item = &'a usize>) -> Result<VertexSet> {
        let mut mask = vec![false; self.p()];
        for &i in set {
            self.check_vertex(i)?;
            for (j, &is_anc) in self.ancestors[i].iter().enumerate() {
                mask[j] |= is_anc;
            }
        }
        Ok(mask_to_set(&mask))
    }

    /// Membership mask of `an(A)`; unknown vertices are ignored.
    pub fn ancestor_mask(&self, set: &[usize]) -> Vec<bool> {
        let mut mask = vec![false; self.p()];
        for &i in set {
            if i < self.p() {
                for (j, &is_anc) in self.ancestors[i].iter().enumerate() {
                    mask[j] |= is_anc;
                }
            }
        }
        mask
    }

    pub fn is_ancestor(&self, j: usize, i: usize) -> bool {
        self.ancestors[i][j]
    }

    pub fn in_un(&self, i: usize) -> bool {
        self.in_un[i]
    }

    /// `un_G`: vertices without parents or spouses.
    pub fn un(&self) -> Vec<usize> {
        (0..self.p()).filter(|&i| self.in_un[i]).collect()
    }

    /// `V \ un_G`, in ascending order.
    pub fn not_un(&self) -> Vec<usize> {
        (0..self.p()).filter(|&i| !self.in_un[i]).collect()
    }

    /// `db_G`: endpoints of at least one directed or bidirected edge.
    pub fn db(&self) -> Vec<usize> {
        let mut mask = vec![false; self.p()];
        for e in &self.edges {
            if e.kind != EdgeKind::Undirected {
                mask[e.a] = true;
                mask[e.b] = true;
            }
        }
        (0..self.p()).filter(|&i| mask[i]).collect()
    }

    pub fn is_dag(&self) -> bool {
        self.edges.iter().all(|e| e.kind == EdgeKind::Directed)
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Subgraph induced by `vertices`, relabelled `0..k` in the given order.
    pub fn induced_subgraph(&self, vertices: &[usize]) -> Result<AncestralGraph> {
        let mut pos = vec![None; self.p()];
        for (k, &v) in vertices.iter().enumerate() {
            self.check_vertex(v)?;
            pos[v] = Some(k);
        }
        let labels = vertices.iter().map(|&v| self.labels[v].clone()).collect();
        let edges = self.edges.iter().filter_map(|e| match (pos[e.a], pos[e.b]) {
            (Some(a), Some(b)) => Some(Edge { a, b, kind: e.kind }),
            _ => None,
        });
        AncestralGraph::with_labels(labels, edges)
    }

    /// Splits the graph into its undirected part and its directed-bidirected
    /// part.
    pub fn decompose(&self) -> Decomposition {
        let un = self.un();
        let db = self.db();
        // Subgraphs of an ancestral graph are ancestral.
        let g_un = self.induced_subgraph(&un).expect("induced subgraph of a valid graph");
        let g_db = self.induced_subgraph(&db).expect("induced subgraph of a valid graph");
        Decomposition { un, db, g_un, g_db }
    }

    /// The same graph with vertices reordered: new vertex `k` is old vertex
    /// `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Result<AncestralGraph> {
        if order.len() != self.p() {
            return Err(Error::DimensionMismatch { expected: self.p(), found: order.len() });
        }
        let mut seen = vec![false; self.p()];
        for &v in order {
            self.check_vertex(v)?;
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidConfig(format!("vertex {v} repeated in permutation")));
            }
        }
        self.induced_subgraph(order)
    }

    /// Returns a copy with extra edges added, revalidated.
    pub fn with_added_edges(&self, extra: impl IntoIterator<Item = Edge>) -> Result<AncestralGraph> {
        let edges = self.edges.iter().copied().chain(extra);
        AncestralGraph::with_labels(self.labels.clone(), edges)
    }

    fn check_vertex(&self, i: usize) -> Result<()> {
        if i < self.p() {
            Ok(())
        } else {
            Err(Error::UnknownVertex(i))
        }
    }
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub un: Vec<usize>,
    pub db: Vec<usize>,
    /// Induced on `un`, vertex `k` is `un[k]`.
    pub g_un: AncestralGraph,
    /// Induced on `db`, vertex `k` is `db[k]`.
    pub g_db: AncestralGraph,
}

fn reverse_reach(pa: &[Vec<usize>], start: usize) -> Vec<bool> {
    let mut seen = vec![false; pa.len()];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(v) = stack.pop() {
        for &u in &pa[v] {
            if !seen[u] {
                seen[u] = true;
                stack.push(u);
            }
        }
    }
    seen
}

pub(crate) fn mask_to_set(mask: &[bool]) -> VertexSet {
    mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect()
}
