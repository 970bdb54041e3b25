//! Small reference models used throughout the tests and the CLI examples.

use nalgebra::DMatrix;

use crate::graph::{AncestralGraph, Edge};

/// The five-vertex ancestral graph `0 - 1 -> 2 -> 4`, `2 <-> 3 <-> 4`.
pub fn figure_two() -> AncestralGraph {
    AncestralGraph::new(
        5,
        [
            Edge::undirected(0, 1),
            Edge::directed(1, 2),
            Edge::directed(2, 4),
            Edge::bidirected(2, 3),
            Edge::bidirected(3, 4),
        ],
    )
    .expect("valid graph")
}

pub const MOTH_LABELS: [&str; 6] = ["min", "max", "wind", "rain", "cloud", "moth"];

pub const MOTH_N: usize = 72;

/// Correlations of the noctuid moth trapping data (Whittaker, 1990),
/// as printed to two decimals.
#[rustfmt::skip]
pub const MOTH_CORRELATION: [[f64; 6]; 6] = [
    [ 1.00,  0.40,  0.37,  0.18, -0.46,  0.29],
    [ 0.40,  1.00,  0.02, -0.09,  0.02,  0.22],
    [ 0.37,  0.02,  1.00,  0.05, -0.13, -0.24],
    [ 0.18, -0.09,  0.05,  1.00, -0.47,  0.11],
    [-0.46,  0.02, -0.13, -0.47,  1.00, -0.37],
    [ 0.29,  0.22, -0.24,  0.11, -0.37,  1.00],
];

/// Labels of the moth model, in the order the correlation matrix lists them.
pub const MOTH_MODEL_LABELS: [&str; 5] = ["max", "wind", "rain", "cloud", "moth"];

/// Correlation block for [`MOTH_MODEL_LABELS`].
pub fn moth_model_correlation() -> DMatrix<f64> {
    let idx = [1, 2, 3, 4, 5];
    DMatrix::from_fn(5, 5, |i, j| MOTH_CORRELATION[idx[i]][idx[j]])
}

/// `wind - rain`, `rain -> cloud -> moth`, `max <-> cloud`, `max <-> moth`,
/// over [`MOTH_MODEL_LABELS`]. This is [`figure_two`] with
/// `0 = wind, 1 = rain, 2 = cloud, 3 = max, 4 = moth`.
pub fn moth_graph() -> AncestralGraph {
    let (max, wind, rain, cloud, moth) = (0, 1, 2, 3, 4);
    AncestralGraph::with_labels(
        MOTH_MODEL_LABELS.map(String::from).to_vec(),
        [
            Edge::undirected(wind, rain),
            Edge::directed(rain, cloud),
            Edge::directed(cloud, moth),
            Edge::bidirected(max, cloud),
            Edge::bidirected(max, moth),
        ],
    )
    .expect("valid graph")
}

/// [`moth_graph`] plus `wind -> moth`.
pub fn moth_graph_extended() -> AncestralGraph {
    moth_graph().with_added_edges([Edge::directed(1, 4)]).expect("valid graph")
}

/// The chordless bidirected cycle on `p` vertices.
pub fn bidirected_cycle(p: usize) -> AncestralGraph {
    let edges = (0..p).map(|i| Edge::bidirected(i, (i + 1) % p));
    AncestralGraph::new(p, edges).expect("valid graph")
}
