//! Gaussian ancestral graph models: graph validation, m-separation, the
//! `(Λ, B, Ω)` parameterization, maximum likelihood fitting by iterative
//! conditional fitting, model assessment and a simulation harness.
//!
//! ```
//! use agfit::fixtures::{moth_graph, moth_model_correlation, MOTH_N};
//! use agfit::{fit, FitConfig, SampleStats};
//!
//! let stats = SampleStats::from_covariance(moth_model_correlation(), MOTH_N, false).unwrap();
//! let res = fit(&moth_graph(), &stats, &FitConfig::default()).unwrap();
//! assert_eq!(res.df, 5);
//! assert!((res.deviance - 10.22).abs() < 0.01);
//! ```

pub mod error;
pub mod fit;
pub mod fixtures;
pub mod graph;
pub mod linalg;
pub mod mseparation;
pub mod param;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
pub use fit::{fit, fit_dag_closed_form, FitConfig, FitResult, LambdaMode};
pub use graph::{AncestralGraph, Decomposition, Edge, EdgeKind, Link, VertexSet};
pub use mseparation::{m_separated, SeparationQuery};
pub use param::{build_sigma, CovarianceMatrix, ParamSet};
pub use stats::SampleStats;
