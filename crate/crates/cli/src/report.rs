//! Text and JSON renderings of a fit.

use std::fmt::Write as _;

use agfit::{FitConfig, FitResult};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Everything `fit` reports, with the matrices laid out over all variables in
/// output order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub labels: Vec<String>,
    pub n: usize,
    pub sigma_hat: Vec<Vec<f64>>,
    /// `Λ̂^-1` on the undirected block, zero elsewhere.
    pub lambda_hat: Vec<Vec<f64>>,
    /// The concentration matrix `Λ̂` itself, over `undirected_labels`.
    pub lambda_concentration: Vec<Vec<f64>>,
    pub undirected_labels: Vec<String>,
    /// `I - B̂`.
    pub i_minus_b_hat: Vec<Vec<f64>>,
    /// `Ω̂` on the remaining block, zero elsewhere.
    pub omega_hat: Vec<Vec<f64>>,
    pub deviance: f64,
    pub df: usize,
    pub p_value: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub log_likelihood: f64,
    pub log_likelihood_trace: Vec<f64>,
    pub tolerance: f64,
    pub max_cycles: usize,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl FitReport {
    pub fn new(labels: Vec<String>, n: usize, res: &FitResult, config: &FitConfig) -> agfit::Result<Self> {
        let params = &res.params;
        let un = params.un_index();
        let lambda_cov = un.scatter(&res.lambda_covariance()?);
        Ok(FitReport {
            undirected_labels: un.members().iter().map(|&i| labels[i].clone()).collect(),
            labels,
            n,
            sigma_hat: rows(res.sigma_hat.as_matrix()),
            lambda_hat: rows(&lambda_cov),
            lambda_concentration: rows(res.lambda_hat()),
            i_minus_b_hat: rows(&params.i_minus_beta()),
            omega_hat: rows(&params.omega_full()),
            deviance: res.deviance,
            df: res.df,
            p_value: res.p_value(),
            iterations: res.iterations,
            converged: res.converged,
            log_likelihood: res.log_likelihood,
            log_likelihood_trace: res.log_likelihood_trace.clone(),
            tolerance: config.tolerance,
            max_cycles: config.max_cycles,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// R-style listing: one `$name` block per component, entries rounded to
    /// `precision` decimals.
    pub fn to_text(&self, precision: usize) -> String {
        let mut out = String::new();
        for (name, m) in [
            ("Shat", &self.sigma_hat),
            ("Lhat", &self.lambda_hat),
            ("Bhat", &self.i_minus_b_hat),
            ("Ohat", &self.omega_hat),
        ] {
            let _ = writeln!(out, "${name}");
            write_matrix(&mut out, &self.labels, m, precision);
            out.push('\n');
        }
        let scalars = [
            ("dev", format_number(self.deviance, precision)),
            ("df", self.df.to_string()),
            ("it", self.iterations.to_string()),
            ("converged", if self.converged { "TRUE" } else { "FALSE" }.to_string()),
            ("pvalue", self.p_value.map_or("NA".to_string(), |p| format_number(p, precision.max(3)))),
        ];
        for (name, value) in scalars {
            let _ = writeln!(out, "${name}\n[1] {value}\n");
        }
        out
    }
}

/// Rounds half away from zero and never prints a negative zero.
pub fn format_number(x: f64, precision: usize) -> String {
    let scale = 10f64.powi(precision as i32);
    let r = (x * scale).round() / scale;
    let r = if r == 0.0 { 0.0 } else { r };
    format!("{r:.precision$}")
}

fn write_matrix(out: &mut String, labels: &[String], m: &[Vec<f64>], precision: usize) {
    let cells: Vec<Vec<String>> = m.iter().map(|r| r.iter().map(|&x| format_number(x, precision)).collect()).collect();
    let label_width = labels.iter().map(String::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..labels.len())
        .map(|j| cells.iter().map(|r| r[j].len()).chain([labels[j].len()]).max().unwrap_or(0))
        .collect();
    let _ = write!(out, "{:label_width$}", "");
    for (j, l) in labels.iter().enumerate() {
        let _ = write!(out, " {:>w$}", l, w = widths[j]);
    }
    out.push('\n');
    for (i, row) in cells.iter().enumerate() {
        let _ = write!(out, "{:<label_width$}", labels[i]);
        for (j, c) in row.iter().enumerate() {
            let _ = write!(out, " {:>w$}", c, w = widths[j]);
        }
        out.push('\n');
    }
}
