//! Acceptance checks. Runs without the libtest harness and prints one
//! PASS/FAIL line per criterion; exits nonzero if any criterion fails.

mod common;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use agfit::fit::{fit, fit_dag_closed_form, FitConfig, FitResult, IcfState, IcfUpdate};
use agfit::fixtures::{moth_graph, moth_graph_extended, moth_model_correlation, MOTH_N};
use agfit::graph::{AncestralGraph, VertexSet};
use agfit::mseparation::m_connecting_path_exists;
use agfit::param::build_sigma;
use agfit::sim::{cycle_covariance, run_scaling_experiment, sample_mvn, CycleSpec, ExperimentReport};
use agfit::stats::SampleStats;
use common::{
    ancestral_graph_from_code, brute_force_m_connected, candidate_count, optimizer_log_likelihood,
    oracle_log_likelihood, partial_covariance, random_ancestral_graph, random_dag, random_maximal_graph,
    random_params, random_spd,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const MOTH_DEVIANCE: f64 = 10.22;
const MOTH_DEVIANCE_TOL: f64 = 0.02;
const MOTH_DF: usize = 5;
const MOTH_ITERATIONS: (usize, usize) = (4, 10);
const MOTH_RUNTIME: Duration = Duration::from_secs(1);
const ROUNDING_TOL: f64 = 1e-9;

const EXTENDED_DEVIANCE: f64 = 2.01;
const EXTENDED_DEVIANCE_TOL: f64 = 0.02;
const EXTENDED_DF: usize = 4;
const EXTENDED_PVALUE: f64 = 0.73;
const EXTENDED_PVALUE_TOL: f64 = 0.01;

const MOTH_PVALUE: f64 = 0.069;
const MOTH_PVALUE_TOL: f64 = 0.002;

const SCALING_P: [usize; 5] = [10, 20, 30, 40, 50];
const SCALING_REPLICATES: usize = 100;
const SCALING_RHO: f64 = 0.3;
const SCALING_TOLERANCE: f64 = 1e-6;
const SCALING_SEED: u64 = 20240601;
const SCALING_MEAN_ITERATIONS: (f64, f64) = (6.0, 9.0);
const SCALING_RUNTIME: Duration = Duration::from_secs(600);

const DAG_GRAPHS: usize = 200;
const DAG_MAX_P: usize = 6;
const DAG_TOL: f64 = 1e-10;

const MONOTONE_TOL: f64 = 1e-9;

const MARKOV_GRAPHS: usize = 20;
const MARKOV_PARAMS_PER_GRAPH: usize = 5;
const MARKOV_MAX_P: usize = 6;
const MARKOV_TOL: f64 = 1e-8;

const SEPARATION_EXHAUSTIVE_MAX_P: usize = 5;
const SEPARATION_RANDOM_GRAPHS: usize = 500;
const SEPARATION_RANDOM_P: usize = 6;

const GLOBAL_GRAPHS: usize = 50;
const GLOBAL_MAX_P: usize = 4;
const GLOBAL_RESTARTS: usize = 20;
const GLOBAL_TOL: f64 = 1e-6;

const DETERMINISM_P: [usize; 2] = [10, 20];
const DETERMINISM_REPLICATES: usize = 10;

#[rustfmt::skip]
const MOTH_SIGMA_HAT: [[f64; 5]; 5] = [
    [ 1.00,  0.00,  0.00, -0.02,  0.23],
    [ 0.00,  1.00,  0.05, -0.02,  0.01],
    [ 0.00,  0.05,  1.00, -0.47,  0.18],
    [-0.02, -0.02, -0.47,  1.00, -0.38],
    [ 0.23,  0.01,  0.18, -0.38,  1.01],
];

#[rustfmt::skip]
const MOTH_I_MINUS_B_HAT: [[f64; 5]; 5] = [
    [1.0, 0.0, 0.00, 0.00, 0.0],
    [0.0, 1.0, 0.00, 0.00, 0.0],
    [0.0, 0.0, 1.00, 0.00, 0.0],
    [0.0, 0.0, 0.47, 1.00, 0.0],
    [0.0, 0.0, 0.00, 0.38, 1.0],
];

#[rustfmt::skip]
const MOTH_OMEGA_HAT: [[f64; 5]; 5] = [
    [ 1.00, 0.0, 0.0, -0.02, 0.23],
    [ 0.00, 0.0, 0.0,  0.00, 0.00],
    [ 0.00, 0.0, 0.0,  0.00, 0.00],
    [-0.02, 0.0, 0.0,  0.78, 0.00],
    [ 0.23, 0.0, 0.0,  0.00, 0.86],
];

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Outcome { pass, detail }
    }
}

/// Worst per-cycle likelihood decrease seen across fits.
#[derive(Default)]
struct Monotonicity {
    fits: usize,
    worst: f64,
}

impl Monotonicity {
    fn record(&mut self, decrease: f64) {
        self.fits += 1;
        self.worst = self.worst.max(decrease);
    }

    fn record_fit(&mut self, res: &FitResult) {
        self.record(res.max_log_likelihood_decrease());
    }
}

fn moth_stats() -> SampleStats {
    SampleStats::from_covariance(moth_model_correlation(), MOTH_N, false).expect("moth correlation")
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Entries whose two-decimal rounding differs from the printed table.
fn rounding_mismatches(name: &str, got: &DMatrix<f64>, want: &[[f64; 5]; 5], out: &mut Vec<String>) {
    for (i, row) in want.iter().enumerate() {
        for (j, &w) in row.iter().enumerate() {
            if (round2(got[(i, j)]) - w).abs() > ROUNDING_TOL {
                out.push(format!("{name}[{i},{j}]={:.4} want {w:.2}", got[(i, j)]));
            }
        }
    }
}

fn criterion_moth(mono: &mut Monotonicity) -> Outcome {
    let stats = moth_stats();
    let start = Instant::now();
    let res = match fit(&moth_graph(), &stats, &FitConfig::default()) {
        Ok(r) => r,
        Err(e) => return Outcome::new(false, format!("fit failed: {e}")),
    };
    let elapsed = start.elapsed();
    mono.record_fit(&res);
    let mut bad = Vec::new();
    rounding_mismatches("Shat", res.sigma_hat.as_matrix(), &MOTH_SIGMA_HAT, &mut bad);
    rounding_mismatches("Bhat", &res.params.i_minus_beta(), &MOTH_I_MINUS_B_HAT, &mut bad);
    rounding_mismatches("Ohat", &res.params.omega_full(), &MOTH_OMEGA_HAT, &mut bad);
    let pass = (res.deviance - MOTH_DEVIANCE).abs() <= MOTH_DEVIANCE_TOL
        && res.df == MOTH_DF
        && bad.is_empty()
        && (MOTH_ITERATIONS.0..=MOTH_ITERATIONS.1).contains(&res.iterations)
        && res.converged
        && elapsed < MOTH_RUNTIME;
    let mut detail = format!(
        "dev={:.4} df={} it={} converged={} time={:.4}s",
        res.deviance,
        res.df,
        res.iterations,
        res.converged,
        elapsed.as_secs_f64()
    );
    if !bad.is_empty() {
        let _ = write!(detail, " mismatches: {}", bad.join(", "));
    }
    Outcome::new(pass, detail)
}

fn criterion_extended(mono: &mut Monotonicity) -> Outcome {
    let res = match fit(&moth_graph_extended(), &moth_stats(), &FitConfig::default()) {
        Ok(r) => r,
        Err(e) => return Outcome::new(false, format!("fit failed: {e}")),
    };
    mono.record_fit(&res);
    let pv = res.p_value().unwrap_or(f64::NAN);
    let pass = (res.deviance - EXTENDED_DEVIANCE).abs() <= EXTENDED_DEVIANCE_TOL
        && res.df == EXTENDED_DF
        && (pv - EXTENDED_PVALUE).abs() <= EXTENDED_PVALUE_TOL;
    Outcome::new(pass, format!("dev={:.4} df={} p={pv:.4}", res.deviance, res.df))
}

fn criterion_pvalue(mono: &mut Monotonicity) -> Outcome {
    let res = match fit(&moth_graph(), &moth_stats(), &FitConfig::default()) {
        Ok(r) => r,
        Err(e) => return Outcome::new(false, format!("fit failed: {e}")),
    };
    mono.record_fit(&res);
    let pv = res.p_value().unwrap_or(f64::NAN);
    Outcome::new((pv - MOTH_PVALUE).abs() <= MOTH_PVALUE_TOL, format!("p={pv:.5} dev={:.4}", res.deviance))
}

fn scaling_config() -> FitConfig {
    FitConfig { tolerance: SCALING_TOLERANCE, ..FitConfig::default() }
}

fn write_scaling_csv(report: &ExperimentReport) -> std::io::Result<PathBuf> {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("scaling.csv");
    let mut body = String::from("p,replicate,iterations,converged,cpu_seconds\n");
    for r in &report.records {
        let _ = writeln!(body, "{},{},{},{},{:.6}", r.p, r.replicate, r.iterations, r.converged, r.cpu_seconds);
    }
    std::fs::write(&path, body)?;
    Ok(path)
}

fn criterion_scaling(mono: &mut Monotonicity) -> (Outcome, Option<ExperimentReport>) {
    let start = Instant::now();
    let report =
        match run_scaling_experiment(&SCALING_P, SCALING_REPLICATES, SCALING_RHO, SCALING_SEED, &scaling_config()) {
            Ok(r) => r,
            Err(e) => return (Outcome::new(false, format!("experiment failed: {e}")), None),
        };
    let elapsed = start.elapsed();
    for r in &report.records {
        mono.record(r.max_log_likelihood_decrease);
    }
    let csv = write_scaling_csv(&report);
    let in_band =
        report.summaries.iter().all(|s| (SCALING_MEAN_ITERATIONS.0..=SCALING_MEAN_ITERATIONS.1).contains(&s.mean_iterations));
    let means: Vec<String> = report
        .summaries
        .iter()
        .map(|s| format!("p={}:{:.2}it/{:.4}s", s.p, s.mean_iterations, s.mean_cpu_seconds))
        .collect();
    let pass = in_band
        && report.failures() == 0
        && report.records.len() == SCALING_P.len() * SCALING_REPLICATES
        && elapsed < SCALING_RUNTIME
        && csv.is_ok();
    let csv_note = match &csv {
        Ok(path) => path.display().to_string(),
        Err(e) => format!("csv error: {e}"),
    };
    let detail = format!(
        "{} failures={} time={:.1}s csv={csv_note}",
        means.join(" "),
        report.failures(),
        elapsed.as_secs_f64()
    );
    (Outcome::new(pass, detail), Some(report))
}

fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}

fn updates_identical(a: &[IcfUpdate], b: &[IcfUpdate]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            x.vertex == y.vertex
                && x.beta.len() == y.beta.len()
                && x.beta.iter().zip(&y.beta).all(|(u, v)| u.0 == v.0 && u.1.to_bits() == v.1.to_bits())
                && x.omega_ii.to_bits() == y.omega_ii.to_bits()
                && x.conditional_variance.to_bits() == y.conditional_variance.to_bits()
        })
}

/// Regressions of two consecutive full cycles from the default start.
fn regressions_repeat(g: &AncestralGraph, stats: &SampleStats) -> agfit::Result<bool> {
    let un = g.un();
    let lambda = DMatrix::from_fn(un.len(), un.len(), |a, b| if a == b { 1.0 / stats.s()[(un[a], un[a])] } else { 0.0 });
    let mut state = IcfState::new(g, stats, IcfState::default_start(g, stats, lambda)?)?;
    let mut cycles = Vec::new();
    for _ in 0..2 {
        let mut ups = Vec::new();
        for i in g.not_un() {
            ups.push(state.step(i)?);
        }
        cycles.push(ups);
    }
    Ok(updates_identical(&cycles[0], &cycles[1]))
}

fn criterion_dag(mono: &mut Monotonicity) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let mut repeated = 0;
    let mut errors = Vec::new();
    for k in 0..DAG_GRAPHS {
        let p = rng.random_range(1..=DAG_MAX_P);
        let g = random_dag(p, rng.random_range(0.1..0.9), &mut rng);
        let stats = SampleStats::from_covariance(random_spd(p, &mut rng), p + 20, false).expect("spd");
        let cfg = FitConfig::default();
        let (a, b) = match (fit(&g, &stats, &cfg), fit_dag_closed_form(&g, &stats, &cfg)) {
            (Ok(a), Ok(b)) => (a, b),
            (a, b) => {
                errors.push(format!("graph {k}: {:?} {:?}", a.err(), b.err()));
                continue;
            }
        };
        mono.record_fit(&a);
        worst = worst
            .max(max_abs_diff(a.sigma_hat.as_matrix(), b.sigma_hat.as_matrix()))
            .max(max_abs_diff(a.beta_hat(), b.beta_hat()))
            .max(max_abs_diff(a.omega_hat(), b.omega_hat()))
            .max(max_abs_diff(a.lambda_hat(), b.lambda_hat()));
        match regressions_repeat(&g, &stats) {
            Ok(true) => repeated += 1,
            Ok(false) => errors.push(format!("graph {k}: regressions changed between cycles")),
            Err(e) => errors.push(format!("graph {k}: {e}")),
        }
    }
    let pass = worst <= DAG_TOL && repeated == DAG_GRAPHS && errors.is_empty();
    let mut detail = format!("graphs={DAG_GRAPHS} max|diff|={worst:.3e} identical regressions={repeated}");
    if let Some(e) = errors.first() {
        let _ = write!(detail, " first error: {e}");
    }
    Outcome::new(pass, detail)
}

fn criterion_monotone(mono: &Monotonicity) -> Outcome {
    Outcome::new(mono.worst <= MONOTONE_TOL, format!("fits={} worst decrease={:.3e}", mono.fits, mono.worst))
}

fn subsets(others: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    (0..(1u32 << others.len()))
        .map(move |bits| others.iter().enumerate().filter(|(k, _)| bits >> k & 1 == 1).map(|(_, &v)| v).collect())
}

fn criterion_markov() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut statements = 0;
    let mut worst = 0.0f64;
    for _ in 0..MARKOV_GRAPHS {
        let p = rng.random_range(3..=MARKOV_MAX_P);
        let g = random_ancestral_graph(p, rng.random_range(0.2..0.6), &mut rng);
        for _ in 0..MARKOV_PARAMS_PER_GRAPH {
            let sigma = build_sigma(&random_params(&g, &mut rng)).expect("valid parameters").into_inner();
            for i in 0..p {
                for j in (i + 1)..p {
                    let others: Vec<usize> = (0..p).filter(|&v| v != i && v != j).collect();
                    for c in subsets(&others) {
                        let set: VertexSet = c.iter().copied().collect();
                        if !m_connecting_path_exists(&g, i, j, &set).expect("valid query") {
                            statements += 1;
                            worst = worst.max(partial_covariance(&sigma, i, j, &c).abs());
                        }
                    }
                }
            }
        }
    }
    Outcome::new(
        worst < MARKOV_TOL && statements > 0,
        format!(
            "graphs={MARKOV_GRAPHS} params={} separations={statements} max|pcov|={worst:.3e}",
            MARKOV_GRAPHS * MARKOV_PARAMS_PER_GRAPH
        ),
    )
}

/// Number of `(i, j, C)` queries on which reachability and path enumeration
/// disagree, and the number of queries checked.
fn separation_disagreements(g: &AncestralGraph) -> (usize, usize) {
    let p = g.p();
    let mut bad = 0;
    let mut total = 0;
    for i in 0..p {
        for j in (i + 1)..p {
            let others: Vec<usize> = (0..p).filter(|&v| v != i && v != j).collect();
            for c in subsets(&others) {
                let mut mask = vec![false; p];
                for &v in &c {
                    mask[v] = true;
                }
                let set: VertexSet = c.iter().copied().collect();
                let fast = m_connecting_path_exists(g, i, j, &set).expect("valid query");
                if fast != brute_force_m_connected(g, i, j, &mask) {
                    bad += 1;
                }
                total += 1;
            }
        }
    }
    (bad, total)
}

fn criterion_separation() -> Outcome {
    let mut graphs = 0;
    let mut bad = 0;
    let mut total = 0;
    for p in 1..=SEPARATION_EXHAUSTIVE_MAX_P {
        let (g, b, t) = (0..candidate_count(p))
            .into_par_iter()
            .filter_map(|code| ancestral_graph_from_code(p, code))
            .map(|g| {
                let (b, t) = separation_disagreements(&g);
                (1usize, b, t)
            })
            .reduce(|| (0, 0, 0), |x, y| (x.0 + y.0, x.1 + y.1, x.2 + y.2));
        graphs += g;
        bad += b;
        total += t;
    }
    let exhaustive = graphs;
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let random: Vec<AncestralGraph> = (0..SEPARATION_RANDOM_GRAPHS)
        .map(|_| {
            let d = rng.random_range(0.1..0.9);
            random_ancestral_graph(SEPARATION_RANDOM_P, d, &mut rng)
        })
        .collect();
    let (b, t) = random.par_iter().map(separation_disagreements).reduce(|| (0, 0), |x, y| (x.0 + y.0, x.1 + y.1));
    bad += b;
    total += t;
    Outcome::new(
        bad == 0,
        format!(
            "exhaustive graphs={exhaustive} random p={SEPARATION_RANDOM_P} graphs={SEPARATION_RANDOM_GRAPHS} queries={total} disagreements={bad}"
        ),
    )
}

fn criterion_global() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    let cases: Vec<(AncestralGraph, SampleStats, u64)> = (0..GLOBAL_GRAPHS)
        .map(|_| {
            let p = rng.random_range(2..=GLOBAL_MAX_P);
            let g = random_maximal_graph(p, rng.random_range(0.2..0.9), &mut rng);
            let stats = SampleStats::from_covariance(random_spd(p, &mut rng), p + 30, false).expect("spd");
            (g, stats, rng.random())
        })
        .collect();
    let gaps: Vec<Result<f64, String>> = cases
        .par_iter()
        .map(|(g, stats, seed)| {
            let icf = fit(g, stats, &FitConfig::default()).map_err(|e| e.to_string())?;
            let ll = oracle_log_likelihood(icf.sigma_hat.as_matrix(), stats);
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            Ok(optimizer_log_likelihood(g, stats, GLOBAL_RESTARTS, &mut rng) - ll)
        })
        .collect();
    let errors: Vec<&String> = gaps.iter().filter_map(|r| r.as_ref().err()).collect();
    let worst = gaps.iter().filter_map(|r| r.as_ref().ok()).fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let below = gaps.iter().filter_map(|r| r.as_ref().ok()).fold(f64::INFINITY, |a, &b| a.min(b));
    let pass = errors.is_empty() && worst <= GLOBAL_TOL;
    let mut detail = format!(
        "graphs={GLOBAL_GRAPHS} restarts={GLOBAL_RESTARTS} max(optimizer - icf)={worst:.3e} min={below:.3e}"
    );
    if let Some(e) = errors.first() {
        let _ = write!(detail, " first error: {e}");
    }
    Outcome::new(pass, detail)
}

fn criterion_determinism(scaling: Option<&ExperimentReport>) -> Outcome {
    let sigma = cycle_covariance(CycleSpec::new(12, SCALING_RHO).expect("spec")).expect("pd").into_inner();
    let a = sample_mvn(&sigma, 42, 99).expect("sample");
    let b = sample_mvn(&sigma, 42, 99).expect("sample");
    let data_identical = a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits());
    let run =
        || run_scaling_experiment(&DETERMINISM_P, DETERMINISM_REPLICATES, SCALING_RHO, SCALING_SEED, &scaling_config());
    let (first, second) = match (run(), run()) {
        (Ok(x), Ok(y)) => (x, y),
        (x, y) => return Outcome::new(false, format!("experiment failed: {:?} {:?}", x.err(), y.err())),
    };
    let counts_identical = first.iteration_counts() == second.iteration_counts();
    let deviances_identical =
        first.records.iter().zip(&second.records).all(|(x, y)| x.deviance.to_bits() == y.deviance.to_bits());
    // replicate streams do not depend on how many replicates run
    let subset_consistent = match scaling {
        Some(full) => first.records.iter().all(|r| {
            full.records
                .iter()
                .find(|f| f.p == r.p && f.replicate == r.replicate)
                .is_some_and(|f| f.iterations == r.iterations && f.deviance.to_bits() == r.deviance.to_bits())
        }),
        None => false,
    };
    Outcome::new(
        data_identical && counts_identical && deviances_identical && subset_consistent,
        format!(
            "data bitwise={data_identical} iterations={counts_identical} deviances={deviances_identical} subset of scaling run={subset_consistent}"
        ),
    )
}

fn report(n: usize, name: &str, outcome: &Outcome, elapsed: Duration) -> bool {
    let tag = if outcome.pass { "PASS" } else { "FAIL" };
    println!("[{tag}] criterion {n:>2} {name} ({:.1}s): {}", elapsed.as_secs_f64(), outcome.detail);
    outcome.pass
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed())
}

fn main() {
    // libtest-style filter arguments are ignored; `--list` reports nothing
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut mono = Monotonicity::default();
    let mut all = true;

    let (o, t) = timed(|| criterion_moth(&mut mono));
    all &= report(1, "moth fit reproduction", &o, t);
    let (o, t) = timed(|| criterion_extended(&mut mono));
    all &= report(2, "extended moth model", &o, t);
    let (o, t) = timed(|| criterion_pvalue(&mut mono));
    all &= report(3, "moth p-value", &o, t);
    let ((o, scaling), t) = timed(|| criterion_scaling(&mut mono));
    all &= report(4, "scaling experiment", &o, t);
    let (o, t) = timed(|| criterion_dag(&mut mono));
    all &= report(5, "DAG closed-form equivalence", &o, t);
    let o = criterion_monotone(&mono);
    all &= report(6, "likelihood monotonicity", &o, Duration::ZERO);
    let (o, t) = timed(criterion_markov);
    all &= report(7, "Markov soundness", &o, t);
    let (o, t) = timed(criterion_separation);
    all &= report(8, "m-separation oracle", &o, t);
    let (o, t) = timed(criterion_global);
    all &= report(9, "small-instance global check", &o, t);
    let (o, t) = timed(|| criterion_determinism(scaling.as_ref()));
    all &= report(10, "determinism", &o, t);

    if all {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: FAILED");
        std::process::exit(1);
    }
}
