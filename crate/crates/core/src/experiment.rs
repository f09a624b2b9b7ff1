//! End-to-end experiment driver: lay windows over a corpus, run the full
//! pipeline (graph, states, statistics, relaxation, solve, validate) per
//! window and emit machine-readable reports.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::sym_eigen;
use crate::model::{joint_observable_polys, ObservableSet};
use crate::network::{
    author_reference_states, build_coauthor_graph, direct_by_degree, window_slices, CitationRecord,
    DirectedInfluenceGraph, NodeStateSeries, TimeWindow, WindowScheme, YearRange,
};
use crate::relaxation::{
    test_distribution, CertTolerances, FeasibilityConfig, SosCertificate, Verdict,
};
use crate::statistics::pair_sequence_counts;

/// Experiment-wide configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub corpus: YearRange,
    pub scheme: WindowScheme,
    /// Number of slices per window (T).
    pub num_slices: usize,
    pub feasibility: FeasibilityConfig,
    /// Worker threads for independent windows.
    pub jobs: usize,
}

impl ExperimentConfig {
    pub fn new(corpus: YearRange, scheme: WindowScheme) -> Self {
        ExperimentConfig {
            corpus,
            scheme,
            num_slices: 3,
            feasibility: FeasibilityConfig::default(),
            jobs: 1,
        }
    }
}

/// Condensed certificate data embedded in a report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateSummary {
    pub margin: f64,
    pub identity_residual: f64,
    pub min_gram_eigenvalue: f64,
}

impl CertificateSummary {
    pub fn from_certificate(cert: &SosCertificate) -> Self {
        let mut min_eig = f64::INFINITY;
        let (eigs, _) = sym_eigen(&cert.gram_moment);
        if let Some(&e) = eigs.first() {
            min_eig = min_eig.min(e);
        }
        for g in &cert.gram_localizing {
            let (eigs, _) = sym_eigen(g);
            if let Some(&e) = eigs.first() {
                min_eig = min_eig.min(e);
            }
        }
        CertificateSummary {
            margin: cert.margin,
            identity_residual: cert.identity_residual,
            min_gram_eigenvalue: min_eig,
        }
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub level: usize,
    #[serde(rename = "T")]
    pub num_slices: usize,
    pub epsilon: f64,
    pub min_samples: u64,
    pub tolerances: CertTolerances,
    pub solver: crate::sdp::SolverOptions,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<WindowScheme>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_digest: Option<String>,
}

/// Result of one windowed feasibility test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub window: TimeWindow,
    pub sample_total: u64,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateSummary>,
    pub diagnostics: String,
    pub solver_iterations: usize,
    pub provenance: Provenance,
    /// Pipeline error for this window, when the stage failed outright.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn provenance(config: &ExperimentConfig, digest: Option<String>, seed: Option<u64>) -> Provenance {
    Provenance {
        level: config.feasibility.level,
        num_slices: config.num_slices,
        epsilon: config.feasibility.epsilon,
        min_samples: config.feasibility.min_samples,
        tolerances: config.feasibility.tolerances,
        solver: config.feasibility.solver,
        scheme: Some(config.scheme),
        seed,
        input_digest: digest,
    }
}

/// Run the feasibility test on one window of a record corpus.
///
/// The coauthor graph is rebuilt from the window's first slice (edges come
/// from coauthorship at the initial time step), directed by degree, and the
/// pooled pair statistics feed the configured relaxation.
pub fn test_window(
    records: &[CitationRecord],
    window: &TimeWindow,
    observables: &ObservableSet,
    config: &ExperimentConfig,
    digest: Option<String>,
) -> RunReport {
    let prov = provenance(config, digest, None);
    let graph = build_coauthor_graph(records, window.slices[0]);
    let directed = direct_by_degree(&graph);
    let series = author_reference_states(records, &graph, window);
    let dist = match pair_sequence_counts(&series, &directed) {
        Ok(d) => d,
        Err(e) => {
            return RunReport {
                window: window.clone(),
                sample_total: 0,
                verdict: Verdict::Unknown,
                certificate: None,
                diagnostics: String::new(),
                solver_iterations: 0,
                provenance: prov,
                error: Some(e.to_string()),
            }
        }
    };
    let total = dist.total();
    match test_distribution(&dist, observables, &config.feasibility) {
        Ok(outcome) => RunReport {
            window: window.clone(),
            sample_total: total,
            verdict: outcome.verdict,
            certificate: outcome
                .certificate
                .as_ref()
                .map(CertificateSummary::from_certificate),
            diagnostics: outcome.diagnostics,
            solver_iterations: outcome.solver_iterations,
            provenance: prov,
            error: None,
        },
        Err(e) => RunReport {
            window: window.clone(),
            sample_total: total,
            verdict: Verdict::Unknown,
            certificate: None,
            diagnostics: String::new(),
            solver_iterations: 0,
            provenance: prov,
            error: Some(e.to_string()),
        },
    }
}

/// Run every window of the configured scheme; outputs are ordered by window
/// start year regardless of worker scheduling. Per-window failures land in
/// the report's `error` field and do not abort the run.
pub fn run_windows(
    records: &[CitationRecord],
    config: &ExperimentConfig,
    digest: Option<String>,
) -> Result<Vec<RunReport>> {
    let plan = window_slices(config.corpus, config.scheme, config.num_slices)?;
    let observables = joint_observable_polys(config.num_slices)?;
    let jobs = config.jobs.max(1).min(plan.windows.len().max(1));

    if jobs <= 1 || plan.windows.len() <= 1 {
        return Ok(plan
            .windows
            .iter()
            .map(|w| test_window(records, w, &observables, config, digest.clone()))
            .collect());
    }

    let mut indexed: Vec<(usize, RunReport)> = Vec::with_capacity(plan.windows.len());
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for worker in 0..jobs {
            let windows = &plan.windows;
            let observables = &observables;
            let digest = digest.clone();
            handles.push(scope.spawn(move || {
                let mut out = Vec::new();
                let mut idx = worker;
                while idx < windows.len() {
                    out.push((
                        idx,
                        test_window(records, &windows[idx], observables, config, digest.clone()),
                    ));
                    idx += jobs;
                }
                out
            }));
        }
        for h in handles {
            indexed.extend(h.join().expect("window worker panicked"));
        }
    });
    indexed.sort_by_key(|(i, _)| *i);
    Ok(indexed.into_iter().map(|(_, r)| r).collect())
}

/// Run the feasibility test on a prebuilt state series (e.g. simulator
/// output) against a directed influence graph.
pub fn test_series(
    series: &NodeStateSeries,
    graph: &DirectedInfluenceGraph,
    config: &ExperimentConfig,
    digest: Option<String>,
) -> Result<RunReport> {
    let observables = joint_observable_polys(series.num_slices())?;
    let prov = provenance(config, digest, series.meta().seed);
    let dist = pair_sequence_counts(series, graph)?;
    let total = dist.total();
    let outcome = test_distribution(&dist, &observables, &config.feasibility)?;
    Ok(RunReport {
        window: series.window().clone(),
        sample_total: total,
        verdict: outcome.verdict,
        certificate: outcome
            .certificate
            .as_ref()
            .map(CertificateSummary::from_certificate),
        diagnostics: outcome.diagnostics,
        solver_iterations: outcome.solver_iterations,
        provenance: prov,
        error: None,
    })
}

/// FNV-1a digest of input bytes, for report provenance.
pub fn digest_bytes(bytes: &[u8]) -> String {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    format!("fnv1a64:{hash:016x}")
}
