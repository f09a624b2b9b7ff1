//! Synthetic data sources: a citation-record generator (real bibliographic
//! corpora are typically proprietary, so ingest is exercised against
//! generated ones) and a preferential-attachment coauthor graph for the
//! semi-synthetic contagion experiment.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::network::{CitationRecord, CoauthorGraph, YearRange};

/// Configuration of the synthetic citation-record generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub num_authors: usize,
    pub years: YearRange,
    pub papers_per_year: usize,
    /// Inclusive range of authors per paper.
    pub authors_per_paper: (usize, usize),
    /// Size of the pool of citable works.
    pub reference_pool: usize,
    /// Inclusive range of references per paper.
    pub refs_per_paper: (usize, usize),
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            seed: 0,
            num_authors: 100,
            years: YearRange::new(1950, 2010),
            papers_per_year: 40,
            authors_per_paper: (1, 4),
            reference_pool: 200,
            refs_per_paper: (0, 8),
        }
    }
}

/// Generate a random citation corpus: papers with random author sets and
/// random reference lists, uniformly spread over the year range.
pub fn generate_records(cfg: &SyntheticConfig) -> Result<Vec<CitationRecord>> {
    if cfg.num_authors == 0 {
        return Err(Error::InvalidInput("need at least one author".into()));
    }
    if cfg.years.is_empty() {
        return Err(Error::InvalidInput(format!(
            "empty year range {}",
            cfg.years
        )));
    }
    if cfg.authors_per_paper.0 == 0 || cfg.authors_per_paper.0 > cfg.authors_per_paper.1 {
        return Err(Error::InvalidInput(
            "invalid authors-per-paper range".into(),
        ));
    }
    if cfg.refs_per_paper.0 > cfg.refs_per_paper.1 {
        return Err(Error::InvalidInput("invalid refs-per-paper range".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let width = cfg.num_authors.to_string().len().max(4);
    let author_id = |i: usize| format!("a{i:0width$}");
    let ref_width = cfg.reference_pool.to_string().len().max(4);
    let ref_id = |i: usize| format!("r{i:0ref_width$}");

    let mut records = Vec::new();
    let mut paper_counter = 0usize;
    for year in cfg.years.start..cfg.years.end {
        for _ in 0..cfg.papers_per_year {
            let k = rng.random_range(cfg.authors_per_paper.0..=cfg.authors_per_paper.1);
            let k = k.min(cfg.num_authors);
            let mut authors = Vec::with_capacity(k);
            while authors.len() < k {
                let cand = author_id(rng.random_range(0..cfg.num_authors));
                if !authors.contains(&cand) {
                    authors.push(cand);
                }
            }
            let nrefs = if cfg.reference_pool == 0 {
                0
            } else {
                rng.random_range(cfg.refs_per_paper.0..=cfg.refs_per_paper.1)
            };
            let mut references = Vec::with_capacity(nrefs);
            while references.len() < nrefs.min(cfg.reference_pool) {
                let cand = ref_id(rng.random_range(0..cfg.reference_pool));
                if !references.contains(&cand) {
                    references.push(cand);
                }
            }
            records.push(CitationRecord {
                paper_id: format!("p{paper_counter:06}"),
                authors,
                year,
                references,
            });
            paper_counter += 1;
        }
    }
    Ok(records)
}

/// Barabasi-Albert preferential attachment: each new node links to
/// `links_per_node` distinct existing nodes, chosen proportionally to degree.
/// Edges carry `edge_year`. Node ids are zero-padded so lexicographic order
/// matches creation order.
pub fn preferential_attachment(
    num_nodes: usize,
    links_per_node: usize,
    edge_year: i32,
    seed: u64,
) -> Result<CoauthorGraph> {
    if links_per_node == 0 {
        return Err(Error::InvalidInput(
            "links_per_node must be at least 1".into(),
        ));
    }
    if num_nodes < links_per_node + 1 {
        return Err(Error::InvalidInput(format!(
            "need more than {links_per_node} nodes, got {num_nodes}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = num_nodes.to_string().len();
    let node_id = |i: usize| format!("n{i:0width$}");

    let mut graph = CoauthorGraph::default();
    // Degree-weighted sampling via the repeated-endpoints trick.
    let mut endpoints: Vec<usize> = Vec::new();

    // Seed clique over the first links_per_node + 1 nodes.
    let m0 = links_per_node + 1;
    for i in 0..m0 {
        for j in i + 1..m0 {
            graph.add_edge(&node_id(i), &node_id(j), edge_year);
            endpoints.push(i);
            endpoints.push(j);
        }
    }

    for new in m0..num_nodes {
        let mut targets: Vec<usize> = Vec::with_capacity(links_per_node);
        while targets.len() < links_per_node {
            let t = endpoints[rng.random_range(0..endpoints.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for t in targets {
            graph.add_edge(&node_id(new), &node_id(t), edge_year);
            endpoints.push(new);
            endpoints.push(t);
        }
    }
    Ok(graph)
}
