//! Semi-synthetic contagion source: copy dynamics on a dominance-directed
//! coauthor graph.
//!
//! Every node starts at ±1 with equal probability. In each time step `M` arcs
//! are picked uniformly at random **with replacement** and applied
//! sequentially: for a picked arc `u -> v` the nondominant endpoint copies the
//! dominant one (`state(v) := state(u)`), so a later pick within the same step
//! sees earlier copies. The random stream is ChaCha8 seeded from the config;
//! a run is fully determined by `(seed, graph, config)`.

use std::collections::BTreeMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::network::{
    DirectedInfluenceGraph, NodeStateSeries, SeriesMeta, TimeWindow, UniverseRule,
};

/// Reference id attached to simulated author states; the simulation tracks a
/// single notional reference per author.
pub const SIM_REFERENCE: &str = "sim";

/// Name of the random number generator algorithm; recorded so runs can be
/// replicated bitwise within this implementation.
pub const RNG_ALGORITHM: &str = "ChaCha8";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimulationConfig {
    pub seed: u64,
    /// Number of time slices (T).
    pub num_slices: usize,
    /// Arc picks per step, `None` meaning the number of arcs.
    pub picks_per_step: Option<usize>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            seed: 0,
            num_slices: 3,
            picks_per_step: None,
        }
    }
}

impl SimulationConfig {
    fn validate(&self, arc_count: usize) -> Result<usize> {
        if self.num_slices < 2 {
            return Err(Error::InvalidInput(format!(
                "simulation needs at least 2 slices, got {}",
                self.num_slices
            )));
        }
        let picks = self.picks_per_step.unwrap_or(arc_count);
        if picks == 0 && arc_count > 0 {
            return Err(Error::InvalidInput(
                "picks_per_step must be at least 1".into(),
            ));
        }
        Ok(picks)
    }
}

/// Independent ±1 assignment for every node, equal probability, reproducible
/// per seed through the supplied generator.
pub fn init_states(graph: &DirectedInfluenceGraph, rng: &mut ChaCha8Rng) -> BTreeMap<String, i8> {
    graph
        .nodes()
        .iter()
        .map(|n| (n.clone(), if rng.random::<bool>() { 1 } else { -1 }))
        .collect()
}

/// One step of the copy dynamics: `picks` arcs sampled uniformly with
/// replacement, applied in order. A graph without arcs leaves the states
/// unchanged.
pub fn step(
    states: &mut BTreeMap<String, i8>,
    arcs: &[(String, String)],
    picks: usize,
    rng: &mut ChaCha8Rng,
) {
    if arcs.is_empty() {
        return;
    }
    for _ in 0..picks {
        let (from, to) = &arcs[rng.random_range(0..arcs.len())];
        let dominant = states[from];
        states.insert(to.clone(), dominant);
    }
}

/// Run the dynamics for `config.num_slices` slices: slice 1 is the random
/// initialization, each later slice the result of one step.
pub fn run(graph: &DirectedInfluenceGraph, config: &SimulationConfig) -> Result<NodeStateSeries> {
    let picks = config.validate(graph.arc_count())?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let arcs: Vec<(String, String)> = graph.arcs().cloned().collect();

    let t = config.num_slices;
    let mut states = init_states(graph, &mut rng);
    let mut history: BTreeMap<String, Vec<i8>> =
        states.iter().map(|(n, &s)| (n.clone(), vec![s])).collect();
    for _ in 1..t {
        step(&mut states, &arcs, picks, &mut rng);
        for (node, seq) in history.iter_mut() {
            seq.push(states[node]);
        }
    }

    let window = TimeWindow::partitioned(0, t as i32, t)?;
    let meta = SeriesMeta {
        seed: Some(config.seed),
        picks_per_step: Some(picks as u64),
        source: format!("simulator/{RNG_ALGORITHM}"),
    };
    let mut series = NodeStateSeries::new(window, meta, UniverseRule::SharedReferences);
    for (node, seq) in history {
        series.insert(node, SIM_REFERENCE, seq)?;
    }
    Ok(series)
}
