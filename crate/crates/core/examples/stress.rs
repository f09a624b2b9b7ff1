//! Scratch driver for the two expensive experiment shapes: exact-mixture
//! acceptance and copy-dynamics rejection, across many seeds. Reports the
//! worst witness measures so tolerance headroom is visible.

use homsieve_core::model::joint_observable_polys;
use homsieve_core::network::direct_by_degree;
use homsieve_core::poly::NUM_VARS;
use homsieve_core::relaxation::{
    test_distribution, test_probabilities, FeasibilityConfig, Verdict,
};
use homsieve_core::simulator::{run, SimulationConfig};
use homsieve_core::statistics::{decode_outcome, pair_sequence_counts, EmpiricalDistribution};
use homsieve_core::synthetic::preferential_attachment;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn chain_prob(seq: &[i8], p0: f64, p_plus: f64, p_minus: f64) -> f64 {
    let mut p = if seq[0] == 1 { p0 } else { 1.0 - p0 };
    for w in seq.windows(2) {
        p *= match (w[0], w[1]) {
            (1, -1) => p_plus,
            (1, 1) => 1.0 - p_plus,
            (-1, 1) => p_minus,
            (-1, -1) => 1.0 - p_minus,
            _ => unreachable!(),
        };
    }
    p
}

fn exact_outcome_probs(x: &[f64; NUM_VARS], t: usize) -> Vec<f64> {
    (0..1usize << (2 * t))
        .map(|j| {
            let (a, b) = decode_outcome(j, t);
            chain_prob(&a, x[0], x[1], x[2]) * chain_prob(&b, x[3], x[4], x[5])
        })
        .collect()
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let draws: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let master_seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(20260101);

    let obs = joint_observable_polys(3).unwrap();
    let config = FeasibilityConfig::default();

    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    let mut accepts = 0;
    let t0 = std::time::Instant::now();
    for draw in 0..draws {
        let mut x1 = [0.0; NUM_VARS];
        let mut x2 = [0.0; NUM_VARS];
        for v in &mut x1 {
            *v = rng.random_range(0.0..1.0);
        }
        for v in &mut x2 {
            *v = rng.random_range(0.0..1.0);
        }
        let y: Vec<f64> = exact_outcome_probs(&x1, 3)
            .iter()
            .zip(exact_outcome_probs(&x2, 3))
            .map(|(a, b)| 0.5 * a + 0.5 * b)
            .collect();
        let out = test_probabilities(&y, obs.polys(), &config).unwrap();
        eprintln!(
            "mixture {draw:3}: {} ({} iters) {}",
            out.verdict, out.solver_iterations, out.diagnostics
        );
        if out.verdict == Verdict::Accept {
            accepts += 1;
        }
    }
    eprintln!(
        "== mixtures: {accepts}/{draws} accept in {:.1?}",
        t0.elapsed()
    );

    let graph = preferential_attachment(1000, 2, 0, 42).unwrap();
    let directed = direct_by_degree(&graph);
    let arcs = directed.arc_count();
    let replicates = 10_000usize.div_ceil(arcs);
    let t1 = std::time::Instant::now();
    let mut rejects = 0;
    for seed in 0..10u64 {
        let mut pooled = EmpiricalDistribution::new(3);
        for rep in 0..replicates {
            let cfg = SimulationConfig {
                seed: seed * 1000 + rep as u64,
                num_slices: 3,
                picks_per_step: None,
            };
            let series = run(&directed, &cfg).unwrap();
            pooled
                .merge(&pair_sequence_counts(&series, &directed).unwrap())
                .unwrap();
        }
        let out = test_distribution(&pooled, &obs, &config).unwrap();
        eprintln!(
            "seed {seed}: {} ({} iters) {}",
            out.verdict, out.solver_iterations, out.diagnostics
        );
        if out.verdict == Verdict::Reject {
            rejects += 1;
        }
    }
    eprintln!("== contagion: {rejects}/10 reject in {:.1?}", t1.elapsed());
}
