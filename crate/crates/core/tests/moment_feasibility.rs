//! Full-size (T = 3, level 3) moment-feasibility solves: one known-infeasible
//! point-mass target and one known-feasible exact mixture target.

use homsieve_core::model::joint_observable_polys;
use homsieve_core::poly::NUM_VARS;
use homsieve_core::relaxation::{test_probabilities, FeasibilityConfig, Verdict};
use homsieve_core::statistics::encode_outcome;

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

// Joint outcome probabilities of a single parameter point, by forward chains
// (independent of the polynomial machinery).
fn exact_outcome_probs(x: &[f64; NUM_VARS], t: usize) -> Vec<f64> {
    (0..1usize << (2 * t))
        .map(|j| {
            let (a, b) = homsieve_core::statistics::decode_outcome(j, t);
            chain_prob(&a, x[0], x[1], x[2]) * chain_prob(&b, x[3], x[4], x[5])
        })
        .collect()
}

#[test]
fn point_mass_target_is_rejected_at_level_3() {
    let start = std::time::Instant::now();
    let obs = joint_observable_polys(3).unwrap();
    let j = encode_outcome(&[1, 1, -1], &[1, 1, -1]).unwrap();
    let mut y = vec![0.0; 64];
    y[j] = 1.0;
    let out = test_probabilities(&y, obs.polys(), &FeasibilityConfig::default()).unwrap();
    eprintln!(
        "point-mass solve: verdict {:?} in {} iterations, {:.1?} ({})",
        out.verdict,
        out.solver_iterations,
        start.elapsed(),
        out.diagnostics
    );
    assert_eq!(out.verdict, Verdict::Reject);
    let cert = out.certificate.expect("certificate present on REJECT");
    assert!(cert.margin >= 1e-6);
    assert!(cert.identity_residual <= 1e-8);
}

#[test]
fn exact_two_point_mixture_is_accepted_at_level_3() {
    let start = std::time::Instant::now();
    let obs = joint_observable_polys(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(424242);
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
    let out = test_probabilities(&y, obs.polys(), &FeasibilityConfig::default()).unwrap();
    eprintln!(
        "mixture solve: verdict {:?} in {} iterations, {:.1?} ({})",
        out.verdict,
        out.solver_iterations,
        start.elapsed(),
        out.diagnostics
    );
    assert_eq!(out.verdict, Verdict::Accept);
}
