//! The static latent-homophily polynomial model.
//!
//! Each author's citation state follows a two-state chain whose parameters are
//! fixed over time: an initial probability of being in the `+` state and two
//! flip probabilities. For a coauthor pair the six parameters are
//!
//! ```text
//! x = (alpha_0, alpha_plus, alpha_minus, beta_0, beta_plus, beta_minus)
//! ```
//!
//! where `alpha_plus` is the probability that author A flips `+ -> -`,
//! `alpha_minus` the probability of `- -> +`, and `alpha_0` the probability
//! that A starts in `+` (likewise `beta_*` for author B). Note the convention:
//! `alpha_plus` is indexed by the state *left*, so `(1 - alpha_plus)` multiplies
//! stays at `+`. The probability of a whole ±1 sequence is then a polynomial
//! in `x`, and the probability of a joint outcome for a pair is the product of
//! the two sequence polynomials. A hidden-variable explanation of observed
//! data is a probability measure over `x` whose mixture of these polynomials
//! reproduces the observed outcome distribution.

use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{one_minus, Polynomial, NUM_VARS};
use crate::statistics::{decode_outcome, outcome_count};

/// Index of `alpha_0` in the parameter vector.
pub const ALPHA_0: usize = 0;
/// Index of `alpha_plus` (flip `+ -> -` for author A).
pub const ALPHA_PLUS: usize = 1;
/// Index of `alpha_minus` (flip `- -> +` for author A).
pub const ALPHA_MINUS: usize = 2;
/// Index of `beta_0`.
pub const BETA_0: usize = 3;
/// Index of `beta_plus`.
pub const BETA_PLUS: usize = 4;
/// Index of `beta_minus`.
pub const BETA_MINUS: usize = 5;

/// A point in parameter space; feasible models live in the unit box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector(pub [f64; NUM_VARS]);

impl ParameterVector {
    /// All coordinates within `[0, 1]`, which is exactly the semialgebraic set K.
    pub fn in_unit_box(&self) -> bool {
        self.0.iter().all(|&v| (0.0..=1.0).contains(&v))
    }
}

/// Which endpoint of a directed coauthor arc a sequence belongs to; selects
/// the alpha or beta block of the parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    A,
    B,
}

impl Role {
    fn var_offset(self) -> usize {
        match self {
            Role::A => 0,
            Role::B => 3,
        }
    }
}

/// Transition counts of a ±1 sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransitionCounters {
    /// Flips `+ -> -` (exponent of `alpha_plus`).
    pub flips_from_plus: u32,
    /// Flips `- -> +` (exponent of `alpha_minus`).
    pub flips_from_minus: u32,
    /// Stays `+ -> +` (exponent of `1 - alpha_plus`).
    pub stays_at_plus: u32,
    /// Stays `- -> -` (exponent of `1 - alpha_minus`).
    pub stays_at_minus: u32,
}

impl TransitionCounters {
    /// Always `T - 1` for a length-`T` sequence.
    pub fn total(&self) -> u32 {
        self.flips_from_plus + self.flips_from_minus + self.stays_at_plus + self.stays_at_minus
    }
}

fn check_sequence(seq: &[i8]) -> Result<()> {
    if seq.len() < 2 {
        return Err(Error::SequenceTooShort {
            need: 2,
            got: seq.len(),
        });
    }
    for &s in seq {
        if s != 1 && s != -1 {
            return Err(Error::InvalidState(s));
        }
    }
    Ok(())
}

/// Count transitions via the closed-form sums
/// `F± = Σ ¼(1 ± A_t)(1 − A_{t+1} A_t)` and
/// `S± = Σ ¼(1 ± A_t)(1 + A_{t+1} A_t)`,
/// which are exact integers for ±1 states.
pub fn transition_counters(seq: &[i8]) -> Result<TransitionCounters> {
    check_sequence(seq)?;
    let mut c = TransitionCounters {
        flips_from_plus: 0,
        flips_from_minus: 0,
        stays_at_plus: 0,
        stays_at_minus: 0,
    };
    for w in seq.windows(2) {
        let (a, next) = (w[0] as i32, w[1] as i32);
        c.flips_from_plus += ((1 + a) * (1 - next * a) / 4) as u32;
        c.flips_from_minus += ((1 - a) * (1 - next * a) / 4) as u32;
        c.stays_at_plus += ((1 + a) * (1 + next * a) / 4) as u32;
        c.stays_at_minus += ((1 - a) * (1 + next * a) / 4) as u32;
    }
    Ok(c)
}

/// Exact polynomial giving the probability of a ±1 sequence under the chain,
/// expanded into sparse form:
///
/// ```text
/// a_plus^F+ * a_minus^F- * (1-a_minus)^S- * (1-a_plus)^S+
///   * a_0^[A_1 = +] * (1-a_0)^[A_1 = -]
/// ```
///
/// in the beta variables when `role` is [`Role::B`]. Degree is at most the
/// sequence length.
pub fn sequence_probability_poly(seq: &[i8], role: Role) -> Result<Polynomial> {
    check_sequence(seq)?;
    let off = role.var_offset();
    let initial = Polynomial::var(off);
    let flip_from_plus = Polynomial::var(off + 1);
    let flip_from_minus = Polynomial::var(off + 2);

    let mut poly = if seq[0] == 1 {
        initial.clone()
    } else {
        one_minus(&initial)
    };
    for w in seq.windows(2) {
        let factor = match (w[0], w[1]) {
            (1, -1) => flip_from_plus.clone(),
            (-1, 1) => flip_from_minus.clone(),
            (1, 1) => one_minus(&flip_from_plus),
            (-1, -1) => one_minus(&flip_from_minus),
            _ => unreachable!("states validated"),
        };
        poly = poly.mul(&factor);
    }
    Ok(poly)
}

/// The indicator observables of all joint outcomes and their polynomials
/// `f_j(x) = P(seq_A(j) | alpha) * P(seq_B(j) | beta)`.
#[derive(Debug, Clone)]
pub struct ObservableSet {
    num_slices: usize,
    polys: Vec<Polynomial>,
}

impl ObservableSet {
    pub fn num_slices(&self) -> usize {
        self.num_slices
    }

    pub fn polys(&self) -> &[Polynomial] {
        &self.polys
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    /// Max degree over the set (`2T` for indicator observables).
    pub fn degree_bound(&self) -> usize {
        self.polys
            .iter()
            .map(|p| p.degree() as usize)
            .max()
            .unwrap_or(0)
    }

    /// Exact sum of all observable polynomials; identically one for
    /// indicator observables.
    pub fn sum(&self) -> Polynomial {
        let mut s = Polynomial::zero();
        for p in &self.polys {
            s = s.add(p);
        }
        s
    }
}

/// Build the `4^T` indicator-outcome polynomials for `t >= 2` slices.
pub fn joint_observable_polys(t: usize) -> Result<ObservableSet> {
    if t < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 slices, got {t}"
        )));
    }
    let mut polys = Vec::with_capacity(outcome_count(t));
    for j in 0..outcome_count(t) {
        let (seq_a, seq_b) = decode_outcome(j, t);
        let pa = sequence_probability_poly(&seq_a, Role::A)?;
        let pb = sequence_probability_poly(&seq_b, Role::B)?;
        polys.push(pa.mul(&pb));
    }
    Ok(ObservableSet {
        num_slices: t,
        polys,
    })
}

/// The six box constraints `g_i(x) = x_i (1 - x_i) = x_i - x_i^2`.
pub fn constraint_polys() -> Vec<Polynomial> {
    (0..NUM_VARS)
        .map(|i| {
            let x = Polynomial::var(i);
            x.sub(&x.mul(&x))
        })
        .collect()
}

/// `true` when the observables sum to the constant one (exact check); used
/// when converting Farkas rays to rejection certificates.
pub fn sums_to_one(polys: &[Polynomial]) -> bool {
    let mut s = Polynomial::zero();
    for p in polys {
        s = s.add(p);
    }
    s == Polynomial::constant(BigRational::one())
}
