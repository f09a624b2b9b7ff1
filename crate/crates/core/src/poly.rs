//! Sparse multivariate polynomials over the six chain parameters, with exact
//! rational coefficients.
//!
//! Products like `(1 - a_plus)^2` expand exactly in rationals; values are
//! converted to floating point only when a semidefinite program is assembled.
//! The variable order is fixed crate-wide:
//! `(alpha_0, alpha_plus, alpha_minus, beta_0, beta_plus, beta_minus)`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Number of model parameters; every polynomial lives in this many variables.
pub const NUM_VARS: usize = 6;

/// Exponent vector of a monomial.
pub type Exponents = [u8; NUM_VARS];

/// Total degree of a monomial.
pub fn total_degree(exps: &Exponents) -> u32 {
    exps.iter().map(|&e| e as u32).sum()
}

/// Product of two monomials (exponent sum).
pub fn mono_mul(a: &Exponents, b: &Exponents) -> Exponents {
    let mut out = [0u8; NUM_VARS];
    for i in 0..NUM_VARS {
        out[i] = a[i] + b[i];
    }
    out
}

/// Sparse polynomial: exponent vector -> nonzero rational coefficient.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct Polynomial {
    terms: BTreeMap<Exponents, BigRational>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial {
            terms: BTreeMap::new(),
        }
    }

    pub fn one() -> Self {
        Polynomial::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        let mut p = Polynomial::zero();
        p.add_term([0; NUM_VARS], c);
        p
    }

    pub fn constant_i64(c: i64) -> Self {
        Polynomial::constant(BigRational::from_integer(BigInt::from(c)))
    }

    /// The monomial `x_i`.
    pub fn var(i: usize) -> Self {
        assert!(i < NUM_VARS, "variable index {i} out of range");
        let mut exps = [0u8; NUM_VARS];
        exps[i] = 1;
        let mut p = Polynomial::zero();
        p.add_term(exps, BigRational::one());
        p
    }

    pub fn monomial(exps: Exponents, coef: BigRational) -> Self {
        let mut p = Polynomial::zero();
        p.add_term(exps, coef);
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Max total degree over all terms; zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(total_degree).max().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &BigRational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, exps: &Exponents) -> BigRational {
        self.terms
            .get(exps)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    /// Add `coef * x^exps`, dropping the term if the result cancels to zero.
    pub fn add_term(&mut self, exps: Exponents, coef: BigRational) {
        if coef.is_zero() {
            return;
        }
        match self.terms.entry(exps) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(coef);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get() + &coef;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (exps, coef) in &other.terms {
            out.add_term(*exps, coef.clone());
        }
        out
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (exps, coef) in &other.terms {
            out.add_term(*exps, -coef.clone());
        }
        out
    }

    pub fn neg(&self) -> Polynomial {
        Polynomial {
            terms: self.terms.iter().map(|(e, c)| (*e, -c.clone())).collect(),
        }
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                out.add_term(mono_mul(ea, eb), ca * cb);
            }
        }
        out
    }

    pub fn scale(&self, c: &BigRational) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero();
        }
        Polynomial {
            terms: self.terms.iter().map(|(e, k)| (*e, k * c)).collect(),
        }
    }

    pub fn pow(&self, n: u32) -> Polynomial {
        let mut out = Polynomial::one();
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    /// Evaluate at a floating-point parameter vector.
    pub fn eval_f64(&self, x: &[f64; NUM_VARS]) -> f64 {
        let mut acc = 0.0;
        for (exps, coef) in &self.terms {
            let mut t = rational_to_f64(coef);
            for (i, &e) in exps.iter().enumerate() {
                for _ in 0..e {
                    t *= x[i];
                }
            }
            acc += t;
        }
        acc
    }

    /// Evaluate exactly at a rational point.
    pub fn eval_rational(&self, x: &[BigRational; NUM_VARS]) -> BigRational {
        let mut acc = BigRational::zero();
        for (exps, coef) in &self.terms {
            let mut t = coef.clone();
            for (i, &e) in exps.iter().enumerate() {
                for _ in 0..e {
                    t *= &x[i];
                }
            }
            acc += t;
        }
        acc
    }

    /// Terms with coefficients converted to `f64`.
    pub fn terms_f64(&self) -> Vec<(Exponents, f64)> {
        self.terms
            .iter()
            .map(|(e, c)| (*e, rational_to_f64(c)))
            .collect()
    }
}

/// Lossy (but for small integers exact) conversion to `f64`.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Enormous numerator/denominator; fall back to a quotient of floats.
        let n = r.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = r.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (exps, coef) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{coef}")?;
            for (i, &e) in exps.iter().enumerate() {
                if e == 1 {
                    write!(f, "*x{i}")?;
                } else if e > 1 {
                    write!(f, "*x{i}^{e}")?;
                }
            }
        }
        Ok(())
    }
}

/// JSON form: a list of `{ "exps": [..6 ints..], "coef": "p/q" }` terms.
#[derive(Serialize, Deserialize)]
struct TermRepr {
    exps: Vec<u8>,
    coef: String,
}

impl Serialize for Polynomial {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let reprs: Vec<TermRepr> = self
            .terms
            .iter()
            .map(|(e, c)| TermRepr {
                exps: e.to_vec(),
                coef: c.to_string(),
            })
            .collect();
        reprs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let reprs = Vec::<TermRepr>::deserialize(d)?;
        let mut p = Polynomial::zero();
        for t in reprs {
            if t.exps.len() != NUM_VARS {
                return Err(D::Error::custom(format!(
                    "expected {NUM_VARS} exponents, got {}",
                    t.exps.len()
                )));
            }
            let mut exps = [0u8; NUM_VARS];
            exps.copy_from_slice(&t.exps);
            let coef = parse_rational(&t.coef).map_err(D::Error::custom)?;
            p.add_term(exps, coef);
        }
        Ok(p)
    }
}

/// Parse `"p/q"` or `"p"` into a rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let parse_int = |t: &str| -> Result<BigInt> {
        t.trim()
            .parse::<BigInt>()
            .map_err(|e| Error::InvalidInput(format!("bad rational `{s}`: {e}")))
    };
    match s.split_once('/') {
        Some((n, d)) => {
            let den = parse_int(d)?;
            if den.is_zero() {
                return Err(Error::InvalidInput(format!(
                    "bad rational `{s}`: zero denominator"
                )));
            }
            Ok(BigRational::new(parse_int(n)?, den))
        }
        None => Ok(BigRational::from_integer(parse_int(s)?)),
    }
}

/// `1 - p`
pub fn one_minus(p: &Polynomial) -> Polynomial {
    Polynomial::one().sub(p)
}

pub fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl std::ops::Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        Polynomial::add(self, rhs)
    }
}

impl std::ops::Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        Polynomial::sub(self, rhs)
    }
}

impl std::ops::Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        Polynomial::mul(self, rhs)
    }
}

impl std::ops::Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial::neg(self)
    }
}
