//! Level-`d` moment-feasibility relaxation of the hidden-variable test and
//! its sum-of-squares dual.
//!
//! The primal asks for a pseudo-moment vector `y` (one entry per monomial of
//! degree <= 2d in the six parameters) with
//!
//! * `y_constant = 1`,
//! * `sum_m coef(f_j)_m y_m = yhat_j` for every joint outcome `j`,
//! * the moment matrix `M_d(y)` and the six localizing matrices
//!   `M_{d-1}(g_i y)` positive semidefinite.
//!
//! Moment vectors of point masses (and their mixtures) in the unit box are
//! feasible at every level, so the relaxation approximates the set of
//! explainable distributions from the outside: infeasibility refutes every
//! static hidden-variable model. A refuting Farkas ray converts into an
//! explicit certificate
//!
//! ```text
//! 1 - sum_j b_j f_j(x) = sigma_0(x) + sum_i sigma_i(x) g_i(x),   b . yhat > 1
//! ```
//!
//! with sum-of-squares multipliers given by PSD Gram matrices, which
//! [`validate_certificate`] checks independently of the solver. A verdict of
//! REJECT is issued only on a validated certificate.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::linalg::{cholesky_in_place, solve_cholesky, sym_eigen, Mat};
use crate::model::ObservableSet;
use crate::poly::{mono_mul, total_degree, Exponents, Polynomial, NUM_VARS};
use crate::sdp::{
    self, svec, BlockEntry, FarkasRay, LinearEquality, PsdBlockMap, Residuals, SdpProblem,
    SdpStatus, SolverOptions,
};
use crate::statistics::EmpiricalDistribution;

/// Monomials of total degree at most `degree` in graded-lex order (degree
/// first, ties by descending exponent tuple), the constant monomial first.
#[derive(Debug, Clone)]
pub struct MonomialBasis {
    pub degree: usize,
    pub monomials: Vec<Exponents>,
    index: HashMap<Exponents, usize>,
}

impl MonomialBasis {
    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn index_of(&self, exps: &Exponents) -> Option<usize> {
        self.index.get(exps).copied()
    }

    pub fn at(&self, i: usize) -> &Exponents {
        &self.monomials[i]
    }
}

/// Enumerate the basis of degree `<= degree`; size is `C(6 + degree, 6)`.
pub fn monomial_basis(degree: usize) -> MonomialBasis {
    let mut monomials = Vec::new();
    let mut current = [0u8; NUM_VARS];
    enumerate(&mut monomials, &mut current, 0, degree as u32);
    monomials.sort_by(|a, b| total_degree(a).cmp(&total_degree(b)).then(b.cmp(a)));
    let index = monomials.iter().enumerate().map(|(i, m)| (*m, i)).collect();
    MonomialBasis {
        degree,
        monomials,
        index,
    }
}

fn enumerate(out: &mut Vec<Exponents>, current: &mut Exponents, var: usize, budget: u32) {
    if var == NUM_VARS {
        out.push(*current);
        return;
    }
    for e in 0..=budget {
        current[var] = e as u8;
        enumerate(out, current, var + 1, budget - e);
    }
    current[var] = 0;
}

/// Smallest admissible relaxation level for a set of observables.
pub fn minimum_level(observables: &[Polynomial]) -> usize {
    let deg = observables
        .iter()
        .map(|p| p.degree() as usize)
        .max()
        .unwrap_or(0);
    deg.div_ceil(2).max(1)
}

/// The assembled relaxation: the SDP together with the bookkeeping needed to
/// interpret rays and witnesses.
#[derive(Debug, Clone)]
pub struct MomentRelaxation {
    pub level: usize,
    pub problem: SdpProblem,
    /// Target observable vector (yhat).
    pub target: Vec<f64>,
    /// The exact observable polynomials f_j.
    pub observables: Vec<Polynomial>,
    /// Moment variable index -> monomial.
    pub moment_monomials: Vec<Exponents>,
    pub basis_moment: MonomialBasis,
    pub basis_localizing: MonomialBasis,
    /// Exact-arithmetic fact `sum_j f_j == 1`, used in ray conversion.
    pub observables_sum_to_one: bool,
    /// Half-width of the optional interval relaxation of the equalities
    /// (0 = exact equality, the default).
    pub epsilon: f64,
}

impl MomentRelaxation {
    pub fn num_moments(&self) -> usize {
        self.problem.num_vars
    }

    /// Moment vector of the point mass at `x`: `y_m = x^m`.
    pub fn point_mass_moments(&self, x: &[f64; NUM_VARS]) -> Vec<f64> {
        self.moment_monomials
            .iter()
            .map(|exps| {
                let mut v = 1.0;
                for (i, &e) in exps.iter().enumerate() {
                    for _ in 0..e {
                        v *= x[i];
                    }
                }
                v
            })
            .collect()
    }

    /// Convex combination of point-mass moment vectors.
    pub fn mixture_moments(&self, points: &[([f64; NUM_VARS], f64)]) -> Vec<f64> {
        let mut y = vec![0.0; self.num_moments()];
        for (x, w) in points {
            for (acc, m) in y.iter_mut().zip(self.point_mass_moments(x)) {
                *acc += w * m;
            }
        }
        y
    }
}

/// Build the level-`d` moment feasibility problem for an empirical
/// distribution.
pub fn build_moment_feasibility(
    dist: &EmpiricalDistribution,
    observables: &ObservableSet,
    level: usize,
) -> Result<MomentRelaxation> {
    build_relaxation(&dist.y_hat(), observables.polys(), level, 0.0)
}

/// Build the relaxation from a raw target vector and observable polynomials.
/// `epsilon > 0` relaxes each observable equality to `yhat_j ± epsilon`
/// (encoded as nonnegativity rows).
pub fn build_relaxation(
    target: &[f64],
    observables: &[Polynomial],
    level: usize,
    epsilon: f64,
) -> Result<MomentRelaxation> {
    if observables.is_empty() {
        return Err(Error::InvalidInput("no observables".into()));
    }
    if target.len() != observables.len() {
        return Err(Error::InvalidInput(format!(
            "target has {} entries for {} observables",
            target.len(),
            observables.len()
        )));
    }
    let degree = observables
        .iter()
        .map(|p| p.degree() as usize)
        .max()
        .unwrap_or(0);
    let min_level = minimum_level(observables);
    if level < min_level {
        return Err(Error::LevelTooLow {
            level,
            degree,
            min: min_level,
        });
    }

    let basis_moment = monomial_basis(level);
    let basis_localizing = monomial_basis(level - 1);
    let variables = monomial_basis(2 * level);
    let var_of = |exps: &Exponents| -> usize {
        variables.index_of(exps).expect("monomial within 2d budget")
    };

    let mut blocks = Vec::new();

    // Moment matrix M_d(y): entry (u, v) = y_{u+v}.
    let nd = basis_moment.len();
    let mut entries = Vec::with_capacity(nd * (nd + 1) / 2);
    for v in 0..nd {
        for u in 0..=v {
            let mono = mono_mul(basis_moment.at(u), basis_moment.at(v));
            entries.push(BlockEntry {
                row: u,
                col: v,
                var: var_of(&mono),
                coef: 1.0,
            });
        }
    }
    blocks.push(PsdBlockMap {
        label: "moment".into(),
        dim: nd,
        entries,
    });

    // Localizing matrices M_{d-1}(g_i y): entry (u, v) = y_{u+v+e_i} - y_{u+v+2e_i}.
    let nl = basis_localizing.len();
    for i in 0..NUM_VARS {
        let mut entries = Vec::with_capacity(nl * (nl + 1));
        for v in 0..nl {
            for u in 0..=v {
                let base = mono_mul(basis_localizing.at(u), basis_localizing.at(v));
                let mut lin = base;
                lin[i] += 1;
                let mut quad = base;
                quad[i] += 2;
                entries.push(BlockEntry {
                    row: u,
                    col: v,
                    var: var_of(&lin),
                    coef: 1.0,
                });
                entries.push(BlockEntry {
                    row: u,
                    col: v,
                    var: var_of(&quad),
                    coef: -1.0,
                });
            }
        }
        blocks.push(PsdBlockMap {
            label: format!("loc{i}"),
            dim: nl,
            entries,
        });
    }

    // Normalization y_constant = 1, then the observable constraints.
    let constant_var = var_of(&[0u8; NUM_VARS]);
    debug_assert_eq!(constant_var, 0);
    let mut equalities = vec![LinearEquality {
        terms: vec![(constant_var, 1.0)],
        rhs: 1.0,
    }];

    if epsilon == 0.0 {
        for (j, f) in observables.iter().enumerate() {
            let mut terms: Vec<(usize, f64)> = f
                .terms_f64()
                .into_iter()
                .map(|(exps, c)| (var_of(&exps), c))
                .collect();
            terms.sort_by_key(|&(v, _)| v);
            equalities.push(LinearEquality {
                terms,
                rhs: target[j],
            });
        }
    } else {
        // Interval rows f_j . y - (yhat_j - eps) >= 0 and (yhat_j + eps) - f_j . y >= 0,
        // homogenized through the pinned constant moment.
        for (j, f) in observables.iter().enumerate() {
            let terms: Vec<(usize, f64)> = f
                .terms_f64()
                .into_iter()
                .map(|(exps, c)| (var_of(&exps), c))
                .collect();
            let mut lower: Vec<BlockEntry> = terms
                .iter()
                .map(|&(var, coef)| BlockEntry {
                    row: 0,
                    col: 0,
                    var,
                    coef,
                })
                .collect();
            lower.push(BlockEntry {
                row: 0,
                col: 0,
                var: constant_var,
                coef: -(target[j] - epsilon),
            });
            blocks.push(PsdBlockMap {
                label: format!("obs{j}+"),
                dim: 1,
                entries: lower,
            });
            let mut upper: Vec<BlockEntry> = terms
                .iter()
                .map(|&(var, coef)| BlockEntry {
                    row: 0,
                    col: 0,
                    var,
                    coef: -coef,
                })
                .collect();
            upper.push(BlockEntry {
                row: 0,
                col: 0,
                var: constant_var,
                coef: target[j] + epsilon,
            });
            blocks.push(PsdBlockMap {
                label: format!("obs{j}-"),
                dim: 1,
                entries: upper,
            });
        }
    }

    let problem = SdpProblem {
        num_vars: variables.len(),
        blocks,
        equalities,
        objective: vec![],
    };
    problem.validate()?;

    Ok(MomentRelaxation {
        level,
        problem,
        target: target.to_vec(),
        observables: observables.to_vec(),
        moment_monomials: variables.monomials.clone(),
        basis_moment,
        basis_localizing,
        observables_sum_to_one: crate::model::sums_to_one(observables),
        epsilon,
    })
}

/// Tolerances for certificate validation.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CertTolerances {
    /// Most negative admissible Gram eigenvalue.
    pub tol_psd: f64,
    /// Max-norm bound on the coefficient residual of the identity.
    pub tol_id: f64,
    /// Required margin `b . yhat - 1`.
    pub tol_margin: f64,
}

impl Default for CertTolerances {
    fn default() -> Self {
        CertTolerances {
            tol_psd: 1e-8,
            tol_id: 1e-8,
            tol_margin: 1e-6,
        }
    }
}

/// An explicit sum-of-squares rejection certificate.
#[derive(Debug, Clone)]
pub struct SosCertificate {
    /// Dual coefficients b, one per observable.
    pub outcome_coeffs: Vec<f64>,
    /// Gram matrix of sigma_0 over the degree-d basis.
    pub gram_moment: Mat,
    /// Gram matrix of sigma_i over the degree-(d-1) basis, one per constraint.
    pub gram_localizing: Vec<Mat>,
    /// `b . yhat - 1`.
    pub margin: f64,
    /// Max-norm coefficient residual of the identity at extraction time.
    pub identity_residual: f64,
}

/// Why a certificate failed validation.
#[derive(Debug, Clone, PartialEq)]
pub enum InvalidReason {
    GramEigenvalue { block: String, min_eig: f64 },
    Identity { residual: f64 },
    Margin { margin: f64 },
}

impl std::fmt::Display for InvalidReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InvalidReason::GramEigenvalue { block, min_eig } => {
                write!(f, "gram matrix {block} has eigenvalue {min_eig:.3e}")
            }
            InvalidReason::Identity { residual } => {
                write!(f, "identity residual {residual:.3e}")
            }
            InvalidReason::Margin { margin } => write!(f, "margin {margin:.3e}"),
        }
    }
}

/// Result of validating a certificate.
#[derive(Debug, Clone, PartialEq)]
pub enum CertificateCheck {
    Valid,
    Invalid(InvalidReason),
}

impl CertificateCheck {
    pub fn is_valid(&self) -> bool {
        matches!(self, CertificateCheck::Valid)
    }
}

/// Convert a Farkas ray into an explicit SOS certificate.
///
/// The Gram matrices are projected onto the PSD cone (negative eigenvalues
/// clipped), the linear multipliers are refit by least squares against the
/// projected Grams, and the whole ray is rescaled so margin and identity
/// residual both clear their validation tolerances with slack. Fails rather
/// than produce a certificate that could not validate.
pub fn extract_certificate(
    relax: &MomentRelaxation,
    ray: &FarkasRay,
    tol: &CertTolerances,
) -> Result<SosCertificate> {
    let nd = relax.basis_moment.len();
    let nl = relax.basis_localizing.len();

    // Gram matrices, clipped to the PSD cone.
    let gram_moment = clip_psd(&svec::smat(&ray.block_duals[0], nd));
    let gram_localizing: Vec<Mat> = (0..NUM_VARS)
        .map(|i| clip_psd(&svec::smat(&ray.block_duals[1 + i], nl)))
        .collect();

    // sigma-side coefficients over all monomials of degree <= 2d.
    let sigma = sigma_coefficients(relax, &gram_moment, &gram_localizing);

    // Refit the linear multipliers: minimize || lambda_0 e_const +
    // sum_j lambda_j f_j + sigma ||_2 over lambda. This replaces the solver's
    // equality multipliers (and absorbs any interval-row duals).
    let lambda = refit_multipliers(relax, &sigma)?;
    let lambda0 = lambda[0];
    let lambda_obs = &lambda[1..];

    // Residual of the linear identity at unit scale.
    let mut residual = 0.0f64;
    {
        let mut acc = sigma.clone();
        acc[0] += lambda0;
        for (j, f) in relax.observables.iter().enumerate() {
            for (exps, c) in f.terms_f64() {
                let var = monomial_var(relax, &exps);
                acc[var] += lambda_obs[j] * c;
            }
        }
        for v in &acc {
            residual = residual.max(v.abs());
        }
    }

    // Margin of the unit-scale ray.
    let unit_margin = lambda0
        + lambda_obs
            .iter()
            .zip(&relax.target)
            .map(|(l, y)| l * y)
            .sum::<f64>();
    if unit_margin <= 0.0 || unit_margin.is_nan() {
        return Err(Error::InvalidInput(format!(
            "dual ray has nonpositive margin {unit_margin:.3e}; no rejection certificate"
        )));
    }

    let (outcome_coeffs, scale) = if relax.observables_sum_to_one {
        // With indicator observables (sum f_j == 1) a constant shift of b is
        // absorbed exactly: b_j = 1 + t (lambda0 + lambda_j). Pick the scale t
        // so margin and residual both clear validation, preferring margin 1.
        let t_lo = tol.tol_margin / unit_margin;
        let t_hi = if residual > 0.0 {
            tol.tol_id / residual
        } else {
            f64::INFINITY
        };
        if t_lo > t_hi {
            return Err(Error::InvalidInput(format!(
                "dual ray too noisy: residual/margin ratio {:.3e} exceeds {:.3e}",
                residual / unit_margin,
                tol.tol_id / tol.tol_margin
            )));
        }
        let t = (1.0 / unit_margin).clamp(t_lo, t_hi);
        let b: Vec<f64> = lambda_obs.iter().map(|l| 1.0 + t * (lambda0 + l)).collect();
        (b, t)
    } else {
        // Generic observables: the constant term must come from lambda0, so
        // the scale is pinned by lambda0 = -1.
        if lambda0 >= 0.0 || lambda0.is_nan() {
            return Err(Error::InvalidInput(
                "ray constant term is nonnegative and observables do not sum to one".into(),
            ));
        }
        let s = -1.0 / lambda0;
        let b: Vec<f64> = lambda_obs.iter().map(|l| s * l).collect();
        (b, s)
    };

    let scale_mat = |m: &Mat| {
        let q = m.rows();
        Mat::from_fn(q, q, |r, c| scale * m[(r, c)])
    };
    let gram_moment = scale_mat(&gram_moment);
    let gram_localizing: Vec<Mat> = gram_localizing.iter().map(scale_mat).collect();

    let margin = outcome_coeffs
        .iter()
        .zip(&relax.target)
        .map(|(b, y)| b * y)
        .sum::<f64>()
        - 1.0;

    Ok(SosCertificate {
        outcome_coeffs,
        gram_moment,
        gram_localizing,
        margin,
        identity_residual: scale * residual,
    })
}

/// Check a certificate against the model, independently of the solver:
/// Gram PSD-ness, the polynomial identity coefficient by coefficient, and the
/// margin.
pub fn validate_certificate(
    cert: &SosCertificate,
    relax: &MomentRelaxation,
    tol: &CertTolerances,
) -> CertificateCheck {
    // (i) Gram eigenvalues.
    let (eigs, _) = sym_eigen(&cert.gram_moment);
    let min = eigs.first().copied().unwrap_or(0.0);
    if min < -tol.tol_psd {
        return CertificateCheck::Invalid(InvalidReason::GramEigenvalue {
            block: "moment".into(),
            min_eig: min,
        });
    }
    for (i, g) in cert.gram_localizing.iter().enumerate() {
        let (eigs, _) = sym_eigen(g);
        let min = eigs.first().copied().unwrap_or(0.0);
        if min < -tol.tol_psd {
            return CertificateCheck::Invalid(InvalidReason::GramEigenvalue {
                block: format!("loc{i}"),
                min_eig: min,
            });
        }
    }

    // (ii) Coefficient identity 1 - sum_j b_j f_j = sigma_0 + sum_i sigma_i g_i.
    let sigma = sigma_coefficients(relax, &cert.gram_moment, &cert.gram_localizing);
    let mut resid = vec![0.0f64; relax.num_moments()];
    resid[0] = 1.0;
    for (j, f) in relax.observables.iter().enumerate() {
        for (exps, c) in f.terms_f64() {
            resid[monomial_var(relax, &exps)] -= cert.outcome_coeffs[j] * c;
        }
    }
    for (r, s) in resid.iter_mut().zip(&sigma) {
        *r -= s;
    }
    let residual = resid.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if residual > tol.tol_id {
        return CertificateCheck::Invalid(InvalidReason::Identity { residual });
    }

    // (iii) Margin.
    let margin = cert
        .outcome_coeffs
        .iter()
        .zip(&relax.target)
        .map(|(b, y)| b * y)
        .sum::<f64>()
        - 1.0;
    if margin < tol.tol_margin {
        return CertificateCheck::Invalid(InvalidReason::Margin { margin });
    }
    CertificateCheck::Valid
}

fn monomial_var(relax: &MomentRelaxation, exps: &Exponents) -> usize {
    relax
        .moment_monomials
        .iter()
        .position(|m| m == exps)
        .expect("monomial within variable range")
}

/// Coefficients (by moment variable) of `sigma_0 + sum_i sigma_i g_i` given
/// the Gram matrices.
fn sigma_coefficients(relax: &MomentRelaxation, gram_moment: &Mat, gram_loc: &[Mat]) -> Vec<f64> {
    let mut out = vec![0.0f64; relax.num_moments()];
    let index: HashMap<&Exponents, usize> = relax
        .moment_monomials
        .iter()
        .enumerate()
        .map(|(i, m)| (m, i))
        .collect();
    let nd = relax.basis_moment.len();
    for v in 0..nd {
        for u in 0..=v {
            let w = if u == v { 1.0 } else { 2.0 };
            let mono = mono_mul(relax.basis_moment.at(u), relax.basis_moment.at(v));
            out[index[&mono]] += w * gram_moment[(u, v)];
        }
    }
    let nl = relax.basis_localizing.len();
    for (i, g) in gram_loc.iter().enumerate() {
        for v in 0..nl {
            for u in 0..=v {
                let w = if u == v { 1.0 } else { 2.0 };
                let base = mono_mul(relax.basis_localizing.at(u), relax.basis_localizing.at(v));
                let mut lin = base;
                lin[i] += 1;
                let mut quad = base;
                quad[i] += 2;
                out[index[&lin]] += w * g[(u, v)];
                out[index[&quad]] -= w * g[(u, v)];
            }
        }
    }
    out
}

/// Project a symmetric matrix onto the PSD cone by clipping negative
/// eigenvalues.
fn clip_psd(m: &Mat) -> Mat {
    let q = m.rows();
    let (eigs, vecs) = sym_eigen(m);
    if eigs.first().copied().unwrap_or(0.0) >= 0.0 {
        return m.clone();
    }
    let mut out = Mat::zeros(q, q);
    for (k, &ev) in eigs.iter().enumerate() {
        if ev <= 0.0 {
            continue;
        }
        for r in 0..q {
            let vr = vecs[(r, k)] * ev;
            for c in 0..q {
                out[(r, c)] += vr * vecs[(c, k)];
            }
        }
    }
    out
}

/// Least-squares multipliers: minimize `|| lambda_0 e_const + sum_j lambda_j
/// f_j + sigma ||_2` via the normal equations.
fn refit_multipliers(relax: &MomentRelaxation, sigma: &[f64]) -> Result<Vec<f64>> {
    let num_obs = relax.observables.len();
    let k = 1 + num_obs;
    let mut cols: Vec<Vec<(usize, f64)>> = Vec::with_capacity(k);
    cols.push(vec![(0usize, 1.0)]);
    for f in &relax.observables {
        cols.push(
            f.terms_f64()
                .into_iter()
                .map(|(exps, c)| (monomial_var(relax, &exps), c))
                .collect(),
        );
    }
    let mut gram = Mat::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let mut s = 0.0;
            for &(vi, ci) in &cols[i] {
                for &(vj, cj) in &cols[j] {
                    if vi == vj {
                        s += ci * cj;
                    }
                }
            }
            gram[(i, j)] = s;
            gram[(j, i)] = s;
        }
    }
    let mut rhs = vec![0.0; k];
    for (i, col) in cols.iter().enumerate() {
        rhs[i] = -col.iter().map(|&(v, c)| c * sigma[v]).sum::<f64>();
    }
    for reg in [0.0, 1e-12, 1e-9] {
        let mut cand = gram.clone();
        if reg > 0.0 {
            let scale = (0..k).map(|i| cand[(i, i)]).fold(1.0f64, f64::max);
            for i in 0..k {
                cand[(i, i)] += reg * scale;
            }
        }
        if cholesky_in_place(&mut cand).is_ok() {
            let mut sol = rhs.clone();
            solve_cholesky(&cand, &mut sol);
            return Ok(sol);
        }
    }
    Err(Error::InvalidInput(
        "observable coefficient matrix is rank deficient; cannot refit multipliers".into(),
    ))
}

/// Verdict of the hidden-variable feasibility test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    /// A pseudo-moment vector explains the data at this level.
    Accept,
    /// A validated certificate refutes every static hidden-variable model.
    Reject,
    /// Neither a witness nor a validated certificate.
    Unknown,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Accept => write!(f, "ACCEPT"),
            Verdict::Reject => write!(f, "REJECT"),
            Verdict::Unknown => write!(f, "UNKNOWN"),
        }
    }
}

/// Configuration of the full feasibility test.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FeasibilityConfig {
    pub level: usize,
    /// Interval half-width on the observable equalities (0 = exact).
    pub epsilon: f64,
    /// Refuse to test distributions with fewer pooled samples than this.
    pub min_samples: u64,
    pub tolerances: CertTolerances,
    /// Re-check bound on feasible witnesses (equality violation and most
    /// negative block eigenvalue).
    pub witness_tol: f64,
    pub solver: SolverOptions,
}

impl Default for FeasibilityConfig {
    fn default() -> Self {
        FeasibilityConfig {
            level: 3,
            epsilon: 0.0,
            min_samples: 1000,
            tolerances: CertTolerances::default(),
            witness_tol: 1e-7,
            solver: SolverOptions::default(),
        }
    }
}

/// Outcome of one feasibility test.
#[derive(Debug, Clone)]
pub struct TestOutcome {
    pub verdict: Verdict,
    pub certificate: Option<SosCertificate>,
    pub moment_witness: Option<Vec<f64>>,
    pub diagnostics: String,
    pub solver_iterations: usize,
    pub solver_residuals: Residuals,
}

/// Test an empirical distribution, enforcing the minimum-sample guard.
pub fn test_distribution(
    dist: &EmpiricalDistribution,
    observables: &ObservableSet,
    config: &FeasibilityConfig,
) -> Result<TestOutcome> {
    if dist.total() < config.min_samples {
        return Ok(TestOutcome {
            verdict: Verdict::Unknown,
            certificate: None,
            moment_witness: None,
            diagnostics: format!(
                "insufficient samples: {} pooled, floor is {}",
                dist.total(),
                config.min_samples
            ),
            solver_iterations: 0,
            solver_residuals: Residuals {
                primal: f64::NAN,
                dual: f64::NAN,
                gap: f64::NAN,
            },
        });
    }
    test_probabilities(&dist.y_hat(), observables.polys(), config)
}

/// Test a raw probability vector (no sample-size guard; used for exact
/// model-generated targets).
pub fn test_probabilities(
    target: &[f64],
    observables: &[Polynomial],
    config: &FeasibilityConfig,
) -> Result<TestOutcome> {
    let relax = build_relaxation(target, observables, config.level, config.epsilon)?;
    let outcome = sdp::solve(&relax.problem, &config.solver)?;
    let (verdict, certificate, witness, diagnostics) = match outcome.status {
        SdpStatus::Feasible(w) => {
            let (eq_viol, min_eig) = relax.problem.witness_quality(&w.y);
            if eq_viol <= config.witness_tol && min_eig >= -config.witness_tol {
                (
                    Verdict::Accept,
                    None,
                    Some(w.y),
                    format!(
                        "moment witness: max equality violation {eq_viol:.2e}, min block eigenvalue {min_eig:.2e}"
                    ),
                )
            } else {
                (
                    Verdict::Unknown,
                    None,
                    None,
                    format!(
                        "solver reported feasible but witness failed re-check (violation {eq_viol:.2e}, min eigenvalue {min_eig:.2e})"
                    ),
                )
            }
        }
        SdpStatus::Infeasible(ray) => match extract_certificate(&relax, &ray, &config.tolerances) {
            Ok(cert) => match validate_certificate(&cert, &relax, &config.tolerances) {
                CertificateCheck::Valid => {
                    let d = format!(
                        "validated certificate: margin {:.3e}, identity residual {:.3e}",
                        cert.margin, cert.identity_residual
                    );
                    (Verdict::Reject, Some(cert), None, d)
                }
                CertificateCheck::Invalid(reason) => (
                    Verdict::Unknown,
                    None,
                    None,
                    format!(
                        "solver reported infeasible but certificate failed validation: {reason}"
                    ),
                ),
            },
            Err(e) => (
                Verdict::Unknown,
                None,
                None,
                format!("solver reported infeasible but no certificate could be extracted: {e}"),
            ),
        },
        SdpStatus::Unknown { reason } => (Verdict::Unknown, None, None, reason),
    };
    Ok(TestOutcome {
        verdict,
        certificate,
        moment_witness: witness,
        diagnostics,
        solver_iterations: outcome.iterations,
        solver_residuals: outcome.residuals,
    })
}
