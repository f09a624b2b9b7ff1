//! Interior-point solver: Mehrotra predictor-corrector on the homogeneous
//! self-dual embedding with Nesterov-Todd scaling for the PSD blocks.
//!
//! The conic form solved here is
//!
//! ```text
//! min c^T x   s.t.   E x = e * tau,   s = L x,   s in PSD blocks
//! ```
//!
//! embedded with the usual (tau, kappa) pair so that infeasible problems end
//! with `kappa > 0` and a Farkas ray `(lambda, Q)` satisfying
//! `E^T lambda + L^T Q = 0`, `e . lambda = 1` (after normalization) with `Q`
//! positive semidefinite. The per-iteration Newton systems are reduced to a
//! dense normal-equations solve in the `x` variables plus a Schur complement
//! over the equality multipliers.

use crate::linalg::{
    cholesky_in_place, dot, jacobi_svd_right, solve_cholesky, sym_eigen, tri_inverse_lower, Mat,
};

use super::svec::{smat, smat_into, svec_from, svec_identity, svec_index, svec_len, SQRT2};
use super::{
    FarkasRay, FeasibleWitness, Residuals, SdpOutcome, SdpProblem, SdpStatus, SolverOptions,
};
use crate::error::Result;

/// Solve a block SDP, classifying it feasible / infeasible / unknown.
pub fn solve(problem: &SdpProblem, options: &SolverOptions) -> Result<SdpOutcome> {
    problem.validate()?;
    let mut solver = Solver::new(problem, options);
    Ok(solver.run())
}

// Per-block Nesterov-Todd scaling data.
struct BlockScaling {
    dim: usize,
    /// Scaling factor R: W u = svec(R^T U R).
    r: Mat,
    r_inv: Mat,
    /// V = (R R^T)^{-1}; (W^T W)^{-1} u = svec(V U V).
    v: Mat,
    /// P = R R^T; (W^T W) u = svec(P U P).
    p: Mat,
    /// Scaling-point spectrum: W z = W^{-T} s = svec(diag(lambda)).
    lambda: Vec<f64>,
}

struct Solver<'a> {
    prob: &'a SdpProblem,
    opts: &'a SolverOptions,
    n: usize,
    num_eq: usize,
    c: Vec<f64>,
    rhs: Vec<f64>,
    dims: Vec<usize>,
    offs: Vec<usize>,
    m_total: usize,
    nu: f64,
    pure_feasibility: bool,
    /// Cholesky factor of E E^T, for witness projection (None without
    /// equalities or when E is rank deficient).
    eet_chol: Option<Mat>,
    // Iterate.
    x: Vec<f64>,
    yq: Vec<f64>,
    s: Vec<f64>,
    z: Vec<f64>,
    tau: f64,
    kappa: f64,
}

struct Factorization {
    /// Cholesky factor of the Jacobi-equilibrated normal matrix D H D.
    h_chol: Mat,
    /// Equilibration scale: H = D^{-1} (D H D) D^{-1}.
    h_scale: Vec<f64>,
    /// Cholesky factor of the Schur complement E H^{-1} E^T (empty if no
    /// equalities).
    se_chol: Mat,
}

impl Factorization {
    /// Solve `H u = b` through the equilibrated factor.
    fn h_solve(&self, b: &mut [f64]) {
        for (v, d) in b.iter_mut().zip(&self.h_scale) {
            *v *= d;
        }
        solve_cholesky(&self.h_chol, b);
        for (v, d) in b.iter_mut().zip(&self.h_scale) {
            *v *= d;
        }
    }
}

impl<'a> Solver<'a> {
    fn new(prob: &'a SdpProblem, opts: &'a SolverOptions) -> Self {
        let n = prob.num_vars;
        let num_eq = prob.equalities.len();
        let c = if prob.objective.is_empty() {
            vec![0.0; n]
        } else {
            prob.objective.clone()
        };
        let rhs: Vec<f64> = prob.equalities.iter().map(|eq| eq.rhs).collect();
        let dims: Vec<usize> = prob.blocks.iter().map(|b| b.dim).collect();
        let mut offs = Vec::with_capacity(dims.len());
        let mut m_total = 0;
        for &d in &dims {
            offs.push(m_total);
            m_total += svec_len(d);
        }
        let nu: f64 = dims.iter().map(|&d| d as f64).sum();

        let mut s = vec![0.0; m_total];
        let mut z = vec![0.0; m_total];
        for (bi, &d) in dims.iter().enumerate() {
            svec_identity(d, &mut s[offs[bi]..offs[bi] + svec_len(d)]);
            svec_identity(d, &mut z[offs[bi]..offs[bi] + svec_len(d)]);
        }

        let pure_feasibility = c.iter().all(|&v| v == 0.0);
        let eet_chol = if num_eq > 0 {
            let mut eet = Mat::zeros(num_eq, num_eq);
            for (i, eqi) in prob.equalities.iter().enumerate() {
                for (j, eqj) in prob.equalities.iter().enumerate().skip(i) {
                    let mut s = 0.0;
                    for &(vi, ci) in &eqi.terms {
                        for &(vj, cj) in &eqj.terms {
                            if vi == vj {
                                s += ci * cj;
                            }
                        }
                    }
                    eet[(i, j)] = s;
                    eet[(j, i)] = s;
                }
            }
            cholesky_in_place(&mut eet).ok().map(|_| eet)
        } else {
            None
        };
        Solver {
            prob,
            opts,
            n,
            num_eq,
            c,
            rhs,
            dims,
            offs,
            m_total,
            nu,
            pure_feasibility,
            eet_chol,
            x: vec![0.0; n],
            yq: vec![0.0; num_eq],
            s,
            z,
            tau: 1.0,
            kappa: 1.0,
        }
    }

    fn block_slice<'b>(&self, v: &'b [f64], bi: usize) -> &'b [f64] {
        &v[self.offs[bi]..self.offs[bi] + svec_len(self.dims[bi])]
    }

    // --- linear maps -----------------------------------------------------

    /// `L x`: evaluate every block at `x`, svec-packed.
    fn apply_map(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m_total];
        for (bi, block) in self.prob.blocks.iter().enumerate() {
            let off = self.offs[bi];
            for e in &block.entries {
                let scale = if e.row == e.col { 1.0 } else { SQRT2 };
                out[off + svec_index(e.row, e.col)] += scale * e.coef * x[e.var];
            }
        }
        out
    }

    /// `L^T w` for an svec-packed `w`.
    fn apply_map_t(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (bi, block) in self.prob.blocks.iter().enumerate() {
            let off = self.offs[bi];
            for e in &block.entries {
                let scale = if e.row == e.col { 1.0 } else { SQRT2 };
                out[e.var] += scale * e.coef * w[off + svec_index(e.row, e.col)];
            }
        }
        out
    }

    /// `E x`.
    fn apply_eq(&self, x: &[f64]) -> Vec<f64> {
        self.prob
            .equalities
            .iter()
            .map(|eq| eq.evaluate(x))
            .collect()
    }

    /// `E^T lambda`.
    fn apply_eq_t(&self, lam: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (eq, &l) in self.prob.equalities.iter().zip(lam) {
            for &(v, coef) in &eq.terms {
                out[v] += coef * l;
            }
        }
        out
    }

    // --- scaling ---------------------------------------------------------

    fn compute_scalings(&self) -> Option<Vec<BlockScaling>> {
        let mut scalings = Vec::with_capacity(self.dims.len());
        for (bi, &q) in self.dims.iter().enumerate() {
            let s_mat = smat(self.block_slice(&self.s, bi), q);
            let z_mat = smat(self.block_slice(&self.z, bi), q);
            let mut ls = s_mat;
            cholesky_in_place(&mut ls).ok()?;
            zero_upper(&mut ls);
            let mut lz = z_mat;
            cholesky_in_place(&mut lz).ok()?;
            zero_upper(&mut lz);
            // SVD of Lz^T Ls = U diag(lambda) V^T gives the NT scaling point.
            let m = lz.matmul_tn(&ls);
            let (sigma, v_svd) = jacobi_svd_right(&m);
            if sigma.iter().any(|&s| s <= 0.0 || !s.is_finite()) {
                return None;
            }
            // R = Ls V diag(sigma)^{-1/2}
            let mut r = ls.matmul(&v_svd);
            for row in 0..q {
                for col in 0..q {
                    r[(row, col)] /= sigma[col].sqrt();
                }
            }
            // R^{-1} = diag(sigma)^{1/2} V^T Ls^{-1}
            let ls_inv = tri_inverse_lower(&ls);
            let mut r_inv = v_svd.matmul_tn(&ls_inv);
            for row in 0..q {
                for col in 0..q {
                    r_inv[(row, col)] *= sigma[row].sqrt();
                }
            }
            // V = R^{-T} R^{-1} = (R R^T)^{-1}, P = R R^T.
            let v = r_inv.matmul_tn(&r_inv);
            let p = r.matmul(&r.transpose());
            scalings.push(BlockScaling {
                dim: q,
                r,
                r_inv,
                v,
                p,
                lambda: sigma,
            });
        }
        Some(scalings)
    }

    // Congruence helpers on svec-packed vectors.

    /// svec(M^T U M)
    fn congr(m: &Mat, u: &[f64]) -> Vec<f64> {
        let q = m.rows();
        let u_mat = smat(u, q);
        let t = m.matmul_tn(&u_mat); // m^T * u
        let t2 = t.matmul(m);
        let mut out = vec![0.0; svec_len(q)];
        svec_from(&t2, &mut out);
        out
    }

    /// svec(M U M^T)
    fn congr_t(m: &Mat, u: &[f64]) -> Vec<f64> {
        let q = m.rows();
        let u_mat = smat(u, q);
        let t = m.matmul(&u_mat);
        let t2 = t.matmul(&m.transpose());
        let mut out = vec![0.0; svec_len(q)];
        svec_from(&t2, &mut out);
        out
    }

    /// svec(V U V) for symmetric V.
    fn congr_sym(v: &Mat, u: &[f64]) -> Vec<f64> {
        Self::congr_t(v, u)
    }

    /// `(W^T W)^{-1} u` blockwise.
    fn wtw_inv(&self, scalings: &[BlockScaling], u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m_total];
        for (bi, sc) in scalings.iter().enumerate() {
            let r = Self::congr_sym(&sc.v, self.block_slice(u, bi));
            out[self.offs[bi]..self.offs[bi] + r.len()].copy_from_slice(&r);
        }
        out
    }

    /// `W^T W u` blockwise.
    fn wtw(&self, scalings: &[BlockScaling], u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m_total];
        for (bi, sc) in scalings.iter().enumerate() {
            let r = Self::congr_sym(&sc.p, self.block_slice(u, bi));
            out[self.offs[bi]..self.offs[bi] + r.len()].copy_from_slice(&r);
        }
        out
    }

    // --- KKT factorization -------------------------------------------------

    /// Assemble `H = L^T (W^T W)^{-1} L` using the block-entry lists: each
    /// pair of entries of one block contributes
    /// `coef_1 coef_2 f (V[r1,r2] V[c1,c2] + V[r1,c2] V[c1,r2])` with `f`
    /// accounting for the symmetrized off-diagonal entries.
    fn assemble_h(&self, scalings: &[BlockScaling]) -> Mat {
        let n = self.n;
        let mut h = Mat::zeros(n, n);
        for (bi, block) in self.prob.blocks.iter().enumerate() {
            let v = &scalings[bi].v;
            let entries = &block.entries;
            for i in 0..entries.len() {
                let e1 = entries[i];
                let f1 = if e1.row == e1.col { 0.5 } else { 1.0 };
                for e2 in entries.iter().skip(i) {
                    let f2 = if e2.row == e2.col { 0.5 } else { 1.0 };
                    let factor = 2.0 * f1 * f2;
                    let val = e1.coef
                        * e2.coef
                        * factor
                        * (v[(e1.row, e2.row)] * v[(e1.col, e2.col)]
                            + v[(e1.row, e2.col)] * v[(e1.col, e2.row)]);
                    if std::ptr::eq(e2, &entries[i]) {
                        h[(e1.var, e1.var)] += val;
                    } else if e1.var == e2.var {
                        h[(e1.var, e1.var)] += 2.0 * val;
                    } else {
                        h[(e1.var, e2.var)] += val;
                        h[(e2.var, e1.var)] += val;
                    }
                }
            }
        }
        h
    }

    fn factorize(&self, scalings: &[BlockScaling]) -> Option<Factorization> {
        let mut h = self.assemble_h(scalings);
        // Jacobi equilibration: the normal matrix inherits the squared
        // condition number of the scaling, so this buys real digits.
        let h_scale: Vec<f64> = (0..self.n)
            .map(|i| {
                let d = h[(i, i)];
                if d > 0.0 {
                    1.0 / d.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        for r in 0..self.n {
            for c in 0..self.n {
                h[(r, c)] *= h_scale[r] * h_scale[c];
            }
        }
        // Regularize only on factorization failure: a blanket shift larger
        // than the smallest curvature stalls the refinement loop outright.
        let mut h_chol = None;
        for &reg in &[0.0, 1e-14, 1e-11, 1e-8] {
            let mut cand = h.clone();
            if reg > 0.0 {
                for i in 0..self.n {
                    cand[(i, i)] += reg;
                }
            }
            if cholesky_in_place(&mut cand).is_ok() {
                h_chol = Some(cand);
                break;
            }
        }
        let h_chol = h_chol?;
        let fact = Factorization {
            h_chol,
            h_scale,
            se_chol: Mat::zeros(0, 0),
        };

        // Schur complement over the equalities: SE = E H^{-1} E^T.
        let se_chol = if self.num_eq > 0 {
            let p = self.num_eq;
            // Forward-solve each (scaled) equality row against the H factor.
            let mut half = Vec::with_capacity(p);
            for eq in &self.prob.equalities {
                let mut col = vec![0.0; self.n];
                for &(v, coef) in &eq.terms {
                    col[v] += coef;
                }
                for (v, d) in col.iter_mut().zip(&fact.h_scale) {
                    *v *= d;
                }
                crate::linalg::solve_lower(&fact.h_chol, &mut col);
                half.push(col);
            }
            let mut se = Mat::zeros(p, p);
            for i in 0..p {
                for j in i..p {
                    let v = dot(&half[i], &half[j]);
                    se[(i, j)] = v;
                    se[(j, i)] = v;
                }
            }
            let max_diag = (0..p)
                .map(|i| se[(i, i)].abs())
                .fold(0.0f64, f64::max)
                .max(1.0);
            let mut factored = None;
            for &reg in &[0.0, 1e-14, 1e-11, 1e-8] {
                let mut cand = se.clone();
                if reg > 0.0 {
                    for i in 0..p {
                        cand[(i, i)] += reg * max_diag;
                    }
                }
                if cholesky_in_place(&mut cand).is_ok() {
                    factored = Some(cand);
                    break;
                }
            }
            factored?
        } else {
            Mat::zeros(0, 0)
        };

        Some(Factorization { se_chol, ..fact })
    }

    /// Solve the 3x3 scaled KKT system
    /// `[0 E^T G^T; E 0 0; G 0 -W^T W] (ux, uy, uz) = (bx, by, bz)`
    /// with `G = -L`, via the normal equations plus one round of iterative
    /// refinement.
    /// Returns the solution together with its achieved relative residual so
    /// the caller can tell when factorization accuracy has run out.
    fn kkt_solve(
        &self,
        f: &Factorization,
        scalings: &[BlockScaling],
        bx: &[f64],
        by: &[f64],
        bz: &[f64],
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>, f64) {
        let rhs_norm = inf_norm(bx).max(inf_norm(by)).max(inf_norm(bz)).max(1e-300);
        let residual_of = |u: &(Vec<f64>, Vec<f64>, Vec<f64>)| {
            let (r1, r2, r3) = self.kkt_apply(scalings, &u.0, &u.1, &u.2);
            let mut res: f64 = 0.0;
            for (b, r) in bx.iter().zip(&r1) {
                res = res.max((b - r).abs());
            }
            for (b, r) in by.iter().zip(&r2) {
                res = res.max((b - r).abs());
            }
            for (b, r) in bz.iter().zip(&r3) {
                res = res.max((b - r).abs());
            }
            res / rhs_norm
        };

        let mut current = self.kkt_solve_raw(f, scalings, bx, by, bz);
        let mut best = current.clone();
        let mut best_res = residual_of(&best);
        for _ in 0..6 {
            if best_res < 1e-14 {
                break;
            }
            let (r1, r2, r3) = self.kkt_apply(scalings, &current.0, &current.1, &current.2);
            let ex: Vec<f64> = bx.iter().zip(&r1).map(|(b, r)| b - r).collect();
            let ey: Vec<f64> = by.iter().zip(&r2).map(|(b, r)| b - r).collect();
            let ez: Vec<f64> = bz.iter().zip(&r3).map(|(b, r)| b - r).collect();
            let (cx, cy, cz) = self.kkt_solve_raw(f, scalings, &ex, &ey, &ez);
            for (u, c) in current.0.iter_mut().zip(&cx) {
                *u += c;
            }
            for (u, c) in current.1.iter_mut().zip(&cy) {
                *u += c;
            }
            for (u, c) in current.2.iter_mut().zip(&cz) {
                *u += c;
            }
            let res = residual_of(&current);
            if res < best_res {
                best_res = res;
                best = current.clone();
            } else {
                break;
            }
        }
        (best.0, best.1, best.2, best_res)
    }

    fn kkt_solve_raw(
        &self,
        f: &Factorization,
        scalings: &[BlockScaling],
        bx: &[f64],
        by: &[f64],
        bz: &[f64],
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        // v = bx - L^T (W^T W)^{-1} bz
        let wtw_inv_bz = self.wtw_inv(scalings, bz);
        let lt = self.apply_map_t(&wtw_inv_bz);
        let v: Vec<f64> = bx.iter().zip(&lt).map(|(b, l)| b - l).collect();

        let mut t = v.clone();
        f.h_solve(&mut t);

        let (ux, uy) = if self.num_eq > 0 {
            let et = self.apply_eq(&t);
            let mut rhs_y: Vec<f64> = et.iter().zip(by).map(|(a, b)| a - b).collect();
            solve_cholesky(&f.se_chol, &mut rhs_y);
            let ety = self.apply_eq_t(&rhs_y);
            let mut ux: Vec<f64> = v.iter().zip(&ety).map(|(a, b)| a - b).collect();
            f.h_solve(&mut ux);
            (ux, rhs_y)
        } else {
            (t, Vec::new())
        };

        // uz = (W^T W)^{-1} (-L ux - bz)
        let lx = self.apply_map(&ux);
        let arg: Vec<f64> = lx.iter().zip(bz).map(|(l, b)| -l - b).collect();
        let uz = self.wtw_inv(scalings, &arg);
        (ux, uy, uz)
    }

    /// Apply the KKT matrix (for refinement).
    fn kkt_apply(
        &self,
        scalings: &[BlockScaling],
        ux: &[f64],
        uy: &[f64],
        uz: &[f64],
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let ety = self.apply_eq_t(uy);
        let ltz = self.apply_map_t(uz);
        let r1: Vec<f64> = ety.iter().zip(&ltz).map(|(a, b)| a - b).collect();
        let r2 = self.apply_eq(ux);
        let lx = self.apply_map(ux);
        let wtwz = self.wtw(scalings, uz);
        let r3: Vec<f64> = lx.iter().zip(&wtwz).map(|(l, w)| -l - w).collect();
        (r1, r2, r3)
    }

    // --- directions --------------------------------------------------------

    #[allow(clippy::too_many_arguments)]
    fn direction(
        &self,
        f: &Factorization,
        scalings: &[BlockScaling],
        base: &(Vec<f64>, Vec<f64>, Vec<f64>),
        rx: &[f64],
        ry: &[f64],
        rz: &[f64],
        rtau: f64,
        ds_target: &[f64],
        dkappa_target: f64,
    ) -> Direction {
        // d~s = lambda o^{-1} ds_target (per block, diagonal scaling point).
        let mut ds_tilde = vec![0.0; self.m_total];
        for (bi, sc) in scalings.iter().enumerate() {
            let off = self.offs[bi];
            let q = sc.dim;
            for c in 0..q {
                for r in 0..=c {
                    let idx = off + svec_index(r, c);
                    ds_tilde[idx] = 2.0 * ds_target[idx] / (sc.lambda[r] + sc.lambda[c]);
                }
            }
        }
        // bz = rz - W^T d~s
        let mut wt_ds = vec![0.0; self.m_total];
        for (bi, sc) in scalings.iter().enumerate() {
            let r = Self::congr_t(&sc.r, self.block_slice(&ds_tilde, bi));
            wt_ds[self.offs[bi]..self.offs[bi] + r.len()].copy_from_slice(&r);
        }
        let bz: Vec<f64> = rz.iter().zip(&wt_ds).map(|(r, w)| r - w).collect();

        let (ux, uy, uz, kkt_res) = self.kkt_solve(f, scalings, rx, ry, &bz);

        let (x1, y1, z1) = base;
        let num = rtau - dkappa_target / self.tau - dot(&self.c, &ux) - dot(&self.rhs, &uy);
        let den = dot(&self.c, x1) + dot(&self.rhs, y1) - self.kappa / self.tau;
        let dtau = num / den;

        let dx: Vec<f64> = ux.iter().zip(x1).map(|(u, b)| u + dtau * b).collect();
        let dy: Vec<f64> = uy.iter().zip(y1).map(|(u, b)| u + dtau * b).collect();
        let dz: Vec<f64> = uz.iter().zip(z1).map(|(u, b)| u + dtau * b).collect();

        // ds = W^T d~s - W^T W dz
        let wtw_dz = self.wtw(scalings, &dz);
        let ds: Vec<f64> = wt_ds.iter().zip(&wtw_dz).map(|(a, b)| a - b).collect();
        let dkappa = (dkappa_target - self.kappa * dtau) / self.tau;

        Direction {
            dx,
            dy,
            dz,
            ds,
            dtau,
            dkappa,
            kkt_res,
        }
    }

    /// Longest step keeping all blocks PSD and tau, kappa positive.
    fn max_step(&self, scalings: &[BlockScaling], dir: &Direction) -> f64 {
        let mut alpha = f64::INFINITY;
        for (bi, sc) in scalings.iter().enumerate() {
            let q = sc.dim;
            // s-direction in scaled coordinates.
            let ds_scaled = Self::congr_t(&sc.r_inv, self.block_slice(&dir.ds, bi));
            alpha = alpha.min(step_bound(&ds_scaled, &sc.lambda, q));
            // z-direction.
            let dz_scaled = Self::congr(&sc.r, self.block_slice(&dir.dz, bi));
            alpha = alpha.min(step_bound(&dz_scaled, &sc.lambda, q));
        }
        if dir.dtau < 0.0 {
            alpha = alpha.min(-self.tau / dir.dtau);
        }
        if dir.dkappa < 0.0 {
            alpha = alpha.min(-self.kappa / dir.dkappa);
        }
        alpha
    }

    fn take_step(&mut self, dir: &Direction, alpha: f64) {
        for (v, d) in self.x.iter_mut().zip(&dir.dx) {
            *v += alpha * d;
        }
        for (v, d) in self.yq.iter_mut().zip(&dir.dy) {
            *v += alpha * d;
        }
        for (v, d) in self.z.iter_mut().zip(&dir.dz) {
            *v += alpha * d;
        }
        for (v, d) in self.s.iter_mut().zip(&dir.ds) {
            *v += alpha * d;
        }
        self.tau += alpha * dir.dtau;
        self.kappa += alpha * dir.dkappa;
    }

    // --- termination --------------------------------------------------------

    fn metrics(&self) -> IterationMetrics {
        let lx = self.apply_map(&self.x);
        let ex = self.apply_eq(&self.x);
        // Primal residuals at x/tau.
        let pres_eq = ex
            .iter()
            .zip(&self.rhs)
            .map(|(a, b)| (a / self.tau - b).abs())
            .fold(0.0f64, f64::max);
        let pres_cone = self
            .s
            .iter()
            .zip(&lx)
            .map(|(s, l)| ((s - l) / self.tau).abs())
            .fold(0.0f64, f64::max);
        let rhs_scale = self.rhs.iter().fold(1.0f64, |m, &v| m.max(v.abs()));
        let pres = pres_eq.max(pres_cone) / rhs_scale;

        // Dual residual at (y, z)/tau.
        let ety = self.apply_eq_t(&self.yq);
        let ltz = self.apply_map_t(&self.z);
        let c_scale = self.c.iter().fold(1.0f64, |m, &v| m.max(v.abs()));
        let dres = ety
            .iter()
            .zip(&ltz)
            .zip(&self.c)
            .map(|((a, b), c)| ((a - b) / self.tau + c).abs())
            .fold(0.0f64, f64::max)
            / c_scale;

        let gap = dot(&self.s, &self.z);
        let pobj = dot(&self.c, &self.x) / self.tau;
        let dobj = -dot(&self.rhs, &self.yq) / self.tau;
        let relgap = gap / (self.tau * self.tau) / 1.0f64.max(pobj.abs()).max(dobj.abs());

        // Primal-infeasibility certificate quality.
        let cert_val = dot(&self.rhs, &self.yq);
        let pinf_res = if cert_val < 0.0 {
            let scale = -1.0 / cert_val;
            ety.iter()
                .zip(&ltz)
                .map(|(a, b)| ((a - b) * scale).abs())
                .fold(0.0f64, f64::max)
        } else {
            f64::INFINITY
        };

        // Dual-infeasibility (unbounded objective) certificate quality.
        let cobj = dot(&self.c, &self.x);
        let dinf_res = if cobj < 0.0 {
            let scale = -1.0 / cobj;
            let r1 = ex.iter().map(|a| (a * scale).abs()).fold(0.0f64, f64::max);
            let r2 = self
                .s
                .iter()
                .zip(&lx)
                .map(|(s, l)| ((s - l) * scale).abs())
                .fold(0.0f64, f64::max);
            r1.max(r2)
        } else {
            f64::INFINITY
        };

        let mu = (gap + self.tau * self.kappa) / (self.nu + 1.0);
        IterationMetrics {
            pres,
            dres,
            gap,
            relgap,
            pinf_res,
            dinf_res,
            mu,
        }
    }

    /// Witness at a normalized point: the block slacks are the PSD blocks
    /// evaluated there.
    fn witness_at(&self, y: Vec<f64>) -> FeasibleWitness {
        let lx = self.apply_map(&y);
        let slacks: Vec<Vec<f64>> = (0..self.dims.len())
            .map(|bi| self.block_slice(&lx, bi).to_vec())
            .collect();
        FeasibleWitness {
            y,
            block_slacks: slacks,
        }
    }

    fn farkas_ray(&self) -> FarkasRay {
        let cert_val = dot(&self.rhs, &self.yq);
        let scale = -1.0 / cert_val;
        let lambda: Vec<f64> = self.yq.iter().map(|v| -v * scale).collect();
        let duals: Vec<Vec<f64>> = (0..self.dims.len())
            .map(|bi| {
                self.block_slice(&self.z, bi)
                    .iter()
                    .map(|v| v * scale)
                    .collect()
            })
            .collect();
        // Residual of E^T lambda + L^T Q after normalization.
        let ety = self.apply_eq_t(&lambda);
        let q_flat: Vec<f64> = self.z.iter().map(|v| v * scale).collect();
        let ltq = self.apply_map_t(&q_flat);
        let residual = ety
            .iter()
            .zip(&ltq)
            .map(|(a, b)| (a + b).abs())
            .fold(0.0f64, f64::max);
        let margin = dot(&self.rhs, &lambda);
        FarkasRay {
            eq_multipliers: lambda,
            block_duals: duals,
            margin,
            residual,
        }
    }

    // --- main loop -----------------------------------------------------------

    fn snapshot(&self) -> IterateSnapshot {
        IterateSnapshot {
            x: self.x.clone(),
            yq: self.yq.clone(),
            s: self.s.clone(),
            z: self.z.clone(),
            tau: self.tau,
            kappa: self.kappa,
        }
    }

    fn restore(&mut self, snap: &IterateSnapshot) {
        self.x.clone_from(&snap.x);
        self.yq.clone_from(&snap.yq);
        self.s.clone_from(&snap.s);
        self.z.clone_from(&snap.z);
        self.tau = snap.tau;
        self.kappa = snap.kappa;
    }

    /// Classify the current iterate; `None` when neither criterion holds.
    ///
    /// Without an objective, a primal-feasible normalized point already *is*
    /// the sought witness, so the dual residual and gap are not required and
    /// the check runs on the true witness measure (equality violation and
    /// block eigenvalues), with a least-squares projection onto the equality
    /// manifold as a rescue when only the equalities are slightly off. With
    /// an objective all three residuals certify optimality.
    fn classify(&self, m: &IterationMetrics) -> Option<SdpStatus> {
        if self.pure_feasibility {
            // Only run the eigenvalue checks once the iterate is close.
            if m.pres <= 1e4 * self.opts.tol_feas && self.tau > 1e-10 {
                let y: Vec<f64> = self.x.iter().map(|v| v / self.tau).collect();
                let (eq_viol, min_eig) = self.prob.witness_quality(&y);
                if eq_viol <= self.opts.tol_feas && min_eig >= -self.opts.tol_feas {
                    return Some(SdpStatus::Feasible(self.witness_at(y)));
                }
                if min_eig >= -0.5 * self.opts.tol_feas {
                    let mut polished = y;
                    self.project_onto_equalities(&mut polished);
                    let (eq2, eig2) = self.prob.witness_quality(&polished);
                    if eq2 <= self.opts.tol_feas && eig2 >= -self.opts.tol_feas {
                        return Some(SdpStatus::Feasible(self.witness_at(polished)));
                    }
                }
            }
        } else if m.pres <= self.opts.tol_feas
            && m.dres <= self.opts.tol_feas
            && m.relgap <= self.opts.tol_gap
        {
            return Some(SdpStatus::Feasible(
                self.witness_at(self.x.iter().map(|v| v / self.tau).collect()),
            ));
        }
        if m.pinf_res <= self.opts.tol_infeas {
            return Some(SdpStatus::Infeasible(self.farkas_ray()));
        }
        None
    }

    /// Minimum-norm shift of `y` onto the equality manifold.
    fn project_onto_equalities(&self, y: &mut [f64]) {
        let Some(eet) = &self.eet_chol else { return };
        let ey = self.apply_eq(y);
        let mut resid: Vec<f64> = self.rhs.iter().zip(&ey).map(|(r, v)| r - v).collect();
        solve_cholesky(eet, &mut resid);
        let correction = self.apply_eq_t(&resid);
        for (v, c) in y.iter_mut().zip(&correction) {
            *v += c;
        }
    }

    fn run(&mut self) -> SdpOutcome {
        let mut last = Residuals {
            primal: f64::INFINITY,
            dual: f64::INFINITY,
            gap: f64::INFINITY,
        };
        let mut small_steps = 0usize;
        let mut stalled = 0usize;
        let mut last_mu = f64::INFINITY;
        let mut best: Option<(f64, IterateSnapshot)> = None;
        let mut best_ray: Option<(f64, IterateSnapshot)> = None;
        let mut iterations = 0;
        let mut exit_reason = String::from("iteration limit reached");

        'outer: for iter in 0..self.opts.max_iterations {
            iterations = iter;
            let m = self.metrics();
            last = Residuals {
                primal: m.pres,
                dual: m.dres,
                gap: m.relgap,
            };
            if self.opts.verbose {
                eprintln!(
                    "iter {iter:3}  mu {:9.2e}  pres {:9.2e}  dres {:9.2e}  gap {:9.2e}  tau {:8.2e}  kappa {:8.2e}  pinf {:9.2e}",
                    m.mu, m.pres, m.dres, m.relgap, self.tau, self.kappa, m.pinf_res
                );
            }

            // Track the most accurate iterate seen, by feasibility score and
            // by ray quality separately.
            let score = if self.pure_feasibility {
                m.pres
            } else {
                (m.pres / self.opts.tol_feas)
                    .max(m.dres / self.opts.tol_feas)
                    .max(m.relgap / self.opts.tol_gap)
            };
            if best.as_ref().is_none_or(|(s, _)| score < *s) {
                best = Some((score, self.snapshot()));
            }
            if m.pinf_res.is_finite() && best_ray.as_ref().is_none_or(|(r, _)| m.pinf_res < *r) {
                best_ray = Some((m.pinf_res, self.snapshot()));
            }

            if let Some(status) = self.classify(&m) {
                return SdpOutcome {
                    status,
                    iterations: iter,
                    residuals: last,
                };
            }
            if m.dinf_res <= self.opts.tol_infeas {
                return SdpOutcome {
                    status: SdpStatus::Unknown {
                        reason: "objective certified unbounded below (dual infeasible)".into(),
                    },
                    iterations: iter,
                    residuals: last,
                };
            }
            if self.tau < 1e-12 && self.kappa < 1e-12 {
                exit_reason = "tau and kappa both collapsed".into();
                break 'outer;
            }
            // Stall detection on the barrier parameter.
            if m.mu > 0.9 * last_mu {
                stalled += 1;
                if stalled >= 4 {
                    exit_reason = "no progress in the barrier parameter".into();
                    break 'outer;
                }
            } else {
                stalled = 0;
            }
            last_mu = m.mu;

            let Some(scalings) = self.compute_scalings() else {
                exit_reason = "scaling breakdown: iterate left the cone interior".into();
                break 'outer;
            };
            let Some(factors) = self.factorize(&scalings) else {
                exit_reason = "KKT factorization failed".into();
                break 'outer;
            };

            // Residual right-hand sides.
            let ety = self.apply_eq_t(&self.yq);
            let ltz = self.apply_map_t(&self.z);
            let rx: Vec<f64> = (0..self.n)
                .map(|i| -(ety[i] - ltz[i] + self.c[i] * self.tau))
                .collect();
            let ex = self.apply_eq(&self.x);
            let ry: Vec<f64> = (0..self.num_eq)
                .map(|k| -(ex[k] - self.rhs[k] * self.tau))
                .collect();
            let lx = self.apply_map(&self.x);
            let rz: Vec<f64> = (0..self.m_total).map(|k| -(self.s[k] - lx[k])).collect();
            let rtau = -(dot(&self.c, &self.x) + dot(&self.rhs, &self.yq) + self.kappa);

            // Common solve used for the tau recombination.
            let neg_c: Vec<f64> = self.c.iter().map(|v| -v).collect();
            let zeros_m = vec![0.0; self.m_total];
            let (bx1, by1, bz1, base_res) =
                self.kkt_solve(&factors, &scalings, &neg_c, &self.rhs.clone(), &zeros_m);
            let base = (bx1, by1, bz1);

            // Affine (predictor) direction: drive lambda o lambda and tau*kappa to zero.
            let mut ds_aff = vec![0.0; self.m_total];
            for (bi, sc) in scalings.iter().enumerate() {
                let off = self.offs[bi];
                for r in 0..sc.dim {
                    ds_aff[off + svec_index(r, r)] = -sc.lambda[r] * sc.lambda[r];
                }
            }
            let aff = self.direction(
                &factors,
                &scalings,
                &base,
                &rx,
                &ry,
                &rz,
                rtau,
                &ds_aff,
                -self.tau * self.kappa,
            );
            let alpha_aff = self.max_step(&scalings, &aff).min(1.0);
            let sigma = (1.0 - alpha_aff).powi(3).clamp(0.0, 1.0);

            // Combined (corrector) direction.
            let mut ds_comb = ds_aff;
            for (bi, sc) in scalings.iter().enumerate() {
                let off = self.offs[bi];
                let q = sc.dim;
                // Mehrotra correction: -(W^{-T} ds_aff) o (W dz_aff).
                let u = smat(
                    &Self::congr_t(&sc.r_inv, &aff.ds[off..off + svec_len(q)]),
                    q,
                );
                let w = smat(&Self::congr(&sc.r, &aff.dz[off..off + svec_len(q)]), q);
                let uw = u.matmul(&w);
                let mut corr = Mat::zeros(q, q);
                for r in 0..q {
                    for c in 0..q {
                        corr[(r, c)] = 0.5 * (uw[(r, c)] + uw[(c, r)]);
                    }
                }
                let mut corr_svec = vec![0.0; svec_len(q)];
                svec_from(&corr, &mut corr_svec);
                for (k, cv) in corr_svec.iter().enumerate() {
                    ds_comb[off + k] -= cv;
                }
                for r in 0..q {
                    ds_comb[off + svec_index(r, r)] += sigma * m.mu;
                }
            }
            let dkappa_comb = -self.tau * self.kappa - aff.dtau * aff.dkappa + sigma * m.mu;
            let eta = 1.0 - sigma;
            let rx_c: Vec<f64> = rx.iter().map(|v| eta * v).collect();
            let ry_c: Vec<f64> = ry.iter().map(|v| eta * v).collect();
            let rz_c: Vec<f64> = rz.iter().map(|v| eta * v).collect();
            let comb = self.direction(
                &factors,
                &scalings,
                &base,
                &rx_c,
                &ry_c,
                &rz_c,
                eta * rtau,
                &ds_comb,
                dkappa_comb,
            );

            // When the factorization can no longer deliver usable directions,
            // stepping would only corrupt the iterate.
            let dir_quality = comb.kkt_res.max(aff.kkt_res).max(base_res);
            if dir_quality > 1e-4 {
                exit_reason = format!("KKT solve accuracy exhausted (residual {dir_quality:.2e})");
                break 'outer;
            }

            let alpha = (0.99 * self.max_step(&scalings, &comb)).min(1.0);
            if alpha < 1e-7 {
                small_steps += 1;
                if small_steps >= 3 {
                    exit_reason = format!("step length collapsed (alpha = {alpha:.2e})");
                    break 'outer;
                }
            } else {
                small_steps = 0;
            }
            self.take_step(&comb, alpha);
        }

        // Numerical exit: fall back to the most accurate iterates seen and
        // classify those before giving up.
        if let Some((res, snap)) = &best_ray {
            if *res <= self.opts.tol_infeas {
                self.restore(snap);
                let m = self.metrics();
                return SdpOutcome {
                    status: SdpStatus::Infeasible(self.farkas_ray()),
                    iterations,
                    residuals: Residuals {
                        primal: m.pres,
                        dual: m.dres,
                        gap: m.relgap,
                    },
                };
            }
        }
        if let Some((_, snap)) = &best {
            self.restore(snap);
            let m = self.metrics();
            last = Residuals {
                primal: m.pres,
                dual: m.dres,
                gap: m.relgap,
            };
            if let Some(status) = self.classify(&m) {
                return SdpOutcome {
                    status,
                    iterations,
                    residuals: last,
                };
            }
        }
        SdpOutcome {
            status: SdpStatus::Unknown {
                reason: format!(
                    "{exit_reason}; best iterate residuals: primal {:.2e}, dual {:.2e}, gap {:.2e}",
                    last.primal, last.dual, last.gap
                ),
            },
            iterations,
            residuals: last,
        }
    }
}

struct Direction {
    dx: Vec<f64>,
    dy: Vec<f64>,
    dz: Vec<f64>,
    ds: Vec<f64>,
    dtau: f64,
    dkappa: f64,
    /// Relative residual of the underlying KKT solve.
    kkt_res: f64,
}

struct IterateSnapshot {
    x: Vec<f64>,
    yq: Vec<f64>,
    s: Vec<f64>,
    z: Vec<f64>,
    tau: f64,
    kappa: f64,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

struct IterationMetrics {
    pres: f64,
    dres: f64,
    #[allow(dead_code)]
    gap: f64,
    relgap: f64,
    pinf_res: f64,
    dinf_res: f64,
    mu: f64,
}

/// Largest alpha with `I + alpha Lambda^{-1/2} D Lambda^{-1/2}` PSD.
fn step_bound(d_scaled: &[f64], lambda: &[f64], q: usize) -> f64 {
    let mut t = Mat::zeros(q, q);
    smat_into(d_scaled, &mut t);
    for r in 0..q {
        for c in 0..q {
            t[(r, c)] /= (lambda[r] * lambda[c]).sqrt();
        }
    }
    let (eigs, _) = sym_eigen(&t);
    let min = eigs.first().copied().unwrap_or(0.0);
    if min < 0.0 {
        1.0 / (-min)
    } else {
        f64::INFINITY
    }
}

fn zero_upper(m: &mut Mat) {
    let n = m.rows();
    for r in 0..n {
        for c in r + 1..n {
            m[(r, c)] = 0.0;
        }
    }
}
