//! Scaled symmetric vectorization.
//!
//! A symmetric `q x q` matrix packs into a vector of length `q(q+1)/2`, upper
//! triangle by columns, off-diagonal entries scaled by `sqrt(2)` so that the
//! Euclidean inner product of two svecs equals the Frobenius inner product of
//! the matrices.

use crate::linalg::Mat;

pub const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Packed length for a `q x q` symmetric matrix.
pub fn svec_len(q: usize) -> usize {
    q * (q + 1) / 2
}

/// Packed index of entry `(r, c)` with `r <= c`.
#[inline]
pub fn svec_index(r: usize, c: usize) -> usize {
    debug_assert!(r <= c);
    c * (c + 1) / 2 + r
}

/// Pack a symmetric matrix.
pub fn svec_from(m: &Mat, out: &mut [f64]) {
    let q = m.rows();
    debug_assert_eq!(out.len(), svec_len(q));
    let mut k = 0;
    for c in 0..q {
        for r in 0..=c {
            out[k] = if r == c { m[(r, c)] } else { SQRT2 * m[(r, c)] };
            k += 1;
        }
    }
}

/// Unpack into a symmetric matrix.
pub fn smat_into(v: &[f64], out: &mut Mat) {
    let q = out.rows();
    debug_assert_eq!(v.len(), svec_len(q));
    let mut k = 0;
    for c in 0..q {
        for r in 0..=c {
            let val = if r == c { v[k] } else { v[k] / SQRT2 };
            out[(r, c)] = val;
            out[(c, r)] = val;
            k += 1;
        }
    }
}

pub fn smat(v: &[f64], q: usize) -> Mat {
    let mut m = Mat::zeros(q, q);
    smat_into(v, &mut m);
    m
}

/// svec of the identity matrix.
pub fn svec_identity(q: usize, out: &mut [f64]) {
    out.fill(0.0);
    for r in 0..q {
        out[svec_index(r, r)] = 1.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot;

    #[test]
    fn round_trip_and_inner_product() {
        let q = 5;
        let a = Mat::from_fn(q, q, |r, c| ((r * c + r + 2 * c) % 7) as f64 / 3.0);
        let sym = |m: &Mat| Mat::from_fn(q, q, |r, c| 0.5 * (m[(r, c)] + m[(c, r)]));
        let (sa, sb) = (sym(&a), sym(&a.transpose()));
        let mut va = vec![0.0; svec_len(q)];
        let mut vb = vec![0.0; svec_len(q)];
        svec_from(&sa, &mut va);
        svec_from(&sb, &mut vb);
        // Round trip.
        let back = smat(&va, q);
        for r in 0..q {
            for c in 0..q {
                assert!((back[(r, c)] - sa[(r, c)]).abs() < 1e-15);
            }
        }
        // <svec a, svec b> = tr(a b)
        let frob: f64 = (0..q)
            .flat_map(|r| (0..q).map(move |c| (r, c)))
            .map(|(r, c)| sa[(r, c)] * sb[(r, c)])
            .sum();
        assert!((dot(&va, &vb) - frob).abs() < 1e-12);
    }

    #[test]
    fn identity_norm() {
        let q = 4;
        let mut e = vec![0.0; svec_len(q)];
        svec_identity(q, &mut e);
        assert!((dot(&e, &e) - q as f64).abs() < 1e-15);
    }
}
