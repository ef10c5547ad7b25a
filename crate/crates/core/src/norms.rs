//! Operator-norm estimation by power iteration on A*A.
//!
//! Matrices built from a single weighted-shift diagonal have their largest
//! singular value exactly at the largest entry magnitude; power iteration on
//! those would crawl through the clustered spectrum, so they are special
//! cased.

use crate::band::BandMatrix;
use crate::block::BlockMatrix;
use crate::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Anything that can act on a vector together with its adjoint.
pub trait LinearOp {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C64], y: &mut [C64]);
    fn apply_adj(&self, x: &[C64], y: &mut [C64]);
}

impl LinearOp for BandMatrix {
    fn dim(&self) -> usize {
        self.dim()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.matvec(x, y);
    }
    fn apply_adj(&self, x: &[C64], y: &mut [C64]) {
        self.matvec_adj(x, y);
    }
}

impl LinearOp for BlockMatrix {
    fn dim(&self) -> usize {
        self.dim()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.matvec(x, y);
    }
    fn apply_adj(&self, x: &[C64], y: &mut [C64]) {
        self.matvec_adj(x, y);
    }
}

pub fn norm2(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

fn seeded_unit_vector(dim: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let n = norm2(&v);
    for x in v.iter_mut() {
        *x /= n;
    }
    v
}

/// Outcome of a norm estimate.
#[derive(Debug, Clone, Copy)]
pub struct NormEstimate {
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Largest singular value of `op` by power iteration on op*op.
pub fn operator_norm_op(op: &dyn LinearOp, tol: f64, max_iter: usize) -> NormEstimate {
    let dim = op.dim();
    let mut v = seeded_unit_vector(dim, 0x5eed_cd1a);
    let mut av = vec![C64::new(0.0, 0.0); dim];
    let mut w = vec![C64::new(0.0, 0.0); dim];
    let mut sigma = 0.0_f64;
    for it in 1..=max_iter {
        op.apply(&v, &mut av);
        op.apply_adj(&av, &mut w);
        let n = norm2(&w);
        if n == 0.0 {
            return NormEstimate {
                value: 0.0,
                converged: true,
                iterations: it,
            };
        }
        let new_sigma = norm2(&av);
        for (x, y) in v.iter_mut().zip(&w) {
            *x = y / n;
        }
        if (new_sigma - sigma).abs() <= tol * new_sigma.max(1e-300) {
            return NormEstimate {
                value: new_sigma,
                converged: true,
                iterations: it,
            };
        }
        sigma = new_sigma;
    }
    NormEstimate {
        value: sigma,
        converged: false,
        iterations: max_iter,
    }
}

/// Largest singular value of a banded matrix.  Single-diagonal matrices are
/// weighted shifts composed with a permutation, so their norm is the largest
/// entry magnitude, exactly.
pub fn operator_norm_band(m: &BandMatrix, tol: f64, max_iter: usize) -> NormEstimate {
    if m.n_diags() <= 1 {
        return NormEstimate {
            value: m.max_abs(),
            converged: true,
            iterations: 0,
        };
    }
    operator_norm_op(m, tol, max_iter)
}

/// Condition-number estimate of a unit block-upper-triangular matrix:
/// power iteration for the largest singular value, inverse iteration through
/// the triangular solves for the smallest.
pub fn cond_unit_upper(y: &BlockMatrix, tol: f64, max_iter: usize) -> f64 {
    let sigma_max = operator_norm_op(y, tol, max_iter).value;
    let dim = y.dim();
    let mut v = seeded_unit_vector(dim, 0x17e5_0b01);
    let mut prev = 0.0_f64;
    let mut inv_norm = 0.0_f64;
    for _ in 0..max_iter {
        // w = (Y* Y)^{-1} v = Y^{-1} Y^{-*} v
        let t = y.solve_unit_upper_adj(&v);
        let w = y.solve_unit_upper(&t);
        let n = norm2(&w);
        inv_norm = n.sqrt(); // eigenvalue of (Y*Y)^{-1} ~ n, singular value sqrt
        for (x, z) in v.iter_mut().zip(&w) {
            *x = z / n;
        }
        if (n - prev).abs() <= tol * n.max(1e-300) {
            break;
        }
        prev = n;
    }
    sigma_max * inv_norm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_norm_is_exact() {
        let m = BandMatrix::from_diag(2, 0, vec![C64::new(1.0, 0.0), C64::new(2.0, 0.0)]);
        let est = operator_norm_band(&m, 1e-10, 100);
        assert_eq!(est.value, 2.0);
    }

    #[test]
    fn power_iteration_matches_known_singular_value() {
        // [[0, 3], [0, 0]] + identity has singular values of I + nilpotent:
        // A = [[1,3],[0,1]], A*A = [[1,3],[3,10]], eigs (11 +/- sqrt(117))/2.
        let mut m = BandMatrix::identity(2);
        m.set(0, 1, C64::new(3.0, 0.0));
        let est = operator_norm_op(&m, 1e-12, 500);
        let expect = ((11.0 + 117.0_f64.sqrt()) / 2.0).sqrt();
        assert!((est.value - expect).abs() < 1e-9, "{}", est.value);
    }

    #[test]
    fn cond_of_identity_is_one() {
        let y = BlockMatrix::identity(3, 4);
        let c = cond_unit_upper(&y, 1e-10, 200);
        assert!((c - 1.0).abs() < 1e-8);
    }

    #[test]
    fn cond_grows_with_offdiagonal_size() {
        let mut y = BlockMatrix::identity(2, 2);
        y.set_block(
            0,
            1,
            BandMatrix::from_diag(2, 0, vec![C64::new(10.0, 0.0), C64::new(10.0, 0.0)]),
        );
        let c = cond_unit_upper(&y, 1e-12, 2000);
        // cond of [[1,10],[0,1]] is ((sqrt(104)+10)/2)^2 ~ 102.0
        let mu = 10.0_f64;
        let s_max = (mu + (mu * mu + 4.0).sqrt()) / 2.0;
        assert!((c - s_max * s_max).abs() / (s_max * s_max) < 1e-6, "{c}");
    }
}
