//! Block elimination: at valency >= 2 the assembled operator is conjugated
//! to the direct sum of its atoms by a chain of unit upper-triangular
//! transforms I + X E_{ij}, each X solving the Sylvester equation of its
//! block.

use super::sylvester::{solve_shift_recursion, solve_sylvester_generic, SylvesterOptions};
use crate::atomic::{assemble, ModelSpec};
use crate::band::BandMatrix;
use crate::bergman::{OperatorSource, TruncatedOperator};
use crate::block::BlockMatrix;
use crate::norms::cond_unit_upper;
use crate::{C64, Error, Result};

/// Outcome of the elimination.
#[derive(Debug, Clone)]
pub struct ReductionResult {
    /// Unit block-upper-triangular transform with Y T Y^{-1} block diagonal.
    pub y: BlockMatrix,
    pub y_inv: BlockMatrix,
    /// Y T Y^{-1}, conjugated from scratch as a check on the elimination.
    pub conjugated: BlockMatrix,
    /// Interior Frobenius norm of the off-diagonal blocks of `conjugated`
    /// plus the defect of its diagonal blocks against the atoms.
    pub offdiag_residual: f64,
    pub cond_y: f64,
}

impl ReductionResult {
    pub fn transform_operator(&self) -> Result<TruncatedOperator> {
        TruncatedOperator::new(
            self.y.to_band(),
            OperatorSource::Derived("similarity transform".into()),
        )
    }
}

/// Eliminate the off-diagonal blocks of the assembled model.  Requires
/// valency >= 2; each block is solved by the closed-form shift recursion on
/// its main diagonal and polished by the least-squares solver.
pub fn similarity_reduce(spec: &ModelSpec) -> Result<ReductionResult> {
    if spec.valency() < 2.0 {
        return Err(Error::ValencyTooSmall(spec.valency()));
    }
    let model = assemble(spec)?;
    let n = spec.rank();
    let nt = spec.trunc();
    let mut t = model.blocks().clone();
    let t_orig = model.blocks().clone();
    let mut y = BlockMatrix::identity(n, nt);
    let mut y_inv = BlockMatrix::identity(n, nt);

    for dist in 1..n {
        for i in 0..n - dist {
            let j = i + dist;
            let rhs = match t.block(i, j) {
                Some(b) if !b.is_zero() => b.clone(),
                _ => continue,
            };
            let x = solve_block(spec, i, j, &rhs, nt)?;

            // S_ij <- S_ij - (T_i X - X T_j), computed honestly: interior
            // cancels to rounding, the truncation edge keeps its junk.
            let t_i = t.block(i, i).unwrap().clone();
            let t_j = t.block(j, j).unwrap().clone();
            let sigma_x = t_i.matmul(&x).sub(&x.matmul(&t_j));
            let mut s_new = rhs.sub(&sigma_x);
            s_new.prune(1e-300);
            if s_new.is_zero() {
                t.clear_block(i, j);
            } else {
                t.set_block(i, j, s_new);
            }

            // row/column updates of the conjugation by I + X E_ij
            for c in j + 1..n {
                if let Some(sjc) = t.block(j, c).map(|b| b.clone()) {
                    t.axpy_block(i, c, C64::new(1.0, 0.0), &x.matmul(&sjc));
                }
            }
            for r in 0..i {
                if let Some(sri) = t.block(r, i).map(|b| b.clone()) {
                    t.axpy_block(r, j, C64::new(-1.0, 0.0), &sri.matmul(&x));
                }
            }

            // accumulate Y and its inverse
            for c in 0..n {
                if let Some(yjc) = y.block(j, c).map(|b| b.clone()) {
                    y.axpy_block(i, c, C64::new(1.0, 0.0), &x.matmul(&yjc));
                }
            }
            for r in 0..n {
                if let Some(yri) = y_inv.block(r, i).map(|b| b.clone()) {
                    y_inv.axpy_block(r, j, C64::new(-1.0, 0.0), &yri.matmul(&x));
                }
            }
        }
    }

    // conjugate the original operator from scratch and measure the defect
    let conjugated = y.matmul(&t_orig).matmul(&y_inv);
    let pad = 8 * n + 8;
    let window = nt.saturating_sub(pad);
    let mut resid2 = conjugated.offdiag_frobenius_window(window).powi(2);
    for i in 0..n {
        let defect = conjugated
            .block(i, i)
            .map(|b| b.sub(t_orig.block(i, i).unwrap()).frobenius_window(window))
            .unwrap_or(f64::INFINITY);
        resid2 += defect * defect;
    }
    let cond_y = cond_unit_upper(&y, 1e-8, 2000);
    Ok(ReductionResult {
        y,
        y_inv,
        conjugated,
        offdiag_residual: resid2.sqrt(),
        cond_y,
    })
}

/// Solve T_i X - X T_j = rhs for one block: closed recursion on the main
/// diagonal of rhs, then a least-squares polish with that seed.
fn solve_block(
    spec: &ModelSpec,
    i: usize,
    j: usize,
    rhs: &BandMatrix,
    nt: usize,
) -> Result<BandMatrix> {
    let k = j - i - 1; // main diagonal of the block sits k below the center
    let la = spec.lambda(i);
    let lb = spec.lambda(j);
    let c_diag: Vec<C64> = match rhs.diag(-(k as i64)) {
        Some(v) => v.to_vec(),
        None => vec![C64::new(0.0, 0.0); nt - k],
    };
    let x_coeffs = solve_shift_recursion(la, lb, k, &c_diag)?;
    let seed = BandMatrix::from_diag(nt, -((k + 1) as i64), {
        let mut v = x_coeffs;
        v.truncate(nt - k - 1);
        v
    });
    let a = TruncatedOperator::new(
        crate::bergman::build_atom(la, nt)?.matrix().clone(),
        OperatorSource::Atom { lambda: la },
    )?;
    let b = TruncatedOperator::new(
        crate::bergman::build_atom(lb, nt)?.matrix().clone(),
        OperatorSource::Atom { lambda: lb },
    )?;
    let c_op = TruncatedOperator::new(rhs.clone(), OperatorSource::Derived("rhs".into()))?;
    let opts = SylvesterOptions {
        tol: 1e-10,
        max_iter: 200,
        window: None,
        seed: Some(seed),
        probe: false,
    };
    let sol = solve_sylvester_generic(&a, &b, &c_op, &opts)?;
    Ok(sol.x.matrix().clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn rejects_small_valency() {
        let spec = ModelSpec::new(1.0, 1.5, 2, &[(0, 1, c(1.0, 0.0))], 64).unwrap();
        match similarity_reduce(&spec) {
            Err(Error::ValencyTooSmall(v)) => assert!((v - 1.5).abs() < 1e-15),
            other => panic!("expected ValencyTooSmall, got {other:?}"),
        }
    }

    #[test]
    fn two_block_reduction() {
        let spec = ModelSpec::new(1.0, 2.0, 2, &[(0, 1, c(1.0, 0.0))], 512).unwrap();
        let red = similarity_reduce(&spec).unwrap();
        assert!(red.offdiag_residual <= 1e-7, "residual {}", red.offdiag_residual);
        assert!(red.y.is_block_upper_triangular());
        // identity diagonal blocks
        for i in 0..2 {
            let d = red
                .y
                .block(i, i)
                .unwrap()
                .sub(&BandMatrix::identity(512))
                .frobenius();
            assert_eq!(d, 0.0);
        }
        assert!(red.cond_y.is_finite() && red.cond_y >= 1.0);
    }

    #[test]
    fn three_block_reduction_with_general_mu() {
        let spec = ModelSpec::new(
            1.0,
            2.5,
            3,
            &[(0, 1, c(1.0, 0.4)), (1, 2, c(-0.7, 0.1)), (0, 2, c(0.5, 0.0))],
            256,
        )
        .unwrap();
        let red = similarity_reduce(&spec).unwrap();
        assert!(red.offdiag_residual <= 1e-6, "residual {}", red.offdiag_residual);

        // Y Y^{-1} = I
        let prod = red.y.matmul(&red.y_inv);
        let mut defect = 0.0_f64;
        for i in 0..3 {
            for j in 0..3 {
                let blk = prod.block(i, j);
                let target = if i == j {
                    Some(BandMatrix::identity(256))
                } else {
                    None
                };
                let d = match (blk, target) {
                    (Some(b), Some(t)) => b.sub(&t).frobenius(),
                    (Some(b), None) => b.frobenius(),
                    (None, Some(t)) => t.frobenius(),
                    (None, None) => 0.0,
                };
                defect = defect.max(d);
            }
        }
        assert!(defect < 1e-8, "inverse defect {defect}");
    }

    #[test]
    fn cond_stable_under_doubling() {
        let spec = ModelSpec::new(1.5, 2.0, 2, &[(0, 1, c(1.0, 0.0))], 256).unwrap();
        let r1 = similarity_reduce(&spec).unwrap();
        let r2 = similarity_reduce(&spec.with_trunc(512)).unwrap();
        let change = (r2.cond_y - r1.cond_y).abs() / r1.cond_y;
        assert!(change < 0.05, "cond {} -> {}", r1.cond_y, r2.cond_y);
    }
}
