//! n x n grids of equally sized [`BandMatrix`] blocks.
//!
//! The assembled quasi-homogeneous operators, the elimination transforms and
//! the commutant elements are all block matrices whose blocks are single
//! shifts or short products of shifts; keeping the block structure explicit
//! makes the elimination and the triangular solves direct.

use crate::band::BandMatrix;
use crate::C64;

#[derive(Debug, Clone)]
pub struct BlockMatrix {
    n: usize,
    bdim: usize,
    blocks: Vec<Option<BandMatrix>>,
}

impl BlockMatrix {
    pub fn zeros(n: usize, bdim: usize) -> Self {
        assert!(n > 0 && bdim > 0);
        BlockMatrix {
            n,
            bdim,
            blocks: vec![None; n * n],
        }
    }

    pub fn identity(n: usize, bdim: usize) -> Self {
        let mut m = Self::zeros(n, bdim);
        for i in 0..n {
            m.set_block(i, i, BandMatrix::identity(bdim));
        }
        m
    }

    pub fn n_blocks(&self) -> usize {
        self.n
    }

    pub fn block_dim(&self) -> usize {
        self.bdim
    }

    pub fn dim(&self) -> usize {
        self.n * self.bdim
    }

    pub fn block(&self, i: usize, j: usize) -> Option<&BandMatrix> {
        self.blocks[i * self.n + j].as_ref()
    }

    pub fn set_block(&mut self, i: usize, j: usize, b: BandMatrix) {
        assert_eq!(b.dim(), self.bdim);
        self.blocks[i * self.n + j] = Some(b);
    }

    pub fn clear_block(&mut self, i: usize, j: usize) {
        self.blocks[i * self.n + j] = None;
    }

    /// blocks[i][j] += s * other, allocating the block when absent.
    pub fn axpy_block(&mut self, i: usize, j: usize, s: C64, other: &BandMatrix) {
        match &mut self.blocks[i * self.n + j] {
            Some(b) => b.axpy(s, other),
            slot @ None => *slot = Some(other.scale(s)),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        assert_eq!(self.bdim, other.bdim);
        let mut out = Self::zeros(self.n, self.bdim);
        for i in 0..self.n {
            for j in 0..self.n {
                let mut acc: Option<BandMatrix> = None;
                for k in 0..self.n {
                    if let (Some(a), Some(b)) = (self.block(i, k), other.block(k, j)) {
                        let p = a.matmul(b);
                        match &mut acc {
                            Some(s) => s.axpy(C64::new(1.0, 0.0), &p),
                            None => acc = Some(p),
                        }
                    }
                }
                if let Some(b) = acc {
                    out.blocks[i * self.n + j] = Some(b);
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            for j in 0..self.n {
                if let Some(b) = other.block(i, j) {
                    out.axpy_block(i, j, C64::new(-1.0, 0.0), b);
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.n, self.bdim);
        for i in 0..self.n {
            for j in 0..self.n {
                if let Some(b) = self.block(i, j) {
                    out.blocks[j * self.n + i] = Some(b.adjoint());
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.dim());
        assert_eq!(y.len(), self.dim());
        y.fill(C64::new(0.0, 0.0));
        let mut tmp = vec![C64::new(0.0, 0.0); self.bdim];
        for i in 0..self.n {
            for j in 0..self.n {
                if let Some(b) = self.block(i, j) {
                    b.matvec(&x[j * self.bdim..(j + 1) * self.bdim], &mut tmp);
                    for (yo, t) in y[i * self.bdim..(i + 1) * self.bdim].iter_mut().zip(&tmp) {
                        *yo += t;
                    }
                }
            }
        }
    }

    pub fn matvec_adj(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.dim());
        assert_eq!(y.len(), self.dim());
        y.fill(C64::new(0.0, 0.0));
        let mut tmp = vec![C64::new(0.0, 0.0); self.bdim];
        for i in 0..self.n {
            for j in 0..self.n {
                if let Some(b) = self.block(i, j) {
                    b.matvec_adj(&x[i * self.bdim..(i + 1) * self.bdim], &mut tmp);
                    for (yo, t) in y[j * self.bdim..(j + 1) * self.bdim].iter_mut().zip(&tmp) {
                        *yo += t;
                    }
                }
            }
        }
    }

    /// Frobenius norm of the off-diagonal blocks, each restricted to its
    /// interior window.
    pub fn offdiag_frobenius_window(&self, window: usize) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    if let Some(b) = self.block(i, j) {
                        s += b.frobenius_window(window).powi(2);
                    }
                }
            }
        }
        s.sqrt()
    }

    /// True when every stored block below the diagonal is zero.
    pub fn is_block_upper_triangular(&self) -> bool {
        for i in 0..self.n {
            for j in 0..i {
                if let Some(b) = self.block(i, j) {
                    if !b.is_zero() {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Solve self * x = b by back substitution.  Requires identity diagonal
    /// blocks and upper-triangular block structure.
    pub fn solve_unit_upper(&self, b: &[C64]) -> Vec<C64> {
        assert_eq!(b.len(), self.dim());
        let mut x = b.to_vec();
        let mut tmp = vec![C64::new(0.0, 0.0); self.bdim];
        for i in (0..self.n).rev() {
            for j in i + 1..self.n {
                if let Some(blk) = self.block(i, j) {
                    let (xi, xj) = {
                        let (lo, hi) = x.split_at_mut(j * self.bdim);
                        (&mut lo[i * self.bdim..(i + 1) * self.bdim], &hi[..self.bdim])
                    };
                    blk.matvec(xj, &mut tmp);
                    for (a, t) in xi.iter_mut().zip(&tmp) {
                        *a -= t;
                    }
                }
            }
        }
        x
    }

    /// Solve self^* x = b (forward substitution on the adjoint).
    pub fn solve_unit_upper_adj(&self, b: &[C64]) -> Vec<C64> {
        assert_eq!(b.len(), self.dim());
        let mut x = b.to_vec();
        let mut tmp = vec![C64::new(0.0, 0.0); self.bdim];
        for j in 0..self.n {
            for i in 0..j {
                if let Some(blk) = self.block(i, j) {
                    let (xi, xj) = {
                        let (lo, hi) = x.split_at_mut(j * self.bdim);
                        (&lo[i * self.bdim..(i + 1) * self.bdim], &mut hi[..self.bdim])
                    };
                    blk.matvec_adj(xi, &mut tmp);
                    for (a, t) in xj.iter_mut().zip(&tmp) {
                        *a -= t;
                    }
                }
            }
        }
        x
    }

    /// Flatten into a single banded matrix of dimension `n * bdim`.
    pub fn to_band(&self) -> BandMatrix {
        let dim = self.dim();
        let mut out = BandMatrix::zeros(dim);
        for i in 0..self.n {
            for j in 0..self.n {
                if let Some(b) = self.block(i, j) {
                    for off in b.offsets() {
                        let v = b.diag(off).unwrap();
                        let n = self.bdim as i64;
                        let r_lo = 0_i64.max(-off);
                        let r_hi = (n - 1).min(n - 1 - off);
                        for r in r_lo..=r_hi {
                            let t = (r + off.min(0)) as usize;
                            if v[t] != C64::new(0.0, 0.0) {
                                out.set(
                                    i * self.bdim + r as usize,
                                    j * self.bdim + (r + off) as usize,
                                    v[t],
                                );
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn block_product_matches_flattened_product() {
        let mut a = BlockMatrix::identity(2, 3);
        a.set_block(0, 1, BandMatrix::from_diag(3, -1, vec![c(2.0), c(3.0)]));
        let mut b = BlockMatrix::zeros(2, 3);
        b.set_block(0, 0, BandMatrix::from_diag(3, 1, vec![c(1.0), c(4.0)]));
        b.set_block(1, 1, BandMatrix::identity(3));
        let p = a.matmul(&b).to_band();
        let q = a.to_band().matmul(&b.to_band());
        for r in 0..6 {
            for s in 0..6 {
                assert!((p.get(r, s) - q.get(r, s)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn unit_upper_solve_inverts_matvec() {
        let mut y = BlockMatrix::identity(3, 2);
        y.set_block(0, 1, BandMatrix::from_diag(2, 0, vec![c(1.5), c(-2.0)]));
        y.set_block(1, 2, BandMatrix::from_diag(2, -1, vec![C64::new(0.5, 1.0)]));
        y.set_block(0, 2, BandMatrix::from_diag(2, 0, vec![c(0.25), c(0.0)]));
        let x: Vec<C64> = (0..6).map(|i| C64::new(i as f64, -1.0)).collect();
        let mut b = vec![c(0.0); 6];
        y.matvec(&x, &mut b);
        let back = y.solve_unit_upper(&b);
        for (u, v) in back.iter().zip(&x) {
            assert!((u - v).norm() < 1e-12);
        }
        let mut ba = vec![c(0.0); 6];
        y.matvec_adj(&x, &mut ba);
        let back2 = y.solve_unit_upper_adj(&ba);
        for (u, v) in back2.iter().zip(&x) {
            assert!((u - v).norm() < 1e-12);
        }
    }
}
