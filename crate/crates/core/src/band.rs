//! Square complex matrices stored by diagonals.
//!
//! Every matrix in this crate is a weighted shift, a product of shifts, or a
//! short sum of such, so storage is a sorted map from diagonal offset to the
//! vector of entries on that diagonal.  Offset `d = col - row`; the diagonal
//! at offset `d` has length `dim - |d|` and index `t = min(row, col)`.
//!
//! A fully dense matrix is representable (all `2*dim - 1` diagonals) and the
//! iterative Sylvester solver exploits that, but products of banded inputs
//! stay banded automatically.

use crate::C64;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    dim: usize,
    diags: BTreeMap<i64, Vec<C64>>,
}

impl BandMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0);
        BandMatrix {
            dim,
            diags: BTreeMap::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diag(dim, 0, vec![C64::new(1.0, 0.0); dim])
    }

    /// Build a matrix with a single diagonal at `offset`.
    pub fn from_diag(dim: usize, offset: i64, values: Vec<C64>) -> Self {
        assert!((offset.unsigned_abs() as usize) < dim, "offset out of range");
        assert_eq!(values.len(), dim - offset.unsigned_abs() as usize);
        let mut m = Self::zeros(dim);
        m.diags.insert(offset, values);
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Offsets of explicitly stored diagonals, ascending.
    pub fn offsets(&self) -> Vec<i64> {
        self.diags.keys().copied().collect()
    }

    /// (lower, upper) bandwidth: largest sub- and super-diagonal distances
    /// carrying a stored entry.
    pub fn band(&self) -> (usize, usize) {
        let lower = self
            .diags
            .keys()
            .filter(|d| **d < 0)
            .map(|d| (-d) as usize)
            .max()
            .unwrap_or(0);
        let upper = self
            .diags
            .keys()
            .filter(|d| **d > 0)
            .map(|d| *d as usize)
            .max()
            .unwrap_or(0);
        (lower, upper)
    }

    pub fn diag(&self, offset: i64) -> Option<&[C64]> {
        self.diags.get(&offset).map(|v| v.as_slice())
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        debug_assert!(row < self.dim && col < self.dim);
        let d = col as i64 - row as i64;
        match self.diags.get(&d) {
            Some(v) => v[row.min(col)],
            None => C64::new(0.0, 0.0),
        }
    }

    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        debug_assert!(row < self.dim && col < self.dim);
        let d = col as i64 - row as i64;
        let len = self.dim - d.unsigned_abs() as usize;
        let entry = self
            .diags
            .entry(d)
            .or_insert_with(|| vec![C64::new(0.0, 0.0); len]);
        entry[row.min(col)] = value;
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        for v in out.diags.values_mut() {
            for x in v.iter_mut() {
                *x *= s;
            }
        }
        out
    }

    /// self += s * other
    pub fn axpy(&mut self, s: C64, other: &Self) {
        assert_eq!(self.dim, other.dim);
        for (d, v) in &other.diags {
            let len = v.len();
            let entry = self
                .diags
                .entry(*d)
                .or_insert_with(|| vec![C64::new(0.0, 0.0); len]);
            for (x, y) in entry.iter_mut().zip(v) {
                *x += s * y;
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(C64::new(1.0, 0.0), other);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(C64::new(-1.0, 0.0), other);
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.dim);
        for (d, v) in &self.diags {
            out.diags.insert(-d, v.iter().map(|x| x.conj()).collect());
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let n = self.dim as i64;
        let mut out = Self::zeros(self.dim);
        for (&d1, v1) in &self.diags {
            for (&d2, v2) in &other.diags {
                let d = d1 + d2;
                if d.unsigned_abs() as usize >= self.dim {
                    continue;
                }
                let len = self.dim - d.unsigned_abs() as usize;
                let acc = out
                    .diags
                    .entry(d)
                    .or_insert_with(|| vec![C64::new(0.0, 0.0); len]);
                // rows where (r, r+d1) and (r+d1, r+d) are both in range
                let r_lo = 0_i64.max(-d1).max(-d);
                let r_hi = (n - 1).min(n - 1 - d1).min(n - 1 - d);
                for r in r_lo..=r_hi {
                    let ta = (r + d1.min(0)) as usize;
                    let tb = (r + d1 + d2.min(0)) as usize;
                    let tc = (r + d.min(0)) as usize;
                    acc[tc] += v1[ta] * v2[tb];
                }
            }
        }
        out
    }

    /// y = A x
    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        y.fill(C64::new(0.0, 0.0));
        let n = self.dim as i64;
        for (&d, v) in &self.diags {
            let r_lo = 0_i64.max(-d);
            let r_hi = (n - 1).min(n - 1 - d);
            for r in r_lo..=r_hi {
                let t = (r + d.min(0)) as usize;
                y[r as usize] += v[t] * x[(r + d) as usize];
            }
        }
    }

    /// y = A* x
    pub fn matvec_adj(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        y.fill(C64::new(0.0, 0.0));
        let n = self.dim as i64;
        for (&d, v) in &self.diags {
            let r_lo = 0_i64.max(-d);
            let r_hi = (n - 1).min(n - 1 - d);
            for r in r_lo..=r_hi {
                let t = (r + d.min(0)) as usize;
                y[(r + d) as usize] += v[t].conj() * x[r as usize];
            }
        }
    }

    /// Frobenius norm over the interior window: entries with
    /// `row < window && col < window`.
    pub fn frobenius_window(&self, window: usize) -> f64 {
        let w = window.min(self.dim) as i64;
        let mut s = 0.0;
        for (&d, v) in &self.diags {
            let r_lo = 0_i64.max(-d);
            let r_hi = (w - 1).min(w - 1 - d);
            for r in r_lo..=r_hi {
                let t = (r + d.min(0)) as usize;
                s += v[t].norm_sqr();
            }
        }
        s.sqrt()
    }

    pub fn frobenius(&self) -> f64 {
        self.frobenius_window(self.dim)
    }

    /// Frobenius inner product <self, other> = sum conj(other) .* self.
    pub fn frobenius_inner(&self, other: &Self) -> C64 {
        assert_eq!(self.dim, other.dim);
        let mut s = C64::new(0.0, 0.0);
        for (d, v) in &self.diags {
            if let Some(w) = other.diags.get(d) {
                for (a, b) in v.iter().zip(w) {
                    s += a * b.conj();
                }
            }
        }
        s
    }

    /// Largest entry magnitude among entries with `col < col_limit`.
    pub fn max_abs_cols(&self, col_limit: usize) -> f64 {
        let n = self.dim as i64;
        let lim = col_limit.min(self.dim) as i64;
        let mut m = 0.0_f64;
        for (&d, v) in &self.diags {
            let r_lo = 0_i64.max(-d);
            let r_hi = (n - 1).min(lim - 1 - d);
            for r in r_lo..=r_hi {
                let t = (r + d.min(0)) as usize;
                m = m.max(v[t].norm());
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.max_abs_cols(self.dim)
    }

    /// Leading principal submatrix of the given dimension.
    pub fn truncate(&self, new_dim: usize) -> Self {
        assert!(new_dim > 0 && new_dim <= self.dim);
        let mut out = Self::zeros(new_dim);
        for (&d, v) in &self.diags {
            if d.unsigned_abs() as usize >= new_dim {
                continue;
            }
            let len = new_dim - d.unsigned_abs() as usize;
            out.diags.insert(d, v[..len].to_vec());
        }
        out
    }

    /// Zero every entry for which the predicate returns false.
    pub fn retain_entries<F: Fn(usize, usize) -> bool>(&mut self, keep: F) {
        let n = self.dim as i64;
        for (&d, v) in self.diags.iter_mut() {
            let r_lo = 0_i64.max(-d);
            let r_hi = (n - 1).min(n - 1 - d);
            for r in r_lo..=r_hi {
                let c = (r + d) as usize;
                let t = (r + d.min(0)) as usize;
                if !keep(r as usize, c) {
                    v[t] = C64::new(0.0, 0.0);
                }
            }
        }
    }

    /// Drop stored diagonals whose largest entry is at most `tol`.
    pub fn prune(&mut self, tol: f64) {
        self.diags
            .retain(|_, v| v.iter().any(|x| x.norm() > tol));
    }

    pub fn n_diags(&self) -> usize {
        self.diags.len()
    }

    pub fn is_zero(&self) -> bool {
        self.diags
            .values()
            .all(|v| v.iter().all(|x| x.norm() == 0.0))
    }

    /// Dense copy, row major.  Test and small-dimension use only.
    pub fn to_dense(&self) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.dim * self.dim];
        for (&d, v) in &self.diags {
            let n = self.dim as i64;
            let r_lo = 0_i64.max(-d);
            let r_hi = (n - 1).min(n - 1 - d);
            for r in r_lo..=r_hi {
                let t = (r + d.min(0)) as usize;
                out[r as usize * self.dim + (r + d) as usize] = v[t];
            }
        }
        out
    }

    pub fn from_dense(dim: usize, entries: &[C64]) -> Self {
        assert_eq!(entries.len(), dim * dim);
        let mut m = Self::zeros(dim);
        for r in 0..dim {
            for c in 0..dim {
                let x = entries[r * dim + c];
                if x != C64::new(0.0, 0.0) {
                    m.set(r, c, x);
                }
            }
        }
        m
    }
}
