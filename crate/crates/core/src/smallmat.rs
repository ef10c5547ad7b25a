//! Dense complex matrices of small order (frame Grammians, curvature).

use crate::{C64, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SmallMat {
    n: usize,
    a: Vec<C64>, // row major
}

impl SmallMat {
    pub fn zeros(n: usize) -> Self {
        SmallMat {
            n,
            a: vec![C64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(n: usize, entries: Vec<C64>) -> Self {
        assert_eq!(entries.len(), n * n);
        SmallMat { n, a: entries }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[C64] {
        &self.a
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let a = self.a.iter().zip(&other.a).map(|(x, y)| x + y).collect();
        SmallMat { n: self.n, a }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let a = self.a.iter().zip(&other.a).map(|(x, y)| x - y).collect();
        SmallMat { n: self.n, a }
    }

    pub fn scale(&self, s: C64) -> Self {
        SmallMat {
            n: self.n,
            a: self.a.iter().map(|x| x * s).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.a[i * n + k];
                if aik == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.a[i * n + j] += aik * other.a[k * n + j];
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.a[j * n + i] = self.a[i * n + j].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self.a[i * self.n + i]).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.a.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// Gauss-Jordan inverse with partial pivoting.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.n;
        let mut m = self.a.clone();
        let mut inv = Self::identity(n).a;
        for col in 0..n {
            let mut piv = col;
            let mut best = m[col * n + col].norm();
            for r in col + 1..n {
                let v = m[r * n + col].norm();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best == 0.0 {
                return Err(Error::Numerical("singular matrix in inverse".into()));
            }
            if piv != col {
                for j in 0..n {
                    m.swap(col * n + j, piv * n + j);
                    inv.swap(col * n + j, piv * n + j);
                }
            }
            let d = m[col * n + col];
            for j in 0..n {
                m[col * n + j] /= d;
                inv[col * n + j] /= d;
            }
            for r in 0..n {
                if r != col {
                    let f = m[r * n + col];
                    if f != C64::new(0.0, 0.0) {
                        for j in 0..n {
                            let mc = m[col * n + j];
                            let ic = inv[col * n + j];
                            m[r * n + j] -= f * mc;
                            inv[r * n + j] -= f * ic;
                        }
                    }
                }
            }
        }
        Ok(SmallMat { n, a: inv })
    }

    /// Cholesky factor of a Hermitian positive definite matrix; errors when a
    /// pivot fails to be positive.
    pub fn cholesky(&self) -> Result<Self> {
        let n = self.n;
        let mut l = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let mut s = self.a[i * n + j];
                for k in 0..j {
                    s -= l.a[i * n + k] * l.a[j * n + k].conj();
                }
                if i == j {
                    if s.re <= 0.0 || s.im.abs() > 1e-10 * s.re.abs().max(1.0) {
                        return Err(Error::Numerical(format!(
                            "cholesky pivot {i} not positive: {s}"
                        )));
                    }
                    l.a[i * n + i] = C64::new(s.re.sqrt(), 0.0);
                } else {
                    l.a[i * n + j] = s / l.a[j * n + j];
                }
            }
        }
        Ok(l)
    }

    /// Rough condition estimate ||A||_F ||A^{-1}||_F.
    pub fn cond_estimate(&self) -> Result<f64> {
        Ok(self.frobenius() * self.inverse()?.frobenius())
    }
}

impl std::ops::Index<(usize, usize)> for SmallMat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.a[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for SmallMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.a[i * self.n + j]
    }
}
