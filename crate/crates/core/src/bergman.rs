//! Weighted Bergman kernels, their coefficient sequences, and truncated
//! matrix realizations of the atoms and connecting shifts.
//!
//! The space with kernel (1 - z conj(w))^{-lambda} has orthonormal basis
//! e_n = sqrt(a_n(lambda)) z^n with a_n(lambda) = (lambda)_n / n!.  The atom
//! is the adjoint of multiplication: a backward weighted shift with weights
//! w_n = sqrt((n+1)/(n+lambda)).  Sections are chosen with coefficients
//! sqrt(a_n(lambda)) w^n so that T t(w) = w t(w) holds exactly for that
//! backward shift; all jets derive from this convention.

use crate::band::BandMatrix;
use crate::special::{ln_falling, ln_gamma, ln_gamma_ratio};
use crate::{C64, Error, Result};

/// The defining weight of a Bergman kernel; must be positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParam {
    lambda: f64,
}

impl KernelParam {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Domain(format!(
                "kernel weight must be positive and finite, got {lambda}"
            )));
        }
        Ok(KernelParam { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// Where a truncated matrix came from.
#[derive(Debug, Clone, PartialEq)]
pub enum OperatorSource {
    Atom { lambda: f64 },
    Connector { lambda_i: f64, lambda_j: f64, shift: usize },
    Assembled { rank: usize, block_dim: usize },
    Derived(String),
}

/// An N x N complex matrix tagged with its bandwidth and provenance.
#[derive(Debug, Clone)]
pub struct TruncatedOperator {
    matrix: BandMatrix,
    band: (usize, usize),
    source: OperatorSource,
}

impl TruncatedOperator {
    pub fn new(matrix: BandMatrix, source: OperatorSource) -> Result<Self> {
        if matrix.dim() < 2 {
            return Err(Error::Argument(format!(
                "truncated operators need dimension >= 2, got {}",
                matrix.dim()
            )));
        }
        let band = matrix.band();
        Ok(TruncatedOperator { matrix, band, source })
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &BandMatrix {
        &self.matrix
    }

    pub fn band(&self) -> (usize, usize) {
        self.band
    }

    pub fn source(&self) -> &OperatorSource {
        &self.source
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.matrix.get(row, col)
    }
}

/// ln a_n(lambda) with a_n(lambda) = lambda (lambda+1) ... (lambda+n-1) / n!.
pub fn ln_pochhammer_coeff(lambda: f64, n: u64) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!(
            "pochhammer coefficient needs lambda > 0, got {lambda}"
        )));
    }
    if n == 0 {
        return Ok(0.0);
    }
    // a_n = Γ(n+λ) / (Γ(λ) Γ(n+1)) = [Γ((n+1) + (λ-1)) / Γ(n+1)] / Γ(λ)
    Ok(ln_gamma_ratio(n as f64 + 1.0, lambda - 1.0) - ln_gamma(lambda))
}

/// a_n(lambda), the coefficient of (z conj(w))^n in the kernel expansion.
pub fn pochhammer_coeff(lambda: f64, n: u64) -> Result<f64> {
    Ok(ln_pochhammer_coeff(lambda, n)?.exp())
}

/// Shift weight w_n(lambda) = sqrt((n+1)/(n+lambda)) = sqrt(a_n/a_{n+1}).
pub fn shift_weight(lambda: f64, n: u64) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!(
            "shift weight needs lambda > 0, got {lambda}"
        )));
    }
    let nf = n as f64;
    Ok(((nf + 1.0) / (nf + lambda)).sqrt())
}

/// Kernel value (1 - z conj(w))^{-lambda} on the principal branch.
pub fn kernel_value(lambda: f64, z: C64, w: C64) -> Result<C64> {
    KernelParam::new(lambda)?;
    if z.norm() >= 1.0 || w.norm() >= 1.0 {
        return Err(Error::Domain(format!(
            "kernel arguments must lie in the open disc, got |z|={}, |w|={}",
            z.norm(),
            w.norm()
        )));
    }
    let base = C64::new(1.0, 0.0) - z * w.conj();
    Ok(base.powf(-lambda))
}

/// Mixed derivative d^r/dw^r d^s/dconj(w)^s of (1 - w conj(w))^{-lambda},
/// with w and conj(w) treated as independent variables.
///
/// Closed form from Leibniz on (lambda)_r conj(w)^r (1-|w|^2)^{-lambda-r}:
/// sum over q of C(s,q) * r!/(r-q)! * (lambda)_r (lambda+r)_{s-q}
///   * conj(w)^{r-q} w^{s-q} (1-|w|^2)^{-(lambda+r+s-q)}.
pub fn kernel_mixed_derivative(lambda: f64, r: u32, s: u32, w: C64) -> Result<C64> {
    KernelParam::new(lambda)?;
    let rho2 = w.norm_sqr();
    if rho2 >= 1.0 {
        return Err(Error::Domain("point outside the open disc".into()));
    }
    use crate::special::{binomial, falling, pochhammer};
    let base = 1.0 - rho2;
    let mut total = C64::new(0.0, 0.0);
    let poch_r = pochhammer(lambda, r);
    for q in 0..=r.min(s) {
        let coef = binomial(s as u64, q as u64)
            * falling(r as u64, q as u64)
            * poch_r
            * pochhammer(lambda + r as f64, s - q);
        let wb = w.conj().powu(r - q);
        let wf = w.powu(s - q);
        let pw = base.powf(-(lambda + (r + s - q) as f64));
        total += coef * wb * wf * pw;
    }
    Ok(total)
}

/// Squared norm of the order-0 section, (1-|w|^2)^{-lambda}.
pub fn section_norm2(lambda: f64, w: C64) -> Result<f64> {
    KernelParam::new(lambda)?;
    let rho2 = w.norm_sqr();
    if rho2 >= 1.0 {
        return Err(Error::Domain("point outside the open disc".into()));
    }
    Ok((1.0 - rho2).powf(-lambda))
}

/// Coefficient vector of the order-j derivative of the canonical
/// eigensection t(w), in the shift basis.
#[derive(Debug, Clone)]
pub struct SectionVector {
    pub lambda: f64,
    pub point: C64,
    pub order: u32,
    pub coeffs: Vec<C64>,
}

impl SectionVector {
    pub fn norm2(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &SectionVector) -> C64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b.conj())
            .sum()
    }
}

/// t^(order)(w) truncated to N coefficients:
/// coeffs[n] = sqrt(a_n(lambda)) n!/(n-order)! w^{n-order} for n >= order.
pub fn section(lambda: f64, w: C64, order: u32, n_trunc: usize) -> Result<SectionVector> {
    KernelParam::new(lambda)?;
    if w.norm() >= 1.0 {
        return Err(Error::Domain("section point outside the open disc".into()));
    }
    if order as usize >= n_trunc {
        return Err(Error::Argument(format!(
            "derivative order {order} must be below the truncation {n_trunc}"
        )));
    }
    let rho = w.norm();
    let theta = if rho == 0.0 { 0.0 } else { w.im.atan2(w.re) };
    let ln_rho = rho.ln(); // -inf at the origin, handled below
    let mut coeffs = vec![C64::new(0.0, 0.0); n_trunc];
    for n in order as usize..n_trunc {
        let p = (n - order as usize) as f64;
        let ln_mag = 0.5 * ln_pochhammer_coeff(lambda, n as u64)?
            + ln_falling(n as u64, order as u64);
        let mag_ln = if p == 0.0 { ln_mag } else { ln_mag + p * ln_rho };
        if mag_ln < -745.0 {
            continue; // underflows to an exact zero
        }
        let mag = mag_ln.exp();
        let phase = p * theta;
        coeffs[n] = C64::new(mag * phase.cos(), mag * phase.sin());
    }
    Ok(SectionVector {
        lambda,
        point: w,
        order,
        coeffs,
    })
}

/// Backward weighted shift of the atom with weight lambda: entry
/// (n-1, n) = w_{n-1}(lambda), band (0, 1).
pub fn build_atom(lambda: f64, n_trunc: usize) -> Result<TruncatedOperator> {
    KernelParam::new(lambda)?;
    if n_trunc < 2 {
        return Err(Error::Argument("atom truncation must be >= 2".into()));
    }
    let vals: Vec<C64> = (0..n_trunc - 1)
        .map(|n| C64::new(shift_weight(lambda, n as u64).unwrap(), 0.0))
        .collect();
    TruncatedOperator::new(
        BandMatrix::from_diag(n_trunc, 1, vals),
        OperatorSource::Atom { lambda },
    )
}

/// Entry magnitude of the connector: (l+k)!/l! * sqrt(a_{l+k}(li)/a_l(lj)).
pub fn connector_entry(lambda_i: f64, lambda_j: f64, shift_k: usize, l: u64) -> Result<f64> {
    let ln = ln_falling(l + shift_k as u64, shift_k as u64)
        + 0.5 * (ln_pochhammer_coeff(lambda_i, l + shift_k as u64)?
            - ln_pochhammer_coeff(lambda_j, l)?);
    Ok(ln.exp())
}

/// The unit-coefficient connecting shift S with S(t_j(w)) = t_i^(k)(w):
/// e_l^{(lambda_j)} goes to (l+k)!/l! sqrt(a_{l+k}(li)/a_l(lj))
/// e_{l+k}^{(lambda_i)}, a shift landing k places down.
pub fn build_connector(
    lambda_i: f64,
    lambda_j: f64,
    shift_k: usize,
    n_trunc: usize,
) -> Result<TruncatedOperator> {
    KernelParam::new(lambda_i)?;
    KernelParam::new(lambda_j)?;
    if lambda_j < lambda_i {
        return Err(Error::Domain(format!(
            "connector needs lambda_j >= lambda_i, got {lambda_i} > {lambda_j}"
        )));
    }
    if shift_k >= n_trunc {
        return Err(Error::Argument(
            "connector shift must be below the truncation".into(),
        ));
    }
    let len = n_trunc - shift_k;
    let vals: Vec<C64> = (0..len)
        .map(|l| {
            C64::new(
                connector_entry(lambda_i, lambda_j, shift_k, l as u64).unwrap(),
                0.0,
            )
        })
        .collect();
    TruncatedOperator::new(
        BandMatrix::from_diag(n_trunc, -(shift_k as i64), vals),
        OperatorSource::Connector {
            lambda_i,
            lambda_j,
            shift: shift_k,
        },
    )
}
