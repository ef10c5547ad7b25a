//! Sylvester equation solvers for the shift models.
//!
//! The closed form: for atoms A (weight la) and B (weight lb) and a
//! right-hand side C carried by a single subdiagonal at distance k, the
//! equation A X - X B = C decouples along diagonals into the scalar
//! recursion x_l w_{l+k}(la) - x_{l-1} w_{l-1}(lb) = c_l, producing a shift
//! X of multiplicity k+1.
//!
//! The generic route minimizes the residual over all X by conjugate
//! gradients on the normal equations, with the residual masked to the
//! interior window (the truncation cut corrupts the last few equations, so
//! they are not trusted).

use super::STABLE_RATIO;
use crate::band::BandMatrix;
use crate::bergman::{
    build_atom, build_connector, connector_entry, shift_weight, OperatorSource, TruncatedOperator,
};
use crate::norms::operator_norm_band;
use crate::{C64, Error, Result};

/// Empirical boundedness verdict of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundedness {
    Bounded,
    Divergent,
}

impl Boundedness {
    pub fn label(&self) -> &'static str {
        match self {
            Boundedness::Bounded => "bounded",
            Boundedness::Divergent => "divergent",
        }
    }
}

/// Solution record: the solution matrix, the interior residual of
/// A X - X B - C, the diagonal coefficients when X is a pure shift, the
/// fitted growth exponent of those coefficients, and the verdict from the
/// truncation-doubling probe.
#[derive(Debug, Clone)]
pub struct SylvesterSolution {
    pub x: TruncatedOperator,
    pub residual: f64,
    pub coeffs: Option<Vec<C64>>,
    pub fitted_exponent: Option<f64>,
    pub bounded_verdict: Boundedness,
    /// sup-norm ratio between the full and the half truncation.
    pub sup_ratio: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// Least-squares slope of log |x_l| against log l over the last half of the
/// sequence.  Errors on sequences shorter than 64 or with zeros in the fit
/// window.
pub fn growth_exponent(coeffs: &[f64]) -> Result<f64> {
    if coeffs.len() < 64 {
        return Err(Error::Argument(format!(
            "exponent fit needs at least 64 coefficients, got {}",
            coeffs.len()
        )));
    }
    let lo = coeffs.len() / 2;
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut n = 0.0;
    for (l, &v) in coeffs.iter().enumerate().skip(lo) {
        if v == 0.0 {
            return Err(Error::Argument(format!("zero coefficient at {l} in fit window")));
        }
        let x = (l as f64).ln();
        let y = v.abs().ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        n += 1.0;
    }
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        return Err(Error::Numerical("degenerate exponent fit".into()));
    }
    Ok((n * sxy - sx * sy) / denom)
}

/// Scalar recursion for A X - X B = C with A, B atoms of weights `la`, `lb`
/// and C a single diagonal at distance `k` below the main one with values
/// `c`.  Returns the coefficients of the multiplicity-(k+1) shift X.
pub fn solve_shift_recursion(la: f64, lb: f64, k: usize, c: &[C64]) -> Result<Vec<C64>> {
    if c.is_empty() {
        return Ok(Vec::new());
    }
    let len = c.len().saturating_sub(1); // X has one fewer stored entry
    let mut x = Vec::with_capacity(len.max(1));
    let w0 = shift_weight(la, k as u64)?;
    x.push(c[0] / w0);
    for l in 1..len {
        let wa = shift_weight(la, (l + k) as u64)?;
        let wb = shift_weight(lb, (l - 1) as u64)?;
        let prev = x[l - 1];
        x.push((c[l] + prev * wb) / wa);
    }
    Ok(x)
}

/// Closed-form solve of A X - X B = C for A the weight-lambda0 atom, B the
/// weight-lambda_k1 atom and C the canonical multiplicity-k connector.
pub fn solve_sylvester_closed(
    lambda0: f64,
    lambda_k1: f64,
    k: usize,
    n_trunc: usize,
) -> Result<SylvesterSolution> {
    if lambda_k1 < lambda0 {
        return Err(Error::Domain(format!(
            "closed solve needs lambda_k1 >= lambda0, got {lambda0} > {lambda_k1}"
        )));
    }
    if n_trunc < k + 4 {
        return Err(Error::Argument("truncation too small for the shift".into()));
    }
    let coeffs_at = |nt: usize| -> Result<Vec<C64>> {
        let c: Vec<C64> = (0..nt - k)
            .map(|l| {
                Ok(C64::new(
                    connector_entry(lambda0, lambda_k1, k, l as u64)?,
                    0.0,
                ))
            })
            .collect::<Result<_>>()?;
        solve_shift_recursion(lambda0, lambda_k1, k, &c)
    };
    let x_full = coeffs_at(n_trunc)?;
    let x_half = coeffs_at(n_trunc / 2)?;
    let sup = |v: &[C64]| v.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
    let ratio = sup(&x_full) / sup(&x_half).max(1e-300);
    let verdict = if ratio <= STABLE_RATIO {
        Boundedness::Bounded
    } else {
        Boundedness::Divergent
    };

    let x_mat = BandMatrix::from_diag(n_trunc, -((k + 1) as i64), {
        let mut v = x_full.clone();
        v.truncate(n_trunc - k - 1);
        v
    });
    let a = build_atom(lambda0, n_trunc)?;
    let b = build_atom(lambda_k1, n_trunc)?;
    let c = build_connector(lambda0, lambda_k1, k, n_trunc)?;
    let resid_mat = a
        .matrix()
        .matmul(&x_mat)
        .sub(&x_mat.matmul(b.matrix()))
        .sub(c.matrix());
    let window = n_trunc - (k + 3);
    let residual = resid_mat.frobenius_window(window);

    let mags: Vec<f64> = x_full.iter().map(|z| z.norm()).collect();
    let fitted_exponent = if mags.len() >= 64 {
        growth_exponent(&mags).ok()
    } else {
        None
    };
    Ok(SylvesterSolution {
        x: TruncatedOperator::new(
            x_mat,
            OperatorSource::Derived(format!(
                "sylvester shift solution lambda0={lambda0} lambda_k1={lambda_k1} k={k}"
            )),
        )?,
        residual,
        coeffs: Some(x_full),
        fitted_exponent,
        bounded_verdict: verdict,
        sup_ratio: Some(ratio),
        converged: true,
        iterations: 0,
    })
}

/// Options for the generic least-squares solve.
#[derive(Debug, Clone)]
pub struct SylvesterOptions {
    /// Relative residual target (against the masked ||C||).
    pub tol: f64,
    pub max_iter: usize,
    /// Interior window; `None` derives it from the bandwidth of C.
    pub window: Option<usize>,
    /// Initial guess (the closed-form shift ansatz during elimination).
    pub seed: Option<BandMatrix>,
    /// Re-solve at half truncation and compare sup norms.
    pub probe: bool,
}

impl Default for SylvesterOptions {
    fn default() -> Self {
        SylvesterOptions {
            tol: 1e-6,
            max_iter: 2000,
            window: None,
            seed: None,
            probe: true,
        }
    }
}

fn auto_window(dim: usize, c: &BandMatrix) -> usize {
    let maxoff = c
        .offsets()
        .iter()
        .map(|d| d.unsigned_abs() as usize)
        .max()
        .unwrap_or(0);
    let pad = (maxoff + 4).min(dim / 4).max(4);
    dim - pad.min(dim / 2)
}

fn masked(mut m: BandMatrix, window: usize) -> BandMatrix {
    m.retain_entries(|r, c| r < window && c < window);
    m.prune(0.0);
    m
}

fn cgnr(
    a: &BandMatrix,
    b: &BandMatrix,
    c: &BandMatrix,
    window: usize,
    tol: f64,
    max_iter: usize,
    seed: Option<&BandMatrix>,
) -> (BandMatrix, bool, usize) {
    let dim = a.dim();
    let sigma = |x: &BandMatrix| masked(a.matmul(x).sub(&x.matmul(b)), window);
    let a_adj = a.adjoint();
    let b_adj = b.adjoint();
    let sigma_adj = |r: &BandMatrix| a_adj.matmul(r).sub(&r.matmul(&b_adj));

    let c_masked = masked(c.clone(), window);
    let c_norm = c_masked.frobenius().max(1e-300);
    let mut x = seed.cloned().unwrap_or_else(|| BandMatrix::zeros(dim));
    let mut r = c_masked.sub(&sigma(&x));
    let mut s = sigma_adj(&r);
    let mut p = s.clone();
    let mut gamma = s.frobenius_inner(&s).re;
    let mut converged = r.frobenius() <= tol * c_norm;
    let mut iters = 0;
    if !converged {
        for it in 1..=max_iter {
            iters = it;
            let q = sigma(&p);
            let qq = q.frobenius_inner(&q).re;
            if qq <= 0.0 || gamma <= 0.0 {
                break; // stagnated in the null space
            }
            let alpha = gamma / qq;
            x.axpy(C64::new(alpha, 0.0), &p);
            r.axpy(C64::new(-alpha, 0.0), &q);
            if r.frobenius() <= tol * c_norm {
                converged = true;
                break;
            }
            s = sigma_adj(&r);
            let gamma_new = s.frobenius_inner(&s).re;
            let beta = gamma_new / gamma;
            gamma = gamma_new;
            let mut p_new = s.clone();
            p_new.axpy(C64::new(beta, 0.0), &p);
            p = p_new;
        }
    }
    x.prune(0.0);
    (x, converged, iters)
}

/// Minimal-residual solve of A X - X B = C over the interior window.
/// Verdict: bounded iff the iteration converged and the solution sup norm is
/// stable under halving the truncation.
pub fn solve_sylvester_generic(
    a: &TruncatedOperator,
    b: &TruncatedOperator,
    c: &TruncatedOperator,
    opts: &SylvesterOptions,
) -> Result<SylvesterSolution> {
    let dim = a.dim();
    if b.dim() != dim || c.dim() != dim {
        return Err(Error::Argument(
            "sylvester operands must share one truncation".into(),
        ));
    }
    let window = opts.window.unwrap_or_else(|| auto_window(dim, c.matrix()));
    let (x, converged, iterations) = cgnr(
        a.matrix(),
        b.matrix(),
        c.matrix(),
        window,
        opts.tol,
        opts.max_iter,
        opts.seed.as_ref(),
    );
    let residual = a
        .matrix()
        .matmul(&x)
        .sub(&x.matmul(b.matrix()))
        .sub(c.matrix())
        .frobenius_window(window);

    let mut sup_ratio = None;
    let mut verdict = if converged {
        Boundedness::Bounded
    } else {
        Boundedness::Divergent
    };
    if opts.probe && converged {
        let half = dim / 2;
        let (xh, _, _) = cgnr(
            &a.matrix().truncate(half),
            &b.matrix().truncate(half),
            &c.matrix().truncate(half),
            auto_window(half, c.matrix()).min(half),
            opts.tol,
            opts.max_iter,
            opts.seed.as_ref().map(|s| s.truncate(half)).as_ref(),
        );
        let n_full = operator_norm_band(&x, 1e-8, 3000).value;
        let n_half = operator_norm_band(&xh, 1e-8, 3000).value;
        let ratio = n_full / n_half.max(1e-300);
        sup_ratio = Some(ratio);
        if ratio > STABLE_RATIO {
            verdict = Boundedness::Divergent;
        }
    }
    let coeffs = if x.n_diags() == 1 {
        x.offsets().first().map(|&d| x.diag(d).unwrap().to_vec())
    } else {
        None
    };
    let fitted_exponent = coeffs.as_ref().and_then(|v| {
        if v.len() >= 64 {
            let mags: Vec<f64> = v.iter().map(|z| z.norm()).collect();
            growth_exponent(&mags).ok()
        } else {
            None
        }
    });
    Ok(SylvesterSolution {
        x: TruncatedOperator::new(x, OperatorSource::Derived("sylvester least squares".into()))?,
        residual,
        coeffs,
        fitted_exponent,
        bounded_verdict: verdict,
        sup_ratio,
        converged,
        iterations,
    })
}
