//! Norm estimation, power-boundedness traces, and the contraction probe.
//!
//! Powers are formed by repeated banded multiplication (the models stay on a
//! handful of diagonals), never densely.  Norms of single-diagonal matrices
//! are exact entry maxima; everything else goes through power iteration.

use crate::atomic::{assemble, ModelSpec};
use crate::band::BandMatrix;
use crate::bergman::{build_atom, build_connector, TruncatedOperator};
use crate::norms::{operator_norm_band, NormEstimate};
use crate::{Error, Result};

/// Largest singular value with a convergence flag; non-convergence within
/// the iteration budget is reported, not hidden.
pub fn operator_norm(m: &TruncatedOperator, tol: f64) -> Result<NormEstimate> {
    if !(tol > 0.0) {
        return Err(Error::Argument("tolerance must be positive".into()));
    }
    let max_iter = 200 + 40 * (m.dim() as f64).sqrt() as usize;
    Ok(operator_norm_band(m.matrix(), tol, max_iter))
}

/// How a power trace ends up classified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerClass {
    PowerBounded,
    Divergent,
    Inconclusive,
}

impl PowerClass {
    pub fn label(&self) -> &'static str {
        match self {
            PowerClass::PowerBounded => "power-bounded",
            PowerClass::Divergent => "divergent",
            PowerClass::Inconclusive => "inconclusive",
        }
    }
}

/// Norms of powers on a geometric schedule with the fitted log-log slope.
#[derive(Debug, Clone)]
pub struct PowerTrace {
    pub n_values: Vec<usize>,
    pub norms: Vec<f64>,
    pub slope: f64,
    pub r_squared: f64,
    pub classification: PowerClass,
    pub contaminated: bool,
}

/// Geometric schedule 1, 2, 3, 4, 6, ... up to and including n_max.
pub fn power_schedule(n_max: usize) -> Vec<usize> {
    let mut v = Vec::new();
    let mut x = 1.0_f64;
    while (x as usize) < n_max {
        let n = x as usize;
        if v.last() != Some(&n) {
            v.push(n);
        }
        x *= std::f64::consts::SQRT_2;
    }
    if v.last() != Some(&n_max) {
        v.push(n_max);
    }
    v
}

fn loglog_fit(ns: &[usize], norms: &[f64]) -> (f64, f64) {
    let lo = ns.len() / 2;
    let xs: Vec<f64> = ns[lo..].iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = norms[lo..].iter().map(|&v| v.max(1e-300).ln()).collect();
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        return (0.0, 0.0);
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let mean = sy / n;
    let ss_tot: f64 = ys.iter().map(|y| (y - mean) * (y - mean)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let p = intercept + slope * x;
            (y - p) * (y - p)
        })
        .sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    (slope, r2)
}

/// Largest index-raising distance of any stored diagonal within a block
/// (controls how far truncation corruption can creep per application).
/// A global offset d decomposes as (block jump) * block_dim + inner with
/// |inner| small for these models; a negative inner offset raises indices.
fn block_raise(t: &BandMatrix, block_dim: usize) -> usize {
    t.offsets()
        .iter()
        .map(|&d| {
            let n = block_dim as i64;
            let jump = (d as f64 / n as f64).round() as i64;
            let inner = d - jump * n;
            (-inner).max(0) as usize
        })
        .max()
        .unwrap_or(0)
}

/// Trace of ||T^n|| for the assembled model at the given truncation.
/// Classification: divergent needs slope >= 0.1 with R^2 >= 0.9;
/// power-bounded needs an essentially flat trace; truncation contamination
/// (norm living in the corrupted tail columns) forces `inconclusive`.
pub fn power_trace(spec: &ModelSpec, n_max: usize, n_trunc: usize) -> Result<PowerTrace> {
    if n_max < 2 {
        return Err(Error::Argument("n_max must be at least 2".into()));
    }
    let model = assemble(&spec.with_trunc(n_trunc))?;
    let t = model.blocks().to_band();
    // entries that raise the inner index spread truncation corruption; with
    // none of them the truncated powers are the exact compressions
    let raise = block_raise(&t, n_trunc);
    if n_max * raise >= n_trunc / 2 {
        return Err(Error::Argument(format!(
            "n_max {n_max} too large for truncation {n_trunc} (bandwidth reach {raise})"
        )));
    }
    let schedule = power_schedule(n_max);
    let mut norms = Vec::with_capacity(schedule.len());
    let mut contaminated = false;
    let mut power = t.clone();
    let mut k = 1usize;
    let tol = 1e-10;
    for &target in &schedule {
        while k < target {
            power = power.matmul(&t);
            power.prune(1e-300);
            k += 1;
        }
        let full = operator_norm_band(&power, tol, 4000);
        if raise > 0 {
            // mask the columns whose powers reached the cut; a norm living
            // there is untrustworthy
            let window = n_trunc - target * raise;
            let mut masked = power.clone();
            masked.retain_entries(|_, c| c % n_trunc < window);
            let interior = operator_norm_band(&masked, tol, 4000);
            if (full.value - interior.value).abs() > 1e-6 * interior.value.max(1e-300) {
                contaminated = true;
            }
        }
        norms.push(full.value);
    }
    let (slope, r2) = loglog_fit(&schedule, &norms);
    let max_norm = norms.iter().cloned().fold(0.0, f64::max);
    let classification = if contaminated {
        PowerClass::Inconclusive
    } else if slope >= 0.1 && r2 >= 0.9 {
        PowerClass::Divergent
    } else if slope < 0.05 || max_norm <= 1.0 + 1e-6 {
        PowerClass::PowerBounded
    } else {
        PowerClass::Inconclusive
    };
    Ok(PowerTrace {
        n_values: schedule,
        norms,
        slope,
        r_squared: r2,
        classification,
        contaminated,
    })
}

/// The cross-term sequence ||n T_0^{n-1} S_{0,1}|| for the two-atom model,
/// with the fitted log-log slope over the last half.
#[derive(Debug, Clone)]
pub struct CrossTermTrace {
    pub n_values: Vec<usize>,
    pub norms: Vec<f64>,
    pub slope: Option<f64>,
}

pub fn cross_term_trace(
    lambda0: f64,
    lambda1: f64,
    coupling: crate::C64,
    n_max: usize,
    n_trunc: usize,
) -> Result<CrossTermTrace> {
    if n_max < 2 || n_max >= n_trunc {
        return Err(Error::Argument("need 2 <= n_max < truncation".into()));
    }
    let t0 = build_atom(lambda0, n_trunc)?;
    let s01 = build_connector(lambda0, lambda1, 0, n_trunc)?
        .matrix()
        .scale(coupling);
    let mut q = s01; // T_0^{n-1} S_{0,1}
    let mut n_values = Vec::with_capacity(n_max);
    let mut norms = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        if n > 1 {
            q = t0.matrix().matmul(&q);
        }
        // single-diagonal product: exact norm
        n_values.push(n);
        norms.push(n as f64 * q.max_abs());
    }
    let slope = if norms.iter().all(|&v| v > 0.0) {
        let (s, _) = loglog_fit(&n_values, &norms);
        Some(s)
    } else {
        None
    };
    Ok(CrossTermTrace {
        n_values,
        norms,
        slope,
    })
}
