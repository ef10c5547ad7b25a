//! Unitary invariants of the model bundles: Grammians of the holomorphic
//! frame, curvature, covariant derivatives of bundle maps, and second
//! fundamental forms.
//!
//! Sign convention: curvature K = -dbar (h^{-1} d h), so the line-bundle
//! curvature is -lambda (1-|w|^2)^{-2} (negative) and every second
//! fundamental form radicand below is positive.

use crate::atomic::{frame_inner, ModelSpec};
use crate::bergman::{kernel_mixed_derivative, section, section_norm2};
use crate::smallmat::SmallMat;
use crate::{C64, Error, Result};

/// Finite evaluation grid inside the disc with the finite-difference step
/// used for Wirtinger derivatives on it.
#[derive(Debug, Clone)]
pub struct DiscGrid {
    pub points: Vec<C64>,
    pub step: f64,
}

impl DiscGrid {
    /// Polar grid: the given radii times `n_angles` equally spaced angles.
    pub fn polar(radii: &[f64], n_angles: usize, step: f64) -> Result<Self> {
        if n_angles == 0 || radii.is_empty() {
            return Err(Error::Argument("grid needs radii and angles".into()));
        }
        if !(step > 0.0) {
            return Err(Error::Argument("grid step must be positive".into()));
        }
        let mut points = Vec::with_capacity(radii.len() * n_angles);
        for &r in radii {
            if !(r >= 0.0) || r + 2.0 * step >= 1.0 {
                return Err(Error::Domain(format!(
                    "grid radius {r} too close to the unit circle for step {step}"
                )));
            }
            for a in 0..n_angles {
                let th = 2.0 * std::f64::consts::PI * a as f64 / n_angles as f64;
                points.push(C64::new(r * th.cos(), r * th.sin()));
            }
        }
        Ok(DiscGrid { points, step })
    }

    /// Radii 0.1 .. 0.6, sixteen angles, step 1e-4.
    pub fn default_grid() -> Self {
        let radii = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        Self::polar(&radii, 16, 1e-4).unwrap()
    }
}

/// (d f, dbar f) of a matrix-valued function by Richardson-extrapolated
/// central Wirtinger differences.
pub fn wirtinger_derivatives<F>(f: &F, w: C64, step: f64) -> Result<(SmallMat, SmallMat)>
where
    F: Fn(C64) -> Result<SmallMat>,
{
    let one_scale = |d: f64| -> Result<(SmallMat, SmallMat)> {
        let fx = f(w + C64::new(d, 0.0))?
            .sub(&f(w - C64::new(d, 0.0))?)
            .scale(C64::new(1.0 / (2.0 * d), 0.0));
        let fy = f(w + C64::new(0.0, d))?
            .sub(&f(w - C64::new(0.0, d))?)
            .scale(C64::new(1.0 / (2.0 * d), 0.0));
        let half = C64::new(0.5, 0.0);
        let i = C64::new(0.0, 1.0);
        let dd = fx.sub(&fy.scale(i)).scale(half);
        let db = fx.add(&fy.scale(i)).scale(half);
        Ok((dd, db))
    };
    let (d1, b1) = one_scale(step)?;
    let (d2, b2) = one_scale(step / 2.0)?;
    let third = C64::new(1.0 / 3.0, 0.0);
    Ok((
        d2.scale(C64::new(4.0, 0.0)).sub(&d1).scale(third),
        b2.scale(C64::new(4.0, 0.0)).sub(&b1).scale(third),
    ))
}

/// Wirtinger derivatives of a scalar function.
pub fn wirtinger_scalar<F>(f: &F, w: C64, step: f64) -> Result<(C64, C64)>
where
    F: Fn(C64) -> Result<C64>,
{
    let g = |z: C64| Ok(SmallMat::from_rows(1, vec![f(z)?]));
    let (d, b) = wirtinger_derivatives(&g, w, step)?;
    Ok((d.entries()[0], b.entries()[0]))
}

/// Grammian of the frame via the closed kernel-derivative formula:
/// h_{kl} = sum_{i <= min(k,l)} conj(mu_{i,k}) mu_{i,l}
///          d^{l-i} dbar^{k-i} K_i (w, w).
pub fn grammian_closed(spec: &ModelSpec, w: C64) -> Result<SmallMat> {
    let n = spec.rank();
    let mut h = SmallMat::zeros(n);
    for k in 0..n {
        for l in 0..n {
            let mut s = C64::new(0.0, 0.0);
            for i in 0..=k.min(l) {
                let c = spec.mu(i, k).conj() * spec.mu(i, l);
                if c.norm() == 0.0 {
                    continue;
                }
                s += c
                    * kernel_mixed_derivative(
                        spec.lambda(i),
                        (l - i) as u32,
                        (k - i) as u32,
                        w,
                    )?;
            }
            h[(k, l)] = s;
        }
    }
    Ok(h)
}

/// Grammian via truncated inner products of the frame sections.
pub fn grammian_truncated(spec: &ModelSpec, w: C64) -> Result<SmallMat> {
    let n = spec.rank();
    let mut h = SmallMat::zeros(n);
    for k in 0..n {
        for l in 0..n {
            h[(k, l)] = frame_inner(spec, l, k, w)?;
        }
    }
    Ok(h)
}

/// Frame Grammian, computed both ways and cross-checked (the routes agree to
/// ~1e-12 away from the boundary; beyond 1e-6 is an internal error).
pub fn grammian(spec: &ModelSpec, w: C64) -> Result<SmallMat> {
    let closed = grammian_closed(spec, w)?;
    let truncated = grammian_truncated(spec, w)?;
    let dev = closed.sub(&truncated).max_abs();
    let scale = closed.max_abs().max(1.0);
    if dev > 1e-6 * scale {
        return Err(Error::Inconsistent(format!(
            "grammian routes disagree by {dev} at w={w}"
        )));
    }
    Ok(closed)
}

/// Curvature of the weight-lambda line bundle: -lambda / (1-|w|^2)^2.
pub fn line_curvature(lambda: f64, w: C64) -> Result<f64> {
    let rho2 = w.norm_sqr();
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    if rho2 >= 1.0 {
        return Err(Error::Domain("point outside the open disc".into()));
    }
    Ok(-lambda / ((1.0 - rho2) * (1.0 - rho2)))
}

/// Curvature matrix K(w) = -dbar( h^{-1} d h ) by Wirtinger central
/// differences of the closed-form Grammian.
pub fn curvature_matrix(spec: &ModelSpec, w: C64, step: f64) -> Result<SmallMat> {
    let h0 = grammian_closed(spec, w)?;
    let cond = h0.cond_estimate()?;
    if cond > 1e10 {
        return Err(Error::Numerical(format!(
            "grammian condition {cond:.3e} too large at w={w}"
        )));
    }
    let connection = |z: C64| -> Result<SmallMat> {
        let h = grammian_closed(spec, z)?;
        let (dh, _) = wirtinger_derivatives(&|y| grammian_closed(spec, y), z, step)?;
        Ok(h.inverse()?.matmul(&dh))
    };
    let (_, dbar_g) = wirtinger_derivatives(&connection, w, step)?;
    Ok(dbar_g.scale(C64::new(-1.0, 0.0)))
}

/// Samples of a matrix-valued map on the five-point cross stencil
/// { w, w + s, w - s, w + is, w - is }.
#[derive(Debug, Clone)]
pub struct CrossStencil {
    pub center: SmallMat,
    pub xp: SmallMat,
    pub xm: SmallMat,
    pub yp: SmallMat,
    pub ym: SmallMat,
}

impl CrossStencil {
    /// Sample a function on the stencil around `w`.
    pub fn sample<F>(f: &F, w: C64, step: f64) -> Result<Self>
    where
        F: Fn(C64) -> Result<SmallMat>,
    {
        Ok(CrossStencil {
            center: f(w)?,
            xp: f(w + C64::new(step, 0.0))?,
            xm: f(w - C64::new(step, 0.0))?,
            yp: f(w + C64::new(0.0, step))?,
            ym: f(w - C64::new(0.0, step))?,
        })
    }

    fn wirtinger(&self, step: f64) -> (SmallMat, SmallMat) {
        let fx = self.xp.sub(&self.xm).scale(C64::new(1.0 / (2.0 * step), 0.0));
        let fy = self.yp.sub(&self.ym).scale(C64::new(1.0 / (2.0 * step), 0.0));
        let half = C64::new(0.5, 0.0);
        let i = C64::new(0.0, 1.0);
        (
            fx.sub(&fy.scale(i)).scale(half),
            fx.add(&fy.scale(i)).scale(half),
        )
    }
}

/// Covariant derivatives of a bundle map from stencil samples:
/// (phi)_wbar = dbar phi and (phi)_w = d phi + [h^{-1} d h, phi].
pub fn covariant_derivative(
    phi: &CrossStencil,
    h: &CrossStencil,
    step: f64,
) -> Result<(SmallMat, SmallMat)> {
    let (dphi, dbar_phi) = phi.wirtinger(step);
    let (dh, _) = h.wirtinger(step);
    let conn = h.center.inverse()?.matmul(&dh);
    let bracket = conn.matmul(&phi.center).sub(&phi.center.matmul(&conn));
    Ok((dphi.add(&bracket), dbar_phi))
}

/// Second fundamental form of the inclusion of atom i in the span of atoms
/// i and i+1, closed form:
/// theta = mu K_i / sqrt( ||t_{i+1}||^2/||t_i||^2 - |mu|^2 K_i ).
pub fn sff_adjacent(spec: &ModelSpec, i: usize, w: C64) -> Result<C64> {
    if i + 1 >= spec.rank() {
        return Err(Error::Argument(format!(
            "adjacent pair index {i} out of range for rank {}",
            spec.rank()
        )));
    }
    let mu = spec.mu(i, i + 1);
    if mu.norm() == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let k_i = line_curvature(spec.lambda(i), w)?;
    let ratio = section_norm2(spec.lambda(i + 1), w)? / section_norm2(spec.lambda(i), w)?;
    let radicand = ratio - mu.norm_sqr() * k_i;
    if radicand <= 0.0 {
        return Err(Error::Numerical(format!(
            "second fundamental form radicand {radicand} not positive (sign convention violated)"
        )));
    }
    Ok(mu * k_i / radicand.sqrt())
}

/// The same invariant through the frame formula
/// theta = -h^{1/2} dbar( h^{-1} <g1, g0> ) / (||g1||^2 - |<g1,g0>|^2/h)^{1/2}
/// with every inner product taken from truncated section sums and the outer
/// derivative from Wirtinger differences.  Independent of the closed form.
pub fn sff_adjacent_frame(
    spec: &ModelSpec,
    i: usize,
    w: C64,
    trunc: usize,
    step: f64,
) -> Result<C64> {
    if i + 1 >= spec.rank() {
        return Err(Error::Argument("adjacent pair index out of range".into()));
    }
    let mu = spec.mu(i, i + 1);
    let (li, lj) = (spec.lambda(i), spec.lambda(i + 1));
    // g0 = t_i, g1 = mu t_i' + t_{i+1}
    let inner_ratio = |z: C64| -> Result<C64> {
        let t0 = section(li, z, 0, trunc)?;
        let t1 = section(li, z, 1, trunc)?;
        Ok(mu * t1.inner(&t0) / t0.norm2())
    };
    let (_, dbar_g) = wirtinger_scalar(&inner_ratio, w, step)?;
    let t0 = section(li, w, 0, trunc)?;
    let t1 = section(li, w, 1, trunc)?;
    let tb = section(lj, w, 0, trunc)?;
    let h = t0.norm2();
    let cross = mu * t1.inner(&t0);
    let g1_norm2 = mu.norm_sqr() * t1.norm2() + tb.norm2();
    let denom2 = g1_norm2 - cross.norm_sqr() / h;
    if denom2 <= 0.0 {
        return Err(Error::Numerical("frame-formula radicand not positive".into()));
    }
    Ok(-h.sqrt() * dbar_g / denom2.sqrt())
}

/// General second fundamental form of the inclusion of atom i in the rank-2
/// bundle spanned with atom j, in terms of h_i = ||t_i||^2 and the reduced
/// coefficient m_{i,j}/(j-i):
///
/// theta = md dbar(h^{-1} d^k h) / sqrt( h_j/h_i + |md|^2 g ),
/// g = ( h d^k dbar^k h - d^k h dbar^k h ) / h^2,  k = j - i.
pub fn sff_general(spec: &ModelSpec, i: usize, j: usize, w: C64) -> Result<C64> {
    if i >= j || j >= spec.rank() {
        return Err(Error::Argument(format!(
            "pair ({i},{j}) must satisfy i < j < rank"
        )));
    }
    let m = spec.coefficients().m(i, j);
    sff_general_from_m(spec.lambda(i), spec.lambda(j), m, (j - i) as u32, w)
}

/// [`sff_general`] with the operator coefficient supplied directly.
pub fn sff_general_from_m(
    lambda_i: f64,
    lambda_j: f64,
    m: C64,
    dist: u32,
    w: C64,
) -> Result<C64> {
    if m.norm() == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let k = dist;
    let md = m / C64::new(k as f64, 0.0);
    let h = kernel_mixed_derivative(lambda_i, 0, 0, w)?;
    let dbar_h = kernel_mixed_derivative(lambda_i, 0, 1, w)?;
    let dk_h = kernel_mixed_derivative(lambda_i, k, 0, w)?;
    let dbar_dk_h = kernel_mixed_derivative(lambda_i, k, 1, w)?;
    let dk_dbark_h = kernel_mixed_derivative(lambda_i, k, k, w)?;
    let dbark_h = kernel_mixed_derivative(lambda_i, 0, k, w)?;
    // dbar(h^{-1} d^k h) by the product rule
    let num = md * (dbar_dk_h / h - dbar_h * dk_h / (h * h));
    let g = (h * dk_dbark_h - dk_h * dbark_h) / (h * h);
    if g.im.abs() > 1e-8 * g.re.abs().max(1.0) {
        return Err(Error::Numerical(format!(
            "second-form denominator unexpectedly complex: {g}"
        )));
    }
    let hj_over_hi = section_norm2(lambda_j, w)? / section_norm2(lambda_i, w)?;
    let radicand = hj_over_hi + md.norm_sqr() * g.re;
    if radicand <= 0.0 {
        return Err(Error::Numerical(format!(
            "second fundamental form radicand {radicand} not positive"
        )));
    }
    Ok(num / radicand.sqrt())
}

/// Largest pointwise deviation of the (i, j) second fundamental forms of two
/// models over a grid.
pub fn sff_deviation(
    spec: &ModelSpec,
    other: &ModelSpec,
    i: usize,
    j: usize,
    grid: &DiscGrid,
) -> Result<f64> {
    let mut dev = 0.0_f64;
    for &w in &grid.points {
        let a = sff_general(spec, i, j, w)?;
        let b = sff_general(other, i, j, w)?;
        dev = dev.max((a - b).norm());
    }
    Ok(dev)
}

/// Decide whether the family of second fundamental forms separates the two
/// models exactly where their operator coefficients differ: deviation above
/// 1e-8 whenever m != m~, and below 1e-10 whenever m == m~.
pub fn sff_distinguishes(spec: &ModelSpec, other: &ModelSpec, grid: &DiscGrid) -> Result<bool> {
    if spec.rank() != other.rank()
        || (spec.lambda0() - other.lambda0()).abs() > 1e-14
        || (spec.valency() - other.valency()).abs() > 1e-14
    {
        return Err(Error::Argument(
            "models must share base weight, valency and rank".into(),
        ));
    }
    let (ca, cb) = (spec.coefficients(), other.coefficients());
    let scale = ca
        .m_table()
        .iter()
        .chain(cb.m_table())
        .map(|x| x.norm())
        .fold(0.0, f64::max)
        .max(1.0);
    for i in 0..spec.rank() {
        for j in i + 1..spec.rank() {
            let same = (ca.m(i, j) - cb.m(i, j)).norm() <= 1e-12 * scale;
            let dev = sff_deviation(spec, other, i, j, grid)?;
            if same && dev > 1e-10 {
                return Ok(false);
            }
            if !same && dev <= 1e-8 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Everything the geometry runner reports at one grid point.
#[derive(Debug, Clone)]
pub struct GeometryPoint {
    pub w: C64,
    pub grammian: SmallMat,
    pub curvature: SmallMat,
    /// theta_{i,i+1} for i = 0..rank-1.
    pub theta_adjacent: Vec<C64>,
    /// theta_{i,j} for every pair i < j (row-major pair order).
    pub theta_pairs: Vec<C64>,
}

/// Grid evaluation report.
#[derive(Debug, Clone)]
pub struct GeometryReport {
    pub rank: usize,
    pub points: Vec<GeometryPoint>,
}

fn geometry_point(spec: &ModelSpec, w: C64, step: f64) -> Result<GeometryPoint> {
    let h = grammian(spec, w)?;
    h.cholesky()?; // positive definiteness gate
    let curvature = if spec.rank() == 1 {
        SmallMat::from_rows(1, vec![C64::new(line_curvature(spec.lambda0(), w)?, 0.0)])
    } else {
        curvature_matrix(spec, w, step)?
    };
    let mut theta_adjacent = Vec::new();
    for i in 0..spec.rank().saturating_sub(1) {
        theta_adjacent.push(sff_adjacent(spec, i, w)?);
    }
    let mut theta_pairs = Vec::new();
    for i in 0..spec.rank() {
        for j in i + 1..spec.rank() {
            theta_pairs.push(sff_general(spec, i, j, w)?);
        }
    }
    Ok(GeometryPoint {
        w,
        grammian: h,
        curvature,
        theta_adjacent,
        theta_pairs,
    })
}

/// Evaluate the full report over a grid (parallel by default).
pub fn grid_report(spec: &ModelSpec, grid: &DiscGrid) -> Result<GeometryReport> {
    let results = crate::par::map_collect(&grid.points, |&w| geometry_point(spec, w, grid.step));
    let points = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(GeometryReport {
        rank: spec.rank(),
        points,
    })
}

/// Sequential twin of [`grid_report`], kept for benchmarking.
pub fn grid_report_seq(spec: &ModelSpec, grid: &DiscGrid) -> Result<GeometryReport> {
    let results =
        crate::par::map_collect_seq(&grid.points, |&w| geometry_point(spec, w, grid.step));
    let points = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(GeometryReport {
        rank: spec.rank(),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn spec2(mu01: C64) -> ModelSpec {
        ModelSpec::new(1.0, 1.0, 2, &[(0, 1, mu01)], 512).unwrap()
    }

    #[test]
    fn kernel_mixed_derivative_matches_series() {
        let lam = 1.7;
        let w = c(0.3, -0.2);
        for (r, s) in [(0u32, 0u32), (1, 0), (0, 2), (1, 1), (2, 1), (2, 2)] {
            let mut series = c(0.0, 0.0);
            for n in (r.max(s) as u64)..400 {
                let a = crate::bergman::pochhammer_coeff(lam, n).unwrap();
                let f1 = crate::special::falling(n, r as u64);
                let f2 = crate::special::falling(n, s as u64);
                series += a * f1 * f2 * w.powu(n as u32 - r) * w.conj().powu(n as u32 - s);
            }
            let direct = kernel_mixed_derivative(lam, r, s, w).unwrap();
            assert!(
                (series - direct).norm() <= 1e-10 * direct.norm().max(1.0),
                "r={r} s={s}: {series} vs {direct}"
            );
        }
        // jets are orthogonal at the origin
        let v = kernel_mixed_derivative(lam, 2, 1, c(0.0, 0.0)).unwrap();
        assert!(v.norm() < 1e-15);
    }

    #[test]
    fn grammian_examples() {
        // n=2 at w=0: [[1, 0], [0, 1 + lambda0 |mu01|^2]]
        let mu = c(0.8, 0.6);
        let spec = spec2(mu);
        let h = grammian(&spec, c(0.0, 0.0)).unwrap();
        assert!((h[(0, 0)] - c(1.0, 0.0)).norm() < 1e-12);
        assert!(h[(0, 1)].norm() < 1e-12);
        assert!(h[(1, 0)].norm() < 1e-12);
        assert!((h[(1, 1)] - c(1.0 + 1.0 * mu.norm_sqr(), 0.0)).norm() < 1e-12);

        // n=1: h = (1-|w|^2)^{-lambda}
        let s1 = ModelSpec::new(2.0, 2.0, 1, &[], 256).unwrap();
        let w = c(0.4, 0.3);
        let h = grammian(&s1, w).unwrap();
        let expect = (1.0 - w.norm_sqr()).powf(-2.0);
        assert!((h[(0, 0)] - c(expect, 0.0)).norm() < 1e-10);

        // orthogonal atoms: diagonal grammian with jet norms
        let s = ModelSpec::new(1.5, 1.0, 3, &[], 256).unwrap();
        let h = grammian(&s, w).unwrap();
        for k in 0..3 {
            for l in 0..3 {
                if k != l {
                    assert!(h[(k, l)].norm() < 1e-12);
                }
            }
            let expect = section_norm2(s.lambda(k), w).unwrap();
            assert!((h[(k, k)] - c(expect, 0.0)).norm() < 1e-9 * expect);
        }
    }

    #[test]
    fn grammian_routes_agree_on_grid() {
        let spec = ModelSpec::new(
            0.9,
            1.5,
            3,
            &[(0, 1, c(1.0, 0.3)), (1, 2, c(-0.5, 0.2)), (0, 2, c(0.1, 0.1))],
            512,
        )
        .unwrap();
        for &r in &[0.2, 0.4, 0.6] {
            for &a in &[0.0, 1.1, 2.9, 4.4] {
                let w = c(r * f64::cos(a), r * f64::sin(a));
                let ha = grammian_closed(&spec, w).unwrap();
                let hb = grammian_truncated(&spec, w).unwrap();
                let dev = ha.sub(&hb).max_abs();
                assert!(dev <= 1e-8 * ha.max_abs().max(1.0), "w={w} dev={dev}");
                // positive definite
                ha.cholesky().unwrap();
            }
        }
    }

    #[test]
    fn line_curvature_values_and_fd() {
        assert!((line_curvature(1.0, c(0.0, 0.0)).unwrap() + 1.0).abs() < 1e-15);
        // |w|^2 = 1/2: -2 / (1/4) = -8
        let w = c(0.5_f64.sqrt(), 0.0);
        assert!((line_curvature(2.0, w).unwrap() + 8.0).abs() < 1e-12);

        // 4-point second difference of -log h at step 1e-4
        let lam = 1.3;
        let w = c(0.3, 0.0);
        let d = 1e-4;
        let f = |z: C64| -(section_norm2(lam, z).unwrap().ln());
        let lap = (f(w + c(d, 0.0)) + f(w - c(d, 0.0)) + f(w + c(0.0, d)) + f(w - c(0.0, d))
            - 4.0 * f(w))
            / (d * d);
        let fd = lap / 4.0; // dbar d = Laplacian / 4
        let exact = line_curvature(lam, w).unwrap();
        assert!(
            (fd - exact).abs() <= 1e-5 * exact.abs(),
            "fd={fd} exact={exact}"
        );
    }

    #[test]
    fn curvature_matrix_reduces_to_line_curvature() {
        let s1 = ModelSpec::new(2.0, 2.0, 1, &[], 128).unwrap();
        let w = c(0.2, 0.0);
        let k = curvature_matrix(&s1, w, 1e-4).unwrap();
        let exact = line_curvature(2.0, w).unwrap();
        assert!(
            (k[(0, 0)] - c(exact, 0.0)).norm() <= 1e-5 * exact.abs(),
            "{} vs {exact}",
            k[(0, 0)]
        );
    }

    #[test]
    fn curvature_matrix_of_direct_sum_is_diagonal() {
        let s = ModelSpec::new(1.0, 1.5, 2, &[], 128).unwrap();
        let w = c(0.25, -0.3);
        let k = curvature_matrix(&s, w, 1e-4).unwrap();
        let k0 = line_curvature(s.lambda(0), w).unwrap();
        let k1 = line_curvature(s.lambda(1), w).unwrap();
        assert!((k[(0, 0)] - c(k0, 0.0)).norm() < 1e-5 * k0.abs());
        assert!((k[(1, 1)] - c(k1, 0.0)).norm() < 1e-5 * k1.abs());
        assert!(k[(0, 1)].norm() < 1e-6);
        assert!(k[(1, 0)].norm() < 1e-6);
    }

    #[test]
    fn curvature_spectrum_invariant_under_diagonal_phase() {
        let mu = c(0.9, 0.4);
        let spec = spec2(mu);
        let w = c(0.3, 0.1);
        let k1 = curvature_matrix(&spec, w, 1e-4).unwrap();
        // conjugating the frame by diag(1, e^{i phi}) multiplies mu01 by the
        // phase and conjugates the curvature; the spectrum is unchanged.
        let phase = C64::from_polar(1.0, 0.77);
        let spec_rot = spec2(mu * phase);
        let k2 = curvature_matrix(&spec_rot, w, 1e-4).unwrap();
        let tr1 = k1.trace();
        let tr2 = k2.trace();
        let tr1sq = k1.matmul(&k1).trace();
        let tr2sq = k2.matmul(&k2).trace();
        assert!((tr1 - tr2).norm() < 1e-8 * tr1.norm());
        assert!((tr1sq - tr2sq).norm() < 1e-8 * tr1sq.norm());
    }

    #[test]
    fn covariant_derivative_examples() {
        let spec = spec2(c(1.0, 0.0));
        let w = c(0.2, 0.0);
        let step = 1e-4;
        let h_st = CrossStencil::sample(&|z| grammian_closed(&spec, z), w, step).unwrap();
        // identity bundle map: both derivatives vanish
        let id_st = CrossStencil::sample(&|_| Ok(SmallMat::identity(2)), w, step).unwrap();
        let (dw, dbarw) = covariant_derivative(&id_st, &h_st, step).unwrap();
        assert!(dw.max_abs() < 1e-10);
        assert!(dbarw.max_abs() < 1e-10);

        // scalar case: (phi)_w = d phi, commutator drops out
        let lam = 1.4;
        let phi = |z: C64| {
            Ok(SmallMat::from_rows(
                1,
                vec![c(line_curvature(lam, z).unwrap(), 0.0)],
            ))
        };
        let h1 = |z: C64| Ok(SmallMat::from_rows(1, vec![c(section_norm2(lam, z)?, 0.0)]));
        let phi_st = CrossStencil::sample(&phi, w, step).unwrap();
        let h1_st = CrossStencil::sample(&h1, w, step).unwrap();
        let (_, dbar_k) = covariant_derivative(&phi_st, &h1_st, step).unwrap();
        // dbar K = -2 lam w (1-|w|^2)^{-3}
        let exact = -2.0 * lam * w.re / (1.0 - w.norm_sqr()).powi(3);
        assert!(
            (dbar_k.entries()[0] - c(exact, 0.0)).norm() <= 1e-4 * exact.abs(),
            "{} vs {exact}",
            dbar_k.entries()[0]
        );
    }

    #[test]
    fn sff_adjacent_examples() {
        // mu = 0 gives theta = 0
        let spec = spec2(c(0.0, 0.0));
        assert_eq!(sff_adjacent(&spec, 0, c(0.3, 0.2)).unwrap(), c(0.0, 0.0));

        // w = 0: theta = -mu lam / sqrt(1 + lam |mu|^2)
        let mu = c(0.7, -0.4);
        let lam = 1.0;
        let spec = spec2(mu);
        let got = sff_adjacent(&spec, 0, c(0.0, 0.0)).unwrap();
        let expect = -mu * lam / (1.0 + lam * mu.norm_sqr()).sqrt();
        assert!((got - expect).norm() < 1e-12, "{got} vs {expect}");
    }

    #[test]
    fn sff_two_routes_agree() {
        let mu = c(1.0, 0.5);
        let spec = spec2(mu);
        for &(re, im) in &[(0.1, 0.0), (0.3, 0.2), (0.0, 0.45), (-0.5, 0.25)] {
            let w = c(re, im);
            let a = sff_adjacent(&spec, 0, w).unwrap();
            let b = sff_adjacent_frame(&spec, 0, w, 512, 1e-4).unwrap();
            assert!(
                (a - b).norm() <= 1e-7 * a.norm().max(1.0),
                "w={w}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn sff_general_reduces_to_adjacent_and_matches_fd() {
        let mu = c(0.6, 0.3);
        let spec = spec2(mu);
        for idx in 0..10 {
            let th = idx as f64 * 0.628;
            let w = C64::from_polar(0.1 + 0.04 * idx as f64, th);
            let a = sff_adjacent(&spec, 0, w).unwrap();
            let b = sff_general(&spec, 0, 1, w).unwrap();
            assert!((a - b).norm() <= 1e-10 * a.norm().max(1.0), "w={w}");
        }

        // m = 0 gives zero
        let s0 = ModelSpec::new(1.0, 1.0, 3, &[(0, 1, c(1.0, 0.0))], 64).unwrap();
        assert_eq!(sff_general(&s0, 1, 2, c(0.2, 0.1)).unwrap(), c(0.0, 0.0));

        // numerator at w = 0 for dist 2 against finite differences of the
        // explicit kernel diagonal
        let lam = 1.25;
        let w0 = c(0.0, 0.0);
        let num_analytic = {
            let h = kernel_mixed_derivative(lam, 0, 0, w0).unwrap();
            let dbar_h = kernel_mixed_derivative(lam, 0, 1, w0).unwrap();
            let d2_h = kernel_mixed_derivative(lam, 2, 0, w0).unwrap();
            let dbar_d2_h = kernel_mixed_derivative(lam, 2, 1, w0).unwrap();
            dbar_d2_h / h - dbar_h * d2_h / (h * h)
        };
        let f = |z: C64| -> Result<C64> {
            let h = kernel_mixed_derivative(lam, 0, 0, z)?;
            let d2 = kernel_mixed_derivative(lam, 2, 0, z)?;
            Ok(d2 / h)
        };
        let (_, dbar_fd) = wirtinger_scalar(&f, w0, 1e-4).unwrap();
        assert!(
            (dbar_fd - num_analytic).norm() <= 1e-5 * num_analytic.norm().max(1.0),
            "{dbar_fd} vs {num_analytic}"
        );
    }

    #[test]
    fn sff_distinguishes_examples() {
        let grid = DiscGrid::polar(&[0.1, 0.3, 0.5], 8, 1e-4).unwrap();
        let a = spec2(c(1.0, 0.0));
        // identical models: vacuous true
        assert!(sff_distinguishes(&a, &a.clone(), &grid).unwrap());
        // different magnitude
        let b = spec2(c(2.0, 0.0));
        assert!(sff_distinguishes(&a, &b, &grid).unwrap());
        let dev = sff_deviation(&a, &b, 0, 1, &grid).unwrap();
        assert!(dev > 1e-3, "dev={dev}");
        // phase change is visible
        let rot = spec2(c(1.0, 0.0) * C64::from_polar(1.0, 0.5));
        assert!(sff_distinguishes(&a, &rot, &grid).unwrap());
        assert!(sff_deviation(&a, &rot, 0, 1, &grid).unwrap() > 1e-3);
    }

    #[test]
    fn grid_report_runs_and_matches_sequential() {
        let spec = spec2(c(1.0, 0.0));
        let grid = DiscGrid::polar(&[0.2, 0.4], 4, 1e-4).unwrap();
        let a = grid_report(&spec, &grid).unwrap();
        let b = grid_report_seq(&spec, &grid).unwrap();
        assert_eq!(a.points.len(), 8);
        for (p, q) in a.points.iter().zip(&b.points) {
            assert_eq!(p.w, q.w);
            assert!(p.grammian.sub(&q.grammian).max_abs() == 0.0);
            assert!(p.curvature.sub(&q.curvature).max_abs() == 0.0);
        }
    }

    #[test]
    fn grid_invariants() {
        assert!(DiscGrid::polar(&[0.9999], 4, 1e-3).is_err());
        let g = DiscGrid::default_grid();
        assert_eq!(g.points.len(), 96);
        assert!(g.points.iter().all(|w| w.norm() <= 0.6 + 1e-12));
    }
}
