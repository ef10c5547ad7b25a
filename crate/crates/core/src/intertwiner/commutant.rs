//! Commutant construction from a polynomial symbol, and the block 0/I
//! idempotent probe for strong irreducibility.
//!
//! A commutant element has diagonal blocks phi(T_i), zero first
//! superdiagonal, and higher blocks acting on sections by
//! X_{i,j} t_j = sum_s l^s_{i,j} phi^{(s)} t_i^{(j-i-s)}.  The scalar tables
//! l^s are assembled symbolically in the jet basis (coefficients of
//! phi^{(s)} t^{(q)}) before any matrix is instantiated; each one comes from
//! the division l^s = c^s / (j - i - s).

use crate::atomic::{assemble, ModelSpec};
use crate::band::BandMatrix;
use crate::bergman::{build_connector, OperatorSource, TruncatedOperator};
use crate::block::BlockMatrix;
use crate::special::binomial;
use crate::{C64, Error, Result};

const MAX_PHI_DEGREE: usize = 32;

/// phi(T) for a banded matrix by Horner evaluation.
fn matrix_polynomial(t: &BandMatrix, coeffs: &[C64]) -> BandMatrix {
    let dim = t.dim();
    let mut p = BandMatrix::zeros(dim);
    if coeffs.is_empty() {
        return p;
    }
    let mut iter = coeffs.iter().rev();
    let lead = *iter.next().unwrap();
    p.axpy(lead, &BandMatrix::identity(dim));
    for &c in iter {
        p = p.matmul(t);
        p.axpy(c, &BandMatrix::identity(dim));
    }
    p
}

/// Coefficients of the s-th derivative of the polynomial.
fn derivative_coeffs(coeffs: &[C64], s: usize) -> Vec<C64> {
    if s >= coeffs.len() {
        return Vec::new();
    }
    coeffs[s..]
        .iter()
        .enumerate()
        .map(|(idx, &a)| {
            let d = idx + s;
            a * crate::special::falling(d as u64, s as u64)
        })
        .collect()
}

/// Scalar jet tables l^s_{i,j} for every block, from the commutation
/// equations taken coefficient by coefficient in the basis
/// { phi^{(s)} t^{(q)} }.  Index: table[i][j][s], s = 1..j-i-1.
fn jet_tables(spec: &ModelSpec) -> Vec<Vec<Vec<C64>>> {
    let n = spec.rank();
    let m = spec.coefficients();
    // l_of(i, r, sigma): coefficient of phi^{(sigma)} t^{(r-i-sigma)} in
    // X_{i,r} t_r, with the diagonal convention X_{i,i} = phi(T_i).
    let mut table: Vec<Vec<Vec<C64>>> = vec![vec![Vec::new(); n]; n];
    let l_of = |table: &Vec<Vec<Vec<C64>>>, i: usize, r: usize, sigma: usize| -> C64 {
        if i == r {
            if sigma == 0 {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        } else {
            *table[i][r]
                .get(sigma.wrapping_sub(1))
                .unwrap_or(&C64::new(0.0, 0.0))
        }
    };
    for dist in 2..n {
        for i in 0..n - dist {
            let j = i + dist;
            let mut c = vec![C64::new(0.0, 0.0); dist]; // c[s], s = 0..dist-1
            // -sum_{r>i} S_{i,r} X_{r,j}
            for r in i + 1..=j {
                let m_ir = m.m(i, r);
                if m_ir.norm() == 0.0 {
                    continue;
                }
                for (s, slot) in c.iter_mut().enumerate() {
                    *slot -= m_ir * l_of(&table, r, j, s);
                }
            }
            // +sum_{r<j} X_{i,r} S_{r,j}, with Leibniz on the (j-r-1)-fold
            // derivative of X_{i,r} t_r
            for r in i..j {
                let m_rj = m.m(r, j);
                if m_rj.norm() == 0.0 {
                    continue;
                }
                let order = j - r - 1;
                for sigma in 0..=(r - i) {
                    let l = l_of(&table, i, r, sigma);
                    if l.norm() == 0.0 {
                        continue;
                    }
                    for p in 0..=order {
                        let s = sigma + p;
                        if s < c.len() {
                            c[s] += m_rj * binomial(order as u64, p as u64) * l;
                        }
                    }
                }
            }
            // the phi^{(0)} component cancels identically; solve the rest
            let mut l_ij = vec![C64::new(0.0, 0.0); dist - 1];
            for s in 1..dist {
                l_ij[s - 1] = c[s] / C64::new((dist - s) as f64, 0.0);
            }
            table[i][j] = l_ij;
        }
    }
    table
}

/// Build a commutant element from a polynomial symbol (coefficients in
/// ascending degree, degree <= 32).  Returns the block operator and the
/// interior residual of T X - X T.
pub fn commutant_element(spec: &ModelSpec, phi: &[C64]) -> Result<(TruncatedOperator, f64)> {
    if phi.len() > MAX_PHI_DEGREE + 1 {
        return Err(Error::Argument(format!(
            "polynomial degree {} exceeds the supported {MAX_PHI_DEGREE}",
            phi.len() - 1
        )));
    }
    let model = assemble(spec)?;
    let n = spec.rank();
    let nt = spec.trunc();
    let tables = jet_tables(spec);

    let mut x = BlockMatrix::zeros(n, nt);
    for i in 0..n {
        let t_i = model.block(i, i).unwrap();
        x.set_block(i, i, matrix_polynomial(t_i, phi));
    }
    for i in 0..n {
        for j in i + 2..n {
            let l_ij = &tables[i][j];
            let mut acc: Option<BandMatrix> = None;
            for (s_idx, &l) in l_ij.iter().enumerate() {
                let s = s_idx + 1;
                if l.norm() == 0.0 {
                    continue;
                }
                let dphi = derivative_coeffs(phi, s);
                if dphi.is_empty() {
                    continue;
                }
                let t_j = model.block(j, j).unwrap();
                let conn = build_connector(spec.lambda(i), spec.lambda(j), (j - i) - s, nt)?;
                let term = conn.matrix().matmul(&matrix_polynomial(t_j, &dphi)).scale(l);
                match &mut acc {
                    Some(a) => a.axpy(C64::new(1.0, 0.0), &term),
                    None => acc = Some(term),
                }
            }
            if let Some(mut b) = acc {
                b.prune(0.0);
                if !b.is_zero() {
                    x.set_block(i, j, b);
                }
            }
        }
    }

    let commutator = model.blocks().matmul(&x).sub(&x.matmul(model.blocks()));
    let pad = 2 * (phi.len() + n) + 8;
    let window = nt.saturating_sub(pad);
    let mut resid2 = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            if let Some(b) = commutator.block(i, j) {
                resid2 += b.frobenius_window(window).powi(2);
            }
        }
    }
    let op = TruncatedOperator::new(
        x.to_band(),
        OperatorSource::Derived(format!("commutant element, degree {}", phi.len().saturating_sub(1))),
    )?;
    Ok((op, resid2.sqrt()))
}

/// Survey of block-diagonal 0/I idempotent candidates.
#[derive(Debug, Clone)]
pub struct IdempotentReport {
    pub rank: usize,
    /// Bitmask patterns (bit i = identity on atom i) that commute with the
    /// operator.
    pub survivors: Vec<u32>,
    pub only_trivial: bool,
    /// Connected components of the adjacency chain (edges where
    /// S_{i,i+1} != 0).
    pub chain_components: usize,
}

/// Enumerate the 2^n block 0/I patterns and keep those commuting with the
/// assembled operator: P_i S_{i,i+1} = S_{i,i+1} P_{i+1} for every adjacent
/// pair.  Exactly {0, I} survive iff the adjacency chain is connected.
pub fn idempotent_probe(spec: &ModelSpec) -> Result<IdempotentReport> {
    let n = spec.rank();
    if n > 20 {
        return Err(Error::Argument("idempotent probe limited to rank <= 20".into()));
    }
    let model = assemble(spec)?;
    let mut edge_norm = Vec::new();
    for i in 0..n.saturating_sub(1) {
        edge_norm.push(
            model
                .block(i, i + 1)
                .map(|b| b.frobenius())
                .unwrap_or(0.0),
        );
    }
    let scale = edge_norm.iter().cloned().fold(1.0_f64, f64::max);
    let mut survivors = Vec::new();
    for pattern in 0..(1u32 << n) {
        let bit = |i: usize| (pattern >> i) & 1;
        let mut max_defect = 0.0_f64;
        for (i, &norm) in edge_norm.iter().enumerate() {
            // (P_i - P_{i+1}) S_{i,i+1}: vanishes iff the bits agree or the
            // block is zero
            let diff = (bit(i) as f64 - bit(i + 1) as f64).abs();
            max_defect = max_defect.max(diff * norm);
        }
        if max_defect <= 1e-12 * scale {
            survivors.push(pattern);
        }
    }
    let mut components = 1usize;
    for &norm in &edge_norm {
        if norm <= 1e-12 * scale {
            components += 1;
        }
    }
    let only_trivial = survivors.len() == 2
        && survivors.contains(&0)
        && survivors.contains(&((1u32 << n) - 1));
    Ok(IdempotentReport {
        rank: n,
        survivors,
        only_trivial,
        chain_components: components,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn all_ones_spec(n: usize, valency: f64, trunc: usize) -> ModelSpec {
        let mut entries = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                entries.push((i, j, c(1.0, 0.0)));
            }
        }
        ModelSpec::new(1.0, valency, n, &entries, trunc).unwrap()
    }

    #[test]
    fn jet_tables_match_all_minus_one_formula() {
        // with every m = -1 the tables are identically -1
        let spec = all_ones_spec(4, 1.5, 16);
        let tables = jet_tables(&spec);
        for i in 0..4 {
            for j in i + 2..4 {
                for (s_idx, l) in tables[i][j].iter().enumerate() {
                    assert!(
                        (l - c(-1.0, 0.0)).norm() < 1e-12,
                        "l^{}_{{{i},{j}}} = {l}",
                        s_idx + 1
                    );
                }
            }
        }
    }

    #[test]
    fn constant_symbol_gives_scaled_identity() {
        let spec = all_ones_spec(3, 1.0, 64);
        let (x, resid) = commutant_element(&spec, &[c(2.5, -1.0)]).unwrap();
        assert_eq!(resid, 0.0);
        for r in 0..x.dim() {
            for s in 0..x.dim() {
                let expect = if r == s { c(2.5, -1.0) } else { c(0.0, 0.0) };
                assert_eq!(x.entry(r, s), expect);
            }
        }
    }

    #[test]
    fn rank_two_element_is_diagonal() {
        let spec = ModelSpec::new(1.0, 1.0, 2, &[(0, 1, c(0.8, 0.3))], 128).unwrap();
        let phi = [c(0.5, 0.0), c(1.0, -0.5), c(0.0, 0.25)];
        let (x, resid) = commutant_element(&spec, &phi).unwrap();
        assert!(resid <= 1e-9, "residual {resid}");
        // off-diagonal blocks vanish
        for r in 0..128 {
            for s in 128..256 {
                assert_eq!(x.entry(r, s), c(0.0, 0.0));
            }
        }
    }

    #[test]
    fn rank_three_linear_symbol() {
        let spec = all_ones_spec(3, 1.0, 512);
        let (_, resid) = commutant_element(&spec, &[c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!(resid <= 1e-7, "residual {resid}");
    }

    #[test]
    fn general_mu_commutant() {
        let spec = ModelSpec::new(
            1.2,
            1.5,
            4,
            &[
                (0, 1, c(1.0, 0.2)),
                (1, 2, c(0.7, -0.3)),
                (2, 3, c(1.3, 0.0)),
                (0, 2, c(0.4, 0.1)),
                (1, 3, c(-0.6, 0.5)),
                (0, 3, c(0.2, 0.2)),
            ],
            256,
        )
        .unwrap();
        let phi = [c(0.3, 0.0), c(1.0, 0.0), c(-0.4, 0.2), c(0.05, 0.0)];
        let (_, resid) = commutant_element(&spec, &phi).unwrap();
        assert!(resid <= 1e-7, "residual {resid}");
    }

    #[test]
    fn idempotent_probe_counts() {
        // connected chain: only the trivial patterns
        let spec = all_ones_spec(3, 1.0, 32);
        let rep = idempotent_probe(&spec).unwrap();
        assert!(rep.only_trivial);
        assert_eq!(rep.survivors, vec![0, 0b111]);
        assert_eq!(rep.chain_components, 1);

        // split chain: n=2 with no coupling
        let spec = ModelSpec::new(1.0, 1.0, 2, &[], 32).unwrap();
        let rep = idempotent_probe(&spec).unwrap();
        assert_eq!(rep.survivors.len(), 4);
        assert!(!rep.only_trivial);
        assert_eq!(rep.chain_components, 2);

        // n=3 chain with both adjacent couplings: 2 survivors
        let spec = ModelSpec::new(
            1.0,
            1.0,
            3,
            &[(0, 1, c(1.0, 0.0)), (1, 2, c(1.0, 0.0))],
            32,
        )
        .unwrap();
        let rep = idempotent_probe(&spec).unwrap();
        assert_eq!(rep.survivors.len(), 2);

        // components rule: 2^c survivors
        let spec = ModelSpec::new(1.0, 1.0, 4, &[(0, 1, c(1.0, 0.0)), (2, 3, c(0.5, 0.0))], 32)
            .unwrap();
        let rep = idempotent_probe(&spec).unwrap();
        assert_eq!(rep.chain_components, 2);
        assert_eq!(rep.survivors.len(), 4);
    }
}
