//! Quasi-homogeneous model specifications: the mu <-> m coefficient
//! recursions, the valency-based boundedness classification, assembly of the
//! block operator, and the homogeneity detector.

use crate::band::BandMatrix;
use crate::bergman::{build_atom, build_connector, section, OperatorSource, TruncatedOperator};
use crate::block::BlockMatrix;
use crate::special::{binomial, pochhammer};
use crate::{C64, Error, Result};

/// Coefficients on forced-zero positions below this fraction of the table
/// maximum are treated as exact zeros (round-trip dust).
const ZERO_DUST: f64 = 1e-12;

/// Defining data of a quasi-homogeneous operator: base weight, valency,
/// rank, the upper-triangular frame coefficients (unit diagonal), and the
/// per-atom truncation dimension.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    lambda0: f64,
    valency: f64,
    rank: usize,
    mu: Vec<C64>, // rank x rank, row major, unit diagonal, zero below
    trunc: usize,
}

impl ModelSpec {
    /// `mu_entries` lists strictly upper entries (i, j, value); omitted
    /// entries are zero.  The diagonal is fixed at one.
    pub fn new(
        lambda0: f64,
        valency: f64,
        rank: usize,
        mu_entries: &[(usize, usize, C64)],
        trunc: usize,
    ) -> Result<Self> {
        if !(lambda0 > 0.0) || !lambda0.is_finite() {
            return Err(Error::Domain(format!("lambda0 must be positive, got {lambda0}")));
        }
        if !(valency >= 0.0) || !valency.is_finite() {
            return Err(Error::Domain(format!("valency must be nonnegative, got {valency}")));
        }
        if rank < 1 {
            return Err(Error::Argument("rank must be at least 1".into()));
        }
        if trunc < 2 {
            return Err(Error::Argument("truncation must be at least 2".into()));
        }
        let mut mu = vec![C64::new(0.0, 0.0); rank * rank];
        for i in 0..rank {
            mu[i * rank + i] = C64::new(1.0, 0.0);
        }
        for &(i, j, v) in mu_entries {
            if i >= j || j >= rank {
                return Err(Error::Argument(format!(
                    "mu entry ({i},{j}) must satisfy i < j < rank"
                )));
            }
            mu[i * rank + j] = v;
        }
        Ok(ModelSpec {
            lambda0,
            valency,
            rank,
            mu,
            trunc,
        })
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn valency(&self) -> f64 {
        self.valency
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn trunc(&self) -> usize {
        self.trunc
    }

    /// Weight of the i-th atom: lambda0 + i * valency.
    pub fn lambda(&self, i: usize) -> f64 {
        self.lambda0 + i as f64 * self.valency
    }

    pub fn mu(&self, i: usize, j: usize) -> C64 {
        self.mu[i * self.rank + j]
    }

    pub fn mu_table(&self) -> &[C64] {
        &self.mu
    }

    pub fn with_trunc(&self, trunc: usize) -> Self {
        let mut s = self.clone();
        s.trunc = trunc;
        s
    }

    /// Same model with all off-diagonal coefficients removed.
    pub fn diagonal_part(&self) -> Self {
        let mut s = self.clone();
        for i in 0..self.rank {
            for j in 0..self.rank {
                if i != j {
                    s.mu[i * self.rank + j] = C64::new(0.0, 0.0);
                }
            }
        }
        s
    }

    pub fn coefficients(&self) -> CoefficientTable {
        CoefficientTable::from_mu(self.rank, &self.mu)
    }
}

/// The paired coefficient tables: frame coefficients mu and operator
/// coefficients m, linked by the triangular recursion in both directions.
#[derive(Debug, Clone)]
pub struct CoefficientTable {
    rank: usize,
    mu: Vec<C64>,
    m: Vec<C64>,
}

impl CoefficientTable {
    pub fn from_mu(rank: usize, mu: &[C64]) -> Self {
        let m = mu_to_m_inner(rank, mu);
        CoefficientTable {
            rank,
            mu: mu.to_vec(),
            m,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn mu(&self, i: usize, j: usize) -> C64 {
        self.mu[i * self.rank + j]
    }

    pub fn m(&self, i: usize, j: usize) -> C64 {
        self.m[i * self.rank + j]
    }

    pub fn m_table(&self) -> &[C64] {
        &self.m
    }

    /// Largest round-trip defect of the two recursions.
    pub fn roundtrip_defect(&self) -> f64 {
        let mu_back = m_to_mu_inner(self.rank, &self.m);
        self.mu
            .iter()
            .zip(&mu_back)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

fn check_unit_diagonal(rank: usize, mu: &[C64]) -> Result<()> {
    for i in 0..rank {
        if (mu[i * rank + i] - C64::new(1.0, 0.0)).norm() > 1e-14 {
            return Err(Error::Argument(format!(
                "mu must have a unit diagonal, entry ({i},{i}) = {}",
                mu[i * rank + i]
            )));
        }
    }
    Ok(())
}

fn mu_to_m_inner(rank: usize, mu: &[C64]) -> Vec<C64> {
    let mut m = vec![C64::new(0.0, 0.0); rank * rank];
    // increasing distance j - k; m_{k,k+1} = -mu_{k,k+1}
    for dist in 1..rank {
        for k in 0..rank - dist {
            let j = k + dist;
            let mut s = mu[k * rank + j] * (dist as f64);
            for l in 1..dist {
                s += mu[(k + l) * rank + j] * m[k * rank + (k + l)];
            }
            m[k * rank + j] = -s; // mu_{j,j} = 1
        }
    }
    m
}

fn m_to_mu_inner(rank: usize, m: &[C64]) -> Vec<C64> {
    let mut mu = vec![C64::new(0.0, 0.0); rank * rank];
    for i in 0..rank {
        mu[i * rank + i] = C64::new(1.0, 0.0);
    }
    // adjacent seed mu_{j-1,j} = -m_{j-1,j}, then the inverse recursion by
    // increasing distance, dividing by (j - k)
    for dist in 1..rank {
        for k in 0..rank - dist {
            let j = k + dist;
            let mut s = m[k * rank + j];
            for l in 1..dist {
                s += m[k * rank + (k + l)] * mu[(k + l) * rank + j];
            }
            mu[k * rank + j] = -s / (dist as f64);
        }
    }
    mu
}

/// Build a model from operator coefficients: the frame table is recovered
/// through the inverse recursion.  Convenient for probes that prescribe the
/// block couplings directly.
pub fn spec_from_m(
    lambda0: f64,
    valency: f64,
    rank: usize,
    m_entries: &[(usize, usize, C64)],
    trunc: usize,
) -> Result<ModelSpec> {
    let mut m = vec![C64::new(0.0, 0.0); rank * rank];
    for &(i, j, v) in m_entries {
        if i >= j || j >= rank {
            return Err(Error::Argument(format!(
                "m entry ({i},{j}) must satisfy i < j < rank"
            )));
        }
        m[i * rank + j] = v;
    }
    let mu = m_to_mu_inner(rank, &m);
    let mut entries = Vec::new();
    for i in 0..rank {
        for j in i + 1..rank {
            entries.push((i, j, mu[i * rank + j]));
        }
    }
    ModelSpec::new(lambda0, valency, rank, &entries, trunc)
}

/// Operator coefficients m from frame coefficients mu (unit diagonal
/// required).  Returns a strictly upper-triangular table.
pub fn mu_to_m(rank: usize, mu: &[C64]) -> Result<Vec<C64>> {
    if mu.len() != rank * rank {
        return Err(Error::Argument("mu table has the wrong size".into()));
    }
    check_unit_diagonal(rank, mu)?;
    Ok(mu_to_m_inner(rank, mu))
}

/// Frame coefficients mu (unit diagonal) from operator coefficients m; the
/// inverse of [`mu_to_m`].
pub fn m_to_mu(rank: usize, m: &[C64]) -> Result<Vec<C64>> {
    if m.len() != rank * rank {
        return Err(Error::Argument("m table has the wrong size".into()));
    }
    Ok(m_to_mu_inner(rank, m))
}

/// Classification tag of an upper-triangular position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryTag {
    Diagonal,
    BoundedNonzero,
    ForcedZero,
}

impl EntryTag {
    pub fn label(&self) -> &'static str {
        match self {
            EntryTag::Diagonal => "diagonal",
            EntryTag::BoundedNonzero => "bounded-nonzero",
            EntryTag::ForcedZero => "forced-zero",
        }
    }
}

/// Which clause of the boundedness lemma the valency falls under.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ValencyRegime {
    /// valency >= 2: no obstruction at any distance.
    AtLeastTwo,
    /// valency in [1 + (n-3)/(n-1), 2): bounded with every position free.
    FullWindow,
    /// 1 <= valency < 1 + (n-3)/(n-1): positions at distance > max_dist
    /// must vanish.
    PartialWindow { max_dist: usize },
    /// valency < 1: only adjacent positions survive.
    BelowOne,
}

impl std::fmt::Display for ValencyRegime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ValencyRegime::AtLeastTwo => write!(f, "valency>=2"),
            ValencyRegime::FullWindow => write!(f, "bounded-full-window"),
            ValencyRegime::PartialWindow { max_dist } => {
                write!(f, "partial-window(max_dist={max_dist})")
            }
            ValencyRegime::BelowOne => write!(f, "below-one"),
        }
    }
}

/// Per-position verdict of the boundedness lemma for a model.
#[derive(Debug, Clone)]
pub struct BoundednessVerdict {
    rank: usize,
    tags: Vec<EntryTag>,
    pub regime: ValencyRegime,
}

impl BoundednessVerdict {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn tag(&self, i: usize, j: usize) -> EntryTag {
        self.tags[i * self.rank + j]
    }

    pub fn forced_zeros(&self) -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        for i in 0..self.rank {
            for j in i + 1..self.rank {
                if self.tag(i, j) == EntryTag::ForcedZero {
                    v.push((i, j));
                }
            }
        }
        v
    }
}

/// A position (i, j), i < j, is allowed to carry a nonzero coefficient iff
/// lambda_j - lambda_i >= 2(j - i) - 2 (non-strict at the boundary).
pub fn position_allowed(valency: f64, dist: usize) -> bool {
    let d = dist as f64;
    valency * d >= 2.0 * d - 2.0 - 1e-9
}

/// Tag every upper-triangular position of the model and name the valency
/// regime.
pub fn classify_boundedness(spec: &ModelSpec) -> BoundednessVerdict {
    let n = spec.rank();
    let mut tags = vec![EntryTag::Diagonal; n * n];
    for i in 0..n {
        for j in i + 1..n {
            tags[i * n + j] = if position_allowed(spec.valency(), j - i) {
                EntryTag::BoundedNonzero
            } else {
                EntryTag::ForcedZero
            };
        }
    }
    let v = spec.valency();
    let regime = if v >= 2.0 {
        ValencyRegime::AtLeastTwo
    } else if v < 1.0 {
        ValencyRegime::BelowOne
    } else {
        // largest distance d with v*d >= 2d-2, i.e. d <= 2/(2-v)
        let max_dist = (2.0 / (2.0 - v) + 1e-9).floor() as usize;
        if max_dist + 1 >= n {
            ValencyRegime::FullWindow
        } else {
            ValencyRegime::PartialWindow { max_dist }
        }
    };
    BoundednessVerdict {
        rank: n,
        tags,
        regime,
    }
}

/// The assembled model: the block operator together with its coefficient
/// table and per-block views.
#[derive(Debug, Clone)]
pub struct AssembledModel {
    pub spec: ModelSpec,
    pub coeffs: CoefficientTable,
    blocks: BlockMatrix,
}

impl AssembledModel {
    pub fn blocks(&self) -> &BlockMatrix {
        &self.blocks
    }

    pub fn block(&self, i: usize, j: usize) -> Option<&BandMatrix> {
        self.blocks.block(i, j)
    }

    /// Flatten to the (rank * trunc)-dimensional operator.
    pub fn operator(&self) -> Result<TruncatedOperator> {
        TruncatedOperator::new(
            self.blocks.to_band(),
            OperatorSource::Assembled {
                rank: self.spec.rank(),
                block_dim: self.spec.trunc(),
            },
        )
    }
}

/// Build the block matrix of a model: atoms on the diagonal, scaled
/// connectors above it.  A nonzero coefficient on a forced-zero position is
/// an error, not a silent zero.
pub fn assemble(spec: &ModelSpec) -> Result<AssembledModel> {
    let n = spec.rank();
    let nt = spec.trunc();
    let coeffs = spec.coefficients();
    let verdict = classify_boundedness(spec);
    let scale = coeffs
        .m_table()
        .iter()
        .map(|x| x.norm())
        .fold(0.0, f64::max)
        .max(1.0);
    let mut blocks = BlockMatrix::zeros(n, nt);
    for i in 0..n {
        blocks.set_block(i, i, build_atom(spec.lambda(i), nt)?.matrix().clone());
        for j in i + 1..n {
            let m_ij = coeffs.m(i, j);
            if m_ij.norm() <= ZERO_DUST * scale {
                continue;
            }
            if verdict.tag(i, j) == EntryTag::ForcedZero {
                return Err(Error::UnboundedEntry(i, j));
            }
            let conn = build_connector(spec.lambda(i), spec.lambda(j), j - i - 1, nt)?;
            blocks.set_block(i, j, conn.matrix().scale(m_ij));
        }
    }
    Ok(AssembledModel {
        spec: spec.clone(),
        coeffs,
        blocks,
    })
}

/// Interior-window Frobenius residual of one adjacent intertwining relation
/// T_i S - S T_j = 0.
pub fn adjacent_intertwining_residual(
    t_i: &BandMatrix,
    s: &BandMatrix,
    t_j: &BandMatrix,
    window: usize,
) -> f64 {
    t_i.matmul(s).sub(&s.matmul(t_j)).frobenius_window(window)
}

/// Max over i of the interior residual of T_i S_{i,i+1} = S_{i,i+1} T_{i+1}.
pub fn check_intertwining(spec: &ModelSpec) -> Result<f64> {
    let model = assemble(spec)?;
    let nt = spec.trunc();
    let window = nt.saturating_sub(4);
    let mut worst = 0.0_f64;
    for i in 0..spec.rank().saturating_sub(1) {
        if let Some(s) = model.block(i, i + 1) {
            let t_i = model.block(i, i).unwrap();
            let t_j = model.block(i + 1, i + 1).unwrap();
            worst = worst.max(adjacent_intertwining_residual(t_i, s, t_j, window));
        }
    }
    Ok(worst)
}

/// Stacked frame vector gamma_j(w) = sum_{i <= j} mu_{i,j} t_i^{(j-i)}(w)
/// in the direct-sum coordinates of the assembled model.
pub fn frame_vector(spec: &ModelSpec, j: usize, w: C64) -> Result<Vec<C64>> {
    let n = spec.rank();
    let nt = spec.trunc();
    if j >= n {
        return Err(Error::Argument(format!("frame index {j} out of range")));
    }
    let mut out = vec![C64::new(0.0, 0.0); n * nt];
    for i in 0..=j {
        let mu = spec.mu(i, j);
        if mu.norm() == 0.0 {
            continue;
        }
        let sec = section(spec.lambda(i), w, (j - i) as u32, nt)?;
        for (slot, c) in out[i * nt..(i + 1) * nt].iter_mut().zip(&sec.coeffs) {
            *slot += mu * c;
        }
    }
    Ok(out)
}

/// Grammian entry <gamma_l, gamma_k> by truncated inner products.
pub fn frame_inner(spec: &ModelSpec, l: usize, k: usize, w: C64) -> Result<C64> {
    let gl = frame_vector(spec, l, w)?;
    let gk = frame_vector(spec, k, w)?;
    Ok(gl.iter().zip(&gk).map(|(a, b)| a * b.conj()).sum())
}

/// Result of the homogeneity detector.
#[derive(Debug, Clone)]
pub struct HomogeneityVerdict {
    pub homogeneous: bool,
    /// The positive constants (mu_0 = 1, mu_1, ...) when recovery succeeds.
    pub recovered: Option<Vec<f64>>,
}

/// Gamma factor of the homogeneous parametrization for a pair i <= j:
/// binom(j, i) / (lambda_i)_{j-i} at valency 2.
pub fn homogeneity_gamma(spec: &ModelSpec, i: usize, j: usize) -> f64 {
    binomial(j as u64, i as u64) / pochhammer(spec.lambda(i), (j - i) as u32)
}

/// Decide whether the model sits on the homogeneous family: valency 2 and
/// mu_{i,j} = Gamma_{i,j} mu_j / mu_i for positive constants mu_i, mu_0 = 1.
pub fn is_homogeneous(spec: &ModelSpec, tol: f64) -> HomogeneityVerdict {
    let none = HomogeneityVerdict {
        homogeneous: false,
        recovered: None,
    };
    if (spec.valency() - 2.0).abs() > 1e-12 || spec.rank() < 2 {
        return none;
    }
    let n = spec.rank();
    // recover the constants from the adjacent entries
    let mut mu_const = vec![1.0_f64; n];
    for i in 0..n - 1 {
        let gamma = homogeneity_gamma(spec, i, i + 1);
        let ratio = spec.mu(i, i + 1) / gamma; // mu_{i+1} / mu_i
        if ratio.re <= 0.0 || ratio.im.abs() > tol * ratio.re.abs().max(1.0) {
            return none;
        }
        mu_const[i + 1] = mu_const[i] * ratio.re;
    }
    // verify every equation
    for i in 0..n {
        for j in i + 1..n {
            let expect = homogeneity_gamma(spec, i, j) * mu_const[j] / mu_const[i];
            if (spec.mu(i, j) - C64::new(expect, 0.0)).norm() > tol * expect.abs().max(1.0) {
                return none;
            }
        }
    }
    HomogeneityVerdict {
        homogeneous: true,
        recovered: Some(mu_const),
    }
}

/// Mu entries of the homogeneous model at valency 2 with the given positive
/// constants (generator side of the detector).
pub fn homogeneous_mu_entries(
    lambda0: f64,
    rank: usize,
    mu_const: &[f64],
) -> Vec<(usize, usize, C64)> {
    assert_eq!(mu_const.len(), rank);
    let mut entries = Vec::new();
    for i in 0..rank {
        for j in i + 1..rank {
            let gamma = binomial(j as u64, i as u64)
                / pochhammer(lambda0 + 2.0 * i as f64, (j - i) as u32);
            entries.push((i, j, C64::new(gamma * mu_const[j] / mu_const[i], 0.0)));
        }
    }
    entries
}
