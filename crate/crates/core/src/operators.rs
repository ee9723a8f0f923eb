//! Named qutrit operators and the local sums built from them.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use crate::error::{Error, Result};
use crate::tensor::{
    c64, herm_fn, identity, kron, kron_all, CMatrix, SiteOperator, C64,
};

/// Upper end of the maximal-slice angle domain, `arctan(sqrt 2)`.
pub fn alpha_max() -> f64 {
    SQRT_2.atan()
}

fn real_matrix(rows: [[f64; 3]; 3]) -> CMatrix {
    CMatrix::from_fn(3, 3, |i, j| c64(rows[i][j], 0.0))
}

/// Spin-1 z operator `|0><0| - |2><2|`.
pub fn spin_z() -> CMatrix {
    real_matrix([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, -1.0]])
}

/// `Z^2 = |0><0| + |2><2|`.
pub fn spin_z_squared() -> CMatrix {
    real_matrix([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
}

/// Gell-Mann matrix `k` in `1..=8`, with `tr(l_j l_k) = 2 delta_jk`.
///
/// The pair (0,2) carries `l_4`, `l_5` and `l_3 = |0><0| - |1><1|`.
pub fn gell_mann(k: usize) -> Result<CMatrix> {
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let mut m = CMatrix::from_element(3, 3, z);
    match k {
        1 => {
            m[(0, 1)] = one;
            m[(1, 0)] = one;
        }
        2 => {
            m[(0, 1)] = -i;
            m[(1, 0)] = i;
        }
        3 => {
            m[(0, 0)] = one;
            m[(1, 1)] = -one;
        }
        4 => {
            m[(0, 2)] = one;
            m[(2, 0)] = one;
        }
        5 => {
            m[(0, 2)] = -i;
            m[(2, 0)] = i;
        }
        6 => {
            m[(1, 2)] = one;
            m[(2, 1)] = one;
        }
        7 => {
            m[(1, 2)] = -i;
            m[(2, 1)] = i;
        }
        8 => {
            let s = 1.0 / 3f64.sqrt();
            m[(0, 0)] = C64::new(s, 0.0);
            m[(1, 1)] = C64::new(s, 0.0);
            m[(2, 2)] = C64::new(-2.0 * s, 0.0);
        }
        _ => return Err(Error::OutOfRange(format!("Gell-Mann index {k} not in 1..=8"))),
    }
    Ok(m)
}

/// Cyclic shift `X = |0><1| + |1><2| + |2><0|`, so `X^2 = X†` and `X^3 = 1`.
pub fn shift_x() -> CMatrix {
    real_matrix([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
}

/// `X + X†`.
pub fn shift_x_hermitian() -> CMatrix {
    let x = shift_x();
    &x + x.adjoint()
}

/// Single-site rotation `M = cos(a) + sin(a) (X + X†)/sqrt(2)`.
pub fn ms_rotation(alpha: f64) -> CMatrix {
    identity(3).scale(alpha.cos()) + shift_x_hermitian().scale(alpha.sin() * FRAC_1_SQRT_2)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= alpha_max() + 1e-12) {
        return Err(Error::OutOfRange(format!(
            "alpha = {alpha} not in (0, arctan(sqrt 2)]"
        )));
    }
    Ok(())
}

fn check_pair(i: usize, j: usize) -> Result<()> {
    if i == j {
        return Err(Error::InvalidSites(format!("pair operator needs distinct sites, got {i} twice")));
    }
    Ok(())
}

fn check_split(sites: usize, split: usize) -> Result<()> {
    if sites < 2 || split < 1 || split >= sites {
        return Err(Error::OutOfRange(format!(
            "split m = {split} needs 1 <= m <= n-1 with n = {sites}"
        )));
    }
    Ok(())
}

/// Pair projector onto `|00>, |11>, |22>`, evaluated as
/// `(2/3)[1/2 + cos(2 pi/3 (Z_i - Z_j))]` on the spectrum of `Z_i - Z_j`.
pub fn q_pair(i: usize, j: usize) -> Result<SiteOperator> {
    check_pair(i, j)?;
    let z = spin_z();
    let diff = kron(&z, &identity(3)) - kron(&identity(3), &z);
    let q = herm_fn(&diff, |d| (2.0 / 3.0) * (0.5 + (2.0 * PI / 3.0 * d).cos()))?;
    SiteOperator::new(vec![i, j], q)
}

/// `P_ij = (2 Z_i^2 - 1) l3_j`.
pub fn p_pair(i: usize, j: usize) -> Result<SiteOperator> {
    check_pair(i, j)?;
    let parity = spin_z_squared().scale(2.0) - identity(3);
    SiteOperator::new(vec![i, j], kron(&parity, &gell_mann(3)?))
}

/// A Hermitian operator kept as its local terms plus the embedded total.
#[derive(Debug, Clone)]
pub struct OperatorSum {
    sites: usize,
    terms: Vec<SiteOperator>,
    total: CMatrix,
}

impl OperatorSum {
    pub fn new(sites: usize, terms: Vec<SiteOperator>) -> Result<Self> {
        let d = 3usize.pow(sites as u32);
        let mut total = CMatrix::zeros(d, d);
        for t in &terms {
            total += t.embed(sites)?;
        }
        Ok(Self {
            sites,
            terms,
            total,
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn terms(&self) -> &[SiteOperator] {
        &self.terms
    }

    pub fn total(&self) -> &CMatrix {
        &self.total
    }

    /// Largest support among the terms.
    pub fn locality(&self) -> usize {
        self.terms.iter().map(|t| t.support().len()).max().unwrap_or(0)
    }

    pub fn plus(&self, other: &OperatorSum) -> Result<OperatorSum> {
        if self.sites != other.sites {
            return Err(Error::DimensionMismatch(self.sites, other.sites));
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(Self {
            sites: self.sites,
            terms,
            total: &self.total + &other.total,
        })
    }

    pub fn scaled(&self, factor: f64) -> OperatorSum {
        Self {
            sites: self.sites,
            terms: self.terms.iter().map(|t| t.scaled(factor)).collect(),
            total: self.total.scale(factor),
        }
    }
}

/// `Omega = sum_{j<m} P_{m,j} + sum_{l>m} Q_{m,l}` for sites `0..n`.
///
/// The anchor is site `m` (zero-indexed), the first site of the tail block.
pub fn omega(sites: usize, split: usize) -> Result<OperatorSum> {
    check_split(sites, split)?;
    let mut terms = Vec::with_capacity(sites - 1);
    for j in 0..split {
        terms.push(p_pair(split, j)?);
    }
    for l in split + 1..sites {
        terms.push(q_pair(split, l)?);
    }
    OperatorSum::new(sites, terms)
}

/// Pauli-like strings on the tail block `m..n` acting on span{|0̄>, |2̄>}.
pub fn sigma_pauli(axis: usize, sites: usize, split: usize) -> Result<SiteOperator> {
    check_split(sites, split)?;
    let tail: Vec<usize> = (split..sites).collect();
    let rest = tail.len() - 1;
    let l4 = gell_mann(4)?;
    let (first, others) = match axis {
        1 => (l4.clone(), l4),
        2 => (gell_mann(5)?, l4),
        3 => (spin_z(), spin_z_squared()),
        _ => return Err(Error::OutOfRange(format!("Pauli axis {axis} not in 1..=3"))),
    };
    let mut factors = vec![first];
    factors.extend(std::iter::repeat_n(others, rest));
    SiteOperator::new(tail, kron_all(&factors))
}

/// `cos(xi) S3 + sin(xi) cos(zeta) S1 + sin(xi) sin(zeta) S2`.
pub fn sigma_r(xi: f64, zeta: f64, sites: usize, split: usize) -> Result<SiteOperator> {
    let s1 = sigma_pauli(1, sites, split)?;
    let s2 = sigma_pauli(2, sites, split)?;
    let s3 = sigma_pauli(3, sites, split)?;
    let m = s3.matrix().scale(xi.cos())
        + s1.matrix().scale(xi.sin() * zeta.cos())
        + s2.matrix().scale(xi.sin() * zeta.sin());
    SiteOperator::new(s1.support().to_vec(), m)
}

/// `R_01 = M_0 Q_01 M_0`, a rotated pair projector on sites 0 and 1.
pub fn r_pair(alpha: f64) -> Result<SiteOperator> {
    check_alpha(alpha)?;
    let m = kron(&ms_rotation(alpha), &identity(3));
    let q = q_pair(0, 1)?;
    SiteOperator::new(vec![0, 1], &m * q.matrix() * &m)
}

/// `sum_{j != anchor, j not in {0}} Q_{anchor, j}`: pair projectors from
/// the anchor to every site other than itself and site 0.
///
/// With the default anchor 1 this is the `Q` of the maximal-slice
/// construction, whose top eigenspace is spanned by `|i> (x) |j j ... j>`.
pub fn q_string(sites: usize, anchor: usize) -> Result<OperatorSum> {
    if sites < 3 {
        return Err(Error::OutOfRange(format!("Q string needs n >= 3, got {sites}")));
    }
    if anchor == 0 || anchor >= sites {
        return Err(Error::InvalidSites(format!(
            "anchor {anchor} must lie in 1..{sites}"
        )));
    }
    let terms = (1..sites)
        .filter(|&j| j != anchor)
        .map(|j| q_pair(anchor, j))
        .collect::<Result<Vec<_>>>()?;
    OperatorSum::new(sites, terms)
}

/// The angle `beta` in `(0, pi)` with `cot(beta) = sqrt(2)(cot a - tan a) + 1`.
pub fn ms_beta(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let cot = SQRT_2 * (1.0 / alpha.tan() - alpha.tan()) + 1.0;
    Ok(1f64.atan2(cot))
}

/// The commuting pair `Q` and `X` whose sum has the maximal-slice state as
/// its unique top eigenvector.
#[derive(Debug, Clone)]
pub struct MsGenerator {
    pub q: OperatorSum,
    pub x: OperatorSum,
    pub beta: f64,
}

impl MsGenerator {
    pub fn total(&self) -> Result<OperatorSum> {
        self.q.plus(&self.x)
    }
}

pub fn ms_generator(sites: usize, alpha: f64) -> Result<MsGenerator> {
    if sites < 3 {
        return Err(Error::OutOfRange(format!("MS generator needs n >= 3, got {sites}")));
    }
    let beta = ms_beta(alpha)?;
    let q = q_string(sites, 1)?;
    let tail: Vec<usize> = (1..sites).collect();
    let x = shift_x();
    let string = kron_all(&vec![x; tail.len()]);
    let string_h = &string + string.adjoint();
    let half_sin = 0.5 * beta.sin();
    let terms = vec![
        q_pair(0, 1)?.scaled(beta.cos()),
        SiteOperator::single(0, shift_x_hermitian().scale(half_sin))?,
        SiteOperator::new(tail, string_h.scale(half_sin))?,
    ];
    Ok(MsGenerator {
        q,
        x: OperatorSum::new(sites, terms)?,
        beta,
    })
}

/// Tags for every named operator, carrying the parameters each needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorName {
    Z { site: usize },
    Lambda3 { site: usize },
    Lambda4 { site: usize },
    Lambda5 { site: usize },
    /// `X + X†` on one site (the shift itself is not Hermitian).
    ShiftX { site: usize },
    Qpair { i: usize, j: usize },
    Ppair { i: usize, j: usize },
    Omega { split: usize },
    SigmaPauli { axis: usize, split: usize },
    SigmaR { xi: f64, zeta: f64, split: usize },
    Rpair { alpha: f64 },
    MsGenerator { alpha: f64 },
    QString { anchor: usize },
}

impl OperatorName {
    /// Builds the operator on `sites` qutrits.
    pub fn build(&self, sites: usize) -> Result<OperatorSum> {
        let single = |site: usize, m: CMatrix| -> Result<OperatorSum> {
            OperatorSum::new(sites, vec![SiteOperator::single(site, m)?])
        };
        match *self {
            OperatorName::Z { site } => single(site, spin_z()),
            OperatorName::Lambda3 { site } => single(site, gell_mann(3)?),
            OperatorName::Lambda4 { site } => single(site, gell_mann(4)?),
            OperatorName::Lambda5 { site } => single(site, gell_mann(5)?),
            OperatorName::ShiftX { site } => single(site, shift_x_hermitian()),
            OperatorName::Qpair { i, j } => OperatorSum::new(sites, vec![q_pair(i, j)?]),
            OperatorName::Ppair { i, j } => OperatorSum::new(sites, vec![p_pair(i, j)?]),
            OperatorName::Omega { split } => omega(sites, split),
            OperatorName::SigmaPauli { axis, split } => {
                OperatorSum::new(sites, vec![sigma_pauli(axis, sites, split)?])
            }
            OperatorName::SigmaR { xi, zeta, split } => {
                OperatorSum::new(sites, vec![sigma_r(xi, zeta, sites, split)?])
            }
            OperatorName::Rpair { alpha } => OperatorSum::new(sites, vec![r_pair(alpha)?]),
            OperatorName::MsGenerator { alpha } => ms_generator(sites, alpha)?.total(),
            OperatorName::QString { anchor } => q_string(sites, anchor),
        }
    }
}
