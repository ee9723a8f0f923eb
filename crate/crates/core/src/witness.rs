//! Projector witnesses for GHZ-like pure states and top-eigenvector
//! certificates for local Hamiltonians.
//!
//! If `|ψ> = P1|ψ> + P2|ψ>` with `P1`, `P2` products of site-wise orthogonal
//! projectors, no operator acting on fewer than `n` sites can couple the two
//! branches, so `|ψ'> = P1|ψ> - P2|ψ>` has the same expectation for every
//! such operator and `|ψ>` can never be its unique top eigenvector.

use rand::rngs::StdRng;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::maxent::combinations;
use crate::operators::OperatorSum;
use crate::tensor::{
    eigh, embed_matrix, kron_all, max_abs, qutrit_dim, random_hermitian, sites_for_dim,
    CMatrix, CVector, DensityMatrix, C64, QUTRIT,
};

const ORTHOGONALITY_TOL: f64 = 1e-12;
const BRANCH_MIN_NORM: f64 = 1e-8;
const DECOMPOSITION_TOL: f64 = 1e-10;

/// Two product projectors, one factor per site.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorPair {
    pub p1: Vec<CMatrix>,
    pub p2: Vec<CMatrix>,
}

fn basis_projector(levels: &[usize]) -> CMatrix {
    let mut m = CMatrix::zeros(QUTRIT, QUTRIT);
    for &l in levels {
        m[(l, l)] = C64::new(1.0, 0.0);
    }
    m
}

impl ProjectorPair {
    pub fn new(p1: Vec<CMatrix>, p2: Vec<CMatrix>) -> Result<Self> {
        if p1.len() != p2.len() || p1.is_empty() {
            return Err(Error::Input(format!(
                "projector lists have lengths {} and {}",
                p1.len(),
                p2.len()
            )));
        }
        for (j, (a, b)) in p1.iter().zip(&p2).enumerate() {
            for p in [a, b] {
                if p.shape() != (QUTRIT, QUTRIT) || max_abs(&(p * p - p)) > ORTHOGONALITY_TOL {
                    return Err(Error::Input(format!("site {j}: factor is not a projector")));
                }
            }
            let overlap = max_abs(&(a * b));
            if overlap > ORTHOGONALITY_TOL {
                return Err(Error::Input(format!(
                    "site {j}: projectors overlap ({overlap:e})"
                )));
            }
        }
        Ok(Self { p1, p2 })
    }

    /// `|0><0|` against `|1><1| + |2><2|` on every site.
    pub fn ghz1(sites: usize) -> Self {
        Self::split_on(&vec![0; sites])
    }

    /// `|1><1|` against its complement on every site.
    pub fn ghz2(sites: usize) -> Self {
        Self::split_on(&vec![1; sites])
    }

    /// Site `j` splits basis level `levels[j]` from the other two.
    pub fn split_on(levels: &[usize]) -> Self {
        let (p1, p2) = levels
            .iter()
            .map(|&l| {
                let rest: Vec<usize> = (0..QUTRIT).filter(|&x| x != l).collect();
                (basis_projector(&[l]), basis_projector(&rest))
            })
            .unzip();
        Self { p1, p2 }
    }

    pub fn sites(&self) -> usize {
        self.p1.len()
    }

    pub fn full(&self) -> (CMatrix, CMatrix) {
        (kron_all(self.p1.iter()), kron_all(self.p2.iter()))
    }

    /// The two branches `P1|ψ>`, `P2|ψ>` after checking the decomposition.
    fn branches(&self, psi: &CVector) -> Result<(CVector, CVector)> {
        let d = qutrit_dim(self.sites());
        if psi.len() != d {
            return Err(Error::DimensionMismatch(psi.len(), d));
        }
        let (p1, p2) = self.full();
        let (a, b) = (&p1 * psi, &p2 * psi);
        let residual = max_abs(&(psi - &a - &b));
        if residual > DECOMPOSITION_TOL {
            return Err(Error::Precondition(format!(
                "state is not P1 psi + P2 psi (residual {residual:e})"
            )));
        }
        let (na, nb) = (a.norm(), b.norm());
        if na <= BRANCH_MIN_NORM || nb <= BRANCH_MIN_NORM {
            return Err(Error::Precondition(format!(
                "a branch is empty (norms {na:e}, {nb:e})"
            )));
        }
        Ok((a, b))
    }
}

/// Normalized `P1|ψ> - P2|ψ>`.
pub fn flip_state(psi: &CVector, pair: &ProjectorPair) -> Result<CVector> {
    let (a, b) = pair.branches(psi)?;
    let flipped = a - b;
    let norm = flipped.norm();
    Ok(flipped.unscale(norm))
}

/// First basis-aligned pair that decomposes `psi` into two nonempty
/// branches, trying each level on each site and both orientations.
pub fn search_projector_pair(psi: &CVector) -> Option<ProjectorPair> {
    let n = sites_for_dim(psi.len())?;
    // per site: which level is isolated and whether it goes to P1 or P2;
    // site 0 keeps orientation fixed since swapping P1, P2 globally is moot
    let choices = 3 * 6usize.pow(n as u32 - 1);
    (0..choices).find_map(|code| {
        let mut rest = code;
        let mut p1 = Vec::with_capacity(n);
        let mut p2 = Vec::with_capacity(n);
        for site in 0..n {
            let options = if site == 0 { 3 } else { 6 };
            let c = rest % options;
            rest /= options;
            let level = c % 3;
            let others: Vec<usize> = (0..QUTRIT).filter(|&x| x != level).collect();
            let (one, rest_proj) = (basis_projector(&[level]), basis_projector(&others));
            if c < 3 {
                p1.push(one);
                p2.push(rest_proj);
            } else {
                p1.push(rest_proj);
                p2.push(one);
            }
        }
        let pair = ProjectorPair { p1, p2 };
        pair.branches(psi).ok().map(|_| pair)
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessReport {
    pub sites: usize,
    pub samples: usize,
    pub seed: u64,
    /// `max |<ψ|Q|ψ> - <ψ'|Q|ψ'>|` over the samples.
    pub max_deviation: f64,
    /// `|<ψ|ψ'>|`, below one for a genuine flip.
    pub overlap: f64,
}

/// Random sum of one Hermitian term per `(n-1)`-site subset.
pub fn random_local_sum(sites: usize, seed: u64) -> Result<CMatrix> {
    let mut rng = StdRng::seed_from_u64(seed);
    let d = qutrit_dim(sites);
    let mut total = CMatrix::zeros(d, d);
    for support in combinations(sites, sites - 1) {
        let h = random_hermitian(qutrit_dim(sites - 1), &mut rng);
        total += embed_matrix(&h, &support, sites)?;
    }
    Ok(total)
}

fn expectation(q: &CMatrix, psi: &CVector) -> f64 {
    (psi.adjoint() * q * psi)[(0, 0)].re
}

/// Compares `<ψ|Q|ψ>` with `<ψ'|Q|ψ'>` over seeded random `(n-1)`-local `Q`.
pub fn witness_expectation_test(
    psi: &CVector,
    pair: &ProjectorPair,
    samples: usize,
    seed: u64,
) -> Result<WitnessReport> {
    let n = pair.sites();
    if n < 2 {
        return Err(Error::OutOfRange("need at least two sites".into()));
    }
    let psi = psi.unscale(psi.norm());
    let flipped = flip_state(&psi, pair)?;
    let deviations: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let q = random_local_sum(n, seed.wrapping_add(i))?;
            Ok((expectation(&q, &psi) - expectation(&q, &flipped)).abs())
        })
        .collect::<Result<_>>()?;
    Ok(WitnessReport {
        sites: n,
        samples,
        seed,
        max_deviation: deviations.into_iter().fold(0.0, f64::max),
        overlap: psi.dotc(&flipped).norm(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct UemeCertificate {
    pub sites: usize,
    /// Largest term support in the operator.
    pub locality: usize,
    pub top_eigenvalue: f64,
    pub gap: f64,
    pub fidelity: f64,
    pub holds: bool,
}

pub const UEME_GAP_TOL: f64 = 1e-8;
pub const UEME_FIDELITY_TOL: f64 = 1e-8;

/// Checks that `psi` is the unique top eigenvector of an `(n-1)`-local sum.
pub fn ueme_check(op: &OperatorSum, psi: &CVector) -> Result<UemeCertificate> {
    let n = op.sites();
    if let Some(t) = op.terms().iter().find(|t| t.support().len() >= n) {
        return Err(Error::Precondition(format!(
            "term on sites {:?} acts on all {n} sites",
            t.support()
        )));
    }
    let d = qutrit_dim(n);
    if psi.len() != d {
        return Err(Error::DimensionMismatch(psi.len(), d));
    }
    let spec = eigh(op.total())?;
    let gap = spec.eigenvalues[0] - spec.eigenvalues.get(1).copied().unwrap_or(f64::NEG_INFINITY);
    let psi = psi.unscale(psi.norm());
    let fidelity = spec.top_vector().dotc(&psi).norm_sqr();
    Ok(UemeCertificate {
        sites: n,
        locality: op.locality(),
        top_eigenvalue: spec.eigenvalues[0],
        gap,
        fidelity,
        holds: gap > UEME_GAP_TOL && fidelity >= 1.0 - UEME_FIDELITY_TOL,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DegeneracyReport {
    pub top_eigenvalue: f64,
    pub state_value: f64,
    pub flipped_value: f64,
    /// Gap above the second eigenvalue; zero when the top is degenerate.
    pub gap: f64,
}

/// Builds `Q = sum_S Π_S`, with `Π_S` the support projector of the
/// `(n-1)`-site marginal of `psi` on `S`, so that `psi` is a top eigenvector,
/// and reports where `psi'` lands in its spectrum.
pub fn top_eigenspace_degeneracy(psi: &CVector, pair: &ProjectorPair) -> Result<DegeneracyReport> {
    let n = pair.sites();
    let psi = psi.unscale(psi.norm());
    let flipped = flip_state(&psi, pair)?;
    let rho = DensityMatrix::from_pure(&psi)?;
    let d = qutrit_dim(n);
    let mut q = CMatrix::zeros(d, d);
    for support in combinations(n, n - 1) {
        let marginal = rho.partial_trace(&support)?;
        let spec = eigh(marginal.matrix())?;
        let proj = spec.apply(|w| if w > 1e-12 { 1.0 } else { 0.0 });
        q += embed_matrix(&proj, &support, n)?;
    }
    let spec = eigh(&q)?;
    Ok(DegeneracyReport {
        top_eigenvalue: spec.eigenvalues[0],
        state_value: expectation(&q, &psi),
        flipped_value: expectation(&q, &flipped),
        gap: spec.eigenvalues[0] - spec.eigenvalues[1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{ghz1_pure_vector, ghz2_pure_vector, ms_vector};
    use crate::operators::{alpha_max, ms_generator, q_string};
    use crate::tensor::identity;

    #[test]
    fn natural_pairs_are_valid() {
        for n in 2..=4 {
            for pair in [ProjectorPair::ghz1(n), ProjectorPair::ghz2(n)] {
                assert!(ProjectorPair::new(pair.p1.clone(), pair.p2.clone()).is_ok());
            }
        }
        let bad = ProjectorPair::new(
            vec![basis_projector(&[0, 1])],
            vec![basis_projector(&[1, 2])],
        );
        assert!(bad.is_err());
    }

    #[test]
    fn ghz1_flip_negates_the_tail() {
        let psi = ghz1_pure_vector(3, 0.5, 0.4).unwrap();
        let f = flip_state(&psi, &ProjectorPair::ghz1(3)).unwrap();
        let head = psi[0];
        assert!((f[0] - head).norm() < 1e-15);
        for i in 1..psi.len() {
            assert!((f[i] + psi[i]).norm() < 1e-15);
        }
        assert!(psi.dotc(&f).norm() < 1.0);
    }

    #[test]
    fn ghz2_flip_negates_the_ones_branch() {
        let psi = ghz2_pure_vector(4, 1, 0.5, 0.4).unwrap();
        let f = flip_state(&psi, &ProjectorPair::ghz2(4)).unwrap();
        let ones = crate::tensor::index_of(&[1, 1, 1, 1]);
        assert!((f[ones] - psi[ones]).norm() < 1e-15);
        assert!((f[0] + psi[0]).norm() < 1e-15);
    }

    #[test]
    fn single_branch_state_is_rejected() {
        let psi = crate::tensor::repeated_ket(0, 3);
        assert!(matches!(
            flip_state(&psi, &ProjectorPair::ghz1(3)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn expectation_identity_on_ghz_families() {
        let psi = ghz1_pure_vector(3, 0.5, 0.4).unwrap();
        let r = witness_expectation_test(&psi, &ProjectorPair::ghz1(3), 20, 7).unwrap();
        assert!(r.max_deviation <= 1e-10);
        let psi = ghz2_pure_vector(4, 1, 0.5, 0.4).unwrap();
        let r = witness_expectation_test(&psi, &ProjectorPair::ghz2(4), 10, 7).unwrap();
        assert!(r.max_deviation <= 1e-10);
    }

    #[test]
    fn projector_search() {
        let psi = ghz1_pure_vector(3, 0.5, 0.4).unwrap();
        assert!(search_projector_pair(&psi).is_some());
        let psi = ghz2_pure_vector(4, 2, 0.5, 0.4).unwrap();
        assert!(search_projector_pair(&psi).is_some());
        for alpha in [0.3, 0.7, alpha_max()] {
            assert!(search_projector_pair(&ms_vector(3, alpha).unwrap()).is_none());
        }
    }

    #[test]
    fn ms_generator_certificates() {
        for (n, alpha) in [(3, 0.7), (4, alpha_max())] {
            let op = ms_generator(n, alpha).unwrap().total().unwrap();
            let c = ueme_check(&op, &ms_vector(n, alpha).unwrap()).unwrap();
            assert!(c.holds, "{c:?}");
        }
        let q = q_string(3, 1).unwrap();
        let c = ueme_check(&q, &ms_vector(3, 0.7).unwrap()).unwrap();
        assert!(!c.holds);
        let spec = eigh(q.total()).unwrap();
        let top = spec.eigenvalues[0];
        assert_eq!(spec.eigenvalues.iter().filter(|&&w| (w - top).abs() < 1e-9).count(), 9);
    }

    #[test]
    fn full_support_term_is_rejected() {
        let op = OperatorSum::new(
            2,
            vec![crate::tensor::SiteOperator::new(vec![0, 1], identity(9)).unwrap()],
        )
        .unwrap();
        assert!(ueme_check(&op, &crate::tensor::repeated_ket(0, 2)).is_err());
    }

    #[test]
    fn ghz_top_eigenspace_is_degenerate() {
        let psi = ghz1_pure_vector(3, 0.5, 0.4).unwrap();
        let r = top_eigenspace_degeneracy(&psi, &ProjectorPair::ghz1(3)).unwrap();
        assert!((r.state_value - r.top_eigenvalue).abs() < 1e-8);
        assert!((r.flipped_value - r.top_eigenvalue).abs() < 1e-8);
        assert!(r.gap <= 1e-8);
    }
}
