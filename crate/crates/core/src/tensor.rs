//! Dense linear algebra over tensor products of qutrit sites.
//!
//! Sites are zero-indexed and ordered big-endian: site 0 is the most
//! significant base-3 digit of a computational-basis index, so the basis
//! string `|d_0 d_1 ... d_{n-1}>` sits at index `sum_k d_k * 3^(n-1-k)`.

use nalgebra::{DMatrix, DVector, Dim, Matrix, RawStorage, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Local dimension of every site.
pub const QUTRIT: usize = 3;

/// Hermiticity tolerance; deviations below it are symmetrized away.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Eigenvalues below this contribute nothing to an entropy.
pub const ENTROPY_CUTOFF: f64 = 1e-12;

pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// `3^n`.
pub fn qutrit_dim(sites: usize) -> usize {
    QUTRIT.pow(sites as u32)
}

/// Inverse of [`qutrit_dim`], if `dim` is an exact power of three.
pub fn sites_for_dim(dim: usize) -> Option<usize> {
    let mut d = 1usize;
    for n in 0..40 {
        if d == dim {
            return Some(n);
        }
        d = d.checked_mul(QUTRIT)?;
    }
    None
}

pub fn max_abs<R: Dim, C: Dim, S: RawStorage<C64, R, C>>(m: &Matrix<C64, R, C, S>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff<R1, C1, S1, R2, C2, S2>(
    a: &Matrix<C64, R1, C1, S1>,
    b: &Matrix<C64, R2, C2, S2>,
) -> f64
where
    R1: Dim,
    C1: Dim,
    S1: RawStorage<C64, R1, C1>,
    R2: Dim,
    C2: Dim,
    S2: RawStorage<C64, R2, C2>,
{
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Max-abs deviation of `a` from its conjugate transpose.
pub fn hermitian_deviation(a: &CMatrix) -> f64 {
    let (r, c) = a.shape();
    let mut dev = 0.0f64;
    for i in 0..r {
        for j in i..c {
            dev = dev.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Returns `(a + a†)/2` if `a` is Hermitian within `tol`.
pub fn symmetrized(a: &CMatrix, tol: f64) -> Result<CMatrix> {
    let (r, c) = a.shape();
    if r != c {
        return Err(Error::NotSquare(r, c));
    }
    let dev = hermitian_deviation(a);
    if dev > tol {
        return Err(Error::NotHermitian(dev));
    }
    Ok((a + a.adjoint()).scale(0.5))
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Kronecker product of a list of factors, left to right.
pub fn kron_all<'a, I>(factors: I) -> CMatrix
where
    I: IntoIterator<Item = &'a CMatrix>,
{
    factors
        .into_iter()
        .fold(identity(1), |acc, f| acc.kronecker(f))
}

/// Base-3 digits of `index` over `sites` positions, most significant first.
pub fn digits(mut index: usize, sites: usize) -> Vec<usize> {
    let mut out = vec![0; sites];
    for k in (0..sites).rev() {
        out[k] = index % QUTRIT;
        index /= QUTRIT;
    }
    out
}

pub fn index_of(digits: &[usize]) -> usize {
    digits.iter().fold(0, |acc, &d| acc * QUTRIT + d)
}

/// Computational basis vector `|d_0 d_1 ...>`.
pub fn basis_ket(digits: &[usize]) -> CVector {
    let mut v = CVector::zeros(qutrit_dim(digits.len()));
    v[index_of(digits)] = c64(1.0, 0.0);
    v
}

/// `|i i ... i>` on `sites` qutrits.
pub fn repeated_ket(value: usize, sites: usize) -> CVector {
    basis_ket(&vec![value; sites])
}

pub fn outer(a: &CVector, b: &CVector) -> CMatrix {
    a * b.adjoint()
}

/// A Hermitian operator acting on an explicit set of sites.
///
/// The matrix is ordered by `support` as given: the first listed site is
/// the most significant digit of the local index.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteOperator {
    support: Vec<usize>,
    matrix: CMatrix,
}

impl SiteOperator {
    pub fn new(support: Vec<usize>, matrix: CMatrix) -> Result<Self> {
        let dim = qutrit_dim(support.len());
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch(matrix.nrows(), dim));
        }
        let mut seen = support.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != support.len() {
            return Err(Error::InvalidSites(format!("repeated site in {support:?}")));
        }
        let matrix = symmetrized(&matrix, HERMITIAN_TOL)?;
        Ok(Self { support, matrix })
    }

    pub fn single(site: usize, matrix: CMatrix) -> Result<Self> {
        Self::new(vec![site], matrix)
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            support: self.support.clone(),
            matrix: self.matrix.scale(factor),
        }
    }

    /// Embeds into the full `3^n` space, acting as identity elsewhere.
    pub fn embed(&self, sites: usize) -> Result<CMatrix> {
        embed_matrix(&self.matrix, &self.support, sites)
    }
}

/// Embeds an operator on `support` into `sites` qutrits.
pub fn embed_matrix(op: &CMatrix, support: &[usize], sites: usize) -> Result<CMatrix> {
    if let Some(&bad) = support.iter().find(|&&s| s >= sites) {
        return Err(Error::InvalidSites(format!(
            "site {bad} out of range for {sites} sites"
        )));
    }
    let k = support.len();
    let local = qutrit_dim(k);
    if op.nrows() != local || op.ncols() != local {
        return Err(Error::DimensionMismatch(op.nrows(), local));
    }
    let dim = qutrit_dim(sites);
    let weights: Vec<usize> = (0..sites).map(|s| qutrit_dim(sites - 1 - s)).collect();
    // offset contributed by each local index on the support sites
    let local_offset: Vec<usize> = (0..local)
        .map(|l| {
            digits(l, k)
                .iter()
                .zip(support)
                .map(|(&d, &s)| d * weights[s])
                .sum()
        })
        .collect();
    let mut out = CMatrix::zeros(dim, dim);
    for row in 0..dim {
        let row_digits = digits(row, sites);
        let local_row = index_of(&support.iter().map(|&s| row_digits[s]).collect::<Vec<_>>());
        let base = row - local_offset[local_row];
        for local_col in 0..local {
            let v = op[(local_row, local_col)];
            if v != C64::new(0.0, 0.0) {
                out[(row, base + local_offset[local_col])] = v;
            }
        }
    }
    Ok(out)
}

/// Partial trace over a tensor product with arbitrary local dimensions.
///
/// `keep` lists the retained sites; the result is ordered by ascending site.
pub fn partial_trace_dims(rho: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    let total: usize = dims.iter().product();
    if rho.nrows() != total || rho.ncols() != total {
        return Err(Error::DimensionMismatch(rho.nrows(), total));
    }
    if keep.is_empty() {
        return Err(Error::InvalidSites("keep set is empty".into()));
    }
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if keep_sorted.len() != keep.len() {
        return Err(Error::InvalidSites(format!("repeated site in {keep:?}")));
    }
    if let Some(&bad) = keep_sorted.iter().find(|&&s| s >= dims.len()) {
        return Err(Error::InvalidSites(format!(
            "site {bad} out of range for {} sites",
            dims.len()
        )));
    }
    let kept_dim: usize = keep_sorted.iter().map(|&s| dims[s]).product();
    let traced_dim = total / kept_dim;

    // full index -> (kept index, traced index)
    let mut groups: Vec<Vec<(usize, usize)>> = vec![Vec::with_capacity(kept_dim); traced_dim];
    let mut digit = vec![0usize; dims.len()];
    for full in 0..total {
        let (mut ki, mut ti) = (0, 0);
        for (s, &d) in digit.iter().enumerate() {
            if keep_sorted.binary_search(&s).is_ok() {
                ki = ki * dims[s] + d;
            } else {
                ti = ti * dims[s] + d;
            }
        }
        groups[ti].push((ki, full));
        for s in (0..dims.len()).rev() {
            digit[s] += 1;
            if digit[s] < dims[s] {
                break;
            }
            digit[s] = 0;
        }
    }

    let mut out = CMatrix::zeros(kept_dim, kept_dim);
    for group in &groups {
        for &(ka, fa) in group {
            for &(kb, fb) in group {
                out[(ka, kb)] += rho[(fa, fb)];
            }
        }
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Columns are the eigenvectors, in the order of `eigenvalues`.
    pub eigenvectors: CMatrix,
}

impl Spectrum {
    pub fn reconstruct(&self) -> CMatrix {
        self.apply(|w| w)
    }

    /// `V diag(f(w)) V†`.
    pub fn apply<F: Fn(f64) -> f64>(&self, f: F) -> CMatrix {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, &w) in self.eigenvalues.iter().enumerate() {
            let fw = f(w);
            scaled.column_mut(j).scale_mut(fw);
        }
        scaled * v.adjoint()
    }

    /// `V diag(weights) V†`, weights given in eigenvalue order.
    pub fn apply_weights(&self, weights: &[f64]) -> CMatrix {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, &w) in weights.iter().enumerate() {
            scaled.column_mut(j).scale_mut(w);
        }
        scaled * v.adjoint()
    }

    pub fn top_vector(&self) -> CVector {
        self.eigenvectors.column(0).into_owned()
    }
}

pub fn eigh(a: &CMatrix) -> Result<Spectrum> {
    let sym = symmetrized(a, HERMITIAN_TOL)?;
    let n = sym.nrows();
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut eigenvectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Real eigenvalues of a Hermitian matrix, descending.
pub fn eigvalsh(a: &CMatrix) -> Result<Vec<f64>> {
    let sym = symmetrized(a, HERMITIAN_TOL)?;
    let mut w: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    w.sort_by(|a, b| b.total_cmp(a));
    Ok(w)
}

/// Functional calculus `f(A)` for Hermitian `A`.
pub fn herm_fn<F: Fn(f64) -> f64>(a: &CMatrix, f: F) -> Result<CMatrix> {
    Ok(eigh(a)?.apply(f))
}

pub fn herm_exp(a: &CMatrix) -> Result<CMatrix> {
    herm_fn(a, f64::exp)
}

/// Shannon entropy (nats) of a list of weights, dropping tiny entries.
pub fn shannon_entropy(weights: &[f64]) -> f64 {
    weights
        .iter()
        .filter(|&&w| w >= ENTROPY_CUTOFF)
        .map(|&w| -w * w.ln())
        .sum()
}

/// A validated density matrix over `sites` qutrits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    sites: usize,
    data: CMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity (all to 1e-10).
    pub fn new(data: CMatrix) -> Result<Self> {
        let (r, c) = data.shape();
        if r != c {
            return Err(Error::NotSquare(r, c));
        }
        let sites = sites_for_dim(r).ok_or(Error::NotQutritSpace(r))?;
        let data = symmetrized(&data, HERMITIAN_TOL)?;
        let tr = data.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::InvalidTrace(tr.re));
        }
        let w = eigvalsh(&data)?;
        let min = *w.last().unwrap_or(&0.0);
        if min < -1e-10 {
            return Err(Error::NotPsd(min));
        }
        Ok(Self { sites, data })
    }

    /// For matrices that are valid by construction (exponentials, traces).
    pub(crate) fn from_trusted(data: CMatrix) -> Self {
        let sites = sites_for_dim(data.nrows()).expect("qutrit dimension");
        let data = (&data + data.adjoint()).scale(0.5);
        Self { sites, data }
    }

    /// Projector onto the normalized `psi`.
    pub fn from_pure(psi: &CVector) -> Result<Self> {
        let norm = psi.norm();
        if norm < 1e-14 {
            return Err(Error::Input("zero state vector".into()));
        }
        let sites = sites_for_dim(psi.len()).ok_or(Error::NotQutritSpace(psi.len()))?;
        let v = psi.unscale(norm);
        Ok(Self {
            sites,
            data: outer(&v, &v),
        })
    }

    pub fn maximally_mixed(sites: usize) -> Self {
        let d = qutrit_dim(sites);
        Self {
            sites,
            data: identity(d).unscale(d as f64),
        }
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigvalsh(&self.data).expect("density matrix is Hermitian")
    }

    /// `(1 - eps) rho + eps I/d`.
    pub fn mixed_with_identity(&self, eps: f64) -> Self {
        let d = self.dim();
        let data = self.data.scale(1.0 - eps) + identity(d).scale(eps / d as f64);
        Self {
            sites: self.sites,
            data,
        }
    }

    /// `<psi|rho|psi>` for a normalized `psi`.
    pub fn fidelity_with_pure(&self, psi: &CVector) -> f64 {
        let v = psi.unscale(psi.norm());
        (v.adjoint() * &self.data * &v)[(0, 0)].re
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let dims = vec![QUTRIT; self.sites];
        let data = partial_trace_dims(&self.data, &dims, keep)?;
        Ok(Self {
            sites: keep.len(),
            data,
        })
    }

    pub fn entropy(&self) -> f64 {
        von_neumann_entropy(self)
    }
}

pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    rho.partial_trace(keep)
}

/// Von Neumann entropy in nats.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    shannon_entropy(&rho.eigenvalues()).max(0.0)
}

pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    let diff = a.matrix() - b.matrix();
    let w = eigvalsh(&diff)?;
    Ok(0.5 * w.iter().map(|x| x.abs()).sum::<f64>())
}

/// Random Hermitian matrix `(G + G†)/2` with standard complex Gaussian `G`.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        c64(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let h = (&g + g.adjoint()).scale(0.5);
    // exact Hermiticity: copy the upper triangle over the lower one
    CMatrix::from_fn(dim, dim, |i, j| {
        if i < j {
            h[(i, j)]
        } else if i > j {
            h[(j, i)].conj()
        } else {
            c64(h[(i, i)].re, 0.0)
        }
    })
}

/// Haar-like random unitary: eigenvectors of a random Hermitian matrix.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    eigh(&random_hermitian(dim, rng))
        .expect("random Hermitian input")
        .eigenvectors
}
