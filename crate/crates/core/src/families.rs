//! The three GHZ-like state families, their companion states, and the
//! exponential-form states whose large-gamma limits reach those companions.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{
    alpha_max, ms_generator, ms_rotation, omega, q_pair, q_string, r_pair, sigma_r, spin_z,
    spin_z_squared,
};
use crate::tensor::{
    basis_ket, c64, eigh, embed_matrix, identity, outer, qutrit_dim, repeated_ket,
    shannon_entropy, symmetrized, CMatrix, CVector, DensityMatrix, SiteOperator, C64,
};

/// Smallest `theta` accepted by the exponential-form constructors.
pub const THETA_MIN: f64 = 1e-6;

/// A 3x3 Hermitian, PSD, unit-trace coefficient matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients(CMatrix);

impl Coefficients {
    pub fn new(c: CMatrix) -> Result<Self> {
        if c.shape() != (3, 3) {
            return Err(Error::Input(format!(
                "coefficient matrix must be 3x3, got {}x{}",
                c.nrows(),
                c.ncols()
            )));
        }
        let c = symmetrized(&c, 1e-10)?;
        let tr = c.trace().re;
        if (tr - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidTrace(tr));
        }
        let w = eigh(&c)?.eigenvalues;
        if w[2] < -1e-10 {
            return Err(Error::NotPsd(w[2]));
        }
        Ok(Self(c))
    }

    /// Diagonal `(sin²θ cos²φ, cos²θ, sin²θ sin²φ)`.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let d = spherical_weights(theta, phi);
        Self(CMatrix::from_fn(3, 3, |i, j| {
            if i == j {
                c64(d[i], 0.0)
            } else {
                c64(0.0, 0.0)
            }
        }))
    }

    /// Rank-one coefficients `a a†`.
    pub fn pure(amplitudes: [C64; 3]) -> Result<Self> {
        let v = CVector::from_column_slice(&amplitudes);
        let norm = v.norm();
        if norm < 1e-14 {
            return Err(Error::Input("zero amplitude vector".into()));
        }
        let v = v.unscale(norm);
        Self::new(outer(&v, &v))
    }

    /// Pure coefficients with the spherical amplitudes
    /// `(sinθ cosφ, cosθ, sinθ sinφ)`.
    pub fn pure_from_angles(theta: f64, phi: f64) -> Self {
        let a = [
            c64(theta.sin() * phi.cos(), 0.0),
            c64(theta.cos(), 0.0),
            c64(theta.sin() * phi.sin(), 0.0),
        ];
        Self::pure(a).expect("unit amplitudes")
    }

    /// Sets `c_ij = value` and `c_ji = conj(value)`, re-validating.
    pub fn with_coherence(&self, i: usize, j: usize, value: C64) -> Result<Self> {
        if i == j || i > 2 || j > 2 {
            return Err(Error::Input(format!("({i}, {j}) is not an off-diagonal entry")));
        }
        let mut c = self.0.clone();
        c[(i, j)] = value;
        c[(j, i)] = value.conj();
        Self::new(c)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn diagonal(&self) -> [f64; 3] {
        [self.0[(0, 0)].re, self.0[(1, 1)].re, self.0[(2, 2)].re]
    }

    /// Von Neumann entropy of the coefficient matrix, which equals the
    /// entropy of any family state built from it.
    pub fn entropy(&self) -> f64 {
        shannon_entropy(&eigh(&self.0).expect("Hermitian").eigenvalues).max(0.0)
    }

    /// `(θ, φ)` in `[0, π/2]²` reproducing the diagonal.
    pub fn spherical_angles(&self) -> (f64, f64) {
        let [c00, c11, c22] = self.diagonal();
        let theta = c11.clamp(0.0, 1.0).sqrt().acos();
        let phi = c22.max(0.0).sqrt().atan2(c00.max(0.0).sqrt());
        (theta, phi)
    }

    pub fn to_file(&self) -> CoefficientFile {
        let c = (0..3)
            .map(|i| (0..3).map(|j| [self.0[(i, j)].re, self.0[(i, j)].im]).collect())
            .collect();
        CoefficientFile { c }
    }

    pub fn from_file(file: &CoefficientFile) -> Result<Self> {
        if file.c.len() != 3 || file.c.iter().any(|row| row.len() != 3) {
            return Err(Error::Input("\"c\" must be a 3x3 array of [re, im] pairs".into()));
        }
        Self::new(CMatrix::from_fn(3, 3, |i, j| {
            c64(file.c[i][j][0], file.c[i][j][1])
        }))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: CoefficientFile =
            serde_json::from_str(text).map_err(|e| Error::Input(e.to_string()))?;
        Self::from_file(&file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("plain data")
    }
}

/// On-disk form: `{"c": [[[re, im], ...], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CoefficientFile {
    pub c: Vec<Vec<[f64; 2]>>,
}

/// `(sin²θ cos²φ, cos²θ, sin²θ sin²φ)`.
pub fn spherical_weights(theta: f64, phi: f64) -> [f64; 3] {
    let s2 = theta.sin().powi(2);
    [s2 * phi.cos().powi(2), theta.cos().powi(2), s2 * phi.sin().powi(2)]
}

pub fn check_angle(name: &str, value: f64) -> Result<()> {
    if !(0.0..=FRAC_PI_2 + 1e-12).contains(&value) {
        return Err(Error::OutOfRange(format!("{name} = {value} not in [0, pi/2]")));
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= alpha_max() + 1e-12) {
        return Err(Error::OutOfRange(format!(
            "alpha = {alpha} not in (0, arctan(sqrt 2)]"
        )));
    }
    Ok(())
}

fn check_sites(sites: usize, min: usize) -> Result<()> {
    if sites < min {
        return Err(Error::OutOfRange(format!("need n >= {min}, got {sites}")));
    }
    if sites > 6 {
        return Err(Error::OutOfRange(format!("n = {sites} exceeds the dense limit of 6")));
    }
    Ok(())
}

fn check_split(sites: usize, split: usize) -> Result<()> {
    if split < 1 || split >= sites {
        return Err(Error::OutOfRange(format!(
            "split m = {split} needs 1 <= m <= n-1 with n = {sites}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Ghz1,
    Ghz2,
    Ms,
}

/// Parameters shared by the three families.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyParams {
    pub sites: usize,
    /// Split index `m` of the second family; zero elsewhere.
    pub split: usize,
    pub theta: f64,
    pub phi: f64,
    pub alpha: f64,
    pub coefficients: Coefficients,
}

impl FamilyParams {
    /// Diagonal coefficients from spherical angles.
    pub fn new(sites: usize, theta: f64, phi: f64) -> Result<Self> {
        check_sites(sites, 2)?;
        check_angle("theta", theta)?;
        check_angle("phi", phi)?;
        Ok(Self {
            sites,
            split: 0,
            theta,
            phi,
            alpha: 0.0,
            coefficients: Coefficients::from_angles(theta, phi),
        })
    }

    /// Pure coefficients with the spherical amplitudes.
    pub fn pure(sites: usize, theta: f64, phi: f64) -> Result<Self> {
        Self::new(sites, theta, phi)?.with_coefficients(Coefficients::pure_from_angles(theta, phi))
    }

    /// Angles are read off the diagonal of `c`.
    pub fn from_coefficients(sites: usize, coefficients: Coefficients) -> Result<Self> {
        let (theta, phi) = coefficients.spherical_angles();
        Self::new(sites, theta, phi)?.with_coefficients(coefficients)
    }

    /// Replaces the coefficients; the diagonal must match the angles.
    pub fn with_coefficients(mut self, coefficients: Coefficients) -> Result<Self> {
        let expect = spherical_weights(self.theta, self.phi);
        let got = coefficients.diagonal();
        let dev = expect
            .iter()
            .zip(got.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if dev > 1e-12 {
            return Err(Error::Input(format!(
                "coefficient diagonal {got:?} does not match angles (expected {expect:?})"
            )));
        }
        self.coefficients = coefficients;
        Ok(self)
    }

    pub fn with_split(mut self, split: usize) -> Result<Self> {
        check_split(self.sites, split)?;
        self.split = split;
        Ok(self)
    }

    pub fn with_coherence(self, i: usize, j: usize, value: C64) -> Result<Self> {
        let c = self.coefficients.with_coherence(i, j, value)?;
        self.with_coefficients(c)
    }
}

fn three_level_state(sites: usize, basis: &[CVector; 3], c: &Coefficients) -> DensityMatrix {
    let d = qutrit_dim(sites);
    let mut rho = CMatrix::zeros(d, d);
    for i in 0..3 {
        for j in 0..3 {
            let cij = c.entry(i, j);
            if cij.norm() > 0.0 {
                rho += outer(&basis[i], &basis[j]) * cij;
            }
        }
    }
    DensityMatrix::from_trusted(rho)
}

/// `|0^n>, |1^n>, |2^n>`.
pub fn ghz1_basis(sites: usize) -> [CVector; 3] {
    [
        repeated_ket(0, sites),
        repeated_ket(1, sites),
        repeated_ket(2, sites),
    ]
}

/// `|0^n>, |1^n>, |0^m 2^(n-m)>`.
pub fn ghz2_basis(sites: usize, split: usize) -> [CVector; 3] {
    let mut two = vec![0; split];
    two.extend(vec![2; sites - split]);
    [repeated_ket(0, sites), repeated_ket(1, sites), basis_ket(&two)]
}

/// `sum c_ij |i^n><j^n|`.
pub fn ghz1(params: &FamilyParams) -> Result<DensityMatrix> {
    check_sites(params.sites, 2)?;
    Ok(three_level_state(
        params.sites,
        &ghz1_basis(params.sites),
        &params.coefficients,
    ))
}

/// `cosθ|0^n> + sinθ cosφ|1^n> + sinθ sinφ|2^n>`.
pub fn ghz1_pure_vector(sites: usize, theta: f64, phi: f64) -> Result<CVector> {
    check_sites(sites, 2)?;
    check_angle("theta", theta)?;
    check_angle("phi", phi)?;
    let [b0, b1, b2] = ghz1_basis(sites);
    Ok(b0 * c64(theta.cos(), 0.0)
        + b1 * c64(theta.sin() * phi.cos(), 0.0)
        + b2 * c64(theta.sin() * phi.sin(), 0.0))
}

pub fn ghz1_pure(sites: usize, theta: f64, phi: f64) -> Result<DensityMatrix> {
    DensityMatrix::from_pure(&ghz1_pure_vector(sites, theta, phi)?)
}

/// `sum c_ij |ī><j̄|` over the second-family basis.
pub fn ghz2(params: &FamilyParams) -> Result<DensityMatrix> {
    check_sites(params.sites, 2)?;
    check_split(params.sites, params.split)?;
    Ok(three_level_state(
        params.sites,
        &ghz2_basis(params.sites, params.split),
        &params.coefficients,
    ))
}

/// `sinθ cosφ|0̄> + cosθ|1̄> + sinθ sinφ|2̄>`.
pub fn ghz2_pure_vector(sites: usize, split: usize, theta: f64, phi: f64) -> Result<CVector> {
    check_sites(sites, 2)?;
    check_split(sites, split)?;
    check_angle("theta", theta)?;
    check_angle("phi", phi)?;
    let [b0, b1, b2] = ghz2_basis(sites, split);
    Ok(b0 * c64(theta.sin() * phi.cos(), 0.0)
        + b1 * c64(theta.cos(), 0.0)
        + b2 * c64(theta.sin() * phi.sin(), 0.0))
}

pub fn ghz2_pure(sites: usize, split: usize, theta: f64, phi: f64) -> Result<DensityMatrix> {
    DensityMatrix::from_pure(&ghz2_pure_vector(sites, split, theta, phi)?)
}

/// `|b̄_i> = M_0 |i^n>` with the site-0 rotation `M(alpha)`.
pub fn ms_basis(sites: usize, alpha: f64) -> Result<[CVector; 3]> {
    check_sites(sites, 2)?;
    check_alpha(alpha)?;
    let m = embed_matrix(&ms_rotation(alpha), &[0], sites)?;
    Ok([
        &m * repeated_ket(0, sites),
        &m * repeated_ket(1, sites),
        &m * repeated_ket(2, sites),
    ])
}

/// The maximal-slice vector `(|b̄_0> + |b̄_1> + |b̄_2>)/sqrt 3`.
pub fn ms_vector(sites: usize, alpha: f64) -> Result<CVector> {
    check_sites(sites, 3)?;
    let [b0, b1, b2] = ms_basis(sites, alpha)?;
    Ok((b0 + b1 + b2).unscale(3f64.sqrt()))
}

pub fn ms_state(sites: usize, alpha: f64) -> Result<DensityMatrix> {
    DensityMatrix::from_pure(&ms_vector(sites, alpha)?)
}

/// The zero-coherence (or partial-coherence) companions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Companion {
    /// `sum c_ii |i^n><i^n|`.
    Ghz1Diagonal,
    /// `sum c_ii |ī><ī|`.
    Ghz2Diagonal,
    /// The diagonal plus the `c_02`, `c_20` coherences.
    Ghz2Coherent,
    /// `(1/3) sum |b̄_i><b̄_i|`.
    MsDiagonal,
}

pub fn diagonal_companion(kind: Companion, params: &FamilyParams) -> Result<DensityMatrix> {
    let c = &params.coefficients;
    let diag_only = {
        let d = c.diagonal();
        Coefficients(CMatrix::from_fn(3, 3, |i, j| {
            if i == j {
                c64(d[i], 0.0)
            } else {
                c64(0.0, 0.0)
            }
        }))
    };
    match kind {
        Companion::Ghz1Diagonal => {
            check_sites(params.sites, 2)?;
            Ok(three_level_state(params.sites, &ghz1_basis(params.sites), &diag_only))
        }
        Companion::Ghz2Diagonal | Companion::Ghz2Coherent => {
            check_sites(params.sites, 2)?;
            check_split(params.sites, params.split)?;
            let mut coeffs = diag_only;
            if kind == Companion::Ghz2Coherent {
                coeffs.0[(0, 2)] = c.entry(0, 2);
                coeffs.0[(2, 0)] = c.entry(2, 0);
            }
            Ok(three_level_state(
                params.sites,
                &ghz2_basis(params.sites, params.split),
                &coeffs,
            ))
        }
        Companion::MsDiagonal => {
            check_sites(params.sites, 3)?;
            let basis = ms_basis(params.sites, params.alpha)?;
            let third = Coefficients(identity(3).unscale(3.0));
            Ok(three_level_state(params.sites, &basis, &third))
        }
    }
}

/// The scalar parameters of an exponential-form state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct GammaKnobs {
    pub gamma: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    /// `-ln tr exp(exponent)`; filled in once the state is normalized.
    pub eta: f64,
    pub xi: f64,
    pub zeta: f64,
    /// The effective angle `φ'` of the coherent companion.
    pub varphi: f64,
}

/// `γ1, γ2` with `tanh γ2 = cos 2φ` and `e^γ1 = 2 cosh γ2 cot²θ`.
pub fn gamma_knobs(gamma: f64, theta: f64, phi: f64) -> Result<GammaKnobs> {
    if gamma < 0.0 || !gamma.is_finite() {
        return Err(Error::OutOfRange(format!("gamma = {gamma} must be finite and >= 0")));
    }
    check_angle("theta", theta)?;
    check_angle("phi", phi)?;
    if theta < THETA_MIN {
        return Err(Error::OutOfRange(format!(
            "theta = {theta} below {THETA_MIN}: cot(theta) is singular, use the exact limit state"
        )));
    }
    let cos_t2 = theta.cos().powi(2);
    if cos_t2 < 1e-12 {
        return Err(Error::RankDeficient(cos_t2));
    }
    Ok(GammaKnobs {
        gamma,
        varphi: phi,
        ..knobs_from_cos2(gamma, theta, (2.0 * phi).cos())?
    })
}

fn knobs_from_cos2(gamma: f64, theta: f64, cos2: f64) -> Result<GammaKnobs> {
    if 1.0 - cos2.abs() < 1e-12 {
        // one of the two weights in the (0̄, 2̄) block vanishes
        return Err(Error::RankDeficient(1.0 - cos2.abs()));
    }
    let gamma2 = cos2.atanh();
    let cot = 1.0 / theta.tan();
    let gamma1 = (2.0 * gamma2.cosh() * cot * cot).ln();
    Ok(GammaKnobs {
        gamma,
        gamma1,
        gamma2,
        ..Default::default()
    })
}

/// `cos 2φ' = sqrt(cos² 2φ + 4|c_02|²/sin⁴θ)`, returned as `φ' ∈ [0, π/4]`.
pub fn ghz2_varphi(theta: f64, phi: f64, c02: C64) -> Result<f64> {
    let s4 = theta.sin().powi(4);
    let extra = if c02.norm() == 0.0 {
        0.0
    } else if s4 == 0.0 {
        return Err(Error::Input("c_02 != 0 with sin(theta) = 0".into()));
    } else {
        4.0 * c02.norm_sqr() / s4
    };
    let cos2sq = (2.0 * phi).cos().powi(2) + extra;
    if cos2sq > 1.0 + 1e-10 {
        return Err(Error::OutOfRange(format!(
            "cos^2(2 varphi) = {cos2sq} > 1: c_02 violates positivity"
        )));
    }
    Ok(0.5 * cos2sq.min(1.0).sqrt().acos())
}

/// Normalized `exp(A)` and `eta = -ln tr exp(A)`.
pub fn exponential_state(exponent: &CMatrix) -> Result<(DensityMatrix, f64)> {
    let spec = eigh(exponent)?;
    let top = spec.eigenvalues[0];
    let weights: Vec<f64> = spec.eigenvalues.iter().map(|w| (w - top).exp()).collect();
    let z: f64 = weights.iter().sum();
    let rho = spec.apply(|w| (w - top).exp() / z);
    Ok((DensityMatrix::from_trusted(rho), -(top + z.ln())))
}

fn embedded(op: &CMatrix, support: &[usize], sites: usize) -> Result<CMatrix> {
    embed_matrix(op, support, sites)
}

/// Exponent `γ sum_{j>0} Q_0j - γ1 Z_0² + γ2 Z_0`.
pub fn sigma_g_exponent(gamma: f64, params: &FamilyParams) -> Result<(CMatrix, GammaKnobs)> {
    let n = params.sites;
    check_sites(n, 2)?;
    let knobs = gamma_knobs(gamma, params.theta, params.phi)?;
    let d = qutrit_dim(n);
    let mut a = CMatrix::zeros(d, d);
    for j in 1..n {
        a += q_pair(0, j)?.embed(n)?.scale(gamma);
    }
    a -= embedded(&spin_z_squared(), &[0], n)?.scale(knobs.gamma1);
    a += embedded(&spin_z(), &[0], n)?.scale(knobs.gamma2);
    Ok((a, knobs))
}

pub fn sigma_g(gamma: f64, params: &FamilyParams) -> Result<DensityMatrix> {
    let (a, _) = sigma_g_exponent(gamma, params)?;
    Ok(exponential_state(&a)?.0)
}

/// The factorized form `prod_j (1/(e^γ+2) + (e^γ-1)/(e^γ+2) Q_0j) f(Z_0)`.
pub fn sigma_g_product_form(gamma: f64, params: &FamilyParams) -> Result<DensityMatrix> {
    let n = params.sites;
    check_sites(n, 2)?;
    gamma_knobs(gamma, params.theta, params.phi)?;
    let (theta, phi) = (params.theta, params.phi);
    let eg = gamma.exp();
    let d = qutrit_dim(n);
    let mut rho = identity(d);
    for j in 1..n {
        let factor = identity(d).scale(1.0 / (eg + 2.0))
            + q_pair(0, j)?.embed(n)?.scale((eg - 1.0) / (eg + 2.0));
        rho *= factor;
    }
    let z = spin_z();
    let z2 = spin_z_squared();
    let f = (identity(3) - &z2).scale(theta.cos().powi(2))
        + (&z2 + z.scale((2.0 * phi).cos())).scale(0.5 * theta.sin().powi(2));
    rho *= embedded(&f, &[0], n)?;
    Ok(DensityMatrix::from_trusted(rho))
}

/// Exponent `γ Ω - γ1 Z_m² + γ2 Z_m` (anchor site `m`, zero-indexed).
pub fn sigma_2_exponent(gamma: f64, params: &FamilyParams) -> Result<(CMatrix, GammaKnobs)> {
    let (n, m) = (params.sites, params.split);
    check_sites(n, 2)?;
    check_split(n, m)?;
    let knobs = gamma_knobs(gamma, params.theta, params.phi)?;
    let mut a = omega(n, m)?.total().scale(gamma);
    a -= embedded(&spin_z_squared(), &[m], n)?.scale(knobs.gamma1);
    a += embedded(&spin_z(), &[m], n)?.scale(knobs.gamma2);
    Ok((a, knobs))
}

pub fn sigma_2(gamma: f64, params: &FamilyParams) -> Result<DensityMatrix> {
    let (a, _) = sigma_2_exponent(gamma, params)?;
    Ok(exponential_state(&a)?.0)
}

/// Knobs of the coherent exponential state: `φ'`, `ξ`, `ζ` from `c_02`.
///
/// `ζ = -arg(c_02)`, the branch of `½ arg(c_20/c_02)` that puts the
/// coherence of the limit on `c_02` rather than `-c_02`.
pub fn tau_2_knobs(gamma: f64, params: &FamilyParams) -> Result<GammaKnobs> {
    let (theta, phi) = (params.theta, params.phi);
    if gamma < 0.0 || !gamma.is_finite() {
        return Err(Error::OutOfRange(format!("gamma = {gamma} must be finite and >= 0")));
    }
    check_angle("theta", theta)?;
    check_angle("phi", phi)?;
    if theta < THETA_MIN {
        return Err(Error::OutOfRange(format!(
            "theta = {theta} below {THETA_MIN}: cot(theta) is singular, use the exact limit state"
        )));
    }
    let c02 = params.coefficients.entry(0, 2);
    let varphi = ghz2_varphi(theta, phi, c02)?;
    let cos2v = (2.0 * varphi).cos();
    let xi = if cos2v.abs() < 1e-15 {
        0.0
    } else {
        ((2.0 * phi).cos() / cos2v).clamp(-1.0, 1.0).acos()
    };
    let zeta = if c02.norm() == 0.0 { 0.0 } else { -c02.arg() };
    let base = knobs_from_cos2(gamma, theta, cos2v)?;
    Ok(GammaKnobs {
        xi,
        zeta,
        varphi,
        ..base
    })
}

/// Exponent `γ Ω - γ1 Σ_r² + γ2 Σ_r`.
pub fn tau_2_exponent(gamma: f64, params: &FamilyParams) -> Result<(CMatrix, GammaKnobs)> {
    let (n, m) = (params.sites, params.split);
    check_sites(n, 2)?;
    check_split(n, m)?;
    let knobs = tau_2_knobs(gamma, params)?;
    let sr: SiteOperator = sigma_r(knobs.xi, knobs.zeta, n, m)?;
    let sr_full = sr.embed(n)?;
    let mut a = omega(n, m)?.total().scale(gamma);
    a -= (&sr_full * &sr_full).scale(knobs.gamma1);
    a += sr_full.scale(knobs.gamma2);
    Ok((a, knobs))
}

pub fn tau_2(gamma: f64, params: &FamilyParams) -> Result<DensityMatrix> {
    let (a, _) = tau_2_exponent(gamma, params)?;
    Ok(exponential_state(&a)?.0)
}

/// Normalized `exp(γ (Q + R_01))`.
pub fn sigma_s(gamma: f64, sites: usize, alpha: f64) -> Result<DensityMatrix> {
    check_sites(sites, 3)?;
    check_alpha(alpha)?;
    let a = (q_string(sites, 1)?.total() + r_pair(alpha)?.embed(sites)?).scale(gamma);
    Ok(exponential_state(&a)?.0)
}

/// Normalized `exp(γ (Q + X))`, which tends to the maximal-slice state.
pub fn ms_exp_limit(gamma: f64, sites: usize, alpha: f64) -> Result<DensityMatrix> {
    check_sites(sites, 3)?;
    let g = ms_generator(sites, alpha)?;
    let a = g.total()?.total().scale(gamma);
    Ok(exponential_state(&a)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{max_abs_diff, trace_distance};
    use std::f64::consts::FRAC_PI_4;

    fn rank(rho: &DensityMatrix) -> usize {
        rho.eigenvalues().iter().filter(|&&w| w > 1e-10).count()
    }

    #[test]
    fn ghz1_theta_zero_is_product() {
        let p = FamilyParams::new(3, 0.0, 0.3).unwrap();
        let rho = ghz1(&p).unwrap();
        let expect = DensityMatrix::from_pure(&repeated_ket(1, 3)).unwrap();
        assert!(max_abs_diff(rho.matrix(), expect.matrix()) < 1e-15);
    }

    #[test]
    fn ghz1_uniform_coefficients_are_pure() {
        let third = c64(1.0 / 3.0, 0.0);
        let c = Coefficients::pure([third.sqrt(); 3]).unwrap();
        let p = FamilyParams::from_coefficients(3, c).unwrap();
        assert!((p.theta.cos().powi(2) - 1.0 / 3.0).abs() < 1e-12);
        assert!((p.phi - FRAC_PI_4).abs() < 1e-12);
        let rho = ghz1(&p).unwrap();
        assert_eq!(rank(&rho), 1);
        let psi = ghz1_basis(3)
            .iter()
            .fold(CVector::zeros(27), |acc, b| acc + b)
            .unscale(3f64.sqrt());
        assert!((rho.fidelity_with_pure(&psi) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ghz1_rank_matches_coefficients() {
        let p = FamilyParams::new(3, 0.6, 0.5)
            .unwrap()
            .with_coherence(0, 1, c64(0.05, 0.02))
            .unwrap();
        assert_eq!(rank(&ghz1(&p).unwrap()), 3);
        let p = FamilyParams::pure(3, 0.6, 0.5).unwrap();
        assert_eq!(rank(&ghz1(&p).unwrap()), 1);
    }

    #[test]
    fn ghz1_pure_edge_cases() {
        let rho = ghz1_pure(3, 0.0, 0.4).unwrap();
        assert!((rho.fidelity_with_pure(&repeated_ket(0, 3)) - 1.0).abs() < 1e-14);
        // phi = 0 leaves a two-level GHZ state
        let rho = ghz1_pure(3, 0.5, 0.0).unwrap();
        let w = rho.partial_trace(&[0]).unwrap().eigenvalues();
        assert!(w[2].abs() < 1e-15);
        assert!(ghz1_pure(3, 2.0, 0.0).is_err());
    }

    #[test]
    fn ghz1_marginal_entropy_is_trinary() {
        let (theta, phi) = (0.5, 0.3);
        let rho = ghz1_pure(3, theta, phi).unwrap();
        let s1 = rho.partial_trace(&[1]).unwrap().entropy();
        let h3 = shannon_entropy(&spherical_weights(theta, phi));
        assert!((s1 - h3).abs() < 1e-12);
    }

    #[test]
    fn ghz2_rank_one_example() {
        let c = Coefficients::pure([c64(0.5f64.sqrt(), 0.0), c64(0.0, 0.0), c64(0.5f64.sqrt(), 0.0)])
            .unwrap();
        let p = FamilyParams::from_coefficients(3, c).unwrap().with_split(1).unwrap();
        let rho = ghz2(&p).unwrap();
        let psi = (basis_ket(&[0, 0, 0]) + basis_ket(&[0, 2, 2])).unscale(2f64.sqrt());
        assert!((rho.fidelity_with_pure(&psi) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ghz2_diagonal_is_its_own_companion() {
        let p = FamilyParams::new(4, 0.5, 0.3).unwrap().with_split(3).unwrap();
        let rho = ghz2(&p).unwrap();
        let d2 = diagonal_companion(Companion::Ghz2Diagonal, &p).unwrap();
        assert!(max_abs_diff(rho.matrix(), d2.matrix()) < 1e-15);
        assert!(FamilyParams::new(4, 0.5, 0.3).unwrap().with_split(4).is_err());
    }

    #[test]
    fn ghz2_pure_marginals() {
        let rho = ghz2_pure(4, 1, FRAC_PI_4, FRAC_PI_4).unwrap();
        let expect = [0.25, 0.5, 0.25];
        for site in 1..4 {
            let r = rho.partial_trace(&[site]).unwrap();
            for (k, e) in expect.iter().enumerate() {
                assert!((r.matrix()[(k, k)].re - e).abs() < 1e-14);
            }
            assert!(max_abs_diff(r.matrix(), &CMatrix::from_diagonal(&r.matrix().diagonal())) < 1e-15);
        }
    }

    #[test]
    fn ghz2_pure_has_zero_varphi() {
        for (theta, phi) in [(0.3, 0.2), (FRAC_PI_4, FRAC_PI_4), (0.7, 0.1)] {
            let c02 = c64(theta.sin().powi(2) * phi.sin() * phi.cos(), 0.0);
            let v = ghz2_varphi(theta, phi, c02).unwrap();
            assert!(v.abs() < 1e-6, "varphi = {v}");
        }
    }

    #[test]
    fn ms_basis_is_orthonormal() {
        for n in [2, 3, 4] {
            let b = ms_basis(n, 0.7).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    let ip = (b[i].adjoint() * &b[j])[(0, 0)];
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((ip - c64(expect, 0.0)).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn ms_state_at_boundary_factorizes() {
        let n = 3;
        let s = ms_vector(n, alpha_max()).unwrap();
        let plus = CVector::from_element(3, c64(1.0 / 3f64.sqrt(), 0.0));
        let tail = (repeated_ket(0, n - 1) + repeated_ket(1, n - 1) + repeated_ket(2, n - 1))
            .unscale(3f64.sqrt());
        let expect = plus.kronecker(&tail);
        assert!(max_abs_diff(&s, &expect) < 1e-14);
    }

    #[test]
    fn ms_tail_marginals_are_maximally_mixed() {
        let rho = ms_state(4, 0.6).unwrap();
        for site in 1..4 {
            let r = rho.partial_trace(&[site]).unwrap();
            assert!(max_abs_diff(r.matrix(), &identity(3).unscale(3.0)) < 1e-14);
        }
        assert!(ms_state(2, 0.6).is_err());
        assert!(ms_state(3, 1.2).is_err());
    }

    #[test]
    fn companions() {
        let third = c64(1.0 / 3.0, 0.0).sqrt();
        let c = Coefficients::pure([third; 3]).unwrap();
        let p = FamilyParams::from_coefficients(3, c).unwrap();
        let dg = diagonal_companion(Companion::Ghz1Diagonal, &p).unwrap();
        assert!((dg.entropy() - 3f64.ln()).abs() < 1e-12);

        let p2 = FamilyParams::new(3, 0.6, 0.7)
            .unwrap()
            .with_split(1)
            .unwrap()
            .with_coherence(0, 2, c64(0.05, -0.03))
            .unwrap()
            .with_coherence(0, 1, c64(0.02, 0.0))
            .unwrap();
        let d2 = diagonal_companion(Companion::Ghz2Diagonal, &p2).unwrap();
        let b2 = diagonal_companion(Companion::Ghz2Coherent, &p2).unwrap();
        let diff = b2.matrix() - d2.matrix();
        let [b0, _, bb2] = ghz2_basis(3, 1);
        let expect = outer(&b0, &bb2) * c64(0.05, -0.03) + outer(&bb2, &b0) * c64(0.05, 0.03);
        assert!(max_abs_diff(&diff, &expect) < 1e-15);

        let ps = FamilyParams {
            alpha: 0.4,
            ..FamilyParams::new(3, 0.1, 0.1).unwrap()
        };
        let ds = diagonal_companion(Companion::MsDiagonal, &ps).unwrap();
        assert!((ds.entropy() - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn knobs_satisfy_their_relations() {
        let k = gamma_knobs(2.0, 0.5, 0.3).unwrap();
        assert!((k.gamma2.tanh() - 0.6f64.cos()).abs() < 1e-12);
        let rhs = 2.0 * k.gamma2.cosh() / 0.5f64.tan().powi(2);
        assert!((k.gamma1.exp() - rhs).abs() < 1e-10 * rhs);
        assert!(gamma_knobs(1.0, 0.5, FRAC_PI_4).unwrap().gamma2.abs() < 1e-15);
        assert!(gamma_knobs(1.0, 0.0, 0.3).is_err());
        assert!(gamma_knobs(1.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn sigma_g_matches_product_form() {
        for &(theta, phi, gamma) in &[(0.3, 0.2, 0.0), (0.5, 0.7, 1.5), (FRAC_PI_4, FRAC_PI_4, 5.0)] {
            let p = FamilyParams::new(3, theta, phi).unwrap();
            let a = sigma_g(gamma, &p).unwrap();
            let b = sigma_g_product_form(gamma, &p).unwrap();
            assert!(max_abs_diff(a.matrix(), b.matrix()) < 1e-10);
        }
    }

    #[test]
    fn sigma_g_gamma_zero_factorizes() {
        let p = FamilyParams::new(3, 0.5, 0.3).unwrap();
        let s = sigma_g(0.0, &p).unwrap();
        let r0 = s.partial_trace(&[0]).unwrap();
        let w = spherical_weights(0.5, 0.3);
        // f(Z) puts c_11 on |1>, c_00 on |0>, c_22 on |2>
        for k in 0..3 {
            assert!((r0.matrix()[(k, k)].re - w[k]).abs() < 1e-12);
        }
        for site in 1..3 {
            let r = s.partial_trace(&[site]).unwrap();
            assert!(max_abs_diff(r.matrix(), &identity(3).unscale(3.0)) < 1e-12);
        }
    }

    #[test]
    fn sigma_g_reaches_diagonal_companion() {
        let p = FamilyParams::new(3, 0.5, 0.3).unwrap();
        let dg = diagonal_companion(Companion::Ghz1Diagonal, &p).unwrap();
        let s = sigma_g(30.0, &p).unwrap();
        assert!(trace_distance(&s, &dg).unwrap() <= 1e-9);
    }

    #[test]
    fn sigma_2_closed_form_normalization() {
        let (n, m) = (4, 1);
        let p = FamilyParams::new(n, 0.6, 0.4).unwrap().with_split(m).unwrap();
        for gamma in [0.5, 2.0, 6.0] {
            let (a, k) = sigma_2_exponent(gamma, &p).unwrap();
            let (_, eta) = exponential_state(&a).unwrap();
            // anchor factor is 1 + 2 e^{-γ1} cosh γ2, i.e. e^{-γ1}(e^{γ1} + 2 cosh γ2)
            let closed = -(m as f64) * (2.0 * gamma.cosh() + 1.0).ln()
                - (n - m - 1) as f64 * (gamma.exp() + 2.0).ln()
                - (k.gamma1.exp() + 2.0 * k.gamma2.cosh()).ln()
                + k.gamma1;
            assert!((eta - closed).abs() < 1e-10, "eta {eta} vs {closed}");
        }
    }

    #[test]
    fn tau_2_limit_is_coherent_companion() {
        for c02 in [c64(0.2, 0.0), c64(0.1, 0.12), c64(-0.15, -0.1)] {
            let p = FamilyParams::new(3, FRAC_PI_4, FRAC_PI_4)
                .unwrap()
                .with_split(1)
                .unwrap()
                .with_coherence(0, 2, c02)
                .unwrap();
            let b2 = diagonal_companion(Companion::Ghz2Coherent, &p).unwrap();
            let t = tau_2(30.0, &p).unwrap();
            assert!(trace_distance(&t, &b2).unwrap() <= 1e-8, "c02 = {c02}");
        }
    }

    #[test]
    fn tau_2_without_coherence_is_sigma_2() {
        let p = FamilyParams::new(3, 0.5, 0.4).unwrap().with_split(1).unwrap();
        let k = tau_2_knobs(1.0, &p).unwrap();
        assert_eq!(k.xi, 0.0);
        assert!((k.varphi - 0.4).abs() < 1e-12);
        let t = tau_2(3.0, &p).unwrap();
        let s = sigma_2(3.0, &p).unwrap();
        // Σ_r² = Z_m² Z_(m+1)² differs from Z_m² only off the top Ω block
        let d2 = diagonal_companion(Companion::Ghz2Diagonal, &p).unwrap();
        let far_t = tau_2(30.0, &p).unwrap();
        assert!(trace_distance(&far_t, &d2).unwrap() < 1e-8);
        assert!(trace_distance(&t, &s).unwrap() < 0.5);
    }

    #[test]
    fn ms_exp_limit_edges() {
        let s = ms_exp_limit(0.0, 3, 0.6).unwrap();
        assert!(max_abs_diff(s.matrix(), &identity(27).unscale(27.0)) < 1e-14);
        let psi = ms_vector(3, alpha_max()).unwrap();
        let s = ms_exp_limit(40.0, 3, alpha_max()).unwrap();
        assert!(s.fidelity_with_pure(&psi) >= 1.0 - 1e-8);
    }

    #[test]
    fn ms_exp_limit_converges_at_the_spectral_gap() {
        let (n, alpha) = (3, 0.6);
        let w = eigh(ms_generator(n, alpha).unwrap().total().unwrap().total())
            .unwrap()
            .eigenvalues;
        let gap = w[0] - w[1];
        let psi = ms_vector(n, alpha).unwrap();
        let deficit = |g: f64| 1.0 - ms_exp_limit(g, n, alpha).unwrap().fidelity_with_pure(&psi);
        let slope = (deficit(30.0).ln() - deficit(20.0).ln()) / 10.0;
        assert!((slope + gap).abs() < 0.02 * gap, "slope {slope} gap {gap}");
        // a small gap needs a larger gamma for the same fidelity
        let needed = (3.0 / 1e-8f64).ln() / gap;
        assert!(deficit(needed) <= 1e-8);
    }

    #[test]
    fn coefficient_file_round_trip() {
        let c = Coefficients::from_angles(0.4, 0.3)
            .with_coherence(0, 2, c64(0.01, -0.02))
            .unwrap();
        let back = Coefficients::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
        assert!(Coefficients::from_json(r#"{"c": [[[1, 0]]]}"#).is_err());
        let not_psd = r#"{"c": [[[0.5,0],[0.9,0],[0,0]],[[0.9,0],[0.5,0],[0,0]],[[0,0],[0,0],[0,0]]]}"#;
        assert!(matches!(Coefficients::from_json(not_psd), Err(Error::NotPsd(_))));
    }
}
