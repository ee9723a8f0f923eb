//! Analytic correlation spectra of the three state families.

use std::f64::consts::{FRAC_PI_4, SQRT_2};

use crate::error::{Error, Result};
use crate::families::{ghz2_varphi, FamilyParams};
use crate::operators::alpha_max;
use crate::spectrum::{CorrelationSpectrum, Method};
use crate::tensor::{shannon_entropy, DensityMatrix};

/// Binary entropy of `{cos² a, sin² a}` in nats.
pub fn h2(alpha: f64) -> f64 {
    let c = alpha.cos().powi(2);
    shannon_entropy(&[c, 1.0 - c])
}

/// Entropy of `{cos² θ, sin² θ cos² φ, sin² θ sin² φ}`.
pub fn h3(theta: f64, phi: f64) -> f64 {
    h2(theta) + theta.sin().powi(2) * h2(phi)
}

/// `χ` with `cos² χ = (3 - cos 2α + 2√2 sin 2α) / 6`.
pub fn chi_of_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= alpha_max() + 1e-12) {
        return Err(Error::OutOfRange(format!(
            "alpha = {alpha} must lie in (0, arctan sqrt 2]"
        )));
    }
    let c2 = (3.0 - (2.0 * alpha).cos() + 2.0 * SQRT_2 * (2.0 * alpha).sin()) / 6.0;
    assert!((-1e-12..=1.0 + 1e-12).contains(&c2), "cos^2 chi = {c2}");
    Ok(c2.clamp(0.0, 1.0).sqrt().acos())
}

/// Sum of single-site entropies minus the global entropy.
pub fn total_correlation(rho: &DensityMatrix) -> Result<f64> {
    let mut sum = 0.0;
    for s in 0..rho.sites() {
        sum += rho.partial_trace(&[s])?.entropy();
    }
    Ok(sum - rho.entropy())
}

fn finish(mut spec: CorrelationSpectrum) -> CorrelationSpectrum {
    spec.total = spec.sum();
    spec
}

fn check_entropy(s: f64, bound: f64) -> Result<()> {
    if s > bound + 1e-9 {
        return Err(Error::Input(format!(
            "state entropy {s} exceeds the diagonal entropy {bound}"
        )));
    }
    Ok(())
}

/// First family: `C(2) = (n-1) H3`, `C(n) = H3 - S(G)`.
pub fn theorem1_spectrum(params: &FamilyParams, s_g: f64) -> Result<CorrelationSpectrum> {
    let n = params.sites;
    if n < 3 {
        return Err(Error::OutOfRange(format!("need n >= 3, got {n}")));
    }
    let h = h3(params.theta, params.phi);
    check_entropy(s_g, h)?;
    let mut spec = CorrelationSpectrum::zeros(n, Method::Analytic);
    spec.add(2, (n - 1) as f64 * h);
    spec.add(n, h - s_g);
    Ok(finish(spec))
}

/// Second family with split `m`.
///
/// The coherence `c_02` moves entropy from level `n` to level `n - m`, where
/// the maximum-entropy states switch from the diagonal to the coherent form.
pub fn theorem2_spectrum(params: &FamilyParams, s_g2: f64) -> Result<CorrelationSpectrum> {
    let n = params.sites;
    let m = params.split;
    if m < 1 || n < m + 2 {
        return Err(Error::OutOfRange(format!(
            "split m = {m} puts the coherent level n - m outside 2..={n}"
        )));
    }
    let (theta, phi) = (params.theta, params.phi);
    let varphi = ghz2_varphi(theta, phi, params.coefficients.entry(0, 2))?;
    let h = h3(theta, phi);
    let h_coherent = h3(theta, varphi);
    check_entropy(s_g2, h_coherent)?;
    let mut spec = CorrelationSpectrum::zeros(n, Method::Analytic);
    spec.add(2, m as f64 * h2(theta) + (n - m - 1) as f64 * h);
    spec.add(n - m, h - h_coherent);
    spec.add(n, h_coherent - s_g2);
    if n - m == 2 {
        spec.notes
            .push("coherent level n-m coincides with level 2; contributions merged".into());
    }
    Ok(finish(spec))
}

/// Maximal-slice states: `C(2) = H3(χ, π/4) + (n-2) ln 3`, `C(n-1) = ln 3`.
pub fn theorem3_spectrum(sites: usize, alpha: f64) -> Result<CorrelationSpectrum> {
    if sites < 3 {
        return Err(Error::OutOfRange(format!("need n >= 3, got {sites}")));
    }
    let chi = chi_of_alpha(alpha)?;
    let ln3 = 3f64.ln();
    let mut spec = CorrelationSpectrum::zeros(sites, Method::Analytic);
    spec.add(2, h3(chi, FRAC_PI_4) + (sites - 2) as f64 * ln3);
    spec.add(sites - 1, ln3);
    if sites == 3 {
        spec.notes
            .push("level n-1 coincides with level 2; contributions merged".into());
    }
    Ok(finish(spec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{ghz1, ghz1_pure, ghz2, ghz2_pure, ms_state, FamilyParams};
    use crate::tensor::c64;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, LN_2};

    const LN3: f64 = 1.0986122886681098;

    #[test]
    fn entropy_helpers() {
        assert_eq!(h2(0.0), 0.0);
        assert!((h2(FRAC_PI_4) - LN_2).abs() < 1e-15);
        let expect = -0.25 * 0.25f64.ln() - 0.75 * 0.75f64.ln();
        assert!((h2(FRAC_PI_3) - expect).abs() < 1e-15);
        assert!((h3(0.7, 0.0) - h2(0.7)).abs() < 1e-15);
        assert!((h3(FRAC_PI_4, FRAC_PI_4) - 1.5 * LN_2).abs() < 1e-15);
        let balanced = (1.0f64 / 3.0).sqrt().acos();
        assert!((h3(balanced, FRAC_PI_4) - LN3).abs() < 1e-14);
    }

    #[test]
    fn h3_is_entropy_of_the_diagonal() {
        for i in 0..=6 {
            for j in 0..=6 {
                let (t, p) = (i as f64 * 0.25, j as f64 * 0.25);
                let d = FamilyParams::new(3, t.min(FRAC_PI_2), p.min(FRAC_PI_2)).unwrap();
                let diag = d.coefficients.diagonal();
                assert!((h3(d.theta, d.phi) - shannon_entropy(&diag)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn chi_edges() {
        assert!(chi_of_alpha(alpha_max()).unwrap().abs() < 1e-6);
        let small = chi_of_alpha(1e-9).unwrap();
        assert!((small.cos().powi(2) - 1.0 / 3.0).abs() < 1e-8);
        assert!(chi_of_alpha(0.0).is_err());
        assert!(chi_of_alpha(1.2).is_err());
    }

    #[test]
    fn chi_matches_site_marginal() {
        for alpha in [0.2, 0.5, 0.8, alpha_max()] {
            let chi = chi_of_alpha(alpha).unwrap();
            let rho = ms_state(4, alpha).unwrap();
            let w = rho.partial_trace(&[0]).unwrap().eigenvalues();
            let c2 = chi.cos().powi(2);
            let mut expect = [c2, (1.0 - c2) / 2.0, (1.0 - c2) / 2.0];
            expect.sort_by(|a, b| b.total_cmp(a));
            for (a, b) in w.iter().zip(expect) {
                assert!((a - b).abs() < 1e-10, "alpha {alpha}: {w:?} vs {expect:?}");
            }
        }
    }

    #[test]
    fn theorem1_examples() {
        let balanced = (1.0f64 / 3.0).sqrt().acos();
        let p = FamilyParams::pure(3, balanced, FRAC_PI_4).unwrap();
        let s = theorem1_spectrum(&p, 0.0).unwrap();
        assert!((s.value(2) - 2.0 * LN3).abs() < 1e-12);
        assert!((s.value(3) - LN3).abs() < 1e-12);

        let d = FamilyParams::new(4, 0.4, 0.9).unwrap();
        let s = theorem1_spectrum(&d, d.coefficients.entropy()).unwrap();
        assert!(s.value(4).abs() < 1e-12);
        assert!(theorem1_spectrum(&d, 5.0).is_err());
    }

    #[test]
    fn theorem2_examples() {
        let q = FRAC_PI_4;
        let p = FamilyParams::pure(4, q, q).unwrap().with_split(1).unwrap();
        let s = theorem2_spectrum(&p, 0.0).unwrap();
        assert!((s.value(2) - 4.0 * LN_2).abs() < 1e-12);
        assert!((s.value(3) - 0.5 * LN_2).abs() < 1e-12);
        assert!((s.value(4) - LN_2).abs() < 1e-12);

        let merged = theorem2_spectrum(&p.clone().with_split(2).unwrap(), 0.0).unwrap();
        assert!((merged.value(2) - (2.0 * LN_2 + 1.5 * LN_2 + 0.5 * LN_2)).abs() < 1e-12);
        assert!(merged.value(3).abs() < 1e-15);
        assert_eq!(merged.notes.len(), 1);

        assert!(theorem2_spectrum(&p.clone().with_split(3).unwrap(), 0.0).is_err());

        let d = FamilyParams::new(4, 0.6, 0.3).unwrap().with_split(1).unwrap();
        let s = theorem2_spectrum(&d, d.coefficients.entropy()).unwrap();
        assert_eq!(s.nonzero_levels(1e-12), vec![2]);
    }

    #[test]
    fn theorem3_examples() {
        for n in 3..=6 {
            let s = theorem3_spectrum(n, alpha_max()).unwrap();
            if n > 3 {
                assert!((s.value(n - 1) - LN3).abs() < 1e-14);
                assert!((s.value(2) - (n - 2) as f64 * LN3).abs() < 1e-6);
            } else {
                assert!((s.value(2) - 2.0 * LN3).abs() < 1e-6);
                assert!(!s.notes.is_empty());
            }
            assert_eq!(s.value(n), 0.0);
        }
        assert!(theorem3_spectrum(4, 0.0).is_err());
    }

    #[test]
    fn total_correlation_examples() {
        let product = DensityMatrix::maximally_mixed(3);
        assert!(total_correlation(&product).unwrap().abs() < 1e-12);
        let rho = ghz1_pure(4, 0.5, 0.3).unwrap();
        assert!((total_correlation(&rho).unwrap() - 4.0 * h3(0.5, 0.3)).abs() < 1e-9);
    }

    fn grid() -> Vec<f64> {
        vec![0.15, 0.45, 0.785, 1.1, 1.45]
    }

    #[test]
    fn spectra_telescope_to_total_correlation() {
        for n in [3, 4] {
            for &t in &grid() {
                for &p in &grid() {
                    let pure = FamilyParams::pure(n, t, p).unwrap();
                    let s = theorem1_spectrum(&pure, 0.0).unwrap();
                    let tc = total_correlation(&ghz1(&pure).unwrap()).unwrap();
                    assert!((s.sum() - tc).abs() < 1e-9);
                    assert!(s.values.values().all(|&v| v >= -1e-9));

                    for m in 1..=n - 2 {
                        let c02 = {
                            let w = pure.coefficients.diagonal();
                            c64(0.0, 0.7 * (w[0] * w[2]).sqrt())
                        };
                        let mixed = FamilyParams::new(n, t, p)
                            .unwrap()
                            .with_split(m)
                            .unwrap()
                            .with_coherence(0, 2, c02)
                            .unwrap();
                        let rho = ghz2(&mixed).unwrap();
                        let s = theorem2_spectrum(&mixed, mixed.coefficients.entropy()).unwrap();
                        let tc = total_correlation(&rho).unwrap();
                        assert!((s.sum() - tc).abs() < 1e-9, "n {n} m {m} t {t} p {p}");
                        assert!(s.values.values().all(|&v| v >= -1e-9));

                        let pure2 = pure.clone().with_split(m).unwrap();
                        let s = theorem2_spectrum(&pure2, 0.0).unwrap();
                        let tc = total_correlation(&ghz2_pure(n, m, t, p).unwrap()).unwrap();
                        assert!((s.sum() - tc).abs() < 1e-9);
                    }
                }
            }
            for alpha in [0.1, 0.3, 0.6, 0.8, alpha_max()] {
                let s = theorem3_spectrum(n, alpha).unwrap();
                let tc = total_correlation(&ms_state(n, alpha).unwrap()).unwrap();
                assert!((s.sum() - tc).abs() < 1e-9, "n {n} alpha {alpha}");
            }
        }
    }
}
