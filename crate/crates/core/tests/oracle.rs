use qorrel::families::{ghz1, FamilyParams};
use qorrel::maxent::{expectations, local_basis, regularized_spectrum, solve, SolverConfig};
use qorrel::tensor::{max_abs_diff, random_hermitian, CMatrix, DensityMatrix};
use qorrel::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_state(sites: usize, seed: u64) -> DensityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = 3usize.pow(sites as u32);
    let g = random_hermitian(d, &mut rng) + CMatrix::identity(d, d).scale(0.5);
    let rho = &g * g.adjoint() + CMatrix::identity(d, d).scale(0.05);
    let tr = rho.trace().re;
    DensityMatrix::new(rho.unscale(tr)).unwrap()
}

#[test]
fn dual_objective_never_increases() {
    let rho = random_state(3, 1);
    for level in 1..3 {
        let r = solve(&rho, level, &SolverConfig::default()).unwrap();
        assert!(r.objective_trace.len() >= 2);
        for w in r.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * (1.0 + w[0].abs()), "{w:?}");
        }
    }
}

#[test]
fn maxent_state_matches_moments_and_dominates_entropy() {
    let rho = random_state(3, 7);
    let config = SolverConfig::default();
    let mut previous = f64::INFINITY;
    for level in 1..=3 {
        let r = solve(&rho, level, &config).unwrap();
        let basis = local_basis(3, level).unwrap();
        let want = expectations(&rho, &basis).unwrap();
        let got = expectations(&r.sigma, &basis).unwrap();
        let gap = want.iter().zip(&got).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(gap <= 10.0 * config.grad_tol, "level {level}: moment gap {gap:e}");
        assert!(r.entropy >= rho.entropy() - 1e-9);
        // more constraints, less entropy
        assert!(r.entropy <= previous + 1e-9);
        previous = r.entropy;
    }
}

#[test]
fn full_level_is_a_fixed_point() {
    let rho = random_state(2, 3);
    let r = solve(&rho, 2, &SolverConfig::default()).unwrap();
    assert!(max_abs_diff(r.sigma.matrix(), rho.matrix()) < 1e-14);
    assert!((r.entropy - rho.entropy()).abs() < 1e-12);
}

#[test]
fn single_site_level_is_the_product_of_marginals() {
    let rho = random_state(2, 11);
    let r = solve(&rho, 1, &SolverConfig::default()).unwrap();
    let a = rho.partial_trace(&[0]).unwrap().entropy();
    let b = rho.partial_trace(&[1]).unwrap().entropy();
    assert!((r.entropy - (a + b)).abs() < 1e-6);
}

#[test]
fn rank_deficient_targets_are_refused() {
    let p = FamilyParams::pure(3, 0.5, 0.4).unwrap();
    let rho = ghz1(&p).unwrap();
    assert!(matches!(
        solve(&rho, 2, &SolverConfig::default()),
        Err(Error::RankDeficient(_))
    ));
    // the regularized path still works
    let o = regularized_spectrum(&rho, &SolverConfig::default()).unwrap();
    assert_eq!(o.runs.len(), 3);
}

#[test]
fn invalid_configs_are_rejected() {
    let rho = random_state(2, 5);
    let bad = SolverConfig {
        epsilon_schedule: vec![1e-3, 1e-2],
        ..SolverConfig::default()
    };
    assert!(regularized_spectrum(&rho, &bad).is_err());
    let bad = SolverConfig {
        armijo: 1.5,
        ..SolverConfig::default()
    };
    assert!(bad.validate().is_err());
}
