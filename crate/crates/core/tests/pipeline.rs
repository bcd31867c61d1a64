use num_complex::Complex64;
use proptest::prelude::*;

use rabi_qes::alpha::{alpha_branches, normalizability_integral};
use rabi_qes::bethe::{closed_form_level, consistency_solve, solve_states};
use rabi_qes::ode::raw_residual_pointwise;
use rabi_qes::{LambdaRatio, ModelParams, SolverConfig};

#[test]
fn consistency_states_solve_the_untransformed_equation() {
    let cfg = SolverConfig::default();
    let lambda = 0.25;
    let branch = alpha_branches(LambdaRatio::new(lambda).unwrap())[2];
    let mut checked = 0;
    for n in 0..=3 {
        let states = consistency_solve(n, branch, 1.0, lambda, 2.0, &cfg).unwrap();
        for s in states {
            let p = s.params(&ModelParams::new(0.0, 2.0, 1.0, lambda).unwrap()).unwrap();
            let phi = s.polynomial();
            for z in [Complex64::new(0.3, -0.2), Complex64::new(-0.7, 0.5), Complex64::new(0.0, 0.9)] {
                let r = raw_residual_pointwise(&p, s.energy, branch.value, &phi, z);
                assert!(r.norm() < 1e-7, "n={n} residual {r}");
            }
            let norm = normalizability_integral(branch.value, &phi, 12.0);
            assert!(norm.is_finite() && norm > 0.0);
            checked += 1;
        }
    }
    assert!(checked >= 6, "only {checked} states");
}

#[test]
fn inadmissible_branch_rejected() {
    let branch = alpha_branches(LambdaRatio::new(0.2).unwrap())[0];
    assert!(!branch.admissible);
    assert!(consistency_solve(0, branch, 1.0, 0.2, 0.0, &SolverConfig::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pipeline_agrees_with_closed_forms(lambda in 0.05f64..0.45, epsilon in -1.0f64..1.0) {
        let p = ModelParams::new(0.0, epsilon, 1.0, lambda).unwrap();
        let cfg = SolverConfig { seeds: 16, ..SolverConfig::default() };
        for b in alpha_branches(LambdaRatio::new(lambda).unwrap()).into_iter().filter(|b| b.admissible) {
            for n in [0, 1] {
                let (e, d2) = closed_form_level(n, b.value, &p).unwrap();
                let states = solve_states(n, b, &p, &cfg).unwrap();
                let hit = states.iter().find(|s| s.roots.iter().all(|z| z.norm() < 1e-10));
                let s = hit.expect("closed-form state is found");
                prop_assert!((s.energy - e).norm() < 1e-10);
                prop_assert!((s.delta_sq_required - d2).norm() < 1e-8 * (1.0 + d2.norm()));
                prop_assert!(s.verified);
            }
        }
    }
}
