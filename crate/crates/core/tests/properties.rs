use std::collections::BTreeSet;

use collinv::dispersion::DEFAULT_EPS0;
use collinv::verifier::DEFAULT_MARGIN;
use collinv::{
    build_constraint_matrix, compute_ab, degeneracy_profile, enumerate_quadruples, fit_affine,
    Admissibility, BumpTestFunction, EnumerationOptions, GridFunction, GridSpec, Model,
};
use proptest::prelude::*;

fn model() -> impl Strategy<Value = Model> {
    prop_oneof![
        Just(Model::NearestNeighbor),
        (0.1f64..2.0).prop_map(Model::Gapped),
    ]
}

/// Dyadic coordinates, so `k + m` and `−k` are exact in floating point.
fn dyadic(d: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec((-512i32..512).prop_map(|i| i as f64 / 1024.0), d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn omega_is_periodic(m in model(), k in dyadic(2), shift in proptest::collection::vec(-3i32..=3, 2)) {
        let disp = m.build(2).unwrap();
        let moved: Vec<f64> = k.iter().zip(&shift).map(|(x, s)| x + *s as f64).collect();
        prop_assert_eq!(disp.omega(&k).unwrap(), disp.omega(&moved).unwrap());
    }

    #[test]
    fn omega_is_even(m in model(), k in dyadic(3)) {
        let disp = m.build(3).unwrap();
        let neg: Vec<f64> = k.iter().map(|x| -x).collect();
        prop_assert_eq!(disp.omega(&k).unwrap(), disp.omega(&neg).unwrap());
    }

    #[test]
    fn gradient_is_odd(k in dyadic(2)) {
        let disp = Model::Gapped(0.5).build(2).unwrap();
        let neg: Vec<f64> = k.iter().map(|x| -x).collect();
        let (g, h) = (disp.gradient(&k, DEFAULT_EPS0).unwrap(), disp.gradient(&neg, DEFAULT_EPS0).unwrap());
        for (a, b) in g.iter().zip(&h) {
            prop_assert_eq!(*a, -b);
        }
    }

    #[test]
    fn collision_sets_grow_with_tolerance(n in 3usize..9, lo in 0.0f64..0.5, extra in 0.0f64..0.5) {
        let disp = Model::NearestNeighbor.build(2).unwrap();
        let grid = GridSpec::centered(2, n).unwrap();
        let set = |eps| -> BTreeSet<[usize; 4]> {
            enumerate_quadruples(&disp, &grid, &EnumerationOptions::new(eps))
                .unwrap()
                .quads
                .iter()
                .map(|q| q.indices())
                .collect()
        };
        let (small, large) = (set(lo.max(1e-9)), set(lo.max(1e-9) + extra));
        prop_assert!(small.is_subset(&large));
    }

    #[test]
    fn constants_and_energy_are_near_null(n in 3usize..9, eps in 0.01f64..0.5) {
        let disp = Model::NearestNeighbor.build(2).unwrap();
        let grid = GridSpec::centered(2, n).unwrap();
        let qs = enumerate_quadruples(&disp, &grid, &EnumerationOptions::new(eps)).unwrap();
        prop_assume!(!qs.is_empty());
        let m = build_constraint_matrix(&qs);
        prop_assert!(m.mul_vec(&vec![1.0; grid.len()]).iter().all(|r| *r == 0.0));
        let omega = disp.sample(&grid).unwrap();
        prop_assert!(m.mul_vec(omega.values()).iter().all(|r| r.abs() <= eps * (1.0 + 1e-12)));
    }

    #[test]
    fn degeneracy_fractions_are_monotone(m in model(), n in 4usize..24, mut deltas in proptest::collection::vec(1e-6f64..1.0, 1..6)) {
        deltas.sort_by(f64::total_cmp);
        deltas.dedup();
        let disp = m.build(2).unwrap();
        let grid = GridSpec::centered(2, n).unwrap();
        let prof = degeneracy_profile(&disp, &grid, &deltas, DEFAULT_EPS0).unwrap();
        prop_assert!(prof.fractions.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(prof.fractions.iter().all(|f| (0.0..=1.0).contains(f)));
    }

    #[test]
    fn affine_fit_recovers_coefficients(a in -5.0f64..5.0, c in -5.0f64..5.0, n in 4usize..20) {
        let disp = Model::NearestNeighbor.build(2).unwrap();
        let omega = disp.sample(&GridSpec::centered(2, n).unwrap()).unwrap();
        let psi = omega.map(|w| a * w + c).unwrap();
        let fit = fit_affine(&psi, &omega, a).unwrap();
        prop_assert!((fit.c - c).abs() < 1e-12);
        prop_assert!(fit.residual_linf < 1e-12);
    }

    #[test]
    fn moments_are_linear_in_the_candidate(s in -3.0f64..3.0, cx in 0.2f64..0.3, cy in -0.3f64..0.3, w in 0.1f64..0.18) {
        let disp = Model::NearestNeighbor.build(2).unwrap();
        let grid = GridSpec::centered(2, 32).unwrap();
        let omega = disp.sample(&grid).unwrap();
        let adm = Admissibility::from_dispersion(&disp, &grid, DEFAULT_EPS0, DEFAULT_MARGIN).unwrap();
        let f = BumpTestFunction::new(vec![cx, cy], vec![w, w]).unwrap();
        prop_assume!(adm.check(&f).is_ok());
        let sq = omega.map(|v| v * v).unwrap();
        let mix = GridFunction::new(grid, omega.values().iter().zip(sq.values()).map(|(a, b)| s * a + b).collect()).unwrap();
        let (m1, m2, m3) = (
            compute_ab(&omega, &omega, &f, &adm).unwrap(),
            compute_ab(&sq, &omega, &f, &adm).unwrap(),
            compute_ab(&mix, &omega, &f, &adm).unwrap(),
        );
        let expect = &m1.a * s + &m2.a;
        prop_assert!((m3.a - &expect).amax() <= 1e-12 * expect.amax().max(1.0));
    }

    #[test]
    fn bump_vanishes_off_support(c in dyadic(2), off in 1.0f64..3.0, axis in 0usize..2) {
        let f = BumpTestFunction::new(c.clone(), vec![0.1, 0.1]).unwrap();
        let mut k = c;
        k[axis] += 0.1 * off;
        let jet = f.jet(&k);
        prop_assert_eq!(jet.value, 0.0);
        prop_assert!(jet.grad.iter().chain(jet.hess.iter()).all(|x| *x == 0.0));
    }
}
