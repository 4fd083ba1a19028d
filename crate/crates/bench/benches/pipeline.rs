use std::hint::black_box;

use collinv::dispersion::DEFAULT_EPS0;
use collinv::verifier::DEFAULT_MARGIN;
use collinv::{
    build_constraint_matrix, compute_ab, compute_invariant_basis, default_epsilon_e,
    default_sigma_tol, enumerate_quadruples, verify_ibp_identity, Admissibility, BasisMethod,
    BasisOptions, BumpTestFunction, EnumerationOptions, GridSpec, Model, SmoothPhi,
};
use criterion::{criterion_group, criterion_main, Criterion};

fn enumeration(c: &mut Criterion) {
    let disp = Model::NearestNeighbor.build(2).unwrap();
    let mut group = c.benchmark_group("enumerate_quadruples");
    for n in [12, 24] {
        let grid = GridSpec::centered(2, n).unwrap();
        let eps = default_epsilon_e(&disp, &grid, DEFAULT_EPS0).unwrap();
        group.bench_function(format!("nn_d2_n{n}"), |b| {
            b.iter(|| enumerate_quadruples(&disp, &grid, &EnumerationOptions::new(eps)).unwrap())
        });
    }
    group.finish();
}

fn basis(c: &mut Criterion) {
    let disp = Model::NearestNeighbor.build(2).unwrap();
    let grid = GridSpec::centered(2, 12).unwrap();
    let eps = default_epsilon_e(&disp, &grid, DEFAULT_EPS0).unwrap();
    let m = build_constraint_matrix(
        &enumerate_quadruples(&disp, &grid, &EnumerationOptions::new(eps)).unwrap(),
    );
    let tol = default_sigma_tol(eps, m.rows(), &disp.sample(&grid).unwrap());
    let mut group = c.benchmark_group("invariant_basis_n12");
    for method in [BasisMethod::Dense, BasisMethod::Iterative] {
        let opts = BasisOptions {
            method,
            ..BasisOptions::new(tol)
        };
        group.bench_function(format!("{method:?}"), |b| {
            b.iter(|| compute_invariant_basis(&m, &opts).unwrap())
        });
    }
    group.finish();
}

fn verifier(c: &mut Criterion) {
    let disp = Model::NearestNeighbor.build(2).unwrap();
    let grid = GridSpec::centered(2, 64).unwrap();
    let omega = disp.sample(&grid).unwrap();
    let psi = omega.map(|w| 3.0 * w + 2.0).unwrap();
    let adm = Admissibility::from_dispersion(&disp, &grid, DEFAULT_EPS0, DEFAULT_MARGIN).unwrap();
    let f1 = BumpTestFunction::new(vec![0.25, 0.2], vec![0.15, 0.12]).unwrap();
    let f2 = BumpTestFunction::new(vec![-0.2, 0.28], vec![0.13, 0.17]).unwrap();
    c.bench_function("compute_ab_n64", |b| {
        b.iter(|| compute_ab(black_box(&psi), &omega, &f1, &adm).unwrap())
    });
    let mut group = c.benchmark_group("ibp_identity");
    group.sample_size(10);
    group.bench_function("eps_sq_r32", |b| {
        b.iter(|| {
            verify_ibp_identity(
                &disp,
                SmoothPhi::EpsSq,
                &f1,
                &f2,
                0,
                1,
                32,
                &adm,
                DEFAULT_EPS0,
            )
            .unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, enumeration, basis, verifier);
criterion_main!(benches);
