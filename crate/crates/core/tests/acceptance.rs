//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use collinv::dispersion::DEFAULT_EPS0;
use collinv::verifier::{residual_tolerance, DEFAULT_KAPPA_MAX, DEFAULT_MARGIN};
use collinv::{
    build_constraint_matrix, check_moment_relation, check_nonconserving_reduction,
    compare_to_affine_span, compute_invariant_basis, default_epsilon_e,
    default_reduction_epsilon_e, default_sigma_tol, enumerate_3to1, enumerate_quadruples,
    residual_stats, verify_candidate, verify_ibp_identity, Admissibility, BasisOptions, BumpFamily,
    EnumerationOptions, FamilyOptions, FourierDispersion, GridFunction, GridSpec, Model, SmoothPhi,
    Verdict,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit_s: u64) -> bool {
    elapsed <= Duration::from_secs(limit_s)
}

fn nn(d: usize) -> FourierDispersion {
    Model::NearestNeighbor.build(d).unwrap()
}

struct Verifier {
    omega: GridFunction,
    adm: Admissibility,
    family: BumpFamily,
}

fn verifier_setup(disp: &FourierDispersion, n: usize) -> Verifier {
    let grid = GridSpec::centered(disp.dim(), n).unwrap();
    let omega = disp.sample(&grid).unwrap();
    let adm = Admissibility::from_dispersion(disp, &grid, DEFAULT_EPS0, DEFAULT_MARGIN).unwrap();
    let family = BumpFamily::generate(&omega, &adm, &FamilyOptions::default()).unwrap();
    Verifier { omega, adm, family }
}

fn a1() -> Outcome {
    let start = Instant::now();
    let disp = nn(2);
    let grid = GridSpec::centered(2, 12).unwrap();
    let eps = default_epsilon_e(&disp, &grid, DEFAULT_EPS0).map_err(|e| e.to_string())?;
    let qs = enumerate_quadruples(&disp, &grid, &EnumerationOptions::new(eps))
        .map_err(|e| e.to_string())?;
    let m = build_constraint_matrix(&qs);
    let omega = disp.sample(&grid).unwrap();
    let tol = default_sigma_tol(eps, m.rows(), &omega);
    let basis = compute_invariant_basis(&m, &BasisOptions::new(tol)).map_err(|e| e.to_string())?;
    let cmp = compare_to_affine_span(&basis, &omega).map_err(|e| e.to_string())?;
    let gap = basis.spectral_gap.unwrap_or(0.0);
    let elapsed = start.elapsed();
    let trailing: Vec<String> = basis
        .singular_values
        .iter()
        .take(5)
        .map(|s| format!("{s:.3e}"))
        .collect();
    check(
        cmp.contains_constant >= 0.99 && cmp.contains_omega >= 0.99 && gap >= 10.0 && within(elapsed, 60),
        format!(
            "eps_e={eps:.4} quads={} sigma_tol={tol:.3e} dim={} sigma=[{}] gap={gap:.2} const={:.6} omega={:.6} {:.2?}",
            qs.len(),
            basis.dimension(),
            trailing.join(", "),
            cmp.contains_constant,
            cmp.contains_omega,
            elapsed
        ),
    )
}

fn a2() -> Outcome {
    let start = Instant::now();
    let v = verifier_setup(&nn(2), 64);
    let psi = v.omega.map(|w| 3.0 * w + 2.0).unwrap();
    let rep = verify_candidate(&psi, &v.omega, &v.family.members, &v.adm, DEFAULT_KAPPA_MAX)
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    check(
        (rep.a_est - 3.0).abs() <= 1e-3
            && (rep.c_est - 2.0).abs() <= 1e-3
            && rep.offdiag_max <= 3e-3
            && rep.verdict == Verdict::Affine
            && within(elapsed, 10),
        format!(
            "a_est={:.9} c_est={:.9} a_spread={:.2e} offdiag={:.2e} verdict={} bumps={} {elapsed:.2?}",
            rep.a_est, rep.c_est, rep.a_spread, rep.offdiag_max, rep.verdict, rep.family_size
        ),
    )
}

fn a3() -> Outcome {
    let start = Instant::now();
    let disp = nn(2);
    let v = verifier_setup(&disp, 64);
    let (f1, f2) = (&v.family.members[0], &v.family.members[1]);
    let run = |r| {
        verify_ibp_identity(
            &disp,
            SmoothPhi::EpsSq,
            f1,
            f2,
            0,
            1,
            r,
            &v.adm,
            DEFAULT_EPS0,
        )
    };
    let coarse = run(32).map_err(|e| e.to_string())?;
    let fine = run(64).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    check(
        coarse.rel_diff <= 1e-6 && fine.rel_diff < coarse.rel_diff && within(elapsed, 60),
        format!(
            "lhs={:.12e} rhs={:.12e} rel_diff(32)={:.3e} rel_diff(64)={:.3e} {elapsed:.2?}",
            coarse.lhs, coarse.rhs, coarse.rel_diff, fine.rel_diff
        ),
    )
}

fn a4() -> Outcome {
    let disp = nn(2);
    let grid = GridSpec::centered(2, 12).unwrap();
    let eps = default_epsilon_e(&disp, &grid, DEFAULT_EPS0).unwrap();
    let qs = enumerate_quadruples(&disp, &grid, &EnumerationOptions::new(eps)).unwrap();
    let sq = disp.sample(&grid).unwrap().map(|w| w * w).unwrap();
    let stats = residual_stats(&sq, &qs).unwrap();

    let v = verifier_setup(&disp, 64);
    let psi = v.omega.map(|w| w * w).unwrap();
    let rep = verify_candidate(&psi, &v.omega, &v.family.members, &v.adm, DEFAULT_KAPPA_MAX)
        .map_err(|e| e.to_string())?;
    check(
        stats.max_abs > 5.0 * eps && rep.verdict == Verdict::NonAffine,
        format!(
            "max_abs={:.4} (5*eps_e={:.4}) verdict={} a_spread={:.3e} residual_linf={:.3e} (tau_r={:.3e})",
            stats.max_abs,
            5.0 * eps,
            rep.verdict,
            rep.a_spread,
            rep.residual_linf,
            residual_tolerance(&v.omega)
        ),
    )
}

fn a5() -> Outcome {
    let disp = nn(2);
    let grid = GridSpec::centered(2, 8).unwrap();
    let eps = default_reduction_epsilon_e(&disp, &grid, DEFAULT_EPS0).unwrap();
    let ts =
        enumerate_3to1(&disp, &grid, &EnumerationOptions::new(eps)).map_err(|e| e.to_string())?;
    let omega = disp.sample(&grid).unwrap();
    let shifted = check_nonconserving_reduction(&omega.map(|w| w + 2.0).unwrap(), &ts).unwrap();
    let plain = check_nonconserving_reduction(&omega, &ts).unwrap();
    check(
        !ts.is_empty()
            && (shifted.inferred_c() - 2.0).abs() <= 3.0 * eps
            && plain.inferred_c().abs() <= eps,
        format!(
            "eps_e={eps:.4} triples={} inferred_c(omega+2)={:.6} inferred_c(omega)={:.6}",
            ts.len(),
            shifted.inferred_c(),
            plain.inferred_c()
        ),
    )
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a
        .iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    diff / scale
}

fn a6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_grad: f64 = 0.0;
    let mut worst_hess: f64 = 0.0;
    let models = [
        (Model::NearestNeighbor, 2),
        (Model::NearestNeighbor, 3),
        (Model::Gapped(0.5), 2),
    ];
    for (model, d) in models {
        let disp = model.build(d).unwrap();
        let mut accepted = 0;
        while accepted < 100 {
            let k: Vec<f64> = (0..d).map(|_| rng.random_range(-0.5..0.5)).collect();
            if disp.omega(&k).unwrap() < 0.1 {
                continue;
            }
            accepted += 1;
            let jet = disp.jet(&k, DEFAULT_EPS0).unwrap();
            let mut fd_grad = vec![0.0; d];
            let mut fd_hess = vec![0.0; d * d];
            for a in 0..d {
                let shifted = |h: f64| {
                    let mut kk = k.clone();
                    kk[a] += h;
                    kk
                };
                let h1 = 1e-6;
                fd_grad[a] = (disp.omega(&shifted(h1)).unwrap()
                    - disp.omega(&shifted(-h1)).unwrap())
                    / (2.0 * h1);
                let h2 = 1e-5;
                let gp = disp.gradient(&shifted(h2), DEFAULT_EPS0).unwrap();
                let gm = disp.gradient(&shifted(-h2), DEFAULT_EPS0).unwrap();
                for b in 0..d {
                    fd_hess[a * d + b] = (gp[b] - gm[b]) / (2.0 * h2);
                }
            }
            let hess: Vec<f64> = (0..d * d).map(|i| jet.hess[(i / d, i % d)]).collect();
            worst_grad = worst_grad.max(rel_err(&jet.grad, &fd_grad));
            worst_hess = worst_hess.max(rel_err(&hess, &fd_hess));
        }
    }
    check(
        worst_grad <= 1e-6 && worst_hess <= 1e-6,
        format!("points=300 max_rel_err grad={worst_grad:.3e} hess={worst_hess:.3e}"),
    )
}

fn a7() -> Outcome {
    let v = verifier_setup(&nn(2), 64);
    let (f1, f2) = (&v.family.members[0], &v.family.members[1]);
    let rel = |psi: &GridFunction| check_moment_relation(psi, &v.omega, f1, f2, &v.adm).unwrap();
    let affine = rel(&v.omega.map(|w| 2.0 * w - 1.0).unwrap());
    let baseline = rel(&v.omega);
    let sq = rel(&v.omega.map(|w| w * w).unwrap());
    let bound = 1e-10 * affine.a_norm * affine.b_tilde_norm;
    check(
        affine.max_abs_violation <= bound
            && sq.max_abs_violation >= 10.0 * baseline.max_abs_violation,
        format!(
            "affine={:.3e} (bound {bound:.3e}) omega={:.3e} omega^2={:.3e}",
            affine.max_abs_violation, baseline.max_abs_violation, sq.max_abs_violation
        ),
    )
}

/// Every ordered 4-tuple of grid points, momentum checked on the wave vectors.
fn brute_force(disp: &FourierDispersion, grid: &GridSpec, eps: f64) -> BTreeSet<[usize; 4]> {
    let p = grid.len();
    let pts: Vec<Vec<f64>> = grid.points().collect();
    let w: Vec<f64> = pts.iter().map(|k| disp.omega(k).unwrap()).collect();
    let mut out = BTreeSet::new();
    for i1 in 0..p {
        for i2 in 0..p {
            for i3 in 0..p {
                for i4 in 0..p {
                    if !(i1 <= i2 && i3 <= i4 && (i1, i2) < (i3, i4)) {
                        continue;
                    }
                    let momentum = (0..grid.dim).all(|j| {
                        let q = pts[i1][j] + pts[i2][j] - pts[i3][j] - pts[i4][j];
                        (q - q.round()).abs() < 1e-9
                    });
                    if momentum && (w[i1] + w[i2] - w[i3] - w[i4]).abs() <= eps {
                        out.insert([i1, i2, i3, i4]);
                    }
                }
            }
        }
    }
    out
}

fn a8() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for (d, model) in [
        (1, Model::NearestNeighbor),
        (2, Model::NearestNeighbor),
        (2, Model::Constant(1.0)),
    ] {
        let disp = model.build(d).unwrap();
        let grid = GridSpec::centered(d, 4).unwrap();
        let default = default_epsilon_e(&disp, &grid, DEFAULT_EPS0).unwrap();
        for eps in [default, 0.3, 1.0] {
            let fast: BTreeSet<[usize; 4]> =
                enumerate_quadruples(&disp, &grid, &EnumerationOptions::new(eps))
                    .unwrap()
                    .quads
                    .iter()
                    .map(|q| q.indices())
                    .collect();
            let slow = brute_force(&disp, &grid, eps);
            ok &= fast == slow;
            details.push(format!(
                "d={d} {model:?} eps={eps:.3}: {}/{}",
                fast.len(),
                slow.len()
            ));
        }
    }
    check(ok, details.join("; "))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("A1", a1),
        ("A2", a2),
        ("A3", a3),
        ("A4", a4),
        ("A5", a5),
        ("A6", a6),
        ("A7", a7),
        ("A8", a8),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("{name} PASS {detail}"),
            Err(detail) => {
                failed += 1;
                println!("{name} FAIL {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
