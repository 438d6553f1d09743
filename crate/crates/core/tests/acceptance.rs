//! Acceptance suite: projector identities, dimension oracles, convergence
//! rates, diagnostics uniformity, and determinism, each reported with one
//! PASS/FAIL line (run with `--nocapture` to see them).

use nalgebra::DVector;
use polyvem::element::DofKind;
use polyvem::femsolve::{
    convergence, convergence_csv, interpolate, manufactured, run_problem, run_quad_degree,
    sample_diagnostics, InterpolationMode, ManufacturedCase, SolveOptions,
};
use polyvem::meshgeom::generate::{
    cube_grid, interval_mesh, random_box_cell, random_interval_cell, random_polygon_cell,
    random_prism_cell, square_grid,
};
use polyvem::{
    DofVector, ElementCache, ElementConfig, GlobalDofMap, LocalElement, PolyCoeffs, PolytopalMesh,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn verdict(id: usize, desc: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {id} ({desc}): {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {id} ({desc}) failed: {detail}");
}

/// All supported (m, k) pairs in dimension `n` (with the degree capped at
/// m + 3 in 1d, where the family is otherwise unbounded).
fn supported_configs(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    match n {
        1 => {
            for m in 1..=4 {
                for k in m..=m + 3 {
                    out.push((m, k));
                }
            }
        }
        2 => {
            for m in 1..=3 {
                for k in m..=m + 3 {
                    out.push((m, k));
                }
            }
        }
        3 => {
            for m in 1..=2 {
                for k in m.max(1)..=3 {
                    if k >= m {
                        out.push((m, k));
                    }
                }
            }
        }
        _ => {}
    }
    out
}

/// 200 random star-shaped single-cell meshes: 60 intervals, 80 polygons,
/// 30 boxes, 30 prisms.
fn random_cells(seed: u64) -> Vec<PolytopalMesh> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cells = Vec::with_capacity(200);
    for _ in 0..60 {
        cells.push(random_interval_cell(&mut rng).unwrap());
    }
    for _ in 0..80 {
        cells.push(random_polygon_cell(&mut rng).unwrap());
    }
    for _ in 0..30 {
        cells.push(random_box_cell(&mut rng).unwrap());
    }
    for _ in 0..30 {
        cells.push(random_prism_cell(&mut rng).unwrap());
    }
    cells
}

fn random_poly(elem: &LocalElement, rng: &mut impl Rng) -> PolyCoeffs {
    let coeffs: Vec<f64> = (0..elem.basis.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    PolyCoeffs::new(elem.basis.clone(), coeffs)
}

fn coeff_defect(a: &[f64], b: &[f64]) -> f64 {
    let scale = 1.0 + a.iter().chain(b).fold(0.0f64, |s, v| s.max(v.abs()));
    let n = a.len().max(b.len());
    let get = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    (0..n).map(|i| (get(a, i) - get(b, i)).abs()).fold(0.0f64, f64::max) / scale
}

/// Worst projector-reproduction defect over random polynomials on the given
/// cells under all supported configs of their dimension.
fn reproduction_defect(cells: &[PolytopalMesh], seed: u64) -> f64 {
    use rayon::prelude::*;
    cells
        .par_iter()
        .enumerate()
        .map(|(ci, mesh)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed + ci as u64);
            let mut worst = 0.0f64;
            for &(m, k) in &supported_configs(mesh.dim) {
                let config = ElementConfig::new(mesh.dim, m, k).unwrap();
                let cache = ElementCache::new();
                let elem = LocalElement::build(mesh, 0, &config, &cache).unwrap();
                let q = random_poly(&elem, &mut rng);
                let dofs = elem.dof_map(&q).unwrap();
                let piq = elem.pi_projector(&dofs);
                worst = worst.max(coeff_defect(piq.coeffs(), q.coeffs()));
            }
            worst
        })
        .reduce(|| 0.0, f64::max)
}

#[test]
fn criterion_1_projector_reproduction() {
    let start = Instant::now();
    let cells = random_cells(101);
    let worst = reproduction_defect(&cells, 202);
    let secs = start.elapsed().as_secs_f64();
    verdict(
        1,
        "projector reproduces P_k",
        worst <= 1e-9 && secs < 60.0,
        &format!("max relative defect {worst:.3e} on 200 random elements in {secs:.1}s"),
    );
}

#[test]
fn criterion_2_l2_projector_identities() {
    let cells = random_cells(303);
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst_id = 0.0f64;
    let mut worst_ker = 0.0f64;
    for mesh in cells.iter().step_by(4) {
        for &(m, k) in &supported_configs(mesh.dim) {
            let config = ElementConfig::new(mesh.dim, m, k).unwrap();
            let cache = ElementCache::new();
            let elem = LocalElement::build(mesh, 0, &config, &cache).unwrap();
            // identity on P_k
            let q = random_poly(&elem, &mut rng);
            let qq = elem.l2_projector(&elem.dof_map(&q).unwrap());
            worst_id = worst_id.max(coeff_defect(qq.coeffs(), q.coeffs()));
            // on ker(Pi): Q_k v = Q_{k-2m} v (the interior-moment part)
            let n = elem.layout.len();
            let v = DVector::from_iterator(n, (0..n).map(|_| rng.gen_range(-1.0..1.0)));
            let pi = &elem.pi_star * &v;
            let w = &v - &elem.d * pi; // dof vector with Pi w = 0
            let qw = elem.l2_projector(&DofVector::new(elem.layout.clone(), w.clone()));
            let mut low = vec![0.0; elem.basis.len()];
            for (i, kind) in elem.layout.dofs.iter().enumerate() {
                if let DofKind::InteriorMoment { test } = kind {
                    let o = &elem.interior_tests()[*test];
                    for (c, oc) in low.iter_mut().zip(o.coeffs()) {
                        *c += w[i] * oc;
                    }
                }
            }
            worst_ker = worst_ker.max(coeff_defect(qw.coeffs(), &low));
        }
    }
    verdict(
        2,
        "L2 projector identity and kernel form",
        worst_id <= 1e-9 && worst_ker <= 1e-9,
        &format!("identity defect {worst_id:.3e}, kernel defect {worst_ker:.3e}"),
    );
}

#[test]
fn criterion_3_consistency_and_definiteness() {
    let cells = random_cells(505);
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut worst_cons = 0.0f64;
    let mut min_eig = f64::MAX;
    for mesh in cells.iter().step_by(4) {
        for &(m, k) in &supported_configs(mesh.dim) {
            let config = ElementConfig::new(mesh.dim, m, k).unwrap();
            let cache = ElementCache::new();
            let elem = LocalElement::build(mesh, 0, &config, &cache).unwrap();
            let nk = elem.basis.len();
            let p = DVector::from_iterator(nk, (0..nk).map(|_| rng.gen_range(-1.0..1.0)));
            let q = DVector::from_iterator(nk, (0..nk).map(|_| rng.gen_range(-1.0..1.0)));
            let exact_form = &elem.g_m + &elem.mass;
            let exact = (&exact_form * &q).dot(&p);
            let dp = &elem.d * &p;
            let dq = &elem.d * &q;
            let approx = (&elem.a_loc * dq).dot(&dp);
            let np = ((&exact_form * &p).dot(&p)).abs().sqrt();
            let nq = ((&exact_form * &q).dot(&q)).abs().sqrt();
            worst_cons = worst_cons.max((approx - exact).abs() / (np * nq + 1.0));
            let eig = elem.a_loc.clone().symmetric_eigen();
            min_eig = min_eig.min(eig.eigenvalues.iter().cloned().fold(f64::MAX, f64::min));
        }
    }
    verdict(
        3,
        "a_h consistency on P_k and positive definiteness",
        worst_cons <= 1e-9 && min_eig > 0.0,
        &format!("consistency defect {worst_cons:.3e}, min eigenvalue {min_eig:.3e}"),
    );
}

#[test]
fn criterion_4_dimension_oracles() {
    // triangle, m = k = 2: 3 vertices x dim P_1(R^2) = 9 dofs
    let tri = PolytopalMesh::from_polygons(
        vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.3, 0.9]],
        vec![vec![0, 1, 2]],
    )
    .unwrap();
    let cache = ElementCache::new();
    let elem = LocalElement::build(&tri, 0, &ElementConfig::new(2, 2, 2).unwrap(), &cache).unwrap();
    let tri_ok = elem.layout.len() == 9;

    // 1d: the local space is P_{max(k, 2m-1)}, so that many dofs
    let seg = interval_mesh(1).unwrap();
    let mut seg_ok = true;
    let mut detail_1d = String::new();
    for (m, k) in [(1usize, 1usize), (2, 2), (2, 4), (3, 3), (4, 4)] {
        let cache = ElementCache::new();
        let e = LocalElement::build(&seg, 0, &ElementConfig::new(1, m, k).unwrap(), &cache)
            .unwrap();
        let expect = k.max(2 * m - 1) + 1;
        if e.layout.len() != expect {
            seg_ok = false;
            detail_1d = format!(" (1d m={m} k={k}: {} vs {expect})", e.layout.len());
        }
    }
    verdict(
        4,
        "dof-count oracles",
        tri_ok && seg_ok,
        &format!("triangle m=k=2 has {} dofs (expect 9){detail_1d}", elem.layout.len()),
    );
}

/// Observed rate: the better of the overall coarsest-to-finest slope and
/// the slope between the two finest levels (the latter discounts
/// preasymptotic coarse levels).
fn overall_rate(errs: &[(f64, f64)]) -> f64 {
    let slope = |(h0, e0): (f64, f64), (h1, e1): (f64, f64)| (e0 / e1).ln() / (h0 / h1).ln();
    let full = slope(errs[0], *errs.last().unwrap());
    let last = slope(errs[errs.len() - 2], errs[errs.len() - 1]);
    full.max(last)
}

fn grid_family(n: usize, sizes: &[usize]) -> Vec<PolytopalMesh> {
    sizes
        .iter()
        .map(|&s| match n {
            1 => interval_mesh(s).unwrap(),
            2 => square_grid(s).unwrap(),
            3 => cube_grid(s).unwrap(),
            _ => unreachable!(),
        })
        .collect()
}

#[test]
fn criterion_5_convergence_rates() {
    let sizes = [8usize, 16, 32, 64];
    let cases_2d = [(1usize, 1usize), (1, 2), (2, 2), (2, 3), (3, 3)];
    let cases_1d = [(1usize, 1usize), (2, 2), (2, 3)];
    let mut all_ok = true;
    let mut details = Vec::new();
    for (n, cases) in [(2usize, &cases_2d[..]), (1usize, &cases_1d[..])] {
        let meshes = grid_family(n, &sizes);
        for &(m, k) in cases {
            let config = ElementConfig::new(n, m, k).unwrap();
            let problem = manufactured(ManufacturedCase::Bump, n, m).unwrap();
            let rows =
                convergence(&meshes, &config, &problem, &SolveOptions::default(), None).unwrap();
            let hm: Vec<(f64, f64)> = rows.iter().map(|r| (r.h, r.e_hm)).collect();
            let l2: Vec<(f64, f64)> = rows.iter().map(|r| (r.h, r.e_l2)).collect();
            let (rate_hm, rate_l2) = (overall_rate(&hm), overall_rate(&l2));
            let target = (k + 1 - m) as f64 - 0.2;
            let ok = rate_hm >= target && rate_l2 >= target;
            all_ok &= ok;
            details.push(format!(
                "n={n} m={m} k={k}: Hm {rate_hm:.2}, L2 {rate_l2:.2} (target {target:.1})"
            ));
        }
    }
    verdict(5, "convergence rates for the bump solution", all_ok, &details.join("; "));
}

#[test]
fn criterion_6_interpolation_rates() {
    let sizes = [8usize, 16, 32, 64];
    let cases_2d = [(1usize, 1usize), (1, 2), (2, 2), (2, 3), (3, 3)];
    let cases_1d = [(1usize, 1usize), (2, 2), (2, 3)];
    let mut all_ok = true;
    let mut details = Vec::new();
    for (n, cases) in [(2usize, &cases_2d[..]), (1usize, &cases_1d[..])] {
        let meshes = grid_family(n, &sizes);
        for &(m, k) in cases {
            let config = ElementConfig::new(n, m, k).unwrap();
            let problem = manufactured(ManufacturedCase::Bump, n, m).unwrap();
            let quad = run_quad_degree(&config, &problem);
            let mut errs = Vec::new();
            for mesh in &meshes {
                let elems = polyvem::femsolve::build_elements(mesh, &config).unwrap();
                let dofmap = GlobalDofMap::new(mesh, &config);
                let ih = interpolate(
                    mesh,
                    &elems,
                    &dofmap,
                    problem.u.as_ref(),
                    InterpolationMode::Averaged,
                    quad,
                )
                .unwrap();
                let rep = polyvem::femsolve::error_norms(
                    mesh,
                    &elems,
                    &dofmap,
                    &ih,
                    problem.u.as_ref(),
                    None,
                    quad,
                )
                .unwrap();
                errs.push((rep.h, rep.hm()));
            }
            let rate = overall_rate(&errs);
            let target = (k + 1 - m) as f64 - 0.2;
            all_ok &= rate >= target;
            details.push(format!("n={n} m={m} k={k}: {rate:.2} (target {target:.1})"));
        }
    }
    verdict(6, "interpolation error rates", all_ok, &details.join("; "));
}

#[test]
fn criterion_7_three_dimensions() {
    // m = 1, k = 1 convergence on cube grids
    let meshes = grid_family(3, &[2, 4, 8]);
    let config = ElementConfig::new(3, 1, 1).unwrap();
    let problem = manufactured(ManufacturedCase::Bump, 3, 1).unwrap();
    let mut errs = Vec::new();
    for mesh in &meshes {
        let rep = run_problem(mesh, &config, &problem, &SolveOptions::default(), None).unwrap();
        errs.push((rep.h, rep.hm()));
    }
    let rate = overall_rate(&errs);

    // m = 2, k in {2, 3}: projector, L2, consistency checks on random cells
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut worst = 0.0f64;
    let mut min_eig = f64::MAX;
    for _ in 0..10 {
        let mesh = if rng.gen_bool(0.5) {
            random_box_cell(&mut rng).unwrap()
        } else {
            random_prism_cell(&mut rng).unwrap()
        };
        for k in [2usize, 3] {
            let config = ElementConfig::new(3, 2, k).unwrap();
            let cache = ElementCache::new();
            let elem = LocalElement::build(&mesh, 0, &config, &cache).unwrap();
            let q = random_poly(&elem, &mut rng);
            let dofs = elem.dof_map(&q).unwrap();
            worst = worst.max(coeff_defect(elem.pi_projector(&dofs).coeffs(), q.coeffs()));
            worst = worst.max(coeff_defect(elem.l2_projector(&dofs).coeffs(), q.coeffs()));
            let nk = elem.basis.len();
            let p = DVector::from_iterator(nk, (0..nk).map(|_| rng.gen_range(-1.0..1.0)));
            let exact_form = &elem.g_m + &elem.mass;
            let exact = (&exact_form * &p).dot(&p);
            let dp = &elem.d * &p;
            let approx = (&elem.a_loc * &dp).dot(&dp);
            worst = worst.max((approx - exact).abs() / (exact.abs() + 1.0));
            let eig = elem.a_loc.clone().symmetric_eigen();
            min_eig = min_eig.min(eig.eigenvalues.iter().cloned().fold(f64::MAX, f64::min));
        }
    }
    verdict(
        7,
        "3d convergence (m=1) and element identities (m=2)",
        rate >= 0.8 && worst <= 1e-9 && min_eig > 0.0,
        &format!("H1 rate {rate:.2} (target 0.8), m=2 defect {worst:.3e}, min eig {min_eig:.3e}"),
    );
}

#[test]
fn criterion_8_diagnostics_uniformity() {
    let mut all_ok = true;
    let mut details = Vec::new();
    for (m, k) in [(1usize, 1usize), (2, 2)] {
        let config = ElementConfig::new(2, m, k).unwrap();
        let coarse = sample_diagnostics(&square_grid(8).unwrap(), &config).unwrap();
        let fine = sample_diagnostics(&square_grid(64).unwrap(), &config).unwrap();
        let drift = |a: f64, b: f64| (a / b).max(b / a);
        let d1 = drift(coarse.inverse_constant, fine.inverse_constant);
        let d2 = drift(coarse.ratio_min, fine.ratio_min);
        let d3 = drift(coarse.ratio_max, fine.ratio_max);
        let worst = d1.max(d2).max(d3);
        all_ok &= worst <= 2.0;
        details.push(format!("m={m} k={k}: max drift {worst:.3}"));
    }
    verdict(
        8,
        "inverse/norm-equivalence constants uniform in h",
        all_ok,
        &details.join("; "),
    );
}

#[test]
fn criterion_9_thread_determinism() {
    let config = ElementConfig::new(2, 2, 3).unwrap();
    let problem = manufactured(ManufacturedCase::Bump, 2, 2).unwrap();
    let meshes = grid_family(2, &[4, 8]);
    let mut outputs = Vec::new();
    for threads in [1usize, 4, 8] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let csv = pool.install(|| {
            let rows =
                convergence(&meshes, &config, &problem, &SolveOptions::default(), None).unwrap();
            convergence_csv(&rows)
        });
        outputs.push(csv);
    }
    let same = outputs[0] == outputs[1] && outputs[1] == outputs[2];
    verdict(
        9,
        "convergence CSV independent of thread count",
        same,
        &format!("{} CSV bytes identical across 1/4/8 threads", outputs[0].len()),
    );
}
