//! Assembly of the local element matrices.
//!
//! The pipeline per element: orthonormal test polynomials -> dof layout ->
//! boundary trace machinery (edge trace solves in 2d, face sub-element dof
//! maps in 3d) -> dof values of the monomials -> integration-by-parts right
//! hand side of the energy projection -> saddle solve for `Pi` -> computable
//! `L^2` projection `Q` -> stabilization diagonal -> local bilinear form.

use super::geom::ElemGeom;
use super::{trace_degree, unit_poly, DofKind, DofLayout, ElementConfig, LocalElement};
use crate::error::{Result, VemError};
use crate::polyspace::{gram_matrix, orthonormalize, PolyCoeffs};
use crate::tensoralg::{
    dot, factorial, multi_indices, multi_indices_up_to, rotate_normal_bundle, MultiIndex, SymTensor,
};
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

pub(crate) fn build_layout(config: &ElementConfig, geom: &ElemGeom) -> DofLayout {
    let n = config.n;
    let m = config.m;
    let k = config.k as i32;
    let mut dofs = Vec::new();
    for v in &geom.vertices {
        for j in 0..m as u32 {
            for gamma in multi_indices(n, j) {
                dofs.push(DofKind::VertexDeriv { vertex: v.global, gamma });
            }
        }
    }
    for (ri, faces) in geom.faces.iter().enumerate() {
        let codim = ri + 1;
        let fdim = n - codim;
        for f in faces {
            for a in 0..m as u32 {
                let tdim = ElementConfig::poly_dim(fdim, k - 2 * m as i32 + a as i32);
                for alpha in multi_indices(codim, a) {
                    for test in 0..tdim {
                        dofs.push(DofKind::FaceMoment {
                            face_dim: fdim,
                            face: f.id,
                            alpha: alpha.clone(),
                            test,
                        });
                    }
                }
            }
        }
    }
    for test in 0..ElementConfig::poly_dim(n, k - 2 * m as i32) {
        dofs.push(DofKind::InteriorMoment { test });
    }
    let pos = dofs.iter().cloned().enumerate().map(|(i, d)| (d, i)).collect();
    DofLayout { config: *config, dofs, pos }
}

pub(crate) fn build_from_geom(
    geom: ElemGeom,
    config: ElementConfig,
    subs: Vec<Vec<Arc<LocalElement>>>,
) -> Result<LocalElement> {
    let n = config.n;
    let m = config.m;
    let k = config.k as i32;
    let basis = geom.moments.basis().with_degree(k);
    let nk = basis.len();

    let moments = geom.moments.clone();
    let lowb = basis.with_degree(k - 2 * m as i32);
    let ortho_interior = if lowb.is_empty() {
        Vec::new()
    } else {
        orthonormalize(&lowb, &|beta| moments.average(beta).expect("cell moments"))?
    };
    let mut ortho_face = Vec::new();
    for faces in &geom.faces {
        let mut per_face = Vec::new();
        for f in faces {
            let mut per_a = Vec::with_capacity(m);
            for a in 0..m as i32 {
                let fb = f.moments.basis().with_degree(k - 2 * m as i32 + a);
                let tests = if fb.is_empty() {
                    Vec::new()
                } else {
                    let fm = f.moments.clone();
                    orthonormalize(&fb, &|beta| fm.average(beta).expect("face moments"))?
                };
                per_a.push(tests);
            }
            per_face.push(per_a);
        }
        ortho_face.push(per_face);
    }

    let layout = Arc::new(build_layout(&config, &geom));
    let nn = layout.len();

    let mut elem = LocalElement {
        config,
        layout: layout.clone(),
        basis: basis.clone(),
        h: geom.h,
        measure: geom.measure,
        d: DMatrix::zeros(nn, nk),
        pi_star: DMatrix::zeros(nk, nn),
        b: DMatrix::zeros(nn, nn),
        q: DMatrix::zeros(nk, nn),
        s: DVector::zeros(nn),
        a_loc: DMatrix::zeros(nn, nn),
        g_m: DMatrix::zeros(nk, nk),
        mass: DMatrix::zeros(nk, nk),
        geom,
        ortho_interior,
        ortho_face,
        traces: Vec::new(),
        subs,
        sub_t: Vec::new(),
    };

    if n == 2 {
        elem.traces = trace_matrices(&elem)?;
    }
    if n == 3 {
        elem.sub_t = sub_t_matrices(&elem)?;
    }

    // dof values of the monomials
    for p in 0..nk {
        let col = elem.dof_map_values(&unit_poly(&elem.basis, p))?;
        elem.d.set_column(p, &col);
    }

    // monomial Gram matrices of the mass and m-th gradient inner products
    elem.mass = gram_matrix(&elem.basis, &|beta| {
        elem.geom.moments.get(beta).expect("cell moments")
    });
    let midx = multi_indices(n, m as u32);
    let mfac = factorial(m as u32);
    for i in 0..nk {
        let mi = unit_poly(&elem.basis, i);
        for j in i..nk {
            let mj = unit_poly(&elem.basis, j);
            let mut g = 0.0;
            for gamma in &midx {
                let di = mi.differentiate(gamma);
                let dj = mj.differentiate(gamma);
                g += mfac / gamma.factorial() * elem.geom.moments.integrate_product(&di, &dj)?;
            }
            elem.g_m[(i, j)] = g;
            elem.g_m[(j, i)] = g;
        }
    }

    let r = green_rhs(&elem)?;

    // energy projection: saddle system with vertex-average constraints that
    // fix the degree-(m-1) kernel of the m-th gradient
    let cons = multi_indices_up_to(n, m as i32 - 1);
    let ncon = cons.len();
    let mut cmat = DMatrix::zeros(ncon, nk);
    let mut cd = DMatrix::<f64>::zeros(ncon, nn);
    for (ci, gamma) in cons.iter().enumerate() {
        for c in 0..nk {
            let d = unit_poly(&elem.basis, c).differentiate(gamma);
            cmat[(ci, c)] = elem.geom.vertices.iter().map(|v| d.eval(&v.point)).sum();
        }
        for v in &elem.geom.vertices {
            let pos = layout
                .position(&DofKind::VertexDeriv { vertex: v.global, gamma: gamma.clone() })
                .expect("vertex dof");
            cd[(ci, pos)] = 1.0;
        }
    }
    let sz = nk + ncon;
    let mut sys = DMatrix::zeros(sz, sz);
    sys.view_mut((0, 0), (nk, nk)).copy_from(&elem.g_m);
    sys.view_mut((0, nk), (nk, ncon)).copy_from(&cmat.transpose());
    sys.view_mut((nk, 0), (ncon, nk)).copy_from(&cmat);
    let mut rhs = DMatrix::zeros(sz, nn);
    rhs.view_mut((0, 0), (nk, nn)).copy_from(&r);
    rhs.view_mut((nk, 0), (ncon, nn)).copy_from(&cd);
    let sol = sys
        .lu()
        .solve(&rhs)
        .ok_or_else(|| VemError::SingularLocalSystem("energy projection saddle system".into()))?;
    elem.pi_star = sol.view((0, 0), (nk, nn)).into();

    // computable L^2 projection Q = Pi + Q_low (I - Pi)
    let nlow = elem.ortho_interior.len();
    let mut omat = DMatrix::zeros(nk, nlow);
    let mut bavg = DMatrix::zeros(nlow, nk);
    for (i, oi) in elem.ortho_interior.iter().enumerate() {
        for (ci, &cv) in oi.coeffs().iter().enumerate() {
            omat[(ci, i)] = cv;
        }
        for c in 0..nk {
            bavg[(i, c)] =
                elem.geom.moments.integrate_product(oi, &unit_poly(&elem.basis, c))? / elem.measure;
        }
    }
    let mut eint = DMatrix::zeros(nk, nn);
    for i in 0..nlow {
        let pos = layout.position(&DofKind::InteriorMoment { test: i }).expect("interior dof");
        eint.set_column(pos, &omat.column(i));
    }
    elem.q = &elem.pi_star + eint - &omat * (&bavg * &elem.pi_star);

    // stabilization: diagonal dof weights restoring the natural scaling of
    // each functional relative to the m-th order energy
    for (i, kind) in layout.dofs.iter().enumerate() {
        let val = match kind {
            DofKind::VertexDeriv { gamma, .. } => {
                let j = gamma.order();
                elem.h.powi(n as i32 + 2 * j as i32 - 2 * m as i32) * factorial(j)
                    / gamma.factorial()
            }
            DofKind::FaceMoment { face_dim, face, alpha, .. } => {
                let codim = n - face_dim;
                let (_, f) = elem.face_entry(codim, *face)?;
                let a = alpha.order() as i32;
                elem.h.powi(codim as i32 + 2 * a - 2 * m as i32) * f.measure
            }
            DofKind::InteriorMoment { .. } => 0.0,
        };
        elem.s[i] = val;
    }

    // local bilinear form: consistent parts through the projections plus
    // stabilized remainders
    let bmat = &elem.d * &elem.pi_star;
    let eye = DMatrix::<f64>::identity(nn, nn);
    let sdiag = DMatrix::from_diagonal(&elem.s);
    let ib = &eye - &bmat;
    let idq = &eye - &elem.d * &elem.q;
    let a = elem.pi_star.transpose() * &elem.g_m * &elem.pi_star
        + ib.transpose() * &sdiag * &ib
        + elem.q.transpose() * &elem.mass * &elem.q
        + elem.h.powi(2 * m as i32) * idq.transpose() * &sdiag * &idq;
    elem.a_loc = (&a + a.transpose()) * 0.5;
    elem.b = bmat;
    Ok(elem)
}

/// Right hand side of the energy projection: `(grad^m v, grad^m m_p)_K`
/// expressed through dofs by repeated integration by parts.
fn green_rhs(elem: &LocalElement) -> Result<DMatrix<f64>> {
    let n = elem.config.n;
    let m = elem.config.m;
    let nk = elem.basis.len();
    let nn = elem.layout.len();
    let mut r = DMatrix::zeros(nk, nn);
    for p in 0..nk {
        let mp = unit_poly(&elem.basis, p);
        // volume term (v, (-lap)^m m_p) through the interior moments
        let u = mp.minus_laplacian_power(m);
        for (i, oi) in elem.ortho_interior.iter().enumerate() {
            let pos = elem
                .layout
                .position(&DofKind::InteriorMoment { test: i })
                .expect("interior dof");
            r[(p, pos)] += elem.geom.moments.integrate_product(&u, oi)?;
        }
        if n == 1 {
            let dq = mp.differentiate(&MultiIndex(vec![1]));
            for v in &elem.geom.vertices {
                for i in 0..m {
                    let g = dq
                        .minus_laplacian_power(m - 1 - i)
                        .differentiate(&MultiIndex(vec![i as u32]));
                    let pos = elem
                        .layout
                        .position(&DofKind::VertexDeriv {
                            vertex: v.global,
                            gamma: MultiIndex(vec![i as u32]),
                        })
                        .expect("vertex dof");
                    r[(p, pos)] += v.sign * g.eval(&v.point);
                }
            }
        } else {
            for (fi, f) in elem.geom.faces[0].iter().enumerate() {
                let qn = mp.directional_derivative(&f.normals[0]).scale(f.outward_sign);
                for i in 0..m {
                    let base = qn.minus_laplacian_power(m - 1 - i);
                    let psi: Vec<PolyCoeffs> = multi_indices(n, i as u32)
                        .iter()
                        .map(|g| {
                            base.differentiate(g).compose_affine(&f.offset, &f.axes, f.moments.basis())
                        })
                        .collect();
                    let row = elem.pair_face(fi, i, &psi)?;
                    for c in 0..nn {
                        r[(p, c)] += row[c];
                    }
                }
            }
        }
    }
    Ok(r)
}

/// Edge trace solves for `n = 2`: for each edge and each `j < m` the trace
/// `d^j v / d nu^j` on the edge is the unique polynomial of degree
/// `max(k-j, 2(m-j)-1)` matching the endpoint derivative dofs through order
/// `m-j-1` and the edge moment dofs of order `j`.
fn trace_matrices(elem: &LocalElement) -> Result<Vec<Vec<DMatrix<f64>>>> {
    let m = elem.config.m;
    let k = elem.config.k;
    let nn = elem.layout.len();
    let mut all = Vec::with_capacity(elem.geom.faces[0].len());
    for (fi, f) in elem.geom.faces[0].iter().enumerate() {
        let nu = &f.normals[0];
        let tv = &f.axes[0];
        let mut per_j = Vec::with_capacity(m);
        for j in 0..m {
            let eb = f.moments.basis().with_degree(trace_degree(m, k, j));
            let nb = eb.len();
            let mut lmat = DMatrix::zeros(nb, nb);
            let mut rmat = DMatrix::zeros(nb, nn);
            let mut row = 0;
            for &v in &f.vertices {
                let vi = elem
                    .geom
                    .vertex_index(v)
                    .ok_or_else(|| VemError::Mesh(format!("edge vertex {v} not on element")))?;
                let pt = &elem.geom.vertices[vi].point;
                let rel: Vec<f64> = pt.iter().zip(&f.offset).map(|(a, b)| a - b).collect();
                let sv = [dot(&rel, tv)];
                for i in 0..(m - j) {
                    let di = MultiIndex(vec![i as u32]);
                    for c in 0..nb {
                        lmat[(row, c)] = unit_poly(&eb, c).differentiate(&di).eval(&sv);
                    }
                    let p = (i + j) as u32;
                    let mut dirs: Vec<&[f64]> = Vec::with_capacity(i + j);
                    dirs.extend(std::iter::repeat(nu.as_slice()).take(j));
                    dirs.extend(std::iter::repeat(tv.as_slice()).take(i));
                    let sym = SymTensor::outer_sym(&dirs, 2);
                    for (gi, gamma) in multi_indices(2, p).iter().enumerate() {
                        let w = factorial(p) / gamma.factorial() * sym.components()[gi];
                        if w != 0.0 {
                            let pos = elem
                                .layout
                                .position(&DofKind::VertexDeriv { vertex: v, gamma: gamma.clone() })
                                .expect("vertex dof");
                            rmat[(row, pos)] += w;
                        }
                    }
                    row += 1;
                }
            }
            for (t, qt) in elem.ortho_face[0][fi][j].iter().enumerate() {
                for c in 0..nb {
                    lmat[(row, c)] =
                        f.moments.integrate_product(&unit_poly(&eb, c), qt)? / f.measure;
                }
                let pos = elem
                    .layout
                    .position(&DofKind::FaceMoment {
                        face_dim: 1,
                        face: f.id,
                        alpha: MultiIndex(vec![j as u32]),
                        test: t,
                    })
                    .expect("edge moment dof");
                rmat[(row, pos)] = 1.0;
                row += 1;
            }
            debug_assert_eq!(row, nb);
            let w = lmat
                .lu()
                .solve(&rmat)
                .ok_or_else(|| VemError::SingularLocalSystem("edge trace system".into()))?;
            per_j.push(w);
        }
        all.push(per_j);
    }
    Ok(all)
}

/// Dof maps from a 3d element onto its face sub-elements: the dofs of
/// `d^a v / d nu_F^a` as a function on the face are linear in the parent
/// dofs (vertex derivatives expand directionally, edge normal-derivative
/// bundles rotate into the in-plane/face-normal pair, interior face moments
/// are parent face moments).
fn sub_t_matrices(elem: &LocalElement) -> Result<Vec<Vec<DMatrix<f64>>>> {
    let m = elem.config.m;
    let nn = elem.layout.len();
    let mut all = Vec::with_capacity(elem.geom.faces[0].len());
    for (fi, f) in elem.geom.faces[0].iter().enumerate() {
        let nuf = &f.normals[0];
        let t1 = &f.axes[0];
        let t2 = &f.axes[1];
        let mut per_a = Vec::with_capacity(m);
        for a in 0..m {
            let sub = &elem.subs[fi][a];
            let mut t = DMatrix::zeros(sub.layout.len(), nn);
            for (si, kind) in sub.layout.dofs.iter().enumerate() {
                match kind {
                    DofKind::VertexDeriv { vertex, gamma } => {
                        let p = gamma.order() + a as u32;
                        let mut dirs: Vec<&[f64]> = Vec::with_capacity(p as usize);
                        dirs.extend(std::iter::repeat(nuf.as_slice()).take(a));
                        dirs.extend(std::iter::repeat(t1.as_slice()).take(gamma.0[0] as usize));
                        dirs.extend(std::iter::repeat(t2.as_slice()).take(gamma.0[1] as usize));
                        let sym = SymTensor::outer_sym(&dirs, 3);
                        for (gi, g3) in multi_indices(3, p).iter().enumerate() {
                            let w = factorial(p) / g3.factorial() * sym.components()[gi];
                            if w != 0.0 {
                                let pos = elem
                                    .layout
                                    .position(&DofKind::VertexDeriv {
                                        vertex: *vertex,
                                        gamma: g3.clone(),
                                    })
                                    .expect("parent vertex dof");
                                t[(si, pos)] += w;
                            }
                        }
                    }
                    DofKind::FaceMoment { face_dim: 1, face: eid, alpha, test } => {
                        let ei = sub.geom.faces[0]
                            .binary_search_by_key(eid, |e| e.id)
                            .map_err(|_| VemError::Mesh(format!("edge {eid} not on face")))?;
                        let nu2d = &sub.geom.faces[0][ei].normals[0];
                        let nu_ip: Vec<f64> =
                            (0..3).map(|l| nu2d[0] * t1[l] + nu2d[1] * t2[l]).collect();
                        let (_, pe) = elem.face_entry(2, *eid)?;
                        let to = vec![nu_ip, nuf.clone()];
                        let target = MultiIndex(vec![alpha.0[0], a as u32]);
                        for beta in multi_indices(2, alpha.0[0] + a as u32) {
                            let rotated =
                                rotate_normal_bundle(&[(beta.clone(), 1.0)], &pe.normals, &to)?;
                            let w = rotated
                                .iter()
                                .find(|(g, _)| *g == target)
                                .map(|(_, v)| *v)
                                .unwrap_or(0.0);
                            if w != 0.0 {
                                let pos = elem
                                    .layout
                                    .position(&DofKind::FaceMoment {
                                        face_dim: 1,
                                        face: *eid,
                                        alpha: beta,
                                        test: *test,
                                    })
                                    .expect("parent edge dof");
                                t[(si, pos)] += w;
                            }
                        }
                    }
                    DofKind::InteriorMoment { test } => {
                        let pos = elem
                            .layout
                            .position(&DofKind::FaceMoment {
                                face_dim: 2,
                                face: f.id,
                                alpha: MultiIndex(vec![a as u32]),
                                test: *test,
                            })
                            .expect("parent face dof");
                        t[(si, pos)] = 1.0;
                    }
                    DofKind::FaceMoment { .. } => {
                        return Err(VemError::Mesh("unexpected dof kind in face sub-element".into()))
                    }
                }
            }
            per_a.push(t);
        }
        all.push(per_a);
    }
    Ok(all)
}
