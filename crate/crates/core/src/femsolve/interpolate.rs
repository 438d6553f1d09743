//! Interpolation of smooth functions into the discrete space.
//!
//! The interior moments of the interpolant match those of the function
//! exactly; every vertex and face dof is the average, over the incident
//! cells, of the dof functional applied to the cellwise `L^2` projection
//! `Q_k u`. An alternative mode applies the dof functionals to `u` itself
//! (it departs from the averaged construction above but is convenient when
//! exact boundary dofs are wanted).

use super::dofmap::GlobalDofMap;
use super::Evaluable;
use crate::element::{DofKind, DofVector, LocalElement};
use crate::error::Result;
use crate::meshgeom::PolytopalMesh;
use crate::tensoralg::{dot, expand_linear_forms, multi_indices};
use nalgebra::DVector;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterpolationMode {
    /// Vertex/face dofs averaged from the cellwise projections `Q_k u`.
    Averaged,
    /// Dof functionals applied to `u` directly.
    ExactDofs,
}

/// Applies every dof functional of one element to a smooth function, using
/// quadrature of the given degree on faces and the interior.
pub fn exact_dof_values(
    mesh: &PolytopalMesh,
    elem: &LocalElement,
    cell: usize,
    u: &dyn Evaluable,
    quad_degree: u32,
) -> Result<DVector<f64>> {
    let n = mesh.dim;
    let mut out = DVector::zeros(elem.layout.len());
    let cell_quad = mesh.cell_quadrature(cell, quad_degree);
    for (i, kind) in elem.layout.dofs.iter().enumerate() {
        out[i] = match kind {
            DofKind::VertexDeriv { vertex, gamma } => u.deriv(gamma, &mesh.vertices[*vertex]),
            DofKind::FaceMoment { face_dim, face, alpha, test } => {
                let ent = mesh.entity(*face_dim, *face);
                let codim = n - face_dim;
                let a = alpha.order();
                // expand the iterated normal derivative into ambient partials
                let mut dirs: Vec<&[f64]> = Vec::with_capacity(a as usize);
                for (l, &al) in alpha.0.iter().enumerate() {
                    for _ in 0..al {
                        dirs.push(ent.frame.normal(l));
                    }
                }
                let weights = expand_linear_forms(&dirs, n);
                let betas = multi_indices(n, a);
                let (fi, _) = elem.face_entry(codim, *face)?;
                let qt = &elem.face_tests(codim, fi, a as usize)[*test];
                let quad = mesh.entity_quadrature(*face_dim, *face, quad_degree);
                let mut acc = 0.0;
                for (x, w) in &quad {
                    let mut dv = 0.0;
                    for (c, beta) in weights.iter().zip(&betas) {
                        if *c != 0.0 {
                            dv += c * u.deriv(beta, x);
                        }
                    }
                    let rel: Vec<f64> = x.iter().zip(&ent.centroid).map(|(p, q)| p - q).collect();
                    let y: Vec<f64> =
                        (0..*face_dim).map(|l| dot(&rel, ent.frame.tangent(l))).collect();
                    acc += w * dv * qt.eval(&y);
                }
                acc / ent.measure
            }
            DofKind::InteriorMoment { test } => {
                let o = &elem.interior_tests()[*test];
                let mut acc = 0.0;
                for (x, w) in &cell_quad {
                    acc += w * u.eval(x) * o.eval(x);
                }
                acc / elem.measure
            }
        };
    }
    Ok(out)
}

/// Global dof vector of the interpolant `I_h u`.
pub fn interpolate(
    mesh: &PolytopalMesh,
    elems: &[LocalElement],
    dofmap: &GlobalDofMap,
    u: &dyn Evaluable,
    mode: InterpolationMode,
    quad_degree: u32,
) -> Result<DVector<f64>> {
    let per_cell: Vec<(DVector<f64>, DVector<f64>)> = (0..elems.len())
        .into_par_iter()
        .map(|cell| {
            let elem = &elems[cell];
            let exact = exact_dof_values(mesh, elem, cell, u, quad_degree)?;
            let through = match mode {
                InterpolationMode::ExactDofs => exact.clone(),
                InterpolationMode::Averaged => {
                    let qu = elem
                        .l2_projector(&DofVector::new(elem.layout.clone(), exact.clone()));
                    elem.dof_map(&qu)?.values
                }
            };
            Ok((exact, through))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut sums = DVector::zeros(dofmap.len());
    let mut counts = vec![0.0f64; dofmap.len()];
    for (cell, elem) in elems.iter().enumerate() {
        let (exact, through) = &per_cell[cell];
        for (li, kind) in elem.layout.dofs.iter().enumerate() {
            let g = dofmap.global_index(cell, kind);
            let v = match kind {
                DofKind::InteriorMoment { .. } => exact[li],
                _ => through[li],
            };
            sums[g] += v;
            counts[g] += 1.0;
        }
    }
    for (i, c) in counts.iter().enumerate() {
        debug_assert!(*c > 0.0, "dof {i} not covered by any cell");
        sums[i] /= c;
    }
    Ok(sums)
}
