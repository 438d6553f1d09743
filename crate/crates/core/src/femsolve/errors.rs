//! Error norms, data oscillation and inverse/norm-equivalence diagnostics.

use super::dofmap::GlobalDofMap;
use super::interpolate::exact_dof_values;
use super::Evaluable;
use crate::element::{DofKind, DofVector, ElementConfig, LocalElement};
use crate::error::Result;
use crate::meshgeom::PolytopalMesh;
use crate::polyspace::PolyCoeffs;
use crate::tensoralg::{factorial, multi_indices};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

/// Broken error norms of a discrete solution against a smooth reference.
#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub h: f64,
    pub n_dofs: usize,
    /// `|u - Pi_h u_h|_{j,h}` for `j = 0..=m` (index 0 is the `L^2` error).
    pub broken: Vec<f64>,
    /// Data oscillation `(sum_K h_K^{2m} |f - Q_k f|_{0,K}^2)^{1/2}`.
    pub osc: f64,
}

impl ErrorReport {
    pub fn l2(&self) -> f64 {
        self.broken[0]
    }

    pub fn hm(&self) -> f64 {
        *self.broken.last().unwrap()
    }
}

/// Computes the broken norms of `u - Pi_h u_h` by quadrature, plus the data
/// oscillation of `f` when a source is given.
pub fn error_norms(
    mesh: &PolytopalMesh,
    elems: &[LocalElement],
    dofmap: &GlobalDofMap,
    u_h: &DVector<f64>,
    u: &dyn Evaluable,
    f: Option<&dyn Evaluable>,
    quad_degree: u32,
) -> Result<ErrorReport> {
    let m = dofmap.config.m;
    let per_cell: Vec<(Vec<f64>, f64)> = (0..elems.len())
        .into_par_iter()
        .map(|cell| {
            let elem = &elems[cell];
            let g = dofmap.cell_dofs(cell, elem);
            let local = DVector::from_iterator(g.len(), g.iter().map(|&gi| u_h[gi]));
            let pi = elem.pi_projector(&DofVector::new(elem.layout.clone(), local));
            let quad = mesh.cell_quadrature(cell, quad_degree);
            // flatten all derivative multi-indices through order m; the
            // differentiated projections share the cell chart, so one
            // monomial evaluation per point serves them all
            let mut gammas = Vec::new();
            let mut weights = Vec::new();
            let mut orders = Vec::new();
            for j in 0..=m {
                let jfac = factorial(j as u32);
                for gamma in multi_indices(mesh.dim, j as u32) {
                    weights.push(jfac / gamma.factorial());
                    orders.push(j);
                    gammas.push(gamma);
                }
            }
            let dpis: Vec<_> = gammas.iter().map(|g| pi.differentiate(g)).collect();
            let mut acc = vec![0.0; m + 1];
            for (x, w) in &quad {
                let uv = u.deriv_many(&gammas, x);
                let pv = elem.basis.eval_all(x);
                for (idx, dpi) in dpis.iter().enumerate() {
                    let pval: f64 =
                        dpi.coeffs().iter().zip(&pv).map(|(c, v)| c * v).sum();
                    let diff = uv[idx] - pval;
                    acc[orders[idx]] += w * weights[idx] * diff * diff;
                }
            }
            let mut osc2 = 0.0;
            if let Some(fsrc) = f {
                let fd = exact_dof_values(mesh, elem, cell, fsrc, quad_degree)?;
                let qf = elem.l2_projector(&DofVector::new(elem.layout.clone(), fd));
                let mut s = 0.0;
                for (x, w) in &quad {
                    let diff = fsrc.eval(x) - qf.eval(x);
                    s += w * diff * diff;
                }
                osc2 = elem.h.powi(2 * m as i32) * s;
            }
            Ok((acc, osc2))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut broken2 = vec![0.0; m + 1];
    let mut osc2 = 0.0;
    for (acc, o) in &per_cell {
        for j in 0..=m {
            broken2[j] += acc[j];
        }
        osc2 += o;
    }
    Ok(ErrorReport {
        h: mesh.mesh_size(),
        n_dofs: dofmap.len(),
        broken: broken2.iter().map(|v| v.sqrt()).collect(),
        osc: osc2.sqrt(),
    })
}

/// Extremal constants of the inverse inequality and the dof-norm
/// equivalence over the polynomial subspaces of all cells.
#[derive(Debug, Clone)]
pub struct DiagnosticsReport {
    /// `max_K max_{p in P_k} h^{2m} |p|_{m,K}^2 / |p|_{0,K}^2`.
    pub inverse_constant: f64,
    /// Extremes over cells and `p in P_k` of `|p|_{0,K}^2 /` (dof norm)`^2`.
    pub ratio_min: f64,
    pub ratio_max: f64,
}

/// Samples the inverse-estimate and norm-equivalence constants on the
/// polynomial subspace of every cell: both must stay bounded above and below
/// uniformly in the mesh size on shape-regular families.
pub fn sample_diagnostics(mesh: &PolytopalMesh, config: &ElementConfig) -> Result<DiagnosticsReport> {
    let elems = super::assemble::build_elements(mesh, config)?;
    let m = config.m;
    let mut inv = 0.0f64;
    let mut rmin = f64::MAX;
    let mut rmax = 0.0f64;
    for elem in &elems {
        let nk = elem.basis.len();
        // inverse constant: generalized eigenvalues of (h^{2m} G_m, mass)
        let a1 = elem.h.powi(2 * m as i32) * &elem.g_m;
        inv = inv.max(gen_eig_range(&a1, &elem.mass)?.1);
        // dof norm Gram on P_k: interior moments weigh |K|, the remaining
        // dofs carry the stabilization weights scaled back by h^{2m}
        let nn = elem.layout.len();
        let mut w = DVector::zeros(nn);
        let h2m = elem.h.powi(2 * m as i32);
        for (i, kind) in elem.layout.dofs.iter().enumerate() {
            w[i] = match kind {
                DofKind::InteriorMoment { .. } => elem.measure,
                _ => h2m * elem.s[i],
            };
        }
        let mut ndof = DMatrix::zeros(nk, nk);
        for i in 0..nk {
            for j in 0..nk {
                let mut acc = 0.0;
                for t in 0..nn {
                    acc += elem.d[(t, i)] * w[t] * elem.d[(t, j)];
                }
                ndof[(i, j)] = acc;
            }
        }
        let (lo, hi) = gen_eig_range(&elem.mass, &ndof)?;
        rmin = rmin.min(lo);
        rmax = rmax.max(hi);
    }
    Ok(DiagnosticsReport { inverse_constant: inv, ratio_min: rmin, ratio_max: rmax })
}

/// Extremal generalized eigenvalues of `A x = lambda B x` with `B` SPD.
fn gen_eig_range(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(f64, f64)> {
    let chol = b
        .clone()
        .cholesky()
        .ok_or_else(|| crate::error::VemError::NotSpd("diagnostic Gram matrix".into()))?;
    // M = L^{-1} A L^{-T}
    let x = chol.l().solve_lower_triangular(a).ok_or_else(|| {
        crate::error::VemError::SingularLocalSystem("diagnostic triangular solve".into())
    })?;
    let y = chol
        .l()
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| {
            crate::error::VemError::SingularLocalSystem("diagnostic triangular solve".into())
        })?;
    let sym = (&y + y.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let lo = eig.eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
    let hi = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
    Ok((lo, hi))
}

/// Residual-free check that `Q_k f` reproduces a polynomial source exactly
/// (used by tests; exposed for the oscillation diagnostics of polynomial
/// data).
pub fn polynomial_oscillation_is_zero(
    mesh: &PolytopalMesh,
    elems: &[LocalElement],
    fp: &PolyCoeffs,
) -> Result<f64> {
    let n = mesh.dim;
    let offset = vec![0.0; n];
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut worst = 0.0f64;
    for (cell, elem) in elems.iter().enumerate() {
        let fcell = fp.compose_affine(&offset, &cols, &elem.basis);
        let table = mesh.moments(n, cell, 2 * fcell.basis().degree().max(elem.basis.degree()))?;
        let dofs = elem.dof_map(&fcell)?;
        let qf = elem.l2_projector(&dofs);
        let diff = fcell.add(&qf.scale(-1.0));
        let err2 = table.integrate_product(&diff, &diff)?;
        worst = worst.max(err2.abs().sqrt());
    }
    Ok(worst)
}
