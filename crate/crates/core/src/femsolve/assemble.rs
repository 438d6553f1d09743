//! Global assembly of the discrete bilinear form and load vector.
//!
//! Elements are built in parallel; the scatter into the global matrix runs
//! serially in a fixed cell order so the assembled numbers are bitwise
//! independent of the thread count.

use super::dofmap::GlobalDofMap;
use super::Evaluable;
use crate::element::{ElementCache, ElementConfig, LocalElement};
use crate::error::{Result, VemError};
use crate::meshgeom::PolytopalMesh;
use crate::polyspace::PolyCoeffs;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use std::collections::BTreeMap;

/// Sparse symmetric matrix in compressed-row form with the load vector.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
    pub rhs: DVector<f64>,
}

impl LinearSystem {
    pub(crate) fn from_rows(rows: Vec<BTreeMap<usize, f64>>, rhs: DVector<f64>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in &rows {
            for (&c, &v) in row {
                col_idx.push(c);
                vals.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        LinearSystem { n, row_ptr, col_idx, vals, rhs }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        match self.col_idx[lo..hi].binary_search(&j) {
            Ok(p) => self.vals[lo + p],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.n);
        for i in 0..self.n {
            let mut acc = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[p] * x[self.col_idx[p]];
            }
            y[i] = acc;
        }
        y
    }

    pub fn diagonal(&self) -> DVector<f64> {
        DVector::from_iterator(self.n, (0..self.n).map(|i| self.get(i, i)))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                a[(i, self.col_idx[p])] = self.vals[p];
            }
        }
        a
    }

    /// Row sparsity pattern (used by the reordering in the direct solver).
    pub(crate) fn row_cols(&self, i: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub(crate) fn row_entries(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |p| (self.col_idx[p], self.vals[p]))
    }

    /// Checks `A = A^T` entrywise relative to the largest entry.
    pub fn verify_symmetric(&self, rel_tol: f64) -> Result<()> {
        let scale = self.vals.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
        for i in 0..self.n {
            for (j, v) in self.row_entries(i) {
                let w = self.get(j, i);
                if (v - w).abs() > rel_tol * scale {
                    return Err(VemError::NotSpd(format!(
                        "assembled matrix asymmetric at ({i},{j}): {v} vs {w}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Builds all local elements of a mesh in parallel (face sub-elements are
/// shared through one cache).
pub fn build_elements(mesh: &PolytopalMesh, config: &ElementConfig) -> Result<Vec<LocalElement>> {
    let cache = ElementCache::new();
    (0..mesh.cells().len())
        .into_par_iter()
        .map(|c| LocalElement::build(mesh, c, config, &cache))
        .collect()
}

/// Per-cell load `(f, Q_k v)_K` in local dof coordinates. When `f_poly` is
/// given (a polynomial on the ambient chart with center 0, scale 1) the
/// moments are exact; otherwise quadrature of degree `quad_degree` is used.
fn local_load(
    mesh: &PolytopalMesh,
    elem: &LocalElement,
    cell: usize,
    f: &dyn Evaluable,
    f_poly: Option<&PolyCoeffs>,
    quad_degree: u32,
) -> Result<DVector<f64>> {
    let nk = elem.basis.len();
    let mut mf = DVector::zeros(nk);
    if let Some(fp) = f_poly {
        let n = mesh.dim;
        let offset = vec![0.0; n];
        let cols: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let fcell = fp.compose_affine(&offset, &cols, &elem.basis);
        let table = mesh.moments(n, cell, fcell.basis().degree() + elem.basis.degree())?;
        for c in 0..nk {
            let mut mc = vec![0.0; nk];
            mc[c] = 1.0;
            let mc = PolyCoeffs::new(elem.basis.clone(), mc);
            mf[c] = table.integrate_product(&fcell, &mc)?;
        }
    } else {
        let quad = mesh.cell_quadrature(cell, quad_degree);
        for (x, w) in &quad {
            let fv = f.eval(x);
            let vals = elem.basis.eval_all(x);
            for c in 0..nk {
                mf[c] += w * fv * vals[c];
            }
        }
    }
    Ok(elem.q.transpose() * mf)
}

/// Assembles the global system `A u = b` for the model problem
/// `(grad^m u, grad^m v) + (u, v) = (f, v)` with natural boundary conditions.
pub fn assemble(
    mesh: &PolytopalMesh,
    elems: &[LocalElement],
    dofmap: &GlobalDofMap,
    f: &dyn Evaluable,
    f_poly: Option<&PolyCoeffs>,
    quad_degree: u32,
) -> Result<LinearSystem> {
    let n = dofmap.len();
    let loads: Vec<DVector<f64>> = (0..elems.len())
        .into_par_iter()
        .map(|c| local_load(mesh, &elems[c], c, f, f_poly, quad_degree))
        .collect::<Result<Vec<_>>>()?;
    let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    let mut rhs = DVector::zeros(n);
    for (cell, elem) in elems.iter().enumerate() {
        let g = dofmap.cell_dofs(cell, elem);
        let a = &elem.a_loc;
        for (li, &gi) in g.iter().enumerate() {
            let row = &mut rows[gi];
            for (lj, &gj) in g.iter().enumerate() {
                let v = a[(li, lj)];
                if v != 0.0 {
                    *row.entry(gj).or_insert(0.0) += v;
                }
            }
            rhs[gi] += loads[cell][li];
        }
    }
    let sys = LinearSystem::from_rows(rows, rhs);
    sys.verify_symmetric(1e-12)?;
    Ok(sys)
}
