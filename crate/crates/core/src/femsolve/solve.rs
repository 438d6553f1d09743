//! Linear solvers for the assembled SPD system.
//!
//! Small systems go through a dense Cholesky factorization. Larger systems
//! first try Jacobi-preconditioned conjugate gradients; if the conditioning
//! defeats CG (high-order problems grow like `h^{-2m}`), an envelope
//! Cholesky factorization on a reverse Cuthill-McKee ordering takes over,
//! polished by iterative refinement. Every path verifies the final relative
//! residual and rejects indefinite matrices.

use super::assemble::LinearSystem;
use crate::error::{Result, VemError};
use nalgebra::DVector;
use std::collections::VecDeque;

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Dense direct solve below this dof count.
    pub dense_cutoff: usize,
    /// Relative residual target.
    pub tol: f64,
    /// Iteration cap for conjugate gradients before falling back.
    pub cg_max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { dense_cutoff: 2000, tol: 1e-10, cg_max_iter: 4000 }
    }
}

pub fn solve(sys: &LinearSystem, opts: &SolveOptions) -> Result<DVector<f64>> {
    let b = sys.rhs.clone();
    let bnorm = b.norm();
    if bnorm == 0.0 {
        return Ok(DVector::zeros(sys.n));
    }
    let x = if sys.n < opts.dense_cutoff {
        dense_solve(sys, &b)?
    } else {
        match pcg(sys, &b, opts.tol, opts.cg_max_iter) {
            Some(x) => x,
            None => skyline_solve(sys, &b, opts.tol)?,
        }
    };
    let res = (&b - sys.matvec(&x)).norm() / bnorm;
    if res > opts.tol {
        return Err(VemError::SolverFailure(format!(
            "relative residual {res:.3e} above tolerance {:.1e}",
            opts.tol
        )));
    }
    Ok(x)
}

fn dense_solve(sys: &LinearSystem, b: &DVector<f64>) -> Result<DVector<f64>> {
    let a = sys.to_dense();
    let chol = a
        .cholesky()
        .ok_or_else(|| VemError::NotSpd("dense Cholesky failed: matrix not positive definite".into()))?;
    let mut x = chol.solve(b);
    // one refinement sweep for good measure
    let r = b - sys.matvec(&x);
    x += chol.solve(&r);
    Ok(x)
}

fn pcg(sys: &LinearSystem, b: &DVector<f64>, tol: f64, max_iter: usize) -> Option<DVector<f64>> {
    let n = sys.n;
    let diag = sys.diagonal();
    if diag.iter().any(|&d| d <= 0.0) {
        return None;
    }
    let minv = diag.map(|d| 1.0 / d);
    let bnorm = b.norm();
    let mut x = DVector::zeros(n);
    let mut r = b.clone();
    let mut z = minv.component_mul(&r);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    for _ in 0..max_iter {
        let ap = sys.matvec(&p);
        let pap = p.dot(&ap);
        if pap <= 0.0 {
            return None;
        }
        let alpha = rz / pap;
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        if r.norm() <= 0.1 * tol * bnorm {
            return Some(x);
        }
        z = minv.component_mul(&r);
        let rz_new = r.dot(&z);
        let beta = rz_new / rz;
        rz = rz_new;
        p = &z + beta * p;
    }
    None
}

/// Reverse Cuthill-McKee ordering of the sparsity graph.
fn rcm_order(sys: &LinearSystem) -> Vec<usize> {
    let n = sys.n;
    let degree = |i: usize| sys.row_cols(i).len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut seeds: Vec<usize> = (0..n).collect();
    seeds.sort_by_key(|&i| (degree(i), i));
    for &seed in &seeds {
        if visited[seed] {
            continue;
        }
        let mut queue = VecDeque::new();
        visited[seed] = true;
        queue.push_back(seed);
        while let Some(i) = queue.pop_front() {
            order.push(i);
            let mut nbrs: Vec<usize> =
                sys.row_cols(i).iter().copied().filter(|&j| !visited[j]).collect();
            nbrs.sort_by_key(|&j| (degree(j), j));
            for j in nbrs {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

/// Envelope (skyline) Cholesky on the RCM-permuted matrix, plus iterative
/// refinement against the original matrix.
fn skyline_solve(sys: &LinearSystem, b: &DVector<f64>, tol: f64) -> Result<DVector<f64>> {
    let n = sys.n;
    let perm = rcm_order(sys); // perm[new] = old
    let mut iperm = vec![0usize; n];
    for (new, &old) in perm.iter().enumerate() {
        iperm[old] = new;
    }
    // envelope start per permuted row
    let mut first = vec![0usize; n];
    for new in 0..n {
        let old = perm[new];
        let mut f = new;
        for &j in sys.row_cols(old) {
            let nj = iperm[j];
            if nj < f {
                f = nj;
            }
        }
        first[new] = f;
    }
    // ensure the envelope is monotone enough for the column access below
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    for new in 0..n {
        let mut row = vec![0.0; new - first[new] + 1];
        let old = perm[new];
        for (j, v) in sys.row_entries(old) {
            let nj = iperm[j];
            if nj <= new {
                row[nj - first[new]] = v;
            }
        }
        rows.push(row);
    }
    // in-place factorization: rows[i][j - first[i]] becomes L
    for i in 0..n {
        let fi = first[i];
        for j in fi..i {
            let fj = first[j];
            let lo = fi.max(fj);
            let mut sum = rows[i][j - fi];
            for t in lo..j {
                sum -= rows[i][t - fi] * rows[j][t - fj];
            }
            rows[i][j - fi] = sum / rows[j][j - fj];
        }
        let mut sum = rows[i][i - fi];
        for t in fi..i {
            let l = rows[i][t - fi];
            sum -= l * l;
        }
        if sum <= 0.0 {
            return Err(VemError::NotSpd(format!(
                "envelope Cholesky pivot {sum:.3e} at row {i}: matrix not positive definite"
            )));
        }
        rows[i][i - fi] = sum.sqrt();
    }
    let factor_solve = |r: &DVector<f64>| -> DVector<f64> {
        let mut y = DVector::zeros(n);
        for i in 0..n {
            let fi = first[i];
            let mut sum = r[perm[i]];
            for t in fi..i {
                sum -= rows[i][t - fi] * y[t];
            }
            y[i] = sum / rows[i][i - fi];
        }
        for i in (0..n).rev() {
            let fi = first[i];
            y[i] /= rows[i][i - fi];
            let yi = y[i];
            for t in fi..i {
                y[t] -= rows[i][t - fi] * yi;
            }
        }
        let mut x = DVector::zeros(n);
        for new in 0..n {
            x[perm[new]] = y[new];
        }
        x
    };
    let bnorm = b.norm();
    let mut x = factor_solve(b);
    for _ in 0..30 {
        let r = b - sys.matvec(&x);
        if r.norm() <= 0.5 * tol * bnorm {
            break;
        }
        x += factor_solve(&r);
    }
    Ok(x)
}
