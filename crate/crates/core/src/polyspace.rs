//! Polynomial spaces in scaled, centered monomial coordinates.
//!
//! Every entity `G` carries the basis `m_beta(x) = ((x - x_G)/h_G)^beta`,
//! `|beta| <= k`, enumerated in graded colexicographic order. Working in the
//! scaled chart keeps Gram matrices well conditioned independently of mesh
//! size. Negative degree encodes the trivial space `{0}`.

use crate::error::{Result, VemError};
use crate::tensoralg::{count_multi_indices, multi_indices, multi_indices_up_to, MultiIndex, SymTensor};
use nalgebra::{DMatrix, DVector};
use std::collections::HashMap;

/// Scaled centered monomial basis of `P_degree` on an entity chart.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialBasis {
    dim: usize,
    degree: i32,
    center: Vec<f64>,
    scale: f64,
    indices: Vec<MultiIndex>,
}

impl MonomialBasis {
    pub fn new(dim: usize, degree: i32, center: Vec<f64>, scale: f64) -> Self {
        assert_eq!(center.len(), dim);
        assert!(scale > 0.0);
        MonomialBasis {
            dim,
            degree,
            center,
            scale,
            indices: multi_indices_up_to(dim, degree),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> i32 {
        self.degree
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    /// Position of `beta` in the graded colex ordering.
    pub fn position(&self, beta: &MultiIndex) -> Option<usize> {
        let j = beta.order() as i32;
        if j > self.degree {
            return None;
        }
        let offset: usize = (0..j).map(|i| count_multi_indices(self.dim, i as u32)).sum();
        multi_indices(self.dim, j as u32)
            .iter()
            .position(|a| a == beta)
            .map(|p| offset + p)
    }

    /// Scaled chart coordinates `(x - x_G)/h_G` of a physical point.
    pub fn chart(&self, point: &[f64]) -> Vec<f64> {
        point
            .iter()
            .zip(&self.center)
            .map(|(x, c)| (x - c) / self.scale)
            .collect()
    }

    /// Values of all basis monomials at a physical point.
    pub fn eval_all(&self, point: &[f64]) -> Vec<f64> {
        let u = self.chart(point);
        self.indices
            .iter()
            .map(|beta| {
                beta.0
                    .iter()
                    .zip(&u)
                    .map(|(&b, ui)| ui.powi(b as i32))
                    .product()
            })
            .collect()
    }

    pub fn same_chart(&self, other: &MonomialBasis) -> bool {
        self.dim == other.dim
            && self.center == other.center
            && (self.scale - other.scale).abs() <= 1e-14 * self.scale.abs()
    }

    /// The same chart with a different degree bound.
    pub fn with_degree(&self, degree: i32) -> MonomialBasis {
        MonomialBasis::new(self.dim, degree, self.center.clone(), self.scale)
    }
}

/// A polynomial as coefficients over a [`MonomialBasis`].
#[derive(Debug, Clone, PartialEq)]
pub struct PolyCoeffs {
    basis: MonomialBasis,
    coeffs: Vec<f64>,
}

impl PolyCoeffs {
    pub fn new(basis: MonomialBasis, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), basis.len());
        PolyCoeffs { basis, coeffs }
    }

    pub fn zero(basis: MonomialBasis) -> Self {
        let n = basis.len();
        PolyCoeffs { basis, coeffs: vec![0.0; n] }
    }

    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        self.basis
            .eval_all(point)
            .iter()
            .zip(&self.coeffs)
            .map(|(m, c)| m * c)
            .sum()
    }

    pub fn scale(&self, s: f64) -> PolyCoeffs {
        PolyCoeffs {
            basis: self.basis.clone(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &PolyCoeffs) -> PolyCoeffs {
        assert!(self.basis.same_chart(&other.basis));
        let degree = self.basis.degree.max(other.basis.degree);
        let basis = self.basis.with_degree(degree);
        let mut coeffs = vec![0.0; basis.len()];
        coeffs[..self.coeffs.len()].copy_from_slice(&self.coeffs);
        for (i, c) in other.coeffs.iter().enumerate() {
            coeffs[i] += c;
        }
        PolyCoeffs { basis, coeffs }
    }

    /// `d^alpha p`, expressed on the same chart with degree lowered by
    /// `|alpha|`. Uses `d^alpha m_beta = beta!/(beta-alpha)! h^{-|alpha|}
    /// m_{beta-alpha}`.
    pub fn differentiate(&self, alpha: &MultiIndex) -> PolyCoeffs {
        assert_eq!(alpha.dim(), self.basis.dim);
        let a = alpha.order() as i32;
        let basis = self.basis.with_degree(self.basis.degree - a);
        let mut coeffs = vec![0.0; basis.len()];
        let hinv = self.basis.scale.powi(-a);
        for (i, beta) in self.basis.indices.iter().enumerate() {
            if self.coeffs[i] == 0.0 {
                continue;
            }
            if let Some(gamma) = beta.checked_sub(alpha) {
                let factor = beta.factorial() / gamma.factorial() * hinv;
                let pos = basis.position(&gamma).expect("index in lowered basis");
                coeffs[pos] += self.coeffs[i] * factor;
            }
        }
        PolyCoeffs { basis, coeffs }
    }

    /// `sum_i v_i d_i p`.
    pub fn directional_derivative(&self, v: &[f64]) -> PolyCoeffs {
        assert_eq!(v.len(), self.basis.dim);
        let basis = self.basis.with_degree(self.basis.degree - 1);
        let mut out = PolyCoeffs::zero(basis);
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            let mut e = MultiIndex::zeros(self.basis.dim);
            e.0[i] = 1;
            let d = self.differentiate(&e);
            for (a, b) in out.coeffs.iter_mut().zip(&d.coeffs) {
                *a += vi * b;
            }
        }
        out
    }

    pub fn laplacian(&self) -> PolyCoeffs {
        let basis = self.basis.with_degree(self.basis.degree - 2);
        let mut out = PolyCoeffs::zero(basis);
        for i in 0..self.basis.dim {
            let mut e = MultiIndex::zeros(self.basis.dim);
            e.0[i] = 2;
            let d = self.differentiate(&e);
            for (a, b) in out.coeffs.iter_mut().zip(&d.coeffs) {
                *a += b;
            }
        }
        out
    }

    /// `(-Delta)^p applied p times`.
    pub fn minus_laplacian_power(&self, p: usize) -> PolyCoeffs {
        let mut cur = self.clone();
        for _ in 0..p {
            cur = cur.laplacian().scale(-1.0);
        }
        cur
    }

    /// `grad^j p` at a physical point, as a symmetric tensor with component
    /// `gamma` equal to `d^gamma p(x)`.
    pub fn grad_tensor(&self, j: usize, point: &[f64]) -> SymTensor {
        let idx = multi_indices(self.basis.dim, j as u32);
        let comps = idx
            .iter()
            .map(|gamma| self.differentiate(gamma).eval(point))
            .collect();
        SymTensor::from_components(self.basis.dim, j, comps)
    }

    /// Product on a shared chart; degree is the sum of the factor degrees.
    pub fn multiply(&self, other: &PolyCoeffs) -> PolyCoeffs {
        assert!(self.basis.same_chart(&other.basis));
        if self.basis.degree < 0 || other.basis.degree < 0 {
            return PolyCoeffs::zero(self.basis.with_degree(-1));
        }
        let basis = self.basis.with_degree(self.basis.degree + other.basis.degree);
        let mut acc: HashMap<MultiIndex, f64> = HashMap::new();
        for (i, a) in self.basis.indices.iter().enumerate() {
            if self.coeffs[i] == 0.0 {
                continue;
            }
            for (j, b) in other.basis.indices.iter().enumerate() {
                if other.coeffs[j] == 0.0 {
                    continue;
                }
                *acc.entry(a.add(b)).or_insert(0.0) += self.coeffs[i] * other.coeffs[j];
            }
        }
        let mut coeffs = vec![0.0; basis.len()];
        for (beta, c) in acc {
            coeffs[basis.position(&beta).unwrap()] = c;
        }
        PolyCoeffs { basis, coeffs }
    }

    /// Composition with the affine map `x = offset + sum_j y_j cols[j]`,
    /// re-expressed over `target` (a chart in the `y` variables). Exact:
    /// affine substitution preserves the degree bound.
    pub fn compose_affine(&self, offset: &[f64], cols: &[Vec<f64>], target: &MonomialBasis) -> PolyCoeffs {
        assert_eq!(offset.len(), self.basis.dim);
        assert_eq!(cols.len(), target.dim);
        let d2 = target.dim;
        if self.basis.degree < 0 {
            return PolyCoeffs::zero(target.with_degree(-1));
        }
        let out_basis = target.with_degree(self.basis.degree);
        // scaled source coordinate u_i as an affine form in the scaled target
        // coordinates w: u_i = const_i + sum_j lin[i][j] w_j
        let h = self.basis.scale;
        let hp = target.scale;
        let mut consts = vec![0.0; self.basis.dim];
        let mut lin = vec![vec![0.0; d2]; self.basis.dim];
        for i in 0..self.basis.dim {
            let mut c = offset[i] - self.basis.center[i];
            for j in 0..d2 {
                c += cols[j][i] * target.center[j];
                lin[i][j] = cols[j][i] * hp / h;
            }
            consts[i] = c / h;
        }
        let mut acc: HashMap<MultiIndex, f64> = HashMap::new();
        for (i, beta) in self.basis.indices.iter().enumerate() {
            let c = self.coeffs[i];
            if c == 0.0 {
                continue;
            }
            // expand c * prod_i (const_i + lin_i . w)^{beta_i}
            let mut term: HashMap<MultiIndex, f64> = HashMap::new();
            term.insert(MultiIndex::zeros(d2), c);
            for (vi, &b) in beta.0.iter().enumerate() {
                for _ in 0..b {
                    let mut next: HashMap<MultiIndex, f64> = HashMap::new();
                    for (g, v) in &term {
                        *next.entry(g.clone()).or_insert(0.0) += v * consts[vi];
                        for j in 0..d2 {
                            if lin[vi][j] != 0.0 {
                                let mut g2 = g.clone();
                                g2.0[j] += 1;
                                *next.entry(g2).or_insert(0.0) += v * lin[vi][j];
                            }
                        }
                    }
                    term = next;
                }
            }
            for (g, v) in term {
                *acc.entry(g).or_insert(0.0) += v;
            }
        }
        let mut coeffs = vec![0.0; out_basis.len()];
        for (g, v) in acc {
            coeffs[out_basis.position(&g).unwrap()] = v;
        }
        PolyCoeffs { basis: out_basis, coeffs }
    }
}

/// Gram matrix `G_ij = moment(beta_i + beta_j)` for a moment functional on
/// the basis chart (e.g. the entity average of scaled monomials).
pub fn gram_matrix(basis: &MonomialBasis, moment: &dyn Fn(&MultiIndex) -> f64) -> DMatrix<f64> {
    let n = basis.len();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = moment(&basis.indices[i].add(&basis.indices[j]));
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

/// Orthonormal basis of `P_degree` with respect to the inner product induced
/// by `moment` (Cholesky of the Gram matrix; rows of `L^{-1}` give the
/// coefficients of each orthonormal polynomial over the monomials).
pub fn orthonormalize(
    basis: &MonomialBasis,
    moment: &dyn Fn(&MultiIndex) -> f64,
) -> Result<Vec<PolyCoeffs>> {
    let n = basis.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let g = gram_matrix(basis, moment);
    let chol = g.clone().cholesky().ok_or_else(|| {
        VemError::DegenerateGeometry("monomial Gram matrix is not positive definite".into())
    })?;
    let l = chol.l();
    let dmax = (0..n).map(|i| l[(i, i)]).fold(f64::MIN, f64::max);
    let dmin = (0..n).map(|i| l[(i, i)]).fold(f64::MAX, f64::min);
    if !(dmin > 0.0) || (dmax / dmin).powi(2) > 1e14 {
        return Err(VemError::DegenerateGeometry(format!(
            "monomial Gram matrix condition beyond tolerance ({:.3e})",
            (dmax / dmin).powi(2)
        )));
    }
    // orthonormal o_i = sum_j (L^{-1})[i][j] m_j
    let ct = l
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or_else(|| VemError::DegenerateGeometry("Cholesky factor not invertible".into()))?;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let coeffs: Vec<f64> = (0..n).map(|j| ct[(i, j)]).collect();
        out.push(PolyCoeffs::new(basis.clone(), coeffs));
    }
    Ok(out)
}

/// Least-squares solve of `G c = rhs` used by moment projections.
pub fn solve_projection(gram: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    gram.clone()
        .cholesky()
        .map(|ch| ch.solve(rhs))
        .ok_or_else(|| VemError::SingularLocalSystem("projection Gram matrix singular".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn basis2(degree: i32) -> MonomialBasis {
        MonomialBasis::new(2, degree, vec![0.5, 0.5], 2.0f64.sqrt())
    }

    #[test]
    fn negative_degree_is_trivial() {
        let b = MonomialBasis::new(2, -1, vec![0.0, 0.0], 1.0);
        assert_eq!(b.len(), 0);
        assert!(b.is_empty());
    }

    #[test]
    fn graded_colex_ordering() {
        let b = MonomialBasis::new(2, 2, vec![0.0, 0.0], 1.0);
        let expect: Vec<Vec<u32>> = vec![
            vec![0, 0],
            vec![1, 0],
            vec![0, 1],
            vec![2, 0],
            vec![1, 1],
            vec![0, 2],
        ];
        let got: Vec<Vec<u32>> = b.indices().iter().map(|a| a.0.clone()).collect();
        assert_eq!(got, expect);
        for (i, a) in b.indices().iter().enumerate() {
            assert_eq!(b.position(a), Some(i));
        }
    }

    #[test]
    fn eval_scaled_monomials() {
        let b = basis2(2);
        // m_(1,0)(x) = (x - 0.5)/sqrt(2)
        let vals = b.eval_all(&[1.5, 0.5]);
        let u = 1.0 / 2.0f64.sqrt();
        assert_relative_eq!(vals[0], 1.0);
        assert_relative_eq!(vals[1], u);
        assert_relative_eq!(vals[2], 0.0);
        assert_relative_eq!(vals[3], u * u);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let b = basis2(3);
        let coeffs: Vec<f64> = (0..b.len()).map(|i| (i as f64 * 0.7).sin()).collect();
        let p = PolyCoeffs::new(b, coeffs);
        let x = [0.3, 0.8];
        let h = 1e-5;
        let dx = p.differentiate(&MultiIndex(vec![1, 0]));
        let fd = (p.eval(&[x[0] + h, x[1]]) - p.eval(&[x[0] - h, x[1]])) / (2.0 * h);
        assert_relative_eq!(dx.eval(&x), fd, epsilon = 1e-7);
        let dxy = p.differentiate(&MultiIndex(vec![1, 1]));
        let fd2 = (p.eval(&[x[0] + h, x[1] + h]) - p.eval(&[x[0] + h, x[1] - h])
            - p.eval(&[x[0] - h, x[1] + h])
            + p.eval(&[x[0] - h, x[1] - h]))
            / (4.0 * h * h);
        assert_relative_eq!(dxy.eval(&x), fd2, epsilon = 1e-5);
    }

    #[test]
    fn derivatives_compose() {
        let b = basis2(4);
        let coeffs: Vec<f64> = (0..b.len()).map(|i| 1.0 / (i as f64 + 1.0)).collect();
        let p = PolyCoeffs::new(b, coeffs);
        let a = MultiIndex(vec![1, 1]);
        let bb = MultiIndex(vec![2, 0]);
        let lhs = p.differentiate(&a).differentiate(&bb);
        let rhs = p.differentiate(&a.add(&bb));
        for (x, y) in lhs.coeffs().iter().zip(rhs.coeffs()) {
            assert_relative_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn multiply_matches_pointwise() {
        let b = basis2(2);
        let p = PolyCoeffs::new(b.clone(), vec![1.0, 2.0, 0.0, 0.5, -1.0, 0.0]);
        let q = PolyCoeffs::new(b.with_degree(1), vec![0.5, -1.0, 2.0]);
        let r = p.multiply(&q);
        for &pt in &[[0.1, 0.9], [0.6, 0.2], [1.0, 1.0]] {
            assert_relative_eq!(r.eval(&pt), p.eval(&pt) * q.eval(&pt), epsilon = 1e-12);
        }
    }

    #[test]
    fn laplacian_power() {
        // p = x^4 in raw coordinates; (-lap)^2 p = -(-24) ... lap lap x^4 = 24
        let b = MonomialBasis::new(2, 4, vec![0.0, 0.0], 1.0);
        let mut coeffs = vec![0.0; b.len()];
        coeffs[b.position(&MultiIndex(vec![4, 0])).unwrap()] = 1.0;
        let p = PolyCoeffs::new(b, coeffs);
        let q = p.minus_laplacian_power(2);
        assert_relative_eq!(q.eval(&[0.7, -0.3]), 24.0, epsilon = 1e-12);
    }

    #[test]
    fn grad_tensor_of_quadratic() {
        // p = x y on raw chart: grad^2 has (1,1)-component 1, others 0
        let b = MonomialBasis::new(2, 2, vec![0.0, 0.0], 1.0);
        let mut coeffs = vec![0.0; b.len()];
        coeffs[b.position(&MultiIndex(vec![1, 1])).unwrap()] = 1.0;
        let p = PolyCoeffs::new(b, coeffs);
        let t = p.grad_tensor(2, &[0.4, 0.6]);
        let idx = multi_indices(2, 2);
        for (i, a) in idx.iter().enumerate() {
            let expect = if a.0 == vec![1, 1] { 1.0 } else { 0.0 };
            assert_relative_eq!(t.components()[i], expect, epsilon = 1e-12);
        }
        // |grad^2 p|^2 = 2 (two unit off-diagonal entries)
        assert_relative_eq!(t.contract(&t).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn compose_affine_restriction_to_line() {
        // restrict p(x, y) = x^2 + x y to the segment x = t, y = 1 - t
        let b = MonomialBasis::new(2, 2, vec![0.0, 0.0], 1.0);
        let mut coeffs = vec![0.0; b.len()];
        coeffs[b.position(&MultiIndex(vec![2, 0])).unwrap()] = 1.0;
        coeffs[b.position(&MultiIndex(vec![1, 1])).unwrap()] = 1.0;
        let p = PolyCoeffs::new(b, coeffs);
        // x = (0, 1) + t (1, -1); segment chart centered at t = 0.5, scale = 0.5
        let target = MonomialBasis::new(1, 2, vec![0.5], 0.5);
        let r = p.compose_affine(&[0.0, 1.0], &[vec![1.0, -1.0]], &target);
        for &t in &[0.0, 0.3, 0.5, 1.0] {
            let expect = t * t + t * (1.0 - t);
            assert_relative_eq!(r.eval(&[t]), expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn compose_affine_respects_scaled_charts() {
        let b = MonomialBasis::new(2, 3, vec![1.0, 2.0], 3.0);
        let coeffs: Vec<f64> = (0..b.len()).map(|i| (i as f64 + 1.0).recip()).collect();
        let p = PolyCoeffs::new(b, coeffs);
        let target = MonomialBasis::new(1, 3, vec![-0.2], 1.7);
        let offset = [0.4, 1.1];
        let dir = vec![0.6, -0.8];
        let r = p.compose_affine(&offset, std::slice::from_ref(&dir), &target);
        for &s in &[-1.0, 0.0, 0.37, 2.5] {
            let x = [offset[0] + s * dir[0], offset[1] + s * dir[1]];
            assert_relative_eq!(r.eval(&[s]), p.eval(&x), epsilon = 1e-12);
        }
    }

    #[test]
    fn legendre_orthonormalization() {
        // average inner product on [-1, 1] in the already-scaled chart
        let b = MonomialBasis::new(1, 2, vec![0.0], 1.0);
        let avg = |beta: &MultiIndex| {
            let p = beta.0[0];
            if p % 2 == 0 { 1.0 / (p as f64 + 1.0) } else { 0.0 }
        };
        let ortho = orthonormalize(&b, &avg).unwrap();
        // normalized Legendre: 1, sqrt(3) u, sqrt(5)(3u^2-1)/2
        assert_relative_eq!(ortho[0].eval(&[0.4]), 1.0, epsilon = 1e-12);
        assert_relative_eq!(ortho[1].eval(&[0.4]), 3.0f64.sqrt() * 0.4, epsilon = 1e-12);
        let u = 0.4f64;
        assert_relative_eq!(
            ortho[2].eval(&[u]),
            5.0f64.sqrt() * (3.0 * u * u - 1.0) / 2.0,
            epsilon = 1e-12
        );
        // pairwise orthonormality checked through the moment functional
        for i in 0..3 {
            for j in 0..3 {
                let prod = ortho[i].multiply(&ortho[j]);
                let val: f64 = prod
                    .basis()
                    .indices()
                    .iter()
                    .zip(prod.coeffs())
                    .map(|(beta, c)| c * avg(beta))
                    .sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(val, expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn orthonormalize_rejects_degenerate() {
        // rank-deficient moments (point mass) make the Gram matrix singular
        let b = MonomialBasis::new(1, 2, vec![0.0], 1.0);
        let point_mass = |_: &MultiIndex| 1.0;
        assert!(orthonormalize(&b, &point_mass).is_err());
    }
}
