//! Multi-index bookkeeping and symmetric tensor algebra.
//!
//! Symmetric `j`-tensors over `R^n` are stored componentwise: one scalar per
//! multi-index of order `j`, with the multiplicity weight `j!/alpha!` applied
//! during contraction. Multi-indices are enumerated in a fixed graded
//! colexicographic order so that dof layouts and matrices are reproducible.

use crate::error::{Result, VemError};
use std::collections::HashMap;

pub const FRAME_TOL: f64 = 1e-10;

/// A multi-index `(alpha_1, ..., alpha_d)` of nonnegative integers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zeros(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|alpha|`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `alpha! = alpha_1! ... alpha_d!`.
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&a| factorial(a)).product()
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.dim(), other.dim());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `alpha - beta`, or `None` if any entry would go negative.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        debug_assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    /// True if all nonzero entries sit in the first `j` slots (the set `A_j`).
    pub fn in_restricted_set(&self, j: usize) -> bool {
        self.0.iter().skip(j).all(|&a| a == 0)
    }

    /// One index tuple with this content, e.g. `(2,0,1) -> [0,0,2]`.
    pub fn representative_tuple(&self) -> Vec<usize> {
        let mut t = Vec::with_capacity(self.order() as usize);
        for (i, &a) in self.0.iter().enumerate() {
            t.extend(std::iter::repeat(i).take(a as usize));
        }
        t
    }
}

pub fn factorial(n: u32) -> f64 {
    (1..=n as u64).product::<u64>() as f64
}

pub fn binomial(n: u32, k: u32) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k) as u64;
    let mut r = 1u64;
    for i in 0..k {
        r = r * (n as u64 - i) / (i + 1);
    }
    r
}

/// Number of multi-indices of order `j` in `dim` variables: `C(dim+j-1, j)`.
pub fn count_multi_indices(dim: usize, order: u32) -> usize {
    if dim == 0 {
        return if order == 0 { 1 } else { 0 };
    }
    binomial(dim as u32 + order - 1, order) as usize
}

/// All multi-indices of exact order `j` in `dim` variables, colexicographic.
pub fn multi_indices(dim: usize, order: u32) -> Vec<MultiIndex> {
    let mut out = Vec::with_capacity(count_multi_indices(dim, order));
    let mut cur = vec![0u32; dim];
    gen_rec(dim, order, &mut cur, &mut out);
    out
}

fn gen_rec(pos: usize, remaining: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if pos == 0 {
        if remaining == 0 {
            out.push(MultiIndex(cur.clone()));
        }
        return;
    }
    if pos == 1 {
        cur[0] = remaining;
        out.push(MultiIndex(cur.clone()));
        cur[0] = 0;
        return;
    }
    for last in 0..=remaining {
        cur[pos - 1] = last;
        gen_rec(pos - 1, remaining - last, cur, out);
        cur[pos - 1] = 0;
    }
}

/// All multi-indices of order `<= degree`, graded colexicographic.
/// Empty for negative degree (the `P_k = {0}, k < 0` convention).
pub fn multi_indices_up_to(dim: usize, degree: i32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for j in 0..=degree.max(-1) {
        out.extend(multi_indices(dim, j as u32));
    }
    out
}

/// Multi-indices of order `j` supported on the first `r` of `dim` slots (A_r).
pub fn restricted_multi_indices(dim: usize, r: usize, order: u32) -> Vec<MultiIndex> {
    multi_indices(r, order)
        .into_iter()
        .map(|mut a| {
            a.0.resize(dim, 0);
            a
        })
        .collect()
}

/// Coefficients of `X^gamma` in the expansion of the product of linear forms
/// `prod_l (sum_i v_l[i] X_i)`, returned aligned with `multi_indices(dim, j)`.
///
/// The coefficient at `gamma` equals the sum over all index tuples with
/// content `gamma` of `prod_l v_l[i_l]`, which is exactly the weight needed to
/// contract a symmetric tensor with an outer product of vectors.
pub fn expand_linear_forms(vectors: &[&[f64]], dim: usize) -> Vec<f64> {
    // dense poly multiply, coefficients over multi_indices of the running order
    let mut order = 0u32;
    let mut coeffs = vec![1.0];
    for v in vectors {
        debug_assert_eq!(v.len(), dim);
        let cur_idx = multi_indices(dim, order);
        let next_idx = multi_indices(dim, order + 1);
        let pos: HashMap<&MultiIndex, usize> =
            next_idx.iter().enumerate().map(|(i, a)| (a, i)).collect();
        let mut next = vec![0.0; next_idx.len()];
        for (ci, alpha) in cur_idx.iter().enumerate() {
            if coeffs[ci] == 0.0 {
                continue;
            }
            for (i, &vi) in v.iter().enumerate() {
                if vi == 0.0 {
                    continue;
                }
                let mut beta = alpha.clone();
                beta.0[i] += 1;
                next[pos[&beta]] += coeffs[ci] * vi;
            }
        }
        coeffs = next;
        order += 1;
    }
    coeffs
}

/// A symmetric `order`-tensor over `R^dim` in monomial-symmetrized storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor {
    dim: usize,
    order: usize,
    /// One component per multi-index of `order` in `dim` variables,
    /// aligned with `multi_indices(dim, order)`.
    comps: Vec<f64>,
}

impl SymTensor {
    pub fn zeros(dim: usize, order: usize) -> Self {
        SymTensor {
            dim,
            order,
            comps: vec![0.0; count_multi_indices(dim, order as u32)],
        }
    }

    pub fn from_components(dim: usize, order: usize, comps: Vec<f64>) -> Self {
        assert_eq!(comps.len(), count_multi_indices(dim, order as u32));
        SymTensor { dim, order, comps }
    }

    pub fn scalar(value: f64, dim: usize) -> Self {
        SymTensor { dim, order: 0, comps: vec![value] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn components(&self) -> &[f64] {
        &self.comps
    }

    pub fn components_mut(&mut self) -> &mut [f64] {
        &mut self.comps
    }

    /// Multiplicity weight `order!/alpha!` for the component slot `i`.
    pub fn weight(&self, i: usize) -> f64 {
        let idx = multi_indices(self.dim, self.order as u32);
        factorial(self.order as u32) / idx[i].factorial()
    }

    /// Scalar product `tau : sigma` over all index tuples.
    pub fn contract(&self, other: &SymTensor) -> Result<f64> {
        if self.dim != other.dim || self.order != other.order {
            return Err(VemError::TensorMismatch(self.dim, self.order, other.dim, other.order));
        }
        let idx = multi_indices(self.dim, self.order as u32);
        let jfac = factorial(self.order as u32);
        Ok(idx
            .iter()
            .enumerate()
            .map(|(i, a)| jfac / a.factorial() * self.comps[i] * other.comps[i])
            .sum())
    }

    /// Contraction with an outer product of vectors, `tau : (v_1 x ... x v_j)`.
    pub fn contract_vectors(&self, vectors: &[&[f64]]) -> f64 {
        assert_eq!(vectors.len(), self.order);
        let w = expand_linear_forms(vectors, self.dim);
        self.comps.iter().zip(&w).map(|(c, w)| c * w).sum()
    }

    /// Symmetrized outer product `sym(v_1 x ... x v_j)`.
    pub fn outer_sym(vectors: &[&[f64]], dim: usize) -> Self {
        let order = vectors.len();
        let coeffs = expand_linear_forms(vectors, dim);
        let idx = multi_indices(dim, order as u32);
        let jfac = factorial(order as u32);
        let comps = idx
            .iter()
            .zip(coeffs)
            .map(|(a, c)| c * a.factorial() / jfac)
            .collect();
        SymTensor { dim, order, comps }
    }

    pub fn scale(&self, s: f64) -> Self {
        SymTensor {
            dim: self.dim,
            order: self.order,
            comps: self.comps.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &SymTensor) -> Result<SymTensor> {
        if self.dim != other.dim || self.order != other.order {
            return Err(VemError::TensorMismatch(self.dim, self.order, other.dim, other.order));
        }
        Ok(SymTensor {
            dim: self.dim,
            order: self.order,
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a + b).collect(),
        })
    }
}

/// Symmetric part of a full `j`-tensor given as `(index tuple, value)` pairs.
/// Index tuples use 0-based slots in `0..dim`; duplicate tuples accumulate.
pub fn sym(entries: &[(Vec<usize>, f64)], dim: usize, order: usize) -> Result<SymTensor> {
    let mut full: HashMap<Vec<usize>, f64> = HashMap::new();
    for (tuple, value) in entries {
        if tuple.len() != order {
            return Err(VemError::TensorMismatch(dim, order, dim, tuple.len()));
        }
        for (slot, &i) in tuple.iter().enumerate() {
            if i >= dim {
                return Err(VemError::IndexOutOfRange { slot, value: i, dim });
            }
        }
        *full.entry(tuple.clone()).or_insert(0.0) += value;
    }
    let idx = multi_indices(dim, order as u32);
    let mut comps = vec![0.0; idx.len()];
    for (i, alpha) in idx.iter().enumerate() {
        let arrangements = tuples_with_content(alpha);
        let count = arrangements.len() as f64;
        let total: f64 = arrangements.iter().filter_map(|t| full.get(t)).sum();
        comps[i] = total / count;
    }
    Ok(SymTensor { dim, order, comps })
}

/// All distinct index tuples whose content is `alpha`.
fn tuples_with_content(alpha: &MultiIndex) -> Vec<Vec<usize>> {
    let mut t = alpha.representative_tuple();
    t.sort_unstable();
    let mut all = vec![t.clone()];
    while next_permutation(&mut t) {
        all.push(t.clone());
    }
    all
}

fn next_permutation(t: &mut [usize]) -> bool {
    if t.len() < 2 {
        return false;
    }
    let mut i = t.len() - 1;
    while i > 0 && t[i - 1] >= t[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = t.len() - 1;
    while t[j] <= t[i - 1] {
        j -= 1;
    }
    t.swap(i - 1, j);
    t[i..].reverse();
    true
}

/// Orthonormal face frame: `r` unit normals and `n - r` unit tangents.
#[derive(Debug, Clone)]
pub struct Frame {
    dim: usize,
    normals: Vec<Vec<f64>>,
    tangents: Vec<Vec<f64>>,
}

impl Frame {
    pub fn new(dim: usize, normals: Vec<Vec<f64>>, tangents: Vec<Vec<f64>>) -> Result<Self> {
        let all: Vec<&Vec<f64>> = normals.iter().chain(tangents.iter()).collect();
        if all.len() != dim {
            return Err(VemError::FrameRankMismatch {
                normals: normals.len(),
                tangents: tangents.len(),
            });
        }
        let mut defect = 0.0f64;
        for (i, a) in all.iter().enumerate() {
            for (j, b) in all.iter().enumerate() {
                let d = dot(a, b) - if i == j { 1.0 } else { 0.0 };
                defect = defect.max(d.abs());
            }
        }
        if defect > FRAME_TOL {
            return Err(VemError::FrameNotOrthonormal(defect));
        }
        Ok(Frame { dim, normals, tangents })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn codim(&self) -> usize {
        self.normals.len()
    }

    pub fn normals(&self) -> &[Vec<f64>] {
        &self.normals
    }

    pub fn tangents(&self) -> &[Vec<f64>] {
        &self.tangents
    }

    pub fn normal(&self, i: usize) -> &[f64] {
        &self.normals[i]
    }

    pub fn tangent(&self, i: usize) -> &[f64] {
        &self.tangents[i]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `sym(nu_F^alpha x t_F^beta)`: the coefficient tensor of the face
/// decomposition of `grad^j v`, with `|alpha| + |beta| = j`.
pub fn normal_tangent_product(frame: &Frame, alpha: &MultiIndex, beta: &MultiIndex) -> Result<SymTensor> {
    if alpha.dim() > frame.normals.len() || beta.dim() > frame.tangents.len() {
        return Err(VemError::FrameRankMismatch {
            normals: frame.normals.len(),
            tangents: frame.tangents.len(),
        });
    }
    let mut vectors: Vec<&[f64]> = Vec::new();
    for (i, &a) in alpha.0.iter().enumerate() {
        for _ in 0..a {
            vectors.push(&frame.normals[i]);
        }
    }
    for (i, &b) in beta.0.iter().enumerate() {
        for _ in 0..b {
            vectors.push(&frame.tangents[i]);
        }
    }
    Ok(SymTensor::outer_sym(&vectors, frame.dim))
}

/// Re-expresses a bundle of normal-derivative components
/// `{d^{|beta|} v / d(old nu)^beta}` of one fixed total order in a different
/// orthonormal basis of the same normal plane. Exact for smooth inputs since
/// the map is the multinomial expansion of rotated directional derivatives.
pub fn rotate_normal_bundle(
    values: &[(MultiIndex, f64)],
    from: &[Vec<f64>],
    to: &[Vec<f64>],
) -> Result<Vec<(MultiIndex, f64)>> {
    let s = from.len();
    if to.len() != s {
        return Err(VemError::SubspaceMismatch(f64::INFINITY));
    }
    if s == 0 {
        return Ok(values.to_vec());
    }
    let n = from[0].len();
    // rotation matrix R with new_i = sum_j R[i][j] old_j
    let mut rot = vec![vec![0.0; s]; s];
    for i in 0..s {
        for j in 0..s {
            rot[i][j] = dot(&to[i], &from[j]);
        }
    }
    // subspace check: each new vector must be reproduced by its projection
    let mut defect = 0.0f64;
    for i in 0..s {
        for c in 0..n {
            let recon: f64 = (0..s).map(|j| rot[i][j] * from[j][c]).sum();
            defect = defect.max((recon - to[i][c]).abs());
        }
    }
    if defect > FRAME_TOL {
        return Err(VemError::SubspaceMismatch(defect));
    }

    let mut by_order: HashMap<u32, HashMap<MultiIndex, f64>> = HashMap::new();
    for (beta, v) in values {
        by_order.entry(beta.order()).or_default().insert(beta.clone(), *v);
    }
    let mut out = Vec::with_capacity(values.len());
    for (order, olds) in {
        let mut keys: Vec<_> = by_order.iter().collect();
        keys.sort_by_key(|(o, _)| **o);
        keys
    } {
        for gamma in multi_indices(s, *order) {
            // expand prod_i (sum_j R[i][j] d_j)^{gamma_i}
            let mut rows: Vec<&[f64]> = Vec::new();
            for (i, &g) in gamma.0.iter().enumerate() {
                for _ in 0..g {
                    rows.push(&rot[i]);
                }
            }
            let coeffs = expand_linear_forms(&rows, s);
            let idx = multi_indices(s, *order);
            let mut val = 0.0;
            for (c, beta) in coeffs.iter().zip(&idx) {
                if *c != 0.0 {
                    val += c * olds.get(beta).copied().unwrap_or(0.0);
                }
            }
            out.push((gamma, val));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn component_counts() {
        for n in 1..=3usize {
            for j in 0..=6u32 {
                assert_eq!(
                    multi_indices(n, j).len(),
                    count_multi_indices(n, j),
                    "n={n} j={j}"
                );
            }
        }
        assert_eq!(count_multi_indices(2, 3), 4);
        assert_eq!(count_multi_indices(3, 2), 6);
    }

    #[test]
    fn sym_of_e1_e2() {
        // e1 x e2 in n=2: value 1/2 on each off-diagonal slot, 0 on diagonal
        let t = sym(&[(vec![0, 1], 1.0)], 2, 2).unwrap();
        let idx = multi_indices(2, 2);
        for (i, a) in idx.iter().enumerate() {
            let expect = if a.0 == vec![1, 1] { 0.5 } else { 0.0 };
            assert_relative_eq!(t.components()[i], expect);
        }
    }

    #[test]
    fn sym_idempotent() {
        let t = SymTensor::outer_sym(&[&[1.0, 2.0], &[3.0, -1.0], &[0.5, 0.5]], 2);
        // rebuild from all full-tensor entries and re-symmetrize
        let mut entries = Vec::new();
        for i in 0..2usize {
            for j in 0..2usize {
                for k in 0..2usize {
                    let mi = MultiIndex(match (i, j, k) {
                        _ => {
                            let mut c = vec![0u32; 2];
                            c[i] += 1;
                            c[j] += 1;
                            c[k] += 1;
                            c
                        }
                    });
                    let idx = multi_indices(2, 3);
                    let pos = idx.iter().position(|a| *a == mi).unwrap();
                    entries.push((vec![i, j, k], t.components()[pos]));
                }
            }
        }
        let t2 = sym(&entries, 2, 3).unwrap();
        for (a, b) in t.components().iter().zip(t2.components()) {
            assert_relative_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn sym_nu_t_nu_matches_bruteforce() {
        // sym(nu x t x nu) for nu=(1,0), t=(0,1) equals sym built from the
        // full tensor by permutation averaging
        let nu = [1.0, 0.0];
        let t = [0.0, 1.0];
        let direct = SymTensor::outer_sym(&[&nu, &t, &nu], 2);
        let mut entries = Vec::new();
        for i in 0..2usize {
            for j in 0..2usize {
                for k in 0..2usize {
                    entries.push((vec![i, j, k], nu[i] * t[j] * nu[k]));
                }
            }
        }
        let brute = sym(&entries, 2, 3).unwrap();
        for (a, b) in direct.components().iter().zip(brute.components()) {
            assert_relative_eq!(a, b, epsilon = 1e-14);
        }
        // and equals sym(nu^2 x t)
        let other = SymTensor::outer_sym(&[&nu, &nu, &t], 2);
        for (a, b) in direct.components().iter().zip(other.components()) {
            assert_relative_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn contract_identity_order2() {
        // identity-like order-2 tensor in n=2: components (2,0)->1, (1,1)->0, (0,2)->1
        let idx = multi_indices(2, 2);
        let comps: Vec<f64> = idx
            .iter()
            .map(|a| if a.0.contains(&2) { 1.0 } else { 0.0 })
            .collect();
        let id = SymTensor::from_components(2, 2, comps);
        assert_relative_eq!(id.contract(&id).unwrap(), 2.0);
    }

    #[test]
    fn contract_sym_e1e2() {
        let s = sym(&[(vec![0, 1], 1.0)], 2, 2).unwrap();
        assert_relative_eq!(s.contract(&s).unwrap(), 0.5);
    }

    #[test]
    fn contract_order0() {
        let a = SymTensor::scalar(3.0, 2);
        let b = SymTensor::scalar(-2.0, 2);
        assert_relative_eq!(a.contract(&b).unwrap(), -6.0);
    }

    #[test]
    fn contract_mismatch_errors() {
        let a = SymTensor::zeros(2, 2);
        let b = SymTensor::zeros(2, 3);
        assert!(a.contract(&b).is_err());
    }

    #[test]
    fn symmetrization_self_adjoint() {
        // contract(sym(a x b), s) = contract(a x b, s) for symmetric s
        let a = [1.0, -2.0, 0.5];
        let b = [0.3, 0.7, 2.0];
        let s = SymTensor::outer_sym(&[&[1.0, 1.0, 0.0], &[0.0, 2.0, 1.0]], 3);
        let symab = SymTensor::outer_sym(&[&a, &b], 3);
        let lhs = symab.contract(&s).unwrap();
        let rhs = s.contract_vectors(&[&a, &b]);
        assert_relative_eq!(lhs, rhs, epsilon = 1e-12);
    }

    #[test]
    fn normal_tangent_product_edge_2d() {
        let frame = Frame::new(2, vec![vec![0.0, 1.0]], vec![vec![1.0, 0.0]]).unwrap();
        let t = normal_tangent_product(&frame, &MultiIndex(vec![1]), &MultiIndex(vec![0])).unwrap();
        assert_eq!(t.order(), 1);
        assert_relative_eq!(t.components()[0], 0.0); // x-component
        assert_relative_eq!(t.components()[1], 1.0); // y-component
    }

    #[test]
    fn gradient_decomposition_order1() {
        // grad v = nu dv/dnu + t dv/dt for v = x + 2y on an arbitrary edge frame
        let c = 0.6f64.cos();
        let s = 0.6f64.sin();
        let frame = Frame::new(2, vec![vec![c, s]], vec![vec![-s, c]]).unwrap();
        let grad = [1.0, 2.0];
        let dnu = dot(&grad, frame.normal(0));
        let dt = dot(&grad, frame.tangent(0));
        let nu_part = normal_tangent_product(&frame, &MultiIndex(vec![1]), &MultiIndex(vec![0]))
            .unwrap()
            .scale(dnu);
        let t_part = normal_tangent_product(&frame, &MultiIndex(vec![0]), &MultiIndex(vec![1]))
            .unwrap()
            .scale(dt);
        let total = nu_part.add(&t_part).unwrap();
        assert_relative_eq!(total.components()[0], grad[0], epsilon = 1e-12);
        assert_relative_eq!(total.components()[1], grad[1], epsilon = 1e-12);
    }

    #[test]
    fn normal_tangent_product_3d_face() {
        let frame = Frame::new(
            3,
            vec![vec![0.0, 0.0, 1.0]],
            vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]],
        )
        .unwrap();
        let t = normal_tangent_product(&frame, &MultiIndex(vec![1]), &MultiIndex(vec![1, 0])).unwrap();
        // brute-force sym of nu x t1
        let mut entries = Vec::new();
        for i in 0..3usize {
            for j in 0..3usize {
                entries.push((vec![i, j], frame.normal(0)[i] * frame.tangent(0)[j]));
            }
        }
        let brute = sym(&entries, 3, 2).unwrap();
        for (a, b) in t.components().iter().zip(brute.components()) {
            assert_relative_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn rotate_identity_and_sign() {
        let vals = vec![(MultiIndex(vec![1]), 2.5)];
        let from = vec![vec![0.0, 1.0]];
        let same = rotate_normal_bundle(&vals, &from, &from).unwrap();
        assert_relative_eq!(same[0].1, 2.5);
        let flipped = rotate_normal_bundle(&vals, &from, &[vec![0.0, -1.0]]).unwrap();
        assert_relative_eq!(flipped[0].1, -2.5);
    }

    #[test]
    fn rotate_order2_bundle_45deg() {
        // v = x^2 in R^3, edge along e3, old normals (e1, e2).
        // order-2 bundle: d2v/dn_a dn_b
        let olds = vec![
            (MultiIndex(vec![2, 0]), 2.0), // d^2/dx^2
            (MultiIndex(vec![1, 1]), 0.0),
            (MultiIndex(vec![0, 2]), 0.0),
        ];
        let from = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let to = vec![vec![r, r, 0.0], vec![-r, r, 0.0]];
        let new = rotate_normal_bundle(&olds, &from, &to).unwrap();
        // directional second derivatives of x^2: (u.e1)^2 * 2
        for (gamma, v) in &new {
            let expected = match gamma.0.as_slice() {
                [2, 0] => 2.0 * r * r,
                [1, 1] => 2.0 * r * (-r),
                [0, 2] => 2.0 * r * r,
                _ => unreachable!(),
            };
            assert_relative_eq!(*v, expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn rotate_roundtrip_is_identity() {
        let olds = vec![
            (MultiIndex(vec![2, 0]), 1.3),
            (MultiIndex(vec![1, 1]), -0.4),
            (MultiIndex(vec![0, 2]), 0.9),
        ];
        let from = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        let a = 0.7f64;
        let to = vec![
            vec![a.cos(), a.sin(), 0.0],
            vec![-a.sin(), a.cos(), 0.0],
        ];
        let there = rotate_normal_bundle(&olds, &from, &to).unwrap();
        let back = rotate_normal_bundle(&there, &to, &from).unwrap();
        for ((g1, v1), (g2, v2)) in olds.iter().zip(&back) {
            assert_eq!(g1, g2);
            assert_relative_eq!(v1, v2, epsilon = 1e-10);
        }
    }

    #[test]
    fn rotate_subspace_mismatch_rejected() {
        let vals = vec![(MultiIndex(vec![1]), 1.0)];
        let from = vec![vec![1.0, 0.0, 0.0]];
        let to = vec![vec![0.0, 1.0, 0.0]];
        assert!(rotate_normal_bundle(&vals, &from, &to).is_err());
    }

    #[test]
    fn sym_rejects_out_of_range() {
        assert!(sym(&[(vec![0, 2], 1.0)], 2, 2).is_err());
    }

    #[test]
    fn frame_rejects_non_orthonormal() {
        assert!(Frame::new(2, vec![vec![1.0, 0.1]], vec![vec![0.0, 1.0]]).is_err());
    }
}
