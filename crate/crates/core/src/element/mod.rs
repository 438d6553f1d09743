//! Local `H^m`-conforming virtual elements.
//!
//! For a cell `K` the element carries the degrees of freedom (vertex
//! derivatives through order `m-1`, moments of normal derivatives on
//! positive-dimensional proper faces, interior moments), the boundary trace
//! reconstruction, the energy projector `Pi` onto `P_k`, the `L^2` projector
//! `Q`, the dof-diagonal stabilization `S`, and the local stiffness-plus-mass
//! contribution `A_loc` of the discrete bilinear form. In 3d the face data is
//! handled by full 2d elements built on each face and shared between the two
//! incident cells.

pub(crate) mod build;
pub(crate) mod geom;

use crate::error::{Result, VemError};
use crate::meshgeom::PolytopalMesh;
use crate::polyspace::{gram_matrix, solve_projection, MonomialBasis, PolyCoeffs};
use crate::tensoralg::{factorial, multi_indices, multi_indices_up_to, MultiIndex, SymTensor};
use geom::{ElemFaceG, ElemGeom};
use nalgebra::{DMatrix, DVector};
use std::collections::HashMap;
use std::sync::{Arc, RwLock};

/// Element family parameters: ambient dimension `n`, smoothness order `m`
/// and polynomial degree `k >= m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ElementConfig {
    pub n: usize,
    pub m: usize,
    pub k: usize,
}

impl ElementConfig {
    pub fn new(n: usize, m: usize, k: usize) -> Result<Self> {
        let ok = m >= 1
            && k >= m
            && match n {
                1 => m <= 4,
                2 => m <= 3 && k <= m + 3,
                3 => m <= 2 && k <= 3,
                _ => false,
            };
        if !ok {
            return Err(VemError::UnsupportedConfig { n, m, k: k as i32 });
        }
        Ok(ElementConfig { n, m, k })
    }

    /// `dim P_d` in `vars` variables (`0` for negative `d`).
    pub(crate) fn poly_dim(vars: usize, d: i32) -> usize {
        multi_indices_up_to(vars, d).len()
    }
}

/// One degree of freedom. Vertex and face ids are global mesh entity ids, so
/// two elements sharing a face enumerate exactly the same functionals.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum DofKind {
    /// `d^gamma v(delta)`, `|gamma| <= m-1` (raw, unscaled derivative).
    VertexDeriv { vertex: usize, gamma: MultiIndex },
    /// `(1/|F|) (d^alpha v / d nu_F^alpha, q_test)_F` with `q_test` from the
    /// orthonormal basis of `P_{k-2m+|alpha|}(F)` under the face average
    /// inner product; `alpha` indexes the stored unit normals of `F`.
    FaceMoment { face_dim: usize, face: usize, alpha: MultiIndex, test: usize },
    /// `(1/|K|) (v, q_test)_K`, `q_test` orthonormal in `P_{k-2m}(K)`.
    InteriorMoment { test: usize },
}

/// Ordered dof descriptors of one element: vertices (by global id, then
/// derivative order, then component), then faces by increasing codimension
/// (by global id, then `|alpha|`, then `alpha`, then test index), then
/// interior moments.
#[derive(Debug, Clone)]
pub struct DofLayout {
    pub config: ElementConfig,
    pub dofs: Vec<DofKind>,
    pos: HashMap<DofKind, usize>,
}

impl DofLayout {
    pub fn len(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dofs.is_empty()
    }

    pub fn position(&self, dof: &DofKind) -> Option<usize> {
        self.pos.get(dof).copied()
    }
}

/// Values of the dof functionals applied to one function.
#[derive(Debug, Clone)]
pub struct DofVector {
    pub layout: Arc<DofLayout>,
    pub values: DVector<f64>,
}

impl DofVector {
    pub fn new(layout: Arc<DofLayout>, values: DVector<f64>) -> Self {
        assert_eq!(values.len(), layout.len());
        DofVector { layout, values }
    }

    pub fn zeros(layout: Arc<DofLayout>) -> Self {
        let n = layout.len();
        DofVector { layout, values: DVector::zeros(n) }
    }
}

/// Shared store of 2d face elements used by the 3d recursion; both cells
/// incident to a face receive the same element.
#[derive(Debug, Default)]
pub struct ElementCache {
    map: RwLock<HashMap<(usize, usize, usize), Arc<LocalElement>>>,
}

impl ElementCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn face_element(&self, mesh: &PolytopalMesh, face_id: usize, m: usize, k: usize) -> Result<Arc<LocalElement>> {
        let key = (face_id, m, k);
        {
            let map = self.map.read().unwrap();
            if let Some(e) = map.get(&key) {
                return Ok(e.clone());
            }
        }
        let config = ElementConfig::new(2, m, k)?;
        let geom = ElemGeom::face3d(mesh, face_id, cell_moment_degree(k), edge_moment_degree(m, k))?;
        let elem = Arc::new(build::build_from_geom(geom, config, Vec::new())?);
        let mut map = self.map.write().unwrap();
        Ok(map.entry(key).or_insert(elem).clone())
    }
}

fn cell_moment_degree(k: usize) -> i32 {
    2 * k as i32
}

fn edge_moment_degree(m: usize, k: usize) -> i32 {
    2 * k.max(2 * m - 1) as i32
}

/// A fully built local element: all projection and stiffness matrices map
/// dof vectors to polynomial coefficients (over [`LocalElement::basis`]) or
/// to dof-space quantities.
#[derive(Debug)]
pub struct LocalElement {
    pub config: ElementConfig,
    pub layout: Arc<DofLayout>,
    /// Scaled monomial chart of `P_k(K)`.
    pub basis: MonomialBasis,
    pub h: f64,
    pub measure: f64,
    /// Dof values of the `P_k` monomials, `N x dim P_k`.
    pub d: DMatrix<f64>,
    /// Energy projector: dofs -> coefficients of `Pi v`, `dim P_k x N`.
    pub pi_star: DMatrix<f64>,
    /// Dof representation of `Pi`: `B = D Pi*`, `N x N`.
    pub b: DMatrix<f64>,
    /// `L^2` projector: dofs -> coefficients of `Q v`, `dim P_k x N`.
    pub q: DMatrix<f64>,
    /// Diagonal of the stabilization Gram on dofs.
    pub s: DVector<f64>,
    /// Local bilinear form `a_{h,K}` on dofs; symmetric positive definite.
    pub a_loc: DMatrix<f64>,
    /// `(grad^m m_i, grad^m m_j)_K` on the monomials.
    pub g_m: DMatrix<f64>,
    /// `(m_i, m_j)_K` on the monomials.
    pub mass: DMatrix<f64>,
    pub(crate) geom: ElemGeom,
    /// Orthonormal interior test polynomials of `P_{k-2m}(K)`.
    pub(crate) ortho_interior: Vec<PolyCoeffs>,
    /// Orthonormal face tests: `[codim-1][face][|alpha|][test]`.
    pub(crate) ortho_face: Vec<Vec<Vec<Vec<PolyCoeffs>>>>,
    /// Edge trace solves (`n = 2` only): `[edge][j]`, each `dim P_{d_j} x N`.
    pub(crate) traces: Vec<Vec<DMatrix<f64>>>,
    /// Face sub-elements (`n = 3` only): `[face][a]` is the 2d element of
    /// `(F, m-a, k-a)` hosting `d^a v / d nu_F^a`.
    pub(crate) subs: Vec<Vec<Arc<LocalElement>>>,
    /// Parent-dof to sub-element-dof maps, aligned with `subs`.
    pub(crate) sub_t: Vec<Vec<DMatrix<f64>>>,
}

impl LocalElement {
    /// Builds the element of `config` on cell `cell` of `mesh`. In 3d the
    /// required face elements are taken from (or inserted into) `cache`.
    pub fn build(mesh: &PolytopalMesh, cell: usize, config: &ElementConfig, cache: &ElementCache) -> Result<LocalElement> {
        if mesh.dim != config.n {
            return Err(VemError::Mesh(format!(
                "mesh dimension {} does not match element dimension {}",
                mesh.dim, config.n
            )));
        }
        let geom = ElemGeom::cell(mesh, cell, cell_moment_degree(config.k), edge_moment_degree(config.m, config.k))?;
        let mut subs = Vec::new();
        if config.n == 3 {
            for f in &geom.faces[0] {
                let mut per_a = Vec::with_capacity(config.m);
                for a in 0..config.m {
                    per_a.push(cache.face_element(mesh, f.id, config.m - a, config.k - a)?);
                }
                subs.push(per_a);
            }
        }
        build::build_from_geom(geom, *config, subs)
    }

    pub fn layout(&self) -> &Arc<DofLayout> {
        &self.layout
    }

    /// Orthonormal interior test polynomials (`P_{k-2m}(K)` under the
    /// average inner product); interior dof `i` is `(1/|K|)(v, tests[i])_K`.
    pub fn interior_tests(&self) -> &[PolyCoeffs] {
        &self.ortho_interior
    }

    /// Applies every dof functional to a polynomial given on the element
    /// chart (any degree covered by the cached moments, in particular
    /// `deg p <= k`).
    pub fn dof_map(&self, p: &PolyCoeffs) -> Result<DofVector> {
        Ok(DofVector::new(self.layout.clone(), self.dof_map_values(p)?))
    }

    pub(crate) fn dof_map_values(&self, p: &PolyCoeffs) -> Result<DVector<f64>> {
        let mut out = DVector::zeros(self.layout.len());
        for (i, kind) in self.layout.dofs.iter().enumerate() {
            out[i] = self.dof_value(kind, p)?;
        }
        Ok(out)
    }

    fn dof_value(&self, kind: &DofKind, p: &PolyCoeffs) -> Result<f64> {
        match kind {
            DofKind::VertexDeriv { vertex, gamma } => {
                let vi = self.geom.vertex_index(*vertex).ok_or_else(|| {
                    VemError::Mesh(format!("vertex {vertex} not on element"))
                })?;
                Ok(p.differentiate(gamma).eval(&self.geom.vertices[vi].point))
            }
            DofKind::FaceMoment { face_dim, face, alpha, test } => {
                let codim = self.config.n - face_dim;
                let (fi, f) = self.face_entry(codim, *face)?;
                let mut g = p.clone();
                for (l, &al) in alpha.0.iter().enumerate() {
                    for _ in 0..al {
                        g = g.directional_derivative(&f.normals[l]);
                    }
                }
                let restricted = g.compose_affine(&f.offset, &f.axes, f.moments.basis());
                let qtest = &self.ortho_face[codim - 1][fi][alpha.order() as usize][*test];
                Ok(f.moments.integrate_product(&restricted, qtest)? / f.measure)
            }
            DofKind::InteriorMoment { test } => {
                Ok(self.geom.moments.integrate_product(p, &self.ortho_interior[*test])? / self.geom.measure)
            }
        }
    }

    /// Orthonormal test polynomials of the order-`a` moments on a face
    /// (local index `fi` within codimension `codim`).
    pub(crate) fn face_tests(&self, codim: usize, fi: usize, a: usize) -> &[PolyCoeffs] {
        &self.ortho_face[codim - 1][fi][a]
    }

    pub(crate) fn face_entry(&self, codim: usize, id: usize) -> Result<(usize, &ElemFaceG)> {
        let list = &self.geom.faces[codim - 1];
        let fi = list
            .binary_search_by_key(&id, |f| f.id)
            .map_err(|_| VemError::Mesh(format!("face {id} (codim {codim}) not on element")))?;
        Ok((fi, &list[fi]))
    }

    /// Number of codimension-1 faces (edge count for `n = 2`).
    pub fn codim1_count(&self) -> usize {
        if self.config.n >= 2 { self.geom.faces[0].len() } else { 0 }
    }

    /// Global mesh id of a codimension-1 face by local index.
    pub fn codim1_id(&self, fi: usize) -> usize {
        self.geom.faces[0][fi].id
    }

    /// The trace `w_j = d^j v / d nu_e^j` on edge `fi` (local index) as a 1d
    /// polynomial on the edge chart; `n = 2` elements only (3d faces are 2d
    /// elements themselves).
    pub fn edge_trace_1d(&self, dofs: &DofVector, fi: usize, j: usize) -> Result<PolyCoeffs> {
        if self.config.n != 2 {
            return Err(VemError::Mesh("edge traces exist on 2d elements only".into()));
        }
        if j >= self.config.m {
            return Err(VemError::Mesh(format!("trace order {j} must be below m = {}", self.config.m)));
        }
        let w = &self.traces[fi][j];
        let coeffs = w * &dofs.values;
        let deg = trace_degree(self.config.m, self.config.k, j);
        let eb = self.geom.faces[0][fi].moments.basis().with_degree(deg);
        Ok(PolyCoeffs::new(eb, coeffs.iter().copied().collect()))
    }

    /// The 2d element hosting `d^a v / d nu_F^a` on face `fi` (3d only).
    pub fn face_subelement(&self, fi: usize, a: usize) -> Result<&Arc<LocalElement>> {
        if self.config.n != 3 {
            return Err(VemError::Mesh("face sub-elements exist on 3d elements only".into()));
        }
        self.subs
            .get(fi)
            .and_then(|per| per.get(a))
            .ok_or_else(|| VemError::Mesh(format!("no sub-element for face {fi}, order {a}")))
    }

    /// Dof vector of `g = d^a v / d nu_F^a` in the face element of
    /// `(F, m-a, k-a)`, computed linearly from the parent dofs.
    pub fn face_subelement_dofs(&self, dofs: &DofVector, fi: usize, a: usize) -> Result<DofVector> {
        let sub = self.face_subelement(fi, a)?;
        let t = &self.sub_t[fi][a];
        Ok(DofVector::new(sub.layout.clone(), t * &dofs.values))
    }

    /// `Pi_k^K v`: the energy projection onto `P_k(K)`.
    pub fn pi_projector(&self, dofs: &DofVector) -> PolyCoeffs {
        let c = &self.pi_star * &dofs.values;
        PolyCoeffs::new(self.basis.clone(), c.iter().copied().collect())
    }

    /// `Q_k^K v`: the computable `L^2` projection onto `P_k(K)`.
    pub fn l2_projector(&self, dofs: &DofVector) -> PolyCoeffs {
        let c = &self.q * &dofs.values;
        PolyCoeffs::new(self.basis.clone(), c.iter().copied().collect())
    }

    pub fn stabilization(&self) -> &DVector<f64> {
        &self.s
    }

    /// `(grad^i v, Psi)_F` over a codimension-1 face as a linear functional
    /// of the dofs. `Psi` lists the components of a symmetric-tensor-valued
    /// polynomial on the face chart, aligned with `multi_indices(n, i)`;
    /// requires `i <= m-1`.
    pub(crate) fn pair_face(&self, fi: usize, i: usize, psi: &[PolyCoeffs]) -> Result<DVector<f64>> {
        let n = self.config.n;
        let nn = self.layout.len();
        let f = &self.geom.faces[0][fi];
        let ifac = factorial(i as u32);
        let idx = multi_indices(n, i as u32);
        debug_assert_eq!(psi.len(), idx.len());
        let mut row = DVector::zeros(nn);
        if n == 2 {
            let nu = &f.normals[0];
            let tv = &f.axes[0];
            for a in 0..=i {
                let b = i - a;
                let mut dirs: Vec<&[f64]> = Vec::with_capacity(i);
                dirs.extend(std::iter::repeat(nu.as_slice()).take(a));
                dirs.extend(std::iter::repeat(tv.as_slice()).take(b));
                let sym = SymTensor::outer_sym(&dirs, 2);
                let weights: Vec<f64> = idx
                    .iter()
                    .zip(sym.components())
                    .map(|(g, s)| ifac / g.factorial() * s)
                    .collect();
                let Some(phi) = combine(psi, &weights) else { continue };
                let mult = ifac / (factorial(a as u32) * factorial(b as u32));
                let wmat = &self.traces[fi][a];
                let deg = trace_degree(self.config.m, self.config.k, a);
                let eb = f.moments.basis().with_degree(deg);
                let mut u = DVector::zeros(eb.len());
                let db = MultiIndex(vec![b as u32]);
                for c in 0..eb.len() {
                    let mc = unit_poly(&eb, c).differentiate(&db);
                    u[c] = f.moments.integrate_product(&mc, &phi)?;
                }
                row += mult * wmat.transpose() * u;
            }
        } else if n == 3 {
            let sub0 = &self.subs[fi][0];
            let t0 = &self.sub_t[fi][0];
            match i {
                0 => {
                    let fb = sub0.basis.clone();
                    let mut u = DVector::zeros(fb.len());
                    for c in 0..fb.len() {
                        u[c] = f.moments.integrate_product(&unit_poly(&fb, c), &psi[0])?;
                    }
                    row += t0.transpose() * (sub0.q.transpose() * u);
                }
                1 => {
                    // normal part through the (F, m-1, k-1) sub-element
                    let nu = &f.normals[0];
                    let wnu: Vec<f64> = (0..3).map(|l| nu[l]).collect();
                    if let Some(phi) = combine(psi, &wnu) {
                        let sub1 = &self.subs[fi][1];
                        let t1 = &self.sub_t[fi][1];
                        let fb = sub1.basis.clone();
                        let mut u = DVector::zeros(fb.len());
                        for c in 0..fb.len() {
                            u[c] = f.moments.integrate_product(&unit_poly(&fb, c), &phi)?;
                        }
                        row += t1.transpose() * (sub1.q.transpose() * u);
                    }
                    // tangential parts by in-face integration by parts
                    for j in 0..2 {
                        let tj = &f.axes[j];
                        let wt: Vec<f64> = (0..3).map(|l| tj[l]).collect();
                        let Some(phi) = combine(psi, &wt) else { continue };
                        let mut ej = MultiIndex::zeros(2);
                        ej.0[j] = 1;
                        let dphi = phi.differentiate(&ej);
                        let fb = sub0.basis.clone();
                        let mut u = DVector::zeros(fb.len());
                        for c in 0..fb.len() {
                            u[c] = f.moments.integrate_product(&unit_poly(&fb, c), &dphi)?;
                        }
                        row -= t0.transpose() * (sub0.q.transpose() * u);
                        for (ei, e) in sub0.geom.faces[0].iter().enumerate() {
                            let njj = e.outward_sign * e.normals[0][j];
                            if njj == 0.0 {
                                continue;
                            }
                            let phie = phi.compose_affine(&e.offset, &e.axes, e.moments.basis());
                            let w0 = &sub0.traces[ei][0];
                            let deg = trace_degree(sub0.config.m, sub0.config.k, 0);
                            let eb = e.moments.basis().with_degree(deg);
                            let mut ue = DVector::zeros(eb.len());
                            for c in 0..eb.len() {
                                ue[c] = e.moments.integrate_product(&unit_poly(&eb, c), &phie)?;
                            }
                            row += njj * t0.transpose() * (w0.transpose() * ue);
                        }
                    }
                }
                _ => {
                    return Err(VemError::UnsupportedConfig {
                        n: self.config.n,
                        m: self.config.m,
                        k: self.config.k as i32,
                    })
                }
            }
        } else {
            return Err(VemError::Mesh("no positive-dimensional faces in 1d".into()));
        }
        Ok(row)
    }

    /// `Q^F(grad^j v|_F)` on a codimension-1 face: the exact trace tensor for
    /// `n = 2`, the componentwise `L^2(F)` projection onto `P_{k-j}(F)` for
    /// `n = 3`. Components are polynomials on the face chart aligned with
    /// `multi_indices(n, j)`; requires `j <= m-1`.
    pub fn boundary_grad_projection(&self, dofs: &DofVector, fi: usize, j: usize) -> Result<Vec<PolyCoeffs>> {
        let n = self.config.n;
        if j >= self.config.m {
            return Err(VemError::Mesh(format!("trace order {j} must be below m = {}", self.config.m)));
        }
        let idx = multi_indices(n, j as u32);
        let f = &self.geom.faces[0][fi];
        if n == 2 {
            let nu = &f.normals[0];
            let tv = &f.axes[0];
            let mut comps: Vec<Option<PolyCoeffs>> = vec![None; idx.len()];
            for a in 0..=j {
                let b = j - a;
                let mut dirs: Vec<&[f64]> = Vec::with_capacity(j);
                dirs.extend(std::iter::repeat(nu.as_slice()).take(a));
                dirs.extend(std::iter::repeat(tv.as_slice()).take(b));
                let sym = SymTensor::outer_sym(&dirs, 2);
                let mult = factorial(j as u32) / (factorial(a as u32) * factorial(b as u32));
                let wa = self.edge_trace_1d(dofs, fi, a)?;
                let dwa = wa.differentiate(&MultiIndex(vec![b as u32]));
                for (gi, _) in idx.iter().enumerate() {
                    let c = mult * sym.components()[gi];
                    if c == 0.0 {
                        continue;
                    }
                    let term = dwa.scale(c);
                    comps[gi] = Some(match comps[gi].take() {
                        None => term,
                        Some(p) => p.add(&term),
                    });
                }
            }
            let deg = trace_degree(self.config.m, self.config.k, 0);
            let eb = f.moments.basis().with_degree(deg);
            Ok(comps
                .into_iter()
                .map(|c| c.unwrap_or_else(|| PolyCoeffs::zero(eb.clone())))
                .collect())
        } else if n == 3 {
            let tb = f.moments.basis().with_degree((self.config.k - j) as i32);
            let massf = gram_matrix(&tb, &|b| f.moments.get(b).expect("face moments"));
            let jfac = factorial(j as u32);
            let mut out = Vec::with_capacity(idx.len());
            for gamma in &idx {
                let gshare = gamma.factorial() / jfac;
                let mut rhs = DVector::zeros(tb.len());
                for c in 0..tb.len() {
                    let mut psi: Vec<PolyCoeffs> = idx
                        .iter()
                        .map(|_| PolyCoeffs::zero(tb.with_degree(-1)))
                        .collect();
                    let gi = idx.iter().position(|g| g == gamma).unwrap();
                    psi[gi] = unit_poly(&tb, c).scale(gshare);
                    let rowv = self.pair_face(fi, j, &psi)?;
                    rhs[c] = rowv.dot(&dofs.values);
                }
                let coeffs = solve_projection(&massf, &rhs)?;
                out.push(PolyCoeffs::new(tb.clone(), coeffs.iter().copied().collect()));
            }
            Ok(out)
        } else {
            Err(VemError::Mesh("no positive-dimensional faces in 1d".into()))
        }
    }

    /// `Q_{k-j}^K (grad^j v)`: componentwise moment projection of the `j`-th
    /// gradient, `1 <= j <= m`, computed by iterated integration by parts.
    /// Components align with `multi_indices(n, j)` on the element chart.
    pub fn grad_moment_projection(&self, dofs: &DofVector, j: usize) -> Result<Vec<PolyCoeffs>> {
        if j == 0 || j > self.config.m {
            return Err(VemError::Mesh(format!("gradient order {j} must lie in 1..=m")));
        }
        let n = self.config.n;
        let k = self.config.k as i32;
        let vals = &dofs.values;
        let mut cur = vec![self.l2_projector(dofs)];
        for jj in 1..=j {
            let tb = self.basis.with_degree(k - jj as i32);
            let massk = gram_matrix(&tb, &|b| self.geom.moments.get(b).expect("cell moments"));
            let prev_idx = multi_indices(n, jj as u32 - 1);
            let idx = multi_indices(n, jj as u32);
            let mut next = Vec::with_capacity(idx.len());
            for gamma in &idx {
                let l = gamma.0.iter().position(|&g| g > 0).unwrap();
                let mut el = MultiIndex::zeros(n);
                el.0[l] = 1;
                let gsub = gamma.checked_sub(&el).unwrap();
                let pi = prev_idx.iter().position(|g| *g == gsub).unwrap();
                let prev = &cur[pi];
                let mut rhs = DVector::zeros(tb.len());
                for c in 0..tb.len() {
                    let mc = unit_poly(&tb, c);
                    let mut val = -self.geom.moments.integrate_product(prev, &mc.differentiate(&el))?;
                    if n == 1 {
                        for v in &self.geom.vertices {
                            let dv = self.layout.position(&DofKind::VertexDeriv {
                                vertex: v.global,
                                gamma: gsub.clone(),
                            });
                            let dv = dv.expect("vertex dof");
                            val += v.sign * vals[dv] * mc.eval(&v.point);
                        }
                    } else {
                        let gshare = gsub.factorial() / factorial(jj as u32 - 1);
                        for (fi, f) in self.geom.faces[0].iter().enumerate() {
                            let nul = f.outward_sign * f.normals[0][l];
                            if nul == 0.0 {
                                continue;
                            }
                            let mce = mc.compose_affine(&f.offset, &f.axes, f.moments.basis());
                            let mut psi: Vec<PolyCoeffs> = prev_idx
                                .iter()
                                .map(|_| PolyCoeffs::zero(mce.basis().with_degree(-1)))
                                .collect();
                            psi[pi] = mce.scale(gshare);
                            let rowv = self.pair_face(fi, jj - 1, &psi)?;
                            val += nul * rowv.dot(vals);
                        }
                    }
                    rhs[c] = val;
                }
                let coeffs = solve_projection(&massk, &rhs)?;
                next.push(PolyCoeffs::new(tb.clone(), coeffs.iter().copied().collect()));
            }
            cur = next;
        }
        Ok(cur)
    }

    /// Matrices and layout as JSON for inspection tooling.
    pub fn debug_json(&self) -> serde_json::Value {
        fn mat(m: &DMatrix<f64>) -> serde_json::Value {
            serde_json::json!({
                "rows": m.nrows(),
                "cols": m.ncols(),
                "data": m.row_iter().flat_map(|r| r.iter().copied().collect::<Vec<_>>()).collect::<Vec<f64>>(),
            })
        }
        let dofs: Vec<serde_json::Value> = self
            .layout
            .dofs
            .iter()
            .map(|d| match d {
                DofKind::VertexDeriv { vertex, gamma } => serde_json::json!({
                    "kind": "vertex_deriv", "vertex": vertex, "gamma": gamma.0,
                }),
                DofKind::FaceMoment { face_dim, face, alpha, test } => serde_json::json!({
                    "kind": "face_moment", "face_dim": face_dim, "face": face,
                    "alpha": alpha.0, "test": test,
                }),
                DofKind::InteriorMoment { test } => serde_json::json!({
                    "kind": "interior_moment", "test": test,
                }),
            })
            .collect();
        serde_json::json!({
            "config": { "n": self.config.n, "m": self.config.m, "k": self.config.k },
            "h": self.h,
            "measure": self.measure,
            "dofs": dofs,
            "pi_star": mat(&self.pi_star),
            "q": mat(&self.q),
            "b": mat(&self.b),
            "s": self.s.iter().copied().collect::<Vec<f64>>(),
            "a_loc": mat(&self.a_loc),
        })
    }
}

pub(crate) fn trace_degree(m: usize, k: usize, j: usize) -> i32 {
    (k as i32 - j as i32).max(2 * (m as i32 - j as i32) - 1)
}

pub(crate) fn unit_poly(basis: &MonomialBasis, idx: usize) -> PolyCoeffs {
    let mut c = vec![0.0; basis.len()];
    c[idx] = 1.0;
    PolyCoeffs::new(basis.clone(), c)
}

/// Weighted sum of polynomials on a shared chart; `None` when every weight
/// vanishes (avoids fabricating a degree).
pub(crate) fn combine(polys: &[PolyCoeffs], weights: &[f64]) -> Option<PolyCoeffs> {
    let mut acc: Option<PolyCoeffs> = None;
    for (p, &w) in polys.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        let term = p.scale(w);
        acc = Some(match acc {
            None => term,
            Some(a) => a.add(&term),
        });
    }
    acc
}
