//! Intrinsic geometric view of an element.
//!
//! The element machinery is written once against [`ElemGeom`], which presents
//! a cell (of any dimension) or a planar 3d face in its own intrinsic
//! coordinates: vertices, the positive-dimensional proper faces with their
//! frames and moment tables, and affine charts mapping each face into the
//! element coordinates. A 3d face viewed through [`ElemGeom::face3d`] becomes
//! an ordinary 2d element, which is how the dimension recursion is realized.

use crate::error::{Result, VemError};
use crate::meshgeom::{MomentTable, PolytopalMesh};
use crate::tensoralg::{dot, norm};
use std::sync::Arc;

#[derive(Debug, Clone)]
pub(crate) struct ElemVertexG {
    pub global: usize,
    /// Position in element-intrinsic (unscaled) coordinates.
    pub point: Vec<f64>,
    /// Outward sign for 1d cells (`-1` left endpoint, `+1` right); unused
    /// otherwise.
    pub sign: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct ElemFaceG {
    /// Mesh entity id within its dimension.
    pub id: usize,
    /// Intrinsic dimension of the face.
    #[allow(dead_code)]
    pub dim: usize,
    pub measure: f64,
    #[allow(dead_code)]
    pub diameter: f64,
    /// Raw monomial moments on the face's canonical chart.
    pub moments: Arc<MomentTable>,
    /// Element-intrinsic coordinates of the face chart origin; a face chart
    /// point `y` maps to `offset + sum_j y_j axes[j]`.
    pub offset: Vec<f64>,
    /// Unit tangents of the face in element-intrinsic coordinates.
    pub axes: Vec<Vec<f64>>,
    /// Unit normals of the face in element-intrinsic coordinates; dof
    /// functionals differentiate along these fixed directions.
    pub normals: Vec<Vec<f64>>,
    /// Codimension-1 faces only: outward normal is `outward_sign * normals[0]`.
    pub outward_sign: f64,
    /// Global vertex ids of the face (sorted endpoint pair for edges).
    pub vertices: Vec<usize>,
}

#[derive(Debug, Clone)]
pub(crate) struct ElemGeom {
    #[allow(dead_code)]
    pub n: usize,
    /// `(mesh entity dimension, id)` of the underlying entity.
    #[allow(dead_code)]
    pub key: (usize, usize),
    pub h: f64,
    pub measure: f64,
    pub moments: Arc<MomentTable>,
    /// Sorted by global vertex id.
    pub vertices: Vec<ElemVertexG>,
    /// `faces[r-1]`: proper faces of codimension `r`, `r = 1..=n-1`, sorted
    /// by mesh entity id.
    pub faces: Vec<Vec<ElemFaceG>>,
}

impl ElemGeom {
    /// View of a mesh cell; moment tables are requested through `cell_deg`
    /// on the cell and its codimension-1 faces and `edge_deg` on edges.
    pub fn cell(mesh: &PolytopalMesh, cell_id: usize, cell_deg: i32, edge_deg: i32) -> Result<ElemGeom> {
        let n = mesh.dim;
        let cell = &mesh.cells()[cell_id];
        let moments = mesh.moments(n, cell_id, cell_deg)?;
        let mut vids = cell.vertices.clone();
        vids.sort_unstable();
        vids.dedup();
        let vertices: Vec<ElemVertexG> = vids
            .iter()
            .map(|&v| {
                let sign = if n == 1 {
                    if mesh.vertices[v][0] <= cell.centroid[0] { -1.0 } else { 1.0 }
                } else {
                    0.0
                };
                ElemVertexG { global: v, point: mesh.vertices[v].clone(), sign }
            })
            .collect();
        let mut faces: Vec<Vec<ElemFaceG>> = Vec::new();
        if n >= 2 {
            // codimension 1
            let mut list: Vec<(usize, f64)> = cell
                .boundary
                .iter()
                .copied()
                .zip(cell.boundary_signs.iter().copied())
                .collect();
            list.sort_unstable_by_key(|&(id, _)| id);
            let mut codim1 = Vec::with_capacity(list.len());
            for (id, sign) in list {
                let f = mesh.entity(n - 1, id);
                let deg = if f.dim == 1 { edge_deg } else { cell_deg };
                codim1.push(ElemFaceG {
                    id,
                    dim: f.dim,
                    measure: f.measure,
                    diameter: f.diameter,
                    moments: mesh.moments(f.dim, id, deg)?,
                    offset: f.centroid.clone(),
                    axes: f.frame.tangents().to_vec(),
                    normals: f.frame.normals().to_vec(),
                    outward_sign: sign,
                    vertices: f.vertices.clone(),
                });
            }
            faces.push(codim1);
        }
        if n == 3 {
            let mut codim2 = Vec::with_capacity(cell.edges.len());
            for &id in &cell.edges {
                let e = mesh.entity(1, id);
                codim2.push(ElemFaceG {
                    id,
                    dim: 1,
                    measure: e.measure,
                    diameter: e.diameter,
                    moments: mesh.moments(1, id, edge_deg)?,
                    offset: e.centroid.clone(),
                    axes: e.frame.tangents().to_vec(),
                    normals: e.frame.normals().to_vec(),
                    outward_sign: 0.0,
                    vertices: e.vertices.clone(),
                });
            }
            faces.push(codim2);
        }
        Ok(ElemGeom {
            n,
            key: (n, cell_id),
            h: cell.diameter,
            measure: cell.measure,
            moments,
            vertices,
            faces,
        })
    }

    /// A planar 3d face presented as a 2d element in its in-plane
    /// coordinates `y = (t_1 . (x - x_F), t_2 . (x - x_F))`.
    pub fn face3d(mesh: &PolytopalMesh, face_id: usize, face_deg: i32, edge_deg: i32) -> Result<ElemGeom> {
        debug_assert_eq!(mesh.dim, 3);
        let face = mesh.entity(2, face_id);
        let t1 = face.frame.tangent(0);
        let t2 = face.frame.tangent(1);
        let c = &face.centroid;
        let inplane = |x: &[f64]| -> Vec<f64> {
            let rel: Vec<f64> = x.iter().zip(c).map(|(a, b)| a - b).collect();
            vec![dot(&rel, t1), dot(&rel, t2)]
        };
        let moments = mesh.moments(2, face_id, face_deg)?;
        let mut vids = face.vertices.clone();
        vids.sort_unstable();
        vids.dedup();
        let vertices: Vec<ElemVertexG> = vids
            .iter()
            .map(|&v| ElemVertexG { global: v, point: inplane(&mesh.vertices[v]), sign: 0.0 })
            .collect();
        let kc2 = inplane(&face.kernel_center);
        let mut eids = face.boundary.clone();
        eids.sort_unstable();
        eids.dedup();
        let mut edges = Vec::with_capacity(eids.len());
        for id in eids {
            let e = mesh.entity(1, id);
            let te = e.frame.tangent(0);
            let t2d = vec![dot(te, t1), dot(te, t2)];
            if (norm(&t2d) - 1.0).abs() > 1e-8 {
                return Err(VemError::DegenerateGeometry(format!(
                    "edge {id} does not lie in the plane of face {face_id}"
                )));
            }
            // deterministic in-plane normal, then separately the outward sign
            let mut nu2d = vec![t2d[1], -t2d[0]];
            crate::meshgeom::canonical_sign(&mut nu2d);
            let mid2d = inplane(&e.centroid);
            let s = dot(&nu2d, &[mid2d[0] - kc2[0], mid2d[1] - kc2[1]]);
            if s.abs() <= 1e-12 * e.diameter.max(1.0) {
                return Err(VemError::DegenerateGeometry(format!(
                    "face {face_id}: kernel point lies on edge {id}"
                )));
            }
            edges.push(ElemFaceG {
                id,
                dim: 1,
                measure: e.measure,
                diameter: e.diameter,
                moments: mesh.moments(1, id, edge_deg)?,
                offset: mid2d,
                axes: vec![t2d],
                normals: vec![nu2d],
                outward_sign: s.signum(),
                vertices: e.vertices.clone(),
            });
        }
        Ok(ElemGeom {
            n: 2,
            key: (2, face_id),
            h: face.diameter,
            measure: face.measure,
            moments,
            vertices,
            faces: vec![edges],
        })
    }

    pub fn vertex_index(&self, global: usize) -> Option<usize> {
        self.vertices.binary_search_by_key(&global, |v| v.global).ok()
    }
}
