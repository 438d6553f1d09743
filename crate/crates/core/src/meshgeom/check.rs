//! Mesh-condition diagnostics: star-shapedness, chunkiness, and face-size
//! ratios of every cell.

use super::PolytopalMesh;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct ElementReport {
    pub cell: usize,
    pub star_shaped: bool,
    /// `h_K / rho_K` with `rho_K` the kernel Chebyshev radius (a conservative
    /// lower bound on the inscribed-ball radius at a star center).
    pub chunkiness: f64,
    /// `max_F h_K / h_F` over all proper faces of the cell.
    pub max_face_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MeshReport {
    pub dimension: usize,
    pub cells: usize,
    pub mesh_size: f64,
    pub all_star_shaped: bool,
    pub max_chunkiness: f64,
    pub max_face_ratio: f64,
    pub elements: Vec<ElementReport>,
}

pub fn check_mesh(mesh: &PolytopalMesh) -> MeshReport {
    let mut elements = Vec::with_capacity(mesh.cells().len());
    for (ci, k) in mesh.cells().iter().enumerate() {
        let mut star = k.kernel_radius > 0.0;
        let mut ratio = 1.0f64;
        if mesh.dim >= 2 {
            for &f in &k.boundary {
                let face = mesh.entity(mesh.dim - 1, f);
                star &= face.kernel_radius > 0.0;
                ratio = ratio.max(k.diameter / face.diameter);
            }
        }
        if mesh.dim == 3 {
            for &e in &k.edges {
                ratio = ratio.max(k.diameter / mesh.entity(1, e).diameter);
            }
        }
        let chunkiness = if k.kernel_radius > 0.0 {
            k.diameter / k.kernel_radius
        } else {
            f64::INFINITY
        };
        elements.push(ElementReport {
            cell: ci,
            star_shaped: star,
            chunkiness,
            max_face_ratio: ratio,
        });
    }
    MeshReport {
        dimension: mesh.dim,
        cells: elements.len(),
        mesh_size: mesh.mesh_size(),
        all_star_shaped: elements.iter().all(|e| e.star_shaped),
        max_chunkiness: elements.iter().map(|e| e.chunkiness).fold(0.0, f64::max),
        max_face_ratio: elements.iter().map(|e| e.max_face_ratio).fold(0.0, f64::max),
        elements,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshgeom::PolytopalMesh;
    use approx::assert_relative_eq;

    #[test]
    fn unit_square_chunkiness() {
        // h = sqrt(2), kernel radius 1/2 => chunkiness 2 sqrt(2)
        let m = PolytopalMesh::from_polygons(
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]],
            vec![vec![0, 1, 2, 3]],
        )
        .unwrap();
        let r = check_mesh(&m);
        assert!(r.all_star_shaped);
        assert_relative_eq!(r.max_chunkiness, 2.0 * 2.0f64.sqrt(), epsilon = 1e-8);
        assert_relative_eq!(r.max_face_ratio, 2.0f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn sliver_quad_flagged() {
        // 100:1 aspect rectangle: chunkiness > 100
        let m = PolytopalMesh::from_polygons(
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 0.01], vec![0.0, 0.01]],
            vec![vec![0, 1, 2, 3]],
        )
        .unwrap();
        let r = check_mesh(&m);
        assert!(r.max_chunkiness > 100.0);
    }

    #[test]
    fn convex_polygons_star_shaped() {
        let m = crate::meshgeom::generate::hex_dominant(3).unwrap();
        assert!(check_mesh(&m).all_star_shaped);
    }
}
