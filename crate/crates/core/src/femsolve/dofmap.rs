//! Global enumeration of degrees of freedom.
//!
//! Dofs attached to a shared mesh entity (vertex, face, edge) receive the
//! same global index from every incident cell, which is what makes the
//! discrete space conforming. Ordering: vertex blocks by vertex id, then
//! entity blocks by dimension from `n-1` down to `1` (by entity id), then
//! interior blocks by cell id. Within each block the ordering matches the
//! local element layout.

use crate::element::{DofKind, ElementConfig, LocalElement};
use crate::meshgeom::PolytopalMesh;
use crate::tensoralg::{count_multi_indices, multi_indices, MultiIndex};

#[derive(Debug, Clone)]
pub struct GlobalDofMap {
    pub config: ElementConfig,
    total: usize,
    vertex_block: usize,
    /// Indexed by entity dimension `d` (`1..n`): base offset of the blocks.
    face_base: Vec<usize>,
    face_block: Vec<usize>,
    /// `face_inner[d][a]`: offset of the order-`a` group within a block.
    face_inner: Vec<Vec<usize>>,
    cell_base: usize,
    cell_block: usize,
}

impl GlobalDofMap {
    pub fn new(mesh: &PolytopalMesh, config: &ElementConfig) -> Self {
        let n = config.n;
        let m = config.m as i32;
        let k = config.k as i32;
        let vertex_block = ElementConfig::poly_dim(n, m - 1);
        let mut face_base = vec![0; n];
        let mut face_block = vec![0; n];
        let mut face_inner = vec![Vec::new(); n];
        let mut cursor = mesh.vertices.len() * vertex_block;
        for d in (1..n).rev() {
            let r = n - d;
            let mut inner = Vec::with_capacity(m as usize);
            let mut off = 0;
            for a in 0..m as u32 {
                inner.push(off);
                off += count_multi_indices(r, a)
                    * ElementConfig::poly_dim(d, k - 2 * m + a as i32);
            }
            face_inner[d] = inner;
            face_block[d] = off;
            face_base[d] = cursor;
            cursor += mesh.entities[d].len() * off;
        }
        let cell_base = cursor;
        let cell_block = ElementConfig::poly_dim(n, k - 2 * m);
        let total = cell_base + mesh.cells().len() * cell_block;
        GlobalDofMap {
            config: *config,
            total,
            vertex_block,
            face_base,
            face_block,
            face_inner,
            cell_base,
            cell_block,
        }
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn global_index(&self, cell: usize, kind: &DofKind) -> usize {
        match kind {
            DofKind::VertexDeriv { vertex, gamma } => {
                vertex * self.vertex_block + graded_position(gamma)
            }
            DofKind::FaceMoment { face_dim, face, alpha, test } => {
                let d = *face_dim;
                let a = alpha.order();
                let r = self.config.n - d;
                let apos = multi_indices(r, a)
                    .iter()
                    .position(|g| g == alpha)
                    .expect("alpha in restricted set");
                let tdim = ElementConfig::poly_dim(
                    d,
                    self.config.k as i32 - 2 * self.config.m as i32 + a as i32,
                );
                self.face_base[d]
                    + face * self.face_block[d]
                    + self.face_inner[d][a as usize]
                    + apos * tdim
                    + test
            }
            DofKind::InteriorMoment { test } => self.cell_base + cell * self.cell_block + test,
        }
    }

    /// Local-to-global index vector in local layout order.
    pub fn cell_dofs(&self, cell: usize, elem: &LocalElement) -> Vec<usize> {
        elem.layout
            .dofs
            .iter()
            .map(|kind| self.global_index(cell, kind))
            .collect()
    }
}

fn graded_position(gamma: &MultiIndex) -> usize {
    let j = gamma.order();
    let offset: usize = (0..j).map(|i| count_multi_indices(gamma.dim(), i)).sum();
    offset
        + multi_indices(gamma.dim(), j)
            .iter()
            .position(|g| g == gamma)
            .expect("gamma in graded set")
}
