//! Deterministic mesh generators on the unit domain, plus random single-cell
//! fixtures for testing.

use super::PolytopalMesh;
use crate::error::Result;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

/// Mesh family selector (unit interval/square/cube domains).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshKind {
    Interval { n: usize },
    SquareGrid { n: usize },
    DistortedQuads { n: usize, seed: u64 },
    HexDominant { n: usize },
    CubeGrid { n: usize },
}

impl MeshKind {
    pub fn generate(&self) -> Result<PolytopalMesh> {
        match *self {
            MeshKind::Interval { n } => interval_mesh(n),
            MeshKind::SquareGrid { n } => square_grid(n),
            MeshKind::DistortedQuads { n, seed } => distorted_quads(n, seed),
            MeshKind::HexDominant { n } => hex_dominant(n),
            MeshKind::CubeGrid { n } => cube_grid(n),
        }
    }
}

/// Uniform partition of `(0, 1)` into `n` intervals.
pub fn interval_mesh(n: usize) -> Result<PolytopalMesh> {
    assert!(n >= 1);
    let vertices: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let cells: Vec<(usize, usize)> = (0..n).map(|i| (i, i + 1)).collect();
    PolytopalMesh::from_intervals(vertices, cells)
}

/// `n x n` uniform squares on the unit square.
pub fn square_grid(n: usize) -> Result<PolytopalMesh> {
    assert!(n >= 1);
    let (vertices, cells) = grid_quads(n, |_, _, x, y| (x, y));
    PolytopalMesh::from_polygons(vertices, cells)
}

/// `n x n` quads with interior vertices displaced pseudo-randomly
/// (deterministic for a fixed seed).
pub fn distorted_quads(n: usize, seed: u64) -> Result<PolytopalMesh> {
    assert!(n >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amp = 0.25 / n as f64;
    let (vertices, cells) = grid_quads(n, |i, j, x, y| {
        // interior vertices only; draws happen for every vertex to keep the
        // stream position independent of the boundary test
        let dx = rng.gen_range(-amp..amp);
        let dy = rng.gen_range(-amp..amp);
        if i == 0 || i == n || j == 0 || j == n {
            (x, y)
        } else {
            (x + dx, y + dy)
        }
    });
    PolytopalMesh::from_polygons(vertices, cells)
}

fn grid_quads(
    n: usize,
    mut place: impl FnMut(usize, usize, f64, f64) -> (f64, f64),
) -> (Vec<Vec<f64>>, Vec<Vec<usize>>) {
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            let (x, y) = place(i, j, i as f64 / n as f64, j as f64 / n as f64);
            vertices.push(vec![x, y]);
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut cells = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            cells.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    (vertices, cells)
}

/// Centroidal hexagon-dominant mesh: the Voronoi diagram of a hexagonal seed
/// lattice clipped to the unit square (hexagons inside, quads/pentagons at
/// the boundary).
pub fn hex_dominant(n: usize) -> Result<PolytopalMesh> {
    assert!(n >= 1);
    let dx = 1.0 / n as f64;
    let dy = dx * 3.0f64.sqrt() / 2.0;
    let rows = (1.0 / dy).ceil() as i64 + 2;
    let mut seeds: Vec<[f64; 2]> = Vec::new();
    for j in -1..=rows {
        let y = (j as f64 + 0.5) * dy;
        let off = if j.rem_euclid(2) == 0 { 0.25 * dx } else { 0.75 * dx };
        let cols = n as i64 + 2;
        for i in -1..=cols {
            seeds.push([i as f64 * dx + off, y]);
        }
    }
    // Voronoi cell of each seed: clip the unit square by bisector half-planes
    let mut raw_cells: Vec<Vec<[f64; 2]>> = Vec::new();
    let reach = 2.5 * dx;
    for (si, s) in seeds.iter().enumerate() {
        if s[0] < -reach || s[0] > 1.0 + reach || s[1] < -reach || s[1] > 1.0 + reach {
            continue;
        }
        let mut poly: Vec<[f64; 2]> = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        for (ti, t) in seeds.iter().enumerate() {
            if ti == si {
                continue;
            }
            let d2 = (t[0] - s[0]).powi(2) + (t[1] - s[1]).powi(2);
            if d2 > (2.0 * reach).powi(2) {
                continue;
            }
            // keep the side of the bisector closer to s
            let nx = t[0] - s[0];
            let ny = t[1] - s[1];
            let mid = [(s[0] + t[0]) / 2.0, (s[1] + t[1]) / 2.0];
            let b = nx * mid[0] + ny * mid[1];
            poly = clip_polygon(&poly, nx, ny, b);
            if poly.len() < 3 {
                break;
            }
        }
        if poly.len() >= 3 && polygon_area(&poly) > 1e-12 {
            raw_cells.push(poly);
        }
    }
    // deduplicate vertices on a fine grid
    let mut vid: HashMap<(i64, i64), usize> = HashMap::new();
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    let mut cells: Vec<Vec<usize>> = Vec::new();
    let key = |x: f64, y: f64| ((x * 1e9).round() as i64, (y * 1e9).round() as i64);
    for poly in raw_cells {
        let mut cell = Vec::with_capacity(poly.len());
        for p in &poly {
            let k = key(p[0], p[1]);
            let id = *vid.entry(k).or_insert_with(|| {
                vertices.push(vec![k.0 as f64 / 1e9, k.1 as f64 / 1e9]);
                vertices.len() - 1
            });
            if cell.last() != Some(&id) {
                cell.push(id);
            }
        }
        while cell.len() > 1 && cell.first() == cell.last() {
            cell.pop();
        }
        if cell.len() >= 3 {
            cells.push(cell);
        }
    }
    PolytopalMesh::from_polygons(vertices, cells)
}

/// Sutherland-Hodgman clip of a convex polygon against `n . x <= b`.
fn clip_polygon(poly: &[[f64; 2]], nx: f64, ny: f64, b: f64) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let nv = poly.len();
    for i in 0..nv {
        let p = poly[i];
        let q = poly[(i + 1) % nv];
        let dp = nx * p[0] + ny * p[1] - b;
        let dq = nx * q[0] + ny * q[1] - b;
        if dp <= 0.0 {
            out.push(p);
        }
        if (dp < 0.0 && dq > 0.0) || (dp > 0.0 && dq < 0.0) {
            let t = dp / (dp - dq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    0.5 * (0..n)
        .map(|i| {
            let a = poly[i];
            let b = poly[(i + 1) % n];
            a[0] * b[1] - a[1] * b[0]
        })
        .sum::<f64>()
        .abs()
}

/// `n x n x n` uniform cubes on the unit cube.
pub fn cube_grid(n: usize) -> Result<PolytopalMesh> {
    assert!(n >= 1);
    let mut vertices = Vec::with_capacity((n + 1).pow(3));
    for k in 0..=n {
        for j in 0..=n {
            for i in 0..=n {
                vertices.push(vec![
                    i as f64 / n as f64,
                    j as f64 / n as f64,
                    k as f64 / n as f64,
                ]);
            }
        }
    }
    let id = |i: usize, j: usize, k: usize| (k * (n + 1) + j) * (n + 1) + i;
    let mut face_of: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut faces: Vec<Vec<usize>> = Vec::new();
    let mut cells: Vec<Vec<usize>> = Vec::new();
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let v = [
                    id(i, j, k),
                    id(i + 1, j, k),
                    id(i + 1, j + 1, k),
                    id(i, j + 1, k),
                    id(i, j, k + 1),
                    id(i + 1, j, k + 1),
                    id(i + 1, j + 1, k + 1),
                    id(i, j + 1, k + 1),
                ];
                let quads = [
                    [v[0], v[1], v[2], v[3]],
                    [v[4], v[5], v[6], v[7]],
                    [v[0], v[1], v[5], v[4]],
                    [v[1], v[2], v[6], v[5]],
                    [v[2], v[3], v[7], v[6]],
                    [v[3], v[0], v[4], v[7]],
                ];
                let mut cell = Vec::with_capacity(6);
                for q in quads {
                    let mut skey = q.to_vec();
                    skey.sort_unstable();
                    let fid = *face_of.entry(skey).or_insert_with(|| {
                        faces.push(q.to_vec());
                        faces.len() - 1
                    });
                    cell.push(fid);
                }
                cells.push(cell);
            }
        }
    }
    PolytopalMesh::from_polyhedra(vertices, faces, cells)
}

/// Random interval cell, for projector stress tests.
pub fn random_interval_cell(rng: &mut impl Rng) -> Result<PolytopalMesh> {
    let a = rng.gen_range(-1.0..1.0);
    let len = rng.gen_range(0.2..2.0);
    PolytopalMesh::from_intervals(vec![a, a + len], vec![(0, 1)])
}

/// Random star-shaped polygon cell: vertices at increasing angles around a
/// center, which therefore lies in the kernel.
pub fn random_polygon_cell(rng: &mut impl Rng) -> Result<PolytopalMesh> {
    let (verts, _) = random_star_polygon(rng, 0.5, 1.3);
    let n = verts.len();
    PolytopalMesh::from_polygons(verts, vec![(0..n).collect()])
}

fn random_star_polygon(rng: &mut impl Rng, rmin: f64, rmax: f64) -> (Vec<Vec<f64>>, Vec<[f64; 2]>) {
    let nv = rng.gen_range(4..=8usize);
    let mut gaps: Vec<f64> = (0..nv).map(|_| rng.gen_range(0.5..1.5)).collect();
    let total: f64 = gaps.iter().sum();
    for g in gaps.iter_mut() {
        *g *= 2.0 * std::f64::consts::PI / total;
    }
    let cx = rng.gen_range(-1.0..1.0);
    let cy = rng.gen_range(-1.0..1.0);
    let scale = rng.gen_range(0.4..1.5);
    let mut angle: f64 = rng.gen_range(0.0..1.0);
    let mut verts = Vec::with_capacity(nv);
    let mut local = Vec::with_capacity(nv);
    for g in gaps {
        let r = rng.gen_range(rmin..rmax) * scale;
        let p = [r * angle.cos(), r * angle.sin()];
        verts.push(vec![cx + p[0], cy + p[1]]);
        local.push(p);
        angle += g;
    }
    (verts, local)
}

/// Random axis-aligned box cell.
pub fn random_box_cell(rng: &mut impl Rng) -> Result<PolytopalMesh> {
    let o: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let l: Vec<f64> = (0..3).map(|_| rng.gen_range(0.3..1.5)).collect();
    let mut vertices = Vec::with_capacity(8);
    for dz in 0..2 {
        for dy in 0..2 {
            for dx in 0..2 {
                vertices.push(vec![
                    o[0] + dx as f64 * l[0],
                    o[1] + dy as f64 * l[1],
                    o[2] + dz as f64 * l[2],
                ]);
            }
        }
    }
    // vertex order: x fastest -> bottom cycle is 0,1,3,2
    let faces = vec![
        vec![0, 1, 3, 2],
        vec![4, 5, 7, 6],
        vec![0, 1, 5, 4],
        vec![1, 3, 7, 5],
        vec![3, 2, 6, 7],
        vec![2, 0, 4, 6],
    ];
    PolytopalMesh::from_polyhedra(vertices, faces, vec![vec![0, 1, 2, 3, 4, 5]])
}

/// Random sheared prism over a mildly star-shaped polygon base; all faces
/// stay planar (side quads have parallel top/bottom edges).
pub fn random_prism_cell(rng: &mut impl Rng) -> Result<PolytopalMesh> {
    let (base, _) = random_star_polygon(rng, 0.8, 1.2);
    let nv = base.len();
    let z0 = rng.gen_range(-1.0..0.0);
    let height = rng.gen_range(0.4..1.5);
    let sx = rng.gen_range(-0.3..0.3);
    let sy = rng.gen_range(-0.3..0.3);
    let mut vertices = Vec::with_capacity(2 * nv);
    for p in &base {
        vertices.push(vec![p[0], p[1], z0]);
    }
    for p in &base {
        vertices.push(vec![p[0] + sx * height, p[1] + sy * height, z0 + height]);
    }
    let mut faces = vec![(0..nv).collect::<Vec<_>>(), (nv..2 * nv).collect::<Vec<_>>()];
    for i in 0..nv {
        let j = (i + 1) % nv;
        faces.push(vec![i, j, nv + j, nv + i]);
    }
    let cell: Vec<usize> = (0..faces.len()).collect();
    PolytopalMesh::from_polyhedra(vertices, faces, vec![cell])
}
