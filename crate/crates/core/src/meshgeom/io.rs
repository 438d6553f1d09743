//! Mesh file I/O.
//!
//! Schema: `{ "dimension": n, "vertices": [[x, ...]], "entities": [...] }`
//! where `entities[r]` lists the codimension-`r` entities, each as the list
//! of ids of its boundary entities in `entities[r+1]` (the last level
//! references vertex ids). Polygon boundaries need not be cyclically ordered;
//! cycles are reconstructed.

use super::PolytopalMesh;
use crate::error::{Result, VemError};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Serialize, Deserialize)]
struct MeshFile {
    dimension: usize,
    vertices: Vec<Vec<f64>>,
    entities: Vec<Vec<Vec<usize>>>,
}

pub fn write_mesh(mesh: &PolytopalMesh, path: &Path) -> Result<()> {
    let file = to_file(mesh);
    let json = serde_json::to_string_pretty(&file)?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn read_mesh(path: &Path) -> Result<PolytopalMesh> {
    let data = std::fs::read_to_string(path)?;
    from_json(&data)
}

pub fn to_json(mesh: &PolytopalMesh) -> Result<String> {
    Ok(serde_json::to_string_pretty(&to_file(mesh))?)
}

pub fn from_json(data: &str) -> Result<PolytopalMesh> {
    if data.trim().is_empty() {
        return Err(VemError::MeshSchema("empty mesh file".into()));
    }
    let file: MeshFile = serde_json::from_str(data)?;
    from_file(file)
}

fn to_file(mesh: &PolytopalMesh) -> MeshFile {
    let n = mesh.dim;
    let mut entities = Vec::with_capacity(n);
    for d in (1..=n).rev() {
        // codim r = n - d
        entities.push(mesh.entities[d].iter().map(|e| e.boundary.clone()).collect());
    }
    MeshFile {
        dimension: n,
        vertices: mesh.vertices.clone(),
        entities,
    }
}

fn from_file(file: MeshFile) -> Result<PolytopalMesh> {
    let n = file.dimension;
    if !(1..=3).contains(&n) {
        return Err(VemError::MeshSchema(format!("unsupported dimension {n}")));
    }
    if file.entities.len() != n {
        return Err(VemError::MeshSchema(format!(
            "expected {} entity levels for dimension {}, found {}",
            n,
            n,
            file.entities.len()
        )));
    }
    for (vi, v) in file.vertices.iter().enumerate() {
        if v.len() != n {
            return Err(VemError::MeshSchema(format!(
                "vertex {vi} has {} coordinates, expected {n}",
                v.len()
            )));
        }
    }
    let nvert = file.vertices.len();
    match n {
        1 => {
            let mut cells = Vec::with_capacity(file.entities[0].len());
            for (ci, cell) in file.entities[0].iter().enumerate() {
                if cell.len() != 2 {
                    return Err(VemError::MeshSchema(format!("cell {ci} must list 2 vertices")));
                }
                for &v in cell {
                    if v >= nvert {
                        return Err(VemError::MeshSchema(format!(
                            "cell {ci} references missing vertex {v}"
                        )));
                    }
                }
                cells.push((cell[0], cell[1]));
            }
            let coords = file.vertices.iter().map(|v| v[0]).collect();
            PolytopalMesh::from_intervals(coords, cells)
        }
        2 => {
            let edges = &file.entities[1];
            for (ei, e) in edges.iter().enumerate() {
                if e.len() != 2 {
                    return Err(VemError::MeshSchema(format!("edge {ei} must list 2 vertices")));
                }
                for &v in e {
                    if v >= nvert {
                        return Err(VemError::MeshSchema(format!(
                            "edge {ei} references missing vertex {v}"
                        )));
                    }
                }
            }
            let mut cells = Vec::with_capacity(file.entities[0].len());
            for (ci, cell) in file.entities[0].iter().enumerate() {
                let pairs: Vec<(usize, usize)> = cell
                    .iter()
                    .map(|&e| {
                        if e >= edges.len() {
                            Err(VemError::MeshSchema(format!(
                                "cell {ci} references missing edge {e}"
                            )))
                        } else {
                            Ok((edges[e][0], edges[e][1]))
                        }
                    })
                    .collect::<Result<_>>()?;
                cells.push(walk_cycle(&pairs, &format!("cell {ci}"))?);
            }
            PolytopalMesh::from_polygons(file.vertices, cells)
        }
        3 => {
            let edges = &file.entities[2];
            for (ei, e) in edges.iter().enumerate() {
                if e.len() != 2 {
                    return Err(VemError::MeshSchema(format!("edge {ei} must list 2 vertices")));
                }
                for &v in e {
                    if v >= nvert {
                        return Err(VemError::MeshSchema(format!(
                            "edge {ei} references missing vertex {v}"
                        )));
                    }
                }
            }
            let mut face_cycles = Vec::with_capacity(file.entities[1].len());
            for (fi, face) in file.entities[1].iter().enumerate() {
                let pairs: Vec<(usize, usize)> = face
                    .iter()
                    .map(|&e| {
                        if e >= edges.len() {
                            Err(VemError::MeshSchema(format!(
                                "face {fi} references missing edge {e}"
                            )))
                        } else {
                            Ok((edges[e][0], edges[e][1]))
                        }
                    })
                    .collect::<Result<_>>()?;
                face_cycles.push(walk_cycle(&pairs, &format!("face {fi}"))?);
            }
            let nfaces = face_cycles.len();
            for (ci, cell) in file.entities[0].iter().enumerate() {
                for &f in cell {
                    if f >= nfaces {
                        return Err(VemError::MeshSchema(format!(
                            "cell {ci} references missing face {f}"
                        )));
                    }
                }
            }
            PolytopalMesh::from_polyhedra(file.vertices, face_cycles, file.entities[0].clone())
        }
        _ => unreachable!(),
    }
}

/// Reconstructs a single vertex cycle from an unordered edge set.
fn walk_cycle(pairs: &[(usize, usize)], what: &str) -> Result<Vec<usize>> {
    use std::collections::HashMap;
    if pairs.len() < 3 {
        return Err(VemError::MeshSchema(format!("{what} has fewer than 3 edges")));
    }
    let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
    for &(a, b) in pairs {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    }
    for (&v, nb) in &adj {
        if nb.len() != 2 {
            return Err(VemError::MeshSchema(format!(
                "{what}: vertex {v} appears in {} edges, expected 2",
                nb.len()
            )));
        }
    }
    let start = *adj.keys().min().unwrap();
    let mut cycle = vec![start];
    let mut prev = start;
    let mut cur = adj[&start][0].min(adj[&start][1]);
    while cur != start {
        cycle.push(cur);
        let nb = &adj[&cur];
        let next = if nb[0] == prev { nb[1] } else { nb[0] };
        prev = cur;
        cur = next;
        if cycle.len() > pairs.len() {
            return Err(VemError::MeshSchema(format!("{what}: edges do not form a single cycle")));
        }
    }
    if cycle.len() != pairs.len() {
        return Err(VemError::MeshSchema(format!("{what}: edges do not form a single cycle")));
    }
    Ok(cycle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshgeom::generate;
    use approx::assert_relative_eq;

    #[test]
    fn round_trip_square_grid() {
        let m = generate::square_grid(3).unwrap();
        let json = to_json(&m).unwrap();
        let m2 = from_json(&json).unwrap();
        assert_eq!(m2.dim, m.dim);
        assert_eq!(m2.vertices, m.vertices);
        assert_eq!(m2.cells().len(), m.cells().len());
        assert_eq!(m2.entities[1].len(), m.entities[1].len());
        for (a, b) in m.cells().iter().zip(m2.cells()) {
            assert_relative_eq!(a.measure, b.measure, epsilon = 1e-12);
            let mut va = a.vertices.clone();
            let mut vb = b.vertices.clone();
            va.sort_unstable();
            vb.sort_unstable();
            assert_eq!(va, vb);
        }
    }

    #[test]
    fn round_trip_cube_grid() {
        let m = generate::cube_grid(2).unwrap();
        let json = to_json(&m).unwrap();
        let m2 = from_json(&json).unwrap();
        assert_eq!(m2.cells().len(), 8);
        assert_eq!(m2.entities[2].len(), 36);
        assert_relative_eq!(m2.domain_measure(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn hand_written_triangle() {
        let json = r#"{
            "dimension": 2,
            "vertices": [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            "entities": [
                [[0, 1, 2]],
                [[0, 1], [1, 2], [2, 0]]
            ]
        }"#;
        let m = from_json(json).unwrap();
        assert_eq!(m.cells().len(), 1);
        assert_eq!(m.entities[1].len(), 3);
        assert_eq!(m.vertices.len(), 3);
        assert_relative_eq!(m.cells()[0].measure, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn missing_vertex_is_named() {
        let json = r#"{
            "dimension": 2,
            "vertices": [[0.0, 0.0], [1.0, 0.0]],
            "entities": [
                [[0, 1, 2]],
                [[0, 1], [1, 7], [1, 0]]
            ]
        }"#;
        let err = from_json(json).unwrap_err();
        assert!(err.to_string().contains("edge 1"), "{err}");
    }

    #[test]
    fn empty_file_is_schema_error() {
        let err = from_json("  ").unwrap_err();
        assert!(matches!(err, VemError::MeshSchema(_)));
    }
}
