//! Shared fixtures for the criterion benchmarks.

use polyvem::meshgeom::generate::{random_polygon_cell, square_grid};
use polyvem::PolytopalMesh;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A deterministic random polygon (single-cell mesh) for element benchmarks.
pub fn bench_polygon() -> PolytopalMesh {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    random_polygon_cell(&mut rng).expect("valid polygon")
}

/// The assembly benchmark mesh.
pub fn bench_grid() -> PolytopalMesh {
    square_grid(16).expect("valid grid")
}
