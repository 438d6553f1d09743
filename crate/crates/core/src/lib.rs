//! `H^m`-conforming virtual elements of degree `k >= m` on polytopal meshes,
//! together with a conforming discretization of the polyharmonic model problem
//! `(grad^m u, grad^m v) + (u, v) = (f, v)`.
//!
//! The crate is organized around the pipeline
//! mesh ([`meshgeom`]) -> local element machinery ([`element`]) ->
//! global assembly and solve ([`femsolve`]), with the supporting
//! multi-index/symmetric-tensor algebra in [`tensoralg`] and polynomial
//! spaces in scaled monomial coordinates in [`polyspace`].

pub mod element;
pub mod error;
pub mod femsolve;
pub mod meshgeom;
pub mod polyspace;
pub mod tensoralg;

pub use element::{DofKind, DofLayout, DofVector, ElementCache, ElementConfig, LocalElement};
pub use error::VemError;
pub use femsolve::{
    assemble, build_elements, convergence, convergence_csv, error_norms, interpolate,
    manufactured, run_problem, run_quad_degree, sample_diagnostics, solve, ConvergenceRow,
    DiagnosticsReport,
    ErrorReport, Evaluable, GlobalDofMap, InterpolationMode, LinearSystem, ManufacturedCase,
    PolyExact, Problem, SolveOptions, TrigExact,
};
pub use meshgeom::{MeshKind, MomentTable, PolytopalMesh};
pub use polyspace::{MonomialBasis, PolyCoeffs};
pub use tensoralg::{Frame, MultiIndex, SymTensor};
