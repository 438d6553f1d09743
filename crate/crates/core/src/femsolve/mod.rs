//! Global discretization of the model problem
//! `(grad^m u, grad^m v) + (u, v) = (f, v)` with natural boundary conditions:
//! dof enumeration, assembly, solvers, interpolation, error norms and
//! manufactured convergence studies.

mod assemble;
mod dofmap;
mod errors;
mod interpolate;
mod solve;

pub use assemble::{assemble, build_elements, LinearSystem};
pub use dofmap::GlobalDofMap;
pub use errors::{
    error_norms, polynomial_oscillation_is_zero, sample_diagnostics, DiagnosticsReport, ErrorReport,
};
pub use interpolate::{exact_dof_values, interpolate, InterpolationMode};
pub use solve::{solve, SolveOptions};

use crate::element::ElementConfig;
use crate::error::{Result, VemError};
use crate::meshgeom::PolytopalMesh;
use crate::polyspace::{MonomialBasis, PolyCoeffs};
use crate::tensoralg::{multi_indices_up_to, MultiIndex};
use std::collections::HashMap;

/// A smooth function together with its partial derivatives, as needed by dof
/// functionals and broken error norms.
pub trait Evaluable: Send + Sync {
    fn eval(&self, x: &[f64]) -> f64;
    /// `d^gamma u (x)`.
    fn deriv(&self, gamma: &MultiIndex, x: &[f64]) -> f64;

    /// All `d^gamma u (x)` at one point (overridable to share work across
    /// the derivatives).
    fn deriv_many(&self, gammas: &[MultiIndex], x: &[f64]) -> Vec<f64> {
        gammas.iter().map(|g| self.deriv(g, x)).collect()
    }
}

/// A polynomial as an [`Evaluable`], with derivatives precomputed up to a
/// given order (higher orders fall back to on-the-fly differentiation).
pub struct PolyExact {
    poly: PolyCoeffs,
    derivs: HashMap<MultiIndex, PolyCoeffs>,
}

impl PolyExact {
    pub fn new(poly: PolyCoeffs, max_order: usize) -> Self {
        let n = poly.basis().dim();
        let mut derivs = HashMap::new();
        for gamma in multi_indices_up_to(n, max_order as i32) {
            derivs.insert(gamma.clone(), poly.differentiate(&gamma));
        }
        PolyExact { poly, derivs }
    }

    pub fn poly(&self) -> &PolyCoeffs {
        &self.poly
    }
}

impl Evaluable for PolyExact {
    fn eval(&self, x: &[f64]) -> f64 {
        self.poly.eval(x)
    }

    fn deriv(&self, gamma: &MultiIndex, x: &[f64]) -> f64 {
        match self.derivs.get(gamma) {
            Some(d) => d.eval(x),
            None => self.poly.differentiate(gamma).eval(x),
        }
    }

    fn deriv_many(&self, gammas: &[MultiIndex], x: &[f64]) -> Vec<f64> {
        // one monomial evaluation pass serves every precomputed derivative:
        // they share the chart of `poly`, and lower degrees are prefixes of
        // its graded monomial ordering
        let vals = self.poly.basis().eval_all(x);
        gammas
            .iter()
            .map(|g| match self.derivs.get(g) {
                Some(d) => d.coeffs().iter().zip(&vals).map(|(c, v)| c * v).sum(),
                None => self.poly.differentiate(g).eval(x),
            })
            .collect()
    }
}

/// `amp * prod_i cos(pi x_i)`, with closed-form derivatives.
pub struct TrigExact {
    pub dim: usize,
    pub amp: f64,
}

impl Evaluable for TrigExact {
    fn eval(&self, x: &[f64]) -> f64 {
        self.amp * x.iter().map(|&xi| (std::f64::consts::PI * xi).cos()).product::<f64>()
    }

    fn deriv(&self, gamma: &MultiIndex, x: &[f64]) -> f64 {
        let pi = std::f64::consts::PI;
        let mut v = self.amp;
        for (i, &g) in gamma.0.iter().enumerate() {
            v *= pi.powi(g as i32) * (pi * x[i] + g as f64 * pi / 2.0).cos();
        }
        v
    }
}

/// Named manufactured-solution cases for convergence studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManufacturedCase {
    /// `u = prod_i (x_i (1 - x_i))^{2m}`: polynomial, flat to high order on
    /// the boundary of the unit box, with a polynomial source.
    Bump,
    /// `u = prod_i cos(pi x_i)` (second-order problems only).
    Trig,
    /// A fixed global polynomial of the given degree; interpolation only.
    Poly(u32),
}

impl std::str::FromStr for ManufacturedCase {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "bump" => Ok(ManufacturedCase::Bump),
            "trig" => Ok(ManufacturedCase::Trig),
            other => match other.strip_prefix("poly:") {
                Some(d) => d
                    .parse::<u32>()
                    .map(ManufacturedCase::Poly)
                    .map_err(|e| format!("bad polynomial degree in {other:?}: {e}")),
                None => Err(format!(
                    "unknown case {other:?} (expected bump, trig, or poly:<degree>)"
                )),
            },
        }
    }
}

/// A manufactured problem: exact solution, source, and (when the source is
/// polynomial) its coefficients for exact load integration.
pub struct Problem {
    pub u: Box<dyn Evaluable>,
    pub f: Box<dyn Evaluable>,
    pub f_poly: Option<PolyCoeffs>,
    /// Degree of `u` when polynomial (drives exact quadrature choices).
    pub u_degree: Option<i32>,
    /// Skip the solve and study the interpolant instead.
    pub interpolation_only: bool,
}

/// Global monomial chart of the ambient space (center 0, scale 1).
fn global_basis(n: usize, degree: i32) -> MonomialBasis {
    MonomialBasis::new(n, degree, vec![0.0; n], 1.0)
}

/// The constant-one polynomial on the global chart.
fn one_poly(n: usize) -> PolyCoeffs {
    PolyCoeffs::new(global_basis(n, 0), vec![1.0])
}

/// `x_i (1 - x_i)` on the global chart.
fn parabola_factor(n: usize, i: usize) -> PolyCoeffs {
    let basis = global_basis(n, 2);
    let mut p = PolyCoeffs::zero(basis);
    let mut lin = MultiIndex::zeros(n);
    lin.0[i] = 1;
    let mut quad = MultiIndex::zeros(n);
    quad.0[i] = 2;
    let bl = p.basis().position(&lin).unwrap();
    let bq = p.basis().position(&quad).unwrap();
    p.coeffs_mut()[bl] = 1.0;
    p.coeffs_mut()[bq] = -1.0;
    p
}

/// Builds the manufactured problem `case` in dimension `n` for order `m`.
pub fn manufactured(case: ManufacturedCase, n: usize, m: usize) -> Result<Problem> {
    match case {
        ManufacturedCase::Bump => {
            let mut u = one_poly(n);
            for i in 0..n {
                let factor = parabola_factor(n, i);
                for _ in 0..2 * m {
                    u = u.multiply(&factor);
                }
            }
            let f = u.minus_laplacian_power(m).add(&u);
            let deg = u.basis().degree();
            Ok(Problem {
                u: Box::new(PolyExact::new(u, m)),
                f: Box::new(PolyExact::new(f.clone(), m)),
                f_poly: Some(f),
                u_degree: Some(deg),
                interpolation_only: false,
            })
        }
        ManufacturedCase::Trig => {
            if m != 1 {
                return Err(VemError::UnsupportedConfig { n, m, k: -1 });
            }
            let amp = n as f64 * std::f64::consts::PI.powi(2) + 1.0;
            Ok(Problem {
                u: Box::new(TrigExact { dim: n, amp: 1.0 }),
                f: Box::new(TrigExact { dim: n, amp }),
                f_poly: None,
                u_degree: None,
                interpolation_only: false,
            })
        }
        ManufacturedCase::Poly(d) => {
            // (0.5 + sum_i c_i x_i)^d with distinct coefficients per axis
            let mut lin = PolyCoeffs::zero(global_basis(n, 1));
            let pos0 = lin.basis().position(&MultiIndex::zeros(n)).unwrap();
            lin.coeffs_mut()[pos0] = 0.5;
            for i in 0..n {
                let mut e = MultiIndex::zeros(n);
                e.0[i] = 1;
                let p = lin.basis().position(&e).unwrap();
                lin.coeffs_mut()[p] = 0.25 + 0.5 / (i as f64 + 1.0);
            }
            let mut u = one_poly(n);
            for _ in 0..d {
                u = u.multiply(&lin);
            }
            let deg = u.basis().degree();
            Ok(Problem {
                u: Box::new(PolyExact::new(u, m)),
                f: Box::new(PolyExact::new(PolyCoeffs::zero(global_basis(n, 0)), 0)),
                f_poly: None,
                u_degree: Some(deg),
                interpolation_only: true,
            })
        }
    }
}

/// Quadrature degree used for loads, interpolation dofs, and error norms of
/// a run: exact for polynomial data, generous for smooth data.
pub fn run_quad_degree(config: &ElementConfig, problem: &Problem) -> u32 {
    let base = 2 * config.k as i32 + 10;
    let exact = problem.u_degree.map(|d| d + config.k as i32).unwrap_or(0);
    base.max(exact) as u32
}

/// Solves (or interpolates) one manufactured problem on one mesh and returns
/// its error report.
pub fn run_problem(
    mesh: &PolytopalMesh,
    config: &ElementConfig,
    problem: &Problem,
    opts: &SolveOptions,
    quad_override: Option<u32>,
) -> Result<ErrorReport> {
    let elems = build_elements(mesh, config)?;
    let dofmap = GlobalDofMap::new(mesh, config);
    let quad_degree = quad_override.unwrap_or_else(|| run_quad_degree(config, problem));
    let (u_h, with_source) = if problem.interpolation_only {
        let ih = interpolate(
            mesh,
            &elems,
            &dofmap,
            problem.u.as_ref(),
            InterpolationMode::Averaged,
            quad_degree,
        )?;
        (ih, false)
    } else {
        let sys = assemble(
            mesh,
            &elems,
            &dofmap,
            problem.f.as_ref(),
            problem.f_poly.as_ref(),
            quad_degree,
        )?;
        (solve(&sys, opts)?, true)
    };
    error_norms(
        mesh,
        &elems,
        &dofmap,
        &u_h,
        problem.u.as_ref(),
        if with_source { Some(problem.f.as_ref()) } else { None },
        quad_degree,
    )
}

/// One refinement level of a convergence study.
#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub h: f64,
    pub n_dofs: usize,
    pub e_l2: f64,
    pub rate_l2: Option<f64>,
    pub e_hm: f64,
    pub rate_hm: Option<f64>,
    pub osc: f64,
}

/// Runs a manufactured problem on a refinement sequence and computes the
/// observed rates between consecutive levels.
pub fn convergence(
    meshes: &[PolytopalMesh],
    config: &ElementConfig,
    problem: &Problem,
    opts: &SolveOptions,
    quad_override: Option<u32>,
) -> Result<Vec<ConvergenceRow>> {
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(meshes.len());
    for mesh in meshes {
        let rep = run_problem(mesh, config, problem, opts, quad_override)?;
        let (rate_l2, rate_hm) = match rows.last() {
            Some(prev) => {
                let lh = (prev.h / rep.h).ln();
                (
                    Some((prev.e_l2 / rep.l2()).ln() / lh),
                    Some((prev.e_hm / rep.hm()).ln() / lh),
                )
            }
            None => (None, None),
        };
        rows.push(ConvergenceRow {
            h: rep.h,
            n_dofs: rep.n_dofs,
            e_l2: rep.l2(),
            rate_l2,
            e_hm: rep.hm(),
            rate_hm,
            osc: rep.osc,
        });
    }
    Ok(rows)
}

/// Renders convergence rows as CSV with a fixed header and formatting
/// (stable across runs and thread counts).
pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut out = String::from("h,N_h,e_L2,rate_L2,e_Hm,rate_Hm,osc\n");
    let fmt_rate = |r: Option<f64>| r.map(|v| format!("{v:.4}")).unwrap_or_default();
    for row in rows {
        out.push_str(&format!(
            "{:.8e},{},{:.8e},{},{:.8e},{},{:.8e}\n",
            row.h,
            row.n_dofs,
            row.e_l2,
            fmt_rate(row.rate_l2),
            row.e_hm,
            fmt_rate(row.rate_hm),
            row.osc
        ));
    }
    out
}
