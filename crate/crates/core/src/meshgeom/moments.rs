//! Exact monomial moments and quadrature rules on mesh entities.
//!
//! Segments are integrated in closed form, polygons by a fan triangulation
//! from a kernel point with collapsed-square Gauss rules, and polyhedra by
//! reducing volume integrals to face integrals through the divergence
//! identity. All rules are exact for the stated polynomial degree.

use crate::error::{Result, VemError};
use crate::polyspace::{MonomialBasis, PolyCoeffs};
use crate::tensoralg::MultiIndex;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, exact through degree
/// `2 * points - 1`. Newton iteration on the Legendre recurrence.
pub fn gauss_legendre(points: usize) -> Vec<(f64, f64)> {
    assert!(points >= 1);
    let n = points;
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.push((x, w));
    }
    rule.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    rule
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss rule on `[0, 1]`, exact through `degree`.
pub fn gauss_unit(degree: u32) -> Vec<(f64, f64)> {
    let pts = (degree as usize + 2) / 2;
    gauss_legendre(pts.max(1))
        .into_iter()
        .map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect()
}

/// Quadrature on the segment `[a, b]` in ambient coordinates, exact through
/// `degree`; weights sum to the segment length.
pub fn segment_rule(a: &[f64], b: &[f64], degree: u32) -> Vec<(Vec<f64>, f64)> {
    let len: f64 = a.iter().zip(b).map(|(x, y)| (y - x).powi(2)).sum::<f64>().sqrt();
    gauss_unit(degree)
        .into_iter()
        .map(|(t, w)| {
            let p: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect();
            (p, w * len)
        })
        .collect()
}

/// Quadrature on the triangle `(p0, p1, p2)` given in d-dimensional
/// coordinates, exact through `degree`; weights sum to the triangle area.
/// Collapsed-square (Duffy) map `x = u, y = v (1 - u)` with a Gauss rule
/// sized for the extra Jacobian degree.
pub fn triangle_rule(p0: &[f64], p1: &[f64], p2: &[f64], degree: u32) -> Vec<(Vec<f64>, f64)> {
    let dim = p0.len();
    let e1: Vec<f64> = p1.iter().zip(p0).map(|(a, b)| a - b).collect();
    let e2: Vec<f64> = p2.iter().zip(p0).map(|(a, b)| a - b).collect();
    let area2 = parallelogram_area(&e1, &e2);
    let ga = gauss_unit(degree + 1);
    let gb = gauss_unit(degree);
    let mut out = Vec::with_capacity(ga.len() * gb.len());
    for &(u, wu) in &ga {
        for &(v, wv) in &gb {
            let x = u;
            let y = v * (1.0 - u);
            let jac = 1.0 - u;
            let p: Vec<f64> = (0..dim).map(|i| p0[i] + x * e1[i] + y * e2[i]).collect();
            out.push((p, wu * wv * jac * area2));
        }
    }
    out
}

fn parallelogram_area(e1: &[f64], e2: &[f64]) -> f64 {
    match e1.len() {
        2 => e1[0] * e2[1] - e1[1] * e2[0],
        3 => {
            let c = cross3(e1, e2);
            (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt()
        }
        _ => panic!("triangle rule requires ambient dimension 2 or 3"),
    }
}

pub fn cross3(a: &[f64], b: &[f64]) -> Vec<f64> {
    vec![
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Quadrature on the tetrahedron `(p0, p1, p2, p3)`, exact through `degree`;
/// weights sum to the (unsigned) volume.
pub fn tetrahedron_rule(
    p0: &[f64],
    p1: &[f64],
    p2: &[f64],
    p3: &[f64],
    degree: u32,
) -> Vec<(Vec<f64>, f64)> {
    let e1: Vec<f64> = p1.iter().zip(p0).map(|(a, b)| a - b).collect();
    let e2: Vec<f64> = p2.iter().zip(p0).map(|(a, b)| a - b).collect();
    let e3: Vec<f64> = p3.iter().zip(p0).map(|(a, b)| a - b).collect();
    let c = cross3(&e1, &e2);
    let det: f64 = c.iter().zip(&e3).map(|(a, b)| a * b).sum();
    let vol6 = det.abs();
    let ga = gauss_unit(degree + 2);
    let gb = gauss_unit(degree + 1);
    let gc = gauss_unit(degree);
    let mut out = Vec::with_capacity(ga.len() * gb.len() * gc.len());
    for &(a, wa) in &ga {
        for &(b, wb) in &gb {
            for &(cc, wc) in &gc {
                let u = a;
                let v = b * (1.0 - a);
                let w = cc * (1.0 - a) * (1.0 - b);
                let jac = (1.0 - a) * (1.0 - a) * (1.0 - b);
                let p: Vec<f64> = (0..3)
                    .map(|i| p0[i] + u * e1[i] + v * e2[i] + w * e3[i])
                    .collect();
                out.push((p, wa * wb * wc * jac * vol6));
            }
        }
    }
    out
}

/// Raw integrals `int_G m_beta` of the scaled chart monomials over a segment
/// of length `len`, chart centered at the midpoint with scale `len`
/// (so the chart runs over `[-1/2, 1/2]`).
pub fn segment_moments(len: f64, degree: i32) -> Vec<f64> {
    crate::tensoralg::multi_indices_up_to(1, degree)
        .iter()
        .map(|beta| {
            let b = beta.0[0] as i32;
            let upper = 0.5f64.powi(b + 1);
            let lower = (-0.5f64).powi(b + 1);
            len * (upper - lower) / (b as f64 + 1.0)
        })
        .collect()
}

/// Raw integrals of chart monomials `u^beta` over a polygon given by its
/// vertex cycle in *scaled chart* coordinates, fanned from `apex` (a kernel
/// point in the same chart). `scale_pow = h^2` converts the chart area
/// element back to the physical one.
pub fn polygon_moments(
    cycle: &[Vec<f64>],
    apex: &[f64],
    scale_pow: f64,
    degree: i32,
) -> Vec<f64> {
    let indices = crate::tensoralg::multi_indices_up_to(2, degree);
    let mut vals = vec![0.0; indices.len()];
    let quad_degree = degree.max(0) as u32;
    let nv = cycle.len();
    for i in 0..nv {
        let p1 = &cycle[i];
        let p2 = &cycle[(i + 1) % nv];
        // 2d triangle weights are signed by orientation, so fan overlaps of a
        // star-shaped (possibly non-convex) cycle cancel exactly
        for (pt, w) in triangle_rule(apex, p1, p2, quad_degree) {
            for (j, beta) in indices.iter().enumerate() {
                let v = pt[0].powi(beta.0[0] as i32) * pt[1].powi(beta.0[1] as i32);
                vals[j] += w * v;
            }
        }
    }
    for v in &mut vals {
        *v *= scale_pow;
    }
    vals
}

/// Raw integrals `int_K m_beta` of the cell chart monomials over a polyhedron
/// via the divergence identity `int_K d_i p = int_{dK} p nu_i`, averaged over
/// the three axes. `face_integrals[f]` must hold the integrals over face `f`
/// of all cell-chart monomials through `degree + 1` (graded colex order), and
/// `oriented_normals[f]` the outward normal `sigma_{K,F} nu_F`.
pub fn polyhedron_moments(
    cell_basis: &MonomialBasis,
    degree: i32,
    face_integrals: &[Vec<f64>],
    oriented_normals: &[Vec<f64>],
) -> Vec<f64> {
    let h = cell_basis.scale();
    let lifted = cell_basis.with_degree(degree + 1);
    let indices = crate::tensoralg::multi_indices_up_to(3, degree);
    indices
        .iter()
        .map(|beta| {
            let mut acc = 0.0;
            for i in 0..3 {
                let mut shifted = beta.clone();
                shifted.0[i] += 1;
                let pos = lifted.position(&shifted).expect("lifted index");
                let mut bd = 0.0;
                for (fi, nf) in oriented_normals.iter().enumerate() {
                    bd += nf[i] * face_integrals[fi][pos];
                }
                acc += h / (beta.0[i] as f64 + 1.0) * bd;
            }
            acc / 3.0
        })
        .collect()
}

/// Integrals over one planar face of every cell-chart monomial through
/// `degree`, computed by restricting each monomial to the face chart and
/// contracting with the face moment table.
pub fn face_integrals_of_cell_monomials(
    cell_basis: &MonomialBasis,
    degree: i32,
    face_centroid: &[f64],
    face_tangents: &[Vec<f64>],
    face_moments: &[f64],
    face_basis: &MonomialBasis,
) -> Vec<f64> {
    let basis = cell_basis.with_degree(degree);
    basis
        .indices()
        .iter()
        .map(|beta| {
            let mut coeffs = vec![0.0; basis.len()];
            coeffs[basis.position(beta).unwrap()] = 1.0;
            let p = PolyCoeffs::new(basis.clone(), coeffs);
            let r = p.compose_affine(face_centroid, face_tangents, face_basis);
            r.coeffs()
                .iter()
                .zip(face_moments)
                .map(|(c, m)| c * m)
                .sum()
        })
        .collect()
}

/// Lookup table of raw monomial integrals over one entity, on its canonical
/// scaled chart.
#[derive(Debug, Clone)]
pub struct MomentTable {
    basis: MonomialBasis,
    measure: f64,
    values: Vec<f64>,
}

impl MomentTable {
    pub fn new(basis: MonomialBasis, measure: f64, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), basis.len());
        MomentTable { basis, measure, values }
    }

    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    pub fn degree(&self) -> i32 {
        self.basis.degree()
    }

    pub fn measure(&self) -> f64 {
        self.measure
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Raw integral `int_G m_beta`.
    pub fn get(&self, beta: &MultiIndex) -> Result<f64> {
        self.basis
            .position(beta)
            .map(|i| self.values[i])
            .ok_or(VemError::InsufficientMoments {
                have: self.basis.degree(),
                need: beta.order() as i32,
            })
    }

    /// Average `(1/|G|) int_G m_beta`.
    pub fn average(&self, beta: &MultiIndex) -> Result<f64> {
        Ok(self.get(beta)? / self.measure)
    }

    /// Exact integral of a polynomial expressed on the same chart.
    pub fn integrate(&self, p: &PolyCoeffs) -> Result<f64> {
        debug_assert!(p.basis().same_chart(&self.basis));
        let mut acc = 0.0;
        for (i, beta) in p.basis().indices().iter().enumerate() {
            if p.coeffs()[i] != 0.0 {
                acc += p.coeffs()[i] * self.get(beta)?;
            }
        }
        Ok(acc)
    }

    /// Exact integral of a product of polynomials on the same chart.
    pub fn integrate_product(&self, p: &PolyCoeffs, q: &PolyCoeffs) -> Result<f64> {
        self.integrate(&p.multiply(q))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_exactness() {
        for pts in 1..=9usize {
            let rule = gauss_legendre(pts);
            for d in 0..=(2 * pts - 1) as i32 {
                let val: f64 = rule.iter().map(|(x, w)| w * x.powi(d)).sum();
                let exact = if d % 2 == 0 { 2.0 / (d as f64 + 1.0) } else { 0.0 };
                assert_relative_eq!(val, exact, epsilon = 1e-12, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn triangle_rule_exact() {
        // reference triangle: int x^a y^b = a! b! / (a + b + 2)!
        let p0 = [0.0, 0.0];
        let p1 = [1.0, 0.0];
        let p2 = [0.0, 1.0];
        for a in 0..4u32 {
            for b in 0..4u32 {
                let rule = triangle_rule(&p0, &p1, &p2, a + b);
                let val: f64 = rule
                    .iter()
                    .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                    .sum();
                let exact = crate::tensoralg::factorial(a) * crate::tensoralg::factorial(b)
                    / crate::tensoralg::factorial(a + b + 2);
                assert_relative_eq!(val, exact, epsilon = 1e-13, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn tetrahedron_rule_exact() {
        // reference tet: int x^a y^b z^c = a! b! c! / (a + b + c + 3)!
        let p = [
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        ];
        for a in 0..3u32 {
            for b in 0..3u32 {
                for c in 0..3u32 {
                    let rule = tetrahedron_rule(&p[0], &p[1], &p[2], &p[3], a + b + c);
                    let val: f64 = rule
                        .iter()
                        .map(|(q, w)| {
                            w * q[0].powi(a as i32) * q[1].powi(b as i32) * q[2].powi(c as i32)
                        })
                        .sum();
                    let exact = crate::tensoralg::factorial(a)
                        * crate::tensoralg::factorial(b)
                        * crate::tensoralg::factorial(c)
                        / crate::tensoralg::factorial(a + b + c + 3);
                    assert_relative_eq!(val, exact, epsilon = 1e-13, max_relative = 1e-11);
                }
            }
        }
    }

    #[test]
    fn segment_moments_closed_form() {
        let vals = segment_moments(2.0, 3);
        // chart u in [-1/2, 1/2]; raw integrals: len * avg
        assert_relative_eq!(vals[0], 2.0);
        assert_relative_eq!(vals[1], 0.0);
        assert_relative_eq!(vals[2], 2.0 / 12.0);
        assert_relative_eq!(vals[3], 0.0);
    }
}
