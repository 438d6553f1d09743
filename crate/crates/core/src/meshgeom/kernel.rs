//! Star-shape kernels of polytopes as half-space intersections.
//!
//! The kernel of a star-shaped polytope is the set of points seeing the whole
//! boundary; it is the intersection of the inward half-spaces of all facet
//! hyperplanes. Its Chebyshev center (deepest point) serves as fan apex for
//! triangulation and its radius as the chunkiness estimate `rho_K`.

/// Inward half-space `n . x <= b` with unit normal `n` pointing outward.
#[derive(Debug, Clone)]
pub struct HalfSpace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl HalfSpace {
    /// Half-space through `point` with outward unit normal `normal`.
    pub fn through(normal: Vec<f64>, point: &[f64]) -> Self {
        let offset = normal.iter().zip(point).map(|(n, p)| n * p).sum();
        HalfSpace { normal, offset }
    }
}

/// Chebyshev center of the intersection of half-spaces in `dim` dimensions:
/// maximize `rho` subject to `n_i . x + rho <= b_i`. Returns `(center, rho)`;
/// `rho <= 0` means the kernel is empty (or a degenerate set).
///
/// Solved exactly by enumerating basic feasible points of the small LP
/// (`dim + 1` active constraints at a vertex); facet counts are tiny so the
/// combinatorial enumeration is cheap and has no tolerance knobs.
pub fn chebyshev_center(halves: &[HalfSpace], dim: usize) -> Option<(Vec<f64>, f64)> {
    let nvar = dim + 1;
    let m = halves.len();
    if m < nvar {
        return None;
    }
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut combo: Vec<usize> = (0..nvar).collect();
    loop {
        if let Some(sol) = solve_active(halves, dim, &combo) {
            let rho = sol[dim];
            let feasible = halves.iter().all(|h| {
                let lhs: f64 = h.normal.iter().zip(&sol).map(|(n, x)| n * x).sum::<f64>() + rho;
                lhs <= h.offset + 1e-9
            });
            if feasible && best.as_ref().map_or(true, |(_, r)| rho > *r) {
                best = Some((sol[..dim].to_vec(), rho));
            }
        }
        if !next_combination(&mut combo, m) {
            return best;
        }
    }
}

/// Advances `combo` to the next ascending k-combination of `0..m`.
fn next_combination(combo: &mut [usize], m: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < m - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn solve_active(halves: &[HalfSpace], dim: usize, combo: &[usize]) -> Option<Vec<f64>> {
    let nvar = dim + 1;
    let mut a = nalgebra::DMatrix::zeros(nvar, nvar);
    let mut b = nalgebra::DVector::zeros(nvar);
    for (row, &ci) in combo.iter().enumerate() {
        for col in 0..dim {
            a[(row, col)] = halves[ci].normal[col];
        }
        a[(row, dim)] = 1.0;
        b[row] = halves[ci].offset;
    }
    let lu = a.lu();
    if lu.determinant().abs() < 1e-12 {
        return None;
    }
    lu.solve(&b).map(|x| x.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn square_halves() -> Vec<HalfSpace> {
        vec![
            HalfSpace::through(vec![-1.0, 0.0], &[0.0, 0.0]),
            HalfSpace::through(vec![1.0, 0.0], &[1.0, 0.0]),
            HalfSpace::through(vec![0.0, -1.0], &[0.0, 0.0]),
            HalfSpace::through(vec![0.0, 1.0], &[0.0, 1.0]),
        ]
    }

    #[test]
    fn unit_square_center() {
        let (c, r) = chebyshev_center(&square_halves(), 2).unwrap();
        assert_relative_eq!(c[0], 0.5, epsilon = 1e-9);
        assert_relative_eq!(c[1], 0.5, epsilon = 1e-9);
        assert_relative_eq!(r, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn sliver_rectangle() {
        // 100:1 aspect: inscribed radius is half the short side
        let halves = vec![
            HalfSpace::through(vec![-1.0, 0.0], &[0.0, 0.0]),
            HalfSpace::through(vec![1.0, 0.0], &[1.0, 0.0]),
            HalfSpace::through(vec![0.0, -1.0], &[0.0, 0.0]),
            HalfSpace::through(vec![0.0, 1.0], &[0.0, 0.01]),
        ];
        let (_, r) = chebyshev_center(&halves, 2).unwrap();
        assert_relative_eq!(r, 0.005, epsilon = 1e-9);
    }

    #[test]
    fn empty_intersection() {
        let halves = vec![
            HalfSpace::through(vec![1.0, 0.0], &[0.0, 0.0]),
            HalfSpace::through(vec![-1.0, 0.0], &[1.0, 0.0]),
            HalfSpace::through(vec![0.0, 1.0], &[0.0, 0.0]),
            HalfSpace::through(vec![0.0, -1.0], &[0.0, 1.0]),
        ];
        let r = chebyshev_center(&halves, 2).map(|(_, r)| r).unwrap_or(-1.0);
        assert!(r <= 1e-9);
    }

    #[test]
    fn unit_cube_center() {
        let mut halves = Vec::new();
        for i in 0..3 {
            let mut lo = vec![0.0; 3];
            lo[i] = -1.0;
            halves.push(HalfSpace::through(lo, &[0.0, 0.0, 0.0]));
            let mut hi = vec![0.0; 3];
            hi[i] = 1.0;
            halves.push(HalfSpace::through(hi, &[1.0, 1.0, 1.0]));
        }
        let (c, r) = chebyshev_center(&halves, 3).unwrap();
        for x in c {
            assert_relative_eq!(x, 0.5, epsilon = 1e-9);
        }
        assert_relative_eq!(r, 0.5, epsilon = 1e-9);
    }
}
