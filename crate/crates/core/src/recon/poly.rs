//! Complete cubic monomial basis in centroid-centred, size-scaled coordinates.

use crate::geometry::Vec2;
use crate::mesh::CellGeom;

pub const N_BASIS: usize = 10;

/// Exponents (p, q) of ξ^p η^q, ordered by total degree.
pub const EXPONENTS: [(u32, u32); N_BASIS] = [
    (0, 0),
    (1, 0),
    (0, 1),
    (2, 0),
    (1, 1),
    (0, 2),
    (3, 0),
    (2, 1),
    (1, 2),
    (0, 3),
];

/// Number of basis functions up to the given total degree.
pub fn basis_len(degree: usize) -> usize {
    (degree + 1) * (degree + 2) / 2
}

fn falling(n: u32, k: u32) -> f64 {
    if k > n {
        0.0
    } else {
        (0..k).map(|i| (n - i) as f64).product()
    }
}

/// ∂^dp_ξ ∂^dq_η of every basis function at (ξ, η).
pub fn basis_partial(xi: f64, eta: f64, dp: u32, dq: u32) -> [f64; N_BASIS] {
    EXPONENTS.map(|(p, q)| {
        let c = falling(p, dp) * falling(q, dq);
        if c == 0.0 {
            0.0
        } else {
            c * xi.powi((p - dp) as i32) * eta.powi((q - dq) as i32)
        }
    })
}

pub fn basis(xi: f64, eta: f64) -> [f64; N_BASIS] {
    basis_with_grad(xi, eta).0
}

/// Basis values with their ξ- and η-derivatives.
pub fn basis_with_grad(x: f64, y: f64) -> ([f64; N_BASIS], [f64; N_BASIS], [f64; N_BASIS]) {
    let (xx, xy, yy) = (x * x, x * y, y * y);
    (
        [1.0, x, y, xx, xy, yy, xx * x, xx * y, x * yy, yy * y],
        [0.0, 1.0, 0.0, 2.0 * x, y, 0.0, 3.0 * xx, 2.0 * xy, yy, 0.0],
        [0.0, 0.0, 1.0, 0.0, x, 2.0 * y, 0.0, xx, 2.0 * xy, 3.0 * yy],
    )
}

/// All first, second and third ξ/η-derivatives of the basis at (ξ, η), in
/// the order ξ, η, ξξ, ξη, ηη, ξξξ, ξξη, ξηη, ηηη.
pub fn basis_derivatives(x: f64, y: f64) -> [[f64; N_BASIS]; 9] {
    let (_, dx, dy) = basis_with_grad(x, y);
    [
        dx,
        dy,
        [0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 6.0 * x, 2.0 * y, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 2.0 * x, 2.0 * y, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 2.0 * x, 6.0 * y],
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 6.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 6.0],
    ]
}

/// A polynomial of degree ≤ 3 attached to one cell, stored as coefficients of
/// the scaled monomial basis around that cell's centroid.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CubicPoly {
    pub coeffs: [f64; N_BASIS],
}

impl CubicPoly {
    pub fn constant(q: f64) -> Self {
        let mut coeffs = [0.0; N_BASIS];
        coeffs[0] = q;
        CubicPoly { coeffs }
    }

    /// `q0 + g·(x − x₀)` on a cell of characteristic size `size`.
    pub fn linear(q0: f64, grad: [f64; 2], size: f64) -> Self {
        let mut coeffs = [0.0; N_BASIS];
        coeffs[0] = q0;
        coeffs[1] = grad[0] * size;
        coeffs[2] = grad[1] * size;
        CubicPoly { coeffs }
    }

    pub fn local(cell: &CellGeom, x: &Vec2) -> (f64, f64) {
        let d = (x - cell.centroid) / cell.size;
        (d.x, d.y)
    }

    /// Value and physical gradient at `x`.
    pub fn eval(&self, cell: &CellGeom, x: &Vec2) -> (f64, [f64; 2]) {
        let (xi, eta) = Self::local(cell, x);
        let dot = |b: [f64; N_BASIS]| self.coeffs.iter().zip(b).map(|(c, b)| c * b).sum::<f64>();
        let (b, bx, by) = basis_with_grad(xi, eta);
        let v = dot(b);
        let gx = dot(bx) / cell.size;
        let gy = dot(by) / cell.size;
        (v, [gx, gy])
    }

    pub fn value(&self, cell: &CellGeom, x: &Vec2) -> f64 {
        self.eval(cell, x).0
    }

    pub fn partial(&self, xi: f64, eta: f64, dp: u32, dq: u32) -> f64 {
        self.coeffs
            .iter()
            .zip(basis_partial(xi, eta, dp, dq))
            .map(|(c, b)| c * b)
            .sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        CubicPoly { coeffs: self.coeffs.map(|c| c * s) }
    }

    pub fn axpy(&mut self, a: f64, other: &CubicPoly) {
        for (c, o) in self.coeffs.iter_mut().zip(other.coeffs) {
            *c += a * o;
        }
    }

    /// Smoothness indicator Σ_r |Ω|^{r−1} ∫_Ω Σ_{|α|=r} (D^α P)² dΩ.
    ///
    /// With the basis scaled by √|Ω| every order collapses to the cell mean of
    /// the squared scaled derivatives; `quad` holds local (ξ, η, weight) points
    /// of a rule exact for quartics.
    pub fn smoothness(&self, quad: &[(f64, f64, f64)]) -> f64 {
        let mut is = 0.0;
        for r in 1..=3u32 {
            for dp in 0..=r {
                let dq = r - dp;
                is += quad
                    .iter()
                    .map(|&(xi, eta, w)| w * self.partial(xi, eta, dp, dq).powi(2))
                    .sum::<f64>();
            }
        }
        is
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::signed_area;
    use crate::quadrature::triangle_rule_deg5;

    fn cell(p: [Vec2; 3]) -> (CellGeom, Vec<(f64, f64, f64)>) {
        let area = signed_area(&p[0], &p[1], &p[2]);
        let g = CellGeom {
            area,
            centroid: (p[0] + p[1] + p[2]) / 3.0,
            inradius: 0.0,
            size: area.sqrt(),
            vertices: p,
        };
        let quad = triangle_rule_deg5()
            .iter()
            .map(|(b, w)| {
                let x = p[0] * b[0] + p[1] * b[1] + p[2] * b[2];
                let (xi, eta) = CubicPoly::local(&g, &x);
                (xi, eta, *w)
            })
            .collect();
        (g, quad)
    }

    #[test]
    fn basis_len_matches_degree() {
        assert_eq!(basis_len(1), 3);
        assert_eq!(basis_len(2), 6);
        assert_eq!(basis_len(3), N_BASIS);
    }

    #[test]
    fn constant_has_zero_smoothness() {
        let (_, quad) = cell([Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)]);
        assert_eq!(CubicPoly::constant(7.0).smoothness(&quad), 0.0);
    }

    #[test]
    fn unit_gradient_on_unit_area_cell() {
        let (g, quad) = cell([Vec2::new(0.0, 0.0), Vec2::new(2.0, 0.0), Vec2::new(0.0, 1.0)]);
        assert!((g.area - 1.0).abs() < 1e-15);
        let p = CubicPoly::linear(3.0, [0.6, 0.8], g.size);
        assert!((p.smoothness(&quad) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn smoothness_is_quadratically_homogeneous() {
        let (_, quad) = cell([Vec2::new(0.1, 0.0), Vec2::new(0.4, 0.1), Vec2::new(0.0, 0.3)]);
        let p = CubicPoly { coeffs: [1.0, 0.2, -0.3, 0.5, 0.1, -0.7, 0.05, 0.3, -0.2, 0.4] };
        let s = 3.7;
        let ratio = p.scaled(s).smoothness(&quad) / p.smoothness(&quad);
        assert!((ratio - s * s).abs() < 1e-12);
    }

    #[test]
    fn fast_basis_matches_generic_partials() {
        let (x, y) = (0.37, -0.81);
        let (v, dx, dy) = basis_with_grad(x, y);
        for k in 0..N_BASIS {
            assert!((v[k] - basis_partial(x, y, 0, 0)[k]).abs() < 1e-15);
            assert!((dx[k] - basis_partial(x, y, 1, 0)[k]).abs() < 1e-15);
            assert!((dy[k] - basis_partial(x, y, 0, 1)[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn derivative_table_matches_generic_partials() {
        let (x, y) = (-0.4, 0.9);
        let order = [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3)];
        for (d, (dp, dq)) in basis_derivatives(x, y).iter().zip(order) {
            let g = basis_partial(x, y, dp, dq);
            assert!(d.iter().zip(g).all(|(a, b)| (a - b).abs() < 1e-15));
        }
    }

    #[test]
    fn eval_matches_physical_field() {
        let (g, _) = cell([Vec2::new(0.1, 0.0), Vec2::new(0.4, 0.1), Vec2::new(0.0, 0.3)]);
        let p = CubicPoly::linear(2.0, [3.0, -1.0], g.size);
        let x = Vec2::new(0.2, 0.2);
        let (v, grad) = p.eval(&g, &x);
        let d = x - g.centroid;
        assert!((v - (2.0 + 3.0 * d.x - d.y)).abs() < 1e-14);
        assert!((grad[0] - 3.0).abs() < 1e-14 && (grad[1] + 1.0).abs() < 1e-14);
    }
}
