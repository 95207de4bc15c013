//! Compact fourth-order reconstruction from cell averages and cell-averaged
//! gradients, limited by a WENO combination with linear sub-stencil polynomials.
//!
//! On each cell a cubic `P³` is fitted by constrained least squares: the
//! cell's own average is an exact constraint, the averages of up to nine
//! neighbours and the (size-scaled) gradients of the cell and its three edge
//! neighbours are fitted in the least-squares sense. Near boundaries the
//! stencil shrinks and the fit drops to a quadratic or linear polynomial.

pub mod poly;
pub mod weno;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::geometry::Vec2;
use crate::mesh::{Geometry, Topology};
use crate::quadrature::{triangle_average, triangle_rule_deg5};
pub use poly::{basis_len, CubicPoly, N_BASIS};

/// Ordered reconstruction stencil: the cell itself, its edge neighbours,
/// then the second ring of cells reached through those neighbours.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stencil {
    pub cells: Vec<usize>,
    pub n_edge: usize,
}

impl Stencil {
    /// Slots carrying gradient rows: the cell and its edge neighbours.
    pub fn n_grad(&self) -> usize {
        1 + self.n_edge
    }

    pub fn n_rows(&self) -> usize {
        self.cells.len() + 2 * self.n_grad()
    }
}

pub fn assemble_stencil(topo: &Topology, cell: usize) -> Stencil {
    let mut cells = vec![cell];
    cells.extend(topo.cell_neighbors[cell].iter().flatten());
    let n_edge = cells.len() - 1;
    cells.extend(&topo.vertex_neighbors[cell]);
    Stencil { cells, n_edge }
}

/// Row data of the scaled least-squares system of one cell.
fn system_matrix(stencil: &Stencil, geom: &Geometry, degree: usize) -> DMatrix<f64> {
    let nb = basis_len(degree);
    let c0 = &geom.cells[stencil.cells[0]];
    let mut a = DMatrix::zeros(stencil.n_rows(), nb);
    for (i, &c) in stencil.cells.iter().enumerate() {
        let tri = cell_vertices(geom, c);
        for (b, w) in triangle_rule_deg5() {
            let x = tri[0] * b[0] + tri[1] * b[1] + tri[2] * b[2];
            let (xi, eta) = CubicPoly::local(c0, &x);
            let (v, dx, dy) = poly::basis_with_grad(xi, eta);
            for k in 0..nb {
                a[(i, k)] += w * v[k];
                if i < stencil.n_grad() {
                    let r = stencil.cells.len() + 2 * i;
                    a[(r, k)] += w * dx[k];
                    a[(r + 1, k)] += w * dy[k];
                }
            }
        }
    }
    a
}

fn cell_vertices(geom: &Geometry, c: usize) -> [Vec2; 3] {
    geom.cells[c].vertices
}

/// Solves the constrained least-squares saddle-point system and returns the
/// operator mapping the data vector `q` (row order of [`system_matrix`]) to
/// polynomial coefficients, or `None` when the system is singular.
fn cls_operator(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let (rows, nb) = a.shape();
    let a0 = a.rows(0, 1);
    let ar = a.rows(1, rows - 1);
    let mut k = DMatrix::zeros(nb + 1, nb + 1);
    k.view_mut((0, 0), (nb, nb)).copy_from(&(ar.transpose() * ar * 2.0));
    k.view_mut((0, nb), (nb, 1)).copy_from(&a0.transpose());
    k.view_mut((nb, 0), (1, nb)).copy_from(&a0);
    let mut rhs = DMatrix::zeros(nb + 1, rows);
    rhs.view_mut((0, 1), (nb, rows - 1)).copy_from(&(ar.transpose() * 2.0));
    rhs[(nb, 0)] = 1.0;
    let sol = k.lu().solve(&rhs)?;
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(sol.rows(0, nb).into_owned())
}

fn well_conditioned(a: &DMatrix<f64>) -> bool {
    let (rows, nb) = a.shape();
    if rows < nb + 2 {
        return false;
    }
    let sv = a.singular_values();
    let (lo, hi) = sv.iter().fold((f64::INFINITY, 0f64), |(l, h), &s| (l.min(s), h.max(s)));
    hi > 0.0 && lo / hi > 1e-10
}

#[derive(Clone, Debug)]
struct CellOperator {
    stencil: Stencil,
    degree: usize,
    /// Transposed operator: column k maps the data vector to coefficient k.
    op_t: DMatrix<f64>,
    /// ξ-centroid offsets of the edge neighbours, in stencil slot order.
    sub_offsets: Vec<[f64; 2]>,
    /// Quadratic form of the smoothness indicator on coefficients 1..10.
    gram: [[f64; N_BASIS - 1]; N_BASIS - 1],
}

fn smoothness_gram(quad: &[(f64, f64, f64)]) -> [[f64; N_BASIS - 1]; N_BASIS - 1] {
    let mut g = [[0.0; N_BASIS - 1]; N_BASIS - 1];
    for &(xi, eta, w) in quad {
        for d in poly::basis_derivatives(xi, eta) {
            for a in 1..N_BASIS {
                if d[a] == 0.0 {
                    continue;
                }
                for b in a..N_BASIS {
                    g[a - 1][b - 1] += w * d[a] * d[b];
                }
            }
        }
    }
    for a in 0..N_BASIS - 1 {
        for b in 0..a {
            g[a][b] = g[b][a];
        }
    }
    g
}

/// Per-field reconstruction output on one cell.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CellReconstruction {
    pub poly: CubicPoly,
    pub cubic: CubicPoly,
    pub smoothness: f64,
}

/// Geometry-dependent reconstruction operators for every cell.
#[derive(Clone, Debug)]
pub struct Reconstructor {
    cells: Vec<CellOperator>,
    /// Polynomial degree chosen per cell at construction; kept on rebuild.
    degrees: Vec<usize>,
    pub nonlinear: bool,
}

impl Reconstructor {
    pub fn new(topo: &Topology, geom: &Geometry) -> Self {
        let stencils: Vec<Stencil> = (0..topo.n_cells()).map(|c| assemble_stencil(topo, c)).collect();
        let degrees: Vec<usize> = stencils
            .par_iter()
            .map(|s| {
                for d in [3, 2] {
                    if well_conditioned(&system_matrix(s, geom, d)) {
                        return d;
                    }
                }
                1
            })
            .collect();
        let mut r = Reconstructor { cells: Vec::new(), degrees, nonlinear: true };
        r.cells = r.build_operators(stencils, geom);
        r
    }

    fn build_operators(&self, stencils: Vec<Stencil>, geom: &Geometry) -> Vec<CellOperator> {
        stencils
            .into_par_iter()
            .enumerate()
            .map(|(c, stencil)| {
                let mut degree = self.degrees[c];
                let mut op = None;
                while degree > 1 && op.is_none() {
                    op = cls_operator(&system_matrix(&stencil, geom, degree));
                    if op.is_none() {
                        degree -= 1;
                    }
                }
                let op_t = op.map(|o| o.transpose()).unwrap_or_else(|| DMatrix::zeros(0, 0));
                let c0 = &geom.cells[c];
                let sub_offsets = stencil.cells[1..=stencil.n_edge]
                    .iter()
                    .map(|&m| {
                        let d = (geom.cells[m].centroid - c0.centroid) / c0.size;
                        [d.x, d.y]
                    })
                    .collect();
                let tri = cell_vertices(geom, c);
                let quad = triangle_rule_deg5().map(|(b, w)| {
                    let x = tri[0] * b[0] + tri[1] * b[1] + tri[2] * b[2];
                    let (xi, eta) = CubicPoly::local(c0, &x);
                    (xi, eta, w)
                });
                let gram = smoothness_gram(&quad);
                CellOperator { stencil, degree, op_t, sub_offsets, gram }
            })
            .collect()
    }

    /// Recomputes all geometry-dependent operators after the mesh moved.
    pub fn rebuild(&mut self, geom: &Geometry) {
        let stencils = self.cells.drain(..).map(|c| c.stencil).collect();
        self.cells = self.build_operators(stencils, geom);
    }

    pub fn stencil(&self, cell: usize) -> &Stencil {
        &self.cells[cell].stencil
    }

    pub fn degree(&self, cell: usize) -> usize {
        self.cells[cell].degree
    }

    /// Constrained least-squares polynomial of `cell` (degree ≤ 3).
    pub fn reconstruct_cubic(&self, geom: &Geometry, cell: usize, values: &[f64], grads: &[[f64; 2]]) -> CubicPoly {
        let co = &self.cells[cell];
        let size = geom.cells[cell].size;
        if co.degree == 1 {
            return CubicPoly::linear(values[cell], grads[cell], size);
        }
        let st = &co.stencil;
        let mut coeffs = [0.0; N_BASIS];
        for (k, coef) in coeffs.iter_mut().enumerate().take(co.op_t.ncols()) {
            let row = co.op_t.column(k);
            let mut acc = 0.0;
            for (i, &c) in st.cells.iter().enumerate() {
                acc += row[i] * values[c];
            }
            for i in 0..st.n_grad() {
                let g = grads[st.cells[i]];
                let r = st.cells.len() + 2 * i;
                acc += row[r] * g[0] * size + row[r + 1] * g[1] * size;
            }
            *coef = acc;
        }
        CubicPoly { coeffs }
    }

    /// Linear polynomials `Q₀ + a·(x − x₀)` on each one-neighbour sub-stencil.
    ///
    /// The neighbour's average is matched exactly; its two scaled gradient
    /// components are fitted in the least-squares sense.
    pub fn reconstruct_linear_substencils(&self, geom: &Geometry, cell: usize, values: &[f64], grads: &[[f64; 2]]) -> Vec<CubicPoly> {
        let co = &self.cells[cell];
        let size = geom.cells[cell].size;
        let q0 = values[cell];
        co.stencil.cells[1..=co.stencil.n_edge]
            .iter()
            .zip(&co.sub_offsets)
            .map(|(&m, e)| {
                let g = [grads[m][0] * size, grads[m][1] * size];
                let r = values[m] - q0;
                let e2 = e[0] * e[0] + e[1] * e[1];
                let lam = (r - e[0] * g[0] - e[1] * g[1]) / e2;
                let mut p = CubicPoly::constant(q0);
                p.coeffs[1] = g[0] + lam * e[0];
                p.coeffs[2] = g[1] + lam * e[1];
                p
            })
            .collect()
    }

    pub fn smoothness(&self, cell: usize, p: &CubicPoly) -> f64 {
        let g = &self.cells[cell].gram;
        let c = &p.coeffs[1..];
        let mut is = 0.0;
        for (a, row) in g.iter().enumerate() {
            if c[a] != 0.0 {
                is += c[a] * row.iter().zip(c).map(|(g, c)| g * c).sum::<f64>();
            }
        }
        is
    }

    /// Full reconstruction of one scalar field on one cell.
    pub fn reconstruct_cell(&self, geom: &Geometry, cell: usize, values: &[f64], grads: &[[f64; 2]]) -> CellReconstruction {
        let cubic = self.reconstruct_cubic(geom, cell, values, grads);
        let smoothness = self.smoothness(cell, &cubic);
        if !self.nonlinear {
            return CellReconstruction { poly: cubic, cubic, smoothness };
        }
        let subs = self.reconstruct_linear_substencils(geom, cell, values, grads);
        let mut is = Vec::with_capacity(subs.len() + 1);
        is.push(smoothness);
        is.extend(subs.iter().map(|p| self.smoothness(cell, p)));
        let (poly, _) = weno::weno_combine(&cubic, &subs, &is);
        CellReconstruction { poly, cubic, smoothness }
    }

    /// Reconstructs a scalar field on every cell.
    pub fn reconstruct_field(&self, geom: &Geometry, values: &[f64], grads: &[[f64; 2]]) -> Vec<CellReconstruction> {
        (0..self.cells.len())
            .into_par_iter()
            .map(|c| self.reconstruct_cell(geom, c, values, grads))
            .collect()
    }
}

/// Exact cell averages and averaged gradients of an analytic field, using the
/// degree-5 rule on `levels`-times subdivided triangles.
pub fn sample_field<F, G>(geom: &Geometry, levels: u32, f: F, grad: G) -> (Vec<f64>, Vec<[f64; 2]>)
where
    F: Fn(Vec2) -> f64 + Sync,
    G: Fn(Vec2) -> [f64; 2] + Sync,
{
    (0..geom.cells.len())
        .into_par_iter()
        .map(|c| {
            let tri = cell_vertices(geom, c);
            let v = triangle_average(&tri, levels, &f);
            let gx = triangle_average(&tri, levels, &|x| grad(x)[0]);
            let gy = triangle_average(&tri, levels, &|x| grad(x)[1]);
            (v, [gx, gy])
        })
        .unzip()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_uniform_tri_mesh, Rect};

    fn setup(dx: f64) -> (crate::mesh::MovingMesh, Reconstructor) {
        let m = build_uniform_tri_mesh(Rect::new(0.0, 1.0, 0.0, 1.0), dx).unwrap();
        let r = Reconstructor::new(&m.topo, &m.current);
        (m, r)
    }

    fn max_point_error<F: Fn(Vec2) -> f64 + Sync>(m: &crate::mesh::MovingMesh, polys: &[CubicPoly], f: F, interior: bool) -> f64 {
        let g = &m.current;
        (0..m.n_cells())
            .filter(|&c| {
                let x = g.cells[c].centroid;
                !interior || (x.x > 0.25 && x.x < 0.75 && x.y > 0.25 && x.y < 0.75)
            })
            .map(|c| {
                g.cells[c]
                    .vertices
                    .iter()
                    .map(|v| (polys[c].value(&g.cells[c], v) - f(*v)).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn stencil_sizes_on_interior_and_corner() {
        let (m, r) = setup(0.1);
        let st = r.stencil(m.n_cells() / 2 + 5);
        assert_eq!(st.n_edge, 3);
        assert!(st.cells.len() >= 7 && st.cells.len() <= 10);
        assert_eq!(r.degree(m.n_cells() / 2 + 5), 3);
        assert!((1..=3).contains(&r.degree(0)));
    }

    #[test]
    fn reproduces_cubic_exactly_in_interior() {
        let (m, r) = setup(0.1);
        let f = |x: Vec2| 1.0 + x.x.powi(3) - 2.0 * x.x * x.y * x.y + 0.3 * x.y;
        let df = |x: Vec2| [3.0 * x.x * x.x - 2.0 * x.y * x.y, -4.0 * x.x * x.y + 0.3];
        let (v, g) = sample_field(&m.current, 0, f, df);
        let polys: Vec<_> = (0..m.n_cells()).map(|c| r.reconstruct_cubic(&m.current, c, &v, &g)).collect();
        let interior: Vec<usize> = (0..m.n_cells()).filter(|&c| r.degree(c) == 3).collect();
        for c in interior {
            for vtx in m.current.cells[c].vertices {
                assert!((polys[c].value(&m.current.cells[c], &vtx) - f(vtx)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn linear_and_constant_fields_reproduced_everywhere() {
        let (m, mut r) = setup(0.125);
        r.nonlinear = true;
        let f = |x: Vec2| 2.0 - 0.5 * x.x + 3.0 * x.y;
        let (v, g) = sample_field(&m.current, 0, f, |_| [-0.5, 3.0]);
        let rec = r.reconstruct_field(&m.current, &v, &g);
        let polys: Vec<_> = rec.iter().map(|c| c.poly).collect();
        assert!(max_point_error(&m, &polys, f, false) < 1e-12);
        let (v, g) = sample_field(&m.current, 0, |_| 4.0, |_| [0.0, 0.0]);
        let rec = r.reconstruct_field(&m.current, &v, &g);
        for c in rec {
            assert!(c.smoothness.abs() < 1e-20);
            assert!((c.poly.coeffs[0] - 4.0).abs() < 1e-13);
        }
    }

    #[test]
    fn cell_average_is_conserved() {
        let (m, r) = setup(0.1);
        let f = |x: Vec2| (3.0 * x.x).sin() * (2.0 * x.y).cos() + if x.x > 0.5 { 1.0 } else { 0.0 };
        let (v, g) = sample_field(&m.current, 2, f, |x| [3.0 * (3.0 * x.x).cos() * (2.0 * x.y).cos(), -2.0 * (3.0 * x.x).sin() * (2.0 * x.y).sin()]);
        let rec = r.reconstruct_field(&m.current, &v, &g);
        for (c, cr) in rec.iter().enumerate() {
            let cell = &m.current.cells[c];
            let tri = cell.vertices;
            let p = cr.poly;
            let avg = triangle_average(&tri, 0, &|x| p.value(cell, &x));
            assert!((avg - v[c]).abs() < 1e-12, "cell {c}: {avg} vs {}", v[c]);
        }
    }

    #[test]
    fn substencil_matches_neighbour_average() {
        let (m, r) = setup(0.1);
        let f = |x: Vec2| (x.x * 4.0).exp() * 0.1 + x.y * x.y;
        let (v, g) = sample_field(&m.current, 1, f, |x| [0.4 * (x.x * 4.0).exp(), 2.0 * x.y]);
        let c = m.n_cells() / 2 + 3;
        let subs = r.reconstruct_linear_substencils(&m.current, c, &v, &g);
        let cg = &m.current.cells[c];
        for (p, &nb) in subs.iter().zip(&r.stencil(c).cells[1..]) {
            // a linear polynomial averages to its centroid value
            let at = p.value(cg, &m.current.cells[nb].centroid);
            assert!((at - v[nb]).abs() < 1e-12);
        }
    }

    #[test]
    fn smooth_field_converges_at_fourth_order() {
        let f = |x: Vec2| (2.0 * x.x).sin() * (3.0 * x.y).cos();
        let df = |x: Vec2| [2.0 * (2.0 * x.x).cos() * (3.0 * x.y).cos(), -3.0 * (2.0 * x.x).sin() * (3.0 * x.y).sin()];
        let errs: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&dx| {
                let (m, mut r) = setup(dx);
                r.nonlinear = false;
                let (v, g) = sample_field(&m.current, 0, f, df);
                let polys: Vec<_> = r.reconstruct_field(&m.current, &v, &g).iter().map(|c| c.poly).collect();
                max_point_error(&m, &polys, f, true)
            })
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order > 3.5, "order {order}, errors {errs:?}");
        }
    }

    #[test]
    fn weno_keeps_order_on_smooth_data() {
        let f = |x: Vec2| (2.0 * x.x).sin() * (3.0 * x.y).cos();
        let df = |x: Vec2| [2.0 * (2.0 * x.x).cos() * (3.0 * x.y).cos(), -3.0 * (2.0 * x.x).sin() * (3.0 * x.y).sin()];
        let errs: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&dx| {
                let (m, r) = setup(dx);
                let (v, g) = sample_field(&m.current, 0, f, df);
                let polys: Vec<_> = r.reconstruct_field(&m.current, &v, &g).iter().map(|c| c.poly).collect();
                max_point_error(&m, &polys, f, true)
            })
            .collect();
        let order = (errs[1] / errs[2]).log2();
        assert!(order > 3.0, "order {order}, errors {errs:?}");
    }

    #[test]
    fn discontinuity_does_not_overshoot_much() {
        let (m, r) = setup(0.05);
        let f = |x: Vec2| if x.x < 0.5 { 1.0 } else { 0.1 };
        let (v, g) = sample_field(&m.current, 3, f, |_| [0.0, 0.0]);
        let rec = r.reconstruct_field(&m.current, &v, &g);
        let mut worst: f64 = 0.0;
        for (c, cr) in rec.iter().enumerate() {
            let cell = &m.current.cells[c];
            for vtx in cell.vertices {
                let val = cr.poly.value(cell, &vtx);
                worst = worst.max(val - 1.0).max(0.1 - val);
            }
        }
        assert!(worst < 0.1, "overshoot {worst}");
    }

    #[test]
    fn rebuild_after_motion_matches_fresh_build() {
        let (mut m, mut r) = setup(0.1);
        let vel: Vec<Vec2> = m.nodes().iter().map(|p| Vec2::new((p.y * 3.0).sin(), (p.x * 2.0).cos()) * 0.05).collect();
        let vel: Vec<Vec2> = vel.iter().zip(&m.topo.boundary_node).map(|(v, &b)| if b { Vec2::zeros() } else { *v }).collect();
        m.apply_node_motion(&vel, 0.1).unwrap();
        r.rebuild(&m.current);
        let fresh = Reconstructor::new(&m.topo, &m.current);
        let f = |x: Vec2| x.x * x.x * x.y;
        let (v, g) = sample_field(&m.current, 0, f, |x| [2.0 * x.x * x.y, x.x * x.x]);
        for c in 0..m.n_cells() {
            if r.degree(c) == fresh.degree(c) {
                let a = r.reconstruct_cubic(&m.current, c, &v, &g);
                let b = fresh.reconstruct_cubic(&m.current, c, &v, &g);
                for (x, y) in a.coeffs.iter().zip(b.coeffs) {
                    assert!((x - y).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn smoothness_form_matches_quadrature() {
        let (m, r) = setup(0.2);
        let p = CubicPoly { coeffs: [1.0, 0.2, -0.3, 0.5, 0.1, -0.7, 0.05, 0.3, -0.2, 0.4] };
        for c in [0, 7, m.n_cells() - 1] {
            let cell = &m.current.cells[c];
            let quad: Vec<_> = triangle_rule_deg5()
                .iter()
                .map(|(b, w)| {
                    let x = cell.vertices[0] * b[0] + cell.vertices[1] * b[1] + cell.vertices[2] * b[2];
                    let (xi, eta) = CubicPoly::local(cell, &x);
                    (xi, eta, *w)
                })
                .collect();
            let direct = p.smoothness(&quad);
            assert!((r.smoothness(c, &p) - direct).abs() < 1e-13 * direct);
        }
    }
}
