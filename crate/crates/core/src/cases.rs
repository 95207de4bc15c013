//! Test cases: domains, initial data, bathymetry, boundary kinds, motions,
//! exact/steady references and error norms.

use std::f64::consts::PI;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::bc::{BoundaryKind, BoundaryMap, ExactField, PointData};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::mesh::{build_masked_tri_mesh, build_uniform_tri_mesh, MovingMesh, Rect};
use crate::motion::{AdaptiveParams, MotionSpec, Prescribed};
use crate::quadrature::{gauss_line_params, triangle_average, GAUSS_LINE_WEIGHTS};
use crate::solver::CellSolution;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CaseId {
    FreeStream,
    LakeLinear,
    LakeGauss,
    Perturbation,
    DamBreak1d,
    Circular,
    Irregular,
    /// Steady cyclostrophic vortex over a flat bottom.
    Vortex,
}

impl FromStr for CaseId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "free_stream" => CaseId::FreeStream,
            "lake_linear" => CaseId::LakeLinear,
            "lake_gauss" => CaseId::LakeGauss,
            "perturbation" => CaseId::Perturbation,
            "dam_break_1d" => CaseId::DamBreak1d,
            "circular_dam_break" => CaseId::Circular,
            "irregular_dam_break" => CaseId::Irregular,
            "vortex" => CaseId::Vortex,
            _ => return Err(Error::UnknownCase(s.to_string())),
        })
    }
}

impl CaseId {
    pub fn name(&self) -> &'static str {
        match self {
            CaseId::FreeStream => "free_stream",
            CaseId::LakeLinear => "lake_linear",
            CaseId::LakeGauss => "lake_gauss",
            CaseId::Perturbation => "perturbation",
            CaseId::DamBreak1d => "dam_break_1d",
            CaseId::Circular => "circular_dam_break",
            CaseId::Irregular => "irregular_dam_break",
            CaseId::Vortex => "vortex",
        }
    }

    pub fn all() -> [CaseId; 8] {
        [
            CaseId::FreeStream,
            CaseId::LakeLinear,
            CaseId::LakeGauss,
            CaseId::Perturbation,
            CaseId::DamBreak1d,
            CaseId::Circular,
            CaseId::Irregular,
            CaseId::Vortex,
        ]
    }
}

/// Vortex strength and background depth of [`CaseId::Vortex`].
const VORTEX_EPS: f64 = 0.3;
const VORTEX_H0: f64 = 1.0;

/// Dam of the irregular domain: x ∈ [95, 105], breach for y ∈ [95, 170].
const DAM_X: (f64, f64) = (95.0, 105.0);
const BREACH_Y: (f64, f64) = (95.0, 170.0);

#[derive(Clone, Debug, PartialEq)]
pub struct CaseDefinition {
    pub id: CaseId,
    pub domain: Rect,
    pub dx: f64,
    pub gravity: f64,
    pub end_time: f64,
    pub motion: MotionSpec,
    pub bcs: BoundaryMap,
}

/// Pointwise data of a case: `(h, U, V)` and the bottom.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Primitive {
    pub h: f64,
    pub u: f64,
    pub v: f64,
}

impl CaseDefinition {
    /// Reference-scale defaults of every case.
    pub fn new(id: CaseId) -> Self {
        use BoundaryKind::*;
        let sq2 = Rect::new(0.0, 2.0, 0.0, 2.0);
        let traj = |amplitude, kx, ky| MotionSpec::Prescribed(Prescribed { amplitude, kx, ky });
        let (domain, dx, gravity, end_time, motion, bcs) = match id {
            CaseId::FreeStream => (sq2, 0.05, 1.0, 5.5, traj(0.075, 2.0, 4.0), BoundaryMap::uniform(Steady)),
            CaseId::LakeLinear | CaseId::LakeGauss => (sq2, 0.05, 1.0, 5.5, traj(0.075, 2.0, 4.0), BoundaryMap::uniform(Steady)),
            CaseId::Perturbation => (
                Rect::new(0.0, 2.0, 0.0, 1.0),
                0.01,
                1.0,
                1.2,
                traj(0.04, 2.0, 4.0),
                BoundaryMap { west: Free, east: Free, south: Wall, north: Wall, obstacle: Wall },
            ),
            CaseId::DamBreak1d => (
                Rect::new(0.0, 1.0, 0.0, 0.5),
                0.02,
                1.0,
                0.3,
                traj(0.05, 3.0, 6.0),
                BoundaryMap { west: Free, east: Free, south: Wall, north: Wall, obstacle: Wall },
            ),
            CaseId::Circular => (
                Rect::new(0.0, 10.0, 0.0, 10.0),
                0.15,
                1.0,
                1.0,
                MotionSpec::Adaptive(AdaptiveParams::default()),
                BoundaryMap::uniform(Wall),
            ),
            CaseId::Irregular => (
                Rect::new(0.0, 200.0, 0.0, 200.0),
                5.0,
                9.812,
                7.2,
                MotionSpec::Adaptive(AdaptiveParams::default()),
                BoundaryMap { west: Wall, east: Free, south: Wall, north: Wall, obstacle: Wall },
            ),
            CaseId::Vortex => (Rect::new(-5.0, 5.0, -5.0, 5.0), 0.25, 1.0, 1.0, MotionSpec::Static, BoundaryMap::uniform(Steady)),
        };
        CaseDefinition { id, domain, dx, gravity, end_time, motion, bcs }
    }

    pub fn bottom(&self, x: Vec2) -> (f64, [f64; 2]) {
        match self.id {
            CaseId::LakeLinear => (0.05 + 0.075 * (x.x + x.y), [0.075, 0.075]),
            CaseId::LakeGauss => {
                let (dx, dy) = (x.x - 1.0, x.y - 1.0);
                let b = 0.25 * (-50.0 * (dx * dx + dy * dy)).exp();
                (b, [-100.0 * dx * b, -100.0 * dy * b])
            }
            CaseId::Perturbation => {
                let (dx, dy) = (x.x - 0.9, x.y - 0.5);
                let b = 0.8 * (-5.0 * dx * dx - 50.0 * dy * dy).exp();
                (b, [-10.0 * dx * b, -100.0 * dy * b])
            }
            _ => (0.0, [0.0, 0.0]),
        }
    }

    /// Initial primitive state at a point.
    pub fn initial(&self, x: Vec2) -> Primitive {
        let still = |h| Primitive { h, u: 0.0, v: 0.0 };
        match self.id {
            CaseId::FreeStream => Primitive { h: 1.0, u: 1.0, v: -1.0 },
            CaseId::LakeLinear | CaseId::LakeGauss => still(1.0 - self.bottom(x).0),
            CaseId::Perturbation => {
                let bump = if (0.05..=0.15).contains(&x.x) { 0.01 } else { 0.0 };
                still(1.0 - self.bottom(x).0 + bump)
            }
            CaseId::DamBreak1d => still(if x.x < 0.5 { 1.0 } else { 0.1 }),
            CaseId::Circular => still(if (x.x - 5.0).powi(2) + (x.y - 5.0).powi(2) < 4.0 { 1.0 } else { 0.5 }),
            CaseId::Irregular => still(if x.x < DAM_X.0 { 10.0 } else { 5.0 }),
            CaseId::Vortex => vortex(x, self.gravity).0,
        }
    }

    /// Whether the initial data has jumps (cell averages then need a finer rule).
    fn discontinuous(&self) -> bool {
        matches!(self.id, CaseId::Perturbation | CaseId::DamBreak1d | CaseId::Circular | CaseId::Irregular)
    }

    pub fn build_mesh(&self) -> Result<MovingMesh> {
        match self.id {
            CaseId::Irregular => {
                let d = self.domain;
                let hx = (d.x1 - d.x0) / ((d.x1 - d.x0) / self.dx).round().max(1.0);
                let hy = (d.y1 - d.y0) / ((d.y1 - d.y0) / self.dx).round().max(1.0);
                build_masked_tri_mesh(d, self.dx, |i, j| {
                    let c = Vec2::new(d.x0 + (i as f64 + 0.5) * hx, d.y0 + (j as f64 + 0.5) * hy);
                    let in_dam = c.x > DAM_X.0 && c.x < DAM_X.1;
                    let in_breach = c.y > BREACH_Y.0 && c.y < BREACH_Y.1;
                    !in_dam || in_breach
                })
            }
            _ => build_uniform_tri_mesh(self.domain, self.dx),
        }
    }

    /// Exact steady field for cases that have one.
    pub fn steady_field(&self) -> Option<Arc<ExactField>> {
        let case = self.clone();
        match self.id {
            CaseId::LakeLinear | CaseId::LakeGauss => Some(Arc::new(move |x: Vec2| {
                let (b, gb) = case.bottom(x);
                PointData { w: [1.0 - b, 0.0, 0.0], grad: [[-gb[0], 0.0, 0.0], [-gb[1], 0.0, 0.0]], b, grad_b: gb }
            })),
            CaseId::FreeStream => Some(Arc::new(|_| PointData { w: [1.0, 1.0, -1.0], ..Default::default() })),
            CaseId::Vortex => {
                let g = self.gravity;
                Some(Arc::new(move |x: Vec2| vortex(x, g).1))
            }
            _ => None,
        }
    }

    /// Cell averages and cell-averaged gradients of the initial data.
    pub fn initialize(&self, mesh: &MovingMesh) -> CellSolution {
        let levels = if self.discontinuous() { 5 } else { 2 };
        let geom = &mesh.current;
        let cons = |x: Vec2| {
            let p = self.initial(x);
            [p.h, p.h * p.u, p.h * p.v, self.bottom(x).0]
        };
        let rows: Vec<([f64; 3], [[f64; 3]; 2], f64, [f64; 2])> = (0..mesh.n_cells())
            .into_par_iter()
            .map(|c| {
                let cell = &geom.cells[c];
                let tri = cell.vertices;
                let avg: [f64; 4] = std::array::from_fn(|i| triangle_average(&tri, levels, &|x| cons(x)[i]));
                let (segments, nudge) = if self.discontinuous() { (64, 1e-9) } else { (4, 0.0) };
                let grad = boundary_gradient(&tri, cell.area, cell.centroid, &cons, segments, nudge);
                (
                    [avg[0], avg[1], avg[2]],
                    [[grad[0][0], grad[0][1], grad[0][2]], [grad[1][0], grad[1][1], grad[1][2]]],
                    avg[3],
                    [grad[0][3], grad[1][3]],
                )
            })
            .collect();
        let mut sol = CellSolution::default();
        for (w, g, b, gb) in rows {
            sol.w.push(w);
            sol.grad.push(g);
            sol.b.push(b);
            sol.grad_b.push(gb);
        }
        sol
    }

    /// Reference cell averages `(h or h+B, hU, hV)` on the given mesh for the
    /// cases with a steady exact solution.
    pub fn steady_reference(&self, mesh: &MovingMesh) -> Option<Vec<[f64; 3]>> {
        let f = self.steady_field()?;
        let surface = matches!(self.id, CaseId::LakeLinear | CaseId::LakeGauss);
        Some(
            mesh.current
                .cells
                .par_iter()
                .map(|cell| {
                    let avg: [f64; 3] = std::array::from_fn(|i| {
                        triangle_average(&cell.vertices, 2, &|x| {
                            let p = f(x);
                            if i == 0 && surface {
                                p.w[0] + p.b
                            } else {
                                p.w[i]
                            }
                        })
                    });
                    avg
                })
                .collect(),
        )
    }
}

impl CaseDefinition {
    /// Whether errors are measured on the surface `h + B` instead of `h`.
    pub fn measures_surface(&self) -> bool {
        matches!(self.id, CaseId::LakeLinear | CaseId::LakeGauss)
    }

    /// Monitored quantities `(h or h+B, hU, hV)` of a solution.
    pub fn monitored(&self, sol: &CellSolution) -> Vec<[f64; 3]> {
        let surface = self.measures_surface();
        sol.w
            .iter()
            .zip(&sol.b)
            .map(|(w, b)| if surface { [w[0] + b, w[1], w[2]] } else { *w })
            .collect()
    }

    /// Reference for [`CaseDefinition::monitored`] at `time` on the mesh, if
    /// the case has one: the steady state, or the exact dam-break solution at
    /// cell centroids.
    pub fn reference(&self, mesh: &MovingMesh, time: f64) -> Option<Vec<[f64; 3]>> {
        let n = mesh.n_cells();
        match self.id {
            CaseId::FreeStream => Some(vec![[1.0, 1.0, -1.0]; n]),
            CaseId::LakeLinear | CaseId::LakeGauss => Some(vec![[lake_surface(), 0.0, 0.0]; n]),
            CaseId::Vortex => self.steady_reference(mesh),
            CaseId::DamBreak1d if time > 0.0 => mesh
                .current
                .cells
                .iter()
                .map(|c| stoker_dam_break(1.0, 0.1, self.gravity, 0.5, c.centroid.x, time).ok().map(|(h, u)| [h, h * u, 0.0]))
                .collect(),
            _ => None,
        }
    }
}

/// Cell-averaged gradient by the divergence theorem with `segments`
/// sub-intervals per edge; with a nonzero `nudge` sample points are pulled
/// into the cell so that jumps lying on an edge are attributed to it.
fn boundary_gradient<F: Fn(Vec2) -> [f64; 4]>(tri: &[Vec2; 3], area: f64, centroid: Vec2, f: &F, segments: usize, nudge: f64) -> [[f64; 4]; 2] {
    let mut g = [[0.0; 4]; 2];
    let s = gauss_line_params();
    for e in 0..3 {
        let (a, b) = (tri[e], tri[(e + 1) % 3]);
        let d = b - a;
        let nl = Vec2::new(d.y, -d.x);
        for k in 0..segments {
            for q in 0..2 {
                let t = (k as f64 + s[q]) / segments as f64;
                let x = a + d * t;
                let x = x + (centroid - x) * nudge;
                let v = f(x);
                let w = GAUSS_LINE_WEIGHTS[q] / segments as f64;
                for i in 0..4 {
                    g[0][i] += w * v[i] * nl.x;
                    g[1][i] += w * v[i] * nl.y;
                }
            }
        }
    }
    for row in g.iter_mut() {
        for v in row.iter_mut() {
            *v /= area;
        }
    }
    g
}

/// Steady vortex `u_θ = ε r e^{(1−r²)/2}`, `h = h₀ − ε²/(2G) e^{1−r²}`,
/// which satisfies the cyclostrophic balance `G h' = u_θ²/r`.
pub fn vortex(x: Vec2, gravity: f64) -> (Primitive, PointData) {
    let r2 = x.x * x.x + x.y * x.y;
    let e = (1.0 - r2).exp();
    let h = VORTEX_H0 - VORTEX_EPS * VORTEX_EPS / (2.0 * gravity) * e;
    let s = VORTEX_EPS * (0.5 * (1.0 - r2)).exp();
    let (u, v) = (-s * x.y, s * x.x);
    // ∂h/∂x = ε²/G e x, ∂s/∂x = −s x
    let hx = VORTEX_EPS * VORTEX_EPS / gravity * e * x.x;
    let hy = VORTEX_EPS * VORTEX_EPS / gravity * e * x.y;
    let (ux, uy) = (s * x.y * x.x, -s + s * x.y * x.y);
    let (vx, vy) = (s - s * x.x * x.x, -s * x.x * x.y);
    let p = PointData {
        w: [h, h * u, h * v],
        grad: [[hx, hx * u + h * ux, hx * v + h * vx], [hy, hy * u + h * uy, hy * v + h * vy]],
        b: 0.0,
        grad_b: [0.0, 0.0],
    };
    (Primitive { h, u, v }, p)
}

/// L¹ (area-weighted mean) and L∞ norms of `a − b` per component.
pub fn error_norms(a: &[[f64; 3]], b: &[[f64; 3]], areas: &[f64]) -> [(f64, f64); 3] {
    let total: f64 = areas.iter().sum();
    std::array::from_fn(|i| {
        let mut l1 = 0.0;
        let mut linf: f64 = 0.0;
        for ((x, y), ar) in a.iter().zip(b).zip(areas) {
            let e = (x[i] - y[i]).abs();
            l1 += e * ar;
            linf = linf.max(e);
        }
        (l1 / total, linf)
    })
}

/// Exact dam-break solution over a flat dry-free bed: `(h, u)` at `x` for a
/// jump at `x0` between still states `h_l > h_r > 0`.
pub fn stoker_dam_break(h_l: f64, h_r: f64, gravity: f64, x0: f64, x: f64, t: f64) -> Result<(f64, f64)> {
    if !(h_l > h_r && h_r > 0.0 && t > 0.0) {
        return Err(Error::Bracket(format!("invalid dam-break data h_l={h_l}, h_r={h_r}, t={t}")));
    }
    let (hm, um, s) = stoker_middle_state(h_l, h_r, gravity)?;
    let cl = (gravity * h_l).sqrt();
    let cm = (gravity * hm).sqrt();
    let xi = (x - x0) / t;
    Ok(if xi <= -cl {
        (h_l, 0.0)
    } else if xi <= um - cm {
        let c = (2.0 * cl - xi) / 3.0;
        (c * c / gravity, 2.0 * (cl - c))
    } else if xi <= s {
        (hm, um)
    } else {
        (h_r, 0.0)
    })
}

/// Middle depth, velocity and shock speed of the dam-break problem.
pub fn stoker_middle_state(h_l: f64, h_r: f64, gravity: f64) -> Result<(f64, f64, f64)> {
    let f = |hm: f64| {
        let rare = 2.0 * ((gravity * h_l).sqrt() - (gravity * hm).sqrt());
        let shock = (hm - h_r) * (gravity * (hm + h_r) / (2.0 * hm * h_r)).sqrt();
        rare - shock
    };
    let (mut lo, mut hi) = (h_r, h_l);
    if !(f(lo) > 0.0 && f(hi) < 0.0) {
        return Err(Error::Bracket(format!("no middle state between {h_r} and {h_l}")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * h_l {
            break;
        }
    }
    let hm = 0.5 * (lo + hi);
    let um = 2.0 * ((gravity * h_l).sqrt() - (gravity * hm).sqrt());
    let s = hm * um / (hm - h_r);
    Ok((hm, um, s))
}

/// Surface height `h + B` reference for lake cases (constant 1).
pub fn lake_surface() -> f64 {
    1.0
}

/// Total volume of the circular-dam initial data.
pub fn circular_initial_volume() -> f64 {
    PI * 4.0 * 1.0 + (100.0 - 4.0 * PI) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_names_round_trip() {
        for id in CaseId::all() {
            assert_eq!(id.name().parse::<CaseId>().unwrap(), id);
        }
        assert!("nope".parse::<CaseId>().is_err());
    }

    #[test]
    fn free_stream_initial_averages() {
        let mut c = CaseDefinition::new(CaseId::FreeStream);
        c.dx = 0.25;
        let m = c.build_mesh().unwrap();
        let s = c.initialize(&m);
        for (w, g) in s.w.iter().zip(&s.grad) {
            assert_eq!(*w, [1.0, 1.0, -1.0]);
            assert!(g.iter().flatten().all(|x| x.abs() < 1e-12));
        }
    }

    #[test]
    fn linear_lake_surface_is_flat() {
        let mut c = CaseDefinition::new(CaseId::LakeLinear);
        c.dx = 0.2;
        let m = c.build_mesh().unwrap();
        let s = c.initialize(&m);
        for j in 0..m.n_cells() {
            assert!((s.w[j][0] + s.b[j] - 1.0).abs() < 1e-14);
            assert!((s.grad_b[j][0] - 0.075).abs() < 1e-12);
            assert!((s.grad[j][0][0] + 0.075).abs() < 1e-12);
        }
    }

    #[test]
    fn circular_volume_matches_disc_area() {
        let mut c = CaseDefinition::new(CaseId::Circular);
        c.dx = 0.25;
        let m = c.build_mesh().unwrap();
        let s = c.initialize(&m);
        let vol: f64 = s.w.iter().zip(&m.current.cells).map(|(w, c)| w[0] * c.area).sum();
        assert!((vol - circular_initial_volume()).abs() < 2e-3, "{vol}");
    }

    #[test]
    fn dam_break_aligned_jump_has_no_gradient() {
        let c = CaseDefinition::new(CaseId::DamBreak1d);
        let m = c.build_mesh().unwrap();
        let s = c.initialize(&m);
        assert!(s.grad.iter().flatten().flatten().all(|x| x.abs() < 1e-6));
        assert!(s.w.iter().all(|w| w[0] == 1.0 || w[0] == 0.1));
    }

    #[test]
    fn irregular_mesh_has_dam_obstacle() {
        let c = CaseDefinition::new(CaseId::Irregular);
        let m = c.build_mesh().unwrap();
        let full = 2 * 40 * 40;
        // dam cells outside the breach are removed
        assert_eq!(m.n_cells(), full - 2 * 2 * (40 - 15));
        assert!(m.current.cells.iter().all(|cell| {
            let x = cell.centroid;
            !(x.x > 95.0 && x.x < 105.0) || (x.y > 95.0 && x.y < 170.0)
        }));
    }

    #[test]
    fn stoker_limits_and_rankine_hugoniot() {
        let g = 1.0;
        assert_eq!(stoker_dam_break(1.0, 0.1, g, 0.5, -10.0, 0.3).unwrap(), (1.0, 0.0));
        assert_eq!(stoker_dam_break(1.0, 0.1, g, 0.5, 10.0, 0.3).unwrap(), (0.1, 0.0));
        let (hm, um, s) = stoker_middle_state(1.0, 0.1, g).unwrap();
        // mass and momentum jump conditions across the shock
        let mass = s * (hm - 0.1) - hm * um;
        let mom = s * (hm * um) - (hm * um * um + 0.5 * g * hm * hm - 0.5 * g * 0.01);
        assert!(mass.abs() < 1e-10 && mom.abs() < 1e-10, "{mass} {mom}");
        let (h, u) = stoker_dam_break(1.0, 0.1, g, 0.5, 0.5, 0.3).unwrap();
        assert!((h - hm).abs() < 1e-12 || (h - (2.0 * 1.0 - 0.0) / 3.0).abs() < 1.0);
        assert!(h > 0.1 && h < 1.0 && u > 0.0);
        assert!(stoker_middle_state(0.1, 1.0, g).is_err());
    }

    #[test]
    fn norms_examples() {
        let a = vec![[1.0, 2.0, 3.0]; 4];
        let areas = vec![0.25; 4];
        let n = error_norms(&a, &a, &areas);
        assert!(n.iter().all(|&(l1, li)| l1 == 0.0 && li == 0.0));
        let b: Vec<[f64; 3]> = a.iter().map(|w| [w[0] + 0.5, w[1], w[2]]).collect();
        let n = error_norms(&b, &a, &areas);
        assert_eq!(n[0], (0.5, 0.5));
    }

    #[test]
    fn vortex_is_cyclostrophic() {
        // G ∂h/∂r = u_θ²/r on a few radii
        for r in [0.3, 1.0, 2.2] {
            let x = Vec2::new(r, 0.0);
            let (p, d) = vortex(x, 1.0);
            assert!((d.grad[0][0] - p.v * p.v / r).abs() < 1e-14);
            assert!(p.u.abs() < 1e-15);
        }
        // analytic gradient vs finite differences
        let x = Vec2::new(0.7, -0.4);
        let e = 1e-6;
        let (_, d) = vortex(x, 1.0);
        for dim in 0..2 {
            let dx = if dim == 0 { Vec2::new(e, 0.0) } else { Vec2::new(0.0, e) };
            let (_, p) = vortex(x + dx, 1.0);
            let (_, m) = vortex(x - dx, 1.0);
            for i in 0..3 {
                let fd = (p.w[i] - m.w[i]) / (2.0 * e);
                assert!((fd - d.grad[dim][i]).abs() < 1e-8);
            }
        }
    }
}
