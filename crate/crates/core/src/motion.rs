//! Node velocities: prescribed analytic trajectories and the adaptive
//! variation-driven node relocation with periodic Laplacian smoothing.

use rayon::prelude::*;

use crate::geometry::{signed_area, Vec2};
use crate::mesh::MovingMesh;

/// Threshold below which an adaptive displacement is discarded.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Limiter {
    /// `|ΔS_i| < ΔX_min` (ΔX_min = smallest inradius around the node).
    Literal,
    /// `|ΔS_i| < fraction · ΔX_min`.
    Fraction(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdaptiveParams {
    pub c: f64,
    pub eps: f64,
    /// Move every `n_m` solver steps.
    pub n_m: usize,
    /// Smooth on every `n_s`-th motion event.
    pub n_s: usize,
    pub limiter: Limiter,
    /// Cap on |ΔS_i| as a fraction of `CFL · r_min` (r_min the smallest
    /// adjacent inradius), so a step covering the displacement keeps
    /// `a Δt + |ΔS| ≤ CFL r` with `Δt > 0`.
    pub max_fraction: f64,
}

impl Default for AdaptiveParams {
    fn default() -> Self {
        AdaptiveParams { c: 0.25, eps: 1e-15, n_m: 4, n_s: 6, limiter: Limiter::Fraction(0.05), max_fraction: 0.9 }
    }
}

/// `d(x₀, t) = A sin(πt) sin(k_x π x₀) sin(k_y π y₀) (1, 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prescribed {
    pub amplitude: f64,
    pub kx: f64,
    pub ky: f64,
}

impl Prescribed {
    pub fn displacement(&self, x0: &Vec2, t: f64) -> Vec2 {
        use std::f64::consts::PI;
        let s = self.amplitude * (PI * t).sin() * (self.kx * PI * x0.x).sin() * (self.ky * PI * x0.y).sin();
        Vec2::new(s, s)
    }

    /// Velocities that carry every node from its trajectory point at `t` to
    /// the one at `t + dt`.
    pub fn velocities(&self, initial: &[Vec2], t: f64, dt: f64) -> Vec<Vec2> {
        initial
            .iter()
            .map(|x0| (self.displacement(x0, t + dt) - self.displacement(x0, t)) / dt)
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MotionSpec {
    Static,
    Prescribed(Prescribed),
    Adaptive(AdaptiveParams),
}

/// Smallest inradius among the cells around each node.
fn node_min_inradius(mesh: &MovingMesh) -> Vec<f64> {
    mesh.topo
        .node_cells
        .iter()
        .map(|cells| cells.iter().map(|&c| mesh.current.cells[c].inradius).fold(f64::INFINITY, f64::min))
        .collect()
}

/// Variation-antigradient displacements `ΔS_i = Σ_j C P_iP_j ΔVar_ij / Σ_j ΔVar_ij`
/// with `ΔVar_ij = max(ε, Var_j − V̄ar_i)` and `P_iP_j` the vector to the
/// centroid of adjacent cell j. Boundary nodes stay fixed.
pub fn adaptive_displacements(mesh: &MovingMesh, var: &[f64], p: &AdaptiveParams) -> Vec<Vec2> {
    let topo = &mesh.topo;
    let g = &mesh.current;
    let rmin = node_min_inradius(mesh);
    (0..topo.n_nodes())
        .into_par_iter()
        .map(|i| {
            if topo.boundary_node[i] {
                return Vec2::zeros();
            }
            let cells = &topo.node_cells[i];
            let mean = cells.iter().map(|&c| var[c]).sum::<f64>() / cells.len() as f64;
            let (mut num, mut den) = (Vec2::zeros(), 0.0);
            for &c in cells {
                let dv = (var[c] - mean).max(p.eps);
                num += (g.cells[c].centroid - g.nodes[i]) * (p.c * dv);
                den += dv;
            }
            let ds = num / den;
            let threshold = match p.limiter {
                Limiter::Literal => rmin[i],
                Limiter::Fraction(f) => f * rmin[i],
            };
            if ds.norm() < threshold {
                Vec2::zeros()
            } else {
                ds
            }
        })
        .collect()
}

/// Laplacian smoothing: each interior node moves to the mean of its neighbours.
pub fn smoothing_displacements(mesh: &MovingMesh) -> Vec<Vec2> {
    let topo = &mesh.topo;
    let x = &mesh.current.nodes;
    (0..topo.n_nodes())
        .map(|i| {
            if topo.boundary_node[i] || topo.node_neighbors[i].is_empty() {
                return Vec2::zeros();
            }
            let nb = &topo.node_neighbors[i];
            nb.iter().map(|&j| x[j]).sum::<Vec2>() / nb.len() as f64 - x[i]
        })
        .collect()
}

/// Clips displacements to `0.4×` the distance to the nearest opposite edge
/// and to `max_len[i]`, then halves the displacement of every node of an
/// inverted triangle until none remains.
pub fn guard_inversion(mesh: &MovingMesh, disp: &mut [Vec2], max_len: Option<&[f64]>) {
    let topo = &mesh.topo;
    let x = &mesh.current.nodes;
    for i in 0..topo.n_nodes() {
        let mut limit = f64::INFINITY;
        for &c in &topo.node_cells[i] {
            let tri = topo.cells[c];
            let k = tri.iter().position(|&n| n == i).unwrap_or(0);
            let (a, b) = (x[tri[(k + 1) % 3]], x[tri[(k + 2) % 3]]);
            let h = 2.0 * signed_area(&x[i], &a, &b) / (b - a).norm();
            limit = limit.min(0.4 * h);
        }
        if let Some(m) = max_len {
            limit = limit.min(m[i]);
        }
        let len = disp[i].norm();
        if len > limit {
            disp[i] *= limit / len;
        }
    }
    for _ in 0..60 {
        let mut bad = vec![false; topo.n_nodes()];
        let mut any = false;
        for tri in &topo.cells {
            let p = tri.map(|n| x[n] + disp[n]);
            let a0 = signed_area(&x[tri[0]], &x[tri[1]], &x[tri[2]]);
            if signed_area(&p[0], &p[1], &p[2]) <= 0.05 * a0 {
                any = true;
                for &n in tri {
                    bad[n] = true;
                }
            }
        }
        if !any {
            return;
        }
        for (d, b) in disp.iter_mut().zip(bad) {
            if b {
                *d *= 0.5;
            }
        }
    }
    disp.iter_mut().for_each(|d| *d = Vec2::zeros());
}

/// Tracks the motion cadence of a run.
#[derive(Clone, Debug)]
pub struct MotionController {
    pub spec: MotionSpec,
    pub events: usize,
}

/// What the mesh does during the next solver step.
#[derive(Clone, Debug, PartialEq)]
pub enum StepMotion {
    None,
    /// Velocities depend on the step length.
    Trajectory(Prescribed),
    /// A fixed displacement to be covered within the step.
    Displacement(Vec<Vec2>),
}

impl MotionController {
    pub fn new(spec: MotionSpec) -> Self {
        MotionController { spec, events: 0 }
    }

    /// Motion for solver step number `step` (0-based), given the depth
    /// variation of the latest reconstruction.
    pub fn plan(&mut self, mesh: &MovingMesh, step: usize, var: &[f64], cfl: f64) -> StepMotion {
        match self.spec {
            MotionSpec::Static => StepMotion::None,
            MotionSpec::Prescribed(p) => StepMotion::Trajectory(p),
            MotionSpec::Adaptive(p) => {
                if step % p.n_m.max(1) != 0 {
                    return StepMotion::None;
                }
                self.events += 1;
                let mut disp = if self.events % p.n_s.max(1) == 0 {
                    smoothing_displacements(mesh)
                } else {
                    adaptive_displacements(mesh, var, &p)
                };
                let cap: Vec<f64> = node_min_inradius(mesh).iter().map(|r| r * p.max_fraction * cfl).collect();
                guard_inversion(mesh, &mut disp, Some(&cap));
                if disp.iter().all(|d| d.x == 0.0 && d.y == 0.0) {
                    StepMotion::None
                } else {
                    StepMotion::Displacement(disp)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_uniform_tri_mesh, Rect};

    #[test]
    fn prescribed_vanishes_at_integer_times_and_boundaries() {
        let p = Prescribed { amplitude: 0.075, kx: 2.0, ky: 4.0 };
        let x0 = Vec2::new(0.3, 0.7);
        assert!(p.displacement(&x0, 0.0).norm() < 1e-16);
        assert!(p.displacement(&x0, 1.0).norm() < 1e-15);
        for b in [Vec2::new(0.0, 0.37), Vec2::new(2.0, 1.1), Vec2::new(0.5, 0.0), Vec2::new(1.3, 2.0)] {
            assert!(p.displacement(&b, 0.4).norm() < 1e-14);
        }
    }

    #[test]
    fn prescribed_velocity_matches_derivative() {
        use std::f64::consts::PI;
        let p = Prescribed { amplitude: 0.075, kx: 2.0, ky: 4.0 };
        let x0 = Vec2::new(0.25, 0.125);
        let v = p.velocities(&[x0], 0.0, 1e-7)[0];
        let expect = 0.075 * PI * (2.0 * PI * 0.25).sin() * (4.0 * PI * 0.125).sin();
        assert!((v.x - expect).abs() < 1e-6 && (v.y - expect).abs() < 1e-6);
    }

    #[test]
    fn uniform_variation_gives_no_motion() {
        let m = build_uniform_tri_mesh(Rect::new(0.0, 1.0, 0.0, 1.0), 0.1).unwrap();
        let var = vec![0.3; m.n_cells()];
        let p = AdaptiveParams::default();
        let d = adaptive_displacements(&m, &var, &p);
        assert!(d.iter().all(|v| v.norm() == 0.0));
        let d = adaptive_displacements(&m, &vec![0.0; m.n_cells()], &AdaptiveParams { limiter: Limiter::Literal, ..p });
        assert!(d.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn node_moves_toward_high_variation_cell() {
        let m = build_uniform_tri_mesh(Rect::new(0.0, 1.0, 0.0, 1.0), 0.1).unwrap();
        let node = (0..m.n_nodes()).find(|&i| !m.topo.boundary_node[i] && (m.nodes()[i] - Vec2::new(0.5, 0.5)).norm() < 1e-9).unwrap();
        let hot = m.topo.node_cells[node][0];
        let mut var = vec![0.0; m.n_cells()];
        var[hot] = 1.0;
        let p = AdaptiveParams { limiter: Limiter::Fraction(0.0), ..Default::default() };
        let d = adaptive_displacements(&m, &var, &p)[node];
        let to = m.current.cells[hot].centroid - m.nodes()[node];
        assert!((d.normalize() - to.normalize()).norm() < 1e-6);
        // hand evaluation: the hot cell dominates the weights
        let n = m.topo.node_cells[node].len() as f64;
        let mean = 1.0 / n;
        let w_hot = 1.0 - mean;
        let expect = to * (p.c * w_hot / (w_hot + (n - 1.0) * p.eps));
        assert!((d - expect).norm() < 1e-12);
    }

    #[test]
    fn smoothing_pulls_perturbed_node_back() {
        let m0 = build_uniform_tri_mesh(Rect::new(0.0, 1.0, 0.0, 1.0), 0.1).unwrap();
        let node = (0..m0.n_nodes()).find(|&i| (m0.nodes()[i] - Vec2::new(0.5, 0.5)).norm() < 1e-9).unwrap();
        let base = smoothing_displacements(&m0);
        assert!(base[node].norm() < 1e-15);
        let mut vel = vec![Vec2::zeros(); m0.n_nodes()];
        let delta = Vec2::new(0.01, -0.02);
        vel[node] = delta;
        let mut m = m0.clone();
        m.apply_node_motion(&vel, 1.0).unwrap();
        let d = smoothing_displacements(&m)[node];
        assert!((d + delta).norm() < 1e-14);
    }

    #[test]
    fn repeated_smoothing_never_inverts() {
        let mut m = build_uniform_tri_mesh(Rect::new(0.0, 1.0, 0.0, 1.0), 0.1).unwrap();
        // start from a distorted mesh
        let p = Prescribed { amplitude: 0.05, kx: 2.0, ky: 4.0 };
        let v = p.velocities(&m.initial.clone(), 0.0, 0.5);
        m.apply_node_motion(&v, 0.5).unwrap();
        for _ in 0..100 {
            let mut d = smoothing_displacements(&m);
            guard_inversion(&m, &mut d, None);
            m.apply_node_motion(&d, 1.0).unwrap();
            assert!(m.current.cells.iter().all(|c| c.area > 0.0));
        }
    }

    #[test]
    fn guard_resolves_inversion() {
        let m = build_uniform_tri_mesh(Rect::new(0.0, 1.0, 0.0, 1.0), 0.25).unwrap();
        let mut d: Vec<Vec2> = (0..m.n_nodes()).map(|i| if m.topo.boundary_node[i] { Vec2::zeros() } else { Vec2::new(0.3, 0.3) }).collect();
        guard_inversion(&m, &mut d, None);
        let mut m2 = m.clone();
        m2.apply_node_motion(&d, 1.0).unwrap();
        assert!(m2.current.cells.iter().all(|c| c.area > 0.0));
    }
}
