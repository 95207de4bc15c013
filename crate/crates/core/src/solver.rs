//! Space-time coupled update of cell averages, bottom and cell-averaged
//! gradients on a moving mesh.
//!
//! One step: reconstruct on t^n, evolve every face Gauss point, assemble the
//! convection (L₁), mesh-motion (L₂) and source (L₃) operators with their time
//! derivatives on t^n geometry, move the mesh, then advance
//! `W^{n+1}|Ω^{n+1}| = W^n|Ω^n| + LΔt + L'Δt²/2` and rebuild the gradients from
//! the evolved Gauss-point states on t^{n+1} geometry.

use std::sync::Arc;

use rayon::prelude::*;

use crate::bc::{ghost, BoundaryKind, BoundaryMap, ExactField, PointData};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::kinetic::{collision_time, evolve_distribution, EvolutionInputs, FaceFrame, SideState};
use crate::mesh::{MovingMesh, Neighbor};
use crate::quadrature::{gauss_line_params, GAUSS_LINE_WEIGHTS};
use crate::recon::{CellReconstruction, Reconstructor};

/// Per-cell averages of the conserved variables, their gradients and the bottom.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CellSolution {
    /// `(h, hU, hV)`
    pub w: Vec<[f64; 3]>,
    /// `grad[c][d][i] = ∂w_i/∂x_d`
    pub grad: Vec<[[f64; 3]; 2]>,
    pub b: Vec<f64>,
    pub grad_b: Vec<[f64; 2]>,
}

impl CellSolution {
    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverParams {
    pub gravity: f64,
    pub cfl: f64,
    /// WENO limiting; when off the cubic is used directly.
    pub nonlinear: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams { gravity: 1.0, cfl: 0.5, nonlinear: true }
    }
}

/// Reconstructed polynomials of h, hU, hV and B on every cell.
#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub fields: [Vec<CellReconstruction>; 4],
}

impl Reconstruction {
    /// Smoothness indicator of the cubic of h on every cell.
    pub fn depth_variation(&self) -> Vec<f64> {
        self.fields[0].iter().map(|c| c.smoothness).collect()
    }
}

/// Evolution results at one Gauss point, in the global frame.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GaussResult {
    pub flux: [f64; 3],
    pub flux_t: [f64; 3],
    pub w: [f64; 3],
    pub w_t: [f64; 3],
    /// Equilibrium gradient `grad_bar[d][i]`.
    pub grad_bar: [[f64; 3]; 2],
    /// Evolved side states at t^{n+1}, left then right.
    pub next: [[f64; 3]; 2],
    /// Reconstructed point data on each side (ghost data on the right of
    /// boundary faces).
    pub side: [PointData; 2],
    pub wall: bool,
}

/// Operators of one cell.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CellOperators {
    pub l1: [f64; 3],
    pub dl1: [f64; 3],
    pub l2: [f64; 3],
    pub dl2: [f64; 3],
    pub l3: [f64; 3],
    pub dl3: [f64; 3],
    /// Bottom transport terms `Σ ω B V·n|Γ|` and its time derivative.
    pub lb: f64,
    pub dlb: f64,
}

impl CellOperators {
    pub fn total(&self) -> [f64; 3] {
        std::array::from_fn(|i| self.l1[i] + self.l2[i] + self.l3[i])
    }

    pub fn total_dt(&self) -> [f64; 3] {
        std::array::from_fn(|i| self.dl1[i] + self.dl2[i] + self.dl3[i])
    }
}

pub struct Solver {
    pub mesh: MovingMesh,
    pub recon: Reconstructor,
    pub sol: CellSolution,
    pub params: SolverParams,
    pub bcs: BoundaryMap,
    pub exact: Option<Arc<ExactField>>,
    pub time: f64,
    pub steps: usize,
}

impl Solver {
    pub fn new(mesh: MovingMesh, sol: CellSolution, params: SolverParams, bcs: BoundaryMap, exact: Option<Arc<ExactField>>) -> Result<Self> {
        if sol.len() != mesh.n_cells() {
            return Err(Error::Config(format!("solution has {} cells, mesh has {}", sol.len(), mesh.n_cells())));
        }
        if let Some(c) = sol.w.iter().position(|w| !(w[0] > 0.0)) {
            return Err(Error::Positivity { step: 0, cell: c, h: sol.w[c][0] });
        }
        let mut recon = Reconstructor::new(&mesh.topo, &mesh.current);
        recon.nonlinear = params.nonlinear;
        Ok(Solver { mesh, recon, sol, params, bcs, exact, time: 0.0, steps: 0 })
    }

    pub fn reconstruct(&self) -> Reconstruction {
        let g = &self.mesh.current;
        let n = self.sol.len();
        let field = |i: usize| -> Vec<CellReconstruction> {
            let vals: Vec<f64> = (0..n).map(|c| self.sol.w[c][i]).collect();
            let grads: Vec<[f64; 2]> = (0..n).map(|c| [self.sol.grad[c][0][i], self.sol.grad[c][1][i]]).collect();
            self.recon.reconstruct_field(g, &vals, &grads)
        };
        Reconstruction {
            fields: [field(0), field(1), field(2), self.recon.reconstruct_field(g, &self.sol.b, &self.sol.grad_b)],
        }
    }

    /// Fastest wave speed `|U_j| + √(G h_j)` of every cell.
    pub fn wave_speeds(&self) -> Vec<f64> {
        self.sol
            .w
            .iter()
            .map(|w| (w[1] * w[1] + w[2] * w[2]).sqrt() / w[0] + (self.params.gravity * w[0]).sqrt())
            .collect()
    }

    /// `Δt = CFL · min_j r_j / (|U_j| + √(G h_j) + max node speed)`.
    pub fn time_step(&self, node_velocities: Option<&[Vec2]>) -> Result<f64> {
        let g = &self.mesh.current;
        let dt = self
            .wave_speeds()
            .iter()
            .enumerate()
            .map(|(c, a)| {
                let vm = node_velocities
                    .map(|v| self.mesh.topo.cells[c].iter().map(|&n| v[n].norm()).fold(0.0, f64::max))
                    .unwrap_or(0.0);
                self.params.cfl * g.cells[c].inradius / (a + vm)
            })
            .fold(f64::INFINITY, f64::min);
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::TimeStep(dt));
        }
        Ok(dt)
    }

    fn point_data(&self, rec: &Reconstruction, cell: usize, x: &Vec2) -> PointData {
        let cg = &self.mesh.current.cells[cell];
        let mut p = PointData::default();
        for i in 0..3 {
            let (v, gr) = rec.fields[i][cell].poly.eval(cg, x);
            p.w[i] = v;
            p.grad[0][i] = gr[0];
            p.grad[1][i] = gr[1];
        }
        let (b, gb) = rec.fields[3][cell].poly.eval(cg, x);
        p.b = b;
        p.grad_b = gb;
        p
    }

    fn first_order(&self, cell: usize) -> PointData {
        PointData { w: self.sol.w[cell], b: self.sol.b[cell], ..Default::default() }
    }

    fn side_state(frame: &FaceFrame, p: &PointData, gravity: f64) -> SideState {
        let (dn, dt) = frame.grad_to_local(p.grad[0], p.grad[1]);
        let phi = frame.to_local([-gravity * p.grad_b[0], -gravity * p.grad_b[1]]);
        SideState { w: frame.state_to_local(p.w), dn, dt, phi }
    }

    fn evolve_point(&self, frame: &FaceFrame, left: &PointData, right: &PointData, dt: f64, wall: bool) -> Result<GaussResult> {
        let grav = self.params.gravity;
        let l = Self::side_state(frame, left, grav);
        let r = Self::side_state(frame, right, grav);
        let tau = collision_time(l.w[0], r.w[0], dt);
        let out = evolve_distribution(&EvolutionInputs { left: l, right: r, tau, dt, gravity: grav })?;
        let positive = out.w[0] > 0.0 && out.w_left_next[0] > 0.0 && out.w_right_next[0] > 0.0;
        if !positive {
            return Err(Error::State(format!("non-positive evolved depth {:?}", out)));
        }
        let mut flux = frame.state_to_global(out.flux);
        let mut flux_t = frame.state_to_global(out.flux_t);
        if wall {
            flux[0] = 0.0;
            flux_t[0] = 0.0;
        }
        let (gx, gy) = frame.grad_to_global(out.wbar_dn, out.wbar_dt);
        Ok(GaussResult {
            flux,
            flux_t,
            w: frame.state_to_global(out.w),
            w_t: frame.state_to_global(out.w_t),
            grad_bar: [gx, gy],
            next: [frame.state_to_global(out.w_left_next), frame.state_to_global(out.w_right_next)],
            side: [*left, *right],
            wall,
        })
    }

    fn boundary_data(&self, kind: BoundaryKind, interior: &PointData, mean: &PointData, x: Vec2, n: Vec2) -> Result<PointData> {
        ghost(kind, interior, mean, x, n, self.exact.as_deref())
    }

    /// Evolves both Gauss points of every face on the current geometry.
    pub fn evolve_faces(&self, rec: &Reconstruction, dt: f64) -> Result<Vec<[GaussResult; 2]>> {
        let topo = &self.mesh.topo;
        let geom = &self.mesh.current;
        (0..topo.faces.len())
            .into_par_iter()
            .map(|f| {
                let face = &topo.faces[f];
                let fg = &geom.faces[f];
                let frame = FaceFrame::new(fg.normal);
                let mut res = [GaussResult::default(); 2];
                for k in 0..2 {
                    let x = fg.gauss[k];
                    let high = |first: bool| -> Result<GaussResult> {
                        let left = if first { self.first_order(face.left) } else { self.point_data(rec, face.left, &x) };
                        let (right, wall) = match face.right {
                            Neighbor::Cell(c) => (if first { self.first_order(c) } else { self.point_data(rec, c, &x) }, false),
                            Neighbor::Boundary(tag) => {
                                let kind = self.bcs.kind(tag);
                                (self.boundary_data(kind, &left, &self.first_order(face.left), x, fg.normal)?, kind == BoundaryKind::Wall)
                            }
                        };
                        self.evolve_point(&frame, &left, &right, dt, wall)
                    };
                    res[k] = high(false).or_else(|_| high(true)).map_err(|e| Error::Evolution {
                        face: f,
                        point: k,
                        detail: e.to_string(),
                    })?;
                }
                Ok(res)
            })
            .collect()
    }

    /// Assembles every cell's operators on t^n geometry.
    pub fn assemble(&self, faces: &[[GaussResult; 2]], node_velocities: &[Vec2]) -> Vec<CellOperators> {
        let topo = &self.mesh.topo;
        let geom = &self.mesh.current;
        let params = gauss_line_params();
        let grav = self.params.gravity;
        (0..self.sol.len())
            .into_par_iter()
            .map(|c| {
                let mut op = CellOperators::default();
                for &f in &topo.cell_faces[c] {
                    let s = topo.orientation(c, f);
                    let own = if s > 0.0 { 0 } else { 1 };
                    let fg = &geom.faces[f];
                    let len = fg.length;
                    let cross = self.mesh.face_velocity_cross(f, node_velocities);
                    for k in 0..2 {
                        let om = GAUSS_LINE_WEIGHTS[k];
                        let r = &faces[f][k];
                        let v = self.mesh.face_point_velocity(f, params[k], node_velocities);
                        let vn = v.dot(&fg.normal) * s * len;
                        let h = r.w[0];
                        let pstat = [0.0, grav * h * r.grad_bar[0][0], grav * h * r.grad_bar[1][0]];
                        for i in 0..3 {
                            op.l1[i] -= s * om * r.flux[i] * len;
                            op.dl1[i] -= s * om * r.flux_t[i] * len + om * pstat[i] * vn;
                            op.l2[i] += om * r.w[i] * vn;
                            let convect = v.x * r.grad_bar[0][i] + v.y * r.grad_bar[1][i];
                            op.dl2[i] += om * (r.w_t[i] + convect) * vn + om * r.w[i] * s * cross;
                        }
                        let side = &r.side[own];
                        op.lb += om * side.b * vn;
                        op.dlb += om * (v.x * side.grad_b[0] + v.y * side.grad_b[1]) * vn + om * side.b * s * cross;
                    }
                }
                let area = geom.cells[c].area;
                let gb = self.sol.grad_b[c];
                op.l3 = [0.0, -grav * self.sol.w[c][0] * area * gb[0], -grav * self.sol.w[c][0] * area * gb[1]];
                let lh = op.l1[0] + op.l2[0];
                op.dl3 = [0.0, -grav * lh * gb[0], -grav * lh * gb[1]];
                op
            })
            .collect()
    }

    /// Advances the solution by `dt` with the given node velocities.
    pub fn step(&mut self, dt: f64, node_velocities: &[Vec2]) -> Result<Reconstruction> {
        let rec = self.reconstruct();
        self.step_with(&rec, dt, node_velocities)?;
        Ok(rec)
    }

    /// Advances the solution using a reconstruction already computed on t^n.
    pub fn step_with(&mut self, rec: &Reconstruction, dt: f64, node_velocities: &[Vec2]) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::TimeStep(dt));
        }
        let faces = self.evolve_faces(rec, dt)?;
        let ops = self.assemble(&faces, node_velocities);
        let moving = node_velocities.iter().any(|v| v.x != 0.0 || v.y != 0.0);
        self.mesh.apply_node_motion(node_velocities, dt)?;
        let (old, new) = (&self.mesh.previous, &self.mesh.current);
        let topo = &self.mesh.topo;
        let params = gauss_line_params();
        let half = 0.5 * dt * dt;

        let updated: Vec<([f64; 3], f64, [[f64; 3]; 2], [f64; 2])> = (0..self.sol.len())
            .into_par_iter()
            .map(|c| {
                let op = &ops[c];
                let (a0, a1) = (old.cells[c].area, new.cells[c].area);
                let (tot, tot_dt) = (op.total(), op.total_dt());
                let w: [f64; 3] = std::array::from_fn(|i| (self.sol.w[c][i] * a0 + tot[i] * dt + tot_dt[i] * half) / a1);
                let b = (self.sol.b[c] * a0 + op.lb * dt + op.dlb * half) / a1;
                let mut grad = [[0.0; 3]; 2];
                let mut grad_b = [0.0; 2];
                for &f in &topo.cell_faces[c] {
                    let s = topo.orientation(c, f);
                    let own = if s > 0.0 { 0 } else { 1 };
                    let fg = &new.faces[f];
                    let nl = fg.normal * (s * fg.length);
                    for k in 0..2 {
                        let om = GAUSS_LINE_WEIGHTS[k];
                        let r = &faces[f][k];
                        let side = &r.side[own];
                        let v = self.mesh.face_point_velocity(f, params[k], node_velocities);
                        for i in 0..3 {
                            let conv = (v.x * side.grad[0][i] + v.y * side.grad[1][i]) * dt;
                            let val = r.next[own][i] + conv;
                            grad[0][i] += om * val * nl.x;
                            grad[1][i] += om * val * nl.y;
                        }
                        let (s0, s1) = (&r.side[0], &r.side[1]);
                        let bm = 0.5 * (s0.b + s1.b);
                        let gbm = [0.5 * (s0.grad_b[0] + s1.grad_b[0]), 0.5 * (s0.grad_b[1] + s1.grad_b[1])];
                        let bval = bm + (v.x * gbm[0] + v.y * gbm[1]) * dt;
                        grad_b[0] += om * bval * nl.x;
                        grad_b[1] += om * bval * nl.y;
                    }
                }
                for row in grad.iter_mut() {
                    for g in row.iter_mut() {
                        *g /= a1;
                    }
                }
                grad_b[0] /= a1;
                grad_b[1] /= a1;
                (w, b, grad, grad_b)
            })
            .collect();

        for (c, u) in updated.iter().enumerate() {
            if !(u.0[0] > 0.0) || !u.0.iter().all(|x| x.is_finite()) {
                return Err(Error::Positivity { step: self.steps + 1, cell: c, h: u.0[0] });
            }
        }
        for (c, (w, b, grad, grad_b)) in updated.into_iter().enumerate() {
            self.sol.w[c] = w;
            self.sol.b[c] = b;
            self.sol.grad[c] = grad;
            self.sol.grad_b[c] = grad_b;
        }
        if moving {
            self.recon.rebuild(&self.mesh.current);
        }
        self.time += dt;
        self.steps += 1;
        Ok(())
    }

    /// Total water volume Σ h_j |Ω_j|.
    pub fn volume(&self) -> f64 {
        self.sol.w.iter().zip(&self.mesh.current.cells).map(|(w, c)| w[0] * c.area).sum()
    }
}
