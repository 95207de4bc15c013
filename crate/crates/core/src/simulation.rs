//! Time loop: motion planning, step size selection and error tracking.

use crate::cases::{error_norms, CaseDefinition};
use crate::geometry::signed_area;
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::mesh::Geometry;
use crate::motion::{MotionController, MotionSpec, StepMotion};
use crate::solver::{Solver, SolverParams};

/// L¹ and L∞ errors of `(h or h+B, hU, hV)` at one time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorRecord {
    pub time: f64,
    pub norms: [(f64, f64); 3],
}

impl ErrorRecord {
    /// Largest L∞ error over all components.
    pub fn max_linf(&self) -> f64 {
        self.norms.iter().map(|n| n.1).fold(0.0, f64::max)
    }
}

pub struct Simulation {
    pub case: CaseDefinition,
    pub solver: Solver,
    pub motion: MotionController,
    pub history: Vec<ErrorRecord>,
    /// Depth variation of the latest reconstruction.
    variation: Vec<f64>,
}

impl Simulation {
    pub fn new(case: CaseDefinition, params: SolverParams) -> Result<Self> {
        let mesh = case.build_mesh()?;
        if let MotionSpec::Prescribed(p) = case.motion {
            let topo = &mesh.topo;
            for (i, x0) in mesh.initial.iter().enumerate() {
                if topo.boundary_node[i] && p.displacement(x0, 0.5).norm() > 1e-12 {
                    return Err(Error::Config(format!("prescribed motion moves boundary node {i}")));
                }
            }
        }
        let sol = case.initialize(&mesh);
        let solver = Solver::new(mesh, sol, params, case.bcs, case.steady_field())?;
        let n = solver.sol.len();
        Ok(Simulation { motion: MotionController::new(case.motion), case, solver, history: Vec::new(), variation: vec![0.0; n] })
    }

    pub fn time(&self) -> f64 {
        self.solver.time
    }

    pub fn steps(&self) -> usize {
        self.solver.steps
    }

    /// Current errors against the case reference, if it has one.
    pub fn errors(&self) -> Option<ErrorRecord> {
        let mesh = &self.solver.mesh;
        let reference = self.case.reference(mesh, self.time())?;
        let areas: Vec<f64> = mesh.current.cells.iter().map(|c| c.area).collect();
        let norms = error_norms(&self.case.monitored(&self.solver.sol), &reference, &areas);
        Some(ErrorRecord { time: self.time(), norms })
    }

    /// Node velocities and step length for the next step, not exceeding
    /// `t_end`.
    fn plan(&mut self, t_end: f64) -> Result<(f64, Vec<Vec2>)> {
        let remaining = t_end - self.time();
        let solver = &self.solver;
        let mesh = &solver.mesh;
        let n = mesh.n_nodes();
        match self.motion.plan(mesh, solver.steps, &self.variation, solver.params.cfl) {
            StepMotion::None => Ok((solver.time_step(None)?.min(remaining), vec![Vec2::zeros(); n])),
            StepMotion::Trajectory(p) => {
                let boundary = &mesh.topo.boundary_node;
                let velocities = |dt: f64| {
                    let mut v = p.velocities(&mesh.initial, solver.time, dt);
                    v.iter_mut().zip(boundary).filter(|(_, &b)| b).for_each(|(v, _)| *v = Vec2::zeros());
                    v
                };
                let mut dt = solver.time_step(None)?.min(remaining);
                let mut v = velocities(dt);
                for _ in 0..3 {
                    dt = solver.time_step(Some(&v))?.min(remaining);
                    v = velocities(dt);
                }
                Ok((dt, v))
            }
            StepMotion::Displacement(d) => {
                // CFL with mesh speed |d|/Δt: a_j Δt + |d| ≤ CFL r_j
                let speeds = solver.wave_speeds();
                let dt = speeds
                    .iter()
                    .enumerate()
                    .map(|(c, a)| {
                        let dmax = mesh.topo.cells[c].iter().map(|&i| d[i].norm()).fold(0.0, f64::max);
                        (solver.params.cfl * mesh.current.cells[c].inradius - dmax) / a
                    })
                    .fold(f64::INFINITY, f64::min)
                    .min(remaining);
                if !(dt > 0.0) {
                    return Err(Error::TimeStep(dt));
                }
                Ok((dt, d.iter().map(|x| x / dt).collect()))
            }
        }
    }

    /// Advances one step towards `t_end`; returns the step length.
    pub fn step(&mut self, t_end: f64) -> Result<f64> {
        if self.time() >= t_end {
            return Err(Error::TimeStep(0.0));
        }
        let (dt, v) = self.plan(t_end)?;
        let rec = self.solver.step(dt, &v)?;
        self.variation = rec.depth_variation();
        if let Some(e) = self.errors() {
            self.history.push(e);
        }
        Ok(dt)
    }

    /// Runs until `t_end` or `max_steps`, calling `on_step` after every step.
    pub fn run<F: FnMut(&Simulation) -> Result<()>>(&mut self, t_end: f64, max_steps: Option<usize>, mut on_step: F) -> Result<()> {
        if !(t_end > 0.0) {
            return Err(Error::Config(format!("end time must be positive, got {t_end}")));
        }
        // round-off guard so the last step lands on t_end
        while t_end - self.time() > 1e-12 * t_end.max(1.0) {
            if max_steps.is_some_and(|m| self.steps() >= m) {
                break;
            }
            self.step(t_end)?;
            on_step(self)?;
        }
        Ok(())
    }

    /// Samples the reconstructed solution at `n` evenly spaced points on
    /// the segment `y = y0`, `x ∈ [x0, x1]`; rows are `(x, h, B, h+B, hU)`.
    /// Points outside the mesh are skipped.
    pub fn centerline(&self, y0: f64, x0: f64, x1: f64, n: usize) -> Vec<[f64; 5]> {
        let rec = self.solver.reconstruct();
        let geom = &self.solver.mesh.current;
        (0..n)
            .filter_map(|k| {
                let x = x0 + (x1 - x0) * k as f64 / (n.max(2) - 1) as f64;
                let p = Vec2::new(x, y0);
                let c = locate(geom, &p)?;
                let cell = &geom.cells[c];
                let h = rec.fields[0][c].poly.value(cell, &p);
                let hu = rec.fields[1][c].poly.value(cell, &p);
                let b = rec.fields[3][c].poly.value(cell, &p);
                Some([x, h, b, h + b, hu])
            })
            .collect()
    }
}

/// Cell containing `p` (closed triangles; the lowest index wins on shared
/// edges).
pub fn locate(geom: &Geometry, p: &Vec2) -> Option<usize> {
    geom.cells.iter().position(|c| {
        let [a, b, d] = c.vertices;
        let tol = -1e-12 * c.area;
        signed_area(&a, &b, p) >= tol && signed_area(&b, &d, p) >= tol && signed_area(&d, &a, p) >= tol
    })
}
