//! Config-driven run with artifact output.

use std::fs;
use std::path::{Path, PathBuf};

use crate::config::{Cadence, Format, RunConfig};
use crate::error::Result;
use crate::output;
use crate::simulation::Simulation;

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    pub time: f64,
    pub snapshots: Vec<PathBuf>,
    pub error_history: Option<PathBuf>,
    pub centerline: PathBuf,
}

fn write_snapshot(sim: &Simulation, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>> {
    let mesh = &sim.solver.mesh;
    let stem = format!("snapshot_{:06}", sim.steps());
    let mut written = Vec::new();
    for f in formats {
        let path = match f {
            Format::Csv => {
                let p = dir.join(format!("{stem}.csv"));
                output::write_snapshot_csv(&p, &output::snapshot_rows(mesh, &sim.solver.sol))?;
                p
            }
            Format::Vtk => {
                let p = dir.join(format!("{stem}.vtk"));
                output::write_vtk(&p, mesh, &sim.solver.sol, sim.time())?;
                p
            }
        };
        written.push(path);
    }
    Ok(written)
}

/// Runs the configured case to its end time. Writes the effective config,
/// snapshots at the configured cadence plus the final one, the error
/// history (cases with a reference only), the final mesh and the
/// centreline `y = mid-height` extract.
pub fn run(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.txt"), cfg.serialize())?;

    let case = cfg.case_definition();
    let t_end = case.end_time;
    let domain = case.domain;
    let mut sim = Simulation::new(case, cfg.solver_params())?;
    let mut snapshots = write_snapshot(&sim, dir, &cfg.formats)?;
    let mut next_time = match cfg.snapshot {
        Cadence::Time(dt) => dt,
        _ => f64::INFINITY,
    };
    sim.run(t_end, cfg.max_steps, |s| {
        let due = match cfg.snapshot {
            Cadence::Final => false,
            Cadence::Steps(n) => s.steps() % n == 0,
            Cadence::Time(dt) => {
                let due = s.time() >= next_time * (1.0 - 1e-12);
                while s.time() >= next_time * (1.0 - 1e-12) {
                    next_time += dt;
                }
                due
            }
        };
        if due {
            snapshots.extend(write_snapshot(s, dir, &cfg.formats)?);
        }
        Ok(())
    })?;
    let final_csv = dir.join(format!("snapshot_{:06}.csv", sim.steps()));
    if !snapshots.iter().any(|p| p.file_stem() == final_csv.file_stem()) {
        snapshots.extend(write_snapshot(&sim, dir, &cfg.formats)?);
    }

    let error_history = if sim.history.is_empty() {
        None
    } else {
        let p = dir.join("errors.csv");
        output::write_error_history(&p, &sim.history)?;
        Some(p)
    };
    sim.solver.mesh.write_ascii(&dir.join("mesh.txt"))?;
    let y_mid = 0.5 * (domain.y0 + domain.y1);
    let centerline = dir.join("centerline.csv");
    output::write_centerline(&centerline, &sim.centerline(y_mid, domain.x0, domain.x1, cfg.centerline_points))?;

    Ok(RunSummary { steps: sim.steps(), time: sim.time(), snapshots, error_history, centerline })
}
