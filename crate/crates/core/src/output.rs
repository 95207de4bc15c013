//! On-disk artifacts: cell snapshots (CSV, legacy VTK), error histories and
//! centreline extracts.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::MovingMesh;
use crate::simulation::ErrorRecord;
use crate::solver::CellSolution;

pub const SNAPSHOT_HEADER: [&str; 13] = ["x", "y", "h", "hu", "hv", "b", "h_plus_b", "x1", "y1", "x2", "y2", "x3", "y3"];
pub const ERROR_HEADER: [&str; 7] = ["time", "err_h_L1", "err_h_Linf", "err_hu_L1", "err_hu_Linf", "err_hv_L1", "err_hv_Linf"];
pub const CENTERLINE_HEADER: [&str; 5] = ["x", "h", "B", "h_plus_B", "hu"];

/// One cell of a snapshot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnapshotRow {
    pub centroid: [f64; 2],
    pub h: f64,
    pub hu: f64,
    pub hv: f64,
    pub b: f64,
    pub vertices: [[f64; 2]; 3],
}

impl SnapshotRow {
    fn values(&self) -> [f64; 13] {
        let [a, b, c] = self.vertices;
        [
            self.centroid[0],
            self.centroid[1],
            self.h,
            self.hu,
            self.hv,
            self.b,
            self.h + self.b,
            a[0],
            a[1],
            b[0],
            b[1],
            c[0],
            c[1],
        ]
    }
}

pub fn snapshot_rows(mesh: &MovingMesh, sol: &CellSolution) -> Vec<SnapshotRow> {
    mesh.current
        .cells
        .iter()
        .enumerate()
        .map(|(c, g)| SnapshotRow {
            centroid: [g.centroid.x, g.centroid.y],
            h: sol.w[c][0],
            hu: sol.w[c][1],
            hv: sol.w[c][2],
            b: sol.b[c],
            vertices: g.vertices.map(|v| [v.x, v.y]),
        })
        .collect()
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse { line: 0, msg: format!("{other:?}") },
    }
}

fn write_table<const N: usize>(path: &Path, header: [&str; N], rows: impl Iterator<Item = [f64; N]>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.write_record(row.iter().map(|v| format!("{v:.16e}"))).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn read_table<const N: usize>(path: &Path, header: [&str; N]) -> Result<Vec<[f64; N]>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_error)?;
    let found = r.headers().map_err(csv_error)?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::Parse { line: 1, msg: format!("unexpected header `{}`", found.iter().collect::<Vec<_>>().join(",")) });
    }
    r.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec.map_err(csv_error)?;
            let bad = |msg: String| Error::Parse { line: i + 2, msg };
            if rec.len() != N {
                return Err(bad(format!("expected {N} fields, got {}", rec.len())));
            }
            let mut row = [0.0; N];
            for (dst, field) in row.iter_mut().zip(rec.iter()) {
                *dst = field.trim().parse().map_err(|_| bad(format!("invalid number `{field}`")))?;
            }
            Ok(row)
        })
        .collect()
}

/// Header plus one row per cell, 17 significant digits.
pub fn write_snapshot_csv(path: &Path, rows: &[SnapshotRow]) -> Result<()> {
    write_table(path, SNAPSHOT_HEADER, rows.iter().map(SnapshotRow::values))
}

pub fn read_snapshot_csv(path: &Path) -> Result<Vec<SnapshotRow>> {
    Ok(read_table(path, SNAPSHOT_HEADER)?
        .into_iter()
        .map(|v| SnapshotRow {
            centroid: [v[0], v[1]],
            h: v[2],
            hu: v[3],
            hv: v[4],
            b: v[5],
            vertices: [[v[7], v[8]], [v[9], v[10]], [v[11], v[12]]],
        })
        .collect())
}

/// Legacy ASCII unstructured grid with per-cell h, B, h+B and (U, V).
pub fn vtk_string(mesh: &MovingMesh, sol: &CellSolution, time: f64) -> String {
    let nodes = mesh.nodes();
    let cells = &mesh.topo.cells;
    let n = cells.len();
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0\nshallow water t={time:.16e}\nASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {} double", nodes.len());
    for p in nodes {
        let _ = writeln!(s, "{:.16e} {:.16e} 0", p.x, p.y);
    }
    let _ = writeln!(s, "CELLS {} {}", n, 4 * n);
    for c in cells {
        let _ = writeln!(s, "3 {} {} {}", c[0], c[1], c[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {n}");
    for _ in 0..n {
        s.push_str("5\n");
    }
    let _ = writeln!(s, "CELL_DATA {n}");
    let scalar = |s: &mut String, name: &str, f: &dyn Fn(usize) -> f64| {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for c in 0..n {
            let _ = writeln!(s, "{:.16e}", f(c));
        }
    };
    scalar(&mut s, "h", &|c| sol.w[c][0]);
    scalar(&mut s, "B", &|c| sol.b[c]);
    scalar(&mut s, "h_plus_B", &|c| sol.w[c][0] + sol.b[c]);
    let _ = writeln!(s, "VECTORS velocity double");
    for w in &sol.w {
        let _ = writeln!(s, "{:.16e} {:.16e} 0", w[1] / w[0], w[2] / w[0]);
    }
    s
}

pub fn write_vtk(path: &Path, mesh: &MovingMesh, sol: &CellSolution, time: f64) -> Result<()> {
    fs::write(path, vtk_string(mesh, sol, time))?;
    Ok(())
}

pub fn write_error_history(path: &Path, history: &[ErrorRecord]) -> Result<()> {
    write_table(
        path,
        ERROR_HEADER,
        history.iter().map(|r| {
            let [(a, b), (c, d), (e, f)] = r.norms;
            [r.time, a, b, c, d, e, f]
        }),
    )
}

pub fn read_error_history(path: &Path) -> Result<Vec<ErrorRecord>> {
    Ok(read_table(path, ERROR_HEADER)?
        .into_iter()
        .map(|v| ErrorRecord { time: v[0], norms: [(v[1], v[2]), (v[3], v[4]), (v[5], v[6])] })
        .collect())
}

pub fn write_centerline(path: &Path, rows: &[[f64; 5]]) -> Result<()> {
    write_table(path, CENTERLINE_HEADER, rows.iter().copied())
}

pub fn read_centerline(path: &Path) -> Result<Vec<[f64; 5]>> {
    read_table(path, CENTERLINE_HEADER)
}
