//! Unstructured triangular mesh: connectivity, per-time geometry and motion.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{cross, inradius, right_normal, signed_area, Vec2};
use crate::quadrature::gauss_line_params;

/// Which part of the domain boundary a face belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    West,
    East,
    South,
    North,
    /// Boundary faces not on the bounding box (internal obstacles).
    Obstacle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Neighbor {
    Cell(usize),
    Boundary(BoundaryTag),
}

/// A face A→B. Its normal points from `left` into `right`.
#[derive(Clone, Debug)]
pub struct Face {
    pub nodes: [usize; 2],
    pub left: usize,
    pub right: Neighbor,
}

impl Face {
    pub fn right_cell(&self) -> Option<usize> {
        match self.right {
            Neighbor::Cell(c) => Some(c),
            Neighbor::Boundary(_) => None,
        }
    }
}

/// Static connectivity; never changes while nodes move.
#[derive(Clone, Debug)]
pub struct Topology {
    pub cells: Vec<[usize; 3]>,
    pub faces: Vec<Face>,
    pub cell_faces: Vec<[usize; 3]>,
    /// Edge neighbour across each of `cell_faces`.
    pub cell_neighbors: Vec<[Option<usize>; 3]>,
    /// Second ring reached through the edge neighbours; all share a vertex with the cell.
    pub vertex_neighbors: Vec<Vec<usize>>,
    pub node_cells: Vec<Vec<usize>>,
    pub node_neighbors: Vec<Vec<usize>>,
    pub boundary_node: Vec<bool>,
}

impl Topology {
    pub fn n_nodes(&self) -> usize {
        self.node_cells.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    /// +1 when `cell` is the left cell of `face` (normal points outward), -1 otherwise.
    pub fn orientation(&self, cell: usize, face: usize) -> f64 {
        if self.faces[face].left == cell {
            1.0
        } else {
            -1.0
        }
    }

    fn build(n_nodes: usize, cells: Vec<[usize; 3]>, tag_of: impl Fn(usize, usize) -> BoundaryTag) -> Result<Self> {
        let mut edge_map: HashMap<(usize, usize), usize> = HashMap::new();
        let mut faces: Vec<Face> = Vec::new();
        let mut cell_faces = vec![[0usize; 3]; cells.len()];
        for (c, tri) in cells.iter().enumerate() {
            for e in 0..3 {
                let (a, b) = (tri[e], tri[(e + 1) % 3]);
                let key = (a.min(b), a.max(b));
                if let Some(&f) = edge_map.get(&key) {
                    let face: &mut Face = &mut faces[f];
                    if face.right != Neighbor::Boundary(BoundaryTag::Obstacle) || face.nodes != [b, a] {
                        return Err(Error::Geometry(format!("non-manifold or inconsistently oriented edge {a}-{b}")));
                    }
                    face.right = Neighbor::Cell(c);
                    cell_faces[c][e] = f;
                } else {
                    edge_map.insert(key, faces.len());
                    cell_faces[c][e] = faces.len();
                    faces.push(Face {
                        nodes: [a, b],
                        left: c,
                        right: Neighbor::Boundary(BoundaryTag::Obstacle),
                    });
                }
            }
        }
        for face in faces.iter_mut() {
            if let Neighbor::Boundary(_) = face.right {
                face.right = Neighbor::Boundary(tag_of(face.nodes[0], face.nodes[1]));
            }
        }

        let cell_neighbors: Vec<[Option<usize>; 3]> = (0..cells.len())
            .map(|c| {
                cell_faces[c].map(|f| {
                    let face = &faces[f];
                    if face.left == c {
                        face.right_cell()
                    } else {
                        Some(face.left)
                    }
                })
            })
            .collect();

        let vertex_neighbors = (0..cells.len())
            .map(|c| {
                let edge: Vec<usize> = cell_neighbors[c].iter().flatten().copied().collect();
                let mut out = Vec::with_capacity(6);
                for &e in &edge {
                    for &f in cell_neighbors[e].iter().flatten() {
                        if f != c && !edge.contains(&f) && !out.contains(&f) {
                            out.push(f);
                        }
                    }
                }
                out
            })
            .collect();

        let mut node_cells = vec![Vec::new(); n_nodes];
        for (c, tri) in cells.iter().enumerate() {
            for &n in tri {
                node_cells[n].push(c);
            }
        }
        let mut node_neighbors = vec![Vec::new(); n_nodes];
        let mut boundary_node = vec![false; n_nodes];
        for face in &faces {
            let [a, b] = face.nodes;
            node_neighbors[a].push(b);
            node_neighbors[b].push(a);
            if face.right_cell().is_none() {
                boundary_node[a] = true;
                boundary_node[b] = true;
            }
        }
        for nb in node_neighbors.iter_mut() {
            nb.sort_unstable();
            nb.dedup();
        }
        if let Some(n) = node_cells.iter().position(|c| c.is_empty()) {
            return Err(Error::Geometry(format!("node {n} is not used by any triangle")));
        }

        Ok(Topology {
            cells,
            faces,
            cell_faces,
            cell_neighbors,
            vertex_neighbors,
            node_cells,
            node_neighbors,
            boundary_node,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellGeom {
    pub area: f64,
    pub centroid: Vec2,
    pub inradius: f64,
    /// Characteristic size √area used to scale the reconstruction.
    pub size: f64,
    pub vertices: [Vec2; 3],
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FaceGeom {
    pub normal: Vec2,
    pub length: f64,
    pub gauss: [Vec2; 2],
}

/// Geometry of the whole mesh at one time level.
#[derive(Clone, Debug, PartialEq)]
pub struct Geometry {
    pub nodes: Vec<Vec2>,
    pub cells: Vec<CellGeom>,
    pub faces: Vec<FaceGeom>,
}

impl Geometry {
    pub fn compute(topo: &Topology, nodes: Vec<Vec2>) -> Result<Self> {
        let cells = topo
            .cells
            .par_iter()
            .enumerate()
            .map(|(c, tri)| {
                let [a, b, d] = tri.map(|n| nodes[n]);
                let area = signed_area(&a, &b, &d);
                if !(area > 0.0) {
                    return Err(Error::MeshTangling { cell: c, area });
                }
                Ok(CellGeom {
                    area,
                    centroid: (a + b + d) / 3.0,
                    inradius: inradius(&a, &b, &d),
                    size: area.sqrt(),
                    vertices: [a, b, d],
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let [s0, s1] = gauss_line_params();
        let faces = topo
            .faces
            .par_iter()
            .map(|f| {
                let (a, b) = (nodes[f.nodes[0]], nodes[f.nodes[1]]);
                let d = b - a;
                let length = d.norm();
                FaceGeom {
                    normal: right_normal(&d) / length,
                    length,
                    gauss: [a + d * s0, a + d * s1],
                }
            })
            .collect();
        Ok(Geometry { nodes, cells, faces })
    }

    pub fn total_area(&self) -> f64 {
        self.cells.iter().map(|c| c.area).sum()
    }
}

/// Mesh with its initial node positions and the geometry at the last two
/// time levels (`previous` is t^n and `current` is t^{n+1} right after a move).
#[derive(Clone, Debug)]
pub struct MovingMesh {
    pub topo: Topology,
    pub initial: Vec<Vec2>,
    pub current: Geometry,
    pub previous: Geometry,
}

impl MovingMesh {
    pub fn new(nodes: Vec<Vec2>, cells: Vec<[usize; 3]>) -> Result<Self> {
        if nodes.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(Error::Geometry("non-finite node coordinate".into()));
        }
        let (mut lo, mut hi) = (Vec2::repeat(f64::INFINITY), Vec2::repeat(f64::NEG_INFINITY));
        for p in &nodes {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let tol = 1e-9 * (hi - lo).norm();
        let tag_of = |a: usize, b: usize| {
            let (pa, pb) = (nodes[a], nodes[b]);
            let on = |u: f64, v: f64, w: f64| (u - w).abs() <= tol && (v - w).abs() <= tol;
            if on(pa.x, pb.x, lo.x) {
                BoundaryTag::West
            } else if on(pa.x, pb.x, hi.x) {
                BoundaryTag::East
            } else if on(pa.y, pb.y, lo.y) {
                BoundaryTag::South
            } else if on(pa.y, pb.y, hi.y) {
                BoundaryTag::North
            } else {
                BoundaryTag::Obstacle
            }
        };
        let topo = Topology::build(nodes.len(), cells, tag_of)?;
        let current = Geometry::compute(&topo, nodes.clone())?;
        Ok(MovingMesh {
            topo,
            initial: nodes,
            previous: current.clone(),
            current,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.topo.n_cells()
    }

    pub fn n_nodes(&self) -> usize {
        self.topo.n_nodes()
    }

    pub fn n_faces(&self) -> usize {
        self.topo.faces.len()
    }

    pub fn nodes(&self) -> &[Vec2] {
        &self.current.nodes
    }

    /// Advances every node by `v Δt`, recomputes geometry and keeps the
    /// previous level. On tangling the mesh is left untouched.
    pub fn apply_node_motion(&mut self, velocities: &[Vec2], dt: f64) -> Result<()> {
        if velocities.iter().all(|v| v.x == 0.0 && v.y == 0.0) {
            self.previous = self.current.clone();
            return Ok(());
        }
        let moved: Vec<Vec2> = self
            .current
            .nodes
            .iter()
            .zip(velocities)
            .map(|(p, v)| p + v * dt)
            .collect();
        let next = Geometry::compute(&self.topo, moved)?;
        self.previous = std::mem::replace(&mut self.current, next);
        Ok(())
    }

    /// Σ_l n_l|Γ_l| over the faces of `cell` in the current geometry.
    pub fn closure_residual(&self, cell: usize) -> Vec2 {
        self.topo.cell_faces[cell]
            .iter()
            .map(|&f| {
                let g = &self.current.faces[f];
                g.normal * g.length * self.topo.orientation(cell, f)
            })
            .sum()
    }

    /// Velocity of a point on face `f` by linear interpolation of node velocities.
    pub fn face_point_velocity(&self, f: usize, s: f64, velocities: &[Vec2]) -> Vec2 {
        let [a, b] = self.topo.faces[f].nodes;
        velocities[a] * (1.0 - s) + velocities[b] * s
    }

    /// (V_A × V_B)·k for face `f`.
    pub fn face_velocity_cross(&self, f: usize, velocities: &[Vec2]) -> f64 {
        let [a, b] = self.topo.faces[f].nodes;
        cross(&velocities[a], &velocities[b])
    }

    pub fn write_ascii(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_ascii())?;
        Ok(())
    }

    pub fn to_ascii(&self) -> String {
        let mut s = String::new();
        writeln!(s, "nodes {}", self.n_nodes()).unwrap();
        for (i, p) in self.current.nodes.iter().enumerate() {
            writeln!(s, "{i} {:.17e} {:.17e}", p.x, p.y).unwrap();
        }
        writeln!(s, "triangles {}", self.n_cells()).unwrap();
        for (i, t) in self.topo.cells.iter().enumerate() {
            writeln!(s, "{i} {} {} {}", t[0], t[1], t[2]).unwrap();
        }
        s
    }

    pub fn read_ascii(path: &Path) -> Result<Self> {
        Self::from_ascii(&std::fs::read_to_string(path)?)
    }

    /// Parses the `nodes N` / `triangles M` text format written by [`Self::to_ascii`].
    pub fn from_ascii(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let perr = |line: usize, msg: &str| Error::Parse { line, msg: msg.to_string() };
        let header = |lines: &mut dyn Iterator<Item = (usize, &str)>, key: &str| -> Result<usize> {
            let (ln, l) = lines.next().ok_or_else(|| perr(0, "unexpected end of file"))?;
            let mut it = l.split_whitespace();
            if it.next() != Some(key) {
                return Err(perr(ln, &format!("expected `{key} <count>`")));
            }
            it.next()
                .and_then(|n| n.parse().ok())
                .ok_or_else(|| perr(ln, "bad count"))
        };
        let n_nodes = header(&mut lines, "nodes")?;
        let mut nodes = vec![Vec2::zeros(); n_nodes];
        for _ in 0..n_nodes {
            let (ln, l) = lines.next().ok_or_else(|| perr(0, "missing node line"))?;
            let v: Vec<&str> = l.split_whitespace().collect();
            if v.len() != 3 {
                return Err(perr(ln, "node line must be `id x y`"));
            }
            let id: usize = v[0].parse().map_err(|_| perr(ln, "bad node id"))?;
            let x: f64 = v[1].parse().map_err(|_| perr(ln, "bad x"))?;
            let y: f64 = v[2].parse().map_err(|_| perr(ln, "bad y"))?;
            *nodes.get_mut(id).ok_or_else(|| perr(ln, "node id out of range"))? = Vec2::new(x, y);
        }
        let n_tri = header(&mut lines, "triangles")?;
        let mut cells = vec![[0usize; 3]; n_tri];
        for _ in 0..n_tri {
            let (ln, l) = lines.next().ok_or_else(|| perr(0, "missing triangle line"))?;
            let v: Vec<usize> = l
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| perr(ln, "bad integer")))
                .collect::<Result<_>>()?;
            if v.len() != 4 || v[1..].iter().any(|&n| n >= n_nodes) {
                return Err(perr(ln, "triangle line must be `id n1 n2 n3` with valid nodes"));
            }
            *cells.get_mut(v[0]).ok_or_else(|| perr(ln, "triangle id out of range"))? = [v[1], v[2], v[3]];
        }
        MovingMesh::new(nodes, cells)
    }
}

/// Axis-aligned rectangle `[x0,x1]×[y0,y1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

/// Structured triangulation of `domain`: a grid of quads with spacing close to
/// `dx`, each split along its (i,j)→(i+1,j+1) diagonal.
pub fn build_uniform_tri_mesh(domain: Rect, dx: f64) -> Result<MovingMesh> {
    build_masked_tri_mesh(domain, dx, |_, _| true)
}

/// Like [`build_uniform_tri_mesh`] but keeps only the quads `(i, j)` for which
/// `keep` returns true. Removed quads become internal obstacles.
pub fn build_masked_tri_mesh(domain: Rect, dx: f64, keep: impl Fn(usize, usize) -> bool) -> Result<MovingMesh> {
    let (lx, ly) = (domain.x1 - domain.x0, domain.y1 - domain.y0);
    if !(dx > 0.0) || !(lx > 0.0) || !(ly > 0.0) || !dx.is_finite() {
        return Err(Error::Config(format!("degenerate domain {domain:?} or cell size {dx}")));
    }
    let nx = ((lx / dx).round() as usize).max(1);
    let ny = ((ly / dx).round() as usize).max(1);
    let (hx, hy) = (lx / nx as f64, ly / ny as f64);
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut used = vec![false; (nx + 1) * (ny + 1)];
    let mut tris = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            if !keep(i, j) {
                continue;
            }
            let (p00, p10, p11, p01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            tris.push([p00, p10, p11]);
            tris.push([p00, p11, p01]);
            for p in [p00, p10, p11, p01] {
                used[p] = true;
            }
        }
    }
    if tris.is_empty() {
        return Err(Error::Config("mask removed every cell".into()));
    }
    let mut remap = vec![usize::MAX; used.len()];
    let mut nodes = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            if used[id(i, j)] {
                remap[id(i, j)] = nodes.len();
                let x = if i == nx { domain.x1 } else { domain.x0 + i as f64 * hx };
                let y = if j == ny { domain.y1 } else { domain.y0 + j as f64 * hy };
                nodes.push(Vec2::new(x, y));
            }
        }
    }
    let tris = tris.into_iter().map(|t| t.map(|n| remap[n])).collect();
    MovingMesh::new(nodes, tris)
}
