//! Ghost states at boundary Gauss points.

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::mesh::BoundaryTag;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryKind {
    /// Zero-gradient outflow: the ghost keeps the interior bottom, and takes
    /// the cell-average surface `h + B` and momentum with zero gradients.
    Free,
    /// Non-penetrating slip wall: the ghost is the mirror image of the interior.
    Wall,
    /// The ghost is the case's exact steady state at the boundary point.
    Steady,
}

impl std::str::FromStr for BoundaryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "free" => Ok(BoundaryKind::Free),
            "wall" => Ok(BoundaryKind::Wall),
            "steady" => Ok(BoundaryKind::Steady),
            _ => Err(Error::Config(format!("unknown boundary kind '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryMap {
    pub west: BoundaryKind,
    pub east: BoundaryKind,
    pub south: BoundaryKind,
    pub north: BoundaryKind,
    pub obstacle: BoundaryKind,
}

impl BoundaryMap {
    pub fn uniform(kind: BoundaryKind) -> Self {
        BoundaryMap { west: kind, east: kind, south: kind, north: kind, obstacle: kind }
    }

    pub fn kind(&self, tag: BoundaryTag) -> BoundaryKind {
        match tag {
            BoundaryTag::West => self.west,
            BoundaryTag::East => self.east,
            BoundaryTag::South => self.south,
            BoundaryTag::North => self.north,
            BoundaryTag::Obstacle => self.obstacle,
        }
    }
}

/// Point value and gradient of every reconstructed field.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PointData {
    /// `(h, hU, hV)`
    pub w: [f64; 3],
    /// `grad[d][i] = ∂w_i/∂x_d`
    pub grad: [[f64; 3]; 2],
    pub b: f64,
    pub grad_b: [f64; 2],
}

/// Exact field evaluator used by [`BoundaryKind::Steady`].
pub type ExactField = dyn Fn(Vec2) -> PointData + Sync + Send;

fn reflect(n: Vec2, v: [f64; 2]) -> [f64; 2] {
    let d = v[0] * n.x + v[1] * n.y;
    [v[0] - 2.0 * d * n.x, v[1] - 2.0 * d * n.y]
}

/// Mirror image across the line through the boundary point with normal `n`.
///
/// Scalars s'(x) = s(Rx) get gradients R∇s; the momentum field m'(x) = R m(Rx)
/// gets the Jacobian R J R, with R = I − 2nnᵀ.
pub fn mirror(p: &PointData, n: Vec2) -> PointData {
    let mut out = *p;
    let m = reflect(n, [p.w[1], p.w[2]]);
    out.w[1] = m[0];
    out.w[2] = m[1];
    let gh = reflect(n, [p.grad[0][0], p.grad[1][0]]);
    out.grad[0][0] = gh[0];
    out.grad[1][0] = gh[1];
    out.grad_b = reflect(n, p.grad_b);
    // J[i][d] = ∂m_i/∂x_d; columns first (R J), then rows (… R)
    let mut j = [[p.grad[0][1], p.grad[1][1]], [p.grad[0][2], p.grad[1][2]]];
    let c0 = reflect(n, [j[0][0], j[1][0]]);
    let c1 = reflect(n, [j[0][1], j[1][1]]);
    j = [[c0[0], c1[0]], [c0[1], c1[1]]];
    let r0 = reflect(n, j[0]);
    let r1 = reflect(n, j[1]);
    out.grad[0][1] = r0[0];
    out.grad[1][1] = r0[1];
    out.grad[0][2] = r1[0];
    out.grad[1][2] = r1[1];
    out
}

/// Ghost data for a boundary Gauss point at `x` with outward normal `n`.
///
/// `interior` is the reconstructed point data of the boundary cell and
/// `mean` its cell average.
pub fn ghost(kind: BoundaryKind, interior: &PointData, mean: &PointData, x: Vec2, n: Vec2, exact: Option<&ExactField>) -> Result<PointData> {
    match kind {
        BoundaryKind::Free => {
            let surface = mean.w[0] + mean.b;
            Ok(PointData {
                w: [surface - interior.b, mean.w[1], mean.w[2]],
                grad: [[-interior.grad_b[0], 0.0, 0.0], [-interior.grad_b[1], 0.0, 0.0]],
                b: interior.b,
                grad_b: interior.grad_b,
            })
        }
        BoundaryKind::Wall => Ok(mirror(interior, n)),
        BoundaryKind::Steady => exact
            .map(|f| f(x))
            .ok_or_else(|| Error::Config("steady boundary without an exact field".into())),
    }
}
