//! Planar vector helpers and moving-segment kinematics.
//!
//! A face A→B carries the unit normal on the right-hand side of the direction
//! of travel. Node velocities are constant within a time step, so the moved
//! segment A'B' stays straight and the swept region is a quadrilateral whose
//! signed area is quadratic in the step length.

use crate::error::{Error, Result};
use nalgebra::Vector2;

pub type Vec2 = Vector2<f64>;

/// z-component of the planar cross product.
#[inline]
pub fn cross(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Right-hand normal of the direction `d` (not normalized).
#[inline]
pub fn right_normal(d: &Vec2) -> Vec2 {
    Vec2::new(d.y, -d.x)
}

/// Signed area of a triangle; positive for counterclockwise vertices.
#[inline]
pub fn signed_area(a: &Vec2, b: &Vec2, c: &Vec2) -> f64 {
    0.5 * cross(&(b - a), &(c - a))
}

/// Shoelace signed area of a closed polygon.
pub fn polygon_area(pts: &[Vec2]) -> f64 {
    let n = pts.len();
    (0..n).map(|i| cross(&pts[i], &pts[(i + 1) % n])).sum::<f64>() * 0.5
}

/// Inradius of a triangle.
pub fn inradius(a: &Vec2, b: &Vec2, c: &Vec2) -> f64 {
    let area = signed_area(a, b, c).abs();
    let perimeter = (b - a).norm() + (c - b).norm() + (a - c).norm();
    2.0 * area / perimeter
}

/// Unit normal of the face `a`→`b` after its end points have moved with
/// constant velocities `va`, `vb` for time `t`.
///
/// In the face-local frame (normal, tangent) the unnormalized normal is
/// `(ΔV t + |Γ|, −ΔU t)`; rotating that back is the same as taking the right
/// normal of the moved segment.
pub fn face_normal_at_time(a: &Vec2, b: &Vec2, va: &Vec2, vb: &Vec2, t: f64) -> Result<Vec2> {
    let len = (b - a).norm();
    if !(len > 0.0) {
        return Err(Error::Geometry("zero-length face".into()));
    }
    let n0 = right_normal(&(b - a)) / len;
    let tangent = (b - a) / len;
    let du = (vb - va).dot(&n0);
    let dv = (vb - va).dot(&tangent);
    let local = Vec2::new(dv * t + len, -du * t);
    let local = local / local.norm();
    Ok(n0 * local.x + tangent * local.y)
}

/// Signed area swept by the face `a`→`b` over `dt` when its end points move
/// with velocities `va`, `vb`.
///
/// `ΔS = ½(U₁+U₂)|Γ|Δt + (V₁×V₂)·k Δt²/2` where `U` is the velocity component
/// along the face normal. Positive when the face sweeps along its normal.
pub fn swept_area(a: &Vec2, b: &Vec2, va: &Vec2, vb: &Vec2, dt: f64) -> f64 {
    // |Γ| n = right_normal(b - a), so U|Γ| = V·right_normal(b - a)
    let nl = right_normal(&(b - a));
    0.5 * (va.dot(&nl) + vb.dot(&nl)) * dt + cross(va, vb) * dt * dt * 0.5
}

/// Signed area of the quadrilateral A A' B' B via the shoelace formula.
pub fn swept_area_shoelace(a: &Vec2, b: &Vec2, va: &Vec2, vb: &Vec2, dt: f64) -> f64 {
    let a1 = a + va * dt;
    let b1 = b + vb * dt;
    // A → A' → B' → B is counterclockwise when the face sweeps to its right
    polygon_area(&[*a, a1, b1, *b])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    #[test]
    fn normal_of_translating_face_is_constant() {
        let (a, b) = (v(0.3, -0.2), v(1.1, 0.9));
        let vel = v(0.7, -2.0);
        let n0 = face_normal_at_time(&a, &b, &vel, &vel, 0.0).unwrap();
        let n1 = face_normal_at_time(&a, &b, &vel, &vel, 0.37).unwrap();
        assert!((n0 - n1).norm() < 1e-15);
    }

    #[test]
    fn normal_perpendicular_to_moved_segment() {
        let (a, b) = (v(0.0, 0.0), v(0.0, 1.0));
        let (va, vb) = (v(0.0, 0.0), v(1.0, 0.0));
        let n = face_normal_at_time(&a, &b, &va, &vb, 0.1).unwrap();
        let seg = (b + vb * 0.1) - (a + va * 0.1);
        assert!(n.dot(&seg).abs() < 1e-15);
        let expect = v(1.0, -0.1) / v(1.0, -0.1).norm();
        assert!((n - expect).norm() < 1e-15);
        assert!((n.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn normal_at_zero_time_is_static_normal() {
        let (a, b) = (v(0.0, 0.0), v(0.0, 1.0));
        let n = face_normal_at_time(&a, &b, &v(3.0, 1.0), &v(-2.0, 5.0), 0.0).unwrap();
        assert_eq!(n, v(1.0, 0.0));
    }

    #[test]
    fn zero_length_face_rejected() {
        let a = v(1.0, 1.0);
        assert!(face_normal_at_time(&a, &a, &a, &a, 0.1).is_err());
    }

    #[test]
    fn swept_area_examples() {
        let (a, b) = (v(0.0, 0.0), v(0.0, 1.0));
        let s = swept_area(&a, &b, &v(0.2, 0.0), &v(0.2, 0.0), 0.1);
        assert!((s - 0.02).abs() < 1e-16);
        let s = swept_area(&a, &b, &v(0.0, 1.0), &v(0.0, 1.0), 0.1);
        assert!(s.abs() < 1e-16);
        let s = swept_area(&a, &b, &v(0.3, 0.0), &v(0.3, 0.6), 0.1);
        let oracle = polygon_area(&[v(0.0, 0.0), v(0.03, 0.0), v(0.03, 1.06), v(0.0, 1.0)]);
        assert!((oracle - 0.0309).abs() < 1e-15);
        assert!((s - oracle).abs() < 1e-15);
    }

    #[test]
    fn inradius_of_right_triangle() {
        let r = inradius(&v(0.0, 0.0), &v(1.0, 0.0), &v(0.0, 1.0));
        assert!((r - (2.0 - 2f64.sqrt()) / 2.0).abs() < 1e-15);
    }
}
