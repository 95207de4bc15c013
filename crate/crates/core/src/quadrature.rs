//! Quadrature rules on segments and triangles.

use crate::geometry::Vec2;

/// Two-point Gauss–Legendre rule on [0,1]: parameters along the segment.
pub fn gauss_line_params() -> [f64; 2] {
    let d = 0.5 / 3f64.sqrt();
    [0.5 - d, 0.5 + d]
}

/// Weights of the two-point rule, normalized to sum to one.
pub const GAUSS_LINE_WEIGHTS: [f64; 2] = [0.5, 0.5];

/// Seven-point symmetric triangle rule, exact for polynomials of degree 5.
///
/// Returns barycentric coordinates and weights normalized to sum to one.
pub fn triangle_rule_deg5() -> [([f64; 3], f64); 7] {
    let s15 = 15f64.sqrt();
    let b1 = (6.0 + s15) / 21.0;
    let a1 = 1.0 - 2.0 * b1;
    let w1 = (155.0 + s15) / 1200.0;
    let b2 = (6.0 - s15) / 21.0;
    let a2 = 1.0 - 2.0 * b2;
    let w2 = (155.0 - s15) / 1200.0;
    let third = 1.0 / 3.0;
    [
        ([third, third, third], 9.0 / 40.0),
        ([a1, b1, b1], w1),
        ([b1, a1, b1], w1),
        ([b1, b1, a1], w1),
        ([a2, b2, b2], w2),
        ([b2, a2, b2], w2),
        ([b2, b2, a2], w2),
    ]
}

/// Physical quadrature points of the degree-5 rule on triangle `p`.
pub fn triangle_points(p: &[Vec2; 3]) -> [(Vec2, f64); 7] {
    triangle_rule_deg5().map(|(b, w)| (p[0] * b[0] + p[1] * b[1] + p[2] * b[2], w))
}

/// Average of `f` over a triangle using the degree-5 rule on `2^levels`-fold
/// subdivided triangles. With `levels = 0` it is exact for quintics.
pub fn triangle_average<F: Fn(Vec2) -> f64>(p: &[Vec2; 3], levels: u32, f: &F) -> f64 {
    if levels == 0 {
        return triangle_points(p).iter().map(|(x, w)| w * f(*x)).sum();
    }
    let m01 = (p[0] + p[1]) * 0.5;
    let m12 = (p[1] + p[2]) * 0.5;
    let m20 = (p[2] + p[0]) * 0.5;
    let subs = [
        [p[0], m01, m20],
        [m01, p[1], m12],
        [m20, m12, p[2]],
        [m01, m12, m20],
    ];
    subs.iter()
        .map(|s| triangle_average(s, levels - 1, f))
        .sum::<f64>()
        * 0.25
}
