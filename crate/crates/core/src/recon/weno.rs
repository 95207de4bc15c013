//! Nonlinear combination of the cubic with the one-neighbour linear polynomials.
//!
//! `R = Σ w_k P¹_k + w₀ ((1+C)/C P³ − Σ C_k/C P¹_k)` with `C = 5` and
//! `C_k = 1/3`. The linear weights `d₀ = C/(1+C)`, `d_k = C_k/(1+C)` make the
//! combination collapse to `P³`; the nonlinear weights are of Z type.

use super::poly::CubicPoly;

pub const WENO_C: f64 = 5.0;
pub const WENO_EPS: f64 = 1e-12;

/// `C_k` for `n` available sub-stencils (1/3 on a full stencil).
pub fn sub_constant(n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        1.0 / n as f64
    }
}

/// Linear weights `[d₀, d₁, …, d_n]`; they sum to one.
pub fn linear_weights(n: usize) -> Vec<f64> {
    if n == 0 {
        return vec![1.0];
    }
    let ck = sub_constant(n);
    let mut d = Vec::with_capacity(n + 1);
    d.push(WENO_C / (1.0 + WENO_C));
    d.extend(std::iter::repeat(ck / (1.0 + WENO_C)).take(n));
    d
}

/// Z-type nonlinear weights from the smoothness indicators `[IS₀, IS₁, …]`.
pub fn nonlinear_weights(is: &[f64]) -> Vec<f64> {
    let n = is.len() - 1;
    let d = linear_weights(n);
    if n == 0 {
        return d;
    }
    let mean_sub = is[1..].iter().sum::<f64>() / n as f64;
    let tau = (is[0] - mean_sub).abs();
    let raw: Vec<f64> = d
        .iter()
        .zip(is)
        .map(|(dk, isk)| dk * (1.0 + tau / (isk + WENO_EPS)))
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / sum).collect()
}

/// Combines `p3` with the sub-stencil polynomials under the given weights
/// `[w₀, w₁, …]`.
pub fn combine(p3: &CubicPoly, subs: &[CubicPoly], weights: &[f64]) -> CubicPoly {
    if subs.is_empty() {
        return *p3;
    }
    let ck = sub_constant(subs.len());
    let mut r = p3.scaled(weights[0] * (1.0 + WENO_C) / WENO_C);
    for (k, p1) in subs.iter().enumerate() {
        r.axpy(weights[k + 1] - weights[0] * ck / WENO_C, p1);
    }
    r
}

/// Full WENO step: weights from smoothness indicators, then the combination.
pub fn weno_combine(p3: &CubicPoly, subs: &[CubicPoly], is: &[f64]) -> (CubicPoly, Vec<f64>) {
    let w = nonlinear_weights(is);
    (combine(p3, subs, &w), w)
}
