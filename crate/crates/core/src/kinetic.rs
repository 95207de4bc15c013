//! Gas-kinetic evolution at a face Gauss point.
//!
//! Everything here works in the face frame: the first velocity component is
//! along the face normal (from the left to the right cell), the second along
//! the tangent `t = (−n_y, n_x)`. A particle distribution is handled through
//! its moments only; every term of the evolution solution is a Maxwellian
//! (possibly restricted to a half space in the normal velocity) multiplied by
//! a polynomial in the particle velocity.

use crate::error::{Error, Result};
use crate::geometry::Vec2;

/// Highest velocity power for which moment tables are built.
const MAX_POWER: usize = 7;
/// Polynomials in (u, v) with total degree below this bound.
const PD: usize = 6;

/// Collision-time constant of the interface dissipation model.
pub const C_NUM: f64 = 10.0;
/// Constant of the discontinuous side-state model.
pub const C_SIDE: f64 = 5.0;

/// Weights of the normal source component, by u-order of the moment.
const ALPHA_NORMAL: [f64; 3] = [1.0, 0.75, 0.25];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Half {
    Full,
    /// u > 0
    Pos,
    /// u < 0
    Neg,
}

/// Local equilibrium `g = h (λ/π) exp(−λ|u − U|²)` with `λ = 1/(G h)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Maxwellian {
    pub h: f64,
    pub u: f64,
    pub v: f64,
    pub lambda: f64,
}

impl Maxwellian {
    pub fn new(h: f64, u: f64, v: f64, gravity: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::State(format!("non-positive depth {h}")));
        }
        Ok(Maxwellian { h, u, v, lambda: 1.0 / (gravity * h) })
    }

    pub fn from_conserved(w: &[f64; 3], gravity: f64) -> Result<Self> {
        Self::new(w[0], w[1] / w[0], w[2] / w[0], gravity)
    }

    pub fn conserved(&self) -> [f64; 3] {
        [self.h, self.h * self.u, self.h * self.v]
    }

    /// Normalised one-dimensional moments `⟨uⁿ⟩/h` over the chosen half space.
    fn u_table(&self, half: Half) -> [f64; MAX_POWER] {
        let sl = self.lambda.sqrt();
        let e = (-self.lambda * self.u * self.u).exp() / (2.0 * (std::f64::consts::PI * self.lambda).sqrt());
        let (m0, m1) = match half {
            Half::Full => (1.0, self.u),
            Half::Pos => {
                let m0 = 0.5 * libm::erfc(-sl * self.u);
                (m0, self.u * m0 + e)
            }
            Half::Neg => {
                let m0 = 0.5 * libm::erfc(sl * self.u);
                (m0, self.u * m0 - e)
            }
        };
        recursion(m0, m1, self.u, self.lambda)
    }

    fn v_table(&self) -> [f64; MAX_POWER] {
        recursion(1.0, self.v, self.v, self.lambda)
    }

    /// `⟨uᵐ vⁿ⟩` over the chosen half space in u.
    pub fn moment(&self, half: Half, m: usize, n: usize) -> f64 {
        self.h * self.u_table(half)[m] * self.v_table()[n]
    }

    fn tables(&self, half: Half) -> Tables {
        Tables { h: self.h, mu: self.u_table(half), mv: self.v_table() }
    }

    /// Polynomial `a` with `∂g/∂s = a g` for the conserved-variable
    /// derivative `dw = ∂W/∂s`; its moments reproduce `dw` exactly.
    pub fn slope(&self, dw: &[f64; 3]) -> Poly {
        let du = (dw[1] - self.u * dw[0]) / self.h;
        let dv = (dw[2] - self.v * dw[0]) / self.h;
        let l = self.lambda;
        let a = l * dw[0] / self.h;
        let mut p = Poly::zero();
        // a ((u−U)² + (v−V)²)
        p.c[2][0] += a;
        p.c[1][0] += -2.0 * a * self.u;
        p.c[0][2] += a;
        p.c[0][1] += -2.0 * a * self.v;
        p.c[0][0] += a * (self.u * self.u + self.v * self.v);
        // 2λ dU (u−U) + 2λ dV (v−V)
        p.c[1][0] += 2.0 * l * du;
        p.c[0][1] += 2.0 * l * dv;
        p.c[0][0] -= 2.0 * l * (du * self.u + dv * self.v);
        p
    }

    /// Source coupling `−2λ (α₁ Φ_n (u−U) + Φ_t (v−V))`.
    fn force(&self, phi: [f64; 2], alpha1: f64) -> Poly {
        let mut p = Poly::zero();
        let (a, b) = (-2.0 * self.lambda * alpha1 * phi[0], -2.0 * self.lambda * phi[1]);
        p.c[1][0] = a;
        p.c[0][1] = b;
        p.c[0][0] = -a * self.u - b * self.v;
        p
    }

    /// Moments `⟨ψ p⟩` of `p g` over a half space, `ψ = (1, u, v)`.
    pub fn conserved_moments(&self, half: Half, p: &Poly) -> [f64; 3] {
        let t = self.tables(half);
        [t.apply(p, 0, 0), t.apply(p, 1, 0), t.apply(p, 0, 1)]
    }
}

fn recursion(m0: f64, m1: f64, u: f64, lambda: f64) -> [f64; MAX_POWER] {
    let mut m = [0.0; MAX_POWER];
    m[0] = m0;
    m[1] = m1;
    for n in 0..MAX_POWER - 2 {
        m[n + 2] = u * m[n + 1] + (n + 1) as f64 / (2.0 * lambda) * m[n];
    }
    m
}

struct Tables {
    h: f64,
    mu: [f64; MAX_POWER],
    mv: [f64; MAX_POWER],
}

impl Tables {
    /// `⟨u^su v^sv p⟩`.
    fn apply(&self, p: &Poly, su: usize, sv: usize) -> f64 {
        let mut acc = 0.0;
        for i in 0..PD {
            for j in 0..PD - i {
                let c = p.c[i][j];
                if c != 0.0 {
                    acc += c * self.mu[i + su] * self.mv[j + sv];
                }
            }
        }
        self.h * acc
    }
}

/// Polynomial in the particle velocity, `Σ c[i][j] uⁱ vʲ`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Poly {
    pub c: [[f64; PD]; PD],
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        let mut p = Poly::zero();
        p.c[0][0] = 1.0;
        p
    }

    /// `a_n u + a_t v` for polynomial slopes along the normal and tangent.
    pub fn directional(an: &Poly, at: &Poly) -> Self {
        let mut p = Poly::zero();
        for i in 0..PD - 1 {
            for j in 0..PD - 1 - i {
                p.c[i + 1][j] += an.c[i][j];
                p.c[i][j + 1] += at.c[i][j];
            }
        }
        p
    }

    pub fn add(mut self, o: &Poly) -> Self {
        for i in 0..PD {
            for j in 0..PD {
                self.c[i][j] += o.c[i][j];
            }
        }
        self
    }
}

/// Interface collision time `τ = C_num |(h_l² − h_r²)/(h_l² + h_r²)| Δt`.
pub fn collision_time(h_l: f64, h_r: f64, dt: f64) -> f64 {
    jump_time(C_NUM, h_l, h_r, dt)
}

fn jump_time(c: f64, h_l: f64, h_r: f64, dt: f64) -> f64 {
    let (a, b) = (h_l * h_l, h_r * h_r);
    c * ((a - b) / (a + b)).abs() * dt
}

/// Time coefficients `C₁…C₅` of the evolution solution at time `t`.
pub fn time_coefficients(t: f64, tau: f64) -> [f64; 5] {
    let e = if tau > 0.0 { (-t / tau).exp() } else { 0.0 };
    [1.0 - e, (t + tau) * e - tau, t - tau * (1.0 - e), e, -(t + tau) * e]
}

/// Closed-form integrals of `C₁…C₅` over `[0, T]`.
pub fn integrated_coefficients(big_t: f64, tau: f64) -> [f64; 5] {
    if tau <= 0.0 {
        return [big_t, 0.0, 0.5 * big_t * big_t, 0.0, 0.0];
    }
    let e = (-big_t / tau).exp();
    let one_m_e = -(-big_t / tau).exp_m1();
    [
        big_t - tau * one_m_e,
        2.0 * tau * tau * one_m_e - tau * big_t * e - tau * big_t,
        0.5 * big_t * big_t - tau * big_t + tau * tau * one_m_e,
        tau * one_m_e,
        -2.0 * tau * tau * one_m_e + tau * big_t * e,
    ]
}

/// Coefficients of `f = fⁿ + t f_tⁿ` per term, from the integrals over
/// `[0, Δt/2]` and `[0, Δt]`.
pub fn linearized_coefficients(dt: f64, tau: f64) -> ([f64; 5], [f64; 5]) {
    let q1 = integrated_coefficients(dt, tau);
    let qh = integrated_coefficients(0.5 * dt, tau);
    let mut fn_ = [0.0; 5];
    let mut ft = [0.0; 5];
    for i in 0..5 {
        fn_[i] = (4.0 * qh[i] - q1[i]) / dt;
        ft[i] = 4.0 * (q1[i] - 2.0 * qh[i]) / (dt * dt);
    }
    (fn_, ft)
}

/// Reconstructed data on one side of a face, in the face frame.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SideState {
    /// `(h, h u_n, h u_t)`
    pub w: [f64; 3],
    /// Normal derivative of each component.
    pub dn: [f64; 3],
    /// Tangential derivative of each component.
    pub dt: [f64; 3],
    /// Source gradient `∇Φ = −G ∇B` in the face frame.
    pub phi: [f64; 2],
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolutionInputs {
    pub left: SideState,
    pub right: SideState,
    pub tau: f64,
    pub dt: f64,
    pub gravity: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EvolutionOutputs {
    pub flux: [f64; 3],
    pub flux_t: [f64; 3],
    pub w: [f64; 3],
    pub w_t: [f64; 3],
    pub w_left_next: [f64; 3],
    pub w_right_next: [f64; 3],
    /// Equilibrium state and its split derivatives at t^n.
    pub wbar: [f64; 3],
    pub wbar_dn: [f64; 3],
    pub wbar_dt: [f64; 3],
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Equilibrium {
    pub w: [f64; 3],
    pub dn: [f64; 3],
    pub dt: [f64; 3],
}

/// Interface equilibrium and its derivatives from the half-space moments of
/// the two side Maxwellians.
pub fn equilibrium_split(left: &SideState, right: &SideState, gravity: f64) -> Result<Equilibrium> {
    let gl = Maxwellian::from_conserved(&left.w, gravity)?;
    let gr = Maxwellian::from_conserved(&right.w, gravity)?;
    let split = |pl: Poly, pr: Poly| -> [f64; 3] {
        let a = gl.conserved_moments(Half::Pos, &pl);
        let b = gr.conserved_moments(Half::Neg, &pr);
        [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
    };
    let w = split(Poly::one(), Poly::one());
    if !(w[0] > 0.0) {
        return Err(Error::State(format!("non-positive equilibrium depth {}", w[0])));
    }
    let dn = split(gl.slope(&left.dn), gr.slope(&right.dn));
    let dt = split(gl.slope(&left.dt), gr.slope(&right.dt));
    Ok(Equilibrium { w, dn, dt })
}

/// One term of the evolution solution: a Maxwellian over a half space times
/// a polynomial, optionally plus the source coupling with its order-dependent
/// weight.
struct Term<'a> {
    g: &'a Maxwellian,
    half: Half,
    poly: Poly,
    phi: Option<[f64; 2]>,
}

/// u-order of the moment weights: ψ = (1, u, v) gives 0, 1, 0.
const PSI_U: [usize; 3] = [0, 1, 0];
const PSI_V: [usize; 3] = [0, 0, 1];

impl Term<'_> {
    /// Returns `[⟨uψ·⟩, ⟨ψ·⟩]` moments (flux components then state components).
    fn moments(&self) -> [f64; 6] {
        let t = self.g.tables(self.half);
        let mut out = [0.0; 6];
        for k in 0..3 {
            for (slot, extra_u) in [(k, 1), (k + 3, 0)] {
                let su = PSI_U[k] + extra_u;
                let mut p = self.poly;
                if let Some(phi) = self.phi {
                    // m counts the (u − U) factor of the source term
                    let alpha = ALPHA_NORMAL[su];
                    p = p.add(&self.g.force(phi, alpha));
                }
                out[slot] = t.apply(&p, su, PSI_V[k]);
            }
        }
        out
    }
}

/// `W_t = −⟨ψ (a_n u + a_t v + source) g⟩` with the source split across the
/// half spaces and unit weights.
fn compatibility(g: &Maxwellian, an: &Poly, at: &Poly, phi_pos: [f64; 2], phi_neg: [f64; 2]) -> [f64; 3] {
    let dir = Poly::directional(an, at);
    let mut wt = g.conserved_moments(Half::Full, &dir);
    for (half, phi) in [(Half::Pos, phi_pos), (Half::Neg, phi_neg)] {
        let s = g.conserved_moments(half, &g.force(phi, 1.0));
        for i in 0..3 {
            wt[i] += s[i];
        }
    }
    wt.map(|x| -x)
}

/// Second-order evolution of the distribution at a face Gauss point.
pub fn evolve_distribution(inp: &EvolutionInputs) -> Result<EvolutionOutputs> {
    let g = inp.gravity;
    let (l, r) = (&inp.left, &inp.right);
    let gl = Maxwellian::from_conserved(&l.w, g)?;
    let gr = Maxwellian::from_conserved(&r.w, g)?;
    let eq = equilibrium_split(l, r, g)?;
    let gb = Maxwellian::from_conserved(&eq.w, g)?;

    let abar_n = gb.slope(&eq.dn);
    let abar_t = gb.slope(&eq.dt);
    let wbar_t = compatibility(&gb, &abar_n, &abar_t, l.phi, r.phi);
    let abig = gb.slope(&wbar_t);
    let abar = Poly::directional(&abar_n, &abar_t);

    let al = Poly::directional(&gl.slope(&l.dn), &gl.slope(&l.dt));
    let ar = Poly::directional(&gr.slope(&r.dn), &gr.slope(&r.dt));

    let groups: [Vec<Term>; 5] = [
        vec![Term { g: &gb, half: Half::Full, poly: Poly::one(), phi: None }],
        vec![
            Term { g: &gb, half: Half::Pos, poly: abar, phi: Some(l.phi) },
            Term { g: &gb, half: Half::Neg, poly: abar, phi: Some(r.phi) },
        ],
        vec![Term { g: &gb, half: Half::Full, poly: abig, phi: None }],
        vec![
            Term { g: &gl, half: Half::Pos, poly: Poly::one(), phi: None },
            Term { g: &gr, half: Half::Neg, poly: Poly::one(), phi: None },
        ],
        vec![
            Term { g: &gl, half: Half::Pos, poly: al, phi: Some(l.phi) },
            Term { g: &gr, half: Half::Neg, poly: ar, phi: Some(r.phi) },
        ],
    ];

    let (cn, ct) = linearized_coefficients(inp.dt, inp.tau);
    let mut now = [0.0; 6];
    let mut rate = [0.0; 6];
    for (i, group) in groups.iter().enumerate() {
        if cn[i] == 0.0 && ct[i] == 0.0 {
            continue;
        }
        for term in group {
            let m = term.moments();
            for k in 0..6 {
                now[k] += cn[i] * m[k];
                rate[k] += ct[i] * m[k];
            }
        }
    }

    let mut out = EvolutionOutputs {
        flux: [now[0], now[1], now[2]],
        flux_t: [rate[0], rate[1], rate[2]],
        w: [now[3], now[4], now[5]],
        w_t: [rate[3], rate[4], rate[5]],
        wbar: eq.w,
        wbar_dn: eq.dn,
        wbar_dt: eq.dt,
        ..Default::default()
    };

    let tau0 = jump_time(C_SIDE, l.w[0], r.w[0], inp.dt);
    let e0 = if tau0 > 0.0 { (-inp.dt / tau0).exp() } else { 0.0 };
    let side_next = |gs: &Maxwellian, s: &SideState| -> [f64; 3] {
        let wt = compatibility(gs, &gs.slope(&s.dn), &gs.slope(&s.dt), s.phi, s.phi);
        let mut w = [0.0; 3];
        for i in 0..3 {
            let bar = out.w[i] + inp.dt * out.w_t[i];
            w[i] = (1.0 - e0) * bar + e0 * (s.w[i] + inp.dt * wt[i]);
        }
        w
    };
    out.w_left_next = side_next(&gl, l);
    out.w_right_next = side_next(&gr, r);

    let finite = out
        .flux
        .iter()
        .chain(&out.flux_t)
        .chain(&out.w)
        .chain(&out.w_t)
        .chain(&out.w_left_next)
        .chain(&out.w_right_next)
        .all(|x| x.is_finite());
    if !finite {
        return Err(Error::State(format!("non-finite evolution result for inputs {inp:?}")));
    }
    Ok(out)
}

/// Rotation between the global frame and the frame of a face with unit
/// normal `n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FaceFrame {
    pub n: Vec2,
}

impl FaceFrame {
    pub fn new(n: Vec2) -> Self {
        FaceFrame { n }
    }

    pub fn tangent(&self) -> Vec2 {
        Vec2::new(-self.n.y, self.n.x)
    }

    pub fn to_local(&self, v: [f64; 2]) -> [f64; 2] {
        let t = self.tangent();
        [v[0] * self.n.x + v[1] * self.n.y, v[0] * t.x + v[1] * t.y]
    }

    pub fn to_global(&self, v: [f64; 2]) -> [f64; 2] {
        let t = self.tangent();
        [v[0] * self.n.x + v[1] * t.x, v[0] * self.n.y + v[1] * t.y]
    }

    /// Rotates the momentum components of a state vector.
    pub fn state_to_local(&self, w: [f64; 3]) -> [f64; 3] {
        let m = self.to_local([w[1], w[2]]);
        [w[0], m[0], m[1]]
    }

    pub fn state_to_global(&self, w: [f64; 3]) -> [f64; 3] {
        let m = self.to_global([w[1], w[2]]);
        [w[0], m[0], m[1]]
    }

    /// Global x/y derivatives of a state to local normal/tangential
    /// derivatives of the local-frame state.
    pub fn grad_to_local(&self, dx: [f64; 3], dy: [f64; 3]) -> ([f64; 3], [f64; 3]) {
        let (lx, ly) = (self.state_to_local(dx), self.state_to_local(dy));
        let t = self.tangent();
        let mut dn = [0.0; 3];
        let mut dt = [0.0; 3];
        for i in 0..3 {
            dn[i] = lx[i] * self.n.x + ly[i] * self.n.y;
            dt[i] = lx[i] * t.x + ly[i] * t.y;
        }
        (dn, dt)
    }

    pub fn grad_to_global(&self, dn: [f64; 3], dt: [f64; 3]) -> ([f64; 3], [f64; 3]) {
        let (gn, gt) = (self.state_to_global(dn), self.state_to_global(dt));
        let t = self.tangent();
        let mut dx = [0.0; 3];
        let mut dy = [0.0; 3];
        for i in 0..3 {
            dx[i] = gn[i] * self.n.x + gt[i] * t.x;
            dy[i] = gn[i] * self.n.y + gt[i] * t.y;
        }
        (dx, dy)
    }
}
