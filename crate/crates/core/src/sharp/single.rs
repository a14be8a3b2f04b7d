//! Sup-norm constants for a single equation with `A(t) = a(t)·I` and scalar
//! `c(t)`, evaluated by nested scalar quadrature only.

use std::f64::consts::PI;

use crate::quad::{integrate, Tolerance};

const INNER: f64 = 1e-14;
const OUTER: f64 = 1e-13;

fn window_integral(f: &impl Fn(f64) -> f64, tau: f64, t: f64) -> f64 {
    if t <= tau {
        return 0.0;
    }
    integrate(f, tau, t, Tolerance::relative(INNER).with_abs(1e-300)).value
}

/// `exp ∫₀ᵗ c`.
pub fn h_inf(c: impl Fn(f64) -> f64, t: f64) -> f64 {
    window_integral(&c, 0.0, t).exp()
}

/// `exp(∫₀ᵗ c) / (√π (∫₀ᵗ a)^{1/2})`.
pub fn k_inf(a: impl Fn(f64) -> f64, c: impl Fn(f64) -> f64, t: f64) -> f64 {
    window_integral(&c, 0.0, t).exp() / (PI.sqrt() * window_integral(&a, 0.0, t).sqrt())
}

/// `∫₀ᵗ exp(∫_τ^t c) dτ`.
pub fn n_inf(c: impl Fn(f64) -> f64, t: f64) -> f64 {
    integrate(|tau| window_integral(&c, tau, t).exp(), 0.0, t, Tolerance::relative(OUTER)).value
}

/// `π^{-1/2} ∫₀ᵗ exp(∫_τ^t c) / (∫_τ^t a)^{1/2} dτ`, with `τ = t − σ²`.
pub fn c_inf(a: impl Fn(f64) -> f64, c: impl Fn(f64) -> f64, t: f64) -> f64 {
    let integrand = |sigma: f64| {
        let tau = t - sigma * sigma;
        let ia = window_integral(&a, tau, t);
        if ia <= 0.0 {
            // σ → 0: ∫a ≈ σ² a(t).
            return 2.0 / a(t).sqrt();
        }
        2.0 * sigma * window_integral(&c, tau, t).exp() / ia.sqrt()
    };
    integrate(integrand, 0.0, t.sqrt(), Tolerance::relative(OUTER)).value / PI.sqrt()
}
