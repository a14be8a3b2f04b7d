//! Integral identities behind the closed forms, checked by direct quadrature.

use std::f64::consts::PI;

use crate::quad::{integrate, integrate_vec, Tolerance};
use crate::special::{gamma, ln_gamma, unit_sphere_area};

/// A quadrature value next to its closed form.
#[derive(Clone, Copy, Debug)]
pub struct IdentityCheck {
    pub quadrature: f64,
    pub closed_form: f64,
}

impl IdentityCheck {
    pub fn rel_diff(&self) -> f64 {
        ((self.quadrature - self.closed_form) / self.closed_form).abs()
    }
}

const TIGHT: f64 = 1e-13;

/// Radial Gaussian moment `ω_n ∫₀^∞ ρ^{n−1} e^{−p'ρ²/4} dρ = 2^n π^{n/2} / p'^{n/2}`.
pub fn radial_gaussian_moment(n: usize, p_conj: f64) -> IdentityCheck {
    // Beyond this radius the integrand is below e^{-700}.
    let r_max = (2800.0 / p_conj).sqrt();
    let scale = (4.0 / p_conj).sqrt();
    let mut breaks: Vec<f64> = (0..=16).map(|k| k as f64 * scale).filter(|b| *b < r_max).collect();
    breaks.push(r_max);
    let nm1 = n as i32 - 1;
    let q = integrate_vec(
        |r, out: &mut [f64]| out[0] = r.powi(nm1) * (-p_conj * r * r / 4.0).exp(),
        1,
        &breaks,
        Tolerance::relative(TIGHT),
    );
    let quadrature = unit_sphere_area(n) * q.value[0];
    let nf = n as f64;
    IdentityCheck { quadrature, closed_form: 2f64.powf(nf) * PI.powf(nf / 2.0) / p_conj.powf(nf / 2.0) }
}

/// `∫₀^∞ ρ^α e^{−βρ²} dρ = Γ((α+1)/2) / (2 β^{(α+1)/2})`.
pub fn gamma_moment(alpha: f64, beta: f64) -> IdentityCheck {
    let r_max = (700.0 / beta).sqrt();
    let scale = (1.0 / beta).sqrt();
    let mut breaks: Vec<f64> = (0..=16).map(|k| k as f64 * scale).filter(|b| *b < r_max).collect();
    breaks.push(r_max);
    let q = integrate_vec(|r, out: &mut [f64]| out[0] = r.powf(alpha) * (-beta * r * r).exp(), 1, &breaks, Tolerance::relative(TIGHT));
    let h = (alpha + 1.0) / 2.0;
    IdentityCheck { quadrature: q.value[0], closed_form: (ln_gamma(h) - h * beta.ln()).exp() / 2.0 }
}

/// Closed form of `∫_{S^{n−1}} |(e_σ, v)|^{p'} dσ`.
pub fn sphere_angle_closed_form(n: usize, p_conj: f64, v_norm: f64) -> f64 {
    let nf = n as f64;
    v_norm.powf(p_conj) * 2.0 * PI.powf((nf - 1.0) / 2.0) * gamma((p_conj + 1.0) / 2.0) / gamma((nf + p_conj) / 2.0)
}

/// `∫_{S^{n−1}} |(e_σ, v)|^{p'} dσ` by quadrature in the ambient
/// coordinates, for `n ∈ {1, 2, 3}`.
pub fn sphere_angle_integral(p_conj: f64, v: &[f64]) -> IdentityCheck {
    let n = v.len();
    let v_norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let quadrature = match n {
        1 => 2.0 * v[0].abs().powf(p_conj),
        2 => {
            // Zeros of v₁cosθ + v₂sinθ on [0, 2π).
            let th0 = (-v[0]).atan2(v[1]).rem_euclid(PI);
            let breaks = [0.0, th0, th0 + PI, 2.0 * PI];
            let mut b: Vec<f64> = breaks.to_vec();
            b.sort_by(f64::total_cmp);
            b.dedup();
            let q = integrate_vec(
                |th, out: &mut [f64]| out[0] = (v[0] * th.cos() + v[1] * th.sin()).abs().powf(p_conj),
                1,
                &b,
                Tolerance::relative(TIGHT),
            );
            q.value[0]
        }
        3 => {
            let inner = |phi: f64| -> f64 {
                let w = v[0] * phi.cos() + v[1] * phi.sin();
                // Zero of v₃cosθ + w sinθ in (0, π).
                let th0 = (-v[2]).atan2(w).rem_euclid(PI);
                let mut b = vec![0.0];
                if th0 > 0.0 && th0 < PI {
                    b.push(th0);
                }
                b.push(PI);
                integrate_vec(
                    |th, out: &mut [f64]| out[0] = (v[2] * th.cos() + w * th.sin()).abs().powf(p_conj) * th.sin(),
                    1,
                    &b,
                    Tolerance::relative(TIGHT),
                )
                .value[0]
            };
            integrate(inner, 0.0, 2.0 * PI, Tolerance::relative(1e-12)).value
        }
        _ => panic!("sphere_angle_integral supports n ≤ 3"),
    };
    IdentityCheck { quadrature, closed_form: sphere_angle_closed_form(n, p_conj, v_norm) }
}
