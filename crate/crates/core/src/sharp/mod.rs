//! Sharp coefficients `H_p`, `K_{p,ℓ}`, `K_p` (initial data) and
//! `N_p`, `C_{p,ℓ}`, `C_p` (source term) of the pointwise estimates.

pub mod identities;
pub mod single;
pub mod sphere;
pub mod tau;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::coeffs::{integrate_coefficients, window_scaling_exponents, CoefficientSet, ScalingExponents, DEFAULT_QUAD_TOL};
use crate::error::{dimension, domain, Error, Result};
use crate::matfun::{canonical_sign, spectral_norm, sym_eigen, SymMatrix};
use crate::special::ln_gamma;

pub use sphere::{sphere_max, SphereMax, SphereSettings};
use tau::{adaptive_objective, TauRule, Weight};

/// Lebesgue exponent `p ∈ [1, ∞]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Exponent(f64);

impl Exponent {
    pub const ONE: Exponent = Exponent(1.0);
    pub const INFINITY: Exponent = Exponent(f64::INFINITY);

    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(domain(format!("exponent must lie in [1, inf], got {p}")));
        }
        Ok(Self(p))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    pub fn is_one(self) -> bool {
        self.0 == 1.0
    }

    /// `1/p`, zero at infinity.
    pub fn recip(self) -> f64 {
        if self.is_infinite() {
            0.0
        } else {
            1.0 / self.0
        }
    }

    pub fn conjugate(self) -> Exponent {
        Exponent(holder_conjugate(self.0).expect("validated on construction"))
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if matches!(s.to_ascii_lowercase().as_str(), "inf" | "infinity" | "+inf") || s == "∞" {
            return Ok(Self::INFINITY);
        }
        let p: f64 = s.parse().map_err(|_| domain(format!("cannot parse exponent {s:?}")))?;
        if p.is_infinite() {
            return Err(domain("write infinity as \"inf\""));
        }
        Self::new(p)
    }
}

/// `p'` with `1/p + 1/p' = 1`.
pub fn holder_conjugate(p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(domain(format!("exponent must lie in [1, inf], got {p}")));
    }
    Ok(if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SharpKind {
    H,
    KEll,
    K,
    N,
    CEll,
    C,
}

impl SharpKind {
    pub const ALL: [SharpKind; 6] = [Self::H, Self::KEll, Self::K, Self::N, Self::CEll, Self::C];

    pub fn name(self) -> &'static str {
        match self {
            Self::H => "H",
            Self::KEll => "K_ell",
            Self::K => "K",
            Self::N => "N",
            Self::CEll => "C_ell",
            Self::C => "C",
        }
    }

    pub fn needs_ell(self) -> bool {
        matches!(self, Self::KEll | Self::CEll)
    }

    pub fn is_nonhomogeneous(self) -> bool {
        matches!(self, Self::N | Self::CEll | Self::C)
    }
}

impl fmt::Display for SharpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SharpKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "H" | "h" => Ok(Self::H),
            "K_ell" | "Kell" | "k_ell" => Ok(Self::KEll),
            "K" | "k" => Ok(Self::K),
            "N" | "n" => Ok(Self::N),
            "C_ell" | "Cell" | "c_ell" => Ok(Self::CEll),
            "C" | "c" => Ok(Self::C),
            other => Err(domain(format!("unknown sharp coefficient kind {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SharpSettings {
    pub quad_tol: f64,
    pub sphere: SphereSettings,
}

impl Default for SharpSettings {
    fn default() -> Self {
        Self { quad_tol: DEFAULT_QUAD_TOL, sphere: SphereSettings::default() }
    }
}

#[derive(Clone, Debug)]
pub struct SharpRequest {
    pub kind: SharpKind,
    pub p: Exponent,
    pub t: f64,
    pub ell: Option<Vec<f64>>,
    pub settings: SharpSettings,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Diagnostics {
    /// Relative error estimate of the reported value from quadrature.
    pub quad_error: f64,
    /// Relative projected-gradient norm at the reported maximizer.
    pub search_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SharpResult {
    pub value: f64,
    pub maximizer_z: Option<Vec<f64>>,
    pub maximizer_ell: Option<Vec<f64>>,
    pub convergent: bool,
    /// The convergence decision came from estimated scaling exponents.
    pub convergence_estimated: bool,
    pub diagnostics: Diagnostics,
}

impl SharpResult {
    fn divergent(estimated: bool) -> Self {
        Self {
            value: f64::INFINITY,
            maximizer_z: None,
            maximizer_ell: None,
            convergent: false,
            convergence_estimated: estimated,
            diagnostics: Diagnostics::default(),
        }
    }
}

/// Outcome of a convergence test for the τ-integral.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Convergence {
    pub convergent: bool,
    pub estimated: bool,
    /// Exponent `γ` of the `(t − τ)^{-γ}` endpoint behaviour.
    pub singularity: f64,
}

pub fn compute(cs: &CoefficientSet, req: &SharpRequest) -> Result<SharpResult> {
    let ell = || req.ell.as_deref().ok_or_else(|| domain(format!("{} requires a direction ell", req.kind)));
    match req.kind {
        SharpKind::H => sharp_h(cs, req.p, req.t, &req.settings),
        SharpKind::KEll => sharp_k_ell(cs, req.p, req.t, ell()?, &req.settings),
        SharpKind::K => sharp_k(cs, req.p, req.t, &req.settings),
        SharpKind::N => sharp_n(cs, req.p, req.t, &req.settings),
        SharpKind::CEll => sharp_c_ell(cs, req.p, req.t, ell()?, &req.settings),
        SharpKind::C => sharp_c(cs, req.p, req.t, &req.settings),
    }
}

fn check_time(cs: &CoefficientSet, t: f64) -> Result<()> {
    if !(t > 0.0 && t <= cs.horizon() * (1.0 + 1e-12)) {
        return Err(domain(format!("t must lie in (0, T] = (0, {}], got {t}", cs.horizon())));
    }
    Ok(())
}

fn check_ell(cs: &CoefficientSet, ell: &[f64]) -> Result<()> {
    if ell.len() != cs.n() {
        return Err(dimension(format!("ell has {} entries, expected {}", ell.len(), cs.n())));
    }
    let norm = ell.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(domain(format!("ell must be a unit vector, |ell| = {norm}")));
    }
    Ok(())
}

/// `ln` of the factor `{2^n π^{(n+p−1)/2} D}^{−1/p} {Γ((p'+1)/2)/p'^{(n+p')/2}}^{1/p'}`
/// with `ln D = log_det`.
fn ln_gradient_prefactor(n: usize, p: Exponent, log_det: f64) -> f64 {
    let nf = n as f64;
    if p.is_infinite() {
        -0.5 * PI.ln()
    } else if p.is_one() {
        -(nf * 2f64.ln() + 0.5 * nf * PI.ln() + log_det) - 0.5 * (2f64.ln() + 1.0)
    } else {
        let pv = p.value();
        let pc = p.conjugate().value();
        -(nf * 2f64.ln() + 0.5 * (nf + pv - 1.0) * PI.ln() + log_det) / pv
            + (ln_gamma((pc + 1.0) / 2.0) - 0.5 * (nf + pc) * pc.ln()) / pc
    }
}

/// `ln` of `(2√π)^{−n/p} p'^{−n/(2p')}`.
fn ln_kernel_prefactor(n: usize, p: Exponent) -> f64 {
    let nf = n as f64;
    if p.is_infinite() {
        0.0
    } else if p.is_one() {
        -nf * (2.0 * PI.sqrt()).ln()
    } else {
        let pc = p.conjugate().value();
        -nf * p.recip() * (2.0 * PI.sqrt()).ln() - nf / (2.0 * pc) * pc.ln()
    }
}

/// `H_p(t)`.
pub fn sharp_h(cs: &CoefficientSet, p: Exponent, t: f64, settings: &SharpSettings) -> Result<SharpResult> {
    check_time(cs, t)?;
    let w = integrate_coefficients(cs, 0.0, t, settings.quad_tol)?;
    let (enorm, z) = spectral_norm(&w.exp_ic_star)?;
    let log = enorm.ln() + ln_kernel_prefactor(cs.n(), p) - p.recip() * w.log_det_ia_sqrt();
    Ok(SharpResult {
        value: log.exp(),
        maximizer_z: Some(z),
        maximizer_ell: None,
        convergent: true,
        convergence_estimated: false,
        diagnostics: Diagnostics { quad_error: settings.quad_tol, search_residual: 0.0 },
    })
}

/// `K_{p,ℓ}(t)`.
pub fn sharp_k_ell(cs: &CoefficientSet, p: Exponent, t: f64, ell: &[f64], settings: &SharpSettings) -> Result<SharpResult> {
    check_time(cs, t)?;
    check_ell(cs, ell)?;
    let w = integrate_coefficients(cs, 0.0, t, settings.quad_tol)?;
    let (enorm, z) = spectral_norm(&w.exp_ic_star)?;
    let lnorm = w.ia_inv_sqrt().matvec(ell).iter().map(|x| x * x).sum::<f64>().sqrt();
    let log = lnorm.ln() + enorm.ln() + ln_gradient_prefactor(cs.n(), p, w.log_det_ia_sqrt());
    Ok(SharpResult {
        value: log.exp(),
        maximizer_z: Some(z),
        maximizer_ell: Some(ell.to_vec()),
        convergent: true,
        convergence_estimated: false,
        diagnostics: Diagnostics { quad_error: settings.quad_tol, search_residual: 0.0 },
    })
}

/// `K_p(t) = max_ℓ K_{p,ℓ}(t)`, attained at the eigenvector of the smallest
/// eigenvalue of `I_A(t)`.
pub fn sharp_k(cs: &CoefficientSet, p: Exponent, t: f64, settings: &SharpSettings) -> Result<SharpResult> {
    check_time(cs, t)?;
    let w = integrate_coefficients(cs, 0.0, t, settings.quad_tol)?;
    let n = cs.n();
    let mut ell = w.ia_factors.eigen.column(n - 1);
    canonical_sign(&mut ell);
    sharp_k_ell(cs, p, t, &unit(ell), settings)
}

fn unit(mut v: Vec<f64>) -> Vec<f64> {
    sphere::normalize(&mut v);
    v
}

fn exponents(cs: &CoefficientSet, t: f64) -> Result<ScalingExponents> {
    window_scaling_exponents(cs, t)
}

/// Convergence of the `N_p` integral at time `T`.
pub fn converges_n(cs: &CoefficientSet, p: Exponent) -> Result<Convergence> {
    converges_n_at(cs, p, cs.horizon())
}

/// Convergence of the `C_{p,ℓ}` integral at time `T`.
pub fn converges_c(cs: &CoefficientSet, p: Exponent) -> Result<Convergence> {
    converges_c_at(cs, p, cs.horizon())
}

pub fn converges_n_at(cs: &CoefficientSet, p: Exponent, t: f64) -> Result<Convergence> {
    classify(cs, p, t, false)
}

pub fn converges_c_at(cs: &CoefficientSet, p: Exponent, t: f64) -> Result<Convergence> {
    classify(cs, p, t, true)
}

fn classify(cs: &CoefficientSet, p: Exponent, t: f64, gradient: bool) -> Result<Convergence> {
    check_time(cs, t)?;
    let e = exponents(cs, t)?;
    if p.is_one() {
        return Ok(Convergence { convergent: false, estimated: e.estimated, singularity: f64::INFINITY });
    }
    let pc = p.conjugate().value();
    let singularity = e.kernel * (pc - 1.0) + if gradient { e.gradient * pc } else { 0.0 };
    let convergent = if e.estimated {
        singularity < 1.0
    } else if p.is_infinite() {
        true
    } else {
        // Exact thresholds p > (n+2)/2 and p > n+2.
        let n = cs.n() as f64;
        if gradient {
            p.value() > n + 2.0
        } else {
            2.0 * p.value() > n + 2.0
        }
    };
    Ok(Convergence { convergent, estimated: e.estimated, singularity })
}

/// Top eigenpair of a symmetric matrix.
fn top_eigen(m: &crate::matfun::Matrix) -> Result<(f64, Vec<f64>)> {
    let e = sym_eigen(&SymMatrix::new(m.clone())?)?;
    let mut v = e.column(0);
    canonical_sign(&mut v);
    Ok((e.values[0], v))
}

struct TauMax {
    integral: f64,
    z: Vec<f64>,
    ell: Option<Vec<f64>>,
    residual: f64,
    rel_error: f64,
}

/// Maximize the τ-integral over `z` (and `ℓ` when `ell` is `None` and the
/// weight is the gradient weight), then confirm at the maximizer with an
/// independent adaptive run, rebuilding the rule if the two disagree.
fn maximize_tau(
    cs: &CoefficientSet,
    t: f64,
    pc: f64,
    gamma: f64,
    weight: Weight,
    fixed_ell: Option<&[f64]>,
    settings: &SharpSettings,
) -> Result<TauMax> {
    let tol = settings.quad_tol;
    let mut extra: Vec<(Option<Vec<f64>>, Vec<f64>)> = Vec::new();
    let mut last = None;
    for _round in 0..3 {
        let rule = TauRule::build(cs, t, pc, gamma, weight, tol, &extra)?;
        let found = search(cs, &rule, pc, weight, fixed_ell, settings)?;
        let ell = found.ell.clone();
        let (check, err) = adaptive_objective(cs, t, pc, gamma, weight, ell.as_deref(), &found.z, tol)?;
        let disagreement = ((check - found.integral) / check).abs();
        let rel_error = disagreement.max(err / check).max(rule.error);
        let done = disagreement <= 10.0 * tol;
        extra.push((ell, found.z.clone()));
        last = Some(TauMax { rel_error, ..found });
        if done {
            break;
        }
    }
    Ok(last.expect("at least one round"))
}

fn search(cs: &CoefficientSet, rule: &TauRule, pc: f64, weight: Weight, fixed_ell: Option<&[f64]>, settings: &SharpSettings) -> Result<TauMax> {
    let (n, m) = (cs.n(), cs.m());
    let joint = weight == Weight::Gradient && fixed_ell.is_none();
    if !joint {
        let ell = fixed_ell.map(<[f64]>::to_vec);
        if m == 1 {
            let z = vec![-1.0];
            return Ok(TauMax { integral: rule.objective(ell.as_deref(), &z), z, ell, residual: 0.0, rel_error: 0.0 });
        }
        if pc == 2.0 {
            let (value, z) = top_eigen(&rule.gram(ell.as_deref()))?;
            return Ok(TauMax { integral: value, z, ell, residual: 0.0, rel_error: 0.0 });
        }
        let r = sphere_max(|z| rule.objective(ell.as_deref(), z), m, &settings.sphere);
        return Ok(TauMax { integral: r.value, z: r.point, ell, residual: r.residual, rel_error: 0.0 });
    }

    if n == 1 {
        return search(cs, rule, pc, weight, Some(&[-1.0]), settings);
    }
    if pc == 2.0 {
        // Alternate exact eigen-solves in z and ℓ; each step cannot decrease
        // the bilinear objective.
        let starts = sphere::seeds(n, 8 * n, settings.sphere.rng_seed);
        let mut best: Option<TauMax> = None;
        for start in starts {
            let mut ell = start;
            let mut value = 0.0;
            let mut z = vec![1.0; m];
            for _ in 0..200 {
                let (_, zn) = top_eigen(&rule.gram(Some(&ell)))?;
                let (v, ln) = top_eigen(&rule.ell_gram(&zn))?;
                z = zn;
                ell = ln;
                let done = (v - value).abs() <= 1e-15 * v.abs();
                value = v;
                if done {
                    break;
                }
            }
            if best.as_ref().is_none_or(|b| value > b.integral) {
                best = Some(TauMax { integral: value, z, ell: Some(ell), residual: 0.0, rel_error: 0.0 });
            }
        }
        return Ok(best.expect("seeds"));
    }
    let r = sphere::product_sphere_max(|l, z| rule.objective(Some(l), z), n, m, &settings.sphere);
    Ok(TauMax { integral: r.value, z: r.b, ell: Some(r.a), residual: r.residual, rel_error: 0.0 })
}

/// `N_p(t)`.
pub fn sharp_n(cs: &CoefficientSet, p: Exponent, t: f64, settings: &SharpSettings) -> Result<SharpResult> {
    let conv = converges_n_at(cs, p, t)?;
    if !conv.convergent {
        return Ok(SharpResult::divergent(conv.estimated));
    }
    let pc = p.conjugate().value();
    let found = maximize_tau(cs, t, pc, conv.singularity, Weight::Kernel, None, settings)?;
    let log = ln_kernel_prefactor(cs.n(), p) + found.integral.ln() / pc;
    Ok(SharpResult {
        value: log.exp(),
        maximizer_z: Some(found.z),
        maximizer_ell: None,
        convergent: true,
        convergence_estimated: conv.estimated,
        diagnostics: Diagnostics { quad_error: found.rel_error / pc, search_residual: found.residual },
    })
}

fn sharp_c_impl(cs: &CoefficientSet, p: Exponent, t: f64, ell: Option<&[f64]>, settings: &SharpSettings) -> Result<SharpResult> {
    let conv = converges_c_at(cs, p, t)?;
    if !conv.convergent {
        return Ok(SharpResult::divergent(conv.estimated));
    }
    let pc = p.conjugate().value();
    let found = maximize_tau(cs, t, pc, conv.singularity, Weight::Gradient, ell, settings)?;
    let log = ln_gradient_prefactor(cs.n(), p, 0.0) + found.integral.ln() / pc;
    Ok(SharpResult {
        value: log.exp(),
        maximizer_z: Some(found.z),
        maximizer_ell: found.ell,
        convergent: true,
        convergence_estimated: conv.estimated,
        diagnostics: Diagnostics { quad_error: found.rel_error / pc, search_residual: found.residual },
    })
}

/// `C_{p,ℓ}(t)`.
pub fn sharp_c_ell(cs: &CoefficientSet, p: Exponent, t: f64, ell: &[f64], settings: &SharpSettings) -> Result<SharpResult> {
    check_time(cs, t)?;
    check_ell(cs, ell)?;
    sharp_c_impl(cs, p, t, Some(ell), settings)
}

/// `C_p(t) = max_ℓ C_{p,ℓ}(t)`, maximized jointly over `(ℓ, z)`.
pub fn sharp_c(cs: &CoefficientSet, p: Exponent, t: f64, settings: &SharpSettings) -> Result<SharpResult> {
    check_time(cs, t)?;
    sharp_c_impl(cs, p, t, None, settings)
}
