//! Integrals over the source time `τ ∈ (0, t)` that appear in the
//! nonhomogeneous constants. With `δ = t − τ = t·s^q`, the power singularity
//! `δ^{-γ}` at `τ = t` becomes the bounded factor `s^{q(1−γ)−1}`.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::coeffs::{integrate_window, linearized_integrals, AccumulatedIntegrals, CoefficientSet};
use crate::error::Result;
use crate::matfun::{Matrix, SymMatrix};
use crate::quad::{gl7_nodes, integrate, integrate_vec, pairwise_sum, Tolerance};

/// Windows shorter than this fraction of `T` use `I_F ≈ δ·F(t)`.
pub const LINEARIZE_BELOW: f64 = 1e-8;

/// Substitution power for a `δ^{-γ}` singularity.
pub fn substitution_power(gamma: f64) -> u32 {
    if gamma <= 0.0 {
        return 2;
    }
    let q = (1.0 / (1.0 - gamma) - 1e-9).ceil();
    q.clamp(2.0, 1000.0) as u32
}

/// Kernel ingredients over one window `[t − δ, t]`.
#[derive(Clone, Debug)]
pub struct WindowData {
    pub delta: f64,
    pub log_det_sqrt: f64,
    pub exp_ic_star: Matrix,
    pub ia_inverse: SymMatrix,
}

impl WindowData {
    fn from_integrals(delta: f64, w: &AccumulatedIntegrals) -> Self {
        Self { delta, log_det_sqrt: w.log_det_ia_sqrt(), exp_ic_star: w.exp_ic_star.clone(), ia_inverse: w.ia_inverse().clone() }
    }

    /// `|e^{I_{C*}} z|`.
    pub fn exp_norm(&self, z: &[f64]) -> f64 {
        self.exp_ic_star.matvec(z).iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// `|I_A^{-1/2} ℓ| = (ℓᵀ I_A^{-1} ℓ)^{1/2}`.
    pub fn inv_sqrt_norm(&self, ell: &[f64]) -> f64 {
        let v = self.ia_inverse.matvec(ell);
        v.iter().zip(ell).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt()
    }
}

pub fn window(cs: &CoefficientSet, t: f64, delta: f64, tol: f64) -> Result<WindowData> {
    let w = if delta < LINEARIZE_BELOW * cs.horizon() {
        linearized_integrals(cs, t, delta)?
    } else {
        integrate_window(cs, t, delta, tol)?
    };
    Ok(WindowData::from_integrals(delta, &w))
}

/// Which weight multiplies `|e^{I_{C*}} z|^{p'}` in the integrand.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Weight {
    /// `det^{-(p'-1)}`.
    Kernel,
    /// `|I_A^{-1/2} ℓ|^{p'} det^{-(p'-1)}`.
    Gradient,
}

/// Frozen quadrature rule in `s` together with the window data at each node.
#[derive(Clone, Debug)]
pub struct TauRule {
    pub t: f64,
    pub q: u32,
    pub p_conj: f64,
    pub weight: Weight,
    /// `(s, w_s · dδ/ds)` per node.
    pub nodes: Vec<(f64, f64)>,
    pub data: Vec<WindowData>,
    /// Error estimate of the run that produced the rule.
    pub error: f64,
}

/// Integrand in `s` for given directions, without the quadrature weight.
fn integrand(d: &WindowData, jac: f64, p_conj: f64, weight: Weight, ell: Option<&[f64]>, z: &[f64]) -> f64 {
    let mut log = jac.ln() - (p_conj - 1.0) * d.log_det_sqrt + p_conj * d.exp_norm(z).ln();
    if weight == Weight::Gradient {
        log += p_conj * d.inv_sqrt_norm(ell.expect("gradient weight needs ℓ")).ln();
    }
    log.exp()
}

fn jacobian(t: f64, q: u32, s: f64) -> (f64, f64) {
    let delta = t * s.powi(q as i32);
    (delta, t * q as f64 * s.powi(q as i32 - 1))
}

fn probe_directions(dim: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = (0..dim).map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    if dim > 1 {
        let c = 1.0 / (dim as f64).sqrt();
        out.push(vec![c; dim]);
    }
    out
}

impl TauRule {
    /// Build the rule by an adaptive run over probe directions, caching the
    /// window data at every visited node. `extra` adds specific `(ℓ, z)`
    /// directions to the probe set.
    pub fn build(
        cs: &CoefficientSet,
        t: f64,
        p_conj: f64,
        gamma: f64,
        weight: Weight,
        tol: f64,
        extra: &[(Option<Vec<f64>>, Vec<f64>)],
    ) -> Result<Self> {
        let q = substitution_power(gamma);
        let zs = probe_directions(cs.m());
        let ells: Vec<Option<Vec<f64>>> =
            if weight == Weight::Gradient { probe_directions(cs.n()).into_iter().map(Some).collect() } else { vec![None] };
        let mut dirs: Vec<(Option<Vec<f64>>, Vec<f64>)> =
            ells.iter().flat_map(|l| zs.iter().map(move |z| (l.clone(), z.clone()))).collect();
        dirs.extend(extra.iter().cloned());

        let mut cache: HashMap<u64, WindowData> = HashMap::new();
        let mut failure = None;
        let quad = integrate_vec(
            |s, out: &mut [f64]| {
                let (delta, jac) = jacobian(t, q, s);
                let key = s.to_bits();
                if let std::collections::hash_map::Entry::Vacant(e) = cache.entry(key) {
                    match window(cs, t, delta, tol) {
                        Ok(d) => {
                            e.insert(d);
                        }
                        Err(e) => {
                            failure.get_or_insert(e);
                            out.fill(0.0);
                            return;
                        }
                    }
                }
                let d = &cache[&key];
                for (o, (l, z)) in out.iter_mut().zip(&dirs) {
                    *o = integrand(d, jac, p_conj, weight, l.as_deref(), z);
                }
            },
            dirs.len(),
            &[0.0, 1.0],
            Tolerance::relative(tol),
        );
        if let Some(e) = failure {
            return Err(e);
        }
        let error = quad.error.iter().zip(&quad.value).map(|(e, v)| e / v.abs().max(f64::MIN_POSITIVE)).fold(0.0, f64::max);

        let mut nodes = Vec::new();
        for &(a, b) in &quad.panels {
            let m = 0.5 * (a + b);
            gl7_nodes(a, m, |s, w| nodes.push((s, w)));
            gl7_nodes(m, b, |s, w| nodes.push((s, w)));
        }
        let data: Vec<WindowData> = nodes
            .par_iter()
            .map(|&(s, _)| match cache.get(&s.to_bits()) {
                Some(d) => Ok(d.clone()),
                None => window(cs, t, jacobian(t, q, s).0, tol),
            })
            .collect::<Result<_>>()?;
        let nodes = nodes.into_iter().map(|(s, w)| (s, w * jacobian(t, q, s).1)).collect();
        Ok(Self { t, q, p_conj, weight, nodes, data, error })
    }

    /// `∫₀ᵗ weight · |e^{I_{C*}} z|^{p'} dτ` by the frozen rule.
    pub fn objective(&self, ell: Option<&[f64]>, z: &[f64]) -> f64 {
        let terms: Vec<f64> =
            self.nodes.iter().zip(&self.data).map(|(&(_, w), d)| integrand(d, w, self.p_conj, self.weight, ell, z)).collect();
        pairwise_sum(&terms)
    }

    /// `∫ weight · e^{I_C} e^{I_{C*}} dτ` for `p' = 2`, so that
    /// `objective(z) = zᵀ M z`.
    pub fn gram(&self, ell: Option<&[f64]>) -> Matrix {
        let m = self.data[0].exp_ic_star.rows();
        let mut entries: Vec<Vec<f64>> = vec![Vec::with_capacity(self.nodes.len()); m * m];
        for (&(_, w), d) in self.nodes.iter().zip(&self.data) {
            let mut c = (w.ln() - d.log_det_sqrt).exp();
            if self.weight == Weight::Gradient {
                let l = d.inv_sqrt_norm(ell.expect("gradient weight needs ℓ"));
                c *= l * l;
            }
            let e = &d.exp_ic_star;
            for i in 0..m {
                for j in 0..m {
                    let dot: f64 = (0..m).map(|k| e[(k, i)] * e[(k, j)]).sum();
                    entries[i * m + j].push(c * dot);
                }
            }
        }
        let data = entries.iter().map(|v| pairwise_sum(v)).collect();
        Matrix::from_vec(m, m, data).expect("square")
    }

    /// `∫ |e^{I_{C*}} z|² det^{-1} I_A^{-1} dτ` for `p' = 2`, so that
    /// `objective(ℓ, z) = ℓᵀ M ℓ`.
    pub fn ell_gram(&self, z: &[f64]) -> Matrix {
        let n = self.data[0].ia_inverse.order();
        let mut entries: Vec<Vec<f64>> = vec![Vec::with_capacity(self.nodes.len()); n * n];
        for (&(_, w), d) in self.nodes.iter().zip(&self.data) {
            let ez = d.exp_norm(z);
            let c = (w.ln() - d.log_det_sqrt).exp() * ez * ez;
            for i in 0..n {
                for j in 0..n {
                    entries[i * n + j].push(c * d.ia_inverse[(i, j)]);
                }
            }
        }
        let data = entries.iter().map(|v| pairwise_sum(v)).collect();
        Matrix::from_vec(n, n, data).expect("square")
    }
}

/// Independent adaptive evaluation of the objective at given directions,
/// returning `(value, error estimate)`.
pub fn adaptive_objective(
    cs: &CoefficientSet,
    t: f64,
    p_conj: f64,
    gamma: f64,
    weight: Weight,
    ell: Option<&[f64]>,
    z: &[f64],
    tol: f64,
) -> Result<(f64, f64)> {
    let q = substitution_power(gamma);
    let mut failure = None;
    let r = integrate(
        |s| {
            let (delta, jac) = jacobian(t, q, s);
            match window(cs, t, delta, tol) {
                Ok(d) => integrand(&d, jac, p_conj, weight, ell, z),
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        },
        0.0,
        1.0,
        Tolerance::relative(tol),
    );
    match failure {
        Some(e) => Err(e),
        None => Ok((r.value, r.error)),
    }
}
