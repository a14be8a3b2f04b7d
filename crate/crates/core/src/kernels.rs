//! Fundamental matrices
//! `G(x, t) = P(x, t, 0)` and
//! `P(x, t, τ) = e^{I_C} / ((2√π)^n det I_A^{1/2}) · exp(−|I_A^{−1/2}(x + I_b)|² / 4)`
//! with all integrals taken over `[τ, t]`, and their spatial gradients.

use std::f64::consts::PI;

use crate::coeffs::{integrate_coefficients, AccumulatedIntegrals, CoefficientSet};
use crate::error::{dimension, Result};
use crate::matfun::Matrix;

/// Below this log-magnitude the Gaussian factor is reported as exactly zero.
pub const LOG_UNDERFLOW: f64 = -745.0;

/// Value of `G` or `P` at one space-time point.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelValue {
    pub matrix: Matrix,
    /// The scalar Gaussian factor multiplying `e^{I_C}`.
    pub scalar_part: f64,
    /// `x + I_b`.
    pub drift_shifted_point: Vec<f64>,
}

/// Evaluates the kernel for one fixed window at many spatial points.
#[derive(Clone, Debug)]
pub struct KernelEvaluator {
    integrals: AccumulatedIntegrals,
    log_norm: f64,
}

impl KernelEvaluator {
    pub fn new(integrals: AccumulatedIntegrals) -> Self {
        let n = integrals.n() as f64;
        let log_norm = -n * (2.0 * PI.sqrt()).ln() - integrals.log_det_ia_sqrt();
        Self { integrals, log_norm }
    }

    pub fn for_window(cs: &CoefficientSet, tau: f64, t: f64, tol: f64) -> Result<Self> {
        Ok(Self::new(integrate_coefficients(cs, tau, t, tol)?))
    }

    pub fn integrals(&self) -> &AccumulatedIntegrals {
        &self.integrals
    }

    pub fn n(&self) -> usize {
        self.integrals.n()
    }

    pub fn m(&self) -> usize {
        self.integrals.m()
    }

    fn shifted(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.integrals.ib).map(|(a, b)| a + b).collect()
    }

    /// `|I_A^{-1/2} w|² = wᵀ I_A^{-1} w`.
    fn quadratic(&self, w: &[f64]) -> f64 {
        let v = self.integrals.ia_inverse().matvec(w);
        v.iter().zip(w).map(|(a, b)| a * b).sum()
    }

    /// Scalar Gaussian factor at `x`.
    pub fn scalar(&self, x: &[f64]) -> f64 {
        let w = self.shifted(x);
        self.scalar_shifted(&w)
    }

    fn scalar_shifted(&self, w: &[f64]) -> f64 {
        let log = self.log_norm - 0.25 * self.quadratic(w);
        if log < LOG_UNDERFLOW {
            0.0
        } else {
            log.exp()
        }
    }

    pub fn value(&self, x: &[f64]) -> Result<KernelValue> {
        self.check(x)?;
        let w = self.shifted(x);
        let s = self.scalar_shifted(&w);
        Ok(KernelValue { matrix: self.integrals.exp_ic.scaled(s), scalar_part: s, drift_shifted_point: w })
    }

    /// Scalar gradient factors: `∂_j G = g_j · e^{I_C}` with
    /// `g = −½ I_A^{-1}(x + I_b) · scalar`.
    pub fn scalar_gradient(&self, x: &[f64]) -> Vec<f64> {
        let w = self.shifted(x);
        let s = self.scalar_shifted(&w);
        self.integrals.ia_inverse().matvec(&w).into_iter().map(|v| -0.5 * v * s).collect()
    }

    /// `n` kernel values, one per partial derivative.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<KernelValue>> {
        self.check(x)?;
        let w = self.shifted(x);
        Ok(self
            .scalar_gradient(x)
            .into_iter()
            .map(|g| KernelValue { matrix: self.integrals.exp_ic.scaled(g), scalar_part: g, drift_shifted_point: w.clone() })
            .collect())
    }

    /// Scalar factor of `(ℓ, ∇_x)` applied to the kernel.
    pub fn scalar_directional(&self, x: &[f64], ell: &[f64]) -> f64 {
        self.scalar_gradient(x).iter().zip(ell).map(|(g, l)| g * l).sum()
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n() {
            return Err(dimension(format!("point has {} coordinates, expected {}", x.len(), self.n())));
        }
        Ok(())
    }
}

pub fn eval_g(cs: &CoefficientSet, x: &[f64], t: f64, tol: f64) -> Result<KernelValue> {
    KernelEvaluator::for_window(cs, 0.0, t, tol)?.value(x)
}

pub fn eval_grad_g(cs: &CoefficientSet, x: &[f64], t: f64, tol: f64) -> Result<Vec<KernelValue>> {
    KernelEvaluator::for_window(cs, 0.0, t, tol)?.gradient(x)
}

pub fn eval_p(cs: &CoefficientSet, x: &[f64], t: f64, tau: f64, tol: f64) -> Result<KernelValue> {
    KernelEvaluator::for_window(cs, tau, t, tol)?.value(x)
}

pub fn eval_grad_p(cs: &CoefficientSet, x: &[f64], t: f64, tau: f64, tol: f64) -> Result<Vec<KernelValue>> {
    KernelEvaluator::for_window(cs, tau, t, tol)?.gradient(x)
}
