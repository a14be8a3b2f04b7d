//! Time-dependent coefficients `A(t)`, `b(t)`, `C(t)` and their accumulated
//! integrals `I_F(t, τ) = ∫_τ^t F(s) ds`, together with every matrix function
//! of those integrals the kernels need.

use std::fmt;
use std::sync::Arc;

use crate::error::{dimension, domain, Error, Result};
use crate::interp::MonotoneCubic;
use crate::matfun::{matrix_exp, sym_eigen, Matrix, SpdFactors, SymMatrix};
use crate::quad::{integrate_vec, Tolerance};

/// Default absolute tolerance factor for coefficient quadrature.
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;

/// Shortest admissible window `t - τ`, relative to the horizon.
pub const MIN_WINDOW_FRACTION: f64 = 1e-13;

const SPD_PROBES: usize = 65;

pub type PathFn = Arc<dyn Fn(f64, &mut [f64]) + Send + Sync>;

/// A time-dependent array of coefficient entries (row-major for matrices).
#[derive(Clone)]
pub enum CoefficientPath {
    Constant(Vec<f64>),
    /// `base + t·slope`.
    Affine { base: Vec<f64>, slope: Vec<f64> },
    /// Samples interpolated entry-wise by monotone cubics.
    Tabulated { times: Vec<f64>, series: Vec<MonotoneCubic> },
    /// Arbitrary closed-form path; integrated adaptively.
    Function { len: usize, f: PathFn },
}

impl fmt::Debug for CoefficientPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(v) => f.debug_tuple("Constant").field(v).finish(),
            Self::Affine { base, slope } => f.debug_struct("Affine").field("base", base).field("slope", slope).finish(),
            Self::Tabulated { times, .. } => write!(f, "Tabulated({} samples on [{}, {}])", times.len(), times[0], times[times.len() - 1]),
            Self::Function { len, .. } => write!(f, "Function(len = {len})"),
        }
    }
}

impl CoefficientPath {
    pub fn zeros(len: usize) -> Self {
        Self::Constant(vec![0.0; len])
    }

    /// Tabulated path from sample rows (`rows[k]` holds all entries at
    /// `times[k]`).
    pub fn tabulated(times: Vec<f64>, rows: &[Vec<f64>]) -> Result<Self> {
        if times.len() != rows.len() {
            return Err(dimension("one sample row per time is required"));
        }
        let len = rows.first().map(Vec::len).ok_or_else(|| domain("no samples"))?;
        if rows.iter().any(|r| r.len() != len) {
            return Err(dimension("sample rows differ in length"));
        }
        let series = (0..len)
            .map(|j| MonotoneCubic::new(times.clone(), rows.iter().map(|r| r[j]).collect()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::Tabulated { times, series })
    }

    pub fn function(len: usize, f: impl Fn(f64, &mut [f64]) + Send + Sync + 'static) -> Self {
        Self::Function { len, f: Arc::new(f) }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Constant(v) => v.len(),
            Self::Affine { base, .. } => base.len(),
            Self::Tabulated { series, .. } => series.len(),
            Self::Function { len, .. } => *len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Self::Constant(_) => true,
            Self::Affine { slope, .. } => slope.iter().all(|s| *s == 0.0),
            _ => false,
        }
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        match self {
            Self::Constant(v) => out.copy_from_slice(v),
            Self::Affine { base, slope } => {
                for ((o, b), s) in out.iter_mut().zip(base).zip(slope) {
                    *o = b + t * s;
                }
            }
            Self::Tabulated { series, .. } => {
                for (o, s) in out.iter_mut().zip(series) {
                    *o = s.eval(t);
                }
            }
            Self::Function { f, .. } => f(t, out),
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.eval_into(t, &mut out);
        out
    }

    fn covers(&self, a: f64, b: f64) -> bool {
        match self {
            Self::Tabulated { times, .. } => {
                let slack = 1e-12 * (1.0 + times[times.len() - 1].abs());
                times[0] <= a + slack && times[times.len() - 1] >= b - slack
            }
            _ => true,
        }
    }

    /// `∫_τ^t F(s) ds` entry-wise, with its error estimate.
    pub fn integral(&self, tau: f64, t: f64, tol: f64) -> Result<(Vec<f64>, f64)> {
        if !self.covers(tau, t) {
            return Err(domain(format!("tabulated samples do not cover [{tau}, {t}]")));
        }
        let width = t - tau;
        match self {
            Self::Constant(v) => Ok((v.iter().map(|x| x * width).collect(), 0.0)),
            Self::Affine { base, slope } => {
                let half_sq = 0.5 * (t * t - tau * tau);
                Ok((base.iter().zip(slope).map(|(b, s)| b * width + s * half_sq).collect(), 0.0))
            }
            Self::Tabulated { times, .. } => {
                let mut breaks = vec![tau];
                breaks.extend(times.iter().copied().filter(|s| *s > tau && *s < t));
                breaks.push(t);
                let q = integrate_vec(|s, out: &mut [f64]| self.eval_into(s, out), self.len(), &breaks, Tolerance::sup_scaled(tol));
                Ok((q.value.clone(), q.max_error()))
            }
            Self::Function { .. } => {
                let q = integrate_vec(|s, out: &mut [f64]| self.eval_into(s, out), self.len(), &[tau, t], Tolerance::sup_scaled(tol));
                if q.value.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite(format!("coefficient integral over [{tau}, {t}]")));
                }
                Ok((q.value.clone(), q.max_error()))
            }
        }
    }

    /// `∫_{t−δ}^t F(s) ds`, parameterized by `δ` so that short windows keep
    /// full relative precision.
    pub fn trailing_integral(&self, t: f64, delta: f64, tol: f64) -> Result<(Vec<f64>, f64)> {
        let tau = t - delta;
        if !self.covers(tau, t) {
            return Err(domain(format!("tabulated samples do not cover [{tau}, {t}]")));
        }
        match self {
            Self::Constant(v) => Ok((v.iter().map(|x| x * delta).collect(), 0.0)),
            Self::Affine { base, slope } => {
                let first = delta * (t - 0.5 * delta);
                Ok((base.iter().zip(slope).map(|(b, s)| b * delta + s * first).collect(), 0.0))
            }
            _ => {
                let mut breaks = vec![0.0];
                let mut inner: Vec<f64> = self.knots().iter().map(|k| t - k).filter(|u| *u > 0.0 && *u < delta).collect();
                inner.sort_by(f64::total_cmp);
                breaks.extend(inner);
                breaks.push(delta);
                let q = integrate_vec(|u, out: &mut [f64]| self.eval_into(t - u, out), self.len(), &breaks, Tolerance::sup_scaled(tol));
                if q.value.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite(format!("coefficient integral over [{tau}, {t}]")));
                }
                Ok((q.value.clone(), q.max_error()))
            }
        }
    }

    fn knots(&self) -> Vec<f64> {
        match self {
            Self::Tabulated { times, .. } => times.clone(),
            _ => Vec::new(),
        }
    }

    fn symmetrize(self, n: usize) -> Self {
        let sym = |v: Vec<f64>| -> Vec<f64> {
            let mut v = v;
            for i in 0..n {
                for j in (i + 1)..n {
                    let avg = 0.5 * (v[i * n + j] + v[j * n + i]);
                    v[i * n + j] = avg;
                    v[j * n + i] = avg;
                }
            }
            v
        };
        match self {
            Self::Constant(v) => Self::Constant(sym(v)),
            Self::Affine { base, slope } => Self::Affine { base: sym(base), slope: sym(slope) },
            other => other,
        }
    }
}

/// The coefficient triple of the system on `[0, T]`.
#[derive(Clone, Debug)]
pub struct CoefficientSet {
    n: usize,
    m: usize,
    horizon: f64,
    a: CoefficientPath,
    b: CoefficientPath,
    c: CoefficientPath,
}

impl CoefficientSet {
    /// Validates dimensions, coverage and positive definiteness of `A` on a
    /// probe grid of `[0, T]` (plus any sample times).
    pub fn new(n: usize, m: usize, horizon: f64, a: CoefficientPath, b: CoefficientPath, c: CoefficientPath) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(dimension("n and m must be at least 1"));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(domain(format!("horizon T must be positive and finite, got {horizon}")));
        }
        for (name, path, len) in [("A", &a, n * n), ("b", &b, n), ("C", &c, m * m)] {
            if path.len() != len {
                return Err(dimension(format!("{name} has {} entries, expected {len}", path.len())));
            }
            if !path.covers(0.0, horizon) {
                return Err(domain(format!("tabulated {name} does not cover [0, {horizon}]")));
            }
        }
        let cs = Self { n, m, horizon, a: a.symmetrize(n), b, c };

        let mut probes: Vec<f64> = (0..SPD_PROBES).map(|k| horizon * k as f64 / (SPD_PROBES - 1) as f64).collect();
        probes.extend(cs.a.knots().into_iter().filter(|s| (0.0..=horizon).contains(s)));
        for s in probes {
            let a = cs.a_at(s)?;
            let eig = sym_eigen(&a)?;
            let floor = crate::matfun::spd_floor(eig.max_abs_eigenvalue());
            let min = *eig.values.last().expect("n >= 1");
            if !(min > floor) {
                return Err(Error::NotPositiveDefinite { eigenvalue: min, floor });
            }
        }
        Ok(cs)
    }

    /// Constant coefficients.
    pub fn constant(horizon: f64, a: &SymMatrix, b: &[f64], c: &Matrix) -> Result<Self> {
        let n = a.order();
        if !c.is_square() {
            return Err(dimension("C must be square"));
        }
        Self::new(
            n,
            c.rows(),
            horizon,
            CoefficientPath::Constant(a.as_matrix().as_slice().to_vec()),
            CoefficientPath::Constant(b.to_vec()),
            CoefficientPath::Constant(c.as_slice().to_vec()),
        )
    }

    /// `A = I`, `b = 0`, `C = 0`: componentwise heat equation.
    pub fn heat(n: usize, m: usize, horizon: f64) -> Result<Self> {
        Self::constant(horizon, &SymMatrix::identity(n), &vec![0.0; n], &Matrix::zeros(m, m))
    }

    /// Same coefficients with a different drift.
    pub fn with_drift(&self, b: CoefficientPath) -> Result<Self> {
        Self::new(self.n, self.m, self.horizon, self.a.clone(), b, self.c.clone())
    }

    pub fn with_zero_order(&self, c: CoefficientPath) -> Result<Self> {
        Self::new(self.n, self.m, self.horizon, self.a.clone(), self.b.clone(), c)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn a_path(&self) -> &CoefficientPath {
        &self.a
    }

    pub fn b_path(&self) -> &CoefficientPath {
        &self.b
    }

    pub fn c_path(&self) -> &CoefficientPath {
        &self.c
    }

    pub fn a_at(&self, t: f64) -> Result<SymMatrix> {
        SymMatrix::new(Matrix::from_vec(self.n, self.n, self.a.eval(t))?)
    }

    pub fn b_at(&self, t: f64) -> Vec<f64> {
        self.b.eval(t)
    }

    pub fn c_at(&self, t: f64) -> Matrix {
        Matrix::from_vec(self.m, self.m, self.c.eval(t)).expect("length checked at construction")
    }

    fn check_window(&self, tau: f64, t: f64) -> Result<()> {
        let slack = 1e-12 * self.horizon;
        if !(tau >= -slack && tau < t && t <= self.horizon + slack) {
            return Err(domain(format!("window requires 0 <= tau < t <= T, got tau={tau}, t={t}, T={}", self.horizon)));
        }
        if t - tau < MIN_WINDOW_FRACTION * self.horizon {
            return Err(domain(format!("window t - tau = {:e} is below {MIN_WINDOW_FRACTION:e}·T", t - tau)));
        }
        Ok(())
    }
}

/// `I_A`, `I_b`, `I_C` over a window together with their matrix functions.
#[derive(Clone, Debug)]
pub struct AccumulatedIntegrals {
    pub t: f64,
    pub tau: f64,
    pub ia: SymMatrix,
    pub ib: Vec<f64>,
    pub ic: Matrix,
    pub ia_factors: SpdFactors,
    pub exp_ic: Matrix,
    pub exp_ic_star: Matrix,
    /// Largest quadrature error estimate over all entries.
    pub quad_error: f64,
}

impl AccumulatedIntegrals {
    /// Derive the matrix functions from raw integrals.
    pub fn from_raw(t: f64, tau: f64, ia: SymMatrix, ib: Vec<f64>, ic: Matrix, quad_error: f64) -> Result<Self> {
        let ia_factors = SpdFactors::new(&ia)?;
        let exp_ic = matrix_exp(&ic)?;
        let exp_ic_star = matrix_exp(&ic.transpose())?;
        Ok(Self { t, tau, ia, ib, ic, ia_factors, exp_ic, exp_ic_star, quad_error })
    }

    pub fn n(&self) -> usize {
        self.ia.order()
    }

    pub fn m(&self) -> usize {
        self.ic.rows()
    }

    pub fn ia_sqrt(&self) -> &SymMatrix {
        &self.ia_factors.sqrt
    }

    pub fn ia_inv_sqrt(&self) -> &SymMatrix {
        &self.ia_factors.inv_sqrt
    }

    pub fn ia_inverse(&self) -> &SymMatrix {
        &self.ia_factors.inverse
    }

    pub fn det_ia_sqrt(&self) -> f64 {
        self.ia_factors.det_sqrt()
    }

    pub fn log_det_ia_sqrt(&self) -> f64 {
        self.ia_factors.log_det_sqrt
    }

    /// Largest standard deviation of the Gaussian factor, `sqrt(2 λ_max(I_A))`.
    pub fn max_std(&self) -> f64 {
        (2.0 * self.ia_factors.max_eigenvalue()).sqrt()
    }
}

/// Accumulated integrals over `[τ, t]`. Each coefficient family is integrated
/// in its own adaptive run, so `I_A` and `I_C` never depend on `b`.
pub fn integrate_coefficients(cs: &CoefficientSet, tau: f64, t: f64, tol: f64) -> Result<AccumulatedIntegrals> {
    cs.check_window(tau, t)?;
    let (ia, ea) = cs.a.integral(tau, t, tol)?;
    let (ib, eb) = cs.b.integral(tau, t, tol)?;
    let (ic, ec) = cs.c.integral(tau, t, tol)?;
    let ia = SymMatrix::new(Matrix::from_vec(cs.n, cs.n, ia)?)?;
    let ic = Matrix::from_vec(cs.m, cs.m, ic)?;
    AccumulatedIntegrals::from_raw(t, tau, ia, ib, ic, ea.max(eb).max(ec))
}

/// Accumulated integrals over `[t − δ, t]`, with `δ` passed exactly.
pub fn integrate_window(cs: &CoefficientSet, t: f64, delta: f64, tol: f64) -> Result<AccumulatedIntegrals> {
    cs.check_window(t - delta, t)?;
    let (ia, ea) = cs.a.trailing_integral(t, delta, tol)?;
    let (ib, eb) = cs.b.trailing_integral(t, delta, tol)?;
    let (ic, ec) = cs.c.trailing_integral(t, delta, tol)?;
    let ia = SymMatrix::new(Matrix::from_vec(cs.n, cs.n, ia)?)?;
    let ic = Matrix::from_vec(cs.m, cs.m, ic)?;
    AccumulatedIntegrals::from_raw(t, t - delta, ia, ib, ic, ea.max(eb).max(ec))
}

/// Midpoint approximation `I_F(t, t−δ) ≈ δ·F(t − δ/2)` for windows too short
/// to factor directly; `I_A` is factored through `A(t − δ/2)` and rescaled.
pub fn linearized_integrals(cs: &CoefficientSet, t: f64, delta: f64) -> Result<AccumulatedIntegrals> {
    if !(delta > 0.0 && delta <= t) {
        return Err(domain(format!("window length must lie in (0, t], got {delta}")));
    }
    let mid = t - 0.5 * delta;
    let a = cs.a_at(mid)?;
    let ia_factors = SpdFactors::new(&a)?.scaled(delta);
    let ia = a.scaled(delta);
    let ib = cs.b_at(mid).iter().map(|v| v * delta).collect();
    let ic = cs.c_at(mid).scaled(delta);
    let exp_ic = matrix_exp(&ic)?;
    let exp_ic_star = matrix_exp(&ic.transpose())?;
    Ok(AccumulatedIntegrals { t, tau: t - delta, ia, ib, ic, ia_factors, exp_ic, exp_ic_star, quad_error: 0.0 })
}

/// Frobenius norm of `C(t) I_C(t, τ) − I_C(t, τ) C(t)`. Zero whenever the
/// exponential identity behind the kernel formulas holds exactly.
pub fn commutator_norm(cs: &CoefficientSet, tau: f64, t: f64, tol: f64) -> Result<f64> {
    cs.check_window(tau, t)?;
    let (ic, _) = cs.c.integral(tau, t, tol)?;
    let ic = Matrix::from_vec(cs.m, cs.m, ic)?;
    let c = cs.c_at(t);
    Ok(c.matmul(&ic).sub(&ic.matmul(&c)).norm_frobenius())
}

/// Power-law exponents of `det I_A^{1/2}(t, τ)` and `‖I_A^{-1/2}(t, τ)‖` as
/// `τ → t`: `det^{-1} ~ (t-τ)^{-kernel}`, `‖I^{-1/2}‖ ~ (t-τ)^{-gradient}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingExponents {
    pub kernel: f64,
    pub gradient: f64,
    /// `false` when the exponents are exact (constant `A`).
    pub estimated: bool,
    pub fit_residual: f64,
}

const LADDER_WINDOWS: usize = 8;

pub fn window_scaling_exponents(cs: &CoefficientSet, t: f64) -> Result<ScalingExponents> {
    if cs.a.is_constant() {
        return Ok(ScalingExponents { kernel: cs.n as f64 / 2.0, gradient: 0.5, estimated: false, fit_residual: 0.0 });
    }
    // Geometric ladder δ_k = t·2^{-(k+3)}.
    let mut logs_delta = Vec::with_capacity(LADDER_WINDOWS);
    let mut logs_det = Vec::with_capacity(LADDER_WINDOWS);
    let mut logs_grad = Vec::with_capacity(LADDER_WINDOWS);
    for k in 0..LADDER_WINDOWS {
        let delta = t * 0.5_f64.powi(k as i32 + 3);
        let (ia, _) = cs.a.integral(t - delta, t, DEFAULT_QUAD_TOL)?;
        let ia = SymMatrix::new(Matrix::from_vec(cs.n, cs.n, ia)?)?;
        let f = SpdFactors::new(&ia).map_err(|e| Error::Inconclusive(format!("window {delta:e}: {e}")))?;
        logs_delta.push(delta.ln());
        logs_det.push(f.log_det_sqrt);
        logs_grad.push(-0.5 * f.min_eigenvalue().ln());
    }
    let (kernel, r1) = ls_slope(&logs_delta, &logs_det);
    let (neg_grad, r2) = ls_slope(&logs_delta, &logs_grad);
    let gradient = -neg_grad;
    let fit_residual = r1.max(r2);
    if !(kernel.is_finite() && gradient.is_finite()) || kernel <= 0.0 || gradient <= 0.0 || fit_residual > 0.05 {
        return Err(Error::Inconclusive(format!(
            "log-log fit of window scaling failed (kernel {kernel}, gradient {gradient}, residual {fit_residual:e})"
        )));
    }
    Ok(ScalingExponents { kernel, gradient, estimated: true, fit_residual })
}

/// Least-squares slope and RMS residual.
fn ls_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    let rms = (x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum::<f64>() / n).sqrt();
    (slope, rms)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn affine_a(n: usize, base: &[f64], slope: &[f64]) -> CoefficientPath {
        assert_eq!(base.len(), n * n);
        CoefficientPath::Affine { base: base.to_vec(), slope: slope.to_vec() }
    }

    #[test]
    fn constant_heat_window() {
        let cs = CoefficientSet::heat(2, 1, 2.0).unwrap();
        let w = integrate_coefficients(&cs, 0.0, 2.0, DEFAULT_QUAD_TOL).unwrap();
        assert!(w.ia.as_matrix().max_abs_diff(&Matrix::identity(2).scaled(2.0)) < 1e-15);
        assert_eq!(w.ib, vec![0.0, 0.0]);
        assert_eq!(w.ic, Matrix::zeros(1, 1));
        assert_eq!(w.exp_ic, Matrix::identity(1));
    }

    #[test]
    fn affine_exact_integral() {
        let cs = CoefficientSet::new(
            2,
            1,
            1.0,
            affine_a(2, &[1.0, 0.0, 0.0, 1.0], &[1.0, 0.0, 0.0, 0.0]),
            CoefficientPath::zeros(2),
            CoefficientPath::zeros(1),
        )
        .unwrap();
        let w = integrate_coefficients(&cs, 0.0, 1.0, DEFAULT_QUAD_TOL).unwrap();
        assert!(w.ia.as_matrix().max_abs_diff(&Matrix::from_diag(&[1.5, 1.0])) < 1e-15);
    }

    #[test]
    fn tabulated_exponential() {
        let times: Vec<f64> = (0..33).map(|k| k as f64 / 32.0).collect();
        let rows: Vec<Vec<f64>> = times.iter().map(|t| vec![f64::exp(*t)]).collect();
        let cs = CoefficientSet::new(
            1,
            1,
            1.0,
            CoefficientPath::tabulated(times, &rows).unwrap(),
            CoefficientPath::zeros(1),
            CoefficientPath::zeros(1),
        )
        .unwrap();
        let w = integrate_coefficients(&cs, 0.0, 1.0, DEFAULT_QUAD_TOL).unwrap();
        assert!((w.ia[(0, 0)] - (std::f64::consts::E - 1.0)).abs() < 1e-6);
    }

    #[test]
    fn tabulated_must_cover_horizon() {
        let rows = vec![vec![1.0], vec![1.0]];
        let a = CoefficientPath::tabulated(vec![0.0, 0.5], &rows).unwrap();
        let err = CoefficientSet::new(1, 1, 1.0, a, CoefficientPath::zeros(1), CoefficientPath::zeros(1)).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn indefinite_a_is_rejected() {
        // a(t) = 1 - 2t crosses zero inside [0, 1].
        let a = affine_a(1, &[1.0], &[-2.0]);
        let err = CoefficientSet::new(1, 1, 1.0, a, CoefficientPath::zeros(1), CoefficientPath::zeros(1)).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { .. }));
    }

    #[test]
    fn degenerate_window_is_rejected() {
        let cs = CoefficientSet::heat(1, 1, 1.0).unwrap();
        assert!(matches!(integrate_coefficients(&cs, 0.5, 0.5, 1e-10), Err(Error::Domain(_))));
        assert!(matches!(integrate_coefficients(&cs, 0.5 - 1e-15, 0.5, 1e-10), Err(Error::Domain(_))));
        assert!(matches!(integrate_coefficients(&cs, 0.0, 1.5, 1e-10), Err(Error::Domain(_))));
    }

    #[test]
    fn function_path_makes_quadrature_work() {
        let a = CoefficientPath::function(1, |t, out| out[0] = 2.0 + (3.0 * t).sin());
        let c = CoefficientPath::function(1, |t, out| out[0] = t.cos());
        let cs = CoefficientSet::new(1, 1, 2.0, a, CoefficientPath::zeros(1), c).unwrap();
        let w = integrate_coefficients(&cs, 0.25, 1.75, 1e-12).unwrap();
        let exact_a = 2.0 * 1.5 + ((3.0 * 0.25f64).cos() - (3.0 * 1.75f64).cos()) / 3.0;
        let exact_c = 1.75f64.sin() - 0.25f64.sin();
        assert!((w.ia[(0, 0)] - exact_a).abs() < 1e-12 * 1.5 * 4.0);
        assert!((w.ic[(0, 0)] - exact_c).abs() < 1e-12 * 1.5 * 2.0);
        assert!((w.exp_ic[(0, 0)] - exact_c.exp()).abs() < 1e-11);
    }

    #[test]
    fn exponents_constant_and_affine() {
        let cs2 = CoefficientSet::heat(2, 1, 1.0).unwrap();
        let e = window_scaling_exponents(&cs2, 1.0).unwrap();
        assert_eq!((e.kernel, e.gradient, e.estimated), (1.0, 0.5, false));
        let cs1 = CoefficientSet::heat(1, 1, 1.0).unwrap();
        let e = window_scaling_exponents(&cs1, 0.7).unwrap();
        assert_eq!((e.kernel, e.gradient), (0.5, 0.5));

        let a = affine_a(1, &[1.0], &[1.0]);
        let cs = CoefficientSet::new(1, 1, 1.0, a, CoefficientPath::zeros(1), CoefficientPath::zeros(1)).unwrap();
        let e = window_scaling_exponents(&cs, 1.0).unwrap();
        assert!(e.estimated);
        assert!((e.kernel - 0.5).abs() < 1e-2 && (e.gradient - 0.5).abs() < 1e-2, "{e:?}");
    }

    #[test]
    fn commutator_vanishes_for_constant_c() {
        let c = Matrix::from_rows(&[[0.0, 1.0], [-2.0, 0.5]]).unwrap();
        let cs = CoefficientSet::constant(1.0, &SymMatrix::identity(1), &[0.0], &c).unwrap();
        assert!(commutator_norm(&cs, 0.0, 1.0, 1e-12).unwrap() < 1e-15);

        let c = CoefficientPath::Affine { base: vec![0.0, 1.0, 0.0, 0.0], slope: vec![0.0, 0.0, 1.0, 0.0] };
        let cs = CoefficientSet::new(1, 2, 1.0, CoefficientPath::Constant(vec![1.0]), CoefficientPath::zeros(1), c).unwrap();
        assert!(commutator_norm(&cs, 0.0, 1.0, 1e-12).unwrap() > 1e-3);
    }
}
