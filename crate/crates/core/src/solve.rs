//! Solutions of the homogeneous problem (initial data `φ`) and of the
//! nonhomogeneous problem (source `f`, zero initial data) by midpoint
//! convolution quadrature against `G` and `P`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::coeffs::{integrate_window, linearized_integrals, CoefficientSet};
use crate::error::{dimension, domain, Result};
use crate::kernels::KernelEvaluator;
use crate::sharp::tau::LINEARIZE_BELOW;
use crate::sharp::Exponent;

/// Grid nodes are processed in fixed-size chunks whose partial sums are
/// combined in order, so results do not depend on the thread count.
const CHUNK: usize = 2048;

/// Smallest admissible evaluation time relative to `T`.
pub const MIN_TIME_FRACTION: f64 = 1e-10;

/// Vector field sampled at the cell midpoints of a uniform grid on the cube
/// `center + [−radius, radius]^n`.
#[derive(Clone, PartialEq)]
pub struct GridFunction {
    center: Vec<f64>,
    radius: f64,
    points: usize,
    m: usize,
    /// Node-major: node `k` owns `values[k·m .. (k+1)·m]`.
    values: Vec<f64>,
}

impl fmt::Debug for GridFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridFunction")
            .field("center", &self.center)
            .field("radius", &self.radius)
            .field("points", &self.points)
            .field("m", &self.m)
            .finish_non_exhaustive()
    }
}

impl GridFunction {
    pub fn new(center: Vec<f64>, radius: f64, points: usize, m: usize, values: Vec<f64>) -> Result<Self> {
        if center.is_empty() || m == 0 {
            return Err(dimension("grid needs n >= 1 and m >= 1"));
        }
        if points.is_multiple_of(2) || points < 3 {
            return Err(domain(format!("points per axis must be odd and at least 3, got {points}")));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(domain(format!("grid radius must be positive, got {radius}")));
        }
        let count = points
            .checked_pow(center.len() as u32)
            .and_then(|c| c.checked_mul(m))
            .ok_or_else(|| domain("grid too large"))?;
        if values.len() != count {
            return Err(dimension(format!("grid expects {count} values, got {}", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(crate::error::Error::NonFinite("grid values".into()));
        }
        Ok(Self { center, radius, points, m, values })
    }

    /// Sample `f(y, out)` at every node.
    pub fn from_fn<F>(center: Vec<f64>, radius: f64, points: usize, m: usize, f: F) -> Result<Self>
    where
        F: Fn(&[f64], &mut [f64]) + Sync,
    {
        let shape = Self { center, radius, points, m, values: Vec::new() };
        let count = points.pow(shape.n() as u32);
        let mut values = vec![0.0; count * m];
        values.par_chunks_mut(m).enumerate().for_each(|(k, out)| {
            let y = shape.node(k);
            f(&y, out);
        });
        Self::new(shape.center, radius, points, m, values)
    }

    pub fn n(&self) -> usize {
        self.center.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn points_per_axis(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.radius / self.points as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.n() as i32)
    }

    pub fn node_count(&self) -> usize {
        self.points.pow(self.n() as u32)
    }

    pub fn node(&self, k: usize) -> Vec<f64> {
        grid_node(&self.center, self.radius, self.points, k)
    }

    pub fn value(&self, k: usize) -> &[f64] {
        &self.values[k * self.m..(k + 1) * self.m]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Discrete `L^p` norm of `|φ|` with midpoint weights.
    pub fn norm_p(&self, p: Exponent) -> f64 {
        let mags: Vec<f64> = self.values.chunks(self.m).map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
        discrete_norm(&mags, self.cell_volume(), p)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { values: self.values.iter().map(|v| v * s).collect(), ..self.clone() }
    }

    /// `a·self + b·other` on the same grid.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.center != other.center || self.radius != other.radius || self.points != other.points || self.m != other.m {
            return Err(dimension("grid functions live on different grids"));
        }
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Ok(Self { values, ..self.clone() })
    }
}

pub(crate) fn grid_node(center: &[f64], radius: f64, points: usize, mut k: usize) -> Vec<f64> {
    let h = 2.0 * radius / points as f64;
    center
        .iter()
        .map(|c| {
            let i = k % points;
            k /= points;
            c - radius + (i as f64 + 0.5) * h
        })
        .collect()
}

/// `(Σ |v_k|^p w)^{1/p}`, or `max |v_k|` for `p = ∞`.
pub fn discrete_norm(mags: &[f64], weight: f64, p: Exponent) -> f64 {
    if p.is_infinite() {
        return mags.iter().fold(0.0, |m: f64, v| m.max(*v));
    }
    let pv = p.value();
    let sum = ordered_sum(mags.len(), |k| mags[k].powf(pv));
    (sum * weight).powf(1.0 / pv)
}

/// Deterministic parallel sum of `term(k)` for `k < count`.
pub(crate) fn ordered_sum<F: Fn(usize) -> f64 + Sync>(count: usize, term: F) -> f64 {
    let chunks: Vec<f64> = (0..count.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| (c * CHUNK..((c + 1) * CHUNK).min(count)).map(&term).sum::<f64>())
        .collect();
    chunks.iter().sum()
}

/// Deterministic parallel sum of vector terms `term(k, out)` (added into `out`).
pub(crate) fn ordered_vec_sum<F>(count: usize, dim: usize, term: F) -> Vec<f64>
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    let chunks: Vec<Vec<f64>> = (0..count.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![0.0; dim];
            for k in c * CHUNK..((c + 1) * CHUNK).min(count) {
                term(k, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; dim];
    for c in chunks {
        for (t, v) in total.iter_mut().zip(c) {
            *t += v;
        }
    }
    total
}

pub type SourceFn = Arc<dyn Fn(&[f64], f64, &mut [f64]) + Send + Sync>;

/// Source term `f(y, τ)` evaluated on the fly.
#[derive(Clone)]
pub struct SourceFunction {
    m: usize,
    bound: f64,
    f: SourceFn,
}

impl fmt::Debug for SourceFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SourceFunction").field("m", &self.m).field("bound", &self.bound).finish_non_exhaustive()
    }
}

impl SourceFunction {
    /// `bound` is the declared sup norm of `|f|`.
    pub fn new(m: usize, bound: f64, f: impl Fn(&[f64], f64, &mut [f64]) + Send + Sync + 'static) -> Self {
        Self { m, bound, f: Arc::new(f) }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn eval(&self, y: &[f64], tau: f64, out: &mut [f64]) {
        (self.f)(y, tau, out)
    }
}

/// A solution value with its refinement error estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub value: Vec<f64>,
    /// `|u_h − u_{2h}|` between the grid and its coarsening.
    pub error_estimate: f64,
    /// Distance from the kernel centre to the nearest grid face, in kernel
    /// standard deviations (homogeneous problem only).
    pub coverage_sigmas: f64,
}

impl Solution {
    pub fn norm(&self) -> f64 {
        self.value.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

fn check_time(cs: &CoefficientSet, t: f64) -> Result<()> {
    if !(t >= MIN_TIME_FRACTION * cs.horizon() && t <= cs.horizon() * (1.0 + 1e-12)) {
        return Err(domain(format!("t must lie in [{:e}, T], got {t}", MIN_TIME_FRACTION * cs.horizon())));
    }
    Ok(())
}

fn check_point(cs: &CoefficientSet, x: &[f64]) -> Result<()> {
    if x.len() != cs.n() {
        return Err(dimension(format!("point has {} coordinates, expected {}", x.len(), cs.n())));
    }
    Ok(())
}

/// Kernel factor at `x − y`: `None` for `G`/`P`, `Some(ℓ)` for `(ℓ,∇_x)`.
fn scalar_kernel(ev: &KernelEvaluator, diff: &[f64], ell: Option<&[f64]>) -> f64 {
    match ell {
        None => ev.scalar(diff),
        Some(l) => ev.scalar_directional(diff, l),
    }
}

/// Midpoint convolution `Σ_k K(x − y_k) φ_k h^n` over nodes with index
/// stride `stride` (1 for the full grid, 2 for its coarsening).
fn convolve_grid(ev: &KernelEvaluator, phi: &GridFunction, x: &[f64], ell: Option<&[f64]>, stride: usize) -> Vec<f64> {
    let n = phi.n();
    let m = phi.m();
    let per_axis = phi.points.div_ceil(stride);
    let count = per_axis.pow(n as u32);
    let weight = phi.spacing().powi(n as i32) * (stride as f64).powi(n as i32);
    let scalar = ordered_vec_sum(count, m, |k, acc| {
        let mut rest = k;
        let mut index = 0;
        let mut mult = 1;
        for _ in 0..n {
            index += (rest % per_axis) * stride * mult;
            rest /= per_axis;
            mult *= phi.points;
        }
        let y = phi.node(index);
        let diff: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        let g = scalar_kernel(ev, &diff, ell);
        if g != 0.0 {
            for (a, v) in acc.iter_mut().zip(phi.value(index)) {
                *a += g * v;
            }
        }
    });
    let scalar: Vec<f64> = scalar.into_iter().map(|v| v * weight).collect();
    ev.integrals().exp_ic.matvec(&scalar)
}

fn coverage(ev: &KernelEvaluator, phi: &GridFunction, x: &[f64]) -> f64 {
    let sigma = ev.integrals().max_std();
    x.iter()
        .zip(&ev.integrals().ib)
        .zip(phi.center())
        .map(|((xi, bi), ci)| {
            let centre = xi + bi;
            (phi.radius() - (centre - ci).abs()) / sigma
        })
        .fold(f64::INFINITY, f64::min)
}

fn homogeneous_impl(cs: &CoefficientSet, phi: &GridFunction, x: &[f64], t: f64, ell: Option<&[f64]>, tol: f64) -> Result<Solution> {
    check_time(cs, t)?;
    check_point(cs, x)?;
    if phi.n() != cs.n() || phi.m() != cs.m() {
        return Err(dimension("initial data dimensions do not match the coefficients"));
    }
    let ev = KernelEvaluator::for_window(cs, 0.0, t, tol)?;
    let fine = convolve_grid(&ev, phi, x, ell, 1);
    let coarse = convolve_grid(&ev, phi, x, ell, 2);
    let error_estimate = fine.iter().zip(&coarse).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    Ok(Solution { value: fine, error_estimate, coverage_sigmas: coverage(&ev, phi, x) })
}

/// `u(x, t) = ∫ G(x − y, t) φ(y) dy`.
pub fn solve_homogeneous(cs: &CoefficientSet, phi: &GridFunction, x: &[f64], t: f64, tol: f64) -> Result<Solution> {
    homogeneous_impl(cs, phi, x, t, None, tol)
}

/// Settings of the `(y, τ)` quadrature for the nonhomogeneous problem.
#[derive(Clone, Copy, Debug)]
pub struct NonhomogeneousSettings {
    /// Midpoint nodes in `σ = √(t − τ)`; even, so that halving is possible.
    pub time_nodes: usize,
    /// Odd number of points per axis of each `y`-grid.
    pub grid_points: usize,
    /// Half-width of each `y`-grid in kernel standard deviations.
    pub truncation_sigmas: f64,
    pub quad_tol: f64,
}

impl Default for NonhomogeneousSettings {
    fn default() -> Self {
        Self { time_nodes: 64, grid_points: 65, truncation_sigmas: 8.0, quad_tol: crate::coeffs::DEFAULT_QUAD_TOL }
    }
}

/// Kernel evaluator for the window `[t − δ, t]`, linearized below
/// `LINEARIZE_BELOW·T`.
pub(crate) fn window_evaluator(cs: &CoefficientSet, t: f64, delta: f64, tol: f64) -> Result<KernelEvaluator> {
    let w = if delta < LINEARIZE_BELOW * cs.horizon() {
        linearized_integrals(cs, t, delta)?
    } else {
        integrate_window(cs, t, delta, tol)?
    };
    Ok(KernelEvaluator::new(w))
}

/// `∫ K(x − y) f(y, τ) dy` over a grid adapted to the kernel of
/// window `δ`, including the Jacobian `2σ` of `τ = t − σ²`.
fn inner_source(
    cs: &CoefficientSet,
    f: &SourceFunction,
    x: &[f64],
    t: f64,
    sigma: f64,
    ell: Option<&[f64]>,
    settings: &NonhomogeneousSettings,
) -> Result<Vec<f64>> {
    let n = cs.n();
    let m = cs.m();
    let delta = sigma * sigma;
    let tau = t - delta;
    let ev = window_evaluator(cs, t, delta, settings.quad_tol)?;
    let radius = settings.truncation_sigmas * ev.integrals().max_std();
    let centre: Vec<f64> = x.iter().zip(&ev.integrals().ib).map(|(a, b)| a + b).collect();
    let points = settings.grid_points;
    let count = points.pow(n as u32);
    let h = 2.0 * radius / points as f64;
    let scalar = ordered_vec_sum(count, m, |k, acc| {
        let y = grid_node(&centre, radius, points, k);
        let diff: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        let g = scalar_kernel(&ev, &diff, ell);
        if g != 0.0 {
            let mut fv = vec![0.0; m];
            f.eval(&y, tau, &mut fv);
            for (a, v) in acc.iter_mut().zip(&fv) {
                *a += g * v;
            }
        }
    });
    let w = h.powi(n as i32) * 2.0 * sigma;
    let scalar: Vec<f64> = scalar.into_iter().map(|v| v * w).collect();
    Ok(ev.integrals().exp_ic.matvec(&scalar))
}

fn nonhomogeneous_impl(
    cs: &CoefficientSet,
    f: &SourceFunction,
    x: &[f64],
    t: f64,
    ell: Option<&[f64]>,
    settings: &NonhomogeneousSettings,
) -> Result<Solution> {
    check_time(cs, t)?;
    check_point(cs, x)?;
    if f.m() != cs.m() {
        return Err(dimension("source dimension does not match the coefficients"));
    }
    if settings.grid_points.is_multiple_of(2) || settings.grid_points < 3 || settings.time_nodes < 2 || settings.time_nodes % 2 == 1 {
        return Err(domain("grid_points must be odd and time_nodes even"));
    }
    let sweep = |nodes: usize| -> Result<Vec<f64>> {
        let d = t.sqrt() / nodes as f64;
        let parts: Vec<Vec<f64>> = (0..nodes)
            .map(|j| inner_source(cs, f, x, t, (j as f64 + 0.5) * d, ell, settings))
            .collect::<Result<_>>()?;
        let mut total = vec![0.0; cs.m()];
        for p in parts {
            for (a, v) in total.iter_mut().zip(p) {
                *a += v * d;
            }
        }
        Ok(total)
    };
    let fine = sweep(settings.time_nodes)?;
    let coarse = sweep(settings.time_nodes / 2)?;
    let error_estimate = fine.iter().zip(&coarse).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    Ok(Solution { value: fine, error_estimate, coverage_sigmas: settings.truncation_sigmas })
}

/// `u(x, t) = ∫₀ᵗ ∫ P(x − y, t, τ) f(y, τ) dy dτ`.
pub fn solve_nonhomogeneous(cs: &CoefficientSet, f: &SourceFunction, x: &[f64], t: f64, settings: &NonhomogeneousSettings) -> Result<Solution> {
    nonhomogeneous_impl(cs, f, x, t, None, settings)
}

/// Data of either Cauchy problem.
#[derive(Clone, Copy, Debug)]
pub enum Problem<'a> {
    Homogeneous { phi: &'a GridFunction, tol: f64 },
    Nonhomogeneous { f: &'a SourceFunction, settings: &'a NonhomogeneousSettings },
}

/// `(ℓ, ∇_x) u(x, t)` for a unit direction `ℓ`.
pub fn directional_derivative(cs: &CoefficientSet, problem: Problem<'_>, x: &[f64], t: f64, ell: &[f64]) -> Result<Solution> {
    if ell.len() != cs.n() {
        return Err(dimension("direction has the wrong length"));
    }
    match problem {
        Problem::Homogeneous { phi, tol } => homogeneous_impl(cs, phi, x, t, Some(ell), tol),
        Problem::Nonhomogeneous { f, settings } => nonhomogeneous_impl(cs, f, x, t, Some(ell), settings),
    }
}

/// Midpoint discrete `‖f‖_{p,t}` over `center + [−radius, radius]^n × (0, t)`.
pub fn space_time_norm(
    f: &SourceFunction,
    center: &[f64],
    radius: f64,
    points: usize,
    t: f64,
    time_nodes: usize,
    p: Exponent,
) -> f64 {
    let n = center.len();
    let count = points.pow(n as u32);
    let dt = t / time_nodes as f64;
    let h = 2.0 * radius / points as f64;
    let mags = |k: usize| -> f64 {
        let j = k / count;
        let y = grid_node(center, radius, points, k % count);
        let mut v = vec![0.0; f.m()];
        f.eval(&y, (j as f64 + 0.5) * dt, &mut v);
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    };
    let total = count * time_nodes;
    if p.is_infinite() {
        return (0..total).into_par_iter().map(mags).reduce(|| 0.0, f64::max);
    }
    let pv = p.value();
    (ordered_sum(total, |k| mags(k).powf(pv)) * h.powi(n as i32) * dt).powf(1.0 / pv)
}
