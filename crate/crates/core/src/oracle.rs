//! Brute-force operator norms `‖S‖_p = sup_{|z|=1} ‖K(x − ·)ᵀ z‖_{p'}` of the
//! solution maps, extremal inputs that saturate them, and saturation ratios.
//! Nothing here calls the closed forms except `saturation_ratio`, which
//! divides by them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::gamma_ur;

use crate::coeffs::CoefficientSet;
use crate::error::{dimension, domain, Error, Result};
use crate::kernels::KernelEvaluator;
use crate::matfun::{canonical_sign, Matrix};
use crate::sharp::{sharp_c_ell, sharp_h, sharp_k_ell, sharp_n, Exponent, SharpSettings};
use crate::solve::{
    directional_derivative, grid_node, ordered_sum, solve_homogeneous, solve_nonhomogeneous, window_evaluator, GridFunction,
    NonhomogeneousSettings, Problem, SourceFunction,
};

#[derive(Clone, Debug, PartialEq)]
pub enum OperatorKind {
    /// `φ ↦ u(x, t)`.
    Homogeneous,
    /// `φ ↦ (ℓ, ∇_x) u(x, t)`.
    HomogeneousGradient { ell: Vec<f64> },
    /// `f ↦ u(x, t)`.
    Nonhomogeneous,
    /// `f ↦ (ℓ, ∇_x) u(x, t)`.
    NonhomogeneousGradient { ell: Vec<f64> },
}

impl OperatorKind {
    pub fn ell(&self) -> Option<&[f64]> {
        match self {
            Self::HomogeneousGradient { ell } | Self::NonhomogeneousGradient { ell } => Some(ell),
            _ => None,
        }
    }

    pub fn is_nonhomogeneous(&self) -> bool {
        matches!(self, Self::Nonhomogeneous | Self::NonhomogeneousGradient { .. })
    }
}

pub const MIN_TRUNCATION: f64 = 6.0;
pub const MIN_GRID_POINTS: usize = 17;

#[derive(Clone, Debug)]
pub struct IntegralOperatorSpec {
    pub kind: OperatorKind,
    pub cs: CoefficientSet,
    pub x: Vec<f64>,
    pub t: f64,
    pub p: Exponent,
    /// Half-width of the `y` domain in units of `sqrt(2 λ_max(I_A))`.
    pub truncation: f64,
    /// Odd number of points per axis.
    pub grid_points: usize,
    /// Midpoint nodes in `σ = √(t − τ)` (nonhomogeneous kinds).
    pub time_nodes: usize,
    pub quad_tol: f64,
    /// Largest acceptable relative tail bound.
    pub tail_tol: f64,
    /// Angles scanned per `z` search (for `m = 2`) or random probes (`m ≥ 3`).
    pub z_scan: usize,
}

impl IntegralOperatorSpec {
    pub fn new(kind: OperatorKind, cs: CoefficientSet, x: Vec<f64>, t: f64, p: Exponent) -> Self {
        let n = cs.n();
        let grid_points = match (kind.is_nonhomogeneous(), n) {
            (false, 1) => 513,
            (false, _) => 481,
            (true, 1) => 257,
            (true, _) => 241,
        };
        Self {
            kind,
            cs,
            x,
            t,
            p,
            truncation: 8.0,
            grid_points,
            time_nodes: 128,
            quad_tol: crate::coeffs::DEFAULT_QUAD_TOL,
            tail_tol: 1e-6,
            z_scan: 64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.truncation < MIN_TRUNCATION {
            return Err(domain(format!("truncation radius must be at least {MIN_TRUNCATION}, got {}", self.truncation)));
        }
        if self.grid_points < MIN_GRID_POINTS || self.grid_points.is_multiple_of(2) {
            return Err(domain(format!("grid resolution must be odd and at least {MIN_GRID_POINTS}, got {}", self.grid_points)));
        }
        if self.x.len() != self.cs.n() {
            return Err(dimension("evaluation point has the wrong dimension"));
        }
        if let Some(ell) = self.kind.ell() {
            if ell.len() != self.cs.n() {
                return Err(dimension("direction has the wrong dimension"));
            }
            let norm = ell.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-12 {
                return Err(domain("direction must be a unit vector"));
            }
        }
        if self.kind.is_nonhomogeneous() && (self.time_nodes < 4 || self.time_nodes % 2 == 1) {
            return Err(domain("time_nodes must be even and at least 4"));
        }
        Ok(())
    }

    fn coarse_points(&self) -> usize {
        (self.grid_points / 2) | 1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    pub value: f64,
    pub argmax_z: Vec<f64>,
    /// Relative change against the coarsened grid.
    pub refinement_error: f64,
    /// Relative bound on the norm mass outside the truncated domain.
    pub tail_bound: f64,
}

fn kernel_scalar(ev: &KernelEvaluator, diff: &[f64], ell: Option<&[f64]>) -> f64 {
    match ell {
        None => ev.scalar(diff),
        Some(l) => ev.scalar_directional(diff, l),
    }
}

/// Relative `L^{p'}` mass of the kernel outside the truncated domain. In the
/// whitened variable the box contains the ball of radius `√2·truncation`;
/// `|K|^{p'}` is bounded by `|v|^{k} e^{−p'|v|²/4}` with `k = p'` for the
/// gradient kernels.
fn tail_bound(n: usize, pc: f64, truncation: f64, gradient: bool) -> f64 {
    if pc.is_infinite() {
        return 0.0;
    }
    let r2 = 2.0 * truncation * truncation;
    let k = if gradient { pc } else { 0.0 };
    gamma_ur((n as f64 + k) / 2.0, pc * r2 / 4.0) / pc
}

/// Kernel matrices `K(x − y_k)` for every node of one grid.
struct KernelTable {
    mats: Vec<f64>,
    m: usize,
    weight: f64,
    nodes: Vec<Vec<f64>>,
}

impl KernelTable {
    fn build(ev: &KernelEvaluator, x: &[f64], ell: Option<&[f64]>, centre: &[f64], radius: f64, points: usize) -> Self {
        let n = x.len();
        let m = ev.m();
        let count = points.pow(n as u32);
        let e = &ev.integrals().exp_ic;
        let mut mats = Vec::with_capacity(count * m * m);
        let mut nodes = Vec::with_capacity(count);
        for k in 0..count {
            let y = grid_node(centre, radius, points, k);
            let diff: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
            let g = kernel_scalar(ev, &diff, ell);
            mats.extend(e.as_slice().iter().map(|v| v * g));
            nodes.push(y);
        }
        let h = 2.0 * radius / points as f64;
        Self { mats, m, weight: h.powi(n as i32), nodes }
    }

    /// `|K_kᵀ z|`.
    fn magnitude(&self, k: usize, z: &[f64]) -> f64 {
        let m = self.m;
        let a = &self.mats[k * m * m..(k + 1) * m * m];
        (0..m).map(|j| (0..m).map(|i| a[i * m + j] * z[i]).sum::<f64>().powi(2)).sum::<f64>().sqrt()
    }

    fn norm(&self, z: &[f64], pc: f64) -> f64 {
        let count = self.nodes.len();
        if pc.is_infinite() {
            return (0..count).map(|k| self.magnitude(k, z)).fold(0.0, f64::max);
        }
        (ordered_sum(count, |k| self.magnitude(k, z).powf(pc)) * self.weight).powf(1.0 / pc)
    }

    fn argmax_node(&self, z: &[f64]) -> usize {
        (0..self.nodes.len()).fold(0, |best, k| if self.magnitude(k, z) > self.magnitude(best, z) { k } else { best })
    }
}

/// Supremum of an even function of `z ∈ S^{m−1}` by a dense angle scan plus
/// golden-section refinement (`m = 2`), or random probes with shrinking
/// perturbations (`m ≥ 3`).
fn z_search<F: Fn(&[f64]) -> f64>(m: usize, scan: usize, f: F) -> (Vec<f64>, f64) {
    match m {
        1 => (vec![1.0], f(&[1.0])),
        2 => {
            let at = |th: f64| f(&[th.cos(), th.sin()]);
            let step = std::f64::consts::PI / scan as f64;
            let vals: Vec<f64> = (0..scan).map(|k| at(k as f64 * step)).collect();
            let best = (0..scan).fold(0, |b, k| if vals[k] > vals[b] { k } else { b });
            let (mut a, mut b) = ((best as f64 - 1.0) * step, (best as f64 + 1.0) * step);
            let g = (5f64.sqrt() - 1.0) / 2.0;
            let mut c = b - g * (b - a);
            let mut d = a + g * (b - a);
            let (mut fc, mut fd) = (at(c), at(d));
            while b - a > 1e-10 {
                if fc > fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - g * (b - a);
                    fc = at(c);
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + g * (b - a);
                    fd = at(d);
                }
            }
            let mut th = 0.5 * (a + b);
            let mut v = at(th);
            if v < vals[best] {
                th = best as f64 * step;
                v = vals[best];
            }
            (vec![th.cos(), th.sin()], v)
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x0a1c1e);
            let unit = |v: &mut Vec<f64>| {
                let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.iter_mut().for_each(|x| *x /= s);
            };
            let mut best = vec![0.0; m];
            best[0] = 1.0;
            let mut best_v = f(&best);
            for _ in 0..scan * m * 8 {
                let mut v: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
                unit(&mut v);
                let fv = f(&v);
                if fv > best_v {
                    best = v;
                    best_v = fv;
                }
            }
            let mut radius = 0.1;
            while radius > 1e-9 {
                let mut improved = false;
                for _ in 0..16 * m {
                    let mut v: Vec<f64> = best.iter().map(|x| x + radius * rng.gen_range(-1.0..1.0)).collect();
                    unit(&mut v);
                    let fv = f(&v);
                    if fv > best_v {
                        best = v;
                        best_v = fv;
                        improved = true;
                    }
                }
                if !improved {
                    radius *= 0.5;
                }
            }
            (best, best_v)
        }
    }
}

/// Zoomed search for `sup_y |K(x − y)ᵀ z|` around a grid node.
fn zoom_sup(ev: &KernelEvaluator, x: &[f64], ell: Option<&[f64]>, start: &[f64], spacing: f64, z: &[f64]) -> f64 {
    let n = x.len();
    let gz = ev.integrals().exp_ic.tr_matvec(z).iter().map(|v| v * v).sum::<f64>().sqrt();
    let at = |y: &[f64]| -> f64 {
        let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        kernel_scalar(ev, &diff, ell).abs() * gz
    };
    let mut centre = start.to_vec();
    let mut best = at(&centre);
    let mut half = spacing;
    let points = 17usize;
    for _ in 0..10 {
        let count = points.pow(n as u32);
        let mut next = centre.clone();
        for k in 0..count {
            let y = grid_node(&centre, half, points, k);
            let v = at(&y);
            if v > best {
                best = v;
                next = y;
            }
        }
        centre = next;
        half /= 8.0;
    }
    best
}

fn homogeneous_norm(spec: &IntegralOperatorSpec, points: usize) -> Result<(f64, Vec<f64>)> {
    let ev = KernelEvaluator::for_window(&spec.cs, 0.0, spec.t, spec.quad_tol)?;
    let ell = spec.kind.ell();
    let pc = spec.p.conjugate().value();
    let radius = spec.truncation * ev.integrals().max_std();
    let centre: Vec<f64> = spec.x.iter().zip(&ev.integrals().ib).map(|(a, b)| a + b).collect();
    let table = KernelTable::build(&ev, &spec.x, ell, &centre, radius, points);
    let (mut z, mut value) = z_search(spec.cs.m(), spec.z_scan, |z| table.norm(z, pc));
    if pc.is_infinite() {
        let k = table.argmax_node(&z);
        value = value.max(zoom_sup(&ev, &spec.x, ell, &table.nodes[k], 2.0 * radius / points as f64, &z));
    }
    canonical_sign(&mut z);
    Ok((value, z))
}

/// Per-σ integrals `∫ |K|^{p'} dy` (or `sup_y |K|`) and the matrices
/// `e^{I_{C*}(t, τ)}`.
struct TimeTable {
    weights: Vec<f64>,
    inner: Vec<f64>,
    exp_star: Vec<Matrix>,
    pc: f64,
}

impl TimeTable {
    fn build(spec: &IntegralOperatorSpec, points: usize, nodes: usize, sigma_lo: f64) -> Result<Self> {
        let pc = spec.p.conjugate().value();
        let ell = spec.kind.ell();
        let n = spec.cs.n();
        let hi = spec.t.sqrt();
        let d = (hi - sigma_lo) / nodes as f64;
        let rows: Vec<(f64, f64, Matrix)> = (0..nodes)
            .map(|j| -> Result<(f64, f64, Matrix)> {
                let sigma = sigma_lo + (j as f64 + 0.5) * d;
                let ev = window_evaluator(&spec.cs, spec.t, sigma * sigma, spec.quad_tol)?;
                let radius = spec.truncation * ev.integrals().max_std();
                let centre: Vec<f64> = spec.x.iter().zip(&ev.integrals().ib).map(|(a, b)| a + b).collect();
                let count = points.pow(n as u32);
                let mag = |k: usize| {
                    let y = grid_node(&centre, radius, points, k);
                    let diff: Vec<f64> = spec.x.iter().zip(&y).map(|(a, b)| a - b).collect();
                    kernel_scalar(&ev, &diff, ell).abs()
                };
                let inner = if pc.is_infinite() {
                    (0..count).map(mag).fold(0.0, f64::max)
                } else {
                    let h = 2.0 * radius / points as f64;
                    ordered_sum(count, |k| mag(k).powf(pc)) * h.powi(n as i32)
                };
                Ok((2.0 * sigma * d, inner, ev.integrals().exp_ic_star.clone()))
            })
            .collect::<Result<_>>()?;
        let mut weights = Vec::with_capacity(nodes);
        let mut inner = Vec::with_capacity(nodes);
        let mut exp_star = Vec::with_capacity(nodes);
        for (w, i, e) in rows {
            weights.push(w);
            inner.push(i);
            exp_star.push(e);
        }
        Ok(Self { weights, inner, exp_star, pc })
    }

    fn norm(&self, z: &[f64]) -> f64 {
        let mag = |j: usize| self.exp_star[j].matvec(z).iter().map(|v| v * v).sum::<f64>().sqrt();
        if self.pc.is_infinite() {
            return (0..self.inner.len()).map(|j| self.inner[j] * mag(j)).fold(0.0, f64::max);
        }
        let terms: Vec<f64> = (0..self.inner.len()).map(|j| self.weights[j] * self.inner[j] * mag(j).powf(self.pc)).collect();
        crate::quad::pairwise_sum(&terms).powf(1.0 / self.pc)
    }
}

fn nonhomogeneous_norm(spec: &IntegralOperatorSpec, points: usize, nodes: usize, sigma_lo: f64) -> Result<(f64, Vec<f64>)> {
    let table = TimeTable::build(spec, points, nodes, sigma_lo)?;
    let (mut z, value) = z_search(spec.cs.m(), spec.z_scan, |z| table.norm(z));
    canonical_sign(&mut z);
    Ok((value, z))
}

/// Operator norm by tensor-grid quadrature and a `z` search, with a
/// grid-refinement error estimate.
pub fn opnorm_bruteforce(spec: &IntegralOperatorSpec) -> Result<OracleResult> {
    spec.validate()?;
    let pc = spec.p.conjugate().value();
    let gradient = spec.kind.ell().is_some();
    let tail = tail_bound(spec.cs.n(), pc, spec.truncation, gradient);
    if tail > spec.tail_tol {
        return Err(Error::Truncation { bound: tail, tol: spec.tail_tol });
    }
    let ((value, argmax_z), (coarse, _)) = if spec.kind.is_nonhomogeneous() {
        (
            nonhomogeneous_norm(spec, spec.grid_points, spec.time_nodes, 0.0)?,
            nonhomogeneous_norm(spec, spec.coarse_points(), spec.time_nodes / 2, 0.0)?,
        )
    } else {
        (homogeneous_norm(spec, spec.grid_points)?, homogeneous_norm(spec, spec.coarse_points())?)
    };
    Ok(OracleResult { value, argmax_z, refinement_error: ((value - coarse) / value).abs(), tail_bound: tail })
}

/// Nonhomogeneous norm with the source restricted to `τ ≤ t − ε`; finite
/// even when the untruncated operator is unbounded.
pub fn opnorm_truncated(spec: &IntegralOperatorSpec, eps: f64) -> Result<f64> {
    spec.validate()?;
    if !spec.kind.is_nonhomogeneous() {
        return Err(domain("time truncation applies to nonhomogeneous operators only"));
    }
    if !(eps > 0.0 && eps < spec.t) {
        return Err(domain(format!("truncation eps must lie in (0, t), got {eps}")));
    }
    Ok(nonhomogeneous_norm(spec, spec.grid_points, spec.time_nodes, eps.sqrt())?.0)
}

/// Scalar profile multiplying the sign field in sign-aligned mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Profile {
    Unit,
    /// Indicator of cells within `cells` grid steps (per axis) of the peak of
    /// `|Kᵀz|`.
    Bump { cells: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtremalMode {
    /// `h = Kᵀz |Kᵀz|^{p'−2}`, normalized.
    PPower,
    /// `h = (Kᵀz / |Kᵀz|) · profile`, normalized.
    SignAligned(Profile),
}

#[derive(Clone, Debug)]
pub enum ExtremalData {
    Grid(GridFunction),
    /// Source with unit `‖·‖_{p,t}` by construction.
    Source(SourceFunction),
}

#[derive(Clone, Debug)]
pub struct ExtremalInput {
    pub mode: ExtremalMode,
    pub z: Vec<f64>,
    pub data: ExtremalData,
}

fn check_mode(p: Exponent, mode: ExtremalMode) -> Result<()> {
    if mode == ExtremalMode::PPower && p.is_one() {
        return Err(domain("the p-power extremal requires p > 1; use the sign-aligned mode for p = 1"));
    }
    Ok(())
}

fn shape(v: &[f64], pc: f64, mode: ExtremalMode, in_profile: bool, out: &mut [f64]) {
    let mag = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if mag == 0.0 {
        out.fill(0.0);
        return;
    }
    let factor = match mode {
        ExtremalMode::PPower => mag.powf(pc - 2.0),
        ExtremalMode::SignAligned(_) => {
            if in_profile {
                1.0 / mag
            } else {
                0.0
            }
        }
    };
    for (o, x) in out.iter_mut().zip(v) {
        *o = x * factor;
    }
}

/// Extremal initial data on the oracle grid (homogeneous kinds).
pub fn build_extremal(spec: &IntegralOperatorSpec, z: &[f64], mode: ExtremalMode) -> Result<ExtremalInput> {
    spec.validate()?;
    check_mode(spec.p, mode)?;
    if spec.kind.is_nonhomogeneous() {
        return build_extremal_source(spec, z, mode);
    }
    if z.len() != spec.cs.m() {
        return Err(dimension("z has the wrong dimension"));
    }
    let ev = KernelEvaluator::for_window(&spec.cs, 0.0, spec.t, spec.quad_tol)?;
    let ell = spec.kind.ell();
    let pc = spec.p.conjugate().value();
    let radius = spec.truncation * ev.integrals().max_std();
    let centre: Vec<f64> = spec.x.iter().zip(&ev.integrals().ib).map(|(a, b)| a + b).collect();
    let points = spec.grid_points;
    let table = KernelTable::build(&ev, &spec.x, ell, &centre, radius, points);
    let peak = table.argmax_node(z);
    let m = spec.cs.m();
    let g = ev.integrals().exp_ic.clone();
    let raw = GridFunction::from_fn(centre, radius, points, m, |y, out| {
        let diff: Vec<f64> = spec.x.iter().zip(y).map(|(a, b)| a - b).collect();
        let s = kernel_scalar(&ev, &diff, ell);
        let v: Vec<f64> = g.tr_matvec(z).into_iter().map(|x| x * s).collect();
        let inside = match mode {
            ExtremalMode::SignAligned(Profile::Bump { cells }) => {
                let h = 2.0 * radius / points as f64;
                y.iter().zip(&table.nodes[peak]).all(|(a, b)| ((a - b) / h).abs() <= cells as f64 + 1e-9)
            }
            _ => true,
        };
        shape(&v, pc, mode, inside, out);
    })?;
    let norm = raw.norm_p(spec.p);
    if norm == 0.0 {
        return Err(domain("extremal input vanishes on the grid"));
    }
    Ok(ExtremalInput { mode, z: z.to_vec(), data: ExtremalData::Grid(raw.scaled(1.0 / norm)) })
}

/// Extremal source `h(y, τ)` (nonhomogeneous kinds), normalized by the oracle
/// norm so that `‖h‖_{p,t} = 1`.
pub fn build_extremal_source(spec: &IntegralOperatorSpec, z: &[f64], mode: ExtremalMode) -> Result<ExtremalInput> {
    spec.validate()?;
    check_mode(spec.p, mode)?;
    if !spec.kind.is_nonhomogeneous() {
        return Err(domain("source extremals apply to nonhomogeneous operators"));
    }
    if mode != ExtremalMode::PPower && mode != ExtremalMode::SignAligned(Profile::Unit) {
        return Err(domain("bump profiles are only available for initial data"));
    }
    let pc = spec.p.conjugate().value();
    let table = TimeTable::build(spec, spec.grid_points, spec.time_nodes, 0.0)?;
    let norm = table.norm(z);
    let scale = if mode == ExtremalMode::PPower && !spec.p.is_infinite() { norm.powf(-pc / spec.p.value()) } else { 1.0 };
    let cs = spec.cs.clone();
    let x = spec.x.clone();
    let t = spec.t;
    let tol = spec.quad_tol;
    let ell = spec.kind.ell().map(<[f64]>::to_vec);
    let zz = z.to_vec();
    let m = cs.m();
    let f = SourceFunction::new(m, f64::INFINITY, move |y, tau, out| {
        let delta = t - tau;
        let Ok(ev) = window_evaluator(&cs, t, delta, tol) else {
            out.fill(0.0);
            return;
        };
        let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        let s = kernel_scalar(&ev, &diff, ell.as_deref());
        let v: Vec<f64> = ev.integrals().exp_ic.tr_matvec(&zz).into_iter().map(|q| q * s).collect();
        shape(&v, pc, mode, true, out);
        out.iter_mut().for_each(|o| *o *= scale);
    });
    Ok(ExtremalInput { mode, z: z.to_vec(), data: ExtremalData::Source(f) })
}

/// `|u(x, t)| / (sharp coefficient · ‖input‖_p)` for the operator's own
/// closed-form coefficient.
pub fn saturation_ratio(spec: &IntegralOperatorSpec, input: &ExtremalInput) -> Result<f64> {
    spec.validate()?;
    let settings = SharpSettings { quad_tol: spec.quad_tol, ..Default::default() };
    let ell = spec.kind.ell();
    match &input.data {
        ExtremalData::Grid(phi) => {
            let u = match ell {
                None => solve_homogeneous(&spec.cs, phi, &spec.x, spec.t, spec.quad_tol)?,
                Some(l) => directional_derivative(&spec.cs, Problem::Homogeneous { phi, tol: spec.quad_tol }, &spec.x, spec.t, l)?,
            };
            let sharp = match ell {
                None => sharp_h(&spec.cs, spec.p, spec.t, &settings)?,
                Some(l) => sharp_k_ell(&spec.cs, spec.p, spec.t, l, &settings)?,
            };
            Ok(u.norm() / (sharp.value * phi.norm_p(spec.p)))
        }
        ExtremalData::Source(f) => {
            let nh = NonhomogeneousSettings {
                time_nodes: spec.time_nodes,
                grid_points: spec.grid_points,
                truncation_sigmas: spec.truncation,
                quad_tol: spec.quad_tol,
            };
            let (u, sharp) = match ell {
                None => (solve_nonhomogeneous(&spec.cs, f, &spec.x, spec.t, &nh)?, sharp_n(&spec.cs, spec.p, spec.t, &settings)?),
                Some(l) => (
                    directional_derivative(&spec.cs, Problem::Nonhomogeneous { f, settings: &nh }, &spec.x, spec.t, l)?,
                    sharp_c_ell(&spec.cs, spec.p, spec.t, l, &settings)?,
                ),
            };
            if !sharp.convergent {
                return Err(domain("saturation is undefined for a divergent coefficient"));
            }
            Ok(u.norm() / sharp.value)
        }
    }
}

/// Saturation ratios of the extremal built with `mode` on successively
/// refined grids.
pub fn saturation_trend(spec: &IntegralOperatorSpec, z: &[f64], mode: ExtremalMode, grids: &[usize]) -> Result<Vec<(usize, f64)>> {
    grids
        .iter()
        .map(|&g| {
            let s = IntegralOperatorSpec { grid_points: g, ..spec.clone() };
            let input = build_extremal(&s, z, mode)?;
            Ok((g, saturation_ratio(&s, &input)?))
        })
        .collect()
}
