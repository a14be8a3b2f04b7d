//! Globally adaptive composite Gauss–Legendre quadrature.
//!
//! Each panel is integrated with the 7-point rule on the whole panel and on
//! both halves; the disagreement is the panel's error estimate. The panel
//! with the largest estimate is bisected until the accumulated estimate
//! meets the requested tolerance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const GL7_NODES: [f64; 7] = [
    -0.949_107_912_342_758_5,
    -0.741_531_185_599_394_4,
    -0.405_845_151_377_397_2,
    0.0,
    0.405_845_151_377_397_2,
    0.741_531_185_599_394_4,
    0.949_107_912_342_758_5,
];
const GL7_WEIGHTS: [f64; 7] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
    0.381_830_050_505_118_9,
    0.279_705_391_489_276_7,
    0.129_484_966_168_869_7,
];

/// Stopping rule for an adaptive run.
#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    /// Scale `abs` by `(b - a)(1 + sup|f|)`, the sup taken over all samples.
    pub scale_by_sup: bool,
    pub max_panels: usize,
}

impl Tolerance {
    pub fn relative(rel: f64) -> Self {
        Self { abs: 0.0, rel, scale_by_sup: false, max_panels: 4000 }
    }

    /// Absolute error `tol·(b−a)·(1+‖f‖∞)`.
    pub fn sup_scaled(tol: f64) -> Self {
        Self { abs: tol, rel: 0.0, scale_by_sup: true, max_panels: 4000 }
    }

    pub fn with_abs(mut self, abs: f64) -> Self {
        self.abs = abs;
        self
    }
}

/// Outcome of an adaptive run over a vector-valued integrand.
#[derive(Clone, Debug)]
pub struct VecQuadrature {
    pub value: Vec<f64>,
    /// Per-component accumulated error estimate.
    pub error: Vec<f64>,
    /// Final partition, sorted by left endpoint.
    pub panels: Vec<(f64, f64)>,
    pub converged: bool,
    pub sup: f64,
}

impl VecQuadrature {
    pub fn max_error(&self) -> f64 {
        self.error.iter().fold(0.0, |m: f64, e| m.max(*e))
    }
}

/// Outcome of an adaptive run over a scalar integrand.
#[derive(Clone, Copy, Debug)]
pub struct ScalarQuadrature {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
    pub converged: bool,
}

struct Panel {
    a: f64,
    b: f64,
    value: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
    error: Vec<f64>,
    key: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.key.total_cmp(&other.key) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.total_cmp(&other.key).then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Call `visit(x, w)` for the 7-point rule on `[a, b]`.
pub fn gl7_nodes(a: f64, b: f64, mut visit: impl FnMut(f64, f64)) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    for (x, w) in GL7_NODES.iter().zip(GL7_WEIGHTS.iter()) {
        visit(mid + half * x, half * w);
    }
}

struct Integrator<F> {
    f: F,
    dim: usize,
    buf: Vec<f64>,
    sup: f64,
}

impl<F: FnMut(f64, &mut [f64])> Integrator<F> {
    fn gl7(&mut self, a: f64, b: f64) -> Vec<f64> {
        let mut acc = vec![0.0; self.dim];
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (x, w) in GL7_NODES.iter().zip(GL7_WEIGHTS.iter()) {
            (self.f)(mid + half * x, &mut self.buf);
            for (s, v) in acc.iter_mut().zip(&self.buf) {
                self.sup = self.sup.max(v.abs());
                *s += half * w * v;
            }
        }
        acc
    }

    fn panel(&mut self, a: f64, b: f64, whole: Vec<f64>) -> Panel {
        let m = 0.5 * (a + b);
        let left = self.gl7(a, m);
        let right = self.gl7(m, b);
        let value: Vec<f64> = left.iter().zip(&right).map(|(l, r)| l + r).collect();
        let error: Vec<f64> = value.iter().zip(&whole).map(|(v, w)| (v - w).abs()).collect();
        let splittable = (b - a) > 64.0 * f64::EPSILON * a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
        let key = if splittable { error.iter().fold(0.0, |acc: f64, e| acc.max(*e)) } else { -1.0 };
        Panel { a, b, value, left, right, error, key }
    }
}

/// Adaptive integration of a vector-valued integrand over the partition
/// given by `breaks` (at least two increasing points).
pub fn integrate_vec<F>(f: F, dim: usize, breaks: &[f64], tol: Tolerance) -> VecQuadrature
where
    F: FnMut(f64, &mut [f64]),
{
    assert!(breaks.len() >= 2, "need at least one interval");
    let length = breaks[breaks.len() - 1] - breaks[0];
    let mut it = Integrator { f, dim, buf: vec![0.0; dim], sup: 0.0 };
    let mut heap = BinaryHeap::new();
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let whole = it.gl7(w[0], w[1]);
            heap.push(it.panel(w[0], w[1], whole));
        }
    }

    let totals = |heap: &BinaryHeap<Panel>| -> (Vec<f64>, Vec<f64>) {
        let mut v = vec![0.0; dim];
        let mut e = vec![0.0; dim];
        for p in heap.iter() {
            for i in 0..dim {
                v[i] += p.value[i];
                e[i] += p.error[i];
            }
        }
        (v, e)
    };

    let mut converged = false;
    loop {
        let (value, error) = totals(&heap);
        let abs = if tol.scale_by_sup { tol.abs * length * (1.0 + it.sup) } else { tol.abs };
        let ok = value.iter().zip(&error).all(|(v, e)| *e <= abs.max(tol.rel * v.abs()));
        if ok {
            converged = true;
            break;
        }
        if heap.len() >= tol.max_panels {
            break;
        }
        let worst = heap.pop().expect("nonempty");
        if worst.key < 0.0 {
            heap.push(worst);
            break;
        }
        let m = 0.5 * (worst.a + worst.b);
        let lp = it.panel(worst.a, m, worst.left);
        let rp = it.panel(m, worst.b, worst.right);
        heap.push(lp);
        heap.push(rp);
    }

    let mut panels: Vec<Panel> = heap.into_vec();
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut value = vec![0.0; dim];
    let mut error = vec![0.0; dim];
    for i in 0..dim {
        let comps: Vec<f64> = panels.iter().map(|p| p.value[i]).collect();
        value[i] = pairwise_sum(&comps);
        error[i] = panels.iter().map(|p| p.error[i]).sum();
    }
    VecQuadrature {
        value,
        error,
        panels: panels.iter().map(|p| (p.a, p.b)).collect(),
        converged,
        sup: it.sup,
    }
}

/// Adaptive integration of a scalar integrand on `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> ScalarQuadrature {
    let q = integrate_vec(|x, out: &mut [f64]| out[0] = f(x), 1, &[a, b], tol);
    ScalarQuadrature { value: q.value[0], error: q.error[0], panels: q.panels.len(), converged: q.converged }
}

/// Pairwise summation. The result depends only on the order of `xs`, never
/// on how the terms were produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl7_is_exact_for_degree_13() {
        let q = integrate(|x| x.powi(13) + 3.0 * x.powi(6), 0.0, 2.0, Tolerance::relative(1e-14));
        let exact = 2f64.powi(14) / 14.0 + 3.0 * 2f64.powi(7) / 7.0;
        assert!((q.value - exact).abs() < 1e-11 * exact);
        assert_eq!(q.panels, 1);
    }

    #[test]
    fn smooth_transcendental() {
        let q = integrate(f64::exp, 0.0, 1.0, Tolerance::relative(1e-13));
        assert!((q.value - (std::f64::consts::E - 1.0)).abs() < 1e-13);
        assert!(q.converged);
    }

    #[test]
    fn endpoint_singularity_is_resolved() {
        // ∫₀¹ x^{-1/2} dx = 2.
        let q = integrate(|x| x.powf(-0.5), 0.0, 1.0, Tolerance::relative(1e-9));
        assert!((q.value - 2.0).abs() < 1e-8, "{q:?}");
    }

    #[test]
    fn kink_with_breakpoints() {
        let q = integrate_vec(|x, o: &mut [f64]| o[0] = (x - 0.3).abs(), 1, &[0.0, 0.3, 1.0], Tolerance::relative(1e-14));
        assert!((q.value[0] - (0.045 + 0.245)).abs() < 1e-15);
    }

    #[test]
    fn sup_scaled_tolerance() {
        let q = integrate_vec(
            |x, o: &mut [f64]| {
                o[0] = (10.0 * x).sin();
                o[1] = 1.0;
            },
            2,
            &[0.0, 3.0],
            Tolerance::sup_scaled(1e-12),
        );
        assert!(q.converged);
        assert!(q.max_error() <= 1e-12 * 3.0 * 2.0);
        assert!((q.value[0] - (1.0 - 30f64.cos()) / 10.0).abs() < 1e-11);
        assert!((q.value[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn pairwise_matches_naive() {
        let xs: Vec<f64> = (0..1000).map(|i| 1.0 / (i as f64 + 1.0)).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-12);
    }
}
