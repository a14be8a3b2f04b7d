//! Acceptance suite: one PASS/FAIL line per criterion.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sharp_parabolic::kernels::{eval_g, eval_grad_g, eval_p};
use sharp_parabolic::oracle::{opnorm_bruteforce, opnorm_truncated, IntegralOperatorSpec, OperatorKind};
use sharp_parabolic::sharp::identities::{gamma_moment, radial_gaussian_moment, sphere_angle_integral};
use sharp_parabolic::sharp::single::{c_inf, h_inf, k_inf, n_inf};
use sharp_parabolic::sharp::{
    compute, converges_c, Convergence, converges_n, sharp_c, sharp_c_ell, sharp_h, sharp_k, sharp_k_ell, sharp_n, Exponent, SharpKind,
    SharpRequest, SharpSettings,
};
use sharp_parabolic::solve::{
    directional_derivative, solve_homogeneous, solve_nonhomogeneous, space_time_norm, GridFunction, NonhomogeneousSettings,
    Problem, SourceFunction,
};
use sharp_parabolic::{CoefficientPath, CoefficientSet, Matrix, SymMatrix};

struct Outcome {
    pass: bool,
    detail: String,
}

fn exponent(p: f64) -> Exponent {
    if p.is_infinite() {
        Exponent::INFINITY
    } else {
        Exponent::new(p).unwrap()
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn constant(a: &[&[f64]], b: &[f64], c: &[&[f64]]) -> CoefficientSet {
    CoefficientSet::constant(1.0, &SymMatrix::from_rows(a).unwrap(), b, &Matrix::from_rows(c).unwrap()).unwrap()
}

/// Constant-coefficient presets covering n, m ∈ {1, 2}.
fn presets() -> Vec<(&'static str, CoefficientSet)> {
    vec![
        ("heat n1m1", CoefficientSet::heat(1, 1, 1.0).unwrap()),
        ("scalar n1m1", constant(&[&[2.0]], &[0.5], &[&[0.3]])),
        ("nilpotent n1m2", constant(&[&[1.0]], &[0.7], &[&[0.0, 1.0], &[0.0, 0.0]])),
        ("coupled n1m2", constant(&[&[1.5]], &[-0.4], &[&[0.2, 0.5], &[-0.3, 0.1]])),
        ("diag14 n2m1", constant(&[&[1.0, 0.0], &[0.0, 4.0]], &[0.3, -0.2], &[&[0.0]])),
        ("full n2m1", constant(&[&[2.0, 0.5], &[0.5, 1.0]], &[0.0, 0.0], &[&[0.1]])),
        ("diag14 nilpotent n2m2", constant(&[&[1.0, 0.0], &[0.0, 4.0]], &[0.25, 0.5], &[&[0.0, 1.0], &[0.0, 0.0]])),
    ]
}

fn directions(n: usize) -> Vec<Vec<f64>> {
    if n == 1 {
        vec![vec![1.0], vec![-1.0]]
    } else {
        vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.6, 0.8]]
    }
}

fn eval_point(n: usize) -> Vec<f64> {
    [0.3, -0.2][..n].to_vec()
}

const T_EVAL: f64 = 0.8;

fn criterion_1() -> Outcome {
    let settings = SharpSettings::default();
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    let mut failures = Vec::new();
    for (name, cs) in presets() {
        let n = cs.n();
        for p in [1.0, 2.0, 3.0, f64::INFINITY] {
            let p = exponent(p);
            let mut kinds = vec![(OperatorKind::Homogeneous, sharp_h(&cs, p, T_EVAL, &settings).unwrap().value)];
            for ell in directions(n) {
                let v = sharp_k_ell(&cs, p, T_EVAL, &ell, &settings).unwrap().value;
                kinds.push((OperatorKind::HomogeneousGradient { ell }, v));
            }
            for (kind, closed) in kinds {
                let spec = IntegralOperatorSpec::new(kind.clone(), cs.clone(), eval_point(n), T_EVAL, p);
                let oracle = opnorm_bruteforce(&spec).unwrap();
                let d = rel(oracle.value, closed);
                let tol = 1e-3f64.max(oracle.tail_bound);
                cases += 1;
                worst = worst.max(d);
                if d > tol {
                    failures.push(format!("{name} p={p} {kind:?}: closed {closed:.9} oracle {:.9}", oracle.value));
                }
            }
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!("{cases} cases, worst rel diff {worst:.2e} (tol 1e-3) {}", failures.join("; ")),
    }
}

fn criterion_2() -> Outcome {
    let settings = SharpSettings::default();
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    let mut failures = Vec::new();
    for (name, cs) in presets() {
        let n = cs.n();
        let x = eval_point(n);
        let conv_n: Vec<f64> = [2.0, 3.0, f64::INFINITY].into_iter().filter(|&p| 2.0 * p > n as f64 + 2.0).collect();
        let mut checks: Vec<(OperatorKind, Exponent, f64)> = Vec::new();
        for p in conv_n {
            let p = exponent(p);
            checks.push((OperatorKind::Nonhomogeneous, p, sharp_n(&cs, p, T_EVAL, &settings).unwrap().value));
        }
        for ell in directions(n).into_iter().take(2) {
            let v = sharp_c_ell(&cs, Exponent::INFINITY, T_EVAL, &ell, &settings).unwrap().value;
            checks.push((OperatorKind::NonhomogeneousGradient { ell }, Exponent::INFINITY, v));
        }
        for (kind, p, closed) in checks {
            let spec = IntegralOperatorSpec::new(kind.clone(), cs.clone(), x.clone(), T_EVAL, p);
            let oracle = opnorm_bruteforce(&spec).unwrap();
            let d = rel(oracle.value, closed);
            cases += 1;
            worst = worst.max(d);
            if d > 5e-3 {
                failures.push(format!("{name} p={p} {kind:?}: closed {closed:.9} oracle {:.9}", oracle.value));
            }
        }
        // Divergent cases: flagged, and the truncated oracle grows as the cut shrinks.
        let mut divergent: Vec<(OperatorKind, Exponent)> = vec![(OperatorKind::Nonhomogeneous, Exponent::ONE)];
        if n == 2 {
            divergent.push((OperatorKind::Nonhomogeneous, exponent(2.0)));
        }
        for p in [1.0, 2.0, 3.0].into_iter().filter(|&p| p <= n as f64 + 2.0) {
            divergent.push((OperatorKind::NonhomogeneousGradient { ell: directions(n)[0].clone() }, exponent(p)));
        }
        for (kind, p) in divergent {
            let flagged = match &kind {
                OperatorKind::Nonhomogeneous => sharp_n(&cs, p, T_EVAL, &settings).unwrap(),
                OperatorKind::NonhomogeneousGradient { ell } => sharp_c_ell(&cs, p, T_EVAL, ell, &settings).unwrap(),
                _ => unreachable!(),
            };
            cases += 1;
            if flagged.convergent || flagged.value.is_finite() {
                failures.push(format!("{name} p={p} {kind:?}: not flagged divergent"));
                continue;
            }
            let mut spec = IntegralOperatorSpec::new(kind.clone(), cs.clone(), x.clone(), T_EVAL, p);
            if n == 2 {
                spec.grid_points = 81;
            }
            let ladder: Vec<f64> = [1e-1, 1e-2, 1e-3, 1e-4].iter().map(|&e| opnorm_truncated(&spec, e).unwrap()).collect();
            if !ladder.windows(2).all(|w| w[1] > w[0]) {
                failures.push(format!("{name} p={p} {kind:?}: truncated ladder not increasing {ladder:?}"));
            }
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!("{cases} cases, worst convergent rel diff {worst:.2e} (tol 5e-3) {}", failures.join("; ")),
    }
}

/// Composite Simpson rule on `[a, b]` with `k` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, k: usize) -> f64 {
    let h = (b - a) / k as f64;
    let mut s = f(a) + f(b);
    for i in 1..k {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

// Printed reference digits are compared as literals.
#[allow(clippy::approx_constant)]
fn criterion_3() -> Outcome {
    let cs = CoefficientSet::heat(1, 1, 1.0).unwrap();
    let s = SharpSettings::default();
    let g = |x: f64, d: f64| (-x * x / (4.0 * d)).exp() / (4.0 * PI * d).sqrt();
    let dg = |x: f64, d: f64| x / (2.0 * d) * g(x, d);
    let l = 40.0;
    // Independent quadrature of kernel norms; the τ-integrals use δ = σ².
    let h1 = g(0.0, 1.0);
    let h2 = simpson(|x| g(x, 1.0).powi(2), -l, l, 20000).sqrt();
    let kinf = simpson(|x| dg(x, 1.0).abs(), 0.0, l, 20000) * 2.0;
    let k2 = simpson(|x| dg(x, 1.0).powi(2), -l, l, 20000).sqrt();
    let ninf = simpson(|sig| 2.0 * sig * simpson(|x| g(x, sig * sig), -l * sig, l * sig, 2000), 1e-9, 1.0, 200);
    let n2 = simpson(|sig| 2.0 * sig * simpson(|x| g(x, sig * sig).powi(2), -l * sig, l * sig, 2000), 1e-12, 1.0, 200).sqrt();
    let cinf = simpson(|sig| 2.0 * sig * 2.0 * simpson(|x| dg(x, sig * sig), 0.0, l * sig, 4000), 1e-9, 1.0, 200);
    let inf = Exponent::INFINITY;
    let two = exponent(2.0);
    // Closed forms from the module examples, and their printed digits.
    let h2_closed = (2.0 * PI.sqrt()).powf(-0.5) * 2f64.powf(-0.25);
    let rows = [
        ("H_1", sharp_h(&cs, Exponent::ONE, 1.0, &s).unwrap().value, h1, 1.0 / (2.0 * PI.sqrt()), 0.282095),
        ("H_2", sharp_h(&cs, two, 1.0, &s).unwrap().value, h2, h2_closed, 0.446620),
        ("K_inf", sharp_k(&cs, inf, 1.0, &s).unwrap().value, kinf, 1.0 / PI.sqrt(), 0.564190),
        ("K_2", sharp_k(&cs, two, 1.0, &s).unwrap().value, k2, h2_closed / 2.0, 0.223310),
        ("N_inf", sharp_n(&cs, inf, 1.0, &s).unwrap().value, ninf, 1.0, 1.0),
        ("N_2", sharp_n(&cs, two, 1.0, &s).unwrap().value, n2, h2_closed * 2f64.sqrt(), 0.631620),
        ("C_inf", sharp_c(&cs, inf, 1.0, &s).unwrap().value, cinf, 2.0 / PI.sqrt(), 1.128379),
    ];
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for (name, value, quad, closed, printed) in rows {
        let d = (value - closed).abs().max((quad - closed).abs());
        worst = worst.max(d);
        // The printed digits are rounded to about six figures.
        if d > 1e-6 || (closed - printed).abs() > 5e-6 {
            failures.push(format!("{name}: sharp {value:.9} quadrature {quad:.9} closed form {closed:.9} printed {printed}"));
        }
    }
    Outcome { pass: failures.is_empty(), detail: format!("7 constants, worst abs diff {worst:.2e} (tol 1e-6) {}", failures.join("; ")) }
}

fn criterion_4() -> Outcome {
    use sharp_parabolic::oracle::{build_extremal, saturation_ratio, ExtremalMode};
    let cs = CoefficientSet::heat(1, 1, 1.0).unwrap();
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    for (label, kind) in [("H_2", OperatorKind::Homogeneous), ("K_2", OperatorKind::HomogeneousGradient { ell: vec![1.0] })] {
        let mut ratios = Vec::new();
        for points in [513, 1025] {
            let mut spec = IntegralOperatorSpec::new(kind.clone(), cs.clone(), vec![0.0], 1.0, exponent(2.0));
            spec.grid_points = points;
            spec.truncation = 8.0;
            let input = build_extremal(&spec, &[1.0], ExtremalMode::PPower).unwrap();
            ratios.push(saturation_ratio(&spec, &input).unwrap());
        }
        summary.push(format!("{label} {:.12}/{:.12}", ratios[0], ratios[1]));
        if ratios[0] < 0.99 || ratios[1] < 0.999 || ratios.iter().any(|r| *r > 1.0 + 1e-6) {
            failures.push(label);
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!("ratios at 513/1025 points: {} (need >= 0.99 / >= 0.999, <= 1+1e-6)", summary.join(", ")),
    }
}

fn affine(base: &[f64], slope: &[f64]) -> CoefficientPath {
    CoefficientPath::Affine { base: base.to_vec(), slope: slope.to_vec() }
}

fn max_abs(m: &Matrix) -> f64 {
    m.max_abs()
}

fn criterion_5() -> Outcome {
    const TOL: f64 = 1e-13;
    let mut failures = Vec::new();
    // Scalar case with time-dependent A, b, c, and a commuting C(t) = α(t)I + β(t)M.
    let scalar = CoefficientSet::new(
        2,
        1,
        2.0,
        affine(&[1.0, 0.3, 0.3, 2.0], &[0.5, -0.1, -0.1, 0.4]),
        affine(&[0.2, -0.5], &[0.3, 0.1]),
        affine(&[0.4], &[-0.3]),
    )
    .unwrap();
    let commuting = CoefficientSet::new(
        1,
        2,
        2.0,
        affine(&[1.2], &[0.6]),
        affine(&[0.5], &[-0.2]),
        affine(&[0.1, 1.0, 0.0, 0.1], &[0.2, 0.5, 0.0, 0.2]),
    )
    .unwrap();
    let mut worst_pde: f64 = 0.0;
    let mut worst_grad: f64 = 0.0;
    for cs in [&scalar, &commuting] {
        let n = cs.n();
        let (ht, hx) = (1e-4, 1e-3);
        for (x, t) in [(vec![0.3, -0.4], 0.7), (vec![-1.1, 0.6], 1.3), (vec![0.05, 0.1], 0.4)] {
            let x = &x[..n];
            let g = |x: &[f64], t: f64| eval_g(cs, x, t, TOL).unwrap().matrix;
            let shift = |j: usize, h: f64| -> Vec<f64> {
                let mut y = x.to_vec();
                y[j] += h;
                y
            };
            let dt = g(x, t + ht).sub(&g(x, t - ht)).scaled(0.5 / ht);
            let g0 = g(x, t);
            let a = cs.a_at(t).unwrap();
            let b = cs.b_at(t);
            let mut rhs = cs.c_at(t).matmul(&g0);
            for j in 0..n {
                let dj = g(&shift(j, hx), t).sub(&g(&shift(j, -hx), t)).scaled(0.5 / hx);
                rhs = rhs.add(&dj.scaled(b[j]));
                for k in 0..n {
                    let second = if j == k {
                        g(&shift(j, hx), t).sub(&g0.scaled(2.0)).add(&g(&shift(j, -hx), t)).scaled(1.0 / (hx * hx))
                    } else {
                        let mut pp = x.to_vec();
                        let (mut pm, mut mp, mut mm) = (x.to_vec(), x.to_vec(), x.to_vec());
                        pp[j] += hx;
                        pp[k] += hx;
                        pm[j] += hx;
                        pm[k] -= hx;
                        mp[j] -= hx;
                        mp[k] += hx;
                        mm[j] -= hx;
                        mm[k] -= hx;
                        g(&pp, t).sub(&g(&pm, t)).sub(&g(&mp, t)).add(&g(&mm, t)).scaled(1.0 / (4.0 * hx * hx))
                    };
                    rhs = rhs.add(&second.scaled(a[(j, k)]));
                }
            }
            let scale = max_abs(&dt).max(max_abs(&rhs)).max(max_abs(&cs.c_at(t).matmul(&g0)));
            worst_pde = worst_pde.max(max_abs(&dt.sub(&rhs)) / scale);
            let grad = eval_grad_g(cs, x, t, TOL).unwrap();
            for j in 0..n {
                let h = 1e-4;
                let fd = g(&shift(j, h), t).sub(&g(&shift(j, -h), t)).scaled(0.5 / h);
                worst_grad = worst_grad.max(max_abs(&fd.sub(&grad[j].matrix)) / max_abs(&g0).max(max_abs(&fd)));
            }
        }
    }
    if worst_pde > 1e-4 {
        failures.push(format!("PDE residual {worst_pde:.2e}"));
    }
    if worst_grad > 1e-6 {
        failures.push(format!("gradient {worst_grad:.2e}"));
    }

    // Mass identity on a midpoint grid.
    let mut worst_mass: f64 = 0.0;
    for cs in presets().into_iter().map(|p| p.1).chain([scalar.clone(), commuting.clone()]) {
        let t = 0.8;
        let w = sharp_parabolic::integrate_coefficients(&cs, 0.0, t, TOL).unwrap();
        let r = 10.0 * w.max_std();
        let points = if cs.n() == 1 { 801 } else { 301 };
        let centre: Vec<f64> = w.ib.iter().map(|v| -v).collect();
        let grid = GridFunction::from_fn(centre, r, points, 1, |_, o| o[0] = 1.0).unwrap();
        let mut mass = Matrix::zeros(cs.m(), cs.m());
        for k in 0..grid.node_count() {
            mass = mass.add(&eval_g(&cs, &grid.node(k), t, TOL).unwrap().matrix.scaled(grid.cell_volume()));
        }
        worst_mass = worst_mass.max(mass.max_abs_diff(&w.exp_ic) / w.exp_ic.max_abs());
    }
    if worst_mass > 1e-8 {
        failures.push(format!("mass {worst_mass:.2e}"));
    }

    // Chapman–Kolmogorov with constant C (A, b time-dependent).
    let ck = CoefficientSet::new(
        1,
        2,
        2.0,
        affine(&[1.0], &[0.5]),
        affine(&[0.3], &[0.2]),
        CoefficientPath::Constant(vec![0.2, 0.7, -0.4, -0.1]),
    )
    .unwrap();
    let (s, t) = (0.5, 1.2);
    let mut worst_ck: f64 = 0.0;
    for x in [0.0, 0.8, -1.5] {
        let lhs = eval_g(&ck, &[x], t, TOL).unwrap().matrix;
        let l = 20.0;
        let k = 8000;
        let h = 2.0 * l / k as f64;
        let mut acc = Matrix::zeros(2, 2);
        for i in 0..k {
            let y = -l + (i as f64 + 0.5) * h;
            let pm = eval_p(&ck, &[x - y], t, s, TOL).unwrap().matrix;
            let gm = eval_g(&ck, &[y], s, TOL).unwrap().matrix;
            acc = acc.add(&pm.matmul(&gm).scaled(h));
        }
        worst_ck = worst_ck.max(acc.max_abs_diff(&lhs) / lhs.max_abs());
    }
    if worst_ck > 1e-6 {
        failures.push(format!("Chapman-Kolmogorov {worst_ck:.2e}"));
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!(
            "PDE residual {worst_pde:.2e} (tol 1e-4), gradient {worst_grad:.2e} (tol 1e-6), mass {worst_mass:.2e} (tol 1e-8), Chapman-Kolmogorov {worst_ck:.2e} (tol 1e-6) {}",
            failures.join("; ")
        ),
    }
}

fn all_kinds(cs: &CoefficientSet, p: Exponent, t: f64, settings: &SharpSettings) -> Vec<(SharpKind, f64)> {
    let ell = directions(cs.n()).pop().unwrap();
    SharpKind::ALL
        .iter()
        .map(|&kind| {
            let req = SharpRequest { kind, p, t, ell: kind.needs_ell().then(|| ell.clone()), settings: *settings };
            (kind, compute(cs, &req).unwrap().value)
        })
        .collect()
}

fn criterion_6() -> Outcome {
    let settings = SharpSettings { quad_tol: 1e-12, ..Default::default() };
    let mut failures = Vec::new();
    let mut worst_limit: f64 = 0.0;
    for (name, cs) in presets().into_iter().filter(|(name, _)| *name != "scalar n1m1") {
        let at_inf = all_kinds(&cs, Exponent::INFINITY, T_EVAL, &settings);
        let at_big = all_kinds(&cs, exponent(1e3), T_EVAL, &settings);
        for ((kind, a), (_, b)) in at_inf.iter().zip(&at_big) {
            let d = rel(*b, *a);
            worst_limit = worst_limit.max(d);
            if d > 0.01 {
                failures.push(format!("{name} {kind}: inf {a:.6} vs 1e3 {b:.6}"));
            }
        }
    }

    let mut worst_single: f64 = 0.0;
    let single_presets: Vec<(Box<dyn Fn(f64) -> f64>, Box<dyn Fn(f64) -> f64>, &str)> = vec![
        (Box::new(|_| 1.5), Box::new(|_| 0.4), "constant"),
        (Box::new(|t| 1.0 + 0.5 * t), Box::new(|t| 0.3 - 0.2 * t), "affine"),
    ];
    for (a, c, label) in &single_presets {
        for n in [1usize, 2] {
            let (a0, a1) = (a(0.0), a(1.0) - a(0.0));
            let (c0, c1) = (c(0.0), c(1.0) - c(0.0));
            let eye: Vec<f64> = (0..n * n).map(|k| if k % (n + 1) == 0 { 1.0 } else { 0.0 }).collect();
            let cs = CoefficientSet::new(
                n,
                1,
                1.0,
                affine(&eye.iter().map(|e| e * a0).collect::<Vec<_>>(), &eye.iter().map(|e| e * a1).collect::<Vec<_>>()),
                CoefficientPath::zeros(n),
                affine(&[c0], &[c1]),
            )
            .unwrap();
            let ell = directions(n).pop().unwrap();
            let t = 0.9;
            let inf = Exponent::INFINITY;
            let pairs = [
                ("H_inf", sharp_h(&cs, inf, t, &settings).unwrap().value, h_inf(c, t)),
                ("K_inf", sharp_k_ell(&cs, inf, t, &ell, &settings).unwrap().value, k_inf(a, c, t)),
                ("N_inf", sharp_n(&cs, inf, t, &settings).unwrap().value, n_inf(c, t)),
                ("C_inf", sharp_c_ell(&cs, inf, t, &ell, &settings).unwrap().value, c_inf(a, c, t)),
            ];
            for (name, general, single) in pairs {
                let d = rel(general, single);
                worst_single = worst_single.max(d);
                if d > 1e-10 {
                    failures.push(format!("{label} n={n} {name}: general {general:.15} single {single:.15}"));
                }
            }
        }
    }

    let mut b_checked = 0;
    let base = constant(&[&[1.0, 0.2], &[0.2, 3.0]], &[0.0, 0.0], &[&[0.1, 0.6], &[-0.2, 0.0]]);
    let drifted = base.with_drift(affine(&[1.3, -0.7], &[0.4, 2.0])).unwrap();
    for p in [1.0, 2.0, 3.0, 5.0, f64::INFINITY] {
        let a = all_kinds(&base, exponent(p), T_EVAL, &settings);
        let b = all_kinds(&drifted, exponent(p), T_EVAL, &settings);
        for ((kind, x), (_, y)) in a.iter().zip(&b) {
            b_checked += 1;
            if x.to_bits() != y.to_bits() {
                failures.push(format!("b-dependence in {kind} at p={p}: {x} vs {y}"));
            }
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!(
            "p=1e3 limit worst {worst_limit:.2e} (tol 1e-2), single-equation worst {worst_single:.2e} (tol 1e-10), {b_checked} b-invariance checks bit-identical {}",
            failures.join("; ")
        ),
    }
}

fn criterion_7() -> Outcome {
    let mut failures = Vec::new();
    for n in 1..=3usize {
        let a: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.7 } else { 0.0 }).collect()).collect();
        let cs = CoefficientSet::constant(1.0, &SymMatrix::from_rows(&a).unwrap(), &vec![0.0; n], &Matrix::from_rows(&[[0.2]]).unwrap())
            .unwrap();
        let nf = n as f64;
        type Test = fn(&CoefficientSet, Exponent) -> sharp_parabolic::Result<Convergence>;
        for (label, thr, f) in [("N", (nf + 2.0) / 2.0, converges_n as Test), ("C", nf + 2.0, converges_c as Test)] {
            let below = f(&cs, exponent(thr * (1.0 - 1e-12))).unwrap().convergent;
            let at = f(&cs, exponent(thr)).unwrap().convergent;
            let above = f(&cs, exponent(thr * (1.0 + 1e-12))).unwrap().convergent;
            if below || at || !above {
                failures.push(format!("{label} n={n}: below {below} at {at} above {above}"));
            }
        }
    }
    Outcome { pass: failures.is_empty(), detail: format!("n = 1, 2, 3; strict flips at (n+2)/2 and n+2 {}", failures.join("; ")) }
}

fn criterion_8() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let vs = [vec![0.7], vec![0.6, -1.1], vec![0.3, -0.5, 0.9]];
    for n in 1..=3usize {
        for pc in [1.0, 2.0, 4.0] {
            let checks = [
                radial_gaussian_moment(n, pc),
                gamma_moment(n as f64 - 1.0 + pc, pc / 4.0),
                gamma_moment(n as f64 - 1.0, pc / 4.0),
                sphere_angle_integral(pc, &vs[n - 1]),
            ];
            for c in checks {
                count += 1;
                worst = worst.max(c.rel_diff());
            }
        }
    }
    Outcome { pass: worst <= 1e-8, detail: format!("{count} identities, worst rel diff {worst:.2e} (tol 1e-8)") }
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if s > 0.1 && s <= 1.0 {
            return v.into_iter().map(|x| x / s).collect();
        }
    }
}

struct Bump {
    centre: Vec<f64>,
    width: f64,
    amp: Vec<f64>,
    freq: f64,
}

fn random_bumps(rng: &mut ChaCha8Rng, m: usize, around: &[f64]) -> Vec<Bump> {
    (0..rng.gen_range(1..4))
        .map(|_| Bump {
            centre: around.iter().map(|c| c + rng.gen_range(-1.5..1.5)).collect(),
            width: rng.gen_range(0.3..1.5),
            amp: (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            freq: rng.gen_range(0.0..4.0),
        })
        .collect()
}

fn bump_eval(bumps: &[Bump], y: &[f64], tau: f64, out: &mut [f64]) {
    out.fill(0.0);
    for b in bumps {
        let r2: f64 = y.iter().zip(&b.centre).map(|(a, c)| (a - c).powi(2)).sum();
        let s = (-r2 / (b.width * b.width)).exp() * (1.0 + 0.5 * (b.freq * tau).sin());
        for (o, a) in out.iter_mut().zip(&b.amp) {
            *o += a * s;
        }
    }
}

fn criterion_9() -> Outcome {
    const TRIALS: usize = 200;
    let settings = SharpSettings::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let sets = presets();
    let mut worst = [0.0f64; 4];
    let mut failures = Vec::new();
    for trial in 0..TRIALS {
        let (_, cs) = &sets[trial % sets.len()];
        let (n, m) = (cs.n(), cs.m());
        let t = rng.gen_range(0.05..1.0);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let ell = random_unit(&mut rng, n);
        let p = exponent([1.0, 1.5, 2.0, 3.0, 6.0, f64::INFINITY][rng.gen_range(0..6)]);
        let w = sharp_parabolic::integrate_coefficients(cs, 0.0, t, 1e-12).unwrap();
        let centre: Vec<f64> = x.iter().zip(&w.ib).map(|(a, b)| a + b).collect();
        let radius = 9.0 * w.max_std();
        let points: usize = if n == 1 { 257 } else { 65 };
        let bumps = random_bumps(&mut rng, m, &centre);
        let noise = rng.gen_range(0.0..0.5);
        let mut jitter = ChaCha8Rng::seed_from_u64(trial as u64);
        let table: Vec<f64> = (0..points.pow(n as u32) * m).map(|_| noise * jitter.gen_range(-1.0..1.0)).collect();
        let smooth = GridFunction::from_fn(centre.clone(), radius, points, m, |y, o| bump_eval(&bumps, y, 0.0, o)).unwrap();
        let rough = GridFunction::new(centre.clone(), radius, points, m, table).unwrap();
        let phi = smooth.combine(1.0, &rough, 1.0).unwrap();
        let norm = phi.norm_p(p);

        let u = solve_homogeneous(cs, &phi, &x, t, 1e-12).unwrap();
        let h = sharp_h(cs, p, t, &settings).unwrap().value;
        let r1 = u.norm() / (h * norm);
        let du = directional_derivative(cs, Problem::Homogeneous { phi: &phi, tol: 1e-12 }, &x, t, &ell).unwrap();
        let k = sharp_k_ell(cs, p, t, &ell, &settings).unwrap().value;
        let r2 = du.norm() / (k * norm);

        // Nonhomogeneous bounds, on convergent exponents.
        let pn = exponent([2.0, 3.0, 6.0, f64::INFINITY][rng.gen_range(if n == 1 { 0 } else { 1 }..4)]);
        let src_bumps = random_bumps(&mut rng, m, &centre);
        let f = SourceFunction::new(m, f64::INFINITY, move |y, tau, o| bump_eval(&src_bumps, y, tau, o));
        let nh = NonhomogeneousSettings { time_nodes: 32, grid_points: if n == 1 { 65 } else { 25 }, ..Default::default() };
        let box_radius = radius + 8.0;
        let fnorm = space_time_norm(&f, &centre, box_radius, if n == 1 { 401 } else { 101 }, t, 64, pn);
        let un = solve_nonhomogeneous(cs, &f, &x, t, &nh).unwrap();
        let nv = sharp_n(cs, pn, t, &settings).unwrap().value;
        let r3 = un.norm() / (nv * fnorm);
        let pc = Exponent::INFINITY;
        let fnorm_inf = space_time_norm(&f, &centre, box_radius, if n == 1 { 401 } else { 101 }, t, 64, pc);
        let dun = directional_derivative(cs, Problem::Nonhomogeneous { f: &f, settings: &nh }, &x, t, &ell).unwrap();
        let cv = sharp_c_ell(cs, pc, t, &ell, &settings).unwrap().value;
        let r4 = dun.norm() / (cv * fnorm_inf);

        for (i, r) in [r1, r2, r3, r4].into_iter().enumerate() {
            worst[i] = worst[i].max(r);
            if !(r <= 1.0 + 1e-6) {
                failures.push(format!("trial {trial} bound {} ratio {r:.9}", i + 1));
            }
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!(
            "{TRIALS} trials per estimate, worst ratios |u|/bound: H {:.4}, K_ell {:.4}, N {:.4}, C_ell {:.4} (limit 1+1e-6) {}",
            worst[0],
            worst[1],
            worst[2],
            worst[3],
            failures.join("; ")
        ),
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("oracle equivalence, homogeneous", criterion_1),
        ("oracle equivalence, nonhomogeneous", criterion_2),
        ("hand-derived heat constants", criterion_3),
        ("saturation of extremal inputs", criterion_4),
        ("kernel correctness", criterion_5),
        ("special-case consistency", criterion_6),
        ("convergence thresholds", criterion_7),
        ("integral identities", criterion_8),
        ("pointwise bounds on random data", criterion_9),
    ];
    let filter: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut all = true;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if filter.is_some_and(|f| f != i + 1) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        all &= outcome.pass;
        println!(
            "criterion {} [{}] {name}: {} ({:.1} s)",
            i + 1,
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail.trim_end(),
            start.elapsed().as_secs_f64()
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
