use proptest::prelude::*;
use sharp_parabolic::coeffs::{integrate_coefficients, CoefficientPath, CoefficientSet};
use sharp_parabolic::kernels::{eval_g, eval_grad_g};
use sharp_parabolic::matfun::{canonical_sign, matrix_exp, spd_inv_sqrt, spd_sqrt, Matrix, SymMatrix};
use sharp_parabolic::sharp::{sharp_h, sharp_k, Exponent, SharpSettings};
use sharp_parabolic::solve::{solve_homogeneous, GridFunction};

const TOL: f64 = 1e-11;

fn square(k: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-1.5..1.5f64, k * k).prop_map(move |v| Matrix::from_vec(k, k, v).unwrap())
}

/// SPD from `L Lᵀ + δ I`.
fn spd(k: usize) -> impl Strategy<Value = SymMatrix> {
    (square(k), 0.2..2.0f64).prop_map(move |(l, d)| {
        let m = l.matmul(&l.transpose()).add(&Matrix::identity(k).scaled(d));
        let sym = m.add(&m.transpose()).scaled(0.5);
        SymMatrix::new(sym).unwrap()
    })
}

fn exponent() -> impl Strategy<Value = Exponent> {
    prop_oneof![Just(Exponent::ONE), Just(Exponent::INFINITY), (1.05..8.0f64).prop_map(|p| Exponent::new(p).unwrap())]
}

fn set(a: &SymMatrix, b: &[f64], c: &Matrix) -> CoefficientSet {
    CoefficientSet::constant(2.0, a, b, c).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exp_of_negation_inverts(b in (1usize..5).prop_flat_map(square)) {
        let k = b.rows();
        let prod = matrix_exp(&b).unwrap().matmul(&matrix_exp(&b.scaled(-1.0)).unwrap());
        prop_assert!(prod.max_abs_diff(&Matrix::identity(k)) < 1e-10);
    }

    #[test]
    fn exp_commutes_with_transpose(b in (1usize..5).prop_flat_map(square)) {
        let lhs = matrix_exp(&b.transpose()).unwrap();
        let rhs = matrix_exp(&b).unwrap().transpose();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12 * (1.0 + rhs.max_abs()));
    }

    #[test]
    fn spd_square_roots_round_trip(m in (1usize..5).prop_flat_map(spd)) {
        let k = m.order();
        let s = spd_sqrt(&m).unwrap();
        let r = spd_inv_sqrt(&m).unwrap();
        let scale = 1.0 + m.as_matrix().max_abs();
        prop_assert!(s.as_matrix().matmul(s.as_matrix()).max_abs_diff(m.as_matrix()) < 1e-11 * scale);
        prop_assert!(s.as_matrix().matmul(r.as_matrix()).max_abs_diff(&Matrix::identity(k)) < 1e-10 * scale);
    }

    #[test]
    fn canonical_sign_picks_one_representative(v in prop::collection::vec(-3.0..3.0f64, 1..6)) {
        let mut a = v.clone();
        let mut b: Vec<f64> = v.iter().map(|x| -x).collect();
        canonical_sign(&mut a);
        canonical_sign(&mut b);
        prop_assert_eq!(&a, &b);
        if let Some(first) = a.iter().find(|x| x.abs() > 1e-9) {
            prop_assert!(*first < 0.0);
        }
    }

    #[test]
    fn integrals_are_additive(
        base in prop::collection::vec(0.5..2.0f64, 1),
        slope in prop::collection::vec(-0.2..0.2f64, 1),
        drift in prop::collection::vec(-1.0..1.0f64, 2),
        s in 0.1..0.9f64,
        t in 1.0..2.0f64,
    ) {
        let a = CoefficientPath::Affine { base: base.clone(), slope: slope.clone() };
        let b = CoefficientPath::function(1, move |u, out| out[0] = drift[0] + drift[1] * u.sin());
        let c = CoefficientPath::Constant(vec![0.3]);
        let cs = CoefficientSet::new(1, 1, 2.0, a, b, c).unwrap();
        let whole = integrate_coefficients(&cs, 0.0, t, 1e-12).unwrap();
        let left = integrate_coefficients(&cs, 0.0, s, 1e-12).unwrap();
        let right = integrate_coefficients(&cs, s, t, 1e-12).unwrap();
        let sum_a = left.ia.as_matrix().add(right.ia.as_matrix());
        prop_assert!(sum_a.max_abs_diff(whole.ia.as_matrix()) < TOL);
        prop_assert!((left.ib[0] + right.ib[0] - whole.ib[0]).abs() < TOL);
        prop_assert!(left.ic.add(&right.ic).max_abs_diff(&whole.ic) < TOL);
    }

    #[test]
    fn kernel_scalar_part_has_unit_mass(a in 0.3..3.0f64, b in -1.0..1.0f64, t in 0.2..1.5f64) {
        let cs = set(&SymMatrix::from_diag(&[a]), &[b], &Matrix::zeros(1, 1));
        let sigma = (2.0 * a * t).sqrt();
        let centre = -b * t;
        let cells = 4000;
        let h = 24.0 * sigma / cells as f64;
        let mass: f64 = (0..cells)
            .map(|k| {
                let y = centre - 12.0 * sigma + (k as f64 + 0.5) * h;
                eval_g(&cs, &[y], t, 1e-12).unwrap().scalar_part * h
            })
            .sum();
        prop_assert!((mass - 1.0).abs() < 1e-9);
    }

    #[test]
    fn kernel_gradient_matches_finite_differences(
        a in spd(2),
        x in prop::collection::vec(-1.0..1.0f64, 2),
        t in 0.3..1.5f64,
    ) {
        let c = Matrix::from_rows(&[[0.1, 0.4], [-0.2, 0.0]]).unwrap();
        let cs = set(&a, &[0.2, -0.3], &c);
        let grad = eval_grad_g(&cs, &x, t, 1e-12).unwrap();
        let h = 1e-5;
        for j in 0..2 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let fd = eval_g(&cs, &xp, t, 1e-12).unwrap().matrix.sub(&eval_g(&cs, &xm, t, 1e-12).unwrap().matrix).scaled(0.5 / h);
            prop_assert!(fd.max_abs_diff(&grad[j].matrix) < 1e-7 * (1.0 + fd.max_abs()));
        }
    }

    #[test]
    fn homogeneous_coefficients_ignore_drift(
        a in spd(2),
        b1 in prop::collection::vec(-3.0..3.0f64, 2),
        b2 in prop::collection::vec(-3.0..3.0f64, 2),
        p in exponent(),
        t in 0.2..1.8f64,
    ) {
        let c = Matrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]).unwrap();
        let s = SharpSettings::default();
        let h1 = sharp_h(&set(&a, &b1, &c), p, t, &s).unwrap().value;
        let h2 = sharp_h(&set(&a, &b2, &c), p, t, &s).unwrap().value;
        prop_assert!((h1 - h2).abs() <= 1e-12 * h1);
        let k1 = sharp_k(&set(&a, &b1, &c), p, t, &s).unwrap().value;
        let k2 = sharp_k(&set(&a, &b2, &c), p, t, &s).unwrap().value;
        prop_assert!((k1 - k2).abs() <= 1e-9 * k1);
    }

    #[test]
    fn scalar_reaction_scales_by_exponential(c in -1.0..1.0f64, p in exponent(), t in 0.2..1.8f64) {
        let a = SymMatrix::from_diag(&[1.0, 2.5]);
        let s = SharpSettings::default();
        let base = sharp_h(&set(&a, &[0.0, 0.0], &Matrix::zeros(2, 2)), p, t, &s).unwrap().value;
        let shifted = sharp_h(&set(&a, &[0.0, 0.0], &Matrix::identity(2).scaled(c)), p, t, &s).unwrap().value;
        prop_assert!((shifted - (c * t).exp() * base).abs() < 1e-10 * shifted);
    }

    #[test]
    fn heat_h_follows_parabolic_scaling(p in (1.05..8.0f64).prop_map(|p| Exponent::new(p).unwrap()), t in 0.1..1.0f64, lambda in 1.1..4.0f64) {
        // H(t) ∝ t^{-n/(2p)} for the heat system.
        let cs = CoefficientSet::heat(2, 1, 10.0).unwrap();
        let s = SharpSettings::default();
        let h1 = sharp_h(&cs, p, t, &s).unwrap().value;
        let h2 = sharp_h(&cs, p, lambda * t, &s).unwrap().value;
        let expected = lambda.powf(-1.0 / p.value());
        prop_assert!((h2 / h1 - expected).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn solution_is_linear_in_data(alpha in -2.0..2.0f64, beta in -2.0..2.0f64, x in -0.5..0.5f64) {
        let c = Matrix::from_rows(&[[0.0, 1.0], [0.0, -0.5]]).unwrap();
        let cs = set(&SymMatrix::from_diag(&[0.8]), &[0.4], &c);
        let t = 0.6;
        let grid = |f: fn(f64) -> [f64; 2]| {
            GridFunction::from_fn(vec![0.0], 8.0, 257, 2, move |y, out| out.copy_from_slice(&f(y[0]))).unwrap()
        };
        let phi = grid(|y| [(-y * y).exp(), y.cos() / (1.0 + y * y)]);
        let psi = grid(|y| [1.0 / (1.0 + y * y), (-0.5 * y * y).exp() * y]);
        let mix = phi.combine(alpha, &psi, beta).unwrap();
        let u = |g: &GridFunction| solve_homogeneous(&cs, g, &[x], t, 1e-12).unwrap().value;
        let (a, b, m) = (u(&phi), u(&psi), u(&mix));
        for k in 0..2 {
            prop_assert!((m[k] - alpha * a[k] - beta * b[k]).abs() < 1e-12);
        }
    }
}
