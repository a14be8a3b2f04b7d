//! Closed-form coefficients checked against the brute-force operator norms.

use rayon::prelude::*;
use sharp_parabolic::matfun::{Matrix, SymMatrix};
use sharp_parabolic::oracle::{opnorm_bruteforce, opnorm_truncated, IntegralOperatorSpec, OperatorKind};
use sharp_parabolic::sharp::{compute, Exponent, SharpKind, SharpRequest};
use sharp_parabolic::CoefficientSet;

use crate::commands::sharp_settings;
use crate::config::{RunConfig, VerifyMatrix};
use crate::error::Result;
use crate::output::{flag, num, Table};

pub const HOMOGENEOUS_TOL: f64 = 1e-3;
pub const NONHOMOGENEOUS_TOL: f64 = 5e-3;

#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub closed_form: f64,
    pub oracle: f64,
    pub rel_diff: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Clone)]
struct Case {
    preset: String,
    cs: CoefficientSet,
    kind: SharpKind,
    p: Exponent,
    t: f64,
    ell: Option<Vec<f64>>,
}

fn constant(a: &[&[f64]], b: &[f64], c: &[&[f64]]) -> CoefficientSet {
    let a = SymMatrix::from_rows(a).expect("preset");
    let c = Matrix::from_rows(c).expect("preset");
    CoefficientSet::constant(1.0, &a, b, &c).expect("preset")
}

fn presets() -> Vec<(&'static str, CoefficientSet)> {
    vec![
        ("heat_n1m1", CoefficientSet::heat(1, 1, 1.0).expect("preset")),
        ("nilpotent_n1m2", constant(&[&[1.0]], &[0.7], &[&[0.0, 1.0], &[0.0, 0.0]])),
        ("diag14_n2m1", constant(&[&[1.0, 0.0], &[0.0, 4.0]], &[0.3, -0.2], &[&[0.0]])),
        ("diag14_nilpotent_n2m2", constant(&[&[1.0, 0.0], &[0.0, 4.0]], &[0.25, 0.5], &[&[0.0, 1.0], &[0.0, 0.0]])),
    ]
}

fn default_cases() -> Vec<Case> {
    let mut out = Vec::new();
    let t = 0.8;
    for (name, cs) in presets() {
        let n = cs.n();
        let ell: Vec<f64> = (0..n).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
        let exps = [Exponent::ONE, Exponent::new(2.0).expect("p"), Exponent::new(3.0).expect("p"), Exponent::INFINITY];
        for p in exps {
            for (kind, e) in [(SharpKind::H, None), (SharpKind::KEll, Some(ell.clone()))] {
                out.push(Case { preset: name.into(), cs: cs.clone(), kind, p, t, ell: e });
            }
        }
        for p in [Exponent::new(3.0).expect("p"), Exponent::INFINITY] {
            out.push(Case { preset: name.into(), cs: cs.clone(), kind: SharpKind::N, p, t, ell: None });
        }
        out.push(Case { preset: name.into(), cs: cs.clone(), kind: SharpKind::CEll, p: Exponent::INFINITY, t, ell: Some(ell) });
    }
    out
}

fn config_cases(cfg: &RunConfig) -> Vec<Case> {
    let r = &cfg.request;
    let mut out = Vec::new();
    for &kind in &r.kinds {
        for &p in &r.p {
            for &t in &r.t {
                let ells: Vec<Option<Vec<f64>>> =
                    if kind.needs_ell() { r.ell.iter().cloned().map(Some).collect() } else { vec![None] };
                for ell in ells {
                    out.push(Case { preset: "config".into(), cs: cfg.cs.clone(), kind, p, t, ell });
                }
            }
        }
    }
    out
}

fn run_case(cfg: &RunConfig, case: &Case, tol_override: Option<f64>) -> Result<Check> {
    let settings = sharp_settings(cfg);
    let req = SharpRequest { kind: case.kind, p: case.p, t: case.t, ell: case.ell.clone(), settings };
    let sharp = compute(&case.cs, &req)?;
    let ell = sharp.maximizer_ell.clone().or_else(|| case.ell.clone());
    let kind = match (case.kind, ell) {
        (SharpKind::H, _) => OperatorKind::Homogeneous,
        (SharpKind::N, _) => OperatorKind::Nonhomogeneous,
        (SharpKind::KEll | SharpKind::K, Some(ell)) => OperatorKind::HomogeneousGradient { ell },
        (_, Some(ell)) => OperatorKind::NonhomogeneousGradient { ell },
        (_, None) => OperatorKind::NonhomogeneousGradient { ell: (0..case.cs.n()).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect() },
    };
    let nonhomogeneous = kind.is_nonhomogeneous();
    let tol = tol_override.unwrap_or(if nonhomogeneous { NONHOMOGENEOUS_TOL } else { HOMOGENEOUS_TOL });
    let ell_label = match &kind {
        OperatorKind::HomogeneousGradient { ell } | OperatorKind::NonhomogeneousGradient { ell } => {
            format!(" ell={}", ell.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(":"))
        }
        _ => String::new(),
    };
    let name = format!("{} {} p={} t={}{ell_label}", case.preset, case.kind.name(), case.p, case.t);
    let x = vec![0.0; case.cs.n()];
    let mut spec = IntegralOperatorSpec::new(kind, case.cs.clone(), x, case.t, case.p);
    spec.truncation = cfg.numerics.truncation_sigmas;
    spec.quad_tol = cfg.numerics.quad_tol;
    if !sharp.convergent {
        // Divergent: the truncated norms must grow as the cut shrinks.
        let ladder: Vec<f64> = [1e-1, 1e-2, 1e-3].iter().map(|&e| opnorm_truncated(&spec, e)).collect::<std::result::Result<_, _>>()?;
        let pass = ladder.windows(2).all(|w| w[1] > w[0]);
        return Ok(Check { name, closed_form: f64::INFINITY, oracle: ladder[2], rel_diff: f64::NAN, tol, pass });
    }
    let oracle = opnorm_bruteforce(&spec)?;
    let rel_diff = ((oracle.value - sharp.value) / sharp.value).abs();
    let limit = if tol_override.is_some() { tol } else { tol.max(oracle.tail_bound) };
    Ok(Check { name, closed_form: sharp.value, oracle: oracle.value, rel_diff, tol, pass: rel_diff <= limit })
}

pub fn checks(cfg: &RunConfig, tol_override: Option<f64>) -> Result<Vec<Check>> {
    let cases = match cfg.request.matrix {
        VerifyMatrix::Default => default_cases(),
        VerifyMatrix::Config => config_cases(cfg),
    };
    cases.par_iter().map(|c| run_case(cfg, c, tol_override)).collect()
}

pub fn table(checks: &[Check]) -> Table {
    let header = ["name", "closed_form", "oracle", "rel_diff", "tol", "pass"].map(String::from).to_vec();
    let mut t = Table::new("verify", header);
    t.rows = checks
        .iter()
        .map(|c| vec![c.name.clone(), num(c.closed_form), num(c.oracle), num(c.rel_diff), num(c.tol), flag(c.pass)])
        .collect();
    t
}

pub fn summary(checks: &[Check]) -> String {
    let failed: Vec<&Check> = checks.iter().filter(|c| !c.pass).collect();
    let worst = checks.iter().map(|c| c.rel_diff).filter(|d| d.is_finite()).fold(0.0, f64::max);
    let mut s = format!("verify: {} checks, {} passed, {} failed, worst rel_diff {worst:.3e}\n", checks.len(), checks.len() - failed.len(), failed.len());
    for c in failed {
        s.push_str(&format!("  FAIL {}: closed form {} oracle {} rel_diff {:.3e} > {:.1e}\n", c.name, c.closed_form, c.oracle, c.rel_diff, c.tol));
    }
    s
}
