//! `coeffs`, `kernel`, `sharp`, `sweep` and `solve`.

use rayon::prelude::*;
use sharp_parabolic::kernels::eval_p;
use sharp_parabolic::sharp::{compute, converges_c_at, converges_n_at, Exponent, SharpKind, SharpRequest, SharpSettings, SphereSettings};
use sharp_parabolic::solve::{
    solve_homogeneous, solve_nonhomogeneous, space_time_norm, GridFunction, NonhomogeneousSettings, SourceFunction,
};
use sharp_parabolic::integrate_coefficients;

use crate::config::{RunConfig, SolveProblem};
use crate::error::Result;
use crate::output::{flag, indexed, indexed2, num, Table};

pub fn sharp_settings(cfg: &RunConfig) -> SharpSettings {
    SharpSettings {
        quad_tol: cfg.numerics.quad_tol,
        sphere: SphereSettings { seeds: cfg.numerics.sphere_seeds, ..Default::default() },
    }
}

/// Ordered parallel map; the first error wins.
fn rows<T: Sync, F>(points: &[T], f: F) -> Result<Vec<Vec<String>>>
where
    F: Fn(&T) -> Result<Vec<String>> + Sync + Send,
{
    points.par_iter().map(f).collect()
}

pub fn coeffs(cfg: &RunConfig) -> Result<Table> {
    let (n, m) = (cfg.n, cfg.m);
    let mut header = vec!["t".to_string(), "tau".to_string()];
    header.extend(indexed2("IA", n));
    header.extend(indexed("Ib", n));
    header.extend(indexed2("IC", m));
    header.push("quad_error".into());
    let points: Vec<(f64, f64)> =
        cfg.request.t.iter().flat_map(|&t| cfg.request.tau.iter().filter(move |&&s| s < t).map(move |&s| (t, s))).collect();
    let mut table = Table::new("coeffs", header);
    table.rows = rows(&points, |&(t, tau)| {
        let w = integrate_coefficients(&cfg.cs, tau, t, cfg.numerics.quad_tol)?;
        let mut row = vec![num(t), num(tau)];
        row.extend(w.ia.as_matrix().as_slice().iter().copied().map(num));
        row.extend(w.ib.iter().copied().map(num));
        row.extend(w.ic.as_slice().iter().copied().map(num));
        row.push(num(w.quad_error));
        Ok(row)
    })?;
    Ok(table)
}

pub fn kernel(cfg: &RunConfig) -> Result<Table> {
    let (n, m) = (cfg.n, cfg.m);
    let mut header = indexed("x", n);
    header.extend(["t".to_string(), "tau".to_string()]);
    header.extend(indexed2("entry", m));
    let mut points = Vec::new();
    for x in &cfg.request.x {
        for &t in &cfg.request.t {
            for &tau in cfg.request.tau.iter().filter(|&&s| s < t) {
                points.push((x.clone(), t, tau));
            }
        }
    }
    let mut table = Table::new("kernel", header);
    table.rows = rows(&points, |(x, t, tau)| {
        let k = eval_p(&cfg.cs, x, *t, *tau, cfg.numerics.quad_tol)?;
        let mut row: Vec<String> = x.iter().copied().map(num).collect();
        row.extend([num(*t), num(*tau)]);
        row.extend(k.matrix.as_slice().iter().copied().map(num));
        Ok(row)
    })?;
    Ok(table)
}

#[derive(Clone)]
struct SharpPoint {
    kind: SharpKind,
    p: Exponent,
    t: f64,
    ell: Option<Vec<f64>>,
}

fn sharp_points(cfg: &RunConfig) -> Vec<SharpPoint> {
    let r = &cfg.request;
    let mut out = Vec::new();
    for &kind in &r.kinds {
        for &p in &r.p {
            for &t in &r.t {
                if kind.needs_ell() {
                    for ell in &r.ell {
                        out.push(SharpPoint { kind, p, t, ell: Some(ell.clone()) });
                    }
                } else {
                    out.push(SharpPoint { kind, p, t, ell: None });
                }
            }
        }
    }
    out
}

fn blank(k: usize) -> impl Iterator<Item = String> {
    std::iter::repeat_n(String::new(), k)
}

fn sharp_table(cfg: &RunConfig, command: &'static str, diagnostics: bool) -> Result<Table> {
    let (n, m) = (cfg.n, cfg.m);
    let mut header = vec!["kind".to_string(), "p".to_string(), "t".to_string()];
    header.extend(indexed("ell", n));
    header.extend(["value".to_string(), "convergent".to_string()]);
    header.extend(indexed("z", m));
    header.push("err_estimate".into());
    if diagnostics {
        header.extend(["estimated".to_string(), "singularity".to_string(), "search_residual".to_string()]);
    }
    let settings = sharp_settings(cfg);
    let points = sharp_points(cfg);
    let mut table = Table::new(command, header);
    table.rows = rows(&points, |pt| {
        let req = SharpRequest { kind: pt.kind, p: pt.p, t: pt.t, ell: pt.ell.clone(), settings };
        let r = compute(&cfg.cs, &req)?;
        let mut row = vec![pt.kind.name().to_string(), pt.p.to_string(), num(pt.t)];
        match r.maximizer_ell.as_ref().or(pt.ell.as_ref()) {
            Some(ell) => row.extend(ell.iter().copied().map(num)),
            None => row.extend(blank(n)),
        }
        row.extend([num(r.value), flag(r.convergent)]);
        match &r.maximizer_z {
            Some(z) => row.extend(z.iter().copied().map(num)),
            None => row.extend(blank(m)),
        }
        row.push(if r.convergent { num(r.diagnostics.quad_error) } else { String::new() });
        if diagnostics {
            let conv = match pt.kind {
                SharpKind::N => Some(converges_n_at(&cfg.cs, pt.p, pt.t)?),
                SharpKind::CEll | SharpKind::C => Some(converges_c_at(&cfg.cs, pt.p, pt.t)?),
                _ => None,
            };
            match conv {
                Some(c) => row.extend([flag(c.estimated), num(c.singularity)]),
                None => row.extend([flag(false), String::new()]),
            }
            row.push(num(r.diagnostics.search_residual));
        }
        Ok(row)
    })?;
    Ok(table)
}

pub fn sharp(cfg: &RunConfig) -> Result<Table> {
    sharp_table(cfg, "sharp", false)
}

pub fn sweep(cfg: &RunConfig) -> Result<Table> {
    sharp_table(cfg, "sweep", true)
}

pub fn solve(cfg: &RunConfig) -> Result<Table> {
    let (n, m) = (cfg.n, cfg.m);
    let mut header = indexed("x", n);
    header.extend(["t".to_string(), "p".to_string()]);
    header.extend(indexed("u", m));
    header.extend(["error_estimate".to_string(), "bound".to_string(), "ratio".to_string()]);
    let mut points = Vec::new();
    for x in &cfg.request.x {
        for &t in &cfg.request.t {
            points.push((x.clone(), t));
        }
    }
    let settings = sharp_settings(cfg);
    let num_cfg = cfg.numerics;
    let data = cfg.request.data.clone();
    let per_point = |(x, t): &(Vec<f64>, f64)| -> Result<Vec<Vec<String>>> {
        let w = integrate_coefficients(&cfg.cs, 0.0, *t, num_cfg.quad_tol)?;
        let centre: Vec<f64> = x.iter().zip(&w.ib).map(|(a, b)| a + b).collect();
        let (u, norms, kind): (_, Vec<f64>, SharpKind) = match cfg.request.problem {
            SolveProblem::Homogeneous => {
                let radius = num_cfg.truncation_sigmas * w.max_std();
                let d = data.clone();
                let phi = GridFunction::from_fn(centre, radius, num_cfg.grid_points, m, move |y, out| d.eval(y, out))?;
                let u = solve_homogeneous(&cfg.cs, &phi, x, *t, num_cfg.quad_tol)?;
                (u, cfg.request.p.iter().map(|&p| phi.norm_p(p)).collect(), SharpKind::H)
            }
            SolveProblem::Nonhomogeneous => {
                let d = data.clone();
                let f = SourceFunction::new(m, f64::INFINITY, move |y, _, out| d.eval(y, out));
                let nh = NonhomogeneousSettings {
                    time_nodes: num_cfg.time_nodes,
                    grid_points: num_cfg.grid_points,
                    truncation_sigmas: num_cfg.truncation_sigmas,
                    quad_tol: num_cfg.quad_tol,
                };
                let u = solve_nonhomogeneous(&cfg.cs, &f, x, *t, &nh)?;
                // Box containing every window's y-grid.
                let mut drift: f64 = 0.0;
                for k in 0..16 {
                    let tau = *t * k as f64 / 16.0;
                    let wk = integrate_coefficients(&cfg.cs, tau, *t, num_cfg.quad_tol)?;
                    drift = drift.max(wk.ib.iter().map(|v| v * v).sum::<f64>().sqrt());
                }
                let radius = num_cfg.truncation_sigmas * w.max_std() + drift;
                let norms = cfg
                    .request
                    .p
                    .iter()
                    .map(|&p| space_time_norm(&f, x, radius, num_cfg.grid_points, *t, num_cfg.time_nodes, p))
                    .collect();
                (u, norms, SharpKind::N)
            }
        };
        let mag = u.norm();
        cfg.request
            .p
            .iter()
            .zip(norms)
            .map(|(&p, norm)| {
                let req = SharpRequest { kind, p, t: *t, ell: None, settings };
                let s = compute(&cfg.cs, &req)?;
                let bound = s.value * norm;
                let mut row: Vec<String> = x.iter().copied().map(num).collect();
                row.extend([num(*t), p.to_string()]);
                row.extend(u.value.iter().copied().map(num));
                row.extend([num(u.error_estimate), num(bound), num(if bound > 0.0 { mag / bound } else { 0.0 })]);
                Ok(row)
            })
            .collect()
    };
    let nested: Vec<Vec<Vec<String>>> = points.par_iter().map(per_point).collect::<Result<_>>()?;
    let mut table = Table::new("solve", header);
    table.rows = nested.into_iter().flatten().collect();
    Ok(table)
}
