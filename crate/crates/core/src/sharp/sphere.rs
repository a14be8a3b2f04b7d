//! Maximization of even functions over the unit sphere: deterministic
//! seeding of a half-sphere followed by projected ascent.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr_normal::sample_normal;
use rayon::prelude::*;

use crate::matfun::canonical_sign;

#[derive(Clone, Copy, Debug)]
pub struct SphereSettings {
    /// Number of seeds; `None` means `64·dim`.
    pub seeds: Option<usize>,
    /// Relative tolerance on the maximum value.
    pub rel_tol: f64,
    pub max_iter: usize,
    /// How many of the best seeds are polished.
    pub polish: usize,
    pub rng_seed: u64,
}

impl Default for SphereSettings {
    fn default() -> Self {
        Self { seeds: None, rel_tol: 1e-12, max_iter: 500, polish: 4, rng_seed: 0x5eed }
    }
}

impl SphereSettings {
    pub fn seed_count(&self, dim: usize) -> usize {
        self.seeds.unwrap_or(64 * dim).max(1)
    }
}

#[derive(Clone, Debug)]
pub struct SphereMax {
    pub point: Vec<f64>,
    pub value: f64,
    /// Norm of the projected gradient relative to `|value|`.
    pub residual: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Seeds covering one representative of each antipodal pair.
pub fn seeds(dim: usize, count: usize, rng_seed: u64) -> Vec<Vec<f64>> {
    match dim {
        0 => Vec::new(),
        1 => vec![vec![1.0]],
        2 => (0..count)
            .map(|k| {
                let th = PI * k as f64 / count as f64;
                vec![th.cos(), th.sin()]
            })
            .collect(),
        3 => {
            // Fibonacci lattice on the upper hemisphere.
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - (k as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let phi = golden * k as f64;
                    vec![r * phi.cos(), r * phi.sin(), z]
                })
                .collect()
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            let mut out = Vec::with_capacity(count);
            for k in 0..count {
                let mut v: Vec<f64> = if k < dim {
                    (0..dim).map(|i| if i == k { 1.0 } else { 0.0 }).collect()
                } else {
                    (0..dim).map(|_| sample_normal(&mut rng)).collect()
                };
                normalize(&mut v);
                out.push(v);
            }
            out
        }
    }
}

pub(crate) fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
    norm
}

/// Maximize an even objective over `S^{dim-1}`.
pub fn sphere_max<F>(f: F, dim: usize, settings: &SphereSettings) -> SphereMax
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    assert!(dim >= 1, "sphere dimension must be positive");
    if dim == 1 {
        let mut point = vec![1.0];
        canonical_sign(&mut point);
        return SphereMax { value: f(&point), point, residual: 0.0, evaluations: 1, converged: true };
    }
    let candidates = seeds(dim, settings.seed_count(dim), settings.rng_seed);
    let values: Vec<f64> = candidates.par_iter().map(|z| f(z)).collect();
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));

    let mut best: Option<SphereMax> = None;
    let mut evaluations = candidates.len();
    for &k in order.iter().take(settings.polish.max(1)) {
        let r = polish(&f, candidates[k].clone(), values[k], settings);
        evaluations += r.evaluations;
        if best.as_ref().is_none_or(|b| r.value > b.value) {
            best = Some(r);
        }
    }
    let mut best = best.expect("at least one seed");
    best.evaluations = evaluations;
    canonical_sign(&mut best.point);
    best
}

/// Projected ascent from `z` with finite-difference gradients and an
/// adaptive rotation angle.
pub fn polish<F>(f: &F, mut z: Vec<f64>, mut value: f64, settings: &SphereSettings) -> SphereMax
where
    F: Fn(&[f64]) -> f64,
{
    let dim = z.len();
    let mut evaluations = 0;
    let mut angle: f64 = 0.1;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    let mut trial = vec![0.0; dim];
    for _ in 0..settings.max_iter {
        let g = tangent_gradient(f, &z, &mut evaluations);
        let gnorm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        residual = gnorm / value.abs().max(f64::MIN_POSITIVE);
        if gnorm == 0.0 || residual < 1e-11 {
            converged = true;
            break;
        }
        let mut accepted = false;
        while angle > 1e-12 {
            let (c, s) = (angle.cos(), angle.sin());
            for i in 0..dim {
                trial[i] = c * z[i] + s * g[i] / gnorm;
            }
            normalize(&mut trial);
            let v = f(&trial);
            evaluations += 1;
            if v > value {
                let gain = v - value;
                z.copy_from_slice(&trial);
                value = v;
                accepted = true;
                angle = (angle * 2.0).min(0.5);
                if gain <= settings.rel_tol * value.abs() && angle < 1e-6 {
                    converged = true;
                }
                break;
            }
            angle *= 0.5;
        }
        if !accepted || converged {
            converged = true;
            break;
        }
    }
    SphereMax { point: z, value, residual, evaluations, converged }
}

fn tangent_gradient<F: Fn(&[f64]) -> f64>(f: &F, z: &[f64], evaluations: &mut usize) -> Vec<f64> {
    let dim = z.len();
    let h = 1e-6;
    let mut g = vec![0.0; dim];
    let mut zp = z.to_vec();
    for i in 0..dim {
        zp[i] = z[i] + h;
        let fp = f(&zp);
        zp[i] = z[i] - h;
        let fm = f(&zp);
        zp[i] = z[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    *evaluations += 2 * dim;
    let radial: f64 = g.iter().zip(z).map(|(a, b)| a * b).sum();
    for i in 0..dim {
        g[i] -= radial * z[i];
    }
    g
}

/// Joint maximization of `f(a, b)` over `S^{da-1} × S^{db-1}`, even in each
/// argument separately.
#[derive(Clone, Debug)]
pub struct ProductSphereMax {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub value: f64,
    pub residual: f64,
}

pub fn product_sphere_max<F>(f: F, da: usize, db: usize, settings: &SphereSettings) -> ProductSphereMax
where
    F: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    let cap = 8192usize;
    let mut na = settings.seed_count(da);
    let mut nb = settings.seed_count(db);
    if da == 1 {
        na = 1;
    }
    if db == 1 {
        nb = 1;
    }
    while na * nb > cap {
        if na >= nb {
            na = (na / 2).max(1);
        } else {
            nb = (nb / 2).max(1);
        }
    }
    let sa = if da == 1 { vec![vec![1.0]] } else { seeds(da, na, settings.rng_seed) };
    let sb = if db == 1 { vec![vec![1.0]] } else { seeds(db, nb, settings.rng_seed ^ 0x9e37_79b9) };
    let pairs: Vec<(usize, usize)> = (0..sa.len()).flat_map(|i| (0..sb.len()).map(move |j| (i, j))).collect();
    let values: Vec<f64> = pairs.par_iter().map(|&(i, j)| f(&sa[i], &sb[j])).collect();
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by(|&x, &y| values[y].total_cmp(&values[x]).then(x.cmp(&y)));

    let mut best: Option<ProductSphereMax> = None;
    for &k in order.iter().take(settings.polish.max(1)) {
        let (i, j) = pairs[k];
        let r = alternate(&f, sa[i].clone(), sb[j].clone(), values[k], settings);
        if best.as_ref().is_none_or(|b| r.value > b.value) {
            best = Some(r);
        }
    }
    let mut best = best.expect("at least one seed pair");
    canonical_sign(&mut best.a);
    canonical_sign(&mut best.b);
    best
}

fn alternate<F>(f: &F, mut a: Vec<f64>, mut b: Vec<f64>, mut value: f64, settings: &SphereSettings) -> ProductSphereMax
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    let mut residual = 0.0;
    for _ in 0..100 {
        let before = value;
        let (ra, rb);
        if a.len() > 1 {
            let bb = b.clone();
            let r = polish(&|x: &[f64]| f(x, &bb), a, value, settings);
            a = r.point;
            value = r.value;
            ra = r.residual;
        } else {
            ra = 0.0;
        }
        if b.len() > 1 {
            let aa = a.clone();
            let r = polish(&|y: &[f64]| f(&aa, y), b, value, settings);
            b = r.point;
            value = r.value;
            rb = r.residual;
        } else {
            rb = 0.0;
        }
        residual = f64::max(ra, rb);
        if value - before <= settings.rel_tol * value.abs() {
            break;
        }
    }
    ProductSphereMax { a, b, value, residual }
}

/// Standard normal draw by Box–Muller.
mod rand_distr_normal {
    use rand::Rng;

    pub fn sample_normal<R: Rng>(rng: &mut R) -> f64 {
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}
