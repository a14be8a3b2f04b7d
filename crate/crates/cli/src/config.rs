//! TOML run configuration and its validation into library types.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use sharp_parabolic::sharp::{Exponent, SharpKind};
use sharp_parabolic::{CoefficientPath, CoefficientSet};

use crate::error::{CliError, Result};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    problem: RawProblem,
    #[serde(default)]
    coefficients: RawCoefficients,
    #[serde(default)]
    request: RawRequest,
    #[serde(default)]
    numerics: RawNumerics,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    n: usize,
    m: usize,
    #[serde(rename = "T")]
    horizon: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoefficients {
    #[serde(rename = "A")]
    a: Option<RawPath>,
    b: Option<RawPath>,
    #[serde(rename = "C")]
    c: Option<RawPath>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum RawPath {
    Constant { value: Array },
    Affine { base: Array, slope: Array },
    Tabulated { path: PathBuf },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum Array {
    Scalar(f64),
    Vector(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum Number {
    Value(f64),
    Token(String),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum Values {
    One(Number),
    List(Vec<Number>),
    Range { from: f64, to: f64, steps: usize },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRequest {
    command: Option<String>,
    kinds: Option<Vec<String>>,
    p: Option<Values>,
    t: Option<Values>,
    tau: Option<Values>,
    ell: Option<Vec<Vec<f64>>>,
    x: Option<Array>,
    problem: Option<String>,
    data: Option<RawData>,
    matrix: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum RawData {
    Constant { value: Array },
    Gaussian { center: Vec<f64>, width: f64, amplitude: Array },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNumerics {
    #[serde(default = "default_quad_tol")]
    quad_tol: f64,
    sphere_seeds: Option<usize>,
    #[serde(default = "default_truncation")]
    truncation_sigmas: f64,
    #[serde(default = "default_grid_points")]
    grid_points: usize,
    #[serde(default = "default_time_nodes")]
    time_nodes: usize,
}

impl Default for RawNumerics {
    fn default() -> Self {
        Self {
            quad_tol: default_quad_tol(),
            sphere_seeds: None,
            truncation_sigmas: default_truncation(),
            grid_points: default_grid_points(),
            time_nodes: default_time_nodes(),
        }
    }
}

fn default_quad_tol() -> f64 {
    1e-10
}

fn default_truncation() -> f64 {
    8.0
}

fn default_grid_points() -> usize {
    257
}

fn default_time_nodes() -> usize {
    64
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    path: Option<PathBuf>,
    format: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Coeffs,
    Kernel,
    Sharp,
    Solve,
    Verify,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Coeffs => "coeffs",
            Self::Kernel => "kernel",
            Self::Sharp => "sharp",
            Self::Solve => "solve",
            Self::Verify => "verify",
            Self::Sweep => "sweep",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "coeffs" => Self::Coeffs,
            "kernel" => Self::Kernel,
            "sharp" => Self::Sharp,
            "solve" => Self::Solve,
            "verify" => Self::Verify,
            "sweep" => Self::Sweep,
            other => return Err(CliError::field("request.command", format!("unknown command `{other}`"))),
        })
    }
}

/// Source term or initial data of a `solve` request.
#[derive(Clone, Debug)]
pub enum Data {
    Constant(Vec<f64>),
    /// `amplitude · exp(−|y − center|² / (4 width))`.
    Gaussian { center: Vec<f64>, width: f64, amplitude: Vec<f64> },
}

impl Data {
    pub fn eval(&self, y: &[f64], out: &mut [f64]) {
        match self {
            Self::Constant(v) => out.copy_from_slice(v),
            Self::Gaussian { center, width, amplitude } => {
                let r2: f64 = y.iter().zip(center).map(|(a, c)| (a - c).powi(2)).sum();
                let s = (-r2 / (4.0 * width)).exp();
                for (o, a) in out.iter_mut().zip(amplitude) {
                    *o = a * s;
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveProblem {
    Homogeneous,
    Nonhomogeneous,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerifyMatrix {
    /// Built-in presets.
    Default,
    /// The configured coefficients with the requested sweep.
    Config,
}

#[derive(Clone, Debug)]
pub struct Request {
    pub command: Option<Command>,
    pub kinds: Vec<SharpKind>,
    pub p: Vec<Exponent>,
    pub t: Vec<f64>,
    pub tau: Vec<f64>,
    pub ell: Vec<Vec<f64>>,
    pub x: Vec<Vec<f64>>,
    pub problem: SolveProblem,
    pub data: Data,
    pub matrix: VerifyMatrix,
}

#[derive(Clone, Copy, Debug)]
pub struct Numerics {
    pub quad_tol: f64,
    pub sphere_seeds: Option<usize>,
    pub truncation_sigmas: f64,
    pub grid_points: usize,
    pub time_nodes: usize,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub n: usize,
    pub m: usize,
    pub horizon: f64,
    pub cs: CoefficientSet,
    pub request: Request,
    pub numerics: Numerics,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        let raw: RawConfig = toml::from_str(&text).map_err(|source| CliError::Parse { path: path.to_path_buf(), source })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        validate(raw, &base)
    }

    pub fn from_str(text: &str, base: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|source| CliError::Parse { path: PathBuf::from("<config>"), source })?;
        validate(raw, base)
    }
}

fn validate(raw: RawConfig, base: &Path) -> Result<RunConfig> {
    let RawProblem { n, m, horizon } = raw.problem;
    if n == 0 || m == 0 {
        return Err(CliError::field("problem", "n and m must be positive"));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(CliError::field("problem.T", "must be positive and finite"));
    }
    let a = match raw.coefficients.a {
        Some(p) => coefficient_path(p, "coefficients.A", Shape::Symmetric(n), base)?,
        None => CoefficientPath::Constant(identity(n)),
    };
    let b = match raw.coefficients.b {
        Some(p) => coefficient_path(p, "coefficients.b", Shape::Vector(n), base)?,
        None => CoefficientPath::zeros(n),
    };
    let c = match raw.coefficients.c {
        Some(p) => coefficient_path(p, "coefficients.C", Shape::Square(m), base)?,
        None => CoefficientPath::zeros(m * m),
    };
    let cs = CoefficientSet::new(n, m, horizon, a, b, c).map_err(|e| CliError::field("coefficients", e.to_string()))?;

    let num = raw.numerics;
    if !(num.quad_tol > 0.0 && num.quad_tol < 1.0) {
        return Err(CliError::field("numerics.quad_tol", "must lie in (0, 1)"));
    }
    if num.sphere_seeds == Some(0) {
        return Err(CliError::field("numerics.sphere_seeds", "must be positive"));
    }
    if !(num.truncation_sigmas >= 6.0) {
        return Err(CliError::field("numerics.truncation_sigmas", "must be at least 6"));
    }
    if num.grid_points < 17 || num.grid_points.is_multiple_of(2) {
        return Err(CliError::field("numerics.grid_points", "must be odd and at least 17"));
    }
    if num.time_nodes < 4 || num.time_nodes % 2 == 1 {
        return Err(CliError::field("numerics.time_nodes", "must be even and at least 4"));
    }
    let numerics = Numerics {
        quad_tol: num.quad_tol,
        sphere_seeds: num.sphere_seeds,
        truncation_sigmas: num.truncation_sigmas,
        grid_points: num.grid_points,
        time_nodes: num.time_nodes,
    };

    if let Some(f) = &raw.output.format {
        if f != "csv" {
            return Err(CliError::field("output.format", format!("unsupported format `{f}`; only csv is available")));
        }
    }
    let output = raw.output.path.map(|p| if p.is_absolute() { p } else { base.join(p) });
    let request = request(raw.request, n, m, horizon)?;
    Ok(RunConfig { n, m, horizon, cs, request, numerics, output })
}

fn identity(n: usize) -> Vec<f64> {
    (0..n * n).map(|k| if k % (n + 1) == 0 { 1.0 } else { 0.0 }).collect()
}

#[derive(Clone, Copy)]
enum Shape {
    Symmetric(usize),
    Square(usize),
    Vector(usize),
}

impl Shape {
    fn len(self) -> usize {
        match self {
            Self::Symmetric(n) | Self::Square(n) => n * n,
            Self::Vector(n) => n,
        }
    }

    /// Column headers of a tabulated file, after `t`.
    fn headers(self) -> Vec<String> {
        match self {
            Self::Symmetric(n) => (0..n).flat_map(|i| (i..n).map(move |j| format!("entry_{}{}", i + 1, j + 1))).collect(),
            Self::Square(n) => (0..n).flat_map(|i| (0..n).map(move |j| format!("entry_{}{}", i + 1, j + 1))).collect(),
            Self::Vector(n) => (0..n).map(|i| format!("entry_{}", i + 1)).collect(),
        }
    }

    /// Expand one tabulated row into row-major entries.
    fn expand(self, row: &[f64]) -> Vec<f64> {
        match self {
            Self::Symmetric(n) => {
                let mut out = vec![0.0; n * n];
                let mut k = 0;
                for i in 0..n {
                    for j in i..n {
                        out[i * n + j] = row[k];
                        out[j * n + i] = row[k];
                        k += 1;
                    }
                }
                out
            }
            _ => row.to_vec(),
        }
    }
}

fn flatten(a: &Array, shape: Shape, field: &str) -> Result<Vec<f64>> {
    let v = match (a, shape) {
        (Array::Scalar(x), _) => vec![*x],
        (Array::Vector(v), Shape::Vector(_)) => v.clone(),
        (Array::Vector(v), _) if v.len() == 1 => v.clone(),
        (Array::Matrix(rows), Shape::Symmetric(n) | Shape::Square(n)) => {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(CliError::field(field, format!("expected a {n}x{n} matrix")));
            }
            rows.concat()
        }
        _ => return Err(CliError::field(field, "wrong array shape")),
    };
    if v.len() != shape.len() {
        return Err(CliError::field(field, format!("expected {} entries, got {}", shape.len(), v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(CliError::field(field, "entries must be finite"));
    }
    if let Shape::Symmetric(n) = shape {
        for i in 0..n {
            for j in 0..i {
                if v[i * n + j] != v[j * n + i] {
                    return Err(CliError::field(field, "matrix must be symmetric"));
                }
            }
        }
    }
    Ok(v)
}

fn coefficient_path(raw: RawPath, field: &str, shape: Shape, base: &Path) -> Result<CoefficientPath> {
    match raw {
        RawPath::Constant { value } => Ok(CoefficientPath::Constant(flatten(&value, shape, &format!("{field}.value"))?)),
        RawPath::Affine { base: b, slope } => Ok(CoefficientPath::Affine {
            base: flatten(&b, shape, &format!("{field}.base"))?,
            slope: flatten(&slope, shape, &format!("{field}.slope"))?,
        }),
        RawPath::Tabulated { path } => {
            let path = if path.is_absolute() { path } else { base.join(path) };
            let (times, rows) = read_table(&path, shape)?;
            CoefficientPath::tabulated(times, &rows).map_err(|e| CliError::field(format!("{field}.path"), e.to_string()))
        }
    }
}

/// Read `t,entry_…` samples.
fn read_table(path: &Path, shape: Shape) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let file = std::fs::File::open(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(file);
    let table_err = |line: usize, message: String| CliError::Table { path: path.to_path_buf(), line, message };
    let header = reader.headers().map_err(|e| table_err(1, e.to_string()))?.clone();
    let mut expected = vec!["t".to_string()];
    expected.extend(shape.headers());
    let got: Vec<&str> = header.iter().collect();
    if got != expected {
        return Err(table_err(1, format!("header must be `{}`, got `{}`", expected.join(","), got.join(","))));
    }
    let mut times = Vec::new();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| table_err(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let values: Vec<f64> = record
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| table_err(line, format!("`{s}` is not a number"))))
            .collect::<Result<_>>()?;
        times.push(values[0]);
        rows.push(shape.expand(&values[1..]));
    }
    if times.len() < 2 {
        return Err(table_err(1, "need at least two samples".into()));
    }
    Ok((times, rows))
}

fn exponent(n: &Number, field: &str) -> Result<Exponent> {
    match n {
        Number::Value(v) => Exponent::new(*v).map_err(|e| CliError::field(field, e.to_string())),
        Number::Token(s) => s.parse().map_err(|_| CliError::field(field, format!("`{s}` is not an exponent"))),
    }
}

fn real(n: &Number, field: &str) -> Result<f64> {
    match n {
        Number::Value(v) => Ok(*v),
        Number::Token(s) => s.parse().map_err(|_| CliError::field(field, format!("`{s}` is not a number"))),
    }
}

fn expand<T>(v: &Values, field: &str, one: impl Fn(&Number, &str) -> Result<T>, from_f64: impl Fn(f64) -> Result<T>) -> Result<Vec<T>> {
    let out = match v {
        Values::One(x) => vec![one(x, field)?],
        Values::List(xs) => xs.iter().map(|x| one(x, field)).collect::<Result<_>>()?,
        Values::Range { from, to, steps } => {
            if *steps == 0 {
                return Err(CliError::field(field, "range needs at least one step"));
            }
            (0..*steps)
                .map(|k| {
                    let s = if *steps == 1 { 0.0 } else { k as f64 / (*steps - 1) as f64 };
                    from_f64(from + s * (to - from))
                })
                .collect::<Result<_>>()?
        }
    };
    if out.is_empty() {
        return Err(CliError::field(field, "parameter range is empty"));
    }
    Ok(out)
}

fn unit_vectors(v: Vec<Vec<f64>>, n: usize, field: &str) -> Result<Vec<Vec<f64>>> {
    for ell in &v {
        if ell.len() != n {
            return Err(CliError::field(field, format!("directions need {n} entries")));
        }
        let norm = ell.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(CliError::field(field, format!("direction {ell:?} is not a unit vector")));
        }
    }
    Ok(v)
}

fn request(raw: RawRequest, n: usize, m: usize, horizon: f64) -> Result<Request> {
    let command = raw.command.as_deref().map(Command::parse).transpose()?;
    let kinds = match raw.kinds {
        Some(k) => k
            .iter()
            .map(|s| s.parse::<SharpKind>().map_err(|_| CliError::field("request.kinds", format!("unknown kind `{s}`"))))
            .collect::<Result<Vec<_>>>()?,
        None => SharpKind::ALL.to_vec(),
    };
    if kinds.is_empty() {
        return Err(CliError::field("request.kinds", "parameter range is empty"));
    }
    let p = match &raw.p {
        Some(v) => expand(v, "request.p", exponent, |x| Exponent::new(x).map_err(|e| CliError::field("request.p", e.to_string())))?,
        None => vec![Exponent::INFINITY],
    };
    let t = match &raw.t {
        Some(v) => expand(v, "request.t", real, Ok)?,
        None => vec![horizon],
    };
    if let Some(bad) = t.iter().find(|t| !(**t > 0.0 && **t <= horizon)) {
        return Err(CliError::field("request.t", format!("time {bad} outside (0, T]")));
    }
    let tau = match &raw.tau {
        Some(v) => expand(v, "request.tau", real, Ok)?,
        None => vec![0.0],
    };
    if let Some(bad) = tau.iter().find(|s| !(**s >= 0.0 && **s < horizon)) {
        return Err(CliError::field("request.tau", format!("time {bad} outside [0, T)")));
    }
    let ell = match raw.ell {
        Some(v) => unit_vectors(v, n, "request.ell")?,
        None => vec![(0..n).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect()],
    };
    if ell.is_empty() {
        return Err(CliError::field("request.ell", "parameter range is empty"));
    }
    // A flat list is one point when n > 1 and a list of points when n = 1.
    let x = match raw.x {
        None => vec![vec![0.0; n]],
        Some(Array::Scalar(v)) => vec![vec![v]],
        Some(Array::Vector(v)) if n == 1 => v.into_iter().map(|c| vec![c]).collect(),
        Some(Array::Vector(v)) => vec![v],
        Some(Array::Matrix(v)) => v,
    };
    if x.is_empty() || x.iter().any(|x| x.len() != n) {
        return Err(CliError::field("request.x", format!("need one or more points with {n} coordinates")));
    }
    let problem = match raw.problem.as_deref() {
        None | Some("homogeneous") => SolveProblem::Homogeneous,
        Some("nonhomogeneous") => SolveProblem::Nonhomogeneous,
        Some(other) => return Err(CliError::field("request.problem", format!("unknown problem `{other}`"))),
    };
    let data = match raw.data {
        None => Data::Constant(vec![1.0; m]),
        Some(RawData::Constant { value }) => Data::Constant(flatten(&value, Shape::Vector(m), "request.data.value")?),
        Some(RawData::Gaussian { center, width, amplitude }) => {
            if center.len() != n {
                return Err(CliError::field("request.data.center", format!("need {n} coordinates")));
            }
            if !(width > 0.0) {
                return Err(CliError::field("request.data.width", "must be positive"));
            }
            Data::Gaussian { center, width, amplitude: flatten(&amplitude, Shape::Vector(m), "request.data.amplitude")? }
        }
    };
    let matrix = match raw.matrix.as_deref() {
        None | Some("default") => VerifyMatrix::Default,
        Some("config") => VerifyMatrix::Config,
        Some(other) => return Err(CliError::field("request.matrix", format!("unknown matrix `{other}`"))),
    };
    Ok(Request { command, kinds, p, t, tau, ell, x, problem, data, matrix })
}
