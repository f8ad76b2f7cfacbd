//! System-definition file format (JSON) and its validation into bound
//! domain objects. Violations are reported with JSON-pointer-style paths.

use std::collections::BTreeMap;

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;

use symflow_core::coords::{AdaptedChart, ReducedRhs};
use symflow_core::dynsys::{DynamicalSystem, LambdaSpec, VectorField};
use symflow_core::expr::{Expr, Point, VarSet};
use symflow_core::hamiltonian::HamiltonianSystem;

fn default_time() -> String {
    "t".to_string()
}

/// Seed used when neither the file nor `SYMFLOW_SEED` provides one.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub name: String,
    #[serde(default)]
    pub variables: Vec<String>,
    #[serde(default = "default_time")]
    pub time: String,
    #[serde(default)]
    pub f: Vec<String>,
    #[serde(default)]
    pub symmetries: Vec<SymmetryDef>,
    #[serde(default)]
    pub constants: Vec<ConstantDef>,
    #[serde(default)]
    pub chart: Option<ChartDef>,
    #[serde(default)]
    pub hamiltonian: Option<HamiltonianDef>,
    /// Sampling box per variable; variables not listed use [-2, 2].
    #[serde(default, rename = "box")]
    pub sampling_box: BTreeMap<String, [f64; 2]>,
    #[serde(default)]
    pub t_range: Option<[f64; 2]>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub drift: Option<DriftDef>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymmetryDef {
    pub name: String,
    /// `standard`, `lambda`, or `Lambda` (matrix).
    pub kind: String,
    pub phi: Vec<String>,
    #[serde(default)]
    pub tau: Option<String>,
    #[serde(default)]
    pub lambda: Option<String>,
    #[serde(default, rename = "Lambda")]
    pub capital_lambda: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantDef {
    pub name: String,
    pub expr: String,
    #[serde(default)]
    pub guards: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartDef {
    /// Name of the symmetry the chart rectifies; defaults to the first one.
    #[serde(default)]
    pub symmetry: Option<String>,
    pub w: Vec<String>,
    pub zeta: String,
    #[serde(default)]
    pub guards: Vec<String>,
    /// Declared reduced right-hand sides in the image names `w1..`, `zeta`.
    #[serde(default)]
    pub reduced_w: Option<Vec<String>>,
    #[serde(default)]
    pub reduced_z: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianDef {
    pub m: usize,
    #[serde(rename = "H")]
    pub h: String,
    #[serde(default, rename = "G")]
    pub g: Option<String>,
    /// Extra columns for time-series output, expressions in (q, p, t).
    #[serde(default)]
    pub extras: Vec<ExtraDef>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtraDef {
    pub name: String,
    pub expr: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftDef {
    pub u0: BTreeMap<String, f64>,
    pub t_span: [f64; 2],
    #[serde(default)]
    pub tol: Option<f64>,
}

// ------------------------------------------------------------------ loaded

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetryKind {
    Standard,
    Lambda,
    CapitalLambda,
}

pub struct LoadedSymmetry {
    pub name: String,
    pub kind: SymmetryKind,
    pub field: VectorField,
    pub lambda: Option<LambdaSpec>,
}

pub struct LoadedConstant {
    pub name: String,
    pub expr: Expr,
    pub guards: Vec<Expr>,
}

pub struct LoadedChart {
    pub symmetry: String,
    pub chart: AdaptedChart,
    pub guards: Vec<Expr>,
    pub reduced: Option<ReducedRhs>,
}

pub struct LoadedHamiltonian {
    pub hs: HamiltonianSystem,
    pub extras: Vec<(String, Expr)>,
}

pub struct Loaded {
    pub name: String,
    pub ds: DynamicalSystem,
    pub symmetries: Vec<LoadedSymmetry>,
    pub constants: Vec<LoadedConstant>,
    pub chart: Option<LoadedChart>,
    pub hamiltonian: Option<LoadedHamiltonian>,
    pub sampling_box: Vec<(f64, f64)>,
    pub t_range: (f64, f64),
    pub seed: u64,
    pub drift: Option<LoadedDrift>,
}

pub struct LoadedDrift {
    pub u0: Point,
    pub t_span: (f64, f64),
    pub tol: f64,
}

impl Loaded {
    pub fn symmetry(&self, name: Option<&str>) -> Result<&LoadedSymmetry> {
        match name {
            Some(n) => self
                .symmetries
                .iter()
                .find(|s| s.name == n)
                .ok_or_else(|| anyhow!("no symmetry named `{n}` in the file")),
            None => match self.symmetries.len() {
                0 => bail!("the file declares no symmetries"),
                1 => Ok(&self.symmetries[0]),
                _ => bail!("several symmetries declared; pick one with --name"),
            },
        }
    }

    pub fn constant(&self, name: Option<&str>) -> Result<&LoadedConstant> {
        match name {
            Some(n) => self
                .constants
                .iter()
                .find(|c| c.name == n)
                .ok_or_else(|| anyhow!("no constant named `{n}` in the file")),
            None => match self.constants.len() {
                0 => bail!("the file declares no constants"),
                1 => Ok(&self.constants[0]),
                _ => bail!("several constants declared; pick one with --name"),
            },
        }
    }
}

pub fn load(path: &std::path::Path) -> Result<Loaded> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let file: SystemFile =
        serde_json::from_str(&text).with_context(|| format!("{}: invalid JSON", path.display()))?;
    bind(file)
}

fn parse_expr(vs: &VarSet, text: &str, path: &str) -> Result<Expr> {
    vs.parse(text).map_err(|e| anyhow!("{path}: {e}"))
}

pub fn bind(file: SystemFile) -> Result<Loaded> {
    // The dynamical system comes either from explicit components or from a
    // Hamiltonian block, not both.
    let (ds, hamiltonian) = match (&file.hamiltonian, file.f.is_empty()) {
        (Some(hdef), true) => {
            let hs = HamiltonianSystem::parse(
                hdef.m,
                &hdef.h,
                hdef.g.as_deref(),
                &file.time,
            )
            .map_err(|e| anyhow!("/hamiltonian: {e}"))?;
            if !file.variables.is_empty() {
                let want = HamiltonianSystem::canonical_names(hdef.m);
                if file.variables != want {
                    bail!(
                        "/variables: hamiltonian systems use the canonical names {:?}",
                        want
                    );
                }
            }
            let mut extras = Vec::new();
            for (i, e) in hdef.extras.iter().enumerate() {
                let expr = parse_expr(hs.vars(), &e.expr, &format!("/hamiltonian/extras/{i}/expr"))?;
                extras.push((e.name.clone(), expr));
            }
            let ds = hs.vector_field();
            (ds, Some(LoadedHamiltonian { hs, extras }))
        }
        (Some(_), false) => bail!("/f: give either `f` or `hamiltonian`, not both"),
        (None, true) => bail!("/f: missing right-hand sides (or a hamiltonian block)"),
        (None, false) => {
            if file.variables.is_empty() {
                bail!("/variables: missing");
            }
            let vs = VarSet::new(file.variables.clone(), &file.time)
                .map_err(|e| anyhow!("/variables: {e}"))?;
            if file.f.len() != vs.n() {
                bail!(
                    "/f: expected {} components, got {}",
                    vs.n(),
                    file.f.len()
                );
            }
            let mut f = Vec::with_capacity(file.f.len());
            for (i, text) in file.f.iter().enumerate() {
                f.push(parse_expr(&vs, text, &format!("/f/{i}"))?);
            }
            let ds = DynamicalSystem::new(vs, f).map_err(|e| anyhow!("/f: {e}"))?;
            (ds, None)
        }
    };

    let vs = ds.vars().clone();
    let n = ds.n();

    let mut symmetries = Vec::new();
    for (i, def) in file.symmetries.iter().enumerate() {
        let base = format!("/symmetries/{i}");
        if def.phi.len() != n {
            bail!("{base}/phi: expected {n} components, got {}", def.phi.len());
        }
        let mut phi = Vec::with_capacity(n);
        for (j, text) in def.phi.iter().enumerate() {
            phi.push(parse_expr(&vs, text, &format!("{base}/phi/{j}"))?);
        }
        let tau = def
            .tau
            .as_ref()
            .map(|t| parse_expr(&vs, t, &format!("{base}/tau")))
            .transpose()?;
        let field = VectorField { phi, tau };
        let (kind, lambda) = match def.kind.as_str() {
            "standard" => {
                if def.lambda.is_some() || def.capital_lambda.is_some() {
                    bail!("{base}: standard symmetries take no lambda data");
                }
                (SymmetryKind::Standard, None)
            }
            "lambda" => {
                let text = def
                    .lambda
                    .as_ref()
                    .ok_or_else(|| anyhow!("{base}/lambda: required for kind `lambda`"))?;
                // λ may reference velocities as `<var>_dot`; they are
                // substituted by the right-hand sides here.
                let dots = ds.velocity_names();
                let dot_refs: Vec<&str> = dots.iter().map(String::as_str).collect();
                let raw = vs
                    .parse_with_extra(text, &dot_refs)
                    .map_err(|e| anyhow!("{base}/lambda: {e}"))?;
                let on_shell = ds.substitute_velocities(&raw);
                (SymmetryKind::Lambda, Some(LambdaSpec::Scalar(on_shell)))
            }
            "Lambda" => {
                let rows = def.capital_lambda.as_ref().ok_or_else(|| {
                    anyhow!("{base}/Lambda: required for kind `Lambda`")
                })?;
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    bail!("{base}/Lambda: expected a {n} x {n} matrix");
                }
                let mut matrix = Vec::with_capacity(n);
                for (r, row) in rows.iter().enumerate() {
                    let mut out = Vec::with_capacity(n);
                    for (c, text) in row.iter().enumerate() {
                        out.push(parse_expr(&vs, text, &format!("{base}/Lambda/{r}/{c}"))?);
                    }
                    matrix.push(out);
                }
                (SymmetryKind::CapitalLambda, Some(LambdaSpec::Matrix(matrix)))
            }
            other => bail!("{base}/kind: unknown kind `{other}`"),
        };
        symmetries.push(LoadedSymmetry {
            name: def.name.clone(),
            kind,
            field,
            lambda,
        });
    }

    let mut constants = Vec::new();
    for (i, def) in file.constants.iter().enumerate() {
        let base = format!("/constants/{i}");
        let expr = parse_expr(&vs, &def.expr, &format!("{base}/expr"))?;
        let mut guards = Vec::new();
        for (j, g) in def.guards.iter().enumerate() {
            guards.push(parse_expr(&vs, g, &format!("{base}/guards/{j}"))?);
        }
        constants.push(LoadedConstant {
            name: def.name.clone(),
            expr,
            guards,
        });
    }

    let chart = match &file.chart {
        None => None,
        Some(def) => {
            if def.w.len() != n - 1 {
                bail!("/chart/w: expected {} invariants, got {}", n - 1, def.w.len());
            }
            let mut w = Vec::with_capacity(def.w.len());
            for (j, text) in def.w.iter().enumerate() {
                w.push(parse_expr(&vs, text, &format!("/chart/w/{j}"))?);
            }
            let zeta = parse_expr(&vs, &def.zeta, "/chart/zeta")?;
            let chart = AdaptedChart::new(&vs, w, zeta).map_err(|e| anyhow!("/chart: {e}"))?;
            let mut guards = Vec::new();
            for (j, g) in def.guards.iter().enumerate() {
                guards.push(parse_expr(&vs, g, &format!("/chart/guards/{j}"))?);
            }
            let symmetry_name = match &def.symmetry {
                Some(name) => {
                    if !symmetries.iter().any(|s| &s.name == name) {
                        bail!("/chart/symmetry: no symmetry named `{name}`");
                    }
                    name.clone()
                }
                None => symmetries
                    .first()
                    .map(|s| s.name.clone())
                    .ok_or_else(|| anyhow!("/chart: needs a symmetry to rectify"))?,
            };
            let reduced = match (&def.reduced_w, &def.reduced_z) {
                (None, None) => None,
                (Some(w_rhs), Some(z_rhs)) => {
                    if w_rhs.len() != n - 1 {
                        bail!(
                            "/chart/reduced_w: expected {} components, got {}",
                            n - 1,
                            w_rhs.len()
                        );
                    }
                    let image = AdaptedChart::image_names(n);
                    let image_vs = VarSet::new(image, &file.time)
                        .map_err(|e| anyhow!("/chart: {e}"))?;
                    let mut w_parsed = Vec::with_capacity(w_rhs.len());
                    for (j, text) in w_rhs.iter().enumerate() {
                        w_parsed.push(parse_expr(
                            &image_vs,
                            text,
                            &format!("/chart/reduced_w/{j}"),
                        )?);
                    }
                    let z_parsed = parse_expr(&image_vs, z_rhs, "/chart/reduced_z")?;
                    Some(ReducedRhs {
                        w_rhs: w_parsed,
                        z_rhs: z_parsed,
                    })
                }
                _ => bail!("/chart: reduced_w and reduced_z must be declared together"),
            };
            Some(LoadedChart {
                symmetry: symmetry_name,
                chart,
                guards,
                reduced,
            })
        }
    };

    for key in file.sampling_box.keys() {
        if vs.index_of(key).is_none() {
            bail!("/box/{key}: not a state variable");
        }
    }
    let sampling_box: Vec<(f64, f64)> = vs
        .names()
        .iter()
        .map(|name| {
            file.sampling_box
                .get(name)
                .map(|r| (r[0], r[1]))
                .unwrap_or((-2.0, 2.0))
        })
        .collect();
    for (name, range) in vs.names().iter().zip(&sampling_box) {
        if range.0 >= range.1 || range.0.is_nan() || range.1.is_nan() {
            bail!("/box/{name}: empty range");
        }
    }
    let t_range = file.t_range.map(|r| (r[0], r[1])).unwrap_or((0.0, 1.0));

    let seed = match std::env::var("SYMFLOW_SEED") {
        Ok(v) => v
            .parse::<u64>()
            .map_err(|_| anyhow!("SYMFLOW_SEED must be a u64, got `{v}`"))?,
        Err(_) => file.seed.unwrap_or(DEFAULT_SEED),
    };

    let drift = match &file.drift {
        None => None,
        Some(def) => {
            for key in def.u0.keys() {
                if vs.index_of(key).is_none() {
                    bail!("/drift/u0/{key}: not a state variable");
                }
            }
            let mut u = Vec::with_capacity(n);
            for name in vs.names() {
                let v = def
                    .u0
                    .get(name)
                    .ok_or_else(|| anyhow!("/drift/u0: missing `{name}`"))?;
                u.push(*v);
            }
            Some(LoadedDrift {
                u0: Point::new(u, def.t_span[0]),
                t_span: (def.t_span[0], def.t_span[1]),
                tol: def.tol.unwrap_or(1e-6),
            })
        }
    };

    Ok(Loaded {
        name: file.name,
        ds,
        symmetries,
        constants,
        chart,
        hamiltonian,
        sampling_box,
        t_range,
        seed,
        drift,
    })
}

/// Parse `x=0.3,y=0.7,t=0` into a point bound to the system's variables.
/// `t` is optional and defaults to `default_t`.
pub fn parse_point(vs: &VarSet, text: &str, default_t: f64) -> Result<Point> {
    let mut values: Vec<Option<f64>> = vec![None; vs.n()];
    let mut t = default_t;
    for item in text.split(',') {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| anyhow!("expected `name=value`, got `{item}`"))?;
        let name = name.trim();
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| anyhow!("`{item}`: not a number"))?;
        if name == vs.time() {
            t = value;
        } else {
            let idx = vs
                .index_of(name)
                .ok_or_else(|| anyhow!("`{name}` is not a variable of this system"))?;
            values[idx] = Some(value);
        }
    }
    let mut u = Vec::with_capacity(vs.n());
    for (name, v) in vs.names().iter().zip(values) {
        u.push(v.ok_or_else(|| anyhow!("missing value for `{name}`"))?);
    }
    Ok(Point::new(u, t))
}

/// Parse `0:10` (or `0,10`) into a span.
pub fn parse_span(text: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = if text.contains(':') {
        text.split(':').collect()
    } else {
        text.split(',').collect()
    };
    if parts.len() != 2 {
        bail!("expected `t0:t1`, got `{text}`");
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| anyhow!("bad span `{text}`"))?;
    let b: f64 = parts[1].trim().parse().map_err(|_| anyhow!("bad span `{text}`"))?;
    Ok((a, b))
}
