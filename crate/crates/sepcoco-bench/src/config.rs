//! Line-oriented `key=value` experiment configuration.
//!
//! ```text
//! # convex suite on the unit ball
//! name=ball_half
//! geometry=ball d=2 radius=1
//! algorithm=bagel
//! mode=convex
//! horizons=1024,2048,4096
//! beta=0.5
//! seeds=1,2,3,4,5
//! costs=noisy_linear bias=0.5 noise=1
//! constraints=switching pool=4 spread=0.2 per_round=1
//! anchor=extreme
//! ```
//!
//! Values of `geometry`, `costs` and `constraints` are a kind followed by
//! space-separated `k=v` parameters. `beta` sets a single trade-off exponent,
//! `betas` a comma-separated list. Defaults: `algorithm=bagel`,
//! `mode=convex`, `c_delta=1`, `c_k=1`, `epsilon=1`, `theta=1`,
//! `anchor=extreme`, `start=auto`, `name=suite`, `output=results`,
//! `costs=noisy_linear bias=0.5 noise=1`,
//! `constraints=switching pool=4 spread=0.2 per_round=1`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use sepcoco_core::adversary::{ConstraintFamily, CostFamily};
use sepcoco_core::bagel::Mode;
use sepcoco_core::geometry::{Geometry, Halfspace};
use sepcoco_core::rng::SplitMix64;
use sepcoco_core::Vector;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("config error at line {line}, key `{key}`: {message}")]
pub struct ConfigError {
    /// 1-based line, or 0 when the key is missing altogether.
    pub line: usize,
    pub key: String,
    pub message: String,
}

impl ConfigError {
    fn new(line: usize, key: &str, message: impl Into<String>) -> Self {
        ConfigError {
            line,
            key: key.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeometrySpec {
    Ball {
        dim: usize,
        radius: f64,
    },
    Box {
        dim: usize,
        lower: f64,
        upper: f64,
    },
    Simplex {
        dim: usize,
    },
    /// The cube `[-1, 1]^d` cut by `cuts` seeded halfspaces `<a, x> <= 0.75`.
    Polytope {
        dim: usize,
        cuts: usize,
        seed: u64,
    },
}

impl GeometrySpec {
    pub fn build(&self) -> sepcoco_core::Result<Geometry> {
        match *self {
            GeometrySpec::Ball { dim, radius } => Geometry::ball(Vector::zeros(dim), radius),
            GeometrySpec::Box { dim, lower, upper } => Geometry::cube(dim, lower, upper),
            GeometrySpec::Simplex { dim } => Geometry::simplex(dim),
            GeometrySpec::Polytope { dim, cuts, seed } => {
                let mut hs = Vec::with_capacity(2 * dim + cuts);
                for i in 0..dim {
                    for sign in [1.0, -1.0] {
                        hs.push(Halfspace {
                            normal: Vector::basis(dim, i, sign),
                            offset: 1.0,
                        });
                    }
                }
                let mut rng = SplitMix64::new(seed);
                for _ in 0..cuts {
                    hs.push(Halfspace {
                        normal: rng.unit_vector(dim),
                        offset: 0.75,
                    });
                }
                Geometry::polytope(hs)
            }
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            GeometrySpec::Ball { dim, .. }
            | GeometrySpec::Box { dim, .. }
            | GeometrySpec::Simplex { dim }
            | GeometrySpec::Polytope { dim, .. } => dim,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Bagel,
    BaseOgd,
    ProjectionBaseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnchorChoice {
    /// The body's interior anchor.
    Center,
    /// Linear minimizer of the body along a seeded random direction.
    Extreme,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartChoice {
    /// The scenario's suggested start when it has one, else the center.
    Auto,
    Center,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub geometry: GeometrySpec,
    pub algorithm: Algorithm,
    pub mode: Mode,
    pub horizons: Vec<usize>,
    pub betas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub c_delta: f64,
    pub c_k: f64,
    pub epsilon: f64,
    pub theta: f64,
    pub m1_override: Option<f64>,
    pub costs: CostFamily,
    pub constraints: ConstraintFamily,
    pub anchor: AnchorChoice,
    pub start: StartChoice,
    pub output: String,
}

const KEYS: &[&str] = &[
    "name",
    "geometry",
    "algorithm",
    "mode",
    "horizons",
    "beta",
    "betas",
    "seeds",
    "c_delta",
    "c_k",
    "epsilon",
    "theta",
    "m1",
    "costs",
    "constraints",
    "anchor",
    "start",
    "output",
];

struct Entry<'a> {
    line: usize,
    value: &'a str,
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut entries: BTreeMap<&str, Entry> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ConfigError::new(line, content, "expected key=value"))?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(ConfigError::new(line, key, "unknown key"));
        }
        if entries.contains_key(key) {
            return Err(ConfigError::new(line, key, "duplicate key"));
        }
        entries.insert(
            key,
            Entry {
                line,
                value: value.trim(),
            },
        );
    }

    let line_of = |k: &str| entries.get(k).map_or(0, |e| e.line);
    let num = |k: &str, default: f64| -> Result<f64, ConfigError> {
        match entries.get(k) {
            None => Ok(default),
            Some(e) => {
                parse_f64(e.value).ok_or_else(|| ConfigError::new(e.line, k, "expected a number"))
            }
        }
    };

    let name = entries.get("name").map_or("suite", |e| e.value).to_string();
    if name.is_empty() || name.contains(['/', '\\']) {
        return Err(ConfigError::new(
            line_of("name"),
            "name",
            "must be a non-empty file stem",
        ));
    }
    let output = entries
        .get("output")
        .map_or("results", |e| e.value)
        .to_string();

    let geometry = {
        let e = entries
            .get("geometry")
            .ok_or_else(|| ConfigError::new(0, "geometry", "missing"))?;
        parse_geometry(e.value).map_err(|m| ConfigError::new(e.line, "geometry", m))?
    };

    let algorithm = match entries.get("algorithm").map(|e| e.value) {
        None | Some("bagel") => Algorithm::Bagel,
        Some("base_ogd") => Algorithm::BaseOgd,
        Some("projection_baseline") => Algorithm::ProjectionBaseline,
        Some(_) => {
            return Err(ConfigError::new(
                line_of("algorithm"),
                "algorithm",
                "expected bagel, base_ogd or projection_baseline",
            ))
        }
    };
    let mode = match entries.get("mode").map(|e| e.value) {
        None | Some("convex") => Mode::Convex,
        Some("strongly_convex") => Mode::StronglyConvex,
        Some(_) => {
            return Err(ConfigError::new(
                line_of("mode"),
                "mode",
                "expected convex or strongly_convex",
            ))
        }
    };

    let horizons: Vec<usize> = {
        let e = entries
            .get("horizons")
            .ok_or_else(|| ConfigError::new(0, "horizons", "missing"))?;
        parse_list(e.value, |s| s.parse::<usize>().ok()).ok_or_else(|| {
            ConfigError::new(e.line, "horizons", "expected comma-separated integers")
        })?
    };
    if horizons.is_empty() {
        return Err(ConfigError::new(
            line_of("horizons"),
            "horizons",
            "empty list",
        ));
    }
    if horizons.iter().any(|&t| t < 2) {
        return Err(ConfigError::new(
            line_of("horizons"),
            "horizons",
            "every horizon must be >= 2",
        ));
    }

    let (betas, beta_key) = match (entries.get("beta"), entries.get("betas")) {
        (Some(_), Some(e)) => {
            return Err(ConfigError::new(
                e.line,
                "betas",
                "give either beta or betas",
            ))
        }
        (Some(e), None) => (parse_f64(e.value).map(|b| vec![b]), "beta"),
        (None, Some(e)) => (parse_list(e.value, parse_f64), "betas"),
        (None, None) => return Err(ConfigError::new(0, "beta", "missing")),
    };
    let betas =
        betas.ok_or_else(|| ConfigError::new(line_of(beta_key), beta_key, "expected number(s)"))?;
    if betas.is_empty() {
        return Err(ConfigError::new(line_of(beta_key), beta_key, "empty list"));
    }
    let beta_max = match mode {
        Mode::Convex => 0.5,
        Mode::StronglyConvex => 1.0,
    };
    if let Some(b) = betas.iter().find(|&&b| !(b > 0.0 && b <= beta_max)) {
        return Err(ConfigError::new(
            line_of(beta_key),
            beta_key,
            format!("beta {b} outside (0, {beta_max}] for this mode"),
        ));
    }

    let seeds: Vec<u64> = {
        let e = entries
            .get("seeds")
            .ok_or_else(|| ConfigError::new(0, "seeds", "missing"))?;
        parse_list(e.value, |s| s.parse::<u64>().ok())
            .ok_or_else(|| ConfigError::new(e.line, "seeds", "expected comma-separated integers"))?
    };
    if seeds.is_empty() {
        return Err(ConfigError::new(line_of("seeds"), "seeds", "empty list"));
    }

    let c_delta = num("c_delta", 1.0)?;
    let c_k = num("c_k", 1.0)?;
    let epsilon = num("epsilon", 1.0)?;
    let theta = num("theta", 1.0)?;
    for (k, v, ok) in [
        ("c_delta", c_delta, c_delta > 0.0),
        ("c_k", c_k, c_k > 0.0),
        ("epsilon", epsilon, epsilon >= 0.0),
        ("theta", theta, theta > 0.0),
    ] {
        if !ok || !v.is_finite() {
            return Err(ConfigError::new(
                line_of(k),
                k,
                format!("invalid value {v}"),
            ));
        }
    }
    let m1_override = match entries.get("m1") {
        None => None,
        Some(e) => match parse_f64(e.value) {
            Some(m) if m > 0.0 => Some(m),
            _ => return Err(ConfigError::new(e.line, "m1", "expected a positive number")),
        },
    };

    let costs = match entries.get("costs") {
        None => CostFamily::NoisyLinear {
            bias: 0.5,
            noise: 1.0,
        },
        Some(e) => parse_costs(e.value, theta).map_err(|m| ConfigError::new(e.line, "costs", m))?,
    };
    if mode == Mode::StronglyConvex && !matches!(costs, CostFamily::RotatingQuadratic { .. }) {
        return Err(ConfigError::new(
            line_of("costs"),
            "costs",
            "strongly convex mode needs rotating_quadratic costs",
        ));
    }
    let constraints = match entries.get("constraints") {
        None => ConstraintFamily::SwitchingHalfspaces {
            pool: 4,
            spread: 0.2,
            per_round: 1,
        },
        Some(e) => {
            parse_constraints(e.value).map_err(|m| ConfigError::new(e.line, "constraints", m))?
        }
    };
    let anchor = match entries.get("anchor").map(|e| e.value) {
        None | Some("extreme") => AnchorChoice::Extreme,
        Some("center") => AnchorChoice::Center,
        Some(_) => {
            return Err(ConfigError::new(
                line_of("anchor"),
                "anchor",
                "expected extreme or center",
            ))
        }
    };
    let start = match entries.get("start").map(|e| e.value) {
        None | Some("auto") => StartChoice::Auto,
        Some("center") => StartChoice::Center,
        Some(_) => {
            return Err(ConfigError::new(
                line_of("start"),
                "start",
                "expected auto or center",
            ))
        }
    };

    Ok(ExperimentConfig {
        name,
        geometry,
        algorithm,
        mode,
        horizons,
        betas,
        seeds,
        c_delta,
        c_k,
        epsilon,
        theta,
        m1_override,
        costs,
        constraints,
        anchor,
        start,
        output,
    })
}

fn parse_f64(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|x| x.is_finite())
}

fn parse_list<T>(s: &str, f: impl Fn(&str) -> Option<T>) -> Option<Vec<T>> {
    if s.trim().is_empty() {
        return Some(Vec::new());
    }
    s.split(',').map(|p| f(p.trim())).collect()
}

/// Splits `kind k=v k=v` into the kind and its parameters.
fn parse_params(value: &str) -> Result<(&str, BTreeMap<&str, &str>), String> {
    let mut tokens = value.split_whitespace();
    let kind = tokens.next().ok_or("missing kind")?;
    let mut params = BTreeMap::new();
    for tok in tokens {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| format!("parameter `{tok}` is not k=v"))?;
        if params.insert(k, v).is_some() {
            return Err(format!("duplicate parameter `{k}`"));
        }
    }
    Ok((kind, params))
}

struct Params<'a> {
    map: BTreeMap<&'a str, &'a str>,
}

impl<'a> Params<'a> {
    fn num(&mut self, k: &str, default: Option<f64>) -> Result<f64, String> {
        match self.map.remove(k) {
            Some(v) => parse_f64(v).ok_or_else(|| format!("`{k}` must be a number")),
            None => default.ok_or_else(|| format!("missing parameter `{k}`")),
        }
    }

    fn int(&mut self, k: &str, default: Option<u64>) -> Result<u64, String> {
        match self.map.remove(k) {
            Some(v) => v
                .parse::<u64>()
                .map_err(|_| format!("`{k}` must be a non-negative integer")),
            None => default.ok_or_else(|| format!("missing parameter `{k}`")),
        }
    }

    fn finish(self) -> Result<(), String> {
        match self.map.keys().next() {
            Some(k) => Err(format!("unknown parameter `{k}`")),
            None => Ok(()),
        }
    }
}

fn parse_geometry(value: &str) -> Result<GeometrySpec, String> {
    let (kind, map) = parse_params(value)?;
    let mut p = Params { map };
    let dim = p.int("d", None)? as usize;
    if dim == 0 {
        return Err("d must be >= 1".into());
    }
    let spec = match kind {
        "ball" => GeometrySpec::Ball {
            dim,
            radius: p.num("radius", Some(1.0))?,
        },
        "box" => GeometrySpec::Box {
            dim,
            lower: p.num("lower", Some(0.0))?,
            upper: p.num("upper", Some(1.0))?,
        },
        "simplex" => GeometrySpec::Simplex { dim },
        "polytope" => GeometrySpec::Polytope {
            dim,
            cuts: p.int("cuts", Some(4))? as usize,
            seed: p.int("seed", Some(1))?,
        },
        other => return Err(format!("unknown geometry `{other}`")),
    };
    p.finish()?;
    spec.build().map_err(|e| e.to_string())?;
    Ok(spec)
}

fn parse_costs(value: &str, theta: f64) -> Result<CostFamily, String> {
    let (kind, map) = parse_params(value)?;
    let mut p = Params { map };
    let family = match kind {
        "drifting_linear" => CostFamily::DriftingLinear {
            period: p.num("period", Some(200.0))?,
        },
        "noisy_linear" => CostFamily::NoisyLinear {
            bias: p.num("bias", Some(0.5))?,
            noise: p.num("noise", Some(1.0))?,
        },
        "rotating_quadratic" => CostFamily::RotatingQuadratic {
            theta,
            period: p.num("period", Some(200.0))?,
            orbit: p.num("orbit", Some(0.9))?,
        },
        "vanishing_warmup" => CostFamily::VanishingWarmup {
            scale: p.num("scale", Some(10.0))?,
            peak: p.num("peak", Some(1e-3))?,
        },
        other => return Err(format!("unknown cost family `{other}`")),
    };
    p.finish()?;
    Ok(family)
}

fn parse_constraints(value: &str) -> Result<ConstraintFamily, String> {
    let (kind, map) = parse_params(value)?;
    let mut p = Params { map };
    let family = match kind {
        "inactive" => ConstraintFamily::Inactive,
        "switching" => {
            let pool = p.int("pool", Some(4))? as usize;
            let per_round = p.int("per_round", Some(1))? as usize;
            if pool == 0 || per_round == 0 || per_round > pool {
                return Err("need 1 <= per_round <= pool".into());
            }
            ConstraintFamily::SwitchingHalfspaces {
                pool,
                spread: p.num("spread", Some(0.2))?,
                per_round,
            }
        }
        other => return Err(format!("unknown constraint family `{other}`")),
    };
    p.finish()?;
    Ok(family)
}

/// Canonical text form; `parse_config(&format_config(c)) == c`.
pub fn format_config(cfg: &ExperimentConfig) -> String {
    let mut s = String::new();
    let join = |xs: Vec<String>| xs.join(",");
    let _ = writeln!(s, "name={}", cfg.name);
    let geometry = match cfg.geometry {
        GeometrySpec::Ball { dim, radius } => format!("ball d={dim} radius={radius}"),
        GeometrySpec::Box { dim, lower, upper } => {
            format!("box d={dim} lower={lower} upper={upper}")
        }
        GeometrySpec::Simplex { dim } => format!("simplex d={dim}"),
        GeometrySpec::Polytope { dim, cuts, seed } => {
            format!("polytope d={dim} cuts={cuts} seed={seed}")
        }
    };
    let _ = writeln!(s, "geometry={geometry}");
    let algorithm = match cfg.algorithm {
        Algorithm::Bagel => "bagel",
        Algorithm::BaseOgd => "base_ogd",
        Algorithm::ProjectionBaseline => "projection_baseline",
    };
    let _ = writeln!(s, "algorithm={algorithm}");
    let mode = match cfg.mode {
        Mode::Convex => "convex",
        Mode::StronglyConvex => "strongly_convex",
    };
    let _ = writeln!(s, "mode={mode}");
    let _ = writeln!(
        s,
        "horizons={}",
        join(cfg.horizons.iter().map(|t| t.to_string()).collect())
    );
    let _ = writeln!(
        s,
        "betas={}",
        join(cfg.betas.iter().map(|b| b.to_string()).collect())
    );
    let _ = writeln!(
        s,
        "seeds={}",
        join(cfg.seeds.iter().map(|x| x.to_string()).collect())
    );
    let _ = writeln!(s, "c_delta={}", cfg.c_delta);
    let _ = writeln!(s, "c_k={}", cfg.c_k);
    let _ = writeln!(s, "epsilon={}", cfg.epsilon);
    let _ = writeln!(s, "theta={}", cfg.theta);
    if let Some(m) = cfg.m1_override {
        let _ = writeln!(s, "m1={m}");
    }
    let costs = match cfg.costs {
        CostFamily::DriftingLinear { period } => format!("drifting_linear period={period}"),
        CostFamily::NoisyLinear { bias, noise } => {
            format!("noisy_linear bias={bias} noise={noise}")
        }
        CostFamily::RotatingQuadratic { period, orbit, .. } => {
            format!("rotating_quadratic period={period} orbit={orbit}")
        }
        CostFamily::VanishingWarmup { scale, peak } => {
            format!("vanishing_warmup scale={scale} peak={peak}")
        }
    };
    let _ = writeln!(s, "costs={costs}");
    let constraints = match cfg.constraints {
        ConstraintFamily::Inactive => "inactive".to_string(),
        ConstraintFamily::SwitchingHalfspaces {
            pool,
            spread,
            per_round,
        } => {
            format!("switching pool={pool} spread={spread} per_round={per_round}")
        }
    };
    let _ = writeln!(s, "constraints={constraints}");
    let anchor = match cfg.anchor {
        AnchorChoice::Center => "center",
        AnchorChoice::Extreme => "extreme",
    };
    let _ = writeln!(s, "anchor={anchor}");
    let start = match cfg.start {
        StartChoice::Auto => "auto",
        StartChoice::Center => "center",
    };
    let _ = writeln!(s, "start={start}");
    let _ = writeln!(s, "output={}", cfg.output);
    s
}
