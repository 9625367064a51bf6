//! Flat `key = value` experiment configs with command-line overrides.
//!
//! Lines are `key = value`; `#` starts a comment. Flags win over the file.
//! Sweep axes (`theta`, `lambda`, `q`, `m0`, `r`, `iters`, `seed`) accept
//! comma-separated lists. Matrices separate rows with `;` and entries with `,`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use valagg_core::aggregation::DEFAULT_ABORT_MAGNITUDE;
use valagg_core::ftl::DEFAULT_TOL_INNER;
use valagg_core::instances::try_make_counterexample;
use valagg_core::trace_io::format_f64;
use valagg_core::{
    make_affine_quadratic, make_linear_imitation, with_noise, AffineQuadraticSpec, CostTransformer,
    CounterexampleSpec, LinearImitationSpec, LoopConfig, NoiseModel, ParameterPoint,
    ProblemInstance, Regularizer, SamplingSchedule,
};

use crate::error::{CliError, CliResult};

pub const OUT_ENV: &str = "VAL_AGG_OUT";
pub const DEFAULT_OUT: &str = "valagg-out";
pub const DEFAULT_MAX_POINTS: usize = 10_000;

const AXES: [&str; 7] = ["theta", "lambda", "q", "m0", "r", "iters", "seed"];

const KNOWN_KEYS: [&str; 29] = [
    "instance",
    "theta",
    "M",
    "b",
    "alpha",
    "offset",
    "dim",
    "horizon",
    "half_width",
    "a",
    "a_b",
    "k_star",
    "sigma0_sq",
    "gain_lo",
    "gain_hi",
    "x1",
    "iters",
    "transformer",
    "lambda",
    "q",
    "m0",
    "r",
    "seed",
    "noise",
    "sigma",
    "out",
    "emit",
    "jobs",
    "max_points",
];

const EXTRA_KEYS: [&str; 2] = ["tol_inner", "abort_magnitude"];

fn canonical_key(key: &str) -> Option<&'static str> {
    let k = key.trim().trim_start_matches("--").replace('-', "_");
    let k = match k.as_str() {
        "seeds" => "seed",
        "m" if key.trim().trim_start_matches("--") == "M" => "M",
        "n" | "iterations" => "iters",
        other => other,
    };
    KNOWN_KEYS
        .iter()
        .chain(EXTRA_KEYS.iter())
        .find(|c| **c == k)
        .copied()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    File { path: String, line: usize },
    Flag,
    Default,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::File { path, line } => write!(f, "{path}:{line}"),
            Source::Flag => f.write_str("command line"),
            Source::Default => f.write_str("default"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub value: String,
    pub source: Source,
}

/// Untyped key/value layer.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<&'static str, Entry>,
}

impl RawConfig {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse_str(&text, &path.display().to_string())
    }

    pub fn parse_str(text: &str, origin: &str) -> CliResult<Self> {
        let mut cfg = Self::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let source = Source::File {
                path: origin.to_string(),
                line: i + 1,
            };
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config {
                    location: source.to_string(),
                    field: line.to_string(),
                    reason: "expected `key = value`".into(),
                });
            };
            let Some(k) = canonical_key(key) else {
                return Err(CliError::Config {
                    location: source.to_string(),
                    field: key.trim().to_string(),
                    reason: "unknown key".into(),
                });
            };
            if let Some(prev) = cfg.entries.get(k) {
                return Err(CliError::Config {
                    location: source.to_string(),
                    field: k.to_string(),
                    reason: format!("duplicate key, first set at {}", prev.source),
                });
            }
            cfg.entries.insert(
                k,
                Entry {
                    value: value.trim().to_string(),
                    source,
                },
            );
        }
        Ok(cfg)
    }

    /// Command-line override; wins over any file entry.
    pub fn set_flag(&mut self, key: &str, value: &str) -> CliResult<()> {
        let k = canonical_key(key).ok_or_else(|| CliError::Config {
            location: Source::Flag.to_string(),
            field: key.to_string(),
            reason: "unknown key".into(),
        })?;
        self.entries.insert(
            k,
            Entry {
                value: value.trim().to_string(),
                source: Source::Flag,
            },
        );
        Ok(())
    }

    /// `key=value` pair from `--set`.
    pub fn set_pair(&mut self, pair: &str) -> CliResult<()> {
        let (k, v) = pair.split_once('=').ok_or_else(|| CliError::Config {
            location: Source::Flag.to_string(),
            field: pair.to_string(),
            reason: "expected `key=value`".into(),
        })?;
        self.set_flag(k, v)
    }

    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    fn error(&self, key: &str, reason: impl Into<String>) -> CliError {
        let location = self
            .get(key)
            .map(|e| e.source.to_string())
            .unwrap_or_else(|| Source::Default.to_string());
        CliError::Config {
            location,
            field: key.to_string(),
            reason: reason.into(),
        }
    }

    fn parse_one<T: std::str::FromStr>(&self, key: &str, s: &str, what: &str) -> CliResult<T> {
        s.trim()
            .parse::<T>()
            .map_err(|_| self.error(key, format!("expected {what}, got `{}`", s.trim())))
    }

    fn scalar<T: std::str::FromStr>(&self, key: &str, what: &str) -> CliResult<Option<T>> {
        self.get(key)
            .map(|e| self.parse_one(key, &e.value, what))
            .transpose()
    }

    fn list<T: std::str::FromStr>(&self, key: &str, what: &str) -> CliResult<Option<Vec<T>>> {
        let Some(e) = self.get(key) else {
            return Ok(None);
        };
        let items: Vec<&str> = e
            .value
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .collect();
        if items.is_empty() {
            return Err(self.error(key, "empty list"));
        }
        items
            .iter()
            .map(|s| self.parse_one(key, s, what))
            .collect::<CliResult<Vec<T>>>()
            .map(Some)
    }

    fn matrix(&self, key: &str) -> CliResult<Option<Vec<Vec<f64>>>> {
        let Some(e) = self.get(key) else {
            return Ok(None);
        };
        e.value
            .split(';')
            .map(|row| {
                row.split(',')
                    .map(|v| self.parse_one(key, v, "a number"))
                    .collect::<CliResult<Vec<f64>>>()
            })
            .collect::<CliResult<Vec<_>>>()
            .map(Some)
    }

    fn string(&self, key: &str) -> Option<&str> {
        self.get(key).map(|e| e.value.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceKind {
    Counterexample,
    Affine,
    Imitation,
}

impl InstanceKind {
    fn name(&self) -> &'static str {
        match self {
            InstanceKind::Counterexample => "counterexample",
            InstanceKind::Affine => "affine",
            InstanceKind::Imitation => "imitation",
        }
    }

    fn own_keys(&self) -> &'static [&'static str] {
        match self {
            InstanceKind::Counterexample => &["theta", "half_width"],
            InstanceKind::Affine => &[
                "theta",
                "M",
                "b",
                "alpha",
                "offset",
                "dim",
                "horizon",
                "half_width",
            ],
            InstanceKind::Imitation => &[
                "a",
                "a_b",
                "k_star",
                "sigma0_sq",
                "horizon",
                "gain_lo",
                "gain_hi",
            ],
        }
    }
}

const INSTANCE_KEYS: [&str; 14] = [
    "theta",
    "M",
    "b",
    "alpha",
    "offset",
    "dim",
    "horizon",
    "half_width",
    "a",
    "a_b",
    "k_star",
    "sigma0_sq",
    "gain_lo",
    "gain_hi",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformerKind {
    None,
    Mixing,
    Weighted,
    WeightedExpert,
}

impl TransformerKind {
    fn name(&self) -> &'static str {
        match self {
            TransformerKind::None => "none",
            TransformerKind::Mixing => "mixing",
            TransformerKind::Weighted => "weighted",
            TransformerKind::WeightedExpert => "weighted-expert",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseChoice {
    None,
    Uniform,
    Bernoulli,
    GaussianUnchecked,
}

impl NoiseChoice {
    fn name(&self) -> &'static str {
        match self {
            NoiseChoice::None => "none",
            NoiseChoice::Uniform => "uniform",
            NoiseChoice::Bernoulli => "bernoulli",
            NoiseChoice::GaussianUnchecked => "gaussian-unchecked",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Emit {
    pub csv: bool,
    pub json: bool,
    pub svg: bool,
}

/// Values of the sweepable keys.
#[derive(Debug, Clone, PartialEq)]
pub struct Axes {
    pub theta: Vec<f64>,
    pub lambda: Vec<f64>,
    pub q: Vec<f64>,
    pub m0: Vec<usize>,
    pub r: Vec<f64>,
    pub iters: Vec<usize>,
    pub seed: Vec<u64>,
}

impl Axes {
    pub fn size(&self) -> usize {
        [
            self.theta.len(),
            self.lambda.len(),
            self.q.len(),
            self.m0.len(),
            self.r.len(),
            self.iters.len(),
            self.seed.len(),
        ]
        .iter()
        .fold(1usize, |acc, n| acc.saturating_mul(*n))
    }

    fn multi_valued(&self) -> Vec<&'static str> {
        let lens = [
            self.theta.len(),
            self.lambda.len(),
            self.q.len(),
            self.m0.len(),
            self.r.len(),
            self.iters.len(),
            self.seed.len(),
        ];
        AXES.iter()
            .zip(lens)
            .filter(|(_, n)| *n > 1)
            .map(|(k, _)| *k)
            .collect()
    }
}

/// Fully resolved experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub instance: InstanceKind,
    pub axes: Axes,
    pub matrix: Option<Vec<Vec<f64>>>,
    pub b: Option<Vec<f64>>,
    pub alpha: f64,
    pub offset: f64,
    pub dim: usize,
    pub horizon: Option<usize>,
    pub half_width: f64,
    pub imitation: LinearImitationSpec,
    pub x1: Option<Vec<f64>>,
    pub transformer: TransformerKind,
    pub noise: NoiseChoice,
    pub sigma: f64,
    pub tol_inner: f64,
    pub abort_magnitude: f64,
    pub out: PathBuf,
    pub emit: Emit,
    pub jobs: usize,
    pub max_points: usize,
}

pub fn default_imitation() -> LinearImitationSpec {
    LinearImitationSpec {
        a: 0.5,
        a_b: 0.2,
        k_star: -0.5,
        sigma0_sq: 1.0,
        horizon: 3,
        gain_lo: -1.0,
        gain_hi: 1.0,
    }
}

impl ExperimentConfig {
    pub fn resolve(raw: &RawConfig, default_emit: Emit) -> CliResult<Self> {
        let instance = match raw.string("instance").unwrap_or("counterexample") {
            "counterexample" => InstanceKind::Counterexample,
            "affine" | "affine-quadratic" | "affine_quadratic" => InstanceKind::Affine,
            "imitation" | "linear-imitation" | "linear_imitation" => InstanceKind::Imitation,
            other => {
                return Err(raw.error(
                    "instance",
                    format!("unknown instance `{other}` (counterexample|affine|imitation)"),
                ))
            }
        };
        for key in INSTANCE_KEYS {
            if raw.get(key).is_some() && !instance.own_keys().contains(&key) {
                return Err(raw.error(
                    key,
                    format!("does not apply to instance `{}`", instance.name()),
                ));
            }
        }

        let transformer = match raw.string("transformer").unwrap_or("none") {
            "none" => TransformerKind::None,
            "mixing" => TransformerKind::Mixing,
            "weighted" => TransformerKind::Weighted,
            "weighted-expert" | "weighted_expert" => TransformerKind::WeightedExpert,
            other => {
                return Err(raw.error(
                    "transformer",
                    format!("unknown transformer `{other}` (none|mixing|weighted|weighted-expert)"),
                ))
            }
        };
        let noise = match raw.string("noise").unwrap_or("none") {
            "none" => NoiseChoice::None,
            "uniform" => NoiseChoice::Uniform,
            "bernoulli" | "scaled-bernoulli" | "scaled_bernoulli" => NoiseChoice::Bernoulli,
            "gaussian-unchecked" | "gaussian_unchecked" => NoiseChoice::GaussianUnchecked,
            other => {
                return Err(raw.error(
                    "noise",
                    format!("unknown noise `{other}` (none|uniform|bernoulli|gaussian-unchecked)"),
                ))
            }
        };
        if transformer != TransformerKind::Mixing && raw.get("q").is_some() {
            return Err(raw.error("q", "only applies with `transformer = mixing`"));
        }
        if !matches!(
            transformer,
            TransformerKind::Weighted | TransformerKind::WeightedExpert
        ) && raw.get("lambda").is_some()
        {
            return Err(raw.error("lambda", "only applies with a weighted transformer"));
        }
        if noise == NoiseChoice::None {
            for key in ["m0", "r", "sigma"] {
                if raw.get(key).is_some() {
                    return Err(raw.error(key, "only applies to sampled runs (set `noise`)"));
                }
            }
        }

        let matrix = raw.matrix("M")?;
        if matrix.is_some() && raw.get("theta").is_some() {
            return Err(raw.error("theta", "conflicts with an explicit `M`"));
        }
        let theta = if instance == InstanceKind::Imitation || matrix.is_some() {
            vec![f64::NAN]
        } else {
            raw.list("theta", "a number")?.unwrap_or_else(|| vec![0.5])
        };

        let axes = Axes {
            theta,
            lambda: raw.list("lambda", "a number")?.unwrap_or_else(|| vec![1.0]),
            q: raw.list("q", "a number")?.unwrap_or_else(|| vec![0.5]),
            m0: raw
                .list("m0", "a positive integer")?
                .unwrap_or_else(|| vec![1]),
            r: raw.list("r", "a number")?.unwrap_or_else(|| vec![0.0]),
            iters: raw
                .list("iters", "a positive integer")?
                .unwrap_or_else(|| vec![100]),
            seed: raw
                .list("seed", "an unsigned integer")?
                .unwrap_or_else(|| vec![0]),
        };
        if axes.iters.contains(&0) {
            return Err(raw.error("iters", "must be at least 1"));
        }
        if axes.m0.contains(&0) {
            return Err(raw.error("m0", "must be at least 1"));
        }

        let x1 = raw.list::<f64>("x1", "a number")?;
        let dim = match (
            raw.scalar::<usize>("dim", "a positive integer")?,
            &matrix,
            &x1,
        ) {
            (Some(0), _, _) => return Err(raw.error("dim", "must be at least 1")),
            (Some(d), _, _) => d,
            (None, Some(m), _) => m.len(),
            (None, None, Some(x)) if instance == InstanceKind::Affine => x.len(),
            _ => 1,
        };

        let mut imitation = default_imitation();
        for (key, slot) in [
            ("a", &mut imitation.a),
            ("a_b", &mut imitation.a_b),
            ("k_star", &mut imitation.k_star),
            ("sigma0_sq", &mut imitation.sigma0_sq),
            ("gain_lo", &mut imitation.gain_lo),
            ("gain_hi", &mut imitation.gain_hi),
        ] {
            if let Some(v) = raw.scalar::<f64>(key, "a number")? {
                *slot = v;
            }
        }
        let horizon = raw.scalar::<usize>("horizon", "a positive integer")?;
        if instance == InstanceKind::Imitation {
            if let Some(h) = horizon {
                imitation.horizon = h;
            }
        }

        let emit = match raw.string("emit") {
            None => default_emit,
            Some(list) => {
                let mut e = Emit {
                    csv: false,
                    json: false,
                    svg: false,
                };
                for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    match item {
                        "csv" => e.csv = true,
                        "json" => e.json = true,
                        "svg" => e.svg = true,
                        other => {
                            return Err(raw
                                .error("emit", format!("unknown format `{other}` (csv|json|svg)")))
                        }
                    }
                }
                e
            }
        };

        let out = match raw.string("out") {
            Some(p) => PathBuf::from(p),
            None => std::env::var_os(OUT_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
        };
        let jobs = raw
            .scalar::<usize>("jobs", "a positive integer")?
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        if jobs == 0 {
            return Err(raw.error("jobs", "must be at least 1"));
        }

        Ok(Self {
            instance,
            axes,
            matrix,
            b: raw.list("b", "a number")?,
            alpha: raw.scalar("alpha", "a number")?.unwrap_or(2.0),
            offset: raw.scalar("offset", "a number")?.unwrap_or(0.0),
            dim,
            horizon,
            half_width: raw.scalar("half_width", "a number")?.unwrap_or(2.0),
            imitation,
            x1,
            transformer,
            noise,
            sigma: raw.scalar("sigma", "a number")?.unwrap_or(1.0),
            tol_inner: raw
                .scalar("tol_inner", "a number")?
                .unwrap_or(DEFAULT_TOL_INNER),
            abort_magnitude: raw
                .scalar("abort_magnitude", "a number")?
                .unwrap_or(DEFAULT_ABORT_MAGNITUDE),
            out,
            emit,
            jobs,
            max_points: raw
                .scalar("max_points", "a positive integer")?
                .unwrap_or(DEFAULT_MAX_POINTS),
        })
    }

    /// Axes with more than one value.
    pub fn swept_axes(&self) -> Vec<&'static str> {
        self.axes.multi_valued()
    }

    /// Cartesian product of the axes in a fixed nesting order
    /// (theta outermost, seed innermost).
    pub fn points(&self) -> CliResult<Vec<PointConfig>> {
        let size = self.axes.size();
        if size > self.max_points {
            return Err(CliError::Invalid(format!(
                "sweep has {size} points, above the cap of {}",
                self.max_points
            )));
        }
        let a = &self.axes;
        let mut out = Vec::with_capacity(size);
        for &theta in &a.theta {
            for &lambda in &a.lambda {
                for &q in &a.q {
                    for &m0 in &a.m0 {
                        for &r in &a.r {
                            for &iters in &a.iters {
                                for &seed in &a.seed {
                                    out.push(PointConfig {
                                        base: self.clone(),
                                        theta,
                                        lambda,
                                        q,
                                        m0,
                                        r,
                                        iters,
                                        seed,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// One grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointConfig {
    base: ExperimentConfig,
    pub theta: f64,
    pub lambda: f64,
    pub q: f64,
    pub m0: usize,
    pub r: f64,
    pub iters: usize,
    pub seed: u64,
}

fn fmt_list(v: &[f64]) -> String {
    v.iter()
        .map(|x| format_f64(*x))
        .collect::<Vec<_>>()
        .join(",")
}

impl PointConfig {
    pub fn experiment(&self) -> &ExperimentConfig {
        &self.base
    }

    fn affine_spec(&self) -> AffineQuadraticSpec {
        let c = &self.base;
        let d = c.dim;
        let m = c.matrix.clone().unwrap_or_else(|| {
            (0..d)
                .map(|i| {
                    (0..d)
                        .map(|j| if i == j { self.theta } else { 0.0 })
                        .collect()
                })
                .collect()
        });
        let b = c.b.clone().unwrap_or_else(|| vec![0.0; m.len()]);
        let mut spec = AffineQuadraticSpec::new(m, b, c.alpha);
        spec.offset = c.offset;
        spec.half_width = c.half_width;
        if let Some(h) = c.horizon {
            spec.horizon = h;
        }
        spec
    }

    pub fn instance(&self) -> CliResult<ProblemInstance> {
        let c = &self.base;
        let inst = match c.instance {
            InstanceKind::Counterexample => try_make_counterexample(&CounterexampleSpec {
                theta: self.theta,
                half_width: c.half_width,
            })?,
            InstanceKind::Affine => make_affine_quadratic(&self.affine_spec())?,
            InstanceKind::Imitation => make_linear_imitation(&c.imitation)?,
        };
        let noise = match c.noise {
            NoiseChoice::None => return Ok(inst),
            NoiseChoice::Uniform => NoiseModel::uniform(c.sigma)?,
            NoiseChoice::Bernoulli => NoiseModel::scaled_bernoulli(c.sigma)?,
            NoiseChoice::GaussianUnchecked => NoiseModel::gaussian_unchecked(c.sigma)?,
        };
        Ok(with_noise(&inst, noise))
    }

    fn x1(&self, dimension: usize) -> CliResult<ParameterPoint> {
        let default = match self.base.instance {
            InstanceKind::Imitation => 0.9,
            _ => 1.0,
        };
        let v = self
            .base
            .x1
            .clone()
            .unwrap_or_else(|| vec![default; dimension]);
        if v.len() != dimension {
            return Err(CliError::Invalid(format!(
                "x1 has {} coordinates, instance dimension is {dimension}",
                v.len()
            )));
        }
        Ok(ParameterPoint::new(v)?)
    }

    pub fn transformer(&self, alpha: f64, dimension: usize) -> Option<CostTransformer> {
        match self.base.transformer {
            TransformerKind::None => None,
            TransformerKind::Mixing => Some(CostTransformer::Mixing { q: self.q }),
            TransformerKind::Weighted => Some(CostTransformer::WeightedRegularization {
                lambda: self.lambda,
                regularizer: Regularizer::Quadratic {
                    center: vec![0.0; dimension],
                    modulus: alpha,
                },
            }),
            TransformerKind::WeightedExpert => Some(CostTransformer::WeightedRegularization {
                lambda: self.lambda,
                regularizer: Regularizer::ExpertCost,
            }),
        }
    }

    pub fn build(&self) -> CliResult<(ProblemInstance, LoopConfig)> {
        let inst = self.instance()?;
        let d = inst.dimension();
        let x1 = self.x1(d)?;
        let mut cfg = match self.base.noise {
            NoiseChoice::None => LoopConfig::deterministic(self.iters, x1),
            _ => LoopConfig::stochastic(
                self.iters,
                x1,
                SamplingSchedule::new(self.m0, self.r, self.seed)?,
            ),
        };
        cfg.tol_inner = self.base.tol_inner;
        cfg.abort_magnitude = self.base.abort_magnitude;
        let alpha = inst.objective().declared().alpha;
        cfg.transformer = self.transformer(alpha, d);
        Ok((inst, cfg))
    }

    /// Resolved settings that determine the run, in key order.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let c = &self.base;
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("instance", c.instance.name().into());
        match c.instance {
            InstanceKind::Counterexample => {
                put("theta", format_f64(self.theta));
                put("half_width", format_f64(c.half_width));
            }
            InstanceKind::Affine => {
                let spec = self.affine_spec();
                put(
                    "M",
                    spec.m
                        .iter()
                        .map(|r| fmt_list(r))
                        .collect::<Vec<_>>()
                        .join(";"),
                );
                put("b", fmt_list(&spec.b));
                put("alpha", format_f64(spec.alpha));
                put("offset", format_f64(spec.offset));
                put("horizon", spec.horizon.to_string());
                put("half_width", format_f64(spec.half_width));
            }
            InstanceKind::Imitation => {
                let s = &c.imitation;
                put("a", format_f64(s.a));
                put("a_b", format_f64(s.a_b));
                put("k_star", format_f64(s.k_star));
                put("sigma0_sq", format_f64(s.sigma0_sq));
                put("horizon", s.horizon.to_string());
                put("gain_lo", format_f64(s.gain_lo));
                put("gain_hi", format_f64(s.gain_hi));
            }
        }
        if let Some(x) = &c.x1 {
            put("x1", fmt_list(x));
        }
        put("iters", self.iters.to_string());
        put("transformer", c.transformer.name().into());
        match c.transformer {
            TransformerKind::Mixing => put("q", format_f64(self.q)),
            TransformerKind::Weighted | TransformerKind::WeightedExpert => {
                put("lambda", format_f64(self.lambda))
            }
            TransformerKind::None => {}
        }
        put("noise", c.noise.name().into());
        if c.noise != NoiseChoice::None {
            put("sigma", format_f64(c.sigma));
            put("m0", self.m0.to_string());
            put("r", format_f64(self.r));
            put("seed", self.seed.to_string());
        }
        if c.tol_inner != DEFAULT_TOL_INNER {
            put("tol_inner", format_f64(c.tol_inner));
        }
        if c.abort_magnitude != DEFAULT_ABORT_MAGNITUDE {
            put("abort_magnitude", format_f64(c.abort_magnitude));
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: Emit = Emit {
        csv: true,
        json: true,
        svg: false,
    };

    #[test]
    fn file_then_flags() {
        let mut raw = RawConfig::parse_str(
            "# comment\ninstance = counterexample\ntheta = 0.3  # trailing\niters=50\n",
            "exp.cfg",
        )
        .unwrap();
        raw.set_flag("--theta", "0.9").unwrap();
        let cfg = ExperimentConfig::resolve(&raw, ALL).unwrap();
        assert_eq!(cfg.axes.theta, vec![0.9]);
        assert_eq!(cfg.axes.iters, vec![50]);
    }

    #[test]
    fn errors_name_line_and_field() {
        let err = RawConfig::parse_str("theta = 0.3\n\nbogus = 1\n", "exp.cfg").unwrap_err();
        assert_eq!(err.to_string(), "exp.cfg:3: field `bogus`: unknown key");
        let raw = RawConfig::parse_str("theta = 0.3\niters = ten\n", "exp.cfg").unwrap();
        let err = ExperimentConfig::resolve(&raw, ALL).unwrap_err();
        assert!(
            err.to_string().starts_with("exp.cfg:2: field `iters`"),
            "{err}"
        );
        assert!(RawConfig::parse_str("theta 0.3\n", "x").is_err());
        assert!(RawConfig::parse_str("theta=1\ntheta=2\n", "x").is_err());
    }

    #[test]
    fn instance_keys_are_checked() {
        let raw = RawConfig::parse_str("instance = imitation\ntheta = 0.3\n", "x").unwrap();
        assert!(ExperimentConfig::resolve(&raw, ALL).is_err());
        let raw = RawConfig::parse_str("q = 0.3\n", "x").unwrap();
        assert!(ExperimentConfig::resolve(&raw, ALL).is_err());
    }

    #[test]
    fn grid_order_and_cap() {
        let mut raw = RawConfig::parse_str("theta = 0.3, 0.6\nseed = 1,2,3\n", "x").unwrap();
        let cfg = ExperimentConfig::resolve(&raw, ALL).unwrap();
        let pts = cfg.points().unwrap();
        let order: Vec<(f64, u64)> = pts.iter().map(|p| (p.theta, p.seed)).collect();
        assert_eq!(
            order,
            vec![(0.3, 1), (0.3, 2), (0.3, 3), (0.6, 1), (0.6, 2), (0.6, 3)]
        );
        raw.set_flag("max_points", "5").unwrap();
        let cfg = ExperimentConfig::resolve(&raw, ALL).unwrap();
        assert!(cfg.points().is_err());
    }

    #[test]
    fn affine_matrix_flag() {
        let mut raw = RawConfig::new();
        raw.set_flag("instance", "affine").unwrap();
        raw.set_flag("M", "0,0.9;0,0").unwrap();
        raw.set_flag("x1", "1,1").unwrap();
        let cfg = ExperimentConfig::resolve(&raw, ALL).unwrap();
        let p = &cfg.points().unwrap()[0];
        let (inst, _) = p.build().unwrap();
        assert!((inst.constants().unwrap().theta - 0.9).abs() < 1e-12);
        assert_eq!(p.echo()["M"], "0.0,0.9;0.0,0.0");
    }
}
