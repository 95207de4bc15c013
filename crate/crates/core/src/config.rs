//! Flat `key = value` run configuration with command-line overrides.
//!
//! Unset optional keys fall back to the defaults of the selected case.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::cases::{CaseDefinition, CaseId};
use crate::error::{Error, Result};
use crate::motion::{AdaptiveParams, Limiter, MotionSpec, Prescribed};
use crate::solver::SolverParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MotionMode {
    Static,
    Prescribed,
    Adaptive,
}

impl MotionMode {
    fn name(&self) -> &'static str {
        match self {
            MotionMode::Static => "static",
            MotionMode::Prescribed => "prescribed",
            MotionMode::Adaptive => "adaptive",
        }
    }
}

/// When snapshots are written during a run. The final state is always
/// written.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cadence {
    Final,
    Steps(usize),
    Time(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Vtk,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub case: CaseId,
    pub cfl: f64,
    pub gravity: Option<f64>,
    pub end_time: Option<f64>,
    pub dx: Option<f64>,
    pub max_steps: Option<usize>,
    pub nonlinear: bool,
    pub motion: Option<MotionMode>,
    pub amplitude: Option<f64>,
    pub kx: Option<f64>,
    pub ky: Option<f64>,
    pub c: Option<f64>,
    pub eps: Option<f64>,
    pub n_m: Option<usize>,
    pub n_s: Option<usize>,
    pub limiter: Option<Limiter>,
    pub max_fraction: Option<f64>,
    pub output_dir: PathBuf,
    pub snapshot: Cadence,
    pub formats: Vec<Format>,
    /// Sample count of the centreline extract.
    pub centerline_points: usize,
}

impl RunConfig {
    pub fn new(case: CaseId) -> Self {
        RunConfig {
            case,
            cfl: 0.5,
            gravity: None,
            end_time: None,
            dx: None,
            max_steps: None,
            nonlinear: true,
            motion: None,
            amplitude: None,
            kx: None,
            ky: None,
            c: None,
            eps: None,
            n_m: None,
            n_s: None,
            limiter: None,
            max_fraction: None,
            output_dir: PathBuf::from("output"),
            snapshot: Cadence::Final,
            formats: vec![Format::Csv],
            centerline_points: 401,
        }
    }

    /// Parses a config file. Blank lines and `#` comments are ignored;
    /// `case` must be present.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse { line: i + 1, msg: format!("expected key = value, got `{line}`") })?;
            pairs.push((i + 1, k.trim().to_string(), v.trim().to_string()));
        }
        let case = pairs
            .iter()
            .find(|(_, k, _)| k == "case")
            .ok_or_else(|| Error::Config("missing `case`".into()))?;
        let mut cfg = RunConfig::new(case.2.parse()?);
        for (line, k, v) in &pairs {
            cfg.set(k, v).map_err(|e| Error::Parse { line: *line, msg: e.to_string() })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::Config(format!("invalid value `{v}` for `{key}`")))
        }
        match key {
            "case" => self.case = value.parse()?,
            "cfl" => self.cfl = num(key, value)?,
            "gravity" => self.gravity = Some(num(key, value)?),
            "end_time" => self.end_time = Some(num(key, value)?),
            "dx" => self.dx = Some(num(key, value)?),
            "max_steps" => self.max_steps = Some(num(key, value)?),
            "nonlinear" => self.nonlinear = num(key, value)?,
            "motion" => {
                self.motion = Some(match value {
                    "static" => MotionMode::Static,
                    "prescribed" => MotionMode::Prescribed,
                    "adaptive" => MotionMode::Adaptive,
                    _ => return Err(Error::Config(format!("unknown motion mode `{value}`"))),
                })
            }
            "amplitude" => self.amplitude = Some(num(key, value)?),
            "kx" => self.kx = Some(num(key, value)?),
            "ky" => self.ky = Some(num(key, value)?),
            "c" => self.c = Some(num(key, value)?),
            "eps" => self.eps = Some(num(key, value)?),
            "n_m" => self.n_m = Some(num(key, value)?),
            "n_s" => self.n_s = Some(num(key, value)?),
            "limiter" => {
                self.limiter = Some(match value.split_once(':') {
                    None if value == "literal" => Limiter::Literal,
                    Some(("fraction", f)) => Limiter::Fraction(num(key, f)?),
                    _ => return Err(Error::Config(format!("limiter must be `literal` or `fraction:<f>`, got `{value}`"))),
                })
            }
            "max_fraction" => self.max_fraction = Some(num(key, value)?),
            "output_dir" => self.output_dir = PathBuf::from(value),
            "snapshot" => {
                self.snapshot = match value.split_once(':') {
                    None if value == "final" => Cadence::Final,
                    Some(("steps", n)) => Cadence::Steps(num(key, n)?),
                    Some(("time", t)) => Cadence::Time(num(key, t)?),
                    _ => return Err(Error::Config(format!("snapshot must be `final`, `steps:<n>` or `time:<t>`, got `{value}`"))),
                }
            }
            "formats" => {
                self.formats = value
                    .split(',')
                    .map(|f| match f.trim() {
                        "csv" => Ok(Format::Csv),
                        "vtk" => Ok(Format::Vtk),
                        other => Err(Error::Config(format!("unknown format `{other}`"))),
                    })
                    .collect::<Result<_>>()?
            }
            "centerline_points" => self.centerline_points = num(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad(format!("cfl must lie in (0, 1], got {}", self.cfl));
        }
        if let Some(t) = self.end_time.filter(|t| !(*t > 0.0)) {
            return bad(format!("end_time must be positive, got {t}"));
        }
        if let Some(dx) = self.dx.filter(|d| !(*d > 0.0)) {
            return bad(format!("dx must be positive, got {dx}"));
        }
        if let Some(g) = self.gravity.filter(|g| !(*g > 0.0)) {
            return bad(format!("gravity must be positive, got {g}"));
        }
        if self.n_m == Some(0) || self.n_s == Some(0) {
            return bad("n_m and n_s must be at least 1".into());
        }
        match self.snapshot {
            Cadence::Steps(0) => return bad("snapshot step cadence must be at least 1".into()),
            Cadence::Time(t) if !(t > 0.0) => return bad(format!("snapshot time cadence must be positive, got {t}")),
            _ => {}
        }
        if self.formats.is_empty() {
            return bad("at least one output format is required".into());
        }
        if self.centerline_points < 2 {
            return bad("centerline_points must be at least 2".into());
        }
        Ok(())
    }

    /// Writes every set key; `parse(serialize(c)) == c`.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("case", self.case.name().into());
        put("cfl", self.cfl.to_string());
        let opt = |v: Option<f64>| v.map(|x| x.to_string());
        for (k, v) in [
            ("gravity", opt(self.gravity)),
            ("end_time", opt(self.end_time)),
            ("dx", opt(self.dx)),
            ("max_steps", self.max_steps.map(|n| n.to_string())),
            ("motion", self.motion.map(|m| m.name().to_string())),
            ("amplitude", opt(self.amplitude)),
            ("kx", opt(self.kx)),
            ("ky", opt(self.ky)),
            ("c", opt(self.c)),
            ("eps", opt(self.eps)),
            ("n_m", self.n_m.map(|n| n.to_string())),
            ("n_s", self.n_s.map(|n| n.to_string())),
            (
                "limiter",
                self.limiter.map(|l| match l {
                    Limiter::Literal => "literal".to_string(),
                    Limiter::Fraction(f) => format!("fraction:{f}"),
                }),
            ),
            ("max_fraction", opt(self.max_fraction)),
        ] {
            if let Some(v) = v {
                put(k, v);
            }
        }
        put("nonlinear", self.nonlinear.to_string());
        put("output_dir", self.output_dir.display().to_string());
        put(
            "snapshot",
            match self.snapshot {
                Cadence::Final => "final".into(),
                Cadence::Steps(n) => format!("steps:{n}"),
                Cadence::Time(t) => format!("time:{t}"),
            },
        );
        let formats: Vec<&str> = self
            .formats
            .iter()
            .map(|f| match f {
                Format::Csv => "csv",
                Format::Vtk => "vtk",
            })
            .collect();
        put("formats", formats.join(","));
        put("centerline_points", self.centerline_points.to_string());
        s
    }

    /// Case definition with every override applied.
    pub fn case_definition(&self) -> CaseDefinition {
        let mut case = CaseDefinition::new(self.case);
        if let Some(g) = self.gravity {
            case.gravity = g;
        }
        if let Some(t) = self.end_time {
            case.end_time = t;
        }
        if let Some(dx) = self.dx {
            case.dx = dx;
        }
        let mode = self.motion.unwrap_or(match case.motion {
            MotionSpec::Static => MotionMode::Static,
            MotionSpec::Prescribed(_) => MotionMode::Prescribed,
            MotionSpec::Adaptive(_) => MotionMode::Adaptive,
        });
        case.motion = match mode {
            MotionMode::Static => MotionSpec::Static,
            MotionMode::Prescribed => {
                let mut p = match case.motion {
                    MotionSpec::Prescribed(p) => p,
                    _ => Prescribed { amplitude: 0.05, kx: 2.0, ky: 4.0 },
                };
                p.amplitude = self.amplitude.unwrap_or(p.amplitude);
                p.kx = self.kx.unwrap_or(p.kx);
                p.ky = self.ky.unwrap_or(p.ky);
                MotionSpec::Prescribed(p)
            }
            MotionMode::Adaptive => {
                let mut a = match case.motion {
                    MotionSpec::Adaptive(a) => a,
                    _ => AdaptiveParams::default(),
                };
                a.c = self.c.unwrap_or(a.c);
                a.eps = self.eps.unwrap_or(a.eps);
                a.n_m = self.n_m.unwrap_or(a.n_m);
                a.n_s = self.n_s.unwrap_or(a.n_s);
                a.limiter = self.limiter.unwrap_or(a.limiter);
                a.max_fraction = self.max_fraction.unwrap_or(a.max_fraction);
                MotionSpec::Adaptive(a)
            }
        };
        case
    }

    pub fn solver_params(&self) -> SolverParams {
        SolverParams { gravity: self.case_definition().gravity, cfl: self.cfl, nonlinear: self.nonlinear }
    }
}
