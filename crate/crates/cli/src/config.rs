//! Sectioned key-value run configuration.
//!
//! ```text
//! [grid]
//! n_interior = 255
//! cfl_factor = 0.5
//! [omega]
//! a = 0.7
//! b = 1.0
//! [nonlinearity]
//! kind = cubic
//! lambda = 15
//! coefficients = 0 -1 0 1
//! [tolerances]
//! tol_newton = 1e-10
//! delta_conv = 1e-4
//! tol_hum = 2e-5
//! tol_local = 1e-4
//! tau_seg = 1e-3
//! tol_plan = 1e-2
//! [horizons]
//! t_max = 200
//! [run]
//! seed = 7
//! output = out
//! ```
//!
//! `kind` is `cubic`, `linear` or `custom`; `coefficients` (powers of `s`,
//! custom only) are scaled by `lambda`. Every key is optional; missing keys
//! take the defaults above. Comments must sit on their own line.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use wavectl_core::io::KeyValue;
use wavectl_core::localctl::HORIZON_MARGIN;
use wavectl_core::{ControlRegion, Grid, Nonlinearity, Result, WaveError};

#[derive(Debug, Clone, PartialEq)]
pub enum Kind {
    Cubic,
    Linear,
    Custom(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub n_interior: usize,
    pub cfl_factor: f64,
    pub a: f64,
    pub b: f64,
    pub kind: Kind,
    pub lambda: f64,
    pub tol_newton: f64,
    pub delta_conv: f64,
    pub tol_hum: f64,
    pub tol_local: f64,
    pub tau_seg: f64,
    pub tol_plan: f64,
    /// Local-control horizon; defaults to the geometric control time plus 0.8.
    pub t_local: Option<f64>,
    pub t_max: f64,
    pub seed: u64,
    pub output: PathBuf,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            n_interior: 255,
            cfl_factor: 0.5,
            a: 0.7,
            b: 1.0,
            kind: Kind::Cubic,
            lambda: 15.0,
            tol_newton: 1e-10,
            delta_conv: 1e-4,
            tol_hum: 2e-5,
            tol_local: 1e-4,
            tau_seg: 1e-3,
            tol_plan: 1e-2,
            t_local: None,
            t_max: 200.0,
            seed: 7,
            output: PathBuf::from("out"),
        }
    }
}

const KNOWN: &[(&str, &[&str])] = &[
    ("grid", &["n_interior", "cfl_factor"]),
    ("omega", &["a", "b"]),
    ("nonlinearity", &["kind", "lambda", "coefficients"]),
    ("tolerances", &["tol_newton", "delta_conv", "tol_hum", "tol_local", "tau_seg", "tol_plan"]),
    ("horizons", &["t_local", "t_max"]),
    ("run", &["seed", "output"]),
];

fn parse<T: std::str::FromStr>(kv: &KeyValue, section: &str, key: &str, default: T) -> Result<T> {
    match kv.get(section, key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| WaveError::Config(format!("[{section}] {key} = {v:?} does not parse"))),
    }
}

impl Config {
    pub fn from_text(text: &str) -> Result<Self> {
        let kv = KeyValue::parse(text).map_err(|e| WaveError::Config(e.to_string()))?;
        for (section, entries) in &kv.sections {
            let known = KNOWN
                .iter()
                .find(|(s, _)| s == section)
                .ok_or_else(|| WaveError::Config(format!("unknown section [{section}]")))?;
            for (k, _) in entries {
                if !known.1.contains(&k.as_str()) {
                    return Err(WaveError::Config(format!("unknown key {k} in [{section}]")));
                }
            }
        }
        let d = Config::default();
        let kind = match kv.get("nonlinearity", "kind").unwrap_or("cubic") {
            "cubic" => Kind::Cubic,
            "linear" => Kind::Linear,
            "custom" => {
                let raw = kv
                    .get("nonlinearity", "coefficients")
                    .ok_or_else(|| WaveError::Config("custom nonlinearity needs coefficients".into()))?;
                let cs = raw
                    .split_whitespace()
                    .map(|c| c.parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| WaveError::Config(format!("bad coefficient list {raw:?}")))?;
                Kind::Custom(cs)
            }
            other => return Err(WaveError::Config(format!("unknown nonlinearity kind {other}"))),
        };
        let cfg = Config {
            n_interior: parse(&kv, "grid", "n_interior", d.n_interior)?,
            cfl_factor: parse(&kv, "grid", "cfl_factor", d.cfl_factor)?,
            a: parse(&kv, "omega", "a", d.a)?,
            b: parse(&kv, "omega", "b", d.b)?,
            kind,
            lambda: parse(&kv, "nonlinearity", "lambda", d.lambda)?,
            tol_newton: parse(&kv, "tolerances", "tol_newton", d.tol_newton)?,
            delta_conv: parse(&kv, "tolerances", "delta_conv", d.delta_conv)?,
            tol_hum: parse(&kv, "tolerances", "tol_hum", d.tol_hum)?,
            tol_local: parse(&kv, "tolerances", "tol_local", d.tol_local)?,
            tau_seg: parse(&kv, "tolerances", "tau_seg", d.tau_seg)?,
            tol_plan: parse(&kv, "tolerances", "tol_plan", d.tol_plan)?,
            t_local: kv
                .get("horizons", "t_local")
                .map(|v| v.parse().map_err(|_| WaveError::Config(format!("[horizons] t_local = {v:?} does not parse"))))
                .transpose()?,
            t_max: parse(&kv, "horizons", "t_max", d.t_max)?,
            seed: parse(&kv, "run", "seed", d.seed)?,
            output: kv.get("run", "output").map_or(d.output, PathBuf::from),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_text(&text)
    }

    /// Coefficient of `s` in `f`, which sets the pitchfork points.
    fn linear_rate(&self) -> Option<f64> {
        match &self.kind {
            Kind::Cubic => Some(self.lambda),
            Kind::Linear => None,
            Kind::Custom(c) => Some(-self.lambda * c.get(1).copied().unwrap_or(0.0)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        ControlRegion::new(self.a, self.b)?;
        for (name, v) in [
            ("cfl_factor", self.cfl_factor),
            ("tol_newton", self.tol_newton),
            ("delta_conv", self.delta_conv),
            ("tol_hum", self.tol_hum),
            ("tol_local", self.tol_local),
            ("tau_seg", self.tau_seg),
            ("tol_plan", self.tol_plan),
            ("t_local", self.t_local.unwrap_or(1.0)),
            ("t_max", self.t_max),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(WaveError::Config(format!("{name} = {v} must be positive")));
            }
        }
        if !self.lambda.is_finite() {
            return Err(WaveError::Config("lambda must be finite".into()));
        }
        if let Some(rate) = self.linear_rate() {
            for k in 1..=1000 {
                let crit = (k as f64 * PI).powi(2);
                if (rate - crit).abs() < 1e-3 {
                    return Err(WaveError::Config(format!(
                        "lambda {rate} is within 1e-3 of the bifurcation point {crit} (k = {k})"
                    )));
                }
                if crit > rate + 1.0 {
                    break;
                }
            }
        }
        let t_gcc = ControlRegion::new(self.a, self.b)?.control_time();
        if self.horizon() <= t_gcc {
            return Err(WaveError::Config(format!(
                "t_local {} must exceed the geometric control time {t_gcc}",
                self.horizon()
            )));
        }
        self.nonlinearity()?;
        self.grid()?;
        Ok(())
    }

    pub fn horizon(&self) -> f64 {
        self.t_local
            .unwrap_or_else(|| ControlRegion { a: self.a, b: self.b }.control_time() + HORIZON_MARGIN)
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.n_interior, self.cfl_factor, ControlRegion::new(self.a, self.b)?)
    }

    pub fn nonlinearity(&self) -> Result<Nonlinearity> {
        match &self.kind {
            Kind::Cubic => Ok(Nonlinearity::cubic(self.lambda)),
            Kind::Linear => Ok(Nonlinearity::linear()),
            Kind::Custom(c) => Nonlinearity::polynomial(self.lambda, c.clone()),
        }
    }
}
