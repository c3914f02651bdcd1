//! Experiment configuration: flat `section.key = value` text, or the same
//! keys as a nested JSON object.
//!
//! ```text
//! # desk run
//! model.q = 5
//! grid.n = 127
//! initial.preset = sine
//! initial.amplitude = 0.1
//! stepper.tEnd = 15
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::{Scheme, StepperConfig};
use crate::grid::ModelParams;
use crate::optimize::MinimizeOptions;
use crate::wells::EstimateOptions;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Shape {
    /// `Σ sin(mπx/L)` over the listed modes.
    Sine { modes: Vec<u32> },
    /// `exp(1 − 1/(1 − r²))` with `r = 2x/L − 1`.
    Bump,
    /// Seeded random combination of low sine modes.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Branch {
    /// `λ < λ*`, where `I > 0`.
    Lower,
    /// `λ > λ*`, where `I < 0`.
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Scaling {
    Amplitude(f64),
    /// `λ*·factor` along the shape's ray.
    ToI { positive: bool, factor: f64 },
    /// The point of the chosen branch with `J = fraction·d`.
    ToJ { fraction: f64, branch: Branch },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitialSpec {
    pub shape: Shape,
    pub scaling: Scaling,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepAxis {
    pub key: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelParams,
    pub grid_n: usize,
    pub stepper: StepperConfig,
    pub initial: InitialSpec,
    pub seed: u64,
    pub minimize: MinimizeOptions,
    pub estimate: EstimateOptions,
    pub well_deltas: Vec<f64>,
    pub sweep: Vec<SweepAxis>,
    pub out_dir: PathBuf,
    pub timings: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelParams::desk(),
            grid_n: 127,
            stepper: StepperConfig::default(),
            initial: InitialSpec {
                shape: Shape::Sine { modes: vec![1] },
                scaling: Scaling::Amplitude(0.1),
            },
            seed: 0,
            minimize: MinimizeOptions::default(),
            estimate: EstimateOptions::default(),
            well_deltas: vec![0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0],
            sweep: Vec::new(),
            out_dir: PathBuf::from("out"),
            timings: false,
        }
    }
}

fn num(line: Option<usize>, key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .map_err(|_| Error::config(line, format!("{key}: expected a number, got '{v}'")))
}

fn uint(line: Option<usize>, key: &str, v: &str) -> Result<u64> {
    v.trim()
        .parse::<u64>()
        .map_err(|_| Error::config(line, format!("{key}: expected a non-negative integer, got '{v}'")))
}

fn list(line: Option<usize>, key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| num(line, key, s))
        .collect()
}

/// `a,b,c`, `linspace:lo:hi:n` or `logspace:lo:hi:n` (endpoints inclusive).
pub fn parse_values(line: Option<usize>, key: &str, v: &str) -> Result<Vec<f64>> {
    let v = v.trim();
    let spaced = |rest: &str, log: bool| -> Result<Vec<f64>> {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::config(line, format!("{key}: expected lo:hi:n after the range kind")));
        }
        let lo = num(line, key, parts[0])?;
        let hi = num(line, key, parts[1])?;
        let n = uint(line, key, parts[2])? as usize;
        if n < 2 {
            return Err(Error::config(line, format!("{key}: a range needs at least 2 points")));
        }
        if log && !(lo > 0.0 && hi > 0.0) {
            return Err(Error::config(line, format!("{key}: logspace endpoints must be positive")));
        }
        Ok((0..n)
            .map(|i| {
                let s = i as f64 / (n - 1) as f64;
                if log {
                    (lo.ln() + s * (hi.ln() - lo.ln())).exp()
                } else {
                    lo + s * (hi - lo)
                }
            })
            .collect())
    };
    if let Some(rest) = v.strip_prefix("linspace:") {
        spaced(rest, false)
    } else if let Some(rest) = v.strip_prefix("logspace:") {
        spaced(rest, true)
    } else {
        list(line, key, v)
    }
}

/// Partial initial-data settings, resolved once all keys are read.
#[derive(Debug, Clone, Default)]
struct InitialDraft {
    preset: Option<String>,
    modes: Option<Vec<u32>>,
    amplitude: Option<f64>,
    scale_to_i: Option<bool>,
    factor: Option<f64>,
    scale_to_j: Option<f64>,
    branch: Option<Branch>,
}

/// Builds an [`ExperimentConfig`] from `key = value` assignments.
#[derive(Debug, Clone, Default)]
pub struct ConfigBuilder {
    cfg: ExperimentConfig,
    initial: InitialDraft,
    axes: BTreeMap<u8, (Option<(String, Option<usize>)>, Option<Vec<f64>>)>,
}

impl ConfigBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Applies one assignment. `line` is used for error messages.
    pub fn set(&mut self, key: &str, value: &str, line: Option<usize>) -> Result<()> {
        let v = value.trim();
        let c = &mut self.cfg;
        let n = |k: &str| num(line, k, v);
        match key {
            "model.a" => c.model.a = n(key)?,
            "model.b" => c.model.b = n(key)?,
            "model.k" => {
                c.model.k = match v {
                    "0" => 0,
                    "1" => 1,
                    _ => return Err(Error::config(line, format!("model.k must be 0 or 1, got '{v}'"))),
                }
            }
            "model.p" => c.model.p = n(key)?,
            "model.q" => c.model.q = n(key)?,
            "model.length" => c.model.length = n(key)?,
            "grid.n" => c.grid_n = uint(line, key, v)? as usize,
            "seed" => c.seed = uint(line, key, v)?,
            "stepper.dt0" => c.stepper.dt0 = n(key)?,
            "stepper.dtMin" => c.stepper.dt_min = n(key)?,
            "stepper.dtMax" => c.stepper.dt_max = n(key)?,
            "stepper.safety" => c.stepper.safety = n(key)?,
            "stepper.blowupNormThreshold" => c.stepper.blowup_norm_threshold = n(key)?,
            "stepper.extinctionThreshold" => c.stepper.extinction_threshold = n(key)?,
            "stepper.tEnd" => c.stepper.t_end = n(key)?,
            "stepper.scheme" => {
                c.stepper.scheme = match v {
                    "LaggedImplicit" | "lagged" => Scheme::LaggedImplicit,
                    "FullyImplicit" | "implicit" => Scheme::FullyImplicit,
                    _ => {
                        return Err(Error::config(
                            line,
                            format!("stepper.scheme must be LaggedImplicit or FullyImplicit, got '{v}'"),
                        ))
                    }
                }
            }
            "stepper.nonlinearSolverTol" => c.stepper.nonlinear_solver_tol = n(key)?,
            "stepper.maxNewtonIters" => c.stepper.max_newton_iters = uint(line, key, v)? as usize,
            "stepper.energyTol" => c.stepper.energy_tol = n(key)?,
            "stepper.implicitAfter" => c.stepper.implicit_after = uint(line, key, v)? as usize,
            "stepper.snapshotT0" => c.stepper.snapshot_t0 = n(key)?,
            "stepper.maxSteps" => c.stepper.max_steps = uint(line, key, v)? as usize,
            "minimize.restarts" => c.minimize.restarts = uint(line, key, v)? as usize,
            "minimize.maxIter" => c.minimize.max_iter = uint(line, key, v)? as usize,
            "minimize.gtol" => c.minimize.gtol = n(key)?,
            "minimize.fiberingTol" => c.minimize.fibering_tol = n(key)?,
            "minimize.memory" => c.minimize.memory = uint(line, key, v)? as usize,
            "constants.restarts" => c.estimate.restarts = uint(line, key, v)? as usize,
            "constants.maxIter" => c.estimate.max_iter = uint(line, key, v)? as usize,
            "constants.agreement" => c.estimate.agreement = n(key)?,
            "well.deltas" => c.well_deltas = parse_values(line, key, v)?,
            "initial.preset" | "initial.shape" => {
                if !matches!(v, "sine" | "bump" | "random") {
                    return Err(Error::config(
                        line,
                        format!("{key} must be sine, bump or random, got '{v}'"),
                    ));
                }
                self.initial.preset = Some(v.to_string());
            }
            "initial.modes" => {
                let modes = v
                    .split(',')
                    .map(|s| {
                        s.trim()
                            .parse::<u32>()
                            .ok()
                            .filter(|&m| m > 0)
                            .ok_or_else(|| Error::config(line, format!("initial.modes: bad mode '{s}'")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                self.initial.modes = Some(modes);
            }
            "initial.amplitude" => self.initial.amplitude = Some(n(key)?),
            "initial.scaleToI" => {
                self.initial.scale_to_i = Some(match v {
                    "positive" | "+" => true,
                    "negative" | "-" => false,
                    _ => {
                        return Err(Error::config(
                            line,
                            format!("initial.scaleToI must be positive or negative, got '{v}'"),
                        ))
                    }
                })
            }
            "initial.factor" => self.initial.factor = Some(n(key)?),
            "initial.scaleToJ" => self.initial.scale_to_j = Some(n(key)?),
            "initial.branch" => {
                self.initial.branch = Some(match v {
                    "lower" => Branch::Lower,
                    "upper" => Branch::Upper,
                    _ => {
                        return Err(Error::config(
                            line,
                            format!("initial.branch must be lower or upper, got '{v}'"),
                        ))
                    }
                })
            }
            "sweep.axis1" | "sweep.axis2" => {
                let slot = if key.ends_with('1') { 1 } else { 2 };
                if !v.is_empty() {
                    self.axes.entry(slot).or_default().0 = Some((v.to_string(), line));
                }
            }
            "sweep.values1" | "sweep.values2" => {
                let slot = if key.ends_with('1') { 1 } else { 2 };
                self.axes.entry(slot).or_default().1 = Some(parse_values(line, key, v)?);
            }
            "output.dir" => c.out_dir = PathBuf::from(v),
            "output.timings" => {
                c.timings = match v {
                    "true" => true,
                    "false" => false,
                    _ => return Err(Error::config(line, format!("output.timings must be true or false, got '{v}'"))),
                }
            }
            _ => return Err(Error::config(line, format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn build(mut self) -> Result<ExperimentConfig> {
        let c = &mut self.cfg;
        c.model.validate().map_err(|e| Error::config(None, e.to_string()))?;
        c.stepper.validate().map_err(|e| Error::config(None, e.to_string()))?;
        if c.grid_n < 2 {
            return Err(Error::config(None, format!("grid.n must be at least 2, got {}", c.grid_n)));
        }
        if c.minimize.restarts == 0 || c.estimate.restarts < 2 {
            return Err(Error::config(
                None,
                "minimize.restarts must be >= 1 and constants.restarts >= 2",
            ));
        }
        if c.well_deltas.iter().any(|&d| !(d > 0.0)) {
            return Err(Error::config(None, "well.deltas must be positive"));
        }
        c.minimize.seed = c.seed;
        c.estimate.seed = c.seed;

        let d = &self.initial;
        let shape = match d.preset.as_deref().unwrap_or("sine") {
            "bump" => Shape::Bump,
            "random" => Shape::Random,
            _ => Shape::Sine {
                modes: d.modes.clone().unwrap_or_else(|| vec![1]),
            },
        };
        let scaling = match (d.scale_to_i, d.scale_to_j) {
            (Some(_), Some(_)) => {
                return Err(Error::config(None, "initial.scaleToI and initial.scaleToJ are exclusive"))
            }
            (Some(positive), None) => {
                let factor = d.factor.unwrap_or(if positive { 0.5 } else { 2.0 });
                if !(factor > 0.0) || (positive && factor >= 1.0) || (!positive && factor <= 1.0) {
                    return Err(Error::config(
                        None,
                        format!("initial.factor {factor} does not give the requested sign of I"),
                    ));
                }
                Scaling::ToI { positive, factor }
            }
            (None, Some(fraction)) => {
                let branch = d.branch.unwrap_or(Branch::Lower);
                if branch == Branch::Lower && !(0.0..=1.0).contains(&fraction) {
                    return Err(Error::config(
                        None,
                        format!("initial.scaleToJ on the lower branch needs a fraction in [0, 1], got {fraction}"),
                    ));
                }
                if !fraction.is_finite() {
                    return Err(Error::config(None, "initial.scaleToJ must be finite"));
                }
                Scaling::ToJ { fraction, branch }
            }
            (None, None) => Scaling::Amplitude(d.amplitude.unwrap_or(0.1)),
        };
        c.initial = InitialSpec { shape, scaling };

        let mut axes = Vec::new();
        for (slot, (key, values)) in std::mem::take(&mut self.axes) {
            let Some((key, line)) = key else {
                return Err(Error::config(None, format!("sweep.values{slot} given without sweep.axis{slot}")));
            };
            let Some(values) = values else {
                return Err(Error::config(line, format!("sweep.axis{slot} given without sweep.values{slot}")));
            };
            if key.starts_with("sweep.") || key == "output.dir" {
                return Err(Error::config(line, format!("'{key}' cannot be swept")));
            }
            // the key must accept a number
            ConfigBuilder::new().set(&key, &values[0].to_string(), line)?;
            axes.push(SweepAxis { key, values });
        }
        c.sweep = axes;
        Ok(self.cfg)
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_text(text: &str) -> Result<ExperimentConfig> {
    let mut b = ConfigBuilder::new();
    apply_text(&mut b, text)?;
    b.build()
}

fn apply_text(b: &mut ConfigBuilder, text: &str) -> Result<()> {
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.split('#').next().unwrap_or("").trim();
        if s.is_empty() {
            continue;
        }
        let Some((k, v)) = s.split_once('=') else {
            return Err(Error::config(line, format!("expected 'key = value', got '{s}'")));
        };
        let k = k.trim();
        if k.is_empty() {
            return Err(Error::config(line, "empty key"));
        }
        b.set(k, v, Some(line))?;
    }
    Ok(())
}

/// Parses a nested JSON object whose dotted paths are the text keys.
pub fn parse_json(text: &str) -> Result<ExperimentConfig> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::config(e.line(), e.to_string()))?;
    let mut flat = Vec::new();
    flatten("", &value, &mut flat)?;
    let mut b = ConfigBuilder::new();
    for (k, v) in flat {
        b.set(&k, &v, line_of(text, &k))?;
    }
    b.build()
}

/// Best-effort line of the last path segment of `key` in the JSON source.
fn line_of(text: &str, key: &str) -> Option<usize> {
    let last = key.rsplit('.').next()?;
    let needle = format!("\"{last}\"");
    text.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
}

fn flatten(prefix: &str, v: &serde_json::Value, out: &mut Vec<(String, String)>) -> Result<()> {
    use serde_json::Value;
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out)?;
            }
        }
        Value::Array(items) => {
            let parts: Vec<String> = items
                .iter()
                .map(|x| match x {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect();
            out.push((prefix.to_string(), parts.join(",")));
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Null => {}
        other => out.push((prefix.to_string(), other.to_string())),
    }
    if prefix.is_empty() && !v.is_object() {
        return Err(Error::config(None, "JSON config must be an object"));
    }
    Ok(())
}

/// Parses text or JSON, chosen by the first non-blank character.
pub fn parse(text: &str) -> Result<ExperimentConfig> {
    if text.trim_start().starts_with('{') {
        parse_json(text)
    } else {
        parse_text(text)
    }
}

impl ExperimentConfig {
    /// Copy with one numeric key overridden (used by sweeps).
    pub fn with_override(&self, key: &str, value: f64) -> Result<Self> {
        let mut b = ConfigBuilder::new();
        apply_text(&mut b, &self.to_text())?;
        b.set(key, &value.to_string(), None)?;
        b.axes.clear();
        b.build()
    }

    /// Every setting as `key = value` pairs that [`parse_text`] reads back.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let mut v: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, x: String| v.push((k.to_string(), x));
        let m = &self.model;
        put("model.a", m.a.to_string());
        put("model.b", m.b.to_string());
        put("model.k", m.k.to_string());
        put("model.p", m.p.to_string());
        put("model.q", m.q.to_string());
        put("model.length", m.length.to_string());
        put("grid.n", self.grid_n.to_string());
        put("seed", self.seed.to_string());
        let s = &self.stepper;
        put("stepper.dt0", s.dt0.to_string());
        put("stepper.dtMin", s.dt_min.to_string());
        put("stepper.dtMax", s.dt_max.to_string());
        put("stepper.safety", s.safety.to_string());
        put("stepper.blowupNormThreshold", s.blowup_norm_threshold.to_string());
        put("stepper.extinctionThreshold", s.extinction_threshold.to_string());
        put("stepper.tEnd", s.t_end.to_string());
        put(
            "stepper.scheme",
            match s.scheme {
                Scheme::LaggedImplicit => "LaggedImplicit",
                Scheme::FullyImplicit => "FullyImplicit",
            }
            .into(),
        );
        put("stepper.nonlinearSolverTol", s.nonlinear_solver_tol.to_string());
        put("stepper.maxNewtonIters", s.max_newton_iters.to_string());
        put("stepper.energyTol", s.energy_tol.to_string());
        put("stepper.implicitAfter", s.implicit_after.to_string());
        put("stepper.snapshotT0", s.snapshot_t0.to_string());
        put("stepper.maxSteps", s.max_steps.to_string());
        let o = &self.minimize;
        put("minimize.restarts", o.restarts.to_string());
        put("minimize.maxIter", o.max_iter.to_string());
        put("minimize.gtol", o.gtol.to_string());
        put("minimize.fiberingTol", o.fibering_tol.to_string());
        put("minimize.memory", o.memory.to_string());
        let e = &self.estimate;
        put("constants.restarts", e.restarts.to_string());
        put("constants.maxIter", e.max_iter.to_string());
        put("constants.agreement", e.agreement.to_string());
        put("well.deltas", join(&self.well_deltas));
        match &self.initial.shape {
            Shape::Sine { modes } => {
                put("initial.preset", "sine".into());
                put(
                    "initial.modes",
                    modes.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(","),
                );
            }
            Shape::Bump => put("initial.preset", "bump".into()),
            Shape::Random => put("initial.preset", "random".into()),
        }
        match self.initial.scaling {
            Scaling::Amplitude(a) => put("initial.amplitude", a.to_string()),
            Scaling::ToI { positive, factor } => {
                put("initial.scaleToI", if positive { "positive" } else { "negative" }.into());
                put("initial.factor", factor.to_string());
            }
            Scaling::ToJ { fraction, branch } => {
                put("initial.scaleToJ", fraction.to_string());
                put(
                    "initial.branch",
                    match branch {
                        Branch::Lower => "lower",
                        Branch::Upper => "upper",
                    }
                    .into(),
                );
            }
        }
        for (i, ax) in self.sweep.iter().enumerate() {
            put(&format!("sweep.axis{}", i + 1), ax.key.clone());
            put(&format!("sweep.values{}", i + 1), join(&ax.values));
        }
        put("output.dir", self.out_dir.display().to_string());
        put("output.timings", self.timings.to_string());
        v
    }

    pub fn to_text(&self) -> String {
        self.to_pairs()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn echo(&self) -> BTreeMap<String, String> {
        self.to_pairs().into_iter().collect()
    }
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = ExperimentConfig::default();
        assert_eq!(parse_text(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn text_and_json_agree() {
        let text = "model.q = 4 # comment\n\ngrid.n=31\ninitial.preset = bump\ninitial.scaleToJ = 0.5\nseed = 7\n";
        let json = r#"{"model": {"q": 4}, "grid": {"n": 31}, "initial": {"preset": "bump", "scaleToJ": 0.5}, "seed": 7}"#;
        let a = parse(text).unwrap();
        let b = parse(json).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.model.q, 4.0);
        assert_eq!(a.minimize.seed, 7);
        assert_eq!(
            a.initial.scaling,
            Scaling::ToJ {
                fraction: 0.5,
                branch: Branch::Lower
            }
        );
    }

    #[test]
    fn errors_carry_lines() {
        let err = parse_text("grid.n = 31\nmodel.q = five\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: Some(2), .. }), "{err}");
        let err = parse_text("grid.n = 31\n\n\nbogus.key = 1\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: Some(4), .. }), "{err}");
        let err = parse_text("no equals sign\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: Some(1), .. }));
        let err = parse_json("{\n  \"grid\": {\n    \"n\": \"x\"\n  }\n}").unwrap_err();
        assert!(matches!(err, Error::Config { line: Some(3), .. }), "{err}");
        let err = parse_json("{\n  \"grid\": \n").unwrap_err();
        assert!(matches!(err, Error::Config { line: Some(_), .. }));
    }

    #[test]
    fn invalid_models_are_config_errors() {
        assert!(matches!(parse_text("model.q = 1.5\n"), Err(Error::Config { .. })));
        assert!(matches!(parse_text("stepper.dtMin = 1\n"), Err(Error::Config { .. })));
        assert!(parse_text("initial.scaleToI = positive\ninitial.scaleToJ = 0.5\n").is_err());
        assert!(parse_text("initial.scaleToI = negative\ninitial.factor = 0.5\n").is_err());
    }

    #[test]
    fn value_ranges() {
        let v = parse_values(None, "k", "logspace:0.1:10:3").unwrap();
        assert!((v[0] - 0.1).abs() < 1e-15 && (v[1] - 1.0).abs() < 1e-12 && (v[2] - 10.0).abs() < 1e-12);
        assert_eq!(parse_values(None, "k", "linspace:0:1:5").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_values(None, "k", "1, 2,3").unwrap(), vec![1.0, 2.0, 3.0]);
        assert!(parse_values(None, "k", "logspace:0:1:3").is_err());
    }

    #[test]
    fn sweeps() {
        let c = parse_text("sweep.axis1 = initial.amplitude\nsweep.values1 = 0.1,1\n").unwrap();
        assert_eq!(c.sweep.len(), 1);
        assert_eq!(parse_text(&c.to_text()).unwrap(), c);
        let cell = c.with_override("initial.amplitude", 1.0).unwrap();
        assert!(cell.sweep.is_empty());
        assert_eq!(cell.initial.scaling, Scaling::Amplitude(1.0));
        assert!(parse_text("sweep.axis1 = initial.preset\nsweep.values1 = 1\n").is_err());
        assert!(parse_text("sweep.values2 = 1\n").is_err());
    }
}
