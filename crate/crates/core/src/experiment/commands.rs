//! Experiment commands. Each returns a typed report together with the files
//! it would write; [`write_artifacts`] puts them on disk.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::initial::build_initial;
use crate::analysis::{self, Classification, ConvergenceReport, DecayReport, GroundState, LifespanReport, WellContext};
use crate::error::Result;
use crate::evolution::{self, Outcome, SimulationTrace};
use crate::grid::{Field, Grid, ModelParams};
use crate::wells::{self, DeltaCurve, EmbeddingConstants};

pub const TRACE_HEADER: &str = "t,dt,J,I,norm2sq,gradNormP,dissipation";
pub const PHASE_MAP_HEADER: &str = "axis1,axis2,J0,I0,d,regime,outcome,tEstimate";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A named output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    fn new(name: &str, contents: String) -> Self {
        Self {
            name: name.into(),
            contents,
        }
    }

    fn json<T: Serialize>(name: &str, value: &T) -> Result<Self> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        Ok(Self::new(name, s))
    }
}

pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for a in artifacts {
        std::fs::write(dir.join(&a.name), &a.contents)?;
    }
    Ok(())
}

/// Wall-clock seconds per phase, recorded only when `output.timings` is set.
#[derive(Debug, Default)]
struct Clock {
    on: bool,
    marks: BTreeMap<String, f64>,
}

impl Clock {
    fn new(on: bool) -> Self {
        Self { on, ..Default::default() }
    }

    fn time<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        if self.on {
            self.marks.insert(name.into(), start.elapsed().as_secs_f64());
        }
        out
    }

    fn report(self) -> Option<BTreeMap<String, f64>> {
        self.on.then_some(self.marks)
    }
}

fn grid_of(cfg: &ExperimentConfig) -> Result<Grid> {
    Grid::for_params(cfg.grid_n, &cfg.model)
}

fn well_context(cfg: &ExperimentConfig, g: &Grid) -> Result<WellContext> {
    let d = wells::compute_well_depth(1.0, &cfg.model, g, &cfg.minimize)?.d;
    let constants = wells::estimate_constants(&cfg.model, g, &cfg.estimate)?;
    Ok(WellContext { d, constants })
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConstantsReport {
    pub version: &'static str,
    pub seed: u64,
    pub params: ModelParams,
    pub grid_n: usize,
    pub constants: EmbeddingConstants,
    pub timings: Option<BTreeMap<String, f64>>,
}

pub fn cmd_constants(cfg: &ExperimentConfig) -> Result<(ConstantsReport, Vec<Artifact>)> {
    let g = grid_of(cfg)?;
    let mut clock = Clock::new(cfg.timings);
    let constants = clock.time("constants", || wells::estimate_constants(&cfg.model, &g, &cfg.estimate))?;
    let rep = ConstantsReport {
        version: VERSION,
        seed: cfg.seed,
        params: cfg.model,
        grid_n: cfg.grid_n,
        constants,
        timings: clock.report(),
    };
    let art = vec![Artifact::json("constants.json", &rep)?];
    Ok((rep, art))
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct WellReport {
    pub version: &'static str,
    pub seed: u64,
    pub params: ModelParams,
    pub grid_n: usize,
    pub d: f64,
    pub restarts: usize,
    pub history: Vec<f64>,
    pub curve: DeltaCurve,
    pub monotonicity_violation: f64,
    pub argmax: Option<f64>,
    pub timings: Option<BTreeMap<String, f64>>,
}

pub fn cmd_well(cfg: &ExperimentConfig) -> Result<(WellReport, Vec<Artifact>)> {
    let g = grid_of(cfg)?;
    let mut clock = Clock::new(cfg.timings);
    let well = clock.time("well", || wells::compute_well_depth(1.0, &cfg.model, &g, &cfg.minimize))?;
    let warm = [well.minimizer.clone()];
    let curve = clock.time("curve", || {
        DeltaCurve::build(&cfg.well_deltas, &cfg.model, &g, &cfg.minimize, &warm)
    })?;
    let rep = WellReport {
        version: VERSION,
        seed: cfg.seed,
        params: cfg.model,
        grid_n: cfg.grid_n,
        d: well.d,
        restarts: well.restarts,
        history: well.history.clone(),
        monotonicity_violation: curve.monotonicity_violation(),
        argmax: curve.argmax(),
        curve,
        timings: clock.report(),
    };
    let mut csv = String::from("delta,d\n");
    for (dl, v) in rep.curve.deltas.iter().zip(&rep.curve.values) {
        let _ = writeln!(csv, "{dl},{v}");
    }
    let art = vec![
        Artifact::json("well.json", &rep)?,
        Artifact::new("delta_curve.csv", csv),
        Artifact::new("well_minimizer.csv", field_csv(&well.minimizer, &g)),
    ];
    Ok((rep, art))
}

fn field_csv(u: &Field, g: &Grid) -> String {
    let mut s = String::from("x,u\n");
    for (x, v) in g.nodes().zip(u.values()) {
        let _ = writeln!(s, "{x},{v}");
    }
    s
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GroundStateReport {
    pub version: &'static str,
    pub seed: u64,
    pub params: ModelParams,
    pub grid_n: usize,
    pub ground_state: GroundState,
    pub timings: Option<BTreeMap<String, f64>>,
}

pub fn cmd_ground_state(cfg: &ExperimentConfig) -> Result<(GroundStateReport, Vec<Artifact>)> {
    let g = grid_of(cfg)?;
    let mut clock = Clock::new(cfg.timings);
    let opts = analysis::GroundStateOptions {
        minimize: cfg.minimize,
        ..Default::default()
    };
    let gs = clock.time("groundState", || analysis::ground_state(&cfg.model, &g, &opts))?;
    let csv = field_csv(&gs.u_star, &g);
    let rep = GroundStateReport {
        version: VERSION,
        seed: cfg.seed,
        params: cfg.model,
        grid_n: cfg.grid_n,
        ground_state: gs,
        timings: clock.report(),
    };
    let art = vec![
        Artifact::json("ground_state.json", &rep)?,
        Artifact::new("ground_state.csv", csv),
    ];
    Ok((rep, art))
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ClassifyReport {
    pub version: &'static str,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub constants: EmbeddingConstants,
    pub classification: Classification,
    pub timings: Option<BTreeMap<String, f64>>,
}

pub fn cmd_classify(cfg: &ExperimentConfig) -> Result<(ClassifyReport, Vec<Artifact>)> {
    let g = grid_of(cfg)?;
    let mut clock = Clock::new(cfg.timings);
    let ctx = clock.time("wells", || well_context(cfg, &g))?;
    let u0 = build_initial(&cfg.initial, &cfg.model, &g, cfg.seed, || Ok(ctx.d))?;
    let classification = analysis::classify(&u0, &cfg.model, &g, &ctx)?;
    let rep = ClassifyReport {
        version: VERSION,
        seed: cfg.seed,
        config: cfg.echo(),
        constants: ctx.constants,
        classification,
        timings: clock.report(),
    };
    let art = vec![Artifact::json("classification.json", &rep)?];
    Ok((rep, art))
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunSummary {
    pub version: &'static str,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub d: f64,
    pub constants: EmbeddingConstants,
    pub classification: Classification,
    pub outcome: Outcome,
    pub steps: usize,
    pub rejections: usize,
    pub implicit_from: Option<f64>,
    pub energy_residual: f64,
    pub decay: Option<DecayReport>,
    pub lifespan: Option<LifespanReport>,
    pub convergence: Option<ConvergenceReport>,
    /// Post-processing steps that could not be evaluated.
    pub notes: Vec<String>,
    pub timings: Option<BTreeMap<String, f64>>,
}

/// Classifies, integrates and checks the applicable bounds for one
/// configuration. `ctx` is reused when given.
pub fn simulate(cfg: &ExperimentConfig, ctx: Option<WellContext>) -> Result<(RunSummary, SimulationTrace)> {
    let g = grid_of(cfg)?;
    let mut clock = Clock::new(cfg.timings);
    let ctx = match ctx {
        Some(c) => c,
        None => clock.time("wells", || well_context(cfg, &g))?,
    };
    let u0 = build_initial(&cfg.initial, &cfg.model, &g, cfg.seed, || Ok(ctx.d))?;
    let classification = analysis::classify(&u0, &cfg.model, &g, &ctx)?;
    let (trace, outcome) = clock.time("run", || evolution::run(&u0, &cfg.model, &g, &cfg.stepper))?;
    let mut notes = Vec::new();

    let mut decay = None;
    let mut convergence = None;
    if matches!(outcome, Outcome::GlobalDecay { .. } | Outcome::Extinct { .. }) {
        convergence = Some(analysis::convergence_track(&trace, None, 1e-6));
        let j0 = classification.j_u0;
        if classification.regime == analysis::Regime::SubcriticalGlobal && j0 > 0.0 {
            let res = clock.time("decay", || {
                analysis::decay_delta_roots(j0, ctx.d, &cfg.model, &g, &cfg.minimize)
                    .and_then(|roots| analysis::check_decay_bounds(&trace, &classification, &ctx.constants, &roots))
            });
            match res {
                Ok(r) => decay = Some(r),
                Err(e) => notes.push(format!("decay bounds: {e}")),
            }
        }
    }
    let lifespan = matches!(outcome, Outcome::BlowUp { .. }).then(|| analysis::lifespan_bounds(&trace, &outcome));

    let summary = RunSummary {
        version: VERSION,
        seed: cfg.seed,
        config: cfg.echo(),
        d: ctx.d,
        constants: ctx.constants,
        classification,
        outcome,
        steps: trace.records.len() - 1,
        rejections: trace.rejections,
        implicit_from: trace.implicit_from,
        energy_residual: evolution::discrete_energy_residual(&trace),
        decay,
        lifespan,
        convergence,
        notes,
        timings: clock.report(),
    };
    Ok((summary, trace))
}

pub fn trace_csv(trace: &SimulationTrace) -> String {
    let mut s = String::with_capacity(64 * trace.records.len());
    s.push_str(TRACE_HEADER);
    s.push('\n');
    for r in &trace.records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.t, r.dt, r.j, r.i, r.norm2sq, r.grad_norm_p, r.dissipation
        );
    }
    s
}

pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<(RunSummary, Vec<Artifact>)> {
    let (summary, trace) = simulate(cfg, None)?;
    let art = vec![
        Artifact::new("trace.csv", trace_csv(&trace)),
        Artifact::json("summary.json", &summary)?,
    ];
    Ok((summary, art))
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepCell {
    pub axis1: Option<f64>,
    pub axis2: Option<f64>,
    pub summary: RunSummary,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepReport {
    pub version: &'static str,
    pub seed: u64,
    pub axes: Vec<String>,
    pub cells: Vec<SweepCell>,
}

fn opt_num(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn phase_map_csv(rep: &SweepReport) -> String {
    let mut s = String::from(PHASE_MAP_HEADER);
    s.push('\n');
    for c in &rep.cells {
        let m = &c.summary;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            opt_num(c.axis1),
            opt_num(c.axis2),
            m.classification.j_u0,
            m.classification.i_u0,
            m.d,
            m.classification.regime.name(),
            m.outcome.name(),
            opt_num(m.outcome.t_estimate())
        );
    }
    s
}

/// Runs every cell of the (up to two-dimensional) sweep in parallel. Well
/// data are shared between cells with the same model and grid.
pub fn sweep(cfg: &ExperimentConfig) -> Result<SweepReport> {
    let axes: Vec<String> = cfg.sweep.iter().map(|a| a.key.clone()).collect();
    let mut cells: Vec<(Option<f64>, Option<f64>)> = Vec::new();
    match cfg.sweep.as_slice() {
        [] => cells.push((None, None)),
        [a] => cells.extend(a.values.iter().map(|&v| (Some(v), None))),
        [a, b, ..] => {
            for &v in &a.values {
                for &w in &b.values {
                    cells.push((Some(v), Some(w)));
                }
            }
        }
    }
    let cell_cfgs = cells
        .iter()
        .map(|&(v, w)| {
            let mut c = cfg.clone();
            if let Some(v) = v {
                c = c.with_override(&axes[0], v)?;
            }
            if let Some(w) = w {
                c = c.with_override(&axes[1], w)?;
            }
            c.sweep.clear();
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;

    let cache: Mutex<HashMap<String, WellContext>> = Mutex::new(HashMap::new());
    let key = |c: &ExperimentConfig| {
        format!(
            "{:?}|{}|{:?}|{:?}|{}",
            c.model, c.grid_n, c.minimize, c.estimate, c.seed
        )
    };
    // resolve distinct well contexts first so parallel cells never race on them
    let mut distinct: Vec<&ExperimentConfig> = Vec::new();
    for c in &cell_cfgs {
        if !distinct.iter().any(|d| key(d) == key(c)) {
            distinct.push(c);
        }
    }
    let contexts = distinct
        .par_iter()
        .map(|c| well_context(c, &grid_of(c)?).map(|w| (key(c), w)))
        .collect::<Result<Vec<_>>>()?;
    cache.lock().expect("cache lock").extend(contexts);

    let summaries = cell_cfgs
        .par_iter()
        .map(|c| {
            let ctx = cache.lock().expect("cache lock").get(&key(c)).copied();
            simulate(c, ctx).map(|(s, _)| s)
        })
        .collect::<Result<Vec<_>>>()?;
    let cells = cells
        .into_iter()
        .zip(summaries)
        .map(|((axis1, axis2), summary)| SweepCell { axis1, axis2, summary })
        .collect();
    Ok(SweepReport {
        version: VERSION,
        seed: cfg.seed,
        axes,
        cells,
    })
}

pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<(SweepReport, Vec<Artifact>)> {
    let rep = sweep(cfg)?;
    let art = vec![
        Artifact::new("phase_map.csv", phase_map_csv(&rep)),
        Artifact::json("sweep.json", &rep)?,
    ];
    Ok((rep, art))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::config::parse_text;

    fn small() -> ExperimentConfig {
        parse_text("grid.n = 15\nstepper.tEnd = 0.5\nminimize.restarts = 4\nconstants.restarts = 4\n").unwrap()
    }

    #[test]
    fn simulate_is_deterministic() {
        let cfg = small();
        let (_, a) = cmd_simulate(&cfg).unwrap();
        let (_, b) = cmd_simulate(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a[0].contents.starts_with(TRACE_HEADER));
        assert!(!a[1].contents.contains("timings\": {"));
    }

    #[test]
    fn degenerate_sweep_equals_simulate() {
        let cfg = small();
        let (sim, _) = cmd_simulate(&cfg).unwrap();
        let (rep, art) = cmd_sweep(&cfg).unwrap();
        assert_eq!(rep.cells.len(), 1);
        assert_eq!(
            serde_json::to_string(&rep.cells[0].summary).unwrap(),
            serde_json::to_string(&sim).unwrap()
        );
        let lines: Vec<&str> = art[0].contents.lines().collect();
        assert_eq!(lines[0], PHASE_MAP_HEADER);
        assert_eq!(lines.len(), 2);
        assert!(lines[1].starts_with(",,"));
    }

    #[test]
    fn artifacts_land_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let (_, art) = cmd_constants(&small()).unwrap();
        write_artifacts(dir.path(), &art).unwrap();
        let text = std::fs::read_to_string(dir.path().join("constants.json")).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(v["constants"]["S1"].as_f64().unwrap() > 0.0);
    }
}
