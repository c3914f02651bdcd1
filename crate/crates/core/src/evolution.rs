//! Time integration with discrete energy accounting.
//!
//! Both schemes solve `(I − kΔ_h)(u^{n+1} − u^n) = dt·R(·)` with
//! `R(u) = M(‖∇u‖_p^p)Δ_p u + f(u)`. The lagged scheme evaluates `R` at
//! `u^n`; the fully implicit one at `u^{n+1}` by damped Newton. Steps are
//! accepted by the residual of the energy identity
//!
//! ```text
//! J(u^{n+1}) − J(u^n) + dt(‖v‖₂² + k‖∇v‖₂²) ≈ 0,   v = (u^{n+1} − u^n)/dt.
//! ```

use serde::{Deserialize, Serialize};

use crate::energy::{self, Integrals};
use crate::error::{Error, Result};
use crate::grid::{self, Field, Grid, ModelParams};
use crate::linalg::{LdlFactor, SymTridiag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    LaggedImplicit,
    FullyImplicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct StepperConfig {
    pub dt0: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Step growth factor after an accepted step.
    pub safety: f64,
    /// Blow-up is declared once `‖u‖₂` exceeds this.
    pub blowup_norm_threshold: f64,
    /// Extinction is declared once `‖u‖₂` drops below this.
    pub extinction_threshold: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub nonlinear_solver_tol: f64,
    pub max_newton_iters: usize,
    /// Accept a step when `|residual| ≤ energy_tol·dt·dissipation` (plus rounding).
    pub energy_tol: f64,
    /// Switch the lagged scheme to the implicit one after this many rejections.
    pub implicit_after: usize,
    /// First snapshot time; later ones double.
    pub snapshot_t0: f64,
    pub max_steps: usize,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            dt0: 1e-4,
            dt_min: 1e-12,
            dt_max: 0.1,
            safety: 1.25,
            blowup_norm_threshold: 1e6,
            extinction_threshold: 1e-10,
            t_end: 10.0,
            scheme: Scheme::LaggedImplicit,
            nonlinear_solver_tol: 1e-11,
            max_newton_iters: 30,
            energy_tol: 0.05,
            implicit_after: 8,
            snapshot_t0: 1e-2,
            max_steps: 5_000_000,
        }
    }
}

impl StepperConfig {
    /// Constant step `dt` over `[0, t_end]`.
    pub fn fixed(dt: f64, t_end: f64) -> Self {
        Self {
            dt0: dt,
            dt_min: dt,
            dt_max: dt,
            t_end,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Parameter(m));
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt0 && self.dt0 <= self.dt_max) {
            return bad(format!(
                "need 0 < dtMin <= dt0 <= dtMax (got {}, {}, {})",
                self.dt_min, self.dt0, self.dt_max
            ));
        }
        if !(self.blowup_norm_threshold > 0.0 && self.extinction_threshold > 0.0) {
            return bad("thresholds must be positive".into());
        }
        if !(self.extinction_threshold < self.blowup_norm_threshold) {
            return bad("extinction threshold must lie below the blow-up threshold".into());
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("tEnd must be positive, got {}", self.t_end));
        }
        if !(self.safety >= 1.0) {
            return bad(format!("safety factor must be >= 1, got {}", self.safety));
        }
        if !(self.energy_tol > 0.0 && self.nonlinear_solver_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if !(self.snapshot_t0 > 0.0) {
            return bad("snapshotT0 must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TraceRecord {
    pub t: f64,
    /// Step that produced this record (0 for the initial state).
    pub dt: f64,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "I")]
    pub i: f64,
    pub norm2sq: f64,
    pub grad_norm2sq: f64,
    #[serde(rename = "gradNormP")]
    pub grad_norm_p: f64,
    /// `‖u‖_{q+1}`
    #[serde(rename = "normQ1")]
    pub norm_q1: f64,
    /// `‖v‖₂² + k‖∇v‖₂²` for the step that produced this record.
    pub dissipation: f64,
}

impl TraceRecord {
    fn measure(t: f64, dt: f64, u: &[f64], ints: &Integrals, params: &ModelParams, g: &Grid, diss: f64) -> Self {
        let h = g.h();
        Self {
            t,
            dt,
            j: ints.energy(params),
            i: ints.nehari(params),
            norm2sq: grid::power_sum(u, h, 2.0),
            grad_norm2sq: grid::grad_power_sum(u, h, 2.0),
            grad_norm_p: ints.grad_p.powf(1.0 / params.p),
            norm_q1: ints.norm_q1.powf(1.0 / (params.q + 1.0)),
            dissipation: diss,
        }
    }

    /// `‖u‖₂² + k‖∇u‖₂²`.
    pub fn weighted_norm(&self, k: f64) -> f64 {
        self.norm2sq + k * self.grad_norm2sq
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub field: Field,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlowupReason {
    NormThreshold,
    StepUnderflow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SimulationTrace {
    pub params: ModelParams,
    pub records: Vec<TraceRecord>,
    pub snapshots: Vec<Snapshot>,
    pub rejections: usize,
    /// Time at which the lagged scheme handed over to the implicit one.
    pub implicit_from: Option<f64>,
}

impl SimulationTrace {
    pub fn last(&self) -> &TraceRecord {
        self.records.last().expect("trace holds at least the initial record")
    }

    pub fn final_field(&self) -> Option<&Field> {
        self.snapshots.last().map(|s| &s.field)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all_fields = "camelCase")]
pub enum Outcome {
    GlobalDecay { t_reached: f64 },
    BlowUp {
        t_estimate: f64,
        last_finite_t: f64,
        reason: BlowupReason,
    },
    Extinct { t_star: f64 },
    Undecided { t_end: f64 },
}

impl Outcome {
    pub fn name(&self) -> &'static str {
        match self {
            Outcome::GlobalDecay { .. } => "GlobalDecay",
            Outcome::BlowUp { .. } => "BlowUp",
            Outcome::Extinct { .. } => "Extinct",
            Outcome::Undecided { .. } => "Undecided",
        }
    }

    /// Blow-up time estimate, if any.
    pub fn t_estimate(&self) -> Option<f64> {
        match self {
            Outcome::BlowUp { t_estimate, .. } => Some(*t_estimate),
            Outcome::Extinct { t_star } => Some(*t_star),
            _ => None,
        }
    }
}

/// Integrator bound to one grid and parameter set; the pseudo-parabolic
/// operator is factored once.
pub struct Stepper<'a> {
    params: &'a ModelParams,
    g: &'a Grid,
    cfg: StepperConfig,
    op: SymTridiag,
    factor: LdlFactor,
    lap: Vec<f64>,
    rhs: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(params: &'a ModelParams, g: &'a Grid, cfg: &StepperConfig) -> Result<Self> {
        params.validate()?;
        let op = SymTridiag::pseudo_parabolic(g, params.k_f64());
        let factor = op
            .factor()
            .ok_or_else(|| Error::Domain("pseudo-parabolic operator is singular".into()))?;
        Ok(Self {
            params,
            g,
            cfg: *cfg,
            op,
            factor,
            lap: vec![0.0; g.n()],
            rhs: vec![0.0; g.n()],
        })
    }

    fn lagged(&mut self, u: &[f64], dt: f64) -> Vec<f64> {
        energy::stationary_residual_into(u, self.g, self.params, &mut self.lap, &mut self.rhs);
        let mut inc: Vec<f64> = self.rhs.iter().map(|r| dt * r).collect();
        self.factor.solve_in_place(&mut inc);
        u.iter().zip(&inc).map(|(a, b)| a + b).collect()
    }

    /// `B(u1 − u0) − dt R(u1)`; leaves `R(u1)` in `self.rhs`.
    fn implicit_residual(&mut self, u0: &[f64], u1: &[f64], dt: f64) -> Vec<f64> {
        energy::stationary_residual_into(u1, self.g, self.params, &mut self.lap, &mut self.rhs);
        let diff: Vec<f64> = u1.iter().zip(u0).map(|(a, b)| a - b).collect();
        let bd = self.op.apply(&diff);
        bd.iter().zip(&self.rhs).map(|(b, r)| b - dt * r).collect()
    }

    fn implicit(&mut self, u0: &[f64], dt: f64) -> Result<Vec<f64>> {
        let mut u = self.lagged(u0, dt);
        if !u.iter().all(|v| v.is_finite()) {
            u = u0.to_vec();
        }
        let mut res = self.implicit_residual(u0, &u, dt);
        let mut rnorm = inf_norm(&res);
        for _ in 0..self.cfg.max_newton_iters {
            // B + dt(T + σ w wᵀ) with −∂R/∂u = T + σ w wᵀ
            let jr = energy::residual_jacobian(&u, self.g, self.params);
            let mut jac = self.op.clone();
            jac.axpy(dt, &jr.t);
            let neg: Vec<f64> = res.iter().map(|r| -r).collect();
            let step = jac
                .factor()
                .and_then(|f| f.solve_rank_one(dt * jr.sigma, &jr.w, &neg))
                .ok_or_else(|| Error::Newton("singular Jacobian".into()))?;
            let mut lam = 1.0;
            let mut accepted = false;
            for _ in 0..12 {
                let trial: Vec<f64> = u.iter().zip(&step).map(|(a, s)| a + lam * s).collect();
                if trial.iter().all(|v| v.is_finite()) {
                    let r2 = self.implicit_residual(u0, &trial, dt);
                    let n2 = inf_norm(&r2);
                    if n2 < rnorm || n2 == 0.0 {
                        u = trial;
                        res = r2;
                        rnorm = n2;
                        accepted = true;
                        break;
                    }
                }
                lam *= 0.5;
            }
            let du = lam * inf_norm(&step);
            let scale = inf_norm(&u).max(f64::MIN_POSITIVE);
            if du <= self.cfg.nonlinear_solver_tol * scale || rnorm == 0.0 {
                return Ok(u);
            }
            if !accepted {
                // no decrease: accept if already at rounding level
                let floor = 1e-12 * (inf_norm(&self.op.apply(&u)) + dt * inf_norm(&self.rhs));
                if rnorm <= floor {
                    return Ok(u);
                }
                return Err(Error::Newton(format!("stalled at residual {rnorm:e}")));
            }
        }
        Err(Error::Newton(format!(
            "no convergence in {} iterations (residual {rnorm:e})",
            self.cfg.max_newton_iters
        )))
    }

    /// One step of `scheme`.
    pub fn advance(&mut self, u: &[f64], dt: f64, scheme: Scheme) -> Result<Vec<f64>> {
        let out = match scheme {
            Scheme::LaggedImplicit => self.lagged(u, dt),
            Scheme::FullyImplicit => self.implicit(u, dt)?,
        };
        if !out.iter().all(|v| v.is_finite()) {
            return Err(Error::Domain("step produced non-finite values".into()));
        }
        Ok(out)
    }

    /// `‖v‖₂² + k‖∇v‖₂²` with `v = (u1 − u0)/dt`.
    fn dissipation(&self, u0: &[f64], u1: &[f64], dt: f64) -> f64 {
        let v: Vec<f64> = u1.iter().zip(u0).map(|(a, b)| (a - b) / dt).collect();
        let h = self.g.h();
        grid::power_sum(&v, h, 2.0) + self.params.k_f64() * grid::grad_power_sum(&v, h, 2.0)
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// One step of the configured scheme.
pub fn step(u: &Field, dt: f64, params: &ModelParams, g: &Grid, cfg: &StepperConfig) -> Result<Field> {
    u.check(g)?;
    if !(dt > 0.0) {
        return Err(Error::Parameter(format!("dt must be positive, got {dt}")));
    }
    if !u.is_finite() {
        return Err(Error::Domain("field is not finite".into()));
    }
    let mut s = Stepper::new(params, g, cfg)?;
    s.advance(u.values(), dt, cfg.scheme).map(Field::from_vec_unchecked)
}

/// Integrates from `u0` until `tEnd`, blow-up, or extinction.
pub fn run(u0: &Field, params: &ModelParams, g: &Grid, cfg: &StepperConfig) -> Result<(SimulationTrace, Outcome)> {
    u0.check(g)?;
    cfg.validate()?;
    if !u0.is_finite() {
        return Err(Error::Domain("initial field is not finite".into()));
    }
    let mut stepper = Stepper::new(params, g, cfg)?;
    let k = params.k_f64();
    let mut u = u0.values().to_vec();
    let mut ints = Integrals::of_values(&u, g, params);
    let mut trace = SimulationTrace {
        params: *params,
        records: vec![TraceRecord::measure(0.0, 0.0, &u, &ints, params, g, 0.0)],
        snapshots: vec![Snapshot {
            t: 0.0,
            field: u0.clone(),
        }],
        rejections: 0,
        implicit_from: None,
    };

    if u0.is_zero() {
        // zero is a fixed point of both schemes
        trace
            .records
            .push(TraceRecord::measure(cfg.t_end, cfg.t_end, &u, &ints, params, g, 0.0));
        trace.snapshots.push(Snapshot {
            t: cfg.t_end,
            field: u0.clone(),
        });
        return Ok((trace, Outcome::GlobalDecay { t_reached: cfg.t_end }));
    }

    let mut t = 0.0;
    let mut dt = cfg.dt0;
    let mut scheme = cfg.scheme;
    let mut next_snap = cfg.snapshot_t0;
    let mut steps = 0;
    let push_snapshot = |trace: &mut SimulationTrace, t: f64, u: &[f64]| {
        trace.snapshots.push(Snapshot {
            t,
            field: Field::from_vec_unchecked(u.to_vec()),
        });
    };

    let outcome = loop {
        if t >= cfg.t_end {
            break None;
        }
        if steps >= cfg.max_steps {
            break Some(Outcome::Undecided { t_end: t });
        }
        let h = dt.min(cfg.t_end - t);
        let attempt = stepper.advance(&u, h, scheme);
        let mut accepted = None;
        if let Ok(u1) = attempt {
            let ints1 = Integrals::of_values(&u1, g, params);
            let (j0, j1) = (ints.energy(params), ints1.energy(params));
            let diss = stepper.dissipation(&u, &u1, h);
            let res = j1 - j0 + h * diss;
            let floor = 1e-13 * (j0.abs() + j1.abs() + h * diss);
            let escaped = grid::power_sum(&u1, g.h(), 2.0).sqrt() > cfg.blowup_norm_threshold;
            // at the step floor only monotone energy is required
            let identity_ok = res.abs() <= cfg.energy_tol * h * diss + floor;
            let floor_ok = h <= cfg.dt_min && j1 <= j0 + floor;
            if j1.is_finite() && (identity_ok || floor_ok || escaped && res <= floor) {
                accepted = Some((u1, ints1, diss));
            }
        }
        match accepted {
            Some((u1, ints1, diss)) => {
                steps += 1;
                t += h;
                u = u1;
                ints = ints1;
                let rec = TraceRecord::measure(t, h, &u, &ints, params, g, diss);
                trace.records.push(rec);
                if t >= next_snap {
                    push_snapshot(&mut trace, t, &u);
                    while next_snap <= t {
                        next_snap *= 2.0;
                    }
                }
                let norm = rec.norm2sq.sqrt();
                if norm > cfg.blowup_norm_threshold {
                    break Some(blowup(&trace, BlowupReason::NormThreshold));
                }
                if norm < cfg.extinction_threshold {
                    break Some(Outcome::Extinct { t_star: t });
                }
                if h == dt {
                    dt = (dt * cfg.safety).min(cfg.dt_max);
                }
            }
            None => {
                trace.rejections += 1;
                if scheme == Scheme::LaggedImplicit && trace.rejections >= cfg.implicit_after {
                    scheme = Scheme::FullyImplicit;
                    trace.implicit_from = Some(t);
                }
                if h <= cfg.dt_min {
                    break Some(blowup(&trace, BlowupReason::StepUnderflow));
                }
                dt = (h * 0.5).max(cfg.dt_min);
            }
        }
    };

    if trace.snapshots.last().is_none_or(|s| s.t < t) {
        push_snapshot(&mut trace, t, &u);
    }
    let outcome = outcome.unwrap_or_else(|| terminal_outcome(&trace, k));
    Ok((trace, outcome))
}

fn blowup(trace: &SimulationTrace, reason: BlowupReason) -> Outcome {
    let last = trace.last().t;
    let est = estimate_blowup_time(trace).unwrap_or(last);
    Outcome::BlowUp {
        t_estimate: est.max(last),
        last_finite_t: last,
        reason,
    }
}

/// Decay is declared at `tEnd` when the state sits in the stable set
/// (`I > 0` or zero) and `‖u‖₂² + k‖∇u‖₂²` has decreased, monotonically over
/// the last quarter of the run.
fn terminal_outcome(trace: &SimulationTrace, k: f64) -> Outcome {
    let last = trace.last();
    let first = &trace.records[0];
    let x_end = last.weighted_norm(k);
    let tail_start = trace.records.len() * 3 / 4;
    let tail_ok = trace.records[tail_start..]
        .windows(2)
        .all(|w| w[1].weighted_norm(k) <= w[0].weighted_norm(k) * (1.0 + 1e-12));
    let stable = last.i > 0.0 || x_end == 0.0;
    if stable && x_end < first.weighted_norm(k) && tail_ok {
        Outcome::GlobalDecay { t_reached: last.t }
    } else {
        Outcome::Undecided { t_end: last.t }
    }
}

/// Worst step of `J(u^{n+1}) − J(u^n) + dt·dissipation`.
pub fn discrete_energy_residual(trace: &SimulationTrace) -> f64 {
    trace
        .records
        .windows(2)
        .map(|w| w[1].j - w[0].j + w[1].dt * w[1].dissipation)
        .fold(0.0, f64::max)
}

/// Root of a linear fit to the tail of `y = (‖u‖₂² + k‖∇u‖₂²)^{(1−q)/2}`.
pub fn estimate_blowup_time(trace: &SimulationTrace) -> Result<f64> {
    let k = trace.params.k_f64();
    let e = (1.0 - trace.params.q) / 2.0;
    let pts: Vec<(f64, f64)> = trace
        .records
        .iter()
        .map(|r| (r.t, r.weighted_norm(k).powf(e)))
        .filter(|(_, y)| y.is_finite() && *y > 0.0)
        .collect();
    if pts.len() < 3 {
        return Err(Error::Estimation {
            what: "blow-up time".into(),
            restarts: 0,
            best: f64::NAN,
        });
    }
    let tail = &pts[pts.len().saturating_sub(6)..];
    let last_t = trace.last().t;
    // center times for conditioning
    let m = tail.len() as f64;
    let tm = tail.iter().map(|p| p.0).sum::<f64>() / m;
    let ym = tail.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = tail.iter().map(|p| (p.0 - tm).powi(2)).sum();
    let sxy: f64 = tail.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Estimation {
            what: "blow-up time".into(),
            restarts: 0,
            best: last_t,
        });
    }
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return Err(Error::Estimation {
            what: "blow-up time".into(),
            restarts: 0,
            best: last_t,
        });
    }
    let root = tm - ym / slope;
    Ok(root.max(last_t))
}
