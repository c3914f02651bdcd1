//! Potential energy `J`, Nehari functional `I`, the modified functional `I_δ`
//! and the fibering map `λ ↦ J(λu)`.
//!
//! With `G = ‖∇u‖_p^p`, `L = ∫|u|^{q+1}log|u|` and `Q = ‖u‖_{q+1}^{q+1}`:
//!
//! ```text
//! J   = (a/p) G + (b/2p) G² − L/(q+1) + Q/(q+1)²
//! I   = a G + b G² − L
//! I_δ = δ (a G + b G²) − L
//! ```
//!
//! Along a ray `G(λu) = λ^p G`, `Q(λu) = λ^{q+1} Q` and
//! `L(λu) = λ^{q+1}(L + Q log λ)`, so every ray evaluation reuses the three
//! cached integrals.

use serde::{Deserialize, Serialize};

use crate::bisect::{bisect, BisectOptions};
use crate::error::{Error, Result};
use crate::grid::{self, Field, Grid, ModelParams};
use crate::linalg::SymTridiag;

/// The three integrals every functional is built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Integrals {
    /// `‖∇u‖_p^p`
    pub grad_p: f64,
    /// `∫|u|^{q+1} log|u| dx`
    pub log_term: f64,
    /// `‖u‖_{q+1}^{q+1}`
    pub norm_q1: f64,
}

impl Integrals {
    pub(crate) fn of_values(u: &[f64], g: &Grid, params: &ModelParams) -> Self {
        let h = g.h();
        let q1 = params.q + 1.0;
        let mut log_term = 0.0;
        let mut norm_q1 = 0.0;
        for &v in u {
            if v != 0.0 {
                let pw = grid::pow_abs(v, q1);
                norm_q1 += pw;
                log_term += pw * v.abs().ln();
            }
        }
        Self {
            grad_p: grid::grad_power_sum(u, h, params.p),
            log_term: h * log_term,
            norm_q1: h * norm_q1,
        }
    }

    pub fn of(u: &Field, g: &Grid, params: &ModelParams) -> Result<Self> {
        u.check(g)?;
        Ok(Self::of_values(u.values(), g, params))
    }

    /// Integrals of `λu`.
    pub fn scaled(&self, lambda: f64, params: &ModelParams) -> Self {
        let lq = lambda.powf(params.q + 1.0);
        Self {
            grad_p: lambda.powf(params.p) * self.grad_p,
            log_term: lq * (self.log_term + self.norm_q1 * lambda.ln()),
            norm_q1: lq * self.norm_q1,
        }
    }

    pub fn energy(&self, params: &ModelParams) -> f64 {
        let (p, q1) = (params.p, params.q + 1.0);
        params.a / p * self.grad_p + params.b / (2.0 * p) * self.grad_p * self.grad_p
            - self.log_term / q1
            + self.norm_q1 / (q1 * q1)
    }

    pub fn nehari(&self, params: &ModelParams) -> f64 {
        self.nehari_delta(1.0, params)
    }

    pub fn nehari_delta(&self, delta: f64, params: &ModelParams) -> f64 {
        delta * (params.a * self.grad_p + params.b * self.grad_p * self.grad_p) - self.log_term
    }

    /// `a(q+1−p)/(p(q+1))·G + b(q+1−2p)/(2p(q+1))·G² + Q/(q+1)²`, i.e. `J − I/(q+1)`.
    pub fn coercive_part(&self, params: &ModelParams) -> f64 {
        let (p, q1) = (params.p, params.q + 1.0);
        params.a * (q1 - p) / (p * q1) * self.grad_p
            + params.b * (q1 - 2.0 * p) / (2.0 * p * q1) * self.grad_p * self.grad_p
            + self.norm_q1 / (q1 * q1)
    }
}

/// `J`, `I` and the terms composing them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EnergyBreakdown {
    /// `‖∇u‖_p^p`
    pub grad_p: f64,
    /// `‖∇u‖_p^{2p}`
    #[serde(rename = "grad2P")]
    pub grad_2p: f64,
    pub log_term: f64,
    #[serde(rename = "normQ1")]
    pub norm_q1: f64,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "I")]
    pub i: f64,
}

impl EnergyBreakdown {
    pub fn from_integrals(ints: &Integrals, params: &ModelParams) -> Self {
        Self {
            grad_p: ints.grad_p,
            grad_2p: ints.grad_p * ints.grad_p,
            log_term: ints.log_term,
            norm_q1: ints.norm_q1,
            j: ints.energy(params),
            i: ints.nehari(params),
        }
    }

    /// `J − [I/(q+1) + a(1/p − 1/(q+1))G + b(1/2p − 1/(q+1))G² + Q/(q+1)²]`.
    pub fn identity_residual(&self, params: &ModelParams) -> f64 {
        let (a, b, p, q1) = (params.a, params.b, params.p, params.q + 1.0);
        let rhs = self.i / q1
            + a * (1.0 / p - 1.0 / q1) * self.grad_p
            + b * (1.0 / (2.0 * p) - 1.0 / q1) * self.grad_2p
            + self.norm_q1 / (q1 * q1);
        self.j - rhs
    }
}

pub fn eval_energy(u: &Field, params: &ModelParams, g: &Grid) -> Result<EnergyBreakdown> {
    let ints = Integrals::of(u, g, params)?;
    Ok(EnergyBreakdown::from_integrals(&ints, params))
}

pub fn eval_i_delta(u: &Field, delta: f64, params: &ModelParams, g: &Grid) -> Result<f64> {
    check_delta(delta)?;
    Ok(Integrals::of(u, g, params)?.nehari_delta(delta, params))
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Parameter(format!("delta must be positive, got {delta}")));
    }
    Ok(())
}

/// Source term `|s|^{q−1} s log|s|`, zero at the origin.
#[inline]
pub fn source(s: f64, q: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else {
        grid::pow_abs(s, q) * s.signum() * s.abs().ln()
    }
}

/// Derivative `q|s|^{q−1} log|s| + |s|^{q−1}` of the source term.
#[inline]
pub fn source_prime(s: f64, q: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else {
        let pw = grid::pow_abs(s, q - 1.0);
        pw * (q * s.abs().ln() + 1.0)
    }
}

/// Stationary residual `M(‖∇u‖_p^p) Δ_p u + f(u)`; equals `−∇J` in the
/// `h`-weighted inner product. `lap_p` receives `Δ_p u`.
pub(crate) fn stationary_residual_into(
    u: &[f64],
    g: &Grid,
    params: &ModelParams,
    lap_p: &mut [f64],
    out: &mut [f64],
) -> f64 {
    grid::p_laplacian_into(u, g.h(), params.p, lap_p);
    let gp = grid::grad_power_sum(u, g.h(), params.p);
    let m = params.kirchhoff(gp);
    for ((o, &l), &v) in out.iter_mut().zip(lap_p.iter()).zip(u) {
        *o = m * l + source(v, params.q);
    }
    gp
}

/// `M(‖∇u‖_p^p) Δ_p u + |u|^{q−1}u log|u|`, the right-hand side of the evolution.
pub fn stationary_residual(u: &Field, params: &ModelParams, g: &Grid) -> Result<Field> {
    u.check(g)?;
    let n = g.n();
    let mut lap = vec![0.0; n];
    let mut out = vec![0.0; n];
    stationary_residual_into(u.values(), g, params, &mut lap, &mut out);
    Ok(Field::from_vec_unchecked(out))
}

/// `−∂R/∂u = T + σ w wᵀ` for the stationary residual `R`, with `T`
/// tridiagonal, `w = Δ_p u` and `σ = b p h`.
pub(crate) struct ResidualJacobian {
    pub t: SymTridiag,
    pub w: Vec<f64>,
    pub sigma: f64,
}

pub(crate) fn residual_jacobian(u: &[f64], g: &Grid, params: &ModelParams) -> ResidualJacobian {
    let (p, q, h) = (params.p, params.q, g.h());
    let n = u.len();
    let d = grid::cell_diffs(u, h);
    let m = params.kirchhoff(grid::grad_power_sum(u, h, p));
    let h2 = h * h;
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    for i in 0..n {
        let right = grid::phi_prime(d[i + 1], p) / h2;
        diag[i] = m * (grid::phi_prime(d[i], p) / h2 + right) - source_prime(u[i], q);
        if i + 1 < n {
            off[i] = -m * right;
        }
    }
    let mut w = vec![0.0; n];
    grid::p_laplacian_into(u, h, p, &mut w);
    ResidualJacobian {
        t: SymTridiag::new(diag, off),
        w,
        sigma: params.b * p * h,
    }
}

/// Gradient of `J` with respect to the `h`-weighted nodal inner product.
pub fn energy_gradient(u: &Field, params: &ModelParams, g: &Grid) -> Result<Field> {
    let mut r = stationary_residual(u, params, g)?;
    r.values_mut().iter_mut().for_each(|v| *v = -*v);
    Ok(r)
}

/// Gradient of `I_δ` with respect to the `h`-weighted nodal inner product.
pub fn i_delta_gradient(u: &Field, delta: f64, params: &ModelParams, g: &Grid) -> Result<Field> {
    u.check(g)?;
    check_delta(delta)?;
    let v = u.values();
    let mut lap = vec![0.0; g.n()];
    grid::p_laplacian_into(v, g.h(), params.p, &mut lap);
    let gp = grid::grad_power_sum(v, g.h(), params.p);
    let c = delta * params.p * (params.a + 2.0 * params.b * gp);
    let q = params.q;
    let out = lap
        .iter()
        .zip(v)
        .map(|(&l, &s)| -c * l - (q + 1.0) * source(s, q) - grid::pow_abs(s, q) * s.signum())
        .collect();
    Ok(Field::from_vec_unchecked(out))
}

/// Fibering function of `I_δ`: `I_δ(λu) = λ^{q+1} g_δ(λ)` with
/// `g_δ(λ) = δ(aλ^{p−q−1}G + bλ^{2p−q−1}G²) − (L + Q log λ)`.
/// For `δ = 1`, `d/dλ J(λu) = λ^q g_1(λ)`.
pub fn fibering_g_from(ints: &Integrals, lambda: f64, delta: f64, params: &ModelParams) -> f64 {
    fibering_g_log(ints, lambda.ln(), delta, params)
}

#[inline]
fn fibering_g_log(ints: &Integrals, log_lambda: f64, delta: f64, params: &ModelParams) -> f64 {
    let (p, q) = (params.p, params.q);
    let gp = ints.grad_p;
    delta
        * (params.a * gp * ((p - q - 1.0) * log_lambda).exp()
            + params.b * gp * gp * ((2.0 * p - q - 1.0) * log_lambda).exp())
        - (ints.log_term + ints.norm_q1 * log_lambda)
}

pub fn fibering_g(lambda: f64, u: &Field, params: &ModelParams, g: &Grid) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Parameter(format!("lambda must be positive, got {lambda}")));
    }
    let ints = Integrals::of(u, g, params)?;
    if ints.grad_p == 0.0 {
        return Err(Error::Domain("fibering map needs a field with nonzero gradient".into()));
    }
    Ok(fibering_g_from(&ints, lambda, 1.0, params))
}

/// Unique zero `λ*` of the strictly decreasing fibering function, with the
/// certifying bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FiberingResult {
    pub lambda_star: f64,
    /// `g(lo) > 0`, `g(hi) < 0` (both equal to `λ*` when `g` vanished exactly).
    pub bracket: (f64, f64),
    /// `|g(λ*)|`
    pub residual: f64,
}

pub const LAMBDA_SEARCH: (f64, f64) = (1e-12, 1e12);

/// Root of `g_δ` from cached integrals, bisecting `log λ` to full precision.
pub fn lambda_root_from(
    ints: &Integrals,
    delta: f64,
    params: &ModelParams,
    tol: f64,
) -> Result<FiberingResult> {
    check_delta(delta)?;
    if ints.grad_p == 0.0 || !ints.grad_p.is_finite() {
        return Err(Error::Domain("fibering map needs a field with nonzero gradient".into()));
    }
    let (lo, hi) = (LAMBDA_SEARCH.0.ln(), LAMBDA_SEARCH.1.ln());
    let root = bisect(
        |x| fibering_g_log(ints, x, delta, params),
        lo,
        hi,
        BisectOptions::exhaustive(),
    )
    .map_err(|e| match e {
        Error::NumericalRange { .. } => Error::NumericalRange {
            lo: LAMBDA_SEARCH.0,
            hi: LAMBDA_SEARCH.1,
        },
        other => other,
    })?;
    let lambda = root.root.exp();
    let residual = fibering_g_log(ints, root.root, delta, params).abs();
    let at = ints.scaled(lambda, params);
    // relative to the largest term of I_δ
    let scale = (delta * (params.a * at.grad_p + params.b * at.grad_p * at.grad_p))
        .max(at.log_term.abs())
        .max(1.0);
    if at.nehari_delta(delta, params).abs() > tol * scale {
        return Err(Error::Domain(format!(
            "fibering root at λ = {lambda:e} misses tolerance: |I_δ| = {:e}",
            at.nehari_delta(delta, params).abs()
        )));
    }
    Ok(FiberingResult {
        lambda_star: lambda,
        bracket: (root.lo.exp(), root.hi.exp()),
        residual,
    })
}

/// `λ*` with `λ*u ∈ N`: the maximizer of `J(λu)` over `λ > 0`.
pub fn find_lambda_star(u: &Field, params: &ModelParams, g: &Grid, tol: f64) -> Result<FiberingResult> {
    find_lambda_delta(u, 1.0, params, g, tol)
}

/// `λ_δ` with `λ_δ u ∈ N_δ`.
pub fn find_lambda_delta(
    u: &Field,
    delta: f64,
    params: &ModelParams,
    g: &Grid,
    tol: f64,
) -> Result<FiberingResult> {
    let ints = Integrals::of(u, g, params)?;
    lambda_root_from(&ints, delta, params, tol)
}

/// Projection `λ* u` onto the Nehari manifold.
pub fn nehari_project(u: &Field, params: &ModelParams, g: &Grid, tol: f64) -> Result<Field> {
    let fr = find_lambda_star(u, params, g, tol)?;
    Ok(u.scaled(fr.lambda_star))
}

/// Projection onto `N_δ`.
pub fn nehari_project_delta(
    u: &Field,
    delta: f64,
    params: &ModelParams,
    g: &Grid,
    tol: f64,
) -> Result<Field> {
    let fr = find_lambda_delta(u, delta, params, g, tol)?;
    Ok(u.scaled(fr.lambda_star))
}
