//! Minimization of the ray-invariant functional `Ψ_δ(u) = J(λ_δ(u)·u)`.
//!
//! `λ_δ(u)` is the fibering root that puts `λu` on `N_δ`, so `Ψ_δ` is
//! 0-homogeneous and its infimum is `d(δ)`. With `w = λ_δ u`,
//!
//! ```text
//! ∇Ψ_δ(u) = λ [∇J(w) − c ∇I_δ(w)],   c = ⟨∇J(w), u⟩ / ⟨∇I_δ(w), u⟩
//! ```
//!
//! (`c = 0` for `δ = 1` because `⟨∇J(w), w⟩ = I(w) = 0`). The minimizer is
//! L-BFGS whose initial inverse Hessian is the discrete `H¹₀` Riesz map, so
//! the iteration count does not grow with `N`.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{self, lambda_root_from, Integrals};
use crate::error::{Error, Result};
use crate::grid::{self, Field, Grid, ModelParams};
use crate::linalg::{LdlFactor, SymTridiag};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct MinimizeOptions {
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop when the `H⁻¹` norm of `∇Ψ` falls below `gtol·max(|Ψ|, 1)`.
    pub gtol: f64,
    /// Tolerance handed to the fibering root.
    pub fibering_tol: f64,
    pub memory: usize,
    pub seed: u64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            restarts: 8,
            max_iter: 3000,
            gtol: 1e-9,
            fibering_tol: 1e-8,
            memory: 8,
            seed: 0,
        }
    }
}

/// Result of one descent.
#[derive(Debug, Clone, PartialEq)]
pub struct RayMinimum {
    pub value: f64,
    /// The projected point `λ_δ(u)·u ∈ N_δ`.
    pub minimizer: Field,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
}

/// Sum of 1–3 low sine modes with random coefficients, scaled to unit max.
pub fn random_smooth_field<R: Rng + ?Sized>(g: &Grid, rng: &mut R) -> Field {
    loop {
        let count = rng.gen_range(1..=3);
        let modes: Vec<(f64, f64)> = (0..count)
            .map(|_| (rng.gen_range(1..=4) as f64, rng.gen_range(-1.0..1.0)))
            .collect();
        let len = g.length();
        let vals: Vec<f64> = g
            .nodes()
            .map(|x| {
                modes
                    .iter()
                    .map(|&(k, c)| c * (k * std::f64::consts::PI * x / len).sin())
                    .sum()
            })
            .collect();
        let m = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if m > 1e-3 {
            return Field::from_vec_unchecked(vals.into_iter().map(|v| v / m).collect());
        }
    }
}

/// Random start number `index` of a multi-start sequence seeded by `seed`.
pub fn start_field(g: &Grid, seed: u64, index: usize) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    random_smooth_field(g, &mut rng)
}

/// A 0-homogeneous objective: `value(c·u) = value(u)` for `c > 0`.
pub(crate) trait ScaleInvariant {
    /// Value and Euclidean gradient with respect to the raw nodal values;
    /// `None` marks points outside the domain (the line search backs off).
    fn eval(&self, u: &[f64]) -> Option<(f64, Vec<f64>)>;
}

/// Outcome of [`descend`], with the iterate normalized to unit `‖∇u‖₂`.
pub(crate) struct Descent {
    pub u: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Discrete `H¹₀` Riesz map `(h·(−Δ_h))⁻¹`, the L-BFGS seed metric.
pub(crate) struct Riesz {
    factor: LdlFactor,
    h: f64,
}

impl Riesz {
    pub(crate) fn new(g: &Grid) -> Result<Self> {
        let mut a = SymTridiag::neg_laplacian(g);
        a.scale(g.h());
        let factor = a
            .factor()
            .ok_or_else(|| Error::Optimization("singular Riesz operator".into()))?;
        Ok(Self { factor, h: g.h() })
    }

    fn solve(&self, v: &[f64]) -> Vec<f64> {
        self.factor.solve(v)
    }

    pub(crate) fn dual_norm(&self, grad: &[f64]) -> f64 {
        grid::dot(&self.solve(grad), grad).max(0.0).sqrt()
    }

    fn energy_norm(&self, u: &[f64]) -> f64 {
        grid::grad_power_sum(u, self.h, 2.0).sqrt()
    }
}

/// Preconditioned L-BFGS with Armijo backtracking on a scale-invariant
/// objective. The iterate is renormalized whenever its `H¹₀` norm drifts by
/// more than a factor 2.
pub(crate) fn descend<O: ScaleInvariant>(
    obj: &O,
    start: &[f64],
    riesz: &Riesz,
    opts: &MinimizeOptions,
) -> Result<Descent> {
    let mut u = start.to_vec();
    let n0 = riesz.energy_norm(&u);
    if !(n0 > 0.0) {
        return Err(Error::Domain("descent needs a nonzero start".into()));
    }
    u.iter_mut().for_each(|v| *v /= n0);
    let (mut value, mut grad) = obj
        .eval(&u)
        .ok_or_else(|| Error::Optimization("objective undefined at the start point".into()))?;

    let mut mem: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut stall = 0;
    let mut gnorm = riesz.dual_norm(&grad);
    while iterations < opts.max_iter {
        if gnorm <= opts.gtol * value.abs().max(1.0) {
            converged = true;
            break;
        }
        iterations += 1;
        let mut dir = two_loop(riesz, &grad, &mem);
        let mut slope = grid::dot(&dir, &grad);
        if !(slope < 0.0) {
            mem.clear();
            dir = riesz.solve(&grad);
            dir.iter_mut().for_each(|v| *v = -*v);
            slope = grid::dot(&dir, &grad);
        }
        // first step of a fresh memory: move a tenth of the field
        let mut alpha = if mem.is_empty() {
            0.1 / riesz.energy_norm(&dir).max(1e-300)
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = u.iter().zip(&dir).map(|(a, d)| a + alpha * d).collect();
            if let Some((v, gr)) = obj.eval(&trial) {
                if v <= value + 1e-4 * alpha * slope {
                    accepted = Some((trial, v, gr));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((next, next_value, next_grad)) = accepted else {
            if mem.is_empty() {
                // no descent even along the preconditioned gradient: flat to rounding
                converged = gnorm <= 1e-6 * value.abs().max(1.0);
                break;
            }
            mem.clear();
            continue;
        };
        let decrease = value - next_value;
        let s: Vec<f64> = next.iter().zip(&u).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = grid::dot(&s, &y);
        if sy > 1e-14 * grid::dot(&s, &s).sqrt() * grid::dot(&y, &y).sqrt() {
            if mem.len() == opts.memory {
                mem.pop_front();
            }
            mem.push_back((s, y, 1.0 / sy));
        }
        u = next;
        value = next_value;
        grad = next_grad;
        gnorm = riesz.dual_norm(&grad);
        if decrease <= 1e-15 * value.abs().max(1e-300) {
            stall += 1;
            if stall >= 20 {
                break;
            }
        } else {
            stall = 0;
        }
        let nrm = riesz.energy_norm(&u);
        if !(0.5..=2.0).contains(&nrm) {
            // the gradient of a 0-homogeneous function scales as 1/c
            u.iter_mut().for_each(|v| *v /= nrm);
            grad.iter_mut().for_each(|v| *v *= nrm);
            gnorm *= nrm;
            mem.clear();
        }
    }
    let nrm = riesz.energy_norm(&u);
    u.iter_mut().for_each(|v| *v /= nrm);
    Ok(Descent {
        u,
        value,
        grad_norm: gnorm * nrm,
        iterations,
        converged,
    })
}

fn two_loop(riesz: &Riesz, grad: &[f64], mem: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = grad.to_vec();
    let mut alphas = Vec::with_capacity(mem.len());
    for (s, y, rho) in mem.iter().rev() {
        let a = rho * grid::dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    let mut r = riesz.solve(&q);
    if let Some((s, y, _)) = mem.back() {
        let hy = riesz.solve(y);
        let scale = grid::dot(s, y) / grid::dot(y, &hy);
        if scale.is_finite() && scale > 0.0 {
            r.iter_mut().for_each(|v| *v *= scale);
        }
    }
    for ((s, y, rho), a) in mem.iter().zip(alphas.iter().rev()) {
        let b = rho * grid::dot(y, &r);
        r.iter_mut().zip(s).for_each(|(ri, si)| *ri += (a - b) * si);
    }
    r.iter_mut().for_each(|v| *v = -*v);
    r
}

/// `Ψ_δ` on a grid.
struct RayEnergy<'a> {
    params: &'a ModelParams,
    g: &'a Grid,
    delta: f64,
    tol: f64,
}

impl RayEnergy<'_> {
    fn value(&self, u: &[f64]) -> Option<(f64, f64)> {
        let ints = Integrals::of_values(u, self.g, self.params);
        let fr = lambda_root_from(&ints, self.delta, self.params, self.tol).ok()?;
        let v = ints.scaled(fr.lambda_star, self.params).energy(self.params);
        v.is_finite().then_some((v, fr.lambda_star))
    }
}

impl ScaleInvariant for RayEnergy<'_> {
    fn eval(&self, u: &[f64]) -> Option<(f64, Vec<f64>)> {
        let (value, lambda) = self.value(u)?;
        let h = self.g.h();
        let w = Field::from_vec_unchecked(u.iter().map(|v| lambda * v).collect());
        let gj = energy::energy_gradient(&w, self.params, self.g).ok()?;
        let grad: Vec<f64> = if self.delta == 1.0 {
            gj.values().iter().map(|v| lambda * h * v).collect()
        } else {
            let gi = energy::i_delta_gradient(&w, self.delta, self.params, self.g).ok()?;
            let den = grid::dot(gi.values(), u);
            if den == 0.0 {
                return None;
            }
            let c = grid::dot(gj.values(), u) / den;
            gj.values()
                .iter()
                .zip(gi.values())
                .map(|(a, b)| lambda * h * (a - c * b))
                .collect()
        };
        Some((value, grad))
    }
}

/// Descends `Ψ_δ` from `start` (any nonzero field on the grid).
pub fn minimize_from(
    start: &Field,
    delta: f64,
    params: &ModelParams,
    g: &Grid,
    opts: &MinimizeOptions,
) -> Result<RayMinimum> {
    start.check(g)?;
    if delta <= 0.0 || !delta.is_finite() {
        return Err(Error::Parameter(format!("delta must be positive, got {delta}")));
    }
    let obj = RayEnergy {
        params,
        g,
        delta,
        tol: opts.fibering_tol,
    };
    let riesz = Riesz::new(g)?;
    let out = descend(&obj, start.values(), &riesz, opts)?;
    let (value, lambda) = obj
        .value(&out.u)
        .ok_or_else(|| Error::Optimization("lost the fibering root at the final iterate".into()))?;
    Ok(RayMinimum {
        value,
        minimizer: Field::from_vec_unchecked(out.u.iter().map(|v| lambda * v).collect()),
        iterations: out.iterations,
        grad_norm: out.grad_norm,
        converged: out.converged,
    })
}

/// Grid-scale pattern `(−1)^i`. Far beyond `δ = 1` the discrete infimum sits
/// near it, where smooth starts stall in shallower minima.
pub fn alternating_field(g: &Grid) -> Field {
    Field::from_vec_unchecked((0..g.n()).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect())
}

/// Best of `opts.restarts` independent descents from random smooth starts,
/// plus any supplied warm starts and the alternating field. The reduction
/// keeps the lowest value and breaks ties by start order.
pub fn multistart(
    delta: f64,
    params: &ModelParams,
    g: &Grid,
    opts: &MinimizeOptions,
    warm: &[Field],
) -> Result<(RayMinimum, Vec<f64>)> {
    let starts: Vec<Field> = warm
        .iter()
        .cloned()
        .chain(std::iter::once(alternating_field(g)))
        .chain((0..opts.restarts).map(|i| start_field(g, opts.seed, i)))
        .collect();
    let results: Vec<Result<RayMinimum>> = starts
        .par_iter()
        .map(|s| minimize_from(s, delta, params, g, opts))
        .collect();
    let mut best: Option<RayMinimum> = None;
    let mut history = Vec::with_capacity(results.len());
    let mut last_err = None;
    for r in results {
        match r {
            Ok(m) => {
                if best.as_ref().is_none_or(|b| m.value < b.value) {
                    best = Some(m);
                }
            }
            Err(e) => last_err = Some(e),
        }
        if let Some(b) = &best {
            history.push(b.value);
        }
    }
    match best {
        Some(b) => Ok((b, history)),
        None => Err(last_err.unwrap_or_else(|| Error::Optimization("no starts".into()))),
    }
}
