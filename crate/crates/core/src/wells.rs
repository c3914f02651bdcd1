//! Embedding constants, the potential-well depth `d(δ)`, its δ-roots and the
//! high-energy quantities `f(y)`, `κ`, `κ̃`, and the `λ_s`, `Λ_s` bounds.
//!
//! Every constant is the discrete one on the given grid. Ratio constants are
//! maximized numerically; the values are lower bounds on the discrete
//! supremum, converged to the optimizer tolerance.

use serde::{Deserialize, Serialize};

use crate::bisect::{bisect, BisectOptions};
use crate::error::{Error, Result};
use crate::grid::{self, Field, Grid, ModelParams};
use crate::optimize::{self, descend, MinimizeOptions, Riesz, ScaleInvariant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ConstantKind {
    /// `‖u‖_{q+2} ≤ S ‖∇u‖_p`
    Sobolev,
    /// `‖u‖_{q+1} ≤ S₁ ‖∇u‖_p`
    SobolevQ1,
    /// `‖u‖_{q+2} ≤ β ‖u‖₂^{1−θ} ‖∇u‖_p^θ`
    GagliardoNirenberg,
    Theta,
    /// `‖∇u‖₂ ≤ C* ‖∇u‖_p`
    GradientHolder,
    /// `C_* ‖u‖₂ ≤ ‖∇u‖₂`
    Poincare,
    /// `K_p(α^p + β^p) ≥ (α + β)^p`
    Convexity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingConstants {
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "S1")]
    pub s1: f64,
    #[serde(rename = "betaGN")]
    pub beta_gn: f64,
    pub theta: f64,
    #[serde(rename = "Cstar")]
    pub c_star: f64,
    #[serde(rename = "Clower")]
    pub c_lower: f64,
    #[serde(rename = "Kp")]
    pub kp: f64,
}

/// Options for the ratio maximizations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct EstimateOptions {
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
    /// Relative spread allowed between the two best restarts before the
    /// estimate counts as converged.
    pub agreement: f64,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            restarts: 8,
            max_iter: 3000,
            seed: 0,
            agreement: 1e-6,
        }
    }
}

/// Exponent with `θ(1/2 − 1/p + 1/n) = 1/2 − 1/(q+2)`, `n = 1`.
pub fn theta_exponent(params: &ModelParams) -> f64 {
    let n = ModelParams::DIM as f64;
    (0.5 - 1.0 / (params.q + 2.0)) / (0.5 - 1.0 / params.p + 1.0 / n)
}

/// `2^{p−1}`, the best constant in `(α + β)^p ≤ K_p(α^p + β^p)`.
pub fn convexity_constant(p: f64) -> f64 {
    2f64.powf(p - 1.0)
}

/// Sum of `c·log(norm term)` whose coefficients add to zero, negated for
/// minimization.
struct NegLogRatio {
    h: f64,
    p: f64,
    /// `(r, c)`: `c·(1/r)·log(h Σ|u|^r)`
    node_terms: Vec<(f64, f64)>,
    /// coefficient of `(1/p)·log ‖∇u‖_p^p`
    grad_coef: f64,
}

impl ScaleInvariant for NegLogRatio {
    fn eval(&self, u: &[f64]) -> Option<(f64, Vec<f64>)> {
        let n = u.len();
        let mut value = 0.0;
        let mut grad = vec![0.0; n];
        for &(r, c) in &self.node_terms {
            let s = grid::power_sum(u, self.h, r);
            if !(s > 0.0) {
                return None;
            }
            value -= c / r * s.ln();
            for (gi, &v) in grad.iter_mut().zip(u) {
                *gi -= c * self.h * grid::pow_abs(v, r - 1.0) * v.signum() / s;
            }
        }
        let gp = grid::grad_power_sum(u, self.h, self.p);
        if !(gp > 0.0) {
            return None;
        }
        value -= self.grad_coef / self.p * gp.ln();
        let mut lap = vec![0.0; n];
        grid::p_laplacian_into(u, self.h, self.p, &mut lap);
        for (gi, l) in grad.iter_mut().zip(&lap) {
            // ∂(h Σ|D|^p)/∂u_i = −p h (Δ_p u)_i
            *gi += self.grad_coef * self.h * l / gp;
        }
        value.is_finite().then_some((value, grad))
    }
}

fn maximize_ratio(obj: &NegLogRatio, g: &Grid, what: &str, opts: &EstimateOptions) -> Result<f64> {
    let riesz = Riesz::new(g)?;
    let mopts = MinimizeOptions {
        max_iter: opts.max_iter,
        gtol: 1e-10,
        ..Default::default()
    };
    let mut vals: Vec<f64> = (0..opts.restarts.max(1))
        .filter_map(|i| {
            let start = optimize::start_field(g, opts.seed, i);
            descend(obj, start.values(), &riesz, &mopts).ok().map(|d| -d.value)
        })
        .collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    let Some(&best) = vals.first() else {
        return Err(Error::Estimation {
            what: what.into(),
            restarts: opts.restarts,
            best: f64::NAN,
        });
    };
    // two restarts must agree on the supremum
    if vals.len() > 1 && opts.restarts > 1 && (best - vals[1]).abs() > opts.agreement * best.abs().max(1.0) {
        return Err(Error::Estimation {
            what: what.into(),
            restarts: opts.restarts,
            best: best.exp(),
        });
    }
    Ok(best.exp())
}

pub fn estimate_constant(
    kind: ConstantKind,
    params: &ModelParams,
    g: &Grid,
    opts: &EstimateOptions,
) -> Result<f64> {
    params.validate()?;
    let (p, q) = (params.p, params.q);
    let h = g.h();
    match kind {
        ConstantKind::Theta => Ok(theta_exponent(params)),
        ConstantKind::Convexity => Ok(convexity_constant(p)),
        // Hölder over the N+1 cells of total length L; attained by |D| constant
        ConstantKind::GradientHolder => Ok(g.length().powf((p - 2.0) / (2.0 * p))),
        ConstantKind::Poincare => Ok(g.dirichlet_eigenvalue().sqrt()),
        ConstantKind::Sobolev => maximize_ratio(
            &NegLogRatio {
                h,
                p,
                node_terms: vec![(q + 2.0, 1.0)],
                grad_coef: -1.0,
            },
            g,
            "S",
            opts,
        ),
        ConstantKind::SobolevQ1 => maximize_ratio(
            &NegLogRatio {
                h,
                p,
                node_terms: vec![(q + 1.0, 1.0)],
                grad_coef: -1.0,
            },
            g,
            "S1",
            opts,
        ),
        ConstantKind::GagliardoNirenberg => {
            let theta = theta_exponent(params);
            maximize_ratio(
                &NegLogRatio {
                    h,
                    p,
                    node_terms: vec![(q + 2.0, 1.0), (2.0, -(1.0 - theta))],
                    grad_coef: -theta,
                },
                g,
                "betaGN",
                opts,
            )
        }
    }
}

pub fn estimate_constants(params: &ModelParams, g: &Grid, opts: &EstimateOptions) -> Result<EmbeddingConstants> {
    Ok(EmbeddingConstants {
        s: estimate_constant(ConstantKind::Sobolev, params, g, opts)?,
        s1: estimate_constant(ConstantKind::SobolevQ1, params, g, opts)?,
        beta_gn: estimate_constant(ConstantKind::GagliardoNirenberg, params, g, opts)?,
        theta: theta_exponent(params),
        c_star: estimate_constant(ConstantKind::GradientHolder, params, g, opts)?,
        c_lower: estimate_constant(ConstantKind::Poincare, params, g, opts)?,
        kp: convexity_constant(params.p),
    })
}

/// `r(δ) = (δa/S^{q+2})^{1/(q+2−p)}`: below this gradient norm `I_δ > 0`.
pub fn r_of_delta(delta: f64, constants: &EmbeddingConstants, params: &ModelParams) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::Parameter(format!("delta must be positive, got {delta}")));
    }
    let q2 = params.q + 2.0;
    Ok((delta * params.a / constants.s.powf(q2)).powf(1.0 / (q2 - params.p)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WellDepth {
    pub delta: f64,
    pub d: f64,
    pub minimizer: Field,
    pub restarts: usize,
    /// Best value after each restart.
    pub history: Vec<f64>,
}

/// `d(δ) = inf{J(u) : u ∈ N_δ}` by multi-start descent of `u ↦ J(λ_δ(u)u)`.
pub fn compute_well_depth(delta: f64, params: &ModelParams, g: &Grid, opts: &MinimizeOptions) -> Result<WellDepth> {
    compute_well_depth_warm(delta, params, g, opts, &[])
}

/// As [`compute_well_depth`], with extra starting fields tried before the random ones.
pub fn compute_well_depth_warm(
    delta: f64,
    params: &ModelParams,
    g: &Grid,
    opts: &MinimizeOptions,
    warm: &[Field],
) -> Result<WellDepth> {
    params.validate()?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Parameter(format!("delta must be positive, got {delta}")));
    }
    let (best, history) = optimize::multistart(delta, params, g, opts, warm)?;
    Ok(WellDepth {
        delta,
        d: best.value,
        minimizer: best.minimizer,
        restarts: history.len(),
        history,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DeltaCurve {
    pub deltas: Vec<f64>,
    pub values: Vec<f64>,
}

impl DeltaCurve {
    /// Samples `d(δ)` at increasing `deltas`, warm-starting each minimization
    /// from the ground-state shape.
    pub fn build(
        deltas: &[f64],
        params: &ModelParams,
        g: &Grid,
        opts: &MinimizeOptions,
        warm: &[Field],
    ) -> Result<Self> {
        let mut ds = deltas.to_vec();
        ds.sort_by(f64::total_cmp);
        let values = ds
            .iter()
            .map(|&dl| compute_well_depth_warm(dl, params, g, opts, warm).map(|w| w.d))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { deltas: ds, values })
    }

    /// Largest relative violation of "increasing up to δ = 1, decreasing after".
    pub fn monotonicity_violation(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 1..self.deltas.len() {
            let (a, b) = (self.values[i - 1], self.values[i]);
            let scale = a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
            let excess = if self.deltas[i] <= 1.0 { a - b } else { b - a };
            worst = worst.max(excess / scale);
        }
        worst
    }

    /// δ of the largest sample.
    pub fn argmax(&self) -> Option<f64> {
        self.values
            .iter()
            .zip(&self.deltas)
            .max_by(|a, b| a.0.total_cmp(b.0))
            .map(|(_, &d)| d)
    }
}

/// Roots `δ₁ < 1 < δ₂` of `d(δ) = E`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DeltaRoots {
    pub energy: f64,
    pub delta1: f64,
    pub delta2: f64,
    /// `d(δ) > E` all the way down to [`DELTA_FLOOR`]: on a bounded 1-D
    /// domain `d(0⁺)` stays positive, and `δ₁ = 0` is reported. Since then
    /// `I_δ(u) > 0` for every small δ, the decay estimates remain valid with
    /// `δ₁ = 0`.
    pub delta1_clamped: bool,
}

pub const DELTA_FLOOR: f64 = 1e-6;

/// Solves `d(δ) = E` on both monotone branches, given `d = d(1)` and an
/// evaluator for `d(δ)`. An optimization failure of the evaluator is read as
/// `d(δ) = −∞` (the minimization escaped along a ray).
pub fn delta_roots<F>(energy: f64, d: f64, mut depth: F, tol: f64) -> Result<DeltaRoots>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(energy > 0.0 && energy < d) {
        return Err(Error::Domain(format!(
            "delta roots need 0 < E < d (E = {energy:e}, d = {d:e})"
        )));
    }
    let opts = BisectOptions {
        x_abs: tol,
        x_rel: 0.0,
        max_iter: 200,
    };
    let mut err = None;
    let mut diff = |dl: f64| -> f64 {
        if dl == 1.0 {
            return d - energy;
        }
        match depth(dl) {
            Ok(v) => v - energy,
            // the ray minimization escaped to −∞
            Err(Error::Optimization(_)) => f64::NEG_INFINITY,
            Err(e) => {
                err = Some(e);
                f64::NAN
            }
        }
    };

    // left branch: walk down until d(δ) < E
    let mut lo = 0.5;
    let mut left = None;
    while lo >= DELTA_FLOOR {
        let v = diff(lo);
        if v.is_nan() {
            break;
        }
        if v < 0.0 {
            left = Some(lo);
            break;
        }
        lo *= 0.25;
    }
    let (delta1, delta1_clamped) = match left {
        Some(lo) => {
            let r = bisect(&mut diff, lo, 1.0, opts)?;
            (r.root, false)
        }
        None => (0.0, true),
    };

    let mut hi = 2.0;
    let mut right = None;
    while hi <= 1e6 {
        let v = diff(hi);
        if v.is_nan() {
            break;
        }
        if v < 0.0 {
            right = Some(hi);
            break;
        }
        hi *= 2.0;
    }
    let delta2 = match right {
        Some(hi) => bisect(&mut diff, 1.0, hi, opts)?.root,
        None => {
            return Err(err.unwrap_or_else(|| {
                Error::Domain(format!("d(δ) stays above E = {energy:e} for δ up to 1e6"))
            }));
        }
    };
    if let Some(e) = err {
        return Err(e);
    }
    Ok(DeltaRoots {
        energy,
        delta1,
        delta2,
        delta1_clamped,
    })
}

/// `f(y) = b(q+1−2p)/(2p(q+1)) y^{2p} + a(q+1−p)/(p(q+1)) y^p + S₁^{q+1}/(q+1)² y^{q+1}`.
pub fn f_of_y(y: f64, constants: &EmbeddingConstants, params: &ModelParams) -> f64 {
    let (a, b, p, q1) = (params.a, params.b, params.p, params.q + 1.0);
    let yp = grid::pow_abs(y, p);
    b * (q1 - 2.0 * p) / (2.0 * p * q1) * yp * yp
        + a * (q1 - p) / (p * q1) * yp
        + constants.s1.powf(q1) / (q1 * q1) * grid::pow_abs(y, q1)
}

/// The unique `y > 0` with `f(y) = target`.
pub fn kappa_root(target: f64, constants: &EmbeddingConstants, params: &ModelParams) -> Result<f64> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::Domain(format!("kappa target must be positive, got {target}")));
    }
    let mut hi = 1.0;
    while f_of_y(hi, constants, params) < target {
        hi *= 2.0;
    }
    let r = bisect(
        |y| f_of_y(y, constants, params) - target,
        0.0,
        hi,
        BisectOptions::exhaustive(),
    )?;
    Ok(r.root)
}

/// `κ̃ = (ps(q+1)/(a(q+1−p)))^{1/p}`, the gradient bound on `N^s`.
pub fn kappa_tilde(s: f64, params: &ModelParams) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::Domain(format!("level s must be positive, got {s}")));
    }
    let (p, q1) = (params.p, params.q + 1.0);
    Ok((p * s * q1 / (params.a * (q1 - p))).powf(1.0 / p))
}

fn check_level(s: f64, d: f64) -> Result<()> {
    if !(s > d) {
        return Err(Error::Domain(format!("level s = {s:e} must exceed d = {d:e}")));
    }
    Ok(())
}

/// Lower bound on `λ_s = inf{‖u‖₂² + k‖∇u‖₂² : u ∈ N, J(u) < s}`.
///
/// With `e = p − θ(q+2)`: `[a β^{−(q+2)} y^e]^{2/((1−θ)(q+2))}` where `y = κ`
/// if `e > 0` and `y = κ̃` if `e < 0`.
pub fn lambda_s_lower_bound(s: f64, d: f64, constants: &EmbeddingConstants, params: &ModelParams) -> Result<f64> {
    check_level(s, d)?;
    let q2 = params.q + 2.0;
    let theta = constants.theta;
    let e = params.p - theta * q2;
    let y = if e >= 0.0 {
        kappa_root(d, constants, params)?
    } else {
        kappa_tilde(s, params)?
    };
    let base = params.a / constants.beta_gn.powf(q2) * y.powf(e);
    Ok(base.powf(2.0 / ((1.0 - theta) * q2)))
}

/// Upper bound `(1+k)|Ω|^{(p−2)/p} κ̃²` on `Λ_s = sup{‖u‖₂² + k‖∇u‖₂² : u ∈ N^s}`.
///
/// The chain uses `‖u‖₂ ≤ ‖∇u‖₂`, i.e. a Poincaré constant at most 1, which
/// holds for `L ≤ π`; longer domains get the extra factor `max(1, 1/C_*²)`.
pub fn big_lambda_s_upper_bound(s: f64, d: f64, constants: &EmbeddingConstants, params: &ModelParams) -> Result<f64> {
    check_level(s, d)?;
    let kt = kappa_tilde(s, params)?;
    let p = params.p;
    let poincare = (1.0 / (constants.c_lower * constants.c_lower)).max(1.0);
    Ok((poincare + params.k_f64()) * params.measure().powf((p - 2.0) / p) * kt * kt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{eval_energy, eval_i_delta, nehari_project};
    use crate::testutil::smooth_field;
    use std::f64::consts::PI;

    fn unit(s1: f64) -> EmbeddingConstants {
        EmbeddingConstants {
            s: 1.0,
            s1,
            beta_gn: 1.0,
            theta: 5.0 / 14.0,
            c_star: 1.0,
            c_lower: PI,
            kp: 2.0,
        }
    }

    fn desk(n: usize) -> (ModelParams, Grid) {
        let p = ModelParams::desk();
        (p, Grid::for_params(n, &p).unwrap())
    }

    #[test]
    fn closed_form_constants() {
        let prm = ModelParams::desk();
        assert!((theta_exponent(&prm) - 5.0 / 14.0).abs() < 1e-15);
        assert_eq!(convexity_constant(2.0), 2.0);
        for p in [2.0, 2.5, 3.0, 4.0] {
            let kp = convexity_constant(p);
            for i in 0..=20 {
                let x = i as f64 / 20.0;
                let y = 1.0 - x;
                assert!(kp * (x.powf(p) + y.powf(p)) >= (x + y).powf(p) - 1e-14);
            }
        }
    }

    #[test]
    fn sobolev_estimate_dominates_sine_ratio() {
        let (prm, g) = desk(63);
        let opts = EstimateOptions {
            restarts: 3,
            ..Default::default()
        };
        let s = estimate_constant(ConstantKind::Sobolev, &prm, &g, &opts).unwrap();
        let u = Field::from_fn(&g, |x| (PI * x).sin()).unwrap();
        let ratio = grid::norm_r(&u, &g, 7.0).unwrap() / grid::grad_norm_r(&u, &g, 2.0).unwrap();
        assert!(s >= ratio, "{s} < {ratio}");
        for seed in 0..30 {
            let v = smooth_field(&g, seed, 1.0);
            let r = grid::norm_r(&v, &g, 7.0).unwrap() / grid::grad_norm_r(&v, &g, 2.0).unwrap();
            assert!(r <= s * (1.0 + 1e-9));
        }
    }

    #[test]
    fn gradient_holder_bound() {
        let prm = ModelParams::new(1.0, 1.0, 1, 3.0, 7.0, 2.0).unwrap();
        let g = Grid::for_params(40, &prm).unwrap();
        let c = estimate_constant(ConstantKind::GradientHolder, &prm, &g, &EstimateOptions::default()).unwrap();
        for seed in 0..20 {
            let v = smooth_field(&g, seed, 1.0);
            let lhs = grid::grad_norm_r(&v, &g, 2.0).unwrap();
            let rhs = c * grid::grad_norm_r(&v, &g, 3.0).unwrap();
            assert!(lhs <= rhs * (1.0 + 1e-12));
        }
        // zigzag with constant |D| attains it (N+1 = 41 is odd, so use 39 interior)
        let g = Grid::for_params(39, &prm).unwrap();
        let zig = Field::new((0..39).map(|i| if i % 2 == 0 { 1.0 } else { 0.0 }).collect()).unwrap();
        let lhs = grid::grad_norm_r(&zig, &g, 2.0).unwrap();
        let rhs = c * grid::grad_norm_r(&zig, &g, 3.0).unwrap();
        assert!((lhs - rhs).abs() < 1e-12 * rhs);
    }

    #[test]
    fn r_of_delta_formula() {
        let prm = ModelParams::desk();
        let c = unit(1.0);
        assert!((r_of_delta(1.0, &c, &prm).unwrap() - 1.0).abs() < 1e-15);
        let ratio = r_of_delta(2.0, &c, &prm).unwrap() / r_of_delta(1.0, &c, &prm).unwrap();
        assert!((ratio - 2f64.powf(1.0 / 5.0)).abs() < 1e-14);
        assert!(r_of_delta(0.0, &c, &prm).is_err());
    }

    #[test]
    fn small_gradient_fields_have_positive_i_delta() {
        let (prm, g) = desk(31);
        let opts = EstimateOptions {
            restarts: 3,
            ..Default::default()
        };
        let s = estimate_constant(ConstantKind::Sobolev, &prm, &g, &opts).unwrap();
        let c = EmbeddingConstants { s, ..unit(1.0) };
        for delta in [0.5, 1.0, 2.0] {
            let r = r_of_delta(delta, &c, &prm).unwrap();
            for seed in 0..40 {
                let u = smooth_field(&g, seed, 1.0);
                let gn = grid::grad_norm_r(&u, &g, 2.0).unwrap();
                // rescale into the ball, at a seed-dependent fraction of the radius
                let frac = 0.05 + 0.9 * (seed as f64 / 40.0);
                let v = u.scaled(frac * r / gn);
                assert!(eval_i_delta(&v, delta, &prm, &g).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn f_of_y_values() {
        let prm = ModelParams::desk();
        let c = unit(1.0);
        assert!((f_of_y(1.0, &c, &prm) - 4.0 / 9.0).abs() < 1e-15);
        assert_eq!(f_of_y(0.0, &c, &prm), 0.0);
        assert!((kappa_root(4.0 / 9.0, &c, &prm).unwrap() - 1.0).abs() < 1e-12);
        assert!(kappa_root(0.0, &c, &prm).is_err());
        let mut prev = 0.0;
        for i in 1..100 {
            let v = f_of_y(i as f64 * 0.05, &c, &prm);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn kappa_tilde_power_law() {
        let prm = ModelParams::desk();
        let a = kappa_tilde(3.0, &prm).unwrap();
        let b = kappa_tilde(3.0 * 4.0, &prm).unwrap();
        assert!((b / a - 2.0).abs() < 1e-14);
    }

    #[test]
    fn big_lambda_reduces_to_kappa_tilde_squared() {
        let prm = ModelParams::new(1.0, 1.0, 0, 2.0, 5.0, 1.0).unwrap();
        let c = unit(1.0);
        let kt = kappa_tilde(10.0, &prm).unwrap();
        let v = big_lambda_s_upper_bound(10.0, 5.0, &c, &prm).unwrap();
        assert!((v - kt * kt).abs() < 1e-14 * v);
        assert!(big_lambda_s_upper_bound(4.0, 5.0, &c, &prm).is_err());
        assert!(lambda_s_lower_bound(5.0, 5.0, &c, &prm).is_err());
    }

    #[test]
    fn well_depth_below_sine_projection_and_nehari() {
        let (prm, g) = desk(63);
        let opts = MinimizeOptions {
            restarts: 3,
            ..Default::default()
        };
        let w = compute_well_depth(1.0, &prm, &g, &opts).unwrap();
        let sine = Field::from_fn(&g, |x| (PI * x).sin()).unwrap();
        let js = eval_energy(&nehari_project(&sine, &prm, &g, 1e-10).unwrap(), &prm, &g)
            .unwrap()
            .j;
        assert!(w.d > 0.0 && w.d <= js);
        let e = eval_energy(&w.minimizer, &prm, &g).unwrap();
        assert!(e.i.abs() <= 1e-8 * e.grad_p);
        assert!((e.j - w.d).abs() <= 1e-10 * w.d);
        assert_eq!(w.history.len(), opts.restarts + 1);
    }

    #[test]
    fn roots_on_a_model_curve() {
        // d(δ) = δ(2 − δ) + 1: maximum 2 at δ = 1
        let curve = |dl: f64| Ok(dl * (2.0 - dl) + 1.0);
        let r = delta_roots(1.5, 2.0, curve, 1e-12).unwrap();
        assert!((r.delta1 - (1.0 - 0.5f64.sqrt())).abs() < 1e-10);
        assert!((r.delta2 - (1.0 + 0.5f64.sqrt())).abs() < 1e-10);
        assert!(!r.delta1_clamped);
        let near = delta_roots(2.0 - 1e-12, 2.0, curve, 1e-12).unwrap();
        assert!((near.delta1 - 1.0).abs() < 1e-5 && (near.delta2 - 1.0).abs() < 1e-5);
        // a curve that never drops below E on the left is clamped
        let flat = |dl: f64| Ok(if dl < 1.0 { 1.5 + dl } else { 3.5 - 1.5 * dl });
        let c = delta_roots(1.2, 2.5, flat, 1e-12).unwrap();
        assert!(c.delta1_clamped && c.delta1 == 0.0);
        assert!((c.delta2 - 1.5333333333333).abs() < 1e-9);
        assert!(delta_roots(2.5, 2.0, curve, 1e-12).is_err());
        assert!(delta_roots(0.0, 2.0, curve, 1e-12).is_err());
    }
}
