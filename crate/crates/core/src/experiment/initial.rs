//! Initial data presets and their scaling along rays.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{Branch, InitialSpec, Scaling, Shape};
use crate::bisect::{bisect, BisectOptions};
use crate::energy::{self, Integrals};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid, ModelParams};
use crate::optimize::random_smooth_field;

/// Unscaled profile of `shape` (peak of order one).
pub fn shape_field(shape: &Shape, g: &Grid, seed: u64) -> Result<Field> {
    let len = g.length();
    match shape {
        Shape::Sine { modes } => Field::from_fn(g, |x| {
            modes
                .iter()
                .map(|&m| (m as f64 * std::f64::consts::PI * x / len).sin())
                .sum()
        }),
        Shape::Bump => Field::from_fn(g, |x| {
            let r = 2.0 * x / len - 1.0;
            if r.abs() < 1.0 {
                (1.0 - 1.0 / (1.0 - r * r)).exp()
            } else {
                0.0
            }
        }),
        Shape::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok(random_smooth_field(g, &mut rng))
        }
    }
}

/// `λu` on the requested branch of the ray through `u` with `J(λu) = target`.
pub fn scale_to_energy(u: &Field, target: f64, branch: Branch, params: &ModelParams, g: &Grid) -> Result<Field> {
    let star = energy::find_lambda_star(u, params, g, 1e-12)?.lambda_star;
    let ints = Integrals::of(u, g, params)?;
    let j_at = |ln_l: f64| ints.scaled(ln_l.exp(), params).energy(params);
    let peak = j_at(star.ln());
    if target > peak {
        return Err(Error::Domain(format!(
            "energy {target:e} exceeds the ray maximum {peak:e}"
        )));
    }
    if target == 0.0 && branch == Branch::Lower {
        return Ok(Field::zeros(g));
    }
    let (lo, hi) = match branch {
        Branch::Lower => (star.ln() - 60.0, star.ln()),
        Branch::Upper => (star.ln(), star.ln() + 60.0),
    };
    let r = bisect(|s| j_at(s) - target, lo, hi, BisectOptions::exhaustive())?;
    Ok(u.scaled(r.root.exp()))
}

/// Builds the initial field; `depth` supplies `d` when the scaling needs it.
pub fn build_initial(
    spec: &InitialSpec,
    params: &ModelParams,
    g: &Grid,
    seed: u64,
    depth: impl FnOnce() -> Result<f64>,
) -> Result<Field> {
    let base = shape_field(&spec.shape, g, seed)?;
    match spec.scaling {
        Scaling::Amplitude(a) => Ok(base.scaled(a)),
        Scaling::ToI { factor, .. } => {
            let star = energy::find_lambda_star(&base, params, g, 1e-12)?.lambda_star;
            Ok(base.scaled(star * factor))
        }
        Scaling::ToJ { fraction, branch } => {
            let d = depth()?;
            scale_to_energy(&base, fraction * d, branch, params, g)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::eval_energy;

    #[test]
    fn sine_preset_matches_formula() {
        let prm = ModelParams::desk();
        let g = Grid::for_params(15, &prm).unwrap();
        let u = shape_field(&Shape::Sine { modes: vec![1, 3] }, &g, 0).unwrap();
        for (i, x) in g.nodes().enumerate() {
            let e = (std::f64::consts::PI * x).sin() + (3.0 * std::f64::consts::PI * x).sin();
            assert!((u.values()[i] - e).abs() < 1e-15);
        }
        let b = shape_field(&Shape::Bump, &g, 0).unwrap();
        assert!((b.values()[7] - 1.0).abs() < 1e-15);
        assert_eq!(
            shape_field(&Shape::Random, &g, 5).unwrap(),
            shape_field(&Shape::Random, &g, 5).unwrap()
        );
    }

    #[test]
    fn energy_targets_on_both_branches() {
        let prm = ModelParams::desk();
        let g = Grid::for_params(31, &prm).unwrap();
        let u = shape_field(&Shape::Bump, &g, 0).unwrap();
        for (target, branch) in [(3.0, Branch::Lower), (3.0, Branch::Upper), (-50.0, Branch::Upper)] {
            let v = scale_to_energy(&u, target, branch, &prm, &g).unwrap();
            let e = eval_energy(&v, &prm, &g).unwrap();
            assert!((e.j - target).abs() <= 1e-9 * target.abs());
            assert_eq!(e.i > 0.0, branch == Branch::Lower);
        }
        assert!(scale_to_energy(&u, 1e9, Branch::Lower, &prm, &g).is_err());
    }

    #[test]
    fn sign_scaling() {
        let prm = ModelParams::desk();
        let g = Grid::for_params(31, &prm).unwrap();
        for (positive, factor) in [(true, 0.5), (false, 2.0)] {
            let spec = InitialSpec {
                shape: Shape::Sine { modes: vec![1] },
                scaling: Scaling::ToI { positive, factor },
            };
            let u = build_initial(&spec, &prm, &g, 0, || unreachable!()).unwrap();
            assert_eq!(eval_energy(&u, &prm, &g).unwrap().i > 0.0, positive);
        }
    }
}
