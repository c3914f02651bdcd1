use logkirch::bisect::{bisect, BisectOptions};
use logkirch::energy::{self, eval_energy, find_lambda_star, nehari_project, Integrals};
use logkirch::evolution::{step, StepperConfig};
use logkirch::experiment::config::parse_text;
use logkirch::grid::{self, p_laplacian};
use logkirch::{Field, Grid, ModelParams};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = ModelParams> {
    (0.2..3.0f64, 0.2..3.0f64, 0u8..=1, 2.0..3.5f64, 0.5..3.0f64, 0.3..3.0f64)
        .prop_map(|(a, b, k, p, dq, len)| ModelParams::new(a, b, k, p, 2.0 * p - 1.0 + dq, len).unwrap())
}

fn field(n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, n).prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 1e-3))
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn functionals_are_even(prm in params(), v in field(3..40)) {
        let g = Grid::for_params(v.len(), &prm).unwrap();
        let u = Field::new(v).unwrap();
        let (e, m) = (eval_energy(&u, &prm, &g).unwrap(), eval_energy(&u.scaled(-1.0), &prm, &g).unwrap());
        prop_assert_eq!(e.j, m.j);
        prop_assert_eq!(e.i, m.i);
    }

    #[test]
    fn scaled_integrals_match_direct_evaluation(prm in params(), v in field(3..40), lam in 0.05..8.0f64) {
        let g = Grid::for_params(v.len(), &prm).unwrap();
        let u = Field::new(v).unwrap();
        let a = Integrals::of(&u, &g, &prm).unwrap().scaled(lam, &prm);
        let b = Integrals::of(&u.scaled(lam), &g, &prm).unwrap();
        prop_assert!(close(a.grad_p, b.grad_p, 1e-11));
        prop_assert!(close(a.norm_q1, b.norm_q1, 1e-11));
        prop_assert!((a.log_term - b.log_term).abs() <= 1e-11 * (b.norm_q1 * (1.0 + lam.ln().abs()) + b.log_term.abs()).max(1.0));
    }

    #[test]
    fn energy_splits_into_nehari_and_coercive_parts(prm in params(), v in field(3..40)) {
        let g = Grid::for_params(v.len(), &prm).unwrap();
        let u = Field::new(v).unwrap();
        let ints = Integrals::of(&u, &g, &prm).unwrap();
        let e = eval_energy(&u, &prm, &g).unwrap();
        let scale = e.grad_p + e.grad_2p + e.log_term.abs() + e.norm_q1;
        prop_assert!(e.identity_residual(&prm).abs() <= 1e-12 * scale.max(1.0));
        let split = ints.coercive_part(&prm) + ints.nehari(&prm) / (prm.q + 1.0);
        prop_assert!((split - e.j).abs() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn p_laplacian_sums_by_parts(p in 2.0..4.0f64, v in field(2..50), len in 0.5..3.0f64) {
        let g = Grid::new(v.len(), len).unwrap();
        let u = Field::new(v).unwrap();
        let lap = p_laplacian(&u, &g, p).unwrap();
        let lhs = -grid::inner(&lap, &u, &g).unwrap();
        let rhs = grid::grad_norm_r(&u, &g, p).unwrap().powf(p);
        prop_assert!(close(lhs, rhs, 1e-10));
    }

    #[test]
    fn nehari_root_is_scale_covariant(v in field(4..40), c in 0.05..20.0f64) {
        let prm = ModelParams::desk();
        let g = Grid::for_params(v.len(), &prm).unwrap();
        let u = Field::new(v).unwrap();
        let l1 = find_lambda_star(&u, &prm, &g, 1e-12).unwrap().lambda_star;
        let lc = find_lambda_star(&u.scaled(c), &prm, &g, 1e-12).unwrap().lambda_star;
        prop_assert!(close(l1, lc * c, 1e-9));
        let w = nehari_project(&u, &prm, &g, 1e-12).unwrap();
        let e = eval_energy(&w, &prm, &g).unwrap();
        prop_assert!(e.i.abs() <= 1e-8 * (prm.a * e.grad_p + prm.b * e.grad_2p));
        // the ray maximum sits at λ*
        let ints = Integrals::of(&u, &g, &prm).unwrap();
        for f in [0.9, 1.1] {
            prop_assert!(ints.scaled(l1 * f, &prm).energy(&prm) < e.j);
        }
    }

    #[test]
    fn bisection_keeps_a_certified_bracket(root in -5.0..5.0f64, width in 0.1..10.0f64, slope in 0.1..10.0f64) {
        let f = |x: f64| slope * (x - root).powi(3) + (x - root);
        let r = bisect(f, root - width, root + 0.7 * width, BisectOptions::default()).unwrap();
        prop_assert!(r.f_lo <= 0.0 && r.f_hi >= 0.0);
        prop_assert!(r.lo <= r.root && r.root <= r.hi);
        prop_assert!(r.lo <= root && root <= r.hi);
        prop_assert!(r.hi - r.lo <= 1e-9);
    }

    #[test]
    fn implicit_steps_do_not_raise_energy(v in prop::collection::vec(-1.0..1.0f64, 15), dt in 1e-5..1e-2f64) {
        let prm = ModelParams::desk();
        let g = Grid::for_params(15, &prm).unwrap();
        let u = Field::new(v).unwrap();
        let cfg = StepperConfig {
            scheme: logkirch::evolution::Scheme::FullyImplicit,
            ..StepperConfig::fixed(dt, 1.0)
        };
        let u1 = step(&u, dt, &prm, &g, &cfg).unwrap();
        let (j0, j1) = (eval_energy(&u, &prm, &g).unwrap().j, eval_energy(&u1, &prm, &g).unwrap().j);
        prop_assert!(j1 <= j0 + 1e-12 * j0.abs().max(1.0));
    }

    #[test]
    fn config_text_round_trips(n in 3usize..300, a in 0.1..5.0f64, dt in 1e-6..1e-2f64, seed in any::<u64>(), amp in 0.01..50.0f64) {
        let text = format!("grid.n = {n}\nmodel.a = {a}\nstepper.dt0 = {dt}\nseed = {seed}\ninitial.amplitude = {amp}\n");
        let cfg = parse_text(&text).unwrap();
        let again = parse_text(&cfg.to_text()).unwrap();
        prop_assert_eq!(cfg.to_pairs(), again.to_pairs());
        prop_assert_eq!(again.grid_n, n);
        prop_assert_eq!(again.seed, seed);
        prop_assert_eq!(again.model.a, a);
    }
}

#[test]
fn stationary_residual_vanishes_at_zero() {
    let prm = ModelParams::desk();
    let g = Grid::for_params(9, &prm).unwrap();
    let r = energy::stationary_residual(&Field::zeros(&g), &prm, &g).unwrap();
    assert!(r.values().iter().all(|&x| x == 0.0));
}
