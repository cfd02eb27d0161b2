use proptest::prelude::*;
use valleyjump::config::{self, RunConfig};
use valleyjump::dynamics::{self, DynamicsConfig, InitMode};
use valleyjump::experiments::SweepGrid;
use valleyjump::landscape::{self, LandscapeParams, Sym2, Valley};
use valleyjump::{specialfn, theory};

fn params() -> impl Strategy<Value = LandscapeParams> {
    (0.2f64..2.0, 0.1f64..0.95, 0.5f64..2.0, 0.5f64..2.0, 0.5f64..4.0, 0.5f64..4.0, 0.0f64..0.5, 0.5f64..3.0)
        .prop_map(|(x1, ratio, x0, f0, yb, yf, ld, yd)| {
            LandscapeParams::new(x1, x1 * ratio, x0, f0, yb, yf, ld, yd).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn gradient_matches_central_differences(p in params(), x in -2.0f64..2.0, y in 0.05f64..8.0) {
        // stay off the ridge, where the second derivative jumps
        prop_assume!(x.abs() > 1e-3);
        let h = 1e-6 * (1.0 + x.abs().max(y));
        let l = |x: f64, y: f64| landscape::loss(&p, x, y).unwrap();
        let g = landscape::gradient(&p, x, y).unwrap();
        let gx = (l(x + h, y) - l(x - h, y)) / (2.0 * h);
        let gy = (l(x, y + h) - l(x, y - h)) / (2.0 * h);
        prop_assert!((g[0] - gx).abs() <= 1e-5 * (1.0 + gx.abs()));
        prop_assert!((g[1] - gy).abs() <= 1e-5 * (1.0 + gy.abs()));
    }

    #[test]
    fn hessian_matches_gradient_differences(p in params(), x in -2.0f64..2.0, y in 0.05f64..8.0) {
        prop_assume!(x.abs() > 1e-3);
        let h = 1e-6 * (1.0 + x.abs().max(y));
        let g = |x: f64, y: f64| landscape::gradient(&p, x, y).unwrap();
        let hs = landscape::hessian(&p, x, y).unwrap();
        let hxx = (g(x + h, y)[0] - g(x - h, y)[0]) / (2.0 * h);
        let hxy = (g(x, y + h)[0] - g(x, y - h)[0]) / (2.0 * h);
        let hyy = (g(x, y + h)[1] - g(x, y - h)[1]) / (2.0 * h);
        prop_assert!((hs.a - hxx).abs() <= 1e-4 * (1.0 + hxx.abs()));
        prop_assert!((hs.b - hxy).abs() <= 1e-4 * (1.0 + hxy.abs()));
        prop_assert!((hs.d - hyy).abs() <= 1e-4 * (1.0 + hyy.abs()));
    }

    #[test]
    fn loss_is_continuous_across_the_ridge(p in params(), y in 0.0f64..10.0) {
        let l0 = landscape::loss(&p, 0.0, y).unwrap();
        let left = landscape::loss(&p, -1e-12, y).unwrap();
        prop_assert!((l0 - left).abs() < 1e-9);
        prop_assert!((l0 - landscape::drift_loss(&p, y).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn barrier_grows_with_y_and_flat_valley_is_flatter(p in params(), y in 0.01f64..20.0) {
        let b = landscape::barrier_height(&p, y).unwrap();
        prop_assert!(b > 0.0);
        prop_assert!(landscape::barrier_height(&p, 1.1 * y).unwrap() > b);
        let geo = landscape::valley_geometry(&p, y).unwrap();
        prop_assert!(geo.flatness(Valley::Flat) >= geo.flatness(Valley::Sharp));
        prop_assert!(geo.minimum(Valley::Flat) > 0.0 && geo.minimum(Valley::Sharp) < 0.0);
    }

    #[test]
    fn psd_clamp_and_root(a in -5.0f64..5.0, b in -5.0f64..5.0, d in -5.0f64..5.0) {
        let m = Sym2::new(a, b, d);
        let c = m.psd_clamp();
        let (lo, _) = c.eigenvalues();
        prop_assert!(lo >= -1e-12);
        let r = m.psd_sqrt();
        let sq = [r.mul_vec([r.a, r.b]), r.mul_vec([r.b, r.d])];
        prop_assert!((sq[0][0] - c.a).abs() < 1e-9 * (1.0 + c.a.abs()));
        prop_assert!((sq[0][1] - c.b).abs() < 1e-9 * (1.0 + c.b.abs()));
        prop_assert!((sq[1][1] - c.d).abs() < 1e-9 * (1.0 + c.d.abs()));
    }

    #[test]
    fn erfi_is_odd_and_increasing(z in 1e-3f64..20.0) {
        let e = specialfn::erfi(z);
        prop_assert_eq!(specialfn::erfi(-z).value, -e.value);
        let up = specialfn::log_erfi(z * 1.001).unwrap();
        prop_assert!(up > e.log_value);
    }

    #[test]
    fn erfi_ratio_is_antisymmetric(a in 0.01f64..25.0, b in 0.01f64..25.0) {
        let ab = specialfn::log_erfi_ratio(a, b).unwrap();
        let ba = specialfn::log_erfi_ratio(b, a).unwrap();
        prop_assert!((ab + ba).abs() < 1e-9 * (1.0 + ab.abs()));
    }

    #[test]
    fn noise_tilts_toward_the_flat_valley(p in params(), ds in 1e-4f64..0.5, y in 0.01f64..20.0) {
        let ss = theory::p_flat_steady(&p, ds, y).unwrap();
        prop_assert!(ss.p_flat_ss > 0.0 && ss.p_flat_ss <= 1.0);
        prop_assert!(ss.p_flat_ss > ss.p_flat_eq - 1e-12);
    }

    #[test]
    fn transient_probability_is_a_probability(p in params(), ds in 1e-8f64..1.0, eps in 1e-3f64..0.5) {
        let tr = theory::p_flat_transient(&p, ds, eps).unwrap();
        prop_assert!((0.0..=1.0).contains(&tr.p_flat_tr));
        let fp = theory::freezing_point(&p, ds, eps).unwrap();
        prop_assert!(fp.y_freeze >= 0.0);
        prop_assert_eq!(fp.in_regime, fp.y_freeze.is_finite() && fp.y_freeze > 0.0);
    }

    #[test]
    fn transient_rises_with_noise(p in params(), lo in 1e-7f64..1e-2, eps in 1e-3f64..0.3) {
        let a = theory::p_flat_transient(&p, lo, eps).unwrap().p_flat_tr;
        let b = theory::p_flat_transient(&p, 2.0 * lo, eps).unwrap().p_flat_tr;
        prop_assert!(b >= a);
    }

    #[test]
    fn config_round_trips(
        p in params(),
        eta in 1e-4f64..1.0,
        sigma in 0.0f64..5.0,
        t_max in 1u64..1_000_000,
        y0 in 0.0f64..5.0,
        mode in 0usize..3,
        clamp in any::<bool>(),
        seed in any::<u64>(),
        stride in 1u64..1000,
        grid in proptest::option::of((1usize..5, 1usize..5, 1usize..20, any::<u64>())),
        eps in 1e-3f64..0.5,
        svg in any::<bool>(),
    ) {
        let cfg = RunConfig {
            landscape: p,
            dynamics: DynamicsConfig {
                eta, sigma, t_max, y0,
                init_mode: [InitMode::FlatSide, InitMode::SharpSide, InitMode::Alternating][mode],
                x_init_offset: 0.05,
                clamp_y: clamp,
                seed,
                record_stride: stride,
            },
            grid: grid.map(|(ne, ns, half_runs, base_seed)| SweepGrid {
                eta_values: (0..ne).map(|i| 1e-3 * (i + 1) as f64).collect(),
                sigma_values: (0..ns).map(|j| 0.1 / (ns - j) as f64).collect(),
                runs_per_cell: 2 * half_runs,
                base_seed,
            }),
            epsilon: eps,
            output_dir: "results/run".into(),
            formats: config::Formats { csv: true, svg },
        };
        let back = config::parse_config(&cfg.serialize()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn iterates_stay_in_the_domain_and_tags_follow_x(seed in any::<u64>(), sigma in 0.0f64..2.0) {
        let p = LandscapeParams::default();
        let cfg = DynamicsConfig { eta: 0.05, sigma, t_max: 2000, seed, ..DynamicsConfig::default() };
        let mut last_valley = None;
        let mut switches = 0u64;
        let (outcome, _) = dynamics::run_with(&p, &cfg, 0, seed, false, |_, s| {
            assert!(s.y >= 0.0);
            assert_eq!(s.valley(), Valley::of(s.x));
            if let Some(v) = last_valley {
                if v != s.valley() {
                    switches += 1;
                }
            }
            last_valley = Some(s.valley());
        })
        .unwrap();
        prop_assert_eq!(outcome.n_switches, switches);
        prop_assert_eq!(outcome.final_valley, outcome.final_state.valley());
        prop_assert_eq!(outcome.n_switches == 0, outcome.t_freeze == 0);
    }

    #[test]
    fn noiseless_descent_never_raises_the_loss(x in -0.3f64..0.3, y in 0.0f64..3.0) {
        prop_assume!(x.abs() > 1e-3);
        let p = LandscapeParams::default();
        let cfg = DynamicsConfig { eta: 0.01, sigma: 0.0, ..DynamicsConfig::default() };
        let mut rng = dynamics::rng_from_seed(0);
        let mut s = dynamics::State { x, y };
        let mut l = landscape::loss(&p, s.x, s.y).unwrap();
        for _ in 0..500 {
            s = dynamics::step(&p, &cfg, s, &mut rng).unwrap();
            let next = landscape::loss(&p, s.x, s.y).unwrap();
            prop_assert!(next <= l + 1e-12);
            l = next;
        }
    }
}
