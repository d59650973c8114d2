//! Randomized invariants.

use std::sync::{Arc, OnceLock};

use ampctl::config::{self, SimConfig};
use ampctl::control::{coefficients_to_poles, is_schur_stable, poles_to_coefficients, Complex};
use ampctl::dictionary::{build_dictionary, Dictionary, PERIOD};
use ampctl::identifier::{AmpIdentifier, Regressor, RegressorConfig, Safeguard};
use ampctl::matching_pursuit::{decompose, reconstruct, SampledDictionary};
use ampctl::plants::{f1_eval, ParamSchedule};
use ampctl::simulation::TraceRow;
use ampctl::trace::{read_trace, write_trace};
use proptest::prelude::*;

fn dictionary() -> Arc<Dictionary> {
    static DICT: OnceLock<Arc<Dictionary>> = OnceLock::new();
    DICT.get_or_init(|| {
        let c = SimConfig::example1();
        Arc::new(build_dictionary(&c.dictionary, c.regressor.dim()).unwrap())
    })
    .clone()
}

fn sampled() -> &'static SampledDictionary {
    static SAMPLED: OnceLock<SampledDictionary> = OnceLock::new();
    SAMPLED.get_or_init(|| dictionary().to_sampled(128).unwrap())
}

fn finite() -> impl Strategy<Value = f64> {
    -1e3..1e3f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn mp_energy_and_monotone_residual(f in prop::collection::vec(-5.0..5.0f64, 128), iters in 1usize..40) {
        let res = decompose(&f, sampled(), iters, 0.0).unwrap();
        let ff: f64 = f.iter().map(|v| v * v).sum();
        let cc: f64 = res.picks.iter().map(|(_, c)| c * c).sum();
        let rr: f64 = res.residual.iter().map(|v| v * v).sum();
        prop_assert!((ff - cc - rr).abs() <= 1e-10 * ff.max(1e-300));
        prop_assert!(res.residual_norms.windows(2).all(|w| w[1] <= w[0]));
        // f = reconstruction + residual
        let approx = reconstruct(&res, sampled()).unwrap();
        for ((a, r), v) in approx.iter().zip(&res.residual).zip(&f) {
            prop_assert!((a + r - v).abs() <= 1e-9 * (1.0 + v.abs()));
        }
    }

    #[test]
    fn update_changes_one_coefficient_and_interpolates(
        steps in prop::collection::vec((prop::array::uniform3(-6.0..6.0f64), -10.0..10.0f64), 1..60),
        skip in any::<bool>(),
    ) {
        let safeguard = if skip { Safeguard::Skip } else { Safeguard::Clamp };
        let mut id = AmpIdentifier::new(dictionary(), RegressorConfig::new(2, 1).unwrap(), 1e-2, safeguard).unwrap();
        for (reg, y) in steps {
            let reg = Regressor::from_values(reg.to_vec());
            let before = id.theta().to_vec();
            let rec = id.update(&reg, y).unwrap();
            let changed = before.iter().zip(id.theta()).filter(|(a, b)| a != b).count();
            prop_assert!(changed <= 1);
            if !rec.applied {
                prop_assert_eq!(changed, 0);
            }
            if rec.applied && rec.correlation.abs() >= 1e-2 {
                let pred = id.predict(&reg).unwrap();
                prop_assert!((pred - y).abs() <= 1e-12 * y.abs().max(1.0), "{} vs {}", pred, y);
            }
        }
    }

    #[test]
    fn atoms_are_periodic(x in -1e4..1e4f64, periods in -20i32..20) {
        let dict = dictionary();
        let shifted = x + f64::from(periods) * PERIOD;
        prop_assert_eq!(dict.evaluate_at(x), dict.evaluate_at(shifted));
    }

    #[test]
    fn evaluate_all_is_finite(reg in prop::array::uniform3(finite())) {
        prop_assert!(dictionary().evaluate_all(&reg).unwrap().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn ramp_schedule_is_monotone_and_bounded(t1 in -10.0..60.0f64, t2 in -10.0..60.0f64) {
        let s = ParamSchedule::example1();
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        prop_assert!(s.value(lo) <= s.value(hi));
        prop_assert!((1.0..=1.2).contains(&s.value(t1)));
    }

    #[test]
    fn step_schedule_takes_two_values(t in 0.0..50.0f64) {
        let v = ParamSchedule::example2().value(t);
        prop_assert_eq!(v, if t < 25.0 { 1.0 } else { 3.0 });
    }

    #[test]
    fn f1_is_bounded(y1 in finite(), y2 in finite(), u1 in finite(), a in 0.5..3.0f64) {
        // 2.5|y1|/(1+y1^2) <= 1.25 and |u1 y2| <= (u1^2+y2^2)/2
        let bound = 1.25 + a * y1.abs() / 2.0;
        prop_assert!(f1_eval(y1, y2, u1, a).abs() <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn pole_coefficient_round_trip(
        real in prop::collection::vec(-0.95..0.95f64, 0..3),
        pairs in prop::collection::vec((0.0..0.9f64, 0.05..std::f64::consts::PI), 0..2),
    ) {
        let mut poles: Vec<Complex<f64>> = real.iter().map(|&r| Complex::new(r, 0.0)).collect();
        for (r, th) in pairs {
            poles.push(Complex::from_polar(r, th));
            poles.push(Complex::from_polar(r, -th));
        }
        prop_assume!(!poles.is_empty());
        let s = poles_to_coefficients(&poles).unwrap();
        prop_assert_eq!(s.len(), poles.len());
        prop_assert!(is_schur_stable(&s));
        let again = poles_to_coefficients(&coefficients_to_poles(&s)).unwrap();
        for (a, b) in s.iter().zip(&again) {
            prop_assert!((a - b).abs() <= 1e-9, "{:?} vs {:?}", s, again);
        }
    }

    #[test]
    fn trace_csv_round_trips(rows in prop::collection::vec(
        (prop::array::uniform9(any::<f64>().prop_filter("finite", |v| v.is_finite())), prop::option::of(0usize..64), any::<bool>()),
        0..20,
    )) {
        let trace: Vec<TraceRow> = rows
            .into_iter()
            .enumerate()
            .map(|(k, (v, sel, applied))| TraceRow {
                k, t: v[0], r: v[1], ym: v[2], y: v[3], u: v[4], f_true: v[5], f_hat: v[6],
                eta: v[7], e: v[8], selected_index: sel, a: 1.0, applied,
            })
            .collect();
        let mut buf = Vec::new();
        write_trace(&mut buf, &trace).unwrap();
        prop_assert_eq!(read_trace(buf.as_slice()).unwrap(), trace);
    }

    #[test]
    fn overrides_land_on_their_key(std in 0.0..1.0f64, seed in any::<u64>(), eps in 1e-4..1.0f64) {
        let overrides = vec![
            ("noise.std".to_string(), serde_json::json!(std)),
            ("noise.seed".to_string(), serde_json::json!(seed)),
            ("identifier.epsilon".to_string(), serde_json::json!(eps)),
        ];
        let cfg = config::resolve(Some(SimConfig::example2()), None, &overrides).unwrap();
        prop_assert_eq!(cfg.noise.std, std);
        prop_assert_eq!(cfg.noise.seed, seed);
        prop_assert_eq!(cfg.identifier.epsilon, eps);
        prop_assert_eq!(cfg.dictionary, SimConfig::example2().dictionary);
    }
}
