use optmean::order_stats::{moments_quadrature, NormalParams, OrderStatMoments};
use optmean::weights::{
    approx_weight, fit_power_law, mse_s1, mse_s2, mse_s3, optimal_weights, WeightSet,
};
use optmean::{Error, Scenario};
use proptest::prelude::*;

fn grid(hi: usize) -> Vec<usize> {
    (5..=hi).step_by(4).collect()
}

fn exact(n: usize, s: Scenario) -> WeightSet {
    optimal_weights(s, &moments_quadrature(n).unwrap()).unwrap()
}

#[test]
fn s1_weight_strictly_decreases() {
    let ws: Vec<f64> = grid(501).into_iter().map(|n| exact(n, Scenario::S1).mid_range).collect();
    assert!(ws.windows(2).all(|w| w[1] < w[0]));
    assert!(ws.iter().all(|&w| w > 0.0 && w < 1.0));
}

#[test]
fn s3_weights_trend() {
    let ws: Vec<WeightSet> = grid(501).into_iter().map(|n| exact(n, Scenario::S3)).collect();
    assert!(ws.windows(2).all(|w| w[1].mid_range < w[0].mid_range));
    assert!(ws.windows(2).all(|w| w[1].mid_quartile > w[0].mid_quartile));
    let last = ws.last().unwrap();
    assert!(last.mid_range < 0.03);
    assert!((0.68..=0.7).contains(&last.mid_quartile), "{last:?}");
}

#[test]
fn approximations_track_exact_weights() {
    let (mut e1, mut e2, mut e3a, mut e3b) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for n in grid(101) {
        let m = moments_quadrature(n).unwrap();
        let d = |s| {
            let (x, a) = (optimal_weights(s, &m).unwrap(), approx_weight(s, n).unwrap());
            ((x.mid_range - a.mid_range).abs(), (x.mid_quartile - a.mid_quartile).abs())
        };
        e1 = e1.max(d(Scenario::S1).0);
        e2 = e2.max(d(Scenario::S2).1);
        let (a, b) = d(Scenario::S3);
        e3a = e3a.max(a);
        e3b = e3b.max(b);
    }
    assert!(e1 <= 0.02 && e2 <= 0.02, "{e1} {e2}");
    assert!(e3a <= 0.03 && e3b <= 0.03, "{e3a} {e3b}");
}

#[test]
fn minimizer_beats_grid() {
    for n in [5, 25, 101] {
        let m = moments_quadrature(n).unwrap();
        let agg = m.aggregates();
        let w1 = optimal_weights(Scenario::S1, &m).unwrap().mid_range;
        let w2 = optimal_weights(Scenario::S2, &m).unwrap().mid_quartile;
        let w3 = optimal_weights(Scenario::S3, &m).unwrap();
        let best3 = mse_s3(&agg, w3.mid_range, w3.mid_quartile);
        for i in 0..=100 {
            let u = i as f64 / 100.0;
            assert!(mse_s1(&agg, w1) <= mse_s1(&agg, u));
            assert!(mse_s2(&agg, w2) <= mse_s2(&agg, u));
            for j in 0..=(100 - i) {
                assert!(best3 <= mse_s3(&agg, u, j as f64 / 100.0));
            }
        }
    }
}

fn same_weights(a: &OrderStatMoments, b: &OrderStatMoments, tol: f64) {
    for s in Scenario::ALL {
        let (x, y) = (optimal_weights(s, a).unwrap(), optimal_weights(s, b).unwrap());
        assert!((x.mid_range - y.mid_range).abs() <= tol, "{s}: {x:?} {y:?}");
        assert!((x.mid_quartile - y.mid_quartile).abs() <= tol, "{s}: {x:?} {y:?}");
    }
}

#[test]
fn weights_ignore_location_and_scale() {
    let m = moments_quadrature(41).unwrap();
    // Power-of-two scale without shift is exact in floating point.
    same_weights(&m, &m.location_scale(NormalParams::new(0.0, 8.0).unwrap()), 0.0);
    same_weights(&m, &m.location_scale(NormalParams::new(50.0, 17.0).unwrap()), 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn weights_ignore_arbitrary_location_and_scale(mu in -100.0f64..100.0, sigma in 0.01f64..100.0) {
        let m = moments_quadrature(21).unwrap();
        same_weights(&m, &m.location_scale(NormalParams::new(mu, sigma).unwrap()), 1e-8);
    }

    #[test]
    fn approx_weights_are_feasible(n in 5usize..100_000) {
        for s in Scenario::ALL {
            let w = approx_weight(s, n).unwrap();
            prop_assert!((0.0..=1.0).contains(&w.median()));
        }
    }
}

#[test]
fn refits_on_exact_grid() {
    let ns = grid(101);
    let table = |s| ns.iter().map(|&n| exact(n, s)).collect::<Vec<_>>();
    let f1 = fit_power_law(&table(Scenario::S1), Scenario::S1).unwrap();
    assert!((f1.c1 - 4.0).abs() <= 0.5 && (f1.c2 + 0.75).abs() <= 0.05, "{f1:?}");
    let f2 = fit_power_law(&table(Scenario::S2), Scenario::S2).unwrap();
    assert!((f2.c1 - 0.39).abs() <= 0.05 && (f2.c2 + 1.0).abs() <= 0.1, "{f2:?}");
    let f3 = fit_power_law(&table(Scenario::S3), Scenario::S3).unwrap();
    let rel = |x: f64, t: f64| ((x - t) / t).abs() <= 0.15;
    assert!(rel(f3.c1, 2.2) && rel(f3.c2, 0.75), "{f3:?}");
    assert!(rel(f3.c3.unwrap(), 0.72) && rel(f3.c4.unwrap(), 0.55), "{f3:?}");
    for f in [&f1, &f2, &f3] {
        assert!(f.residual >= 0.0);
        for &n in &ns {
            let (a, b) = f.evaluate(n as f64);
            assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
        }
    }
}

#[test]
fn exact_weights_need_4q_plus_1() {
    assert!(matches!(moments_quadrature(40), Err(Error::ScenarioShape(_))));
    assert!(approx_weight(Scenario::S1, 40).is_ok());
}
