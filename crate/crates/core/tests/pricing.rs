use ccr_core::local_time::LocalTimeQuadrature;
use ccr_core::market_model::MarketParams;
use ccr_core::pricing::{
    fair_value_report, price_bsc, price_bsd_at_zero, price_bsd_path, price_lt, AccumulatorContract,
    ForwardSpot, Method, PricingSettings,
};
use ccr_core::simulation::{simulate_paths, SimulationConfig};

// (r, K, vol, BSD, BSC)
const FAIR_VALUES: [(f64, f64, f64, f64, f64); 8] = [
    (0.01, 0.9, 0.15, 0.0961, 0.0961),
    (0.01, 0.9, 0.25, 0.0783, 0.0784),
    (0.01, 1.0, 0.15, -0.0323, -0.0322),
    (0.01, 1.0, 0.25, -0.0587, -0.0585),
    (0.02, 0.9, 0.15, 0.1008, 0.1008),
    (0.02, 0.9, 0.25, 0.0837, 0.0837),
    (0.02, 1.0, 0.15, -0.0248, -0.0247),
    (0.02, 1.0, 0.25, -0.0509, -0.0508),
];

fn unit_market(r: f64, vol: f64) -> MarketParams {
    MarketParams::risk_neutral(1.0, r, vol).unwrap()
}

#[test]
fn inception_values_reproduce_reference_table() {
    let quad = LocalTimeQuadrature::default();
    for &(r, k, vol, bsd, bsc) in &FAIR_VALUES {
        let m = unit_market(r, vol);
        let c = AccumulatorContract::new(k, 1.0, 250).unwrap();
        let v_bsd = price_bsd_at_zero(&m, &c).unwrap();
        let v_bsc = price_bsc(&m, &c, 0.0, 40).unwrap();
        let v_lt = price_lt(&m, &c, 0.0, &quad).unwrap();
        assert!((v_bsd - bsd).abs() <= 5e-5, "BSD {r} {k} {vol}: {v_bsd}");
        assert!((v_bsc - bsc).abs() <= 1e-4, "BSC {r} {k} {vol}: {v_bsc}");
        let delta = (v_lt - v_bsd) / v_bsd;
        let bound = if vol == 0.15 { 0.005 } else { 0.02 };
        assert!(delta.abs() <= bound, "LT {r} {k} {vol}: {v_lt} ({delta})");
        // accurate local-time integration coincides with the continuous route
        assert!(
            ((v_lt - v_bsc) / v_bsc).abs() < 1e-3,
            "LT vs BSC {r} {k} {vol}"
        );
    }
}

#[test]
fn gap_to_discrete_grows_with_vol() {
    let quad = LocalTimeQuadrature::default();
    for r in [0.01, 0.02] {
        let gap = |vol| {
            let m = unit_market(r, vol);
            let c = AccumulatorContract::new(1.0, 1.0, 250).unwrap();
            let bsd = price_bsd_at_zero(&m, &c).unwrap();
            ((price_lt(&m, &c, 0.0, &quad).unwrap() - bsd) / bsd).abs()
        };
        assert!(gap(0.25) > gap(0.15));
    }
}

#[test]
fn value_is_affine_in_gearing() {
    let m = unit_market(0.01, 0.2);
    let quad = LocalTimeQuadrature::default();
    let at = |g: f64| {
        let c = AccumulatorContract {
            gearing: g,
            ..AccumulatorContract::new(0.95, 1.0, 250).unwrap()
        };
        [
            price_bsd_at_zero(&m, &c).unwrap(),
            price_bsc(&m, &c, 0.3, 40).unwrap(),
            price_lt(&m, &c, 0.3, &quad).unwrap(),
        ]
    };
    let (v0, v1, v2, v5) = (at(0.0), at(1.0), at(2.0), at(5.0));
    for i in 0..3 {
        let put_leg = v0[i] - v1[i];
        assert!((v2[i] - (v0[i] - 2.0 * put_leg)).abs() < 1e-9, "method {i}");
        assert!((v5[i] - (v0[i] - 5.0 * put_leg)).abs() < 1e-9, "method {i}");
        assert!(put_leg > 0.0);
    }
}

#[test]
fn value_nonincreasing_in_strike() {
    let m = MarketParams::risk_neutral(5.7, 0.02, 0.3).unwrap();
    let quad = LocalTimeQuadrature::default();
    let strikes: Vec<f64> = (0..30).map(|i| 2.5 + 0.15 * i as f64).collect();
    let values = |f: &dyn Fn(&AccumulatorContract) -> f64| -> Vec<f64> {
        strikes
            .iter()
            .map(|&k| f(&AccumulatorContract::new(k, 1.0, 250).unwrap()))
            .collect()
    };
    for v in [
        values(&|c| price_bsd_at_zero(&m, c).unwrap()),
        values(&|c| price_bsc(&m, c, 0.0, 40).unwrap()),
        values(&|c| price_lt(&m, c, 0.0, &quad).unwrap()),
    ] {
        assert!(v.windows(2).all(|w| w[1] <= w[0]));
    }
}

#[test]
fn pathwise_values_average_to_forward_value() {
    let m = MarketParams::risk_neutral(5.7, 0.02, 0.3).unwrap();
    let c = AccumulatorContract::new(4.78, 1.0, 250).unwrap();
    let cfg = SimulationConfig {
        n_paths: 2000,
        ..Default::default()
    };
    let set = simulate_paths(&m, &cfg).unwrap();
    let v0 = price_bsd_at_zero(&m, &c).unwrap();
    for bucket in [0, 25, 125, 250] {
        let vals: Vec<f64> = set
            .paths()
            .map(|p| price_bsd_path(&m, &c, p, bucket, ForwardSpot::Path).unwrap())
            .collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let se = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
        let expected = v0 * (m.rate * c.fixing_time(bucket)).exp();
        if bucket == 0 {
            assert!((mean - v0).abs() < 1e-12);
        } else {
            assert!(
                (mean - expected).abs() < 3.0 * se,
                "bucket {bucket}: {mean} vs {expected} ± {se}"
            );
        }
    }
}

#[test]
fn local_time_route_tracks_continuous_route() {
    let quad = LocalTimeQuadrature::default();
    for k in [4.78, 3.75, 2.98] {
        for vol in [0.15, 0.2, 0.3] {
            for r in [0.01, 0.02] {
                let m = MarketParams::risk_neutral(5.7, r, vol).unwrap();
                let c = AccumulatorContract::new(k, 1.0, 250).unwrap();
                let bsc = price_bsc(&m, &c, 0.0, 40).unwrap();
                let lt = price_lt(&m, &c, 0.0, &quad).unwrap();
                assert!(
                    ((lt - bsc) / bsc).abs() <= 7e-4,
                    "({k}, {vol}, {r}): {lt} vs {bsc}"
                );
            }
        }
    }
}

#[test]
fn reports_agree_with_direct_pricing() {
    let m = unit_market(0.01, 0.15);
    let c = AccumulatorContract::new(0.9, 1.0, 250).unwrap();
    let dates = [0.0, 0.5, 1.0];
    let settings = PricingSettings::default();
    for method in Method::ALL {
        let rep = fair_value_report(method, &m, &c, &dates, &settings).unwrap();
        assert_eq!(rep.values.len(), 3);
        let direct = match method {
            Method::Bsd => price_bsd_at_zero(&m, &c).unwrap(),
            Method::Bsc => price_bsc(&m, &c, 0.0, 40).unwrap(),
            Method::Lt => price_lt(&m, &c, 0.0, &settings.quad).unwrap(),
        };
        assert!((rep.values[0] - direct).abs() < 1e-15);
        assert!((rep.values[2] / rep.values[0] - 0.01_f64.exp()).abs() < 1e-12);
    }
}
