use proptest::prelude::*;

use varpremia::black::{bs_price, OptionKind};
use varpremia::calibration::{calibrate_sequential, model_term_structure, CalibrationInput, CalibrationMode, CalibrationOptions, MarketPoint};
use varpremia::measure_map::{kurtosis_bound, omega_eigen, pricing_params, validate_premia, varswap_price, NoiseMoments, RiskPremia};
use varpremia::mle::{pooled_nll, simulate_panel, MleParams, ReturnPanel};
use varpremia::replication::{replicate_moments, OptionChain, OptionQuote};
use varpremia::{FilterSpec, FilterState, GarchSpec, NoiseModel, ReturnSeries};

fn spec() -> GarchSpec<f64> {
    GarchSpec::daily(vec![FilterSpec::symmetric(1000.0, 0.1), FilterSpec::symmetric(36.0, 0.4), FilterSpec::asymmetric(6.0, 0.5)]).unwrap()
}

fn smile_chain(scale: f64) -> OptionChain<f64> {
    let (f, t) = (100.0, 0.5);
    let quotes = (0..120)
        .map(|j| {
            let k = f * (-1.2 + 2.4 * j as f64 / 119.0_f64).exp();
            // a skewed smile so every moment is nontrivial
            let vol = 0.2 - 0.1 * (k / f).ln();
            let kind = if k < f { OptionKind::Put } else { OptionKind::Call };
            OptionQuote::new(scale * k, kind, scale * bs_price(f, k, t, vol, kind).unwrap())
        })
        .collect();
    OptionChain::new(t, scale * f, 0.01, quotes).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn valid_premia_give_a_psd_correlation_matrix(l2 in -0.5f64..1.0, l3 in -1.0f64..1.0, l4 in -1.0f64..5.0) {
        let mom = NoiseMoments::gaussian();
        let p = RiskPremia::new(l2, l3, l4);
        prop_assume!(validate_premia(&spec(), &p, &mom).is_ok());
        let params = pricing_params(&spec(), &p, &mom).unwrap();
        let min = params.correlation_matrix().symmetric_eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        prop_assert!(min >= -1e-10, "min eigenvalue {}", min);
    }

    #[test]
    fn premia_above_the_bound_validate(l2 in -0.4f64..1.0, l3 in -1.0f64..1.0, u in 1e-6f64..5.0) {
        let mom = NoiseMoments::gaussian();
        let b = kurtosis_bound(l2, l3, &mom, &spec()).unwrap();
        let p = RiskPremia::new(l2, l3, b + u);
        // the spot correlations have their own limits
        let spot_ok = (l3 * l3) < (1.0 + l2) * (2.0 + b + u) && 4.0 * (mom.m3_minus - l3).powi(2) < (1.0 + l2) * (5.0 + 4.0 * (b + u));
        prop_assume!(spot_ok);
        prop_assert!(validate_premia(&spec(), &p, &mom).is_ok());
        prop_assert!(validate_premia(&spec(), &RiskPremia::new(l2, l3, b - u), &mom).is_err());
    }

    #[test]
    fn replication_is_homogeneous(scale in 0.01f64..100.0) {
        let a = replicate_moments(&smile_chain(1.0)).unwrap();
        let b = replicate_moments(&smile_chain(scale)).unwrap();
        for (x, y) in [(a.m1, b.m1), (a.m2, b.m2), (a.m3, b.m3)] {
            prop_assert!((x - y).abs() <= 1e-10 * x.abs().max(1e-6), "{} vs {}", x, y);
        }
    }

    #[test]
    fn single_precision_tracks_double(x1 in 0.01f64..0.2, x2 in 0.01f64..0.2, x3 in 0.01f64..0.2, t in 0.05f64..2.0) {
        let p = RiskPremia::new(0.0, 0.2, 1.0);
        let s64 = spec();
        let st64 = FilterState::from_filters(vec![x1, x2, x3], &s64, None).unwrap();
        let v64 = varswap_price(&st64, &omega_eigen(&s64, &p).unwrap(), &p, t).unwrap();

        let s32: GarchSpec<f32> = GarchSpec::daily(s64.filters().iter().map(|f| FilterSpec::new(f.length_days as f32, f.weight as f32, f.kind)).collect()).unwrap();
        let p32 = RiskPremia::new(0.0f32, 0.2, 1.0);
        let st32 = FilterState::from_filters(vec![x1 as f32, x2 as f32, x3 as f32], &s32, None).unwrap();
        let v32 = varswap_price(&st32, &omega_eigen(&s32, &p32).unwrap(), &p32, t as f32).unwrap();
        prop_assert!(((v32 as f64) - v64).abs() <= 1e-4 * v64, "{} vs {}", v32, v64);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn fitted_kurtosis_premium_respects_the_bound(l2 in 0.0f64..0.15, l3 in -0.3f64..0.6, noise in -0.5f64..0.5) {
        let spec = GarchSpec::daily(vec![FilterSpec::symmetric(1000.0, 0.4), FilterSpec::symmetric(36.0, 0.3), FilterSpec::asymmetric(6.0, 0.3)]).unwrap();
        let mom = NoiseMoments::gaussian();
        let state = FilterState::flat(0.04, &spec).unwrap();
        let truth = RiskPremia::new(l2, l3, kurtosis_bound(l2, l3, &mom, &spec).unwrap() + 1.0);
        let expiries = [0.1, 0.25, 0.5, 1.0];
        let mut triples = model_term_structure(&spec, &state, &mom, &truth, &expiries).unwrap();
        // distort the kurtosis so the unconstrained optimum may fall below the bound
        for t in &mut triples {
            t.kurt_m *= 1.0 + noise;
        }
        let market = expiries.iter().zip(&triples).map(|(&e, &m)| MarketPoint::new(e, m)).collect();
        let input = CalibrationInput::new(spec.clone(), state, mom, market).unwrap();
        let r = calibrate_sequential(&input, CalibrationMode::FitAll, &CalibrationOptions::default()).unwrap();
        let bound = kurtosis_bound(r.premia.lambda2, r.premia.lambda3, &mom, &spec).unwrap();
        prop_assert!(r.premia.lambda4 >= bound - 1e-12);
    }

    #[test]
    fn pooled_nll_ignores_series_order(seed in 0u64..1000, rot in 1usize..4) {
        let truth = MleParams::two_plus_one();
        let panel = simulate_panel(&truth, &NoiseModel::Gaussian, 4, 300, 50, seed).unwrap();
        let named = |order: Vec<usize>| {
            ReturnPanel::new(
                order.into_iter().map(|i| (format!("s{i}"), ReturnSeries::from_returns(panel.series()[i].clone()).unwrap())).collect(),
            )
            .unwrap()
        };
        let a = named(vec![0, 1, 2, 3]);
        let mut order = vec![0, 1, 2, 3];
        order.rotate_left(rot);
        let b = named(order);
        let (x, y) = (pooled_nll(&truth, &a, &NoiseModel::Gaussian), pooled_nll(&truth, &b, &NoiseModel::Gaussian));
        prop_assert!((x - y).abs() <= 1e-12 * x.abs());
    }
}

#[test]
fn domain_types_round_trip_through_json() {
    let s = spec();
    let back: GarchSpec<f64> = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
    assert_eq!(back, s);
    let st = FilterState::from_filters(vec![0.03, 0.05, 0.08], &s, None).unwrap();
    let back: FilterState<f64> = serde_json::from_str(&serde_json::to_string(&st).unwrap()).unwrap();
    assert_eq!(back, st);
    let p = RiskPremia::new(0.1, 0.2, 0.3);
    let back: RiskPremia<f64> = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
    assert_eq!(back, p);
    let n = NoiseModel::StudentT { dof: 7.0 };
    let back: NoiseModel = serde_json::from_str(&serde_json::to_string(&n).unwrap()).unwrap();
    assert_eq!(back, n);
}

#[test]
fn prices_and_returns_files_agree() {
    let prices = "date,close\n2024-01-02,100\n2024-01-03,101\n2024-01-04,99.5\n# holiday gap\n2024-01-08,100.2\n";
    let from_prices = varpremia::io::read_returns_from("p", prices.as_bytes()).unwrap().value;
    let rets: Vec<f64> = [101.0f64 / 100.0, 99.5 / 101.0, 100.2 / 99.5].iter().map(|r| r - 1.0).collect();
    let text = format!("date,return\n2024-01-03,{}\n2024-01-04,{}\n2024-01-08,{}\n", rets[0], rets[1], rets[2]);
    let from_returns = varpremia::io::read_returns_from("r", text.as_bytes()).unwrap().value;
    assert_eq!(from_prices.dates(), from_returns.dates());
    for (a, b) in from_prices.returns().iter().zip(from_returns.returns()) {
        assert!((a - b).abs() < 1e-12);
    }
}
