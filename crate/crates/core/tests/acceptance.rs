//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line; the
//! process exits nonzero if any fails.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use varpremia::bg_expansion::{atm_skew, bg_coefficients, bg_integrals, model_moments, psi};
use varpremia::black::{bs_price, OptionKind};
use varpremia::calibration::{calibrate_sequential, CalibrationInput, CalibrationMode, CalibrationOptions, MarketPoint};
use varpremia::mc_pricer::{mc_option_chain, realworld_drift_check, simulate_pricing, simulate_with_params, DriftConfig, McConfig};
use varpremia::measure_map::{
    garch11_varswap, kurtosis_bound, omega_eigen, pricing_params, varswap_price, ForwardCurve, Garch11, NoiseMoments, RiskPremia,
};
use varpremia::mle::{fit_garch, simulate_panel, MleBounds, MleOptions, MleParams};
use varpremia::replication::{market_moment_triple, replicate_moments, OptionChain, OptionQuote};
use varpremia::{FilterKind, FilterSpec, FilterState, GarchSpec, ImpliedMomentTriple, NoiseModel};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn gauss() -> NoiseMoments<f64> {
    NoiseMoments::gaussian()
}

fn mixed_spec() -> GarchSpec<f64> {
    GarchSpec::daily(vec![
        FilterSpec::symmetric(1000.0, 0.1),
        FilterSpec::symmetric(36.0, 0.4),
        FilterSpec::asymmetric(6.0, 0.5),
    ])
    .unwrap()
}

/// Expected `Σ ν_k δt` over `τ/δt` days from the one-day conditional-expectation recursion.
fn discrete_varswap(x0: f64, m: &Garch11<f64>, lambda2: f64, tau: f64) -> f64 {
    let n = (tau / m.dt_years).round() as usize;
    let mut x = x0;
    let mut v = 0.0;
    for _ in 0..n {
        let nu = m.variance(x);
        v += nu * m.dt_years;
        x += ((1.0 + lambda2) * nu - x) / m.length_days;
    }
    v
}

fn criterion_1() -> Outcome {
    let m = Garch11::new(0.04, 0.5, 36.0).unwrap();
    let x0 = 0.09;
    let mut worst_ratio: f64 = 0.0;
    let mut ok = true;
    for tau in [0.1, 0.5, 1.0] {
        let exact = garch11_varswap(x0, &m, &RiskPremia::zero(), tau).unwrap();
        let brute = discrete_varswap(x0, &m, 0.0, tau);
        let rel = (exact - brute).abs() / brute;
        let tol = 2.0 * m.dt_years / tau;
        ok &= rel <= tol;
        worst_ratio = worst_ratio.max(rel / tol);
    }

    let premia = RiskPremia::new(0.3, 0.0, 0.0);
    let tau = 0.5;
    let spec = m.as_spec().unwrap();
    let state = FilterState::from_filters(vec![0.04, x0], &spec, None).unwrap();
    let cfg = McConfig { steps_per_day: 8, ..McConfig::new(100_000, 31) };
    let ens = simulate_pricing(&spec, &premia, &state, &gauss(), &[tau], &cfg).unwrap();
    let (mc, se) = ens.mean_with_error(|p| ens.realized[0][p]);
    let exact = garch11_varswap(x0, &m, &premia, tau).unwrap();
    let z = (mc - exact) / se;
    ok &= z.abs() < 3.0;
    outcome(
        ok,
        format!("discrete recursion: worst rel err / (2δt/τ) = {worst_ratio:.3}; MC λ₂=0.3: {mc:.6} ± {se:.6} vs {exact:.6} (z = {z:.2})"),
    )
}

fn random_spec(rng: &mut ChaCha8Rng) -> GarchSpec<f64> {
    let n = rng.random_range(1..=3);
    let mut w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total = w.iter().sum::<f64>();
    w.iter_mut().for_each(|x| *x /= total);
    let filters = w
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let l = rng.random_range(2.0..500.0);
            if i == n - 1 && n > 1 { FilterSpec::asymmetric(l, a) } else { FilterSpec::symmetric(l, a) }
        })
        .collect();
    GarchSpec::daily(filters).unwrap()
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mom = gauss();
    let mut worst: f64 = 0.0;
    let mut sets = 0;
    while sets < 1000 {
        let spec = random_spec(&mut rng);
        let l2 = rng.random_range(-0.3..0.3);
        let l3 = rng.random_range(-1.0..1.0);
        let Ok(bound) = kurtosis_bound(l2, l3, &mom, &spec) else { continue };
        let premia = RiskPremia::new(l2, l3, bound + rng.random_range(0.0..3.0));
        let Ok(params) = pricing_params(&spec, &premia, &mom) else { continue };
        let Ok(eig) = omega_eigen(&spec, &premia) else { continue };
        let x: Vec<f64> = (0..spec.len()).map(|_| rng.random_range(0.01..0.2)).collect();
        let state = FilterState::from_filters(x, &spec, None).unwrap();
        let Ok(curve) = ForwardCurve::new(&state, &eig, &premia) else { continue };
        let t = rng.random_range(0.02..3.0);
        let Ok(ints) = bg_integrals(&curve, t) else { continue };
        let c = bg_coefficients(&eig, &params, &ints).unwrap();
        let scale = c.v.abs() + c.cxf.abs() + c.cff.abs() + c.cmu.abs();
        worst = worst.max(psi(0.0, &c).abs() / scale).max(psi(1.0, &c).abs() / scale);
        sets += 1;
    }
    outcome(worst <= 4.0 * f64::EPSILON, format!("{sets} coefficient sets, max |ψ(0)|, |ψ(1)| relative to coefficient scale = {worst:e}"))
}

/// `ρ̄₊₋` and the spot correlations straight from the noise moments and premia.
fn residual_correlation(p: &RiskPremia<f64>, m4: f64, m3: f64) -> Option<f64> {
    let mu = 1.0 + p.lambda2;
    let a = m4 - 1.0 + p.lambda4;
    let b = 2.0 * m4 - 1.0 + 4.0 * p.lambda4;
    if a <= 0.0 || b <= 0.0 {
        return None;
    }
    let rp = -p.lambda3 / (mu * a).sqrt();
    let rm = 2.0 * (m3 - p.lambda3) / (mu * b).sqrt();
    if rp.abs() >= 1.0 || rm.abs() >= 1.0 {
        return None;
    }
    let rpm = (m4 - 1.0 + 2.0 * p.lambda4) / (a * b).sqrt();
    Some((rpm - rp * rm) / ((1.0 - rp * rp) * (1.0 - rm * rm)).sqrt())
}

fn criterion_3() -> Outcome {
    let spec = mixed_spec();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut disagreements = 0;
    let mut undefined = 0;
    let (mut above, mut below) = (0, 0);
    let draws = 10_000;
    for i in 0..draws {
        let noise = if i % 2 == 0 { NoiseModel::Gaussian } else { NoiseModel::StudentT { dof: rng.random_range(5.0..30.0) } };
        let mom = varpremia::measure_map::noise_moments(&noise).unwrap();
        let l2 = rng.random_range(-0.4..1.0);
        let l3 = rng.random_range(-1.5..1.5);
        let Ok(bound) = kurtosis_bound(l2, l3, &mom, &spec) else {
            undefined += 1;
            continue;
        };
        // straddle the bound so both sides are well sampled
        let l4 = bound + rng.random_range(-3.0..3.0);
        let Some(rho) = residual_correlation(&RiskPremia::new(l2, l3, l4), mom.m4, mom.m3_minus) else {
            undefined += 1;
            continue;
        };
        if (l4 - bound).abs() <= 1e-9 || (rho.abs() - 1.0).abs() <= 1e-9 {
            continue;
        }
        if l4 >= bound { above += 1 } else { below += 1 }
        if (l4 >= bound) != (rho.abs() <= 1.0) {
            disagreements += 1;
        }
    }
    outcome(
        disagreements == 0 && above > 1000 && below > 1000,
        format!("{disagreements} disagreements in {draws} draws ({above} above, {below} below the bound, {undefined} without a bound or with undefined spot correlations)"),
    )
}

fn mc_triple(ens: &varpremia::PathEnsemble<f64>, k: usize, t: f64) -> ImpliedMomentTriple<f64> {
    let chain = mc_option_chain(ens, k, 4000).unwrap();
    market_moment_triple(&replicate_moments(&chain).unwrap(), t).unwrap()
}

fn criterion_4() -> Outcome {
    let spec = mixed_spec();
    let mom = gauss();
    let state = FilterState::flat(0.04, &spec).unwrap();
    let (l2, l3, t) = (0.1, 0.2, 0.25);
    let premia = RiskPremia::new(l2, l3, kurtosis_bound(l2, l3, &mom, &spec).unwrap() + 0.5);
    let base = pricing_params(&spec, &premia, &mom).unwrap();
    let eig = omega_eigen(&spec, &premia).unwrap();
    let ints = bg_integrals(&ForwardCurve::new(&state, &eig, &premia).unwrap(), t).unwrap();
    let cfg = McConfig::new(200_000, 17);
    let run = |s: f64| {
        let p = base.with_vol_of_vol_scale(s);
        let ens = simulate_with_params(&p, &state, &[t], spec.dt_years(), &cfg).unwrap();
        let bg = model_moments(&bg_coefficients(&eig, &p, &ints).unwrap(), t).unwrap();
        (mc_triple(&ens, 0, t), bg)
    };
    // zero vol-of-vol: the same random numbers, and a model both methods know exactly
    let (mc0, bg0) = run(0.0);
    let scales = [1.0, 0.5, 0.25];
    let mut errs = Vec::new();
    for s in scales {
        let (mc, bg) = run(s);
        let d = [
            (mc.vswap_vol - mc0.vswap_vol) - (bg.vswap_vol - bg0.vswap_vol),
            (mc.skew_m - mc0.skew_m) - (bg.skew_m - bg0.skew_m),
            (mc.kurt_m - mc0.kurt_m) - (bg.kurt_m - bg0.kurt_m),
        ];
        errs.push(d.iter().map(|x| x * x).sum::<f64>().sqrt());
    }
    let xs: Vec<f64> = scales.iter().map(|s: &f64| s.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 3.0, ys.iter().sum::<f64>() / 3.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    outcome(slope >= 2.5, format!("triple error at s = 1, ½, ¼: {:.2e}, {:.2e}, {:.2e}; log-log slope {slope:.2}", errs[0], errs[1], errs[2]))
}

fn bs_chain(sigma: f64, t: f64, n: usize) -> OptionChain<f64> {
    let f = 100.0;
    let sd = sigma * t.sqrt();
    let quotes = (0..n)
        .map(|j| {
            let k = f * (-6.0 * sd + 12.0 * sd * j as f64 / (n - 1) as f64).exp();
            let kind = if k < f { OptionKind::Put } else { OptionKind::Call };
            OptionQuote::new(k, kind, bs_price(f, k, t, sigma, kind).unwrap())
        })
        .collect();
    OptionChain::new(t, f, 0.0, quotes).unwrap()
}

fn criterion_5() -> Outcome {
    let (sigma, t) = (0.2, 0.25);
    let triple = |n| market_moment_triple(&replicate_moments(&bs_chain(sigma, t, n)).unwrap(), t).unwrap();
    let at200 = triple(200);
    let skews: Vec<f64> = [50, 100, 200, 400, 800].iter().map(|&n| triple(n).skew_m.abs()).collect();
    let shrinking = skews.windows(2).all(|w| w[1] < w[0]);
    let vol_ok = (at200.vswap_vol - sigma).abs() <= 5e-4;
    outcome(
        vol_ok && shrinking && skews[4] < skews[0] / 10.0,
        format!("vswap vol {:.6}; |skew| at 50..800 strikes: {:?}", at200.vswap_vol, skews.iter().map(|s| format!("{s:.1e}")).collect::<Vec<_>>()),
    )
}

fn criterion_6() -> Outcome {
    // a spec whose pricing dynamics remain stationary at λ₂ = 0.3
    let spec = GarchSpec::daily(vec![
        FilterSpec::symmetric(1000.0, 0.4),
        FilterSpec::symmetric(36.0, 0.3),
        FilterSpec::asymmetric(6.0, 0.3),
    ])
    .unwrap();
    let mom = gauss();
    let state = FilterState::flat(0.04, &spec).unwrap();
    let (l2, l3) = (0.3, 0.5);
    let truth = RiskPremia::new(l2, l3, kurtosis_bound(l2, l3, &mom, &spec).unwrap());
    let expiries = [0.1, 0.25, 0.5, 1.0];
    let ens = simulate_pricing(&spec, &truth, &state, &mom, &expiries, &McConfig::new(200_000, 99)).unwrap();
    let market = expiries.iter().enumerate().map(|(k, &t)| MarketPoint::new(t, mc_triple(&ens, k, t))).collect();
    let input = CalibrationInput::new(spec, state, mom, market).unwrap();
    let r = calibrate_sequential(&input, CalibrationMode::SaturateKurtosis, &CalibrationOptions::default()).unwrap();
    let (e2, e3) = (r.premia.lambda2 - l2, r.premia.lambda3 - l3);
    outcome(
        e2.abs() <= 0.05 && e3.abs() <= 0.05 && r.bound_saturated,
        format!("recovered (λ₂, λ₃) = ({:.4}, {:.4}) from ({l2}, {l3}); λ₄ on the bound: {}", r.premia.lambda2, r.premia.lambda3, r.bound_saturated),
    )
}

fn criterion_7() -> Outcome {
    let m = Garch11::new(0.04, 0.5, 36.0).unwrap();
    let cfg = DriftConfig::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for l2 in [0.0, 0.3] {
        let r = realworld_drift_check(&m, &RiskPremia::new(l2, 0.0, 0.0), NoiseModel::Gaussian, &cfg).unwrap();
        ok &= r.z_score.abs() < 3.0 && r.path_days >= 1_000_000;
        parts.push(format!("λ₂={l2}: measured {:.3e} vs predicted {:.3e}, z = {:.2}, {} path-days", r.measured, r.predicted, r.z_score, r.path_days));
    }
    outcome(ok, parts.join("; "))
}

fn criterion_8() -> Outcome {
    let spec = mixed_spec();
    let mom = gauss();
    let expiries = [1.0 / 12.0, 0.25, 0.5, 1.0, 2.0];
    let mut ok = true;
    let mut notes = Vec::new();

    // variance swaps, from a state below and above the pricing level
    for level in [0.02, 0.04, 0.09] {
        let state = FilterState::flat(level, &spec).unwrap();
        let vols = |l2: f64| -> Vec<f64> {
            let p = RiskPremia::new(l2, 0.0, 0.0);
            let eig = omega_eigen(&spec, &p).unwrap();
            expiries.iter().map(|&t| (varswap_price(&state, &eig, &p, t).unwrap() / t).sqrt()).collect()
        };
        let (v0, v1) = (vols(0.0), vols(0.05));
        let higher = v0.iter().zip(&v1).all(|(a, b)| b > a);
        let slope = |v: &[f64]| v[v.len() - 1] - v[0];
        let slope_changed = (slope(&v1) - slope(&v0)).abs() > 1e-3;
        ok &= higher && slope_changed;
        notes.push(format!("ν={level}: vols 1M/2Y {:.4}/{:.4} → {:.4}/{:.4}", v0[0], v0[4], v1[0], v1[4]));
    }

    // ATM skew, λ₄ comfortably above both bounds
    let state = FilterState::flat(0.04, &spec).unwrap();
    let skews = |l3: f64| -> Vec<f64> {
        let p = RiskPremia::new(0.1, l3, 3.0);
        let params = pricing_params(&spec, &p, &mom).unwrap();
        let eig = omega_eigen(&spec, &p).unwrap();
        let curve = ForwardCurve::new(&state, &eig, &p).unwrap();
        expiries
            .iter()
            .map(|&t| atm_skew(&bg_coefficients(&eig, &params, &bg_integrals(&curve, t).unwrap()).unwrap(), t).unwrap())
            .collect()
    };
    let (s0, s1) = (skews(0.0), skews(0.3));
    let steeper = s0.iter().zip(&s1).all(|(a, b)| b < a && *b < 0.0);
    ok &= steeper;
    notes.push(format!("ATM skew at 1M: {:.4} (λ₃=0) vs {:.4} (λ₃=0.3)", s0[0], s1[0]));

    // the same skew effect on simulated smiles
    let mc_skew = |l3: f64| {
        let p = RiskPremia::new(0.1, l3, 3.0);
        let ens = simulate_pricing(&spec, &p, &state, &mom, &[0.25], &McConfig::new(100_000, 8)).unwrap();
        mc_triple(&ens, 0, 0.25).skew_m
    };
    let (m0, m1) = (mc_skew(0.0), mc_skew(0.3));
    ok &= m1 < m0;
    notes.push(format!("MC 3M skew moment {m0:.4} → {m1:.4}"));
    outcome(ok, notes.join("; "))
}

fn criterion_9() -> Outcome {
    let truth = MleParams::two_plus_one();
    let panel = simulate_panel(&truth, &NoiseModel::Gaussian, 28, 5000, 500, 1).unwrap();
    let init = MleParams::new(vec![FilterSpec::symmetric(60.0, 0.3), FilterSpec::asymmetric(10.0, 0.3)]).unwrap();
    let fit = fit_garch(&panel, &NoiseModel::Gaussian, &init, &MleBounds::default(), &MleOptions::default()).unwrap();
    let mut worst: f64 = 0.0;
    let mut shown = Vec::new();
    for (t, f) in truth.filters.iter().zip(&fit.params.filters) {
        assert_eq!(t.kind, f.kind);
        worst = worst.max(((f.weight - t.weight) / t.weight).abs()).max(((f.length_days - t.length_days) / t.length_days).abs());
        let kind = if f.kind == FilterKind::Symmetric { "sym" } else { "asym" };
        shown.push(format!("{kind} α={:.3} L={:.2}", f.weight, f.length_days));
    }
    outcome(worst <= 0.25, format!("fit {}; worst relative error {:.1}%", shown.join(", "), 100.0 * worst))
}

fn main() {
    let criteria: [(usize, fn() -> Outcome); 9] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
    ];
    let mut failed = 0;
    for (n, f) in criteria {
        let start = Instant::now();
        let o = f();
        if !o.passed {
            failed += 1;
        }
        println!("criterion {n}: {} ({:.1}s) {}", if o.passed { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64(), o.detail);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
