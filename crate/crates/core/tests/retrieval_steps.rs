use hom_phase::forward::{DipPattern, StateCombination};
use hom_phase::grid::{FrequencyGrid, SpectralSeries};
use hom_phase::retrieval::{
    adapted_gs_step, adapted_magnitude, affine_fit, detrend, flip_candidate, gp_step, gs_step,
    phase_distance, phase_gradient, residual, run_retrieval, weighted_rms, RetrievalConfig,
};
use hom_phase::scenario::{angular, ReferenceSetup, Scenario};
use hom_phase::spectrum::{weighted_centroid, PhaseSpectrum};
use hom_phase::transform::{forward_transform, FourierPair};
use hom_phase::Error;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_setup() -> ReferenceSetup {
    ReferenceSetup {
        count: 512,
        ..ReferenceSetup::default()
    }
}

fn small_scenario() -> Scenario<f64> {
    small_setup().build().unwrap()
}

fn field(s: &Scenario<f64>) -> SpectralSeries<f64> {
    let v = s
        .g_mag()
        .iter()
        .zip(s.truth.values())
        .map(|(m, p)| Complex::from_polar(*m, *p))
        .collect();
    SpectralSeries::new(s.grid, v).unwrap()
}

fn random_phases(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-3.0..3.0)).collect()
}

fn with_phases(g_mag: &[f64], grid: FrequencyGrid<f64>, phases: &[f64]) -> SpectralSeries<f64> {
    let v = g_mag
        .iter()
        .zip(phases)
        .map(|(m, p)| Complex::from_polar(*m, *p))
        .collect();
    SpectralSeries::new(grid, v).unwrap()
}

#[test]
fn true_field_is_a_fixed_point_of_gs() {
    let s = small_scenario();
    let g = field(&s);
    let target = forward_transform(&g).unwrap().magnitudes();
    let next = gs_step(&g, &s.g_mag(), &target).unwrap();
    let peak = s.g_mag().iter().cloned().fold(0.0, f64::max);
    for (a, b) in next.values().iter().zip(g.values()) {
        assert!((a - b).norm() < 1e-10 * peak);
    }
}

#[test]
fn substitution_imposes_magnitudes_exactly() {
    let s = small_scenario();
    let gm = s.g_mag();
    let target = forward_transform(&field(&s)).unwrap().magnitudes();
    let g0 = with_phases(&gm, s.grid, &random_phases(gm.len(), 1));
    for step in [
        gs_step(&g0, &gm, &target).unwrap(),
        gp_step(&g0, &gm, &target, 0.5).unwrap(),
        adapted_gs_step(&g0, &gm, &target, 0.1).unwrap(),
    ] {
        for (z, m) in step.values().iter().zip(&gm) {
            assert!((z.norm() - m).abs() <= 1e-12 * m.max(1e-300));
        }
    }
    // time-domain half of the substitution: |G| replaced, phase kept
    let big = forward_transform(&g0).unwrap();
    let replaced: Vec<Complex<f64>> = big
        .values()
        .iter()
        .zip(&target)
        .map(|(z, m)| z / z.norm() * m)
        .collect();
    let mut pair = FourierPair::new(s.grid);
    let mut g1 = vec![Complex::new(0.0, 0.0); gm.len()];
    pair.inverse_into(&replaced, &mut g1);
    let mut again = vec![Complex::new(0.0, 0.0); gm.len()];
    pair.forward_into(&g1, &mut again);
    for (z, m) in again.iter().zip(&target) {
        assert!((z.norm() - m).abs() < 1e-10 * target.iter().cloned().fold(0.0, f64::max));
    }
}

/// `Σ (|G_k| − |G|)²` over the whole delay grid.
fn time_error(g: &SpectralSeries<f64>, target: &[f64]) -> f64 {
    forward_transform(g)
        .unwrap()
        .magnitudes()
        .iter()
        .zip(target)
        .map(|(a, b)| (a - b).powi(2))
        .sum()
}

#[test]
fn gs_error_never_increases_on_consistent_data() {
    let s = small_scenario();
    let gm = s.g_mag();
    let target = forward_transform(&field(&s)).unwrap().magnitudes();
    for seed in 0..3 {
        let mut g = with_phases(&gm, s.grid, &random_phases(gm.len(), seed));
        let mut last = time_error(&g, &target);
        for _ in 0..60 {
            g = gs_step(&g, &gm, &target).unwrap();
            let e = time_error(&g, &target);
            assert!(e <= last * (1.0 + 1e-9) + 1e-18, "{e} > {last}");
            last = e;
        }
    }
}

#[test]
fn phase_gradient_matches_finite_differences() {
    let s = small_scenario();
    let gm = s.g_mag();
    let target = forward_transform(&field(&s)).unwrap().magnitudes();
    let g0 = with_phases(&gm, s.grid, &random_phases(gm.len(), 7));
    // g' from one substitution, held fixed while differentiating
    let mut pair = FourierPair::new(s.grid);
    let mut big = vec![Complex::new(0.0, 0.0); gm.len()];
    pair.forward_into(g0.values(), &mut big);
    let replaced: Vec<Complex<f64>> = big
        .iter()
        .zip(&target)
        .map(|(z, m)| z / z.norm() * m)
        .collect();
    let mut g_prime = vec![Complex::new(0.0, 0.0); gm.len()];
    pair.inverse_into(&replaced, &mut g_prime);

    let phases = g0.phases();
    let grad = phase_gradient(&phases, &gm, &g_prime);
    let peak = grad.iter().map(|g| g.abs()).fold(0.0, f64::max);
    let h = 1e-6;
    for i in (0..gm.len()).step_by(17) {
        let mut up = phases.clone();
        let mut down = phases.clone();
        up[i] += h;
        down[i] -= h;
        let fd =
            (phase_distance(&up, &gm, &g_prime) - phase_distance(&down, &gm, &g_prime)) / (2.0 * h);
        assert!(
            (fd - grad[i]).abs() <= 1e-6 * peak,
            "sample {i}: {fd} vs {}",
            grad[i]
        );
    }
}

#[test]
fn gp_step_reduces_phase_distance() {
    let s = small_scenario();
    let gm = s.g_mag();
    let target = forward_transform(&field(&s)).unwrap().magnitudes();
    let g0 = with_phases(&gm, s.grid, &random_phases(gm.len(), 3));
    let e0 = time_error(&g0, &target);
    let g1 = gp_step(&g0, &gm, &target, 0.5).unwrap();
    assert!(time_error(&g1, &target) < e0);
}

#[test]
fn adapted_magnitude_limits() {
    assert_eq!(adapted_magnitude(0.0, 0.37, 0.2), 0.37);
    assert!((adapted_magnitude(1.0f64, 0.6, 2.0) - 0.8).abs() < 1e-15);
    assert_eq!(adapted_magnitude(0.5, 0.9, 0.2), 0.5);
    assert_eq!(adapted_magnitude(0.2, 0.9, 0.2), 0.2);
}

#[test]
fn adapted_step_matches_gs_above_threshold() {
    let s = small_scenario();
    let gm = s.g_mag();
    let target = forward_transform(&field(&s)).unwrap().magnitudes();
    let g0 = with_phases(&gm, s.grid, &random_phases(gm.len(), 5));
    let a = adapted_gs_step(&g0, &gm, &target, 0.0).unwrap();
    let b = gs_step(&g0, &gm, &target).unwrap();
    assert_eq!(a, b);
}

#[test]
fn step_errors() {
    let s = small_scenario();
    let gm = s.g_mag();
    let g0 = field(&s);
    let short = vec![1.0; 3];
    assert!(matches!(
        gs_step(&g0, &gm, &short),
        Err(Error::GridMismatch(_))
    ));
    let mut neg = gm.clone();
    neg[0] = -1.0;
    assert!(matches!(gs_step(&g0, &neg, &gm), Err(Error::OutOfRange(_))));
    let mut nan = gm.clone();
    nan[4] = f64::NAN;
    assert!(gs_step(&g0, &nan, &gm).is_err());
    assert!(adapted_gs_step(&g0, &gm, &gm, -1.0).is_err());
    assert!(gp_step(&g0, &gm, &gm, 0.0).is_err());
}

#[test]
fn detrend_removes_affine_parts() {
    let s = small_scenario();
    let w = hom_phase::retrieval::mask_weights(&s.g_mag(), 0.1);
    let affine =
        PhaseSpectrum::from_fn(s.grid, |x| 0.3 + 2e-12 * (x - s.grid.center_frequency())).unwrap();
    let d = detrend(&affine, &w).unwrap();
    assert!(d
        .values()
        .iter()
        .zip(&w)
        .all(|(v, w)| *w == 0.0 || v.abs() < 1e-9));

    let c = s.grid.center_frequency();
    let quad = PhaseSpectrum::from_fn(s.grid, |x| {
        let u = (x - c) / angular::<f64>(100e9);
        0.7 * u * u - 0.2 * u + 1.0
    })
    .unwrap();
    let once = detrend(&quad, &w).unwrap();
    let twice = detrend(&once, &w).unwrap();
    for (a, b) in once.values().iter().zip(twice.values()) {
        assert!((a - b).abs() < 1e-12);
    }
    let (a, b) = affine_fit(&s.grid, once.values(), &w).unwrap();
    assert!(a.abs() < 1e-12);
    assert!((b * s.grid.spacing()).abs() < 1e-14);
    // the quadratic part survives
    assert!(weighted_rms(once.values(), &vec![0.0; w.len()], &w) > 0.05);

    let mut sparse = vec![0.0; w.len()];
    sparse[10] = 1.0;
    assert!(matches!(detrend(&quad, &sparse), Err(Error::Degenerate(_))));
}

#[test]
fn flip_is_an_involution_that_fixes_odd_functions() {
    let s = small_scenario();
    let c = s.grid.center_frequency();
    let odd = PhaseSpectrum::from_fn(s.grid, |x| ((x - c) / angular::<f64>(80e9)).sin()).unwrap();
    let f = flip_candidate(&odd, c).unwrap();
    // index 0 has no mirror partner on the grid
    for i in 1..s.grid.count() {
        assert!((f.values()[i] - odd.values()[i]).abs() < 1e-12);
    }
    let any = PhaseSpectrum::new(s.grid, random_phases(s.grid.count(), 11)).unwrap();
    let back = flip_candidate(&flip_candidate(&any, c).unwrap(), c).unwrap();
    for i in 1..s.grid.count() {
        assert!((back.values()[i] - any.values()[i]).abs() < 1e-12);
    }
    assert!(flip_candidate(&any, c + 1e15).is_err());
}

#[test]
fn flip_preserves_big_g_for_symmetric_spectra() {
    let s = small_scenario();
    let center = weighted_centroid(&s.grid, &s.g_mag());
    let flipped = flip_candidate(&s.truth, center).unwrap();
    let a = forward_transform(&field(&s)).unwrap().magnitudes();
    let b = forward_transform(&with_phases(&s.g_mag(), s.grid, flipped.values()))
        .unwrap()
        .magnitudes();
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-9);
    }
}

#[test]
fn residual_ignores_global_phase() {
    let s = small_scenario();
    let target = forward_transform(&field(&s)).unwrap().magnitudes();
    let g = with_phases(&s.g_mag(), s.grid, &random_phases(s.grid.count(), 2));
    let shifted: Vec<f64> = g.phases().iter().map(|p| p + 1.234).collect();
    let r0 = residual(&g, &target, 0.0).unwrap();
    let r1 = residual(&with_phases(&s.g_mag(), s.grid, &shifted), &target, 0.0).unwrap();
    assert!((r0 - r1).abs() < 1e-12 * r0.max(1e-30));
    let truth = residual(&field(&s), &target, 0.0).unwrap();
    assert!(truth < 1e-12);
    assert!(residual(&g, &target, f64::INFINITY).is_err());
}

#[test]
fn symmetric_spectra_are_reported_as_ambiguous() {
    let s = small_scenario();
    let dip = s.true_dip().unwrap();
    let cfg = RetrievalConfig {
        restarts: 3,
        ..RetrievalConfig::default()
    };
    let r = run_retrieval(&s.grid, &s.g_mag(), &dip, s.combo, &cfg).unwrap();
    assert!(r.ambiguous);
    assert!(!r.flipped);
    for restart in &r.restarts {
        assert!((restart.residual_direct - restart.residual_flipped).abs() <= 1e-9);
        assert!(restart.ambiguous);
    }
}

fn error_against_truth(s: &Scenario<f64>, psd: &PhaseSpectrum<f64>, w: &[f64]) -> f64 {
    let truth = detrend(&s.truth, w).unwrap();
    let center = weighted_centroid(&s.grid, &s.g_mag());
    let flipped = detrend(&flip_candidate(psd, center).unwrap(), w).unwrap();
    weighted_rms(psd.values(), truth.values(), w).min(weighted_rms(
        flipped.values(),
        truth.values(),
        w,
    ))
}

#[test]
fn retrieval_is_gauge_and_scale_invariant() {
    let s = small_scenario();
    let dip = s.true_dip().unwrap();
    let cfg = RetrievalConfig {
        restarts: 2,
        ..RetrievalConfig::default()
    };
    let base = run_retrieval(&s.grid, &s.g_mag(), &dip, s.combo, &cfg).unwrap();

    // a constant phase leaves the dip untouched
    let mut gauged = s.clone();
    gauged.truth = s.truth.add_affine(0.8, 0.0);
    let gauged_dip = gauged.true_dip().unwrap();
    for (a, b) in gauged_dip.nc_values().iter().zip(dip.nc_values()) {
        assert!((a - b).abs() < 1e-9, "{a} {b}");
    }

    // a power of two rescales every intermediate exactly
    let scaled: Vec<f64> = s.g_mag().iter().map(|m| m * 4.0).collect();
    let r = run_retrieval(&s.grid, &scaled, &dip, s.combo, &cfg).unwrap();
    assert_eq!(r.psd, base.psd);
    assert_eq!(r.fitted_amplitude, 4.0 * base.fitted_amplitude);
    let scaled: Vec<f64> = s.g_mag().iter().map(|m| m * 3.0).collect();
    let r = run_retrieval(&s.grid, &scaled, &dip, s.combo, &cfg).unwrap();
    eprintln!(
        "x3: {:e}",
        weighted_rms(r.psd.values(), base.psd.values(), &base.weights)
    );
    assert!(weighted_rms(r.psd.values(), base.psd.values(), &base.weights) < 1e-6);
    assert!((r.fitted_amplitude / base.fitted_amplitude - 3.0).abs() < 1e-9);
    assert!(error_against_truth(&s, &base.psd, &base.weights) < 0.05);
}

#[test]
fn retrieval_rejects_bad_dips() {
    let s = small_scenario();
    let gm = s.g_mag();
    let cfg = RetrievalConfig::default();
    let delays = s.delays.clone();

    let flat = DipPattern::new(delays.clone(), vec![1.0; delays.len()], None).unwrap();
    assert!(matches!(
        run_retrieval(&s.grid, &gm, &flat, s.combo, &cfg),
        Err(Error::Degenerate(_))
    ));

    // coherent states cannot dip below one half; 0.2 implies V = 1.6
    let mut nc = s.true_dip().unwrap().nc_values().to_vec();
    let k = nc.len() / 2;
    nc[k] = 0.2;
    let bad = DipPattern::new(delays.clone(), nc, None).unwrap();
    match run_retrieval(&s.grid, &gm, &bad, s.combo, &cfg) {
        Err(Error::InconsistentDip { offending_delays }) => {
            assert_eq!(offending_delays, vec![delays[k]]);
        }
        other => panic!("expected an inconsistent dip, got {other:?}"),
    }

    // a perfect single-photon dip read as coherent states implies V = 2
    let ss = small_setup().build::<f64>().unwrap();
    let mut single = ss.clone();
    single.combo = StateCombination::SingleSingle;
    let deep = single.true_dip().unwrap();
    assert!(matches!(
        run_retrieval(&s.grid, &gm, &deep, ss.combo, &cfg),
        Err(Error::InconsistentDip { .. })
    ));

    let empty = RetrievalConfig {
        gs_iterations: 0,
        gp_iterations: 0,
        adapted_iterations: 0,
        ..RetrievalConfig::default()
    };
    assert!(matches!(
        run_retrieval(&s.grid, &gm, &s.true_dip().unwrap(), s.combo, &empty),
        Err(Error::InvalidInput(_))
    ));
    assert!(run_retrieval(&s.grid, &gm[1..], &s.true_dip().unwrap(), s.combo, &cfg).is_err());
}

#[test]
fn residual_history_is_recorded() {
    let s = small_scenario();
    let cfg = RetrievalConfig {
        restarts: 1,
        ..RetrievalConfig::default()
    };
    let r = run_retrieval(&s.grid, &s.g_mag(), &s.true_dip().unwrap(), s.combo, &cfg).unwrap();
    assert!(!r.residual_history.is_empty());
    assert!(r.residual_history.len() <= 650);
    assert!(r.residual_history.last().unwrap() < &r.residual_history[0]);
}

#[test]
fn gradient_vanishes_at_the_projection_phase() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let g_prime: Vec<Complex<f64>> = (0..64)
        .map(|_| Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let m: Vec<f64> = (0..64).map(|_| rng.random_range(0.1..2.0)).collect();
    let phases: Vec<f64> = g_prime.iter().map(|z| z.arg()).collect();
    for d in phase_gradient(&phases, &m, &g_prime) {
        assert!(d.abs() < 1e-14);
    }
}

#[test]
fn gp_step_from_a_perturbed_truth_moves_back() {
    let s = small_scenario();
    let gm = s.g_mag();
    let target = forward_transform(&field(&s)).unwrap().magnitudes();
    let noise = random_phases(gm.len(), 17);
    let perturbed: Vec<f64> = s
        .truth
        .values()
        .iter()
        .zip(&noise)
        .map(|(p, n)| p + 0.05 * n)
        .collect();
    let g0 = with_phases(&gm, s.grid, &perturbed);
    let g1 = gp_step(&g0, &gm, &target, 0.5).unwrap();
    assert!(time_error(&g1, &target) < time_error(&g0, &target));
}

#[test]
fn longer_gs_runs_fit_better() {
    let mut s = small_scenario();
    let c = s.grid.center_frequency();
    let scale = angular::<f64>(100e9);
    s.truth = PhaseSpectrum::from_fn(s.grid, |w| 1.5 * ((w - c) / scale).powi(2)).unwrap();
    let gm = s.g_mag();
    let target = forward_transform(&field(&s)).unwrap().magnitudes();
    let mut g = with_phases(&gm, s.grid, &random_phases(gm.len(), 9));
    let mut after_10 = f64::NAN;
    for k in 1..=200 {
        g = gs_step(&g, &gm, &target).unwrap();
        if k == 10 {
            after_10 = time_error(&g, &target);
        }
    }
    assert!(time_error(&g, &target) < after_10);
}

#[test]
fn detrending_a_parabola_leaves_its_centred_curvature() {
    let grid = FrequencyGrid::new(0.0f64, 0.01, 256).unwrap();
    let c = 0.7;
    let psd = PhaseSpectrum::from_fn(grid, |w| c * w * w).unwrap();
    // drop the unpaired lowest sample so the weighted support is symmetric
    let mut weights = vec![1.0; grid.count()];
    weights[0] = 0.0;
    let w2: f64 = (1..grid.count())
        .map(|i| grid.offset(i).powi(2))
        .sum::<f64>()
        / (grid.count() - 1) as f64;
    let out = detrend(&psd, &weights).unwrap();
    for i in 1..grid.count() {
        let expected = c * grid.offset(i).powi(2) - c * w2;
        assert!((out.values()[i] - expected).abs() < 1e-12, "{i}");
    }
}
