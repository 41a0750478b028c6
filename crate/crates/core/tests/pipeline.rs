use std::sync::Arc;

use unfold_core::estimator::{
    estimate_linear, estimate_nonlinear, Estimator, EstimatorConfig, ThresholdMode,
};
use unfold_core::metrics::{kl_divergence, lemma_suite};
use unfold_core::operator::{load_or_build, KernelSpec};
use unfold_core::sim::{fold_intensity, simulate_counts, CountData, IntensitySpec};
use unfold_core::wavelet::{DyadicGrid, WaveletFilter};
use unfold_core::Error;

fn smooth() -> IntensitySpec {
    IntensitySpec::ExpSine {
        offset: 1.0,
        amplitude: 1.0,
    }
}

#[test]
fn simulate_then_estimate_through_log_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let (k, _) = load_or_build(dir.path(), &KernelSpec::LogPotentialPeriodized, 7, 12).unwrap();
    let filter = WaveletFilter::symmlet6();
    let h = fold_intensity(&smooth(), &k).unwrap();
    let f = smooth().sample(DyadicGrid::new(7).unwrap()).unwrap();

    let data = simulate_counts(&h, 1e6, 3).unwrap();
    assert_eq!(data, simulate_counts(&h, 1e6, 3).unwrap());
    let est = estimate_nonlinear(&data, &k, &filter, &EstimatorConfig::default()).unwrap();
    assert!(est.diagnostics.residual <= 1e-8);
    let f_hat = est.model.evaluate().unwrap();
    assert!(f_hat.values().iter().all(|&v| v > 0.0));
    let kl = kl_divergence(&f, &f_hat).unwrap();
    assert!(kl.is_finite() && kl > 0.0 && kl < 0.1, "kl = {kl}");

    // The fitted model is a valid lemma-suite input and passes every applicable check.
    let report = lemma_suite(&f, &[est.model]).unwrap();
    assert!(
        report.applicable().all(|c| c.pass),
        "{:?}",
        report.failures().collect::<Vec<_>>()
    );
}

#[test]
fn linear_mode_requires_smoothness() {
    let dir = tempfile::tempdir().unwrap();
    let (k, _) = load_or_build(dir.path(), &KernelSpec::LogPotentialPeriodized, 6, 10).unwrap();
    let filter = WaveletFilter::symmlet6();
    let h = fold_intensity(&smooth(), &k).unwrap();
    let data = simulate_counts(&h, 1e5, 9).unwrap();

    let mut cfg = EstimatorConfig {
        mode: ThresholdMode::Linear,
        ..EstimatorConfig::default()
    };
    assert!(cfg.validate().is_err());
    cfg.s = Some(1.0);
    let est = estimate_linear(&data, &k, &filter, &cfg).unwrap();
    // ⌊log2(1e5)/5⌋ = 3.
    assert_eq!(est.diagnostics.level, 3);
    assert_eq!(est.diagnostics.n_coeffs, 8);
}

#[test]
fn estimator_is_shareable_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let (k, _) = load_or_build(dir.path(), &KernelSpec::LogPotentialPeriodized, 6, 10).unwrap();
    let h = fold_intensity(&smooth(), &k).unwrap();
    let estimator = Arc::new(
        Estimator::new(
            Arc::new(k),
            WaveletFilter::symmlet6(),
            EstimatorConfig::default(),
        )
        .unwrap(),
    );
    let handles: Vec<_> = (0..4u64)
        .map(|seed| {
            let (estimator, h) = (estimator.clone(), h.clone());
            std::thread::spawn(move || {
                let data = simulate_counts(&h, 1e5, seed).unwrap();
                estimator.estimate(&data).unwrap().model.theta
            })
        })
        .collect();
    let threaded: Vec<Vec<f64>> = handles.into_iter().map(|t| t.join().unwrap()).collect();
    for (seed, theta) in threaded.iter().enumerate() {
        let data = simulate_counts(&h, 1e5, seed as u64).unwrap();
        assert_eq!(&estimator.estimate(&data).unwrap().model.theta, theta);
    }
}

#[test]
fn mismatched_resolution_and_zero_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (k, _) = load_or_build(dir.path(), &KernelSpec::LogPotentialPeriodized, 6, 10).unwrap();
    let estimator = Estimator::new(
        Arc::new(k),
        WaveletFilter::haar(),
        EstimatorConfig::default(),
    )
    .unwrap();

    let small = CountData::new(vec![1; 32], 1e4, 0).unwrap();
    assert!(matches!(
        estimator.estimate(&small),
        Err(Error::ResolutionMismatch {
            expected: 6,
            found: 5
        })
    ));
    let zeros = CountData::new(vec![0; 64], 1e4, 0).unwrap();
    match estimator.estimate(&zeros) {
        Err(e @ Error::InfeasibleTarget { .. }) => {
            assert!(e.to_string().contains("alpha_coarse = 0"))
        }
        other => panic!("expected infeasible target, got {other:?}"),
    }
}
