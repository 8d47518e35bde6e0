use loopsource_core::analytic::{
    conditional_fidelity, fidelity_after_loops, fidelity_after_loops_oracle, herald_single_shot,
    herald_single_shot_oracle, herald_train, outcome_distribution, outcome_distribution_oracle,
    per_loop_fidelities, unconditional_fidelity,
};
use loopsource_core::multiplex::{
    m_source_distribution, parallel_from_distribution, parallel_unconditional_fidelity,
};
use loopsource_core::simulate::run_simulation;
use loopsource_core::{
    DetectorKind, DetectorModel, LossModel, ProtocolConfig, PumpSchedule, SourceModel,
};
use proptest::prelude::*;

fn kind() -> impl Strategy<Value = DetectorKind> {
    prop_oneof![
        Just(DetectorKind::NumberResolved),
        Just(DetectorKind::Bucket)
    ]
}

fn config(
    kind: DetectorKind,
    pump: PumpSchedule,
    t: usize,
    eta: (f64, f64, f64),
) -> ProtocolConfig {
    ProtocolConfig::new(
        t,
        pump,
        DetectorModel::new(kind, eta.0).unwrap(),
        LossModel::new(eta.1, eta.2).unwrap(),
    )
    .unwrap()
}

proptest! {
    #[test]
    fn closed_forms_track_series(
        kind in kind(),
        nbar in 0.01f64..10.0,
        eta_d in 0.05f64..=1.0,
        eta_s in 0.5f64..=1.0,
        eta_f in 0.5f64..=1.0,
        loops in 0usize..30,
    ) {
        let source = SourceModel::new(nbar).unwrap();
        let det = DetectorModel::new(kind, eta_d).unwrap();
        let loss = LossModel::new(eta_s, eta_f).unwrap();
        let closed = herald_single_shot(&source, &det);
        let series = herald_single_shot_oracle(&source, &det);
        prop_assert!((closed - series).abs() <= 1e-10 * series);
        let closed = fidelity_after_loops(&source, &det, &loss, loops).unwrap();
        let series = fidelity_after_loops_oracle(&source, &det, &loss, loops).unwrap();
        prop_assert!((closed - series).abs() <= 1e-10 * series.max(1e-300), "{closed} vs {series}");
    }

    #[test]
    fn per_bin_distribution_matches_enumeration(
        kind in kind(),
        nbars in proptest::collection::vec(0.0f64..3.0, 1..9),
        eta_d in 0.0f64..=1.0,
    ) {
        let t = nbars.len();
        let config = config(kind, PumpSchedule::PerBin(nbars), t, (eta_d, 0.9, 0.99));
        let fast = outcome_distribution(&config);
        let brute = outcome_distribution_oracle(&config).unwrap();
        for (a, b) in fast.probabilities().iter().zip(brute.probabilities()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        let total: f64 = fast.probabilities().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unconditional_is_train_times_conditional(
        kind in kind(),
        nbar in 0.001f64..10.0,
        eta in 0.01f64..=1.0,
        t in 1usize..200,
    ) {
        let config = config(kind, PumpSchedule::Constant(nbar), t, (eta, eta, eta));
        let train = herald_train(&config.source_at(0), config.detector(), t);
        let product = train * conditional_fidelity(&config).unwrap();
        prop_assert!((unconditional_fidelity(&config) - product).abs() < 1e-12);
    }

    #[test]
    fn more_sources_herald_fresher(
        kind in kind(),
        nbar in 0.01f64..3.0,
        eta in 0.3f64..=1.0,
        t in 1usize..20,
        m in 1usize..6,
    ) {
        let config = config(kind, PumpSchedule::Constant(nbar), t, (eta, eta, eta));
        let single = outcome_distribution(&config);
        let fewer = parallel_from_distribution(&single, m).unwrap();
        let more = parallel_from_distribution(&single, m + 1).unwrap();
        // the freshest photon's age is stochastically smaller with more sources
        let mut cum_fewer = 0.0;
        let mut cum_more = 0.0;
        for u in 0..=t {
            cum_fewer += fewer.probabilities[u];
            cum_more += more.probabilities[u];
            prop_assert!(cum_more >= cum_fewer - 1e-12);
        }
        let s = herald_single_shot(&config.source_at(0), config.detector());
        let closed = m_source_distribution(s, t, m).unwrap();
        for (a, b) in closed.probabilities.iter().zip(&fewer.probabilities) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn single_source_parallel_fidelity_is_unconditional() {
    let config = config(
        DetectorKind::Bucket,
        PumpSchedule::Constant(0.7),
        6,
        (0.9, 0.95, 0.99),
    );
    let dist = parallel_from_distribution(&outcome_distribution(&config), 1).unwrap();
    let fidelities: Vec<f64> = per_loop_fidelities(&config)
        .into_iter()
        .map(Option::unwrap)
        .collect();
    let parallel = parallel_unconditional_fidelity(&dist, &fidelities).unwrap();
    assert!((parallel - unconditional_fidelity(&config)).abs() < 1e-14);
}

#[test]
fn monte_carlo_tracks_per_bin_schedule() {
    let config = config(
        DetectorKind::NumberResolved,
        PumpSchedule::from_chronological(vec![1.2, 0.8, 0.5, 0.3]),
        4,
        (0.85, 0.9, 0.97),
    );
    let summary = run_simulation(&config, 200_000, 42).unwrap();
    let dist = outcome_distribution(&config);
    assert!(summary.herald_rate.z_score(dist.herald_probability()) < 4.0);
    assert!(
        summary
            .unconditional_fidelity
            .z_score(unconditional_fidelity(&config))
            < 4.0
    );
    let cond = summary.conditional_fidelity().unwrap();
    assert!(cond.z_score(conditional_fidelity(&config).unwrap()) < 4.0);
    for (u, &p) in dist.probabilities().iter().enumerate() {
        let observed = summary.loop_histogram.probabilities()[u];
        assert!((observed - p).abs() < 4.0 * summary.histogram_std_error(u, p));
    }
}
