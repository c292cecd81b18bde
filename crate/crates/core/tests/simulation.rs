use proptest::prelude::*;

use pts_core::agents::Strategy;
use pts_core::analysis::scenarios::scenario_convergence;
use pts_core::config::{default_config, emit_config, parse_config};
use pts_core::sim::{incremental_update, run_batch, HistogramState, PopulationEntry};
use pts_core::{run_simulation, Distribution, Payment, SimConfig};

fn small(seed: u64, rounds: usize, m: usize) -> SimConfig {
    let mut config = default_config().with_seed(seed);
    config.rounds = rounds;
    config.agents_per_round = m;
    config
}

#[test]
fn same_seed_same_trace() {
    let a = run_simulation(&small(42, 300, 3)).unwrap();
    let b = run_simulation(&small(42, 300, 3)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_csv(), b.to_csv());
    let c = run_simulation(&small(43, 300, 3)).unwrap();
    assert_ne!(a.to_csv(), c.to_csv());
}

#[test]
fn batch_matches_sequential_runs() {
    let configs: Vec<SimConfig> = (0..4).map(|s| small(s, 200, 2)).collect();
    let batch = run_batch(&configs);
    for (config, got) in configs.iter().zip(batch) {
        assert_eq!(got.unwrap(), run_simulation(config).unwrap());
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let mut config = small(1, 10, 1);
    let err = run_simulation(&config).unwrap_err().to_string();
    assert!(err.contains("agents_per_round"), "{err}");
    config.agents_per_round = 2;
    config.histogram_init[0] = 0.0;
    assert!(run_simulation(&config).is_err());
    let mut config = small(1, 10, 2);
    config.population = vec![PopulationEntry::new("p", 0, config.population[0].profile.clone())];
    assert!(run_simulation(&config).is_err());
}

#[test]
fn truthful_reports_track_observations() {
    let config = scenario_convergence(Strategy::Truthful, 3);
    let mut config = config;
    config.rounds = 500;
    let trace = run_simulation(&config).unwrap();
    for rec in &trace.records {
        assert_eq!(rec.reports, rec.observations);
        for (i, j) in rec.references.iter().enumerate() {
            assert!(rec.reports.contains(j), "reference {i} not among the round's reports");
        }
    }
}

#[test]
fn csv_and_summary_layout() {
    let trace = run_simulation(&small(9, 20, 2)).unwrap();
    let csv = trace.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# seed = 9"));
    assert_eq!(lines.next(), Some("t,x,y,z,l1,mean_reward"));
    assert_eq!(lines.count(), 20);
    let summary = trace.summary_text();
    assert!(summary.starts_with("seed = 9\nrounds = 20\n"));
    assert!(summary.contains("final_l1 = "));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn histogram_mass_grows_by_m_per_round(seed in any::<u64>(), rounds in 1usize..200, m in 2usize..6) {
        let config = small(seed, rounds, m);
        let trace = run_simulation(&config).unwrap();
        let initial: f64 = config.histogram_init.iter().sum();
        let total: f64 = trace.final_counts.iter().sum();
        prop_assert!((total - initial - (m * rounds) as f64).abs() < 1e-9);
        // The final histogram is the initial one plus every report.
        let mut counts = config.histogram_init.clone();
        for rec in &trace.records {
            for r in &rec.reports {
                counts[*r] += 1.0;
            }
        }
        prop_assert_eq!(&counts, &trace.final_counts);
    }

    #[test]
    fn rewards_are_recomputable(seed in any::<u64>(), m in 2usize..6) {
        let config = small(seed, 100, m);
        let trace = run_simulation(&config).unwrap();
        let mut public = Distribution::normalize(&config.histogram_init).unwrap();
        let mut totals = vec![0.0; config.population.len()];
        for rec in &trace.records {
            for i in 0..m {
                let expected = config.payment.pay(rec.reports[i], rec.references[i], &public);
                prop_assert_eq!(rec.rewards[i], expected);
                totals[rec.profiles[i]] += expected;
            }
            public = rec.published.clone();
        }
        for (a, b) in totals.iter().zip(&trace.summary.reward_totals) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn incremental_update_matches_recount(counts in prop::collection::vec(1u32..500, 2..7), pick in 0usize..6) {
        let report = pick % counts.len();
        let t: u32 = counts.iter().sum();
        let as_f64: Vec<f64> = counts.iter().map(|c| *c as f64).collect();
        let public = Distribution::normalize(&as_f64).unwrap();
        let mut bumped = as_f64.clone();
        bumped[report] += 1.0;
        let oracle = Distribution::normalize(&bumped).unwrap();
        let got = incremental_update(&public, report, t as usize).unwrap();
        for (a, b) in got.iter().zip(oracle.iter()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn smoothing_discrepancy_shrinks_like_one_over_t(seed in any::<u64>()) {
        let config = small(seed, 400, 2);
        let trace = run_simulation(&config).unwrap();
        let init: f64 = config.histogram_init.iter().sum();
        let n = config.space.len();
        let mut empirical = vec![0.0; n];
        for rec in &trace.records {
            for r in &rec.reports {
                empirical[*r] += 1.0;
            }
            let reports = (rec.t * config.agents_per_round) as f64;
            let gap: f64 = rec
                .published
                .iter()
                .zip(&empirical)
                .map(|(p, e)| (p - e / reports).abs())
                .sum();
            // Smoothed minus raw frequencies is at most 2·init/(reports + init).
            prop_assert!(gap <= 2.0 * init / (reports + init) + 1e-9);
        }
    }

    #[test]
    fn config_round_trip_gives_identical_trace(seed in any::<u64>()) {
        let config = small(seed, 50, 3);
        let text = emit_config(&config).unwrap();
        let back = parse_config(&text).unwrap();
        prop_assert_eq!(&back, &config);
        prop_assert_eq!(run_simulation(&back).unwrap().to_csv(), run_simulation(&config).unwrap().to_csv());
    }
}

#[test]
fn histogram_state_rejects_non_positive_counts() {
    assert!(HistogramState::new(&[1.0, 0.0]).is_err());
    let state = HistogramState::new(&[2.0, 2.0]).unwrap();
    assert_eq!(state.t(), 0);
    assert_eq!(state.public()[0], 0.5);
}
