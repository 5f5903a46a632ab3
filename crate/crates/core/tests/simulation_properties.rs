use pbcox_core::simulation::{run_replicates, run_simulation, ReplicateOutcome, StandardEstimators};
use pbcox_core::{Method, SimulationConfig, SimulationSummary};
use proptest::prelude::*;

const TRIO: [Method; 3] = [Method::Breslow, Method::Efron, Method::PbExact];

fn coverage(s: &SimulationSummary, label: &str) -> f64 {
    s.method(label).unwrap().coverage
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn summaries_satisfy_moment_decomposition(
        beta in -1.5f64..1.5,
        sigma_x in 0.5f64..2.0,
        tau in prop::sample::select(vec![0.0, 0.05, 0.2]),
        seed in any::<u64>(),
    ) {
        let c = SimulationConfig::new(beta, sigma_x, tau, 60, 30, seed);
        let s = run_simulation(&c, &TRIO).unwrap();
        for m in &s.methods {
            let b = m.successes as f64;
            let lhs = m.rmse.powi(2);
            let rhs = m.bias.powi(2) + m.empirical_sd.powi(2) * (b - 1.0) / b;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.max(1.0), "{}: {} vs {}", m.method, lhs, rhs);
        }
    }

    #[test]
    fn same_seed_same_summary(seed in any::<u64>()) {
        let c = SimulationConfig::new(1.0, 1.5, 0.1, 80, 20, seed);
        let mut a = run_simulation(&c, &TRIO).unwrap();
        let mut b = run_simulation(&c, &TRIO).unwrap();
        for m in a.methods.iter_mut().chain(b.methods.iter_mut()) {
            m.mean_fit_seconds = 0.0;
        }
        prop_assert_eq!(a, b);
    }
}

#[test]
fn untied_replicates_give_identical_breslow_and_efron() {
    let c = SimulationConfig::new(1.0, 1.5, 0.0, 200, 100, 31);
    let table = run_replicates(&c, &StandardEstimators::new(TRIO.to_vec()).unwrap()).unwrap();
    for outcome in &table {
        let ReplicateOutcome::Fitted(row) = outcome else {
            panic!("generation failed");
        };
        let b = row[0].as_ref().unwrap().beta;
        let e = row[1].as_ref().unwrap().beta;
        assert!((b - e).abs() <= 1e-6, "{b} vs {e}");
        assert!(row[2].is_ok());
    }
}

#[test]
fn coverage_degrades_with_grouping() {
    let run = |tau| run_simulation(&SimulationConfig::new(1.5, 2.0, tau, 200, 1000, 20240601), &TRIO).unwrap();
    let cells: Vec<SimulationSummary> = [0.01, 0.1, 0.2].into_iter().map(run).collect();
    let breslow: Vec<f64> = cells.iter().map(|s| coverage(s, "breslow")).collect();
    assert!(breslow[0] >= breslow[1] && breslow[1] >= breslow[2], "{breslow:?}");
    let heavy = &cells[2];
    assert!(coverage(heavy, "pb_exact") > coverage(heavy, "breslow"));
    assert!(coverage(heavy, "pb_exact") > coverage(heavy, "efron"));
}
