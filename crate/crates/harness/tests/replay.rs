use powertrace::instance::{build_observable, build_state, InstanceSpec};
use powertrace::{resolve, run_suite, Config, Overrides, Suite};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn replaying_a_spec_reproduces_its_report(seed in any::<u64>(), k in 2u32..6, qubits in 1u32..3) {
        let tmp = tempfile::tempdir().unwrap();
        let file = Config { seed: Some(seed), k: Some(vec![k]), qubits: Some(qubits), rank: Some(1 << qubits), runs: Some(2), ..Config::default() };
        let overrides = Overrides { out: Some(tmp.path().to_path_buf()), ..Overrides::default() };
        let (cfg, settings) = resolve(Suite::Estimate, &file, &overrides, None).unwrap();
        let first = run_suite(&cfg, &settings).unwrap();
        let second = run_suite(&cfg, &settings).unwrap();
        for (a, b) in first.records.iter().zip(&second.records) {
            prop_assert_eq!(&a.report, &b.report);
            // every graded record carries the |estimate − oracle| ≤ bound flag
            prop_assert_eq!(a.pass, a.report["pass"].as_bool());
        }
        prop_assert_eq!(first.table, second.table);
    }

    #[test]
    fn generated_instances_respect_their_spec(seed in any::<u64>(), qubits in 1u32..4, rank_seed in any::<usize>()) {
        let rank = 1 + rank_seed % (1usize << qubits);
        let file = Config { qubits: Some(qubits), rank: Some(rank), ..Config::default() };
        let (cfg, _) = resolve(Suite::Estimate, &file, &Overrides::default(), None).unwrap();
        let spec = InstanceSpec::from_config(&cfg, seed, 2, 0.1);
        let rho = build_state(&cfg, &spec).unwrap();
        prop_assert_eq!(rho.dim(), 1usize << qubits);
        let numerical_rank = rho.spectrum().eigenvalues.iter().filter(|&&l| l > 1e-12).count();
        prop_assert_eq!(numerical_rank, rank);
        let again = build_state(&cfg, &spec).unwrap();
        prop_assert_eq!(again.matrix(), rho.matrix());
        prop_assert_eq!(build_observable(&cfg, &spec).unwrap().dim(), rho.dim());
    }
}
