//! Property tests for the structural invariants.

use proptest::prelude::*;

use mfhpo_core::analysis::{rank_matrix, rank_stability};
use mfhpo_core::benchmark::{
    build_benchmark, read_curve_table, sample_distinct_configs, write_curve_table, BenchSpec,
    FileBenchmark, Regime,
};
use mfhpo_core::curve_model::mmf4_eval;
use mfhpo_core::samplers::transform_objective;
use mfhpo_core::seed::child_rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Round trip through the table format is bit-exact for arbitrary
    /// finite scores.
    #[test]
    fn curve_table_round_trip(
        values in proptest::collection::vec(-1e6f64..1e6, 6),
        seed_count in 1usize..3,
    ) {
        let mut body = String::from("config_id,seed,epoch,valid,test\n");
        let z_max = values.len() / seed_count / 2;
        prop_assume!(z_max >= 1);
        let mut i = 0;
        for seed in 0..seed_count {
            for epoch in 1..=z_max {
                let v = values[i];
                let t = values[i + 1];
                i += 2;
                body.push_str(&format!("c,{seed},{epoch},{v},{t}\n"));
            }
        }
        let table = read_curve_table(std::io::Cursor::new(&body)).unwrap();
        let mut i = 0;
        for seed in 0..seed_count {
            for epoch in 1..=z_max {
                prop_assert_eq!(
                    table.get("c", seed as u64, epoch).unwrap(),
                    (values[i], values[i + 1])
                );
                i += 2;
            }
        }
    }

    /// Min-max + log transform preserves strict order.
    #[test]
    fn transform_preserves_order(
        scores in proptest::collection::vec(-1e3f64..1e3, 2..20),
    ) {
        let t = transform_objective(&scores).unwrap();
        for i in 0..scores.len() {
            for j in 0..scores.len() {
                if scores[i] < scores[j] {
                    prop_assert!(t[i] < t[j]);
                }
            }
        }
    }

    /// The curve model is monotone between its early value and asymptote:
    /// evaluations stay within [min(t0, t2), max(t0, t2)] for z >= 1.
    #[test]
    fn mmf4_stays_between_endpoints(
        t0 in 0.0f64..1.0,
        t1 in 0.5f64..30.0,
        t2 in 0.0f64..1.0,
        t3 in 0.3f64..3.0,
        z in 1.0f64..1e4,
    ) {
        let v = mmf4_eval([t0, t1, t2, t3], z);
        let lo = t0.min(t2) - 1e-12;
        let hi = t0.max(t2) + 1e-12;
        prop_assert!(v >= lo && v <= hi, "f({z}) = {v} outside [{lo}, {hi}]");
    }
}

#[test]
fn rank_matrix_columns_are_permutations_under_noise() {
    for (regime, noise) in [
        (Regime::Dominant, 0.0),
        (Regime::Dominant, 0.1),
        (Regime::Crossing, 0.05),
    ] {
        let spec = BenchSpec {
            regime,
            z_max: 12,
            noise_sigma: noise,
            n_seeds: 1,
            master_seed: 2,
            source_path: None,
        };
        let bench = build_benchmark(&spec, None).unwrap();
        let mut rng = child_rng(4, 55, &[]);
        let configs = sample_distinct_configs(bench.space(), 25, &mut rng).unwrap();
        let m = rank_matrix(bench.as_ref(), &configs, 0).unwrap();
        let expected: usize = (1..=25).sum();
        for epoch in 1..=12 {
            let sum: usize = m.ranks.iter().map(|r| r[epoch - 1]).sum();
            assert_eq!(sum, expected);
        }
        let rho = rank_stability(&m, 1);
        assert!((-1.0..=1.0).contains(&rho));
        assert_eq!(rank_stability(&m, 12), 1.0);
    }
}

#[test]
fn exported_tables_reload_as_equivalent_benchmarks() {
    let spec = BenchSpec {
        regime: Regime::Crossing,
        z_max: 8,
        noise_sigma: 0.02,
        n_seeds: 2,
        master_seed: 31,
        source_path: None,
    };
    let synth = build_benchmark(&spec, None).unwrap();
    let mut rng = child_rng(8, 66, &[]);
    let configs = sample_distinct_configs(synth.space(), 10, &mut rng).unwrap();
    let mut buf = Vec::new();
    write_curve_table(synth.as_ref(), &configs, &mut buf).unwrap();
    let table = read_curve_table(std::io::Cursor::new(&buf)).unwrap();
    let reloaded = FileBenchmark::new(table).unwrap();
    for config in &configs {
        for seed in 0..2 {
            for epoch in 1..=8 {
                let direct = synth.query(config, epoch, seed).unwrap();
                let stored = reloaded.table().get(&config.id(), seed, epoch).unwrap();
                assert_eq!(direct, stored);
            }
        }
    }
}
