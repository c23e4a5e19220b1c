mod support;

use mot_core::benchmark::DatasetId;
use mot_core::llm::Usage;
use mot_core::metrics::{avg_pass_ratio, cost_summary, pass_at_1, relative_delta, relative_delta_pct, Pricing, ProblemOutcome};
use mot_core::prompt::Prompt;
use mot_core::strategy::{CallRecord, CallStage, GenerationRecord, StrategyId};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn outcomes(seed: u64, size: usize) -> Vec<ProblemOutcome> {
    support::random_outcomes(&mut ChaCha8Rng::seed_from_u64(seed), size)
}

fn records(seed: u64, size: usize) -> Vec<GenerationRecord> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    (0..size)
        .map(|i| {
            let calls = (0..r.random_range(1..=4))
                .map(|_| CallRecord {
                    stage: CallStage::Code,
                    prompt: Prompt::with_user("q"),
                    response: "a".into(),
                    usage: Usage::new(r.random_range(0..5000), r.random_range(0..3000)),
                })
                .collect();
            GenerationRecord {
                task_id: format!("P{i}"),
                strategy: StrategyId::Mot,
                calls,
                parsed_graph: None,
                task_elements: None,
                graph_issues: Vec::new(),
                extracted_code: "pass".into(),
                fallback_used: false,
                wall_time_ms: 0,
                self_tests: Vec::new(),
            }
        })
        .collect()
}

proptest! {
    #[test]
    fn pass_at_1_matches_solved_count(seed in any::<u64>(), size in 1usize..500) {
        let o = outcomes(seed, size);
        let got = pass_at_1(&o).unwrap();
        prop_assert!((got - support::oracle_pass_at_1(&o)).abs() <= 1e-9);
        prop_assert!((0.0..=100.0).contains(&got));
    }

    #[test]
    fn apr_matches_exact_recomputation(seed in any::<u64>(), size in 1usize..500) {
        let o = outcomes(seed, size);
        let got = avg_pass_ratio(&o, DatasetId::HumanEval).unwrap();
        prop_assert!((got - support::oracle_apr(&o)).abs() <= 1e-9);
    }

    #[test]
    fn apr_bounds_pass_at_1(seed in any::<u64>(), size in 1usize..200) {
        let o = outcomes(seed, size);
        prop_assert!(avg_pass_ratio(&o, DatasetId::Mbpp).unwrap() + 1e-9 >= pass_at_1(&o).unwrap());
    }

    #[test]
    fn metrics_are_permutation_invariant(seed in any::<u64>(), size in 1usize..200) {
        let o = outcomes(seed, size);
        let mut shuffled = o.clone();
        let mut r = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        for i in (1..shuffled.len()).rev() {
            let j = r.random_range(0..=i);
            shuffled.swap(i, j);
        }
        prop_assert!((pass_at_1(&o).unwrap() - pass_at_1(&shuffled).unwrap()).abs() <= 1e-9);
        prop_assert!(
            (avg_pass_ratio(&o, DatasetId::HumanEval).unwrap() - avg_pass_ratio(&shuffled, DatasetId::HumanEval).unwrap()).abs()
                <= 1e-9
        );
    }

    #[test]
    fn cost_is_linear_in_pricing(seed in any::<u64>(), size in 1usize..100, p_in in 0.0f64..1e-4, p_out in 0.0f64..1e-4) {
        let rs = records(seed, size);
        let p = Pricing::new(p_in, p_out).unwrap();
        let single = cost_summary(&rs, &p).unwrap();
        let double = cost_summary(&rs, &p.scaled(2.0)).unwrap();
        prop_assert_eq!(double.avg_cost_usd, 2.0 * single.avg_cost_usd);
        prop_assert_eq!(double.avg_in_tokens, single.avg_in_tokens);
        prop_assert_eq!(double.avg_out_tokens, single.avg_out_tokens);
        let zero = cost_summary(&rs, &Pricing::default()).unwrap();
        prop_assert_eq!(zero.avg_cost_usd, 0.0);
        prop_assert_eq!(zero.avg_in_tokens, single.avg_in_tokens);
    }

    #[test]
    fn token_averages_match_sums(seed in any::<u64>(), size in 1usize..100) {
        let rs = records(seed, size);
        let s = cost_summary(&rs, &Pricing::default()).unwrap();
        let total_in: u64 = rs.iter().flat_map(|r| r.calls.iter()).map(|c| c.usage.in_tokens).sum();
        prop_assert!((s.avg_in_tokens - total_in as f64 / size as f64).abs() < 1e-9);
    }

    #[test]
    fn delta_identity_and_sign(v in 0.1f64..100.0, reference in 0.1f64..100.0) {
        prop_assert_eq!(relative_delta(v, v).unwrap(), "+0.00%");
        let s = relative_delta(v, reference).unwrap();
        let pct = relative_delta_pct(v, reference).unwrap();
        prop_assert!(s.starts_with('+') || s.starts_with('-'));
        prop_assert!(s.ends_with('%'));
        if pct <= -0.005 {
            prop_assert!(s.starts_with('-'));
        }
    }
}

#[test]
fn cost_example() {
    let mut rs = records(1, 1);
    rs[0].calls.truncate(1);
    rs[0].calls[0].usage = Usage::new(100, 50);
    let s = cost_summary(&rs, &Pricing::new(1e-6, 2e-6).unwrap()).unwrap();
    assert!((s.avg_cost_usd - 2.0e-4).abs() < 1e-18);
}
