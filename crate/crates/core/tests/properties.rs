use proptest::prelude::*;

use abstain::adaptive::{AdaptiveState, CostSchedule, TsybakovParams};
use abstain::environments::{parse_replay, tsybakov_costs, verify_tsybakov, write_replay, Episode};
use abstain::forecaster::{
    decision_policy, exact_mixable_rate, f_function, g_function, mix_loss, posterior_from_losses,
    Advice, Decision, ForecasterState, Outcome,
};
use abstain::harness::{check_trace, run, CostSpec, Mode, RunConfig};
use abstain::littlestone::{ldim, HypothesisClass, Soa};
use abstain::multiclass::{ClassAdvice, MulticlassForecaster};
use abstain::rng::stream;

fn matrix(max_n: usize, max_t: usize) -> impl Strategy<Value = Vec<Vec<u8>>> {
    (1..=max_n, 1..=max_t)
        .prop_flat_map(|(n, t)| prop::collection::vec(prop::collection::vec(0u8..=1, n), t))
}

proptest! {
    #[test]
    fn posterior_is_a_distribution(losses in prop::collection::vec(0u64..1_000_000, 1..40), eta in 1e-3f64..5.0) {
        let post = posterior_from_losses(&losses, eta);
        let total: f64 = post.probs().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(post.probs().iter().all(|&q| q >= 0.0));
        let shifted: Vec<u64> = losses.iter().map(|l| l + 17).collect();
        let again = posterior_from_losses(&shifted, eta);
        for (a, b) in post.probs().iter().zip(again.probs()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn policy_is_well_formed(p in 0.0f64..=1.0) {
        let policy = decision_policy(p).unwrap();
        prop_assert!(policy.p_star >= 0.5 && policy.p_star <= 1.0);
        prop_assert!((0.0..=1.0).contains(&policy.alpha));
        prop_assert!((policy.alpha - 2.0 * (1.0 - policy.p_star)).abs() < 1e-15);
        prop_assert_eq!(policy.k_star.label(), (p >= 0.5) as u8);
    }

    #[test]
    fn dominance_holds_below_the_exact_rate(c in 0.0f64..0.5, r in 0.0f64..=1.0, shrink in 0.0f64..=1.0) {
        let eta = exact_mixable_rate(c).unwrap() * shrink;
        prop_assume!(eta > 1e-9);
        let (g, f) = (g_function(r, c).unwrap(), f_function(r, eta).unwrap());
        prop_assert!(g <= f + 1e-12, "c={} eta={} r={}: g={} f={}", c, eta, r, g, f);
    }

    #[test]
    fn mix_loss_sits_between_min_and_mean(m in matrix(8, 1), eta in 1e-3f64..5.0, seed in any::<u64>()) {
        let n = m[0].len();
        let losses: Vec<u64> = (0..n as u64).map(|i| (seed >> i) % 7).collect();
        let post = posterior_from_losses(&losses, eta);
        let mix = mix_loss(&post, &m[0], eta).unwrap();
        let mean: f64 = post.probs().iter().zip(&m[0]).map(|(q, &l)| q * l as f64).sum();
        let min = *m[0].iter().min().unwrap() as f64;
        prop_assert!(mix <= mean + 1e-12);
        prop_assert!(mix >= min - 1e-12);
    }

    #[test]
    fn cumulative_mix_loss_is_bounded(m in matrix(12, 60), eta in 1e-2f64..4.0) {
        let n = m[0].len();
        let mut state = ForecasterState::new(n, eta).unwrap();
        let mut total = 0.0;
        for row in &m {
            total += mix_loss(&state.posterior(), row, eta).unwrap();
            state.charge(row).unwrap();
        }
        let best = *state.cum_losses().iter().min().unwrap() as f64;
        prop_assert!(total <= best + (n as f64).ln() / eta + 1e-9);
    }

    #[test]
    fn adaptive_rates_follow_the_counter(n in 2usize..20, costs in prop::collection::vec(0.0f64..=0.5, 1..200)) {
        let mut state = AdaptiveState::new(n).unwrap();
        let advice = Advice::new(vec![0; n]).unwrap();
        let mut last_eta = state.eta();
        let mut last_d = state.d();
        for &c in &costs {
            state.finish_round(&advice, Outcome::ZERO, c).unwrap();
            prop_assert!(state.eta() <= last_eta);
            prop_assert!(state.d() >= last_d && state.d() <= last_d + 1);
            let expected = ((n as f64).ln() / state.d() as f64).sqrt().min(1.0);
            prop_assert!((state.eta() - expected).abs() < 1e-15);
            last_eta = state.eta();
            last_d = state.d();
        }
    }

    #[test]
    fn generated_margin_schedules_pass_their_check(alpha in 0.0f64..0.95, beta in 0.2f64..5.0, t in 1usize..3000, seed in any::<u64>()) {
        let params = TsybakovParams::new(alpha, beta).unwrap();
        let costs = tsybakov_costs(t, params, seed).unwrap();
        prop_assert_eq!(costs.len(), t);
        let check = verify_tsybakov(&costs, params);
        prop_assert!(check.pass, "{:?}", check);
    }

    #[test]
    fn episode_files_round_trip(m in matrix(6, 30), cost_seed in any::<u64>(), labels in any::<u64>()) {
        let costs: Vec<f64> = (0..m.len()).map(|i| ((cost_seed >> (i % 60)) % 1000) as f64 / 2000.0).collect();
        let rounds = m
            .iter()
            .zip(&costs)
            .enumerate()
            .map(|(i, (row, &cost))| abstain::environments::Round {
                advice: Advice::new(row.clone()).unwrap(),
                outcome: Outcome::new((labels >> (i % 64) & 1) as u8).unwrap(),
                cost,
            })
            .collect();
        let ep = Episode::new(m[0].len(), rounds).unwrap();
        let text = write_replay(&ep);
        let back = parse_replay(&text).unwrap();
        prop_assert_eq!(write_replay(&back), text);
        prop_assert_eq!(back, ep);
    }

    #[test]
    fn two_class_forecaster_matches_binary(m in matrix(10, 40), labels in any::<u64>(), c in 0.0f64..=0.5, eta in 0.05f64..3.0) {
        let n = m[0].len();
        let mut binary = ForecasterState::new(n, eta).unwrap();
        let mut multi = MulticlassForecaster::new(n, 2, eta).unwrap();
        let mut rng = stream(0, 0);
        for (i, row) in m.iter().enumerate() {
            let y = (labels >> (i % 64) & 1) as u8;
            let advice = Advice::new(row.clone()).unwrap();
            let prediction = binary.predict(&advice).unwrap();
            let b = prediction.settle(&advice, Outcome::new(y).unwrap(), c, eta, Decision::Abstain).unwrap();
            binary.update(&advice, Outcome::new(y).unwrap()).unwrap();
            let class_advice = ClassAdvice::new(row.iter().map(|&x| x as usize).collect(), 2).unwrap();
            let (_, s) = multi.step(&class_advice, y as usize, c, &mut rng).unwrap();
            prop_assert!((b.mix_loss - s.mix_loss).abs() < 1e-12);
            prop_assert!((b.r - s.r).abs() < 1e-12);
            // Exact ties at p = 1/2 may break to different labels; alpha is 1 there.
            prop_assert!((b.expected_loss - s.expected_loss).abs() < 1e-12);
        }
    }

    #[test]
    fn soa_mistakes_never_exceed_the_dimension(m in 1usize..=5, mask in any::<u64>(), target in any::<usize>(), xs in prop::collection::vec(0usize..5, 0..30)) {
        let all = 1usize << m;
        let hyps: Vec<u16> = (0..all as u16).filter(|&h| mask >> (h % 64) & 1 == 1).collect();
        prop_assume!(!hyps.is_empty());
        let class = HypothesisClass::new(m, hyps).unwrap();
        let l = ldim(&class);
        prop_assert!(l as f64 <= (class.len() as f64).log2() + 1e-12);
        let h = target % class.len();
        let mut soa = Soa::new(class.clone());
        let mut history = Vec::new();
        let mut mistakes = 0;
        for x in xs.into_iter().map(|x| x % m) {
            let y = class.label(h, x);
            mistakes += (soa.predict(&history, x).unwrap() != y) as u32;
            history.push((x, y));
        }
        prop_assert!(mistakes <= l);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn reports_recompute_from_their_files(mode_idx in 0usize..3, n in 2usize..8, t in 1usize..400, seed in any::<u64>()) {
        let mode = [Mode::BinaryFixedC, Mode::BinaryChangingC, Mode::Adaptive][mode_idx];
        let mut config = RunConfig::new(mode, n, t, seed);
        if mode != Mode::BinaryFixedC {
            config.costs = Some(CostSpec::Uniform { lo: 0.0, hi: 0.5 });
        }
        let out = run(&config).unwrap();
        let check = check_trace(&out.report, &out.trace, &out.env_text).unwrap();
        prop_assert!(check.pass, "{:?}", check);
        let learner: f64 = out.trace.iter().map(|r| r.expected_loss).sum();
        prop_assert_eq!(learner - out.report.best_expert_loss as f64, out.report.regret);

        let again = run(&config).unwrap();
        prop_assert_eq!(again.report.to_toml(), out.report.to_toml());
        prop_assert_eq!(again.env_text, out.env_text);
    }
}

#[test]
fn constant_schedule_round_trip() {
    let costs = CostSchedule::constant(0.3, 5).unwrap();
    assert_eq!(costs.costs(), &[0.3; 5]);
}
