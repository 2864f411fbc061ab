//! Generative property tests over random score traces: every policy keeps
//! the reserved prefix, respects its target, and replays deterministically;
//! voting increments stay bounded and threshold decisions are invariant to
//! inflating above-threshold scores.

use proptest::prelude::*;

use voteflow::eviction::{
    adaptive_threshold, CachePolicy, EvictionConfig, H2oState, KVCacheState, ScoreRow,
    SlidingWindowState,
};

fn normalize(raw: &[f64]) -> Vec<f64> {
    let sum: f64 = raw.iter().sum();
    raw.iter().map(|x| x / sum).collect()
}

fn rows_from(raw: &[f64], heads: usize) -> Vec<ScoreRow> {
    // Rotate the raw weights per head so heads disagree.
    (0..heads)
        .map(|h| {
            let mut v: Vec<f64> = raw.to_vec();
            v.rotate_left(h % raw.len().max(1));
            ScoreRow::new(normalize(&v), h).unwrap()
        })
        .collect()
}

/// A trace: per step t, t raw weights for the grown cache.
fn trace_strategy() -> impl Strategy<Value = (Vec<Vec<f64>>, usize, usize, f64)> {
    (2usize..=3, 0.1f64..=1.0, 8usize..=28, 10usize..=30).prop_flat_map(
        |(heads, ratio, prompt, gen)| {
            let steps: Vec<_> = (1..=prompt + gen)
                .map(|t| proptest::collection::vec(0.01f64..1.0, t))
                .collect();
            (steps, Just(prompt), Just(heads), Just(ratio))
        },
    )
}

fn run_policy(
    policy: &mut dyn CachePolicy,
    steps: &[Vec<f64>],
    prompt: usize,
    heads: usize,
) -> Vec<usize> {
    let mut evicted = Vec::new();
    for (i, raw) in steps.iter().enumerate().take(prompt) {
        let rows = rows_from(&raw[..i + 1], heads);
        policy.prefill_step(&rows, i + 1).unwrap();
    }
    evicted.extend(policy.transition_to_generation().unwrap());
    for raw in steps.iter().skip(prompt) {
        // The cache never holds more than t-1 entries at step t, so the
        // step's weights always cover the live set plus the new token.
        let live = policy.live_positions().len() + 1;
        let rows = rows_from(&raw[..live], heads);
        evicted.extend(policy.generation_step(&rows).unwrap());
    }
    evicted
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reserved_positions_survive_every_policy(
        (steps, prompt, heads, ratio) in trace_strategy(),
        reserved in 0usize..=6,
    ) {
        let cfg = EvictionConfig::new(ratio, heads).unwrap().with_reserved(reserved);
        let policies: Vec<Box<dyn CachePolicy>> = vec![
            Box::new(KVCacheState::new(prompt, cfg.clone()).unwrap()),
            Box::new(H2oState::new(prompt, cfg.clone()).unwrap()),
            Box::new(SlidingWindowState::new(prompt, cfg.clone()).unwrap()),
        ];
        for mut policy in policies {
            let evicted = run_policy(policy.as_mut(), &steps, prompt, heads);
            prop_assert!(evicted.iter().all(|p| *p >= reserved));
            let live = policy.live_positions();
            for (r, p) in live.iter().enumerate().take(reserved) {
                prop_assert_eq!(*p, r);
            }
            prop_assert!(live.len() <= policy.target());
            // Live positions strictly increasing (well-formed cache).
            prop_assert!(live.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn replay_is_deterministic(
        (steps, prompt, heads, ratio) in trace_strategy(),
    ) {
        let cfg = EvictionConfig::new(ratio, heads).unwrap().with_reserved(2);
        let mut a = KVCacheState::new(prompt, cfg.clone()).unwrap();
        let mut b = KVCacheState::new(prompt, cfg).unwrap();
        let ea = run_policy(&mut a, &steps, prompt, heads);
        let eb = run_policy(&mut b, &steps, prompt, heads);
        prop_assert_eq!(ea, eb);
        prop_assert_eq!(a.live_positions(), b.live_positions());
    }

    #[test]
    fn vote_increment_bounded_by_one(
        raw in proptest::collection::vec(0.01f64..1.0, 4..40),
        heads in 1usize..=4,
    ) {
        let n = raw.len();
        let cfg = EvictionConfig::new(1.0, heads).unwrap().with_reserved(0);
        let mut st = KVCacheState::new(n, cfg).unwrap();
        for t in 1..=n {
            let uniform = vec![1.0; t];
            st.prefill_step(&rows_from(&uniform, heads), t).unwrap();
        }
        let before: Vec<f64> = (0..n).map(|p| st.vote_count(p).unwrap()).collect();
        st.cast_votes(&rows_from(&raw, heads)).unwrap();
        for (p, prior) in before.iter().enumerate() {
            let delta = st.vote_count(p).unwrap() - prior;
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&delta));
        }
    }

    #[test]
    fn votes_ignore_above_threshold_magnitudes(
        raw in proptest::collection::vec(0.01f64..1.0, 6..24),
        boost_idx in 0usize..6,
        boost in 1.5f64..4.0,
    ) {
        // Inflating one above-threshold score without changing anyone's
        // below-threshold relation leaves the indicator set untouched.
        let cfg = EvictionConfig::new(1.0, 1).unwrap().with_reserved(0);
        let scores = normalize(&raw);
        let row = ScoreRow::new(scores.clone(), 0).unwrap();
        let t = adaptive_threshold(&row, &cfg);
        prop_assume!(t > 0.0);
        let below: Vec<usize> = (0..scores.len()).filter(|i| scores[*i] < t).collect();
        prop_assume!(!below.is_empty());

        let idx = boost_idx % scores.len();
        prop_assume!(scores[idx] >= t);
        let mut boosted = scores.clone();
        boosted[idx] *= boost;
        let boosted_row = ScoreRow::new(normalize(&boosted), 0).unwrap();
        let tb = adaptive_threshold(&boosted_row, &cfg);
        let below_b: Vec<usize> = (0..boosted.len())
            .filter(|i| boosted_row.scores()[*i] < tb)
            .collect();
        // The indicator depends only on the below-threshold relation; when
        // the crossing pattern is unchanged the vote set is identical.
        prop_assume!(below_b.len() == below.len());
        prop_assert_eq!(below, below_b);
    }

    #[test]
    fn h2o_and_window_hold_their_targets(
        (steps, prompt, heads, ratio) in trace_strategy(),
    ) {
        let cfg = EvictionConfig::new(ratio, heads).unwrap().with_reserved(2);
        let mut h2o = H2oState::new(prompt, cfg.clone()).unwrap();
        let mut window = SlidingWindowState::new(prompt, cfg).unwrap();
        run_policy(&mut h2o, &steps, prompt, heads);
        run_policy(&mut window, &steps, prompt, heads);
        prop_assert!(h2o.live_positions().len() <= h2o.target());
        prop_assert!(window.live_positions().len() <= window.target());
        // The window's live set is exactly reserved prefix + newest tail.
        let live = window.live_positions();
        let total = steps.len();
        let tail = live.len().saturating_sub(2);
        for (i, p) in live.iter().rev().take(tail).enumerate() {
            prop_assert_eq!(*p, total - 1 - i);
        }
    }
}
