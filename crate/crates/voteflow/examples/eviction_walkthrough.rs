//! A small single-layer walkthrough of the voting policy: prompt steps in
//! the reserved and voting stages, the bulk shrink at the phase boundary,
//! and steady-state generation with one eviction per step.
//!
//! Run with: cargo run --example eviction_walkthrough

use voteflow::eviction::{CachePolicy, EvictionConfig, KVCacheState, ScoreRow};

fn recency_row(len: usize) -> ScoreRow {
    let weights: Vec<f64> = (0..len)
        .map(|j| (-((len - 1 - j) as f64) / 6.0).exp() + 0.01)
        .collect();
    let sum: f64 = weights.iter().sum();
    ScoreRow::new(weights.iter().map(|w| w / sum).collect(), 0).expect("valid row")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let prompt = 24;
    let cfg = EvictionConfig::new(0.5, 1)?.with_reserved(4);
    let mut cache = KVCacheState::new(prompt, cfg)?;
    println!(
        "prompt {prompt}, ratio 0.5, reserved 4 -> target {}",
        cache.target()
    );

    for t in 1..=prompt {
        cache.prefill_step(&[recency_row(t)], t)?;
    }
    println!(
        "after prefill: {} live positions, phase {:?}",
        cache.live_positions().len(),
        cache.phase()
    );

    let evicted = cache.transition_to_generation()?;
    println!(
        "transition evicted {} positions: {evicted:?}",
        evicted.len()
    );
    println!("live after shrink: {:?}", cache.live_positions());

    for step in 1..=6 {
        let rows = [recency_row(cache.live_positions().len() + 1)];
        let victim = cache.generation_step(&rows)?;
        println!(
            "gen step {step}: evicted {victim:?}, live {:?}",
            cache.live_positions()
        );
    }
    Ok(())
}
