//! Compares the voting eviction policy against the accumulated-score and
//! sliding-window baselines by retained attention mass, on seeded toy
//! traces and on the constructed bias scenarios.
//!
//! Run with: cargo run --example eviction_quality

use voteflow::attnbench::{
    compare_policies, gen_bias_scenario, gen_toy_trace, PolicyKind, ScenarioKind, ScenarioParams,
    ToyModelConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut traces = Vec::new();
    for seed in [1, 2, 3] {
        traces.push(gen_toy_trace(&ToyModelConfig::toy(seed))?);
    }
    for kind in ScenarioKind::ALL {
        traces.push(gen_bias_scenario(kind, &ScenarioParams::default())?);
    }

    let ratios = [0.1, 0.25, 0.5];
    let rows = compare_policies(&traces, &PolicyKind::COMPARED, &ratios, 8, 128)?;

    println!(
        "{:<12} {:>6} {:>7}  {:>10} {:>10} {:>10}",
        "trace", "ratio", "target", "voting", "h2o", "sliding"
    );
    for trace in &traces {
        for ratio in ratios {
            let mass = |policy: &str| {
                rows.iter()
                    .find(|r| {
                        r.trace_label == trace.label && r.policy_label == policy && r.ratio == ratio
                    })
                    .map(|r| r.mean_mass)
                    .unwrap()
            };
            let target = rows
                .iter()
                .find(|r| r.trace_label == trace.label && r.ratio == ratio)
                .map(|r| r.target)
                .unwrap();
            println!(
                "{:<12} {:>6.2} {:>7}  {:>10.4} {:>10.4} {:>10.4}",
                trace.label,
                ratio,
                target,
                mass("voting"),
                mass("h2o"),
                mass("sliding-window"),
            );
        }
    }
    Ok(())
}
