//! Replays the constructed bias scenarios and shows where accumulated
//! -score eviction diverges from voting: fresh positions pruned for having
//! short score histories, and a one-shot outlier pinned in the cache by its
//! stale spike.
//!
//! Run with: cargo run --example bias_scenarios

use voteflow::attnbench::{
    bench_eviction_config, gen_bias_scenario, replay_policy, PolicyKind, ReplayConfig,
    ScenarioKind, ScenarioParams,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = ScenarioParams::default();

    for kind in [ScenarioKind::ItemCount, ScenarioKind::Outlier] {
        let trace = gen_bias_scenario(kind, &params)?;
        let cfg = ReplayConfig {
            prompt_len: 128,
            eviction: bench_eviction_config(0.25, 1, 8, trace.seq_len)?,
        };
        let voting = replay_policy(&trace, PolicyKind::Voting, &cfg)?;
        let h2o = replay_policy(&trace, PolicyKind::H2o, &cfg)?;

        println!(
            "== {} scenario (target {}), retained mass:",
            trace.label,
            cfg.eviction.explicit_target.unwrap()
        );
        println!(
            "   voting {:.4} | accumulated {:.4}",
            voting.mean_mass, h2o.mean_mass
        );

        let last = |evs: &Vec<usize>| -> Vec<usize> { evs.iter().rev().take(6).copied().collect() };
        println!(
            "   last voting victims:      {:?}",
            last(&voting.evictions[0])
        );
        println!("   last accumulated victims: {:?}", last(&h2o.evictions[0]));

        if kind == ScenarioKind::Outlier {
            println!(
                "   position 30 (stale spike): voting evicted = {}, accumulated evicted = {}",
                voting.evictions[0].contains(&30),
                h2o.evictions[0].contains(&30)
            );
        }
        println!();
    }

    // The sink scenario, with and without a reserved prefix.
    let trace = gen_bias_scenario(ScenarioKind::Sink, &params)?;
    for reserved in [8usize, 0] {
        let cfg = ReplayConfig {
            prompt_len: 128,
            eviction: bench_eviction_config(0.1, 1, reserved, trace.seq_len)?,
        };
        let report = replay_policy(&trace, PolicyKind::Voting, &cfg)?;
        println!(
            "sink scenario, reserved {reserved}: mean retained mass {:.4}",
            report.mean_mass
        );
    }
    Ok(())
}
