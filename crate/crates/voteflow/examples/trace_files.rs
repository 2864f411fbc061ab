//! Writes an attention trace to its binary file format, reads it back, and
//! exports a policy's retained-mass series as CSV.
//!
//! Run with: cargo run --example trace_files

use voteflow::attnbench::io::{read_trace, write_quality_csv, write_trace};
use voteflow::attnbench::{
    bench_eviction_config, gen_toy_trace, replay_policy, PolicyKind, ReplayConfig, ToyModelConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ToyModelConfig {
        seq_len: 96,
        ..ToyModelConfig::toy(11)
    };
    let trace = gen_toy_trace(&cfg)?;

    let dir = std::env::temp_dir();
    let trace_path = dir.join("voteflow-demo.trace");
    write_trace(&trace, std::fs::File::create(&trace_path)?)?;
    println!(
        "wrote {} ({} bytes)",
        trace_path.display(),
        std::fs::metadata(&trace_path)?.len()
    );

    let loaded = read_trace(std::fs::File::open(&trace_path)?)?;
    assert_eq!(trace, loaded);
    println!(
        "roundtrip ok: {} steps, {} layers, {} heads",
        loaded.seq_len, loaded.layers, loaded.heads
    );

    let replay = ReplayConfig {
        prompt_len: 48,
        eviction: bench_eviction_config(0.25, loaded.heads, 8, loaded.seq_len)?,
    };
    let report = replay_policy(&loaded, PolicyKind::Voting, &replay)?;
    let csv_path = dir.join("voteflow-demo-quality.csv");
    write_quality_csv(
        std::slice::from_ref(&report),
        std::fs::File::create(&csv_path)?,
    )?;
    println!(
        "replayed voting: mean retained mass {:.4}; series in {}",
        report.mean_mass,
        csv_path.display()
    );
    Ok(())
}
