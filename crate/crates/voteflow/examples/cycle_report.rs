//! Simulates prefill and generation of the 7B-class workload and prints
//! the per-operator cycle and byte accounting.
//!
//! Run with: cargo run --release --example cycle_report

use voteflow::cyclesim::{simulate_generation, simulate_prefill, ArchConfig, WorkloadConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut w = WorkloadConfig::llama2_7b();
    w.gen_len = 256;
    let arch = ArchConfig::flexible();

    for report in [
        simulate_prefill(&w, &arch)?,
        simulate_generation(&w, &arch)?,
    ] {
        println!("== {:?}: {} steps", report.phase, report.steps);
        println!(
            "{:<16} {:>16} {:>16} {:>16} {:>18}",
            "op", "cycles", "compute", "memory", "bytes"
        );
        for (kind, t) in &report.per_op {
            println!(
                "{:<16} {:>16} {:>16} {:>16} {:>18}",
                kind.label(),
                t.cycles,
                t.compute_cycles,
                t.memory_cycles,
                t.bytes
            );
        }
        println!(
            "total {} cycles (overhead {}), utilization {:.4}",
            report.total_cycles, report.overhead_cycles, report.utilization
        );
        println!(
            "bytes: weights {} | kv read {} | kv write {} | votes {}",
            report.bytes.weights, report.bytes.kv_read, report.bytes.kv_write, report.bytes.votes
        );
        if let Some(tps) = report.tokens_per_second {
            println!("throughput: {tps:.3} tokens/s");
        }
        println!();
    }
    Ok(())
}
