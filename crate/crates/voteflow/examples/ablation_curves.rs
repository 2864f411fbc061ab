//! Prints the two ablation curves: attention latency of the fixed-tree
//! baseline vs flexible dataflow vs flexible + element-serial scheduling,
//! and the attention-latency speedup from voting-based eviction.
//!
//! Run with: cargo run --release --example ablation_curves

use voteflow::cyclesim::ablate::{ablation_dataflow, ablation_eviction};
use voteflow::cyclesim::{ArchConfig, WorkloadConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut w = WorkloadConfig::llama2_7b();
    w.gen_len = 1;

    println!("attention latency per token (cycles), prompt 512:");
    println!(
        "{:>6} {:>12} {:>12} {:>8} {:>12} {:>8}",
        "G", "baseline", "flexible", "ratio", "flex+es", "ratio"
    );
    let gen_lens = [1, 64, 128, 256, 384, 512, 640, 768, 896, 1024];
    for p in ablation_dataflow(&w, &gen_lens)? {
        println!(
            "{:>6} {:>12.0} {:>12.0} {:>8.4} {:>12.0} {:>8.4}",
            p.gen_len,
            p.baseline_avg,
            p.flexible_avg,
            p.flexible_ratio(),
            p.flexible_es_avg,
            p.flexible_es_ratio()
        );
    }

    println!("\neviction speedup over the growing cache:");
    println!(
        "{:>6} {:>6} {:>8} {:>10}",
        "ratio", "G", "target", "speedup"
    );
    let points = ablation_eviction(
        &w,
        &ArchConfig::flexible(),
        &[0.1, 0.25, 0.5],
        &[128, 256, 512, 768, 1024],
    )?;
    for p in &points {
        println!(
            "{:>6.2} {:>6} {:>8} {:>10.3}",
            p.ratio, p.gen_len, p.target, p.speedup
        );
    }
    let min = points
        .iter()
        .map(|p| p.speedup)
        .fold(f64::INFINITY, f64::min);
    let max = points.iter().map(|p| p.speedup).fold(0.0f64, f64::max);
    println!("speedup range [{min:.2}, {max:.2}]");
    Ok(())
}
