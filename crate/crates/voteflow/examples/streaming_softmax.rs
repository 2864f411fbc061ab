//! Single-pass softmax and moment reductions: feed a vector tile by tile,
//! then normalize against the reduced statistics and compare with the
//! two-pass reference.
//!
//! Run with: cargo run --example streaming_softmax

use voteflow::numcore::{softmax_reference, DenseVector, MomentStats, SoftmaxStats};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let values: Vec<f64> = (0..24).map(|i| ((i * 7 % 13) as f64) * 0.4 - 2.0).collect();

    // Reduce in uneven tiles, as a hardware FIFO would see them.
    let mut stats = SoftmaxStats::new();
    for tile in values.chunks(5) {
        stats.update(tile)?;
        println!(
            "after {:2} elements: max {:+.3}, exp_sum {:.6}",
            stats.count(),
            stats.max(),
            stats.exp_sum()
        );
    }

    let reference = softmax_reference(&DenseVector::new(values.clone())?)?;
    let mut worst = 0.0f64;
    for (i, x) in values.iter().enumerate() {
        let streamed = stats.normalize(*x)?;
        worst = worst.max((streamed - reference[i]).abs());
    }
    println!("max |streamed - reference| = {worst:.2e}");

    // The same pattern with sum / sum-of-squares for layernorm.
    let mut moments = MomentStats::new();
    moments.extend(&values);
    let (mean, std) = moments.finalize()?;
    println!("moments: mean {mean:.6}, std {std:.6}");
    Ok(())
}
