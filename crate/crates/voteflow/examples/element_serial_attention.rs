//! One attention step wired the element-serial way: the score GEMV runs as
//! an inner product whose serial output feeds the online softmax reduction;
//! the output GEMV runs as an outer product whose serial input pulls
//! normalized scores one at a time. No full score vector is ever
//! materialized between the reduction and the normalization.
//!
//! Run with: cargo run --example element_serial_attention

use voteflow::cyclesim::{sfu_latency, NonlinearKind, SfuConfig};
use voteflow::dataflow::{qk_scores, sv_output, sv_output_streamed, KVLayout};
use voteflow::numcore::{softmax_reference, DenseVector, SoftmaxStats};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let d = 16;
    let l = 40;
    let q = DenseVector::new((0..d).map(|i| ((i * 5 % 7) as f64 - 3.0) * 0.2).collect())?;
    let rows: Vec<Vec<f64>> = (0..l)
        .map(|j| {
            (0..d)
                .map(|i| (((i + 3 * j) % 11) as f64 - 5.0) * 0.1)
                .collect()
        })
        .collect();
    let kcache = KVLayout::from_rows(&rows)?;
    let vcache = KVLayout::from_rows(&rows)?;

    // Score GEMV: inner product over the (l, d) key rows, reduction riding
    // the serial output.
    let mut stats = SoftmaxStats::new();
    let scores = qk_scores(&q, &kcache, |_, s| {
        stats.push(s).expect("finite score");
    })?;

    // Output GEMV: outer product, normalization riding the serial input.
    let out = sv_output_streamed(l, &vcache, |j| stats.normalize(scores[j]).expect("reduced"))?;

    // Reference: materialized softmax then the same weighted sum.
    let probs = softmax_reference(&scores)?;
    let reference = sv_output(&probs, &vcache)?;
    let worst = out
        .iter()
        .zip(reference.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    println!("pipelined vs materialized attention output: max |diff| = {worst:.2e}");

    // What the scheduling buys on the critical path.
    let serial = SfuConfig::default();
    let conventional = SfuConfig::default().conventional();
    println!(
        "\n{:>6} {:>22} {:>22}",
        "l", "conventional softmax", "element-serial"
    );
    for l in [64usize, 256, 1024, 4096] {
        println!(
            "{l:>6} {:>22} {:>22}",
            sfu_latency(NonlinearKind::Softmax, l, &conventional),
            sfu_latency(NonlinearKind::Softmax, l, &serial)
        );
    }
    Ok(())
}
