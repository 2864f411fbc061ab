//! Ablation sweeps: dataflow/scheduling gains and eviction speedup, both
//! measured as attention-process latency averaged over generated tokens.

use serde::{Deserialize, Serialize};

use crate::cyclesim::{simulate_generation, ArchConfig, WorkloadConfig};
use crate::error::{Error, Result};
use crate::eviction::EvictionConfig;

/// Average attention latency per generated token for the three engine
/// configurations at one generation length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataflowAblationPoint {
    pub gen_len: usize,
    /// Fixed-tree engine with conventional SFU scheduling.
    pub baseline_avg: f64,
    /// Flexible engine, conventional SFU scheduling.
    pub flexible_avg: f64,
    /// Flexible engine with element-serial scheduling.
    pub flexible_es_avg: f64,
}

impl DataflowAblationPoint {
    pub fn flexible_ratio(&self) -> f64 {
        self.flexible_avg / self.baseline_avg
    }

    pub fn flexible_es_ratio(&self) -> f64 {
        self.flexible_es_avg / self.baseline_avg
    }
}

/// Sweeps generation length and reports the three-series attention-latency
/// curve. Generation averages need at least one token, so the sweep starts
/// at 1.
pub fn ablation_dataflow(
    w: &WorkloadConfig,
    gen_lens: &[usize],
) -> Result<Vec<DataflowAblationPoint>> {
    if gen_lens.contains(&0) {
        return Err(Error::invalid_argument(
            "generation averages are undefined at zero length; sweep from 1",
        ));
    }
    let baseline = ArchConfig::fixed_tree_baseline();
    let flexible = ArchConfig::flexible_conventional();
    let flexible_es = ArchConfig::flexible();
    let mut points = Vec::with_capacity(gen_lens.len());
    for &g in gen_lens {
        let mut wg = w.clone();
        wg.gen_len = g;
        wg.eviction = None;
        let avg = |arch: &ArchConfig| -> Result<f64> {
            Ok(simulate_generation(&wg, arch)?
                .attention_avg_per_token
                .expect("generation report"))
        };
        points.push(DataflowAblationPoint {
            gen_len: g,
            baseline_avg: avg(&baseline)?,
            flexible_avg: avg(&flexible)?,
            flexible_es_avg: avg(&flexible_es)?,
        });
    }
    Ok(points)
}

/// Eviction speedup at one (generation length, compression ratio) point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvictionAblationPoint {
    pub gen_len: usize,
    pub ratio: f64,
    pub target: usize,
    pub eviction_avg: f64,
    pub full_cache_avg: f64,
    pub speedup: f64,
}

/// Sweeps (generation length, ratio) and reports attention-latency speedup
/// of eviction-on over the same engine with the cache left to grow.
pub fn ablation_eviction(
    w: &WorkloadConfig,
    arch: &ArchConfig,
    ratios: &[f64],
    gen_lens: &[usize],
) -> Result<Vec<EvictionAblationPoint>> {
    if gen_lens.contains(&0) {
        return Err(Error::invalid_argument(
            "generation averages are undefined at zero length; sweep from 1",
        ));
    }
    let mut points = Vec::with_capacity(ratios.len() * gen_lens.len());
    for &ratio in ratios {
        for &g in gen_lens {
            let mut off = w.clone();
            off.gen_len = g;
            off.eviction = None;
            let full = simulate_generation(&off, arch)?
                .attention_avg_per_token
                .expect("generation report");

            let mut on = off.clone();
            let ev = EvictionConfig::new(ratio, w.heads)?;
            let target = crate::eviction::target_size(w.prompt_len, &ev);
            on.eviction = Some(ev);
            let evicted = simulate_generation(&on, arch)?
                .attention_avg_per_token
                .expect("generation report");

            points.push(EvictionAblationPoint {
                gen_len: g,
                ratio,
                target,
                eviction_avg: evicted,
                full_cache_avg: full,
                speedup: full / evicted,
            });
        }
    }
    Ok(points)
}
