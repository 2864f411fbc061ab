//! The five experiment commands, each producing a `ReportBundle`.

use rayon::prelude::*;

use crate::attnbench::{
    bench_eviction_config, gen_bias_scenario, gen_toy_trace, replay_policy, AttentionTrace,
    PolicyKind, ReplayConfig, ScenarioKind, ScenarioParams,
};
use crate::cli::config::ExperimentSpec;
use crate::cli::report::{fmt_f64, ReportBundle, Table};
use crate::cyclesim::ablate::{ablation_dataflow, ablation_eviction};
use crate::cyclesim::{simulate_generation, simulate_prefill, CycleReport, SimPhase};
use crate::error::{Error, Result};

fn phase_label(phase: SimPhase) -> &'static str {
    match phase {
        SimPhase::Prefill => "prefill",
        SimPhase::Generation => "generation",
    }
}

fn push_report_rows(table: &mut Table, hash: &str, report: &CycleReport) {
    for (kind, totals) in &report.per_op {
        table.push(vec![
            hash.to_string(),
            phase_label(report.phase).to_string(),
            kind.label().to_string(),
            totals.cycles.to_string(),
            totals.compute_cycles.to_string(),
            totals.memory_cycles.to_string(),
            totals.bytes.to_string(),
            totals.invocations.to_string(),
        ]);
    }
}

fn summary_row(hash: &str, report: &CycleReport) -> Vec<String> {
    vec![
        hash.to_string(),
        phase_label(report.phase).to_string(),
        report.steps.to_string(),
        report.total_cycles.to_string(),
        report.overhead_cycles.to_string(),
        report.bytes.weights.to_string(),
        report.bytes.kv_read.to_string(),
        report.bytes.kv_write.to_string(),
        report.bytes.votes.to_string(),
        fmt_f64(report.utilization),
        report.tokens_per_second.map(fmt_f64).unwrap_or_default(),
        report
            .attention_avg_per_token
            .map(fmt_f64)
            .unwrap_or_default(),
    ]
}

/// Full prefill + generation simulation of the configured workload.
pub fn simulate(spec: &ExperimentSpec) -> Result<ReportBundle> {
    let w = spec.require_workload()?;
    let hash = spec.config_hash();
    let prefill = simulate_prefill(w, &spec.arch)?;
    let generation = simulate_generation(w, &spec.arch)?;

    let mut bundle = ReportBundle::new("simulate", &hash, spec.seed);
    let mut ops = Table::new(
        "simulate_ops",
        &[
            "config_hash",
            "phase",
            "op",
            "cycles",
            "compute_cycles",
            "memory_cycles",
            "bytes",
            "invocations",
        ],
    );
    push_report_rows(&mut ops, &hash, &prefill);
    push_report_rows(&mut ops, &hash, &generation);
    bundle.tables.push(ops);

    let mut summary = Table::new(
        "simulate_summary",
        &[
            "config_hash",
            "phase",
            "steps",
            "total_cycles",
            "overhead_cycles",
            "weights_bytes",
            "kv_read_bytes",
            "kv_write_bytes",
            "votes_bytes",
            "utilization",
            "tokens_per_second",
            "attention_avg_cycles",
        ],
    );
    summary.push(summary_row(&hash, &prefill));
    summary.push(summary_row(&hash, &generation));
    bundle.tables.push(summary);

    let tps = generation.tokens_per_second.expect("generation report");
    bundle.summary = serde_json::json!({
        "prefill": prefill,
        "generation": generation,
    });
    bundle.digest = format!(
        "workload: {} layers, hidden {}, heads {}, ffn {}, prompt {}, gen {}\n\
         prefill:   {} cycles ({:.3} ms at {} GHz)\n\
         generation: {} cycles, {:.3} tokens/s, utilization {:.4}\n\
         attention avg: {:.1} cycles/token, eviction {}\n",
        w.layers,
        w.hidden,
        w.heads,
        w.ffn,
        w.prompt_len,
        w.gen_len,
        prefill.total_cycles,
        prefill.total_cycles as f64 / (spec.arch.frequency_ghz * 1e6),
        spec.arch.frequency_ghz,
        generation.total_cycles,
        tps,
        generation.utilization,
        generation.attention_avg_per_token.unwrap_or(0.0),
        if w.eviction.is_some() { "on" } else { "off" },
    );
    Ok(bundle)
}

/// Attention-latency curves for the three engine configurations.
pub fn ablate_dataflow(spec: &ExperimentSpec) -> Result<ReportBundle> {
    let w = spec.require_workload()?;
    if spec.sweep.gen_lens.is_empty() {
        return Err(Error::invalid_config(
            "ablate-dataflow needs sweep.gen_lens",
        ));
    }
    let hash = spec.config_hash();
    let points = ablation_dataflow(w, &spec.sweep.gen_lens)?;

    let mut bundle = ReportBundle::new("ablate-dataflow", &hash, spec.seed);
    let mut table = Table::new(
        "ablate_dataflow",
        &[
            "config_hash",
            "gen_len",
            "baseline_avg_cycles",
            "flexible_avg_cycles",
            "flexible_es_avg_cycles",
            "flexible_ratio",
            "flexible_es_ratio",
        ],
    );
    for p in &points {
        table.push(vec![
            hash.clone(),
            p.gen_len.to_string(),
            fmt_f64(p.baseline_avg),
            fmt_f64(p.flexible_avg),
            fmt_f64(p.flexible_es_avg),
            fmt_f64(p.flexible_ratio()),
            fmt_f64(p.flexible_es_ratio()),
        ]);
    }
    bundle.tables.push(table);

    let worst = points
        .iter()
        .map(|p| p.flexible_ratio())
        .fold(0.0f64, f64::max);
    let best_es = points
        .iter()
        .map(|p| p.flexible_es_ratio())
        .fold(0.0f64, f64::max);
    bundle.summary = serde_json::json!({
        "points": points,
        "worst_flexible_ratio": worst,
        "worst_flexible_es_ratio": best_es,
    });
    bundle.digest = format!(
        "dataflow ablation over {} generation lengths\n\
         flexible vs baseline: worst ratio {:.4} (latency reduction {:.1}%)\n\
         flexible+element-serial vs baseline: worst ratio {:.4}\n",
        points.len(),
        worst,
        (1.0 - worst) * 100.0,
        best_es,
    );
    Ok(bundle)
}

/// Eviction-on vs growing-cache attention-latency speedups.
pub fn ablate_eviction(spec: &ExperimentSpec) -> Result<ReportBundle> {
    let w = spec.require_workload()?;
    if spec.sweep.gen_lens.is_empty() || spec.sweep.ratios.is_empty() {
        return Err(Error::invalid_config(
            "ablate-eviction needs sweep.gen_lens and sweep.ratios",
        ));
    }
    let hash = spec.config_hash();
    let points = ablation_eviction(w, &spec.arch, &spec.sweep.ratios, &spec.sweep.gen_lens)?;

    let mut bundle = ReportBundle::new("ablate-eviction", &hash, spec.seed);
    let mut table = Table::new(
        "ablate_eviction",
        &[
            "config_hash",
            "ratio",
            "gen_len",
            "target",
            "eviction_avg_cycles",
            "full_cache_avg_cycles",
            "speedup",
        ],
    );
    for p in &points {
        table.push(vec![
            hash.clone(),
            fmt_f64(p.ratio),
            p.gen_len.to_string(),
            p.target.to_string(),
            fmt_f64(p.eviction_avg),
            fmt_f64(p.full_cache_avg),
            fmt_f64(p.speedup),
        ]);
    }
    bundle.tables.push(table);

    let min = points
        .iter()
        .map(|p| p.speedup)
        .fold(f64::INFINITY, f64::min);
    let max = points.iter().map(|p| p.speedup).fold(0.0f64, f64::max);
    bundle.summary = serde_json::json!({
        "points": points,
        "speedup_min": min,
        "speedup_max": max,
    });
    bundle.digest = format!(
        "eviction ablation over {} (ratio, gen_len) points\n\
         attention-latency speedup spans [{:.3}, {:.3}]\n",
        points.len(),
        min,
        max,
    );
    Ok(bundle)
}

struct BenchJob {
    trace_idx: usize,
    ratio: f64,
    policy: PolicyKind,
}

/// Retained-attention-mass comparison of the three policies across toy
/// traces and bias scenarios.
pub fn evict_bench(spec: &ExperimentSpec) -> Result<ReportBundle> {
    let bench = &spec.bench;
    if bench.prompt == 0 || bench.prompt >= bench.seq_len {
        return Err(Error::invalid_config(format!(
            "bench.prompt {} must be in 1..seq_len {}",
            bench.prompt, bench.seq_len
        )));
    }
    let hash = spec.config_hash();

    let mut traces: Vec<AttentionTrace> = Vec::new();
    for &seed in &bench.seeds {
        traces.push(gen_toy_trace(&spec.bench_toy(seed))?);
    }
    let params = ScenarioParams {
        seq_len: bench.seq_len,
        seed: spec.seed,
    };
    for name in &bench.scenarios {
        traces.push(gen_bias_scenario(ScenarioKind::parse(name)?, &params)?);
    }

    let mut jobs = Vec::new();
    for (trace_idx, _) in traces.iter().enumerate() {
        for &ratio in &bench.ratios {
            for policy in PolicyKind::COMPARED {
                jobs.push(BenchJob {
                    trace_idx,
                    ratio,
                    policy,
                });
            }
        }
    }

    let results: Vec<_> = jobs
        .par_iter()
        .map(|job| {
            let trace = &traces[job.trace_idx];
            let eviction =
                bench_eviction_config(job.ratio, trace.heads, bench.reserved, trace.seq_len)?;
            let cfg = ReplayConfig {
                prompt_len: bench.prompt,
                eviction,
            };
            replay_policy(trace, job.policy, &cfg)
        })
        .collect::<Result<_>>()?;

    let mut bundle = ReportBundle::new("evict-bench", &hash, spec.seed);
    let mut table = Table::new(
        "evict_bench",
        &[
            "config_hash",
            "trace",
            "policy",
            "ratio",
            "target",
            "mean_retained_mass",
            "min_retained_mass",
        ],
    );
    for (job, report) in jobs.iter().zip(&results) {
        table.push(vec![
            hash.clone(),
            report.trace_label.clone(),
            report.policy_label.clone(),
            fmt_f64(job.ratio),
            report
                .eviction
                .explicit_target
                .map(|t| t.to_string())
                .unwrap_or_default(),
            fmt_f64(report.mean_mass),
            fmt_f64(report.min_mass),
        ]);
    }
    bundle.tables.push(table);

    // Full retained-mass series, one row per (run, step).
    let mut series = Table::new(
        "evict_bench_series",
        &[
            "config_hash",
            "trace",
            "policy",
            "ratio",
            "step",
            "retained_mass",
        ],
    );
    for (job, report) in jobs.iter().zip(&results) {
        for (i, mass) in report.per_step_mass.iter().enumerate() {
            series.push(vec![
                hash.clone(),
                report.trace_label.clone(),
                report.policy_label.clone(),
                fmt_f64(job.ratio),
                (i + 1).to_string(),
                fmt_f64(*mass),
            ]);
        }
    }
    bundle.tables.push(series);

    // The replayed traces themselves, in the binary trace format.
    for trace in &traces {
        let mut bytes = Vec::new();
        crate::attnbench::io::write_trace(trace, &mut bytes)?;
        bundle
            .blobs
            .push((format!("traces/{}.trace", trace.label), bytes));
    }

    let mut digest = format!(
        "policy quality over {} traces x {} ratios\n",
        traces.len(),
        bench.ratios.len()
    );
    for &ratio in &bench.ratios {
        let mean_of = |policy: PolicyKind| -> f64 {
            let sel: Vec<f64> = jobs
                .iter()
                .zip(&results)
                .filter(|(j, _)| j.ratio == ratio && j.policy == policy)
                .map(|(_, r)| r.mean_mass)
                .collect();
            sel.iter().sum::<f64>() / sel.len() as f64
        };
        digest.push_str(&format!(
            "ratio {:.2}: voting {:.4}  h2o {:.4}  sliding-window {:.4}\n",
            ratio,
            mean_of(PolicyKind::Voting),
            mean_of(PolicyKind::H2o),
            mean_of(PolicyKind::SlidingWindow),
        ));
    }
    bundle.digest = digest;
    bundle.summary = serde_json::json!({
        "traces": traces.iter().map(|t| t.label.clone()).collect::<Vec<_>>(),
        "ratios": bench.ratios,
        "rows": table_rows_json(&bundle.tables[0]),
    });
    Ok(bundle)
}

fn table_rows_json(table: &Table) -> serde_json::Value {
    let rows: Vec<serde_json::Value> = table
        .rows
        .iter()
        .map(|row| {
            let obj: serde_json::Map<String, serde_json::Value> = table
                .header
                .iter()
                .zip(row)
                .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
                .collect();
            serde_json::Value::Object(obj)
        })
        .collect();
    serde_json::Value::Array(rows)
}

/// Parses, validates, and echoes the canonical configuration.
pub fn validate_config(spec: &ExperimentSpec) -> Result<ReportBundle> {
    let mut bundle = ReportBundle::new("validate-config", &spec.config_hash(), spec.seed);
    bundle.digest = spec.canonical_toml();
    bundle.summary = serde_json::json!({
        "valid": true,
        "has_workload": spec.workload.is_some(),
    });
    Ok(bundle)
}
