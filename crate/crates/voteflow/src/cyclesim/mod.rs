//! Cycle-level performance model of the accelerator: reconfigurable PE
//! array, SFU scheduling, flat-bandwidth HBM, and the voting engine's byte
//! traffic, executing prefill and generation of a parameterized decoder
//! transformer.
//!
//! Every operator costs `max(compute cycles, memory cycles)` — compute is
//! the PE-array schedule length, memory the streamed bytes over the flat
//! bandwidth — plus a fixed pipeline-fill overhead accounted at the step
//! level. The voting engine runs in parallel with everything else and adds
//! zero critical-path cycles; its off-chip vote traffic is tracked in the
//! byte ledger only.
//!
//! Two engine styles are modeled. The flexible engine plans GEMVs with
//! `make_schedule` in either interpretation; the fixed-tree baseline plans
//! inner products only with `fixed_tree_schedule`, its tree passes costing
//! `width / lanes` cycles so that both styles expose the same peak MACs per
//! cycle.

pub mod ablate;
pub mod pe;
pub mod sfu;

pub use pe::{pe_array_execute, PeArrayModel, PeControl, PeExecution, PeKind};
pub use sfu::{element_serial_stall_cycles, sfu_latency, NonlinearKind, SfuConfig, SfuScheduling};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataflow::{fixed_tree_schedule, make_schedule, GemvProblem, Interpretation};
use crate::error::{Error, Result};
use crate::eviction::{target_size, EvictionConfig};

/// GEMV engine style.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Dataflow {
    /// Runtime-reconfigurable array: either interpretation per operator.
    Flexible,
    /// Fixed multiplier-and-adder-tree engine, inner product only.
    FixedTree { width: usize },
}

/// PE array geometry: `banks` tiles of `rows x cols`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeArrayConfig {
    pub rows: usize,
    pub cols: usize,
    pub banks: usize,
}

impl Default for PeArrayConfig {
    fn default() -> Self {
        PeArrayConfig {
            rows: 8,
            cols: 8,
            banks: 2,
        }
    }
}

impl PeArrayConfig {
    pub fn lanes(&self) -> usize {
        self.rows * self.cols * self.banks
    }
}

/// Off-chip memory and on-chip buffer model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryConfig {
    /// Flat streaming bandwidth; 256 B/cycle is 256 GB/s at 1 GHz.
    pub bandwidth_bytes_per_cycle: u64,
    /// Stored element width; 2 models a 16-bit datapath.
    pub element_bytes: u64,
    pub buffer_bytes: u64,
}

impl Default for MemoryConfig {
    fn default() -> Self {
        MemoryConfig {
            bandwidth_bytes_per_cycle: 256,
            element_bytes: 2,
            buffer_bytes: 256 * 1024,
        }
    }
}

/// Cycles to stream `bytes` over the flat-bandwidth memory.
pub fn memory_cycles(bytes: u64, mem: &MemoryConfig) -> u64 {
    bytes.div_ceil(mem.bandwidth_bytes_per_cycle)
}

/// Full accelerator configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchConfig {
    pub pe: PeArrayConfig,
    pub sfu: SfuConfig,
    pub mem: MemoryConfig,
    pub dataflow: Dataflow,
    pub frequency_ghz: f64,
    /// Pipeline-fill overhead added per operator invocation.
    pub op_overhead_cycles: u64,
}

impl ArchConfig {
    /// Flexible engine with element-serial nonlinear scheduling.
    pub fn flexible() -> Self {
        ArchConfig {
            pe: PeArrayConfig::default(),
            sfu: SfuConfig::default(),
            mem: MemoryConfig::default(),
            dataflow: Dataflow::Flexible,
            frequency_ghz: 1.0,
            op_overhead_cycles: 8,
        }
    }

    /// Flexible engine, conventional SFU scheduling.
    pub fn flexible_conventional() -> Self {
        let mut cfg = Self::flexible();
        cfg.sfu = cfg.sfu.conventional();
        cfg
    }

    /// Fixed 256-input adder-tree engine with conventional SFU scheduling,
    /// matched to the flexible engine's peak MACs per cycle and SFU counts.
    pub fn fixed_tree_baseline() -> Self {
        let mut cfg = Self::flexible_conventional();
        cfg.dataflow = Dataflow::FixedTree { width: 256 };
        cfg
    }

    pub fn lanes(&self) -> usize {
        self.pe.lanes()
    }

    /// Peak multiply-accumulates per cycle; identical across engine styles
    /// by construction (tree passes are stretched over `width/lanes`
    /// cycles).
    pub fn peak_macs_per_cycle(&self) -> u64 {
        self.lanes() as u64
    }

    pub fn validate(&self) -> Result<()> {
        if self.lanes() == 0 {
            return Err(Error::invalid_config("pe array has zero lanes"));
        }
        if self.mem.bandwidth_bytes_per_cycle == 0 {
            return Err(Error::invalid_config("bandwidth must be positive"));
        }
        if self.frequency_ghz <= 0.0 {
            return Err(Error::invalid_config("frequency must be positive"));
        }
        if let Dataflow::FixedTree { width } = self.dataflow {
            if width == 0 || width % self.lanes() != 0 {
                return Err(Error::invalid_config(format!(
                    "tree width {width} must be a positive multiple of {} lanes",
                    self.lanes()
                )));
            }
        }
        Ok(())
    }

    /// Compute cycles for one `(1,k) x (k,n)` GEMV under this engine.
    pub fn gemv_compute_cycles(&self, k: usize, n: usize, interp: Interpretation) -> Result<u64> {
        let p = GemvProblem::new(k, n)?;
        Ok(match self.dataflow {
            Dataflow::Flexible => make_schedule(p, interp, self.lanes())?.total_cycles,
            Dataflow::FixedTree { width } => {
                // Inner-only engine; each tree pass takes width/lanes cycles
                // at the matched peak throughput.
                fixed_tree_schedule(p, width)?.total_cycles * (width / self.lanes()) as u64
            }
        })
    }

    /// Utilization of one GEMV's compute under this engine.
    pub fn gemv_utilization(&self, k: usize, n: usize, interp: Interpretation) -> Result<f64> {
        let p = GemvProblem::new(k, n)?;
        Ok(match self.dataflow {
            Dataflow::Flexible => make_schedule(p, interp, self.lanes())?.utilization,
            Dataflow::FixedTree { width } => fixed_tree_schedule(p, width)?.utilization,
        })
    }

    /// Cycles for an element-wise pass over `len` elements.
    fn elementwise_cycles(&self, len: usize) -> u64 {
        (len as u64).div_ceil(self.lanes() as u64)
    }
}

/// Decoder workload dimensions and phase lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadConfig {
    pub layers: usize,
    pub hidden: usize,
    pub heads: usize,
    pub head_dim: usize,
    pub ffn: usize,
    /// Gated feed-forward (two up projections feeding an element-wise
    /// gate), as in Llama-family models.
    pub gated_ffn: bool,
    pub prompt_len: usize,
    pub gen_len: usize,
    pub max_seq: usize,
    pub eviction: Option<EvictionConfig>,
}

impl WorkloadConfig {
    /// Llama-2 7B shape: 32 layers, hidden 4096, 32 heads of 128, gated
    /// FFN of 11008, 4096 maximum sequence length.
    pub fn llama2_7b() -> Self {
        WorkloadConfig {
            layers: 32,
            hidden: 4096,
            heads: 32,
            head_dim: 128,
            ffn: 11008,
            gated_ffn: true,
            prompt_len: 512,
            gen_len: 1024,
            max_seq: 4096,
            eviction: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden != self.heads * self.head_dim {
            return Err(Error::invalid_config(format!(
                "hidden {} != heads {} * head_dim {}",
                self.hidden, self.heads, self.head_dim
            )));
        }
        if self.ffn < self.hidden {
            return Err(Error::invalid_config(format!(
                "ffn {} smaller than hidden {}",
                self.ffn, self.hidden
            )));
        }
        if self.prompt_len == 0 || self.gen_len == 0 || self.layers == 0 {
            return Err(Error::invalid_config(
                "layers, prompt_len, and gen_len must be >= 1",
            ));
        }
        if self.prompt_len + self.gen_len > self.max_seq {
            return Err(Error::invalid_config(format!(
                "prompt {} + gen {} exceeds max_seq {}",
                self.prompt_len, self.gen_len, self.max_seq
            )));
        }
        if let Some(ev) = &self.eviction {
            ev.validate()?;
            if ev.num_heads != self.heads {
                return Err(Error::invalid_config(format!(
                    "eviction heads {} != workload heads {}",
                    ev.num_heads, self.heads
                )));
            }
        }
        Ok(())
    }

    /// Live KV length the new token attends over at 1-based generation
    /// step `t` (including itself), after any eviction policy has held the
    /// cache at its target.
    pub fn live_len_at(&self, t: usize) -> usize {
        let grown = self.prompt_len + t;
        match &self.eviction {
            None => grown,
            Some(ev) => grown.min(target_size(self.prompt_len, ev) + 1),
        }
    }

    /// Per-layer weight bytes streamed per generated token.
    pub fn layer_weight_bytes(&self, eb: u64) -> u64 {
        let d = self.hidden as u64;
        let f = self.ffn as u64;
        let up_streams = if self.gated_ffn { 2 } else { 1 };
        (4 * d * d + up_streams * d * f + f * d) * eb
    }
}

/// Operator classes reported per phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OpKind {
    QkvGen,
    QkScores,
    Softmax,
    SvOutput,
    Projection,
    Ffn1,
    Activation,
    Ffn2,
    LayerNorm,
    VotingOverhead,
}

impl OpKind {
    pub const ALL: [OpKind; 10] = [
        OpKind::QkvGen,
        OpKind::QkScores,
        OpKind::Softmax,
        OpKind::SvOutput,
        OpKind::Projection,
        OpKind::Ffn1,
        OpKind::Activation,
        OpKind::Ffn2,
        OpKind::LayerNorm,
        OpKind::VotingOverhead,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            OpKind::QkvGen => "qkv-gen",
            OpKind::QkScores => "qk-scores",
            OpKind::Softmax => "softmax",
            OpKind::SvOutput => "sv-output",
            OpKind::Projection => "projection",
            OpKind::Ffn1 => "ffn1",
            OpKind::Activation => "activation",
            OpKind::Ffn2 => "ffn2",
            OpKind::LayerNorm => "layernorm",
            OpKind::VotingOverhead => "voting-overhead",
        }
    }
}

/// Cost of one operator invocation before overhead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OperatorCycles {
    pub compute: u64,
    pub memory: u64,
    pub bytes: u64,
}

impl OperatorCycles {
    pub fn compute_only(compute: u64) -> Self {
        OperatorCycles {
            compute,
            memory: 0,
            bytes: 0,
        }
    }

    pub fn new(compute: u64, bytes: u64, mem: &MemoryConfig) -> Self {
        OperatorCycles {
            compute,
            memory: memory_cycles(bytes, mem),
            bytes,
        }
    }

    /// Compute/memory max-law: the slower side hides the faster one.
    pub fn total(&self) -> u64 {
        self.compute.max(self.memory)
    }
}

/// Attention-score GEMV for one head over `live` cached rows.
pub fn attention_score_op(
    arch: &ArchConfig,
    head_dim: usize,
    live: usize,
    stream_kv: bool,
) -> Result<OperatorCycles> {
    let compute = arch.gemv_compute_cycles(head_dim, live, Interpretation::Inner)?;
    let bytes = if stream_kv {
        live as u64 * head_dim as u64 * arch.mem.element_bytes
    } else {
        0
    };
    Ok(OperatorCycles::new(compute, bytes, &arch.mem))
}

/// Attention-output GEMV for one head over `live` cached rows.
pub fn attention_output_op(
    arch: &ArchConfig,
    head_dim: usize,
    live: usize,
    stream_kv: bool,
) -> Result<OperatorCycles> {
    let compute = arch.gemv_compute_cycles(live, head_dim, Interpretation::Outer)?;
    let bytes = if stream_kv {
        live as u64 * head_dim as u64 * arch.mem.element_bytes
    } else {
        0
    };
    Ok(OperatorCycles::new(compute, bytes, &arch.mem))
}

/// Byte-ledger accounts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ByteLedger {
    pub weights: u64,
    pub kv_read: u64,
    pub kv_write: u64,
    pub votes: u64,
}

impl ByteLedger {
    pub fn total(&self) -> u64 {
        self.weights + self.kv_read + self.kv_write + self.votes
    }
}

/// Accumulated per-operator totals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OpTotals {
    pub cycles: u64,
    pub compute_cycles: u64,
    pub memory_cycles: u64,
    pub bytes: u64,
    pub invocations: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimPhase {
    Prefill,
    Generation,
}

/// Cycle and byte accounting for one simulated phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    pub phase: SimPhase,
    pub steps: usize,
    pub per_op: BTreeMap<OpKind, OpTotals>,
    /// Pipeline-fill overhead summed across operator invocations.
    pub overhead_cycles: u64,
    pub total_cycles: u64,
    pub bytes: ByteLedger,
    pub peak_macs_per_cycle: u64,
    pub total_macs: u64,
    /// Achieved MACs over peak MACs across the whole phase.
    pub utilization: f64,
    /// Generated tokens per second at the configured frequency
    /// (generation phase only).
    pub tokens_per_second: Option<f64>,
    /// Attention-process cycles (scores, softmax, output) including their
    /// share of operator overhead.
    pub attention_cycles: u64,
    /// Attention cycles averaged over generated tokens.
    pub attention_avg_per_token: Option<f64>,
}

impl CycleReport {
    pub fn op(&self, kind: OpKind) -> OpTotals {
        self.per_op.get(&kind).copied().unwrap_or_default()
    }
}

#[derive(Default)]
struct Accounting {
    per_op: BTreeMap<OpKind, OpTotals>,
    overhead: u64,
    bytes: ByteLedger,
    macs: u64,
    attention_cycles: u64,
}

impl Accounting {
    fn charge(
        &mut self,
        kind: OpKind,
        op: OperatorCycles,
        overhead: u64,
        macs: u64,
        account: fn(&mut ByteLedger) -> &mut u64,
    ) {
        let entry = self.per_op.entry(kind).or_default();
        entry.cycles += op.total();
        entry.compute_cycles += op.compute;
        entry.memory_cycles += op.memory;
        entry.bytes += op.bytes;
        entry.invocations += 1;
        self.overhead += overhead;
        *account(&mut self.bytes) += op.bytes;
        self.macs += macs;
        if matches!(kind, OpKind::QkScores | OpKind::Softmax | OpKind::SvOutput) {
            self.attention_cycles += op.total() + overhead;
        }
    }

    fn into_report(
        self,
        phase: SimPhase,
        steps: usize,
        arch: &ArchConfig,
        gen_tokens: Option<usize>,
    ) -> CycleReport {
        let op_cycles: u64 = self.per_op.values().map(|t| t.cycles).sum();
        let total = op_cycles + self.overhead;
        let peak = arch.peak_macs_per_cycle();
        let tokens_per_second = gen_tokens.map(|g| {
            let seconds = total as f64 / (arch.frequency_ghz * 1e9);
            g as f64 / seconds
        });
        let attention_avg = gen_tokens.map(|g| self.attention_cycles as f64 / g as f64);
        CycleReport {
            phase,
            steps,
            per_op: self.per_op,
            overhead_cycles: self.overhead,
            total_cycles: total,
            bytes: self.bytes,
            peak_macs_per_cycle: peak,
            total_macs: self.macs,
            utilization: self.macs as f64 / (peak * total.max(1)) as f64,
            tokens_per_second,
            attention_cycles: self.attention_cycles,
            attention_avg_per_token: attention_avg,
        }
    }
}

fn gemv_op(
    arch: &ArchConfig,
    k: usize,
    n: usize,
    interp: Interpretation,
    reps: u64,
    stream_weights: bool,
) -> Result<OperatorCycles> {
    let compute = arch.gemv_compute_cycles(k, n, interp)? * reps;
    let bytes = if stream_weights {
        k as u64 * n as u64 * arch.mem.element_bytes * reps
    } else {
        0
    };
    Ok(OperatorCycles::new(compute, bytes, &arch.mem))
}

/// Simulates one generation step's operators for every layer at live KV
/// length `live`. Weights stream from off-chip each step.
fn generation_step(
    w: &WorkloadConfig,
    arch: &ArchConfig,
    live: usize,
    acc: &mut Accounting,
) -> Result<()> {
    let d = w.hidden;
    let eb = arch.mem.element_bytes;
    let ov = arch.op_overhead_cycles;
    let heads = w.heads as u64;
    for _layer in 0..w.layers {
        // QKV generation: three (1,D)x(D,D) GEMVs on streamed weights.
        let qkv = gemv_op(arch, d, d, Interpretation::Outer, 3, true)?;
        acc.charge(OpKind::QkvGen, qkv, ov, 3 * (d * d) as u64, |b| {
            &mut b.weights
        });

        // Attention scores, per head, over the (l, d) key rows.
        let qk1 = attention_score_op(arch, w.head_dim, live, true)?;
        let qk = OperatorCycles {
            compute: qk1.compute * heads,
            memory: memory_cycles(qk1.bytes * heads, &arch.mem),
            bytes: qk1.bytes * heads,
        };
        acc.charge(
            OpKind::QkScores,
            qk,
            ov,
            heads * (w.head_dim * live) as u64,
            |b| &mut b.kv_read,
        );

        // Softmax per head between the two attention GEMVs.
        let sm = OperatorCycles::compute_only(
            sfu_latency(NonlinearKind::Softmax, live, &arch.sfu) * heads,
        );
        acc.charge(OpKind::Softmax, sm, ov, 0, |b| &mut b.weights);

        // Attention output, per head, over the (l, d) value rows.
        let sv1 = attention_output_op(arch, w.head_dim, live, true)?;
        let sv = OperatorCycles {
            compute: sv1.compute * heads,
            memory: memory_cycles(sv1.bytes * heads, &arch.mem),
            bytes: sv1.bytes * heads,
        };
        acc.charge(
            OpKind::SvOutput,
            sv,
            ov,
            heads * (w.head_dim * live) as u64,
            |b| &mut b.kv_read,
        );

        // Output projection.
        let proj = gemv_op(arch, d, d, Interpretation::Inner, 1, true)?;
        acc.charge(OpKind::Projection, proj, ov, (d * d) as u64, |b| {
            &mut b.weights
        });

        // Feed-forward up projection(s).
        let up_streams = if w.gated_ffn { 2 } else { 1 };
        let ffn1 = gemv_op(arch, d, w.ffn, Interpretation::Inner, up_streams, true)?;
        acc.charge(
            OpKind::Ffn1,
            ffn1,
            ov,
            up_streams * (d * w.ffn) as u64,
            |b| &mut b.weights,
        );

        // Activation (and gate multiply) plus the two residual additions.
        let act_passes = if w.gated_ffn { 2 } else { 1 };
        let act = OperatorCycles::compute_only(
            act_passes * arch.elementwise_cycles(w.ffn) + 2 * arch.elementwise_cycles(d),
        );
        acc.charge(OpKind::Activation, act, ov, 0, |b| &mut b.weights);

        // Feed-forward down projection.
        let ffn2 = gemv_op(arch, w.ffn, d, Interpretation::Inner, 1, true)?;
        acc.charge(OpKind::Ffn2, ffn2, ov, (w.ffn * d) as u64, |b| {
            &mut b.weights
        });

        // Two layer normalizations.
        let ln =
            OperatorCycles::compute_only(2 * sfu_latency(NonlinearKind::LayerNorm, d, &arch.sfu));
        acc.charge(OpKind::LayerNorm, ln, ov, 0, |b| &mut b.weights);

        // New K and V rows written back.
        acc.bytes.kv_write += 2 * d as u64 * eb;

        // Voting engine: fully overlapped, zero critical-path cycles; its
        // vote-count traffic (2 bytes per live position) hits the ledger.
        if w.eviction.is_some() {
            let votes = OperatorCycles {
                compute: 0,
                memory: 0,
                bytes: 2 * live as u64,
            };
            acc.charge(OpKind::VotingOverhead, votes, 0, 0, |b| &mut b.votes);
        }
    }
    Ok(())
}

/// Simulates the generation phase: one token per step, weights streamed,
/// attention over the eviction-controlled live length.
pub fn simulate_generation(w: &WorkloadConfig, arch: &ArchConfig) -> Result<CycleReport> {
    w.validate()?;
    arch.validate()?;
    let mut acc = Accounting::default();
    for t in 1..=w.gen_len {
        generation_step(w, arch, w.live_len_at(t), &mut acc)?;
    }
    Ok(acc.into_report(SimPhase::Generation, w.gen_len, arch, Some(w.gen_len)))
}

/// Simulates the prefill phase. The prompt's GEMMs run as `prompt_len`
/// GEMVs per operator with weights fetched once and reused from the
/// on-chip buffer (tiles cycled through the buffer, each fetched a single
/// time); attention-score GEMVs iterate only the causal lower triangle.
pub fn simulate_prefill(w: &WorkloadConfig, arch: &ArchConfig) -> Result<CycleReport> {
    w.validate()?;
    arch.validate()?;
    let p = w.prompt_len;
    let d = w.hidden;
    let eb = arch.mem.element_bytes;
    let ov = arch.op_overhead_cycles;
    let heads = w.heads as u64;
    let mut acc = Accounting::default();

    // Causal skip: row t of the score matrix has t live columns. The fixed
    // tree cannot skip below its reduction width, so it pads the column
    // count up to whole tree widths.
    let score_cols = |t: usize| -> usize {
        match arch.dataflow {
            Dataflow::Flexible => t,
            Dataflow::FixedTree { width } => (t.div_ceil(width) * width).min(p.max(t)),
        }
    };

    for _layer in 0..w.layers {
        let qkv = OperatorCycles::new(
            arch.gemv_compute_cycles(d, d, Interpretation::Outer)? * 3 * p as u64,
            3 * (d * d) as u64 * eb,
            &arch.mem,
        );
        acc.charge(OpKind::QkvGen, qkv, ov, 3 * (d * d * p) as u64, |b| {
            &mut b.weights
        });

        let mut qk_compute = 0;
        let mut qk_macs = 0;
        let mut sm_cycles = 0;
        let mut sv_compute = 0;
        for t in 1..=p {
            let cols = score_cols(t);
            qk_compute += arch.gemv_compute_cycles(w.head_dim, cols, Interpretation::Inner)?;
            qk_macs += (w.head_dim * cols) as u64;
            sm_cycles += sfu_latency(NonlinearKind::Softmax, t, &arch.sfu);
            sv_compute += arch.gemv_compute_cycles(t, w.head_dim, Interpretation::Outer)?;
        }
        // K and V tiles stream through the buffer once per layer.
        let kv_bytes = (p * d) as u64 * eb;
        let qk = OperatorCycles::new(qk_compute * heads, kv_bytes, &arch.mem);
        acc.charge(OpKind::QkScores, qk, ov, qk_macs * heads, |b| {
            &mut b.kv_read
        });
        let sm = OperatorCycles::compute_only(sm_cycles * heads);
        acc.charge(OpKind::Softmax, sm, ov, 0, |b| &mut b.weights);
        let sv = OperatorCycles::new(sv_compute * heads, kv_bytes, &arch.mem);
        acc.charge(
            OpKind::SvOutput,
            sv,
            ov,
            heads * (p * (p + 1) / 2 * w.head_dim) as u64,
            |b| &mut b.kv_read,
        );

        let proj = OperatorCycles::new(
            arch.gemv_compute_cycles(d, d, Interpretation::Inner)? * p as u64,
            (d * d) as u64 * eb,
            &arch.mem,
        );
        acc.charge(OpKind::Projection, proj, ov, (d * d * p) as u64, |b| {
            &mut b.weights
        });

        let up_streams = if w.gated_ffn { 2u64 } else { 1 };
        let ffn1 = OperatorCycles::new(
            arch.gemv_compute_cycles(d, w.ffn, Interpretation::Inner)? * up_streams * p as u64,
            up_streams * (d * w.ffn) as u64 * eb,
            &arch.mem,
        );
        acc.charge(
            OpKind::Ffn1,
            ffn1,
            ov,
            up_streams * (d * w.ffn * p) as u64,
            |b| &mut b.weights,
        );

        let act_passes = if w.gated_ffn { 2 } else { 1 };
        let act = OperatorCycles::compute_only(
            (act_passes * arch.elementwise_cycles(w.ffn) + 2 * arch.elementwise_cycles(d))
                * p as u64,
        );
        acc.charge(OpKind::Activation, act, ov, 0, |b| &mut b.weights);

        let ffn2 = OperatorCycles::new(
            arch.gemv_compute_cycles(w.ffn, d, Interpretation::Inner)? * p as u64,
            (w.ffn * d) as u64 * eb,
            &arch.mem,
        );
        acc.charge(OpKind::Ffn2, ffn2, ov, (w.ffn * d * p) as u64, |b| {
            &mut b.weights
        });

        let ln = OperatorCycles::compute_only(
            2 * sfu_latency(NonlinearKind::LayerNorm, d, &arch.sfu) * p as u64,
        );
        acc.charge(OpKind::LayerNorm, ln, ov, 0, |b| &mut b.weights);

        acc.bytes.kv_write += 2 * (p * d) as u64 * eb;

        // Votes are recorded during prefill but nothing is evicted.
        if w.eviction.is_some() {
            let votes = OperatorCycles {
                compute: 0,
                memory: 0,
                bytes: (p * (p + 1)) as u64,
            };
            acc.charge(OpKind::VotingOverhead, votes, 0, 0, |b| &mut b.votes);
        }
    }
    Ok(acc.into_report(SimPhase::Prefill, p, arch, None))
}

/// Simulates the generation phase on the fixed-adder-tree baseline.
pub fn simulate_baseline(w: &WorkloadConfig) -> Result<CycleReport> {
    simulate_generation(w, &ArchConfig::fixed_tree_baseline())
}
