//! Experiment configuration: a schema-versioned TOML document, resolved
//! into a fully-defaulted spec. Unknown keys are hard errors; the resolved
//! spec serializes canonically, and its SHA-256 hash stamps every emitted
//! table row so outputs are traceable to the exact configuration.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::attnbench::ToyModelConfig;
use crate::cyclesim::{
    ArchConfig, Dataflow, MemoryConfig, PeArrayConfig, SfuConfig, SfuScheduling, WorkloadConfig,
};
use crate::error::{Error, Result};
use crate::eviction::EvictionConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// On-disk configuration document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workload: Option<WorkloadSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arch: Option<ArchSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eviction: Option<EvictionSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bench: Option<BenchSection>,
}

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSection {
    pub layers: usize,
    pub hidden: usize,
    pub heads: usize,
    pub head_dim: usize,
    pub ffn: usize,
    #[serde(default)]
    pub gated_ffn: bool,
    pub prompt: usize,
    pub gen: usize,
    #[serde(default = "default_max_seq")]
    pub max_seq: usize,
}

fn default_max_seq() -> usize {
    4096
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchSection {
    #[serde(default = "default_dataflow")]
    pub dataflow: String,
    #[serde(default = "default_tree_width")]
    pub tree_width: usize,
    #[serde(default = "default_sfu_scheduling")]
    pub sfu_scheduling: String,
    #[serde(default = "default_bandwidth")]
    pub bandwidth_bytes_per_cycle: u64,
    #[serde(default = "default_element_bytes")]
    pub element_bytes: u64,
    #[serde(default = "default_buffer_bytes")]
    pub buffer_bytes: u64,
    #[serde(default = "default_pe_rows")]
    pub pe_rows: usize,
    #[serde(default = "default_pe_cols")]
    pub pe_cols: usize,
    #[serde(default = "default_pe_banks")]
    pub pe_banks: usize,
    #[serde(default = "default_frequency")]
    pub frequency_ghz: f64,
    #[serde(default = "default_overhead")]
    pub op_overhead_cycles: u64,
}

fn default_dataflow() -> String {
    "flexible".into()
}
fn default_tree_width() -> usize {
    256
}
fn default_sfu_scheduling() -> String {
    "element-serial".into()
}
fn default_bandwidth() -> u64 {
    256
}
fn default_element_bytes() -> u64 {
    2
}
fn default_buffer_bytes() -> u64 {
    256 * 1024
}
fn default_pe_rows() -> usize {
    8
}
fn default_pe_cols() -> usize {
    8
}
fn default_pe_banks() -> usize {
    2
}
fn default_frequency() -> f64 {
    1.0
}
fn default_overhead() -> u64 {
    8
}

impl Default for ArchSection {
    fn default() -> Self {
        ArchSection {
            dataflow: default_dataflow(),
            tree_width: default_tree_width(),
            sfu_scheduling: default_sfu_scheduling(),
            bandwidth_bytes_per_cycle: default_bandwidth(),
            element_bytes: default_element_bytes(),
            buffer_bytes: default_buffer_bytes(),
            pe_rows: default_pe_rows(),
            pe_cols: default_pe_cols(),
            pe_banks: default_pe_banks(),
            frequency_ghz: default_frequency(),
            op_overhead_cycles: default_overhead(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvictionSection {
    pub ratio: f64,
    #[serde(default = "default_reserved")]
    pub reserved: usize,
    #[serde(default = "default_coeff_a")]
    pub coeff_a: f64,
    #[serde(default = "default_coeff_b")]
    pub coeff_b: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explicit_target: Option<usize>,
}

fn default_reserved() -> usize {
    EvictionConfig::DEFAULT_RESERVED
}
fn default_coeff_a() -> f64 {
    EvictionConfig::DEFAULT_COEFF_A
}
fn default_coeff_b() -> f64 {
    EvictionConfig::DEFAULT_COEFF_B
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default)]
    pub gen_lens: Vec<usize>,
    #[serde(default)]
    pub ratios: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSection {
    #[serde(default = "default_bench_prompt")]
    pub prompt: usize,
    #[serde(default = "default_bench_reserved")]
    pub reserved: usize,
    #[serde(default = "default_bench_seq")]
    pub seq_len: usize,
    #[serde(default = "default_bench_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_bench_ratios")]
    pub ratios: Vec<f64>,
    #[serde(default = "default_bench_scenarios")]
    pub scenarios: Vec<String>,
}

fn default_bench_prompt() -> usize {
    128
}
fn default_bench_reserved() -> usize {
    8
}
fn default_bench_seq() -> usize {
    256
}
fn default_bench_seeds() -> Vec<u64> {
    vec![1, 2, 3]
}
fn default_bench_ratios() -> Vec<f64> {
    vec![0.1, 0.25, 0.5]
}
fn default_bench_scenarios() -> Vec<String> {
    vec![
        "item-count".into(),
        "criteria".into(),
        "outlier".into(),
        "sink".into(),
        "recency".into(),
    ]
}

impl Default for BenchSection {
    fn default() -> Self {
        BenchSection {
            prompt: default_bench_prompt(),
            reserved: default_bench_reserved(),
            seq_len: default_bench_seq(),
            seeds: default_bench_seeds(),
            ratios: default_bench_ratios(),
            scenarios: default_bench_scenarios(),
        }
    }
}

/// Fully-resolved experiment parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub seed: u64,
    pub file: ConfigFile,
    pub workload: Option<WorkloadConfig>,
    pub arch: ArchConfig,
    pub sweep: SweepSection,
    pub bench: BenchSection,
}

impl ExperimentSpec {
    /// Canonical serialized form; hashing input and validate-config output.
    pub fn canonical_toml(&self) -> String {
        toml::to_string_pretty(&self.file).expect("config serializes")
    }

    /// SHA-256 over the canonical serialization plus the effective seed.
    pub fn config_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.canonical_toml().as_bytes());
        hasher.update(self.seed.to_le_bytes());
        let digest = hasher.finalize();
        let mut out = String::with_capacity(64);
        for byte in digest {
            let _ = write!(out, "{byte:02x}");
        }
        out
    }

    /// Workload, or a config error for commands that need one.
    pub fn require_workload(&self) -> Result<&WorkloadConfig> {
        self.workload
            .as_ref()
            .ok_or_else(|| Error::invalid_config("this command requires a [workload] section"))
    }

    /// Toy-model config for bench trace seeds.
    pub fn bench_toy(&self, seed: u64) -> ToyModelConfig {
        ToyModelConfig {
            seq_len: self.bench.seq_len,
            ..ToyModelConfig::toy(seed)
        }
    }
}

fn build_arch(section: &ArchSection) -> Result<ArchConfig> {
    let dataflow = match section.dataflow.as_str() {
        "flexible" => Dataflow::Flexible,
        "fixed-tree" => Dataflow::FixedTree {
            width: section.tree_width,
        },
        other => {
            return Err(Error::invalid_config(format!(
                "arch.dataflow '{other}' (expected 'flexible' or 'fixed-tree')"
            )))
        }
    };
    let scheduling = match section.sfu_scheduling.as_str() {
        "element-serial" => SfuScheduling::ElementSerial,
        "conventional" => SfuScheduling::Conventional,
        other => {
            return Err(Error::invalid_config(format!(
                "arch.sfu_scheduling '{other}' (expected 'element-serial' or 'conventional')"
            )))
        }
    };
    let arch = ArchConfig {
        pe: PeArrayConfig {
            rows: section.pe_rows,
            cols: section.pe_cols,
            banks: section.pe_banks,
        },
        sfu: SfuConfig {
            scheduling,
            ..SfuConfig::default()
        },
        mem: MemoryConfig {
            bandwidth_bytes_per_cycle: section.bandwidth_bytes_per_cycle,
            element_bytes: section.element_bytes,
            buffer_bytes: section.buffer_bytes,
        },
        dataflow,
        frequency_ghz: section.frequency_ghz,
        op_overhead_cycles: section.op_overhead_cycles,
    };
    arch.validate()?;
    Ok(arch)
}

/// Resolves a parsed document into a validated spec. `seed_override` wins
/// over the document's seed.
pub fn resolve(file: ConfigFile, seed_override: Option<u64>) -> Result<ExperimentSpec> {
    if file.schema != SCHEMA_VERSION {
        return Err(Error::invalid_config(format!(
            "schema version {} (this build reads {SCHEMA_VERSION})",
            file.schema
        )));
    }
    let seed = seed_override.unwrap_or(file.seed);
    let arch = build_arch(&file.arch.clone().unwrap_or_default())?;

    let workload = match &file.workload {
        None => None,
        Some(ws) => {
            let eviction = file.eviction.as_ref().map(|ev| EvictionConfig {
                ratio: ev.ratio,
                reserved: ev.reserved,
                coeff_a: ev.coeff_a,
                coeff_b: ev.coeff_b,
                explicit_target: ev.explicit_target,
                num_heads: ws.heads,
            });
            let w = WorkloadConfig {
                layers: ws.layers,
                hidden: ws.hidden,
                heads: ws.heads,
                head_dim: ws.head_dim,
                ffn: ws.ffn,
                gated_ffn: ws.gated_ffn,
                prompt_len: ws.prompt,
                gen_len: ws.gen,
                max_seq: ws.max_seq,
                eviction,
            };
            w.validate()?;
            Some(w)
        }
    };
    if file.workload.is_none() && file.eviction.is_some() {
        return Err(Error::invalid_config(
            "[eviction] requires a [workload] section",
        ));
    }

    let mut normalized = file.clone();
    normalized.seed = seed;
    Ok(ExperimentSpec {
        seed,
        file: normalized,
        workload,
        arch,
        sweep: file.sweep.unwrap_or_default(),
        bench: file.bench.unwrap_or_default(),
    })
}

/// Parses and resolves a config file from disk.
pub fn parse_config(path: &Path, seed_override: Option<u64>) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::invalid_config(format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text, seed_override)
}

/// Parses and resolves a config document from a string.
pub fn parse_config_str(text: &str, seed_override: Option<u64>) -> Result<ExperimentSpec> {
    let file: ConfigFile = toml::from_str(text)
        .map_err(|e| Error::invalid_config(format!("config parse error: {e}")))?;
    resolve(file, seed_override)
}

/// Built-in presets, shipped in the crate's `presets/` directory and
/// embedded into the binary.
pub const PRESETS: [(&str, &str); 5] = [
    ("llama2-7b", include_str!("../../presets/llama2-7b.toml")),
    (
        "table2-throughput",
        include_str!("../../presets/table2-throughput.toml"),
    ),
    (
        "fig7-center",
        include_str!("../../presets/fig7-center.toml"),
    ),
    ("fig7-right", include_str!("../../presets/fig7-right.toml")),
    ("toy", include_str!("../../presets/toy.toml")),
];

pub fn preset(name: &str, seed_override: Option<u64>) -> Result<ExperimentSpec> {
    let (_, text) = PRESETS.iter().find(|(n, _)| *n == name).ok_or_else(|| {
        let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
        Error::invalid_config(format!(
            "unknown preset '{name}' (available: {})",
            names.join(", ")
        ))
    })?;
    parse_config_str(text, seed_override)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_resolves_with_defaults() {
        let spec = parse_config_str("schema = 1\n", None).unwrap();
        assert_eq!(spec.seed, 42);
        assert!(spec.workload.is_none());
        assert_eq!(spec.arch.lanes(), 128);
        assert_eq!(spec.bench.reserved, 8);
    }

    #[test]
    fn unknown_keys_are_hard_errors() {
        let err = parse_config_str("schema = 1\nbogus = 3\n", None).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
        let err = parse_config_str(
            "schema = 1\n[workload]\nlayers = 1\nhidden = 128\nheads = 1\nhead_dim = 128\nffn = 256\nprompt = 4\ngen = 4\ntypo_key = 1\n",
            None,
        )
        .unwrap_err();
        assert!(err.to_string().contains("typo_key"), "{err}");
    }

    #[test]
    fn zero_ratio_is_rejected() {
        let text = "schema = 1\n[workload]\nlayers = 1\nhidden = 128\nheads = 1\nhead_dim = 128\nffn = 256\nprompt = 4\ngen = 4\n[eviction]\nratio = 0.0\n";
        assert!(parse_config_str(text, None).is_err());
    }

    #[test]
    fn missing_eviction_section_disables_eviction() {
        let text = "schema = 1\n[workload]\nlayers = 1\nhidden = 128\nheads = 1\nhead_dim = 128\nffn = 256\nprompt = 4\ngen = 4\n";
        let spec = parse_config_str(text, None).unwrap();
        assert!(spec.workload.unwrap().eviction.is_none());
    }

    #[test]
    fn canonical_form_round_trips() {
        let spec = preset("table2-throughput", None).unwrap();
        let canonical = spec.canonical_toml();
        let again = parse_config_str(&canonical, None).unwrap();
        assert_eq!(spec.file, again.file);
        assert_eq!(spec.config_hash(), again.config_hash());
    }

    #[test]
    fn seed_override_changes_hash() {
        let a = preset("toy", None).unwrap();
        let b = preset("toy", Some(7)).unwrap();
        assert_ne!(a.config_hash(), b.config_hash());
    }

    #[test]
    fn all_presets_parse() {
        for (name, _) in PRESETS {
            let spec = preset(name, None).unwrap();
            if let Some(w) = &spec.workload {
                w.validate().unwrap();
            }
        }
    }
}
