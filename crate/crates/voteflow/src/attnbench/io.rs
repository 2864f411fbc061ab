//! Trace serialization and quality-report CSV export.
//!
//! Trace files are self-describing: a magic tag and format version, a JSON
//! header carrying the shape and seed, then per step and per (layer, head)
//! row a little-endian u32 length prefix followed by that many little-endian
//! f32 scores. Writing the same trace twice produces identical bytes.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::attnbench::{AttentionTrace, QualityReport};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"VFTR";
const VERSION: u16 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct TraceHeader {
    label: String,
    layers: usize,
    heads: usize,
    seq_len: usize,
    seed: u64,
}

pub fn write_trace(trace: &AttentionTrace, mut w: impl Write) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let header = TraceHeader {
        label: trace.label.clone(),
        layers: trace.layers,
        heads: trace.heads,
        seq_len: trace.seq_len,
        seed: trace.seed,
    };
    let header_bytes =
        serde_json::to_vec(&header).map_err(|e| Error::Format(format!("header encode: {e}")))?;
    w.write_all(&(header_bytes.len() as u32).to_le_bytes())?;
    w.write_all(&header_bytes)?;
    for step in trace.steps() {
        for row in step {
            w.write_all(&(row.len() as u32).to_le_bytes())?;
            for score in row {
                w.write_all(&score.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

pub fn read_trace(mut r: impl Read) -> Result<AttentionTrace> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a trace file (bad magic)".into()));
    }
    let mut v = [0u8; 2];
    r.read_exact(&mut v)?;
    let version = u16::from_le_bytes(v);
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported trace version {version}"
        )));
    }
    let mut len4 = [0u8; 4];
    r.read_exact(&mut len4)?;
    let header_len = u32::from_le_bytes(len4) as usize;
    let mut header_bytes = vec![0u8; header_len];
    r.read_exact(&mut header_bytes)?;
    let header: TraceHeader = serde_json::from_slice(&header_bytes)
        .map_err(|e| Error::Format(format!("header decode: {e}")))?;

    let mut steps = Vec::with_capacity(header.seq_len);
    for t in 1..=header.seq_len {
        let mut step = Vec::with_capacity(header.layers * header.heads);
        for _ in 0..header.layers * header.heads {
            r.read_exact(&mut len4)?;
            let row_len = u32::from_le_bytes(len4) as usize;
            if row_len != t {
                return Err(Error::Format(format!(
                    "step {t}: row length {row_len} != {t}"
                )));
            }
            let mut row = Vec::with_capacity(row_len);
            let mut f4 = [0u8; 4];
            for _ in 0..row_len {
                r.read_exact(&mut f4)?;
                row.push(f32::from_le_bytes(f4));
            }
            step.push(row);
        }
        steps.push(step);
    }
    AttentionTrace::from_steps(
        header.label,
        header.layers,
        header.heads,
        header.seed,
        steps,
    )
}

/// Writes per-step retained-mass series as CSV, one row per (policy, step).
pub fn write_quality_csv(reports: &[QualityReport], w: impl Write) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["trace", "policy", "step", "retained_mass"])
        .map_err(|e| Error::Format(e.to_string()))?;
    for report in reports {
        for (i, mass) in report.per_step_mass.iter().enumerate() {
            csv.write_record([
                report.trace_label.as_str(),
                report.policy_label.as_str(),
                &(i + 1).to_string(),
                &format!("{mass:.9}"),
            ])
            .map_err(|e| Error::Format(e.to_string()))?;
        }
    }
    csv.flush()?;
    Ok(())
}
