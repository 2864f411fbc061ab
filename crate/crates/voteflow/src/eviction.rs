//! KV-cache eviction policies: voting-based eviction plus accumulated-score
//! and sliding-window baselines behind one policy interface.
//!
//! The voting policy treats each generated token as a voter. Alongside each
//! attention score row, an adaptive threshold `T = a*mean - b*std` is
//! computed; every eligible position scoring strictly below `T` is marked
//! with an indicator 1 for that head, and a position's vote count grows by
//! the head-averaged indicator. When the cache exceeds its target size the
//! position with the highest vote count is evicted (earliest position on
//! ties). The first `reserved` positions neither receive votes nor get
//! evicted, and no voting happens during the first `reserved` prompt steps.
//!
//! All three policies share the reserved prefix, the target size, and the
//! earliest-position tie-break so comparisons isolate the scoring rule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::MomentStats;

/// Eviction policy parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvictionConfig {
    /// Compression ratio r in (0, 1]; target size is `ceil(r * prompt_len)`
    /// unless `explicit_target` overrides it.
    pub ratio: f64,
    /// Reserved prefix length R: the first R positions never receive votes
    /// or get evicted, and the first R prompt steps cast no votes.
    pub reserved: usize,
    /// Mean coefficient `a` of the adaptive threshold.
    pub coeff_a: f64,
    /// Std-deviation coefficient `b` of the adaptive threshold.
    pub coeff_b: f64,
    /// Fixed target cache size, for workloads where the sequence grows from
    /// scratch toward the model maximum.
    pub explicit_target: Option<usize>,
    /// Number of attention heads whose votes are averaged per layer.
    pub num_heads: usize,
}

impl EvictionConfig {
    pub const DEFAULT_RESERVED: usize = 32;
    pub const DEFAULT_COEFF_A: f64 = 1.0;
    pub const DEFAULT_COEFF_B: f64 = 0.2;

    pub fn new(ratio: f64, num_heads: usize) -> Result<Self> {
        let cfg = EvictionConfig {
            ratio,
            reserved: Self::DEFAULT_RESERVED,
            coeff_a: Self::DEFAULT_COEFF_A,
            coeff_b: Self::DEFAULT_COEFF_B,
            explicit_target: None,
            num_heads,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_reserved(mut self, reserved: usize) -> Self {
        self.reserved = reserved;
        self
    }

    pub fn with_coefficients(mut self, a: f64, b: f64) -> Self {
        self.coeff_a = a;
        self.coeff_b = b;
        self
    }

    pub fn with_explicit_target(mut self, target: usize) -> Self {
        self.explicit_target = Some(target);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ratio > 0.0 && self.ratio <= 1.0) {
            return Err(Error::invalid_config(format!(
                "ratio {} outside (0, 1]",
                self.ratio
            )));
        }
        if self.num_heads == 0 {
            return Err(Error::invalid_config("num_heads must be >= 1"));
        }
        if let Some(t) = self.explicit_target {
            if t <= self.reserved {
                return Err(Error::invalid_config(format!(
                    "explicit target {t} must exceed reserved {}",
                    self.reserved
                )));
            }
        }
        Ok(())
    }
}

/// Target KV cache size for a prompt of length `prompt_len`:
/// `explicit_target` if set, else `max(reserved + 1, ceil(ratio * prompt_len))`.
pub fn target_size(prompt_len: usize, cfg: &EvictionConfig) -> usize {
    if let Some(t) = cfg.explicit_target {
        return t;
    }
    let scaled = (cfg.ratio * prompt_len as f64).ceil() as usize;
    scaled.max(cfg.reserved + 1)
}

/// One head's attention score row over the current live positions.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    scores: Vec<f64>,
    head: usize,
}

impl ScoreRow {
    pub fn new(scores: Vec<f64>, head: usize) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::invalid_argument("score row must be nonempty"));
        }
        let mut sum = 0.0;
        for &s in &scores {
            if !s.is_finite() || s < 0.0 {
                return Err(Error::invalid_argument(format!(
                    "score {s} must be finite and nonnegative"
                )));
            }
            sum += s;
        }
        if (sum - 1.0).abs() > 1e-4 {
            return Err(Error::invalid_argument(format!(
                "score row sums to {sum}, expected 1 within 1e-4"
            )));
        }
        Ok(ScoreRow { scores, head })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn head(&self) -> usize {
        self.head
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Slack for threshold and minimum comparisons, well below any meaningful
/// score difference. Keeps exactly-uniform rows (score == mean up to
/// rounding) from casting spurious votes.
const VOTE_EPSILON: f64 = 1e-12;

/// Adaptive voting threshold `T = a*mean - b*std` over one score row.
/// A sparse (spiky) row has a higher std and therefore a lower threshold;
/// an evenly spread row gets a higher one.
pub fn adaptive_threshold(row: &ScoreRow, cfg: &EvictionConfig) -> f64 {
    let mut m = MomentStats::new();
    m.extend(row.scores());
    let (mean, std) = m.finalize().expect("row is nonempty");
    cfg.coeff_a * mean - cfg.coeff_b * std
}

/// Cache phase. Prompt steps within the reserved stage cast no votes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    PrefillReserved,
    PrefillVoting,
    Generation,
}

/// Common policy surface used by the replay harness and the cycle model.
pub trait CachePolicy {
    /// Appends the next prompt token and records whatever statistics the
    /// policy keeps. `step_index` is 1-based. Never evicts.
    fn prefill_step(&mut self, rows: &[ScoreRow], step_index: usize) -> Result<()>;

    /// Ends the prompt phase, shrinking the cache to the target size.
    /// Returns the evicted positions in eviction order.
    fn transition_to_generation(&mut self) -> Result<Vec<usize>>;

    /// Appends the next generated token, updates statistics from its score
    /// rows (spanning all live positions including itself), and evicts at
    /// most one position if the cache exceeds its target.
    fn generation_step(&mut self, rows: &[ScoreRow]) -> Result<Option<usize>>;

    /// Live original positions, strictly increasing.
    fn live_positions(&self) -> &[usize];

    fn target(&self) -> usize;

    fn phase(&self) -> Phase;
}

fn check_rows(rows: &[ScoreRow], live_len: usize, num_heads: usize) -> Result<()> {
    if rows.len() != num_heads {
        return Err(Error::invalid_argument(format!(
            "expected {num_heads} head rows, got {}",
            rows.len()
        )));
    }
    for row in rows {
        if row.len() != live_len {
            return Err(Error::invalid_argument(format!(
                "row length {} != live positions {live_len}",
                row.len()
            )));
        }
    }
    Ok(())
}

/// Voting-based eviction state for one layer.
#[derive(Debug, Clone)]
pub struct KVCacheState {
    cfg: EvictionConfig,
    live: Vec<usize>,
    votes: Vec<f64>,
    target: usize,
    phase: Phase,
    next_position: usize,
}

impl KVCacheState {
    /// Creates the per-layer state for a prompt of length `prompt_len`.
    pub fn new(prompt_len: usize, cfg: EvictionConfig) -> Result<Self> {
        cfg.validate()?;
        if prompt_len == 0 {
            return Err(Error::invalid_argument("prompt length must be >= 1"));
        }
        let target = target_size(prompt_len, &cfg);
        Ok(KVCacheState {
            cfg,
            live: Vec::new(),
            votes: Vec::new(),
            target,
            phase: Phase::PrefillReserved,
            next_position: 0,
        })
    }

    pub fn config(&self) -> &EvictionConfig {
        &self.cfg
    }

    pub fn vote_count(&self, position: usize) -> Option<f64> {
        self.live
            .iter()
            .position(|p| *p == position)
            .map(|i| self.votes[i])
    }

    pub fn vote_counts(&self) -> &[f64] {
        &self.votes
    }

    fn reserved_count(&self) -> usize {
        self.cfg.reserved.min(self.live.len())
    }

    fn append(&mut self) {
        self.live.push(self.next_position);
        self.votes.push(0.0);
        self.next_position += 1;
    }

    /// Casts one step's votes: per head, each eligible position scoring
    /// strictly below the adaptive threshold gets an indicator 1; when the
    /// threshold is non-positive only the minimum-score eligible positions
    /// do. Vote counts grow by the head average of the indicators.
    pub fn cast_votes(&mut self, rows: &[ScoreRow]) -> Result<()> {
        check_rows(rows, self.live.len(), self.cfg.num_heads)?;
        let reserved = self.reserved_count();
        let weight = 1.0 / self.cfg.num_heads as f64;
        for row in rows {
            let t = adaptive_threshold(row, &self.cfg);
            let scores = row.scores();
            if t > 0.0 {
                for (i, &s) in scores.iter().enumerate().skip(reserved) {
                    if s < t - VOTE_EPSILON {
                        self.votes[i] += weight;
                    }
                }
            } else if reserved < scores.len() {
                let min = scores[reserved..]
                    .iter()
                    .copied()
                    .fold(f64::INFINITY, f64::min);
                for (i, &s) in scores.iter().enumerate().skip(reserved) {
                    if s <= min + VOTE_EPSILON {
                        self.votes[i] += weight;
                    }
                }
            }
        }
        Ok(())
    }

    /// Index (into the live ordering) of the next eviction victim: the
    /// eligible position with the highest vote count, earliest on ties.
    pub fn select_eviction(&self) -> Result<usize> {
        let reserved = self.reserved_count();
        if reserved >= self.live.len() {
            return Err(Error::invalid_state("no eligible position to evict"));
        }
        let mut best = reserved;
        for i in reserved + 1..self.live.len() {
            if self.votes[i] > self.votes[best] {
                best = i;
            }
        }
        Ok(best)
    }

    fn evict_one(&mut self) -> Result<usize> {
        let idx = self.select_eviction()?;
        self.votes.remove(idx);
        Ok(self.live.remove(idx))
    }
}

impl CachePolicy for KVCacheState {
    fn prefill_step(&mut self, rows: &[ScoreRow], step_index: usize) -> Result<()> {
        if self.phase == Phase::Generation {
            return Err(Error::invalid_state("prefill step after generation began"));
        }
        self.append();
        if step_index > self.cfg.reserved {
            self.phase = Phase::PrefillVoting;
            self.cast_votes(rows)?;
        }
        Ok(())
    }

    fn transition_to_generation(&mut self) -> Result<Vec<usize>> {
        if self.phase == Phase::Generation {
            return Err(Error::invalid_state("already in generation phase"));
        }
        let mut evicted = Vec::new();
        while self.live.len() > self.target {
            evicted.push(self.evict_one()?);
        }
        self.phase = Phase::Generation;
        Ok(evicted)
    }

    fn generation_step(&mut self, rows: &[ScoreRow]) -> Result<Option<usize>> {
        if self.phase != Phase::Generation {
            return Err(Error::invalid_state("generation step before transition"));
        }
        self.append();
        self.cast_votes(rows)?;
        if self.live.len() > self.target {
            Ok(Some(self.evict_one()?))
        } else {
            Ok(None)
        }
    }

    fn live_positions(&self) -> &[usize] {
        &self.live
    }

    fn target(&self) -> usize {
        self.target
    }

    fn phase(&self) -> Phase {
        self.phase
    }
}

/// Accumulated-attention-score baseline: per-position sums of raw scores
/// across heads and steps; evicts the eligible minimum.
#[derive(Debug, Clone)]
pub struct H2oState {
    cfg: EvictionConfig,
    live: Vec<usize>,
    accumulated: Vec<f64>,
    target: usize,
    phase: Phase,
    next_position: usize,
}

impl H2oState {
    pub fn new(prompt_len: usize, cfg: EvictionConfig) -> Result<Self> {
        cfg.validate()?;
        if prompt_len == 0 {
            return Err(Error::invalid_argument("prompt length must be >= 1"));
        }
        let target = target_size(prompt_len, &cfg);
        Ok(H2oState {
            cfg,
            live: Vec::new(),
            accumulated: Vec::new(),
            target,
            phase: Phase::PrefillReserved,
            next_position: 0,
        })
    }

    pub fn accumulated_score(&self, position: usize) -> Option<f64> {
        self.live
            .iter()
            .position(|p| *p == position)
            .map(|i| self.accumulated[i])
    }

    fn reserved_count(&self) -> usize {
        self.cfg.reserved.min(self.live.len())
    }

    fn accumulate(&mut self, rows: &[ScoreRow]) -> Result<()> {
        check_rows(rows, self.live.len(), self.cfg.num_heads)?;
        for row in rows {
            for (acc, s) in self.accumulated.iter_mut().zip(row.scores()) {
                *acc += s;
            }
        }
        Ok(())
    }

    fn evict_one(&mut self) -> Result<usize> {
        let reserved = self.reserved_count();
        if reserved >= self.live.len() {
            return Err(Error::invalid_state("no eligible position to evict"));
        }
        let mut best = reserved;
        for i in reserved + 1..self.live.len() {
            if self.accumulated[i] < self.accumulated[best] {
                best = i;
            }
        }
        self.accumulated.remove(best);
        Ok(self.live.remove(best))
    }
}

impl CachePolicy for H2oState {
    fn prefill_step(&mut self, rows: &[ScoreRow], _step_index: usize) -> Result<()> {
        if self.phase == Phase::Generation {
            return Err(Error::invalid_state("prefill step after generation began"));
        }
        self.live.push(self.next_position);
        self.accumulated.push(0.0);
        self.next_position += 1;
        self.accumulate(rows)
    }

    fn transition_to_generation(&mut self) -> Result<Vec<usize>> {
        if self.phase == Phase::Generation {
            return Err(Error::invalid_state("already in generation phase"));
        }
        let mut evicted = Vec::new();
        while self.live.len() > self.target {
            evicted.push(self.evict_one()?);
        }
        self.phase = Phase::Generation;
        Ok(evicted)
    }

    fn generation_step(&mut self, rows: &[ScoreRow]) -> Result<Option<usize>> {
        if self.phase != Phase::Generation {
            return Err(Error::invalid_state("generation step before transition"));
        }
        self.live.push(self.next_position);
        self.accumulated.push(0.0);
        self.next_position += 1;
        self.accumulate(rows)?;
        if self.live.len() > self.target {
            Ok(Some(self.evict_one()?))
        } else {
            Ok(None)
        }
    }

    fn live_positions(&self) -> &[usize] {
        &self.live
    }

    fn target(&self) -> usize {
        self.target
    }

    fn phase(&self) -> Phase {
        self.phase
    }
}

/// Sliding-window baseline: retains the reserved prefix plus the most
/// recent positions; evicts the oldest non-reserved entry when over target.
#[derive(Debug, Clone)]
pub struct SlidingWindowState {
    cfg: EvictionConfig,
    live: Vec<usize>,
    target: usize,
    phase: Phase,
    next_position: usize,
}

impl SlidingWindowState {
    pub fn new(prompt_len: usize, cfg: EvictionConfig) -> Result<Self> {
        cfg.validate()?;
        if prompt_len == 0 {
            return Err(Error::invalid_argument("prompt length must be >= 1"));
        }
        let target = target_size(prompt_len, &cfg);
        Ok(SlidingWindowState {
            cfg,
            live: Vec::new(),
            target,
            phase: Phase::PrefillReserved,
            next_position: 0,
        })
    }

    fn evict_one(&mut self) -> Result<usize> {
        let reserved = self.cfg.reserved.min(self.live.len());
        if reserved >= self.live.len() {
            return Err(Error::invalid_state("no eligible position to evict"));
        }
        Ok(self.live.remove(reserved))
    }
}

impl CachePolicy for SlidingWindowState {
    fn prefill_step(&mut self, _rows: &[ScoreRow], _step_index: usize) -> Result<()> {
        if self.phase == Phase::Generation {
            return Err(Error::invalid_state("prefill step after generation began"));
        }
        self.live.push(self.next_position);
        self.next_position += 1;
        Ok(())
    }

    fn transition_to_generation(&mut self) -> Result<Vec<usize>> {
        if self.phase == Phase::Generation {
            return Err(Error::invalid_state("already in generation phase"));
        }
        let mut evicted = Vec::new();
        while self.live.len() > self.target {
            evicted.push(self.evict_one()?);
        }
        self.phase = Phase::Generation;
        Ok(evicted)
    }

    fn generation_step(&mut self, _rows: &[ScoreRow]) -> Result<Option<usize>> {
        if self.phase != Phase::Generation {
            return Err(Error::invalid_state("generation step before transition"));
        }
        self.live.push(self.next_position);
        self.next_position += 1;
        if self.live.len() > self.target {
            Ok(Some(self.evict_one()?))
        } else {
            Ok(None)
        }
    }

    fn live_positions(&self) -> &[usize] {
        &self.live
    }

    fn target(&self) -> usize {
        self.target
    }

    fn phase(&self) -> Phase {
        self.phase
    }
}

/// Keeps the entire cache; the quality harness's upper reference.
#[derive(Debug, Clone, Default)]
pub struct KeepAllState {
    live: Vec<usize>,
    phase: Option<Phase>,
    next_position: usize,
}

impl KeepAllState {
    pub fn new() -> Self {
        Self::default()
    }
}

impl CachePolicy for KeepAllState {
    fn prefill_step(&mut self, _rows: &[ScoreRow], _step_index: usize) -> Result<()> {
        self.live.push(self.next_position);
        self.next_position += 1;
        Ok(())
    }

    fn transition_to_generation(&mut self) -> Result<Vec<usize>> {
        self.phase = Some(Phase::Generation);
        Ok(Vec::new())
    }

    fn generation_step(&mut self, _rows: &[ScoreRow]) -> Result<Option<usize>> {
        self.live.push(self.next_position);
        self.next_position += 1;
        Ok(None)
    }

    fn live_positions(&self) -> &[usize] {
        &self.live
    }

    fn target(&self) -> usize {
        usize::MAX
    }

    fn phase(&self) -> Phase {
        self.phase.unwrap_or(Phase::PrefillReserved)
    }
}
