//! Cycle-by-cycle model of the runtime-reconfigurable PE array.
//!
//! The array is organized as `banks` tiles of `rows x cols` PEs. Within a
//! row, PEs at odd 1-based positions (1, 3, 5, 7) are type-A: one adder
//! operand is the local product, the other arrives from a neighbor. PEs at
//! even positions (2, 4, 6, 8) are type-B: both adder operands come from
//! other PEs, forming the first-level adder tree; a second level aggregates
//! across rows. The tree wiring is only active in inner-product mode.
//!
//! Every cycle each PE executes exactly one 2-bit command: accumulate a
//! local partial sum, transmit a partial sum, clear its register, or stay
//! disabled. Executing a schedule assigns commands so that
//!
//! - inner mode: the lanes holding this pass's `k`-window are active;
//!   type-B lanes transmit into the tree and type-A lanes accumulate;
//! - outer mode: the lanes mapped to live output columns accumulate
//!   locally and nothing is ever transmitted.
//!
//! Register clears happen in the drain window between operators (part of
//! the per-operator overhead), not during scheduled cycles.

use serde::{Deserialize, Serialize};

use crate::dataflow::{GemvSchedule, Interpretation};
use crate::error::{Error, Result};

/// One PE command per cycle, selected by the 2-bit control signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeControl {
    AccumulateLocal,
    TransmitPartial,
    ClearRegister,
    Disable,
}

impl PeControl {
    pub fn index(self) -> usize {
        match self {
            PeControl::AccumulateLocal => 0,
            PeControl::TransmitPartial => 1,
            PeControl::ClearRegister => 2,
            PeControl::Disable => 3,
        }
    }
}

/// Adder-operand sourcing of a PE, fixed by its position in the row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeKind {
    /// Local product plus a neighbor's output.
    TypeA,
    /// Both operands sourced from other PEs.
    TypeB,
}

/// PE array geometry and the currently configured dataflow mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeArrayModel {
    pub rows: usize,
    pub cols: usize,
    pub banks: usize,
    pub mode: Interpretation,
}

impl PeArrayModel {
    pub fn new(rows: usize, cols: usize, banks: usize, mode: Interpretation) -> Result<Self> {
        if rows == 0 || cols == 0 || banks == 0 {
            return Err(Error::invalid_config("pe array dims must be >= 1"));
        }
        Ok(PeArrayModel {
            rows,
            cols,
            banks,
            mode,
        })
    }

    pub fn lanes(&self) -> usize {
        self.rows * self.cols * self.banks
    }

    /// Type of the PE behind a lane index: odd 1-based row positions are
    /// type-A, even ones type-B.
    pub fn kind_of(&self, lane: usize) -> PeKind {
        let col = lane % self.cols;
        if col.is_multiple_of(2) {
            PeKind::TypeA
        } else {
            PeKind::TypeB
        }
    }

    /// The two-level adder tree only participates in inner-product mode.
    pub fn tree_active(&self) -> bool {
        self.mode == Interpretation::Inner
    }

    /// Drain commands issued between operators: every register cleared.
    pub fn drain_controls(&self) -> Vec<PeControl> {
        vec![PeControl::ClearRegister; self.lanes()]
    }
}

/// Result of replaying a schedule on the array.
#[derive(Debug, Clone, PartialEq)]
pub struct PeExecution {
    /// Cycles consumed; always exactly the schedule's `total_cycles`.
    pub cycles: u64,
    /// Command counts indexed by `PeControl::index`.
    pub control_counts: [u64; 4],
    /// Mean fraction of lanes doing useful work.
    pub achieved_utilization: f64,
    /// Full per-cycle command map when tracing was requested.
    pub per_cycle: Option<Vec<Vec<PeControl>>>,
}

fn controls_for_cycle(
    schedule: &GemvSchedule,
    arr: &PeArrayModel,
    cycle: u64,
    out: &mut Vec<PeControl>,
) -> usize {
    let lanes = arr.lanes();
    let active = match schedule.interpretation {
        Interpretation::Inner => {
            // One output element takes `passes` consecutive cycles; the
            // window of the current pass occupies the low lanes.
            let pass = (cycle % schedule.passes as u64) as usize;
            schedule.problem.k.saturating_sub(pass * lanes).min(lanes)
        }
        Interpretation::Outer => {
            // A pass covers one slice of output columns for all k cycles.
            let pass = (cycle / schedule.problem.k as u64) as usize;
            schedule.problem.n.saturating_sub(pass * lanes).min(lanes)
        }
    };
    out.clear();
    for lane in 0..lanes {
        let control = if lane >= active {
            PeControl::Disable
        } else {
            match schedule.interpretation {
                Interpretation::Outer => PeControl::AccumulateLocal,
                Interpretation::Inner => match arr.kind_of(lane) {
                    PeKind::TypeA => PeControl::AccumulateLocal,
                    PeKind::TypeB => PeControl::TransmitPartial,
                },
            }
        };
        out.push(control);
    }
    active
}

/// Replays a schedule cycle by cycle, assigning one command to every PE per
/// cycle. Consumes exactly `schedule.total_cycles` cycles.
pub fn pe_array_execute(
    schedule: &GemvSchedule,
    arr: &PeArrayModel,
    record_trace: bool,
) -> Result<PeExecution> {
    if schedule.interpretation != arr.mode {
        return Err(Error::invalid_config(format!(
            "schedule is {:?} but array is configured {:?}",
            schedule.interpretation, arr.mode
        )));
    }
    if schedule.lanes != arr.lanes() {
        return Err(Error::invalid_config(format!(
            "schedule planned for {} lanes, array has {}",
            schedule.lanes,
            arr.lanes()
        )));
    }

    let mut counts = [0u64; 4];
    let mut active_total: u64 = 0;
    let mut trace = record_trace.then(Vec::new);
    let mut controls = Vec::with_capacity(arr.lanes());
    for cycle in 0..schedule.total_cycles {
        let active = controls_for_cycle(schedule, arr, cycle, &mut controls);
        active_total += active as u64;
        for c in &controls {
            counts[c.index()] += 1;
        }
        if let Some(t) = trace.as_mut() {
            t.push(controls.clone());
        }
    }

    Ok(PeExecution {
        cycles: schedule.total_cycles,
        control_counts: counts,
        achieved_utilization: active_total as f64
            / (schedule.total_cycles * arr.lanes() as u64) as f64,
        per_cycle: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataflow::{make_schedule, GemvProblem};

    fn array(rows: usize, cols: usize, banks: usize, mode: Interpretation) -> PeArrayModel {
        PeArrayModel::new(rows, cols, banks, mode).unwrap()
    }

    #[test]
    fn kinds_alternate_within_rows() {
        let arr = array(8, 8, 2, Interpretation::Inner);
        // 1-based positions 1, 3, 5, 7 are type-A.
        assert_eq!(arr.kind_of(0), PeKind::TypeA);
        assert_eq!(arr.kind_of(1), PeKind::TypeB);
        assert_eq!(arr.kind_of(6), PeKind::TypeA);
        assert_eq!(arr.kind_of(7), PeKind::TypeB);
        // Same pattern in the next row and the second bank.
        assert_eq!(arr.kind_of(8), PeKind::TypeA);
        assert_eq!(arr.kind_of(64 + 1), PeKind::TypeB);
    }

    #[test]
    fn inner_half_filled_lanes_half_utilized() {
        let arr = array(8, 8, 2, Interpretation::Inner);
        let s =
            make_schedule(GemvProblem::new(64, 5).unwrap(), Interpretation::Inner, 128).unwrap();
        let exec = pe_array_execute(&s, &arr, false).unwrap();
        assert_eq!(exec.cycles, 5);
        assert_eq!(exec.achieved_utilization, 0.5);
        // Half the lanes disabled every cycle.
        assert_eq!(exec.control_counts[PeControl::Disable.index()], 5 * 64);
    }

    #[test]
    fn outer_full_width_accumulates_only() {
        let arr = array(8, 8, 2, Interpretation::Outer);
        let s = make_schedule(
            GemvProblem::new(33, 128).unwrap(),
            Interpretation::Outer,
            128,
        )
        .unwrap();
        let exec = pe_array_execute(&s, &arr, false).unwrap();
        assert_eq!(exec.cycles, 33);
        assert_eq!(
            exec.control_counts[PeControl::AccumulateLocal.index()],
            33 * 128
        );
        assert_eq!(exec.control_counts[PeControl::TransmitPartial.index()], 0);
        assert_eq!(exec.control_counts[PeControl::Disable.index()], 0);
    }

    #[test]
    fn mode_mismatch_is_rejected() {
        let arr = array(8, 8, 2, Interpretation::Outer);
        let s =
            make_schedule(GemvProblem::new(64, 5).unwrap(), Interpretation::Inner, 128).unwrap();
        assert!(pe_array_execute(&s, &arr, false).is_err());
    }

    #[test]
    fn execution_consumes_exactly_scheduled_cycles() {
        for (k, n, interp) in [
            (7usize, 3usize, Interpretation::Inner),
            (300, 5, Interpretation::Inner),
            (12, 40, Interpretation::Outer),
            (257, 128, Interpretation::Inner),
        ] {
            let arr = array(4, 4, 1, interp);
            let s = make_schedule(GemvProblem::new(k, n).unwrap(), interp, 16).unwrap();
            let exec = pe_array_execute(&s, &arr, false).unwrap();
            assert_eq!(exec.cycles, s.total_cycles);
            assert!((exec.achieved_utilization - s.utilization).abs() < 1e-12);
        }
    }

    /// Brute-force dataflow-graph oracle on a 4x4 toy array: derive each
    /// cycle's command map independently from the mapping rules and compare
    /// against the executed trace.
    #[test]
    fn toy_array_trace_matches_dataflow_oracle() {
        let lanes = 16;

        // Inner product, k = 10 (one partial pass), n = 3.
        let arr = array(4, 4, 1, Interpretation::Inner);
        let s = make_schedule(
            GemvProblem::new(10, 3).unwrap(),
            Interpretation::Inner,
            lanes,
        )
        .unwrap();
        let exec = pe_array_execute(&s, &arr, true).unwrap();
        let trace = exec.per_cycle.as_ref().unwrap();
        assert_eq!(trace.len(), 3);
        for cycle_map in trace {
            for (lane, control) in cycle_map.iter().enumerate() {
                let want = if lane >= 10 {
                    PeControl::Disable
                } else if lane % 4 % 2 == 0 {
                    PeControl::AccumulateLocal
                } else {
                    PeControl::TransmitPartial
                };
                assert_eq!(*control, want, "lane {lane}");
            }
        }

        // Inner product with two passes: k = 20 splits 16 + 4.
        let s2 = make_schedule(
            GemvProblem::new(20, 2).unwrap(),
            Interpretation::Inner,
            lanes,
        )
        .unwrap();
        let exec2 = pe_array_execute(&s2, &arr, true).unwrap();
        let trace2 = exec2.per_cycle.as_ref().unwrap();
        assert_eq!(trace2.len(), 4);
        for (c, cycle_map) in trace2.iter().enumerate() {
            let window = if c % 2 == 0 { 16 } else { 4 };
            let active = cycle_map
                .iter()
                .filter(|ctl| **ctl != PeControl::Disable)
                .count();
            assert_eq!(active, window, "cycle {c}");
        }

        // Outer product, n = 6 live columns over 16 lanes, k = 5 broadcasts.
        let arr_o = array(4, 4, 1, Interpretation::Outer);
        let s3 = make_schedule(
            GemvProblem::new(5, 6).unwrap(),
            Interpretation::Outer,
            lanes,
        )
        .unwrap();
        let exec3 = pe_array_execute(&s3, &arr_o, true).unwrap();
        let trace3 = exec3.per_cycle.as_ref().unwrap();
        assert_eq!(trace3.len(), 5);
        for cycle_map in trace3 {
            for (lane, control) in cycle_map.iter().enumerate() {
                let want = if lane < 6 {
                    PeControl::AccumulateLocal
                } else {
                    PeControl::Disable
                };
                assert_eq!(*control, want);
            }
        }
    }

    #[test]
    fn drain_clears_every_register() {
        let arr = array(8, 8, 2, Interpretation::Inner);
        let drain = arr.drain_controls();
        assert_eq!(drain.len(), 128);
        assert!(drain.iter().all(|c| *c == PeControl::ClearRegister));
    }

    #[test]
    fn tree_only_in_inner_mode() {
        assert!(array(8, 8, 2, Interpretation::Inner).tree_active());
        assert!(!array(8, 8, 2, Interpretation::Outer).tree_active());
    }
}
