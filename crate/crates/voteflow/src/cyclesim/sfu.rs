//! Special-function-unit latency model for softmax and layernorm.
//!
//! Both operators split into a reduction (max and exp-sum, or sum and
//! sum-of-squares) and an element-wise normalization. Under conventional
//! scheduling the stages serialize between the two surrounding GEMVs and
//! their latency lands on the critical path. Under element-serial
//! scheduling the reduction rides the serial output of the inner-product
//! GEMV and the normalization rides the serial input of the outer-product
//! GEMV, leaving only a short flush window on the critical path.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SfuScheduling {
    /// Stages run after the producing GEMV and before the consuming one.
    Conventional,
    /// Reduction and normalization overlap with the GEMV element streams.
    ElementSerial,
}

/// SFU resources and scheduling mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SfuConfig {
    pub exp_units: usize,
    pub div_units: usize,
    pub sqrt_units: usize,
    pub mul_units: usize,
    pub add_units: usize,
    /// Tile FIFO depth between the reduction and the running update.
    pub fifo_depth: usize,
    pub scheduling: SfuScheduling,
    /// Critical-path cycles to drain the pipeline once the last element
    /// arrives in element-serial mode.
    pub flush_epsilon: u64,
}

impl Default for SfuConfig {
    fn default() -> Self {
        SfuConfig {
            exp_units: 2,
            div_units: 2,
            sqrt_units: 1,
            mul_units: 2,
            add_units: 4,
            fifo_depth: 32,
            scheduling: SfuScheduling::ElementSerial,
            flush_epsilon: 8,
        }
    }
}

impl SfuConfig {
    pub fn conventional(mut self) -> Self {
        self.scheduling = SfuScheduling::Conventional;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NonlinearKind {
    Softmax,
    LayerNorm,
}

fn ceil_div(a: u64, b: usize) -> u64 {
    a.div_ceil(b as u64)
}

/// Critical-path cycles a length-`l` nonlinear operator adds between its
/// two surrounding GEMVs.
///
/// Element-serial: the flush epsilon only. Conventional softmax: the
/// serialized reduction-add, exponentiation, and division stages at one
/// element per unit per cycle. Conventional layernorm: the reduction-add
/// and scale-multiply stages plus one cycle for the scalar square root.
pub fn sfu_latency(kind: NonlinearKind, l: usize, cfg: &SfuConfig) -> u64 {
    match cfg.scheduling {
        SfuScheduling::ElementSerial => cfg.flush_epsilon,
        SfuScheduling::Conventional => {
            let l = l as u64;
            match kind {
                NonlinearKind::Softmax => {
                    ceil_div(l, cfg.add_units)
                        + ceil_div(l, cfg.exp_units)
                        + ceil_div(l, cfg.div_units)
                }
                NonlinearKind::LayerNorm => {
                    ceil_div(l, cfg.add_units) + 1 + ceil_div(l, cfg.mul_units)
                }
            }
        }
    }
}

/// Idle cycles the element-serial pipeline inserts into the PE array's
/// stream. The array emits or consumes at most one element per cycle, so
/// any stage with at least one unit keeps up and a single SFU instance
/// suffices; the count is zero whenever every stage's unit count reaches
/// the emission rate.
pub fn element_serial_stall_cycles(cfg: &SfuConfig, elements_per_cycle: usize) -> u64 {
    let min_units = cfg
        .exp_units
        .min(cfg.div_units)
        .min(cfg.sqrt_units)
        .min(cfg.mul_units)
        .min(cfg.add_units);
    if min_units >= elements_per_cycle {
        0
    } else {
        // Deficit cycles per element, summed over a full FIFO window.
        (elements_per_cycle - min_units) as u64 * cfg.fifo_depth as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn element_serial_is_flush_only() {
        let cfg = SfuConfig::default();
        for l in [1usize, 64, 1024, 4096] {
            assert_eq!(sfu_latency(NonlinearKind::Softmax, l, &cfg), 8);
            assert_eq!(sfu_latency(NonlinearKind::LayerNorm, l, &cfg), 8);
        }
    }

    #[test]
    fn conventional_softmax_1024() {
        let cfg = SfuConfig::default().conventional();
        // 1024/4 adds + 1024/2 exps + 1024/2 divs.
        assert_eq!(
            sfu_latency(NonlinearKind::Softmax, 1024, &cfg),
            256 + 512 + 512
        );
    }

    #[test]
    fn conventional_single_element_is_three_stages() {
        let cfg = SfuConfig::default().conventional();
        assert_eq!(sfu_latency(NonlinearKind::Softmax, 1, &cfg), 3);
        assert_eq!(sfu_latency(NonlinearKind::LayerNorm, 1, &cfg), 3);
    }

    #[test]
    fn single_unit_instance_never_stalls_serial_stream() {
        let one_of_each = SfuConfig {
            exp_units: 1,
            div_units: 1,
            sqrt_units: 1,
            mul_units: 1,
            add_units: 1,
            ..SfuConfig::default()
        };
        assert_eq!(element_serial_stall_cycles(&one_of_each, 1), 0);
        assert_eq!(element_serial_stall_cycles(&SfuConfig::default(), 1), 0);
    }
}
