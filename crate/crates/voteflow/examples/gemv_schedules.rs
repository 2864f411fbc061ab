//! GEMV cycle plans on the flexible engine vs the fixed adder tree, and a
//! cycle-exact replay of one plan on the PE array model.
//!
//! Run with: cargo run --example gemv_schedules

use voteflow::cyclesim::{pe_array_execute, PeArrayModel, PeControl};
use voteflow::dataflow::{fixed_tree_schedule, make_schedule, GemvProblem, Interpretation};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!(
        "{:>6} {:>14} {:>10} {:>14} {:>10}",
        "k", "flex cycles", "flex util", "tree cycles", "tree util"
    );
    // The reduction dimension sweeping across the lane and tree widths.
    for k in [100usize, 128, 192, 255, 256, 257, 300, 384, 512, 513] {
        let p = GemvProblem::new(k, 1)?;
        let flex = make_schedule(p, Interpretation::Inner, 128)?;
        let tree = fixed_tree_schedule(p, 256)?;
        println!(
            "{k:>6} {:>14} {:>10.4} {:>14} {:>10.4}",
            flex.total_cycles, flex.utilization, tree.total_cycles, tree.utilization
        );
    }

    // Outer product: the serial dimension maps to cycles, so ragged sizes
    // cost time instead of idle lanes.
    let outer = make_schedule(GemvProblem::new(300, 128)?, Interpretation::Outer, 128)?;
    println!(
        "\nouter (k=300, n=128): {} cycles at utilization {:.3}",
        outer.total_cycles, outer.utilization
    );

    // Replay one plan cycle by cycle and count control signals.
    let arr = PeArrayModel::new(8, 8, 2, Interpretation::Inner)?;
    let plan = make_schedule(GemvProblem::new(257, 4)?, Interpretation::Inner, 128)?;
    let exec = pe_array_execute(&plan, &arr, false)?;
    println!(
        "\nreplay k=257, n=4: planned {} cycles, executed {} cycles",
        plan.total_cycles, exec.cycles
    );
    for control in [
        PeControl::AccumulateLocal,
        PeControl::TransmitPartial,
        PeControl::ClearRegister,
        PeControl::Disable,
    ] {
        println!(
            "  {:?}: {} lane-cycles",
            control,
            exec.control_counts[control.index()]
        );
    }
    println!("  achieved utilization {:.4}", exec.achieved_utilization);
    Ok(())
}
