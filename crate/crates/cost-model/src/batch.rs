//! L2-capacity-aware batching of independent key-switching sequences.
//!
//! Batching `B` sequences merges their kernels, so a batch pays one set of
//! launches but `B` times the per-sequence kernel time. Once `B` sequences
//! no longer fit in L2, the overflow is charged to DRAM once per touch,
//! where touches = sequence traffic / sequence footprint.

use serde::Serialize;

use crate::kernel::{KernelDescriptor, TrafficReport};
use crate::keyswitch::{keyswitch_footprint, keyswitch_kernels, stage1_kernels, stage3_kernels, KeySwitchShape, Stage};
use crate::machine::MachineModel;
use crate::roofline::ResourceDemand;
use crate::sequence::LaunchMode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchSequence {
    KsStage1,
    KsStage3,
    /// Whole key-switch; the resident set is the larger of the stage-1 and
    /// stage-3 footprints.
    KsFull,
}

impl BatchSequence {
    pub fn footprint(self, shape: &KeySwitchShape, batch: u64) -> u64 {
        match self {
            BatchSequence::KsStage1 => keyswitch_footprint(shape, Stage::ModUp, batch),
            BatchSequence::KsStage3 => keyswitch_footprint(shape, Stage::ModDown, batch),
            BatchSequence::KsFull => keyswitch_footprint(shape, Stage::ModUp, batch)
                .max(keyswitch_footprint(shape, Stage::ModDown, batch)),
        }
    }

    pub fn kernels(self, shape: &KeySwitchShape) -> Vec<KernelDescriptor> {
        match self {
            BatchSequence::KsStage1 => stage1_kernels(shape),
            BatchSequence::KsStage3 => stage3_kernels(shape),
            BatchSequence::KsFull => keyswitch_kernels(shape),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BatchPlan {
    pub b_star: u64,
    pub footprint_per_sequence: u64,
    pub footprint_at_b_star: u64,
    pub capacity: f64,
    /// Set when even a single sequence exceeds the capacity.
    pub spill: bool,
}

/// Largest `B >= 1` whose footprint fits in L2.
pub fn plan_batch(shape: &KeySwitchShape, seq: BatchSequence, machine: &MachineModel) -> BatchPlan {
    let per = seq.footprint(shape, 1);
    let cap = machine.l2_capacity;
    let fit = if per == 0 { u64::MAX } else { (cap / per as f64).floor() as u64 };
    let b_star = fit.max(1);
    BatchPlan {
        b_star,
        footprint_per_sequence: per,
        footprint_at_b_star: seq.footprint(shape, b_star),
        capacity: cap,
        spill: fit == 0,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BatchPoint {
    pub batch: u64,
    pub footprint: u64,
    pub spill_bytes: f64,
    pub kernel_time: f64,
    pub launch_time: f64,
    pub spill_time: f64,
    pub total: f64,
    pub amortized: f64,
}

/// Modeled latency of `batch` sequences run together.
pub fn batch_point(shape: &KeySwitchShape, seq: BatchSequence, machine: &MachineModel, batch: u64, mode: LaunchMode) -> BatchPoint {
    let kernels = seq.kernels(shape);
    let per_seq: f64 = kernels
        .iter()
        .map(|k| {
            let r = TrafficReport::from_kernels(std::slice::from_ref(k));
            ResourceDemand::from_report(&r, machine).bound(machine).0
        })
        .sum();
    let traffic = TrafficReport::from_kernels(&kernels).total.total() as f64;
    let per_fp = seq.footprint(shape, 1) as f64;
    let touches = if per_fp > 0.0 { traffic / per_fp } else { 0.0 };
    let footprint = seq.footprint(shape, batch);
    let spill_bytes = (footprint as f64 - machine.l2_capacity).max(0.0);
    let spill_time = spill_bytes * touches / machine.dram_bw;
    let launch_time = match mode {
        LaunchMode::Eager => kernels.len() as f64 * machine.launch_overhead,
        LaunchMode::StaticGraph => 0.0,
    };
    let kernel_time = batch as f64 * per_seq;
    let total = kernel_time + launch_time + spill_time;
    BatchPoint {
        batch,
        footprint,
        spill_bytes,
        kernel_time,
        launch_time,
        spill_time,
        total,
        amortized: total / batch as f64,
    }
}

/// Points for `B = 1..=max_batch`.
pub fn amortized_curve(
    shape: &KeySwitchShape,
    seq: BatchSequence,
    machine: &MachineModel,
    max_batch: u64,
    mode: LaunchMode,
) -> Vec<BatchPoint> {
    (1..=max_batch.max(1))
        .map(|b| batch_point(shape, seq, machine, b, mode))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(l: u64) -> KeySwitchShape {
        KeySwitchShape::new(1 << 16, l, 12)
    }

    #[test]
    fn planner_examples() {
        let m = MachineModel::rtx5090();
        assert_eq!(plan_batch(&shape(12), BatchSequence::KsStage3, &m).b_star, 7);
        assert_eq!(plan_batch(&shape(12), BatchSequence::KsFull, &m).b_star, 7);
        let p = plan_batch(&shape(48), BatchSequence::KsStage1, &m);
        assert_eq!((p.b_star, p.spill), (1, false));
        let mut tiny = m.clone();
        tiny.l2_capacity = 1e6;
        let p = plan_batch(&shape(48), BatchSequence::KsStage1, &tiny);
        assert_eq!((p.b_star, p.spill), (1, true));
    }

    #[test]
    fn curve_turns_at_b_star() {
        let m = MachineModel::rtx5090();
        let c = amortized_curve(&shape(12), BatchSequence::KsStage3, &m, 12, LaunchMode::Eager);
        for w in c[..7].windows(2) {
            assert!(w[1].amortized <= w[0].amortized);
        }
        for w in c[6..].windows(2) {
            assert!(w[1].amortized > w[0].amortized);
        }
    }
}
