//! Analytical model of GPU memory-hierarchy costs for RNS-CKKS kernels:
//! limb-granular traffic, roofline bounds, key-switching footprints, L2-aware
//! batch planning, complementary pipelining and launch-overhead accounting.

pub mod batch;
pub mod error;
pub mod kernel;
pub mod keyswitch;
pub mod machine;
pub mod roofline;
pub mod schedule;
pub mod sequence;

pub use batch::{amortized_curve, plan_batch, BatchPlan, BatchPoint, BatchSequence};
pub use error::{Error, Result};
pub use kernel::{kernel_core_ops, kernel_traffic, CoreOps, KernelDescriptor, KernelKind, Traffic, TrafficReport};
pub use keyswitch::{keyswitch_footprint, keyswitch_traffic, KeySwitchShape, Stage, StageTraffic};
pub use machine::MachineModel;
pub use roofline::{roofline, Resource, ResourceDemand, RooflineBound};
pub use schedule::{schedule_demands, schedule_pipeline, Schedule};
pub use sequence::{estimate_sequence, KernelTrace, LaunchMode, SequenceEstimate};
