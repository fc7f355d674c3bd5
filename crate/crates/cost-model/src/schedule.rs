//! Co-scheduling a DRAM-bound kernel group with an L2-bound one.

use serde::Serialize;

use crate::kernel::{KernelDescriptor, TrafficReport};
use crate::machine::MachineModel;
use crate::roofline::{Resource, ResourceDemand};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScheduleGroup {
    pub label: String,
    pub kernels: Vec<String>,
    pub demand: ResourceDemand,
    pub time: f64,
    pub bottleneck: Resource,
    /// Index of the group this one runs alongside, if any.
    pub overlaps_with: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Schedule {
    pub groups: Vec<ScheduleGroup>,
    /// Groups run back to back.
    pub sequential_latency: f64,
    /// Groups share every resource; latency is the busiest resource.
    pub overlapped_latency: f64,
    pub overlapped_bottleneck: Resource,
    pub warnings: Vec<String>,
}

impl Schedule {
    pub fn speedup(&self) -> f64 {
        if self.overlapped_latency > 0.0 {
            self.sequential_latency / self.overlapped_latency
        } else {
            1.0
        }
    }
}

fn group(label: &str, kernels: Vec<String>, demand: ResourceDemand, m: &MachineModel) -> ScheduleGroup {
    let (time, bottleneck) = demand.bound(m);
    ScheduleGroup {
        label: label.to_string(),
        kernels,
        demand,
        time,
        bottleneck,
        overlaps_with: None,
    }
}

/// Overlap estimate for two demand vectors.
pub fn schedule_demands(a: ResourceDemand, b: ResourceDemand, machine: &MachineModel) -> Schedule {
    schedule_named(("A", Vec::new(), a), ("B", Vec::new(), b), machine)
}

fn schedule_named(
    a: (&str, Vec<String>, ResourceDemand),
    b: (&str, Vec<String>, ResourceDemand),
    m: &MachineModel,
) -> Schedule {
    let mut ga = group(a.0, a.1, a.2, m);
    let mut gb = group(b.0, b.1, b.2, m);
    let mut warnings = Vec::new();
    if !ga.demand.is_zero() && ga.bottleneck != Resource::Dram {
        warnings.push(format!("group {} is {}-bound, expected DRAM-bound", ga.label, ga.bottleneck.as_str()));
    }
    if !gb.demand.is_zero() && !gb.bottleneck.is_l2() {
        warnings.push(format!("group {} is {}-bound, expected L2-bound", gb.label, gb.bottleneck.as_str()));
    }
    let (overlapped_latency, overlapped_bottleneck) = (ga.demand + gb.demand).bound(m);
    let sequential_latency = ga.time + gb.time;
    if !ga.demand.is_zero() && !gb.demand.is_zero() {
        ga.overlaps_with = Some(1);
        gb.overlaps_with = Some(0);
    }
    Schedule {
        groups: vec![ga, gb],
        sequential_latency,
        overlapped_latency,
        overlapped_bottleneck,
        warnings,
    }
}

/// Pipelines kernel group `a` (expected DRAM-bound) with group `b`
/// (expected L2-bound). Mismatched bottlenecks produce warnings, not errors.
pub fn schedule_pipeline(a: &[KernelDescriptor], b: &[KernelDescriptor], machine: &MachineModel) -> Schedule {
    let names = |ks: &[KernelDescriptor]| ks.iter().map(|k| k.name.clone()).collect();
    let da = ResourceDemand::from_report(&TrafficReport::from_kernels(a), machine);
    let db = ResourceDemand::from_report(&TrafficReport::from_kernels(b), machine);
    schedule_named(("A", names(a), da), ("B", names(b), db), machine)
}
