//! Kernel traces and whole-sequence latency estimates.
//!
//! Trace files are TOML:
//!
//! ```toml
//! version = 1
//! name = "example"
//!
//! [[kernel]]
//! name = "intt1"
//! kind = "ntt_phase1"      # ntt_phase1 | ntt_phase2 | bconv | elementwise
//! limbs = 12
//! n = 65536
//! batch = 2                # default 1
//! deps = []                # names of earlier kernels
//!
//! [[kernel]]
//! name = "inner"
//! kind = "elementwise"
//! limbs = 48
//! n = 65536
//! inputs = 4
//! outputs = 2
//! extra_reads = 100663296  # bytes served from DRAM
//! overlap = "cp"           # kernels sharing a tag stream concurrently;
//!                          # the group costs its busiest resource
//! repeat = 1               # back-to-back copies of this kernel
//! ```

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{kernel_traffic, KernelDescriptor, KernelKind, Traffic, TrafficReport};
use crate::keyswitch::{stage1_kernels, stage2_kernels, stage2_split_kernels, stage3_convert_kernels, stage3_finish_kernels, stage3_kernels, KeySwitchShape};
use crate::machine::MachineModel;
use crate::roofline::{Resource, ResourceDemand};

pub const TRACE_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaunchMode {
    /// One host launch per kernel.
    Eager,
    /// The whole DAG submitted once.
    StaticGraph,
}

fn one() -> u64 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    #[serde(flatten)]
    pub kernel: KernelDescriptor,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub deps: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlap: Option<String>,
    #[serde(default = "one")]
    pub repeat: u64,
}

impl TraceEntry {
    pub fn new(kernel: KernelDescriptor) -> Self {
        TraceEntry {
            kernel,
            deps: Vec::new(),
            overlap: None,
            repeat: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelTrace {
    #[serde(default = "version")]
    pub version: u32,
    #[serde(default)]
    pub name: String,
    #[serde(default, rename = "kernel")]
    pub kernels: Vec<TraceEntry>,
}

fn version() -> u32 {
    TRACE_VERSION
}

impl Default for KernelTrace {
    fn default() -> Self {
        KernelTrace {
            version: TRACE_VERSION,
            name: String::new(),
            kernels: Vec::new(),
        }
    }
}

const ENTRY_KEYS: &[&str] = &[
    "name", "kind", "limbs", "l_out", "n", "batch", "inputs", "outputs", "extra_reads", "fused_ops", "stages", "deps",
    "overlap", "repeat",
];

impl KernelTrace {
    /// A chain: each kernel depends on the one before it.
    pub fn chain(name: &str, kernels: Vec<KernelDescriptor>) -> Self {
        let mut t = KernelTrace {
            version: TRACE_VERSION,
            name: name.to_string(),
            kernels: Vec::new(),
        };
        for k in kernels {
            t.push_after_last(k, None);
        }
        t
    }

    fn push_after_last(&mut self, k: KernelDescriptor, overlap: Option<&str>) {
        let mut e = TraceEntry::new(k);
        if let Some(prev) = self.kernels.last() {
            e.deps.push(prev.kernel.name.clone());
        }
        e.overlap = overlap.map(str::to_string);
        self.kernels.push(e);
    }

    /// Key-switch trace; with `pipelined`, the `(2, L)` inner product and
    /// the ModDown conversion share an overlap group.
    pub fn keyswitch(shape: &KeySwitchShape, pipelined: bool) -> Self {
        let name = format!("keyswitch-l{}-a{}{}", shape.l, shape.alpha, if pipelined { "-pipelined" } else { "" });
        if !pipelined {
            let mut ks = stage1_kernels(shape);
            ks.extend(stage2_kernels(shape));
            ks.extend(stage3_kernels(shape));
            return Self::chain(&name, ks);
        }
        let mut t = Self::chain(&name, stage1_kernels(shape));
        let last_s1 = t.kernels.last().map(|e| e.kernel.name.clone());
        let (p_half, q_half) = stage2_split_kernels(shape);
        t.push_after_last(p_half.clone(), None);
        let mut q = TraceEntry::new(q_half.clone());
        q.deps.extend(last_s1);
        q.overlap = Some("cp".into());
        t.kernels.push(q);
        let mut prev = p_half.name.clone();
        for k in stage3_convert_kernels(shape) {
            let mut e = TraceEntry::new(k);
            e.deps.push(prev);
            prev = e.kernel.name.clone();
            e.overlap = Some("cp".into());
            t.kernels.push(e);
        }
        for k in stage3_finish_kernels(shape) {
            let mut e = TraceEntry::new(k);
            e.deps = vec![prev.clone(), q_half.name.clone()];
            t.kernels.push(e);
        }
        t
    }

    pub fn kernel_count(&self) -> u64 {
        self.kernels.iter().map(|e| e.repeat).sum()
    }

    pub fn descriptors(&self) -> Vec<KernelDescriptor> {
        self.kernels
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.kernel.clone(), e.repeat as usize))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != TRACE_VERSION {
            return Err(Error::Trace(format!("unsupported trace version {}", self.version)));
        }
        let mut index: HashMap<&str, usize> = HashMap::new();
        for (i, e) in self.kernels.iter().enumerate() {
            e.kernel.validate()?;
            if e.kernel.name.is_empty() {
                return Err(Error::Trace(format!("kernel #{i} has no name")));
            }
            if e.repeat == 0 {
                return Err(Error::Trace(format!("kernel `{}` has repeat = 0", e.kernel.name)));
            }
            for d in &e.deps {
                if !index.contains_key(d.as_str()) {
                    return Err(Error::Trace(format!(
                        "kernel `{}` depends on `{d}`, which is not an earlier kernel",
                        e.kernel.name
                    )));
                }
            }
            if index.insert(&e.kernel.name, i).is_some() {
                return Err(Error::Trace(format!("duplicate kernel name `{}`", e.kernel.name)));
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let value: toml::Value = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if let Some(entries) = value.get("kernel").and_then(|v| v.as_array()) {
            for (i, e) in entries.iter().enumerate() {
                if let Some(t) = e.as_table() {
                    if let Some(k) = t.keys().find(|k| !ENTRY_KEYS.contains(&k.as_str())) {
                        return Err(Error::Trace(format!("kernel #{i}: unknown field `{k}`")));
                    }
                }
            }
        }
        let t: KernelTrace = value.try_into().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        t.validate()?;
        Ok(t)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("trace serializes")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelEstimate {
    pub name: String,
    pub kind: KernelKind,
    pub repeat: u64,
    pub traffic: Traffic,
    /// Stand-alone roofline time of all repeats.
    pub time: f64,
    pub bottleneck: Resource,
    pub overlap: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OverlapEstimate {
    pub group: String,
    pub members: Vec<String>,
    pub sequential: f64,
    pub overlapped: f64,
    pub bottleneck: Resource,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SequenceEstimate {
    pub mode: LaunchMode,
    pub kernel_count: u64,
    /// Sum of stand-alone kernel times.
    pub kernel_time: f64,
    /// Time removed by overlap groups.
    pub overlap_savings: f64,
    pub launch_time: f64,
    pub latency: f64,
    pub kernels: Vec<KernelEstimate>,
    pub overlaps: Vec<OverlapEstimate>,
}

fn entry_demand(e: &TraceEntry, m: &MachineModel) -> ResourceDemand {
    let mut r = TrafficReport::default();
    r.push(&e.kernel);
    let d = ResourceDemand::from_report(&r, m);
    let k = e.repeat as f64;
    ResourceDemand {
        l2_read: d.l2_read * k,
        l2_write: d.l2_write * k,
        dram: d.dram * k,
        fma_ops: d.fma_ops * k,
        alu_ops: d.alu_ops * k,
    }
}

/// Latency of a kernel DAG: stand-alone roofline times, minus overlap
/// savings, plus one launch per kernel in eager mode.
pub fn estimate_sequence(trace: &KernelTrace, machine: &MachineModel, mode: LaunchMode) -> Result<SequenceEstimate> {
    trace.validate()?;
    let mut kernels = Vec::with_capacity(trace.kernels.len());
    let mut groups: BTreeMap<String, (Vec<String>, ResourceDemand, f64)> = BTreeMap::new();
    let mut kernel_time = 0.0;
    for e in &trace.kernels {
        let d = entry_demand(e, machine);
        let (time, bottleneck) = d.bound(machine);
        kernel_time += time;
        if let Some(g) = &e.overlap {
            let slot = groups.entry(g.clone()).or_default();
            slot.0.push(e.kernel.name.clone());
            slot.1 = slot.1 + d;
            slot.2 += time;
        }
        let t = kernel_traffic(&e.kernel);
        kernels.push(KernelEstimate {
            name: e.kernel.name.clone(),
            kind: e.kernel.kind,
            repeat: e.repeat,
            traffic: Traffic {
                read: t.read * e.repeat,
                write: t.write * e.repeat,
                dram: t.dram * e.repeat,
            },
            time,
            bottleneck,
            overlap: e.overlap.clone(),
        });
    }
    let overlaps: Vec<OverlapEstimate> = groups
        .into_iter()
        .map(|(group, (members, demand, sequential))| {
            let (overlapped, bottleneck) = demand.bound(machine);
            OverlapEstimate {
                group,
                members,
                sequential,
                overlapped,
                bottleneck,
            }
        })
        .collect();
    let overlap_savings: f64 = overlaps.iter().map(|o| o.sequential - o.overlapped).sum();
    let kernel_count = trace.kernel_count();
    let launch_time = match mode {
        LaunchMode::Eager => machine.launch_overhead * kernel_count as f64,
        LaunchMode::StaticGraph => 0.0,
    };
    Ok(SequenceEstimate {
        mode,
        kernel_count,
        kernel_time,
        overlap_savings,
        launch_time,
        latency: kernel_time - overlap_savings + launch_time,
        kernels,
        overlaps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape() -> KeySwitchShape {
        KeySwitchShape::new(1 << 16, 48, 12)
    }

    #[test]
    fn launch_overhead_example() {
        let mut t = KernelTrace::chain("x", vec![KernelDescriptor::elementwise("k", 1, 1024, 1, 1)]);
        t.kernels[0].repeat = 1543;
        let m = MachineModel::rtx5090();
        let e = estimate_sequence(&t, &m, LaunchMode::Eager).unwrap();
        let s = estimate_sequence(&t, &m, LaunchMode::StaticGraph).unwrap();
        assert_eq!(e.launch_time, 1543.0 * 3e-6);
        assert!((e.latency - s.latency - 4.629e-3).abs() < 1e-12);
    }

    #[test]
    fn empty_trace() {
        let t = KernelTrace::default();
        let e = estimate_sequence(&t, &MachineModel::rtx5090(), LaunchMode::Eager).unwrap();
        assert_eq!(e.latency, 0.0);
    }

    #[test]
    fn toml_round_trip_and_rejections() {
        let t = KernelTrace::keyswitch(&shape(), true);
        let back = KernelTrace::from_toml(&t.to_toml()).unwrap();
        assert_eq!(back, t);
        let bad = t.to_toml().replacen("limbs", "limbz", 1);
        assert!(KernelTrace::from_toml(&bad).is_err());
        let mut cyc = KernelTrace::chain("c", vec![KernelDescriptor::elementwise("a", 1, 16, 1, 1)]);
        cyc.kernels[0].deps.push("a".into());
        assert!(cyc.validate().is_err());
    }

    #[test]
    fn pipelined_trace_is_faster_with_same_traffic() {
        let m = MachineModel::rtx5090();
        let plain = estimate_sequence(&KernelTrace::keyswitch(&shape(), false), &m, LaunchMode::StaticGraph).unwrap();
        let piped = estimate_sequence(&KernelTrace::keyswitch(&shape(), true), &m, LaunchMode::StaticGraph).unwrap();
        assert!(piped.latency < plain.latency);
        assert_eq!(piped.overlaps.len(), 1);
        let total = |e: &SequenceEstimate| e.kernels.iter().map(|k| k.traffic.total()).sum::<u64>();
        assert_eq!(total(&plain), total(&piped));
    }
}
