use serde::Serialize;

use crate::kernel::{CoreOps, TrafficReport};
use crate::machine::MachineModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Resource {
    /// Aggregate L2 bandwidth.
    L2,
    L2Read,
    L2Write,
    Dram,
    Compute,
}

impl Resource {
    pub const ALL: [Resource; 5] = [
        Resource::L2,
        Resource::L2Read,
        Resource::L2Write,
        Resource::Dram,
        Resource::Compute,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Resource::L2 => "l2",
            Resource::L2Read => "l2_read",
            Resource::L2Write => "l2_write",
            Resource::Dram => "dram",
            Resource::Compute => "compute",
        }
    }

    pub fn is_l2(self) -> bool {
        matches!(self, Resource::L2 | Resource::L2Read | Resource::L2Write)
    }
}

/// Demand placed on each resource, in that resource's units (bytes or ops).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ResourceDemand {
    pub l2_read: f64,
    pub l2_write: f64,
    pub dram: f64,
    pub fma_ops: f64,
    pub alu_ops: f64,
}

impl ResourceDemand {
    pub fn from_report(r: &TrafficReport, m: &MachineModel) -> Self {
        Self::from_parts(r.total.read as f64, r.total.write as f64, r.total.dram as f64, &r.ops, m)
    }

    pub fn from_parts(read: f64, write: f64, dram: f64, ops: &CoreOps, m: &MachineModel) -> Self {
        ResourceDemand {
            l2_read: read,
            l2_write: write,
            dram,
            fma_ops: ops.fma_ops(m.imad_per_butterfly),
            alu_ops: ops.alu_ops(),
        }
    }

    /// Seconds the demand occupies `r` on machine `m`.
    pub fn time(&self, r: Resource, m: &MachineModel) -> f64 {
        match r {
            Resource::L2 => (self.l2_read + self.l2_write) / m.l2_bw,
            Resource::L2Read => self.l2_read / m.l2_read_bw,
            Resource::L2Write => self.l2_write / m.l2_write_bw,
            Resource::Dram => self.dram / m.dram_bw,
            Resource::Compute => self.fma_ops / m.fma_tput + self.alu_ops / m.alu_tput,
        }
    }

    /// `(bound, bottleneck)`; ties go to the earlier entry of [`Resource::ALL`].
    pub fn bound(&self, m: &MachineModel) -> (f64, Resource) {
        let mut best = (0.0, Resource::Compute);
        let mut first = true;
        for r in Resource::ALL {
            let t = self.time(r, m);
            if first || t > best.0 {
                best = (t, r);
                first = false;
            }
        }
        best
    }

    pub fn is_zero(&self) -> bool {
        *self == ResourceDemand::default()
    }
}

impl std::ops::Add for ResourceDemand {
    type Output = ResourceDemand;
    fn add(self, o: ResourceDemand) -> ResourceDemand {
        ResourceDemand {
            l2_read: self.l2_read + o.l2_read,
            l2_write: self.l2_write + o.l2_write,
            dram: self.dram + o.dram,
            fma_ops: self.fma_ops + o.fma_ops,
            alu_ops: self.alu_ops + o.alu_ops,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RooflineBound {
    pub latency: f64,
    pub bottleneck: Resource,
    /// Time on every resource, in [`Resource::ALL`] order.
    pub per_resource: Vec<(Resource, f64)>,
}

/// Lower bound on the latency of `traffic` on `machine`.
pub fn roofline(traffic: &TrafficReport, machine: &MachineModel) -> RooflineBound {
    let d = ResourceDemand::from_report(traffic, machine);
    let (latency, bottleneck) = d.bound(machine);
    RooflineBound {
        latency,
        bottleneck,
        per_resource: Resource::ALL.iter().map(|&r| (r, d.time(r, machine))).collect(),
    }
}

/// `(arithmetic intensity, attainable ops/s)` points of the classic
/// roofline against aggregate L2 bandwidth, log-spaced over `[lo, hi]`.
pub fn roofline_curve(machine: &MachineModel, lo: f64, hi: f64, points: usize) -> Vec<(f64, f64)> {
    let points = points.max(2);
    let (a, b) = (lo.max(1e-6).ln(), hi.max(lo * 1.0001).ln());
    (0..points)
        .map(|i| {
            let x = (a + (b - a) * i as f64 / (points - 1) as f64).exp();
            (x, (x * machine.l2_bw).min(machine.fma_tput))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Traffic;

    fn totals(bytes: u64) -> TrafficReport {
        TrafficReport::from_totals(
            Traffic {
                read: bytes,
                write: 0,
                dram: 0,
            },
            CoreOps::default(),
        )
    }

    #[test]
    fn bootstrapping_limits() {
        let m = MachineModel::rtx5090();
        let r = roofline(&totals(53_000_000_000), &m);
        assert!((r.latency - 8.8333e-3).abs() < 1e-6);
        assert_eq!(r.bottleneck, Resource::L2);
        let r = roofline(&totals(44_000_000_000), &m);
        assert!((r.latency - 7.3333e-3).abs() < 1e-6);
    }

    #[test]
    fn compute_only() {
        let m = MachineModel::unit();
        let ops = CoreOps {
            mads: 5,
            ..CoreOps::default()
        };
        let r = roofline(&TrafficReport::from_totals(Traffic::default(), ops), &m);
        assert_eq!((r.latency, r.bottleneck), (5.0, Resource::Compute));
    }
}
