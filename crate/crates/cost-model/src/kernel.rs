//! Kernel descriptors and the limb-granular traffic convention.
//!
//! Every kernel reads its input limbs and writes its output limbs once at
//! the global-memory (L2) boundary; a limb is `N * 4` bytes. An NTT is two
//! kernels, each with a full read and write. `extra_reads` are operands not
//! resident in L2 (key-switching hints and similar) and are also counted as
//! DRAM traffic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const WORD_BYTES: u64 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    NttPhase1,
    NttPhase2,
    Bconv,
    Elementwise,
}

impl KernelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            KernelKind::NttPhase1 => "ntt_phase1",
            KernelKind::NttPhase2 => "ntt_phase2",
            KernelKind::Bconv => "bconv",
            KernelKind::Elementwise => "elementwise",
        }
    }
}

fn one() -> u64 {
    1
}

fn is_one(v: &u64) -> bool {
    *v == 1
}

fn is_zero(v: &u64) -> bool {
    *v == 0
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelDescriptor {
    #[serde(default)]
    pub name: String,
    pub kind: KernelKind,
    /// Limbs processed; the input side for `bconv`.
    pub limbs: u64,
    /// Output limbs of a `bconv`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_out: Option<u64>,
    pub n: u64,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub batch: u64,
    /// Operand polynomials read per batch element (NTT, elementwise).
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub inputs: u64,
    /// Polynomials written per batch element (NTT, elementwise).
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub outputs: u64,
    /// Bytes of non-resident operands.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub extra_reads: u64,
    /// Element-wise operations per output element.
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub fused_ops: u64,
    /// Butterfly stages done by this phase; defaults to the standard split
    /// (`ceil(log N / 2)` strided stages, the rest blocked).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stages: Option<u32>,
}

impl KernelDescriptor {
    fn base(name: &str, kind: KernelKind, limbs: u64, n: u64) -> Self {
        KernelDescriptor {
            name: name.to_string(),
            kind,
            limbs,
            l_out: None,
            n,
            batch: 1,
            inputs: 1,
            outputs: 1,
            extra_reads: 0,
            fused_ops: 1,
            stages: None,
        }
    }

    pub fn ntt_phase1(name: &str, limbs: u64, n: u64) -> Self {
        Self::base(name, KernelKind::NttPhase1, limbs, n)
    }

    pub fn ntt_phase2(name: &str, limbs: u64, n: u64) -> Self {
        Self::base(name, KernelKind::NttPhase2, limbs, n)
    }

    pub fn bconv(name: &str, l_in: u64, l_out: u64, n: u64) -> Self {
        KernelDescriptor {
            l_out: Some(l_out),
            ..Self::base(name, KernelKind::Bconv, l_in, n)
        }
    }

    pub fn elementwise(name: &str, limbs: u64, n: u64, inputs: u64, outputs: u64) -> Self {
        KernelDescriptor {
            inputs,
            outputs,
            ..Self::base(name, KernelKind::Elementwise, limbs, n)
        }
    }

    pub fn with_batch(mut self, batch: u64) -> Self {
        self.batch = batch;
        self
    }

    pub fn with_extra_reads(mut self, bytes: u64) -> Self {
        self.extra_reads = bytes;
        self
    }

    pub fn with_io(mut self, inputs: u64, outputs: u64) -> Self {
        self.inputs = inputs;
        self.outputs = outputs;
        self
    }

    pub fn with_fused_ops(mut self, ops: u64) -> Self {
        self.fused_ops = ops;
        self
    }

    pub fn limb_bytes(&self) -> u64 {
        self.n * WORD_BYTES
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| {
            Err(Error::Kernel {
                name: self.name.clone(),
                reason: reason.to_string(),
            })
        };
        if self.limbs == 0 || self.batch == 0 {
            return bad("limbs and batch must be positive");
        }
        if !self.n.is_power_of_two() || self.n < 2 {
            return bad("n must be a power of two >= 2");
        }
        match self.kind {
            KernelKind::Bconv => match self.l_out {
                Some(0) | None => return bad("bconv needs a positive l_out"),
                _ => {}
            },
            _ if self.l_out.is_some() => return bad("l_out only applies to bconv"),
            _ => {}
        }
        if let Some(s) = self.stages {
            if !matches!(self.kind, KernelKind::NttPhase1 | KernelKind::NttPhase2) {
                return bad("stages only applies to NTT phases");
            }
            if s > self.n.trailing_zeros() {
                return bad("more stages than log2(n)");
            }
        }
        Ok(())
    }

    /// Butterfly stages covered by this NTT phase.
    pub fn ntt_stages(&self) -> u32 {
        let log_n = self.n.trailing_zeros();
        let strided = log_n.div_ceil(2);
        match (self.kind, self.stages) {
            (_, Some(s)) => s,
            (KernelKind::NttPhase1, None) => strided,
            (KernelKind::NttPhase2, None) => log_n - strided,
            _ => 0,
        }
    }
}

/// Bytes moved by one kernel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Traffic {
    pub read: u64,
    pub write: u64,
    /// Portion of `read + write` that reaches DRAM.
    pub dram: u64,
}

impl Traffic {
    pub fn total(&self) -> u64 {
        self.read + self.write
    }
}

impl std::ops::Add for Traffic {
    type Output = Traffic;
    fn add(self, o: Traffic) -> Traffic {
        Traffic {
            read: self.read + o.read,
            write: self.write + o.write,
            dram: self.dram + o.dram,
        }
    }
}

pub fn kernel_traffic(k: &KernelDescriptor) -> Traffic {
    let limb = k.limb_bytes();
    let (read_limbs, write_limbs) = match k.kind {
        KernelKind::NttPhase1 | KernelKind::NttPhase2 | KernelKind::Elementwise => {
            (k.inputs * k.limbs, k.outputs * k.limbs)
        }
        KernelKind::Bconv => (k.limbs, k.l_out.unwrap_or(0)),
    };
    Traffic {
        read: k.batch * read_limbs * limb + k.extra_reads,
        write: k.batch * write_limbs * limb,
        dram: k.extra_reads,
    }
}

/// Core operation counts of one kernel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CoreOps {
    pub butterflies: u64,
    pub mads: u64,
    pub reductions: u64,
    pub elementwise: u64,
}

impl CoreOps {
    /// IMAD-pipe work: butterflies (scaled), MADs and reductions.
    pub fn fma_ops(&self, imad_per_butterfly: f64) -> f64 {
        self.butterflies as f64 * imad_per_butterfly + self.mads as f64 + self.reductions as f64
    }

    pub fn alu_ops(&self) -> f64 {
        self.elementwise as f64
    }
}

impl std::ops::Add for CoreOps {
    type Output = CoreOps;
    fn add(self, o: CoreOps) -> CoreOps {
        CoreOps {
            butterflies: self.butterflies + o.butterflies,
            mads: self.mads + o.mads,
            reductions: self.reductions + o.reductions,
            elementwise: self.elementwise + o.elementwise,
        }
    }
}

pub fn kernel_core_ops(k: &KernelDescriptor) -> CoreOps {
    match k.kind {
        KernelKind::NttPhase1 | KernelKind::NttPhase2 => CoreOps {
            butterflies: k.batch * k.limbs * (k.n / 2) * k.ntt_stages() as u64,
            ..CoreOps::default()
        },
        KernelKind::Bconv => {
            let l_out = k.l_out.unwrap_or(0);
            CoreOps {
                mads: k.batch * k.limbs * l_out * k.n,
                reductions: k.batch * l_out * k.n,
                ..CoreOps::default()
            }
        }
        KernelKind::Elementwise => CoreOps {
            elementwise: k.batch * k.limbs * k.n * k.outputs.max(1) * k.fused_ops,
            ..CoreOps::default()
        },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelReport {
    pub name: String,
    pub kind: KernelKind,
    pub traffic: Traffic,
    pub ops: CoreOps,
}

/// Per-kernel and aggregate traffic; the aggregate is always the sum of
/// the rows, or the explicitly given totals when there are no rows.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TrafficReport {
    pub kernels: Vec<KernelReport>,
    pub total: Traffic,
    pub ops: CoreOps,
}

impl TrafficReport {
    pub fn from_kernels(kernels: &[KernelDescriptor]) -> Self {
        let mut r = TrafficReport::default();
        for k in kernels {
            r.push(k);
        }
        r
    }

    /// Aggregate-only report, e.g. from a profiler total.
    pub fn from_totals(total: Traffic, ops: CoreOps) -> Self {
        TrafficReport {
            kernels: Vec::new(),
            total,
            ops,
        }
    }

    pub fn push(&mut self, k: &KernelDescriptor) {
        let traffic = kernel_traffic(k);
        let ops = kernel_core_ops(k);
        self.total = self.total + traffic;
        self.ops = self.ops + ops;
        self.kernels.push(KernelReport {
            name: k.name.clone(),
            kind: k.kind,
            traffic,
            ops,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const N: u64 = 1 << 16;

    #[test]
    fn ntt_traffic_per_phase() {
        let t = kernel_traffic(&KernelDescriptor::ntt_phase1("a", 48, N));
        assert_eq!(t.read, 48 * N * 4);
        assert_eq!(t.write, t.read);
        assert_eq!(t.read, 12_582_912);
    }

    #[test]
    fn bconv_traffic_and_ops() {
        let k = KernelDescriptor::bconv("b", 12, 48, N);
        let t = kernel_traffic(&k);
        assert_eq!((t.read, t.write), (3_145_728, 12_582_912));
        assert_eq!(kernel_core_ops(&k).mads, 37_748_736);
    }

    #[test]
    fn ntt_butterflies_split_across_phases() {
        let a = kernel_core_ops(&KernelDescriptor::ntt_phase1("a", 48, N));
        let b = kernel_core_ops(&KernelDescriptor::ntt_phase2("b", 48, N));
        assert_eq!(a.butterflies + b.butterflies, 25_165_824);
    }

    #[test]
    fn elementwise_add() {
        let k = KernelDescriptor::elementwise("add", 48, N, 2, 1);
        assert_eq!(kernel_core_ops(&k).elementwise, 3_145_728);
    }

    #[test]
    fn validation() {
        assert!(KernelDescriptor::bconv("b", 1, 0, 16).validate().is_err());
        assert!(KernelDescriptor::ntt_phase1("a", 1, 12).validate().is_err());
        let mut k = KernelDescriptor::ntt_phase1("a", 1, 16);
        k.stages = Some(5);
        assert!(k.validate().is_err());
    }
}
