//! Key-switching kernel sequence, footprints and traffic.
//!
//! Fusion assumptions for the sequence:
//!
//! * stage 1 reads the `(1, L)` input once (decompose), then per digit runs
//!   a two-kernel INTT over `alpha` limbs, a BConv from `alpha` to the other
//!   `L` limbs of `Q ++ P`, and a two-kernel NTT over those `L` limbs;
//! * stage 2 is one element-wise kernel reading the raised digits, the
//!   `(2 beta, L + alpha)` key and the `(1, L)` ciphertext part (key and
//!   ciphertext part from DRAM) and writing `(2, L + alpha)`;
//! * stage 3, per polynomial: INTT over `alpha`, BConv `alpha -> L`, NTT
//!   phase 1 over `L`, and NTT phase 2 fused with the subtraction and the
//!   `P^-1` scaling (reads its input and the `Q` accumulator, writes `L`).
//!
//! Footprints: stage 1 holds `beta * (L + alpha)` limbs per sequence;
//! stage 3 holds `4 L` limbs (two polynomials, input and output).

use hemem_core::ParameterSet;
use serde::Serialize;

use crate::kernel::{KernelDescriptor, Traffic, TrafficReport, WORD_BYTES};
use crate::machine::MachineModel;
use crate::schedule::{schedule_pipeline, Schedule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct KeySwitchShape {
    pub n: u64,
    pub l: u64,
    pub alpha: u64,
    pub beta: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    ModUp = 1,
    InnerProduct = 2,
    ModDown = 3,
}

impl KeySwitchShape {
    /// `beta = ceil(l / alpha)`.
    pub fn new(n: u64, l: u64, alpha: u64) -> Self {
        KeySwitchShape {
            n,
            l,
            alpha,
            beta: l.div_ceil(alpha.max(1)),
        }
    }

    pub fn from_params(p: &ParameterSet) -> Self {
        Self::new(p.n as u64, p.l as u64, p.alpha as u64)
    }

    /// Shape at a lower level of the same parameter set.
    pub fn at_level(&self, l: u64) -> Self {
        Self::new(self.n, l, self.alpha)
    }

    pub fn limb_bytes(&self) -> u64 {
        self.n * WORD_BYTES
    }

    /// Limb counts of each digit; the last may be short.
    fn digit_sizes(&self) -> Vec<u64> {
        (0..self.beta)
            .map(|j| (self.l - j * self.alpha).min(self.alpha))
            .collect()
    }
}

/// Working-set bytes of one stage for `batch` independent sequences.
pub fn keyswitch_footprint(shape: &KeySwitchShape, stage: Stage, batch: u64) -> u64 {
    let limbs = match stage {
        Stage::ModUp => shape.beta * (shape.l + shape.alpha),
        // raised digits in, accumulators out
        Stage::InnerProduct => shape.beta * (shape.l + shape.alpha) + 2 * (shape.l + shape.alpha),
        Stage::ModDown => 4 * shape.l,
    };
    batch * limbs * shape.limb_bytes()
}

/// Stage-1 kernels. Uniform digits are batched into single launches.
pub fn stage1_kernels(s: &KeySwitchShape) -> Vec<KernelDescriptor> {
    let n = s.n;
    let mut ks = vec![KernelDescriptor::elementwise("ks1.decompose", s.l, n, 1, 0).with_fused_ops(0)];
    let sizes = s.digit_sizes();
    let uniform = sizes.iter().all(|&a| a == s.alpha);
    let groups: Vec<(String, u64, u64)> = if uniform {
        vec![("".into(), s.alpha, s.beta)]
    } else {
        sizes.iter().enumerate().map(|(j, &a)| (format!(".d{j}"), a, 1)).collect()
    };
    for (tag, a, b) in groups {
        let out = s.l + s.alpha - a;
        ks.push(KernelDescriptor::ntt_phase1(&format!("ks1.intt1{tag}"), a, n).with_batch(b));
        ks.push(KernelDescriptor::ntt_phase2(&format!("ks1.intt2{tag}"), a, n).with_batch(b));
        ks.push(KernelDescriptor::bconv(&format!("ks1.bconv{tag}"), a, out, n).with_batch(b));
        ks.push(KernelDescriptor::ntt_phase1(&format!("ks1.ntt1{tag}"), out, n).with_batch(b));
        ks.push(KernelDescriptor::ntt_phase2(&format!("ks1.ntt2{tag}"), out, n).with_batch(b));
    }
    ks
}

fn inner_product(name: &str, s: &KeySwitchShape, limbs: u64, extra_limbs: u64) -> KernelDescriptor {
    KernelDescriptor::elementwise(name, limbs, s.n, s.beta, 2)
        .with_extra_reads(extra_limbs * s.limb_bytes())
        // one multiply and one add per digit
        .with_fused_ops(2 * s.beta)
}

/// Stage 2 as a single kernel.
pub fn stage2_kernels(s: &KeySwitchShape) -> Vec<KernelDescriptor> {
    let ext = s.l + s.alpha;
    vec![inner_product("ks2.inner", s, ext, 2 * s.beta * ext + s.l)]
}

/// Stage 2 split into the `(2, alpha)` half and the `(2, L)` half.
pub fn stage2_split_kernels(s: &KeySwitchShape) -> (KernelDescriptor, KernelDescriptor) {
    (
        inner_product("ks2.inner_p", s, s.alpha, 2 * s.beta * s.alpha),
        inner_product("ks2.inner_q", s, s.l, 2 * s.beta * s.l + s.l),
    )
}

/// ModDown front half (depends only on the `(2, alpha)` accumulators).
pub fn stage3_convert_kernels(s: &KeySwitchShape) -> Vec<KernelDescriptor> {
    let n = s.n;
    vec![
        KernelDescriptor::ntt_phase1("ks3.intt1", s.alpha, n).with_batch(2),
        KernelDescriptor::ntt_phase2("ks3.intt2", s.alpha, n).with_batch(2),
        KernelDescriptor::bconv("ks3.bconv", s.alpha, s.l, n).with_batch(2),
        KernelDescriptor::ntt_phase1("ks3.ntt1", s.l, n).with_batch(2),
    ]
}

/// NTT phase 2 fused with `(q_part - converted) * P^-1`.
pub fn stage3_finish_kernels(s: &KeySwitchShape) -> Vec<KernelDescriptor> {
    vec![KernelDescriptor::ntt_phase2("ks3.ntt2_sub_scale", s.l, s.n)
        .with_batch(2)
        .with_io(2, 1)]
}

pub fn stage3_kernels(s: &KeySwitchShape) -> Vec<KernelDescriptor> {
    let mut k = stage3_convert_kernels(s);
    k.extend(stage3_finish_kernels(s));
    k
}

pub fn stage_kernels(s: &KeySwitchShape, stage: Stage) -> Vec<KernelDescriptor> {
    match stage {
        Stage::ModUp => stage1_kernels(s),
        Stage::InnerProduct => stage2_kernels(s),
        Stage::ModDown => stage3_kernels(s),
    }
}

/// Whole key-switch, stages in order.
pub fn keyswitch_kernels(s: &KeySwitchShape) -> Vec<KernelDescriptor> {
    let mut k = stage1_kernels(s);
    k.extend(stage2_kernels(s));
    k.extend(stage3_kernels(s));
    k
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StageTraffic {
    pub stage1: Traffic,
    pub stage2: Traffic,
    pub stage3: Traffic,
}

impl StageTraffic {
    pub fn totals(&self) -> [u64; 3] {
        [self.stage1.total(), self.stage2.total(), self.stage3.total()]
    }
}

pub fn keyswitch_traffic(s: &KeySwitchShape) -> StageTraffic {
    let t = |k: Vec<KernelDescriptor>| TrafficReport::from_kernels(&k).total;
    StageTraffic {
        stage1: t(stage1_kernels(s)),
        stage2: t(stage2_kernels(s)),
        stage3: t(stage3_kernels(s)),
    }
}

/// Stage 2's DRAM-bound `(2, L)` inner product pipelined against the
/// L2-bound ModDown conversion of the `(2, alpha)` half.
pub fn keyswitch_pipeline_schedule(s: &KeySwitchShape, machine: &MachineModel) -> Schedule {
    let (_, q_half) = stage2_split_kernels(s);
    schedule_pipeline(&[q_half], &stage3_convert_kernels(s), machine)
}

/// `(sequential, pipelined)` latency of stages 2 and 3, summing roofline
/// bounds of the non-overlapped parts.
pub fn stages23_latency(s: &KeySwitchShape, machine: &MachineModel) -> (f64, f64) {
    use crate::roofline::roofline;
    let (p_half, _) = stage2_split_kernels(s);
    let head = roofline(&TrafficReport::from_kernels(&[p_half]), machine).latency;
    let tail = roofline(&TrafficReport::from_kernels(&stage3_finish_kernels(s)), machine).latency;
    let sched = keyswitch_pipeline_schedule(s, machine);
    (
        head + sched.sequential_latency + tail,
        head + sched.overlapped_latency + tail,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const MB: f64 = 1e6;

    fn shape(l: u64) -> KeySwitchShape {
        KeySwitchShape::new(1 << 16, l, 12)
    }

    #[test]
    fn footprints() {
        let f = |l, st| keyswitch_footprint(&shape(l), st, 1) as f64 / MB;
        assert!((f(48, Stage::ModUp) - 62.9).abs() < 0.1);
        assert!((f(48, Stage::ModDown) - 50.3).abs() < 0.1);
        assert!((f(24, Stage::ModDown) - 25.2).abs() < 0.1);
        assert!((f(12, Stage::ModUp) - 6.29).abs() < 0.01);
    }

    #[test]
    fn stage2_traffic_at_defaults() {
        let t = keyswitch_traffic(&shape(48));
        assert_eq!(t.stage2.total(), 888 * (1 << 18));
        let (_, q) = stage2_split_kernels(&shape(48));
        let (p, _) = stage2_split_kernels(&shape(48));
        assert_eq!(p.extra_reads + q.extra_reads, 528 * (1 << 18));
    }

    #[test]
    fn split_matches_unsplit() {
        for l in [12, 24, 36, 48, 20] {
            let s = shape(l);
            let (p, q) = stage2_split_kernels(&s);
            let split = TrafficReport::from_kernels(&[p, q]).total;
            assert_eq!(split, keyswitch_traffic(&s).stage2);
        }
    }

    #[test]
    fn partial_digits_are_accounted() {
        let s = shape(20);
        assert_eq!(s.beta, 2);
        // decompose L + sum over digits of (4a + a + (L + alpha - a) + 4(L + alpha - a))
        let want: u64 = 20 + [12u64, 8].iter().map(|&a| 5 * a + 5 * (32 - a)).sum::<u64>();
        assert_eq!(keyswitch_traffic(&s).stage1.total(), want * (1 << 18));
    }

    #[test]
    fn pipelining_helps_at_defaults() {
        let (seq, pipe) = stages23_latency(&shape(48), &MachineModel::rtx5090());
        assert!(pipe < seq);
        let sched = keyswitch_pipeline_schedule(&shape(48), &MachineModel::rtx5090());
        assert!(sched.warnings.is_empty(), "{:?}", sched.warnings);
    }
}
