use std::path::PathBuf;
use std::time::Instant;

use anyhow::{anyhow, bail, Result};
use clap::{Args, ValueEnum};
use hemem_core::{CkksContext, ParameterSet};
use hemem_cost::batch::amortized_curve;
use hemem_cost::keyswitch::{keyswitch_pipeline_schedule, stages23_latency};
use hemem_cost::roofline::roofline_curve;
use hemem_cost::{
    estimate_sequence, keyswitch_footprint, keyswitch_traffic, plan_batch, BatchSequence, CoreOps, KernelTrace,
    KeySwitchShape, LaunchMode, Stage, Traffic, TrafficReport,
};
use serde::Serialize;

use crate::output::{self, mb, table, us, Format};
use crate::verify::{self, SuiteReport, VerifyOptions};
use crate::{Fault, Global, Outcome};

fn verify_defaults() -> Result<ParameterSet> {
    ParameterSet::generate("verify-n4096", 4096, 12, 4, 31, 40, 2048, 32).map_err(|e| anyhow!(e))
}

#[derive(Args)]
pub struct VerifyArgs {
    /// Deliberately break a component (negative control).
    #[arg(long, value_enum)]
    inject_fault: Option<Fault>,
    /// Write per-stage key-switch test vectors (RNSP format) to this directory.
    #[arg(long)]
    dump: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    oracle_limbs: usize,
    #[arg(long, default_value_t = 256)]
    bconv_columns: usize,
    #[arg(long, default_value_t = 10)]
    trials: u64,
}

pub fn verify(g: &Global, a: &VerifyArgs) -> Result<Outcome> {
    let params = g.params_or(verify_defaults)?;
    let mut ctx = CkksContext::new(params).map_err(|e| anyhow!(e))?;
    if a.inject_fault == Some(Fault::Twiddle) {
        ctx.ntt_mut().tables_mut()[0].corrupt_for_fault_injection();
    }
    let opts = VerifyOptions {
        seed: g.seed,
        oracle_limbs: a.oracle_limbs,
        bconv_columns: a.bconv_columns,
        keyswitch_trials: a.trials,
    };
    let start = Instant::now();
    let suites = vec![
        verify::ntt_suite(&ctx, &opts)?,
        verify::bconv_suite(&ctx, &opts)?,
        verify::keyswitch_suite(&ctx, &opts, a.dump.as_deref())?,
    ];
    eprintln!("verify finished in {:.2} s", start.elapsed().as_secs_f64());
    let all = suites.iter().all(|s| s.passed);
    let p = ctx.params();
    let body = match g.format {
        Format::Text => {
            let mut s = format!(
                "parameter set {} (N = {}, L = {}, alpha = {}, dnum = {}, log_delta = {}), seed {}\n",
                p.name, p.n, p.l, p.alpha, p.dnum, p.log_delta, g.seed
            );
            for r in &suites {
                s += &format!(
                    "{} {:<10} checks={} failures={}",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.suite,
                    r.checks,
                    r.failures
                );
                for (k, v) in &r.stats {
                    s += &format!(" {k}={v:.6e}");
                }
                s.push('\n');
                for n in &r.notes {
                    s += &format!("    {n}\n");
                }
            }
            s += if all { "all suites passed\n" } else { "verification FAILED\n" };
            s
        }
        Format::Csv => {
            #[derive(Serialize)]
            struct Row<'a> {
                suite: &'a str,
                passed: bool,
                checks: u64,
                failures: u64,
                stat: &'a str,
                value: f64,
            }
            let rows: Vec<Row> = suites
                .iter()
                .flat_map(|r| {
                    r.stats.iter().map(move |(k, v)| Row {
                        suite: &r.suite,
                        passed: r.passed,
                        checks: r.checks,
                        failures: r.failures,
                        stat: k,
                        value: *v,
                    })
                })
                .collect();
            output::csv_rows(&rows)?
        }
        Format::Structured => {
            #[derive(Serialize)]
            struct Body<'a> {
                params: &'a str,
                seed: u64,
                passed: bool,
                suites: &'a [SuiteReport],
            }
            output::structured(
                "hemem.verify/1",
                &Body {
                    params: &p.name,
                    seed: g.seed,
                    passed: all,
                    suites: &suites,
                },
            )?
        }
    };
    g.sink().emit(&body)?;
    Ok(if all { Outcome::Ok } else { Outcome::Failed })
}

#[derive(Args, Clone)]
pub struct ShapeArgs {
    /// Ring degree (overrides --params).
    #[arg(long)]
    n: Option<u64>,
    /// Limb count (overrides --params).
    #[arg(long)]
    l: Option<u64>,
    /// Digit size (overrides --params).
    #[arg(long)]
    alpha: Option<u64>,
}

impl ShapeArgs {
    /// Falls back to the default evaluation shape `N = 2^16, L = 48, alpha = 12`.
    fn shape(&self, g: &Global) -> Result<KeySwitchShape> {
        let base = match &g.params {
            Some(_) => KeySwitchShape::from_params(&g.params_or(|| unreachable!())?),
            None => KeySwitchShape::new(1 << 16, 48, 12),
        };
        let s = KeySwitchShape::new(
            self.n.unwrap_or(base.n),
            self.l.unwrap_or(base.l),
            self.alpha.unwrap_or(base.alpha),
        );
        if !s.n.is_power_of_two() || s.l == 0 || s.alpha == 0 {
            bail!("invalid shape: n must be a power of two, l and alpha positive");
        }
        Ok(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SeqArg {
    KsStage1,
    KsStage3,
    KsFull,
}

impl From<SeqArg> for BatchSequence {
    fn from(s: SeqArg) -> Self {
        match s {
            SeqArg::KsStage1 => BatchSequence::KsStage1,
            SeqArg::KsStage3 => BatchSequence::KsStage3,
            SeqArg::KsFull => BatchSequence::KsFull,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Eager,
    StaticGraph,
}

impl From<ModeArg> for LaunchMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Eager => LaunchMode::Eager,
            ModeArg::StaticGraph => LaunchMode::StaticGraph,
        }
    }
}

#[derive(Args)]
pub struct PlanArgs {
    #[command(flatten)]
    shape: ShapeArgs,
    /// Sequence whose amortized-latency curve is reported.
    #[arg(long, value_enum, default_value_t = SeqArg::KsStage3)]
    sequence: SeqArg,
    #[arg(long, value_enum, default_value_t = ModeArg::Eager)]
    mode: ModeArg,
    /// Last batch size on the curve (default: 2 B* + 2).
    #[arg(long)]
    max_batch: Option<u64>,
}

pub fn plan(g: &Global, a: &PlanArgs) -> Result<Outcome> {
    let shape = a.shape.shape(g)?;
    let m = g.machine()?;
    let seqs = [BatchSequence::KsStage1, BatchSequence::KsStage3, BatchSequence::KsFull];
    let plans: Vec<_> = seqs.iter().map(|&s| (s, plan_batch(&shape, s, &m))).collect();
    let chosen: BatchSequence = a.sequence.into();
    let b_star = plan_batch(&shape, chosen, &m).b_star;
    let curve = amortized_curve(&shape, chosen, &m, a.max_batch.unwrap_or(2 * b_star + 2), a.mode.into());
    let base = curve[0].amortized;
    let body = match g.format {
        Format::Text => {
            let mut s = format!(
                "shape N = {}, L = {}, alpha = {}, beta = {}; machine {} (L2 {} MB)\n",
                shape.n,
                shape.l,
                shape.alpha,
                shape.beta,
                m.name,
                mb(m.l2_capacity)
            );
            s += &format!(
                "footprint per sequence: stage 1 {} MB, stage 3 {} MB\n\n",
                mb(keyswitch_footprint(&shape, Stage::ModUp, 1) as f64),
                mb(keyswitch_footprint(&shape, Stage::ModDown, 1) as f64)
            );
            let rows: Vec<Vec<String>> = plans
                .iter()
                .map(|(seq, p)| {
                    vec![
                        format!("{seq:?}"),
                        mb(p.footprint_per_sequence as f64),
                        p.b_star.to_string(),
                        mb(p.footprint_at_b_star as f64),
                        p.spill.to_string(),
                    ]
                })
                .collect();
            s += &table(&["sequence", "MB/seq", "B*", "MB at B*", "spill"], &rows);
            s += &format!("\namortized latency, {chosen:?}, {:?}\n", a.mode);
            let rows: Vec<Vec<String>> = curve
                .iter()
                .map(|p| {
                    vec![
                        p.batch.to_string(),
                        mb(p.footprint as f64),
                        mb(p.spill_bytes),
                        us(p.amortized),
                        format!("{:.3}", base / p.amortized),
                    ]
                })
                .collect();
            s += &table(&["B", "footprint MB", "spill MB", "amortized us", "gain"], &rows);
            s
        }
        Format::Csv => output::csv_rows(&curve)?,
        Format::Structured => {
            #[derive(Serialize)]
            struct PlanRow {
                sequence: BatchSequence,
                #[serde(flatten)]
                plan: hemem_cost::BatchPlan,
            }
            #[derive(Serialize)]
            struct Body<'a> {
                shape: KeySwitchShape,
                machine: &'a str,
                plans: Vec<PlanRow>,
                curve_sequence: BatchSequence,
                curve: &'a [hemem_cost::BatchPoint],
            }
            output::structured(
                "hemem.plan/1",
                &Body {
                    shape,
                    machine: &m.name,
                    plans: plans.iter().map(|&(sequence, plan)| PlanRow { sequence, plan }).collect(),
                    curve_sequence: chosen,
                    curve: &curve,
                },
            )?
        }
    };
    g.sink().emit(&body)?;
    Ok(Outcome::Ok)
}

#[derive(Args)]
pub struct RooflineArgs {
    /// Kernel trace file.
    #[arg(long, conflicts_with_all = ["total_bytes", "read_bytes"])]
    trace: Option<PathBuf>,
    /// Aggregate global-memory traffic in bytes, charged as reads.
    #[arg(long)]
    total_bytes: Option<f64>,
    #[arg(long, conflicts_with = "total_bytes")]
    read_bytes: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    write_bytes: f64,
    #[arg(long, default_value_t = 0.0)]
    dram_bytes: f64,
    /// IMAD-pipe operations.
    #[arg(long, default_value_t = 0.0)]
    ops: f64,
    /// Emit `(intensity, ops/s)` roofline curve points instead.
    #[arg(long)]
    curve: bool,
    #[command(flatten)]
    shape: ShapeArgs,
}

pub fn roofline(g: &Global, a: &RooflineArgs) -> Result<Outcome> {
    let m = g.machine()?;
    if a.curve {
        #[derive(Serialize)]
        struct Pt {
            intensity: f64,
            ops_per_s: f64,
        }
        let pts: Vec<Pt> = roofline_curve(&m, 1e-2, 1e3, 41)
            .into_iter()
            .map(|(intensity, ops_per_s)| Pt { intensity, ops_per_s })
            .collect();
        let body = match g.format {
            Format::Structured => output::structured("hemem.roofline-curve/1", &pts)?,
            _ => output::csv_rows(&pts)?,
        };
        g.sink().emit(&body)?;
        return Ok(Outcome::Ok);
    }
    let as_u64 = |v: f64| -> Result<u64> {
        if !(v.is_finite() && v >= 0.0) {
            bail!("byte and op counts must be non-negative");
        }
        Ok(v.round() as u64)
    };
    let (source, report) = if let Some(p) = &a.trace {
        let t = KernelTrace::load(p).map_err(|e| anyhow!(e))?;
        (format!("trace {}", p.display()), TrafficReport::from_kernels(&t.descriptors()))
    } else if a.total_bytes.is_some() || a.read_bytes.is_some() {
        let read = as_u64(a.total_bytes.or(a.read_bytes).unwrap_or(0.0))?;
        let traffic = Traffic {
            read,
            write: as_u64(a.write_bytes)?,
            dram: as_u64(a.dram_bytes)?,
        };
        let ops = CoreOps {
            mads: as_u64(a.ops)?,
            ..CoreOps::default()
        };
        ("totals".to_string(), TrafficReport::from_totals(traffic, ops))
    } else {
        let s = a.shape.shape(g)?;
        (
            format!("keyswitch N = {}, L = {}, alpha = {}", s.n, s.l, s.alpha),
            TrafficReport::from_kernels(&hemem_cost::keyswitch::keyswitch_kernels(&s)),
        )
    };
    let bound = hemem_cost::roofline(&report, &m);
    let body = match g.format {
        Format::Text => {
            let mut s = format!(
                "{source} on {}: read {} MB, write {} MB, dram {} MB\n",
                m.name,
                mb(report.total.read as f64),
                mb(report.total.write as f64),
                mb(report.total.dram as f64)
            );
            s += &format!(
                "bound {:.4} ms, bottleneck {}\n",
                bound.latency * 1e3,
                bound.bottleneck.as_str()
            );
            let rows: Vec<Vec<String>> = bound
                .per_resource
                .iter()
                .map(|(r, t)| vec![r.as_str().to_string(), format!("{:.4}", t * 1e3)])
                .collect();
            s += &table(&["resource", "ms"], &rows);
            s
        }
        Format::Csv => {
            #[derive(Serialize)]
            struct Row<'a> {
                resource: &'a str,
                seconds: f64,
                bottleneck: bool,
            }
            let rows: Vec<Row> = bound
                .per_resource
                .iter()
                .map(|(r, t)| Row {
                    resource: r.as_str(),
                    seconds: *t,
                    bottleneck: *r == bound.bottleneck,
                })
                .collect();
            output::csv_rows(&rows)?
        }
        Format::Structured => {
            #[derive(Serialize)]
            struct Body<'a> {
                source: &'a str,
                machine: &'a str,
                traffic: Traffic,
                bound: &'a hemem_cost::RooflineBound,
            }
            output::structured(
                "hemem.roofline/1",
                &Body {
                    source: &source,
                    machine: &m.name,
                    traffic: report.total,
                    bound: &bound,
                },
            )?
        }
    };
    g.sink().emit(&body)?;
    Ok(Outcome::Ok)
}


#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AnalyzeMode {
    Eager,
    StaticGraph,
    Both,
}

#[derive(Args)]
pub struct AnalyzeArgs {
    /// Kernel trace file (default: the key-switch trace of the shape).
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = AnalyzeMode::Both)]
    mode: AnalyzeMode,
    /// Use the complementary-pipelined key-switch trace.
    #[arg(long)]
    pipelined: bool,
    #[command(flatten)]
    shape: ShapeArgs,
}

pub fn analyze(g: &Global, a: &AnalyzeArgs) -> Result<Outcome> {
    let m = g.machine()?;
    let (trace, shape) = match &a.trace {
        Some(p) => (KernelTrace::load(p).map_err(|e| anyhow!(e))?, None),
        None => {
            let s = a.shape.shape(g)?;
            (KernelTrace::keyswitch(&s, a.pipelined), Some(s))
        }
    };
    let modes: Vec<LaunchMode> = match a.mode {
        AnalyzeMode::Eager => vec![LaunchMode::Eager],
        AnalyzeMode::StaticGraph => vec![LaunchMode::StaticGraph],
        AnalyzeMode::Both => vec![LaunchMode::Eager, LaunchMode::StaticGraph],
    };
    let ests = modes
        .iter()
        .map(|&md| estimate_sequence(&trace, &m, md))
        .collect::<hemem_cost::Result<Vec<_>>>()
        .map_err(|e| anyhow!(e))?;
    let body = match g.format {
        Format::Text => {
            let mut s = format!("trace {} ({} kernels) on {}\n", trace.name, trace.kernel_count(), m.name);
            for e in &ests {
                s += &format!(
                    "{:?}: latency {:.4} ms (kernels {:.4} ms, overlap saving {:.4} ms, launch {:.4} ms)\n",
                    e.mode,
                    e.latency * 1e3,
                    e.kernel_time * 1e3,
                    e.overlap_savings * 1e3,
                    e.launch_time * 1e3
                );
            }
            if ests.len() == 2 {
                s += &format!("eager - static_graph = {:.4} ms\n", (ests[0].latency - ests[1].latency) * 1e3);
            }
            for o in &ests[0].overlaps {
                s += &format!(
                    "overlap group {}: sequential {} us, overlapped {} us ({}-bound)\n",
                    o.group,
                    us(o.sequential),
                    us(o.overlapped),
                    o.bottleneck.as_str()
                );
            }
            if let Some(shape) = shape {
                let t = keyswitch_traffic(&shape).totals();
                s += &format!(
                    "stage traffic: {} / {} / {} MB\n",
                    mb(t[0] as f64),
                    mb(t[1] as f64),
                    mb(t[2] as f64)
                );
                let (seq, pipe) = stages23_latency(&shape, &m);
                s += &format!("stages 2+3: sequential {} us, pipelined {} us\n", us(seq), us(pipe));
                for w in keyswitch_pipeline_schedule(&shape, &m).warnings {
                    s += &format!("warning: {w}\n");
                }
            }
            s.push('\n');
            let rows: Vec<Vec<String>> = ests[0]
                .kernels
                .iter()
                .map(|k| {
                    vec![
                        k.name.clone(),
                        k.kind.as_str().to_string(),
                        k.repeat.to_string(),
                        mb(k.traffic.read as f64),
                        mb(k.traffic.write as f64),
                        mb(k.traffic.dram as f64),
                        us(k.time),
                        k.bottleneck.as_str().to_string(),
                    ]
                })
                .collect();
            s += &table(&["kernel", "kind", "x", "read MB", "write MB", "dram MB", "us", "bound"], &rows);
            s
        }
        Format::Csv => {
            #[derive(Serialize)]
            struct Row<'a> {
                kernel: &'a str,
                kind: &'a str,
                repeat: u64,
                read_bytes: u64,
                write_bytes: u64,
                dram_bytes: u64,
                seconds: f64,
                bottleneck: &'a str,
                overlap: &'a str,
            }
            let rows: Vec<Row> = ests[0]
                .kernels
                .iter()
                .map(|k| Row {
                    kernel: &k.name,
                    kind: k.kind.as_str(),
                    repeat: k.repeat,
                    read_bytes: k.traffic.read,
                    write_bytes: k.traffic.write,
                    dram_bytes: k.traffic.dram,
                    seconds: k.time,
                    bottleneck: k.bottleneck.as_str(),
                    overlap: k.overlap.as_deref().unwrap_or(""),
                })
                .collect();
            output::csv_rows(&rows)?
        }
        Format::Structured => {
            #[derive(Serialize)]
            struct Body<'a> {
                trace: &'a str,
                machine: &'a str,
                estimates: &'a [hemem_cost::SequenceEstimate],
            }
            output::structured(
                "hemem.analyze/1",
                &Body {
                    trace: &trace.name,
                    machine: &m.name,
                    estimates: &ests,
                },
            )?
        }
    };
    g.sink().emit(&body)?;
    Ok(Outcome::Ok)
}

#[derive(Args)]
pub struct TraceArgs {
    #[arg(long)]
    pipelined: bool,
    #[command(flatten)]
    shape: ShapeArgs,
}

pub fn trace(g: &Global, a: &TraceArgs) -> Result<Outcome> {
    let s = a.shape.shape(g)?;
    let t = KernelTrace::keyswitch(&s, a.pipelined);
    let body = match g.format {
        Format::Structured => output::structured("hemem.trace/1", &t)?,
        _ => t.to_toml(),
    };
    g.sink().emit(&body)?;
    Ok(Outcome::Ok)
}

