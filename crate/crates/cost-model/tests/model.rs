use hemem_cost::batch::amortized_curve;
use hemem_cost::keyswitch::stages23_latency;
use hemem_cost::*;

fn profile(name: &str) -> MachineModel {
    MachineModel::load(format!("{}/../../profiles/{name}.toml", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

const MB: f64 = 1e6;

#[test]
fn shipped_profiles_parse() {
    let m = profile("rtx5090");
    assert_eq!(m, MachineModel::rtx5090());
    for p in ["a100", "h100"] {
        profile(p).validate().unwrap();
    }
}

#[test]
fn table_footprints_and_traffic() {
    // (L, footprint stage 1, stage 3, traffic stage 1, 2, 3) in MB
    let rows = [
        (48, 62.9, 50.3, 352.0, 233.0, 201.0),
        (24, 18.9, 25.2, 101.0, 81.8, 107.0),
        (12, 6.30, 12.6, 31.5, 34.6, 69.2),
    ];
    for (l, f1, f3, t1, t2, t3) in rows {
        let s = KeySwitchShape::new(1 << 16, l, 12);
        let rel = |got: f64, want: f64| (got - want).abs() / want;
        assert!(rel(keyswitch_footprint(&s, Stage::ModUp, 1) as f64 / MB, f1) < 0.01);
        assert!(rel(keyswitch_footprint(&s, Stage::ModDown, 1) as f64 / MB, f3) < 0.01);
        let t = keyswitch_traffic(&s).totals();
        for (got, want) in t.iter().zip([t1, t2, t3]) {
            assert!(rel(*got as f64 / MB, want) < 0.15, "L = {l}: {got} vs {want} MB");
        }
    }
}

#[test]
fn hint_reads_at_defaults() {
    let s = KeySwitchShape::new(1 << 16, 48, 12);
    let dram = keyswitch_traffic(&s).stage2.dram as f64 / MB;
    // 2 beta (L + alpha) + L = 528 limbs
    assert!((dram - 138.4).abs() < 0.1);
}

#[test]
fn pipelined_stages_beat_sequential_on_all_profiles() {
    for p in ["rtx5090", "a100", "h100"] {
        let (seq, pipe) = stages23_latency(&KeySwitchShape::new(1 << 16, 48, 12), &profile(p));
        assert!(pipe < seq, "{p}");
    }
}

#[test]
fn batching_curve_shape() {
    let m = profile("rtx5090");
    let s = KeySwitchShape::new(1 << 16, 12, 12);
    let plan = plan_batch(&s, BatchSequence::KsStage3, &m);
    assert_eq!(plan.b_star, 7);
    let c = amortized_curve(&s, BatchSequence::KsStage3, &m, 16, LaunchMode::Eager);
    assert!(c[6].amortized < c[0].amortized);
    assert!(c[7].amortized > c[6].amortized);
}

#[test]
fn trace_file_round_trip() {
    let dir = std::env::temp_dir().join(format!("hemem-trace-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("ks.toml");
    let t = KernelTrace::keyswitch(&KeySwitchShape::new(1 << 16, 24, 12), true);
    std::fs::write(&path, t.to_toml()).unwrap();
    assert_eq!(KernelTrace::load(&path).unwrap(), t);
    std::fs::remove_dir_all(dir).unwrap();
}
