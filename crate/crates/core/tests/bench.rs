use std::process::Command;

use ssr_sim::bench::{run_experiment, write_csv, BenchConfig, Experiment, ExperimentId, CSV_HEADER};
use ssr_sim::formats::IndexWidth;
use ssr_sim::kernels::Variant;

fn csv_bytes(e: &Experiment) -> Vec<u8> {
    let mut out = Vec::new();
    write_csv(&run_experiment(e).unwrap(), &mut out).unwrap();
    out
}

fn small_grid(id: ExperimentId) -> Experiment {
    let mut e = Experiment::new(id);
    e.sweep.densities = vec![0.003, 0.03, 0.3];
    e.sweep.vector_len = 8000;
    e
}

#[test]
fn csv_is_byte_identical_across_runs_and_threading() {
    let mut e = small_grid(ExperimentId::SvPsVGrid);
    let a = csv_bytes(&e);
    assert_eq!(a, csv_bytes(&e));
    e.parallel = false;
    assert_eq!(a, csv_bytes(&e));
    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
    // 9 grid points, three variants each.
    assert_eq!(lines.count(), 27);
}

#[test]
fn utilization_is_a_fraction_and_base_speedup_is_one() {
    for id in [ExperimentId::SvXdVUtil, ExperimentId::SmXsVSpeedup] {
        let mut e = Experiment::new(id);
        e.sweep.nnz = vec![8, 64];
        for r in run_experiment(&e).unwrap() {
            assert!((0.0..=1.0).contains(&r.utilization));
            if r.variant == Variant::Base {
                assert_eq!(r.speedup_vs_base, 1.0);
            }
            assert!(r.max_rel_error <= 1e-12);
        }
    }
}

#[test]
fn dense_gather_utilization_approaches_the_arbitration_limit() {
    let mut e = Experiment::new(ExperimentId::SvXdVUtil);
    e.sweep.widths = vec![IndexWidth::W16];
    e.sweep.variants = vec![Variant::Sssr];
    e.sweep.nnz = vec![256, 1024, 4096];
    let u: Vec<f64> = run_experiment(&e).unwrap().iter().map(|r| r.utilization).collect();
    assert!(u.windows(2).all(|w| w[0] < w[1]), "{u:?}");
    assert!(u[2] > 0.78 && u[2] < 0.80, "{u:?}");
}

#[test]
fn sparse_sparse_speedups_stay_below_the_matching_limit() {
    for id in [ExperimentId::SvXsVGrid, ExperimentId::SvPsVGrid] {
        let mut e = small_grid(id);
        e.sweep.variants = vec![Variant::Sssr];
        for r in run_experiment(&e).unwrap() {
            assert!(r.speedup_vs_base < 14.4, "{id}: {}", r.speedup_vs_base);
        }
    }
    let mut e = Experiment::new(ExperimentId::SvXsVGrid);
    e.sweep.densities = vec![0.0003, 0.3];
    e.sweep.variants = vec![Variant::Sssr];
    let rows = run_experiment(&e).unwrap();
    for r in rows.iter().filter(|r| r.density_a != r.density_b) {
        assert!((r.speedup_vs_base - 5.0).abs() < 0.25, "{}", r.speedup_vs_base);
    }
}

#[test]
fn config_file_drives_the_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("exp.toml");
    std::fs::write(
        &p,
        "[sweep]\nwidths = [32]\nvariants = [\"base\", \"sssr\"]\nnnz = [20]\nrows = 32\ncols = 512\nseed = 9\n\
         [machine]\nfpu_latency = 4\n[cluster]\ncores = 4\nbanks = 16\n",
    )
    .unwrap();
    let cfg = BenchConfig::load(&p).unwrap();
    let e = Experiment::from_config(ExperimentId::ClusterSmXdV, &cfg).unwrap();
    assert_eq!(e.exec.machine.fpu_latency, 4);
    let rows = run_experiment(&e).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.cores == 4 && r.idx_width == 32 && r.rows == 32));
}

#[test]
fn cli_run_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_ssr-sim"))
        .args(["run", "SvXsV_grid", "--density", "0.01,0.1", "--idx-width", "16", "--seed", "3", "--timing", "banked"])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("SvXsV_grid.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4 * 2);

    let bad = Command::new(env!("CARGO_BIN_EXE_ssr-sim")).args(["run", "NoSuchExperiment"]).output().unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("unknown experiment"));
}

#[test]
fn cli_accept_prints_one_line_per_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_ssr-sim")).arg("accept").arg("--out").arg(dir.path()).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = text.lines().filter(|l| l.starts_with("criterion")).collect();
    assert_eq!(lines.len(), 11, "{text}");
    let any_fail = lines.iter().any(|l| l.contains(" FAIL "));
    assert_eq!(out.status.success(), !any_fail);
    assert!(dir.path().join("acceptance.txt").exists());
    assert!(dir.path().join("measurements.csv").exists());
}
