use ssr_sim::cluster::{dma_cycles, run_cluster, ClusterConfig, ClusterError, Dma, DmaJob, WorkQueue};
use ssr_sim::formats::{gen_csr, gen_dense_vector, gen_sparse_vector, CsrMatrix, DenseVector, IndexWidth, SyntheticCsr};
use ssr_sim::kernels::{run_kernel, ExecOptions, KernelConfig, KernelId, KernelOutput, Operands, Variant};
use ssr_sim::machine::MachineParams;
use ssr_sim::timing::TimingMode;

const W: IndexWidth = IndexWidth::W16;

fn matrix(rows: usize, cols: usize, avg: usize, seed: u64) -> CsrMatrix {
    gen_csr(&SyntheticCsr { nrows: rows, ncols: cols, nnz: rows * avg, seed, width: W }).unwrap()
}

fn matvec(a: &CsrMatrix) -> Operands {
    Operands::MatVec { a: a.clone(), x: DenseVector::unit(gen_dense_vector(a.ncols(), 2)), y_stride: 1 }
}

fn sparse_vec(a: &CsrMatrix) -> Operands {
    let n = a.ncols() as u64;
    Operands::MatSparseVec { a: a.clone(), b: gen_sparse_vector(n, n / 50, 3, W).unwrap() }
}

fn cluster(k: KernelId, v: Variant, ops: &Operands, cfg: &ClusterConfig) -> ssr_sim::cluster::ClusterRun {
    run_cluster(k, &KernelConfig::new(v, W), ops, cfg, MachineParams::default()).unwrap()
}

#[test]
fn dma_transfer_time() {
    assert_eq!(dma_cycles(4096, 512), 64);
    assert_eq!(dma_cycles(0, 512), 0);
    assert_eq!(dma_cycles(100, 64), 13);
}

#[test]
fn dma_refuses_to_overwrite_a_live_slot() {
    let mut d = Dma::new(512, 1);
    let job = |chunk| {
        let (buffer, slot) = d.placement(chunk);
        DmaJob { chunk, bytes: 640, buffer, slot }
    };
    let (j0, j1, j2) = (job(0), job(1), job(2));
    let done = d.issue(j0, 0).unwrap();
    assert_eq!(done, 10);
    assert!(matches!(d.issue(j1, 1), Err(ClusterError::Dma(_))), "second job while one is in flight");
    assert_eq!(d.poll(9), None);
    assert_eq!(d.poll(10), Some(j0));
    d.issue(j1, 10).unwrap();
    d.poll(20).unwrap();
    // Chunk 2 maps onto chunk 0's slot, which no core has released yet.
    assert!(matches!(d.issue(j2, 20), Err(ClusterError::Dma(_))));
    d.release(0);
    d.issue(j2, 20).unwrap();
}

#[test]
fn chunks_cover_all_rows_once() {
    let a = matrix(100, 512, 12, 4);
    let q = WorkQueue::new(&a, 7, 1 << 20).unwrap();
    let mut next = 0;
    for c in &q.chunks {
        assert_eq!(c.start, next);
        assert!(c.rows <= 7 && c.rows > 0);
        next += c.rows;
    }
    assert_eq!(next, 100);
    assert!(matches!(WorkQueue::new(&a, 7, 64), Err(ClusterError::Capacity(_))));
}

#[test]
fn single_core_cluster_matches_single_core_run() {
    let a = matrix(256, 2048, 40, 5);
    for (k, ops) in [(KernelId::SmXdV, matvec(&a)), (KernelId::SmXsV, sparse_vec(&a))] {
        for v in [Variant::Base, Variant::Sssr] {
            let cfg = ClusterConfig { cores: 1, ..ClusterConfig::default() };
            let run = cluster(k, v, &ops, &cfg);
            let opts = ExecOptions { timing: TimingMode::Banked, ..ExecOptions::default() };
            let (out, rep) = run_kernel(k, &KernelConfig::new(v, W), &ops, &opts).unwrap();
            assert_eq!(out, KernelOutput::Dense(run.y.clone()), "{k} {v}");
            let expected = rep.cycles + run.report.prologue_cycles + run.report.epilogue_cycles;
            let dev = (run.report.cycles as f64 - expected as f64).abs() / expected as f64;
            assert!(dev <= 0.05, "{k} {v}: {} vs {expected}", run.report.cycles);
        }
    }
}

#[test]
fn eight_cores_give_bit_identical_results() {
    let a = matrix(256, 2048, 20, 6);
    for (k, ops) in [(KernelId::SmXdV, matvec(&a)), (KernelId::SmXsV, sparse_vec(&a))] {
        for v in [Variant::Base, Variant::Sssr] {
            let run = cluster(k, v, &ops, &ClusterConfig::default());
            let (out, single) = run_kernel(k, &KernelConfig::new(v, W), &ops, &ExecOptions::default()).unwrap();
            assert_eq!(out, KernelOutput::Dense(run.y.clone()), "{k} {v}");
            let r = &run.report;
            assert_eq!(r.rows_per_core.iter().sum::<usize>(), 256);
            assert_eq!(r.aggregate.fpu_useful_ops, single.fpu_useful_ops);
            assert!(r.utilization() > 0.0 && r.utilization() <= 1.0);
        }
    }
}

#[test]
fn speedup_over_one_core_is_bounded_by_core_count() {
    let a = matrix(256, 2048, 40, 7);
    let ops = matvec(&a);
    let one = cluster(KernelId::SmXdV, Variant::Sssr, &ops, &ClusterConfig { cores: 1, ..ClusterConfig::default() });
    let eight = cluster(KernelId::SmXdV, Variant::Sssr, &ops, &ClusterConfig::default());
    let s = one.report.cycles as f64 / eight.report.cycles as f64;
    assert!(s > 2.0 && s <= 8.0, "{s}");
}

#[test]
fn imbalance_is_finite_when_cores_outnumber_chunks() {
    let a = matrix(8, 256, 10, 11);
    let ops = matvec(&a);
    let one = cluster(KernelId::SmXdV, Variant::Sssr, &ops, &ClusterConfig { cores: 1, ..ClusterConfig::default() });
    assert_eq!(one.report.imbalance(), 1.0);
    let cfg = ClusterConfig { chunk_rows: Some(8), ..ClusterConfig::default() };
    let run = cluster(KernelId::SmXdV, Variant::Sssr, &ops, &cfg);
    // One chunk: one core does the work, the rest only try to claim.
    let imb = run.report.imbalance();
    assert!(imb.is_finite() && imb > 1.0 && imb <= 8.0, "{imb}");
}

#[test]
fn runs_are_deterministic() {
    let a = matrix(96, 1024, 25, 8);
    let ops = matvec(&a);
    let cfg = ClusterConfig { trace: true, ..ClusterConfig::default() };
    let r1 = cluster(KernelId::SmXdV, Variant::Sssr, &ops, &cfg);
    let r2 = cluster(KernelId::SmXdV, Variant::Sssr, &ops, &cfg);
    assert_eq!(r1.y, r2.y);
    assert_eq!(r1.report.cycles, r2.report.cycles);
    assert_eq!(r1.trace, r2.trace);
    assert!(r1.trace.iter().any(|l| l.contains("claim")));
}

#[test]
fn icache_penalty_slows_the_cluster() {
    let a = matrix(128, 1024, 20, 9);
    let ops = matvec(&a);
    let base = cluster(KernelId::SmXdV, Variant::Sssr, &ops, &ClusterConfig::default());
    let slow = cluster(KernelId::SmXdV, Variant::Sssr, &ops, &ClusterConfig { icache_penalty: 50, ..ClusterConfig::default() });
    assert!(slow.report.cycles > base.report.cycles);
    assert!(slow.report.aggregate.stalls.icache > 0);
    assert_eq!(slow.y, base.y);
}

#[test]
fn invalid_configurations_are_rejected() {
    let a = matrix(16, 256, 4, 10);
    let ops = matvec(&a);
    let kcfg = KernelConfig::new(Variant::Sssr, W);
    let p = MachineParams::default();
    for bad in [
        ClusterConfig { cores: 0, ..ClusterConfig::default() },
        ClusterConfig { banks: 24, ..ClusterConfig::default() },
        ClusterConfig { tcdm_kib: 96, ..ClusterConfig::default() },
        ClusterConfig { chunk_rows: Some(0), ..ClusterConfig::default() },
    ] {
        assert!(matches!(run_cluster(KernelId::SmXdV, &kcfg, &ops, &bad, p), Err(ClusterError::Config(_))), "{bad:?}");
    }
    assert!(run_cluster(KernelId::SvXdV, &kcfg, &ops, &ClusterConfig::default(), p).is_err());
    let tiny = ClusterConfig { tcdm_kib: 4, ..ClusterConfig::default() };
    let wide = matrix(4, 1024, 600, 11);
    assert!(matches!(run_cluster(KernelId::SmXdV, &kcfg, &matvec(&wide), &tiny, p), Err(ClusterError::Capacity(_))));
}

#[test]
fn slow_compute_hides_all_but_the_first_transfer() {
    let a = matrix(256, 2048, 40, 12);
    let cfg = ClusterConfig { cores: 1, ..ClusterConfig::default() };
    let run = cluster(KernelId::SmXdV, Variant::Base, &matvec(&a), &cfg);
    let first = WorkQueue::new(&a, 64, u64::MAX).unwrap().chunks[0].bytes;
    let exposed = run.report.dma_wait_cycles;
    let t = dma_cycles(first, cfg.dma_width_bits);
    assert!(exposed <= t && exposed + cfg.claim_overhead >= t, "{exposed} vs {t}");
}

#[test]
fn banked_cluster_never_beats_ideal_single_core_utilization() {
    let a = matrix(256, 2048, 30, 13);
    for (k, ops) in [(KernelId::SmXdV, matvec(&a)), (KernelId::SmXsV, sparse_vec(&a))] {
        let run = cluster(k, Variant::Sssr, &ops, &ClusterConfig::default());
        let (_, single) = run_kernel(k, &KernelConfig::new(Variant::Sssr, W), &ops, &ExecOptions::default()).unwrap();
        assert!(run.report.utilization() <= single.utilization(), "{k}");
    }
}
