use ssr_sim::formats::{gen_csr, gen_dense_vector, gen_sparse_vector, CsrMatrix, DenseVector, Fiber, IndexWidth, SyntheticCsr};
use ssr_sim::kernels::{
    prepare, run_kernel, smxdv_row_schedule, DenseMatrix, ExecOptions, KernelConfig, KernelId, KernelOutput, Operands,
    RowPlan, Variant,
};
use ssr_sim::machine::Instr;

fn cfg(v: Variant, w: IndexWidth) -> KernelConfig {
    KernelConfig::new(v, w)
}

fn run(k: KernelId, v: Variant, w: IndexWidth, ops: &Operands) -> (KernelOutput, ssr_sim::machine::SimReport) {
    run_kernel(k, &cfg(v, w), ops, &ExecOptions::default()).unwrap()
}

fn fiber(idx: &[u64], vals: &[f64], n: u64, w: IndexWidth) -> Fiber {
    Fiber::new(vals.to_vec(), idx.to_vec(), n, w).unwrap()
}

fn dot_dense(a: &Fiber, b: &[f64]) -> f64 {
    a.densify().iter().zip(b).map(|(x, y)| x * y).sum()
}

fn close(x: f64, y: f64, scale: f64) -> bool {
    (x - y).abs() <= 1e-12 * scale.max(1.0)
}

/// Steady-state cycles per element from two run lengths.
fn slope(f: impl Fn(u64) -> u64, n1: u64, n2: u64) -> f64 {
    (f(n2) - f(n1)) as f64 / (n2 - n1) as f64
}

fn dense_cycles(k: KernelId, v: Variant, nnz: u64) -> u64 {
    let w = IndexWidth::W16;
    let a = gen_sparse_vector(4096, nnz, 7, w).unwrap();
    let b = DenseVector::unit(gen_dense_vector(4096, 8));
    run(k, v, w, &Operands::SparseDense { a, b }).1.cycles
}

#[test]
fn baseline_loops_match_calibrated_costs() {
    for (k, v, want) in [
        (KernelId::SvXdV, Variant::Base, 9.0),
        (KernelId::SvXdV, Variant::Ssr, 7.0),
        (KernelId::SvPdV, Variant::Base, 10.0),
        (KernelId::SvPdV, Variant::Ssr, 9.0),
    ] {
        let s = slope(|n| dense_cycles(k, v, n), 200, 400);
        assert_eq!(s, want, "{k} {v}");
    }
}

#[test]
fn sssr_dot_reaches_arbitration_limit() {
    let s = slope(|n| dense_cycles(KernelId::SvXdV, Variant::Sssr, n), 1000, 3000);
    assert!((s - 1.25).abs() < 0.01, "{s}");
}

fn ss_cycles(v: Variant, a: &[u64], b: &[u64], w: IndexWidth) -> u64 {
    let n = 1 << 12;
    let fa = fiber(a, &vec![1.5; a.len()], n, w);
    let fb = fiber(b, &vec![2.0; b.len()], n, w);
    run(KernelId::SvXsV, v, w, &Operands::SparseSparse { a: fa, b: fb }).1.cycles
}

#[test]
fn sparse_sparse_scan_and_match_costs() {
    let w = IndexWidth::W16;
    let scan = |v: Variant| {
        slope(|n| ss_cycles(v, &(0..n).collect::<Vec<_>>(), &[4000], w), 100, 300)
    };
    let matched = |v: Variant| {
        slope(
            |n| {
                let i: Vec<u64> = (0..n).collect();
                ss_cycles(v, &i, &i, w)
            },
            100,
            300,
        )
    };
    assert_eq!(scan(Variant::Base), 5.0);
    assert_eq!(matched(Variant::Base), 18.0);
    let s = scan(Variant::Sssr);
    assert!((s - 1.0).abs() < 0.02, "{s}");
    let m = matched(Variant::Sssr);
    assert!((m - 1.25).abs() < 0.02, "{m}");
}

#[test]
fn disjoint_intersection_is_zero() {
    let w = IndexWidth::W32;
    let a = fiber(&[0, 2, 4], &[1.0, 2.0, 3.0], 8, w);
    let b = fiber(&[1, 3, 5], &[1.0, 2.0, 3.0], 8, w);
    let (out, rep) = run(KernelId::SvXsV, Variant::Sssr, w, &Operands::SparseSparse { a, b });
    assert_eq!(out, KernelOutput::Scalar(0.0));
    assert_eq!(rep.frep_s_iterations, 0);
}

#[test]
fn brute_force_intersection_value() {
    let w = IndexWidth::W16;
    let a = fiber(&[2], &[3.0], 4, w);
    let b = fiber(&[2], &[4.0], 4, w);
    for v in [Variant::Base, Variant::Sssr] {
        let ops = Operands::SparseSparse { a: a.clone(), b: b.clone() };
        assert_eq!(run(KernelId::SvXsV, v, w, &ops).0, KernelOutput::Scalar(12.0));
    }
}

#[test]
fn identity_times_vector() {
    let w = IndexWidth::W16;
    let a = CsrMatrix::identity(2, w).unwrap();
    for v in Variant::ALL {
        let ops = Operands::MatVec { a: a.clone(), x: DenseVector::unit(vec![3.0, 4.0]), y_stride: 1 };
        assert_eq!(run(KernelId::SmXdV, v, w, &ops).0, KernelOutput::Dense(vec![3.0, 4.0]), "{v}");
    }
}

#[test]
fn union_of_small_fibers() {
    let w = IndexWidth::W8;
    let a = fiber(&[1, 3], &[1.0, 2.0], 16, w);
    let b = fiber(&[3, 9], &[10.0, 20.0], 16, w);
    let want = fiber(&[1, 3, 9], &[1.0, 12.0, 20.0], 16, w);
    for v in Variant::ALL {
        let ops = Operands::SparseSparse { a: a.clone(), b: b.clone() };
        assert_eq!(run(KernelId::SvPsV, v, w, &ops).0, KernelOutput::Sparse(want.clone()), "{v}");
    }
}

#[test]
fn intersection_kernels_have_no_ssr_variant() {
    let w = IndexWidth::W16;
    let a = fiber(&[1], &[1.0], 4, w);
    let ops = Operands::SparseSparse { a: a.clone(), b: a };
    assert!(prepare(KernelId::SvXsV, &cfg(Variant::Ssr, w), &ops).is_err());
}

#[test]
fn width_too_small_is_rejected() {
    let a = fiber(&[1], &[1.0], 300, IndexWidth::W16);
    let ops = Operands::SparseDense { a, b: DenseVector::unit(vec![0.0; 300]) };
    assert!(prepare(KernelId::SvXdV, &cfg(Variant::Sssr, IndexWidth::W8), &ops).is_err());
}

#[test]
fn empty_sparse_vector_gives_zero() {
    let w = IndexWidth::W32;
    for v in Variant::ALL {
        let ops = Operands::SparseDense { a: Fiber::empty(8, w), b: DenseVector::unit(vec![1.0; 8]) };
        assert_eq!(run(KernelId::SvXdV, v, w, &ops).0, KernelOutput::Scalar(0.0));
    }
}

/// Position of the first frep in a program.
fn frep_at(src: &[Instr]) -> usize {
    src.iter().position(|i| matches!(i, Instr::Frep { .. } | Instr::FrepS { .. })).unwrap()
}

#[test]
fn sparse_and_dense_dot_share_compute_body() {
    let w = IndexWidth::W16;
    let a = fiber(&[1, 2], &[1.0, 2.0], 8, w);
    let d = prepare(
        KernelId::SvXdV,
        &cfg(Variant::Sssr, w),
        &Operands::SparseDense { a: a.clone(), b: DenseVector::unit(vec![1.0; 8]) },
    )
    .unwrap()
    .program;
    let s = prepare(KernelId::SvXsV, &cfg(Variant::Sssr, w), &Operands::SparseSparse { a: a.clone(), b: a })
        .unwrap()
        .program;
    let (fd, fs) = (frep_at(&d.instrs), frep_at(&s.instrs));
    assert_eq!(d.instrs[fd + 1..], s.instrs[fs + 1..]);
    let accs = KernelConfig::new(Variant::Sssr, w).accs();
    assert_eq!(d.instrs[fd - accs..fd], s.instrs[fs - accs..fs]);
}

#[test]
fn row_schedule_plans() {
    assert!(smxdv_row_schedule(&[1, 1, 1], 4).iter().all(|p| !p.uses_frep()));
    assert_eq!(smxdv_row_schedule(&[0], 4), vec![RowPlan::Empty]);
    assert_eq!(smxdv_row_schedule(&[9], 4), vec![RowPlan::Looped { unrolled: 4, frep_iters: 5 }]);
}

#[test]
fn empty_rows_produce_zero_without_fp_ops() {
    let w = IndexWidth::W16;
    let a = CsrMatrix::new(3, 4, vec![0, 0, 0, 0], vec![], vec![], w).unwrap();
    let ops = Operands::MatVec { a, x: DenseVector::unit(vec![1.0; 4]), y_stride: 1 };
    let (out, rep) = run(KernelId::SmXdV, Variant::Sssr, w, &ops);
    assert_eq!(out, KernelOutput::Dense(vec![0.0; 3]));
    assert_eq!(rep.fpu_useful_ops, 0);
}

fn mat_vec(a: &CsrMatrix, x: &[f64]) -> Vec<f64> {
    a.to_dense().iter().map(|r| r.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

#[test]
fn smxsv_matches_dense_mat_vec() {
    let w = IndexWidth::W16;
    let a = gen_csr(&SyntheticCsr { nrows: 16, ncols: 16, nnz: 26, seed: 3, width: w }).unwrap();
    let b = gen_sparse_vector(16, 5, 4, w).unwrap();
    let want = mat_vec(&a, &b.densify());
    for v in [Variant::Base, Variant::Sssr] {
        let (out, _) = run(KernelId::SmXsV, v, w, &Operands::MatSparseVec { a: a.clone(), b: b.clone() });
        let KernelOutput::Dense(y) = out else { panic!() };
        for (p, q) in y.iter().zip(&want) {
            assert!(close(*p, *q, q.abs()), "{v}: {p} vs {q}");
        }
    }
}

#[test]
fn smxsv_self_row_is_sum_of_squares() {
    let w = IndexWidth::W32;
    let v = fiber(&[0, 3, 5], &[1.0, 2.0, 3.0], 8, w);
    let a = CsrMatrix::new(1, 8, vec![0, 3], vec![0, 3, 5], vec![1.0, 2.0, 3.0], w).unwrap();
    let (out, _) = run(KernelId::SmXsV, Variant::Sssr, w, &Operands::MatSparseVec { a, b: v });
    assert_eq!(out, KernelOutput::Dense(vec![14.0]));
}

#[test]
fn matrix_kernels_match_oracle() {
    let w = IndexWidth::W16;
    let a = gen_csr(&SyntheticCsr { nrows: 12, ncols: 16, nnz: 60, seed: 9, width: w }).unwrap();
    let b = gen_csr(&SyntheticCsr { nrows: 16, ncols: 4, nnz: 30, seed: 10, width: w }).unwrap();
    let bd: Vec<f64> = b.to_dense().concat();
    let dm = DenseMatrix::new(16, 4, bd).unwrap();
    let ad = a.to_dense();
    let want: Vec<f64> =
        (0..12).flat_map(|r| (0..4).map(|c| (0..16).map(|k| ad[r][k] * dm.get(k, c)).sum::<f64>()).collect::<Vec<_>>()).collect();
    for v in Variant::ALL {
        let (out, _) = run(KernelId::SmXdM, v, w, &Operands::MatMat { a: a.clone(), b: dm.clone() });
        let KernelOutput::Matrix(m) = out else { panic!() };
        for (p, q) in m.data.iter().zip(&want) {
            assert!(close(*p, *q, q.abs()), "smxdm {v}: {p} vs {q}");
        }
        if v == Variant::Ssr {
            continue;
        }
        let (out, _) = run(KernelId::SmXsM, v, w, &Operands::MatSparseMat { a: a.clone(), b: b.clone() });
        let KernelOutput::Matrix(m) = out else { panic!() };
        for (p, q) in m.data.iter().zip(&want) {
            assert!(close(*p, *q, q.abs()), "smxsm {v}: {p} vs {q}");
        }
    }
}

#[test]
fn vector_kernels_match_oracle() {
    for w in [IndexWidth::W8, IndexWidth::W16, IndexWidth::W32] {
        for seed in 0..5 {
            let n = 200;
            let a = gen_sparse_vector(n, 40 + seed, seed, w).unwrap();
            let b = gen_sparse_vector(n, 30, seed + 100, w).unwrap();
            let d = gen_dense_vector(n as usize, seed + 7);
            for v in Variant::ALL {
                let sd = Operands::SparseDense { a: a.clone(), b: DenseVector::unit(d.clone()) };
                let (out, _) = run(KernelId::SvXdV, v, w, &sd);
                let KernelOutput::Scalar(s) = out else { panic!() };
                assert!(close(s, dot_dense(&a, &d), 10.0), "{w} {v}");
                let (out, _) = run(KernelId::SvPdV, v, w, &sd);
                let want: Vec<f64> = a.densify().iter().zip(&d).map(|(p, q)| p + q).collect();
                assert_eq!(out, KernelOutput::Dense(want), "svpdv {w} {v}");
                let (out, _) = run(KernelId::SvHdV, v, w, &sd);
                let KernelOutput::Sparse(f) = out else { panic!() };
                let want: Vec<f64> = a.densify().iter().zip(&d).map(|(p, q)| p * q).collect();
                assert_eq!(f.densify(), want, "svhdv {w} {v}");

                let ss = Operands::SparseSparse { a: a.clone(), b: b.clone() };
                let (out, _) = run(KernelId::SvPsV, v, w, &ss);
                let KernelOutput::Sparse(f) = out else { panic!() };
                let want: Vec<f64> = a.densify().iter().zip(b.densify()).map(|(p, q)| p + q).collect();
                assert_eq!(f.densify(), want, "svpsv {w} {v}");
                if v == Variant::Ssr {
                    continue;
                }
                let (out, _) = run(KernelId::SvXsV, v, w, &ss);
                let KernelOutput::Scalar(s) = out else { panic!() };
                assert!(close(s, dot_dense(&a, &b.densify()), 10.0), "svxsv {w} {v}");
                let (out, _) = run(KernelId::SvHsV, v, w, &ss);
                let KernelOutput::Sparse(f) = out else { panic!() };
                let want: Vec<f64> = a.densify().iter().zip(b.densify()).map(|(p, q)| p * q).collect();
                assert_eq!(f.densify(), want, "svhsv {w} {v}");
            }
        }
    }
}

#[test]
fn smxdv_matches_oracle_with_strides() {
    for w in [IndexWidth::W8, IndexWidth::W16, IndexWidth::W32] {
        let a = gen_csr(&SyntheticCsr { nrows: 40, ncols: 64, nnz: 400, seed: 5, width: w }).unwrap();
        let x = gen_dense_vector(64, 6);
        let want = mat_vec(&a, &x);
        for v in Variant::ALL {
            let ops = Operands::MatVec { a: a.clone(), x: DenseVector::new(x.clone(), 2).unwrap(), y_stride: 3 };
            let KernelOutput::Dense(y) = run(KernelId::SmXdV, v, w, &ops).0 else { panic!() };
            for (p, q) in y.iter().zip(&want) {
                assert!(close(*p, *q, 10.0), "{w} {v}: {p} vs {q}");
            }
        }
    }
}
