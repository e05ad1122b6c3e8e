//! Acceptance criteria: measurement drivers and pinned tolerances.
//!
//! [`measure`] produces labelled numbers per criterion; [`check_acceptance`]
//! judges them. The split lets callers store or print raw measurements.

use std::collections::BTreeSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::oracle::{reference, relative_error};
use super::{run_experiment, sweep, BenchError, Experiment, ExperimentId, ResultRow, ORACLE_TOLERANCE};
use crate::formats::{gen_csr, gen_dense_vector, gen_sparse_vector, DenseVector, Fiber, IndexWidth, SyntheticCsr};
use crate::kernels::{prepare, run_kernel, DenseMatrix, ExecOptions, KernelConfig, KernelId, KernelOutput, Operands, Variant};
use crate::machine::{assemble, Instr, MachineParams};
use crate::streamer::{
    coalesce_indices, compare_streams, encode_idx_cfg, mode_code, serialize_indices, Directive, EventKind, IndexWord,
    MatchKind,
};
use crate::timing::Memory;

pub const CRITERIA: [(u8, &str); 11] = [
    (1, "arbitration bound"),
    (2, "baseline calibration"),
    (3, "peak utilization"),
    (4, "sMxdV speedup"),
    (5, "sparse-sparse steady states"),
    (6, "sV+sV range"),
    (7, "comparator correctness"),
    (8, "egress round-trip"),
    (9, "functional oracle"),
    (10, "setup cost"),
    (11, "cluster speedups"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub criterion: u8,
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub criterion: u8,
    pub name: &'static str,
    pub pass: bool,
    /// One `measured vs expected` clause per check.
    pub checks: Vec<String>,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "criterion {:>2} {tag} {}: {}", self.criterion, self.name, self.checks.join("; "))
    }
}

fn m(criterion: u8, label: impl Into<String>, value: f64) -> Measurement {
    Measurement { criterion, label: label.into(), value }
}

/// Lane 1 data throughput of a long indirect gather driven by a counted hardware loop.
pub fn indirect_stream_throughput(w: IndexWidth, n: u64) -> Result<f64, BenchError> {
    let (idx_base, data_base, x_base) = (0x100u64, 0x8000u64, 0x18000u64);
    let mut mem = Memory::new(1 << 17);
    let b = u64::from(w.bytes());
    for i in 0..n {
        mem.poke_uint(idx_base + b * i, b, (i * 7) % 256);
    }
    let cfg = encode_idx_cfg(w, 3, mode_code::INDIRECT, 0);
    let src = format!(
        "li t0, {n}\nscfgw t0, 0, BOUND0\nli t0, 8\nscfgw t0, 0, STRIDE0\nli t0, {x_base}\nscfgw t0, 0, LAUNCH_READ\n\
         li t0, {cfg}\nscfgw t0, 1, IDX_CFG\nli t0, {n}\nscfgw t0, 1, BOUND0\nli t0, {idx_base}\nscfgw t0, 1, IDX_BASE\n\
         li t0, {data_base}\nscfgw t0, 1, LAUNCH_READ\n\
         ssr.enable\nli t1, {n}\nfrep t1, 1, 4, ft3\nfmadd ft3, ft0, ft1, ft3\nfpu.fence\nssr.disable\nhalt"
    );
    let prog = assemble(&src).map_err(crate::kernels::KernelError::from)?;
    let (r, _, _) = crate::machine::run(&prog, MachineParams::default(), mem).map_err(crate::kernels::KernelError::from)?;
    Ok(r.lanes[1].data_throughput())
}

fn slope(f: impl Fn(u64) -> Result<u64, BenchError>, n1: u64, n2: u64) -> Result<f64, BenchError> {
    Ok((f(n2)? as f64 - f(n1)? as f64) / (n2 - n1) as f64)
}

fn cycles(k: KernelId, v: Variant, w: IndexWidth, ops: &Operands) -> Result<u64, BenchError> {
    Ok(run_kernel(k, &KernelConfig::new(v, w), ops, &ExecOptions::default())?.1.cycles)
}

fn dense_cycles(k: KernelId, v: Variant, nnz: u64) -> Result<u64, BenchError> {
    let w = IndexWidth::W16;
    let a = gen_sparse_vector(4096, nnz, 7, w)?;
    let b = DenseVector::unit(gen_dense_vector(4096, 8));
    cycles(k, v, w, &Operands::SparseDense { a, b })
}

fn ss_cycles(v: Variant, a: &[u64], b: &[u64]) -> Result<u64, BenchError> {
    let w = IndexWidth::W16;
    let fa = Fiber::new(vec![1.5; a.len()], a.to_vec(), 1 << 12, w)?;
    let fb = Fiber::new(vec![2.0; b.len()], b.to_vec(), 1 << 12, w)?;
    cycles(KernelId::SvXsV, v, w, &Operands::SparseSparse { a: fa, b: fb })
}

fn speedups(rows: &[ResultRow]) -> Vec<&ResultRow> {
    rows.iter().filter(|r| r.variant == Variant::Sssr).collect()
}

fn grid_at(rows: &[&ResultRow], da: f64, db: f64) -> f64 {
    rows.iter()
        .find(|r| r.density_a == Some(da) && r.density_b == Some(db))
        .map_or(f64::NAN, |r| r.speedup_vs_base)
}

fn grid_measurements(c: u8, id: ExperimentId, parallel: bool) -> Result<Vec<Measurement>, BenchError> {
    let mut e = Experiment::new(id);
    e.sweep.variants = vec![Variant::Base, Variant::Sssr];
    e.parallel = parallel;
    let rows = run_experiment(&e)?;
    let s = speedups(&rows);
    let max = s.iter().map(|r| r.speedup_vs_base).fold(f64::MIN, f64::max);
    let min = s.iter().map(|r| r.speedup_vs_base).fold(f64::MAX, f64::min);
    let (lo, hi) = (e.sweep.densities[0], *e.sweep.densities.last().expect("non-empty grid"));
    let (x, y) = (grid_at(&s, hi, lo), grid_at(&s, lo, hi));
    Ok(vec![
        m(c, "grid max", max),
        m(c, "grid min", min),
        m(c, "grid at 30%/30%", grid_at(&s, hi, hi)),
        m(c, "divergent high", x.max(y)),
        m(c, "divergent low", x.min(y)),
    ])
}

fn random_indices(rng: &mut ChaCha8Rng, universe: u64, max_len: usize) -> Vec<u64> {
    let len = rng.random_range(0..=max_len.min(universe as usize));
    let mut s = BTreeSet::new();
    while s.len() < len {
        s.insert(rng.random_range(0..universe));
    }
    s.into_iter().collect()
}

/// Comparator event streams against set operations, and union conservation.
fn comparator_checks(pairs: usize, seed: u64) -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut event_bad, mut sum_bad) = (0, 0);
    for _ in 0..pairs {
        let universe = rng.random_range(1..=256u64);
        let a = random_indices(&mut rng, universe, 64);
        let b = random_indices(&mut rng, universe, 64);
        let sa: BTreeSet<u64> = a.iter().copied().collect();
        let sb: BTreeSet<u64> = b.iter().copied().collect();
        let inter: Vec<u64> = sa.intersection(&sb).copied().collect();
        let uni: Vec<u64> = sa.union(&sb).copied().collect();
        let ev_i = compare_streams(&a, &b, MatchKind::Intersect).expect("sorted input");
        let ev_u = compare_streams(&a, &b, MatchKind::Union).expect("sorted input");
        let body = |ev: &[crate::streamer::JointStreamEvent]| -> Vec<u64> {
            ev.iter().filter(|e| e.kind != EventKind::Done).map(|e| e.index).collect()
        };
        let kinds_ok = ev_i.iter().all(|e| matches!(e.kind, EventKind::Pair | EventKind::Done))
            && ev_u.iter().all(|e| match e.kind {
                EventKind::Pair => sa.contains(&e.index) && sb.contains(&e.index),
                EventKind::LeftOnly => sa.contains(&e.index) && !sb.contains(&e.index),
                EventKind::RightOnly => !sa.contains(&e.index) && sb.contains(&e.index),
                EventKind::Done => true,
            });
        let done_last = |ev: &[crate::streamer::JointStreamEvent]| {
            ev.last().map(|e| e.kind) == Some(EventKind::Done) && ev.iter().filter(|e| e.kind == EventKind::Done).count() == 1
        };
        if body(&ev_i) != inter || body(&ev_u) != uni || !kinds_ok || !done_last(&ev_i) || !done_last(&ev_u) {
            event_bad += 1;
        }
        // Values follow the directives: emitted values or injected zeros.
        let va: Vec<f64> = (0..a.len()).map(|_| rng.random_range(-4.0..4.0)).collect();
        let vb: Vec<f64> = (0..b.len()).map(|_| rng.random_range(-4.0..4.0)).collect();
        let mut dense = vec![0.0; universe as usize];
        let (mut i, mut j) = (0, 0);
        for e in ev_u.iter().filter(|e| e.kind != EventKind::Done) {
            let take = |d: Directive, k: &mut usize, v: &[f64]| match d {
                Directive::EmitValue => {
                    *k += 1;
                    v[*k - 1]
                }
                _ => 0.0,
            };
            let x = take(e.left, &mut i, &va);
            let y = take(e.right, &mut j, &vb);
            dense[e.index as usize] = x + y;
        }
        let mut want = vec![0.0; universe as usize];
        for (k, &ix) in a.iter().enumerate() {
            want[ix as usize] += va[k];
        }
        for (k, &ix) in b.iter().enumerate() {
            want[ix as usize] += vb[k];
        }
        if dense != want {
            sum_bad += 1;
        }
    }
    (event_bad, sum_bad)
}

fn roundtrip_checks(per_width: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    for w in [IndexWidth::W8, IndexWidth::W16, IndexWidth::W32, IndexWidth::W64] {
        for _ in 0..per_width {
            let len = rng.random_range(0..=100usize);
            let idx: Vec<u64> = (0..len).map(|_| rng.random::<u64>() & w.max_index()).collect();
            let offset = u64::from(w.bytes()) * rng.random_range(0..u64::from(w.per_word()));
            let packed = coalesce_indices(&idx, w, offset);
            let words_needed = packed.last().map_or(0, |p| p.0 as usize + 1);
            let mut words = vec![IndexWord { raw: 0, valid_count: 0 }; words_needed];
            for (k, raw, mask) in packed {
                words[k as usize] = IndexWord { raw, valid_count: mask.count_ones() / w.bytes() };
            }
            if serialize_indices(&words, w, offset, len) != idx {
                bad += 1;
            }
        }
    }
    bad
}

/// Runs SSSR sV+sV on random pairs; counts runs whose egress length differs from the union size.
fn egress_length_checks(per_width: usize, seed: u64, parallel: bool) -> Result<usize, BenchError> {
    let widths = [IndexWidth::W8, IndexWidth::W16, IndexWidth::W32];
    let jobs: Vec<(IndexWidth, u64)> =
        widths.iter().flat_map(|&w| (0..per_width as u64).map(move |k| (w, seed + k))).collect();
    let res = sweep(&jobs, parallel, |&(w, s)| -> Result<bool, BenchError> {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let n = rng.random_range(1..=256u64);
        let a = gen_sparse_vector(n, rng.random_range(0..=n.min(64)), s, w)?;
        let b = gen_sparse_vector(n, rng.random_range(0..=n.min(64)), s ^ 0x5555, w)?;
        let union: BTreeSet<u64> = a.indices().iter().chain(b.indices()).copied().collect();
        let ops = Operands::SparseSparse { a, b };
        let (out, _) = run_kernel(KernelId::SvPsV, &KernelConfig::new(Variant::Sssr, w), &ops, &ExecOptions::default())?;
        Ok(matches!(out, KernelOutput::Sparse(f) if f.nnz() == union.len()))
    });
    let mut bad = 0;
    for r in res {
        bad += usize::from(!r?);
    }
    Ok(bad)
}

/// Random, small, well-formed operands for a kernel.
pub fn random_operands(k: KernelId, w: IndexWidth, seed: u64) -> Result<Operands, BenchError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cap = w.max_index().saturating_add(1).min(200);
    let n = rng.random_range(1..=cap);
    let sparse = |len: u64, s: u64, rng: &mut ChaCha8Rng| gen_sparse_vector(len, rng.random_range(0..=len), s, w);
    let (rows, cols) = (rng.random_range(1..=12usize), rng.random_range(1..=cap.min(64)) as usize);
    let mat = |s: u64, rng: &mut ChaCha8Rng| {
        let nnz = rng.random_range(0..=rows * cols / 2);
        gen_csr(&SyntheticCsr { nrows: rows, ncols: cols, nnz, seed: s, width: w })
    };
    Ok(match k {
        KernelId::SvXdV | KernelId::SvPdV | KernelId::SvHdV => {
            let a = sparse(n, seed, &mut rng)?;
            Operands::SparseDense { a, b: DenseVector::unit(gen_dense_vector(n as usize, seed + 1)) }
        }
        KernelId::SvXsV | KernelId::SvPsV | KernelId::SvHsV => {
            let a = sparse(n, seed, &mut rng)?;
            let b = sparse(n, seed + 1, &mut rng)?;
            Operands::SparseSparse { a, b }
        }
        KernelId::SmXdV => {
            let a = mat(seed, &mut rng)?;
            Operands::MatVec { a, x: DenseVector::unit(gen_dense_vector(cols, seed + 1)), y_stride: 1 }
        }
        KernelId::SmXdM => {
            let a = mat(seed, &mut rng)?;
            let bc = 1usize << rng.random_range(0..3);
            let b = DenseMatrix::new(cols, bc, gen_dense_vector(cols * bc, seed + 1)).expect("sized");
            Operands::MatMat { a, b }
        }
        KernelId::SmXsV => {
            let a = mat(seed, &mut rng)?;
            let b = sparse(cols as u64, seed + 1, &mut rng)?;
            Operands::MatSparseVec { a, b }
        }
        KernelId::SmXsM => {
            let a = mat(seed, &mut rng)?;
            let bc = rng.random_range(1..=4usize);
            let nnz = rng.random_range(0..=cols * bc / 2);
            let b = gen_csr(&SyntheticCsr { nrows: cols, ncols: bc, nnz, seed: seed + 1, width: w })?;
            Operands::MatSparseMat { a, b }
        }
    })
}

/// (instances, structural failures, worst relative error).
fn oracle_checks(per_combo: usize, parallel: bool) -> Result<(usize, usize, f64), BenchError> {
    let mut combos = Vec::new();
    for k in KernelId::ALL {
        for &v in k.variants() {
            for w in [IndexWidth::W8, IndexWidth::W16, IndexWidth::W32] {
                combos.push((k, v, w));
            }
        }
    }
    let res = sweep(&combos, parallel, |&(k, v, w)| -> Result<(usize, f64), BenchError> {
        let (mut bad, mut worst) = (0, 0.0f64);
        for i in 0..per_combo as u64 {
            let ops = random_operands(k, w, 1000 * i + 17)?;
            let (out, _) = run_kernel(k, &KernelConfig::new(v, w), &ops, &ExecOptions::default())?;
            match relative_error(&out, &reference(k, &ops)) {
                Ok(e) => worst = worst.max(e),
                Err(_) => bad += 1,
            }
        }
        Ok((bad, worst))
    });
    let (mut bad, mut worst) = (0, 0.0f64);
    for r in res {
        let (b, e) = r?;
        bad += b;
        worst = worst.max(e);
    }
    Ok((combos.len() * per_combo, bad, worst))
}

/// Cycles from reset until the core reaches `ssr.enable` of a three-lane job.
fn setup_cycles(k: KernelId) -> Result<u64, BenchError> {
    let w = IndexWidth::W16;
    let a = Fiber::new(vec![1.0, 2.0], vec![1, 3], 16, w)?;
    let b = Fiber::new(vec![3.0, 4.0], vec![3, 9], 16, w)?;
    let p = prepare(k, &KernelConfig::new(Variant::Sssr, w), &Operands::SparseSparse { a, b })?;
    let stop = p.program.instrs.iter().position(|i| matches!(i, Instr::SsrEnable)).expect("SSSR program enables streams");
    let mut mach = p.machine(&ExecOptions::default());
    let r = mach.run_until(&p.program, Some(stop)).map_err(crate::kernels::KernelError::from)?;
    Ok(r.cycles)
}

/// Measurements for one criterion.
pub fn measure(criterion: u8, parallel: bool) -> Result<Vec<Measurement>, BenchError> {
    let c = criterion;
    Ok(match c {
        1 => {
            let mut out = Vec::new();
            for w in [IndexWidth::W32, IndexWidth::W16, IndexWidth::W8] {
                out.push(m(c, format!("{w}-bit"), indirect_stream_throughput(w, 4096)?));
            }
            out
        }
        2 => {
            let mut out = Vec::new();
            for (k, v) in [
                (KernelId::SvXdV, Variant::Base),
                (KernelId::SvXdV, Variant::Ssr),
                (KernelId::SvPdV, Variant::Base),
                (KernelId::SvPdV, Variant::Ssr),
            ] {
                out.push(m(c, format!("{k} {v}"), slope(|n| dense_cycles(k, v, n), 200, 400)?));
            }
            out
        }
        3 => {
            let mut e = Experiment::new(ExperimentId::SvXdVUtil);
            e.sweep.widths = vec![IndexWidth::W16, IndexWidth::W32];
            e.sweep.nnz = vec![4096];
            e.sweep.variants = vec![Variant::Sssr];
            e.parallel = parallel;
            run_experiment(&e)?.iter().map(|r| m(c, format!("{}-bit", r.idx_width), r.utilization)).collect()
        }
        4 => {
            let mut e = Experiment::new(ExperimentId::SmXdVSpeedup);
            e.sweep.nnz = vec![50, 100];
            e.sweep.variants = vec![Variant::Base, Variant::Sssr];
            e.parallel = parallel;
            let rows = run_experiment(&e)?;
            speedups(&rows)
                .iter()
                .map(|r| m(c, format!("{}-bit nnz/row={}", r.idx_width, r.nnz / r.rows), r.speedup_vs_base))
                .collect()
        }
        5 => {
            let all: Vec<u64> = (0..400).collect();
            let scan = |v| slope(|n| ss_cycles(v, &all[..n as usize], &[4000]), 100, 300);
            let matched = |v| slope(|n| ss_cycles(v, &all[..n as usize], &all[..n as usize]), 100, 300);
            let mut out = vec![
                m(c, "scan base", scan(Variant::Base)?),
                m(c, "scan sssr", scan(Variant::Sssr)?),
                m(c, "match base", matched(Variant::Base)?),
                m(c, "match sssr", matched(Variant::Sssr)?),
            ];
            out.extend(grid_measurements(c, ExperimentId::SvXsVGrid, parallel)?);
            out
        }
        6 => grid_measurements(c, ExperimentId::SvPsVGrid, parallel)?,
        7 => {
            let pairs = 10_000;
            let (ev, sum) = comparator_checks(pairs, 7);
            vec![m(c, "pairs", pairs as f64), m(c, "event mismatches", ev as f64), m(c, "conservation mismatches", sum as f64)]
        }
        8 => {
            let n = 1000;
            vec![
                m(c, "sequences per width", n as f64),
                m(c, "round-trip mismatches", roundtrip_checks(n, 8) as f64),
                m(c, "sV+sV runs per width", n as f64),
                m(c, "length mismatches", egress_length_checks(n, 8, parallel)? as f64),
            ]
        }
        9 => {
            let (n, bad, worst) = oracle_checks(100, parallel)?;
            vec![m(c, "instances", n as f64), m(c, "structural mismatches", bad as f64), m(c, "max relative error", worst)]
        }
        10 => vec![m(c, "svpsv", setup_cycles(KernelId::SvPsV)? as f64), m(c, "svhsv", setup_cycles(KernelId::SvHsV)? as f64)],
        11 => {
            let mut out = Vec::new();
            for (id, tag) in [(ExperimentId::ClusterSmXdV, "smxdv"), (ExperimentId::ClusterSmXsV, "smxsv")] {
                let mut e = Experiment::new(id);
                e.sweep.variants = vec![Variant::Base, Variant::Sssr];
                e.parallel = parallel;
                let rows = run_experiment(&e)?;
                for r in speedups(&rows) {
                    out.push(m(c, format!("{tag} nnz/row={}", r.nnz / r.rows), r.speedup_vs_base));
                }
            }
            out
        }
        _ => vec![],
    })
}

/// Measurements for every criterion, in order.
pub fn measure_all(parallel: bool) -> Result<Vec<Measurement>, BenchError> {
    let mut out = Vec::new();
    for (c, _) in CRITERIA {
        out.extend(measure(c, parallel)?);
    }
    Ok(out)
}

fn show(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e9 {
        format!("{v:.0}")
    } else if v != 0.0 && v.abs() < 1e-3 {
        format!("{v:.2e}")
    } else {
        format!("{v:.4}")
    }
}

struct Judge<'a> {
    ms: Vec<&'a Measurement>,
    checks: Vec<String>,
    pass: bool,
}

impl<'a> Judge<'a> {
    fn get(&mut self, label: &str) -> f64 {
        match self.ms.iter().find(|m| m.label == label) {
            Some(m) => m.value,
            None => {
                self.pass = false;
                self.checks.push(format!("{label}: missing"));
                f64::NAN
            }
        }
    }

    fn record(&mut self, ok: bool, text: String) {
        self.pass &= ok;
        self.checks.push(text);
    }

    fn within(&mut self, label: &str, want: f64, rel: f64) {
        let v = self.get(label);
        let ok = ((v - want) / want).abs() <= rel;
        self.record(ok, format!("{label} {} vs {} ±{}%", show(v), show(want), rel * 100.0));
    }

    fn band(&mut self, label: &str, lo: f64, hi: f64) {
        let v = self.get(label);
        self.record((lo..=hi).contains(&v), format!("{label} {} in [{lo}, {hi}]", show(v)));
    }

    fn at_least(&mut self, label: &str, lo: f64) {
        let v = self.get(label);
        self.record(v >= lo, format!("{label} {} >= {}", show(v), show(lo)));
    }

    fn at_most(&mut self, label: &str, hi: f64) {
        let v = self.get(label);
        self.record(v <= hi, format!("{label} {} <= {}", show(v), show(hi)));
    }

    fn exactly(&mut self, label: &str, want: f64) {
        let v = self.get(label);
        self.record(v == want, format!("{label} {} == {}", show(v), show(want)));
    }
}

fn judge(c: u8, j: &mut Judge) {
    match c {
        1 => {
            for (label, n) in [("32-bit", 2.0), ("16-bit", 4.0), ("8-bit", 8.0)] {
                j.within(label, n / (n + 1.0), 0.01);
            }
        }
        2 => {
            for (label, want) in [("svxdv base", 9.0), ("svxdv ssr", 7.0), ("svpdv base", 10.0), ("svpdv ssr", 9.0)] {
                j.exactly(label, want);
            }
        }
        3 => {
            j.at_least("16-bit", 0.78);
            j.at_least("32-bit", 0.65);
        }
        4 => {
            let labels: Vec<String> = j.ms.iter().map(|m| m.label.clone()).collect();
            if labels.is_empty() {
                j.record(false, "no sweep points".into());
            }
            for l in labels {
                if l.starts_with("32-bit") {
                    j.band(&l, 6.3, 7.0);
                } else {
                    j.band(&l, 5.3, 5.9);
                }
            }
        }
        5 => {
            j.within("scan base", 5.0, 0.004);
            j.within("scan sssr", 1.0, 0.02);
            j.within("match base", 18.0, 0.001);
            j.within("match sssr", 1.25, 0.016);
            j.at_most("grid max", 14.4);
            j.band("grid at 30%/30%", 7.0, 8.4);
            let (max, at) = (j.get("grid max"), j.get("grid at 30%/30%"));
            j.record(max == at, format!("grid max {} located at 30%/30%", show(max)));
            j.within("divergent high", 5.0, 0.10);
            j.within("divergent low", 5.0, 0.10);
        }
        6 => {
            j.at_least("grid min", 4.8);
            j.at_most("grid max", 10.8);
            j.within("grid max", 9.8, 0.10);
            j.within("divergent high", 9.0, 0.10);
            j.within("divergent low", 8.2, 0.10);
        }
        7 => {
            j.exactly("pairs", 10_000.0);
            j.exactly("event mismatches", 0.0);
            j.exactly("conservation mismatches", 0.0);
        }
        8 => {
            j.at_least("sequences per width", 1000.0);
            j.exactly("round-trip mismatches", 0.0);
            j.exactly("length mismatches", 0.0);
        }
        9 => {
            j.at_least("instances", 100.0 * 26.0 * 3.0);
            j.exactly("structural mismatches", 0.0);
            j.at_most("max relative error", ORACLE_TOLERANCE);
        }
        10 => {
            j.at_most("svpsv", 10.0);
            j.at_most("svhsv", 10.0);
        }
        11 => {
            let dv: Vec<(usize, String)> = j
                .ms
                .iter()
                .filter_map(|m| m.label.strip_prefix("smxdv nnz/row=").map(|n| (n.parse().unwrap_or(0), m.label.clone())))
                .collect();
            for (n, l) in &dv {
                if *n > 30 {
                    j.at_least(l, 4.0);
                }
            }
            let peak = |j: &Judge, p: &str| j.ms.iter().filter(|m| m.label.starts_with(p)).map(|m| m.value).fold(f64::NAN, f64::max);
            let (pdv, psv) = (peak(j, "smxdv"), peak(j, "smxsv"));
            j.record((4.5..=5.5).contains(&pdv), format!("sMxdV peak {} in [4.5, 5.5]", show(pdv)));
            j.record((5.3..=6.5).contains(&psv), format!("sMxsV peak {} in [5.3, 6.5]", show(psv)));
        }
        _ => j.record(false, "unknown criterion".into()),
    }
}

/// Judges every criterion that has measurements.
pub fn check_acceptance(ms: &[Measurement]) -> Result<Vec<Verdict>, BenchError> {
    if ms.is_empty() {
        return Err(BenchError::NoData);
    }
    let present: BTreeSet<u8> = ms.iter().map(|m| m.criterion).collect();
    Ok(present
        .into_iter()
        .map(|c| {
            let name = CRITERIA.iter().find(|(k, _)| *k == c).map_or("unknown", |(_, n)| n);
            let mut j = Judge { ms: ms.iter().filter(|m| m.criterion == c).collect(), checks: vec![], pass: true };
            judge(c, &mut j);
            Verdict { criterion: c, name, pass: j.pass, checks: j.checks }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_results_are_an_error() {
        assert!(matches!(check_acceptance(&[]), Err(BenchError::NoData)));
        assert_eq!(BenchError::NoData.to_string(), "no data");
    }

    #[test]
    fn out_of_band_value_names_the_criterion() {
        let ms = [m(10, "svpsv", 12.0), m(10, "svhsv", 9.0)];
        let v = check_acceptance(&ms).unwrap();
        assert_eq!(v.len(), 1);
        assert!(!v[0].pass);
        assert!(v[0].to_string().contains("setup cost"));
        let ok = check_acceptance(&[m(10, "svpsv", 10.0), m(10, "svhsv", 10.0)]).unwrap();
        assert!(ok[0].pass);
    }

    #[test]
    fn missing_label_fails() {
        let v = check_acceptance(&[m(3, "16-bit", 0.9)]).unwrap();
        assert!(!v[0].pass);
    }
}
