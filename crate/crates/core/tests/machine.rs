use ssr_sim::formats::IndexWidth;
use ssr_sim::machine::{assemble, run, FReg, Instr, MachineParams, SimError, Stagger};
use ssr_sim::streamer::{encode_idx_cfg, mode_code};
use ssr_sim::timing::Memory;

fn mem() -> Memory {
    Memory::new(1 << 16)
}

fn go(src: &str, m: Memory) -> Result<(ssr_sim::machine::SimReport, Memory, ssr_sim::machine::Cpu), SimError> {
    run(&assemble(src).unwrap(), MachineParams::default(), m)
}

#[test]
fn halt_only_takes_one_cycle() {
    let (r, _, _) = go("halt", mem()).unwrap();
    assert_eq!((r.cycles, r.fpu_busy_cycles), (1, 0));
    assert_eq!(r.stalls.total() + r.issue_cycles, r.cycles);
}

#[test]
fn pipelined_fmadds_issue_back_to_back() {
    let (r, _, _) = go("fmadd f3, f4, f5, f3\nfmadd f6, f4, f5, f6\nfmadd f7, f4, f5, f7\nhalt", mem()).unwrap();
    // Three issues, then halt waits for the last result (latency 3).
    assert_eq!(r.fpu_useful_ops, 3);
    assert_eq!(r.cycles, 3 + 2 + 1);
    assert_eq!(r.stalls.fence_drain, 2);
}

#[test]
fn fence_after_frep_drains_pipeline() {
    // frep + 1 body instr, then N=8 issues; the fence clears when the last result lands.
    let src = "li t0, 8\nfrep t0, 1, 4, ft3\nfmadd ft3, f8, f9, ft3\nfpu.fence\nhalt";
    let (r, _, cpu) = go(src, mem()).unwrap();
    assert_eq!(r.fpu_useful_ops, 8);
    // li, frep and the body fill take cycles 0..=2; iteration k issues at 3 + k.
    let last_issue = 3 + 7;
    let lat = MachineParams::default().fpu_latency;
    // The fence retires when the last result lands, then halt.
    assert_eq!(r.cycles, last_issue + lat + 2);
    assert_eq!(cpu.f[3], 0.0);
}

#[test]
fn stagger_rotates_accumulators() {
    let s = Stagger { count: 2, base: 3 };
    let body = Instr::Fmadd { rd: FReg(3), rs1: FReg(0), rs2: FReg(1), rs3: FReg(3) };
    let targets: Vec<_> = (0..4).map(|i| body.staggered(s, i).fp_dest().unwrap().0).collect();
    assert_eq!(targets, vec![3, 4, 3, 4]);
}

#[test]
fn counted_frep_with_zero_iterations_issues_nothing() {
    let (r, _, _) = go("frep zero, 1\nfmadd ft3, ft4, ft5, ft3\nhalt", mem()).unwrap();
    assert_eq!(r.fpu_busy_cycles, 0);
}

#[test]
fn ssr_disabled_registers_are_plain() {
    let mut m = mem();
    m.poke_f64(0x100, 2.5);
    let (_, m, cpu) = go("li a0, 0x100\nfld ft0, 0(a0)\nfadd ft1, ft0, ft0\nfsd ft1, 8(a0)\nhalt", m).unwrap();
    assert_eq!(m.peek_f64(0x108), 5.0);
    assert_eq!(cpu.f[1], 5.0);
}

#[test]
fn read_without_job_faults() {
    let e = go("ssr.enable\nfadd ft3, ft0, ft4\nhalt", mem()).unwrap_err();
    assert!(matches!(e, SimError::StreamAccess { lane: 0, .. }), "{e:?}");
}

#[test]
fn frep_s_without_match_faults() {
    let e = go("ssr.enable\nfrep.s 1\nfadd ft2, ft0, ft1\nhalt", mem()).unwrap_err();
    assert_eq!(e, SimError::FrepNoMatch);
}

#[test]
fn watchdog_catches_infinite_loops() {
    let p = assemble("l: j l\nhalt").unwrap();
    let params = MachineParams { watchdog: 1000, ..Default::default() };
    assert_eq!(run(&p, params, mem()).unwrap_err(), SimError::Timeout(1000));
}

fn put_indices(m: &mut Memory, base: u64, idx: &[u64], w: IndexWidth) {
    for (k, &i) in idx.iter().enumerate() {
        m.poke_uint(base + k as u64 * u64::from(w.bytes()), u64::from(w.bytes()), i);
    }
}

/// Union of two fibers through the full streamer: lane 2 egress, lanes 0/1 union.
fn union_program(na: usize, nb: usize, w: IndexWidth) -> String {
    let cfg = encode_idx_cfg(w, 3, mode_code::UNION, 4);
    format!(
        "li t0, {cfg}\nscfgw t0, 31, IDX_CFG\n\
         li t0, {na}\nscfgw t0, 0, BOUND0\nli t0, 0x1000\nscfgw t0, 0, IDX_BASE\n\
         li t0, {nb}\nscfgw t0, 1, BOUND0\nli t0, 0x2000\nscfgw t0, 1, IDX_BASE\n\
         li t0, 0x5000\nscfgw t0, 2, IDX_BASE\n\
         li t0, 0x6000\nscfgw t0, 2, LAUNCH_WRITE\n\
         li t0, 0x3000\nscfgw t0, 0, LAUNCH_READ\nli t0, 0x4000\nscfgw t0, 1, LAUNCH_READ\n\
         ssr.enable\nfrep.s 1\nfadd ft2, ft0, ft1\nfpu.fence\nscfgr a0, 2, LENGTH\nssr.disable\nhalt"
    )
}

#[test]
fn frep_s_over_union_issues_once_per_element() {
    let w = IndexWidth::W16;
    let mut m = mem();
    put_indices(&mut m, 0x1000, &[1, 3], w);
    put_indices(&mut m, 0x2000, &[3, 9], w);
    for (k, v) in [1.0, 2.0].iter().enumerate() {
        m.poke_f64(0x3000 + 8 * k as u64, *v);
    }
    for (k, v) in [10.0, 20.0].iter().enumerate() {
        m.poke_f64(0x4000 + 8 * k as u64, *v);
    }
    let (r, m, cpu) = go(&union_program(2, 2, w), m).unwrap();
    assert_eq!(r.fpu_useful_ops, 3);
    assert_eq!(r.frep_s_iterations, 3);
    assert_eq!(cpu.x[10], 3);
    let vals: Vec<f64> = (0..3).map(|k| m.peek_f64(0x6000 + 8 * k)).collect();
    assert_eq!(vals, vec![1.0, 12.0, 20.0]);
    let idx: Vec<u64> = (0..3).map(|k| m.peek_uint(0x5000 + 2 * k, 2)).collect();
    assert_eq!(idx, vec![1, 3, 9]);
}

#[test]
fn empty_union_writes_nothing() {
    let (r, m, cpu) = go(&union_program(0, 0, IndexWidth::W32), mem()).unwrap();
    assert_eq!(r.fpu_useful_ops, 0);
    assert_eq!(cpu.x[10], 0);
    assert_eq!(m.peek_uint(0x5000, 8), 0);
}

/// Indirect gather on lane 1 driven by a counted frep; returns lane 1 throughput.
fn indirect_throughput(w: IndexWidth, n: u64) -> f64 {
    let mut m = Memory::new(1 << 17);
    let idx: Vec<u64> = (0..n).map(|i| (i * 7) % 256).collect();
    put_indices(&mut m, 0x100, &idx, w);
    let cfg = encode_idx_cfg(w, 3, mode_code::INDIRECT, 0);
    let src = format!(
        "li t0, {n}\nscfgw t0, 0, BOUND0\nli t0, 8\nscfgw t0, 0, STRIDE0\nli t0, 0x8000\nscfgw t0, 0, LAUNCH_READ\n\
         li t0, {cfg}\nscfgw t0, 1, IDX_CFG\nli t0, {n}\nscfgw t0, 1, BOUND0\nli t0, 0x100\nscfgw t0, 1, IDX_BASE\n\
         li t0, 0x18000\nscfgw t0, 1, LAUNCH_READ\n\
         ssr.enable\nli t1, {n}\nfrep t1, 1, 4, ft3\nfmadd ft3, ft0, ft1, ft3\nfpu.fence\nssr.disable\nhalt"
    );
    let (r, _, _) = go(&src, m).unwrap();
    assert_eq!(r.fpu_useful_ops, n);
    r.lanes[1].data_throughput()
}

#[test]
fn indirect_throughput_meets_arbitration_bound() {
    for (w, n) in [(IndexWidth::W32, 2.0), (IndexWidth::W16, 4.0), (IndexWidth::W8, 8.0), (IndexWidth::W64, 1.0)] {
        let t = indirect_throughput(w, 4096);
        let bound = n / (n + 1.0);
        assert!((t - bound).abs() / bound < 0.01, "{w}: {t} vs {bound}");
    }
}
