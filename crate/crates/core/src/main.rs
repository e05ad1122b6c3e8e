use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ssr_sim::bench::{
    check_acceptance, measure, run_experiment, width_from_bits, write_csv_file, BenchConfig, BenchError, Experiment,
    ExperimentId, ResultRow, CRITERIA,
};
use ssr_sim::kernels::Variant;
use ssr_sim::timing::TimingMode;

#[derive(Parser)]
#[command(name = "ssr-sim", version, about = "Sparse stream semantic register simulator and benchmark harness")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one experiment sweep and write <out>/<experiment>.csv.
    Run(RunArgs),
    /// Run the acceptance suite; exits nonzero if any criterion fails.
    Accept {
        /// Also write the report and raw measurements here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run sweep points one at a time.
        #[arg(long)]
        sequential: bool,
    },
    /// List experiment names.
    List,
}

#[derive(clap::Args)]
struct RunArgs {
    /// SvXdV_util, SvPdV_util, SmXdV_speedup, SvXsV_grid, SvPsV_grid,
    /// SmXsV_speedup, Cluster_SmXdV or Cluster_SmXsV.
    experiment: String,
    /// TOML config with [sweep], [machine], [timing], [kernel] and [cluster] sections.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Index widths in bits (8, 16, 32), comma separated.
    #[arg(long, value_delimiter = ',')]
    idx_width: Vec<u32>,
    /// Variants to report; BASE always runs for the speedup column.
    #[arg(long, value_delimiter = ',')]
    variant: Vec<Variant>,
    /// Matrix Market file; repeat for several.
    #[arg(long)]
    matrix: Vec<PathBuf>,
    /// Vector nonzeros, or average nonzeros per row for synthetic matrices.
    #[arg(long, value_delimiter = ',')]
    nnz: Vec<usize>,
    /// Density grid (fractions in (0, 1]).
    #[arg(long, value_delimiter = ',')]
    density: Vec<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    timing: Option<TimingMode>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Run sweep points one at a time.
    #[arg(long)]
    sequential: bool,
}

fn experiment(args: &RunArgs) -> Result<Experiment, BenchError> {
    let id: ExperimentId = args.experiment.parse()?;
    let cfg = match &args.config {
        Some(p) => BenchConfig::load(p)?,
        None => BenchConfig::default(),
    };
    let mut e = Experiment::from_config(id, &cfg)?;
    if !args.idx_width.is_empty() {
        e.sweep.widths = args.idx_width.iter().map(|&b| width_from_bits(b)).collect::<Result<_, _>>()?;
    }
    if !args.variant.is_empty() {
        e.sweep.variants = args.variant.clone();
    }
    if !args.matrix.is_empty() {
        e.sweep.matrices = args.matrix.clone();
    }
    if !args.nnz.is_empty() {
        e.sweep.nnz = args.nnz.clone();
    }
    if !args.density.is_empty() {
        e.sweep.densities = args.density.clone();
    }
    if let Some(s) = args.seed {
        e.sweep.seed = s;
    }
    if let Some(t) = args.timing {
        e.exec.timing = t;
    }
    if args.sequential {
        e.parallel = false;
    }
    Ok(e)
}

fn summarize(rows: &[ResultRow]) {
    println!(
        "{:<6} {:>5} {:<20} {:>8} {:>10} {:>10} {:>12} {:>7} {:>8}",
        "var", "width", "matrix", "nnz", "density_a", "density_b", "cycles", "util", "speedup"
    );
    let opt = |v: Option<f64>| v.map_or(String::from("-"), |d| format!("{d}"));
    for r in rows {
        println!(
            "{:<6} {:>5} {:<20} {:>8} {:>10} {:>10} {:>12} {:>7.3} {:>8.3}",
            r.variant.name(),
            r.idx_width,
            if r.matrix.is_empty() { "-" } else { &r.matrix },
            r.nnz,
            opt(r.density_a),
            opt(r.density_b),
            r.cycles,
            r.utilization,
            r.speedup_vs_base
        );
    }
}

fn run(args: &RunArgs) -> Result<(), BenchError> {
    let e = experiment(args)?;
    let rows = run_experiment(&e)?;
    let path = args.out.join(format!("{}.csv", e.id));
    write_csv_file(&rows, &path)?;
    summarize(&rows);
    println!("wrote {} rows to {}", rows.len(), path.display());
    Ok(())
}

fn accept(out: Option<&PathBuf>, parallel: bool) -> Result<bool, BenchError> {
    let mut lines = Vec::new();
    let mut all = Vec::new();
    let mut ok = true;
    for (c, name) in CRITERIA {
        match measure(c, parallel).and_then(|ms| check_acceptance(&ms).map(|v| (ms, v))) {
            Ok((ms, verdicts)) => {
                all.extend(ms);
                for v in verdicts {
                    ok &= v.pass;
                    lines.push(v.to_string());
                }
            }
            Err(e) => {
                ok = false;
                lines.push(format!("criterion {c:>2} FAIL {name}: {e}"));
            }
        }
        println!("{}", lines.last().expect("one line per criterion"));
    }
    if let Some(dir) = out {
        let io = |source| BenchError::Io { path: dir.display().to_string(), source };
        std::fs::create_dir_all(dir).map_err(io)?;
        std::fs::write(dir.join("acceptance.txt"), lines.join("\n") + "\n").map_err(io)?;
        let mut w = csv::Writer::from_path(dir.join("measurements.csv"))?;
        w.write_record(["criterion", "label", "value"])?;
        for m in &all {
            w.write_record([m.criterion.to_string(), m.label.clone(), ssr_sim::bench::sig9(m.value)])?;
        }
        w.flush().map_err(io)?;
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Cmd::Run(args) => run(args).map(|()| true),
        Cmd::Accept { out, sequential } => accept(out.as_ref(), !sequential),
        Cmd::List => {
            for id in ExperimentId::ALL {
                println!("{id}");
            }
            Ok(true)
        }
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
