//! `rgpso` command line.

use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde::Serialize;

use super::chain_opt::optimize_chain;
use super::config::{Overrides, RunConfig};
use super::gradcheck::{gradcheck, write_gradcheck_csv};
use super::histogram::{histogram_gbest, write_histogram_csv};
use super::sweep::{run_sweep, write_raw_csv, write_sweep_csv};
use super::HarnessError;
use crate::inventory::{simulate_chain, write_kpi_json, write_stocks_csv, ChainObjective, KpiSummary};
use crate::swarm::{run, tuning_procedure, write_trace_csv, PsoConfig, TuningOutcome};

#[derive(Debug, Parser)]
#[command(name = "rgpso", version, about = "Regional-gradient particle swarm experiments")]
struct Cli {
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Replicate count override for sweeps and chain simulations.
    #[arg(long, global = true)]
    mc: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte-Carlo sweep over the gradient weight.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Single optimization run on a benchmark or the inventory chain.
    Optimize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte-Carlo simulation of the chain at its configured reorder points.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// WLS gradients against finite differences on local archives.
    Gradcheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Staged tuning of w, c1, c2, c3.
    Tune {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("rgpso: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<(), HarnessError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .map_err(|e| HarnessError::Runtime(e.to_string()))?;
    let ov = Overrides {
        seed: cli.seed,
        mc: cli.mc,
    };
    pool.install(|| match &cli.command {
        Command::Sweep { config, out } => sweep(&RunConfig::load(config, ov)?, out),
        Command::Optimize { config, out } => optimize(&RunConfig::load(config, ov)?, out),
        Command::Simulate { config, out } => simulate(&RunConfig::load(config, ov)?, out),
        Command::Gradcheck { config, out } => check(&RunConfig::load(config, ov)?, out.as_deref()),
        Command::Tune { config, out } => tune(&RunConfig::load(config, ov)?, out),
    })
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<fs::File>, HarnessError> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(fs::File::create(dir.join(name))?))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), HarnessError> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| HarnessError::Runtime(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn single_objective(cfg: &RunConfig) -> Result<String, HarnessError> {
    match cfg.objective_names().as_slice() {
        [one] => Ok(one.clone()),
        [] => Err(HarnessError::Config("key `objective` is required".into())),
        _ => Err(HarnessError::Config("this command takes a single objective".into())),
    }
}

fn sweep(cfg: &RunConfig, out: &Path) -> Result<(), HarnessError> {
    let names = cfg.objective_names();
    if names.is_empty() {
        return Err(HarnessError::Config("key `objective` is required".into()));
    }
    let master = cfg.master_seed();
    let s = &cfg.sweep;
    let mut rows = Vec::new();
    let mut raw = Vec::new();
    for name in &names {
        let f = cfg.build_objective(name, master)?;
        let res = run_sweep(f.as_ref(), name, &cfg.pso, &s.weights, s.mc_runs, master)?;
        for (wi, c3) in s.weights.iter().enumerate() {
            let values = res.gbest_values(wi, s.mc_runs);
            let h = histogram_gbest(&values, s.bins)
                .ok_or_else(|| HarnessError::Runtime(format!("{name} c3={c3}: non-finite gbest values")))?;
            let file = if names.len() == 1 {
                format!("hist_{c3}.csv")
            } else {
                format!("hist_{name}_{c3}.csv")
            };
            let mut w = create(out, &file)?;
            write_histogram_csv(&h, &mut w)?;
            w.flush()?;
        }
        for r in &res.rows {
            println!(
                "{:<16} c3={:<5} mean_gbest={:.5e} std={:.5e} mean_pbest={:.5e} iters={:.5e} found_at={:.5e}",
                r.objective, r.c3, r.mean_gbest, r.std_gbest, r.mean_of_mean_pbest, r.mean_iters_total, r.mean_iter_gbest_found
            );
        }
        rows.extend(res.rows);
        raw.extend(res.raw);
    }
    let mut w = create(out, "sweep.csv")?;
    write_sweep_csv(&rows, &mut w)?;
    w.flush()?;
    let mut w = create(out, "runs_raw.csv")?;
    write_raw_csv(&raw, &mut w)?;
    w.flush()?;
    write_json(out, "config.json", cfg)
}

#[derive(Serialize)]
struct BenchmarkReport<'a> {
    config: &'a RunConfig,
    objective: &'a str,
    gbest_x: &'a [f64],
    gbest_f: f64,
    iterations_done: usize,
    gbest_found_at: usize,
    mean_pbest_f: f64,
    evaluations: usize,
}

#[derive(Serialize)]
struct ChainReport<'a> {
    config: &'a RunConfig,
    objective: &'a str,
    result: &'a super::ChainOptimum,
}

fn optimize(cfg: &RunConfig, out: &Path) -> Result<(), HarnessError> {
    let name = single_objective(cfg)?;
    let master = cfg.master_seed();
    let pso = PsoConfig {
        seed: master,
        ..cfg.pso.clone()
    };
    let f = cfg.build_objective(&name, master)?;

    if name == ChainObjective::NAME {
        let chain = cfg.require_chain()?;
        let opt = optimize_chain(chain, f.spec().bounds.clone(), &pso, master)?;
        let mut w = create(out, "trace.csv")?;
        write_trace_csv(&opt.run.trace, &mut w)?;
        w.flush()?;
        let best_chain = chain
            .with_reorder_points(&opt.best_r)
            .map_err(|e| HarnessError::Runtime(e.to_string()))?;
        let mut w = create(out, "stocks.csv")?;
        write_stocks_csv(&opt.simulation, &mut w)?;
        w.flush()?;
        let mut w = create(out, "kpi.json")?;
        write_kpi_json(&KpiSummary::new(&best_chain, &opt.simulation, master), &mut w)?;
        w.flush()?;
        println!(
            "best R = {:?}, objective {:.5e} (initial {:.5e}), SL {:?} (initial {:?})",
            opt.best_r, opt.objective, opt.initial_objective, opt.service_level, opt.initial_service_level
        );
        return write_json(
            out,
            "result.json",
            &ChainReport {
                config: cfg,
                objective: &name,
                result: &opt,
            },
        );
    }

    let r = run(f.as_ref(), &pso).map_err(|e| HarnessError::Runtime(e.to_string()))?;
    let mut w = create(out, "trace.csv")?;
    write_trace_csv(&r.trace, &mut w)?;
    w.flush()?;
    let mut w = create(out, "archive.csv")?;
    r.archive.write_csv(&mut w).map_err(|e| HarnessError::Runtime(e.to_string()))?;
    w.flush()?;
    println!(
        "{name}: gbest_f {:.5e} at {:?} after {} iterations (found at {})",
        r.gbest_f, r.gbest_x, r.iterations_done, r.gbest_found_at
    );
    write_json(
        out,
        "result.json",
        &BenchmarkReport {
            config: cfg,
            objective: &name,
            gbest_x: &r.gbest_x,
            gbest_f: r.gbest_f,
            iterations_done: r.iterations_done,
            gbest_found_at: r.gbest_found_at,
            mean_pbest_f: r.mean_pbest_f,
            evaluations: r.evaluations,
        },
    )
}

fn simulate(cfg: &RunConfig, out: &Path) -> Result<(), HarnessError> {
    let chain = cfg.require_chain()?;
    let seed = cfg.master_seed();
    let r = simulate_chain(chain, seed).map_err(|e| HarnessError::Runtime(e.to_string()))?;
    let mut w = create(out, "stocks.csv")?;
    write_stocks_csv(&r, &mut w)?;
    w.flush()?;
    let mut w = create(out, "kpi.json")?;
    write_kpi_json(&KpiSummary::new(chain, &r, seed), &mut w)?;
    w.flush()?;
    println!(
        "objective {:.5e}, service levels {:?}, average stock {:?}",
        r.objective, r.service_level, r.avg_stock
    );
    Ok(())
}

fn check(cfg: &RunConfig, out: Option<&Path>) -> Result<(), HarnessError> {
    let names = cfg.objective_names();
    if names.is_empty() {
        return Err(HarnessError::Config("key `objective` is required".into()));
    }
    let master = cfg.master_seed();
    for name in &names {
        if name == ChainObjective::NAME {
            return Err(HarnessError::Config("gradcheck runs on benchmark objectives only".into()));
        }
        let f = cfg.build_objective(name, master)?;
        let rows = gradcheck(f.as_ref(), &cfg.gradcheck, master)?;
        let min = rows.iter().map(|r| r.cosine).fold(f64::INFINITY, f64::min);
        let mean = rows.iter().map(|r| r.cosine).sum::<f64>() / rows.len() as f64;
        let agree = rows.iter().filter(|r| r.cosine >= 0.99).count();
        println!(
            "{name}: cosine(WLS, FD) min {min:.5e} mean {mean:.5e}; {agree}/{} points >= 0.99",
            rows.len()
        );
        if let Some(dir) = out {
            let file = if names.len() == 1 {
                "gradcheck.csv".to_string()
            } else {
                format!("gradcheck_{name}.csv")
            };
            let mut w = create(dir, &file)?;
            write_gradcheck_csv(&rows, &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn tune(cfg: &RunConfig, out: &Path) -> Result<(), HarnessError> {
    let name = single_objective(cfg)?;
    let master = cfg.master_seed();
    let f = cfg.build_objective(&name, master)?;
    let base = PsoConfig {
        seed: master,
        ..cfg.pso.clone()
    };
    let outcome: TuningOutcome =
        tuning_procedure(f.as_ref(), &base, &cfg.tuning).map_err(|e| HarnessError::Runtime(e.to_string()))?;
    let mut w = create(out, "tuning.csv")?;
    writeln!(w, "stage,w,c1,c2,c3,score,oscillation,oscillating")?;
    for t in &outcome.trials {
        let stage = serde_json::to_value(t.stage).map_err(|e| HarnessError::Runtime(e.to_string()))?;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            stage.as_str().unwrap_or_default(),
            t.w,
            t.c1,
            t.c2,
            t.c3,
            t.score,
            t.oscillation,
            t.oscillating
        )?;
    }
    w.flush()?;
    let c = &outcome.config;
    println!("{name}: w={} c1={} c2={} c3={}", c.w, c.c1, c.c2, c.c3);
    write_json(out, "tuned.json", &outcome)
}
