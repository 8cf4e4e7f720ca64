use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sos_sched::harness::{
    render_csv, run_experiment, run_page_experiment, run_sweep, write_csv, ExperimentConfig, Mode, SweepAxis,
    Workload,
};
use sos_sched::simulator::SchedulerKind;
use sos_sched::Error;

#[derive(Parser)]
#[command(name = "sos", about = "Multipath object scheduling experiments", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one fixed-size experiment.
    Run(Common),
    /// Run an experiment once per value of one axis.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// sigma, object_size or gamma.
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Path whose standard deviation a sigma sweep varies (default: last).
        #[arg(long)]
        path: Option<usize>,
    },
    /// Load pages under FIFO and priority ordering.
    Page {
        #[command(flatten)]
        common: Common,
        /// Page spec file, overriding the config's `page`.
        #[arg(long)]
        page: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    baseline: Option<String>,
    /// oracle or estimated.
    #[arg(long)]
    mode: Option<String>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(b) = &self.baseline {
            cfg.baseline = Some(b.parse::<SchedulerKind>()?);
        }
        if let Some(m) = &self.mode {
            cfg.mode = m.parse::<Mode>()?;
        }
        Ok(cfg)
    }
}

fn emit(rows: &[sos_sched::harness::MetricsRow], out: &Option<PathBuf>) -> Result<(), Error> {
    match out {
        Some(p) => write_csv(rows, p),
        None => {
            print!("{}", render_csv(rows));
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run(common) => {
            let cfg = common.load()?;
            if !matches!(cfg.workload, Workload::Fixed { .. }) {
                return Err(Error::Usage("`run` needs object_size; use `page` for page workloads".into()));
            }
            emit(&[run_experiment(&cfg)?], &common.out)
        }
        Command::Sweep {
            common,
            axis,
            values,
            path,
        } => {
            let cfg = common.load()?;
            let axis = SweepAxis::parse(&axis, path.unwrap_or(cfg.paths.len().saturating_sub(1)))?;
            emit(&run_sweep(&cfg, axis, &values)?, &common.out)
        }
        Command::Page { common, page } => {
            let mut cfg = common.load()?;
            if let Some(p) = page {
                cfg.workload = Workload::Page(p);
            }
            emit(&run_page_experiment(&cfg)?, &common.out)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sos: {e}");
            match e {
                Error::Usage(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
