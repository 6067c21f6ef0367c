use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use satcap::experiment::{run_experiment, ExperimentConfig};
use satcap::linkgap::{gap_upper_bound, gap_vs_sir, log_space, LinkBudgetParams};
use satcap::metrics::{matching_ratio, spectral_efficiency};
use satcap::p1::{allocate_p1, allocate_uniform_baseline, AllocationOutcome, P1Problem};
use satcap::p2::{objective_value, oracle_numeric, solve_fairness, solve_nth_order, Objective, P2Problem};
use satcap::phy::EfficiencyModel;
use satcap::scenario::Scenario;
use satcap::sinr::{check_duality, DualityInput};
use satcap::{Error, Result};

#[derive(Parser)]
#[command(name = "satcap", version, about = "Multibeam satellite resource allocation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Efficiency model.
    #[arg(long, global = true, value_enum, default_value_t = ModelArg::Shannon)]
    model: ModelArg,
    /// Output directory; results go to stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Shannon,
    Dvbs2,
}

#[derive(Clone, Copy, ValueEnum)]
enum CostArg {
    Nth,
    Fair,
}

#[derive(Subcommand)]
enum Command {
    /// Iterative carrier allocation.
    AllocateP1 {
        scenario: PathBuf,
        #[arg(long, default_value_t = 1000)]
        max_iterations: usize,
    },
    /// Closed-form interference-free slot allocation.
    AllocateP2 {
        scenario: PathBuf,
        #[arg(long, value_enum)]
        cost: CostArg,
        #[arg(long, default_value_t = 2)]
        order: u32,
        /// Cross-check against the numeric oracle.
        #[arg(long)]
        verify: bool,
    },
    /// Regular 7-color reuse at saturation.
    Baseline { scenario: PathBuf },
    /// Evaluate one P1 mask in both domains.
    DualityCheck { frequency: PathBuf, time: PathBuf },
    /// Spectral-efficiency gap between backoffs `x1` and `x2`.
    Gap {
        #[arg(long)]
        x1: f64,
        #[arg(long)]
        x2: f64,
        /// Link budget TOML.
        #[arg(long)]
        link: PathBuf,
        /// Sweep the interference ratio y over 1..1e9.
        #[arg(long)]
        sweep_y: bool,
    },
    /// Run an experiment config.
    Sweep { config: PathBuf },
}

struct Output {
    dir: Option<PathBuf>,
}

impl Output {
    fn new(dir: Option<PathBuf>) -> Result<Self> {
        if let Some(d) = &dir {
            fs::create_dir_all(d).map_err(|e| Error::Io {
                path: d.clone(),
                source: e,
            })?;
        }
        Ok(Output { dir })
    }

    /// Writer for `name`, or stdout.
    fn writer(&self, name: &str) -> Result<Box<dyn Write>> {
        match &self.dir {
            Some(d) => {
                let path = d.join(name);
                let f = File::create(&path).map_err(|e| Error::Io { path, source: e })?;
                Ok(Box::new(BufWriter::new(f)))
            }
            None => Ok(Box::new(io::stdout().lock())),
        }
    }

    fn has_dir(&self) -> bool {
        self.dir.is_some()
    }

    fn json(&self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut w = self.writer(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w).and_then(|_| w.flush()).map_err(|e| Error::Io {
            path: name.into(),
            source: e,
        })
    }
}

#[derive(Serialize)]
struct OutcomeSummary<'a> {
    allocator: &'a str,
    model: &'a str,
    k: usize,
    iterations: usize,
    termination: satcap::p1::Termination,
    power_used_w: f64,
    total_rate: f64,
    total_credited: f64,
    matching_ratio: f64,
    spectral_efficiency: Option<f64>,
}

fn summarize<'a>(allocator: &'a str, model: &'a EfficiencyModel, scenario: &Scenario, out: &AllocationOutcome) -> Result<OutcomeSummary<'a>> {
    Ok(OutcomeSummary {
        allocator,
        model: model.name(),
        k: scenario.grid.k(),
        iterations: out.iterations(),
        termination: out.termination,
        power_used_w: out.power_used,
        total_rate: out.total_rate(),
        total_credited: out.total_credited(),
        matching_ratio: matching_ratio(out, &scenario.demand)?,
        spectral_efficiency: spectral_efficiency(out, scenario.payload.b_tot_hz).ok(),
    })
}

fn write_outcome(output: &Output, allocator: &str, model: &EfficiencyModel, scenario: &Scenario, out: &AllocationOutcome) -> Result<()> {
    let summary = summarize(allocator, model, scenario, out)?;
    if output.has_dir() {
        out.mask.write_csv(output.writer("mask.csv")?)?;
        out.sinr.write_csv(output.writer("sinr.csv")?)?;
        if !out.trace.is_empty() {
            out.write_trace_csv(output.writer("trace.csv")?, scenario.payload.p_sat_w)?;
        }
    }
    output.json("summary.json", &summary)
}

fn load_link(path: &Path) -> Result<LinkBudgetParams> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let p: LinkBudgetParams = toml::from_str(&text).map_err(|e| Error::Config {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    p.validate()?;
    Ok(p)
}

fn run(cli: Cli) -> Result<bool> {
    let model = match cli.model {
        ModelArg::Shannon => EfficiencyModel::Shannon,
        ModelArg::Dvbs2 => EfficiencyModel::dvbs2(),
    };
    let output = Output::new(cli.out.clone())?;
    match cli.command {
        Command::AllocateP1 { scenario, max_iterations } => {
            let s = Scenario::load(&scenario)?;
            let out = allocate_p1(&P1Problem {
                channel: &s.channel,
                payload: &s.payload,
                demand: &s.demand,
                model: &model,
                max_outer_iterations: max_iterations,
            })?;
            write_outcome(&output, "p1", &model, &s, &out)?;
            Ok(!out.termination.is_flagged())
        }
        Command::Baseline { scenario } => {
            let s = Scenario::load(&scenario)?;
            let mut out = allocate_uniform_baseline(&s.channel, &s.grid, &s.payload, &model)?;
            out.credit(&s.demand)?;
            write_outcome(&output, "baseline", &model, &s, &out)?;
            Ok(true)
        }
        Command::AllocateP2 { scenario, cost, order, verify } => {
            let s = Scenario::load(&scenario)?;
            let problem = P2Problem::from_channel(&s.channel, &s.payload, &s.demand)?.with_order(order)?;
            let (alloc, objective) = match cost {
                CostArg::Nth => (solve_nth_order(&problem)?, Objective::NthOrder),
                CostArg::Fair => (solve_fairness(&problem)?, Objective::Fairness),
            };
            alloc.write_csv(output.writer("p2.csv")?, &s.demand)?;
            if verify {
                let oracle = oracle_numeric(&problem, objective, cli.seed)?;
                let a = objective_value(&problem, objective, &alloc.slots);
                let b = objective_value(&problem, objective, &oracle.slots);
                eprintln!("closed-form objective {a:e}, oracle {b:e}");
                return Ok(oracle.converged);
            }
            Ok(true)
        }
        Command::DualityCheck { frequency, time } => {
            let f = Scenario::load(&frequency)?;
            let t = Scenario::load(&time)?;
            if f.channel != t.channel {
                return Err(Error::InvalidArgument("scenarios describe different channels".into()));
            }
            let out = allocate_p1(&P1Problem {
                channel: &f.channel,
                payload: &f.payload,
                demand: &f.demand,
                model: &model,
                max_outer_iterations: 1000,
            })?;
            let time_mask = if t.payload.n_slots == f.payload.n_slots {
                out.mask.with_domain(t.payload.domain)
            } else {
                satcap::sinr::ResourceMask::zeros(t.payload.n_slots, t.grid.k(), t.payload.domain, t.payload.p_sat_w)
            };
            let report = check_duality(
                &f.channel,
                DualityInput { payload: &f.payload, mask: &out.mask, model: &model },
                DualityInput { payload: &t.payload, mask: &time_mask, model: &model },
            )?;
            eprintln!(
                "dual: {}, throughputs equal: {}",
                report.is_dual(),
                report.throughputs_equal()
            );
            output.json("duality.json", &report)?;
            Ok(true)
        }
        Command::Gap { x1, x2, link, sweep_y } => {
            let p = load_link(&link)?;
            #[derive(Serialize)]
            struct Row {
                y: f64,
                gap_bits: f64,
                gap_bound_bits: f64,
            }
            let bound = gap_upper_bound(&p, x1, x2)?;
            let ys = if sweep_y { log_space(1.0, 1e9, 37) } else { vec![p.sir_y] };
            let mut w = csv::Writer::from_writer(output.writer("gap.csv")?);
            for pt in gap_vs_sir(&p, x1, x2, &ys)? {
                w.serialize(Row { y: pt.y, gap_bits: pt.gap_bits, gap_bound_bits: bound })?;
            }
            w.flush().map_err(|e| Error::Io { path: "gap.csv".into(), source: e })?;
            Ok(true)
        }
        Command::Sweep { config } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(dir) = cli.out {
                cfg.output_dir = dir;
            }
            let summary = run_experiment(&cfg)?;
            eprintln!("{} points written to {}", summary.points.len(), cfg.output_dir.display());
            Ok(!summary.flagged)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("warning: run flagged as not converged");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::NonConvergence(_) => ExitCode::from(3),
                e if e.is_invalid_input() => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
