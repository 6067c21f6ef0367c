//! Reproducible sweeps over beam count, traffic slope and backoff.
//!
//! An experiment config is TOML:
//!
//! ```toml
//! name = "trend"
//! scenario = "k25.toml"          # relative to this file
//! output_dir = "out/trend"       # relative to this file
//! allocators = ["p1", "baseline"]
//! models = ["shannon", "dvbs2"]
//!
//! [sweep]
//! k = [25, 49]
//! beta = [2e7, 4e7, 6e7]
//! ```
//!
//! Sweep points run in a fixed order (K, then beta, then model, then
//! allocator) and every number is written with a shortest round-trip
//! format, so identical configs give byte-identical files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linkgap::{gap_bound_sweep, write_gap_bound_csv, LinkBudgetParams};
use crate::metrics::{
    match_baseline_power, matching_ratio, power_gain, slot_matching_ratio, slot_spectral_efficiency,
    spectral_efficiency, to_db, MetricsReport,
};
use crate::p1::{allocate_p1, allocate_uniform_baseline, AllocationOutcome, P1Problem, Termination};
use crate::p2::{solve_fairness, solve_nth_order, P2Problem, SlotAllocation};
use crate::phy::EfficiencyModel;
use crate::scenario::{AlphaSpec, Scenario, ScenarioConfig};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllocatorKind {
    P1,
    P2Nth,
    P2Fair,
    Baseline,
}

impl AllocatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AllocatorKind::P1 => "p1",
            AllocatorKind::P2Nth => "p2_nth",
            AllocatorKind::P2Fair => "p2_fair",
            AllocatorKind::Baseline => "baseline",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Shannon,
    Dvbs2,
}

impl ModelKind {
    pub fn model(self) -> EfficiencyModel {
        match self {
            ModelKind::Shannon => EfficiencyModel::Shannon,
            ModelKind::Dvbs2 => EfficiencyModel::dvbs2(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Beam counts; the scenario's `P_tot` is scaled with `K`.
    #[serde(default)]
    pub k: Vec<usize>,
    #[serde(default)]
    pub beta: Vec<f64>,
    #[serde(default)]
    pub delta_obo_db: Vec<f64>,
    #[serde(default)]
    pub x2_db: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotSettings {
    #[serde(default = "default_order")]
    pub order_n: u32,
    /// Common priority weight for every beam.
    #[serde(default = "default_weight")]
    pub weight: f64,
}

fn default_order() -> u32 {
    2
}

fn default_weight() -> f64 {
    1.0
}

impl Default for SlotSettings {
    fn default() -> Self {
        SlotSettings {
            order_n: default_order(),
            weight: default_weight(),
        }
    }
}

fn default_models() -> Vec<ModelKind> {
    vec![ModelKind::Shannon]
}

fn default_iterations() -> usize {
    1000
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub scenario: Option<PathBuf>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub allocators: Vec<AllocatorKind>,
    #[serde(default = "default_models")]
    pub models: Vec<ModelKind>,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default = "default_iterations")]
    pub max_outer_iterations: usize,
    /// Match a scaled baseline to every P1 point and report the power gain.
    #[serde(default = "default_true")]
    pub power_gain: bool,
    #[serde(default)]
    pub p2: SlotSettings,
    #[serde(default)]
    pub link: Option<LinkBudgetParams>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config {
            path: "<inline>".into(),
            message: e.to_string(),
        })
    }

    /// Load and resolve relative paths against the config's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: Self = toml::from_str(&text).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(s) = &cfg.scenario {
            cfg.scenario = Some(base.join(s));
        }
        cfg.output_dir = base.join(&cfg.output_dir);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let runs_allocators = !self.allocators.is_empty();
        let runs_gap = !self.sweep.delta_obo_db.is_empty();
        if !runs_allocators && !runs_gap {
            return Err(Error::invalid("experiment has nothing to sweep"));
        }
        if runs_allocators {
            let Some(path) = &self.scenario else {
                return Err(Error::invalid("allocators need a scenario file"));
            };
            if !path.is_file() {
                return Err(Error::invalid(format!("scenario {} not found", path.display())));
            }
            if self.models.is_empty() {
                return Err(Error::invalid("at least one efficiency model is required"));
            }
            if self.sweep.k.contains(&0) {
                return Err(Error::invalid("swept K must be positive"));
            }
        }
        if runs_gap {
            if self.link.is_none() {
                return Err(Error::invalid("a backoff sweep needs a [link] table"));
            }
            if self.sweep.x2_db.is_empty() {
                return Err(Error::invalid("a backoff sweep needs x2_db values"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointSummary {
    pub file: String,
    pub metrics: MetricsReport,
    pub iterations: Option<usize>,
    pub termination: Option<Termination>,
    /// Some outer iteration lowered the credited total.
    pub credited_decreased: Option<bool>,
    pub clamped_beams: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub schema_version: u32,
    pub name: String,
    pub points: Vec<PointSummary>,
    pub gap_file: Option<String>,
    /// Any P1 point stopped on its iteration cap.
    pub flagged: bool,
}

#[derive(Serialize)]
struct BeamRow {
    beam: usize,
    demand: f64,
    rate: f64,
    credited: f64,
    slots: f64,
    power_w: f64,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn write_rows(path: &Path, rows: impl IntoIterator<Item = BeamRow>) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn outcome_rows(outcome: &AllocationOutcome, demand: &[f64]) -> Vec<BeamRow> {
    (0..outcome.per_beam_rate.len())
        .map(|i| BeamRow {
            beam: i + 1,
            demand: demand[i],
            rate: outcome.per_beam_rate[i],
            credited: outcome.credited_rate[i],
            slots: outcome.mask.slots_held(i) as f64,
            power_w: outcome.mask.beam_power(i),
        })
        .collect()
}

fn slot_rows(alloc: &SlotAllocation, demand: &[f64]) -> Vec<BeamRow> {
    (0..alloc.slots.len())
        .map(|i| BeamRow {
            beam: i + 1,
            demand: demand[i],
            rate: alloc.rates[i],
            credited: alloc.rates[i].min(demand[i]),
            slots: alloc.slots[i],
            power_w: 0.0,
        })
        .collect()
}

/// Scenario config for sweep point (`k`, `beta`).
pub fn sweep_scenario(base: &ScenarioConfig, k: Option<usize>, beta: Option<f64>) -> Result<ScenarioConfig> {
    let mut cfg = base.clone();
    if let Some(k) = k {
        if let AlphaSpec::PerBeam(_) = cfg.alpha {
            if k != base.k {
                return Err(Error::invalid("a K sweep needs a uniform alpha"));
            }
        }
        cfg.p_tot_w = base.p_tot_w * k as f64 / base.k as f64;
        cfg.k = k;
    }
    if let Some(beta) = beta {
        cfg.traffic.beta = beta;
    }
    Ok(cfg)
}

struct PointContext<'a> {
    scenario: &'a Scenario,
    beta: f64,
    model_kind: ModelKind,
    model: &'a EfficiencyModel,
}

impl PointContext<'_> {
    fn report(&self, allocator: AllocatorKind) -> MetricsReport {
        MetricsReport {
            k: self.scenario.grid.k(),
            beta: self.beta,
            model: self.model.name().to_string(),
            domain: self.scenario.payload.domain.as_str().to_string(),
            allocator: allocator.as_str().to_string(),
            power_gain_db: None,
            matched_power_per_beam_w: None,
            power_gain_note: None,
            spectral_efficiency: None,
            matching_ratio: 0.0,
            total_rate: 0.0,
            total_credited: 0.0,
            total_demand: self.scenario.demand.total(),
            power_used_w: 0.0,
        }
    }

    fn stem(&self, allocator: AllocatorKind, beta_index: usize) -> String {
        let model = match self.model_kind {
            ModelKind::Shannon => "shannon",
            ModelKind::Dvbs2 => "dvbs2",
        };
        format!(
            "{}_{}_k{}_b{}",
            allocator.as_str(),
            model,
            self.scenario.grid.k(),
            beta_index
        )
    }
}

fn fill_outcome_metrics(report: &mut MetricsReport, outcome: &AllocationOutcome, scenario: &Scenario) -> Result<()> {
    report.spectral_efficiency = spectral_efficiency(outcome, scenario.payload.b_tot_hz).ok();
    report.matching_ratio = matching_ratio(outcome, &scenario.demand)?;
    report.total_rate = outcome.total_rate();
    report.total_credited = outcome.total_credited();
    report.power_used_w = outcome.power_used;
    Ok(())
}

fn run_point(
    cfg: &ExperimentConfig,
    ctx: &PointContext<'_>,
    allocator: AllocatorKind,
    beta_index: usize,
) -> Result<PointSummary> {
    let scenario = ctx.scenario;
    let stem = ctx.stem(allocator, beta_index);
    let file = format!("{stem}.csv");
    let path = cfg.output_dir.join(&file);
    let demand = scenario.demand.as_slice();
    let mut report = ctx.report(allocator);
    let mut summary = PointSummary {
        file,
        metrics: report.clone(),
        iterations: None,
        termination: None,
        credited_decreased: None,
        clamped_beams: None,
    };
    match allocator {
        AllocatorKind::P1 => {
            let outcome = allocate_p1(&P1Problem {
                channel: &scenario.channel,
                payload: &scenario.payload,
                demand: &scenario.demand,
                model: ctx.model,
                max_outer_iterations: cfg.max_outer_iterations,
            })?;
            fill_outcome_metrics(&mut report, &outcome, scenario)?;
            if cfg.power_gain {
                match match_baseline_power(
                    &scenario.channel,
                    &scenario.grid,
                    &scenario.payload,
                    ctx.model,
                    &scenario.demand,
                    outcome.total_credited(),
                )
                .and_then(|m| Ok((power_gain(&outcome, &m.outcome)?, m.per_beam_power)))
                {
                    Ok((gain, p_uni)) => {
                        report.power_gain_db = Some(to_db(gain));
                        report.matched_power_per_beam_w = Some(p_uni);
                    }
                    Err(e) => report.power_gain_note = Some(e.to_string()),
                }
            }
            write_rows(&path, outcome_rows(&outcome, demand))?;
            let trace_path = cfg.output_dir.join(format!("{stem}_trace.csv"));
            outcome.write_trace_csv(create(&trace_path)?, scenario.payload.p_sat_w)?;
            summary.iterations = Some(outcome.iterations());
            summary.termination = Some(outcome.termination);
            summary.credited_decreased = Some(outcome.trace.iter().any(|r| r.credited_decreased));
        }
        AllocatorKind::Baseline => {
            let mut outcome = allocate_uniform_baseline(
                &scenario.channel,
                &scenario.grid,
                &scenario.payload,
                ctx.model,
            )?;
            outcome.credit(&scenario.demand)?;
            fill_outcome_metrics(&mut report, &outcome, scenario)?;
            write_rows(&path, outcome_rows(&outcome, demand))?;
        }
        AllocatorKind::P2Nth | AllocatorKind::P2Fair => {
            let problem = P2Problem::from_channel(&scenario.channel, &scenario.payload, &scenario.demand)?
                .with_order(cfg.p2.order_n)?
                .with_weights(vec![cfg.p2.weight; scenario.grid.k()])?;
            let alloc = if allocator == AllocatorKind::P2Nth {
                solve_nth_order(&problem)?
            } else {
                solve_fairness(&problem)?
            };
            report.spectral_efficiency =
                slot_spectral_efficiency(&alloc, &scenario.demand, problem.b_tot_hz, problem.n_t).ok();
            report.matching_ratio = slot_matching_ratio(&alloc, &scenario.demand)?;
            report.total_rate = alloc.rates.iter().sum();
            report.total_credited = alloc.rates.iter().zip(demand).map(|(r, d)| r.min(*d)).sum();
            report.power_used_w = alloc.total_slots() / problem.n_t as f64 * scenario.payload.p_sat_w;
            write_rows(&path, slot_rows(&alloc, demand))?;
            summary.clamped_beams = Some(alloc.clamped.len());
        }
    }
    summary.metrics = report;
    Ok(summary)
}

/// Run every sweep point, write one CSV per point, the gap grid if
/// requested, and `summary.json`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentSummary> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    let mut points = Vec::new();
    if let Some(path) = cfg.scenario.as_ref().filter(|_| !cfg.allocators.is_empty()) {
        let base = ScenarioConfig::load(path)?;
        let ks: Vec<Option<usize>> = if cfg.sweep.k.is_empty() {
            vec![None]
        } else {
            cfg.sweep.k.iter().copied().map(Some).collect()
        };
        let betas: Vec<Option<f64>> = if cfg.sweep.beta.is_empty() {
            vec![None]
        } else {
            cfg.sweep.beta.iter().copied().map(Some).collect()
        };
        let models: Vec<(ModelKind, EfficiencyModel)> =
            cfg.models.iter().map(|m| (*m, m.model())).collect();
        for k in &ks {
            for (bi, beta) in betas.iter().enumerate() {
                let point_cfg = sweep_scenario(&base, *k, *beta)?;
                let scenario = point_cfg.build()?;
                for (kind, model) in &models {
                    let ctx = PointContext {
                        scenario: &scenario,
                        beta: point_cfg.traffic.beta,
                        model_kind: *kind,
                        model,
                    };
                    for allocator in &cfg.allocators {
                        points.push(run_point(cfg, &ctx, *allocator, bi)?);
                    }
                }
            }
        }
    }

    let gap_file = match &cfg.link {
        Some(link) if !cfg.sweep.delta_obo_db.is_empty() => {
            let grid = gap_bound_sweep(link, &cfg.sweep.delta_obo_db, &cfg.sweep.x2_db)?;
            let name = "gap_bound.csv".to_string();
            write_gap_bound_csv(create(&cfg.output_dir.join(&name))?, &grid)?;
            Some(name)
        }
        _ => None,
    };

    let summary = ExperimentSummary {
        schema_version: SCHEMA_VERSION,
        name: cfg.name.clone(),
        flagged: points
            .iter()
            .any(|p| p.termination.is_some_and(|t| t.is_flagged())),
        points,
        gap_file,
    };
    let path = cfg.output_dir.join("summary.json");
    let mut w = create(&path)?;
    serde_json::to_writer_pretty(&mut w, &summary)?;
    w.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(summary)
}
