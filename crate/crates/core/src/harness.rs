//! ℓ-sweep experiments: instance materialization, per-cell measurement,
//! shifted-geometric-mean aggregation and CSV/markdown reports.
//!
//! One cell is an (instance, seed, level) triple. For every (instance, seed)
//! pair the original program is always solved, since losses at every level
//! are measured against its optimum.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::time::Duration;

use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::generators::{generate_cflp, generate_knapsack, CflpRecipe, KnapsackRecipe};
use crate::model::{parse_opb, BinaryProgram, Sense};
use crate::rounding::{format_significant, loss_bound_traditional, objective_loss, ratio_string, round_objective};
use crate::solvers::{solve_auto, SolveBudget, SolveResult, SolveStatus};
use crate::symmetry::{build_colored_graph, find_generators, verify_symmetry};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("shifted geometric mean: {0}")]
    Domain(&'static str),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Shifted geometric mean `exp(mean(ln(v + s))) - s`.
///
/// Evaluated as `s * expm1(mean(ln_1p(v / s)))` for `s > 0`, which keeps full
/// relative precision when the result is small next to the shift.
pub fn shifted_geometric_mean(values: &[f64], shift: f64) -> Result<f64, HarnessError> {
    if values.is_empty() {
        return Err(HarnessError::Domain("empty input"));
    }
    if !(shift >= 0.0 && shift.is_finite()) {
        return Err(HarnessError::Domain("shift must be finite and nonnegative"));
    }
    if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(HarnessError::Domain("values must be finite and nonnegative"));
    }
    if shift == 0.0 && values.contains(&0.0) {
        return Err(HarnessError::Domain("zero value with zero shift"));
    }
    let logs = values
        .iter()
        .map(|&v| if shift > 0.0 { (v / shift).ln_1p() } else { v.ln() });
    let mean = neumaier_sum(logs) / values.len() as f64;
    let sgm = if shift > 0.0 { shift * mean.exp_m1() } else { mean.exp() };
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(sgm.clamp(lo, hi))
}

fn neumaier_sum(xs: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `original` or a bit count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    Original,
    Bits(u32),
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Original => f.write_str("original"),
            Level::Bits(l) => write!(f, "{l}"),
        }
    }
}

impl Serialize for Level {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Level::Original => s.serialize_str("original"),
            Level::Bits(l) => s.serialize_u32(*l),
        }
    }
}

impl<'de> Deserialize<'de> for Level {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Bits(u32),
            Name(String),
        }
        match Repr::deserialize(d)? {
            Repr::Bits(l) => Ok(Level::Bits(l)),
            Repr::Name(s) if s == "original" => Ok(Level::Original),
            Repr::Name(s) => s
                .parse()
                .map(Level::Bits)
                .map_err(|_| serde::de::Error::custom(format!("unknown level `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceSource {
    Path(PathBuf),
    Cflp(CflpRecipe),
    Knapsack(KnapsackRecipe),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetConfig {
    #[serde(default = "default_max_nodes")]
    pub max_nodes: u64,
    #[serde(default = "default_max_time")]
    pub max_time_s: f64,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        BudgetConfig {
            max_nodes: default_max_nodes(),
            max_time_s: default_max_time(),
        }
    }
}

impl BudgetConfig {
    fn to_budget(self) -> SolveBudget {
        SolveBudget {
            max_nodes: self.max_nodes,
            max_time: Duration::from_secs_f64(self.max_time_s),
        }
    }
}

fn default_max_nodes() -> u64 {
    10_000_000
}
fn default_max_time() -> f64 {
    3600.0
}
fn default_levels() -> Vec<Level> {
    vec![
        Level::Original,
        Level::Bits(5),
        Level::Bits(4),
        Level::Bits(3),
        Level::Bits(2),
    ]
}
fn default_seeds() -> u32 {
    5
}
fn default_symmetry_budget() -> u64 {
    1_000_000
}
fn default_one() -> f64 {
    1.0
}
fn default_loss_shift() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub instance_sources: Vec<InstanceSource>,
    #[serde(default = "default_levels")]
    pub levels: Vec<Level>,
    #[serde(default = "default_seeds")]
    pub seeds: u32,
    #[serde(default)]
    pub budget: BudgetConfig,
    #[serde(default = "default_symmetry_budget")]
    pub symmetry_budget: u64,
    #[serde(default = "default_one")]
    pub sgm_shift_time: f64,
    #[serde(default = "default_one")]
    pub sgm_shift_generators: f64,
    /// Shift for loss in percent.
    #[serde(default = "default_loss_shift")]
    pub sgm_shift_loss: f64,
    /// Directory for `records.csv`, `aggregates.csv` and `report.md`.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Record wall-clock solve times. Off by default: timings differ between
    /// runs, and with them off the CSV outputs are byte-reproducible.
    #[serde(default)]
    pub measure_wall_time: bool,
}

impl ExperimentConfig {
    pub fn new(instance_sources: Vec<InstanceSource>) -> Self {
        ExperimentConfig {
            instance_sources,
            levels: default_levels(),
            seeds: default_seeds(),
            budget: BudgetConfig::default(),
            symmetry_budget: default_symmetry_budget(),
            sgm_shift_time: 1.0,
            sgm_shift_generators: 1.0,
            sgm_shift_loss: default_loss_shift(),
            output: None,
            measure_wall_time: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.levels.is_empty() {
            return bad("levels must be nonempty");
        }
        if self.seeds == 0 {
            return bad("seeds must be at least 1");
        }
        if self.budget.max_nodes == 0 || !(self.budget.max_time_s > 0.0 && self.budget.max_time_s.is_finite()) {
            return bad("budget must be positive");
        }
        if self.symmetry_budget == 0 {
            return bad("symmetry_budget must be positive");
        }
        for s in [self.sgm_shift_time, self.sgm_shift_generators, self.sgm_shift_loss] {
            if !(s >= 0.0 && s.is_finite()) {
                return bad("sgm shifts must be finite and nonnegative");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordStatus {
    Optimal,
    Infeasible,
    Unsolved,
    Error,
}

impl From<SolveStatus> for RecordStatus {
    fn from(s: SolveStatus) -> Self {
        match s {
            SolveStatus::Optimal => RecordStatus::Optimal,
            SolveStatus::Infeasible => RecordStatus::Infeasible,
            SolveStatus::BudgetExhausted => RecordStatus::Unsolved,
        }
    }
}

impl fmt::Display for RecordStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RecordStatus::Optimal => "optimal",
            RecordStatus::Infeasible => "infeasible",
            RecordStatus::Unsolved => "unsolved",
            RecordStatus::Error => "error",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RecordLoss {
    Available(num_rational::BigRational),
    /// Original or rounded run not solved to optimality.
    Unavailable,
    /// Original optimum is 0.
    Undefined,
}

impl RecordLoss {
    pub fn percent(&self) -> Option<f64> {
        match self {
            RecordLoss::Available(r) => Some(r.to_f64().unwrap_or(f64::NAN) * 100.0),
            _ => None,
        }
    }

    fn label(&self) -> &'static str {
        match self {
            RecordLoss::Available(_) => "available",
            RecordLoss::Unavailable => "unavailable",
            RecordLoss::Undefined => "undefined",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub instance: String,
    pub seed: u32,
    pub level: Level,
    pub generator_count: Option<usize>,
    pub symmetry_timed_out: bool,
    pub status: RecordStatus,
    /// c·x under the original objective for this level's solution.
    pub value: Option<i64>,
    pub loss: RecordLoss,
    pub time_s: Option<f64>,
    pub nodes: u64,
    /// Loss exceeded 2ε/(1+ε) on a maximization instance with c >= 0.
    pub bound_violation: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub level: Level,
    pub sgm_generators: Option<f64>,
    pub sgm_loss_percent: Option<f64>,
    pub sgm_time: Option<f64>,
    pub solved_count: usize,
    pub loss_sample_size: usize,
    pub loss_undefined: usize,
    pub records: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub records: Vec<ExperimentRecord>,
    pub rows: Vec<AggregateRow>,
}

impl ExperimentOutcome {
    pub fn violations(&self) -> usize {
        self.records.iter().filter(|r| r.bound_violation).count()
    }
}

struct Materialized {
    id: String,
    program: Result<BinaryProgram, String>,
    order_seed: u64,
}

fn materialize(index: usize, source: &InstanceSource, seed: u32) -> Materialized {
    match source {
        InstanceSource::Path(path) => {
            let id = format!(
                "{index}:{}",
                path.file_stem()
                    .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
            );
            let program = std::fs::read_to_string(path)
                .map_err(|e| format!("{}: {e}", path.display()))
                .and_then(|text| parse_opb(&text).map_err(|e| format!("{}: {e}", path.display())));
            Materialized {
                id,
                program,
                order_seed: u64::from(seed),
            }
        }
        InstanceSource::Cflp(recipe) => {
            let mut r = recipe.clone();
            r.seed = r.seed.wrapping_add(u64::from(seed));
            let program = generate_cflp(&r).map_err(|e| e.to_string());
            Materialized {
                id: format!("{index}:cflp_n{}_m{}_r{}", r.n, r.m, r.decimals),
                program,
                order_seed: u64::from(seed),
            }
        }
        InstanceSource::Knapsack(recipe) => {
            let mut r = recipe.clone();
            r.seed = r.seed.wrapping_add(u64::from(seed));
            let program = generate_knapsack(&r).map_err(|e| e.to_string());
            Materialized {
                id: format!("{index}:knapsack_n{}_k{}", r.n, r.k),
                program,
                order_seed: u64::from(seed),
            }
        }
    }
}

fn error_records(cfg: &ExperimentConfig, id: &str, seed: u32, message: &str) -> Vec<ExperimentRecord> {
    cfg.levels
        .iter()
        .map(|&level| ExperimentRecord {
            instance: id.to_string(),
            seed,
            level,
            generator_count: None,
            symmetry_timed_out: false,
            status: RecordStatus::Error,
            value: None,
            loss: RecordLoss::Unavailable,
            time_s: None,
            nodes: 0,
            bound_violation: false,
            error: Some(message.to_string()),
        })
        .collect()
}

fn run_cell(cfg: &ExperimentConfig, index: usize, source: &InstanceSource, seed: u32) -> Vec<ExperimentRecord> {
    let m = materialize(index, source, seed);
    let bp = match m.program {
        Ok(bp) => bp,
        Err(e) => return error_records(cfg, &m.id, seed, &e),
    };
    let budget = cfg.budget.to_budget();
    let solve = |p: &BinaryProgram| solve_auto(p, budget, m.order_seed);
    let original = match solve(&bp) {
        Ok(r) => r,
        Err(e) => return error_records(cfg, &m.id, seed, &e.to_string()),
    };
    let original_value = original.best_value;
    let nonneg_max = bp.sense() == Sense::Maximize && bp.objective().values().all(|&c| c >= 0);

    cfg.levels
        .iter()
        .map(|&level| {
            let (program, result): (BinaryProgram, Result<SolveResult, String>) = match level {
                Level::Original => (bp.clone(), Ok(original.clone())),
                Level::Bits(l) => {
                    let (rounded, _) = round_objective(&bp, l);
                    let r = solve(&rounded).map_err(|e| e.to_string());
                    (rounded, r)
                }
            };
            let sym = find_generators(&build_colored_graph(&program), cfg.symmetry_budget);
            if !sym.generators.iter().all(|g| verify_symmetry(&program, g) == Ok(true)) {
                let mut rec = error_records(cfg, &m.id, seed, "generator failed formulation check").swap_remove(0);
                rec.level = level;
                return rec;
            }
            let result = match result {
                Ok(r) => r,
                Err(e) => {
                    let mut rec = error_records(cfg, &m.id, seed, &e).swap_remove(0);
                    rec.level = level;
                    return rec;
                }
            };
            // c·x under the original objective
            let value = result
                .best_assignment
                .as_ref()
                .and_then(|x| bp.evaluate_objective(x).ok());
            let loss = match (original.status, result.status, original_value, value) {
                (SolveStatus::Optimal, SolveStatus::Optimal, Some(a), Some(b)) => match objective_loss(a, b) {
                    Ok(r) => RecordLoss::Available(r),
                    Err(_) => RecordLoss::Undefined,
                },
                _ => RecordLoss::Unavailable,
            };
            let bound_violation = match (&loss, level) {
                (RecordLoss::Available(r), Level::Bits(l)) if nonneg_max && l >= 1 => {
                    *r > loss_bound_traditional(l).expect("level >= 1")
                }
                _ => false,
            };
            ExperimentRecord {
                instance: m.id.clone(),
                seed,
                level,
                generator_count: Some(sym.generator_count),
                symmetry_timed_out: sym.timed_out,
                status: result.status.into(),
                value,
                loss,
                time_s: cfg.measure_wall_time.then_some(result.elapsed.as_secs_f64()),
                nodes: result.nodes_explored,
                bound_violation,
                error: None,
            }
        })
        .collect()
}

/// Runs the full (instance, seed, level) grid. Cells run in parallel; the
/// record order is fixed (instance, then seed, then configured level order).
///
/// Seed `s` offsets a recipe's seed by `s` and rotates the solver's
/// tie-break order among equal-|c| variables.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome, HarnessError> {
    cfg.validate()?;
    let cells: Vec<(usize, u32)> = (0..cfg.instance_sources.len())
        .flat_map(|i| (0..cfg.seeds).map(move |s| (i, s)))
        .collect();
    let records: Vec<ExperimentRecord> = cells
        .par_iter()
        .map(|&(i, s)| run_cell(cfg, i, &cfg.instance_sources[i], s))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    let rows = aggregate(cfg, &records)?;
    Ok(ExperimentOutcome { records, rows })
}

/// One row per configured level.
pub fn aggregate(cfg: &ExperimentConfig, records: &[ExperimentRecord]) -> Result<Vec<AggregateRow>, HarnessError> {
    let sgm = |values: Vec<f64>, shift: f64| -> Result<Option<f64>, HarnessError> {
        if values.is_empty() {
            Ok(None)
        } else {
            shifted_geometric_mean(&values, shift).map(Some)
        }
    };
    cfg.levels
        .iter()
        .map(|&level| {
            let at: Vec<&ExperimentRecord> = records.iter().filter(|r| r.level == level).collect();
            let gens: Vec<f64> = at.iter().filter_map(|r| r.generator_count).map(|g| g as f64).collect();
            let losses: Vec<f64> = at.iter().filter_map(|r| r.loss.percent()).collect();
            let times: Vec<f64> = at.iter().filter_map(|r| r.time_s).collect();
            Ok(AggregateRow {
                level,
                sgm_generators: sgm(gens, cfg.sgm_shift_generators)?,
                loss_sample_size: losses.len(),
                sgm_loss_percent: sgm(losses, cfg.sgm_shift_loss)?,
                sgm_time: sgm(times, cfg.sgm_shift_time)?,
                solved_count: at.iter().filter(|r| r.status == RecordStatus::Optimal).count(),
                loss_undefined: at.iter().filter(|r| r.loss == RecordLoss::Undefined).count(),
                records: at.len(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

pub const AGGREGATES_HEADER: &str = "level,sgm_generators,sgm_loss_percent,sgm_time_s,solved,loss_n";

/// Loss in percent: `+0.00` for zero, `3.41e-1` style below one percent,
/// two decimals otherwise.
pub fn format_loss_percent(p: f64) -> String {
    if p == 0.0 {
        "+0.00".to_string()
    } else if p.abs() < 1.0 {
        format!("{p:.2e}")
    } else {
        format!("{p:.2}")
    }
}

fn fmt_opt(v: Option<f64>, f: impl Fn(f64) -> String) -> String {
    v.map_or_else(|| "NA".to_string(), f)
}

fn level_label(level: Level) -> String {
    match level {
        Level::Original => "original".into(),
        Level::Bits(l) => format!("ℓ={l}"),
    }
}

/// Aggregate table as CSV or markdown.
pub fn emit_report(rows: &[AggregateRow], records: &[ExperimentRecord], format: ReportFormat) -> String {
    let two = |v: f64| format!("{v:.2}");
    match format {
        ReportFormat::Csv => {
            let mut out = String::from(AGGREGATES_HEADER);
            out.push('\n');
            for r in rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    r.level,
                    fmt_opt(r.sgm_generators, two),
                    fmt_opt(r.sgm_loss_percent, format_loss_percent),
                    fmt_opt(r.sgm_time, two),
                    r.solved_count,
                    r.loss_sample_size
                );
            }
            out
        }
        ReportFormat::Markdown => {
            let instances: std::collections::BTreeSet<&str> = records.iter().map(|r| r.instance.as_str()).collect();
            let errors = records.iter().filter(|r| r.status == RecordStatus::Error).count();
            let violations = records.iter().filter(|r| r.bound_violation).count();
            let mut out = String::from("# Objective rounding sweep\n\n");
            let _ = writeln!(out, "- instances: {}, records: {}", instances.len(), records.len());
            let _ = writeln!(out, "- error records: {errors}");
            let _ = writeln!(out, "- loss-bound violations: {violations}");
            out.push_str(
                "- # Gen. counts generators of the formulation as given (no presolve).\n\
                 - Time [s] is this crate's exact solver on desk-scale instances.\n\n",
            );
            out.push_str("| ℓ-bit | # Gen. | % Obj. Loss | Time [s] | # Solved | loss n | loss undefined |\n");
            out.push_str("|---|---:|---:|---:|---:|---:|---:|\n");
            for r in rows {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} | {} / {} | {} | {} |",
                    level_label(r.level),
                    fmt_opt(r.sgm_generators, two),
                    fmt_opt(r.sgm_loss_percent, format_loss_percent),
                    fmt_opt(r.sgm_time, two),
                    r.solved_count,
                    r.records,
                    r.loss_sample_size,
                    r.loss_undefined
                );
            }
            out
        }
    }
}

pub const RECORDS_HEADER: &str =
    "instance,seed,level,generators,symmetry_timed_out,status,value,loss,loss_percent,loss_status,time_s,nodes,bound_violation,error";

pub fn records_csv(records: &[ExperimentRecord]) -> String {
    let mut out = String::from(RECORDS_HEADER);
    out.push('\n');
    for r in records {
        let (loss, loss_pct) = match &r.loss {
            RecordLoss::Available(q) => (
                ratio_string(q),
                format_significant(&(q * num_rational::BigRational::from_integer(100.into())), 6),
            ),
            _ => (String::new(), String::new()),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            csv_field(&r.instance),
            r.seed,
            r.level,
            r.generator_count.map_or(String::new(), |g| g.to_string()),
            r.symmetry_timed_out,
            r.status,
            r.value.map_or(String::new(), |v| v.to_string()),
            loss,
            loss_pct,
            r.loss.label(),
            r.time_s.map_or(String::new(), |t| format!("{t:.6}")),
            r.nodes,
            r.bound_violation,
            csv_field(r.error.as_deref().unwrap_or("")),
        );
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Config echo for the markdown report.
pub fn config_summary(cfg: &ExperimentConfig) -> String {
    let levels: Vec<String> = cfg.levels.iter().map(|l| l.to_string()).collect();
    format!(
        "\n## Settings\n\n- levels: {}\n- seeds: {}\n- solver node budget: {}\n- symmetry node budget: {}\n\
         - SGM shifts: time {}, generators {}, loss % {}\n- wall-clock timing: {}\n",
        levels.join(", "),
        cfg.seeds,
        cfg.budget.max_nodes,
        cfg.symmetry_budget,
        cfg.sgm_shift_time,
        cfg.sgm_shift_generators,
        cfg.sgm_shift_loss,
        if cfg.measure_wall_time { "on" } else { "off" },
    )
}

/// Writes `records.csv`, `aggregates.csv` and `report.md` into `dir`.
pub fn write_outputs(cfg: &ExperimentConfig, outcome: &ExperimentOutcome, dir: &Path) -> Result<(), HarnessError> {
    let io = |path: PathBuf| move |source| HarnessError::Io { path, source };
    std::fs::create_dir_all(dir).map_err(io(dir.to_path_buf()))?;
    let files = [
        ("records.csv", records_csv(&outcome.records)),
        (
            "aggregates.csv",
            emit_report(&outcome.rows, &outcome.records, ReportFormat::Csv),
        ),
        (
            "report.md",
            emit_report(&outcome.rows, &outcome.records, ReportFormat::Markdown) + &config_summary(cfg),
        ),
    ];
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(io(path.clone()))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sgm_examples() {
        assert!((shifted_geometric_mean(&[1.0, 1.0, 1.0], 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((shifted_geometric_mean(&[0.0, 3.0], 1.0).unwrap() - 1.0).abs() < 1e-15);
        for s in [0.0, 0.01, 1.0, 10.0] {
            let v = shifted_geometric_mean(&[7.25], s).unwrap();
            assert!((v - 7.25).abs() <= 7.25 * 1e-15, "{s}: {v}");
        }
        assert!((shifted_geometric_mean(&[2.0, 8.0], 0.0).unwrap() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn sgm_domain_errors() {
        assert!(matches!(shifted_geometric_mean(&[], 1.0), Err(HarnessError::Domain(_))));
        assert!(matches!(
            shifted_geometric_mean(&[0.0, 1.0], 0.0),
            Err(HarnessError::Domain(_))
        ));
        assert!(matches!(
            shifted_geometric_mean(&[-1.0], 1.0),
            Err(HarnessError::Domain(_))
        ));
        assert!(matches!(
            shifted_geometric_mean(&[1.0], -1.0),
            Err(HarnessError::Domain(_))
        ));
    }

    #[test]
    fn loss_formatting() {
        assert_eq!(format_loss_percent(0.0), "+0.00");
        assert_eq!(format_loss_percent(0.341), "3.41e-1");
        assert_eq!(format_loss_percent(0.0048), "4.80e-3");
        assert_eq!(format_loss_percent(3.45), "3.45");
    }

    #[test]
    fn level_serde() {
        let levels: Vec<Level> = serde_json::from_str(r#"["original", 5, "3"]"#).unwrap();
        assert_eq!(levels, vec![Level::Original, Level::Bits(5), Level::Bits(3)]);
        assert_eq!(serde_json::to_string(&levels).unwrap(), r#"["original",5,3]"#);
        assert!(serde_json::from_str::<Level>(r#""five""#).is_err());
    }

    #[test]
    fn config_defaults_and_validation() {
        let cfg = ExperimentConfig::from_json(r#"{"instance_sources": [{"knapsack": {"n": 6, "k": 2}}]}"#).unwrap();
        assert_eq!(cfg.levels.len(), 5);
        assert_eq!(cfg.seeds, 5);
        assert_eq!(cfg.sgm_shift_loss, 0.01);
        assert!(!cfg.measure_wall_time);
        match &cfg.instance_sources[0] {
            InstanceSource::Knapsack(r) => assert_eq!(r.noise_sigma, 4096),
            other => panic!("{other:?}"),
        }
        assert!(ExperimentConfig::from_json(r#"{"instance_sources": [], "levels": []}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"instance_sources": [], "seeds": 0}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"instance_sources": 3}"#).is_err());
    }

    #[test]
    fn minimal_experiment() {
        let mut cfg = ExperimentConfig::new(vec![InstanceSource::Knapsack(KnapsackRecipe::new(8, 2, 1))]);
        cfg.levels = vec![Level::Original];
        cfg.seeds = 1;
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.rows.len(), 1);
        let rec = &out.records[0];
        assert_eq!(rec.status, RecordStatus::Optimal);
        assert_eq!(rec.loss.percent(), Some(0.0));
        let csv = emit_report(&out.rows, &out.records, ReportFormat::Csv);
        assert!(csv.lines().nth(1).unwrap().starts_with("original,"));
        assert!(csv.contains(",+0.00,"));
    }

    #[test]
    fn missing_file_becomes_error_records() {
        let mut cfg = ExperimentConfig::new(vec![InstanceSource::Path("/nonexistent/x.opb".into())]);
        cfg.levels = vec![Level::Original, Level::Bits(2)];
        cfg.seeds = 2;
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.records.len(), 4);
        assert!(out.records.iter().all(|r| r.status == RecordStatus::Error));
        assert_eq!(out.rows[0].sgm_generators, None);
        assert!(records_csv(&out.records).contains("error"));
    }

    #[test]
    fn empty_report_is_header_only() {
        assert_eq!(
            emit_report(&[], &[], ReportFormat::Csv),
            format!("{AGGREGATES_HEADER}\n")
        );
        assert_eq!(records_csv(&[]), format!("{RECORDS_HEADER}\n"));
    }

    #[test]
    fn zero_noise_generators_constant_across_levels() {
        let mut r = KnapsackRecipe::new(12, 3, 5);
        r.noise_sigma = 0;
        let mut cfg = ExperimentConfig::new(vec![InstanceSource::Knapsack(r)]);
        cfg.seeds = 2;
        let out = run_experiment(&cfg).unwrap();
        let gens: Vec<Option<f64>> = out.rows.iter().map(|r| r.sgm_generators).collect();
        assert!(gens.iter().all(|g| g == &gens[0]), "{gens:?}");
        assert_eq!(out.violations(), 0);
    }
}
