//! Experiment harness: structured experiment specs, deterministic sweep
//! execution over (value, seed, scheme) grids, and plot-ready metrics
//! export.
//!
//! CSV column order is fixed:
//! - runs: value, seed, scheme, mean_qoe, triggers, updates, error
//! - slots: value, seed, scheme, slot, mean_qoe, triggers, updates,
//!   collections, msvs_quota_hz, mean_bitrate_bps, rebuffer_s,
//!   wasted_prefetch_s, mean_buffer_s
//! - aggregates: value, scheme, runs, mean_qoe, std_qoe
//!
//! Floats are written with 17 significant digits so exported values
//! round-trip exactly.

use crate::error::{Result, SimError};
use crate::msvs::{ScenarioConfig, Scheme};
use crate::sim::{run, SimConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExportFormat {
    Csv,
    JsonLines,
}

impl std::str::FromStr for ExportFormat {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ExportFormat::Csv),
            "jsonl" => Ok(ExportFormat::JsonLines),
            other => Err(SimError::InvalidConfig(format!(
                "unknown format: {other} (expected csv or jsonl)"
            ))),
        }
    }
}

/// One swept parameter: a dotted key path into the `scenario` or `sim`
/// section and the values to try.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepAxis {
    pub parameter: String,
    pub values: Vec<f64>,
}

impl Default for SweepAxis {
    fn default() -> Self {
        Self {
            parameter: "scenario.total_bandwidth_hz".to_string(),
            values: vec![1.0e6],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub scenario: ScenarioConfig,
    pub sim: SimConfig,
    pub sweep: SweepAxis,
    pub seeds: Vec<u64>,
    pub schemes: Vec<Scheme>,
    pub output_dir: PathBuf,
    pub formats: Vec<ExportFormat>,
    /// Worker threads for sweep cells; 0 uses the rayon default.
    pub parallel: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            sim: SimConfig::default(),
            sweep: SweepAxis::default(),
            seeds: vec![0],
            schemes: vec![Scheme::Proposed],
            output_dir: PathBuf::from("out"),
            formats: vec![ExportFormat::Csv, ExportFormat::JsonLines],
            parallel: 0,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |key: &str, msg: &str| {
            Err(SimError::Validation {
                key: key.to_string(),
                msg: msg.to_string(),
            })
        };
        if self.sweep.values.is_empty() {
            return fail("sweep.values", "must be non-empty");
        }
        if self.seeds.is_empty() {
            return fail("seeds", "must be non-empty");
        }
        if self.seeds.iter().collect::<BTreeSet<_>>().len() != self.seeds.len() {
            return fail("seeds", "must be distinct");
        }
        if self.schemes.is_empty() {
            return fail("schemes", "must be non-empty");
        }
        let mut seen: Vec<Scheme> = Vec::new();
        for &s in &self.schemes {
            if seen.contains(&s) {
                return fail("schemes", "must be distinct");
            }
            seen.push(s);
        }
        if self.formats.is_empty() {
            return fail("formats", "must be non-empty");
        }
        self.scenario.validate()?;
        self.sim.validate()?;
        // The axis path must resolve before any cell runs.
        apply_parameter(
            &self.scenario,
            &self.sim,
            &self.sweep.parameter,
            self.sweep.values[0],
        )?;
        Ok(())
    }
}

/// Parse a TOML experiment file; unknown keys are rejected with the key
/// named in the message, and all nested invariants are checked.
pub fn parse_config(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path)?;
    let spec: ExperimentSpec =
        toml::from_str(&text).map_err(|e| SimError::Parse(e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

/// Set one dotted key path (`scenario.total_bandwidth_hz`, `sim.horizon`,
/// ...) to `value`, preserving integer fields as integers.
pub fn apply_parameter(
    scenario: &ScenarioConfig,
    sim: &SimConfig,
    path: &str,
    value: f64,
) -> Result<(ScenarioConfig, SimConfig)> {
    let fail = |msg: &str| {
        Err(SimError::Validation {
            key: path.to_string(),
            msg: msg.to_string(),
        })
    };
    let Some((section, field)) = path.split_once('.') else {
        return fail("expected section.field");
    };
    let set = |root: serde_json::Value| -> Result<serde_json::Value> {
        let mut root = root;
        let pointer = format!("/{}", field.replace('.', "/"));
        let Some(slot) = root.pointer_mut(&pointer) else {
            return Err(SimError::Validation {
                key: path.to_string(),
                msg: "no such field".to_string(),
            });
        };
        match slot {
            serde_json::Value::Number(n) if n.is_u64() || n.is_i64() => {
                if value < 0.0 || value.fract() != 0.0 {
                    return Err(SimError::Validation {
                        key: path.to_string(),
                        msg: format!("field is an integer, got {value}"),
                    });
                }
                *slot = serde_json::Value::from(value as u64);
            }
            serde_json::Value::Number(_) => {
                *slot = serde_json::Value::from(value);
            }
            _ => {
                return Err(SimError::Validation {
                    key: path.to_string(),
                    msg: "field is not numeric".to_string(),
                });
            }
        }
        Ok(root)
    };
    let to_value = |e: serde_json::Error| SimError::Parse(e.to_string());
    match section {
        "scenario" => {
            let root = serde_json::to_value(scenario).map_err(to_value)?;
            let scenario = serde_json::from_value(set(root)?).map_err(to_value)?;
            Ok((scenario, sim.clone()))
        }
        "sim" => {
            let root = serde_json::to_value(sim).map_err(to_value)?;
            let sim = serde_json::from_value(set(root)?).map_err(to_value)?;
            Ok((scenario.clone(), sim))
        }
        _ => fail("unknown section (expected scenario or sim)"),
    }
}

/// One simulation cell of the sweep grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub value: f64,
    pub seed: u64,
    pub scheme: Scheme,
    pub mean_qoe: f64,
    pub triggers: u64,
    pub updates: u64,
    /// Per-row failure; the sweep continues past failed cells.
    pub error: Option<String>,
}

/// One slot of one run, long format for plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRow {
    pub value: f64,
    pub seed: u64,
    pub scheme: Scheme,
    pub slot: u64,
    pub mean_qoe: f64,
    pub triggers: u64,
    pub updates: u64,
    pub collections: u64,
    pub msvs_quota_hz: f64,
    pub mean_bitrate_bps: f64,
    pub rebuffer_s: f64,
    pub wasted_prefetch_s: f64,
    pub mean_buffer_s: f64,
}

/// Seed-aggregated QoE per (sweep value, scheme), over completed runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub value: f64,
    pub scheme: Scheme,
    pub runs: usize,
    pub mean_qoe: f64,
    /// Population standard deviation.
    pub std_qoe: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<RunRow>,
    pub slots: Vec<SlotRow>,
    pub aggregates: Vec<Aggregate>,
}

impl SweepReport {
    pub fn failed(&self) -> Vec<&RunRow> {
        self.rows.iter().filter(|r| r.error.is_some()).collect()
    }
}

/// Run every (value, seed, scheme) cell, optionally in parallel, merging
/// results in grid order so the report is deterministic.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<SweepReport> {
    spec.validate()?;
    let mut seeds = spec.seeds.clone();
    seeds.sort_unstable();
    let cells: Vec<(f64, u64, Scheme)> = spec
        .sweep
        .values
        .iter()
        .flat_map(|&v| {
            seeds.iter().flat_map(move |&s| {
                spec.schemes.iter().map(move |&sch| (v, s, sch))
            })
        })
        .collect();
    let run_cell = |&(value, seed, scheme): &(f64, u64, Scheme)| {
        let failed = |msg: String| {
            (
                RunRow {
                    value,
                    seed,
                    scheme,
                    mean_qoe: 0.0,
                    triggers: 0,
                    updates: 0,
                    error: Some(msg),
                },
                Vec::new(),
            )
        };
        let (mut scenario, mut sim) =
            match apply_parameter(&spec.scenario, &spec.sim, &spec.sweep.parameter, value) {
                Ok(pair) => pair,
                Err(e) => return failed(e.to_string()),
            };
        scenario.scheme = scheme;
        sim.seed = seed;
        match run(&sim, &scenario) {
            Ok(report) => {
                let slots = report
                    .rows
                    .iter()
                    .map(|r| SlotRow {
                        value,
                        seed,
                        scheme,
                        slot: r.slot,
                        mean_qoe: r.mean_qoe,
                        triggers: r.triggers,
                        updates: r.updates,
                        collections: r.collections,
                        msvs_quota_hz: r.msvs_quota_hz,
                        mean_bitrate_bps: r.mean_bitrate_bps,
                        rebuffer_s: r.rebuffer_s,
                        wasted_prefetch_s: r.wasted_prefetch_s,
                        mean_buffer_s: r.mean_buffer_s,
                    })
                    .collect();
                (
                    RunRow {
                        value,
                        seed,
                        scheme,
                        mean_qoe: report.mean_qoe(),
                        triggers: report.trigger_count(),
                        updates: report.update_count(),
                        error: None,
                    },
                    slots,
                )
            }
            Err(e) => failed(e.to_string()),
        }
    };
    let compute = || cells.par_iter().map(run_cell).collect::<Vec<_>>();
    let results = if spec.parallel > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(spec.parallel)
            .build()
            .map_err(|e| SimError::InvalidConfig(e.to_string()))?
            .install(compute)
    } else {
        compute()
    };
    let mut rows = Vec::with_capacity(results.len());
    let mut slots = Vec::new();
    for (row, mut slot_rows) in results {
        rows.push(row);
        slots.append(&mut slot_rows);
    }
    let aggregates = aggregate(&spec.sweep.values, &spec.schemes, &rows);
    Ok(SweepReport {
        rows,
        slots,
        aggregates,
    })
}

fn aggregate(values: &[f64], schemes: &[Scheme], rows: &[RunRow]) -> Vec<Aggregate> {
    let mut out = Vec::new();
    for &value in values {
        for &scheme in schemes {
            let qoe: Vec<f64> = rows
                .iter()
                .filter(|r| r.value == value && r.scheme == scheme && r.error.is_none())
                .map(|r| r.mean_qoe)
                .collect();
            let n = qoe.len();
            let mean = if n > 0 {
                qoe.iter().sum::<f64>() / n as f64
            } else {
                0.0
            };
            let std = if n > 0 {
                (qoe.iter().map(|q| (q - mean).powi(2)).sum::<f64>() / n as f64).sqrt()
            } else {
                0.0
            };
            out.push(Aggregate {
                value,
                scheme,
                runs: n,
                mean_qoe: mean,
                std_qoe: std,
            });
        }
    }
    out
}

/// Paired same-seed QoE comparison between every ordered scheme pair at
/// each sweep value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedComparison {
    pub value: f64,
    pub scheme_a: Scheme,
    pub scheme_b: Scheme,
    pub pairs: usize,
    /// Seeds where scheme_a strictly beats scheme_b.
    pub wins_a: usize,
    /// Mean of per-seed (a - b) QoE differences.
    pub mean_gap: f64,
}

pub fn paired_comparisons(report: &SweepReport) -> Vec<PairedComparison> {
    let mut values: Vec<f64> = Vec::new();
    let mut schemes: Vec<Scheme> = Vec::new();
    for r in &report.rows {
        if !values.contains(&r.value) {
            values.push(r.value);
        }
        if !schemes.contains(&r.scheme) {
            schemes.push(r.scheme);
        }
    }
    let qoe_of = |value: f64, scheme: Scheme, seed: u64| -> Option<f64> {
        report
            .rows
            .iter()
            .find(|r| {
                r.value == value && r.scheme == scheme && r.seed == seed && r.error.is_none()
            })
            .map(|r| r.mean_qoe)
    };
    let mut out = Vec::new();
    for &value in &values {
        for (i, &a) in schemes.iter().enumerate() {
            for &b in &schemes[i + 1..] {
                let seeds: BTreeSet<u64> = report.rows.iter().map(|r| r.seed).collect();
                let mut pairs = 0;
                let mut wins_a = 0;
                let mut gap = 0.0;
                for &seed in &seeds {
                    let (Some(qa), Some(qb)) = (qoe_of(value, a, seed), qoe_of(value, b, seed))
                    else {
                        continue;
                    };
                    pairs += 1;
                    if qa > qb {
                        wins_a += 1;
                    }
                    gap += qa - qb;
                }
                out.push(PairedComparison {
                    value,
                    scheme_a: a,
                    scheme_b: b,
                    pairs,
                    wins_a,
                    mean_gap: if pairs > 0 { gap / pairs as f64 } else { 0.0 },
                });
            }
        }
    }
    out
}

/// 17 significant digits: exact f64 round-trip.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_escape(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Write the per-run, per-slot, and aggregate tables under `dir` in each
/// requested format; returns the paths written.
pub fn export_metrics(
    report: &SweepReport,
    dir: &Path,
    formats: &[ExportFormat],
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for &format in formats {
        match format {
            ExportFormat::Csv => {
                let mut runs = String::from("value,seed,scheme,mean_qoe,triggers,updates,error\n");
                for r in &report.rows {
                    runs.push_str(&format!(
                        "{},{},{},{},{},{},{}\n",
                        fmt_f64(r.value),
                        r.seed,
                        r.scheme,
                        fmt_f64(r.mean_qoe),
                        r.triggers,
                        r.updates,
                        csv_escape(r.error.as_deref().unwrap_or("")),
                    ));
                }
                let mut slots = String::from(
                    "value,seed,scheme,slot,mean_qoe,triggers,updates,collections,\
                     msvs_quota_hz,mean_bitrate_bps,rebuffer_s,wasted_prefetch_s,mean_buffer_s\n",
                );
                for r in &report.slots {
                    slots.push_str(&format!(
                        "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                        fmt_f64(r.value),
                        r.seed,
                        r.scheme,
                        r.slot,
                        fmt_f64(r.mean_qoe),
                        r.triggers,
                        r.updates,
                        r.collections,
                        fmt_f64(r.msvs_quota_hz),
                        fmt_f64(r.mean_bitrate_bps),
                        fmt_f64(r.rebuffer_s),
                        fmt_f64(r.wasted_prefetch_s),
                        fmt_f64(r.mean_buffer_s),
                    ));
                }
                let mut aggs = String::from("value,scheme,runs,mean_qoe,std_qoe\n");
                for a in &report.aggregates {
                    aggs.push_str(&format!(
                        "{},{},{},{},{}\n",
                        fmt_f64(a.value),
                        a.scheme,
                        a.runs,
                        fmt_f64(a.mean_qoe),
                        fmt_f64(a.std_qoe),
                    ));
                }
                for (name, body) in [("runs.csv", runs), ("slots.csv", slots), ("aggregates.csv", aggs)] {
                    let path = dir.join(name);
                    std::fs::write(&path, body)?;
                    written.push(path);
                }
            }
            ExportFormat::JsonLines => {
                let dump = |name: &str, lines: Vec<String>| -> Result<PathBuf> {
                    let path = dir.join(name);
                    std::fs::write(&path, lines.join("\n") + "\n")?;
                    Ok(path)
                };
                let runs: Vec<String> = report
                    .rows
                    .iter()
                    .map(|r| serde_json::to_string(r).map_err(|e| SimError::Parse(e.to_string())))
                    .collect::<Result<_>>()?;
                let slots: Vec<String> = report
                    .slots
                    .iter()
                    .map(|r| serde_json::to_string(r).map_err(|e| SimError::Parse(e.to_string())))
                    .collect::<Result<_>>()?;
                let aggs: Vec<String> = report
                    .aggregates
                    .iter()
                    .map(|a| serde_json::to_string(a).map_err(|e| SimError::Parse(e.to_string())))
                    .collect::<Result<_>>()?;
                written.push(dump("runs.jsonl", runs)?);
                written.push(dump("slots.jsonl", slots)?);
                written.push(dump("aggregates.jsonl", aggs)?);
            }
        }
    }
    Ok(written)
}

/// Re-parse an exported runs CSV; inverse of the CSV export for run rows.
pub fn parse_runs_csv(path: &Path) -> Result<Vec<RunRow>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for line in text.lines().skip(1) {
        let fields = split_csv(line);
        if fields.len() != 7 {
            return Err(SimError::Parse(format!("bad runs row: {line}")));
        }
        let err = |e: String| SimError::Parse(e);
        rows.push(RunRow {
            value: fields[0].parse().map_err(|_| err(format!("value: {}", fields[0])))?,
            seed: fields[1].parse().map_err(|_| err(format!("seed: {}", fields[1])))?,
            scheme: fields[2].parse()?,
            mean_qoe: fields[3]
                .parse()
                .map_err(|_| err(format!("mean_qoe: {}", fields[3])))?,
            triggers: fields[4]
                .parse()
                .map_err(|_| err(format!("triggers: {}", fields[4])))?,
            updates: fields[5]
                .parse()
                .map_err(|_| err(format!("updates: {}", fields[5])))?,
            error: if fields[6].is_empty() {
                None
            } else {
                Some(fields[6].clone())
            },
        });
    }
    Ok(rows)
}

fn split_csv(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '"' if quoted && chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            '"' => quoted = !quoted,
            ',' if !quoted => fields.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    fields.push(cur);
    fields
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_spec() -> ExperimentSpec {
        let mut spec = ExperimentSpec::default();
        spec.scenario.users = 6;
        spec.scenario.catalog_size = 12;
        spec.sim.horizon = 10;
        spec.sweep.values = vec![0.6e6, 0.8e6];
        spec.seeds = vec![0, 1];
        spec.schemes = vec![Scheme::Proposed, Scheme::FixedDt];
        spec
    }

    fn write_config(body: &str) -> (tempfile::TempDir, PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.toml");
        std::fs::write(&path, body).unwrap();
        (dir, path)
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let (_dir, path) = write_config("");
        let spec = parse_config(&path).unwrap();
        assert_eq!(spec.seeds, vec![0]);
        assert_eq!(spec.schemes, vec![Scheme::Proposed]);
        assert_eq!(spec.sweep.parameter, "scenario.total_bandwidth_hz");
        assert_eq!(spec.scenario.users, 100);
    }

    #[test]
    fn negative_bandwidth_names_key() {
        let (_dir, path) = write_config("[scenario]\ntotal_bandwidth_hz = -1.0\n");
        let err = parse_config(&path).unwrap_err().to_string();
        assert!(err.contains("total_bandwidth_hz"), "{err}");
    }

    #[test]
    fn duplicate_seeds_rejected() {
        let (_dir, path) = write_config("seeds = [3, 3]\n");
        let err = parse_config(&path).unwrap_err().to_string();
        assert!(err.contains("seeds"), "{err}");
    }

    #[test]
    fn unknown_key_rejected_with_path() {
        let (_dir, path) = write_config("[scenario]\nbogus = 1\n");
        let err = parse_config(&path).unwrap_err().to_string();
        assert!(err.contains("bogus"), "{err}");
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = parse_config(Path::new("/nonexistent/exp.toml")).unwrap_err();
        assert!(matches!(err, SimError::Io(_)));
    }

    #[test]
    fn grid_covers_values_by_seeds_by_schemes() {
        let spec = tiny_spec();
        let report = run_experiment(&spec).unwrap();
        assert_eq!(report.rows.len(), 2 * 2 * 2);
        assert_eq!(report.slots.len(), 8 * 10);
        assert_eq!(report.aggregates.len(), 2 * 2);
        assert!(report.failed().is_empty());
        // Grid order: value-major, then seed, then scheme.
        assert_eq!(report.rows[0].value, 0.6e6);
        assert_eq!(report.rows[0].seed, 0);
        assert_eq!(report.rows[1].scheme, Scheme::FixedDt);
        assert_eq!(report.rows[2].seed, 1);
        assert_eq!(report.rows[4].value, 0.8e6);
    }

    #[test]
    fn single_cell_reduces_to_one_aggregate() {
        let mut spec = tiny_spec();
        spec.sweep.values = vec![0.6e6];
        spec.seeds = vec![0];
        spec.schemes = vec![Scheme::Proposed];
        let report = run_experiment(&spec).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert_eq!(report.aggregates.len(), 1);
        assert_eq!(report.aggregates[0].mean_qoe, report.rows[0].mean_qoe);
        assert_eq!(report.aggregates[0].std_qoe, 0.0);
        assert_eq!(report.aggregates[0].runs, 1);
    }

    #[test]
    fn failed_cells_recorded_and_sweep_continues() {
        let mut spec = tiny_spec();
        spec.sweep.values = vec![0.6e6, -1.0];
        let report = run_experiment(&spec).unwrap();
        assert_eq!(report.rows.len(), 8);
        let failed = report.failed();
        assert_eq!(failed.len(), 4);
        assert!(failed.iter().all(|r| r.value == -1.0));
        assert!(failed[0].error.as_ref().unwrap().contains("total_bandwidth_hz"));
        let agg = report
            .aggregates
            .iter()
            .find(|a| a.value == -1.0)
            .unwrap();
        assert_eq!(agg.runs, 0);
        assert_eq!(agg.mean_qoe, 0.0);
    }

    #[test]
    fn rerun_and_parallelism_are_deterministic() {
        let mut spec = tiny_spec();
        spec.parallel = 1;
        let serial = run_experiment(&spec).unwrap();
        spec.parallel = 4;
        let parallel = run_experiment(&spec).unwrap();
        assert_eq!(serial, parallel);
        let again = run_experiment(&spec).unwrap();
        assert_eq!(parallel, again);

        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let wrote_a = export_metrics(&serial, dir_a.path(), &spec.formats).unwrap();
        let wrote_b = export_metrics(&parallel, dir_b.path(), &spec.formats).unwrap();
        assert_eq!(wrote_a.len(), wrote_b.len());
        for (a, b) in wrote_a.iter().zip(&wrote_b) {
            assert_eq!(
                std::fs::read(a).unwrap(),
                std::fs::read(b).unwrap(),
                "{a:?} differs"
            );
        }
    }

    #[test]
    fn csv_round_trip_and_aggregate_consistency() {
        let mut spec = tiny_spec();
        spec.sweep.values = vec![0.6e6, -1.0];
        let report = run_experiment(&spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        export_metrics(&report, dir.path(), &[ExportFormat::Csv, ExportFormat::JsonLines])
            .unwrap();
        let parsed = parse_runs_csv(&dir.path().join("runs.csv")).unwrap();
        assert_eq!(parsed, report.rows);
        // Aggregates recomputed from the exported rows match within 1e-12.
        for a in &report.aggregates {
            let qoe: Vec<f64> = parsed
                .iter()
                .filter(|r| r.value == a.value && r.scheme == a.scheme && r.error.is_none())
                .map(|r| r.mean_qoe)
                .collect();
            if qoe.is_empty() {
                assert_eq!(a.runs, 0);
                continue;
            }
            let mean = qoe.iter().sum::<f64>() / qoe.len() as f64;
            let std =
                (qoe.iter().map(|q| (q - mean).powi(2)).sum::<f64>() / qoe.len() as f64).sqrt();
            assert!((mean - a.mean_qoe).abs() < 1e-12);
            assert!((std - a.std_qoe).abs() < 1e-12);
        }
        let lines = |name: &str| {
            std::fs::read_to_string(dir.path().join(name))
                .unwrap()
                .lines()
                .count()
        };
        assert_eq!(lines("runs.jsonl"), report.rows.len());
        assert_eq!(lines("slots.jsonl"), report.slots.len());
        assert_eq!(lines("aggregates.jsonl"), report.aggregates.len());
    }

    #[test]
    fn empty_report_exports_header_only_csv() {
        let report = SweepReport {
            rows: Vec::new(),
            slots: Vec::new(),
            aggregates: Vec::new(),
        };
        let dir = tempfile::tempdir().unwrap();
        export_metrics(&report, dir.path(), &[ExportFormat::Csv]).unwrap();
        let text = std::fs::read_to_string(dir.path().join("runs.csv")).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("value,seed,scheme"));
        assert!(parse_runs_csv(&dir.path().join("runs.csv")).unwrap().is_empty());
    }

    #[test]
    fn apply_parameter_handles_integers_and_unknown_paths() {
        let scenario = ScenarioConfig::default();
        let sim = SimConfig::default();
        let (_, sim2) = apply_parameter(&scenario, &sim, "sim.horizon", 50.0).unwrap();
        assert_eq!(sim2.horizon, 50);
        let (scn2, _) = apply_parameter(&scenario, &sim, "scenario.users", 7.0).unwrap();
        assert_eq!(scn2.users, 7);
        let err = apply_parameter(&scenario, &sim, "scenario.nope", 1.0).unwrap_err();
        assert!(err.to_string().contains("scenario.nope"));
        let err = apply_parameter(&scenario, &sim, "sim.horizon", 3.5).unwrap_err();
        assert!(err.to_string().contains("integer"));
    }

    #[test]
    fn paired_comparison_counts_wins() {
        let spec = tiny_spec();
        let report = run_experiment(&spec).unwrap();
        let pairs = paired_comparisons(&report);
        assert_eq!(pairs.len(), 2);
        for p in &pairs {
            assert_eq!(p.pairs, 2);
            assert!(p.wins_a <= p.pairs);
        }
    }
}
