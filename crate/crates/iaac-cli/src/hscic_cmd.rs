//! `hscic-test`: kernel conditional-independence screening over a
//! directory of generated instances.
//!
//! Every instance in the directory is tested against a set of signal
//! rows: its own channel at each generated noise level, plus synthetic
//! controls (constant, pure noise, ground state). One JSON report per
//! (instance, row) pair lands in `reports/`, with flat `rows.csv` and
//! per-row `summary.csv` tables beside them.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use iaac::envs::TabularEnv;
use iaac::hscic::{
    collect_hscic_samples, permutation_test, HscicReport, InfoMode, KernelConfig,
    DEFAULT_HISTORY_WINDOW,
};
use iaac::rng::{derive_seed, stream};

use crate::config::load_instance;
use crate::error::{io_err, CliError};
use crate::manifest::{config_hash, write_manifest, RunManifest};
use crate::pool;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "row", rename_all = "kebab-case", deny_unknown_fields)]
pub enum HscicRow {
    /// Constant pseudo-signal; the degenerate control.
    Constant,
    /// One-hot ground state in place of the signal.
    State,
    /// Independent normal noise of the given width in place of the signal.
    Noise { dim: usize },
    /// The instance's own channel at the given generated noise level.
    Env { noise: f64 },
}

impl HscicRow {
    pub fn mode(&self) -> InfoMode {
        match self {
            HscicRow::Constant => InfoMode::Constant,
            HscicRow::State => InfoMode::StateFeatures,
            HscicRow::Noise { dim } => InfoMode::Noise { dim: *dim },
            HscicRow::Env { .. } => InfoMode::FromEnv,
        }
    }
}

impl fmt::Display for HscicRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HscicRow::Constant => write!(f, "constant"),
            HscicRow::State => write!(f, "state"),
            HscicRow::Noise { dim } => write!(f, "noise{dim}"),
            HscicRow::Env { noise } => write!(f, "env{noise}"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HscicTestConfig {
    pub instances_dir: String,
    pub episodes: usize,
    pub horizon: usize,
    pub window: usize,
    pub kernel: KernelConfig,
    pub permutations: usize,
    pub rows: Vec<HscicRow>,
    pub seed: u64,
    pub out_dir: String,
}

impl Default for HscicTestConfig {
    fn default() -> Self {
        HscicTestConfig {
            instances_dir: "out/instances".into(),
            episodes: 25,
            horizon: 20,
            window: DEFAULT_HISTORY_WINDOW,
            kernel: KernelConfig::default(),
            permutations: 30,
            rows: vec![
                HscicRow::Constant,
                HscicRow::Env { noise: 0.0 },
                HscicRow::Env { noise: 0.1 },
                HscicRow::Env { noise: 0.5 },
                HscicRow::Env { noise: 0.9 },
                HscicRow::State,
            ],
            seed: 0,
            out_dir: "out/hscic".into(),
        }
    }
}

/// One (instance, row) test outcome; the JSON written under `reports/`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceRowReport {
    pub instance: String,
    pub row: String,
    pub episodes: usize,
    pub horizon: usize,
    pub window: usize,
    pub n: usize,
    pub report: HscicReport,
}

/// Instance files found in a directory, grouped by instance index and
/// sorted by noise level within each group.
pub fn scan_instances(dir: &Path) -> Result<BTreeMap<String, Vec<(f64, PathBuf)>>, CliError> {
    let mut groups: BTreeMap<String, Vec<(f64, PathBuf)>> = BTreeMap::new();
    let entries = fs::read_dir(dir).map_err(|e| io_err(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| io_err(dir, e))?;
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        let Some(stem) = name.strip_suffix(".json") else { continue };
        let Some(rest) = stem.strip_prefix("inst") else { continue };
        let Some((idx, noise_str)) = rest.split_once("-noise") else { continue };
        let Ok(noise) = noise_str.parse::<f64>() else { continue };
        groups
            .entry(format!("inst{idx}"))
            .or_default()
            .push((noise, entry.path()));
    }
    for files in groups.values_mut() {
        files.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    Ok(groups)
}

fn pick_file<'a>(
    group: &str,
    files: &'a [(f64, PathBuf)],
    row: &HscicRow,
) -> Result<&'a Path, CliError> {
    match row {
        // Rows that ignore the emitted signal run on the lowest-noise file;
        // dynamics are identical across the ladder anyway.
        HscicRow::Constant | HscicRow::State | HscicRow::Noise { .. } => {
            Ok(files[0].1.as_path())
        }
        HscicRow::Env { noise } => {
            let want = format!("{noise}");
            files
                .iter()
                .find(|(n, _)| format!("{n}") == want)
                .map(|(_, p)| p.as_path())
                .ok_or_else(|| {
                    CliError::Config(format!(
                        "{group} has no file at noise level {want}; generate it first"
                    ))
                })
        }
    }
}

pub fn run(config: &HscicTestConfig) -> Result<RunManifest, CliError> {
    if config.episodes == 0 || config.horizon == 0 {
        return Err(CliError::Config("episodes and horizon must be positive".into()));
    }
    if config.permutations == 0 {
        return Err(CliError::Config("permutations must be positive".into()));
    }
    if config.rows.is_empty() {
        return Err(CliError::Config("rows must not be empty".into()));
    }
    let groups = scan_instances(Path::new(&config.instances_dir))?;
    if groups.is_empty() {
        return Err(CliError::Config(format!(
            "no instance files (inst*-noise*.json) under {}",
            config.instances_dir
        )));
    }

    let dir = PathBuf::from(&config.out_dir);
    let reports_dir = dir.join("reports");
    fs::create_dir_all(&reports_dir).map_err(|e| io_err(&reports_dir, e))?;

    // One task per (instance, row); each writes its own report JSON.
    let mut jobs: Vec<(String, String, PathBuf)> = Vec::new();
    let mut tasks: Vec<Box<dyn FnOnce() -> Result<(), CliError> + Send + '_>> = Vec::new();
    for (group, files) in &groups {
        for row in &config.rows {
            let row_label = row.to_string();
            let report_rel = PathBuf::from("reports").join(format!("{group}-{row_label}.json"));
            jobs.push((group.clone(), row_label.clone(), report_rel.clone()));
            let instance_path = pick_file(group, files, row)?.to_path_buf();
            let report_path = dir.join(&report_rel);
            let row = row.clone();
            let group = group.clone();
            tasks.push(Box::new(move || {
                one_report(config, &group, &row, &row_label, &instance_path, &report_path)
            }));
        }
    }
    pool::run_tasks(tasks)?;

    // CSVs are rebuilt from the reports in scan order, so worker
    // scheduling never shows up in the output bytes.
    let mut rows_csv = String::from("instance,row,n,statistic,p_value\n");
    let mut by_row: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    let mut row_order: Vec<String> = Vec::new();
    for (group, row_label, rel) in &jobs {
        let path = dir.join(rel);
        let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        let report: InstanceRowReport = serde_json::from_str(&text)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        rows_csv.push_str(&format!(
            "{group},{row_label},{},{},{}\n",
            report.n, report.report.mean_statistic, report.report.p_value
        ));
        if !row_order.contains(row_label) {
            row_order.push(row_label.clone());
        }
        by_row
            .entry(row_label.clone())
            .or_default()
            .push((report.report.mean_statistic, report.report.p_value));
    }

    let mut summary_csv =
        String::from("row,instances,mean_statistic,sd_statistic,mean_p,sd_p\n");
    for label in &row_order {
        let vals = &by_row[label];
        let stats: Vec<f64> = vals.iter().map(|v| v.0).collect();
        let ps: Vec<f64> = vals.iter().map(|v| v.1).collect();
        let (ms, ss) = mean_sd(&stats);
        let (mp, sp) = mean_sd(&ps);
        summary_csv.push_str(&format!("{label},{},{ms},{ss},{mp},{sp}\n", vals.len()));
    }

    let rows_path = dir.join("rows.csv");
    fs::write(&rows_path, rows_csv).map_err(|e| io_err(&rows_path, e))?;
    let summary_path = dir.join("summary.csv");
    fs::write(&summary_path, summary_csv).map_err(|e| io_err(&summary_path, e))?;

    let mut outputs: Vec<PathBuf> = jobs.into_iter().map(|(_, _, rel)| rel).collect();
    outputs.push(PathBuf::from("rows.csv"));
    outputs.push(PathBuf::from("summary.csv"));
    write_manifest(&dir, "hscic-test", config_hash(config)?, config.seed, &outputs)
}

fn one_report(
    config: &HscicTestConfig,
    group: &str,
    row: &HscicRow,
    row_label: &str,
    instance_path: &Path,
    report_path: &Path,
) -> Result<(), CliError> {
    let model = load_instance(instance_path)?;
    let discount = model.discount();
    let mut env = TabularEnv::new(model, config.horizon);
    let label = format!("hscic/{group}/{row_label}");
    let mut rng = stream(config.seed, &label);
    let samples = collect_hscic_samples(
        &mut env,
        config.episodes,
        config.horizon,
        discount,
        config.window,
        &row.mode(),
        &mut rng,
    );
    let report = permutation_test(
        &samples,
        &config.kernel,
        config.permutations,
        derive_seed(config.seed, &label),
    )
    .map_err(|e| CliError::Runtime(format!("{group}/{row_label}: {e}")))?;
    let out = InstanceRowReport {
        instance: group.to_string(),
        row: row_label.to_string(),
        episodes: config.episodes,
        horizon: config.horizon,
        window: config.window,
        n: samples.len(),
        report,
    };
    let text =
        serde_json::to_string_pretty(&out).map_err(|e| CliError::Runtime(e.to_string()))?;
    fs::write(report_path, text).map_err(|e| io_err(report_path, e))
}

/// Mean and sample (n-1) standard deviation; a single value has sd 0.
fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
