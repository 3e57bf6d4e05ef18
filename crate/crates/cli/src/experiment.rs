//! Figure presets and the end-to-end experiment runner.

use std::fs;
use std::path::{Path, PathBuf};

use risbackcom::montecarlo::{self, sweep, AggregateReport, AxisValue, SweepAxis};
use risbackcom::scenario::{db_to_linear, dbm_to_watts, linear_to_db, watts_to_dbm, PhaseDesign, Scenario};

use crate::config::{CustomSweep, ExperimentKind, ResolvedConfig};
use crate::error::CliError;
use crate::output::{fmt_sig, plot_script, Table};

pub const DEFAULT_SEED: u64 = 1;

/// CE power of the fig4 preset, dBm.
pub const FIG4_CE_POWER_DBM: f64 = 35.0;
/// Reflection-coefficient pairs swept by the success-probability preset.
pub const FIG4_GAMMA_PAIRS: [(f64, f64); 3] = [(0.8, 0.3), (0.8, 0.5), (0.6, 0.3)];
pub const FIG5_THRESHOLD_DB: f64 = 15.0;
pub const FIG5_CE_POWERS_DBM: [f64; 2] = [30.0, 35.0];
pub const FIG6_CE_POWER_DBM: f64 = 30.0;
pub const FIG6_EFFICIENCIES: [f64; 3] = [0.1, 0.2, 0.3];

pub fn fig4_thresholds_db() -> Vec<f64> {
    (0..=25).map(f64::from).collect()
}

pub fn fig5_elements() -> Vec<usize> {
    (1..=10).map(|i| 10 * i).collect()
}

pub fn fig6_elements() -> Vec<usize> {
    (1..=6).map(|i| 25 * i).collect()
}

pub const FIG4_HEADER: [&str; 10] = [
    "gamma1", "gamma2", "n_elements", "tau_db", "sp_strong", "sp_strong_ci", "sp_weak", "sp_weak_ci",
    "sp_joint", "sp_joint_ci",
];
pub const FIG5_HEADER: [&str; 7] = [
    "ce_power_dbm",
    "n_elements",
    "design",
    "throughput_gated",
    "throughput_gated_ci",
    "throughput_ungated",
    "throughput_ungated_ci",
];
pub const FIG6_HEADER: [&str; 6] = [
    "efficiency",
    "n_elements",
    "energy_mean_bd_j",
    "energy_mean_bd_ci",
    "energy_total_j",
    "energy_total_ci",
];
pub const CUSTOM_HEADER: [&str; 14] = [
    "axis",
    "axis_value",
    "sp_strong",
    "sp_strong_ci",
    "sp_weak",
    "sp_weak_ci",
    "sp_joint",
    "sp_joint_ci",
    "throughput_gated",
    "throughput_gated_ci",
    "throughput_ungated",
    "throughput_ungated_ci",
    "energy_total_j",
    "energy_total_ci",
];

pub fn default_trials(kind: ExperimentKind) -> usize {
    match kind {
        ExperimentKind::Fig4 => montecarlo::DEFAULT_TRIALS_SUCCESS,
        _ => montecarlo::DEFAULT_TRIALS_THROUGHPUT,
    }
}

/// Success-probability curves over τ for each Γ pair, with and without the RIS.
pub fn fig4_table(base: &Scenario, trials: usize, seed: u64) -> Result<Table, CliError> {
    let base = Scenario {
        ce_power: dbm_to_watts(FIG4_CE_POWER_DBM),
        ..base.clone()
    };
    let taus_db = fig4_thresholds_db();
    let axis = SweepAxis::Tau(taus_db.iter().map(|&t| db_to_linear(t)).collect());
    let mut sizes = vec![0, base.n_elements];
    sizes.dedup();

    let mut table = Table::new(&FIG4_HEADER);
    for (g1, g2) in FIG4_GAMMA_PAIRS {
        for &n in &sizes {
            let s = Scenario {
                gamma1: g1,
                gamma2: g2,
                n_elements: n,
                ..base.clone()
            };
            for (point, tau_db) in sweep(&s, &axis, trials, seed)?.into_iter().zip(&taus_db) {
                let r = &point.report;
                table.push(vec![
                    fmt_sig(g1),
                    fmt_sig(g2),
                    n.to_string(),
                    fmt_sig(*tau_db),
                    fmt_sig(r.success_strong.mean),
                    fmt_sig(r.success_strong.ci_half_width),
                    fmt_sig(r.success_weak.mean),
                    fmt_sig(r.success_weak.ci_half_width),
                    fmt_sig(r.success_joint.mean),
                    fmt_sig(r.success_joint.ci_half_width),
                ]);
            }
        }
    }
    Ok(table)
}

/// Cluster throughput over N for every phase design at both preset powers.
pub fn fig5_table(base: &Scenario, trials: usize, seed: u64) -> Result<Table, CliError> {
    let axis = SweepAxis::NElements(fig5_elements());
    let mut table = Table::new(&FIG5_HEADER);
    for p_dbm in FIG5_CE_POWERS_DBM {
        for design in PhaseDesign::ALL {
            let s = Scenario {
                ce_power: dbm_to_watts(p_dbm),
                sinr_threshold: db_to_linear(FIG5_THRESHOLD_DB),
                phase_design: design,
                ..base.clone()
            };
            for point in sweep(&s, &axis, trials, seed)? {
                let AxisValue::NElements(n) = point.value else {
                    unreachable!("N sweep yields N values")
                };
                let r = &point.report;
                table.push(vec![
                    fmt_sig(p_dbm),
                    n.to_string(),
                    design.to_string(),
                    fmt_sig(r.throughput_gated.mean),
                    fmt_sig(r.throughput_gated.ci_half_width),
                    fmt_sig(r.throughput_ungated.mean),
                    fmt_sig(r.throughput_ungated.ci_half_width),
                ]);
            }
        }
    }
    Ok(table)
}

/// Harvested energy over N for each conversion efficiency.
pub fn fig6_table(base: &Scenario, trials: usize, seed: u64) -> Result<Table, CliError> {
    let axis = SweepAxis::NElements(fig6_elements());
    let k = base.n_bds() as f64;
    let mut table = Table::new(&FIG6_HEADER);
    for eta in FIG6_EFFICIENCIES {
        let s = Scenario {
            ce_power: dbm_to_watts(FIG6_CE_POWER_DBM),
            conversion_efficiency: eta,
            ..base.clone()
        };
        for point in sweep(&s, &axis, trials, seed)? {
            let AxisValue::NElements(n) = point.value else {
                unreachable!("N sweep yields N values")
            };
            let e = point.report.energy_total;
            table.push(vec![
                fmt_sig(eta),
                n.to_string(),
                fmt_sig(e.mean / k),
                fmt_sig(e.ci_half_width / k),
                fmt_sig(e.mean),
                fmt_sig(e.ci_half_width),
            ]);
        }
    }
    Ok(table)
}

fn custom_axis(sweep: &CustomSweep) -> SweepAxis {
    match sweep {
        CustomSweep::Tau(v) => SweepAxis::Tau(v.iter().map(|&d| db_to_linear(d)).collect()),
        CustomSweep::NElements(v) => SweepAxis::NElements(v.clone()),
        CustomSweep::CePower(v) => SweepAxis::CePower(v.iter().map(|&d| dbm_to_watts(d)).collect()),
        CustomSweep::GammaPair(v) => SweepAxis::GammaPair(v.clone()),
        CustomSweep::Efficiency(v) => SweepAxis::Efficiency(v.clone()),
    }
}

fn axis_label(value: AxisValue) -> String {
    match value {
        AxisValue::Tau(t) => fmt_sig(linear_to_db(t)),
        AxisValue::NElements(n) => n.to_string(),
        AxisValue::CePower(p) => fmt_sig(watts_to_dbm(p)),
        AxisValue::GammaPair(a, b) => format!("{}/{}", fmt_sig(a), fmt_sig(b)),
        AxisValue::Efficiency(e) => fmt_sig(e),
    }
}

fn report_row(axis: &str, label: String, r: &AggregateReport) -> Vec<String> {
    let mut row = vec![axis.to_string(), label];
    for e in [
        r.success_strong,
        r.success_weak,
        r.success_joint,
        r.throughput_gated,
        r.throughput_ungated,
        r.energy_total,
    ] {
        row.push(fmt_sig(e.mean));
        row.push(fmt_sig(e.ci_half_width));
    }
    row
}

/// One row per value of the configured sweep axis.
pub fn custom_table(base: &Scenario, sweep_spec: &CustomSweep, trials: usize, seed: u64) -> Result<Table, CliError> {
    let axis = custom_axis(sweep_spec);
    let mut table = Table::new(&CUSTOM_HEADER);
    for point in sweep(base, &axis, trials, seed)? {
        table.push(report_row(axis.name(), axis_label(point.value), &point.report));
    }
    Ok(table)
}

/// Everything needed to run one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub config_path: PathBuf,
    /// Overrides `experiment.kind` from the config file.
    pub kind: Option<ExperimentKind>,
    pub seed: Option<u64>,
    pub n_trials: Option<usize>,
    pub out_dir: PathBuf,
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
}

/// Fully resolved run: configuration plus effective experiment settings.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedRun {
    pub config: ResolvedConfig,
    pub kind: ExperimentKind,
    pub seed: u64,
    pub trials: usize,
}

pub fn prepare(spec: &ExperimentSpec) -> Result<PreparedRun, CliError> {
    let mut config = ResolvedConfig::load(&spec.config_path)?;
    let kind = spec
        .kind
        .or(config.experiment.kind)
        .ok_or_else(|| CliError::Config("experiment kind: pass --kind or set experiment.kind".into()))?;
    let seed = spec.seed.or(config.experiment.seed).unwrap_or(DEFAULT_SEED);
    let trials = spec
        .n_trials
        .or(config.experiment.trials)
        .unwrap_or_else(|| default_trials(kind));
    if trials == 0 {
        return Err(CliError::Config("trials: must be at least 1".into()));
    }
    if kind == ExperimentKind::Custom {
        match &config.experiment.sweep {
            None => {
                return Err(CliError::Config(
                    "experiment.axis: custom experiments need experiment.axis and experiment.values".into(),
                ))
            }
            Some(s) if s.is_empty() => {
                return Err(CliError::Config("experiment.values: must not be empty".into()))
            }
            Some(_) => {}
        }
        // Check every sweep point against the scenario invariants up front.
        let base = config.scenario()?;
        let axis = custom_axis(config.experiment.sweep.as_ref().expect("checked above"));
        for v in axis.values() {
            v.apply(&base)
                .validate()
                .map_err(|e| CliError::Config(format!("experiment.values: {e}")))?;
        }
    }
    config.experiment.kind = Some(kind);
    config.experiment.seed = Some(seed);
    config.experiment.trials = Some(trials);
    Ok(PreparedRun {
        config,
        kind,
        seed,
        trials,
    })
}

fn preset_note(kind: ExperimentKind) -> String {
    match kind {
        ExperimentKind::Fig4 => format!(
            "# Preset fig4 pins ce_power_dbm = {FIG4_CE_POWER_DBM:?}, tau_db = 0..25 step 1, \
             (gamma1, gamma2) in {FIG4_GAMMA_PAIRS:?}, n_elements in {{0, n_elements}}.\n"
        ),
        ExperimentKind::Fig5 => format!(
            "# Preset fig5 pins sinr_threshold_db = {FIG5_THRESHOLD_DB:?}, ce_power_dbm in {FIG5_CE_POWERS_DBM:?}, \
             n_elements in {:?}, phase_design in all designs.\n",
            fig5_elements()
        ),
        ExperimentKind::Fig6 => format!(
            "# Preset fig6 pins ce_power_dbm = {FIG6_CE_POWER_DBM:?}, n_elements in {:?}, \
             conversion_efficiency in {FIG6_EFFICIENCIES:?}.\n",
            fig6_elements()
        ),
        ExperimentKind::Custom => String::new(),
    }
}

/// Output files of a run, in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub files: Vec<(String, String)>,
}

pub fn compute(run: &PreparedRun) -> Result<Artifacts, CliError> {
    let base = run.config.scenario()?;
    let table = match run.kind {
        ExperimentKind::Fig4 => fig4_table(&base, run.trials, run.seed)?,
        ExperimentKind::Fig5 => fig5_table(&base, run.trials, run.seed)?,
        ExperimentKind::Fig6 => fig6_table(&base, run.trials, run.seed)?,
        ExperimentKind::Custom => {
            let sweep = run.config.experiment.sweep.as_ref().expect("validated by prepare");
            custom_table(&base, sweep, run.trials, run.seed)?
        }
    };
    let name = run.kind.as_str();
    let csv_name = format!("{name}.csv");
    Ok(Artifacts {
        files: vec![
            (
                "resolved_config.toml".to_string(),
                format!("{}{}", preset_note(run.kind), run.config.echo()),
            ),
            (csv_name.clone(), table.to_csv()),
            (format!("plot_{name}.py"), plot_script(name, &csv_name)),
        ],
    })
}

fn write_all(out_dir: &Path, artifacts: &Artifacts) -> Result<Vec<PathBuf>, CliError> {
    let created_dir = !out_dir.exists();
    let mut written = Vec::new();
    let result = (|| {
        fs::create_dir_all(out_dir)?;
        for (name, contents) in &artifacts.files {
            let path = out_dir.join(name);
            fs::write(&path, contents)?;
            written.push(path);
        }
        Ok::<_, std::io::Error>(())
    })();
    match result {
        Ok(()) => Ok(written),
        Err(e) => {
            for path in &written {
                let _ = fs::remove_file(path);
            }
            if created_dir {
                let _ = fs::remove_dir(out_dir);
            }
            Err(CliError::Runtime(format!("writing to {}: {e}", out_dir.display())))
        }
    }
}

/// Resolve, simulate, and write the echo, CSV and plot script. Nothing is
/// written unless the whole run succeeds.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<PathBuf>, CliError> {
    let run = prepare(spec)?;
    let artifacts = match spec.workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            pool.install(|| compute(&run))?
        }
        None => compute(&run)?,
    };
    write_all(&spec.out_dir, &artifacts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_grids() {
        assert_eq!(fig4_thresholds_db().len(), 26);
        assert_eq!(fig5_elements(), vec![10, 20, 30, 40, 50, 60, 70, 80, 90, 100]);
        assert_eq!(fig6_elements(), vec![25, 50, 75, 100, 125, 150]);
    }

    #[test]
    fn fig4_row_count() {
        let base = Scenario {
            n_elements: 4,
            ..Scenario::default()
        };
        let t = fig4_table(&base, 20, 1).unwrap();
        assert_eq!(t.rows.len(), 26 * 3 * 2);
        assert_eq!(t.header, FIG4_HEADER.to_vec());
    }

    #[test]
    fn custom_labels_use_config_units() {
        assert_eq!(axis_label(AxisValue::CePower(1.0)), "30");
        assert_eq!(axis_label(AxisValue::Tau(100.0)), "20");
        assert_eq!(axis_label(AxisValue::GammaPair(0.8, 0.3)), "0.8/0.3");
    }
}
