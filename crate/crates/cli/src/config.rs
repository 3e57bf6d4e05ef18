//! TOML experiment configuration.
//!
//! Every key is optional; absent keys take documented defaults and are
//! recorded in the `defaulted` list of the resolved echo. Powers are given in
//! dBm, the Rician factor and SINR threshold in dB; [`ResolvedConfig::scenario`]
//! converts to linear/SI. Unknown keys are rejected.

use std::fmt::Write as _;
use std::path::Path;

use risbackcom::scenario::{
    self, db_to_linear, dbm_to_watts, Corridor, FadingSpec, PhaseDesign, Position2D, Scenario,
    TrainingPhasePolicy,
};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Fig4,
    Fig5,
    Fig6,
    Custom,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Fig4 => "fig4",
            ExperimentKind::Fig5 => "fig5",
            ExperimentKind::Fig6 => "fig6",
            ExperimentKind::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "fig4" => Some(Self::Fig4),
            "fig5" => Some(Self::Fig5),
            "fig6" => Some(Self::Fig6),
            "custom" => Some(Self::Custom),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum FadingKindName {
    Rayleigh,
    Rician,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum PhaseDesignName {
    Random,
    ForwardAligned,
    CoordinateAscent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum TrainingPolicyName {
    ReferenceZero,
    PerBdAligned,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FadingFile {
    kind: Option<FadingKindName>,
    rician_factor_db: Option<f64>,
    path_loss_exponent: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentFile {
    kind: Option<ExperimentKind>,
    seed: Option<u64>,
    trials: Option<usize>,
    axis: Option<String>,
    values: Option<Vec<toml::Value>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    defaulted: Option<Vec<String>>,
    ce_pos: Option<[f64; 2]>,
    br_pos: Option<[f64; 2]>,
    ris_pos: Option<[f64; 2]>,
    bd_positions: Option<Vec<[f64; 2]>>,
    bd_corridor_x: Option<[f64; 2]>,
    bd_corridor_y: Option<f64>,
    n_elements: Option<usize>,
    ce_power_dbm: Option<f64>,
    noise_power_dbm: Option<f64>,
    gamma1: Option<f64>,
    gamma2: Option<f64>,
    sinr_threshold_db: Option<f64>,
    phase_design: Option<PhaseDesignName>,
    ascent_sweeps: Option<usize>,
    phase_bits: Option<u32>,
    training_phase_policy: Option<TrainingPolicyName>,
    slot_duration_s: Option<f64>,
    n_frames: Option<usize>,
    conversion_efficiency: Option<f64>,
    n_transmission_slots: Option<usize>,
    ris_link_fading: Option<FadingFile>,
    other_link_fading: Option<FadingFile>,
    experiment: Option<ExperimentFile>,
}

/// A fading class in configuration units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingConfig {
    pub rician: bool,
    pub rician_factor_db: f64,
    pub path_loss_exponent: f64,
}

impl FadingConfig {
    fn to_spec(self) -> FadingSpec {
        if self.rician {
            FadingSpec::rician(db_to_linear(self.rician_factor_db), self.path_loss_exponent)
        } else {
            FadingSpec::rayleigh(self.path_loss_exponent)
        }
    }
}

/// Sweep requested by a `custom` experiment, in configuration units.
#[derive(Debug, Clone, PartialEq)]
pub enum CustomSweep {
    /// dB
    Tau(Vec<f64>),
    NElements(Vec<usize>),
    /// dBm
    CePower(Vec<f64>),
    GammaPair(Vec<(f64, f64)>),
    Efficiency(Vec<f64>),
}

impl CustomSweep {
    pub fn axis_name(&self) -> &'static str {
        match self {
            CustomSweep::Tau(_) => "tau",
            CustomSweep::NElements(_) => "n_elements",
            CustomSweep::CePower(_) => "ce_power",
            CustomSweep::GammaPair(_) => "gamma_pair",
            CustomSweep::Efficiency(_) => "efficiency",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            CustomSweep::Tau(v) | CustomSweep::CePower(v) | CustomSweep::Efficiency(v) => v.len(),
            CustomSweep::NElements(v) => v.len(),
            CustomSweep::GammaPair(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Experiment selection stored alongside the scenario.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentSettings {
    pub kind: Option<ExperimentKind>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub sweep: Option<CustomSweep>,
}

/// Fully materialized configuration in configuration units.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub defaulted: Vec<String>,
    pub ce_pos: [f64; 2],
    pub br_pos: [f64; 2],
    pub ris_pos: [f64; 2],
    pub bd_positions: Vec<[f64; 2]>,
    pub bd_corridor_x: [f64; 2],
    pub bd_corridor_y: f64,
    pub n_elements: usize,
    pub ce_power_dbm: f64,
    pub noise_power_dbm: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub sinr_threshold_db: f64,
    pub phase_design: PhaseDesign,
    pub ascent_sweeps: usize,
    pub phase_bits: Option<u32>,
    pub training_phase_policy: TrainingPhasePolicy,
    pub slot_duration_s: f64,
    pub n_frames: usize,
    pub conversion_efficiency: f64,
    pub n_transmission_slots: usize,
    pub ris_link_fading: FadingConfig,
    pub other_link_fading: FadingConfig,
    pub experiment: ExperimentSettings,
}

fn pos(p: [f64; 2]) -> Position2D {
    Position2D::new(p[0], p[1])
}

fn parse_sweep(axis: &str, values: &[toml::Value]) -> Result<CustomSweep, CliError> {
    let bad = |what: &str| CliError::Config(format!("experiment.values: expected {what} for axis `{axis}`"));
    let floats = || -> Result<Vec<f64>, CliError> {
        values
            .iter()
            .map(|v| match v {
                toml::Value::Float(f) => Ok(*f),
                toml::Value::Integer(i) => Ok(*i as f64),
                _ => Err(bad("numbers")),
            })
            .collect()
    };
    Ok(match axis {
        "tau" => CustomSweep::Tau(floats()?),
        "ce_power" => CustomSweep::CePower(floats()?),
        "efficiency" => CustomSweep::Efficiency(floats()?),
        "n_elements" => CustomSweep::NElements(
            values
                .iter()
                .map(|v| match v {
                    toml::Value::Integer(i) if *i >= 0 => Ok(*i as usize),
                    _ => Err(bad("non-negative integers")),
                })
                .collect::<Result<_, _>>()?,
        ),
        "gamma_pair" => CustomSweep::GammaPair(
            values
                .iter()
                .map(|v| {
                    let arr = v.as_array().filter(|a| a.len() == 2).ok_or_else(|| bad("[gamma1, gamma2] pairs"))?;
                    let num = |x: &toml::Value| x.as_float().or_else(|| x.as_integer().map(|i| i as f64));
                    match (num(&arr[0]), num(&arr[1])) {
                        (Some(a), Some(b)) => Ok((a, b)),
                        _ => Err(bad("[gamma1, gamma2] pairs")),
                    }
                })
                .collect::<Result<_, _>>()?,
        ),
        other => {
            return Err(CliError::Config(format!(
                "experiment.axis: unknown axis `{other}` (expected tau, n_elements, ce_power, gamma_pair or efficiency)"
            )))
        }
    })
}

fn resolve_fading(
    file: Option<FadingFile>,
    prefix: &str,
    default: FadingConfig,
    defaulted: &mut Vec<String>,
) -> FadingConfig {
    let file = file.unwrap_or_default();
    let rician = match file.kind {
        Some(k) => k == FadingKindName::Rician,
        None => {
            defaulted.push(format!("{prefix}.kind"));
            default.rician
        }
    };
    let mut take = |name: &str, v: Option<f64>, d: f64| {
        v.unwrap_or_else(|| {
            defaulted.push(format!("{prefix}.{name}"));
            d
        })
    };
    let path_loss_exponent = take("path_loss_exponent", file.path_loss_exponent, default.path_loss_exponent);
    let rician_factor_db = if rician {
        take("rician_factor_db", file.rician_factor_db, default.rician_factor_db)
    } else {
        file.rician_factor_db.unwrap_or(default.rician_factor_db)
    };
    FadingConfig {
        rician,
        rician_factor_db,
        path_loss_exponent,
    }
}

impl ResolvedConfig {
    pub fn from_toml_str(text: &str) -> Result<ResolvedConfig, CliError> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        Self::resolve(file)
    }

    pub fn load(path: &Path) -> Result<ResolvedConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    fn resolve(file: ConfigFile) -> Result<ResolvedConfig, CliError> {
        let mut defaulted: Vec<String> = file.defaulted.clone().unwrap_or_default();
        macro_rules! take {
            ($field:ident, $default:expr) => {
                match file.$field {
                    Some(v) => v,
                    None => {
                        defaulted.push(stringify!($field).to_string());
                        $default
                    }
                }
            };
        }
        let p = |p: Position2D| [p.x, p.y];
        let corridor = Corridor::default();

        let ce_pos = take!(ce_pos, p(scenario::DEFAULT_CE_POSITION));
        let br_pos = take!(br_pos, p(scenario::DEFAULT_BR_POSITION));
        let ris_pos = take!(ris_pos, p(scenario::DEFAULT_RIS_POSITION));
        let bd_positions = take!(
            bd_positions,
            scenario::DEFAULT_BD_POSITIONS.iter().map(|&b| p(b)).collect()
        );
        let bd_corridor_x = take!(bd_corridor_x, [corridor.x_min, corridor.x_max]);
        let bd_corridor_y = take!(bd_corridor_y, corridor.y);
        let n_elements = take!(n_elements, scenario::DEFAULT_N_ELEMENTS);
        let ce_power_dbm = take!(ce_power_dbm, scenario::DEFAULT_CE_POWER_DBM);
        let noise_power_dbm = take!(noise_power_dbm, scenario::DEFAULT_NOISE_POWER_DBM);
        let gamma1 = take!(gamma1, scenario::DEFAULT_GAMMA1);
        let gamma2 = take!(gamma2, scenario::DEFAULT_GAMMA2);
        let sinr_threshold_db = take!(sinr_threshold_db, scenario::DEFAULT_SINR_THRESHOLD_DB);
        let phase_design = match take!(phase_design, PhaseDesignName::CoordinateAscent) {
            PhaseDesignName::Random => PhaseDesign::Random,
            PhaseDesignName::ForwardAligned => PhaseDesign::ForwardAligned,
            PhaseDesignName::CoordinateAscent => PhaseDesign::CoordinateAscent,
        };
        let ascent_sweeps = take!(ascent_sweeps, scenario::DEFAULT_ASCENT_SWEEPS);
        let training_phase_policy = match take!(training_phase_policy, TrainingPolicyName::ReferenceZero) {
            TrainingPolicyName::ReferenceZero => TrainingPhasePolicy::ReferenceZero,
            TrainingPolicyName::PerBdAligned => TrainingPhasePolicy::PerBdAligned,
        };
        let slot_duration_s = take!(slot_duration_s, scenario::DEFAULT_SLOT_DURATION_S);
        let n_frames = take!(n_frames, scenario::DEFAULT_N_FRAMES);
        let conversion_efficiency = take!(conversion_efficiency, scenario::DEFAULT_CONVERSION_EFFICIENCY);
        let n_transmission_slots = take!(n_transmission_slots, bd_positions.len() / 2);

        let ris_link_fading = resolve_fading(
            file.ris_link_fading,
            "ris_link_fading",
            FadingConfig {
                rician: true,
                rician_factor_db: scenario::DEFAULT_RICIAN_FACTOR_DB,
                path_loss_exponent: scenario::DEFAULT_RIS_PATH_LOSS_EXPONENT,
            },
            &mut defaulted,
        );
        let other_link_fading = resolve_fading(
            file.other_link_fading,
            "other_link_fading",
            FadingConfig {
                rician: false,
                rician_factor_db: scenario::DEFAULT_RICIAN_FACTOR_DB,
                path_loss_exponent: scenario::DEFAULT_OTHER_PATH_LOSS_EXPONENT,
            },
            &mut defaulted,
        );

        let exp = file.experiment.unwrap_or_default();
        let sweep = match (exp.axis, exp.values) {
            (Some(axis), Some(values)) => Some(parse_sweep(&axis, &values)?),
            (None, None) => None,
            (Some(_), None) => return Err(CliError::Config("experiment.values: required when experiment.axis is set".into())),
            (None, Some(_)) => return Err(CliError::Config("experiment.axis: required when experiment.values is set".into())),
        };

        defaulted.sort();
        defaulted.dedup();

        let resolved = ResolvedConfig {
            defaulted,
            ce_pos,
            br_pos,
            ris_pos,
            bd_positions,
            bd_corridor_x,
            bd_corridor_y,
            n_elements,
            ce_power_dbm,
            noise_power_dbm,
            gamma1,
            gamma2,
            sinr_threshold_db,
            phase_design,
            ascent_sweeps,
            phase_bits: file.phase_bits,
            training_phase_policy,
            slot_duration_s,
            n_frames,
            conversion_efficiency,
            n_transmission_slots,
            ris_link_fading,
            other_link_fading,
            experiment: ExperimentSettings {
                kind: exp.kind,
                seed: exp.seed,
                trials: exp.trials,
                sweep,
            },
        };
        // Surface scenario invariant violations as configuration errors.
        resolved.scenario()?;
        Ok(resolved)
    }

    /// The validated scenario in linear SI units.
    pub fn scenario(&self) -> Result<Scenario, CliError> {
        Scenario {
            ce_pos: pos(self.ce_pos),
            br_pos: pos(self.br_pos),
            ris_pos: pos(self.ris_pos),
            bd_positions: self.bd_positions.iter().map(|&b| pos(b)).collect(),
            corridor: Corridor {
                x_min: self.bd_corridor_x[0],
                x_max: self.bd_corridor_x[1],
                y: self.bd_corridor_y,
            },
            n_elements: self.n_elements,
            ce_power: dbm_to_watts(self.ce_power_dbm),
            noise_power: dbm_to_watts(self.noise_power_dbm),
            gamma1: self.gamma1,
            gamma2: self.gamma2,
            sinr_threshold: db_to_linear(self.sinr_threshold_db),
            ris_link_fading: self.ris_link_fading.to_spec(),
            other_link_fading: self.other_link_fading.to_spec(),
            phase_design: self.phase_design,
            ascent_sweeps: self.ascent_sweeps,
            phase_bits: self.phase_bits,
            training_phase_policy: self.training_phase_policy,
            slot_duration: self.slot_duration_s,
            n_frames: self.n_frames,
            conversion_efficiency: self.conversion_efficiency,
            n_transmission_slots: Some(self.n_transmission_slots),
        }
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))
    }

    /// Canonical TOML dump with every default materialized. Loading the dump
    /// and dumping again reproduces it byte for byte.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let w = &mut out;
        let pair = |p: [f64; 2]| format!("[{:?}, {:?}]", p[0], p[1]);

        let _ = writeln!(w, "# Resolved simulator configuration.");
        let _ = writeln!(w, "# Keys listed in `defaulted` were absent from the input and took default values.");
        let list: Vec<String> = self.defaulted.iter().map(|k| format!("{k:?}")).collect();
        let _ = writeln!(w, "defaulted = [{}]", list.join(", "));
        let _ = writeln!(w);
        let _ = writeln!(w, "ce_pos = {}", pair(self.ce_pos));
        let _ = writeln!(w, "br_pos = {}", pair(self.br_pos));
        let _ = writeln!(w, "ris_pos = {}", pair(self.ris_pos));
        let bds: Vec<String> = self.bd_positions.iter().map(|&b| pair(b)).collect();
        let _ = writeln!(w, "bd_positions = [{}]", bds.join(", "));
        let _ = writeln!(w, "bd_corridor_x = {}", pair(self.bd_corridor_x));
        let _ = writeln!(w, "bd_corridor_y = {:?}", self.bd_corridor_y);
        let _ = writeln!(w, "n_elements = {}", self.n_elements);
        let _ = writeln!(
            w,
            "ce_power_dbm = {:?} # {} W",
            self.ce_power_dbm,
            crate::output::fmt_sig(dbm_to_watts(self.ce_power_dbm))
        );
        let _ = writeln!(
            w,
            "noise_power_dbm = {:?} # {} W",
            self.noise_power_dbm,
            crate::output::fmt_sig(dbm_to_watts(self.noise_power_dbm))
        );
        let _ = writeln!(w, "gamma1 = {:?}", self.gamma1);
        let _ = writeln!(w, "gamma2 = {:?}", self.gamma2);
        let _ = writeln!(
            w,
            "sinr_threshold_db = {:?} # {} linear",
            self.sinr_threshold_db,
            crate::output::fmt_sig(db_to_linear(self.sinr_threshold_db))
        );
        let _ = writeln!(w, "phase_design = {:?}", self.phase_design.as_str());
        let _ = writeln!(w, "ascent_sweeps = {}", self.ascent_sweeps);
        match self.phase_bits {
            Some(b) => {
                let _ = writeln!(w, "phase_bits = {b}");
            }
            None => {
                let _ = writeln!(w, "# phase_bits unset: continuous phases");
            }
        }
        let _ = writeln!(w, "training_phase_policy = {:?}", self.training_phase_policy.as_str());
        let _ = writeln!(w, "slot_duration_s = {:?}", self.slot_duration_s);
        let _ = writeln!(w, "n_frames = {}", self.n_frames);
        let _ = writeln!(w, "conversion_efficiency = {:?}", self.conversion_efficiency);
        let _ = writeln!(w, "n_transmission_slots = {}", self.n_transmission_slots);

        for (name, f) in [
            ("ris_link_fading", self.ris_link_fading),
            ("other_link_fading", self.other_link_fading),
        ] {
            let _ = writeln!(w);
            let _ = writeln!(w, "[{name}]");
            let _ = writeln!(w, "kind = {:?}", if f.rician { "rician" } else { "rayleigh" });
            if f.rician {
                let _ = writeln!(
                    w,
                    "rician_factor_db = {:?} # {} linear",
                    f.rician_factor_db,
                    crate::output::fmt_sig(db_to_linear(f.rician_factor_db))
                );
            }
            let _ = writeln!(w, "path_loss_exponent = {:?}", f.path_loss_exponent);
        }

        let e = &self.experiment;
        if e.kind.is_some() || e.seed.is_some() || e.trials.is_some() || e.sweep.is_some() {
            let _ = writeln!(w);
            let _ = writeln!(w, "[experiment]");
            if let Some(k) = e.kind {
                let _ = writeln!(w, "kind = {:?}", k.as_str());
            }
            if let Some(s) = e.seed {
                let _ = writeln!(w, "seed = {s}");
            }
            if let Some(t) = e.trials {
                let _ = writeln!(w, "trials = {t}");
            }
            if let Some(sweep) = &e.sweep {
                let _ = writeln!(w, "axis = {:?}", sweep.axis_name());
                let values: Vec<String> = match sweep {
                    CustomSweep::Tau(v) | CustomSweep::CePower(v) | CustomSweep::Efficiency(v) => {
                        v.iter().map(|x| format!("{x:?}")).collect()
                    }
                    CustomSweep::NElements(v) => v.iter().map(|x| x.to_string()).collect(),
                    CustomSweep::GammaPair(v) => v.iter().map(|&(a, b)| format!("[{a:?}, {b:?}]")).collect(),
                };
                let _ = writeln!(w, "values = [{}]", values.join(", "));
            }
        }
        out
    }
}
