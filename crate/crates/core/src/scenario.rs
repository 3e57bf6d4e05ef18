//! Experiment description shared by every stage of the simulator.
//!
//! A [`Scenario`] holds the geometry, power budget, fading models and protocol
//! sizes in linear SI units. dB/dBm values are converted at the configuration
//! boundary (see [`db_to_linear`] and [`dbm_to_watts`]); nothing downstream
//! works in logarithmic units.

use std::fmt;

use thiserror::Error;

/// A point in the horizontal plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position2D {
    pub x: f64,
    pub y: f64,
}

impl Position2D {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Euclidean distance between two positions.
pub fn distance(a: Position2D, b: Position2D) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FadingKind {
    Rayleigh,
    Rician,
}

/// Small-scale fading model and distance-dependent path loss of a link class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingSpec {
    pub kind: FadingKind,
    /// Linear power ratio of LoS to scattered power. Ignored for Rayleigh.
    pub rician_factor: f64,
    pub path_loss_exponent: f64,
}

impl FadingSpec {
    pub fn rayleigh(path_loss_exponent: f64) -> Self {
        Self {
            kind: FadingKind::Rayleigh,
            rician_factor: 0.0,
            path_loss_exponent,
        }
    }

    pub fn rician(rician_factor: f64, path_loss_exponent: f64) -> Self {
        Self {
            kind: FadingKind::Rician,
            rician_factor,
            path_loss_exponent,
        }
    }
}

/// How the RIS phases are chosen for a transmission slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhaseDesign {
    /// i.i.d. uniform phases, redrawn per transmission slot.
    Random,
    /// Closed-form alignment of the CE→RIS→BD paths with the direct CE→BD path.
    ForwardAligned,
    /// Grid coordinate ascent on the two-hop end-to-end gain.
    CoordinateAscent,
}

impl PhaseDesign {
    pub const ALL: [PhaseDesign; 3] = [
        PhaseDesign::Random,
        PhaseDesign::ForwardAligned,
        PhaseDesign::CoordinateAscent,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PhaseDesign::Random => "random",
            PhaseDesign::ForwardAligned => "forward-aligned",
            PhaseDesign::CoordinateAscent => "coordinate-ascent",
        }
    }
}

impl fmt::Display for PhaseDesign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// RIS configuration used while a single BD backscatters for training.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainingPhasePolicy {
    /// All elements at phase zero for every training slot.
    ReferenceZero,
    /// Each training slot aligns the RIS to the training BD's forward channel.
    PerBdAligned,
}

impl TrainingPhasePolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            TrainingPhasePolicy::ReferenceZero => "reference-zero",
            TrainingPhasePolicy::PerBdAligned => "per-bd-aligned",
        }
    }
}

/// Region in which backscatter devices may be placed: `x ∈ [x_min, x_max]`, `y = y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Corridor {
    pub x_min: f64,
    pub x_max: f64,
    pub y: f64,
}

impl Corridor {
    pub fn contains(&self, p: Position2D) -> bool {
        // Positions are user input in meters; allow for decimal round-off.
        const EPS: f64 = 1e-9;
        p.x >= self.x_min - EPS && p.x <= self.x_max + EPS && (p.y - self.y).abs() <= EPS
    }
}

impl Default for Corridor {
    fn default() -> Self {
        Self {
            x_min: 5.0,
            x_max: 95.0,
            y: 0.0,
        }
    }
}

pub const DEFAULT_CE_POSITION: Position2D = Position2D::new(0.0, 0.0);
pub const DEFAULT_BR_POSITION: Position2D = Position2D::new(100.0, 0.0);
pub const DEFAULT_RIS_POSITION: Position2D = Position2D::new(20.0, 0.0);
pub const DEFAULT_BD_POSITIONS: [Position2D; 2] =
    [Position2D::new(40.0, 0.0), Position2D::new(70.0, 0.0)];
pub const DEFAULT_N_ELEMENTS: usize = 40;
pub const DEFAULT_CE_POWER_DBM: f64 = 30.0;
pub const DEFAULT_NOISE_POWER_DBM: f64 = -90.0;
pub const DEFAULT_GAMMA1: f64 = 0.8;
pub const DEFAULT_GAMMA2: f64 = 0.3;
pub const DEFAULT_SINR_THRESHOLD_DB: f64 = 15.0;
pub const DEFAULT_RICIAN_FACTOR_DB: f64 = 3.0;
pub const DEFAULT_RIS_PATH_LOSS_EXPONENT: f64 = 2.4;
pub const DEFAULT_OTHER_PATH_LOSS_EXPONENT: f64 = 3.0;
pub const DEFAULT_ASCENT_SWEEPS: usize = 3;
pub const DEFAULT_SLOT_DURATION_S: f64 = 0.01;
pub const DEFAULT_N_FRAMES: usize = 100;
pub const DEFAULT_CONVERSION_EFFICIENCY: f64 = 0.2;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    linear_to_db(watts) + 30.0
}

/// Full experiment description in linear SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub ce_pos: Position2D,
    pub br_pos: Position2D,
    pub ris_pos: Position2D,
    pub bd_positions: Vec<Position2D>,
    pub corridor: Corridor,
    pub n_elements: usize,
    /// CE transmit power, watts.
    pub ce_power: f64,
    /// Noise power at the BR, watts.
    pub noise_power: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    /// Linear SINR threshold.
    pub sinr_threshold: f64,
    pub ris_link_fading: FadingSpec,
    pub other_link_fading: FadingSpec,
    pub phase_design: PhaseDesign,
    pub ascent_sweeps: usize,
    pub phase_bits: Option<u32>,
    pub training_phase_policy: TrainingPhasePolicy,
    pub slot_duration: f64,
    pub n_frames: usize,
    pub conversion_efficiency: f64,
    /// Transmission slots per frame; `None` means one per cluster.
    pub n_transmission_slots: Option<usize>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            ce_pos: DEFAULT_CE_POSITION,
            br_pos: DEFAULT_BR_POSITION,
            ris_pos: DEFAULT_RIS_POSITION,
            bd_positions: DEFAULT_BD_POSITIONS.to_vec(),
            corridor: Corridor::default(),
            n_elements: DEFAULT_N_ELEMENTS,
            ce_power: dbm_to_watts(DEFAULT_CE_POWER_DBM),
            noise_power: dbm_to_watts(DEFAULT_NOISE_POWER_DBM),
            gamma1: DEFAULT_GAMMA1,
            gamma2: DEFAULT_GAMMA2,
            sinr_threshold: db_to_linear(DEFAULT_SINR_THRESHOLD_DB),
            ris_link_fading: FadingSpec::rician(
                db_to_linear(DEFAULT_RICIAN_FACTOR_DB),
                DEFAULT_RIS_PATH_LOSS_EXPONENT,
            ),
            other_link_fading: FadingSpec::rayleigh(DEFAULT_OTHER_PATH_LOSS_EXPONENT),
            phase_design: PhaseDesign::CoordinateAscent,
            ascent_sweeps: DEFAULT_ASCENT_SWEEPS,
            phase_bits: None,
            training_phase_policy: TrainingPhasePolicy::ReferenceZero,
            slot_duration: DEFAULT_SLOT_DURATION_S,
            n_frames: DEFAULT_N_FRAMES,
            conversion_efficiency: DEFAULT_CONVERSION_EFFICIENCY,
            n_transmission_slots: None,
        }
    }
}

/// A single failed scenario invariant.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Violation {
    #[error("gamma order violated: gamma1 = {gamma1} must exceed gamma2 = {gamma2}")]
    GammaOrder { gamma1: f64, gamma2: f64 },
    #[error("{name} = {value} outside [0, 1]")]
    OutOfUnitRange { name: &'static str, value: f64 },
    #[error("K must be even (got {0} BDs)")]
    OddBdCount(usize),
    #[error("at least 2 BDs are required (got {0})")]
    TooFewBds(usize),
    #[error("BD {index} at [{x}, {y}] lies outside the corridor")]
    OutOfCorridor { index: usize, x: f64, y: f64 },
    #[error("{0} position is not finite")]
    NonFinitePosition(String),
    #[error("degenerate geometry: {0} coincide")]
    DegenerateGeometry(String),
    #[error("{name} must be positive (got {value})")]
    NonPositive { name: &'static str, value: f64 },
    #[error("rician factor must be non-negative (got {0})")]
    NegativeRicianFactor(f64),
    #[error("{0} must be at least 1")]
    ZeroCount(&'static str),
    #[error("phase_bits must be between 1 and 16 (got {0})")]
    PhaseBits(u32),
    #[error("n_transmission_slots = {got} but {clusters} clusters need one slot each")]
    TransmissionSlots { got: usize, clusters: usize },
}

/// Every invariant a scenario failed, in check order.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ValidationError {
    pub violations: Vec<Violation>,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid scenario: ")?;
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl Scenario {
    /// Number of backscatter devices, K.
    pub fn n_bds(&self) -> usize {
        self.bd_positions.len()
    }

    pub fn n_clusters(&self) -> usize {
        self.bd_positions.len() / 2
    }

    /// Check every invariant and materialize optional defaults.
    ///
    /// Idempotent: validating an already validated scenario returns it unchanged.
    pub fn validate(mut self) -> Result<Scenario, ValidationError> {
        let mut violations = Vec::new();

        for (name, value) in [("gamma1", self.gamma1), ("gamma2", self.gamma2)] {
            if !(0.0..=1.0).contains(&value) {
                violations.push(Violation::OutOfUnitRange { name, value });
            }
        }
        if !(self.gamma1 > self.gamma2) {
            violations.push(Violation::GammaOrder {
                gamma1: self.gamma1,
                gamma2: self.gamma2,
            });
        }

        let k = self.n_bds();
        if !k.is_multiple_of(2) {
            violations.push(Violation::OddBdCount(k));
        }
        if k < 2 {
            violations.push(Violation::TooFewBds(k));
        }

        let mut fixed = vec![
            ("CE".to_string(), self.ce_pos),
            ("BR".to_string(), self.br_pos),
            ("RIS".to_string(), self.ris_pos),
        ];
        for (name, p) in &fixed {
            if !p.is_finite() {
                violations.push(Violation::NonFinitePosition(name.clone()));
            }
        }
        for (index, &p) in self.bd_positions.iter().enumerate() {
            if !p.is_finite() {
                violations.push(Violation::NonFinitePosition(format!("BD {index}")));
            } else if !self.corridor.contains(p) {
                violations.push(Violation::OutOfCorridor {
                    index,
                    x: p.x,
                    y: p.y,
                });
            }
        }
        fixed.extend(
            self.bd_positions
                .iter()
                .enumerate()
                .map(|(i, &p)| (format!("BD {i}"), p)),
        );
        // Every link that carries a path-loss term must have positive length.
        // BD↔BD pairs are not links.
        for i in 0..fixed.len() {
            for j in (i + 1)..fixed.len() {
                if i >= 3 && j >= 3 {
                    continue;
                }
                let (ref a, pa) = fixed[i];
                let (ref b, pb) = fixed[j];
                if pa.is_finite() && pb.is_finite() && distance(pa, pb) == 0.0 {
                    violations.push(Violation::DegenerateGeometry(format!("{a} and {b}")));
                }
            }
        }

        for (name, value) in [
            ("ce_power", self.ce_power),
            ("noise_power", self.noise_power),
            ("sinr_threshold", self.sinr_threshold),
            ("slot_duration", self.slot_duration),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                violations.push(Violation::NonPositive { name, value });
            }
        }
        if !(0.0..=1.0).contains(&self.conversion_efficiency) {
            violations.push(Violation::OutOfUnitRange {
                name: "conversion_efficiency",
                value: self.conversion_efficiency,
            });
        }
        for (name, spec) in [
            ("ris_link_fading.path_loss_exponent", self.ris_link_fading),
            ("other_link_fading.path_loss_exponent", self.other_link_fading),
        ] {
            if !(spec.path_loss_exponent > 0.0 && spec.path_loss_exponent.is_finite()) {
                violations.push(Violation::NonPositive {
                    name,
                    value: spec.path_loss_exponent,
                });
            }
            if spec.kind == FadingKind::Rician && !(spec.rician_factor >= 0.0) {
                violations.push(Violation::NegativeRicianFactor(spec.rician_factor));
            }
        }

        if self.ascent_sweeps == 0 {
            violations.push(Violation::ZeroCount("ascent_sweeps"));
        }
        if self.n_frames == 0 {
            violations.push(Violation::ZeroCount("n_frames"));
        }
        if let Some(bits) = self.phase_bits {
            if !(1..=16).contains(&bits) {
                violations.push(Violation::PhaseBits(bits));
            }
        }
        let clusters = self.n_clusters();
        match self.n_transmission_slots {
            Some(got) if got != clusters => {
                violations.push(Violation::TransmissionSlots { got, clusters })
            }
            _ => {}
        }

        if violations.is_empty() {
            self.n_transmission_slots = Some(clusters);
            Ok(self)
        } else {
            Err(ValidationError { violations })
        }
    }
}
