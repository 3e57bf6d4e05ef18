//! Fading draws and composite channels.
//!
//! Every link is a path-loss gain `d^-α` times a unit-power small-scale
//! fading coefficient. The RIS-reflected links (CE→RIS, RIS↔BD, RIS→BR) are
//! Rician with an all-ones line-of-sight component; the direct links
//! (CE→BD, BD→BR) use the scenario's other fading class.
//!
//! For BD `k` and phase vector `θ`:
//!
//! ```text
//! forward  = ce_bd[k] + Σ_n ce_ris[n] · e^{jθ_n} · ris_bd[k][n]
//! backward = bd_br[k] + Σ_n ris_bd[k][n] · e^{jθ_n} · ris_br[n]
//! end_to_end = forward · backward
//! ```
//!
//! The RIS↔BD vector is shared by both hops (reciprocity within a slot).

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::ris::PhaseConfig;
use crate::scenario::{distance, FadingKind, FadingSpec, Scenario};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("degenerate geometry: link distance must be positive (got {0})")]
    DegenerateGeometry(f64),
    #[error("link gain must be non-negative (got {0})")]
    NegativeGain(f64),
    #[error("phase configuration has {got} entries but the RIS has {expected} elements")]
    LengthMismatch { expected: usize, got: usize },
    #[error("BD index {index} out of range for {n_bds} BDs")]
    BdIndex { index: usize, n_bds: usize },
}

/// Distance-dependent power gain `d^-α`, unit gain at 1 m.
pub fn path_loss_gain(d: f64, alpha: f64) -> Result<f64, ChannelError> {
    if !(d > 0.0) {
        return Err(ChannelError::DegenerateGeometry(d));
    }
    Ok(d.powf(-alpha))
}

fn unit_complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draw one fading coefficient with mean power `gain`.
pub fn sample_link<R: Rng + ?Sized>(
    rng: &mut R,
    spec: &FadingSpec,
    gain: f64,
) -> Result<Complex64, ChannelError> {
    if !(gain >= 0.0) {
        return Err(ChannelError::NegativeGain(gain));
    }
    let scatter = unit_complex_gaussian(rng);
    let amplitude = gain.sqrt();
    let unit = match spec.kind {
        FadingKind::Rayleigh => scatter,
        FadingKind::Rician => {
            let k = spec.rician_factor;
            let (los, nlos) = if k.is_infinite() {
                (1.0, 0.0)
            } else {
                ((k / (1.0 + k)).sqrt(), (1.0 / (1.0 + k)).sqrt())
            };
            Complex64::new(los, 0.0) + scatter * nlos
        }
    };
    Ok(unit * amplitude)
}

/// Draw `n` independent coefficients of the same link class.
pub fn sample_links<R: Rng + ?Sized>(
    rng: &mut R,
    spec: &FadingSpec,
    gain: f64,
    n: usize,
) -> Result<Vec<Complex64>, ChannelError> {
    (0..n).map(|_| sample_link(rng, spec, gain)).collect()
}

/// One block-fading draw of every link in the network.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// CE→BD direct coefficient per BD.
    pub ce_bd: Vec<Complex64>,
    /// CE→RIS coefficient per element.
    pub ce_ris: Vec<Complex64>,
    /// RIS↔BD coefficients, indexed `[bd][element]`.
    pub ris_bd: Vec<Vec<Complex64>>,
    /// BD→BR direct coefficient per BD.
    pub bd_br: Vec<Complex64>,
    /// RIS→BR coefficient per element.
    pub ris_br: Vec<Complex64>,
}

/// Draw a realization for a validated scenario.
///
/// Direct links are drawn first, so scenarios differing only in `n_elements`
/// share their direct-link coefficients under a common random stream.
pub fn draw_realization<R: Rng + ?Sized>(
    scenario: &Scenario,
    rng: &mut R,
) -> Result<ChannelRealization, ChannelError> {
    let direct = &scenario.other_link_fading;
    let reflected = &scenario.ris_link_fading;
    let n = scenario.n_elements;

    let mut ce_bd = Vec::with_capacity(scenario.n_bds());
    let mut bd_br = Vec::with_capacity(scenario.n_bds());
    for &bd in &scenario.bd_positions {
        let gf = path_loss_gain(distance(scenario.ce_pos, bd), direct.path_loss_exponent)?;
        let gu = path_loss_gain(distance(bd, scenario.br_pos), direct.path_loss_exponent)?;
        ce_bd.push(sample_link(rng, direct, gf)?);
        bd_br.push(sample_link(rng, direct, gu)?);
    }

    let alpha = reflected.path_loss_exponent;
    let g_gain = path_loss_gain(distance(scenario.ce_pos, scenario.ris_pos), alpha)?;
    let v_gain = path_loss_gain(distance(scenario.ris_pos, scenario.br_pos), alpha)?;
    let ce_ris = sample_links(rng, reflected, g_gain, n)?;
    let ris_br = sample_links(rng, reflected, v_gain, n)?;
    let ris_bd = scenario
        .bd_positions
        .iter()
        .map(|&bd| {
            let gain = path_loss_gain(distance(scenario.ris_pos, bd), alpha)?;
            sample_links(rng, reflected, gain, n)
        })
        .collect::<Result<Vec<_>, _>>()?;

    Ok(ChannelRealization {
        ce_bd,
        ce_ris,
        ris_bd,
        bd_br,
        ris_br,
    })
}

impl ChannelRealization {
    pub fn n_elements(&self) -> usize {
        self.ce_ris.len()
    }

    pub fn n_bds(&self) -> usize {
        self.ce_bd.len()
    }

    fn check(&self, theta: &PhaseConfig, k: usize) -> Result<(), ChannelError> {
        if k >= self.n_bds() {
            return Err(ChannelError::BdIndex {
                index: k,
                n_bds: self.n_bds(),
            });
        }
        if theta.len() != self.n_elements() {
            return Err(ChannelError::LengthMismatch {
                expected: self.n_elements(),
                got: theta.len(),
            });
        }
        Ok(())
    }

    /// Per-element cascaded coefficients `(ce_ris[n]·ris_bd[k][n], ris_bd[k][n]·ris_br[n])`
    /// before the RIS phase is applied.
    pub fn cascade_terms(&self, k: usize) -> (Vec<Complex64>, Vec<Complex64>) {
        let h = &self.ris_bd[k];
        let fwd = self.ce_ris.iter().zip(h).map(|(g, h)| g * h).collect();
        let bwd = h.iter().zip(&self.ris_br).map(|(h, v)| h * v).collect();
        (fwd, bwd)
    }

    /// CE→BD channel: direct path plus the RIS-reflected paths.
    pub fn composite_forward(&self, theta: &PhaseConfig, k: usize) -> Result<Complex64, ChannelError> {
        self.check(theta, k)?;
        let reflected: Complex64 = self
            .ce_ris
            .iter()
            .zip(&self.ris_bd[k])
            .zip(theta.angles())
            .map(|((g, h), &t)| g * Complex64::from_polar(1.0, t) * h)
            .sum();
        Ok(self.ce_bd[k] + reflected)
    }

    /// BD→BR channel: direct path plus the RIS-reflected paths.
    pub fn composite_backward(&self, theta: &PhaseConfig, k: usize) -> Result<Complex64, ChannelError> {
        self.check(theta, k)?;
        let reflected: Complex64 = self.ris_bd[k]
            .iter()
            .zip(&self.ris_br)
            .zip(theta.angles())
            .map(|((h, v), &t)| h * Complex64::from_polar(1.0, t) * v)
            .sum();
        Ok(self.bd_br[k] + reflected)
    }

    /// Cascaded CE→BD→BR channel for one shared RIS configuration.
    pub fn end_to_end(&self, theta: &PhaseConfig, k: usize) -> Result<Complex64, ChannelError> {
        Ok(self.composite_forward(theta, k)? * self.composite_backward(theta, k)?)
    }
}
