//! Two-BD NOMA cluster: SINRs at the reader, SIC decoding, and throughput.
//!
//! The strong BD backscatters with `gamma1`, the weak BD with `gamma2`. The
//! reader decodes the strong signal first treating the weak one as
//! interference, cancels it, then decodes the weak signal against noise only.

use crate::channel::{ChannelError, ChannelRealization};
use crate::ris::PhaseConfig;
use crate::scenario::Scenario;

/// Role assignment of one cluster, fixed for a whole frame by training.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClusterAssignment {
    /// BD using the larger reflection coefficient.
    pub strong_bd: usize,
    /// BD using the smaller reflection coefficient.
    pub weak_bd: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrPair {
    pub sinr_strong: f64,
    pub sinr_weak: f64,
}

/// Power budget entering the SINR expressions, all linear.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub ce_power: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub noise_power: f64,
}

impl From<&Scenario> for LinkBudget {
    fn from(s: &Scenario) -> Self {
        Self {
            ce_power: s.ce_power,
            gamma1: s.gamma1,
            gamma2: s.gamma2,
            noise_power: s.noise_power,
        }
    }
}

impl LinkBudget {
    /// SINRs from the end-to-end channel power gains of the two BDs.
    pub fn sinrs_from_gains(&self, gain_strong: f64, gain_weak: f64) -> SinrPair {
        let strong = self.ce_power * self.gamma1 * self.gamma1 * gain_strong;
        let weak = self.ce_power * self.gamma2 * self.gamma2 * gain_weak;
        SinrPair {
            sinr_strong: strong / (weak + self.noise_power),
            sinr_weak: weak / self.noise_power,
        }
    }
}

/// SINRs of a cluster transmitting under RIS configuration `theta`.
pub fn sinr_pair(
    real: &ChannelRealization,
    theta: &PhaseConfig,
    cluster: ClusterAssignment,
    budget: &LinkBudget,
) -> Result<SinrPair, ChannelError> {
    let cs = real.end_to_end(theta, cluster.strong_bd)?.norm_sqr();
    let cw = real.end_to_end(theta, cluster.weak_bd)?.norm_sqr();
    Ok(budget.sinrs_from_gains(cs, cw))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecodeOutcome {
    pub strong_ok: bool,
    /// Only possible after the strong signal was decoded and cancelled.
    pub weak_ok: bool,
}

impl DecodeOutcome {
    pub fn joint_ok(&self) -> bool {
        self.strong_ok && self.weak_ok
    }
}

pub fn decode_outcomes(sinrs: SinrPair, tau: f64) -> DecodeOutcome {
    let strong_ok = sinrs.sinr_strong >= tau;
    DecodeOutcome {
        strong_ok,
        weak_ok: strong_ok && sinrs.sinr_weak >= tau,
    }
}

/// Sum of the Shannon rates (bps/Hz) of the signals decodable at `tau`.
pub fn cluster_throughput(sinrs: SinrPair, tau: f64) -> f64 {
    let outcome = decode_outcomes(sinrs, tau);
    let mut rate = 0.0;
    if outcome.strong_ok {
        rate += (1.0 + sinrs.sinr_strong).log2();
    }
    if outcome.weak_ok {
        rate += (1.0 + sinrs.sinr_weak).log2();
    }
    rate
}

/// Sum rate ignoring the decoding threshold.
pub fn ungated_throughput(sinrs: SinrPair) -> f64 {
    (1.0 + sinrs.sinr_strong).log2() + (1.0 + sinrs.sinr_weak).log2()
}
