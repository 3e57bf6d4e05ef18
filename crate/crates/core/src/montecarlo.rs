//! Seeded Monte Carlo trials, aggregation and parameter sweeps.
//!
//! Trial `t` of a run seeded with `s` draws from ChaCha8 streams keyed by
//! `(s, purpose)` with stream id `t`, so results depend only on the seed and
//! the trial index, never on scheduling. Per-trial outcomes are collected in
//! trial order and reduced sequentially, which makes reports bit-identical
//! for any number of worker threads.
//!
//! Channel draws, pairing and random phase draws use separate purposes, so
//! scenarios that differ only in a swept parameter see common random numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::draw_realization;
use crate::noma::{
    cluster_throughput, decode_outcomes, sinr_pair, ungated_throughput, ClusterAssignment,
    LinkBudget, SinrPair,
};
use crate::protocol::{account_energy, build_frame, run_training, sort_and_pair, EnergyLedger};
use crate::scenario::Scenario;
use crate::Error;

/// z-value of the two-sided 95% normal interval.
pub const Z95: f64 = 1.96;

pub const DEFAULT_TRIALS_SUCCESS: usize = 100_000;
pub const DEFAULT_TRIALS_THROUGHPUT: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Substream {
    Channel,
    Pairing,
    Phases,
}

impl Substream {
    fn key(self) -> u64 {
        match self {
            Substream::Channel => 0x243f_6a88_85a3_08d3,
            Substream::Pairing => 0x1319_8a2e_0370_7344,
            Substream::Phases => 0xa409_3822_299f_31d0,
        }
    }
}

/// Random stream for one purpose within one trial.
pub fn trial_rng(master_seed: u64, trial: u64, purpose: Substream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed ^ purpose.key());
    rng.set_stream(trial);
    rng
}

/// Raw result of one trial, before any threshold is applied.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub clusters: Vec<(ClusterAssignment, SinrPair)>,
    pub harvested: EnergyLedger,
}

/// Threshold-dependent metrics of one trial.
///
/// Success values are the fraction of the frame's clusters that succeeded
/// (0 or 1 for a single cluster); throughputs are averaged over clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialMetrics {
    pub success_strong: f64,
    pub success_weak: f64,
    pub success_joint: f64,
    pub throughput_gated: f64,
    pub throughput_ungated: f64,
    pub harvested: Vec<f64>,
    pub energy_total: f64,
    pub sinrs: Vec<SinrPair>,
}

/// One full trial: realization → training → pairing → frame → decoding → energy.
pub fn simulate_trial(
    scenario: &Scenario,
    master_seed: u64,
    trial: u64,
) -> Result<TrialOutcome, Error> {
    let mut channel_rng = trial_rng(master_seed, trial, Substream::Channel);
    let mut pairing_rng = trial_rng(master_seed, trial, Substream::Pairing);
    let mut phase_rng = trial_rng(master_seed, trial, Substream::Phases);

    let real = draw_realization(scenario, &mut channel_rng)?;
    let powers = run_training(&real, scenario);
    let clusters = sort_and_pair(&powers, &mut pairing_rng)?;
    let plan = build_frame(scenario, &clusters, &real, &mut phase_rng);

    let budget = LinkBudget::from(scenario);
    let clusters = plan
        .transmission_slots()
        .map(|(cluster, theta)| Ok((cluster, sinr_pair(&real, theta, cluster, &budget)?)))
        .collect::<Result<Vec<_>, Error>>()?;
    let harvested = account_energy(&real, &plan, scenario);
    Ok(TrialOutcome {
        clusters,
        harvested,
    })
}

pub fn evaluate(outcome: &TrialOutcome, tau: f64) -> TrialMetrics {
    let m = outcome.clusters.len().max(1) as f64;
    let mut metrics = TrialMetrics {
        success_strong: 0.0,
        success_weak: 0.0,
        success_joint: 0.0,
        throughput_gated: 0.0,
        throughput_ungated: 0.0,
        harvested: outcome.harvested.per_bd.clone(),
        energy_total: outcome.harvested.total(),
        sinrs: outcome.clusters.iter().map(|(_, s)| *s).collect(),
    };
    for &(_, sinrs) in &outcome.clusters {
        let d = decode_outcomes(sinrs, tau);
        metrics.success_strong += f64::from(u8::from(d.strong_ok));
        metrics.success_weak += f64::from(u8::from(d.weak_ok));
        metrics.success_joint += f64::from(u8::from(d.joint_ok()));
        metrics.throughput_gated += cluster_throughput(sinrs, tau);
        metrics.throughput_ungated += ungated_throughput(sinrs);
    }
    metrics.success_strong /= m;
    metrics.success_weak /= m;
    metrics.success_joint /= m;
    metrics.throughput_gated /= m;
    metrics.throughput_ungated /= m;
    metrics
}

/// Sample mean with its standard error and 95% normal interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub ci_half_width: f64,
    pub n_trials: usize,
}

impl Estimate {
    pub fn from_samples<I>(samples: I) -> Estimate
    where
        I: IntoIterator<Item = f64>,
        I::IntoIter: Clone,
    {
        let it = samples.into_iter();
        let (n, sum) = it.clone().fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
        assert!(n > 0, "an estimate needs at least one sample");
        let mean = sum / n as f64;
        let std_err = if n > 1 {
            let ss: f64 = it.map(|x| (x - mean) * (x - mean)).sum();
            (ss / (n - 1) as f64 / n as f64).sqrt()
        } else {
            0.0
        };
        Estimate {
            mean,
            std_err,
            ci_half_width: Z95 * std_err,
            n_trials: n,
        }
    }

    pub fn ci(&self) -> (f64, f64) {
        (self.mean - self.ci_half_width, self.mean + self.ci_half_width)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateReport {
    pub n_trials: usize,
    pub success_strong: Estimate,
    pub success_weak: Estimate,
    pub success_joint: Estimate,
    pub throughput_gated: Estimate,
    pub throughput_ungated: Estimate,
    pub energy_total: Estimate,
    pub energy_per_bd: Vec<Estimate>,
}

pub fn aggregate(metrics: &[TrialMetrics]) -> Result<AggregateReport, Error> {
    if metrics.is_empty() {
        return Err(Error::NoTrials);
    }
    let est = |f: fn(&TrialMetrics) -> f64| Estimate::from_samples(metrics.iter().map(f));
    let n_bds = metrics[0].harvested.len();
    Ok(AggregateReport {
        n_trials: metrics.len(),
        success_strong: est(|m| m.success_strong),
        success_weak: est(|m| m.success_weak),
        success_joint: est(|m| m.success_joint),
        throughput_gated: est(|m| m.throughput_gated),
        throughput_ungated: est(|m| m.throughput_ungated),
        energy_total: est(|m| m.energy_total),
        energy_per_bd: (0..n_bds)
            .map(|k| Estimate::from_samples(metrics.iter().map(move |m| m.harvested[k])))
            .collect(),
    })
}

/// Run `n_trials` independent trials in parallel, ordered by trial index.
pub fn simulate(
    scenario: &Scenario,
    n_trials: usize,
    master_seed: u64,
) -> Result<Vec<TrialOutcome>, Error> {
    if n_trials == 0 {
        return Err(Error::NoTrials);
    }
    let scenario = scenario.clone().validate()?;
    (0..n_trials as u64)
        .into_par_iter()
        .map(|t| simulate_trial(&scenario, master_seed, t))
        .collect()
}

pub fn report_at(outcomes: &[TrialOutcome], tau: f64) -> Result<AggregateReport, Error> {
    let metrics: Vec<TrialMetrics> = outcomes.iter().map(|o| evaluate(o, tau)).collect();
    aggregate(&metrics)
}

pub fn run_trials(
    scenario: &Scenario,
    n_trials: usize,
    master_seed: u64,
) -> Result<AggregateReport, Error> {
    let outcomes = simulate(scenario, n_trials, master_seed)?;
    report_at(&outcomes, scenario.sinr_threshold)
}

/// Parameter varied by a sweep; all values are linear/SI.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    Tau(Vec<f64>),
    NElements(Vec<usize>),
    CePower(Vec<f64>),
    GammaPair(Vec<(f64, f64)>),
    Efficiency(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AxisValue {
    Tau(f64),
    NElements(usize),
    CePower(f64),
    GammaPair(f64, f64),
    Efficiency(f64),
}

impl AxisValue {
    pub fn apply(self, scenario: &Scenario) -> Scenario {
        let mut s = scenario.clone();
        match self {
            AxisValue::Tau(t) => s.sinr_threshold = t,
            AxisValue::NElements(n) => s.n_elements = n,
            AxisValue::CePower(p) => s.ce_power = p,
            AxisValue::GammaPair(g1, g2) => {
                s.gamma1 = g1;
                s.gamma2 = g2;
            }
            AxisValue::Efficiency(e) => s.conversion_efficiency = e,
        }
        s
    }
}

impl SweepAxis {
    pub fn values(&self) -> Vec<AxisValue> {
        match self {
            SweepAxis::Tau(v) => v.iter().map(|&x| AxisValue::Tau(x)).collect(),
            SweepAxis::NElements(v) => v.iter().map(|&x| AxisValue::NElements(x)).collect(),
            SweepAxis::CePower(v) => v.iter().map(|&x| AxisValue::CePower(x)).collect(),
            SweepAxis::GammaPair(v) => v.iter().map(|&(a, b)| AxisValue::GammaPair(a, b)).collect(),
            SweepAxis::Efficiency(v) => v.iter().map(|&x| AxisValue::Efficiency(x)).collect(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Tau(_) => "tau",
            SweepAxis::NElements(_) => "n_elements",
            SweepAxis::CePower(_) => "ce_power",
            SweepAxis::GammaPair(_) => "gamma_pair",
            SweepAxis::Efficiency(_) => "efficiency",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: AxisValue,
    pub report: AggregateReport,
}

/// One report per axis value, every point using the same master seed.
///
/// The threshold does not influence the simulated physics, so a τ sweep
/// simulates once and re-evaluates the same outcomes at each threshold.
pub fn sweep(
    scenario: &Scenario,
    axis: &SweepAxis,
    n_trials: usize,
    master_seed: u64,
) -> Result<Vec<SweepPoint>, Error> {
    let values = axis.values();
    if values.is_empty() {
        return Err(Error::EmptySweep);
    }
    let points: Vec<Scenario> = values
        .iter()
        .map(|v| v.apply(scenario).validate())
        .collect::<Result<_, _>>()?;

    if let SweepAxis::Tau(_) = axis {
        let outcomes = simulate(scenario, n_trials, master_seed)?;
        return values
            .iter()
            .zip(&points)
            .map(|(&value, s)| {
                Ok(SweepPoint {
                    value,
                    report: report_at(&outcomes, s.sinr_threshold)?,
                })
            })
            .collect();
    }

    values
        .iter()
        .zip(&points)
        .map(|(&value, s)| {
            Ok(SweepPoint {
                value,
                report: run_trials(s, n_trials, master_seed)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{db_to_linear, PhaseDesign};
    use rand::seq::SliceRandom;

    fn small() -> Scenario {
        Scenario {
            n_elements: 8,
            ..Scenario::default()
        }
    }

    #[test]
    fn single_trial_report_equals_metrics() {
        let s = small();
        let outcome = simulate_trial(&s, 5, 0).unwrap();
        let m = evaluate(&outcome, s.sinr_threshold);
        let r = run_trials(&s, 1, 5).unwrap();
        assert_eq!(r.n_trials, 1);
        assert_eq!(r.success_strong.mean, m.success_strong);
        assert_eq!(r.throughput_gated.mean, m.throughput_gated);
        assert_eq!(r.energy_total.mean, m.energy_total);
        assert_eq!(r.throughput_gated.std_err, 0.0);
    }

    #[test]
    fn reports_are_deterministic() {
        let s = small();
        assert_eq!(run_trials(&s, 300, 42).unwrap(), run_trials(&s, 300, 42).unwrap());
        assert_ne!(run_trials(&s, 300, 42).unwrap(), run_trials(&s, 300, 43).unwrap());
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let s = Scenario {
            phase_design: PhaseDesign::Random,
            ..small()
        };
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| run_trials(&s, 500, 7).unwrap());
        let b = four.install(|| run_trials(&s, 500, 7).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn aggregation_is_permutation_invariant() {
        let s = small();
        let outcomes = simulate(&s, 400, 9).unwrap();
        let mut metrics: Vec<_> = outcomes.iter().map(|o| evaluate(o, s.sinr_threshold)).collect();
        let a = aggregate(&metrics).unwrap();
        metrics.shuffle(&mut trial_rng(1, 2, Substream::Pairing));
        let b = aggregate(&metrics).unwrap();
        for (x, y) in [
            (a.throughput_gated, b.throughput_gated),
            (a.success_joint, b.success_joint),
            (a.energy_total, b.energy_total),
        ] {
            assert!((x.mean - y.mean).abs() <= 1e-12 * x.mean.abs());
            assert!((x.std_err - y.std_err).abs() <= 1e-9 * x.std_err.abs());
        }
    }

    #[test]
    fn flags_consistent_with_sic() {
        let s = small();
        for o in simulate(&s, 200, 3).unwrap() {
            let m = evaluate(&o, s.sinr_threshold);
            assert!(m.success_weak <= m.success_strong);
            assert!(m.success_joint == m.success_weak);
            assert!(m.throughput_gated >= 0.0 && m.throughput_gated <= m.throughput_ungated);
        }
    }

    #[test]
    fn estimate_basics() {
        let e = Estimate::from_samples([1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((e.std_err - sd / 2.0).abs() < 1e-15);
        assert!((e.ci_half_width - 1.96 * e.std_err).abs() < 1e-15);
        let (lo, hi) = e.ci();
        assert!(lo < e.mean && e.mean < hi);
    }

    #[test]
    fn standard_error_shrinks_with_trials() {
        let s = Scenario {
            phase_design: PhaseDesign::Random,
            ..small()
        };
        let a = run_trials(&s, 1000, 11).unwrap().throughput_ungated.std_err;
        let b = run_trials(&s, 4000, 11).unwrap().throughput_ungated.std_err;
        let ratio = (a / b).powi(2);
        assert!((2.8..5.5).contains(&ratio), "variance ratio {ratio}");
    }

    #[test]
    fn zero_trials_and_empty_sweeps_are_errors() {
        let s = small();
        assert!(matches!(run_trials(&s, 0, 1), Err(Error::NoTrials)));
        assert!(matches!(
            sweep(&s, &SweepAxis::Tau(vec![]), 10, 1),
            Err(Error::EmptySweep)
        ));
        assert!(matches!(
            sweep(&s, &SweepAxis::GammaPair(vec![(0.3, 0.8)]), 10, 1),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn tau_sweep_is_monotone() {
        let s = small();
        let taus: Vec<f64> = (0..=20).map(|d| db_to_linear(d as f64)).collect();
        let pts = sweep(&s, &SweepAxis::Tau(taus), 500, 2).unwrap();
        for w in pts.windows(2) {
            let (a, b) = (&w[0].report, &w[1].report);
            assert!(b.success_strong.mean <= a.success_strong.mean);
            assert!(b.success_weak.mean <= a.success_weak.mean);
            assert!(b.success_joint.mean <= a.success_joint.mean);
        }
    }

    #[test]
    fn tau_sweep_matches_independent_runs() {
        let s = small();
        let pts = sweep(&s, &SweepAxis::Tau(vec![10.0, 100.0]), 200, 4).unwrap();
        let direct = run_trials(&Scenario { sinr_threshold: 100.0, ..s.clone() }, 200, 4).unwrap();
        assert_eq!(pts[1].report, direct);
    }

    #[test]
    fn efficiency_sweep_is_linear() {
        let s = small();
        let pts = sweep(&s, &SweepAxis::Efficiency(vec![0.1, 0.2]), 200, 5).unwrap();
        assert_eq!(pts[1].report.energy_total.mean, 2.0 * pts[0].report.energy_total.mean);
    }
}
