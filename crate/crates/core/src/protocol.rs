//! Frame-based transmission protocol.
//!
//! A frame is K training slots, one per BD in index order, followed by one
//! NOMA transmission slot per cluster. Training fixes the strong/weak roles:
//! BDs are sorted by received training power, split into a higher- and a
//! lower-power half, and each higher-power BD is paired with a random
//! lower-power BD. A BD that is neither training nor transmitting sleeps and
//! harvests energy from the CE carrier.

use std::ops::Add;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::channel::ChannelRealization;
use crate::noma::ClusterAssignment;
use crate::ris::{
    coherent_phases, coherent_quantized_phases, forward_aligned_phases, quantize, random_phases,
    PhaseConfig,
};
use crate::scenario::{PhaseDesign, Scenario, TrainingPhasePolicy};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("K must be even to form clusters (got {0})")]
    OddBdCount(usize),
    #[error("pairing permutation must be a permutation of 0..{0}")]
    BadPermutation(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotKind {
    Training(usize),
    /// Index into [`FramePlan::clusters`].
    Transmission(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    pub kind: SlotKind,
    /// Index into [`FramePlan::phases`].
    pub phase: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FramePlan {
    pub training_order: Vec<usize>,
    pub clusters: Vec<ClusterAssignment>,
    pub phases: Vec<PhaseConfig>,
    pub slots: Vec<Slot>,
}

impl FramePlan {
    pub fn phase_of(&self, slot: &Slot) -> &PhaseConfig {
        &self.phases[slot.phase]
    }

    /// BDs backscattering during `slot`.
    pub fn active_bds(&self, slot: &Slot) -> Vec<usize> {
        match slot.kind {
            SlotKind::Training(bd) => vec![bd],
            SlotKind::Transmission(c) => {
                let cl = self.clusters[c];
                vec![cl.strong_bd, cl.weak_bd]
            }
        }
    }

    pub fn transmission_slots(&self) -> impl Iterator<Item = (ClusterAssignment, &PhaseConfig)> {
        self.slots.iter().filter_map(move |s| match s.kind {
            SlotKind::Transmission(c) => Some((self.clusters[c], self.phase_of(s))),
            SlotKind::Training(_) => None,
        })
    }
}

/// Harvested energy per BD, joules.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnergyLedger {
    pub per_bd: Vec<f64>,
}

impl EnergyLedger {
    pub fn zeros(n_bds: usize) -> Self {
        Self {
            per_bd: vec![0.0; n_bds],
        }
    }

    pub fn total(&self) -> f64 {
        self.per_bd.iter().sum()
    }
}

impl Add for &EnergyLedger {
    type Output = EnergyLedger;

    fn add(self, rhs: &EnergyLedger) -> EnergyLedger {
        EnergyLedger {
            per_bd: self
                .per_bd
                .iter()
                .zip(&rhs.per_bd)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

fn apply_bits(theta: PhaseConfig, bits: Option<u32>) -> PhaseConfig {
    match bits {
        Some(b) => quantize(&theta, b),
        None => theta,
    }
}

/// RIS configuration used while BD `k` trains.
pub fn training_phases(real: &ChannelRealization, scenario: &Scenario, k: usize) -> PhaseConfig {
    match scenario.training_phase_policy {
        TrainingPhasePolicy::ReferenceZero => PhaseConfig::zeros(real.n_elements()),
        TrainingPhasePolicy::PerBdAligned => {
            apply_bits(forward_aligned_phases(real, k), scenario.phase_bits)
        }
    }
}

/// RIS configuration for a transmission slot, designed for the strong BD.
pub fn transmission_phases<R: Rng + ?Sized>(
    real: &ChannelRealization,
    scenario: &Scenario,
    strong_bd: usize,
    rng: &mut R,
) -> PhaseConfig {
    let n = real.n_elements();
    match scenario.phase_design {
        PhaseDesign::Random => apply_bits(random_phases(rng, n), scenario.phase_bits),
        PhaseDesign::ForwardAligned => {
            apply_bits(forward_aligned_phases(real, strong_bd), scenario.phase_bits)
        }
        PhaseDesign::CoordinateAscent => match scenario.phase_bits {
            Some(b) if n > 0 => coherent_quantized_phases(real, strong_bd, scenario.ascent_sweeps, b),
            _ => coherent_phases(real, strong_bd, scenario.ascent_sweeps),
        },
    }
}

/// Received power at the BR while each BD trains alone with `gamma1`.
pub fn run_training(real: &ChannelRealization, scenario: &Scenario) -> Vec<f64> {
    let scale = scenario.ce_power * scenario.gamma1 * scenario.gamma1;
    (0..real.n_bds())
        .map(|k| {
            let theta = training_phases(real, scenario, k);
            let c = real
                .end_to_end(&theta, k)
                .expect("training configuration matches the realization");
            scale * c.norm_sqr()
        })
        .collect()
}

/// BD indices sorted by decreasing power; ties keep index order.
pub fn power_order(powers: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..powers.len()).collect();
    order.sort_by(|&a, &b| powers[b].total_cmp(&powers[a]));
    order
}

/// Pair the i-th higher-power BD with the `permutation[i]`-th lower-power BD.
pub fn pair_groups(
    powers: &[f64],
    permutation: &[usize],
) -> Result<Vec<ClusterAssignment>, ProtocolError> {
    let k = powers.len();
    if !k.is_multiple_of(2) {
        return Err(ProtocolError::OddBdCount(k));
    }
    let half = k / 2;
    let mut seen = vec![false; half];
    if permutation.len() != half
        || permutation
            .iter()
            .any(|&p| p >= half || std::mem::replace(&mut seen[p], true))
    {
        return Err(ProtocolError::BadPermutation(half));
    }
    let order = power_order(powers);
    let (high, low) = order.split_at(half);
    Ok(high
        .iter()
        .zip(permutation)
        .map(|(&strong_bd, &p)| ClusterAssignment {
            strong_bd,
            weak_bd: low[p],
        })
        .collect())
}

/// Sort by training power and pair each higher-power BD with a uniformly
/// random lower-power BD, without replacement.
pub fn sort_and_pair<R: Rng + ?Sized>(
    powers: &[f64],
    rng: &mut R,
) -> Result<Vec<ClusterAssignment>, ProtocolError> {
    let mut permutation: Vec<usize> = (0..powers.len() / 2).collect();
    permutation.shuffle(rng);
    pair_groups(powers, &permutation)
}

/// Lay out one frame: K training slots in index order, then one transmission
/// slot per cluster carrying that cluster's RIS configuration.
pub fn build_frame<R: Rng + ?Sized>(
    scenario: &Scenario,
    clusters: &[ClusterAssignment],
    real: &ChannelRealization,
    rng: &mut R,
) -> FramePlan {
    let k = real.n_bds();
    let mut phases = Vec::new();
    let mut slots = Vec::with_capacity(k + clusters.len());

    match scenario.training_phase_policy {
        TrainingPhasePolicy::ReferenceZero => {
            phases.push(PhaseConfig::zeros(real.n_elements()));
            slots.extend((0..k).map(|bd| Slot {
                kind: SlotKind::Training(bd),
                phase: 0,
            }));
        }
        TrainingPhasePolicy::PerBdAligned => {
            for bd in 0..k {
                slots.push(Slot {
                    kind: SlotKind::Training(bd),
                    phase: phases.len(),
                });
                phases.push(training_phases(real, scenario, bd));
            }
        }
    }

    for (c, cluster) in clusters.iter().enumerate() {
        slots.push(Slot {
            kind: SlotKind::Transmission(c),
            phase: phases.len(),
        });
        phases.push(transmission_phases(real, scenario, cluster.strong_bd, rng));
    }

    FramePlan {
        training_order: (0..k).collect(),
        clusters: clusters.to_vec(),
        phases,
        slots,
    }
}

/// Energy each BD harvests while asleep, over `scenario.n_frames` identical
/// frames. A sleeping BD collects `η·P·|forward|²·T_slot` per slot.
pub fn account_energy(
    real: &ChannelRealization,
    plan: &FramePlan,
    scenario: &Scenario,
) -> EnergyLedger {
    let eta = scenario.conversion_efficiency;
    let mut per_frame = vec![0.0; real.n_bds()];
    for slot in &plan.slots {
        let active = plan.active_bds(slot);
        let theta = plan.phase_of(slot);
        for (k, acc) in per_frame.iter_mut().enumerate() {
            if active.contains(&k) {
                continue;
            }
            let incident = real
                .composite_forward(theta, k)
                .expect("plan configuration matches the realization")
                .norm_sqr();
            // η multiplies last so the ledger is exactly linear in η.
            *acc += eta * (scenario.ce_power * incident * scenario.slot_duration);
        }
    }
    let frames = scenario.n_frames as f64;
    EnergyLedger {
        per_bd: per_frame.into_iter().map(|e| e * frames).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::draw_realization;
    use crate::scenario::Position2D;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn four_bd_scenario(design: PhaseDesign) -> Scenario {
        Scenario {
            bd_positions: [10.0, 35.0, 60.0, 90.0]
                .iter()
                .map(|&x| Position2D::new(x, 0.0))
                .collect(),
            n_elements: 12,
            phase_design: design,
            ..Scenario::default()
        }
        .validate()
        .unwrap()
    }

    fn hand_realization(forward_gain: f64) -> ChannelRealization {
        // Two BDs, no RIS, |f_k|² = forward_gain.
        let f = Complex64::new(forward_gain.sqrt(), 0.0);
        ChannelRealization {
            ce_bd: vec![f, f],
            ce_ris: vec![],
            ris_bd: vec![vec![], vec![]],
            bd_br: vec![Complex64::new(1.0, 0.0); 2],
            ris_br: vec![],
        }
    }

    #[test]
    fn training_without_ris_uses_direct_product() {
        let s = Scenario { n_elements: 0, ..Scenario::default() };
        let real = draw_realization(&s, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let p = run_training(&real, &s);
        for k in 0..2 {
            let want = s.ce_power * 0.64 * (real.ce_bd[k] * real.bd_br[k]).norm_sqr();
            assert!((p[k] - want).abs() <= 1e-15 * want);
        }
    }

    #[test]
    fn training_power_linear_in_ce_power() {
        let s = Scenario::default();
        let real = draw_realization(&s, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let doubled = Scenario { ce_power: 2.0 * s.ce_power, ..s.clone() };
        let a = run_training(&real, &s);
        let b = run_training(&real, &doubled);
        for (x, y) in a.iter().zip(&b) {
            assert!((y - 2.0 * x).abs() <= 1e-15 * y);
        }
    }

    #[test]
    fn training_power_hand_value() {
        let c = Complex64::new(1.1e-10f64.sqrt(), 0.0);
        let real = ChannelRealization {
            ce_bd: vec![c, c],
            ce_ris: vec![],
            ris_bd: vec![vec![], vec![]],
            bd_br: vec![Complex64::new(1.0, 0.0); 2],
            ris_br: vec![],
        };
        let s = Scenario { ce_power: 1.0, gamma1: 0.8, ..Scenario::default() };
        let p = run_training(&real, &s);
        assert!((p[0] - 7.04e-11).abs() < 1e-22);
    }

    #[test]
    fn two_bds_form_a_forced_cluster() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = sort_and_pair(&[1.0, 2.0], &mut rng).unwrap();
        assert_eq!(c, vec![ClusterAssignment { strong_bd: 1, weak_bd: 0 }]);
    }

    #[test]
    fn pairing_with_explicit_permutation() {
        let c = pair_groups(&[4.0, 3.0, 2.0, 1.0], &[1, 0]).unwrap();
        assert_eq!(
            c,
            vec![
                ClusterAssignment { strong_bd: 0, weak_bd: 3 },
                ClusterAssignment { strong_bd: 1, weak_bd: 2 },
            ]
        );
        assert!(pair_groups(&[4.0, 3.0, 2.0, 1.0], &[1, 1]).is_err());
        assert!(pair_groups(&[1.0, 2.0, 3.0], &[0]).is_err());
    }

    #[test]
    fn seeded_pairing_draws_a_permutation() {
        let mut hits = [false; 2];
        for seed in 0..64 {
            let c = sort_and_pair(&[4.0, 3.0, 2.0, 1.0], &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            match (c[0].weak_bd, c[1].weak_bd) {
                (2, 3) => hits[0] = true,
                (3, 2) => hits[1] = true,
                other => panic!("unexpected pairing {other:?}"),
            }
        }
        assert!(hits[0] && hits[1]);
    }

    #[test]
    fn equal_powers_keep_index_order() {
        assert_eq!(power_order(&[5.0, 5.0, 5.0, 5.0]), vec![0, 1, 2, 3]);
        let c = pair_groups(&[5.0; 4], &[0, 1]).unwrap();
        assert_eq!(c[0], ClusterAssignment { strong_bd: 0, weak_bd: 2 });
        assert_eq!(c[1], ClusterAssignment { strong_bd: 1, weak_bd: 3 });
    }

    #[test]
    fn smallest_frame_layout() {
        let s = Scenario::default().validate().unwrap();
        let real = draw_realization(&s, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let clusters = [ClusterAssignment { strong_bd: 0, weak_bd: 1 }];
        let plan = build_frame(&s, &clusters, &real, &mut ChaCha8Rng::seed_from_u64(5));
        let kinds: Vec<_> = plan.slots.iter().map(|s| s.kind).collect();
        assert_eq!(
            kinds,
            vec![SlotKind::Training(0), SlotKind::Training(1), SlotKind::Transmission(0)]
        );
    }

    #[test]
    fn four_bd_frame_layout_and_configs() {
        let s = four_bd_scenario(PhaseDesign::Random);
        let real = draw_realization(&s, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
        let clusters = pair_groups(&run_training(&real, &s), &[0, 1]).unwrap();
        let plan = build_frame(&s, &clusters, &real, &mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(plan.slots.len(), 6);
        let tx: Vec<_> = plan.transmission_slots().collect();
        assert_eq!(tx.len(), 2);
        assert_ne!(tx[0].1, tx[1].1);

        let s = four_bd_scenario(PhaseDesign::CoordinateAscent);
        let plan = build_frame(&s, &clusters, &real, &mut ChaCha8Rng::seed_from_u64(7));
        let tx: Vec<_> = plan.transmission_slots().collect();
        assert_ne!(tx[0].1, tx[1].1);
        assert_eq!(*tx[0].1, coherent_phases(&real, clusters[0].strong_bd, 3));
    }

    #[test]
    fn every_bd_active_once_per_phase() {
        let s = four_bd_scenario(PhaseDesign::ForwardAligned);
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let real = draw_realization(&s, &mut rng).unwrap();
            let powers = run_training(&real, &s);
            let clusters = sort_and_pair(&powers, &mut rng).unwrap();
            for c in &clusters {
                assert!(powers[c.strong_bd] >= powers[c.weak_bd]);
            }
            let plan = build_frame(&s, &clusters, &real, &mut rng);
            for bd in 0..4 {
                let train = plan
                    .slots
                    .iter()
                    .filter(|sl| matches!(sl.kind, SlotKind::Training(_)) && plan.active_bds(sl).contains(&bd))
                    .count();
                let tx = plan
                    .slots
                    .iter()
                    .filter(|sl| matches!(sl.kind, SlotKind::Transmission(_)) && plan.active_bds(sl).contains(&bd))
                    .count();
                assert_eq!((train, tx), (1, 1));
            }
        }
    }

    #[test]
    fn energy_hand_value() {
        let s = Scenario {
            ce_power: 1.0,
            conversion_efficiency: 0.2,
            slot_duration: 0.01,
            n_frames: 100,
            n_elements: 0,
            ..Scenario::default()
        };
        let real = hand_realization(1e-3);
        let clusters = [ClusterAssignment { strong_bd: 0, weak_bd: 1 }];
        let plan = build_frame(&s, &clusters, &real, &mut ChaCha8Rng::seed_from_u64(0));
        let one = Scenario { n_frames: 1, ..s.clone() };
        let per_frame = account_energy(&real, &plan, &one);
        assert!((per_frame.per_bd[0] - 2e-6).abs() < 1e-18);
        let ledger = account_energy(&real, &plan, &s);
        assert!((ledger.per_bd[0] - 2e-4).abs() < 1e-16);
        assert!((ledger.per_bd[1] - 2e-4).abs() < 1e-16);
    }

    #[test]
    fn energy_zero_and_linear_in_efficiency() {
        let s = four_bd_scenario(PhaseDesign::CoordinateAscent);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let real = draw_realization(&s, &mut rng).unwrap();
        let clusters = sort_and_pair(&run_training(&real, &s), &mut rng).unwrap();
        let plan = build_frame(&s, &clusters, &real, &mut rng);
        let zero = Scenario { conversion_efficiency: 0.0, ..s.clone() };
        assert!(account_energy(&real, &plan, &zero).per_bd.iter().all(|&e| e == 0.0));
        let a = account_energy(&real, &plan, &Scenario { conversion_efficiency: 0.1, ..s.clone() });
        let b = account_energy(&real, &plan, &Scenario { conversion_efficiency: 0.2, ..s.clone() });
        for (x, y) in a.per_bd.iter().zip(&b.per_bd) {
            assert_eq!(*y, 2.0 * x);
        }
    }

    #[test]
    fn energy_invariant_under_cluster_relabeling() {
        let s = four_bd_scenario(PhaseDesign::ForwardAligned);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let real = draw_realization(&s, &mut rng).unwrap();
        let clusters = sort_and_pair(&run_training(&real, &s), &mut rng).unwrap();
        let swapped = [clusters[1], clusters[0]];
        let a = account_energy(&real, &build_frame(&s, &clusters, &real, &mut rng), &s);
        let b = account_energy(&real, &build_frame(&s, &swapped, &real, &mut rng), &s);
        for (x, y) in a.per_bd.iter().zip(&b.per_bd) {
            assert!((x - y).abs() <= 1e-12 * x.abs());
        }
    }

    #[test]
    fn ledger_addition() {
        let a = EnergyLedger { per_bd: vec![1.0, 2.0] };
        let b = EnergyLedger { per_bd: vec![0.5, 0.25] };
        assert_eq!((&a + &b).per_bd, vec![1.5, 2.25]);
        assert_eq!((&a + &b).total(), 3.75);
    }

    proptest! {
        #[test]
        fn pairing_respects_power_order(powers in proptest::collection::vec(0.0f64..1.0, 1..5), seed in any::<u64>()) {
            let mut p = powers.clone();
            p.extend(powers.iter().map(|x| x * 0.5));
            let clusters = sort_and_pair(&p, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let mut used: Vec<usize> = clusters.iter().flat_map(|c| [c.strong_bd, c.weak_bd]).collect();
            used.sort_unstable();
            prop_assert_eq!(used, (0..p.len()).collect::<Vec<_>>());
            for c in clusters {
                prop_assert!(p[c.strong_bd] >= p[c.weak_bd]);
            }
        }
    }
}
