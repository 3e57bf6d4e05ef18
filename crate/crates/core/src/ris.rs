//! RIS phase configurations: random, forward-aligned and coordinate-ascent
//! designs, plus uniform B-bit quantization.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;

use crate::channel::ChannelRealization;

/// Number of candidate angles per element visited by [`coherent_phases`].
pub const ASCENT_GRID_SIZE: usize = 256;

/// Map any finite angle into `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    // rem_euclid rounds tiny negative inputs up to exactly 2π.
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Phase shifts of the N RIS elements, radians in `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseConfig {
    theta: Vec<f64>,
}

impl PhaseConfig {
    pub fn new(theta: Vec<f64>) -> Self {
        Self {
            theta: theta.into_iter().map(wrap_angle).collect(),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self { theta: vec![0.0; n] }
    }

    /// Bypasses canonicalization so tests can feed out-of-range angles.
    #[cfg(test)]
    pub(crate) fn from_raw(theta: Vec<f64>) -> Self {
        Self { theta }
    }

    pub fn angles(&self) -> &[f64] {
        &self.theta
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }
}

/// i.i.d. uniform phases on `[0, 2π)`.
pub fn random_phases<R: Rng + ?Sized>(rng: &mut R, n: usize) -> PhaseConfig {
    PhaseConfig::new((0..n).map(|_| rng.random_range(0.0..TAU)).collect())
}

/// Rotate every reflected CE→RIS→BD path onto the phase of the direct CE→BD
/// path, which maximizes `|composite_forward|` exactly. A zero direct path
/// falls back to reference phase 0.
pub fn forward_aligned_phases(real: &ChannelRealization, k: usize) -> PhaseConfig {
    let f = real.ce_bd[k];
    let reference = if f == Complex64::new(0.0, 0.0) { 0.0 } else { f.arg() };
    PhaseConfig::new(
        real.ce_ris
            .iter()
            .zip(&real.ris_bd[k])
            .map(|(g, h)| reference - (g * h).arg())
            .collect(),
    )
}

fn grid_phasors(levels: usize) -> (Vec<f64>, Vec<Complex64>) {
    let step = TAU / levels as f64;
    let angles: Vec<f64> = (0..levels).map(|m| m as f64 * step).collect();
    let phasors = angles.iter().map(|&a| Complex64::from_polar(1.0, a)).collect();
    (angles, phasors)
}

/// Element-wise coordinate ascent of `|fwd·bwd|` over a fixed angle grid.
///
/// `theta` must already lie on the grid, which makes each update
/// non-decreasing: the current angle is always among the candidates.
fn grid_ascent(
    real: &ChannelRealization,
    k: usize,
    mut theta: Vec<f64>,
    levels: usize,
    sweeps: usize,
) -> Vec<f64> {
    let (angles, phasors) = grid_phasors(levels);
    let (fwd_terms, bwd_terms) = real.cascade_terms(k);
    let direct_fwd = real.ce_bd[k];
    let direct_bwd = real.bd_br[k];

    for _ in 0..sweeps {
        // Recompute the running sums each sweep so rounding does not drift.
        let current: Vec<Complex64> = theta.iter().map(|&t| Complex64::from_polar(1.0, t)).collect();
        let mut fwd = direct_fwd
            + fwd_terms.iter().zip(&current).map(|(a, e)| a * e).sum::<Complex64>();
        let mut bwd = direct_bwd
            + bwd_terms.iter().zip(&current).map(|(b, e)| b * e).sum::<Complex64>();

        for n in 0..theta.len() {
            let a = fwd_terms[n];
            let b = bwd_terms[n];
            let rest_fwd = fwd - a * current[n];
            let rest_bwd = bwd - b * current[n];

            let mut best = 0;
            let mut best_val = f64::NEG_INFINITY;
            for (m, w) in phasors.iter().enumerate() {
                let val = ((rest_fwd + a * w) * (rest_bwd + b * w)).norm_sqr();
                if val > best_val {
                    best_val = val;
                    best = m;
                }
            }
            theta[n] = angles[best];
            fwd = rest_fwd + a * phasors[best];
            bwd = rest_bwd + b * phasors[best];
        }
    }
    theta
}

/// Coherent design on the two-hop product: coordinate ascent over the
/// 256-point grid, starting from the grid-snapped forward-aligned phases and
/// visiting elements in index order for `sweeps` passes.
pub fn coherent_phases(real: &ChannelRealization, k: usize, sweeps: usize) -> PhaseConfig {
    if real.n_elements() == 0 {
        return PhaseConfig::zeros(0);
    }
    let init = quantize(&forward_aligned_phases(real, k), 8);
    PhaseConfig {
        theta: grid_ascent(real, k, init.theta, ASCENT_GRID_SIZE, sweeps),
    }
}

/// Snap every phase to the nearest of `2^bits` uniform levels; ties go to the
/// lower level.
pub fn quantize(theta: &PhaseConfig, bits: u32) -> PhaseConfig {
    let levels = 1usize << bits;
    let step = TAU / levels as f64;
    PhaseConfig {
        theta: theta
            .theta
            .iter()
            .map(|&t| {
                let x = t / step;
                let lower = x.floor();
                let idx = if x - lower > 0.5 { lower + 1.0 } else { lower };
                (idx as usize % levels) as f64 * step
            })
            .collect(),
    }
}

/// Coherent design for a `bits`-bit RIS: continuous coordinate ascent,
/// quantization, then coordinate ascent restricted to the `2^bits` levels.
pub fn coherent_quantized_phases(
    real: &ChannelRealization,
    k: usize,
    sweeps: usize,
    bits: u32,
) -> PhaseConfig {
    let snapped = quantize(&coherent_phases(real, k, sweeps), bits);
    PhaseConfig {
        theta: grid_ascent(real, k, snapped.theta, 1 << bits, sweeps),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::draw_realization;
    use crate::scenario::Scenario;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn realization(n: usize, seed: u64) -> ChannelRealization {
        let s = Scenario {
            n_elements: n,
            ..Scenario::default()
        };
        draw_realization(&s, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    fn objective(real: &ChannelRealization, theta: &PhaseConfig, k: usize) -> f64 {
        real.end_to_end(theta, k).unwrap().norm()
    }

    #[test]
    fn wrap_handles_edges() {
        assert_eq!(wrap_angle(-1e-18), 0.0);
        assert_eq!(wrap_angle(TAU), 0.0);
        assert!((wrap_angle(-PI / 3.0) - 5.0 * PI / 3.0).abs() < 1e-15);
    }

    #[test]
    fn random_phases_basic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(random_phases(&mut rng, 0).is_empty());
        let a = random_phases(&mut ChaCha8Rng::seed_from_u64(2), 16);
        let b = random_phases(&mut ChaCha8Rng::seed_from_u64(2), 16);
        assert_eq!(a, b);
        assert!(a.angles().iter().all(|&t| (0.0..TAU).contains(&t)));
    }

    #[test]
    fn random_phase_first_moment_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_phases(&mut rng, 1_000_000);
        let mean = p.angles().iter().map(|&t| Complex64::from_polar(1.0, t)).sum::<Complex64>()
            / p.len() as f64;
        assert!(mean.norm() < 0.01, "{mean}");
    }

    #[test]
    fn forward_aligned_hits_triangle_bound() {
        for seed in 0..50 {
            let r = realization(16, seed);
            for k in 0..2 {
                let theta = forward_aligned_phases(&r, k);
                let bound = r.ce_bd[k].norm()
                    + r.ce_ris.iter().zip(&r.ris_bd[k]).map(|(g, h)| (g * h).norm()).sum::<f64>();
                let got = r.composite_forward(&theta, k).unwrap().norm();
                assert!((got - bound).abs() <= 1e-12 * bound);
            }
        }
    }

    #[test]
    fn forward_aligned_single_element() {
        let r = ChannelRealization {
            ce_bd: vec![c(1.0, 0.0)],
            ce_ris: vec![Complex64::from_polar(1.0, PI / 3.0)],
            ris_bd: vec![vec![c(1.0, 0.0)]],
            bd_br: vec![c(1.0, 0.0)],
            ris_br: vec![c(1.0, 0.0)],
        };
        let theta = forward_aligned_phases(&r, 0);
        assert!((theta.angles()[0] - 5.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn forward_aligned_with_zero_phases_is_zero() {
        let r = ChannelRealization {
            ce_bd: vec![c(2.0, 0.0)],
            ce_ris: vec![c(0.5, 0.0); 3],
            ris_bd: vec![vec![c(0.1, 0.0); 3]],
            bd_br: vec![c(1.0, 0.0)],
            ris_br: vec![c(1.0, 0.0); 3],
        };
        assert_eq!(forward_aligned_phases(&r, 0), PhaseConfig::zeros(3));
        // A vanishing direct path aligns to reference phase 0.
        let r0 = ChannelRealization { ce_bd: vec![c(0.0, 0.0)], ..r };
        assert_eq!(forward_aligned_phases(&r0, 0), PhaseConfig::zeros(3));
    }

    #[test]
    fn single_element_ascent_matches_exhaustive_grid() {
        for seed in 0..100 {
            let r = realization(1, seed);
            let got = coherent_phases(&r, 0, 3);
            let (angles, _) = grid_phasors(ASCENT_GRID_SIZE);
            let mut best = (f64::NEG_INFINITY, 0.0);
            for &a in &angles {
                let v = r.end_to_end(&PhaseConfig::new(vec![a]), 0).unwrap().norm_sqr();
                if v > best.0 {
                    best = (v, a);
                }
            }
            assert_eq!(got.angles()[0], best.1, "seed {seed}");
        }
    }

    #[test]
    fn ascent_never_loses_to_its_start() {
        for seed in 0..200 {
            let r = realization(24, seed);
            for k in 0..2 {
                let init = forward_aligned_phases(&r, k);
                let ca = coherent_phases(&r, k, 3);
                assert!(objective(&r, &ca, k) >= objective(&r, &init, k), "seed {seed}");
            }
        }
    }

    #[test]
    fn ascent_is_deterministic() {
        let r = realization(30, 11);
        assert_eq!(coherent_phases(&r, 0, 3), coherent_phases(&r, 0, 3));
    }

    #[test]
    fn quantize_examples() {
        let q = quantize(&PhaseConfig::new(vec![0.1, 3.0]), 1);
        assert_eq!(q.angles(), &[0.0, PI]);
        // Ties round down: π/2 sits halfway between 0 and π.
        let q = quantize(&PhaseConfig::new(vec![PI / 2.0]), 1);
        assert_eq!(q.angles(), &[0.0]);
        // Close to 2π wraps to level 0.
        let q = quantize(&PhaseConfig::new(vec![6.2]), 2);
        assert_eq!(q.angles(), &[0.0]);
    }

    #[test]
    fn ascent_output_lies_on_eight_bit_grid() {
        let r = realization(20, 12);
        let ca = coherent_phases(&r, 0, 3);
        assert_eq!(quantize(&ca, 8), ca);
    }

    #[test]
    fn quantized_design_uses_only_allowed_levels() {
        let r = realization(6, 13);
        let q = coherent_quantized_phases(&r, 0, 3, 1);
        assert!(q.angles().iter().all(|&t| t == 0.0 || t == PI));
        assert!(objective(&r, &q, 0) >= objective(&r, &quantize(&coherent_phases(&r, 0, 3), 1), 0));
    }

    proptest! {
        #[test]
        fn quantize_is_idempotent(
            angles in proptest::collection::vec(-10.0f64..10.0, 0..20),
            bits in 1u32..9,
        ) {
            let once = quantize(&PhaseConfig::new(angles), bits);
            prop_assert_eq!(quantize(&once, bits), once);
        }

        #[test]
        fn forward_alignment_ignores_phase_origin(seed in any::<u64>(), shift in -PI..PI) {
            let r = realization(8, seed);
            let rot = Complex64::from_polar(1.0, shift);
            let rotated = ChannelRealization {
                ce_bd: r.ce_bd.iter().map(|x| x * rot).collect(),
                ce_ris: r.ce_ris.iter().map(|x| x * rot).collect(),
                ..r.clone()
            };
            let a = r.composite_forward(&forward_aligned_phases(&r, 0), 0).unwrap().norm();
            let b = rotated.composite_forward(&forward_aligned_phases(&rotated, 0), 0).unwrap().norm();
            prop_assert!((a - b).abs() <= 1e-12 * a);
        }

        #[test]
        fn coherent_forward_beats_random_forward(seed in any::<u64>()) {
            let r = realization(16, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            let aligned = r.composite_forward(&forward_aligned_phases(&r, 0), 0).unwrap().norm();
            let random = r.composite_forward(&random_phases(&mut rng, 16), 0).unwrap().norm();
            prop_assert!(aligned >= random * (1.0 - 1e-12));
        }
    }
}
