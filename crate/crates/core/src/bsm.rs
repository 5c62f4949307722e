//! The four-crystal up-conversion Bell measurement.
//!
//! Photons 1 and 2 enter two type-I and two type-II sum-frequency crystals.
//! The type-I pair fuses |00> and |11> amplitude components into one
//! up-converted photon (two horizontals produce |V4>, two verticals |H4>);
//! the type-II pair fuses the cross terms |01> -> |H4> and |10> -> |V4>.
//! A 45/135 degree analyzer behind each crystal pair then splits the
//! up-converted photon onto four detectors, one per Bell state:
//!
//!   D4I <-> PhiPlus, D4II <-> PhiMinus, D4III <-> PsiPlus, D4IV <-> PsiMinus
//!
//! Detection is thinned by the lumped conversion efficiency eta and by the
//! Gaussian beam-overlap factor g(dx) = exp(-dx^2 / (2 sigma^2)) set by the
//! prism position; with probability 1 - eta g no detector fires.

use num_complex::Complex64;
use rand::Rng;
use std::fmt;

use crate::error::{Error, Result};
use crate::sources::{compose_three, prepare_epr, EprParams, InputState};
use crate::states::{c, cr, BellState, DensityMatrix, PureState};

/// Conditional-state weights below this are treated as a dead branch.
const PROB_FLOOR: f64 = 1e-14;

/// Diagonal-basis sign convention for the analyzer behind the crystals:
/// |H> = (|45> + |135>)/sqrt2 and |V> = (|45> - |135>)/sqrt2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BasisConvention {
    #[default]
    StandardDiagonal,
}

/// Physical settings of the measurement apparatus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsmParams {
    /// Lumped conversion-and-detection efficiency, in (0, 1].
    pub sfg_efficiency: f64,
    /// Prism displacement from perfect beam overlap, micrometers.
    pub prism_offset_um: f64,
    /// Gaussian width of the overlap envelope, micrometers.
    pub overlap_sigma_um: f64,
    pub basis_convention: BasisConvention,
}

impl Default for BsmParams {
    fn default() -> Self {
        BsmParams {
            sfg_efficiency: 1.0,
            prism_offset_um: 0.0,
            overlap_sigma_um: 50.0,
            basis_convention: BasisConvention::StandardDiagonal,
        }
    }
}

impl BsmParams {
    pub fn validate(&self) -> Result<()> {
        if !self.sfg_efficiency.is_finite()
            || self.sfg_efficiency <= 0.0
            || self.sfg_efficiency > 1.0
        {
            return Err(Error::EfficiencyOutOfRange(self.sfg_efficiency));
        }
        if !self.overlap_sigma_um.is_finite() || self.overlap_sigma_um <= 0.0 {
            return Err(Error::SigmaOutOfRange(self.overlap_sigma_um));
        }
        if !self.prism_offset_um.is_finite() {
            return Err(Error::OffsetOutOfRange(self.prism_offset_um));
        }
        Ok(())
    }

    /// Combined thinning factor eta * g(dx) applied to every detector.
    pub fn detection_factor(&self) -> Result<f64> {
        self.validate()?;
        Ok(self.sfg_efficiency * overlap_factor(self.prism_offset_um, self.overlap_sigma_um)?)
    }
}

/// Gaussian overlap envelope g(dx) = exp(-dx^2 / (2 sigma^2)).
pub fn overlap_factor(delta_x_um: f64, sigma_um: f64) -> Result<f64> {
    if !sigma_um.is_finite() || sigma_um <= 0.0 {
        return Err(Error::SigmaOutOfRange(sigma_um));
    }
    if !delta_x_um.is_finite() {
        return Err(Error::OffsetOutOfRange(delta_x_um));
    }
    Ok((-delta_x_um * delta_x_um / (2.0 * sigma_um * sigma_um)).exp())
}

/// The four single-photon counters plus the no-click outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectorId {
    D4I,
    D4II,
    D4III,
    D4IV,
    NoDetection,
}

impl DetectorId {
    /// The firing detectors in canonical order; indexes match the two-bit
    /// classical message codes.
    pub const FIRING: [DetectorId; 4] = [
        DetectorId::D4I,
        DetectorId::D4II,
        DetectorId::D4III,
        DetectorId::D4IV,
    ];

    /// Bell state keyed to this detector, `None` for the no-click outcome.
    pub fn bell_state(self) -> Option<BellState> {
        match self {
            DetectorId::D4I => Some(BellState::PhiPlus),
            DetectorId::D4II => Some(BellState::PhiMinus),
            DetectorId::D4III => Some(BellState::PsiPlus),
            DetectorId::D4IV => Some(BellState::PsiMinus),
            DetectorId::NoDetection => None,
        }
    }

    pub fn from_bell(bell: BellState) -> Self {
        match bell {
            BellState::PhiPlus => DetectorId::D4I,
            BellState::PhiMinus => DetectorId::D4II,
            BellState::PsiPlus => DetectorId::D4III,
            BellState::PsiMinus => DetectorId::D4IV,
        }
    }

    /// Index into [`DetectorId::FIRING`], `None` for the no-click outcome.
    pub fn firing_index(self) -> Option<usize> {
        match self {
            DetectorId::D4I => Some(0),
            DetectorId::D4II => Some(1),
            DetectorId::D4III => Some(2),
            DetectorId::D4IV => Some(3),
            DetectorId::NoDetection => None,
        }
    }

    /// Coincidence label against Bob's analyzer detector, e.g. "D4I-D3".
    pub fn pair_label(self) -> Option<&'static str> {
        match self {
            DetectorId::D4I => Some("D4I-D3"),
            DetectorId::D4II => Some("D4II-D3"),
            DetectorId::D4III => Some("D4III-D3"),
            DetectorId::D4IV => Some("D4IV-D3"),
            DetectorId::NoDetection => None,
        }
    }

    pub fn from_pair_label(label: &str) -> Result<Self> {
        DetectorId::FIRING
            .into_iter()
            .find(|d| d.pair_label() == Some(label))
            .ok_or_else(|| Error::UnknownDetectorPair(label.to_string()))
    }

    pub fn name(self) -> &'static str {
        match self {
            DetectorId::D4I => "D4I",
            DetectorId::D4II => "D4II",
            DetectorId::D4III => "D4III",
            DetectorId::D4IV => "D4IV",
            DetectorId::NoDetection => "NoDetection",
        }
    }
}

impl fmt::Display for DetectorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Amplitudes behind the two crystal pairs for one three-photon ket.
///
/// Each branch is a 4-vector over the up-converted photon and photon 3,
/// ordered |H4 0>, |H4 1>, |V4 0>, |V4 1>. The two branches together carry
/// the full input norm.
#[derive(Debug, Clone, PartialEq)]
pub struct SfgRouting {
    pub type_i: [Complex64; 4],
    pub type_ii: [Complex64; 4],
}

impl SfgRouting {
    pub fn total_norm_sqr(&self) -> f64 {
        self.type_i.iter().map(|a| a.norm_sqr()).sum::<f64>()
            + self.type_ii.iter().map(|a| a.norm_sqr()).sum::<f64>()
    }
}

/// Routes an 8-dimensional ket through the crystals.
///
/// With amplitudes indexed by (q1 q2 q3): |00x> and |11x> feed the type-I
/// branch as |V4 x> and |H4 x|; |01x> and |10x> feed the type-II branch as
/// |H4 x> and |V4 x>.
pub fn sfg_route(s: &PureState) -> Result<SfgRouting> {
    if s.dim() != 8 {
        return Err(Error::DimensionMismatch(s.dim(), 8));
    }
    let z = c(0.0, 0.0);
    let mut type_i = [z; 4];
    let mut type_ii = [z; 4];
    for x in 0..2 {
        type_i[2 + x] = s.amp(x); //       |0 0 x> -> |V4 x>
        type_i[x] = s.amp(6 + x); //       |1 1 x> -> |H4 x>
        type_ii[x] = s.amp(2 + x); //      |0 1 x> -> |H4 x>
        type_ii[2 + x] = s.amp(4 + x); //  |1 0 x> -> |V4 x>
    }
    Ok(SfgRouting { type_i, type_ii })
}

/// The two analyzer-and-detector assemblies behind the crystal pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projector {
    /// Behind the type-I crystals; feeds D4I (45) and D4II (135).
    G1,
    /// Behind the type-II crystals; feeds D4III (45) and D4IV (135).
    G2,
}

/// Splits a crystal branch on the 45/135 analyzer and keys each output port
/// to its detector. Port amplitudes are photon-3 pairs (over |0>, |1>).
///
/// The ports reproduce the Bell projections of the input up to a global
/// sign: the 135 port of G1 carries -<PhiMinus| rather than +<PhiMinus|,
/// which no detector can observe.
pub fn project_g(branch: &[Complex64; 4], which: Projector) -> [(DetectorId, [Complex64; 2]); 2] {
    let r = cr(std::f64::consts::FRAC_1_SQRT_2);
    let mut port45 = [c(0.0, 0.0); 2];
    let mut port135 = [c(0.0, 0.0); 2];
    for x in 0..2 {
        port45[x] = (branch[x] + branch[2 + x]) * r;
        port135[x] = (branch[x] - branch[2 + x]) * r;
    }
    match which {
        Projector::G1 => [(DetectorId::D4I, port45), (DetectorId::D4II, port135)],
        Projector::G2 => [(DetectorId::D4III, port45), (DetectorId::D4IV, port135)],
    }
}

/// Full outcome distribution of the measurement on one three-photon state:
/// per-detector probabilities and conditional Bob states, plus the no-click
/// probability. Probabilities sum to 1.
#[derive(Debug, Clone)]
pub struct BsmDistribution {
    detection_factor: f64,
    probabilities: [f64; 4],
    bob_states: [Option<DensityMatrix>; 4],
}

impl BsmDistribution {
    pub fn detection_factor(&self) -> f64 {
        self.detection_factor
    }

    pub fn probability(&self, detector: DetectorId) -> f64 {
        match detector.firing_index() {
            Some(k) => self.probabilities[k],
            None => self.no_detection_probability(),
        }
    }

    pub fn no_detection_probability(&self) -> f64 {
        1.0 - self.detection_factor
    }

    /// Conditional Bob state given the detector fired; `None` for the
    /// no-click outcome or a detector this state can never trigger.
    pub fn bob_state(&self, detector: DetectorId) -> Option<&DensityMatrix> {
        detector
            .firing_index()
            .and_then(|k| self.bob_states[k].as_ref())
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum::<f64>() + self.no_detection_probability()
    }

    /// All five outcomes in canonical order, no-click last.
    pub fn iter(&self) -> impl Iterator<Item = (DetectorId, f64, Option<&DensityMatrix>)> {
        DetectorId::FIRING
            .into_iter()
            .enumerate()
            .map(move |(k, d)| (d, self.probabilities[k], self.bob_states[k].as_ref()))
            .chain(std::iter::once((
                DetectorId::NoDetection,
                self.no_detection_probability(),
                None,
            )))
    }

    /// Draws a detector outcome; consumes exactly one uniform variate.
    pub fn sample_detector<R: Rng + ?Sized>(&self, rng: &mut R) -> DetectorId {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (k, d) in DetectorId::FIRING.into_iter().enumerate() {
            acc += self.probabilities[k];
            if u < acc {
                return d;
            }
        }
        DetectorId::NoDetection
    }
}

/// Projects photons 1 and 2 of `rho` onto a Bell state. Returns the branch
/// weight and the conditional photon-3 state, `None` when the weight is
/// negligible.
fn bell_branch(rho: &DensityMatrix, bell: BellState) -> (f64, Option<DensityMatrix>) {
    let b = bell.vector();
    let mut m = [[c(0.0, 0.0); 2]; 2];
    for (x, row) in m.iter_mut().enumerate() {
        for (y, slot) in row.iter_mut().enumerate() {
            let mut acc = c(0.0, 0.0);
            for ij in 0..4 {
                for kl in 0..4 {
                    acc += b.amp(ij).conj() * b.amp(kl) * rho.entry(ij * 2 + x, kl * 2 + y);
                }
            }
            *slot = acc;
        }
    }
    let weight = (m[0][0].re + m[1][1].re).max(0.0);
    if weight <= PROB_FLOOR {
        return (weight, None);
    }
    let inv = cr(1.0 / weight);
    let entries = vec![m[0][0] * inv, m[0][1] * inv, m[1][0] * inv, m[1][1] * inv];
    (weight, Some(DensityMatrix::from_raw(2, entries)))
}

/// Computes the outcome distribution P(D) = eta g(dx) tr[(Pi_D (x) I) rho]
/// together with each conditional Bob state.
pub fn bsm_probabilities(rho: &DensityMatrix, params: &BsmParams) -> Result<BsmDistribution> {
    if rho.dim() != 8 {
        return Err(Error::DimensionMismatch(rho.dim(), 8));
    }
    rho.validate()?;
    let factor = params.detection_factor()?;
    let mut probabilities = [0.0; 4];
    let mut bob_states: [Option<DensityMatrix>; 4] = [None, None, None, None];
    for (k, d) in DetectorId::FIRING.into_iter().enumerate() {
        let bell = d.bell_state().expect("firing detectors map to Bell states");
        let (weight, conditional) = bell_branch(rho, bell);
        probabilities[k] = factor * weight;
        bob_states[k] = conditional;
    }
    Ok(BsmDistribution {
        detection_factor: factor,
        probabilities,
        bob_states,
    })
}

/// One sampled run of the measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct BellOutcome {
    pub detector: DetectorId,
    /// Bob's photon after the click, absent exactly when nothing fired.
    /// A mixed conditional (visibility below 1) is reported as one pure
    /// state drawn from its eigendecomposition.
    pub bob_state: Option<PureState>,
    /// Probability the sampled outcome had under the distribution.
    pub probability: f64,
}

/// Samples one measurement outcome from scratch.
pub fn measure_bsm<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    params: &BsmParams,
    rng: &mut R,
) -> Result<BellOutcome> {
    let dist = bsm_probabilities(rho, params)?;
    Ok(sample_outcome(&dist, rng))
}

/// Samples a detector and, for mixed conditionals, one pure state from the
/// conditional's eigendecomposition.
pub fn sample_outcome<R: Rng + ?Sized>(dist: &BsmDistribution, rng: &mut R) -> BellOutcome {
    let detector = dist.sample_detector(rng);
    let probability = dist.probability(detector);
    let bob_state = dist
        .bob_state(detector)
        .map(|conditional| sample_pure(conditional, rng));
    BellOutcome {
        detector,
        bob_state,
        probability,
    }
}

fn sample_pure<R: Rng + ?Sized>(rho: &DensityMatrix, rng: &mut R) -> PureState {
    let pairs = rho.eigen_pairs();
    // pure conditionals resolve deterministically and burn no variate
    if pairs[0].0 >= 1.0 - 1e-9 {
        return pairs[0].1.clone();
    }
    let total: f64 = pairs.iter().map(|(w, _)| w).sum();
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (w, state) in &pairs {
        acc += w;
        if u < acc {
            return state.clone();
        }
    }
    pairs
        .last()
        .expect("eigendecomposition is nonempty")
        .1
        .clone()
}

/// Distribution for an input-and-pair configuration; photons are composed
/// internally.
pub fn bsm_for_setup(
    input: &InputState,
    epr: &EprParams,
    params: &BsmParams,
) -> Result<BsmDistribution> {
    let rho = compose_three(input, &prepare_epr(epr)?)?;
    bsm_probabilities(&rho, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sources::compose_three_pure;
    use crate::states::{bell_decompose, fidelity, kron, TOL};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn overlap_factor_matches_frozen_values() {
        assert_close(overlap_factor(0.0, 50.0).unwrap(), 1.0, 0.0);
        // g(sigma) = e^{-1/2}
        assert_close(
            overlap_factor(50.0, 50.0).unwrap(),
            0.6065306597126334,
            1e-15,
        );
        assert_close(
            overlap_factor(-50.0, 50.0).unwrap(),
            overlap_factor(50.0, 50.0).unwrap(),
            0.0,
        );
        // half maximum at dx = sigma sqrt(2 ln 2)
        let half_width = 50.0 * (2.0 * std::f64::consts::LN_2).sqrt();
        assert_close(overlap_factor(half_width, 50.0).unwrap(), 0.5, 1e-12);
        assert!(matches!(
            overlap_factor(1.0, 0.0),
            Err(Error::SigmaOutOfRange(_))
        ));
    }

    #[test]
    fn params_validation_bounds() {
        let mut p = BsmParams::default();
        assert!(p.validate().is_ok());
        p.sfg_efficiency = 0.0;
        assert!(matches!(p.validate(), Err(Error::EfficiencyOutOfRange(_))));
        p.sfg_efficiency = 1.5;
        assert!(matches!(p.validate(), Err(Error::EfficiencyOutOfRange(_))));
        p = BsmParams::default();
        p.overlap_sigma_um = -3.0;
        assert!(matches!(p.validate(), Err(Error::SigmaOutOfRange(_))));
    }

    #[test]
    fn routing_follows_the_crystal_table() {
        // |000>: two horizontals fuse in type-I to |V4 0>
        let s = PureState::basis(8, 0).unwrap();
        let routed = sfg_route(&s).unwrap();
        assert_close(routed.type_i[2].norm_sqr(), 1.0, 0.0);
        assert_close(routed.type_ii.iter().map(|a| a.norm_sqr()).sum::<f64>(), 0.0, 0.0);

        // |111>: two verticals fuse in type-I to |H4 1>
        let s = PureState::basis(8, 7).unwrap();
        let routed = sfg_route(&s).unwrap();
        assert_close(routed.type_i[1].norm_sqr(), 1.0, 0.0);

        // |010>: cross term fuses in type-II to |H4 0>
        let s = PureState::basis(8, 2).unwrap();
        let routed = sfg_route(&s).unwrap();
        assert_close(routed.type_ii[0].norm_sqr(), 1.0, 0.0);

        // |101>: cross term fuses in type-II to |V4 1>
        let s = PureState::basis(8, 5).unwrap();
        let routed = sfg_route(&s).unwrap();
        assert_close(routed.type_ii[3].norm_sqr(), 1.0, 0.0);
    }

    #[test]
    fn analyzer_ports_reproduce_the_conditional_states() {
        // For alpha|0> + beta|1> against the ideal pair the type-I branch is
        // (-beta|H4> + alpha|V4>)(...)/sqrt2 and the analyzer ports carry
        //   45:  (alpha|0> - beta|1>)/2   -> D4I
        //   135: -(alpha|0> + beta|1>)/2  -> D4II
        // while the type-II ports carry
        //   45:  (beta|0> - alpha|1>)/2   -> D4III
        //   135: (-beta|0> - alpha|1>)/2  -> D4IV
        // Each port then holds norm 1/4, summing to the full input norm.
        let alpha = c(0.11, 0.47);
        let beta = c(-0.62, 0.2);
        let input = PureState::from_unnormalized(vec![alpha, beta]).unwrap();
        let (alpha, beta) = (input.amp(0), input.amp(1));
        let s = kron(&input, &BellState::PhiMinus.vector()).unwrap();
        let routed = sfg_route(&s).unwrap();
        assert_close(routed.total_norm_sqr(), 1.0, TOL);

        let half = cr(0.5);
        let g1 = project_g(&routed.type_i, Projector::G1);
        assert_eq!(g1[0].0, DetectorId::D4I);
        assert!((g1[0].1[0] - half * alpha).norm() <= TOL);
        assert!((g1[0].1[1] + half * beta).norm() <= TOL);
        assert_eq!(g1[1].0, DetectorId::D4II);
        assert!((g1[1].1[0] + half * alpha).norm() <= TOL);
        assert!((g1[1].1[1] + half * beta).norm() <= TOL);

        let g2 = project_g(&routed.type_ii, Projector::G2);
        assert_eq!(g2[0].0, DetectorId::D4III);
        assert!((g2[0].1[0] - half * beta).norm() <= TOL);
        assert!((g2[0].1[1] + half * alpha).norm() <= TOL);
        assert_eq!(g2[1].0, DetectorId::D4IV);
        assert!((g2[1].1[0] + half * beta).norm() <= TOL);
        assert!((g2[1].1[1] + half * alpha).norm() <= TOL);
    }

    #[test]
    fn routing_then_projecting_equals_bell_projection() {
        // Independent route: bell_decompose projects straight onto the Bell
        // basis. The crystal-and-analyzer chain must give the same branch
        // weights and, up to a global sign, the same branch states.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let s = PureState::haar_random(8, &mut rng).unwrap();
            let branches = bell_decompose(&s).unwrap();
            let routed = sfg_route(&s).unwrap();
            let ports = [
                project_g(&routed.type_i, Projector::G1),
                project_g(&routed.type_ii, Projector::G2),
            ];
            for pair in &ports {
                for (detector, amps) in pair {
                    let bell = detector.bell_state().unwrap();
                    let branch = branches
                        .iter()
                        .find(|b| b.bell == bell)
                        .unwrap();
                    let port_norm = amps[0].norm_sqr() + amps[1].norm_sqr();
                    assert_close(port_norm, branch.norm_sqr(), TOL);
                    if port_norm > 1e-9 {
                        let port_state =
                            PureState::from_unnormalized(amps.to_vec()).unwrap();
                        let f =
                            fidelity(&port_state, &branch.normalized().unwrap()).unwrap();
                        assert_close(f, 1.0, TOL);
                    }
                }
            }
        }
    }

    #[test]
    fn bell_inputs_fire_only_their_detector() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = BsmParams::default();
        for bell in BellState::ALL {
            let q = PureState::haar_random(2, &mut rng).unwrap();
            let s = kron(&bell.vector(), &q).unwrap();
            let rho = DensityMatrix::from_pure(&s);
            let dist = bsm_probabilities(&rho, &params).unwrap();
            for d in DetectorId::FIRING {
                let want = if d.bell_state() == Some(bell) { 1.0 } else { 0.0 };
                assert_close(dist.probability(d), want, TOL);
            }
            assert_close(dist.no_detection_probability(), 0.0, TOL);
        }
    }

    #[test]
    fn detection_factor_thins_every_detector_uniformly() {
        let input = InputState::linear(45.0);
        let params = BsmParams {
            sfg_efficiency: 0.5,
            prism_offset_um: 50.0,
            overlap_sigma_um: 50.0,
            basis_convention: BasisConvention::StandardDiagonal,
        };
        let dist = bsm_for_setup(&input, &EprParams::default(), &params).unwrap();
        let g = 0.6065306597126334;
        for d in DetectorId::FIRING {
            assert_close(dist.probability(d), 0.5 * g * 0.25, 1e-12);
        }
        assert_close(dist.no_detection_probability(), 1.0 - 0.5 * g, 1e-12);
        assert_close(dist.total(), 1.0, 1e-12);
    }

    #[test]
    fn conditionals_match_decomposition_branches_at_full_visibility() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let params = BsmParams::default();
        for _ in 0..100 {
            let input_ket = PureState::haar_random(2, &mut rng).unwrap();
            let input = InputState::new(input_ket.amp(0), input_ket.amp(1)).unwrap();
            let s = compose_three_pure(&input, PI);
            let branches = bell_decompose(&s).unwrap();
            let rho = DensityMatrix::from_pure(&s);
            let dist = bsm_probabilities(&rho, &params).unwrap();
            for branch in &branches {
                let d = DetectorId::from_bell(branch.bell);
                assert_close(dist.probability(d), branch.norm_sqr(), TOL);
                let conditional = dist.bob_state(d).expect("quarter-weight branch");
                let expected = branch.normalized().unwrap();
                assert_close(conditional.expectation(&expected).unwrap(), 1.0, 1e-10);
            }
        }
    }

    #[test]
    fn dephased_pair_leaves_diagonal_conditionals() {
        // v = 0 kills the coherence: conditioned on D4II the Bob state is
        // diag(|alpha|^2, |beta|^2), which for a 45 degree input is
        // maximally mixed.
        let dist = bsm_for_setup(
            &InputState::linear(45.0),
            &EprParams::new(PI, 0.0).unwrap(),
            &BsmParams::default(),
        )
        .unwrap();
        let conditional = dist.bob_state(DetectorId::D4II).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { cr(0.5) } else { c(0.0, 0.0) };
                assert!((conditional.entry(i, j) - want).norm() <= 1e-12);
            }
        }
        // the 45 degree target then scores fidelity 1/2
        let target = InputState::linear(45.0).ket();
        assert_close(conditional.expectation(&target).unwrap(), 0.5, 1e-12);
    }

    #[test]
    fn probabilities_sum_to_one_across_parameter_grid() {
        for eta in [0.2, 0.5, 0.8, 1.0] {
            for dx in [-80.0, -20.0, 0.0, 35.0, 120.0] {
                for v in [0.0, 0.3, 0.7, 1.0] {
                    let params = BsmParams {
                        sfg_efficiency: eta,
                        prism_offset_um: dx,
                        overlap_sigma_um: 50.0,
                        basis_convention: BasisConvention::StandardDiagonal,
                    };
                    let dist = bsm_for_setup(
                        &InputState::linear(27.0),
                        &EprParams::new(PI, v).unwrap(),
                        &params,
                    )
                    .unwrap();
                    assert_close(dist.total(), 1.0, 1e-12);
                    for d in DetectorId::FIRING {
                        let g = overlap_factor(dx, 50.0).unwrap();
                        assert_close(dist.probability(d), eta * g * 0.25, 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn sampling_is_reproducible_and_respects_probabilities() {
        let rho = DensityMatrix::from_pure(&compose_three_pure(&InputState::linear(45.0), PI));
        let params = BsmParams {
            sfg_efficiency: 0.8,
            ..BsmParams::default()
        };
        let mut a = ChaCha8Rng::seed_from_u64(99);
        let mut b = ChaCha8Rng::seed_from_u64(99);
        let run_a: Vec<DetectorId> = (0..64)
            .map(|_| measure_bsm(&rho, &params, &mut a).unwrap().detector)
            .collect();
        let run_b: Vec<DetectorId> = (0..64)
            .map(|_| measure_bsm(&rho, &params, &mut b).unwrap().detector)
            .collect();
        assert_eq!(run_a, run_b);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut counts = [0u32; 5];
        let shots = 20_000;
        for _ in 0..shots {
            let outcome = measure_bsm(&rho, &params, &mut rng).unwrap();
            match outcome.detector.firing_index() {
                Some(k) => {
                    counts[k] += 1;
                    assert!(outcome.bob_state.is_some());
                    assert_close(outcome.probability, 0.2, TOL);
                }
                None => {
                    counts[4] += 1;
                    assert!(outcome.bob_state.is_none());
                }
            }
        }
        for (k, &n) in counts.iter().take(4).enumerate() {
            let freq = n as f64 / shots as f64;
            assert!((freq - 0.2).abs() < 0.02, "detector {k} frequency {freq}");
        }
        assert!((counts[4] as f64 / shots as f64 - 0.2).abs() < 0.02);
    }

    #[test]
    fn mixed_conditionals_unravel_into_eigenstates() {
        // v = 0 and D4II: the conditional is I/2, so sampled pure states are
        // the two eigenvectors, roughly evenly
        let dist = bsm_for_setup(
            &InputState::linear(45.0),
            &EprParams::new(PI, 0.0).unwrap(),
            &BsmParams::default(),
        )
        .unwrap();
        let conditional = dist.bob_state(DetectorId::D4II).unwrap().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let mut hits = 0;
        let draws = 4000;
        let pairs = conditional.eigen_pairs();
        for _ in 0..draws {
            let pure = super::sample_pure(&conditional, &mut rng);
            let f0 = fidelity(&pure, &pairs[0].1).unwrap();
            let f1 = fidelity(&pure, &pairs[1].1).unwrap();
            assert!(f0 > 1.0 - 1e-9 || f1 > 1.0 - 1e-9);
            if f0 > 0.5 {
                hits += 1;
            }
        }
        let frac = hits as f64 / draws as f64;
        assert!((frac - 0.5).abs() < 0.05, "eigenstate split {frac}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn routing_preserves_norm(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = PureState::haar_random(8, &mut rng).unwrap();
            let routed = sfg_route(&s).unwrap();
            prop_assert!((routed.total_norm_sqr() - 1.0).abs() <= TOL);
        }

        #[test]
        fn distributions_are_normalized_and_nonnegative(
            seed in any::<u64>(),
            eta in 0.05f64..=1.0,
            dx in -150.0f64..150.0,
            v in 0.0f64..=1.0,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let input_ket = PureState::haar_random(2, &mut rng).unwrap();
            let input = InputState::new(input_ket.amp(0), input_ket.amp(1)).unwrap();
            let params = BsmParams {
                sfg_efficiency: eta,
                prism_offset_um: dx,
                overlap_sigma_um: 50.0,
                basis_convention: BasisConvention::StandardDiagonal,
            };
            let dist = bsm_for_setup(&input, &EprParams::new(PI, v).unwrap(), &params).unwrap();
            prop_assert!((dist.total() - 1.0).abs() <= 1e-12);
            for (_, p, bob) in dist.iter() {
                prop_assert!(p >= 0.0);
                if let Some(rho) = bob {
                    prop_assert!(rho.validate().is_ok());
                }
            }
        }
    }
}
