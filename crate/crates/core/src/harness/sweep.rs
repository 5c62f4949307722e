//! Seeded Monte Carlo runners: analyzer and prism sweeps, teleportation
//! batches, and the linear-optics baseline batch.
//!
//! Determinism contract: every sampled number comes from a substream keyed
//! by (seed, lane), where sweeps use lane = point * 4 + detector and batches
//! use lane = shot. Work is distributed with rayon but tallied with
//! order-independent integer reductions, so identical seeds give identical
//! results at any thread count.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::bsm::{bsm_for_setup, overlap_factor, BsmParams, DetectorId};
use crate::harness::config::{ConfigError, Mode, RunConfig};
use crate::harness::records::CoincidenceRecord;
use crate::protocol::outcome_for_detector;
use crate::rng::substream;
use crate::states::{bell_decompose, BobBranch, DensityMatrix, PureState};
use crate::sources::compose_three_pure;
use crate::states::cr;

/// Bob's analyzer ket at `theta_deg`: cos|0> + sin|1>.
pub fn analyzer_ket(theta_deg: f64) -> PureState {
    let rad = theta_deg.to_radians();
    PureState::from_raw(vec![cr(rad.cos()), cr(rad.sin())])
}

/// Coincidence probability for one analyzer setting: the detector
/// probability times Bob's transmission <theta|rho|theta>.
pub fn joint_rate(
    theta_deg: f64,
    probability: f64,
    bob: &DensityMatrix,
) -> crate::error::Result<f64> {
    let transmission = bob.expectation(&analyzer_ket(theta_deg))?;
    Ok((probability * transmission.clamp(0.0, 1.0)).clamp(0.0, 1.0))
}

fn binomial_draw(seed: u64, lane: u64, shots: u64, p: f64) -> u64 {
    let p = p.clamp(0.0, 1.0);
    let dist = Binomial::new(shots, p).expect("probability clamped to [0, 1]");
    dist.sample(&mut substream(seed, lane))
}

/// Scans Bob's analyzer over the sweep grid, drawing binomial coincidence
/// counts for all four detector pairs at every angle. Records come back in
/// grid order: angles outermost, detectors in canonical order within.
pub fn sweep_analyzer(cfg: &RunConfig) -> Result<Vec<CoincidenceRecord>, ConfigError> {
    cfg.expect_mode(Mode::SweepAnalyzer)?;
    cfg.validate()?;
    let dist = bsm_for_setup(&cfg.input_state()?, &cfg.epr_params()?, &cfg.bsm_params())?;
    let points = cfg.sweep.points();
    let shots = cfg.shots_per_point;
    let rows: Vec<Vec<CoincidenceRecord>> = points
        .par_iter()
        .enumerate()
        .map(|(i, &theta)| {
            DetectorId::FIRING
                .into_iter()
                .enumerate()
                .map(|(k, d)| {
                    let p = match dist.bob_state(d) {
                        Some(bob) => joint_rate(theta, dist.probability(d), bob)
                            .expect("analyzer ket is two-dimensional"),
                        None => 0.0,
                    };
                    let lane = (i as u64) * 4 + k as u64;
                    CoincidenceRecord {
                        sweep_value: theta,
                        detector_pair: d.pair_label().expect("firing detector").to_string(),
                        coincidences: binomial_draw(cfg.seed, lane, shots, p),
                        shots,
                    }
                })
                .collect()
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

/// Scans the prism offset over the sweep grid. Counts follow the Gaussian
/// envelope eta g(dx) with the Bell weight of each detector; no analyzer
/// sits in Bob's arm for this scan.
pub fn sweep_overlap(cfg: &RunConfig) -> Result<Vec<CoincidenceRecord>, ConfigError> {
    cfg.expect_mode(Mode::SweepOverlap)?;
    cfg.validate()?;
    // Bell weights at perfect overlap; the scan rescales them per point.
    let reference = BsmParams {
        sfg_efficiency: 1.0,
        prism_offset_um: 0.0,
        overlap_sigma_um: cfg.overlap_sigma_um,
        ..BsmParams::default()
    };
    let dist = bsm_for_setup(&cfg.input_state()?, &cfg.epr_params()?, &reference)?;
    let weights: Vec<f64> = DetectorId::FIRING
        .into_iter()
        .map(|d| dist.probability(d))
        .collect();
    let points = cfg.sweep.points();
    let shots = cfg.shots_per_point;
    let rows: Vec<Vec<CoincidenceRecord>> = points
        .par_iter()
        .enumerate()
        .map(|(i, &dx)| {
            let g = overlap_factor(dx, cfg.overlap_sigma_um)
                .expect("sigma validated positive");
            let factor = cfg.sfg_efficiency * g;
            DetectorId::FIRING
                .into_iter()
                .enumerate()
                .map(|(k, d)| {
                    let lane = (i as u64) * 4 + k as u64;
                    CoincidenceRecord {
                        sweep_value: dx,
                        detector_pair: d.pair_label().expect("firing detector").to_string(),
                        coincidences: binomial_draw(cfg.seed, lane, shots, factor * weights[k]),
                        shots,
                    }
                })
                .collect()
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

/// Tallies from a batch of sampled rounds. The fidelity statistics are
/// computed from integer counts times fixed per-detector fidelities, so
/// equal seeds give exactly equal stats.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchStats {
    pub shots: u64,
    /// Clicks per firing detector, canonical order.
    pub counts: [u64; 4],
    pub no_detection: u64,
    /// Rounds that completed with a recovery applied.
    pub teleported: u64,
    /// Count-weighted mean fidelity over completed rounds.
    pub mean_fidelity: Option<f64>,
    /// Worst per-detector fidelity seen among completed rounds.
    pub min_fidelity: Option<f64>,
}

impl BatchStats {
    fn new(
        shots: u64,
        counts: [u64; 4],
        no_detection: u64,
        completed: &[usize],
        fidelities: &[Option<f64>; 4],
    ) -> Self {
        let teleported: u64 = completed.iter().map(|&k| counts[k]).sum();
        let mut mean = None;
        let mut min = None;
        if teleported > 0 {
            let sum: f64 = completed
                .iter()
                .filter_map(|&k| fidelities[k].map(|f| f * counts[k] as f64))
                .sum();
            mean = Some(sum / teleported as f64);
            min = completed
                .iter()
                .filter(|&&k| counts[k] > 0)
                .filter_map(|&k| fidelities[k])
                .fold(None, |acc: Option<f64>, f| {
                    Some(acc.map_or(f, |m| m.min(f)))
                });
        }
        BatchStats {
            shots,
            counts,
            no_detection,
            teleported,
            mean_fidelity: mean,
            min_fidelity: min,
        }
    }

    pub fn frequency(&self, detector: DetectorId) -> f64 {
        match detector.firing_index() {
            Some(k) => self.counts[k] as f64 / self.shots as f64,
            None => self.no_detection as f64 / self.shots as f64,
        }
    }

    pub fn success_rate(&self) -> f64 {
        self.teleported as f64 / self.shots as f64
    }
}

/// Samples `shots` detector outcomes in parallel, one substream per shot,
/// and tallies them into the five canonical bins.
fn tally_outcomes(seed: u64, shots: u64, probabilities: [f64; 4]) -> [u64; 5] {
    (0..shots)
        .into_par_iter()
        .fold(
            || [0u64; 5],
            |mut acc, shot| {
                let u: f64 = substream(seed, shot).random();
                let mut cursor = 0.0;
                let mut bin = 4;
                for (k, p) in probabilities.iter().enumerate() {
                    cursor += p;
                    if u < cursor {
                        bin = k;
                        break;
                    }
                }
                acc[bin] += 1;
                acc
            },
        )
        .reduce(
            || [0u64; 5],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        )
}

fn batch(
    cfg: &RunConfig,
    bsm: &BsmParams,
    completed: &[usize],
) -> Result<BatchStats, ConfigError> {
    let input = cfg.input_state()?;
    let dist = bsm_for_setup(&input, &cfg.epr_params()?, bsm)?;
    let probabilities: [f64; 4] = std::array::from_fn(|k| dist.probability(DetectorId::FIRING[k]));
    let mut fidelities: [Option<f64>; 4] = [None; 4];
    for (k, d) in DetectorId::FIRING.into_iter().enumerate() {
        if dist.bob_state(d).is_some() {
            let outcome = outcome_for_detector(&input, &dist, d)?;
            fidelities[k] = outcome.fidelity_to_input;
        }
    }
    let bins = tally_outcomes(cfg.seed, cfg.shots_per_point, probabilities);
    let mut counts = [bins[0], bins[1], bins[2], bins[3]];
    let mut no_detection = bins[4];
    // an apparatus that cannot resolve an outcome reports it as a failure,
    // not as a click on some other detector
    for (k, n) in counts.iter_mut().enumerate() {
        if !completed.contains(&k) {
            no_detection += *n;
            *n = 0;
        }
    }
    Ok(BatchStats::new(
        cfg.shots_per_point,
        counts,
        no_detection,
        completed,
        &fidelities,
    ))
}

/// Runs a batch of full four-detector rounds.
pub fn run_teleport_batch(cfg: &RunConfig) -> Result<BatchStats, ConfigError> {
    cfg.expect_mode(Mode::Teleport)?;
    cfg.validate()?;
    batch(cfg, &cfg.bsm_params(), &[0, 1, 2, 3])
}

/// Runs a batch against the ideal linear-optics measurement, which resolves
/// only the two odd-symmetry outcomes; even clicks are failures. Apparatus
/// settings in `cfg` do not apply to this reference arrangement.
pub fn run_baseline_batch(cfg: &RunConfig) -> Result<BatchStats, ConfigError> {
    cfg.expect_mode(Mode::Baseline)?;
    cfg.validate()?;
    batch(cfg, &BsmParams::default(), &[2, 3])
}

/// Bell-basis branches of the composed three-photon ket.
pub fn run_bell_decompose(cfg: &RunConfig) -> Result<[BobBranch; 4], ConfigError> {
    cfg.expect_mode(Mode::BellDecompose)?;
    cfg.validate()?;
    let s = compose_three_pure(&cfg.input_state()?, cfg.epr_phase_rad);
    Ok(bell_decompose(&s)?)
}
