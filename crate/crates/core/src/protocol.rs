//! The teleportation round: Alice's measurement, the two-bit classical
//! message, and Bob's recovery unitary.
//!
//! Conditioned on the detector, Bob's photon holds a fixed scrambling of the
//! input amplitudes (alpha, beta). The recovery that undoes it is
//!
//!   D4I -> Z, D4II -> identity, D4III -> X.Z, D4IV -> X
//!
//! where the D4IV recovery restores the input only up to an unobservable
//! global sign.

use rand::Rng;
use std::fmt;

use crate::bsm::{bsm_for_setup, BsmDistribution, BsmParams, DetectorId};
use crate::error::{Error, Result};
use crate::sources::{EprParams, InputState};
use crate::states::{DensityMatrix, Unitary2};

/// Two classical bits naming the detector that fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ClassicalMessage {
    code: u8,
}

impl ClassicalMessage {
    pub fn new(code: u8) -> Result<Self> {
        if code > 3 {
            return Err(Error::BadMessageCode(code));
        }
        Ok(ClassicalMessage { code })
    }

    pub fn code(&self) -> u8 {
        self.code
    }

    pub fn detector(&self) -> DetectorId {
        DetectorId::FIRING[self.code as usize]
    }

    /// Single-byte wire form: the code in the low two bits, high bits zero.
    pub fn to_wire_byte(&self) -> u8 {
        self.code
    }

    pub fn from_wire_byte(byte: u8) -> Result<Self> {
        if byte & !0b11 != 0 {
            return Err(Error::BadWireByte(byte));
        }
        ClassicalMessage::new(byte)
    }
}

impl fmt::Display for ClassicalMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02b}", self.code)
    }
}

/// Encodes the fired detector as its two-bit code; the no-click outcome has
/// nothing to send.
pub fn encode_message(detector: DetectorId) -> Result<ClassicalMessage> {
    match detector.firing_index() {
        Some(k) => ClassicalMessage::new(k as u8),
        None => Err(Error::NoDetection),
    }
}

/// Recovery operation named by its Pauli content.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CorrectionKind {
    Identity,
    PauliZ,
    PauliX,
    PauliXZ,
}

impl CorrectionKind {
    pub const ALL: [CorrectionKind; 4] = [
        CorrectionKind::Identity,
        CorrectionKind::PauliZ,
        CorrectionKind::PauliX,
        CorrectionKind::PauliXZ,
    ];

    pub fn label(self) -> &'static str {
        match self {
            CorrectionKind::Identity => "I",
            CorrectionKind::PauliZ => "Z",
            CorrectionKind::PauliX => "X",
            CorrectionKind::PauliXZ => "XZ",
        }
    }
}

impl fmt::Display for CorrectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A tagged recovery unitary Bob applies to his photon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectionUnitary {
    tag: CorrectionKind,
    matrix: Unitary2,
}

impl CorrectionUnitary {
    pub fn of_kind(tag: CorrectionKind) -> Self {
        let matrix = match tag {
            CorrectionKind::Identity => Unitary2::identity(),
            CorrectionKind::PauliZ => Unitary2::pauli_z(),
            CorrectionKind::PauliX => Unitary2::pauli_x(),
            CorrectionKind::PauliXZ => Unitary2::pauli_xz(),
        };
        CorrectionUnitary { tag, matrix }
    }

    pub fn tag(&self) -> CorrectionKind {
        self.tag
    }

    pub fn matrix(&self) -> &Unitary2 {
        &self.matrix
    }

    pub fn conjugate(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        self.matrix.conjugate(rho)
    }
}

/// Recovery keyed to the detector that fired.
pub fn correction_for(detector: DetectorId) -> Result<CorrectionUnitary> {
    let kind = match detector {
        DetectorId::D4I => CorrectionKind::PauliZ,
        DetectorId::D4II => CorrectionKind::Identity,
        DetectorId::D4III => CorrectionKind::PauliXZ,
        DetectorId::D4IV => CorrectionKind::PauliX,
        DetectorId::NoDetection => return Err(Error::NoDetection),
    };
    Ok(CorrectionUnitary::of_kind(kind))
}

/// Recovery for a received message.
pub fn decode_message(message: ClassicalMessage) -> CorrectionUnitary {
    correction_for(message.detector()).expect("message codes name firing detectors")
}

/// One completed round. The optional fields are present exactly when a
/// detector fired.
#[derive(Debug, Clone)]
pub struct TeleportOutcome {
    pub detector: DetectorId,
    pub message: Option<ClassicalMessage>,
    /// Bob's photon after the recovery unitary.
    pub corrected_bob_state: Option<DensityMatrix>,
    /// Overlap of the corrected state with the original input.
    pub fidelity_to_input: Option<f64>,
}

impl TeleportOutcome {
    pub fn succeeded(&self) -> bool {
        self.corrected_bob_state.is_some()
    }

    fn failure(detector: DetectorId) -> Self {
        TeleportOutcome {
            detector,
            message: None,
            corrected_bob_state: None,
            fidelity_to_input: None,
        }
    }
}

/// Completes a round for a known detector outcome: encodes the message,
/// applies the recovery to the conditional state, and scores the result
/// against the input.
pub fn outcome_for_detector(
    input: &InputState,
    dist: &BsmDistribution,
    detector: DetectorId,
) -> Result<TeleportOutcome> {
    if detector == DetectorId::NoDetection {
        return Ok(TeleportOutcome::failure(detector));
    }
    let conditional = dist
        .bob_state(detector)
        .ok_or_else(|| Error::ImpossibleOutcome(detector.to_string()))?;
    let message = encode_message(detector)?;
    let correction = decode_message(message);
    let corrected = correction.conjugate(conditional)?;
    let fidelity = corrected.expectation(&input.ket())?.clamp(0.0, 1.0);
    Ok(TeleportOutcome {
        detector,
        message: Some(message),
        corrected_bob_state: Some(corrected),
        fidelity_to_input: Some(fidelity),
    })
}

/// Runs one full round with the four-detector measurement.
pub fn teleport_once<R: Rng + ?Sized>(
    input: &InputState,
    epr: &EprParams,
    bsm: &BsmParams,
    rng: &mut R,
) -> Result<TeleportOutcome> {
    let dist = bsm_for_setup(input, epr, bsm)?;
    let detector = dist.sample_detector(rng);
    outcome_for_detector(input, &dist, detector)
}

/// Runs one round with an ideal linear-optics measurement instead.
///
/// A beamsplitter network resolves only the two odd-symmetry outcomes, so
/// clicks keyed to PsiPlus and PsiMinus complete the round and the even pair
/// is reported as a failure. With the ideal pair this succeeds with
/// probability 1/2.
pub fn run_linear_bsm_baseline<R: Rng + ?Sized>(
    input: &InputState,
    epr: &EprParams,
    rng: &mut R,
) -> Result<TeleportOutcome> {
    let dist = bsm_for_setup(input, epr, &BsmParams::default())?;
    let detector = dist.sample_detector(rng);
    match detector {
        DetectorId::D4III | DetectorId::D4IV => outcome_for_detector(input, &dist, detector),
        _ => Ok(TeleportOutcome::failure(DetectorId::NoDetection)),
    }
}

/// Byte-level transport for the classical message.
pub mod wire {
    use std::io::{Read, Write};

    use super::ClassicalMessage;
    use crate::error::Result;

    /// Writes the one-byte wire form.
    pub fn write_message<W: Write>(writer: &mut W, message: ClassicalMessage) -> std::io::Result<()> {
        writer.write_all(&[message.to_wire_byte()])
    }

    /// Reads one message byte, rejecting nonzero padding bits.
    pub fn read_message<R: Read>(reader: &mut R) -> std::io::Result<Result<ClassicalMessage>> {
        let mut buf = [0u8; 1];
        reader.read_exact(&mut buf)?;
        Ok(ClassicalMessage::from_wire_byte(buf[0]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{c, cr, fidelity, PureState, TOL};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn message_codes_round_trip_detectors() {
        for (k, d) in DetectorId::FIRING.into_iter().enumerate() {
            let msg = encode_message(d).unwrap();
            assert_eq!(msg.code(), k as u8);
            assert_eq!(msg.detector(), d);
            let byte = msg.to_wire_byte();
            assert_eq!(byte >> 2, 0);
            assert_eq!(ClassicalMessage::from_wire_byte(byte).unwrap(), msg);
        }
        assert!(matches!(
            encode_message(DetectorId::NoDetection),
            Err(Error::NoDetection)
        ));
        assert!(matches!(
            ClassicalMessage::from_wire_byte(0b0100),
            Err(Error::BadWireByte(_))
        ));
        assert!(matches!(ClassicalMessage::new(4), Err(Error::BadMessageCode(4))));
    }

    #[test]
    fn correction_table_is_frozen() {
        let z = correction_for(DetectorId::D4I).unwrap();
        assert_eq!(z.tag(), CorrectionKind::PauliZ);
        let i = correction_for(DetectorId::D4II).unwrap();
        assert_eq!(i.tag(), CorrectionKind::Identity);
        let xz = correction_for(DetectorId::D4III).unwrap();
        assert_eq!(xz.tag(), CorrectionKind::PauliXZ);
        let m = xz.matrix().matrix();
        assert!((m[0][0] - cr(0.0)).norm() == 0.0);
        assert!((m[0][1] - cr(-1.0)).norm() == 0.0);
        assert!((m[1][0] - cr(1.0)).norm() == 0.0);
        assert!((m[1][1] - cr(0.0)).norm() == 0.0);
        let x = correction_for(DetectorId::D4IV).unwrap();
        assert_eq!(x.tag(), CorrectionKind::PauliX);
        assert!(correction_for(DetectorId::NoDetection).is_err());
    }

    #[test]
    fn corrections_restore_the_scrambled_ports() {
        // the four conditional states for input (alpha, beta), written as
        // unnormalized pairs, and the recovery that maps each back
        let alpha = c(0.31, -0.52);
        let input_ket = PureState::from_unnormalized(vec![alpha, c(0.7, 0.23)]).unwrap();
        let (a, b) = (input_ket.amp(0), input_ket.amp(1));
        let ports: [(DetectorId, [num_complex::Complex64; 2]); 4] = [
            (DetectorId::D4I, [a, -b]),
            (DetectorId::D4II, [a, b]),
            (DetectorId::D4III, [b, -a]),
            (DetectorId::D4IV, [-b, -a]),
        ];
        for (detector, amps) in ports {
            let port = PureState::new(amps.to_vec()).unwrap();
            let corrected = correction_for(detector)
                .unwrap()
                .matrix()
                .apply(&port)
                .unwrap();
            assert_close(fidelity(&corrected, &input_ket).unwrap(), 1.0, TOL);
        }
    }

    #[test]
    fn forced_outcomes_teleport_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let epr = EprParams::default();
        let bsm = BsmParams::default();
        for _ in 0..100 {
            let ket = PureState::haar_random(2, &mut rng).unwrap();
            let input = InputState::new(ket.amp(0), ket.amp(1)).unwrap();
            let dist = bsm_for_setup(&input, &epr, &bsm).unwrap();
            for d in DetectorId::FIRING {
                let outcome = outcome_for_detector(&input, &dist, d).unwrap();
                assert_close(outcome.fidelity_to_input.unwrap(), 1.0, TOL);
                assert_eq!(outcome.message.unwrap().detector(), d);
            }
        }
    }

    #[test]
    fn sampled_rounds_always_succeed_at_ideal_settings() {
        let input = InputState::linear(30.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut counts = [0u32; 4];
        for _ in 0..2000 {
            let outcome =
                teleport_once(&input, &EprParams::default(), &BsmParams::default(), &mut rng)
                    .unwrap();
            assert!(outcome.succeeded());
            assert_close(outcome.fidelity_to_input.unwrap(), 1.0, TOL);
            counts[outcome.detector.firing_index().unwrap()] += 1;
        }
        for (k, &n) in counts.iter().enumerate() {
            assert!(n > 0, "detector {k} never fired");
        }
    }

    #[test]
    fn reduced_efficiency_only_adds_failures() {
        let input = InputState::linear(30.0);
        let bsm = BsmParams {
            sfg_efficiency: 0.3,
            ..BsmParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut failures = 0u32;
        let shots = 5000;
        for _ in 0..shots {
            let outcome = teleport_once(&input, &EprParams::default(), &bsm, &mut rng).unwrap();
            if outcome.succeeded() {
                assert_close(outcome.fidelity_to_input.unwrap(), 1.0, TOL);
            } else {
                assert_eq!(outcome.detector, DetectorId::NoDetection);
                assert!(outcome.message.is_none());
                failures += 1;
            }
        }
        let rate = failures as f64 / shots as f64;
        assert!((rate - 0.7).abs() < 0.03, "failure rate {rate}");
    }

    #[test]
    fn unconditioned_bob_state_shows_nothing() {
        // before the message arrives Bob's mixture over Alice's outcomes is
        // maximally mixed whatever the input
        let epr = EprParams::default();
        let bsm = BsmParams::default();
        for angle in [0.0, 22.5, 45.0, 77.0] {
            let input = InputState::linear(angle);
            let dist = bsm_for_setup(&input, &epr, &bsm).unwrap();
            let parts: Vec<(f64, crate::states::DensityMatrix)> = DetectorId::FIRING
                .into_iter()
                .map(|d| {
                    (
                        dist.probability(d),
                        dist.bob_state(d).unwrap().clone(),
                    )
                })
                .collect();
            let blend = DensityMatrix::mix(&parts).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    let want = if i == j { cr(0.5) } else { c(0.0, 0.0) };
                    assert!((blend.entry(i, j) - want).norm() <= TOL);
                }
            }
        }
    }

    #[test]
    fn scrambled_messages_average_to_coin_flip_fidelity() {
        // applying a uniformly random recovery, decoupled from the outcome,
        // twirls any conditional to I/2: mean fidelity is exactly 1/2
        let input = InputState::linear(33.0);
        let dist = bsm_for_setup(&input, &EprParams::default(), &BsmParams::default()).unwrap();
        let target = input.ket();
        let mut mean = 0.0;
        for d in DetectorId::FIRING {
            let conditional = dist.bob_state(d).unwrap();
            let mut per_outcome = 0.0;
            for kind in CorrectionKind::ALL {
                let corrected = CorrectionUnitary::of_kind(kind)
                    .conjugate(conditional)
                    .unwrap();
                per_outcome += 0.25 * corrected.expectation(&target).unwrap();
            }
            mean += dist.probability(d) * per_outcome;
        }
        mean /= dist.detection_factor();
        assert_close(mean, 0.5, TOL);

        // sampled version of the same statement
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut acc = 0.0;
        let shots = 20_000;
        for _ in 0..shots {
            let d = DetectorId::FIRING[rng.random_range(0..4)];
            let wrong = CorrectionKind::ALL[rng.random_range(0..4)];
            let corrected = CorrectionUnitary::of_kind(wrong)
                .conjugate(dist.bob_state(d).unwrap())
                .unwrap();
            acc += corrected.expectation(&target).unwrap();
        }
        assert_close(acc / shots as f64, 0.5, 0.02);
    }

    #[test]
    fn baseline_succeeds_half_the_time_with_perfect_fidelity() {
        let input = InputState::linear(61.0);
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let shots = 20_000;
        let mut successes = 0u32;
        for _ in 0..shots {
            let outcome =
                run_linear_bsm_baseline(&input, &EprParams::default(), &mut rng).unwrap();
            if outcome.succeeded() {
                successes += 1;
                assert_close(outcome.fidelity_to_input.unwrap(), 1.0, TOL);
            } else {
                assert_eq!(outcome.detector, DetectorId::NoDetection);
            }
        }
        let rate = successes as f64 / shots as f64;
        assert!((rate - 0.5).abs() < 0.015, "baseline success rate {rate}");
    }

    #[test]
    fn wire_round_trips_over_loopback() {
        use std::io::Write;
        use std::net::{TcpListener, TcpStream};

        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let handle = std::thread::spawn(move || {
            let (mut stream, _) = listener.accept().unwrap();
            let mut received = Vec::new();
            for _ in 0..4 {
                received.push(wire::read_message(&mut stream).unwrap().unwrap());
            }
            received
        });
        let mut sender = TcpStream::connect(addr).unwrap();
        for d in DetectorId::FIRING {
            let msg = encode_message(d).unwrap();
            wire::write_message(&mut sender, msg).unwrap();
        }
        sender.flush().unwrap();
        let received = handle.join().unwrap();
        assert_eq!(
            received.iter().map(|m| m.detector()).collect::<Vec<_>>(),
            DetectorId::FIRING.to_vec()
        );
    }

    #[test]
    fn wire_rejects_padded_bytes() {
        use std::io::Cursor;
        let mut cursor = Cursor::new(vec![0b1000_0010u8]);
        let parsed = wire::read_message(&mut cursor).unwrap();
        assert!(matches!(parsed, Err(Error::BadWireByte(_))));
    }
}
