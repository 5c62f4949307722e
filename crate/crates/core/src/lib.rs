//! Simulator of polarization-qubit teleportation with a complete,
//! four-outcome Bell measurement built from sum-frequency up-conversion.
//!
//! An unknown polarization alpha|H> + beta|V> rides photon 1. Photons 2 and
//! 3 form an entangled pair; photon 2 meets photon 1 inside four nonlinear
//! crystals whose up-converted output is analyzed on four detectors, one per
//! Bell state. Two classical bits then tell Bob which Pauli recovery puts
//! photon 3 into the input state.
//!
//! The crate covers the algebra (kets, Bell branches, density matrices),
//! the measurement model (crystal routing, analyzer projection, detection
//! thinning), the protocol round, and an experiment harness that reproduces
//! analyzer fringes and overlap scans as seeded Monte Carlo counts.
//!
//! ```
//! use sfg_teleport::sources::{EprParams, InputState};
//! use sfg_teleport::bsm::BsmParams;
//! use sfg_teleport::protocol::teleport_once;
//! use sfg_teleport::rng::substream;
//!
//! let input = InputState::linear(30.0);
//! let mut rng = substream(7, 0);
//! let outcome = teleport_once(&input, &EprParams::default(), &BsmParams::default(), &mut rng)
//!     .unwrap();
//! assert!(outcome.fidelity_to_input.unwrap() > 1.0 - 1e-12);
//! ```

pub mod bsm;
pub mod error;
pub mod harness;
pub mod protocol;
pub mod rng;
pub mod sources;
pub mod states;

pub use bsm::{
    bsm_probabilities, measure_bsm, overlap_factor, sfg_route, BellOutcome, BsmDistribution,
    BsmParams, DetectorId,
};
pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use protocol::{
    correction_for, decode_message, encode_message, run_linear_bsm_baseline, teleport_once,
    ClassicalMessage, CorrectionKind, CorrectionUnitary, TeleportOutcome,
};
pub use sources::{
    compose_three, compose_three_pure, prepare_epr, EprParams, InputState, PhotonLabel, PhotonRole,
};
pub use states::{
    bell_decompose, bell_reassemble, bell_vector, fidelity, kron, BellState, BobBranch,
    DensityMatrix, PureState, Unitary2,
};
