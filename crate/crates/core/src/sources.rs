//! Photon sources: the unknown input polarization and the down-conversion
//! pair shared by Alice and Bob.
//!
//! The pair is modeled as a visibility-v mixture of the coherent state
//! (|00> + e^{i phi}|11>)/sqrt2 with the fully dephased diagonal remainder:
//!
//!   rho = v |psi(phi)><psi(phi)| + (1 - v)(|00><00| + |11><11|)/2
//!
//! At v = 1, phi = pi this is the (|00> - |11>)/sqrt2 singlet-like pair the
//! teleportation algebra assumes.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::states::{c, cr, kron, DensityMatrix, PureState};

/// The polarization qubit to be teleported: alpha|0> + beta|1>.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputState {
    alpha: Complex64,
    beta: Complex64,
}

impl InputState {
    /// Accepts amplitudes normalized to within 1e-9 and stores them snapped
    /// to exact unit norm.
    pub fn new(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let ket = PureState::qubit(alpha, beta)?;
        Ok(InputState {
            alpha: ket.amp(0),
            beta: ket.amp(1),
        })
    }

    /// Linear polarization at `angle_deg` from horizontal: alpha = cos,
    /// beta = sin. The angle must be finite.
    pub fn linear(angle_deg: f64) -> Self {
        assert!(angle_deg.is_finite(), "polarization angle must be finite");
        let rad = angle_deg.to_radians();
        InputState {
            alpha: cr(rad.cos()),
            beta: cr(rad.sin()),
        }
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn beta(&self) -> Complex64 {
        self.beta
    }

    pub fn ket(&self) -> PureState {
        PureState::from_raw(vec![self.alpha, self.beta])
    }
}

/// Coherence settings for the down-conversion pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EprParams {
    /// Relative phase phi between the |00> and |11> components, in radians.
    pub relative_phase: f64,
    /// Off-diagonal coherence v in [0, 1]; 1 is the ideal pair.
    pub visibility: f64,
}

impl Default for EprParams {
    fn default() -> Self {
        EprParams {
            relative_phase: PI,
            visibility: 1.0,
        }
    }
}

impl EprParams {
    pub fn new(relative_phase: f64, visibility: f64) -> Result<Self> {
        let params = EprParams {
            relative_phase,
            visibility,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.relative_phase.is_finite() {
            return Err(Error::PhaseOutOfRange(self.relative_phase));
        }
        if !self.visibility.is_finite() || !(0.0..=1.0).contains(&self.visibility) {
            return Err(Error::VisibilityOutOfRange(self.visibility));
        }
        Ok(())
    }
}

/// The coherent pair ket (|00> + e^{i phi}|11>)/sqrt2.
pub fn epr_ket(relative_phase: f64) -> PureState {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    PureState::from_raw(vec![
        cr(r),
        c(0.0, 0.0),
        c(0.0, 0.0),
        Complex64::from_polar(r, relative_phase),
    ])
}

/// Two-photon density matrix for the pair at the given coherence settings.
pub fn prepare_epr(params: &EprParams) -> Result<DensityMatrix> {
    params.validate()?;
    let v = params.visibility;
    let coherent = DensityMatrix::from_pure(&epr_ket(params.relative_phase));
    let mut entries = coherent.entries().to_vec();
    for e in &mut entries {
        *e *= cr(v);
    }
    // dephased remainder is diagonal on |00> and |11>
    let w = (1.0 - v) * 0.5;
    entries[0] += cr(w);
    entries[15] += cr(w);
    Ok(DensityMatrix::from_raw(4, entries))
}

/// Product state of the input photon with the pair: an 8x8 density matrix
/// ordered (input, alice, bob).
pub fn compose_three(input: &InputState, epr: &DensityMatrix) -> Result<DensityMatrix> {
    if epr.dim() != 4 {
        return Err(Error::DimensionMismatch(epr.dim(), 4));
    }
    epr.validate()?;
    DensityMatrix::kron(&DensityMatrix::from_pure(&input.ket()), epr)
}

/// Pure three-photon ket for a perfectly coherent pair (visibility 1).
pub fn compose_three_pure(input: &InputState, relative_phase: f64) -> PureState {
    kron(&input.ket(), &epr_ket(relative_phase)).expect("2 x 4 fits in 8")
}

/// Station a photon belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhotonRole {
    /// Carries the unknown polarization.
    Input,
    /// Alice's half of the pair, consumed by the joint measurement.
    Alice,
    /// Bob's half of the pair, inherits the state.
    Bob,
    /// The up-converted photon produced inside the measurement.
    Sfg,
}

impl PhotonRole {
    pub const ALL: [PhotonRole; 4] = [
        PhotonRole::Input,
        PhotonRole::Alice,
        PhotonRole::Bob,
        PhotonRole::Sfg,
    ];
}

/// Bookkeeping label pairing a role with its nominal wavelength. The
/// wavelength is metadata only; no simulation path reads it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonLabel {
    pub role: PhotonRole,
    pub wavelength_nm: f64,
}

impl PhotonLabel {
    pub fn new(role: PhotonRole, wavelength_nm: f64) -> Result<Self> {
        if !wavelength_nm.is_finite() || wavelength_nm <= 0.0 {
            return Err(Error::WavelengthOutOfRange(wavelength_nm));
        }
        Ok(PhotonLabel {
            role,
            wavelength_nm,
        })
    }

    /// Standard wavelengths for the four-photon arrangement: 800 nm input,
    /// 885 nm and 730 nm pair halves, 420 nm up-converted sum.
    pub fn canonical(role: PhotonRole) -> Self {
        let wavelength_nm = match role {
            PhotonRole::Input => 800.0,
            PhotonRole::Alice => 885.0,
            PhotonRole::Bob => 730.0,
            PhotonRole::Sfg => 420.0,
        };
        PhotonLabel {
            role,
            wavelength_nm,
        }
    }
}
