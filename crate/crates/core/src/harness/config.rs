//! Run configuration: per-mode defaults, the flat `key = value` file format,
//! and validation.

use num_complex::Complex64;
use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use thiserror::Error;

use crate::bsm::BsmParams;
use crate::error::Error as PhysicsError;
use crate::sources::{EprParams, InputState};
use crate::states::c;

#[derive(Debug, Error)]
#[non_exhaustive]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Unreadable {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config line {0} is not a `key = value` pair")]
    Malformed(usize),
    #[error("unknown config key `{0}` on line {1}")]
    UnknownKey(String, usize),
    #[error("invalid value for `{key}`: {message}")]
    InvalidValue { key: String, message: String },
    #[error("input is given both as an angle and as amplitudes")]
    ConflictingInput,
    #[error("config file names mode `{file}` but the command line selected `{cli}`")]
    ModeMismatch { file: String, cli: String },
    #[error("this run needs mode `{expected}`, the config says `{got}`")]
    WrongMode { expected: String, got: String },
    #[error("shots per point must be at least 1")]
    NoShots,
    #[error("sweep step must be nonzero and finite")]
    BadSweepStep,
    #[error("sweep range {start}:{stop}:{step} contains no points")]
    EmptySweep { start: f64, stop: f64, step: f64 },
    #[error("bell-decompose needs a coherent pair: set visibility = 1, got {0}")]
    MixedDecompose(f64),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
}

/// What a run does.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Monte Carlo teleportation rounds with the four-detector measurement.
    Teleport,
    /// Scan of Bob's analyzer angle, producing coincidence fringes.
    SweepAnalyzer,
    /// Scan of the prism offset, producing the up-conversion envelope.
    SweepOverlap,
    /// Monte Carlo rounds against the two-outcome linear-optics measurement.
    Baseline,
    /// Bell-basis branch amplitudes of the composed three-photon ket.
    BellDecompose,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Teleport => "teleport",
            Mode::SweepAnalyzer => "sweep-analyzer",
            Mode::SweepOverlap => "sweep-overlap",
            Mode::Baseline => "baseline",
            Mode::BellDecompose => "bell-decompose",
        }
    }

    pub fn parse(text: &str) -> Option<Mode> {
        match text {
            "teleport" => Some(Mode::Teleport),
            "sweep-analyzer" | "sweep_analyzer" => Some(Mode::SweepAnalyzer),
            "sweep-overlap" | "sweep_overlap" => Some(Mode::SweepOverlap),
            "baseline" => Some(Mode::Baseline),
            "bell-decompose" | "bell_decompose" => Some(Mode::BellDecompose),
            _ => None,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Input photon given either as a linear-polarization angle or as raw
/// amplitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InputSpec {
    Angle(f64),
    Amplitudes { alpha: Complex64, beta: Complex64 },
}

impl InputSpec {
    pub fn to_state(&self) -> Result<InputState, PhysicsError> {
        match *self {
            InputSpec::Angle(deg) => {
                if !deg.is_finite() {
                    return Err(PhysicsError::PhaseOutOfRange(deg));
                }
                Ok(InputState::linear(deg))
            }
            InputSpec::Amplitudes { alpha, beta } => InputState::new(alpha, beta),
        }
    }
}

/// Closed-open sweep grid [start, stop) walked in `step` increments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SweepRange {
    /// Grid points start + k step for k = 0, 1, ... while strictly inside
    /// the stop bound. Values within |step| * 1e-9 of the bound count as
    /// outside so decimal steps do not leak an extra point.
    pub fn points(&self) -> Vec<f64> {
        let mut out = Vec::new();
        if !self.step.is_finite() || self.step == 0.0 {
            return out;
        }
        if !self.start.is_finite() || !self.stop.is_finite() {
            return out;
        }
        let eps = self.step.abs() * 1e-9;
        for k in 0..10_000_000u64 {
            let v = self.start + (k as f64) * self.step;
            let inside = if self.step > 0.0 {
                v < self.stop - eps
            } else {
                v > self.stop + eps
            };
            if !inside {
                break;
            }
            out.push(v);
        }
        out
    }
}

/// Full description of one run. Field defaults come from
/// [`RunConfig::for_mode`]; a config file and then flag overrides layer on
/// top.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub input: InputSpec,
    pub epr_phase_rad: f64,
    pub visibility: f64,
    pub sfg_efficiency: f64,
    pub overlap_sigma_um: f64,
    pub prism_offset_um: f64,
    /// Rounds per sweep point, or total rounds for batch modes.
    pub shots_per_point: u64,
    /// Analyzer angle in degrees or prism offset in micrometers, by mode.
    pub sweep: SweepRange,
    pub seed: u64,
}

impl RunConfig {
    pub fn for_mode(mode: Mode) -> Self {
        let sweep = match mode {
            Mode::SweepOverlap => SweepRange {
                start: -200.0,
                stop: 210.0,
                step: 10.0,
            },
            _ => SweepRange {
                start: 0.0,
                stop: 360.0,
                step: 10.0,
            },
        };
        RunConfig {
            mode,
            input: InputSpec::Angle(45.0),
            epr_phase_rad: PI,
            visibility: 1.0,
            sfg_efficiency: 1.0,
            overlap_sigma_um: 50.0,
            prism_offset_um: 0.0,
            shots_per_point: 10_000,
            sweep,
            seed: 0,
        }
    }

    pub fn input_state(&self) -> Result<InputState, PhysicsError> {
        self.input.to_state()
    }

    pub fn epr_params(&self) -> Result<EprParams, PhysicsError> {
        EprParams::new(self.epr_phase_rad, self.visibility)
    }

    pub fn bsm_params(&self) -> BsmParams {
        BsmParams {
            sfg_efficiency: self.sfg_efficiency,
            prism_offset_um: self.prism_offset_um,
            overlap_sigma_um: self.overlap_sigma_um,
            ..BsmParams::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.input_state()?;
        self.epr_params()?;
        self.bsm_params().validate()?;
        if self.shots_per_point == 0 {
            return Err(ConfigError::NoShots);
        }
        if !self.sweep.step.is_finite() || self.sweep.step == 0.0 {
            return Err(ConfigError::BadSweepStep);
        }
        let sweeps = matches!(self.mode, Mode::SweepAnalyzer | Mode::SweepOverlap);
        if sweeps && self.sweep.points().is_empty() {
            return Err(ConfigError::EmptySweep {
                start: self.sweep.start,
                stop: self.sweep.stop,
                step: self.sweep.step,
            });
        }
        if self.mode == Mode::BellDecompose && self.visibility != 1.0 {
            return Err(ConfigError::MixedDecompose(self.visibility));
        }
        Ok(())
    }

    /// Ensures the config was built for the runner invoking it.
    pub fn expect_mode(&self, expected: Mode) -> Result<(), ConfigError> {
        if self.mode == expected {
            Ok(())
        } else {
            Err(ConfigError::WrongMode {
                expected: expected.to_string(),
                got: self.mode.to_string(),
            })
        }
    }
}

/// Partial configuration collected from one source (a file or the command
/// line); later overlays win field by field.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigOverlay {
    pub mode: Option<Mode>,
    pub input_angle_deg: Option<f64>,
    pub alpha_re: Option<f64>,
    pub alpha_im: Option<f64>,
    pub beta_re: Option<f64>,
    pub beta_im: Option<f64>,
    pub epr_phase_rad: Option<f64>,
    pub visibility: Option<f64>,
    pub sfg_efficiency: Option<f64>,
    pub overlap_sigma_um: Option<f64>,
    pub prism_offset_um: Option<f64>,
    pub shots_per_point: Option<u64>,
    pub sweep_start: Option<f64>,
    pub sweep_stop: Option<f64>,
    pub sweep_step: Option<f64>,
    pub seed: Option<u64>,
}

impl ConfigOverlay {
    /// Parses the flat file format: one `key = value` per line, `#` starts
    /// a comment, blank lines ignored.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut overlay = ConfigOverlay::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = idx + 1;
            let (key, value) = line.split_once('=').ok_or(ConfigError::Malformed(lineno))?;
            overlay.set(key.trim(), value.trim(), lineno)?;
        }
        Ok(overlay)
    }

    fn set(&mut self, key: &str, value: &str, line: usize) -> Result<(), ConfigError> {
        fn float(key: &str, value: &str) -> Result<f64, ConfigError> {
            value.parse::<f64>().map_err(|e| ConfigError::InvalidValue {
                key: key.to_string(),
                message: format!("{value:?}: {e}"),
            })
        }
        fn integer(key: &str, value: &str) -> Result<u64, ConfigError> {
            value.parse::<u64>().map_err(|e| ConfigError::InvalidValue {
                key: key.to_string(),
                message: format!("{value:?}: {e}"),
            })
        }
        match key {
            "mode" => {
                self.mode = Some(Mode::parse(value).ok_or_else(|| ConfigError::InvalidValue {
                    key: key.to_string(),
                    message: format!("{value:?} is not a mode"),
                })?)
            }
            "input_angle_deg" => self.input_angle_deg = Some(float(key, value)?),
            "alpha_re" => self.alpha_re = Some(float(key, value)?),
            "alpha_im" => self.alpha_im = Some(float(key, value)?),
            "beta_re" => self.beta_re = Some(float(key, value)?),
            "beta_im" => self.beta_im = Some(float(key, value)?),
            "epr_phase_rad" => self.epr_phase_rad = Some(float(key, value)?),
            "visibility" => self.visibility = Some(float(key, value)?),
            "sfg_efficiency" => self.sfg_efficiency = Some(float(key, value)?),
            "overlap_sigma_um" => self.overlap_sigma_um = Some(float(key, value)?),
            "prism_offset_um" => self.prism_offset_um = Some(float(key, value)?),
            "shots_per_point" => self.shots_per_point = Some(integer(key, value)?),
            "sweep_start" => self.sweep_start = Some(float(key, value)?),
            "sweep_stop" => self.sweep_stop = Some(float(key, value)?),
            "sweep_step" => self.sweep_step = Some(float(key, value)?),
            "seed" => self.seed = Some(integer(key, value)?),
            _ => return Err(ConfigError::UnknownKey(key.to_string(), line)),
        }
        Ok(())
    }

    fn has_amplitudes(&self) -> bool {
        self.alpha_re.is_some()
            || self.alpha_im.is_some()
            || self.beta_re.is_some()
            || self.beta_im.is_some()
    }

    /// Applies this overlay on top of `cfg`. Amplitude keys replace the
    /// input wholesale; components left unset default to zero.
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<(), ConfigError> {
        if let Some(mode) = self.mode {
            if mode != cfg.mode {
                return Err(ConfigError::ModeMismatch {
                    file: mode.to_string(),
                    cli: cfg.mode.to_string(),
                });
            }
        }
        if self.input_angle_deg.is_some() && self.has_amplitudes() {
            return Err(ConfigError::ConflictingInput);
        }
        if let Some(deg) = self.input_angle_deg {
            cfg.input = InputSpec::Angle(deg);
        } else if self.has_amplitudes() {
            cfg.input = InputSpec::Amplitudes {
                alpha: c(
                    self.alpha_re.unwrap_or(0.0),
                    self.alpha_im.unwrap_or(0.0),
                ),
                beta: c(self.beta_re.unwrap_or(0.0), self.beta_im.unwrap_or(0.0)),
            };
        }
        if let Some(v) = self.epr_phase_rad {
            cfg.epr_phase_rad = v;
        }
        if let Some(v) = self.visibility {
            cfg.visibility = v;
        }
        if let Some(v) = self.sfg_efficiency {
            cfg.sfg_efficiency = v;
        }
        if let Some(v) = self.overlap_sigma_um {
            cfg.overlap_sigma_um = v;
        }
        if let Some(v) = self.prism_offset_um {
            cfg.prism_offset_um = v;
        }
        if let Some(v) = self.shots_per_point {
            cfg.shots_per_point = v;
        }
        if let Some(v) = self.sweep_start {
            cfg.sweep.start = v;
        }
        if let Some(v) = self.sweep_stop {
            cfg.sweep.stop = v;
        }
        if let Some(v) = self.sweep_step {
            cfg.sweep.step = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_points_are_closed_open() {
        let grid = SweepRange {
            start: 0.0,
            stop: 360.0,
            step: 10.0,
        };
        let points = grid.points();
        assert_eq!(points.len(), 36);
        assert_eq!(points[0], 0.0);
        assert_eq!(points[35], 350.0);

        let fractional = SweepRange {
            start: 0.0,
            stop: 1.0,
            step: 0.1,
        };
        assert_eq!(fractional.points().len(), 10);

        let descending = SweepRange {
            start: 5.0,
            stop: 0.0,
            step: -2.5,
        };
        assert_eq!(descending.points(), vec![5.0, 2.5]);

        let empty = SweepRange {
            start: 0.0,
            stop: 0.0,
            step: 1.0,
        };
        assert!(empty.points().is_empty());
    }

    #[test]
    fn defaults_validate_for_every_mode() {
        for mode in [
            Mode::Teleport,
            Mode::SweepAnalyzer,
            Mode::SweepOverlap,
            Mode::Baseline,
            Mode::BellDecompose,
        ] {
            let cfg = RunConfig::for_mode(mode);
            cfg.validate()
                .unwrap_or_else(|e| panic!("mode {mode}: {e}"));
        }
    }

    #[test]
    fn overlap_mode_defaults_to_a_prism_scan() {
        let cfg = RunConfig::for_mode(Mode::SweepOverlap);
        assert_eq!(cfg.sweep.start, -200.0);
        let points = cfg.sweep.points();
        assert_eq!(points.len(), 41);
        assert_eq!(*points.last().unwrap(), 200.0);
    }

    #[test]
    fn parses_the_flat_file_format() {
        let text = "\
# fringe scan at reduced coherence
mode = sweep-analyzer
input_angle_deg = 45
visibility = 0.8   # pair coherence
shots_per_point = 2000
sweep_start = 0
sweep_stop = 180
sweep_step = 5
seed = 11
";
        let overlay = ConfigOverlay::parse(text).unwrap();
        let mut cfg = RunConfig::for_mode(Mode::SweepAnalyzer);
        overlay.apply(&mut cfg).unwrap();
        assert_eq!(cfg.visibility, 0.8);
        assert_eq!(cfg.shots_per_point, 2000);
        assert_eq!(cfg.sweep.stop, 180.0);
        assert_eq!(cfg.seed, 11);
        cfg.validate().unwrap();
    }

    #[test]
    fn file_errors_name_the_offending_line() {
        assert!(matches!(
            ConfigOverlay::parse("visibility 0.8"),
            Err(ConfigError::Malformed(1))
        ));
        assert!(matches!(
            ConfigOverlay::parse("\n\nshots = 5"),
            Err(ConfigError::UnknownKey(k, 3)) if k == "shots"
        ));
        assert!(matches!(
            ConfigOverlay::parse("visibility = high"),
            Err(ConfigError::InvalidValue { .. })
        ));
    }

    #[test]
    fn amplitude_keys_replace_the_angle_input() {
        let overlay =
            ConfigOverlay::parse("alpha_re = 0.6\nbeta_re = 0.8").unwrap();
        let mut cfg = RunConfig::for_mode(Mode::Teleport);
        overlay.apply(&mut cfg).unwrap();
        let input = cfg.input_state().unwrap();
        assert!((input.alpha().re - 0.6).abs() < 1e-12);
        assert!((input.beta().re - 0.8).abs() < 1e-12);
    }

    #[test]
    fn conflicting_input_within_one_source_is_rejected() {
        let overlay =
            ConfigOverlay::parse("input_angle_deg = 30\nalpha_re = 1").unwrap();
        let mut cfg = RunConfig::for_mode(Mode::Teleport);
        assert!(matches!(
            overlay.apply(&mut cfg),
            Err(ConfigError::ConflictingInput)
        ));
    }

    #[test]
    fn later_overlays_win_across_sources() {
        let mut cfg = RunConfig::for_mode(Mode::Teleport);
        ConfigOverlay::parse("seed = 1\nvisibility = 0.9")
            .unwrap()
            .apply(&mut cfg)
            .unwrap();
        let cli = ConfigOverlay {
            seed: Some(2),
            ..ConfigOverlay::default()
        };
        cli.apply(&mut cfg).unwrap();
        assert_eq!(cfg.seed, 2);
        assert_eq!(cfg.visibility, 0.9);
    }

    #[test]
    fn mode_mismatch_against_the_selected_command_is_rejected() {
        let overlay = ConfigOverlay::parse("mode = baseline").unwrap();
        let mut cfg = RunConfig::for_mode(Mode::Teleport);
        assert!(matches!(
            overlay.apply(&mut cfg),
            Err(ConfigError::ModeMismatch { .. })
        ));
    }

    #[test]
    fn validation_reports_bound_violations() {
        let mut cfg = RunConfig::for_mode(Mode::Teleport);
        cfg.visibility = 1.5;
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("[0, 1]"), "{err}");

        let mut cfg = RunConfig::for_mode(Mode::Teleport);
        cfg.sfg_efficiency = 0.0;
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("(0, 1]"), "{err}");

        let mut cfg = RunConfig::for_mode(Mode::SweepAnalyzer);
        cfg.shots_per_point = 0;
        assert!(matches!(cfg.validate(), Err(ConfigError::NoShots)));

        let mut cfg = RunConfig::for_mode(Mode::SweepAnalyzer);
        cfg.sweep.step = 0.0;
        assert!(matches!(cfg.validate(), Err(ConfigError::BadSweepStep)));

        let mut cfg = RunConfig::for_mode(Mode::SweepAnalyzer);
        cfg.sweep = SweepRange {
            start: 100.0,
            stop: 0.0,
            step: 10.0,
        };
        assert!(matches!(cfg.validate(), Err(ConfigError::EmptySweep { .. })));

        let mut cfg = RunConfig::for_mode(Mode::BellDecompose);
        cfg.visibility = 0.5;
        assert!(matches!(
            cfg.validate(),
            Err(ConfigError::MixedDecompose(_))
        ));
    }
}
