//! Command-line front end.
//!
//! Five subcommands share one flag set; settings layer as defaults, then
//! the config file, then flags. Results go to standard output as a single
//! summary line (plus an optional JSON line), and sweeps can write their
//! counts as CSV. Exit codes: 0 success, 1 output I/O failure, 2 for flag,
//! config, or bound errors.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::bsm::DetectorId;
use crate::harness::config::{ConfigError, ConfigOverlay, Mode, RunConfig};
use crate::harness::fringe::{fit_fringe, fit_overlap, FringeFit};
use crate::harness::records::{filter_pair, write_csv, CoincidenceRecord};
use crate::harness::sweep::{
    run_baseline_batch, run_bell_decompose, run_teleport_batch, sweep_analyzer, sweep_overlap,
    BatchStats,
};
use crate::states::BobBranch;

#[derive(Debug, Parser)]
#[command(
    name = "sfg-teleport",
    version,
    about = "Polarization-qubit teleportation with a four-detector up-conversion Bell measurement"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run teleportation rounds and report detector frequencies and fidelity
    Teleport(CommonArgs),
    /// Scan Bob's analyzer angle and record coincidence fringes
    SweepAnalyzer(CommonArgs),
    /// Scan the prism offset and record the up-conversion envelope
    SweepOverlap(CommonArgs),
    /// Run rounds against the two-outcome linear-optics measurement
    Baseline(CommonArgs),
    /// Print the Bell-basis branches of the composed three-photon state
    BellDecompose(CommonArgs),
}

impl Command {
    fn split(self) -> (Mode, CommonArgs) {
        match self {
            Command::Teleport(a) => (Mode::Teleport, a),
            Command::SweepAnalyzer(a) => (Mode::SweepAnalyzer, a),
            Command::SweepOverlap(a) => (Mode::SweepOverlap, a),
            Command::Baseline(a) => (Mode::Baseline, a),
            Command::BellDecompose(a) => (Mode::BellDecompose, a),
        }
    }
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Flat `key = value` config file applied before flag overrides
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Base seed for the deterministic sampling substreams
    #[arg(long, value_name = "N")]
    seed: Option<u64>,

    /// Rounds per sweep point, or total rounds for batch modes
    #[arg(long, value_name = "N")]
    shots: Option<u64>,

    /// Write coincidence records (or branch amplitudes) as CSV
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Linear input polarization angle in degrees
    #[arg(long, value_name = "DEG", conflicts_with_all = ["alpha", "beta"])]
    input_angle: Option<f64>,

    /// Input alpha amplitude as `re,im`
    #[arg(long, value_name = "RE,IM")]
    alpha: Option<String>,

    /// Input beta amplitude as `re,im`
    #[arg(long, value_name = "RE,IM")]
    beta: Option<String>,

    /// Pair coherence in [0, 1]
    #[arg(long, value_name = "V")]
    visibility: Option<f64>,

    /// Pair relative phase in radians
    #[arg(long, value_name = "RAD")]
    epr_phase: Option<f64>,

    /// Conversion-and-detection efficiency in (0, 1]
    #[arg(long, value_name = "E")]
    sfg_efficiency: Option<f64>,

    /// Gaussian overlap width in micrometers
    #[arg(long, value_name = "UM")]
    overlap_sigma: Option<f64>,

    /// Prism displacement from perfect overlap in micrometers
    #[arg(long, value_name = "UM")]
    prism_offset: Option<f64>,

    /// Sweep grid START:STOP:STEP with the stop value excluded
    #[arg(long, value_name = "START:STOP:STEP")]
    sweep: Option<String>,

    /// Also print a one-line JSON summary
    #[arg(long)]
    json_summary: bool,
}

impl CommonArgs {
    fn overlay(&self) -> Result<ConfigOverlay, ConfigError> {
        let mut overlay = ConfigOverlay {
            seed: self.seed,
            shots_per_point: self.shots,
            input_angle_deg: self.input_angle,
            visibility: self.visibility,
            epr_phase_rad: self.epr_phase,
            sfg_efficiency: self.sfg_efficiency,
            overlap_sigma_um: self.overlap_sigma,
            prism_offset_um: self.prism_offset,
            ..ConfigOverlay::default()
        };
        if let Some(text) = &self.alpha {
            let (re, im) = parse_complex_pair("alpha", text)?;
            overlay.alpha_re = Some(re);
            overlay.alpha_im = Some(im);
        }
        if let Some(text) = &self.beta {
            let (re, im) = parse_complex_pair("beta", text)?;
            overlay.beta_re = Some(re);
            overlay.beta_im = Some(im);
        }
        if let Some(text) = &self.sweep {
            let (start, stop, step) = parse_sweep(text)?;
            overlay.sweep_start = Some(start);
            overlay.sweep_stop = Some(stop);
            overlay.sweep_step = Some(step);
        }
        Ok(overlay)
    }
}

fn parse_complex_pair(key: &str, text: &str) -> Result<(f64, f64), ConfigError> {
    let invalid = |message: String| ConfigError::InvalidValue {
        key: key.to_string(),
        message,
    };
    let (re, im) = text
        .split_once(',')
        .ok_or_else(|| invalid(format!("{text:?} is not `re,im`")))?;
    let re: f64 = re
        .trim()
        .parse()
        .map_err(|e| invalid(format!("real part {re:?}: {e}")))?;
    let im: f64 = im
        .trim()
        .parse()
        .map_err(|e| invalid(format!("imaginary part {im:?}: {e}")))?;
    Ok((re, im))
}

fn parse_sweep(text: &str) -> Result<(f64, f64, f64), ConfigError> {
    let invalid = |message: String| ConfigError::InvalidValue {
        key: "sweep".to_string(),
        message,
    };
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(invalid(format!("{text:?} is not START:STOP:STEP")));
    }
    let mut values = [0.0f64; 3];
    for (slot, part) in values.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|e| invalid(format!("{part:?}: {e}")))?;
    }
    Ok((values[0], values[1], values[2]))
}

#[derive(Debug)]
enum Failure {
    Config(ConfigError),
    Io(PathBuf, std::io::Error),
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Io(_, _) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "{e}"),
            Failure::Io(path, e) => write!(f, "cannot write {}: {e}", path.display()),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

/// Runs the command line and returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(failure) => {
            eprintln!("error: {failure}");
            failure.exit_code()
        }
    }
}

fn build_config(mode: Mode, args: &CommonArgs) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::for_mode(mode);
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).map_err(|source| {
            Failure::Config(ConfigError::Unreadable {
                path: path.clone(),
                source,
            })
        })?;
        ConfigOverlay::parse(&text)?.apply(&mut cfg)?;
    }
    args.overlay()?.apply(&mut cfg)?;
    cfg.validate()?;
    Ok(cfg)
}

fn write_records(path: &Path, records: &[CoincidenceRecord]) -> Result<(), Failure> {
    write_csv(path, records).map_err(|e| Failure::Io(path.to_path_buf(), e))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (mode, args) = cli.command.split();
    let cfg = build_config(mode, &args)?;
    match mode {
        Mode::Teleport => {
            let stats = run_teleport_batch(&cfg)?;
            finish_batch(&cfg, &args, stats, "teleport")
        }
        Mode::Baseline => {
            let stats = run_baseline_batch(&cfg)?;
            finish_batch(&cfg, &args, stats, "baseline")
        }
        Mode::SweepAnalyzer => {
            let records = sweep_analyzer(&cfg)?;
            finish_analyzer(&cfg, &args, records)
        }
        Mode::SweepOverlap => {
            let records = sweep_overlap(&cfg)?;
            finish_overlap(&cfg, &args, records)
        }
        Mode::BellDecompose => {
            let branches = run_bell_decompose(&cfg)?;
            finish_decompose(&cfg, &args, branches)
        }
    }
}

fn optional_fidelity(value: Option<f64>) -> String {
    value.map_or_else(|| "n/a".to_string(), |f| format!("{f:.6}"))
}

fn finish_batch(
    cfg: &RunConfig,
    args: &CommonArgs,
    stats: BatchStats,
    label: &str,
) -> Result<(), Failure> {
    if let Some(path) = &args.out {
        let records: Vec<CoincidenceRecord> = DetectorId::FIRING
            .into_iter()
            .enumerate()
            .map(|(k, d)| CoincidenceRecord {
                sweep_value: 0.0,
                detector_pair: d.pair_label().expect("firing detector").to_string(),
                coincidences: stats.counts[k],
                shots: stats.shots,
            })
            .collect();
        write_records(path, &records)?;
    }

    let mut line = format!("{label} seed={} shots={}", cfg.seed, stats.shots);
    for d in DetectorId::FIRING {
        let _ = write!(line, " {}={:.5}", d, stats.frequency(d));
    }
    let _ = write!(
        line,
        " no_detection={:.5} success_rate={:.5} mean_fidelity={} min_fidelity={}",
        stats.frequency(DetectorId::NoDetection),
        stats.success_rate(),
        optional_fidelity(stats.mean_fidelity),
        optional_fidelity(stats.min_fidelity),
    );
    if let Some(path) = &args.out {
        let _ = write!(line, " out={}", path.display());
    }
    println!("{line}");

    if args.json_summary {
        let summary = json!({
            "mode": label,
            "seed": cfg.seed,
            "shots": stats.shots,
            "frequencies": {
                "D4I": stats.frequency(DetectorId::D4I),
                "D4II": stats.frequency(DetectorId::D4II),
                "D4III": stats.frequency(DetectorId::D4III),
                "D4IV": stats.frequency(DetectorId::D4IV),
                "no_detection": stats.frequency(DetectorId::NoDetection),
            },
            "counts": stats.counts.to_vec(),
            "teleported": stats.teleported,
            "success_rate": stats.success_rate(),
            "mean_fidelity": stats.mean_fidelity,
            "min_fidelity": stats.min_fidelity,
            "csv": args.out.as_ref().map(|p| p.display().to_string()),
        });
        println!("{summary}");
    }
    Ok(())
}

fn fit_field(fit: &Result<FringeFit, crate::error::Error>) -> serde_json::Value {
    match fit {
        Ok(f) => json!({
            "amplitude": f.amplitude,
            "offset": f.offset,
            "phase_deg": f.phase_deg,
            "visibility": f.visibility,
            "residual": f.residual,
        }),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn finish_analyzer(
    cfg: &RunConfig,
    args: &CommonArgs,
    records: Vec<CoincidenceRecord>,
) -> Result<(), Failure> {
    if let Some(path) = &args.out {
        write_records(path, &records)?;
    }

    let mut line = format!(
        "sweep-analyzer seed={} points={} shots_per_point={}",
        cfg.seed,
        records.len() / 4,
        cfg.shots_per_point
    );
    let fits: Vec<(String, Result<FringeFit, crate::error::Error>)> = DetectorId::FIRING
        .into_iter()
        .map(|d| {
            let pair = d.pair_label().expect("firing detector").to_string();
            let fit = fit_fringe(&filter_pair(&records, &pair));
            (pair, fit)
        })
        .collect();
    for (pair, fit) in &fits {
        match fit {
            Ok(f) => {
                let _ = write!(
                    line,
                    " {pair}[phase={:.2} vis={:.4}]",
                    f.phase_deg, f.visibility
                );
            }
            Err(_) => {
                let _ = write!(line, " {pair}[fit unavailable]");
            }
        }
    }
    if let Some(path) = &args.out {
        let _ = write!(line, " out={}", path.display());
    }
    println!("{line}");

    if args.json_summary {
        let mut fit_map = serde_json::Map::new();
        for (pair, fit) in &fits {
            fit_map.insert(pair.clone(), fit_field(fit));
        }
        let summary = json!({
            "mode": "sweep-analyzer",
            "seed": cfg.seed,
            "points": records.len() / 4,
            "shots_per_point": cfg.shots_per_point,
            "fits": fit_map,
            "csv": args.out.as_ref().map(|p| p.display().to_string()),
        });
        println!("{summary}");
    }
    Ok(())
}

fn finish_overlap(
    cfg: &RunConfig,
    args: &CommonArgs,
    records: Vec<CoincidenceRecord>,
) -> Result<(), Failure> {
    if let Some(path) = &args.out {
        write_records(path, &records)?;
    }

    let fit = fit_overlap(&records);
    let mut line = format!(
        "sweep-overlap seed={} points={} shots_per_point={}",
        cfg.seed,
        records.len() / 4,
        cfg.shots_per_point
    );
    match &fit {
        Ok(f) => {
            let _ = write!(
                line,
                " peak_at={} center={:.2} fwhm={:.2}",
                f.peak_position_um, f.center_um, f.fwhm_um
            );
        }
        Err(_) => {
            let _ = write!(line, " fit unavailable");
        }
    }
    if let Some(path) = &args.out {
        let _ = write!(line, " out={}", path.display());
    }
    println!("{line}");

    if args.json_summary {
        let envelope = match &fit {
            Ok(f) => json!({
                "center_um": f.center_um,
                "sigma_um": f.sigma_um,
                "fwhm_um": f.fwhm_um,
                "peak_position_um": f.peak_position_um,
                "peak_counts": f.peak_counts,
            }),
            Err(e) => json!({ "error": e.to_string() }),
        };
        let summary = json!({
            "mode": "sweep-overlap",
            "seed": cfg.seed,
            "points": records.len() / 4,
            "shots_per_point": cfg.shots_per_point,
            "envelope": envelope,
            "csv": args.out.as_ref().map(|p| p.display().to_string()),
        });
        println!("{summary}");
    }
    Ok(())
}

const BRANCH_CSV_HEADER: &str = "bell_state,amp0_re,amp0_im,amp1_re,amp1_im,norm_sq";

fn finish_decompose(
    cfg: &RunConfig,
    args: &CommonArgs,
    branches: [BobBranch; 4],
) -> Result<(), Failure> {
    if let Some(path) = &args.out {
        let mut out = String::from(BRANCH_CSV_HEADER);
        out.push('\n');
        for b in &branches {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                b.bell,
                b.amps[0].re,
                b.amps[0].im,
                b.amps[1].re,
                b.amps[1].im,
                b.norm_sqr()
            );
        }
        std::fs::write(path, out).map_err(|e| Failure::Io(path.clone(), e))?;
    }

    let mut line = format!("bell-decompose seed={}", cfg.seed);
    for b in &branches {
        let _ = write!(
            line,
            " {}=({:+.4}{:+.4}i, {:+.4}{:+.4}i |{:.4})",
            b.bell,
            b.amps[0].re,
            b.amps[0].im,
            b.amps[1].re,
            b.amps[1].im,
            b.norm_sqr()
        );
    }
    if let Some(path) = &args.out {
        let _ = write!(line, " out={}", path.display());
    }
    println!("{line}");

    if args.json_summary {
        let mut branch_map = serde_json::Map::new();
        for b in &branches {
            branch_map.insert(
                b.bell.to_string(),
                json!({
                    "amps": [[b.amps[0].re, b.amps[0].im], [b.amps[1].re, b.amps[1].im]],
                    "norm_sqr": b.norm_sqr(),
                }),
            );
        }
        let summary = json!({
            "mode": "bell-decompose",
            "branches": branch_map,
            "csv": args.out.as_ref().map(|p| p.display().to_string()),
        });
        println!("{summary}");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_pair_parsing() {
        assert_eq!(parse_complex_pair("alpha", "0.6,0").unwrap(), (0.6, 0.0));
        assert_eq!(
            parse_complex_pair("alpha", " -0.3 , 0.4 ").unwrap(),
            (-0.3, 0.4)
        );
        assert!(parse_complex_pair("alpha", "0.6").is_err());
        assert!(parse_complex_pair("alpha", "x,y").is_err());
    }

    #[test]
    fn sweep_parsing() {
        assert_eq!(parse_sweep("0:360:10").unwrap(), (0.0, 360.0, 10.0));
        assert_eq!(
            parse_sweep("-200:210:10").unwrap(),
            (-200.0, 210.0, 10.0)
        );
        assert!(parse_sweep("0:360").is_err());
        assert!(parse_sweep("a:b:c").is_err());
    }

    #[test]
    fn config_layering_applies_file_then_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "seed = 3\nvisibility = 0.9\n").unwrap();
        let args = CommonArgs {
            config: Some(path),
            seed: Some(10),
            shots: None,
            out: None,
            input_angle: None,
            alpha: None,
            beta: None,
            visibility: None,
            epr_phase: None,
            sfg_efficiency: None,
            overlap_sigma: None,
            prism_offset: None,
            sweep: None,
            json_summary: false,
        };
        let cfg = build_config(Mode::Teleport, &args).unwrap();
        assert_eq!(cfg.seed, 10);
        assert_eq!(cfg.visibility, 0.9);
    }
}
