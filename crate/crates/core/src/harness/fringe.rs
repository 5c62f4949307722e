//! Fits for the two scan shapes the rig produces: analyzer fringes
//! A cos^2(theta - phase) + C, and the Gaussian up-conversion envelope.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::harness::records::CoincidenceRecord;

/// Fitted fringe y = amplitude * cos^2(theta - phase) + offset.
#[derive(Debug, Clone, PartialEq)]
pub struct FringeFit {
    pub amplitude: f64,
    pub offset: f64,
    /// Fringe maximum position, folded into [0, 180).
    pub phase_deg: f64,
    /// (max - min) / (max + min) of the fitted curve, clamped to [0, 1].
    pub visibility: f64,
    /// Root-mean-square misfit in count units.
    pub residual: f64,
}

/// Smallest circular separation of two fringe phases, in [0, 90].
pub fn phase_difference_deg(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(180.0);
    d.min(180.0 - d)
}

/// Least-squares fringe fit on (angle_deg, value) samples.
///
/// cos^2 halves the period, so the model is linear in {1, cos 2theta,
/// sin 2theta} and the fit is exact: y = c0 + a cos 2theta + b sin 2theta
/// with amplitude 2 sqrt(a^2 + b^2), phase atan2(b, a) / 2, offset
/// c0 - amplitude/2. Needs at least 8 samples spanning at least 180
/// degrees; constant or aliased data is rejected as degenerate.
pub fn fit_fringe_samples(samples: &[(f64, f64)]) -> Result<FringeFit> {
    if samples.len() < 8 {
        return Err(Error::TooFewFitPoints(samples.len()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (angle, value) in samples {
        if !angle.is_finite() || !value.is_finite() {
            return Err(Error::NonFinite);
        }
        lo = lo.min(*angle);
        hi = hi.max(*angle);
    }
    if hi - lo < 180.0 {
        return Err(Error::InsufficientSpan(hi - lo));
    }

    // normal equations for the three-column design matrix
    let mut m = Matrix3::<f64>::zeros();
    let mut rhs = Vector3::<f64>::zeros();
    for (angle, value) in samples {
        let t = 2.0 * angle.to_radians();
        let row = [1.0, t.cos(), t.sin()];
        for i in 0..3 {
            for j in 0..3 {
                m[(i, j)] += row[i] * row[j];
            }
            rhs[i] += row[i] * value;
        }
    }
    // the normal matrix is positive semidefinite; a vanishing eigenvalue
    // means some design column (e.g. sin on a 90-degree-aliased grid) is
    // numerically absent, so reject rather than amplify noise
    let eigen = m.symmetric_eigenvalues();
    let lambda_max = eigen.iter().fold(0.0f64, |acc, &l| acc.max(l.abs()));
    let lambda_min = eigen.iter().fold(f64::INFINITY, |acc, &l| acc.min(l.abs()));
    if lambda_max <= 0.0 || lambda_min <= 1e-9 * lambda_max {
        return Err(Error::DegenerateFit);
    }
    let coeffs = m.lu().solve(&rhs).ok_or(Error::DegenerateFit)?;
    let (c0, a, b) = (coeffs[0], coeffs[1], coeffs[2]);

    let amplitude = 2.0 * (a * a + b * b).sqrt();
    // max + min of the fitted curve is 2 c0; flat or empty data has no fringe
    let peak_to_peak_base = 2.0 * c0;
    if peak_to_peak_base <= 1e-9 || amplitude <= 1e-7 * (peak_to_peak_base + 1.0) {
        return Err(Error::DegenerateFit);
    }
    let phase_deg = (0.5 * b.atan2(a)).to_degrees().rem_euclid(180.0);
    let offset = c0 - amplitude / 2.0;
    let visibility = (amplitude / peak_to_peak_base).clamp(0.0, 1.0);

    let sse: f64 = samples
        .iter()
        .map(|(angle, value)| {
            let t = 2.0 * angle.to_radians();
            let fit = c0 + a * t.cos() + b * t.sin();
            (value - fit) * (value - fit)
        })
        .sum();
    let residual = (sse / samples.len() as f64).sqrt();

    Ok(FringeFit {
        amplitude,
        offset,
        phase_deg,
        visibility,
        residual,
    })
}

/// Fringe fit over coincidence records, which must all belong to one
/// detector pair.
pub fn fit_fringe(records: &[CoincidenceRecord]) -> Result<FringeFit> {
    if records.is_empty() {
        return Err(Error::TooFewFitPoints(0));
    }
    let pair = &records[0].detector_pair;
    for r in records {
        if &r.detector_pair != pair {
            return Err(Error::MixedDetectorPairs(
                pair.clone(),
                r.detector_pair.clone(),
            ));
        }
    }
    let samples: Vec<(f64, f64)> = records
        .iter()
        .map(|r| (r.sweep_value, r.coincidences as f64))
        .collect();
    fit_fringe_samples(&samples)
}

/// Moment-based fit of the Gaussian envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapFit {
    /// Count-weighted mean sweep position.
    pub center_um: f64,
    /// Count-weighted standard deviation.
    pub sigma_um: f64,
    /// 2 sqrt(2 ln 2) sigma.
    pub fwhm_um: f64,
    /// Sweep position with the most counts (first on ties).
    pub peak_position_um: f64,
    /// Counts at the peak position, summed over detector pairs.
    pub peak_counts: u64,
}

/// Treats total counts per sweep position as a histogram of the envelope
/// and reads the Gaussian parameters off its first two moments. Records
/// from different detector pairs are summed per position.
pub fn fit_overlap(records: &[CoincidenceRecord]) -> Result<OverlapFit> {
    let mut totals: Vec<(f64, u64)> = Vec::new();
    for r in records {
        if !r.sweep_value.is_finite() {
            return Err(Error::NonFinite);
        }
        match totals.iter_mut().find(|(x, _)| *x == r.sweep_value) {
            Some((_, n)) => *n += r.coincidences,
            None => totals.push((r.sweep_value, r.coincidences)),
        }
    }
    let grand: u64 = totals.iter().map(|(_, n)| n).sum();
    if grand == 0 || totals.len() < 3 {
        return Err(Error::DegenerateFit);
    }

    let total = grand as f64;
    let center: f64 = totals.iter().map(|(x, n)| x * *n as f64).sum::<f64>() / total;
    let variance: f64 = totals
        .iter()
        .map(|(x, n)| (x - center) * (x - center) * *n as f64)
        .sum::<f64>()
        / total;
    let sigma = variance.sqrt();
    if sigma <= 0.0 {
        return Err(Error::DegenerateFit);
    }
    let fwhm = 2.0 * (2.0 * std::f64::consts::LN_2).sqrt() * sigma;

    let (peak_position, peak_counts) = totals
        .iter()
        .copied()
        .max_by(|a, b| a.1.cmp(&b.1))
        .expect("totals nonempty");

    Ok(OverlapFit {
        center_um: center,
        sigma_um: sigma,
        fwhm_um: fwhm,
        peak_position_um: peak_position,
        peak_counts,
    })
}
