//! Oscillation metrics and regime classification for sampled trajectories.
//!
//! A culture's trajectory is summarized by prominence-filtered extrema,
//! windowed relative amplitudes, the late-window D trend, and the fraction of
//! the late window where synthesis is nondecreasing. Labels:
//!
//! - `ConceptualOscillatory`: sustained large swings of D (periodic
//!   flourishing and collapse while knowledge slowly accumulates).
//! - `TraditionalStagnating`: D levels off while S keeps growing.
//! - `StabilizedMulticultural`: exchange partners damp an initially
//!   oscillatory culture while knowledge keeps accumulating.
//! - `Divergent`: the integration overflowed.
//! - `Undetermined`: none of the above.

use crate::error::{Error, Result};
use crate::integrator::TrajectorySet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub time: f64,
    pub value: f64,
    /// Prominence normalized by the series range.
    pub prominence: f64,
}

/// Prominence-filtered interior extrema of one series.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExtremaList {
    pub maxima: Vec<Extremum>,
    pub minima: Vec<Extremum>,
}

/// Interior local maxima/minima whose prominence (vertical distance to the
/// higher of the two flanking valleys, normalized by the series range) meets
/// `min_prominence`. Endpoints are never extrema; a constant series has none.
pub fn find_extrema(times: &[f64], values: &[f64], min_prominence: f64) -> Result<ExtremaList> {
    if times.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            got: values.len(),
        });
    }
    if values.len() < 3 {
        return Err(Error::InvalidInput(
            "series must have at least 3 samples".to_string(),
        ));
    }
    if !(min_prominence > 0.0 && min_prominence <= 1.0) {
        return Err(Error::InvalidInput(
            "min_prominence must be in (0, 1]".to_string(),
        ));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput("series".to_string()));
    }

    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let range = max - min;
    if range == 0.0 {
        return Ok(ExtremaList::default());
    }

    let maxima = prominent_maxima(times, values, range, min_prominence, false);
    let minima = prominent_maxima(times, values, range, min_prominence, true);
    Ok(ExtremaList { maxima, minima })
}

/// Maxima of `values` (or of its negation when `negate`), prominence-filtered.
fn prominent_maxima(
    times: &[f64],
    values: &[f64],
    range: f64,
    min_prominence: f64,
    negate: bool,
) -> Vec<Extremum> {
    let sign = if negate { -1.0 } else { 1.0 };
    let v = |i: usize| sign * values[i];
    let n = values.len();
    let mut out = Vec::new();
    for i in 1..n - 1 {
        if !(v(i) > v(i - 1) && v(i) > v(i + 1)) {
            continue;
        }
        // Walk to strictly higher ground on each side, tracking the valley floor.
        let peak = v(i);
        let mut left_floor = peak;
        let mut j = i;
        while j > 0 && v(j - 1) <= peak {
            j -= 1;
            left_floor = left_floor.min(v(j));
        }
        let mut right_floor = peak;
        let mut j = i;
        while j + 1 < n && v(j + 1) <= peak {
            j += 1;
            right_floor = right_floor.min(v(j));
        }
        let prominence = (peak - left_floor.max(right_floor)) / range;
        if prominence >= min_prominence {
            out.push(Extremum {
                time: times[i],
                value: values[i],
                prominence,
            });
        }
    }
    out
}

/// (max - min)/max over the window: the fraction of the peak value lost in
/// the swing. Errors when the peak is not positive.
pub fn relative_amplitude(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidInput("window must be non-empty".to_string()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput("series".to_string()));
    }
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max <= 0.0 {
        return Err(Error::AmplitudeUndefined);
    }
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((max - min) / max)
}

/// Amplitude for classification purposes: a window whose peak is not positive
/// (e.g. D stuck at zero) counts as a flat swing of 0.
fn amplitude_or_zero(values: &[f64]) -> f64 {
    relative_amplitude(values).unwrap_or(0.0)
}

/// Mean of `values` between consecutive prominence-filtered minima: one entry
/// per full cycle. Fewer than two minima yield no cycles.
pub fn cycle_averages(times: &[f64], values: &[f64], min_prominence: f64) -> Result<Vec<f64>> {
    let extrema = find_extrema(times, values, min_prominence)?;
    if extrema.minima.len() < 2 {
        return Ok(Vec::new());
    }
    let idx_of = |t: f64| times.partition_point(|&x| x < t);
    let mut out = Vec::new();
    for pair in extrema.minima.windows(2) {
        let i0 = idx_of(pair[0].time);
        let i1 = idx_of(pair[1].time);
        let seg = &values[i0..i1];
        out.push(seg.iter().sum::<f64>() / seg.len() as f64);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegimeLabel {
    ConceptualOscillatory,
    TraditionalStagnating,
    StabilizedMulticultural,
    Divergent,
    Undetermined,
}

impl std::fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RegimeLabel::ConceptualOscillatory => "ConceptualOscillatory",
            RegimeLabel::TraditionalStagnating => "TraditionalStagnating",
            RegimeLabel::StabilizedMulticultural => "StabilizedMulticultural",
            RegimeLabel::Divergent => "Divergent",
            RegimeLabel::Undetermined => "Undetermined",
        };
        f.write_str(s)
    }
}

/// Cutoffs used by [`classify_regime`]. The defaults operationalize the
/// qualitative regime descriptions; every value is configurable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierThresholds {
    /// Minimum prominent D maxima for the oscillatory label.
    pub min_oscillations: usize,
    /// Relative-amplitude floor for "oscillates".
    pub amp_oscillatory: f64,
    /// Late/early amplitude ratio ceiling for "swings subside".
    pub amp_subsided: f64,
    /// Maximum late-window relative D change for "levels off".
    pub plateau_tol: f64,
    /// Portion of the horizon treated as the late window.
    pub late_window_fraction: f64,
    /// End of the early window (absolute time).
    pub early_window: f64,
    /// Prominence floor distinguishing oscillation from ripple.
    pub min_prominence: f64,
}

impl Default for ClassifierThresholds {
    fn default() -> Self {
        ClassifierThresholds {
            min_oscillations: 2,
            amp_oscillatory: 0.5,
            amp_subsided: 0.5,
            plateau_tol: 0.05,
            late_window_fraction: 0.5,
            early_window: 2.0,
            min_prominence: 0.1,
        }
    }
}

impl ClassifierThresholds {
    pub fn validate(&self) -> Result<()> {
        if self.min_oscillations < 1 {
            return Err(Error::invalid_field("min_oscillations", "must be >= 1"));
        }
        for (name, v) in [
            ("amp_oscillatory", self.amp_oscillatory),
            ("amp_subsided", self.amp_subsided),
            ("plateau_tol", self.plateau_tol),
            ("late_window_fraction", self.late_window_fraction),
            ("min_prominence", self.min_prominence),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::invalid_field(name, "must be in (0, 1]"));
            }
        }
        if !self.early_window.is_finite() || self.early_window <= 0.0 {
            return Err(Error::invalid_field("early_window", "must be > 0"));
        }
        Ok(())
    }
}

/// Classification outcome plus the metrics that justified it. Amplitudes are
/// relative (in [0, 1]); `d_trend_late` is the least-squares D slope over the
/// late window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeReport {
    pub label: RegimeLabel,
    pub oscillation_count: usize,
    pub relative_amplitude_full: f64,
    pub relative_amplitude_early: f64,
    pub relative_amplitude_late: f64,
    pub d_trend_late: f64,
    pub s_monotone_fraction: f64,
}

/// Least-squares slope of y over t; zero when underdetermined.
fn regression_slope(t: &[f64], y: &[f64]) -> f64 {
    let n = t.len();
    if n < 2 {
        return 0.0;
    }
    let tm = t.iter().sum::<f64>() / n as f64;
    let ym = y.iter().sum::<f64>() / n as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        num += (t[i] - tm) * (y[i] - ym);
        den += (t[i] - tm) * (t[i] - tm);
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Fraction of consecutive late-window sample pairs where S is nondecreasing.
fn monotone_fraction(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let pairs = values.len() - 1;
    let ok = values.windows(2).filter(|w| w[1] >= w[0]).count();
    ok as f64 / pairs as f64
}

struct CultureMetrics {
    oscillation_count: usize,
    amp_full: f64,
    amp_early: f64,
    amp_late: f64,
    d_trend_late: f64,
    s_monotone_fraction: f64,
}

fn culture_metrics(
    traj: &TrajectorySet,
    culture: usize,
    thresholds: &ClassifierThresholds,
) -> CultureMetrics {
    let times = &traj.times;
    let d = &traj.cultures[culture].d;
    let s = &traj.cultures[culture].s;
    let t_end = *times.last().unwrap_or(&0.0);

    let early = traj.window(0.0, thresholds.early_window.min(t_end));
    let late = traj.window(t_end * (1.0 - thresholds.late_window_fraction), t_end);

    let oscillation_count = if times.len() >= 3 {
        find_extrema(times, d, thresholds.min_prominence)
            .map(|ex| ex.maxima.len())
            .unwrap_or(0)
    } else {
        0
    };

    CultureMetrics {
        oscillation_count,
        amp_full: amplitude_or_zero(d),
        amp_early: amplitude_or_zero(&d[early.clone()]),
        amp_late: amplitude_or_zero(&d[late.clone()]),
        d_trend_late: regression_slope(&times[late.clone()], &d[late.clone()]),
        s_monotone_fraction: monotone_fraction(&s[late]),
    }
}

/// Classifies one culture's trajectory. Decision order: divergent, then
/// stagnating (late D plateau with S still rising), then stabilized (some
/// exchange partner's early swings subsided while this culture's knowledge
/// keeps growing), then oscillatory (enough prominent swings of sufficient
/// size), else undetermined.
///
/// Cultures sharing a trajectory are treated as exchange partners; a lone
/// culture can never be `StabilizedMulticultural`.
pub fn classify_regime(
    traj: &TrajectorySet,
    culture: usize,
    thresholds: &ClassifierThresholds,
) -> Result<RegimeReport> {
    thresholds.validate()?;
    if culture >= traj.culture_count() {
        return Err(Error::InvalidInput(format!(
            "culture index {culture} out of range (have {})",
            traj.culture_count()
        )));
    }

    let m = culture_metrics(traj, culture, thresholds);
    let mut report = RegimeReport {
        label: RegimeLabel::Undetermined,
        oscillation_count: m.oscillation_count,
        relative_amplitude_full: m.amp_full,
        relative_amplitude_early: m.amp_early,
        relative_amplitude_late: m.amp_late,
        d_trend_late: m.d_trend_late,
        s_monotone_fraction: m.s_monotone_fraction,
    };

    if traj.divergence.is_some() {
        report.label = RegimeLabel::Divergent;
        return Ok(report);
    }

    if m.amp_late <= thresholds.plateau_tol && m.s_monotone_fraction >= 0.9 {
        report.label = RegimeLabel::TraditionalStagnating;
        return Ok(report);
    }

    if traj.culture_count() > 1 && m.d_trend_late > 0.0 {
        let subsided_partner = (0..traj.culture_count()).any(|c| {
            let (amp_early, amp_late) = if c == culture {
                (m.amp_early, m.amp_late)
            } else {
                let cm = culture_metrics(traj, c, thresholds);
                (cm.amp_early, cm.amp_late)
            };
            amp_early >= thresholds.amp_oscillatory
                && amp_early > 0.0
                && amp_late / amp_early <= thresholds.amp_subsided
        });
        if subsided_partner {
            report.label = RegimeLabel::StabilizedMulticultural;
            return Ok(report);
        }
    }

    if m.oscillation_count >= thresholds.min_oscillations
        && m.amp_full >= thresholds.amp_oscillatory
    {
        report.label = RegimeLabel::ConceptualOscillatory;
        return Ok(report);
    }

    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{integrate, CultureSeries};
    use crate::model::{CultureParams, CultureState, Scenario};

    #[test]
    fn single_peak_detected() {
        let ex = find_extrema(&[0.0, 1.0, 2.0], &[0.0, 1.0, 0.0], 0.5).unwrap();
        assert_eq!(ex.maxima.len(), 1);
        assert_eq!(ex.maxima[0].time, 1.0);
        assert_eq!(ex.maxima[0].value, 1.0);
        assert!(ex.minima.is_empty());
    }

    #[test]
    fn constant_series_has_no_extrema() {
        let ex = find_extrema(&[0.0, 1.0, 2.0, 3.0], &[3.0, 3.0, 3.0, 3.0], 0.5).unwrap();
        assert!(ex.maxima.is_empty() && ex.minima.is_empty());
    }

    #[test]
    fn triangle_wave_counts_cycles() {
        // Three-cycle triangle: peaks at odd indices, interior troughs between.
        let values = [0.0, 2.0, 0.0, 2.0, 0.0, 2.0, 0.0];
        let times: Vec<f64> = (0..values.len()).map(|i| i as f64).collect();
        let ex = find_extrema(&times, &values, 0.5).unwrap();
        assert_eq!(ex.maxima.len(), 3);
        assert_eq!(ex.minima.len(), 2);
        // endpoints are not extrema even though they equal the trough value
        assert!(ex.minima.iter().all(|m| m.time > 0.0 && m.time < 6.0));
    }

    #[test]
    fn extrema_alternate_after_merge() {
        let times: Vec<f64> = (0..200).map(|i| i as f64 * 0.1).collect();
        let values: Vec<f64> = times.iter().map(|t| (t * 1.7).sin() + 0.05 * t).collect();
        let ex = find_extrema(&times, &values, 0.05).unwrap();
        let mut merged: Vec<(f64, bool)> = ex
            .maxima
            .iter()
            .map(|m| (m.time, true))
            .chain(ex.minima.iter().map(|m| (m.time, false)))
            .collect();
        merged.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!(merged.len() >= 5);
        for pair in merged.windows(2) {
            assert_ne!(pair[0].1, pair[1].1, "extrema must alternate");
        }
    }

    #[test]
    fn reversed_series_mirrors_extrema() {
        let times: Vec<f64> = (0..100).map(|i| i as f64 * 0.1).collect();
        let values: Vec<f64> = times.iter().map(|t| (t * 2.1).sin() * (1.0 + t)).collect();
        let fwd = find_extrema(&times, &values, 0.1).unwrap();
        let rev_values: Vec<f64> = values.iter().rev().cloned().collect();
        let t_end = *times.last().unwrap();
        let rev_times: Vec<f64> = times.iter().rev().map(|t| t_end - t).collect();
        let rev = find_extrema(&rev_times, &rev_values, 0.1).unwrap();
        assert_eq!(fwd.maxima.len(), rev.maxima.len());
        let mut fwd_vals: Vec<f64> = fwd.maxima.iter().map(|m| m.value).collect();
        let mut rev_vals: Vec<f64> = rev.maxima.iter().map(|m| m.value).collect();
        fwd_vals.sort_by(f64::total_cmp);
        rev_vals.sort_by(f64::total_cmp);
        assert_eq!(fwd_vals, rev_vals);
        // times mirror
        for m in &fwd.maxima {
            assert!(rev
                .maxima
                .iter()
                .any(|r| (r.time - (t_end - m.time)).abs() < 1e-9));
        }
    }

    #[test]
    fn find_extrema_validates_input() {
        assert!(find_extrema(&[0.0, 1.0], &[0.0, 1.0], 0.5).is_err());
        assert!(find_extrema(&[0.0, 1.0, 2.0], &[0.0, 1.0, 0.0], 0.0).is_err());
        assert!(find_extrema(&[0.0, 1.0, 2.0], &[0.0, 1.0, 0.0], 1.5).is_err());
        assert!(find_extrema(&[0.0, 1.0, 2.0], &[0.0, f64::NAN, 0.0], 0.5).is_err());
    }

    #[test]
    fn relative_amplitude_cases() {
        assert_eq!(relative_amplitude(&[5.0, 5.0, 5.0]).unwrap(), 0.0);
        assert!((relative_amplitude(&[2.0, 10.0, 4.0]).unwrap() - 0.8).abs() < 1e-15);
        assert!(matches!(
            relative_amplitude(&[-1.0, 0.0]),
            Err(Error::AmplitudeUndefined)
        ));
        assert!(relative_amplitude(&[]).is_err());
    }

    fn fig1a_trajectory() -> TrajectorySet {
        let sc = Scenario::single(
            CultureParams::new(10.0, 1.0, 10.0, 0.1, 2.0, 10.0, 1.0).unwrap(),
            CultureState::new(10.0, 3.0).unwrap(),
        );
        integrate(&sc).unwrap()
    }

    #[test]
    fn fig1a_amplitude_in_reported_band() {
        let traj = fig1a_trajectory();
        let amp = relative_amplitude(&traj.cultures[0].d).unwrap();
        assert!((0.5..=0.95).contains(&amp), "amp = {amp}");
    }

    #[test]
    fn fig1a_classifies_oscillatory() {
        let traj = fig1a_trajectory();
        let report = classify_regime(&traj, 0, &ClassifierThresholds::default()).unwrap();
        assert_eq!(report.label, RegimeLabel::ConceptualOscillatory);
        assert!(report.oscillation_count >= 2);
        assert!(report.relative_amplitude_full >= 0.5);
    }

    #[test]
    fn fig1b_classifies_stagnating() {
        let sc = Scenario::single(
            CultureParams::new(10.0, 1.0, 10.0, 1.0, 1.0, 10.0, 10.0).unwrap(),
            CultureState::new(3.0, 50.0).unwrap(),
        );
        let traj = integrate(&sc).unwrap();
        let report = classify_regime(&traj, 0, &ClassifierThresholds::default()).unwrap();
        assert_eq!(report.label, RegimeLabel::TraditionalStagnating);
        assert!(report.relative_amplitude_late <= 0.05);
        assert!(report.s_monotone_fraction >= 0.9);
    }

    #[test]
    fn labels_are_scale_invariant() {
        let traj = fig1a_trajectory();
        let base = classify_regime(&traj, 0, &ClassifierThresholds::default()).unwrap();
        for c in [1e-3, 7.0, 1e3] {
            let mut scaled = traj.clone();
            scaled.cultures[0] = CultureSeries {
                d: traj.cultures[0].d.iter().map(|v| v * c).collect(),
                s: traj.cultures[0].s.clone(),
                h: traj.cultures[0].h.clone(),
            };
            let got = classify_regime(&scaled, 0, &ClassifierThresholds::default()).unwrap();
            assert_eq!(got.label, base.label, "scale {c}");
            assert!((got.relative_amplitude_full - base.relative_amplitude_full).abs() < 1e-9);
            assert!((got.relative_amplitude_late - base.relative_amplitude_late).abs() < 1e-9);
        }
    }

    #[test]
    fn classification_is_deterministic_and_total() {
        let traj = fig1a_trajectory();
        let a = classify_regime(&traj, 0, &ClassifierThresholds::default()).unwrap();
        let b = classify_regime(&traj, 0, &ClassifierThresholds::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn divergent_trajectory_is_labeled_divergent() {
        let mut sc = Scenario::single(
            CultureParams::new(10.0, 0.0, 100.0, 0.0, 0.0, 1e9, 100.0).unwrap(),
            CultureState::new(10.0, 10.0).unwrap(),
        );
        sc.horizon = 1.0;
        let partial = match integrate(&sc) {
            Err(Error::Divergence { partial, .. }) => *partial,
            other => panic!("expected divergence, got {other:?}"),
        };
        let report = classify_regime(&partial, 0, &ClassifierThresholds::default()).unwrap();
        assert_eq!(report.label, RegimeLabel::Divergent);
    }

    #[test]
    fn fig1a_cycle_averages_nondecreasing() {
        let traj = fig1a_trajectory();
        let avgs = cycle_averages(&traj.times, &traj.cultures[0].d, 0.1).unwrap();
        assert!(avgs.len() >= 3);
        for pair in avgs.windows(2) {
            assert!(
                pair[1] >= pair[0] * 0.98,
                "cycle averages regressed: {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn out_of_range_culture_is_rejected() {
        let traj = fig1a_trajectory();
        assert!(classify_regime(&traj, 1, &ClassifierThresholds::default()).is_err());
    }

    #[test]
    fn thresholds_validate_ranges() {
        assert!(ClassifierThresholds::default().validate().is_ok());
        for bad in [
            ClassifierThresholds {
                min_oscillations: 0,
                ..Default::default()
            },
            ClassifierThresholds {
                plateau_tol: 0.0,
                ..Default::default()
            },
            ClassifierThresholds {
                late_window_fraction: 1.5,
                ..Default::default()
            },
        ] {
            assert!(bad.validate().is_err());
        }
    }
}
