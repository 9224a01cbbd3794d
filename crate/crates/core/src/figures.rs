//! Canonical scenario presets and one-call figure reproduction.
//!
//! Each preset pins the parameter set of one reference solution of the model:
//! `fig1a` (oscillating knowledge growth), `fig1b` (stagnating high-synthesis
//! culture), `fig2` (two coupled cultures stabilizing each other). The fig2
//! horizon runs to t = 14 so its late window covers the stretch where the
//! exchange has damped the initially oscillatory culture's swings.

use std::path::{Path, PathBuf};

use crate::analysis::{classify_regime, ClassifierThresholds, RegimeLabel, RegimeReport};
use crate::error::{Error, Result};
use crate::export::{export_trajectory_csv, render_svg_plot, SeriesSelection};
use crate::integrator::refine_until_converged;
use crate::model::{
    CouplingMatrices, CultureParams, CultureSetup, CultureState, Scenario, DEFAULT_DT,
    DEFAULT_SAMPLE_EVERY,
};

/// Step-halving tolerance used when reproducing figures.
pub const REFINE_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FigureId {
    Fig1a,
    Fig1b,
    Fig2,
}

impl FigureId {
    pub const ALL: [FigureId; 3] = [FigureId::Fig1a, FigureId::Fig1b, FigureId::Fig2];
}

impl std::fmt::Display for FigureId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FigureId::Fig1a => "fig1a",
            FigureId::Fig1b => "fig1b",
            FigureId::Fig2 => "fig2",
        })
    }
}

impl std::str::FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig1a" => Ok(FigureId::Fig1a),
            "fig1b" => Ok(FigureId::Fig1b),
            "fig2" => Ok(FigureId::Fig2),
            _ => Err(Error::InvalidInput(format!(
                "unknown figure '{s}' (expected fig1a, fig1b, or fig2)"
            ))),
        }
    }
}

/// The scenario behind a figure, with its exact canonical parameters.
pub fn preset_scenario(id: FigureId) -> Scenario {
    let scenario = match id {
        FigureId::Fig1a => Scenario {
            cultures: vec![CultureSetup {
                params: CultureParams {
                    a: 10.0,
                    b: 1.0,
                    d: 10.0,
                    e: 0.1,
                    s0: 2.0,
                    s1: 10.0,
                    h0: 1.0,
                },
                initial: CultureState {
                    d_concepts: 10.0,
                    s_synthesis: 3.0,
                },
            }],
            coupling: CouplingMatrices::zero(1),
            horizon: 10.0,
            dt: DEFAULT_DT,
            sample_every: DEFAULT_SAMPLE_EVERY,
        },
        FigureId::Fig1b => Scenario {
            cultures: vec![CultureSetup {
                params: CultureParams {
                    a: 10.0,
                    b: 1.0,
                    d: 10.0,
                    e: 1.0,
                    s0: 1.0,
                    s1: 10.0,
                    h0: 10.0,
                },
                initial: CultureState {
                    d_concepts: 3.0,
                    s_synthesis: 50.0,
                },
            }],
            coupling: CouplingMatrices::zero(1),
            horizon: 10.0,
            dt: DEFAULT_DT,
            sample_every: DEFAULT_SAMPLE_EVERY,
        },
        FigureId::Fig2 => Scenario {
            cultures: vec![
                CultureSetup {
                    params: CultureParams {
                        a: 2.0,
                        b: 1.0,
                        d: 10.0,
                        e: 1.0,
                        s0: 1.0,
                        s1: 10.0,
                        h0: 12.0,
                    },
                    initial: CultureState {
                        d_concepts: 30.0,
                        s_synthesis: 2.0,
                    },
                },
                CultureSetup {
                    params: CultureParams {
                        a: 2.0,
                        b: 1.0,
                        d: 10.0,
                        e: 1.0,
                        s0: 1.0,
                        s1: 10.0,
                        h0: 10.0,
                    },
                    initial: CultureState {
                        d_concepts: 3.0,
                        s_synthesis: 50.0,
                    },
                },
            ],
            coupling: CouplingMatrices::symmetric_pair(0.5, 0.5),
            horizon: 14.0,
            dt: DEFAULT_DT,
            sample_every: DEFAULT_SAMPLE_EVERY,
        },
    };
    debug_assert!(scenario.validate().is_ok());
    scenario
}

/// The regime each figure's cultures must land in.
pub fn expected_label(id: FigureId) -> RegimeLabel {
    match id {
        FigureId::Fig1a => RegimeLabel::ConceptualOscillatory,
        FigureId::Fig1b => RegimeLabel::TraditionalStagnating,
        FigureId::Fig2 => RegimeLabel::StabilizedMulticultural,
    }
}

#[derive(Debug, Clone)]
pub struct FigureReproduction {
    pub csv_path: PathBuf,
    pub svg_path: PathBuf,
    pub dt_used: f64,
    /// One report per culture.
    pub reports: Vec<RegimeReport>,
}

/// Integrates the preset with a convergence-refined step, writes the CSV and
/// SVG artifacts into `out_dir`, and classifies every culture. Errors when
/// any culture's label differs from the figure's canonical one.
pub fn reproduce_figure(id: FigureId, out_dir: &Path) -> Result<FigureReproduction> {
    let scenario = preset_scenario(id);
    let (dt_used, traj) = refine_until_converged(&scenario, REFINE_TOL)?;

    std::fs::create_dir_all(out_dir)?;
    let csv_path = out_dir.join(format!("{id}.csv"));
    let svg_path = out_dir.join(format!("{id}.svg"));
    std::fs::write(&csv_path, export_trajectory_csv(&traj))?;
    std::fs::write(
        &svg_path,
        render_svg_plot(&traj, &SeriesSelection::d_and_s(&traj))?,
    )?;

    let thresholds = ClassifierThresholds::default();
    let expected = expected_label(id);
    let mut reports = Vec::with_capacity(traj.culture_count());
    for culture in 0..traj.culture_count() {
        let report = classify_regime(&traj, culture, &thresholds)?;
        if report.label != expected {
            return Err(Error::FigureMismatch(format!(
                "{id} culture {culture}: expected {expected}, got {} ({report:?})",
                report.label
            )));
        }
        reports.push(report);
    }
    Ok(FigureReproduction {
        csv_path,
        svg_path,
        dt_used,
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario_file::{parse_scenario, serialize_scenario};

    #[test]
    fn presets_validate() {
        for id in FigureId::ALL {
            assert!(preset_scenario(id).validate().is_ok(), "{id}");
        }
    }

    #[test]
    fn figure_ids_parse() {
        for id in FigureId::ALL {
            let parsed: FigureId = id.to_string().parse().unwrap();
            assert_eq!(parsed, id);
        }
        assert!("fig3".parse::<FigureId>().is_err());
    }

    #[test]
    fn shipped_preset_files_match_embedded_presets() {
        for (id, text) in [
            (FigureId::Fig1a, include_str!("../presets/fig1a.scn")),
            (FigureId::Fig1b, include_str!("../presets/fig1b.scn")),
            (FigureId::Fig2, include_str!("../presets/fig2.scn")),
        ] {
            let parsed = parse_scenario(text).unwrap_or_else(|e| panic!("{id}: {e}"));
            assert_eq!(parsed, preset_scenario(id), "{id}");
        }
    }

    #[test]
    fn presets_serialize_to_shipped_files() {
        assert_eq!(
            serialize_scenario(&preset_scenario(FigureId::Fig2)),
            include_str!("../presets/fig2.scn")
        );
    }

    #[test]
    fn all_figures_reproduce_with_canonical_labels() {
        let dir = tempfile::tempdir().unwrap();
        for id in FigureId::ALL {
            let rep = reproduce_figure(id, dir.path()).unwrap();
            for report in &rep.reports {
                assert_eq!(report.label, expected_label(id), "{id}");
            }

            // artifacts re-parse cleanly
            let csv = std::fs::read_to_string(&rep.csv_path).unwrap();
            let parsed = crate::export::parse_trajectory_csv(&csv).unwrap();
            assert_eq!(parsed.culture_count(), rep.reports.len());
            let columns = csv.lines().next().unwrap().split(',').count();
            assert_eq!(columns, 1 + 3 * rep.reports.len());
            let svg = std::fs::read_to_string(&rep.svg_path).unwrap();
            assert!(svg.starts_with("<svg ") && svg.trim_end().ends_with("</svg>"));
            assert_eq!(
                svg.matches("<polyline").count(),
                2 * rep.reports.len(),
                "one D and one S polyline per culture"
            );
        }
    }
}
