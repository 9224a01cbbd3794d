//! Parameter grids over scenarios: regime maps, boundary bisection, and
//! simulation-based coefficient fitting (see [`fit_parameters`]).

mod fit;

pub use fit::{fit_parameters, FitResult};

use rayon::prelude::*;

use crate::analysis::{classify_regime, ClassifierThresholds, RegimeLabel};
use crate::error::{Error, Result};
use crate::integrator::integrate;
use crate::model::Scenario;

/// Addresses one scalar of a scenario: a culture coefficient, an initial
/// state component, or a coupling entry.
///
/// Text form: `c<k>.<field>` with field in `a b d e s0 s1 h0 d0 s_init`
/// (bare `<field>` means culture 0), or `x.<k>.<j>` / `y.<k>.<j>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamPath {
    Param {
        culture: usize,
        field: ParamField,
    },
    State {
        culture: usize,
        field: StateField,
    },
    Coupling {
        table: CouplingTable,
        row: usize,
        col: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamField {
    A,
    B,
    D,
    E,
    S0,
    S1,
    H0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateField {
    /// Initial number of concepts.
    D0,
    /// Initial synthesis level.
    SInit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingTable {
    X,
    Y,
}

impl ParamPath {
    fn culture_field(culture: usize, key: &str) -> Option<ParamPath> {
        let field = match key {
            "a" => {
                return Some(ParamPath::Param {
                    culture,
                    field: ParamField::A,
                })
            }
            "b" => {
                return Some(ParamPath::Param {
                    culture,
                    field: ParamField::B,
                })
            }
            "d" => {
                return Some(ParamPath::Param {
                    culture,
                    field: ParamField::D,
                })
            }
            "e" => {
                return Some(ParamPath::Param {
                    culture,
                    field: ParamField::E,
                })
            }
            "s0" => {
                return Some(ParamPath::Param {
                    culture,
                    field: ParamField::S0,
                })
            }
            "s1" => {
                return Some(ParamPath::Param {
                    culture,
                    field: ParamField::S1,
                })
            }
            "h0" => {
                return Some(ParamPath::Param {
                    culture,
                    field: ParamField::H0,
                })
            }
            "d0" => StateField::D0,
            "s_init" => StateField::SInit,
            _ => return None,
        };
        Some(ParamPath::State { culture, field })
    }

    /// Reads the addressed scalar.
    pub fn get(&self, scenario: &Scenario) -> Result<f64> {
        self.check(scenario)?;
        Ok(match *self {
            ParamPath::Param { culture, field } => {
                let p = &scenario.cultures[culture].params;
                match field {
                    ParamField::A => p.a,
                    ParamField::B => p.b,
                    ParamField::D => p.d,
                    ParamField::E => p.e,
                    ParamField::S0 => p.s0,
                    ParamField::S1 => p.s1,
                    ParamField::H0 => p.h0,
                }
            }
            ParamPath::State { culture, field } => {
                let st = &scenario.cultures[culture].initial;
                match field {
                    StateField::D0 => st.d_concepts,
                    StateField::SInit => st.s_synthesis,
                }
            }
            ParamPath::Coupling { table, row, col } => match table {
                CouplingTable::X => scenario.coupling.x[row][col],
                CouplingTable::Y => scenario.coupling.y[row][col],
            },
        })
    }

    /// Writes the addressed scalar. The scenario is not revalidated here;
    /// callers validate after substitution.
    pub fn set(&self, scenario: &mut Scenario, value: f64) -> Result<()> {
        self.check(scenario)?;
        match *self {
            ParamPath::Param { culture, field } => {
                let p = &mut scenario.cultures[culture].params;
                match field {
                    ParamField::A => p.a = value,
                    ParamField::B => p.b = value,
                    ParamField::D => p.d = value,
                    ParamField::E => p.e = value,
                    ParamField::S0 => p.s0 = value,
                    ParamField::S1 => p.s1 = value,
                    ParamField::H0 => p.h0 = value,
                }
            }
            ParamPath::State { culture, field } => {
                let st = &mut scenario.cultures[culture].initial;
                match field {
                    StateField::D0 => st.d_concepts = value,
                    StateField::SInit => st.s_synthesis = value,
                }
            }
            ParamPath::Coupling { table, row, col } => match table {
                CouplingTable::X => scenario.coupling.x[row][col] = value,
                CouplingTable::Y => scenario.coupling.y[row][col] = value,
            },
        }
        Ok(())
    }

    fn check(&self, scenario: &Scenario) -> Result<()> {
        let n = scenario.culture_count();
        let (k, j) = match *self {
            ParamPath::Param { culture, .. } | ParamPath::State { culture, .. } => (culture, 0),
            ParamPath::Coupling { row, col, .. } => (row, col),
        };
        if k >= n || j >= n {
            return Err(Error::InvalidInput(format!(
                "parameter path {self} out of range for {n} culture(s)"
            )));
        }
        if let ParamPath::Coupling { row, col, .. } = *self {
            if row == col {
                return Err(Error::InvalidInput(
                    "coupling diagonal is not addressable".to_string(),
                ));
            }
        }
        Ok(())
    }
}

impl std::fmt::Display for ParamPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            ParamPath::Param { culture, field } => {
                let name = match field {
                    ParamField::A => "a",
                    ParamField::B => "b",
                    ParamField::D => "d",
                    ParamField::E => "e",
                    ParamField::S0 => "s0",
                    ParamField::S1 => "s1",
                    ParamField::H0 => "h0",
                };
                write!(f, "c{culture}.{name}")
            }
            ParamPath::State { culture, field } => {
                let name = match field {
                    StateField::D0 => "d0",
                    StateField::SInit => "s_init",
                };
                write!(f, "c{culture}.{name}")
            }
            ParamPath::Coupling { table, row, col } => {
                let name = match table {
                    CouplingTable::X => "x",
                    CouplingTable::Y => "y",
                };
                write!(f, "{name}.{row}.{col}")
            }
        }
    }
}

impl std::str::FromStr for ParamPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("unrecognized parameter path '{s}'"));
        let parts: Vec<&str> = s.split('.').collect();
        match parts.as_slice() {
            [key] => ParamPath::culture_field(0, key).ok_or_else(bad),
            [culture, key] => {
                let k = culture
                    .strip_prefix('c')
                    .and_then(|n| n.parse::<usize>().ok())
                    .ok_or_else(bad)?;
                ParamPath::culture_field(k, key).ok_or_else(bad)
            }
            [table, row, col] => {
                let table = match *table {
                    "x" => CouplingTable::X,
                    "y" => CouplingTable::Y,
                    _ => return Err(bad()),
                };
                let row = row.parse::<usize>().map_err(|_| bad())?;
                let col = col.parse::<usize>().map_err(|_| bad())?;
                Ok(ParamPath::Coupling { table, row, col })
            }
            _ => Err(bad()),
        }
    }
}

/// One swept parameter: an addressed scalar and a uniform grid over [lo, hi].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisSpec {
    pub path: ParamPath,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl AxisSpec {
    pub fn validate(&self, scenario: &Scenario) -> Result<()> {
        self.path.get(scenario)?;
        if !self.lo.is_finite() || !self.hi.is_finite() || self.lo > self.hi {
            return Err(Error::InvalidInput(format!(
                "axis {}: lo must be <= hi and finite",
                self.path
            )));
        }
        if self.steps < 1 {
            return Err(Error::InvalidInput(format!(
                "axis {}: steps must be >= 1",
                self.path
            )));
        }
        Ok(())
    }

    /// Grid value at index i (0-based); a single-step axis sits at `lo`.
    pub fn value_at(&self, i: usize) -> f64 {
        if self.steps <= 1 {
            self.lo
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.steps - 1) as f64
        }
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.steps).map(|i| self.value_at(i))
    }
}

/// Grid of regime labels in canonical row-major order (first axis outermost).
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeMap {
    pub axes: Vec<AxisSpec>,
    pub labels: Vec<RegimeLabel>,
}

impl RegimeMap {
    pub fn cell_count(&self) -> usize {
        self.axes.iter().map(|a| a.steps).product()
    }

    /// Axis values for the cell at flat index `i` (row-major).
    pub fn cell_values(&self, i: usize) -> Vec<f64> {
        let mut idx = i;
        let mut out = vec![0.0; self.axes.len()];
        for (k, axis) in self.axes.iter().enumerate().rev() {
            out[k] = axis.value_at(idx % axis.steps);
            idx /= axis.steps;
        }
        out
    }
}

/// Execution and classification options for [`run_sweep`].
#[derive(Debug, Clone, Copy)]
pub struct SweepOptions {
    /// Culture whose trajectory is classified in each cell.
    pub culture: usize,
    /// Evaluate cells concurrently. Output is identical either way.
    pub parallel: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            culture: 0,
            parallel: true,
        }
    }
}

/// Substitutes each grid point into `base`, integrates, classifies, and
/// records the label. Diverging cells are labeled `Divergent`; they never
/// abort the sweep. Cell order is canonical row-major regardless of schedule.
pub fn run_sweep(
    base: &Scenario,
    axes: &[AxisSpec],
    thresholds: &ClassifierThresholds,
    options: &SweepOptions,
) -> Result<RegimeMap> {
    base.validate()?;
    thresholds.validate()?;
    if axes.is_empty() || axes.len() > 2 {
        return Err(Error::InvalidInput("sweep takes 1 or 2 axes".to_string()));
    }
    for axis in axes {
        axis.validate(base)?;
    }
    if options.culture >= base.culture_count() {
        return Err(Error::InvalidInput(format!(
            "culture index {} out of range",
            options.culture
        )));
    }

    let map = RegimeMap {
        axes: axes.to_vec(),
        labels: Vec::new(),
    };
    let cells = map.cell_count();

    // Every substituted scenario must satisfy the model invariants before any
    // integration starts, so a bad grid fails fast and atomically.
    let scenarios: Vec<Scenario> = (0..cells)
        .map(|i| {
            let mut sc = base.clone();
            for (axis, v) in axes.iter().zip(map.cell_values(i)) {
                axis.path.set(&mut sc, v)?;
            }
            sc.validate()
                .map_err(|e| Error::InvalidInput(format!("grid cell {i} is invalid: {e}")))?;
            Ok(sc)
        })
        .collect::<Result<_>>()?;

    let classify_cell = |sc: &Scenario| -> Result<RegimeLabel> {
        let traj = match integrate(sc) {
            Ok(t) => t,
            Err(Error::Divergence { partial, .. }) => *partial,
            Err(e) => return Err(e),
        };
        Ok(classify_regime(&traj, options.culture, thresholds)?.label)
    };

    let labels: Vec<RegimeLabel> = if options.parallel {
        scenarios
            .par_iter()
            .map(classify_cell)
            .collect::<Result<_>>()?
    } else {
        scenarios.iter().map(classify_cell).collect::<Result<_>>()?
    };

    Ok(RegimeMap {
        axes: axes.to_vec(),
        labels,
    })
}

/// Bisects the axis parameter between two endpoints that classify to
/// different labels, until the bracket is no wider than `tol`; returns the
/// midpoint. The lo endpoint keeps its label throughout: the bracket shrinks
/// toward the first label change seen from the lo side.
pub fn trace_regime_boundary(
    base: &Scenario,
    axis: &AxisSpec,
    thresholds: &ClassifierThresholds,
    culture: usize,
    tol: f64,
) -> Result<f64> {
    base.validate()?;
    thresholds.validate()?;
    axis.validate(base)?;
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::InvalidInput("tol must be > 0".to_string()));
    }

    let label_at = |v: f64| -> Result<RegimeLabel> {
        let mut sc = base.clone();
        axis.path.set(&mut sc, v)?;
        sc.validate()?;
        let traj = match integrate(&sc) {
            Ok(t) => t,
            Err(Error::Divergence { partial, .. }) => *partial,
            Err(e) => return Err(e),
        };
        Ok(classify_regime(&traj, culture, thresholds)?.label)
    };

    let mut lo = axis.lo;
    let mut hi = axis.hi;
    let lo_label = label_at(lo)?;
    let hi_label = label_at(hi)?;
    if lo_label == hi_label {
        return Err(Error::NoBoundary(lo_label.to_string()));
    }

    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // bracket at floating-point resolution
        }
        if label_at(mid)? == lo_label {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CultureParams, CultureState, Scenario};

    fn fig1a() -> Scenario {
        Scenario::single(
            CultureParams::new(10.0, 1.0, 10.0, 0.1, 2.0, 10.0, 1.0).unwrap(),
            CultureState::new(10.0, 3.0).unwrap(),
        )
    }

    fn fig1b_family(s_init: f64) -> Scenario {
        Scenario::single(
            CultureParams::new(10.0, 1.0, 10.0, 1.0, 1.0, 10.0, 10.0).unwrap(),
            CultureState::new(3.0, s_init).unwrap(),
        )
    }

    #[test]
    fn param_paths_round_trip_text() {
        for s in ["c0.a", "c1.s_init", "c0.d0", "x.0.1", "y.1.0", "a", "s1"] {
            let path: ParamPath = s.parse().unwrap();
            let canonical = path.to_string();
            let reparsed: ParamPath = canonical.parse().unwrap();
            assert_eq!(path, reparsed);
        }
        assert!("c0.zz".parse::<ParamPath>().is_err());
        assert!("x.0.0".parse::<ParamPath>().is_ok()); // parses, rejected on use
        assert!("nope.a.b.c".parse::<ParamPath>().is_err());
    }

    #[test]
    fn param_path_get_set() {
        let mut sc = fig1a();
        let path: ParamPath = "c0.a".parse().unwrap();
        assert_eq!(path.get(&sc).unwrap(), 10.0);
        path.set(&mut sc, 12.5).unwrap();
        assert_eq!(sc.cultures[0].params.a, 12.5);

        let path: ParamPath = "c0.s_init".parse().unwrap();
        path.set(&mut sc, 7.0).unwrap();
        assert_eq!(sc.cultures[0].initial.s_synthesis, 7.0);

        let path: ParamPath = "x.0.1".parse().unwrap();
        assert!(path.get(&sc).is_err()); // single culture: out of range

        let diag: ParamPath = "x.0.0".parse().unwrap();
        assert!(diag.get(&fig1a()).is_err());
    }

    #[test]
    fn degenerate_grid_matches_direct_classification() {
        let base = fig1a();
        let axis = AxisSpec {
            path: "c0.a".parse().unwrap(),
            lo: 10.0,
            hi: 10.0,
            steps: 1,
        };
        let thresholds = ClassifierThresholds::default();
        let map = run_sweep(&base, &[axis], &thresholds, &SweepOptions::default()).unwrap();
        assert_eq!(map.labels.len(), 1);
        let traj = integrate(&base).unwrap();
        let direct = classify_regime(&traj, 0, &thresholds).unwrap();
        assert_eq!(map.labels[0], direct.label);
    }

    #[test]
    fn s_init_sweep_anchors_oscillatory_endpoint() {
        let base = fig1a();
        let axis = AxisSpec {
            path: "c0.s_init".parse().unwrap(),
            lo: 3.0,
            hi: 50.0,
            steps: 5,
        };
        let map = run_sweep(
            &base,
            &[axis],
            &ClassifierThresholds::default(),
            &SweepOptions::default(),
        )
        .unwrap();
        assert_eq!(map.labels[0], RegimeLabel::ConceptualOscillatory);
    }

    #[test]
    fn sequential_and_parallel_sweeps_agree() {
        let base = fig1a();
        let axes = [
            AxisSpec {
                path: "c0.a".parse().unwrap(),
                lo: 5.0,
                hi: 15.0,
                steps: 5,
            },
            AxisSpec {
                path: "c0.s_init".parse().unwrap(),
                lo: 2.0,
                hi: 42.0,
                steps: 5,
            },
        ];
        let thresholds = ClassifierThresholds::default();
        let seq = run_sweep(
            &base,
            &axes,
            &thresholds,
            &SweepOptions {
                parallel: false,
                ..Default::default()
            },
        )
        .unwrap();
        let par = run_sweep(&base, &axes, &thresholds, &SweepOptions::default()).unwrap();
        assert_eq!(seq, par);
        assert_eq!(seq.cell_count(), 25);
    }

    #[test]
    fn two_axis_map_spans_both_single_culture_regimes() {
        // Around the stagnating family, low initial synthesis oscillates and
        // high initial synthesis stagnates; one map shows both.
        let base = fig1b_family(3.0);
        let axes = [
            AxisSpec {
                path: "c0.a".parse().unwrap(),
                lo: 5.0,
                hi: 15.0,
                steps: 3,
            },
            AxisSpec {
                path: "c0.s_init".parse().unwrap(),
                lo: 3.0,
                hi: 50.0,
                steps: 4,
            },
        ];
        let map = run_sweep(
            &base,
            &axes,
            &ClassifierThresholds::default(),
            &SweepOptions::default(),
        )
        .unwrap();
        assert!(map.labels.contains(&RegimeLabel::ConceptualOscillatory));
        assert!(map.labels.contains(&RegimeLabel::TraditionalStagnating));
    }

    #[test]
    fn divergent_cells_do_not_abort() {
        // a huge `a` with synthesis pinned high diverges
        let mut base = fig1a();
        base.cultures[0].params.s1 = 1e9;
        base.cultures[0].params.d = 100.0;
        base.cultures[0].params.h0 = 100.0;
        base.cultures[0].params.e = 0.0;
        base.cultures[0].params.b = 0.0;
        base.horizon = 1.0;
        let axis = AxisSpec {
            path: "c0.a".parse().unwrap(),
            lo: 0.0,
            hi: 10.0,
            steps: 3,
        };
        let map = run_sweep(
            &base,
            &[axis],
            &ClassifierThresholds::default(),
            &SweepOptions::default(),
        )
        .unwrap();
        assert_eq!(map.labels.len(), 3);
        assert!(map.labels.contains(&RegimeLabel::Divergent));
    }

    #[test]
    fn invalid_grid_cell_fails_fast() {
        let base = fig1a();
        let axis = AxisSpec {
            path: "c0.s1".parse().unwrap(),
            lo: -1.0,
            hi: 1.0,
            steps: 3,
        };
        assert!(run_sweep(
            &base,
            &[axis],
            &ClassifierThresholds::default(),
            &SweepOptions::default()
        )
        .is_err());
    }

    #[test]
    fn boundary_requires_distinct_endpoint_labels() {
        let axis = AxisSpec {
            path: "c0.s_init".parse().unwrap(),
            lo: 45.0,
            hi: 50.0,
            steps: 2,
        };
        let err = trace_regime_boundary(
            &fig1b_family(50.0),
            &axis,
            &ClassifierThresholds::default(),
            0,
            0.1,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NoBoundary(_)));
    }

    #[test]
    fn boundary_with_wide_tolerance_returns_midpoint() {
        let axis = AxisSpec {
            path: "c0.s_init".parse().unwrap(),
            lo: 3.0,
            hi: 50.0,
            steps: 2,
        };
        let b = trace_regime_boundary(
            &fig1b_family(3.0),
            &axis,
            &ClassifierThresholds::default(),
            0,
            47.0,
        )
        .unwrap();
        assert_eq!(b, 0.5 * (3.0 + 50.0));
    }

    #[test]
    fn boundary_separates_oscillatory_from_stagnating() {
        let base = fig1b_family(3.0);
        let axis = AxisSpec {
            path: "c0.s_init".parse().unwrap(),
            lo: 3.0,
            hi: 50.0,
            steps: 2,
        };
        let thresholds = ClassifierThresholds::default();
        let tol = 0.5;
        let boundary = trace_regime_boundary(&base, &axis, &thresholds, 0, tol).unwrap();
        assert!(boundary > 3.0 && boundary < 50.0);

        // labels differ across boundary +/- tol
        let label_at = |v: f64| {
            let mut sc = base.clone();
            axis.path.set(&mut sc, v).unwrap();
            let traj = integrate(&sc).unwrap();
            classify_regime(&traj, 0, &thresholds).unwrap().label
        };
        assert_ne!(label_at(boundary - tol), label_at(boundary + tol));
        assert_eq!(label_at(boundary - tol), RegimeLabel::ConceptualOscillatory);
    }
}
