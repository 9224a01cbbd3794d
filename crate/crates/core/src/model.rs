//! Domain types and right-hand side of the differentiation–synthesis system.
//!
//! Each culture carries a differentiation level `D` (number of concepts) and a
//! synthesis level `S`, evolving as
//!
//! ```text
//! dD/dt = a * D * G(S) + sum_j x[k][j] * D_j
//! dS/dt = -b * D + d * H(t) + sum_j y[k][j] * S_j
//! G(S)  = (S - S0) * exp(-(S - S0) / S1)
//! H(t)  = H0 + e * t
//! ```
//!
//! The hierarchy level `H` is a prescribed function of time, never integrated.
//! Coupling sums read the *other* cultures' raw `D` and `S` (row = receiver).

use crate::error::{Error, Result};

/// Per-culture coefficients. Time and parameter units are arbitrary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CultureParams {
    /// Growth-rate coefficient (1/time).
    pub a: f64,
    /// Synthesis-depletion coefficient (1/time per concept).
    pub b: f64,
    /// Hierarchy-support coefficient (synthesis/time per level).
    pub d: f64,
    /// Hierarchy growth rate (levels/time).
    pub e: f64,
    /// Synthesis threshold: G is negative below it.
    pub s0: f64,
    /// Synthesis scale of the exponential decay; must be positive.
    pub s1: f64,
    /// Initial hierarchy level.
    pub h0: f64,
}

impl CultureParams {
    pub fn new(a: f64, b: f64, d: f64, e: f64, s0: f64, s1: f64, h0: f64) -> Result<Self> {
        let p = CultureParams {
            a,
            b,
            d,
            e,
            s0,
            s1,
            h0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("a", self.a),
            ("b", self.b),
            ("d", self.d),
            ("e", self.e),
            ("s0", self.s0),
            ("s1", self.s1),
            ("h0", self.h0),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid_field(name, "must be finite"));
            }
        }
        if self.s1 <= 0.0 {
            return Err(Error::invalid_field("s1", "must be > 0"));
        }
        for (name, v) in [("a", self.a), ("b", self.b), ("d", self.d), ("e", self.e)] {
            if v < 0.0 {
                return Err(Error::invalid_field(name, "must be >= 0"));
            }
        }
        Ok(())
    }
}

/// Instantaneous state of one culture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CultureState {
    /// Number of concepts; nonnegative at all times.
    pub d_concepts: f64,
    /// Synthesis level; unrestricted in sign.
    pub s_synthesis: f64,
}

impl CultureState {
    pub fn new(d_concepts: f64, s_synthesis: f64) -> Result<Self> {
        let s = CultureState {
            d_concepts,
            s_synthesis,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.d_concepts.is_finite() || !self.s_synthesis.is_finite() {
            return Err(Error::NonFiniteInput("culture state".to_string()));
        }
        if self.d_concepts < 0.0 {
            return Err(Error::invalid_field("d0", "must be >= 0"));
        }
        Ok(())
    }
}

/// Exchange coefficients between cultures; `x[k][j]` feeds culture j's D into
/// culture k's dD/dt, `y[k][j]` feeds S likewise. Diagonals are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrices {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
}

impl CouplingMatrices {
    pub fn zero(n: usize) -> Self {
        CouplingMatrices {
            x: vec![vec![0.0; n]; n],
            y: vec![vec![0.0; n]; n],
        }
    }

    /// Symmetric two-culture exchange with uniform rates.
    pub fn symmetric_pair(x: f64, y: f64) -> Self {
        CouplingMatrices {
            x: vec![vec![0.0, x], vec![x, 0.0]],
            y: vec![vec![0.0, y], vec![y, 0.0]],
        }
    }

    pub fn validate(&self, cultures: usize) -> Result<()> {
        for (name, table) in [("x", &self.x), ("y", &self.y)] {
            if table.len() != cultures {
                return Err(Error::DimensionMismatch {
                    expected: cultures,
                    got: table.len(),
                });
            }
            for (k, row) in table.iter().enumerate() {
                if row.len() != cultures {
                    return Err(Error::DimensionMismatch {
                        expected: cultures,
                        got: row.len(),
                    });
                }
                for (j, &v) in row.iter().enumerate() {
                    if !v.is_finite() || v < 0.0 {
                        return Err(Error::invalid_field(
                            &format!("{name}.{k}.{j}"),
                            "must be finite and >= 0",
                        ));
                    }
                    if k == j && v != 0.0 {
                        return Err(Error::invalid_field(
                            &format!("{name}.{k}.{j}"),
                            "diagonal entries must be zero",
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// One culture's parameters plus its initial state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CultureSetup {
    pub params: CultureParams,
    pub initial: CultureState,
}

/// A full simulation description: cultures, coupling, and integration grid.
///
/// `sample_every` must be an integer multiple of `dt`, and `horizon` an
/// integer multiple of `sample_every`, so the sample grid lands exactly on
/// integration steps and ends at the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub cultures: Vec<CultureSetup>,
    pub coupling: CouplingMatrices,
    pub horizon: f64,
    pub dt: f64,
    pub sample_every: f64,
}

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_SAMPLE_EVERY: f64 = 1e-2;
pub const DEFAULT_HORIZON: f64 = 10.0;

impl Scenario {
    /// Single-culture scenario with zero coupling and default grid settings.
    pub fn single(params: CultureParams, initial: CultureState) -> Self {
        Scenario {
            cultures: vec![CultureSetup { params, initial }],
            coupling: CouplingMatrices::zero(1),
            horizon: DEFAULT_HORIZON,
            dt: DEFAULT_DT,
            sample_every: DEFAULT_SAMPLE_EVERY,
        }
    }

    pub fn culture_count(&self) -> usize {
        self.cultures.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.cultures.is_empty() {
            return Err(Error::invalid_field("cultures", "must be non-empty"));
        }
        for setup in &self.cultures {
            setup.params.validate()?;
            setup.initial.validate()?;
        }
        self.coupling.validate(self.cultures.len())?;
        if !self.horizon.is_finite() || self.horizon < 0.0 {
            return Err(Error::invalid_field("horizon", "must be finite and >= 0"));
        }
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(Error::invalid_field("dt", "must be finite and > 0"));
        }
        if !self.sample_every.is_finite() || self.sample_every < self.dt {
            return Err(Error::invalid_field("sample_every", "must be >= dt"));
        }
        if near_multiple(self.sample_every, self.dt).is_none() {
            return Err(Error::invalid_field(
                "sample_every",
                "must be an integer multiple of dt",
            ));
        }
        if near_multiple(self.horizon, self.sample_every).is_none() {
            return Err(Error::invalid_field(
                "horizon",
                "must be an integer multiple of sample_every",
            ));
        }
        Ok(())
    }

    /// Integration steps per output sample.
    pub(crate) fn sample_stride(&self) -> u64 {
        near_multiple(self.sample_every, self.dt).expect("validated scenario")
    }

    /// Number of output samples, including t = 0.
    pub(crate) fn sample_count(&self) -> u64 {
        near_multiple(self.horizon, self.sample_every).expect("validated scenario") + 1
    }
}

/// Rounds `value / unit` to the nearest integer and accepts it when the
/// product reconstructs `value` to within a relative 1e-9.
fn near_multiple(value: f64, unit: f64) -> Option<u64> {
    if unit <= 0.0 || value < 0.0 {
        return None;
    }
    let ratio = value / unit;
    let k = ratio.round();
    if k > 1e15 {
        return None;
    }
    let tol = 1e-9 * ratio.abs().max(1.0);
    if (ratio - k).abs() <= tol {
        Some(k as u64)
    } else {
        None
    }
}

/// Time derivatives of every culture's (D, S).
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeVector {
    pub rates: Vec<CultureRates>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CultureRates {
    pub dd_dt: f64,
    pub ds_dt: f64,
}

/// G(S) = (S - S0) exp(-(S - S0)/S1): negative below S0, maximal at S0 + S1,
/// decaying for higher synthesis.
pub fn eval_growth_factor(s: f64, params: &CultureParams) -> Result<f64> {
    if !s.is_finite() {
        return Err(Error::NonFiniteInput(format!("s = {s}")));
    }
    Ok(growth_factor(s, params.s0, params.s1))
}

#[inline]
pub(crate) fn growth_factor(s: f64, s0: f64, s1: f64) -> f64 {
    let u = s - s0;
    u * (-u / s1).exp()
}

/// H(t) = H0 + e*t. The hierarchy is exogenous: a prescribed function of
/// time, not an integrated state.
pub fn hierarchy_level(params: &CultureParams, t: f64) -> Result<f64> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::TimeBeforeOrigin(t));
    }
    Ok(params.h0 + params.e * t)
}

/// Evaluates the coupled system's right-hand side at time `t`.
///
/// With one culture and zero coupling this reduces to the uncoupled system
/// term by term.
pub fn eval_derivatives(
    states: &[CultureState],
    scenario: &Scenario,
    t: f64,
) -> Result<DerivativeVector> {
    let n = scenario.culture_count();
    if states.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: states.len(),
        });
    }
    for st in states {
        if !st.d_concepts.is_finite() || !st.s_synthesis.is_finite() {
            return Err(Error::NonFiniteInput("culture state".to_string()));
        }
    }
    if !t.is_finite() || t < 0.0 {
        return Err(Error::TimeBeforeOrigin(t));
    }

    let mut flat = Vec::with_capacity(2 * n);
    for st in states {
        flat.push(st.d_concepts);
        flat.push(st.s_synthesis);
    }
    let mut out = vec![0.0; 2 * n];
    eval_derivatives_flat(&flat, scenario, t, &mut out);
    Ok(DerivativeVector {
        rates: (0..n)
            .map(|k| CultureRates {
                dd_dt: out[2 * k],
                ds_dt: out[2 * k + 1],
            })
            .collect(),
    })
}

/// Hot-path variant over the flat state layout `[D0, S0, D1, S1, ...]`.
/// Assumes a validated scenario and matching lengths.
pub(crate) fn eval_derivatives_flat(state: &[f64], scenario: &Scenario, t: f64, out: &mut [f64]) {
    let n = scenario.cultures.len();
    debug_assert_eq!(state.len(), 2 * n);
    debug_assert_eq!(out.len(), 2 * n);
    for (k, setup) in scenario.cultures.iter().enumerate() {
        let p = &setup.params;
        let d_k = state[2 * k];
        let s_k = state[2 * k + 1];
        let h = p.h0 + p.e * t;
        let mut dd = p.a * d_k * growth_factor(s_k, p.s0, p.s1);
        let mut ds = -p.b * d_k + p.d * h;
        let xrow = &scenario.coupling.x[k];
        let yrow = &scenario.coupling.y[k];
        for j in 0..n {
            if j != k {
                dd += xrow[j] * state[2 * j];
                ds += yrow[j] * state[2 * j + 1];
            }
        }
        out[2 * k] = dd;
        out[2 * k + 1] = ds;
    }
}
