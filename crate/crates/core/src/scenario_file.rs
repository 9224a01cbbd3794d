//! Line-oriented scenario documents.
//!
//! ```text
//! # one culture, default integration grid
//! [culture 0]
//! a = 10
//! b = 1
//! d = 10
//! e = 0.1
//! s0 = 2
//! s1 = 10
//! h0 = 1
//! d0 = 10
//! s_init = 3
//!
//! [coupling]
//! x.0.1 = 0.5      # only for multi-culture scenarios
//!
//! [integration]
//! horizon = 10
//! dt = 0.001
//! sample_every = 0.01
//! ```
//!
//! Sections hold `key = value` pairs; `#` starts a comment. Every culture key
//! is required; `[coupling]` and `[integration]` are optional (zero coupling
//! and default grid). Unknown keys are rejected, as are duplicate ones.
//! Parsing a serialized scenario reproduces it exactly.

use std::collections::BTreeMap;

use crate::analysis::ClassifierThresholds;
use crate::error::{Error, Result};
use crate::model::{
    CouplingMatrices, CultureParams, CultureSetup, CultureState, Scenario, DEFAULT_DT,
    DEFAULT_HORIZON, DEFAULT_SAMPLE_EVERY,
};

const CULTURE_KEYS: [&str; 9] = ["a", "b", "d", "e", "s0", "s1", "h0", "d0", "s_init"];
const INTEGRATION_KEYS: [&str; 3] = ["horizon", "dt", "sample_every"];

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_number(line: usize, key: &str, raw: &str) -> Result<f64> {
    let v: f64 = raw
        .parse()
        .map_err(|_| parse_err(line, format!("{key}: not a decimal number: '{raw}'")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("{key}: must be finite")));
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Culture(usize),
    Coupling,
    Integration,
}

/// Parses a scenario document, applying defaults for omitted integration
/// settings, and validates the result.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut cultures: BTreeMap<usize, BTreeMap<String, (usize, f64)>> = BTreeMap::new();
    let mut coupling_entries: Vec<(usize, String, f64)> = Vec::new();
    let mut integration: BTreeMap<String, (usize, f64)> = BTreeMap::new();
    let mut section = Section::None;

    for (i, raw_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }

        if let Some(header) = line.strip_prefix('[') {
            let header = header
                .strip_suffix(']')
                .ok_or_else(|| parse_err(line_no, "unterminated section header"))?
                .trim();
            section = if header == "coupling" {
                Section::Coupling
            } else if header == "integration" {
                Section::Integration
            } else if let Some(idx) = header.strip_prefix("culture") {
                let k: usize = idx
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(line_no, format!("bad culture index in [{header}]")))?;
                if cultures.contains_key(&k) {
                    return Err(parse_err(
                        line_no,
                        format!("duplicate section [culture {k}]"),
                    ));
                }
                cultures.insert(k, BTreeMap::new());
                Section::Culture(k)
            } else {
                return Err(parse_err(line_no, format!("unknown section [{header}]")));
            };
            continue;
        }

        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(line_no, "expected 'key = value'"))?;
        let key = key.trim();
        let value = value.trim();

        match section {
            Section::None => {
                return Err(parse_err(line_no, "key outside of any section"));
            }
            Section::Culture(k) => {
                if !CULTURE_KEYS.contains(&key) {
                    return Err(parse_err(line_no, format!("unknown key '{key}'")));
                }
                let v = parse_number(line_no, key, value)?;
                let fields = cultures.get_mut(&k).expect("section was inserted");
                if fields.insert(key.to_string(), (line_no, v)).is_some() {
                    return Err(parse_err(line_no, format!("duplicate key '{key}'")));
                }
            }
            Section::Coupling => {
                let mut parts = key.split('.');
                let table = parts.next().unwrap_or_default();
                if !(table == "x" || table == "y")
                    || parts.clone().count() != 2
                    || parts.clone().any(|p| p.parse::<usize>().is_err())
                {
                    return Err(parse_err(line_no, format!("unknown key '{key}'")));
                }
                let v = parse_number(line_no, key, value)?;
                if coupling_entries.iter().any(|(_, k2, _)| k2 == key) {
                    return Err(parse_err(line_no, format!("duplicate key '{key}'")));
                }
                coupling_entries.push((line_no, key.to_string(), v));
            }
            Section::Integration => {
                if !INTEGRATION_KEYS.contains(&key) {
                    return Err(parse_err(line_no, format!("unknown key '{key}'")));
                }
                let v = parse_number(line_no, key, value)?;
                if integration.insert(key.to_string(), (line_no, v)).is_some() {
                    return Err(parse_err(line_no, format!("duplicate key '{key}'")));
                }
            }
        }
    }

    if cultures.is_empty() {
        return Err(Error::invalid_field("cultures", "must be non-empty"));
    }
    let n = cultures.len();
    for (expected, &k) in cultures.keys().enumerate() {
        if k != expected {
            return Err(Error::invalid_field(
                "cultures",
                format!(
                    "culture sections must cover 0..{}, found [culture {k}]",
                    n - 1
                ),
            ));
        }
    }

    let mut setups = Vec::with_capacity(n);
    for (k, fields) in &cultures {
        for key in CULTURE_KEYS {
            if !fields.contains_key(key) {
                return Err(Error::invalid_field(
                    key,
                    format!("missing from [culture {k}]"),
                ));
            }
        }
        let get = |key: &str| fields[key].1;
        setups.push(CultureSetup {
            params: CultureParams {
                a: get("a"),
                b: get("b"),
                d: get("d"),
                e: get("e"),
                s0: get("s0"),
                s1: get("s1"),
                h0: get("h0"),
            },
            initial: CultureState {
                d_concepts: get("d0"),
                s_synthesis: get("s_init"),
            },
        });
    }

    let mut coupling = CouplingMatrices::zero(n);
    for (line_no, key, v) in coupling_entries {
        let parts: Vec<&str> = key.split('.').collect();
        let row: usize = parts[1].parse().expect("checked during scan");
        let col: usize = parts[2].parse().expect("checked during scan");
        if row >= n || col >= n {
            return Err(parse_err(
                line_no,
                format!("{key}: culture index out of range (have {n})"),
            ));
        }
        match parts[0] {
            "x" => coupling.x[row][col] = v,
            _ => coupling.y[row][col] = v,
        }
    }

    let setting =
        |key: &str, default: f64| integration.get(key).map(|&(_, v)| v).unwrap_or(default);
    let scenario = Scenario {
        cultures: setups,
        coupling,
        horizon: setting("horizon", DEFAULT_HORIZON),
        dt: setting("dt", DEFAULT_DT),
        sample_every: setting("sample_every", DEFAULT_SAMPLE_EVERY),
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Canonical text form; parsing it reproduces the scenario exactly.
pub fn serialize_scenario(scenario: &Scenario) -> String {
    let mut out = String::new();
    for (k, setup) in scenario.cultures.iter().enumerate() {
        if k > 0 {
            out.push('\n');
        }
        out.push_str(&format!("[culture {k}]\n"));
        let p = &setup.params;
        for (key, v) in [
            ("a", p.a),
            ("b", p.b),
            ("d", p.d),
            ("e", p.e),
            ("s0", p.s0),
            ("s1", p.s1),
            ("h0", p.h0),
            ("d0", setup.initial.d_concepts),
            ("s_init", setup.initial.s_synthesis),
        ] {
            out.push_str(&format!("{key} = {v}\n"));
        }
    }

    let mut coupling_lines = String::new();
    for (name, table) in [("x", &scenario.coupling.x), ("y", &scenario.coupling.y)] {
        for (row, entries) in table.iter().enumerate() {
            for (col, &v) in entries.iter().enumerate() {
                if v != 0.0 {
                    coupling_lines.push_str(&format!("{name}.{row}.{col} = {v}\n"));
                }
            }
        }
    }
    if !coupling_lines.is_empty() {
        out.push_str("\n[coupling]\n");
        out.push_str(&coupling_lines);
    }

    out.push_str(&format!(
        "\n[integration]\nhorizon = {}\ndt = {}\nsample_every = {}\n",
        scenario.horizon, scenario.dt, scenario.sample_every
    ));
    out
}

/// Flat `key = value` document overriding classifier threshold defaults.
/// Keys: min_oscillations, amp_oscillatory, amp_subsided, plateau_tol,
/// late_window_fraction, early_window, min_prominence.
pub fn parse_thresholds(text: &str) -> Result<ClassifierThresholds> {
    let mut t = ClassifierThresholds::default();
    let mut seen: Vec<String> = Vec::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(line_no, "expected 'key = value'"))?;
        let key = key.trim();
        let value = value.trim();
        if seen.iter().any(|k| k == key) {
            return Err(parse_err(line_no, format!("duplicate key '{key}'")));
        }
        seen.push(key.to_string());
        match key {
            "min_oscillations" => {
                t.min_oscillations = value
                    .parse()
                    .map_err(|_| parse_err(line_no, "min_oscillations: not a count"))?;
            }
            "amp_oscillatory" => t.amp_oscillatory = parse_number(line_no, key, value)?,
            "amp_subsided" => t.amp_subsided = parse_number(line_no, key, value)?,
            "plateau_tol" => t.plateau_tol = parse_number(line_no, key, value)?,
            "late_window_fraction" => t.late_window_fraction = parse_number(line_no, key, value)?,
            "early_window" => t.early_window = parse_number(line_no, key, value)?,
            "min_prominence" => t.min_prominence = parse_number(line_no, key, value)?,
            _ => return Err(parse_err(line_no, format!("unknown key '{key}'"))),
        }
    }
    t.validate()?;
    Ok(t)
}
