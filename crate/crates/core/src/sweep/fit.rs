//! Simulation-based least-squares coefficient recovery.
//!
//! Minimizes the RMS mismatch between an observed trajectory and simulations
//! of a template scenario over a chosen set of free parameters, using
//! derivative-free Nelder–Mead simplex search. The objective is evaluated on
//! a progressively growing prefix of the observed series (1/16, 1/8, 1/4,
//! 1/2, then all of it), warm-starting each stage from the previous best
//! point: short prefixes keep the oscillatory objective's basin wide enough
//! to descend from a perturbed start, and the final stage scores the full
//! series.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::integrator::{integrate, TrajectorySet};
use crate::model::Scenario;
use crate::sweep::ParamPath;

/// Penalty residual for trial points whose simulation diverges or whose
/// parameters violate the model invariants.
const PENALTY: f64 = 1e12;
/// Relative simplex size below which a stage has converged.
const SIMPLEX_TOL: f64 = 1e-8;
/// Total iteration budget across all stages.
const MAX_ITERATIONS: usize = 2000;
/// Observed-series prefix fractions, coarsest first.
const STAGE_FRACTIONS: [f64; 5] = [1.0 / 16.0, 1.0 / 8.0, 1.0 / 4.0, 1.0 / 2.0, 1.0];

/// Outcome of [`fit_parameters`]: the template with fitted values substituted,
/// plus the fit diagnostics.
#[derive(Debug, Clone)]
pub struct FitResult {
    /// Template scenario with the fitted values written into the free paths.
    pub scenario: Scenario,
    /// Fitted value per free path, in input order.
    pub values: Vec<f64>,
    /// RMS mismatch of the normalized (D, S) series at the fitted point.
    pub residual: f64,
    /// Nelder–Mead iterations consumed (all stages).
    pub iterations: usize,
    /// Whether the final stage met the simplex-size criterion.
    pub converged: bool,
}

struct Objective<'a> {
    template: &'a Scenario,
    free: &'a [ParamPath],
    observed: &'a TrajectorySet,
    /// Per-culture (D, S) normalization: the observed series' sup norms.
    norms: Vec<(f64, f64)>,
}

impl Objective<'_> {
    /// RMS of normalized (D, S) mismatch over the first `count` samples.
    fn eval(&self, xs: &[f64], count: usize) -> f64 {
        let mut sc = self.template.clone();
        for (path, &v) in self.free.iter().zip(xs) {
            if path.set(&mut sc, v).is_err() {
                return PENALTY;
            }
        }
        sc.horizon = (count - 1) as f64 * sc.sample_every;
        if sc.validate().is_err() {
            return PENALTY;
        }
        let traj = match integrate(&sc) {
            Ok(t) => t,
            Err(_) => return PENALTY,
        };
        if traj.sample_count() < count {
            return PENALTY;
        }
        let mut sum = 0.0;
        let mut terms = 0usize;
        for (k, series) in traj.cultures.iter().enumerate() {
            let obs = &self.observed.cultures[k];
            let (nd, ns) = self.norms[k];
            for i in 0..count {
                let rd = (series.d[i] - obs.d[i]) / nd;
                let rs = (series.s[i] - obs.s[i]) / ns;
                sum += rd * rd + rs * rs;
                terms += 2;
            }
        }
        (sum / terms as f64).sqrt()
    }
}

/// Fits the free parameters of `template` so its simulation reproduces
/// `observed`. The observed trajectory must share the template's sampling
/// grid. The initial simplex is built deterministically from the template
/// values and `seed`; trial points with invalid parameters or diverging
/// simulations score a large penalty instead of aborting.
pub fn fit_parameters(
    observed: &TrajectorySet,
    template: &Scenario,
    free: &[ParamPath],
    seed: u64,
) -> Result<FitResult> {
    template.validate()?;
    if free.is_empty() {
        return Err(Error::InvalidInput(
            "free parameter set must be non-empty".to_string(),
        ));
    }
    for path in free {
        path.get(template)?;
    }
    if observed.culture_count() != template.culture_count() {
        return Err(Error::DimensionMismatch {
            expected: template.culture_count(),
            got: observed.culture_count(),
        });
    }
    let expected_samples = template.sample_count() as usize;
    if observed.sample_count() != expected_samples {
        return Err(Error::InvalidInput(format!(
            "observed trajectory has {} samples, template grid has {}",
            observed.sample_count(),
            expected_samples
        )));
    }
    for (i, &t) in observed.times.iter().enumerate() {
        let expected = i as f64 * template.sample_every;
        if (t - expected).abs() > 1e-9 * expected.abs().max(1.0) {
            return Err(Error::InvalidInput(
                "observed sampling grid does not match the template".to_string(),
            ));
        }
    }

    let norms = observed
        .cultures
        .iter()
        .map(|c| {
            let nd = c.d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let ns = c.s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            (nd.max(1e-300), ns.max(1e-300))
        })
        .collect();

    let objective = Objective {
        template,
        free,
        observed,
        norms,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Vec<f64> = free
        .iter()
        .map(|p| p.get(template).expect("path checked above"))
        .collect();

    let n = observed.sample_count();
    let mut counts: Vec<usize> = STAGE_FRACTIONS
        .iter()
        .map(|f| (((n - 1) as f64 * f).round() as usize + 1).max(3).min(n))
        .collect();
    counts.dedup();

    let budget_per_stage = MAX_ITERATIONS / counts.len();
    let mut iterations = 0;
    let mut converged = false;
    for &count in &counts {
        let (x, _fx, used, stage_converged) = nelder_mead(
            |xs| objective.eval(xs, count),
            &best,
            budget_per_stage,
            &mut rng,
        );
        best = x;
        iterations += used;
        converged = stage_converged;
    }

    let residual = objective.eval(&best, n);
    let mut fitted = template.clone();
    for (path, &v) in free.iter().zip(&best) {
        path.set(&mut fitted, v)?;
    }
    fitted.validate()?;
    Ok(FitResult {
        scenario: fitted,
        values: best,
        residual,
        iterations,
        converged,
    })
}

/// Standard Nelder–Mead (reflection 1, expansion 2, contraction 0.5, shrink
/// 0.5) from a simplex around `x0` with ~5% jittered steps. Returns the best
/// point, its value, iterations used, and whether the simplex-size criterion
/// was met.
fn nelder_mead<F>(
    f: F,
    x0: &[f64],
    max_iterations: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<f64>, f64, usize, bool)
where
    F: Fn(&[f64]) -> f64,
{
    let dim = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..dim {
        let mut v = x0.to_vec();
        let jitter: f64 = 0.75 + 0.5 * rng.gen::<f64>();
        let step = if v[i].abs() > 1e-12 {
            0.05 * v[i].abs()
        } else {
            0.05
        };
        v[i] += step * jitter;
        let fv = f(&v);
        simplex.push((v, fv));
    }

    let sort = |s: &mut Vec<(Vec<f64>, f64)>| {
        s.sort_by(|a, b| a.1.total_cmp(&b.1));
    };
    sort(&mut simplex);

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iterations {
        let size = simplex_size(&simplex);
        if size < SIMPLEX_TOL {
            converged = true;
            break;
        }
        iterations += 1;

        // Centroid of all but the worst vertex.
        let mut centroid = vec![0.0; dim];
        for (v, _) in &simplex[..dim] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / dim as f64;
            }
        }
        let worst = simplex[dim].clone();
        let second_worst = simplex[dim - 1].1;
        let best_val = simplex[0].1;

        let blend = |alpha: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + alpha * (c - w))
                .collect()
        };

        let reflected = blend(1.0);
        let f_reflected = f(&reflected);
        if f_reflected < best_val {
            let expanded = blend(2.0);
            let f_expanded = f(&expanded);
            if f_expanded < f_reflected {
                simplex[dim] = (expanded, f_expanded);
            } else {
                simplex[dim] = (reflected, f_reflected);
            }
        } else if f_reflected < second_worst {
            simplex[dim] = (reflected, f_reflected);
        } else {
            let contracted = if f_reflected < worst.1 {
                blend(0.5) // outside
            } else {
                blend(-0.5) // inside
            };
            let f_contracted = f(&contracted);
            if f_contracted < worst.1.min(f_reflected) {
                simplex[dim] = (contracted, f_contracted);
            } else {
                // Shrink toward the best vertex.
                let best_point = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    for (x, b) in entry.0.iter_mut().zip(&best_point) {
                        *x = b + 0.5 * (*x - b);
                    }
                    entry.1 = f(&entry.0);
                }
            }
        }
        sort(&mut simplex);
    }

    let (x, fx) = simplex.swap_remove(0);
    (x, fx, iterations, converged)
}

/// Max infinity-norm distance from the best vertex, relative to its scale.
fn simplex_size(simplex: &[(Vec<f64>, f64)]) -> f64 {
    let best = &simplex[0].0;
    let scale = best.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    simplex[1..]
        .iter()
        .map(|(v, _)| {
            v.iter()
                .zip(best)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max)
        })
        .fold(0.0f64, f64::max)
        / scale
}
