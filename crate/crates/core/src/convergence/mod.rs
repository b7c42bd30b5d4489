//! Monte-Carlo strong-convergence experiments.
//!
//! For each realization a fine Wiener path is drawn from its own stream,
//! aggregated onto every level of the step-size ladder, integrated, and the
//! final state compared with the closed-form solution at `W(t_end)`. Per-level
//! RMS errors are fitted by least squares in log-log space.
//!
//! Realizations are independent work units. Results are gathered in
//! realization order and reduced sequentially, so the report does not depend
//! on the number of worker threads.

mod report;

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SdeError};
use crate::problems::{Interpretation, SdeProblem};
use crate::rng::{Channel, RngStream};
use crate::steppers::{integrate_final, SchemeId, SignSequence};
use crate::wiener::{TimeGrid, WienerPath};

/// Step count of the coarsest level in a generated ladder (`h = 2^-4` on `[0, 1]`).
pub const COARSEST_STEPS: usize = 16;

/// Levels whose RMS error falls below `NOISE_FLOOR_ULPS * eps * max(1, |X|)`
/// are left out of slope fits.
pub const NOISE_FLOOR_ULPS: f64 = 1e3;

/// A level with more than this fraction of aborted realizations fails the run.
pub const MAX_ABORT_FRACTION: f64 = 0.01;

/// How signs are chosen for the stochastic Heun scheme on each level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignPolicy {
    /// Fresh Rademacher signs per level from `(seed, realization, Signs, steps)`.
    Independent,
    /// Experimental: `S_k = sign(second half - first half)` of the step's
    /// increment on the next finer level. Falls back to `Independent` on the
    /// finest grid.
    Bridge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem_id: String,
    pub scheme: SchemeId,
    pub n_fine: usize,
    /// Coarsening factors applied to the fine grid, ascending.
    pub levels: Vec<usize>,
    pub realizations: usize,
    pub master_seed: u64,
    pub t0: f64,
    pub t_end: f64,
    pub sign_policy: SignPolicy,
}

impl ExperimentConfig {
    /// Defaults: `n_fine = 2^14`, nine levels `h = 2^-4 .. 2^-12`, 400 realizations, seed 42.
    pub fn new(problem_id: impl Into<String>, scheme: SchemeId) -> Self {
        let n_fine = 1 << 14;
        Self {
            problem_id: problem_id.into(),
            scheme,
            n_fine,
            levels: ladder(n_fine, 9).expect("default ladder is valid"),
            realizations: 400,
            master_seed: 42,
            t0: 0.0,
            t_end: 1.0,
            sign_policy: SignPolicy::Independent,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SdeError::Config(msg));
        if !self.n_fine.is_power_of_two() {
            return bad(format!("n_fine = {} is not a power of two", self.n_fine));
        }
        if self.levels.is_empty() {
            return bad("no levels".into());
        }
        for &f in &self.levels {
            if !f.is_power_of_two() || self.n_fine % f != 0 {
                return bad(format!("factor {f} is not a power of two dividing {}", self.n_fine));
            }
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("factors {:?} are not strictly ascending", self.levels));
        }
        if self.realizations < 2 {
            return bad(format!("need at least 2 realizations, got {}", self.realizations));
        }
        TimeGrid::new(self.t0, self.t_end, self.n_fine)?;
        Ok(())
    }

    pub fn fine_grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.t0, self.t_end, self.n_fine)
    }
}

/// Coarsening factors for `count` levels with `16, 32, ...` steps, ascending.
pub fn ladder(n_fine: usize, count: usize) -> Result<Vec<usize>> {
    if count == 0 {
        return Err(SdeError::Config("ladder needs at least one level".into()));
    }
    let finest = COARSEST_STEPS
        .checked_shl(count as u32 - 1)
        .filter(|&s| s <= n_fine && n_fine % s == 0)
        .ok_or_else(|| {
            SdeError::Config(format!(
                "{count} levels starting at {COARSEST_STEPS} steps do not fit a fine grid of {n_fine}"
            ))
        })?;
    let mut factors: Vec<usize> = (0..count).map(|j| n_fine / (finest >> j)).collect();
    factors.sort_unstable();
    Ok(factors)
}

/// Factors for explicit per-level step counts.
pub fn factors_for_steps(n_fine: usize, steps: &[usize]) -> Result<Vec<usize>> {
    let mut factors = steps
        .iter()
        .map(|&s| {
            if s == 0 || n_fine % s != 0 {
                Err(SdeError::Aggregation { n: n_fine, factor: s })
            } else {
                Ok(n_fine / s)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    factors.sort_unstable();
    factors.dedup();
    Ok(factors)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
}

/// Least-squares line through `(ln h, ln rms)`. Points with non-positive or
/// non-finite values are dropped first.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(h, e)| *h > 0.0 && *e > 0.0 && h.is_finite() && e.is_finite())
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    let n = logs.len() as f64;
    if logs.len() < 2 {
        return Err(SdeError::UndefinedSlope { usable: logs.len() });
    }
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    if sxx == 0.0 {
        return Err(SdeError::UndefinedSlope { usable: 1 });
    }
    let slope = sxy / sxx;
    Ok(SlopeFit {
        slope,
        intercept: mean_y - slope * mean_x,
    })
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Outcome of one realization on one level.
#[derive(Debug, Clone, Copy)]
struct Sample {
    /// `None` when the realization aborted on a non-finite value.
    error: Option<f64>,
    exact_norm: f64,
    clamps: u64,
}

fn level_sample(
    problem: &SdeProblem,
    scheme: SchemeId,
    fine: &WienerPath,
    factor: usize,
    signs: SignSequence,
) -> Result<Sample> {
    let exact = problem
        .exact_solution(fine.grid().t_end(), fine.total_displacement())
        .ok_or_else(|| SdeError::Capability("problem has no exact solution".into()))?;
    let exact_norm = exact.iter().map(|x| x * x).sum::<f64>().sqrt();
    let coarse = fine.coarsen(factor)?;
    match integrate_final(problem, &coarse, scheme, signs) {
        Ok(last) => Ok(Sample {
            error: Some(euclidean(&last.x, &exact)),
            exact_norm,
            clamps: last.clamp_count,
        }),
        Err(SdeError::NonFinite { .. }) => Ok(Sample {
            error: None,
            exact_norm,
            clamps: 0,
        }),
        Err(e) => Err(e),
    }
}

/// Final-time error of one realization on the level `factor`, measured
/// against the closed form at the fine path's `W(t_end)`.
pub fn strong_error(
    problem: &SdeProblem,
    scheme: SchemeId,
    fine: &WienerPath,
    factor: usize,
    signs: SignSequence,
) -> Result<f64> {
    if !problem.has_exact_solution() {
        return Err(SdeError::Capability("problem has no exact solution".into()));
    }
    let exact = problem
        .exact_solution(fine.grid().t_end(), fine.total_displacement())
        .expect("checked above");
    let last = integrate_final(problem, &fine.coarsen(factor)?, scheme, signs)?;
    Ok(euclidean(&last.x, &exact))
}

/// Signs for realization `realization` on the level aggregated by `factor`.
pub fn level_signs(
    problem: &SdeProblem,
    config: &ExperimentConfig,
    realization: u64,
    fine: &WienerPath,
    factor: usize,
) -> Result<SignSequence> {
    if config.scheme != SchemeId::RkPaper || problem.interpretation() == Interpretation::Stratonovich {
        return Ok(SignSequence::zero());
    }
    let steps = fine.grid().steps() / factor;
    match config.sign_policy {
        SignPolicy::Bridge if factor >= 2 => {
            let halves = fine.coarsen(factor / 2)?;
            let signs = halves
                .increments()
                .chunks_exact(2)
                .map(|pair| if pair[1] >= pair[0] { 1.0 } else { -1.0 })
                .collect();
            SignSequence::from_values(signs)
        }
        _ => Ok(SignSequence::rademacher(RngStream::derive(
            config.master_seed,
            realization,
            Channel::Signs,
            steps as u64,
        ))),
    }
}

/// Fine path of realization `realization`.
pub fn fine_path(config: &ExperimentConfig, realization: u64) -> Result<WienerPath> {
    let mut stream = RngStream::derive(config.master_seed, realization, Channel::Wiener, 0);
    Ok(WienerPath::sample(config.fine_grid()?, &mut stream))
}

fn realization_samples(problem: &SdeProblem, config: &ExperimentConfig, i: u64) -> Result<Vec<Sample>> {
    let fine = fine_path(config, i)?;
    config
        .levels
        .iter()
        .map(|&factor| {
            let signs = level_signs(problem, config, i, &fine, factor)?;
            level_sample(problem, config.scheme, &fine, factor, signs)
        })
        .collect()
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Statistics of one level of the ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub level: usize,
    pub factor: usize,
    pub steps: usize,
    pub h: f64,
    /// `None` when every realization aborted.
    pub rms_error: Option<f64>,
    pub samples: usize,
    pub aborts: usize,
    pub clamps: u64,
    /// Whether the level took part in the slope fit.
    pub in_fit: bool,
}

impl LevelRecord {
    pub fn usable(&self) -> bool {
        self.rms_error.is_some()
    }

    pub fn abort_fraction(&self) -> f64 {
        self.aborts as f64 / (self.samples + self.aborts) as f64
    }

    pub fn too_many_aborts(&self) -> bool {
        self.abort_fraction() > MAX_ABORT_FRACTION
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub config: ExperimentConfig,
    pub levels: Vec<LevelRecord>,
    /// `None` when fewer than two levels cleared the noise floor.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl PartialEq for ConvergenceReport {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.levels == other.levels
            && self.slope.map(f64::to_bits) == other.slope.map(f64::to_bits)
            && self.intercept.map(f64::to_bits) == other.intercept.map(f64::to_bits)
    }
}

impl ConvergenceReport {
    /// True when every level produced an RMS error and none exceeded the abort limit.
    pub fn is_complete(&self) -> bool {
        self.levels.iter().all(|l| l.usable() && !l.too_many_aborts())
    }

    pub fn failed_levels(&self) -> Vec<&LevelRecord> {
        self.levels
            .iter()
            .filter(|l| !l.usable() || l.too_many_aborts())
            .collect()
    }

    pub fn level_for_steps(&self, steps: usize) -> Option<&LevelRecord> {
        self.levels.iter().find(|l| l.steps == steps)
    }
}

/// Runs the experiment on the catalogue problem named by `config.problem_id`.
pub fn run_experiment(config: &ExperimentConfig, workers: usize) -> Result<ConvergenceReport> {
    let entry = crate::problems::lookup(&config.problem_id)?;
    run_experiment_on(&entry.problem, config, workers)
}

/// Runs the experiment on an explicit problem with `workers` threads.
pub fn run_experiment_on(
    problem: &SdeProblem,
    config: &ExperimentConfig,
    workers: usize,
) -> Result<ConvergenceReport> {
    config.validate()?;
    if !problem.has_exact_solution() {
        return Err(SdeError::Capability(format!(
            "`{}` has no exact solution to measure errors against",
            config.problem_id
        )));
    }
    let started = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| SdeError::Config(format!("thread pool: {e}")))?;
    let per_realization: Vec<Vec<Sample>> = pool.install(|| {
        (0..config.realizations as u64)
            .into_par_iter()
            .map(|i| realization_samples(problem, config, i))
            .collect::<Result<Vec<_>>>()
    })?;

    let grid = config.fine_grid()?;
    let mut levels: Vec<LevelRecord> = config
        .levels
        .iter()
        .enumerate()
        .map(|(level, &factor)| {
            let mut sq_err = CompensatedSum::default();
            let mut sq_exact = CompensatedSum::default();
            let (mut samples, mut aborts, mut clamps) = (0, 0, 0);
            for row in &per_realization {
                let s = row[level];
                match s.error {
                    Some(e) => {
                        sq_err.add(e * e);
                        sq_exact.add(s.exact_norm * s.exact_norm);
                        samples += 1;
                        clamps += s.clamps;
                    }
                    None => aborts += 1,
                }
            }
            let rms_error = (samples > 0).then(|| (sq_err.value() / samples as f64).sqrt());
            let exact_scale = if samples > 0 {
                (sq_exact.value() / samples as f64).sqrt()
            } else {
                0.0
            };
            let floor = NOISE_FLOOR_ULPS * f64::EPSILON * exact_scale.max(1.0);
            let steps = config.n_fine / factor;
            LevelRecord {
                level,
                factor,
                steps,
                h: (grid.t_end() - grid.t0()) / steps as f64,
                rms_error,
                samples,
                aborts,
                clamps,
                in_fit: rms_error.is_some_and(|e| e >= floor),
            }
        })
        .collect();

    let points: Vec<(f64, f64)> = levels
        .iter()
        .filter(|l| l.in_fit)
        .map(|l| (l.h, l.rms_error.expect("in-fit levels are usable")))
        .collect();
    let fit = fit_slope(&points);
    if let Err(e) = &fit {
        log::info!("{}: {e}", config.problem_id);
        levels.iter_mut().for_each(|l| l.in_fit = false);
    }
    Ok(ConvergenceReport {
        config: config.clone(),
        levels,
        slope: fit.as_ref().ok().map(|f| f.slope),
        intercept: fit.as_ref().ok().map(|f| f.intercept),
        wall_time: started.elapsed(),
    })
}
