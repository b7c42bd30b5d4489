//! SDE problem definitions and the catalogue of analytically solvable cases.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SdeError};

/// How the stochastic integral in `dX = a dt + b dW` is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpretation {
    Ito,
    Stratonovich,
}

impl fmt::Display for Interpretation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Interpretation::Ito => "ito",
            Interpretation::Stratonovich => "stratonovich",
        })
    }
}

/// Reported by a volatility evaluation that had to clamp a radicand.
#[must_use]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Inside,
    Clamped,
}

pub type DriftFn = dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync;
pub type VolatilityFn = dyn Fn(f64, &[f64], &mut [f64]) -> Domain + Send + Sync;
/// Row-major `n x n` matrix `[db_i/dx_j]`.
pub type JacobianFn = dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync;
/// Closed-form solution as a function of `(t, W(t))`.
pub type SolutionFn = dyn Fn(f64, f64, &mut [f64]) + Send + Sync;

/// `dX = a(t, X) dt + b(t, X) dW` with a single scalar noise channel.
#[derive(Clone)]
pub struct SdeProblem {
    x0: Vec<f64>,
    drift: Arc<DriftFn>,
    volatility: Arc<VolatilityFn>,
    interpretation: Interpretation,
    jacobian: Option<Arc<JacobianFn>>,
    solution: Option<Arc<SolutionFn>>,
}

impl fmt::Debug for SdeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SdeProblem")
            .field("dim", &self.dim())
            .field("x0", &self.x0)
            .field("interpretation", &self.interpretation)
            .field("analytic_jacobian", &self.jacobian.is_some())
            .field("exact_solution", &self.solution.is_some())
            .finish()
    }
}

impl SdeProblem {
    /// An Itô problem of dimension `x0.len()`.
    pub fn new<A, B>(x0: Vec<f64>, drift: A, volatility: B) -> Self
    where
        A: Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
        B: Fn(f64, &[f64], &mut [f64]) -> Domain + Send + Sync + 'static,
    {
        assert!(!x0.is_empty(), "state dimension must be positive");
        Self {
            x0,
            drift: Arc::new(drift),
            volatility: Arc::new(volatility),
            interpretation: Interpretation::Ito,
            jacobian: None,
            solution: None,
        }
    }

    /// A one-dimensional Itô problem from plain scalar functions.
    pub fn scalar<A, B>(x0: f64, drift: A, volatility: B) -> Self
    where
        A: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        B: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(
            vec![x0],
            move |t, x, out| out[0] = drift(t, x[0]),
            move |t, x, out| {
                out[0] = volatility(t, x[0]);
                Domain::Inside
            },
        )
    }

    pub fn with_interpretation(mut self, interpretation: Interpretation) -> Self {
        self.interpretation = interpretation;
        self
    }

    pub fn with_jacobian<J>(mut self, jacobian: J) -> Self
    where
        J: Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        self.jacobian = Some(Arc::new(jacobian));
        self
    }

    pub fn with_scalar_jacobian<J>(self, jacobian: J) -> Self
    where
        J: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        self.with_jacobian(move |t, x, out| out[0] = jacobian(t, x[0]))
    }

    pub fn with_exact_solution<F>(mut self, solution: F) -> Self
    where
        F: Fn(f64, f64, &mut [f64]) + Send + Sync + 'static,
    {
        self.solution = Some(Arc::new(solution));
        self
    }

    pub fn with_scalar_solution<F>(self, solution: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        self.with_exact_solution(move |t, w, out| out[0] = solution(t, w))
    }

    /// Drops the closed-form solution (e.g. after reinterpreting the equation).
    pub fn without_exact_solution(mut self) -> Self {
        self.solution = None;
        self
    }

    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn interpretation(&self) -> Interpretation {
        self.interpretation
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn has_exact_solution(&self) -> bool {
        self.solution.is_some()
    }

    #[inline]
    pub fn drift_into(&self, t: f64, x: &[f64], out: &mut [f64]) {
        (self.drift)(t, x, out)
    }

    #[inline]
    pub fn volatility_into(&self, t: f64, x: &[f64], out: &mut [f64]) -> Domain {
        (self.volatility)(t, x, out)
    }

    pub fn drift(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.drift_into(t, x, &mut out);
        out
    }

    pub fn volatility(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        let _ = self.volatility_into(t, x, &mut out);
        out
    }

    /// `b'(t, x)`, analytic when provided, otherwise central differences.
    pub fn jacobian_into(&self, t: f64, x: &[f64], out: &mut [f64]) {
        match &self.jacobian {
            Some(jac) => jac(t, x, out),
            None => self.fd_jacobian_into(t, x, out),
        }
    }

    /// Central-difference `b'` with step `cbrt(eps) * max(1, |x_j|)` per column.
    pub fn fd_jacobian_into(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let n = self.dim();
        let mut probe = x.to_vec();
        let mut plus = vec![0.0; n];
        let mut minus = vec![0.0; n];
        for j in 0..n {
            let delta = f64::EPSILON.cbrt() * x[j].abs().max(1.0);
            probe[j] = x[j] + delta;
            let up = probe[j];
            let _ = self.volatility_into(t, &probe, &mut plus);
            probe[j] = x[j] - delta;
            let down = probe[j];
            let _ = self.volatility_into(t, &probe, &mut minus);
            probe[j] = x[j];
            for i in 0..n {
                out[i * n + j] = (plus[i] - minus[i]) / (up - down);
            }
        }
    }

    pub fn exact_solution(&self, t: f64, w: f64) -> Option<Vec<f64>> {
        self.solution.as_ref().map(|f| {
            let mut out = vec![0.0; self.dim()];
            f(t, w, &mut out);
            out
        })
    }
}

/// Strong order the stochastic Heun scheme is expected to reach on a problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExpectedOrder {
    First,
    Second,
}

impl ExpectedOrder {
    pub fn value(self) -> f64 {
        match self {
            ExpectedOrder::First => 1.0,
            ExpectedOrder::Second => 2.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CatalogueEntry {
    pub id: &'static str,
    /// The equation in plain text.
    pub sde: &'static str,
    /// Closed-form solution in terms of `t` and `W = W(t)`.
    pub solution: &'static str,
    pub expected_order: ExpectedOrder,
    pub problem: SdeProblem,
}

fn entry(
    id: &'static str,
    sde: &'static str,
    solution: &'static str,
    expected_order: ExpectedOrder,
    problem: SdeProblem,
) -> CatalogueEntry {
    CatalogueEntry {
        id,
        sde,
        solution,
        expected_order,
        problem,
    }
}

/// `1 - x^2/s^2`, returned with the clamped radicand `max(r, 0)`.
fn radicand(x: f64, scale: f64) -> (f64, f64) {
    let q = x / scale;
    let r = 1.0 - q * q;
    (r, r.max(0.0))
}

/// The eight solvable problems that drive the convergence experiments.
pub fn catalogue() -> Vec<CatalogueEntry> {
    use ExpectedOrder::*;
    vec![
        entry(
            "autonomous",
            "dX = [X/2 + sqrt(1+X^2)] dt + sqrt(1+X^2) dW, X(0) = 0",
            "X = sinh(t + W)",
            First,
            SdeProblem::scalar(
                0.0,
                |_, x| 0.5 * x + (1.0 + x * x).sqrt(),
                |_, x| (1.0 + x * x).sqrt(),
            )
            .with_scalar_jacobian(|_, x| x / (1.0 + x * x).sqrt())
            .with_scalar_solution(|t, w| (t + w).sinh()),
        ),
        entry(
            "nonautonomous",
            "dX = [X/(1+t) - 3/2 X (1 - X^2/(1+t)^2)^2] dt + (1+t)(1 - X^2/(1+t)^2)^(3/2) dW, X(0) = 0",
            "X = (1+t) W / sqrt(1+W^2)",
            First,
            SdeProblem::new(
                vec![0.0],
                |t, x, out| {
                    let (r, _) = radicand(x[0], 1.0 + t);
                    out[0] = x[0] / (1.0 + t) - 1.5 * x[0] * r * r;
                },
                |t, x, out| {
                    let (r, clamped) = radicand(x[0], 1.0 + t);
                    out[0] = (1.0 + t) * clamped * clamped.sqrt();
                    if r < 0.0 {
                        Domain::Clamped
                    } else {
                        Domain::Inside
                    }
                },
            )
            .with_jacobian(|t, x, out| {
                let (_, r) = radicand(x[0], 1.0 + t);
                out[0] = -3.0 * x[0] * r.sqrt() / (1.0 + t);
            })
            .with_scalar_solution(|t, w| (1.0 + t) * w / (1.0 + w * w).sqrt()),
        ),
        entry(
            "linear2nd",
            "dX = [2X/(1+t) + (1+t)^2] dt + (1+t)^2 dW, X(0) = 1",
            "X = (1+t)^2 (1 + t + W)",
            Second,
            SdeProblem::scalar(
                1.0,
                |t, x| 2.0 * x / (1.0 + t) + (1.0 + t) * (1.0 + t),
                |t, _| (1.0 + t) * (1.0 + t),
            )
            .with_scalar_jacobian(|_, _| 0.0)
            .with_scalar_solution(|t, w| (1.0 + t) * (1.0 + t) * (1.0 + t + w)),
        ),
        entry(
            "ex1",
            "dX = (X - t)/2 dt + (X - t - 2) dW, X(0) = 3",
            "X = 2 + t + exp(W)",
            First,
            SdeProblem::scalar(3.0, |t, x| 0.5 * (x - t), |t, x| x - t - 2.0)
                .with_scalar_jacobian(|_, _| 1.0)
                .with_scalar_solution(|t, w| 2.0 + t + w.exp()),
        ),
        entry(
            "ex2",
            "dX = X dW, X(0) = 1",
            "X = exp(W - t/2)",
            First,
            SdeProblem::scalar(1.0, |_, _| 0.0, |_, x| x)
                .with_scalar_jacobian(|_, _| 1.0)
                .with_scalar_solution(|t, w| (w - 0.5 * t).exp()),
        ),
        entry(
            "ex3",
            "dX = -X (1 - X^2) dt + (1 - X^2) dW, X(0) = 0",
            "X = tanh(W)",
            First,
            SdeProblem::scalar(0.0, |_, x| -x * (1.0 - x * x), |_, x| 1.0 - x * x)
                .with_scalar_jacobian(|_, x| -2.0 * x)
                .with_scalar_solution(|_, w| w.tanh()),
        ),
        entry(
            "ex4",
            "dX = -X dt + exp(-t) dW, X(0) = 0",
            "X = exp(-t) W",
            Second,
            SdeProblem::scalar(0.0, |_, x| -x, |t, _| (-t).exp())
                .with_scalar_jacobian(|_, _| 0.0)
                .with_scalar_solution(|t, w| (-t).exp() * w),
        ),
        entry(
            "ex5",
            "dX = -3/2 X (1 - X^2)^2 dt + (1 - X^2)^(3/2) dW, X(0) = 0",
            "X = W / sqrt(1+W^2)",
            First,
            SdeProblem::new(
                vec![0.0],
                |_, x, out| {
                    let (r, _) = radicand(x[0], 1.0);
                    out[0] = -1.5 * x[0] * r * r;
                },
                |_, x, out| {
                    let (r, clamped) = radicand(x[0], 1.0);
                    out[0] = clamped * clamped.sqrt();
                    if r < 0.0 {
                        Domain::Clamped
                    } else {
                        Domain::Inside
                    }
                },
            )
            .with_jacobian(|_, x, out| {
                let (_, r) = radicand(x[0], 1.0);
                out[0] = -3.0 * x[0] * r.sqrt();
            })
            .with_scalar_solution(|_, w| w / (1.0 + w * w).sqrt()),
        ),
    ]
}

/// Auxiliary problems used by tests, smoke runs and the Stratonovich experiments.
pub fn auxiliary() -> Vec<CatalogueEntry> {
    use ExpectedOrder::*;
    vec![
        entry(
            "pure_wiener",
            "dX = dW, X(0) = 0",
            "X = W",
            First,
            SdeProblem::scalar(0.0, |_, _| 0.0, |_, _| 1.0)
                .with_scalar_jacobian(|_, _| 0.0)
                .with_scalar_solution(|_, w| w),
        ),
        entry(
            "vec2",
            "dX_i = -X_i dt + exp(-t) dW, X(0) = (0, 1)",
            "X = (exp(-t) W, exp(-t) (1 + W))",
            Second,
            SdeProblem::new(
                vec![0.0, 1.0],
                |_, x, out| {
                    out[0] = -x[0];
                    out[1] = -x[1];
                },
                |t, _, out| {
                    out[0] = (-t).exp();
                    out[1] = (-t).exp();
                    Domain::Inside
                },
            )
            .with_jacobian(|_, _, out| out.fill(0.0))
            .with_exact_solution(|t, w, out| {
                out[0] = (-t).exp() * w;
                out[1] = (-t).exp() * (1.0 + w);
            }),
        ),
        entry(
            "ex2_strat",
            "dX = X o dW (Stratonovich), X(0) = 1",
            "X = exp(W)",
            First,
            SdeProblem::scalar(1.0, |_, _| 0.0, |_, x| x)
                .with_interpretation(Interpretation::Stratonovich)
                .with_scalar_jacobian(|_, _| 1.0)
                .with_scalar_solution(|_, w| w.exp()),
        ),
        entry(
            "decay",
            "dX = -X dt, X(0) = 1",
            "X = exp(-t)",
            Second,
            SdeProblem::scalar(1.0, |_, x| -x, |_, _| 0.0)
                .with_scalar_jacobian(|_, _| 0.0)
                .with_scalar_solution(|t, _| (-t).exp()),
        ),
    ]
}

/// Looks an id up in the catalogue, then in the auxiliary list.
pub fn lookup(id: &str) -> Result<CatalogueEntry> {
    catalogue()
        .into_iter()
        .chain(auxiliary())
        .find(|e| e.id == id)
        .ok_or_else(|| SdeError::UnknownProblem(id.to_string()))
}

/// Richardson-extrapolated central differences, base step `2^-6 * max(1, |arg|)`.
/// Truncation error is `O(step^4)`.
fn derivatives<F: Fn(f64) -> f64>(f: F, at: f64) -> (f64, f64) {
    let base = at.abs().max(1.0) / 64.0;
    let f0 = f(at);
    let first = |d: f64| (f(at + d) - f(at - d)) / (2.0 * d);
    let second = |d: f64| (f(at + d) - 2.0 * f0 + f(at - d)) / (d * d);
    let d1 = (4.0 * first(base / 2.0) - first(base)) / 3.0;
    let d2 = (4.0 * second(base / 2.0) - second(base)) / 3.0;
    (d1, d2)
}

/// Residuals of Itô's formula for a scalar closed-form solution `f(t, w)`:
/// `|f_t + f_ww/2 - a(t, f)|` and `|f_w - b(t, f)|`.
pub fn ito_residual(problem: &SdeProblem, t: f64, w: f64) -> Result<(f64, f64)> {
    let solution = problem
        .solution
        .as_ref()
        .ok_or_else(|| SdeError::Capability("problem has no exact solution".into()))?;
    if problem.dim() != 1 {
        return Err(SdeError::Capability(
            "Itô residuals are defined for scalar problems".into(),
        ));
    }
    if problem.interpretation() != Interpretation::Ito {
        return Err(SdeError::Interpretation(
            "Itô residuals need an Itô problem; convert Stratonovich problems first".into(),
        ));
    }
    let eval = |t: f64, w: f64| {
        let mut out = [0.0];
        solution(t, w, &mut out);
        out[0]
    };
    let (f_t, _) = derivatives(|s| eval(s, w), t);
    let (f_w, f_ww) = derivatives(|v| eval(t, v), w);
    let x = [eval(t, w)];
    let a = problem.drift(t, &x)[0];
    let b = problem.volatility(t, &x)[0];
    Ok(((f_t + 0.5 * f_ww - a).abs(), (f_w - b).abs()))
}

/// Converts a Stratonovich problem to the equivalent Itô problem by adding
/// `b' b / 2` to the drift. The solution, if any, carries over unchanged.
pub fn stratonovich_to_ito(problem: &SdeProblem) -> Result<SdeProblem> {
    if problem.interpretation() != Interpretation::Stratonovich {
        return Err(SdeError::Interpretation(
            "problem is already in Itô form".into(),
        ));
    }
    let source = problem.clone();
    let n = problem.dim();
    let drift = move |t: f64, x: &[f64], out: &mut [f64]| {
        source.drift_into(t, x, out);
        let mut b = vec![0.0; n];
        let mut jac = vec![0.0; n * n];
        let _ = source.volatility_into(t, x, &mut b);
        source.jacobian_into(t, x, &mut jac);
        for i in 0..n {
            let row = &jac[i * n..(i + 1) * n];
            let correction: f64 = row.iter().zip(&b).map(|(d, bj)| d * bj).sum();
            out[i] += 0.5 * correction;
        }
    };
    Ok(SdeProblem {
        x0: problem.x0.clone(),
        drift: Arc::new(drift),
        volatility: problem.volatility.clone(),
        interpretation: Interpretation::Ito,
        jacobian: problem.jacobian.clone(),
        solution: problem.solution.clone(),
    })
}

/// First `count` points of the base-(2, 3) Halton sequence mapped onto
/// `t in [0, 1]`, `w in [-2, 2]`.
pub fn residual_sample_points(count: usize) -> Vec<(f64, f64)> {
    fn radical_inverse(mut i: usize, base: usize) -> f64 {
        let inv = 1.0 / base as f64;
        let mut value = 0.0;
        let mut scale = inv;
        while i > 0 {
            value += (i % base) as f64 * scale;
            i /= base;
            scale *= inv;
        }
        value
    }
    (1..=count)
        .map(|i| (radical_inverse(i, 2), -2.0 + 4.0 * radical_inverse(i, 3)))
        .collect()
}

/// Largest Itô residuals of one entry over a point set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolutionCheck {
    pub max_drift_residual: f64,
    pub max_volatility_residual: f64,
}

impl SolutionCheck {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_drift_residual < tolerance && self.max_volatility_residual < tolerance
    }
}

pub fn check_solution(problem: &SdeProblem, points: &[(f64, f64)]) -> Result<SolutionCheck> {
    let mut check = SolutionCheck {
        max_drift_residual: 0.0,
        max_volatility_residual: 0.0,
    };
    for &(t, w) in points {
        let (ra, rb) = ito_residual(problem, t, w)?;
        if !(ra.is_finite() && rb.is_finite()) {
            return Err(SdeError::NonFinite {
                stage: "Itô residual",
                t,
                x: vec![w],
            });
        }
        check.max_drift_residual = check.max_drift_residual.max(ra);
        check.max_volatility_residual = check.max_volatility_residual.max(rb);
    }
    Ok(check)
}
