//! One-step maps and the path-level integration driver.
//!
//! The stochastic Heun step for `dX = a dt + b dW` over `[t_k, t_k + h]`:
//!
//! ```text
//! K1      = h a(t_k, X_k)            + (dW_k - S_k sqrt(h)) b(t_k, X_k)
//! K2      = h a(t_{k+1}, X_k + K1)   + (dW_k + S_k sqrt(h)) b(t_{k+1}, X_k + K1)
//! X_{k+1} = X_k + (K1 + K2) / 2
//! ```
//!
//! `S_k = ±1` with equal probability for Itô equations and `S_k = 0` for
//! Stratonovich equations. With `b = 0` this is exactly Heun's method.
//!
//! `sqrt(h)` is snapped to the Wiener increment lattice before use, so that
//! `(dW - S sqrt(h)) + (dW + S sqrt(h))` equals `2 dW` exactly. The snap moves
//! `sqrt(h)` by at most 2^-41.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SdeError};
use crate::fmt_num;
use crate::problems::{Domain, Interpretation, SdeProblem};
use crate::rng::RngStream;
use crate::wiener::{snap_to_lattice, TimeGrid, WienerPath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchemeId {
    #[serde(rename = "rk")]
    RkPaper,
    #[serde(rename = "em")]
    EulerMaruyama,
    #[serde(rename = "milstein")]
    Milstein,
}

impl SchemeId {
    pub fn name(self) -> &'static str {
        match self {
            SchemeId::RkPaper => "rk",
            SchemeId::EulerMaruyama => "em",
            SchemeId::Milstein => "milstein",
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "rk" | "heun" => Ok(SchemeId::RkPaper),
            "em" | "euler" | "euler-maruyama" => Ok(SchemeId::EulerMaruyama),
            "milstein" => Ok(SchemeId::Milstein),
            other => Err(format!("unknown scheme `{other}` (expected rk, em or milstein)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignMode {
    Rademacher,
    Zero,
    /// Caller-supplied values, e.g. signs derived from sub-step noise.
    Explicit,
}

#[derive(Debug, Clone)]
enum SignSource {
    Rademacher(RngStream),
    Zero,
    Explicit(Vec<f64>),
}

/// The per-step signs `S_k` of the stochastic Heun step.
///
/// Rademacher signs are read from their own stream, one word per step, so
/// the Wiener increments they are paired with never depend on them.
#[derive(Debug, Clone)]
pub struct SignSequence {
    source: SignSource,
}

impl SignSequence {
    pub fn rademacher(stream: RngStream) -> Self {
        Self {
            source: SignSource::Rademacher(stream),
        }
    }

    pub fn zero() -> Self {
        Self {
            source: SignSource::Zero,
        }
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = values.iter().find(|&&s| s != 1.0 && s != -1.0 && s != 0.0) {
            return Err(SdeError::Sign(bad));
        }
        Ok(Self {
            source: SignSource::Explicit(values),
        })
    }

    pub fn mode(&self) -> SignMode {
        match self.source {
            SignSource::Rademacher(_) => SignMode::Rademacher,
            SignSource::Zero => SignMode::Zero,
            SignSource::Explicit(_) => SignMode::Explicit,
        }
    }

    fn is_all_zero(&self) -> bool {
        match &self.source {
            SignSource::Zero => true,
            SignSource::Rademacher(_) => false,
            SignSource::Explicit(v) => v.iter().all(|&s| s == 0.0),
        }
    }

    fn sign_at(&mut self, k: usize) -> Result<f64> {
        match &mut self.source {
            SignSource::Rademacher(stream) => Ok(stream.rademacher()),
            SignSource::Zero => Ok(0.0),
            SignSource::Explicit(values) => values.get(k).copied().ok_or_else(|| {
                SdeError::Config(format!("only {} explicit signs for step {k}", values.len()))
            }),
        }
    }
}

/// States at every grid point of one integration run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub states: Vec<Vec<f64>>,
    /// Volatility evaluations that clamped a radicand.
    pub clamp_count: u64,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory holds n + 1 states")
    }

    /// Writes `t,X` (or `t,X1,...,Xn` for vector states), plus a `W` column
    /// when the driving path is supplied.
    pub fn write_csv<W: Write>(&self, mut out: W, path: Option<&WienerPath>) -> std::io::Result<()> {
        let dim = self.states[0].len();
        let mut header = String::from("t");
        if dim == 1 {
            header.push_str(",X");
        } else {
            for i in 1..=dim {
                header.push_str(&format!(",X{i}"));
            }
        }
        if path.is_some() {
            header.push_str(",W");
        }
        writeln!(out, "{header}")?;
        let w = path.map(WienerPath::cumulative);
        for (k, state) in self.states.iter().enumerate() {
            write!(out, "{}", fmt_num(self.grid.time(k)))?;
            for x in state {
                write!(out, ",{}", fmt_num(*x))?;
            }
            if let Some(w) = &w {
                write!(out, ",{}", fmt_num(w[k]))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Final state of a run, without the intermediate states.
#[derive(Debug, Clone, PartialEq)]
pub struct FinalState {
    pub x: Vec<f64>,
    pub clamp_count: u64,
}

/// Scratch buffers for one problem dimension.
struct Workspace {
    a0: Vec<f64>,
    b0: Vec<f64>,
    k1: Vec<f64>,
    x1: Vec<f64>,
    a1: Vec<f64>,
    b1: Vec<f64>,
    jac: Vec<f64>,
}

impl Workspace {
    fn new(dim: usize) -> Self {
        Self {
            a0: vec![0.0; dim],
            b0: vec![0.0; dim],
            k1: vec![0.0; dim],
            x1: vec![0.0; dim],
            a1: vec![0.0; dim],
            b1: vec![0.0; dim],
            jac: vec![0.0; dim * dim],
        }
    }
}

fn ensure_finite(stage: &'static str, t: f64, x: &[f64], values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(SdeError::NonFinite {
            stage,
            t,
            x: x.to_vec(),
        })
    }
}

fn clamps(d: Domain) -> u64 {
    (d == Domain::Clamped) as u64
}

#[allow(clippy::too_many_arguments)]
fn heun_update(
    problem: &SdeProblem,
    ws: &mut Workspace,
    t: f64,
    t_next: f64,
    x: &mut [f64],
    h: f64,
    sqrt_h: f64,
    dw: f64,
    s: f64,
) -> Result<u64> {
    problem.drift_into(t, x, &mut ws.a0);
    ensure_finite("drift", t, x, &ws.a0)?;
    let mut clamped = clamps(problem.volatility_into(t, x, &mut ws.b0));
    ensure_finite("volatility", t, x, &ws.b0)?;
    for i in 0..x.len() {
        ws.k1[i] = h * ws.a0[i] + (dw - s * sqrt_h) * ws.b0[i];
        ws.x1[i] = x[i] + ws.k1[i];
    }
    problem.drift_into(t_next, &ws.x1, &mut ws.a1);
    ensure_finite("drift", t_next, &ws.x1, &ws.a1)?;
    clamped += clamps(problem.volatility_into(t_next, &ws.x1, &mut ws.b1));
    ensure_finite("volatility", t_next, &ws.x1, &ws.b1)?;
    for i in 0..x.len() {
        let k2 = h * ws.a1[i] + (dw + s * sqrt_h) * ws.b1[i];
        x[i] += 0.5 * (ws.k1[i] + k2);
    }
    ensure_finite("state", t_next, x, x)?;
    Ok(clamped)
}

fn euler_update(
    problem: &SdeProblem,
    ws: &mut Workspace,
    t: f64,
    x: &mut [f64],
    h: f64,
    dw: f64,
) -> Result<u64> {
    problem.drift_into(t, x, &mut ws.a0);
    ensure_finite("drift", t, x, &ws.a0)?;
    let clamped = clamps(problem.volatility_into(t, x, &mut ws.b0));
    ensure_finite("volatility", t, x, &ws.b0)?;
    for i in 0..x.len() {
        x[i] = x[i] + h * ws.a0[i] + dw * ws.b0[i];
    }
    ensure_finite("state", t, x, x)?;
    Ok(clamped)
}

fn milstein_update(
    problem: &SdeProblem,
    ws: &mut Workspace,
    t: f64,
    x: &mut [f64],
    h: f64,
    dw: f64,
) -> Result<u64> {
    if problem.dim() != 1 {
        return Err(SdeError::Capability(
            "Milstein is implemented for scalar problems only".into(),
        ));
    }
    problem.drift_into(t, x, &mut ws.a0);
    ensure_finite("drift", t, x, &ws.a0)?;
    let clamped = clamps(problem.volatility_into(t, x, &mut ws.b0));
    ensure_finite("volatility", t, x, &ws.b0)?;
    problem.jacobian_into(t, x, &mut ws.jac);
    ensure_finite("volatility derivative", t, x, &ws.jac)?;
    let (a, b, db) = (ws.a0[0], ws.b0[0], ws.jac[0]);
    x[0] = x[0] + h * a + dw * b + 0.5 * db * b * (dw * dw - h);
    ensure_finite("state", t, x, x)?;
    Ok(clamped)
}

fn check_step(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(SdeError::Grid(format!("step size {h} must be positive")))
    }
}

/// One stochastic Heun step from `(t, x)` with increment `dw` and sign `s`.
pub fn rk_step(problem: &SdeProblem, t: f64, x: &[f64], h: f64, dw: f64, s: f64) -> Result<Vec<f64>> {
    check_step(h)?;
    if s != 1.0 && s != -1.0 && s != 0.0 {
        return Err(SdeError::Sign(s));
    }
    let mut ws = Workspace::new(problem.dim());
    let mut next = x.to_vec();
    heun_update(problem, &mut ws, t, t + h, &mut next, h, snap_to_lattice(h.sqrt()), dw, s)?;
    Ok(next)
}

/// `x + h a(t, x) + dw b(t, x)`.
pub fn euler_maruyama_step(problem: &SdeProblem, t: f64, x: &[f64], h: f64, dw: f64) -> Result<Vec<f64>> {
    check_step(h)?;
    let mut ws = Workspace::new(problem.dim());
    let mut next = x.to_vec();
    euler_update(problem, &mut ws, t, &mut next, h, dw)?;
    Ok(next)
}

/// `x + h a + dw b + b' b (dw^2 - h) / 2`, scalar problems only.
pub fn milstein_step(problem: &SdeProblem, t: f64, x: &[f64], h: f64, dw: f64) -> Result<Vec<f64>> {
    check_step(h)?;
    let mut ws = Workspace::new(problem.dim());
    let mut next = x.to_vec();
    milstein_update(problem, &mut ws, t, &mut next, h, dw)?;
    Ok(next)
}

fn check_compatible(problem: &SdeProblem, path: &WienerPath, scheme: SchemeId, signs: &SignSequence) -> Result<()> {
    match (problem.interpretation(), scheme) {
        (Interpretation::Stratonovich, SchemeId::EulerMaruyama | SchemeId::Milstein) => {
            return Err(SdeError::Interpretation(format!(
                "{scheme} integrates Itô equations only; convert the Stratonovich problem first"
            )));
        }
        (Interpretation::Stratonovich, SchemeId::RkPaper) if !signs.is_all_zero() => {
            return Err(SdeError::Interpretation(
                "Stratonovich equations need zero signs".into(),
            ));
        }
        (Interpretation::Ito, SchemeId::RkPaper) if signs.mode() == SignMode::Zero => {
            log::warn!("integrating an Itô problem with zero signs solves its Stratonovich reading");
        }
        _ => {}
    }
    if scheme == SchemeId::Milstein && problem.dim() != 1 {
        return Err(SdeError::Capability(
            "Milstein is implemented for scalar problems only".into(),
        ));
    }
    if let SignSource::Explicit(values) = &signs.source {
        if values.len() < path.grid().steps() {
            return Err(SdeError::Config(format!(
                "{} explicit signs for {} steps",
                values.len(),
                path.grid().steps()
            )));
        }
    }
    Ok(())
}

fn run<F: FnMut(usize, &[f64])>(
    problem: &SdeProblem,
    path: &WienerPath,
    scheme: SchemeId,
    mut signs: SignSequence,
    mut visit: F,
) -> Result<FinalState> {
    check_compatible(problem, path, scheme, &signs)?;
    let grid = *path.grid();
    let h = grid.h();
    let sqrt_h = snap_to_lattice(h.sqrt());
    let mut ws = Workspace::new(problem.dim());
    let mut x = problem.x0().to_vec();
    let mut clamp_count = 0;
    visit(0, &x);
    for (k, &dw) in path.increments().iter().enumerate() {
        let t = grid.time(k);
        clamp_count += match scheme {
            SchemeId::RkPaper => {
                let s = signs.sign_at(k)?;
                heun_update(problem, &mut ws, t, grid.time(k + 1), &mut x, h, sqrt_h, dw, s)?
            }
            SchemeId::EulerMaruyama => euler_update(problem, &mut ws, t, &mut x, h, dw)?,
            SchemeId::Milstein => milstein_update(problem, &mut ws, t, &mut x, h, dw)?,
        };
        visit(k + 1, &x);
    }
    Ok(FinalState { x, clamp_count })
}

/// Integrates `problem` along `path`, keeping every state.
pub fn integrate(
    problem: &SdeProblem,
    path: &WienerPath,
    scheme: SchemeId,
    signs: SignSequence,
) -> Result<Trajectory> {
    let mut states = Vec::with_capacity(path.grid().steps() + 1);
    let last = run(problem, path, scheme, signs, |_, x| states.push(x.to_vec()))?;
    Ok(Trajectory {
        grid: *path.grid(),
        states,
        clamp_count: last.clamp_count,
    })
}

/// Integrates `problem` along `path`, keeping only the final state.
pub fn integrate_final(
    problem: &SdeProblem,
    path: &WienerPath,
    scheme: SchemeId,
    signs: SignSequence,
) -> Result<FinalState> {
    run(problem, path, scheme, signs, |_, _| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::lookup;
    use crate::rng::Channel;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    fn unit_path(incs: Vec<f64>) -> WienerPath {
        WienerPath::from_increments(TimeGrid::unit(incs.len()).unwrap(), incs).unwrap()
    }

    fn sampled(n: usize, seed: u64) -> WienerPath {
        WienerPath::sample(TimeGrid::unit(n).unwrap(), &mut RngStream::derive(seed, 0, Channel::Wiener, 0))
    }

    fn signs(seed: u64) -> SignSequence {
        SignSequence::rademacher(RngStream::derive(seed, 0, Channel::Signs, 0))
    }

    #[test]
    fn rk_zero_field_is_stationary() {
        let p = SdeProblem::scalar(0.0, |_, _| 0.0, |_, _| 0.0);
        for s in [-1.0, 0.0, 1.0] {
            assert_eq!(rk_step(&p, 0.3, &[1.25], 0.1, 0.7, s).unwrap(), [1.25]);
        }
    }

    #[test]
    fn rk_constant_drift_is_exact() {
        let p = SdeProblem::scalar(0.0, |_, _| 1.0, |_, _| 0.0);
        assert_eq!(rk_step(&p, 0.0, &[0.0], 0.5, 0.2, 1.0).unwrap(), [0.5]);
    }

    #[test]
    fn rk_time_dependent_volatility() {
        // K1 = 0, K2 = (0.3 + 1) * 1.
        let p = SdeProblem::scalar(0.0, |_, _| 0.0, |t, _| t);
        let x = rk_step(&p, 0.0, &[0.0], 1.0, 0.3, 1.0).unwrap();
        assert!((x[0] - 0.65).abs() < 1e-15);
    }

    #[test]
    fn rk_rejects_bad_inputs() {
        let p = SdeProblem::scalar(0.0, |_, _| 0.0, |_, _| 1.0);
        assert_eq!(rk_step(&p, 0.0, &[0.0], 0.1, 0.0, 0.5), Err(SdeError::Sign(0.5)));
        assert!(matches!(rk_step(&p, 0.0, &[0.0], 0.0, 0.0, 1.0), Err(SdeError::Grid(_))));
    }

    #[test]
    fn rk_non_finite_is_reported() {
        let p = SdeProblem::scalar(0.0, |_, x| 1.0 / x, |_, _| 1.0);
        match rk_step(&p, 0.25, &[0.0], 0.1, 0.0, 1.0) {
            Err(SdeError::NonFinite { stage, t, x }) => {
                assert_eq!(stage, "drift");
                assert_eq!(t, 0.25);
                assert_eq!(x, [0.0]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rk_uses_two_drift_and_two_volatility_evaluations() {
        let drift_calls = Arc::new(AtomicUsize::new(0));
        let vol_calls = Arc::new(AtomicUsize::new(0));
        let (dc, vc) = (drift_calls.clone(), vol_calls.clone());
        let p = SdeProblem::scalar(
            1.0,
            move |_, x| {
                dc.fetch_add(1, Ordering::Relaxed);
                -x
            },
            move |_, x| {
                vc.fetch_add(1, Ordering::Relaxed);
                0.5 * x
            },
        );
        let path = sampled(32, 1);
        integrate(&p, &path, SchemeId::RkPaper, signs(1)).unwrap();
        assert_eq!(drift_calls.load(Ordering::Relaxed), 64);
        assert_eq!(vol_calls.load(Ordering::Relaxed), 64);
    }

    #[test]
    fn euler_examples() {
        let p = SdeProblem::scalar(0.0, |_, x| x, |_, _| 1.0);
        let x = euler_maruyama_step(&p, 0.0, &[2.0], 0.1, 0.05).unwrap();
        assert!((x[0] - 2.25).abs() < 1e-15);

        let p = SdeProblem::scalar(0.0, |t, x| t * x, |_, x| x.sin());
        assert_eq!(euler_maruyama_step(&p, 0.5, &[3.0], 0.1, 0.0).unwrap(), [3.0 + 0.1 * 1.5]);

        let p = SdeProblem::scalar(0.0, |_, _| 0.0, |_, _| 1.0);
        assert_eq!(euler_maruyama_step(&p, 0.0, &[0.75], 0.1, 0.125).unwrap(), [0.875]);
    }

    #[test]
    fn milstein_examples() {
        let geometric = lookup("ex2").unwrap().problem;
        let x = milstein_step(&geometric, 0.0, &[1.0], 0.04, 0.1).unwrap();
        assert!((x[0] - 1.085).abs() < 1e-15);

        let additive = SdeProblem::scalar(0.0, |_, x| -x, |_, _| 0.4).with_scalar_jacobian(|_, _| 0.0);
        assert_eq!(
            milstein_step(&additive, 0.1, &[0.3], 0.01, 0.07).unwrap(),
            euler_maruyama_step(&additive, 0.1, &[0.3], 0.01, 0.07).unwrap()
        );

        // dW^2 = h exactly.
        assert_eq!(
            milstein_step(&geometric, 0.0, &[1.5], 0.0625, 0.25).unwrap(),
            euler_maruyama_step(&geometric, 0.0, &[1.5], 0.0625, 0.25).unwrap()
        );
    }

    #[test]
    fn milstein_rejects_vectors() {
        let p = lookup("vec2").unwrap().problem;
        assert!(matches!(milstein_step(&p, 0.0, &[0.0, 1.0], 0.1, 0.1), Err(SdeError::Capability(_))));
        assert!(matches!(
            integrate(&p, &sampled(4, 0), SchemeId::Milstein, SignSequence::zero()),
            Err(SdeError::Capability(_))
        ));
    }

    #[test]
    fn pure_wiener_is_exact_for_every_scheme() {
        let p = lookup("pure_wiener").unwrap().problem;
        let path = sampled(256, 9);
        let total = path.total_displacement();
        for scheme in [SchemeId::RkPaper, SchemeId::EulerMaruyama, SchemeId::Milstein] {
            for sign in [signs(4), SignSequence::zero()] {
                let tr = integrate(&p, &path, scheme, sign).unwrap();
                assert_eq!(tr.final_state(), [total], "{scheme}");
                assert_eq!(tr.states.len(), 257);
                assert_eq!(tr.states[0], p.x0());
            }
        }
    }

    #[test]
    fn zero_volatility_ignores_signs() {
        let p = SdeProblem::scalar(1.0, |t, x| t - x * x, |_, _| 0.0);
        let path = sampled(64, 2);
        let a = integrate(&p, &path, SchemeId::RkPaper, signs(1)).unwrap();
        let b = integrate(&p, &path, SchemeId::RkPaper, SignSequence::zero()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn constant_volatility_cancels_signs() {
        let p = SdeProblem::scalar(0.5, |_, _| 0.0, |_, _| 0.7);
        let path = sampled(128, 3);
        let a = integrate(&p, &path, SchemeId::RkPaper, signs(10)).unwrap();
        let b = integrate(&p, &path, SchemeId::RkPaper, signs(11)).unwrap();
        assert_eq!(a, b);

        // A time-dependent drift reintroduces rounding, nothing more.
        let p = SdeProblem::scalar(0.5, |t, _| t.cos(), |_, _| 0.7);
        let a = integrate(&p, &path, SchemeId::RkPaper, signs(10)).unwrap();
        let b = integrate(&p, &path, SchemeId::RkPaper, signs(11)).unwrap();
        for (x, y) in a.states.iter().zip(&b.states) {
            assert!((x[0] - y[0]).abs() <= 64.0 * f64::EPSILON * x[0].abs().max(1.0));
        }
    }

    #[test]
    fn stratonovich_needs_zero_signs() {
        let p = lookup("ex2_strat").unwrap().problem;
        let path = sampled(8, 0);
        assert!(matches!(
            integrate(&p, &path, SchemeId::RkPaper, signs(0)),
            Err(SdeError::Interpretation(_))
        ));
        for scheme in [SchemeId::EulerMaruyama, SchemeId::Milstein] {
            assert!(matches!(
                integrate(&p, &path, scheme, SignSequence::zero()),
                Err(SdeError::Interpretation(_))
            ));
        }
        assert!(integrate(&p, &path, SchemeId::RkPaper, SignSequence::zero()).is_ok());
    }

    #[test]
    fn explicit_signs() {
        assert_eq!(SignSequence::from_values(vec![1.0, 0.3]).unwrap_err(), SdeError::Sign(0.3));
        let p = lookup("ex2").unwrap().problem;
        let path = sampled(4, 0);
        let short = SignSequence::from_values(vec![1.0; 3]).unwrap();
        assert!(matches!(integrate(&p, &path, SchemeId::RkPaper, short), Err(SdeError::Config(_))));
        let ok = SignSequence::from_values(vec![1.0, -1.0, 1.0, -1.0]).unwrap();
        assert_eq!(ok.mode(), SignMode::Explicit);
        assert!(integrate(&p, &path, SchemeId::RkPaper, ok).is_ok());
    }

    #[test]
    fn clamp_events_are_counted() {
        // Start outside |X| <= 1 so the first volatility evaluation clamps.
        let p = lookup("ex5").unwrap().problem;
        let p = SdeProblem::new(
            vec![1.2],
            move |t, x, out| p.drift_into(t, x, out),
            {
                let q = lookup("ex5").unwrap().problem;
                move |t, x, out| q.volatility_into(t, x, out)
            },
        );
        let tr = integrate(&p, &unit_path(vec![0.0; 2]), SchemeId::EulerMaruyama, SignSequence::zero()).unwrap();
        assert!(tr.clamp_count >= 1);
    }

    #[test]
    fn trajectory_csv() {
        let p = lookup("pure_wiener").unwrap().problem;
        let path = unit_path(vec![0.5, -0.25]);
        let tr = integrate(&p, &path, SchemeId::EulerMaruyama, SignSequence::zero()).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf, Some(&path)).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "t,X,W\n0e0,0e0,0e0\n5e-1,5e-1,5e-1\n1e0,2.5e-1,2.5e-1\n"
        );
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in [SchemeId::RkPaper, SchemeId::EulerMaruyama, SchemeId::Milstein] {
            assert_eq!(s.name().parse::<SchemeId>().unwrap(), s);
        }
        assert!("rk4".parse::<SchemeId>().is_err());
    }
}
