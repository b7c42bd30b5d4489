//! Scalar Wiener paths on uniform grids.
//!
//! Paths are stored as increments. Every sampled increment is rounded to a
//! multiple of [`INCREMENT_QUANTUM`] (2^-40), a dyadic lattice on which f64
//! addition of path-sized values is exact. Aggregating, bridging and summing
//! increments therefore gives the same total in any order, which is what
//! makes coarse and fine paths of one realization end at the same `W(t_end)`
//! bit for bit. Bridge refinement halves the spacing once per refinement.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SdeError};
use crate::fmt_num;
use crate::rng::{RngStream, StreamLabel};

/// Spacing of the increment lattice. Sums stay exact while `|W| < 2^13`.
pub const INCREMENT_QUANTUM: f64 = 1.0 / (1u64 << 40) as f64;

/// Rounds `x` to the nearest multiple of [`INCREMENT_QUANTUM`].
#[inline]
pub fn snap_to_lattice(x: f64) -> f64 {
    (x / INCREMENT_QUANTUM).round() * INCREMENT_QUANTUM
}

/// Uniform grid `t0 < t0 + h < ... < t_end` with `n` steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t0: f64,
    t_end: f64,
    n: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t_end: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(SdeError::Grid("step count must be at least 1".into()));
        }
        if !(t0.is_finite() && t_end.is_finite()) {
            return Err(SdeError::Grid(format!("non-finite bounds [{t0}, {t_end}]")));
        }
        if t_end <= t0 {
            return Err(SdeError::Grid(format!(
                "end time {t_end} must exceed start time {t0}"
            )));
        }
        Ok(Self { t0, t_end, n })
    }

    /// Unit interval with `n` steps.
    pub fn unit(n: usize) -> Result<Self> {
        Self::new(0.0, 1.0, n)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn steps(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        (self.t_end - self.t0) / self.n as f64
    }

    /// Time of grid point `k`, computed as `t0 + k*h` (never accumulated).
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.h()
    }

    fn with_steps(&self, n: usize) -> Self {
        Self { n, ..*self }
    }
}

/// One realization of `W` on a grid, as increments `W(t_{k+1}) - W(t_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerPath {
    grid: TimeGrid,
    increments: Vec<f64>,
    seed_label: Option<StreamLabel>,
}

impl WienerPath {
    /// Wraps explicit increments. Values are used verbatim (not snapped).
    pub fn from_increments(grid: TimeGrid, increments: Vec<f64>) -> Result<Self> {
        if increments.len() != grid.steps() {
            return Err(SdeError::Grid(format!(
                "{} increments for a grid of {} steps",
                increments.len(),
                grid.steps()
            )));
        }
        Ok(Self {
            grid,
            increments,
            seed_label: None,
        })
    }

    /// Draws every increment independently from `Normal(0, h)`.
    pub fn sample(grid: TimeGrid, stream: &mut RngStream) -> Self {
        let sqrt_h = grid.h().sqrt();
        let increments = (0..grid.steps())
            .map(|_| snap_to_lattice(sqrt_h * stream.standard_normal()))
            .collect();
        Self {
            grid,
            increments,
            seed_label: Some(stream.label()),
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn seed_label(&self) -> Option<StreamLabel> {
        self.seed_label
    }

    /// Aggregates blocks of `factor` consecutive increments (left-to-right sums).
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        let n = self.grid.steps();
        if factor == 0 || n % factor != 0 {
            return Err(SdeError::Aggregation { n, factor });
        }
        let increments = self
            .increments
            .chunks_exact(factor)
            .map(|block| block.iter().fold(0.0, |acc, &dw| acc + dw))
            .collect();
        Ok(Self {
            grid: self.grid.with_steps(n / factor),
            increments,
            seed_label: self.seed_label,
        })
    }

    /// Halves the step by Brownian-bridge interpolation, one `N(0,1)` draw per step.
    pub fn bridge_refine(&self, stream: &mut RngStream) -> Self {
        let h = self.grid.h();
        let mut increments = Vec::with_capacity(2 * self.increments.len());
        for &dw in &self.increments {
            let (first, second) = bridge_split(dw, h, stream.standard_normal());
            increments.push(first);
            increments.push(second);
        }
        Self {
            grid: self.grid.with_steps(2 * self.grid.steps()),
            increments,
            seed_label: self.seed_label,
        }
    }

    /// `W(t_k)`, the left-to-right sum of the first `k` increments.
    pub fn value_at(&self, k: usize) -> Result<f64> {
        let n = self.grid.steps();
        if k > n {
            return Err(SdeError::Index { index: k, n });
        }
        Ok(self.increments[..k].iter().fold(0.0, |acc, &dw| acc + dw))
    }

    pub fn total_displacement(&self) -> f64 {
        self.increments.iter().fold(0.0, |acc, &dw| acc + dw)
    }

    /// `W` at every grid point, `n + 1` values starting at 0.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.increments.len() + 1);
        let mut acc = 0.0;
        w.push(acc);
        for &dw in &self.increments {
            acc += dw;
            w.push(acc);
        }
        w
    }

    /// Writes `k,t,dW,W`, one row per step, row `k` ending at `t_k`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "k,t,dW,W")?;
        let mut w = 0.0;
        for (i, &dw) in self.increments.iter().enumerate() {
            w += dw;
            let k = i + 1;
            writeln!(
                out,
                "{},{},{},{}",
                k,
                fmt_num(self.grid.time(k)),
                fmt_num(dw),
                fmt_num(w)
            )?;
        }
        Ok(())
    }
}

/// Coarsest power-of-two spacing, at most [`INCREMENT_QUANTUM`], that `x` is a multiple of.
fn spacing_of(x: f64) -> f64 {
    let mut q = INCREMENT_QUANTUM;
    while (x / q).fract() != 0.0 && q > f64::MIN_POSITIVE {
        q *= 0.5;
    }
    q
}

/// Splits increment `dw` over a step of size `h` into two half-step increments
/// `(dw/2 - sqrt(h) z/2, dw/2 + sqrt(h) z/2)`.
///
/// The first half is snapped to half the spacing `dw` lies on and the second
/// is `dw - first`. For lattice increments both subtractions are exact, so the
/// pair sums to `dw` bit for bit and `z = 0` gives two copies of `dw/2`.
pub fn bridge_split(dw: f64, h: f64, z: f64) -> (f64, f64) {
    let q = 0.5 * spacing_of(dw);
    let first = ((0.5 * dw - 0.5 * h.sqrt() * z) / q).round() * q;
    (first, dw - first)
}
