//! Uniform Dirichlet mesh on (0, 1) with a sharply sampled control region.

use crate::error::{Result, WaveError};

/// Default ratio dt / dx.
pub const DEFAULT_CFL: f64 = 0.5;

/// Open interval (a, b) inside (0, 1) where the control and the damping act.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlRegion {
    pub a: f64,
    pub b: f64,
}

impl ControlRegion {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a < 0.0 || b > 1.0 || b <= a {
            return Err(WaveError::Config(format!(
                "control region ({a}, {b}) must satisfy 0 <= a < b <= 1"
            )));
        }
        Ok(Self { a, b })
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.a && x < self.b
    }

    /// Geometric control time: every ray of unit speed meets the region within it.
    /// Equals `2a` when the region touches the right endpoint.
    pub fn control_time(&self) -> f64 {
        2.0 * self.a.max(1.0 - self.b)
    }
}

impl Default for ControlRegion {
    fn default() -> Self {
        Self { a: 0.7, b: 1.0 }
    }
}

/// Interior nodes `x_i = (i + 1) dx`, `i = 0..n`; boundary values are implicit zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    n: usize,
    dx: f64,
    dt: f64,
    omega: ControlRegion,
    mask: Vec<f64>,
    support: (usize, usize),
}

impl Grid {
    pub fn new(n_interior: usize, cfl_factor: f64, omega: ControlRegion) -> Result<Self> {
        if n_interior < 2 {
            return Err(WaveError::Config(format!(
                "need at least 2 interior nodes, got {n_interior}"
            )));
        }
        if !(cfl_factor > 0.0 && cfl_factor <= 1.0) {
            return Err(WaveError::Config(format!(
                "cfl factor {cfl_factor} must lie in (0, 1]"
            )));
        }
        let dx = 1.0 / (n_interior as f64 + 1.0);
        let dt = cfl_factor * dx;
        let mask: Vec<f64> = (0..n_interior)
            .map(|i| {
                if omega.contains((i as f64 + 1.0) * dx) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        let first = mask.iter().position(|&m| m > 0.0);
        let last = mask.iter().rposition(|&m| m > 0.0);
        let support = match (first, last) {
            (Some(lo), Some(hi)) => (lo, hi + 1),
            _ => {
                return Err(WaveError::Config(format!(
                    "control region ({}, {}) contains no grid node at n = {n_interior}",
                    omega.a, omega.b
                )))
            }
        };
        Ok(Self {
            n: n_interior,
            dx,
            dt,
            omega,
            mask,
            support,
        })
    }

    /// Grid with the default region (0.7, 1) and CFL factor 0.5.
    pub fn with_defaults(n_interior: usize) -> Result<Self> {
        Self::new(n_interior, DEFAULT_CFL, ControlRegion::default())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn omega(&self) -> ControlRegion {
        self.omega
    }

    /// 0/1 samples of the indicator of the control region.
    pub fn mask(&self) -> &[f64] {
        &self.mask
    }

    /// Half-open node range `[lo, hi)` where the mask equals one.
    pub fn support(&self) -> (usize, usize) {
        self.support
    }

    pub fn x(&self, i: usize) -> f64 {
        (i as f64 + 1.0) * self.dx
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.x(i))
    }

    /// Samples `g` at every interior node.
    pub fn sample(&self, g: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes().map(g).collect()
    }

    /// Number of whole steps in `t_span`, rounded to the nearest step when within roundoff.
    pub fn steps_in(&self, t_span: f64) -> usize {
        let ratio = t_span / self.dt;
        let nearest = ratio.round();
        if (ratio - nearest).abs() < 1e-9 * ratio.max(1.0) {
            nearest as usize
        } else {
            ratio.floor() as usize
        }
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(WaveError::Dimension {
                expected: self.n,
                got: len,
            });
        }
        Ok(())
    }
}

/// Discrete Dirichlet Laplacian `(f[i-1] - 2 f[i] + f[i+1]) / dx^2` with zero ghosts.
pub fn apply_laplacian(field: &[f64], grid: &Grid) -> Result<Vec<f64>> {
    grid.check_len(field.len())?;
    let mut out = vec![0.0; field.len()];
    laplacian_into(field, grid.dx(), &mut out);
    Ok(out)
}

pub(crate) fn laplacian_into(field: &[f64], dx: f64, out: &mut [f64]) {
    let n = field.len();
    let inv = 1.0 / (dx * dx);
    for i in 0..n {
        let left = if i > 0 { field[i - 1] } else { 0.0 };
        let right = if i + 1 < n { field[i + 1] } else { 0.0 };
        out[i] = (left - 2.0 * field[i] + right) * inv;
    }
}

/// `dx * sum a_i b_i`.
pub fn l2_inner(a: &[f64], b: &[f64], grid: &Grid) -> f64 {
    grid.dx() * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
}

/// `dx * sum_edges (a_{i+1}-a_i)(b_{i+1}-b_i) / dx^2`, equal to `<-Δ_h a, b>`.
pub fn h1_inner(a: &[f64], b: &[f64], grid: &Grid) -> f64 {
    let n = a.len();
    let mut acc = 0.0;
    for i in 0..=n {
        let da = if i < n { a[i] } else { 0.0 } - if i > 0 { a[i - 1] } else { 0.0 };
        let db = if i < n { b[i] } else { 0.0 } - if i > 0 { b[i - 1] } else { 0.0 };
        acc += da * db;
    }
    acc / grid.dx()
}
