//! Phase-space states, the energy functional, and the X = H¹₀ × L² geometry.

use crate::error::{Result, WaveError};
use crate::grid::{h1_inner, l2_inner, Grid};
use crate::nonlinearity::Nonlinearity;

/// Displacement and velocity at the interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub v: Vec<f64>,
    pub vt: Vec<f64>,
    pub t: f64,
}

impl State {
    pub fn new(v: Vec<f64>, vt: Vec<f64>, t: f64) -> Result<Self> {
        if v.len() != vt.len() {
            return Err(WaveError::Dimension {
                expected: v.len(),
                got: vt.len(),
            });
        }
        let s = Self { v, vt, t };
        s.check_finite()?;
        Ok(s)
    }

    pub fn zero(n: usize) -> Self {
        Self {
            v: vec![0.0; n],
            vt: vec![0.0; n],
            t: 0.0,
        }
    }

    /// `(v, 0)` at time zero.
    pub fn at_rest(v: Vec<f64>) -> Self {
        let n = v.len();
        Self {
            v,
            vt: vec![0.0; n],
            t: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    /// `(v, -v_t)`, same time stamp.
    pub fn flip_velocity(&self) -> Self {
        Self {
            v: self.v.clone(),
            vt: self.vt.iter().map(|x| -x).collect(),
            t: self.t,
        }
    }

    pub fn negated(&self) -> Self {
        Self {
            v: self.v.iter().map(|x| -x).collect(),
            vt: self.vt.iter().map(|x| -x).collect(),
            t: self.t,
        }
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    pub fn sub(&self, other: &State) -> State {
        State {
            v: self.v.iter().zip(&other.v).map(|(a, b)| a - b).collect(),
            vt: self.vt.iter().zip(&other.vt).map(|(a, b)| a - b).collect(),
            t: self.t,
        }
    }

    pub fn add(&self, other: &State) -> State {
        State {
            v: self.v.iter().zip(&other.v).map(|(a, b)| a + b).collect(),
            vt: self.vt.iter().zip(&other.vt).map(|(a, b)| a + b).collect(),
            t: self.t,
        }
    }

    pub fn scaled(&self, c: f64) -> State {
        State {
            v: self.v.iter().map(|a| c * a).collect(),
            vt: self.vt.iter().map(|a| c * a).collect(),
            t: self.t,
        }
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &State) -> State {
        State {
            v: self.v.iter().zip(&other.v).map(|(a, b)| a + c * b).collect(),
            vt: self.vt.iter().zip(&other.vt).map(|(a, b)| a + c * b).collect(),
            t: self.t,
        }
    }

    pub fn max_abs_v(&self) -> f64 {
        self.v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.v.iter().chain(&self.vt).all(|x| x.is_finite()) && self.t.is_finite() {
            Ok(())
        } else {
            Err(WaveError::Numeric("state".into()))
        }
    }
}

/// Energy inner product of X: `<∇a, ∇c> + <b, d>`.
pub fn x_inner(p: &State, q: &State, grid: &Grid) -> f64 {
    h1_inner(&p.v, &q.v, grid) + l2_inner(&p.vt, &q.vt, grid)
}

pub fn x_norm(s: &State, grid: &Grid) -> f64 {
    x_inner(s, s, grid).max(0.0).sqrt()
}

pub fn x_distance(a: &State, b: &State, grid: &Grid) -> f64 {
    x_norm(&a.sub(b), grid)
}

/// Plain L² distance of the displacement and velocity blocks.
pub fn l2_distance(a: &State, b: &State, grid: &Grid) -> f64 {
    let d = a.sub(b);
    (l2_inner(&d.v, &d.v, grid) + l2_inner(&d.vt, &d.vt, grid)).sqrt()
}

/// `E(V) = dx Σ [½ v_t² + F(x, v)] + dx Σ_edges ½ ((v_{i+1} - v_i)/dx)²`.
pub fn energy(state: &State, nl: &Nonlinearity, grid: &Grid) -> Result<f64> {
    grid.check_len(state.len())?;
    state.check_finite()?;
    let dx = grid.dx();
    let mut pot = 0.0;
    for (i, (&v, &vt)) in state.v.iter().zip(&state.vt).enumerate() {
        pot += 0.5 * vt * vt + nl.primitive(grid.x(i), v);
    }
    let e = dx * pot + 0.5 * h1_inner(&state.v, &state.v, grid);
    if e.is_finite() {
        Ok(e)
    } else {
        Err(WaveError::Numeric("energy".into()))
    }
}

/// Discrete energy of the leapfrog step between consecutive samples `a` (time
/// `t_k`) and `b` (time `t_k + dt`):
///
/// `dx Σ [½ ((b - a)/dt)² + ½ (F(a) + F(b))] + ½ <∇a, ∇b>`.
///
/// The level energy [`energy`] oscillates at O(dt²) under the scheme; this
/// staggered form telescopes exactly in the linear part, so along damped runs it
/// decreases step by step up to the third-order remainder of the nonlinearity.
/// It agrees with [`energy`] to O(dt²).
pub fn step_energy(a: &State, b: &State, dt: f64, nl: &Nonlinearity, grid: &Grid) -> Result<f64> {
    grid.check_len(a.len())?;
    grid.check_len(b.len())?;
    let mut acc = 0.0;
    for i in 0..grid.n() {
        let w = (b.v[i] - a.v[i]) / dt;
        let x = grid.x(i);
        acc += 0.5 * w * w + 0.5 * (nl.primitive(x, a.v[i]) + nl.primitive(x, b.v[i]));
    }
    let e = grid.dx() * acc + 0.5 * h1_inner(&a.v, &b.v, grid);
    if e.is_finite() {
        Ok(e)
    } else {
        Err(WaveError::Numeric("step energy".into()))
    }
}

/// Coordinates in the modal plane spanned by `√2 sin(πx)` (the first Dirichlet mode).
pub fn modal_projection(state: &State, grid: &Grid) -> (f64, f64) {
    let mode = grid.sample(|x| std::f64::consts::SQRT_2 * (std::f64::consts::PI * x).sin());
    (
        l2_inner(&state.v, &mode, grid),
        l2_inner(&state.vt, &mode, grid),
    )
}

/// Space-time control on the step lattice: `values[k]` acts on `[t_k, t_{k+1})`.
///
/// Only the columns inside the control support are stored; every other entry is
/// zero by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSignal {
    n: usize,
    dt: f64,
    lo: usize,
    hi: usize,
    data: Vec<f64>,
}

impl ControlSignal {
    pub fn zeros(grid: &Grid, steps: usize) -> Self {
        let (lo, hi) = grid.support();
        Self {
            n: grid.n(),
            dt: grid.dt(),
            lo,
            hi,
            data: vec![0.0; steps * (hi - lo)],
        }
    }

    pub fn empty(grid: &Grid) -> Self {
        Self::zeros(grid, 0)
    }

    /// Builds a signal from full-width rows; entries outside the region must vanish.
    pub fn from_rows(grid: &Grid, rows: &[Vec<f64>]) -> Result<Self> {
        let mut out = Self::zeros(grid, rows.len());
        let mask = grid.mask();
        for (k, row) in rows.iter().enumerate() {
            grid.check_len(row.len())?;
            for (i, &u) in row.iter().enumerate() {
                if !u.is_finite() {
                    return Err(WaveError::Numeric("control value".into()));
                }
                if mask[i] == 0.0 && u != 0.0 {
                    return Err(WaveError::Argument(format!(
                        "control value {u} at node {i} outside the control region"
                    )));
                }
            }
            let (lo, hi) = (out.lo, out.hi);
            out.row_mut(k).copy_from_slice(&row[lo..hi]);
        }
        Ok(out)
    }

    pub(crate) fn from_support_rows(grid: &Grid, data: Vec<f64>) -> Self {
        let (lo, hi) = grid.support();
        debug_assert_eq!(data.len() % (hi - lo).max(1), 0);
        Self {
            n: grid.n(),
            dt: grid.dt(),
            lo,
            hi,
            data,
        }
    }

    pub fn steps(&self) -> usize {
        self.data.len() / self.width()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn duration(&self) -> f64 {
        self.steps() as f64 * self.dt
    }

    pub fn support(&self) -> (usize, usize) {
        (self.lo, self.hi)
    }

    fn width(&self) -> usize {
        self.hi - self.lo
    }

    /// Values on the support columns at step `k`.
    pub fn row(&self, k: usize) -> &[f64] {
        let w = self.width();
        &self.data[k * w..(k + 1) * w]
    }

    pub fn row_mut(&mut self, k: usize) -> &mut [f64] {
        let w = self.width();
        &mut self.data[k * w..(k + 1) * w]
    }

    pub fn value(&self, k: usize, i: usize) -> f64 {
        if i >= self.lo && i < self.hi {
            self.row(k)[i - self.lo]
        } else {
            0.0
        }
    }

    pub fn full_row(&self, k: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        out[self.lo..self.hi].copy_from_slice(self.row(k));
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&u| u == 0.0)
    }

    pub fn push_row(&mut self, support_row: &[f64]) {
        debug_assert_eq!(support_row.len(), self.width());
        self.data.extend_from_slice(support_row);
    }

    pub fn append(&mut self, other: &ControlSignal) -> Result<()> {
        if other.n != self.n || other.lo != self.lo || other.hi != self.hi {
            return Err(WaveError::Dimension {
                expected: self.n,
                got: other.n,
            });
        }
        if (other.dt - self.dt).abs() > 1e-15 * self.dt {
            return Err(WaveError::Argument("time steps differ".into()));
        }
        self.data.extend_from_slice(&other.data);
        Ok(())
    }

    /// Rows `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        let w = self.width();
        let end = end.min(self.steps());
        let start = start.min(end);
        Self {
            data: self.data[start * w..end * w].to_vec(),
            ..*self
        }
    }

    /// Rows in reverse order.
    pub fn reversed(&self) -> Self {
        let w = self.width();
        let mut data = Vec::with_capacity(self.data.len());
        for k in (0..self.steps()).rev() {
            data.extend_from_slice(&self.data[k * w..(k + 1) * w]);
        }
        Self { data, ..*self }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            data: self.data.iter().map(|u| c * u).collect(),
            ..*self
        }
    }

    pub fn negated(&self) -> Self {
        self.scaled(-1.0)
    }

    /// `Σ_k dt (dx Σ_i u_ki²)^{1/2}`.
    pub fn l1_l2_norm(&self, dx: f64) -> f64 {
        (0..self.steps())
            .map(|k| self.dt * (dx * self.row(k).iter().map(|u| u * u).sum::<f64>()).sqrt())
            .sum()
    }

    /// `max_k (dx Σ_i u_ki²)^{1/2}`.
    pub fn linf_l2_norm(&self, dx: f64) -> f64 {
        (0..self.steps())
            .map(|k| (dx * self.row(k).iter().map(|u| u * u).sum::<f64>()).sqrt())
            .fold(0.0, f64::max)
    }

    /// `(dt dx Σ_{k,i} u_ki²)^{1/2}`, the L²(ω × (0, T)) norm.
    pub fn l2_norm(&self, dx: f64) -> f64 {
        (self.dt * dx * self.data.iter().map(|u| u * u).sum::<f64>()).sqrt()
    }

    pub(crate) fn support_data(&self) -> &[f64] {
        &self.data
    }
}
