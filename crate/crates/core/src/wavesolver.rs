//! Leapfrog integration of the controlled, damped, anti-damped and free wave
//! equations.
//!
//! The three-level scheme
//!
//! ```text
//! (v^{k+1} - 2v^k + v^{k-1}) / dt² + c γ (v^{k+1} - v^{k-1}) / (2 dt) = Δ_h v^k - f(v^k) + 1_ω u
//! ```
//!
//! is advanced in its one-step kick–drift–kick form on `(v, v_t)`:
//!
//! ```text
//! w     = v_t + dt/2 (a(v) + p)        half-step velocity
//! v'    = v + dt w
//! v_t'  = w + dt/2 (a(v') + p)
//! ```
//!
//! where `p` is the per-step push: `u_k` for an open-loop control and `-c γ w`
//! for (anti-)damping, solved pointwise. The v-levels of this map are exactly
//! those of the three-level scheme with centered damping, and the conversion
//! from `(v, v_t)` to the level pair is the second-order Taylor start
//! `v^1 = v + dt v_t + dt²/2 (a(v) + p)`.
//!
//! The one-step map `S(dt, c)` satisfies `S(-dt, c) = S(dt, c)^{-1}` and
//! `R S(dt, c) R = S(-dt, -c)` with `R(v, v_t) = (v, -v_t)`, so free runs are
//! reversible to roundoff and the anti-damped flow is the velocity-flipped
//! inverse of the damped flow.

use crate::error::{Result, WaveError};
use crate::grid::{laplacian_into, Grid};
use crate::nonlinearity::Nonlinearity;
use crate::state::{ControlSignal, State};

/// Any nodal `|v|` above this aborts the integration.
pub const BLOWUP_THRESHOLD: f64 = 1e6;

/// Amplitude of the damping coefficient `γ = GAMMA · 1_ω`.
pub const GAMMA: f64 = 1.0;

#[derive(Debug, Clone, Copy)]
pub enum ForcingMode<'a> {
    Free,
    /// `u = -γ v_t`.
    Damped,
    /// `u = +γ v_t`.
    AntiDamped,
    Controlled(&'a ControlSignal),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeTag {
    Free,
    Damped,
    AntiDamped,
    Controlled,
}

impl ModeTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModeTag::Free => "free",
            ModeTag::Damped => "damped",
            ModeTag::AntiDamped => "anti_damped",
            ModeTag::Controlled => "controlled",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "free" => Some(ModeTag::Free),
            "damped" => Some(ModeTag::Damped),
            "anti_damped" => Some(ModeTag::AntiDamped),
            "controlled" => Some(ModeTag::Controlled),
            _ => None,
        }
    }
}

impl ForcingMode<'_> {
    pub fn tag(&self) -> ModeTag {
        match self {
            ForcingMode::Free => ModeTag::Free,
            ForcingMode::Damped => ModeTag::Damped,
            ForcingMode::AntiDamped => ModeTag::AntiDamped,
            ForcingMode::Controlled(_) => ModeTag::Controlled,
        }
    }
}

/// Time samples of a run.
///
/// `signal` holds the per-step forcing actually applied on the control region:
/// the input signal in controlled mode, the realized feedback `∓γ w` in
/// (anti-)damped mode, `None` in free mode. Samples in `states` are `stride`
/// steps apart; a non-recorded run keeps only its two endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<State>,
    pub mode: ModeTag,
    pub stride: usize,
    pub steps: usize,
    pub dt: f64,
    pub signal: Option<ControlSignal>,
}

impl Trajectory {
    pub fn first(&self) -> &State {
        &self.states[0]
    }

    pub fn last(&self) -> &State {
        self.states.last().expect("trajectory has at least one state")
    }

    pub fn duration(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    /// Every step was recorded.
    pub fn is_full(&self) -> bool {
        self.stride == 1 && self.states.len() == self.steps + 1
    }

    pub fn constant(state: State, mode: ModeTag, grid: &Grid) -> Self {
        Self {
            states: vec![state],
            mode,
            stride: 1,
            steps: 0,
            dt: grid.dt(),
            signal: match mode {
                ModeTag::Free => None,
                _ => Some(ControlSignal::empty(grid)),
            },
        }
    }

    /// Nodewise negation of every sample and of the recorded forcing.
    pub fn negated(&self) -> Self {
        Self {
            states: self.states.iter().map(State::negated).collect(),
            signal: self.signal.as_ref().map(ControlSignal::negated),
            ..self.clone()
        }
    }
}

/// Push applied on the control region during one step.
#[derive(Clone, Copy)]
pub(crate) enum Push<'a> {
    None,
    /// Friction `-c γ w` with `c = +1` damped, `c = -1` anti-damped.
    Friction(f64),
    /// Open-loop control values on the support columns.
    Signal(&'a [f64]),
}

/// Scratch buffers and the acceleration cache for one integration.
pub(crate) struct Kernel {
    pub n: usize,
    pub lo: usize,
    pub hi: usize,
    pub h: f64,
    /// Acceleration at the current level.
    pub a: Vec<f64>,
    pub w: Vec<f64>,
}

impl Kernel {
    pub fn new(grid: &Grid, h: f64) -> Self {
        let (lo, hi) = grid.support();
        Self {
            n: grid.n(),
            lo,
            hi,
            h,
            a: vec![0.0; grid.n()],
            w: vec![0.0; grid.n()],
        }
    }

    /// Advances `(v, vt)` by one step of size `h`. `self.a` must hold the
    /// acceleration at `v` (excluding the push) and is replaced by the one at
    /// the new level through `accel`. The push actually used on the support is
    /// copied into `realized` when given.
    pub fn step(
        &mut self,
        v: &mut [f64],
        vt: &mut [f64],
        push: Push<'_>,
        mut accel: impl FnMut(&[f64], &mut [f64]),
        realized: Option<&mut [f64]>,
    ) {
        let h = self.h;
        let half = 0.5 * h;
        let (lo, hi) = (self.lo, self.hi);

        for i in 0..lo {
            self.w[i] = vt[i] + half * self.a[i];
        }
        for i in hi..self.n {
            self.w[i] = vt[i] + half * self.a[i];
        }
        match push {
            Push::None => {
                for i in lo..hi {
                    self.w[i] = vt[i] + half * self.a[i];
                }
            }
            Push::Friction(c) => {
                let denom = 1.0 + c * GAMMA * half;
                for i in lo..hi {
                    self.w[i] = (vt[i] + half * self.a[i]) / denom;
                }
            }
            Push::Signal(u) => {
                for i in lo..hi {
                    self.w[i] = vt[i] + half * (self.a[i] + u[i - lo]);
                }
            }
        }

        for i in 0..self.n {
            v[i] += h * self.w[i];
        }
        accel(v, &mut self.a);

        for i in 0..lo {
            vt[i] = self.w[i] + half * self.a[i];
        }
        for i in hi..self.n {
            vt[i] = self.w[i] + half * self.a[i];
        }
        match push {
            Push::None => {
                for i in lo..hi {
                    vt[i] = self.w[i] + half * self.a[i];
                }
                if let Some(out) = realized {
                    out.iter_mut().for_each(|x| *x = 0.0);
                }
            }
            Push::Friction(c) => {
                let k = -c * GAMMA;
                for i in lo..hi {
                    vt[i] = self.w[i] + half * (self.a[i] + k * self.w[i]);
                }
                if let Some(out) = realized {
                    for i in lo..hi {
                        out[i - lo] = k * self.w[i];
                    }
                }
            }
            Push::Signal(u) => {
                for i in lo..hi {
                    vt[i] = self.w[i] + half * (self.a[i] + u[i - lo]);
                }
                if let Some(out) = realized {
                    out.copy_from_slice(u);
                }
            }
        }
    }
}

/// `a = Δ_h v - f(x, v)`.
pub(crate) fn nonlinear_accel<'a>(
    grid: &'a Grid,
    nl: &'a Nonlinearity,
) -> impl FnMut(&[f64], &mut [f64]) + 'a {
    let dx = grid.dx();
    move |v: &[f64], out: &mut [f64]| {
        laplacian_into(v, dx, out);
        for (i, (o, &s)) in out.iter_mut().zip(v).enumerate() {
            *o -= nl.f(grid.x(i), s);
        }
    }
}

fn check_signal(grid: &Grid, signal: &ControlSignal, steps: usize) -> Result<()> {
    if signal.n() != grid.n() || signal.support() != grid.support() {
        return Err(WaveError::Dimension {
            expected: grid.n(),
            got: signal.n(),
        });
    }
    if (signal.dt() - grid.dt()).abs() > 1e-14 * grid.dt() {
        return Err(WaveError::Config(format!(
            "signal dt {} differs from grid dt {}",
            signal.dt(),
            grid.dt()
        )));
    }
    if signal.steps() < steps {
        return Err(WaveError::Argument(format!(
            "signal has {} steps, integration needs {steps}",
            signal.steps()
        )));
    }
    Ok(())
}

fn blowup_check(v: &[f64], t: f64) -> Result<()> {
    let m = v.iter().fold(0.0f64, |m, x| if x.is_nan() { f64::INFINITY } else { m.max(x.abs()) });
    if m > BLOWUP_THRESHOLD || !m.is_finite() {
        return Err(WaveError::BlowUp { t, max_abs: m });
    }
    Ok(())
}

/// Step count for a span, rejecting spans shorter than one step.
pub fn steps_for_span(t_span: f64, grid: &Grid) -> Result<usize> {
    if !(t_span.is_finite()) || t_span < grid.dt() * (1.0 - 1e-9) {
        return Err(WaveError::Argument(format!(
            "time span {t_span} shorter than one step {}",
            grid.dt()
        )));
    }
    Ok(grid.steps_in(t_span))
}

fn run(
    state: &State,
    mode: ForcingMode<'_>,
    steps: usize,
    backward: bool,
    grid: &Grid,
    nl: &Nonlinearity,
    stride: Option<usize>,
) -> Result<Trajectory> {
    grid.check_len(state.len())?;
    state.check_finite()?;
    if let ForcingMode::Controlled(sig) = mode {
        check_signal(grid, sig, steps)?;
    }
    let dt = grid.dt();
    let h = if backward { -dt } else { dt };
    let mut kernel = Kernel::new(grid, h);
    let mut accel = nonlinear_accel(grid, nl);
    let mut v = state.v.clone();
    let mut vt = state.vt.clone();
    accel(&v, &mut kernel.a);

    let (lo, hi) = grid.support();
    let tag = mode.tag();
    let mut realized = match tag {
        ModeTag::Damped | ModeTag::AntiDamped => Some(ControlSignal::zeros(grid, steps)),
        _ => None,
    };
    let mut states = vec![state.clone()];
    let mut row = vec![0.0; hi - lo];
    let t0 = state.t;
    for k in 0..steps {
        let push = match mode {
            ForcingMode::Free => Push::None,
            ForcingMode::Damped => Push::Friction(1.0),
            ForcingMode::AntiDamped => Push::Friction(-1.0),
            ForcingMode::Controlled(sig) => {
                let idx = if backward { sig.steps() - 1 - k } else { k };
                Push::Signal(sig.row(idx))
            }
        };
        // With h < 0 the same friction sign gives the exact inverse map.
        let rec = realized.as_mut().map(|_| row.as_mut_slice());
        kernel.step(&mut v, &mut vt, push, &mut accel, rec);
        if let Some(sig) = realized.as_mut() {
            let idx = if backward { steps - 1 - k } else { k };
            sig.row_mut(idx).copy_from_slice(&row);
        }
        let t = t0 + h * (k + 1) as f64;
        blowup_check(&v, t)?;
        let keep = match stride {
            Some(s) => (k + 1) % s == 0 || k + 1 == steps,
            None => k + 1 == steps,
        };
        if keep {
            if vt.iter().any(|x| !x.is_finite()) {
                return Err(WaveError::BlowUp {
                    t,
                    max_abs: f64::INFINITY,
                });
            }
            states.push(State {
                v: v.clone(),
                vt: vt.clone(),
                t,
            });
        }
    }
    let signal = match mode {
        ForcingMode::Controlled(sig) => Some(sig.clone()),
        _ => realized,
    };
    Ok(Trajectory {
        states,
        mode: tag,
        stride: stride.unwrap_or(steps.max(1)),
        steps,
        dt,
        signal,
    })
}

/// One leapfrog step.
pub fn step(
    state: &State,
    mode: ForcingMode<'_>,
    grid: &Grid,
    nl: &Nonlinearity,
) -> Result<State> {
    let traj = run(state, mode, 1, false, grid, nl, None)?;
    Ok(traj.states.into_iter().last().expect("one step recorded"))
}

/// Inverse of [`step`]: one step with `dt` negated.
pub fn step_back(
    state: &State,
    mode: ForcingMode<'_>,
    grid: &Grid,
    nl: &Nonlinearity,
) -> Result<State> {
    let traj = run(state, mode, 1, true, grid, nl, None)?;
    Ok(traj.states.into_iter().last().expect("one step recorded"))
}

/// Integrates forward over `t_span` (whole steps); records every state when `record`.
pub fn integrate(
    state: &State,
    mode: ForcingMode<'_>,
    t_span: f64,
    grid: &Grid,
    nl: &Nonlinearity,
    record: bool,
) -> Result<Trajectory> {
    let steps = steps_for_span(t_span, grid)?;
    run(state, mode, steps, false, grid, nl, record.then_some(1))
}

/// Forward integration over an exact number of steps, sampling every `stride` steps.
pub fn integrate_steps(
    state: &State,
    mode: ForcingMode<'_>,
    steps: usize,
    grid: &Grid,
    nl: &Nonlinearity,
    stride: Option<usize>,
) -> Result<Trajectory> {
    if stride == Some(0) {
        return Err(WaveError::Argument("stride must be positive".into()));
    }
    run(state, mode, steps, false, grid, nl, stride)
}

/// Integrates with `dt` negated. A controlled signal is consumed last row
/// first, so that it undoes the forward run that used it.
pub fn integrate_backward(
    state: &State,
    mode: ForcingMode<'_>,
    t_span: f64,
    grid: &Grid,
    nl: &Nonlinearity,
) -> Result<Trajectory> {
    let steps = steps_for_span(t_span, grid)?;
    run(state, mode, steps, true, grid, nl, Some(1))
}

/// Backward integration over an exact number of steps.
pub fn integrate_backward_steps(
    state: &State,
    mode: ForcingMode<'_>,
    steps: usize,
    grid: &Grid,
    nl: &Nonlinearity,
    stride: Option<usize>,
) -> Result<Trajectory> {
    run(state, mode, steps, true, grid, nl, stride)
}

/// Open-loop control that runs a damped trajectory backward in time.
///
/// Only the endpoints and the recorded feedback are used, so any stride works.
///
/// For a damped run `W_0 .. W_N` on `[t_a, t_b]`, returns `R W_N`, the signal
/// `u_j = γ w_j` where `w_j` is the half-step velocity of the time-reversed
/// run (equivalently, the recorded damped feedback in reverse order), and
/// `R W_0`. As a function of time this is `u(t) = -γ v_t(t_b - t)` for the damped
/// solution `v`, i.e. `γ` times the velocity of the reversed solution.
pub fn reversed_control(traj: &Trajectory) -> Result<(State, ControlSignal, State)> {
    if traj.mode != ModeTag::Damped {
        return Err(WaveError::Argument(format!(
            "reversed control needs a damped trajectory, got {}",
            traj.mode.as_str()
        )));
    }
    let signal = traj
        .signal
        .as_ref()
        .ok_or_else(|| WaveError::Argument("damped trajectory without recorded feedback".into()))?;
    if signal.steps() != traj.steps {
        return Err(WaveError::Argument(format!(
            "feedback covers {} of {} steps",
            signal.steps(),
            traj.steps
        )));
    }
    let signal = signal.reversed();
    let initial = traj.last().flip_velocity().with_time(0.0);
    let target = traj.first().flip_velocity().with_time(traj.duration());
    Ok((initial, signal, target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{l2_distance, step_energy, x_distance};
    use std::f64::consts::PI;

    fn sine_state(grid: &Grid, amp: f64) -> State {
        State::at_rest(grid.sample(|x| amp * (PI * x).sin()))
    }

    #[test]
    fn zero_is_fixed() {
        let g = Grid::with_defaults(63).unwrap();
        let nl = Nonlinearity::cubic(15.0);
        let s = step(&State::zero(63), ForcingMode::Free, &g, &nl).unwrap();
        assert!(s.v.iter().chain(&s.vt).all(|&x| x == 0.0));
    }

    #[test]
    fn linear_period() {
        let g = Grid::with_defaults(255).unwrap();
        let nl = Nonlinearity::linear();
        let s0 = sine_state(&g, 1.0);
        let tr = integrate(&s0, ForcingMode::Free, 2.0, &g, &nl, false).unwrap();
        let err = l2_distance(tr.last(), &s0, &g);
        assert!(err < 1e-3, "{err}");
        assert!((tr.last().t - 2.0).abs() < 1e-12);
    }

    #[test]
    fn round_trip_is_exact_to_roundoff() {
        let g = Grid::with_defaults(127).unwrap();
        let nl = Nonlinearity::cubic(15.0);
        let s0 = State::new(
            g.sample(|x| 0.8 * (PI * x).sin() + 0.1 * (3.0 * PI * x).sin()),
            g.sample(|x| 0.5 * (2.0 * PI * x).sin()),
            0.0,
        )
        .unwrap();
        let fwd = integrate(&s0, ForcingMode::Free, 5.0, &g, &nl, false).unwrap();
        let back = integrate_backward(fwd.last(), ForcingMode::Free, 5.0, &g, &nl).unwrap();
        assert!(l2_distance(back.last(), &s0, &g) < 1e-9);
        assert!(back.last().t.abs() < 1e-12);
    }

    #[test]
    fn single_step_identity() {
        let g = Grid::with_defaults(31).unwrap();
        let nl = Nonlinearity::cubic(15.0);
        let s0 = sine_state(&g, 0.3);
        let tr = integrate(&s0, ForcingMode::Damped, g.dt(), &g, &nl, true).unwrap();
        assert_eq!(tr.states.len(), 2);
        assert_eq!(tr.states[1], step(&s0, ForcingMode::Damped, &g, &nl).unwrap());
        assert!(integrate(&s0, ForcingMode::Damped, 0.5 * g.dt(), &g, &nl, true).is_err());
    }

    #[test]
    fn zero_control_equals_free() {
        let g = Grid::with_defaults(63).unwrap();
        let nl = Nonlinearity::cubic(15.0);
        let s0 = sine_state(&g, 0.4);
        let steps = g.steps_in(1.0);
        let sig = ControlSignal::zeros(&g, steps);
        let a = integrate(&s0, ForcingMode::Free, 1.0, &g, &nl, true).unwrap();
        let b = integrate(&s0, ForcingMode::Controlled(&sig), 1.0, &g, &nl, true).unwrap();
        assert_eq!(a.states, b.states);
    }

    #[test]
    fn damped_energy_is_non_increasing() {
        let g = Grid::with_defaults(127).unwrap();
        let nl = Nonlinearity::cubic(15.0);
        let s0 = State::new(
            g.sample(|x| 0.9 * (PI * x).sin() - 0.3 * (4.0 * PI * x).sin()),
            g.sample(|x| (2.0 * PI * x).sin()),
            0.0,
        )
        .unwrap();
        let tr = integrate(&s0, ForcingMode::Damped, 3.0, &g, &nl, true).unwrap();
        let mut prev = step_energy(&tr.states[0], &tr.states[1], g.dt(), &nl, &g).unwrap();
        for pair in tr.states[1..].windows(2) {
            let e = step_energy(&pair[0], &pair[1], g.dt(), &nl, &g).unwrap();
            assert!(e <= prev + 1e-10 * (1.0 + prev.abs()), "{e} > {prev}");
            prev = e;
        }
    }

    #[test]
    fn anti_damped_is_flipped_inverse_of_damped() {
        let g = Grid::with_defaults(63).unwrap();
        let nl = Nonlinearity::cubic(15.0);
        let w = State::new(
            g.sample(|x| 0.7 * (PI * x).sin()),
            g.sample(|x| 0.4 * (3.0 * PI * x).sin() + x * (1.0 - x)),
            0.0,
        )
        .unwrap();
        let lhs = step(&w.flip_velocity(), ForcingMode::AntiDamped, &g, &nl).unwrap();
        let rhs = step_back(&w, ForcingMode::Damped, &g, &nl).unwrap().flip_velocity();
        assert!(l2_distance(&lhs, &rhs, &g) < 1e-13);
    }

    #[test]
    fn reversed_control_at_equilibrium_is_zero() {
        let g = Grid::with_defaults(31).unwrap();
        let nl = Nonlinearity::cubic(15.0);
        let tr = integrate(&State::zero(31), ForcingMode::Damped, 0.5, &g, &nl, true).unwrap();
        let (init, sig, target) = reversed_control(&tr).unwrap();
        assert!(sig.is_zero());
        assert_eq!(init.v, target.v);
        assert_eq!(init.vt, target.vt);
    }

    #[test]
    fn reversed_control_steers_back() {
        let g = Grid::with_defaults(127).unwrap();
        let nl = Nonlinearity::cubic(15.0);
        let tr = integrate(&sine_state(&g, 0.5), ForcingMode::Damped, 2.0, &g, &nl, true).unwrap();
        let (init, sig, target) = reversed_control(&tr).unwrap();
        let (lo, hi) = g.support();
        for k in 0..sig.steps() {
            for i in (0..lo).chain(hi..g.n()) {
                assert_eq!(sig.value(k, i), 0.0);
            }
        }
        let back = integrate_steps(&init, ForcingMode::Controlled(&sig), sig.steps(), &g, &nl, None)
            .unwrap();
        assert!(x_distance(back.last(), &target, &g) < 1e-8);
    }

    #[test]
    fn reversed_control_rejects_bad_input() {
        let g = Grid::with_defaults(31).unwrap();
        let nl = Nonlinearity::cubic(15.0);
        let s = sine_state(&g, 0.5);
        let free = integrate(&s, ForcingMode::Free, 0.2, &g, &nl, true).unwrap();
        assert!(reversed_control(&free).is_err());
        let mut cut = integrate_steps(&s, ForcingMode::Damped, 20, &g, &nl, Some(5)).unwrap();
        assert!(reversed_control(&cut).is_ok());
        cut.signal = cut.signal.map(|sig| sig.slice(0, 10));
        assert!(reversed_control(&cut).is_err());
    }

    #[test]
    fn blowup_is_reported() {
        let g = Grid::with_defaults(31).unwrap();
        let nl = Nonlinearity::cubic(15.0);
        let s = State::at_rest(vec![2000.0; 31]);
        let err = integrate(&s, ForcingMode::Free, 1.0, &g, &nl, false).unwrap_err();
        assert!(matches!(err, WaveError::BlowUp { .. }));
    }
}
