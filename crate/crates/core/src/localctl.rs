//! Exact local control near an equilibrium.
//!
//! The linearized problem `h_tt - Δ_h h + q h = 1_ω u + s` is solved by a
//! Krylov method on the control Gramian: the control is `u = L* p` where `L` maps a
//! control to the endpoint it produces from rest, `L*` is its exact adjoint for
//! the discrete step map (control space with the `dt dx` weights, endpoint
//! space with the X inner product) and `Λ = L L*` is self-adjoint and
//! nonnegative in X. The nonlinear remainder is absorbed by Picard iteration on
//! the source term.

use crate::equilibria::{potential, Equilibrium};
use crate::error::{Result, WaveError};
use crate::grid::{laplacian_into, Grid};
use crate::nonlinearity::Nonlinearity;
use crate::par;
use crate::state::{x_distance, x_inner, x_norm, ControlSignal, State};
use crate::wavesolver::{integrate_steps, ForcingMode, Kernel, Push};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Margin added to the geometric control time for the default horizon.
pub const HORIZON_MARGIN: f64 = 0.8;
pub const HUM_TOL: f64 = 1e-6;
pub const HUM_MAX_ITER: usize = 1000;
/// The Gramian solve stops as stagnated when 50 iterations reduce the residual by less than this factor.
pub const STAGNATION_FACTOR: f64 = 1e-2;
pub const STAGNATION_WINDOW: usize = 50;
pub const RADIUS_PROBES: [f64; 6] = [0.2, 0.1, 0.05, 0.025, 0.0125, 0.00625];
pub const CALIBRATION_PAIRS: usize = 5;

/// Default horizon `2 max(a, 1 - b) + 0.8`.
pub fn default_horizon(grid: &Grid) -> f64 {
    grid.omega().control_time() + HORIZON_MARGIN
}

/// Per-level forcing `s^j`, `j = 0..=steps`, on every node.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceTerm {
    n: usize,
    data: Vec<f64>,
}

impl SourceTerm {
    pub fn zeros(n: usize, levels: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * levels],
        }
    }

    pub fn levels(&self) -> usize {
        self.data.len() / self.n.max(1)
    }

    pub fn level(&self, j: usize) -> &[f64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    pub fn level_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.n..(j + 1) * self.n]
    }
}

#[derive(Debug, Clone)]
pub struct LinearControlProblem {
    pub q: Vec<f64>,
    pub horizon: f64,
    pub r0: State,
    pub r1: State,
    pub source: Option<SourceTerm>,
}

impl LinearControlProblem {
    pub fn new(q: Vec<f64>, horizon: f64, r0: State, r1: State) -> Self {
        Self {
            q,
            horizon,
            r0,
            r1,
            source: None,
        }
    }

    fn validate(&self, grid: &Grid) -> Result<usize> {
        grid.check_len(self.q.len())?;
        grid.check_len(self.r0.len())?;
        grid.check_len(self.r1.len())?;
        let tgcc = grid.omega().control_time();
        if !(self.horizon >= tgcc) {
            return Err(WaveError::Argument(format!(
                "horizon {} below the geometric control time {tgcc}",
                self.horizon
            )));
        }
        let steps = grid.steps_in(self.horizon);
        if let Some(s) = &self.source {
            if s.n != grid.n() || s.levels() != steps + 1 {
                return Err(WaveError::Argument(format!(
                    "source has {} levels, expected {}",
                    s.levels(),
                    steps + 1
                )));
            }
        }
        Ok(steps)
    }
}

#[derive(Debug, Clone)]
pub struct ControlReport {
    pub control: ControlSignal,
    /// X distance to the target reached by a separate forward simulation.
    pub endpoint_residual: f64,
    pub cg_iterations: usize,
    pub fixed_point_iterations: usize,
    pub l1_l2_norm: f64,
    pub l2_norm: f64,
    /// Verified endpoint residual after each Picard step.
    pub residual_history: Vec<f64>,
}

impl ControlReport {
    fn new(control: ControlSignal, endpoint_residual: f64, cg: usize, picard: usize, grid: &Grid) -> Self {
        Self {
            l1_l2_norm: control.l1_l2_norm(grid.dx()),
            l2_norm: control.l2_norm(grid.dx()),
            control,
            endpoint_residual,
            cg_iterations: cg,
            fixed_point_iterations: picard,
            residual_history: Vec::new(),
        }
    }
}

/// `out = Δ_h a - q a`.
fn apply_k(q: &[f64], dx: f64, a: &[f64], out: &mut [f64]) {
    laplacian_into(a, dx, out);
    for i in 0..a.len() {
        out[i] -= q[i] * a[i];
    }
}

/// The linear step map in explicit kick–drift–kick form, with control on
/// both half kicks and the source of the level at each kick.
fn model_forward(
    q: &[f64],
    y0: &State,
    control: Option<&ControlSignal>,
    source: Option<&SourceTerm>,
    steps: usize,
    grid: &Grid,
) -> State {
    let n = grid.n();
    let (dt, dx) = (grid.dt(), grid.dx());
    let half = 0.5 * dt;
    let (lo, _) = grid.support();
    let mut a = y0.v.clone();
    let mut b = y0.vt.clone();
    let mut ka = vec![0.0; n];
    let force = |k: usize, j: usize, i: usize| -> f64 {
        let mut f = 0.0;
        if let Some(u) = control {
            let row = u.row(k);
            if i >= lo && i < lo + row.len() {
                f += row[i - lo];
            }
        }
        if let Some(s) = source {
            f += s.level(j)[i];
        }
        f
    };
    apply_k(q, dx, &a, &mut ka);
    for k in 0..steps {
        for i in 0..n {
            b[i] += half * (ka[i] + force(k, k, i));
        }
        for i in 0..n {
            a[i] += dt * b[i];
        }
        apply_k(q, dx, &a, &mut ka);
        for i in 0..n {
            b[i] += half * (ka[i] + force(k, k + 1, i));
        }
    }
    State {
        v: a,
        vt: b,
        t: y0.t + steps as f64 * dt,
    }
}

/// `L* p`: the control whose X pairing with endpoints equals the control-space
/// pairing, computed by the transposed step recursion backward from `G p`.
fn adjoint_control(q: &[f64], p: &State, steps: usize, grid: &Grid) -> ControlSignal {
    let n = grid.n();
    let (dt, dx) = (grid.dt(), grid.dx());
    let half = 0.5 * dt;
    let (lo, hi) = grid.support();
    // y = G p
    let mut ya = vec![0.0; n];
    laplacian_into(&p.v, dx, &mut ya);
    ya.iter_mut().for_each(|x| *x *= -dx);
    let mut yb: Vec<f64> = p.vt.iter().map(|x| x * dx).collect();
    let mut kb = vec![0.0; n];
    let mut out = ControlSignal::zeros(grid, steps);
    let scale = 1.0 / (2.0 * dx);
    for k in (0..steps).rev() {
        // B^T y = dt/2 m (2 y_b + dt y_a + dt²/2 K y_b), then divide by dt dx
        apply_k(q, dx, &yb, &mut kb);
        let row = out.row_mut(k);
        for i in lo..hi {
            row[i - lo] = scale * (2.0 * yb[i] + dt * ya[i] + half * dt * kb[i]);
        }
        if k == 0 {
            break;
        }
        // y <- P^T y = S1^T S2^T S1^T y
        for i in 0..n {
            ya[i] += half * kb[i];
        }
        for i in 0..n {
            yb[i] += dt * ya[i];
        }
        apply_k(q, dx, &yb, &mut kb);
        for i in 0..n {
            ya[i] += half * kb[i];
        }
    }
    out
}

/// `Λ p = L L* p`: endpoint reached from rest under the adjoint control of `p`.
pub fn gramian_apply(p: &State, problem: &LinearControlProblem, grid: &Grid) -> Result<State> {
    let steps = problem.validate(grid)?;
    grid.check_len(p.len())?;
    Ok(gramian_steps(p, &problem.q, steps, grid))
}

fn gramian_steps(p: &State, q: &[f64], steps: usize, grid: &Grid) -> State {
    let u = adjoint_control(q, p, steps, grid);
    model_forward(q, &State::zero(grid.n()), Some(&u), None, steps, grid)
}

/// Runs the linear problem with the production stepping kernel.
pub fn simulate_linear(
    problem: &LinearControlProblem,
    control: &ControlSignal,
    grid: &Grid,
) -> Result<State> {
    let steps = problem.validate(grid)?;
    if control.steps() != steps || control.support() != grid.support() {
        return Err(WaveError::Argument(format!(
            "control has {} steps, problem needs {steps}",
            control.steps()
        )));
    }
    let dx = grid.dx();
    let q = &problem.q;
    let source = problem.source.as_ref();
    let mut level = 0usize;
    let mut accel = |v: &[f64], out: &mut [f64]| {
        apply_k(q, dx, v, out);
        if let Some(s) = source {
            for (o, si) in out.iter_mut().zip(s.level(level)) {
                *o += si;
            }
        }
        level += 1;
    };
    let mut kernel = Kernel::new(grid, grid.dt());
    let mut v = problem.r0.v.clone();
    let mut vt = problem.r0.vt.clone();
    accel(&v, &mut kernel.a);
    for k in 0..steps {
        kernel.step(&mut v, &mut vt, Push::Signal(control.row(k)), &mut accel, None);
    }
    State::new(v, vt, problem.r0.t + problem.horizon)
}

/// Minimal-norm-style control for the linear problem from a Krylov solve of
/// `Λ p = d`, `d = R1 - (free evolution of R0 with the source)`.
///
/// The iteration is the conjugate residual variant of CG in the X inner
/// product: it minimizes the X norm of `d - Λ p`, which is exactly the
/// endpoint error of the control `L* p`, so the residual decreases
/// monotonically even though `Λ` is badly conditioned on the grid scale.
pub fn hum_control(problem: &LinearControlProblem, tol: f64, max_iter: usize, grid: &Grid) -> Result<ControlReport> {
    let steps = problem.validate(grid)?;
    if !(tol > 0.0) {
        return Err(WaveError::Argument(format!("tolerance {tol} must be positive")));
    }
    let q = &problem.q;
    let lam = |z: &State| gramian_steps(z, q, steps, grid);
    let free = model_forward(q, &problem.r0, None, problem.source.as_ref(), steps, grid);
    let mut r = problem.r1.sub(&free);
    let mut p = State::zero(grid.n());
    let mut res = x_norm(&r, grid);
    let mut history = vec![res];
    let mut iterations = 0;
    if res >= tol {
        let mut ar = lam(&r);
        let mut dir = r.clone();
        let mut adir = ar.clone();
        let mut rar = x_inner(&r, &ar, grid);
        while res >= tol {
            if iterations == max_iter {
                return Err(WaveError::Convergence { iterations, residual: res });
            }
            if iterations >= STAGNATION_WINDOW
                && res > (1.0 - STAGNATION_FACTOR) * history[iterations - STAGNATION_WINDOW]
            {
                return Err(WaveError::Stagnation { iterations, residual: res });
            }
            let aa = x_inner(&adir, &adir, grid);
            if !(rar > 0.0 && aa > 0.0) {
                return Err(WaveError::Stagnation { iterations, residual: res });
            }
            iterations += 1;
            let alpha = rar / aa;
            p = p.axpy(alpha, &dir);
            r = r.axpy(-alpha, &adir);
            ar = lam(&r);
            let rar_new = x_inner(&r, &ar, grid);
            let beta = rar_new / rar;
            dir = r.axpy(beta, &dir);
            adir = ar.axpy(beta, &adir);
            rar = rar_new;
            res = x_norm(&r, grid);
            history.push(res);
        }
    }
    let control = if iterations == 0 {
        ControlSignal::zeros(grid, steps)
    } else {
        adjoint_control(q, &p, steps, grid)
    };
    let end = simulate_linear(problem, &control, grid)?;
    let residual = x_distance(&end, &problem.r1, grid);
    if residual > 10.0 * tol {
        return Err(WaveError::Verification {
            reported: res,
            simulated: residual,
        });
    }
    Ok(ControlReport::new(control, residual, iterations, 0, grid))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalParams {
    /// Target on the verified nonlinear endpoint residual.
    pub tol: f64,
    pub max_picard: usize,
    pub hum_tol: f64,
    pub hum_max_iter: usize,
}

impl Default for LocalParams {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            max_picard: 10,
            hum_tol: 2e-5,
            hum_max_iter: HUM_MAX_ITER,
        }
    }
}

/// Nonlinear run of the controlled equation from `v0`, keeping every level.
fn nonlinear_levels(
    v0: &State,
    control: &ControlSignal,
    grid: &Grid,
    nl: &Nonlinearity,
) -> Result<Vec<State>> {
    Ok(integrate_steps(v0, ForcingMode::Controlled(control), control.steps(), grid, nl, Some(1))?.states)
}

/// Exact control from `v0` to `v1` near `e` by Picard iteration on the remainder.
#[allow(clippy::too_many_arguments)]
pub fn local_control(
    e: &Equilibrium,
    v0: &State,
    v1: &State,
    horizon: f64,
    grid: &Grid,
    nl: &Nonlinearity,
    rho: f64,
    params: &LocalParams,
) -> Result<ControlReport> {
    grid.check_len(e.e.len())?;
    let rest = State::at_rest(e.e.clone());
    for (name, s) in [("start", v0), ("target", v1)] {
        grid.check_len(s.len())?;
        let d = x_distance(s, &rest, grid);
        if d > rho {
            return Err(WaveError::OutsideRadius { distance: d, rho });
        }
        s.check_finite().map_err(|_| WaveError::Argument(format!("{name} state not finite")))?;
    }
    let q = potential(&e.e, nl, grid);
    let r0 = v0.sub(&rest).with_time(0.0);
    let r1 = v1.sub(&rest).with_time(0.0);
    let mut problem = LinearControlProblem::new(q, horizon, r0, r1);
    let steps = problem.validate(grid)?;
    // the equilibrium's own residual Δ_h e - f(e) enters every level
    let mut base = vec![0.0; grid.n()];
    laplacian_into(&e.e, grid.dx(), &mut base);
    for (i, b) in base.iter_mut().enumerate() {
        *b -= nl.f(grid.x(i), e.e[i]);
    }
    let mut source = SourceTerm::zeros(grid.n(), steps + 1);
    for j in 0..=steps {
        source.level_mut(j).copy_from_slice(&base);
    }
    let mut history: Vec<f64> = Vec::new();
    let mut cg_total = 0;
    let mut rises = 0;
    for it in 1..=params.max_picard {
        problem.source = Some(source.clone());
        let rep = hum_control(&problem, params.hum_tol, params.hum_max_iter, grid)?;
        cg_total += rep.cg_iterations;
        let levels = nonlinear_levels(v0, &rep.control, grid, nl)?;
        let residual = x_distance(levels.last().expect("levels"), v1, grid);
        if let Some(&prev) = history.last() {
            rises = if residual > prev { rises + 1 } else { 0 };
        }
        history.push(residual);
        if residual < params.tol {
            let mut out = ControlReport::new(rep.control, residual, cg_total, it, grid);
            out.residual_history = history;
            return Ok(out);
        }
        if rises >= 2 {
            return Err(WaveError::NeighborhoodTooLarge { history });
        }
        for (j, s) in levels.iter().enumerate() {
            let lvl = source.level_mut(j);
            for i in 0..grid.n() {
                let r = s.v[i] - e.e[i];
                lvl[i] = base[i] - nl.remainder(grid.x(i), e.e[i], r);
            }
        }
    }
    Err(WaveError::NeighborhoodTooLarge { history })
}

/// Local control from `v` to `(v, -v_t)`.
pub fn flip_velocity(
    e: &Equilibrium,
    v: &State,
    horizon: f64,
    grid: &Grid,
    nl: &Nonlinearity,
    rho: f64,
    params: &LocalParams,
) -> Result<ControlReport> {
    local_control(e, v, &v.flip_velocity(), horizon, grid, nl, rho, params)
}

/// Smooth pseudo-random perturbation of X norm exactly `radius`, built on the
/// first eight sine modes in both components.
pub fn random_perturbation(rng: &mut ChaCha8Rng, radius: f64, grid: &Grid) -> State {
    let modes = 8;
    let mut v = vec![0.0; grid.n()];
    let mut vt = vec![0.0; grid.n()];
    for k in 1..=modes {
        let kk = k as f64;
        let cv: f64 = StandardNormal.sample(rng);
        let cw: f64 = StandardNormal.sample(rng);
        let (cv, cw) = (cv / kk, cw);
        for i in 0..grid.n() {
            let s = (kk * std::f64::consts::PI * grid.x(i)).sin();
            v[i] += cv * s / kk;
            vt[i] += cw * s / kk;
        }
    }
    let st = State { v, vt, t: 0.0 };
    let nrm = x_norm(&st, grid);
    st.scaled(radius / nrm)
}

/// Fixed boundary pairs `((e,0) + δ0, (e,0) + δ1)` with `‖δ‖_X = radius`.
pub fn calibration_pairs(e: &Equilibrium, radius: f64, grid: &Grid, seed: u64) -> Vec<(State, State)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rest = State::at_rest(e.e.clone());
    (0..CALIBRATION_PAIRS)
        .map(|_| {
            let a = random_perturbation(&mut rng, radius, grid);
            let b = random_perturbation(&mut rng, radius, grid);
            (rest.add(&a), rest.add(&b))
        })
        .collect()
}

/// Largest probe radius for which every calibration pair is controlled.
pub fn calibrate_radius(
    e: &Equilibrium,
    grid: &Grid,
    nl: &Nonlinearity,
    horizon: f64,
    seed: u64,
    params: &LocalParams,
) -> Result<f64> {
    for &rho in RADIUS_PROBES.iter() {
        let pairs = calibration_pairs(e, rho, grid, seed);
        let ok = par::map(&pairs, |(a, b)| {
            local_control(e, a, b, horizon, grid, nl, rho * (1.0 + 1e-12), params).is_ok()
        });
        if ok.iter().all(|&x| x) {
            return Ok(rho);
        }
        log::info!("radius {rho} failed calibration at equilibrium {}", e.id);
    }
    Err(WaveError::Calibration(format!(
        "no probe radius down to {} controls equilibrium {} at horizon {horizon}",
        RADIUS_PROBES[RADIUS_PROBES.len() - 1],
        e.id
    )))
}
