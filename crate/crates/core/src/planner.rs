//! Steering between arbitrary states through the connection graph.
//!
//! A plan is a chain of follow segments (damped flow forward along stored
//! trajectories, or their time reversal) glued by exact local controls at the
//! equilibria they pass. Execution flattens everything into one open-loop
//! signal and replays it once from the initial state.

use crate::attractor::{flow_until, ConnectionGraph, Orientation, SAMPLE_STRIDE, T_MAX};
use crate::equilibria::Equilibrium;
use crate::error::{Result, WaveError};
use crate::grid::Grid;
use crate::localctl::{calibrate_radius, default_horizon, local_control, random_perturbation, ControlReport, LocalParams};
use crate::nonlinearity::Nonlinearity;
use crate::par;
use crate::state::{energy, x_distance, ControlSignal, State};
use crate::wavesolver::{integrate_steps, reversed_control, ForcingMode, Trajectory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Segment tolerance in X norm.
pub const TAU_SEG: f64 = 1e-3;
/// Reversed segments are compared with their stored states this often.
pub const REANCHOR_TIME: f64 = 5.0;
/// Follow segments start and stop inside this fraction of the calibrated radius.
pub const ENTRY_FRACTION: f64 = 0.5;
/// Endpoint tolerance for a steering run to count as a success.
pub const PLAN_TOL: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    DampedFollow,
    ReversedFollow,
    LocalTransfer,
    VelocityFlip,
}

impl SegmentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SegmentKind::DampedFollow => "damped_follow",
            SegmentKind::ReversedFollow => "reversed_follow",
            SegmentKind::LocalTransfer => "local_transfer",
            SegmentKind::VelocityFlip => "velocity_flip",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "damped_follow" => Some(SegmentKind::DampedFollow),
            "reversed_follow" => Some(SegmentKind::ReversedFollow),
            "local_transfer" => Some(SegmentKind::LocalTransfer),
            "velocity_flip" => Some(SegmentKind::VelocityFlip),
            _ => None,
        }
    }

    pub fn is_local(&self) -> bool {
        matches!(self, SegmentKind::LocalTransfer | SegmentKind::VelocityFlip)
    }
}

#[derive(Debug, Clone)]
pub enum Payload {
    /// Planned damped run, sampled, with its recorded feedback.
    Follow(Trajectory),
    /// Open-loop signal and the stored states it should pass, as
    /// `(step offset, state)`.
    Reversed {
        signal: ControlSignal,
        anchors: Vec<(usize, State)>,
    },
    Control(ControlReport),
}

#[derive(Debug, Clone)]
pub struct Segment {
    pub kind: SegmentKind,
    pub payload: Payload,
    pub start: State,
    pub end: State,
    pub steps: usize,
    pub duration: f64,
    /// Equilibrium whose neighbourhood hosts a local segment.
    pub junction: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Plan {
    pub segments: Vec<Segment>,
    pub t_total: f64,
    pub v0: State,
    pub v1: State,
    /// Equilibria visited, in order.
    pub route: Vec<usize>,
}

impl Plan {
    pub fn steps(&self) -> usize {
        self.segments.iter().map(|s| s.steps).sum()
    }

    pub fn kinds(&self) -> Vec<SegmentKind> {
        self.segments.iter().map(|s| s.kind).collect()
    }
}

/// Everything the planner needs besides the two states.
#[derive(Debug, Clone)]
pub struct PlannerContext {
    pub grid: Grid,
    pub nl: Nonlinearity,
    pub graph: ConnectionGraph,
    /// Calibrated local-control radius per equilibrium id.
    pub radii: Vec<f64>,
    pub horizon: f64,
    pub params: LocalParams,
    pub tau_seg: f64,
    pub t_max: f64,
    pub stride: usize,
    pub tol: f64,
}

impl PlannerContext {
    /// Calibrates a radius at every node with the default local parameters.
    pub fn new(grid: Grid, nl: Nonlinearity, graph: ConnectionGraph, seed: u64) -> Result<Self> {
        let horizon = default_horizon(&grid);
        let params = LocalParams::default();
        let radii = par::map(&graph.nodes, |e| calibrate_radius(e, &grid, &nl, horizon, seed, &params))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::with_radii(grid, nl, graph, radii))
    }

    pub fn with_radii(grid: Grid, nl: Nonlinearity, graph: ConnectionGraph, radii: Vec<f64>) -> Self {
        Self {
            horizon: default_horizon(&grid),
            params: LocalParams::default(),
            grid,
            nl,
            graph,
            radii,
            tau_seg: TAU_SEG,
            t_max: T_MAX,
            stride: SAMPLE_STRIDE,
            tol: PLAN_TOL,
        }
    }

    fn entry_radii(&self) -> Vec<f64> {
        self.radii.iter().map(|r| r * ENTRY_FRACTION).collect()
    }

    fn rest(&self, id: usize) -> State {
        State::at_rest(self.graph.nodes[id].e.clone())
    }

    fn node(&self, id: usize) -> &Equilibrium {
        &self.graph.nodes[id]
    }
}

/// Step offset of sample `k` in a trajectory.
fn sample_step(traj: &Trajectory, k: usize) -> usize {
    (k * traj.stride).min(traj.steps)
}

/// Portion of a stored edge between leaving the source ball and entering the
/// target ball, as sample indices `(i, j)` on the regular stride.
fn transit(traj: &Trajectory, src: &State, r_src: f64, tgt: &State, r_tgt: f64, grid: &Grid) -> (usize, usize) {
    let regular = traj.steps / traj.stride.max(1);
    let last = regular.min(traj.states.len() - 1);
    let mut i = 0;
    while i < last && x_distance(&traj.states[i + 1], src, grid) <= r_src {
        i += 1;
    }
    let mut j = i + 1;
    while j < last && x_distance(&traj.states[j], tgt, grid) > r_tgt {
        j += 1;
    }
    (i, j.min(last).max(i))
}

/// Forward piece `[i, j]` of a sampled damped run.
fn damped_piece(traj: &Trajectory, i: usize, j: usize) -> Trajectory {
    let (a, b) = (sample_step(traj, i), sample_step(traj, j));
    let signal = traj.signal.as_ref().map(|s| s.slice(a, b));
    Trajectory {
        states: traj.states[i..=j].to_vec(),
        mode: traj.mode,
        stride: traj.stride,
        steps: b - a,
        dt: traj.dt,
        signal,
    }
}

/// Time reversal of a damped piece: flipped start, reversed feedback, and the
/// flipped samples in reverse order as anchors.
fn reversed_piece(piece: &Trajectory) -> Result<(State, ControlSignal, State, Vec<(usize, State)>)> {
    let (start, signal, end) = reversed_control(piece)?;
    let n = piece.states.len();
    let anchors = (0..n)
        .rev()
        .map(|k| (piece.steps - sample_step(piece, k), piece.states[k].flip_velocity()))
        .collect();
    Ok((start, signal, end, anchors))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Direction {
    Forward,
    Reversed,
}

struct Builder<'a> {
    ctx: &'a PlannerContext,
    segments: Vec<Segment>,
    cur: State,
    dir: Direction,
    node: usize,
    route: Vec<usize>,
}

impl Builder<'_> {
    /// Local control at `self.node` from the current declared state to `target`.
    fn junction(&mut self, target: &State, next: Option<Direction>) -> Result<()> {
        let ctx = self.ctx;
        let g = &ctx.grid;
        if x_distance(&self.cur, target, g) == 0.0 {
            return Ok(());
        }
        let id = self.node;
        let rho = ctx.radii[id];
        let rest = ctx.rest(id);
        for (what, s) in [("arrival", &self.cur), ("departure", target)] {
            let d = x_distance(s, &rest, g);
            if d > rho {
                return Err(WaveError::Planning(format!(
                    "junction at equilibrium {id} ({}): {what} state at distance {d:.3e} exceeds radius {rho:.3e}",
                    ctx.node(id).label
                )));
            }
        }
        let report = local_control(ctx.node(id), &self.cur, target, ctx.horizon, g, &ctx.nl, rho, &ctx.params)
            .map_err(|err| {
                WaveError::Planning(format!("junction at equilibrium {id} ({}): {err}", ctx.node(id).label))
            })?;
        let kind = match next {
            Some(d) if d != self.dir => SegmentKind::VelocityFlip,
            _ => SegmentKind::LocalTransfer,
        };
        let steps = report.control.steps();
        self.segments.push(Segment {
            kind,
            start: self.cur.clone(),
            end: target.clone(),
            steps,
            duration: steps as f64 * g.dt(),
            junction: Some(id),
            payload: Payload::Control(report),
        });
        self.cur = target.clone();
        Ok(())
    }

    fn damped(&mut self, piece: Trajectory, to: usize) {
        if piece.steps > 0 {
            self.segments.push(Segment {
                kind: SegmentKind::DampedFollow,
                start: piece.first().clone(),
                end: piece.last().clone(),
                steps: piece.steps,
                duration: piece.duration(),
                junction: None,
                payload: Payload::Follow(piece.clone()),
            });
            self.cur = piece.last().clone();
        }
        self.dir = Direction::Forward;
        self.move_to(to);
    }

    fn reversed(&mut self, piece: &Trajectory, to: usize) -> Result<()> {
        if piece.steps > 0 {
            let (start, signal, end, anchors) = reversed_piece(piece)?;
            self.segments.push(Segment {
                kind: SegmentKind::ReversedFollow,
                start,
                end: end.clone(),
                steps: piece.steps,
                duration: piece.duration(),
                junction: None,
                payload: Payload::Reversed { signal, anchors },
            });
            self.cur = end;
        }
        self.dir = Direction::Reversed;
        self.move_to(to);
        Ok(())
    }

    fn move_to(&mut self, to: usize) {
        if self.route.last() != Some(&to) {
            self.route.push(to);
        }
        self.node = to;
    }
}

fn flow_to_junction(v: &State, ctx: &PlannerContext, what: &str) -> Result<(Trajectory, usize)> {
    let eqs = &ctx.graph.nodes;
    flow_until(v, &ctx.grid, &ctx.nl, eqs, &ctx.entry_radii(), ctx.t_max, ctx.stride).map_err(|err| match err {
        WaveError::Timeout { .. } => WaveError::Planning(format!("flow from {what} reached no junction: {err}")),
        other => other,
    })
}

/// Builds the segment chain steering `v0` to `v1`, without executing it.
pub fn plan(v0: &State, v1: &State, ctx: &PlannerContext) -> Result<Plan> {
    let g = &ctx.grid;
    for s in [v0, v1] {
        g.check_len(s.len())?;
        s.check_finite()?;
    }
    if ctx.radii.len() != ctx.graph.nodes.len() {
        return Err(WaveError::Argument("one calibrated radius per equilibrium required".into()));
    }
    let v0 = v0.clone().with_time(0.0);
    if x_distance(&v0, v1, g) == 0.0 {
        return Ok(Plan {
            segments: Vec::new(),
            t_total: 0.0,
            v0,
            v1: v1.clone(),
            route: Vec::new(),
        });
    }
    let ((head, a), (tail, b)) = {
        let starts = [v0.clone(), v1.flip_velocity()];
        let mut flows = par::map(&starts, |s| flow_to_junction(s, ctx, "the state")).into_iter();
        (flows.next().expect("two flows")?, flows.next().expect("two flows")?)
    };
    let path = ctx
        .graph
        .shortest_path(a, b)
        .ok_or_else(|| WaveError::Structural(format!("no path from equilibrium {a} to {b}")))?;

    let radii = ctx.entry_radii();
    let mut bld = Builder {
        ctx,
        segments: Vec::new(),
        cur: v0.clone(),
        dir: Direction::Forward,
        node: a,
        route: Vec::new(),
    };
    bld.damped(head, a);
    for (k, o) in path {
        let edge = &ctx.graph.edges[k];
        let (s, t) = (edge.source, edge.target);
        let (i, j) = transit(&edge.trajectory, &ctx.rest(s), radii[s], &ctx.rest(t), radii[t], g);
        let piece = damped_piece(&edge.trajectory, i, j);
        match o {
            Orientation::Forward => {
                bld.junction(piece.first(), Some(Direction::Forward))?;
                bld.damped(piece, t);
            }
            Orientation::Backward => {
                bld.junction(&piece.last().flip_velocity(), Some(Direction::Reversed))?;
                bld.reversed(&piece, s)?;
            }
        }
    }
    if tail.steps > 0 {
        bld.junction(&tail.last().flip_velocity(), Some(Direction::Reversed))?;
        bld.reversed(&tail, b)?;
    } else {
        bld.junction(v1, None)?;
    }
    let segments = bld.segments;
    let t_total = segments.iter().map(|s| s.duration).sum();
    Ok(Plan {
        segments,
        t_total,
        v0,
        v1: v1.clone(),
        route: bld.route,
    })
}

/// What happened in one executed segment.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentRecord {
    /// Index in the plan; inserted corrections share the index of their host.
    pub index: usize,
    pub kind: SegmentKind,
    pub steps: usize,
    /// Distance of the actual start from the declared one.
    pub start_drift: f64,
    /// Distance of the actual end from the declared one.
    pub end_drift: f64,
    pub energy_start: f64,
    pub energy_end: f64,
    pub inserted: bool,
}

#[derive(Debug, Clone)]
pub struct Execution {
    pub signal: ControlSignal,
    /// Single replay of `signal` from `v0`, sampled every `ctx.stride` steps.
    pub trajectory: Trajectory,
    pub endpoint_error: f64,
    pub t_total: f64,
    pub records: Vec<SegmentRecord>,
}

struct Runner<'a> {
    ctx: &'a PlannerContext,
    cur: State,
    signal: ControlSignal,
    records: Vec<SegmentRecord>,
}

impl Runner<'_> {
    fn open_loop(&mut self, u: &ControlSignal, index: usize) -> Result<()> {
        let run = integrate_steps(&self.cur, ForcingMode::Controlled(u), u.steps(), &self.ctx.grid, &self.ctx.nl, None)
            .map_err(|err| WaveError::Execution {
                segment: index,
                reason: err.to_string(),
            })?;
        self.signal.append(u)?;
        let t = self.cur.t;
        self.cur = run.last().clone().with_time(t + u.duration());
        Ok(())
    }

    fn record_span(&mut self, index: usize, kind: SegmentKind, start: &State, end: &State, before: usize, inserted: bool) -> Result<()> {
        let ctx = self.ctx;
        let steps = self.signal.steps() - before;
        let rec = SegmentRecord {
            index,
            kind,
            steps,
            start_drift: 0.0,
            end_drift: x_distance(&self.cur, end, &ctx.grid),
            energy_start: energy(start, &ctx.nl, &ctx.grid)?,
            energy_end: energy(&self.cur, &ctx.nl, &ctx.grid)?,
            inserted,
        };
        self.records.push(rec);
        Ok(())
    }
}

/// Flattens `plan` into one open-loop signal and replays it from `v0`.
///
/// Junction controls are recomputed from the states actually reached, so
/// errors do not accumulate along the chain.
pub fn execute(plan: &Plan, v0: &State, ctx: &PlannerContext) -> Result<Execution> {
    let g = &ctx.grid;
    g.check_len(v0.len())?;
    let d0 = x_distance(v0, &plan.v0, g);
    if d0 > ctx.tau_seg {
        return Err(WaveError::Argument(format!(
            "initial state is {d0:.3e} from the planned start"
        )));
    }
    let mut run = Runner {
        ctx,
        cur: v0.clone().with_time(0.0),
        signal: ControlSignal::empty(g),
        records: Vec::new(),
    };
    let reanchor = g.steps_in(REANCHOR_TIME).max(1);
    for (k, seg) in plan.segments.iter().enumerate() {
        let start = run.cur.clone();
        let drift = x_distance(&start, &seg.start, g);
        let before = run.signal.steps();
        match (&seg.payload, seg.kind) {
            (Payload::Control(rep), kind) => {
                let id = seg.junction.expect("local segments sit at a junction");
                let control = if drift < 1e-12 {
                    rep.control.clone()
                } else {
                    local_control(ctx.node(id), &start, &seg.end, ctx.horizon, g, &ctx.nl, ctx.radii[id], &ctx.params)
                        .map_err(|err| WaveError::Execution {
                            segment: k,
                            reason: format!("{} at equilibrium {id}: {err}", kind.as_str()),
                        })?
                        .control
                };
                run.open_loop(&control, k)?;
            }
            (Payload::Follow(piece), _) => {
                check_drift(drift, k, ctx)?;
                let fb = integrate_steps(&start, ForcingMode::Damped, piece.steps, g, &ctx.nl, None)
                    .map_err(|err| WaveError::Execution {
                        segment: k,
                        reason: err.to_string(),
                    })?;
                let u = fb.signal.expect("damped runs record feedback");
                run.open_loop(&u, k)?;
            }
            (Payload::Reversed { signal, anchors }, _) => {
                check_drift(drift, k, ctx)?;
                let mut done = 0;
                let mut next_check = reanchor;
                for (pos, anchor) in anchors.iter().skip(1) {
                    let pos = *pos;
                    if pos < next_check && pos < seg.steps {
                        continue;
                    }
                    run.open_loop(&signal.slice(done, pos), k)?;
                    done = pos;
                    next_check = pos + reanchor;
                    let d = x_distance(&run.cur, anchor, g);
                    if d <= ctx.tau_seg || pos == seg.steps {
                        continue;
                    }
                    let host = (0..ctx.graph.nodes.len()).find(|&id| {
                        let rest = ctx.rest(id);
                        x_distance(&run.cur, &rest, g) <= ctx.radii[id] && x_distance(anchor, &rest, g) <= ctx.radii[id]
                    });
                    let Some(id) = host else {
                        return Err(WaveError::Execution {
                            segment: k,
                            reason: format!(
                                "reversed drift {d:.3e} exceeds {:.1e} at step {pos} away from every equilibrium",
                                ctx.tau_seg
                            ),
                        });
                    };
                    let here = run.cur.clone();
                    let at = run.signal.steps();
                    let fix = local_control(ctx.node(id), &here, anchor, ctx.horizon, g, &ctx.nl, ctx.radii[id], &ctx.params)
                        .map_err(|err| WaveError::Execution {
                            segment: k,
                            reason: format!("correction at equilibrium {id}: {err}"),
                        })?;
                    run.open_loop(&fix.control, k)?;
                    run.record_span(k, SegmentKind::LocalTransfer, &here, anchor, at, true)?;
                }
            }
        }
        run.record_span(k, seg.kind, &start, &seg.end, before, false)?;
        if let Some(r) = run.records.last_mut() {
            r.start_drift = drift;
            r.steps = run.signal.steps() - before;
        }
    }
    let steps = run.signal.steps();
    let trajectory = integrate_steps(v0, ForcingMode::Controlled(&run.signal), steps, g, &ctx.nl, Some(ctx.stride))
        .map_err(|err| WaveError::Execution {
            segment: plan.segments.len().saturating_sub(1),
            reason: format!("replay: {err}"),
        })?;
    let endpoint_error = x_distance(trajectory.last(), &plan.v1, g);
    Ok(Execution {
        t_total: steps as f64 * g.dt(),
        signal: run.signal,
        trajectory,
        endpoint_error,
        records: run.records,
    })
}

fn check_drift(drift: f64, segment: usize, ctx: &PlannerContext) -> Result<()> {
    if drift > 10.0 * ctx.tau_seg {
        return Err(WaveError::Execution {
            segment,
            reason: format!("junction drift {drift:.3e} exceeds {:.1e}", 10.0 * ctx.tau_seg),
        });
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub pass: bool,
    pub tol: f64,
    pub endpoint_error: Option<f64>,
    pub t_total: f64,
    pub kinds: Vec<SegmentKind>,
    pub records: Vec<SegmentRecord>,
    pub l1_l2_norm: f64,
    pub l2_norm: f64,
    /// Why the run failed, when it did before reaching the end.
    pub cause: Option<String>,
}

/// Executes `plan` and grades it at `tol`; errors end up in the report.
pub fn verify(plan: &Plan, v0: &State, tol: f64, ctx: &PlannerContext) -> (VerifyReport, Option<Execution>) {
    let mut report = VerifyReport {
        pass: false,
        tol,
        endpoint_error: None,
        t_total: plan.t_total,
        kinds: plan.kinds(),
        records: Vec::new(),
        l1_l2_norm: 0.0,
        l2_norm: 0.0,
        cause: None,
    };
    match execute(plan, v0, ctx) {
        Ok(ex) => {
            report.endpoint_error = Some(ex.endpoint_error);
            report.t_total = ex.t_total;
            report.records = ex.records.clone();
            report.l1_l2_norm = ex.signal.l1_l2_norm(ctx.grid.dx());
            report.l2_norm = ex.signal.l2_norm(ctx.grid.dx());
            report.pass = ex.endpoint_error < tol;
            if !report.pass {
                report.cause = Some(format!("endpoint error {:.3e} above tolerance {tol:.1e}", ex.endpoint_error));
            }
            (report, Some(ex))
        }
        Err(err) => {
            report.cause = Some(err.to_string());
            (report, None)
        }
    }
}

/// Plans, executes and grades in one go.
pub fn steer(v0: &State, v1: &State, tol: f64, ctx: &PlannerContext) -> (VerifyReport, Option<Plan>, Option<Execution>) {
    match plan(v0, v1, ctx) {
        Ok(p) => {
            let (rep, ex) = verify(&p, v0, tol, ctx);
            (rep, Some(p), ex)
        }
        Err(err) => (
            VerifyReport {
                pass: false,
                tol,
                endpoint_error: None,
                t_total: 0.0,
                kinds: Vec::new(),
                records: Vec::new(),
                l1_l2_norm: 0.0,
                l2_norm: 0.0,
                cause: Some(err.to_string()),
            },
            None,
            None,
        ),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurveyRow {
    pub pair: usize,
    pub norm0: f64,
    pub norm1: f64,
    pub t_total: f64,
    pub endpoint_error: Option<f64>,
    pub l1_l2_norm: f64,
    pub l2_norm: f64,
    pub segments: usize,
    pub error: Option<String>,
}

impl SurveyRow {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Survey {
    pub radius: f64,
    pub seed: u64,
    pub rows: Vec<SurveyRow>,
}

impl Survey {
    /// Empirical uniform time: the largest `T_total` over the successful rows.
    pub fn max_time(&self) -> Option<f64> {
        self.rows.iter().filter(|r| r.ok()).map(|r| r.t_total).reduce(f64::max)
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.ok()).count()
    }
}

/// Seeded pairs of band-limited states in the X ball of radius `radius`.
pub fn survey_pairs(radius: f64, samples: usize, grid: &Grid, seed: u64) -> Vec<(State, State)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|_| {
            let r0 = radius * rng.gen::<f64>();
            let a = random_perturbation(&mut rng, r0, grid);
            let r1 = radius * rng.gen::<f64>();
            let b = random_perturbation(&mut rng, r1, grid);
            (a, b)
        })
        .collect()
}

/// Steers `samples` seeded pairs from the ball of radius `radius` and records
/// the time each one needed.
pub fn uniform_time_survey(radius: f64, samples: usize, ctx: &PlannerContext, seed: u64) -> Result<Survey> {
    if !(radius >= 0.0) || samples == 0 {
        return Err(WaveError::Argument(format!(
            "survey needs radius >= 0 and at least one sample, got {radius} and {samples}"
        )));
    }
    let pairs = survey_pairs(radius, samples, &ctx.grid, seed);
    let rows = pairs
        .iter()
        .enumerate()
        .map(|(k, (a, b))| {
            let (rep, _, _) = steer(a, b, ctx.tol, ctx);
            SurveyRow {
                pair: k,
                norm0: crate::state::x_norm(a, &ctx.grid),
                norm1: crate::state::x_norm(b, &ctx.grid),
                t_total: rep.t_total,
                endpoint_error: rep.endpoint_error,
                l1_l2_norm: rep.l1_l2_norm,
                l2_norm: rep.l2_norm,
                segments: rep.kinds.len(),
                error: if rep.pass { None } else { rep.cause },
            }
        })
        .collect();
    Ok(Survey { radius, seed, rows })
}
