use crate::config::Config;
use crate::svg::Portrait;
use std::path::{Path, PathBuf};
use wavectl_core::attractor::{build_connection_graph, ConnectionGraph, EPS_DEPARTURE};
use wavectl_core::equilibria::{default_seeds, enumerate_equilibria, Equilibrium};
use wavectl_core::io::{self, KeyValue};
use wavectl_core::localctl::{calibrate_radius, LocalParams};
use wavectl_core::planner::{steer, uniform_time_survey, PlannerContext, SegmentKind};
use wavectl_core::state::modal_projection;
use wavectl_core::{Grid, Nonlinearity, Result, State, Trajectory, WaveError};

/// How a command ended, mapped to the process exit code by `main`.
pub enum Outcome {
    Success,
    Failed(String),
}

pub struct Setup {
    pub cfg: Config,
    pub grid: Grid,
    pub nl: Nonlinearity,
    pub out: PathBuf,
}

impl Setup {
    pub fn new(cfg: Config, out: PathBuf) -> Result<Self> {
        Ok(Self {
            grid: cfg.grid()?,
            nl: cfg.nonlinearity()?,
            cfg,
            out,
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn equilibria(&self) -> Result<Vec<Equilibrium>> {
        let found = enumerate_equilibria(&self.grid, &self.nl, &default_seeds(&self.grid))?;
        for e in &found.equilibria {
            if e.residual_inf > self.cfg.tol_newton {
                return Err(WaveError::Convergence {
                    iterations: e.newton_iterations,
                    residual: e.residual_inf,
                });
            }
        }
        Ok(found.equilibria)
    }

    fn graph(&self, eqs: &[Equilibrium]) -> Result<ConnectionGraph> {
        let eps = EPS_DEPARTURE.max(10.0 * self.cfg.delta_conv);
        build_connection_graph(eqs, &self.grid, &self.nl, eps, self.cfg.t_max, self.cfg.delta_conv)
    }

    fn params(&self) -> LocalParams {
        LocalParams {
            tol: self.cfg.tol_local,
            hum_tol: self.cfg.tol_hum,
            ..LocalParams::default()
        }
    }

    fn context(&self, graph: ConnectionGraph) -> Result<PlannerContext> {
        let params = self.params();
        let horizon = self.cfg.horizon();
        let radii = graph
            .nodes
            .iter()
            .map(|e| calibrate_radius(e, &self.grid, &self.nl, horizon, self.cfg.seed, &params))
            .collect::<Result<Vec<_>>>()?;
        let mut ctx = PlannerContext::with_radii(self.grid.clone(), self.nl.clone(), graph, radii);
        ctx.horizon = horizon;
        ctx.params = params;
        ctx.tau_seg = self.cfg.tau_seg;
        ctx.t_max = self.cfg.t_max;
        ctx.tol = self.cfg.tol_plan;
        Ok(ctx)
    }
}

fn write_equilibria(s: &Setup, eqs: &[Equilibrium]) -> Result<()> {
    let mut files = Vec::new();
    for e in eqs {
        let name = format!("equilibrium_{}.wctl", e.id);
        io::write_state(&s.path(&name), &State::at_rest(e.e.clone()), s.grid.dt())?;
        files.push(name);
    }
    io::equilibria_manifest(eqs, &s.nl, &files).write(&s.path("equilibria.manifest"))
}

pub fn equilibria(s: &Setup) -> Result<Outcome> {
    let eqs = s.equilibria()?;
    write_equilibria(s, eqs.as_slice())?;
    println!("{:>3}  {:<6} {:>5} {:>12} {:>10}  lowest eigenvalue", "id", "label", "morse", "max |e|", "residual");
    for e in &eqs {
        let amp = e.e.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        println!(
            "{:>3}  {:<6} {:>5} {:>12.8} {:>10.2e}  {:.6}",
            e.id, e.label, e.morse_index, amp, e.residual_inf, e.spectrum[0]
        );
    }
    Ok(Outcome::Success)
}

fn project(states: &[State], grid: &Grid) -> Vec<(f64, f64)> {
    states.iter().map(|st| modal_projection(st, grid)).collect()
}

fn label_colour(e: &Equilibrium) -> &'static str {
    if e.morse_index > 0 {
        "#c0392b"
    } else {
        "#1f4e9c"
    }
}

fn write_graph(s: &Setup, graph: &ConnectionGraph) -> Result<()> {
    let mut files = Vec::new();
    for (k, edge) in graph.edges.iter().enumerate() {
        let name = format!("edge_{k}.wtrj");
        io::write_trajectory(&s.path(&name), &edge.trajectory)?;
        if let Some(sig) = &edge.trajectory.signal {
            io::write_signal(&s.path(&format!("edge_{k}.sig")), sig)?;
        }
        files.push(name);
    }
    io::graph_manifest(graph, &files).write(&s.path("graph.manifest"))
}

fn attractor_portrait(graph: &ConnectionGraph, grid: &Grid, title: &str, extra: &[(f64, f64)]) -> Portrait {
    let curves: Vec<Vec<(f64, f64)>> = graph.edges.iter().map(|e| project(&e.trajectory.states, grid)).collect();
    let marks: Vec<(f64, f64)> = graph.nodes.iter().map(|e| modal_projection(&State::at_rest(e.e.clone()), grid)).collect();
    let extent: Vec<(f64, f64)> = curves.iter().flatten().chain(&marks).chain(extra).cloned().collect();
    let mut p = Portrait::new(title, &extent);
    for c in &curves {
        p.curve(c, "#888888", 1.5, "heteroclinic");
    }
    for (e, m) in graph.nodes.iter().zip(&marks) {
        p.point(*m, label_colour(e), &e.label);
    }
    p
}

pub fn attractor(s: &Setup) -> Result<Outcome> {
    let eqs = s.equilibria()?;
    write_equilibria(s, &eqs)?;
    let graph = s.graph(&eqs)?;
    write_graph(s, &graph)?;
    let title = format!("damped flow, lambda = {}, first-mode plane", s.nl.lambda());
    let svg = attractor_portrait(&graph, &s.grid, &title, &[]).render();
    io::write_atomic(&s.path("attractor.svg"), svg.as_bytes())?;
    println!(
        "{} equilibria, {} heteroclinic edges, absorbing bound {:.4}",
        graph.nodes.len(),
        graph.edges.len(),
        graph.absorbing_bound
    );
    for e in &graph.edges {
        println!(
            "  {} -> {}  duration {:.3}",
            graph.nodes[e.source].label,
            graph.nodes[e.target].label,
            e.duration()
        );
    }
    Ok(Outcome::Success)
}

/// A state file, or `eq:<label>` for an equilibrium at rest.
fn load_endpoint(arg: &str, s: &Setup, eqs: &[Equilibrium]) -> Result<State> {
    if let Some(label) = arg.strip_prefix("eq:") {
        return eqs
            .iter()
            .find(|e| e.label == label)
            .map(|e| State::at_rest(e.e.clone()))
            .ok_or_else(|| WaveError::Argument(format!("no equilibrium labelled {label}")));
    }
    io::load_state(Path::new(arg), &s.grid)
}

fn kind_colour(k: SegmentKind) -> &'static str {
    match k {
        SegmentKind::DampedFollow => "#1f4e9c",
        SegmentKind::ReversedFollow => "#c0392b",
        SegmentKind::LocalTransfer => "#27ae60",
        SegmentKind::VelocityFlip => "#e67e22",
    }
}

fn control_portrait(graph: &ConnectionGraph, grid: &Grid, traj: &Trajectory, spans: &[(SegmentKind, usize, usize)]) -> Portrait {
    let pts = project(&traj.states, grid);
    let mut p = attractor_portrait(graph, grid, "executed steering path, first-mode plane", &pts);
    for &(kind, a, b) in spans {
        let i0 = a / traj.stride;
        let i1 = b.div_ceil(traj.stride).min(pts.len() - 1);
        if i1 > i0 {
            p.curve(&pts[i0..=i1], kind_colour(kind), 2.0, kind.as_str());
        }
    }
    p.point(pts[0], "#000000", "V0");
    p.point(*pts.last().expect("samples"), "#000000", "V(T)");
    let kinds = [
        SegmentKind::DampedFollow,
        SegmentKind::ReversedFollow,
        SegmentKind::VelocityFlip,
        SegmentKind::LocalTransfer,
    ];
    let legend: Vec<(&str, &str)> = kinds.iter().map(|k| (kind_colour(*k), k.as_str())).collect();
    p.legend(&legend);
    p
}

pub fn control(s: &Setup, v0: &str, v1: &str) -> Result<Outcome> {
    let eqs = s.equilibria()?;
    let a = load_endpoint(v0, s, &eqs)?;
    let b = load_endpoint(v1, s, &eqs)?;
    let graph = s.graph(&eqs)?;
    let ctx = s.context(graph)?;
    let (report, plan, exec) = steer(&a, &b, ctx.tol, &ctx);
    let mut files = Vec::new();
    if let Some(ex) = &exec {
        io::write_signal(&s.path("control.sig"), &ex.signal)?;
        io::write_trajectory(&s.path("control.wtrj"), &ex.trajectory)?;
        let mut spans = Vec::new();
        let mut at = 0;
        for r in ex.records.iter().filter(|r| !r.inserted) {
            spans.push((r.kind, at, at + r.steps));
            at += r.steps;
        }
        let svg = control_portrait(&ctx.graph, &s.grid, &ex.trajectory, &spans).render();
        io::write_atomic(&s.path("control.svg"), svg.as_bytes())?;
        files.push(("signal", "control.sig".to_string()));
        files.push(("trajectory", "control.wtrj".to_string()));
        files.push(("figure", "control.svg".to_string()));
    }
    let mut kv = io::plan_manifest(plan.as_ref(), &report, &files);
    kv.section("radii").set("values", io::join(&ctx.radii));
    kv.write(&s.path("control.manifest"))?;
    let kinds: Vec<&str> = report.kinds.iter().map(|k| k.as_str()).collect();
    println!("segments: {}", kinds.join(" -> "));
    println!(
        "T_total {:.4}  endpoint error {}  l1(L2) {:.4e}  pass {}",
        report.t_total,
        report.endpoint_error.map_or("none".into(), |e| format!("{e:.3e}")),
        report.l1_l2_norm,
        report.pass
    );
    Ok(if report.pass {
        Outcome::Success
    } else {
        Outcome::Failed(report.cause.unwrap_or_else(|| "verification failed".into()))
    })
}

pub fn survey(s: &Setup, radius: f64, samples: usize) -> Result<Outcome> {
    if !(radius >= 0.0 && radius.is_finite()) || samples == 0 {
        return Err(WaveError::Argument(format!(
            "need --radius >= 0 and --samples >= 1, got {radius} and {samples}"
        )));
    }
    let eqs = s.equilibria()?;
    let graph = s.graph(&eqs)?;
    let ctx = s.context(graph)?;
    let sv = uniform_time_survey(radius, samples, &ctx, s.cfg.seed)?;
    io::write_atomic(&s.path("survey.csv"), io::survey_csv(&sv).as_bytes())?;
    let ok = sv.rows.len() - sv.failures();
    let t = sv.max_time();
    let mut kv = KeyValue::new();
    kv.set("radius", radius)
        .set("samples", samples)
        .set("seed", s.cfg.seed)
        .set("succeeded", ok)
        .set("failed", sv.failures())
        .set("max_t_total", t.map_or("none".into(), |t| t.to_string()))
        .set("table", "survey.csv");
    kv.write(&s.path("survey.manifest"))?;
    println!(
        "T(R = {radius}) = {}  ({ok}/{} succeeded, {} failed)",
        t.map_or("none".into(), |t| format!("{t:.4}")),
        sv.rows.len(),
        sv.failures()
    );
    Ok(if ok >= 1 {
        Outcome::Success
    } else {
        Outcome::Failed("every survey pair failed".into())
    })
}
