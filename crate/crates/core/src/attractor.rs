//! Damped flows to equilibria, heteroclinic orbits from unstable equilibria, and
//! the connection graph they span.

use std::collections::VecDeque;

use crate::equilibria::Equilibrium;
use crate::error::{Result, WaveError};
use crate::grid::Grid;
use crate::nonlinearity::Nonlinearity;
use crate::par;
use crate::state::{energy, x_norm, State};
use crate::wavesolver::{integrate_steps, ForcingMode, ModeTag, Trajectory};

pub const DELTA_CONV: f64 = 1e-4;
pub const T_MAX: f64 = 200.0;
pub const EPS_DEPARTURE: f64 = 1e-3;
/// Sampling stride of stored edge and flow trajectories. The feedback signal is
/// always kept for every step.
pub const SAMPLE_STRIDE: usize = 16;

/// Nearest equilibrium `(id, distance)` to `state` in the X metric.
pub fn nearest_equilibrium(state: &State, equilibria: &[Equilibrium], grid: &Grid) -> (usize, f64) {
    let mut best = (usize::MAX, f64::INFINITY);
    for eq in equilibria {
        let d = rest_distance(state, &eq.e, grid);
        if d < best.1 {
            best = (eq.id, d);
        }
    }
    best
}

fn rest_distance(state: &State, e: &[f64], grid: &Grid) -> f64 {
    let d = State {
        v: state.v.iter().zip(e).map(|(a, b)| a - b).collect(),
        vt: state.vt.clone(),
        t: 0.0,
    };
    x_norm(&d, grid)
}

/// Runs the damped flow from `v0` until it is within `delta_conv` of some `(e, 0)`.
///
/// The trajectory is full stride and carries the realized feedback; it stops at
/// the first converged sample.
pub fn flow_to_equilibrium(
    v0: &State,
    grid: &Grid,
    nl: &Nonlinearity,
    equilibria: &[Equilibrium],
    t_max: f64,
    delta_conv: f64,
) -> Result<(Trajectory, usize)> {
    flow_sampled(v0, grid, nl, equilibria, t_max, delta_conv, 1)
}

/// [`flow_to_equilibrium`] keeping every `stride`-th state; convergence is
/// tested on the kept samples.
pub fn flow_sampled(
    v0: &State,
    grid: &Grid,
    nl: &Nonlinearity,
    equilibria: &[Equilibrium],
    t_max: f64,
    delta_conv: f64,
    stride: usize,
) -> Result<(Trajectory, usize)> {
    if !(delta_conv > 0.0) {
        return Err(WaveError::Argument(format!("delta_conv {delta_conv} must be positive")));
    }
    let radii = vec![delta_conv; equilibria.len()];
    flow_until(v0, grid, nl, equilibria, &radii, t_max, stride)
}

/// Damped flow until the first kept sample within `radii[k]` of `(e_k, 0)`.
pub fn flow_until(
    v0: &State,
    grid: &Grid,
    nl: &Nonlinearity,
    equilibria: &[Equilibrium],
    radii: &[f64],
    t_max: f64,
    stride: usize,
) -> Result<(Trajectory, usize)> {
    if stride == 0 {
        return Err(WaveError::Argument("stride must be positive".into()));
    }
    if equilibria.is_empty() || radii.len() != equilibria.len() {
        return Err(WaveError::Argument("need one radius per equilibrium".into()));
    }
    if radii.iter().any(|r| !(*r > 0.0)) || !(t_max > 0.0) {
        return Err(WaveError::Argument(format!(
            "radii {radii:?} and t_max {t_max} must be positive"
        )));
    }
    grid.check_len(v0.len())?;
    v0.check_finite()?;
    let converged = |s: &State| -> Option<usize> {
        let mut hit: Option<(usize, f64)> = None;
        for (eq, &r) in equilibria.iter().zip(radii) {
            let d = rest_distance(s, &eq.e, grid);
            if d < r && hit.map_or(true, |(_, b)| d / r < b) {
                hit = Some((eq.id, d / r));
            }
        }
        hit.map(|(id, _)| id)
    };
    if let Some(id) = converged(v0) {
        return Ok((Trajectory::constant(v0.clone(), ModeTag::Damped, grid), id));
    }
    let chunk = grid.steps_in(1.0).max(1).div_ceil(stride) * stride;
    let max_steps = grid.steps_in(t_max);
    let mut traj = Trajectory::constant(v0.clone(), ModeTag::Damped, grid);
    traj.stride = stride;
    let mut signal = traj.signal.take().expect("damped signal");
    while traj.steps < max_steps {
        let n = chunk.min(max_steps - traj.steps);
        let piece = integrate_steps(traj.last(), ForcingMode::Damped, n, grid, nl, Some(stride))?;
        let piece_sig = piece.signal.as_ref().expect("damped signal");
        for (j, s) in piece.states.iter().enumerate().skip(1) {
            if let Some(id) = converged(s) {
                let steps = (j * stride).min(n);
                traj.states.extend_from_slice(&piece.states[1..=j]);
                traj.steps += steps;
                signal.append(&piece_sig.slice(0, steps))?;
                traj.signal = Some(signal);
                return Ok((traj, id));
            }
        }
        traj.states.extend_from_slice(&piece.states[1..]);
        traj.steps += n;
        signal.append(piece_sig)?;
    }
    let last = traj.last();
    let (_, distance) = nearest_equilibrium(last, equilibria, grid);
    Err(WaveError::Timeout {
        t_max,
        distance,
        energy: energy(last, nl, grid)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Departure {
    /// Index of the unstable mode in `Equilibrium::unstable_modes`.
    pub mode: usize,
    pub amplitude: f64,
    /// `+1` or `-1`.
    pub sign: i8,
}

#[derive(Debug, Clone)]
pub struct HeteroclinicEdge {
    pub source: usize,
    pub target: usize,
    pub trajectory: Trajectory,
    pub departure: Departure,
}

impl HeteroclinicEdge {
    pub fn duration(&self) -> f64 {
        self.trajectory.duration()
    }
}

/// Shoots along every unstable eigenvector of `e`, both signs, and follows the
/// damped flow to the equilibrium where each branch lands.
pub fn compute_heteroclinics(
    e: &Equilibrium,
    equilibria: &[Equilibrium],
    grid: &Grid,
    nl: &Nonlinearity,
    eps: f64,
    t_max: f64,
    delta_conv: f64,
) -> Result<Vec<HeteroclinicEdge>> {
    if e.morse_index == 0 || e.unstable_modes.is_empty() {
        return Err(WaveError::Argument(format!(
            "equilibrium {} has no unstable direction",
            e.id
        )));
    }
    if !(eps > delta_conv) {
        return Err(WaveError::Argument(format!(
            "departure amplitude {eps} must exceed delta_conv {delta_conv}"
        )));
    }
    let branches: Vec<Departure> = (0..e.unstable_modes.len())
        .flat_map(|m| {
            [1i8, -1].map(|sign| Departure {
                mode: m,
                amplitude: eps,
                sign,
            })
        })
        .collect();
    let results = par::map(&branches, |d| {
        let psi = &e.unstable_modes[d.mode];
        let s = d.sign as f64 * d.amplitude;
        let start = State::at_rest(e.e.iter().zip(psi).map(|(a, p)| a + s * p).collect());
        flow_sampled(&start, grid, nl, equilibria, t_max, delta_conv, SAMPLE_STRIDE)
    });
    let mut edges = Vec::new();
    for (d, r) in branches.into_iter().zip(results) {
        let (trajectory, target) = r?;
        if target == e.id {
            log::warn!(
                "branch mode {} sign {} from {} returned to its source; discarded",
                d.mode,
                d.sign,
                e.id
            );
            continue;
        }
        edges.push(HeteroclinicEdge {
            source: e.id,
            target,
            trajectory,
            departure: d,
        });
    }
    Ok(edges)
}

/// Which way a path crosses an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Source to target, along the damped flow.
    Forward,
    /// Target to source, by the double U-turn.
    Backward,
}

#[derive(Debug, Clone)]
pub struct ConnectionGraph {
    pub nodes: Vec<Equilibrium>,
    pub edges: Vec<HeteroclinicEdge>,
    /// `adjacency[id]` lists `(edge index, neighbour id, orientation)`.
    pub adjacency: Vec<Vec<(usize, usize, Orientation)>>,
    /// Energy of every node at rest, indexed by id.
    pub energies: Vec<f64>,
    /// Upper bound on the X norm along stored trajectories from their energy.
    pub absorbing_bound: f64,
}

impl ConnectionGraph {
    pub fn node(&self, id: usize) -> &Equilibrium {
        &self.nodes[id]
    }

    /// Connected components of the undirected graph, each sorted.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.nodes.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &(_, w, _) in &self.adjacency[u] {
                    if !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                        queue.push_back(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Fewest-edge undirected path; ties go to the smaller total edge duration,
    /// then to the lower edge index.
    pub fn shortest_path(&self, from: usize, to: usize) -> Option<Vec<(usize, Orientation)>> {
        let n = self.nodes.len();
        if from >= n || to >= n {
            return None;
        }
        // Dijkstra on (hops, duration); the graphs have a handful of nodes
        let mut cost: Vec<Option<(usize, f64)>> = vec![None; n];
        let mut prev: Vec<Option<(usize, usize, Orientation)>> = vec![None; n];
        let mut done = vec![false; n];
        cost[from] = Some((0, 0.0));
        let better = |a: (usize, f64), b: Option<(usize, f64)>| match b {
            None => true,
            Some(b) => a.0 < b.0 || (a.0 == b.0 && a.1 < b.1),
        };
        loop {
            let mut pick: Option<usize> = None;
            for u in 0..n {
                if done[u] || cost[u].is_none() {
                    continue;
                }
                if pick.map_or(true, |p| better(cost[u].unwrap(), cost[p])) {
                    pick = Some(u);
                }
            }
            let Some(u) = pick else { break };
            done[u] = true;
            let (hops, dur) = cost[u].unwrap();
            let mut nbrs = self.adjacency[u].clone();
            nbrs.sort_by_key(|&(e, _, _)| e);
            for (e, w, o) in nbrs {
                let c = (hops + 1, dur + self.edges[e].duration());
                if !done[w] && better(c, cost[w]) {
                    cost[w] = Some(c);
                    prev[w] = Some((u, e, o));
                }
            }
        }
        cost[to]?;
        let mut path = Vec::new();
        let mut cur = to;
        while let Some((p, e, o)) = prev[cur] {
            path.push((e, o));
            cur = p;
        }
        path.reverse();
        Some(path)
    }
}

/// `-min F` sampled on `[-10, 10]`; the damped energy bounds `½‖V‖²_X - this`.
fn primitive_floor(nl: &Nonlinearity, grid: &Grid) -> f64 {
    let mut m = 0.0f64;
    for i in 0..grid.n() {
        let x = grid.x(i);
        for k in -2000..=2000 {
            m = m.min(nl.primitive(x, k as f64 * 0.005));
        }
    }
    -m
}

/// Heteroclinics from every unstable node, assembled into a graph that must be
/// connected.
pub fn build_connection_graph(
    equilibria: &[Equilibrium],
    grid: &Grid,
    nl: &Nonlinearity,
    eps: f64,
    t_max: f64,
    delta_conv: f64,
) -> Result<ConnectionGraph> {
    if equilibria.is_empty() {
        return Err(WaveError::Argument("no equilibria".into()));
    }
    for (i, eq) in equilibria.iter().enumerate() {
        if eq.id != i {
            return Err(WaveError::Argument(format!(
                "equilibrium at position {i} has id {}",
                eq.id
            )));
        }
    }
    let unstable: Vec<&Equilibrium> = equilibria.iter().filter(|e| e.morse_index > 0).collect();
    let per_node = par::map(&unstable, |e| {
        compute_heteroclinics(e, equilibria, grid, nl, eps, t_max, delta_conv)
    });
    let mut edges = Vec::new();
    for r in per_node {
        edges.extend(r?);
    }
    edges.sort_by(|a, b| {
        (a.source, a.target, a.departure.mode, -a.departure.sign)
            .cmp(&(b.source, b.target, b.departure.mode, -b.departure.sign))
    });
    let mut adjacency = vec![Vec::new(); equilibria.len()];
    for (k, edge) in edges.iter().enumerate() {
        adjacency[edge.source].push((k, edge.target, Orientation::Forward));
        adjacency[edge.target].push((k, edge.source, Orientation::Backward));
    }
    let energies = equilibria
        .iter()
        .map(|e| energy(&State::at_rest(e.e.clone()), nl, grid))
        .collect::<Result<Vec<_>>>()?;
    let top = edges
        .iter()
        .map(|e| energy(e.trajectory.first(), nl, grid))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .chain(energies.iter().cloned())
        .fold(f64::NEG_INFINITY, f64::max);
    let absorbing_bound = (2.0 * (top + primitive_floor(nl, grid))).max(0.0).sqrt();
    let graph = ConnectionGraph {
        nodes: equilibria.to_vec(),
        edges,
        adjacency,
        energies,
        absorbing_bound,
    };
    let comps = graph.components();
    if comps.len() > 1 {
        return Err(WaveError::Structural(format!(
            "connection graph has {} components: {:?}",
            comps.len(),
            comps
        )));
    }
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::{default_seeds, enumerate_equilibria};

    #[test]
    fn converged_start_returns_single_state() {
        let g = Grid::with_defaults(31).unwrap();
        let nl = Nonlinearity::cubic(15.0);
        let eqs = enumerate_equilibria(&g, &nl, &default_seeds(&g)).unwrap().equilibria;
        let start = State::at_rest(eqs[1].e.clone());
        let (traj, id) = flow_to_equilibrium(&start, &g, &nl, &eqs, 10.0, 1e-4).unwrap();
        assert_eq!(id, 1);
        assert_eq!(traj.states.len(), 1);
    }

    #[test]
    fn timeout_reports_distance() {
        let g = Grid::with_defaults(31).unwrap();
        let nl = Nonlinearity::cubic(15.0);
        let eqs = enumerate_equilibria(&g, &nl, &default_seeds(&g)).unwrap().equilibria;
        let start = State::at_rest(g.sample(|x| 2.0 * (std::f64::consts::PI * x).sin()));
        match flow_to_equilibrium(&start, &g, &nl, &eqs, 0.5, 1e-4) {
            Err(WaveError::Timeout { distance, .. }) => assert!(distance > 1e-4),
            other => panic!("expected timeout, got {other:?}"),
        }
    }

    #[test]
    fn stable_node_has_no_heteroclinics() {
        let g = Grid::with_defaults(31).unwrap();
        let nl = Nonlinearity::cubic(5.0);
        let eqs = enumerate_equilibria(&g, &nl, &default_seeds(&g)).unwrap().equilibria;
        assert!(matches!(
            compute_heteroclinics(&eqs[0], &eqs, &g, &nl, 1e-3, 10.0, 1e-4),
            Err(WaveError::Argument(_))
        ));
        let graph = build_connection_graph(&eqs, &g, &nl, 1e-3, 10.0, 1e-4).unwrap();
        assert_eq!(graph.nodes.len(), 1);
        assert!(graph.edges.is_empty());
        assert_eq!(graph.components().len(), 1);
    }
}
