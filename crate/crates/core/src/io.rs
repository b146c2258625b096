//! File formats: binary states, trajectories and signals, CSV export, and
//! sectioned key-value text used for manifests and configuration.
//!
//! Binary files start with one ASCII header line followed by little-endian
//! `f64` blocks. Every write goes to a temporary sibling first and is renamed
//! into place.

use crate::attractor::ConnectionGraph;
use crate::equilibria::Equilibrium;
use crate::error::{Result, WaveError};
use crate::localctl::ControlReport;
use crate::nonlinearity::Nonlinearity;
use crate::planner::{Plan, Survey, VerifyReport};
use crate::grid::Grid;
use crate::state::{ControlSignal, State};
use crate::wavesolver::{ModeTag, Trajectory};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// Writes `bytes` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn push_f64s(out: &mut Vec<u8>, xs: &[f64]) {
    for x in xs {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

/// Splits a binary file into its header tokens and the float payload.
fn split_header<'a>(bytes: &'a [u8], magic: &str) -> Result<(Vec<&'a str>, Vec<f64>)> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| WaveError::Format("missing header line".into()))?;
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| WaveError::Format("header is not ASCII".into()))?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.first() != Some(&magic) {
        return Err(WaveError::Format(format!("expected {magic} header, got {header:?}")));
    }
    let body = &bytes[nl + 1..];
    if body.len() % 8 != 0 {
        return Err(WaveError::Format(format!("payload of {} bytes is not a whole number of floats", body.len())));
    }
    let floats = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok((tokens, floats))
}

fn token<T: std::str::FromStr>(tokens: &[&str], k: usize, what: &str) -> Result<T> {
    tokens
        .get(k)
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| WaveError::Format(format!("bad or missing {what} in header")))
}

fn expect_len(got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(WaveError::Format(format!("payload has {got} floats, expected {expected}")));
    }
    Ok(())
}

/// `WCTL1 n dt t`, then `v` and `v_t`.
pub fn encode_state(state: &State, dt: f64) -> Vec<u8> {
    let mut out = format!("WCTL1 {} {} {}\n", state.len(), dt, state.t).into_bytes();
    push_f64s(&mut out, &state.v);
    push_f64s(&mut out, &state.vt);
    out
}

/// Returns the state and the `dt` recorded with it.
pub fn decode_state(bytes: &[u8]) -> Result<(State, f64)> {
    let (tok, f) = split_header(bytes, "WCTL1")?;
    let n: usize = token(&tok, 1, "n")?;
    let dt: f64 = token(&tok, 2, "dt")?;
    let t: f64 = token(&tok, 3, "t")?;
    expect_len(f.len(), 2 * n)?;
    let state = State::new(f[..n].to_vec(), f[n..].to_vec(), t)?;
    Ok((state, dt))
}

pub fn write_state(path: &Path, state: &State, dt: f64) -> Result<()> {
    write_atomic(path, &encode_state(state, dt))
}

pub fn read_state(path: &Path) -> Result<(State, f64)> {
    decode_state(&fs::read(path)?)
}

/// Reads a state and checks it against the grid.
pub fn load_state(path: &Path, grid: &Grid) -> Result<State> {
    let (s, _) = read_state(path)?;
    grid.check_len(s.len())?;
    Ok(s)
}

/// `x,v,vt` rows with 17 significant digits.
pub fn state_csv(state: &State, grid: &Grid) -> String {
    let mut out = String::from("x,v,vt\n");
    for i in 0..state.len() {
        let _ = writeln!(out, "{:.16e},{:.16e},{:.16e}", grid.x(i), state.v[i], state.vt[i]);
    }
    out
}

/// `WTRJ1 n steps dt mode stride samples`, then per sample `t`, `v`, `v_t`.
pub fn encode_trajectory(traj: &Trajectory) -> Vec<u8> {
    let n = traj.first().len();
    let mut out = format!(
        "WTRJ1 {n} {} {} {} {} {}\n",
        traj.steps,
        traj.dt,
        traj.mode.as_str(),
        traj.stride,
        traj.states.len()
    )
    .into_bytes();
    for s in &traj.states {
        push_f64s(&mut out, &[s.t]);
        push_f64s(&mut out, &s.v);
        push_f64s(&mut out, &s.vt);
    }
    out
}

/// Samples only; the forcing is stored separately as a signal file.
pub fn decode_trajectory(bytes: &[u8]) -> Result<Trajectory> {
    let (tok, f) = split_header(bytes, "WTRJ1")?;
    let n: usize = token(&tok, 1, "n")?;
    let steps: usize = token(&tok, 2, "steps")?;
    let dt: f64 = token(&tok, 3, "dt")?;
    let mode_s: String = token(&tok, 4, "mode")?;
    let mode = ModeTag::parse(&mode_s).ok_or_else(|| WaveError::Format(format!("unknown mode {mode_s}")))?;
    let stride: usize = token(&tok, 5, "stride")?;
    let samples: usize = token(&tok, 6, "samples")?;
    let block = 2 * n + 1;
    expect_len(f.len(), samples * block)?;
    let states = f
        .chunks_exact(block)
        .map(|c| State::new(c[1..=n].to_vec(), c[n + 1..].to_vec(), c[0]))
        .collect::<Result<Vec<_>>>()?;
    if states.is_empty() {
        return Err(WaveError::Format("trajectory without samples".into()));
    }
    Ok(Trajectory {
        states,
        mode,
        stride,
        steps,
        dt,
        signal: None,
    })
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    write_atomic(path, &encode_trajectory(traj))
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    decode_trajectory(&fs::read(path)?)
}

/// `WCTL-SIG1 n steps dt lo hi`, then the support columns of every step.
pub fn encode_signal(signal: &ControlSignal) -> Vec<u8> {
    let (lo, hi) = signal.support();
    let mut out = format!("WCTL-SIG1 {} {} {} {lo} {hi}\n", signal.n(), signal.steps(), signal.dt()).into_bytes();
    push_f64s(&mut out, signal.support_data());
    out
}

/// Decodes a signal written for `grid`.
pub fn decode_signal(bytes: &[u8], grid: &Grid) -> Result<ControlSignal> {
    let (tok, f) = split_header(bytes, "WCTL-SIG1")?;
    let n: usize = token(&tok, 1, "n")?;
    let steps: usize = token(&tok, 2, "steps")?;
    let dt: f64 = token(&tok, 3, "dt")?;
    let lo: usize = token(&tok, 4, "lo")?;
    let hi: usize = token(&tok, 5, "hi")?;
    grid.check_len(n)?;
    if (lo, hi) != grid.support() || (dt - grid.dt()).abs() > 1e-15 * grid.dt() {
        return Err(WaveError::Format("signal was written for a different grid".into()));
    }
    expect_len(f.len(), steps * (hi - lo))?;
    if f.iter().any(|x| !x.is_finite()) {
        return Err(WaveError::Numeric("signal file".into()));
    }
    Ok(ControlSignal::from_support_rows(grid, f))
}

pub fn write_signal(path: &Path, signal: &ControlSignal) -> Result<()> {
    write_atomic(path, &encode_signal(signal))
}

pub fn read_signal(path: &Path, grid: &Grid) -> Result<ControlSignal> {
    decode_signal(&fs::read(path)?, grid)
}

/// Line-based text with `[section]` headers and `key = value` entries.
///
/// Blank lines and lines starting with `#` are ignored. Keys before the first
/// header belong to the unnamed section `""`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValue {
    pub sections: Vec<(String, Vec<(String, String)>)>,
}

impl KeyValue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn section(&mut self, name: &str) -> &mut Self {
        self.sections.push((name.to_string(), Vec::new()));
        self
    }

    /// Adds an entry to the last section.
    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        if self.sections.is_empty() {
            self.sections.push((String::new(), Vec::new()));
        }
        let last = self.sections.last_mut().expect("a section");
        last.1.push((key.to_string(), value.to_string()));
        self
    }

    /// First value of `key` in the first section called `section`.
    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections
            .iter()
            .filter(|(s, _)| s == section)
            .flat_map(|(_, kv)| kv.iter())
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Self::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| WaveError::Format(format!("line {}: unterminated section header", no + 1)))?;
                out.section(name.trim());
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| WaveError::Format(format!("line {}: expected key = value", no + 1)))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(WaveError::Format(format!("line {}: empty key", no + 1)));
            }
            out.set(k, v.trim());
        }
        Ok(out)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, (name, kv)) in self.sections.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            if !name.is_empty() {
                let _ = writeln!(out, "[{name}]");
            }
            for (k, v) in kv {
                let _ = writeln!(out, "{k} = {v}");
            }
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.render().as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }
}

/// Whitespace-separated list, for vector-valued manifest entries.
pub fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

/// Equilibrium manifest; `files[k]` is where equilibrium `k` was written.
pub fn equilibria_manifest(eqs: &[Equilibrium], nl: &Nonlinearity, files: &[String]) -> KeyValue {
    let mut kv = KeyValue::new();
    kv.set("count", eqs.len()).set("lambda", nl.lambda());
    let morse: Vec<usize> = eqs.iter().map(|e| e.morse_index).collect();
    kv.set("morse_indices", join(&morse));
    for (k, e) in eqs.iter().enumerate() {
        kv.section(&format!("equilibrium.{}", e.id))
            .set("id", e.id)
            .set("label", &e.label)
            .set("lambda", nl.lambda())
            .set("residual", e.residual_inf)
            .set("morse_index", e.morse_index)
            .set("max_abs", e.e.iter().fold(0.0f64, |m, x| m.max(x.abs())))
            .set("newton_iterations", e.newton_iterations)
            .set("spectrum", join(&e.spectrum));
        if let Some(f) = files.get(k) {
            kv.set("file", f);
        }
    }
    kv
}

/// Graph manifest; `files[k]` names the trajectory file of edge `k`.
pub fn graph_manifest(graph: &ConnectionGraph, files: &[String]) -> KeyValue {
    let mut kv = KeyValue::new();
    kv.set("nodes", graph.nodes.len())
        .set("edges", graph.edges.len())
        .set("absorbing_bound", graph.absorbing_bound)
        .set("components", graph.components().len());
    for (e, en) in graph.nodes.iter().zip(&graph.energies) {
        kv.section(&format!("node.{}", e.id))
            .set("label", &e.label)
            .set("energy", en)
            .set("morse_index", e.morse_index);
    }
    for (k, edge) in graph.edges.iter().enumerate() {
        kv.section(&format!("edge.{k}"))
            .set("source", edge.source)
            .set("target", edge.target)
            .set("mode", edge.departure.mode)
            .set("sign", edge.departure.sign)
            .set("amplitude", edge.departure.amplitude)
            .set("steps", edge.trajectory.steps)
            .set("duration", edge.duration())
            .set("samples", edge.trajectory.states.len());
        if let Some(f) = files.get(k) {
            kv.set("trajectory", f);
        }
    }
    kv
}

/// Local-control report manifest.
pub fn control_report_manifest(rep: &ControlReport, signal_file: &str) -> KeyValue {
    let mut kv = KeyValue::new();
    kv.set("endpoint_residual", rep.endpoint_residual)
        .set("cg_iterations", rep.cg_iterations)
        .set("fixed_point_iterations", rep.fixed_point_iterations)
        .set("l1_l2_norm", rep.l1_l2_norm)
        .set("l2_norm", rep.l2_norm)
        .set("residual_history", join(&rep.residual_history))
        .set("steps", rep.control.steps())
        .set("signal", signal_file);
    kv
}

/// Plan and verification manifest with one section per declared segment and
/// one per executed record.
pub fn plan_manifest(plan: Option<&Plan>, report: &VerifyReport, files: &[(&str, String)]) -> KeyValue {
    let mut kv = KeyValue::new();
    kv.set("pass", report.pass)
        .set("tol", report.tol)
        .set(
            "endpoint_error",
            report.endpoint_error.map_or("none".to_string(), |e| e.to_string()),
        )
        .set("t_total", report.t_total)
        .set("l1_l2_norm", report.l1_l2_norm)
        .set("l2_norm", report.l2_norm)
        .set("segments", report.kinds.len())
        .set("kinds", join(&report.kinds.iter().map(|k| k.as_str()).collect::<Vec<_>>()));
    if let Some(c) = &report.cause {
        kv.set("cause", c);
    }
    for (k, v) in files {
        kv.set(k, v);
    }
    if let Some(p) = plan {
        kv.set("route", join(&p.route));
        for (i, seg) in p.segments.iter().enumerate() {
            kv.section(&format!("segment.{i}"))
                .set("kind", seg.kind.as_str())
                .set("steps", seg.steps)
                .set("duration", seg.duration);
            if let Some(j) = seg.junction {
                kv.set("junction", j);
            }
        }
    }
    for (i, r) in report.records.iter().enumerate() {
        kv.section(&format!("record.{i}"))
            .set("segment", r.index)
            .set("kind", r.kind.as_str())
            .set("inserted", r.inserted)
            .set("steps", r.steps)
            .set("start_drift", r.start_drift)
            .set("end_drift", r.end_drift)
            .set("energy_start", r.energy_start)
            .set("energy_end", r.energy_end);
    }
    kv
}

/// One row per pair: id, norms, `T_total`, endpoint error, control norms, status.
pub fn survey_csv(survey: &Survey) -> String {
    let mut out = String::from("pair,norm_v0,norm_v1,t_total,endpoint_error,l1_l2_norm,l2_norm,segments,status\n");
    let g = |x: f64| format!("{x:.16e}");
    for r in &survey.rows {
        let status = match &r.error {
            None => "ok".to_string(),
            Some(e) => format!("\"failed: {}\"", e.replace('"', "'")),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.pair,
            g(r.norm0),
            g(r.norm1),
            g(r.t_total),
            r.endpoint_error.map_or(String::new(), g),
            g(r.l1_l2_norm),
            g(r.l2_norm),
            r.segments,
            status
        );
    }
    out
}
