//! Steady states `-e'' + f(x, e) = 0`, their linearizations and stability spectra.

use crate::error::{Result, WaveError};
use crate::grid::{h1_inner, l2_inner, laplacian_into, Grid};
use crate::linalg::SymTridiag;
use crate::nonlinearity::Nonlinearity;
use crate::par;

pub const RESIDUAL_TOL: f64 = 1e-10;
pub const MAX_NEWTON: usize = 100;
pub const MAX_HALVINGS: usize = 30;
pub const DEDUP_TOL: f64 = 1e-6;
/// Number of eigenvalues kept on each equilibrium.
pub const SPECTRUM_HEAD: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub e: Vec<f64>,
    pub residual_inf: f64,
    pub spectrum: Vec<f64>,
    pub morse_index: usize,
    pub id: usize,
    /// `zero`, or `m<morse><sign>` with the sign of the first-mode coefficient.
    pub label: String,
    pub newton_iterations: usize,
    /// Eigenvectors of the negative eigenvalues, normalized to unit H¹₀ norm and
    /// signed so that their first nonzero projection on `sin(kπx)` is positive.
    pub unstable_modes: Vec<Vec<f64>>,
}

impl Equilibrium {
    /// `<e, √2 sin(πx)>`.
    pub fn first_mode(&self, grid: &Grid) -> f64 {
        first_mode_coefficient(&self.e, grid)
    }

    pub fn is_trivial(&self) -> bool {
        self.e.iter().all(|&x| x.abs() < DEDUP_TOL)
    }
}

pub fn first_mode_coefficient(e: &[f64], grid: &Grid) -> f64 {
    let mode = grid.sample(|x| std::f64::consts::SQRT_2 * (std::f64::consts::PI * x).sin());
    l2_inner(e, &mode, grid)
}

/// `-Δ_h e + f(·, e)`.
pub fn residual(e: &[f64], grid: &Grid, nl: &Nonlinearity) -> Vec<f64> {
    let mut lap = vec![0.0; e.len()];
    laplacian_into(e, grid.dx(), &mut lap);
    e.iter()
        .enumerate()
        .map(|(i, &ei)| -lap[i] + nl.f(grid.x(i), ei))
        .collect()
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `q_i = f'(x_i, e_i)`.
pub fn linearize(e: &Equilibrium, nl: &Nonlinearity, grid: &Grid) -> Vec<f64> {
    potential(&e.e, nl, grid)
}

pub fn potential(e: &[f64], nl: &Nonlinearity, grid: &Grid) -> Vec<f64> {
    e.iter()
        .enumerate()
        .map(|(i, &ei)| nl.df(grid.x(i), ei))
        .collect()
}

/// Damped Newton on `G(e) = -Δ_h e + f(·, e)`. The result carries the spectrum
/// head and a provisional id 0; [`enumerate_equilibria`] assigns the final ids.
pub fn find_equilibrium(guess: &[f64], grid: &Grid, nl: &Nonlinearity) -> Result<Equilibrium> {
    grid.check_len(guess.len())?;
    if guess.iter().any(|x| !x.is_finite()) {
        return Err(WaveError::Argument("non-finite guess".into()));
    }
    let mut e = guess.to_vec();
    let mut g = residual(&e, grid, nl);
    let mut r2 = norm2(&g);
    let mut iterations = 0;
    while norm_inf(&g) >= RESIDUAL_TOL {
        if iterations == MAX_NEWTON {
            return Err(WaveError::Convergence {
                iterations,
                residual: norm_inf(&g),
            });
        }
        iterations += 1;
        let jac = SymTridiag::schrodinger(&potential(&e, nl, grid), grid.dx());
        let pivot_floor = 1e-13 * jac.off.abs();
        let delta = jac.solve_shifted(0.0, &g, pivot_floor)?;
        let mut step = 1.0;
        let mut trial = Vec::new();
        let mut trial_g = Vec::new();
        for _ in 0..=MAX_HALVINGS {
            trial = e.iter().zip(&delta).map(|(a, d)| a - step * d).collect();
            trial_g = residual(&trial, grid, nl);
            if norm2(&trial_g) < r2 {
                break;
            }
            step *= 0.5;
        }
        let new_r2 = norm2(&trial_g);
        if !new_r2.is_finite() {
            return Err(WaveError::Numeric("Newton iterate is not finite".into()));
        }
        if new_r2 >= r2 {
            // stuck at the roundoff floor or at a non-descent point
            return Err(WaveError::Convergence {
                iterations,
                residual: norm_inf(&g),
            });
        }
        e = trial;
        g = trial_g;
        r2 = new_r2;
    }
    let residual_inf = norm_inf(&g);
    let (spectrum, unstable_modes) = spectrum_with_modes(&e, SPECTRUM_HEAD, grid, nl)?;
    let morse_index = spectrum.iter().filter(|&&m| m < 0.0).count();
    let label = make_label(&e, morse_index, grid);
    Ok(Equilibrium {
        e,
        residual_inf,
        spectrum,
        morse_index,
        id: 0,
        label,
        newton_iterations: iterations,
        unstable_modes,
    })
}

fn make_label(e: &[f64], morse: usize, grid: &Grid) -> String {
    if norm_inf(e) < DEDUP_TOL {
        return "zero".into();
    }
    let c = first_mode_coefficient(e, grid);
    format!("m{morse}{}", if c >= 0.0 { '+' } else { '-' })
}

/// The `k` smallest eigenvalues of `-Δ_h + diag(f'(·, e))`, ascending.
pub fn stability_spectrum(
    e: &Equilibrium,
    k: usize,
    grid: &Grid,
    nl: &Nonlinearity,
) -> Result<Vec<f64>> {
    if k > grid.n() {
        return Err(WaveError::Argument(format!(
            "requested {k} eigenvalues on {} nodes",
            grid.n()
        )));
    }
    grid.check_len(e.e.len())?;
    let t = SymTridiag::schrodinger(&linearize(e, nl, grid), grid.dx());
    let ev = t.smallest_eigenvalues(k);
    if ev.iter().any(|x| !x.is_finite()) {
        return Err(WaveError::Numeric("bisection".into()));
    }
    Ok(ev)
}

fn spectrum_with_modes(
    e: &[f64],
    k: usize,
    grid: &Grid,
    nl: &Nonlinearity,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let t = SymTridiag::schrodinger(&potential(e, nl, grid), grid.dx());
    let k = k.min(grid.n());
    let mut ev = t.smallest_eigenvalues(k);
    // the head must contain every negative eigenvalue
    while ev.last().is_some_and(|&m| m < 0.0) && ev.len() < grid.n() {
        ev = t.smallest_eigenvalues((2 * ev.len()).min(grid.n()));
    }
    let mut modes = Vec::new();
    for &mu in ev.iter().filter(|&&m| m < 0.0) {
        modes.push(normalize_mode(t.eigenvector(mu)?, grid));
    }
    Ok((ev, modes))
}

/// Eigenvector of the `j`-th smallest eigenvalue (from 0) of the linearization,
/// normalized like the unstable modes.
pub fn eigenmode(e: &Equilibrium, j: usize, grid: &Grid, nl: &Nonlinearity) -> Result<Vec<f64>> {
    if j >= grid.n() {
        return Err(WaveError::Argument(format!("mode {j} on {} nodes", grid.n())));
    }
    let t = SymTridiag::schrodinger(&linearize(e, nl, grid), grid.dx());
    let mu = t.smallest_eigenvalues(j + 1)[j];
    Ok(normalize_mode(t.eigenvector(mu)?, grid))
}

/// Unit H¹₀ norm, sign fixed by the first sine mode with a non-negligible projection.
pub fn normalize_mode(mut psi: Vec<f64>, grid: &Grid) -> Vec<f64> {
    let nrm = h1_inner(&psi, &psi, grid).sqrt();
    psi.iter_mut().for_each(|x| *x /= nrm);
    for k in 1..=grid.n() {
        let kk = k as f64;
        let mode = grid.sample(|x| (kk * std::f64::consts::PI * x).sin());
        let c = l2_inner(&psi, &mode, grid);
        if c.abs() > 1e-8 {
            if c < 0.0 {
                psi.iter_mut().for_each(|x| *x = -*x);
            }
            break;
        }
    }
    psi
}

/// `{0} ∪ {±c sin(kπx) : c ∈ {0.3, 0.8, 1.2}, k ∈ {1, 2}}`.
pub fn default_seeds(grid: &Grid) -> Vec<Vec<f64>> {
    let mut seeds = vec![vec![0.0; grid.n()]];
    for k in [1.0, 2.0] {
        for c in [0.3, 0.8, 1.2] {
            for s in [1.0, -1.0] {
                seeds.push(grid.sample(|x| s * c * (k * std::f64::consts::PI * x).sin()));
            }
        }
    }
    seeds
}

#[derive(Debug, Clone)]
pub struct Enumeration {
    pub equilibria: Vec<Equilibrium>,
    /// `(seed index, error)` for every seed that did not converge.
    pub failures: Vec<(usize, WaveError)>,
}

/// Solves every seed, merges duplicates and assigns ids in the order
/// (Morse index, signed first-mode coefficient).
pub fn enumerate_equilibria(
    grid: &Grid,
    nl: &Nonlinearity,
    seeds: &[Vec<f64>],
) -> Result<Enumeration> {
    if seeds.is_empty() {
        return Err(WaveError::Argument("empty seed list".into()));
    }
    let results = par::map(seeds, |s| find_equilibrium(s, grid, nl));
    let mut found = Vec::new();
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(eq) => found.push(eq),
            Err(err) => {
                log::warn!("seed {i} failed: {err}");
                failures.push((i, err));
            }
        }
    }
    let mut keyed: Vec<(usize, f64, Equilibrium)> = found
        .into_iter()
        .map(|eq| (eq.morse_index, eq.first_mode(grid), eq))
        .collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut kept: Vec<Equilibrium> = Vec::new();
    for (_, _, eq) in keyed {
        let dup = kept.iter().position(|k| {
            k.e.iter()
                .zip(&eq.e)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
                < DEDUP_TOL
        });
        match dup {
            // keep the best-certified representative
            Some(j) if eq.residual_inf < kept[j].residual_inf => kept[j] = eq,
            Some(_) => {}
            None => kept.push(eq),
        }
    }
    for (id, eq) in kept.iter_mut().enumerate() {
        eq.id = id;
    }
    Ok(Enumeration {
        equilibria: kept,
        failures,
    })
}

/// Linear interpolation of nodal values onto another grid (zero Dirichlet ends).
pub fn interpolate(values: &[f64], from: &Grid, to: &Grid) -> Vec<f64> {
    let n = values.len();
    to.sample(|x| {
        let s = x / from.dx();
        let j = s.floor() as usize;
        let frac = s - j as f64;
        let at = |k: usize| {
            if k == 0 || k > n {
                0.0
            } else {
                values[k - 1]
            }
        };
        (1.0 - frac) * at(j) + frac * at(j + 1)
    })
}
