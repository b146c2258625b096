//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use wavectl_core::localctl::{gramian_apply, simulate_linear, LinearControlProblem};
use wavectl_core::{x_inner, ControlSignal, Grid, State};

/// Shooting on the discrete recurrence `e_{i+1} = 2 e_i - e_{i-1} + dx² f(e_i)`
/// from `e_0 = 0`, `e_1 = s dx`; returns the right boundary value and the profile.
pub fn shoot(s: f64, n: usize, lambda: f64) -> (f64, Vec<f64>) {
    let dx = 1.0 / (n as f64 + 1.0);
    let f = |e: f64| lambda * (e * e * e - e);
    let mut prev = 0.0;
    let mut cur = s * dx;
    let mut out = vec![cur];
    for _ in 1..=n {
        let next = 2.0 * cur - prev + dx * dx * f(cur);
        prev = cur;
        cur = next;
        if cur.abs() > 1e6 {
            return (cur.signum() * 1e6, out);
        }
        out.push(cur);
    }
    out.pop();
    (cur, out)
}

pub fn bisect(mut lo: f64, mut hi: f64, n: usize, lambda: f64) -> f64 {
    let mut flo = shoot(lo, n, lambda).0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = shoot(mid, n, lambda).0;
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Slopes in [-50, 50] where the shot lands on the right boundary.
pub fn shooting_roots(n: usize, lambda: f64) -> Vec<f64> {
    let samples = 4001;
    let grid: Vec<f64> = (0..samples).map(|k| -50.0 + 100.0 * k as f64 / (samples - 1) as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&s| shoot(s, n, lambda).0).collect();
    let mut roots = Vec::new();
    for k in 0..samples - 1 {
        if vals[k] == 0.0 {
            roots.push(grid[k]);
        } else if vals[k] * vals[k + 1] < 0.0 {
            roots.push(bisect(grid[k], grid[k + 1], n, lambda));
        }
    }
    roots
}

/// Dense oracle: assemble Λ column by column, solve by LU, and compare the
/// control energy `<Λ p, p>_X = ‖L* p‖²` with the iterative one.
pub fn dense_energy(p: &LinearControlProblem, g: &Grid) -> f64 {
    let n = g.n();
    let m = 2 * n;
    let unit = |j: usize| {
        let mut s = State::zero(n);
        if j < n {
            s.v[j] = 1.0;
        } else {
            s.vt[j - n] = 1.0;
        }
        s
    };
    let mut a = DMatrix::<f64>::zeros(m, m);
    for j in 0..m {
        let col = gramian_apply(&unit(j), p, g).unwrap();
        for i in 0..n {
            a[(i, j)] = col.v[i];
            a[(n + i, j)] = col.vt[i];
        }
    }
    let steps = g.steps_in(p.horizon);
    let free = simulate_linear(p, &ControlSignal::zeros(g, steps), g).unwrap();
    let d = p.r1.sub(&free);
    let rhs = DVector::from_iterator(m, d.v.iter().chain(&d.vt).cloned());
    let sol = a.lu().solve(&rhs).expect("nonsingular Gramian");
    let ps = State {
        v: sol.rows(0, n).iter().cloned().collect(),
        vt: sol.rows(n, n).iter().cloned().collect(),
        t: 0.0,
    };
    x_inner(&d, &ps, g)
}

