//! Symmetric tridiagonal kernels: Thomas solve, Sturm counts, bisection, inverse iteration.

use crate::error::{Result, WaveError};

/// Symmetric tridiagonal matrix with diagonal `diag` and constant off-diagonal `off`.
#[derive(Debug, Clone)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    pub off: f64,
}

impl SymTridiag {
    /// `-Δ_h + diag(q)` on `n = q.len()` interior nodes.
    pub fn schrodinger(q: &[f64], dx: f64) -> Self {
        let inv = 1.0 / (dx * dx);
        Self {
            diag: q.iter().map(|qi| 2.0 * inv + qi).collect(),
            off: -inv,
        }
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.off * x[i - 1];
                }
                if i + 1 < n {
                    y += self.off * x[i + 1];
                }
                y
            })
            .collect()
    }

    /// Solves `(T - shift I) x = rhs`; fails with the smallest pivot when it is
    /// below `pivot_floor` in magnitude.
    pub fn solve_shifted(&self, shift: f64, rhs: &[f64], pivot_floor: f64) -> Result<Vec<f64>> {
        let n = self.n();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut min_pivot = f64::INFINITY;
        let mut piv = self.diag[0] - shift;
        min_pivot = min_pivot.min(piv.abs());
        if piv.abs() < pivot_floor {
            return Err(WaveError::SingularJacobian { pivot: piv.abs() });
        }
        c[0] = self.off / piv;
        d[0] = rhs[0] / piv;
        for i in 1..n {
            piv = self.diag[i] - shift - self.off * c[i - 1];
            min_pivot = min_pivot.min(piv.abs());
            if piv.abs() < pivot_floor {
                return Err(WaveError::SingularJacobian { pivot: min_pivot });
            }
            c[i] = self.off / piv;
            d[i] = (rhs[i] - self.off * d[i - 1]) / piv;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d[i] - c[i] * x[i + 1];
        }
        Ok(x)
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence count).
    pub fn count_below(&self, x: f64) -> usize {
        let off2 = self.off * self.off;
        let tiny = f64::MIN_POSITIVE.sqrt();
        let mut count = 0;
        let mut p = self.diag[0] - x;
        if p < 0.0 {
            count += 1;
        }
        for i in 1..self.n() {
            let prev = if p.abs() < tiny { -tiny } else { p };
            p = self.diag[i] - x - off2 / prev;
            if p < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let r = 2.0 * self.off.abs();
        let lo = self.diag.iter().fold(f64::INFINITY, |m, d| m.min(d - r));
        let hi = self.diag.iter().fold(f64::NEG_INFINITY, |m, d| m.max(d + r));
        (lo, hi)
    }

    /// The `k` smallest eigenvalues, ascending, by bisection on the Sturm count.
    pub fn smallest_eigenvalues(&self, k: usize) -> Vec<f64> {
        let (glo, ghi) = self.gershgorin();
        let scale = glo.abs().max(ghi.abs()).max(1.0);
        (0..k.min(self.n()))
            .map(|j| {
                let (mut lo, mut hi) = (glo - 1.0, ghi + 1.0);
                // count_below(lo) <= j < count_below(hi)
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.count_below(mid) > j {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                    if hi - lo <= 4.0 * f64::EPSILON * scale {
                        break;
                    }
                }
                0.5 * (lo + hi)
            })
            .collect()
    }

    /// Eigenvector for the eigenvalue `mu` by inverse iteration, unit Euclidean norm.
    pub fn eigenvector(&self, mu: f64) -> Result<Vec<f64>> {
        let n = self.n();
        let scale = self.off.abs().max(1.0);
        let shift = mu + 1e-10 * scale;
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * ((i * 7919) % 13) as f64).collect();
        normalize(&mut x);
        for _ in 0..4 {
            let mut y = self.solve_shifted(shift, &x, 0.0)?;
            if y.iter().any(|v| !v.is_finite()) {
                return Err(WaveError::Numeric("inverse iteration".into()));
            }
            normalize(&mut y);
            x = y;
        }
        Ok(x)
    }
}

fn normalize(x: &mut [f64]) {
    let nrm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if nrm > 0.0 {
        x.iter_mut().for_each(|v| *v /= nrm);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn free_laplacian_spectrum_matches_discrete_formula() {
        let n = 255;
        let dx = 1.0 / (n as f64 + 1.0);
        let t = SymTridiag::schrodinger(&vec![0.0; n], dx);
        let ev = t.smallest_eigenvalues(6);
        for (j, mu) in ev.iter().enumerate() {
            let jj = (j + 1) as f64;
            let exact = 2.0 / (dx * dx) * (1.0 - (jj * PI * dx).cos());
            assert!((mu - exact).abs() < 1e-9 * exact, "{mu} vs {exact}");
            assert!((mu - (jj * PI).powi(2)).abs() < 1e-3 * (jj * PI).powi(2));
        }
    }

    #[test]
    fn eigenvector_satisfies_equation() {
        let n = 63;
        let dx = 1.0 / 64.0;
        let q: Vec<f64> = (0..n).map(|i| -15.0 + (i as f64 * 0.1).sin()).collect();
        let t = SymTridiag::schrodinger(&q, dx);
        let mu = t.smallest_eigenvalues(1)[0];
        let v = t.eigenvector(mu).unwrap();
        let tv = t.apply(&v);
        let res: f64 = tv.iter().zip(&v).map(|(a, b)| (a - mu * b).powi(2)).sum::<f64>().sqrt();
        assert!(res < 1e-6 * mu.abs().max(1.0), "{res}");
    }

    #[test]
    fn thomas_matches_apply() {
        let t = SymTridiag::schrodinger(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.2);
        let rhs = vec![1.0, -1.0, 0.5, 2.0, 0.0];
        let x = t.solve_shifted(0.0, &rhs, 1e-14).unwrap();
        let back = t.apply(&x);
        for (a, b) in back.iter().zip(&rhs) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
