//! Polynomial nonlinearities `f(x, s)` with the derivatives the solvers need.
//!
//! The default is the bistable cubic `f(s) = λ s (s - 1)(s + 1)`. Every
//! nonlinearity here is a polynomial with zero constant term, so `f(x, 0) = 0`
//! and `v ≡ 0` is always a steady state.

use crate::error::{Result, WaveError};

/// Which quantity [`Nonlinearity::eval`] returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    /// Antiderivative `F(x, s) = ∫_0^s f`.
    Primitive,
    Value,
    First,
    Second,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NonlinearityKind {
    /// `λ (s^3 - s)`.
    Cubic,
    /// `f ≡ 0`.
    Linear,
    /// `λ Σ_k c_k s^k` with `c_0 = 0`; coefficient `k` multiplies `s^k`.
    Polynomial(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Nonlinearity {
    kind: NonlinearityKind,
    lambda: f64,
    /// Coefficients of `f` in powers of `s`, already scaled by λ.
    coeffs: Vec<f64>,
}

impl Nonlinearity {
    pub fn cubic(lambda: f64) -> Self {
        Self {
            kind: NonlinearityKind::Cubic,
            lambda,
            coeffs: vec![0.0, -lambda, 0.0, lambda],
        }
    }

    pub fn linear() -> Self {
        Self {
            kind: NonlinearityKind::Linear,
            lambda: 0.0,
            coeffs: vec![0.0],
        }
    }

    pub fn polynomial(lambda: f64, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(WaveError::Config("empty coefficient table".into()));
        }
        if coefficients[0] != 0.0 {
            return Err(WaveError::Config(
                "constant coefficient must vanish so that f(x, 0) = 0".into(),
            ));
        }
        if coefficients.iter().any(|c| !c.is_finite()) || !lambda.is_finite() {
            return Err(WaveError::Config("non-finite coefficient".into()));
        }
        let coeffs = coefficients.iter().map(|c| c * lambda).collect();
        Ok(Self {
            kind: NonlinearityKind::Polynomial(coefficients),
            lambda,
            coeffs,
        })
    }

    pub fn kind(&self) -> &NonlinearityKind {
        &self.kind
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// Odd polynomials give a flow that commutes with `v -> -v`.
    pub fn is_odd(&self) -> bool {
        self.coeffs.iter().step_by(2).all(|&c| c == 0.0)
    }

    /// `f(x, s)`. The built-in kinds do not depend on `x`.
    #[inline]
    pub fn f(&self, _x: f64, s: f64) -> f64 {
        match self.kind {
            NonlinearityKind::Cubic => self.lambda * (s * s - 1.0) * s,
            NonlinearityKind::Linear => 0.0,
            NonlinearityKind::Polynomial(_) => horner(&self.coeffs, s),
        }
    }

    #[inline]
    pub fn df(&self, _x: f64, s: f64) -> f64 {
        match self.kind {
            NonlinearityKind::Cubic => self.lambda * (3.0 * s * s - 1.0),
            NonlinearityKind::Linear => 0.0,
            NonlinearityKind::Polynomial(_) => {
                let d: Vec<f64> = (1..self.coeffs.len())
                    .map(|k| k as f64 * self.coeffs[k])
                    .collect();
                horner(&d, s)
            }
        }
    }

    #[inline]
    pub fn d2f(&self, _x: f64, s: f64) -> f64 {
        match self.kind {
            NonlinearityKind::Cubic => 6.0 * self.lambda * s,
            NonlinearityKind::Linear => 0.0,
            NonlinearityKind::Polynomial(_) => {
                let d: Vec<f64> = (2..self.coeffs.len())
                    .map(|k| (k * (k - 1)) as f64 * self.coeffs[k])
                    .collect();
                horner(&d, s)
            }
        }
    }

    /// `F(x, s) = ∫_0^s f(x, ζ) dζ`.
    pub fn primitive(&self, _x: f64, s: f64) -> f64 {
        match self.kind {
            NonlinearityKind::Cubic => {
                let s2 = s * s;
                self.lambda * (0.25 * s2 * s2 - 0.5 * s2)
            }
            NonlinearityKind::Linear => 0.0,
            NonlinearityKind::Polynomial(_) => {
                let mut p = vec![0.0; self.coeffs.len() + 1];
                for (k, c) in self.coeffs.iter().enumerate() {
                    p[k + 1] = c / (k as f64 + 1.0);
                }
                horner(&p, s)
            }
        }
    }

    /// Second-order remainder `f(e + r) - f(e) - f'(e) r`.
    #[inline]
    pub fn remainder(&self, x: f64, e: f64, r: f64) -> f64 {
        match self.kind {
            // λ[(e+r)^3 - e^3 - 3e^2 r] = λ r^2 (3e + r)
            NonlinearityKind::Cubic => self.lambda * r * r * (3.0 * e + r),
            NonlinearityKind::Linear => 0.0,
            NonlinearityKind::Polynomial(_) => {
                self.f(x, e + r) - self.f(x, e) - self.df(x, e) * r
            }
        }
    }

    pub fn eval(&self, x: f64, s: f64, order: Order) -> Result<f64> {
        if !(x.is_finite() && s.is_finite()) {
            return Err(WaveError::Numeric("nonlinearity argument".into()));
        }
        Ok(match order {
            Order::Primitive => self.primitive(x, s),
            Order::Value => self.f(x, s),
            Order::First => self.df(x, s),
            Order::Second => self.d2f(x, s),
        })
    }
}

fn horner(coeffs: &[f64], s: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * s + c)
}
