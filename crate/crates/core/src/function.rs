//! Target functions with derivatives of arbitrary order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::poly::Poly2D;

pub trait SmoothFunction: Send + Sync {
    fn value(&self, z: Point) -> f64;

    /// `∂^{i+j} f / ∂x^i ∂y^j` at `z`.
    fn partial(&self, z: Point, i: usize, j: usize) -> f64;

    fn gradient(&self, z: Point) -> [f64; 2] {
        [self.partial(z, 1, 0), self.partial(z, 0, 1)]
    }
}

/// Value-only function differentiated by nested central differences with
/// step `ε^{1/3}(1 + |z|)` per order. Much less accurate than analytic jets.
pub struct FiniteDifference<F> {
    f: F,
}

impl<F: Fn(Point) -> f64 + Send + Sync> FiniteDifference<F> {
    pub fn new(f: F) -> Self {
        FiniteDifference { f }
    }

    fn nested(&self, z: Point, i: usize, j: usize, h: f64) -> f64 {
        if i > 0 {
            let p = self.nested([z[0] + h, z[1]], i - 1, j, h);
            let m = self.nested([z[0] - h, z[1]], i - 1, j, h);
            (p - m) / (2.0 * h)
        } else if j > 0 {
            let p = self.nested([z[0], z[1] + h], 0, j - 1, h);
            let m = self.nested([z[0], z[1] - h], 0, j - 1, h);
            (p - m) / (2.0 * h)
        } else {
            (self.f)(z)
        }
    }
}

impl<F: Fn(Point) -> f64 + Send + Sync> SmoothFunction for FiniteDifference<F> {
    fn value(&self, z: Point) -> f64 {
        (self.f)(z)
    }

    fn partial(&self, z: Point, i: usize, j: usize) -> f64 {
        let h = f64::EPSILON.cbrt() * (1.0 + z[0].hypot(z[1]));
        self.nested(z, i, j, h)
    }
}

/// Registered test functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestFunction {
    /// `x²/2 + 25y²/2`
    F1,
    /// `(x² + y²)/2`
    F2,
    /// `x³ + y³`
    F3,
    /// `sin(3x) e^{2y}`
    F4,
    /// `x³ y`
    F5,
}

impl TestFunction {
    pub const ALL: [TestFunction; 5] =
        [TestFunction::F1, TestFunction::F2, TestFunction::F3, TestFunction::F4, TestFunction::F5];

    /// Monomial terms `(i, j, c)` meaning `c x^i y^j`; `None` for `f4`.
    pub fn terms(&self) -> Option<&'static [(usize, usize, f64)]> {
        match self {
            TestFunction::F1 => Some(&[(2, 0, 0.5), (0, 2, 12.5)]),
            TestFunction::F2 => Some(&[(2, 0, 0.5), (0, 2, 0.5)]),
            TestFunction::F3 => Some(&[(3, 0, 1.0), (0, 3, 1.0)]),
            TestFunction::F4 => None,
            TestFunction::F5 => Some(&[(3, 1, 1.0)]),
        }
    }

    /// Polynomial form, `None` for `f4`.
    pub fn polynomial(&self) -> Option<Poly2D> {
        let terms = self.terms()?;
        let degree = terms.iter().map(|t| t.0 + t.1).max().unwrap_or(0);
        Some(Poly2D::from_terms(degree, terms).expect("registered terms fit their degree"))
    }

    pub fn name(&self) -> &'static str {
        match self {
            TestFunction::F1 => "f1",
            TestFunction::F2 => "f2",
            TestFunction::F3 => "f3",
            TestFunction::F4 => "f4",
            TestFunction::F5 => "f5",
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TestFunction::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown function '{s}' (expected f1..f5)")))
    }
}

fn monomial_partial(i: usize, j: usize, a: usize, b: usize, z: Point) -> f64 {
    if a > i || b > j {
        return 0.0;
    }
    let fx = (0..a).fold(1.0, |acc, t| acc * (i - t) as f64);
    let fy = (0..b).fold(1.0, |acc, t| acc * (j - t) as f64);
    fx * fy * z[0].powi((i - a) as i32) * z[1].powi((j - b) as i32)
}

impl SmoothFunction for TestFunction {
    fn value(&self, z: Point) -> f64 {
        self.partial(z, 0, 0)
    }

    fn partial(&self, z: Point, a: usize, b: usize) -> f64 {
        match self.terms() {
            Some(terms) => terms.iter().map(|&(i, j, c)| c * monomial_partial(i, j, a, b, z)).sum(),
            None => {
                let sx = (3.0 * z[0] + a as f64 * std::f64::consts::FRAC_PI_2).sin();
                3f64.powi(a as i32) * sx * 2f64.powi(b as i32) * (2.0 * z[1]).exp()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_round_trip() {
        for f in TestFunction::ALL {
            assert_eq!(f.name().parse::<TestFunction>().unwrap(), f);
        }
        assert!("g".parse::<TestFunction>().is_err());
    }

    #[test]
    fn analytic_partials_match_differences() {
        let z = [0.3, -0.2];
        for f in TestFunction::ALL {
            let fd = FiniteDifference::new(move |p| f.value(p));
            for (i, j) in [(1, 0), (0, 1), (2, 0), (1, 1)] {
                let a = f.partial(z, i, j);
                let b = fd.partial(z, i, j);
                assert!((a - b).abs() < 1e-4 * (1.0 + a.abs()), "{f} ∂({i},{j}): {a} vs {b}");
            }
        }
    }

    #[test]
    fn f4_third_derivative() {
        let z = [0.4, 0.1];
        let want = -27.0 * (1.2f64).cos() * 2.0 * (0.2f64).exp();
        assert!((TestFunction::F4.partial(z, 3, 1) - want).abs() < 1e-12);
    }
}
