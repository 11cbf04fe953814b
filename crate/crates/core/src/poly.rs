//! Homogeneous bivariate polynomials, their sup-norms over directions, full
//! polynomials of bounded total degree, and Taylor jets.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::SmoothFunction;
use crate::geom::{Mat2, Point, Spd2};

/// Samples on `[0, π)` used by [`HomPoly::sup_norm`].
pub const SUP_SAMPLES: usize = 4096;

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// `Σ_i c_i x^i y^{r−i}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomPoly {
    coeffs: Vec<f64>,
}

impl HomPoly {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidArgument("polynomial needs at least one coefficient".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coefficient".into()));
        }
        Ok(HomPoly { coeffs })
    }

    pub fn zero(degree: usize) -> Self {
        HomPoly { coeffs: vec![0.0; degree + 1] }
    }

    /// `x^i y^{r−i}`.
    pub fn monomial(degree: usize, i: usize) -> Self {
        let mut p = HomPoly::zero(degree);
        p.coeffs[i] = 1.0;
        p
    }

    /// Coefficients drawn uniformly from `[−1, 1]`.
    pub fn random<R: rand::Rng + ?Sized>(rng: &mut R, degree: usize) -> HomPoly {
        HomPoly { coeffs: (0..=degree).map(|_| rng.gen_range(-1.0..=1.0)).collect() }
    }

    /// `αx + βy`.
    pub fn linear(alpha: f64, beta: f64) -> Self {
        HomPoly { coeffs: vec![beta, alpha] }
    }

    /// Parses comma-separated raw coefficients, lowest x-power first.
    pub fn parse(s: &str) -> Result<Self> {
        let c = s
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::InvalidArgument(format!("bad coefficients '{s}': {e}")))?;
        HomPoly::new(c)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn eval(&self, z: Point) -> f64 {
        let mut coeffs = self.coeffs.iter().rev();
        let mut acc = *coeffs.next().expect("at least one coefficient");
        let mut yp = 1.0;
        for c in coeffs {
            yp *= z[1];
            acc = acc * z[0] + c * yp;
        }
        acc
    }

    /// `(∂_x p, ∂_y p)`.
    pub fn grad(&self) -> Result<(HomPoly, HomPoly)> {
        let r = self.degree();
        if r == 0 {
            return Err(Error::InvalidArgument("gradient of a degree-0 polynomial".into()));
        }
        let dx = (1..=r).map(|i| i as f64 * self.coeffs[i]).collect();
        let dy = (0..r).map(|i| (r - i) as f64 * self.coeffs[i]).collect();
        Ok((HomPoly { coeffs: dx }, HomPoly { coeffs: dy }))
    }

    /// `∂_x^i ∂_y^j p`; the zero polynomial of degree 0 when `i + j > r`.
    pub fn partial(&self, i: usize, j: usize) -> HomPoly {
        let r = self.degree();
        if i + j > r {
            return HomPoly::zero(0);
        }
        let d = r - i - j;
        let coeffs = (0..=d)
            .map(|k| {
                let xi = k + i;
                let yj = r - xi;
                let fx = (0..i).fold(1.0, |a, t| a * (xi - t) as f64);
                let fy = (0..j).fold(1.0, |a, t| a * (yj - t) as f64);
                self.coeffs[xi] * fx * fy
            })
            .collect();
        HomPoly { coeffs }
    }

    pub fn mul(&self, o: &HomPoly) -> HomPoly {
        let mut out = vec![0.0; self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        HomPoly { coeffs: out }
    }

    pub fn pow(&self, k: usize) -> HomPoly {
        (0..k).fold(HomPoly { coeffs: vec![1.0] }, |acc, _| acc.mul(self))
    }

    pub fn add(&self, o: &HomPoly) -> Result<HomPoly> {
        if self.degree() != o.degree() {
            return Err(Error::DegreeMismatch(self.degree(), o.degree()));
        }
        Ok(HomPoly { coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a + b).collect() })
    }

    pub fn scaled(&self, k: f64) -> HomPoly {
        HomPoly { coeffs: self.coeffs.iter().map(|c| c * k).collect() }
    }

    /// `z ↦ p(Az)`.
    pub fn compose_linear(&self, a: &Mat2) -> HomPoly {
        let r = self.degree();
        let x = HomPoly::linear(a.0[0][0], a.0[0][1]);
        let y = HomPoly::linear(a.0[1][0], a.0[1][1]);
        let xp: Vec<HomPoly> = (0..=r).map(|k| x.pow(k)).collect();
        let yp: Vec<HomPoly> = (0..=r).map(|k| y.pow(k)).collect();
        let mut out = HomPoly::zero(r);
        for (i, c) in self.coeffs.iter().enumerate() {
            if *c == 0.0 {
                continue;
            }
            let term = xp[i].mul(&yp[r - i]);
            for (o, t) in out.coeffs.iter_mut().zip(&term.coeffs) {
                *o += c * t;
            }
        }
        out
    }

    /// `max_{|z|=1} |p(z)|`.
    pub fn sup_norm(&self) -> f64 {
        circle_sup(&self.coeffs, None, SUP_SAMPLES, true)
    }

    /// Coarse sup-norm from `samples` directions, optionally refined.
    pub fn sup_norm_with(&self, samples: usize, refine: bool) -> f64 {
        circle_sup(&self.coeffs, None, samples, refine)
    }

    /// `‖p ∘ M^{-1/2}‖`.
    pub fn sup_norm_metric(&self, m: &Spd2) -> f64 {
        self.compose_linear(&m.inv_sqrt().to_mat()).sup_norm()
    }

    /// `(∂_x p)² + (∂_y p)²`.
    pub fn grad_norm_sq(&self) -> Result<HomPoly> {
        let (dx, dy) = self.grad()?;
        dx.mul(&dx).add(&dy.mul(&dy))
    }

    pub fn binomial(&self) -> BinomialView {
        let r = self.degree();
        BinomialView { coeffs: (0..=r).map(|k| self.coeffs[r - k] / binomial(r, k)).collect() }
    }

    pub fn from_binomial(view: &[f64]) -> Result<HomPoly> {
        if view.is_empty() {
            return Err(Error::InvalidArgument("empty binomial coefficient list".into()));
        }
        let r = view.len() - 1;
        HomPoly::new((0..=r).map(|i| view[r - i] * binomial(r, r - i)).collect())
    }
}

/// `max_{|z|=1} |(p(z), q(z))|` for a pair of polynomials of equal degree.
pub fn vector_sup_norm(p: &HomPoly, q: &HomPoly) -> Result<f64> {
    if p.degree() != q.degree() {
        return Err(Error::DegreeMismatch(p.degree(), q.degree()));
    }
    Ok(circle_sup(&p.coeffs, Some(&q.coeffs), SUP_SAMPLES, true))
}

/// [`vector_sup_norm`] with a caller-chosen sample count.
pub fn vector_sup_norm_with(p: &HomPoly, q: &HomPoly, samples: usize, refine: bool) -> Result<f64> {
    if p.degree() != q.degree() {
        return Err(Error::DegreeMismatch(p.degree(), q.degree()));
    }
    Ok(circle_sup(&p.coeffs, Some(&q.coeffs), samples, refine))
}

/// The paper's binomial-weighted coefficients: `π = Σ_k C(r,k) b_k x^{r−k} y^k`,
/// so `(a, b, c)` for `ax² + 2bxy + cy²`.
#[derive(Clone, Debug, PartialEq)]
pub struct BinomialView {
    coeffs: Vec<f64>,
}

impl BinomialView {
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn to_poly(&self) -> HomPoly {
        HomPoly::from_binomial(&self.coeffs).expect("non-empty view")
    }
}

struct CircleTable {
    degree: usize,
    samples: usize,
    rows: Vec<f64>,
}

fn circle_table(degree: usize, samples: usize) -> Arc<CircleTable> {
    static CACHE: OnceLock<RwLock<HashMap<(usize, usize), Arc<CircleTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(t) = cache.read().unwrap().get(&(degree, samples)) {
        return t.clone();
    }
    let mut rows = Vec::with_capacity(samples * (degree + 1));
    for k in 0..samples {
        let (s, c) = (PI * k as f64 / samples as f64).sin_cos();
        for i in 0..=degree {
            rows.push(c.powi(i as i32) * s.powi((degree - i) as i32));
        }
    }
    let t = Arc::new(CircleTable { degree, samples, rows });
    cache.write().unwrap().insert((degree, samples), t.clone());
    t
}

fn eval_angle(c: &[f64], theta: f64) -> f64 {
    let (s, co) = theta.sin_cos();
    let r = c.len() - 1;
    let mut acc = 0.0;
    let mut xp = 1.0;
    for (i, ci) in c.iter().enumerate() {
        acc += ci * xp * s.powi((r - i) as i32);
        xp *= co;
    }
    acc
}

/// Max over the unit circle of `|p|`, or of `|(p, q)|` when `q` is given.
fn circle_sup(p: &[f64], q: Option<&[f64]>, samples: usize, refine: bool) -> f64 {
    let t = circle_table(p.len() - 1, samples);
    let w = t.degree + 1;
    let values: Vec<f64> = (0..t.samples)
        .map(|k| {
            let row = &t.rows[k * w..(k + 1) * w];
            let a: f64 = row.iter().zip(p).map(|(r, c)| r * c).sum();
            match q {
                None => a.abs(),
                Some(q) => {
                    let b: f64 = row.iter().zip(q).map(|(r, c)| r * c).sum();
                    a.hypot(b)
                }
            }
        })
        .collect();
    let n = values.len();
    let mut best = values.iter().cloned().fold(0.0, f64::max);
    if !refine || best == 0.0 {
        return best;
    }
    let mut peaks: Vec<usize> = (0..n)
        .filter(|&k| values[k] >= values[(k + n - 1) % n] && values[k] >= values[(k + 1) % n])
        .collect();
    peaks.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let g = |theta: f64| match q {
        None => eval_angle(p, theta).abs(),
        Some(q) => eval_angle(p, theta).hypot(eval_angle(q, theta)),
    };
    let h = PI / n as f64;
    for &k in peaks.iter().take(3) {
        best = best.max(golden_max(&g, (k as f64 - 1.0) * h, (k as f64 + 1.0) * h, 1e-10));
    }
    best
}

fn golden_max(g: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (g(x1), g(x2));
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = g(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = g(x1);
        }
    }
    f1.max(f2)
}

/// Polynomial of total degree at most `degree`, monomial coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Poly2D {
    degree: usize,
    coeffs: Vec<f64>,
}

fn idx(i: usize, j: usize) -> usize {
    let k = i + j;
    k * (k + 1) / 2 + j
}

impl Poly2D {
    pub fn zero(degree: usize) -> Self {
        Poly2D { degree, coeffs: vec![0.0; (degree + 1) * (degree + 2) / 2] }
    }

    /// From `(i, j, c)` triples meaning `c x^i y^j`.
    pub fn from_terms(degree: usize, terms: &[(usize, usize, f64)]) -> Result<Self> {
        let mut p = Poly2D::zero(degree);
        for &(i, j, c) in terms {
            if i + j > degree {
                return Err(Error::InvalidArgument(format!("term x^{i} y^{j} exceeds degree {degree}")));
            }
            p.coeffs[idx(i, j)] += c;
        }
        Ok(p)
    }

    pub fn from_hom(p: &HomPoly) -> Self {
        let r = p.degree();
        let mut out = Poly2D::zero(r);
        for (i, c) in p.coeffs().iter().enumerate() {
            out.coeffs[idx(i, r - i)] = *c;
        }
        out
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        if i + j > self.degree {
            0.0
        } else {
            self.coeffs[idx(i, j)]
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..=self.degree).flat_map(move |k| (0..=k).map(move |j| (k - j, j, self.coeffs[idx(k - j, j)])))
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Homogeneous part of total degree `k`.
    pub fn homogeneous_part(&self, k: usize) -> HomPoly {
        HomPoly { coeffs: (0..=k).map(|i| self.coeff(i, k - i)).collect() }
    }

    pub fn eval(&self, z: Point) -> f64 {
        let d = self.degree;
        let xp: Vec<f64> = std::iter::successors(Some(1.0), |p| Some(p * z[0])).take(d + 1).collect();
        let yp: Vec<f64> = std::iter::successors(Some(1.0), |p| Some(p * z[1])).take(d + 1).collect();
        self.terms().map(|(i, j, c)| c * xp[i] * yp[j]).sum()
    }

    /// Gradient value at `z`.
    pub fn grad_at(&self, z: Point) -> [f64; 2] {
        let d = self.degree;
        let xp: Vec<f64> = std::iter::successors(Some(1.0), |p| Some(p * z[0])).take(d + 1).collect();
        let yp: Vec<f64> = std::iter::successors(Some(1.0), |p| Some(p * z[1])).take(d + 1).collect();
        let mut g = [0.0; 2];
        for (i, j, c) in self.terms() {
            if i > 0 {
                g[0] += c * i as f64 * xp[i - 1] * yp[j];
            }
            if j > 0 {
                g[1] += c * j as f64 * xp[i] * yp[j - 1];
            }
        }
        g
    }

    /// `∂_x^a ∂_y^b` as a polynomial.
    pub fn partial(&self, a: usize, b: usize) -> Poly2D {
        let d = self.degree.saturating_sub(a + b);
        let mut out = Poly2D::zero(d);
        for (i, j, c) in self.terms() {
            if i >= a && j >= b && c != 0.0 {
                let fx = (0..a).fold(1.0, |acc, t| acc * (i - t) as f64);
                let fy = (0..b).fold(1.0, |acc, t| acc * (j - t) as f64);
                out.coeffs[idx(i - a, j - b)] += c * fx * fy;
            }
        }
        out
    }

    pub fn mul(&self, o: &Poly2D) -> Poly2D {
        let mut out = Poly2D::zero(self.degree + o.degree);
        for (i, j, c) in self.terms() {
            if c == 0.0 {
                continue;
            }
            for (k, l, e) in o.terms() {
                out.coeffs[idx(i + k, j + l)] += c * e;
            }
        }
        out
    }

    pub fn add(&self, o: &Poly2D) -> Poly2D {
        let mut out = Poly2D::zero(self.degree.max(o.degree));
        for (i, j, c) in self.terms().chain(o.terms()) {
            out.coeffs[idx(i, j)] += c;
        }
        out
    }

    pub fn scaled(&self, k: f64) -> Poly2D {
        Poly2D { degree: self.degree, coeffs: self.coeffs.iter().map(|c| c * k).collect() }
    }
}

impl SmoothFunction for Poly2D {
    fn value(&self, z: Point) -> f64 {
        self.eval(z)
    }

    fn partial(&self, z: Point, i: usize, j: usize) -> f64 {
        if i + j > self.degree {
            0.0
        } else {
            Poly2D::partial(self, i, j).eval(z)
        }
    }

    fn gradient(&self, z: Point) -> [f64; 2] {
        self.grad_at(z)
    }
}

impl SmoothFunction for HomPoly {
    fn value(&self, z: Point) -> f64 {
        self.eval(z)
    }

    fn partial(&self, z: Point, i: usize, j: usize) -> f64 {
        HomPoly::partial(self, i, j).eval(z)
    }
}

/// `f(z + h) = μ_z(h) + π_z(h) + o(|h|^m)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TaylorJet {
    pub z: Point,
    pub mu: Poly2D,
    pub pi: HomPoly,
}

/// Taylor jet of order `m`: `π_z` holds `d^m f(z)/m!` over the monomials.
pub fn taylor_jet(f: &dyn SmoothFunction, z: Point, m: usize) -> Result<TaylorJet> {
    let mut mu = Poly2D::zero(m.saturating_sub(1));
    for k in 0..m {
        for i in 0..=k {
            let d = f.partial(z, i, k - i);
            if !d.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite derivative of order {k} at {z:?}")));
            }
            mu.coeffs[idx(i, k - i)] = d / (factorial(i) * factorial(k - i));
        }
    }
    Ok(TaylorJet { z, mu, pi: top_part(f, z, m)? })
}

/// `π_z` alone.
pub fn top_part(f: &dyn SmoothFunction, z: Point, m: usize) -> Result<HomPoly> {
    let coeffs: Vec<f64> =
        (0..=m).map(|i| f.partial(z, i, m - i) / (factorial(i) * factorial(m - i))).collect();
    HomPoly::new(coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[f64]) -> HomPoly {
        HomPoly::new(c.to_vec()).unwrap()
    }

    #[test]
    fn eval_examples() {
        let q = p(&[1.0, 0.0, 1.0]);
        assert_eq!(q.eval([1.0, 0.0]), 1.0);
        assert_eq!(q.eval([3.0, 4.0]), 25.0);
        // x³ − 3xy²
        assert_eq!(p(&[0.0, -3.0, 0.0, 1.0]).eval([1.0, 1.0]), -2.0);
    }

    #[test]
    fn grad_examples() {
        let (dx, dy) = p(&[1.0, 0.0, 1.0]).grad().unwrap();
        assert_eq!((dx.coeffs(), dy.coeffs()), (&[0.0, 2.0][..], &[2.0, 0.0][..]));
        let (dx, dy) = p(&[0.0, 0.0, 0.0, 1.0]).grad().unwrap();
        assert_eq!((dx.coeffs(), dy.coeffs()), (&[0.0, 0.0, 3.0][..], &[0.0, 0.0, 0.0][..]));
        let (dx, dy) = p(&[0.0, 1.0, 0.0]).grad().unwrap();
        assert_eq!((dx.coeffs(), dy.coeffs()), (&[1.0, 0.0][..], &[0.0, 1.0][..]));
        assert!(p(&[2.0]).grad().is_err());
    }

    #[test]
    fn compose_examples() {
        let x2 = p(&[0.0, 0.0, 1.0]);
        assert_eq!(x2.compose_linear(&Mat2::IDENTITY), x2);
        let r = Mat2::new(0.0, -1.0, 1.0, 0.0);
        let c = x2.compose_linear(&r);
        assert!((c.coeffs()[0] - 1.0).abs() < 1e-15 && c.coeffs()[1].abs() < 1e-15 && c.coeffs()[2].abs() < 1e-15);
        let xy = p(&[0.0, 1.0, 0.0]);
        assert_eq!(xy.compose_linear(&Mat2::diag(2.0, 3.0)).coeffs(), &[0.0, 6.0, 0.0]);
    }

    #[test]
    fn sup_norm_examples() {
        assert!((p(&[1.0, 0.0, 1.0]).sup_norm() - 1.0).abs() < 1e-14);
        assert!((p(&[0.0, 0.0, 1.0]).sup_norm() - 1.0).abs() < 1e-14);
        // |cos θ sin θ| peaks at 1/2; independent oracle: dense sampling.
        let dense = (0..200_000)
            .map(|k| {
                let t = PI * k as f64 / 200_000.0;
                (t.cos() * t.sin()).abs()
            })
            .fold(0.0, f64::max);
        let v = p(&[0.0, 1.0, 0.0]).sup_norm();
        assert!((v - 0.5).abs() < 1e-12 && (v - dense).abs() < 1e-9);
    }

    #[test]
    fn sup_norm_metric_examples() {
        assert!((p(&[1.0, 0.0, 1.0]).sup_norm_metric(&Spd2::identity()) - 1.0).abs() < 1e-14);
        let v = p(&[0.0, 0.0, 1.0]).sup_norm_metric(&Spd2::diag(4.0, 1.0).unwrap());
        assert!((v - 0.25).abs() < 1e-14);
    }

    #[test]
    fn vector_sup_norm_examples() {
        let v = vector_sup_norm(&p(&[0.0, 2.0]), &p(&[2.0, 0.0])).unwrap();
        assert!((v - 2.0).abs() < 1e-14);
        let v = vector_sup_norm(&p(&[0.0, 0.0, 3.0]), &p(&[0.0, 0.0, 0.0])).unwrap();
        assert!((v - 3.0).abs() < 1e-14);
        let v = vector_sup_norm(&p(&[1.0, 0.0]), &p(&[0.0, 1.0])).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
        assert!(vector_sup_norm(&p(&[1.0, 0.0]), &p(&[0.0, 1.0, 0.0])).is_err());
    }

    #[test]
    fn grad_norm_sq_examples() {
        assert_eq!(p(&[1.0, 0.0, 1.0]).grad_norm_sq().unwrap().coeffs(), &[4.0, 0.0, 4.0]);
        assert_eq!(p(&[0.0, 1.0, 0.0]).grad_norm_sq().unwrap().coeffs(), &[1.0, 0.0, 1.0]);
        let x3 = p(&[0.0, 0.0, 0.0, 1.0]).grad_norm_sq().unwrap();
        assert_eq!(x3.coeffs(), &[0.0, 0.0, 0.0, 0.0, 9.0]);
    }

    #[test]
    fn binomial_view_convention() {
        // ax² + 2bxy + cy² with (a, b, c) = (1, 2, 3)
        let q = p(&[3.0, 4.0, 1.0]);
        assert_eq!(q.binomial().coeffs(), &[1.0, 2.0, 3.0]);
        // x³y = 4 b x³y with b = 1/4
        let v = p(&[0.0, 0.0, 0.0, 1.0, 0.0]).binomial();
        assert_eq!(v.coeffs(), &[0.0, 0.25, 0.0, 0.0, 0.0]);
        assert_eq!(v.to_poly(), p(&[0.0, 0.0, 0.0, 1.0, 0.0]));
    }

    #[test]
    fn taylor_jets() {
        let f = Poly2D::from_terms(2, &[(2, 0, 0.5), (0, 2, 12.5)]).unwrap();
        let j = taylor_jet(&f, [0.3, -0.7], 2).unwrap();
        assert_eq!(j.pi.coeffs(), &[12.5, 0.0, 0.5]);
        // μ_z(h) = f(z) + ∇f(z)·h
        assert!((j.mu.coeff(0, 0) - f.eval([0.3, -0.7])).abs() < 1e-15);
        assert!((j.mu.coeff(1, 0) - 0.3).abs() < 1e-15 && (j.mu.coeff(0, 1) + 17.5).abs() < 1e-13);
        let x3 = Poly2D::from_terms(3, &[(3, 0, 1.0)]).unwrap();
        let j = taylor_jet(&x3, [0.0, 0.0], 3).unwrap();
        assert_eq!(j.pi.coeffs(), &[0.0, 0.0, 0.0, 1.0]);
        assert!(j.mu.max_abs_coeff() == 0.0);
        // f = x³ + x y², m = 2 at (1, 0): d²f = [[6x, 2y], [2y, 2x]] → π = 3x² + y²
        let c = Poly2D::from_terms(3, &[(3, 0, 1.0), (1, 2, 1.0)]).unwrap();
        let j = taylor_jet(&c, [1.0, 0.0], 2).unwrap();
        assert_eq!(j.pi.coeffs(), &[1.0, 0.0, 3.0]);
    }
}
