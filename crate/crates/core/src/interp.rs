//! Lagrange interpolation `I_T^{m−1}` on a triangle and quadrature-based
//! gradient error norms.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::function::SmoothFunction;
use crate::geom::{sub, Mat2, Point, Triangle};
use crate::poly::Poly2D;

/// Interpolation nodes with barycentric coordinates in `{0, 1/(m−1), …, 1}`.
#[derive(Clone, Debug)]
pub struct LagrangeNodes {
    pub m: usize,
    pub bary: Vec<[f64; 3]>,
    pub points: Vec<Point>,
}

fn reference_nodes(m: usize) -> Vec<[f64; 2]> {
    let k = m - 1;
    let mut out = Vec::with_capacity(m * (m + 1) / 2);
    for j in 0..=k {
        for i in 0..=(k - j) {
            out.push([i as f64 / k as f64, j as f64 / k as f64]);
        }
    }
    out
}

pub fn lagrange_nodes(t: &Triangle, m: usize) -> Result<LagrangeNodes> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("interpolation order m = {m} < 2")));
    }
    let bary: Vec<[f64; 3]> = reference_nodes(m).iter().map(|&[s, u]| [1.0 - s - u, s, u]).collect();
    let points = bary.iter().map(|l| t.point_at(*l)).collect();
    Ok(LagrangeNodes { m, bary, points })
}

fn monomials(deg: usize) -> Vec<(usize, usize)> {
    (0..=deg).flat_map(|k| (0..=k).map(move |j| (k - j, j))).collect()
}

/// Inverse Vandermonde of the reference nodes in the monomials `s^a t^b`.
fn reference_vandermonde_inverse(m: usize) -> Result<Arc<DMatrix<f64>>> {
    static CACHE: OnceLock<RwLock<HashMap<usize, Arc<DMatrix<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(v) = cache.read().unwrap().get(&m) {
        return Ok(v.clone());
    }
    let nodes = reference_nodes(m);
    let mons = monomials(m - 1);
    let n = nodes.len();
    let v = DMatrix::from_fn(n, n, |r, c| {
        let (a, b) = mons[c];
        nodes[r][0].powi(a as i32) * nodes[r][1].powi(b as i32)
    });
    let inv = v.full_piv_lu().try_inverse().ok_or(Error::SingularSystem)?;
    let inv = Arc::new(inv);
    cache.write().unwrap().insert(m, inv.clone());
    Ok(inv)
}

/// `I_T^{m−1} f`, held in the reference coordinates of `T`.
#[derive(Clone, Debug)]
pub struct Interpolant {
    v0: Point,
    jinv: Mat2,
    local: Poly2D,
}

impl Interpolant {
    pub fn new(f: &dyn Fn(Point) -> f64, t: &Triangle, m: usize) -> Result<Self> {
        let nodes = lagrange_nodes(t, m)?;
        let vinv = reference_vandermonde_inverse(m)?;
        let values: Vec<f64> = nodes.points.iter().map(|&p| f(p)).collect();
        let mons = monomials(m - 1);
        let terms: Vec<(usize, usize, f64)> = mons
            .iter()
            .enumerate()
            .map(|(r, &(a, b))| (a, b, (0..values.len()).map(|c| vinv[(r, c)] * values[c]).sum()))
            .collect();
        let local = Poly2D::from_terms(m - 1, &terms)?;
        let jinv = t.jacobian().inverse().ok_or(Error::SingularSystem)?;
        Ok(Interpolant { v0: t.vertices()[0], jinv, local })
    }

    fn local_coords(&self, z: Point) -> Point {
        self.jinv.apply(sub(z, self.v0))
    }

    pub fn value(&self, z: Point) -> f64 {
        self.local.eval(self.local_coords(z))
    }

    pub fn grad(&self, z: Point) -> [f64; 2] {
        let g = self.local.grad_at(self.local_coords(z));
        self.jinv.transpose().apply(g)
    }

    /// The interpolant in global monomial coefficients.
    pub fn to_global(&self) -> Poly2D {
        let j = &self.jinv.0;
        let lin = |r: usize| {
            let c = -(j[r][0] * self.v0[0] + j[r][1] * self.v0[1]);
            Poly2D::from_terms(1, &[(0, 0, c), (1, 0, j[r][0]), (0, 1, j[r][1])]).expect("degree 1")
        };
        let (s, u) = (lin(0), lin(1));
        let d = self.local.degree();
        let sp: Vec<Poly2D> = std::iter::successors(Some(Poly2D::from_terms(0, &[(0, 0, 1.0)]).unwrap()), |p| {
            Some(p.mul(&s))
        })
        .take(d + 1)
        .collect();
        let up: Vec<Poly2D> = std::iter::successors(Some(Poly2D::from_terms(0, &[(0, 0, 1.0)]).unwrap()), |p| {
            Some(p.mul(&u))
        })
        .take(d + 1)
        .collect();
        let mut out = Poly2D::zero(d);
        for (a, b, c) in self.local.terms() {
            if c != 0.0 {
                out = out.add(&sp[a].mul(&up[b]).scaled(c));
            }
        }
        out
    }
}

pub fn interpolate(f: &dyn Fn(Point) -> f64, t: &Triangle, m: usize) -> Result<Poly2D> {
    Ok(Interpolant::new(f, t, m)?.to_global())
}

fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = 0.5 * (1.0 - z);
        w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Collapsed Gauss–Legendre product rule on the reference simplex
/// `(0,0),(1,0),(0,1)`.
#[derive(Clone, Debug)]
pub struct TriQuadrature {
    degree: usize,
    points: Vec<[f64; 2]>,
    weights: Vec<f64>,
}

impl TriQuadrature {
    /// Rule exact for total degree `2n − 2` with `n²` points.
    pub fn collapsed(n: usize) -> Self {
        let (x, w) = gauss_legendre_unit(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                points.push([x[i], x[j] * (1.0 - x[i])]);
                weights.push(w[i] * w[j] * (1.0 - x[i]));
            }
        }
        TriQuadrature { degree: 2 * n - 2, points, weights }
    }

    /// Shared degree-10 rule.
    pub fn standard() -> &'static TriQuadrature {
        static RULE: OnceLock<TriQuadrature> = OnceLock::new();
        RULE.get_or_init(|| TriQuadrature::collapsed(6))
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points and weights on `t`; weights sum to `|T|`.
    pub fn mapped(&self, t: &Triangle) -> (Vec<Point>, Vec<f64>) {
        let v0 = t.vertices()[0];
        let j = t.jacobian();
        let k = 2.0 * t.area();
        let pts = self.points.iter().map(|p| crate::geom::add(v0, j.apply(*p))).collect();
        (pts, self.weights.iter().map(|w| w * k).collect())
    }

    pub fn integrate(&self, t: &Triangle, g: &dyn Fn(Point) -> f64) -> f64 {
        let (pts, w) = self.mapped(t);
        pts.iter().zip(&w).map(|(p, w)| w * g(*p)).sum()
    }

    /// Sum of the rule over the `4^level` cells of a uniform refinement of `t`.
    pub fn integrate_refined(&self, t: &Triangle, level: u32, g: &dyn Fn(Point) -> f64) -> f64 {
        let k = 1usize << level;
        let h = 1.0 / k as f64;
        let v0 = t.vertices()[0];
        let jac = t.jacobian();
        let mut acc = 0.0;
        let mut cell = |c0: [f64; 2], e1: [f64; 2], e2: [f64; 2]| {
            for (p, w) in self.points.iter().zip(&self.weights) {
                let r = [c0[0] + p[0] * e1[0] + p[1] * e2[0], c0[1] + p[0] * e1[1] + p[1] * e2[1]];
                acc += w * g(crate::geom::add(v0, jac.apply(r)));
            }
        };
        for a in 0..k {
            for b in 0..(k - a) {
                let c = [a as f64 * h, b as f64 * h];
                cell(c, [h, 0.0], [0.0, h]);
                if a + b + 2 <= k {
                    cell([c[0] + h, c[1]], [0.0, h], [-h, h]);
                }
            }
        }
        acc * 2.0 * t.area() * h * h
    }
}

/// Outcome of uniform-refinement quadrature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdaptiveIntegral {
    pub value: f64,
    pub rel_change: f64,
    pub depth: u32,
    pub converged: bool,
}

pub const QUAD_REL_TOL: f64 = 1e-8;
pub const QUAD_MAX_DEPTH: u32 = 6;

/// Refines uniformly until two successive levels agree to `rel_tol` (or differ
/// by less than `abs_tol`), up to `max_depth`.
pub fn integrate_adaptive(
    t: &Triangle,
    g: &dyn Fn(Point) -> f64,
    rel_tol: f64,
    abs_tol: f64,
    max_depth: u32,
) -> AdaptiveIntegral {
    let rule = TriQuadrature::standard();
    let mut prev = rule.integrate_refined(t, 0, g);
    let mut change = f64::INFINITY;
    for depth in 1..=max_depth {
        let cur = rule.integrate_refined(t, depth, g);
        let diff = (cur - prev).abs();
        change = if cur != 0.0 { diff / cur.abs() } else { diff };
        if diff <= rel_tol * cur.abs() || diff <= abs_tol {
            return AdaptiveIntegral { value: cur, rel_change: change, depth, converged: true };
        }
        prev = cur;
    }
    AdaptiveIntegral { value: prev, rel_change: change, depth: max_depth, converged: false }
}

/// `‖∇(f − I_T f)‖_{L^p(T)}` together with the quadrature report.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradError {
    pub value: f64,
    pub rel_change: f64,
    pub depth: u32,
    pub converged: bool,
}

pub fn grad_error_lp(f: &dyn SmoothFunction, t: &Triangle, m: usize, p: f64) -> Result<GradError> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("exponent p = {p} outside [1, ∞)")));
    }
    let interp = Interpolant::new(&|z| f.value(z), t, m)?;
    let (pts, _) = TriQuadrature::standard().mapped(t);
    let scale = pts.iter().fold(0.0f64, |s, &z| {
        let g = f.gradient(z);
        s.max(g[0].abs()).max(g[1].abs())
    });
    let abs_tol = (1e-13 * scale).powf(p) * t.area();
    let integrand = |z: Point| {
        let gf = f.gradient(z);
        let gi = interp.grad(z);
        (gf[0] - gi[0]).hypot(gf[1] - gi[1]).powf(p)
    };
    let r = integrate_adaptive(t, &integrand, QUAD_REL_TOL, abs_tol, QUAD_MAX_DEPTH);
    Ok(GradError { value: r.value.max(0.0).powf(1.0 / p), rel_change: r.rel_change, depth: r.depth, converged: r.converged })
}

/// Samples per edge of the barycentric grid used by [`grad_error_sup`].
pub const SUP_GRID: usize = 64;

/// `‖∇(f − I_T f)‖_{L^∞(T)}` sampled on a barycentric grid plus the nodes.
pub fn grad_error_sup(f: &dyn SmoothFunction, t: &Triangle, m: usize) -> Result<f64> {
    let interp = Interpolant::new(&|z| f.value(z), t, m)?;
    let err = |z: Point| {
        let gf = f.gradient(z);
        let gi = interp.grad(z);
        (gf[0] - gi[0]).hypot(gf[1] - gi[1])
    };
    let n = SUP_GRID;
    let mut best = 0.0f64;
    for i in 0..=n {
        for j in 0..=(n - i) {
            let (s, u) = (i as f64 / n as f64, j as f64 / n as f64);
            best = best.max(err(t.point_at([1.0 - s - u, s, u])));
        }
    }
    for z in lagrange_nodes(t, m)?.points {
        best = best.max(err(z));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::TestFunction;

    fn unit_right() -> Triangle {
        Triangle::new([0.0, 0.0], [1.0, 0.0], [0.0, 1.0]).unwrap()
    }

    #[test]
    fn node_counts() {
        let t = unit_right();
        let n2 = lagrange_nodes(&t, 2).unwrap();
        assert_eq!(n2.points.len(), 3);
        for v in t.vertices() {
            assert!(n2.points.contains(v));
        }
        let n3 = lagrange_nodes(&t, 3).unwrap();
        assert_eq!(n3.points.len(), 6);
        assert!(n3.points.contains(&[0.5, 0.5]) && n3.points.contains(&[0.5, 0.0]));
        let n4 = lagrange_nodes(&t, 4).unwrap();
        assert_eq!(n4.points.len(), 10);
        assert!(n4.points.iter().any(|p| (p[0] - 1.0 / 3.0).abs() < 1e-15 && (p[1] - 1.0 / 3.0).abs() < 1e-15));
        assert!(lagrange_nodes(&t, 1).is_err());
    }

    #[test]
    fn x_squared_interpolant_is_x() {
        let q = interpolate(&|z| z[0] * z[0], &unit_right(), 2).unwrap();
        assert!((q.coeff(1, 0) - 1.0).abs() < 1e-14);
        assert!(q.coeff(0, 0).abs() < 1e-14 && q.coeff(0, 1).abs() < 1e-14);
    }

    #[test]
    fn cubic_residual_at_centroid() {
        let t = Triangle::new([0.1, 0.0], [1.0, 0.2], [0.3, 0.9]).unwrap();
        let f = |z: Point| z[0].powi(3);
        let i = Interpolant::new(&f, &t, 3).unwrap();
        for p in lagrange_nodes(&t, 3).unwrap().points {
            assert!((i.value(p) - f(p)).abs() < 1e-13);
        }
        let c = t.barycenter();
        assert!((i.value(c) - f(c)).abs() > 1e-4);
    }

    #[test]
    fn unit_right_triangle_gradient_errors() {
        // ∫_T (2x − 1)² over the unit right triangle: the x-marginal has
        // density 2(1 − x), so the integral is (1/2)·∫₀¹ (2x−1)² 2(1−x) dx = 1/6.
        let oracle = {
            let n = 4000;
            let mut acc = 0.0;
            for i in 0..n {
                let x = (i as f64 + 0.5) / n as f64;
                acc += (2.0 * x - 1.0).powi(2) * (1.0 - x) / n as f64;
            }
            acc
        };
        assert!((oracle - 1.0 / 6.0).abs() < 1e-6);
        let f = Poly2D::from_terms(2, &[(2, 0, 1.0)]).unwrap();
        let e = grad_error_lp(&f, &unit_right(), 2, 2.0).unwrap();
        assert!(e.converged);
        assert!((e.value - (1.0f64 / 6.0).sqrt()).abs() < 1e-12);
        let s = grad_error_sup(&f, &unit_right(), 2).unwrap();
        assert!((s - 1.0).abs() < 1e-14);
    }

    #[test]
    fn reproduction_gives_zero_error() {
        let q = Poly2D::from_terms(2, &[(0, 0, 1.0), (2, 0, 0.3), (1, 1, -2.0), (0, 2, 0.7)]).unwrap();
        let t = Triangle::new([0.2, 0.1], [1.3, -0.2], [0.5, 0.8]).unwrap();
        assert!(grad_error_lp(&q, &t, 3, 2.0).unwrap().value < 1e-10);
        assert!(grad_error_lp(&q, &t, 3, 1.5).unwrap().value < 1e-10);
        assert!(grad_error_sup(&q, &t, 3).unwrap() < 1e-10);
    }

    #[test]
    fn quadrature_weights_and_exactness() {
        let rule = TriQuadrature::standard();
        assert_eq!(rule.degree(), 10);
        let t = Triangle::new([0.3, -0.1], [1.7, 0.4], [-0.2, 1.1]).unwrap();
        let (_, w) = rule.mapped(&t);
        assert!(w.iter().all(|&w| w > 0.0));
        assert!((w.iter().sum::<f64>() - t.area()).abs() < 1e-14);
        // ∫ over the reference simplex of s^a t^b = a! b! / (a+b+2)!
        let fact = |n: usize| (1..=n).fold(1.0, |a, i| a * i as f64);
        let r = Triangle::new([0.0, 0.0], [1.0, 0.0], [0.0, 1.0]).unwrap();
        for a in 0..=10 {
            for b in 0..=(10 - a) {
                let exact = fact(a) * fact(b) / fact(a + b + 2);
                let got = rule.integrate(&r, &|z| z[0].powi(a as i32) * z[1].powi(b as i32));
                assert!((got - exact).abs() <= 1e-13 * exact, "{a} {b}");
            }
        }
    }

    #[test]
    fn smooth_function_converges() {
        let t = Triangle::new([0.0, 0.0], [0.2, 0.05], [0.05, 0.15]).unwrap();
        let e = grad_error_lp(&TestFunction::F4, &t, 2, 2.0).unwrap();
        assert!(e.converged && e.value > 0.0);
    }
}
