//! Triangles, their ellipse matrix `H_T`, degeneracy and sliverness, and
//! closed-form 2×2 symmetric matrix algebra.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Area of the reference triangle `T_eq`, `3√3/4`.
pub const T_EQ_AREA: f64 = 1.299_038_105_676_658;

pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1]]
}

pub fn scale(a: Point, k: f64) -> Point {
    [a[0] * k, a[1] * k]
}

pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

pub fn dist(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

/// Twice the signed area of `(a, b, c)`.
pub fn orient(a: Point, b: Point, c: Point) -> f64 {
    cross(sub(b, a), sub(c, a))
}

/// General 2×2 matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Mat2([[a11, a12], [a21, a22]])
    }

    pub fn diag(d1: f64, d2: f64) -> Self {
        Mat2::new(d1, 0.0, 0.0, d2)
    }

    /// Counterclockwise rotation by `theta`.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Mat2::new(c, -s, s, c)
    }

    pub fn from_columns(u: Point, v: Point) -> Self {
        Mat2::new(u[0], v[0], u[1], v[1])
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        let a = &self.0;
        let b = &o.0;
        Mat2([
            [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
        ])
    }

    pub fn apply(&self, z: Point) -> Point {
        let a = &self.0;
        [a[0][0] * z[0] + a[0][1] * z[1], a[1][0] * z[0] + a[1][1] * z[1]]
    }

    pub fn transpose(&self) -> Mat2 {
        let a = &self.0;
        Mat2::new(a[0][0], a[1][0], a[0][1], a[1][1])
    }

    pub fn det(&self) -> f64 {
        let a = &self.0;
        a[0][0] * a[1][1] - a[0][1] * a[1][0]
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        let a = &self.0;
        Some(Mat2::new(a[1][1] / d, -a[0][1] / d, -a[1][0] / d, a[0][0] / d))
    }

    pub fn scaled(&self, k: f64) -> Mat2 {
        let a = &self.0;
        Mat2::new(a[0][0] * k, a[0][1] * k, a[1][0] * k, a[1][1] * k)
    }

    pub fn frobenius(&self) -> f64 {
        self.0.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        Sym2::gram(self).eigenvalues()[0].max(0.0).sqrt()
    }
}

/// Eigen-decomposition of a symmetric 2×2 matrix: `values[0] ≥ values[1]`,
/// `angle` is the direction of the leading eigenvector.
#[derive(Clone, Copy, Debug)]
pub struct Eigen2 {
    pub values: [f64; 2],
    pub angle: f64,
}

impl Eigen2 {
    pub fn vectors(&self) -> [Point; 2] {
        let (s, c) = self.angle.sin_cos();
        [[c, s], [-s, c]]
    }
}

/// `ac − b²` with Kahan's compensated product difference.
fn det_sym(a: f64, b: f64, c: f64) -> f64 {
    let w = b * b;
    let e = (-b).mul_add(b, w);
    a.mul_add(c, -w) + e
}

/// Symmetric matrix `[[a, b], [b, c]]`, not necessarily definite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sym2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Sym2 {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Sym2 { a, b, c }
    }

    /// `Aᵀ A`.
    pub fn gram(m: &Mat2) -> Self {
        let a = &m.0;
        Sym2::new(
            a[0][0] * a[0][0] + a[1][0] * a[1][0],
            a[0][0] * a[0][1] + a[1][0] * a[1][1],
            a[0][1] * a[0][1] + a[1][1] * a[1][1],
        )
    }

    pub fn det(&self) -> f64 {
        det_sym(self.a, self.b, self.c)
    }

    pub fn trace(&self) -> f64 {
        self.a + self.c
    }

    pub fn to_mat(&self) -> Mat2 {
        Mat2::new(self.a, self.b, self.b, self.c)
    }

    pub fn add(&self, o: &Sym2) -> Sym2 {
        Sym2::new(self.a + o.a, self.b + o.b, self.c + o.c)
    }

    pub fn scaled(&self, k: f64) -> Sym2 {
        Sym2::new(self.a * k, self.b * k, self.c * k)
    }

    /// Matrix square `S·S`.
    pub fn square(&self) -> Sym2 {
        Sym2::new(
            self.a * self.a + self.b * self.b,
            self.b * (self.a + self.c),
            self.b * self.b + self.c * self.c,
        )
    }

    pub fn eigen(&self) -> Eigen2 {
        let mean = 0.5 * (self.a + self.c);
        let r = (0.5 * (self.a - self.c)).hypot(self.b);
        let hi = mean + r;
        let lo = if hi.abs() > 0.0 && (mean - r).abs() < 1e-8 * hi.abs() {
            self.det() / hi
        } else {
            mean - r
        };
        Eigen2 { values: [hi, lo], angle: 0.5 * (2.0 * self.b).atan2(self.a - self.c) }
    }

    pub fn eigenvalues(&self) -> [f64; 2] {
        self.eigen().values
    }

    fn from_eigen(values: [f64; 2], angle: f64) -> Sym2 {
        let (s, c) = angle.sin_cos();
        let [l1, l2] = values;
        Sym2::new(l1 * c * c + l2 * s * s, (l1 - l2) * c * s, l1 * s * s + l2 * c * c)
    }

    /// Square root of a positive semi-definite matrix (negative eigenvalues clamped).
    pub fn psd_sqrt(&self) -> Sym2 {
        let e = self.eigen();
        Sym2::from_eigen([e.values[0].max(0.0).sqrt(), e.values[1].max(0.0).sqrt()], e.angle)
    }

    pub fn to_spd(&self) -> Result<Spd2> {
        Spd2::new(self.a, self.b, self.c)
    }

    pub fn frobenius(&self) -> f64 {
        (self.a * self.a + 2.0 * self.b * self.b + self.c * self.c).sqrt()
    }
}

/// Symmetric positive definite matrix `[[a, b], [b, c]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spd2 {
    a: f64,
    b: f64,
    c: f64,
}

impl Spd2 {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        let finite = a.is_finite() && b.is_finite() && c.is_finite();
        if !finite || a <= 0.0 || a * c - b * b <= 0.0 {
            return Err(Error::NotPositiveDefinite { a, b, c });
        }
        Ok(Spd2 { a, b, c })
    }

    pub fn identity() -> Self {
        Spd2 { a: 1.0, b: 0.0, c: 1.0 }
    }

    pub fn diag(d1: f64, d2: f64) -> Result<Self> {
        Spd2::new(d1, 0.0, d2)
    }

    /// `R(θ) diag(l1, l2) R(θ)ᵀ`.
    pub fn from_eigen(l1: f64, l2: f64, theta: f64) -> Result<Self> {
        Sym2::from_eigen([l1, l2], theta).to_spd()
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn sym(&self) -> Sym2 {
        Sym2::new(self.a, self.b, self.c)
    }

    pub fn to_mat(&self) -> Mat2 {
        self.sym().to_mat()
    }

    pub fn det(&self) -> f64 {
        det_sym(self.a, self.b, self.c)
    }

    pub fn eigen(&self) -> Eigen2 {
        self.sym().eigen()
    }

    /// Spectral norm, the largest eigenvalue.
    pub fn norm(&self) -> f64 {
        self.eigen().values[0]
    }

    pub fn power(&self, alpha: f64) -> Spd2 {
        let e = self.eigen();
        let v = [e.values[0].powf(alpha), e.values[1].powf(alpha)];
        let s = Sym2::from_eigen(v, e.angle);
        Spd2 { a: s.a, b: s.b, c: s.c }
    }

    pub fn sqrt(&self) -> Spd2 {
        self.power(0.5)
    }

    pub fn inv_sqrt(&self) -> Spd2 {
        self.power(-0.5)
    }

    pub fn inverse(&self) -> Spd2 {
        let d = self.det();
        Spd2 { a: self.c / d, b: -self.b / d, c: self.a / d }
    }

    pub fn scaled(&self, k: f64) -> Result<Spd2> {
        Spd2::new(self.a * k, self.b * k, self.c * k)
    }

    pub fn add_identity(&self, delta: f64) -> Result<Spd2> {
        Spd2::new(self.a + delta, self.b, self.c + delta)
    }

    /// `uᵀ M u`.
    pub fn quad(&self, u: Point) -> f64 {
        self.a * u[0] * u[0] + 2.0 * self.b * u[0] * u[1] + self.c * u[1] * u[1]
    }

    /// `Aᵀ M A`.
    pub fn congruence(&self, m: &Mat2) -> Result<Spd2> {
        let s = m.transpose().mul(&self.to_mat()).mul(m);
        Spd2::new(s.0[0][0], 0.5 * (s.0[0][1] + s.0[1][0]), s.0[1][1])
    }

    /// `M / √det M`.
    pub fn unit_det(&self) -> Spd2 {
        let k = 1.0 / self.det().sqrt();
        Spd2 { a: self.a * k, b: self.b * k, c: self.c * k }
    }

    pub fn frobenius_distance(&self, o: &Spd2) -> f64 {
        Sym2::new(self.a - o.a, self.b - o.b, self.c - o.c).frobenius()
    }

    pub fn frobenius(&self) -> f64 {
        self.sym().frobenius()
    }

    /// Eigenvalues of `M^{-1/2} O M^{-1/2}`, largest first.
    pub fn relative_eigenvalues(&self, o: &Spd2) -> [f64; 2] {
        let r = self.inv_sqrt().to_mat();
        let s = r.mul(&o.to_mat()).mul(&r);
        Sym2::new(s.0[0][0], 0.5 * (s.0[0][1] + s.0[1][0]), s.0[1][1]).eigenvalues()
    }
}

impl fmt::Display for Spd2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.16e},{:.16e},{:.16e}", self.a, self.b, self.c)
    }
}

impl FromStr for Spd2 {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidArgument(format!("bad matrix '{s}': {e}")))?;
        match parts.as_slice() {
            [a, b, c] => Spd2::new(*a, *b, *c),
            _ => Err(Error::InvalidArgument(format!("expected a,b,c, got '{s}'"))),
        }
    }
}

/// The pair of ellipses `{uᵀHu ≤ 1/4} ⊂ T − z_T ⊂ {uᵀHu ≤ 1}`.
#[derive(Clone, Copy, Debug)]
pub struct Ellipse {
    pub center: Point,
    pub h: Spd2,
}

impl Ellipse {
    pub fn level(&self, z: Point) -> f64 {
        self.h.quad(sub(z, self.center))
    }

    pub fn in_outer(&self, z: Point) -> bool {
        self.level(z) <= 1.0
    }

    pub fn in_inner(&self, z: Point) -> bool {
        self.level(z) <= 0.25
    }
}

/// Non-degenerate triangle with counterclockwise vertices.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Triangle {
    v: [Point; 3],
}

impl Triangle {
    pub fn new(a: Point, b: Point, c: Point) -> Result<Self> {
        let v = if orient(a, b, c) < 0.0 { [a, c, b] } else { [a, b, c] };
        let t = Triangle { v };
        let area = 0.5 * orient(v[0], v[1], v[2]);
        let diameter = t.diameter();
        if !(area >= 1e-14 * diameter * diameter) || !diameter.is_finite() {
            return Err(Error::DegenerateTriangle { area, diameter });
        }
        Ok(t)
    }

    /// `T_eq`, vertices `(cos 2kπ/3, sin 2kπ/3)`.
    pub fn reference() -> Self {
        let v = |k: f64| {
            let (s, c) = (2.0 * k * PI / 3.0).sin_cos();
            [c, s]
        };
        Triangle { v: [v(0.0), v(1.0), v(2.0)] }
    }

    pub fn vertices(&self) -> &[Point; 3] {
        &self.v
    }

    pub fn area(&self) -> f64 {
        0.5 * orient(self.v[0], self.v[1], self.v[2])
    }

    pub fn barycenter(&self) -> Point {
        let [a, b, c] = self.v;
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    pub fn edge_lengths(&self) -> [f64; 3] {
        let [a, b, c] = self.v;
        [dist(b, c), dist(c, a), dist(a, b)]
    }

    pub fn diameter(&self) -> f64 {
        let e = self.edge_lengths();
        e[0].max(e[1]).max(e[2])
    }

    /// Interior angles, `angles()[i]` at vertex `i`.
    pub fn angles(&self) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            let p = self.v[i];
            let e1 = sub(self.v[(i + 1) % 3], p);
            let e2 = sub(self.v[(i + 2) % 3], p);
            *o = (dot(e1, e2) / (norm(e1) * norm(e2))).clamp(-1.0, 1.0).acos();
        }
        out
    }

    pub fn max_angle(&self) -> f64 {
        let a = self.angles();
        a[0].max(a[1]).max(a[2])
    }

    /// `H_T` with `H_T^{-1} = (2/3) Σ (v_i − z_T)(v_i − z_T)ᵀ = (2/9) Σ_{edges} e eᵀ`,
    /// whose determinant is `(16/27)|T|²`.
    pub fn h_matrix(&self) -> Spd2 {
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        for i in 0..3 {
            let e = sub(self.v[(i + 1) % 3], self.v[i]);
            a += e[0] * e[0];
            b += e[0] * e[1];
            c += e[1] * e[1];
        }
        let k = 2.0 / 9.0;
        let det = 16.0 / 27.0 * self.area().powi(2);
        Spd2 { a: k * c / det, b: -k * b / det, c: k * a / det }
    }

    /// `ρ(T) = √(‖H_T‖ ‖H_T^{-1}‖)`.
    pub fn degeneracy(&self) -> f64 {
        let [hi, lo] = self.h_matrix().eigen().values;
        (hi / lo).sqrt()
    }

    /// `S(T) = max(1, tan(θ/2))` with `θ` the largest angle.
    pub fn sliverness(&self) -> f64 {
        (0.5 * self.max_angle()).tan().max(1.0)
    }

    /// Sliverness from its definition: the smallest condition number of a
    /// linear map sending `T` to an acute triangle.
    pub fn sliverness_oracle(&self) -> Result<f64> {
        let acute = |phi: f64, ls: f64| {
            let s = ls.exp();
            let psi = Mat2::diag(s, 1.0 / s).mul(&Mat2::rotation(phi));
            let w = self.v.map(|p| psi.apply(p));
            (0..3).all(|i| {
                let e1 = sub(w[(i + 1) % 3], w[i]);
                let e2 = sub(w[(i + 2) % 3], w[i]);
                dot(e1, e2) >= -1e-12 * norm(e1) * norm(e2)
            })
        };
        let ls_max = 1e4f64.ln();
        let nls = 400usize;
        // Smallest feasible log-stretch along a fixed direction: scan, then bisect.
        let g = |phi: f64| -> Option<f64> {
            if acute(phi, 0.0) {
                return Some(0.0);
            }
            let j = (1..nls).find(|&j| acute(phi, ls_max * j as f64 / (nls - 1) as f64))?;
            let (mut lo, mut hi) = (ls_max * (j - 1) as f64 / (nls - 1) as f64, ls_max * j as f64 / (nls - 1) as f64);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if acute(phi, mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Some(hi)
        };
        let nphi = 720usize;
        let mut best: Option<(f64, f64)> = None;
        for i in 0..nphi {
            let phi = PI * i as f64 / nphi as f64;
            if let Some(l) = g(phi) {
                if best.is_none_or(|(_, b)| l < b) {
                    best = Some((phi, l));
                }
            }
        }
        let (mut phi, mut ls) = best.ok_or_else(|| Error::Optimizer("no acute image within s ≤ 1e4".into()))?;
        let mut dphi = PI / nphi as f64;
        while dphi > 1e-13 {
            let phi0 = phi;
            for i in -10..=10 {
                let p = phi0 + dphi * i as f64 / 10.0;
                if let Some(l) = g(p) {
                    if l < ls {
                        phi = p;
                        ls = l;
                    }
                }
            }
            dphi /= 4.0;
        }
        Ok((2.0 * ls).exp())
    }

    pub fn ellipse(&self) -> Ellipse {
        Ellipse { center: self.barycenter(), h: self.h_matrix() }
    }

    /// Image under `z ↦ A z + z0`.
    pub fn map_affine(&self, a: &Mat2, z0: Point) -> Result<Triangle> {
        let w = self.v.map(|p| add(a.apply(p), z0));
        Triangle::new(w[0], w[1], w[2])
    }

    pub fn translated(&self, z0: Point) -> Triangle {
        Triangle { v: self.v.map(|p| add(p, z0)) }
    }

    /// Barycentric coordinates of `z`.
    pub fn barycentric(&self, z: Point) -> [f64; 3] {
        let [a, b, c] = self.v;
        let d = orient(a, b, c);
        let l1 = orient(z, b, c) / d;
        let l2 = orient(a, z, c) / d;
        [l1, l2, 1.0 - l1 - l2]
    }

    pub fn point_at(&self, l: [f64; 3]) -> Point {
        let [a, b, c] = self.v;
        [
            l[0] * a[0] + l[1] * b[0] + l[2] * c[0],
            l[0] * a[1] + l[1] * b[1] + l[2] * c[1],
        ]
    }

    pub fn contains(&self, z: Point, tol: f64) -> bool {
        self.barycentric(z).iter().all(|&l| l >= -tol)
    }

    /// Jacobian of the map from the reference simplex `(0,0),(1,0),(0,1)`.
    pub fn jacobian(&self) -> Mat2 {
        Mat2::from_columns(sub(self.v[1], self.v[0]), sub(self.v[2], self.v[0]))
    }
}
