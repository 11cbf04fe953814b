//! Shape functions of homogeneous polynomials: the optimizers for `L_m`, `K_r`,
//! `L_{m,p}` and `L_M`, the closed forms `M_2`, `M_3`, `L_2` and the
//! polynomial equivalents of `K_2`, `K_3`, `L_3`, `L_4`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::{Mat2, Point, Spd2, Sym2, Triangle, T_EQ_AREA};
use crate::interp::{grad_error_lp, Interpolant, TriQuadrature};
use crate::optim::nelder_mead;
use crate::poly::{binomial, vector_sup_norm, vector_sup_norm_with, HomPoly};

/// Minimizer of a shape problem.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Argmin {
    Metric(Spd2),
    Triangle(Triangle),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShapeValue {
    pub value: f64,
    pub attained: bool,
    pub argmin: Option<Argmin>,
    #[serde(rename = "cap_hit")]
    pub anisotropy_cap_hit: bool,
}

impl ShapeValue {
    pub fn metric(&self) -> Option<&Spd2> {
        match &self.argmin {
            Some(Argmin::Metric(m)) => Some(m),
            _ => None,
        }
    }

    pub fn triangle(&self) -> Option<&Triangle> {
        match &self.argmin {
            Some(Argmin::Triangle(t)) => Some(t),
            _ => None,
        }
    }
}

/// Settings of the `(φ, log-anisotropy)` search used by [`l_m`] and [`k_r`].
#[derive(Clone, Copy, Debug)]
pub struct MetricSearch {
    pub orientations: usize,
    pub anisotropies: usize,
    pub cap: f64,
    pub coarse_samples: usize,
    pub starts: usize,
    pub tol: f64,
    /// Nonzero seeds shift the orientation grid by a random phase.
    pub seed: u64,
}

impl Default for MetricSearch {
    fn default() -> Self {
        MetricSearch { orientations: 64, anisotropies: 121, cap: 6.0, coarse_samples: 256, starts: 5, tol: 1e-8, seed: 0 }
    }
}

/// Settings of the triangle-space search used by [`l_mp_oracle`] and [`l_m_restricted`].
#[derive(Clone, Copy, Debug)]
pub struct TriangleSearch {
    pub orientations: usize,
    pub anisotropies: usize,
    pub rotations: usize,
    pub cap: f64,
    pub starts: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for TriangleSearch {
    fn default() -> Self {
        TriangleSearch { orientations: 12, anisotropies: 13, rotations: 8, cap: 6.0, starts: 5, tol: 1e-8, seed: 0 }
    }
}

fn grid_phase(seed: u64) -> f64 {
    if seed == 0 {
        0.0
    } else {
        ChaCha8Rng::seed_from_u64(seed).gen_range(0.0..1.0)
    }
}

/// `R(φ) diag(e^{−t/2}, e^{t/2}) R(φ)ᵀ`, the inverse square root of the
/// unit-determinant `M_0 = R(φ) diag(e^t, e^{−t}) R(φ)ᵀ`.
fn inv_sqrt_unit(phi: f64, t: f64) -> Mat2 {
    let r = Mat2::rotation(phi);
    r.mul(&Mat2::diag((-0.5 * t).exp(), (0.5 * t).exp())).mul(&r.transpose())
}

fn eval_components(polys: &[HomPoly], w: Point) -> f64 {
    match polys {
        [p] => p.eval(w).abs(),
        [p, q] => p.eval(w).hypot(q.eval(w)),
        _ => unreachable!("one or two components"),
    }
}

fn half_circle(samples: usize) -> Vec<Point> {
    (0..samples)
        .map(|k| {
            let (s, c) = (PI * k as f64 / samples as f64).sin_cos();
            [c, s]
        })
        .collect()
}

fn coarse_sup(polys: &[HomPoly], a: &Mat2, dirs: &[Point]) -> f64 {
    dirs.iter().fold(0.0, |best, d| best.max(eval_components(polys, a.apply(*d))))
}

fn fine_sup(polys: &[HomPoly], a: &Mat2, samples: Option<usize>) -> f64 {
    let composed: Vec<HomPoly> = polys.iter().map(|p| p.compose_linear(a)).collect();
    match (composed.as_slice(), samples) {
        ([p], None) => p.sup_norm(),
        ([p], Some(s)) => p.sup_norm_with(s, true),
        ([p, q], None) => vector_sup_norm(p, q).expect("equal degrees"),
        ([p, q], Some(s)) => vector_sup_norm_with(p, q, s, true).expect("equal degrees"),
        _ => unreachable!("one or two components"),
    }
}

/// Minimizes `g(M_0) = ‖P ∘ M_0^{−1/2}‖` over unit-determinant `M_0`, where `P`
/// is homogeneous of degree `k` (scalar or vector valued).
///
/// Writing `M = s M_0` with `det M_0 = 1`, homogeneity gives
/// `‖P ∘ M^{−1/2}‖ = s^{−k/2} g(M_0)`, so the constraint `‖P ∘ M^{−1/2}‖ ≤ 1`
/// reads `s ≥ g(M_0)^{2/k}` and the cost `(det M)^{k/4} = s^{k/2}` is at least
/// `g(M_0)`, with equality at `s = g(M_0)^{2/k}`. The infimum over `M` is
/// therefore `inf g` and the scale variable drops out.
fn optimize_metric(polys: &[HomPoly], k: usize, opts: &MetricSearch) -> Result<ShapeValue> {
    if polys.iter().all(|p| p.max_abs_coeff() == 0.0) {
        return Ok(ShapeValue { value: 0.0, attained: false, argmin: None, anisotropy_cap_hit: false });
    }
    let cap = opts.cap;
    let phase = grid_phase(opts.seed);
    let nphi = opts.orientations.max(1);
    let nt = opts.anisotropies.max(2);
    let dirs = half_circle(opts.coarse_samples.max(1));
    let mut cells = Vec::with_capacity(nphi * nt);
    for i in 0..nphi {
        let phi = (i as f64 + phase) * PI / nphi as f64;
        for j in 0..nt {
            let t = -cap + 2.0 * cap * j as f64 / (nt - 1) as f64;
            cells.push((coarse_sup(polys, &inv_sqrt_unit(phi, t), &dirs), phi, t));
        }
    }
    cells.sort_by(|a, b| a.0.total_cmp(&b.0));
    let objective = |x: &[f64]| fine_sup(polys, &inv_sqrt_unit(x[0], x[1].clamp(-cap, cap)), Some(512));
    let steps = [PI / nphi as f64, 2.0 * cap / (nt - 1) as f64];
    let mut best: Option<(f64, f64, f64)> = None;
    for &(_, phi, t) in cells.iter().take(opts.starts.max(1)) {
        let r = nelder_mead(&objective, &[phi, t], &steps, opts.tol, 2000);
        if best.is_none_or(|b| r.value < b.0) {
            best = Some((r.value, r.x[0], r.x[1].clamp(-cap, cap)));
        }
    }
    let (_, phi, t) = best.ok_or_else(|| Error::Optimizer("empty search grid".into()))?;
    let phi = phi.rem_euclid(PI);
    let value = fine_sup(polys, &inv_sqrt_unit(phi, t), None);
    let cap_hit = t.abs() >= cap - 1e-3;
    let argmin = if cap_hit || value <= 0.0 {
        None
    } else {
        let s = value.powf(2.0 / k as f64);
        Some(Argmin::Metric(Spd2::from_eigen(s * t.exp(), s * (-t).exp(), phi)?))
    };
    Ok(ShapeValue { value, attained: argmin.is_some(), argmin, anisotropy_cap_hit: cap_hit })
}

fn require_degree(p: &HomPoly, min: usize, what: &str) -> Result<()> {
    if p.degree() < min {
        return Err(Error::InvalidArgument(format!("{what} needs degree ≥ {min}, got {}", p.degree())));
    }
    Ok(())
}

/// `L_m(π) = inf{(det M)^{(m−1)/4} : ‖(∇π) ∘ M^{−1/2}‖ ≤ 1}`; the argmin is the full `M`.
pub fn l_m(pi: &HomPoly) -> Result<ShapeValue> {
    l_m_with(pi, &MetricSearch::default())
}

pub fn l_m_with(pi: &HomPoly, opts: &MetricSearch) -> Result<ShapeValue> {
    require_degree(pi, 2, "L_m")?;
    let (dx, dy) = pi.grad()?;
    optimize_metric(&[dx, dy], pi.degree() - 1, opts)
}

/// `K_r(μ) = inf{(det M)^{r/4} : ‖μ ∘ M^{−1/2}‖ ≤ 1}`.
pub fn k_r(mu: &HomPoly) -> Result<ShapeValue> {
    k_r_with(mu, &MetricSearch::default())
}

pub fn k_r_with(mu: &HomPoly, opts: &MetricSearch) -> Result<ShapeValue> {
    require_degree(mu, 2, "K_r")?;
    optimize_metric(std::slice::from_ref(mu), mu.degree(), opts)
}

/// The unit-area triangle with `H_T = |T_eq| R(φ) diag(e^t, e^{−t}) R(φ)ᵀ`,
/// barycenter at the origin and in-ellipse rotation `ψ`.
pub fn triangle_from_params(phi: f64, t: f64, psi: f64) -> Triangle {
    let h_inv_sqrt = inv_sqrt_unit(phi, t).scaled(T_EQ_AREA.powf(-0.5));
    let a = h_inv_sqrt.mul(&Mat2::rotation(-psi));
    Triangle::reference().map_affine(&a, [0.0, 0.0]).expect("non-singular map of T_eq")
}

/// `‖∇(π − I_T^{m−1} π)‖_{L^p(T)}` with a fixed refinement level.
fn oracle_error(pi: &HomPoly, grad: &(HomPoly, HomPoly), t: &Triangle, p: f64, level: u32) -> f64 {
    let m = pi.degree();
    let Ok(interp) = Interpolant::new(&|z| pi.eval(z), t, m) else {
        return f64::INFINITY;
    };
    let g = |z: Point| {
        let gi = interp.grad(z);
        (grad.0.eval(z) - gi[0]).hypot(grad.1.eval(z) - gi[1]).powf(p)
    };
    TriQuadrature::standard().integrate_refined(t, level, &g).max(0.0).powf(1.0 / p)
}

fn optimize_triangle(pi: &HomPoly, p: f64, cap: f64, opts: &TriangleSearch) -> Result<(f64, Triangle, f64)> {
    require_degree(pi, 2, "L_{m,p}")?;
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("exponent p = {p} outside [1, ∞)")));
    }
    let grad = pi.grad()?;
    let level = if p == 2.0 { 0 } else { 2 };
    let phase = grid_phase(opts.seed);
    let nphi = opts.orientations.max(1);
    let nt = if cap > 0.0 { opts.anisotropies.max(2) } else { 1 };
    let npsi = opts.rotations.max(1);
    let clamp = |t: f64| t.abs().min(cap);
    let f = |phi: f64, t: f64, psi: f64| oracle_error(pi, &grad, &triangle_from_params(phi, clamp(t), psi), p, level);
    let mut cells = Vec::with_capacity(nphi * nt * npsi);
    for i in 0..nphi {
        let phi = (i as f64 + phase) * PI / nphi as f64;
        for j in 0..nt {
            let t = if nt > 1 { cap * j as f64 / (nt - 1) as f64 } else { 0.0 };
            for k in 0..npsi {
                let psi = (k as f64 + phase) * 2.0 * PI / (3.0 * npsi as f64);
                cells.push((f(phi, t, psi), phi, t, psi));
            }
        }
    }
    cells.sort_by(|a, b| a.0.total_cmp(&b.0));
    let dt = if nt > 1 { cap / (nt - 1) as f64 } else { 0.0 };
    let mut best: Option<(f64, f64, f64, f64)> = None;
    for &(_, phi, t, psi) in cells.iter().take(opts.starts.max(1)) {
        let (x0, steps): (Vec<f64>, Vec<f64>) = if cap > 0.0 {
            (vec![phi, t, psi], vec![PI / nphi as f64, dt, 2.0 * PI / (3.0 * npsi as f64)])
        } else {
            (vec![phi, psi], vec![PI / nphi as f64, 2.0 * PI / (3.0 * npsi as f64)])
        };
        let obj = |x: &[f64]| if x.len() == 3 { f(x[0], x[1], x[2]) } else { f(x[0], 0.0, x[1]) };
        let r = nelder_mead(&obj, &x0, &steps, opts.tol, 3000);
        let (phi, t, psi) = if r.x.len() == 3 { (r.x[0], clamp(r.x[1]), r.x[2]) } else { (r.x[0], 0.0, r.x[1]) };
        if best.is_none_or(|b| r.value < b.0) {
            best = Some((r.value, phi, t, psi));
        }
    }
    let (_, phi, t, psi) = best.ok_or_else(|| Error::Optimizer("empty search grid".into()))?;
    let tri = triangle_from_params(phi, t, psi);
    let value = grad_error_lp(pi, &tri, pi.degree(), p)?.value;
    Ok((value, tri, t))
}

/// `L_{m,p}(π) = inf_{|T|=1} ‖∇(π − I_T^{m−1} π)‖_{L^p(T)}` by direct search over triangles.
pub fn l_mp_oracle(pi: &HomPoly, p: f64) -> Result<ShapeValue> {
    l_mp_oracle_with(pi, p, &TriangleSearch::default())
}

pub fn l_mp_oracle_with(pi: &HomPoly, p: f64, opts: &TriangleSearch) -> Result<ShapeValue> {
    let (value, tri, t) = optimize_triangle(pi, p, opts.cap, opts)?;
    let cap_hit = t >= opts.cap - 1e-3;
    Ok(ShapeValue {
        value,
        attained: !cap_hit,
        argmin: (!cap_hit).then_some(Argmin::Triangle(tri)),
        anisotropy_cap_hit: cap_hit,
    })
}

/// `L_M(π)`: the same search restricted to `ρ(T) ≤ M_cap`. The minimizer
/// `T(π)` always exists.
pub fn l_m_restricted(pi: &HomPoly, m_cap: f64, p: f64) -> Result<ShapeValue> {
    l_m_restricted_with(pi, m_cap, p, &TriangleSearch::default())
}

pub fn l_m_restricted_with(pi: &HomPoly, m_cap: f64, p: f64, opts: &TriangleSearch) -> Result<ShapeValue> {
    if !(m_cap >= 1.0) {
        return Err(Error::InvalidArgument(format!("anisotropy bound M = {m_cap} < 1")));
    }
    let cap = m_cap.ln();
    let (value, tri, t) = optimize_triangle(pi, p, cap, opts)?;
    Ok(ShapeValue {
        value,
        attained: true,
        argmin: Some(Argmin::Triangle(tri)),
        anisotropy_cap_hit: cap > 0.0 && t >= cap - 1e-3,
    })
}

fn view(p: &HomPoly, degree: usize) -> Result<Vec<f64>> {
    if p.degree() != degree {
        return Err(Error::DegreeMismatch(p.degree(), degree));
    }
    Ok(p.binomial().coeffs().to_vec())
}

/// `[π]` for `π = ax² + 2bxy + cy²`.
pub fn quadratic_matrix(pi: &HomPoly) -> Result<Sym2> {
    let v = view(pi, 2)?;
    Ok(Sym2::new(v[0], v[1], v[2]))
}

fn is_singular(s: &Sym2) -> bool {
    s.det().abs() <= 1e-12 * s.frobenius().powi(2)
}

/// `M_2(π) = 4[π]²`, singular exactly when `π` is univariate.
pub fn m2(pi: &HomPoly) -> Result<Sym2> {
    Ok(quadratic_matrix(pi)?.square().scaled(4.0))
}

/// `M_3(π) = √([∂_x π]² + [∂_y π]²)`; with `π = ax³ + 3bx²y + 3cxy² + dy³`
/// this is `3 √(A² + B²)` for `A = [[a,b],[b,c]]`, `B = [[b,c],[c,d]]`.
pub fn m3(pi: &HomPoly) -> Result<Sym2> {
    let v = view(pi, 3)?;
    let a = Sym2::new(v[0], v[1], v[2]);
    let b = Sym2::new(v[1], v[2], v[3]);
    Ok(a.square().add(&b.square()).psd_sqrt().scaled(3.0))
}

/// Closed-form metric `M_m(π)` for `m ∈ {2, 3}` as an SPD matrix; errors when singular.
pub fn closed_form_metric(pi: &HomPoly) -> Result<Spd2> {
    let s = match pi.degree() {
        2 => m2(pi)?,
        3 => m3(pi)?,
        m => return Err(Error::UnsupportedOrder(m)),
    };
    if is_singular(&s) {
        return Err(Error::SingularMetric(s));
    }
    s.to_spd()
}

/// `L_2(π) = (det M_2(π))^{1/4} = 2√|det[π]|`.
pub fn l2_exact(pi: &HomPoly) -> Result<f64> {
    Ok(2.0 * quadratic_matrix(pi)?.det().abs().sqrt())
}

/// `√|det[μ]|`.
pub fn k2_equiv(mu: &HomPoly) -> Result<f64> {
    Ok(quadratic_matrix(mu)?.det().abs().sqrt())
}

/// Discriminant `4(ac − b²)(bd − c²) − (ad − bc)²` of `ax³ + 3bx²y + 3cxy² + dy³`.
pub fn disc(mu: &HomPoly) -> Result<f64> {
    let v = view(mu, 3)?;
    let (a, b, c, d) = (v[0], v[1], v[2], v[3]);
    Ok(4.0 * (a * c - b * b) * (b * d - c * c) - (a * d - b * c).powi(2))
}

/// `|disc μ|^{1/4}`.
pub fn k3_equiv(mu: &HomPoly) -> Result<f64> {
    Ok(disc(mu)?.abs().powf(0.25))
}

/// `(ac − b²)² + (ad − bc)²/2 + (bd − c²)²`.
pub fn l3_sum(pi: &HomPoly) -> Result<f64> {
    let v = view(pi, 3)?;
    let (a, b, c, d) = (v[0], v[1], v[2], v[3]);
    Ok((a * c - b * b).powi(2) + 0.5 * (a * d - b * c).powi(2) + (b * d - c * c).powi(2))
}

/// `3 (l3_sum)^{1/4}`.
pub fn l3_equiv(pi: &HomPoly) -> Result<f64> {
    Ok(3.0 * l3_sum(pi)?.powf(0.25))
}

/// The five-square sum equivalent to `L_4(π)^8` for
/// `π = ax⁴ + 4bx³y + 6cx²y² + 4dxy³ + ey⁴`.
pub fn l4_sum(pi: &HomPoly) -> Result<f64> {
    let v = view(pi, 4)?;
    let (a, b, c, d, e) = (v[0], v[1], v[2], v[3], v[4]);
    let t0 = 3.0 * b * b * c * c - 4.0 * a * c.powi(3) - 4.0 * b.powi(3) * d + 6.0 * a * b * c * d - a * a * d * d;
    let t1 = 2.0 * b * c.powi(3) - 6.0 * a * c * c * d + 4.0 * a * b * d * d - 4.0 * b.powi(3) * e + 6.0 * a * b * c * e
        - 2.0 * a * a * d * e;
    let t2 = 3.0 * c.powi(4) - 6.0 * b * c * c * d + 8.0 * b * b * d * d - 6.0 * a * c * d * d - 6.0 * b * b * c * e
        + 6.0 * a * c * c * e
        + 2.0 * a * b * d * e
        - a * a * e * e;
    let t3 = 2.0 * c.powi(3) * d - 4.0 * a * d.powi(3) - 6.0 * b * c * c * e + 4.0 * b * b * d * e + 6.0 * a * c * d * e
        - 2.0 * a * b * e * e;
    let t4 = 3.0 * c * c * d * d - 4.0 * b * d.powi(3) - 4.0 * c.powi(3) * e + 6.0 * b * c * d * e - b * b * e * e;
    Ok(t0 * t0 + t1 * t1 / 4.0 + t2 * t2 / 6.0 + t3 * t3 / 4.0 + t4 * t4)
}

/// `(l4_sum)^{1/8}`.
pub fn l4_equiv(pi: &HomPoly) -> Result<f64> {
    Ok(l4_sum(pi)?.powf(0.125))
}

/// Homogeneous functional `Q` of degree `d` on `H_k`, with numeric polarization.
pub struct PolarizedForm {
    degree: usize,
    q: Box<dyn Fn(&HomPoly) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for PolarizedForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PolarizedForm").field("degree", &self.degree).finish_non_exhaustive()
    }
}

/// Wraps `q`, asserted homogeneous of degree `d`.
pub fn polarize(q: impl Fn(&HomPoly) -> f64 + Send + Sync + 'static, d: usize) -> PolarizedForm {
    PolarizedForm { degree: d, q: Box::new(q) }
}

/// `Q = det[·]` on `H_2`.
pub fn det_form() -> PolarizedForm {
    polarize(|p| quadratic_matrix(p).map(|s| s.det()).unwrap_or(f64::NAN), 2)
}

/// `Q = disc` on `H_3`.
pub fn disc_form() -> PolarizedForm {
    polarize(|p| disc(p).unwrap_or(f64::NAN), 4)
}

impl PolarizedForm {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn eval(&self, p: &HomPoly) -> f64 {
        (self.q)(p)
    }

    fn ray(&self, j: usize) -> (f64, f64) {
        let (s, c) = ((j as f64 + 0.5) * PI / (self.degree + 2) as f64).sin_cos();
        (c, s)
    }

    fn row(&self, u: f64, v: f64) -> Vec<f64> {
        let d = self.degree;
        (0..=d).map(|k| binomial(d, k) * u.powi(k as i32) * v.powi((d - k) as i32)).collect()
    }

    /// `Q_0, …, Q_d` with `Q(uπ_1 + vπ_2) = Σ C(d,k) u^k v^{d−k} Q_k(π_1, π_2)`.
    pub fn components(&self, p1: &HomPoly, p2: &HomPoly) -> Result<Vec<f64>> {
        if p1.degree() != p2.degree() {
            return Err(Error::DegreeMismatch(p1.degree(), p2.degree()));
        }
        let d = self.degree;
        let sample = |u: f64, v: f64| self.eval(&p1.scaled(u).add(&p2.scaled(v)).expect("equal degrees"));
        let mut a = DMatrix::zeros(d + 1, d + 1);
        let mut rhs = DVector::zeros(d + 1);
        for j in 0..=d {
            let (u, v) = self.ray(j);
            for (k, x) in self.row(u, v).into_iter().enumerate() {
                a[(j, k)] = x;
            }
            rhs[j] = sample(u, v);
        }
        let scale = rhs.amax();
        let sol = a.full_piv_lu().solve(&rhs).ok_or(Error::SingularSystem)?;
        let comps: Vec<f64> = sol.iter().copied().collect();
        let (u, v) = self.ray(d + 1);
        let check = sample(u, v);
        let got = self.reconstruct(&comps, u, v);
        if (got - check).abs() > 1e-8 * scale.max(check.abs()) + 1e-300 || !got.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "functional is not homogeneous of degree {d} (residual {:e})",
                (got - check).abs()
            )));
        }
        Ok(comps)
    }

    /// `Σ C(d,k) u^k v^{d−k} Q_k`.
    pub fn reconstruct(&self, comps: &[f64], u: f64, v: f64) -> f64 {
        self.row(u, v).iter().zip(comps).map(|(r, q)| r * q).sum()
    }
}

/// `Q_*(π) = Σ C(d,k) Q_k(∂_x π, ∂_y π)²`.
pub fn qstar(form: &PolarizedForm, pi: &HomPoly) -> Result<f64> {
    let (dx, dy) = pi.grad()?;
    let comps = form.components(&dx, &dy)?;
    let d = form.degree();
    Ok(comps.iter().enumerate().map(|(k, q)| binomial(d, k) * q * q).sum())
}

/// `Q_*(π)^{1/(2d)}`, equivalent to `L_m(π)`.
pub fn qstar_equiv(form: &PolarizedForm, pi: &HomPoly) -> Result<f64> {
    Ok(qstar(form, pi)?.powf(1.0 / (2 * form.degree()) as f64))
}

/// `t_m = ⌊(m + 3)/2⌋`, the linear-factor multiplicity at which `L_m` vanishes.
pub fn t_m(m: usize) -> usize {
    (m + 3) / 2
}

/// `(αx + βy)^k · π̃`.
#[derive(Clone, Debug, PartialEq)]
pub struct FactoredPoly {
    pub alpha: f64,
    pub beta: f64,
    pub multiplicity: usize,
    pub cofactor: HomPoly,
}

impl FactoredPoly {
    pub fn degree(&self) -> usize {
        self.multiplicity + self.cofactor.degree()
    }

    pub fn expand(&self) -> HomPoly {
        HomPoly::linear(self.alpha, self.beta).pow(self.multiplicity).mul(&self.cofactor)
    }

    /// Multiplicity of `αx + βy` in the expanded product, counting any copies
    /// hidden in the cofactor.
    pub fn total_multiplicity(&self) -> usize {
        let n = self.alpha.hypot(self.beta);
        if n == 0.0 {
            return self.degree();
        }
        // Rotate so that the factor becomes a multiple of x.
        let (c, s) = (self.alpha / n, self.beta / n);
        let u = Mat2::new(c, -s, s, c);
        let q = self.cofactor.compose_linear(&u);
        let tol = 1e-12 * q.max_abs_coeff();
        self.multiplicity + q.coeffs().iter().take_while(|c| c.abs() <= tol).count().min(q.degree())
    }
}

/// Whether `L_m` vanishes on the product, `m` its degree.
pub fn vanishes_on(f: &FactoredPoly) -> bool {
    f.degree() >= 2 && f.total_multiplicity() >= t_m(f.degree())
}

/// Value of the polynomial equivalent for `m ∈ {2, 3, 4}` (`|det[π]|`,
/// `l3_sum`, `l4_sum`) with its degree in the coefficients of `π`.
pub fn equivalent_polynomial(pi: &HomPoly) -> Result<(f64, usize)> {
    match pi.degree() {
        2 => Ok((quadratic_matrix(pi)?.det().abs(), 2)),
        3 => Ok((l3_sum(pi)?, 4)),
        4 => Ok((l4_sum(pi)?, 8)),
        m => Err(Error::UnsupportedOrder(m)),
    }
}

/// Closed-form equivalent of `L_m(π)` for `m ∈ {2, 3, 4}`.
pub fn l_equiv(pi: &HomPoly) -> Result<f64> {
    match pi.degree() {
        2 => l2_exact(pi),
        3 => l3_equiv(pi),
        4 => l4_equiv(pi),
        m => Err(Error::UnsupportedOrder(m)),
    }
}

/// Whether the equivalent polynomial is below `1e−10·scale^deg`.
pub fn vanishes_numerically(pi: &HomPoly) -> Result<bool> {
    let (v, deg) = equivalent_polynomial(pi)?;
    Ok(v <= 1e-10 * pi.max_abs_coeff().powi(deg as i32))
}
