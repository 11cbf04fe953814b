//! Optimal matrix fields `M(z)`, Riemannian metrics `H(z)` and the
//! `τ`-norm of a shape function over a domain.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::{Arc, Mutex};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::SmoothFunction;
use crate::geom::{Point, Spd2, Sym2};
use crate::meshgen::Domain;
use crate::poly::{top_part, vector_sup_norm, HomPoly};
use crate::shape::{l_m_with, m2, m3, MetricSearch};

/// Order `m` and exponent `p`; `τ` is always derived.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceConfig {
    m: usize,
    p: f64,
}

impl SpaceConfig {
    pub fn new(m: usize, p: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidArgument(format!("order m must be ≥ 2, got {m}")));
        }
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::InvalidArgument(format!("exponent p must lie in [1, ∞), got {p}")));
        }
        Ok(SpaceConfig { m, p })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `1/τ = (m−1)/2 + 1/p`.
    pub fn tau(&self) -> f64 {
        1.0 / ((self.m as f64 - 1.0) / 2.0 + 1.0 / self.p)
    }

    /// `(m−1)p + 2`.
    fn det_denominator(&self) -> f64 {
        (self.m as f64 - 1.0) * self.p + 2.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixSource {
    ClosedForm,
    Optimizer,
}

type MatrixCache = Mutex<HashMap<Vec<u64>, Sym2>>;

/// `z ↦ M(z) = M_m(π_z) + δ Id`.
#[derive(Clone)]
pub struct MatrixField {
    f: Arc<dyn SmoothFunction>,
    cfg: SpaceConfig,
    delta: f64,
    source: MatrixSource,
    search: MetricSearch,
    cache: Arc<MatrixCache>,
}

impl std::fmt::Debug for MatrixField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MatrixField")
            .field("cfg", &self.cfg)
            .field("delta", &self.delta)
            .field("source", &self.source)
            .finish()
    }
}

/// Number of domain samples used for `δ` and for audits.
pub const AUDIT_SAMPLES: usize = 1000;

/// Uniform samples of the domain by rejection from its bounding box.
pub fn sample_domain(domain: &Domain, count: usize, seed: u64) -> Vec<Point> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = domain.boundary();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in b {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let z = [rng.gen_range(lo[0]..hi[0]), rng.gen_range(lo[1]..hi[1])];
        if domain.contains(z) {
            out.push(z);
        }
    }
    out
}

/// `M(z)` with `δ = 1e−6 · max eigenvalue of M_m(π_z)` over [`AUDIT_SAMPLES`] domain samples.
pub fn matrix_field(
    f: Arc<dyn SmoothFunction>,
    cfg: SpaceConfig,
    domain: &Domain,
    source: MatrixSource,
) -> Result<MatrixField> {
    let mut field = MatrixField::with_delta(f, cfg, 0.0, source)?;
    let lmax = sample_domain(domain, AUDIT_SAMPLES, 0)
        .par_iter()
        .map(|z| field.unregularized(*z).map(|s| s.eigenvalues()[0]))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    field.delta = if lmax > 0.0 { 1e-6 * lmax } else { 1e-6 };
    Ok(field)
}

impl MatrixField {
    pub fn with_delta(f: Arc<dyn SmoothFunction>, cfg: SpaceConfig, delta: f64, source: MatrixSource) -> Result<Self> {
        if source == MatrixSource::ClosedForm && !(2..=3).contains(&cfg.m()) {
            return Err(Error::UnsupportedOrder(cfg.m()));
        }
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(Error::InvalidArgument(format!("δ must be finite and ≥ 0, got {delta}")));
        }
        Ok(MatrixField {
            f,
            cfg,
            delta,
            source,
            search: MetricSearch::default(),
            cache: Arc::new(Mutex::new(HashMap::new())),
        })
    }

    pub fn with_search(mut self, search: MetricSearch) -> Self {
        self.search = search;
        self.cache = Arc::new(Mutex::new(HashMap::new()));
        self
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn source(&self) -> MatrixSource {
        self.source
    }

    pub fn config(&self) -> SpaceConfig {
        self.cfg
    }

    pub fn top_part(&self, z: Point) -> Result<HomPoly> {
        top_part(self.f.as_ref(), z, self.cfg.m())
    }

    /// `M_m(π_z)` before regularization; `M_3` is scaled by `√2`.
    pub fn unregularized(&self, z: Point) -> Result<Sym2> {
        let pi = self.top_part(z)?;
        self.matrix_of(&pi)
    }

    pub fn matrix_of(&self, pi: &HomPoly) -> Result<Sym2> {
        match self.source {
            MatrixSource::ClosedForm => match pi.degree() {
                2 => m2(pi),
                3 => Ok(m3(pi)?.scaled(std::f64::consts::SQRT_2)),
                d => Err(Error::UnsupportedOrder(d)),
            },
            MatrixSource::Optimizer => {
                if pi.max_abs_coeff() == 0.0 {
                    return Ok(Sym2::new(0.0, 0.0, 0.0));
                }
                let key: Vec<u64> = pi.coeffs().iter().map(|c| c.to_bits()).collect();
                if let Some(s) = self.cache.lock().unwrap().get(&key) {
                    return Ok(*s);
                }
                let v = l_m_with(pi, &self.search)?;
                let s = v
                    .metric()
                    .map(|m| m.sym())
                    .ok_or_else(|| Error::Optimizer("metric search returned no argmin".into()))?;
                self.cache.lock().unwrap().insert(key, s);
                Ok(s)
            }
        }
    }

    pub fn eval(&self, z: Point) -> Result<Spd2> {
        let s = self.unregularized(z)?;
        s.add(&Sym2::new(self.delta, 0.0, self.delta)).to_spd()
    }

    /// `‖(∇π_z) ∘ M(z)^{−1/2}‖`.
    pub fn constraint_residual(&self, z: Point) -> Result<f64> {
        let pi = self.top_part(z)?;
        let a = self.eval(z)?.inv_sqrt().to_mat();
        let (gx, gy) = pi.grad()?;
        vector_sup_norm(&gx.compose_linear(&a), &gy.compose_linear(&a))
    }

    /// Largest constraint residual over domain samples.
    pub fn residual_audit(&self, domain: &Domain, count: usize, seed: u64) -> Result<f64> {
        Ok(sample_domain(domain, count, seed)
            .par_iter()
            .map(|z| self.constraint_residual(*z))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max))
    }
}

/// `z ↦ H(z) = h^{−2} (det M(z))^{−1/((m−1)p+2)} M(z)`.
#[derive(Clone, Debug)]
pub struct MetricField {
    matrix: MatrixField,
    h: f64,
}

pub fn riemannian_metric(matrix: MatrixField, h: f64) -> Result<MetricField> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidArgument(format!("h must be positive, got {h}")));
    }
    Ok(MetricField { matrix, h })
}

/// The pointwise formula for `H` from `M`.
pub fn metric_from_matrix(m: &Spd2, cfg: SpaceConfig, h: f64) -> Result<Spd2> {
    let k = h.powi(-2) * m.det().powf(-1.0 / cfg.det_denominator());
    m.scaled(k)
}

impl MetricField {
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn matrix(&self) -> &MatrixField {
        &self.matrix
    }

    pub fn with_h(&self, h: f64) -> Result<MetricField> {
        riemannian_metric(self.matrix.clone(), h)
    }

    pub fn eval(&self, z: Point) -> Result<Spd2> {
        metric_from_matrix(&self.matrix.eval(z)?, self.matrix.config(), self.h)
    }

    /// `metric2d v1` export on an `nx × ny` node grid of the bounding box.
    pub fn to_metric2d(&self, domain: &Domain, nx: usize, ny: usize) -> Result<String> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidArgument("metric grid needs at least 2 × 2 nodes".into()));
        }
        let b = domain.boundary();
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in b {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let mut s = format!("metric2d v1 {nx} {ny}\n");
        for j in 0..ny {
            for i in 0..nx {
                let z = [
                    lo[0] + (hi[0] - lo[0]) * i as f64 / (nx - 1) as f64,
                    lo[1] + (hi[1] - lo[1]) * j as f64 / (ny - 1) as f64,
                ];
                let h = self.eval(z)?;
                let _ = writeln!(s, "{:.16e} {:.16e} {:.16e} {:.16e} {:.16e}", z[0], z[1], h.a(), h.b(), h.c());
            }
        }
        Ok(s)
    }
}

/// Settings of the domain quadrature: centroid rule on `grid²` similar
/// sub-triangles per coarse triangle, checked against `check²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DomainQuadrature {
    pub grid: usize,
    pub check: usize,
    pub rel_tol: f64,
}

impl Default for DomainQuadrature {
    fn default() -> Self {
        DomainQuadrature { grid: 256, check: 128, rel_tol: 1e-4 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauNorm {
    pub value: f64,
    pub coarse: f64,
    pub rel_change: f64,
    pub converged: bool,
}

/// Centroids and areas of the `k²` similar sub-triangles of every coarse triangle.
pub fn centroid_rule(domain: &Domain, k: usize) -> Vec<(Point, f64)> {
    let coarse = domain.coarse();
    let mut out = Vec::with_capacity(coarse.len() * k * k);
    for e in &coarse.elements {
        let [a, b, c] = e.map(|i| coarse.vertices[i]);
        let area = 0.5 * crate::geom::orient(a, b, c) / (k * k) as f64;
        let at = |s: f64, t: f64| [a[0] + s * (b[0] - a[0]) + t * (c[0] - a[0]), a[1] + s * (b[1] - a[1]) + t * (c[1] - a[1])];
        let kf = k as f64;
        for j in 0..k {
            for i in 0..(k - j) {
                let (s, t) = (i as f64, j as f64);
                out.push((at((s + 1.0 / 3.0) / kf, (t + 1.0 / 3.0) / kf), area));
                if i + j + 1 < k {
                    out.push((at((s + 2.0 / 3.0) / kf, (t + 2.0 / 3.0) / kf), area));
                }
            }
        }
    }
    out
}

/// Memoizes a shape evaluator by the bit pattern of `π`.
pub struct CachedShape<'a> {
    eval: &'a (dyn Fn(&HomPoly) -> Result<f64> + Sync),
    cache: Mutex<HashMap<Vec<u64>, f64>>,
}

impl<'a> CachedShape<'a> {
    pub fn new(eval: &'a (dyn Fn(&HomPoly) -> Result<f64> + Sync)) -> Self {
        CachedShape { eval, cache: Mutex::new(HashMap::new()) }
    }

    pub fn get(&self, pi: &HomPoly) -> Result<f64> {
        let key: Vec<u64> = pi.coeffs().iter().map(|c| c.to_bits()).collect();
        if let Some(v) = self.cache.lock().unwrap().get(&key) {
            return Ok(*v);
        }
        let v = (self.eval)(pi)?;
        self.cache.lock().unwrap().insert(key, v);
        Ok(v)
    }
}

fn integrate_rule(rule: &[(Point, f64)], g: &(dyn Fn(Point) -> Result<f64> + Sync)) -> Result<f64> {
    let vals: Vec<f64> = rule.par_iter().map(|(z, w)| g(*z).map(|v| v * w)).collect::<Result<_>>()?;
    Ok(vals.iter().sum())
}

/// `(∫_Ω fn(π_z)^τ dz)^{1/τ}` for a shape evaluator `fn`.
pub fn tau_norm(
    f: &dyn SmoothFunction,
    cfg: SpaceConfig,
    domain: &Domain,
    shape: &(dyn Fn(&HomPoly) -> Result<f64> + Sync),
) -> Result<TauNorm> {
    tau_norm_with(f, cfg, domain, shape, DomainQuadrature::default())
}

pub fn tau_norm_with(
    f: &dyn SmoothFunction,
    cfg: SpaceConfig,
    domain: &Domain,
    shape: &(dyn Fn(&HomPoly) -> Result<f64> + Sync),
    quad: DomainQuadrature,
) -> Result<TauNorm> {
    let cached = CachedShape::new(shape);
    let tau = cfg.tau();
    let g = |z: Point| -> Result<f64> { Ok(cached.get(&top_part(f, z, cfg.m())?)?.powf(tau)) };
    let value = integrate_rule(&centroid_rule(domain, quad.grid), &g)?.powf(1.0 / tau);
    let coarse = integrate_rule(&centroid_rule(domain, quad.check), &g)?.powf(1.0 / tau);
    let rel_change = if value > 0.0 { (value - coarse).abs() / value } else { (value - coarse).abs() };
    Ok(TauNorm { value, coarse, rel_change, converged: rel_change <= quad.rel_tol })
}

/// `∫_Ω (det M)^{(m−1)τ/4}`, the leading term of `|T_eq| · h² · #𝒯`.
pub fn density_integral(matrix: &MatrixField, domain: &Domain, grid: usize) -> Result<f64> {
    let cfg = matrix.config();
    let e = (cfg.m() as f64 - 1.0) * cfg.tau() / 4.0;
    integrate_rule(&centroid_rule(domain, grid), &|z| Ok(matrix.eval(z)?.det().powf(e)))
}

/// `h` such that the leading term `h^{−2} ∫(det M)^{(m−1)τ/4} / |T_eq|` equals `count`.
pub fn h_for_count(matrix: &MatrixField, domain: &Domain, count: f64, grid: usize) -> Result<f64> {
    if !(count.is_finite() && count > 0.0) {
        return Err(Error::InvalidArgument(format!("target element count must be positive, got {count}")));
    }
    let i = density_integral(matrix, domain, grid)?;
    Ok((i / (crate::geom::T_EQ_AREA * count)).sqrt())
}

/// Empirical `C_L^τ = ∫(det M)^{(m−1)τ/4} / ∫ L_m(π_z)^τ`.
pub fn c_l_audit(
    matrix: &MatrixField,
    domain: &Domain,
    shape: &(dyn Fn(&HomPoly) -> Result<f64> + Sync),
    grid: usize,
) -> Result<f64> {
    let cfg = matrix.config();
    let cached = CachedShape::new(shape);
    let num = density_integral(matrix, domain, grid)?;
    let den = integrate_rule(&centroid_rule(domain, grid), &|z| {
        Ok(cached.get(&matrix.top_part(z)?)?.powf(cfg.tau()))
    })?;
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::TestFunction;
    use crate::shape::l2_exact;
    use rand::Rng;

    fn cfg(m: usize, p: f64) -> SpaceConfig {
        SpaceConfig::new(m, p).unwrap()
    }

    #[test]
    fn tau_values() {
        assert!((cfg(2, 2.0).tau() - 1.0).abs() < 1e-15);
        assert!((cfg(3, 2.0).tau() - 2.0 / 3.0).abs() < 1e-15);
        assert!((cfg(2, 1.0).tau() - 2.0 / 3.0).abs() < 1e-15);
        for m in 2..6 {
            for p in [1.0, 1.5, 2.0, 7.0] {
                let t = cfg(m, p).tau();
                assert!(t > 0.0 && t < p);
            }
        }
        assert!(SpaceConfig::new(1, 2.0).is_err());
        assert!(SpaceConfig::new(2, 0.5).is_err());
        assert!(SpaceConfig::new(2, f64::INFINITY).is_err());
    }

    #[test]
    fn closed_form_fields() {
        let d = Domain::unit_square();
        let f2 = matrix_field(Arc::new(TestFunction::F2), cfg(2, 2.0), &d, MatrixSource::ClosedForm).unwrap();
        assert!((f2.delta() - 1e-6).abs() < 1e-18);
        let m = f2.eval([0.3, 0.7]).unwrap();
        assert!((m.a() - 1.0 - 1e-6).abs() < 1e-14 && m.b().abs() < 1e-14 && (m.c() - 1.0 - 1e-6).abs() < 1e-14);
        let f1 = matrix_field(Arc::new(TestFunction::F1), cfg(2, 2.0), &d, MatrixSource::ClosedForm).unwrap();
        let delta = 625e-6;
        assert!((f1.delta() - delta).abs() < 1e-12 * delta, "{}", f1.delta());
        let m = f1.eval([0.1, 0.2]).unwrap();
        assert!((m.a() - 1.0 - delta).abs() < 1e-12 && (m.c() - 625.0 - delta).abs() < 1e-12);
        let half = crate::poly::Poly2D::from_terms(2, &[(2, 0, 0.5)]).unwrap();
        let fx = MatrixField::with_delta(Arc::new(half), cfg(2, 2.0), 1e-6, MatrixSource::ClosedForm).unwrap();
        let m = fx.eval([0.0, 0.0]).unwrap();
        assert!((m.a() - 1.0 - 1e-6).abs() < 1e-14 && (m.c() - 1e-6).abs() < 1e-18);
        assert!(MatrixField::with_delta(Arc::new(TestFunction::F5), cfg(4, 2.0), 1e-6, MatrixSource::ClosedForm).is_err());
    }

    #[test]
    fn residual_within_unit_constraint() {
        let d = Domain::unit_square();
        for (f, m) in [(TestFunction::F1, 2), (TestFunction::F4, 2), (TestFunction::F3, 3), (TestFunction::F4, 3)] {
            let field = matrix_field(Arc::new(f), cfg(m, 2.0), &d, MatrixSource::ClosedForm).unwrap();
            let r = field.residual_audit(&d, 200, 1).unwrap();
            assert!(r <= 1.0 + 1e-6, "{f} m={m}: {r}");
        }
    }

    #[test]
    fn optimizer_source_matches_closed_form_shape() {
        let d = Domain::unit_square();
        let f = Arc::new(TestFunction::F1);
        let opt = MatrixField::with_delta(f.clone(), cfg(2, 2.0), 0.0, MatrixSource::Optimizer).unwrap();
        let exact = MatrixField::with_delta(f, cfg(2, 2.0), 0.0, MatrixSource::ClosedForm).unwrap();
        let a = opt.eval([0.5, 0.5]).unwrap().unit_det();
        let b = exact.eval([0.5, 0.5]).unwrap().unit_det();
        assert!(a.frobenius_distance(&b) / b.frobenius() < 1e-3);
        assert!(opt.residual_audit(&d, 5, 0).unwrap() <= 1.0 + 1e-6);
    }

    #[test]
    fn metric_examples() {
        let c = cfg(2, 2.0);
        let h = metric_from_matrix(&Spd2::identity(), c, 0.1).unwrap();
        assert!((h.a() - 100.0).abs() < 1e-11 && (h.c() - 100.0).abs() < 1e-11 && h.b() == 0.0);
        let h = metric_from_matrix(&Spd2::diag(1.0, 625.0).unwrap(), c, 1.0).unwrap();
        let k = 625f64.powf(-0.25);
        assert!((h.a() - k).abs() < 1e-14 && (h.c() - 625.0 * k).abs() < 1e-11);
        let m = Spd2::new(2.0, 0.3, 0.7).unwrap();
        let h1 = metric_from_matrix(&m, c, 0.2).unwrap();
        let h2 = metric_from_matrix(&m, c, 0.1).unwrap();
        assert!((h2.a() / h1.a() - 4.0).abs() < 1e-13);
    }

    #[test]
    fn det_power_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let m = Spd2::from_eigen(rng.gen_range(1e-3..1e3), rng.gen_range(1e-3..1e3), rng.gen_range(0.0..3.2)).unwrap();
            let c = cfg(rng.gen_range(2..6), rng.gen_range(1.0..6.0));
            let h = rng.gen_range(0.01..2.0);
            let got = metric_from_matrix(&m, c, h).unwrap().det();
            let want = h.powi(-4) * m.det().powf((c.m() as f64 - 1.0) * c.p() / c.det_denominator());
            assert!((got - want).abs() <= 1e-12 * want, "{got} vs {want}");
        }
    }

    #[test]
    fn centroid_rule_weights() {
        for d in [Domain::unit_square(), Domain::unit_triangle()] {
            let r = centroid_rule(&d, 7);
            assert_eq!(r.len(), d.coarse().len() * 49);
            let s: f64 = r.iter().map(|x| x.1).sum();
            assert!((s - d.area()).abs() < 1e-14);
            let mx: f64 = r.iter().map(|x| x.0[0] * x.1).sum();
            let want = if d.coarse().len() == 2 { 0.5 } else { 1.0 / 6.0 };
            assert!((mx - want).abs() < 1e-14);
        }
    }

    #[test]
    fn tau_norm_examples() {
        let d = Domain::unit_square();
        let q = DomainQuadrature { grid: 16, check: 8, rel_tol: 1e-4 };
        let exact = |pi: &HomPoly| l2_exact(pi);
        let t = tau_norm_with(&TestFunction::F1, cfg(2, 2.0), &d, &exact, q).unwrap();
        assert!((t.value - 5.0).abs() < 1e-12 && t.converged);
        let x3 = crate::poly::Poly2D::from_terms(3, &[(3, 0, 1.0)]).unwrap();
        let eq = |pi: &HomPoly| crate::shape::l3_equiv(pi);
        let t = tau_norm_with(&x3, cfg(3, 2.0), &d, &eq, q).unwrap();
        assert!(t.value.abs() < 1e-12);
        let half = Domain::polygon(vec![[0.0, 0.0], [0.5, 0.0], [0.5, 1.0], [0.0, 1.0]]).unwrap();
        let eqs = |pi: &HomPoly| crate::shape::l_equiv(pi);
        let a = tau_norm_with(&TestFunction::F4, cfg(2, 2.0), &half, &eqs, q).unwrap();
        let b = tau_norm_with(&TestFunction::F4, cfg(2, 2.0), &d, &eqs, q).unwrap();
        assert!(a.value < b.value);
    }

    #[test]
    fn count_helper_inverts_leading_term() {
        let d = Domain::unit_square();
        let f = matrix_field(Arc::new(TestFunction::F1), cfg(2, 2.0), &d, MatrixSource::ClosedForm).unwrap();
        let h = h_for_count(&f, &d, 1000.0, 8).unwrap();
        let dens = density_integral(&f, &d, 8).unwrap();
        assert!((dens / (h * h * crate::geom::T_EQ_AREA) - 1000.0).abs() < 1e-9);
        // det M = 625 (up to δ) and (m−1)τ/4 = 1/4.
        assert!((dens - 5.0).abs() < 1e-3);
    }

    #[test]
    fn metric2d_export() {
        let d = Domain::unit_square();
        let f = matrix_field(Arc::new(TestFunction::F2), cfg(2, 2.0), &d, MatrixSource::ClosedForm).unwrap();
        let h = riemannian_metric(f, 0.5).unwrap();
        let s = h.to_metric2d(&d, 3, 2).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "metric2d v1 3 2");
        assert_eq!(lines.len(), 7);
        let last: Vec<f64> = lines[6].split(' ').map(|x| x.parse().unwrap()).collect();
        assert_eq!(&last[..2], &[1.0, 1.0]);
        assert!((last[2] - 4.0).abs() < 1e-5);
    }
}
