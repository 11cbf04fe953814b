//! Global interpolation errors, convergence studies and audits of the
//! per-element estimates and of the metric-based error chain.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::function::{SmoothFunction, TestFunction};
use crate::geom::{norm, scale, Point, Triangle, T_EQ_AREA};
use crate::interp::grad_error_lp;
use crate::meshgen::{
    adapted_mesh, shape_spec_from_function_with, shape_spec_from_metric, uniform_refine, Domain, ShapeSpec, Tag,
    Triangulation,
};
use crate::metric::{
    centroid_rule, riemannian_metric, tau_norm_with, CachedShape, DomainQuadrature, MatrixField, MatrixSource,
    SpaceConfig, TauNorm,
};
use crate::poly::{top_part, vector_sup_norm, HomPoly};
use crate::shape::{l2_exact, l_equiv, l_m, l_m_with, l_mp_oracle_with, MetricSearch, TriangleSearch};

/// `‖∇(f − I_𝒯 f)‖_{L^p(Ω)}` with the per-element contributions.
#[derive(Clone, Debug, PartialEq)]
pub struct GlobalError {
    pub value: f64,
    pub element_errors: Vec<f64>,
    pub converged: bool,
}

pub fn global_error(f: &dyn SmoothFunction, mesh: &Triangulation, cfg: SpaceConfig) -> Result<GlobalError> {
    let per: Vec<_> = (0..mesh.len())
        .into_par_iter()
        .map(|i| grad_error_lp(f, &mesh.triangle(i)?, cfg.m(), cfg.p()))
        .collect::<Result<_>>()?;
    let p = cfg.p();
    let value = per.iter().map(|e| e.value.powf(p)).sum::<f64>().powf(1.0 / p);
    Ok(GlobalError {
        value,
        converged: per.iter().all(|e| e.converged),
        element_errors: per.into_iter().map(|e| e.value).collect(),
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || x.len() != y.len() || x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Strategy {
    /// Patch meshes `P_n` from the restricted optimal shapes; levels are `n`.
    Adapted { m_cap: f64 },
    /// Uniform refinements of the coarse mesh; levels are the factor `k`.
    Uniform,
    /// Patch meshes with `T_y = H(y)^{−1/2} T_eq`; levels are `n = 1/h`.
    MetricH { source: MatrixSource },
}

/// Shape evaluator used for the reference bound `B`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundSource {
    /// `L_m` by metric search.
    Optimizer,
    /// Closed-form equivalents (`m ≤ 4`).
    Equivalent,
    /// `L_2 = 2√|det[π]|` (`m = 2`).
    Exact,
    /// Triangle search for `L_{m,p}`.
    Oracle,
}

#[derive(Clone, Debug)]
pub struct StudyConfig {
    pub space: SpaceConfig,
    pub function: TestFunction,
    pub domain: Domain,
    pub levels: Vec<usize>,
    pub strategy: Strategy,
    pub track_admissibility: bool,
    pub bound: BoundSource,
    pub bound_quadrature: DomainQuadrature,
    /// Grid phase seed of the shape optimizers; 0 keeps the unshifted grids.
    pub seed: u64,
}

impl StudyConfig {
    pub fn new(space: SpaceConfig, function: TestFunction, domain: Domain, levels: Vec<usize>, strategy: Strategy) -> Self {
        StudyConfig {
            space,
            function,
            domain,
            levels,
            strategy,
            track_admissibility: true,
            bound: BoundSource::Optimizer,
            bound_quadrature: DomainQuadrature::default(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::InvalidArgument("level list is empty".into()));
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("levels must be strictly increasing".into()));
        }
        let min = match self.strategy {
            Strategy::Uniform => 1,
            _ => 2,
        };
        if self.levels[0] < min {
            return Err(Error::InvalidArgument(format!("levels must be ≥ {min} for this strategy")));
        }
        if let Strategy::Adapted { m_cap } = self.strategy {
            if !(m_cap.is_finite() && m_cap >= 1.0) {
                return Err(Error::InvalidArgument(format!("M_cap must be ≥ 1, got {m_cap}")));
            }
        }
        if self.bound == BoundSource::Exact && self.space.m() != 2 {
            return Err(Error::UnsupportedOrder(self.space.m()));
        }
        Ok(())
    }

    fn echo(&self) -> serde_json::Value {
        serde_json::json!({
            "m": self.space.m(),
            "p": self.space.p(),
            "tau": self.space.tau(),
            "function": self.function,
            "domain": self.domain.boundary(),
            "levels": self.levels,
            "strategy": self.strategy,
            "track_admissibility": self.track_admissibility,
            "bound": self.bound,
            "bound_grid": self.bound_quadrature.grid,
            "seed": self.seed,
        })
    }
}

/// Shape evaluator `π ↦ value` for a bound source.
pub fn bound_evaluator(source: BoundSource, p: f64, seed: u64) -> impl Fn(&HomPoly) -> Result<f64> + Sync {
    let metric = MetricSearch { seed, ..Default::default() };
    let triangle = TriangleSearch { seed, ..Default::default() };
    move |pi: &HomPoly| match source {
        BoundSource::Optimizer => l_m_with(pi, &metric).map(|v| v.value),
        BoundSource::Equivalent => l_equiv(pi),
        BoundSource::Exact => l2_exact(pi),
        BoundSource::Oracle => l_mp_oracle_with(pi, p, &triangle).map(|v| v.value),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelRow {
    pub level: usize,
    pub n_elements: usize,
    pub error: f64,
    pub scaled: f64,
    pub bound: f64,
    pub ratio: f64,
    pub max_diam_sqrt_n: f64,
    pub max_sliverness: f64,
    pub quadrature_converged: bool,
    pub status: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct StudyReport {
    pub config: serde_json::Value,
    pub bound: f64,
    pub bound_quadrature: TauNorm,
    pub rows: Vec<LevelRow>,
    /// Fitted slope of `ln E_N` against `ln N` over the last 3 successful levels.
    pub slope: Option<f64>,
}

fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

struct Sig17;

impl serde_json::ser::Formatter for Sig17 {
    fn write_f64<W: ?Sized + std::io::Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + std::io::Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Compact JSON with every float at 17 significant digits; non-finite floats become `null`.
pub fn to_json17<T: Serialize + ?Sized>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Sig17);
    value.serialize(&mut ser).expect("in-memory serialization");
    String::from_utf8(out).expect("JSON is UTF-8")
}

impl StudyReport {
    pub fn successful(&self) -> impl Iterator<Item = &LevelRow> {
        self.rows.iter().filter(|r| r.status.is_none())
    }

    pub fn to_csv(&self) -> String {
        let failed = self.rows.iter().any(|r| r.status.is_some());
        let mut s = String::from("N,error,scaled,bound,ratio,max_diam_sqrtN,max_sliverness");
        if failed {
            s.push_str(",status");
        }
        s.push('\n');
        for r in &self.rows {
            let cells = if r.status.is_none() {
                vec![
                    r.n_elements.to_string(),
                    fmt_num(r.error),
                    fmt_num(r.scaled),
                    fmt_num(r.bound),
                    fmt_num(r.ratio),
                    fmt_num(r.max_diam_sqrt_n),
                    fmt_num(r.max_sliverness),
                ]
            } else {
                vec![String::new(); 7]
            };
            s.push_str(&cells.join(","));
            if failed {
                let status = r.status.as_deref().unwrap_or("ok").replace([',', '\n'], ";");
                s.push(',');
                s.push_str(&status);
            }
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> String {
        to_json17(self)
    }
}

/// Builds the mesh of one study level.
pub struct MeshFactory {
    domain: Domain,
    strategy: Strategy,
    spec: Option<ShapeSpec>,
}

impl MeshFactory {
    pub fn new(cfg: &StudyConfig) -> Result<Self> {
        let f: Arc<dyn SmoothFunction> = Arc::new(cfg.function);
        let spec = match cfg.strategy {
            Strategy::Adapted { m_cap } => Some(shape_spec_from_function_with(
                f,
                cfg.space,
                m_cap,
                TriangleSearch { seed: cfg.seed, ..Default::default() },
            )),
            Strategy::Uniform => None,
            Strategy::MetricH { source } => {
                let field = crate::metric::matrix_field(f, cfg.space, &cfg.domain, source)?;
                Some(shape_spec_from_metric(riemannian_metric(field, 1.0)?))
            }
        };
        Ok(MeshFactory { domain: cfg.domain.clone(), strategy: cfg.strategy, spec })
    }

    pub fn mesh(&self, level: usize) -> Result<Triangulation> {
        match (&self.strategy, &self.spec) {
            (Strategy::Uniform, _) => uniform_refine(self.domain.coarse(), level),
            (_, Some(spec)) => adapted_mesh(&self.domain, spec, level),
            (_, None) => Err(Error::InvalidArgument("missing shape specification".into())),
        }
    }
}

fn study_row(cfg: &StudyConfig, factory: &MeshFactory, level: usize, bound: f64) -> Result<LevelRow> {
    let mesh = factory.mesh(level)?;
    let n = mesh.len();
    let err = global_error(&cfg.function, &mesh, cfg.space)?;
    let scaled = (n as f64).powf((cfg.space.m() as f64 - 1.0) / 2.0) * err.value;
    let max_diam_sqrt_n = if cfg.track_admissibility { mesh.max_diameter() * (n as f64).sqrt() } else { f64::NAN };
    Ok(LevelRow {
        level,
        n_elements: n,
        error: err.value,
        scaled,
        bound,
        ratio: scaled / bound,
        max_diam_sqrt_n,
        max_sliverness: mesh.max_sliverness(),
        quadrature_converged: err.converged,
        status: None,
    })
}

/// Runs every level; failures are recorded per level and the study continues.
pub fn convergence_study(cfg: &StudyConfig) -> Result<StudyReport> {
    cfg.validate()?;
    let eval = bound_evaluator(cfg.bound, cfg.space.p(), cfg.seed);
    let tn = tau_norm_with(&cfg.function, cfg.space, &cfg.domain, &eval, cfg.bound_quadrature)?;
    let factory = MeshFactory::new(cfg)?;
    let rows: Vec<LevelRow> = cfg
        .levels
        .iter()
        .map(|&level| {
            study_row(cfg, &factory, level, tn.value).unwrap_or_else(|e| LevelRow {
                level,
                n_elements: 0,
                error: f64::NAN,
                scaled: f64::NAN,
                bound: tn.value,
                ratio: f64::NAN,
                max_diam_sqrt_n: f64::NAN,
                max_sliverness: f64::NAN,
                quadrature_converged: false,
                status: Some(e.to_string()),
            })
        })
        .collect();
    let ok: Vec<&LevelRow> = rows.iter().filter(|r| r.status.is_none()).collect();
    let tail = &ok[ok.len().saturating_sub(3)..];
    let slope = loglog_slope(
        &tail.iter().map(|r| r.n_elements as f64).collect::<Vec<_>>(),
        &tail.iter().map(|r| r.error).collect::<Vec<_>>(),
    );
    Ok(StudyReport { config: cfg.echo(), bound: tn.value, bound_quadrature: tn, rows, slope })
}

/// Estimate of `ω(r)` near `z`: the largest `‖∇π_z − ∇π_{z'}‖` over
/// `z'` at distance `r` in 8 directions from `z`.
pub fn omega_estimate(f: &dyn SmoothFunction, m: usize, z: Point, r: f64) -> Result<f64> {
    let (gx, gy) = top_part(f, z, m)?.grad()?;
    let mut best: f64 = 0.0;
    for k in 0..8 {
        let th = k as f64 * std::f64::consts::FRAC_PI_4;
        let w = [z[0] + r * th.cos(), z[1] + r * th.sin()];
        let (hx, hy) = top_part(f, w, m)?.grad()?;
        best = best.max(vector_sup_norm(&gx.add(&hx.scaled(-1.0))?, &gy.add(&hy.scaled(-1.0))?)?);
    }
    Ok(best)
}

/// Per-element sides of the two single-element estimates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaAudit {
    /// `|e_f − e_{π_z}|` with `z` the barycenter.
    pub diff_lhs: Vec<f64>,
    /// `ω(diam T) |T|^{1/τ} ρ(T)^{(m+1)/2}`.
    pub diff_rhs: Vec<f64>,
    /// `e_f = ‖∇(f − I_T f)‖_{L^p(T)}`.
    pub bound_lhs: Vec<f64>,
    /// `|T|^{1/p} diam(T)^{m−1} S(T)`.
    pub bound_rhs: Vec<f64>,
    /// Floating-point floor of the left sides, `64 ε max|f| |T|^{1/p} / diam T`.
    pub noise: Vec<f64>,
    /// Smallest constants making both estimates hold on this mesh.
    pub c_diff: f64,
    pub c_bound: f64,
    pub violations_diff: usize,
    pub violations_bound: usize,
}

/// Tolerance on the left sides: quadrature noise relative to `e`, or the
/// floating-point floor `noise` of the element, whichever is larger.
fn lemma_tol(e: f64, noise: f64) -> f64 {
    (1e-7 * e).max(noise) + 1e-300
}

impl LemmaAudit {
    /// Violation counts for given constants.
    pub fn violations(&self, c_diff: f64, c_bound: f64) -> (usize, usize) {
        let vd = self
            .diff_lhs
            .iter()
            .zip(&self.diff_rhs)
            .zip(self.bound_lhs.iter().zip(&self.noise))
            .filter(|((l, r), (e, z))| **l > c_diff * **r + lemma_tol(**e, **z))
            .count();
        let vb = self
            .bound_lhs
            .iter()
            .zip(&self.bound_rhs)
            .zip(&self.noise)
            .filter(|((l, r), z)| **l > c_bound * **r + lemma_tol(**l, **z))
            .count();
        (vd, vb)
    }
}

pub fn lemma_diff_audit(f: &dyn SmoothFunction, mesh: &Triangulation, cfg: SpaceConfig) -> Result<LemmaAudit> {
    let (m, p, tau) = (cfg.m(), cfg.p(), cfg.tau());
    let rows: Vec<[f64; 5]> = (0..mesh.len())
        .into_par_iter()
        .map(|i| -> Result<[f64; 5]> {
            let t = mesh.triangle(i)?;
            let z = t.barycenter();
            let ef = grad_error_lp(f, &t, m, p)?.value;
            let pi = top_part(f, z, m)?;
            let local = t.translated(scale(z, -1.0));
            let epi = grad_error_lp(&pi, &local, m, p)?.value;
            let d = t.diameter();
            let omega = omega_estimate(f, m, z, d)?;
            let diff_rhs = omega * t.area().powf(1.0 / tau) * t.degeneracy().powf((m as f64 + 1.0) / 2.0);
            let bound_rhs = t.area().powf(1.0 / p) * d.powi(m as i32 - 1) * t.sliverness();
            let scale_f = t.vertices().iter().map(|&v| f.value(v).abs()).fold(0.0, f64::max);
            let noise = 64.0 * f64::EPSILON * scale_f * t.area().powf(1.0 / p) / d;
            Ok([(ef - epi).abs(), diff_rhs, ef, bound_rhs, noise])
        })
        .collect::<Result<_>>()?;
    let fit = |l: usize, r: usize| {
        rows.iter().filter(|x| x[r] > 0.0).map(|x| (x[l] - lemma_tol(x[2], x[4])).max(0.0) / x[r]).fold(0.0, f64::max)
    };
    let mut audit = LemmaAudit {
        diff_lhs: rows.iter().map(|x| x[0]).collect(),
        diff_rhs: rows.iter().map(|x| x[1]).collect(),
        bound_lhs: rows.iter().map(|x| x[2]).collect(),
        bound_rhs: rows.iter().map(|x| x[3]).collect(),
        noise: rows.iter().map(|x| x[4]).collect(),
        c_diff: fit(0, 1),
        c_bound: fit(2, 3),
        violations_diff: 0,
        violations_bound: 0,
    };
    let (vd, vb) = audit.violations(audit.c_diff, audit.c_bound);
    audit.violations_diff = vd;
    audit.violations_bound = vb;
    Ok(audit)
}

/// One `h` of the error-chain audit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainLevel {
    pub h: f64,
    pub n: usize,
    pub elements: usize,
    /// `max_T ‖∇(π_z − I_T π_z)‖_{L^p(T)}`, `z` the barycenter.
    pub max_error_pi: f64,
    /// `max_T ‖∇(f − I_T f)‖_{L^p(T)}`.
    pub max_error_f: f64,
    /// `C_1 = max_error_pi / h^{2/τ}`.
    pub c1: f64,
    /// Metric conformity over all elements, `C_0² = max(λ_max, 1/λ_min)` of `H_T` relative to `H(z)`.
    pub c0: f64,
    /// Same over interior elements.
    pub c0_interior: f64,
    /// max/min of `h^{−2/τ}`-normalized `π_z` errors over interior elements.
    pub equidistribution: f64,
    /// `N^{(m−1)/2} ‖∇(f − I f)‖_{L^p(Ω)}`.
    pub scaled_error: f64,
    /// `N^{1/τ} max_T ‖∇(f − I_T f)‖_{L^p(T)}`.
    pub chain_value: f64,
    /// `(C_1+1)(C_0³/|T_eq|)^{1/τ} C_L ‖L_m‖_{L^τ}`.
    pub c2_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainAudit {
    pub levels: Vec<ChainLevel>,
    /// Empirical `C_L` (not its `τ`-th power).
    pub c_l: f64,
    pub lm_tau_norm: f64,
    /// Slope of `ln max_error_pi` against `ln h`.
    pub slope_pi: Option<f64>,
    pub slope_f: Option<f64>,
}

fn conformity_constant(t: &Triangle, metric: &crate::metric::MetricField) -> Result<f64> {
    let ht = t.h_matrix();
    let mut worst: f64 = 1.0;
    let v = t.vertices();
    for z in [t.barycenter(), v[0], v[1], v[2]] {
        let [hi, lo] = metric.eval(z)?.relative_eigenvalues(&ht);
        worst = worst.max(hi).max(1.0 / lo);
    }
    Ok(worst.sqrt())
}

/// `‖L_m(π_z)‖_{L^τ}` and the empirical `C_L` on one centroid rule, with a
/// single metric search per sample.
fn lm_integrals(matrix: &MatrixField, domain: &Domain, grid: usize) -> Result<(f64, f64)> {
    let cfg = matrix.config();
    let (tau, e) = (cfg.tau(), (cfg.m() as f64 - 1.0) * cfg.tau() / 4.0);
    let lm = |pi: &HomPoly| l_m(pi).map(|v| v.value);
    let cached = CachedShape::new(&lm);
    let parts: Vec<(f64, f64)> = centroid_rule(domain, grid)
        .par_iter()
        .map(|(z, w)| -> Result<(f64, f64)> {
            let l = cached.get(&matrix.top_part(*z)?)?;
            Ok((w * l.powf(tau), w * matrix.eval(*z)?.det().powf(e)))
        })
        .collect::<Result<_>>()?;
    let (li, di) = parts.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok((li.powf(1.0 / tau), (di / li).powf(1.0 / tau)))
}

/// Meshes adapted to `H_h` for each `h` (patch meshes with `n = round(1/h)`)
/// and the constants of the error chain.
pub fn error_chain_audit(
    f: Arc<dyn SmoothFunction>,
    cfg: SpaceConfig,
    domain: &Domain,
    matrix: MatrixField,
    hs: &[f64],
    grid: usize,
) -> Result<ChainAudit> {
    let (m, p, tau) = (cfg.m(), cfg.p(), cfg.tau());
    let (lm_tau, c_l) = lm_integrals(&matrix, domain, grid)?;
    let spec = shape_spec_from_metric(riemannian_metric(matrix.clone(), 1.0)?);
    let mut levels = Vec::with_capacity(hs.len());
    for &h in hs {
        if !(h > 0.0 && h < 1.0) {
            return Err(Error::InvalidArgument(format!("h must lie in (0, 1), got {h}")));
        }
        let n = (1.0 / h).round() as usize;
        let h_eff = 1.0 / n as f64;
        let mesh = adapted_mesh(domain, &spec, n)?;
        let metric = riemannian_metric(matrix.clone(), h_eff)?;
        let rows: Vec<(f64, f64, f64, bool)> = (0..mesh.len())
            .into_par_iter()
            .map(|i| -> Result<(f64, f64, f64, bool)> {
                let t = mesh.triangle(i)?;
                let z = t.barycenter();
                let pi = top_part(f.as_ref(), z, m)?;
                let epi = grad_error_lp(&pi, &t.translated(scale(z, -1.0)), m, p)?.value;
                let ef = grad_error_lp(f.as_ref(), &t, m, p)?.value;
                let c0 = conformity_constant(&t, &metric)?;
                Ok((epi, ef, c0, mesh.tag(i) == Some(Tag::Interior)))
            })
            .collect::<Result<_>>()?;
        let norm_h = h_eff.powf(2.0 / tau);
        let max_pi = rows.iter().map(|r| r.0).fold(0.0, f64::max);
        let max_f = rows.iter().map(|r| r.1).fold(0.0, f64::max);
        let c0 = rows.iter().map(|r| r.2).fold(1.0, f64::max);
        let c0_interior = rows.iter().filter(|r| r.3).map(|r| r.2).fold(1.0, f64::max);
        let (lo, hi) = rows
            .iter()
            .filter(|r| r.3)
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r.0 / norm_h), hi.max(r.0 / norm_h)));
        let total = rows.iter().map(|r| r.1.powf(p)).sum::<f64>().powf(1.0 / p);
        let nn = mesh.len() as f64;
        let c1 = max_pi / norm_h;
        levels.push(ChainLevel {
            h: h_eff,
            n,
            elements: mesh.len(),
            max_error_pi: max_pi,
            max_error_f: max_f,
            c1,
            c0,
            c0_interior,
            equidistribution: if lo > 0.0 { hi / lo } else { f64::INFINITY },
            scaled_error: nn.powf((m as f64 - 1.0) / 2.0) * total,
            chain_value: nn.powf(1.0 / tau) * max_f,
            c2_bound: (c1 + 1.0) * (c0.powi(3) / T_EQ_AREA).powf(1.0 / tau) * c_l * lm_tau,
        });
    }
    let h: Vec<f64> = levels.iter().map(|l| l.h).collect();
    let slope_pi = loglog_slope(&h, &levels.iter().map(|l| l.max_error_pi).collect::<Vec<_>>());
    let slope_f = loglog_slope(&h, &levels.iter().map(|l| l.max_error_f).collect::<Vec<_>>());
    Ok(ChainAudit { levels, c_l, lm_tau_norm: lm_tau, slope_pi, slope_f })
}

/// Largest `|∇f|` over the vertices of a mesh, a scale for tolerances.
pub fn gradient_scale(f: &dyn SmoothFunction, mesh: &Triangulation) -> f64 {
    mesh.vertices.iter().map(|v| norm(f.gradient(*v))).fold(0.0, f64::max)
}
