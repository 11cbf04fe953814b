//! `anisomesh` command-line front end.

mod render;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anisomesh::analysis::{
    convergence_study, error_chain_audit, global_error, lemma_diff_audit, to_json17, BoundSource, MeshFactory,
    StudyConfig, Strategy,
};
use anisomesh::error::{Error, Result};
use anisomesh::function::{SmoothFunction, TestFunction};
use anisomesh::geom::Triangle;
use anisomesh::meshgen::{conformity_check, patch_tile_with_stats, ConformityReport, Domain, Tag, Triangulation};
use anisomesh::metric::{matrix_field, riemannian_metric, MatrixSource, SpaceConfig, AUDIT_SAMPLES};
use anisomesh::poly::HomPoly;
use anisomesh::shape::{
    l2_exact, l_equiv, l_m_restricted_with, l_m_with, l_mp_oracle_with, MetricSearch, ShapeValue, TriangleSearch,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "anisomesh", version, about = "Anisotropic mesh adaptation for Lagrange elements in W^{1,p}")]
struct Cli {
    /// Phase seed of the optimizer grids.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a shape function of a homogeneous polynomial.
    Shape(ShapeArgs),
    /// Generate a mesh and write it in mesh2d format.
    Mesh(MeshArgs),
    /// Run a convergence study and write CSV.
    Converge(ConvergeArgs),
    /// Numerical audits of single-element estimates, the error chain, patches and metric constraints.
    Audit {
        #[command(subcommand)]
        kind: AuditKind,
    },
    /// Render a mesh2d file as SVG.
    Render(RenderArgs),
}

#[derive(Args)]
#[group(id = "mode", required = true, multiple = false)]
struct ShapeMode {
    /// Closed form `2√|det|` (m = 2).
    #[arg(long)]
    exact: bool,
    /// Closed-form equivalent (m ≤ 4).
    #[arg(long)]
    equiv: bool,
    /// Metric search for `L_m`.
    #[arg(long)]
    optimize: bool,
    /// Triangle search for `L_{m,p}`.
    #[arg(long)]
    oracle: bool,
    /// All available evaluators and their ratios.
    #[arg(long)]
    compare: bool,
}

#[derive(Args)]
struct ShapeArgs {
    #[arg(long)]
    m: usize,
    /// Comma-separated coefficients; entry i multiplies x^i y^(m-i).
    #[arg(long, allow_hyphen_values = true)]
    coeffs: String,
    #[command(flatten)]
    mode: ShapeMode,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Anisotropy cap of the restricted search, reported with `--compare`.
    #[arg(long, default_value_t = 100.0)]
    m_cap: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum MeshStrategy {
    Adapted,
    Uniform,
    Metric,
}

#[derive(Clone, Copy, ValueEnum)]
enum Source {
    ClosedForm,
    Optimizer,
}

impl From<Source> for MatrixSource {
    fn from(s: Source) -> Self {
        match s {
            Source::ClosedForm => MatrixSource::ClosedForm,
            Source::Optimizer => MatrixSource::Optimizer,
        }
    }
}

#[derive(Args, Clone)]
struct Problem {
    /// `square`, `triangle` or a polygon file.
    #[arg(long, default_value = "square")]
    domain: String,
    #[arg(long, default_value = "f1")]
    function: String,
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
}

#[derive(Args)]
struct MeshArgs {
    #[command(flatten)]
    problem: Problem,
    /// Patch parameter (adapted, metric with h = 1/n) or refinement factor (uniform).
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value = "adapted")]
    strategy: MeshStrategy,
    #[arg(long, default_value_t = 100.0)]
    m_cap: f64,
    #[arg(long, value_enum, default_value = "closed-form")]
    source: Source,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Sampled metric `H_h` with `h = 1/n`.
    #[arg(long)]
    metric_out: Option<PathBuf>,
    #[arg(long, default_value_t = 32)]
    metric_grid: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Bound {
    Optimizer,
    Equivalent,
    Exact,
    Oracle,
}

#[derive(Args)]
struct ConvergeArgs {
    #[command(flatten)]
    problem: Problem,
    /// Comma-separated increasing levels.
    #[arg(long, default_value = "")]
    levels: String,
    #[arg(long, value_enum, default_value = "adapted")]
    strategy: MeshStrategy,
    #[arg(long, default_value_t = 100.0)]
    m_cap: f64,
    #[arg(long, value_enum, default_value = "closed-form")]
    source: Source,
    #[arg(long, value_enum, default_value = "optimizer")]
    bound: Bound,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Full report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Subcommand)]
enum AuditKind {
    /// Per-element constants of the single-element estimates on an adapted mesh.
    Lemma {
        #[command(flatten)]
        problem: Problem,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 100.0)]
        m_cap: f64,
    },
    /// Constants of the error chain on metric-adapted meshes.
    Chain {
        #[command(flatten)]
        problem: Problem,
        /// Comma-separated values of h.
        #[arg(long, default_value = "0.2,0.1,0.05")]
        hs: String,
        #[arg(long, default_value_t = 16)]
        grid: usize,
        #[arg(long, value_enum, default_value = "closed-form")]
        source: Source,
    },
    /// Patch construction of `T` in `R` with conformity and counts.
    Patch {
        /// Six comma-separated coordinates of R.
        #[arg(long, default_value = "0,0,1,0,0,1", allow_hyphen_values = true)]
        r: String,
        /// Six comma-separated coordinates of T.
        #[arg(long, allow_hyphen_values = true)]
        t: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Largest metric constraint residual over domain samples.
    Residual {
        #[command(flatten)]
        problem: Problem,
        #[arg(long, value_enum, default_value = "closed-form")]
        source: Source,
        #[arg(long, default_value_t = AUDIT_SAMPLES)]
        samples: usize,
    },
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Coloring {
    None,
    Sliverness,
    Degeneracy,
    Error,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long, value_enum, default_value = "none")]
    color: Coloring,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    function: Option<String>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidArgument(_)
            | Error::Parse { .. }
            | Error::UnsupportedOrder(_)
            | Error::DegreeMismatch(..)
            | Error::Io(_) => 2,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: 2, message: msg.into() }
}

type Outcome = std::result::Result<(), Failure>;

/// Six significant digits.
fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let e = x.abs().log10().floor() as i32;
    if (-4..6).contains(&e) {
        format!("{x:.*}", (5 - e) as usize)
    } else {
        format!("{x:.5e}")
    }
}

fn emit(value: &Value) {
    println!("{}", to_json17(value));
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(Error::from)
}

fn space(problem: &Problem) -> Result<SpaceConfig> {
    SpaceConfig::new(problem.m, problem.p)
}

fn domain(name: &str) -> Result<Domain> {
    match name {
        "square" => Ok(Domain::unit_square()),
        "triangle" => Ok(Domain::unit_triangle()),
        path => Domain::read_file(Path::new(path)),
    }
}

fn function(name: &str) -> Result<TestFunction> {
    name.parse()
}

fn list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    if s.trim().is_empty() {
        return Err(Error::InvalidArgument(format!("{what} list is empty")));
    }
    s.split(',')
        .map(|t| t.trim().parse::<T>().map_err(|e| Error::InvalidArgument(format!("bad {what} '{t}': {e}"))))
        .collect()
}

fn triangle(s: &str) -> Result<Triangle> {
    let c: Vec<f64> = list(s, "coordinate")?;
    if c.len() != 6 {
        return Err(Error::InvalidArgument(format!("a triangle needs 6 coordinates, got {}", c.len())));
    }
    Triangle::new([c[0], c[1]], [c[2], c[3]], [c[4], c[5]])
}

fn strategy(s: MeshStrategy, m_cap: f64, source: Source) -> Strategy {
    match s {
        MeshStrategy::Adapted => Strategy::Adapted { m_cap },
        MeshStrategy::Uniform => Strategy::Uniform,
        MeshStrategy::Metric => Strategy::MetricH { source: source.into() },
    }
}

fn conformity_json(r: &ConformityReport) -> Value {
    json!({
        "passed": r.passed(),
        "hanging_nodes": r.hanging_nodes.len(),
        "overlapping_edges": r.overlapping_edges.len(),
        "orientation_faults": r.orientation_faults.len(),
        "open_edges": r.open_edges.len(),
        "coverage_deficit": r.coverage_deficit,
    })
}

fn mesh_summary(mesh: &Triangulation, report: &ConformityReport) -> Value {
    let tags = mesh.tags.as_ref().map(|_| {
        json!({
            "interior": mesh.count_tag(Tag::Interior),
            "layer": mesh.count_tag(Tag::Layer),
            "boundary": mesh.count_tag(Tag::Boundary),
        })
    });
    json!({
        "N": mesh.len(),
        "vertices": mesh.vertices.len(),
        "max_degeneracy": mesh.max_degeneracy(),
        "max_sliverness": mesh.max_sliverness(),
        "max_diameter": mesh.max_diameter(),
        "tags": tags,
        "conformity": conformity_json(report),
    })
}

fn shape_json(v: &ShapeValue) -> Value {
    serde_json::to_value(v).expect("shape values serialize")
}

fn cmd_shape(a: &ShapeArgs, seed: u64) -> Outcome {
    let pi = HomPoly::parse(&a.coeffs)?;
    if pi.degree() != a.m {
        return Err(Error::DegreeMismatch(pi.degree(), a.m).into());
    }
    let metric = MetricSearch { seed, ..Default::default() };
    let tri = TriangleSearch { seed, ..Default::default() };
    let scalar = |value: f64| json!({"value": value, "argmin": null, "attained": true, "cap_hit": false});
    let out = if a.mode.exact {
        scalar(l2_exact(&pi)?)
    } else if a.mode.equiv {
        scalar(l_equiv(&pi)?)
    } else if a.mode.optimize {
        shape_json(&l_m_with(&pi, &metric)?)
    } else if a.mode.oracle {
        shape_json(&l_mp_oracle_with(&pi, a.p, &tri)?)
    } else {
        let optimizer = l_m_with(&pi, &metric)?;
        let oracle = l_mp_oracle_with(&pi, a.p, &tri)?;
        let restricted = l_m_restricted_with(&pi, a.m_cap, a.p, &tri)?;
        let equiv = if a.m <= 4 { Some(l_equiv(&pi)?) } else { None };
        let ratio = |x: f64, y: Option<f64>| y.filter(|y| *y > 0.0).map(|y| x / y);
        let out = json!({
            "optimizer": shape_json(&optimizer),
            "oracle": shape_json(&oracle),
            "restricted": shape_json(&restricted),
            "equivalent": equiv,
            "ratios": {
                "oracle/equivalent": ratio(oracle.value, equiv),
                "optimizer/equivalent": ratio(optimizer.value, equiv),
                "oracle/optimizer": ratio(oracle.value, Some(optimizer.value)),
            },
        });
        eprintln!(
            "optimizer {}  oracle {}  restricted {}  equivalent {}",
            sig6(optimizer.value),
            sig6(oracle.value),
            sig6(restricted.value),
            equiv.map_or("n/a".into(), sig6)
        );
        emit(&out);
        return Ok(());
    };
    eprintln!("value {}", sig6(out["value"].as_f64().unwrap_or(f64::NAN)));
    emit(&out);
    Ok(())
}

fn cmd_mesh(a: &MeshArgs, seed: u64) -> Outcome {
    let cfg = space(&a.problem)?;
    let f = function(&a.problem.function)?;
    let dom = domain(&a.problem.domain)?;
    let mut study = StudyConfig::new(cfg, f, dom.clone(), vec![a.n], strategy(a.strategy, a.m_cap, a.source));
    study.seed = seed;
    study.validate()?;
    let mesh = MeshFactory::new(&study)?.mesh(a.n)?;
    let report = conformity_check(&mesh, Some(&dom));
    let summary = mesh_summary(&mesh, &report);
    eprintln!(
        "N {}  vertices {}  max rho {}  max S {}  conforming {}",
        mesh.len(),
        mesh.vertices.len(),
        sig6(mesh.max_degeneracy()),
        sig6(mesh.max_sliverness()),
        report.passed()
    );
    emit(&summary);
    if !report.passed() {
        return Err(Failure { code: 1, message: format!("conformity check failed: {report:?}") });
    }
    if let Some(path) = &a.out {
        mesh.write_file(path)?;
    }
    if let Some(path) = &a.metric_out {
        let matrix = matrix_field(Arc::new(f), cfg, &dom, a.source.into())?;
        let metric = riemannian_metric(matrix, 1.0 / a.n as f64)?;
        write(path, &metric.to_metric2d(&dom, a.metric_grid, a.metric_grid)?)?;
    }
    Ok(())
}

fn cmd_converge(a: &ConvergeArgs, seed: u64) -> Outcome {
    let levels: Vec<usize> = list(&a.levels, "level")?;
    let cfg = space(&a.problem)?;
    let mut study = StudyConfig::new(
        cfg,
        function(&a.problem.function)?,
        domain(&a.problem.domain)?,
        levels,
        strategy(a.strategy, a.m_cap, a.source),
    );
    study.bound = match a.bound {
        Bound::Optimizer => BoundSource::Optimizer,
        Bound::Equivalent => BoundSource::Equivalent,
        Bound::Exact => BoundSource::Exact,
        Bound::Oracle => BoundSource::Oracle,
    };
    study.seed = seed;
    let report = convergence_study(&study)?;
    let csv = report.to_csv();
    match &a.out {
        Some(path) => write(path, &csv)?,
        None => print!("{csv}"),
    }
    if let Some(path) = &a.json {
        write(path, &report.to_json())?;
    }
    for r in &report.rows {
        match &r.status {
            None => eprintln!("level {}  N {}  scaled {}  ratio {}", r.level, r.n_elements, sig6(r.scaled), sig6(r.ratio)),
            Some(s) => eprintln!("level {}  failed: {s}", r.level),
        }
    }
    eprintln!("bound {}  slope {}", sig6(report.bound), report.slope.map_or("n/a".into(), sig6));
    if report.successful().next().is_none() {
        return Err(Failure { code: 1, message: "every level failed".into() });
    }
    Ok(())
}

fn cmd_audit(kind: &AuditKind, seed: u64) -> Outcome {
    match kind {
        AuditKind::Lemma { problem, n, m_cap } => {
            let cfg = space(problem)?;
            let f = function(&problem.function)?;
            let mut study = StudyConfig::new(cfg, f, domain(&problem.domain)?, vec![*n], Strategy::Adapted { m_cap: *m_cap });
            study.seed = seed;
            study.validate()?;
            let mesh = MeshFactory::new(&study)?.mesh(*n)?;
            let audit = lemma_diff_audit(&f, &mesh, cfg)?;
            eprintln!(
                "N {}  C_diff {}  C_bound {}  violations {} / {}",
                mesh.len(),
                sig6(audit.c_diff),
                sig6(audit.c_bound),
                audit.violations_diff,
                audit.violations_bound
            );
            emit(&json!({
                "N": mesh.len(),
                "c_diff": audit.c_diff,
                "c_bound": audit.c_bound,
                "violations_diff": audit.violations_diff,
                "violations_bound": audit.violations_bound,
            }));
        }
        AuditKind::Chain { problem, hs, grid, source } => {
            let cfg = space(problem)?;
            let f: Arc<dyn SmoothFunction> = Arc::new(function(&problem.function)?);
            let dom = domain(&problem.domain)?;
            let hs: Vec<f64> = list(hs, "h")?;
            let matrix = matrix_field(f.clone(), cfg, &dom, (*source).into())?;
            let audit = error_chain_audit(f, cfg, &dom, matrix, &hs, *grid)?;
            for l in &audit.levels {
                eprintln!("h {}  N {}  C1 {}  C0 {}  chain {}", sig6(l.h), l.elements, sig6(l.c1), sig6(l.c0), sig6(l.chain_value));
            }
            eprintln!("slope_pi {}", audit.slope_pi.map_or("n/a".into(), sig6));
            emit(&serde_json::to_value(&audit).expect("audit serializes"));
        }
        AuditKind::Patch { r, t, n, out } => {
            let (r, t) = (triangle(r)?, triangle(t)?);
            let (mesh, stats) = patch_tile_with_stats(&r, &t, *n)?;
            let dom = Domain::polygon(r.vertices().to_vec())?;
            let report = conformity_check(&mesh, Some(&dom));
            let mut summary = mesh_summary(&mesh, &report);
            summary["repaired_pairings"] = json!(stats.repaired_pairings);
            summary["count_ratio"] = json!(mesh.len() as f64 / ((*n * *n) as f64 * r.area() / t.area()));
            eprintln!("N {}  conforming {}", mesh.len(), report.passed());
            emit(&summary);
            if let Some(path) = out {
                mesh.write_file(path)?;
            }
            if !report.passed() {
                return Err(Failure { code: 1, message: format!("conformity check failed: {report:?}") });
            }
        }
        AuditKind::Residual { problem, source, samples } => {
            let cfg = space(problem)?;
            let dom = domain(&problem.domain)?;
            let matrix = matrix_field(Arc::new(function(&problem.function)?), cfg, &dom, (*source).into())?;
            let residual = matrix.residual_audit(&dom, *samples, seed)?;
            eprintln!("max residual {}  delta {}", sig6(residual), sig6(matrix.delta()));
            emit(&json!({"max_residual": residual, "delta": matrix.delta(), "samples": samples}));
        }
    }
    Ok(())
}

fn cmd_render(a: &RenderArgs) -> Outcome {
    let mesh = Triangulation::read_file(&a.mesh)?;
    let tris = mesh.triangles()?;
    let values: Option<(&str, Vec<f64>)> = match a.color {
        Coloring::None => None,
        Coloring::Sliverness => Some(("sliverness", tris.iter().map(|t| t.sliverness()).collect())),
        Coloring::Degeneracy => Some(("degeneracy", tris.iter().map(|t| t.degeneracy()).collect())),
        Coloring::Error => {
            let (Some(f), Some(m), Some(p)) = (&a.function, a.m, a.p) else {
                return Err(usage("error coloring needs --function, --m and --p"));
            };
            let g = global_error(&function(f)?, &mesh, SpaceConfig::new(m, p)?)?;
            Some(("error", g.element_errors))
        }
    };
    let svg = render::svg(&mesh, values.as_ref().map(|(n, v)| (*n, v.as_slice())));
    write(&a.out, &svg)?;
    eprintln!("wrote {} elements to {}", mesh.len(), a.out.display());
    Ok(())
}

fn threads() -> std::result::Result<(), Failure> {
    let Ok(v) = std::env::var("ANISOMESH_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| usage(format!("ANISOMESH_THREADS must be a count, got '{v}'")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure { code: 1, message: e.to_string() })?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = threads().and_then(|_| match &cli.command {
        Command::Shape(a) => cmd_shape(a, cli.seed),
        Command::Mesh(a) => cmd_mesh(a, cli.seed),
        Command::Converge(a) => cmd_converge(a, cli.seed),
        Command::Audit { kind } => cmd_audit(kind, cli.seed),
        Command::Render(a) => cmd_render(a),
    });
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
