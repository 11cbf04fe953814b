use std::sync::Arc;

use anisomesh::analysis::{convergence_study, global_error, BoundSource, MeshFactory, StudyConfig, Strategy};
use anisomesh::function::TestFunction;
use anisomesh::geom::Triangle;
use anisomesh::meshgen::{adapted_mesh, conformity_check, shape_spec_from_function, Domain, ShapeSpec, Tag, Triangulation};
use anisomesh::metric::{matrix_field, riemannian_metric, MatrixSource, SpaceConfig};

fn space() -> SpaceConfig {
    SpaceConfig::new(2, 2.0).unwrap()
}

fn scaled(f: TestFunction, mesh: &Triangulation) -> f64 {
    (mesh.len() as f64).sqrt() * global_error(&f, mesh, space()).unwrap().value
}

/// Error per unit area scaled by the element density, over interior patch cells.
fn interior_constant(f: TestFunction, mesh: &Triangulation) -> f64 {
    let g = global_error(&f, mesh, space()).unwrap();
    let idx: Vec<usize> = (0..mesh.len()).filter(|&i| mesh.tag(i) == Some(Tag::Interior)).collect();
    let e2: f64 = idx.iter().map(|&i| g.element_errors[i].powi(2)).sum();
    let area: f64 = idx.iter().map(|&i| mesh.triangle(i).unwrap().area()).sum();
    (e2 / area).sqrt() * (idx.len() as f64 / area).sqrt()
}

#[test]
fn isotropic_control_matches_uniform() {
    let spec = shape_spec_from_function(Arc::new(TestFunction::F2), space(), 100.0);
    let meshes: Vec<Triangulation> = [32usize, 64].iter().map(|&n| adapted_mesh(&Domain::unit_square(), &spec, n).unwrap()).collect();
    let adapted = interior_constant(TestFunction::F2, &meshes[1]);
    let uniform = uniform_scaled(TestFunction::F2, 32);
    assert!((adapted / uniform - 1.0).abs() <= 0.3, "adapted {adapted} uniform {uniform}");
    // The whole-mesh constant still carries the boundary bands and decreases with n.
    let whole: Vec<f64> = meshes.iter().map(|m| scaled(TestFunction::F2, m)).collect();
    assert!(whole[1] < whole[0] && whole[1] > adapted, "{whole:?}");
}

fn uniform_scaled(f: TestFunction, k: usize) -> f64 {
    let cfg = StudyConfig::new(space(), f, Domain::unit_square(), vec![k], Strategy::Uniform);
    let mesh = MeshFactory::new(&cfg).unwrap().mesh(k).unwrap();
    scaled(f, &mesh)
}

#[test]
fn adapted_beats_uniform_on_anisotropic_function() {
    let spec = shape_spec_from_function(Arc::new(TestFunction::F1), space(), 100.0);
    let mesh = adapted_mesh(&Domain::unit_square(), &spec, 24).unwrap();
    let k = (mesh.len() as f64 / 2.0).sqrt().ceil() as usize;
    let uniform = uniform_refine_mesh(k);
    assert!(uniform.len() >= mesh.len());
    let ea = global_error(&TestFunction::F1, &mesh, space()).unwrap().value;
    let eu = global_error(&TestFunction::F1, &uniform, space()).unwrap().value;
    assert!(ea < eu, "adapted {ea} uniform {eu}");
}

fn uniform_refine_mesh(k: usize) -> Triangulation {
    anisomesh::meshgen::uniform_refine(Domain::unit_square().coarse(), k).unwrap()
}

#[test]
fn adapted_meshes_conform_on_several_domains() {
    let l_shape = Domain::polygon(vec![[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]]).unwrap();
    let spec = shape_spec_from_function(Arc::new(TestFunction::F1), space(), 100.0);
    for dom in [Domain::unit_square(), Domain::unit_triangle(), l_shape] {
        let mesh = adapted_mesh(&dom, &spec, 6).unwrap();
        let report = conformity_check(&mesh, Some(&dom));
        assert!(report.passed(), "{report:?}");
        assert!(report.coverage_deficit < 1e-9);
    }
}

#[test]
fn interior_elements_follow_f1_anisotropy() {
    let spec = shape_spec_from_function(Arc::new(TestFunction::F1), space(), 100.0);
    let mesh = adapted_mesh(&Domain::unit_square(), &spec, 8).unwrap();
    for i in (0..mesh.len()).filter(|&i| mesh.tag(i) == Some(Tag::Interior)) {
        let t = mesh.triangle(i).unwrap();
        let (mut dx, mut dy) = (0.0f64, 0.0f64);
        for e in 0..3 {
            let (a, b) = (t.vertices()[e], t.vertices()[(e + 1) % 3]);
            dx = dx.max((a[0] - b[0]).abs());
            dy = dy.max((a[1] - b[1]).abs());
        }
        assert!(dx > 3.0 * dy, "element {i} extents {dx} x {dy}");
    }
}

#[test]
fn polynomial_error_is_scale_invariant_for_constant_spec() {
    let t = Triangle::new([0.0, 0.0], [0.3, 0.0], [0.15, 0.26]).unwrap();
    let spec = ShapeSpec::constant(t);
    let dom = Domain::unit_square();
    let x2 = TestFunction::F1;
    let values: Vec<f64> = [16usize, 32, 64].iter().map(|&n| scaled(x2, &adapted_mesh(&dom, &spec, n).unwrap())).collect();
    let interior: Vec<f64> =
        [16usize, 32, 64].iter().map(|&n| interior_constant(x2, &adapted_mesh(&dom, &spec, n).unwrap())).collect();
    for w in interior.windows(2) {
        assert!((w[1] / w[0] - 1.0).abs() < 1e-6, "{interior:?}");
    }
    assert!((values[2] / values[1] - 1.0).abs() < 0.1, "{values:?}");
}

#[test]
fn study_outputs() {
    let mut cfg = StudyConfig::new(space(), TestFunction::F1, Domain::unit_square(), vec![2, 4, 8], Strategy::Uniform);
    cfg.bound = BoundSource::Exact;
    let report = convergence_study(&cfg).unwrap();
    let csv = report.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("N,error,scaled,bound,ratio,max_diam_sqrtN,max_sliverness"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "8");
    assert_eq!(first.len(), 7);
    let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 3);
    assert!(json["config"].is_object());
    assert_eq!(report.slope.map(|s| (s + 0.5).abs() < 1e-9), Some(true));
}

#[test]
fn metric_export_has_grid_header() {
    let f = Arc::new(TestFunction::F1);
    let dom = Domain::unit_square();
    let field = riemannian_metric(matrix_field(f, space(), &dom, MatrixSource::ClosedForm).unwrap(), 0.1).unwrap();
    let text = field.to_metric2d(&dom, 3, 2).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("metric2d v1 3 2"));
    assert_eq!(lines.count(), 6);
}
