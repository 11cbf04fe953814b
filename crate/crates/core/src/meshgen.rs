//! Conforming triangulations: domains and their coarse meshes, uniform
//! refinement, periodic patches `P_{T,R,n}` and adapted meshes `P_n`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::SmoothFunction;
use crate::geom::{add, cross, dist, dot, orient, scale, sub, Mat2, Point, Triangle};
use crate::metric::{MetricField, SpaceConfig};
use crate::poly::top_part;
use crate::shape::{l_m_restricted_with, TriangleSearch};

/// Provenance of an element of a patch mesh.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tag {
    Interior,
    Layer,
    Boundary,
}

impl Tag {
    pub fn name(&self) -> &'static str {
        match self {
            Tag::Interior => "interior",
            Tag::Layer => "layer",
            Tag::Boundary => "boundary",
        }
    }
}

impl FromStr for Tag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interior" => Ok(Tag::Interior),
            "layer" => Ok(Tag::Layer),
            "boundary" => Ok(Tag::Boundary),
            _ => Err(Error::InvalidArgument(format!("unknown element tag '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Triangulation {
    pub vertices: Vec<Point>,
    pub elements: Vec<[usize; 3]>,
    pub tags: Option<Vec<Tag>>,
}

impl Triangulation {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn triangle(&self, i: usize) -> Result<Triangle> {
        let [a, b, c] = self.elements[i];
        Triangle::new(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    pub fn triangles(&self) -> Result<Vec<Triangle>> {
        (0..self.len()).map(|i| self.triangle(i)).collect()
    }

    pub fn tag(&self, i: usize) -> Option<Tag> {
        self.tags.as_ref().map(|t| t[i])
    }

    fn signed_area(&self, i: usize) -> f64 {
        let [a, b, c] = self.elements[i];
        0.5 * orient(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    pub fn area(&self) -> f64 {
        (0..self.len()).map(|i| self.signed_area(i)).sum()
    }

    pub fn max_diameter(&self) -> f64 {
        self.fold_triangles(|t| t.diameter())
    }

    pub fn max_sliverness(&self) -> f64 {
        self.fold_triangles(|t| t.sliverness())
    }

    pub fn max_degeneracy(&self) -> f64 {
        self.fold_triangles(|t| t.degeneracy())
    }

    pub fn max_angle(&self) -> f64 {
        self.fold_triangles(|t| t.max_angle())
    }

    fn fold_triangles(&self, f: impl Fn(&Triangle) -> f64) -> f64 {
        (0..self.len()).filter_map(|i| self.triangle(i).ok()).map(|t| f(&t)).fold(0.0, f64::max)
    }

    /// Total area of elements not tagged interior.
    pub fn boundary_region_area(&self) -> f64 {
        match &self.tags {
            None => 0.0,
            Some(tags) => (0..self.len()).filter(|&i| tags[i] != Tag::Interior).map(|i| self.signed_area(i)).sum(),
        }
    }

    pub fn count_tag(&self, tag: Tag) -> usize {
        self.tags.as_ref().map_or(0, |t| t.iter().filter(|&&x| x == tag).count())
    }

    /// Writes the `mesh2d v1` text format.
    pub fn to_mesh2d(&self) -> String {
        let mut s = String::with_capacity(64 * (self.vertices.len() + self.elements.len()));
        s.push_str("mesh2d v1\n");
        let _ = writeln!(s, "{}", self.vertices.len());
        for v in &self.vertices {
            let _ = writeln!(s, "{:.16e} {:.16e}", v[0], v[1]);
        }
        let _ = writeln!(s, "{}", self.elements.len());
        for (i, e) in self.elements.iter().enumerate() {
            let _ = write!(s, "{} {} {}", e[0], e[1], e[2]);
            if let Some(t) = self.tag(i) {
                let _ = write!(s, " {}", t.name());
            }
            s.push('\n');
        }
        s
    }

    pub fn parse_mesh2d(text: &str) -> Result<Triangulation> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let mut next = |what: &str| {
            lines.next().ok_or_else(|| Error::Parse { line: 0, msg: format!("unexpected end of file, expected {what}") })
        };
        let perr = |line: usize, msg: String| Error::Parse { line: line + 1, msg };
        let (ln, header) = next("header")?;
        if header.trim() != "mesh2d v1" {
            return Err(perr(ln, format!("bad header '{header}'")));
        }
        let (ln, nv) = next("vertex count")?;
        let nv: usize = nv.trim().parse().map_err(|e| perr(ln, format!("vertex count: {e}")))?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (ln, l) = next("vertex")?;
            let xs: Vec<f64> = l
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| perr(ln, format!("vertex: {e}")))?;
            match xs.as_slice() {
                [x, y] => vertices.push([*x, *y]),
                _ => return Err(perr(ln, "expected 'x y'".into())),
            }
        }
        let (ln, ne) = next("element count")?;
        let ne: usize = ne.trim().parse().map_err(|e| perr(ln, format!("element count: {e}")))?;
        let mut elements = Vec::with_capacity(ne);
        let mut tags = Vec::with_capacity(ne);
        for _ in 0..ne {
            let (ln, l) = next("element")?;
            let parts: Vec<&str> = l.split_whitespace().collect();
            if parts.len() != 3 && parts.len() != 4 {
                return Err(perr(ln, "expected 'i j k [tag]'".into()));
            }
            let mut e = [0usize; 3];
            for (k, p) in parts[..3].iter().enumerate() {
                e[k] = p.parse().map_err(|err| perr(ln, format!("index: {err}")))?;
                if e[k] >= nv {
                    return Err(perr(ln, format!("vertex index {} out of range", e[k])));
                }
            }
            elements.push(e);
            tags.push(parts.get(3).map(|t| t.parse::<Tag>()).transpose().map_err(|err| perr(ln, err.to_string()))?);
        }
        let tags = if tags.iter().all(Option::is_some) && !tags.is_empty() {
            Some(tags.into_iter().map(Option::unwrap).collect())
        } else if tags.iter().all(Option::is_none) {
            None
        } else {
            return Err(Error::Parse { line: 0, msg: "tags must be given for all elements or none".into() });
        };
        Ok(Triangulation { vertices, elements, tags })
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_mesh2d())?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Triangulation> {
        Triangulation::parse_mesh2d(&std::fs::read_to_string(path)?)
    }
}

/// Merges points closer than `tol`.
struct Welder {
    tol: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
    points: Vec<Point>,
}

impl Welder {
    fn new(tol: f64) -> Self {
        Welder { tol, cells: HashMap::new(), points: Vec::new() }
    }

    fn key(&self, p: Point) -> (i64, i64) {
        ((p[0] / self.tol).floor() as i64, (p[1] / self.tol).floor() as i64)
    }

    fn insert(&mut self, p: Point) -> usize {
        let (kx, ky) = self.key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = self.cells.get(&(kx + dx, ky + dy)) {
                    for &i in ids {
                        if dist(self.points[i], p) <= self.tol {
                            return i;
                        }
                    }
                }
            }
        }
        let id = self.points.len();
        self.points.push(p);
        self.cells.entry((kx, ky)).or_default().push(id);
        id
    }
}

/// Assembles triangles given by coordinates, welding shared vertices and
/// dropping elements that collapse.
struct Assembler {
    welder: Welder,
    elements: Vec<[usize; 3]>,
    tags: Vec<Tag>,
    area_tol: f64,
}

impl Assembler {
    fn new(tol: f64, area_tol: f64) -> Self {
        Assembler { welder: Welder::new(tol), elements: Vec::new(), tags: Vec::new(), area_tol }
    }

    fn push(&mut self, t: [Point; 3], tag: Tag) {
        let ids = t.map(|p| self.welder.insert(p));
        if ids[0] == ids[1] || ids[1] == ids[2] || ids[0] == ids[2] {
            return;
        }
        let p = ids.map(|i| self.welder.points[i]);
        if 0.5 * orient(p[0], p[1], p[2]) <= self.area_tol {
            return;
        }
        self.elements.push(ids);
        self.tags.push(tag);
    }

    fn finish(self, tagged: bool) -> Triangulation {
        Triangulation {
            vertices: self.welder.points,
            elements: self.elements,
            tags: tagged.then_some(self.tags),
        }
    }
}

/// Bounded simple polygon with a coarse triangulation `R¹`.
#[derive(Clone, Debug)]
pub struct Domain {
    boundary: Vec<Point>,
    coarse: Triangulation,
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    ((d1 > 0.0) != (d2 > 0.0)) && ((d3 > 0.0) != (d4 > 0.0)) && d1 != 0.0 && d2 != 0.0 && d3 != 0.0 && d4 != 0.0
}

fn point_in_triangle(p: Point, a: Point, b: Point, c: Point) -> bool {
    orient(a, b, p) >= 0.0 && orient(b, c, p) >= 0.0 && orient(c, a, p) >= 0.0
}

/// Ear clipping of a counterclockwise simple polygon.
fn ear_clip(poly: &[Point]) -> Result<Vec<[usize; 3]>> {
    let mut idx: Vec<usize> = (0..poly.len()).collect();
    let mut out = Vec::with_capacity(poly.len().saturating_sub(2));
    while idx.len() > 3 {
        let n = idx.len();
        let ear = (0..n).find(|&i| {
            let (a, b, c) = (idx[(i + n - 1) % n], idx[i], idx[(i + 1) % n]);
            if orient(poly[a], poly[b], poly[c]) <= 0.0 {
                return false;
            }
            idx.iter()
                .filter(|&&j| j != a && j != b && j != c)
                .all(|&j| !point_in_triangle(poly[j], poly[a], poly[b], poly[c]))
        });
        let i = ear.ok_or_else(|| Error::Mesh("ear clipping found no ear".into()))?;
        out.push([idx[(i + n - 1) % n], idx[i], idx[(i + 1) % n]]);
        idx.remove(i);
    }
    out.push([idx[0], idx[1], idx[2]]);
    Ok(out)
}

impl Domain {
    /// Validates a simple polygon, orients it counterclockwise and clips ears.
    pub fn polygon(points: Vec<Point>) -> Result<Domain> {
        let mut pts = points;
        if pts.len() < 3 || pts.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::InvalidArgument("polygon needs at least 3 finite vertices".into()));
        }
        let n = pts.len();
        let signed: f64 = (0..n).map(|i| cross(pts[i], pts[(i + 1) % n])).sum::<f64>() * 0.5;
        if signed.abs() == 0.0 {
            return Err(Error::InvalidArgument("polygon has zero area".into()));
        }
        if signed < 0.0 {
            pts.reverse();
        }
        for i in 0..n {
            if dist(pts[i], pts[(i + 1) % n]) == 0.0 {
                return Err(Error::InvalidArgument("repeated polygon vertex".into()));
            }
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                if segments_intersect(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]) {
                    return Err(Error::InvalidArgument(format!("polygon edges {i} and {j} cross")));
                }
            }
        }
        let tris = ear_clip(&pts)?;
        let coarse = Triangulation { vertices: pts.clone(), elements: tris, tags: None };
        Ok(Domain { boundary: pts, coarse })
    }

    pub fn unit_square() -> Domain {
        Domain::polygon(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).expect("valid square")
    }

    /// The triangle `(0,0), (1,0), (0,1)`.
    pub fn unit_triangle() -> Domain {
        Domain::polygon(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).expect("valid triangle")
    }

    /// Reads whitespace-separated `x y` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Domain> {
        let mut pts = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let l = line.split('#').next().unwrap_or("").trim();
            if l.is_empty() {
                continue;
            }
            let xs: Vec<f64> = l
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse { line: ln + 1, msg: format!("{e}") })?;
            match xs.as_slice() {
                [x, y] => pts.push([*x, *y]),
                _ => return Err(Error::Parse { line: ln + 1, msg: "expected 'x y'".into() }),
            }
        }
        Domain::polygon(pts)
    }

    pub fn read_file(path: &Path) -> Result<Domain> {
        Domain::parse(&std::fs::read_to_string(path)?)
    }

    pub fn boundary(&self) -> &[Point] {
        &self.boundary
    }

    pub fn coarse(&self) -> &Triangulation {
        &self.coarse
    }

    pub fn area(&self) -> f64 {
        self.coarse.area()
    }

    pub fn diameter(&self) -> f64 {
        let b = &self.boundary;
        let mut d: f64 = 0.0;
        for i in 0..b.len() {
            for j in i + 1..b.len() {
                d = d.max(dist(b[i], b[j]));
            }
        }
        d
    }

    /// Distance from `z` to the boundary polygon.
    pub fn boundary_distance(&self, z: Point) -> f64 {
        let b = &self.boundary;
        (0..b.len()).map(|i| segment_distance(z, b[i], b[(i + 1) % b.len()])).fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, z: Point) -> bool {
        let b = &self.boundary;
        let mut inside = false;
        for i in 0..b.len() {
            let (p, q) = (b[i], b[(i + 1) % b.len()]);
            if (p[1] > z[1]) != (q[1] > z[1]) {
                let x = p[0] + (z[1] - p[1]) / (q[1] - p[1]) * (q[0] - p[0]);
                if z[0] < x {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

fn segment_distance(z: Point, a: Point, b: Point) -> f64 {
    let d = sub(b, a);
    let t = (dot(sub(z, a), d) / dot(d, d)).clamp(0.0, 1.0);
    dist(z, add(a, scale(d, t)))
}

/// Point `i/k` of the way along the segment, computed from the
/// lexicographically smaller endpoint so that both orientations agree bitwise.
fn edge_point(a: Point, b: Point, i: usize, k: usize) -> Point {
    let (p, q, j) = if (a[0], a[1]) <= (b[0], b[1]) { (a, b, i) } else { (b, a, k - i) };
    if j == 0 {
        return p;
    }
    if j == k {
        return q;
    }
    let t = j as f64 / k as f64;
    [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
}

fn sub_triangles(t: &[Point; 3], k: usize) -> Vec<[Point; 3]> {
    let [a, b, c] = *t;
    let pt = |i: usize, j: usize| -> Point {
        // Barycentric (k−i−j, i, j)/k; edge points go through `edge_point`.
        if j == 0 {
            edge_point(a, b, i, k)
        } else if i == 0 {
            edge_point(a, c, j, k)
        } else if i + j == k {
            edge_point(b, c, j, k)
        } else {
            let (s, u) = (i as f64 / k as f64, j as f64 / k as f64);
            let w = 1.0 - s - u;
            [w * a[0] + s * b[0] + u * c[0], w * a[1] + s * b[1] + u * c[1]]
        }
    };
    let mut out = Vec::with_capacity(k * k);
    for j in 0..k {
        for i in 0..(k - j) {
            out.push([pt(i, j), pt(i + 1, j), pt(i, j + 1)]);
            if i + j + 1 < k {
                out.push([pt(i + 1, j), pt(i + 1, j + 1), pt(i, j + 1)]);
            }
        }
    }
    out
}

fn mesh_scale(mesh: &Triangulation) -> f64 {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for v in &mesh.vertices {
        for k in 0..2 {
            lo[k] = lo[k].min(v[k]);
            hi[k] = hi[k].max(v[k]);
        }
    }
    dist(lo, hi).max(f64::MIN_POSITIVE)
}

/// Splits each element into `k²` similar children.
pub fn uniform_refine(mesh: &Triangulation, k: usize) -> Result<Triangulation> {
    if k == 0 {
        return Err(Error::InvalidArgument("refinement factor k must be ≥ 1".into()));
    }
    let d = mesh_scale(mesh);
    let mut asm = Assembler::new(1e-12 * d, 0.0);
    for e in &mesh.elements {
        let t = e.map(|i| mesh.vertices[i]);
        for s in sub_triangles(&t, k) {
            asm.push(s, Tag::Interior);
        }
    }
    Ok(asm.finish(false))
}

/// Clips a convex counterclockwise polygon to the half-plane left of `a → b`.
fn clip_half_plane(poly: &[Point], a: Point, b: Point) -> Vec<Point> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let side = |p: Point| orient(a, b, p);
    for i in 0..poly.len() {
        let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
        let (sp, sq) = (side(p), side(q));
        if sp >= 0.0 {
            out.push(p);
        }
        if (sp >= 0.0) != (sq >= 0.0) {
            let t = sp / (sp - sq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

fn polygon_area(p: &[Point]) -> f64 {
    0.5 * (0..p.len()).map(|i| cross(p[i], p[(i + 1) % p.len()])).sum::<f64>()
}

fn max_angle_of(t: &[Point; 3]) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..3 {
        let e1 = sub(t[(i + 1) % 3], t[i]);
        let e2 = sub(t[(i + 2) % 3], t[i]);
        let c = dot(e1, e2) / ((dot(e1, e1) * dot(e2, e2)).sqrt());
        best = best.max(c.clamp(-1.0, 1.0).acos());
    }
    best
}

/// Fan triangulation of a convex polygon, from the first apex that yields
/// no collapsed triangle.
fn fan(poly: &[Point], area_tol: f64) -> Option<Vec<[Point; 3]>> {
    let n = poly.len();
    (0..n).find_map(|apex| {
        let tris: Vec<[Point; 3]> =
            (1..n - 1).map(|k| [poly[apex], poly[(apex + k) % n], poly[(apex + k + 1) % n]]).collect();
        tris.iter().all(|t| 0.5 * orient(t[0], t[1], t[2]) > area_tol).then_some(tris)
    })
}

/// Band polygon between boundary points `a0 → a1` and the inner chain
/// `chain` (ordered in the same direction), triangulated as a fan from `a0`
/// over `chain[..=s]`, the triangle `(a0, a1, chain[s])`, and a fan from `a1`
/// over `chain[s..]`. Quadrilaterals use the shorter valid diagonal; larger
/// polygons the split with the smallest maximal angle.
fn band_triangles(a0: Point, a1: Point, chain: &[Point], area_tol: f64) -> Option<Vec<[Point; 3]>> {
    let k = chain.len() - 1;
    let build = |s: usize| -> Vec<[Point; 3]> {
        let mut out = Vec::with_capacity(k + 1);
        for t in 0..s {
            out.push([a0, chain[t + 1], chain[t]]);
        }
        out.push([a0, a1, chain[s]]);
        for t in s..k {
            out.push([a1, chain[t + 1], chain[t]]);
        }
        out
    };
    let valid = |tris: &[[Point; 3]]| tris.iter().all(|t| 0.5 * orient(t[0], t[1], t[2]) > area_tol);
    let options: Vec<(usize, Vec<[Point; 3]>)> = (0..=k).map(|s| (s, build(s))).filter(|(_, t)| valid(t)).collect();
    if k == 1 {
        // Split 0 uses the diagonal a1–chain[0], split 1 the diagonal a0–chain[1].
        return options
            .into_iter()
            .min_by(|x, y| {
                let len = |s: usize| if s == 0 { dist(a1, chain[0]) } else { dist(a0, chain[1]) };
                len(x.0).total_cmp(&len(y.0))
            })
            .map(|x| x.1);
    }
    options
        .into_iter()
        .min_by(|x, y| {
            let worst = |t: &[[Point; 3]]| t.iter().map(max_angle_of).fold(0.0, f64::max);
            worst(&x.1).total_cmp(&worst(&y.1))
        })
        .map(|x| x.1)
}

/// Diagnostics of a patch construction.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PatchStats {
    /// Boundary points whose nearest inner point had to be moved to keep the
    /// band pairing monotone.
    pub repaired_pairings: usize,
}

/// `P_{T,R,n}`: interior lattice copies of `±T/n`, a clipped layer along
/// `∂R_n` and a band between `∂R_n` and `∂R` whose boundary vertices are
/// exactly the points `(k/n)a + (1 − k/n)b`.
pub fn patch_tile(r: &Triangle, t: &Triangle, n: usize) -> Result<Triangulation> {
    patch_tile_with_stats(r, t, n).map(|x| x.0)
}

pub fn patch_tile_with_stats(r: &Triangle, t: &Triangle, n: usize) -> Result<(Triangulation, PatchStats)> {
    if n == 0 {
        return Err(Error::InvalidArgument("patch resolution n must be ≥ 1".into()));
    }
    let diam = r.diameter();
    let tol = 1e-9 * diam;
    let area_tol = 1e-14 * diam * diam;
    let rv = *r.vertices();
    let zr = r.barycenter();
    let shrink = 1.0 - 1.0 / n as f64;
    let rn: [Point; 3] = rv.map(|v| add(zr, scale(sub(v, zr), shrink)));
    let mut asm = Assembler::new(tol, area_tol);

    if n > 1 {
        // Lattice o + (a u + b v)/n anchored at the first vertex of R_n.
        let tv = *t.vertices();
        let (u, v) = (sub(tv[1], tv[0]), sub(tv[2], tv[0]));
        let lat = Mat2::from_columns(scale(u, 1.0 / n as f64), scale(v, 1.0 / n as f64));
        let inv = lat.inverse().ok_or(Error::SingularSystem)?;
        let o = rn[0];
        let coords: Vec<Point> = rn.iter().map(|p| inv.apply(sub(*p, o))).collect();
        let (amin, amax) = coords.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| (lo.min(c[0]), hi.max(c[0])));
        let (bmin, bmax) = coords.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| (lo.min(c[1]), hi.max(c[1])));
        let lp = |a: i64, b: i64| add(o, lat.apply([a as f64, b as f64]));
        let rn_tri = Triangle::new(rn[0], rn[1], rn[2])?;
        let rel = 1e-12;
        for a in (amin.floor() as i64 - 1)..=(amax.ceil() as i64 + 1) {
            for b in (bmin.floor() as i64 - 1)..=(bmax.ceil() as i64 + 1) {
                let cells = [[lp(a, b), lp(a + 1, b), lp(a, b + 1)], [lp(a + 1, b + 1), lp(a, b + 1), lp(a + 1, b)]];
                for cell in cells {
                    if cell.iter().all(|p| rn_tri.contains(*p, rel)) {
                        asm.push(cell, Tag::Interior);
                        continue;
                    }
                    let mut poly = cell.to_vec();
                    for k in 0..3 {
                        poly = clip_half_plane(&poly, rn[k], rn[(k + 1) % 3]);
                        if poly.is_empty() {
                            break;
                        }
                    }
                    poly.dedup_by(|x, y| dist(*x, *y) <= tol);
                    while poly.len() > 1 && dist(poly[0], *poly.last().unwrap()) <= tol {
                        poly.pop();
                    }
                    if poly.len() < 3 || polygon_area(&poly) <= area_tol {
                        continue;
                    }
                    let tris = fan(&poly, area_tol)
                        .ok_or_else(|| Error::Mesh("layer cell admits no valid fan triangulation".into()))?;
                    for tri in tris {
                        asm.push(tri, Tag::Layer);
                    }
                }
            }
        }
    }

    // Inner chains: vertices of I_n ∪ L_n on each edge of R_n, corners included.
    let mut stats = PatchStats::default();
    for k in 0..3 {
        let (ra, rb) = (rv[k], rv[(k + 1) % 3]);
        let (na, nb) = (rn[k], rn[(k + 1) % 3]);
        let chain: Vec<Point> = if n == 1 {
            vec![zr]
        } else {
            let d = sub(nb, na);
            let len2 = dot(d, d);
            let mut on: Vec<(f64, Point)> = asm
                .welder
                .points
                .iter()
                .filter(|p| segment_distance(**p, na, nb) <= tol)
                .map(|p| (dot(sub(*p, na), d) / len2, *p))
                .collect();
            on.sort_by(|x, y| x.0.total_cmp(&y.0));
            on.dedup_by(|x, y| dist(x.1, y.1) <= tol);
            if on.len() < 2 || dist(on[0].1, na) > tol || dist(on.last().unwrap().1, nb) > tol {
                return Err(Error::Mesh("inner boundary chain misses a corner of R_n".into()));
            }
            on.into_iter().map(|x| x.1).collect()
        };
        let outer: Vec<Point> = (0..=n).map(|i| edge_point(ra, rb, i, n)).collect();
        let last = chain.len() - 1;
        let mut pairing = vec![0usize; n + 1];
        pairing[n] = last;
        for i in 1..n {
            let near = (0..=last)
                .min_by(|&x, &y| dist(outer[i], chain[x]).total_cmp(&dist(outer[i], chain[y])).then(x.cmp(&y)))
                .unwrap_or(0);
            let fixed = near.max(pairing[i - 1]);
            if fixed != near {
                stats.repaired_pairings += 1;
            }
            pairing[i] = fixed;
        }
        for i in 0..n {
            let sub_chain = &chain[pairing[i]..=pairing[i + 1]];
            let tris = band_triangles(outer[i], outer[i + 1], sub_chain, area_tol)
                .ok_or_else(|| Error::Mesh("band polygon admits no valid triangulation".into()))?;
            for tri in tris {
                asm.push(tri, Tag::Boundary);
            }
        }
    }
    Ok((asm.finish(true), stats))
}

/// Integer cube root.
fn icbrt(n: usize) -> usize {
    let mut k = (n as f64).cbrt().round() as usize;
    while k * k * k > n {
        k -= 1;
    }
    while (k + 1) * (k + 1) * (k + 1) <= n {
        k += 1;
    }
    k
}

/// Macro-grid schedule `k(n) = max(1, ⌊n^{1/3}⌋)`.
pub fn macro_level(n: usize) -> usize {
    icbrt(n).max(1)
}

type SpecFn = dyn Fn(Point) -> Result<Triangle> + Send + Sync;

/// Local shape specification `y ↦ T_y`.
#[derive(Clone)]
pub struct ShapeSpec {
    f: Arc<SpecFn>,
}

impl std::fmt::Debug for ShapeSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("ShapeSpec")
    }
}

/// Sampled audit of a shape specification.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpecAudit {
    pub min_area: f64,
    pub max_area: f64,
    pub max_degeneracy: f64,
    /// Largest `| |T_y| − |T_y'| | / |y − y'|` over neighbouring samples.
    pub area_lipschitz: f64,
}

impl ShapeSpec {
    pub fn new(f: impl Fn(Point) -> Result<Triangle> + Send + Sync + 'static) -> Self {
        ShapeSpec { f: Arc::new(f) }
    }

    pub fn constant(t: Triangle) -> Self {
        ShapeSpec::new(move |_| Ok(t))
    }

    pub fn at(&self, y: Point) -> Result<Triangle> {
        (self.f)(y)
    }

    /// Samples the specification on a `k × k` grid of the bounding box, restricted to the domain.
    pub fn audit(&self, domain: &Domain, k: usize) -> Result<SpecAudit> {
        let b = domain.boundary();
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in b {
            for c in 0..2 {
                lo[c] = lo[c].min(p[c]);
                hi[c] = hi[c].max(p[c]);
            }
        }
        let pt = |i: usize, j: usize| {
            [lo[0] + (hi[0] - lo[0]) * (i as f64 + 0.5) / k as f64, lo[1] + (hi[1] - lo[1]) * (j as f64 + 0.5) / k as f64]
        };
        let mut grid = vec![None; k * k];
        let mut audit =
            SpecAudit { min_area: f64::INFINITY, max_area: 0.0, max_degeneracy: 0.0, area_lipschitz: 0.0 };
        for i in 0..k {
            for j in 0..k {
                let y = pt(i, j);
                if !domain.contains(y) {
                    continue;
                }
                let t = self.at(y)?;
                audit.min_area = audit.min_area.min(t.area());
                audit.max_area = audit.max_area.max(t.area());
                audit.max_degeneracy = audit.max_degeneracy.max(t.degeneracy());
                grid[i * k + j] = Some(t.area());
            }
        }
        for i in 0..k {
            for j in 0..k {
                let Some(a) = grid[i * k + j] else { continue };
                for (di, dj) in [(1, 0), (0, 1)] {
                    if i + di < k && j + dj < k {
                        if let Some(b2) = grid[(i + di) * k + j + dj] {
                            let h = dist(pt(i, j), pt(i + di, j + dj));
                            audit.area_lipschitz = audit.area_lipschitz.max((a - b2).abs() / h);
                        }
                    }
                }
            }
        }
        Ok(audit)
    }
}

/// `P_n`: the macro mesh `R^{k(n)}` with one patch `P_{T_{z_R}, R, n}` per macro triangle.
pub fn adapted_mesh(domain: &Domain, spec: &ShapeSpec, n: usize) -> Result<Triangulation> {
    adapted_mesh_with_level(domain, spec, n, macro_level(n))
}

pub fn adapted_mesh_with_level(domain: &Domain, spec: &ShapeSpec, n: usize, k: usize) -> Result<Triangulation> {
    if n < 2 {
        return Err(Error::InvalidArgument("adapted meshes need n ≥ 2".into()));
    }
    let macro_mesh = uniform_refine(domain.coarse(), k)?;
    let patches: Vec<Triangulation> = (0..macro_mesh.len())
        .into_par_iter()
        .map(|i| {
            let r = macro_mesh.triangle(i)?;
            let t = spec.at(r.barycenter())?;
            patch_tile(&r, &t, n)
        })
        .collect::<Result<_>>()?;
    let d = domain.diameter();
    let mut asm = Assembler::new(1e-9 * d, 0.0);
    for p in &patches {
        for (i, e) in p.elements.iter().enumerate() {
            asm.push(e.map(|j| p.vertices[j]), p.tag(i).unwrap_or(Tag::Interior));
        }
    }
    Ok(asm.finish(true))
}

/// Per-`π` memo of `(L_M(π), T(π))`.
type ShapeCache = Mutex<HashMap<Vec<u64>, (f64, Triangle)>>;

/// `T_y = (L_M(π_y) + M^{−1})^{−τ/2} T(π_y)`, with `T(π)` the minimizer of the
/// restricted shape function.
pub fn shape_spec_from_function(f: Arc<dyn SmoothFunction>, cfg: SpaceConfig, m_cap: f64) -> ShapeSpec {
    shape_spec_from_function_with(f, cfg, m_cap, TriangleSearch::default())
}

pub fn shape_spec_from_function_with(
    f: Arc<dyn SmoothFunction>,
    cfg: SpaceConfig,
    m_cap: f64,
    search: TriangleSearch,
) -> ShapeSpec {
    let cache: Arc<ShapeCache> = Arc::new(Mutex::new(HashMap::new()));
    ShapeSpec::new(move |y| {
        let pi = top_part(f.as_ref(), y, cfg.m())?;
        let key: Vec<u64> = pi.coeffs().iter().map(|c| c.to_bits()).collect();
        let hit = cache.lock().unwrap().get(&key).copied();
        let (l, t) = match hit {
            Some(v) => v,
            None => {
                let v = l_m_restricted_with(&pi, m_cap, cfg.p(), &search)?;
                let t = *v.triangle().ok_or_else(|| Error::Optimizer("restricted search returned no triangle".into()))?;
                cache.lock().unwrap().insert(key, (v.value, t));
                (v.value, t)
            }
        };
        let k = (l + 1.0 / m_cap).powf(-0.5 * cfg.tau());
        t.map_affine(&Mat2::diag(k, k), [0.0, 0.0])
    })
}

/// `T_y = H(y)^{−1/2} T_eq`, so that `H_{T_y} = H(y)`.
pub fn shape_spec_from_metric(metric: MetricField) -> ShapeSpec {
    ShapeSpec::new(move |y| {
        let h = metric.eval(y)?;
        Triangle::reference().map_affine(&h.inv_sqrt().to_mat(), [0.0, 0.0])
    })
}

/// Faults found by [`conformity_check`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConformityReport {
    /// `(vertex, element, local edge)` with the vertex strictly inside that edge.
    pub hanging_nodes: Vec<(usize, usize, usize)>,
    /// Edges shared by more than two elements.
    pub overlapping_edges: Vec<(usize, usize)>,
    /// Elements with non-positive orientation.
    pub orientation_faults: Vec<usize>,
    /// Unshared edges not lying on the domain boundary.
    pub open_edges: Vec<(usize, usize)>,
    /// `|Σ|T| − |Ω|| / |Ω|`, when a domain is given.
    pub coverage_deficit: f64,
}

impl ConformityReport {
    pub fn passed(&self) -> bool {
        self.hanging_nodes.is_empty()
            && self.overlapping_edges.is_empty()
            && self.orientation_faults.is_empty()
            && self.open_edges.is_empty()
            && self.coverage_deficit <= 1e-9
    }
}

/// Checks conformity; with a domain also checks coverage and that unshared
/// edges lie on `∂Ω`.
pub fn conformity_check(mesh: &Triangulation, domain: Option<&Domain>) -> ConformityReport {
    let mut rep = ConformityReport::default();
    let mut edges: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
    for (i, e) in mesh.elements.iter().enumerate() {
        if mesh.signed_area(i) <= 0.0 {
            rep.orientation_faults.push(i);
        }
        for k in 0..3 {
            let (a, b) = (e[k], e[(k + 1) % 3]);
            edges.entry((a.min(b), a.max(b))).or_default().push((i, k));
        }
    }
    let scale_len = mesh_scale(mesh);
    let tol = 1e-9 * scale_len;
    let mut lone: Vec<((usize, usize), (usize, usize))> = Vec::new();
    for (key, uses) in &edges {
        match uses.len() {
            1 => lone.push((*key, uses[0])),
            2 => {}
            _ => rep.overlapping_edges.push(*key),
        }
    }
    lone.sort();
    rep.overlapping_edges.sort();
    if !lone.is_empty() {
        let cell = (scale_len / (mesh.vertices.len() as f64).sqrt().max(1.0)).max(f64::MIN_POSITIVE);
        let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        let key = |p: Point| ((p[0] / cell).floor() as i64, (p[1] / cell).floor() as i64);
        for (i, v) in mesh.vertices.iter().enumerate() {
            grid.entry(key(*v)).or_default().push(i);
        }
        for &((a, b), (elem, local)) in &lone {
            let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
            let (ka, kb) = (key(pa), key(pb));
            for gx in ka.0.min(kb.0)..=ka.0.max(kb.0) {
                for gy in ka.1.min(kb.1)..=ka.1.max(kb.1) {
                    for &v in grid.get(&(gx, gy)).map(Vec::as_slice).unwrap_or(&[]) {
                        if v == a || v == b {
                            continue;
                        }
                        let p = mesh.vertices[v];
                        let d = sub(pb, pa);
                        let t = dot(sub(p, pa), d) / dot(d, d);
                        if t > 0.0 && t < 1.0 && segment_distance(p, pa, pb) <= tol {
                            rep.hanging_nodes.push((v, elem, local));
                        }
                    }
                }
            }
            if let Some(dom) = domain {
                let mid = scale(add(pa, pb), 0.5);
                let on = dom.boundary_distance(pa) <= tol && dom.boundary_distance(pb) <= tol && dom.boundary_distance(mid) <= tol;
                if !on {
                    rep.open_edges.push((a, b));
                }
            }
        }
    }
    rep.hanging_nodes.sort();
    if let Some(dom) = domain {
        rep.coverage_deficit = (mesh.area() - dom.area()).abs() / dom.area();
    }
    rep
}
