use std::collections::BTreeMap;

use nalgebra::Vector3;

use crate::geometry::Point3;
use crate::{Error, Result};

/// Facets of the polygonal bore. At 15° per facet the bore wall stays below
/// the default crease angle while its rims do not.
pub const BORE_SEGMENTS: usize = 24;

const MIN_TRIANGLE_AREA: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NutParams {
    /// Distance between opposing flats, meters.
    pub across_flats: f64,
    pub height: f64,
    pub bore_radius: f64,
    /// Edge sampling density, samples per meter.
    pub samples_per_meter: f64,
}

impl Default for NutParams {
    fn default() -> Self {
        Self {
            across_flats: 0.030,
            height: 0.012,
            bore_radius: 0.008,
            samples_per_meter: 2000.0,
        }
    }
}

impl NutParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.bore_radius > 0.0 && self.across_flats > 2.0 * self.bore_radius) {
            return Err(Error::invalid("need across_flats > 2*bore_radius > 0"));
        }
        if !(self.height > 0.0) {
            return Err(Error::invalid("nut height must be positive"));
        }
        if !(self.samples_per_meter >= 100.0) {
            return Err(Error::invalid("samples_per_meter must be at least 100"));
        }
        Ok(())
    }

    /// Radius of the circle through the hexagon corners.
    pub fn circumradius(&self) -> f64 {
        self.across_flats / 2.0 / (std::f64::consts::PI / 6.0).cos()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriMesh {
    pub vertices: Vec<Point3>,
    pub triangles: Vec<[usize; 3]>,
}

impl TriMesh {
    pub fn validate(&self) -> Result<()> {
        for (i, t) in self.triangles.iter().enumerate() {
            if t.iter().any(|&k| k >= self.vertices.len()) {
                return Err(Error::invalid(format!(
                    "triangle {i} has an out-of-range index"
                )));
            }
            if self.area(i) <= MIN_TRIANGLE_AREA {
                return Err(Error::invalid(format!("triangle {i} is degenerate")));
            }
        }
        Ok(())
    }

    fn corners(&self, tri: usize) -> [Point3; 3] {
        let [a, b, c] = self.triangles[tri];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    fn cross(&self, tri: usize) -> Vector3<f64> {
        let [a, b, c] = self.corners(tri);
        (b - a).cross(&(c - a))
    }

    pub fn area(&self, tri: usize) -> f64 {
        self.cross(tri).norm() / 2.0
    }

    /// Unit normal following the counter-clockwise winding.
    pub fn normal(&self, tri: usize) -> Vector3<f64> {
        self.cross(tri).normalize()
    }

    pub fn triangle(&self, tri: usize) -> [Point3; 3] {
        self.corners(tri)
    }

    fn push_facing(&mut self, tri: [usize; 3], outward: Vector3<f64>) {
        self.triangles.push(tri);
        let last = self.triangles.len() - 1;
        if self.cross(last).dot(&outward) < 0.0 {
            self.triangles[last] = [tri[0], tri[2], tri[1]];
        }
    }
}

/// Watertight hexagonal prism with a polygonal bore, centered on the origin
/// with the axis along z and a corner on +x.
pub fn build_hex_nut(params: &NutParams) -> Result<TriMesh> {
    params.validate()?;
    let radius = params.circumradius();
    let half = params.height / 2.0;
    let ring = |r: f64, n: usize, z: f64| -> Vec<Point3> {
        (0..n)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                Point3::new(r * a.cos(), r * a.sin(), z)
            })
            .collect()
    };
    let mut mesh = TriMesh::default();
    mesh.vertices.extend(ring(radius, 6, half));
    mesh.vertices.extend(ring(radius, 6, -half));
    mesh.vertices
        .extend(ring(params.bore_radius, BORE_SEGMENTS, half));
    mesh.vertices
        .extend(ring(params.bore_radius, BORE_SEGMENTS, -half));

    let outer_top = |i: usize| i % 6;
    let outer_bot = |i: usize| 6 + i % 6;
    let bore_top = |j: usize| 12 + j % BORE_SEGMENTS;
    let bore_bot = |j: usize| 12 + BORE_SEGMENTS + j % BORE_SEGMENTS;
    let per_sector = BORE_SEGMENTS / 6;
    let mid = per_sector / 2;

    for (cap, bore, up) in [
        (
            &outer_top as &dyn Fn(usize) -> usize,
            &bore_top as &dyn Fn(usize) -> usize,
            Vector3::z(),
        ),
        (&outer_bot, &bore_bot, -Vector3::z()),
    ] {
        for i in 0..6 {
            let first = i * per_sector;
            for k in 0..mid {
                mesh.push_facing([cap(i), bore(first + k), bore(first + k + 1)], up);
            }
            mesh.push_facing([cap(i), cap(i + 1), bore(first + mid)], up);
            for k in mid..per_sector {
                mesh.push_facing([cap(i + 1), bore(first + k), bore(first + k + 1)], up);
            }
        }
    }

    for i in 0..6 {
        let out =
            (mesh.vertices[outer_top(i)].coords + mesh.vertices[outer_top(i + 1)].coords).xy();
        let out = Vector3::new(out.x, out.y, 0.0);
        mesh.push_facing([outer_top(i), outer_top(i + 1), outer_bot(i + 1)], out);
        mesh.push_facing([outer_top(i), outer_bot(i + 1), outer_bot(i)], out);
    }
    for j in 0..BORE_SEGMENTS {
        let c = (mesh.vertices[bore_top(j)].coords + mesh.vertices[bore_top(j + 1)].coords).xy();
        let inward = -Vector3::new(c.x, c.y, 0.0);
        mesh.push_facing([bore_top(j), bore_top(j + 1), bore_bot(j + 1)], inward);
        mesh.push_facing([bore_top(j), bore_bot(j + 1), bore_bot(j)], inward);
    }
    mesh.validate()?;
    Ok(mesh)
}

/// Parses the `v x y z` / `f i j k` subset of Wavefront OBJ. Faces must be
/// triangles with 1-based indices (`i/t/n` forms keep only the vertex
/// index). Other line types are ignored.
pub fn load_obj(text: &str) -> Result<TriMesh> {
    let mut mesh = TriMesh::default();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut c = [0.0; 3];
                for slot in &mut c {
                    let tok = tokens.next().ok_or_else(|| {
                        Error::parse_line(line_no, "vertex needs three coordinates")
                    })?;
                    *slot = tok
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| {
                            Error::parse_line(line_no, format!("malformed number {tok:?}"))
                        })?;
                }
                mesh.vertices.push(Point3::from(c));
            }
            Some("f") => {
                let idx: Vec<&str> = tokens.collect();
                if idx.len() != 3 {
                    return Err(Error::parse_line(
                        line_no,
                        format!("face has {} vertices, need 3", idx.len()),
                    ));
                }
                let mut tri = [0usize; 3];
                for (slot, tok) in tri.iter_mut().zip(idx) {
                    let head = tok.split('/').next().unwrap_or(tok);
                    let i: usize = head.parse().map_err(|_| {
                        Error::parse_line(line_no, format!("malformed index {tok:?}"))
                    })?;
                    if i == 0 || i > mesh.vertices.len() {
                        return Err(Error::parse_line(
                            line_no,
                            format!("face index {i} out of range"),
                        ));
                    }
                    *slot = i - 1;
                }
                mesh.triangles.push(tri);
            }
            _ => {}
        }
    }
    Ok(mesh)
}

/// Static edge tag: open border of the mesh, or crease sharper than the
/// dihedral threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeTag {
    Boundary,
    Sharp,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureEdge {
    pub a: usize,
    pub b: usize,
    pub tag: EdgeTag,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeSample {
    pub point: Point3,
    pub tag: EdgeTag,
}

/// Open and sharp edges of `mesh`, sorted by vertex index pair.
pub fn feature_edges(mesh: &TriMesh, dihedral_threshold: f64) -> Vec<FeatureEdge> {
    let mut owners: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            owners.entry((a.min(b), a.max(b))).or_default().push(t);
        }
    }
    owners
        .into_iter()
        .filter_map(|((a, b), tris)| {
            let tag = match tris.as_slice() {
                [_] => EdgeTag::Boundary,
                [t1, t2] => {
                    let cos = mesh.normal(*t1).dot(&mesh.normal(*t2)).clamp(-1.0, 1.0);
                    if cos.acos() > dihedral_threshold {
                        EdgeTag::Sharp
                    } else {
                        return None;
                    }
                }
                // non-manifold edges are creases by definition
                _ => EdgeTag::Sharp,
            };
            Some(FeatureEdge { a, b, tag })
        })
        .collect()
}

/// `ceil(length * density) + 1` evenly spaced samples per edge, endpoints
/// included.
pub fn sample_feature_edges(
    mesh: &TriMesh,
    edges: &[FeatureEdge],
    density: f64,
) -> Vec<EdgeSample> {
    let mut out = Vec::new();
    for e in edges {
        let (pa, pb) = (mesh.vertices[e.a], mesh.vertices[e.b]);
        let segments = ((pb - pa).norm() * density).ceil().max(1.0) as usize;
        for s in 0..=segments {
            let t = s as f64 / segments as f64;
            out.push(EdgeSample {
                point: pa + (pb - pa) * t,
                tag: e.tag,
            });
        }
    }
    out
}

pub fn extract_feature_edges(
    mesh: &TriMesh,
    dihedral_threshold: f64,
    density: f64,
) -> Vec<EdgeSample> {
    sample_feature_edges(mesh, &feature_edges(mesh, dihedral_threshold), density)
}
