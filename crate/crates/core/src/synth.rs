//! Synthetic tabletop scenes with known object poses.
//!
//! Objects rest on the table plane. Point-cloud frames sample the surfaces
//! the camera can see (back faces and anything hidden in the z-buffer are
//! culled), so nuts far from the camera come out one-sided just like real
//! side-mounted RGB-D captures. The photo is a flat rendering: objects in
//! gray 120 on a 230 background, optionally speckled.
//!
//! All randomness comes from SplitMix64 streams derived from the scene
//! seed, one stream per purpose (layout, each frame, the photo).

use nalgebra::{Matrix3, Vector3};
use rand::seq::index;
use rand::{Rng, RngCore, SeedableRng};
use rand_distr::{Distribution, Normal};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloudFrame;
use crate::geometry::{
    apply_pose, wrap_yaw, Camera, CameraExtrinsics, CameraIntrinsics, Point3, Pose,
};
use crate::imaging::GrayImage;
use crate::model::{build_hex_nut, render_depth_into, DepthImage, NutParams, TriMesh};
use crate::{Error, Result};

pub const BACKGROUND_GRAY: u8 = 230;
pub const OBJECT_GRAY: u8 = 120;

/// Surface samples per square meter (one per 2 mm²).
pub const SURFACE_DENSITY: f64 = 5.0e5;

/// Depth slack when testing a surface sample against the z-buffer.
const VISIBILITY_EPS: f64 = 0.003;

/// Minimum free gap between object footprints.
const FOOTPRINT_CLEARANCE: f64 = 0.01;

const PLACEMENT_ATTEMPTS: usize = 10_000;

const STREAM_LAYOUT: u64 = 1;
const STREAM_PHOTO: u64 = 2;
const STREAM_FRAME_BASE: u64 = 1 << 32;

/// An independent generator for `(seed, stream)`.
pub fn rng_stream(seed: u64, stream: u64) -> SplitMix64 {
    let mut mixer = SplitMix64::seed_from_u64(seed ^ stream.wrapping_mul(0xD1B5_4A32_D192_ED03));
    SplitMix64::seed_from_u64(mixer.next_u64())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "dims")]
pub enum Shape {
    Nut {
        across_flats: f64,
        height: f64,
        bore_radius: f64,
    },
    /// Upright round shank.
    Screw { radius: f64, height: f64 },
    Washer {
        outer_radius: f64,
        inner_radius: f64,
        height: f64,
    },
    /// Box-shaped stand-in object.
    Placeholder {
        size_x: f64,
        size_y: f64,
        size_z: f64,
    },
}

impl Shape {
    pub fn kind(&self) -> ObjectKind {
        match self {
            Shape::Nut { .. } => ObjectKind::Nut,
            Shape::Screw { .. } => ObjectKind::Screw,
            Shape::Washer { .. } => ObjectKind::Washer,
            Shape::Placeholder { .. } => ObjectKind::Placeholder,
        }
    }

    pub fn height(&self) -> f64 {
        match *self {
            Shape::Nut { height, .. }
            | Shape::Screw { height, .. }
            | Shape::Washer { height, .. } => height,
            Shape::Placeholder { size_z, .. } => size_z,
        }
    }

    /// Radius of the circle enclosing the footprint for any yaw.
    pub fn footprint_radius(&self) -> f64 {
        match *self {
            Shape::Nut { across_flats, .. } => across_flats / 3f64.sqrt(),
            Shape::Screw { radius, .. } => radius,
            Shape::Washer { outer_radius, .. } => outer_radius,
            Shape::Placeholder { size_x, size_y, .. } => size_x.hypot(size_y) / 2.0,
        }
    }

    /// Mesh centered on its volumetric center.
    pub fn mesh(&self) -> Result<TriMesh> {
        match *self {
            Shape::Nut {
                across_flats,
                height,
                bore_radius,
            } => build_hex_nut(&NutParams {
                across_flats,
                height,
                bore_radius,
                ..NutParams::default()
            }),
            Shape::Screw { radius, height } => Ok(prism(radius, 16, height, None)),
            Shape::Washer {
                outer_radius,
                inner_radius,
                height,
            } => Ok(prism(outer_radius, 24, height, Some(inner_radius))),
            Shape::Placeholder {
                size_x,
                size_y,
                size_z,
            } => Ok(cuboid(size_x, size_y, size_z)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ObjectKind {
    Nut,
    Screw,
    Washer,
    Placeholder,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseRecord {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
}

impl PoseRecord {
    pub fn pose(&self) -> Pose {
        Pose::new(Point3::new(self.x, self.y, self.z), self.yaw)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    #[serde(flatten)]
    pub shape: Shape,
    pub pose: PoseRecord,
    /// Yaw folded into the 60° period; meaningful for nuts.
    pub canonical_yaw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraRecord {
    pub intrinsics: CameraIntrinsics,
    /// Row-major world-to-camera rotation.
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

impl From<&Camera> for CameraRecord {
    fn from(c: &Camera) -> Self {
        let r = &c.extrinsics.rotation;
        Self {
            intrinsics: c.intrinsics,
            rotation: std::array::from_fn(|i| std::array::from_fn(|j| r[(i, j)])),
            translation: c.extrinsics.translation.into(),
        }
    }
}

impl CameraRecord {
    pub fn camera(&self) -> Result<Camera> {
        let r = Matrix3::from_fn(|i, j| self.rotation[i][j]);
        self.intrinsics.validate()?;
        Ok(Camera {
            intrinsics: self.intrinsics,
            extrinsics: CameraExtrinsics::new(r, Vector3::from(self.translation))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub objects: Vec<SceneObject>,
    pub table_height: f64,
    pub camera: CameraRecord,
    pub seed: u64,
}

impl SceneSpec {
    pub fn nuts(&self) -> impl Iterator<Item = &SceneObject> {
        self.objects
            .iter()
            .filter(|o| o.shape.kind() == ObjectKind::Nut)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseSpec {
    /// Gaussian jitter per coordinate, meters.
    pub point_sigma: f64,
    /// Fraction of cloud points dropped.
    pub dropout: f64,
    /// Fraction of photo pixels replaced by uniform random intensities.
    pub speckle_density: f64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        let frac = |f: f64| (0.0..=1.0).contains(&f);
        if !(self.point_sigma >= 0.0) || !frac(self.dropout) || !frac(self.speckle_density) {
            return Err(Error::invalid(format!("bad noise spec {self:?}")));
        }
        Ok(())
    }
}

/// Scene layout parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneGenerator {
    pub table_height: f64,
    pub camera: Camera,
    pub nut: NutParams,
    /// Objects are placed with |x| ≤ half_x and |y| ≤ half_y around the
    /// table center.
    pub half_x: f64,
    pub half_y: f64,
}

impl Default for SceneGenerator {
    fn default() -> Self {
        Self::new(0.75, Camera::default_for_table(0.75), NutParams::default())
    }
}

impl SceneGenerator {
    pub fn new(table_height: f64, camera: Camera, nut: NutParams) -> Self {
        Self {
            table_height,
            camera,
            nut,
            half_x: 0.15,
            half_y: 0.2,
        }
    }

    fn nut_shape(&self) -> Shape {
        Shape::Nut {
            across_flats: self.nut.across_flats,
            height: self.nut.height,
            bore_radius: self.nut.bore_radius,
        }
    }

    fn object_at(&self, shape: Shape, x: f64, y: f64, yaw: f64) -> Result<SceneObject> {
        Ok(SceneObject {
            shape,
            pose: PoseRecord {
                x,
                y,
                z: self.table_height + shape.height() / 2.0,
                yaw,
            },
            canonical_yaw: wrap_yaw(yaw)?,
        })
    }

    /// A scene with exactly the given objects, no randomness involved.
    pub fn scene_with(&self, objects: &[(Shape, f64, f64, f64)], seed: u64) -> Result<SceneSpec> {
        let objects = objects
            .iter()
            .map(|&(shape, x, y, yaw)| self.object_at(shape, x, y, yaw))
            .collect::<Result<_>>()?;
        Ok(SceneSpec {
            objects,
            table_height: self.table_height,
            camera: CameraRecord::from(&self.camera),
            seed,
        })
    }

    /// A single nut at the table center with the given yaw.
    pub fn single_nut(&self, yaw: f64, seed: u64) -> Result<SceneSpec> {
        self.scene_with(&[(self.nut_shape(), 0.0, 0.0, yaw)], seed)
    }

    /// Random non-overlapping layout of nuts followed by distractors.
    /// Nut yaws are uniform in [0, 2π).
    pub fn generate(&self, n_nuts: usize, n_distractors: usize, seed: u64) -> Result<SceneSpec> {
        let mut rng = rng_stream(seed, STREAM_LAYOUT);
        let mut shapes = vec![self.nut_shape(); n_nuts];
        for _ in 0..n_distractors {
            shapes.push(match rng.random_range(0..3) {
                0 => Shape::Screw {
                    radius: 0.006,
                    height: 0.125,
                },
                1 => Shape::Washer {
                    outer_radius: 0.015,
                    inner_radius: 0.0085,
                    height: 0.003,
                },
                _ => Shape::Placeholder {
                    size_x: 0.04,
                    size_y: 0.04,
                    size_z: 0.04,
                },
            });
        }
        let total = shapes.len();
        let mut placed: Vec<SceneObject> = Vec::with_capacity(total);
        let mut attempts = 0;
        for shape in shapes {
            let r = shape.footprint_radius();
            loop {
                attempts += 1;
                if attempts > PLACEMENT_ATTEMPTS {
                    return Err(Error::SceneTooCrowded {
                        placed_of: total,
                        attempts: PLACEMENT_ATTEMPTS,
                    });
                }
                if r > self.half_x || r > self.half_y {
                    continue;
                }
                let x = rng.random_range(-self.half_x + r..=self.half_x - r);
                let y = rng.random_range(-self.half_y + r..=self.half_y - r);
                let yaw = rng.random_range(0.0..std::f64::consts::TAU);
                let clear = placed.iter().all(|o| {
                    let d = (o.pose.x - x).hypot(o.pose.y - y);
                    d > o.shape.footprint_radius() + r + FOOTPRINT_CLEARANCE
                });
                if clear {
                    placed.push(self.object_at(shape, x, y, yaw)?);
                    break;
                }
            }
        }
        Ok(SceneSpec {
            objects: placed,
            table_height: self.table_height,
            camera: CameraRecord::from(&self.camera),
            seed,
        })
    }
}

/// Random scene with the default table, camera and nut.
pub fn generate_scene(n_nuts: usize, n_distractors: usize, seed: u64) -> Result<SceneSpec> {
    SceneGenerator::default().generate(n_nuts, n_distractors, seed)
}

struct PosedMesh {
    mesh: TriMesh,
    pose: Pose,
}

fn posed_meshes(scene: &SceneSpec) -> Result<Vec<PosedMesh>> {
    scene
        .objects
        .iter()
        .map(|o| {
            Ok(PosedMesh {
                mesh: o.shape.mesh()?,
                pose: o.pose.pose(),
            })
        })
        .collect()
}

fn scene_depth(meshes: &[PosedMesh], camera: &Camera) -> DepthImage {
    let mut depth = DepthImage::for_camera(camera);
    for m in meshes {
        render_depth_into(&mut depth, &m.mesh, &m.pose, camera);
    }
    depth
}

/// Point-cloud frames of the camera-visible surfaces. Frame `k` draws from
/// its own stream, so frames are reproducible individually.
pub fn render_frames(
    scene: &SceneSpec,
    n_frames: usize,
    noise: &NoiseSpec,
) -> Result<Vec<PointCloudFrame>> {
    if n_frames < 1 {
        return Err(Error::invalid("n_frames must be at least 1"));
    }
    noise.validate()?;
    let camera = scene.camera.camera()?;
    let meshes = posed_meshes(scene)?;
    let depth = scene_depth(&meshes, &camera);
    let eye = camera.extrinsics.eye();
    let jitter = Normal::new(0.0, noise.point_sigma).map_err(|e| Error::invalid(e.to_string()))?;

    (0..n_frames)
        .map(|k| {
            let mut rng = rng_stream(scene.seed, STREAM_FRAME_BASE + k as u64);
            let mut points = Vec::new();
            for m in &meshes {
                for t in 0..m.mesh.triangles.len() {
                    let [a, b, c] = m.mesh.triangle(t).map(|p| apply_pose(&m.pose, &p));
                    let n = (b - a).cross(&(c - a));
                    let area = n.norm() / 2.0;
                    if n.dot(&(eye - a)) <= 0.0 {
                        continue;
                    }
                    let expected = area * SURFACE_DENSITY;
                    let count = (expected + rng.random::<f64>()).floor() as usize;
                    for _ in 0..count {
                        let (s, r): (f64, f64) = (rng.random::<f64>().sqrt(), rng.random());
                        let p = Point3::from(
                            a.coords * (1.0 - s) + b.coords * (s * (1.0 - r)) + c.coords * (s * r),
                        );
                        let Ok((px, d)) = camera.project(&p) else {
                            continue;
                        };
                        if d > depth.at(px) + VISIBILITY_EPS {
                            continue;
                        }
                        if noise.dropout > 0.0 && rng.random::<f64>() < noise.dropout {
                            continue;
                        }
                        let p = if noise.point_sigma > 0.0 {
                            Point3::new(
                                p.x + jitter.sample(&mut rng),
                                p.y + jitter.sample(&mut rng),
                                p.z + jitter.sample(&mut rng),
                            )
                        } else {
                            p
                        };
                        points.push(p);
                    }
                }
            }
            Ok(PointCloudFrame::new(points, k))
        })
        .collect()
}

/// Flat-shaded photo of the scene plus optional speckle. Exactly
/// `round(speckle_density · W · H)` distinct pixels are overwritten.
pub fn render_edge_photo(scene: &SceneSpec, noise: &NoiseSpec) -> Result<GrayImage> {
    noise.validate()?;
    let camera = scene.camera.camera()?;
    let depth = scene_depth(&posed_meshes(scene)?, &camera);
    let (w, h) = (depth.width(), depth.height());
    let data = depth
        .values()
        .iter()
        .map(|d| {
            if d.is_finite() {
                OBJECT_GRAY
            } else {
                BACKGROUND_GRAY
            }
        })
        .collect();
    let mut img = GrayImage::new(w, h, data)?;
    let count = speckle_count(noise.speckle_density, w, h);
    if count > 0 {
        let mut rng = rng_stream(scene.seed, STREAM_PHOTO);
        let picked = index::sample(&mut rng, w * h, count);
        let pixels = img.data_mut();
        for i in picked.iter() {
            pixels[i] = rng.random();
        }
    }
    Ok(img)
}

pub fn speckle_count(density: f64, width: usize, height: usize) -> usize {
    (density * (width * height) as f64).round() as usize
}

/// Ground-truth record of one nut.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NutTruth {
    pub object_index: usize,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
    pub canonical_yaw: f64,
}

pub fn nut_truth(scene: &SceneSpec) -> Vec<NutTruth> {
    scene
        .objects
        .iter()
        .enumerate()
        .filter(|(_, o)| o.shape.kind() == ObjectKind::Nut)
        .map(|(i, o)| NutTruth {
            object_index: i,
            x: o.pose.x,
            y: o.pose.y,
            z: o.pose.z,
            yaw: o.pose.yaw,
            canonical_yaw: o.canonical_yaw,
        })
        .collect()
}

/// Regular `sides`-gon prism of circumradius `radius`, optionally with a
/// coaxial hole of the same polygon count.
fn prism(radius: f64, sides: usize, height: f64, hole: Option<f64>) -> TriMesh {
    let half = height / 2.0;
    let ring = |r: f64, z: f64| -> Vec<Point3> {
        (0..sides)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / sides as f64;
                Point3::new(r * a.cos(), r * a.sin(), z)
            })
            .collect()
    };
    let mut mesh = TriMesh::default();
    mesh.vertices.extend(ring(radius, half));
    mesh.vertices.extend(ring(radius, -half));
    let top = |k: usize| k % sides;
    let bot = |k: usize| sides + k % sides;
    for k in 0..sides {
        mesh.triangles.push([top(k), bot(k), bot(k + 1)]);
        mesh.triangles.push([top(k), bot(k + 1), top(k + 1)]);
    }
    match hole {
        None => {
            mesh.vertices.push(Point3::new(0.0, 0.0, half));
            mesh.vertices.push(Point3::new(0.0, 0.0, -half));
            let (ct, cb) = (2 * sides, 2 * sides + 1);
            for k in 0..sides {
                mesh.triangles.push([ct, top(k), top(k + 1)]);
                mesh.triangles.push([cb, bot(k + 1), bot(k)]);
            }
        }
        Some(inner) => {
            mesh.vertices.extend(ring(inner, half));
            mesh.vertices.extend(ring(inner, -half));
            let itop = |k: usize| 2 * sides + k % sides;
            let ibot = |k: usize| 3 * sides + k % sides;
            for k in 0..sides {
                mesh.triangles.push([itop(k), top(k), top(k + 1)]);
                mesh.triangles.push([itop(k), top(k + 1), itop(k + 1)]);
                mesh.triangles.push([ibot(k), bot(k + 1), bot(k)]);
                mesh.triangles.push([ibot(k), ibot(k + 1), bot(k + 1)]);
                mesh.triangles.push([itop(k), itop(k + 1), ibot(k + 1)]);
                mesh.triangles.push([itop(k), ibot(k + 1), ibot(k)]);
            }
        }
    }
    mesh
}

fn cuboid(sx: f64, sy: f64, sz: f64) -> TriMesh {
    let (hx, hy, hz) = (sx / 2.0, sy / 2.0, sz / 2.0);
    let vertices = (0..8)
        .map(|i| {
            Point3::new(
                if i & 1 == 0 { -hx } else { hx },
                if i & 2 == 0 { -hy } else { hy },
                if i & 4 == 0 { -hz } else { hz },
            )
        })
        .collect();
    let faces = [
        [0, 2, 3, 1],
        [4, 5, 7, 6],
        [0, 1, 5, 4],
        [2, 6, 7, 3],
        [0, 4, 6, 2],
        [1, 3, 7, 5],
    ];
    let triangles = faces
        .iter()
        .flat_map(|f| [[f[0], f[1], f[2]], [f[0], f[2], f[3]]])
        .collect();
    TriMesh {
        vertices,
        triangles,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::edge_image;
    use crate::model::{feature_edges, DEFAULT_DIHEDRAL_THRESHOLD};

    fn outward(mesh: &TriMesh) -> bool {
        // positive signed volume means triangles wind outward
        let vol: f64 = mesh
            .triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|k| mesh.vertices[k].coords);
                a.dot(&b.cross(&c))
            })
            .sum();
        vol > 0.0
    }

    #[test]
    fn distractor_meshes_are_closed_and_outward() {
        let shapes = [
            Shape::Screw {
                radius: 0.006,
                height: 0.125,
            },
            Shape::Washer {
                outer_radius: 0.015,
                inner_radius: 0.0085,
                height: 0.003,
            },
            Shape::Placeholder {
                size_x: 0.04,
                size_y: 0.03,
                size_z: 0.02,
            },
        ];
        for s in shapes {
            let mesh = s.mesh().unwrap();
            mesh.validate().unwrap();
            assert!(outward(&mesh), "{s:?}");
            assert!(feature_edges(&mesh, DEFAULT_DIHEDRAL_THRESHOLD)
                .iter()
                .all(|e| e.tag == crate::model::EdgeTag::Sharp));
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_scene(5, 0, 42).unwrap();
        let b = generate_scene(5, 0, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_scene(5, 0, 43).unwrap());
        assert!(generate_scene(0, 0, 42).unwrap().objects.is_empty());
    }

    #[test]
    fn default_camera_sees_every_object_whole() {
        let camera = Camera::default_for_table(0.75);
        for seed in 0..20 {
            let scene = generate_scene(6, 6, seed).unwrap();
            for obj in &scene.objects {
                let mesh = obj.shape.mesh().unwrap();
                for v in &mesh.vertices {
                    let (px, _) = camera.project(&apply_pose(&obj.pose.pose(), v)).unwrap();
                    assert!(
                        camera.intrinsics.contains(px),
                        "{obj:?} leaves the frame at {px:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn footprints_do_not_overlap() {
        for seed in 0..10 {
            let s = generate_scene(5, 4, seed).unwrap();
            assert_eq!(s.objects.len(), 9);
            for (i, a) in s.objects.iter().enumerate() {
                for b in &s.objects[i + 1..] {
                    let d = (a.pose.x - b.pose.x).hypot(a.pose.y - b.pose.y);
                    assert!(d > a.shape.footprint_radius() + b.shape.footprint_radius());
                }
            }
            for n in s.nuts() {
                assert!((0.0..std::f64::consts::TAU).contains(&n.pose.yaw));
                assert_eq!(n.canonical_yaw, wrap_yaw(n.pose.yaw).unwrap());
            }
        }
    }

    #[test]
    fn overcrowded_table_fails() {
        assert!(matches!(
            generate_scene(200, 0, 1),
            Err(Error::SceneTooCrowded { .. })
        ));
    }

    #[test]
    fn scene_json_round_trip() {
        let s = generate_scene(3, 3, 9).unwrap();
        let text = s.to_json().unwrap();
        assert_eq!(SceneSpec::from_json(&text).unwrap(), s);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let o = &v["objects"][0];
        assert_eq!(o["kind"], "Nut");
        assert!(o["pose"]["yaw"].is_number());
        assert!(o["dims"]["across_flats"].is_number());
        assert_eq!(v["seed"], 9);
    }

    #[test]
    fn noiseless_points_lie_on_the_nut() {
        let gen = SceneGenerator::default();
        let scene = gen.single_nut(0.3, 5).unwrap();
        let frames = render_frames(&scene, 2, &NoiseSpec::default()).unwrap();
        let mesh = scene.objects[0].shape.mesh().unwrap();
        let pose = scene.objects[0].pose.pose();
        let tris: Vec<[Point3; 3]> = (0..mesh.triangles.len())
            .map(|t| mesh.triangle(t).map(|p| apply_pose(&pose, &p)))
            .collect();
        assert!(frames[0].points.len() > 200);
        assert_ne!(frames[0].points, frames[1].points);
        for p in &frames[0].points {
            let on = tris.iter().any(|[a, b, c]| {
                let n = (b - a).cross(&(c - a)).normalize();
                (p - a).dot(&n).abs() < 1e-9 && inside_triangle(p, a, b, c)
            });
            assert!(on, "{p:?} is off the surface");
        }
    }

    fn inside_triangle(p: &Point3, a: &Point3, b: &Point3, c: &Point3) -> bool {
        let n = (b - a).cross(&(c - a));
        let s1 = (b - a).cross(&(p - a)).dot(&n);
        let s2 = (c - b).cross(&(p - b)).dot(&n);
        let s3 = (a - c).cross(&(p - c)).dot(&n);
        let tol = -1e-12 * n.norm_squared();
        s1 >= tol && s2 >= tol && s3 >= tol
    }

    #[test]
    fn full_dropout_empties_frames() {
        let scene = SceneGenerator::default().single_nut(0.0, 1).unwrap();
        let noise = NoiseSpec {
            dropout: 1.0,
            ..NoiseSpec::default()
        };
        assert!(render_frames(&scene, 3, &noise)
            .unwrap()
            .iter()
            .all(|f| f.points.is_empty()));
    }

    #[test]
    fn nearer_nut_hides_the_farther_one() {
        let gen = SceneGenerator::default();
        let nut = gen.nut_shape();
        // both on the camera's line of sight (camera sits on the -x axis)
        let scene = gen
            .scene_with(&[(nut, -0.05, 0.0, 0.0), (nut, 0.0, 0.0, 0.0)], 3)
            .unwrap();
        let frames = render_frames(&scene, 1, &NoiseSpec::default()).unwrap();
        let near = frames[0].points.iter().filter(|p| p.x < -0.025).count();
        let far = frames[0].points.iter().filter(|p| p.x >= -0.025).count();
        assert!(far < near, "near {near}, far {far}");
    }

    #[test]
    fn photo_examples() {
        let gen = SceneGenerator::default();
        let empty = gen.scene_with(&[], 0).unwrap();
        let photo = render_edge_photo(&empty, &NoiseSpec::default()).unwrap();
        assert!(photo.data().iter().all(|&g| g == BACKGROUND_GRAY));
        let grad = crate::imaging::scharr_magnitude(&photo).unwrap();
        assert_eq!(grad.max(), 0.0);

        let noise = NoiseSpec {
            speckle_density: 0.05,
            ..NoiseSpec::default()
        };
        let speckled = render_edge_photo(&empty, &noise).unwrap();
        let (w, h) = (photo.width(), photo.height());
        let changed = photo
            .data()
            .iter()
            .zip(speckled.data())
            .filter(|(a, b)| a != b)
            .count();
        let expected = (0.05 * (w * h) as f64).round() as usize;
        assert_eq!(speckle_count(0.05, w, h), expected);
        // a replacement may draw the background value itself
        assert!(changed <= expected && changed as f64 > 0.98 * expected as f64);
    }

    #[test]
    fn photo_edges_trace_the_silhouette() {
        let gen = SceneGenerator::default();
        let scene = gen.single_nut(0.5, 2).unwrap();
        let photo = render_edge_photo(&scene, &NoiseSpec::default()).unwrap();
        let edges = edge_image(&photo, crate::imaging::DEFAULT_EDGE_THRESHOLD).unwrap();
        let camera = scene.camera.camera().unwrap();
        let mesh = scene.objects[0].shape.mesh().unwrap();
        let mut depth = DepthImage::for_camera(&camera);
        render_depth_into(&mut depth, &mesh, &scene.objects[0].pose.pose(), &camera);
        let (mut total, mut near_edge) = (0, 0);
        for y in 1..depth.height() as i64 - 1 {
            for x in 1..depth.width() as i64 - 1 {
                let px = crate::geometry::Pixel::new(x as i32, y as i32);
                let covered = depth.is_covered(px);
                let border = covered
                    && [(1, 0), (-1, 0), (0, 1), (0, -1)].iter().any(|(dx, dy)| {
                        !depth.is_covered(crate::geometry::Pixel::new(px.u + dx, px.v + dy))
                    });
                if !border {
                    continue;
                }
                total += 1;
                if (-1..=1).any(|dy| (-1..=1).any(|dx| edges.get(x + dx, y + dy))) {
                    near_edge += 1;
                }
            }
        }
        assert!(total > 50);
        assert!(
            near_edge as f64 >= 0.95 * total as f64,
            "{near_edge}/{total}"
        );
    }

    #[test]
    fn rendering_is_deterministic() {
        let scene = generate_scene(3, 2, 11).unwrap();
        let noise = NoiseSpec {
            point_sigma: 0.001,
            dropout: 0.1,
            speckle_density: 0.02,
        };
        assert_eq!(
            render_frames(&scene, 2, &noise).unwrap(),
            render_frames(&scene, 2, &noise).unwrap()
        );
        assert_eq!(
            render_edge_photo(&scene, &noise).unwrap(),
            render_edge_photo(&scene, &noise).unwrap()
        );
    }

    #[test]
    fn streams_differ() {
        let a: Vec<u64> = (0..4).map(|s| rng_stream(7, s).next_u64()).collect();
        for i in 0..4 {
            for j in i + 1..4 {
                assert_ne!(a[i], a[j]);
            }
        }
    }
}
