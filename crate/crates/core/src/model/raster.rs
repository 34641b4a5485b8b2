use crate::geometry::{apply_pose, Camera, Pixel, Pose, MIN_DEPTH};

use super::TriMesh;

/// Per-pixel camera-frame depth in meters, `+inf` where nothing was drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    width: usize,
    height: usize,
    depth: Vec<f64>,
}

impl DepthImage {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            depth: vec![f64::INFINITY; width * height],
        }
    }

    pub fn for_camera(camera: &Camera) -> Self {
        Self::empty(
            camera.intrinsics.width as usize,
            camera.intrinsics.height as usize,
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.depth
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.depth[y * self.width + x]
    }

    /// Depth at a possibly out-of-bounds pixel; outside reads as `+inf`.
    pub fn at(&self, px: Pixel) -> f64 {
        if px.u < 0 || px.v < 0 || px.u as usize >= self.width || px.v as usize >= self.height {
            return f64::INFINITY;
        }
        self.depth[px.v as usize * self.width + px.u as usize]
    }

    pub fn is_covered(&self, px: Pixel) -> bool {
        self.at(px).is_finite()
    }

    fn write_min(&mut self, x: usize, y: usize, z: f64) {
        let slot = &mut self.depth[y * self.width + x];
        if z < *slot {
            *slot = z;
        }
    }
}

/// Z-buffer rendering of `mesh` placed at `pose`.
pub fn render_depth(mesh: &TriMesh, pose: &Pose, camera: &Camera) -> DepthImage {
    let mut img = DepthImage::for_camera(camera);
    render_depth_into(&mut img, mesh, pose, camera);
    img
}

/// Rasterizes into an existing buffer, keeping the nearer depth per pixel.
/// Pixel (u, v) samples the continuous image point (u, v). Depth is
/// interpolated perspective-correctly (linear in 1/z). Triangles with a
/// vertex at or behind the camera plane are dropped.
pub fn render_depth_into(img: &mut DepthImage, mesh: &TriMesh, pose: &Pose, camera: &Camera) {
    let screen: Vec<Option<(f64, f64, f64)>> = mesh
        .vertices
        .iter()
        .map(|v| {
            let pc = camera.extrinsics.to_camera(&apply_pose(pose, v));
            camera.project_camera_frame(&pc)
        })
        .collect();

    for tri in &mesh.triangles {
        let (Some(a), Some(b), Some(c)) = (screen[tri[0]], screen[tri[1]], screen[tri[2]]) else {
            continue;
        };
        rasterize_triangle(img, a, b, c);
    }
}

fn rasterize_triangle(
    img: &mut DepthImage,
    a: (f64, f64, f64),
    b: (f64, f64, f64),
    c: (f64, f64, f64),
) {
    let area = (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
    if area.abs() < 1e-12 {
        return;
    }
    let (w, h) = (img.width as f64, img.height as f64);
    let x0 = a.0.min(b.0).min(c.0).ceil().max(0.0);
    let x1 = a.0.max(b.0).max(c.0).floor().min(w - 1.0);
    let y0 = a.1.min(b.1).min(c.1).ceil().max(0.0);
    let y1 = a.1.max(b.1).max(c.1).floor().min(h - 1.0);
    if x0 > x1 || y0 > y1 {
        return;
    }
    let (iza, izb, izc) = (
        1.0 / a.2.max(MIN_DEPTH),
        1.0 / b.2.max(MIN_DEPTH),
        1.0 / c.2.max(MIN_DEPTH),
    );
    let edge = |p: (f64, f64, f64), q: (f64, f64, f64), x: f64, y: f64| {
        (q.0 - p.0) * (y - p.1) - (q.1 - p.1) * (x - p.0)
    };
    for y in y0 as usize..=y1 as usize {
        let fy = y as f64;
        for x in x0 as usize..=x1 as usize {
            let fx = x as f64;
            let la = edge(b, c, fx, fy) / area;
            let lb = edge(c, a, fx, fy) / area;
            let lc = 1.0 - la - lb;
            if la < 0.0 || lb < 0.0 || lc < 0.0 {
                continue;
            }
            let inv_z = la * iza + lb * izb + lc * izc;
            if inv_z > 0.0 {
                img.write_min(x, y, 1.0 / inv_z);
            }
        }
    }
}
