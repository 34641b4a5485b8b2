use serde::{Deserialize, Serialize};

use crate::geometry::{apply_pose, project, Camera, Pixel, Point3, Pose};
use crate::{Error, Result};

use super::{
    build_hex_nut, extract_feature_edges, render_depth, DepthImage, EdgeSample, EdgeTag, NutParams,
    TriMesh,
};

/// Per-pose class of an edge sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeClass {
    /// On an open border of the mesh.
    Boundary,
    /// On the visible silhouette, next to background.
    Occluding,
    /// Hidden behind nearer geometry.
    Occluded,
    /// Visible crease inside the silhouette.
    HighCurvature,
}

impl EdgeClass {
    pub const ALL: [EdgeClass; 4] = [
        EdgeClass::Boundary,
        EdgeClass::Occluding,
        EdgeClass::Occluded,
        EdgeClass::HighCurvature,
    ];

    pub fn code(self) -> u8 {
        match self {
            EdgeClass::Boundary => 0,
            EdgeClass::Occluding => 1,
            EdgeClass::Occluded => 2,
            EdgeClass::HighCurvature => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifiedPoint {
    pub pixel: Pixel,
    pub depth: f64,
    pub class: EdgeClass,
}

/// Classifies edge samples of a model placed at `pose`, given the depth
/// image rendered from the same pose and camera.
///
/// Boundary tags win outright. Otherwise a sample deeper than the z-buffer
/// at its pixel by more than `silhouette_eps` is Occluded, one whose 3×3
/// pixel window touches empty depth is Occluding, and the rest are
/// HighCurvature. Samples behind the camera are dropped.
pub fn classify_edges(
    samples: &[EdgeSample],
    pose: &Pose,
    camera: &Camera,
    depth: &DepthImage,
    silhouette_eps: f64,
) -> Result<Vec<ClassifiedPoint>> {
    let intr = &camera.intrinsics;
    if depth.width() != intr.width as usize || depth.height() != intr.height as usize {
        return Err(Error::invalid(format!(
            "depth image is {}x{}, camera is {}x{}",
            depth.width(),
            depth.height(),
            intr.width,
            intr.height
        )));
    }
    let mut out = Vec::with_capacity(samples.len());
    for s in samples {
        let world = apply_pose(pose, &s.point);
        let Ok((pixel, d)) = project(&world, intr, &camera.extrinsics) else {
            continue;
        };
        let class = if s.tag == EdgeTag::Boundary {
            EdgeClass::Boundary
        } else if d > depth.at(pixel) + silhouette_eps {
            EdgeClass::Occluded
        } else if on_silhouette(depth, pixel) {
            EdgeClass::Occluding
        } else {
            EdgeClass::HighCurvature
        };
        out.push(ClassifiedPoint {
            pixel,
            depth: d,
            class,
        });
    }
    Ok(out)
}

fn on_silhouette(depth: &DepthImage, px: Pixel) -> bool {
    (-1..=1).any(|dv| (-1..=1).any(|du| !depth.is_covered(Pixel::new(px.u + du, px.v + dv))))
}

/// A mesh together with its sampled feature edges.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeModel {
    pub mesh: TriMesh,
    pub samples: Vec<EdgeSample>,
}

impl EdgeModel {
    pub fn from_mesh(
        mesh: TriMesh,
        dihedral_threshold: f64,
        samples_per_meter: f64,
    ) -> Result<Self> {
        mesh.validate()?;
        let samples = extract_feature_edges(&mesh, dihedral_threshold, samples_per_meter);
        Ok(Self { mesh, samples })
    }

    pub fn hex_nut(params: &NutParams, dihedral_threshold: f64) -> Result<Self> {
        Self::from_mesh(
            build_hex_nut(params)?,
            dihedral_threshold,
            params.samples_per_meter,
        )
    }

    /// Renders the model at `pose` and classifies every sample.
    pub fn classify(
        &self,
        pose: &Pose,
        camera: &Camera,
        silhouette_eps: f64,
    ) -> Result<Vec<ClassifiedPoint>> {
        let depth = render_depth(&self.mesh, pose, camera);
        classify_edges(&self.samples, pose, camera, &depth, silhouette_eps)
    }

    /// Model placed at `centroid` with yaw `yaw`.
    pub fn classify_at(
        &self,
        centroid: &Point3,
        yaw: f64,
        camera: &Camera,
        eps: f64,
    ) -> Result<Vec<ClassifiedPoint>> {
        self.classify(&Pose::new(*centroid, yaw), camera, eps)
    }
}
