//! End-to-end helpers tying the modules together.

use crate::cloud::{self, Cluster, Label, PointCloudFrame, Segmentation};
use crate::config::PipelineConfig;
use crate::geometry::{Camera, Point3};
use crate::imaging::{edge_image, BinaryEdgeImage, GrayImage};
use crate::matching::{sweep_yaw, MatchReport, PlacedModel};
use crate::model::{ClassifiedPoint, EdgeModel};
use crate::{Error, Result};

/// Everything needed to score nuts against one photo.
pub struct Estimator {
    pub config: PipelineConfig,
    pub camera: Camera,
    pub model: EdgeModel,
}

impl Estimator {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            camera: config.camera.camera()?,
            model: EdgeModel::hex_nut(&config.nut, config.dihedral_threshold)?,
            config,
        })
    }

    pub fn preprocess(&self, frames: &[PointCloudFrame]) -> Result<Segmentation> {
        cloud::preprocess(frames, &self.config.filter)
    }

    /// Binary edge image of a photo, which must match the camera size.
    pub fn edges(&self, photo: &GrayImage) -> Result<BinaryEdgeImage> {
        let i = &self.camera.intrinsics;
        if photo.width() != i.width as usize || photo.height() != i.height as usize {
            return Err(Error::invalid(format!(
                "photo is {}x{}, camera expects {}x{}",
                photo.width(),
                photo.height(),
                i.width,
                i.height
            )));
        }
        edge_image(photo, self.config.edge_threshold)
    }

    pub fn placed(&self, centroid: Point3) -> PlacedModel<'_> {
        PlacedModel {
            model: &self.model,
            camera: &self.camera,
            centroid,
            silhouette_eps: self.config.silhouette_eps,
        }
    }

    pub fn estimate_one(
        &self,
        nut_id: usize,
        centroid: &Point3,
        edges: &BinaryEdgeImage,
    ) -> Result<MatchReport> {
        sweep_yaw(
            nut_id,
            centroid,
            &self.placed(*centroid),
            edges,
            &self.config.yaw_grid,
            &self.config.hit,
        )
    }

    /// One report per Nut cluster, `nut_id` being the cluster's index.
    pub fn estimate(
        &self,
        clusters: &[Cluster],
        edges: &BinaryEdgeImage,
    ) -> Result<Vec<MatchReport>> {
        clusters
            .iter()
            .enumerate()
            .filter(|(_, c)| c.label == Label::Nut)
            .map(|(i, c)| self.estimate_one(i, &c.centroid, edges))
            .collect()
    }

    /// Model edges at a report's best pose, as drawn in overlays.
    pub fn best_pose_edges(&self, report: &MatchReport) -> Result<Vec<ClassifiedPoint>> {
        self.model.classify_at(
            &report.centroid_point(),
            report.yaw,
            &self.camera,
            self.config.silhouette_eps,
        )
    }
}
