//! Pipeline configuration as a `section.key = value` text file.
//!
//! Every key is optional and defaults to the built-in value; unknown keys
//! are rejected. [`PipelineConfig::dump`] prints every effective value and
//! parses back to an identical config.

use nalgebra::Vector3;

use crate::cloud::FilterParams;
use crate::geometry::{Camera, CameraExtrinsics, CameraIntrinsics, Point3};
use crate::imaging::DEFAULT_EDGE_THRESHOLD;
use crate::matching::{HitParams, YawGrid};
use crate::model::{NutParams, DEFAULT_DIHEDRAL_THRESHOLD, DEFAULT_SILHOUETTE_EPS};
use crate::{Error, Result};

/// Camera given by intrinsics plus eye and look-at target in world
/// coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraSetup {
    pub intrinsics: CameraIntrinsics,
    pub eye: Point3,
    pub target: Point3,
}

impl CameraSetup {
    pub fn default_for_table(table_height: f64) -> Self {
        Self {
            intrinsics: CameraIntrinsics::default(),
            eye: Point3::new(-1.0, 0.0, table_height + 0.6),
            target: Point3::new(0.0, 0.0, table_height),
        }
    }

    pub fn camera(&self) -> Result<Camera> {
        self.intrinsics.validate()?;
        Ok(Camera {
            intrinsics: self.intrinsics,
            extrinsics: CameraExtrinsics::look_at(&self.eye, &self.target)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub filter: FilterParams,
    pub nut: NutParams,
    pub camera: CameraSetup,
    pub hit: HitParams,
    pub yaw_grid: YawGrid,
    pub edge_threshold: f32,
    pub dihedral_threshold: f64,
    pub silhouette_eps: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let filter = FilterParams::default();
        Self {
            filter,
            nut: NutParams::default(),
            camera: CameraSetup::default_for_table(filter.table_height),
            hit: HitParams::default(),
            yaw_grid: YawGrid::default(),
            edge_threshold: DEFAULT_EDGE_THRESHOLD,
            dihedral_threshold: DEFAULT_DIHEDRAL_THRESHOLD,
            silhouette_eps: DEFAULT_SILHOUETTE_EPS,
        }
    }
}

fn parse_f64(v: &str) -> std::result::Result<f64, String> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| format!("expected a number, got {v:?}"))
}

fn parse_usize(v: &str) -> std::result::Result<usize, String> {
    v.parse()
        .map_err(|_| format!("expected a non-negative integer, got {v:?}"))
}

fn parse_triple(v: &str) -> std::result::Result<[f64; 3], String> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated numbers, got {v:?}"));
    }
    Ok([
        parse_f64(parts[0])?,
        parse_f64(parts[1])?,
        parse_f64(parts[2])?,
    ])
}

fn triple(v: impl IntoIterator<Item = f64>) -> String {
    v.into_iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse_line(n + 1, "expected key = value"))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|m| Error::parse_line(n + 1, m))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        let f = &mut self.filter;
        match key {
            "filter.min_points" => f.min_points = parse_usize(v)?,
            "filter.min_heights" => f.min_heights = parse_f64(v)?,
            "filter.max_heights" => f.max_heights = parse_f64(v)?,
            "filter.distance_tolerance" => f.distance_tolerance = parse_f64(v)?,
            "filter.centroid_merge_dist" => f.centroid_merge_dist = parse_f64(v)?,
            "filter.n_frames" => f.n_frames = parse_usize(v)?,
            "filter.table_height" => f.table_height = parse_f64(v)?,
            "filter.nut_height" => f.nut_height = parse_f64(v)?,
            "filter.nut_ref_dims" => f.nut_ref_dims = Vector3::from(parse_triple(v)?),
            "filter.dim_tolerance" => f.dim_tolerance = parse_f64(v)?,
            "nut.across_flats" => self.nut.across_flats = parse_f64(v)?,
            "nut.height" => self.nut.height = parse_f64(v)?,
            "nut.bore_radius" => self.nut.bore_radius = parse_f64(v)?,
            "nut.samples_per_meter" => self.nut.samples_per_meter = parse_f64(v)?,
            "camera.fx" => self.camera.intrinsics.fx = parse_f64(v)?,
            "camera.fy" => self.camera.intrinsics.fy = parse_f64(v)?,
            "camera.cx" => self.camera.intrinsics.cx = parse_f64(v)?,
            "camera.cy" => self.camera.intrinsics.cy = parse_f64(v)?,
            "camera.width" => {
                self.camera.intrinsics.width = v.parse().map_err(|_| format!("bad width {v:?}"))?
            }
            "camera.height" => {
                self.camera.intrinsics.height =
                    v.parse().map_err(|_| format!("bad height {v:?}"))?
            }
            "camera.eye" => self.camera.eye = Point3::from(parse_triple(v)?),
            "camera.target" => self.camera.target = Point3::from(parse_triple(v)?),
            "matching.hit_threshold" => self.hit.hit_threshold = parse_f64(v)?,
            "matching.yaw_start" => self.yaw_grid.start = parse_f64(v)?,
            "matching.yaw_end" => self.yaw_grid.end = parse_f64(v)?,
            "matching.yaw_step" => self.yaw_grid.step = parse_f64(v)?,
            "imaging.edge_threshold" => {
                self.edge_threshold = v
                    .parse::<f32>()
                    .ok()
                    .filter(|t| t.is_finite() && *t >= 0.0)
                    .ok_or_else(|| format!("bad threshold {v:?}"))?
            }
            "model.dihedral_threshold" => self.dihedral_threshold = parse_f64(v)?,
            "model.silhouette_eps" => self.silhouette_eps = parse_f64(v)?,
            _ => return Err(format!("unknown config key {key:?}")),
        }
        Ok(())
    }

    /// Effective values of every key, in file order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let f = &self.filter;
        let i = &self.camera.intrinsics;
        vec![
            ("filter.min_points", f.min_points.to_string()),
            ("filter.min_heights", f.min_heights.to_string()),
            ("filter.max_heights", f.max_heights.to_string()),
            (
                "filter.distance_tolerance",
                f.distance_tolerance.to_string(),
            ),
            (
                "filter.centroid_merge_dist",
                f.centroid_merge_dist.to_string(),
            ),
            ("filter.n_frames", f.n_frames.to_string()),
            ("filter.table_height", f.table_height.to_string()),
            ("filter.nut_height", f.nut_height.to_string()),
            (
                "filter.nut_ref_dims",
                triple(f.nut_ref_dims.iter().copied()),
            ),
            ("filter.dim_tolerance", f.dim_tolerance.to_string()),
            ("nut.across_flats", self.nut.across_flats.to_string()),
            ("nut.height", self.nut.height.to_string()),
            ("nut.bore_radius", self.nut.bore_radius.to_string()),
            (
                "nut.samples_per_meter",
                self.nut.samples_per_meter.to_string(),
            ),
            ("camera.fx", i.fx.to_string()),
            ("camera.fy", i.fy.to_string()),
            ("camera.cx", i.cx.to_string()),
            ("camera.cy", i.cy.to_string()),
            ("camera.width", i.width.to_string()),
            ("camera.height", i.height.to_string()),
            ("camera.eye", triple(self.camera.eye.iter().copied())),
            ("camera.target", triple(self.camera.target.iter().copied())),
            ("matching.hit_threshold", self.hit.hit_threshold.to_string()),
            ("matching.yaw_start", self.yaw_grid.start.to_string()),
            ("matching.yaw_end", self.yaw_grid.end.to_string()),
            ("matching.yaw_step", self.yaw_grid.step.to_string()),
            ("imaging.edge_threshold", self.edge_threshold.to_string()),
            (
                "model.dihedral_threshold",
                self.dihedral_threshold.to_string(),
            ),
            ("model.silhouette_eps", self.silhouette_eps.to_string()),
        ]
    }

    pub fn dump(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.filter.validate()?;
        self.nut.validate()?;
        self.camera.camera()?;
        self.hit.validate()?;
        self.yaw_grid.validate()?;
        if !(self.dihedral_threshold > 0.0 && self.dihedral_threshold < std::f64::consts::PI) {
            return Err(Error::invalid("dihedral_threshold must lie in (0, π)"));
        }
        if !(self.edge_threshold.is_finite() && self.edge_threshold >= 0.0) {
            return Err(Error::invalid(
                "imaging.edge_threshold must be a nonnegative number",
            ));
        }
        if !(self.silhouette_eps >= 0.0) {
            return Err(Error::invalid("silhouette_eps must be nonnegative"));
        }
        Ok(())
    }
}
