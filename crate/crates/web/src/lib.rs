//! Browser demo: a single synthetic nut, its Scharr edge image, the yaw
//! sweep and the projected model at any yaw.
//!
//! [`DemoState`] holds the logic and is usable natively; [`Demo`] is the
//! thin wasm-bindgen wrapper the page talks to. Images are returned as
//! RGBA bytes of a window centred on the nut.

use nutpose_core::cloud::fix_centroid_z;
use nutpose_core::config::PipelineConfig;
use nutpose_core::geometry::Point3;
use nutpose_core::imaging::{class_color, BinaryEdgeImage, GrayImage};
use nutpose_core::matching::{score_pose, MatchReport};
use nutpose_core::pipeline::Estimator;
use nutpose_core::synth::{render_edge_photo, NoiseSpec, SceneGenerator};
use nutpose_core::Result as CoreResult;
use wasm_bindgen::prelude::*;

pub const VIEW_WIDTH: usize = 200;
pub const VIEW_HEIGHT: usize = 150;

/// A photo window in image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct View {
    pub x0: usize,
    pub y0: usize,
    pub width: usize,
    pub height: usize,
}

impl View {
    fn around(cx: i32, cy: i32, image_w: usize, image_h: usize) -> Self {
        let width = VIEW_WIDTH.min(image_w);
        let height = VIEW_HEIGHT.min(image_h);
        let clamp = |c: i32, span: usize, limit: usize| {
            (c - span as i32 / 2).clamp(0, (limit - span) as i32) as usize
        };
        Self {
            x0: clamp(cx, width, image_w),
            y0: clamp(cy, height, image_h),
            width,
            height,
        }
    }

    fn rgba(&self, mut pixel: impl FnMut(usize, usize) -> [u8; 3]) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.width * self.height * 4);
        for y in self.y0..self.y0 + self.height {
            for x in self.x0..self.x0 + self.width {
                out.extend_from_slice(&pixel(x, y));
                out.push(255);
            }
        }
        out
    }
}

pub struct DemoState {
    estimator: Estimator,
    photo: GrayImage,
    edges: BinaryEdgeImage,
    centre: Point3,
    true_yaw: f64,
    view: View,
}

impl DemoState {
    /// One nut at the table centre with the given yaw; `speckle` is the
    /// fraction of photo pixels replaced by noise.
    pub fn new(seed: u64, yaw: f64, speckle: f64) -> CoreResult<Self> {
        let estimator = Estimator::new(PipelineConfig::default())?;
        let generator = SceneGenerator::new(
            estimator.config.filter.table_height,
            estimator.camera,
            estimator.config.nut,
        );
        let scene = generator.single_nut(yaw, seed)?;
        let noise = NoiseSpec {
            speckle_density: speckle,
            ..NoiseSpec::default()
        };
        let photo = render_edge_photo(&scene, &noise)?;
        let edges = estimator.edges(&photo)?;
        let centre = fix_centroid_z(&Point3::origin(), &estimator.config.filter);
        let (px, _) = estimator.camera.project(&centre)?;
        let view = View::around(px.u, px.v, photo.width(), photo.height());
        Ok(Self {
            true_yaw: scene.objects[0].canonical_yaw,
            estimator,
            photo,
            edges,
            centre,
            view,
        })
    }

    pub fn view(&self) -> View {
        self.view
    }

    pub fn true_yaw(&self) -> f64 {
        self.true_yaw
    }

    /// Re-binarizes the photo at a new Scharr threshold.
    pub fn set_threshold(&mut self, threshold: f32) -> CoreResult<()> {
        let mut config = self.estimator.config;
        config.edge_threshold = threshold;
        self.estimator = Estimator::new(config)?;
        self.edges = self.estimator.edges(&self.photo)?;
        Ok(())
    }

    pub fn edge_pixels(&self) -> usize {
        self.edges.count_ones()
    }

    pub fn photo_rgba(&self) -> Vec<u8> {
        self.view.rgba(|x, y| [self.photo.get(x, y); 3])
    }

    pub fn edges_rgba(&self) -> Vec<u8> {
        self.view.rgba(|x, y| {
            if self.edges.get(x as i64, y as i64) {
                [255; 3]
            } else {
                [0; 3]
            }
        })
    }

    pub fn sweep(&self) -> CoreResult<MatchReport> {
        self.estimator.estimate_one(0, &self.centre, &self.edges)
    }

    pub fn score_at(&self, yaw: f64) -> CoreResult<f64> {
        let c = &self.estimator.config;
        let pts = self.estimator.model.classify_at(
            &self.centre,
            yaw,
            &self.estimator.camera,
            c.silhouette_eps,
        )?;
        Ok(score_pose(&pts, &self.edges, &c.hit)?.pooled.ratio)
    }

    /// The photo with the model's classified edges at `yaw` painted on.
    pub fn overlay_rgba(&self, yaw: f64) -> CoreResult<Vec<u8>> {
        let c = &self.estimator.config;
        let pts = self.estimator.model.classify_at(
            &self.centre,
            yaw,
            &self.estimator.camera,
            c.silhouette_eps,
        )?;
        let mut rgba = self.photo_rgba();
        let v = self.view;
        for p in pts {
            let (x, y) = (
                p.pixel.u as i64 - v.x0 as i64,
                p.pixel.v as i64 - v.y0 as i64,
            );
            if (0..v.width as i64).contains(&x) && (0..v.height as i64).contains(&y) {
                let at = (y as usize * v.width + x as usize) * 4;
                rgba[at..at + 3].copy_from_slice(&class_color(p.class));
            }
        }
        Ok(rgba)
    }
}

fn js_err(e: nutpose_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Demo {
    state: DemoState,
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32, yaw: f64, speckle: f64) -> Result<Demo, JsError> {
        DemoState::new(u64::from(seed), yaw, speckle)
            .map(|state| Demo { state })
            .map_err(js_err)
    }

    pub fn width(&self) -> usize {
        self.state.view().width
    }

    pub fn height(&self) -> usize {
        self.state.view().height
    }

    #[wasm_bindgen(js_name = trueYaw)]
    pub fn true_yaw(&self) -> f64 {
        self.state.true_yaw()
    }

    #[wasm_bindgen(js_name = photoRgba)]
    pub fn photo_rgba(&self) -> Vec<u8> {
        self.state.photo_rgba()
    }

    /// Binarizes at `threshold` and returns the edge window.
    #[wasm_bindgen(js_name = edgesRgba)]
    pub fn edges_rgba(&mut self, threshold: f32) -> Result<Vec<u8>, JsError> {
        self.state.set_threshold(threshold).map_err(js_err)?;
        Ok(self.state.edges_rgba())
    }

    #[wasm_bindgen(js_name = edgePixels)]
    pub fn edge_pixels(&self) -> usize {
        self.state.edge_pixels()
    }

    /// Flattened `[yaw, score, yaw, score, …]` over the default grid.
    pub fn sweep(&self) -> Result<Vec<f64>, JsError> {
        let report = self.state.sweep().map_err(js_err)?;
        Ok(report.per_yaw.iter().flatten().copied().collect())
    }

    #[wasm_bindgen(js_name = bestYaw)]
    pub fn best_yaw(&self) -> Result<f64, JsError> {
        self.state.sweep().map(|r| r.yaw).map_err(js_err)
    }

    #[wasm_bindgen(js_name = scoreAt)]
    pub fn score_at(&self, yaw: f64) -> Result<f64, JsError> {
        self.state.score_at(yaw).map_err(js_err)
    }

    #[wasm_bindgen(js_name = overlayRgba)]
    pub fn overlay_rgba(&self, yaw: f64) -> Result<Vec<u8>, JsError> {
        self.state.overlay_rgba(yaw).map_err(js_err)
    }
}
