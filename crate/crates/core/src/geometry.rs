//! Rigid transforms, yaw canonicalization and pinhole projection.
//!
//! World frame is z-up with the table support plane at a configured height.
//! Camera frame follows the usual vision convention: x right, y down,
//! z along the optical axis.

use nalgebra::{Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type Point3 = nalgebra::Point3<f64>;

/// Rotational symmetry period of a hex nut about its axis (60°).
pub const YAW_PERIOD: f64 = std::f64::consts::FRAC_PI_3;

const SEAM_EPS: f64 = 1e-12;

/// Camera-frame depth below which a point counts as behind the camera.
pub const MIN_DEPTH: f64 = 1e-9;

/// Position plus yaw about the world z-axis. Roll and pitch are fixed to
/// the table plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Point3,
    pub yaw: f64,
}

impl Pose {
    pub fn new(position: Point3, yaw: f64) -> Self {
        Self { position, yaw }
    }

    /// The same pose with its yaw folded into `[0, π/3)`.
    pub fn canonical(&self) -> Result<Self> {
        Ok(Self {
            position: self.position,
            yaw: wrap_yaw(self.yaw)?,
        })
    }
}

/// Folds `yaw` into the symmetry period `[0, π/3)`.
pub fn wrap_yaw(yaw: f64) -> Result<f64> {
    if !yaw.is_finite() {
        return Err(Error::invalid(format!("yaw must be finite, got {yaw}")));
    }
    let r = yaw.rem_euclid(YAW_PERIOD);
    // values within rounding distance of the seam belong to 0
    Ok(if r >= YAW_PERIOD - SEAM_EPS { 0.0 } else { r })
}

/// Shortest distance between two yaws on the symmetry circle.
pub fn yaw_distance(a: f64, b: f64) -> Result<f64> {
    let d = wrap_yaw(a - b)?;
    Ok(d.min(YAW_PERIOD - d))
}

/// Maps a model-frame point into the world: rotate by yaw about z, then
/// translate to the pose position.
pub fn apply_pose(pose: &Pose, p: &Point3) -> Point3 {
    let (s, c) = pose.yaw.sin_cos();
    Point3::new(
        c * p.x - s * p.y + pose.position.x,
        s * p.x + c * p.y + pose.position.y,
        p.z + pose.position.z,
    )
}

/// Pinhole intrinsics, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    pub fn validate(&self) -> Result<()> {
        let ok = self.fx > 0.0
            && self.fy > 0.0
            && self.cx >= 0.0
            && self.cx < f64::from(self.width)
            && self.cy >= 0.0
            && self.cy < f64::from(self.height);
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("bad camera intrinsics {self:?}")))
        }
    }

    pub fn contains(&self, px: Pixel) -> bool {
        px.u >= 0 && px.v >= 0 && (px.u as u32) < self.width && (px.v as u32) < self.height
    }
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        Self {
            fx: 3000.0,
            fy: 3000.0,
            cx: 800.0,
            cy: 600.0,
            width: 1600,
            height: 1200,
        }
    }
}

/// World-to-camera rigid transform: `p_cam = rotation * p_world + translation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraExtrinsics {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl CameraExtrinsics {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let ext = Self {
            rotation,
            translation,
        };
        ext.validate()?;
        Ok(ext)
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Camera at `eye` with its optical axis through `target`. Image rows
    /// run downward along world `-z` as far as the view direction allows.
    pub fn look_at(eye: &Point3, target: &Point3) -> Result<Self> {
        let forward = target - eye;
        if forward.norm() < 1e-12 {
            return Err(Error::invalid("camera eye and target coincide"));
        }
        let forward = forward.normalize();
        let right = forward.cross(&Vector3::z());
        if right.norm() < 1e-9 {
            return Err(Error::invalid("camera may not look straight up or down"));
        }
        let right = right.normalize();
        let down = forward.cross(&right);
        let rotation =
            Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
        let translation = -(rotation * eye.coords);
        Self::new(rotation, translation)
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.rotation;
        let ortho = (r.transpose() * r - Matrix3::identity()).abs().max();
        let det = r.determinant();
        if ortho > 1e-9
            || (det - 1.0).abs() > 1e-9
            || !self.translation.iter().all(|t| t.is_finite())
        {
            return Err(Error::invalid(
                "camera rotation must be orthonormal with det +1",
            ));
        }
        Ok(())
    }

    pub fn to_camera(&self, p: &Point3) -> Point3 {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    /// Camera center in world coordinates.
    pub fn eye(&self) -> Point3 {
        Point3::from(-(self.rotation.transpose() * self.translation))
    }

    pub fn as_rotation(&self) -> Rotation3<f64> {
        Rotation3::from_matrix_unchecked(self.rotation)
    }
}

/// Intrinsics and extrinsics together.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub intrinsics: CameraIntrinsics,
    pub extrinsics: CameraExtrinsics,
}

impl Camera {
    /// The default rig: 1 m to the left (−x) of the table center, 0.6 m
    /// above the support plane, looking at the table center.
    pub fn default_for_table(table_height: f64) -> Self {
        let eye = Point3::new(-1.0, 0.0, table_height + 0.6);
        let target = Point3::new(0.0, 0.0, table_height);
        Self {
            intrinsics: CameraIntrinsics::default(),
            extrinsics: CameraExtrinsics::look_at(&eye, &target).expect("default rig is valid"),
        }
    }

    pub fn project(&self, p: &Point3) -> Result<(Pixel, f64)> {
        project(p, &self.intrinsics, &self.extrinsics)
    }

    /// Sub-pixel projection of a camera-frame point, no rounding.
    pub fn project_camera_frame(&self, pc: &Point3) -> Option<(f64, f64, f64)> {
        if pc.z <= MIN_DEPTH {
            return None;
        }
        let i = &self.intrinsics;
        Some((i.fx * pc.x / pc.z + i.cx, i.fy * pc.y / pc.z + i.cy, pc.z))
    }
}

/// Integer pixel coordinates (column, row). May lie outside the image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pixel {
    pub u: i32,
    pub v: i32,
}

impl Pixel {
    pub fn new(u: i32, v: i32) -> Self {
        Self { u, v }
    }
}

/// Projects a world point to a rounded pixel and its camera-frame depth.
/// Rounding is half away from zero.
pub fn project(
    p: &Point3,
    intr: &CameraIntrinsics,
    extr: &CameraExtrinsics,
) -> Result<(Pixel, f64)> {
    let pc = extr.to_camera(p);
    if pc.z <= MIN_DEPTH {
        return Err(Error::BehindCamera { depth: pc.z });
    }
    let u = (intr.fx * pc.x / pc.z + intr.cx).round();
    let v = (intr.fy * pc.y / pc.z + intr.cy).round();
    Ok((Pixel::new(u as i32, v as i32), pc.z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn pinhole_500() -> CameraIntrinsics {
        CameraIntrinsics {
            fx: 500.0,
            fy: 500.0,
            cx: 320.0,
            cy: 240.0,
            width: 640,
            height: 480,
        }
    }

    #[test]
    fn wrap_yaw_examples() {
        assert_eq!(wrap_yaw(0.0).unwrap(), 0.0);
        assert_eq!(wrap_yaw(PI / 3.0).unwrap(), 0.0);
        let expected = 1.2 - PI / 3.0;
        assert!((wrap_yaw(1.2).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.15280).abs() < 1e-5);
        assert!((wrap_yaw(-0.1).unwrap() - (PI / 3.0 - 0.1)).abs() < 1e-15);
    }

    #[test]
    fn wrap_yaw_rejects_non_finite() {
        assert!(matches!(wrap_yaw(f64::NAN), Err(Error::InvalidArgument(_))));
        assert!(wrap_yaw(f64::INFINITY).is_err());
    }

    #[test]
    fn tiny_negative_yaw_stays_in_range() {
        let w = wrap_yaw(-1e-300).unwrap();
        assert!((0.0..YAW_PERIOD).contains(&w));
    }

    #[test]
    fn apply_pose_examples() {
        let p = Point3::new(1.0, 0.0, 0.0);
        let id = Pose::new(Point3::origin(), 0.0);
        assert_eq!(apply_pose(&id, &p), p);

        let quarter = Pose::new(Point3::origin(), PI / 2.0);
        let q = apply_pose(&quarter, &p);
        assert!((q - Point3::new(0.0, 1.0, 0.0)).norm() < 1e-15);

        let pose = Pose::new(Point3::new(0.1, 0.2, 0.3), PI / 3.0);
        let r = apply_pose(&pose, &Point3::new(0.01, 0.0, 0.0));
        let expected = Point3::new(0.105, 0.2 + 0.01 * (PI / 3.0).sin(), 0.3);
        assert!((r - expected).norm() < 1e-15);
    }

    #[test]
    fn project_examples() {
        let intr = pinhole_500();
        let ext = CameraExtrinsics::identity();
        let (px, d) = project(&Point3::new(0.0, 0.0, 1.0), &intr, &ext).unwrap();
        assert_eq!((px, d), (Pixel::new(320, 240), 1.0));
        let (px, d) = project(&Point3::new(0.1, 0.0, 1.0), &intr, &ext).unwrap();
        assert_eq!((px, d), (Pixel::new(370, 240), 1.0));
        assert!(matches!(
            project(&Point3::new(0.0, 0.0, -1.0), &intr, &ext),
            Err(Error::BehindCamera { .. })
        ));
    }

    #[test]
    fn rounding_is_half_away_from_zero() {
        let intr = CameraIntrinsics {
            cx: 0.0,
            cy: 0.0,
            ..pinhole_500()
        };
        let ext = CameraExtrinsics::identity();
        // 500 * 0.001 = 0.5 exactly representable enough to land on the half.
        let (px, _) = project(&Point3::new(0.001, -0.001, 1.0), &intr, &ext).unwrap();
        assert_eq!(px, Pixel::new(1, -1));
    }

    #[test]
    fn look_at_points_optical_axis_at_target() {
        let cam = Camera::default_for_table(0.75);
        cam.extrinsics.validate().unwrap();
        let (px, depth) = cam.project(&Point3::new(0.0, 0.0, 0.75)).unwrap();
        assert_eq!(px, Pixel::new(800, 600));
        assert!((depth - (1.0f64 + 0.36).sqrt()).abs() < 1e-12);
        // higher points appear higher in the image (smaller row)
        let (up, _) = cam.project(&Point3::new(0.0, 0.0, 0.85)).unwrap();
        assert!(up.v < 600);
        // +y world is to the camera's left
        let (left, _) = cam.project(&Point3::new(0.0, 0.1, 0.75)).unwrap();
        assert!(left.u < 800);
        assert!((cam.extrinsics.eye() - Point3::new(-1.0, 0.0, 1.35)).norm() < 1e-12);
    }

    #[test]
    fn extrinsics_reject_non_rotation() {
        let m = Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0);
        assert!(CameraExtrinsics::new(m, Vector3::zeros()).is_err());
        let scaled = Matrix3::identity() * 1.01;
        assert!(CameraExtrinsics::new(scaled, Vector3::zeros()).is_err());
    }

    #[test]
    fn intrinsics_validation() {
        assert!(pinhole_500().validate().is_ok());
        let bad = CameraIntrinsics {
            cx: 640.0,
            ..pinhole_500()
        };
        assert!(bad.validate().is_err());
        let bad = CameraIntrinsics {
            fy: 0.0,
            ..pinhole_500()
        };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn wrap_is_idempotent(t in -1e4f64..1e4) {
            let w = wrap_yaw(t).unwrap();
            prop_assert!((0.0..YAW_PERIOD).contains(&w));
            prop_assert_eq!(wrap_yaw(w).unwrap(), w);
        }

        #[test]
        fn wrap_is_periodic(t in -100f64..100.0) {
            let a = wrap_yaw(t).unwrap();
            let b = wrap_yaw(t + YAW_PERIOD).unwrap();
            // compared on the circle so that both sides of the seam agree
            let d = (a - b).abs();
            prop_assert!(d.min(YAW_PERIOD - d) <= 1e-12);
        }

        #[test]
        fn apply_pose_is_rigid(
            x in -1f64..1.0, y in -1f64..1.0, z in -1f64..1.0, yaw in -10f64..10.0,
            a in prop::array::uniform3(-1f64..1.0), b in prop::array::uniform3(-1f64..1.0),
        ) {
            let pose = Pose::new(Point3::new(x, y, z), yaw);
            let pa = Point3::from(a);
            let pb = Point3::from(b);
            let before = (pa - pb).norm();
            let after = (apply_pose(&pose, &pa) - apply_pose(&pose, &pb)).norm();
            prop_assert!((before - after).abs() <= 1e-12);
        }

        #[test]
        fn projection_is_ray_invariant(x in -0.5f64..0.5, y in -0.5f64..0.5, z in 0.1f64..5.0) {
            let intr = pinhole_500();
            let ext = CameraExtrinsics::identity();
            let (p1, _) = project(&Point3::new(x, y, z), &intr, &ext).unwrap();
            let (p2, d2) = project(&Point3::new(2.0 * x, 2.0 * y, 2.0 * z), &intr, &ext).unwrap();
            prop_assert_eq!(p1, p2);
            prop_assert_eq!(d2, 2.0 * z);
        }
    }
}
