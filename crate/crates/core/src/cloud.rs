//! Point-cloud preprocessing: frame accumulation, height stripping,
//! Euclidean clustering, size filtering, centroid merging and
//! dimension-based classification.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use nalgebra::Vector3;
use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use crate::geometry::Point3;
use crate::{Error, Result};

/// Height of the screws in the scene, in meters.
pub const SCREW_HEIGHT: f64 = 0.12;

/// Clouds larger than this are clustered through a voxel hash instead of
/// the all-pairs scan.
const GRID_CLUSTER_MIN_POINTS: usize = 2000;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloudFrame {
    pub points: Vec<Point3>,
    pub frame_index: usize,
}

impl PointCloudFrame {
    pub fn new(points: Vec<Point3>, frame_index: usize) -> Self {
        Self {
            points,
            frame_index,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams {
    pub min_points: usize,
    /// Lower height bound above the support plane, inclusive.
    pub min_heights: f64,
    /// Upper height bound above the support plane, inclusive.
    pub max_heights: f64,
    /// Single-linkage distance for clustering.
    pub distance_tolerance: f64,
    pub centroid_merge_dist: f64,
    pub n_frames: usize,
    pub table_height: f64,
    pub nut_height: f64,
    /// Reference bounding box of a nut cloud after height stripping.
    pub nut_ref_dims: Vector3<f64>,
    pub dim_tolerance: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            min_points: 8,
            min_heights: 0.008,
            max_heights: 0.13,
            distance_tolerance: 0.01,
            centroid_merge_dist: 0.02,
            n_frames: 11,
            table_height: 0.75,
            nut_height: 0.012,
            nut_ref_dims: Vector3::new(0.030, 0.030, 0.006),
            dim_tolerance: 0.008,
        }
    }
}

impl FilterParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_points < 1 {
            return Err(Error::invalid("min_points must be at least 1"));
        }
        if !(0.0 <= self.min_heights && self.min_heights < self.max_heights) {
            return Err(Error::invalid("need 0 <= min_heights < max_heights"));
        }
        if !(self.distance_tolerance > 0.0) {
            return Err(Error::invalid("distance_tolerance must be positive"));
        }
        if !(self.centroid_merge_dist > 0.0) {
            return Err(Error::invalid("centroid_merge_dist must be positive"));
        }
        if self.n_frames < 1 {
            return Err(Error::invalid("n_frames must be at least 1"));
        }
        if !(self.nut_height > 0.0) || !(self.dim_tolerance >= 0.0) {
            return Err(Error::invalid(
                "nut_height must be positive and dim_tolerance nonnegative",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Nut,
    Screw,
    Washer,
    Unknown,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub points: Vec<Point3>,
    pub centroid: Point3,
    pub bbox_dims: Vector3<f64>,
    pub label: Label,
}

impl Cluster {
    /// Builds a cluster with centroid and bounding box computed from
    /// `points`, which must be non-empty.
    pub fn from_points(points: Vec<Point3>) -> Self {
        assert!(!points.is_empty(), "cluster needs at least one point");
        let n = points.len() as f64;
        let sum = points
            .iter()
            .fold(Vector3::zeros(), |acc, p| acc + p.coords);
        let mut lo = points[0].coords;
        let mut hi = lo;
        for p in &points[1..] {
            lo = lo.inf(&p.coords);
            hi = hi.sup(&p.coords);
        }
        Self {
            points,
            centroid: Point3::from(sum / n),
            bbox_dims: hi - lo,
            label: Label::Unknown,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Result of [`accumulate`]; `short` is set when fewer frames than
/// requested were available.
#[derive(Debug, Clone, PartialEq)]
pub struct Accumulation {
    pub frame: PointCloudFrame,
    pub frames_used: usize,
    pub short: bool,
}

/// Concatenates the first `n_frames` frames.
pub fn accumulate(frames: &[PointCloudFrame], n_frames: usize) -> Result<Accumulation> {
    if frames.is_empty() {
        return Err(Error::EmptyInput("no point-cloud frames"));
    }
    let used = n_frames.min(frames.len());
    let points = frames[..used]
        .iter()
        .flat_map(|f| f.points.iter().copied())
        .collect();
    Ok(Accumulation {
        frame: PointCloudFrame::new(points, frames[0].frame_index),
        frames_used: used,
        short: used < n_frames,
    })
}

/// Keeps points whose height above the support plane lies in
/// `[min_heights, max_heights]`.
pub fn strip_by_height(frame: &PointCloudFrame, params: &FilterParams) -> PointCloudFrame {
    let points = frame
        .points
        .iter()
        .filter(|p| {
            let h = p.z - params.table_height;
            params.min_heights <= h && h <= params.max_heights
        })
        .copied()
        .collect();
    PointCloudFrame::new(points, frame.frame_index)
}

/// Single-linkage clustering: connected components of the graph joining
/// points no farther apart than `distance_tolerance`.
///
/// Clusters are ordered by their first point in input order and keep
/// their points in input order.
pub fn cluster_points(frame: &PointCloudFrame, distance_tolerance: f64) -> Vec<Cluster> {
    let pts = &frame.points;
    let n = pts.len();
    let mut uf = UnionFind::<usize>::new(n);
    let tol2 = distance_tolerance * distance_tolerance;
    if n > GRID_CLUSTER_MIN_POINTS {
        link_via_grid(pts, distance_tolerance, &mut uf);
    } else {
        for i in 0..n {
            for j in i + 1..n {
                if (pts[i] - pts[j]).norm_squared() <= tol2 {
                    uf.union(i, j);
                }
            }
        }
    }
    group_by_root(pts, &mut uf)
}

fn link_via_grid(pts: &[Point3], tol: f64, uf: &mut UnionFind<usize>) {
    let tol2 = tol * tol;
    let cell = |p: &Point3| {
        (
            (p.x / tol).floor() as i64,
            (p.y / tol).floor() as i64,
            (p.z / tol).floor() as i64,
        )
    };
    let mut grid: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in pts.iter().enumerate() {
        grid.entry(cell(p)).or_default().push(i);
    }
    for (i, p) in pts.iter().enumerate() {
        let (cx, cy, cz) = cell(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let Some(bucket) = grid.get(&(cx + dx, cy + dy, cz + dz)) else {
                        continue;
                    };
                    for &j in bucket {
                        if j > i && (pts[i] - pts[j]).norm_squared() <= tol2 {
                            uf.union(i, j);
                        }
                    }
                }
            }
        }
    }
}

fn group_by_root(pts: &[Point3], uf: &mut UnionFind<usize>) -> Vec<Cluster> {
    let mut slot_of_root: HashMap<usize, usize> = HashMap::new();
    let mut groups: Vec<Vec<Point3>> = Vec::new();
    for (i, p) in pts.iter().enumerate() {
        let root = uf.find_mut(i);
        let slot = *slot_of_root.entry(root).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[slot].push(*p);
    }
    groups.into_iter().map(Cluster::from_points).collect()
}

pub fn filter_min_points(clusters: Vec<Cluster>, min_points: usize) -> Vec<Cluster> {
    clusters
        .into_iter()
        .filter(|c| c.len() >= min_points)
        .collect()
}

/// Transitively merges clusters whose centroids lie within
/// `centroid_merge_dist`, repeating until no two centroids are that close.
pub fn merge_by_centroid(mut clusters: Vec<Cluster>, centroid_merge_dist: f64) -> Vec<Cluster> {
    let d2 = centroid_merge_dist * centroid_merge_dist;
    loop {
        let n = clusters.len();
        let mut uf = UnionFind::<usize>::new(n);
        let mut merged_any = false;
        for i in 0..n {
            for j in i + 1..n {
                if (clusters[i].centroid - clusters[j].centroid).norm_squared() <= d2 {
                    merged_any |= uf.union(i, j);
                }
            }
        }
        if !merged_any {
            return clusters;
        }
        let mut slot_of_root: HashMap<usize, usize> = HashMap::new();
        let mut groups: Vec<Vec<Point3>> = Vec::new();
        for (i, c) in clusters.into_iter().enumerate() {
            let root = uf.find_mut(i);
            let slot = *slot_of_root.entry(root).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[slot].extend(c.points);
        }
        clusters = groups.into_iter().map(Cluster::from_points).collect();
    }
}

/// Labels a cluster by its bounding box. Screws are recognized first: taller
/// than 90% of a screw with a footprint no wider than a nut. Nuts need every
/// dimension within tolerance of the reference; washers have nut-like
/// height but a wider footprint.
pub fn classify_cluster(c: &Cluster, params: &FilterParams) -> Label {
    let dims = c.bbox_dims;
    let reference = params.nut_ref_dims;
    let tol = params.dim_tolerance;
    let within = |a: f64, b: f64| (a - b).abs() <= tol;
    let slim = dims.x <= reference.x + tol && dims.y <= reference.y + tol;
    if dims.z > SCREW_HEIGHT * 0.9 && slim {
        return Label::Screw;
    }
    if within(dims.x, reference.x) && within(dims.y, reference.y) && within(dims.z, reference.z) {
        return Label::Nut;
    }
    if within(dims.z, reference.z) && dims.x - reference.x > tol && dims.y - reference.y > tol {
        return Label::Washer;
    }
    Label::Unknown
}

/// Replaces the centroid height by the known height of a nut center
/// resting on the table.
pub fn fix_centroid_z(centroid: &Point3, params: &FilterParams) -> Point3 {
    Point3::new(
        centroid.x,
        centroid.y,
        params.table_height + params.nut_height / 2.0,
    )
}

/// Output of the full preprocessing chain.
#[derive(Debug, Clone)]
pub struct Segmentation {
    /// Labeled clusters; Nut centroids carry the fixed z.
    pub clusters: Vec<Cluster>,
    pub frames_used: usize,
    pub short_input: bool,
}

impl Segmentation {
    pub fn nuts(&self) -> impl Iterator<Item = &Cluster> {
        self.clusters.iter().filter(|c| c.label == Label::Nut)
    }
}

/// accumulate → strip → cluster → min-points filter → centroid merge →
/// classify → z-fix for nuts.
pub fn preprocess(frames: &[PointCloudFrame], params: &FilterParams) -> Result<Segmentation> {
    params.validate()?;
    let acc = accumulate(frames, params.n_frames)?;
    let stripped = strip_by_height(&acc.frame, params);
    let clusters = cluster_points(&stripped, params.distance_tolerance);
    let clusters = filter_min_points(clusters, params.min_points);
    let mut clusters = merge_by_centroid(clusters, params.centroid_merge_dist);
    for c in &mut clusters {
        c.label = classify_cluster(c, params);
        if c.label == Label::Nut {
            c.centroid = fix_centroid_z(&c.centroid, params);
        }
    }
    Ok(Segmentation {
        clusters,
        frames_used: acc.frames_used,
        short_input: acc.short,
    })
}

/// Parses one frame file: `x y z` per line, `#` comments and blank lines
/// skipped.
pub fn parse_frame(text: &str, frame_index: usize) -> Result<PointCloudFrame> {
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut coords = [0.0; 3];
        let mut fields = line.split_whitespace();
        for c in &mut coords {
            let tok = fields
                .next()
                .ok_or_else(|| Error::parse_line(i + 1, "expected three coordinates"))?;
            *c = tok
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse_line(i + 1, format!("bad coordinate {tok:?}")))?;
        }
        if fields.next().is_some() {
            return Err(Error::parse_line(i + 1, "more than three coordinates"));
        }
        points.push(Point3::from(coords));
    }
    Ok(PointCloudFrame::new(points, frame_index))
}

pub fn format_frame(frame: &PointCloudFrame) -> String {
    let mut out = String::with_capacity(frame.points.len() * 32);
    for p in &frame.points {
        out.push_str(&format!("{} {} {}\n", p.x, p.y, p.z));
    }
    out
}

pub fn frame_file_name(index: usize) -> String {
    format!("frame_{index:03}.xyz")
}

/// Reads every `frame_NNN.xyz` file of `dir`, sorted by index.
pub fn read_frame_dir(dir: &Path) -> Result<Vec<PointCloudFrame>> {
    let mut indexed = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let entry = entry?;
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        let Some(index) = name
            .strip_prefix("frame_")
            .and_then(|s| s.strip_suffix(".xyz"))
            .and_then(|s| s.parse::<usize>().ok())
        else {
            continue;
        };
        indexed.push((index, entry.path()));
    }
    indexed.sort();
    indexed
        .into_iter()
        .map(|(index, path)| {
            let text = std::fs::read_to_string(&path)?;
            parse_frame(&text, index)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn frame(points: &[[f64; 3]]) -> PointCloudFrame {
        PointCloudFrame::new(points.iter().map(|p| Point3::from(*p)).collect(), 0)
    }

    fn blob(center: [f64; 3], n: usize) -> Cluster {
        let pts = (0..n)
            .map(|i| Point3::new(center[0] + i as f64 * 1e-4, center[1], center[2]))
            .collect();
        Cluster::from_points(pts)
    }

    #[test]
    fn accumulate_examples() {
        let frames: Vec<_> = (0..11)
            .map(|k| PointCloudFrame::new(vec![Point3::new(k as f64, 0.0, 0.0); 10], k))
            .collect();
        let acc = accumulate(&frames, 11).unwrap();
        assert_eq!(acc.frame.points.len(), 110);
        assert!(!acc.short);

        let one = vec![PointCloudFrame::new(vec![Point3::origin(); 5], 0)];
        let acc = accumulate(&one, 1).unwrap();
        assert_eq!(acc.frame.points, one[0].points);

        let acc = accumulate(&frames[..3], 11).unwrap();
        assert_eq!(acc.frame.points.len(), 30);
        assert!(acc.short);
        assert_eq!(acc.frames_used, 3);

        assert!(matches!(accumulate(&[], 11), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn accumulate_takes_only_first_n() {
        let frames: Vec<_> = (0..15)
            .map(|k| PointCloudFrame::new(vec![Point3::origin(); 2], k))
            .collect();
        assert_eq!(accumulate(&frames, 11).unwrap().frame.points.len(), 22);
    }

    #[test]
    fn strip_examples() {
        let p = FilterParams {
            table_height: 0.0,
            ..FilterParams::default()
        };
        let f = frame(&[
            [0.0, 0.0, 0.005],
            [0.0, 0.0, 0.05],
            [0.0, 0.0, 0.008],
            [0.0, 0.0, 0.13],
            [0.0, 0.0, 0.2],
        ]);
        let kept = strip_by_height(&f, &p);
        let zs: Vec<f64> = kept.points.iter().map(|q| q.z).collect();
        assert_eq!(zs, vec![0.05, 0.008, 0.13]);
    }

    #[test]
    fn cluster_examples() {
        assert_eq!(
            cluster_points(&frame(&[[0.0, 0.0, 0.0], [0.0, 0.0, 0.01]]), 0.02).len(),
            1
        );
        assert_eq!(
            cluster_points(&frame(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]), 0.02).len(),
            2
        );
        let chain: Vec<[f64; 3]> = (0..5).map(|i| [0.015 * i as f64, 0.0, 0.0]).collect();
        let c = cluster_points(&frame(&chain), 0.02);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].len(), 5);
        assert!(cluster_points(&frame(&[]), 0.02).is_empty());
    }

    #[test]
    fn cluster_centroid_and_bbox() {
        let c = Cluster::from_points(vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(0.2, -0.1, 0.4),
        ]);
        assert_eq!(c.centroid, Point3::new(0.1, -0.05, 0.2));
        assert_eq!(c.bbox_dims, Vector3::new(0.2, 0.1, 0.4));
    }

    #[test]
    fn min_points_examples() {
        assert!(filter_min_points(vec![blob([0.0; 3], 7)], 8).is_empty());
        assert_eq!(filter_min_points(vec![blob([0.0; 3], 8)], 8).len(), 1);
        let sizes: Vec<usize> = filter_min_points(
            vec![
                blob([0.0; 3], 3),
                blob([1.0, 0.0, 0.0], 8),
                blob([2.0, 0.0, 0.0], 20),
            ],
            8,
        )
        .iter()
        .map(Cluster::len)
        .collect();
        assert_eq!(sizes, vec![8, 20]);
    }

    #[test]
    fn merge_examples() {
        let a = Cluster::from_points(vec![Point3::new(0.0, 0.0, 0.0)]);
        let b = Cluster::from_points(vec![Point3::new(0.005, 0.0, 0.0)]);
        let merged = merge_by_centroid(vec![a.clone(), b.clone()], 0.01);
        assert_eq!(merged.len(), 1);
        assert_eq!(merged[0].len(), 2);

        let far = Cluster::from_points(vec![Point3::new(0.5, 0.0, 0.0)]);
        assert_eq!(merge_by_centroid(vec![a.clone(), far], 0.01).len(), 2);

        // A-B and B-C close, A-C far
        let c = Cluster::from_points(vec![Point3::new(0.010, 0.0, 0.0)]);
        let chain = merge_by_centroid(vec![a, b, c], 0.006);
        assert_eq!(chain.len(), 1);
        assert_eq!(chain[0].len(), 3);
        assert!((chain[0].centroid.x - 0.005).abs() < 1e-15);
    }

    #[test]
    fn classify_examples() {
        let p = FilterParams::default();
        let mut c = blob([0.0; 3], 3);
        c.bbox_dims = p.nut_ref_dims;
        assert_eq!(classify_cluster(&c, &p), Label::Nut);
        c.bbox_dims = Vector3::new(0.03, 0.03, 0.125);
        assert_eq!(classify_cluster(&c, &p), Label::Screw);
        c.bbox_dims = Vector3::new(0.5, 0.5, 0.5);
        assert_eq!(classify_cluster(&c, &p), Label::Unknown);
        c.bbox_dims = Vector3::new(0.012, 0.012, 0.115);
        assert_eq!(classify_cluster(&c, &p), Label::Screw);
        c.bbox_dims = Vector3::new(0.06, 0.06, p.nut_ref_dims.z);
        assert_eq!(classify_cluster(&c, &p), Label::Washer);
        c.bbox_dims = Vector3::new(0.02, 0.02, 0.02);
        assert_eq!(classify_cluster(&c, &p), Label::Unknown);
    }

    #[test]
    fn oversized_low_box_is_unknown() {
        let p = FilterParams::default();
        let mut c = blob([0.0; 3], 3);
        c.bbox_dims = Vector3::new(0.5, 0.5, 0.05);
        assert_eq!(classify_cluster(&c, &p), Label::Unknown);
    }

    #[test]
    fn fix_z_examples() {
        let p = FilterParams {
            table_height: 0.75,
            nut_height: 0.012,
            ..FilterParams::default()
        };
        let fixed = fix_centroid_z(&Point3::new(0.1, 0.2, 0.9), &p);
        assert_eq!(fixed, Point3::new(0.1, 0.2, 0.75 + 0.006));
        assert!((fixed.z - 0.756).abs() < 1e-15);
        assert_eq!(fix_centroid_z(&fixed, &p), fixed);
    }

    #[test]
    fn parse_frame_format() {
        let f = parse_frame("# header\n0.1 0.2 0.3\n\n1 2 3\n", 4).unwrap();
        assert_eq!(
            f.points,
            vec![Point3::new(0.1, 0.2, 0.3), Point3::new(1.0, 2.0, 3.0)]
        );
        assert_eq!(f.frame_index, 4);
        let err = parse_frame("0 0 0\n0 zero 0\n", 0).unwrap_err();
        assert!(matches!(
            err,
            Error::Parse {
                location: crate::error::Location::Line(2),
                ..
            }
        ));
        assert!(parse_frame("1 2\n", 0).is_err());
        assert!(parse_frame("1 2 3 4\n", 0).is_err());
        assert!(parse_frame("1 nan 3\n", 0).is_err());
    }

    #[test]
    fn frame_text_round_trip() {
        let f = frame(&[[0.1, -0.25, 0.7512345678901234], [1e-7, 3.0, -2.5]]);
        assert_eq!(parse_frame(&format_frame(&f), 0).unwrap(), f);
    }

    proptest! {
        #[test]
        fn fix_z_sets_exact_height(x in -1f64..1.0, y in -1f64..1.0, z in -1f64..2.0,
                                   th in 0f64..1.5, nh in 0.001f64..0.05) {
            let p = FilterParams { table_height: th, nut_height: nh, ..FilterParams::default() };
            let fixed = fix_centroid_z(&Point3::new(x, y, z), &p);
            prop_assert_eq!(fixed.z, th + nh / 2.0);
            prop_assert_eq!((fixed.x, fixed.y), (x, y));
        }

        #[test]
        fn strip_keeps_exactly_the_band(zs in prop::collection::vec(0.7f64..0.95, 0..100)) {
            let p = FilterParams::default();
            let f = PointCloudFrame::new(zs.iter().map(|&z| Point3::new(0.0, 0.0, z)).collect(), 0);
            let kept = strip_by_height(&f, &p);
            let inside = |z: f64| { let h = z - p.table_height; p.min_heights <= h && h <= p.max_heights };
            prop_assert!(kept.points.iter().all(|q| inside(q.z)));
            prop_assert_eq!(kept.points.len(), zs.iter().filter(|&&z| inside(z)).count());
        }

        #[test]
        fn merge_is_idempotent_and_conserves_points(
            centers in prop::collection::vec(prop::array::uniform3(-0.1f64..0.1), 1..30),
            dist in 0.005f64..0.05,
        ) {
            let clusters: Vec<Cluster> = centers.iter().map(|c| blob(*c, 2)).collect();
            let once = merge_by_centroid(clusters, dist);
            prop_assert_eq!(once.iter().map(Cluster::len).sum::<usize>(), centers.len() * 2);
            let twice = merge_by_centroid(once.clone(), dist);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn cluster_invariants(pts in prop::collection::vec(prop::array::uniform3(-0.05f64..0.05), 1..120),
                              tol in 0.001f64..0.03) {
            let clusters = cluster_points(&frame(&pts), tol);
            prop_assert_eq!(clusters.iter().map(Cluster::len).sum::<usize>(), pts.len());
            for c in &clusters {
                let mean = c.points.iter().fold(Vector3::zeros(), |a, p| a + p.coords) / c.len() as f64;
                prop_assert!((mean - c.centroid.coords).abs().max() <= 1e-12);
                for axis in 0..3 {
                    let lo = c.points.iter().map(|p| p[axis]).fold(f64::INFINITY, f64::min);
                    let hi = c.points.iter().map(|p| p[axis]).fold(f64::NEG_INFINITY, f64::max);
                    prop_assert!(c.bbox_dims[axis] >= 0.0);
                    prop_assert_eq!(c.bbox_dims[axis], hi - lo);
                }
            }
        }
    }
}
