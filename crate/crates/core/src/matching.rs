//! Edge-ranking score of projected model edges against a binary edge image,
//! and the yaw sweep over one symmetry period.
//!
//! A projected point is a hit when at least `hit_threshold` of its 3×3
//! neighborhood is set in the edge image. The pooled score runs a single
//! pass over the Occluding, Boundary and HighCurvature points, so it is
//! total hits over total points rather than a mean of per-class ratios.
//! Occluded points never enter the score.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::geometry::{Camera, Pixel, Point3};
use crate::imaging::BinaryEdgeImage;
use crate::model::{ClassifiedPoint, EdgeClass, EdgeModel, PrerenderCache};
use crate::{Error, Result};

/// Classes that are scored, in evaluation order.
pub const SCORED_CLASSES: [EdgeClass; 3] = [
    EdgeClass::Occluding,
    EdgeClass::Boundary,
    EdgeClass::HighCurvature,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HitParams {
    pub hit_threshold: f64,
}

impl Default for HitParams {
    fn default() -> Self {
        Self {
            hit_threshold: 4.0 / 9.0,
        }
    }
}

impl HitParams {
    pub fn validate(&self) -> Result<()> {
        if (0.0..=1.0).contains(&self.hit_threshold) {
            Ok(())
        } else {
            Err(Error::invalid("hit_threshold must lie in [0, 1]"))
        }
    }
}

/// Yaw candidates `start, start + step, …` up to `end` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YawGrid {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl Default for YawGrid {
    fn default() -> Self {
        Self {
            start: 0.0,
            end: 1.05,
            step: 0.15,
        }
    }
}

impl YawGrid {
    pub fn validate(&self) -> Result<()> {
        let finite = self.start.is_finite() && self.end.is_finite() && self.step.is_finite();
        // the span may overrun the 60° period by less than one step
        if !finite
            || self.step <= 0.0
            || self.start < 0.0
            || self.end < self.start
            || self.end - self.start > crate::geometry::YAW_PERIOD + self.step
        {
            return Err(Error::invalid(format!("bad yaw grid {self:?}")));
        }
        Ok(())
    }

    /// Grid values, snapped to 1e-12 rad so decimal steps land on their
    /// decimal values (3 × 0.15 is 0.45, not 0.44999999999999996).
    pub fn values(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut k = 0u32;
        loop {
            let raw = self.start + f64::from(k) * self.step;
            if raw > self.end + 1e-9 {
                break;
            }
            out.push((raw * 1e12).round() / 1e12);
            k += 1;
        }
        out
    }
}

/// Hit/miss tally for one list of points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankCount {
    pub hits: usize,
    pub misses: usize,
    pub ratio: f64,
}

impl RankCount {
    fn from_counts(hits: usize, misses: usize) -> Option<Self> {
        let total = hits + misses;
        (total > 0).then(|| Self {
            hits,
            misses,
            ratio: hits as f64 / total as f64,
        })
    }

    pub fn total(&self) -> usize {
        self.hits + self.misses
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypeScore {
    pub edge_class: EdgeClass,
    /// `None` when the pose has no points of this class.
    pub count: Option<RankCount>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoseScore {
    /// Occluding, Boundary, HighCurvature.
    pub per_type: [TypeScore; 3],
    pub pooled: RankCount,
}

impl PoseScore {
    pub fn class(&self, class: EdgeClass) -> Option<RankCount> {
        self.per_type
            .iter()
            .find(|t| t.edge_class == class)
            .and_then(|t| t.count)
    }
}

/// Edge bit at (x, y); out of bounds is 0.
pub fn edge_bit(img: &BinaryEdgeImage, x: i64, y: i64) -> u8 {
    u8::from(img.get(x, y))
}

/// Fraction of set pixels in the 3×3 window centered on (x, y).
pub fn neighborhood_score(img: &BinaryEdgeImage, x: i64, y: i64) -> f64 {
    let mut n = 0u32;
    for dy in -1..=1 {
        for dx in -1..=1 {
            n += u32::from(edge_bit(img, x + dx, y + dy));
        }
    }
    f64::from(n) / 9.0
}

fn is_hit(img: &BinaryEdgeImage, px: Pixel, hp: &HitParams) -> bool {
    neighborhood_score(img, i64::from(px.u), i64::from(px.v)) >= hp.hit_threshold
}

pub fn edge_ranking(points: &[Pixel], img: &BinaryEdgeImage, hp: &HitParams) -> Result<RankCount> {
    let hits = points.iter().filter(|&&p| is_hit(img, p, hp)).count();
    RankCount::from_counts(hits, points.len() - hits).ok_or(Error::NoPoints)
}

/// Scores one pose. Occluded points are skipped entirely.
pub fn score_pose(
    points: &[ClassifiedPoint],
    img: &BinaryEdgeImage,
    hp: &HitParams,
) -> Result<PoseScore> {
    let mut tallies = [(0usize, 0usize); 3];
    for p in points {
        let Some(slot) = SCORED_CLASSES.iter().position(|&c| c == p.class) else {
            continue;
        };
        if is_hit(img, p.pixel, hp) {
            tallies[slot].0 += 1;
        } else {
            tallies[slot].1 += 1;
        }
    }
    let (hits, misses) = tallies
        .iter()
        .fold((0, 0), |acc, t| (acc.0 + t.0, acc.1 + t.1));
    let pooled = RankCount::from_counts(hits, misses).ok_or(Error::NoPoints)?;
    let per_type = std::array::from_fn(|i| TypeScore {
        edge_class: SCORED_CLASSES[i],
        count: RankCount::from_counts(tallies[i].0, tallies[i].1),
    });
    Ok(PoseScore { per_type, pooled })
}

/// Supplies classified model edges for a nut at a fixed position.
pub trait EdgeSource {
    fn edges_at(&self, yaw: f64) -> Result<Cow<'_, [ClassifiedPoint]>>;
}

/// Renders the model on demand.
pub struct PlacedModel<'a> {
    pub model: &'a EdgeModel,
    pub camera: &'a Camera,
    pub centroid: Point3,
    pub silhouette_eps: f64,
}

impl EdgeSource for PlacedModel<'_> {
    fn edges_at(&self, yaw: f64) -> Result<Cow<'_, [ClassifiedPoint]>> {
        Ok(Cow::Owned(self.model.classify_at(
            &self.centroid,
            yaw,
            self.camera,
            self.silhouette_eps,
        )?))
    }
}

impl EdgeSource for PrerenderCache {
    fn edges_at(&self, yaw: f64) -> Result<Cow<'_, [ClassifiedPoint]>> {
        self.lookup(yaw)
            .map(Cow::Borrowed)
            .ok_or_else(|| Error::invalid(format!("yaw {yaw} is not in the cache")))
    }
}

/// One nut's result row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub nut_id: usize,
    pub centroid: [f64; 3],
    pub occluding: Option<RankCount>,
    pub boundary: Option<RankCount>,
    pub high_curvature: Option<RankCount>,
    /// Pooled score at the best yaw.
    pub score: f64,
    pub yaw: f64,
    /// Every evaluated `[yaw, pooled score]`, in grid order. Yaws with no
    /// scorable points record 0.
    pub per_yaw: Vec<[f64; 2]>,
}

impl MatchReport {
    pub fn centroid_point(&self) -> Point3 {
        Point3::from(self.centroid)
    }
}

/// Evaluates every grid yaw and keeps the best pooled score; ties go to
/// the smallest yaw.
pub fn sweep_yaw(
    nut_id: usize,
    centroid: &Point3,
    source: &dyn EdgeSource,
    img: &BinaryEdgeImage,
    grid: &YawGrid,
    hp: &HitParams,
) -> Result<MatchReport> {
    grid.validate()?;
    hp.validate()?;
    let mut per_yaw = Vec::new();
    let mut best: Option<(f64, PoseScore)> = None;
    for yaw in grid.values() {
        let edges = source.edges_at(yaw)?;
        match score_pose(&edges, img, hp) {
            Ok(score) => {
                per_yaw.push([yaw, score.pooled.ratio]);
                if best
                    .as_ref()
                    .is_none_or(|(_, b)| score.pooled.ratio > b.pooled.ratio)
                {
                    best = Some((yaw, score));
                }
            }
            Err(Error::NoPoints) => per_yaw.push([yaw, 0.0]),
            Err(e) => return Err(e),
        }
    }
    let (yaw, score) = best.ok_or(Error::NoPoints)?;
    Ok(MatchReport {
        nut_id,
        centroid: [centroid.x, centroid.y, centroid.z],
        occluding: score.class(EdgeClass::Occluding),
        boundary: score.class(EdgeClass::Boundary),
        high_curvature: score.class(EdgeClass::HighCurvature),
        score: score.pooled.ratio,
        yaw,
        per_yaw,
    })
}

pub fn reports_to_json(reports: &[MatchReport]) -> Result<String> {
    Ok(serde_json::to_string_pretty(reports)?)
}

pub fn reports_from_json(text: &str) -> Result<Vec<MatchReport>> {
    Ok(serde_json::from_str(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn image(w: usize, h: usize, on: &[(usize, usize)]) -> BinaryEdgeImage {
        let mut img = BinaryEdgeImage::new(w, h);
        for &(x, y) in on {
            img.set(x, y, true);
        }
        img
    }

    fn cp(u: i32, v: i32, class: EdgeClass) -> ClassifiedPoint {
        ClassifiedPoint {
            pixel: Pixel::new(u, v),
            depth: 1.0,
            class,
        }
    }

    #[test]
    fn edge_bit_examples() {
        let img = image(5, 5, &[(2, 3)]);
        assert_eq!(edge_bit(&img, 2, 3), 1);
        assert_eq!(edge_bit(&img, 3, 2), 0);
        assert_eq!(edge_bit(&img, -1, 5), 0);
        assert_eq!(edge_bit(&img, 5, 0), 0);
    }

    #[test]
    fn neighborhood_examples() {
        let all: Vec<_> = (0..3).flat_map(|y| (0..3).map(move |x| (x, y))).collect();
        assert_eq!(neighborhood_score(&image(3, 3, &all), 1, 1), 1.0);
        assert_eq!(neighborhood_score(&image(3, 3, &[]), 1, 1), 0.0);
        let four = image(3, 3, &[(1, 1), (0, 0), (2, 1), (1, 2)]);
        assert_eq!(neighborhood_score(&four, 1, 1), 4.0 / 9.0);
        // corners count too
        assert_eq!(
            neighborhood_score(&image(3, 3, &[(0, 0), (2, 2)]), 1, 1),
            2.0 / 9.0
        );
    }

    #[test]
    fn ranking_examples() {
        let hp = HitParams::default();
        let pts = [Pixel::new(1, 1), Pixel::new(3, 2), Pixel::new(0, 4)];
        let ones: Vec<_> = (0..5).flat_map(|y| (0..5).map(move |x| (x, y))).collect();
        assert_eq!(
            edge_ranking(&[Pixel::new(2, 2)], &image(5, 5, &ones), &hp)
                .unwrap()
                .ratio,
            1.0
        );
        assert_eq!(
            edge_ranking(&pts, &image(5, 5, &[]), &hp).unwrap().ratio,
            0.0
        );
        assert!(matches!(
            edge_ranking(&[], &image(5, 5, &[]), &hp),
            Err(Error::NoPoints)
        ));
    }

    #[test]
    fn ranking_on_hand_built_image() {
        // neighborhoods of (1,1), (3,1), (1,3) hold 5, 3 and 4 set pixels
        let img = image(
            5,
            5,
            &[
                (0, 0),
                (1, 0),
                (2, 0),
                (0, 1),
                (1, 1),
                (4, 0),
                (4, 1),
                (0, 3),
                (0, 4),
                (1, 4),
                (2, 4),
            ],
        );
        let pts = [Pixel::new(1, 1), Pixel::new(3, 1), Pixel::new(1, 3)];
        let scores: Vec<f64> = pts
            .iter()
            .map(|p| neighborhood_score(&img, p.u.into(), p.v.into()))
            .collect();
        assert_eq!(scores, vec![5.0 / 9.0, 3.0 / 9.0, 4.0 / 9.0]);
        let r = edge_ranking(&pts, &img, &HitParams::default()).unwrap();
        assert_eq!((r.hits, r.misses), (2, 1));
        assert_eq!(r.ratio, 2.0 / 3.0);
    }

    #[test]
    fn pooled_is_not_mean_of_ratios() {
        // Occluding 7/10 hits, Boundary 3/5 hits, no HighCurvature
        let mut img = BinaryEdgeImage::new(40, 10);
        for x in 0..20 {
            for y in 0..3 {
                img.set(x, y, true);
            }
        }
        let mut pts = Vec::new();
        for i in 0..10 {
            pts.push(cp(2 * i, if i < 7 { 1 } else { 8 }, EdgeClass::Occluding));
        }
        for i in 0..5 {
            pts.push(cp(
                2 * i + 1,
                if i < 3 { 1 } else { 8 },
                EdgeClass::Boundary,
            ));
        }
        pts.push(cp(1, 1, EdgeClass::Occluded));
        let s = score_pose(&pts, &img, &HitParams::default()).unwrap();
        assert_eq!(s.class(EdgeClass::Occluding).unwrap().ratio, 0.7);
        assert_eq!(s.class(EdgeClass::Boundary).unwrap().ratio, 0.6);
        assert!(s.class(EdgeClass::HighCurvature).is_none());
        assert_eq!((s.pooled.hits, s.pooled.total()), (10, 15));
        assert!((s.pooled.ratio - 10.0 / 15.0).abs() < 1e-15);
        assert!((s.pooled.ratio - 0.65).abs() > 0.01);
    }

    #[test]
    fn all_occluded_is_an_error() {
        let pts = [cp(1, 1, EdgeClass::Occluded), cp(2, 2, EdgeClass::Occluded)];
        assert!(matches!(
            score_pose(&pts, &BinaryEdgeImage::new(4, 4), &HitParams::default()),
            Err(Error::NoPoints)
        ));
    }

    #[test]
    fn default_grid_has_eight_yaws() {
        assert_eq!(
            YawGrid::default().values(),
            vec![0.0, 0.15, 0.3, 0.45, 0.6, 0.75, 0.9, 1.05]
        );
        YawGrid::default().validate().unwrap();
        assert!(YawGrid {
            step: 0.0,
            ..YawGrid::default()
        }
        .validate()
        .is_err());
        assert!(YawGrid {
            end: 2.0,
            ..YawGrid::default()
        }
        .validate()
        .is_err());
    }

    struct Fixed(Vec<ClassifiedPoint>);

    impl EdgeSource for Fixed {
        fn edges_at(&self, _yaw: f64) -> Result<Cow<'_, [ClassifiedPoint]>> {
            Ok(Cow::Borrowed(&self.0))
        }
    }

    struct OnlyOccluded;

    impl EdgeSource for OnlyOccluded {
        fn edges_at(&self, _yaw: f64) -> Result<Cow<'_, [ClassifiedPoint]>> {
            Ok(Cow::Owned(vec![cp(0, 0, EdgeClass::Occluded)]))
        }
    }

    #[test]
    fn constant_scores_tie_to_zero() {
        let src = Fixed(vec![cp(1, 1, EdgeClass::Occluding)]);
        let img = image(3, 3, &[(1, 1)]);
        let r = sweep_yaw(
            0,
            &Point3::origin(),
            &src,
            &img,
            &YawGrid::default(),
            &HitParams::default(),
        )
        .unwrap();
        assert_eq!(r.yaw, 0.0);
        assert_eq!(r.per_yaw.len(), 8);
        assert!(matches!(
            sweep_yaw(
                0,
                &Point3::origin(),
                &OnlyOccluded,
                &img,
                &YawGrid::default(),
                &HitParams::default()
            ),
            Err(Error::NoPoints)
        ));
    }

    #[test]
    fn report_json_field_names() {
        let r = MatchReport {
            nut_id: 3,
            centroid: [0.1, 0.2, 0.756],
            occluding: Some(RankCount {
                hits: 1,
                misses: 1,
                ratio: 0.5,
            }),
            boundary: None,
            high_curvature: None,
            score: 0.5,
            yaw: 0.15,
            per_yaw: vec![[0.0, 0.25], [0.15, 0.5]],
        };
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        keys.sort();
        assert_eq!(
            keys,
            [
                "boundary",
                "centroid",
                "high_curvature",
                "nut_id",
                "occluding",
                "per_yaw",
                "score",
                "yaw"
            ]
        );
        assert!(v["boundary"].is_null());
        assert_eq!(v["occluding"]["hits"], 1);
        assert_eq!(v["per_yaw"][1][0], 0.15);
    }

    fn random_image() -> impl Strategy<Value = BinaryEdgeImage> {
        (1usize..24, 1usize..24).prop_flat_map(|(w, h)| {
            prop::collection::vec(any::<bool>(), w * h)
                .prop_map(move |b| BinaryEdgeImage::from_bits(w, h, b).unwrap())
        })
    }

    fn classified(w: i32, h: i32) -> impl Strategy<Value = Vec<ClassifiedPoint>> {
        prop::collection::vec((-2..w + 2, -2..h + 2, 0u8..4), 1..40).prop_map(|v| {
            v.into_iter()
                .map(|(u, y, c)| cp(u, y, EdgeClass::from_code(c).unwrap()))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn extra_bits_never_lower_scores(
            img in random_image(),
            pts in classified(24, 24),
            extra in prop::collection::vec((0usize..24, 0usize..24), 1..30),
            t in 0f64..=1.0,
        ) {
            let hp = HitParams { hit_threshold: t };
            let mut more = img.clone();
            for (x, y) in extra {
                if x < img.width() && y < img.height() {
                    more.set(x, y, true);
                }
            }
            match (score_pose(&pts, &img, &hp), score_pose(&pts, &more, &hp)) {
                (Ok(a), Ok(b)) => {
                    prop_assert!(b.pooled.ratio >= a.pooled.ratio);
                    for (ta, tb) in a.per_type.iter().zip(&b.per_type) {
                        if let (Some(ca), Some(cb)) = (ta.count, tb.count) {
                            prop_assert!(cb.hits >= ca.hits);
                            prop_assert!(cb.ratio >= ca.ratio);
                        }
                    }
                    prop_assert!((0.0..=1.0).contains(&a.pooled.ratio));
                }
                (Err(Error::NoPoints), Err(Error::NoPoints)) => {}
                other => prop_assert!(false, "inconsistent outcomes {:?}", other.0.is_ok()),
            }
        }

        #[test]
        fn report_json_round_trip(
            id in 0usize..100,
            c in prop::array::uniform3(-1f64..1.0),
            hits in 0usize..500, misses in 1usize..500,
            scores in prop::collection::vec((0f64..1.1, 0f64..=1.0), 1..9),
        ) {
            let rc = RankCount::from_counts(hits, misses).unwrap();
            let r = MatchReport {
                nut_id: id, centroid: c, occluding: Some(rc), boundary: None, high_curvature: Some(rc),
                score: rc.ratio, yaw: scores[0].0, per_yaw: scores.iter().map(|&(a, b)| [a, b]).collect(),
            };
            let text = reports_to_json(std::slice::from_ref(&r)).unwrap();
            prop_assert_eq!(reports_from_json(&text).unwrap(), vec![r]);
        }
    }
}
