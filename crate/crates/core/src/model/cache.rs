//! Prerendered per-yaw edge classifications for one nut placement.
//!
//! File layout, all integers and floats little-endian:
//!
//! ```text
//! magic     8 bytes  "NUTEDGE\0"
//! version   u32
//! hash      32 bytes SHA-256 over mesh, samples, camera, centroid, yaws, eps
//! records   u32
//! per record:
//!   yaw     f64
//!   count   u32
//!   count × (u i32, v i32, depth f64, class u8)
//! ```

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::geometry::{Camera, Pixel, Point3};
use crate::{Error, Result};

use super::{ClassifiedPoint, EdgeClass, EdgeModel, EdgeTag};

pub const CACHE_FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"NUTEDGE\0";

#[derive(Debug, Clone, PartialEq)]
pub struct PrerenderCache {
    hash: [u8; 32],
    entries: Vec<(f64, Vec<ClassifiedPoint>)>,
}

impl PrerenderCache {
    pub fn build(
        model: &EdgeModel,
        camera: &Camera,
        centroid: &Point3,
        yaws: &[f64],
        silhouette_eps: f64,
    ) -> Result<Self> {
        if yaws.is_empty() {
            return Err(Error::EmptyInput("yaw grid"));
        }
        let entries = yaws
            .iter()
            .map(|&yaw| {
                Ok((
                    yaw,
                    model.classify_at(centroid, yaw, camera, silhouette_eps)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            hash: content_hash(model, camera, centroid, yaws, silhouette_eps),
            entries,
        })
    }

    pub fn hash(&self) -> &[u8; 32] {
        &self.hash
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn yaws(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|(y, _)| *y)
    }

    /// Exact (bitwise) yaw lookup.
    pub fn lookup(&self, yaw: f64) -> Option<&[ClassifiedPoint]> {
        self.entries
            .iter()
            .find(|(y, _)| y.to_bits() == yaw.to_bits())
            .map(|(_, pts)| pts.as_slice())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&CACHE_FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.hash);
        out.extend_from_slice(&(self.entries.len() as u32).to_le_bytes());
        for (yaw, pts) in &self.entries {
            out.extend_from_slice(&yaw.to_le_bytes());
            out.extend_from_slice(&(pts.len() as u32).to_le_bytes());
            for p in pts {
                out.extend_from_slice(&p.pixel.u.to_le_bytes());
                out.extend_from_slice(&p.pixel.v.to_le_bytes());
                out.extend_from_slice(&p.depth.to_le_bytes());
                out.push(p.class.code());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::parse_offset(0, "not a prerender cache"));
        }
        let version = r.u32()?;
        if version != CACHE_FORMAT_VERSION {
            return Err(Error::CacheMismatch(format!(
                "format version {version}, expected {CACHE_FORMAT_VERSION}"
            )));
        }
        let hash: [u8; 32] = r.take(32)?.try_into().expect("32 bytes");
        let records = r.u32()? as usize;
        let mut entries = Vec::with_capacity(records.min(1024));
        for _ in 0..records {
            let yaw = r.f64()?;
            let count = r.u32()? as usize;
            let mut pts = Vec::with_capacity(count.min(1 << 16));
            for _ in 0..count {
                let u = r.i32()?;
                let v = r.i32()?;
                let depth = r.f64()?;
                let at = r.pos;
                let class = EdgeClass::from_code(r.take(1)?[0])
                    .ok_or_else(|| Error::parse_offset(at, "unknown edge class"))?;
                pts.push(ClassifiedPoint {
                    pixel: Pixel::new(u, v),
                    depth,
                    class,
                });
            }
            entries.push((yaw, pts));
        }
        if r.pos != bytes.len() {
            return Err(Error::parse_offset(r.pos, "trailing bytes"));
        }
        Ok(Self { hash, entries })
    }

    /// Writes through a temporary file and renames it into place, so readers
    /// never observe a partial cache.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_bytes())?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    /// Loads a cache and checks it was built from the same inputs.
    pub fn load(path: &Path, expected_hash: &[u8; 32]) -> Result<Self> {
        let cache = Self::from_bytes(&std::fs::read(path)?)?;
        if &cache.hash != expected_hash {
            return Err(Error::CacheMismatch(
                "inputs changed since the cache was written".into(),
            ));
        }
        Ok(cache)
    }

    /// Hash identifying everything a cached classification depends on.
    pub fn expected_hash(
        model: &EdgeModel,
        camera: &Camera,
        centroid: &Point3,
        yaws: &[f64],
        eps: f64,
    ) -> [u8; 32] {
        content_hash(model, camera, centroid, yaws, eps)
    }
}

fn content_hash(
    model: &EdgeModel,
    camera: &Camera,
    centroid: &Point3,
    yaws: &[f64],
    eps: f64,
) -> [u8; 32] {
    let mut h = Sha256::new();
    let mut f = |x: f64| h.update(x.to_le_bytes());
    for v in &model.mesh.vertices {
        v.iter().for_each(|&c| f(c));
    }
    for s in &model.samples {
        s.point.iter().for_each(|&c| f(c));
        f(if s.tag == EdgeTag::Boundary { 0.0 } else { 1.0 });
    }
    let i = &camera.intrinsics;
    for x in [i.fx, i.fy, i.cx, i.cy, i.width as f64, i.height as f64] {
        f(x);
    }
    camera.extrinsics.rotation.iter().for_each(|&c| f(c));
    camera.extrinsics.translation.iter().for_each(|&c| f(c));
    centroid.iter().for_each(|&c| f(c));
    yaws.iter().for_each(|&y| f(y));
    f(eps);
    for t in &model.mesh.triangles {
        for &k in t {
            h.update((k as u64).to_le_bytes());
        }
    }
    h.finalize().into()
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let out = self
            .bytes
            .get(self.pos..self.pos + n)
            .ok_or_else(|| Error::parse_offset(self.pos, "truncated cache"))?;
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
}
