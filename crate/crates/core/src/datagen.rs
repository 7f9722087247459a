//! Ground-truth dataset generation: rendering, point clouds, and splits.
//!
//! Shapes are rendered onto a fixed 256x256 canvas with an 8 px margin, the
//! same transform carries their skeletons into pixel space, boundary plus
//! interior lattice samples form the point-cloud domain, and shape indexes
//! are split per class into train/val/test.
//!
//! # Text formats
//!
//! Point clouds are `.pts` files: one point per line, `x y` or `x y label`
//! separated by single spaces. Split manifests are tab-separated rows of
//! `shape_id`, `class`, and `train`/`val`/`test`, sorted by shape id.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::contour::{fill_polygon, Contour};
use crate::distance::distance_transform;
use crate::error::{Error, Result};
use crate::geom::{point_segment_distance, MedialPoint, Point2, PointSet};
use crate::raster::BinaryImage;
use crate::skeleton::{nearest_pixel, SkeletonGraph};

/// Canvas side for rendered shapes.
pub const RENDER_SIZE: u32 = 256;
/// Margin kept free on every side of the canvas.
pub const RENDER_MARGIN: u32 = 8;

/// Similarity transform from shape coordinates into canvas pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderTransform {
    pub scale: f64,
    pub offset: Point2,
}

impl RenderTransform {
    /// Fits a bounding box onto the canvas: uniform scale, centered.
    pub fn fit(min: Point2, max: Point2) -> Result<Self> {
        let extent = (max.x - min.x).max(max.y - min.y);
        if !(extent > 0.0) || !extent.is_finite() {
            return Err(Error::DegenerateContour(extent));
        }
        let scale = f64::from(RENDER_SIZE - 2 * RENDER_MARGIN) / extent;
        let center = Point2::new((min.x + max.x) / 2.0, (min.y + max.y) / 2.0);
        let half = (f64::from(RENDER_SIZE) - 1.0) / 2.0;
        let offset = Point2::new(half - center.x * scale, half - center.y * scale);
        Ok(RenderTransform { scale, offset })
    }

    pub fn apply(&self, p: Point2) -> Point2 {
        Point2::new(p.x * self.scale + self.offset.x, p.y * self.scale + self.offset.y)
    }

    pub fn apply_medial(&self, m: &MedialPoint) -> MedialPoint {
        let p = self.apply(m.pos);
        MedialPoint::new(p.x, p.y, m.r * self.scale)
    }

    pub fn apply_graph(&self, g: &SkeletonGraph) -> SkeletonGraph {
        let nodes = g.nodes.iter().map(|m| self.apply_medial(m)).collect();
        SkeletonGraph::new(nodes, g.edges.clone()).expect("transform preserves validity")
    }
}

/// Rasterizes a contour onto the standard canvas. Returns the image and the
/// transform that was applied, so skeletons can follow the shape.
pub fn render_shape_image(contour: &Contour) -> Result<(BinaryImage, RenderTransform)> {
    let (min, max) = contour.bbox();
    let tf = RenderTransform::fit(min, max)?;
    let vertices: Vec<Point2> = contour.vertices().iter().map(|&v| tf.apply(v)).collect();
    let scaled = Contour::from_vertices(vertices)?;
    let img = fill_polygon(&scaled, RENDER_SIZE, RENDER_SIZE);
    if img.is_empty() {
        return Err(Error::ShapeVanished);
    }
    Ok((img, tf))
}

/// Draws a skeleton graph as a 1 px polyline raster on the shape's canvas.
///
/// Every drawn pixel is guaranteed to lie on shape foreground: samples that
/// round onto background are replaced by their deepest foreground neighbor,
/// and single-pixel gaps that substitution opens up are bridged. A sample
/// with no foreground pixel nearby is an error.
pub fn render_skeleton_image(
    g: &SkeletonGraph,
    tf: &RenderTransform,
    shape: &BinaryImage,
) -> Result<BinaryImage> {
    let w = shape.width();
    let h = shape.height();
    let depth = distance_transform(shape)?;
    let mut img = BinaryImage::new(w, h);

    let place = |p: Point2| -> Result<(i64, i64)> {
        let (px, py) = nearest_pixel(p);
        if px < 0 || py < 0 || px >= i64::from(w) || py >= i64::from(h) {
            return Err(Error::NodeOutsideCanvas {
                x: p.x,
                y: p.y,
                width: w,
                height: h,
            });
        }
        if shape.get(px, py) {
            return Ok((px, py));
        }
        let mut best: Option<(f64, i64, i64)> = None;
        for dy in -1..=1i64 {
            for dx in -1..=1i64 {
                let (nx, ny) = (px + dx, py + dy);
                if shape.get(nx, ny) {
                    let d = depth.get(nx as u32, ny as u32);
                    if best.is_none_or(|(bd, _, _)| d > bd) {
                        best = Some((d, nx, ny));
                    }
                }
            }
        }
        match best {
            Some((_, nx, ny)) => Ok((nx, ny)),
            None => Err(Error::SkeletonOutsideShape(px, py)),
        }
    };

    for m in &g.nodes {
        let p = tf.apply(m.pos);
        let (x, y) = place(p)?;
        img.set(x as u32, y as u32, true);
    }
    for &(a, b) in &g.edges {
        let pa = tf.apply(g.nodes[a].pos);
        let pb = tf.apply(g.nodes[b].pos);
        let len = pa.dist(pb);
        let steps = (len / 0.4).ceil().max(1.0) as usize;
        let mut prev: Option<(i64, i64)> = None;
        for s in 0..=steps {
            let t = s as f64 / steps as f64;
            let (x, y) = place(pa.lerp(pb, t))?;
            if let Some((px, py)) = prev {
                if (x - px).abs().max((y - py).abs()) > 1 {
                    let (mx, my) = place(Point2::new(
                        (px + x) as f64 / 2.0,
                        (py + y) as f64 / 2.0,
                    ))?;
                    img.set(mx as u32, my as u32, true);
                }
            }
            img.set(x as u32, y as u32, true);
            prev = Some((x, y));
        }
    }
    Ok(img)
}

/// Perturbation model for sampled point clouds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    None,
    Uniform,
    Gaussian,
}

/// Point-cloud sampling parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingConfig {
    /// Lattice and boundary step, in shape units.
    pub h: f64,
    pub noise: NoiseKind,
    /// Noise amplitude as a fraction of `h`.
    pub noise_scale: f64,
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            h: 1.0,
            noise: NoiseKind::Uniform,
            noise_scale: 0.25,
            seed: 0,
        }
    }
}

/// Samples a shape as a point cloud: the boundary resampled at step `h`
/// plus every global lattice point (multiples of `h`) strictly inside.
///
/// Noise displaces each point by at most `noise_scale * h` per coordinate
/// (uniform) or by that standard deviation (gaussian). The point count
/// depends only on the shape and `h`, never on the noise.
pub fn sample_point_cloud(contour: &Contour, cfg: &SamplingConfig) -> Result<PointSet> {
    if !(cfg.h > 0.0) || !cfg.h.is_finite() {
        return Err(Error::BadSampleStep(cfg.h));
    }
    let mut points = contour.resample(cfg.h)?;
    let (min, max) = contour.bbox();
    let i0 = (min.x / cfg.h).floor() as i64;
    let i1 = (max.x / cfg.h).ceil() as i64;
    let j0 = (min.y / cfg.h).floor() as i64;
    let j1 = (max.y / cfg.h).ceil() as i64;
    for j in j0..=j1 {
        for i in i0..=i1 {
            let p = Point2::new(i as f64 * cfg.h, j as f64 * cfg.h);
            if contour.contains(p) && !contour.on_boundary(p, 1e-9) {
                points.push(p);
            }
        }
    }

    let amp = cfg.noise_scale * cfg.h;
    if cfg.noise != NoiseKind::None && amp > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for p in points.iter_mut() {
            let (dx, dy) = match cfg.noise {
                NoiseKind::Uniform => (
                    rng.random_range(-amp..=amp),
                    rng.random_range(-amp..=amp),
                ),
                NoiseKind::Gaussian => (
                    rng.sample::<f64, _>(rand_distr::StandardNormal) * amp,
                    rng.sample::<f64, _>(rand_distr::StandardNormal) * amp,
                ),
                NoiseKind::None => unreachable!(),
            };
            p.x += dx;
            p.y += dy;
        }
    }
    Ok(points)
}

/// Changes a cloud's density by `factor`.
///
/// `factor < 1` keeps a random subset of `ceil(factor * n)` points in their
/// original order; `factor > 1` appends `ceil(factor * n) - n` jittered
/// copies of randomly chosen points; `factor == 1` returns the cloud as is.
pub fn resample_cloud(points: &PointSet, factor: f64, seed: u64) -> Result<PointSet> {
    if !(factor > 0.0) || !factor.is_finite() {
        return Err(Error::BadResampleFactor(factor));
    }
    if points.is_empty() || factor == 1.0 {
        return Ok(points.clone());
    }
    let n = points.len();
    let target = (factor * n as f64).ceil() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if target <= n {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut keep = order[..target.max(1)].to_vec();
        keep.sort_unstable();
        Ok(keep.into_iter().map(|i| points[i]).collect())
    } else {
        let mut out = points.clone();
        for _ in n..target {
            let src = points[rng.random_range(0..n)];
            let dx = rng.random_range(-0.25..=0.25);
            let dy = rng.random_range(-0.25..=0.25);
            out.push(Point2::new(src.x + dx, src.y + dy));
        }
        Ok(out)
    }
}

/// Labels cloud points against a skeleton: 1 when the point lies within `h`
/// of any skeleton node or edge segment (in x, y), 2 otherwise. An empty
/// skeleton labels everything 2.
pub fn label_skeleton_points(points: &PointSet, g: &SkeletonGraph, h: f64) -> Vec<u8> {
    points
        .iter()
        .map(|&p| {
            let mut d = f64::INFINITY;
            for m in &g.nodes {
                d = d.min(p.dist(m.pos));
            }
            for &(a, b) in &g.edges {
                d = d.min(point_segment_distance(p, g.nodes[a].pos, g.nodes[b].pos));
            }
            if d <= h {
                1
            } else {
                2
            }
        })
        .collect()
}

/// Serializes a cloud as `.pts` text, optionally with per-point labels.
pub fn points_to_pts(points: &PointSet, labels: Option<&[u8]>) -> String {
    let mut out = String::new();
    for (i, p) in points.iter().enumerate() {
        match labels {
            Some(l) => out.push_str(&format!("{} {} {}\n", p.x, p.y, l[i])),
            None => out.push_str(&format!("{} {}\n", p.x, p.y)),
        }
    }
    out
}

/// Parses `.pts` text. Every row must have the same shape: `x y` or
/// `x y label`.
pub fn points_from_pts(text: &str) -> Result<(PointSet, Option<Vec<u8>>)> {
    let mut points = PointSet::new();
    let mut labels: Vec<u8> = Vec::new();
    let mut expect: Option<usize> = None;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 && fields.len() != 3 {
            return Err(Error::Parse(format!(
                "line {}: expected 2 or 3 fields, got {}",
                lineno + 1,
                fields.len()
            )));
        }
        match expect {
            None => expect = Some(fields.len()),
            Some(e) if e != fields.len() => {
                return Err(Error::Parse(format!(
                    "line {}: inconsistent field count {} (first row had {})",
                    lineno + 1,
                    fields.len(),
                    e
                )));
            }
            _ => {}
        }
        let x: f64 = fields[0]
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: bad x {:?}", lineno + 1, fields[0])))?;
        let y: f64 = fields[1]
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: bad y {:?}", lineno + 1, fields[1])))?;
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::NonFinite);
        }
        points.push(Point2::new(x, y));
        if fields.len() == 3 {
            let l: u8 = fields[2].parse().map_err(|_| {
                Error::Parse(format!("line {}: bad label {:?}", lineno + 1, fields[2]))
            })?;
            labels.push(l);
        }
    }
    let labels = if expect == Some(3) { Some(labels) } else { None };
    Ok((points, labels))
}

pub fn write_pts_file(
    path: impl AsRef<Path>,
    points: &PointSet,
    labels: Option<&[u8]>,
) -> Result<()> {
    fs::write(path.as_ref(), points_to_pts(points, labels))?;
    Ok(())
}

pub fn read_pts_file(path: impl AsRef<Path>) -> Result<(PointSet, Option<Vec<u8>>)> {
    let path = path.as_ref();
    let text =
        fs::read_to_string(path).map_err(|e| Error::format(path, format!("cannot read: {e}")))?;
    points_from_pts(&text).map_err(|e| Error::format(path, e.to_string()))
}

/// Dataset partition a shape belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::Parse(format!("unknown split {other:?}"))),
        }
    }
}

/// Fractions of each class assigned to train/val/test. Must sum to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.706,
            val: 0.14,
            test: 0.154,
        }
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(s: &str) -> u64 {
    let mut h = FNV_OFFSET;
    for b in s.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Splits an index of `(shape_id, class)` pairs into train/val/test,
/// stratified by class.
///
/// Every class contributes at least one shape to each partition, which is
/// why classes need at least three shapes. Shuffling is seeded per class,
/// so adding a class never reshuffles the others. Output rows are sorted by
/// shape id.
pub fn make_split(
    index: &[(String, String)],
    ratios: &SplitRatios,
    seed: u64,
) -> Result<Vec<(String, String, Split)>> {
    let sum = ratios.train + ratios.val + ratios.test;
    let all = [ratios.train, ratios.val, ratios.test];
    if all.iter().any(|&r| !(r >= 0.0) || !r.is_finite()) || (sum - 1.0).abs() > 1e-6 {
        return Err(Error::BadSplitRatios(all));
    }
    let mut by_class: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (id, class) in index {
        by_class.entry(class).or_default().push(id);
    }
    let small: Vec<&str> = by_class
        .iter()
        .filter(|(_, ids)| ids.len() < 3)
        .map(|(c, _)| *c)
        .collect();
    if !small.is_empty() {
        return Err(Error::ClassTooSmall(small.join(", ")));
    }

    let mut rows: Vec<(String, String, Split)> = Vec::with_capacity(index.len());
    for (class, mut ids) in by_class {
        ids.sort_unstable();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(class));
        ids.shuffle(&mut rng);
        let n = ids.len();
        let mut n_test = ((n as f64 * ratios.test).round() as usize).max(1);
        n_test = n_test.min(n - 2);
        let mut n_val = ((n as f64 * ratios.val).round() as usize).max(1);
        n_val = n_val.min(n - 1 - n_test);
        for (k, id) in ids.into_iter().enumerate() {
            let split = if k < n_test {
                Split::Test
            } else if k < n_test + n_val {
                Split::Val
            } else {
                Split::Train
            };
            rows.push((id.to_string(), class.to_string(), split));
        }
    }
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(rows)
}

/// Serializes a split as tab-separated `shape_id class split` rows.
pub fn split_to_manifest(rows: &[(String, String, Split)]) -> String {
    let mut out = String::new();
    for (id, class, split) in rows {
        out.push_str(&format!("{id}\t{class}\t{split}\n"));
    }
    out
}

pub fn split_from_manifest(text: &str) -> Result<Vec<(String, String, Split)>> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::Parse(format!(
                "line {}: expected 3 tab-separated fields, got {}",
                lineno + 1,
                fields.len()
            )));
        }
        rows.push((fields[0].to_string(), fields[1].to_string(), fields[2].parse()?));
    }
    Ok(rows)
}

pub fn write_split_file(path: impl AsRef<Path>, rows: &[(String, String, Split)]) -> Result<()> {
    fs::write(path.as_ref(), split_to_manifest(rows))?;
    Ok(())
}

pub fn read_split_file(path: impl AsRef<Path>) -> Result<Vec<(String, String, Split)>> {
    let path = path.as_ref();
    let text =
        fs::read_to_string(path).map_err(|e| Error::format(path, format!("cannot read: {e}")))?;
    split_from_manifest(&text).map_err(|e| Error::format(path, e.to_string()))
}
