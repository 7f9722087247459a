//! Closed polygonal contours and raster <-> polygon conversion.
//!
//! Contours produced from rasters follow pixel cracks: pixel `(i, j)` covers
//! the unit square centered at `(i, j)`, so contour vertices land on the
//! half-integer grid. Stored polygons always have positive signed area; the
//! winding of raw input is normalized on construction.

use crate::error::{Error, Result};
use crate::geom::{point_segment_distance, Point2, PointSet};
use crate::raster::BinaryImage;

const BOUNDARY_EPS: f64 = 1e-7;

/// A closed polygon. The edge from the last vertex back to the first is
/// implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    vertices: Vec<Point2>,
}

impl Contour {
    /// Builds a contour from a vertex loop. Requires at least 3 finite
    /// vertices and a nonzero area; winding is normalized to positive.
    pub fn from_vertices(vertices: Vec<Point2>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::TooFewVertices(vertices.len()));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let mut c = Contour { vertices };
        if c.signed_area() < 0.0 {
            c.vertices.reverse();
        }
        Ok(c)
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Shoelace area; positive after construction.
    pub fn signed_area(&self) -> f64 {
        let mut twice = 0.0;
        for (a, b) in self.edges() {
            twice += a.x * b.y - b.x * a.y;
        }
        twice / 2.0
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| a.dist(b)).sum()
    }

    /// Axis-aligned bounding box as (min corner, max corner).
    pub fn bbox(&self) -> (Point2, Point2) {
        let mut min = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            min.x = min.x.min(v.x);
            min.y = min.y.min(v.y);
            max.x = max.x.max(v.x);
            max.y = max.y.max(v.y);
        }
        (min, max)
    }

    /// True if `p` lies within `eps` of some contour edge.
    pub fn on_boundary(&self, p: Point2, eps: f64) -> bool {
        self.edges()
            .any(|(a, b)| point_segment_distance(p, a, b) <= eps)
    }

    /// Strict interior test (even-odd rule). Points on the boundary are not
    /// contained.
    pub fn contains(&self, p: Point2) -> bool {
        if self.on_boundary(p, 1e-9) {
            return false;
        }
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Walks the boundary emitting points so that consecutive samples are at
    /// most `step` apart. Every polygon vertex appears in the output; edges
    /// are subdivided uniformly.
    pub fn resample(&self, step: f64) -> Result<PointSet> {
        if !(step > 0.0) {
            return Err(Error::BadSampleStep(step));
        }
        let mut out = Vec::new();
        for (a, b) in self.edges() {
            let len = a.dist(b);
            let pieces = ((len / step - 1e-9).ceil() as usize).max(1);
            for k in 0..pieces {
                out.push(a.lerp(b, k as f64 / pieces as f64));
            }
        }
        Ok(out)
    }
}

/// Direction along pixel cracks; `y` grows downward.
#[derive(Clone, Copy, PartialEq, Eq)]
struct Dir {
    dx: i64,
    dy: i64,
}

impl Dir {
    const EAST: Dir = Dir { dx: 1, dy: 0 };

    fn left(self) -> Dir {
        Dir {
            dx: self.dy,
            dy: -self.dx,
        }
    }

    fn right(self) -> Dir {
        Dir {
            dx: -self.dy,
            dy: self.dx,
        }
    }
}

/// Pixel in the quadrant around corner `(u, v)` that the combined direction
/// `d + side` points into.
fn quadrant_pixel(u: i64, v: i64, d: Dir, side: Dir) -> (i64, i64) {
    let sx = d.dx + side.dx;
    let sy = d.dy + side.dy;
    debug_assert!(sx != 0 && sy != 0);
    (u + if sx > 0 { 0 } else { -1 }, v + if sy > 0 { 0 } else { -1 })
}

/// Traces the outer boundary of a raster shape along pixel cracks.
///
/// The shape must be exactly one 8-connected foreground component with no
/// holes. Diagonal pinches stay connected: the contour passes through the
/// shared corner twice rather than splitting the shape.
pub fn extract_contour(img: &BinaryImage) -> Result<Contour> {
    if img.is_empty() {
        return Err(Error::EmptyShape);
    }
    let comps = img.count_components_8();
    if comps != 1 {
        return Err(Error::MultipleComponents(comps));
    }
    let holes = img.count_holes();
    if holes != 0 {
        return Err(Error::HasHoles(holes));
    }

    // first foreground pixel in row-major scan order; its top edge is a
    // boundary crack with the foreground below it
    let (sx, sy) = img.foreground_pixels()[0];
    let start = (sx as i64, sy as i64);
    let start_dir = Dir::EAST;

    let mut corners = Vec::new();
    let (mut u, mut v) = start;
    let mut dir = start_dir;
    loop {
        corners.push(Point2::new(u as f64 - 0.5, v as f64 - 0.5));
        // advance to the next corner, then pick the outgoing crack that keeps
        // foreground on the right-hand side
        u += dir.dx;
        v += dir.dy;
        let (alx, aly) = quadrant_pixel(u, v, dir, dir.left());
        let (arx, ary) = quadrant_pixel(u, v, dir, dir.right());
        dir = if img.get(alx, aly) {
            dir.left()
        } else if img.get(arx, ary) {
            dir
        } else {
            dir.right()
        };
        if (u, v) == start && dir == start_dir {
            break;
        }
    }

    // drop corners where the walk continued straight
    let n = corners.len();
    let mut vertices = Vec::new();
    for i in 0..n {
        let prev = corners[(i + n - 1) % n];
        let cur = corners[i];
        let next = corners[(i + 1) % n];
        let straight = (cur.x - prev.x == next.x - cur.x) && (cur.y - prev.y == next.y - cur.y);
        if !straight {
            vertices.push(cur);
        }
    }
    Contour::from_vertices(vertices)
}

/// Rasterizes a polygon. A pixel is foreground when its center is strictly
/// inside or lies on the boundary (within a small tolerance).
pub fn fill_polygon(contour: &Contour, width: u32, height: u32) -> BinaryImage {
    let mut img = BinaryImage::new(width, height);
    let verts = contour.vertices();
    let n = verts.len();
    let mut crossings: Vec<f64> = Vec::new();

    let mark_span = |img: &mut BinaryImage, y: u32, x0: f64, x1: f64| {
        let lo = ((x0 - BOUNDARY_EPS).ceil().max(0.0)) as i64;
        let hi = ((x1 + BOUNDARY_EPS).floor().min(width as f64 - 1.0)) as i64;
        for x in lo..=hi {
            img.set(x as u32, y, true);
        }
    };

    for y in 0..height {
        let yf = y as f64;
        crossings.clear();
        for i in 0..n {
            let a = verts[i];
            let b = verts[(i + 1) % n];
            if (a.y > yf) != (b.y > yf) {
                crossings.push(a.x + (yf - a.y) * (b.x - a.x) / (b.y - a.y));
            } else if (a.y - yf).abs() <= BOUNDARY_EPS && (b.y - yf).abs() <= BOUNDARY_EPS {
                // horizontal edge lying on this scanline: pure boundary
                mark_span(&mut img, y, a.x.min(b.x), a.x.max(b.x));
            }
        }
        crossings.sort_by(|p, q| p.partial_cmp(q).unwrap());
        for pair in crossings.chunks_exact(2) {
            mark_span(&mut img, y, pair[0], pair[1]);
        }
    }

    // vertices that coincide with a pixel center may be missed by the parity
    // scan when the polygon only touches the scanline there
    for vtx in verts {
        let rx = vtx.x.round();
        let ry = vtx.y.round();
        if (vtx.x - rx).abs() <= BOUNDARY_EPS && (vtx.y - ry).abs() <= BOUNDARY_EPS {
            let (xi, yi) = (rx as i64, ry as i64);
            if xi >= 0 && yi >= 0 && xi < width as i64 && yi < height as i64 {
                img.set(xi as u32, yi as u32, true);
            }
        }
    }
    img
}
