//! Planar primitives shared across the crate.

use crate::error::{Error, Result};

/// A point in the plane. Coordinates follow image conventions: `x` grows to
/// the right, `y` grows downward, and the center of pixel `(i, j)` sits at
/// `(i as f64, j as f64)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn dist(self, other: Point2) -> f64 {
        self.dist_sq(other).sqrt()
    }

    pub fn dist_sq(self, other: Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn lerp(self, other: Point2, t: f64) -> Point2 {
        Point2::new(self.x + (other.x - self.x) * t, self.y + (other.y - self.y) * t)
    }
}

/// An unordered collection of points.
pub type PointSet = Vec<Point2>;

/// A medial-axis sample: a center plus the radius of the maximal inscribed
/// disk at that center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedialPoint {
    pub pos: Point2,
    pub r: f64,
}

impl MedialPoint {
    pub const fn new(x: f64, y: f64, r: f64) -> Self {
        MedialPoint {
            pos: Point2::new(x, y),
            r,
        }
    }
}

/// Distance from `p` to the closed segment `ab`.
pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let len_sq = dx * dx + dy * dy;
    if len_sq == 0.0 {
        return p.dist(a);
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len_sq).clamp(0.0, 1.0);
    p.dist(Point2::new(a.x + t * dx, a.y + t * dy))
}

fn nearest_dist(p: Point2, set: &[Point2]) -> f64 {
    set.iter()
        .map(|q| p.dist_sq(*q))
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}

/// One-sided Hausdorff distance `max_{a in A} min_{b in B} |a - b|`.
///
/// Brute force; intended for the moderate point counts that show up in
/// skeleton nodes and contour samples.
pub fn directed_hausdorff(a: &[Point2], b: &[Point2]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyPointSet("hausdorff"));
    }
    Ok(a.iter()
        .map(|p| nearest_dist(*p, b))
        .fold(0.0f64, f64::max))
}

/// Symmetric Hausdorff distance: the larger of the two one-sided distances.
pub fn hausdorff(a: &[Point2], b: &[Point2]) -> Result<f64> {
    Ok(directed_hausdorff(a, b)?.max(directed_hausdorff(b, a)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_point_sets() {
        let a = vec![Point2::new(0.0, 0.0)];
        let b = vec![Point2::new(3.0, 4.0)];
        assert_eq!(hausdorff(&a, &b).unwrap(), 5.0);
    }

    #[test]
    fn directed_is_asymmetric() {
        let a = vec![Point2::new(0.0, 0.0), Point2::new(10.0, 0.0)];
        let b = vec![Point2::new(0.0, 0.0)];
        assert_eq!(directed_hausdorff(&a, &b).unwrap(), 10.0);
        assert_eq!(directed_hausdorff(&b, &a).unwrap(), 0.0);
        assert_eq!(hausdorff(&a, &b).unwrap(), 10.0);
    }

    #[test]
    fn empty_set_is_an_error() {
        let a = vec![Point2::new(0.0, 0.0)];
        assert!(hausdorff(&a, &[]).is_err());
        assert!(hausdorff(&[], &a).is_err());
        assert!(directed_hausdorff(&[], &[]).is_err());
    }

    #[test]
    fn segment_distance_clamps_to_endpoints() {
        let a = Point2::new(0.0, 0.0);
        let b = Point2::new(10.0, 0.0);
        assert_eq!(point_segment_distance(Point2::new(5.0, 3.0), a, b), 3.0);
        assert_eq!(point_segment_distance(Point2::new(-4.0, 0.0), a, b), 4.0);
        assert_eq!(point_segment_distance(Point2::new(13.0, 4.0), a, b), 5.0);
        // degenerate segment
        assert_eq!(point_segment_distance(Point2::new(3.0, 4.0), a, a), 5.0);
    }

    fn small_set() -> impl Strategy<Value = Vec<Point2>> {
        prop::collection::vec((-100.0..100.0f64, -100.0..100.0f64), 1..20)
            .prop_map(|v| v.into_iter().map(|(x, y)| Point2::new(x, y)).collect())
    }

    proptest! {
        #[test]
        fn hausdorff_is_symmetric(a in small_set(), b in small_set()) {
            let d1 = hausdorff(&a, &b).unwrap();
            let d2 = hausdorff(&b, &a).unwrap();
            prop_assert_eq!(d1, d2);
            prop_assert!(d1 >= 0.0);
        }

        #[test]
        fn hausdorff_zero_on_self(a in small_set()) {
            prop_assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        }

        #[test]
        fn directed_bounded_by_symmetric(a in small_set(), b in small_set()) {
            let d = directed_hausdorff(&a, &b).unwrap();
            let h = hausdorff(&a, &b).unwrap();
            prop_assert!(d <= h);
        }
    }
}
