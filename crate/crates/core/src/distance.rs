//! Exact Euclidean distance transforms over binary rasters.
//!
//! Both transforms run the two-pass lower-envelope algorithm on squared
//! distances (one 1D pass along rows, one along columns), so results are
//! exact Euclidean distances, not chamfer approximations.

use crate::error::{Error, Result};
use crate::raster::BinaryImage;

/// Sentinel that behaves like infinity inside the envelope scan while
/// keeping all arithmetic finite.
const BIG: f64 = 1e20;

/// A per-pixel field of distances, same dimensions as the image it was
/// computed from.
#[derive(Debug, Clone)]
pub struct DistanceField {
    width: u32,
    height: u32,
    values: Vec<f64>,
}

impl DistanceField {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.values[(y as usize) * (self.width as usize) + x as usize]
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// One pass of the squared-distance lower envelope. `f` holds per-cell
/// source costs, `d` receives the output; `v` and `z` are scratch.
fn envelope_1d(f: &[f64], d: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    debug_assert!(n > 0);
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / ((2 * q - 2 * p) as f64);
            if s <= z[k] {
                // parabola at v[k] is dominated everywhere right of z[k]
                if k == 0 {
                    v[0] = q;
                    z[1] = f64::INFINITY;
                    break;
                }
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
    }
    let mut k = 0usize;
    for q in 0..n {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let diff = q as f64 - p as f64;
        d[q] = diff * diff + f[p];
    }
}

/// Squared EDT of a cost grid: rows first, then columns.
fn squared_edt(width: usize, height: usize, grid: &mut [f64]) {
    let n = width.max(height);
    let mut f = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];
    for y in 0..height {
        let row = &mut grid[y * width..(y + 1) * width];
        f[..width].copy_from_slice(row);
        envelope_1d(&f[..width], &mut d[..width], &mut v, &mut z);
        row.copy_from_slice(&d[..width]);
    }
    for x in 0..width {
        for y in 0..height {
            f[y] = grid[y * width + x];
        }
        envelope_1d(&f[..height], &mut d[..height], &mut v, &mut z);
        for y in 0..height {
            grid[y * width + x] = d[y];
        }
    }
}

/// Distance from every pixel to the nearest background pixel. The canvas
/// border counts as background, so a foreground region touching the edge
/// still gets finite, small values there. Background pixels map to 0.
pub fn distance_transform(img: &BinaryImage) -> Result<DistanceField> {
    if img.is_empty() {
        return Err(Error::EmptyShape);
    }
    let (w, h) = (img.width() as usize, img.height() as usize);
    // pad one background ring so the border acts as background
    let (pw, ph) = (w + 2, h + 2);
    let mut grid = vec![0.0f64; pw * ph];
    for y in 0..h {
        for x in 0..w {
            if img.get(x as i64, y as i64) {
                grid[(y + 1) * pw + x + 1] = BIG;
            }
        }
    }
    squared_edt(pw, ph, &mut grid);
    let mut values = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            values.push(grid[(y + 1) * pw + x + 1].sqrt());
        }
    }
    Ok(DistanceField {
        width: img.width(),
        height: img.height(),
        values,
    })
}

/// Distance from every pixel to the nearest foreground pixel. Errors if the
/// image has no foreground at all.
pub fn distance_to_foreground(img: &BinaryImage) -> Result<DistanceField> {
    if img.is_empty() {
        return Err(Error::EmptyShape);
    }
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut grid = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            if !img.get(x as i64, y as i64) {
                grid[y * w + x] = BIG;
            }
        }
    }
    squared_edt(w, h, &mut grid);
    Ok(DistanceField {
        width: img.width(),
        height: img.height(),
        values: grid.into_iter().map(f64::sqrt).collect(),
    })
}

/// One-sided raster Hausdorff distance: the largest distance from a
/// foreground pixel of `from` to the foreground of `to`. An empty `from`
/// contributes nothing and yields 0.
pub fn directed_raster_hausdorff(from: &BinaryImage, to: &BinaryImage) -> Result<f64> {
    if from.width() != to.width() || from.height() != to.height() {
        return Err(Error::DimensionMismatch(
            from.width(),
            from.height(),
            to.width(),
            to.height(),
        ));
    }
    if from.is_empty() {
        return Ok(0.0);
    }
    let field = distance_to_foreground(to)?;
    let mut worst = 0.0f64;
    for (x, y) in from.foreground_pixels() {
        worst = worst.max(field.get(x, y));
    }
    Ok(worst)
}

/// Symmetric raster Hausdorff distance.
pub fn raster_hausdorff(a: &BinaryImage, b: &BinaryImage) -> Result<f64> {
    Ok(directed_raster_hausdorff(a, b)?.max(directed_raster_hausdorff(b, a)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// O(n^2) reference: scan all background pixels, border included.
    fn brute_to_background(img: &BinaryImage, x: u32, y: u32) -> f64 {
        if !img.get(x as i64, y as i64) {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        // virtual one-pixel background ring
        for by in -1..=img.height() as i64 {
            for bx in -1..=img.width() as i64 {
                if !img.get(bx, by) {
                    let d = ((bx - x as i64).pow(2) + (by - y as i64).pow(2)) as f64;
                    best = best.min(d);
                }
            }
        }
        best.sqrt()
    }

    fn brute_to_foreground(img: &BinaryImage, x: u32, y: u32) -> f64 {
        let mut best = f64::INFINITY;
        for fy in 0..img.height() as i64 {
            for fx in 0..img.width() as i64 {
                if img.get(fx, fy) {
                    let d = ((fx - x as i64).pow(2) + (fy - y as i64).pow(2)) as f64;
                    best = best.min(d);
                }
            }
        }
        best.sqrt()
    }

    #[test]
    fn single_foreground_pixel_has_distance_one() {
        let mut img = BinaryImage::new(5, 5);
        img.set(2, 2, true);
        let field = distance_transform(&img).unwrap();
        assert_eq!(field.get(2, 2), 1.0);
        assert_eq!(field.get(0, 0), 0.0);
    }

    #[test]
    fn full_3x3_peaks_at_two_in_the_center() {
        let img = BinaryImage::from_fn(3, 3, |_, _| true);
        let field = distance_transform(&img).unwrap();
        assert_eq!(field.get(1, 1), 2.0);
        assert_eq!(field.get(0, 0), 1.0);
        assert_eq!(field.get(1, 0), 1.0);
    }

    #[test]
    fn empty_image_is_an_error() {
        let img = BinaryImage::new(4, 4);
        assert!(distance_transform(&img).is_err());
        assert!(distance_to_foreground(&img).is_err());
    }

    #[test]
    fn diagonal_distances_are_euclidean() {
        let mut img = BinaryImage::new(8, 8);
        img.set(2, 3, true);
        let field = distance_to_foreground(&img).unwrap();
        assert!((field.get(0, 0) - 13.0f64.sqrt()).abs() < 1e-12);
        assert_eq!(field.get(2, 3), 0.0);
        assert_eq!(field.get(2, 7), 4.0);
    }

    #[test]
    fn raster_hausdorff_of_identical_images_is_zero() {
        let img = BinaryImage::from_fn(16, 16, |x, y| (x + y) % 5 < 2);
        assert_eq!(raster_hausdorff(&img, &img).unwrap(), 0.0);
    }

    #[test]
    fn raster_hausdorff_detects_subset_direction() {
        let big = BinaryImage::from_fn(16, 16, |x, y| (4..12).contains(&x) && (4..12).contains(&y));
        let small =
            BinaryImage::from_fn(16, 16, |x, y| (6..10).contains(&x) && (6..10).contains(&y));
        assert_eq!(directed_raster_hausdorff(&small, &big).unwrap(), 0.0);
        let back = directed_raster_hausdorff(&big, &small).unwrap();
        assert!((back - 8.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = BinaryImage::new(4, 4);
        let b = BinaryImage::new(5, 4);
        assert!(directed_raster_hausdorff(&a, &b).is_err());
    }

    fn random_image() -> impl Strategy<Value = BinaryImage> {
        (1u32..20, 1u32..20, any::<u64>()).prop_map(|(w, h, seed)| {
            let mut s = seed | 1;
            BinaryImage::from_fn(w, h, |_, _| {
                s ^= s << 13;
                s ^= s >> 7;
                s ^= s << 17;
                s % 3 == 0
            })
        })
    }

    proptest! {
        #[test]
        fn matches_brute_force_to_background(img in random_image()) {
            prop_assume!(!img.is_empty());
            let field = distance_transform(&img).unwrap();
            for y in 0..img.height() {
                for x in 0..img.width() {
                    let want = brute_to_background(&img, x, y);
                    prop_assert!((field.get(x, y) - want).abs() < 1e-9,
                        "({x},{y}): got {} want {}", field.get(x, y), want);
                }
            }
        }

        #[test]
        fn matches_brute_force_to_foreground(img in random_image()) {
            prop_assume!(!img.is_empty());
            let field = distance_to_foreground(&img).unwrap();
            for y in 0..img.height() {
                for x in 0..img.width() {
                    let want = brute_to_foreground(&img, x, y);
                    prop_assert!((field.get(x, y) - want).abs() < 1e-9);
                }
            }
        }
    }
}
