//! Binary rasters: the pixel-domain representation of shapes and rendered
//! skeletons.
//!
//! On disk these are 8-bit grayscale PNGs with foreground 255 and background
//! 0. Loading thresholds at 128 so antialiased sources still round-trip to a
//! clean mask.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use image::{GrayImage, ImageFormat, Luma};

use crate::error::{Error, Result};
use crate::geom::Point2;

/// A width x height bitmask. Pixel `(x, y)` is addressed column-first in `x`,
/// row `y`, matching image conventions (`y` grows downward).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: u32,
    height: u32,
    data: Vec<bool>,
}

/// 3x3 morphological operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MorphOp {
    Dilate,
    Erode,
}

impl BinaryImage {
    /// All-background image.
    pub fn new(width: u32, height: u32) -> Self {
        BinaryImage {
            width,
            height,
            data: vec![false; (width as usize) * (height as usize)],
        }
    }

    /// Builds an image by evaluating `f` at every pixel.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut img = BinaryImage::new(width, height);
        for y in 0..height {
            for x in 0..width {
                if f(x, y) {
                    img.set(x, y, true);
                }
            }
        }
        img
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    fn idx(&self, x: u32, y: u32) -> usize {
        (y as usize) * (self.width as usize) + x as usize
    }

    /// Foreground test. Coordinates outside the canvas read as background.
    #[inline]
    pub fn get(&self, x: i64, y: i64) -> bool {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return false;
        }
        self.data[(y as usize) * (self.width as usize) + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        let i = self.idx(x, y);
        self.data[i] = value;
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    pub fn foreground_count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Foreground pixel coordinates in row-major order.
    pub fn foreground_pixels(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for y in 0..self.height {
            for x in 0..self.width {
                if self.data[self.idx(x, y)] {
                    out.push((x, y));
                }
            }
        }
        out
    }

    /// Foreground pixel centers as points.
    pub fn foreground_points(&self) -> Vec<Point2> {
        self.foreground_pixels()
            .into_iter()
            .map(|(x, y)| Point2::new(x as f64, y as f64))
            .collect()
    }

    /// One step of 3x3 dilation or erosion. The canvas border behaves as
    /// background, so erosion shrinks shapes that touch the edge.
    pub fn morphology(&self, op: MorphOp) -> BinaryImage {
        let mut out = BinaryImage::new(self.width, self.height);
        for y in 0..self.height as i64 {
            for x in 0..self.width as i64 {
                let mut any = false;
                let mut all = true;
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        if self.get(x + dx, y + dy) {
                            any = true;
                        } else {
                            all = false;
                        }
                    }
                }
                let v = match op {
                    MorphOp::Dilate => any,
                    MorphOp::Erode => all,
                };
                if v {
                    out.set(x as u32, y as u32, true);
                }
            }
        }
        out
    }

    /// Labels 8-connected foreground components. Returns the component count
    /// and a per-pixel label map (0 = background, labels start at 1).
    pub fn label_components_8(&self) -> (usize, Vec<u32>) {
        let mut labels = vec![0u32; self.data.len()];
        let mut next = 0u32;
        let mut stack = Vec::new();
        for y in 0..self.height as i64 {
            for x in 0..self.width as i64 {
                let i = (y as usize) * (self.width as usize) + x as usize;
                if !self.data[i] || labels[i] != 0 {
                    continue;
                }
                next += 1;
                labels[i] = next;
                stack.push((x, y));
                while let Some((cx, cy)) = stack.pop() {
                    for dy in -1..=1 {
                        for dx in -1..=1 {
                            let (nx, ny) = (cx + dx, cy + dy);
                            if self.get(nx, ny) {
                                let ni = (ny as usize) * (self.width as usize) + nx as usize;
                                if labels[ni] == 0 {
                                    labels[ni] = next;
                                    stack.push((nx, ny));
                                }
                            }
                        }
                    }
                }
            }
        }
        (next as usize, labels)
    }

    pub fn count_components_8(&self) -> usize {
        self.label_components_8().0
    }

    /// Number of holes: 4-connected background components that do not touch
    /// the canvas border.
    pub fn count_holes(&self) -> usize {
        let w = self.width as i64;
        let h = self.height as i64;
        let mut seen = vec![false; self.data.len()];
        let mut stack = Vec::new();
        let flood = |seen: &mut Vec<bool>, stack: &mut Vec<(i64, i64)>, sx: i64, sy: i64| {
            let si = (sy as usize) * (self.width as usize) + sx as usize;
            if self.data[si] || seen[si] {
                return false;
            }
            seen[si] = true;
            stack.push((sx, sy));
            while let Some((cx, cy)) = stack.pop() {
                for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                    let (nx, ny) = (cx + dx, cy + dy);
                    if nx < 0 || ny < 0 || nx >= w || ny >= h {
                        continue;
                    }
                    let ni = (ny as usize) * (self.width as usize) + nx as usize;
                    if !self.data[ni] && !seen[ni] {
                        seen[ni] = true;
                        stack.push((nx, ny));
                    }
                }
            }
            true
        };
        // flood the border-connected background first
        for x in 0..w {
            flood(&mut seen, &mut stack, x, 0);
            flood(&mut seen, &mut stack, x, h - 1);
        }
        for y in 0..h {
            flood(&mut seen, &mut stack, 0, y);
            flood(&mut seen, &mut stack, w - 1, y);
        }
        // remaining background components are holes
        let mut holes = 0;
        for y in 1..h - 1 {
            for x in 1..w - 1 {
                if flood(&mut seen, &mut stack, x, y) {
                    holes += 1;
                }
            }
        }
        holes
    }

    fn to_gray(&self) -> GrayImage {
        let mut img = GrayImage::new(self.width, self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                let v = if self.data[self.idx(x, y)] { 255u8 } else { 0u8 };
                img.put_pixel(x, y, Luma([v]));
            }
        }
        img
    }

    fn from_gray(img: &GrayImage) -> BinaryImage {
        BinaryImage::from_fn(img.width(), img.height(), |x, y| img.get_pixel(x, y)[0] >= 128)
    }

    /// Encodes as an 8-bit grayscale PNG (foreground 255).
    pub fn to_png_bytes(&self) -> Result<Vec<u8>> {
        let mut bytes = Vec::new();
        self.to_gray()
            .write_to(&mut Cursor::new(&mut bytes), ImageFormat::Png)?;
        Ok(bytes)
    }

    pub fn from_png_bytes(bytes: &[u8]) -> Result<BinaryImage> {
        let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)?;
        Ok(BinaryImage::from_gray(&img.to_luma8()))
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path.as_ref(), self.to_png_bytes()?)?;
        Ok(())
    }

    pub fn load_png(path: impl AsRef<Path>) -> Result<BinaryImage> {
        let path = path.as_ref();
        let bytes =
            fs::read(path).map_err(|e| Error::format(path, format!("cannot read: {e}")))?;
        BinaryImage::from_png_bytes(&bytes)
            .map_err(|e| Error::format(path, format!("invalid PNG: {e}")))
    }
}
