//! Deterministic synthetic shape corpus.
//!
//! Twenty clean shapes (single component, no holes) across five families:
//! disks, rectangles, ellipses, crosses, and star-shaped blobs built from
//! seeded radial harmonics. The corpus backs integration tests and demo
//! pipelines, so it must be identical on every call and every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::raster::BinaryImage;

/// Canvas side used by every corpus shape.
pub const CANVAS: u32 = 256;

const CENTER: f64 = 127.5;

/// One synthetic shape with a stable identity.
#[derive(Debug, Clone)]
pub struct SynthShape {
    pub id: String,
    pub class: &'static str,
    pub image: BinaryImage,
}

fn from_predicate(f: impl Fn(f64, f64) -> bool) -> BinaryImage {
    BinaryImage::from_fn(CANVAS, CANVAS, |x, y| {
        f(f64::from(x) - CENTER, f64::from(y) - CENTER)
    })
}

fn disk(r: f64) -> BinaryImage {
    from_predicate(|x, y| x * x + y * y <= r * r)
}

fn rect(w: f64, h: f64) -> BinaryImage {
    from_predicate(|x, y| x.abs() <= w / 2.0 && y.abs() <= h / 2.0)
}

fn ellipse(a: f64, b: f64) -> BinaryImage {
    from_predicate(|x, y| (x / a).powi(2) + (y / b).powi(2) <= 1.0)
}

fn cross(len: f64, horizontal: f64, vertical: f64) -> BinaryImage {
    from_predicate(|x, y| {
        (x.abs() <= len / 2.0 && y.abs() <= horizontal / 2.0)
            || (y.abs() <= len / 2.0 && x.abs() <= vertical / 2.0)
    })
}

/// Star-shaped region bounded by `r(theta) = base * (1 + sum of small
/// harmonics)`. Amplitudes stay well under 1, so the boundary never folds
/// and the region keeps a single component with no holes.
fn blob(seed: u64) -> BinaryImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base: f64 = rng.random_range(65.0..85.0);
    let harmonics: Vec<(f64, f64, f64)> = (2..=5)
        .map(|k| {
            let amp = rng.random_range(0.04..0.12);
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            (f64::from(k), amp, phase)
        })
        .collect();
    from_predicate(move |x, y| {
        let theta = y.atan2(x);
        let mut r = 1.0;
        for &(k, amp, phase) in &harmonics {
            r += amp * (k * theta + phase).sin();
        }
        x * x + y * y <= (base * r).powi(2)
    })
}

/// Builds the full 20-shape corpus: four instances per family, in a fixed
/// order with stable ids.
pub fn corpus() -> Vec<SynthShape> {
    let mut shapes = Vec::with_capacity(20);
    let mut push = |class: &'static str, idx: usize, image: BinaryImage| {
        shapes.push(SynthShape {
            id: format!("{class}-{idx:02}"),
            class,
            image,
        });
    };

    for (i, r) in [20.0, 30.0, 45.0, 60.0].into_iter().enumerate() {
        push("disk", i, disk(r));
    }
    for (i, (w, h)) in [(200.0, 80.0), (180.0, 50.0), (120.0, 100.0), (220.0, 30.0)]
        .into_iter()
        .enumerate()
    {
        push("rect", i, rect(w, h));
    }
    for (i, (a, b)) in [(90.0, 45.0), (100.0, 30.0), (70.0, 55.0), (110.0, 60.0)]
        .into_iter()
        .enumerate()
    {
        push("ellipse", i, ellipse(a, b));
    }
    for (i, (len, hor, ver)) in [
        (200.0, 40.0, 40.0),
        (180.0, 60.0, 30.0),
        (160.0, 30.0, 50.0),
        (210.0, 50.0, 24.0),
    ]
    .into_iter()
    .enumerate()
    {
        push("cross", i, cross(len, hor, ver));
    }
    for i in 0..4 {
        push("blob", i, blob(1000 + i as u64));
    }
    shapes
}
