//! Challenge metrics and the batch scoring harness.
//!
//! Three tracks share one harness: pixel predictions score by F1 against
//! the ground-truth raster, point predictions by symmetric Chamfer
//! distance, and parametric predictions by a control-point distance that
//! pairs branches in canonical order and penalizes unmatched branches by
//! their bending energy.
//!
//! Scores come out as CSV rows `shape_id,metric,value,flags` plus one
//! `aggregate` row holding the mean over scoreable shapes.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geom::{Point2, PointSet};
use crate::parametrize::{BezierBranch, ParametricSkeleton};
use crate::raster::BinaryImage;

/// Pixel-track confusion counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelReport {
    pub tp: usize,
    pub fp: usize,
    pub fn_count: usize,
}

impl PixelReport {
    pub fn precision(&self) -> f64 {
        if self.tp == 0 {
            0.0
        } else {
            self.tp as f64 / (self.tp + self.fp) as f64
        }
    }

    pub fn recall(&self) -> f64 {
        if self.tp == 0 {
            0.0
        } else {
            self.tp as f64 / (self.tp + self.fn_count) as f64
        }
    }

    /// Harmonic mean of precision and recall; zero when nothing was hit.
    pub fn f1(&self) -> f64 {
        let p = self.precision();
        let r = self.recall();
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

/// Compares a predicted skeleton raster against the ground truth.
pub fn f1_pixel(pred: &BinaryImage, gt: &BinaryImage) -> Result<PixelReport> {
    if pred.width() != gt.width() || pred.height() != gt.height() {
        return Err(Error::DimensionMismatch(
            pred.width(),
            pred.height(),
            gt.width(),
            gt.height(),
        ));
    }
    let mut report = PixelReport {
        tp: 0,
        fp: 0,
        fn_count: 0,
    };
    for y in 0..gt.height() {
        for x in 0..gt.width() {
            let (p, g) = (pred.get(i64::from(x), i64::from(y)), gt.get(i64::from(x), i64::from(y)));
            match (p, g) {
                (true, true) => report.tp += 1,
                (true, false) => report.fp += 1,
                (false, true) => report.fn_count += 1,
                (false, false) => {}
            }
        }
    }
    Ok(report)
}

/// Exact nearest-neighbor distances from every point of `from` to the set
/// `to`. Small inputs go brute force; large ones use a uniform grid with an
/// expanding ring search.
fn nearest_dists(from: &PointSet, to: &PointSet) -> Vec<f64> {
    let brute = |from: &PointSet| -> Vec<f64> {
        from.iter()
            .map(|p| to.iter().map(|q| p.dist(*q)).fold(f64::INFINITY, f64::min))
            .collect()
    };
    if from.len().saturating_mul(to.len()) <= 250_000 {
        return brute(from);
    }
    let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
    let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in to {
        min_x = min_x.min(p.x);
        min_y = min_y.min(p.y);
        max_x = max_x.max(p.x);
        max_y = max_y.max(p.y);
    }
    let extent = (max_x - min_x).max(max_y - min_y);
    let cell = extent / (to.len() as f64).sqrt();
    if !cell.is_finite() || cell < 1e-6 {
        return brute(from);
    }
    let key = |p: &Point2| -> (i64, i64) {
        (
            ((p.x - min_x) / cell).floor() as i64,
            ((p.y - min_y) / cell).floor() as i64,
        )
    };
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in to.iter().enumerate() {
        grid.entry(key(p)).or_default().push(i);
    }
    let max_ring = ((extent / cell).ceil() as i64 + 2).max(2);
    from.iter()
        .map(|p| {
            let (cx, cy) = key(p);
            let mut best = f64::INFINITY;
            for ring in 0..=max_ring {
                // a cell on ring r can hold points as close as (r-1)*cell
                if best <= cell * (ring as f64 - 1.0) {
                    break;
                }
                for dy in -ring..=ring {
                    for dx in -ring..=ring {
                        if dx.abs().max(dy.abs()) != ring {
                            continue;
                        }
                        if let Some(bucket) = grid.get(&(cx + dx, cy + dy)) {
                            for &i in bucket {
                                best = best.min(p.dist(to[i]));
                            }
                        }
                    }
                }
            }
            best
        })
        .collect()
}

/// Both one-sided mean nearest-neighbor distances between point sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChamferReport {
    pub forward: f64,
    pub backward: f64,
}

impl ChamferReport {
    /// The symmetric Chamfer distance: sum of the one-sided means.
    pub fn value(&self) -> f64 {
        self.forward + self.backward
    }
}

pub fn chamfer(a: &PointSet, b: &PointSet) -> Result<ChamferReport> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyPointSet("chamfer"));
    }
    let mean = |d: Vec<f64>| d.iter().sum::<f64>() / d.len() as f64;
    Ok(ChamferReport {
        forward: mean(nearest_dists(a, b)),
        backward: mean(nearest_dists(b, a)),
    })
}

/// Mean squared control-point distance between two branches, averaged over
/// the six control points and summed over x, y, and r.
pub fn msd(a: &BezierBranch, b: &BezierBranch) -> f64 {
    let mut sum = 0.0;
    for i in 0..6 {
        for c in 0..3 {
            let d = a.ctrl[i][c] - b.ctrl[i][c];
            sum += d * d;
        }
    }
    sum / 6.0
}

/// Bending-energy penalty of a branch: mean squared control-point gap in
/// (x, y) plus the mean squared radius.
pub fn mbe(b: &BezierBranch) -> f64 {
    let mut gaps = 0.0;
    for i in 0..5 {
        let dx = b.ctrl[i + 1][0] - b.ctrl[i][0];
        let dy = b.ctrl[i + 1][1] - b.ctrl[i][1];
        gaps += dx * dx + dy * dy;
    }
    let mut radii = 0.0;
    for cp in &b.ctrl {
        radii += cp[2] * cp[2];
    }
    gaps / 5.0 + radii / 6.0
}

/// Parametric-track distance between two branch lists.
///
/// Branches pair up positionally in their canonical order; the shorter list
/// matches the head of the longer one. Matched pairs contribute their MSD,
/// every unmatched branch of the longer list contributes its MBE, and the
/// total divides by the larger branch count. Two empty skeletons score 0.
pub fn parametric_distance(gt: &ParametricSkeleton, pred: &ParametricSkeleton) -> f64 {
    let n_small = gt.branches.len().min(pred.branches.len());
    let n_large = gt.branches.len().max(pred.branches.len());
    if n_large == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    for i in 0..n_small {
        total += msd(&gt.branches[i], &pred.branches[i]);
    }
    let longer = if gt.branches.len() >= pred.branches.len() {
        &gt.branches
    } else {
        &pred.branches
    };
    for b in &longer[n_small..] {
        total += mbe(b);
    }
    total / n_large as f64
}

/// Which kind of prediction a batch holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Track {
    Pixel,
    Point,
    Parametric,
}

impl Track {
    pub fn metric_name(self) -> &'static str {
        match self {
            Track::Pixel => "f1",
            Track::Point => "chamfer",
            Track::Parametric => "parametric",
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Track::Pixel => "png",
            Track::Point => "pts",
            Track::Parametric => "csv",
        }
    }
}

/// One scored shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub shape_id: String,
    pub value: f64,
    pub flags: String,
}

/// Scores for a whole prediction directory.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchReport {
    pub track: Track,
    pub rows: Vec<ScoreRow>,
    /// Mean value over shapes that produced a score.
    pub aggregate: f64,
    /// Shapes whose predictions could not be read or compared.
    pub errors: usize,
}

impl BatchReport {
    pub fn to_csv_string(&self) -> String {
        let metric = self.track.metric_name();
        let mut out = String::from("shape_id,metric,value,flags\n");
        for row in &self.rows {
            let flags = row.flags.replace(',', ";");
            out.push_str(&format!("{},{},{},{}\n", row.shape_id, metric, row.value, flags));
        }
        out.push_str(&format!("aggregate,{},{},\n", metric, self.aggregate));
        out
    }
}

fn centroid(points: &PointSet) -> Point2 {
    let mut c = Point2::new(0.0, 0.0);
    for p in points {
        c.x += p.x;
        c.y += p.y;
    }
    c.x /= points.len() as f64;
    c.y /= points.len() as f64;
    c
}

fn mean_mbe(s: &ParametricSkeleton) -> f64 {
    if s.branches.is_empty() {
        return 0.0;
    }
    s.branches.iter().map(mbe).sum::<f64>() / s.branches.len() as f64
}

/// Scores every ground-truth shape in `gt_dir` against the same-named
/// prediction in `pred_dir`.
///
/// A missing prediction is not an error: it scores the worst plausible
/// baseline (zero F1, the Chamfer distance to the cloud's centroid, or the
/// ground truth's own bending energy) and is flagged `missing`. A
/// prediction that exists but cannot be read or compared is flagged with
/// the underlying error, excluded from the aggregate, and counted in
/// `errors`. Ground-truth files must all load; anything else aborts.
pub fn batch_evaluate(
    track: Track,
    pred_dir: impl AsRef<Path>,
    gt_dir: impl AsRef<Path>,
) -> Result<BatchReport> {
    let gt_dir = gt_dir.as_ref();
    let pred_dir = pred_dir.as_ref();
    let mut stems: Vec<String> = Vec::new();
    for entry in fs::read_dir(gt_dir)
        .map_err(|e| Error::format(gt_dir, format!("cannot list: {e}")))?
    {
        let path = entry
            .map_err(|e| Error::format(gt_dir, format!("cannot list: {e}")))?
            .path();
        if path.extension().and_then(|e| e.to_str()) == Some(track.extension()) {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                stems.push(stem.to_string());
            }
        }
    }
    stems.sort();
    if stems.is_empty() {
        return Err(Error::format(
            gt_dir,
            format!("no .{} ground-truth files", track.extension()),
        ));
    }

    let mut rows = Vec::with_capacity(stems.len());
    let mut errors = 0;
    let mut sum = 0.0;
    let mut scored = 0usize;
    for stem in &stems {
        let gt_path = gt_dir.join(format!("{stem}.{}", track.extension()));
        let pred_path: PathBuf = pred_dir.join(format!("{stem}.{}", track.extension()));
        let missing = !pred_path.exists();
        let outcome: Result<(f64, String)> = match track {
            Track::Pixel => {
                let gt = BinaryImage::load_png(&gt_path)?;
                if missing {
                    Ok((0.0, "missing".to_string()))
                } else {
                    BinaryImage::load_png(&pred_path)
                        .and_then(|pred| f1_pixel(&pred, &gt))
                        .map(|r| (r.f1(), String::new()))
                }
            }
            Track::Point => {
                let (gt, _) = crate::datagen::read_pts_file(&gt_path)?;
                if gt.is_empty() {
                    return Err(Error::format(&gt_path, "empty ground-truth cloud"));
                }
                if missing {
                    let fallback = vec![centroid(&gt)];
                    chamfer(&gt, &fallback).map(|r| (r.value(), "missing".to_string()))
                } else {
                    crate::datagen::read_pts_file(&pred_path).and_then(|(pred, _)| {
                        chamfer(&gt, &pred).map(|r| (r.value(), String::new()))
                    })
                }
            }
            Track::Parametric => {
                let gt = ParametricSkeleton::read_csv_file(&gt_path)?;
                if missing {
                    Ok((mean_mbe(&gt), "missing".to_string()))
                } else {
                    ParametricSkeleton::read_csv_file(&pred_path)
                        .map(|pred| (parametric_distance(&gt, &pred), String::new()))
                }
            }
        };
        match outcome {
            Ok((value, flags)) => {
                sum += value;
                scored += 1;
                rows.push(ScoreRow {
                    shape_id: stem.clone(),
                    value,
                    flags,
                });
            }
            Err(e) => {
                errors += 1;
                rows.push(ScoreRow {
                    shape_id: stem.clone(),
                    value: f64::NAN,
                    flags: format!("error: {e}"),
                });
            }
        }
    }
    let aggregate = if scored > 0 { sum / scored as f64 } else { f64::NAN };
    Ok(BatchReport {
        track,
        rows,
        aggregate,
        errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn image_from_bits(width: u32, bits: &[u8]) -> BinaryImage {
        let height = bits.len() as u32 / width;
        BinaryImage::from_fn(width, height, |x, y| bits[(y * width + x) as usize] != 0)
    }

    #[test]
    fn f1_counts_and_harmonic_mean() {
        let pred = image_from_bits(3, &[1, 1, 0]);
        let gt = image_from_bits(3, &[0, 1, 1]);
        let r = f1_pixel(&pred, &gt).unwrap();
        assert_eq!((r.tp, r.fp, r.fn_count), (1, 1, 1));
        assert_eq!(r.precision(), 0.5);
        assert_eq!(r.recall(), 0.5);
        assert_eq!(r.f1(), 0.5);
    }

    #[test]
    fn f1_is_zero_without_true_positives() {
        let pred = image_from_bits(2, &[1, 0]);
        let gt = image_from_bits(2, &[0, 1]);
        let r = f1_pixel(&pred, &gt).unwrap();
        assert_eq!(r.f1(), 0.0);
        assert_eq!(r.precision(), 0.0);
        assert_eq!(r.recall(), 0.0);
    }

    #[test]
    fn f1_rejects_mismatched_sizes() {
        let a = BinaryImage::new(2, 2);
        let b = BinaryImage::new(3, 2);
        assert!(matches!(
            f1_pixel(&a, &b),
            Err(Error::DimensionMismatch(2, 2, 3, 2))
        ));
    }

    #[test]
    fn chamfer_matches_a_hand_computation() {
        let a = vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)];
        let b = vec![Point2::new(0.0, 1.0)];
        let r = chamfer(&a, &b).unwrap();
        let fwd = (1.0 + 2.0f64.sqrt()) / 2.0;
        assert!((r.forward - fwd).abs() < 1e-12);
        assert!((r.backward - 1.0).abs() < 1e-12);
        assert!((r.value() - (fwd + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn chamfer_of_identical_sets_is_zero() {
        let a = vec![Point2::new(3.0, 4.0), Point2::new(-1.0, 2.0)];
        assert_eq!(chamfer(&a, &a).unwrap().value(), 0.0);
        assert!(chamfer(&a, &vec![]).is_err());
    }

    #[test]
    fn grid_search_agrees_with_brute_force() {
        // large enough to trigger the grid path
        let mut a = PointSet::new();
        let mut b = PointSet::new();
        let mut state = 1u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..600 {
            a.push(Point2::new(next() * 100.0, next() * 100.0));
        }
        for _ in 0..600 {
            b.push(Point2::new(next() * 100.0, next() * 100.0));
        }
        let grid = nearest_dists(&a, &b);
        for (i, p) in a.iter().enumerate() {
            let brute = b.iter().map(|q| p.dist(*q)).fold(f64::INFINITY, f64::min);
            assert!((grid[i] - brute).abs() < 1e-12, "point {i}: {} vs {brute}", grid[i]);
        }
    }

    fn branch_with(ctrl: [[f64; 3]; 6]) -> BezierBranch {
        BezierBranch { ctrl }
    }

    fn straight_branch(len: f64) -> BezierBranch {
        let mut ctrl = [[0.0; 3]; 6];
        for (i, cp) in ctrl.iter_mut().enumerate() {
            cp[0] = len * i as f64 / 5.0;
        }
        branch_with(ctrl)
    }

    #[test]
    fn msd_of_identical_branches_is_zero() {
        let b = straight_branch(10.0);
        assert_eq!(msd(&b, &b), 0.0);
        let mut shifted = b;
        shifted.ctrl[2][1] += 3.0;
        assert!((msd(&b, &shifted) - 9.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn mbe_of_a_straight_zero_radius_branch() {
        let b = straight_branch(10.0);
        // five gaps of 2 px each and no radius term
        assert!((mbe(&b) - 4.0).abs() < 1e-12);
        let mut fat = b;
        for cp in fat.ctrl.iter_mut() {
            cp[2] = 3.0;
        }
        assert!((mbe(&fat) - (4.0 + 9.0)).abs() < 1e-12);
    }

    #[test]
    fn parametric_distance_pairs_and_penalizes() {
        let g0 = straight_branch(10.0);
        let mut g1 = straight_branch(10.0);
        g1.ctrl.iter_mut().for_each(|cp| cp[1] += 20.0);
        let gt = ParametricSkeleton {
            branches: vec![g0, g1],
        };
        let pred = ParametricSkeleton {
            branches: vec![g0],
        };
        let expected = (msd(&g0, &g0) + mbe(&g1)) / 2.0;
        assert!((parametric_distance(&gt, &pred) - expected).abs() < 1e-12);
        let empty = ParametricSkeleton { branches: vec![] };
        assert_eq!(parametric_distance(&empty, &empty), 0.0);
        assert!((parametric_distance(&gt, &empty) - (mbe(&g0) + mbe(&g1)) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_parametric_prediction_scores_zero() {
        let gt = ParametricSkeleton {
            branches: vec![straight_branch(10.0), straight_branch(20.0)],
        };
        assert_eq!(parametric_distance(&gt, &gt), 0.0);
    }

    proptest! {
        #[test]
        fn chamfer_is_symmetric(
            a in prop::collection::vec((0.0..50.0f64, 0.0..50.0f64), 1..40),
            b in prop::collection::vec((0.0..50.0f64, 0.0..50.0f64), 1..40),
        ) {
            let pa: PointSet = a.iter().map(|&(x, y)| Point2::new(x, y)).collect();
            let pb: PointSet = b.iter().map(|&(x, y)| Point2::new(x, y)).collect();
            let ab = chamfer(&pa, &pb).unwrap();
            let ba = chamfer(&pb, &pa).unwrap();
            prop_assert_eq!(ab.value(), ba.value());
            prop_assert_eq!(ab.forward, ba.backward);
            prop_assert!(ab.value() >= 0.0);
        }

        #[test]
        fn f1_stays_in_unit_range(
            bits_a in prop::collection::vec(0u8..2, 36),
            bits_b in prop::collection::vec(0u8..2, 36),
        ) {
            let pred = image_from_bits(6, &bits_a);
            let gt = image_from_bits(6, &bits_b);
            let f = f1_pixel(&pred, &gt).unwrap().f1();
            prop_assert!((0.0..=1.0).contains(&f));
        }

        #[test]
        fn msd_is_a_symmetric_nonnegative_form(
            flat_a in prop::collection::vec(-50.0..50.0f64, 18),
            flat_b in prop::collection::vec(-50.0..50.0f64, 18),
        ) {
            let a = BezierBranch::from_flat(&flat_a.clone().try_into().unwrap());
            let b = BezierBranch::from_flat(&flat_b.clone().try_into().unwrap());
            prop_assert_eq!(msd(&a, &b), msd(&b, &a));
            prop_assert!(msd(&a, &b) >= 0.0);
            prop_assert_eq!(msd(&a, &a), 0.0);
        }
    }

    #[test]
    fn batch_scores_missing_and_broken_predictions() {
        let dir = std::env::temp_dir().join(format!("skelbench-metrics-{}", std::process::id()));
        let gt_dir = dir.join("gt");
        let pred_dir = dir.join("pred");
        std::fs::create_dir_all(&gt_dir).unwrap();
        std::fs::create_dir_all(&pred_dir).unwrap();

        let img = BinaryImage::from_fn(8, 8, |x, y| x == y);
        img.save_png(gt_dir.join("a.png")).unwrap();
        img.save_png(gt_dir.join("b.png")).unwrap();
        img.save_png(gt_dir.join("c.png")).unwrap();

        img.save_png(pred_dir.join("a.png")).unwrap();
        std::fs::write(pred_dir.join("c.png"), b"not a png").unwrap();

        let report = batch_evaluate(Track::Pixel, &pred_dir, &gt_dir).unwrap();
        assert_eq!(report.rows.len(), 3);
        assert_eq!(report.rows[0].shape_id, "a");
        assert_eq!(report.rows[0].value, 1.0);
        assert_eq!(report.rows[1].value, 0.0);
        assert_eq!(report.rows[1].flags, "missing");
        assert!(report.rows[2].value.is_nan());
        assert!(report.rows[2].flags.starts_with("error"));
        assert_eq!(report.errors, 1);
        // aggregate averages the scored rows only: (1.0 + 0.0) / 2
        assert_eq!(report.aggregate, 0.5);

        let csv = report.to_csv_string();
        assert!(csv.starts_with("shape_id,metric,value,flags\n"));
        assert!(csv.contains("a,f1,1,"));
        assert!(csv.trim_end().ends_with("aggregate,f1,0.5,"));

        std::fs::remove_dir_all(&dir).unwrap();
    }
}
