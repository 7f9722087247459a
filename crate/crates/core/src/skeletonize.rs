//! Skeleton extraction: shape cleanup, the Voronoi-based medial axis, and
//! pruning down to a reconstruction-error budget.
//!
//! The medial axis comes from the Voronoi diagram of a dense boundary
//! sampling, restricted to the shape interior: Voronoi vertices are
//! circumcenters of Delaunay triangles, and the circumradius is exactly the
//! distance to the nearest boundary sample, which makes it the medial radius.
//!
//! Pruning removes whole leaf branches greedily while a coverage grid proves
//! that every shape pixel stays within the threshold of the reconstruction,
//! so the advertised error bound is checked exactly rather than estimated.

use std::collections::HashSet;

use crate::contour::{extract_contour, fill_polygon, Contour};
use crate::error::{Error, Result};
use crate::geom::{MedialPoint, Point2};
use crate::raster::{BinaryImage, MorphOp};
use crate::skeleton::{
    branch_chains, for_each_edge_pixel, for_each_node_pixel, SkeletonGraph,
};

/// What [`clean_shape`] did to the input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CleanReport {
    /// Morphological closing changed the component or hole count; the result
    /// should be reviewed.
    pub topology_changed: bool,
    pub holes_closed: usize,
    pub islands_removed: usize,
}

/// Prepares a raster for skeletonization: one round of morphological closing
/// (fills pixel-scale holes and cracks) followed by removal of isolated
/// single foreground pixels.
pub fn clean_shape(img: &BinaryImage) -> Result<(BinaryImage, CleanReport)> {
    if img.is_empty() {
        return Err(Error::EmptyShape);
    }
    let comps_before = img.count_components_8();
    let holes_before = img.count_holes();

    let closed = img.morphology(MorphOp::Dilate).morphology(MorphOp::Erode);
    let comps_after = closed.count_components_8();
    let holes_after = closed.count_holes();

    let mut out = closed.clone();
    let mut islands_removed = 0usize;
    for (x, y) in closed.foreground_pixels() {
        let (xi, yi) = (x as i64, y as i64);
        let mut lonely = true;
        for dy in -1..=1 {
            for dx in -1..=1 {
                if (dx != 0 || dy != 0) && closed.get(xi + dx, yi + dy) {
                    lonely = false;
                }
            }
        }
        if lonely {
            out.set(x, y, false);
            islands_removed += 1;
        }
    }
    if out.is_empty() {
        return Err(Error::ShapeVanished);
    }
    Ok((
        out,
        CleanReport {
            topology_changed: comps_before != comps_after || holes_before != holes_after,
            holes_closed: holes_before.saturating_sub(holes_after),
            islands_removed,
        },
    ))
}

fn circumcenter(a: Point2, b: Point2, c: Point2) -> Option<(Point2, f64)> {
    let bx = b.x - a.x;
    let by = b.y - a.y;
    let cx = c.x - a.x;
    let cy = c.y - a.y;
    let d = 2.0 * (bx * cy - by * cx);
    if d.abs() < 1e-12 {
        return None;
    }
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    let ux = (cy * b2 - by * c2) / d;
    let uy = (bx * c2 - cx * b2) / d;
    Some((Point2::new(a.x + ux, a.y + uy), (ux * ux + uy * uy).sqrt()))
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, mut v: usize) -> usize {
        while self.0[v] != v {
            self.0[v] = self.0[self.0[v]];
            v = self.0[v];
        }
        v
    }

    /// Joins the two sets, keeping the smaller root as representative.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = (ra.min(rb), ra.max(rb));
        self.0[hi] = lo;
        true
    }
}

/// Pixel-resolution interior test backed by a filled polygon mask.
struct InteriorMask {
    mask: BinaryImage,
    ox: i64,
    oy: i64,
}

impl InteriorMask {
    fn build(contour: &Contour) -> Result<InteriorMask> {
        let (min, max) = contour.bbox();
        let ox = min.x.floor() as i64 - 2;
        let oy = min.y.floor() as i64 - 2;
        let w = (max.x.ceil() as i64 - ox + 3) as u32;
        let h = (max.y.ceil() as i64 - oy + 3) as u32;
        let shifted = Contour::from_vertices(
            contour
                .vertices()
                .iter()
                .map(|v| Point2::new(v.x - ox as f64, v.y - oy as f64))
                .collect(),
        )?;
        Ok(InteriorMask {
            mask: fill_polygon(&shifted, w, h),
            ox,
            oy,
        })
    }

    fn contains(&self, p: Point2) -> bool {
        let x = (p.x - self.ox as f64).round() as i64;
        let y = (p.y - self.oy as f64).round() as i64;
        self.mask.get(x, y)
    }

    /// True when the whole segment stays interior, sampled at half-pixel
    /// steps.
    fn contains_segment(&self, a: Point2, b: Point2) -> bool {
        let steps = ((a.dist(b) / 0.5).ceil() as usize).max(1);
        (0..=steps).all(|k| self.contains(a.lerp(b, k as f64 / steps as f64)))
    }
}

/// Interior Voronoi skeleton of a closed contour.
///
/// The boundary is resampled at `sample_step`; Voronoi vertices of the
/// samples that fall inside the shape become skeleton nodes (with the
/// circumradius as medial radius), and Voronoi edges that stay entirely
/// interior become skeleton edges. Near-coincident vertices are merged,
/// spurious cycles from near-cocircular samples are reduced to a spanning
/// tree, and only the largest connected piece is kept.
///
/// Interior tests run at pixel resolution, which is exact for contours
/// extracted from rasters (their edges follow pixel cracks).
pub fn voronoi_medial_axis(contour: &Contour, sample_step: f64) -> Result<SkeletonGraph> {
    if !(sample_step > 0.0) || !sample_step.is_finite() {
        return Err(Error::BadSampleStep(sample_step));
    }
    let area = contour.signed_area().abs();
    if area < 1.0 {
        return Err(Error::DegenerateContour(area));
    }
    let samples = contour.resample(sample_step)?;
    if samples.len() < 3 {
        return Err(Error::DegenerateContour(area));
    }

    let interior = InteriorMask::build(contour)?;
    let sites: Vec<delaunator::Point> = samples
        .iter()
        .map(|p| delaunator::Point { x: p.x, y: p.y })
        .collect();
    let tri = delaunator::triangulate(&sites);
    let n_tri = tri.triangles.len() / 3;
    if n_tri == 0 {
        return Err(Error::DegenerateContour(area));
    }

    // circumcenters that lie inside the shape become candidate nodes
    let mut centers: Vec<Option<(Point2, f64)>> = Vec::with_capacity(n_tri);
    for t in 0..n_tri {
        let a = samples[tri.triangles[3 * t]];
        let b = samples[tri.triangles[3 * t + 1]];
        let c = samples[tri.triangles[3 * t + 2]];
        let cc = circumcenter(a, b, c).filter(|(p, _)| interior.contains(*p));
        centers.push(cc);
    }

    // adjacent triangles (shared halfedge) give Voronoi edges; keep an edge
    // only when the segment between circumcenters stays interior
    let mut raw_edges: Vec<(usize, usize)> = Vec::new();
    for e in 0..tri.halfedges.len() {
        let twin = tri.halfedges[e];
        if twin == delaunator::EMPTY || twin < e {
            continue;
        }
        let (t1, t2) = (e / 3, twin / 3);
        if let (Some((p1, _)), Some((p2, _))) = (&centers[t1], &centers[t2]) {
            if interior.contains_segment(*p1, *p2) {
                raw_edges.push((t1, t2));
            }
        }
    }

    // merge circumcenters that coincide within tolerance
    const MERGE_TOL: f64 = 1e-6;
    let mut uf = UnionFind::new(n_tri);
    {
        use std::collections::HashMap;
        let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (t, c) in centers.iter().enumerate() {
            let Some((p, _)) = c else { continue };
            let key = ((p.x / MERGE_TOL).floor() as i64, (p.y / MERGE_TOL).floor() as i64);
            for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(others) = cells.get(&(key.0 + dx, key.1 + dy)) {
                        for &o in others {
                            let (q, _) = centers[o].as_ref().unwrap();
                            if p.dist(*q) <= MERGE_TOL {
                                uf.union(t, o);
                            }
                        }
                    }
                }
            }
            cells.entry(key).or_default().push(t);
        }
    }

    // representative node per merged group, ordered by first triangle index
    let mut node_of_tri = vec![usize::MAX; n_tri];
    let mut nodes: Vec<MedialPoint> = Vec::new();
    for t in 0..n_tri {
        let Some((p, r)) = centers[t] else { continue };
        let root = uf.find(t);
        if node_of_tri[root] == usize::MAX {
            node_of_tri[root] = nodes.len();
            nodes.push(MedialPoint::new(p.x, p.y, r));
        } else {
            let idx = node_of_tri[root];
            nodes[idx].r = nodes[idx].r.min(r);
        }
        node_of_tri[t] = node_of_tri[root];
    }
    if nodes.is_empty() {
        return Err(Error::NoMedialVertices);
    }

    let mut edges: Vec<(usize, usize)> = raw_edges
        .into_iter()
        .map(|(a, b)| {
            let (na, nb) = (node_of_tri[a], node_of_tri[b]);
            (na.min(nb), na.max(nb))
        })
        .filter(|&(a, b)| a != b)
        .collect();
    edges.sort_unstable();
    edges.dedup();

    // near-cocircular boundary samples can produce tiny spurious loops; a
    // simply connected shape has a tree skeleton, so keep a spanning forest
    let mut uf_tree = UnionFind::new(nodes.len());
    edges.retain(|&(a, b)| uf_tree.union(a, b));

    // keep the largest connected piece (ties: the one containing the lowest
    // node index)
    let graph = SkeletonGraph::new(nodes, edges)?;
    let comps = graph.connected_components();
    let best = comps
        .iter()
        .max_by_key(|c| (c.len(), std::cmp::Reverse(c[0])))
        .expect("nonempty graph has a component");
    if comps.len() == 1 {
        return Ok(graph);
    }
    let mut remap = vec![usize::MAX; graph.nodes.len()];
    for (new_idx, &old) in best.iter().enumerate() {
        remap[old] = new_idx;
    }
    let kept_nodes: Vec<MedialPoint> = best.iter().map(|&i| graph.nodes[i]).collect();
    let kept_edges: Vec<(usize, usize)> = graph
        .edges
        .iter()
        .filter(|&&(a, b)| remap[a] != usize::MAX && remap[b] != usize::MAX)
        .map(|&(a, b)| (remap[a], remap[b]))
        .collect();
    SkeletonGraph::new(kept_nodes, kept_edges)
}

/// Reconstruction-error budget for [`prune`]: the largest distance any shape
/// pixel may end up from the pruned skeleton's reconstruction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PruneThreshold(f64);

impl PruneThreshold {
    pub fn new(eps: f64) -> Result<Self> {
        if eps > 0.0 && eps.is_finite() {
            Ok(PruneThreshold(eps))
        } else {
            Err(Error::BadThreshold(eps))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Live graph state while pruning.
struct PruneState<'a> {
    g: &'a SkeletonGraph,
    /// Dilated, foreground-restricted pixel set per edge.
    edge_px: Vec<Vec<u32>>,
    /// How many live edges cover each shape pixel.
    coverage: Vec<u32>,
    /// Shape pixels the full skeleton never covered; they are not charged to
    /// any branch.
    uncovered0: Vec<bool>,
    alive_node: Vec<bool>,
    alive_edge: Vec<bool>,
    deg: Vec<usize>,
    adj: Vec<Vec<(usize, usize)>>, // (neighbor, edge id)
    alive_count: usize,
    scratch: Vec<u32>,
    touched: Vec<u32>,
}

impl PruneState<'_> {
    /// True when removing `edges` leaves every already-covered shape pixel
    /// covered by some other live edge.
    fn removable(&mut self, edges: &[usize]) -> bool {
        self.touched.clear();
        for &e in edges {
            for &i in &self.edge_px[e] {
                if self.scratch[i as usize] == 0 {
                    self.touched.push(i);
                }
                self.scratch[i as usize] += 1;
            }
        }
        let mut ok = true;
        for &i in &self.touched {
            if !self.uncovered0[i as usize] && self.coverage[i as usize] == self.scratch[i as usize]
            {
                ok = false;
                break;
            }
        }
        for &i in &self.touched {
            self.scratch[i as usize] = 0;
        }
        ok
    }

    fn remove(&mut self, edges: &[usize], nodes: &[usize]) {
        for &e in edges {
            debug_assert!(self.alive_edge[e]);
            self.alive_edge[e] = false;
            for &i in &self.edge_px[e] {
                self.coverage[i as usize] -= 1;
            }
            let (a, b) = self.g.edges[e];
            self.deg[a] -= 1;
            self.deg[b] -= 1;
        }
        for &v in nodes {
            debug_assert!(self.alive_node[v]);
            self.alive_node[v] = false;
            self.alive_count -= 1;
        }
    }

    /// Walks from a leaf through degree-2 nodes to the first junction.
    /// Returns the interior nodes (leaf included, junction excluded) and the
    /// traversed edges, or None when the walk ends at another leaf (the
    /// graph is a bare path).
    fn leaf_branch(&self, leaf: usize) -> Option<(Vec<usize>, Vec<usize>)> {
        let mut nodes = vec![leaf];
        let mut edges = Vec::new();
        let mut prev = usize::MAX;
        let mut cur = leaf;
        loop {
            let &(next, edge) = self.adj[cur]
                .iter()
                .find(|&&(n, e)| self.alive_edge[e] && n != prev)?;
            edges.push(edge);
            if self.deg[next] >= 3 {
                return Some((nodes, edges));
            }
            if self.deg[next] == 1 {
                return None; // reached the other end of a path
            }
            nodes.push(next);
            prev = cur;
            cur = next;
        }
    }
}

/// Removes skeleton branches, cheapest first, as long as the reconstruction
/// of what remains keeps every shape foreground pixel within `threshold`.
///
/// Branch granularity: whole leaf branches (leaf up to the next junction)
/// go first; once the remaining skeleton is a single path, it is shortened
/// node by node from its ends. The result is never emptied below one node,
/// stays connected, and its nodes are a subset of the input nodes.
pub fn prune(g: &SkeletonGraph, shape: &BinaryImage, threshold: PruneThreshold) -> SkeletonGraph {
    let eps = threshold.value();
    if g.nodes.len() <= 1 || g.edges.is_empty() {
        return g.clone();
    }
    let (w, h) = (shape.width(), shape.height());
    let wh = (w as usize) * (h as usize);

    let ir = eps.ceil() as i64;
    let mut offsets = Vec::new();
    for dy in -ir..=ir {
        for dx in -ir..=ir {
            if (dx * dx + dy * dy) as f64 <= eps * eps + 1e-9 {
                offsets.push((dx, dy));
            }
        }
    }

    let fg: Vec<bool> = {
        let mut v = vec![false; wh];
        for (x, y) in shape.foreground_pixels() {
            v[(y as usize) * (w as usize) + x as usize] = true;
        }
        v
    };

    // dilated coverage footprint of each edge, restricted to shape pixels
    let mut seen = vec![false; wh];
    let mut edge_px: Vec<Vec<u32>> = Vec::with_capacity(g.edges.len());
    for &(a, b) in &g.edges {
        let mut base = Vec::new();
        for_each_edge_pixel(&g.nodes[a], &g.nodes[b], w, h, &mut |x, y| {
            base.push((x as i64, y as i64))
        });
        let mut px = Vec::new();
        for (x, y) in base {
            for &(dx, dy) in &offsets {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                    continue;
                }
                let i = (ny as usize) * (w as usize) + nx as usize;
                if fg[i] && !seen[i] {
                    seen[i] = true;
                    px.push(i as u32);
                }
            }
        }
        for &i in &px {
            seen[i as usize] = false;
        }
        edge_px.push(px);
    }

    let mut coverage = vec![0u32; wh];
    for list in &edge_px {
        for &i in list {
            coverage[i as usize] += 1;
        }
    }
    let uncovered0: Vec<bool> = (0..wh).map(|i| fg[i] && coverage[i] == 0).collect();

    let mut adj = vec![Vec::new(); g.nodes.len()];
    for (idx, &(a, b)) in g.edges.iter().enumerate() {
        adj[a].push((b, idx));
        adj[b].push((a, idx));
    }
    for list in &mut adj {
        list.sort_unstable();
    }

    let mut st = PruneState {
        g,
        edge_px,
        coverage,
        uncovered0,
        alive_node: vec![true; g.nodes.len()],
        alive_edge: vec![true; g.edges.len()],
        deg: g.degrees(),
        adj,
        alive_count: g.nodes.len(),
        scratch: vec![0u32; wh],
        touched: Vec::new(),
    };

    // branches proven unremovable stay unremovable as coverage shrinks
    let mut blocked: HashSet<usize> = HashSet::new();

    // phase 1: drop whole leaf branches, cheapest (smallest max radius) first
    loop {
        let mut candidates: Vec<(f64, usize, usize, Vec<usize>, Vec<usize>)> = Vec::new();
        for leaf in 0..g.nodes.len() {
            if !st.alive_node[leaf] || st.deg[leaf] != 1 || blocked.contains(&leaf) {
                continue;
            }
            if let Some((nodes, edges)) = st.leaf_branch(leaf) {
                let max_r = nodes
                    .iter()
                    .map(|&v| g.nodes[v].r)
                    .fold(0.0f64, f64::max);
                candidates.push((max_r, edges.len(), leaf, nodes, edges));
            }
        }
        candidates.sort_by(|a, b| {
            a.0.total_cmp(&b.0)
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });
        let mut removed = false;
        for (_, _, leaf, nodes, edges) in candidates {
            if st.removable(&edges) {
                st.remove(&edges, &nodes);
                removed = true;
                break;
            }
            blocked.insert(leaf);
        }
        if !removed {
            break;
        }
    }

    // phase 2: when only a path is left, shorten it from the ends
    let path_only = (0..g.nodes.len()).all(|v| !st.alive_node[v] || st.deg[v] <= 2);
    if path_only {
        loop {
            if st.alive_count <= 1 {
                break;
            }
            let mut leaves: Vec<(f64, usize)> = (0..g.nodes.len())
                .filter(|&v| st.alive_node[v] && st.deg[v] == 1 && !blocked.contains(&v))
                .map(|v| (g.nodes[v].r, v))
                .collect();
            leaves.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut removed = false;
            for (_, leaf) in leaves {
                let &(other, edge) = st.adj[leaf]
                    .iter()
                    .find(|&&(_, e)| st.alive_edge[e])
                    .expect("leaf has a live edge");
                let ok = if st.alive_count == 2 {
                    // the survivor keeps only its disk and stamp
                    let survivor = &g.nodes[other];
                    let mut disk = vec![false; wh];
                    for_each_node_pixel(survivor, w, h, &mut |x, y| {
                        for &(dx, dy) in &offsets {
                            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                            if nx >= 0 && ny >= 0 && nx < w as i64 && ny < h as i64 {
                                disk[(ny as usize) * (w as usize) + nx as usize] = true;
                            }
                        }
                    });
                    st.edge_px[edge]
                        .iter()
                        .all(|&i| {
                            st.uncovered0[i as usize]
                                || st.coverage[i as usize] > 1
                                || disk[i as usize]
                        })
                } else {
                    st.removable(&[edge])
                };
                if ok {
                    st.remove(&[edge], &[leaf]);
                    removed = true;
                    break;
                }
                blocked.insert(leaf);
            }
            if !removed {
                break;
            }
        }
    }

    // rebuild with original node order
    let mut remap = vec![usize::MAX; g.nodes.len()];
    let mut nodes = Vec::new();
    for v in 0..g.nodes.len() {
        if st.alive_node[v] {
            remap[v] = nodes.len();
            nodes.push(g.nodes[v]);
        }
    }
    let edges: Vec<(usize, usize)> = g
        .edges
        .iter()
        .enumerate()
        .filter(|&(e, _)| st.alive_edge[e])
        .map(|(_, &(a, b))| (remap[a], remap[b]))
        .collect();
    SkeletonGraph::new(nodes, edges).expect("pruned graph is valid")
}

/// Result of [`skeletonize_auto`].
#[derive(Debug, Clone)]
pub struct AutoSkeleton {
    pub graph: SkeletonGraph,
    /// The pruning threshold that was selected.
    pub epsilon: f64,
    /// Branch counts of the candidates at thresholds 2, 4 and 6.
    pub branch_counts: [usize; 3],
    /// Cleanup changed the topology, or the candidates disagree so strongly
    /// that a human should look at the shape.
    pub needs_review: bool,
    pub clean: CleanReport,
}

const AUTO_THRESHOLDS: [f64; 3] = [2.0, 4.0, 6.0];

/// Full raster-to-skeleton pipeline with automatic threshold selection.
///
/// The shape is cleaned, contoured, skeletonized and pruned at thresholds 2,
/// 4 and 6. Selection prefers the largest threshold whose branch count stays
/// within one of the next-smaller candidate, then walks down to the smallest
/// threshold that yields the identical skeleton, so stable shapes report the
/// tightest bound that actually holds.
pub fn skeletonize_auto(img: &BinaryImage) -> Result<AutoSkeleton> {
    let (cleaned, clean) = clean_shape(img)?;
    let contour = extract_contour(&cleaned)?;
    let raw = voronoi_medial_axis(&contour, 1.0)?;

    let candidates: Vec<SkeletonGraph> = AUTO_THRESHOLDS
        .iter()
        .map(|&e| prune(&raw, &cleaned, PruneThreshold::new(e).unwrap()))
        .collect();
    let bc: Vec<usize> = candidates.iter().map(|c| branch_chains(c).len()).collect();

    let mut chosen = if bc[2].abs_diff(bc[1]) <= 1 {
        2
    } else if bc[1].abs_diff(bc[0]) <= 1 {
        1
    } else {
        0
    };
    while chosen > 0 && candidates[chosen - 1] == candidates[chosen] {
        chosen -= 1;
    }

    let spread_too_wide = bc.iter().max().unwrap() > &(2 * bc.iter().min().unwrap() + 1);
    Ok(AutoSkeleton {
        graph: candidates[chosen].clone(),
        epsilon: AUTO_THRESHOLDS[chosen],
        branch_counts: [bc[0], bc[1], bc[2]],
        needs_review: clean.topology_changed || spread_too_wide,
        clean,
    })
}
