//! Skeleton graphs: medial points joined by edges, plus the text format and
//! shape reconstruction.
//!
//! # Text format
//!
//! ```text
//! nodes N edges M
//! x y r          (N lines, one per node)
//! i j            (M lines, zero-based node indices)
//! ```
//!
//! Writing a graph that was read back produces identical bytes.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::{MedialPoint, Point2};
use crate::raster::BinaryImage;

/// An undirected graph of medial points. Edges are stored with the smaller
/// index first, sorted and deduplicated.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonGraph {
    pub nodes: Vec<MedialPoint>,
    pub edges: Vec<(usize, usize)>,
}

impl SkeletonGraph {
    pub fn empty() -> Self {
        SkeletonGraph {
            nodes: Vec::new(),
            edges: Vec::new(),
        }
    }

    /// Builds a graph, normalizing edge order. Rejects non-finite
    /// coordinates, negative radii, self-loops and out-of-range indices.
    pub fn new(nodes: Vec<MedialPoint>, edges: Vec<(usize, usize)>) -> Result<Self> {
        for n in &nodes {
            if !n.pos.is_finite() || !n.r.is_finite() {
                return Err(Error::NonFinite);
            }
            if n.r < 0.0 {
                return Err(Error::NegativeRadius(n.r));
            }
        }
        let mut norm = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            if a == b || a >= nodes.len() || b >= nodes.len() {
                return Err(Error::BadEdge(a, b));
            }
            norm.push((a.min(b), a.max(b)));
        }
        norm.sort_unstable();
        norm.dedup();
        Ok(SkeletonGraph { nodes, edges: norm })
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Neighbor lists, each sorted ascending.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.nodes.len()];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    /// Connected components as sorted node lists, ordered by smallest member.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let adj = self.adjacency();
        let mut seen = vec![false; self.nodes.len()];
        let mut comps = Vec::new();
        for start in 0..self.nodes.len() {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    }

    pub fn is_connected(&self) -> bool {
        self.connected_components().len() <= 1
    }

    pub fn node_positions(&self) -> Vec<Point2> {
        self.nodes.iter().map(|n| n.pos).collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("nodes {} edges {}\n", self.nodes.len(), self.edges.len());
        for n in &self.nodes {
            out.push_str(&format!("{} {} {}\n", n.pos.x, n.pos.y, n.r));
        }
        for &(a, b) in &self.edges {
            out.push_str(&format!("{} {}\n", a, b));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty skeleton file".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let (n, m) = match fields.as_slice() {
            ["nodes", n, "edges", m] => (
                n.parse::<usize>()
                    .map_err(|_| Error::Parse(format!("bad node count {n:?}")))?,
                m.parse::<usize>()
                    .map_err(|_| Error::Parse(format!("bad edge count {m:?}")))?,
            ),
            _ => return Err(Error::Parse(format!("bad header {header:?}"))),
        };
        let mut nodes = Vec::with_capacity(n);
        for i in 0..n {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing node line {i}")))?;
            let vals: Vec<&str> = line.split_whitespace().collect();
            if vals.len() != 3 {
                return Err(Error::Parse(format!("node line {i}: expected 3 fields, got {}", vals.len())));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("node line {i}: bad number {s:?}")))
            };
            nodes.push(MedialPoint::new(parse(vals[0])?, parse(vals[1])?, parse(vals[2])?));
        }
        let mut edges = Vec::with_capacity(m);
        for i in 0..m {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing edge line {i}")))?;
            let vals: Vec<&str> = line.split_whitespace().collect();
            if vals.len() != 2 {
                return Err(Error::Parse(format!("edge line {i}: expected 2 fields, got {}", vals.len())));
            }
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::Parse(format!("edge line {i}: bad index {s:?}")))
            };
            edges.push((parse(vals[0])?, parse(vals[1])?));
        }
        if let Some(extra) = lines.find(|l| !l.trim().is_empty()) {
            return Err(Error::Parse(format!("trailing content {extra:?}")));
        }
        SkeletonGraph::new(nodes, edges)
    }

    pub fn write_text_file(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path.as_ref(), self.to_text())?;
        Ok(())
    }

    pub fn read_text_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            fs::read_to_string(path).map_err(|e| Error::format(path, format!("cannot read: {e}")))?;
        SkeletonGraph::from_text(&text).map_err(|e| Error::format(path, e.to_string()))
    }
}

/// Maximal chains whose interior nodes all have degree 2. Chains run from
/// one breakpoint (degree != 2 node) to the next; a cycle with no breakpoint
/// is emitted as a single closed chain. Every edge lands in exactly one
/// chain.
pub fn branch_chains(g: &SkeletonGraph) -> Vec<Vec<usize>> {
    let deg = g.degrees();
    let mut adj = vec![Vec::new(); g.nodes.len()];
    for (idx, &(a, b)) in g.edges.iter().enumerate() {
        adj[a].push((b, idx));
        adj[b].push((a, idx));
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    let mut used = vec![false; g.edges.len()];
    let mut chains = Vec::new();

    let walk = |start: usize, first: (usize, usize), used: &mut Vec<bool>| -> Vec<usize> {
        let mut chain = vec![start];
        let (mut cur, mut via) = first;
        used[via] = true;
        chain.push(cur);
        while deg[cur] == 2 {
            let &(next, edge) = adj[cur]
                .iter()
                .find(|&&(_, e)| e != via)
                .expect("degree-2 node has a second edge");
            if used[edge] {
                break; // closed a cycle
            }
            used[edge] = true;
            chain.push(next);
            via = edge;
            cur = next;
        }
        chain
    };

    for v in 0..g.nodes.len() {
        if deg[v] == 2 {
            continue;
        }
        let starts: Vec<(usize, usize)> = adj[v].clone();
        for (to, edge) in starts {
            if !used[edge] {
                chains.push(walk(v, (to, edge), &mut used));
            }
        }
    }
    // leftover edges belong to pure cycles
    for v in 0..g.nodes.len() {
        for &(to, edge) in &adj[v] {
            if !used[edge] {
                chains.push(walk(v, (to, edge), &mut used));
            }
        }
    }
    chains
}

/// Pixel nearest to a point; halves round away from zero.
pub(crate) fn nearest_pixel(p: Point2) -> (i64, i64) {
    (p.x.round() as i64, p.y.round() as i64)
}

/// Swept-disk membership: true when `p` is inside the capsule traced by a
/// disk moving from `a` to `b` with linearly interpolated radius.
pub(crate) fn capsule_contains(p: Point2, a: &MedialPoint, b: &MedialPoint) -> bool {
    let dx = b.pos.x - a.pos.x;
    let dy = b.pos.y - a.pos.y;
    let len_sq = dx * dx + dy * dy;
    let dr = b.r - a.r;
    let px = p.x - a.pos.x;
    let py = p.y - a.pos.y;
    let along = px * dx + py * dy;
    let from_a_sq = px * px + py * py;

    // g(t) = |p - c(t)|^2 - r(t)^2, quadratic in t
    let g0 = from_a_sq - a.r * a.r;
    if g0 <= 0.0 {
        return true;
    }
    let g1 = (from_a_sq - 2.0 * along + len_sq) - b.r * b.r;
    if g1 <= 0.0 {
        return true;
    }
    let quad = len_sq - dr * dr;
    if quad > 1e-12 {
        let t = (along + a.r * dr) / quad;
        if t > 0.0 && t < 1.0 {
            let g = quad * t * t - 2.0 * (along + a.r * dr) * t + g0;
            if g <= 0.0 {
                return true;
            }
        }
    }
    false
}

/// Visits every canvas pixel covered by one skeleton edge: the capsule
/// between the two medial disks, the 8-connected digital line between the
/// node pixels, and both node stamps. Pixels may be visited more than once.
pub(crate) fn for_each_edge_pixel(
    a: &MedialPoint,
    b: &MedialPoint,
    width: u32,
    height: u32,
    f: &mut impl FnMut(u32, u32),
) {
    let mut emit = |x: i64, y: i64| {
        if x >= 0 && y >= 0 && x < width as i64 && y < height as i64 {
            f(x as u32, y as u32);
        }
    };

    // capsule body
    let x_lo = ((a.pos.x - a.r).min(b.pos.x - b.r)).floor() as i64;
    let x_hi = ((a.pos.x + a.r).max(b.pos.x + b.r)).ceil() as i64;
    let y_lo = ((a.pos.y - a.r).min(b.pos.y - b.r)).floor() as i64;
    let y_hi = ((a.pos.y + a.r).max(b.pos.y + b.r)).ceil() as i64;
    for y in y_lo.max(0)..=y_hi.min(height as i64 - 1) {
        for x in x_lo.max(0)..=x_hi.min(width as i64 - 1) {
            if capsule_contains(Point2::new(x as f64, y as f64), a, b) {
                emit(x, y);
            }
        }
    }

    // digital line between node pixels; sampling at <= 0.4 px keeps
    // consecutive rounded pixels 8-adjacent
    let len = a.pos.dist(b.pos);
    let steps = ((len / 0.4).ceil() as usize).max(1);
    for k in 0..=steps {
        let p = a.pos.lerp(b.pos, k as f64 / steps as f64);
        let (x, y) = nearest_pixel(p);
        emit(x, y);
    }

    let (ax, ay) = nearest_pixel(a.pos);
    emit(ax, ay);
    let (bx, by) = nearest_pixel(b.pos);
    emit(bx, by);
}

/// Visits every canvas pixel covered by an isolated node: its medial disk
/// plus the stamped nearest pixel.
pub(crate) fn for_each_node_pixel(
    n: &MedialPoint,
    width: u32,
    height: u32,
    f: &mut impl FnMut(u32, u32),
) {
    let mut emit = |x: i64, y: i64| {
        if x >= 0 && y >= 0 && x < width as i64 && y < height as i64 {
            f(x as u32, y as u32);
        }
    };
    let x_lo = (n.pos.x - n.r).floor() as i64;
    let x_hi = (n.pos.x + n.r).ceil() as i64;
    let y_lo = (n.pos.y - n.r).floor() as i64;
    let y_hi = (n.pos.y + n.r).ceil() as i64;
    for y in y_lo.max(0)..=y_hi.min(height as i64 - 1) {
        for x in x_lo.max(0)..=x_hi.min(width as i64 - 1) {
            let d = Point2::new(x as f64, y as f64).dist_sq(n.pos);
            if d <= n.r * n.r {
                emit(x, y);
            }
        }
    }
    let (sx, sy) = nearest_pixel(n.pos);
    emit(sx, sy);
}

/// Rasterizes the shape a skeleton describes: the union of all edge capsules
/// and node disks. Every node also stamps its nearest pixel, so even a
/// zero-radius skeleton leaves a mark. Geometry outside the canvas is
/// clipped. An empty graph yields an empty image.
pub fn reconstruct_from_skeleton(g: &SkeletonGraph, width: u32, height: u32) -> BinaryImage {
    let mut img = BinaryImage::new(width, height);
    let mut set = |x: u32, y: u32| img.set(x, y, true);
    for &(a, b) in &g.edges {
        for_each_edge_pixel(&g.nodes[a], &g.nodes[b], width, height, &mut set);
    }
    for n in &g.nodes {
        for_each_node_pixel(n, width, height, &mut set);
    }
    img
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::point_segment_distance;

    fn diamond() -> SkeletonGraph {
        SkeletonGraph::new(
            vec![
                MedialPoint::new(10.0, 10.0, 2.0),
                MedialPoint::new(20.5, 10.25, 1.5),
                MedialPoint::new(15.0, 15.0, 0.0),
            ],
            vec![(0, 1), (1, 2), (0, 2)],
        )
        .unwrap()
    }

    #[test]
    fn text_round_trip_is_byte_identical() {
        let g = diamond();
        let text = g.to_text();
        let back = SkeletonGraph::from_text(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn empty_graph_text() {
        let g = SkeletonGraph::empty();
        assert_eq!(g.to_text(), "nodes 0 edges 0\n");
        let back = SkeletonGraph::from_text("nodes 0 edges 0\n").unwrap();
        assert!(back.is_empty());
        assert!(reconstruct_from_skeleton(&back, 8, 8).is_empty());
    }

    #[test]
    fn parse_rejects_malformed_input() {
        for bad in [
            "",
            "nodes x edges 0\n",
            "vertices 1 edges 0\n1 2 3\n",
            "nodes 1 edges 0\n1 2\n",
            "nodes 1 edges 0\n1 2 three\n",
            "nodes 1 edges 1\n1 2 3\n",
            "nodes 2 edges 1\n0 0 1\n4 4 1\n0 5\n",
            "nodes 2 edges 1\n0 0 1\n4 4 1\n1 1\n",
            "nodes 1 edges 0\n0 0 -2\n",
            "nodes 1 edges 0\n0 0 1\nleftover\n",
        ] {
            assert!(SkeletonGraph::from_text(bad).is_err(), "accepted {bad:?}");
        }
    }

    #[test]
    fn edges_are_normalized_and_deduplicated() {
        let g = SkeletonGraph::new(
            vec![
                MedialPoint::new(0.0, 0.0, 1.0),
                MedialPoint::new(5.0, 0.0, 1.0),
            ],
            vec![(1, 0), (0, 1)],
        )
        .unwrap();
        assert_eq!(g.edges, vec![(0, 1)]);
    }

    #[test]
    fn zero_radius_node_stamps_one_pixel() {
        let g = SkeletonGraph::new(vec![MedialPoint::new(7.3, 4.6, 0.0)], vec![]).unwrap();
        let img = reconstruct_from_skeleton(&g, 16, 16);
        assert_eq!(img.foreground_count(), 1);
        assert!(img.get(7, 5));
    }

    #[test]
    fn disk_pixel_count_matches_direct_scan() {
        let g = SkeletonGraph::new(vec![MedialPoint::new(10.0, 10.0, 3.0)], vec![]).unwrap();
        let img = reconstruct_from_skeleton(&g, 21, 21);
        // integer offsets with dx^2 + dy^2 <= 9
        assert_eq!(img.foreground_count(), 29);
        assert!(img.get(13, 10) && img.get(10, 7) && !img.get(13, 13));
    }

    #[test]
    fn zero_radius_edge_draws_a_connected_digital_line() {
        let a = MedialPoint::new(2.0, 2.0, 0.0);
        let b = MedialPoint::new(12.0, 7.0, 0.0);
        let g = SkeletonGraph::new(vec![a, b], vec![(0, 1)]).unwrap();
        let img = reconstruct_from_skeleton(&g, 16, 16);
        assert_eq!(img.count_components_8(), 1);
        assert!(img.get(2, 2) && img.get(12, 7));
        for (x, y) in img.foreground_pixels() {
            let d = point_segment_distance(Point2::new(x as f64, y as f64), a.pos, b.pos);
            assert!(d <= 0.75, "({x},{y}) strays {d} from the spine");
        }
    }

    #[test]
    fn capsule_covers_both_end_disks() {
        let a = MedialPoint::new(5.0, 5.0, 3.0);
        let b = MedialPoint::new(15.0, 9.0, 1.0);
        for (cx, cy, r) in [(5.0, 5.0, 3.0), (15.0, 9.0, 1.0)] {
            for ang in 0..16 {
                let t = ang as f64 / 16.0 * std::f64::consts::TAU;
                let p = Point2::new(cx + 0.99 * r * t.cos(), cy + 0.99 * r * t.sin());
                assert!(capsule_contains(p, &a, &b), "{p:?}");
            }
        }
        // and rejects points clearly outside
        assert!(!capsule_contains(Point2::new(5.0, 9.5), &a, &b));
        assert!(!capsule_contains(Point2::new(16.5, 9.0), &a, &b));
    }

    #[test]
    fn tapered_capsule_interpolates_radius() {
        // radius shrinks linearly from 4 at x=0 to 0 at x=10
        let a = MedialPoint::new(0.0, 0.0, 4.0);
        let b = MedialPoint::new(10.0, 0.0, 0.0);
        assert!(capsule_contains(Point2::new(5.0, 1.9), &a, &b));
        assert!(!capsule_contains(Point2::new(5.0, 2.3), &a, &b));
        assert!(!capsule_contains(Point2::new(10.0, 0.5), &a, &b));
    }

    #[test]
    fn bad_graphs_are_rejected() {
        let nodes = vec![MedialPoint::new(0.0, 0.0, 1.0)];
        assert!(matches!(
            SkeletonGraph::new(nodes.clone(), vec![(0, 0)]),
            Err(Error::BadEdge(0, 0))
        ));
        assert!(matches!(
            SkeletonGraph::new(nodes.clone(), vec![(0, 3)]),
            Err(Error::BadEdge(0, 3))
        ));
        assert!(matches!(
            SkeletonGraph::new(vec![MedialPoint::new(0.0, 0.0, -1.0)], vec![]),
            Err(Error::NegativeRadius(_))
        ));
        assert!(SkeletonGraph::new(vec![MedialPoint::new(f64::NAN, 0.0, 1.0)], vec![]).is_err());
    }

    #[test]
    fn branch_chains_partition_edges() {
        // a Y: center 0 with arms 1, 2, and a two-edge arm 3-4
        let g = SkeletonGraph::new(
            vec![
                MedialPoint::new(0.0, 0.0, 1.0),
                MedialPoint::new(10.0, 0.0, 1.0),
                MedialPoint::new(0.0, 10.0, 1.0),
                MedialPoint::new(-5.0, -5.0, 1.0),
                MedialPoint::new(-10.0, -10.0, 1.0),
            ],
            vec![(0, 1), (0, 2), (0, 3), (3, 4)],
        )
        .unwrap();
        let chains = branch_chains(&g);
        assert_eq!(chains.len(), 3);
        let total_edges: usize = chains.iter().map(|c| c.len() - 1).sum();
        assert_eq!(total_edges, g.edges.len());
        assert!(chains.iter().any(|c| c == &vec![0, 3, 4]));
    }

    #[test]
    fn path_graph_is_one_chain() {
        let g = SkeletonGraph::new(
            vec![
                MedialPoint::new(0.0, 0.0, 1.0),
                MedialPoint::new(5.0, 0.0, 1.0),
                MedialPoint::new(10.0, 0.0, 1.0),
            ],
            vec![(0, 1), (1, 2)],
        )
        .unwrap();
        let chains = branch_chains(&g);
        assert_eq!(chains, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn components_and_connectivity() {
        let g = SkeletonGraph::new(
            vec![
                MedialPoint::new(0.0, 0.0, 1.0),
                MedialPoint::new(5.0, 0.0, 1.0),
                MedialPoint::new(20.0, 20.0, 1.0),
            ],
            vec![(0, 1)],
        )
        .unwrap();
        assert!(!g.is_connected());
        assert_eq!(g.connected_components(), vec![vec![0, 1], vec![2]]);
    }
}
