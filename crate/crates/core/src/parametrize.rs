//! From skeleton graphs to parametric branches.
//!
//! A pruned skeleton is rooted at its widest node, each node gets a WEDF
//! value (the area its subtree reconstructs), branches are merged across
//! junctions where WEDF stays continuous, and each resulting curve is fitted
//! as a degree-5 Bezier in `(x, y, r)`.
//!
//! # CSV format
//!
//! One branch per row, 18 tab-separated numbers: six control points, each as
//! `x y r`. Rows are ordered canonically (most important branch first), so
//! equal skeletons serialize to identical bytes.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::{MedialPoint, Point2};
use crate::skeleton::{
    branch_chains, for_each_edge_pixel, for_each_node_pixel, SkeletonGraph,
};

/// A skeleton graph oriented away from a root node.
#[derive(Debug, Clone)]
pub struct SkeletonTree {
    pub nodes: Vec<MedialPoint>,
    pub root: usize,
    pub parent: Vec<Option<usize>>,
    pub children: Vec<Vec<usize>>,
}

impl SkeletonTree {
    /// Undirected degree of a node.
    pub fn degree(&self, v: usize) -> usize {
        self.children[v].len() + usize::from(self.parent[v].is_some())
    }

    /// Nodes in breadth-first order from the root; parents always precede
    /// their children.
    pub fn bfs_order(&self) -> Vec<usize> {
        let mut order = vec![self.root];
        let mut cursor = 0;
        while cursor < order.len() {
            let v = order[cursor];
            cursor += 1;
            order.extend_from_slice(&self.children[v]);
        }
        order
    }
}

/// Roots a connected acyclic skeleton at its widest node (largest radius,
/// ties to the lowest index).
pub fn build_tree(g: &SkeletonGraph) -> Result<SkeletonTree> {
    if g.is_empty() {
        return Err(Error::EmptyPointSet("build_tree"));
    }
    let comps = g.connected_components();
    if comps.len() > 1 {
        return Err(Error::DisconnectedSkeleton(comps.len()));
    }
    if g.edges.len() != g.nodes.len() - 1 {
        return Err(Error::CyclicSkeleton);
    }

    let root = g
        .nodes
        .iter()
        .enumerate()
        .max_by(|(i, a), (j, b)| a.r.total_cmp(&b.r).then(j.cmp(i)))
        .map(|(i, _)| i)
        .expect("nonempty graph");

    let adj = g.adjacency();
    let mut parent = vec![None; g.nodes.len()];
    let mut children = vec![Vec::new(); g.nodes.len()];
    let mut visited = vec![false; g.nodes.len()];
    visited[root] = true;
    let mut queue = std::collections::VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if !visited[w] {
                visited[w] = true;
                parent[w] = Some(v);
                children[v].push(w);
                queue.push_back(w);
            }
        }
    }
    Ok(SkeletonTree {
        nodes: g.nodes.clone(),
        root,
        parent,
        children,
    })
}

/// Per-node weighted extended distance function values.
#[derive(Debug, Clone)]
pub struct WedfField {
    values: Vec<f64>,
}

impl WedfField {
    /// Wraps precomputed values; mainly useful in tests.
    pub fn from_values(values: Vec<f64>) -> Self {
        WedfField { values }
    }

    pub fn value(&self, node: usize) -> f64 {
        self.values[node]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

struct BitGrid {
    words: Vec<u64>,
}

impl BitGrid {
    fn new(bits: usize) -> Self {
        BitGrid {
            words: vec![0; bits.div_ceil(64)],
        }
    }

    #[inline]
    fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn or_with(&mut self, other: &BitGrid) {
        for (w, o) in self.words.iter_mut().zip(&other.words) {
            *w |= o;
        }
    }

    fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }
}

/// Computes the WEDF of every node: the pixel area of the shape piece its
/// subtree reconstructs (subtree disks plus the capsules along subtree
/// edges). Values are monotone: a child never exceeds its parent.
pub fn compute_wedf(tree: &SkeletonTree) -> WedfField {
    // raster window covering all disks
    let mut min = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut max = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for n in &tree.nodes {
        min.x = min.x.min(n.pos.x - n.r);
        min.y = min.y.min(n.pos.y - n.r);
        max.x = max.x.max(n.pos.x + n.r);
        max.y = max.y.max(n.pos.y + n.r);
    }
    let ox = min.x.floor() as i64 - 2;
    let oy = min.y.floor() as i64 - 2;
    let w = ((max.x.ceil() as i64 - ox) + 3).max(1) as u32;
    let h = ((max.y.ceil() as i64 - oy) + 3).max(1) as u32;
    let shift = |n: &MedialPoint| MedialPoint::new(n.pos.x - ox as f64, n.pos.y - oy as f64, n.r);

    let order = tree.bfs_order();
    let mut sub: Vec<Option<BitGrid>> = (0..tree.nodes.len()).map(|_| None).collect();
    let mut values = vec![0.0; tree.nodes.len()];
    let stride = w as usize;
    for &v in order.iter().rev() {
        let mut grid = BitGrid::new(stride * h as usize);
        let nv = shift(&tree.nodes[v]);
        for_each_node_pixel(&nv, w, h, &mut |x, y| {
            grid.set((y as usize) * stride + x as usize)
        });
        for &c in &tree.children[v] {
            let nc = shift(&tree.nodes[c]);
            for_each_edge_pixel(&nv, &nc, w, h, &mut |x, y| {
                grid.set((y as usize) * stride + x as usize)
            });
            let child_grid = sub[c].take().expect("children processed first");
            grid.or_with(&child_grid);
        }
        values[v] = grid.count() as f64;
        sub[v] = Some(grid);
    }
    WedfField { values }
}

/// Thresholds controlling branch merging at junctions. Both are relative
/// gaps `(max - min) / max` between WEDF stub values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergeTolerances {
    /// Largest gap that still counts as "the same branch continuing".
    pub tau_wedf: f64,
    /// Gap below which the two strongest children count as equals, turning
    /// the junction into a shared endpoint.
    pub tau_eq: f64,
}

impl Default for MergeTolerances {
    fn default() -> Self {
        MergeTolerances {
            tau_wedf: 0.15,
            tau_eq: 0.05,
        }
    }
}

fn relgap(a: f64, b: f64) -> f64 {
    let hi = a.max(b);
    let lo = a.min(b);
    if hi <= 0.0 {
        0.0
    } else {
        (hi - lo) / hi
    }
}

/// A curve assembled from one or more branch chains, as node indices.
type Curve = Vec<usize>;

/// Merges branches across junctions by WEDF continuity.
///
/// At every junction the chains that end there are scored by the WEDF of
/// their node adjacent to the junction. When the two strongest child stubs
/// are within `tau_eq` of each other, the junction is a shared endpoint and
/// nothing merges. Otherwise the closest pair of stubs (the parent side
/// included) merges into one curve, provided the gap is within `tau_wedf`
/// and every child stub outside the pair is strictly weaker.
///
/// Every tree edge ends up in exactly one returned curve. Curves are
/// canonically oriented and ordered (strongest first), so the result is
/// independent of node numbering.
pub fn merge_branches(
    tree: &SkeletonTree,
    wedf: &WedfField,
    tol: &MergeTolerances,
) -> Vec<Curve> {
    let n = tree.nodes.len();
    if n == 1 {
        return vec![vec![tree.root]];
    }
    let edges: Vec<(usize, usize)> = (0..n)
        .filter_map(|v| tree.parent[v].map(|p| (p, v)))
        .collect();
    let g = SkeletonGraph::new(tree.nodes.clone(), edges).expect("tree edges are valid");
    let chains = branch_chains(&g);

    // stub = a chain end at a junction
    #[derive(Clone, Copy)]
    struct Stub {
        chain: usize,
        end: usize, // 0 = front, 1 = back
        value: f64,
        is_parent_side: bool,
    }
    let mut stubs_at: Vec<Vec<Stub>> = vec![Vec::new(); n];
    for (ci, chain) in chains.iter().enumerate() {
        for end in [0usize, 1] {
            let (joint, adjacent) = if end == 0 {
                (chain[0], chain[1])
            } else {
                (chain[chain.len() - 1], chain[chain.len() - 2])
            };
            if tree.degree(joint) < 3 {
                continue;
            }
            stubs_at[joint].push(Stub {
                chain: ci,
                end,
                value: wedf.value(adjacent),
                is_parent_side: tree.parent[joint] == Some(adjacent),
            });
        }
    }

    // at most one merge per junction: link[chain][end] = (other chain, end)
    let mut link: Vec<[Option<(usize, usize)>; 2]> = vec![[None, None]; chains.len()];
    for joint in 0..n {
        let mut stubs = stubs_at[joint].clone();
        if stubs.len() < 3 {
            continue;
        }
        stubs.sort_by(|a, b| b.value.total_cmp(&a.value).then(a.chain.cmp(&b.chain)));
        let children: Vec<&Stub> = stubs.iter().filter(|s| !s.is_parent_side).collect();
        if children.len() >= 2 && relgap(children[0].value, children[1].value) <= tol.tau_eq {
            continue; // equals meet at an endpoint
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..stubs.len() {
            for j in i + 1..stubs.len() {
                let gap = relgap(stubs[i].value, stubs[j].value);
                if best.is_none_or(|(g, _, _)| gap < g) {
                    best = Some((gap, i, j));
                }
            }
        }
        let Some((gap, i, j)) = best else { continue };
        if gap > tol.tau_wedf {
            continue;
        }
        let pair_min = stubs[i].value.min(stubs[j].value);
        let others_weaker = children
            .iter()
            .filter(|s| {
                !(s.chain == stubs[i].chain && s.end == stubs[i].end)
                    && !(s.chain == stubs[j].chain && s.end == stubs[j].end)
            })
            .all(|s| s.value < pair_min);
        if !others_weaker {
            continue;
        }
        link[stubs[i].chain][stubs[i].end] = Some((stubs[j].chain, stubs[j].end));
        link[stubs[j].chain][stubs[j].end] = Some((stubs[i].chain, stubs[i].end));
    }

    // walk linked chains into curves, starting from unlinked ends
    let mut used = vec![false; chains.len()];
    let mut curves: Vec<Curve> = Vec::new();
    for start in 0..chains.len() {
        if used[start] {
            continue;
        }
        let open_end = match (link[start][0], link[start][1]) {
            (None, _) => 0,
            (_, None) => 1,
            _ => continue, // interior of a longer curve; reached via its ends
        };
        let mut curve: Vec<usize> = Vec::new();
        let (mut ci, mut entry) = (start, open_end);
        loop {
            used[ci] = true;
            let chain = &chains[ci];
            let iter: Vec<usize> = if entry == 0 {
                chain.clone()
            } else {
                chain.iter().rev().copied().collect()
            };
            let skip = usize::from(!curve.is_empty());
            curve.extend(iter.into_iter().skip(skip));
            let exit = 1 - entry;
            match link[ci][exit] {
                Some((next, next_end)) => {
                    ci = next;
                    entry = next_end;
                }
                None => break,
            }
        }
        curves.push(curve);
    }

    // canonical orientation: the lexicographically smaller (x, y, r) sequence
    for curve in &mut curves {
        let forward: Vec<[f64; 3]> = curve
            .iter()
            .map(|&v| [tree.nodes[v].pos.x, tree.nodes[v].pos.y, tree.nodes[v].r])
            .collect();
        let mut reversed = forward.clone();
        reversed.reverse();
        if seq_cmp(&reversed, &forward) == std::cmp::Ordering::Less {
            curve.reverse();
        }
    }

    // strongest curve first; ties broken by the node value sequence
    curves.sort_by(|a, b| {
        let ia = a.iter().map(|&v| wedf.value(v)).fold(f64::MIN, f64::max);
        let ib = b.iter().map(|&v| wedf.value(v)).fold(f64::MIN, f64::max);
        ib.total_cmp(&ia).then_with(|| {
            let sa: Vec<[f64; 3]> = a
                .iter()
                .map(|&v| [tree.nodes[v].pos.x, tree.nodes[v].pos.y, tree.nodes[v].r])
                .collect();
            let sb: Vec<[f64; 3]> = b
                .iter()
                .map(|&v| [tree.nodes[v].pos.x, tree.nodes[v].pos.y, tree.nodes[v].r])
                .collect();
            seq_cmp(&sa, &sb)
        })
    });
    curves
}

fn seq_cmp(a: &[[f64; 3]], b: &[[f64; 3]]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        for c in 0..3 {
            let ord = x[c].total_cmp(&y[c]);
            if ord != std::cmp::Ordering::Equal {
                return ord;
            }
        }
    }
    a.len().cmp(&b.len())
}

/// One skeleton branch as a degree-5 Bezier curve over `(x, y, r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BezierBranch {
    /// Six control points, each `[x, y, r]`.
    pub ctrl: [[f64; 3]; 6],
}

const CHOOSE5: [f64; 6] = [1.0, 5.0, 10.0, 10.0, 5.0, 1.0];

fn bernstein5(i: usize, t: f64) -> f64 {
    CHOOSE5[i] * t.powi(i as i32) * (1.0 - t).powi(5 - i as i32)
}

impl BezierBranch {
    pub fn eval(&self, t: f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (i, p) in self.ctrl.iter().enumerate() {
            let b = bernstein5(i, t);
            for c in 0..3 {
                out[c] += b * p[c];
            }
        }
        out
    }

    pub fn flatten(&self) -> [f64; 18] {
        let mut out = [0.0; 18];
        for (i, p) in self.ctrl.iter().enumerate() {
            out[3 * i..3 * i + 3].copy_from_slice(p);
        }
        out
    }

    pub fn from_flat(flat: &[f64; 18]) -> Self {
        let mut ctrl = [[0.0; 3]; 6];
        for (i, p) in ctrl.iter_mut().enumerate() {
            p.copy_from_slice(&flat[3 * i..3 * i + 3]);
        }
        BezierBranch { ctrl }
    }
}

/// Solves `a * x = rhs` for all right-hand sides in place via Gaussian
/// elimination with partial pivoting. Returns None when singular.
fn solve4(mut a: [[f64; 4]; 4], mut rhs: [[f64; 4]; 3]) -> Option<[[f64; 4]; 3]> {
    for col in 0..4 {
        let pivot = (col..4).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        for r in rhs.iter_mut() {
            r.swap(col, pivot);
        }
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
            for r in rhs.iter_mut() {
                r[row] -= f * r[col];
            }
        }
    }
    let mut out = [[0.0; 4]; 3];
    for (c, r) in rhs.iter().enumerate() {
        for row in (0..4).rev() {
            let mut v = r[row];
            for k in row + 1..4 {
                v -= a[row][k] * out[c][k];
            }
            out[c][row] = v / a[row][row];
        }
    }
    Some(out)
}

fn uniform_interior(first: &MedialPoint, last: &MedialPoint) -> [[f64; 3]; 4] {
    let mut interior = [[0.0; 3]; 4];
    let a = [first.pos.x, first.pos.y, first.r];
    let b = [last.pos.x, last.pos.y, last.r];
    for (i, p) in interior.iter_mut().enumerate() {
        let t = (i + 1) as f64 / 5.0;
        for c in 0..3 {
            p[c] = a[c] + t * (b[c] - a[c]);
        }
    }
    interior
}

/// Least-squares degree-5 Bezier fit of a medial-point chain.
///
/// The endpoints are interpolated exactly; samples are placed by chord
/// length over `(x, y)`. Chains shorter than six samples are regularized
/// toward uniformly spaced interior control points so the system stays well
/// posed; a two-sample chain therefore yields a straight, evenly divided
/// segment.
pub fn fit_bezier(chain: &[MedialPoint]) -> Result<BezierBranch> {
    let n = chain.len();
    if n < 2 {
        return Err(Error::ChainTooShort(n));
    }
    let first = chain[0];
    let last = chain[n - 1];
    let mut ctrl = [[0.0; 3]; 6];
    ctrl[0] = [first.pos.x, first.pos.y, first.r];
    ctrl[5] = [last.pos.x, last.pos.y, last.r];

    if n == 2 {
        let interior = uniform_interior(&first, &last);
        ctrl[1..5].copy_from_slice(&interior);
        return Ok(BezierBranch { ctrl });
    }

    // chord-length parameters
    let mut params = vec![0.0; n];
    for k in 1..n {
        params[k] = params[k - 1] + chain[k].pos.dist(chain[k - 1].pos);
    }
    let total = params[n - 1];
    if total > 0.0 {
        for p in params.iter_mut() {
            *p /= total;
        }
    } else {
        for (k, p) in params.iter_mut().enumerate() {
            *p = k as f64 / (n - 1) as f64;
        }
    }

    let fallback = uniform_interior(&first, &last);
    let samples: Vec<[f64; 3]> = chain
        .iter()
        .map(|m| [m.pos.x, m.pos.y, m.r])
        .collect();

    let assemble = |lambda: f64| -> Option<[[f64; 4]; 3]> {
        let mut ata = [[0.0; 4]; 4];
        let mut atb = [[0.0; 4]; 3];
        for (k, &t) in params.iter().enumerate() {
            let basis = [bernstein5(1, t), bernstein5(2, t), bernstein5(3, t), bernstein5(4, t)];
            let b0 = bernstein5(0, t);
            let b5 = bernstein5(5, t);
            for i in 0..4 {
                for j in 0..4 {
                    ata[i][j] += basis[i] * basis[j];
                }
                for c in 0..3 {
                    let resid = samples[k][c] - b0 * ctrl[0][c] - b5 * ctrl[5][c];
                    atb[c][i] += basis[i] * resid;
                }
            }
        }
        if lambda > 0.0 {
            for i in 0..4 {
                ata[i][i] += lambda;
                for c in 0..3 {
                    atb[c][i] += lambda * fallback[i][c];
                }
            }
        }
        solve4(ata, atb)
    };

    let lambda = if n >= 6 { 0.0 } else { 1e-6 };
    let solution = assemble(lambda)
        .or_else(|| assemble(1e-6))
        .unwrap_or([
            [fallback[0][0], fallback[1][0], fallback[2][0], fallback[3][0]],
            [fallback[0][1], fallback[1][1], fallback[2][1], fallback[3][1]],
            [fallback[0][2], fallback[1][2], fallback[2][2], fallback[3][2]],
        ]);
    for i in 0..4 {
        for c in 0..3 {
            ctrl[i + 1][c] = solution[c][i];
        }
    }
    Ok(BezierBranch { ctrl })
}

/// An ordered list of fitted branches: the parametric form of a skeleton.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricSkeleton {
    pub branches: Vec<BezierBranch>,
}

impl ParametricSkeleton {
    /// All control points as one flat vector, 18 numbers per branch.
    pub fn flatten(&self) -> Vec<f64> {
        self.branches.iter().flat_map(|b| b.flatten()).collect()
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for b in &self.branches {
            let flat = b.flatten();
            let row: Vec<String> = flat.iter().map(|v| format!("{v}")).collect();
            out.push_str(&row.join("\t"));
            out.push('\n');
        }
        out
    }

    pub fn from_csv_string(text: &str) -> Result<Self> {
        let mut branches = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 18 {
                return Err(Error::Parse(format!(
                    "row {}: expected 18 fields, got {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            let mut flat = [0.0; 18];
            for (i, f) in fields.iter().enumerate() {
                flat[i] = f.trim().parse::<f64>().map_err(|_| {
                    Error::Parse(format!("row {}: bad number {f:?}", lineno + 1))
                })?;
            }
            branches.push(BezierBranch::from_flat(&flat));
        }
        Ok(ParametricSkeleton { branches })
    }

    pub fn write_csv_file(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path.as_ref(), self.to_csv_string())?;
        Ok(())
    }

    pub fn read_csv_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::format(path, format!("cannot read: {e}")))?;
        Self::from_csv_string(&text).map_err(|e| Error::format(path, e.to_string()))
    }
}

/// Sorts fitted branches by importance (descending), breaking ties on the
/// flattened control points, and strips the importance values.
pub fn order_and_flatten(mut branches: Vec<(BezierBranch, f64)>) -> ParametricSkeleton {
    branches.sort_by(|(ba, ia), (bb, ib)| {
        ib.total_cmp(ia).then_with(|| {
            let fa = ba.flatten();
            let fb = bb.flatten();
            fa.iter()
                .zip(fb.iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| *o != std::cmp::Ordering::Equal)
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    ParametricSkeleton {
        branches: branches.into_iter().map(|(b, _)| b).collect(),
    }
}

/// Full graph-to-parametric pipeline: root, weigh, merge, fit, order.
///
/// A single-node skeleton degenerates to one constant curve.
pub fn parametrize_graph(
    g: &SkeletonGraph,
    tol: &MergeTolerances,
) -> Result<ParametricSkeleton> {
    let tree = build_tree(g)?;
    let wedf = compute_wedf(&tree);
    let curves = merge_branches(&tree, &wedf, tol);
    let mut fitted = Vec::with_capacity(curves.len());
    for curve in curves {
        let chain: Vec<MedialPoint> = if curve.len() == 1 {
            vec![tree.nodes[curve[0]], tree.nodes[curve[0]]]
        } else {
            curve.iter().map(|&v| tree.nodes[v]).collect()
        };
        let branch = fit_bezier(&chain)?;
        let importance = curve
            .iter()
            .map(|&v| wedf.value(v))
            .fold(f64::MIN, f64::max);
        fitted.push((branch, importance));
    }
    Ok(order_and_flatten(fitted))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn path_graph(radii: &[f64]) -> SkeletonGraph {
        let nodes: Vec<MedialPoint> = radii
            .iter()
            .enumerate()
            .map(|(i, &r)| MedialPoint::new(i as f64 * 10.0, 0.0, r))
            .collect();
        let edges: Vec<(usize, usize)> = (1..radii.len()).map(|i| (i - 1, i)).collect();
        SkeletonGraph::new(nodes, edges).unwrap()
    }

    #[test]
    fn tree_roots_at_the_widest_node() {
        let g = path_graph(&[1.0, 5.0, 2.0]);
        let t = build_tree(&g).unwrap();
        assert_eq!(t.root, 1);
        assert_eq!(t.parent[0], Some(1));
        assert_eq!(t.parent[2], Some(1));
        assert_eq!(t.children[1], vec![0, 2]);
    }

    #[test]
    fn cyclic_and_disconnected_graphs_are_rejected() {
        let square = SkeletonGraph::new(
            vec![
                MedialPoint::new(0.0, 0.0, 1.0),
                MedialPoint::new(10.0, 0.0, 1.0),
                MedialPoint::new(10.0, 10.0, 1.0),
                MedialPoint::new(0.0, 10.0, 1.0),
            ],
            vec![(0, 1), (1, 2), (2, 3), (0, 3)],
        )
        .unwrap();
        assert!(matches!(build_tree(&square), Err(Error::CyclicSkeleton)));

        let two = SkeletonGraph::new(
            vec![
                MedialPoint::new(0.0, 0.0, 1.0),
                MedialPoint::new(50.0, 0.0, 1.0),
            ],
            vec![],
        )
        .unwrap();
        assert!(matches!(
            build_tree(&two),
            Err(Error::DisconnectedSkeleton(2))
        ));
    }

    #[test]
    fn wedf_of_a_single_disk_is_its_area() {
        let g = SkeletonGraph::new(vec![MedialPoint::new(0.0, 0.0, 10.0)], vec![]).unwrap();
        let t = build_tree(&g).unwrap();
        let w = compute_wedf(&t);
        let area = std::f64::consts::PI * 100.0;
        assert!((w.value(0) - area).abs() <= 0.05 * area, "{}", w.value(0));
    }

    #[test]
    fn wedf_grows_toward_the_root() {
        let g = path_graph(&[8.0, 4.0, 3.0, 2.0]);
        let t = build_tree(&g).unwrap();
        let w = compute_wedf(&t);
        for v in 0..4 {
            if let Some(p) = t.parent[v] {
                assert!(
                    w.value(v) <= w.value(p),
                    "child {} exceeds parent {}",
                    w.value(v),
                    w.value(p)
                );
            }
        }
        assert!(w.value(1) < w.value(0));
    }

    /// Y-tree fixture: root 0 at the junction's parent side, junction 1,
    /// two arms (2, 3).
    fn y_tree() -> SkeletonTree {
        let g = SkeletonGraph::new(
            vec![
                MedialPoint::new(0.0, 0.0, 9.0),
                MedialPoint::new(10.0, 0.0, 5.0),
                MedialPoint::new(20.0, -6.0, 2.0),
                MedialPoint::new(20.0, 6.0, 2.0),
            ],
            vec![(0, 1), (1, 2), (1, 3)],
        )
        .unwrap();
        build_tree(&g).unwrap()
    }

    #[test]
    fn equal_children_make_the_junction_an_endpoint() {
        let t = y_tree();
        let w = WedfField::from_values(vec![1000.0, 600.0, 300.0, 300.0]);
        let curves = merge_branches(&t, &w, &MergeTolerances::default());
        assert_eq!(curves.len(), 3);
        // every chain terminates at the junction node 1
        for c in &curves {
            assert!(c.contains(&1));
            assert_eq!(c.len(), 2);
        }
    }

    #[test]
    fn continuous_wedf_merges_through_the_junction() {
        let t = y_tree();
        // arm 2 carries almost all of the parent's weight; arm 3 is a twig
        let w = WedfField::from_values(vec![1000.0, 950.0, 900.0, 40.0]);
        let curves = merge_branches(&t, &w, &MergeTolerances::default());
        assert_eq!(curves.len(), 2);
        let main: &Curve = curves
            .iter()
            .find(|c| c.len() == 3)
            .expect("merged trunk exists");
        assert!(main.contains(&0) && main.contains(&1) && main.contains(&2));
        let twig: &Curve = curves.iter().find(|c| c.len() == 2).unwrap();
        assert!(twig.contains(&1) && twig.contains(&3));
    }

    #[test]
    fn merge_covers_every_edge_exactly_once() {
        let t = y_tree();
        let w = compute_wedf(&t);
        let curves = merge_branches(&t, &w, &MergeTolerances::default());
        let total_edges: usize = curves.iter().map(|c| c.len() - 1).sum();
        assert_eq!(total_edges, 3);
    }

    #[test]
    fn merge_output_ignores_node_numbering() {
        // same Y with nodes listed in a different order
        let g2 = SkeletonGraph::new(
            vec![
                MedialPoint::new(20.0, 6.0, 2.0),
                MedialPoint::new(0.0, 0.0, 9.0),
                MedialPoint::new(10.0, 0.0, 5.0),
                MedialPoint::new(20.0, -6.0, 2.0),
            ],
            vec![(1, 2), (2, 3), (0, 2)],
        )
        .unwrap();
        let t1 = y_tree();
        let t2 = build_tree(&g2).unwrap();
        let w1 = compute_wedf(&t1);
        let w2 = compute_wedf(&t2);
        let to_coords = |t: &SkeletonTree, curves: Vec<Curve>| -> Vec<Vec<[f64; 3]>> {
            curves
                .iter()
                .map(|c| {
                    c.iter()
                        .map(|&v| [t.nodes[v].pos.x, t.nodes[v].pos.y, t.nodes[v].r])
                        .collect()
                })
                .collect()
        };
        let c1 = to_coords(&t1, merge_branches(&t1, &w1, &MergeTolerances::default()));
        let c2 = to_coords(&t2, merge_branches(&t2, &w2, &MergeTolerances::default()));
        assert_eq!(c1, c2);
    }

    #[test]
    fn two_sample_chain_fits_a_uniform_segment() {
        let chain = [MedialPoint::new(0.0, 0.0, 0.0), MedialPoint::new(10.0, 0.0, 5.0)];
        let b = fit_bezier(&chain).unwrap();
        for (i, p) in b.ctrl.iter().enumerate() {
            let t = i as f64 / 5.0;
            assert!((p[0] - 10.0 * t).abs() < 1e-12);
            assert_eq!(p[1], 0.0);
            assert!((p[2] - 5.0 * t).abs() < 1e-12);
        }
    }

    #[test]
    fn endpoints_are_interpolated_exactly() {
        let chain: Vec<MedialPoint> = (0..10)
            .map(|i| MedialPoint::new(i as f64, (i as f64 * 0.7).sin() * 3.0, 1.0 + i as f64 * 0.1))
            .collect();
        let b = fit_bezier(&chain).unwrap();
        assert_eq!(b.ctrl[0], [0.0, 0.0, 1.0]);
        assert_eq!(b.ctrl[5], [9.0, (9.0f64 * 0.7).sin() * 3.0, 1.9]);
    }

    #[test]
    fn chain_too_short_is_an_error() {
        assert!(matches!(
            fit_bezier(&[MedialPoint::new(0.0, 0.0, 1.0)]),
            Err(Error::ChainTooShort(1))
        ));
        assert!(matches!(fit_bezier(&[]), Err(Error::ChainTooShort(0))));
    }

    #[test]
    fn straight_chains_give_collinear_control_points() {
        let chain: Vec<MedialPoint> = (0..12)
            .map(|i| {
                let s = i as f64;
                MedialPoint::new(1.0 + 2.0 * s, 3.0 + 1.5 * s, 2.0 + 0.2 * s)
            })
            .collect();
        let b = fit_bezier(&chain).unwrap();
        for w in b.ctrl.windows(3) {
            let cross = (w[1][0] - w[0][0]) * (w[2][1] - w[0][1])
                - (w[1][1] - w[0][1]) * (w[2][0] - w[0][0]);
            assert!(cross.abs() < 1e-6, "cross product {cross}");
        }
    }

    /// Evaluates a curve at parameters spaced uniformly in arc length,
    /// found by inverting a dense polyline length table.
    fn sample_by_arclength(truth: &BezierBranch, n: usize) -> Vec<MedialPoint> {
        let dense = 20_000;
        let mut cum = vec![0.0; dense + 1];
        let mut prev = truth.eval(0.0);
        for k in 1..=dense {
            let t = k as f64 / dense as f64;
            let p = truth.eval(t);
            let dx = p[0] - prev[0];
            let dy = p[1] - prev[1];
            cum[k] = cum[k - 1] + (dx * dx + dy * dy).sqrt();
            prev = p;
        }
        let total = cum[dense];
        (0..n)
            .map(|k| {
                let target = total * k as f64 / (n - 1) as f64;
                let idx = cum.partition_point(|&c| c < target).min(dense);
                let t = if idx == 0 {
                    0.0
                } else {
                    let seg = cum[idx] - cum[idx - 1];
                    let frac = if seg > 0.0 { (target - cum[idx - 1]) / seg } else { 0.0 };
                    ((idx - 1) as f64 + frac) / dense as f64
                };
                let p = truth.eval(t);
                MedialPoint::new(p[0], p[1], p[2])
            })
            .collect()
    }

    fn chord_params(chain: &[MedialPoint]) -> Vec<f64> {
        let n = chain.len();
        let mut params = vec![0.0; n];
        for k in 1..n {
            params[k] = params[k - 1] + chain[k].pos.dist(chain[k - 1].pos);
        }
        let total = params[n - 1];
        for p in params.iter_mut() {
            *p /= total;
        }
        params
    }

    fn max_refit_residual(truth: &BezierBranch, n: usize) -> f64 {
        let chain = sample_by_arclength(truth, n);
        let fitted = fit_bezier(&chain).unwrap();
        let params = chord_params(&chain);
        let mut worst = 0.0f64;
        for (m, &t) in chain.iter().zip(&params) {
            let p = fitted.eval(t);
            let d = ((p[0] - m.pos.x).powi(2)
                + (p[1] - m.pos.y).powi(2)
                + (p[2] - m.r).powi(2))
            .sqrt();
            worst = worst.max(d);
        }
        worst
    }

    /// A constant-speed spine makes chord parameters equal the generating
    /// parameters, so the quintic radius profile is recovered almost exactly.
    #[test]
    fn refitting_a_straight_spine_recovers_the_radius_polynomial() {
        let truth = BezierBranch {
            ctrl: [
                [0.0, 0.0, 2.0],
                [14.0, 10.5, 5.0],
                [28.0, 21.0, 1.5],
                [42.0, 31.5, 6.0],
                [56.0, 42.0, 0.5],
                [70.0, 52.5, 3.0],
            ],
        };
        let worst = max_refit_residual(&truth, 100);
        assert!(worst < 1e-9, "max residual {worst}");
    }

    /// Curved spines reintroduce a small gap between chord and true
    /// parameters; gentle bends keep the refit error within tolerance.
    #[test]
    fn refitting_a_curved_branch_stays_within_tolerance() {
        let truth = BezierBranch {
            ctrl: [
                [0.0, 0.0, 2.0],
                [14.0, 0.6, 3.0],
                [28.0, 0.2, 4.0],
                [42.0, 0.8, 3.5],
                [56.0, 0.4, 2.5],
                [70.0, 0.9, 1.0],
            ],
        };
        let worst = max_refit_residual(&truth, 100);
        assert!(worst < 1e-3, "max residual {worst}");
    }

    /// Sum of squared residuals at chord parameters, plus the short-chain
    /// regularization term, matching what the fit minimizes.
    fn fit_objective(chain: &[MedialPoint], b: &BezierBranch) -> f64 {
        let params = chord_params(chain);
        let mut obj = 0.0;
        for (m, &t) in chain.iter().zip(&params) {
            let p = b.eval(t);
            obj += (p[0] - m.pos.x).powi(2)
                + (p[1] - m.pos.y).powi(2)
                + (p[2] - m.r).powi(2);
        }
        if chain.len() < 6 {
            let fallback = uniform_interior(chain.first().unwrap(), chain.last().unwrap());
            for i in 0..4 {
                for c in 0..3 {
                    obj += 1e-6 * (b.ctrl[i + 1][c] - fallback[i][c]).powi(2);
                }
            }
        }
        obj
    }

    #[test]
    fn fitted_control_points_are_locally_optimal() {
        let chains: Vec<Vec<MedialPoint>> = vec![
            (0..4)
                .map(|i| MedialPoint::new(i as f64 * 3.0, (i * i) as f64, 1.0 + i as f64))
                .collect(),
            (0..6)
                .map(|i| MedialPoint::new(i as f64 * 2.0, (i as f64).cos() * 4.0, 2.0))
                .collect(),
            (0..8)
                .map(|i| MedialPoint::new(i as f64, (i as f64 * 0.9).sin() * 5.0, 0.5 * i as f64))
                .collect(),
        ];
        for chain in &chains {
            let fitted = fit_bezier(chain).unwrap();
            let base = fit_objective(chain, &fitted);
            for i in 1..5 {
                for c in 0..3 {
                    for sign in [-1.0, 1.0] {
                        let mut probe = fitted;
                        probe.ctrl[i][c] += sign * 0.1;
                        let obj = fit_objective(chain, &probe);
                        assert!(
                            obj >= base - 1e-9,
                            "perturbing ctrl[{i}][{c}] by {sign}*0.1 lowered {base} to {obj}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn csv_round_trip_is_byte_identical() {
        let p = ParametricSkeleton {
            branches: vec![
                BezierBranch {
                    ctrl: [
                        [0.0, 0.5, 1.0],
                        [1.25, 2.0, 3.0],
                        [4.0, 5.0, 6.0],
                        [7.0, 8.0, 9.0],
                        [10.0, 11.0, 12.0],
                        [13.0, 14.5, 15.0],
                    ],
                },
                BezierBranch { ctrl: [[1.0; 3]; 6] },
            ],
        };
        let text = p.to_csv_string();
        let back = ParametricSkeleton::from_csv_string(&text).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.to_csv_string(), text);
        assert_eq!(p.flatten().len(), 36);
    }

    #[test]
    fn csv_rejects_malformed_rows() {
        assert!(ParametricSkeleton::from_csv_string("1\t2\t3\n").is_err());
        let mut seventeen = vec!["1"; 17].join("\t");
        seventeen.push('\n');
        assert!(ParametricSkeleton::from_csv_string(&seventeen).is_err());
        let mut bad = vec!["1"; 17].join("\t");
        bad.push_str("\tnope\n");
        assert!(ParametricSkeleton::from_csv_string(&bad).is_err());
    }

    #[test]
    fn ordering_is_permutation_invariant() {
        let a = BezierBranch { ctrl: [[0.0; 3]; 6] };
        let b = BezierBranch { ctrl: [[1.0; 3]; 6] };
        let c = BezierBranch { ctrl: [[2.0; 3]; 6] };
        let p1 = order_and_flatten(vec![(a, 5.0), (b, 9.0), (c, 9.0)]);
        let p2 = order_and_flatten(vec![(c, 9.0), (a, 5.0), (b, 9.0)]);
        assert_eq!(p1, p2);
        assert_eq!(p1.branches[0], b);
    }

    #[test]
    fn single_node_skeleton_parametrizes_to_a_constant_curve() {
        let g = SkeletonGraph::new(vec![MedialPoint::new(5.0, 7.0, 3.0)], vec![]).unwrap();
        let p = parametrize_graph(&g, &MergeTolerances::default()).unwrap();
        assert_eq!(p.branches.len(), 1);
        for cp in p.branches[0].ctrl {
            assert_eq!(cp, [5.0, 7.0, 3.0]);
        }
    }

    proptest! {
        #[test]
        fn fit_is_deterministic_and_endpoint_exact(
            pts in prop::collection::vec((0.0..100.0f64, 0.0..100.0f64, 0.0..10.0f64), 2..15)
        ) {
            let chain: Vec<MedialPoint> =
                pts.iter().map(|&(x, y, r)| MedialPoint::new(x, y, r)).collect();
            let a = fit_bezier(&chain).unwrap();
            let b = fit_bezier(&chain).unwrap();
            prop_assert_eq!(a, b);
            prop_assert_eq!(a.ctrl[0], [chain[0].pos.x, chain[0].pos.y, chain[0].r]);
            let lastp = chain.last().unwrap();
            prop_assert_eq!(a.ctrl[5], [lastp.pos.x, lastp.pos.y, lastp.r]);
        }
    }
}
