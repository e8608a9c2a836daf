//! Anchor graphs: a farthest-sampled anchor set connected as a clique by
//! global edges, every other vertex tied to a handful of nearby anchors by
//! local edges.
//!
//! With `ρ(n) = Θ(n^{k/(2k+1)})` anchors the graph has a linear number of
//! edges and sublinear total length while staying globally rigid. Local
//! edges can pick the nearest anchors (cheapest), a stability-optimized
//! triple for k = 2 (near-perpendicular pair plus a side witness), or
//! random anchors (fast path). Validators at the bottom check the
//! necessary conditions for global rigidity: generic 2D rigidity via the
//! (2,3)-pebble game and (k+1)-vertex-connectivity via max-flow.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SquaredDistanceMatrix;
use crate::matrix::{self, Matrix};
use crate::noise::splitmix64;
use crate::sampling::farthest_sampling;

/// How local edges are chosen for each non-anchor vertex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Strategy {
    /// The `k+1` nearest anchors.
    Nearest,
    /// Stability-optimized triple for `k = 2`: nearest anchor, a partner
    /// making the angle at the vertex closest to a right angle, and a side
    /// witness far from their line. Falls back to nearest for non-interior
    /// vertices.
    Stable2d { delta: f64 },
    /// `k+1` anchors drawn uniformly without replacement, seeded;
    /// degenerate draws are rejected and redrawn (up to 10 times, then
    /// nearest fallback).
    Random { seed: u64 },
}

impl Strategy {
    pub fn tag(&self) -> &'static str {
        match self {
            Strategy::Nearest => "nearest",
            Strategy::Stable2d { .. } => "stable2d",
            Strategy::Random { .. } => "random",
        }
    }
}

/// Local edges of one non-anchor vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalEdgeSet {
    pub vertex: usize,
    /// `(anchor vertex, observed length)`; for stable triples the order is
    /// `(r_i, r_j, r_k)`.
    pub edges: Vec<(usize, f64)>,
    /// Achieved angle `∠ r_i p r_j` when the stable selection succeeded.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stable_angle: Option<f64>,
}

/// Construction metadata carried along with the graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphMeta {
    /// Farthest-sampling radius `e` of the anchor set.
    pub sampling_radius: f64,
    /// Strategy tag: `nearest`, `stable2d` or `random`.
    pub strategy: String,
    /// Vertices where the stable selection fell back to nearest anchors.
    pub fallback_count: usize,
}

/// Anchor graph: the anchor clique plus per-vertex local edges.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorGraph {
    n: usize,
    k: usize,
    anchors: Vec<usize>,
    /// All unordered anchor pairs with observed lengths.
    global_edges: Vec<(usize, usize, f64)>,
    /// One entry per non-anchor vertex, ascending vertex order.
    locals: Vec<LocalEdgeSet>,
    pub meta: GraphMeta,
}

impl AnchorGraph {
    /// Validates the structural invariants and assembles the graph.
    pub fn new(
        n: usize,
        k: usize,
        anchors: Vec<usize>,
        global_edges: Vec<(usize, usize, f64)>,
        locals: Vec<LocalEdgeSet>,
        meta: GraphMeta,
    ) -> Result<Self> {
        if anchors.len() < k + 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least k+2 = {} anchors, got {}",
                k + 2,
                anchors.len()
            )));
        }
        let rho = anchors.len();
        let mut is_anchor = vec![false; n];
        for &a in &anchors {
            if a >= n {
                return Err(Error::InvalidArgument(format!("anchor {a} out of range")));
            }
            if is_anchor[a] {
                return Err(Error::InvalidArgument(format!("duplicate anchor {a}")));
            }
            is_anchor[a] = true;
        }
        if global_edges.len() != rho * (rho - 1) / 2 {
            return Err(Error::InvalidArgument(format!(
                "expected {} global edges, got {}",
                rho * (rho - 1) / 2,
                global_edges.len()
            )));
        }
        if locals.len() != n - rho {
            return Err(Error::InvalidArgument(format!(
                "expected {} local edge sets, got {}",
                n - rho,
                locals.len()
            )));
        }
        for set in &locals {
            if is_anchor[set.vertex] {
                return Err(Error::InvalidArgument(format!(
                    "vertex {} is an anchor but has local edges",
                    set.vertex
                )));
            }
            if set.edges.len() < k + 1 {
                return Err(Error::InvalidArgument(format!(
                    "vertex {} has {} local edges, needs at least {}",
                    set.vertex,
                    set.edges.len(),
                    k + 1
                )));
            }
            let mut seen = std::collections::BTreeSet::new();
            for &(a, _) in &set.edges {
                if !is_anchor.get(a).copied().unwrap_or(false) {
                    return Err(Error::InvalidArgument(format!(
                        "local edge of {} points at non-anchor {a}",
                        set.vertex
                    )));
                }
                if !seen.insert(a) {
                    return Err(Error::InvalidArgument(format!(
                        "vertex {} has duplicate local edges to anchor {a}",
                        set.vertex
                    )));
                }
            }
        }
        Ok(AnchorGraph {
            n,
            k,
            anchors,
            global_edges,
            locals,
            meta,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn anchors(&self) -> &[usize] {
        &self.anchors
    }

    pub fn global_edges(&self) -> &[(usize, usize, f64)] {
        &self.global_edges
    }

    pub fn locals(&self) -> &[LocalEdgeSet] {
        &self.locals
    }

    pub fn is_anchor(&self, v: usize) -> bool {
        self.anchors.contains(&v)
    }

    pub fn edge_count(&self) -> usize {
        self.global_edges.len() + self.locals.iter().map(|l| l.edges.len()).sum::<usize>()
    }

    /// Undirected simple edge list over all vertices.
    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<(usize, usize)> = self
            .global_edges
            .iter()
            .map(|&(a, b, _)| (a.min(b), a.max(b)))
            .collect();
        for set in &self.locals {
            for &(a, _) in &set.edges {
                edges.push((set.vertex.min(a), set.vertex.max(a)));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        edges
    }
}

/// Default anchor count `max(k+2, ⌈n^{k/(2k+1)}⌉)`.
pub fn rho_default(n: usize, k: usize) -> Result<usize> {
    if n < k + 2 {
        return Err(Error::InvalidArgument(format!(
            "need n >= k+2 = {}, got {n}",
            k + 2
        )));
    }
    let exponent = k as f64 / (2 * k + 1) as f64;
    let raw = (n as f64).powf(exponent);
    // Guard against powf landing a hair above an exact integer.
    let rounded = raw.round();
    let ceiled = if (raw - rounded).abs() < 1e-9 {
        rounded as usize
    } else {
        raw.ceil() as usize
    };
    Ok(ceiled.max(k + 2))
}

/// Selected stable triple for a 2D vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableTriple {
    pub r_i: usize,
    pub r_j: usize,
    pub r_k: usize,
    /// Achieved angle `∠ r_i p r_j`.
    pub angle: f64,
}

/// Angle at `p` between anchors `a` and `b` from distances alone (law of
/// cosines), in `[0, π]`.
fn angle_at(d: &SquaredDistanceMatrix, p: usize, a: usize, b: usize) -> f64 {
    let pa2 = d.get(p, a);
    let pb2 = d.get(p, b);
    let ab2 = d.get(a, b);
    let pa = pa2.sqrt();
    let pb = pb2.sqrt();
    if pa == 0.0 || pb == 0.0 {
        return 0.0;
    }
    let cosv = ((pa2 + pb2 - ab2) / (2.0 * pa * pb)).clamp(-1.0, 1.0);
    cosv.acos()
}

/// The angular half-width `φ = arccos(ε₀ / (4 (ε₁ + δ)))` inside which a
/// stable pair's angle must land around π/2. For a farthest sample the
/// sparsity and cover radii coincide, so `ε₀ = ε₁ = e`.
pub fn stable_angle_halfwidth(e: f64, delta: f64) -> f64 {
    (e / (4.0 * (e + delta))).clamp(-1.0, 1.0).acos()
}

/// Picks a stability-optimized anchor triple for vertex `p` (k = 2):
/// the nearest anchor `r_i`, the in-ball anchor `r_j` whose angle
/// `∠ r_i p r_j` is closest to a right angle, and a witness `r_k`
/// maximizing its distance from the line `r_i r_j` so the side
/// disambiguation stays robust under noise.
///
/// Fails with [`Error::NotInterior`] when fewer than 3 anchors lie in
/// `B(p, 2e+δ)` or no pair reaches the guaranteed angular band.
pub fn select_stable_anchors_2d(
    p: usize,
    anchors: &[usize],
    d_true: &SquaredDistanceMatrix,
    e: f64,
    delta: f64,
) -> Result<StableTriple> {
    let ball = 2.0 * e + delta;
    let mut candidates: Vec<usize> = anchors
        .iter()
        .copied()
        .filter(|&a| a != p && d_true.get(p, a).sqrt() <= ball)
        .collect();
    candidates.sort_unstable();
    if candidates.len() < 3 {
        return Err(Error::NotInterior(format!(
            "only {} anchors within 2e+delta = {ball:.4} of vertex {p}",
            candidates.len()
        )));
    }
    // Nearest anchor; ties by index (candidates are sorted).
    let r_i = candidates
        .iter()
        .copied()
        .min_by(|&a, &b| d_true.get(p, a).total_cmp(&d_true.get(p, b)))
        .unwrap();
    // Partner whose angle is closest to π/2.
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut r_j = usize::MAX;
    let mut best_dev = f64::INFINITY;
    let mut best_angle = 0.0;
    for &c in &candidates {
        if c == r_i {
            continue;
        }
        let ang = angle_at(d_true, p, r_i, c);
        let dev = (ang - half_pi).abs();
        if dev < best_dev {
            best_dev = dev;
            best_angle = ang;
            r_j = c;
        }
    }
    let phi = stable_angle_halfwidth(e, delta);
    if best_dev > phi {
        return Err(Error::NotInterior(format!(
            "no near-perpendicular anchor pair at vertex {p}: best angle {:.3} rad off by {:.3} > phi = {:.3}",
            best_angle, best_dev, phi
        )));
    }
    // Witness: embed candidates in the plane from distances (p at the
    // origin, r_i on the positive axis). A witness is valid only when p is
    // strictly closer to it than p's mirror across the line r_i r_j is;
    // pick the one maximizing that margin so the side disambiguation stays
    // robust under noise.
    let pi_len = d_true.get(p, r_i).sqrt();
    let pj_len = d_true.get(p, r_j).sqrt();
    let theta_j = best_angle;
    let ri_pos = [pi_len, 0.0];
    let rj_pos = [pj_len * theta_j.cos(), pj_len * theta_j.sin()];
    let p_mirror = mirror_across_line(&[0.0, 0.0], &ri_pos, &rj_pos);
    let mut r_k = usize::MAX;
    let mut best_margin = 0.0;
    for &c in &candidates {
        if c == r_i || c == r_j {
            continue;
        }
        let pc = d_true.get(p, c).sqrt();
        let theta_c = angle_at(d_true, p, r_i, c);
        // Two mirror placements; the distance to r_j picks the consistent one.
        let plus = [pc * theta_c.cos(), pc * theta_c.sin()];
        let minus = [plus[0], -plus[1]];
        let want = d_true.get(r_j, c);
        let err_plus = (sq2(&plus, &rj_pos) - want).abs();
        let err_minus = (sq2(&minus, &rj_pos) - want).abs();
        let pos = if err_plus <= err_minus { plus } else { minus };
        let margin = sq2(&pos, &p_mirror).sqrt() - pc;
        if margin > best_margin {
            best_margin = margin;
            r_k = c;
        }
    }
    if r_k == usize::MAX {
        return Err(Error::NotInterior(format!(
            "no witness anchor on the correct side at vertex {p}"
        )));
    }
    Ok(StableTriple {
        r_i,
        r_j,
        r_k,
        angle: best_angle,
    })
}

fn sq2(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

fn mirror_across_line(p: &[f64; 2], a: &[f64; 2], b: &[f64; 2]) -> [f64; 2] {
    let ux = b[0] - a[0];
    let uy = b[1] - a[1];
    let len2 = ux * ux + uy * uy;
    if len2 == 0.0 {
        return *p;
    }
    let t = ((p[0] - a[0]) * ux + (p[1] - a[1]) * uy) / len2;
    let foot = [a[0] + t * ux, a[1] + t * uy];
    [2.0 * foot[0] - p[0], 2.0 * foot[1] - p[1]]
}

/// Squared volume of the simplex spanned by `pts` (Cayley-Menger), used to
/// reject affinely degenerate random anchor draws from distances alone.
fn simplex_volume_sq(d: &SquaredDistanceMatrix, pts: &[usize]) -> f64 {
    let m = pts.len();
    let dim = m - 1;
    let mut b = Matrix::zeros(m + 1, m + 1);
    for i in 1..=m {
        b.set(0, i, 1.0);
        b.set(i, 0, 1.0);
    }
    for (r, &i) in pts.iter().enumerate() {
        for (c, &j) in pts.iter().enumerate() {
            b.set(r + 1, c + 1, d.get(i, j));
        }
    }
    let det = matrix::det(&b);
    let mut fact = 1.0;
    for t in 1..=dim {
        fact *= t as f64;
    }
    let sign = if (dim + 1).is_multiple_of(2) { 1.0 } else { -1.0 };
    (sign * det / (2.0_f64.powi(dim as i32) * fact * fact)).max(0.0)
}

/// Builds the anchor graph.
///
/// `d_true` drives the selection geometry (anchors, nearest sets, angles);
/// `d_obs` supplies the recorded edge lengths. In field mode, where only
/// observations exist, pass the same matrix for both.
pub fn build_anchor_graph(
    d_true: &SquaredDistanceMatrix,
    d_obs: &SquaredDistanceMatrix,
    k: usize,
    rho: usize,
    strategy: Strategy,
) -> Result<AnchorGraph> {
    let n = d_true.size();
    if d_obs.size() != n {
        return Err(Error::DimensionMismatch(format!(
            "true and observed matrices differ: {n} vs {}",
            d_obs.size()
        )));
    }
    if rho < k + 2 {
        return Err(Error::InvalidArgument(format!(
            "rho = {rho} below the minimum k+2 = {}",
            k + 2
        )));
    }
    if rho > n {
        return Err(Error::InvalidArgument(format!("rho = {rho} exceeds n = {n}")));
    }
    if let Strategy::Stable2d { .. } = strategy {
        if k != 2 {
            return Err(Error::InvalidArgument(
                "the stable2d strategy requires k = 2".into(),
            ));
        }
    }
    let sample = farthest_sampling(d_true, rho, 0)?;
    let mut anchors = sample.indices.clone();
    anchors.sort_unstable();
    let e = sample.radius;

    let mut global_edges = Vec::with_capacity(rho * (rho - 1) / 2);
    for ai in 0..rho {
        for bi in (ai + 1)..rho {
            let (a, b) = (anchors[ai], anchors[bi]);
            global_edges.push((a, b, d_obs.get(a, b).sqrt()));
        }
    }

    let mut fallback_count = 0;
    let mut locals = Vec::with_capacity(n - rho);
    let is_anchor: std::collections::BTreeSet<usize> = anchors.iter().copied().collect();
    for v in 0..n {
        if is_anchor.contains(&v) {
            continue;
        }
        let set = match strategy {
            Strategy::Nearest => nearest_local_set(v, &anchors, d_true, d_obs, k + 1),
            Strategy::Stable2d { delta } => {
                match select_stable_anchors_2d(v, &anchors, d_true, e, delta) {
                    Ok(triple) => LocalEdgeSet {
                        vertex: v,
                        edges: vec![
                            (triple.r_i, d_obs.get(v, triple.r_i).sqrt()),
                            (triple.r_j, d_obs.get(v, triple.r_j).sqrt()),
                            (triple.r_k, d_obs.get(v, triple.r_k).sqrt()),
                        ],
                        stable_angle: Some(triple.angle),
                    },
                    Err(Error::NotInterior(_)) => {
                        fallback_count += 1;
                        nearest_local_set(v, &anchors, d_true, d_obs, k + 1)
                    }
                    Err(other) => return Err(other),
                }
            }
            Strategy::Random { seed } => random_local_set(v, &anchors, d_true, d_obs, k, seed),
        };
        locals.push(set);
    }

    AnchorGraph::new(
        n,
        k,
        anchors,
        global_edges,
        locals,
        GraphMeta {
            sampling_radius: e,
            strategy: strategy.tag().to_string(),
            fallback_count,
        },
    )
}

fn nearest_local_set(
    v: usize,
    anchors: &[usize],
    d_true: &SquaredDistanceMatrix,
    d_obs: &SquaredDistanceMatrix,
    count: usize,
) -> LocalEdgeSet {
    let mut order: Vec<usize> = anchors.to_vec();
    order.sort_by(|&a, &b| d_true.get(v, a).total_cmp(&d_true.get(v, b)).then(a.cmp(&b)));
    let edges = order
        .iter()
        .take(count)
        .map(|&a| (a, d_obs.get(v, a).sqrt()))
        .collect();
    LocalEdgeSet {
        vertex: v,
        edges,
        stable_angle: None,
    }
}

fn random_local_set(
    v: usize,
    anchors: &[usize],
    d_true: &SquaredDistanceMatrix,
    d_obs: &SquaredDistanceMatrix,
    k: usize,
    seed: u64,
) -> LocalEdgeSet {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(v as u64)));
    let rho = anchors.len();
    // Degenerate draws (anchors that do not affinely span R^k) are redrawn;
    // the threshold compares the simplex volume against the set's scale.
    for _ in 0..10 {
        let picks = rand::seq::index::sample(&mut rng, rho, k + 1);
        let set: Vec<usize> = picks.iter().map(|i| anchors[i]).collect();
        let mut scale2 = 0.0_f64;
        for a in 0..set.len() {
            for b in (a + 1)..set.len() {
                scale2 = scale2.max(d_true.get(set[a], set[b]));
            }
        }
        let vol2 = simplex_volume_sq(d_true, &set);
        if vol2 > 1e-16 * scale2.powi(k as i32) && scale2 > 0.0 {
            let edges = set.iter().map(|&a| (a, d_obs.get(v, a).sqrt())).collect();
            return LocalEdgeSet {
                vertex: v,
                edges,
                stable_angle: None,
            };
        }
    }
    nearest_local_set(v, anchors, d_true, d_obs, k + 1)
}

/// Per-category cost accounting with true (unperturbed) lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub total_length: f64,
    pub global_length: f64,
    pub local_length: f64,
    pub edge_count: usize,
    pub max_local_edge_length: f64,
}

/// Sums true edge lengths by category.
pub fn cost_report(g: &AnchorGraph, d_true: &SquaredDistanceMatrix) -> CostReport {
    let mut global_length = 0.0;
    for &(a, b, _) in g.global_edges() {
        global_length += d_true.get(a, b).sqrt();
    }
    let mut local_length = 0.0;
    let mut max_local = 0.0_f64;
    for set in g.locals() {
        for &(a, _) in &set.edges {
            let len = d_true.get(set.vertex, a).sqrt();
            local_length += len;
            max_local = max_local.max(len);
        }
    }
    CostReport {
        total_length: global_length + local_length,
        global_length,
        local_length,
        edge_count: g.edge_count(),
        max_local_edge_length: max_local,
    }
}

// ---------------------------------------------------------------------------
// Rigidity validators
// ---------------------------------------------------------------------------

/// True iff removing any `t-1` vertices leaves the graph connected,
/// decided exactly via max-flow on the split-vertex transform. Intended
/// for desk-scale graphs (n ≤ 2000).
pub fn vertex_connectivity_at_least(g: &AnchorGraph, t: usize) -> bool {
    edge_connectivity_at_least(g.n(), &g.edge_list(), t)
}

/// Vertex-connectivity check on a plain edge list.
pub fn edge_connectivity_at_least(n: usize, edges: &[(usize, usize)], t: usize) -> bool {
    if t == 0 {
        return true;
    }
    if n == 0 || t > n.saturating_sub(1) {
        return false;
    }
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        if a == b {
            continue;
        }
        adj[a].push(b);
        adj[b].push(a);
    }
    // Base connectivity.
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut visited = 1;
    while let Some(x) = stack.pop() {
        for &y in &adj[x] {
            if !seen[y] {
                seen[y] = true;
                visited += 1;
                stack.push(y);
            }
        }
    }
    if visited < n {
        return false;
    }
    // Any vertex cut of size < t misses at least one of t fixed probes, so
    // checking flows from each probe to every non-neighbor is exact.
    let mut neighbor_flags = vec![false; n];
    for probe in 0..t {
        for flag in neighbor_flags.iter_mut() {
            *flag = false;
        }
        neighbor_flags[probe] = true;
        for &y in &adj[probe] {
            neighbor_flags[y] = true;
        }
        for u in 0..n {
            if neighbor_flags[u] {
                continue;
            }
            if max_vertex_disjoint_paths(n, &adj, probe, u, t) < t {
                return false;
            }
        }
    }
    true
}

/// Counts vertex-disjoint paths between `s` and `t` up to `limit` using
/// unit-capacity flow on the split-vertex graph.
fn max_vertex_disjoint_paths(
    n: usize,
    adj: &[Vec<usize>],
    s: usize,
    t: usize,
    limit: usize,
) -> usize {
    // Node 2v = v_in, 2v+1 = v_out; internal arcs carry capacity 1.
    struct Arc {
        to: usize,
        cap: u32,
        rev: usize,
    }
    fn add(arcs: &mut [Vec<Arc>], a: usize, b: usize, cap: u32) {
        let ra = arcs[b].len();
        let rb = arcs[a].len();
        arcs[a].push(Arc { to: b, cap, rev: ra });
        arcs[b].push(Arc {
            to: a,
            cap: 0,
            rev: rb,
        });
    }
    let mut arcs: Vec<Vec<Arc>> = Vec::new();
    arcs.resize_with(2 * n, Vec::new);
    for v in 0..n {
        let cap = if v == s || v == t { limit as u32 } else { 1 };
        add(&mut arcs, 2 * v, 2 * v + 1, cap);
    }
    for (a, nbrs) in adj.iter().enumerate() {
        for &b in nbrs {
            add(&mut arcs, 2 * a + 1, 2 * b, limit as u32);
        }
    }
    let source = 2 * s + 1;
    let sink = 2 * t;
    let mut flow = 0;
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; 2 * n];
    while flow < limit {
        for p in parent.iter_mut() {
            *p = None;
        }
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(source);
        parent[source] = Some((source, usize::MAX));
        'bfs: while let Some(x) = queue.pop_front() {
            for (idx, arc) in arcs[x].iter().enumerate() {
                if arc.cap > 0 && parent[arc.to].is_none() {
                    parent[arc.to] = Some((x, idx));
                    if arc.to == sink {
                        break 'bfs;
                    }
                    queue.push_back(arc.to);
                }
            }
        }
        if parent[sink].is_none() {
            break;
        }
        // Augment one unit along the found path.
        let mut x = sink;
        while x != source {
            let (px, idx) = parent[x].unwrap();
            let rev = arcs[px][idx].rev;
            arcs[px][idx].cap -= 1;
            arcs[x][rev].cap += 1;
            x = px;
        }
        flow += 1;
    }
    flow
}

/// Generic 2D rigidity via the (2,3)-pebble game: true iff the graph
/// contains a spanning Laman subgraph, i.e. the game accepts `2n - 3`
/// independent edges.
pub fn laman_check_2d(g: &AnchorGraph) -> bool {
    generic_rigidity_2d(g.n(), &g.edge_list())
}

/// The (2,3)-pebble game on a plain edge list.
pub fn generic_rigidity_2d(n: usize, edges: &[(usize, usize)]) -> bool {
    if n < 2 {
        return true;
    }
    let needed = 2 * n - 3;
    if edges.len() < needed {
        return false;
    }
    pebble_game_independent_edges(n, edges) == needed
}

/// Runs the (2,3)-pebble game and returns the number of independent edges.
///
/// Every vertex starts with two pebbles. An edge (u, v) is accepted when
/// four pebbles can be gathered on {u, v} by reversing directed paths;
/// accepting consumes one pebble from u and orients the edge away from it.
pub fn pebble_game_independent_edges(n: usize, edges: &[(usize, usize)]) -> usize {
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut pebbles = vec![2u8; n];
    let mut sorted: Vec<(usize, usize)> = edges
        .iter()
        .filter(|&&(a, b)| a != b)
        .map(|&(a, b)| (a.min(b), a.max(b)))
        .collect();
    sorted.sort_unstable();
    sorted.dedup();
    let mut independent = 0;
    for &(u, v) in &sorted {
        loop {
            if pebbles[u] as usize + pebbles[v] as usize >= 4 {
                pebbles[u] -= 1;
                out[u].push(v);
                independent += 1;
                break;
            }
            let moved = if pebbles[u] < 2 && pull_pebble(&mut out, &mut pebbles, u, v) {
                true
            } else {
                pebbles[v] < 2 && pull_pebble(&mut out, &mut pebbles, v, u)
            };
            if !moved {
                break; // dependent edge, skip
            }
        }
    }
    independent
}

/// Searches the directed graph from `root` for a free pebble outside
/// {root, partner}; on success reverses the path and moves the pebble to
/// `root`.
fn pull_pebble(out: &mut [Vec<usize>], pebbles: &mut [u8], root: usize, partner: usize) -> bool {
    let n = out.len();
    let mut visited = vec![false; n];
    let mut parent: Vec<usize> = vec![usize::MAX; n];
    let mut stack = vec![root];
    visited[root] = true;
    while let Some(x) = stack.pop() {
        for idx in 0..out[x].len() {
            let y = out[x][idx];
            if visited[y] {
                continue;
            }
            visited[y] = true;
            parent[y] = x;
            if y != partner && pebbles[y] > 0 {
                pebbles[y] -= 1;
                pebbles[root] += 1;
                // Reverse the path root -> ... -> y.
                let mut cur = y;
                while cur != root {
                    let p = parent[cur];
                    let pos = out[p].iter().position(|&w| w == cur).expect("path edge");
                    out[p].swap_remove(pos);
                    out[cur].push(p);
                    cur = p;
                }
                return true;
            }
            stack.push(y);
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{squared_distance_matrix, PointCloud};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn uniform_disk(n: usize, rng: &mut ChaCha8Rng) -> PointCloud {
        let mut coords = Vec::with_capacity(n * 2);
        while coords.len() < n * 2 {
            let x: f64 = rng.gen_range(-1.0..1.0);
            let y: f64 = rng.gen_range(-1.0..1.0);
            if x * x + y * y <= 1.0 {
                coords.push(x);
                coords.push(y);
            }
        }
        PointCloud::new(2, coords).unwrap()
    }

    #[test]
    fn rho_default_examples() {
        assert_eq!(rho_default(10_000, 2).unwrap(), 40); // 10^1.6 = 39.81...
        assert_eq!(rho_default(5, 2).unwrap(), 4); // clamped to k+2
        assert_eq!(rho_default(32, 1).unwrap(), 4); // ceil(32^(1/3)) = 4
        assert!(rho_default(3, 2).is_err());
    }

    #[test]
    fn nearest_graph_edge_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let p = uniform_disk(100, &mut rng);
        let d = squared_distance_matrix(&p);
        let g = build_anchor_graph(&d, &d, 2, 10, Strategy::Nearest).unwrap();
        assert_eq!(g.anchors().len(), 10);
        assert_eq!(g.edge_count(), 45 + 3 * 90);
        // Identity |E| = ρ(ρ−1)/2 + (k+1)(n−ρ).
        assert_eq!(g.edge_count(), 10 * 9 / 2 + 3 * (100 - 10));
    }

    #[test]
    fn random_graph_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let p = uniform_disk(60, &mut rng);
        let d = squared_distance_matrix(&p);
        let a = build_anchor_graph(&d, &d, 2, 8, Strategy::Random { seed: 9 }).unwrap();
        let b = build_anchor_graph(&d, &d, 2, 8, Strategy::Random { seed: 9 }).unwrap();
        assert_eq!(a, b);
        let c = build_anchor_graph(&d, &d, 2, 8, Strategy::Random { seed: 10 }).unwrap();
        assert_ne!(a, c);
        assert_eq!(a.edge_count(), 8 * 7 / 2 + 3 * 52);
    }

    #[test]
    fn nearest_local_edges_within_five_radii() {
        // Neighbor-count lemma with l = 3: every point has 3 anchors within
        // (2·3−1)e, so nearest local edges cannot exceed 5e.
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let p = uniform_disk(400, &mut rng);
        let d = squared_distance_matrix(&p);
        let rho = rho_default(400, 2).unwrap();
        let g = build_anchor_graph(&d, &d, 2, rho, Strategy::Nearest).unwrap();
        let e = g.meta.sampling_radius;
        let report = cost_report(&g, &d);
        assert!(
            report.max_local_edge_length <= 5.0 * e,
            "max local edge {} exceeds 5e = {}",
            report.max_local_edge_length,
            5.0 * e
        );
    }

    #[test]
    fn stable_selection_compass_anchors() {
        // p at the origin with anchors exactly E/N/W/S at radius 1: the
        // selected pair is perpendicular.
        let p = PointCloud::from_rows(
            2,
            &[
                vec![0.0, 0.0],
                vec![1.0, 0.0],
                vec![0.0, 1.0],
                vec![-1.0, 0.0],
                vec![0.0, -1.0],
            ],
        )
        .unwrap();
        let d = squared_distance_matrix(&p);
        let anchors = vec![1, 2, 3, 4];
        let triple = select_stable_anchors_2d(0, &anchors, &d, 1.0, 1.0).unwrap();
        assert_eq!(triple.r_i, 1);
        assert_eq!(triple.r_j, 2); // ties at ±90°, smaller index wins
        assert!((triple.angle - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn stable_selection_picks_angle_closest_to_right() {
        // Anchors at polar angles 0°, 85°, 170°, the first strictly nearest:
        // the pair (0°, 85°) wins on angle.
        let deg = |d: f64| d.to_radians();
        let p = PointCloud::from_rows(
            2,
            &[
                vec![0.0, 0.0],
                vec![0.9 * deg(0.0).cos(), 0.9 * deg(0.0).sin()],
                vec![deg(85.0).cos(), deg(85.0).sin()],
                vec![deg(170.0).cos(), deg(170.0).sin()],
            ],
        )
        .unwrap();
        let d = squared_distance_matrix(&p);
        let triple = select_stable_anchors_2d(0, &[1, 2, 3], &d, 1.0, 1.0).unwrap();
        assert_eq!((triple.r_i, triple.r_j, triple.r_k), (1, 2, 3));
        assert!((triple.angle - deg(85.0)).abs() < 1e-10);
    }

    #[test]
    fn stable_selection_rejects_narrow_cone() {
        // All anchors within a 5° cone: no near-perpendicular pair exists.
        let deg = |d: f64| d.to_radians();
        let p = PointCloud::from_rows(
            2,
            &[
                vec![0.0, 0.0],
                vec![deg(0.0).cos(), deg(0.0).sin()],
                vec![deg(3.0).cos(), deg(3.0).sin()],
                vec![deg(5.0).cos(), deg(5.0).sin()],
            ],
        )
        .unwrap();
        let d = squared_distance_matrix(&p);
        let out = select_stable_anchors_2d(0, &[1, 2, 3], &d, 1.0, 1.0);
        assert!(matches!(out, Err(Error::NotInterior(_))));
    }

    #[test]
    fn stable_selection_needs_three_in_ball() {
        let p = PointCloud::from_rows(
            2,
            &[vec![0.0, 0.0], vec![0.5, 0.0], vec![0.0, 0.5], vec![30.0, 30.0]],
        )
        .unwrap();
        let d = squared_distance_matrix(&p);
        let out = select_stable_anchors_2d(0, &[1, 2, 3], &d, 0.5, 0.25);
        assert!(matches!(out, Err(Error::NotInterior(_))));
    }

    #[test]
    fn stable_graph_builds_with_fallbacks() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let p = uniform_disk(300, &mut rng);
        let d = squared_distance_matrix(&p);
        let rho = rho_default(300, 2).unwrap();
        let g = build_anchor_graph(&d, &d, 2, rho, Strategy::Stable2d { delta: 0.3 }).unwrap();
        assert_eq!(g.meta.strategy, "stable2d");
        // Some interior vertices must succeed; boundary ones may fall back.
        let stable_count = g
            .locals()
            .iter()
            .filter(|s| s.stable_angle.is_some())
            .count();
        assert!(stable_count > 0, "no stable triples at all");
        assert!(g.meta.fallback_count < g.locals().len());
        // Achieved angles respect the guaranteed band.
        let phi = stable_angle_halfwidth(g.meta.sampling_radius, 0.3);
        for s in g.locals() {
            if let Some(angle) = s.stable_angle {
                assert!(
                    (angle - std::f64::consts::FRAC_PI_2).abs() <= phi + 1e-12,
                    "angle {angle} outside band phi = {phi}"
                );
            }
        }
    }

    #[test]
    fn cost_report_unit_square_clique() {
        let p = PointCloud::from_rows(
            2,
            &[
                vec![0.0, 0.0],
                vec![1.0, 0.0],
                vec![1.0, 1.0],
                vec![0.0, 1.0],
            ],
        )
        .unwrap();
        let d = squared_distance_matrix(&p);
        let g = build_anchor_graph(&d, &d, 2, 4, Strategy::Nearest).unwrap();
        let report = cost_report(&g, &d);
        assert_eq!(report.local_length, 0.0);
        assert!((report.global_length - (4.0 + 2.0 * 2.0_f64.sqrt())).abs() < 1e-12);
        assert_eq!(report.total_length, report.global_length + report.local_length);
        assert_eq!(report.edge_count, 6);
    }

    #[test]
    fn connectivity_basics() {
        // Complete graph K5 is 4-connected.
        let mut k5 = Vec::new();
        for i in 0..5 {
            for j in (i + 1)..5 {
                k5.push((i, j));
            }
        }
        assert!(edge_connectivity_at_least(5, &k5, 4));
        assert!(!edge_connectivity_at_least(5, &k5, 5));
        // A path has a cut vertex.
        let path = vec![(0, 1), (1, 2), (2, 3)];
        assert!(edge_connectivity_at_least(4, &path, 1));
        assert!(!edge_connectivity_at_least(4, &path, 2));
        // Disconnected graph fails immediately.
        assert!(!edge_connectivity_at_least(4, &[(0, 1), (2, 3)], 1));
    }

    #[test]
    fn anchor_graph_is_three_connected() {
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        let p = uniform_disk(200, &mut rng);
        let d = squared_distance_matrix(&p);
        let rho = rho_default(200, 2).unwrap();
        let g = build_anchor_graph(&d, &d, 2, rho, Strategy::Nearest).unwrap();
        assert!(vertex_connectivity_at_least(&g, 3));

        // Oracle: exhaustive 2-vertex removal keeps the graph connected.
        let edges = g.edge_list();
        let n = g.n();
        for a in 0..n {
            for b in (a + 1)..n {
                assert!(
                    connected_without(n, &edges, &[a, b]),
                    "removing ({a},{b}) disconnects"
                );
            }
        }
    }

    fn connected_without(n: usize, edges: &[(usize, usize)], removed: &[usize]) -> bool {
        let gone = |v: usize| removed.contains(&v);
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            if !gone(a) && !gone(b) {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        let start = (0..n).find(|&v| !gone(v)).unwrap();
        let mut seen = vec![false; n];
        seen[start] = true;
        let mut stack = vec![start];
        let mut count = 1;
        while let Some(x) = stack.pop() {
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    count += 1;
                    stack.push(y);
                }
            }
        }
        count == n - removed.len()
    }

    #[test]
    fn pebble_game_basics() {
        // Triangle: minimally rigid.
        assert!(generic_rigidity_2d(3, &[(0, 1), (1, 2), (0, 2)]));
        // A 4-cycle flexes.
        assert!(!generic_rigidity_2d(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]));
        // K4 is rigid with one redundant edge.
        let mut k4 = Vec::new();
        for i in 0..4 {
            for j in (i + 1)..4 {
                k4.push((i, j));
            }
        }
        assert!(generic_rigidity_2d(4, &k4));
        assert_eq!(pebble_game_independent_edges(4, &k4), 5);
        // Two triangles sharing one vertex flex around the hinge.
        let bowtie = vec![(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (2, 4)];
        assert!(!generic_rigidity_2d(5, &bowtie));
    }

    #[test]
    fn built_graphs_pass_pebble_game() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        for &n in &[30usize, 80, 150] {
            let p = uniform_disk(n, &mut rng);
            let d = squared_distance_matrix(&p);
            let rho = rho_default(n, 2).unwrap();
            for strategy in [Strategy::Nearest, Strategy::Random { seed: 1 }] {
                let g = build_anchor_graph(&d, &d, 2, rho, strategy).unwrap();
                assert!(laman_check_2d(&g), "n={n} strategy={:?}", strategy.tag());
            }
        }
    }

    #[test]
    fn pebble_game_matches_rigidity_matrix_rank() {
        // Oracle: rank of the generic rigidity matrix equals 2n − 3 iff the
        // pebble game accepts a spanning Laman subgraph.
        let mut rng = ChaCha8Rng::seed_from_u64(48);
        for _ in 0..10 {
            let n = rng.gen_range(4..16);
            let p = uniform_disk(n, &mut rng);
            let mut edges = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.gen_bool(0.45) {
                        edges.push((i, j));
                    }
                }
            }
            let pebble = generic_rigidity_2d(n, &edges);
            let rank = rigidity_matrix_rank(&p, &edges);
            assert_eq!(
                pebble,
                rank == 2 * n - 3,
                "n={n} edges={} rank={rank}",
                edges.len()
            );
        }
    }

    fn rigidity_matrix_rank(p: &PointCloud, edges: &[(usize, usize)]) -> usize {
        let n = p.len();
        let mut rows = Vec::new();
        for &(a, b) in edges {
            let mut row = vec![0.0; 2 * n];
            let pa = p.point(a);
            let pb = p.point(b);
            row[2 * a] = pa[0] - pb[0];
            row[2 * a + 1] = pa[1] - pb[1];
            row[2 * b] = pb[0] - pa[0];
            row[2 * b + 1] = pb[1] - pa[1];
            rows.push(row);
        }
        let m = Matrix::from_rows(&rows).unwrap();
        matrix::rank(&m, 1e-9)
    }

    #[test]
    fn builder_validates_arguments() {
        let mut rng = ChaCha8Rng::seed_from_u64(49);
        let p = uniform_disk(20, &mut rng);
        let d = squared_distance_matrix(&p);
        assert!(build_anchor_graph(&d, &d, 2, 3, Strategy::Nearest).is_err()); // rho < k+2
        assert!(build_anchor_graph(&d, &d, 2, 21, Strategy::Nearest).is_err()); // rho > n
        assert!(build_anchor_graph(&d, &d, 3, 6, Strategy::Stable2d { delta: 0.1 }).is_err());
        let small = squared_distance_matrix(&uniform_disk(10, &mut rng));
        assert!(build_anchor_graph(&d, &small, 2, 6, Strategy::Nearest).is_err());
    }
}
