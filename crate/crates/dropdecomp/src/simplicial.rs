//! Finite simplicial complexes of dimension at most two with unit edges.
//!
//! Every complex carries a base geometry: the complex it was subdivided from,
//! with each simplex realized as a regular unit simplex. Points are stored as
//! barycentric vectors over base vertices, so subdivision never changes the
//! metric. Geodesic distances come from a refinement graph (`m` nodes per
//! base edge, all-pairs Dijkstra), refined until vertex distances settle.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WEIGHT_EPS: f64 = 1e-12;

/// A point of the base complex in barycentric coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    coords: Vec<(usize, f64)>,
}

impl Point {
    /// Normalizes, drops negligible weights and sorts by vertex.
    pub fn new(coords: Vec<(usize, f64)>) -> Result<Self> {
        let mut merged: Vec<(usize, f64)> = Vec::new();
        let mut sorted = coords;
        sorted.sort_by_key(|p| p.0);
        for (v, w) in sorted {
            if !w.is_finite() || w < -1e-9 {
                return Err(Error::Domain(format!("invalid barycentric weight {w}")));
            }
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += w,
                _ => merged.push((v, w)),
            }
        }
        let total: f64 = merged.iter().map(|p| p.1).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("barycentric weights sum to {total}")));
        }
        Ok(Self::normalized(merged))
    }

    fn normalized(coords: Vec<(usize, f64)>) -> Self {
        let mut kept: Vec<(usize, f64)> = coords.into_iter().filter(|p| p.1 > WEIGHT_EPS).collect();
        let total: f64 = kept.iter().map(|p| p.1).sum();
        for p in &mut kept {
            p.1 /= total;
        }
        Self { coords: kept }
    }

    pub fn vertex(v: usize) -> Self {
        Self { coords: vec![(v, 1.0)] }
    }

    pub fn coords(&self) -> &[(usize, f64)] {
        &self.coords
    }

    /// Vertices with positive weight, sorted.
    pub fn carrier(&self) -> Vec<usize> {
        self.coords.iter().map(|p| p.0).collect()
    }

    pub fn weight(&self, v: usize) -> f64 {
        self.coords.iter().find(|p| p.0 == v).map(|p| p.1).unwrap_or(0.0)
    }

    /// Affine combination `Σ c_i p_i`; coefficients should sum to one.
    pub fn affine(parts: &[(&Point, f64)]) -> Point {
        let mut acc: HashMap<usize, f64> = HashMap::new();
        for (p, c) in parts {
            for &(v, w) in &p.coords {
                *acc.entry(v).or_insert(0.0) += c * w;
            }
        }
        let mut coords: Vec<(usize, f64)> = acc.into_iter().collect();
        coords.sort_by_key(|p| p.0);
        Self::normalized(coords)
    }

    pub fn lerp(a: &Point, b: &Point, s: f64) -> Point {
        Point::affine(&[(a, 1.0 - s), (b, s)])
    }

    /// Euclidean distance in a regular unit simplex containing both points.
    pub fn chart_distance(a: &Point, b: &Point) -> f64 {
        let (mut i, mut j) = (0, 0);
        let mut sum = 0.0;
        while i < a.coords.len() || j < b.coords.len() {
            let va = a.coords.get(i).map(|p| p.0).unwrap_or(usize::MAX);
            let vb = b.coords.get(j).map(|p| p.0).unwrap_or(usize::MAX);
            let d = match va.cmp(&vb) {
                Ordering::Less => {
                    i += 1;
                    a.coords[i - 1].1
                }
                Ordering::Greater => {
                    j += 1;
                    b.coords[j - 1].1
                }
                Ordering::Equal => {
                    i += 1;
                    j += 1;
                    a.coords[i - 1].1 - b.coords[j - 1].1
                }
            };
            sum += d * d;
        }
        (0.5 * sum).sqrt()
    }
}

fn union_carrier(a: &Point, b: &Point) -> Vec<usize> {
    let mut u = a.carrier();
    u.extend(b.carrier());
    u.sort_unstable();
    u.dedup();
    u
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

struct MetricCache {
    m: usize,
    nodes: Vec<Point>,
    /// Nodes on the closure of each maximal simplex.
    simplex_nodes: HashMap<Vec<usize>, Vec<usize>>,
    dist: Vec<f64>,
    pred: Vec<u32>,
}

impl MetricCache {
    fn build(geom: &Geometry, m: usize) -> Self {
        let mut nodes: Vec<Point> = (0..geom.n).map(Point::vertex).collect();
        let mut edge_nodes: HashMap<[usize; 2], Vec<usize>> = HashMap::new();
        for &[a, b] in &geom.edges {
            let mut ids = vec![a];
            for i in 1..m {
                let s = i as f64 / m as f64;
                ids.push(nodes.len());
                nodes.push(Point::normalized(vec![(a, 1.0 - s), (b, s)]));
            }
            ids.push(b);
            edge_nodes.insert([a, b], ids);
        }
        let mut simplex_nodes = HashMap::new();
        for s in &geom.maximal {
            let mut ids: Vec<usize> = s.clone();
            for i in 0..s.len() {
                for j in i + 1..s.len() {
                    ids.extend(&edge_nodes[&[s[i], s[j]]]);
                }
            }
            ids.sort_unstable();
            ids.dedup();
            simplex_nodes.insert(s.clone(), ids);
        }
        let n = nodes.len();
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for ids in simplex_nodes.values() {
            for (x, &i) in ids.iter().enumerate() {
                for &j in &ids[x + 1..] {
                    let d = Point::chart_distance(&nodes[i], &nodes[j]);
                    adj[i].push((j, d));
                    adj[j].push((i, d));
                }
            }
        }
        let mut dist = vec![f64::INFINITY; n * n];
        let mut pred = vec![u32::MAX; n * n];
        for s in 0..n {
            let row = &mut dist[s * n..(s + 1) * n];
            let prow = &mut pred[s * n..(s + 1) * n];
            row[s] = 0.0;
            let mut heap = BinaryHeap::new();
            heap.push(HeapItem(0.0, s));
            while let Some(HeapItem(d, u)) = heap.pop() {
                if d > row[u] {
                    continue;
                }
                for &(v, w) in &adj[u] {
                    let nd = d + w;
                    if nd < row[v] - 1e-15 {
                        row[v] = nd;
                        prow[v] = u as u32;
                        heap.push(HeapItem(nd, v));
                    }
                }
            }
        }
        Self {
            m,
            nodes,
            simplex_nodes,
            dist,
            pred,
        }
    }

    fn d(&self, a: usize, b: usize) -> f64 {
        self.dist[a * self.nodes.len() + b]
    }

    fn route(&self, a: usize, b: usize) -> Vec<usize> {
        let n = self.nodes.len();
        let mut out = vec![b];
        let mut cur = b;
        while cur != a {
            cur = self.pred[a * n + cur] as usize;
            out.push(cur);
        }
        out.reverse();
        out
    }
}

struct Geometry {
    n: usize,
    edges: Vec<[usize; 2]>,
    simplices: HashSet<Vec<usize>>,
    maximal: Vec<Vec<usize>>,
    component: Vec<usize>,
    cache: OnceLock<MetricCache>,
}

impl Geometry {
    fn new(n: usize, edges: &[[usize; 2]], triangles: &[[usize; 3]]) -> Self {
        let mut simplices: HashSet<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
        for e in edges {
            simplices.insert(e.to_vec());
        }
        for t in triangles {
            simplices.insert(t.to_vec());
        }
        let maximal = maximal_simplices(n, edges, triangles);
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut c = x;
            while p[c] != r {
                let nx = p[c];
                p[c] = r;
                c = nx;
            }
            r
        }
        for &[a, b] in edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra.max(rb)] = ra.min(rb);
        }
        let component = (0..n).map(|v| find(&mut parent, v)).collect();
        Self {
            n,
            edges: edges.to_vec(),
            simplices,
            maximal,
            component,
            cache: OnceLock::new(),
        }
    }

    fn cache(&self) -> &MetricCache {
        self.cache.get_or_init(|| {
            let mut cur = MetricCache::build(self, 4);
            while cur.m < 64 {
                let next = MetricCache::build(self, cur.m * 2);
                let mut change: f64 = 0.0;
                for a in 0..self.n {
                    for b in 0..self.n {
                        let (x, y) = (cur.d(a, b), next.d(a, b));
                        if x.is_finite() {
                            change = change.max((x - y).abs());
                        }
                    }
                }
                cur = next;
                if change < 1e-3 {
                    break;
                }
            }
            cur
        })
    }

    fn is_simplex(&self, s: &[usize]) -> bool {
        self.simplices.contains(s)
    }

    fn containing_maximal(&self, carrier: &[usize]) -> impl Iterator<Item = &Vec<usize>> + '_ {
        let c = carrier.to_vec();
        self.maximal.iter().filter(move |s| c.iter().all(|v| s.contains(v)))
    }

    fn distance(&self, x: &Point, y: &Point) -> f64 {
        let u = union_carrier(x, y);
        if self.is_simplex(&u) {
            return Point::chart_distance(x, y);
        }
        if self.component[x.coords[0].0] != self.component[y.coords[0].0] {
            return f64::INFINITY;
        }
        self.route(x, y).0
    }

    /// Best node route: length, entry node, exit node.
    fn route(&self, x: &Point, y: &Point) -> (f64, usize, usize) {
        let cache = self.cache();
        let near = |p: &Point| -> Vec<(usize, f64)> {
            let mut out: Vec<(usize, f64)> = Vec::new();
            for s in self.containing_maximal(&p.carrier()) {
                for &a in &cache.simplex_nodes[s] {
                    out.push((a, Point::chart_distance(p, &cache.nodes[a])));
                }
            }
            out.sort_by_key(|q| q.0);
            out.dedup_by_key(|q| q.0);
            out
        };
        let nx = near(x);
        let ny = near(y);
        let mut best = (f64::INFINITY, usize::MAX, usize::MAX);
        for &(a, da) in &nx {
            for &(b, db) in &ny {
                let total = da + cache.d(a, b) + db;
                if total < best.0 {
                    best = (total, a, b);
                }
            }
        }
        best
    }
}

fn maximal_simplices(n: usize, edges: &[[usize; 2]], triangles: &[[usize; 3]]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = triangles.iter().map(|t| t.to_vec()).collect();
    let in_tri: HashSet<[usize; 2]> = triangles
        .iter()
        .flat_map(|t| [[t[0], t[1]], [t[0], t[2]], [t[1], t[2]]])
        .collect();
    let mut used = vec![false; n];
    for t in triangles {
        for &v in t {
            used[v] = true;
        }
    }
    for e in edges {
        used[e[0]] = true;
        used[e[1]] = true;
        if !in_tri.contains(e) {
            out.push(e.to_vec());
        }
    }
    for (v, u) in used.iter().enumerate() {
        if !u {
            out.push(vec![v]);
        }
    }
    out
}

fn sorted2(a: usize, b: usize) -> [usize; 2] {
    [a.min(b), a.max(b)]
}

fn sorted3(a: usize, b: usize, c: usize) -> [usize; 3] {
    let mut t = [a, b, c];
    t.sort_unstable();
    t
}

/// Piecewise linear path: consecutive points share a closed simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PLPath {
    pub breakpoints: Vec<f64>,
    pub points: Vec<Point>,
}

impl PLPath {
    pub fn constant(p: Point) -> Self {
        Self {
            breakpoints: vec![0.0, 1.0],
            points: vec![p.clone(), p],
        }
    }

    pub fn at(&self, s: f64) -> Point {
        let s = s.clamp(0.0, 1.0);
        let i = self
            .breakpoints
            .windows(2)
            .position(|w| s <= w[1])
            .unwrap_or(self.breakpoints.len() - 2);
        let (a, b) = (self.breakpoints[i], self.breakpoints[i + 1]);
        let local = if b > a { (s - a) / (b - a) } else { 0.0 };
        Point::lerp(&self.points[i], &self.points[i + 1], local)
    }

    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| Point::chart_distance(&w[0], &w[1])).sum()
    }
}

/// A simplicial complex of dimension at most two over a base geometry.
#[derive(Clone)]
pub struct SimplicialComplex2 {
    geom: Arc<Geometry>,
    positions: Vec<Point>,
    edges: Vec<[usize; 2]>,
    triangles: Vec<[usize; 3]>,
    simplices: HashSet<Vec<usize>>,
}

impl std::fmt::Debug for SimplicialComplex2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SimplicialComplex2")
            .field("vertices", &self.positions.len())
            .field("edges", &self.edges.len())
            .field("triangles", &self.triangles.len())
            .finish()
    }
}

#[derive(Serialize, Deserialize)]
struct ComplexJson {
    vertices: usize,
    edges: Vec<[usize; 2]>,
    triangles: Vec<[usize; 3]>,
}

impl SimplicialComplex2 {
    /// A base complex; faces of listed triangles are added.
    pub fn new(vertices: usize, edges: &[[usize; 2]], triangles: &[[usize; 3]]) -> Result<Self> {
        let mut es: Vec<[usize; 2]> = Vec::new();
        let mut ts: Vec<[usize; 3]> = Vec::new();
        for t in triangles {
            let t = sorted3(t[0], t[1], t[2]);
            if t[0] == t[1] || t[1] == t[2] || t[2] >= vertices {
                return Err(Error::Malformed(format!("bad triangle {t:?}")));
            }
            ts.push(t);
            es.extend([[t[0], t[1]], [t[0], t[2]], [t[1], t[2]]]);
        }
        for e in edges {
            let e = sorted2(e[0], e[1]);
            if e[0] == e[1] || e[1] >= vertices {
                return Err(Error::Malformed(format!("bad edge {e:?}")));
            }
            es.push(e);
        }
        es.sort_unstable();
        es.dedup();
        ts.sort_unstable();
        ts.dedup();
        let geom = Arc::new(Geometry::new(vertices, &es, &ts));
        let positions = (0..vertices).map(Point::vertex).collect();
        Ok(Self::assemble(geom, positions, es, ts))
    }

    fn assemble(geom: Arc<Geometry>, positions: Vec<Point>, edges: Vec<[usize; 2]>, triangles: Vec<[usize; 3]>) -> Self {
        let mut simplices: HashSet<Vec<usize>> = (0..positions.len()).map(|v| vec![v]).collect();
        simplices.extend(edges.iter().map(|e| e.to_vec()));
        simplices.extend(triangles.iter().map(|t| t.to_vec()));
        Self {
            geom,
            positions,
            edges,
            triangles,
            simplices,
        }
    }

    /// Plain-text form: a `vertices N` line, then `e a b` and `t a b c` lines.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut n = None;
        let mut edges = Vec::new();
        let mut tris = Vec::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let nums: std::result::Result<Vec<usize>, _> = parts[1..].iter().map(|s| s.parse::<usize>()).collect();
            let nums = nums.map_err(|e| Error::Schema(format!("{line}: {e}")))?;
            match (parts[0], nums.as_slice()) {
                ("vertices", [v]) => n = Some(*v),
                ("e", [a, b]) => edges.push([*a, *b]),
                ("t", [a, b, c]) => tris.push([*a, *b, *c]),
                _ => return Err(Error::Schema(format!("unrecognized line: {line}"))),
            }
        }
        let n = n.ok_or_else(|| Error::Schema("missing vertices line".into()))?;
        Self::new(n, &edges, &tris)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(ComplexJson {
            vertices: self.positions.len(),
            edges: self.edges.clone(),
            triangles: self.triangles.clone(),
        })
        .expect("serializable")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let raw: ComplexJson = serde_json::from_value(v.clone()).map_err(|e| Error::Schema(e.to_string()))?;
        Self::new(raw.vertices, &raw.edges, &raw.triangles)
    }

    /// One unit edge.
    pub fn interval() -> Self {
        Self::new(2, &[[0, 1]], &[]).expect("valid")
    }

    /// One triangle.
    pub fn triangle() -> Self {
        Self::new(3, &[], &[[0, 1, 2]]).expect("valid")
    }

    /// Hexagonal disk: a center vertex `0` and six boundary vertices.
    pub fn hexagon_disk() -> Self {
        let tris: Vec<[usize; 3]> = (0..6).map(|i| [0, 1 + i, 1 + (i + 1) % 6]).collect();
        Self::new(7, &[], &tris).expect("valid")
    }

    /// Path graph on `n` vertices.
    pub fn path_graph(n: usize) -> Self {
        let edges: Vec<[usize; 2]> = (1..n).map(|i| [i - 1, i]).collect();
        Self::new(n, &edges, &[]).expect("valid")
    }

    pub fn num_vertices(&self) -> usize {
        self.positions.len()
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Position of a vertex in the base geometry.
    pub fn position(&self, v: usize) -> &Point {
        &self.positions[v]
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn contains_simplex(&self, s: &[usize]) -> bool {
        let mut s = s.to_vec();
        s.sort_unstable();
        self.simplices.contains(&s)
    }

    /// Whether `p` lies on the base geometry.
    pub fn contains_point(&self, p: &Point) -> bool {
        !p.coords.is_empty() && p.coords.iter().all(|c| c.0 < self.geom.n) && self.geom.is_simplex(&p.carrier())
    }

    pub fn is_connected(&self) -> bool {
        let n = self.num_vertices();
        if n == 0 {
            return false;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut adj = vec![Vec::new(); n];
        for &[a, b] in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.iter().all(|&s| s)
    }

    /// Geodesic distance; infinite across components.
    pub fn path_distance(&self, x: &Point, y: &Point) -> f64 {
        self.geom.distance(x, y)
    }

    /// Refinement level used by the geodesic graph.
    pub fn metric_resolution(&self) -> usize {
        self.geom.cache().m
    }

    /// A shortest piecewise linear path from `x` to `y`, parametrized by
    /// arclength.
    pub fn shortest_path(&self, x: &Point, y: &Point) -> Result<PLPath> {
        let mut pts = vec![x.clone()];
        if !self.geom.is_simplex(&union_carrier(x, y)) {
            let (len, a, b) = self.geom.route(x, y);
            if !len.is_finite() {
                return Err(Error::Disconnected("no path between the points".into()));
            }
            let cache = self.geom.cache();
            for id in cache.route(a, b) {
                pts.push(cache.nodes[id].clone());
            }
        }
        pts.push(y.clone());
        pts.dedup_by(|p, q| Point::chart_distance(p, q) < 1e-15);
        if pts.len() == 1 {
            return Ok(PLPath::constant(x.clone()));
        }
        let lens: Vec<f64> = pts.windows(2).map(|w| Point::chart_distance(&w[0], &w[1])).collect();
        let total: f64 = lens.iter().sum();
        let mut acc = 0.0;
        let mut bps = vec![0.0];
        for l in &lens {
            acc += l;
            bps.push(acc / total);
        }
        *bps.last_mut().unwrap() = 1.0;
        Ok(PLPath {
            breakpoints: bps,
            points: pts,
        })
    }

    /// Barycenter of a simplex given by vertex ids.
    pub fn barycenter(&self, simplex: &[usize]) -> Point {
        let w = 1.0 / simplex.len() as f64;
        let parts: Vec<(&Point, f64)> = simplex.iter().map(|&v| (&self.positions[v], w)).collect();
        Point::affine(&parts)
    }

    fn maximal(&self) -> Vec<Vec<usize>> {
        maximal_simplices(self.num_vertices(), &self.edges, &self.triangles)
    }

    /// Vertices of the closure of `Star(Δ)`: all simplices meeting `Δ`.
    pub fn star_vertices(&self, simplex: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for s in self.maximal() {
            if s.iter().any(|v| simplex.contains(v)) {
                out.extend(s);
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Diameter of `Star(Δ)`, measured over its vertices.
    pub fn star_diameter(&self, simplex: &[usize]) -> f64 {
        let vs = self.star_vertices(simplex);
        let mut d: f64 = 0.0;
        for (i, &a) in vs.iter().enumerate() {
            for &b in &vs[i + 1..] {
                d = d.max(self.path_distance(&self.positions[a], &self.positions[b]));
            }
        }
        d
    }

    /// Largest `Star(Δ)` diameter over all simplices.
    pub fn max_star_diameter(&self) -> f64 {
        self.maximal().iter().map(|s| self.star_diameter(s)).fold(0.0, f64::max)
    }

    /// Largest diameter of a single simplex.
    pub fn mesh_size(&self) -> f64 {
        let mut d: f64 = 0.0;
        for &[a, b] in &self.edges {
            d = d.max(Point::chart_distance(&self.positions[a], &self.positions[b]));
        }
        d
    }

    /// One barycentric subdivision; old vertices keep their ids.
    pub fn barycentric_subdivision(&self) -> Self {
        let mut positions = self.positions.clone();
        let mut edge_mid: HashMap<[usize; 2], usize> = HashMap::new();
        let mut edges: Vec<[usize; 2]> = Vec::new();
        for &e in &self.edges {
            let id = positions.len();
            positions.push(Point::lerp(&self.positions[e[0]], &self.positions[e[1]], 0.5));
            edge_mid.insert(e, id);
            edges.push(sorted2(e[0], id));
            edges.push(sorted2(e[1], id));
        }
        let mut triangles = Vec::new();
        for t in &self.triangles {
            let id = positions.len();
            positions.push(self.barycenter(t));
            for &v in t {
                edges.push(sorted2(v, id));
            }
            for (i, j) in [(0, 1), (0, 2), (1, 2)] {
                let m = edge_mid[&[t[i], t[j]]];
                edges.push(sorted2(m, id));
                triangles.push(sorted3(t[i], m, id));
                triangles.push(sorted3(t[j], m, id));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        triangles.sort_unstable();
        Self::assemble(self.geom.clone(), positions, edges, triangles)
    }

    /// Iterated barycentric subdivision until every star has diameter at
    /// most `bound`. Fails once the triangle count would exceed `max_simplices`.
    pub fn subdivide_until(&self, bound: f64, max_simplices: usize) -> Result<Self> {
        if !(bound > 0.0) {
            return Err(Error::Domain("bound must be positive".into()));
        }
        let mut cur = self.clone();
        loop {
            if cur.max_star_diameter() <= bound + 1e-12 {
                return Ok(cur);
            }
            if (cur.triangles.len() * 6).max(cur.edges.len() * 2) > max_simplices {
                return Err(Error::Resource(format!(
                    "star bound {bound} needs more than {max_simplices} simplices"
                )));
            }
            cur = cur.barycentric_subdivision();
        }
    }

    /// Iterated barycentric subdivision until every simplex has diameter at
    /// most `bound`.
    pub fn subdivide_mesh(&self, bound: f64, max_simplices: usize) -> Result<Self> {
        let mut cur = self.clone();
        while cur.mesh_size() > bound {
            if (cur.triangles.len() * 6).max(cur.edges.len() * 2) > max_simplices {
                return Err(Error::Resource(format!("mesh bound {bound} needs more than {max_simplices} simplices")));
            }
            cur = cur.barycentric_subdivision();
        }
        Ok(cur)
    }

    /// Edge-midpoint subdivision: each edge splits in two, each triangle in
    /// four. Old vertices keep their ids.
    pub fn midpoint_subdivision(&self) -> Self {
        let mut positions = self.positions.clone();
        let mut edge_mid: HashMap<[usize; 2], usize> = HashMap::new();
        let mut edges: Vec<[usize; 2]> = Vec::new();
        for &e in &self.edges {
            let id = positions.len();
            positions.push(Point::lerp(&self.positions[e[0]], &self.positions[e[1]], 0.5));
            edge_mid.insert(e, id);
            edges.push(sorted2(e[0], id));
            edges.push(sorted2(e[1], id));
        }
        let mut triangles = Vec::new();
        for t in &self.triangles {
            let (m01, m02, m12) = (edge_mid[&[t[0], t[1]]], edge_mid[&[t[0], t[2]]], edge_mid[&[t[1], t[2]]]);
            edges.extend([sorted2(m01, m02), sorted2(m01, m12), sorted2(m02, m12)]);
            triangles.push(sorted3(t[0], m01, m02));
            triangles.push(sorted3(t[1], m01, m12));
            triangles.push(sorted3(t[2], m02, m12));
            triangles.push(sorted3(m01, m02, m12));
        }
        edges.sort_unstable();
        edges.dedup();
        triangles.sort_unstable();
        Self::assemble(self.geom.clone(), positions, edges, triangles)
    }

    /// Iterated midpoint subdivision until every simplex has diameter at most
    /// `bound`.
    pub fn refine_mesh(&self, bound: f64, max_simplices: usize) -> Result<Self> {
        if !(bound > 0.0) {
            return Err(Error::Domain("bound must be positive".into()));
        }
        let mut cur = self.clone();
        while cur.mesh_size() > bound + 1e-12 {
            if (cur.triangles.len() * 4).max(cur.edges.len() * 2) > max_simplices {
                return Err(Error::Resource(format!("mesh bound {bound} needs more than {max_simplices} simplices")));
            }
            cur = cur.midpoint_subdivision();
        }
        Ok(cur)
    }

    /// Barycentric coordinates of `p` in the simplex `s` of this complex, if
    /// `p` lies in its closure.
    pub fn local_coordinates(&self, s: &[usize], p: &Point) -> Option<Vec<f64>> {
        let mut base: Vec<usize> = s.iter().flat_map(|&v| self.positions[v].carrier()).collect();
        base.sort_unstable();
        base.dedup();
        if p.carrier().iter().any(|v| !base.contains(v)) {
            return None;
        }
        let rows = base.len() + 1;
        let a = DMatrix::from_fn(rows, s.len(), |i, j| {
            if i == base.len() {
                1.0
            } else {
                self.positions[s[j]].weight(base[i])
            }
        });
        let b = DVector::from_fn(rows, |i, _| if i == base.len() { 1.0 } else { p.weight(base[i]) });
        let ata = a.transpose() * &a;
        let lam = ata.lu().solve(&(a.transpose() * &b))?;
        let resid = (&a * &lam - &b).norm();
        if resid > 1e-9 || lam.iter().any(|&x| x < -1e-10) {
            return None;
        }
        Some(lam.iter().map(|&x| x.max(0.0)).collect())
    }

    /// Smallest simplex of this complex whose closure holds `p`, together with
    /// the barycentric coordinates there.
    pub fn locate(&self, p: &Point) -> Option<(Vec<usize>, Vec<f64>)> {
        let mut found: Option<(Vec<usize>, Vec<f64>)> = None;
        for s in self.maximal() {
            if let Some(l) = self.local_coordinates(&s, p) {
                found = Some((s, l));
                break;
            }
        }
        let (s, l) = found?;
        let keep: Vec<usize> = (0..s.len()).filter(|&i| l[i] > 1e-10).collect();
        let sum: f64 = keep.iter().map(|&i| l[i]).sum();
        Some((keep.iter().map(|&i| s[i]).collect(), keep.iter().map(|&i| l[i] / sum).collect()))
    }

    /// Insert `p` as a vertex by stellar subdivision of the simplex holding it.
    /// Returns the new complex and the vertex id.
    pub fn insert_vertex(&self, p: &Point) -> Result<(Self, usize)> {
        let (s, _) = self
            .locate(p)
            .ok_or_else(|| Error::Domain("point is not on the complex".into()))?;
        if s.len() == 1 {
            return Ok((self.clone(), s[0]));
        }
        let id = self.positions.len();
        let mut positions = self.positions.clone();
        positions.push(p.clone());
        let mut edges: Vec<[usize; 2]> = Vec::new();
        let mut triangles: Vec<[usize; 3]> = Vec::new();
        if s.len() == 2 {
            let e = sorted2(s[0], s[1]);
            for &f in &self.edges {
                if f != e {
                    edges.push(f);
                }
            }
            edges.push(sorted2(e[0], id));
            edges.push(sorted2(e[1], id));
            for t in &self.triangles {
                if t.contains(&e[0]) && t.contains(&e[1]) {
                    let w = *t.iter().find(|v| !e.contains(v)).unwrap();
                    edges.push(sorted2(w, id));
                    triangles.push(sorted3(e[0], w, id));
                    triangles.push(sorted3(e[1], w, id));
                } else {
                    triangles.push(*t);
                }
            }
        } else {
            let t0 = sorted3(s[0], s[1], s[2]);
            edges.extend(self.edges.iter().cloned());
            for &v in &t0 {
                edges.push(sorted2(v, id));
            }
            for t in &self.triangles {
                if *t == t0 {
                    triangles.push(sorted3(t0[0], t0[1], id));
                    triangles.push(sorted3(t0[0], t0[2], id));
                    triangles.push(sorted3(t0[1], t0[2], id));
                } else {
                    triangles.push(*t);
                }
            }
        }
        edges.sort_unstable();
        edges.dedup();
        triangles.sort_unstable();
        Ok((Self::assemble(self.geom.clone(), positions, edges, triangles), id))
    }

    /// The 1-skeleton over the same geometry.
    pub fn one_skeleton(&self) -> Self {
        Self::assemble(self.geom.clone(), self.positions.clone(), self.edges.clone(), Vec::new())
    }

    /// Sub-complex spanned by the given simplices; it must be closed under
    /// faces and contained in this complex.
    pub fn subcomplex(&self, vertices: &[usize], edges: &[[usize; 2]], triangles: &[[usize; 3]]) -> Result<SubComplex> {
        let vs: HashSet<usize> = vertices.iter().cloned().collect();
        for e in edges {
            let e = sorted2(e[0], e[1]);
            if !self.simplices.contains(&e.to_vec()) {
                return Err(Error::Structure(format!("edge {e:?} is not in the complex")));
            }
            if !vs.contains(&e[0]) || !vs.contains(&e[1]) {
                return Err(Error::Structure(format!("edge {e:?} has a vertex outside the sub-complex")));
            }
        }
        let es: HashSet<[usize; 2]> = edges.iter().map(|e| sorted2(e[0], e[1])).collect();
        for t in triangles {
            let t = sorted3(t[0], t[1], t[2]);
            if !self.simplices.contains(&t.to_vec()) {
                return Err(Error::Structure(format!("triangle {t:?} is not in the complex")));
            }
            for f in [[t[0], t[1]], [t[0], t[2]], [t[1], t[2]]] {
                if !es.contains(&f) {
                    return Err(Error::Structure(format!("face {f:?} of {t:?} missing")));
                }
            }
        }
        if vertices.iter().any(|&v| v >= self.num_vertices()) {
            return Err(Error::Structure("vertex out of range".into()));
        }
        let mut vlist: Vec<usize> = vs.into_iter().collect();
        vlist.sort_unstable();
        let mut elist: Vec<[usize; 2]> = es.into_iter().collect();
        elist.sort_unstable();
        let mut tlist: Vec<[usize; 3]> = triangles.iter().map(|t| sorted3(t[0], t[1], t[2])).collect();
        tlist.sort_unstable();
        let sub = SubComplex {
            vertices: vlist,
            edges: elist,
            triangles: tlist,
        };
        if !sub.is_connected() {
            return Err(Error::Structure("sub-complex is not connected".into()));
        }
        Ok(sub)
    }

    /// Whether `p` lies in the closure of a simplex of the sub-complex.
    pub fn point_in_subcomplex(&self, sub: &SubComplex, p: &Point) -> bool {
        let mut cands: Vec<Vec<usize>> = sub.triangles.iter().map(|t| t.to_vec()).collect();
        cands.extend(sub.edges.iter().map(|e| e.to_vec()));
        cands.extend(sub.vertices.iter().map(|&v| vec![v]));
        cands.iter().any(|s| self.local_coordinates(s, p).is_some())
    }

    /// Uniform sample of points: vertices, `per_edge - 1` interior points per
    /// edge and a triangular grid of the same resolution in each triangle.
    pub fn sample_points(&self, per_edge: usize) -> Vec<Point> {
        let m = per_edge.max(1);
        let mut out: Vec<Point> = self.positions.clone();
        for &[a, b] in &self.edges {
            for i in 1..m {
                out.push(Point::lerp(&self.positions[a], &self.positions[b], i as f64 / m as f64));
            }
        }
        for t in &self.triangles {
            for i in 1..m {
                for j in 1..m - i {
                    let (x, y) = (i as f64 / m as f64, j as f64 / m as f64);
                    out.push(Point::affine(&[
                        (&self.positions[t[0]], 1.0 - x - y),
                        (&self.positions[t[1]], x),
                        (&self.positions[t[2]], y),
                    ]));
                }
            }
        }
        out
    }
}

/// A sub-complex given by vertex ids of its parent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubComplex {
    pub vertices: Vec<usize>,
    pub edges: Vec<[usize; 2]>,
    pub triangles: Vec<[usize; 3]>,
}

impl SubComplex {
    pub fn is_connected(&self) -> bool {
        if self.vertices.is_empty() {
            return false;
        }
        let mut seen: HashSet<usize> = HashSet::new();
        let mut stack = vec![self.vertices[0]];
        seen.insert(self.vertices[0]);
        while let Some(v) = stack.pop() {
            for e in &self.edges {
                let w = if e[0] == v {
                    e[1]
                } else if e[1] == v {
                    e[0]
                } else {
                    continue;
                };
                if seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        seen.len() == self.vertices.len()
    }
}

/// Radial retraction of punctured triangles onto the 1-skeleton.
#[derive(Debug, Clone)]
pub struct Retraction {
    pub complex: SimplicialComplex2,
    /// Puncture of each triangle, in the order of `complex.triangles()`.
    pub punctures: Vec<Point>,
}

/// Build the retraction after checking that every puncture is strictly
/// interior to its triangle.
pub fn retract_to_skeleton(complex: &SimplicialComplex2, punctures: Vec<Point>) -> Result<Retraction> {
    if punctures.len() != complex.triangles.len() {
        return Err(Error::InvalidPuncture(format!(
            "{} punctures for {} triangles",
            punctures.len(),
            complex.triangles.len()
        )));
    }
    for (t, p) in complex.triangles.iter().zip(&punctures) {
        match complex.local_coordinates(t, p) {
            Some(l) if l.iter().all(|&x| x > 1e-9) => {}
            _ => {
                return Err(Error::InvalidPuncture(format!(
                    "puncture of {t:?} is not interior"
                )))
            }
        }
    }
    Ok(Retraction {
        complex: complex.clone(),
        punctures,
    })
}

impl Retraction {
    /// Image of `p`; points on the 1-skeleton are fixed.
    pub fn apply(&self, p: &Point) -> Result<Point> {
        let (s, _) = self
            .complex
            .locate(p)
            .ok_or_else(|| Error::Domain("point is not on the complex".into()))?;
        if s.len() < 3 {
            return Ok(p.clone());
        }
        let t = sorted3(s[0], s[1], s[2]);
        let idx = self
            .complex
            .triangles
            .iter()
            .position(|x| *x == t)
            .expect("located triangle exists");
        let lp = self.complex.local_coordinates(&t, p).expect("inside");
        self.retract_in(idx, &lp)
    }

    /// Image of the point with barycentric coordinates `lp` in triangle `idx`.
    fn retract_in(&self, idx: usize, lp: &[f64]) -> Result<Point> {
        let t = self.complex.triangles[idx];
        let lc = self.complex.local_coordinates(&t, &self.punctures[idx]).expect("inside");
        let dir: Vec<f64> = (0..3).map(|i| lp[i] - lc[i]).collect();
        if dir.iter().map(|d| d.abs()).fold(0.0, f64::max) < 1e-14 {
            return Err(Error::InvalidPuncture("cannot retract the puncture itself".into()));
        }
        let mut s_hit = f64::INFINITY;
        for i in 0..3 {
            if dir[i] < 0.0 {
                s_hit = s_hit.min(lc[i] / -dir[i]);
            }
        }
        let lam: Vec<f64> = (0..3).map(|i| (lc[i] + s_hit * dir[i]).max(0.0)).collect();
        let parts: Vec<(&Point, f64)> = (0..3).map(|i| (&self.complex.positions[t[i]], lam[i])).collect();
        Ok(Point::affine(&parts))
    }

    /// Sampled table of `(x, α(x))` over a grid, skipping points within
    /// `radius` (chart distance) of a puncture.
    pub fn sample(&self, per_edge: usize, radius: f64) -> Result<Vec<(Point, Point)>> {
        let x = &self.complex;
        let m = per_edge.max(1);
        let mut table: Vec<(Point, Option<(usize, [f64; 3])>)> =
            x.positions.iter().map(|p| (p.clone(), None)).collect();
        for &[a, b] in &x.edges {
            for i in 1..m {
                table.push((Point::lerp(&x.positions[a], &x.positions[b], i as f64 / m as f64), None));
            }
        }
        for (idx, t) in x.triangles.iter().enumerate() {
            for i in 1..m {
                for j in 1..m - i {
                    let (u, v) = (i as f64 / m as f64, j as f64 / m as f64);
                    let l = [1.0 - u - v, u, v];
                    let p = Point::affine(&[(&x.positions[t[0]], l[0]), (&x.positions[t[1]], l[1]), (&x.positions[t[2]], l[2])]);
                    table.push((p, Some((idx, l))));
                }
            }
        }
        let mut out = Vec::new();
        for (p, inside) in table {
            let near = |c: &Point| Point::chart_distance(c, &p) < radius && x.path_distance(c, &p) < radius;
            if self.punctures.iter().any(near) {
                continue;
            }
            let q = match inside {
                Some((idx, l)) => self.retract_in(idx, &l)?,
                None => p.clone(),
            };
            out.push((p, q));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_subdivision_halves_mesh() {
        let x = SimplicialComplex2::triangle();
        let y = x.midpoint_subdivision();
        assert_eq!(y.triangles().len(), 4);
        assert_eq!(y.edges().len(), 9);
        assert!((y.mesh_size() - 0.5).abs() < 1e-12);
        let z = x.refine_mesh(0.2, 10_000).unwrap();
        assert_eq!(z.triangles().len(), 64);
        assert!(z.is_connected());
    }

    /// Star diameter by sampling a fine grid in every simplex of the star.
    fn brute_star_diameter(x: &SimplicialComplex2, simplex: &[usize], res: usize) -> f64 {
        let mut pts = Vec::new();
        for s in x.maximal() {
            if !s.iter().any(|v| simplex.contains(v)) {
                continue;
            }
            match s.len() {
                1 => pts.push(x.position(s[0]).clone()),
                2 => {
                    for i in 0..=res {
                        pts.push(Point::lerp(x.position(s[0]), x.position(s[1]), i as f64 / res as f64));
                    }
                }
                _ => {
                    for i in 0..=res {
                        for j in 0..=res - i {
                            let (a, b) = (i as f64 / res as f64, j as f64 / res as f64);
                            pts.push(Point::affine(&[
                                (x.position(s[0]), 1.0 - a - b),
                                (x.position(s[1]), a),
                                (x.position(s[2]), b),
                            ]));
                        }
                    }
                }
            }
        }
        let mut d: f64 = 0.0;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                d = d.max(x.path_distance(&pts[i], &pts[j]));
            }
        }
        d
    }

    #[test]
    fn distance_examples() {
        let e = SimplicialComplex2::interval();
        let (a, b) = (Point::vertex(0), Point::vertex(1));
        assert_eq!(e.path_distance(&a, &a), 0.0);
        assert!((e.path_distance(&a, &b) - 1.0).abs() < 1e-15);
        let p = SimplicialComplex2::path_graph(3);
        assert!((p.path_distance(&Point::vertex(0), &Point::vertex(2)) - 2.0).abs() < 1e-12);
        let split = SimplicialComplex2::new(4, &[[0, 1], [2, 3]], &[]).unwrap();
        assert!(split.path_distance(&Point::vertex(0), &Point::vertex(3)).is_infinite());
    }

    #[test]
    fn distance_across_adjacent_triangles() {
        // two unit triangles sharing edge {1,2}: vertices 0 and 3 sit at
        // distance sqrt(3) in the unfolded rhombus
        let x = SimplicialComplex2::new(4, &[], &[[0, 1, 2], [1, 2, 3]]).unwrap();
        let d = x.path_distance(&Point::vertex(0), &Point::vertex(3));
        assert!((d - 3f64.sqrt()).abs() < 1e-3, "{d}");
        let path = x.shortest_path(&Point::vertex(0), &Point::vertex(3)).unwrap();
        assert!((path.length() - d).abs() < 1e-12);
    }

    #[test]
    fn barycenters() {
        let t = SimplicialComplex2::triangle();
        let c = t.barycenter(&[0, 1, 2]);
        for v in 0..3 {
            assert!((c.weight(v) - 1.0 / 3.0).abs() < 1e-15);
        }
        let m = t.barycenter(&[0, 1]);
        assert_eq!(m.coords(), &[(0, 0.5), (1, 0.5)]);
        assert_eq!(t.barycenter(&[2]), Point::vertex(2));
    }

    #[test]
    fn edge_subdivision_reaches_star_bound() {
        let e = SimplicialComplex2::interval();
        let s = e.subdivide_until(0.6, 10_000).unwrap();
        // star of an edge of length 1/2^r spans three edges: 3/2^r <= 0.6
        assert_eq!(s.edges().len(), 8);
        let d = s.max_star_diameter();
        assert!((d - 0.375).abs() < 1e-12);
        let brute = s.maximal().iter().map(|m| brute_star_diameter(&s, m, 4)).fold(0.0, f64::max);
        assert!((brute - d).abs() < 1e-12);
        assert_eq!(s.position(0), &Point::vertex(0));
        assert_eq!(s.position(1), &Point::vertex(1));
    }

    #[test]
    fn conforming_complex_is_unchanged() {
        let t = SimplicialComplex2::triangle();
        let d = t.max_star_diameter();
        assert!((d - 1.0).abs() < 1e-12);
        let same = t.subdivide_until(1.0, 100).unwrap();
        assert_eq!(same.triangles(), t.triangles());
        let again = same.subdivide_until(1.0, 100).unwrap();
        assert_eq!(again.num_vertices(), same.num_vertices());
    }

    #[test]
    fn star_diameter_matches_brute_force_on_subdivided_triangle() {
        let t = SimplicialComplex2::triangle().barycentric_subdivision();
        for s in t.maximal() {
            let fast = t.star_diameter(&s);
            let brute = brute_star_diameter(&t, &s, 6);
            assert!((fast - brute).abs() < 2e-3, "{fast} vs {brute}");
        }
    }

    #[test]
    fn resource_cap() {
        let t = SimplicialComplex2::triangle();
        assert!(matches!(t.subdivide_until(1e-3, 500), Err(Error::Resource(_))));
    }

    #[test]
    fn retraction_examples() {
        let t = SimplicialComplex2::triangle();
        let c = t.barycenter(&[0, 1, 2]);
        let r = retract_to_skeleton(&t, vec![c.clone()]).unwrap();
        let on_edge = Point::new(vec![(0, 0.3), (1, 0.7)]).unwrap();
        assert_eq!(r.apply(&on_edge).unwrap(), on_edge);
        // the ray from the center toward vertex 0 exits at vertex 0
        let toward = Point::lerp(&c, &Point::vertex(0), 0.5);
        let img = r.apply(&toward).unwrap();
        assert!(Point::chart_distance(&img, &Point::vertex(0)) < 1e-12);
        // toward an edge midpoint it exits at that midpoint
        let mid = t.barycenter(&[1, 2]);
        let img = r.apply(&Point::lerp(&c, &mid, 0.2)).unwrap();
        assert!(Point::chart_distance(&img, &mid) < 1e-12);
        assert!(matches!(
            retract_to_skeleton(&t, vec![on_edge]),
            Err(Error::InvalidPuncture(_))
        ));
    }

    #[test]
    fn retraction_moves_points_less_than_the_mesh() {
        let t = SimplicialComplex2::triangle().barycentric_subdivision().barycentric_subdivision();
        let punct: Vec<Point> = t.triangles().iter().map(|tr| t.barycenter(tr)).collect();
        let r = retract_to_skeleton(&t, punct).unwrap();
        let mesh = t.mesh_size();
        for (x, y) in r.sample(6, 1e-3).unwrap() {
            assert!(t.path_distance(&x, &y) <= mesh + 1e-12);
            assert_eq!(r.apply(&y).unwrap(), y);
        }
    }

    #[test]
    fn stellar_insertion_makes_a_vertex() {
        let t = SimplicialComplex2::triangle();
        let p = Point::new(vec![(0, 0.2), (1, 0.3), (2, 0.5)]).unwrap();
        let (x, id) = t.insert_vertex(&p).unwrap();
        assert_eq!(x.triangles().len(), 3);
        assert_eq!(x.position(id), &p);
        let q = Point::new(vec![(0, 0.4), (1, 0.6)]).unwrap();
        let (y, _) = x.insert_vertex(&q).unwrap();
        assert_eq!(y.triangles().len(), 4);
        assert_eq!(y.edges().len(), 8);
    }

    #[test]
    fn subcomplex_checks() {
        let t = SimplicialComplex2::triangle();
        assert!(t.subcomplex(&[0, 1], &[[0, 1]], &[]).is_ok());
        assert!(matches!(t.subcomplex(&[0, 2], &[], &[]), Err(Error::Structure(_))));
        assert!(matches!(t.subcomplex(&[0, 1, 2], &[[0, 1]], &[[0, 1, 2]]), Err(Error::Structure(_))));
    }

    #[test]
    fn text_import() {
        let x = SimplicialComplex2::from_text("vertices 4\n t 0 1 2\n e 2 3 # tail\n").unwrap();
        assert_eq!(x.edges().len(), 4);
        assert_eq!(x.triangles().len(), 1);
        assert!(x.is_connected());
    }
}
