use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{c, exp_skew, hermitian_eig, identity, kron, select_columns, CMat};
use crate::simplicial::{PLPath, Point, SimplicialComplex2};

use super::{
    aligned_frame, choose_steps, coordinate_functions, equal_groups, frame_log, hom_distance, hom_pairing, min_gap,
    oscillation, spectral_pairing, tensor_defect, SpaceFiber, SpaceFunction, SpaceHom,
};

/// Output of [`make_distinct_spectrum`]; measurements are taken on `samples`.
#[derive(Debug, Clone)]
pub struct DistinctResult {
    pub psi: SpaceHom,
    pub unchanged: bool,
    pub mesh: Vec<f64>,
    pub samples: Vec<f64>,
    /// Smallest pairwise distance of interior spectral points.
    pub min_gap: f64,
    pub error: f64,
    pub pairing: f64,
    pub spread_radius: f64,
}

/// Output of [`extend_endpoints_distinct`].
#[derive(Debug, Clone)]
pub struct EndpointExtension {
    pub psi: SpaceHom,
    pub delta: f64,
    /// Largest distance an endpoint spectral point was moved.
    pub displacement: f64,
    /// Smallest and largest multiplicity among endpoint spectral points.
    pub multiplicity: (usize, usize),
    pub endpoint_defect: f64,
}

enum Motion {
    /// Frame geodesic, points fixed.
    Rotate { u: CMat, log: CMat, points: Vec<Point> },
    /// Frame fixed, point `j` at `paths[j].at(time(j, s))`.
    Move { frame: CMat, paths: Vec<PLPath>, timing: Timing },
}

enum Timing {
    Power(Vec<f64>),
    ReversePower(Vec<f64>),
    /// Point `order[q]` moves during the `q`-th of `order.len()` sub-windows.
    Sequential(Vec<usize>),
}

impl Timing {
    fn at(&self, j: usize, s: f64) -> f64 {
        match self {
            Timing::Power(p) => s.powf(p[j]),
            Timing::ReversePower(p) => 1.0 - (1.0 - s).powf(p[j]),
            Timing::Sequential(order) => match order.iter().position(|&x| x == j) {
                None => 0.0,
                Some(q) => (s * order.len() as f64 - q as f64).clamp(0.0, 1.0),
            },
        }
    }
}

struct Half {
    t0: f64,
    t1: f64,
    motion: Motion,
}

impl Half {
    fn fiber(&self, t: f64) -> SpaceFiber {
        let s = ((t - self.t0) / (self.t1 - self.t0)).clamp(0.0, 1.0);
        match &self.motion {
            Motion::Rotate { u, log, points } => SpaceFiber {
                frame: u * exp_skew(&(log * c(s))),
                points: points.clone(),
            },
            Motion::Move { frame, paths, timing } => SpaceFiber {
                frame: frame.clone(),
                points: paths.iter().enumerate().map(|(j, p)| p.at(timing.at(j, s))).collect(),
            },
        }
    }
}

/// Move coincident points apart along edges (or into the star when
/// `graph_only` is false). Each point moves at most `r`.
fn spread(x: &SimplicialComplex2, pts: &[Point], r: f64, graph_only: bool) -> Result<Vec<Point>> {
    let mut out = pts.to_vec();
    for group in equal_groups(pts) {
        if group.len() < 2 {
            continue;
        }
        let p = &pts[group[0]];
        let (s, _) = x
            .locate(p)
            .ok_or_else(|| Error::Domain("spectral point is not on the complex".into()))?;
        let targets: Vec<usize> = if s.len() == 1 {
            x.edges()
                .iter()
                .filter_map(|e| {
                    if e[0] == s[0] {
                        Some(e[1])
                    } else if e[1] == s[0] {
                        Some(e[0])
                    } else {
                        None
                    }
                })
                .collect()
        } else if graph_only {
            s.clone()
        } else {
            x.star_vertices(&s)
        };
        let targets: Vec<&Point> = targets.iter().map(|&v| x.position(v)).filter(|q| *q != p).collect();
        if targets.is_empty() {
            return Err(Error::Domain("an isolated point cannot be split".into()));
        }
        let n = group.len();
        for (q, &idx) in group.iter().enumerate().skip(1) {
            let target = targets[(q - 1) % targets.len()];
            let round = (q - 1) / targets.len() + 1;
            let dist = r * round as f64 / n as f64;
            let full = Point::chart_distance(p, target);
            let tau = (dist / full).min(0.5 * round as f64 / n as f64);
            out[idx] = Point::lerp(p, target, tau);
        }
    }
    Ok(out)
}

fn spread_checked(x: &SimplicialComplex2, pts: &[Point], r: f64, graph_only: bool) -> Result<Vec<Point>> {
    let mut radius = r;
    for _ in 0..40 {
        let out = spread(x, pts, radius, graph_only)?;
        if min_gap(x, &out) > 0.0 {
            return Ok(out);
        }
        radius *= 0.5;
    }
    Err(Error::Domain("could not separate coincident spectral points".into()))
}

/// Exponents making paths that leave a common point never meet: longer paths
/// get smaller exponents and so stay ahead.
fn exponents(starts: &[Point], paths: &[PLPath], stretch: f64) -> Vec<f64> {
    let mut p = vec![1.0; paths.len()];
    for group in equal_groups(starts) {
        let mut g = group.clone();
        g.sort_by(|&a, &b| paths[b].length().total_cmp(&paths[a].length()));
        for (rank, &j) in g.iter().enumerate() {
            p[j] = 1.0 + stretch * rank as f64;
        }
    }
    p
}

/// Exact distance from `p` to a PL path whose segments share a carrier
/// with `p`; `INFINITY` when none does.
fn path_clearance(path: &PLPath, p: &Point) -> f64 {
    let mut best = f64::INFINITY;
    for w in path.points.windows(2) {
        let mut base = w[0].carrier();
        base.extend(w[1].carrier());
        base.sort_unstable();
        base.dedup();
        if p.carrier().iter().any(|v| !base.contains(v)) {
            continue;
        }
        let co = |q: &Point| -> Vec<f64> { base.iter().map(|&v| q.weight(v)).collect() };
        let (a, b, x) = (co(&w[0]), co(&w[1]), co(p));
        let u: Vec<f64> = a.iter().zip(&b).map(|(s, t)| t - s).collect();
        let d: Vec<f64> = a.iter().zip(&x).map(|(s, t)| t - s).collect();
        let dot = |m: &[f64], n: &[f64]| 0.5 * m.iter().zip(n).map(|(s, t)| s * t).sum::<f64>();
        let uu = dot(&u, &u);
        let s = if uu > 0.0 { (dot(&d, &u) / uu).clamp(0.0, 1.0) } else { 0.0 };
        let r: Vec<f64> = d.iter().zip(&u).map(|(m, n)| m - s * n).collect();
        best = best.min(dot(&r, &r).sqrt());
    }
    best
}

/// Order in which points move one at a time, each path avoiding the
/// current positions of all others when possible.
fn sequential_order(starts: &[Point], targets: &[Point], paths: &[PLPath]) -> Vec<usize> {
    let mut pending: Vec<usize> = (0..paths.len()).filter(|&j| starts[j] != targets[j]).collect();
    let mut current = starts.to_vec();
    let mut order = Vec::new();
    while !pending.is_empty() {
        let clearance = |j: usize, cur: &[Point]| {
            (0..cur.len())
                .filter(|&i| i != j)
                .map(|i| path_clearance(&paths[j], &cur[i]))
                .fold(f64::INFINITY, f64::min)
        };
        let pos = pending
            .iter()
            .position(|&j| clearance(j, &current) > 0.0)
            .unwrap_or_else(|| {
                let mut best = 0;
                for q in 1..pending.len() {
                    if clearance(pending[q], &current) > clearance(pending[best], &current) {
                        best = q;
                    }
                }
                best
            });
        let j = pending.remove(pos);
        current[j] = targets[j].clone();
        order.push(j);
    }
    order
}

fn check_graph_support(phi: &SpaceHom, samples: &[f64]) -> Result<()> {
    if !phi.complex.triangles().is_empty() {
        return Err(Error::Domain("the domain must be a graph".into()));
    }
    for &t in samples {
        for p in phi.fiber(t).points {
            if phi.complex.locate(&p).is_none() {
                return Err(Error::Domain(format!("spectral point off the graph at t = {t}")));
            }
        }
    }
    Ok(())
}

fn interior_samples(mesh: &[f64], per_step: usize) -> Vec<f64> {
    let mut out = Vec::new();
    for w in mesh.windows(2) {
        for j in 0..per_step {
            out.push(w[0] + (w[1] - w[0]) * j as f64 / per_step as f64);
        }
    }
    out.push(1.0);
    out
}

fn interior_gap(x: &SimplicialComplex2, h: &SpaceHom, samples: &[f64]) -> f64 {
    samples
        .iter()
        .filter(|&&t| t > 0.0 && t < 1.0)
        .map(|&t| min_gap(x, &h.fiber(t).points))
        .fold(f64::INFINITY, f64::min)
}

/// Perturb `φ` over a graph so that interior fibers have pairwise distinct
/// spectral points, leaving the endpoint fibers untouched.
pub fn make_distinct_spectrum(phi: &SpaceHom, family: &[SpaceFunction], epsilon: f64, eta: f64) -> Result<DistinctResult> {
    if !(epsilon > 0.0 && eta > 0.0) {
        return Err(Error::Domain("epsilon and eta must be positive".into()));
    }
    let x = phi.complex.clone();
    let probe: Vec<f64> = interior_samples(&super::uniform_mesh(64), 1);
    check_graph_support(phi, &probe)?;

    let mesh = choose_steps(phi, family, eta / 4.0, epsilon / 6.0, 8, 1024)?;
    let samples = interior_samples(&mesh, 16);
    check_graph_support(phi, &samples)?;
    let gap = interior_gap(&x, phi, &samples).min(interior_gap(&x, phi, &probe));
    if gap > 0.0 {
        return Ok(DistinctResult {
            psi: phi.clone(),
            unchanged: true,
            mesh,
            samples,
            min_gap: gap,
            error: 0.0,
            pairing: 0.0,
            spread_radius: 0.0,
        });
    }

    let mut r = eta / 8.0;
    for _ in 0..20 {
        if oscillation(&x, family, r, 6) < epsilon / 6.0 {
            break;
        }
        r *= 0.5;
    }
    let m = mesh.len() - 1;
    let nodes: Vec<SpaceFiber> = mesh
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let fb = phi.fiber(t);
            if i == 0 || i == m {
                Ok(fb)
            } else {
                let points = spread_checked(&x, &fb.points, r, true)?;
                Ok(SpaceFiber { frame: fb.frame, points })
            }
        })
        .collect::<Result<_>>()?;

    let origins: Vec<Vec<Point>> = mesh.iter().map(|&t| phi.fiber(t).points).collect();
    let mut best: Option<(f64, Vec<Half>)> = None;
    for stretch in [0.5, 1.5, 0.2] {
        let halves = build_halves(&x, &mesh, &nodes, &origins, stretch)?;
        let h = halves_hom(phi, Arc::new(halves));
        let g = interior_gap(&x, &h, &samples);
        let better = best.as_ref().map(|b| g > b.0).unwrap_or(true);
        if better {
            best = Some((g, build_halves(&x, &mesh, &nodes, &origins, stretch)?));
        }
        if g > 0.0 {
            break;
        }
    }
    let (min_gap, halves) = best.expect("at least one attempt");
    let psi = halves_hom(phi, Arc::new(halves));
    let error = hom_distance(phi, &psi, family, &samples);
    let pairing = hom_pairing(phi, &psi, &samples)?;
    Ok(DistinctResult {
        psi,
        unchanged: false,
        mesh,
        samples,
        min_gap,
        error,
        pairing,
        spread_radius: r,
    })
}

fn halves_hom(phi: &SpaceHom, halves: Arc<Vec<Half>>) -> SpaceHom {
    let (f0, f1) = (phi.fiber(0.0), phi.fiber(1.0));
    SpaceHom::from_fn(phi.l, phi.k, phi.complex.clone(), move |t| {
        if t <= 0.0 {
            return f0.clone();
        }
        if t >= 1.0 {
            return f1.clone();
        }
        let i = halves.partition_point(|h| h.t1 < t).min(halves.len() - 1);
        halves[i].fiber(t)
    })
}

/// `origins[i]` holds the unspread points at `mesh[i]`; the frame gauge is
/// fixed on their groups of equal points.
fn build_halves(
    x: &SimplicialComplex2,
    mesh: &[f64],
    nodes: &[SpaceFiber],
    origins: &[Vec<Point>],
    stretch: f64,
) -> Result<Vec<Half>> {
    let m = mesh.len() - 1;
    let mut halves = Vec::with_capacity(2 * m);
    for i in 0..m {
        let (a, b) = (&nodes[i], &nodes[i + 1]);
        let (d, perm) = spectral_pairing(x, &a.points, &b.points)?;
        let perm = untangle(x, &a.points, &b.points, perm, d);
        let target: Vec<Point> = perm.iter().map(|&j| b.points[j].clone()).collect();
        let source: Vec<Point> = perm.iter().map(|&j| origins[i + 1][j].clone()).collect();
        let v = aligned_frame(&a.frame, &b.frame, &perm, &source);
        let paths: Vec<PLPath> = a
            .points
            .iter()
            .zip(&target)
            .map(|(p, q)| x.shortest_path(p, q))
            .collect::<Result<_>>()?;
        let (t0, t1) = (mesh[i], mesh[i + 1]);
        let tm = 0.5 * (t0 + t1);
        let rotate = |u: &CMat, pts: &[Point]| Motion::Rotate {
            u: u.clone(),
            log: frame_log(u, &v),
            points: pts.to_vec(),
        };
        if i == 0 {
            let timing = Timing::Power(exponents(&a.points, &paths, stretch));
            halves.push(Half {
                t0,
                t1: tm,
                motion: Motion::Move {
                    frame: a.frame.clone(),
                    paths,
                    timing,
                },
            });
            halves.push(Half {
                t0: tm,
                t1,
                motion: rotate(&a.frame, &target),
            });
        } else if i + 1 == m {
            let reversed: Vec<PLPath> = paths.iter().map(reverse).collect();
            let timing = Timing::ReversePower(exponents(&target, &reversed, stretch));
            halves.push(Half {
                t0,
                t1: tm,
                motion: rotate(&a.frame, &a.points),
            });
            halves.push(Half {
                t0: tm,
                t1,
                motion: Motion::Move { frame: v, paths, timing },
            });
        } else {
            let order = sequential_order(&a.points, &target, &paths);
            halves.push(Half {
                t0,
                t1: tm,
                motion: rotate(&a.frame, &a.points),
            });
            halves.push(Half {
                t0: tm,
                t1,
                motion: Motion::Move {
                    frame: v,
                    paths,
                    timing: Timing::Sequential(order),
                },
            });
        }
    }
    Ok(halves)
}

/// Pairwise swaps lowering the sum of squared distances while keeping every
/// pair within `bound`; this removes crossings between equally good matches.
fn untangle(x: &SimplicialComplex2, a: &[Point], b: &[Point], mut perm: Vec<usize>, bound: f64) -> Vec<usize> {
    let n = a.len();
    let dist: Vec<Vec<f64>> = a.iter().map(|p| b.iter().map(|q| x.path_distance(p, q)).collect()).collect();
    let limit = bound + 1e-12;
    let mut improved = true;
    while improved {
        improved = false;
        for i in 0..n {
            for j in i + 1..n {
                let (pi, pj) = (perm[i], perm[j]);
                if dist[i][pj] > limit || dist[j][pi] > limit {
                    continue;
                }
                let now = dist[i][pi].powi(2) + dist[j][pj].powi(2);
                let swapped = dist[i][pj].powi(2) + dist[j][pi].powi(2);
                if swapped < now - 1e-15 {
                    perm.swap(i, j);
                    improved = true;
                }
            }
        }
    }
    perm
}

fn reverse(p: &PLPath) -> PLPath {
    PLPath {
        breakpoints: p.breakpoints.iter().rev().map(|b| 1.0 - b).collect(),
        points: p.points.iter().rev().cloned().collect(),
    }
}

/// Reduced form of an endpoint fiber: `(u, x)` with `φ(f) = u diag(f(x)) u* ⊗ 1_k`.
fn endpoint_data(phi: &SpaceHom, t: f64) -> Result<(CMat, Vec<Point>)> {
    let k = phi.k;
    let fb = phi.fiber(t);
    let l = phi.l;
    for i in 0..l {
        for p in 1..k {
            if fb.points[i * k + p] != fb.points[i * k] {
                return Err(Error::BlockStructure(format!("endpoint {t}: points are not grouped in runs of {k}")));
            }
        }
    }
    let xs: Vec<Point> = (0..l).map(|i| fb.points[i * k].clone()).collect();
    let coords = coordinate_functions(&phi.complex);
    for attempt in 0..8 {
        let coef: Vec<f64> = (0..coords.len())
            .map(|v| ((v + 1) as f64 * (0.618_033_988_749_895 + 0.1 * attempt as f64)).fract() + 0.1)
            .collect();
        let (cf, cw) = (coords.clone(), coef.clone());
        let eval = move |p: &Point| cf.iter().zip(&cw).map(|(f, w)| w * f.eval(p)).sum::<f64>();
        let vals: Vec<f64> = xs.iter().map(&eval).collect();
        let separated = (0..l).all(|i| (0..l).all(|j| xs[i] == xs[j] || (vals[i] - vals[j]).abs() > 1e-6));
        if !separated {
            continue;
        }
        let g = SpaceFunction::new("generic", eval);
        let full = fb.assemble(&g);
        if tensor_defect(&full, k) > 1e-8 {
            return Err(Error::BlockStructure(format!("endpoint {t} is not in M_l ⊗ 1_k")));
        }
        let reduced = CMat::from_fn(l, l, |i, j| (0..k).map(|p| full[(i * k + p, j * k + p)]).sum::<num_complex::Complex64>() / c(k as f64));
        let (evals, evecs) = hermitian_eig(&reduced);
        let mut by_val: Vec<usize> = (0..l).collect();
        by_val.sort_by(|&a, &b| evals[a].total_cmp(&evals[b]));
        let mut by_point: Vec<usize> = (0..l).collect();
        by_point.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        if by_val.iter().zip(&by_point).any(|(&a, &b)| (evals[a] - vals[b]).abs() > 1e-8) {
            return Err(Error::BlockStructure(format!("endpoint {t}: spectrum and frame disagree")));
        }
        let u = select_columns(&evecs, &by_val);
        let pts = by_point.iter().map(|&i| xs[i].clone()).collect();
        return Ok((u, pts));
    }
    Err(Error::Generator("no separating combination of coordinates found".into()))
}

/// Extend `φ` to `[−δ, 1+δ]` so that the new endpoint spectral points are
/// pairwise distinct, then reparametrize to `[0, 1]`. Each endpoint point
/// moves at most `bound`.
pub fn extend_endpoints_distinct(phi: &SpaceHom, delta: f64, bound: f64) -> Result<EndpointExtension> {
    let x = phi.complex.clone();
    if x.num_vertices() <= 1 && x.edges().is_empty() {
        return Err(Error::Domain("the space is a single point".into()));
    }
    if !(delta > 0.0 && bound > 0.0) {
        return Err(Error::Domain("delta and bound must be positive".into()));
    }
    let k = phi.k;
    let mut ends = Vec::new();
    let mut displacement: f64 = 0.0;
    for t in [0.0, 1.0] {
        let (u, xs) = endpoint_data(phi, t)?;
        let distinct = equal_groups(&xs).len() == xs.len();
        if distinct {
            ends.push(None);
            continue;
        }
        let ys = spread_checked(&x, &xs, bound, false)?;
        for (y, p) in ys.iter().zip(&xs) {
            displacement = displacement.max(x.path_distance(y, p));
        }
        let paths: Vec<PLPath> = ys.iter().zip(&xs).map(|(y, p)| x.shortest_path(y, p)).collect::<Result<_>>()?;
        ends.push(Some((kron(&u, &identity(k)), paths)));
    }
    let ends = Arc::new(ends);
    let inner = phi.clone();
    let (e2, kk) = (ends.clone(), k);
    let psi = SpaceHom::from_fn(phi.l, k, x.clone(), move |s| {
        let t = -delta + s * (1.0 + 2.0 * delta);
        let (side, local) = if t < 0.0 {
            (0, (t + delta) / delta)
        } else if t > 1.0 {
            (1, (1.0 + delta - t) / delta)
        } else {
            return inner.fiber(t);
        };
        match &e2[side] {
            None => inner.fiber(side as f64),
            Some((frame, paths)) => SpaceFiber {
                frame: frame.clone(),
                points: paths
                    .iter()
                    .flat_map(|p| std::iter::repeat(p.at(local)).take(kk))
                    .collect(),
            },
        }
    });
    let mut fam = coordinate_functions(&x);
    fam.push(SpaceFunction::constant(1.0));
    let endpoint_defect = psi.endpoint_defect(0.0, &fam).max(psi.endpoint_defect(1.0, &fam));
    let mut lo = usize::MAX;
    let mut hi = 0;
    for s in [0.0, 1.0] {
        for g in equal_groups(&psi.fiber(s).points) {
            lo = lo.min(g.len());
            hi = hi.max(g.len());
        }
    }
    Ok(EndpointExtension {
        psi,
        delta,
        displacement,
        multiplicity: (lo, hi),
        endpoint_defect,
    })
}
