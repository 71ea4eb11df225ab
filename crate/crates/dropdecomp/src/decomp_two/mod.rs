//! Homomorphisms `C(X) → M_l(I_k)` for a finite complex `X`, and the
//! constructions around them: reduction to the 1-skeleton, distinct-spectrum
//! perturbation, endpoint extension, cluster projection fields and
//! conclusion verifiers.
//!
//! A fiber at `t` is a unitary frame `U` together with spectral points
//! `x_1, …, x_{lk}` of `X`, so that `φ(f)(t) = U diag(f(x_i)) U*`. At the
//! endpoints the frame is `u ⊗ 1_k` and point `i·k + p` equals point `i·k`.

mod cluster;
mod distinct;
mod skeleton;
mod verify;

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, diag_real, from_pairs, identity, kron, op_norm, to_pairs, unitarity_defect, unitary_log, unitary_log_any, CMat};
use crate::simplicial::{Point, SimplicialComplex2};
use crate::spectra::bottleneck_distance;

pub use cluster::{cluster_projections, ClusterField, ClusterRanks};
pub use distinct::{extend_endpoints_distinct, make_distinct_spectrum, DistinctResult, EndpointExtension};
pub use skeleton::{reduce_to_skeleton, reduce_to_skeleton_with, PunctureRecord, SkeletonOptions, SkeletonReduction};
pub use verify::{
    pairing_from_closeness_check, unitary_path_conjugation_check, verify_decomposition, verify_subcomplex_variant, Clause,
    ClosenessReport, Counterexample, IsometryFiber, PathCheck, SyntheticInstance, Verdict, VerifyParams, WitnessDecomposition,
    synthetic_instance,
};

/// A real function on `X`.
#[derive(Clone)]
pub struct SpaceFunction {
    pub name: String,
    f: Arc<dyn Fn(&Point) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for SpaceFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SpaceFunction({})", self.name)
    }
}

impl SpaceFunction {
    pub fn new(name: impl Into<String>, f: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn eval(&self, x: &Point) -> f64 {
        (self.f)(x)
    }

    /// Barycentric weight of base vertex `v`.
    pub fn vertex_weight(v: usize) -> Self {
        Self::new(format!("w{v}"), move |x: &Point| x.weight(v))
    }

    pub fn constant(value: f64) -> Self {
        Self::new(format!("const{value}"), move |_: &Point| value)
    }
}

/// Barycentric weights of every base vertex reachable from the complex; they
/// separate points and generate `C(X)`.
pub fn coordinate_functions(complex: &SimplicialComplex2) -> Vec<SpaceFunction> {
    let mut base: Vec<usize> = complex.positions().iter().flat_map(|p| p.carrier()).collect();
    base.sort_unstable();
    base.dedup();
    base.into_iter().map(SpaceFunction::vertex_weight).collect()
}

/// Diagonal form of a fiber: unitary frame and spectral points.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceFiber {
    pub frame: CMat,
    pub points: Vec<Point>,
}

#[derive(Serialize, Deserialize)]
struct SpaceFiberJson {
    frame: Vec<Vec<[f64; 2]>>,
    points: Vec<Point>,
}

impl Serialize for SpaceFiber {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SpaceFiberJson {
            frame: to_pairs(&self.frame),
            points: self.points.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SpaceFiber {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = SpaceFiberJson::deserialize(d)?;
        let frame = from_pairs(&raw.frame).map_err(serde::de::Error::custom)?;
        Ok(Self { frame, points: raw.points })
    }
}

impl SpaceFiber {
    pub fn new(frame: CMat, points: Vec<Point>) -> Result<Self> {
        if frame.nrows() != frame.ncols() || frame.ncols() != points.len() {
            return Err(Error::Malformed(format!(
                "frame {}x{} for {} points",
                frame.nrows(),
                frame.ncols(),
                points.len()
            )));
        }
        let d = unitarity_defect(&frame);
        if d > 1e-8 {
            return Err(Error::Malformed(format!("frame unitarity defect {d:.3e}")));
        }
        Ok(Self { frame, points })
    }

    /// Identity frame.
    pub fn diagonal(points: Vec<Point>) -> Self {
        Self {
            frame: identity(points.len()),
            points,
        }
    }

    /// Endpoint form `u ⊗ 1_k` with each of the `l` points repeated `k` times.
    pub fn endpoint(u: &CMat, points: &[Point], k: usize) -> Self {
        let frame = kron(u, &identity(k));
        let pts = points.iter().flat_map(|p| std::iter::repeat(p.clone()).take(k)).collect();
        Self { frame, points: pts }
    }

    pub fn size(&self) -> usize {
        self.points.len()
    }

    /// `U diag(f(x_i)) U*`.
    pub fn assemble(&self, f: &SpaceFunction) -> CMat {
        let vals: Vec<f64> = self.points.iter().map(|x| f.eval(x)).collect();
        &self.frame * diag_real(&vals) * self.frame.adjoint()
    }

    /// Spectral projection onto the columns in `cols`.
    pub fn projection(&self, cols: &[usize]) -> CMat {
        let n = self.size();
        let mut p = CMat::zeros(n, n);
        for &j in cols {
            let v = self.frame.column(j);
            p += &v * v.adjoint();
        }
        p
    }
}

/// Distance from `m` to `M_l ⊗ 1_k`, measured against the block average.
pub fn tensor_defect(m: &CMat, k: usize) -> f64 {
    let n = m.nrows();
    if k == 0 || n % k != 0 {
        return f64::INFINITY;
    }
    let l = n / k;
    let mut reduced = CMat::zeros(l, l);
    for i in 0..l {
        for j in 0..l {
            let mut s = Complex64::new(0.0, 0.0);
            for p in 0..k {
                s += m[(i * k + p, j * k + p)];
            }
            reduced[(i, j)] = s / c(k as f64);
        }
    }
    op_norm(&(m - kron(&reduced, &identity(k))))
}

/// Normalized trace.
pub fn normalized_trace(m: &CMat) -> f64 {
    m.trace().re / m.nrows().max(1) as f64
}

/// Source of fibers over `[0, 1]`.
pub type SpaceSource = Arc<dyn Fn(f64) -> SpaceFiber + Send + Sync>;

/// A homomorphism `C(X) → M_l(I_k)` given by its diagonal form.
#[derive(Clone)]
pub struct SpaceHom {
    pub l: usize,
    pub k: usize,
    pub complex: SimplicialComplex2,
    source: SpaceSource,
}

impl std::fmt::Debug for SpaceHom {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpaceHom")
            .field("l", &self.l)
            .field("k", &self.k)
            .field("complex", &self.complex)
            .finish()
    }
}

impl SpaceHom {
    pub fn new(l: usize, k: usize, complex: SimplicialComplex2, source: SpaceSource) -> Self {
        Self { l, k, complex, source }
    }

    pub fn from_fn(l: usize, k: usize, complex: SimplicialComplex2, f: impl Fn(f64) -> SpaceFiber + Send + Sync + 'static) -> Self {
        Self::new(l, k, complex, Arc::new(f))
    }

    pub fn size(&self) -> usize {
        self.l * self.k
    }

    pub fn fiber(&self, t: f64) -> SpaceFiber {
        (self.source)(t.clamp(0.0, 1.0))
    }

    pub fn value(&self, f: &SpaceFunction, t: f64) -> CMat {
        self.fiber(t).assemble(f)
    }

    /// Check sizes everywhere on `mesh` and the endpoint form.
    pub fn check(&self, mesh: &[f64], family: &[SpaceFunction], tol: f64) -> Result<()> {
        for &t in mesh {
            let fb = self.fiber(t);
            if fb.size() != self.size() {
                return Err(Error::Malformed(format!("fiber at {t} has size {}", fb.size())));
            }
            let d = unitarity_defect(&fb.frame);
            if d > tol {
                return Err(Error::Malformed(format!("frame at {t} has unitarity defect {d:.3e}")));
            }
            if fb.points.iter().any(|p| !self.complex.contains_point(p)) {
                return Err(Error::Domain(format!("spectral point off the complex at {t}")));
            }
        }
        self.check_endpoints(family, tol)
    }

    /// Endpoint values must lie in `M_l ⊗ 1_k`.
    pub fn check_endpoints(&self, family: &[SpaceFunction], tol: f64) -> Result<()> {
        for t in [0.0, 1.0] {
            let d = self.endpoint_defect(t, family);
            if d > tol {
                return Err(Error::BlockStructure(format!("endpoint {t} is {d:.3e} away from M_l ⊗ 1_k")));
            }
        }
        Ok(())
    }

    pub fn endpoint_defect(&self, t: f64, family: &[SpaceFunction]) -> f64 {
        let fb = self.fiber(t);
        family
            .iter()
            .map(|f| tensor_defect(&fb.assemble(f), self.k))
            .fold(0.0, f64::max)
    }
}

/// Uniform mesh with `m` intervals.
pub fn uniform_mesh(m: usize) -> Vec<f64> {
    let m = m.max(1);
    (0..=m).map(|i| i as f64 / m as f64).collect()
}

/// Bottleneck distance of two spectra in the path metric, with the matching.
pub fn spectral_pairing(complex: &SimplicialComplex2, a: &[Point], b: &[Point]) -> Result<(f64, Vec<usize>)> {
    if a == b {
        return Ok((0.0, (0..a.len()).collect()));
    }
    bottleneck_distance(a, b, |x, y| complex.path_distance(x, y))
}

/// `sup_{t ∈ mesh, f ∈ F} ‖φ(f)(t) − ψ(f)(t)‖`.
pub fn hom_distance(phi: &SpaceHom, psi: &SpaceHom, family: &[SpaceFunction], mesh: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for &t in mesh {
        let (a, b) = (phi.fiber(t), psi.fiber(t));
        for f in family {
            worst = worst.max(op_norm(&(a.assemble(f) - b.assemble(f))));
        }
    }
    worst
}

/// `sup_{t ∈ mesh}` of the spectral bottleneck distance in the path metric.
pub fn hom_pairing(phi: &SpaceHom, psi: &SpaceHom, mesh: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &t in mesh {
        let (d, _) = spectral_pairing(&phi.complex, &phi.fiber(t).points, &psi.fiber(t).points)?;
        worst = worst.max(d);
    }
    Ok(worst)
}

/// Smallest pairwise path distance between the points.
pub fn min_gap(complex: &SimplicialComplex2, points: &[Point]) -> f64 {
    let mut g = f64::INFINITY;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            g = g.min(complex.path_distance(&points[i], &points[j]));
        }
    }
    g
}

/// `sup |f(p) − f(q)|` over grid points `p` and points `q` at distance `r`
/// from `p` toward the vertices of its star.
pub(crate) fn oscillation(complex: &SimplicialComplex2, family: &[SpaceFunction], r: f64, per_edge: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for p in complex.sample_points(per_edge) {
        let Some((s, _)) = complex.locate(&p) else { continue };
        for v in complex.star_vertices(&s) {
            let target = complex.position(v);
            let d = Point::chart_distance(&p, target);
            if d < 1e-12 {
                continue;
            }
            let q = Point::lerp(&p, target, (r / d).min(1.0));
            for f in family {
                worst = worst.max((f.eval(&p) - f.eval(&q)).abs());
            }
        }
    }
    worst
}

/// Uniform interval mesh, doubled until consecutive spectra pair within
/// `pair_bound` and every `φ(f)` moves less than `step_bound` within a step.
pub(crate) fn choose_steps(
    phi: &SpaceHom,
    family: &[SpaceFunction],
    pair_bound: f64,
    step_bound: f64,
    initial: usize,
    max: usize,
) -> Result<Vec<f64>> {
    let mut m = initial.max(1);
    loop {
        let mesh = uniform_mesh(m);
        let fibers: Vec<SpaceFiber> = mesh.iter().map(|&t| phi.fiber(t)).collect();
        let mut ok = true;
        'steps: for i in 0..m {
            let (d, _) = spectral_pairing(&phi.complex, &fibers[i].points, &fibers[i + 1].points)?;
            if d > pair_bound {
                ok = false;
                break;
            }
            let mid = phi.fiber(0.5 * (mesh[i] + mesh[i + 1]));
            for f in family {
                let a = fibers[i].assemble(f);
                if op_norm(&(&a - mid.assemble(f))) >= step_bound || op_norm(&(&a - fibers[i + 1].assemble(f))) >= step_bound {
                    ok = false;
                    break 'steps;
                }
            }
        }
        if ok {
            return Ok(mesh);
        }
        if m * 2 > max {
            return Err(Error::Resource(format!("interval mesh needs more than {max} steps")));
        }
        m *= 2;
    }
}

/// Logarithm of `u* v`, principal when it exists.
pub(crate) fn frame_log(u: &CMat, v: &CMat) -> CMat {
    if u == v {
        return CMat::zeros(u.nrows(), u.ncols());
    }
    let w = u.adjoint() * v;
    unitary_log(&w).unwrap_or_else(|_| unitary_log_any(&w))
}

/// Reorder the columns of `v` by `perm` (column `j` of the result is column
/// `perm[j]` of `v`) and remove the gauge freedom relative to `u`: on each
/// group of equal points the block is replaced by its closest rotation to
/// `u`'s block.
pub(crate) fn aligned_frame(u: &CMat, v: &CMat, perm: &[usize], points: &[Point]) -> CMat {
    let n = v.ncols();
    let mut w = CMat::zeros(n, n);
    for (j, &pj) in perm.iter().enumerate() {
        w.set_column(j, &v.column(pj));
    }
    for group in equal_groups(points) {
        let wb = crate::linalg::select_columns(&w, &group);
        let ub = crate::linalg::select_columns(u, &group);
        if wb == ub {
            continue;
        }
        let g = crate::linalg::polar_unitary(&(wb.adjoint() * &ub));
        let aligned = &wb * g;
        for (q, &col) in group.iter().enumerate() {
            w.set_column(col, &aligned.column(q));
        }
    }
    w
}

/// Indices grouped by exactly equal points, in first-appearance order.
pub(crate) fn equal_groups(points: &[Point]) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        match groups.iter_mut().find(|g| points[g[0]] == *p) {
            Some(g) => g.push(i),
            None => groups.push(vec![i]),
        }
    }
    groups
}
