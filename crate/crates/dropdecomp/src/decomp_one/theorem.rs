//! End-to-end decomposition over a finite simplicial complex of dimension
//! at most two.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{
    eta_for, join_caps, modify_vertex, partition_spectrum, spectral_intervals, split_caps, CapSplit, DiskExtension,
    EdgeExtension, SpectrumPartition,
};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::matrix_rep::{Block, DimensionDropElement, Fiber, HomField, HomRep, ProjectionField};
use crate::simplicial::{Point, SimplicialComplex2};

/// Tuning knobs of [`decompose_theorem_i_with`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TheoremOptions {
    /// Use this `η` instead of [`eta_for`].
    pub eta: Option<f64>,
    /// Required number of eigenvalues in each end window `[0, η/4]`,
    /// `[1 - η/4, 1]`; `None` means `k`.
    pub min_endpoint_units: Option<usize>,
    /// Barycentric subdivisions allowed while refining.
    pub max_refinements: usize,
    /// Probe resolution per edge when checking a simplex.
    pub probe_per_edge: usize,
    /// Boundary loop samples per triangle side.
    pub loop_per_edge: usize,
    /// Certificate sample resolution per edge of the refined complex.
    pub sample_per_edge: usize,
}

impl Default for TheoremOptions {
    fn default() -> Self {
        Self {
            eta: None,
            min_endpoint_units: None,
            max_refinements: 3,
            probe_per_edge: 2,
            loop_per_edge: 8,
            sample_per_edge: 3,
        }
    }
}

/// One line of the per-sample error table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleError {
    pub sample: usize,
    pub f: usize,
    pub error: f64,
}

/// Grouping used on one simplex of the refined complex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionRecord {
    pub simplex: Vec<usize>,
    pub groups: usize,
    pub envelopes: Vec<(f64, f64)>,
}

/// Measured outcome of a decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionCertificate {
    pub k: usize,
    pub rank: usize,
    pub epsilon: f64,
    pub eta: f64,
    pub refinements: usize,
    pub simplices: usize,
    pub samples: usize,
    pub max_error: f64,
    pub errors: Vec<SampleError>,
    pub rank_q0: usize,
    pub rank_q1: usize,
    pub rank_p1: usize,
    /// `max ‖Q0 + Q1 + P1 - P‖` over samples.
    pub projection_sum_defect: f64,
    /// `max` of `‖Q0 Q1‖`, `‖Q0 P1‖`, `‖Q1 P1‖` over samples.
    pub orthogonality_defect: f64,
    pub xi1: f64,
    pub xi2: f64,
    /// Samples where the spectra inside `[η/2, 1 - η/2]` differ.
    pub sdp_mismatches: Vec<usize>,
    pub partitions: Vec<PartitionRecord>,
}

impl DecompositionCertificate {
    pub fn sdp_identity(&self) -> bool {
        self.sdp_mismatches.is_empty()
    }

    /// Whether the measured data meet the target bounds.
    pub fn passes(&self, tol: f64) -> bool {
        self.max_error < self.epsilon
            && self.rank_q0 <= self.k
            && self.rank_q1 <= self.k
            && self.projection_sum_defect <= tol
            && self.orthogonality_defect <= tol
            && self.sdp_identity()
            && self.xi1 > 0.0
            && self.xi2 < 1.0
    }

    /// `sample-id,f-id,norm-error` table.
    pub fn error_csv(&self) -> String {
        let mut out = String::from("sample-id,f-id,norm-error\n");
        for e in &self.errors {
            out.push_str(&format!("{},{},{:.6e}\n", e.sample, e.f, e.error));
        }
        out
    }
}

/// Result of [`decompose_theorem_i`]: the certificate, the sampled data and an
/// evaluator for `ψ` anywhere on the complex.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub certificate: DecompositionCertificate,
    pub complex: SimplicialComplex2,
    pub points: Vec<Point>,
    pub phi: HomRep,
    pub psi: HomRep,
    pub psi1: HomRep,
    pub q0: ProjectionField,
    pub q1: ProjectionField,
    pub p1: ProjectionField,
    eval: Evaluator,
}

impl Decomposition {
    /// `ψ` at a point of the complex.
    pub fn psi_at(&self, x: &Point) -> Result<Fiber> {
        self.eval.psi(x)
    }
}

/// Decompose `φ` so that `‖φ(f) - ψ(f)‖ < ε` on the family, with
/// `ψ(f) = f(0̲) Q0 + f(1̲) Q1 + ψ1(f)`.
pub fn decompose_theorem_i(phi: &HomField, family: &[DimensionDropElement], epsilon: f64) -> Result<Decomposition> {
    decompose_theorem_i_with(phi, family, epsilon, &TheoremOptions::default())
}

pub fn decompose_theorem_i_with(
    phi: &HomField,
    family: &[DimensionDropElement],
    epsilon: f64,
    opts: &TheoremOptions,
) -> Result<Decomposition> {
    let k = phi.k;
    let eta = match opts.eta {
        Some(e) => e,
        None => eta_for(family, epsilon)?,
    };
    let min_units = opts.min_endpoint_units.unwrap_or(k);
    let first = phi.fiber(phi.complex.position(0))?;
    let rank = first.rank();
    let mut complex = phi.complex.clone();
    let mut refinements = 0;
    let plans = loop {
        match analyse(phi, &complex, eta, rank, min_units, opts)? {
            Ok(p) => break p,
            Err(reason) if refinements < opts.max_refinements => {
                let _ = reason;
                complex = complex.barycentric_subdivision();
                refinements += 1;
            }
            Err(reason) => {
                return Err(Error::Resource(format!(
                    "still too coarse after {refinements} subdivisions: {reason}"
                )))
            }
        }
    };
    let eval = Evaluator::build(phi.clone(), complex.clone(), plans, opts.loop_per_edge)?;
    certify(eval, family, epsilon, eta, rank, refinements, opts.sample_per_edge)
}

#[derive(Debug, Clone, Copy)]
struct Cuts {
    low: f64,
    high: f64,
}

impl Cuts {
    fn of(p: &SpectrumPartition) -> Self {
        let w = p.eta / (12.0 * p.n as f64);
        Self {
            low: p.s0() + 0.5 * w,
            high: p.t_last() - 0.5 * w,
        }
    }

    fn split(&self, f: &Fiber, k: usize) -> CapSplit {
        split_caps(f, k, self.low, self.high)
    }
}

#[derive(Debug, Clone)]
struct SimplexPlan {
    simplex: Vec<usize>,
    partition: SpectrumPartition,
    cuts: Cuts,
}

fn expanded_positions(f: &Fiber, k: usize) -> Vec<f64> {
    let mut out: Vec<f64> = f
        .blocks
        .iter()
        .flat_map(|b| std::iter::repeat(b.position()).take(b.width(k, 1)))
        .collect();
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

fn probe_points(complex: &SimplicialComplex2, s: &[usize], per_edge: usize) -> Vec<Point> {
    let pos: Vec<&Point> = s.iter().map(|&v| complex.position(v)).collect();
    let m = per_edge.max(1);
    let mut out: Vec<Point> = vec![complex.barycenter(s)];
    out.extend(pos.iter().map(|p| (*p).clone()));
    for i in 0..pos.len() {
        for j in i + 1..pos.len() {
            for a in 1..m {
                out.push(Point::lerp(pos[i], pos[j], a as f64 / m as f64));
            }
            out.push(Point::lerp(pos[i], pos[j], 0.5));
        }
    }
    out
}

/// Checks every simplex; the inner error asks for one more subdivision.
fn analyse(
    phi: &HomField,
    complex: &SimplicialComplex2,
    eta: f64,
    rank: usize,
    min_units: usize,
    opts: &TheoremOptions,
) -> Result<std::result::Result<Vec<SimplexPlan>, String>> {
    let k = phi.k;
    let w = eta / (12.0 * rank as f64);
    let mut simplices: Vec<Vec<usize>> = (0..complex.num_vertices()).map(|v| vec![v]).collect();
    simplices.extend(complex.edges().iter().map(|e| e.to_vec()));
    simplices.extend(complex.triangles().iter().map(|t| t.to_vec()));
    let mut plans = Vec::with_capacity(simplices.len());
    for s in simplices {
        let points = probe_points(complex, &s, opts.probe_per_edge);
        let fibers = points.iter().map(|p| phi.fiber(p)).collect::<Result<Vec<_>>>()?;
        let mut lists = Vec::with_capacity(fibers.len());
        for (p, f) in points.iter().zip(&fibers) {
            if f.rank() != rank {
                return Err(Error::Malformed(format!("rank {} at {p:?}, expected {rank}", f.rank())));
            }
            let pos = expanded_positions(f, k);
            let low = pos.iter().filter(|&&t| t <= eta / 4.0).count();
            let high = pos.iter().filter(|&&t| t >= 1.0 - eta / 4.0).count();
            if low < min_units || high < min_units {
                return Err(Error::Hypothesis(format!(
                    "at {p:?}: {low} eigenvalues in [0, η/4] and {high} in [1-η/4, 1], need {min_units}"
                )));
            }
            lists.push(pos);
        }
        let intervals = spectral_intervals(&lists);
        if let Some(iv) = intervals.iter().find(|iv| iv.1 - iv.0 > w) {
            return Ok(Err(format!("simplex {s:?} has spectral interval {iv:?} longer than {w}")));
        }
        let partition = partition_spectrum(&intervals, eta, rank)?;
        let cuts = Cuts::of(&partition);
        let splits: Vec<CapSplit> = fibers.iter().map(|f| cuts.split(f, k)).collect();
        for side in 0..2 {
            let proj = |c: &CapSplit| if side == 0 { c.low.projection() } else { c.high.projection() };
            let p0 = proj(&splits[0]);
            for c in &splits[1..] {
                if linalg::op_norm(&(proj(c) - &p0)) >= 0.5 {
                    return Ok(Err(format!("cap projection varies too much on simplex {s:?}")));
                }
            }
        }
        plans.push(SimplexPlan {
            simplex: s,
            partition,
            cuts,
        });
    }
    Ok(Ok(plans))
}

/// Fixed cap frame at a reference point; nearby caps are expressed in it via
/// the direct rotation of their projections.
#[derive(Debug, Clone)]
struct Reference {
    basis: CMat,
    proj: CMat,
}

impl Reference {
    fn of(cap: &Fiber) -> Self {
        Self {
            basis: cap.frame.clone(),
            proj: cap.projection(),
        }
    }

    fn coordinates(&self, cap: &Fiber) -> Result<Fiber> {
        let v = linalg::direct_rotation(&self.proj, &cap.projection())?;
        let w = self.basis.adjoint() * v.adjoint() * &cap.frame;
        Ok(Fiber {
            frame: linalg::polar_unitary(&w),
            blocks: cap.blocks.clone(),
        })
    }

    fn realize(&self, target_proj: &CMat, coords: &Fiber) -> Result<Fiber> {
        let v = linalg::direct_rotation(&self.proj, target_proj)?;
        Ok(Fiber {
            frame: v * &self.basis * &coords.frame,
            blocks: coords.blocks.clone(),
        })
    }
}

#[derive(Debug, Clone)]
struct EdgeData {
    cuts: Cuts,
    refs: [Reference; 2],
    ext: [EdgeExtension; 2],
}

#[derive(Debug, Clone)]
struct TriangleData {
    cuts: Cuts,
    refs: [Reference; 2],
    ext: [DiskExtension; 2],
}

#[derive(Debug, Clone)]
struct Evaluator {
    phi: HomField,
    complex: SimplicialComplex2,
    k: usize,
    vertices: Vec<Fiber>,
    edges: HashMap<[usize; 2], EdgeData>,
    triangles: HashMap<[usize; 3], TriangleData>,
    partitions: Vec<PartitionRecord>,
}

fn caps(split: &CapSplit) -> [&Fiber; 2] {
    [&split.low, &split.high]
}

impl Evaluator {
    fn build(phi: HomField, complex: SimplicialComplex2, plans: Vec<SimplexPlan>, loop_per_edge: usize) -> Result<Self> {
        let k = phi.k;
        let partitions = plans
            .iter()
            .map(|p| PartitionRecord {
                simplex: p.simplex.clone(),
                groups: p.partition.groups.len(),
                envelopes: p.partition.envelopes.clone(),
            })
            .collect();
        let mut ev = Self {
            phi,
            complex,
            k,
            vertices: Vec::new(),
            edges: HashMap::new(),
            triangles: HashMap::new(),
            partitions,
        };
        let by_len = |n: usize| plans.iter().filter(move |p| p.simplex.len() == n);
        for p in by_len(1) {
            let f = ev.phi.fiber(ev.complex.position(p.simplex[0]))?;
            let s = p.cuts.split(&f, k);
            let low = modify_vertex(&s.low, k, p.cuts.low)?;
            let high = modify_vertex(&s.high, k, 1.0 - p.cuts.high)?;
            ev.vertices.push(join_caps(&low, &s.middle, &high));
        }
        for p in by_len(2) {
            let (a, b) = (p.simplex[0], p.simplex[1]);
            let mid = Point::lerp(ev.complex.position(a), ev.complex.position(b), 0.5);
            let sm = p.cuts.split(&ev.phi.fiber(&mid)?, k);
            let sa = p.cuts.split(&ev.vertices[a], k);
            let sb = p.cuts.split(&ev.vertices[b], k);
            let refs = [Reference::of(&sm.low), Reference::of(&sm.high)];
            let mut ext = Vec::with_capacity(2);
            for side in 0..2 {
                let ca = refs[side].coordinates(caps(&sa)[side])?;
                let cb = refs[side].coordinates(caps(&sb)[side])?;
                ext.push(EdgeExtension::new(&ca, &cb, k).map_err(|e| match e {
                    Error::EndpointIncompatibility(m) => {
                        Error::EndpointIncompatibility(format!("edge [{a},{b}]: {m}"))
                    }
                    other => other,
                })?);
            }
            let ext: [EdgeExtension; 2] = ext.try_into().unwrap();
            ev.edges.insert([a, b], EdgeData { cuts: p.cuts, refs, ext });
        }
        for p in by_len(3) {
            let t = [p.simplex[0], p.simplex[1], p.simplex[2]];
            let c = ev.complex.barycenter(&t);
            let sc = p.cuts.split(&ev.phi.fiber(&c)?, k);
            let refs = [Reference::of(&sc.low), Reference::of(&sc.high)];
            let m = 3 * loop_per_edge.max(2);
            let mut loops: [Vec<Fiber>; 2] = [Vec::with_capacity(m), Vec::with_capacity(m)];
            for j in 0..m {
                let x = boundary_point(&ev.complex, &t, j as f64 / m as f64);
                let psi = ev.psi(&x)?;
                let s = p.cuts.split(&psi, k);
                for side in 0..2 {
                    loops[side].push(refs[side].coordinates(caps(&s)[side])?);
                }
            }
            let low = DiskExtension::new(&loops[0], k)?;
            let high = DiskExtension::new(&loops[1], k)?;
            ev.triangles.insert(t, TriangleData { cuts: p.cuts, refs, ext: [low, high] });
        }
        Ok(ev)
    }

    fn psi(&self, x: &Point) -> Result<Fiber> {
        let (s, lam) = self
            .complex
            .locate(x)
            .ok_or_else(|| Error::Domain(format!("{x:?} is not on the complex")))?;
        match s.len() {
            1 => Ok(self.vertices[s[0]].clone()),
            2 => {
                let e = &self.edges[&[s[0], s[1]]];
                let split = e.cuts.split(&self.phi.fiber(x)?, self.k);
                let mut out = Vec::with_capacity(2);
                for side in 0..2 {
                    let coords = e.ext[side].eval(lam[1]);
                    out.push(e.refs[side].realize(&caps(&split)[side].projection(), &coords)?);
                }
                Ok(join_caps(&out[0], &split.middle, &out[1]))
            }
            _ => {
                let t = [s[0], s[1], s[2]];
                let d = &self.triangles[&t];
                let (r, theta) = polar(&lam);
                let split = d.cuts.split(&self.phi.fiber(x)?, self.k);
                let mut out = Vec::with_capacity(2);
                for side in 0..2 {
                    let coords = d.ext[side].eval(r, theta);
                    out.push(d.refs[side].realize(&caps(&split)[side].projection(), &coords)?);
                }
                Ok(join_caps(&out[0], &split.middle, &out[1]))
            }
        }
    }
}

/// Point of the boundary loop `v0 → v1 → v2 → v0` at `θ ∈ [0, 1)`.
fn boundary_point(complex: &SimplicialComplex2, t: &[usize; 3], theta: f64) -> Point {
    let x = 3.0 * theta;
    let side = (x.floor() as usize).min(2);
    let u = x - side as f64;
    let a = complex.position(t[side]);
    let b = complex.position(t[(side + 1) % 3]);
    if u == 0.0 {
        a.clone()
    } else {
        Point::lerp(a, b, u)
    }
}

/// Polar coordinates of local barycentric coordinates: radius 1 on the
/// boundary, angle following [`boundary_point`].
fn polar(lam: &[f64]) -> (f64, f64) {
    let c = 1.0 / 3.0;
    let d: Vec<f64> = lam.iter().map(|l| l - c).collect();
    if d.iter().all(|x| x.abs() < 1e-14) {
        return (0.0, 0.0);
    }
    let (mut best, mut opp) = (f64::INFINITY, 0);
    for (i, &di) in d.iter().enumerate() {
        if di < 0.0 {
            let s = c / -di;
            if s < best {
                best = s;
                opp = i;
            }
        }
    }
    let q: Vec<f64> = (0..3).map(|i| (c + best * d[i]).max(0.0)).collect();
    let side = (opp + 1) % 3;
    let u = q[(side + 1) % 3];
    ((1.0 / best).min(1.0), ((side as f64 + u) / 3.0).rem_euclid(1.0))
}

fn certify(
    eval: Evaluator,
    family: &[DimensionDropElement],
    epsilon: f64,
    eta: f64,
    rank: usize,
    refinements: usize,
    per_edge: usize,
) -> Result<Decomposition> {
    let k = eval.k;
    let points = eval.complex.sample_points(per_edge);
    let mut phis = Vec::with_capacity(points.len());
    let mut psis = Vec::with_capacity(points.len());
    let mut psi1 = Vec::with_capacity(points.len());
    let (mut q0s, mut q1s, mut p1s) = (Vec::new(), Vec::new(), Vec::new());
    let mut errors = Vec::new();
    let mut max_error: f64 = 0.0;
    let (mut sum_defect, mut orth_defect): (f64, f64) = (0.0, 0.0);
    let (mut xi1, mut xi2) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut sdp_mismatches = Vec::new();
    for (i, x) in points.iter().enumerate() {
        let phi = eval.phi.fiber(x)?;
        let psi = eval.psi(x)?;
        for (j, f) in family.iter().enumerate() {
            let e = linalg::op_norm(&(phi.assemble(f)? - psi.assemble(f)?));
            max_error = max_error.max(e);
            errors.push(SampleError { sample: i, f: j, error: e });
        }
        let q0 = psi.block_projection(k, 1, |b| matches!(b, Block::Zero));
        let q1 = psi.block_projection(k, 1, |b| matches!(b, Block::One));
        let p1 = psi.block_projection(k, 1, |b| matches!(b, Block::Interior(_)));
        sum_defect = sum_defect.max(linalg::op_norm(&(&q0 + &q1 + &p1 - phi.projection())));
        orth_defect = orth_defect
            .max(linalg::op_norm(&(&q0 * &q1)))
            .max(linalg::op_norm(&(&q0 * &p1)))
            .max(linalg::op_norm(&(&q1 * &p1)));
        let pos = expanded_positions(&psi, k);
        let kz = pos.iter().filter(|&&t| t == 0.0).count();
        let k1 = pos.iter().filter(|&&t| t == 1.0).count();
        if kz + k1 < pos.len() {
            xi1 = xi1.min(pos[kz]);
            xi2 = xi2.max(pos[pos.len() - 1 - k1]);
        }
        let window = |v: Vec<f64>| -> Vec<f64> { v.into_iter().filter(|&t| t >= eta / 2.0 && t <= 1.0 - eta / 2.0).collect() };
        if window(expanded_positions(&phi, k)) != window(pos) {
            sdp_mismatches.push(i);
        }
        let cols: Vec<usize> = psi
            .blocks
            .iter()
            .zip(psi.column_ranges(k, 1))
            .filter(|(b, _)| matches!(b, Block::Interior(_)))
            .flat_map(|(_, r)| r)
            .collect();
        psi1.push(Fiber {
            frame: linalg::select_columns(&psi.frame, &cols),
            blocks: psi.blocks.iter().filter(|b| matches!(b, Block::Interior(_))).cloned().collect(),
        });
        q0s.push(q0);
        q1s.push(q1);
        p1s.push(p1);
        phis.push(phi);
        psis.push(psi);
    }
    let field = |v: Vec<CMat>, name: &str| {
        ProjectionField::new(v, 1e-8).map_err(|e| Error::Continuity(format!("{name}: {e}")))
    };
    let q0 = field(q0s, "Q0")?;
    let q1 = field(q1s, "Q1")?;
    let p1 = field(p1s, "P1")?;
    let certificate = DecompositionCertificate {
        k,
        rank,
        epsilon,
        eta,
        refinements,
        simplices: eval.partitions.len(),
        samples: points.len(),
        max_error,
        errors,
        rank_q0: q0.rank,
        rank_q1: q1.rank,
        rank_p1: p1.rank,
        projection_sum_defect: sum_defect,
        orthogonality_defect: orth_defect,
        xi1,
        xi2,
        sdp_mismatches,
        partitions: eval.partitions.clone(),
    };
    Ok(Decomposition {
        certificate,
        complex: eval.complex.clone(),
        points,
        phi: HomRep::new(k, 1, phis)?,
        psi: HomRep::new(k, 1, psis)?,
        psi1: HomRep::new(k, 1, psi1)?,
        q0,
        q1,
        p1,
        eval,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn constant_field(complex: SimplicialComplex2) -> HomField {
        let src = Arc::new(|_: &Point| {
            Fiber::new(linalg::identity(4), vec![Block::Zero, Block::Interior(0.5), Block::One], 2, 1)
        });
        HomField::new(2, complex, src)
    }

    #[test]
    fn constant_spectrum_example() {
        let phi = constant_field(SimplicialComplex2::triangle());
        let opts = TheoremOptions {
            min_endpoint_units: Some(1),
            ..Default::default()
        };
        let d = decompose_theorem_i_with(&phi, &[DimensionDropElement::identity_function(2)], 0.6, &opts).unwrap();
        let c = &d.certificate;
        assert_eq!((c.rank_q0, c.rank_q1, c.rank_p1), (1, 1, 2));
        assert!(c.max_error < 1e-12);
        assert_eq!((c.xi1, c.xi2), (0.5, 0.5));
        assert!(c.sdp_identity());
        for f in &d.psi1.samples {
            assert_eq!(f.blocks, vec![Block::Interior(0.5)]);
        }
    }

    #[test]
    fn strict_endpoint_mass_is_checked() {
        let phi = constant_field(SimplicialComplex2::interval());
        let err = decompose_theorem_i(&phi, &[DimensionDropElement::identity_function(2)], 0.6).unwrap_err();
        assert!(matches!(err, Error::Hypothesis(_)));
    }

    #[test]
    fn polar_coordinates_follow_the_loop() {
        let (r, th) = polar(&[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);
        assert_eq!((r, th), (0.0, 0.0));
        let (r, th) = polar(&[0.5, 0.5, 0.0]);
        assert!((r - 1.0).abs() < 1e-12 && (th - 1.0 / 6.0).abs() < 1e-12);
        let (r, th) = polar(&[0.0, 0.5, 0.5]);
        assert!((r - 1.0).abs() < 1e-12 && (th - 0.5).abs() < 1e-12);
        let (_, th) = polar(&[0.5, 0.0, 0.5]);
        assert!((th - 5.0 / 6.0).abs() < 1e-12);
    }
}
