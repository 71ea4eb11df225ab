//! Dimension drop elements and homomorphisms given pointwise by diagonal
//! block data conjugated by an isometry.
//!
//! A [`Fiber`] stores an `N × r` isometry `frame` and a block list. A block is
//! either an endpoint evaluation (`f(0̲)` or `f(1̲)`, width `l`) or an interior
//! evaluation `f(t)` (width `l·k`). The fiber sends `f` to
//! `frame · diag(blocks of f) · frame*`, so its image lives under the
//! projection `frame · frame*`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat};
use crate::simplicial::{Point, SimplicialComplex2};
use crate::spectra::SpectralMultiset;

type Values = Arc<dyn Fn(f64) -> CMat + Send + Sync>;

/// Element of `M_l(I_k)`: a continuous `lk × lk` matrix function on `[0,1]`
/// whose endpoint values are `a ⊗ 1_k` and `b ⊗ 1_k`.
#[derive(Clone)]
pub struct DimensionDropElement {
    pub k: usize,
    pub l: usize,
    pub name: String,
    values: Values,
    a: CMat,
    b: CMat,
    hermitian: bool,
}

impl fmt::Debug for DimensionDropElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DimensionDropElement")
            .field("name", &self.name)
            .field("k", &self.k)
            .field("l", &self.l)
            .finish()
    }
}

/// Evaluation argument: an endpoint representation or an interior point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvalAt {
    Zero,
    One,
    At(f64),
}

impl DimensionDropElement {
    pub fn new(
        k: usize,
        l: usize,
        name: impl Into<String>,
        values: impl Fn(f64) -> CMat + Send + Sync + 'static,
        a: CMat,
        b: CMat,
        hermitian: bool,
    ) -> Result<Self> {
        let el = Self {
            k,
            l,
            name: name.into(),
            values: Arc::new(values),
            a,
            b,
            hermitian,
        };
        el.validate(1e-9)?;
        Ok(el)
    }

    /// Scalar element `g(t) · 1_k` for real `g`.
    pub fn scalar(k: usize, name: impl Into<String>, g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let g = Arc::new(g);
        let a = linalg::diag_real(&[g(0.0)]);
        let b = linalg::diag_real(&[g(1.0)]);
        let gi = g.clone();
        Self {
            k,
            l: 1,
            name: name.into(),
            values: Arc::new(move |t| linalg::identity(k) * c(gi(t))),
            a,
            b,
            hermitian: true,
        }
    }

    /// The canonical generator `h(t) = t · 1_k`.
    pub fn identity_function(k: usize) -> Self {
        Self::scalar(k, "t", |t| t)
    }

    pub fn unit(k: usize) -> Self {
        Self::scalar(k, "1", |_| 1.0)
    }

    /// Piecewise linear interpolation of samples on an increasing mesh that
    /// starts at `0` and ends at `1`.
    pub fn sampled(k: usize, l: usize, name: impl Into<String>, mesh: Vec<f64>, samples: Vec<CMat>, a: CMat, b: CMat) -> Result<Self> {
        if mesh.len() != samples.len() || mesh.len() < 2 {
            return Err(Error::Malformed("mesh and samples must match, at least two nodes".into()));
        }
        if mesh[0] != 0.0 || *mesh.last().unwrap() != 1.0 || mesh.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Malformed("mesh must increase from 0 to 1".into()));
        }
        if samples.iter().any(|m| m.nrows() != l * k || m.ncols() != l * k || m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())) {
            return Err(Error::Malformed("samples must be finite lk × lk matrices".into()));
        }
        let hermitian = samples.iter().all(|m| linalg::op_norm(&(m - m.adjoint())) < 1e-12);
        let values = move |t: f64| {
            let t = t.clamp(0.0, 1.0);
            let i = match mesh.iter().position(|&x| x >= t) {
                Some(0) => return samples[0].clone(),
                Some(i) => i,
                None => return samples[samples.len() - 1].clone(),
            };
            let s = (t - mesh[i - 1]) / (mesh[i] - mesh[i - 1]);
            &samples[i - 1] * c(1.0 - s) + &samples[i] * c(s)
        };
        Self::new(k, l, name, values, a, b, hermitian)
    }

    /// Boundary blocks must reproduce the endpoint values.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let n = self.l * self.k;
        if self.a.shape() != (self.l, self.l) || self.b.shape() != (self.l, self.l) {
            return Err(Error::Malformed(format!("{}: boundary blocks must be l × l", self.name)));
        }
        let one = linalg::identity(self.k);
        for (t, blk) in [(0.0, &self.a), (1.0, &self.b)] {
            let v = (self.values)(t);
            if v.shape() != (n, n) {
                return Err(Error::Malformed(format!("{}: values must be lk × lk", self.name)));
            }
            if linalg::op_norm(&(v - linalg::kron(blk, &one))) > tol {
                return Err(Error::Malformed(format!(
                    "{}: value at {t} is not the boundary block tensored with 1_k",
                    self.name
                )));
            }
        }
        Ok(())
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// `f(0̲)`, `f(1̲)` or `f(t)`.
    pub fn eval(&self, at: EvalAt) -> CMat {
        match at {
            EvalAt::Zero => self.a.clone(),
            EvalAt::One => self.b.clone(),
            EvalAt::At(t) => (self.values)(t.clamp(0.0, 1.0)),
        }
    }

    /// Full `lk × lk` value at `t ∈ [0,1]`.
    pub fn value(&self, t: f64) -> CMat {
        (self.values)(t.clamp(0.0, 1.0))
    }

    pub fn add(&self, other: &Self) -> Self {
        let (f, g) = (self.values.clone(), other.values.clone());
        Self {
            k: self.k,
            l: self.l,
            name: format!("({}+{})", self.name, other.name),
            values: Arc::new(move |t| f(t) + g(t)),
            a: &self.a + &other.a,
            b: &self.b + &other.b,
            hermitian: self.hermitian && other.hermitian,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (f, g) = (self.values.clone(), other.values.clone());
        Self {
            k: self.k,
            l: self.l,
            name: format!("({}*{})", self.name, other.name),
            values: Arc::new(move |t| f(t) * g(t)),
            a: &self.a * &other.a,
            b: &self.b * &other.b,
            hermitian: false,
        }
    }

    pub fn adjoint(&self) -> Self {
        let f = self.values.clone();
        Self {
            k: self.k,
            l: self.l,
            name: format!("{}*", self.name),
            values: Arc::new(move |t| f(t).adjoint()),
            a: self.a.adjoint(),
            b: self.b.adjoint(),
            hermitian: self.hermitian,
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let f = self.values.clone();
        Self {
            k: self.k,
            l: self.l,
            name: format!("{s}·{}", self.name),
            values: Arc::new(move |t| f(t) * s),
            a: &self.a * s,
            b: &self.b * s,
            hermitian: self.hermitian && s.im == 0.0,
        }
    }

    /// Largest `‖f(t) - f(t')‖` over `|t - t'| <= h`, measured on a mesh of
    /// step `h / sub`.
    pub fn oscillation(&self, h: f64, sub: usize) -> f64 {
        let step = h / sub.max(1) as f64;
        let m = (1.0 / step).ceil() as usize;
        let vals: Vec<CMat> = (0..=m).map(|i| self.value((i as f64 * step).min(1.0))).collect();
        let mut worst: f64 = 0.0;
        for i in 0..vals.len() {
            for j in i + 1..vals.len().min(i + sub + 1) {
                worst = worst.max(linalg::op_norm(&(&vals[i] - &vals[j])));
            }
        }
        worst
    }
}

/// One block of a fiber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Block {
    /// Evaluation at the endpoint representation `0̲`.
    Zero,
    /// Evaluation at `1̲`.
    One,
    /// Evaluation `f(t)` at an interior or endpoint value `t`.
    Interior(f64),
}

impl Block {
    pub fn width(&self, k: usize, l: usize) -> usize {
        match self {
            Block::Zero | Block::One => l,
            Block::Interior(_) => l * k,
        }
    }

    pub fn eval_at(&self) -> EvalAt {
        match *self {
            Block::Zero => EvalAt::Zero,
            Block::One => EvalAt::One,
            Block::Interior(t) => EvalAt::At(t),
        }
    }

    /// Position on `[0,1]` of the underlying representation.
    pub fn position(&self) -> f64 {
        match *self {
            Block::Zero => 0.0,
            Block::One => 1.0,
            Block::Interior(t) => t,
        }
    }
}

/// Pointwise data `u · diag(f(t_1), …) · u*` of a homomorphism at one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Fiber {
    /// `N × r` isometry; its range is the cut projection.
    pub frame: CMat,
    pub blocks: Vec<Block>,
}

impl Fiber {
    pub fn new(frame: CMat, blocks: Vec<Block>, k: usize, l: usize) -> Result<Self> {
        let f = Self { frame, blocks };
        f.check(k, l, 1e-8)?;
        Ok(f)
    }

    pub fn rank(&self) -> usize {
        self.frame.ncols()
    }

    pub fn size(&self) -> usize {
        self.frame.nrows()
    }

    pub fn check(&self, k: usize, l: usize, tol: f64) -> Result<()> {
        let width: usize = self.blocks.iter().map(|b| b.width(k, l)).sum();
        if width != self.frame.ncols() {
            return Err(Error::Malformed(format!(
                "blocks occupy {width} columns but the frame has {}",
                self.frame.ncols()
            )));
        }
        for b in &self.blocks {
            if let Block::Interior(t) = b {
                if !(0.0..=1.0).contains(t) {
                    return Err(Error::Malformed(format!("block at {t} outside [0,1]")));
                }
            }
        }
        let defect = linalg::isometry_defect(&self.frame);
        if defect > tol {
            return Err(Error::Malformed(format!("frame is not an isometry (defect {defect:e})")));
        }
        Ok(())
    }

    /// Column ranges of the blocks inside the frame.
    pub fn column_ranges(&self, k: usize, l: usize) -> Vec<std::ops::Range<usize>> {
        let mut at = 0;
        self.blocks
            .iter()
            .map(|b| {
                let w = b.width(k, l);
                at += w;
                at - w..at
            })
            .collect()
    }

    /// `r × r` block diagonal matrix `diag(f(t_1), …)`.
    pub fn block_diagonal(&self, f: &DimensionDropElement) -> CMat {
        let r = self.rank();
        let mut d = linalg::zeros(r, r);
        let mut at = 0;
        for b in &self.blocks {
            let m = f.eval(b.eval_at());
            let w = m.nrows();
            d.view_mut((at, at), (w, w)).copy_from(&m);
            at += w;
        }
        d
    }

    /// The value of the homomorphism on `f` at this sample.
    pub fn assemble(&self, f: &DimensionDropElement) -> Result<CMat> {
        let width: usize = self.blocks.iter().map(|b| b.width(f.k, f.l)).sum();
        if width != self.rank() {
            return Err(Error::Malformed(format!(
                "element of M_{}(I_{}) does not fit a fiber of rank {}",
                f.l,
                f.k,
                self.rank()
            )));
        }
        let d = self.block_diagonal(f);
        Ok(&self.frame * d * self.frame.adjoint())
    }

    /// Cut projection `frame · frame*`.
    pub fn projection(&self) -> CMat {
        &self.frame * self.frame.adjoint()
    }

    /// Spectrum read from the block list.
    pub fn spectrum(&self, k: usize) -> Result<SpectralMultiset> {
        let mut e0 = 0;
        let mut e1 = 0;
        let mut pts = Vec::new();
        for b in &self.blocks {
            match *b {
                Block::Zero => e0 += 1,
                Block::One => e1 += 1,
                Block::Interior(t) => pts.push((t, 1)),
            }
        }
        SpectralMultiset::new(k, e0, pts, e1)
    }

    /// Projection onto the columns selected by a block predicate.
    pub fn block_projection(&self, k: usize, l: usize, pick: impl Fn(&Block) -> bool) -> CMat {
        let cols: Vec<usize> = self
            .blocks
            .iter()
            .zip(self.column_ranges(k, l))
            .filter(|(b, _)| pick(b))
            .flat_map(|(_, r)| r)
            .collect();
        let v = linalg::select_columns(&self.frame, &cols);
        &v * v.adjoint()
    }

    /// Replace interior blocks at exactly `0` (resp. `1`) by `k` endpoint
    /// blocks. Only meaningful for `l = 1`, where the columns line up.
    pub fn canonicalize(&self, k: usize, l: usize) -> Fiber {
        if l != 1 {
            return self.clone();
        }
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for b in &self.blocks {
            match *b {
                Block::Interior(t) if t == 0.0 => blocks.extend(std::iter::repeat(Block::Zero).take(k)),
                Block::Interior(t) if t == 1.0 => blocks.extend(std::iter::repeat(Block::One).take(k)),
                other => blocks.push(other),
            }
        }
        Fiber { frame: self.frame.clone(), blocks }
    }
}

/// A homomorphism out of `M_l(I_k)` sampled on a mesh of its codomain.
#[derive(Debug, Clone, PartialEq)]
pub struct HomRep {
    pub k: usize,
    pub l: usize,
    pub samples: Vec<Fiber>,
}

impl HomRep {
    pub fn new(k: usize, l: usize, samples: Vec<Fiber>) -> Result<Self> {
        let rep = Self { k, l, samples };
        rep.check()?;
        Ok(rep)
    }

    pub fn check(&self) -> Result<()> {
        let size = self.samples.first().map(|f| f.size());
        for (y, f) in self.samples.iter().enumerate() {
            f.check(self.k, self.l, 1e-8)
                .map_err(|e| Error::Malformed(format!("sample {y}: {e}")))?;
            if Some(f.size()) != size {
                return Err(Error::Malformed(format!("sample {y} has a different codomain size")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Generator of fibers over a simplicial complex.
pub type FiberSource = Arc<dyn Fn(&Point) -> Result<Fiber> + Send + Sync>;

/// A homomorphism out of `I_k` into `P M_N(C(X)) P`, evaluated on demand.
#[derive(Clone)]
pub struct HomField {
    pub k: usize,
    pub complex: SimplicialComplex2,
    source: FiberSource,
}

impl fmt::Debug for HomField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HomField").field("k", &self.k).field("complex", &self.complex).finish()
    }
}

impl HomField {
    pub fn new(k: usize, complex: SimplicialComplex2, source: FiberSource) -> Self {
        Self { k, complex, source }
    }

    /// Fiber at `x`, with interior blocks at exactly `0` or `1` unfolded into
    /// endpoint blocks.
    pub fn fiber(&self, x: &Point) -> Result<Fiber> {
        let f = (self.source)(x)?;
        f.check(self.k, 1, 1e-8)?;
        Ok(f.canonicalize(self.k, 1))
    }

    pub fn sample(&self, points: &[Point]) -> Result<HomRep> {
        let samples = points.iter().map(|p| self.fiber(p)).collect::<Result<Vec<_>>>()?;
        HomRep::new(self.k, 1, samples)
    }
}

/// `f(0̲)`, `f(1̲)` or `f(t)`.
pub fn eval_underline(f: &DimensionDropElement, at: EvalAt) -> Result<CMat> {
    if let EvalAt::At(t) = at {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("{t} outside [0,1]")));
        }
    }
    f.validate(1e-9)?;
    Ok(f.eval(at))
}

pub fn assemble_hom(rep: &HomRep, f: &DimensionDropElement, y: usize) -> Result<CMat> {
    if f.k != rep.k || f.l != rep.l {
        return Err(Error::Malformed("element and representation have different domains".into()));
    }
    let fiber = rep
        .samples
        .get(y)
        .ok_or_else(|| Error::Domain(format!("sample {y} out of range")))?;
    fiber.assemble(f)
}

pub fn spectrum_at(rep: &HomRep, y: usize) -> Result<SpectralMultiset> {
    let fiber = rep
        .samples
        .get(y)
        .ok_or_else(|| Error::Domain(format!("sample {y} out of range")))?;
    fiber.spectrum(rep.k)
}

/// Eigenvalues of `φ(h)` for `h(t) = t·1_k`, cut down to the fiber's range.
pub fn spectrum_by_eigenvalues(fiber: &Fiber, k: usize, l: usize) -> Vec<f64> {
    let h = DimensionDropElement::identity_function(k);
    if l != 1 {
        let mut out = Vec::new();
        for b in &fiber.blocks {
            out.extend(std::iter::repeat(b.position()).take(b.width(k, l)));
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        return out;
    }
    let m = fiber.frame.adjoint() * fiber.assemble(&h).expect("fits") * &fiber.frame;
    linalg::hermitian_eigenvalues(&m)
}

/// Union of closed intervals as the closed set `Y`.
pub fn distance_to_set(intervals: &[(f64, f64)], t: f64) -> f64 {
    intervals
        .iter()
        .map(|&(a, b)| if t < a { a - t } else if t > b { t - b } else { 0.0 })
        .fold(f64::INFINITY, f64::min)
}

/// Value of the tent `h_Y`: `1` on `Y`, `0` at distance `>= η/12n`, linear
/// in between.
pub fn test_function_value(intervals: &[(f64, f64)], eta: f64, n: usize, t: f64) -> f64 {
    let w = eta / (12.0 * n as f64);
    let d = distance_to_set(intervals, t);
    (1.0 - d / w).max(0.0)
}

/// The tent `h_Y` as an element `h_Y(t)·1_k`.
pub fn test_function_hy(intervals: &[(f64, f64)], eta: f64, n: usize, k: usize) -> Result<DimensionDropElement> {
    if intervals.is_empty() {
        return Err(Error::Domain("Y must be nonempty".into()));
    }
    if !(eta > 0.0) || n == 0 {
        return Err(Error::Domain("need eta > 0 and n >= 1".into()));
    }
    if intervals.iter().any(|&(a, b)| !(a <= b) || a < 0.0 || b > 1.0) {
        return Err(Error::Domain("Y must be a union of intervals in [0,1]".into()));
    }
    let y = intervals.to_vec();
    let name = format!("h_Y{:?}", intervals);
    Ok(DimensionDropElement::scalar(k, name, move |t| test_function_value(&y, eta, n, t)))
}

/// Largest operator norm of `φ_1(f) - φ_2(f)` over `F` and the samples.
pub fn hom_distance_on_f(rep1: &HomRep, rep2: &HomRep, family: &[DimensionDropElement]) -> Result<f64> {
    if rep1.len() != rep2.len() {
        return Err(Error::MeshIncompatible(format!(
            "{} samples vs {}",
            rep1.len(),
            rep2.len()
        )));
    }
    let mut worst: f64 = 0.0;
    for (a, b) in rep1.samples.iter().zip(&rep2.samples) {
        if a.size() != b.size() {
            return Err(Error::MeshIncompatible("codomain sizes differ".into()));
        }
        for f in family {
            worst = worst.max(linalg::op_norm(&(a.assemble(f)? - b.assemble(f)?)));
        }
    }
    Ok(worst)
}

/// Normalized trace field `y ↦ tr φ(h)(y) / rank P(y)`.
pub fn aff_trace(rep: &HomRep, h: &DimensionDropElement) -> Result<Vec<f64>> {
    rep.samples
        .iter()
        .map(|f| {
            if f.rank() == 0 {
                return Err(Error::Domain("zero-rank cut projection".into()));
            }
            Ok(f.assemble(h)?.trace().re / f.rank() as f64)
        })
        .collect()
}

/// Sup-norm distance between the normalized trace fields of two maps.
pub fn aff_trace_distance(rep1: &HomRep, rep2: &HomRep, h: &DimensionDropElement) -> Result<f64> {
    let a = aff_trace(rep1, h)?;
    let b = aff_trace(rep2, h)?;
    if a.len() != b.len() {
        return Err(Error::MeshIncompatible("sample counts differ".into()));
    }
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

/// `w(s) = u · exp(s L)` on `steps + 1` equally spaced `s ∈ [0,1]`, where
/// `L` is the principal logarithm of `u* v`.
pub fn unitary_geodesic(u: &CMat, v: &CMat, steps: usize) -> Result<Vec<CMat>> {
    if u.shape() != v.shape() || u.nrows() != u.ncols() {
        return Err(Error::Domain("unitaries must be square of the same size".into()));
    }
    for m in [u, v] {
        if linalg::unitarity_defect(m) > 1e-9 {
            return Err(Error::Domain("input is not unitary".into()));
        }
    }
    let steps = steps.max(1);
    let l = linalg::unitary_log(&(u.adjoint() * v))?;
    let mut out = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        let s = i as f64 / steps as f64;
        out.push(if i == steps { v.clone() } else { u * linalg::exp_skew(&(&l * c(s))) });
    }
    Ok(out)
}

/// Matrix-valued function sampled on a mesh, with its measured modulus of
/// continuity (largest jump between adjacent samples).
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixField {
    pub values: Vec<CMat>,
    pub modulus: f64,
}

impl MatrixField {
    pub fn new(values: Vec<CMat>) -> Self {
        let modulus = values
            .windows(2)
            .map(|w| linalg::op_norm(&(&w[1] - &w[0])))
            .fold(0.0, f64::max);
        Self { values, modulus }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let n = self.values.first().map(|m| m.nrows()).unwrap_or(0);
        serde_json::json!({
            "samples": self.values.len(),
            "size": n,
            "modulus": self.modulus,
            "values": self.values.iter().map(linalg::to_pairs).collect::<Vec<_>>(),
        })
    }
}

/// Hermitian idempotents of constant rank over a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionField {
    pub projections: Vec<CMat>,
    pub rank: usize,
}

impl ProjectionField {
    pub fn new(projections: Vec<CMat>, tol: f64) -> Result<Self> {
        let mut rank = None;
        for (y, p) in projections.iter().enumerate() {
            let d = linalg::projection_defect(p);
            if d > tol {
                return Err(Error::Malformed(format!("sample {y}: not a projection ({d:e})")));
            }
            let r = linalg::projection_rank(p);
            match rank {
                None => rank = Some(r),
                Some(r0) if r0 != r => {
                    return Err(Error::Malformed(format!("rank changes from {r0} to {r} at sample {y}")))
                }
                _ => {}
            }
        }
        Ok(Self {
            projections,
            rank: rank.unwrap_or(0),
        })
    }
}

/// Spectral projections of a hermitian field onto a closed window, with every
/// eigenvalue kept at least `gap` away from the window boundary.
pub fn spectral_projection(field: &MatrixField, window: (f64, f64), gap: f64) -> Result<ProjectionField> {
    let (lo, hi) = window;
    let mut out = Vec::with_capacity(field.values.len());
    for (y, m) in field.values.iter().enumerate() {
        let (vals, vecs) = linalg::hermitian_eig(m);
        let mut cols = Vec::new();
        for (i, &v) in vals.iter().enumerate() {
            if (v - lo).abs() < gap || (v - hi).abs() < gap {
                return Err(Error::GapViolation(format!(
                    "sample {y}: eigenvalue {v} within {gap} of the window boundary"
                )));
            }
            if v > lo && v < hi {
                cols.push(i);
            }
        }
        let b = linalg::select_columns(&vecs, &cols);
        out.push(&b * b.adjoint());
    }
    let pf = ProjectionField::new(out, 1e-8)?;
    for (y, w) in pf.projections.windows(2).enumerate() {
        let d = linalg::op_norm(&(&w[1] - &w[0]));
        if d >= 1.0 {
            return Err(Error::GapViolation(format!(
                "projection jumps by {d:.3} between samples {y} and {}",
                y + 1
            )));
        }
    }
    Ok(pf)
}

/// Eigen-decompositions along a field with eigenvector columns aligned to
/// the previous sample inside each degenerate cluster (maximal overlap).
pub fn track_eigenvectors(field: &MatrixField, cluster_tol: f64) -> Vec<(Vec<f64>, CMat)> {
    let mut out: Vec<(Vec<f64>, CMat)> = Vec::with_capacity(field.values.len());
    for m in &field.values {
        let (vals, mut vecs) = linalg::hermitian_eig(m);
        if let Some((_, prev)) = out.last() {
            let mut i = 0;
            while i < vals.len() {
                let mut j = i + 1;
                while j < vals.len() && vals[j] - vals[j - 1] < cluster_tol {
                    j += 1;
                }
                let cols: Vec<usize> = (i..j).collect();
                let cur = linalg::select_columns(&vecs, &cols);
                let old = linalg::select_columns(prev, &cols);
                let overlap = cur.adjoint() * &old;
                let aligned = &cur * linalg::polar_unitary(&overlap);
                for (a, &col) in cols.iter().enumerate() {
                    vecs.set_column(col, &aligned.column(a));
                }
                i = j;
            }
        }
        out.push((vals, vecs));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: &CMat, b: &CMat, tol: f64) -> bool {
        linalg::op_norm(&(a - b)) < tol
    }

    #[test]
    fn underline_evaluation() {
        let f = DimensionDropElement::identity_function(2);
        assert_eq!(eval_underline(&f, EvalAt::Zero).unwrap(), linalg::diag_real(&[0.0]));
        assert_eq!(eval_underline(&f, EvalAt::At(0.5)).unwrap(), linalg::diag_real(&[0.5, 0.5]));
        let mu = DimensionDropElement::scalar(3, "mu", |t| 2.0 * t + 0.25);
        assert_eq!(eval_underline(&mu, EvalAt::One).unwrap(), linalg::diag_real(&[2.25]));
    }

    #[test]
    fn malformed_boundary_is_rejected() {
        let bad = DimensionDropElement::new(
            2,
            1,
            "bad",
            |t| linalg::diag_real(&[t, 0.0]),
            linalg::diag_real(&[0.0]),
            linalg::diag_real(&[1.0]),
            true,
        );
        assert!(matches!(bad, Err(Error::Malformed(_))));
    }

    #[test]
    fn assemble_examples() {
        let h = DimensionDropElement::identity_function(2);
        let fiber = Fiber::new(linalg::identity(1), vec![Block::Zero], 2, 1).unwrap();
        assert_eq!(fiber.assemble(&h).unwrap(), linalg::zeros(1, 1));
        let fiber = Fiber::new(linalg::identity(3), vec![Block::Zero, Block::Interior(0.5)], 2, 1).unwrap();
        assert_eq!(fiber.assemble(&h).unwrap(), linalg::diag_real(&[0.0, 0.5, 0.5]));
        let one = DimensionDropElement::unit(2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = linalg::random_unitary(5, &mut rng);
        let frame = linalg::select_columns(&u, &[0, 1, 2]);
        let fiber = Fiber::new(frame, vec![Block::Interior(0.3), Block::One], 2, 1).unwrap();
        assert!(close(&fiber.assemble(&one).unwrap(), &fiber.projection(), 1e-12));
    }

    #[test]
    fn spectrum_reads_blocks() {
        let mut blocks = vec![Block::Zero; 3];
        blocks.extend([Block::Interior(0.2), Block::Interior(0.6)]);
        blocks.extend([Block::One; 2]);
        let fiber = Fiber::new(linalg::identity(9), blocks, 2, 1).unwrap();
        let s = fiber.spectrum(2).unwrap();
        assert_eq!(s.units_at_zero(), 3);
        assert_eq!(s.end0_units(), 1);
        assert_eq!(s.units_at_one(), 2);
        assert_eq!(s.total_n(), 9);
        let single = Fiber::new(linalg::identity(2), vec![Block::Interior(0.5)], 2, 1).unwrap();
        assert_eq!(single.spectrum(2).unwrap().points(), vec![0.5]);
    }

    #[test]
    fn spectrum_agrees_with_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u = linalg::random_unitary(8, &mut rng);
        let blocks = vec![Block::Zero, Block::Interior(0.25), Block::Interior(0.7), Block::Interior(0.7), Block::One];
        let fiber = Fiber::new(u, blocks, 2, 1).unwrap();
        let eig = spectrum_by_eigenvalues(&fiber, 2, 1);
        let via = crate::spectra::fractionalize(&eig, 2, 1e-8).unwrap();
        let direct = fiber.spectrum(2).unwrap();
        assert_eq!(via.end0_units(), direct.end0_units());
        assert_eq!(via.end1_units(), direct.end1_units());
        let d = crate::spectra::pnk_distance(&via, &direct).unwrap();
        assert!(d < 1e-10);
    }

    #[test]
    fn tent_values() {
        let y = [(0.4, 0.5)];
        let (eta, n) = (0.24, 2);
        let w = eta / (12.0 * n as f64);
        assert_eq!(test_function_value(&y, eta, n, 0.45), 1.0);
        assert_eq!(test_function_value(&y, eta, n, 0.5 + w), 0.0);
        assert!((test_function_value(&y, eta, n, 0.5 + w / 2.0) - 0.5).abs() < 1e-12);
        assert!(test_function_hy(&[], eta, n, 2).is_err());
    }

    #[test]
    fn hom_distance_examples() {
        let h = DimensionDropElement::identity_function(2);
        let a = HomRep::new(2, 1, vec![Fiber::new(linalg::identity(3), vec![Block::Zero, Block::Interior(0.5)], 2, 1).unwrap()]).unwrap();
        assert_eq!(hom_distance_on_f(&a, &a, &[h.clone()]).unwrap(), 0.0);
        let b = HomRep::new(2, 1, vec![Fiber::new(linalg::identity(3), vec![Block::Zero, Block::Interior(0.57)], 2, 1).unwrap()]).unwrap();
        assert!((hom_distance_on_f(&a, &b, &[h.clone()]).unwrap() - 0.07).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = linalg::random_unitary(3, &mut rng);
        let conj = |r: &HomRep| HomRep::new(2, 1, r.samples.iter().map(|f| Fiber { frame: &u * &f.frame, blocks: f.blocks.clone() }).collect()).unwrap();
        let (ca, cb) = (conj(&a), conj(&b));
        assert!((hom_distance_on_f(&ca, &cb, &[h.clone()]).unwrap() - 0.07).abs() < 1e-12);
        let empty = HomRep::new(2, 1, vec![]).unwrap();
        assert!(matches!(hom_distance_on_f(&a, &empty, &[h]), Err(Error::MeshIncompatible(_))));
    }

    #[test]
    fn aff_trace_examples() {
        let h = DimensionDropElement::identity_function(1);
        let rep = HomRep::new(1, 1, vec![Fiber::new(linalg::identity(2), vec![Block::Interior(0.2), Block::Interior(0.4)], 1, 1).unwrap()]).unwrap();
        assert!((aff_trace(&rep, &h).unwrap()[0] - 0.3).abs() < 1e-15);
        let one = DimensionDropElement::unit(1);
        assert!((aff_trace(&rep, &one).unwrap()[0] - 1.0).abs() < 1e-15);
        let h2 = DimensionDropElement::identity_function(2);
        let rep = HomRep::new(2, 1, (0..4).map(|_| Fiber::new(linalg::identity(4), vec![Block::Interior(0.1), Block::Interior(0.9)], 2, 1).unwrap()).collect()).unwrap();
        for v in aff_trace(&rep, &h2).unwrap() {
            assert!((v - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn geodesic_examples() {
        let one = linalg::identity(1);
        let i = CMat::from_element(1, 1, Complex64::new(0.0, 1.0));
        let path = unitary_geodesic(&one, &i, 8).unwrap();
        for (j, w) in path.iter().enumerate() {
            let s = j as f64 / 8.0;
            let want = Complex64::from_polar(1.0, s * std::f64::consts::FRAC_PI_2);
            assert!((w[(0, 0)] - want).norm() < 1e-12);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = linalg::random_unitary(4, &mut rng);
        let constant = unitary_geodesic(&u, &u, 4).unwrap();
        assert!(constant.iter().all(|w| close(w, &u, 1e-10)));
        let v = linalg::random_unitary(4, &mut rng);
        let path = unitary_geodesic(&u, &v, 10).unwrap();
        assert!(close(&path[0], &u, 1e-10) && close(&path[10], &v, 1e-10));
        assert!(path.iter().all(|w| linalg::unitarity_defect(w) < 1e-10));
    }

    #[test]
    fn spectral_projection_examples() {
        let f = MatrixField::new(vec![linalg::diag_real(&[0.0, 0.0, 0.5])]);
        let p = spectral_projection(&f, (-0.1, 0.1), 0.05).unwrap();
        assert!(close(&p.projections[0], &linalg::diag_real(&[1.0, 1.0, 0.0]), 1e-12));
        let th: f64 = 0.4;
        let r = CMat::from_row_slice(2, 2, &[c(th.cos()), c(-th.sin()), c(th.sin()), c(th.cos())]);
        let m = &r * linalg::diag_real(&[0.1, 0.9]) * r.adjoint();
        let p = spectral_projection(&MatrixField::new(vec![m.clone()]), (0.0, 0.5), 0.05).unwrap();
        let want = &r * linalg::diag_real(&[1.0, 0.0]) * r.adjoint();
        assert!(close(&p.projections[0], &want, 1e-12));
        let all = spectral_projection(&MatrixField::new(vec![m.clone()]), (-1.0, 2.0), 0.05).unwrap();
        assert!(close(&all.projections[0], &linalg::identity(2), 1e-12));
        assert!(matches!(
            spectral_projection(&MatrixField::new(vec![m]), (0.0, 0.12), 0.05),
            Err(Error::GapViolation(_))
        ));
    }
}
