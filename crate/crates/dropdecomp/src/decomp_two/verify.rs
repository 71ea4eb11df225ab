use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    c, diag_real, exp_skew, hermitian_eig, identity, op_norm, projection_defect, projection_rank, random_hermitian,
    random_unitary, unitary_log_any, CMat,
};
use crate::matrix_rep::unitary_geodesic;
use crate::simplicial::{PLPath, Point, SimplicialComplex2, SubComplex};

use super::{aligned_frame, normalized_trace, spectral_pairing, SpaceFunction, SpaceHom};

/// One checked conclusion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Clause {
    pub name: String,
    pub pass: bool,
    /// Measured quantity the clause compares against its bound.
    pub value: f64,
    pub witness: Option<String>,
}

impl Clause {
    fn new(name: &str, pass: bool, value: f64, witness: Option<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            value,
            witness,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub pass: bool,
    pub clauses: Vec<Clause>,
}

impl Verdict {
    fn new(clauses: Vec<Clause>) -> Self {
        Self {
            pass: clauses.iter().all(|c| c.pass),
            clauses,
        }
    }

    pub fn clause(&self, name: &str) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.clauses.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect()
    }
}

/// `φ_2` at one sample: an isometry onto the range of `Q_2` and points.
#[derive(Debug, Clone, PartialEq)]
pub struct IsometryFiber {
    pub frame: CMat,
    pub points: Vec<Point>,
}

impl IsometryFiber {
    pub fn assemble(&self, f: &SpaceFunction) -> CMat {
        let vals: Vec<f64> = self.points.iter().map(|p| f.eval(p)).collect();
        &self.frame * diag_real(&vals) * self.frame.adjoint()
    }
}

/// A candidate decomposition sampled on `samples`, with
/// `φ_1(f) = Σ f(x_i) p_i`.
#[derive(Debug, Clone)]
pub struct WitnessDecomposition {
    pub samples: Vec<f64>,
    pub q0: Vec<CMat>,
    pub q1: Vec<CMat>,
    pub q2: Vec<CMat>,
    pub u: Vec<CMat>,
    pub points: Vec<Point>,
    pub p: Vec<Vec<CMat>>,
    pub phi2: Vec<IsometryFiber>,
    /// Arc through which `φ_2` factors.
    pub arc: PLPath,
}

impl WitnessDecomposition {
    pub fn phi1(&self, sample: usize, f: &SpaceFunction) -> CMat {
        let n = self.q0[sample].nrows();
        let mut m = CMat::zeros(n, n);
        for (x, p) in self.points.iter().zip(&self.p[sample]) {
            m += p * c(f.eval(x));
        }
        m
    }
}

#[derive(Debug, Clone)]
pub struct VerifyParams {
    pub epsilon: f64,
    pub j: usize,
    /// Radius for the density clause.
    pub density: f64,
    /// Trace hypothesis bound `δ`; the clause checks `< δ/4`.
    pub delta: f64,
    pub h: Vec<SpaceFunction>,
    /// Lower bound on the matrix size, when supplied.
    pub min_size: Option<usize>,
    pub tol: f64,
    /// Grid resolution per edge for the density clause.
    pub grid: usize,
}

impl VerifyParams {
    pub fn new(epsilon: f64, j: usize, density: f64) -> Self {
        Self {
            epsilon,
            j,
            density,
            delta: 1.0,
            h: Vec::new(),
            min_size: None,
            tol: 1e-8,
            grid: 8,
        }
    }
}

/// Position of `p` along `arc` in `[0, 1]` and its distance from the arc.
fn arc_coordinate(arc: &PLPath, p: &Point) -> (f64, f64) {
    let mut best = (0.0, f64::INFINITY);
    for (i, w) in arc.points.windows(2).enumerate() {
        let mut base = w[0].carrier();
        base.extend(w[1].carrier());
        base.extend(p.carrier());
        base.sort_unstable();
        base.dedup();
        let co = |q: &Point| -> Vec<f64> { base.iter().map(|&v| q.weight(v)).collect() };
        let (a, b, x) = (co(&w[0]), co(&w[1]), co(p));
        let dot = |m: &[f64], n: &[f64]| 0.5 * m.iter().zip(n).map(|(s, t)| s * t).sum::<f64>();
        let u: Vec<f64> = a.iter().zip(&b).map(|(s, t)| t - s).collect();
        let d: Vec<f64> = a.iter().zip(&x).map(|(s, t)| t - s).collect();
        let uu = dot(&u, &u);
        let s = if uu > 0.0 { (dot(&d, &u) / uu).clamp(0.0, 1.0) } else { 0.0 };
        let r: Vec<f64> = d.iter().zip(&u).map(|(m, n)| m - s * n).collect();
        let dist = dot(&r, &r).sqrt();
        if dist < best.1 {
            let (t0, t1) = (arc.breakpoints[i], arc.breakpoints[i + 1]);
            best = (t0 + s * (t1 - t0), dist);
        }
    }
    best
}

fn clause_checks(
    decomp: &WitnessDecomposition,
    phi: &SpaceHom,
    psi: &SpaceHom,
    family: &[SpaceFunction],
    params: &VerifyParams,
    region: Option<&SubComplex>,
) -> Vec<Clause> {
    let x = &phi.complex;
    let tol = params.tol;
    let n = phi.size();
    let one = identity(n);
    let mut clauses = Vec::new();
    let inside = |p: &Point| match region {
        Some(sub) => x.point_in_subcomplex(sub, p),
        None => x.contains_point(p),
    };

    let mut outside: Option<String> = None;
    for (i, &y) in decomp.samples.iter().enumerate() {
        let mut all: Vec<(&str, Point)> = Vec::new();
        all.extend(phi.fiber(y).points.into_iter().map(|p| ("phi", p)));
        all.extend(psi.fiber(y).points.into_iter().map(|p| ("psi", p)));
        all.extend(decomp.phi2[i].points.iter().cloned().map(|p| ("phi2", p)));
        if let Some((name, p)) = all.into_iter().find(|(_, p)| !inside(p)) {
            outside = Some(format!("{name} at y = {y}: {:?}", p.coords()));
            break;
        }
    }
    if outside.is_none() {
        if let Some(p) = decomp.points.iter().find(|p| !inside(p)) {
            outside = Some(format!("x_i {:?}", p.coords()));
        }
    }
    clauses.push(Clause::new("support", outside.is_none(), 0.0, outside));

    let mut part: f64 = 0.0;
    let mut part_at = None;
    for i in 0..decomp.samples.len() {
        let (q0, q1, q2) = (&decomp.q0[i], &decomp.q1[i], &decomp.q2[i]);
        let d = [
            op_norm(&(q0 + q1 + q2 - &one)),
            projection_defect(q0),
            projection_defect(q1),
            projection_defect(q2),
            op_norm(&(q0 * q1)),
            op_norm(&(q0 * q2)),
            op_norm(&(q1 * q2)),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        if d > part {
            part = d;
            part_at = Some(decomp.samples[i]);
        }
    }
    clauses.push(Clause::new(
        "partition",
        part <= tol,
        part,
        part_at.filter(|_| part > tol).map(|y| format!("y = {y}")),
    ));

    for (name, hom, conj) in [("closeness_phi", phi, false), ("closeness_psi", psi, true)] {
        let mut worst: f64 = 0.0;
        let mut at = None;
        for (i, &y) in decomp.samples.iter().enumerate() {
            let fb = hom.fiber(y);
            for f in family {
                let mut m = fb.assemble(f);
                if conj {
                    m = &decomp.u[i] * m * decomp.u[i].adjoint();
                }
                let approx = &decomp.q0[i] * &m * &decomp.q0[i] + decomp.phi1(i, f) + decomp.phi2[i].assemble(f);
                let d = op_norm(&(m - approx));
                if d > worst {
                    worst = d;
                    at = Some(format!("y = {y}, f = {}", f.name));
                }
            }
        }
        let pass = worst < params.epsilon;
        clauses.push(Clause::new(name, pass, worst, at.filter(|_| !pass)));
    }

    let mut fac: f64 = 0.0;
    let mut fac_at = None;
    for (i, &y) in decomp.samples.iter().enumerate() {
        let fb = &decomp.phi2[i];
        let q2 = &decomp.q2[i];
        let mut d = op_norm(&(&fb.frame * fb.frame.adjoint() - q2));
        let mut params_on_arc = Vec::with_capacity(fb.points.len());
        for p in &fb.points {
            let (s, dist) = arc_coordinate(&decomp.arc, p);
            d = d.max(dist);
            params_on_arc.push(s);
        }
        let h = &fb.frame * diag_real(&params_on_arc) * fb.frame.adjoint() + (&one - q2) * c(2.0);
        let (vals, vecs) = hermitian_eig(&h);
        for f in family {
            let g: Vec<f64> = vals
                .iter()
                .map(|&l| if l <= 1.5 { f.eval(&decomp.arc.at(l)) } else { 0.0 })
                .collect();
            let calc = &vecs * diag_real(&g) * vecs.adjoint();
            d = d.max(op_norm(&(calc - fb.assemble(f))));
        }
        if d > fac {
            fac = d;
            fac_at = Some(format!("y = {y}"));
        }
    }
    let pass = fac <= tol.max(1e-7);
    clauses.push(Clause::new("interval_factorization", pass, fac, fac_at.filter(|_| !pass)));

    let k = phi.k.max(1);
    let rank_q0 = projection_rank(&decomp.q0[0]) / k;
    let need = (rank_q0 + 2) * params.j;
    let mut margin = i64::MAX;
    let mut witness = None;
    for (i, p) in decomp.p[0].iter().enumerate() {
        let r = projection_rank(p) / k;
        let m = r as i64 - need as i64;
        if m < margin {
            margin = m;
            witness = Some(format!("rank(p_{}) = {r}, (rank(Q_0) + 2)J = {need}", i + 1));
        }
    }
    let mut sum_defect: f64 = 0.0;
    for i in 0..decomp.samples.len() {
        let mut s = CMat::zeros(n, n);
        for (a, p) in decomp.p[i].iter().enumerate() {
            s += p;
            for q in &decomp.p[i][a + 1..] {
                sum_defect = sum_defect.max(op_norm(&(p * q)));
            }
        }
        sum_defect = sum_defect.max(op_norm(&(s - &decomp.q1[i])));
    }
    let pass = margin > 0 && sum_defect <= tol;
    let witness = if sum_defect > tol {
        Some(format!("Q_1 differs from Σ p_i by {sum_defect:.3e}"))
    } else {
        witness.filter(|_| !pass)
    };
    clauses.push(Clause::new("rank", pass, margin as f64, witness));

    let grid: Vec<Point> = x.sample_points(params.grid).into_iter().filter(|p| inside(p)).collect();
    let mut worst = (0.0, None);
    for g in &grid {
        let d = decomp
            .points
            .iter()
            .map(|p| x.path_distance(g, p))
            .fold(f64::INFINITY, f64::min);
        if d > worst.0 {
            worst = (d, Some(g.clone()));
        }
    }
    let pass = worst.0 < params.density;
    clauses.push(Clause::new(
        "density",
        pass,
        worst.0,
        worst.1.filter(|_| !pass).map(|g| format!("no x_i within {} of {:?}", params.density, g.coords())),
    ));

    let mut tr: f64 = 0.0;
    let mut tr_at = None;
    for &y in &decomp.samples {
        let (a, b) = (phi.fiber(y), psi.fiber(y));
        for h in &params.h {
            let d = (normalized_trace(&a.assemble(h)) - normalized_trace(&b.assemble(h))).abs();
            if d > tr {
                tr = d;
                tr_at = Some(format!("y = {y}, h = {}", h.name));
            }
        }
    }
    let pass = tr < params.delta / 4.0;
    clauses.push(Clause::new("trace_hypothesis", pass, tr, tr_at.filter(|_| !pass)));

    if let Some(lb) = params.min_size {
        clauses.push(Clause::new(
            "size",
            phi.l >= lb,
            phi.l as f64,
            (phi.l < lb).then(|| format!("K = {} < L = {lb}", phi.l)),
        ));
    }
    clauses
}

/// Check a candidate decomposition of `φ` and `ψ` clause by clause.
pub fn verify_decomposition(
    decomp: &WitnessDecomposition,
    phi: &SpaceHom,
    psi: &SpaceHom,
    family: &[SpaceFunction],
    params: &VerifyParams,
) -> Result<Verdict> {
    check_shapes(decomp, phi, psi)?;
    Ok(Verdict::new(clause_checks(decomp, phi, psi, family, params, None)))
}

/// Same checks with every function restricted to the sub-complex `X_1`.
pub fn verify_subcomplex_variant(
    decomp: &WitnessDecomposition,
    phi: &SpaceHom,
    psi: &SpaceHom,
    x1: &SubComplex,
    family: &[SpaceFunction],
    params: &VerifyParams,
) -> Result<Verdict> {
    check_shapes(decomp, phi, psi)?;
    let sub = phi.complex.subcomplex(&x1.vertices, &x1.edges, &x1.triangles)?;
    Ok(Verdict::new(clause_checks(decomp, phi, psi, family, params, Some(&sub))))
}

fn check_shapes(decomp: &WitnessDecomposition, phi: &SpaceHom, psi: &SpaceHom) -> Result<()> {
    let m = decomp.samples.len();
    if m == 0 {
        return Err(Error::Malformed("no samples".into()));
    }
    let lens = [decomp.q0.len(), decomp.q1.len(), decomp.q2.len(), decomp.u.len(), decomp.p.len(), decomp.phi2.len()];
    if lens.iter().any(|&l| l != m) {
        return Err(Error::MeshIncompatible(format!("field lengths {lens:?} for {m} samples")));
    }
    if phi.size() != psi.size() || decomp.q0[0].nrows() != phi.size() {
        return Err(Error::Malformed("sizes of φ, ψ and the decomposition differ".into()));
    }
    if decomp.p.iter().any(|ps| ps.len() != decomp.points.len()) {
        return Err(Error::Malformed("one projection p_i per point x_i is required".into()));
    }
    Ok(())
}

/// A pair violating the pairing conclusion at trial level `delta`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub delta: f64,
    pub norm_distance: f64,
    pub pairing: f64,
    pub phi_points: Vec<Point>,
    pub psi_points: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosenessReport {
    /// Largest trial `δ` without a counterexample; zero if every level fails.
    pub delta: f64,
    pub candidates: Vec<f64>,
    pub trials: usize,
    /// Counterexample at the smallest failing level above `delta`.
    pub counterexample: Option<Counterexample>,
}

fn random_point<R: Rng>(x: &SimplicialComplex2, rng: &mut R) -> Point {
    let mut cells: Vec<Vec<usize>> = x.triangles().iter().map(|t| t.to_vec()).collect();
    cells.extend(x.edges().iter().map(|e| e.to_vec()));
    if cells.is_empty() {
        return x.position(rng.gen_range(0..x.num_vertices())).clone();
    }
    let cell = &cells[rng.gen_range(0..cells.len())];
    let w: Vec<f64> = cell.iter().map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
    let total: f64 = w.iter().sum();
    let parts: Vec<(&Point, f64)> = cell.iter().zip(&w).map(|(&v, &a)| (x.position(v), a / total)).collect();
    Point::affine(&parts)
}

fn random_point_near<R: Rng>(x: &SimplicialComplex2, p: &Point, radius: f64, rng: &mut R) -> Point {
    let Some((s, _)) = x.locate(p) else { return p.clone() };
    let star = x.star_vertices(&s);
    let target = x.position(star[rng.gen_range(0..star.len())]);
    let d = Point::chart_distance(p, target);
    if d < 1e-12 {
        return p.clone();
    }
    Point::lerp(p, target, (radius * rng.gen::<f64>() / d).min(1.0))
}

/// Empirical search for the largest `δ` such that `‖φ(f) − ψ(f)‖ < δ` on `F`
/// forces the spectra to pair within `η`, over random pairs of
/// `n`-dimensional representations of `C(X)`.
pub fn pairing_from_closeness_check(
    x: &SimplicialComplex2,
    family: &[SpaceFunction],
    eta: f64,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<ClosenessReport> {
    let grid = x.sample_points(4);
    for i in 0..grid.len() {
        for j in i + 1..grid.len() {
            if x.path_distance(&grid[i], &grid[j]) > 1e-9
                && family.iter().all(|f| (f.eval(&grid[i]) - f.eval(&grid[j])).abs() < 1e-9)
            {
                return Err(Error::Generator(format!(
                    "F does not separate {:?} and {:?}",
                    grid[i].coords(),
                    grid[j].coords()
                )));
            }
        }
    }
    let candidates: Vec<f64> = (-2..=10).map(|i| eta * 2f64.powi(-i)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: Vec<Option<Counterexample>> = vec![None; candidates.len()];
    for _ in 0..trials {
        let xs: Vec<Point> = (0..n).map(|_| random_point(x, &mut rng)).collect();
        let ys: Vec<Point> = xs.iter().map(|p| random_point_near(x, p, 3.0 * eta, &mut rng)).collect();
        let u = random_unitary(n, &mut rng);
        let tilt = random_hermitian(n, 0.1 * eta * rng.gen::<f64>(), &mut rng);
        let v = &u * exp_skew(&(tilt * num_complex::Complex64::new(0.0, 1.0)));
        let mut dnorm: f64 = 0.0;
        for f in family {
            let a = &u * diag_real(&xs.iter().map(|p| f.eval(p)).collect::<Vec<_>>()) * u.adjoint();
            let b = &v * diag_real(&ys.iter().map(|p| f.eval(p)).collect::<Vec<_>>()) * v.adjoint();
            dnorm = dnorm.max(op_norm(&(a - b)));
        }
        let (pairing, _) = spectral_pairing(x, &xs, &ys)?;
        if pairing < eta {
            continue;
        }
        for (i, &d) in candidates.iter().enumerate() {
            if dnorm < d && worst[i].is_none() {
                worst[i] = Some(Counterexample {
                    delta: d,
                    norm_distance: dnorm,
                    pairing,
                    phi_points: xs.clone(),
                    psi_points: ys.clone(),
                });
            }
        }
    }
    let ok = worst.iter().position(|w| w.is_none());
    let (delta, counterexample) = match ok {
        Some(i) => (candidates[i], if i > 0 { worst[i - 1].clone() } else { None }),
        None => (0.0, worst.last().cloned().flatten()),
    };
    Ok(ClosenessReport {
        delta,
        candidates,
        trials,
        counterexample,
    })
}

/// Result of [`unitary_path_conjugation_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct PathCheck {
    pub path: Vec<CMat>,
    /// `sup_{t, t′, f} ‖u_t D_f u_t* − u_{t′} D_f u_{t′}*‖` over the samples.
    pub deviation: f64,
    /// `sup_f ‖u D_f u* − v D_f v*‖`.
    pub hypothesis_level: f64,
    pub pass: bool,
}

/// Path of unitaries from `u` to a gauge-aligned `v` along which the
/// conjugated diagonal `D_f = diag(f(x_i))` stays within `epsilon`.
pub fn unitary_path_conjugation_check(
    points: &[Point],
    u: &CMat,
    v: &CMat,
    family: &[SpaceFunction],
    epsilon: f64,
    steps: usize,
) -> Result<PathCheck> {
    let n = points.len();
    if u.nrows() != n || v.nrows() != n {
        return Err(Error::Malformed("unitaries must match the number of points".into()));
    }
    let perm: Vec<usize> = (0..n).collect();
    let w = aligned_frame(u, v, &perm, points);
    let path = match unitary_geodesic(u, &w, steps) {
        Ok(p) => p,
        Err(Error::BranchAmbiguity(_)) => {
            let l = unitary_log_any(&(u.adjoint() * &w));
            (0..=steps.max(1))
                .map(|i| u * exp_skew(&(&l * c(i as f64 / steps.max(1) as f64))))
                .collect()
        }
        Err(e) => return Err(e),
    };
    let diags: Vec<CMat> = family
        .iter()
        .map(|f| diag_real(&points.iter().map(|p| f.eval(p)).collect::<Vec<_>>()))
        .collect();
    let conj: Vec<Vec<CMat>> = path
        .iter()
        .map(|w| diags.iter().map(|d| w * d * w.adjoint()).collect())
        .collect();
    let mut deviation: f64 = 0.0;
    for a in 0..conj.len() {
        for b in a + 1..conj.len() {
            for q in 0..diags.len() {
                deviation = deviation.max(op_norm(&(&conj[a][q] - &conj[b][q])));
            }
        }
    }
    let mut hypothesis_level: f64 = 0.0;
    for d in &diags {
        hypothesis_level = hypothesis_level.max(op_norm(&(u * d * u.adjoint() - v * d * v.adjoint())));
    }
    Ok(PathCheck {
        path,
        deviation,
        hypothesis_level,
        pass: deviation < epsilon,
    })
}

/// A consistent `(φ, ψ, decomposition)` triple over `complex` with
/// `ψ = u* φ u`, `φ_1` supported on `xs` with multiplicity `mult`, and
/// `φ_2` on two points of `arc`.
pub struct SyntheticInstance {
    pub phi: SpaceHom,
    pub psi: SpaceHom,
    pub decomp: WitnessDecomposition,
    pub family: Vec<SpaceFunction>,
    pub params: VerifyParams,
}

pub fn synthetic_instance(complex: &SimplicialComplex2, xs: &[Point], mult: usize, arc: &PLPath, seed: u64) -> SyntheticInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n1 = mult * xs.len();
    let n = 1 + n1 + 2;
    let frame = random_unitary(n, &mut rng);
    let u = random_unitary(n, &mut rng);
    let arc_points = {
        let arc = arc.clone();
        move |y: f64| vec![arc.at(0.3 + 0.2 * y), arc.at(0.6)]
    };
    let spectrum = {
        let xs = xs.to_vec();
        let arc = arc.clone();
        let arc_points = arc_points.clone();
        move |y: f64| {
            let mut pts = vec![arc.at(0.5)];
            for x in &xs {
                pts.extend(std::iter::repeat(x.clone()).take(mult));
            }
            pts.extend(arc_points(y));
            pts
        }
    };
    let phi = {
        let (frame, spectrum) = (frame.clone(), spectrum.clone());
        SpaceHom::from_fn(n, 1, complex.clone(), move |y| super::SpaceFiber {
            frame: frame.clone(),
            points: spectrum(y),
        })
    };
    let psi = {
        let (frame, spectrum) = (u.adjoint() * &frame, spectrum.clone());
        SpaceHom::from_fn(n, 1, complex.clone(), move |y| super::SpaceFiber {
            frame: frame.clone(),
            points: spectrum(y),
        })
    };
    let proj = |cols: std::ops::Range<usize>| {
        let b = crate::linalg::select_columns(&frame, &cols.collect::<Vec<_>>());
        &b * b.adjoint()
    };
    let samples = vec![0.0, 0.5, 1.0];
    let m = samples.len();
    let p: Vec<CMat> = (0..xs.len()).map(|i| proj(1 + i * mult..1 + (i + 1) * mult)).collect();
    let phi2: Vec<IsometryFiber> = samples
        .iter()
        .map(|&y| IsometryFiber {
            frame: crate::linalg::select_columns(&frame, &[n - 2, n - 1]),
            points: arc_points(y),
        })
        .collect();
    let decomp = WitnessDecomposition {
        q0: vec![proj(0..1); m],
        q1: vec![proj(1..1 + n1); m],
        q2: vec![proj(n - 2..n); m],
        u: vec![u; m],
        points: xs.to_vec(),
        p: vec![p; m],
        phi2,
        arc: arc.clone(),
        samples,
    };
    let family = super::coordinate_functions(complex);
    let mut params = VerifyParams::new(0.01, 1, 0.3);
    params.h = family.clone();
    SyntheticInstance {
        phi,
        psi,
        decomp,
        family,
        params,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(s: f64) -> Point {
        Point::new(vec![(0, 1.0 - s), (1, s)]).unwrap()
    }

    fn edge_arc() -> PLPath {
        PLPath {
            breakpoints: vec![0.0, 1.0],
            points: vec![Point::vertex(0), Point::vertex(1)],
        }
    }

    fn interval_instance(xs: &[f64], mult: usize) -> SyntheticInstance {
        let pts: Vec<Point> = xs.iter().map(|&s| at(s)).collect();
        synthetic_instance(&SimplicialComplex2::interval(), &pts, mult, &edge_arc(), 7)
    }

    fn run(s: &SyntheticInstance) -> Verdict {
        verify_decomposition(&s.decomp, &s.phi, &s.psi, &s.family, &s.params).unwrap()
    }

    #[test]
    fn synthetic_witness_passes() {
        let v = run(&interval_instance(&[0.2, 0.5, 0.8], 4));
        assert!(v.pass, "{:?}", v.failures());
        assert!(v.clause("closeness_phi").unwrap().value < 1e-12);
    }

    #[test]
    fn rank_equality_fails() {
        let v = run(&interval_instance(&[0.2, 0.5, 0.8], 3));
        assert_eq!(v.failures(), vec!["rank"]);
        assert_eq!(v.clause("rank").unwrap().value, 0.0);
    }

    #[test]
    fn density_hole_has_witness() {
        let v = run(&interval_instance(&[0.2, 0.5], 4));
        assert_eq!(v.failures(), vec!["density"]);
        let c = v.clause("density").unwrap();
        assert!((c.value - 0.5).abs() < 1e-9);
        assert!(c.witness.is_some());
    }

    #[test]
    fn partition_and_closeness_mutations_are_detected() {
        let mut s = interval_instance(&[0.2, 0.5, 0.8], 4);
        s.decomp.q2[1] *= c(1.01);
        assert!(run(&s).failures().contains(&"partition"));

        let mut s = interval_instance(&[0.2, 0.5, 0.8], 4);
        s.decomp.points[0] = at(0.25);
        let v = run(&s);
        assert!(v.failures().contains(&"closeness_phi"));
        assert!(!v.failures().contains(&"partition"));
    }

    #[test]
    fn off_arc_points_break_the_factorization() {
        let mut s = interval_instance(&[0.2, 0.5, 0.8], 4);
        s.decomp.arc = PLPath {
            breakpoints: vec![0.0, 1.0],
            points: vec![Point::vertex(0), at(0.2)],
        };
        assert_eq!(run(&s).failures(), vec!["interval_factorization"]);
    }

    #[test]
    fn whole_complex_as_subcomplex_gives_the_same_verdict() {
        let s = interval_instance(&[0.2, 0.5, 0.8], 4);
        let x1 = SubComplex {
            vertices: vec![0, 1],
            edges: vec![[0, 1]],
            triangles: vec![],
        };
        let a = run(&s);
        let b = verify_subcomplex_variant(&s.decomp, &s.phi, &s.psi, &x1, &s.family, &s.params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn edge_subcomplex_passes_only_on_the_edge() {
        let x = SimplicialComplex2::triangle();
        let pts: Vec<Point> = [0.2, 0.5, 0.8].iter().map(|&s| at(s)).collect();
        let s = synthetic_instance(&x, &pts, 4, &edge_arc(), 3);
        let x1 = SubComplex {
            vertices: vec![0, 1],
            edges: vec![[0, 1]],
            triangles: vec![],
        };
        let on_edge = verify_subcomplex_variant(&s.decomp, &s.phi, &s.psi, &x1, &s.family, &s.params).unwrap();
        assert!(on_edge.pass, "{:?}", on_edge.failures());
        let whole = run(&s);
        assert_eq!(whole.failures(), vec!["density"]);
    }

    #[test]
    fn disconnected_subcomplex_is_rejected() {
        let x = SimplicialComplex2::path_graph(4);
        let pts: Vec<Point> = vec![Point::vertex(0)];
        let s = synthetic_instance(&x, &pts, 4, &edge_arc(), 3);
        let x1 = SubComplex {
            vertices: vec![0, 3],
            edges: vec![],
            triangles: vec![],
        };
        let e = verify_subcomplex_variant(&s.decomp, &s.phi, &s.psi, &x1, &s.family, &s.params).unwrap_err();
        assert!(matches!(e, Error::Structure(_)));
    }

    #[test]
    fn scalar_closeness_pairs_at_eta() {
        let x = SimplicialComplex2::interval();
        let f = vec![SpaceFunction::vertex_weight(1)];
        let r = pairing_from_closeness_check(&x, &f, 0.1, 1, 4000, 11).unwrap();
        assert!((r.delta - 0.1).abs() < 1e-12, "{r:?}");
        assert!(r.counterexample.is_some());
    }

    #[test]
    fn non_separating_family_is_rejected() {
        let x = SimplicialComplex2::interval();
        let f = vec![SpaceFunction::constant(1.0)];
        let e = pairing_from_closeness_check(&x, &f, 0.1, 2, 10, 1).unwrap_err();
        assert!(matches!(e, Error::Generator(_)));
    }

    #[test]
    fn conjugation_path_is_constant_in_gauge() {
        let pts = vec![at(0.0), at(0.5), at(0.5)];
        let f = coordinate_functions_interval();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random_unitary(3, &mut rng);
        let r = unitary_path_conjugation_check(&pts, &u, &u, &f, 1e-6, 8).unwrap();
        assert!(r.pass && r.deviation < 1e-12);

        let mut phase = identity(3);
        phase[(0, 0)] = num_complex::Complex64::from_polar(1.0, 2.0);
        let rot = exp_skew(&{
            let mut l = CMat::zeros(3, 3);
            l[(1, 2)] = c(0.7);
            l[(2, 1)] = c(-0.7);
            l
        });
        let v = &u * phase * rot;
        let r = unitary_path_conjugation_check(&pts, &u, &v, &f, 1e-6, 8).unwrap();
        assert!(r.hypothesis_level < 1e-12);
        assert!(r.deviation < 1e-9, "{}", r.deviation);
    }

    fn coordinate_functions_interval() -> Vec<SpaceFunction> {
        super::super::coordinate_functions(&SimplicialComplex2::interval())
    }
}
