//! Extension of cap data over edges and 2-cells.

use nalgebra::DVector;
use num_complex::Complex64;

use super::{canonical_order, winding_number, zero_count};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::matrix_rep::{Block, Fiber};
use crate::spectra::bottleneck_assignment;

/// Commutant structure of a canonical cap: `kz` endpoint columns followed by
/// interior blocks of width `k`.
#[derive(Debug, Clone)]
struct Gauge {
    kz: usize,
    k: usize,
    positions: Vec<f64>,
}

impl Gauge {
    fn of(f: &Fiber, k: usize) -> Self {
        let kz = zero_count(f);
        Self {
            kz,
            k,
            positions: f.blocks[kz..].iter().map(|b| b.position()).collect(),
        }
    }

    fn col(&self, block: usize, p: usize) -> usize {
        self.kz + block * self.k + p
    }

    fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = Vec::new();
        for (i, &t) in self.positions.iter().enumerate() {
            match out.iter_mut().find(|c| self.positions[c[0]] == t) {
                Some(c) => c.push(i),
                None => out.push(vec![i]),
            }
        }
        out
    }

    /// Commutant element `g` making `frame · g` closest to `target`.
    fn align(&self, frame: &CMat, target: &CMat) -> CMat {
        let r = frame.ncols();
        let mut g = linalg::zeros(r, r);
        if self.kz > 0 {
            let fz = frame.columns(0, self.kz);
            let tz = target.columns(0, self.kz);
            let o: CMat = fz.adjoint() * tz;
            g.view_mut((0, 0), (self.kz, self.kz)).copy_from(&linalg::polar_unitary(&o));
        }
        for cl in self.clusters() {
            let m = cl.len();
            let mut o = linalg::zeros(m, m);
            for (a, &ba) in cl.iter().enumerate() {
                for (b, &bb) in cl.iter().enumerate() {
                    let mut s = Complex64::new(0.0, 0.0);
                    for p in 0..self.k {
                        s += frame.column(self.col(ba, p)).dotc(&target.column(self.col(bb, p)));
                    }
                    o[(a, b)] = s;
                }
            }
            let u = linalg::polar_unitary(&o);
            for (a, &ba) in cl.iter().enumerate() {
                for (b, &bb) in cl.iter().enumerate() {
                    for p in 0..self.k {
                        g[(self.col(ba, p), self.col(bb, p))] = u[(a, b)];
                    }
                }
            }
        }
        g
    }

    /// Logarithm of the part of `g` that commutes with every block list of
    /// the same shape: the endpoint block and one phase per interior block.
    fn restricted_log(&self, g: &CMat) -> CMat {
        let r = g.nrows();
        let mut l = linalg::zeros(r, r);
        if self.kz > 0 {
            let gz = g.view((0, 0), (self.kz, self.kz)).into_owned();
            let lz = linalg::unitary_log_any(&linalg::polar_unitary(&gz));
            l.view_mut((0, 0), (self.kz, self.kz)).copy_from(&lz);
        }
        for b in 0..self.positions.len() {
            let mut tr = Complex64::new(0.0, 0.0);
            for p in 0..self.k {
                tr += g[(self.col(b, p), self.col(b, p))];
            }
            let phase = if tr.norm() > 1e-12 { tr.arg() } else { 0.0 };
            for p in 0..self.k {
                l[(self.col(b, p), self.col(b, p))] = Complex64::new(0.0, phase);
            }
        }
        l
    }
}

fn check_cap(f: &Fiber, k: usize) -> Result<()> {
    if f.blocks.iter().any(|b| matches!(b, Block::One)) {
        return Err(Error::Malformed("cap data holds a far endpoint block".into()));
    }
    let kz = zero_count(f);
    if f.blocks[..kz].iter().any(|b| !matches!(b, Block::Zero)) {
        return Err(Error::Malformed("cap blocks must be in canonical order".into()));
    }
    f.check(k, 1, 1e-8)
}

/// Path of cap data between two vertex caps: a unitary geodesic with the
/// start blocks on `[0, 1/2]`, then a linear slide of interior positions.
#[derive(Debug, Clone)]
pub struct EdgeExtension {
    k: usize,
    start: Vec<Block>,
    end: Vec<Block>,
    wa: CMat,
    wb: CMat,
    log: CMat,
}

impl EdgeExtension {
    /// Both caps must be canonical, share their range and have the same
    /// number `k′ ∈ {1, …, k}` of endpoint blocks.
    pub fn new(a: &Fiber, b: &Fiber, k: usize) -> Result<Self> {
        let a = canonical_order(a, k);
        let b = canonical_order(b, k);
        check_cap(&a, k)?;
        check_cap(&b, k)?;
        let (za, zb) = (zero_count(&a), zero_count(&b));
        if za != zb {
            return Err(Error::EndpointIncompatibility(format!(
                "ends carry {za} and {zb} endpoint blocks"
            )));
        }
        if za == 0 || za > k {
            return Err(Error::EndpointIncompatibility(format!(
                "ends carry {za} endpoint blocks, need between 1 and {k}"
            )));
        }
        if a.rank() != b.rank() || a.size() != b.size() {
            return Err(Error::EndpointIncompatibility(format!(
                "ranks {} and {} differ",
                a.rank(),
                b.rank()
            )));
        }
        let range_gap = linalg::op_norm(&(a.projection() - b.projection()));
        if range_gap > 1e-8 {
            return Err(Error::EndpointIncompatibility(format!(
                "end frames span different subspaces (gap {range_gap:.2e})"
            )));
        }
        let gauge = Gauge::of(&b, k);
        let g = gauge.align(&b.frame, &a.frame);
        let wb = &b.frame * g;
        let rel = a.frame.adjoint() * &wb;
        let log = linalg::unitary_log_any(&linalg::polar_unitary(&rel));
        Ok(Self {
            k,
            start: a.blocks.clone(),
            end: b.blocks.clone(),
            wa: a.frame.clone(),
            wb,
            log,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Cap data at parameter `tau ∈ [0, 1]`.
    pub fn eval(&self, tau: f64) -> Fiber {
        let tau = tau.clamp(0.0, 1.0);
        if tau == 0.0 {
            return Fiber {
                frame: self.wa.clone(),
                blocks: self.start.clone(),
            };
        }
        if tau <= 0.5 {
            let step = linalg::exp_skew(&(&self.log * linalg::c(2.0 * tau)));
            return Fiber {
                frame: &self.wa * step,
                blocks: self.start.clone(),
            };
        }
        let s = 2.0 * tau - 1.0;
        let blocks = if tau == 1.0 {
            self.end.clone()
        } else {
            self.start
                .iter()
                .zip(&self.end)
                .map(|(a, b)| match (a, b) {
                    (Block::Interior(x), Block::Interior(y)) => Block::Interior((1.0 - s) * x + s * y),
                    _ => *a,
                })
                .collect()
        };
        Fiber {
            frame: self.wb.clone(),
            blocks,
        }
    }

    /// `steps + 1` evenly spaced fibers.
    pub fn sample(&self, steps: usize) -> Vec<Fiber> {
        (0..=steps).map(|i| self.eval(i as f64 / steps.max(1) as f64)).collect()
    }
}

/// Fibers of an edge extension at `steps + 1` evenly spaced parameters.
pub fn extend_edge(alpha0: &Fiber, alpha1: &Fiber, k: usize, steps: usize) -> Result<Vec<Fiber>> {
    Ok(EdgeExtension::new(alpha0, alpha1, k)?.sample(steps))
}

/// Null-homotopy of a loop of unitaries, as rows from the loop (`u = 1`) to
/// a constant (`u = 0`).
#[derive(Debug, Clone)]
enum Contraction {
    Log { base: CMat, logs: Vec<CMat> },
    Grid { rows: Vec<Vec<CMat>> },
}

impl Contraction {
    fn build(loop_: &[CMat]) -> Result<Self> {
        let base = loop_[0].clone();
        let mut logs = Vec::with_capacity(loop_.len());
        let mut ok = true;
        for g in loop_ {
            let rel = base.adjoint() * g;
            let (vals, _) = linalg::normal_eig(&rel);
            if vals.iter().any(|z| z.arg().abs() >= std::f64::consts::PI - 0.1) {
                ok = false;
                break;
            }
            logs.push(linalg::unitary_log_any(&rel));
        }
        if ok {
            return Ok(Contraction::Log { base, logs });
        }
        let mut rows = contract_loop(loop_)?;
        let last = rows.len() - 1;
        let c0 = rows[last][0].clone();
        for m in rows[last].iter_mut() {
            *m = c0.clone();
        }
        Ok(Contraction::Grid { rows })
    }

    fn constant(&self) -> CMat {
        match self {
            Contraction::Log { base, .. } => base.clone(),
            Contraction::Grid { rows } => rows[rows.len() - 1][0].clone(),
        }
    }

    fn at(&self, u: f64, theta: f64) -> CMat {
        let u = u.clamp(0.0, 1.0);
        match self {
            Contraction::Log { base, logs } => {
                let (j0, j1, s) = angular_index(theta, logs.len());
                let l = &logs[j0] * linalg::c(1.0 - s) + &logs[j1] * linalg::c(s);
                base * linalg::exp_skew(&(l * linalg::c(u)))
            }
            Contraction::Grid { rows } => {
                let x = (1.0 - u) * (rows.len() - 1) as f64;
                let i0 = (x.floor() as usize).min(rows.len() - 1);
                let i1 = (i0 + 1).min(rows.len() - 1);
                let a = x - i0 as f64;
                let (j0, j1, s) = angular_index(theta, rows[0].len());
                let m = &rows[i0][j0] * linalg::c((1.0 - a) * (1.0 - s))
                    + &rows[i0][j1] * linalg::c((1.0 - a) * s)
                    + &rows[i1][j0] * linalg::c(a * (1.0 - s))
                    + &rows[i1][j1] * linalg::c(a * s);
                linalg::polar_unitary(&m)
            }
        }
    }
}

fn angular_index(theta: f64, m: usize) -> (usize, usize, f64) {
    let x = theta.rem_euclid(1.0) * m as f64;
    let j0 = (x.floor() as usize).min(m - 1);
    (j0, (j0 + 1) % m, x - j0 as f64)
}

/// Unitary `T` close to the identity with `T a = b` for unit vectors: a
/// plane rotation followed by a phase on `b`.
fn transport(a: &DVector<Complex64>, b: &DVector<Complex64>) -> CMat {
    let n = a.len();
    let a = a / Complex64::new(a.norm(), 0.0);
    let b = b / Complex64::new(b.norm(), 0.0);
    let ov = a.dotc(&b);
    let phase = if ov.norm() > 1e-300 { ov / ov.norm() } else { Complex64::new(1.0, 0.0) };
    let bp = &b * phase.conj();
    let rho = ov.norm();
    let perp = &bp - &a * Complex64::new(rho, 0.0);
    let sin = perp.norm();
    let one = Complex64::new(1.0, 0.0);
    let mut r = linalg::identity(n);
    if sin > 1e-15 {
        let u = &perp / Complex64::new(sin, 0.0);
        r += (&a * a.adjoint() + &u * u.adjoint()) * Complex64::new(rho - 1.0, 0.0);
        r += (&u * a.adjoint() - &a * u.adjoint()) * Complex64::new(sin, 0.0);
    }
    (linalg::identity(n) + (&b * b.adjoint()) * (phase - one)) * r
}

/// Contract a loop of unitaries with trivial determinant winding, column by
/// column: slide the first column to a fixed pole, then recurse on the
/// orthogonal complement. Rows run from the loop to a constant.
fn contract_loop(loop_: &[CMat]) -> Result<Vec<Vec<CMat>>> {
    let n = loop_[0].nrows();
    let m = loop_.len();
    if n == 1 {
        let mut phases = Vec::with_capacity(m);
        let mut acc = loop_[0][(0, 0)].arg();
        phases.push(acc);
        for j in 1..=m {
            let d = (loop_[j % m][(0, 0)] / loop_[j - 1][(0, 0)]).arg();
            acc += d;
            if j < m {
                phases.push(acc);
            }
        }
        if (acc - phases[0]).abs() > 1e-6 {
            return Err(Error::Obstruction("scalar loop has nonzero winding".into()));
        }
        let top = phases.iter().fold(0.0f64, |a, p| a.max(p.abs()));
        let steps = ((top / 0.2).ceil() as usize).max(1);
        return Ok((0..=steps)
            .map(|i| {
                let s = 1.0 - i as f64 / steps as f64;
                phases
                    .iter()
                    .map(|&p| CMat::from_element(1, 1, Complex64::from_polar(1.0, s * p)))
                    .collect()
            })
            .collect());
    }
    let cols: Vec<DVector<Complex64>> = loop_.iter().map(|g| g.column(0).into_owned()).collect();
    let mut cands: Vec<DVector<Complex64>> = Vec::new();
    for i in 0..n {
        for ph in [Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(0.0, -1.0)] {
            let mut e = DVector::zeros(n);
            e[i] = ph;
            cands.push(e);
        }
    }
    let stride = (m / 16).max(1);
    cands.extend(cols.iter().step_by(stride).cloned());
    let score = |p: &DVector<Complex64>| cols.iter().map(|c| (p + c).norm()).fold(f64::INFINITY, f64::min);
    let (pole, best) = cands
        .iter()
        .map(|p| (p.clone(), score(p)))
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap();
    if best < 1e-3 {
        return Err(Error::Obstruction("no pole avoids the antipodes of the loop".into()));
    }
    let along = |c: &DVector<Complex64>, s: f64| {
        let v = c * Complex64::new(1.0 - s, 0.0) + &pole * Complex64::new(s, 0.0);
        let nv = v.norm();
        v / Complex64::new(nv, 0.0)
    };
    let mut steps = 8usize;
    loop {
        let fine = cols.iter().all(|c| {
            (0..steps).all(|i| {
                let a = along(c, i as f64 / steps as f64);
                let b = along(c, (i + 1) as f64 / steps as f64);
                a.dotc(&b).norm() >= 0.98
            })
        });
        if fine {
            break;
        }
        steps *= 2;
        if steps > 4096 {
            return Err(Error::Resource("column slide needs too many steps".into()));
        }
    }
    let mut rows = vec![loop_.to_vec()];
    let mut cur = loop_.to_vec();
    for i in 0..steps {
        let s1 = (i + 1) as f64 / steps as f64;
        for (j, g) in cur.iter_mut().enumerate() {
            let a = g.column(0).into_owned();
            let b = if i + 1 == steps { pole.clone() } else { along(&cols[j], s1) };
            let t = transport(&a, &b);
            *g = &t * &*g;
            if i + 1 == steps {
                g.set_column(0, &pole);
            }
        }
        rows.push(cur.clone());
    }
    let pole_mat = CMat::from_column_slice(n, 1, pole.as_slice());
    let full = linalg::complete_to_unitary(&pole_mat);
    let q = full.columns(1, n - 1).into_owned();
    let sub: Vec<CMat> = cur
        .iter()
        .map(|g| linalg::polar_unitary(&(q.adjoint() * g.columns(1, n - 1))))
        .collect();
    let inner = contract_loop(&sub)?;
    for row in inner.into_iter().skip(1) {
        rows.push(
            row.iter()
                .map(|k| {
                    let rest = &q * k;
                    linalg::hstack(&[&pole_mat, &rest], n)
                })
                .collect(),
        );
    }
    Ok(rows)
}

/// Consecutive loop frames closer than this are taken as given.
const FRAME_STEP: f64 = 0.25;

/// Extension of loop cap data over a disk in polar coordinates `(r, θ)`,
/// `θ ∈ [0, 1)`. The outer annulus untwists the frame, the inner disk slides
/// interior positions to a common value.
#[derive(Debug, Clone)]
pub struct DiskExtension {
    k: usize,
    kz: usize,
    winding: i64,
    frames: Vec<CMat>,
    blocks: Vec<Vec<Block>>,
    contraction: Contraction,
    xi: f64,
    closing_defect: f64,
}

impl DiskExtension {
    /// `boundary[j]` is the cap data at `θ = j / M`; frames must be square.
    pub fn new(boundary: &[Fiber], k: usize) -> Result<Self> {
        let m = boundary.len();
        if m < 3 {
            return Err(Error::Undersampling("boundary loop needs at least three samples".into()));
        }
        let fibers: Vec<Fiber> = boundary.iter().map(|f| canonical_order(f, k)).collect();
        for f in &fibers {
            check_cap(f, k)?;
            if f.frame.nrows() != f.frame.ncols() {
                return Err(Error::Malformed("disk boundary frames must be square".into()));
            }
        }
        let kz = zero_count(&fibers[0]);
        let nint = fibers[0].blocks.len() - kz;
        for (j, f) in fibers.iter().enumerate() {
            if zero_count(f) != kz || f.blocks.len() - zero_count(f) != nint || f.rank() != fibers[0].rank() {
                return Err(Error::Hypothesis(format!(
                    "endpoint block count changes along the loop at sample {j}"
                )));
            }
        }
        if kz == 0 || kz > k {
            let m_wind = winding_number(&fibers.iter().map(|f| linalg::determinant(&f.frame)).collect::<Vec<_>>()).ok();
            return Err(Error::Obstruction(format!(
                "{kz} endpoint blocks on the loop (need 1..={k}); frame winding {}",
                m_wind.map_or("unknown".to_string(), |w| w.to_string())
            )));
        }

        let mut frames = vec![fibers[0].frame.clone()];
        let mut blocks = vec![fibers[0].blocks.clone()];
        for j in 1..m {
            let (f, bl) = relabel(&frames[j - 1], &blocks[j - 1], &fibers[j], k, kz);
            let aligned = if linalg::op_norm(&(&f - &frames[j - 1])) <= FRAME_STEP {
                f
            } else {
                let gauge = Gauge { kz, k, positions: bl[kz..].iter().map(|b| b.position()).collect() };
                let g = gauge.align(&f, &frames[j - 1]);
                &f * g
            };
            if linalg::op_norm(&(&aligned - &frames[j - 1])) > 1.0 {
                return Err(Error::Undersampling(format!("frames jump between samples {} and {j}", j - 1)));
            }
            frames.push(aligned);
            blocks.push(bl);
        }
        let (f0, b0) = relabel(&frames[m - 1], &blocks[m - 1], &fibers[0], k, kz);
        for (a, b) in b0.iter().zip(&blocks[0]) {
            if a != b {
                return Err(Error::Hypothesis("block labels do not close up around the loop".into()));
            }
        }
        let gauge0 = Gauge::of(&fibers[0], k);
        let g = if linalg::op_norm(&(&f0 - &frames[m - 1])) <= FRAME_STEP {
            linalg::identity(f0.ncols())
        } else {
            gauge0.align(&f0, &frames[m - 1])
        };
        let gfull = fibers[0].frame.adjoint() * (&f0 * &g);
        let corr = gauge0.restricted_log(&gfull) * linalg::c(-1.0);
        let closing_defect = linalg::op_norm(&(&gfull * linalg::exp_skew(&corr) - linalg::identity(gfull.nrows())));
        if closing_defect > 0.5 {
            return Err(Error::Hypothesis(format!(
                "holonomy around the loop is not in the common commutant (defect {closing_defect:.3})"
            )));
        }
        for (j, fr) in frames.iter_mut().enumerate() {
            let step = linalg::exp_skew(&(&corr * linalg::c(j as f64 / m as f64)));
            *fr = &*fr * step;
        }
        let dets: Vec<Complex64> = frames.iter().map(linalg::determinant).collect();
        let winding = winding_number(&dets)?;
        let untwisted: Vec<CMat> = frames
            .iter()
            .enumerate()
            .map(|(j, fr)| {
                let mut w = linalg::identity(fr.ncols());
                w[(0, 0)] = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * winding as f64 * j as f64 / m as f64);
                fr * w
            })
            .collect();
        let contraction = Contraction::build(&untwisted)?;
        let xi = blocks
            .iter()
            .flat_map(|b| b[kz..].iter().map(|x| x.position()))
            .fold(f64::INFINITY, f64::min);
        Ok(Self {
            k,
            kz,
            winding,
            frames,
            blocks,
            contraction,
            xi: if xi.is_finite() { xi } else { 0.0 },
            closing_defect,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of endpoint blocks carried everywhere.
    pub fn zero_blocks(&self) -> usize {
        self.kz
    }

    /// Winding number `m` of the frame determinant.
    pub fn winding(&self) -> i64 {
        self.winding
    }

    /// Common interior position reached at the center.
    pub fn center_position(&self) -> f64 {
        self.xi
    }

    pub fn closing_defect(&self) -> f64 {
        self.closing_defect
    }

    fn boundary_blocks(&self, theta: f64) -> Vec<Block> {
        let (j0, j1, s) = angular_index(theta, self.blocks.len());
        self.blocks[j0]
            .iter()
            .zip(&self.blocks[j1])
            .map(|(a, b)| match (a, b) {
                (Block::Interior(x), Block::Interior(y)) => Block::Interior((1.0 - s) * x + s * y),
                _ => *a,
            })
            .collect()
    }

    /// Cap data at polar coordinates `(r, θ)`, `r ∈ [0, 1]`.
    pub fn eval(&self, r: f64, theta: f64) -> Fiber {
        let r = r.clamp(0.0, 1.0);
        let mut blocks = self.boundary_blocks(theta);
        if r >= 0.5 {
            let g = self.contraction.at(2.0 * r - 1.0, theta);
            let mut w = linalg::identity(g.ncols());
            w[(0, 0)] = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * self.winding as f64 * theta.rem_euclid(1.0));
            Fiber { frame: g * w, blocks }
        } else {
            for b in blocks.iter_mut() {
                if let Block::Interior(t) = b {
                    *t = self.xi + 2.0 * r * (*t - self.xi);
                }
            }
            Fiber {
                frame: self.contraction.constant(),
                blocks,
            }
        }
    }

    /// Largest deviation of the extension on `r = 1` from the given loop, on
    /// every `f` in the family.
    pub fn boundary_mismatch(&self, boundary: &[Fiber], family: &[crate::matrix_rep::DimensionDropElement]) -> Result<f64> {
        let m = boundary.len();
        let mut worst: f64 = 0.0;
        for (j, b) in boundary.iter().enumerate() {
            let e = self.eval(1.0, j as f64 / m as f64);
            for f in family {
                worst = worst.max(linalg::op_norm(&(e.assemble(f)? - b.assemble(f)?)));
            }
        }
        Ok(worst)
    }

    /// The continued boundary frames, one per sample.
    pub fn boundary_frames(&self) -> &[CMat] {
        &self.frames
    }
}

/// Reorder the interior blocks of `next` to follow the labels of `prev` by
/// maximal frame overlap.
fn relabel(prev: &CMat, prev_blocks: &[Block], next: &Fiber, k: usize, kz: usize) -> (CMat, Vec<Block>) {
    let nint = prev_blocks.len() - kz;
    if nint <= 1 {
        return (next.frame.clone(), next.blocks.clone());
    }
    let cost: Vec<Vec<f64>> = (0..nint)
        .map(|a| {
            let pa = prev.columns(kz + a * k, k);
            (0..nint)
                .map(|b| {
                    let nb = next.frame.columns(kz + b * k, k);
                    let ov = (pa.adjoint() * nb).norm() / (k as f64).sqrt();
                    1.0 - ov
                })
                .collect()
        })
        .collect();
    let (_, perm) = bottleneck_assignment(&cost);
    let mut cols: Vec<usize> = (0..kz).collect();
    let mut blocks: Vec<Block> = next.blocks[..kz].to_vec();
    for &b in &perm {
        cols.extend(kz + b * k..kz + (b + 1) * k);
        blocks.push(next.blocks[kz + b]);
    }
    (linalg::select_columns(&next.frame, &cols), blocks)
}

/// Extension over the unit disk of a loop of cap data with square frames.
pub fn extend_disk(boundary: &[Fiber], k: usize) -> Result<DiskExtension> {
    DiskExtension::new(boundary, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix_rep::DimensionDropElement;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cap(frame: CMat, zeros: usize, interior: &[f64]) -> Fiber {
        let mut blocks = vec![Block::Zero; zeros];
        blocks.extend(interior.iter().map(|&t| Block::Interior(t)));
        Fiber { frame, blocks }
    }

    #[test]
    fn edge_midpoint_and_ends() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = cap(linalg::random_unitary(3, &mut rng), 1, &[0.2]);
        let b = cap(linalg::random_unitary(3, &mut rng), 1, &[0.4]);
        let e = EdgeExtension::new(&a, &b, 2).unwrap();
        let mid = e.eval(0.75);
        assert!(matches!(mid.blocks[1], Block::Interior(t) if (t - 0.3).abs() < 1e-12));
        let h = DimensionDropElement::identity_function(2);
        for (tau, target) in [(0.0, &a), (1.0, &b)] {
            let f = e.eval(tau);
            assert!(linalg::op_norm(&(f.assemble(&h).unwrap() - target.assemble(&h).unwrap())) < 1e-10);
        }
        let lo = e.eval(0.5);
        let hi = e.eval(0.5 + 1e-9);
        assert!(linalg::op_norm(&(lo.assemble(&h).unwrap() - hi.assemble(&h).unwrap())) < 1e-6);
    }

    #[test]
    fn edge_rejects_mismatched_counts() {
        let a = cap(linalg::identity(3), 1, &[0.2]);
        let b = cap(linalg::identity(3), 3, &[]);
        assert!(matches!(EdgeExtension::new(&a, &b, 2), Err(Error::EndpointIncompatibility(_))));
    }

    #[test]
    fn constant_edge_is_constant() {
        let a = cap(linalg::identity(3), 1, &[0.2]);
        let e = EdgeExtension::new(&a, &a, 2).unwrap();
        for f in e.sample(8) {
            assert!(linalg::op_norm(&(f.frame - linalg::identity(3))) < 1e-12);
        }
    }

    fn twisted_loop(m: usize, winding: i32) -> Vec<Fiber> {
        (0..m)
            .map(|j| {
                let th = j as f64 / m as f64;
                let mut w = linalg::identity(3);
                w[(0, 0)] = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * winding as f64 * th);
                cap(w, 1, &[0.03 + 0.01 * (2.0 * std::f64::consts::PI * th).cos()])
            })
            .collect()
    }

    #[test]
    fn disk_untwists_a_winding_loop() {
        let loop_ = twisted_loop(48, 1);
        let d = extend_disk(&loop_, 2).unwrap();
        assert_eq!(d.winding(), 1);
        let h = DimensionDropElement::identity_function(2);
        assert!(d.boundary_mismatch(&loop_, &[h.clone()]).unwrap() < 1e-6);
        let c0 = d.eval(0.0, 0.0).assemble(&h).unwrap();
        for th in [0.1, 0.4, 0.9] {
            assert!(linalg::op_norm(&(d.eval(0.0, th).assemble(&h).unwrap() - &c0)) < 1e-12);
            let a = d.eval(0.5, th).assemble(&h).unwrap();
            let b = d.eval(0.5 - 1e-9, th).assemble(&h).unwrap();
            assert!(linalg::op_norm(&(a - b)) < 1e-6);
        }
    }

    #[test]
    fn disk_contracts_a_generic_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u0 = linalg::random_unitary(4, &mut rng);
        let u1 = linalg::random_unitary(4, &mut rng);
        let l0 = linalg::unitary_log_any(&u0);
        let l1 = linalg::unitary_log_any(&u1);
        let m = 60;
        let loop_: Vec<Fiber> = (0..m)
            .map(|j| {
                let th = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
                let l = &l0 * linalg::c(3.0 * th.cos()) + &l1 * linalg::c(3.0 * th.sin());
                cap(linalg::exp_skew(&l), 2, &[0.05])
            })
            .collect();
        let d = extend_disk(&loop_, 2).unwrap();
        let h = DimensionDropElement::identity_function(2);
        assert!(d.boundary_mismatch(&loop_, &[h.clone()]).unwrap() < 1e-6);
        for i in 0..20 {
            let r = i as f64 / 20.0;
            let a = d.eval(r, 0.3).assemble(&h).unwrap();
            let b = d.eval(r + 0.01, 0.3).assemble(&h).unwrap();
            assert!(linalg::op_norm(&(a - b)) < 0.5);
        }
    }

    #[test]
    fn disk_without_endpoint_blocks_is_obstructed() {
        let m = 24;
        let loop_: Vec<Fiber> = (0..m)
            .map(|j| {
                let th = j as f64 / m as f64;
                let mut w = linalg::identity(2);
                w[(0, 0)] = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * th);
                cap(w, 0, &[0.02])
            })
            .collect();
        assert!(matches!(extend_disk(&loop_, 2), Err(Error::Obstruction(_))));
    }
}
