//! Dense complex linear algebra shared by the construction modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(r: usize, c: usize) -> CMat {
    CMat::zeros(r, c)
}

pub fn diag_real(values: &[f64]) -> CMat {
    let n = values.len();
    let mut m = zeros(n, n);
    for (i, v) in values.iter().enumerate() {
        m[(i, i)] = c(*v);
    }
    m
}

/// Kronecker product `a ⊗ b`, row index `i * b.nrows() + p`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            if s == Complex64::new(0.0, 0.0) {
                continue;
            }
            for p in 0..br {
                for q in 0..bc {
                    out[(i * br + p, j * bc + q)] = s * b[(p, q)];
                }
            }
        }
    }
    out
}

/// Eigen-decomposition of a hermitian matrix; eigenvalues ascending.
pub fn hermitian_eig(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), zeros(0, 0));
    }
    let h = (m + m.adjoint()) * c(0.5);
    let eig = h.symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = zeros(n, n);
    for (j, &i) in idx.iter().enumerate() {
        vecs.set_column(j, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    hermitian_eig(m).0
}

/// Operator (spectral) norm.
pub fn op_norm(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

pub fn unitarity_defect(u: &CMat) -> f64 {
    op_norm(&(u.adjoint() * u - identity(u.ncols())))
}

pub fn isometry_defect(v: &CMat) -> f64 {
    unitarity_defect(v)
}

/// Eigen-decomposition of a normal matrix via the complex Schur form, or via
/// a generic hermitian combination of its commuting parts when the QR
/// iteration stalls.
pub fn normal_eig(u: &CMat) -> (Vec<Complex64>, CMat) {
    let n = u.nrows();
    if n == 0 {
        return (Vec::new(), zeros(0, 0));
    }
    if let Some(schur) = nalgebra::linalg::Schur::try_new(u.clone(), f64::EPSILON, 500 * n) {
        let (q, t) = schur.unpack();
        let vals = (0..n).map(|i| t[(i, i)]).collect();
        return (vals, q);
    }
    let re = (u + u.adjoint()) * c(0.5);
    let im = (u - u.adjoint()) * Complex64::new(0.0, -0.5);
    let mix = &re + &im * c(0.577_215_664_901_532_9);
    let (_, q) = hermitian_eig(&((&mix + mix.adjoint()) * c(0.5)));
    let d = q.adjoint() * u * &q;
    let vals = (0..n).map(|i| d[(i, i)]).collect();
    (vals, q)
}

/// Principal logarithm of a unitary: an anti-hermitian `L` with `exp(L) = u`
/// and eigenvalue phases in `(-π, π]`.
pub fn unitary_log(u: &CMat) -> Result<CMat> {
    let (vals, q) = normal_eig(u);
    let mut d = zeros(vals.len(), vals.len());
    for (i, z) in vals.iter().enumerate() {
        let phase = z.arg();
        if (phase.abs() - std::f64::consts::PI).abs() < 1e-12 {
            return Err(Error::BranchAmbiguity(
                "eigenvalue -1 has no principal logarithm".into(),
            ));
        }
        d[(i, i)] = Complex64::new(0.0, phase);
    }
    Ok(&q * d * q.adjoint())
}

/// Logarithm of a unitary with every phase lifted into `(-π, π]`, choosing
/// `π` for eigenvalue `-1`. Used where any logarithm will do.
pub fn unitary_log_any(u: &CMat) -> CMat {
    let (vals, q) = normal_eig(u);
    let mut d = zeros(vals.len(), vals.len());
    for (i, z) in vals.iter().enumerate() {
        d[(i, i)] = Complex64::new(0.0, z.arg());
    }
    let l = &q * d * q.adjoint();
    (&l - l.adjoint()) * c(0.5)
}

/// `exp(L)` for anti-hermitian `L`.
pub fn exp_skew(l: &CMat) -> CMat {
    let n = l.nrows();
    if l.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        return identity(n);
    }
    let h = l * Complex64::new(0.0, -1.0);
    let (vals, v) = hermitian_eig(&h);
    let mut d = zeros(n, n);
    for (i, x) in vals.iter().enumerate() {
        d[(i, i)] = Complex64::from_polar(1.0, *x);
    }
    &v * d * v.adjoint()
}

/// Unitary polar factor of a square matrix.
pub fn polar_unitary(m: &CMat) -> CMat {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd u");
    let vt = svd.v_t.expect("svd v_t");
    u * vt
}

/// Orthonormal basis of the range of an orthogonal projection.
pub fn projection_basis(p: &CMat) -> CMat {
    let (vals, vecs) = hermitian_eig(p);
    let cols: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > 0.5).collect();
    let mut out = zeros(p.nrows(), cols.len());
    for (j, &i) in cols.iter().enumerate() {
        out.set_column(j, &vecs.column(i));
    }
    out
}

pub fn projection_rank(p: &CMat) -> usize {
    hermitian_eigenvalues(p).iter().filter(|&&v| v > 0.5).count()
}

/// Deviation of `p` from being an orthogonal projection.
pub fn projection_defect(p: &CMat) -> f64 {
    let herm = op_norm(&(p - p.adjoint()));
    let idem = op_norm(&(p * p - p));
    herm.max(idem)
}

/// Direct rotation taking the range of `p` onto the range of `q`.
///
/// Requires `‖p - q‖ < 1`; the result `w` is unitary with `w p w* = q` and is
/// the unitary closest to the identity with that property.
pub fn direct_rotation(p: &CMat, q: &CMat) -> Result<CMat> {
    let n = p.nrows();
    let d = p - q;
    let gap = op_norm(&d);
    if gap >= 1.0 - 1e-9 {
        return Err(Error::GapViolation(format!(
            "projections too far apart for a direct rotation ({gap:.3})"
        )));
    }
    let one = identity(n);
    let a = q * p + (&one - q) * (&one - p);
    let s = &one - &d * &d;
    let (vals, v) = hermitian_eig(&s);
    let mut inv = zeros(n, n);
    for (i, x) in vals.iter().enumerate() {
        inv[(i, i)] = c(1.0 / x.max(1e-300).sqrt());
    }
    Ok(a * (&v * inv * v.adjoint()))
}

/// Columns of `m` selected by index.
pub fn select_columns(m: &CMat, cols: &[usize]) -> CMat {
    let mut out = zeros(m.nrows(), cols.len());
    for (j, &i) in cols.iter().enumerate() {
        out.set_column(j, &m.column(i));
    }
    out
}

pub fn hstack(parts: &[&CMat], nrows: usize) -> CMat {
    let total: usize = parts.iter().map(|p| p.ncols()).sum();
    let mut out = zeros(nrows, total);
    let mut at = 0;
    for p in parts {
        for j in 0..p.ncols() {
            out.set_column(at + j, &p.column(j));
        }
        at += p.ncols();
    }
    out
}

/// Extend an isometry to a unitary by completing an orthonormal basis.
pub fn complete_to_unitary(v: &CMat) -> CMat {
    let n = v.nrows();
    let r = v.ncols();
    if r == n {
        return v.clone();
    }
    let comp = identity(n) - v * v.adjoint();
    let basis = projection_basis(&comp);
    hstack(&[v, &basis], n)
}

pub fn random_unitary<R: Rng>(n: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| Complex64::new(gauss(rng), gauss(rng)));
    let qr = g.qr();
    let (q, r) = qr.unpack();
    let mut fix = zeros(n, n);
    for i in 0..n {
        let d = r[(i, i)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { c(1.0) };
        fix[(i, i)] = ph;
    }
    q * fix
}

pub fn random_hermitian<R: Rng>(n: usize, scale: f64, rng: &mut R) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| Complex64::new(gauss(rng), gauss(rng)));
    (&g + g.adjoint()) * c(0.5 * scale)
}

pub fn gauss<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(1e-12..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn determinant(m: &CMat) -> Complex64 {
    if m.nrows() == 0 {
        return c(1.0);
    }
    m.clone().determinant()
}

pub fn column_vector(values: &[Complex64]) -> DVector<Complex64> {
    DVector::from_column_slice(values)
}

/// Serialize a complex matrix as rows of `[re, im]` pairs.
pub fn to_pairs(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn from_pairs(rows: &[Vec<[f64; 2]>]) -> Result<CMat> {
    let n = rows.len();
    let m = rows.first().map(|r| r.len()).unwrap_or(0);
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::Schema("ragged matrix rows".into()));
    }
    Ok(CMat::from_fn(n, m, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1])))
}
