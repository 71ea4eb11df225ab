use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c, direct_rotation, exp_skew, hstack, identity, op_norm, polar_unitary, projection_basis, projection_rank,
    unitary_log, unitary_log_any, CMat,
};
use crate::simplicial::{PLPath, Point};

use super::{equal_groups, spectral_pairing, tensor_defect, uniform_mesh, SpaceFunction, SpaceHom};

/// Block counts: `l1` base maps, `l2` copies each, `r` extra copies of the last.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterRanks {
    pub l1: usize,
    pub l2: usize,
    pub r: usize,
}

impl ClusterRanks {
    /// Multiplicity of `a_j` in `Θ(y)`, in units of `k`.
    pub fn multiplicity(&self, j: usize) -> usize {
        if j + 1 < self.l1 {
            self.l2
        } else {
            self.l2 + self.r
        }
    }

    /// Rank of the subprojection `p_j`.
    pub fn target(&self, j: usize, k: usize) -> usize {
        (self.multiplicity(j) - 3) * k
    }

    pub fn size(&self, k: usize) -> usize {
        (self.l1 * self.l2 + self.r) * k
    }
}

/// Cluster projection field on a uniform sample of `[0, 1]`.
#[derive(Debug, Clone)]
pub struct ClusterField {
    pub base: Vec<PLPath>,
    pub ranks: ClusterRanks,
    pub k: usize,
    pub samples: Vec<f64>,
    /// Cluster label of every spectral column, per sample.
    pub labels: Vec<Vec<usize>>,
    /// `P^j(y)` per sample.
    pub projections: Vec<Vec<CMat>>,
    /// `p_j(y)` per sample.
    pub subprojections: Vec<Vec<CMat>>,
    pub target_ranks: Vec<usize>,
    /// Sample index ranges of the overlapping windows.
    pub windows: Vec<(usize, usize)>,
    /// Largest change of a transported basis when re-aligned at a window start.
    pub patch_defect: f64,
    /// Smallest distance between two base points.
    pub separation: f64,
    /// Largest bottleneck distance between `Sp φ_y` and `Θ(y)`.
    pub pairing: f64,
    pub resolution_defect: f64,
    pub orthogonality_defect: f64,
    /// Largest `‖p_j − P^j p_j‖`.
    pub containment_defect: f64,
    /// True when every `p_j(y)` has its target rank.
    pub ranks_exact: bool,
    pub endpoint_defect: f64,
    /// `p′_j(0)` and `p′_j(1)` with `p_j = p′_j ⊗ 1_k` at the endpoints.
    pub endpoint_factors: Vec<[CMat; 2]>,
    pub p0_rank: usize,
}

impl ClusterField {
    /// `sup_{y, g} ‖φ(g)(y) − (p_0 φ(g)(y) p_0 + Σ g(a_j(y)) p_j(y))‖`.
    pub fn conclusion_error(&self, phi: &SpaceHom, family: &[SpaceFunction]) -> f64 {
        let n = self.ranks.size(self.k);
        let mut worst: f64 = 0.0;
        for (i, &y) in self.samples.iter().enumerate() {
            let fb = phi.fiber(y);
            let mut p0 = identity(n);
            for p in &self.subprojections[i] {
                p0 -= p;
            }
            let at: Vec<Point> = self.base.iter().map(|a| a.at(y)).collect();
            for g in family {
                let m = fb.assemble(g);
                let mut approx = &p0 * &m * &p0;
                for (j, p) in self.subprojections[i].iter().enumerate() {
                    approx += p * c(g.eval(&at[j]));
                }
                worst = worst.max(op_norm(&(m - approx)));
            }
        }
        worst
    }

    pub fn subprojection_rank(&self, sample: usize, j: usize) -> usize {
        projection_rank(&self.subprojections[sample][j])
    }
}

fn reduce(m: &CMat, k: usize) -> CMat {
    let l = m.nrows() / k;
    CMat::from_fn(l, l, |i, j| {
        (0..k).map(|p| m[(i * k + p, j * k + p)]).sum::<num_complex::Complex64>() / c(k as f64)
    })
}

/// Unitary `w` of the coordinate space with `w a w* = b` for projections of
/// equal rank.
fn rotation_between(a: &CMat, b: &CMat) -> CMat {
    let n = a.nrows();
    let one = identity(n);
    let ba = projection_basis(a);
    let bb = projection_basis(b);
    let ca = projection_basis(&(&one - a));
    let cb = projection_basis(&(&one - b));
    hstack(&[&bb, &cb], n) * hstack(&[&ba, &ca], n).adjoint()
}

/// Build cluster sets, spectral projection fields and rank-constrained
/// subprojections for `φ` against the base maps `a_1, …, a_{l1}`.
pub fn cluster_projections(phi: &SpaceHom, base: &[PLPath], eta: f64, ranks: ClusterRanks, steps: usize) -> Result<ClusterField> {
    let k = phi.k;
    let x = &phi.complex;
    if base.len() != ranks.l1 || ranks.l1 == 0 {
        return Err(Error::Malformed(format!("{} base maps for l1 = {}", base.len(), ranks.l1)));
    }
    if phi.size() != ranks.size(k) {
        return Err(Error::Malformed(format!(
            "fiber size {} but (l1·l2 + r)·k = {}",
            phi.size(),
            ranks.size(k)
        )));
    }
    if ranks.l2 < 3 {
        return Err(Error::Rank(format!("l2 = {} leaves no room for rank (l2 − 3)k", ranks.l2)));
    }
    let mut m = steps.max(4);
    'refine: loop {
        let samples = uniform_mesh(m);
        let mut labels = Vec::with_capacity(samples.len());
        let mut projections: Vec<Vec<CMat>> = Vec::with_capacity(samples.len());
        let mut separation = f64::INFINITY;
        let mut pairing: f64 = 0.0;
        for &y in &samples {
            let fb = phi.fiber(y);
            let at: Vec<Point> = base.iter().map(|a| a.at(y)).collect();
            for i in 0..at.len() {
                for j in i + 1..at.len() {
                    let d = x.path_distance(&at[i], &at[j]);
                    separation = separation.min(d);
                    if d <= 2.0 * eta {
                        return Err(Error::ClusterCollision(format!(
                            "a_{} and a_{} are {d:.4} apart at y = {y}",
                            i + 1,
                            j + 1
                        )));
                    }
                }
            }
            let theta: Vec<Point> = (0..ranks.l1)
                .flat_map(|j| std::iter::repeat(at[j].clone()).take(ranks.multiplicity(j) * k))
                .collect();
            let (d, _) = spectral_pairing(x, &fb.points, &theta)?;
            pairing = pairing.max(d);
            if d >= eta {
                return Err(Error::Hypothesis(format!("Sp φ and Θ are {d:.4} apart at y = {y}")));
            }
            let lab: Vec<usize> = fb
                .points
                .iter()
                .map(|p| {
                    let mut best = 0;
                    let mut bd = f64::INFINITY;
                    for (j, a) in at.iter().enumerate() {
                        let d = x.path_distance(p, a);
                        if d < bd - 1e-15 {
                            best = j;
                            bd = d;
                        }
                    }
                    best
                })
                .collect();
            for j in 0..ranks.l1 {
                let count = lab.iter().filter(|&&q| q == j).count();
                if count != ranks.multiplicity(j) * k {
                    return Err(Error::ClusterCollision(format!(
                        "cluster {} has {count} points at y = {y}",
                        j + 1
                    )));
                }
            }
            let ps: Vec<CMat> = (0..ranks.l1)
                .map(|j| {
                    let cols: Vec<usize> = (0..lab.len()).filter(|&q| lab[q] == j).collect();
                    fb.projection(&cols)
                })
                .collect();
            labels.push(lab);
            projections.push(ps);
        }
        for w in projections.windows(2) {
            for j in 0..ranks.l1 {
                if op_norm(&(&w[0][j] - &w[1][j])) >= 0.5 {
                    if m >= 1 << 14 {
                        return Err(Error::Continuity("cluster projections jump between samples".into()));
                    }
                    m *= 2;
                    continue 'refine;
                }
            }
        }
        return finish(phi, base, ranks, samples, labels, projections, separation, pairing);
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    phi: &SpaceHom,
    base: &[PLPath],
    ranks: ClusterRanks,
    samples: Vec<f64>,
    labels: Vec<Vec<usize>>,
    projections: Vec<Vec<CMat>>,
    separation: f64,
    pairing: f64,
) -> Result<ClusterField> {
    let k = phi.k;
    let x = &phi.complex;
    let n = ranks.size(k);
    let ns = samples.len();
    let width = (ns / 8).max(4);
    let mut windows = Vec::new();
    let mut start = 0;
    while start + 1 < ns {
        let end = (start + width).min(ns - 1);
        windows.push((start, end));
        if end == ns - 1 {
            break;
        }
        start += width / 2;
    }

    let mut subs: Vec<Vec<CMat>> = vec![Vec::with_capacity(ranks.l1); ns];
    let mut endpoint_factors = Vec::with_capacity(ranks.l1);
    let mut patch_defect: f64 = 0.0;
    let target_ranks: Vec<usize> = (0..ranks.l1).map(|j| ranks.target(j, k)).collect();
    for j in 0..ranks.l1 {
        let mut bases: Vec<CMat> = Vec::with_capacity(ns);
        bases.push(projection_basis(&projections[0][j]));
        let mut window_starts: Vec<usize> = windows.iter().map(|w| w.0).collect();
        window_starts.dedup();
        for i in 1..ns {
            let w = direct_rotation(&projections[i - 1][j], &projections[i][j])?;
            let moved = w * &bases[i - 1];
            let aligned = polar_unitary(&(&projections[i][j] * &moved));
            if window_starts.contains(&i) {
                patch_defect = patch_defect.max(op_norm(&(&aligned - &moved)));
            }
            bases.push(aligned);
        }
        let ends = [0usize, ns - 1];
        let mut pis = Vec::with_capacity(2);
        let mut factors: Vec<CMat> = Vec::with_capacity(2);
        for &si in &ends {
            let fb = phi.fiber(samples[si]);
            let a = base[j].at(samples[si]);
            let mut groups = equal_groups(&fb.points);
            if groups.iter().any(|g| g.len() != k) {
                groups = (0..n / k).map(|i| (i * k..(i + 1) * k).collect()).collect();
            }
            let mut groups: Vec<Vec<usize>> = groups.into_iter().filter(|g| labels[si][g[0]] == j).collect();
            groups.sort_by(|g, h| {
                x.path_distance(&fb.points[g[0]], &a)
                    .total_cmp(&x.path_distance(&fb.points[h[0]], &a))
                    .then(g[0].cmp(&h[0]))
            });
            let cols: Vec<usize> = groups.iter().take(target_ranks[j] / k).flatten().cloned().collect();
            let p = fb.projection(&cols);
            factors.push(reduce(&p, k));
            let b = &bases[si];
            pis.push(b.adjoint() * &p * b);
        }
        endpoint_factors.push([factors[0].clone(), factors[1].clone()]);
        let w = rotation_between(&pis[0], &pis[1]);
        let log = unitary_log(&w).unwrap_or_else(|_| unitary_log_any(&w));
        for i in 0..ns {
            let p = if i == 0 || i == ns - 1 {
                let b = &bases[i];
                let pi = if i == 0 { &pis[0] } else { &pis[1] };
                b * pi * b.adjoint()
            } else {
                let e = exp_skew(&(&log * c(samples[i])));
                let pi = &e * &pis[0] * e.adjoint();
                &bases[i] * pi * bases[i].adjoint()
            };
            subs[i].push(p);
        }
    }

    let one = identity(n);
    let mut resolution_defect: f64 = 0.0;
    let mut orthogonality_defect: f64 = 0.0;
    let mut containment_defect: f64 = 0.0;
    let mut ranks_exact = true;
    for i in 0..ns {
        let mut sum = CMat::zeros(n, n);
        for j in 0..ranks.l1 {
            sum += &projections[i][j];
            for q in j + 1..ranks.l1 {
                orthogonality_defect = orthogonality_defect.max(op_norm(&(&projections[i][j] * &projections[i][q])));
            }
            let p = &subs[i][j];
            containment_defect = containment_defect.max(op_norm(&(p - &projections[i][j] * p)));
            if projection_rank(p) != target_ranks[j] {
                ranks_exact = false;
            }
        }
        resolution_defect = resolution_defect.max(op_norm(&(sum - &one)));
    }
    let mut endpoint_defect: f64 = 0.0;
    for i in [0, ns - 1] {
        for p in &subs[i] {
            endpoint_defect = endpoint_defect.max(tensor_defect(p, k));
        }
    }
    let mut p0 = one.clone();
    for p in &subs[0] {
        p0 -= p;
    }
    let p0_rank = projection_rank(&p0);
    Ok(ClusterField {
        base: base.to_vec(),
        ranks,
        k,
        samples,
        labels,
        projections,
        subprojections: subs,
        target_ranks,
        windows,
        patch_defect,
        separation,
        pairing,
        resolution_defect,
        orthogonality_defect,
        containment_defect,
        ranks_exact,
        endpoint_defect,
        endpoint_factors,
        p0_rank,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp_two::{coordinate_functions, SpaceFiber};
    use crate::linalg::{kron, random_unitary};
    use crate::simplicial::SimplicialComplex2;
    use rand::SeedableRng;

    /// Two base paths on a path graph, spectrum exactly `Θ(y)` spread by
    /// small distinct offsets in the interior.
    fn fixture(jitter: f64) -> (SpaceHom, Vec<PLPath>, ClusterRanks) {
        let x = SimplicialComplex2::path_graph(4);
        let ranks = ClusterRanks { l1: 2, l2: 4, r: 1 };
        let k = 2;
        let a1 = PLPath {
            breakpoints: vec![0.0, 1.0],
            points: vec![Point::vertex(0), Point::new(vec![(0, 0.5), (1, 0.5)]).unwrap()],
        };
        let a2 = PLPath {
            breakpoints: vec![0.0, 1.0],
            points: vec![Point::vertex(3), Point::new(vec![(2, 0.5), (3, 0.5)]).unwrap()],
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let l = ranks.l1 * ranks.l2 + ranks.r;
        let u0 = random_unitary(l, &mut rng);
        let u1 = random_unitary(l, &mut rng);
        let lu = unitary_log_any(&(u0.adjoint() * &u1));
        let h = crate::linalg::random_hermitian(l * k, 1.0, &mut rng);
        let (b1, b2) = (a1.clone(), a2.clone());
        let phi = SpaceHom::from_fn(l, k, x.clone(), move |y| {
            let mult = |j: usize| ranks.multiplicity(j);
            let mut pts = Vec::new();
            for (j, a) in [&b1, &b2].iter().enumerate() {
                let p = a.at(y);
                for q in 0..mult(j) {
                    let nb = if j == 0 { 1 } else { 2 };
                    let off = jitter * (q as f64 + 1.0) * (1.0 + y * (1.0 - y));
                    let moved = Point::lerp(&p, &Point::vertex(nb), off);
                    for _ in 0..k {
                        pts.push(moved.clone());
                    }
                }
            }
            let u = &u0 * exp_skew(&(&lu * c(y)));
            let frame = kron(&u, &identity(k)) * exp_skew(&(&h * num_complex::Complex64::new(0.0, 4.0 * y * (1.0 - y))));
            SpaceFiber { frame, points: pts }
        });
        (phi, vec![a1, a2], ranks)
    }

    #[test]
    fn constructed_instance_meets_rank_targets() {
        let (phi, base, ranks) = fixture(0.01);
        let f = cluster_projections(&phi, &base, 0.2, ranks, 32).unwrap();
        assert!(f.ranks_exact);
        assert_eq!(f.target_ranks, vec![2, 4]);
        assert!(f.resolution_defect < 1e-8);
        assert!(f.orthogonality_defect < 1e-8);
        assert!(f.endpoint_defect < 1e-8, "{}", f.endpoint_defect);
        assert_eq!(f.p0_rank, 3 * ranks.l1 * phi.k);
        let fam = coordinate_functions(&phi.complex);
        assert!(f.conclusion_error(&phi, &fam) < 0.2);
    }

    #[test]
    fn exact_form_has_zero_error() {
        let (phi, base, ranks) = fixture(0.0);
        let f = cluster_projections(&phi, &base, 0.2, ranks, 16).unwrap();
        let fam = coordinate_functions(&phi.complex);
        assert!(f.conclusion_error(&phi, &fam) < 1e-10);
    }

    #[test]
    fn merging_clusters_are_reported() {
        let (phi, base, ranks) = fixture(0.0);
        assert!(matches!(
            cluster_projections(&phi, &base, 1.2, ranks, 16),
            Err(Error::ClusterCollision(_))
        ));
    }

    #[test]
    fn small_l2_is_a_rank_error() {
        let x = SimplicialComplex2::interval();
        let phi = SpaceHom::from_fn(2, 1, x, |_| SpaceFiber::diagonal(vec![Point::vertex(0), Point::vertex(1)]));
        let base = vec![PLPath::constant(Point::vertex(0))];
        let ranks = ClusterRanks { l1: 1, l2: 2, r: 0 };
        assert!(matches!(cluster_projections(&phi, &base, 0.1, ranks, 8), Err(Error::Rank(_))));
    }
}
