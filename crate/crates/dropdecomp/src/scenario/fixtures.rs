//! Seeded generators whose output satisfies a named hypothesis.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decomp_one::zero_count;
use crate::decomp_two::{
    spectral_pairing, synthetic_instance, ClusterRanks, SpaceFiber, SpaceHom, SyntheticInstance,
};
use crate::error::{Error, Result};
use crate::linalg::{c, exp_skew, identity, kron, random_hermitian, random_unitary, unitary_log_any, CMat};
use crate::matrix_rep::{Block, Fiber, HomField};
use crate::simplicial::{PLPath, Point, SimplicialComplex2};
use crate::spectra::{check_sdp, SpectralMultiset};

fn skew<R: Rng>(n: usize, scale: f64, rng: &mut R) -> CMat {
    random_hermitian(n, scale, rng) * Complex64::new(0.0, 1.0)
}

fn endpoint_blocks(fiber: &Fiber) -> (usize, usize) {
    let ones = fiber.blocks.iter().filter(|b| matches!(b, Block::One)).count();
    (zero_count(fiber), ones)
}

/// Homomorphism field over `complex` with `rank` eigenvalues, at least `k`
/// of them pinned at `0` and `k` at `1` at every point. Interior positions
/// move by at most `amplitude`; with `cap_offset > 0` and two or more
/// interior blocks, the outermost sit near `cap_offset` and `1 - cap_offset`.
pub fn endpoint_mass_field(
    complex: &SimplicialComplex2,
    k: usize,
    rank: usize,
    amplitude: f64,
    cap_offset: f64,
    seed: u64,
) -> Result<HomField> {
    if k == 0 {
        return Err(Error::Domain("k must be positive".into()));
    }
    if rank < 2 * k {
        return Err(Error::Infeasible(format!(
            "rank {rank} cannot hold {k} eigenvalues at each endpoint"
        )));
    }
    let interior = (rank - 2 * k) / k;
    let zeros = k + (rank - 2 * k) % k;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nv = complex.num_vertices();
    let mut centers: Vec<f64> = (0..interior)
        .map(|j| 0.25 + 0.5 * (j as f64 + 0.5) / interior as f64)
        .collect();
    if cap_offset > 0.0 && interior >= 2 {
        centers[0] = cap_offset;
        centers[interior - 1] = 1.0 - cap_offset;
    }
    let slopes: Vec<Vec<f64>> = (0..interior)
        .map(|_| (0..nv).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let gens: Vec<CMat> = (0..nv).map(|_| skew(rank, 0.3 / (rank as f64).sqrt(), &mut rng)).collect();
    let u0 = random_unitary(rank, &mut rng);
    let src = Arc::new(move |x: &Point| {
        let mut l = CMat::zeros(rank, rank);
        for &(v, w) in x.coords() {
            l += &gens[v] * c(w);
        }
        let frame = &u0 * exp_skew(&l);
        let mut blocks = vec![Block::Zero; zeros];
        for (j, &t) in centers.iter().enumerate() {
            let shift: f64 = x.coords().iter().map(|&(v, w)| w * slopes[j][v]).sum();
            blocks.push(Block::Interior(t + amplitude * shift));
        }
        blocks.extend(std::iter::repeat(Block::One).take(k));
        Fiber::new(frame, blocks, k, 1)
    });
    let field = HomField::new(k, complex.clone(), src);
    for p in complex.sample_points(2) {
        let (z, o) = endpoint_blocks(&field.fiber(&p)?);
        if z < k || o < k {
            return Err(Error::Hypothesis(format!("endpoint mass ({z}, {o}) below {k}")));
        }
    }
    Ok(field)
}

/// Loop of caps around a disk boundary with `kprime` endpoint blocks, two
/// interior blocks near `0` and determinant winding `winding`.
pub fn boundary_loop(k: usize, kprime: usize, winding: i32, m: usize, seed: u64) -> Vec<Fiber> {
    let n = kprime + 2 * k;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l0 = skew(n, 0.4, &mut rng);
    let l1 = skew(n, 0.4, &mut rng);
    let u0 = random_unitary(n, &mut rng);
    (0..m)
        .map(|j| {
            let th = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
            let mut w = identity(n);
            w[(0, 0)] = Complex64::from_polar(1.0, winding as f64 * th);
            let l = &l0 * c(th.cos()) + &l1 * c(th.sin());
            let frame = &u0 * exp_skew(&l) * w;
            let mut blocks = vec![Block::Zero; kprime];
            blocks.push(Block::Interior(0.03 + 0.01 * th.cos()));
            blocks.push(Block::Interior(0.06 + 0.01 * th.sin()));
            Fiber { frame, blocks }
        })
        .collect()
}

/// Spectra at `samples` points with `n` evenly spread interior points each,
/// checked against `sdp(η, δ)`.
pub fn sdp_spectra(n: usize, k: usize, samples: usize, eta: f64, delta: f64, seed: u64) -> Result<Vec<SpectralMultiset>> {
    if n == 0 || samples == 0 {
        return Err(Error::Infeasible("need at least one point and one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phases: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
    let jitter = 0.25 / n as f64;
    let spectra = (0..samples)
        .map(|s| {
            let y = s as f64 / samples.max(2).saturating_sub(1) as f64;
            let pts = (0..n)
                .map(|j| ((j as f64 + 0.5) / n as f64 + jitter * (phases[j] + 3.0 * y).sin(), 1))
                .collect();
            SpectralMultiset::new(k, 0, pts, 0)
        })
        .collect::<Result<Vec<_>>>()?;
    let report = check_sdp(&spectra, eta, delta)?;
    if !report.pass {
        return Err(Error::Hypothesis(format!(
            "generated spectra miss sdp({eta}, {delta}): fraction {}",
            report.worst_fraction
        )));
    }
    Ok(spectra)
}

/// Moving spectrum over the hexagonal disk: each point travels along a chord
/// of one triangle, with a frame that is `u ⊗ 1_k` only at the endpoints.
pub fn skeleton_fixture(l: usize, k: usize, seed: u64) -> SpaceHom {
    let x = SimplicialComplex2::hexagon_disk();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inner = |tri: [usize; 3], rng: &mut ChaCha8Rng| {
        let w: Vec<f64> = (0..3).map(|_| rng.gen_range(0.1..1.0)).collect();
        let s: f64 = w.iter().sum();
        Point::new(tri.iter().zip(&w).map(|(&v, &a)| (v, a / s)).collect()).expect("valid")
    };
    let chords: Vec<(Point, Point)> = (0..l)
        .map(|_| {
            let tri = x.triangles()[rng.gen_range(0..x.triangles().len())];
            (inner(tri, &mut rng), inner(tri, &mut rng))
        })
        .collect();
    let u0 = random_unitary(l, &mut rng);
    let lu = skew(l, 0.5, &mut rng);
    let twist = skew(l * k, 0.5, &mut rng);
    SpaceHom::from_fn(l, k, x, move |t| {
        let pts: Vec<Point> = chords.iter().map(|(a, b)| Point::lerp(a, b, t)).collect();
        let u = &u0 * exp_skew(&(&lu * c(t)));
        let mut f = SpaceFiber::endpoint(&u, &pts, k);
        f.frame = f.frame * exp_skew(&(&twist * c(4.0 * t * (1.0 - t))));
        f
    })
}

fn on_path_graph(s: f64, n: usize) -> Point {
    let s = s.clamp(0.0, (n - 1) as f64);
    let e = (s.floor() as usize).min(n - 2);
    let a = s - e as f64;
    if a == 0.0 {
        Point::vertex(e)
    } else if a == 1.0 {
        Point::vertex(e + 1)
    } else {
        Point::new(vec![(e, 1.0 - a), (e + 1, a)]).expect("valid")
    }
}

/// Points walking linearly along a path graph on four vertices; the walks
/// cross, so interior spectra collide. Endpoint fibers are `u ⊗ 1_k`.
pub fn crossing_fixture(l: usize, k: usize, seed: u64) -> SpaceHom {
    let n = 4;
    let x = SimplicialComplex2::path_graph(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let walks: Vec<(f64, f64)> = (0..l)
        .map(|j| {
            let a = rng.gen_range(0.0..3.0);
            let b = if j % 2 == 0 { 3.0 - a } else { rng.gen_range(0.0..3.0) };
            (a, b)
        })
        .collect();
    let u0 = random_unitary(l, &mut rng);
    let lu = skew(l, 0.5, &mut rng);
    SpaceHom::from_fn(l, k, x, move |t| {
        let pts: Vec<Point> = walks.iter().map(|&(a, b)| on_path_graph(a + (b - a) * t, n)).collect();
        SpaceFiber::endpoint(&(&u0 * exp_skew(&(&lu * c(t)))), &pts, k)
    })
}

/// A `Θ(y)`-paired instance: base path `a_j` runs from vertex `2j` of a path
/// graph to the midpoint of the next edge, and the spectrum is `Θ(y)` with
/// cluster members offset by `jitter` steps toward vertex `2j + 1`.
pub fn cluster_fixture(ranks: ClusterRanks, k: usize, jitter: f64, eta: f64, seed: u64) -> Result<(SpaceHom, Vec<PLPath>)> {
    if ranks.l1 == 0 || k == 0 {
        return Err(Error::Infeasible("need l_1 >= 1 and k >= 1".into()));
    }
    let x = SimplicialComplex2::path_graph(2 * ranks.l1);
    let base: Vec<PLPath> = (0..ranks.l1)
        .map(|j| PLPath {
            breakpoints: vec![0.0, 1.0],
            points: vec![
                Point::vertex(2 * j),
                Point::new(vec![(2 * j, 0.5), (2 * j + 1, 0.5)]).expect("valid"),
            ],
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = ranks.l1 * ranks.l2 + ranks.r;
    let u0 = random_unitary(l, &mut rng);
    let lu = unitary_log_any(&(u0.adjoint() * random_unitary(l, &mut rng)));
    let h = random_hermitian(l * k, 1.0, &mut rng);
    let paths = base.clone();
    let phi = SpaceHom::from_fn(l, k, x.clone(), move |y| {
        let mut pts = Vec::with_capacity(l * k);
        for (j, a) in paths.iter().enumerate() {
            let p = a.at(y);
            for q in 0..ranks.multiplicity(j) {
                let off = jitter * (q as f64 + 1.0) * (1.0 + y * (1.0 - y));
                let moved = Point::lerp(&p, &Point::vertex(2 * j + 1), off);
                pts.extend(std::iter::repeat(moved).take(k));
            }
        }
        let u = &u0 * exp_skew(&(&lu * c(y)));
        let frame = kron(&u, &identity(k)) * exp_skew(&(&h * Complex64::new(0.0, 4.0 * y * (1.0 - y))));
        SpaceFiber { frame, points: pts }
    });
    for i in 0..=8 {
        let y = i as f64 / 8.0;
        let mut theta = Vec::new();
        for (j, a) in base.iter().enumerate() {
            theta.extend(std::iter::repeat(a.at(y)).take(ranks.multiplicity(j) * k));
        }
        let (d, _) = spectral_pairing(&x, &phi.fiber(y).points, &theta)?;
        if d >= eta {
            return Err(Error::Hypothesis(format!("spectrum at y = {y} pairs with Θ(y) only within {d}")));
        }
    }
    Ok((phi, base))
}

/// Single-clause corruption of a synthetic witness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mutation {
    None,
    Partition,
    Closeness,
    Factorization,
    Rank,
    Density,
}

impl Mutation {
    /// Clause expected to catch the mutation.
    pub fn clause(&self) -> Option<&'static str> {
        match self {
            Mutation::None => None,
            Mutation::Partition => Some("partition"),
            Mutation::Closeness => Some("closeness_phi"),
            Mutation::Factorization => Some("interval_factorization"),
            Mutation::Rank => Some("rank"),
            Mutation::Density => Some("density"),
        }
    }
}

fn interval_point(s: f64) -> Point {
    on_path_graph(s, 2)
}

/// Synthetic witness over `[0, 1]` with the given mutation applied.
pub fn witness_fixture(mutation: Mutation, seed: u64) -> SyntheticInstance {
    let x = SimplicialComplex2::interval();
    let arc = PLPath {
        breakpoints: vec![0.0, 1.0],
        points: vec![Point::vertex(0), Point::vertex(1)],
    };
    let (xs, mult): (Vec<f64>, usize) = match mutation {
        Mutation::Rank => (vec![0.2, 0.5, 0.8], 3),
        Mutation::Density => (vec![0.2, 0.5], 4),
        _ => (vec![0.2, 0.5, 0.8], 4),
    };
    let pts: Vec<Point> = xs.iter().map(|&s| interval_point(s)).collect();
    let mut s = synthetic_instance(&x, &pts, mult, &arc, seed);
    match mutation {
        Mutation::Partition => s.decomp.q2[1] *= c(1.01),
        Mutation::Closeness => s.decomp.points[0] = interval_point(0.25),
        Mutation::Factorization => {
            s.decomp.arc = PLPath {
                breakpoints: vec![0.0, 1.0],
                points: vec![Point::vertex(0), interval_point(0.2)],
            }
        }
        _ => {}
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp_one::extend_disk;
    use crate::decomp_two::verify_decomposition;

    #[test]
    fn endpoint_mass_counts() {
        let x = SimplicialComplex2::hexagon_disk();
        let f = endpoint_mass_field(&x, 2, 6, 0.05, 0.0, 1).unwrap();
        let fib = f.fiber(&Point::vertex(3)).unwrap();
        assert_eq!(fib.rank(), 6);
        assert_eq!(endpoint_blocks(&fib), (2, 2));
        assert!(matches!(endpoint_mass_field(&x, 2, 1, 0.05, 0.0, 1), Err(Error::Infeasible(_))));
        let odd = f.fiber(&Point::vertex(0)).unwrap();
        assert_eq!(odd.rank(), 6);
        let f = endpoint_mass_field(&x, 2, 7, 0.05, 0.0, 1).unwrap();
        assert_eq!(endpoint_blocks(&f.fiber(&Point::vertex(0)).unwrap()), (3, 2));
    }

    #[test]
    fn boundary_loops_extend_unless_obstructed() {
        let l = boundary_loop(2, 1, 1, 48, 3);
        let d = extend_disk(&l, 2).unwrap();
        assert_eq!(d.zero_blocks(), 1);
        assert!(matches!(extend_disk(&boundary_loop(2, 0, 1, 48, 3), 2), Err(Error::Obstruction(_))));
    }

    #[test]
    fn sdp_spectra_pass_their_check() {
        let s = sdp_spectra(10, 2, 5, 0.3, 0.1, 4).unwrap();
        assert_eq!(s.len(), 5);
        assert!(matches!(sdp_spectra(2, 1, 3, 0.05, 0.9, 4), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn witness_mutations_hit_their_clause() {
        for m in [Mutation::None, Mutation::Partition, Mutation::Closeness, Mutation::Factorization, Mutation::Rank, Mutation::Density] {
            let s = witness_fixture(m, 2);
            let v = verify_decomposition(&s.decomp, &s.phi, &s.psi, &s.family, &s.params).unwrap();
            match m.clause() {
                None => assert!(v.pass),
                Some(name) => assert!(v.failures().contains(&name), "{m:?}: {:?}", v.failures()),
            }
        }
    }

    #[test]
    fn cluster_fixture_pairs_with_theta() {
        let ranks = ClusterRanks { l1: 3, l2: 5, r: 2 };
        let (phi, base) = cluster_fixture(ranks, 3, 0.005, 0.2, 9).unwrap();
        assert_eq!(base.len(), 3);
        assert_eq!(phi.size(), ranks.size(3));
    }
}
