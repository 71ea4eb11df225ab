//! Property tests of the structural invariants.

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dropdecomp::decomp_one::{partition_spectrum, winding_number};
use dropdecomp::linalg::{
    c, exp_skew, identity, op_norm, random_hermitian, random_unitary, unitarity_defect, unitary_log, CMat,
};
use dropdecomp::matrix_rep::{unitary_geodesic, Block, DimensionDropElement, Fiber};
use dropdecomp::simplicial::{retract_to_skeleton, Point, SimplicialComplex2};
use dropdecomp::spectra::{
    check_sdp, fractionalize, pair_within, pair_within_reals, pnk_distance, sorted_bottleneck, SpectralMultiset,
};

fn multiset(k: usize, e0: usize, pts: Vec<f64>, e1: usize) -> SpectralMultiset {
    SpectralMultiset::new(k, e0, pts.into_iter().map(|t| (t, 1)).collect(), e1).unwrap()
}

/// Three multisets sharing `(n, k)`: `m` interior points plus endpoint units
/// of the same residues.
fn same_class() -> impl Strategy<Value = (SpectralMultiset, SpectralMultiset, SpectralMultiset)> {
    (1usize..=4, 1usize..=5).prop_flat_map(|(k, m)| {
        let pts = prop::collection::vec(prop_oneof![Just(0.0), Just(1.0), 0.0f64..=1.0], m);
        (Just(k), 0..k, 0..k, pts.clone(), pts.clone(), pts)
    })
    .prop_map(|(k, e0, e1, a, b, cc)| (multiset(k, e0, a, e1), multiset(k, e0, b, e1), multiset(k, e0, cc, e1)))
}

fn random_point(x: &SimplicialComplex2, simplex: usize, w: (f64, f64, f64)) -> Point {
    let t = x.triangles()[simplex % x.triangles().len()];
    let s = w.0 + w.1 + w.2;
    Point::new(vec![(t[0], w.0 / s), (t[1], w.1 / s), (t[2], w.2 / s)]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn pnk_distance_is_a_metric((a, b, cc) in same_class()) {
        let tol = 1e-12;
        let ab = pnk_distance(&a, &b).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert!(pnk_distance(&a, &a).unwrap() <= tol);
        prop_assert_eq!(ab <= tol, a == b);
        prop_assert!((ab - pnk_distance(&b, &a).unwrap()).abs() <= tol);
        let ac = pnk_distance(&a, &cc).unwrap();
        let bc = pnk_distance(&b, &cc).unwrap();
        prop_assert!(ac <= ab + bc + tol);
    }

    #[test]
    fn sorted_pairing_matches_permutation_search(a in prop::collection::vec(0.0f64..=1.0, 1..7), shift in prop::collection::vec(-0.3f64..0.3, 7), eta in 0.001f64..0.5) {
        let mut b: Vec<f64> = a.iter().zip(&shift).map(|(x, s)| (x + s).clamp(0.0, 1.0)).collect();
        b.reverse();
        let within = pair_within_reals(&a, &b, eta).unwrap().is_some();
        prop_assert_eq!(within, brute_pairs(&a, &b, eta, &mut vec![false; b.len()], 0));
        prop_assert_eq!(within, sorted_bottleneck(&a, &b) < eta);
    }

    #[test]
    fn pairing_is_symmetric((a, b, _) in same_class(), eta in 0.0f64..0.6) {
        prop_assert_eq!(pair_within(&a, &b, eta).unwrap().is_some(), pair_within(&b, &a, eta).unwrap().is_some());
    }

    #[test]
    fn fractionalize_inverts_expansion((a, _, _) in same_class()) {
        let back = fractionalize(&a.expand(), a.k(), 1e-9).unwrap();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn sdp_is_monotone(
        spectra in prop::collection::vec(prop::collection::vec(0.0f64..=1.0, 1..6), 1..4),
        eta in 0.02f64..0.5,
        delta in 0.01f64..1.0,
        grow in 0.0f64..0.3,
        shrink in 0.0f64..1.0,
    ) {
        let ms: Vec<SpectralMultiset> = spectra.iter().map(|p| SpectralMultiset::from_points(p).unwrap()).collect();
        if check_sdp(&ms, eta, delta).unwrap().pass {
            let (eta2, delta2) = (eta + grow, delta * (1.0 - shrink).max(1e-3));
            prop_assert!(check_sdp(&ms, eta2, delta2).unwrap().pass);
        }
    }

    #[test]
    fn assemble_is_a_star_homomorphism(seed in 0u64..1000, pts in prop::collection::vec(0.0f64..=1.0, 1..4), zeros in 0usize..3, ones in 0usize..3) {
        let k = 2;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut blocks: Vec<Block> = pts.iter().map(|&t| Block::Interior(t)).collect();
        blocks.extend(std::iter::repeat(Block::Zero).take(zeros));
        blocks.extend(std::iter::repeat(Block::One).take(ones));
        let r: usize = blocks.iter().map(|b| b.width(k, 1)).sum();
        let frame = random_unitary(r + 1, &mut rng).columns(0, r).into_owned();
        let fiber = Fiber::new(frame, blocks, k, 1).unwrap();
        let f = random_element(k, &mut rng);
        let g = random_element(k, &mut rng);
        let tol = 1e-9;
        let (ff, gg) = (fiber.assemble(&f).unwrap(), fiber.assemble(&g).unwrap());
        prop_assert!(op_norm(&(fiber.assemble(&f.add(&g)).unwrap() - (&ff + &gg))) < tol);
        prop_assert!(op_norm(&(fiber.assemble(&f.mul(&g)).unwrap() - &ff * &gg)) < tol);
        prop_assert!(op_norm(&(fiber.assemble(&f.adjoint()).unwrap() - ff.adjoint())) < tol);
    }

    #[test]
    fn spectrum_reproduces_blocks(pts in prop::collection::vec(0.01f64..0.99, 1..4), zeros in 0usize..3, ones in 0usize..3, seed in 0u64..1000) {
        let k = 3;
        let mut blocks: Vec<Block> = pts.iter().map(|&t| Block::Interior(t)).collect();
        blocks.extend(std::iter::repeat(Block::Zero).take(zeros));
        blocks.extend(std::iter::repeat(Block::One).take(ones));
        let r: usize = blocks.iter().map(|b| b.width(k, 1)).sum();
        let frame = random_unitary(r, &mut ChaCha8Rng::seed_from_u64(seed));
        let fiber = Fiber::new(frame, blocks, k, 1).unwrap();
        let h = fiber.assemble(&DimensionDropElement::identity_function(k)).unwrap();
        let mut eig = dropdecomp::linalg::hermitian_eigenvalues(&h);
        eig.sort_by(f64::total_cmp);
        let mut expected = fiber.spectrum(k).unwrap().expand();
        expected.sort_by(f64::total_cmp);
        prop_assert_eq!(eig.len(), expected.len());
        for (a, b) in eig.iter().zip(&expected) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn unitary_geodesic_contracts(seed in 0u64..1000, n in 1usize..5, steps in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_unitary(n, &mut rng);
        let v = &u * exp_skew(&(random_hermitian(n, 0.8, &mut rng) * Complex64::new(0.0, 1.0)));
        let path = unitary_geodesic(&u, &v, steps).unwrap();
        prop_assert_eq!(path.len(), steps + 1);
        prop_assert!(op_norm(&(&path[0] - &u)) < 1e-10);
        prop_assert!(op_norm(&(&path[steps] - &v)) < 1e-10);
        for w in &path {
            prop_assert!(unitarity_defect(w) < 1e-10);
        }
    }

    #[test]
    fn principal_log_inverts_exp(seed in 0u64..1000, n in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = random_hermitian(n, 0.3, &mut rng) * Complex64::new(0.0, 1.0);
        let back = unitary_log(&exp_skew(&l)).unwrap();
        prop_assert!(op_norm(&(back - &l)) < 1e-9);
    }

    #[test]
    fn winding_number_counts_turns(m in -4i64..=4, samples in 64usize..256, phase in 0.0f64..6.0) {
        let dets: Vec<Complex64> = (0..samples)
            .map(|j| Complex64::from_polar(1.0, phase + 2.0 * std::f64::consts::PI * m as f64 * j as f64 / samples as f64))
            .collect();
        prop_assert_eq!(winding_number(&dets).unwrap(), m);
    }

    #[test]
    fn partition_envelopes_respect_bounds(eta in 0.05f64..0.5, n in 1usize..12, starts in prop::collection::vec(0.0f64..1.0, 1..12), lens in prop::collection::vec(0.0f64..1.0, 12)) {
        let w = eta / (12.0 * n as f64);
        let mut iv: Vec<(f64, f64)> = starts.iter().zip(&lens).map(|(&a, &s)| {
            let len = s * w;
            let a = a * (1.0 - len);
            (a, a + len)
        }).collect();
        iv.sort_by(|p, q| p.0.total_cmp(&q.0));
        let mut family: Vec<(f64, f64)> = Vec::new();
        for x in iv {
            if family.last().map_or(true, |l| x.0 > l.1) {
                family.push(x);
            }
        }
        family.truncate(n);
        let p = partition_spectrum(&family, eta, n).unwrap();
        prop_assert!(p.bound_violations().is_empty());
    }

    #[test]
    fn path_distance_is_a_metric(s in (0usize..6, 0usize..6, 0usize..6), w in prop::collection::vec((0.05f64..1.0, 0.05f64..1.0, 0.05f64..1.0), 3)) {
        let x = SimplicialComplex2::hexagon_disk();
        let a = random_point(&x, s.0, w[0]);
        let b = random_point(&x, s.1, w[1]);
        let cc = random_point(&x, s.2, w[2]);
        let tol = 2e-3;
        let ab = x.path_distance(&a, &b);
        prop_assert!(ab >= 0.0);
        prop_assert!(x.path_distance(&a, &a) < 1e-12);
        prop_assert!((ab - x.path_distance(&b, &a)).abs() < tol);
        prop_assert!(x.path_distance(&a, &cc) <= ab + x.path_distance(&b, &cc) + tol);
    }

    #[test]
    fn retraction_fixes_the_skeleton_and_is_idempotent(s in 0usize..6, w in (0.05f64..1.0, 0.05f64..1.0, 0.05f64..1.0), edge in 0usize..12, along in 0.0f64..=1.0) {
        let x = SimplicialComplex2::hexagon_disk();
        let punctures: Vec<Point> = x.triangles().iter().map(|t| x.barycenter(t)).collect();
        let r = retract_to_skeleton(&x, punctures).unwrap();
        let e = x.edges()[edge % x.edges().len()];
        let q = Point::lerp(x.position(e[0]), x.position(e[1]), along);
        prop_assert!(Point::chart_distance(&r.apply(&q).unwrap(), &q) < 1e-12);
        let p = random_point(&x, s, w);
        if let Ok(once) = r.apply(&p) {
            let twice = r.apply(&once).unwrap();
            prop_assert!(Point::chart_distance(&once, &twice) < 1e-12);
            prop_assert!(once.carrier().len() <= 2);
        }
    }
}

fn brute_pairs(a: &[f64], b: &[f64], eta: f64, used: &mut Vec<bool>, i: usize) -> bool {
    if i == a.len() {
        return true;
    }
    for j in 0..b.len() {
        if !used[j] && (a[i] - b[j]).abs() < eta {
            used[j] = true;
            let ok = brute_pairs(a, b, eta, used, i + 1);
            used[j] = false;
            if ok {
                return true;
            }
        }
    }
    false
}

fn random_element(k: usize, rng: &mut ChaCha8Rng) -> DimensionDropElement {
    let a0 = random_hermitian(1, 1.0, rng)[(0, 0)];
    let a1 = random_hermitian(1, 1.0, rng)[(0, 0)];
    let mid = random_hermitian(k, 1.0, rng) + random_hermitian(k, 1.0, rng) * Complex64::new(0.0, 1.0);
    let (s0, s1) = (a0 + Complex64::new(0.0, 0.3), a1 - Complex64::new(0.0, 0.2));
    let mid2 = mid.clone();
    let values = move |t: f64| -> CMat {
        let bump = c(4.0 * t * (1.0 - t));
        identity(k) * (s0 * c(1.0 - t) + s1 * c(t)) + &mid2 * bump
    };
    DimensionDropElement::new(
        k,
        1,
        "random",
        values,
        DMatrix::from_element(1, 1, s0),
        DMatrix::from_element(1, 1, s1),
        false,
    )
    .unwrap()
}
