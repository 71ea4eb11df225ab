//! Acceptance suite: one line per criterion, then a single assertion over all.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dropdecomp::decomp_one::{decompose_theorem_i, eta_for, extend_disk, partition_spectrum, winding_number, zero_count};
use dropdecomp::decomp_two::{
    cluster_projections, coordinate_functions, make_distinct_spectrum, reduce_to_skeleton, verify_decomposition,
    ClusterRanks,
};
use dropdecomp::matrix_rep::DimensionDropElement;
use dropdecomp::scenario::{
    boundary_loop, cluster_fixture, crossing_fixture, endpoint_mass_field, skeleton_fixture, witness_fixture, Mutation,
};
use dropdecomp::simplicial::SimplicialComplex2;
use dropdecomp::spectra::{pair_within, pnk_distance, SpectralMultiset};
use dropdecomp::Error;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_multiset(rng: &mut ChaCha8Rng, n: usize, k: usize) -> SpectralMultiset {
    let m = rng.gen_range(0..=n / k);
    let rest = n - m * k;
    let e0 = rng.gen_range(0..=rest);
    let interior: Vec<(f64, usize)> = (0..m)
        .map(|_| match rng.gen_range(0..10) {
            0 => (0.0, 1),
            1 => (1.0, 1),
            _ => (rng.gen_range(0.0..1.0), 1),
        })
        .collect();
    SpectralMultiset::new(k, e0, interior, rest - e0).unwrap()
}

fn metric_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let tol = 1e-12;
    let mut violations = 0;
    let mut triples = 0;
    for &(n, k) in &[(4, 2), (6, 2), (6, 3), (8, 4)] {
        for _ in 0..1000 {
            let a = random_multiset(&mut rng, n, k);
            let b = random_multiset(&mut rng, n, k);
            let c = random_multiset(&mut rng, n, k);
            let (ab, ba) = (pnk_distance(&a, &b).unwrap(), pnk_distance(&b, &a).unwrap());
            let (bc, ac) = (pnk_distance(&b, &c).unwrap(), pnk_distance(&a, &c).unwrap());
            let aa = pnk_distance(&a, &a).unwrap();
            let ok = ab >= 0.0
                && aa.abs() <= tol
                && ((ab <= tol) == (a == b))
                && (ab - ba).abs() <= tol
                && ac <= ab + bc + tol;
            if !ok {
                violations += 1;
            }
            triples += 1;
        }
    }
    outcome(violations == 0, format!("{triples} triples, {violations} violations"))
}

fn permutation_pairs(a: &[f64], b: &[f64], eta: f64, used: &mut Vec<bool>, i: usize) -> bool {
    if i == a.len() {
        return true;
    }
    for j in 0..b.len() {
        if !used[j] && (a[i] - b[j]).abs() < eta {
            used[j] = true;
            if permutation_pairs(a, b, eta, used, i + 1) {
                used[j] = false;
                return true;
            }
            used[j] = false;
        }
    }
    false
}

fn pairing_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut disagreements = 0;
    for _ in 0..500 {
        let k = rng.gen_range(1..=3);
        let n = rng.gen_range(1..=8);
        let a = random_multiset(&mut rng, n, k);
        let b = random_multiset(&mut rng, n, k);
        let eta = rng.gen_range(0.0..0.6);
        let fast = pair_within(&a, &b, eta).unwrap().is_some();
        let same_class = a.units_at_zero() % k == b.units_at_zero() % k
            && a.units_at_one() % k == b.units_at_one() % k
            && a.points().len() == b.points().len();
        let brute = same_class && {
            let (pa, pb) = (a.points(), b.points());
            permutation_pairs(&pa, &pb, eta, &mut vec![false; pb.len()], 0)
        };
        if fast != brute {
            disagreements += 1;
        }
    }
    outcome(disagreements == 0, format!("500 instances, {disagreements} disagreements"))
}

fn partition_bounds() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut violations = 0;
    let mut errors = 0;
    for _ in 0..1000 {
        let eta = rng.gen_range(0.05..0.5);
        let n = rng.gen_range(1..=12);
        let w = eta / (12.0 * n as f64);
        let mut iv: Vec<(f64, f64)> = (0..rng.gen_range(1..=n))
            .map(|_| {
                let len = rng.gen_range(0.0..=w);
                let a = rng.gen_range(0.0..=1.0 - len);
                (a, a + len)
            })
            .collect();
        iv.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
        let mut family: Vec<(f64, f64)> = Vec::new();
        for x in iv {
            if family.last().map_or(true, |l| x.0 > l.1) {
                family.push(x);
            }
        }
        match partition_spectrum(&family, eta, n) {
            Ok(p) => violations += p.bound_violations().len(),
            Err(_) => errors += 1,
        }
    }
    outcome(
        violations == 0 && errors == 0,
        format!("1000 families, {violations} bound violations, {errors} rejected"),
    )
}

fn theorem_one() -> Outcome {
    let disk = SimplicialComplex2::hexagon_disk();
    let mut failures = Vec::new();
    let mut worst_ratio: f64 = 0.0;
    for seed in 0..20u64 {
        let k = 2 + (seed % 2) as usize;
        let rank = [6, 8, 10, 12, 16][(seed / 2 % 5) as usize].max(2 * k);
        let epsilon = if seed < 10 { 0.2 } else { 0.5 };
        let family = vec![
            DimensionDropElement::identity_function(k),
            DimensionDropElement::scalar(k, "t^2", |t| t * t),
        ];
        let eta = eta_for(&family, epsilon).unwrap();
        let phi = endpoint_mass_field(&disk, k, rank, eta / (48.0 * rank as f64), eta / 8.0, seed).unwrap();
        match decompose_theorem_i(&phi, &family, epsilon) {
            Ok(d) => {
                let c = &d.certificate;
                worst_ratio = worst_ratio.max(c.max_error / epsilon);
                let ok = c.max_error < epsilon
                    && c.rank_q0 <= k
                    && c.rank_q1 <= k
                    && c.projection_sum_defect <= 1e-8
                    && c.sdp_identity();
                if !ok {
                    failures.push(format!(
                        "seed {seed}: error {:.3e}, ranks ({}, {}), sum defect {:.1e}, sdp mismatches {}",
                        c.max_error,
                        c.rank_q0,
                        c.rank_q1,
                        c.projection_sum_defect,
                        c.sdp_mismatches.len()
                    ));
                }
            }
            Err(e) => failures.push(format!("seed {seed}: {e}")),
        }
    }
    outcome(
        failures.is_empty(),
        format!("20 fixtures, worst error/ε {worst_ratio:.3}; {}", failures.join("; ")),
    )
}

fn disk_extension() -> Outcome {
    let mut failures = Vec::new();
    for i in 0..10u64 {
        let k = 2 + (i % 2) as usize;
        let kprime = 1 + (i as usize / 2) % k;
        let winding = (i % 3) as i32 - 1;
        let boundary = boundary_loop(k, kprime, winding, 64, i);
        let family = vec![
            DimensionDropElement::identity_function(k),
            DimensionDropElement::scalar(k, "t^2", |t| t * t),
        ];
        match extend_disk(&boundary, k) {
            Ok(d) => {
                let mismatch = d.boundary_mismatch(&boundary, &family).unwrap();
                let mut bad = 0;
                for a in 0..10 {
                    for b in 0..16 {
                        let f = d.eval(a as f64 / 10.0, b as f64 / 16.0);
                        if zero_count(&f) != kprime {
                            bad += 1;
                        }
                    }
                }
                if mismatch >= 1e-6 || bad > 0 || d.zero_blocks() != kprime {
                    failures.push(format!("fixture {i}: mismatch {mismatch:.2e}, {bad} samples off k′"));
                }
            }
            Err(e) => failures.push(format!("fixture {i}: {e}")),
        }
    }
    let obstructed = matches!(extend_disk(&boundary_loop(2, 0, 1, 64, 99), 2), Err(Error::Obstruction(_)));
    if !obstructed {
        failures.push("k′ = 0 fixture not obstructed".into());
    }
    outcome(failures.is_empty(), format!("10 fixtures + obstruction; {}", failures.join("; ")))
}

fn winding_numbers() -> Outcome {
    let mut bad = Vec::new();
    for m in -3i64..=3 {
        let dets: Vec<Complex64> = (0..720)
            .map(|j| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (m * j) as f64 / 720.0))
            .collect();
        match winding_number(&dets) {
            Ok(w) if w == m => {}
            other => bad.push(format!("m = {m}: {other:?}")),
        }
    }
    outcome(bad.is_empty(), format!("m ∈ -3..=3 at 720 samples; {}", bad.join("; ")))
}

fn skeleton() -> Outcome {
    let (epsilon, eta) = (0.5, 0.5);
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for seed in 0..10u64 {
        let l = 1 + (seed % 3) as usize;
        let k = 1 + (seed % 2) as usize;
        let phi = skeleton_fixture(l, k, seed);
        let family = coordinate_functions(&phi.complex);
        match reduce_to_skeleton(&phi, &family, epsilon, eta) {
            Ok(r) => {
                worst = worst.max(r.error);
                if !(r.error < epsilon && r.pairing < eta && r.sigma > 0.0) {
                    failures.push(format!(
                        "seed {seed}: error {:.3}, pairing {:.3}, σ {:.2e}",
                        r.error, r.pairing, r.sigma
                    ));
                }
            }
            Err(e) => failures.push(format!("seed {seed}: {e}")),
        }
    }
    outcome(failures.is_empty(), format!("10 fixtures, worst error {worst:.3}; {}", failures.join("; ")))
}

fn distinct() -> Outcome {
    let (epsilon, eta) = (0.3, 0.4);
    let mut failures = Vec::new();
    for seed in 0..10u64 {
        let l = 2 + (seed % 3) as usize;
        let k = 1 + (seed % 2) as usize;
        let phi = crossing_fixture(l, k, seed);
        let family = coordinate_functions(&phi.complex);
        match make_distinct_spectrum(&phi, &family, epsilon, eta) {
            Ok(r) => {
                let ends = r.psi.fiber(0.0) == phi.fiber(0.0) && r.psi.fiber(1.0) == phi.fiber(1.0);
                if !(ends && r.min_gap > 0.0 && r.error < epsilon) {
                    failures.push(format!(
                        "seed {seed}: endpoints exact {ends}, gap {:.2e}, error {:.3}",
                        r.min_gap, r.error
                    ));
                }
            }
            Err(e) => failures.push(format!("seed {seed}: {e}")),
        }
    }
    outcome(failures.is_empty(), format!("10 fixtures; {}", failures.join("; ")))
}

fn cluster() -> Outcome {
    let (epsilon, eta) = (0.2, 0.2);
    let mut failures = Vec::new();
    let mut count = 0;
    for l1 in 1..=3 {
        for l2 in 3..=5 {
            for k in 1..=3 {
                let r = (l1 + l2 + k) % 3;
                let ranks = ClusterRanks { l1, l2, r };
                let seed = (100 * l1 + 10 * l2 + k) as u64;
                count += 1;
                let res = cluster_fixture(ranks, k, 0.01, eta, seed)
                    .and_then(|(phi, base)| cluster_projections(&phi, &base, eta, ranks, 16).map(|f| (phi, f)));
                match res {
                    Ok((phi, f)) => {
                        let targets_ok = (0..l1).all(|j| {
                            let want = if j + 1 < l1 { (l2 - 3) * k } else { (l2 + r - 3) * k };
                            f.target_ranks[j] == want && (0..f.samples.len()).all(|s| f.subprojection_rank(s, j) == want)
                        });
                        let err = f.conclusion_error(&phi, &coordinate_functions(&phi.complex));
                        let ok = f.resolution_defect <= 1e-8
                            && f.orthogonality_defect <= 1e-8
                            && targets_ok
                            && f.ranks_exact
                            && f.endpoint_defect <= 1e-8
                            && err < epsilon;
                        if !ok {
                            failures.push(format!(
                                "{ranks:?} k={k}: resolution {:.1e}, orthogonality {:.1e}, ranks {targets_ok}, endpoint {:.1e}, error {err:.3}",
                                f.resolution_defect, f.orthogonality_defect, f.endpoint_defect
                            ));
                        }
                    }
                    Err(e) => failures.push(format!("{ranks:?} k={k}: {e}")),
                }
            }
        }
    }
    outcome(failures.is_empty(), format!("{count} fixtures; {}", failures.join("; ")))
}

fn verifier() -> Outcome {
    let mut bad = Vec::new();
    let mutations = [
        Mutation::None,
        Mutation::Partition,
        Mutation::Closeness,
        Mutation::Factorization,
        Mutation::Rank,
        Mutation::Density,
    ];
    for m in mutations {
        let s = witness_fixture(m, 5);
        let v = verify_decomposition(&s.decomp, &s.phi, &s.psi, &s.family, &s.params).unwrap();
        let ok = match m.clause() {
            None => v.pass,
            Some(name) => !v.pass && v.clause(name).map_or(false, |c| !c.pass),
        };
        if !ok {
            bad.push(format!("{m:?}: failures {:?}", v.failures()));
        }
    }
    outcome(bad.is_empty(), format!("witness + 5 mutations; {}", bad.join("; ")))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome, u64); 10] = [
        ("metric suite", metric_suite, 5),
        ("pairing oracle", pairing_oracle, 10),
        ("partition bounds", partition_bounds, 5),
        ("first decomposition end-to-end", theorem_one, 120),
        ("disk extension", disk_extension, 30),
        ("winding numbers", winding_numbers, 1),
        ("skeleton reduction", skeleton, 60),
        ("distinct spectrum", distinct, 30),
        ("cluster fields", cluster, 60),
        ("verifier soundness", verifier, 10),
    ];
    let mut failed = Vec::new();
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let elapsed = start.elapsed();
        let pass = o.pass && elapsed < Duration::from_secs(*limit);
        println!(
            "criterion {:>2} {:<32} {} ({:.2}s / {}s) {}",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit,
            o.detail.trim_end_matches("; ")
        );
        if !pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
