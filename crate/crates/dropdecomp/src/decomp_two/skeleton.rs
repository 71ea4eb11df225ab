use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{c, exp_skew, CMat};
use crate::simplicial::{retract_to_skeleton, PLPath, Point, Retraction, SimplicialComplex2};

use super::{
    aligned_frame, choose_steps, frame_log, hom_distance, hom_pairing, oscillation, spectral_pairing, SpaceFiber,
    SpaceFunction, SpaceHom,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonOptions {
    pub initial_steps: usize,
    pub max_steps: usize,
    /// Grid resolution per triangle for the puncture search.
    pub puncture_grid: usize,
    pub max_simplices: usize,
    /// Measurement samples per half step.
    pub measure_per_half: usize,
    pub retraction_per_edge: usize,
}

impl Default for SkeletonOptions {
    fn default() -> Self {
        Self {
            initial_steps: 8,
            max_steps: 1024,
            puncture_grid: 16,
            max_simplices: 20_000,
            measure_per_half: 2,
            retraction_per_edge: 3,
        }
    }
}

/// Puncture of one triangle of the subdivided complex.
#[derive(Debug, Clone, PartialEq)]
pub struct PunctureRecord {
    pub triangle: [usize; 3],
    pub point: Point,
    /// Distance to the spectral paths and to the triangle boundary.
    pub margin: f64,
    /// False when the barycenter was kept.
    pub moved: bool,
}

/// Output of [`reduce_to_skeleton`]. `error` and `pairing` are measured on
/// `samples`.
#[derive(Debug, Clone)]
pub struct SkeletonReduction {
    pub complex: SimplicialComplex2,
    pub punctures: Vec<PunctureRecord>,
    pub retraction: Retraction,
    pub retraction_samples: Vec<(Point, Point)>,
    pub eta_prime: f64,
    pub sigma: f64,
    pub mesh: Vec<f64>,
    pub samples: Vec<f64>,
    /// Piecewise linear spectral paths before retraction.
    pub paths: SpaceHom,
    /// `φ_1 ∘ π`, with spectrum on the 1-skeleton.
    pub reduced: SpaceHom,
    pub error: f64,
    pub pairing: f64,
    /// Smallest distance from sampled spectra of `reduced` to a puncture.
    pub reduced_clearance: f64,
}

struct Step {
    t0: f64,
    t1: f64,
    u: CMat,
    log: CMat,
    v: CMat,
    start: Vec<Point>,
    paths: Vec<PLPath>,
}

impl Step {
    fn fiber(&self, t: f64) -> SpaceFiber {
        let s = ((t - self.t0) / (self.t1 - self.t0)).clamp(0.0, 1.0);
        if s <= 0.5 {
            SpaceFiber {
                frame: &self.u * exp_skew(&(&self.log * c(2.0 * s))),
                points: self.start.clone(),
            }
        } else {
            SpaceFiber {
                frame: self.v.clone(),
                points: self.paths.iter().map(|p| p.at(2.0 * s - 1.0)).collect(),
            }
        }
    }
}

fn step_at(steps: &[Step], t: f64) -> &Step {
    let i = steps.partition_point(|s| s.t1 < t);
    &steps[i.min(steps.len() - 1)]
}

/// Factor `φ` approximately through the 1-skeleton with default options.
pub fn reduce_to_skeleton(phi: &SpaceHom, family: &[SpaceFunction], epsilon: f64, eta: f64) -> Result<SkeletonReduction> {
    reduce_to_skeleton_with(phi, family, epsilon, eta, &SkeletonOptions::default())
}

pub fn reduce_to_skeleton_with(
    phi: &SpaceHom,
    family: &[SpaceFunction],
    epsilon: f64,
    eta: f64,
    opts: &SkeletonOptions,
) -> Result<SkeletonReduction> {
    if !(epsilon > 0.0 && eta > 0.0) {
        return Err(Error::Domain("epsilon and eta must be positive".into()));
    }
    if !phi.complex.is_connected() {
        return Err(Error::Disconnected("the complex is not connected".into()));
    }
    let x = &phi.complex;
    let mut eta_prime = 0.99 * eta / 4.0;
    for _ in 0..20 {
        if oscillation(x, family, eta_prime, 6) < epsilon / 3.0 {
            break;
        }
        eta_prime *= 0.5;
    }

    let mesh = choose_steps(phi, family, eta_prime, epsilon / 6.0, opts.initial_steps, opts.max_steps)?;
    let mut steps: Vec<Step> = Vec::with_capacity(mesh.len() - 1);
    let mut cur = phi.fiber(0.0);
    for w in mesh.windows(2) {
        let next = phi.fiber(w[1]);
        let (_, perm) = spectral_pairing(x, &cur.points, &next.points)?;
        let target: Vec<Point> = perm.iter().map(|&j| next.points[j].clone()).collect();
        let v = aligned_frame(&cur.frame, &next.frame, &perm, &target);
        let log = frame_log(&cur.frame, &v);
        let mut paths = Vec::with_capacity(target.len());
        for (a, b) in cur.points.iter().zip(&target) {
            paths.push(x.shortest_path(a, b)?);
        }
        steps.push(Step {
            t0: w[0],
            t1: w[1],
            u: cur.frame.clone(),
            log,
            v: v.clone(),
            start: cur.points.clone(),
            paths,
        });
        cur = next;
    }
    let steps = Arc::new(steps);
    let first = phi.fiber(0.0);
    let last = phi.fiber(1.0);

    let mut sub = x.refine_mesh(eta_prime, opts.max_simplices)?;
    for p in first.points.iter().chain(&last.points) {
        sub = sub.insert_vertex(p)?.0;
    }

    let segments: Vec<(Point, Point)> = steps
        .iter()
        .flat_map(|s| s.paths.iter())
        .flat_map(|p| p.points.windows(2).map(|w| (w[0].clone(), w[1].clone())).collect::<Vec<_>>())
        .collect();
    let mut punctures = Vec::with_capacity(sub.triangles().len());
    for t in sub.triangles() {
        punctures.push(choose_puncture(&sub, *t, &segments, opts.puncture_grid)?);
    }
    let sigma = 0.5 * punctures.iter().map(|p| p.margin).fold(f64::INFINITY, f64::min);
    if !punctures.is_empty() && !(sigma > 0.0) {
        return Err(Error::PunctureSearch("no puncture with positive margin".into()));
    }
    let retraction = retract_to_skeleton(&sub, punctures.iter().map(|p| p.point.clone()).collect())?;
    let retraction_samples = retraction.sample(opts.retraction_per_edge, sigma.min(1.0))?;

    let (s_paths, f0, f1) = (steps.clone(), first.clone(), last.clone());
    let paths = SpaceHom::from_fn(phi.l, phi.k, x.clone(), move |t| {
        if t <= 0.0 {
            f0.clone()
        } else if t >= 1.0 {
            f1.clone()
        } else {
            step_at(&s_paths, t).fiber(t)
        }
    });
    let alpha = Arc::new(retraction.clone());
    let inner = paths.clone();
    let reduced = SpaceHom::from_fn(phi.l, phi.k, sub.clone(), move |t| {
        let fb = inner.fiber(t);
        SpaceFiber {
            frame: fb.frame,
            points: fb.points.iter().map(|p| alpha.apply(p).unwrap_or_else(|_| p.clone())).collect(),
        }
    });

    let q = opts.measure_per_half.max(1) * 2;
    let mut samples = Vec::new();
    for w in mesh.windows(2) {
        for j in 0..q {
            samples.push(w[0] + (w[1] - w[0]) * j as f64 / q as f64);
        }
    }
    samples.push(1.0);
    let error = hom_distance(phi, &reduced, family, &samples);
    let pairing = hom_pairing(phi, &reduced, &samples)?;
    let mut reduced_clearance = f64::INFINITY;
    for &t in &samples {
        for p in reduced.fiber(t).points {
            for c in &punctures {
                reduced_clearance = reduced_clearance.min(sub.path_distance(&p, &c.point));
            }
        }
    }

    Ok(SkeletonReduction {
        complex: sub,
        punctures,
        retraction,
        retraction_samples,
        eta_prime,
        sigma: if sigma.is_finite() { sigma } else { 0.0 },
        mesh,
        samples,
        paths,
        reduced,
        error,
        pairing,
        reduced_clearance,
    })
}

/// Chart inner product `½ Σ a_v b_v` over coordinate maps.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
}

fn coords(p: &Point, base: &[usize]) -> Vec<f64> {
    base.iter().map(|&v| p.weight(v)).collect()
}

/// Exact chart distance from `p` to the segment `[a, b]`.
fn segment_distance(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let u: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let w: Vec<f64> = a.iter().zip(p).map(|(x, y)| y - x).collect();
    let uu = dot(&u, &u);
    let s = if uu > 0.0 { (dot(&w, &u) / uu).clamp(0.0, 1.0) } else { 0.0 };
    let r: Vec<f64> = w.iter().zip(&u).map(|(x, y)| x - s * y).collect();
    dot(&r, &r).sqrt()
}

fn choose_puncture(x: &SimplicialComplex2, t: [usize; 3], segments: &[(Point, Point)], grid: usize) -> Result<PunctureRecord> {
    let verts: Vec<&Point> = t.iter().map(|&v| x.position(v)).collect();
    let mut base: Vec<usize> = verts.iter().flat_map(|p| p.carrier()).collect();
    base.sort_unstable();
    base.dedup();
    let vc: Vec<Vec<f64>> = verts.iter().map(|p| coords(p, &base)).collect();
    let side = |i: usize, j: usize| Point::chart_distance(verts[i], verts[j]);
    let (a, b, cc) = (side(1, 2), side(0, 2), side(0, 1));
    let s = 0.5 * (a + b + cc);
    let area = (s * (s - a) * (s - b) * (s - cc)).max(0.0).sqrt();
    let heights = [2.0 * area / a, 2.0 * area / b, 2.0 * area / cc];
    let near: Vec<(Vec<f64>, Vec<f64>)> = segments
        .iter()
        .filter(|(p, q)| p.carrier().iter().chain(q.carrier().iter()).all(|v| base.contains(v)))
        .map(|(p, q)| (coords(p, &base), coords(q, &base)))
        .collect();
    let margin = |lam: [f64; 3]| -> (f64, f64) {
        let p: Vec<f64> = (0..base.len()).map(|i| (0..3).map(|j| lam[j] * vc[j][i]).sum()).collect();
        let boundary = (0..3).map(|i| lam[i] * heights[i]).fold(f64::INFINITY, f64::min);
        let spectral = near.iter().map(|(a, b)| segment_distance(&p, a, b)).fold(f64::INFINITY, f64::min);
        (boundary, spectral)
    };
    let at = |lam: [f64; 3]| Point::affine(&[(verts[0], lam[0]), (verts[1], lam[1]), (verts[2], lam[2])]);
    let third = 1.0 / 3.0;
    let (bd, sd) = margin([third; 3]);
    if sd >= 0.25 * bd {
        return Ok(PunctureRecord {
            triangle: t,
            point: at([third; 3]),
            margin: bd.min(sd),
            moved: false,
        });
    }
    let g = grid.max(3);
    let mut best = (0.0, [third; 3]);
    for i in 1..g {
        for j in 1..g - i {
            let lam = [i as f64 / g as f64, j as f64 / g as f64, (g - i - j) as f64 / g as f64];
            let (bd, sd) = margin(lam);
            let m = bd.min(sd);
            if m > best.0 {
                best = (m, lam);
            }
        }
    }
    if !(best.0 > 1e-12) {
        return Err(Error::PunctureSearch(format!(
            "triangle {t:?} is covered by the spectrum at grid resolution {g}"
        )));
    }
    Ok(PunctureRecord {
        triangle: t,
        point: at(best.1),
        margin: best.0,
        moved: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp_two::coordinate_functions;
    use crate::linalg::identity;

    fn constant_hom(x: SimplicialComplex2, p: Point, l: usize, k: usize) -> SpaceHom {
        SpaceHom::from_fn(l, k, x, move |_| SpaceFiber::diagonal(vec![p.clone(); l * k]))
    }

    #[test]
    fn constant_vertex_spectrum_is_exact() {
        let x = SimplicialComplex2::triangle();
        let phi = constant_hom(x.clone(), Point::vertex(1), 2, 2);
        let fam = coordinate_functions(&x);
        let r = reduce_to_skeleton(&phi, &fam, 0.5, 1.0).unwrap();
        assert_eq!(r.error, 0.0);
        assert_eq!(r.pairing, 0.0);
        assert!(r.sigma > 0.0);
        assert!(r.punctures.iter().all(|p| !p.moved));
    }

    #[test]
    fn edge_path_keeps_pairing_small() {
        let x = SimplicialComplex2::triangle();
        let fam = coordinate_functions(&x);
        let phi = SpaceHom::from_fn(1, 2, x.clone(), |t| {
            let p = Point::new(vec![(0, 1.0 - t), (1, t)]).unwrap();
            SpaceFiber::endpoint(&identity(1), &[p], 2)
        });
        let r = reduce_to_skeleton(&phi, &fam, 0.5, 1.0).unwrap();
        assert!(r.error < 0.5, "{}", r.error);
        assert!(r.pairing <= r.eta_prime + 1e-12);
        assert!(r.pairing < 1.0);
        assert!(r.sigma > 0.0);
    }

    #[test]
    fn path_through_barycenter_moves_the_puncture() {
        let x = SimplicialComplex2::triangle();
        let fam = coordinate_functions(&x);
        let phi = SpaceHom::from_fn(1, 1, x.clone(), |t| {
            let q = Point::new(vec![(0, 0.1), (1, 0.45), (2, 0.45)]).unwrap();
            SpaceFiber::diagonal(vec![Point::lerp(&Point::vertex(0), &q, 1.0 - (2.0 * t - 1.0).abs())])
        });
        let opts = SkeletonOptions::default();
        let eta = 4.0;
        let r = reduce_to_skeleton_with(&phi, &fam, 2.0, eta, &opts).unwrap();
        assert!(r.punctures.iter().any(|p| p.moved));
        assert!(r.sigma > 0.0);
        assert!(r.reduced_clearance >= r.sigma);
    }

    #[test]
    fn segment_distance_examples() {
        let d = segment_distance(&[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]);
        assert!((d - (0.75f64).sqrt()).abs() < 1e-12);
        let d = segment_distance(&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]);
        assert_eq!(d, 0.0);
    }
}
