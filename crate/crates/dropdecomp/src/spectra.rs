//! Spectral multisets with fractional endpoint weight, their metric, pairing
//! tests and the spectral distribution check.
//!
//! A [`SpectralMultiset`] of class `(n, k)` has total weight `n / k`: interior
//! points carry integer multiplicity, while the endpoints `0` and `1` may carry
//! any number of units of weight `1 / k`. The stored form is reduced: whole
//! groups of `k` endpoint units are kept as ordinary points at `0` or `1`, so
//! only a remainder `k_0, k_1 < k` stays fractional.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Default tolerance for snapping eigenvalues onto the endpoints.
pub const DEFAULT_TOL_END: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMultiset {
    k: usize,
    total_n: usize,
    end0_units: usize,
    end1_units: usize,
    interior: Vec<(f64, usize)>,
}

impl SpectralMultiset {
    /// Build and canonicalize. `interior` may contain points at exactly `0`
    /// or `1`; those count as `k` endpoint units per multiplicity.
    pub fn new(
        k: usize,
        end0_units: usize,
        interior: Vec<(f64, usize)>,
        end1_units: usize,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::Domain("k must be positive".into()));
        }
        let mut n0 = end0_units;
        let mut n1 = end1_units;
        let mut pts: Vec<(f64, usize)> = Vec::new();
        for (t, m) in interior {
            if !(0.0..=1.0).contains(&t) || !t.is_finite() {
                return Err(Error::Domain(format!("point {t} outside [0,1]")));
            }
            if m == 0 {
                continue;
            }
            if t == 0.0 {
                n0 += k * m;
            } else if t == 1.0 {
                n1 += k * m;
            } else {
                pts.push((t, m));
            }
        }
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut merged: Vec<(f64, usize)> = Vec::new();
        for (t, m) in pts {
            match merged.last_mut() {
                Some(last) if last.0 == t => last.1 += m,
                _ => merged.push((t, m)),
            }
        }
        let mut out = Vec::new();
        if n0 / k > 0 {
            out.push((0.0, n0 / k));
        }
        out.extend(merged);
        if n1 / k > 0 {
            out.push((1.0, n1 / k));
        }
        let total_n = n0 + n1 + k * out.iter().filter(|p| p.0 > 0.0 && p.0 < 1.0).map(|p| p.1).sum::<usize>();
        if total_n == 0 {
            return Err(Error::Domain("empty multiset".into()));
        }
        Ok(Self {
            k,
            total_n,
            end0_units: n0 % k,
            end1_units: n1 % k,
            interior: out,
        })
    }

    /// Multiset of plain points (`k = 1`), the case `P^n[0,1]`.
    pub fn from_points(points: &[f64]) -> Result<Self> {
        Self::new(1, 0, points.iter().map(|&t| (t, 1)).collect(), 0)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn total_n(&self) -> usize {
        self.total_n
    }

    /// Fractional units at `0` in reduced form (`k_0`).
    pub fn end0_units(&self) -> usize {
        self.end0_units
    }

    /// Fractional units at `1` in reduced form (`k_1`).
    pub fn end1_units(&self) -> usize {
        self.end1_units
    }

    /// Points with integer multiplicity, sorted; may include `0` and `1`.
    pub fn interior(&self) -> &[(f64, usize)] {
        &self.interior
    }

    /// Total units sitting at `0`, fractional or not.
    pub fn units_at_zero(&self) -> usize {
        self.end0_units
            + self
                .interior
                .iter()
                .filter(|p| p.0 == 0.0)
                .map(|p| p.1 * self.k)
                .sum::<usize>()
    }

    pub fn units_at_one(&self) -> usize {
        self.end1_units
            + self
                .interior
                .iter()
                .filter(|p| p.0 == 1.0)
                .map(|p| p.1 * self.k)
                .sum::<usize>()
    }

    /// Integer-multiplicity points expanded into a sorted list.
    pub fn points(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for &(t, m) in &self.interior {
            out.extend(std::iter::repeat(t).take(m));
        }
        out
    }

    /// The eigenvalue list of the underlying `C[0,1]` representation: each
    /// endpoint unit once, each integer point `k` times.
    pub fn expand(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.end0_units];
        for &(t, m) in &self.interior {
            out.extend(std::iter::repeat(t).take(m * self.k));
        }
        out.extend(std::iter::repeat(1.0).take(self.end1_units));
        out
    }

    /// Units of weight `1/k` lying in the open ball of radius `eta` at `x`.
    pub fn units_in_ball(&self, x: f64, eta: f64) -> usize {
        let mut units = 0;
        if x.abs() < eta {
            units += self.end0_units;
        }
        if (1.0 - x).abs() < eta {
            units += self.end1_units;
        }
        for &(t, m) in &self.interior {
            if (t - x).abs() < eta {
                units += m * self.k;
            }
        }
        units
    }

    /// Restriction to a closed window as a plain multiset of `(t, units)`.
    pub fn window_units(&self, lo: f64, hi: f64) -> Vec<(f64, usize)> {
        let mut out = Vec::new();
        if lo <= 0.0 && self.end0_units > 0 {
            out.push((0.0, self.end0_units));
        }
        for &(t, m) in &self.interior {
            if t >= lo && t <= hi {
                out.push((t, m * self.k));
            }
        }
        if hi >= 1.0 && self.end1_units > 0 {
            out.push((1.0, self.end1_units));
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
struct MultisetJson {
    k: usize,
    n: usize,
    end0_units: usize,
    end1_units: usize,
    interior: Vec<(String, usize)>,
}

impl Serialize for SpectralMultiset {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MultisetJson {
            k: self.k,
            n: self.total_n,
            end0_units: self.end0_units,
            end1_units: self.end1_units,
            interior: self
                .interior
                .iter()
                .map(|&(t, m)| (format!("{t:?}"), m))
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SpectralMultiset {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = MultisetJson::deserialize(d)?;
        let mut interior = Vec::new();
        for (t, m) in raw.interior {
            let v: f64 = t.parse().map_err(D::Error::custom)?;
            interior.push((v, m));
        }
        let ms = SpectralMultiset::new(raw.k, raw.end0_units, interior, raw.end1_units)
            .map_err(D::Error::custom)?;
        if ms.total_n != raw.n {
            return Err(D::Error::custom(format!(
                "declared n = {} but weights sum to {}",
                raw.n, ms.total_n
            )));
        }
        Ok(ms)
    }
}

/// Multiset of points of an arbitrary metric space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMultiset<P> {
    pub points: Vec<(P, usize)>,
}

impl<P: Clone> ComplexMultiset<P> {
    pub fn new(points: Vec<(P, usize)>) -> Self {
        Self { points }
    }

    pub fn from_list(points: &[P]) -> Self {
        Self {
            points: points.iter().map(|p| (p.clone(), 1)).collect(),
        }
    }

    pub fn total(&self) -> usize {
        self.points.iter().map(|p| p.1).sum()
    }

    pub fn expand(&self) -> Vec<P> {
        let mut out = Vec::new();
        for (p, m) in &self.points {
            out.extend(std::iter::repeat(p.clone()).take(*m));
        }
        out
    }
}

fn check_class(a: &SpectralMultiset, b: &SpectralMultiset) -> Result<()> {
    if a.k != b.k || a.total_n != b.total_n {
        return Err(Error::ClassMismatch(format!(
            "(n,k) = ({},{}) vs ({},{})",
            a.total_n, a.k, b.total_n, b.k
        )));
    }
    Ok(())
}

/// Distance on `P^{(n,k)}[0,1]`: `1` when the fractional endpoint remainders
/// differ, otherwise the largest displacement between order-matched points.
pub fn pnk_distance(a: &SpectralMultiset, b: &SpectralMultiset) -> Result<f64> {
    check_class(a, b)?;
    if a.end0_units != b.end0_units || a.end1_units != b.end1_units {
        return Ok(1.0);
    }
    Ok(sorted_bottleneck(&a.points(), &b.points()))
}

/// Largest elementwise gap between two lists after sorting each.
pub fn sorted_bottleneck(a: &[f64], b: &[f64]) -> f64 {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(|p, q| p.partial_cmp(q).unwrap());
    y.sort_by(|p, q| p.partial_cmp(q).unwrap());
    x.iter()
        .zip(&y)
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max)
}

/// Pair two real multisets within `eta` (strict), using sorted order.
///
/// Returns index pairs into the original slices.
pub fn pair_within_reals(a: &[f64], b: &[f64], eta: f64) -> Result<Option<Vec<(usize, usize)>>> {
    if a.len() != b.len() {
        return Err(Error::ClassMismatch(format!(
            "totals {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let mut ia: Vec<usize> = (0..a.len()).collect();
    let mut ib: Vec<usize> = (0..b.len()).collect();
    ia.sort_by(|&p, &q| a[p].partial_cmp(&a[q]).unwrap().then(p.cmp(&q)));
    ib.sort_by(|&p, &q| b[p].partial_cmp(&b[q]).unwrap().then(p.cmp(&q)));
    let mut out = Vec::with_capacity(a.len());
    for (&i, &j) in ia.iter().zip(&ib) {
        if (a[i] - b[j]).abs() >= eta {
            return Ok(None);
        }
        out.push((i, j));
    }
    Ok(Some(out))
}

/// Pair two spectral multisets within `eta`; indices refer to
/// [`SpectralMultiset::points`]. Fractional remainders must agree.
pub fn pair_within(
    a: &SpectralMultiset,
    b: &SpectralMultiset,
    eta: f64,
) -> Result<Option<Vec<(usize, usize)>>> {
    check_class(a, b)?;
    if a.end0_units != b.end0_units || a.end1_units != b.end1_units {
        return Ok(None);
    }
    pair_within_reals(&a.points(), &b.points(), eta)
}

/// Minimax assignment on a square cost matrix.
///
/// Returns the bottleneck value and `assign[i] = j`.
pub fn bottleneck_assignment(cost: &[Vec<f64>]) -> (f64, Vec<usize>) {
    let n = cost.len();
    if n == 0 {
        return (0.0, Vec::new());
    }
    let mut levels: Vec<f64> = cost.iter().flatten().cloned().collect();
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    levels.dedup();
    let (mut lo, mut hi) = (0usize, levels.len() - 1);
    let mut best = perfect_matching(cost, levels[hi]).expect("complete graph has a matching");
    while lo < hi {
        let mid = (lo + hi) / 2;
        match perfect_matching(cost, levels[mid]) {
            Some(m) => {
                best = m;
                hi = mid;
            }
            None => lo = mid + 1,
        }
    }
    if let Some(m) = perfect_matching(cost, levels[lo]) {
        best = m;
    }
    (levels[lo], best)
}

/// Kuhn augmenting-path matching restricted to edges with cost `<= limit`.
fn perfect_matching(cost: &[Vec<f64>], limit: f64) -> Option<Vec<usize>> {
    let n = cost.len();
    let mut match_right: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let mut seen = vec![false; n];
        if !augment(i, cost, limit, &mut seen, &mut match_right) {
            return None;
        }
    }
    let mut assign = vec![0; n];
    for (j, m) in match_right.iter().enumerate() {
        assign[m.expect("perfect")] = j;
    }
    Some(assign)
}

fn augment(
    i: usize,
    cost: &[Vec<f64>],
    limit: f64,
    seen: &mut [bool],
    match_right: &mut [Option<usize>],
) -> bool {
    for j in 0..cost.len() {
        if cost[i][j] <= limit && !seen[j] {
            seen[j] = true;
            let free = match match_right[j] {
                None => true,
                Some(other) => augment(other, cost, limit, seen, match_right),
            };
            if free {
                match_right[j] = Some(i);
                return true;
            }
        }
    }
    false
}

/// Bottleneck distance between two equal-size point lists under `dist`.
pub fn bottleneck_distance<P>(a: &[P], b: &[P], dist: impl Fn(&P, &P) -> f64) -> Result<(f64, Vec<usize>)> {
    if a.len() != b.len() {
        return Err(Error::ClassMismatch(format!(
            "totals {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let cost: Vec<Vec<f64>> = a.iter().map(|p| b.iter().map(|q| dist(p, q)).collect()).collect();
    Ok(bottleneck_assignment(&cost))
}

/// Pair two multisets of a metric space within `eta` (strict) by bottleneck
/// assignment. Indices refer to the expanded lists.
pub fn pair_within_metric<P: Clone>(
    a: &ComplexMultiset<P>,
    b: &ComplexMultiset<P>,
    eta: f64,
    dist: impl Fn(&P, &P) -> f64,
) -> Result<Option<Vec<(usize, usize)>>> {
    let ea = a.expand();
    let eb = b.expand();
    let (value, assign) = bottleneck_distance(&ea, &eb, dist)?;
    if value < eta {
        Ok(Some(assign.into_iter().enumerate().collect()))
    } else {
        Ok(None)
    }
}

/// Outcome of a spectral distribution check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpReport {
    pub pass: bool,
    pub eta: f64,
    pub delta: f64,
    /// Smallest ball occupancy found, in points (units divided by `k`).
    pub worst_count: f64,
    /// The same occupancy as a fraction of the total weight.
    pub worst_fraction: f64,
    pub worst_center: f64,
    pub worst_sample: usize,
}

/// Candidate ball centers: a grid of step `eta/10`, every breakpoint
/// `t ± eta` and midpoints between consecutive candidates.
fn sdp_centers(ms: &SpectralMultiset, eta: f64) -> Vec<f64> {
    let mut xs = vec![0.0, 1.0];
    let step = eta / 10.0;
    let mut i = 0usize;
    loop {
        let x = i as f64 * step;
        if x > 1.0 {
            break;
        }
        xs.push(x);
        i += 1;
    }
    let mut support: Vec<f64> = ms.interior.iter().map(|p| p.0).collect();
    if ms.end0_units > 0 {
        support.push(0.0);
    }
    if ms.end1_units > 0 {
        support.push(1.0);
    }
    for t in support {
        for x in [t - eta, t + eta] {
            if (0.0..=1.0).contains(&x) {
                xs.push(x);
            }
        }
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup();
    let mids: Vec<f64> = xs.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    xs.extend(mids);
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs
}

fn distance_to_support(ms: &SpectralMultiset, x: f64) -> f64 {
    let mut d = f64::INFINITY;
    if ms.end0_units > 0 {
        d = d.min(x.abs());
    }
    if ms.end1_units > 0 {
        d = d.min((1.0 - x).abs());
    }
    for &(t, _) in &ms.interior {
        d = d.min((t - x).abs());
    }
    d
}

/// Check `sdp(eta, delta)`: every open `eta`-ball of `[0,1]` holds at least a
/// `delta` fraction of the spectrum at every sample.
///
/// Among centers of minimal occupancy the report keeps the one farthest from
/// the spectrum, then the leftmost.
pub fn check_sdp(spectra: &[SpectralMultiset], eta: f64, delta: f64) -> Result<SdpReport> {
    if !(eta > 0.0) || !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Domain(format!("need eta > 0 and delta in (0,1], got {eta}, {delta}")));
    }
    if spectra.is_empty() {
        return Err(Error::Malformed("no samples".into()));
    }
    let mut worst: Option<(f64, f64, f64, usize)> = None;
    for (y, ms) in spectra.iter().enumerate() {
        if ms.total_n == 0 {
            return Err(Error::Malformed(format!("empty spectrum at sample {y}")));
        }
        for x in sdp_centers(ms, eta) {
            let frac = ms.units_in_ball(x, eta) as f64 / ms.total_n as f64;
            let dist = distance_to_support(ms, x);
            let better = match worst {
                None => true,
                Some((wf, wd, wx, _)) => {
                    frac < wf - 1e-15
                        || ((frac - wf).abs() <= 1e-15
                            && (dist > wd + 1e-12 || ((dist - wd).abs() <= 1e-12 && x < wx)))
                }
            };
            if better {
                worst = Some((frac, dist, x, y));
            }
        }
    }
    let (frac, _, x, y) = worst.expect("at least one center");
    let ms = &spectra[y];
    Ok(SdpReport {
        pass: frac >= delta - 1e-12,
        eta,
        delta,
        worst_count: frac * ms.total_n as f64 / ms.k as f64,
        worst_fraction: frac,
        worst_center: x,
        worst_sample: y,
    })
}

/// Read a sorted eigenvalue list of an `I_k` representation as a spectral
/// multiset: values near the endpoints become fractional units, the rest must
/// come in blocks of `k` equal values.
pub fn fractionalize(eigenvalues: &[f64], k: usize, tol_end: f64) -> Result<SpectralMultiset> {
    if k == 0 {
        return Err(Error::Domain("k must be positive".into()));
    }
    let mut n0 = 0;
    let mut n1 = 0;
    let mut inner = Vec::new();
    let mut prev = f64::NEG_INFINITY;
    for &v in eigenvalues {
        if v < prev - tol_end {
            return Err(Error::Domain("eigenvalues must be sorted".into()));
        }
        prev = v;
        if v < -tol_end || v > 1.0 + tol_end {
            return Err(Error::Domain(format!("eigenvalue {v} outside [0,1]")));
        }
        if v <= tol_end {
            n0 += 1;
        } else if v >= 1.0 - tol_end {
            n1 += 1;
        } else {
            inner.push(v);
        }
    }
    if inner.len() % k != 0 {
        return Err(Error::BlockStructure(format!(
            "{} interior eigenvalues is not a multiple of k = {k}",
            inner.len()
        )));
    }
    let mut pts = Vec::new();
    for block in inner.chunks(k) {
        let spread = block[k - 1] - block[0];
        if spread > tol_end {
            return Err(Error::BlockStructure(format!(
                "block near {} spreads by {spread:e}",
                block[0]
            )));
        }
        pts.push((block[k / 2], 1));
    }
    SpectralMultiset::new(k, n0, pts, n1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ms(k: usize, e0: usize, pts: &[f64], e1: usize) -> SpectralMultiset {
        SpectralMultiset::new(k, e0, pts.iter().map(|&t| (t, 1)).collect(), e1).unwrap()
    }

    #[test]
    fn distance_one_when_fractional_parts_differ() {
        let a = ms(2, 1, &[0.3, 0.7], 1);
        let b = ms(2, 0, &[0.2, 0.3, 0.7], 0);
        assert_eq!(a.total_n(), b.total_n());
        assert_eq!(pnk_distance(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn distance_matches_order_matched_displacement() {
        let a = ms(2, 1, &[0.30, 0.70], 0);
        let b = ms(2, 1, &[0.35, 0.68], 0);
        let d = pnk_distance(&a, &b).unwrap();
        assert!((d - 0.05).abs() < 1e-15);
        // brute force over both matchings of the two interior points
        let pa = a.points();
        let pb = b.points();
        let direct = (pa[0] - pb[0]).abs().max((pa[1] - pb[1]).abs());
        let crossed = (pa[0] - pb[1]).abs().max((pa[1] - pb[0]).abs());
        assert!((d - direct.min(crossed)).abs() < 1e-15);
    }

    #[test]
    fn distance_identity_and_class_mismatch() {
        let a = ms(3, 2, &[0.1, 0.5], 1);
        assert_eq!(pnk_distance(&a, &a).unwrap(), 0.0);
        let b = ms(3, 0, &[0.1], 0);
        assert!(matches!(pnk_distance(&a, &b), Err(Error::ClassMismatch(_))));
    }

    #[test]
    fn reduced_form_moves_whole_groups_off_the_endpoints() {
        let a = ms(2, 3, &[0.4], 0);
        assert_eq!(a.end0_units(), 1);
        assert_eq!(a.interior(), &[(0.0, 1), (0.4, 1)]);
        assert_eq!(a.total_n(), 5);
        assert_eq!(a.units_at_zero(), 3);
    }

    #[test]
    fn pairing_examples() {
        let a = [0.10, 0.20, 0.90];
        let b = [0.15, 0.25, 0.85];
        assert!(pair_within_reals(&a, &b, 0.06).unwrap().is_some());
        assert!(pair_within_reals(&a, &b, 0.05).unwrap().is_none());
        let id = pair_within_reals(&a, &a, 1e-9).unwrap().unwrap();
        assert_eq!(id, vec![(0, 0), (1, 1), (2, 2)]);
        assert!(pair_within_reals(&[0.0, 1.0], &[0.5, 0.5], 0.4).unwrap().is_none());
        assert!(pair_within_reals(&[0.0], &[0.5, 0.5], 0.4).is_err());
    }

    #[test]
    fn bottleneck_assignment_small() {
        let cost = vec![vec![0.5, 0.1], vec![0.2, 0.9]];
        let (v, a) = bottleneck_assignment(&cost);
        assert_eq!(v, 0.2);
        assert_eq!(a, vec![1, 0]);
    }

    #[test]
    fn metric_pairing_on_the_line_matches_sorting() {
        let a = ComplexMultiset::from_list(&[0.10, 0.20, 0.90]);
        let b = ComplexMultiset::from_list(&[0.85, 0.15, 0.25]);
        let m = pair_within_metric(&a, &b, 0.06, |x: &f64, y: &f64| (x - y).abs())
            .unwrap()
            .unwrap();
        assert_eq!(m, vec![(0, 1), (1, 2), (2, 0)]);
    }

    #[test]
    fn sdp_examples() {
        let s = ms(1, 0, &[0.1, 0.5, 0.9], 0);
        let r = check_sdp(&[s], 0.5, 1.0 / 3.0).unwrap();
        assert!(r.pass);
        assert_eq!(r.worst_count, 1.0);
        assert_eq!(r.worst_center, 0.0);

        let s = ms(1, 0, &[0.0, 1.0], 0);
        let r = check_sdp(&[s], 0.25, 0.5).unwrap();
        assert!(!r.pass);
        assert_eq!(r.worst_count, 0.0);
        assert!((r.worst_center - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sdp_grid_spectrum_passes() {
        let pts: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let s = SpectralMultiset::from_points(&pts).unwrap();
        let r = check_sdp(&[s.clone()], 0.1, 0.01).unwrap();
        assert!(r.pass);
        // the occupancy floor is what the report measures
        let r2 = check_sdp(&[s], 0.1, r.worst_fraction).unwrap();
        assert!(r2.pass);
    }

    #[test]
    fn fractionalize_examples() {
        let m = fractionalize(&[0.0, 0.0, 0.5, 0.5, 1.0, 1.0], 2, DEFAULT_TOL_END).unwrap();
        assert_eq!(m.total_n(), 6);
        assert_eq!(m.units_at_zero(), 2);
        assert_eq!(m.units_at_one(), 2);
        assert_eq!(m.expand(), vec![0.0, 0.0, 0.5, 0.5, 1.0, 1.0]);
        let err = fractionalize(&[0.0, 0.5, 1.0], 2, DEFAULT_TOL_END).unwrap_err();
        assert!(matches!(err, Error::BlockStructure(_)));
        let one = fractionalize(&[0.2, 0.3, 0.3], 1, DEFAULT_TOL_END).unwrap();
        assert_eq!(one.interior(), &[(0.2, 1), (0.3, 2)]);
    }

    #[test]
    fn json_roundtrip_keeps_exact_values() {
        let m = ms(3, 2, &[0.1 + 0.2, 0.7], 1);
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"0.30000000000000004\""));
        let back: SpectralMultiset = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }
}
