//! The first decomposition: cut the spectrum of `φ: I_k → P M_N(C(X)) P`
//! into groups, push the endpoint groups to a normal form with between one and
//! `k` endpoint blocks, and split off the endpoint projections.

mod extend;
mod theorem;

pub use extend::{extend_disk, extend_edge, DiskExtension, EdgeExtension};
pub use theorem::{decompose_theorem_i, decompose_theorem_i_with, Decomposition, DecompositionCertificate, PartitionRecord, SampleError, TheoremOptions};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::matrix_rep::{Block, DimensionDropElement, Fiber};

/// Largest `η` allowed by default.
pub const MAX_ETA: f64 = 0.99;

/// An `η < 1` with `‖f(t) - f(t')‖ < ε/6` whenever `|t - t'| < η` for every
/// `f` in the family, halved for safety.
pub fn eta_for(family: &[DimensionDropElement], epsilon: f64) -> Result<f64> {
    eta_for_with(family, epsilon, 500, MAX_ETA)
}

/// [`eta_for`] on a mesh of `mesh` steps with an explicit cap.
pub fn eta_for_with(family: &[DimensionDropElement], epsilon: f64, mesh: usize, max_eta: f64) -> Result<f64> {
    if family.is_empty() {
        return Err(Error::Domain("empty family".into()));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Domain("epsilon must be positive".into()));
    }
    let target = epsilon / 6.0 - 1e-12;
    let mut eta = f64::INFINITY;
    for f in family {
        let vals: Vec<CMat> = (0..=mesh).map(|i| f.value(i as f64 / mesh as f64)).collect();
        let mut omega: f64 = 0.0;
        for j in 1..=mesh {
            for i in 0..=mesh - j {
                omega = omega.max(linalg::op_norm(&(&vals[i + j] - &vals[i])));
            }
            if omega >= target {
                if j == 1 {
                    return Err(Error::Continuity(format!(
                        "{} jumps by {omega:.3e} between adjacent mesh nodes",
                        f.name
                    )));
                }
                eta = eta.min(j as f64 / mesh as f64);
                break;
            }
        }
    }
    Ok((0.5 * eta).min(max_eta))
}

/// Grouping `T_0, …, T_l` of spectral intervals with their envelopes
/// `[t_j, s_j]`. `T_0` and `T_l` may be empty; middle groups are not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPartition {
    pub eta: f64,
    pub n: usize,
    pub groups: Vec<Vec<(f64, f64)>>,
    pub envelopes: Vec<(f64, f64)>,
}

impl SpectrumPartition {
    /// Right end `s_0` of the lower cap.
    pub fn s0(&self) -> f64 {
        self.envelopes[0].1
    }

    /// Left end `t_l` of the upper cap.
    pub fn t_last(&self) -> f64 {
        self.envelopes[self.envelopes.len() - 1].0
    }

    pub fn last(&self) -> usize {
        self.groups.len() - 1
    }

    /// Violations of the four envelope bounds, as messages.
    pub fn bound_violations(&self) -> Vec<String> {
        let eta = self.eta;
        let w = eta / (12.0 * self.n as f64);
        let cap = eta / 4.0 + eta / 6.0;
        let l = self.last();
        let mut out = Vec::new();
        let len = |j: usize| self.envelopes[j].1 - self.envelopes[j].0;
        if len(0) > cap + 1e-12 {
            out.push(format!("lower cap has length {} > {cap}", len(0)));
        }
        if len(l) > cap + 1e-12 {
            out.push(format!("upper cap has length {} > {cap}", len(l)));
        }
        for j in 1..l {
            if len(j) > eta / 6.0 + 1e-12 {
                out.push(format!("group {j} has length {} > {}", len(j), eta / 6.0));
            }
        }
        for j in 0..l {
            let gap = self.envelopes[j + 1].0 - self.envelopes[j].1;
            if gap <= w {
                out.push(format!("gap after group {j} is {gap} <= {w}"));
            }
        }
        out
    }
}

/// Group disjoint sorted intervals by the endpoint capture, merge and split
/// rules with threshold `η/12n`. Inputs whose grouping breaks one of the
/// envelope bounds are rejected.
pub fn partition_spectrum(intervals: &[(f64, f64)], eta: f64, n: usize) -> Result<SpectrumPartition> {
    if !(eta > 0.0 && eta < 1.0) || n == 0 {
        return Err(Error::PartitionHypothesis(format!("need 0 < eta < 1 and n >= 1, got {eta}, {n}")));
    }
    let w = eta / (12.0 * n as f64);
    let cap = eta / 4.0 + w;
    for (i, &(a, b)) in intervals.iter().enumerate() {
        if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) || a > b {
            return Err(Error::PartitionHypothesis(format!("interval {i} [{a},{b}] is not in [0,1]")));
        }
        if i > 0 && a <= intervals[i - 1].1 {
            return Err(Error::PartitionHypothesis(format!("interval {i} [{a},{b}] overlaps its predecessor")));
        }
    }
    let m = intervals.len();
    let mut low = vec![false; m];
    let mut high = vec![false; m];
    for i in 0..m {
        low[i] = intervals[i].0 <= cap || (i > 0 && low[i - 1] && intervals[i].0 - intervals[i - 1].1 <= w);
    }
    for i in (0..m).rev() {
        high[i] = intervals[i].1 >= 1.0 - cap || (i + 1 < m && high[i + 1] && intervals[i + 1].0 - intervals[i].1 <= w);
    }
    if let Some(i) = (0..m).find(|&i| low[i] && high[i]) {
        return Err(Error::PartitionHypothesis(format!(
            "interval {i} belongs to both endpoint groups"
        )));
    }
    let mut groups: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
    let mut middle: Vec<Vec<(f64, f64)>> = Vec::new();
    let mut upper = Vec::new();
    for i in 0..m {
        if low[i] {
            groups[0].push(intervals[i]);
        } else if high[i] {
            upper.push(intervals[i]);
        } else {
            let join = i > 0 && !low[i - 1] && intervals[i].0 - intervals[i - 1].1 <= w;
            match middle.last_mut() {
                Some(g) if join => g.push(intervals[i]),
                _ => middle.push(vec![intervals[i]]),
            }
        }
    }
    groups.extend(middle);
    groups.push(upper);
    let l = groups.len() - 1;
    let mut envelopes = Vec::with_capacity(l + 1);
    for (j, g) in groups.iter().enumerate() {
        let lo = g.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let hi = g.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        envelopes.push(if j == 0 {
            (0.0, hi.max(eta / 4.0))
        } else if j == l {
            (lo.min(1.0 - eta / 4.0), 1.0)
        } else {
            (lo, hi)
        });
    }
    let out = SpectrumPartition {
        eta,
        n,
        groups,
        envelopes,
    };
    if let Some(msg) = out.bound_violations().first() {
        let culprit = intervals
            .iter()
            .enumerate()
            .max_by(|a, b| (a.1 .1 - a.1 .0).partial_cmp(&(b.1 .1 - b.1 .0)).unwrap())
            .map(|(i, iv)| format!("interval {i} {iv:?}"))
            .unwrap_or_default();
        return Err(Error::PartitionHypothesis(format!("{msg}; longest is {culprit}")));
    }
    Ok(out)
}

/// Components of the union of the ranges of the sorted eigenvalue functions
/// over a set of samples.
pub fn spectral_intervals(eigenvalue_lists: &[Vec<f64>]) -> Vec<(f64, f64)> {
    let n = eigenvalue_lists.first().map(|v| v.len()).unwrap_or(0);
    let mut ranges: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let lo = eigenvalue_lists.iter().map(|v| v[i]).fold(f64::INFINITY, f64::min);
            let hi = eigenvalue_lists.iter().map(|v| v[i]).fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        })
        .collect();
    ranges.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (a, b) in ranges {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

/// Which endpoint a cap is attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Zero,
    One,
}

/// Express a block as seen from the given endpoint: the endpoint block becomes
/// [`Block::Zero`] and interior positions become distances to the endpoint.
pub fn to_side(b: Block, side: Side) -> Block {
    match (side, b) {
        (Side::Zero, b) => b,
        (Side::One, Block::Zero) => Block::One,
        (Side::One, Block::One) => Block::Zero,
        (Side::One, Block::Interior(t)) => Block::Interior(1.0 - t),
    }
}

/// Inverse of [`to_side`].
pub fn from_side(b: Block, side: Side) -> Block {
    to_side(b, side)
}

/// Reorder a fiber so endpoint blocks come first, then interior blocks by
/// increasing position; frame columns move with their blocks.
pub fn canonical_order(f: &Fiber, k: usize) -> Fiber {
    let ranges = f.column_ranges(k, 1);
    let mut idx: Vec<usize> = (0..f.blocks.len()).collect();
    let key = |b: &Block| match b {
        Block::Zero => (0, 0.0),
        Block::Interior(t) => (1, *t),
        Block::One => (2, 0.0),
    };
    idx.sort_by(|&a, &b| {
        let (ka, kb) = (key(&f.blocks[a]), key(&f.blocks[b]));
        ka.0.cmp(&kb.0).then(ka.1.partial_cmp(&kb.1).unwrap())
    });
    let cols: Vec<usize> = idx.iter().flat_map(|&i| ranges[i].clone()).collect();
    Fiber {
        frame: linalg::select_columns(&f.frame, &cols),
        blocks: idx.iter().map(|&i| f.blocks[i]).collect(),
    }
}

/// A fiber split into its two endpoint caps (in side coordinates, canonical
/// order) and the untouched middle.
#[derive(Debug, Clone)]
pub struct CapSplit {
    pub low: Fiber,
    pub middle: Fiber,
    pub high: Fiber,
}

/// Split by positions: `<= s0` goes to the lower cap, `>= tl` to the upper.
pub fn split_caps(f: &Fiber, k: usize, s0: f64, tl: f64) -> CapSplit {
    let ranges = f.column_ranges(k, 1);
    let mut parts: [(Vec<usize>, Vec<Block>); 3] = Default::default();
    for (b, r) in f.blocks.iter().zip(ranges) {
        let pos = b.position();
        let slot = if pos <= s0 {
            0
        } else if pos >= tl {
            2
        } else {
            1
        };
        parts[slot].0.extend(r);
        parts[slot].1.push(*b);
    }
    let make = |(cols, blocks): &(Vec<usize>, Vec<Block>), side: Option<Side>| {
        let fiber = Fiber {
            frame: linalg::select_columns(&f.frame, cols),
            blocks: match side {
                Some(s) => blocks.iter().map(|&b| to_side(b, s)).collect(),
                None => blocks.clone(),
            },
        };
        if side.is_some() {
            canonical_order(&fiber, k)
        } else {
            fiber
        }
    };
    CapSplit {
        low: make(&parts[0], Some(Side::Zero)),
        middle: make(&parts[1], None),
        high: make(&parts[2], Some(Side::One)),
    }
}

/// Reassemble a split; caps are given in side coordinates.
pub fn join_caps(low: &Fiber, middle: &Fiber, high: &Fiber) -> Fiber {
    let n = low.frame.nrows().max(middle.frame.nrows()).max(high.frame.nrows());
    let frame = linalg::hstack(&[&low.frame, &middle.frame, &high.frame], n);
    let mut blocks: Vec<Block> = low.blocks.clone();
    blocks.extend(middle.blocks.iter().cloned());
    blocks.extend(high.blocks.iter().map(|&b| from_side(b, Side::One)));
    Fiber { frame, blocks }
}

/// Number of leading endpoint blocks in a canonical cap.
pub fn zero_count(f: &Fiber) -> usize {
    f.blocks.iter().filter(|b| matches!(b, Block::Zero)).count()
}

/// Normal form of a vertex cap: between one and `k` endpoint blocks.
///
/// The cap is in side coordinates, canonical order, with interior positions in
/// `(0, s0]`. Frame columns are reused: endpoint blocks turned interior keep
/// their columns, grouped `k` at a time.
pub fn modify_vertex(cap: &Fiber, k: usize, s0: f64) -> Result<Fiber> {
    let j = zero_count(cap);
    let interior: Vec<f64> = cap.blocks[j..]
        .iter()
        .map(|b| match b {
            Block::Interior(t) => Ok(*t),
            other => Err(Error::Malformed(format!("cap block {other:?} out of canonical order"))),
        })
        .collect::<Result<_>>()?;
    if interior.iter().any(|&t| !(t > 0.0 && t <= s0 + 1e-12)) || interior.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Malformed("cap positions must be sorted inside (0, s0]".into()));
    }
    let rank = cap.rank();
    let out = if j > 0 && j <= k {
        cap.clone()
    } else if j > k {
        let kp = (j - 1) / k;
        let jp = j - kp * k;
        let xi1 = interior.first().copied().unwrap_or(s0);
        let xi = 0.5 * xi1;
        let mut blocks = vec![Block::Zero; jp];
        blocks.extend(std::iter::repeat(Block::Interior(xi)).take(kp));
        blocks.extend(interior.iter().map(|&t| Block::Interior(t)));
        Fiber {
            frame: cap.frame.clone(),
            blocks,
        }
    } else {
        if interior.is_empty() {
            return Err(Error::Hypothesis("cap has neither endpoint nor interior blocks".into()));
        }
        let mut blocks = vec![Block::Zero; k];
        blocks.extend(interior[1..].iter().map(|&t| Block::Interior(t)));
        Fiber {
            frame: cap.frame.clone(),
            blocks,
        }
    };
    debug_assert_eq!(out.blocks.iter().map(|b| b.width(k, 1)).sum::<usize>(), rank);
    Ok(out)
}

/// Degree of a closed loop of nonzero complex numbers, by phase unwrapping.
pub fn winding_number(dets: &[Complex64]) -> Result<i64> {
    if dets.len() < 2 {
        return Err(Error::Undersampling("need at least two samples".into()));
    }
    let scale = dets.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if dets.iter().any(|z| z.norm() <= 1e-12 * scale.max(1e-300)) {
        return Err(Error::Domain("loop passes through zero".into()));
    }
    let mut total = 0.0;
    for i in 0..dets.len() {
        let (a, b) = (dets[i], dets[(i + 1) % dets.len()]);
        let d = (b / a).arg();
        if d.abs() >= std::f64::consts::PI - 1e-9 {
            return Err(Error::Undersampling(format!(
                "phase jump {d:.3} between samples {i} and {}",
                (i + 1) % dets.len()
            )));
        }
        total += d;
    }
    let w = total / (2.0 * std::f64::consts::PI);
    let r = w.round();
    if (w - r).abs() > 1e-6 {
        return Err(Error::Undersampling(format!("unwrapped phase {w} is not an integer")));
    }
    Ok(r as i64)
}

/// `‖α(f) - f(0̲)·1‖` for a cap fiber `α`.
pub fn claim_deviation(cap: &Fiber, f: &DimensionDropElement) -> Result<f64> {
    let v = cap.assemble(f)?;
    let f0 = f.eval(crate::matrix_rep::EvalAt::Zero)[(0, 0)];
    Ok(linalg::op_norm(&(v - cap.projection() * f0)))
}

/// `sup_{0 < ξ <= s0} ‖f(ξ) - f(0)‖` on a mesh of `steps` points.
pub fn claim_window_sup(f: &DimensionDropElement, s0: f64, steps: usize) -> f64 {
    let f0 = f.value(0.0);
    (1..=steps)
        .map(|i| linalg::op_norm(&(f.value(s0 * i as f64 / steps as f64) - &f0)))
        .fold(0.0, f64::max)
}
