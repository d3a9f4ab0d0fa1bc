//! Separated sets, packing numbers and the packing facts they satisfy.
//!
//! A set is `eps`-separated when all pairwise distances are strictly greater
//! than `eps`. The exact packing number is the independence number of the
//! conflict graph whose edges join pairs at distance `<= eps`.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{DistanceMatrix, FiniteBimetricSpace, Metric, PointId};

/// Largest reduced conflict-graph component the exact solver will search.
pub const DEFAULT_EXACT_CAP: usize = 40;
const MAX_CAP: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparatedSet {
    pub points: Vec<PointId>,
    pub epsilon: f64,
    pub metric: Metric,
    pub maximal: bool,
}

impl SeparatedSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Checks strict separation of all pairs.
    pub fn is_separated(&self, space: &FiniteBimetricSpace) -> bool {
        let dm = space.metric(self.metric);
        self.points.iter().enumerate().all(|(a, x)| {
            self.points[a + 1..]
                .iter()
                .all(|y| dm.get(x.0, y.0) > self.epsilon)
        })
    }

    /// Checks that every point of `subset` lies within `epsilon` of the set.
    pub fn covers(&self, space: &FiniteBimetricSpace, subset: &[PointId]) -> bool {
        let dm = space.metric(self.metric);
        subset.iter().all(|z| {
            self.points
                .iter()
                .any(|c| dm.get(z.0, c.0) <= self.epsilon)
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PackingResult {
    pub count: usize,
    pub witness: SeparatedSet,
    /// True when `count` is proved optimal, false for a greedy lower bound.
    pub exact: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PackingMode {
    Exact,
    Greedy,
}

#[derive(Clone, Debug)]
pub struct PackingOptions {
    /// Cap on a reduced conflict-graph component for branch and bound (at most 64).
    pub cap: usize,
}

impl Default for PackingOptions {
    fn default() -> Self {
        Self {
            cap: DEFAULT_EXACT_CAP,
        }
    }
}

/// Greedy maximal `epsilon`-separated subset of `subset`, scanning in `order`
/// (ascending id when `None`).
pub fn greedy_maximal_separated(
    space: &FiniteBimetricSpace,
    metric: Metric,
    subset: &[PointId],
    epsilon: f64,
    order: Option<&[PointId]>,
) -> SeparatedSet {
    let scan: Vec<usize> = match order {
        Some(o) => o.iter().map(|p| p.0).collect(),
        None => sorted_indices(subset),
    };
    let chosen = greedy_indices(space.metric(metric), &scan, epsilon, None);
    let set = SeparatedSet {
        points: chosen.into_iter().map(PointId).collect(),
        epsilon,
        metric,
        maximal: true,
    };
    debug_assert!(set.is_separated(space));
    debug_assert!(set.covers(space, subset));
    set
}

/// A maximal separated set, which is also an `epsilon`-cover of `subset`.
pub fn covering_witness(
    space: &FiniteBimetricSpace,
    metric: Metric,
    subset: &[PointId],
    epsilon: f64,
) -> Vec<PointId> {
    greedy_maximal_separated(space, metric, subset, epsilon, None).points
}

pub fn packing_number(
    space: &FiniteBimetricSpace,
    metric: Metric,
    subset: &[PointId],
    epsilon: f64,
    mode: PackingMode,
) -> Result<PackingResult> {
    packing_number_with(space, metric, subset, epsilon, mode, &PackingOptions::default())
}

pub fn packing_number_with(
    space: &FiniteBimetricSpace,
    metric: Metric,
    subset: &[PointId],
    epsilon: f64,
    mode: PackingMode,
    opts: &PackingOptions,
) -> Result<PackingResult> {
    if subset.is_empty() {
        return Err(Error::Domain("packing number of an empty subset".into()));
    }
    for p in subset {
        space.check_point(*p)?;
    }
    let idx = sorted_indices(subset);
    let dm = space.metric(metric);
    let (points, exact) = match mode {
        PackingMode::Greedy => (greedy_indices(dm, &idx, epsilon, None), false),
        PackingMode::Exact => (
            exact_packing(dm, &idx, epsilon, ultrametric_shortcut(space, metric), opts.cap)?,
            true,
        ),
    };
    Ok(PackingResult {
        count: points.len(),
        witness: SeparatedSet {
            points: points.into_iter().map(PointId).collect(),
            epsilon,
            metric,
            maximal: !exact,
        },
        exact,
    })
}

fn sorted_indices(subset: &[PointId]) -> Vec<usize> {
    let mut idx: Vec<usize> = subset.iter().map(|p| p.0).collect();
    idx.sort_unstable();
    idx.dedup();
    idx
}

/// In an ultrametric "distance <= eps" is an equivalence relation, so the
/// conflict graph is a disjoint union of cliques and greedy is optimal.
/// The claim is trusted; validate the space first.
pub(crate) fn ultrametric_shortcut(space: &FiniteBimetricSpace, metric: Metric) -> bool {
    space.ultrametric2_claimed() && (metric == Metric::Rho2 || space.same_metric())
}

/// Greedy scan; stops early once more than `limit` points are chosen.
pub(crate) fn greedy_indices(
    dm: &DistanceMatrix,
    scan: &[usize],
    eps: f64,
    limit: Option<usize>,
) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::new();
    for &p in scan {
        let row = dm.row(p);
        if chosen.iter().all(|&c| row[c] > eps) {
            chosen.push(p);
            if let Some(k) = limit {
                if chosen.len() > k {
                    break;
                }
            }
        }
    }
    chosen
}

/// Size of a greedy clique cover of the conflict graph, an upper bound on the
/// packing number. Returns `None` once more than `limit` cliques are needed.
pub(crate) fn clique_cover_bound(
    dm: &DistanceMatrix,
    scan: &[usize],
    eps: f64,
    limit: Option<usize>,
) -> Option<usize> {
    let m = scan.len();
    let mut covered = vec![false; m];
    let mut count = 0usize;
    let mut clique: Vec<usize> = Vec::new();
    for a in 0..m {
        if covered[a] {
            continue;
        }
        covered[a] = true;
        clique.clear();
        clique.push(scan[a]);
        let row_a = dm.row(scan[a]);
        for b in (a + 1)..m {
            if covered[b] || row_a[scan[b]] > eps {
                continue;
            }
            let row_b = dm.row(scan[b]);
            if clique[1..].iter().all(|&w| row_b[w] <= eps) {
                covered[b] = true;
                clique.push(scan[b]);
            }
        }
        count += 1;
        if let Some(k) = limit {
            if count > k {
                return None;
            }
        }
    }
    Some(count)
}

/// Greedy clique partition of the conflict graph on all points: label per
/// point and the number of cliques. Any subset meets at least as many cliques
/// as its packing number.
pub(crate) fn clique_partition(dm: &DistanceMatrix, eps: f64) -> (Vec<u32>, usize) {
    let n = dm.len();
    let mut label = vec![u32::MAX; n];
    let mut count = 0usize;
    let mut clique: Vec<usize> = Vec::new();
    for a in 0..n {
        if label[a] != u32::MAX {
            continue;
        }
        label[a] = count as u32;
        clique.clear();
        let row_a = dm.row(a);
        for b in (a + 1)..n {
            if label[b] != u32::MAX || row_a[b] > eps {
                continue;
            }
            let row_b = dm.row(b);
            if clique.iter().all(|&w| row_b[w] <= eps) {
                label[b] = count as u32;
                clique.push(b);
            }
        }
        count += 1;
    }
    (label, count)
}

/// Outcome of asking whether a packing number is at most `k`.
#[derive(Debug)]
pub(crate) enum Decision {
    /// A separated set of size greater than `k`.
    Exceeds(Vec<usize>),
    /// A certified upper bound `<= k`.
    AtMost(#[cfg_attr(not(test), allow(dead_code))] usize),
}

/// Decides `N(scan, eps) <= k` using cheap bounds first and branch and bound
/// only when greedy and clique cover disagree around `k`.
pub(crate) fn decide_at_most(
    dm: &DistanceMatrix,
    scan: &[usize],
    eps: f64,
    k: usize,
    ultrametric: bool,
    cap: usize,
) -> Result<Decision> {
    if scan.len() <= k {
        return Ok(Decision::AtMost(scan.len()));
    }
    let greedy = greedy_indices(dm, scan, eps, Some(k));
    if greedy.len() > k {
        return Ok(Decision::Exceeds(greedy));
    }
    if ultrametric {
        return Ok(Decision::AtMost(greedy.len()));
    }
    if let Some(ub) = clique_cover_bound(dm, scan, eps, Some(k)) {
        return Ok(Decision::AtMost(ub));
    }
    let best = exact_mis(dm, scan, eps, cap)?;
    if best.len() > k {
        Ok(Decision::Exceeds(best))
    } else {
        Ok(Decision::AtMost(best.len()))
    }
}

/// Exact packing: greedy/clique-cover certificate when they agree, otherwise
/// reduction plus branch and bound.
pub(crate) fn exact_packing(
    dm: &DistanceMatrix,
    scan: &[usize],
    eps: f64,
    ultrametric: bool,
    cap: usize,
) -> Result<Vec<usize>> {
    let greedy = greedy_indices(dm, scan, eps, None);
    if ultrametric || clique_cover_bound(dm, scan, eps, Some(greedy.len())).is_some() {
        return Ok(greedy);
    }
    exact_mis(dm, scan, eps, cap)
}

/// Maximum independent set of the conflict graph on `scan`.
///
/// Simplicial vertices (closed neighbourhood is a clique) are taken greedily,
/// the remaining kernel is split into connected components, and each component
/// of at most `cap` vertices is solved by branch and bound with a clique-cover
/// bound, max-degree branching and the degree-<=1 rule.
pub(crate) fn exact_mis(
    dm: &DistanceMatrix,
    scan: &[usize],
    eps: f64,
    cap: usize,
) -> Result<Vec<usize>> {
    let cap = cap.min(MAX_CAP);
    let m = scan.len();
    let mut nbrs: Vec<Vec<usize>> = vec![Vec::new(); m];
    for a in 0..m {
        let row = dm.row(scan[a]);
        for b in (a + 1)..m {
            if row[scan[b]] <= eps {
                nbrs[a].push(b);
                nbrs[b].push(a);
            }
        }
    }
    let mut alive = vec![true; m];
    let mut chosen: Vec<usize> = Vec::new();

    // simplicial reduction to a fixpoint
    let mut changed = true;
    while changed {
        changed = false;
        for v in 0..m {
            if !alive[v] {
                continue;
            }
            let live: Vec<usize> = nbrs[v].iter().copied().filter(|&u| alive[u]).collect();
            let is_clique = live.iter().enumerate().all(|(i, &u)| {
                let ru = dm.row(scan[u]);
                live[i + 1..].iter().all(|&w| ru[scan[w]] <= eps)
            });
            if is_clique {
                chosen.push(v);
                alive[v] = false;
                for u in live {
                    alive[u] = false;
                }
                changed = true;
            }
        }
    }

    // components of the kernel
    let mut comp_of = vec![usize::MAX; m];
    let mut components: Vec<Vec<usize>> = Vec::new();
    for s in 0..m {
        if !alive[s] || comp_of[s] != usize::MAX {
            continue;
        }
        let id = components.len();
        let mut stack = vec![s];
        let mut comp = Vec::new();
        comp_of[s] = id;
        while let Some(v) = stack.pop() {
            comp.push(v);
            for &u in &nbrs[v] {
                if alive[u] && comp_of[u] == usize::MAX {
                    comp_of[u] = id;
                    stack.push(u);
                }
            }
        }
        comp.sort_unstable();
        components.push(comp);
    }
    if let Some(big) = components.iter().map(Vec::len).max() {
        if big > cap {
            return Err(Error::CapExceeded { kernel: big, cap });
        }
    }

    for comp in &components {
        let k = comp.len();
        let mut adj = vec![0u64; k];
        for i in 0..k {
            let ri = dm.row(scan[comp[i]]);
            for j in 0..k {
                if i != j && ri[scan[comp[j]]] <= eps {
                    adj[i] |= 1u64 << j;
                }
            }
        }
        let all = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
        let mut best = greedy_mask(&adj, all);
        let mut cur = 0u64;
        branch_and_bound(&adj, all, &mut cur, &mut best);
        for i in 0..k {
            if best >> i & 1 == 1 {
                chosen.push(comp[i]);
            }
        }
    }

    let mut out: Vec<usize> = chosen.into_iter().map(|a| scan[a]).collect();
    out.sort_unstable();
    Ok(out)
}

fn greedy_mask(adj: &[u64], mut cand: u64) -> u64 {
    let mut set = 0u64;
    while cand != 0 {
        let v = cand.trailing_zeros() as usize;
        set |= 1 << v;
        cand &= !(adj[v] | 1 << v);
    }
    set
}

fn clique_cover_mask(adj: &[u64], mut rem: u64) -> u32 {
    let mut count = 0;
    while rem != 0 {
        let v = rem.trailing_zeros() as usize;
        let mut clique_cands = rem & adj[v];
        rem &= !(1 << v);
        while clique_cands != 0 {
            let u = clique_cands.trailing_zeros() as usize;
            rem &= !(1 << u);
            clique_cands &= adj[u];
        }
        count += 1;
    }
    count
}

fn branch_and_bound(adj: &[u64], mut cand: u64, cur: &mut u64, best: &mut u64) {
    // degree <= 1 vertices belong to some maximum independent set
    loop {
        let mut forced = None;
        let mut c = cand;
        while c != 0 {
            let v = c.trailing_zeros() as usize;
            c &= c - 1;
            if (adj[v] & cand).count_ones() <= 1 {
                forced = Some(v);
                break;
            }
        }
        match forced {
            Some(v) => {
                *cur |= 1 << v;
                cand &= !(adj[v] | 1 << v);
            }
            None => break,
        }
    }
    if cand == 0 {
        if cur.count_ones() > best.count_ones() {
            *best = *cur;
        }
        return;
    }
    if cur.count_ones() + clique_cover_mask(adj, cand) <= best.count_ones() {
        return;
    }
    let mut pick = 0usize;
    let mut pick_deg = 0u32;
    let mut c = cand;
    while c != 0 {
        let v = c.trailing_zeros() as usize;
        c &= c - 1;
        let deg = (adj[v] & cand).count_ones();
        if deg > pick_deg {
            pick = v;
            pick_deg = deg;
        }
    }
    let saved = *cur;
    *cur |= 1 << pick;
    branch_and_bound(adj, cand & !(adj[pick] | 1 << pick), cur, best);
    *cur = saved;
    branch_and_bound(adj, cand & !(1 << pick), cur, best);
    *cur = saved;
}

// ---------------------------------------------------------------------------
// Packing facts

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainInstance {
    pub subset: Vec<PointId>,
    pub r: f64,
    pub s: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FactSamples {
    /// `(subset, eps)` pairs for the packing-implies-covering fact.
    pub covering: Vec<(Vec<PointId>, f64)>,
    /// Instances of the one-step chain rule.
    pub chain: Vec<ChainInstance>,
    /// `(s, k0)` pairs for the iterated chain rule.
    pub chaining: Vec<(f64, u32)>,
}

impl FactSamples {
    /// Random instances with scales drawn from the spectrum, half-spectrum
    /// values and uniform draws on `[0, diam]`.
    pub fn random(space: &FiniteBimetricSpace, metric: Metric, count: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spectrum = space.distance_spectrum(metric).values;
        let diam = space.full_diameter(metric);
        let n = space.len();
        let scale = |rng: &mut ChaCha8Rng| -> f64 {
            match (rng.random_range(0..3u8), spectrum.is_empty()) {
                (_, true) => 0.0,
                (0, false) => *spectrum.choose(rng).unwrap(),
                (1, false) => *spectrum.choose(rng).unwrap() / 2.0,
                _ => rng.random::<f64>() * diam,
            }
        };
        let subset = |rng: &mut ChaCha8Rng| -> Vec<PointId> {
            if rng.random_bool(0.3) {
                return (0..n).map(PointId).collect();
            }
            let mut s: Vec<PointId> = (0..n).filter(|_| rng.random_bool(0.5)).map(PointId).collect();
            if s.is_empty() {
                s.push(PointId(rng.random_range(0..n)));
            }
            s
        };
        let mut out = FactSamples::default();
        for _ in 0..count {
            let b = subset(&mut rng);
            let e = scale(&mut rng);
            out.covering.push((b, e));
            let b = subset(&mut rng);
            let r = scale(&mut rng);
            let s = scale(&mut rng);
            out.chain.push(ChainInstance { subset: b, r, s });
            let s = scale(&mut rng).max(f64::MIN_POSITIVE);
            let k0 = rng.random_range(1..=4u32);
            out.chaining.push((s, k0));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fact {
    PackingImpliesCovering,
    ChainRule,
    ChainRuleManyTerms,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactCheck {
    pub fact: Fact,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FactReport {
    pub checks: Vec<FactCheck>,
    pub violations: usize,
}

impl FactReport {
    fn push(&mut self, check: FactCheck) {
        if !check.holds {
            self.violations += 1;
        }
        self.checks.push(check);
    }

    pub fn all_hold(&self) -> bool {
        self.violations == 0
    }
}

fn exact_count(
    space: &FiniteBimetricSpace,
    metric: Metric,
    subset: &[PointId],
    eps: f64,
) -> Result<usize> {
    Ok(packing_number(space, metric, subset, eps, PackingMode::Exact)?.count)
}

fn sup_ball_packing(space: &FiniteBimetricSpace, metric: Metric, centers: &[PointId], r: f64, s: f64) -> Result<usize> {
    let mut best = 0;
    for &a in centers {
        let ball = space.ball(metric, a, r);
        best = best.max(exact_count(space, metric, &ball, s)?);
    }
    Ok(best)
}

/// Checks packing-implies-covering, the chain rule
/// `N(B,s) <= N(B,r) * sup_{a in B} N(B(a,r), s)` and its iterated form
/// `sup_x N(B(x, s 2^k0), s) <= prod_k sup_x N(B(x, s 2^k), s 2^(k-1))`
/// on the given instances, using exact packing numbers.
pub fn verify_packing_facts(
    space: &FiniteBimetricSpace,
    metric: Metric,
    samples: &FactSamples,
) -> Result<FactReport> {
    let mut report = FactReport::default();
    let all: Vec<PointId> = space.points().collect();

    for (subset, eps) in &samples.covering {
        let set = greedy_maximal_separated(space, metric, subset, *eps, None);
        let sep = set.is_separated(space);
        let cov = set.covers(space, subset);
        report.push(FactCheck {
            fact: Fact::PackingImpliesCovering,
            lhs: set.len() as f64,
            rhs: subset.len() as f64,
            holds: sep && cov,
            detail: format!("|B|={}, eps={eps}, separated={sep}, covers={cov}", subset.len()),
        });
    }

    for inst in &samples.chain {
        let lhs = exact_count(space, metric, &inst.subset, inst.s)?;
        let outer = exact_count(space, metric, &inst.subset, inst.r)?;
        let inner = sup_ball_packing(space, metric, &inst.subset, inst.r, inst.s)?;
        let rhs = outer * inner;
        report.push(FactCheck {
            fact: Fact::ChainRule,
            lhs: lhs as f64,
            rhs: rhs as f64,
            holds: lhs <= rhs,
            detail: format!(
                "|B|={}, r={}, s={}: N(B,s)={lhs} <= N(B,r)={outer} * sup N(B(a,r),s)={inner}",
                inst.subset.len(),
                inst.r,
                inst.s
            ),
        });
    }

    for &(s, k0) in &samples.chaining {
        let top = s * f64::powi(2.0, k0 as i32);
        let lhs = sup_ball_packing(space, metric, &all, top, s)?;
        let mut rhs: usize = 1;
        for k in 1..=k0 {
            let r = s * f64::powi(2.0, k as i32);
            let e = s * f64::powi(2.0, k as i32 - 1);
            rhs = rhs.saturating_mul(sup_ball_packing(space, metric, &all, r, e)?);
        }
        report.push(FactCheck {
            fact: Fact::ChainRuleManyTerms,
            lhs: lhs as f64,
            rhs: rhs as f64,
            holds: lhs <= rhs,
            detail: format!("s={s}, k0={k0}"),
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{DistanceMatrix, Label};

    fn line(n: usize) -> FiniteBimetricSpace {
        let labels = (0..n).map(|i| Label::Coords(vec![i as f64])).collect();
        let rho = DistanceMatrix::from_fn(n, |i, j| (i as f64 - j as f64).abs());
        FiniteBimetricSpace::single(labels, rho, false).unwrap()
    }

    fn hamming(d: u32) -> FiniteBimetricSpace {
        let n = 1usize << d;
        let labels = (0..n).map(|i| Label::Name(format!("{i:0w$b}", w = d as usize))).collect();
        let rho = DistanceMatrix::from_fn(n, |i, j| (i ^ j).count_ones() as f64);
        FiniteBimetricSpace::single(labels, rho, false).unwrap()
    }

    /// Exhaustive oracle: largest subset with all pairwise distances > eps.
    fn brute_force(space: &FiniteBimetricSpace, subset: &[PointId], eps: f64) -> usize {
        let m = subset.len();
        let dm = space.metric(Metric::Rho1);
        let mut best = 0;
        for mask in 1u32..(1 << m) {
            let pts: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).map(|i| subset[i].0).collect();
            let ok = pts
                .iter()
                .enumerate()
                .all(|(a, &x)| pts[a + 1..].iter().all(|&y| dm.get(x, y) > eps));
            if ok {
                best = best.max(pts.len());
            }
        }
        best
    }

    fn ids(v: &[usize]) -> Vec<PointId> {
        v.iter().map(|&i| PointId(i)).collect()
    }

    #[test]
    fn greedy_on_hamming_square() {
        let h = hamming(2);
        let all: Vec<_> = h.points().collect();
        let set = greedy_maximal_separated(&h, Metric::Rho1, &all, 1.0, None);
        assert_eq!(set.points, ids(&[0, 3]));
        assert!(set.covers(&h, &all));
        assert!(set.is_separated(&h));
    }

    #[test]
    fn greedy_degenerate_scales() {
        let l = line(4);
        let all: Vec<_> = l.points().collect();
        assert_eq!(greedy_maximal_separated(&l, Metric::Rho1, &all, 3.0, None).points, ids(&[0]));
        assert_eq!(greedy_maximal_separated(&l, Metric::Rho1, &all, 0.5, None).points, all);
        let rev: Vec<_> = all.iter().rev().copied().collect();
        assert_eq!(
            greedy_maximal_separated(&l, Metric::Rho1, &all, 3.0, Some(&rev)).points,
            ids(&[3])
        );
    }

    #[test]
    fn packing_examples_match_brute_force() {
        let h = hamming(2);
        let all: Vec<_> = h.points().collect();
        assert_eq!(brute_force(&h, &all, 1.0), 2);
        assert_eq!(packing_number(&h, Metric::Rho1, &all, 1.0, PackingMode::Exact).unwrap().count, 2);

        let l = line(4);
        let all: Vec<_> = l.points().collect();
        assert_eq!(brute_force(&l, &all, 1.0), 2);
        let res = packing_number(&l, Metric::Rho1, &all, 1.0, PackingMode::Exact).unwrap();
        assert_eq!(res.count, 2);
        assert!(res.exact);
        assert!(res.witness.is_separated(&l));
        assert_eq!(packing_number(&l, Metric::Rho1, &all, 0.0, PackingMode::Exact).unwrap().count, 4);
    }

    #[test]
    fn hamming_cube_packings_need_branch_and_bound() {
        // A(4, d) codes: min distance > 1 -> 8, > 2 -> 2, > 3 -> 2
        let h = hamming(4);
        let all: Vec<_> = h.points().collect();
        let expect = [(0.0, 16), (1.0, 8), (2.0, 2), (3.0, 2), (4.0, 1)];
        for (eps, n) in expect {
            let res = packing_number(&h, Metric::Rho1, &all, eps, PackingMode::Exact).unwrap();
            assert_eq!(res.count, n, "eps={eps}");
            assert!(res.witness.is_separated(&h));
        }
    }

    #[test]
    fn cap_exceeded_is_reported() {
        let h = hamming(7);
        let all: Vec<_> = h.points().collect();
        let err = packing_number(&h, Metric::Rho1, &all, 2.0, PackingMode::Exact).unwrap_err();
        assert!(matches!(err, Error::CapExceeded { .. }));
        let greedy = packing_number(&h, Metric::Rho1, &all, 2.0, PackingMode::Greedy).unwrap();
        assert!(!greedy.exact);
    }

    #[test]
    fn covering_witness_on_line() {
        let l = line(4);
        let all: Vec<_> = l.points().collect();
        let c = covering_witness(&l, Metric::Rho1, &all, 1.0);
        assert_eq!(c, ids(&[0, 2]));
        for z in &all {
            assert!(c.iter().any(|y| l.dist(Metric::Rho1, *z, *y) <= 1.0));
        }
    }

    #[test]
    fn chain_rule_example_on_line() {
        let l = line(4);
        let all: Vec<_> = l.points().collect();
        let samples = FactSamples {
            covering: vec![(all.clone(), 1.0)],
            chain: vec![ChainInstance { subset: all.clone(), r: 2.0, s: 1.0 }],
            chaining: vec![(1.0, 1), (4.0, 2)],
        };
        let report = verify_packing_facts(&l, Metric::Rho1, &samples).unwrap();
        assert!(report.all_hold());
        let chain = &report.checks[1];
        assert_eq!((chain.lhs, chain.rhs), (2.0, 4.0));
    }

    #[test]
    fn decision_agrees_with_exact() {
        let h = hamming(4);
        let scan: Vec<usize> = (0..16).collect();
        let dm = h.metric(Metric::Rho1);
        for k in 0..10 {
            match decide_at_most(dm, &scan, 1.0, k, false, 40).unwrap() {
                Decision::Exceeds(w) => {
                    assert!(k < 8);
                    assert!(w.len() > k);
                }
                Decision::AtMost(ub) => {
                    assert!(k >= 8);
                    assert!(ub <= k);
                }
            }
        }
    }
}
