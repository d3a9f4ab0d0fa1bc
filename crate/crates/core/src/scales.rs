//! Entropic, diametric, doubling and outer scales of a finite space.
//!
//! Every definition quantifies over all real radii and resolutions, but on a
//! finite space balls and packing numbers are piecewise constant between
//! distance-spectrum values: a closed ball `B(x, r)` only changes when `r`
//! crosses a spectrum value, and `N(B, s)` (strict separation) is constant on
//! `[d_j, d_{j+1})`. Each scale is therefore computed exactly from finitely
//! many candidates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{FiniteBimetricSpace, Metric, PointId};
use crate::packing::{self, Decision, PackingOptions};

const REL_TOL: f64 = 1e-12;

#[derive(Clone, Debug, Default)]
pub struct ScaleOptions {
    pub packing: PackingOptions,
}

/// For each center, points sorted by `rho1` distance and the distinct balls.
pub(crate) struct BallIndex {
    order: Vec<Vec<u32>>,
    /// `(radius, prefix length)` with strictly increasing prefix length; the
    /// radius is the smallest spectrum value realizing that ball.
    groups: Vec<Vec<(f64, usize)>>,
}

impl BallIndex {
    pub(crate) fn new(space: &FiniteBimetricSpace, metric: Metric) -> Self {
        let dm = space.metric(metric);
        let spectrum = space.distance_spectrum(metric).values;
        let n = space.len();
        let built: Vec<(Vec<u32>, Vec<(f64, usize)>)> = (0..n)
            .into_par_iter()
            .map(|x| {
                let row = dm.row(x);
                let mut order: Vec<u32> = (0..n as u32).collect();
                order.sort_by(|&a, &b| {
                    row[a as usize]
                        .total_cmp(&row[b as usize])
                        .then(a.cmp(&b))
                });
                let mut groups = Vec::new();
                let mut last = 1usize;
                for &r in &spectrum {
                    let len = order.partition_point(|&p| row[p as usize] <= r);
                    if len > last {
                        groups.push((r, len));
                        last = len;
                    }
                }
                (order, groups)
            })
            .collect();
        let (order, groups) = built.into_iter().unzip();
        Self { order, groups }
    }

    pub(crate) fn groups(&self, x: usize) -> &[(f64, usize)] {
        &self.groups[x]
    }

    /// Ball members in ascending id order.
    pub(crate) fn ball_sorted(&self, x: usize, len: usize) -> Vec<usize> {
        let mut b: Vec<usize> = self.order[x][..len].iter().map(|&p| p as usize).collect();
        b.sort_unstable();
        b
    }
}

/// Largest integer `k` with `ln k <= log_bound`, saturating at `cap`.
pub(crate) fn count_threshold(log_bound: f64, cap: usize) -> usize {
    if log_bound >= (cap as f64).ln() {
        return cap;
    }
    let mut k = log_bound.exp().floor().max(0.0) as usize;
    while ((k + 1) as f64).ln() <= log_bound {
        k += 1;
    }
    while k > 0 && (k as f64).ln() > log_bound {
        k -= 1;
    }
    k
}

fn leq(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + REL_TOL * rhs.abs().max(lhs.abs()) + 1e-300
}

// ---------------------------------------------------------------------------
// Entropic scale

/// The constraint that fails just below the entropic scale: inside
/// `B1(center, radius)` there are more than `e^(alpha radius)` points that are
/// `rho2`-separated at resolution `below` (`below == 0` stands for `s -> 0+`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropicWitness {
    pub center: PointId,
    pub radius: f64,
    pub below: f64,
    pub separated: Vec<PointId>,
}

impl EntropicWitness {
    /// Re-checks the certificate against the space.
    pub fn verify(&self, space: &FiniteBimetricSpace, alpha: f64) -> bool {
        let d1 = space.metric(Metric::Rho1);
        let d2 = space.metric(Metric::Rho2);
        let inside = self
            .separated
            .iter()
            .all(|p| d1.get(self.center.0, p.0) <= self.radius);
        let separated = self.separated.iter().enumerate().all(|(a, x)| {
            self.separated[a + 1..]
                .iter()
                .all(|y| d2.get(x.0, y.0) > self.below)
        });
        let too_many = (self.separated.len() as f64).ln() > alpha * self.radius;
        inside && separated && too_many
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropicScale {
    pub value: f64,
    /// `None` when every `s > 0` is admissible (value 0).
    pub witness: Option<EntropicWitness>,
    /// Set if no candidate was admissible; the value then falls back to `diam2`.
    pub exhausted: bool,
}

/// `inf{ s > 0 : N2(B1(x, r), s) <= e^(alpha r) for all x, r > 0 }`.
///
/// Radii range over the `rho1` spectrum (the smallest radius realizing each
/// ball binds), resolutions over `{0} ∪ rho2` spectrum, and admissibility is
/// monotone in `s`, so a binary search returns the smallest admissible
/// candidate.
pub fn entropic_scale(space: &FiniteBimetricSpace, alpha: f64) -> Result<EntropicScale> {
    entropic_scale_with(space, alpha, &ScaleOptions::default())
}

pub fn entropic_scale_with(
    space: &FiniteBimetricSpace,
    alpha: f64,
    opts: &ScaleOptions,
) -> Result<EntropicScale> {
    check_alpha(alpha)?;
    let index = BallIndex::new(space, Metric::Rho1);
    entropic_from_index(space, &index, alpha, opts)
}

pub(crate) fn entropic_from_index(
    space: &FiniteBimetricSpace,
    index: &BallIndex,
    alpha: f64,
    opts: &ScaleOptions,
) -> Result<EntropicScale> {
    let mut candidates = vec![0.0];
    candidates.extend(space.distance_spectrum(Metric::Rho2).values);

    let ultra = packing::ultrametric_shortcut(space, Metric::Rho2);
    let check = |s: f64, serial: bool| -> Result<Option<EntropicWitness>> {
        let cliques = packing::clique_partition(space.metric(Metric::Rho2), s);
        let scan_center = |x: usize| -> Result<Option<EntropicWitness>> {
            find_violation(space, index, x, alpha, s, ultra, &cliques, opts)
        };
        if serial {
            for x in 0..space.len() {
                if let Some(w) = scan_center(x)? {
                    return Ok(Some(w));
                }
            }
            Ok(None)
        } else {
            (0..space.len())
                .into_par_iter()
                .find_map_any(|x| scan_center(x).transpose())
                .transpose()
        }
    };

    // smallest admissible candidate
    let (mut lo, mut hi) = (0usize, candidates.len());
    while lo < hi {
        let mid = (lo + hi) / 2;
        if check(candidates[mid], false)?.is_none() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    if lo == candidates.len() {
        let w = check(*candidates.last().unwrap(), true)?;
        return Ok(EntropicScale {
            value: space.full_diameter(Metric::Rho2),
            witness: w,
            exhausted: true,
        });
    }
    let witness = if lo == 0 {
        None
    } else {
        Some(check(candidates[lo - 1], true)?.ok_or_else(|| {
            Error::Internal("entropic scan lost its binding constraint".into())
        })?)
    };
    Ok(EntropicScale {
        value: candidates[lo],
        witness,
        exhausted: false,
    })
}

#[allow(clippy::too_many_arguments)]
fn find_violation(
    space: &FiniteBimetricSpace,
    index: &BallIndex,
    x: usize,
    alpha: f64,
    s: f64,
    ultra: bool,
    cliques: &(Vec<u32>, usize),
    opts: &ScaleOptions,
) -> Result<Option<EntropicWitness>> {
    let d2 = space.metric(Metric::Rho2);
    let (labels, total) = (&cliques.0, cliques.1);
    let mut seen = vec![false; total];
    let (mut distinct, mut covered) = (0usize, 0usize);
    for &(r, len) in index.groups(x) {
        let k = count_threshold(alpha * r, len);
        if total <= k {
            break;
        }
        for &p in &index.order[x][covered..len] {
            let c = labels[p as usize];
            if !seen[c as usize] {
                seen[c as usize] = true;
                distinct += 1;
            }
        }
        covered = len;
        if k >= len || distinct <= k {
            continue;
        }
        let ball = index.ball_sorted(x, len);
        match packing::decide_at_most(d2, &ball, s, k, ultra, opts.packing.cap) {
            Ok(Decision::AtMost(_)) => {}
            Ok(Decision::Exceeds(set)) => {
                return Ok(Some(EntropicWitness {
                    center: PointId(x),
                    radius: r,
                    below: s,
                    separated: set.into_iter().map(PointId).collect(),
                }))
            }
            Err(Error::CapExceeded { kernel, cap }) => {
                return Err(Error::ScaleCapExceeded {
                    center: x,
                    radius: r,
                    kernel,
                    cap,
                })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// Diametric scale

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiametricScale {
    pub value: f64,
    pub center: PointId,
    pub radius: f64,
    /// `diam2(B1(center, radius))`.
    pub diameter: f64,
}

impl DiametricScale {
    pub fn verify(&self, space: &FiniteBimetricSpace, alpha: f64) -> bool {
        let ball = space.ball(Metric::Rho1, self.center, self.radius);
        let diam = space.diameter(Metric::Rho2, &ball).unwrap_or(f64::NAN);
        diam == self.diameter && self.value == diam * (-alpha * self.radius).exp()
    }
}

/// `sup_{x, r} diam2(B1(x, r)) e^(-alpha r)`, attained at the smallest radius
/// realizing each ball.
pub fn diametric_scale(space: &FiniteBimetricSpace, alpha: f64) -> Result<DiametricScale> {
    check_alpha(alpha)?;
    let index = BallIndex::new(space, Metric::Rho1);
    Ok(diametric_from_index(space, &index, alpha))
}

pub(crate) fn diametric_from_index(
    space: &FiniteBimetricSpace,
    index: &BallIndex,
    alpha: f64,
) -> DiametricScale {
    let d2 = space.metric(Metric::Rho2);
    let ultra = space.ultrametric2_claimed();
    let per_center: Vec<(f64, f64, f64)> = (0..space.len())
        .into_par_iter()
        .map(|x| {
            let order = &index.order[x];
            let mut best = (0.0, 0.0, 0.0);
            let mut diam = 0.0f64;
            let mut added = 1usize;
            for &(r, len) in index.groups(x) {
                while added < len {
                    let p = order[added] as usize;
                    if ultra {
                        // every pair is within max(rho2(x, p), rho2(x, q))
                        diam = diam.max(d2.get(x, p));
                    } else {
                        let row = d2.row(p);
                        for &q in &order[..added] {
                            diam = diam.max(row[q as usize]);
                        }
                    }
                    added += 1;
                }
                let v = diam * (-alpha * r).exp();
                if v > best.0 {
                    best = (v, r, diam);
                }
            }
            best
        })
        .collect();
    let mut out = DiametricScale {
        value: 0.0,
        center: PointId(0),
        radius: 0.0,
        diameter: 0.0,
    };
    for (x, (v, r, diam)) in per_center.into_iter().enumerate() {
        if v > out.value {
            out = DiametricScale {
                value: v,
                center: PointId(x),
                radius: r,
                diameter: diam,
            };
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Doubling scale

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoublingScale {
    pub value: f64,
    /// The constancy interval `[start, end)` containing the infimum
    /// (`end` is infinite for the last interval).
    pub interval_start: f64,
    pub interval_end: f64,
    /// `max_x N(B(x, 2s), s)` on that interval.
    pub max_packing: usize,
}

/// `inf{ s > 0 : N(B(x, 2s), s) <= e^(2 alpha s) for all x }` for a single metric.
///
/// The left side is constant on intervals between consecutive values of
/// `{d, d/2 : d in spectrum}`, so on each interval the admissible set is
/// `[max(start, ln L / 2 alpha), end)`. The first interval starts at `0+`,
/// where every ball `B(x, 2s)` is a singleton, so on a finite space the
/// infimum is always 0.
pub fn doubling_scale(space: &FiniteBimetricSpace, alpha: f64) -> Result<DoublingScale> {
    doubling_scale_with(space, alpha, &ScaleOptions::default())
}

pub fn doubling_scale_with(
    space: &FiniteBimetricSpace,
    alpha: f64,
    opts: &ScaleOptions,
) -> Result<DoublingScale> {
    check_alpha(alpha)?;
    require_single(space)?;
    let spectrum = space.distance_spectrum(Metric::Rho1).values;
    let mut crit: Vec<f64> = spectrum.iter().flat_map(|&d| [d, d / 2.0]).collect();
    crit.sort_by(f64::total_cmp);
    crit.dedup();
    let dm = space.metric(Metric::Rho1);
    let ultra = packing::ultrametric_shortcut(space, Metric::Rho1);

    let mut starts = vec![0.0];
    starts.extend(crit.iter().copied());
    for (i, &start) in starts.iter().enumerate() {
        let end = starts.get(i + 1).copied().unwrap_or(f64::INFINITY);
        let lhs = if start == 0.0 {
            1
        } else {
            let mut best = 1;
            for x in space.points() {
                let ball: Vec<usize> = space.ball(Metric::Rho1, x, 2.0 * start).iter().map(|p| p.0).collect();
                let set = packing::exact_packing(dm, &ball, start, ultra, opts.packing.cap)?;
                best = best.max(set.len());
            }
            best
        };
        let need = (lhs as f64).ln() / (2.0 * alpha);
        let inf = start.max(need);
        if inf < end {
            return Ok(DoublingScale {
                value: inf,
                interval_start: start,
                interval_end: end,
                max_packing: lhs,
            });
        }
    }
    Err(Error::Internal("doubling scan found no admissible interval".into()))
}

// ---------------------------------------------------------------------------
// Outer scale

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OuterScale {
    pub value: f64,
    /// Minimizing resolution; 0 stands for `gamma -> 0+`.
    pub gamma: f64,
    /// `N(Z, gamma)` at the minimizer.
    pub packing: usize,
}

/// `inf_{gamma > 0} gamma + ln N(Z, gamma) / alpha` for a single metric.
///
/// `N(Z, .)` is constant on `[d_j, d_{j+1})` so the objective is minimized at
/// left endpoints: `0+` (contributing `ln n / alpha`) and each spectrum value.
pub fn outer_scale(space: &FiniteBimetricSpace, alpha: f64) -> Result<OuterScale> {
    outer_scale_with(space, alpha, &ScaleOptions::default())
}

pub fn outer_scale_with(
    space: &FiniteBimetricSpace,
    alpha: f64,
    opts: &ScaleOptions,
) -> Result<OuterScale> {
    check_alpha(alpha)?;
    require_single(space)?;
    let dm = space.metric(Metric::Rho1);
    let all: Vec<usize> = (0..space.len()).collect();
    let ultra = packing::ultrametric_shortcut(space, Metric::Rho1);
    let n = space.len();

    let mut gammas = vec![0.0];
    gammas.extend(space.distance_spectrum(Metric::Rho1).values);
    let objective = |g: f64, count: usize| g + (count as f64).ln() / alpha;

    // bounds first, exact packing only where the minimum is undecided
    let bounds: Vec<(usize, usize)> = gammas
        .par_iter()
        .map(|&g| {
            if g == 0.0 {
                return (n, n);
            }
            let lb = packing::greedy_indices(dm, &all, g, None).len();
            let ub = if ultra {
                lb
            } else {
                packing::clique_cover_bound(dm, &all, g, None).unwrap_or(n)
            };
            (lb, ub)
        })
        .collect();
    let best_upper = gammas
        .iter()
        .zip(&bounds)
        .map(|(&g, &(_, ub))| objective(g, ub))
        .fold(f64::INFINITY, f64::min);

    let mut best = OuterScale {
        value: f64::INFINITY,
        gamma: 0.0,
        packing: n,
    };
    for (&g, &(lb, ub)) in gammas.iter().zip(&bounds) {
        if objective(g, lb) > best_upper {
            continue;
        }
        let count = if lb == ub {
            lb
        } else {
            packing::exact_mis(dm, &all, g, opts.packing.cap)?.len()
        };
        let v = objective(g, count);
        if v < best.value {
            best = OuterScale {
                value: v,
                gamma: g,
                packing: count,
            };
        }
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// All four scales

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleReport {
    pub alpha: f64,
    pub entropic: EntropicScale,
    pub diametric: DiametricScale,
    /// Present only when `rho1 == rho2`.
    pub doubling: Option<DoublingScale>,
    pub outer: Option<OuterScale>,
}

pub fn scale_report(space: &FiniteBimetricSpace, alpha: f64) -> Result<ScaleReport> {
    check_alpha(alpha)?;
    let opts = ScaleOptions::default();
    let index = BallIndex::new(space, Metric::Rho1);
    let entropic = entropic_from_index(space, &index, alpha, &opts)?;
    let diametric = diametric_from_index(space, &index, alpha);
    let (doubling, outer) = if space.same_metric() {
        (
            Some(doubling_scale_with(space, alpha, &opts)?),
            Some(outer_scale_with(space, alpha, &opts)?),
        )
    } else {
        (None, None)
    };
    Ok(ScaleReport {
        alpha,
        entropic,
        diametric,
        doubling,
        outer,
    })
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Domain(format!("alpha must be positive and finite, got {alpha}")));
    }
    Ok(())
}

fn require_single(space: &FiniteBimetricSpace) -> Result<()> {
    if space.same_metric() {
        Ok(())
    } else {
        Err(Error::NotSingleMetric)
    }
}

// ---------------------------------------------------------------------------
// Relations between scales

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationCheck {
    pub name: String,
    /// Report-only relations (those needing norm-convexity or connectedness)
    /// are computed but never counted as failures.
    pub asserted: bool,
    /// False when the relation's hypothesis does not hold.
    pub applicable: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationReport {
    pub alpha: f64,
    pub checks: Vec<RelationCheck>,
}

impl RelationReport {
    pub fn failures(&self) -> impl Iterator<Item = &RelationCheck> {
        self.checks
            .iter()
            .filter(|c| c.asserted && c.applicable && !c.holds)
    }

    pub fn all_hold(&self) -> bool {
        self.failures().next().is_none()
    }

    fn push(&mut self, name: impl Into<String>, asserted: bool, applicable: bool, lhs: f64, rhs: f64) {
        self.checks.push(RelationCheck {
            name: name.into(),
            asserted,
            applicable,
            lhs,
            rhs,
            holds: leq(lhs, rhs),
        });
    }
}

pub const DEFAULT_KAPPAS: [f64; 4] = [1.0, 2.0, 4.0, 8.0];

/// Checks the inter-scale inequalities that hold on every metric space, and
/// reports (without asserting) those that need norm-convexity or connectedness.
pub fn verify_scale_relations(
    space: &FiniteBimetricSpace,
    alpha: f64,
    kappas: &[f64],
) -> Result<RelationReport> {
    require_single(space)?;
    let s = entropic_scale(space, alpha)?.value;
    let doubling = doubling_scale(space, alpha)?.value;
    let outer = outer_scale(space, alpha)?.value;
    let diam = space.full_diameter(Metric::Rho1);
    let dm = space.metric(Metric::Rho1);
    let all: Vec<usize> = (0..space.len()).collect();
    let ultra = packing::ultrametric_shortcut(space, Metric::Rho1);
    let mut report = RelationReport {
        alpha,
        checks: Vec::new(),
    };

    report.push("doubling <= entropic", true, true, doubling, s);
    report.push("entropic <= 2 outer", true, true, s, 2.0 * outer);
    report.push(
        "1/alpha >= 2 diam implies entropic >= diam/2",
        true,
        1.0 / alpha >= 2.0 * diam,
        diam / 2.0,
        s,
    );
    let n_s = packing::exact_packing(dm, &all, s, ultra, DEFAULT_CAP)?.len();
    for &kappa in kappas {
        let n_ks = packing::exact_packing(dm, &all, kappa * s, ultra, DEFAULT_CAP)?.len();
        let hyp = n_s >= n_ks * n_ks;
        report.push(format!("doubling condition (kappa={kappa}): s/2 <= outer"), true, hyp, s / 2.0, outer);
        report.push(
            format!("doubling condition (kappa={kappa}): outer <= 2 kappa s"),
            true,
            hyp,
            outer,
            2.0 * kappa * s,
        );
    }
    let s_half = entropic_scale(space, alpha / 2.0)?.value;
    report.push("entropic(alpha) <= entropic(alpha/2)", true, true, s, s_half);

    report.push("[report] entropic(alpha/2) <= 2 entropic(alpha)", false, true, s_half, 2.0 * s);
    report.push("[report] entropic/4 <= doubling", false, true, s / 4.0, doubling);
    if s > 0.0 {
        report.push(
            "[report] outer <= 3 s (1 + ln(diam/s))",
            false,
            true,
            outer,
            3.0 * s * (1.0 + (diam / s).ln()),
        );
    }
    report.push(
        "[report] 1/alpha < 2 diam implies entropic >= 1/(2 alpha)",
        false,
        1.0 / alpha < 2.0 * diam,
        1.0 / (2.0 * alpha),
        s,
    );
    Ok(report)
}

const DEFAULT_CAP: usize = packing::DEFAULT_EXACT_CAP;
