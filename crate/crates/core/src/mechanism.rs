//! Private mechanisms with explicit output distributions over a net.
//!
//! Each mechanism stores, per input, unnormalized log-weights over its net;
//! probabilities are obtained by max-shifted log-sum-exp normalization.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{FiniteBimetricSpace, Metric, PointId};
use crate::packing::{self, greedy_maximal_separated};
use crate::rng;
use crate::scales::{self, count_threshold};

/// Relative slack on the claimed privacy level.
pub const AUDIT_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MechanismKind {
    Exponential,
    UltrametricRelaxed,
    Constant,
    /// Arbitrary log-weights, used for test and counterexample mechanisms.
    Explicit,
}

#[derive(Clone, Debug)]
pub struct Mechanism {
    kind: MechanismKind,
    alpha: f64,
    net: Vec<PointId>,
    net_s: Option<f64>,
    relax_s: Option<f64>,
    fixed_output: Option<PointId>,
    log_weights: Vec<Vec<f64>>,
    log_norm: Vec<f64>,
    /// `sigma(x, y)` for net points, ultrametric-relaxed kind only.
    sigma: Option<Vec<Vec<f64>>>,
    warnings: Vec<String>,
}

/// Serializable description of a mechanism (no per-input weights).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MechanismSummary {
    pub kind: MechanismKind,
    pub alpha: f64,
    pub net: Vec<PointId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub net_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relax_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_output: Option<PointId>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputDistribution {
    pub input: PointId,
    pub support: Vec<(PointId, f64)>,
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Domain(format!("alpha must be positive and finite, got {alpha}")));
    }
    Ok(())
}

impl Mechanism {
    fn assemble(
        kind: MechanismKind,
        alpha: f64,
        net: Vec<PointId>,
        log_weights: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if net.is_empty() {
            return Err(Error::Domain("mechanism net is empty".into()));
        }
        if let Some(bad) = log_weights.iter().position(|row| row.len() != net.len()) {
            return Err(Error::Structural(format!(
                "input {bad} has {} log-weights for a net of {}",
                log_weights[bad].len(),
                net.len()
            )));
        }
        let log_norm: Vec<f64> = log_weights.iter().map(|w| log_sum_exp(w)).collect();
        if let Some(bad) = log_norm.iter().position(|z| !z.is_finite()) {
            return Err(Error::Domain(format!("input {bad} has no positive-probability output")));
        }
        Ok(Self {
            kind,
            alpha,
            net,
            net_s: None,
            relax_s: None,
            fixed_output: None,
            log_weights,
            log_norm,
            sigma: None,
            warnings: Vec::new(),
        })
    }

    /// A mechanism from explicit log-weights (`-inf` allowed for zero mass).
    pub fn from_log_weights(
        alpha_claimed: f64,
        net: Vec<PointId>,
        log_weights: Vec<Vec<f64>>,
    ) -> Result<Self> {
        Self::assemble(MechanismKind::Explicit, alpha_claimed, net, log_weights)
    }

    pub fn kind(&self) -> MechanismKind {
        self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn net(&self) -> &[PointId] {
        &self.net
    }

    pub fn net_s(&self) -> Option<f64> {
        self.net_s
    }

    pub fn relax_s(&self) -> Option<f64> {
        self.relax_s
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn inputs(&self) -> usize {
        self.log_weights.len()
    }

    pub fn sigma(&self) -> Option<&[Vec<f64>]> {
        self.sigma.as_deref()
    }

    pub fn log_weights(&self, x: PointId) -> &[f64] {
        &self.log_weights[x.0]
    }

    /// `ln Sigma(x)`, the log of the normalizer.
    pub fn log_normalizer(&self, x: PointId) -> f64 {
        self.log_norm[x.0]
    }

    #[inline]
    pub fn log_prob(&self, x: PointId, j: usize) -> f64 {
        self.log_weights[x.0][j] - self.log_norm[x.0]
    }

    pub fn summary(&self) -> MechanismSummary {
        MechanismSummary {
            kind: self.kind,
            alpha: self.alpha,
            net: self.net.clone(),
            net_s: self.net_s,
            relax_s: self.relax_s,
            fixed_output: self.fixed_output,
            warnings: self.warnings.clone(),
        }
    }

    fn probs(&self, x: usize) -> Vec<f64> {
        let z = self.log_norm[x];
        self.log_weights[x].iter().map(|w| (w - z).exp()).collect()
    }

    fn cdf(&self, x: usize) -> Vec<f64> {
        let mut acc = 0.0;
        self.probs(x)
            .into_iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect()
    }

    fn draw(&self, cdf: &[f64], u: f64) -> usize {
        let total = *cdf.last().unwrap();
        let target = u * total;
        let j = cdf.partition_point(|&c| c <= target);
        if j < cdf.len() {
            return j;
        }
        // u * total rounded onto the last breakpoint: last atom with mass
        (0..cdf.len())
            .rev()
            .find(|&j| j == 0 || cdf[j] > cdf[j - 1])
            .unwrap_or(0)
    }

    pub fn output_distribution(&self, x: PointId) -> OutputDistribution {
        OutputDistribution {
            input: x,
            support: self.net.iter().copied().zip(self.probs(x.0)).collect(),
        }
    }

    /// One categorical draw by inverse CDF from a ChaCha8 stream keyed by `seed`.
    pub fn sample(&self, x: PointId, seed: u64) -> PointId {
        let u = rng::uniform(&mut rng::seeded(seed));
        self.net[self.draw(&self.cdf(x.0), u)]
    }
}

/// Exponential mechanism: output `y` in a greedy maximal `net_s`-separated
/// `rho2` net with probability proportional to `exp(-alpha rho1(x, y) / 2)`.
///
/// `net_s` defaults to the entropic scale at `alpha / 3`.
pub fn build_exponential(
    space: &FiniteBimetricSpace,
    alpha: f64,
    net_s: Option<f64>,
) -> Result<Mechanism> {
    check_alpha(alpha)?;
    let net_s = match net_s {
        Some(s) => s,
        None => scales::entropic_scale(space, alpha / 3.0)?.value,
    };
    let all: Vec<PointId> = space.points().collect();
    let net = greedy_maximal_separated(space, Metric::Rho2, &all, net_s, None).points;
    let d1 = space.metric(Metric::Rho1);
    let log_weights = (0..space.len())
        .map(|x| net.iter().map(|y| -alpha * d1.get(x, y.0) / 2.0).collect())
        .collect();
    let mut mech = Mechanism::assemble(MechanismKind::Exponential, alpha, net, log_weights)?;
    mech.net_s = Some(net_s);
    if mech.net.len() == 1 && space.len() > 1 {
        mech.warnings
            .push(format!("net_s = {net_s} collapses the net to a single point"));
    }
    Ok(mech)
}

/// Relaxed exponential mechanism for an ultrametric `rho2`: weights
/// `exp(-alpha sigma(x, y) / 2)` with `sigma(x, y)` the `rho1` distance from `x`
/// to the closed `rho2` ball of radius `relax_s` around `y`.
///
/// `relax_s` defaults to the entropic scale at `alpha / 3`.
pub fn build_ultrametric_relaxed(
    space: &FiniteBimetricSpace,
    alpha: f64,
    relax_s: Option<f64>,
) -> Result<Mechanism> {
    check_alpha(alpha)?;
    if !space.ultrametric2_claimed() {
        return Err(Error::NotUltrametric);
    }
    let relax_s = match relax_s {
        Some(s) => s,
        None => scales::entropic_scale(space, alpha / 3.0)?.value,
    };
    let all: Vec<PointId> = space.points().collect();
    let net = greedy_maximal_separated(space, Metric::Rho2, &all, relax_s, None).points;
    let sigma = sigma_matrix(space, &net, relax_s);
    let log_weights: Vec<Vec<f64>> = sigma
        .iter()
        .map(|row| row.iter().map(|s| -alpha * s / 2.0).collect())
        .collect();
    let mut mech = Mechanism::assemble(MechanismKind::UltrametricRelaxed, alpha, net, log_weights)?;
    mech.relax_s = Some(relax_s);
    mech.sigma = Some(sigma);
    // every x lies within relax_s of some net point, so some sigma(x, y) = 0
    if let Some(x) = mech.log_norm.iter().position(|z| *z < 0.0) {
        return Err(Error::Internal(format!("normalizer below 1 at input {x}")));
    }
    Ok(mech)
}

/// `sigma(x, y) = min { rho1(x, v) : rho2(v, y) <= s }` for each input `x` and net point `y`.
pub fn sigma_matrix(space: &FiniteBimetricSpace, targets: &[PointId], s: f64) -> Vec<Vec<f64>> {
    let d1 = space.metric(Metric::Rho1);
    let balls: Vec<Vec<PointId>> = targets
        .iter()
        .map(|y| space.ball(Metric::Rho2, *y, s))
        .collect();
    (0..space.len())
        .into_par_iter()
        .map(|x| {
            let row = d1.row(x);
            balls
                .iter()
                .map(|b| b.iter().map(|v| row[v.0]).fold(f64::INFINITY, f64::min))
                .collect()
        })
        .collect()
}

/// The trivial mechanism that always outputs `y0`.
pub fn build_constant(space: &FiniteBimetricSpace, y0: PointId) -> Result<Mechanism> {
    space.check_point(y0)?;
    let log_weights = vec![vec![0.0]; space.len()];
    let mut mech = Mechanism::assemble(MechanismKind::Constant, 0.0, vec![y0], log_weights)?;
    mech.fixed_output = Some(y0);
    Ok(mech)
}

/// Deterministic rounding to the nearest point of a greedy `net_s` net, with
/// every other atom floored at `floor` mass. Not private for any useful
/// `alpha_claimed`; used to exercise the audit.
pub fn build_nearest_net_rounding(
    space: &FiniteBimetricSpace,
    net_s: f64,
    alpha_claimed: f64,
    floor: f64,
) -> Result<Mechanism> {
    let all: Vec<PointId> = space.points().collect();
    let net = greedy_maximal_separated(space, Metric::Rho2, &all, net_s, None).points;
    let d2 = space.metric(Metric::Rho2);
    let log_weights = (0..space.len())
        .map(|x| {
            let nearest = (0..net.len())
                .min_by(|&a, &b| d2.get(x, net[a].0).total_cmp(&d2.get(x, net[b].0)))
                .unwrap();
            (0..net.len())
                .map(|j| if j == nearest { 0.0 } else { floor.ln() })
                .collect()
        })
        .collect();
    Mechanism::from_log_weights(alpha_claimed, net, log_weights)
}

// ---------------------------------------------------------------------------
// Privacy audit

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrivacyAudit {
    pub alpha_claimed: f64,
    /// `max (ln p_x(y) - ln p_x'(y)) / rho1(x, x')` over `x != x'` and net atoms `y`.
    pub max_slope: f64,
    /// `(x, x', y)` attaining the maximum.
    pub witness: Option<(PointId, PointId, PointId)>,
    pub pass: bool,
}

/// Exact worst-case log-ratio slope. For a finite output set the ratio over
/// any event is a ratio of sums of atoms, so atoms suffice.
pub fn audit_privacy(mech: &Mechanism, space: &FiniteBimetricSpace) -> Result<PrivacyAudit> {
    audit_privacy_at(mech, space, mech.alpha)
}

pub fn audit_privacy_at(
    mech: &Mechanism,
    space: &FiniteBimetricSpace,
    alpha_claimed: f64,
) -> Result<PrivacyAudit> {
    if mech.inputs() != space.len() {
        return Err(Error::Structural(format!(
            "mechanism has {} inputs, space has {} points",
            mech.inputs(),
            space.len()
        )));
    }
    let n = space.len();
    let k = mech.net.len();
    let d1 = space.metric(Metric::Rho1);
    let lp: Vec<Vec<f64>> = (0..n)
        .map(|x| (0..k).map(|j| mech.log_prob(PointId(x), j)).collect())
        .collect();

    let per_x: Vec<(f64, Option<(usize, usize, usize)>)> = (0..n)
        .into_par_iter()
        .map(|x| {
            let mut best = (f64::NEG_INFINITY, None);
            for xp in 0..n {
                if xp == x {
                    continue;
                }
                let rho = d1.get(x, xp);
                for j in 0..k {
                    let (a, b) = (lp[x][j], lp[xp][j]);
                    if a == f64::NEG_INFINITY {
                        continue;
                    }
                    let slope = if b == f64::NEG_INFINITY {
                        f64::INFINITY
                    } else {
                        (a - b) / rho
                    };
                    if slope > best.0 {
                        best = (slope, Some((x, xp, j)));
                    }
                }
            }
            best
        })
        .collect();

    let mut max_slope = if n > 1 { f64::NEG_INFINITY } else { 0.0 };
    let mut witness = None;
    for (slope, w) in per_x {
        if slope > max_slope {
            max_slope = slope;
            witness = w;
        }
    }
    // all probabilities equal gives slope 0, never negative overall
    max_slope = max_slope.max(0.0);
    Ok(PrivacyAudit {
        alpha_claimed,
        max_slope,
        witness: witness.map(|(x, xp, j)| (PointId(x), PointId(xp), mech.net[j])),
        pass: max_slope <= alpha_claimed * (1.0 + AUDIT_SLACK),
    })
}

// ---------------------------------------------------------------------------
// Accuracy

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarlo {
    pub trials: u64,
    pub seed: u64,
    pub per_input_mean: Vec<f64>,
    /// `None` when undefined (a single trial).
    pub per_input_stderr: Vec<Option<f64>>,
    /// Largest per-input mean and its standard error.
    pub sup_mean: f64,
    pub sup_stderr: Option<f64>,
    pub sup_input: PointId,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyResult {
    /// Exact `E rho2(M(x), x)` per input.
    pub per_input: Vec<f64>,
    pub sup_error: f64,
    /// First input attaining `sup_error`.
    pub argmax: PointId,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc: Option<MonteCarlo>,
}

pub fn exact_accuracy(mech: &Mechanism, space: &FiniteBimetricSpace) -> AccuracyResult {
    let d2 = space.metric(Metric::Rho2);
    let per_input: Vec<f64> = (0..mech.inputs())
        .into_par_iter()
        .map(|x| {
            mech.probs(x)
                .iter()
                .zip(&mech.net)
                .map(|(p, y)| p * d2.get(x, y.0))
                .sum()
        })
        .collect();
    let (mut argmax, mut sup) = (0usize, f64::NEG_INFINITY);
    for (x, e) in per_input.iter().enumerate() {
        if *e > sup {
            sup = *e;
            argmax = x;
        }
    }
    AccuracyResult {
        per_input,
        sup_error: sup,
        argmax: PointId(argmax),
        mc: None,
    }
}

/// Exact accuracy plus a Monte-Carlo estimate with `trials` draws per input.
pub fn accuracy_mc(
    mech: &Mechanism,
    space: &FiniteBimetricSpace,
    trials: u64,
    seed: u64,
) -> Result<AccuracyResult> {
    if trials == 0 {
        return Err(Error::Domain("Monte-Carlo needs at least one trial".into()));
    }
    let mut result = exact_accuracy(mech, space);
    let d2 = space.metric(Metric::Rho2);
    let stats: Vec<(f64, Option<f64>)> = (0..mech.inputs())
        .into_par_iter()
        .map(|x| {
            let cdf = mech.cdf(x);
            let mut stream = rng::input_stream(seed, x);
            let (mut mean, mut m2) = (0.0f64, 0.0f64);
            for t in 0..trials {
                let y = mech.net[mech.draw(&cdf, rng::uniform(&mut stream))];
                let err = d2.get(x, y.0);
                let delta = err - mean;
                mean += delta / (t + 1) as f64;
                m2 += delta * (err - mean);
            }
            let stderr = (trials > 1).then(|| (m2 / (trials - 1) as f64 / trials as f64).sqrt());
            (mean, stderr)
        })
        .collect();
    let (mut sup_input, mut sup_mean) = (0usize, f64::NEG_INFINITY);
    for (x, (m, _)) in stats.iter().enumerate() {
        if *m > sup_mean {
            sup_mean = *m;
            sup_input = x;
        }
    }
    result.mc = Some(MonteCarlo {
        trials,
        seed,
        sup_mean,
        sup_stderr: stats[sup_input].1,
        sup_input: PointId(sup_input),
        per_input_mean: stats.iter().map(|s| s.0).collect(),
        per_input_stderr: stats.iter().map(|s| s.1).collect(),
    });
    Ok(result)
}

// ---------------------------------------------------------------------------
// Accuracy bounds

/// Upper bound for the exponential mechanism with net resolution `s`:
/// `6 s + e^(-alpha s / 2) (34 s + 40 / alpha)`.
pub fn exponential_upper_bound(alpha: f64, s: f64) -> f64 {
    6.0 * s + (-alpha * s / 2.0).exp() * (34.0 * s + 40.0 / alpha)
}

/// The same bound with the tail constants summed exactly:
/// `e^(1/2) * 6 * sum_k e^(-k/6)` and `e^(1/2) * sum_k k e^(-k/6)`.
pub fn exponential_upper_bound_series(alpha: f64, s: f64) -> f64 {
    let q = (-1.0f64 / 6.0).exp();
    let geometric = q / (1.0 - q);
    let weighted = q / ((1.0 - q) * (1.0 - q));
    let lift = 0.5f64.exp();
    6.0 * s + (-alpha * s / 2.0).exp() * (lift * 6.0 * geometric * s + lift * weighted / alpha)
}

/// Lower bounds `max(s(Z, 2 alpha) / 8, s_circ(Z, 2 alpha) / 5)` on the
/// accuracy of any `alpha`-private mechanism.
pub fn lower_bound(space: &FiniteBimetricSpace, alpha: f64) -> Result<(f64, f64, f64)> {
    let s = scales::entropic_scale(space, 2.0 * alpha)?.value;
    let sc = scales::diametric_scale(space, 2.0 * alpha)?.value;
    Ok((s, sc, (s / 8.0).max(sc / 5.0)))
}

// ---------------------------------------------------------------------------
// Relaxed-mechanism lemmas

/// Tail constant `2 / (1 - e^(-1/6))`.
pub fn relaxed_tail_constant() -> f64 {
    2.0 / (1.0 - (-1.0f64 / 6.0).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lemma {
    /// `Sigma(x) >= 1`.
    NormalizerAtLeastOne,
    /// `|{y in net : sigma(x,y) < r}| <= N2(B1(x,r), s)`.
    RelaxedBall,
    /// `N2(B1(x,r), s) <= e^(alpha r / 3)`.
    RelaxedBallEntropy,
    /// `P(sigma(x, M(x)) >= r) <= C e^(-alpha r / 6)`.
    RelaxedTail,
    /// `sigma(x,y) < r` implies `rho2(x,y) <= s + e^(alpha r / 7) s_circ(Z, alpha/7)`.
    Unrelaxation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaSummary {
    pub lemma: Lemma,
    pub applicable: bool,
    pub checked: usize,
    pub violations: usize,
    /// Largest `lhs / rhs` seen.
    pub worst_ratio: f64,
    pub first_violation: Option<String>,
}

impl LemmaSummary {
    fn new(lemma: Lemma, applicable: bool) -> Self {
        Self {
            lemma,
            applicable,
            checked: 0,
            violations: 0,
            worst_ratio: 0.0,
            first_violation: None,
        }
    }

    fn record(&mut self, lhs: f64, rhs: f64, what: impl FnOnce() -> String) {
        self.checked += 1;
        let ratio = if rhs > 0.0 {
            lhs / rhs
        } else if lhs > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        self.worst_ratio = self.worst_ratio.max(ratio);
        if lhs > rhs * (1.0 + 1e-12) + 1e-300 {
            self.violations += 1;
            if self.first_violation.is_none() {
                self.first_violation = Some(format!("{}: {lhs} > {rhs}", what()));
            }
        }
    }

    fn merge(&mut self, other: LemmaSummary) {
        self.checked += other.checked;
        self.violations += other.violations;
        self.worst_ratio = self.worst_ratio.max(other.worst_ratio);
        if self.first_violation.is_none() {
            self.first_violation = other.first_violation;
        }
    }

    pub fn holds(&self) -> bool {
        !self.applicable || self.violations == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub alpha: f64,
    pub relax_s: f64,
    pub entropic_third: f64,
    pub diametric_seventh: f64,
    pub summaries: Vec<LemmaSummary>,
}

impl LemmaReport {
    pub fn all_hold(&self) -> bool {
        self.summaries.iter().all(LemmaSummary::holds)
    }

    pub fn get(&self, lemma: Lemma) -> Option<&LemmaSummary> {
        self.summaries.iter().find(|s| s.lemma == lemma)
    }
}

/// Exhaustively checks the relaxed-mechanism lemmas on every input.
///
/// The left sides jump just above each distinct `sigma(x, .)` value while the
/// right sides are monotone in `r`, so checking `r` at (or just above) each
/// such value covers all `r > 0`.
pub fn verify_relaxed_lemmas(mech: &Mechanism, space: &FiniteBimetricSpace) -> Result<LemmaReport> {
    if mech.kind != MechanismKind::UltrametricRelaxed {
        return Err(Error::Domain("lemma checks need an ultrametric-relaxed mechanism".into()));
    }
    let alpha = mech.alpha;
    let s = mech.relax_s.unwrap_or(0.0);
    let sigma = mech.sigma.as_ref().expect("relaxed mechanism stores sigma");
    let s_third = scales::entropic_scale(space, alpha / 3.0)?.value;
    let s_circ = scales::diametric_scale(space, alpha / 7.0)?.value;
    let tail_c = relaxed_tail_constant();
    let d2 = space.metric(Metric::Rho2);
    let ultra = packing::ultrametric_shortcut(space, Metric::Rho2);

    // sigma to every point: rho2-balls of radius s partition an ultrametric,
    // so sigma(x, y) = sigma(x, net point whose ball contains y)
    let rep: Vec<usize> = (0..space.len())
        .map(|y| {
            mech.net
                .iter()
                .position(|c| d2.get(y, c.0) <= s)
                .expect("net covers the space")
        })
        .collect();

    let per_x: Vec<Result<[LemmaSummary; 5]>> = (0..space.len())
        .into_par_iter()
        .map(|x| {
            let px = PointId(x);
            let mut norm = LemmaSummary::new(Lemma::NormalizerAtLeastOne, true);
            let mut ball = LemmaSummary::new(Lemma::RelaxedBall, true);
            let mut entropy = LemmaSummary::new(Lemma::RelaxedBallEntropy, s >= s_third);
            let mut tail = LemmaSummary::new(Lemma::RelaxedTail, s >= s_third);
            let mut unrelax = LemmaSummary::new(Lemma::Unrelaxation, s >= s_third);

            norm.record(0.0, mech.log_norm[x], || format!("x={x}"));

            let row = &sigma[x];
            let probs = mech.probs(x);
            let mut values: Vec<f64> = row.clone();
            values.sort_by(f64::total_cmp);
            values.dedup();
            for &v in &values {
                // r just above v
                let lhs = row.iter().filter(|&&sg| sg <= v).count();
                let b1: Vec<usize> = space.ball(Metric::Rho1, px, v).iter().map(|p| p.0).collect();
                let n2 = packing::exact_packing(d2, &b1, s, ultra, packing::DEFAULT_EXACT_CAP)?.len();
                ball.record(lhs as f64, n2 as f64, || format!("x={x}, r={v}+"));
                let k = count_threshold(alpha * v / 3.0, usize::MAX);
                entropy.record(n2 as f64, k as f64, || format!("x={x}, r={v}+"));
                if v > 0.0 {
                    let p_tail: f64 = row
                        .iter()
                        .zip(&probs)
                        .filter(|(sg, _)| **sg >= v)
                        .map(|(_, p)| p)
                        .sum();
                    tail.record(p_tail, tail_c * (-alpha * v / 6.0).exp(), || format!("x={x}, r={v}"));
                }
            }
            tail.record(1.0, tail_c, || format!("x={x}, r=0+"));

            for y in 0..space.len() {
                let sg = row[rep[y]];
                let rhs = s + (alpha * sg / 7.0).exp() * s_circ;
                unrelax.record(d2.get(x, y), rhs, || format!("x={x}, y={y}, sigma={sg}"));
            }
            Ok([norm, ball, entropy, tail, unrelax])
        })
        .collect();

    let mut summaries = vec![
        LemmaSummary::new(Lemma::NormalizerAtLeastOne, true),
        LemmaSummary::new(Lemma::RelaxedBall, true),
        LemmaSummary::new(Lemma::RelaxedBallEntropy, s >= s_third),
        LemmaSummary::new(Lemma::RelaxedTail, s >= s_third),
        LemmaSummary::new(Lemma::Unrelaxation, s >= s_third),
    ];
    for res in per_x {
        for (acc, part) in summaries.iter_mut().zip(res?) {
            acc.merge(part);
        }
    }
    Ok(LemmaReport {
        alpha,
        relax_s: s,
        entropic_third: s_third,
        diametric_seventh: s_circ,
        summaries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{DistanceMatrix, Label};

    fn two_points() -> FiniteBimetricSpace {
        let rho = DistanceMatrix::from_fn(2, |_, _| 1.0);
        FiniteBimetricSpace::single(vec![Label::Name("0".into()), Label::Name("1".into())], rho, false)
            .unwrap()
    }

    fn line(n: usize) -> FiniteBimetricSpace {
        let labels = (0..n).map(|i| Label::Coords(vec![i as f64])).collect();
        let rho = DistanceMatrix::from_fn(n, |i, j| (i as f64 - j as f64).abs());
        FiniteBimetricSpace::single(labels, rho, false).unwrap()
    }

    fn baire_square() -> FiniteBimetricSpace {
        let d = |i: usize, j: usize| if (i ^ j) & 2 != 0 { 0.5 } else { 0.25 };
        let labels = ["00", "01", "10", "11"].iter().map(|s| Label::Name(s.to_string())).collect();
        FiniteBimetricSpace::single(labels, DistanceMatrix::from_fn(4, d), true).unwrap()
    }

    #[test]
    fn two_point_exponential_distribution() {
        let alpha = 2.0 * 3.0f64.ln();
        let m = build_exponential(&two_points(), alpha, Some(0.5)).unwrap();
        assert_eq!(m.net().len(), 2);
        let dist = m.output_distribution(PointId(0));
        assert!((dist.support[0].1 - 0.75).abs() < 1e-15);
        assert!((dist.support[1].1 - 0.25).abs() < 1e-15);
        let acc = exact_accuracy(&m, &two_points());
        assert!((acc.sup_error - 0.25).abs() < 1e-15);
    }

    #[test]
    fn single_point_is_identity() {
        let p = line(1);
        let m = build_exponential(&p, 1.0, None).unwrap();
        assert_eq!(m.sample(PointId(0), 123), PointId(0));
        assert_eq!(exact_accuracy(&m, &p).sup_error, 0.0);
        assert!(audit_privacy(&m, &p).unwrap().pass);
    }

    #[test]
    fn line_exponential_slope_is_at_most_half_alpha() {
        let l = line(4);
        let alpha = std::f64::consts::LN_2;
        let m = build_exponential(&l, alpha, None).unwrap();
        let audit = audit_privacy(&m, &l).unwrap();
        assert!(audit.pass);
        assert!(audit.max_slope <= alpha / 2.0 + 1e-12, "{}", audit.max_slope);
    }

    #[test]
    fn constant_mechanism() {
        let l = line(4);
        let m = build_constant(&l, PointId(1)).unwrap();
        let audit = audit_privacy(&m, &l).unwrap();
        assert_eq!(audit.max_slope, 0.0);
        assert!(audit.pass);
        assert_eq!(exact_accuracy(&m, &l).sup_error, 2.0);
        for seed in 0..20 {
            assert_eq!(m.sample(PointId(3), seed), PointId(1));
        }
        let mc = accuracy_mc(&m, &l, 100, 5).unwrap();
        let mc = mc.mc.unwrap();
        assert_eq!(mc.sup_mean, 2.0);
        assert_eq!(mc.sup_stderr, Some(0.0));
    }

    #[test]
    fn relaxed_sigma_on_baire_square() {
        let b = baire_square();
        let m = build_ultrametric_relaxed(&b, 1.0, Some(0.25)).unwrap();
        // net = {00, 10}; sigma(00, 10) = rho1(00, {10, 11}) = 1/2
        assert_eq!(m.net(), &[PointId(0), PointId(2)]);
        let sig = sigma_matrix(&b, &[PointId(3), PointId(1)], 0.25);
        assert_eq!(sig[0], vec![0.5, 0.0]);
        let report = verify_relaxed_lemmas(&m, &b).unwrap();
        assert!(report.get(Lemma::RelaxedBall).unwrap().holds());
    }

    #[test]
    fn relaxed_degenerate_net() {
        let b = baire_square();
        let m = build_ultrametric_relaxed(&b, 1.0, Some(0.5)).unwrap();
        assert_eq!(m.net().len(), 1);
        assert!(m.sigma().unwrap().iter().all(|r| r[0] == 0.0));
    }

    #[test]
    fn relaxed_requires_ultrametric() {
        assert!(matches!(
            build_ultrametric_relaxed(&line(3), 1.0, None),
            Err(Error::NotUltrametric)
        ));
    }

    #[test]
    fn rounding_mechanism_fails_audit() {
        let l = line(4);
        let m = build_nearest_net_rounding(&l, 0.5, 1.0, 1e-12).unwrap();
        let audit = audit_privacy(&m, &l).unwrap();
        assert!(!audit.pass);
        assert!(audit.max_slope.is_finite());
        assert!(audit.witness.is_some());
    }

    #[test]
    fn mc_rejects_zero_trials_and_flags_single_trial() {
        let t = two_points();
        let m = build_exponential(&t, 1.0, Some(0.5)).unwrap();
        assert!(accuracy_mc(&m, &t, 0, 1).is_err());
        let one = accuracy_mc(&m, &t, 1, 1).unwrap().mc.unwrap();
        assert!(one.per_input_stderr.iter().all(Option::is_none));
    }

    #[test]
    fn series_constants_dominate_rounded_ones() {
        for (a, s) in [(1.0, 0.5), (0.1, 2.0), (10.0, 0.01)] {
            assert!(exponential_upper_bound_series(a, s) >= exponential_upper_bound(a, s));
        }
    }
}
