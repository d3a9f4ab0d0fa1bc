use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::mechanism::{self, Lemma};
use crate::metric::{FiniteBimetricSpace, Metric};
use crate::packing::{self, FactSamples};
use crate::scales;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyResult {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub pass: bool,
    /// Witness or summary numbers.
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub points: usize,
    /// Set when validation failed and nothing else was run.
    pub aborted: Option<String>,
    pub properties: Vec<PropertyResult>,
}

impl SuiteReport {
    pub fn all_pass(&self) -> bool {
        self.aborted.is_none() && self.properties.iter().all(|p| p.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &PropertyResult> {
        self.properties.iter().filter(|p| !p.pass)
    }

    fn push(&mut self, name: impl Into<String>, alpha: Option<f64>, pass: bool, detail: String) {
        self.properties.push(PropertyResult {
            name: name.into(),
            alpha,
            pass,
            detail,
        });
    }
}

#[derive(Clone, Debug)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Random instances per packing fact.
    pub fact_samples: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            fact_samples: 20,
        }
    }
}

/// Runs every applicable property check on `space` and collects named
/// pass/fail results. A space that fails validation aborts the run with the
/// validation report recorded.
pub fn run_verification_suite(
    space: &FiniteBimetricSpace,
    alphas: &[f64],
    opts: &SuiteOptions,
) -> Result<SuiteReport> {
    let mut report = SuiteReport {
        points: space.len(),
        aborted: None,
        properties: Vec::new(),
    };
    let validation = space.validate();
    report.push(
        "metric axioms",
        None,
        validation.is_clean(),
        format!("{} violation(s)", validation.violation_count()),
    );
    if !validation.is_clean() {
        report.aborted = Some(validation.first_message());
        return Ok(report);
    }

    for metric in [Metric::Rho1, Metric::Rho2] {
        if metric == Metric::Rho2 && space.same_metric() {
            continue;
        }
        let samples = FactSamples::random(space, metric, opts.fact_samples, opts.seed);
        let facts = packing::verify_packing_facts(space, metric, &samples)?;
        let first = facts.checks.iter().find(|c| !c.holds).map(|c| c.detail.clone());
        report.push(
            format!("packing facts ({metric:?})"),
            None,
            facts.all_hold(),
            first.unwrap_or_else(|| format!("{} checks", facts.checks.len())),
        );
    }

    for &alpha in alphas {
        let a = Some(alpha);
        if space.same_metric() {
            let rel = scales::verify_scale_relations(space, alpha, &scales::DEFAULT_KAPPAS)?;
            let first = rel.failures().next().map(|c| format!("{}: {} > {}", c.name, c.lhs, c.rhs));
            report.push(
                "scale relations",
                a,
                rel.all_hold(),
                first.unwrap_or_else(|| format!("{} checks", rel.checks.len())),
            );
        }
        let (s2, sc2, lower) = mechanism::lower_bound(space, alpha)?;

        let exp = mechanism::build_exponential(space, alpha, None)?;
        let audit = mechanism::audit_privacy(&exp, space)?;
        report.push(
            "exponential privacy audit",
            a,
            audit.pass,
            format!("max slope {} witness {:?}", audit.max_slope, audit.witness),
        );
        let acc = mechanism::exact_accuracy(&exp, space).sup_error;
        if audit.pass {
            report.push(
                "exponential lower bound",
                a,
                acc >= lower * (1.0 - 1e-12),
                format!("accuracy {acc} vs s(2a)/8 = {}, s_circ(2a)/5 = {}", s2 / 8.0, sc2 / 5.0),
            );
        }
        if space.same_metric() {
            let s = exp.net_s().unwrap_or(0.0);
            let bound = mechanism::exponential_upper_bound(alpha, s);
            report.push(
                "exponential upper bound",
                a,
                acc <= bound * (1.0 + 1e-12),
                format!(
                    "accuracy {acc} <= {bound} (series form {})",
                    mechanism::exponential_upper_bound_series(alpha, s)
                ),
            );
        }

        if space.ultrametric2_claimed() {
            let relaxed = mechanism::build_ultrametric_relaxed(space, alpha, None)?;
            let audit = mechanism::audit_privacy(&relaxed, space)?;
            report.push(
                "relaxed privacy audit",
                a,
                audit.pass,
                format!("max slope {} witness {:?}", audit.max_slope, audit.witness),
            );
            let acc = mechanism::exact_accuracy(&relaxed, space).sup_error;
            if audit.pass {
                report.push(
                    "relaxed lower bound",
                    a,
                    acc >= lower * (1.0 - 1e-12),
                    format!("accuracy {acc} vs lower bound {lower}"),
                );
            }
            let lemmas = mechanism::verify_relaxed_lemmas(&relaxed, space)?;
            for lemma in [
                Lemma::NormalizerAtLeastOne,
                Lemma::RelaxedBall,
                Lemma::RelaxedBallEntropy,
                Lemma::RelaxedTail,
                Lemma::Unrelaxation,
            ] {
                let sm = lemmas.get(lemma).expect("all lemmas reported");
                report.push(
                    format!("lemma {lemma:?}"),
                    a,
                    sm.holds(),
                    sm.first_violation.clone().unwrap_or_else(|| {
                        format!("{} checks, worst ratio {}", sm.checked, sm.worst_ratio)
                    }),
                );
            }
        }
    }
    Ok(report)
}
