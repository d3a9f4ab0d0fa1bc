use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::SweepConfig;
use crate::error::{Error, Result};
use crate::mechanism::{self, Mechanism, MechanismKind};
use crate::metric::FiniteBimetricSpace;
use crate::rng;
use crate::scales;

pub const CSV_COLUMNS: [&str; 15] = [
    "alpha",
    "s_entropic",
    "s_entropic_2a",
    "s_diametric_2a",
    "s_doubling",
    "s_outer",
    "lower_bound",
    "acc_exp_exact",
    "acc_exp_mc",
    "acc_exp_stderr",
    "acc_ultra_exact",
    "acc_ultra_mc",
    "acc_ultra_stderr",
    "audit_slope_exp",
    "audit_slope_ultra",
];

/// One sweep row; `None` cells are written empty.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TradeoffRow {
    pub alpha: f64,
    pub s_entropic: f64,
    pub s_entropic_2a: f64,
    pub s_diametric_2a: f64,
    pub s_doubling: Option<f64>,
    pub s_outer: Option<f64>,
    pub lower_bound: f64,
    pub acc_exp_exact: Option<f64>,
    pub acc_exp_mc: Option<f64>,
    pub acc_exp_stderr: Option<f64>,
    pub acc_ultra_exact: Option<f64>,
    pub acc_ultra_mc: Option<f64>,
    pub acc_ultra_stderr: Option<f64>,
    pub audit_slope_exp: Option<f64>,
    pub audit_slope_ultra: Option<f64>,
}

impl TradeoffRow {
    fn cells(&self) -> [Option<f64>; 15] {
        [
            Some(self.alpha),
            Some(self.s_entropic),
            Some(self.s_entropic_2a),
            Some(self.s_diametric_2a),
            self.s_doubling,
            self.s_outer,
            Some(self.lower_bound),
            self.acc_exp_exact,
            self.acc_exp_mc,
            self.acc_exp_stderr,
            self.acc_ultra_exact,
            self.acc_ultra_mc,
            self.acc_ultra_stderr,
            self.audit_slope_exp,
            self.audit_slope_ultra,
        ]
    }

    fn from_cells(c: [Option<f64>; 15]) -> Result<Self> {
        let req = |i: usize| {
            c[i].ok_or_else(|| Error::Structural(format!("column {} may not be empty", CSV_COLUMNS[i])))
        };
        Ok(Self {
            alpha: req(0)?,
            s_entropic: req(1)?,
            s_entropic_2a: req(2)?,
            s_diametric_2a: req(3)?,
            s_doubling: c[4],
            s_outer: c[5],
            lower_bound: req(6)?,
            acc_exp_exact: c[7],
            acc_exp_mc: c[8],
            acc_exp_stderr: c[9],
            acc_ultra_exact: c[10],
            acc_ultra_mc: c[11],
            acc_ultra_stderr: c[12],
            audit_slope_exp: c[13],
            audit_slope_ultra: c[14],
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffCurve {
    pub space: String,
    pub seed: u64,
    pub trials: u64,
    pub rows: Vec<TradeoffRow>,
}

fn format_cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

impl TradeoffCurve {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(CSV_COLUMNS)?;
        for row in &self.rows {
            out.write_record(row.cells().map(format_cell))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Internal(e.to_string()))
    }

    /// Reads rows back; header metadata (space, seed, trials) is not stored in CSV.
    pub fn read_csv_rows<R: Read>(r: R) -> Result<Vec<TradeoffRow>> {
        let mut rdr = csv::Reader::from_reader(r);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header != CSV_COLUMNS {
            return Err(Error::Structural(format!("unexpected CSV header {header:?}")));
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let mut cells = [None; 15];
            for (i, field) in rec.iter().enumerate() {
                if !field.is_empty() {
                    cells[i] = Some(field.parse::<f64>().map_err(|e| {
                        Error::Structural(format!("column {}: {e}", CSV_COLUMNS[i]))
                    })?);
                }
            }
            rows.push(TradeoffRow::from_cells(cells)?);
        }
        Ok(rows)
    }

    pub fn write_files(&self, csv_path: Option<&Path>, json_path: Option<&Path>) -> Result<()> {
        if let Some(p) = csv_path {
            self.write_csv(std::fs::File::create(p)?)?;
        }
        if let Some(p) = json_path {
            std::fs::write(p, serde_json::to_string_pretty(self)?)?;
        }
        Ok(())
    }

    /// Rows where an audited-passing mechanism beats the lower bound.
    pub fn lower_bound_violations(&self) -> Vec<(f64, &'static str)> {
        let mut out = Vec::new();
        for r in &self.rows {
            let tol = 1e-12 * r.lower_bound.abs();
            let checks = [
                ("exponential", r.acc_exp_exact, r.audit_slope_exp),
                ("ultrametric_relaxed", r.acc_ultra_exact, r.audit_slope_ultra),
            ];
            for (name, acc, slope) in checks {
                if let (Some(acc), Some(slope)) = (acc, slope) {
                    let passes = slope <= r.alpha * (1.0 + mechanism::AUDIT_SLACK);
                    if passes && acc < r.lower_bound - tol {
                        out.push((r.alpha, name));
                    }
                }
            }
        }
        out
    }
}

struct MechStats {
    exact: f64,
    mc: Option<f64>,
    stderr: Option<f64>,
    slope: f64,
}

fn evaluate(
    mech: &Mechanism,
    space: &FiniteBimetricSpace,
    trials: u64,
    seed: u64,
) -> Result<MechStats> {
    let audit = mechanism::audit_privacy(mech, space)?;
    let (exact, mc, stderr) = if trials > 0 {
        let acc = mechanism::accuracy_mc(mech, space, trials, seed)?;
        let mc = acc.mc.as_ref().expect("monte carlo requested");
        (acc.sup_error, Some(mc.sup_mean), mc.sup_stderr)
    } else {
        (mechanism::exact_accuracy(mech, space).sup_error, None, None)
    };
    Ok(MechStats {
        exact,
        mc,
        stderr,
        slope: audit.max_slope,
    })
}

fn sweep_row(
    space: &FiniteBimetricSpace,
    alpha: f64,
    kinds: &[MechanismKind],
    trials: u64,
    seed: u64,
) -> Result<TradeoffRow> {
    let report = scales::scale_report(space, alpha)?;
    let (s2, sc2, lower_bound) = mechanism::lower_bound(space, alpha)?;
    let mut row = TradeoffRow {
        alpha,
        s_entropic: report.entropic.value,
        s_entropic_2a: s2,
        s_diametric_2a: sc2,
        s_doubling: report.doubling.map(|d| d.value),
        s_outer: report.outer.map(|o| o.value),
        lower_bound,
        ..Default::default()
    };
    for (tag, kind) in kinds.iter().enumerate() {
        let mc_seed = rng::derive_seed(seed, (alpha.to_bits() << 2) ^ tag as u64);
        match kind {
            MechanismKind::Exponential => {
                let m = mechanism::build_exponential(space, alpha, None)?;
                let st = evaluate(&m, space, trials, mc_seed)?;
                row.acc_exp_exact = Some(st.exact);
                row.acc_exp_mc = st.mc;
                row.acc_exp_stderr = st.stderr;
                row.audit_slope_exp = Some(st.slope);
            }
            MechanismKind::UltrametricRelaxed if space.ultrametric2_claimed() => {
                let m = mechanism::build_ultrametric_relaxed(space, alpha, None)?;
                let st = evaluate(&m, space, trials, mc_seed)?;
                row.acc_ultra_exact = Some(st.exact);
                row.acc_ultra_mc = st.mc;
                row.acc_ultra_stderr = st.stderr;
                row.audit_slope_ultra = Some(st.slope);
            }
            _ => {}
        }
    }
    Ok(row)
}

/// Computes the tradeoff curve on a validated space; rows run in parallel
/// and each derives its own Monte-Carlo seed from `(seed, alpha, mechanism)`.
pub fn sweep_space(
    space: &FiniteBimetricSpace,
    name: &str,
    alphas: &[f64],
    kinds: &[MechanismKind],
    trials: u64,
    seed: u64,
) -> Result<TradeoffCurve> {
    let report = space.validate();
    if !report.is_clean() {
        return Err(Error::Invalid(Box::new(report)));
    }
    let rows = alphas
        .par_iter()
        .map(|&alpha| {
            sweep_row(space, alpha, kinds, trials, seed).map_err(|e| Error::AtAlpha {
                alpha,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TradeoffCurve {
        space: name.to_string(),
        seed,
        trials,
        rows,
    })
}

/// Loads the configured space, sweeps it, and writes the configured outputs.
pub fn run_sweep(config: &SweepConfig) -> Result<TradeoffCurve> {
    let space = config.space.load()?;
    let alphas = config.alphas.values()?;
    let curve = sweep_space(
        &space,
        &config.space.name(),
        &alphas,
        &config.mechanisms,
        config.trials,
        config.seed,
    )?;
    curve.write_files(config.csv.as_deref(), config.json.as_deref())?;
    Ok(curve)
}
