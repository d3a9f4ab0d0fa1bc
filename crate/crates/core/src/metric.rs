//! Finite bimetric spaces: two dense distance matrices over a shared point set.
//!
//! Balls are closed (`rho(center, y) <= r`). Distinct points at distance zero
//! are rejected by validation, since privacy slopes divide by `rho1(x, x')`.

use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative tolerance for float comparisons on user-supplied matrices.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// Index of a point in a [`FiniteBimetricSpace`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointId(pub usize);

impl PointId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<usize> for PointId {
    fn from(i: usize) -> Self {
        PointId(i)
    }
}

/// Which of the two metrics to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "rho1")]
    Rho1,
    #[serde(rename = "rho2")]
    Rho2,
}

impl Metric {
    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            1 => Ok(Metric::Rho1),
            2 => Ok(Metric::Rho2),
            other => Err(Error::Domain(format!("metric index must be 1 or 2, got {other}"))),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Metric::Rho1 => 1,
            Metric::Rho2 => 2,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rho{}", self.index())
    }
}

/// Dense row-major symmetric distance matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    /// Builds a matrix from rows, rejecting non-square, non-finite or negative input.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::Structural(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for (j, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::Structural(format!("entry ({i},{j}) is not finite")));
                }
                if *v < 0.0 {
                    return Err(Error::Structural(format!("entry ({i},{j}) is negative: {v}")));
                }
            }
            data.extend(row);
        }
        Ok(Self { n, data })
    }

    /// Fills a symmetric matrix from `f(i, j)` evaluated for `i < j`; the diagonal is zero.
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64 + Sync) -> Self {
        let upper: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| ((i + 1)..n).map(|j| f(i, j)).collect())
            .collect();
        let mut data = vec![0.0; n * n];
        for (i, row) in upper.into_iter().enumerate() {
            for (k, v) in row.into_iter().enumerate() {
                let j = i + 1 + k;
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Self { n, data }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    /// Largest entry.
    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }
}

/// Opaque point label: a name or a coordinate tuple.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Name(String),
    Coords(Vec<f64>),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Name(s) => f.write_str(s),
            Label::Coords(c) => write!(f, "{c:?}"),
        }
    }
}

/// A finite set carrying two metrics.
///
/// When constructed without a second matrix, `rho2` is the same metric as
/// `rho1` and [`same_metric`](Self::same_metric) returns true.
#[derive(Clone, Debug)]
pub struct FiniteBimetricSpace {
    labels: Vec<Label>,
    rho1: DistanceMatrix,
    rho2: Option<DistanceMatrix>,
    ultrametric2: bool,
}

#[derive(Serialize, Deserialize)]
struct SpaceFile {
    labels: Vec<Label>,
    rho1: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rho2: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    ultrametric2: bool,
}

impl FiniteBimetricSpace {
    /// Structural checks only (shapes, label count); metric axioms are checked
    /// by [`validate`](Self::validate).
    pub fn new(
        labels: Vec<Label>,
        rho1: DistanceMatrix,
        rho2: Option<DistanceMatrix>,
        ultrametric2: bool,
    ) -> Result<Self> {
        if rho1.is_empty() {
            return Err(Error::Structural("space has no points".into()));
        }
        if labels.len() != rho1.len() {
            return Err(Error::Structural(format!(
                "{} labels for {} points",
                labels.len(),
                rho1.len()
            )));
        }
        if let Some(r2) = &rho2 {
            if r2.len() != rho1.len() {
                return Err(Error::Structural(format!(
                    "rho1 is {}x{} but rho2 is {}x{}",
                    rho1.len(),
                    rho1.len(),
                    r2.len(),
                    r2.len()
                )));
            }
        }
        Ok(Self {
            labels,
            rho1,
            rho2,
            ultrametric2,
        })
    }

    /// A space whose two metrics coincide.
    pub fn single(labels: Vec<Label>, rho: DistanceMatrix, ultrametric: bool) -> Result<Self> {
        Self::new(labels, rho, None, ultrametric)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.rho1.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.rho1.is_empty()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn points(&self) -> impl Iterator<Item = PointId> + '_ {
        (0..self.len()).map(PointId)
    }

    #[inline]
    pub fn metric(&self, m: Metric) -> &DistanceMatrix {
        match m {
            Metric::Rho1 => &self.rho1,
            Metric::Rho2 => self.rho2.as_ref().unwrap_or(&self.rho1),
        }
    }

    #[inline]
    pub fn dist(&self, m: Metric, x: PointId, y: PointId) -> f64 {
        self.metric(m).get(x.0, y.0)
    }

    /// True when `rho2` was omitted or is entrywise equal to `rho1`.
    pub fn same_metric(&self) -> bool {
        match &self.rho2 {
            None => true,
            Some(r2) => r2 == &self.rho1,
        }
    }

    pub fn ultrametric2_claimed(&self) -> bool {
        self.ultrametric2
    }

    pub fn check_point(&self, x: PointId) -> Result<()> {
        if x.0 >= self.len() {
            return Err(Error::Domain(format!(
                "point {} out of range for space of {} points",
                x.0,
                self.len()
            )));
        }
        Ok(())
    }

    /// Closed ball `{y : rho_m(center, y) <= r}` in ascending id order.
    pub fn ball(&self, m: Metric, center: PointId, r: f64) -> Vec<PointId> {
        self.metric(m)
            .row(center.0)
            .iter()
            .enumerate()
            .filter(|(_, d)| **d <= r)
            .map(|(i, _)| PointId(i))
            .collect()
    }

    /// Largest pairwise distance within `subset`; zero for singletons.
    pub fn diameter(&self, m: Metric, subset: &[PointId]) -> Result<f64> {
        if subset.is_empty() {
            return Err(Error::Domain("diameter of an empty subset".into()));
        }
        let dm = self.metric(m);
        let mut diam = 0.0f64;
        for (a, x) in subset.iter().enumerate() {
            for y in &subset[a + 1..] {
                diam = diam.max(dm.get(x.0, y.0));
            }
        }
        Ok(diam)
    }

    /// Diameter of the whole space in metric `m`.
    pub fn full_diameter(&self, m: Metric) -> f64 {
        self.metric(m).max()
    }

    pub fn distance_spectrum(&self, m: Metric) -> DistanceSpectrum {
        self.distance_spectrum_with_tolerance(m, DEFAULT_TOLERANCE)
    }

    /// Sorted distinct positive distances.
    ///
    /// Values within relative distance `tol` of their predecessor are merged and
    /// the cluster is represented by its largest member, so that a closed ball
    /// at a spectrum value contains every point of that distance class. With
    /// `tol == 0.0` deduplication is exact bit comparison.
    pub fn distance_spectrum_with_tolerance(&self, m: Metric, tol: f64) -> DistanceSpectrum {
        let dm = self.metric(m);
        let n = dm.len();
        let mut all: Vec<f64> = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            all.extend(dm.row(i)[i + 1..].iter().copied().filter(|d| *d > 0.0));
        }
        all.sort_by(f64::total_cmp);
        let mut values: Vec<f64> = Vec::new();
        for v in all {
            match values.last_mut() {
                Some(last) if v - *last <= tol * *last => *last = v,
                _ => values.push(v),
            }
        }
        DistanceSpectrum { values }
    }

    pub fn validate(&self) -> ValidationReport {
        self.validate_with(&ValidationOptions::default())
    }

    /// Checks both matrices for the metric axioms and, when claimed, the
    /// max-triangle inequality for `rho2`.
    pub fn validate_with(&self, opts: &ValidationOptions) -> ValidationReport {
        let mut report = ValidationReport::default();
        check_metric(&self.rho1, Metric::Rho1, false, opts, &mut report);
        if let Some(r2) = &self.rho2 {
            check_metric(r2, Metric::Rho2, self.ultrametric2, opts, &mut report);
        } else if self.ultrametric2 {
            check_ultrametric(&self.rho1, Metric::Rho2, opts, &mut report);
        }
        report
    }

    /// Consumes the space, returning it only if validation is clean.
    pub fn validated(self) -> Result<Self> {
        let report = self.validate();
        if report.is_clean() {
            Ok(self)
        } else {
            Err(Error::Invalid(Box::new(report)))
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: SpaceFile = serde_json::from_str(s)?;
        let rho1 = DistanceMatrix::from_rows(file.rho1)?;
        let rho2 = file.rho2.map(DistanceMatrix::from_rows).transpose()?;
        Self::new(file.labels, rho1, rho2, file.ultrametric2)
    }

    pub fn to_json_string(&self) -> Result<String> {
        let file = SpaceFile {
            labels: self.labels.clone(),
            rho1: self.rho1.to_rows(),
            rho2: self.rho2.as_ref().map(DistanceMatrix::to_rows),
            ultrametric2: self.ultrametric2,
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string()?)?;
        Ok(())
    }
}

/// Sorted distinct positive distances of one metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceSpectrum {
    pub values: Vec<f64>,
}

impl DistanceSpectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().copied()
    }
}

#[derive(Clone, Debug)]
pub struct ValidationOptions {
    /// Relative slack for symmetry, triangle and max-triangle comparisons.
    pub tolerance: f64,
    /// Violations recorded per (metric, axiom); further ones are only counted.
    pub max_recorded: usize,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            max_recorded: 64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axiom {
    ZeroDiagonal,
    PositiveOffDiagonal,
    Symmetry,
    Triangle,
    UltrametricTriangle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub axiom: Axiom,
    pub metric: Metric,
    /// For triangle-type axioms `(x, y, z)` with `y` the intermediate point.
    pub witness: Vec<PointId>,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Violations found beyond the recording limit.
    pub unrecorded: usize,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty() && self.unrecorded == 0
    }

    pub fn violation_count(&self) -> usize {
        self.violations.len() + self.unrecorded
    }

    pub fn first_message(&self) -> String {
        self.violations
            .first()
            .map(|v| format!("{:?} in {}: {}", v.axiom, v.metric, v.detail))
            .unwrap_or_else(|| "none".into())
    }

    fn push_all(&mut self, mut found: Vec<Violation>, total: usize, limit: usize) {
        found.truncate(limit);
        self.unrecorded += total - found.len();
        self.violations.extend(found);
    }
}

fn check_metric(
    dm: &DistanceMatrix,
    metric: Metric,
    ultrametric: bool,
    opts: &ValidationOptions,
    report: &mut ValidationReport,
) {
    let n = dm.len();
    let tol = opts.tolerance;
    let mut pointwise = Vec::new();
    let (mut diag, mut zero, mut asym) = (0usize, 0usize, 0usize);
    for i in 0..n {
        if dm.get(i, i) != 0.0 {
            diag += 1;
            if diag <= opts.max_recorded {
                pointwise.push(Violation {
                    axiom: Axiom::ZeroDiagonal,
                    metric,
                    witness: vec![PointId(i)],
                    detail: format!("{metric}[{i}][{i}] = {}", dm.get(i, i)),
                });
            }
        }
        for j in (i + 1)..n {
            let (a, b) = (dm.get(i, j), dm.get(j, i));
            if a <= 0.0 || b <= 0.0 {
                zero += 1;
                if zero <= opts.max_recorded {
                    pointwise.push(Violation {
                        axiom: Axiom::PositiveOffDiagonal,
                        metric,
                        witness: vec![PointId(i), PointId(j)],
                        detail: format!("distinct points {i} and {j} at distance zero"),
                    });
                }
            }
            if (a - b).abs() > tol * a.max(b) {
                asym += 1;
                if asym <= opts.max_recorded {
                    pointwise.push(Violation {
                        axiom: Axiom::Symmetry,
                        metric,
                        witness: vec![PointId(i), PointId(j)],
                        detail: format!("{metric}[{i}][{j}] = {a} but {metric}[{j}][{i}] = {b}"),
                    });
                }
            }
        }
    }
    report.violations.extend(pointwise);
    report.unrecorded += diag.saturating_sub(opts.max_recorded)
        + zero.saturating_sub(opts.max_recorded)
        + asym.saturating_sub(opts.max_recorded);

    let limit = opts.max_recorded;
    let per_x: Vec<(Vec<Violation>, usize)> = (0..n)
        .into_par_iter()
        .map(|x| {
            let mut found = Vec::new();
            let mut count = 0usize;
            let rx = dm.row(x);
            for z in (x + 1)..n {
                let xz = rx[z];
                for y in 0..n {
                    if y == x || y == z {
                        continue;
                    }
                    let via = rx[y] + dm.get(y, z);
                    if xz > via * (1.0 + tol) {
                        count += 1;
                        if found.len() < limit {
                            found.push(Violation {
                                axiom: Axiom::Triangle,
                                metric,
                                witness: vec![PointId(x), PointId(y), PointId(z)],
                                detail: format!(
                                    "{metric}({x},{z}) = {xz} > {metric}({x},{y}) + {metric}({y},{z}) = {via}"
                                ),
                            });
                        }
                    }
                }
            }
            (found, count)
        })
        .collect();
    let total: usize = per_x.iter().map(|(_, c)| c).sum();
    let found: Vec<Violation> = per_x.into_iter().flat_map(|(v, _)| v).collect();
    report.push_all(found, total, limit);

    if ultrametric {
        check_ultrametric(dm, metric, opts, report);
    }
}

fn check_ultrametric(
    dm: &DistanceMatrix,
    metric: Metric,
    opts: &ValidationOptions,
    report: &mut ValidationReport,
) {
    let n = dm.len();
    let tol = opts.tolerance;
    let limit = opts.max_recorded;
    let per_x: Vec<(Vec<Violation>, usize)> = (0..n)
        .into_par_iter()
        .map(|x| {
            let mut found = Vec::new();
            let mut count = 0usize;
            let rx = dm.row(x);
            for z in (x + 1)..n {
                let xz = rx[z];
                for y in 0..n {
                    if y == x || y == z {
                        continue;
                    }
                    let bound = rx[y].max(dm.get(y, z));
                    if xz > bound * (1.0 + tol) {
                        count += 1;
                        if found.len() < limit {
                            found.push(Violation {
                                axiom: Axiom::UltrametricTriangle,
                                metric,
                                witness: vec![PointId(x), PointId(y), PointId(z)],
                                detail: format!(
                                    "{metric}({x},{z}) = {xz} > max({metric}({x},{y}), {metric}({y},{z})) = {bound}"
                                ),
                            });
                        }
                    }
                }
            }
            (found, count)
        })
        .collect();
    let total: usize = per_x.iter().map(|(_, c)| c).sum();
    let found: Vec<Violation> = per_x.into_iter().flat_map(|(v, _)| v).collect();
    report.push_all(found, total, limit);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> FiniteBimetricSpace {
        let labels = (0..n).map(|i| Label::Coords(vec![i as f64])).collect();
        let rho = DistanceMatrix::from_fn(n, |i, j| (i as f64 - j as f64).abs());
        FiniteBimetricSpace::single(labels, rho, false).unwrap()
    }

    fn baire_square() -> FiniteBimetricSpace {
        // 00, 01, 10, 11 with distance 2^-k, k the first differing coordinate
        let d = |i: usize, j: usize| if (i ^ j) & 2 != 0 { 0.5 } else { 0.25 };
        let labels = ["00", "01", "10", "11"].iter().map(|s| Label::Name(s.to_string())).collect();
        let rho = DistanceMatrix::from_fn(4, d);
        FiniteBimetricSpace::new(labels, rho.clone(), Some(rho), true).unwrap()
    }

    #[test]
    fn line_is_a_metric() {
        assert!(line(4).validate().is_clean());
    }

    #[test]
    fn triangle_violation_has_witness() {
        let rho1 = DistanceMatrix::from_fn(3, |i, j| (i as f64 - j as f64).abs());
        let mut rows = rho1.to_rows();
        rows[0][2] = 3.0;
        rows[2][0] = 3.0;
        let rho2 = DistanceMatrix::from_rows(rows).unwrap();
        let labels = (0..3).map(|i| Label::Name(i.to_string())).collect();
        let space = FiniteBimetricSpace::new(labels, rho1, Some(rho2), false).unwrap();
        let report = space.validate();
        assert_eq!(report.violation_count(), 1);
        let v = &report.violations[0];
        assert_eq!(v.axiom, Axiom::Triangle);
        assert_eq!(v.metric, Metric::Rho2);
        assert_eq!(v.witness, vec![PointId(0), PointId(1), PointId(2)]);
    }

    #[test]
    fn baire_square_passes_ultrametric_check() {
        let space = baire_square();
        assert!(space.validate().is_clean());
        // exhaustive oracle over all ordered triples
        let d = space.metric(Metric::Rho2);
        for x in 0..4 {
            for y in 0..4 {
                for z in 0..4 {
                    assert!(d.get(x, z) <= d.get(x, y).max(d.get(y, z)));
                }
            }
        }
    }

    #[test]
    fn false_ultrametric_claim_is_reported() {
        let rho = DistanceMatrix::from_fn(3, |i, j| (i as f64 - j as f64).abs());
        let labels = (0..3).map(|i| Label::Name(i.to_string())).collect();
        let space = FiniteBimetricSpace::new(labels, rho, None, true).unwrap();
        let report = space.validate();
        assert!(report
            .violations
            .iter()
            .any(|v| v.axiom == Axiom::UltrametricTriangle));
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(
            DistanceMatrix::from_rows(vec![vec![0.0, 1.0], vec![1.0]]),
            Err(Error::Structural(_))
        ));
        assert!(matches!(
            DistanceMatrix::from_rows(vec![vec![0.0, f64::NAN], vec![1.0, 0.0]]),
            Err(Error::Structural(_))
        ));
        assert!(matches!(
            DistanceMatrix::from_rows(vec![vec![0.0, -1.0], vec![-1.0, 0.0]]),
            Err(Error::Structural(_))
        ));
        let r1 = DistanceMatrix::from_fn(2, |_, _| 1.0);
        let r2 = DistanceMatrix::from_fn(3, |_, _| 1.0);
        let labels = vec![Label::Name("a".into()), Label::Name("b".into())];
        assert!(matches!(
            FiniteBimetricSpace::new(labels, r1, Some(r2), false),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn zero_distance_between_distinct_points_is_rejected() {
        let rho = DistanceMatrix::from_rows(vec![vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let labels = vec![Label::Name("a".into()), Label::Name("b".into())];
        let space = FiniteBimetricSpace::single(labels, rho, false).unwrap();
        let report = space.validate();
        assert_eq!(report.violations[0].axiom, Axiom::PositiveOffDiagonal);
        assert!(space.validated().is_err());
    }

    #[test]
    fn balls() {
        let l = line(4);
        assert_eq!(
            l.ball(Metric::Rho1, PointId(1), 1.0),
            vec![PointId(0), PointId(1), PointId(2)]
        );
        for x in l.points() {
            assert_eq!(l.ball(Metric::Rho2, x, 0.0), vec![x]);
        }
        let b = baire_square();
        assert_eq!(b.ball(Metric::Rho1, PointId(0), 0.25), vec![PointId(0), PointId(1)]);
    }

    #[test]
    fn diameters() {
        let l = line(4);
        let all: Vec<_> = l.points().collect();
        assert_eq!(l.diameter(Metric::Rho1, &all).unwrap(), 3.0);
        assert_eq!(l.diameter(Metric::Rho1, &[PointId(2)]).unwrap(), 0.0);
        assert!(matches!(l.diameter(Metric::Rho1, &[]), Err(Error::Domain(_))));
        let b = baire_square();
        assert_eq!(b.diameter(Metric::Rho2, &[PointId(0), PointId(1)]).unwrap(), 0.25);
    }

    #[test]
    fn spectra() {
        assert_eq!(line(4).distance_spectrum(Metric::Rho1).values, vec![1.0, 2.0, 3.0]);
        assert_eq!(baire_square().distance_spectrum(Metric::Rho2).values, vec![0.25, 0.5]);
        assert!(line(1).distance_spectrum(Metric::Rho1).is_empty());
    }

    #[test]
    fn spectrum_merges_near_duplicates_to_the_larger_value() {
        let a = 0.1 + 0.2; // 0.30000000000000004
        let rho = DistanceMatrix::from_rows(vec![
            vec![0.0, 0.3, a],
            vec![0.3, 0.0, 0.5],
            vec![a, 0.5, 0.0],
        ])
        .unwrap();
        let labels = (0..3).map(|i| Label::Name(i.to_string())).collect();
        let space = FiniteBimetricSpace::single(labels, rho, false).unwrap();
        let spec = space.distance_spectrum(Metric::Rho1);
        assert_eq!(spec.values, vec![a, 0.5]);
        assert_eq!(space.ball(Metric::Rho1, PointId(0), spec.values[0]).len(), 3);
        let exact = space.distance_spectrum_with_tolerance(Metric::Rho1, 0.0);
        assert_eq!(exact.values, vec![0.3, a, 0.5]);
    }

    #[test]
    fn json_round_trip_and_default_rho2() {
        let json = r#"{"labels":["a","b"],"rho1":[[0,2],[2,0]]}"#;
        let space = FiniteBimetricSpace::from_json_str(json).unwrap();
        assert!(space.same_metric());
        assert_eq!(space.dist(Metric::Rho2, PointId(0), PointId(1)), 2.0);
        let back = FiniteBimetricSpace::from_json_str(&space.to_json_string().unwrap()).unwrap();
        assert_eq!(back.metric(Metric::Rho1), space.metric(Metric::Rho1));
        assert!(!back.ultrametric2_claimed());
    }
}
