use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{DistanceMatrix, FiniteBimetricSpace, Label};

/// Scale sequences for the binary-string ultrametrics: `f[k-1]` is the `rho1`
/// distance between strings whose first difference is at index `k` (1-based),
/// and `g[k-1]` likewise for `rho2`. The depth `L` is the common length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UltrametricProfile {
    f: Vec<f64>,
    g: Vec<f64>,
}

fn strictly_decreasing_positive(v: &[f64]) -> bool {
    v.iter().all(|x| *x > 0.0 && x.is_finite()) && v.windows(2).all(|w| w[1] < w[0])
}

impl UltrametricProfile {
    pub fn new(f: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        if f.is_empty() || f.len() != g.len() {
            return Err(Error::Domain(format!(
                "profile needs equal nonzero lengths, got {} and {}",
                f.len(),
                g.len()
            )));
        }
        if !strictly_decreasing_positive(&f) || !strictly_decreasing_positive(&g) {
            return Err(Error::Domain("profile sequences must be positive and strictly decreasing".into()));
        }
        Ok(Self { f, g })
    }

    /// `f(k) = a^(-k)`, `g(k) = b^(-k)` for `k = 1..=l`.
    pub fn geometric(a: f64, b: f64, l: usize) -> Result<Self> {
        if !(a > 1.0 && b > 1.0) {
            return Err(Error::Domain(format!("geometric bases must exceed 1, got {a}, {b}")));
        }
        let seq = |base: f64| (1..=l as i32).map(|k| base.powi(-k)).collect();
        Self::new(seq(a), seq(b))
    }

    /// The Baire metric `r^(-k)` on both sides.
    pub fn baire(r: f64, l: usize) -> Result<Self> {
        Self::geometric(r, r, l)
    }

    pub fn depth(&self) -> usize {
        self.f.len()
    }

    /// `f(k)` for `k` in `1..=L`.
    pub fn f(&self, k: usize) -> f64 {
        self.f[k - 1]
    }

    pub fn g(&self, k: usize) -> f64 {
        self.g[k - 1]
    }

    pub fn same_metric(&self) -> bool {
        self.f == self.g
    }
}

/// `{0,1}^L` with `rho1(x, y) = f(first differing index)` and `rho2` likewise
/// with `g`; equal strings are at distance 0. Coordinate 1 is the most
/// significant bit of the point index, so labels sort lexicographically.
pub fn fg_ultrametric_cube(profile: &UltrametricProfile) -> Result<FiniteBimetricSpace> {
    let l = profile.depth();
    if l > 12 {
        return Err(Error::SizeCap {
            what: "ultrametric cube depth",
            size: l,
            cap: 12,
        });
    }
    let n = 1usize << l;
    let first_diff = |i: usize, j: usize| l - (usize::BITS - 1 - (i ^ j).leading_zeros()) as usize;
    let labels = (0..n).map(|x| Label::Name(format!("{x:0l$b}"))).collect();
    let rho1 = DistanceMatrix::from_fn(n, |i, j| if i == j { 0.0 } else { profile.f(first_diff(i, j)) });
    let rho2 = (!profile.same_metric()).then(|| {
        DistanceMatrix::from_fn(n, |i, j| if i == j { 0.0 } else { profile.g(first_diff(i, j)) })
    });
    FiniteBimetricSpace::new(labels, rho1, rho2, true)
}

/// Closed-form scales of the binary-string ultrametric space, evaluated over
/// `k = 1..=L`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedForms {
    pub alpha: f64,
    /// `g(k0)` with `k0 = floor(min_k (k + alpha f(k) / ln 2))`, or 0 when `k0 > L`.
    pub s: f64,
    pub k0: usize,
    pub argmin: usize,
    pub min_value: f64,
    /// `max_k g(k) e^(-alpha f(k))`.
    pub s_circ: f64,
    pub argmax: usize,
    /// Both extremizers lie strictly inside the truncation and `k0 <= L`.
    pub truncation_safe: bool,
}

pub fn theorem64_closed_forms(profile: &UltrametricProfile, alpha: f64) -> Result<ClosedForms> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Domain(format!("alpha must be positive and finite, got {alpha}")));
    }
    let l = profile.depth();
    let (mut argmin, mut min_value) = (1, f64::INFINITY);
    let (mut argmax, mut s_circ) = (1, f64::NEG_INFINITY);
    for k in 1..=l {
        let v = k as f64 + alpha * profile.f(k) / std::f64::consts::LN_2;
        if v < min_value {
            min_value = v;
            argmin = k;
        }
        let w = profile.g(k) * (-alpha * profile.f(k)).exp();
        if w > s_circ {
            s_circ = w;
            argmax = k;
        }
    }
    let k0 = min_value.floor() as usize;
    let s = if k0 <= l { profile.g(k0) } else { 0.0 };
    Ok(ClosedForms {
        alpha,
        s,
        k0,
        argmin,
        min_value,
        s_circ,
        argmax,
        truncation_safe: argmin < l && argmax < l && k0 <= l,
    })
}
