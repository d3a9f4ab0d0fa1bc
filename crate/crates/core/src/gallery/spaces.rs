use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_cap, DEFAULT_POINT_CAP};
use crate::error::{Error, Result};
use crate::metric::{DistanceMatrix, FiniteBimetricSpace, Label};
use crate::rng;

/// Points `0, 1, ..., n-1` on the real line.
pub fn line(n: usize) -> Result<FiniteBimetricSpace> {
    if n == 0 {
        return Err(Error::Domain("line needs at least one point".into()));
    }
    check_cap("line", n, DEFAULT_POINT_CAP)?;
    let labels = (0..n).map(|i| Label::Coords(vec![i as f64])).collect();
    let rho = DistanceMatrix::from_fn(n, |i, j| i.abs_diff(j) as f64);
    FiniteBimetricSpace::single(labels, rho, false)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PNorm {
    #[serde(rename = "1")]
    L1,
    #[serde(rename = "2")]
    L2,
    #[serde(rename = "inf")]
    LInf,
}

impl fmt::Display for PNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PNorm::L1 => "1",
            PNorm::L2 => "2",
            PNorm::LInf => "inf",
        })
    }
}

impl FromStr for PNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" | "l1" => Ok(PNorm::L1),
            "2" | "l2" => Ok(PNorm::L2),
            "inf" | "linf" | "max" => Ok(PNorm::LInf),
            _ => Err(Error::Domain(format!("unknown p-norm {s:?} (use 1, 2 or inf)"))),
        }
    }
}

/// Uniform grid on `[-1, 1]^d` intersected with the closed unit `p`-ball.
///
/// Coordinates are stored as integers `c` in `{-m, -m+2, ..., m}` with
/// `m = grid_n - 1`, so membership is decided exactly and the point is `c / m`.
pub fn grid_ball_space(d: usize, grid_n: usize, p: PNorm) -> Result<FiniteBimetricSpace> {
    if !(1..=3).contains(&d) {
        return Err(Error::Domain(format!("grid ball dimension must be 1..=3, got {d}")));
    }
    if grid_n < 3 || grid_n.is_multiple_of(2) {
        return Err(Error::Domain(format!("grid_n must be odd and >= 3, got {grid_n}")));
    }
    let m = (grid_n - 1) as i64;
    let total = grid_n.checked_pow(d as u32).unwrap_or(usize::MAX);
    check_cap("grid", total, 1_000_000)?;
    let mut points: Vec<Vec<i64>> = Vec::new();
    for idx in 0..total {
        let mut rest = idx;
        let mut c = vec![0i64; d];
        for slot in c.iter_mut().rev() {
            *slot = 2 * (rest % grid_n) as i64 - m;
            rest /= grid_n;
        }
        let inside = match p {
            PNorm::L1 => c.iter().map(|v| v.abs()).sum::<i64>() <= m,
            PNorm::L2 => c.iter().map(|v| v * v).sum::<i64>() <= m * m,
            PNorm::LInf => true,
        };
        if inside {
            points.push(c);
        }
    }
    check_cap("grid ball", points.len(), DEFAULT_POINT_CAP)?;
    let scale = m as f64;
    let rho = DistanceMatrix::from_fn(points.len(), |i, j| {
        let diff = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b).abs());
        match p {
            PNorm::L1 => diff.sum::<i64>() as f64 / scale,
            PNorm::L2 => (diff.map(|v| v * v).sum::<i64>() as f64).sqrt() / scale,
            PNorm::LInf => diff.max().unwrap_or(0) as f64 / scale,
        }
    });
    let labels = points
        .iter()
        .map(|c| Label::Coords(c.iter().map(|v| *v as f64 / scale).collect()))
        .collect();
    FiniteBimetricSpace::single(labels, rho, false)
}

/// `{0,1}^d` with the Hamming distance.
pub fn hamming_cube(d: usize) -> Result<FiniteBimetricSpace> {
    if d > 12 {
        return Err(Error::SizeCap {
            what: "hamming cube dimension",
            size: d,
            cap: 12,
        });
    }
    let n = 1usize << d;
    let labels = (0..n)
        .map(|x| Label::Name(if d == 0 { String::new() } else { format!("{x:0d$b}") }))
        .collect();
    let rho = DistanceMatrix::from_fn(n, |i, j| (i ^ j).count_ones() as f64);
    FiniteBimetricSpace::single(labels, rho, false)
}

/// Shortest-path closure of the complete graph on `n` vertices with i.i.d.
/// edge weights uniform on `[0.5, 1.5]`.
pub fn random_closure_space(n: usize, seed: u64) -> Result<FiniteBimetricSpace> {
    if n == 0 {
        return Err(Error::Domain("closure space needs at least one point".into()));
    }
    check_cap("closure space", n, DEFAULT_POINT_CAP)?;
    let mut g = rng::seeded(seed);
    let mut w = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = g.random_range(0.5..=1.5);
            w[i][j] = v;
            w[j][i] = v;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = w[i][k] + w[k][j];
                if via < w[i][j] {
                    w[i][j] = via;
                }
            }
        }
    }
    let labels = (0..n).map(|i| Label::Name(format!("v{i}"))).collect();
    FiniteBimetricSpace::single(labels, DistanceMatrix::from_fn(n, |i, j| w[i][j]), false)
}
