//! Example spaces with exact oracles.

mod lipschitz;
mod spaces;
mod ultrametric;
mod wasserstein;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::FiniteBimetricSpace;

pub use lipschitz::lipschitz_net_space;
pub use spaces::{grid_ball_space, hamming_cube, line, random_closure_space, PNorm};
pub use ultrametric::{fg_ultrametric_cube, theorem64_closed_forms, ClosedForms, UltrametricProfile};
pub use wasserstein::{
    lattice_measure_space, round_to_cover, w1_distance, wasserstein_cover, CoverStructure,
    LatticeMeasure, Rounded, Transport,
};

/// Point-count cap for constructed spaces.
pub const DEFAULT_POINT_CAP: usize = 5_000;

pub(crate) fn check_cap(what: &'static str, size: usize, cap: usize) -> Result<()> {
    if size > cap {
        return Err(Error::SizeCap { what, size, cap });
    }
    Ok(())
}

/// A named gallery construction, as used by configs and the CLI.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GallerySpec {
    Line { n: usize },
    GridBall { d: usize, grid_n: usize, p: PNorm },
    Hamming { d: usize },
    /// `f(k) = g(k) = r^(-k)`.
    Baire {
        #[serde(default = "two")]
        r: f64,
        #[serde(rename = "L")]
        l: usize,
    },
    /// `f(k) = a^(-k)`, `g(k) = b^(-k)`.
    Geometric {
        a: f64,
        b: f64,
        #[serde(rename = "L")]
        l: usize,
    },
    Lattice { d: usize, n: usize, denom: usize },
    Lipschitz { grid_n: usize, step_num: i64, step_den: i64 },
    Closure { n: usize, seed: u64 },
}

fn two() -> f64 {
    2.0
}

impl GallerySpec {
    pub fn build(&self) -> Result<FiniteBimetricSpace> {
        match *self {
            GallerySpec::Line { n } => line(n),
            GallerySpec::GridBall { d, grid_n, p } => grid_ball_space(d, grid_n, p),
            GallerySpec::Hamming { d } => hamming_cube(d),
            GallerySpec::Baire { r, l } => fg_ultrametric_cube(&UltrametricProfile::baire(r, l)?),
            GallerySpec::Geometric { a, b, l } => {
                fg_ultrametric_cube(&UltrametricProfile::geometric(a, b, l)?)
            }
            GallerySpec::Lattice { d, n, denom } => lattice_measure_space(d, n, denom),
            GallerySpec::Lipschitz {
                grid_n,
                step_num,
                step_den,
            } => {
                if step_num <= 0 || step_den <= 0 {
                    return Err(Error::Domain("value step must be positive".into()));
                }
                lipschitz_net_space(grid_n, num_rational::Ratio::new(step_num, step_den))
            }
            GallerySpec::Closure { n, seed } => random_closure_space(n, seed),
        }
    }

    pub fn name(&self) -> String {
        match self {
            GallerySpec::Line { n } => format!("line-{n}"),
            GallerySpec::GridBall { d, grid_n, p } => format!("ball-d{d}-n{grid_n}-{p}"),
            GallerySpec::Hamming { d } => format!("hamming-{d}"),
            GallerySpec::Baire { r, l } => format!("baire-r{r}-L{l}"),
            GallerySpec::Geometric { a, b, l } => format!("fg-a{a}-b{b}-L{l}"),
            GallerySpec::Lattice { d, n, denom } => format!("lattice-d{d}-n{n}-q{denom}"),
            GallerySpec::Lipschitz {
                grid_n,
                step_num,
                step_den,
            } => format!("lipschitz-n{grid_n}-{step_num}over{step_den}"),
            GallerySpec::Closure { n, seed } => format!("closure-n{n}-seed{seed}"),
        }
    }
}

/// The standard gallery: every construction at sizes up to 1,024 points,
/// sized so exact packing stays within the default cap.
pub fn standard_gallery() -> Vec<GallerySpec> {
    vec![
        GallerySpec::Line { n: 4 },
        GallerySpec::Line { n: 32 },
        GallerySpec::GridBall { d: 1, grid_n: 33, p: PNorm::LInf },
        GallerySpec::GridBall { d: 2, grid_n: 9, p: PNorm::L1 },
        GallerySpec::GridBall { d: 2, grid_n: 7, p: PNorm::L2 },
        GallerySpec::GridBall { d: 2, grid_n: 9, p: PNorm::LInf },
        GallerySpec::Hamming { d: 5 },
        GallerySpec::Baire { r: 2.0, l: 6 },
        GallerySpec::Baire { r: 2.0, l: 10 },
        GallerySpec::Geometric { a: 2.0, b: 3.0, l: 8 },
        GallerySpec::Lattice { d: 1, n: 4, denom: 4 },
        GallerySpec::Lipschitz {
            grid_n: 3,
            step_num: 1,
            step_den: 3,
        },
        GallerySpec::Closure { n: 12, seed: 1 },
    ]
}
