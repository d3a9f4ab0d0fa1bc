use num_rational::Ratio;
use num_traits::ToPrimitive;

use super::{check_cap, DEFAULT_POINT_CAP};
use crate::error::{Error, Result};
use crate::metric::{DistanceMatrix, FiniteBimetricSpace, Label};

/// Functions on `{0, 1/grid_n, ..., 1}` with `f(0) = 0`, values in
/// `value_step * Z` and increments at most `1/grid_n` in absolute value,
/// under the sup norm.
pub fn lipschitz_net_space(grid_n: usize, value_step: Ratio<i64>) -> Result<FiniteBimetricSpace> {
    if grid_n == 0 {
        return Err(Error::Domain("grid_n must be positive".into()));
    }
    if value_step <= Ratio::from_integer(0) {
        return Err(Error::Domain("value step must be positive".into()));
    }
    // largest m with m * step <= 1 / grid_n
    let max_inc = (Ratio::new(1, grid_n as i64) / value_step).floor().to_integer();
    let choices = (2 * max_inc + 1) as usize;
    let count = choices
        .checked_pow(grid_n as u32)
        .unwrap_or(usize::MAX);
    check_cap("lipschitz net", count, DEFAULT_POINT_CAP)?;

    // values in units of value_step at t_1..t_grid_n
    let funcs: Vec<Vec<i64>> = (0..count)
        .map(|mut code| {
            let mut acc = 0i64;
            (0..grid_n)
                .map(|_| {
                    acc += (code % choices) as i64 - max_inc;
                    code /= choices;
                    acc
                })
                .collect()
        })
        .collect();
    let step = value_step.to_f64().unwrap_or(f64::NAN);
    let rho = DistanceMatrix::from_fn(count, |i, j| {
        let units = funcs[i]
            .iter()
            .zip(&funcs[j])
            .map(|(a, b)| (a - b).abs())
            .max()
            .unwrap_or(0);
        (Ratio::from_integer(units) * value_step).to_f64().unwrap_or(units as f64 * step)
    });
    let labels = funcs
        .iter()
        .map(|f| {
            let mut c = vec![0.0];
            c.extend(f.iter().map(|v| (Ratio::from_integer(*v) * value_step).to_f64().unwrap_or(f64::NAN)));
            Label::Coords(c)
        })
        .collect();
    FiniteBimetricSpace::single(labels, rho, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{Metric, PointId};

    #[test]
    fn small_net() {
        let z = lipschitz_net_space(3, Ratio::new(1, 3)).unwrap();
        assert_eq!(z.len(), 27);
        assert!(z.validate().is_clean());
        let zero = z
            .labels()
            .iter()
            .position(|l| matches!(l, Label::Coords(c) if c.iter().all(|v| *v == 0.0)))
            .unwrap();
        assert!(z.points().all(|p| z.dist(Metric::Rho1, PointId(zero), p) <= 1.0));
        assert_eq!(z.full_diameter(Metric::Rho1), 2.0);
    }

    #[test]
    fn cap() {
        assert!(lipschitz_net_space(12, Ratio::new(1, 12)).is_err());
    }
}
