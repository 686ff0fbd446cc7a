//! Worker state enumeration, asset grid, and the assembled state space.

use ndarray::Array2;

use crate::error::{Result, SmeqError};
use crate::markov::{discretize_ar1_with, DiscreteAr1};
use crate::params::{ModelParams, Numerics};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Race {
    Black = 0,
    White = 1,
}

pub const RACES: [Race; 2] = [Race::Black, Race::White];

impl Race {
    #[inline]
    pub fn idx(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Race::Black => "black",
            Race::White => "white",
        }
    }
}

/// Firm type. Prejudiced firms match only with white workers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sector {
    Np,
    P,
}

impl Sector {
    pub fn label(self) -> &'static str {
        match self {
            Sector::Np => "np",
            Sector::P => "p",
        }
    }
}

/// Labor market status. Black workers never occupy `EmpP` or `UnempEligP`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EmpState {
    EmpNp,
    EmpP,
    UnempEligNp,
    UnempEligP,
    UnempInelig,
}

pub const EMP_STATES: [EmpState; 5] = [
    EmpState::EmpNp,
    EmpState::EmpP,
    EmpState::UnempEligNp,
    EmpState::UnempEligP,
    EmpState::UnempInelig,
];

impl EmpState {
    pub fn label(self) -> &'static str {
        match self {
            EmpState::EmpNp => "emp_np",
            EmpState::EmpP => "emp_p",
            EmpState::UnempEligNp => "unemp_elig_np",
            EmpState::UnempEligP => "unemp_elig_p",
            EmpState::UnempInelig => "unemp_inelig",
        }
    }

    pub fn is_employed(self) -> bool {
        matches!(self, EmpState::EmpNp | EmpState::EmpP)
    }
}

/// Asset grid with polynomial spacing, dense near the borrowing constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct AssetGrid {
    pub points: Vec<f64>,
    a_max: f64,
    curvature: f64,
}

impl AssetGrid {
    pub fn new(n_a: usize, a_max: f64, curvature: f64) -> Result<AssetGrid> {
        if n_a < 2 {
            return Err(SmeqError::invalid_param("n_a", "need at least 2 asset points"));
        }
        if a_max <= 0.0 {
            return Err(SmeqError::invalid_param("a_max", "asset ceiling must be positive"));
        }
        if curvature < 1.0 {
            return Err(SmeqError::invalid_param("grid_curvature", "must be >= 1"));
        }
        let points = (0..n_a)
            .map(|i| a_max * (i as f64 / (n_a - 1) as f64).powf(curvature))
            .collect();
        Ok(AssetGrid {
            points,
            a_max,
            curvature,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn max(&self) -> f64 {
        self.a_max
    }

    /// Bracketing segment and upper weight for `x`, clamped to the grid:
    /// `x ~ (1-w) * points[i] + w * points[i+1]` with `w` in [0,1].
    #[inline]
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let n = self.points.len();
        if x <= 0.0 {
            return (0, 0.0);
        }
        if x >= self.a_max {
            return (n - 2, 1.0);
        }
        // invert the power spacing, then fix up float edge cases
        let t = (x / self.a_max).powf(1.0 / self.curvature) * (n - 1) as f64;
        let mut i = (t as usize).min(n - 2);
        if self.points[i] > x {
            i -= 1;
        } else if self.points[i + 1] < x {
            i += 1;
        }
        let w = (x - self.points[i]) / (self.points[i + 1] - self.points[i]);
        (i, w.clamp(0.0, 1.0))
    }

    /// Linear interpolation of `row` (values on this grid) at asset level `x`.
    #[inline]
    pub fn interp(&self, row: &[f64], x: f64) -> f64 {
        let (i, w) = self.locate(x);
        row[i] + w * (row[i + 1] - row[i])
    }
}

/// Discretized grids and the productivity chain; shared read-only by every solver.
#[derive(Debug, Clone)]
pub struct StateSpace {
    pub assets: AssetGrid,
    pub shocks: DiscreteAr1,
}

impl StateSpace {
    pub fn build(params: &ModelParams, numerics: &Numerics) -> Result<StateSpace> {
        if numerics.n_s < 1 {
            return Err(SmeqError::invalid_param("n_s", "need at least one productivity state"));
        }
        let assets = AssetGrid::new(numerics.n_a, numerics.a_max, numerics.grid_curvature)?;
        let shocks = discretize_ar1_with(
            params.rho_s,
            params.sigma_s,
            numerics.n_s,
            numerics.level_norm,
        )?;
        Ok(StateSpace { assets, shocks })
    }

    #[inline]
    pub fn n_a(&self) -> usize {
        self.assets.len()
    }

    #[inline]
    pub fn n_s(&self) -> usize {
        self.shocks.levels.len()
    }

    #[inline]
    pub fn a_grid(&self) -> &[f64] {
        &self.assets.points
    }

    #[inline]
    pub fn s_grid(&self) -> &[f64] {
        &self.shocks.levels
    }

    #[inline]
    pub fn pi_s(&self) -> &Array2<f64> {
        &self.shocks.pi
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spans_and_curves() {
        let g = AssetGrid::new(200, 300.0, 2.0).unwrap();
        assert_eq!(g.points[0], 0.0);
        assert!((g.points[199] - 300.0).abs() < 1e-12);
        for i in 1..199 {
            let lo = g.points[i] - g.points[i - 1];
            let hi = g.points[i + 1] - g.points[i];
            assert!(hi > lo, "spacing must increase, broke at {i}");
        }
    }

    #[test]
    fn two_point_grid() {
        let g = AssetGrid::new(2, 1.0, 2.0).unwrap();
        assert_eq!(g.points, vec![0.0, 1.0]);
    }

    #[test]
    fn rejects_bad_grid() {
        assert!(AssetGrid::new(1, 1.0, 2.0).is_err());
        assert!(AssetGrid::new(10, 0.0, 2.0).is_err());
        assert!(AssetGrid::new(10, -3.0, 2.0).is_err());
    }

    #[test]
    fn locate_round_trips() {
        let g = AssetGrid::new(50, 120.0, 2.0).unwrap();
        for k in 0..500 {
            let x = 120.0 * k as f64 / 499.0;
            let (i, w) = g.locate(x);
            let back = (1.0 - w) * g.points[i] + w * g.points[i + 1];
            assert!((back - x).abs() < 1e-9, "x = {x}");
        }
        assert_eq!(g.locate(-1.0), (0, 0.0));
        let (i, w) = g.locate(1e9);
        assert_eq!(i, 48);
        assert_eq!(w, 1.0);
    }

    #[test]
    fn locate_hits_nodes_exactly() {
        let g = AssetGrid::new(37, 80.0, 2.0).unwrap();
        for (i, &a) in g.points.iter().enumerate() {
            let v = g.interp(&g.points, a);
            assert!((v - a).abs() < 1e-12, "node {i}");
        }
    }

    #[test]
    fn default_state_space_shape() {
        let ss = StateSpace::build(&ModelParams::default(), &Numerics::default()).unwrap();
        assert_eq!(ss.n_a(), 200);
        assert_eq!(ss.n_s(), 5);
        assert_eq!(ss.a_grid()[0], 0.0);
    }
}
