//! Economy structure: parameters plus the market layout an experiment may alter.

use crate::error::Result;
use crate::matching::{match_prob_firm, match_prob_worker};
use crate::params::ModelParams;
use crate::state::Race;

/// A solvable economy. The benchmark has both firm types active; counterfactuals
/// may excise the prejudiced sector or re-index destruction shocks by race.
#[derive(Debug, Clone, PartialEq)]
pub struct Economy {
    pub params: ModelParams,
    /// Whether prejudiced firms exist at all.
    pub p_active: bool,
    /// Job destruction probability of non-prejudiced matches, by worker race.
    /// Equal to `lambda_np` for both races except in the race-specific-lambda
    /// counterfactual.
    pub lambda_np_by_race: [f64; 2],
}

impl Economy {
    pub fn benchmark(params: ModelParams) -> Economy {
        let l = params.lambda_np;
        Economy {
            params,
            p_active: true,
            lambda_np_by_race: [l, l],
        }
    }

    /// One-sector economy: prejudiced firms removed, all matches destroyed at
    /// the benchmark `lambda_np`.
    pub fn eliminate_p(params: ModelParams) -> Economy {
        let l = params.lambda_np;
        Economy {
            params,
            p_active: false,
            lambda_np_by_race: [l, l],
        }
    }

    /// One-sector economy with destruction shocks reassigned to the worker's race.
    pub fn race_specific_lambda(params: ModelParams, lambda_bl: f64, lambda_wh: f64) -> Economy {
        Economy {
            params,
            p_active: false,
            lambda_np_by_race: [lambda_bl, lambda_wh],
        }
    }

    #[inline]
    pub fn lambda_np(&self, race: Race) -> f64 {
        self.lambda_np_by_race[race.idx()]
    }

    #[inline]
    pub fn lambda_p(&self) -> f64 {
        self.params.lambda_p
    }

    #[inline]
    pub fn xi(&self, race: Race) -> f64 {
        match race {
            Race::Black => self.params.xi_bl,
            Race::White => self.params.xi_wh,
        }
    }

    #[inline]
    pub fn eps(&self, race: Race) -> f64 {
        match race {
            Race::Black => self.params.eps_bl,
            Race::White => self.params.eps_wh,
        }
    }

    #[inline]
    pub fn race_mass(&self, race: Race) -> f64 {
        match race {
            Race::Black => self.params.share_black,
            Race::White => 1.0 - self.params.share_black,
        }
    }
}

/// Prices and market tightness taken as given by individual agents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prices {
    /// Quarterly real interest rate.
    pub r: f64,
    /// Labor income tax (applies to wages and benefits).
    pub tau: f64,
    /// Lump-sum dividend transfer.
    pub d: f64,
    pub theta_np: f64,
    pub theta_p: f64,
}

/// Matching probabilities implied by tightness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flows {
    pub f_np: f64,
    pub f_p: f64,
    pub q_np: f64,
    pub q_p: f64,
}

impl Flows {
    pub fn from_prices(econ: &Economy, prices: &Prices) -> Result<Flows> {
        let iota = econ.params.iota;
        let f_np = match_prob_worker(prices.theta_np, iota)?;
        let q_np = match_prob_firm(prices.theta_np, iota)?;
        let (f_p, q_p) = if econ.p_active {
            (
                match_prob_worker(prices.theta_p, iota)?,
                match_prob_firm(prices.theta_p, iota)?,
            )
        } else {
            (0.0, 1.0)
        };
        Ok(Flows { f_np, f_p, q_np, q_p })
    }

    /// Hazard of leaving unemployment for a worker of `race` (any offer).
    #[inline]
    pub fn job_finding(&self, race: Race) -> f64 {
        match race {
            Race::Black => self.f_np,
            Race::White => 1.0 - (1.0 - self.f_np) * (1.0 - self.f_p),
        }
    }
}
