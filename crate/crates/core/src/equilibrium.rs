//! Stationary equilibrium: the nested clearing loops over wages/values, the
//! worker distribution, market tightness (free entry), the budget-balancing
//! tax, the dividend identity, and the capital-market interest rate.

use crate::bargain::{rebargain_all, BargainWorkspace};
use crate::distribution::{stationary_distribution, Distribution, FlowRates, TransitionKernel};
use crate::economy::{Economy, Flows, Prices};
use crate::error::{Result, SmeqError};
use crate::field::StateField;
use crate::firm::{
    capital_schedule, expected_match_value, firm_sweep, FirmValues,
};
use crate::household::{solve_values, ui_benefit, PolicySet, ValueWorkspace, WageSchedule};
use crate::matching::tightness_for_fill_prob;
use crate::params::Numerics;
use crate::root::bracket_and_solve;
use crate::state::{Race, Sector, StateSpace};

/// Aggregated objects of a solved economy at one price vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregates {
    /// Output `Y = sum z s k(s)^alpha` over employed states.
    pub output: f64,
    /// Capital demand of producing firms.
    pub capital: f64,
    /// Asset supply of workers.
    pub assets: f64,
    pub consumption: f64,
    pub wage_bill: f64,
    pub benefit_bill: f64,
    /// Flow profits gross of posting costs.
    pub flow_profit_np: f64,
    pub flow_profit_p: f64,
    pub v_np: f64,
    pub v_p: f64,
    pub vacancy_value_np: f64,
    pub vacancy_value_p: f64,
    pub dividend_implied: f64,
    pub u: f64,
    pub u_bl: f64,
    pub u_wh: f64,
}

/// Government budget residual `tau (wages + benefits) - benefits`; benefits are
/// taxed exactly as they are in the worker budget constraints.
pub fn government_budget_residual(wage_bill: f64, benefit_bill: f64, tau: f64) -> f64 {
    tau * (wage_bill + benefit_bill) - benefit_bill
}

/// Dividend identity: flow profits of producing firms net of posting costs.
pub fn dividend(flow_profit_total: f64, v_np: f64, v_p: f64, kappa_np: f64, kappa_p: f64) -> f64 {
    -kappa_p * v_p - kappa_np * v_np + flow_profit_total
}

/// A converged stationary equilibrium.
#[derive(Debug, Clone)]
pub struct SteadyState {
    pub econ: Economy,
    pub numerics: Numerics,
    pub space: StateSpace,
    pub prices: Prices,
    pub flows: Flows,
    pub values: StateField,
    pub policies: PolicySet,
    pub wages: WageSchedule,
    pub firm: FirmValues,
    pub mu: Distribution,
    pub agg: Aggregates,
}

/// Reusable solver state; warm starts carry over between price updates and
/// between nearby economies (sweeps, calibration).
pub struct SolverWorkspace {
    pub vw: ValueWorkspace,
    pub fv: FirmValues,
    pub wages: WageSchedule,
    pub bw: BargainWorkspace,
    pub mu: Distribution,
}

impl SolverWorkspace {
    pub fn fresh(econ: &Economy, ss: &StateSpace) -> SolverWorkspace {
        let (n_s, n_a) = (ss.n_s(), ss.n_a());
        SolverWorkspace {
            vw: ValueWorkspace::new(n_s, n_a),
            fv: FirmValues::zeros(ss),
            wages: WageSchedule::constant(n_s, n_a, 2.0),
            bw: BargainWorkspace::new(n_s, n_a),
            mu: Distribution::seed_spread(econ, ss),
        }
    }

    pub fn from_steady(prev: &SteadyState) -> SolverWorkspace {
        let (n_s, n_a) = (prev.space.n_s(), prev.space.n_a());
        let mut ws = SolverWorkspace {
            vw: ValueWorkspace::new(n_s, n_a),
            fv: prev.firm.clone(),
            wages: prev.wages.clone(),
            bw: BargainWorkspace::new(n_s, n_a),
            mu: prev.mu.clone(),
        };
        ws.vw.values = prev.values.clone();
        ws
    }
}

/// Joint fixed point of worker values, firm values, and bargained wages at
/// fixed prices. Wages are re-bargained inside every sweep so they co-evolve
/// with the values instead of chasing a fully converged value function; the
/// tight coupling is what keeps the wage feedback stable.
#[allow(clippy::too_many_arguments)]
pub fn joint_value_wage_solve(
    ws: &mut SolverWorkspace,
    econ: &Economy,
    ss: &StateSpace,
    num: &Numerics,
    prices: &Prices,
    z: f64,
    tol_value: f64,
    tol_wage: f64,
) -> Result<()> {
    let flows = Flows::from_prices(econ, prices)?;
    capital_schedule(ss, &econ.params, z, prices.r, &mut ws.fv)?;
    // cold values make the first bargain meaningless: warm them up first
    if !ws.vw.values.iter_blocks().any(|b| b.iter().any(|&v| v != 0.0)) {
        solve_values(
            &mut ws.vw, econ, ss, prices, &flows, &ws.wages, 1e-5, num.howard_steps,
            num.max_value_iter, num.c_floor,
        )?;
    }
    let mut damping = 0.4;
    let mut dw_prev = f64::INFINITY;
    let mut dv = f64::INFINITY;
    for pass in 0..num.max_value_iter {
        let dw = rebargain_all(
            &mut ws.bw, econ, ss, prices, &flows, &ws.vw.values, &ws.fv, &mut ws.wages,
            num.c_floor, damping, false,
        )?;
        dv = ws.vw.improvement(econ, ss, prices, &flows, &ws.wages, num.c_floor);
        ws.vw.evaluations(econ, ss, &flows, num.howard_steps);
        for _ in 0..20 {
            if firm_sweep(econ, ss, prices, &ws.wages, &ws.vw.policy, &mut ws.fv) < 1e-12 {
                break;
            }
        }
        if dw < dw_prev {
            damping = (damping * 1.2).min(0.8);
        } else {
            damping = (damping * 0.5).max(0.05);
        }
        dw_prev = dw;
        if dw < tol_wage && dv < tol_value * 10.0 && pass > 2 {
            // converged: validate surpluses strictly, then polish values at the
            // final wages to the full tolerance
            rebargain_all(
                &mut ws.bw, econ, ss, prices, &flows, &ws.vw.values, &ws.fv, &mut ws.wages,
                num.c_floor, 1.0, true,
            )?;
            solve_values(
                &mut ws.vw, econ, ss, prices, &flows, &ws.wages, tol_value,
                num.howard_steps, num.max_value_iter, num.c_floor,
            )?;
            let mut fi = 0;
            loop {
                let sup = firm_sweep(econ, ss, prices, &ws.wages, &ws.vw.policy, &mut ws.fv);
                fi += 1;
                if sup < tol_value.max(1e-10) || fi > 6000 {
                    break;
                }
            }
            return Ok(());
        }
    }
    Err(SmeqError::NonConvergence {
        loop_name: "joint wage/value fixed point".into(),
        iterations: num.max_value_iter,
        residual: dw_prev.max(dv),
        tolerance: tol_wage,
    })
}

/// Refreshes the stationary distribution in the workspace from its current
/// policies and values, warm-starting at the previous distribution.
pub fn refresh_distribution(
    ws: &mut SolverWorkspace,
    econ: &Economy,
    ss: &StateSpace,
    num: &Numerics,
    flows: &Flows,
    tol: f64,
) -> Result<usize> {
    let kernel = TransitionKernel::build(
        econ,
        ss,
        &FlowRates {
            f_np: flows.f_np,
            f_p: flows.f_p,
        },
        &ws.vw.policy,
        &ws.vw.values,
    );
    let (mu, iters) = stationary_distribution(&kernel, &ws.mu, tol, num.max_dist_iter)?;
    ws.mu = mu;
    Ok(iters)
}

pub(crate) fn compute_aggregates(
    ws: &SolverWorkspace,
    econ: &Economy,
    ss: &StateSpace,
    prices: &Prices,
    flows: &Flows,
    z: f64,
) -> Result<Aggregates> {
    let (n_s, n_a) = (ss.n_s(), ss.n_a());
    let p = &econ.params;
    let mut output = 0.0;
    let mut capital = 0.0;
    let mut wage_bill = 0.0;
    let mut benefit_bill = 0.0;
    let mut profit_np = 0.0;
    let mut profit_p = 0.0;

    let gross_y: Vec<f64> = (0..n_s)
        .map(|s| z * ss.s_grid()[s] * ws.fv.capital[s].powf(p.alpha_k))
        .collect();

    for r in 0..2 {
        for s in 0..n_s {
            for j in 0..n_a {
                let m_emp = ws.mu.mu.emp_np[(r, s, j)];
                if m_emp > 0.0 {
                    let w = ws.wages.omega_np[(r, s, j)];
                    output += m_emp * gross_y[s];
                    capital += m_emp * ws.fv.capital[s];
                    wage_bill += m_emp * w;
                    profit_np += m_emp * (ws.fv.net_output[s] - w);
                }
                let m_ui = ws.mu.mu.ui_np[(r, s, j)];
                if m_ui > 0.0 {
                    benefit_bill += m_ui * ui_benefit(p, ws.wages.omega_np[(r, s, j)]);
                }
            }
        }
    }
    if econ.p_active {
        for s in 0..n_s {
            for j in 0..n_a {
                let m_emp = ws.mu.mu.emp_p[(s, j)];
                if m_emp > 0.0 {
                    let w = ws.wages.omega_p[(s, j)];
                    output += m_emp * gross_y[s];
                    capital += m_emp * ws.fv.capital[s];
                    wage_bill += m_emp * w;
                    profit_p += m_emp * (ws.fv.net_output[s] - w);
                }
                let m_ui = ws.mu.mu.ui_p[(s, j)];
                if m_ui > 0.0 {
                    benefit_bill += m_ui * ui_benefit(p, ws.wages.omega_p[(s, j)]);
                }
            }
        }
    }

    let u_bl = ws.mu.unemployed_mass(Race::Black);
    let u_wh = ws.mu.unemployed_mass(Race::White);
    let v_np = prices.theta_np * (u_bl + u_wh);
    let v_p = if econ.p_active { prices.theta_p * u_wh } else { 0.0 };

    let ej_np = expected_match_value(
        econ, ss, flows, &ws.fv, &ws.vw.values, &ws.vw.policy, &ws.mu, Sector::Np,
    )?;
    let vacancy_value_np = -p.kappa_np + flows.q_np / (1.0 + prices.r) * ej_np;
    let vacancy_value_p = if econ.p_active {
        let ej_p = expected_match_value(
            econ, ss, flows, &ws.fv, &ws.vw.values, &ws.vw.policy, &ws.mu, Sector::P,
        )?;
        -p.kappa_p + flows.q_p / (1.0 + prices.r) * ej_p
    } else {
        0.0
    };

    Ok(Aggregates {
        output,
        capital,
        assets: ws.mu.aggregate_assets(ss),
        consumption: ws.vw.policy.consumption.iter_blocks().zip(ws.mu.mu.iter_blocks()).map(|(c, m)| c.iter().zip(m.iter()).map(|(x, y)| x * y).sum::<f64>()).sum(),
        wage_bill,
        benefit_bill,
        flow_profit_np: profit_np,
        flow_profit_p: profit_p,
        v_np,
        v_p,
        vacancy_value_np,
        vacancy_value_p,
        dividend_implied: dividend(profit_np + profit_p, v_np, v_p, p.kappa_np, p.kappa_p),
        u: u_bl + u_wh,
        u_bl,
        u_wh,
    })
}

fn implied_tightness(kappa: f64, irate: f64, ej: f64, iota: f64) -> f64 {
    if ej <= 0.0 {
        return 0.0;
    }
    let q_required = kappa * (1.0 + irate) / ej;
    match tightness_for_fill_prob(q_required, iota) {
        Some(theta) => theta,
        None => 0.0, // posting unprofitable even at instant filling
    }
}

/// Inner clearing at a fixed interest rate: iterates tightness (free entry),
/// the tax (budget balance), and the dividend (its identity) to a joint fixed
/// point. Returns the capital-market gap `(assets - capital) / capital`.
#[allow(clippy::too_many_arguments)]
fn clear_at_rate(
    ws: &mut SolverWorkspace,
    econ: &Economy,
    ss: &StateSpace,
    num: &Numerics,
    prices: &mut Prices,
    z: f64,
) -> Result<f64> {
    let p = &econ.params;
    let damp = num.price_damping;
    for pass in 0..num.max_clear_iter {
        let stage_loose = pass < 3;
        let tol_v = if stage_loose { 1e-7 } else { num.tol_value };
        let tol_w = if stage_loose { 1e-6 } else { (num.tol_value * 10.0).max(1e-9) };
        let tol_mu = if stage_loose { 1e-9 } else { num.tol_dist };
        joint_value_wage_solve(ws, econ, ss, num, prices, z, tol_v, tol_w)?;
        let flows = Flows::from_prices(econ, prices)?;
        refresh_distribution(ws, econ, ss, num, &flows, tol_mu)?;
        let agg = compute_aggregates(ws, econ, ss, prices, &flows, z)?;

        // implied updates
        let ej_np = (agg.vacancy_value_np + p.kappa_np) * (1.0 + prices.r) / flows.q_np;
        let theta_np_hat = implied_tightness(p.kappa_np, prices.r, ej_np, p.iota);
        let theta_p_hat = if econ.p_active {
            let ej_p = (agg.vacancy_value_p + p.kappa_p) * (1.0 + prices.r) / flows.q_p;
            implied_tightness(p.kappa_p, prices.r, ej_p, p.iota)
        } else {
            0.0
        };
        let tau_hat = agg.benefit_bill / (agg.wage_bill + agg.benefit_bill).max(1e-12);
        let d_hat = agg.dividend_implied;

        // relative residuals
        let res_np = agg.vacancy_value_np.abs() / p.kappa_np;
        let res_p = if econ.p_active {
            if prices.theta_p == 0.0 && agg.vacancy_value_p <= 0.0 {
                0.0 // inactive sector: free entry holds with strict inequality
            } else {
                agg.vacancy_value_p.abs() / p.kappa_p
            }
        } else {
            0.0
        };
        let res_budget = government_budget_residual(agg.wage_bill, agg.benefit_bill, prices.tau)
            .abs()
            / (prices.tau * (agg.wage_bill + agg.benefit_bill)).max(1e-9);
        let res_d = (d_hat - prices.d).abs() / d_hat.abs().max(1e-2);
        let worst = res_np.max(res_p).max(res_budget).max(res_d);

        if worst < num.tol_clear && !stage_loose {
            return Ok((agg.assets - agg.capital) / agg.capital.max(1e-12));
        }

        prices.theta_np += damp * (theta_np_hat - prices.theta_np);
        prices.theta_p += damp * (theta_p_hat - prices.theta_p);
        prices.tau += damp * (tau_hat - prices.tau);
        prices.d += damp * (d_hat - prices.d);
    }
    Err(SmeqError::NonConvergence {
        loop_name: "tightness/tax/dividend clearing".into(),
        iterations: num.max_clear_iter,
        residual: f64::NAN,
        tolerance: num.tol_clear,
    })
}

/// Solves the full stationary equilibrium. All five clearing conditions hold
/// simultaneously at the returned prices: free entry in both markets, budget
/// balance, the dividend identity, and capital-market clearing.
pub fn solve_steady_state(econ: &Economy, num: &Numerics) -> Result<SteadyState> {
    solve_steady_state_warm(econ, num, None)
}

/// `solve_steady_state` with an optional warm start from a nearby equilibrium.
pub fn solve_steady_state_warm(
    econ: &Economy,
    num: &Numerics,
    warm: Option<&SteadyState>,
) -> Result<SteadyState> {
    econ.params.validate()?;
    let ss = StateSpace::build(&econ.params, num)?;
    let mut ws = match warm {
        Some(prev) if prev.space.n_s() == num.n_s && prev.space.n_a() == num.n_a => {
            SolverWorkspace::from_steady(prev)
        }
        _ => SolverWorkspace::fresh(econ, &ss),
    };
    let mut prices = match warm {
        Some(prev) => prev.prices,
        None => Prices {
            r: 0.0131,
            tau: 0.017,
            d: 0.06,
            theta_np: 0.70,
            theta_p: if econ.p_active { 0.40 } else { 0.0 },
        },
    };
    if !econ.p_active {
        prices.theta_p = 0.0;
    }

    // the white wealth distribution has no stationary tail beyond this rate
    let r_cap = 1.0 / (econ.params.beta * (1.0 - econ.params.eps_wh)) - 1.0 - 2e-4;
    let r_floor = -econ.params.delta + 1e-3;

    let gap = |r: f64, ws: &mut SolverWorkspace, prices: &mut Prices| -> Result<f64> {
        prices.r = r;
        clear_at_rate(ws, econ, &ss, num, prices, 1.0)
    };

    let mut shared_prices = prices;
    let (r_star, _) = bracket_and_solve(
        |r| gap(r, &mut ws, &mut shared_prices),
        prices.r,
        0.0006,
        r_floor,
        r_cap.min(0.2),
        num.tol_clear,
        1e-10,
        60,
        "capital market (interest rate)",
    )?;

    // final pass at the solved rate to leave the workspace exactly consistent
    shared_prices.r = r_star;
    let cap_gap = clear_at_rate(&mut ws, econ, &ss, num, &mut shared_prices, 1.0)?;
    if cap_gap.abs() > 50.0 * num.tol_clear {
        return Err(SmeqError::NonConvergence {
            loop_name: "capital market (final pass)".into(),
            iterations: 1,
            residual: cap_gap,
            tolerance: num.tol_clear,
        });
    }
    let flows = Flows::from_prices(econ, &shared_prices)?;
    let agg = compute_aggregates(&ws, econ, &ss, &shared_prices, &flows, 1.0)?;
    Ok(SteadyState {
        econ: econ.clone(),
        numerics: num.clone(),
        space: ss,
        prices: shared_prices,
        flows,
        values: ws.vw.values,
        policies: ws.vw.policy,
        wages: ws.wages,
        firm: ws.fv,
        mu: ws.mu,
        agg,
    })
}

impl SteadyState {
    /// Mass-weighted mean bargained wage of employed workers of `race`.
    pub fn mean_wage(&self, race: Race) -> f64 {
        let r = race.idx();
        let mut w = 0.0;
        let mut m = 0.0;
        for s in 0..self.space.n_s() {
            for j in 0..self.space.n_a() {
                let mm = self.mu.mu.emp_np[(r, s, j)];
                w += mm * self.wages.omega_np[(r, s, j)];
                m += mm;
            }
        }
        if race == Race::White && self.econ.p_active {
            for s in 0..self.space.n_s() {
                for j in 0..self.space.n_a() {
                    let mm = self.mu.mu.emp_p[(s, j)];
                    w += mm * self.wages.omega_p[(s, j)];
                    m += mm;
                }
            }
        }
        w / m.max(1e-300)
    }

    /// Mass-weighted job separation hazard of employed workers of `race`.
    pub fn separation_rate(&self, race: Race) -> f64 {
        let r = race.idx();
        let emp_np: f64 = self.mu.mu.emp_np.index_axis(ndarray::Axis(0), r).sum();
        let emp_p: f64 = if race == Race::White { self.mu.mu.emp_p.sum() } else { 0.0 };
        (emp_np * self.econ.lambda_np(race) + emp_p * self.econ.lambda_p())
            / (emp_np + emp_p).max(1e-300)
    }

    /// Mass-weighted hazard of leaving unemployment for `race`.
    pub fn job_finding_rate(&self, race: Race) -> f64 {
        self.flows.job_finding(race)
    }

    pub fn mean_assets(&self, race: Race) -> f64 {
        let r = race.idx();
        let a = self.space.a_grid();
        let n_a = self.space.n_a();
        let mut t = 0.0;
        for (bi, b) in self.mu.mu.iter_blocks().enumerate() {
            let race_block = !matches!(bi, 1 | 3);
            for (idx, &m) in b.iter().enumerate() {
                let belongs = if race_block {
                    idx / (self.space.n_s() * n_a) == r
                } else {
                    race == Race::White
                };
                if belongs {
                    t += m * a[idx % n_a];
                }
            }
        }
        t / self.econ.race_mass(race)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_residual_edges() {
        // no unemployed: residual is tau * wages, zero at tau = 0
        assert_eq!(government_budget_residual(2.0, 0.0, 0.0), 0.0);
        assert!((government_budget_residual(2.0, 0.0, 0.1) - 0.2).abs() < 1e-15);
        // h = 0 means no benefits, so tau* = 0 balances
        assert_eq!(government_budget_residual(5.0, 0.0, 0.0), 0.0);
    }

    #[test]
    fn dividend_edges() {
        assert_eq!(dividend(0.0, 0.0, 0.0, 2.7, 4.3), 0.0);
        let d = dividend(0.27, 0.05, 0.02, 2.735, 4.2622);
        assert!((d - (0.27 - 0.05 * 2.735 - 0.02 * 4.2622)).abs() < 1e-15);
    }

    #[test]
    fn implied_tightness_shutdown_logic() {
        // match value too small to ever cover the posting cost
        assert_eq!(implied_tightness(4.0, 0.01, 3.0, 1.3), 0.0);
        assert_eq!(implied_tightness(4.0, 0.01, 0.0, 1.3), 0.0);
        // generous value implies an interior tightness
        let th = implied_tightness(2.0, 0.01, 8.0, 1.3);
        assert!(th > 0.0);
        let q = crate::matching::match_prob_firm(th, 1.3).unwrap();
        assert!((q * 8.0 / 1.01 - 2.0).abs() < 1e-9, "free entry inverts");
    }
}
