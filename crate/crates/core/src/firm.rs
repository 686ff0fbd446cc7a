//! Producing-firm values with static capital choice, and vacancy values with
//! distribution-weighted matching expectations.

use ndarray::{Array2, Array3};

use crate::distribution::Distribution;
use crate::economy::{Economy, Flows, Prices};
use crate::error::{Result, SmeqError};
use crate::field::{row2, row3, StateField};
use crate::household::{PolicySet, WageSchedule};
use crate::params::ModelParams;
use crate::state::{Race, Sector, StateSpace, RACES};

/// Static capital choice `k* = (alpha_k z s / (r + delta))^(1/(1-alpha_k))`.
pub fn optimal_capital(s: f64, z: f64, r: f64, params: &ModelParams) -> Result<f64> {
    if r + params.delta <= 0.0 {
        return Err(SmeqError::invalid_param(
            "r",
            "interest rate must exceed -delta for a finite capital choice",
        ));
    }
    if s <= 0.0 {
        return Ok(0.0);
    }
    let a = params.alpha_k;
    Ok((a * z * s / (r + params.delta)).powf(1.0 / (1.0 - a)))
}

/// Match output net of capital rental at the optimal capital choice:
/// `z s k^alpha - (r + delta) k`.
pub fn match_net_output(s: f64, z: f64, r: f64, params: &ModelParams) -> Result<f64> {
    let k = optimal_capital(s, z, r, params)?;
    Ok(z * s * k.powf(params.alpha_k) - (r + params.delta) * k)
}

/// Producing-match values and the capital schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct FirmValues {
    /// `J_np(R, s, a)`.
    pub j_np: Array3<f64>,
    /// `J_p(wh, s, a)` (white only).
    pub j_p: Array2<f64>,
    /// Optimal capital per productivity state (independent of race and assets).
    pub capital: Vec<f64>,
    /// Net output per productivity state.
    pub net_output: Vec<f64>,
}

impl FirmValues {
    pub fn zeros(ss: &StateSpace) -> FirmValues {
        FirmValues {
            j_np: Array3::zeros((2, ss.n_s(), ss.n_a())),
            j_p: Array2::zeros((ss.n_s(), ss.n_a())),
            capital: vec![0.0; ss.n_s()],
            net_output: vec![0.0; ss.n_s()],
        }
    }

    pub fn flow_profit_np(&self, wages: &WageSchedule, r: usize, s: usize, j: usize) -> f64 {
        self.net_output[s] - wages.omega_np[(r, s, j)]
    }

    pub fn flow_profit_p(&self, wages: &WageSchedule, s: usize, j: usize) -> f64 {
        self.net_output[s] - wages.omega_p[(s, j)]
    }
}

/// Refreshes the capital and net-output schedules for `(z, r)`.
pub fn capital_schedule(ss: &StateSpace, params: &ModelParams, z: f64, r: f64, out: &mut FirmValues) -> Result<()> {
    for (i, &s) in ss.s_grid().iter().enumerate() {
        out.capital[i] = optimal_capital(s, z, r, params)?;
        out.net_output[i] = match_net_output(s, z, r, params)?;
    }
    Ok(())
}

/// Expected next-period match value on the asset grid:
/// `EJ(., s, a) = sum_s' pi[s,s'] [(1-eps) J(., s', a) + eps J(., s', 0)]`.
pub(crate) fn firm_expectations(
    econ: &Economy,
    ss: &StateSpace,
    fv: &FirmValues,
) -> (Array3<f64>, Array2<f64>) {
    let (n_s, n_a) = (ss.n_s(), ss.n_a());
    let pi = ss.pi_s();
    let mut ej_np = Array3::zeros((2, n_s, n_a));
    let mut ej_p = Array2::zeros((n_s, n_a));
    for race in RACES {
        let r = race.idx();
        let eps = econ.eps(race);
        for s in 0..n_s {
            let mut wiped = 0.0;
            let base = (r * n_s + s) * n_a;
            let out = &mut ej_np.as_slice_mut().unwrap()[base..base + n_a];
            for s2 in 0..n_s {
                let p = pi[(s, s2)];
                if p == 0.0 {
                    continue;
                }
                let row = row3(&fv.j_np, r, s2);
                wiped += p * row[0];
                let pk = p * (1.0 - eps);
                for j in 0..n_a {
                    out[j] += pk * row[j];
                }
            }
            let add = eps * wiped;
            for v in out.iter_mut() {
                *v += add;
            }
        }
    }
    if econ.p_active {
        let eps = econ.eps(Race::White);
        for s in 0..n_s {
            let mut wiped = 0.0;
            let base = s * n_a;
            let out = &mut ej_p.as_slice_mut().unwrap()[base..base + n_a];
            for s2 in 0..n_s {
                let p = pi[(s, s2)];
                if p == 0.0 {
                    continue;
                }
                let row = row2(&fv.j_p, s2);
                wiped += p * row[0];
                let pk = p * (1.0 - eps);
                for j in 0..n_a {
                    out[j] += pk * row[j];
                }
            }
            let add = eps * wiped;
            for v in out.iter_mut() {
                *v += add;
            }
        }
    }
    (ej_np, ej_p)
}

/// Public alias of the expectation builder (diagnostics).
pub fn firm_expectations_pub(
    econ: &Economy,
    ss: &StateSpace,
    fv: &FirmValues,
) -> (Array3<f64>, Array2<f64>) {
    firm_expectations(econ, ss, fv)
}

/// One application of the producing-firm operator at the matched worker's
/// savings policy. Returns the sup-norm change.
pub fn firm_sweep(
    econ: &Economy,
    ss: &StateSpace,
    prices: &Prices,
    wages: &WageSchedule,
    policies: &PolicySet,
    fv: &mut FirmValues,
) -> f64 {
    let (n_s, n_a) = (ss.n_s(), ss.n_a());
    let (ej_np, ej_p) = firm_expectations(econ, ss, fv);
    let mut sup: f64 = 0.0;
    for race in RACES {
        let r = race.idx();
        let disc = (1.0 - econ.lambda_np(race)) / (1.0 + prices.r);
        for s in 0..n_s {
            let ejrow = row3(&ej_np, r, s);
            for j in 0..n_a {
                let g = policies.savings.emp_np[(r, s, j)];
                let cont = ss.assets.interp(ejrow, g);
                let v = fv.net_output[s] - wages.omega_np[(r, s, j)] + disc * cont;
                sup = sup.max((v - fv.j_np[(r, s, j)]).abs());
                fv.j_np[(r, s, j)] = v;
            }
        }
    }
    if econ.p_active {
        let disc = (1.0 - econ.lambda_p()) / (1.0 + prices.r);
        for s in 0..n_s {
            let ejrow = row2(&ej_p, s);
            for j in 0..n_a {
                let g = policies.savings.emp_p[(s, j)];
                let cont = ss.assets.interp(ejrow, g);
                let v = fv.net_output[s] - wages.omega_p[(s, j)] + disc * cont;
                sup = sup.max((v - fv.j_p[(s, j)]).abs());
                fv.j_p[(s, j)] = v;
            }
        }
    }
    sup
}

/// Fixed point of the producing-firm values for one sector's discount rate,
/// holding wages and worker savings fixed. The discount `(1-lambda)/(1+r)`
/// guarantees contraction; a failure to contract raises a divergence flag.
pub fn producing_value_iterate(
    econ: &Economy,
    ss: &StateSpace,
    prices: &Prices,
    wages: &WageSchedule,
    policies: &PolicySet,
    z: f64,
    fv: &mut FirmValues,
    tol: f64,
    max_iter: usize,
) -> Result<usize> {
    capital_schedule(ss, &econ.params, z, prices.r, fv)?;
    let mut prev = f64::INFINITY;
    for it in 0..max_iter {
        let sup = firm_sweep(econ, ss, prices, wages, policies, fv);
        if sup < tol {
            return Ok(it + 1);
        }
        if it > 8 && sup > prev * 1.000001 && sup > 1.0 {
            return Err(SmeqError::NonConvergence {
                loop_name: "producing-firm value iteration (divergence)".into(),
                iterations: it,
                residual: sup,
                tolerance: tol,
            });
        }
        prev = sup;
    }
    Err(SmeqError::NonConvergence {
        loop_name: "producing-firm value iteration".into(),
        iterations: max_iter,
        residual: prev,
        tolerance: tol,
    })
}

/// Expected accepted match value per vacancy for one sector, integrating over
/// the unemployed density with each cell's own savings relocation. Wealth
/// destruction is not applied at match formation; it enters only through the
/// producing value's own continuation.
///
/// White acceptance of an `np` offer weighs the competing `p` offer:
/// `1{W_np >= W_p} + 1{W_np < W_p} (1 - f_p)`, and symmetrically for `p`.
#[allow(clippy::too_many_arguments)]
pub fn expected_match_value(
    _econ: &Economy,
    ss: &StateSpace,
    flows: &Flows,
    fv: &FirmValues,
    worker_values: &StateField,
    policies: &PolicySet,
    mu: &Distribution,
    sector: Sector,
) -> Result<f64> {
    let (n_s, n_a) = (ss.n_s(), ss.n_a());
    let pi = ss.pi_s();
    let pool = match sector {
        Sector::Np => mu.unemployed_mass(Race::Black) + mu.unemployed_mass(Race::White),
        Sector::P => mu.unemployed_mass(Race::White),
    };
    if pool <= 0.0 {
        return Err(SmeqError::EmptyMarket {
            market: sector.label().into(),
        });
    }

    // precompute acceptance-weighted EJ rows on the grid, per (race, s)
    let mut weighted = vec![0.0; 2 * n_s * n_a];
    for race in RACES {
        let r = race.idx();
        if sector == Sector::P && race == Race::Black {
            continue;
        }
        for s2 in 0..n_s {
            let out = &mut weighted[(r * n_s + s2) * n_a..(r * n_s + s2) * n_a + n_a];
            match (sector, race) {
                (Sector::Np, Race::Black) => {
                    out.copy_from_slice(row3(&fv.j_np, r, s2));
                }
                (Sector::Np, Race::White) => {
                    let jrow = row3(&fv.j_np, r, s2);
                    let wnp = row3(&worker_values.emp_np, 1, s2);
                    let wp = row2(&worker_values.emp_p, s2);
                    for j in 0..n_a {
                        let w = if wnp[j] >= wp[j] { 1.0 } else { 1.0 - flows.f_p };
                        out[j] = w * jrow[j];
                    }
                }
                (Sector::P, Race::White) => {
                    let jrow = row2(&fv.j_p, s2);
                    let wnp = row3(&worker_values.emp_np, 1, s2);
                    let wp = row2(&worker_values.emp_p, s2);
                    for j in 0..n_a {
                        let w = if wp[j] > wnp[j] { 1.0 } else { 1.0 - flows.f_np };
                        out[j] = w * jrow[j];
                    }
                }
                _ => unreachable!(),
            }
        }
    }

    let mut acc = 0.0;
    let mut add_cells = |mass_row: &[f64], sav_row: &[f64], r: usize, s: usize| {
        for j in 0..n_a {
            let m = mass_row[j];
            if m == 0.0 {
                continue;
            }
            let g = sav_row[j];
            let (i, w) = ss.assets.locate(g);
            let mut inner = 0.0;
            for s2 in 0..n_s {
                let p = pi[(s, s2)];
                if p == 0.0 {
                    continue;
                }
                let row = &weighted[(r * n_s + s2) * n_a..(r * n_s + s2) * n_a + n_a];
                inner += p * (row[i] + w * (row[i + 1] - row[i]));
            }
            acc += m * inner;
        }
    };

    for race in RACES {
        let r = race.idx();
        if sector == Sector::P && race == Race::Black {
            continue;
        }
        for s in 0..n_s {
            add_cells(row3(&mu.mu.ui_np, r, s), row3(&policies.savings.ui_np, r, s), r, s);
            add_cells(row3(&mu.mu.un, r, s), row3(&policies.savings.un, r, s), r, s);
            if race == Race::White {
                add_cells(row2(&mu.mu.ui_p, s), row2(&policies.savings.ui_p, s), r, s);
            }
        }
    }
    Ok(acc / pool)
}

/// Value of posting a vacancy in `sector` at the current tightness:
/// `V_i = -kappa_i + q(theta_i) / (1 + r) * E[accepted match value]`.
pub fn vacancy_value(
    econ: &Economy,
    ss: &StateSpace,
    prices: &Prices,
    flows: &Flows,
    fv: &FirmValues,
    worker_values: &StateField,
    policies: &PolicySet,
    mu: &Distribution,
    sector: Sector,
) -> Result<f64> {
    let ej = expected_match_value(econ, ss, flows, fv, worker_values, policies, mu, sector)?;
    Ok(match sector {
        Sector::Np => -econ.params.kappa_np + flows.q_np / (1.0 + prices.r) * ej,
        Sector::P => -econ.params.kappa_p + flows.q_p / (1.0 + prices.r) * ej,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{ModelParams, Numerics};

    #[test]
    fn capital_foc_closed_form() {
        let p = ModelParams::default();
        let k = optimal_capital(1.0, 1.0, 0.013, &p).unwrap();
        assert!((k - 26.655).abs() < 1e-2, "k* = {k}");
        // FOC residual: alpha z s k^(alpha-1) = r + delta
        let resid = p.alpha_k * k.powf(p.alpha_k - 1.0) - 0.028;
        assert!(resid.abs() < 1e-10);
        // per-match capital/output ratio is alpha/(r+delta) exactly
        let y = k.powf(p.alpha_k);
        assert!((k / y - p.alpha_k / 0.028).abs() < 1e-9);
        assert!((p.alpha_k / 0.028 - 10.32).abs() < 5e-3);
    }

    #[test]
    fn capital_edge_cases() {
        let p = ModelParams::default();
        assert_eq!(optimal_capital(0.0, 1.0, 0.013, &p).unwrap(), 0.0);
        assert!(optimal_capital(1.0, 1.0, -0.016, &p).is_err());
        // doubling z scales k* by 2^(1/(1-alpha))
        let k1 = optimal_capital(1.0, 1.0, 0.013, &p).unwrap();
        let k2 = optimal_capital(1.0, 2.0, 0.013, &p).unwrap();
        assert!((k2 / k1 - 2f64.powf(1.0 / (1.0 - p.alpha_k))).abs() < 1e-9);
    }

    #[test]
    fn foc_residual_over_grid() {
        let p = ModelParams::default();
        let num = Numerics::default();
        let ss = StateSpace::build(&p, &num).unwrap();
        for &s in ss.s_grid() {
            let k = optimal_capital(s, 1.0, 0.013, &p).unwrap();
            let resid = p.alpha_k * s * k.powf(p.alpha_k - 1.0) - 0.028;
            assert!(resid.abs() < 1e-10, "s = {s}");
        }
    }

    fn firm_setup() -> (Economy, StateSpace, Prices, WageSchedule, PolicySet) {
        let mut num = Numerics::default();
        num.n_a = 30;
        num.n_s = 3;
        num.a_max = 50.0;
        let econ = Economy::benchmark(ModelParams::default());
        let ss = StateSpace::build(&econ.params, &num).unwrap();
        let prices = Prices {
            r: 0.013,
            tau: 0.02,
            d: 0.06,
            theta_np: 0.73,
            theta_p: 0.4,
        };
        let wages = WageSchedule::constant(3, 30, 1.8);
        let mut policies = PolicySet::zeros(3, 30);
        for b in policies.savings.iter_blocks_mut() {
            for (idx, x) in b.iter_mut().enumerate() {
                *x = ss.a_grid()[idx % 30] * 0.9;
            }
        }
        (econ, ss, prices, wages, policies)
    }

    #[test]
    fn one_shot_match_when_destruction_certain() {
        let (mut econ, ss, prices, wages, policies) = firm_setup();
        econ.lambda_np_by_race = [1.0, 1.0];
        econ.params.lambda_p = 1.0;
        let mut fv = FirmValues::zeros(&ss);
        producing_value_iterate(&econ, &ss, &prices, &wages, &policies, 1.0, &mut fv, 1e-12, 50)
            .unwrap();
        for s in 0..3 {
            for j in 0..30 {
                let flow = fv.net_output[s] - wages.omega_np[(0, s, j)];
                assert!((fv.j_np[(0, s, j)] - flow).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn contraction_rate_bounded_by_discount() {
        let (econ, ss, prices, wages, policies) = firm_setup();
        let mut fv = FirmValues::zeros(&ss);
        capital_schedule(&ss, &econ.params, 1.0, prices.r, &mut fv).unwrap();
        let mut sups = Vec::new();
        for _ in 0..30 {
            sups.push(firm_sweep(&econ, &ss, &prices, &wages, &policies, &mut fv));
        }
        let disc = (1.0 - econ.params.lambda_p) / (1.0 + prices.r);
        for w in sups[5..].windows(2) {
            assert!(w[1] <= w[0] * (disc + 1e-6), "rate {} too big", w[1] / w[0]);
        }
    }

    #[test]
    fn wealth_shock_certain_pins_continuation_at_zero_assets() {
        let (mut econ, ss, prices, wages, _policies) = firm_setup();
        econ.params.eps_bl = 1.0;
        econ.params.eps_wh = 1.0;
        let mut fv = FirmValues::zeros(&ss);
        for (idx, x) in fv.j_np.iter_mut().enumerate() {
            *x = (idx % 30) as f64;
        }
        let (ej_np, _) = firm_expectations(&econ, &ss, &fv);
        for r in 0..2 {
            for s in 0..3 {
                for j in 1..30 {
                    assert_eq!(ej_np[(r, s, j)], ej_np[(r, s, 0)]);
                }
            }
        }
        let _ = prices;
        let _ = wages;
    }

    #[test]
    fn vacancy_sign_logic_and_empty_market() {
        let (mut econ, ss, prices, wages, policies) = firm_setup();
        let flows = Flows::from_prices(&econ, &prices).unwrap();
        let mut fv = FirmValues::zeros(&ss);
        producing_value_iterate(&econ, &ss, &prices, &wages, &policies, 1.0, &mut fv, 1e-10, 2000)
            .unwrap();
        let mut values = StateField::zeros(3, 30);
        values.emp_np.fill(1.0);
        values.emp_p.fill(0.5);
        let mu = Distribution::seed_spread(&econ, &ss);
        let v = vacancy_value(
            &econ, &ss, &prices, &flows, &fv, &values, &policies, &mu, Sector::Np,
        )
        .unwrap();
        // posting cost far above match value forces a negative vacancy value
        econ.params.kappa_np = 1e9;
        let v_neg = vacancy_value(
            &econ, &ss, &prices, &flows, &fv, &values, &policies, &mu, Sector::Np,
        )
        .unwrap();
        assert!(v_neg < 0.0 && v_neg < v);

        // no unemployed mass at all
        let empty = Distribution {
            mu: StateField::zeros(3, 30),
        };
        assert!(vacancy_value(
            &econ, &ss, &prices, &flows, &fv, &values, &policies, &empty, Sector::P
        )
        .is_err());
    }

    #[test]
    fn np_acceptance_weight_collapses_without_p_offers() {
        let (econ, ss, prices, wages, policies) = firm_setup();
        let mut flows = Flows::from_prices(&econ, &prices).unwrap();
        flows.f_p = 0.0;
        let mut fv = FirmValues::zeros(&ss);
        producing_value_iterate(&econ, &ss, &prices, &wages, &policies, 1.0, &mut fv, 1e-10, 2000)
            .unwrap();
        // make every white worker strictly prefer p so the (1 - f_p) branch binds
        let mut values = StateField::zeros(3, 30);
        values.emp_np.fill(0.0);
        values.emp_p.fill(1.0);
        let mu = Distribution::seed_spread(&econ, &ss);
        let ej_pref_p = expected_match_value(
            &econ, &ss, &flows, &fv, &values, &policies, &mu, Sector::Np,
        )
        .unwrap();
        values.emp_p.fill(-1.0);
        let ej_pref_np = expected_match_value(
            &econ, &ss, &flows, &fv, &values, &policies, &mu, Sector::Np,
        )
        .unwrap();
        assert!(
            (ej_pref_p - ej_pref_np).abs() < 1e-12,
            "with f_p = 0 the preference must not matter"
        );
    }
}
