//! Per-state Nash wage bargaining between matched workers and firms.
//!
//! The bargained wage solves the first-order condition of
//! `max_w (W - U^I)^xi * J^(1-xi)` with continuation values frozen:
//! `xi (1-tau) J / c = (1-xi) (W - U^I)`, using the envelope condition
//! `d(W - U^I)/dw = (1-tau) u'(c)` and `dJ/dw = -1` per period. The left side
//! falls and the right side rises in the wage, so bisection is exact.

use crate::economy::{Economy, Flows, Prices};
use crate::error::{Result, SmeqError};
use crate::field::{row2, row3, StateField};
use crate::firm::{firm_expectations, FirmValues};
use crate::household::{continuation_composites, expected_continuations, WageSchedule};
use crate::state::{AssetGrid, Race, Sector, StateSpace, RACES};

/// Optimum of `log(m - a') + beta ev(a')` restricted to segment `l` of the grid.
#[inline]
fn seg_opt(
    m: f64,
    ev: &[f64],
    a: &[f64],
    l: usize,
    beta: f64,
    floor: f64,
) -> Option<(f64, f64)> {
    let lo = a[l];
    if lo >= m - floor {
        return None;
    }
    let hi = a[l + 1].min(m - floor);
    let k = (ev[l + 1] - ev[l]) / (a[l + 1] - a[l]);
    let eval = |x: f64| (m - x).ln() + beta * (ev[l] + k * (x - lo + (lo - a[l])));
    let cand = if beta * k <= 0.0 {
        lo
    } else {
        (m - 1.0 / (beta * k)).clamp(lo, hi)
    };
    Some((cand, eval(cand)))
}

/// Concave savings optimum by hill-climbing over grid segments from a seed.
/// Valid for the employed blocks whose continuation has no offer kinks.
#[inline]
fn optimize_savings_local(
    m: f64,
    ev: &[f64],
    grid: &AssetGrid,
    beta: f64,
    floor: f64,
    seed: usize,
) -> (f64, f64, usize) {
    let a = &grid.points;
    let n_seg = a.len() - 1;
    if m <= floor {
        return (0.0, floor.ln() + beta * ev[0], 0);
    }
    let mut cur = seed.min(n_seg - 1);
    while cur > 0 && a[cur] >= m - floor {
        cur -= 1;
    }
    let (mut best_a, mut best_v) = match seg_opt(m, ev, a, cur, beta, floor) {
        Some(x) => x,
        None => (0.0, (m - 0.0).max(floor).ln() + beta * ev[0]),
    };
    // climb up
    let mut moved = true;
    while moved {
        moved = false;
        if cur + 1 < n_seg {
            if let Some((xa, xv)) = seg_opt(m, ev, a, cur + 1, beta, floor) {
                if xv > best_v {
                    best_a = xa;
                    best_v = xv;
                    cur += 1;
                    moved = true;
                    continue;
                }
            }
        }
        if cur > 0 {
            if let Some((xa, xv)) = seg_opt(m, ev, a, cur - 1, beta, floor) {
                if xv > best_v {
                    best_a = xa;
                    best_v = xv;
                    cur -= 1;
                    moved = true;
                }
            }
        }
    }
    (best_a, best_v, cur)
}

/// Everything frozen while one state's wage is bargained.
struct WageProblem<'a> {
    ev_emp: &'a [f64],
    ej: &'a [f64],
    outside: f64,
    net_output: f64,
    disc_firm: f64,
    xi: f64,
    net_tax: f64,
    resources: f64, // (1+r) a + d
    beta: f64,
    floor: f64,
    grid: &'a AssetGrid,
}

struct WageEval {
    surplus_w: f64,
    j: f64,
    consumption: f64,
    seg: usize,
}

impl<'a> WageProblem<'a> {
    fn eval(&self, w: f64, seed: usize) -> WageEval {
        let m = self.net_tax * w + self.resources;
        let (ap, val, seg) =
            optimize_savings_local(m, self.ev_emp, self.grid, self.beta, self.floor, seed);
        let c = (m - ap).max(self.floor);
        let (i, wt) = self.grid.locate(ap);
        let cont = self.ej[i] + wt * (self.ej[i + 1] - self.ej[i]);
        WageEval {
            surplus_w: val - self.outside,
            j: self.net_output - w + self.disc_firm * cont,
            consumption: c,
            seg,
        }
    }

    /// Signed Nash FOC residual; positive when the wage is too low.
    fn foc(&self, e: &WageEval) -> f64 {
        self.xi * self.net_tax * e.j / e.consumption - (1.0 - self.xi) * e.surplus_w
    }

    /// FOC root with surplus signs at the solution. Negative surpluses can
    /// legitimately appear mid-iteration while continuations are stale; the
    /// caller decides whether that is an error.
    fn solve(&self, seed_seg: usize) -> Result<(f64, usize, bool)> {
        let mut lo = 0.0;
        let e_lo = self.eval(lo, seed_seg);
        let mut seg = e_lo.seg;
        if self.foc(&e_lo) <= 0.0 {
            // even a zero wage leaves the worker with the larger weighted
            // surplus: corner, possible only with inconsistent continuations
            return Ok((0.0, seg, e_lo.j >= -1e-7 && e_lo.surplus_w >= -1e-7));
        }
        // a wage high enough to drive J below zero
        let mut hi = (self.net_output + self.disc_firm * self.ej.iter().cloned().fold(0.0, f64::max))
            .max(1.0)
            + 1.0;
        let mut e_hi = self.eval(hi, seg);
        let mut guard = 0;
        while self.foc(&e_hi) > 0.0 {
            hi *= 2.0;
            e_hi = self.eval(hi, seg);
            guard += 1;
            if guard > 60 {
                return Err(SmeqError::NoSurplus {
                    state: "unbracketable wage".into(),
                });
            }
        }
        let mut w = 0.5 * (lo + hi);
        for _ in 0..90 {
            let e = self.eval(w, seg);
            seg = e.seg;
            let g = self.foc(&e);
            if g > 0.0 {
                lo = w;
            } else {
                hi = w;
            }
            w = 0.5 * (lo + hi);
            let scale = (self.xi * self.net_tax * e.j.abs() / e.consumption)
                .max((1.0 - self.xi) * e.surplus_w.abs())
                .max(1e-12);
            if (hi - lo) < 1e-13 * w.max(1.0) && g.abs() < 1e-9 * scale {
                break;
            }
        }
        let e = self.eval(w, seg);
        let ok = e.j >= -1e-7 * self.net_output.abs().max(1.0) && e.surplus_w >= -1e-7;
        Ok((w, e.seg, ok))
    }
}

/// Damped, capped wage move. The best response of the wage schedule to itself
/// has a steeply negative slope (the firm value embeds the discounted future
/// schedule), so undamped iteration oscillates; the cap additionally guards
/// against the wild FOC roots produced by stale continuations far from the
/// fixed point. Neither changes the fixed point itself.
#[inline]
fn damped_step(old: f64, target: f64, damping: f64) -> f64 {
    let cap = (0.5 * old.abs()).max(0.25);
    let moved = old + damping * (target - old);
    moved.clamp(old - cap, old + cap)
}

/// Segment seeds carried across re-bargains so the savings search stays local.
#[derive(Debug, Clone)]
pub struct BargainWorkspace {
    seg_np: Vec<usize>,
    seg_p: Vec<usize>,
}

impl BargainWorkspace {
    pub fn new(n_s: usize, n_a: usize) -> BargainWorkspace {
        BargainWorkspace {
            seg_np: vec![0; 2 * n_s * n_a],
            seg_p: vec![0; n_s * n_a],
        }
    }
}

/// Re-solves the bargained wage at every matched state, holding the value
/// continuations fixed. Returns the sup-norm wage change.
///
/// With `strict` set, a state whose solved wage leaves either side with a
/// negative surplus raises [`SmeqError::NoSurplus`]; such a match would
/// dissolve. Iterating callers pass `strict = false` and validate once at
/// convergence.
#[allow(clippy::too_many_arguments)]
pub fn rebargain_all(
    bw: &mut BargainWorkspace,
    econ: &Economy,
    ss: &StateSpace,
    prices: &Prices,
    flows: &Flows,
    worker_values: &StateField,
    fv: &FirmValues,
    wages: &mut WageSchedule,
    floor: f64,
    damping: f64,
    strict: bool,
) -> Result<f64> {
    let (n_s, n_a) = (ss.n_s(), ss.n_a());
    let h = continuation_composites(econ, flows, worker_values);
    let ev = expected_continuations(econ, ss, &h);
    let (ej_np, ej_p) = firm_expectations(econ, ss, fv);
    let gross = 1.0 + prices.r;
    let net_tax = 1.0 - prices.tau;
    let beta = econ.params.beta;
    let mut change: f64 = 0.0;

    for race in RACES {
        let r = race.idx();
        let disc = (1.0 - econ.lambda_np(race)) / (1.0 + prices.r);
        let xi = econ.xi(race);
        for s in 0..n_s {
            let ev_row = row3(&ev.emp_np, r, s);
            let ej_row = row3(&ej_np, r, s);
            for j in 0..n_a {
                let prob = WageProblem {
                    ev_emp: ev_row,
                    ej: ej_row,
                    outside: worker_values.ui_np[(r, s, j)],
                    net_output: fv.net_output[s],
                    disc_firm: disc,
                    xi,
                    net_tax,
                    resources: gross * ss.a_grid()[j] + prices.d,
                    beta,
                    floor,
                    grid: &ss.assets,
                };
                let flat = (r * n_s + s) * n_a + j;
                let (w, seg, ok) = prob.solve(bw.seg_np[flat])?;
                if strict && !ok {
                    return Err(SmeqError::NoSurplus {
                        state: format!("np sector, race {r}, s {s}, a {j}"),
                    });
                }
                bw.seg_np[flat] = seg;
                let old = wages.omega_np[(r, s, j)];
                change = change.max((w - old).abs());
                wages.omega_np[(r, s, j)] = damped_step(old, w, damping);
            }
        }
    }
    if econ.p_active {
        let disc = (1.0 - econ.lambda_p()) / (1.0 + prices.r);
        let xi = econ.xi(Race::White);
        for s in 0..n_s {
            let ev_row = row2(&ev.emp_p, s);
            let ej_row = row2(&ej_p, s);
            for j in 0..n_a {
                let prob = WageProblem {
                    ev_emp: ev_row,
                    ej: ej_row,
                    outside: worker_values.ui_p[(s, j)],
                    net_output: fv.net_output[s],
                    disc_firm: disc,
                    xi,
                    net_tax,
                    resources: gross * ss.a_grid()[j] + prices.d,
                    beta,
                    floor,
                    grid: &ss.assets,
                };
                let flat = s * n_a + j;
                let (w, seg, ok) = prob.solve(bw.seg_p[flat])?;
                if strict && !ok {
                    return Err(SmeqError::NoSurplus {
                        state: format!("p sector, s {s}, a {j}"),
                    });
                }
                bw.seg_p[flat] = seg;
                let old = wages.omega_p[(s, j)];
                change = change.max((w - old).abs());
                wages.omega_p[(s, j)] = damped_step(old, w, damping);
            }
        }
    }
    Ok(change)
}

/// Spec-level single-state wage solve with explicit bargaining weight.
#[allow(clippy::too_many_arguments)]
pub fn nash_wage(
    econ: &Economy,
    ss: &StateSpace,
    prices: &Prices,
    flows: &Flows,
    worker_values: &StateField,
    fv: &FirmValues,
    sector: Sector,
    race: Race,
    s: usize,
    a_idx: usize,
    xi: f64,
    floor: f64,
) -> Result<f64> {
    if sector == Sector::P && race == Race::Black {
        return Err(SmeqError::InvalidInput(
            "no wage is bargained for black workers at prejudiced firms".into(),
        ));
    }
    if !(0.0..=1.0).contains(&xi) {
        return Err(SmeqError::invalid_param("xi", "must lie in [0,1]"));
    }
    let h = continuation_composites(econ, flows, worker_values);
    let ev = expected_continuations(econ, ss, &h);
    let (ej_np, ej_p) = firm_expectations(econ, ss, fv);
    let (ev_row, ej_row, outside, disc) = match sector {
        Sector::Np => (
            row3(&ev.emp_np, race.idx(), s),
            row3(&ej_np, race.idx(), s),
            worker_values.ui_np[(race.idx(), s, a_idx)],
            (1.0 - econ.lambda_np(race)) / (1.0 + prices.r),
        ),
        Sector::P => (
            row2(&ev.emp_p, s),
            row2(&ej_p, s),
            worker_values.ui_p[(s, a_idx)],
            (1.0 - econ.lambda_p()) / (1.0 + prices.r),
        ),
    };
    let prob = WageProblem {
        ev_emp: ev_row,
        ej: ej_row,
        outside,
        net_output: fv.net_output[s],
        disc_firm: disc,
        xi,
        net_tax: 1.0 - prices.tau,
        resources: (1.0 + prices.r) * ss.a_grid()[a_idx] + prices.d,
        beta: econ.params.beta,
        floor,
        grid: &ss.assets,
    };
    let (w, _, ok) = prob.solve(0)?;
    if !ok {
        return Err(SmeqError::NoSurplus {
            state: format!("{} sector, race {:?}, s {s}, a {a_idx}", sector.label(), race),
        });
    }
    Ok(w)
}

/// Relative Nash FOC residual at a given wage, for diagnostics and tests.
#[allow(clippy::too_many_arguments)]
pub fn nash_foc_residual(
    econ: &Economy,
    ss: &StateSpace,
    prices: &Prices,
    flows: &Flows,
    worker_values: &StateField,
    fv: &FirmValues,
    wages: &WageSchedule,
    sector: Sector,
    race: Race,
    s: usize,
    a_idx: usize,
    floor: f64,
) -> Result<f64> {
    let h = continuation_composites(econ, flows, worker_values);
    let ev = expected_continuations(econ, ss, &h);
    let (ej_np, ej_p) = firm_expectations(econ, ss, fv);
    let (ev_row, ej_row, outside, disc, xi, w) = match sector {
        Sector::Np => (
            row3(&ev.emp_np, race.idx(), s),
            row3(&ej_np, race.idx(), s),
            worker_values.ui_np[(race.idx(), s, a_idx)],
            (1.0 - econ.lambda_np(race)) / (1.0 + prices.r),
            econ.xi(race),
            wages.omega_np[(race.idx(), s, a_idx)],
        ),
        Sector::P => (
            row2(&ev.emp_p, s),
            row2(&ej_p, s),
            worker_values.ui_p[(s, a_idx)],
            (1.0 - econ.lambda_p()) / (1.0 + prices.r),
            econ.xi(Race::White),
            wages.omega_p[(s, a_idx)],
        ),
    };
    let prob = WageProblem {
        ev_emp: ev_row,
        ej: ej_row,
        outside,
        net_output: fv.net_output[s],
        disc_firm: disc,
        xi,
        net_tax: 1.0 - prices.tau,
        resources: (1.0 + prices.r) * ss.a_grid()[a_idx] + prices.d,
        beta: econ.params.beta,
        floor,
        grid: &ss.assets,
    };
    let e = prob.eval(w, 0);
    let scale = (prob.xi * prob.net_tax * e.j.abs() / e.consumption)
        .max((1.0 - prob.xi) * e.surplus_w.abs())
        .max(1e-12);
    Ok(prob.foc(&e).abs() / scale)
}

/// An `Array2` view test helper: max absolute difference.
#[cfg(test)]
fn max_abs_diff(a: &ndarray::Array2<f64>, b: &ndarray::Array2<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::economy::Economy;
    use crate::firm::{producing_value_iterate, FirmValues};
    use crate::household::{solve_values, ValueWorkspace};
    use crate::params::{ModelParams, Numerics};

    struct Setup {
        econ: Economy,
        ss: StateSpace,
        prices: Prices,
        flows: Flows,
        ws: ValueWorkspace,
        fv: FirmValues,
        wages: WageSchedule,
    }

    fn solve_joint(econ: Economy, n_s: usize, n_a: usize) -> Setup {
        let mut num = Numerics::default();
        num.n_a = n_a;
        num.n_s = n_s;
        num.a_max = 80.0;
        let ss = StateSpace::build(&econ.params, &num).unwrap();
        let prices = Prices {
            r: 0.013,
            tau: 0.017,
            d: 0.06,
            theta_np: 0.73,
            theta_p: 0.40,
        };
        let flows = Flows::from_prices(&econ, &prices).unwrap();
        let mut wages = WageSchedule::constant(n_s, n_a, 2.0);
        let mut ws = ValueWorkspace::new(n_s, n_a);
        let mut fv = FirmValues::zeros(&ss);
        let mut bw = BargainWorkspace::new(n_s, n_a);
        for _ in 0..200 {
            solve_values(
                &mut ws, &econ, &ss, &prices, &flows, &wages, 1e-8, 120, 400, num.c_floor,
            )
            .unwrap();
            producing_value_iterate(
                &econ, &ss, &prices, &wages, &ws.policy, 1.0, &mut fv, 1e-9, 4000,
            )
            .unwrap();
            let dw = rebargain_all(
                &mut bw, &econ, &ss, &prices, &flows, &ws.values, &fv, &mut wages, num.c_floor,
                0.3, false,
            )
            .unwrap();
            if dw < 1e-8 {
                rebargain_all(
                    &mut bw, &econ, &ss, &prices, &flows, &ws.values, &fv, &mut wages,
                    num.c_floor, 1.0, true,
                )
                .unwrap();
                break;
            }
        }
        Setup {
            econ,
            ss,
            prices,
            flows,
            ws,
            fv,
            wages,
        }
    }

    #[test]
    fn converged_wages_satisfy_foc_and_surplus_signs() {
        let s = solve_joint(Economy::benchmark(ModelParams::default()), 3, 40);
        for race in RACES {
            let r = race.idx();
            for si in 0..3 {
                for j in [0usize, 13, 27, 39] {
                    let resid = nash_foc_residual(
                        &s.econ, &s.ss, &s.prices, &s.flows, &s.ws.values, &s.fv, &s.wages,
                        Sector::Np, race, si, j, 1e-8,
                    )
                    .unwrap();
                    assert!(resid < 1e-6, "foc residual {resid} at ({r},{si},{j})");
                    assert!(s.wages.omega_np[(r, si, j)] > 0.0);
                    assert!(s.fv.j_np[(r, si, j)] > -1e-7);
                    assert!(
                        s.ws.values.emp_np[(r, si, j)] >= s.ws.values.ui_np[(r, si, j)] - 1e-7
                    );
                }
            }
        }
    }

    #[test]
    fn wages_increase_in_productivity() {
        let s = solve_joint(Economy::benchmark(ModelParams::default()), 3, 40);
        for r in 0..2 {
            for si in 1..3 {
                for j in 0..40 {
                    assert!(
                        s.wages.omega_np[(r, si, j)] >= s.wages.omega_np[(r, si - 1, j)] - 1e-9,
                        "wage not monotone in s at ({r},{si},{j})"
                    );
                }
            }
        }
    }

    #[test]
    fn higher_bargaining_weight_raises_wages() {
        let base = solve_joint(Economy::benchmark(ModelParams::default()), 2, 25);
        let mut params = ModelParams::default();
        params.xi_bl += 0.08;
        params.xi_wh += 0.08;
        let strong = solve_joint(Economy::benchmark(params), 2, 25);
        let mut higher = 0usize;
        let mut total = 0usize;
        for r in 0..2 {
            for si in 0..2 {
                for j in 0..25 {
                    total += 1;
                    if strong.wages.omega_np[(r, si, j)] > base.wages.omega_np[(r, si, j)] {
                        higher += 1;
                    }
                }
            }
        }
        assert_eq!(higher, total, "raising xi must raise the bargained wage pointwise");
        assert!(max_abs_diff(&strong.wages.omega_p, &base.wages.omega_p) > 0.0);
    }

    #[test]
    fn xi_limits_split_the_surplus() {
        let s = solve_joint(Economy::benchmark(ModelParams::default()), 2, 25);
        // xi -> 1: firm surplus at the bargained wage goes to zero
        let w_all = nash_wage(
            &s.econ, &s.ss, &s.prices, &s.flows, &s.ws.values, &s.fv, Sector::Np,
            Race::White, 1, 10, 1.0 - 1e-10, 1e-8,
        )
        .unwrap();
        let j_at = |w: f64| {
            // recompute J at wage w with frozen continuations
            let h = continuation_composites(&s.econ, &s.flows, &s.ws.values);
            let ev = expected_continuations(&s.econ, &s.ss, &h);
            let (ej_np, _) = firm_expectations(&s.econ, &s.ss, &s.fv);
            let m = (1.0 - s.prices.tau) * w + (1.0 + s.prices.r) * s.ss.a_grid()[10] + s.prices.d;
            let (ap, _, _) = optimize_savings_local(
                m, row3(&ev.emp_np, 1, 1), &s.ss.assets, s.econ.params.beta, 1e-8, 0,
            );
            let cont = s.ss.assets.interp(row3(&ej_np, 1, 1), ap);
            s.fv.net_output[1] - w
                + (1.0 - s.econ.lambda_np(Race::White)) / (1.0 + s.prices.r) * cont
        };
        assert!(j_at(w_all).abs() < 1e-5, "J should vanish as xi -> 1");

        // xi -> 0: wage collapses toward the worker's reservation level
        let w_none = nash_wage(
            &s.econ, &s.ss, &s.prices, &s.flows, &s.ws.values, &s.fv, Sector::Np,
            Race::White, 1, 10, 1e-10, 1e-8,
        )
        .unwrap();
        let w_mid = nash_wage(
            &s.econ, &s.ss, &s.prices, &s.flows, &s.ws.values, &s.fv, Sector::Np,
            Race::White, 1, 10, 0.5, 1e-8,
        )
        .unwrap();
        assert!(w_none < w_mid && w_mid < w_all);
    }

    #[test]
    fn black_p_wage_rejected() {
        let s = solve_joint(Economy::benchmark(ModelParams::default()), 2, 25);
        assert!(nash_wage(
            &s.econ, &s.ss, &s.prices, &s.flows, &s.ws.values, &s.fv, Sector::P,
            Race::Black, 0, 0, 0.2, 1e-8,
        )
        .is_err());
    }

    #[test]
    fn local_optimizer_agrees_with_global_scan() {
        let grid = AssetGrid::new(80, 40.0, 2.0).unwrap();
        // concave ev
        let ev: Vec<f64> = grid.points.iter().map(|a| (0.5 + a).ln()).collect();
        for &m in &[0.3, 1.0, 3.0, 12.0, 60.0] {
            for seed in [0usize, 10, 40, 78] {
                let (a1, v1, _) = optimize_savings_local(m, &ev, &grid, 0.994, 1e-8, seed);
                let (a2, v2) = crate::household::optimize_savings(m, &ev, &grid, 0.994, 1e-8);
                assert!(
                    (v1 - v2).abs() < 1e-12,
                    "m={m} seed={seed}: local {v1} ({a1}) vs global {v2} ({a2})"
                );
            }
        }
    }
}
