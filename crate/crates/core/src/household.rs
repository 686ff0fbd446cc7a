//! Worker Bellman operators: all five value-function blocks with savings choice
//! under the borrowing constraint, plus the UI benefit formula.
//!
//! The period order of events inside a continuation is: productivity transition,
//! then the extreme wealth shock, then employment flows. Offers are ranked by
//! lifetime value with ties going to the non-prejudiced firm.

use ndarray::{Array2, Array3};

use crate::economy::{Economy, Flows, Prices};
use crate::error::{Result, SmeqError};
use crate::field::{row2, row3, StateField};
use crate::params::ModelParams;
use crate::state::{AssetGrid, Race, Sector, StateSpace, RACES};

/// Benefit payout `min(h * counterfactual_wage, chi)`.
#[inline]
pub fn ui_benefit(params: &ModelParams, counterfactual_wage: f64) -> f64 {
    debug_assert!(counterfactual_wage >= 0.0);
    (params.h * counterfactual_wage).min(params.chi)
}

/// Log utility with the consumption floor that keeps it finite at corners.
#[inline]
pub fn log_utility(c: f64, floor: f64) -> f64 {
    c.max(floor).ln()
}

/// Bargained period wages.
#[derive(Debug, Clone, PartialEq)]
pub struct WageSchedule {
    pub omega_np: Array3<f64>,
    pub omega_p: Array2<f64>,
}

impl WageSchedule {
    pub fn constant(n_s: usize, n_a: usize, w: f64) -> WageSchedule {
        WageSchedule {
            omega_np: Array3::from_elem((2, n_s, n_a), w),
            omega_p: Array2::from_elem((n_s, n_a), w),
        }
    }

    pub fn sup_diff(&self, other: &WageSchedule) -> f64 {
        let mut d: f64 = 0.0;
        for (x, y) in self.omega_np.iter().zip(other.omega_np.iter()) {
            d = d.max((x - y).abs());
        }
        for (x, y) in self.omega_p.iter().zip(other.omega_p.iter()) {
            d = d.max((x - y).abs());
        }
        d
    }
}

/// Savings and implied consumption per state.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySet {
    pub savings: StateField,
    pub consumption: StateField,
}

impl PolicySet {
    pub fn zeros(n_s: usize, n_a: usize) -> PolicySet {
        PolicySet {
            savings: StateField::zeros(n_s, n_a),
            consumption: StateField::zeros(n_s, n_a),
        }
    }
}

/// Post-flow composite continuations (the hatted values of the worker block),
/// defined on next-period states.
pub fn continuation_composites(econ: &Economy, flows: &Flows, v: &StateField) -> StateField {
    let (n_s, n_a) = (v.n_s(), v.n_a());
    let mut h = StateField::zeros(n_s, n_a);
    let pe = econ.params.p_e;
    let f_np = flows.f_np;
    let f_p = flows.f_p;

    for race in RACES {
        let r = race.idx();
        let l_np = econ.lambda_np(race);
        for s in 0..n_s {
            let w_np = row3(&v.emp_np, r, s);
            let ui_np = row3(&v.ui_np, r, s);
            let un = row3(&v.un, r, s);
            let base = (r * n_s + s) * n_a;
            let h_emp = &mut h.emp_np.as_slice_mut().unwrap()[base..base + n_a];
            for j in 0..n_a {
                h_emp[j] = l_np * ui_np[j] + (1.0 - l_np) * w_np[j];
            }
            match race {
                Race::Black => {
                    let h_ui = &mut h.ui_np.as_slice_mut().unwrap()[base..base + n_a];
                    for j in 0..n_a {
                        h_ui[j] = f_np * w_np[j]
                            + (1.0 - f_np) * (pe * ui_np[j] + (1.0 - pe) * un[j]);
                    }
                    let h_un = &mut h.un.as_slice_mut().unwrap()[base..base + n_a];
                    for j in 0..n_a {
                        h_un[j] = f_np * w_np[j] + (1.0 - f_np) * un[j];
                    }
                }
                Race::White => {
                    let w_p = row2(&v.emp_p, s);
                    let ui_p = row2(&v.ui_p, s);
                    let only_p = (1.0 - f_np) * f_p;
                    let only_np = f_np * (1.0 - f_p);
                    let both = f_np * f_p;
                    let none = (1.0 - f_np) * (1.0 - f_p);
                    let h_ui = &mut h.ui_np.as_slice_mut().unwrap()[base..base + n_a];
                    for j in 0..n_a {
                        let best = if w_p[j] > w_np[j] { w_p[j] } else { w_np[j] };
                        h_ui[j] = only_p * w_p[j] + only_np * w_np[j] + both * best
                            + none * (pe * ui_np[j] + (1.0 - pe) * un[j]);
                    }
                    let sbase = s * n_a;
                    let h_uip = &mut h.ui_p.as_slice_mut().unwrap()[sbase..sbase + n_a];
                    for j in 0..n_a {
                        let best = if w_p[j] > w_np[j] { w_p[j] } else { w_np[j] };
                        h_uip[j] = only_p * w_p[j] + only_np * w_np[j] + both * best
                            + none * (pe * ui_p[j] + (1.0 - pe) * un[j]);
                    }
                    let h_un = &mut h.un.as_slice_mut().unwrap()[base..base + n_a];
                    for j in 0..n_a {
                        let best = if w_p[j] > w_np[j] { w_p[j] } else { w_np[j] };
                        h_un[j] = only_p * w_p[j] + only_np * w_np[j] + both * best + none * un[j];
                    }
                    if econ.p_active {
                        let l_p = econ.lambda_p();
                        let h_empp = &mut h.emp_p.as_slice_mut().unwrap()[sbase..sbase + n_a];
                        for j in 0..n_a {
                            h_empp[j] = l_p * ui_p[j] + (1.0 - l_p) * w_p[j];
                        }
                    }
                }
            }
        }
    }
    h
}

/// Expectation over next productivity and the wealth-destruction mixture:
/// `EV(., s, a') = sum_s' pi[s,s'] [ (1-eps_R) H(., s', a') + eps_R H(., s', 0) ]`.
pub fn expected_continuations(econ: &Economy, ss: &StateSpace, h: &StateField) -> StateField {
    let (n_s, n_a) = (h.n_s(), h.n_a());
    let pi = ss.pi_s();
    let mut ev = StateField::zeros(n_s, n_a);

    // race-indexed blocks
    for race in RACES {
        let r = race.idx();
        let eps = econ.eps(race);
        let keep = 1.0 - eps;
        for (h_arr, ev_arr) in [
            (&h.emp_np, &mut ev.emp_np),
            (&h.ui_np, &mut ev.ui_np),
            (&h.un, &mut ev.un),
        ] {
            for s in 0..n_s {
                let mut wiped = 0.0;
                let base = (r * n_s + s) * n_a;
                {
                    let out = &mut ev_arr.as_slice_mut().unwrap()[base..base + n_a];
                    out.fill(0.0);
                    for s2 in 0..n_s {
                        let p = pi[(s, s2)];
                        if p == 0.0 {
                            continue;
                        }
                        let hrow = row3(h_arr, r, s2);
                        wiped += p * hrow[0];
                        let pk = p * keep;
                        for j in 0..n_a {
                            out[j] += pk * hrow[j];
                        }
                    }
                    let add = eps * wiped;
                    for v in out.iter_mut() {
                        *v += add;
                    }
                }
            }
        }
    }
    // white-only p blocks
    if econ.p_active {
        let eps = econ.eps(Race::White);
        let keep = 1.0 - eps;
        for (h_arr, ev_arr) in [(&h.emp_p, &mut ev.emp_p), (&h.ui_p, &mut ev.ui_p)] {
            for s in 0..n_s {
                let mut wiped = 0.0;
                let base = s * n_a;
                let out = &mut ev_arr.as_slice_mut().unwrap()[base..base + n_a];
                out.fill(0.0);
                for s2 in 0..n_s {
                    let p = pi[(s, s2)];
                    if p == 0.0 {
                        continue;
                    }
                    let hrow = row2(h_arr, s2);
                    wiped += p * hrow[0];
                    let pk = p * keep;
                    for j in 0..n_a {
                        out[j] += pk * hrow[j];
                    }
                }
                let add = eps * wiped;
                for v in out.iter_mut() {
                    *v += add;
                }
            }
        }
    }
    ev
}

/// Maximizes `log(m - a') + beta * EV(a')` over `a' in [0, a_max]` with EV
/// linearly interpolated between grid nodes. Returns `(a', value)`.
///
/// The maximum is exact over the whole piecewise objective: every grid node
/// and every segment's interior first-order candidate is evaluated. Offer
/// kinks make the continuation non-concave, so refining only around the best
/// node can flip between near-tied basins and break the Bellman contraction.
#[inline]
pub(crate) fn optimize_savings(
    m: f64,
    ev_row: &[f64],
    grid: &AssetGrid,
    beta: f64,
    floor: f64,
) -> (f64, f64) {
    let a = &grid.points;
    let n = a.len();
    if m <= floor {
        // infeasible corner: consume the floor, save nothing
        return (0.0, floor.ln() + beta * ev_row[0]);
    }
    let mut best_a = 0.0;
    let mut best_v = (m - a[0]).max(floor).ln() + beta * ev_row[0];
    for l in 0..n - 1 {
        // upper node of segment l
        let c_hi = m - a[l + 1];
        if c_hi > floor {
            let v = c_hi.ln() + beta * ev_row[l + 1];
            if v > best_v {
                best_v = v;
                best_a = a[l + 1];
            }
        }
        // interior candidate where -u'(c) + beta * slope = 0
        let k = (ev_row[l + 1] - ev_row[l]) / (a[l + 1] - a[l]);
        if beta * k > 0.0 {
            let cand = m - 1.0 / (beta * k);
            if cand > a[l] && cand < a[l + 1] && cand < m - floor {
                let v = (m - cand).ln() + beta * (ev_row[l] + k * (cand - a[l]));
                if v > best_v {
                    best_v = v;
                    best_a = cand;
                }
            }
        }
        if c_hi <= floor {
            break;
        }
    }
    (best_a, best_v)
}

/// Public alias of the savings optimizer (diagnostics).
pub fn optimize_savings_pub(
    m: f64,
    ev_row: &[f64],
    grid: &crate::state::AssetGrid,
    beta: f64,
    floor: f64,
) -> (f64, f64) {
    optimize_savings(m, ev_row, grid, beta, floor)
}

/// Segment index and weight of each cell's savings choice, cached so Howard
/// evaluation passes skip the grid search.
#[derive(Debug, Clone)]
pub struct LocField {
    pub blocks: [Vec<(u32, f64)>; 5],
}

impl LocField {
    pub fn zeros(n_s: usize, n_a: usize) -> LocField {
        let n3 = 2 * n_s * n_a;
        let n2 = n_s * n_a;
        LocField {
            blocks: [
                vec![(0, 0.0); n3],
                vec![(0, 0.0); n2],
                vec![(0, 0.0); n3],
                vec![(0, 0.0); n2],
                vec![(0, 0.0); n3],
            ],
        }
    }
}

/// Mutable solver workspace for the worker problem.
#[derive(Debug, Clone)]
pub struct ValueWorkspace {
    pub values: StateField,
    pub policy: PolicySet,
    /// Cached flow utility of the current policy's consumption.
    ucons: StateField,
    locs: LocField,
    scratch: StateField,
}

impl ValueWorkspace {
    pub fn new(n_s: usize, n_a: usize) -> ValueWorkspace {
        ValueWorkspace {
            values: StateField::zeros(n_s, n_a),
            policy: PolicySet::zeros(n_s, n_a),
            ucons: StateField::zeros(n_s, n_a),
            locs: LocField::zeros(n_s, n_a),
            scratch: StateField::zeros(n_s, n_a),
        }
    }

    /// Snapshot of the current values (diagnostics).
    pub fn clone_values(&self) -> StateField {
        self.values.clone()
    }

    /// One policy-improvement sweep over every populated block. Rebuilds the
    /// continuation expectations from the current values, re-optimizes savings,
    /// refreshes the caches, and returns the sup-norm value change.
    pub fn improvement(
        &mut self,
        econ: &Economy,
        ss: &StateSpace,
        prices: &Prices,
        flows: &Flows,
        wages: &WageSchedule,
        floor: f64,
    ) -> f64 {
        let h = continuation_composites(econ, flows, &self.values);
        let ev = expected_continuations(econ, ss, &h);
        let (n_s, n_a) = (self.values.n_s(), self.values.n_a());
        let beta = econ.params.beta;
        let p = &econ.params;
        let grid = &ss.assets;
        let gross = 1.0 + prices.r;
        let net = 1.0 - prices.tau;
        let mut sup: f64 = 0.0;

        // block index order must match LocField/iter_blocks: emp_np, emp_p, ui_np, ui_p, un
        for race in RACES {
            let r = race.idx();
            for s in 0..n_s {
                let base = (r * n_s + s) * n_a;
                // employed np
                {
                    let evrow = row3(&ev.emp_np, r, s);
                    let wrow = row3(&wages.omega_np, r, s);
                    for j in 0..n_a {
                        let m = net * wrow[j] + gross * grid.points[j] + prices.d;
                        let (ap, v) = optimize_savings(m, evrow, grid, beta, floor);
                        sup = sup.max((v - self.values.emp_np.as_slice().unwrap()[base + j]).abs());
                        self.store(0, base + j, m, ap, v, grid, floor);
                    }
                }
                // unemployed eligible, prior np
                {
                    let evrow = row3(&ev.ui_np, r, s);
                    let wrow = row3(&wages.omega_np, r, s);
                    for j in 0..n_a {
                        let b = ui_benefit(p, wrow[j]);
                        let m = net * b + gross * grid.points[j] + prices.d;
                        let (ap, v) = optimize_savings(m, evrow, grid, beta, floor);
                        sup = sup.max((v - self.values.ui_np.as_slice().unwrap()[base + j]).abs());
                        self.store(2, base + j, m, ap, v, grid, floor);
                    }
                }
                // unemployed ineligible
                {
                    let evrow = row3(&ev.un, r, s);
                    for j in 0..n_a {
                        let m = gross * grid.points[j] + prices.d;
                        let (ap, v) = optimize_savings(m, evrow, grid, beta, floor);
                        sup = sup.max((v - self.values.un.as_slice().unwrap()[base + j]).abs());
                        self.store(4, base + j, m, ap, v, grid, floor);
                    }
                }
            }
        }
        if econ.p_active {
            for s in 0..n_s {
                let base = s * n_a;
                {
                    let evrow = row2(&ev.emp_p, s);
                    let wrow = row2(&wages.omega_p, s);
                    for j in 0..n_a {
                        let m = net * wrow[j] + gross * grid.points[j] + prices.d;
                        let (ap, v) = optimize_savings(m, evrow, grid, beta, floor);
                        sup = sup.max((v - self.values.emp_p.as_slice().unwrap()[base + j]).abs());
                        self.store(1, base + j, m, ap, v, grid, floor);
                    }
                }
                {
                    let evrow = row2(&ev.ui_p, s);
                    let wrow = row2(&wages.omega_p, s);
                    for j in 0..n_a {
                        let b = ui_benefit(p, wrow[j]);
                        let m = net * b + gross * grid.points[j] + prices.d;
                        let (ap, v) = optimize_savings(m, evrow, grid, beta, floor);
                        sup = sup.max((v - self.values.ui_p.as_slice().unwrap()[base + j]).abs());
                        self.store(3, base + j, m, ap, v, grid, floor);
                    }
                }
            }
        }
        sup
    }

    #[inline]
    fn store(
        &mut self,
        block: usize,
        flat: usize,
        m: f64,
        a_next: f64,
        value: f64,
        grid: &AssetGrid,
        floor: f64,
    ) {
        let c = (m - a_next).max(floor);
        let (i, w) = grid.locate(a_next);
        self.locs.blocks[block][flat] = (i as u32, w);
        let (vals, sav, cons, uc) = match block {
            0 => (
                self.values.emp_np.as_slice_mut().unwrap(),
                self.policy.savings.emp_np.as_slice_mut().unwrap(),
                self.policy.consumption.emp_np.as_slice_mut().unwrap(),
                self.ucons.emp_np.as_slice_mut().unwrap(),
            ),
            1 => (
                self.values.emp_p.as_slice_mut().unwrap(),
                self.policy.savings.emp_p.as_slice_mut().unwrap(),
                self.policy.consumption.emp_p.as_slice_mut().unwrap(),
                self.ucons.emp_p.as_slice_mut().unwrap(),
            ),
            2 => (
                self.values.ui_np.as_slice_mut().unwrap(),
                self.policy.savings.ui_np.as_slice_mut().unwrap(),
                self.policy.consumption.ui_np.as_slice_mut().unwrap(),
                self.ucons.ui_np.as_slice_mut().unwrap(),
            ),
            3 => (
                self.values.ui_p.as_slice_mut().unwrap(),
                self.policy.savings.ui_p.as_slice_mut().unwrap(),
                self.policy.consumption.ui_p.as_slice_mut().unwrap(),
                self.ucons.ui_p.as_slice_mut().unwrap(),
            ),
            _ => (
                self.values.un.as_slice_mut().unwrap(),
                self.policy.savings.un.as_slice_mut().unwrap(),
                self.policy.consumption.un.as_slice_mut().unwrap(),
                self.ucons.un.as_slice_mut().unwrap(),
            ),
        };
        vals[flat] = value;
        sav[flat] = a_next;
        cons[flat] = c;
        uc[flat] = c.ln();
    }

    /// `steps` policy-evaluation passes at the cached policy, followed by a
    /// McQueen-Porteus midpoint correction. Cheap relative to improvement
    /// sweeps because the discount factor is close to one.
    pub fn evaluations(
        &mut self,
        econ: &Economy,
        ss: &StateSpace,
        flows: &Flows,
        steps: usize,
    ) {
        let beta = econ.params.beta;
        let n_a = self.values.n_a();
        let mut lo_shift = 0.0;
        let mut hi_shift = 0.0;
        for _ in 0..steps {
            let h = continuation_composites(econ, flows, &self.values);
            let ev = expected_continuations(econ, ss, &h);
            let mut dmin = f64::INFINITY;
            let mut dmax = f64::NEG_INFINITY;
            for (block, (evb, (vb, ub))) in ev
                .iter_blocks()
                .zip(self.scratch.iter_blocks_mut().zip(self.ucons.iter_blocks()))
                .enumerate()
            {
                if !econ.p_active && (block == 1 || block == 3) {
                    continue;
                }
                let locs = &self.locs.blocks[block];
                for j in 0..vb.len() {
                    let (i, w) = locs[j];
                    let i = (j / n_a) * n_a + i as usize;
                    let cont = evb[i] + w * (evb[i + 1] - evb[i]);
                    vb[j] = ub[j] + beta * cont;
                }
            }
            for (block, (new_b, old_b)) in self
                .scratch
                .iter_blocks()
                .zip(self.values.iter_blocks_mut())
                .enumerate()
            {
                if !econ.p_active && (block == 1 || block == 3) {
                    continue;
                }
                for (n, o) in new_b.iter().zip(old_b.iter_mut()) {
                    let d = n - *o;
                    dmin = dmin.min(d);
                    dmax = dmax.max(d);
                    *o = *n;
                }
            }
            lo_shift = beta / (1.0 - beta) * dmin;
            hi_shift = beta / (1.0 - beta) * dmax;
        }
        if steps > 0 && lo_shift.is_finite() && hi_shift.is_finite() {
            let shift = 0.5 * (lo_shift + hi_shift);
            for (block, b) in self.values.iter_blocks_mut().enumerate() {
                if !econ.p_active && (block == 1 || block == 3) {
                    continue;
                }
                for v in b.iter_mut() {
                    *v += shift;
                }
            }
        }
    }
}

/// Fixed point of the worker problem at given wages and prices.
/// Returns the number of improvement rounds used.
pub fn solve_values(
    ws: &mut ValueWorkspace,
    econ: &Economy,
    ss: &StateSpace,
    prices: &Prices,
    flows: &Flows,
    wages: &WageSchedule,
    tol: f64,
    howard_steps: usize,
    max_iter: usize,
    floor: f64,
) -> Result<usize> {
    let mut last = f64::INFINITY;
    for it in 0..max_iter {
        let sup = ws.improvement(econ, ss, prices, flows, wages, floor);
        if sup < tol && last < tol {
            return Ok(it + 1);
        }
        last = sup;
        ws.evaluations(econ, ss, flows, howard_steps);
    }
    Err(SmeqError::NonConvergence {
        loop_name: "worker value iteration".into(),
        iterations: max_iter,
        residual: last,
        tolerance: tol,
    })
}

/// Solution of one Bellman application for a single `(block, race)` slice.
#[derive(Debug, Clone)]
pub struct BlockSolve {
    pub values: Array2<f64>,
    pub savings: Array2<f64>,
    pub consumption: Array2<f64>,
}

fn block_solve(
    econ: &Economy,
    ss: &StateSpace,
    prices: &Prices,
    ev_block: &Array2<f64>,
    income_row: impl Fn(usize, usize) -> f64,
    floor: f64,
) -> BlockSolve {
    let (n_s, n_a) = (ss.n_s(), ss.n_a());
    let beta = econ.params.beta;
    let grid = &ss.assets;
    let gross = 1.0 + prices.r;
    let mut out = BlockSolve {
        values: Array2::zeros((n_s, n_a)),
        savings: Array2::zeros((n_s, n_a)),
        consumption: Array2::zeros((n_s, n_a)),
    };
    for s in 0..n_s {
        let evrow = row2(ev_block, s);
        for j in 0..n_a {
            let m = income_row(s, j) + gross * grid.points[j] + prices.d;
            let (ap, v) = optimize_savings(m, evrow, grid, beta, floor);
            out.values[(s, j)] = v;
            out.savings[(s, j)] = ap;
            out.consumption[(s, j)] = (m - ap).max(floor);
        }
    }
    out
}

fn slice_r(arr: &Array3<f64>, r: usize) -> Array2<f64> {
    arr.index_axis(ndarray::Axis(0), r).to_owned()
}

/// One backward-induction application for the employed block of `sector`,
/// taking the continuation value set as given. Black workers are rejected for
/// the prejudiced sector: those matches never form.
pub fn bellman_employed(
    econ: &Economy,
    ss: &StateSpace,
    prices: &Prices,
    flows: &Flows,
    wages: &WageSchedule,
    continuation: &StateField,
    sector: Sector,
    race: Race,
    floor: f64,
) -> Result<BlockSolve> {
    if sector == Sector::P && race == Race::Black {
        return Err(SmeqError::InvalidInput(
            "prejudiced firms never employ black workers".into(),
        ));
    }
    let h = continuation_composites(econ, flows, continuation);
    let ev = expected_continuations(econ, ss, &h);
    let net = 1.0 - prices.tau;
    Ok(match sector {
        Sector::Np => {
            let evb = slice_r(&ev.emp_np, race.idx());
            let w = slice_r(&wages.omega_np, race.idx());
            block_solve(econ, ss, prices, &evb, |s, j| net * w[(s, j)], floor)
        }
        Sector::P => block_solve(
            econ,
            ss,
            prices,
            &ev.emp_p,
            |s, j| net * wages.omega_p[(s, j)],
            floor,
        ),
    })
}

/// One application for the benefit-eligible unemployed block with prior sector
/// `prior`. Benefits are indexed to the current bargained wage at the prior
/// sector, evaluated at the worker's current `(s, a)`.
pub fn bellman_unemployed_eligible(
    econ: &Economy,
    ss: &StateSpace,
    prices: &Prices,
    flows: &Flows,
    wages: &WageSchedule,
    continuation: &StateField,
    prior: Sector,
    race: Race,
    floor: f64,
) -> Result<BlockSolve> {
    if prior == Sector::P && race == Race::Black {
        return Err(SmeqError::InvalidInput(
            "no black worker can have prejudiced-sector benefits".into(),
        ));
    }
    let h = continuation_composites(econ, flows, continuation);
    let ev = expected_continuations(econ, ss, &h);
    let p = &econ.params;
    let net = 1.0 - prices.tau;
    Ok(match prior {
        Sector::Np => {
            let evb = slice_r(&ev.ui_np, race.idx());
            let w = slice_r(&wages.omega_np, race.idx());
            block_solve(
                econ,
                ss,
                prices,
                &evb,
                |s, j| net * ui_benefit(p, w[(s, j)]),
                floor,
            )
        }
        Sector::P => block_solve(
            econ,
            ss,
            prices,
            &ev.ui_p,
            |s, j| net * ui_benefit(p, wages.omega_p[(s, j)]),
            floor,
        ),
    })
}

/// One application for the ineligible unemployed block: no benefit income,
/// absorbing ineligibility until re-employment.
pub fn bellman_unemployed_ineligible(
    econ: &Economy,
    ss: &StateSpace,
    prices: &Prices,
    flows: &Flows,
    continuation: &StateField,
    race: Race,
    floor: f64,
) -> Result<BlockSolve> {
    let h = continuation_composites(econ, flows, continuation);
    let ev = expected_continuations(econ, ss, &h);
    let evb = slice_r(&ev.un, race.idx());
    Ok(block_solve(econ, ss, prices, &evb, |_, _| 0.0, floor))
}
