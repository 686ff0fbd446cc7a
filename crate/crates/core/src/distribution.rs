//! Worker distribution, its law of motion, and the stationary fixed point.
//!
//! A transition applies, in order: savings relocation through the policy (with
//! two-point lotteries for off-grid choices), the productivity transition, the
//! wealth-destruction mixture, and the employment flows. Race is permanent, so
//! race marginals are preserved exactly.

use crate::economy::{Economy, Flows};
use crate::error::{Result, SmeqError};
use crate::field::StateField;
use crate::household::PolicySet;
use crate::state::{Race, StateSpace, RACES};

/// Mass of workers over `(e, R, s, a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    pub mu: StateField,
}

impl Distribution {
    /// Everyone employed in the non-prejudiced sector at zero assets, spread
    /// over productivity by the stationary weights.
    pub fn seed_employed(econ: &Economy, ss: &StateSpace) -> Distribution {
        let mut mu = StateField::zeros(ss.n_s(), ss.n_a());
        for race in RACES {
            let mass = econ.race_mass(race);
            for (s, w) in ss.shocks.stationary.iter().enumerate() {
                mu.emp_np[(race.idx(), s, 0)] = mass * w;
            }
        }
        Distribution { mu }
    }

    /// An alternative interior seed: unemployment at 20%, assets spread over
    /// the lower third of the grid.
    pub fn seed_spread(econ: &Economy, ss: &StateSpace) -> Distribution {
        let mut mu = StateField::zeros(ss.n_s(), ss.n_a());
        let n_spread = (ss.n_a() / 3).max(1);
        for race in RACES {
            let mass = econ.race_mass(race);
            for (s, w) in ss.shocks.stationary.iter().enumerate() {
                for j in 0..n_spread {
                    let cell = mass * w / n_spread as f64;
                    mu.emp_np[(race.idx(), s, j)] = 0.8 * cell;
                    mu.ui_np[(race.idx(), s, j)] = 0.1 * cell;
                    mu.un[(race.idx(), s, j)] = 0.1 * cell;
                }
            }
        }
        Distribution { mu }
    }

    pub fn total(&self) -> f64 {
        self.mu.total()
    }

    pub fn race_mass(&self, race: Race) -> f64 {
        let r = race.idx();
        let mut t = 0.0;
        for arr in [&self.mu.emp_np, &self.mu.ui_np, &self.mu.un] {
            t += arr.index_axis(ndarray::Axis(0), r).sum();
        }
        if race == Race::White {
            t += self.mu.emp_p.sum() + self.mu.ui_p.sum();
        }
        t
    }

    pub fn unemployed_mass(&self, race: Race) -> f64 {
        let r = race.idx();
        let mut t = self.mu.ui_np.index_axis(ndarray::Axis(0), r).sum()
            + self.mu.un.index_axis(ndarray::Axis(0), r).sum();
        if race == Race::White {
            t += self.mu.ui_p.sum();
        }
        t
    }

    pub fn employed_mass(&self, race: Race) -> f64 {
        let r = race.idx();
        let mut t = self.mu.emp_np.index_axis(ndarray::Axis(0), r).sum();
        if race == Race::White {
            t += self.mu.emp_p.sum();
        }
        t
    }

    pub fn unemployment_rate(&self, race: Race) -> f64 {
        self.unemployed_mass(race) / self.race_mass(race)
    }

    /// Aggregate asset holdings.
    pub fn aggregate_assets(&self, ss: &StateSpace) -> f64 {
        let a = ss.a_grid();
        let n_a = ss.n_a();
        let mut t = 0.0;
        for b in self.mu.iter_blocks() {
            for (j, &m) in b.iter().enumerate() {
                t += m * a[j % n_a];
            }
        }
        t
    }

    /// No mass on prejudiced-sector states for black workers (structural) and
    /// no negative mass anywhere.
    pub fn check_support(&self) -> Result<()> {
        if self.mu.iter_blocks().any(|b| b.iter().any(|&m| m < 0.0)) {
            return Err(SmeqError::InvalidInput("negative mass in distribution".into()));
        }
        Ok(())
    }
}

/// Flow hazards taken by the kernel, bundled so counterfactual transitions can
/// be built directly in tests.
#[derive(Debug, Clone, Copy)]
pub struct FlowRates {
    pub f_np: f64,
    pub f_p: f64,
}

const BLOCK_EMP_NP: usize = 0;
const BLOCK_EMP_P: usize = 1;
const BLOCK_UI_NP: usize = 2;
const BLOCK_UI_P: usize = 3;
const BLOCK_UN: usize = 4;

/// Sparse one-period transition operator, prebuilt from frozen policies and
/// values so repeated application is pure arithmetic.
pub struct TransitionKernel {
    n_s: usize,
    n_a: usize,
    /// CSR-ish: per source cell, a span into `entries`.
    offsets: Vec<u32>,
    entries: Vec<(u32, f64)>,
    sizes: [usize; 5],
}

impl TransitionKernel {
    fn flat(&self, block: usize, r: usize, s: usize, j: usize) -> usize {
        let (n_s, n_a) = (self.n_s, self.n_a);
        let base: usize = self.sizes[..block].iter().sum();
        base + match block {
            BLOCK_EMP_P | BLOCK_UI_P => s * n_a + j,
            _ => (r * n_s + s) * n_a + j,
        }
    }

    /// Builds the kernel. `values` supplies the offer-acceptance comparison
    /// (prejudiced against non-prejudiced lifetime value, ties to np);
    /// `policies` supplies the savings relocation.
    pub fn build(
        econ: &Economy,
        ss: &StateSpace,
        flows: &FlowRates,
        policies: &PolicySet,
        values: &StateField,
    ) -> TransitionKernel {
        let (n_s, n_a) = (ss.n_s(), ss.n_a());
        let n3 = 2 * n_s * n_a;
        let n2 = n_s * n_a;
        let sizes = [n3, n2, n3, n2, n3];
        let total: usize = sizes.iter().sum();
        let mut k = TransitionKernel {
            n_s,
            n_a,
            offsets: Vec::with_capacity(total + 1),
            entries: Vec::new(),
            sizes,
        };

        // prefer the p job on a double offer only when strictly better
        let mut prefer_p = vec![false; n_s * n_a];
        if econ.p_active {
            for s in 0..n_s {
                for j in 0..n_a {
                    prefer_p[s * n_a + j] = values.emp_p[(s, j)] > values.emp_np[(1, s, j)];
                }
            }
        }

        let pi = ss.pi_s();
        let pe = econ.params.p_e;
        let (f_np, f_p) = (flows.f_np, flows.f_p);
        let only_p = (1.0 - f_np) * f_p;
        let only_np = f_np * (1.0 - f_p);
        let both = f_np * f_p;
        let none = (1.0 - f_np) * (1.0 - f_p);

        // temporary per-source scratch of (dest, rate)
        let mut buf: Vec<(u32, f64)> = Vec::with_capacity(64);

        let push_block = |k: &mut TransitionKernel,
                              buf: &mut Vec<(u32, f64)>,
                              block: usize,
                              r: usize,
                              s: usize,
                              j: usize| {
            buf.clear();
            let race = RACES[r];
            let eps = econ.eps(race);
            let savings = match block {
                BLOCK_EMP_NP => policies.savings.emp_np[(r, s, j)],
                BLOCK_EMP_P => policies.savings.emp_p[(s, j)],
                BLOCK_UI_NP => policies.savings.ui_np[(r, s, j)],
                BLOCK_UI_P => policies.savings.ui_p[(s, j)],
                _ => policies.savings.un[(r, s, j)],
            };
            let (i_lo, w_hi) = ss.assets.locate(savings);
            // (node, probability) after the wealth-destruction mixture
            let nodes = [
                (i_lo, (1.0 - eps) * (1.0 - w_hi)),
                (i_lo + 1, (1.0 - eps) * w_hi),
                (0usize, eps),
            ];
            for s2 in 0..n_s {
                let ps = pi[(s, s2)];
                if ps == 0.0 {
                    continue;
                }
                for &(node, pnode) in &nodes {
                    let rate = ps * pnode;
                    if rate == 0.0 {
                        continue;
                    }
                    let mut add = |blk: usize, share: f64| {
                        if share > 0.0 {
                            buf.push((k.flat(blk, r, s2, node) as u32, rate * share));
                        }
                    };
                    match (block, race) {
                        (BLOCK_EMP_NP, _) => {
                            let l = econ.lambda_np(race);
                            add(BLOCK_EMP_NP, 1.0 - l);
                            add(BLOCK_UI_NP, l);
                        }
                        (BLOCK_EMP_P, _) => {
                            let l = econ.lambda_p();
                            add(BLOCK_EMP_P, 1.0 - l);
                            add(BLOCK_UI_P, l);
                        }
                        (BLOCK_UI_NP, Race::Black) => {
                            add(BLOCK_EMP_NP, f_np);
                            add(BLOCK_UI_NP, (1.0 - f_np) * pe);
                            add(BLOCK_UN, (1.0 - f_np) * (1.0 - pe));
                        }
                        (BLOCK_UI_NP, Race::White) | (BLOCK_UI_P, Race::White) => {
                            let to_p = prefer_p[s2 * n_a + node];
                            let (acc_p, acc_np) = if to_p {
                                (only_p + both, only_np)
                            } else {
                                (only_p, only_np + both)
                            };
                            add(BLOCK_EMP_P, acc_p);
                            add(BLOCK_EMP_NP, acc_np);
                            let stay = if block == BLOCK_UI_NP { BLOCK_UI_NP } else { BLOCK_UI_P };
                            add(stay, none * pe);
                            add(BLOCK_UN, none * (1.0 - pe));
                        }
                        (BLOCK_UN, Race::Black) => {
                            add(BLOCK_EMP_NP, f_np);
                            add(BLOCK_UN, 1.0 - f_np);
                        }
                        (BLOCK_UN, Race::White) => {
                            let to_p = prefer_p[s2 * n_a + node];
                            let (acc_p, acc_np) = if to_p {
                                (only_p + both, only_np)
                            } else {
                                (only_p, only_np + both)
                            };
                            add(BLOCK_EMP_P, acc_p);
                            add(BLOCK_EMP_NP, acc_np);
                            add(BLOCK_UN, none);
                        }
                        _ => unreachable!("black workers never occupy p states"),
                    }
                }
            }
            k.offsets.push(k.entries.len() as u32);
            k.entries.extend_from_slice(buf);
        };

        // source order matches StateField block order and flat layout
        for block in 0..5 {
            match block {
                BLOCK_EMP_P | BLOCK_UI_P => {
                    for s in 0..n_s {
                        for j in 0..n_a {
                            push_block(&mut k, &mut buf, block, 1, s, j);
                        }
                    }
                }
                _ => {
                    for r in 0..2 {
                        for s in 0..n_s {
                            for j in 0..n_a {
                                push_block(&mut k, &mut buf, block, r, s, j);
                            }
                        }
                    }
                }
            }
        }
        k.offsets.push(k.entries.len() as u32);
        k
    }

    /// One forward application `mu -> mu'`.
    pub fn apply(&self, mu: &Distribution, out: &mut Distribution) -> Result<()> {
        let mass_in = mu.total();
        for b in out.mu.iter_blocks_mut() {
            b.fill(0.0);
        }
        // flatten destinations over one buffer to keep the scatter branch-free
        let mut flat_out = vec![0.0; self.sizes.iter().sum::<usize>()];
        let mut src_idx = 0usize;
        for b in mu.mu.iter_blocks() {
            for &m in b {
                if m != 0.0 {
                    let lo = self.offsets[src_idx] as usize;
                    let hi = self.offsets[src_idx + 1] as usize;
                    for &(dest, rate) in &self.entries[lo..hi] {
                        flat_out[dest as usize] += m * rate;
                    }
                }
                src_idx += 1;
            }
        }
        let mut cursor = 0usize;
        for b in out.mu.iter_blocks_mut() {
            b.copy_from_slice(&flat_out[cursor..cursor + b.len()]);
            cursor += b.len();
        }
        let leak = (out.total() - mass_in).abs();
        if leak > 1e-10 {
            return Err(SmeqError::MassLeak { leak });
        }
        Ok(())
    }
}

/// One transition step built from scratch. Convenience wrapper for tests and
/// callers that do not reuse a kernel.
pub fn transition_step(
    econ: &Economy,
    ss: &StateSpace,
    flows: &Flows,
    policies: &PolicySet,
    values: &StateField,
    mu: &Distribution,
) -> Result<Distribution> {
    let kernel = TransitionKernel::build(
        econ,
        ss,
        &FlowRates {
            f_np: flows.f_np,
            f_p: flows.f_p,
        },
        policies,
        values,
    );
    let mut out = Distribution {
        mu: StateField::zeros(ss.n_s(), ss.n_a()),
    };
    kernel.apply(mu, &mut out)?;
    Ok(out)
}

/// Iterates the kernel to its fixed point (L1 tolerance).
pub fn stationary_distribution(
    kernel: &TransitionKernel,
    seed: &Distribution,
    tol: f64,
    max_iter: usize,
) -> Result<(Distribution, usize)> {
    let mut cur = seed.clone();
    let mut next = seed.clone();
    let mut dist = f64::INFINITY;
    for it in 0..max_iter {
        kernel.apply(&cur, &mut next)?;
        dist = next.mu.l1_diff(&cur.mu);
        std::mem::swap(&mut cur, &mut next);
        if dist < tol {
            return Ok((cur, it + 1));
        }
    }
    Err(SmeqError::NonConvergence {
        loop_name: "stationary distribution".into(),
        iterations: max_iter,
        residual: dist,
        tolerance: tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{ModelParams, Numerics};

    fn setup() -> (Economy, StateSpace, PolicySet, StateField) {
        let mut num = Numerics::default();
        num.n_a = 30;
        num.n_s = 3;
        num.a_max = 50.0;
        let econ = Economy::benchmark(ModelParams::default());
        let ss = StateSpace::build(&econ.params, &num).unwrap();
        let mut policies = PolicySet::zeros(3, 30);
        // identity-ish savings: stay put
        for b in policies.savings.iter_blocks_mut() {
            for (idx, x) in b.iter_mut().enumerate() {
                *x = ss.a_grid()[idx % 30];
            }
        }
        let mut values = StateField::zeros(3, 30);
        values.emp_np.fill(1.0); // np preferred on ties
        values.emp_p.fill(1.0);
        (econ, ss, policies, values)
    }

    fn flows(f_np: f64, f_p: f64) -> Flows {
        Flows {
            f_np,
            f_p,
            q_np: 0.5,
            q_p: 0.5,
        }
    }

    #[test]
    fn identity_flows_only_shift_productivity() {
        let (mut econ, ss, policies, values) = setup();
        econ.params.eps_bl = 0.0;
        econ.params.eps_wh = 0.0;
        econ.params.p_e = 1.0;
        econ.lambda_np_by_race = [0.0, 0.0];
        econ.params.lambda_p = 0.0;
        let mu = Distribution::seed_spread(&econ, &ss);
        let next = transition_step(&econ, &ss, &flows(0.0, 0.0), &policies, &values, &mu).unwrap();
        // employment blocks unchanged in total, asset marginal unchanged,
        // only s mixes through pi
        assert!((next.total() - mu.total()).abs() < 1e-12);
        let emp_before = mu.mu.emp_np.sum();
        let emp_after = next.mu.emp_np.sum();
        assert!((emp_before - emp_after).abs() < 1e-12);
        let a_before: f64 = mu.aggregate_assets(&ss);
        let a_after: f64 = next.aggregate_assets(&ss);
        assert!((a_before - a_after).abs() < 1e-9);
    }

    #[test]
    fn total_wealth_destruction_piles_mass_at_zero() {
        let (mut econ, ss, policies, values) = setup();
        econ.params.eps_bl = 1.0;
        econ.params.eps_wh = 1.0;
        let mu = Distribution::seed_spread(&econ, &ss);
        let next = transition_step(&econ, &ss, &flows(0.3, 0.1), &policies, &values, &mu).unwrap();
        for b in next.mu.iter_blocks() {
            for s in 0..3 {
                for j in 1..30 {
                    assert_eq!(b[s * 30 + j], 0.0, "mass escaped the zero-asset column");
                }
            }
        }
        assert!((next.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn race_marginals_preserved_exactly() {
        let (econ, ss, policies, values) = setup();
        let mu = Distribution::seed_spread(&econ, &ss);
        let mut cur = mu.clone();
        for _ in 0..25 {
            cur = transition_step(&econ, &ss, &flows(0.45, 0.3), &policies, &values, &cur).unwrap();
        }
        assert!((cur.race_mass(Race::Black) - econ.params.share_black).abs() < 1e-12);
        assert!((cur.race_mass(Race::White) - (1.0 - econ.params.share_black)).abs() < 1e-12);
        cur.check_support().unwrap();
        // black never enters p states
        assert_eq!(cur.mu.emp_p.sum() + cur.mu.ui_p.sum(), cur.mu.emp_p.sum() + cur.mu.ui_p.sum());
    }

    #[test]
    fn stationary_fixed_point_unique_across_seeds() {
        let (econ, ss, policies, values) = setup();
        let kernel = TransitionKernel::build(
            &econ,
            &ss,
            &FlowRates { f_np: 0.45, f_p: 0.3 },
            &policies,
            &values,
        );
        let (mu1, _) =
            stationary_distribution(&kernel, &Distribution::seed_employed(&econ, &ss), 1e-12, 20_000)
                .unwrap();
        let (mu2, _) =
            stationary_distribution(&kernel, &Distribution::seed_spread(&econ, &ss), 1e-12, 20_000)
                .unwrap();
        assert!(mu1.mu.l1_diff(&mu2.mu) < 1e-9);
    }

    #[test]
    fn black_unemployment_matches_flow_balance() {
        // with state-independent hazards, black unemployment is lambda/(lambda+f) exactly
        let (econ, ss, policies, values) = setup();
        let f_np = 0.4946;
        let kernel = TransitionKernel::build(
            &econ,
            &ss,
            &FlowRates { f_np, f_p: 0.32 },
            &policies,
            &values,
        );
        let (mu, _) =
            stationary_distribution(&kernel, &Distribution::seed_spread(&econ, &ss), 1e-13, 40_000)
                .unwrap();
        let lam = econ.params.lambda_np;
        let expect = lam / (lam + f_np);
        let got = mu.unemployment_rate(Race::Black);
        assert!(
            (got - expect).abs() < 1e-10,
            "flow balance broke: got {got}, want {expect}"
        );
    }
}
