use smeq_core::bargain::{rebargain_all, BargainWorkspace};
use smeq_core::economy::{Economy, Flows, Prices};
use smeq_core::field::{row2, row3};
use smeq_core::firm::{capital_schedule, firm_expectations_pub, firm_sweep, FirmValues};
use smeq_core::household::{continuation_composites, expected_continuations, optimize_savings_pub, solve_values, ValueWorkspace, WageSchedule};
use smeq_core::params::{ModelParams, Numerics};
use smeq_core::state::StateSpace;

fn main() {
    let mut num = Numerics::default();
    num.n_a = 40;
    num.n_s = 3;
    num.a_max = 80.0;
    let econ = Economy::benchmark(ModelParams::default());
    let ss = StateSpace::build(&econ.params, &num).unwrap();
    let prices = Prices { r: 0.013, tau: 0.017, d: 0.06, theta_np: 0.73, theta_p: 0.40 };
    let flows = Flows::from_prices(&econ, &prices).unwrap();
    let mut ws = ValueWorkspace::new(3, 40);
    let mut fv = FirmValues::zeros(&ss);
    let mut wages = WageSchedule::constant(3, 40, 2.0);
    let mut bw = BargainWorkspace::new(3, 40);
    capital_schedule(&ss, &econ.params, 1.0, prices.r, &mut fv).unwrap();
    solve_values(&mut ws, &econ, &ss, &prices, &flows, &wages, 1e-5, 120, 600, num.c_floor).unwrap();
    for _ in 0..200 {
        let _ = rebargain_all(&mut bw, &econ, &ss, &prices, &flows, &ws.values, &fv, &mut wages, num.c_floor, 0.05, false).unwrap();
        let _ = ws.improvement(&econ, &ss, &prices, &flows, &wages, num.c_floor);
        ws.evaluations(&econ, &ss, &flows, 120);
        for _ in 0..20 { if firm_sweep(&econ, &ss, &prices, &wages, &ws.policy, &mut fv) < 1e-12 { break; } }
    }
    // plot G(omega) for the cycling state (white, s=2, a=6)
    let (r, s, j) = (1usize, 2usize, 6usize);
    let h = continuation_composites(&econ, &flows, &ws.values);
    let ev = expected_continuations(&econ, &ss, &h);
    let (ej_np, _ej_p) = firm_expectations_pub(&econ, &ss, &fv);
    let ev_row = row3(&ev.emp_np, r, s);
    let ej_row = row3(&ej_np, r, s);
    let outside = ws.values.ui_np[(r, s, j)];
    let disc = (1.0 - econ.lambda_np(smeq_core::state::Race::White)) / (1.0 + prices.r);
    let xi = econ.params.xi_wh;
    let net_tax = 1.0 - prices.tau;
    let resources = (1.0 + prices.r) * ss.a_grid()[j] + prices.d;
    println!("current wage = {:.6}", wages.omega_np[(r, s, j)]);
    let mut prev_g = f64::NAN;
    for k in 0..80 {
        let w = 2.8 + 1.2 * k as f64 / 79.0;
        let m = net_tax * w + resources;
        let (ap, val) = optimize_savings_pub(m, ev_row, &ss.assets, econ.params.beta, 1e-8);
        let c = m - ap;
        let (i, wt) = ss.assets.locate(ap);
        let cont = ej_row[i] + wt * (ej_row[i + 1] - ej_row[i]);
        let jv = fv.net_output[s] - w + disc * cont;
        let g = xi * net_tax * jv / c - (1.0 - xi) * (val - outside);
        let jump = if prev_g.is_finite() && (g - prev_g).abs() > 0.05 { " <-- JUMP" } else { "" };
        println!("w={w:.4} a'={ap:8.4} c={c:.4} J={jv:8.4} S={:8.4} G={g:9.5}{jump}", val - outside);
        prev_g = g;
    }
}
