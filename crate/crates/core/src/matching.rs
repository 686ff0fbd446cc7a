//! Matching technology, market tightness, and matching probabilities.
//!
//! `M(u, v) = u v / (u^iota + v^iota)^(1/iota)`, a constant-returns form whose
//! matching probabilities stay inside [0, 1] for any tightness.

use crate::error::{Result, SmeqError};

/// Probability that an unemployed searcher matches this period:
/// `f(theta) = (1 + theta^(-iota))^(-1/iota)`.
#[inline]
pub fn match_prob_worker(theta: f64, iota: f64) -> Result<f64> {
    check(theta, iota)?;
    if theta == 0.0 {
        return Ok(0.0);
    }
    Ok((1.0 + theta.powf(-iota)).powf(-1.0 / iota))
}

/// Probability that a posted vacancy is filled this period:
/// `q(theta) = (1 + theta^iota)^(-1/iota)`.
#[inline]
pub fn match_prob_firm(theta: f64, iota: f64) -> Result<f64> {
    check(theta, iota)?;
    Ok((1.0 + theta.powf(iota)).powf(-1.0 / iota))
}

/// Tightness at which a vacancy fills with probability `q`: the inverse of
/// `match_prob_firm` on (0, 1]. Returns `None` when `q` is not attainable.
#[inline]
pub fn tightness_for_fill_prob(q: f64, iota: f64) -> Option<f64> {
    if !(0.0 < q && q <= 1.0) || iota <= 0.0 {
        return None;
    }
    if q == 1.0 {
        return Some(0.0);
    }
    Some((q.powf(-iota) - 1.0).powf(1.0 / iota))
}

fn check(theta: f64, iota: f64) -> Result<()> {
    if theta < 0.0 || !theta.is_finite() && theta != f64::INFINITY {
        return Err(SmeqError::invalid_param("theta", "tightness must be >= 0"));
    }
    if iota <= 0.0 {
        return Err(SmeqError::invalid_param("iota", "elasticity must be positive"));
    }
    Ok(())
}

/// Unemployment and vacancy masses for both markets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketAggregates {
    pub u_bl: f64,
    pub u_wh: f64,
    pub v_np: f64,
    pub v_p: f64,
}

impl MarketAggregates {
    pub fn new(u_bl: f64, u_wh: f64, v_np: f64, v_p: f64) -> Result<MarketAggregates> {
        for (name, v) in [("u_bl", u_bl), ("u_wh", u_wh), ("v_np", v_np), ("v_p", v_p)] {
            if v < 0.0 || !v.is_finite() {
                return Err(SmeqError::invalid_param(name, "mass must be non-negative"));
            }
        }
        Ok(MarketAggregates { u_bl, u_wh, v_np, v_p })
    }

    /// Total unemployed searchers.
    pub fn u(&self) -> f64 {
        self.u_bl + self.u_wh
    }

    /// Non-prejudiced market tightness `v_np / (u_bl + u_wh)`.
    pub fn theta_np(&self) -> Result<f64> {
        let u = self.u();
        if u == 0.0 {
            return Err(SmeqError::EmptyMarket { market: "np".into() });
        }
        Ok(self.v_np / u)
    }

    /// Prejudiced market tightness `v_p / u_wh`; prejudiced firms search only
    /// among unemployed white workers (benefit-eligible or not).
    pub fn theta_p(&self) -> Result<f64> {
        if self.u_wh == 0.0 {
            return Err(SmeqError::EmptyMarket { market: "p".into() });
        }
        Ok(self.v_p / self.u_wh)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const IOTA: f64 = 1.3012;

    #[test]
    fn worker_prob_closed_form_at_unit_tightness() {
        // f(1) = 2^(-1/iota)
        let f = match_prob_worker(1.0, IOTA).unwrap();
        let expect = 2f64.powf(-1.0 / IOTA);
        assert!((f - expect).abs() < 1e-15);
        assert!((f - 0.5868).abs() < 5e-4);
    }

    #[test]
    fn firm_equals_worker_at_unit_tightness() {
        let f = match_prob_worker(1.0, IOTA).unwrap();
        let q = match_prob_firm(1.0, IOTA).unwrap();
        assert!((f - q).abs() < 1e-15);
    }

    #[test]
    fn boundary_values() {
        assert_eq!(match_prob_worker(0.0, IOTA).unwrap(), 0.0);
        assert_eq!(match_prob_firm(0.0, IOTA).unwrap(), 1.0);
        assert!(match_prob_worker(1e9, IOTA).unwrap() > 0.999);
        assert!(match_prob_worker(-0.1, IOTA).is_err());
        assert!(match_prob_worker(1.0, 0.0).is_err());
    }

    #[test]
    fn fill_prob_inverts() {
        for &theta in &[1e-3, 0.2, 0.4, 0.73, 1.0, 3.0, 50.0] {
            let q = match_prob_firm(theta, IOTA).unwrap();
            let back = tightness_for_fill_prob(q, IOTA).unwrap();
            assert!((back - theta).abs() / theta < 1e-9, "theta = {theta}");
        }
        // near q = 1 the inversion loses precision to cancellation; stay loose
        let q = match_prob_firm(1e-6, IOTA).unwrap();
        let back = tightness_for_fill_prob(q, IOTA).unwrap();
        assert!((back - 1e-6).abs() / 1e-6 < 1e-5);
        assert_eq!(tightness_for_fill_prob(1.0, IOTA), Some(0.0));
        assert_eq!(tightness_for_fill_prob(0.0, IOTA), None);
        assert_eq!(tightness_for_fill_prob(1.2, IOTA), None);
    }

    #[test]
    fn tightness_requires_searchers() {
        let m = MarketAggregates::new(0.0, 0.0, 0.1, 0.1).unwrap();
        assert!(m.theta_np().is_err());
        assert!(m.theta_p().is_err());
        let m = MarketAggregates::new(0.02, 0.0, 0.1, 0.1).unwrap();
        assert!(m.theta_np().is_ok());
        assert!(m.theta_p().is_err());
        assert!(MarketAggregates::new(-0.1, 0.0, 0.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn probabilities_bounded_and_identity_holds(theta in 1e-9f64..1e6, iota in 0.3f64..4.0) {
            let f = match_prob_worker(theta, iota).unwrap();
            let q = match_prob_firm(theta, iota).unwrap();
            // f < 1 holds mathematically; f64 saturates to 1 at extreme tightness
            prop_assert!((0.0..=1.0).contains(&f));
            prop_assert!((0.0..=1.0).contains(&q));
            if theta < 1e3 {
                prop_assert!(f < 1.0);
            }
            // constant returns: f(theta) = theta * q(theta)
            prop_assert!((f - theta * q).abs() <= 1e-11 * f.max(theta * q).max(1e-300));
        }

        #[test]
        fn monotonicity(theta in 1e-6f64..1e4, bump in 1e-6f64..10.0) {
            let f0 = match_prob_worker(theta, 1.3012).unwrap();
            let f1 = match_prob_worker(theta + bump, 1.3012).unwrap();
            let q0 = match_prob_firm(theta, 1.3012).unwrap();
            let q1 = match_prob_firm(theta + bump, 1.3012).unwrap();
            prop_assert!(f1 >= f0);
            prop_assert!(q1 <= q0);
        }
    }
}
