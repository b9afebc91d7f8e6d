//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every function returns a flat `Vec<f64>` of fixed-width records so the
//! page can plot it without any serialisation layer. Errors come back as
//! strings.

use regretlab::divergence::kl;
use regretlab::portfolio::{g_curve, prepare_two_outcome, PriceRelativeMatrix};
use regretlab::regret::{bregman_identity_residual, interval_example, interval_point, state_regret};
use regretlab::statmech::{exergy_kl_residual, SpinSystem, ThermalParams};
use regretlab::{Divergence, ValueFunction};
use wasm_bindgen::prelude::*;

fn err(e: regretlab::Error) -> String {
    e.to_string()
}

fn two_outcome_market(returns: &[f64]) -> Result<PriceRelativeMatrix, String> {
    if returns.is_empty() || returns.len() % 2 != 0 {
        return Err("expected pairs of price relatives, one pair per asset".into());
    }
    let rows: Vec<Vec<f64>> = returns.chunks(2).map(|c| c.to_vec()).collect();
    PriceRelativeMatrix::from_rows(&rows).map_err(err)
}

/// `(t, G(1 − t, t))` pairs for a two-outcome market given as
/// `[x₁, y₁, x₂, y₂, …]`.
#[wasm_bindgen]
pub fn portfolio_curve(returns: &[f64], steps: usize) -> Result<Vec<f64>, String> {
    let x = two_outcome_market(returns)?;
    Ok(g_curve(&x, steps).map_err(err)?.into_iter().flat_map(|(t, g)| [t, g]).collect())
}

/// `(asset, t_low, t_high)` for every undominated asset.
#[wasm_bindgen]
pub fn portfolio_intervals(returns: &[f64]) -> Result<Vec<f64>, String> {
    let x = two_outcome_market(returns)?;
    let m = prepare_two_outcome(&x).map_err(err)?;
    Ok(m.intervals()
        .map_err(err)?
        .into_iter()
        .flat_map(|(a, lo, hi)| [a as f64, lo, hi])
        .collect())
}

/// `(β, exergy, kT₀·D(P_β‖P_β₀))` on `steps` points of `[0, beta_max]`.
#[wasm_bindgen]
pub fn exergy_curve(mu: f64, fields: &[f64], beta0: f64, beta_max: f64, steps: usize) -> Result<Vec<f64>, String> {
    if steps < 2 || !(beta_max > 0.0) {
        return Err("need at least two points and a positive range".into());
    }
    let sys = SpinSystem::new(mu, fields.to_vec()).map_err(err)?;
    let mut out = Vec::with_capacity(3 * steps);
    for i in 0..steps {
        let beta = beta_max * i as f64 / (steps - 1) as f64;
        let r = exergy_kl_residual(&sys, &ThermalParams::new(beta, beta0).map_err(err)?).map_err(err)?;
        out.extend([beta, r.exergy, r.kt0 * r.kl]);
    }
    Ok(out)
}

/// `(s, D_F(s, s₀), KL(s‖s₀))` for the two-action interval example, with
/// the information divergence drawn for contrast.
#[wasm_bindgen]
pub fn interval_regret_curve(s0: f64, steps: usize) -> Result<Vec<f64>, String> {
    if steps < 2 {
        return Err("need at least two points".into());
    }
    let f = ValueFunction::Finite(interval_example());
    let base = interval_point(s0).map_err(err)?;
    let q = [1.0 - s0, s0];
    let mut out = Vec::with_capacity(3 * steps);
    for i in 0..steps {
        let s = i as f64 / (steps - 1) as f64;
        let r = state_regret(&f, &interval_point(s).map_err(err)?, &base).map_err(err)?;
        out.extend([s, r, kl(&[1.0 - s, s], &q).map_err(err)?]);
    }
    Ok(out)
}

/// `[Σ t_i D(s_i, s), Σ t_i D(s_i, s̄), D(s̄, s), residual]` for two points
/// `a`, `b` of the interval with weights `1 − t` and `t`.
#[wasm_bindgen]
pub fn interval_identity(a: f64, b: f64, t: f64, s: f64) -> Result<Vec<f64>, String> {
    let d = regretlab::regret::RegretDivergence::new(ValueFunction::Finite(interval_example()));
    let pts = [interval_point(a).map_err(err)?, interval_point(b).map_err(err)?];
    let w = [1.0 - t, t];
    let target = interval_point(s).map_err(err)?;
    let bar = interval_point((1.0 - t) * a + t * b).map_err(err)?;
    let mut to_s = 0.0;
    let mut to_bar = 0.0;
    for (p, wi) in pts.iter().zip(w) {
        to_s += wi * d.eval(p, &target).map_err(err)?;
        to_bar += wi * d.eval(p, &bar).map_err(err)?;
    }
    let gap = d.eval(&bar, &target).map_err(err)?;
    let residual = bregman_identity_residual(&d, &pts, &w, &target).map_err(err)?;
    Ok(vec![to_s, to_bar, gap, residual])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    #[test]
    fn curve_endpoints_of_the_symmetric_market() {
        let c = portfolio_curve(&[2.0, 0.5, 0.5, 2.0], 101).unwrap();
        assert_eq!(c.len(), 202);
        assert!((c[1] - LN_2).abs() < 1e-12);
        assert!((c[2 * 20 + 1] - 0.6 * LN_2).abs() < 1e-9);
        assert!((c[201] - LN_2).abs() < 1e-12);
    }

    #[test]
    fn intervals_of_the_symmetric_market() {
        let v = portfolio_intervals(&[2.0, 0.5, 0.5, 2.0]).unwrap();
        assert_eq!(v.len(), 6);
        assert!((v[2] - 0.2).abs() < 1e-12);
        assert!((v[4] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn bad_market_is_reported() {
        assert!(portfolio_curve(&[1.0, 2.0, 3.0], 10).is_err());
    }

    #[test]
    fn exergy_matches_kl_and_vanishes_at_beta0() {
        let v = exergy_curve(1.0, &[0.5, -1.0, 1.5], 1.0, 2.0, 21).unwrap();
        for rec in v.chunks(3) {
            assert!((rec[1] - rec[2]).abs() <= 1e-9 * rec[1].abs().max(1.0));
        }
        // β = 1 is the eleventh point
        assert!(v[3 * 10 + 1].abs() < 1e-12);
    }

    #[test]
    fn interval_curve_is_flat_on_the_optimal_side() {
        let v = interval_regret_curve(2.0 / 3.0, 4).unwrap();
        let r: Vec<f64> = v.chunks(3).map(|c| c[1]).collect();
        assert!((r[0] - 2.0).abs() < 1e-12);
        assert_eq!(r[2], 0.0);
        assert_eq!(r[3], 0.0);
    }

    #[test]
    fn identity_fails_for_the_interval_example() {
        let v = interval_identity(0.0, 1.0, 2.0 / 3.0, 0.5).unwrap();
        assert!(v[0].abs() < 1e-12);
        assert!((v[1] - 2.0 / 3.0).abs() < 1e-12);
        assert!((v[3] - 2.0 / 3.0).abs() < 1e-12);
    }
}
