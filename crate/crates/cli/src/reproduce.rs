use std::f64::consts::LN_2;

use regretlab::coding::shannon_bounds_check;
use regretlab::divergence::kl;
use regretlab::portfolio::{
    doubling_rate, example5_market, gambling_classifier, log_optimal_portfolio, optimal_rate, portfolio_regret,
    two_asset_thresholds, PriceRelativeMatrix, DEFAULT_TOL,
};
use regretlab::regret::{interval_example, interval_point, optimal_actions, state_regret, value};
use regretlab::scoring::{value_from_rule, ScoringRegret, ScoringRule};
use regretlab::statmech::{exergy_kl_residual, SpinSystem, ThermalParams};
use regretlab::sufficiency::{kl_proportionality_fit, locality_check, sample_interior_pairs, VIOLATION_REL_TOL};
use regretlab::{State, ValueFunction};
use serde::Serialize;

use crate::args::Format;
use crate::commands::example1;
use crate::io::{to_json, CliResult, Output};

#[derive(Serialize)]
struct Row {
    name: &'static str,
    expected: f64,
    got: f64,
    tol: f64,
    pass: bool,
}

fn row(name: &'static str, expected: f64, got: f64, tol: f64) -> Row {
    Row { name, expected, got, tol, pass: (got - expected).abs() <= tol }
}

fn rows() -> CliResult<Vec<Row>> {
    let mut out = Vec::new();
    let f = ValueFunction::Finite(interval_example());
    let pt = interval_point;

    let ex1 = example1()?;
    let num = |k: &str| ex1[k].as_f64().unwrap_or(f64::NAN);
    out.push(row("interval: F(1/2)", 0.0, value(&f, &pt(0.5)?)?, 0.0));
    out.push(row("interval: D(0, a1)", 2.0, {
        let a1 = &interval_example().actions()[1].clone();
        regretlab::regret::action_regret(&f, &pt(0.0)?, a1)?.value
    }, 0.0));
    out.push(row("interval: optimal set at 2/3 is {a1}", 1.0, {
        let opt = optimal_actions(&f, &pt(2.0 / 3.0)?, 1e-12)?;
        if opt == [1] { 1.0 } else { 0.0 }
    }, 0.0));
    out.push(row("interval: D(0, 2/3)", 2.0, state_regret(&f, &pt(0.0)?, &pt(2.0 / 3.0)?)?, 1e-12));
    out.push(row("interval: D(1, 2/3)", 0.0, state_regret(&f, &pt(1.0)?, &pt(2.0 / 3.0)?)?, 1e-12));
    out.push(row("interval: weighted regret to 1/2", 0.0, num("weighted_regret_at_half"), 1e-12));
    out.push(row("interval: weighted regret to 2/3", 2.0 / 3.0, num("weighted_regret_at_mean"), 1e-12));
    out.push(row("interval: Bregman identity residual", 2.0 / 3.0, num("bregman_identity_residual"), 1e-12));

    let dim2 = locality_check(&regretlab::divergence::SquaredEuclidean::plain(), 2, 10, 0, VIOLATION_REL_TOL)?;
    out.push(row("locality on two points is vacuous", 1.0, if dim2.vacuous && dim2.passed { 1.0 } else { 0.0 }, 0.0));

    let p = [0.2, 0.3, 0.5];
    let brier_f = value(&value_from_rule(&ScoringRule::brier()), &State::classical(&p)?)?;
    let n = p.len() as f64;
    let expected = p.iter().map(|x| x * x).sum::<f64>() / n - 1.0 / n;
    out.push(row("Brier value function (1/n)ΣP² − 1/n", expected, brier_f, 1e-12));

    let safe = PriceRelativeMatrix::from_rows(&[vec![1.0, 1.0]])?;
    out.push(row("safe asset doubling rate", 0.0, doubling_rate(&safe, &[1.0], &[0.3, 0.7])?, 0.0));

    let x = example5_market();
    out.push(row("two-asset market: W(δ1, (0.8, 0.2))", 0.6 * LN_2, doubling_rate(&x, &[1.0, 0.0], &[0.8, 0.2])?, 1e-12));
    let b = log_optimal_portfolio(&x, &[0.9, 0.1], DEFAULT_TOL)?.portfolio;
    out.push(row("two-asset market: optimal at t = 0.1 is δ1", 1.0, b[0], 1e-9));
    let (xs, ys): (Vec<f64>, Vec<f64>) = x.rows().iter().map(|r| (r[0], r[1])).unzip();
    out.push(row("two-asset market: first asset optimal up to t", 0.2, two_asset_thresholds(&xs, &ys, 0)?.1, 1e-12));
    out.push(row("two-asset market: second asset optimal from t", 0.8, two_asset_thresholds(&xs, &ys, 1)?.0, 1e-12));
    out.push(row("curve: G at t = 0", LN_2, optimal_rate(&x, &[1.0, 0.0])?, 1e-12));
    out.push(row("curve: G at t = 1", LN_2, optimal_rate(&x, &[0.0, 1.0])?, 1e-12));
    out.push(row("curve: G at t = 0.2", 0.6 * LN_2, optimal_rate(&x, &[0.8, 0.2])?, 1e-9));
    out.push(row("curve: G at t = 0.8", 0.6 * LN_2, optimal_rate(&x, &[0.2, 0.8])?, 1e-9));

    let odds = PriceRelativeMatrix::gambling(&[2.0, 3.0, 6.0])?;
    let (pp, qq) = ([0.5, 0.3, 0.2], [0.2, 0.5, 0.3]);
    out.push(row("gambling assets: regret equals KL", kl(&pp, &qq)?, portfolio_regret(&odds, &pp, &qq)?, 1e-9));
    let mut rows4 = vec![vec![1.0; 3]];
    for i in 0..3 {
        let mut r = vec![0.0; 3];
        r[i] = 4.0;
        rows4.push(r);
    }
    let g = gambling_classifier(&PriceRelativeMatrix::from_rows(&rows4)?);
    let factor = g.dutch_book.map(|d| d.factor).unwrap_or(f64::NAN);
    out.push(row("super-fair odds 4: Dutch book factor", 4.0 / 3.0, factor, 1e-12));

    let sys = SpinSystem::new(1.0, vec![0.5, -1.2, 2.0])?;
    let ex = exergy_kl_residual(&sys, &ThermalParams::new(1.5, 0.4)?)?;
    out.push(row("exergy minus kT0 times KL", 0.0, ex.residual, 1e-9));

    let log = ScoringRegret::new(ScoringRule::log());
    let fit = kl_proportionality_fit(&log, &sample_interior_pairs(3, 50, 1))?;
    out.push(row("log-score regret / KL", 1.0, fit.c, 1e-8));

    let bounds = shannon_bounds_check(&[0.5, 0.25, 0.25], 2)?;
    out.push(row("optimal mean length of (1/2, 1/4, 1/4)", 1.5, bounds.optimal_length, 1e-12));
    Ok(out)
}

pub fn run(format: Format) -> CliResult<Output> {
    let rows = rows()?;
    let all = rows.iter().all(|r| r.pass);
    let text = match format {
        Format::Json => to_json(&serde_json::json!({ "passed": all, "examples": rows }))?,
        Format::Csv => {
            let mut s = String::from("name,expected,got,tol,pass");
            for r in &rows {
                s.push_str(&format!("\n\"{}\",{},{},{},{}", r.name, r.expected, r.got, r.tol, r.pass));
            }
            s
        }
    };
    Ok(Output { text, violation: !all })
}
