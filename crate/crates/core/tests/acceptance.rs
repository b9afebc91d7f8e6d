use std::f64::consts::LN_2;
use std::time::{Duration, Instant};

use rand::Rng;
use regretlab::coding::{
    block_code_lengths, entropy_base, expected_length, huffman_lengths_beta, optimal_integer_code,
    CodeLengthFunction, StringSelection,
};
use regretlab::divergence::{by_name, kl, Kl, SquaredEuclidean};
use regretlab::portfolio::{
    example5_market, log_optimal_portfolio, optimality_interval_by_bisection, portfolio_regret,
    PriceRelativeMatrix, DEFAULT_TOL,
};
use regretlab::regret::{bregman_identity_residual, interval_example, interval_point, RegretDivergence};
use regretlab::scoring::{ScoringRegret, ScoringRule};
use regretlab::state::{random_probs, random_state};
use regretlab::statmech::{entropy_identity_residual, exergy_kl_residual, SpinSystem, ThermalParams};
use regretlab::sufficiency::{
    kl_proportionality_fit, locality_check, monotonicity_check, sample_interior_pairs, ChannelSampler,
    VIOLATION_REL_TOL,
};
use regretlab::{sample_rng, AlgebraShape, Divergence, State, ValueFunction};

const SEED: u64 = 20240601;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { ok, detail: detail.into() }
}

fn report(id: u32, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let o = f();
    println!(
        "criterion {id:>2} [{}] {name}: {}",
        if o.ok { "PASS" } else { "FAIL" },
        o.detail
    );
    o.ok
}

fn pt(s: f64) -> State {
    interval_point(s).unwrap()
}

fn interval_values() -> Outcome {
    let start = Instant::now();
    let d = RegretDivergence::new(ValueFunction::Finite(interval_example()));
    let ends = [pt(0.0), pt(1.0)];
    let t = [1.0 / 3.0, 2.0 / 3.0];
    let at = |s: f64| -> f64 {
        let target = pt(s);
        ends.iter().zip(t).map(|(e, w)| w * d.eval(e, &target).unwrap()).sum()
    };
    let half = at(0.5);
    let two_thirds = at(2.0 / 3.0);
    let elapsed = start.elapsed();
    let ok = half.abs() <= 1e-12 && (two_thirds - 2.0 / 3.0).abs() <= 1e-12 && elapsed < Duration::from_millis(1);
    outcome(ok, format!("at 1/2 = {half:e}, at 2/3 = {two_thirds:.15}, {elapsed:?}"))
}

fn spin_samples() -> Vec<(SpinSystem, ThermalParams)> {
    (0..100)
        .map(|i| {
            let mut rng = sample_rng(SEED, i);
            let n = rng.random_range(1..=10);
            let mu = rng.random_range(0.1..2.0);
            let fields = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let beta = rng.random_range(0.0..3.0);
            let beta0 = rng.random_range(0.05..3.0);
            (SpinSystem::new(mu, fields).unwrap(), ThermalParams::new(beta, beta0).unwrap())
        })
        .collect()
}

fn exergy_identity() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (sys, params) in spin_samples() {
        worst = worst.max(exergy_kl_residual(&sys, &params).unwrap().relative_residual);
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-9 && elapsed < Duration::from_secs(5),
        format!("max relative residual {worst:e} over 100 systems, {elapsed:?}"),
    )
}

fn entropy_identity() -> Outcome {
    let worst = spin_samples()
        .iter()
        .map(|(sys, params)| entropy_identity_residual(sys, params.beta).unwrap())
        .fold(0.0, f64::max);
    outcome(worst <= 1e-9, format!("max residual {worst:e}"))
}

fn two_asset_market() -> Outcome {
    let x = example5_market();
    let first = optimality_interval_by_bisection(&x, 0, 1e-9).unwrap().unwrap();
    let second = optimality_interval_by_bisection(&x, 1, 1e-9).unwrap().unwrap();
    let g = |t: f64| log_optimal_portfolio(&x, &[1.0 - t, t], DEFAULT_TOL).unwrap().doubling_rate;
    let (g02, g0) = (g(0.2), g(0.0));
    let ok = (first.1 - 0.2).abs() <= 1e-6
        && (second.0 - 0.8).abs() <= 1e-6
        && (g02 - 0.6 * LN_2).abs() <= 1e-6
        && (g0 - LN_2).abs() <= 1e-12;
    outcome(
        ok,
        format!(
            "thresholds {:.9} and {:.9}, G(0.2) = {g02:.12}, G(0) - ln 2 = {:e}",
            first.1,
            second.0,
            g0 - LN_2
        ),
    )
}

fn kelly() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for k in 2..=6usize {
        let mut rng = sample_rng(SEED + k as u64, 0);
        let odds: Vec<f64> = (0..k).map(|_| rng.random_range(1.0..6.0)).collect();
        let x = PriceRelativeMatrix::gambling(&odds).unwrap();
        for i in 0..100 {
            let mut rng = sample_rng(SEED + k as u64, i + 1);
            let p = random_probs(k, &mut rng);
            let q = random_probs(k, &mut rng);
            let r = portfolio_regret(&x, &p, &q).unwrap();
            worst = worst.max((r - kl(&p, &q).unwrap()).abs());
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-6 && elapsed < Duration::from_secs(10),
        format!("max |regret - KL| {worst:e} over 500 pairs, {elapsed:?}"),
    )
}

/// Points of the probability simplex on `n` outcomes whose coordinates are
/// multiples of `1/steps`.
fn grid(n: usize, steps: usize) -> Vec<Vec<f64>> {
    fn rec(left: usize, slots: usize, steps: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if slots == 1 {
            cur.push(left);
            out.push(cur.iter().map(|&c| c as f64 / steps as f64).collect());
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            rec(left - c, slots - 1, steps, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(steps, n, steps, &mut Vec::new(), &mut out);
    out
}

fn shannon() -> Outcome {
    let mut points = 0;
    let mut bound_failures = 0;
    let mut huffman_failures = 0;
    for n in 2..=4 {
        for beta in [2, 3] {
            for p in grid(n, 20) {
                points += 1;
                let opt = optimal_integer_code(&p, beta).unwrap();
                let h = entropy_base(&p, beta);
                if !(h <= opt.mean_length + 1e-12 && opt.mean_length <= h + 1.0 + 1e-12) {
                    bound_failures += 1;
                }
                let huff = huffman_lengths_beta(&p, beta).unwrap();
                let mean = expected_length(&huff.as_real().lengths, &p).unwrap();
                if (mean - opt.mean_length).abs() > 1e-12 || huff.kraft_sum() > 1.0 + 1e-12 {
                    huffman_failures += 1;
                }
            }
        }
    }
    outcome(
        bound_failures == 0 && huffman_failures == 0,
        format!("{points} grid points, {bound_failures} bound failures, {huffman_failures} Huffman mismatches"),
    )
}

fn block_code() -> Outcome {
    let mut worst_excess = f64::NEG_INFINITY;
    let mut strings = 0;
    for n in 1..=32usize {
        let mut rng = sample_rng(SEED, 1000 + n as u64);
        let k = rng.random_range(2..=5);
        let beta = rng.random_range(2..=3u32);
        let q = random_probs(k, &mut rng);
        let lengths: Vec<f64> = q
            .iter()
            .map(|&qi| -qi.ln() / (beta as f64).ln() + rng.random_range(0.0..0.5))
            .collect();
        let l = CodeLengthFunction::new(lengths, beta).unwrap();
        assert!(l.is_admissible());
        let r = block_code_lengths(&l, n, StringSelection::Sampled { count: 200, seed: SEED + n as u64 }).unwrap();
        strings += r.strings.len();
        worst_excess = worst_excess.max(r.max_deviation - 1.0 / n as f64);
        if r.strings.iter().any(|s| s.deviation < -1e-12) {
            worst_excess = f64::INFINITY;
        }
    }
    outcome(
        worst_excess <= 1e-12,
        format!("{strings} sampled strings, max(deviation - 1/n) = {worst_excess:e}"),
    )
}

fn data_processing() -> Outcome {
    let mut kl_runs = 0;
    let mut kl_violations = 0;
    for dim in 2..=6 {
        let r = monotonicity_check(&Kl, ChannelSampler::Stochastic { dim }, 200, SEED + dim as u64, VIOLATION_REL_TOL)
            .unwrap();
        kl_runs += r.samples_run;
        kl_violations += r.violation_count;
    }
    let qre = by_name("qre").unwrap();
    let mut qre_runs = 0;
    let mut qre_violations = 0;
    for dim in [2, 3] {
        let sampler = ChannelSampler::Cptp { dim, with_transpose: false };
        let r = monotonicity_check(qre.as_ref(), sampler, 100, SEED + 10 * dim as u64, VIOLATION_REL_TOL).unwrap();
        qre_runs += r.samples_run;
        qre_violations += r.violation_count;
    }
    outcome(
        kl_runs == 1000 && qre_runs == 200 && kl_violations == 0 && qre_violations == 0,
        format!("KL {kl_violations}/{kl_runs} violations, QRE {qre_violations}/{qre_runs} violations"),
    )
}

fn characterization() -> Outcome {
    let sq = SquaredEuclidean::plain();
    let local = locality_check(&sq, 3, 200, SEED, VIOLATION_REL_TOL).unwrap();
    let mono = monotonicity_check(&sq, ChannelSampler::Stochastic { dim: 3 }, 1000, SEED, VIOLATION_REL_TOL).unwrap();
    let sq_fails = !local.passed && !local.violations.is_empty() && !mono.passed && !mono.violations.is_empty();
    let certificates_serialise = local
        .violations
        .iter()
        .chain(&mono.violations)
        .all(|v| serde_json::to_string(&v.inputs).is_ok_and(|s| s.len() > 2));

    let log = ScoringRegret::new(ScoringRule::log());
    let log_local = locality_check(&log, 3, 200, SEED, VIOLATION_REL_TOL).unwrap();
    let fit = kl_proportionality_fit(&log, &sample_interior_pairs(3, 200, SEED)).unwrap();
    let ok = sq_fails
        && certificates_serialise
        && log_local.passed
        && (fit.c - 1.0).abs() <= 1e-8
        && fit.residual <= 1e-8;
    outcome(
        ok,
        format!(
            "sqeuclid locality {} / monotone {} violations; log-score locality {}, c = {:.12}, residual {:e}",
            local.violation_count,
            mono.violation_count,
            if log_local.passed { "passes" } else { "fails" },
            fit.c,
            fit.residual
        ),
    )
}

fn bregman_dichotomy() -> Outcome {
    let quad = SquaredEuclidean::plain();
    let smooth: [&dyn Divergence; 2] = [&Kl, &quad];
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let mut rng = sample_rng(SEED, 5000 + i);
        let n = rng.random_range(2..=6);
        let shape = AlgebraShape::classical(n);
        let triple: Vec<State> = (0..3).map(|_| random_state(&shape, &mut rng)).collect();
        let t: f64 = rng.random_range(0.05..0.95);
        for d in smooth {
            let r = bregman_identity_residual(d, &triple[..2], &[t, 1.0 - t], &triple[2]).unwrap();
            worst = worst.max(r);
        }
    }
    let ex1 = RegretDivergence::new(ValueFunction::Finite(interval_example()));
    let r1 = bregman_identity_residual(&ex1, &[pt(0.0), pt(1.0)], &[1.0 / 3.0, 2.0 / 3.0], &pt(0.5)).unwrap();
    outcome(
        worst <= 1e-9 && (r1 - 2.0 / 3.0).abs() <= 1e-12,
        format!("smooth max residual {worst:e}, interval example residual {r1:.15}"),
    )
}

#[test]
fn acceptance() {
    let results = [
        report(1, "interval example values", interval_values),
        report(2, "exergy equals kT0 times KL", exergy_identity),
        report(3, "Gibbs entropy identity", entropy_identity),
        report(4, "two-asset market thresholds and curve", two_asset_market),
        report(5, "Kelly regret equals KL", kelly),
        report(6, "Shannon bounds and Huffman optimality", shannon),
        report(7, "block code deviation at most 1/n", block_code),
        report(8, "data processing for KL and quantum relative entropy", data_processing),
        report(9, "locality and monotonicity characterization", characterization),
        report(10, "Bregman identity dichotomy", bregman_dichotomy),
    ];
    let failed: Vec<usize> = results
        .iter()
        .enumerate()
        .filter(|(_, ok)| !**ok)
        .map(|(i, _)| i + 1)
        .collect();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
