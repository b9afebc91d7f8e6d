use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use regretlab::coding::{
    block_code_lengths, canonical_codewords, entropy_base, expected_length, huffman_lengths_beta,
    integer_value_function, kraft_sum, shannon_bounds_check, shannon_lengths, CodeLengthFunction, StringSelection,
};
use regretlab::divergence::{by_name, is_translation, itakura_saito, separable_bregman, ScalarConvex};
use regretlab::portfolio::{
    doubling_rate, dominates, example5_market, g_curve, gambling_classifier, kkt_residual, log_optimal_portfolio,
    monotone_regret_check, optimality_interval_by_bisection, portfolio_regret_detailed, prepare_two_outcome,
    PriceRelativeMatrix,
};
use regretlab::regret::{
    action_regret, bregman, bregman_identity_residual, interval_example, interval_point, optimal_actions,
    reconstruct_check, state_regret, value, NegEntropy, RegretDivergence, SquaredNorm,
};
use regretlab::scoring::{
    expected_payoff, local_rule_regret_is_local, properness_check, rule_from_bregman, scoring_regret, LocalRule,
    ScoringRule,
};
use regretlab::state::{entropy, inner, mix, orthogonal, random_probs, random_state, spectrum, validate_state, ToleranceSet};
use regretlab::statmech::{
    exergy_kl_residual, gibbs_distribution, gibbs_entropy, hamiltonian, internal_energy, ln_partition_function,
    SpinSystem, ThermalParams, BOLTZMANN_SI,
};
use regretlab::sufficiency::{
    build_locality_pair, kl_proportionality_fit, locality_check, monotonicity_check, sample_interior_pairs,
    sufficiency_check, AffineChannel, ChannelPair, ChannelSampler, CheckReport,
};
use regretlab::{sample_rng, Divergence, State, ValueFunction};
use serde_json::json;

use crate::args::*;
use crate::io::*;
use crate::reproduce;

pub fn run(cli: Cli) -> CliResult<Output> {
    let seed = cli.seed;
    match cli.command {
        Command::Regret(c) => regret(c, seed),
        Command::Div(c) => div(c),
        Command::Check(c) => check(c, seed),
        Command::Code(c) => code(c, seed),
        Command::Score(c) => score(c, seed),
        Command::Thermo(c) => thermo(c),
        Command::Folio(c) => folio(c, seed),
        Command::State(c) => state(c),
        Command::Reproduce { format } => reproduce::run(format),
    }
}

fn generator(g: Generator) -> ValueFunction {
    match g {
        Generator::NegEntropy => ValueFunction::smooth(NegEntropy),
        Generator::Sqnorm => ValueFunction::smooth(SquaredNorm::plain()),
        Generator::Brier => ValueFunction::smooth(SquaredNorm::brier()),
    }
}

fn value_function(src: &ValueSource) -> CliResult<ValueFunction> {
    match (&src.actions, src.generator) {
        (Some(path), _) => Ok(ValueFunction::Finite(read_actions(path)?)),
        (None, Some(g)) => Ok(generator(g)),
        (None, None) => Err(usage("one of --actions or --generator is required")),
    }
}

fn regret(cmd: RegretCmd, seed: u64) -> CliResult<Output> {
    match cmd {
        RegretCmd::Eval { source, state, action, tol } => {
            let f = value_function(&source)?;
            let s = read_state(&state)?;
            let mut out = json!({ "value": value(&f, &s)? });
            if let ValueFunction::Finite(actions) = &f {
                out["optimal_actions"] = json!(optimal_actions(&f, &s, tol)?);
                out["regrets"] = json!(actions
                    .actions()
                    .iter()
                    .map(|a| Ok(action_regret(&f, &s, a)?.value))
                    .collect::<CliResult<Vec<_>>>()?);
            }
            if let Some(path) = action {
                out["action_regret"] = json!(action_regret(&f, &s, &read_observable(&path)?)?);
            }
            Output::json(&out)
        }
        RegretCmd::State { source, s1, s0 } => {
            let f = value_function(&source)?;
            let (s1, s0) = (read_state(&s1)?, read_state(&s0)?);
            let r = state_regret(&f, &s1, &s0)?;
            let mut out = json!({ "regret": r, "infinite": r.is_infinite() });
            if let ValueFunction::Smooth(g) = &f {
                out["bregman"] = json!(bregman(g.as_ref(), &s1, &s0)?);
            }
            Output::json(&out)
        }
        RegretCmd::BregmanResidual { div, actions, generator: g, states, weights, s } => {
            let d: Arc<dyn Divergence> = match (div, actions, g) {
                (Some(name), _, _) => by_name(&name)?,
                (None, Some(path), _) => Arc::new(RegretDivergence::new(ValueFunction::Finite(read_actions(&path)?))),
                (None, None, Some(g)) => Arc::new(RegretDivergence::new(generator(g))),
                _ => return Err(usage("one of --div, --actions or --generator is required")),
            };
            let states = read_states(&states)?;
            let r = bregman_identity_residual(d.as_ref(), &states, &weights, &read_state(&s)?)?;
            Output::json(&json!({ "divergence": d.name(), "residual": r }))
        }
        RegretCmd::Reconstruct { source, div, s0, samples } => {
            let f = value_function(&source)?;
            let d: Arc<dyn Divergence> = match div {
                Some(name) => by_name(&name)?,
                None => Arc::new(RegretDivergence::new(f.clone())),
            };
            let s0 = read_state(&s0)?;
            let shape = s0.shape().clone();
            let draws: Vec<State> = (0..samples)
                .map(|i| random_state(&shape, &mut sample_rng(seed, i as u64)))
                .collect();
            let r = reconstruct_check(&f, d.as_ref(), &s0, &draws)?;
            Output::json(&json!({ "divergence": d.name(), "samples": samples, "residual": r }))
        }
        RegretCmd::Example1 => Output::json(&example1()?),
    }
}

pub fn example1() -> CliResult<serde_json::Value> {
    let f = ValueFunction::Finite(interval_example());
    let d = RegretDivergence::new(f.clone());
    let ends = [interval_point(0.0)?, interval_point(1.0)?];
    let t = [1.0 / 3.0, 2.0 / 3.0];
    let weighted = |s: f64| -> CliResult<f64> {
        let target = interval_point(s)?;
        let mut acc = 0.0;
        for (e, w) in ends.iter().zip(t) {
            acc += w * d.eval(e, &target)?;
        }
        Ok(acc)
    };
    Ok(json!({
        "points": [0.0, 1.0],
        "weights": t,
        "mean": 2.0 / 3.0,
        "weighted_regret_at_half": weighted(0.5)?,
        "weighted_regret_at_mean": weighted(2.0 / 3.0)?,
        "regret_mean_to_half": d.eval(&interval_point(2.0 / 3.0)?, &interval_point(0.5)?)?,
        "bregman_identity_residual": bregman_identity_residual(&d, &ends, &t, &interval_point(0.5)?)?,
    }))
}

/// Positive vectors for Itakura-Saito, which need not be normalised.
fn positive_vector(path: &Path) -> CliResult<Vec<f64>> {
    read_vector(path, &["probs", "values", "spectrum"])
}

fn div(cmd: DivCmd) -> CliResult<Output> {
    match cmd {
        DivCmd::Compute { name, a, b } => {
            let v = if name == "is" {
                let (x, y) = (positive_vector(&a)?, positive_vector(&b)?);
                if x.len() != y.len() {
                    return Err(usage("inputs have different lengths"));
                }
                let mut acc = 0.0;
                for (l, m) in x.iter().zip(&y) {
                    acc += itakura_saito(*l, *m)?;
                }
                acc
            } else {
                by_name(&name)?.eval(&read_state(&a)?, &read_state(&b)?)?
            };
            Output::json(&json!({ "name": name, "value": finite(v), "infinite": v.is_infinite() }))
        }
        DivCmd::Separable { phi, scale, a, b } => {
            let base = match phi {
                Phi::Square => ScalarConvex::square(),
                Phi::XLnX => ScalarConvex::x_ln_x(),
                Phi::XLnXMinusX => ScalarConvex::x_ln_x_minus_x(),
                Phi::NegLn => ScalarConvex::neg_ln(),
            };
            let phi = base.scaled(scale);
            let v = separable_bregman(&phi, &positive_vector(&a)?, &positive_vector(&b)?)?;
            Output::json(&json!({ "phi": phi.name(), "value": finite(v), "infinite": v.is_infinite() }))
        }
        DivCmd::Translate { lambda, mu, t } => Output::json(&is_translation(lambda, mu, t)?),
    }
}

fn check_report(r: CheckReport) -> CliResult<Output> {
    let passed = r.passed;
    Output::check(&r, passed)
}

fn check(cmd: CheckCmd, seed: u64) -> CliResult<Output> {
    match cmd {
        CheckCmd::Monotone { args, sampler } => {
            let d = by_name(&args.div)?;
            let dim = args.dim;
            if dim < 2 {
                return Err(usage("--dim must be at least 2"));
            }
            let sampler = match sampler {
                Sampler::Stochastic => ChannelSampler::Stochastic { dim },
                Sampler::DoublyStochastic => ChannelSampler::DoublyStochastic { dim },
                Sampler::Cptp => ChannelSampler::Cptp { dim, with_transpose: false },
                Sampler::CptpTranspose => ChannelSampler::Cptp { dim, with_transpose: true },
            };
            check_report(monotonicity_check(d.as_ref(), sampler, args.samples, seed, args.tol)?)
        }
        CheckCmd::Sufficient { args, pair } => {
            let d = by_name(&args.div)?;
            check_report(sufficiency_suite(d.as_ref(), &args, pair, seed)?)
        }
        CheckCmd::Local { args } => {
            let d = by_name(&args.div)?;
            check_report(locality_check(d.as_ref(), args.dim, args.samples, seed, args.tol)?)
        }
        CheckCmd::Fit { args } => {
            let d = by_name(&args.div)?;
            let fit = kl_proportionality_fit(d.as_ref(), &sample_interior_pairs(args.dim, args.samples, seed))?;
            Output::json(&json!({
                "divergence": d.name(),
                "c": fit.c,
                "residual": fit.residual,
                "samples": fit.samples,
                "proportional": fit.residual <= 1e-8,
            }))
        }
    }
}

/// Random classical pairs with a map that has an exact recovery on them.
fn sufficiency_suite(d: &dyn Divergence, args: &CheckArgs, kind: PairKind, seed: u64) -> CliResult<CheckReport> {
    let dim = args.dim;
    if dim < 2 || (kind == PairKind::Locality && dim < 3) {
        return Err(usage("--dim too small for this pair kind"));
    }
    let mut total = CheckReport::new("sufficient", d.name());
    for i in 0..args.samples {
        let mut rng = sample_rng(seed, i as u64);
        let (s1, s2, pair) = match kind {
            PairKind::Split => {
                let s1 = State::classical(&random_probs(dim, &mut rng))?;
                let s2 = State::classical(&random_probs(dim, &mut rng))?;
                let mut fwd = DMatrix::zeros(2 * dim, dim);
                let mut back = DMatrix::zeros(dim, 2 * dim);
                for j in 0..dim {
                    let r: f64 = rng.random_range(0.05..0.95);
                    fwd[(2 * j, j)] = r;
                    fwd[(2 * j + 1, j)] = 1.0 - r;
                    back[(j, 2 * j)] = 1.0;
                    back[(j, 2 * j + 1)] = 1.0;
                }
                let pair = ChannelPair {
                    forward: AffineChannel::Stochastic(fwd),
                    recovery: AffineChannel::Stochastic(back),
                };
                (s1, s2, pair)
            }
            PairKind::Locality => {
                let k = rng.random_range(1..dim);
                let on = |lo: usize, hi: usize, rng: &mut rand_chacha::ChaCha8Rng| -> CliResult<State> {
                    let w = random_probs(hi - lo, rng);
                    let mut p = vec![0.0; dim];
                    p[lo..hi].copy_from_slice(&w);
                    Ok(State::classical(&p)?)
                };
                let s1 = on(0, k, &mut rng)?;
                let sigma = on(k, dim, &mut rng)?;
                let rho = on(k, dim, &mut rng)?;
                let t: f64 = rng.random_range(0.05..0.95);
                let s2 = mix(&[s1.clone(), sigma.clone()], &[t, 1.0 - t])?;
                let pair = build_locality_pair(&s1, &sigma, &rho)?;
                (s1, s2, pair)
            }
        };
        let r = sufficiency_check(d, &s1, &s2, &pair, args.tol)?;
        total.samples_run += r.samples_run;
        total.violation_count += r.violation_count;
        total.max_gap = total.max_gap.max(r.max_gap);
        if total.violations.len() < 16 {
            total.violations.extend(r.violations);
        }
    }
    Ok(total.finish())
}

fn code(cmd: CodeCmd, seed: u64) -> CliResult<Output> {
    match cmd {
        CodeCmd::Huffman { probs, beta } => {
            let p = read_probs(&probs)?;
            let code = huffman_lengths_beta(&p, beta)?;
            let words: Vec<String> = canonical_codewords(&code)?
                .iter()
                .map(|w| w.iter().map(|d| char::from_digit(*d, 36).unwrap_or('?')).collect())
                .collect();
            Output::json(&json!({
                "beta": beta,
                "lengths": code.lengths,
                "expected_length": expected_length(&code.as_real().lengths, &p)?,
                "entropy": entropy_base(&p, beta),
                "kraft_sum": code.kraft_sum(),
                "codewords": words,
            }))
        }
        CodeCmd::Shannon { probs, beta } => {
            let p = read_probs(&probs)?;
            let l = shannon_lengths(&p, beta)?;
            Output::json(&json!({
                "beta": beta,
                "lengths": l.lengths,
                "kraft_sum": l.kraft_sum(),
                "expected_length": expected_length(&l.lengths, &p)?,
                "entropy": entropy_base(&p, beta),
            }))
        }
        CodeCmd::Bounds { probs, beta } => {
            let p = read_probs(&probs)?;
            let b = shannon_bounds_check(&p, beta)?;
            let mut out = json!(b);
            if beta == 2 {
                out["value_function"] = json!(integer_value_function(&p)?.value);
            }
            Output::check(&out, b.holds)
        }
        CodeCmd::Blockcode { lengths, probs, beta, n, samples } => {
            let l = match (lengths, probs) {
                (Some(path), _) => CodeLengthFunction::new(read_vector(&path, &["lengths"])?, beta)?,
                (None, Some(path)) => shannon_lengths(&read_probs(&path)?, beta)?,
                (None, None) => return Err(usage("one of --lengths or --probs is required")),
            };
            let selection = if samples == 0 {
                StringSelection::Exhaustive
            } else {
                StringSelection::Sampled { count: samples, seed }
            };
            let r = block_code_lengths(&l, n, selection)?;
            let ok = r.max_deviation <= 1.0 / n as f64 + 1e-12;
            Output::check(&r, ok)
        }
        CodeCmd::Kraft { lengths, beta } => {
            let l = read_vector(&lengths, &["lengths"])?;
            let s = kraft_sum(&l, beta)?;
            Output::json(&json!({ "kraft_sum": s, "admissible": s <= 1.0 + regretlab::coding::KRAFT_TOL }))
        }
    }
}

fn rule(name: &str, dim: usize) -> CliResult<ScoringRule> {
    match name.strip_prefix("bregman:") {
        Some(div) => Ok(rule_from_bregman(by_name(div)?, vec![0.0; dim])),
        None => Ok(ScoringRule::by_name(name)?),
    }
}

fn score(cmd: ScoreCmd, seed: u64) -> CliResult<Output> {
    match cmd {
        ScoreCmd::Eval { rule: name, q, p } => {
            let q = read_probs(&q)?;
            let r = rule(&name, q.len())?;
            let scores: Vec<Option<f64>> = (0..q.len())
                .map(|x| match r.eval(x, &q) {
                    Ok(v) => Ok(finite(v)),
                    Err(regretlab::Error::SupportError(_)) => Ok(None),
                    Err(e) => Err(e),
                })
                .collect::<Result<_, _>>()?;
            let mut out = json!({ "rule": r.name(), "orientation": r.orientation(), "scores": scores });
            if let Some(path) = p {
                let p = read_probs(&path)?;
                out["expected_payoff"] = json!(finite(expected_payoff(&r, &p, &q)?));
                out["value"] = json!(expected_payoff(&r, &p, &p)?);
            }
            Output::json(&out)
        }
        ScoreCmd::Regret { rule: name, p, q } => {
            let (p, q) = (read_probs(&p)?, read_probs(&q)?);
            let r = rule(&name, p.len())?;
            let v = scoring_regret(&r, &p, &q)?;
            Output::json(&json!({ "rule": r.name(), "regret": finite(v), "infinite": v.is_infinite() }))
        }
        ScoreCmd::Proper { rule: name, dim, samples } => {
            check_report(properness_check(&rule(&name, dim)?, dim, samples, seed)?)
        }
        ScoreCmd::Local { g, dim, samples } => {
            let g = match g {
                LocalG::Ln => LocalRule::ln(),
                LocalG::Identity => LocalRule::identity(),
            };
            check_report(local_rule_regret_is_local(&g, dim, samples, seed)?)
        }
    }
}

fn spin_system(args: &SpinArgs) -> CliResult<SpinSystem> {
    Ok(SpinSystem::new(args.mu, read_vector(&args.fields, &["fields"])?)?)
}

fn thermo(cmd: ThermoCmd) -> CliResult<Output> {
    match cmd {
        ThermoCmd::Exergy { spins, beta0, k } => {
            let sys = spin_system(&spins)?;
            let mut params = ThermalParams::new(spins.beta, beta0)?;
            if k == Boltzmann::Si {
                params.k = BOLTZMANN_SI;
            }
            let r = exergy_kl_residual(&sys, &params)?;
            Output::json(&json!({
                "exergy": r.exergy,
                "kl": r.kl,
                "kt0": r.kt0,
                "residual": r.residual,
                "relative_residual": r.relative_residual,
                "k": params.k,
                "t0": params.temperature0(),
            }))
        }
        ThermoCmd::Gibbs { spins, config, full } => {
            let sys = spin_system(&spins)?;
            let beta = spins.beta;
            let ln_z = ln_partition_function(&sys, beta)?;
            let u = internal_energy(&sys, beta)?;
            let mut out = json!({
                "ln_partition_function": ln_z,
                "partition_function": finite(ln_z.exp()),
                "internal_energy": u,
                "entropy": gibbs_entropy(&sys, beta)?,
                "entropy_identity_residual": regretlab::statmech::entropy_identity_residual(&sys, beta)?,
            });
            if let Some(c) = config {
                let sigma = c
                    .chars()
                    .map(|ch| match ch {
                        '+' => Ok(1i8),
                        '-' => Ok(-1i8),
                        other => Err(usage(format!("spin '{other}' is neither + nor -"))),
                    })
                    .collect::<CliResult<Vec<_>>>()?;
                out["energy"] = json!(hamiltonian(&sys, &sigma)?);
            }
            if full {
                out["distribution"] = json!(gibbs_distribution(&sys, beta)?);
            }
            Output::json(&out)
        }
    }
}

fn market(src: &MarketSource) -> CliResult<PriceRelativeMatrix> {
    match (&src.matrix, src.example) {
        (Some(path), _) => read_matrix(path),
        (None, Some(_)) => Ok(example5_market()),
        (None, None) => Err(usage("one of --matrix or --example is required")),
    }
}

fn folio(cmd: FolioCmd, seed: u64) -> CliResult<Output> {
    match cmd {
        FolioCmd::Optimal { market: m, p, tol } => {
            let x = market(&m)?;
            Output::json(&log_optimal_portfolio(&x, &read_probs(&p)?, tol)?)
        }
        FolioCmd::Regret { market: m, p, q } => {
            let x = market(&m)?;
            let r = portfolio_regret_detailed(&x, &read_probs(&p)?, &read_probs(&q)?)?;
            Output::json(&json!({
                "regret": finite(r.regret),
                "infinite": r.infinite,
                "optimal_for_p": r.optimal_for_p,
                "chosen_for_q": r.chosen_for_q,
            }))
        }
        FolioCmd::Curve { market: m, steps, format } => {
            let curve = g_curve(&market(&m)?, steps)?;
            Ok(match format {
                Format::Csv => {
                    let mut s = String::from("t,G\n");
                    for (t, g) in curve {
                        s.push_str(&format!("{t},{g}\n"));
                    }
                    Output::raw(s.trim_end().to_string())
                }
                Format::Json => Output::json(
                    &curve.iter().map(|(t, g)| json!({ "t": t, "G": g })).collect::<Vec<_>>(),
                )?,
            })
        }
        FolioCmd::Rate { market: m, b, p } => {
            let x = market(&m)?;
            let (b, p) = (read_probs(&b)?, read_probs(&p)?);
            let w = doubling_rate(&x, &b, &p)?;
            Output::json(&json!({
                "doubling_rate": finite(w),
                "minus_infinity": w == f64::NEG_INFINITY,
                "kkt_residual": finite(kkt_residual(&x, &p, &b)?),
            }))
        }
        FolioCmd::Dominates { market: m, b1, b2, strict } => {
            let x = market(&m)?;
            let (b1, b2) = (read_probs(&b1)?, read_probs(&b2)?);
            Output::json(&json!({
                "b1_dominates_b2": dominates(&x, &b1, &b2, strict)?,
                "b2_dominates_b1": dominates(&x, &b2, &b1, strict)?,
            }))
        }
        FolioCmd::Thresholds { market: m, bisect } => {
            let x = market(&m)?;
            let prepared = prepare_two_outcome(&x)?;
            let mut rows = Vec::new();
            for (asset, lo, hi) in prepared.intervals()? {
                let mut row = json!({ "asset": asset, "t_low": lo, "t_high": hi });
                if bisect {
                    if let Some((a, b)) = optimality_interval_by_bisection(&x, asset, 1e-10)? {
                        row["bisection"] = json!([a, b]);
                    }
                }
                rows.push(row);
            }
            let dropped: Vec<usize> = (0..x.assets()).filter(|i| !prepared.assets.contains(i)).collect();
            Output::json(&json!({ "intervals": rows, "dominated": dropped }))
        }
        FolioCmd::Gambling { market: m } => Output::json(&gambling_classifier(&market(&m)?)),
        FolioCmd::Monotone { market: m, samples } => check_report(monotone_regret_check(&market(&m)?, samples, seed)?),
    }
}

fn state(cmd: StateCmd) -> CliResult<Output> {
    match cmd {
        StateCmd::Validate { state } => {
            // parse without the constructor's validation so that bad inputs are reported, not rejected
            let v = read_value(&state)?;
            let s = match serde_json::from_value::<State>(v.clone()) {
                Ok(s) => s,
                Err(_) => {
                    let m: regretlab::Observable = observable_from(&v, &state.display().to_string())?;
                    State::new_unchecked(m.matrix().clone())
                }
            };
            let r = validate_state(&s, &ToleranceSet::default());
            let passed = r.passed;
            Output::check(&r, passed)
        }
        StateCmd::Spectrum { state } => Output::json(&spectrum(&read_state(&state)?)?),
        StateCmd::Entropy { state } => Output::json(&json!({ "entropy": entropy(&read_state(&state)?)? })),
        StateCmd::Inner { observable, state } => Output::json(&json!({
            "value": inner(&read_observable(&observable)?, &read_state(&state)?)?
        })),
        StateCmd::Mix { states, weights } => Output::json(&mix(&read_states(&states)?, &weights)?),
        StateCmd::Orthogonal { s1, s2, tol } => Output::json(&json!({
            "orthogonal": orthogonal(&read_state(&s1)?, &read_state(&s2)?, tol)?
        })),
    }
}

