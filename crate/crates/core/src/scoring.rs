//! Scoring rules for probabilistic forecasts and the regrets they induce.
//!
//! Internally every rule is read in payoff orientation (larger is better).
//! Loss-oriented rules such as the Brier score are negated by
//! [`ScoringRule::payoff`], so a proper rule's regret
//! `F(P) − Σ P(x) f(x, Q)` is non-negative with `F(P) = Σ P(x) f(x, P)`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::divergence::Divergence;
use crate::error::{Error, Result};
use crate::regret::{SmoothGenerator, ValueFunction};
use crate::state::{random_probs, Observable, State};
use crate::sufficiency::{locality_check, CheckReport, VIOLATION_REL_TOL};
use crate::sample_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Payoff,
    Loss,
}

type RuleFn = Arc<dyn Fn(usize, &[f64]) -> Result<f64> + Send + Sync>;

/// A score `f(x, Q)` for outcome `x` under forecast `Q`.
#[derive(Clone)]
pub struct ScoringRule {
    name: String,
    orientation: Orientation,
    f: RuleFn,
}

impl fmt::Debug for ScoringRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScoringRule({}, {:?})", self.name, self.orientation)
    }
}

/// Brier score `(1/n) Σ_y (Q(y) − δ_x(y))²` (a loss).
pub fn brier(x: usize, q: &[f64]) -> Result<f64> {
    check_outcome(x, q)?;
    let n = q.len() as f64;
    let s: f64 = q
        .iter()
        .enumerate()
        .map(|(y, &qy)| {
            let d = qy - if y == x { 1.0 } else { 0.0 };
            d * d
        })
        .sum();
    Ok(s / n)
}

/// Logarithmic score `ln Q(x)` (a payoff).
pub fn log_score(x: usize, q: &[f64]) -> Result<f64> {
    check_outcome(x, q)?;
    if q[x] <= 0.0 {
        return Err(Error::SupportError(x));
    }
    Ok(q[x].ln())
}

fn check_outcome(x: usize, q: &[f64]) -> Result<()> {
    if x >= q.len() {
        return Err(Error::InvalidInput(format!(
            "outcome {x} outside a forecast over {} outcomes",
            q.len()
        )));
    }
    Ok(())
}

/// A local rule `f(x, Q) = g(Q(x))`.
#[derive(Clone)]
pub struct LocalRule {
    name: String,
    g: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for LocalRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LocalRule({})", self.name)
    }
}

impl LocalRule {
    pub fn new(name: impl Into<String>, g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            g: Arc::new(g),
        }
    }

    pub fn ln() -> Self {
        Self::new("ln", f64::ln)
    }

    /// `a ln(x) + b`.
    pub fn affine_log(a: f64, b: f64) -> Self {
        Self::new(format!("{a}*ln+{b}"), move |x| a * x.ln() + b)
    }

    pub fn identity() -> Self {
        Self::new("id", |x| x)
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.g)(x)
    }
}

impl ScoringRule {
    pub fn new(
        name: impl Into<String>,
        orientation: Orientation,
        f: impl Fn(usize, &[f64]) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            orientation,
            f: Arc::new(f),
        }
    }

    pub fn brier() -> Self {
        Self::new("brier", Orientation::Loss, brier)
    }

    pub fn log() -> Self {
        Self::new("log", Orientation::Payoff, log_score)
    }

    /// `f(x, Q) = Q(x)`, which is not proper.
    pub fn linear() -> Self {
        Self::new("linear", Orientation::Payoff, |x, q| {
            check_outcome(x, q)?;
            Ok(q[x])
        })
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("const {c}"), Orientation::Payoff, move |x, q| {
            check_outcome(x, q)?;
            Ok(c)
        })
    }

    pub fn local(g: LocalRule) -> Self {
        let name = format!("local[{}]", g.name);
        Self::new(name, Orientation::Payoff, move |x, q| {
            check_outcome(x, q)?;
            let v = g.eval(q[x]);
            if v.is_nan() {
                return Err(Error::DomainError(format!("g({}) is undefined", q[x])));
            }
            Ok(v)
        })
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "brier" => Ok(Self::brier()),
            "log" => Ok(Self::log()),
            "linear" => Ok(Self::linear()),
            other => Err(Error::InvalidInput(format!("unknown scoring rule '{other}'"))),
        }
    }

    /// Adds a per-outcome offset `g(x)` to the payoff.
    pub fn with_offsets(&self, offsets: Vec<f64>) -> Self {
        let base = self.clone();
        Self::new(
            format!("{}+offsets", self.name),
            Orientation::Payoff,
            move |x, q| {
                let g = offsets.get(x).copied().ok_or_else(|| {
                    Error::ShapeMismatch(format!("no offset for outcome {x}"))
                })?;
                Ok(base.payoff(x, q)? + g)
            },
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// The score in the rule's own orientation.
    pub fn eval(&self, x: usize, q: &[f64]) -> Result<f64> {
        (self.f)(x, q)
    }

    /// The score in payoff orientation.
    pub fn payoff(&self, x: usize, q: &[f64]) -> Result<f64> {
        let v = self.eval(x, q)?;
        Ok(match self.orientation {
            Orientation::Payoff => v,
            Orientation::Loss => -v,
        })
    }
}

/// `Σ_x P(x) f(x, Q)` in payoff orientation. Outcomes with `P(x) = 0` do not
/// contribute; a forecast that rules out an outcome with `P(x) > 0` under
/// the log score yields `−∞`.
pub fn expected_payoff(rule: &ScoringRule, p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::ShapeMismatch(format!("{} vs {} outcomes", p.len(), q.len())));
    }
    let mut acc = 0.0;
    for (x, &px) in p.iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        match rule.payoff(x, q) {
            Ok(v) => acc += px * v,
            Err(Error::SupportError(_)) => return Ok(f64::NEG_INFINITY),
            Err(e) => return Err(e),
        }
    }
    Ok(acc)
}

/// `F(P) − Σ P(x) f(x, Q)`.
pub fn scoring_regret(rule: &ScoringRule, p: &[f64], q: &[f64]) -> Result<f64> {
    let achieved = expected_payoff(rule, p, q)?;
    if achieved == f64::NEG_INFINITY {
        return Ok(f64::INFINITY);
    }
    Ok(expected_payoff(rule, p, p)? - achieved)
}

/// `F(P) = Σ P(x) f(x, P)` as a generator. Its "gradient" at `P` is the
/// payoff vector `f(·, P)`, which supports `F` exactly when the rule is
/// proper.
#[derive(Debug, Clone)]
pub struct RuleGenerator {
    rule: ScoringRule,
}

impl SmoothGenerator for RuleGenerator {
    fn name(&self) -> &str {
        self.rule.name()
    }

    fn eval(&self, s: &State) -> Result<f64> {
        let p = s.require_probs()?;
        expected_payoff(&self.rule, &p, &p)
    }

    fn gradient(&self, s: &State) -> Result<Observable> {
        let p = s.require_probs()?;
        let mut g = Vec::with_capacity(p.len());
        for x in 0..p.len() {
            match self.rule.payoff(x, &p) {
                Ok(v) if v.is_finite() => g.push(v),
                Ok(_) | Err(Error::SupportError(_)) | Err(Error::DomainError(_)) => {
                    return Err(Error::BoundaryState(format!(
                        "{} is not finite at outcome {x}",
                        self.rule.name()
                    )))
                }
                Err(e) => return Err(e),
            }
        }
        Ok(Observable::classical(&g))
    }

    fn one_sided_derivative(&self, s0: &State, s1: &State) -> Result<f64> {
        let (p0, p1) = (s0.require_probs()?, s1.require_probs()?);
        let achieved = expected_payoff(&self.rule, &p1, &p0)?;
        if achieved == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(achieved - expected_payoff(&self.rule, &p0, &p0)?)
    }
}

pub fn value_from_rule(rule: &ScoringRule) -> ValueFunction {
    ValueFunction::Smooth(Arc::new(RuleGenerator { rule: rule.clone() }))
}

/// `f(x, Q) = g(x) − D(δ_x, Q)`.
pub fn rule_from_bregman(d: Arc<dyn Divergence>, offsets: Vec<f64>) -> ScoringRule {
    let name = format!("bregman-rule[{}]", d.name());
    ScoringRule::new(name, Orientation::Payoff, move |x, q| {
        check_outcome(x, q)?;
        let g = offsets
            .get(x)
            .copied()
            .ok_or_else(|| Error::ShapeMismatch(format!("no offset for outcome {x}")))?;
        let v = d.eval(&State::vertex(q.len(), x), &State::classical(q)?)?;
        if !v.is_finite() {
            return Err(Error::InfiniteAtVertex(x));
        }
        Ok(g - v)
    })
}

/// The regret of a scoring rule as a divergence on classical states.
#[derive(Debug, Clone)]
pub struct ScoringRegret {
    name: String,
    rule: ScoringRule,
}

impl ScoringRegret {
    pub fn new(rule: ScoringRule) -> Self {
        Self {
            name: format!("regret[{}]", rule.name()),
            rule,
        }
    }
}

impl Divergence for ScoringRegret {
    fn name(&self) -> &str {
        &self.name
    }

    fn eval(&self, s1: &State, s2: &State) -> Result<f64> {
        scoring_regret(&self.rule, &s1.require_probs()?, &s2.require_probs()?)
    }
}

/// Samples interior `(P, Q)` pairs and checks `E_P f(·, Q) ≤ E_P f(·, P)`.
/// The improper direction is recorded as a violation with the pair as
/// certificate.
pub fn properness_check(rule: &ScoringRule, dim: usize, n_samples: usize, seed: u64) -> Result<CheckReport> {
    let mut report = CheckReport::new("proper", rule.name());
    for i in 0..n_samples {
        let mut rng = sample_rng(seed, i as u64);
        let p = random_probs(dim, &mut rng);
        let q = if i % 4 == 0 {
            // forecasts near a vertex expose rules whose optimum is extreme
            let mut q = vec![1e-3; dim];
            q[rng.random_range(0..dim)] = 1.0 - 1e-3 * (dim - 1) as f64;
            q
        } else {
            random_probs(dim, &mut rng)
        };
        let honest = expected_payoff(rule, &p, &p)?;
        let other = expected_payoff(rule, &p, &q)?;
        // lhs: payoff of the dishonest forecast, rhs: honest payoff
        report.record(other, honest, other - honest, VIOLATION_REL_TOL, || {
            serde_json::json!({ "p": p, "q": q })
        });
    }
    Ok(report.finish())
}

/// Checks properness first; if the rule is proper, runs the locality check
/// on its regret.
pub fn local_rule_regret_is_local(g: &LocalRule, dim: usize, n_samples: usize, seed: u64) -> Result<CheckReport> {
    let rule = ScoringRule::local(g.clone());
    let proper = properness_check(&rule, dim, n_samples, seed)?;
    if !proper.passed {
        return Ok(proper);
    }
    locality_check(&ScoringRegret::new(rule), dim, n_samples, seed, VIOLATION_REL_TOL)
}
