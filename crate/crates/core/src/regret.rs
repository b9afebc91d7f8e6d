//! Value functions `F(s) = max_a ⟨a, s⟩`, the regret of actions and of
//! states, and Bregman divergences of smooth generators.
//!
//! For a finite action set the regret of `s₀` when the truth is `s₁` is
//! `f(1) − f(0) − f′₊(0)` with `f(t) = F((1−t)s₀ + t s₁)`. The right
//! derivative is the largest directional payoff `⟨a, s₁ − s₀⟩` over the face
//! of actions optimal for `s₀`, so the regret reduces to
//! `F(s₁) − max_{a optimal for s₀} ⟨a, s₁⟩`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::divergence::{Divergence, ScalarConvex};
use crate::error::{Error, Result};
use crate::state::{hermitian_eigen, inner, mix, AlgebraShape, BlockMatrix, Observable, State};

/// Relative width of the band of actions treated as optimal.
pub const OPTIMAL_FACE_TOL: f64 = 1e-10;

/// Initial step for one-sided numerical derivatives.
pub const ONE_SIDED_STEP: f64 = 1e-6;

/// A differentiable convex function on the state space.
pub trait SmoothGenerator: Send + Sync {
    fn name(&self) -> &str;

    fn eval(&self, s: &State) -> Result<f64>;

    /// Gradient as an observable, so `⟨∇F(s), d⟩` is the derivative along
    /// `d`. Returns [`Error::BoundaryState`] where it is undefined.
    fn gradient(&self, s: &State) -> Result<Observable>;

    /// Right derivative of `t ↦ F((1−t)s₀ + t s₁)` at `0`. The default uses
    /// Richardson-extrapolated forward differences.
    fn one_sided_derivative(&self, s0: &State, s1: &State) -> Result<f64> {
        one_sided_derivative(|t| self.eval(&segment_point(s0, s1, t)?))
    }
}

impl fmt::Debug for dyn SmoothGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SmoothGenerator({})", self.name())
    }
}

/// `(1−t) s₀ + t s₁`.
pub fn segment_point(s0: &State, s1: &State, t: f64) -> Result<State> {
    Ok(State::new_unchecked(BlockMatrix::linear_combination(&[
        (1.0 - t, s0.matrix()),
        (t, s1.matrix()),
    ])?))
}

/// Right derivative at `0` of a function on `[0, 1]`, by forward differences
/// with step [`ONE_SIDED_STEP`] and three levels of Richardson extrapolation.
pub fn one_sided_derivative(f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let f0 = f(0.0)?;
    let mut table: Vec<f64> = (0..4)
        .map(|k| {
            let h = ONE_SIDED_STEP / f64::powi(2.0, k);
            Ok((f(h)? - f0) / h)
        })
        .collect::<Result<_>>()?;
    // forward differences have an error series in h, h², …
    for level in 1..table.len() {
        let factor = f64::powi(2.0, level as i32);
        for k in (level..table.len()).rev() {
            table[k] = (factor * table[k] - table[k - 1]) / (factor - 1.0);
        }
    }
    Ok(*table.last().expect("non-empty table"))
}

/// `F(s) = −H(s) = tr[s ln s]`, whose Bregman divergence is the (quantum)
/// information divergence.
#[derive(Debug, Clone, Copy, Default)]
pub struct NegEntropy;

impl SmoothGenerator for NegEntropy {
    fn name(&self) -> &str {
        "neg-entropy"
    }

    fn eval(&self, s: &State) -> Result<f64> {
        Ok(-crate::state::entropy(s)?)
    }

    fn gradient(&self, s: &State) -> Result<Observable> {
        let m = s.matrix();
        for b in m.blocks() {
            let (vals, _) = hermitian_eigen(b)?;
            if vals.iter().any(|&v| v <= 0.0) {
                return Err(Error::BoundaryState("ln s is undefined on a singular state".into()));
            }
        }
        Ok(Observable::new_unchecked(m.map_spectrum(|x| x.ln() + 1.0)?))
    }

    /// `−∞` when `s₁` leaves the support of `s₀`; otherwise the gradient
    /// formula with `ln s₀` restricted to its support.
    fn one_sided_derivative(&self, s0: &State, s1: &State) -> Result<f64> {
        let tol = crate::state::ToleranceSet::default().supp;
        let p = crate::state::support_projection(s0, tol)?;
        let outside = BlockMatrix::linear_combination(&[
            (1.0, &BlockMatrix::identity(s0.shape())),
            (-1.0, &p),
        ])?;
        if outside.pairing(s1.matrix())?.re > tol {
            return Ok(f64::NEG_INFINITY);
        }
        let log = s0
            .matrix()
            .map_spectrum(|x| if x > tol { x.ln() + 1.0 } else { 0.0 })?;
        let dir = s1.matrix().sub(s0.matrix())?;
        Ok(log.pairing(&dir)?.re)
    }
}

/// `F(s) = c · tr(s²)`, optionally with `c` divided by the total dimension
/// (the Brier generator `(1/n) Σ P(x)²` on the simplex).
#[derive(Debug, Clone, Copy)]
pub struct SquaredNorm {
    pub scale: f64,
    pub per_dimension: bool,
}

impl SquaredNorm {
    pub fn plain() -> Self {
        Self {
            scale: 1.0,
            per_dimension: false,
        }
    }

    pub fn brier() -> Self {
        Self {
            scale: 1.0,
            per_dimension: true,
        }
    }

    fn factor(&self, shape: &AlgebraShape) -> f64 {
        if self.per_dimension {
            self.scale / shape.total_dim() as f64
        } else {
            self.scale
        }
    }
}

impl SmoothGenerator for SquaredNorm {
    fn name(&self) -> &str {
        if self.per_dimension {
            "brier"
        } else {
            "squared-norm"
        }
    }

    fn eval(&self, s: &State) -> Result<f64> {
        let n = s.matrix().frobenius_norm();
        Ok(self.factor(s.shape()) * n * n)
    }

    fn gradient(&self, s: &State) -> Result<Observable> {
        Ok(Observable::new_unchecked(s.matrix().scale(2.0 * self.factor(s.shape()))))
    }
}

/// `F(P) = Σ φ(P(x))` on classical states.
#[derive(Debug, Clone)]
pub struct Separable {
    pub phi: ScalarConvex,
}

impl SmoothGenerator for Separable {
    fn name(&self) -> &str {
        self.phi.name()
    }

    fn eval(&self, s: &State) -> Result<f64> {
        Ok(s.require_probs()?.iter().map(|&p| self.phi.value(p)).sum())
    }

    fn gradient(&self, s: &State) -> Result<Observable> {
        let g: Vec<f64> = s.require_probs()?.iter().map(|&p| self.phi.derivative(p)).collect();
        if g.iter().any(|x| !x.is_finite()) {
            return Err(Error::BoundaryState(format!("{}′ is unbounded here", self.phi.name())));
        }
        Ok(Observable::classical(&g))
    }
}

/// Finite collection of feasible actions sharing one algebra shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ActionSetJson", into = "ActionSetJson")]
pub struct ActionSet {
    actions: Vec<Observable>,
}

#[derive(Serialize, Deserialize)]
struct ActionSetJson {
    actions: Vec<Observable>,
}

impl TryFrom<ActionSetJson> for ActionSet {
    type Error = Error;
    fn try_from(j: ActionSetJson) -> Result<Self> {
        ActionSet::new(j.actions)
    }
}

impl From<ActionSet> for ActionSetJson {
    fn from(a: ActionSet) -> Self {
        ActionSetJson { actions: a.actions }
    }
}

impl ActionSet {
    pub fn new(actions: Vec<Observable>) -> Result<Self> {
        let first = actions
            .first()
            .ok_or_else(|| Error::InvalidInput("action set is empty".into()))?;
        if actions.iter().any(|a| a.shape() != first.shape()) {
            return Err(Error::ShapeMismatch("actions act on different algebras".into()));
        }
        Ok(Self { actions })
    }

    /// Payoff vectors on a finite outcome space.
    pub fn classical(payoffs: &[Vec<f64>]) -> Result<Self> {
        Self::new(payoffs.iter().map(|p| Observable::classical(p)).collect())
    }

    pub fn actions(&self) -> &[Observable] {
        &self.actions
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn shape(&self) -> &AlgebraShape {
        self.actions[0].shape()
    }

    /// Removes every action dominated by another one (`a_i − a_j ⪰ 0`).
    /// Among identical actions the first is kept.
    pub fn prune_dominated(&self, tol: f64) -> Result<ActionSet> {
        let n = self.actions.len();
        let mut removed = vec![false; n];
        for j in 0..n {
            for i in 0..n {
                if i == j || removed[i] {
                    continue;
                }
                let diff = self.actions[i].matrix().sub(self.actions[j].matrix())?;
                let mut min_eig = f64::INFINITY;
                let mut max_abs: f64 = 0.0;
                for b in diff.blocks() {
                    for v in hermitian_eigen(b)?.0 {
                        min_eig = min_eig.min(v);
                        max_abs = max_abs.max(v.abs());
                    }
                }
                let identical = max_abs <= tol;
                if min_eig >= -tol && (!identical || i < j) {
                    removed[j] = true;
                    break;
                }
            }
        }
        ActionSet::new(
            self.actions
                .iter()
                .zip(&removed)
                .filter(|(_, &r)| !r)
                .map(|(a, _)| a.clone())
                .collect(),
        )
    }
}

/// The convex function whose regret is studied: either the maximum over a
/// finite action set or a smooth generator.
#[derive(Clone)]
pub enum ValueFunction {
    Finite(ActionSet),
    Smooth(Arc<dyn SmoothGenerator>),
}

impl fmt::Debug for ValueFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueFunction::Finite(a) => write!(f, "Finite({} actions)", a.len()),
            ValueFunction::Smooth(g) => write!(f, "Smooth({})", g.name()),
        }
    }
}

impl ValueFunction {
    pub fn smooth(g: impl SmoothGenerator + 'static) -> Self {
        ValueFunction::Smooth(Arc::new(g))
    }
}

fn payoffs(actions: &ActionSet, s: &State) -> Result<Vec<f64>> {
    actions.actions().iter().map(|a| inner(a, s)).collect()
}

pub fn value(f: &ValueFunction, s: &State) -> Result<f64> {
    match f {
        ValueFunction::Finite(actions) => Ok(payoffs(actions, s)?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)),
        ValueFunction::Smooth(g) => g.eval(s),
    }
}

/// Regret of an action; `flagged` marks a negative value, which means the
/// observable is not in the feasible closure of the action set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActionRegret {
    pub value: f64,
    pub flagged: bool,
}

pub fn action_regret(f: &ValueFunction, s: &State, a: &Observable) -> Result<ActionRegret> {
    let fv = value(f, s)?;
    let v = fv - inner(a, s)?;
    let tol = OPTIMAL_FACE_TOL * fv.abs().max(1.0);
    Ok(ActionRegret {
        value: v,
        flagged: v < -tol,
    })
}

/// Indices of actions whose payoff is within `tol · max(1, |F(s)|)` of `F(s)`.
pub fn optimal_actions(f: &ValueFunction, s: &State, tol: f64) -> Result<Vec<usize>> {
    let ValueFunction::Finite(actions) = f else {
        return Err(Error::RequiresFiniteActions);
    };
    let pay = payoffs(actions, s)?;
    let best = pay.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let band = tol * best.abs().max(1.0);
    Ok(pay
        .iter()
        .enumerate()
        .filter(|(_, &p)| p >= best - band)
        .map(|(i, _)| i)
        .collect())
}

/// Regret of acting optimally for `s0` when the state is `s1`.
pub fn state_regret(f: &ValueFunction, s1: &State, s0: &State) -> Result<f64> {
    if s1.shape() != s0.shape() {
        return Err(Error::ShapeMismatch("states on different algebras".into()));
    }
    match f {
        ValueFunction::Finite(actions) => {
            let opt = optimal_actions(f, s0, OPTIMAL_FACE_TOL)?;
            let best = opt
                .iter()
                .map(|&i| inner(&actions.actions()[i], s1))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max);
            Ok((value(f, s1)? - best).max(0.0))
        }
        ValueFunction::Smooth(g) => match bregman(g.as_ref(), s1, s0) {
            Err(Error::BoundaryState(_)) => {
                let slope = g.one_sided_derivative(s0, s1)?;
                if slope == f64::NEG_INFINITY {
                    return Ok(f64::INFINITY);
                }
                Ok((g.eval(s1)? - g.eval(s0)? - slope).max(0.0))
            }
            other => other,
        },
    }
}

/// `F(s₁) − F(s₀) − ⟨s₁ − s₀, ∇F(s₀)⟩`.
pub fn bregman(g: &dyn SmoothGenerator, s1: &State, s0: &State) -> Result<f64> {
    let grad = g.gradient(s0)?;
    let dir = State::new_unchecked(s1.matrix().sub(s0.matrix())?);
    Ok(g.eval(s1)? - g.eval(s0)? - inner(&grad, &dir)?)
}

/// `|Σ t_i D(s_i, s) − Σ t_i D(s_i, s̄) − D(s̄, s)|` with `s̄ = Σ t_i s_i`.
pub fn bregman_identity_residual(
    d: &dyn Divergence,
    states: &[State],
    weights: &[f64],
    s: &State,
) -> Result<f64> {
    let bar = mix(states, weights)?;
    let mut lhs = 0.0;
    let mut rhs = d.eval(&bar, s)?;
    for (si, &t) in states.iter().zip(weights) {
        if t == 0.0 {
            continue;
        }
        lhs += t * d.eval(si, s)?;
        rhs += t * d.eval(si, &bar)?;
    }
    Ok((lhs - rhs).abs())
}

/// The affine payoff that supports `F` at `s0`. For a finite set this is the
/// unique optimal action; for a smooth generator it is
/// `∇F(s₀) + (F(s₀) − ⟨∇F(s₀), s₀⟩)·1`.
pub fn supporting_action(f: &ValueFunction, s0: &State) -> Result<Observable> {
    match f {
        ValueFunction::Finite(actions) => {
            let opt = optimal_actions(f, s0, OPTIMAL_FACE_TOL)?;
            if opt.len() != 1 {
                return Err(Error::NonUniqueOptimum(opt.len()));
            }
            Ok(actions.actions()[opt[0]].clone())
        }
        ValueFunction::Smooth(g) => {
            let grad = g.gradient(s0)?;
            let offset = g.eval(s0)? - inner(&grad, s0)?;
            Ok(Observable::new_unchecked(BlockMatrix::linear_combination(&[
                (1.0, grad.matrix()),
                (offset, &BlockMatrix::identity(s0.shape())),
            ])?))
        }
    }
}

/// `max |F(s₁) − D(s₁, s₀) − ⟨a, s₁⟩|` over the samples, with `a` the
/// supporting action at `s0`.
pub fn reconstruct_check(
    f: &ValueFunction,
    d: &dyn Divergence,
    s0: &State,
    samples: &[State],
) -> Result<f64> {
    let a = supporting_action(f, s0)?;
    let mut worst: f64 = 0.0;
    for s1 in samples {
        let r = value(f, s1)? - d.eval(s1, s0)? - inner(&a, s1)?;
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

/// Largest relative disagreement between `⟨∇F(s), t − s⟩` and a central
/// difference along `t − s`, over the given target states.
pub fn gradient_check(g: &dyn SmoothGenerator, s: &State, targets: &[State]) -> Result<f64> {
    const H: f64 = 1e-5;
    let grad = g.gradient(s)?;
    let mut worst: f64 = 0.0;
    for t in targets {
        let dir = State::new_unchecked(t.matrix().sub(s.matrix())?);
        let analytic = inner(&grad, &dir)?;
        let fwd = g.eval(&segment_point(s, t, H)?)?;
        let bwd = g.eval(&segment_point(s, t, -H)?)?;
        let fd = (fwd - bwd) / (2.0 * H);
        worst = worst.max((fd - analytic).abs() / analytic.abs().max(1.0));
    }
    Ok(worst)
}

/// The regret of a value function viewed as a divergence.
#[derive(Clone)]
pub struct RegretDivergence {
    name: String,
    f: ValueFunction,
}

impl RegretDivergence {
    pub fn new(f: ValueFunction) -> Self {
        let name = match &f {
            ValueFunction::Finite(a) => format!("regret[{} actions]", a.len()),
            ValueFunction::Smooth(g) => format!("regret[{}]", g.name()),
        };
        Self { name, f }
    }

    pub fn value_function(&self) -> &ValueFunction {
        &self.f
    }
}

impl Divergence for RegretDivergence {
    fn name(&self) -> &str {
        &self.name
    }

    fn eval(&self, s1: &State, s2: &State) -> Result<f64> {
        state_regret(&self.f, s1, s2)
    }

    fn differentiable(&self) -> bool {
        matches!(self.f, ValueFunction::Smooth(_))
    }
}

/// Two actions on the interval `[0, 1]`: `⟨a₀, s⟩ = 1 − 2s` and
/// `⟨a₁, s⟩ = 2s − 1`. A point `s` is the distribution `(1 − s, s)`.
pub fn interval_example() -> ActionSet {
    ActionSet::classical(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).expect("two actions")
}

/// The state `(1 − s, s)` representing the point `s` of the interval.
pub fn interval_point(s: f64) -> Result<State> {
    State::classical(&[1.0 - s, s])
}
