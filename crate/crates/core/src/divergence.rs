//! Closed-form divergences: information divergence (classical and quantum),
//! squared Euclidean / Brier, Itakura-Saito, and separable Bregman
//! divergences built from scalar convex functions.
//!
//! All values are in nats. `+∞` is returned as `f64::INFINITY`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::regret::SmoothGenerator;
use crate::state::{hermitian_eigen, State, ToleranceSet};

/// A function of a pair of states with values in `[0, ∞]`.
pub trait Divergence: Send + Sync {
    fn name(&self) -> &str;

    fn eval(&self, s1: &State, s2: &State) -> Result<f64>;

    /// Whether the divergence comes from a differentiable generator, i.e. is
    /// a Bregman divergence.
    fn differentiable(&self) -> bool {
        true
    }
}

impl fmt::Debug for dyn Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Divergence({})", self.name())
    }
}

/// `D(P‖Q) = Σ P(x) ln(P(x)/Q(x))` with `0 ln(0/q) = 0`.
pub fn kl(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::ShapeMismatch(format!("{} vs {} outcomes", p.len(), q.len())));
    }
    let mut acc = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi <= 0.0 {
            continue;
        }
        if qi <= 0.0 {
            return Ok(f64::INFINITY);
        }
        acc += pi * (pi / qi).ln();
    }
    Ok(acc)
}

/// `tr[s₁ ln s₁ − s₁ ln s₂]`, computed from eigendecompositions.
///
/// The support condition is tested by projecting `s₁` onto the eigenvectors
/// of `s₂` whose eigenvalues are at most `tol.supp`.
pub fn quantum_relative_entropy(s1: &State, s2: &State) -> Result<f64> {
    quantum_relative_entropy_with(s1, s2, &ToleranceSet::default())
}

pub fn quantum_relative_entropy_with(s1: &State, s2: &State, tol: &ToleranceSet) -> Result<f64> {
    if s1.shape() != s2.shape() {
        return Err(Error::ShapeMismatch("states on different algebras".into()));
    }
    if let (Some(p), Some(q)) = (s1.probs(), s2.probs()) {
        return kl(&p, &q);
    }
    let mut acc = 0.0;
    for (a, b) in s1.blocks().iter().zip(s2.blocks()) {
        let (la, va) = hermitian_eigen(a)?;
        let (lb, vb) = hermitian_eigen(b)?;
        // tr[a ln a]
        acc += la.iter().map(|&x| if x > 0.0 { x * x.ln() } else { 0.0 }).sum::<f64>();
        for (j, &mu) in lb.iter().enumerate() {
            let v = vb.column(j);
            // ⟨v_j| a |v_j⟩
            let weight: f64 = la
                .iter()
                .enumerate()
                .filter(|(_, &x)| x > 0.0)
                .map(|(i, &x)| x * va.column(i).dotc(&v).norm_sqr())
                .sum();
            if mu <= tol.supp {
                if weight > tol.supp {
                    return Ok(f64::INFINITY);
                }
                continue;
            }
            acc -= weight * mu.ln();
        }
    }
    Ok(acc.max(0.0))
}

/// Itakura-Saito distance `λ/μ − 1 − ln(λ/μ)` on the positive half line.
pub fn itakura_saito(lambda: f64, mu: f64) -> Result<f64> {
    if !(lambda > 0.0 && mu > 0.0) || !lambda.is_finite() || !mu.is_finite() {
        return Err(Error::DomainError(format!(
            "Itakura-Saito needs positive arguments, got ({lambda}, {mu})"
        )));
    }
    let r = lambda / mu;
    Ok(r - 1.0 - r.ln())
}

/// Value and `t`-derivative of the Itakura-Saito distance after a right
/// translation by `t`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TranslatedDistance {
    pub value: f64,
    pub derivative: f64,
}

pub fn is_translation(lambda: f64, mu: f64, t: f64) -> Result<TranslatedDistance> {
    if !(t >= 0.0) {
        return Err(Error::DomainError(format!("translation must be non-negative, got {t}")));
    }
    let value = itakura_saito(lambda + t, mu + t)?;
    let derivative = -(lambda - mu).powi(2) / ((lambda + t) * (mu + t).powi(2));
    Ok(TranslatedDistance { value, derivative })
}

/// A scalar convex function together with its derivative.
#[derive(Clone)]
pub struct ScalarConvex {
    name: String,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    df: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for ScalarConvex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarConvex({})", self.name)
    }
}

impl ScalarConvex {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
            df: Arc::new(df),
        }
    }

    pub fn square() -> Self {
        Self::new("x^2", |x| x * x, |x| 2.0 * x)
    }

    /// `x ln x`, extended by continuity to `0` at the origin.
    pub fn x_ln_x() -> Self {
        Self::new(
            "x ln x",
            |x| if x == 0.0 { 0.0 } else { x * x.ln() },
            |x| if x == 0.0 { f64::NEG_INFINITY } else { x.ln() + 1.0 },
        )
    }

    /// `x ln x − x`; generates the unnormalised divergence
    /// `Σ p ln(p/q) + q − p` on positive vectors.
    pub fn x_ln_x_minus_x() -> Self {
        Self::new(
            "x ln x - x",
            |x| if x == 0.0 { 0.0 } else { x * x.ln() - x },
            |x| if x == 0.0 { f64::NEG_INFINITY } else { x.ln() },
        )
    }

    /// `−ln x`, the Itakura-Saito generator.
    pub fn neg_ln() -> Self {
        Self::new("-ln x", |x| -x.ln(), |x| -1.0 / x)
    }

    pub fn scaled(&self, c: f64) -> Self {
        let (f, df) = (self.f.clone(), self.df.clone());
        Self::new(format!("{c}*({})", self.name), move |x| c * f(x), move |x| c * df(x))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        (self.df)(x)
    }
}

/// `Σ_i φ(p_i) − φ(q_i) − (p_i − q_i) φ′(q_i)`.
pub fn separable_bregman(phi: &ScalarConvex, p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::ShapeMismatch(format!("{} vs {} entries", p.len(), q.len())));
    }
    let mut acc = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi == qi {
            continue;
        }
        let slope = phi.derivative(qi);
        if !slope.is_finite() {
            return Err(Error::DomainError(format!(
                "derivative of {} is unbounded at q[{i}] = {qi}",
                phi.name()
            )));
        }
        acc += phi.value(pi) - phi.value(qi) - (pi - qi) * slope;
    }
    Ok(acc)
}

/// Converts nats to bits for display.
pub fn nats_to_bits(x: f64) -> f64 {
    x / std::f64::consts::LN_2
}

/// Information divergence on classical states.
#[derive(Debug, Clone, Copy, Default)]
pub struct Kl;

impl Divergence for Kl {
    fn name(&self) -> &str {
        "kl"
    }

    fn eval(&self, s1: &State, s2: &State) -> Result<f64> {
        kl(&s1.require_probs()?, &s2.require_probs()?)
    }
}

/// Quantum relative entropy; agrees with [`Kl`] on classical states.
#[derive(Debug, Clone, Copy, Default)]
pub struct QuantumRelativeEntropy;

impl Divergence for QuantumRelativeEntropy {
    fn name(&self) -> &str {
        "qre"
    }

    fn eval(&self, s1: &State, s2: &State) -> Result<f64> {
        quantum_relative_entropy(s1, s2)
    }
}

/// `c · ‖s₁ − s₂‖²` in Hilbert-Schmidt norm. With `per_dimension` the factor
/// is additionally divided by the total dimension `n`, giving the Brier
/// regret generated by `F(P) = (1/n) Σ P(x)²`.
#[derive(Debug, Clone, Copy)]
pub struct SquaredEuclidean {
    pub scale: f64,
    pub per_dimension: bool,
}

impl SquaredEuclidean {
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
}

impl Divergence for SquaredEuclidean {
    fn name(&self) -> &str {
        if self.per_dimension {
            "brier"
        } else {
            "sqeuclid"
        }
    }

    fn eval(&self, s1: &State, s2: &State) -> Result<f64> {
        let d = s1.matrix().sub(s2.matrix())?.frobenius_norm();
        let mut c = self.scale;
        if self.per_dimension {
            c /= s1.shape().total_dim() as f64;
        }
        Ok(c * d * d)
    }
}

/// Bregman divergence of a differentiable generator.
#[derive(Clone)]
pub struct GeneratorDivergence {
    name: String,
    generator: Arc<dyn SmoothGenerator>,
}

impl GeneratorDivergence {
    pub fn new(generator: Arc<dyn SmoothGenerator>) -> Self {
        Self {
            name: format!("bregman[{}]", generator.name()),
            generator,
        }
    }

    pub fn generator(&self) -> &Arc<dyn SmoothGenerator> {
        &self.generator
    }
}

impl Divergence for GeneratorDivergence {
    fn name(&self) -> &str {
        &self.name
    }

    fn eval(&self, s1: &State, s2: &State) -> Result<f64> {
        crate::regret::bregman(self.generator.as_ref(), s1, s2)
    }
}

/// `c · D`.
#[derive(Clone)]
pub struct Scaled {
    name: String,
    factor: f64,
    inner: Arc<dyn Divergence>,
}

impl Scaled {
    pub fn new(factor: f64, inner: Arc<dyn Divergence>) -> Self {
        Self {
            name: format!("{factor}*{}", inner.name()),
            factor,
            inner,
        }
    }
}

impl Divergence for Scaled {
    fn name(&self) -> &str {
        &self.name
    }

    fn eval(&self, s1: &State, s2: &State) -> Result<f64> {
        let v = self.inner.eval(s1, s2)?;
        Ok(if v == 0.0 { 0.0 } else { self.factor * v })
    }

    fn differentiable(&self) -> bool {
        self.inner.differentiable()
    }
}

/// Closure-backed divergence.
#[derive(Clone)]
pub struct FnDivergence {
    name: String,
    f: Arc<dyn Fn(&State, &State) -> Result<f64> + Send + Sync>,
    differentiable: bool,
}

impl FnDivergence {
    pub fn new(
        name: impl Into<String>,
        differentiable: bool,
        f: impl Fn(&State, &State) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
            differentiable,
        }
    }
}

impl Divergence for FnDivergence {
    fn name(&self) -> &str {
        &self.name
    }

    fn eval(&self, s1: &State, s2: &State) -> Result<f64> {
        (self.f)(s1, s2)
    }

    fn differentiable(&self) -> bool {
        self.differentiable
    }
}

/// The built-in divergences that act on arbitrary classical states.
pub fn zoo() -> Vec<Arc<dyn Divergence>> {
    vec![
        Arc::new(Kl),
        Arc::new(QuantumRelativeEntropy),
        Arc::new(SquaredEuclidean::plain()),
        Arc::new(SquaredEuclidean::brier()),
    ]
}

/// Looks up a built-in divergence by its short name.
pub fn by_name(name: &str) -> Result<Arc<dyn Divergence>> {
    match name {
        "kl" => Ok(Arc::new(Kl)),
        "qre" => Ok(Arc::new(QuantumRelativeEntropy)),
        "sqeuclid" => Ok(Arc::new(SquaredEuclidean::plain())),
        "brier" => Ok(Arc::new(SquaredEuclidean::brier())),
        "log-score" | "logscore" => Ok(Arc::new(crate::scoring::ScoringRegret::new(
            crate::scoring::ScoringRule::log(),
        ))),
        other => Err(Error::InvalidInput(format!("unknown divergence '{other}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{conjugate_block, random_state, random_unitary, AlgebraShape, BlockMatrix, CMatrix};
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::LN_2;

    #[test]
    fn kl_cases() {
        let p = [0.2, 0.3, 0.5];
        assert_eq!(kl(&p, &p).unwrap(), 0.0);
        assert!((kl(&[1.0, 0.0], &[0.5, 0.5]).unwrap() - LN_2).abs() < 1e-15);
        assert_eq!(kl(&[0.5, 0.5], &[1.0, 0.0]).unwrap(), f64::INFINITY);
        assert!(kl(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn qre_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let shape = AlgebraShape::matrix(3);
        let s = random_state(&shape, &mut rng);
        assert!(quantum_relative_entropy(&s, &s).unwrap().abs() < 1e-10);

        // diagonal states stored as a full block reduce to KL
        let p = [0.1, 0.6, 0.3];
        let q = [0.25, 0.25, 0.5];
        let diag = |v: &[f64]| {
            State::new(
                BlockMatrix::new(
                    shape.clone(),
                    vec![CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                        3,
                        v.iter().map(|&x| Complex64::new(x, 0.0)),
                    ))],
                )
                .unwrap(),
            )
            .unwrap()
        };
        let qre = quantum_relative_entropy(&diag(&p), &diag(&q)).unwrap();
        assert!((qre - kl(&p, &q).unwrap()).abs() < 1e-10);

        let pure = State::pure(&[Complex64::new(1.0, 0.0), Complex64::new(1.0, 1.0)]).unwrap();
        let mm = State::maximally_mixed(&AlgebraShape::matrix(2));
        assert!((quantum_relative_entropy(&pure, &mm).unwrap() - LN_2).abs() < 1e-10);
        assert_eq!(quantum_relative_entropy(&mm, &pure).unwrap(), f64::INFINITY);
    }

    #[test]
    fn qre_unitary_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for d in 2..=4 {
            let shape = AlgebraShape::matrix(d);
            for _ in 0..100 {
                let s = random_state(&shape, &mut rng);
                let t = random_state(&shape, &mut rng);
                let u = random_unitary(d, &mut rng);
                let a = quantum_relative_entropy(&s, &t).unwrap();
                let b = quantum_relative_entropy(
                    &conjugate_block(&s, 0, &u).unwrap(),
                    &conjugate_block(&t, 0, &u).unwrap(),
                )
                .unwrap();
                assert!((a - b).abs() <= 1e-9, "d={d}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn itakura_saito_values() {
        assert_eq!(itakura_saito(1.0, 1.0).unwrap(), 0.0);
        assert!((itakura_saito(2.0, 1.0).unwrap() - (1.0 - LN_2)).abs() < 1e-15);
        assert!((itakura_saito(1.0, 2.0).unwrap() - (LN_2 - 0.5)).abs() < 1e-15);
        assert!(matches!(itakura_saito(0.0, 1.0), Err(Error::DomainError(_))));
        assert!(matches!(itakura_saito(1.0, -2.0), Err(Error::DomainError(_))));
    }

    #[test]
    fn itakura_saito_translation() {
        let at0 = is_translation(2.0, 1.0, 0.0).unwrap();
        assert_eq!(at0.value, itakura_saito(2.0, 1.0).unwrap());
        let at1 = is_translation(2.0, 1.0, 1.0).unwrap();
        assert!(at1.value < at0.value);
        for t in [0.0, 0.5, 3.0] {
            let same = is_translation(1.7, 1.7, t).unwrap();
            assert_eq!(same.value, 0.0);
            assert_eq!(same.derivative, 0.0);
        }
        assert!(is_translation(1.0, 1.0, -1.0).is_err());

        // derivative formula against central differences
        let (l, m, t, h) = (0.7, 2.3, 0.4, 1e-5);
        let fd = (is_translation(l, m, t + h).unwrap().value - is_translation(l, m, t - h).unwrap().value)
            / (2.0 * h);
        assert!((fd - is_translation(l, m, t).unwrap().derivative).abs() < 1e-8);
    }

    #[test]
    fn separable_generators() {
        let p = [0.2, 0.5, 0.3];
        let q = [0.4, 0.4, 0.2];
        let sq: f64 = p.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum();
        assert!((separable_bregman(&ScalarConvex::square(), &p, &q).unwrap() - sq).abs() < 1e-15);
        assert!(
            (separable_bregman(&ScalarConvex::x_ln_x(), &p, &q).unwrap() - kl(&p, &q).unwrap()).abs() < 1e-15
        );
        assert_eq!(separable_bregman(&ScalarConvex::x_ln_x(), &p, &p).unwrap(), 0.0);
        assert!(matches!(
            separable_bregman(&ScalarConvex::x_ln_x(), &[0.5, 0.5], &[1.0, 0.0]),
            Err(Error::DomainError(_))
        ));
        for c in [0.5, 2.0, 10.0] {
            let base = separable_bregman(&ScalarConvex::x_ln_x(), &p, &q).unwrap();
            let scaled = separable_bregman(&ScalarConvex::x_ln_x().scaled(c), &p, &q).unwrap();
            assert!((scaled - c * base).abs() < 1e-14);
        }
    }

    #[test]
    fn unnormalised_divergence_on_positive_vectors() {
        let a: [f64; 3] = [0.5, 2.0, 1.5];
        let b: [f64; 3] = [1.0, 1.0, 3.0];
        let direct: f64 = a.iter().zip(&b).map(|(x, y)| x * (x / y).ln() + y - x).sum();
        let via = separable_bregman(&ScalarConvex::x_ln_x_minus_x(), &a, &b).unwrap();
        assert!((direct - via).abs() < 1e-14);
    }

    #[test]
    fn brier_divergence_scales_with_dimension() {
        let p = State::classical(&[1.0, 0.0]).unwrap();
        let q = State::classical(&[0.0, 1.0]).unwrap();
        assert!((SquaredEuclidean::plain().eval(&p, &q).unwrap() - 2.0).abs() < 1e-15);
        assert!((SquaredEuclidean::brier().eval(&p, &q).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lookup_by_name() {
        for name in ["kl", "qre", "sqeuclid", "brier", "log-score"] {
            assert!(by_name(name).is_ok());
        }
        assert!(by_name("hellinger").is_err());
    }
}
