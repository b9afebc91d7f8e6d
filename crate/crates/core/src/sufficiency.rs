//! Randomised checks of monotonicity, sufficiency and locality of a
//! divergence, and least-squares fitting of a divergence against
//! information divergence.
//!
//! Sample `i` of a check draws from `sample_rng(seed, i)`, so a report depends
//! only on the seed and the sample count.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::divergence::{kl, Divergence};
use crate::error::{Error, Result};
use crate::sample_rng;
use crate::state::{
    orthogonal, random_probs, random_state, random_unitary, support_projection, AlgebraShape,
    BlockMatrix, CMatrix, State, ToleranceSet,
};

/// A gap counts as a violation when it exceeds this multiple of
/// `max(1, |rhs|)`.
pub const VIOLATION_REL_TOL: f64 = 1e-7;

/// Largest `‖Ψ(Φ(s)) − s‖` accepted for a recovery pair.
pub const RECOVERY_TOL: f64 = 1e-8;

const MAX_CERTIFICATES: usize = 16;

/// An affine map of a state space into itself.
#[derive(Debug, Clone, PartialEq)]
pub enum AffineChannel {
    /// Column-stochastic matrix acting on classical states.
    Stochastic(DMatrix<f64>),
    /// `s ↦ Σ K s K†` on single-block states.
    Kraus(Vec<CMatrix>),
    /// `s ↦ Σ_k tr(E_k s) ω_k` for a resolution of the identity `E_k`.
    MeasurePrepare(Vec<(BlockMatrix, State)>),
    /// Blockwise transpose: positive and trace preserving, not completely
    /// positive.
    Transpose,
    /// Applies the maps in order.
    Compose(Vec<AffineChannel>),
}

impl AffineChannel {
    pub fn identity_stochastic(n: usize) -> Self {
        AffineChannel::Stochastic(DMatrix::identity(n, n))
    }

    /// Checks stochasticity or the Kraus completeness relation.
    pub fn validate(&self) -> Result<()> {
        match self {
            AffineChannel::Stochastic(m) => {
                for (j, col) in m.column_iter().enumerate() {
                    if col.iter().any(|&x| x < 0.0) {
                        return Err(Error::InvalidInput(format!("negative entry in column {j}")));
                    }
                    let s: f64 = col.iter().sum();
                    if (s - 1.0).abs() > 1e-9 {
                        return Err(Error::InvalidInput(format!("column {j} sums to {s}")));
                    }
                }
                Ok(())
            }
            AffineChannel::Kraus(ops) => {
                let d = ops
                    .first()
                    .ok_or_else(|| Error::InvalidInput("no Kraus operators".into()))?
                    .ncols();
                let mut sum = CMatrix::zeros(d, d);
                for k in ops {
                    sum += k.adjoint() * k;
                }
                let err = (sum - CMatrix::identity(d, d))
                    .iter()
                    .map(|z| z.norm())
                    .fold(0.0, f64::max);
                if err > 1e-9 {
                    return Err(Error::InvalidInput(format!("Σ K†K deviates from I by {err:e}")));
                }
                Ok(())
            }
            AffineChannel::MeasurePrepare(terms) => {
                let first = terms
                    .first()
                    .ok_or_else(|| Error::InvalidInput("no effects".into()))?;
                let refs: Vec<(f64, &BlockMatrix)> = terms.iter().map(|(e, _)| (1.0, e)).collect();
                let total = BlockMatrix::linear_combination(&refs)?;
                let err = total.sub(&BlockMatrix::identity(first.0.shape()))?.frobenius_norm();
                if err > 1e-9 {
                    return Err(Error::InvalidInput(format!("effects sum to I up to {err:e}")));
                }
                Ok(())
            }
            AffineChannel::Transpose => Ok(()),
            AffineChannel::Compose(maps) => maps.iter().try_for_each(AffineChannel::validate),
        }
    }

    /// Serialisable description used in certificates.
    pub fn to_json(&self) -> serde_json::Value {
        fn block(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                .collect()
        }
        match self {
            AffineChannel::Stochastic(m) => json!({
                "stochastic": (0..m.nrows())
                    .map(|i| m.row(i).iter().copied().collect::<Vec<_>>())
                    .collect::<Vec<_>>()
            }),
            AffineChannel::Kraus(ops) => json!({ "kraus": ops.iter().map(block).collect::<Vec<_>>() }),
            AffineChannel::MeasurePrepare(terms) => json!({
                "measure_prepare": terms
                    .iter()
                    .map(|(e, w)| json!({
                        "effect": e.blocks().iter().map(block).collect::<Vec<_>>(),
                        "output": w,
                    }))
                    .collect::<Vec<_>>()
            }),
            AffineChannel::Transpose => json!("transpose"),
            AffineChannel::Compose(maps) => {
                json!({ "compose": maps.iter().map(AffineChannel::to_json).collect::<Vec<_>>() })
            }
        }
    }
}

pub fn apply_channel(phi: &AffineChannel, s: &State) -> Result<State> {
    match phi {
        AffineChannel::Stochastic(m) => {
            let p = s.require_probs()?;
            if m.ncols() != p.len() {
                return Err(Error::ShapeMismatch(format!(
                    "channel takes {} outcomes, state has {}",
                    m.ncols(),
                    p.len()
                )));
            }
            let out = m * nalgebra::DVector::from_column_slice(&p);
            Ok(State::new_unchecked(BlockMatrix::diagonal(out.as_slice())))
        }
        AffineChannel::Kraus(ops) => {
            if s.shape().num_blocks() != 1 {
                return Err(Error::ShapeMismatch("Kraus channels act on a single block".into()));
            }
            let rho = &s.blocks()[0];
            let first = ops
                .first()
                .ok_or_else(|| Error::InvalidInput("no Kraus operators".into()))?;
            if first.ncols() != rho.nrows() {
                return Err(Error::ShapeMismatch("Kraus operator size".into()));
            }
            let d_out = first.nrows();
            let mut out = CMatrix::zeros(d_out, d_out);
            for k in ops {
                out += k * rho * k.adjoint();
            }
            let herm = (&out + out.adjoint()) * Complex64::new(0.5, 0.0);
            Ok(State::new_unchecked(BlockMatrix::new(AlgebraShape::matrix(d_out), vec![herm])?))
        }
        AffineChannel::MeasurePrepare(terms) => {
            let weights = terms
                .iter()
                .map(|(e, _)| Ok(e.pairing(s.matrix())?.re))
                .collect::<Result<Vec<f64>>>()?;
            let parts: Vec<(f64, &BlockMatrix)> = weights
                .iter()
                .copied()
                .zip(terms.iter().map(|(_, w)| w.matrix()))
                .collect();
            Ok(State::new_unchecked(BlockMatrix::linear_combination(&parts)?))
        }
        AffineChannel::Transpose => {
            let blocks = s.blocks().iter().map(|b| b.transpose()).collect();
            Ok(State::new_unchecked(BlockMatrix::new(s.shape().clone(), blocks)?))
        }
        AffineChannel::Compose(maps) => {
            let mut cur = s.clone();
            for m in maps {
                cur = apply_channel(m, &cur)?;
            }
            Ok(cur)
        }
    }
}

/// A forward map `Φ` and a recovery map `Ψ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPair {
    pub forward: AffineChannel,
    pub recovery: AffineChannel,
}

impl ChannelPair {
    /// `max_i ‖Ψ(Φ(s_i)) − s_i‖` (Frobenius).
    pub fn recovery_error(&self, states: &[State]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for s in states {
            let back = apply_channel(&self.recovery, &apply_channel(&self.forward, s)?)?;
            worst = worst.max(back.matrix().sub(s.matrix())?.frobenius_norm());
        }
        Ok(worst)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub inputs: serde_json::Value,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

/// Outcome of a randomised check. At most a handful of certificates are
/// kept; `violation_count` counts all of them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub divergence: String,
    pub samples_run: usize,
    pub violation_count: usize,
    pub violations: Vec<Violation>,
    pub max_gap: f64,
    pub passed: bool,
    pub vacuous: bool,
}

impl CheckReport {
    pub fn new(check: &str, divergence: &str) -> Self {
        Self {
            check: check.into(),
            divergence: divergence.into(),
            samples_run: 0,
            violation_count: 0,
            violations: Vec::new(),
            max_gap: 0.0,
            passed: true,
            vacuous: false,
        }
    }

    /// Records one sample. `gap` is the signed amount by which the checked
    /// inequality fails (or the absolute difference for equalities).
    pub fn record(
        &mut self,
        lhs: f64,
        rhs: f64,
        gap: f64,
        rel_tol: f64,
        inputs: impl FnOnce() -> serde_json::Value,
    ) -> bool {
        self.samples_run += 1;
        let gap = if gap.is_nan() { 0.0 } else { gap };
        if gap > self.max_gap {
            self.max_gap = gap;
        }
        let scale = if rhs.is_finite() { rhs.abs().max(1.0) } else { 1.0 };
        let violated = gap > rel_tol * scale;
        if violated {
            self.violation_count += 1;
            if self.violations.len() < MAX_CERTIFICATES {
                self.violations.push(Violation {
                    inputs: inputs(),
                    lhs,
                    rhs,
                    gap,
                });
            }
        }
        violated
    }

    pub fn finish(mut self) -> Self {
        self.passed = self.violation_count == 0;
        self
    }
}

/// `lhs − rhs` for an inequality `lhs ≤ rhs` over extended reals, where
/// `∞ ≤ ∞` holds.
fn excess(lhs: f64, rhs: f64) -> f64 {
    if lhs == f64::INFINITY && rhs == f64::INFINITY {
        0.0
    } else {
        lhs - rhs
    }
}

/// Source of random channels for monotonicity checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelSampler {
    /// Column-normalised Gamma matrices on the `dim`-point simplex. Half the
    /// samples use shape 1 (uniform columns), half shape 0.1, whose nearly
    /// deterministic columns reach the merging maps that expose
    /// non-monotone divergences.
    Stochastic { dim: usize },
    /// Convex combinations of permutation matrices.
    DoublyStochastic { dim: usize },
    /// Stinespring dilations with environment dimension up to `dim²`;
    /// `with_transpose` composes half the samples with a transpose.
    Cptp { dim: usize, with_transpose: bool },
}

impl ChannelSampler {
    pub fn state_shape(&self) -> AlgebraShape {
        match *self {
            ChannelSampler::Stochastic { dim } | ChannelSampler::DoublyStochastic { dim } => {
                AlgebraShape::classical(dim)
            }
            ChannelSampler::Cptp { dim, .. } => AlgebraShape::matrix(dim),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> AffineChannel {
        match *self {
            ChannelSampler::Stochastic { dim } => {
                let shape = if rng.random_bool(0.5) { 1.0 } else { 0.1 };
                AffineChannel::Stochastic(random_stochastic_with_shape(dim, dim, shape, rng))
            }
            ChannelSampler::DoublyStochastic { dim } => {
                let weights = random_probs(dim, rng);
                let mut m = DMatrix::zeros(dim, dim);
                let mut perm: Vec<usize> = (0..dim).collect();
                for w in weights {
                    perm.shuffle(rng);
                    for (j, &i) in perm.iter().enumerate() {
                        m[(i, j)] += w;
                    }
                }
                AffineChannel::Stochastic(m)
            }
            ChannelSampler::Cptp { dim, with_transpose } => {
                let env = rng.random_range(1..=dim * dim);
                let kraus = AffineChannel::Kraus(random_kraus(dim, env, rng));
                if with_transpose && rng.random_bool(0.5) {
                    AffineChannel::Compose(vec![kraus, AffineChannel::Transpose])
                } else {
                    kraus
                }
            }
        }
    }
}

/// Column-stochastic `rows × cols` matrix with i.i.d. Gamma(1) entries
/// normalised per column.
pub fn random_stochastic<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    random_stochastic_with_shape(rows, cols, 1.0, rng)
}

/// Columns drawn from the symmetric Dirichlet distribution with parameter
/// `shape`.
pub fn random_stochastic_with_shape<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    shape: f64,
    rng: &mut R,
) -> DMatrix<f64> {
    let gamma = Gamma::new(shape, 1.0).expect("positive shape");
    let mut m = DMatrix::from_fn(rows, cols, |_, _| gamma.sample(rng));
    for (j, mut col) in m.column_iter_mut().enumerate() {
        let s: f64 = col.sum();
        if s > 0.0 {
            col /= s;
        } else {
            col[j % rows] = 1.0;
        }
    }
    m
}

/// Kraus operators of a random channel on `M_dim`: an isometry
/// `V: C^dim → C^dim ⊗ C^env` (first columns of a Haar unitary) split into
/// `env` blocks.
pub fn random_kraus<R: Rng + ?Sized>(dim: usize, env: usize, rng: &mut R) -> Vec<CMatrix> {
    let u = random_unitary(dim * env, rng);
    (0..env)
        .map(|k| CMatrix::from_fn(dim, dim, |i, j| u[(i * env + k, j)]))
        .collect()
}

/// Diagonal pinching `s ↦ Σ |i⟩⟨i| s |i⟩⟨i|` on `M_dim`.
pub fn pinching(dim: usize) -> AffineChannel {
    AffineChannel::Kraus(
        (0..dim)
            .map(|i| {
                let mut k = CMatrix::zeros(dim, dim);
                k[(i, i)] = Complex64::new(1.0, 0.0);
                k
            })
            .collect(),
    )
}

/// Random pairs of full-support states with a random channel each; flags
/// samples where `D(Φs₁, Φs₂) > D(s₁, s₂)`. The first classical violation
/// found is widened by coordinate ascent before it is reported.
pub fn monotonicity_check(
    d: &dyn Divergence,
    sampler: ChannelSampler,
    n_samples: usize,
    seed: u64,
    rel_tol: f64,
) -> Result<CheckReport> {
    let shape = sampler.state_shape();
    let mut report = CheckReport::new("monotone", d.name());
    let mut first: Option<(AffineChannel, State, State)> = None;
    for i in 0..n_samples {
        let mut rng = sample_rng(seed, i as u64);
        let s1 = random_state(&shape, &mut rng);
        let s2 = random_state(&shape, &mut rng);
        let phi = sampler.sample(&mut rng);
        let lhs = d.eval(&apply_channel(&phi, &s1)?, &apply_channel(&phi, &s2)?)?;
        let rhs = d.eval(&s1, &s2)?;
        let violated = report.record(lhs, rhs, excess(lhs, rhs), rel_tol, || {
            json!({ "s1": &s1, "s2": &s2, "channel": phi.to_json() })
        });
        if violated && first.is_none() {
            first = Some((phi, s1, s2));
        }
    }
    if let Some((phi, s1, s2)) = first {
        if shape.is_classical() {
            if let Some(v) = widen_monotonicity_gap(d, &phi, s1, s2)? {
                report.max_gap = report.max_gap.max(v.gap);
                report.violations.insert(0, v);
                report.violations.truncate(MAX_CERTIFICATES);
            }
        }
    }
    Ok(report.finish())
}

/// Moves probability mass between coordinates of `s1` and `s2` while the
/// monotonicity gap grows.
fn widen_monotonicity_gap(
    d: &dyn Divergence,
    phi: &AffineChannel,
    s1: State,
    s2: State,
) -> Result<Option<Violation>> {
    let gap_of = |p: &[f64], q: &[f64]| -> Result<(f64, f64, f64)> {
        let (a, b) = (State::classical(p)?, State::classical(q)?);
        let lhs = d.eval(&apply_channel(phi, &a)?, &apply_channel(phi, &b)?)?;
        let rhs = d.eval(&a, &b)?;
        Ok((excess(lhs, rhs), lhs, rhs))
    };
    let mut p = s1.require_probs()?;
    let mut q = s2.require_probs()?;
    let n = p.len();
    let (mut best, mut lhs, mut rhs) = gap_of(&p, &q)?;
    if !best.is_finite() {
        return Ok(None);
    }
    let mut step: f64 = 0.1;
    while step > 1e-6 {
        let mut improved = false;
        for which in 0..2 {
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let mut cand_p = p.clone();
                    let mut cand_q = q.clone();
                    let v = if which == 0 { &mut cand_p } else { &mut cand_q };
                    let m = step.min(v[i]);
                    if m <= 0.0 {
                        continue;
                    }
                    v[i] -= m;
                    v[j] += m;
                    if let Ok((g, l, r)) = gap_of(&cand_p, &cand_q) {
                        if g.is_finite() && g > best {
                            (best, lhs, rhs) = (g, l, r);
                            p = cand_p;
                            q = cand_q;
                            improved = true;
                        }
                    }
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    Ok(Some(Violation {
        inputs: json!({ "s1": { "probs": p }, "s2": { "probs": q }, "channel": phi.to_json(), "widened": true }),
        lhs,
        rhs,
        gap: best,
    }))
}

/// Equality check `D(Φs₁, Φs₂) = D(s₁, s₂)` for a map with a recovery map on
/// `{s₁, s₂}`.
pub fn sufficiency_check(
    d: &dyn Divergence,
    s1: &State,
    s2: &State,
    pair: &ChannelPair,
    rel_tol: f64,
) -> Result<CheckReport> {
    let err = pair.recovery_error(&[s1.clone(), s2.clone()])?;
    if !(err <= RECOVERY_TOL) {
        return Err(Error::NotARecoveryPair(err));
    }
    let mut report = CheckReport::new("sufficient", d.name());
    let lhs = d.eval(&apply_channel(&pair.forward, s1)?, &apply_channel(&pair.forward, s2)?)?;
    let rhs = d.eval(s1, s2)?;
    let gap = if lhs == rhs { 0.0 } else { (lhs - rhs).abs() };
    report.record(lhs, rhs, gap, rel_tol, || {
        json!({ "s1": s1, "s2": s2, "forward": pair.forward.to_json(), "recovery": pair.recovery.to_json() })
    });
    Ok(report.finish())
}

/// `Φ(s) = tr(ps)·s₁ + (1 − tr(ps))·ρ` and `Ψ` with `σ` in place of `ρ`,
/// where `p` is the support projection of `s₁`. The pair maps
/// `t s₁ + (1−t) σ` to `t s₁ + (1−t) ρ` and back.
pub fn build_locality_pair(s1: &State, sigma: &State, rho: &State) -> Result<ChannelPair> {
    let tol = ToleranceSet::default().supp;
    if !orthogonal(s1, sigma, tol)? {
        return Err(Error::NotOrthogonal("σ is not orthogonal to s₁".into()));
    }
    if !orthogonal(s1, rho, tol)? {
        return Err(Error::NotOrthogonal("ρ is not orthogonal to s₁".into()));
    }
    let p = support_projection(s1, tol)?;
    let q = BlockMatrix::identity(s1.shape()).sub(&p)?;
    Ok(ChannelPair {
        forward: AffineChannel::MeasurePrepare(vec![(p.clone(), s1.clone()), (q.clone(), rho.clone())]),
        recovery: AffineChannel::MeasurePrepare(vec![(p, s1.clone()), (q, sigma.clone())]),
    })
}

fn random_subset<R: Rng + ?Sized>(items: &[usize], rng: &mut R) -> Vec<usize> {
    let mut v = items.to_vec();
    v.shuffle(rng);
    let k = rng.random_range(1..=v.len());
    v.truncate(k);
    v
}

fn probs_on<R: Rng + ?Sized>(n: usize, support: &[usize], rng: &mut R) -> Vec<f64> {
    let w = random_probs(support.len(), rng);
    let mut p = vec![0.0; n];
    for (&i, x) in support.iter().zip(w) {
        p[i] = x;
    }
    p
}

/// Compares `D(s₁, t s₁ + (1−t)σ)` with `D(s₁, t s₁ + (1−t)ρ)` for random
/// classical `s₁` and `σ, ρ` supported off the support of `s₁`. On fewer
/// than three points locality holds trivially and the report is marked
/// vacuous.
pub fn locality_check(
    d: &dyn Divergence,
    dim: usize,
    n_samples: usize,
    seed: u64,
    rel_tol: f64,
) -> Result<CheckReport> {
    let mut report = CheckReport::new("local", d.name());
    if dim < 3 {
        report.vacuous = true;
        return Ok(report.finish());
    }
    let all: Vec<usize> = (0..dim).collect();
    for i in 0..n_samples {
        let mut rng = sample_rng(seed, i as u64);
        let (s1, sigma, rho, t) = if i == 0 {
            (State::vertex(dim, 0).probs().unwrap(), unit(dim, 1), unit(dim, 2), 0.5)
        } else {
            let mut order = all.clone();
            order.shuffle(&mut rng);
            let k = rng.random_range(1..dim);
            let (inside, outside) = order.split_at(k);
            let s1 = probs_on(dim, inside, &mut rng);
            let sigma = probs_on(dim, &random_subset(outside, &mut rng), &mut rng);
            let rho = probs_on(dim, &random_subset(outside, &mut rng), &mut rng);
            let t = rng.random_range(0.01..0.99);
            (s1, sigma, rho, t)
        };
        let blend = |other: &[f64]| -> Vec<f64> {
            s1.iter().zip(other).map(|(a, b)| t * a + (1.0 - t) * b).collect()
        };
        let a = State::classical(&s1)?;
        let lhs = d.eval(&a, &State::classical(&blend(&sigma))?)?;
        let rhs = d.eval(&a, &State::classical(&blend(&rho))?)?;
        let gap = if lhs == rhs { 0.0 } else { (lhs - rhs).abs() };
        report.record(lhs, rhs, gap, rel_tol, || {
            json!({ "s1": s1, "sigma": sigma, "rho": rho, "t": t })
        });
    }
    Ok(report.finish())
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

/// Least-squares fit `D ≈ c·KL`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProportionalityFit {
    pub c: f64,
    /// `max |D − c·KL|` over the samples.
    pub residual: f64,
    pub samples: usize,
}

/// `n` pairs of interior classical states on `dim` points.
pub fn sample_interior_pairs(dim: usize, n: usize, seed: u64) -> Vec<(State, State)> {
    let shape = AlgebraShape::classical(dim);
    (0..n)
        .map(|i| {
            let mut rng: ChaCha8Rng = sample_rng(seed, i as u64);
            (random_state(&shape, &mut rng), random_state(&shape, &mut rng))
        })
        .collect()
}

pub fn kl_proportionality_fit(d: &dyn Divergence, pairs: &[(State, State)]) -> Result<ProportionalityFit> {
    let mut values = Vec::with_capacity(pairs.len());
    for (p, q) in pairs {
        let k = kl(&p.require_probs()?, &q.require_probs()?)?;
        let v = d.eval(p, q)?;
        if !k.is_finite() || !v.is_finite() {
            return Err(Error::DomainError("infinite divergence on a sampled pair".into()));
        }
        values.push((v, k));
    }
    let kk: f64 = values.iter().map(|(_, k)| k * k).sum();
    if kk <= 1e-24 {
        return Err(Error::DegenerateSample("all sampled KL values vanish".into()));
    }
    let c = values.iter().map(|(v, k)| v * k).sum::<f64>() / kk;
    let residual = values
        .iter()
        .map(|(v, k)| (v - c * k).abs())
        .fold(0.0, f64::max);
    Ok(ProportionalityFit {
        c,
        residual,
        samples: values.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::{Kl, QuantumRelativeEntropy, SquaredEuclidean};
    use rand::SeedableRng;

    fn classical(p: &[f64]) -> State {
        State::classical(p).unwrap()
    }

    #[test]
    fn basic_channels() {
        let s = classical(&[0.2, 0.3, 0.5]);
        assert_eq!(apply_channel(&AffineChannel::identity_stochastic(3), &s).unwrap(), s);

        let cycle = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let out = apply_channel(&AffineChannel::Stochastic(cycle), &s).unwrap();
        assert_eq!(out.probs().unwrap(), vec![0.5, 0.2, 0.3]);

        let collapse = AffineChannel::Stochastic(DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 0.0]));
        collapse.validate().unwrap();
        let out = apply_channel(&collapse, &classical(&[0.35, 0.65])).unwrap();
        assert_eq!(out.probs().unwrap(), vec![1.0, 0.0]);

        let bad = AffineChannel::Stochastic(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 0.0]));
        assert!(bad.validate().is_err());
        assert!(matches!(
            apply_channel(&AffineChannel::identity_stochastic(2), &s),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn random_kraus_is_trace_preserving() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for d in [2, 3] {
            let ch = AffineChannel::Kraus(random_kraus(d, d * d, &mut rng));
            ch.validate().unwrap();
            let s = random_state(&AlgebraShape::matrix(d), &mut rng);
            let out = apply_channel(&ch, &s).unwrap();
            assert!(crate::state::validate_state(&out, &ToleranceSet::default()).passed);
        }
    }

    #[test]
    fn kl_is_monotone_and_sqeuclid_is_not() {
        let r = monotonicity_check(&Kl, ChannelSampler::Stochastic { dim: 4 }, 300, 7, VIOLATION_REL_TOL).unwrap();
        assert!(r.passed, "{:?}", r.violations.first());
        let r = monotonicity_check(
            &SquaredEuclidean::plain(),
            ChannelSampler::Stochastic { dim: 3 },
            300,
            7,
            VIOLATION_REL_TOL,
        )
        .unwrap();
        assert!(!r.passed);
        let cert = &r.violations[0];
        assert_eq!(cert.inputs["widened"], serde_json::Value::Bool(true));
        assert!(cert.gap >= r.violations.iter().skip(1).map(|v| v.gap).fold(0.0, f64::max));
    }

    #[test]
    fn identity_channel_never_violates() {
        let id = AffineChannel::identity_stochastic(3);
        for d in crate::divergence::zoo() {
            let mut report = CheckReport::new("monotone", d.name());
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            for _ in 0..20 {
                let (a, b) = (
                    random_state(&AlgebraShape::classical(3), &mut rng),
                    random_state(&AlgebraShape::classical(3), &mut rng),
                );
                let lhs = d.eval(&apply_channel(&id, &a).unwrap(), &apply_channel(&id, &b).unwrap()).unwrap();
                let rhs = d.eval(&a, &b).unwrap();
                report.record(lhs, rhs, excess(lhs, rhs), VIOLATION_REL_TOL, || json!(null));
            }
            assert!(report.finish().passed);
        }
    }

    #[test]
    fn qre_monotone_under_cptp() {
        let r = monotonicity_check(
            &QuantumRelativeEntropy,
            ChannelSampler::Cptp { dim: 2, with_transpose: true },
            100,
            3,
            VIOLATION_REL_TOL,
        )
        .unwrap();
        assert!(r.passed);
    }

    #[test]
    fn permutation_pair_is_sufficient_for_kl() {
        let perm = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
        let pair = ChannelPair {
            forward: AffineChannel::Stochastic(perm.clone()),
            recovery: AffineChannel::Stochastic(perm.transpose()),
        };
        let (a, b) = (classical(&[0.2, 0.5, 0.3]), classical(&[0.6, 0.1, 0.3]));
        assert!(sufficiency_check(&Kl, &a, &b, &pair, 1e-9).unwrap().passed);
    }

    #[test]
    fn non_recovery_pair_rejected() {
        let collapse = AffineChannel::Stochastic(DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 0.0]));
        let pair = ChannelPair {
            forward: collapse.clone(),
            recovery: collapse,
        };
        let r = sufficiency_check(&Kl, &classical(&[0.5, 0.5]), &classical(&[0.2, 0.8]), &pair, 1e-9);
        assert!(matches!(r, Err(Error::NotARecoveryPair(_))));
    }

    #[test]
    fn locality_pair_on_three_points() {
        let pair = build_locality_pair(&State::vertex(3, 0), &State::vertex(3, 1), &State::vertex(3, 2)).unwrap();
        // as a stochastic matrix: point 1 is sent to point 2
        let expected = [[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 1.0, 1.0]];
        for j in 0..3 {
            let out = apply_channel(&pair.forward, &State::vertex(3, j)).unwrap().probs().unwrap();
            for i in 0..3 {
                assert_eq!(out[i], expected[i][j]);
            }
        }
        let s1 = State::vertex(3, 0);
        assert_eq!(apply_channel(&pair.forward, &s1).unwrap(), s1);

        let t = 0.3;
        let mixed = classical(&[t, 1.0 - t, 0.0]);
        assert!(pair.recovery_error(&[s1.clone(), mixed.clone()]).unwrap() < 1e-15);
        assert!(sufficiency_check(&Kl, &s1, &mixed, &pair, 1e-9).unwrap().passed);

        let same = build_locality_pair(&s1, &State::vertex(3, 1), &State::vertex(3, 1)).unwrap();
        assert_eq!(apply_channel(&same.forward, &mixed).unwrap(), mixed);

        assert!(matches!(
            build_locality_pair(&classical(&[0.5, 0.5, 0.0]), &State::vertex(3, 1), &State::vertex(3, 2)),
            Err(Error::NotOrthogonal(_))
        ));
    }

    #[test]
    fn brier_fails_sufficiency_on_locality_pair() {
        let s1 = State::vertex(3, 0);
        let sigma = State::vertex(3, 1);
        let rho = classical(&[0.0, 0.5, 0.5]);
        let pair = build_locality_pair(&s1, &sigma, &rho).unwrap();
        let s2 = classical(&[0.4, 0.6, 0.0]);
        let r = sufficiency_check(&SquaredEuclidean::brier(), &s1, &s2, &pair, VIOLATION_REL_TOL).unwrap();
        assert!(!r.passed);
        assert!(r.violations[0].inputs.get("forward").is_some());
    }

    #[test]
    fn locality() {
        assert!(locality_check(&Kl, 3, 300, 5, VIOLATION_REL_TOL).unwrap().passed);
        let sq = locality_check(&SquaredEuclidean::plain(), 3, 300, 5, VIOLATION_REL_TOL).unwrap();
        assert!(!sq.passed);
        let small = locality_check(&SquaredEuclidean::plain(), 2, 300, 5, VIOLATION_REL_TOL).unwrap();
        assert!(small.passed && small.vacuous);
    }

    #[test]
    fn proportionality_fit() {
        let pairs = sample_interior_pairs(4, 100, 2);
        let three_kl = crate::divergence::Scaled::new(3.0, std::sync::Arc::new(Kl));
        let fit = kl_proportionality_fit(&three_kl, &pairs).unwrap();
        assert!((fit.c - 3.0).abs() < 1e-12 && fit.residual <= 1e-9);

        let fit = kl_proportionality_fit(&SquaredEuclidean::plain(), &pairs).unwrap();
        assert!(fit.residual > 1e-3);

        let same: Vec<(State, State)> = pairs.iter().map(|(p, _)| (p.clone(), p.clone())).collect();
        assert!(matches!(kl_proportionality_fit(&Kl, &same), Err(Error::DegenerateSample(_))));
    }

    #[test]
    fn reports_are_seed_deterministic() {
        let a = monotonicity_check(&SquaredEuclidean::plain(), ChannelSampler::Stochastic { dim: 3 }, 50, 9, VIOLATION_REL_TOL).unwrap();
        let b = monotonicity_check(&SquaredEuclidean::plain(), ChannelSampler::Stochastic { dim: 3 }, 50, 9, VIOLATION_REL_TOL).unwrap();
        assert_eq!(a, b);
    }
}
