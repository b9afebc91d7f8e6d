//! States of finite-dimensional algebras.
//!
//! An algebra is a direct sum of full matrix blocks `M_{d_1} ⊕ … ⊕ M_{d_k}`.
//! A state is a block-diagonal density matrix; a classical probability
//! vector is the special case where every block has dimension one.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

const EIGEN_MAX_ITER: usize = 10_000;

/// Numerical tolerances used when validating and decomposing states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceSet {
    pub herm: f64,
    pub trace: f64,
    pub psd: f64,
    pub imag: f64,
    pub supp: f64,
}

impl Default for ToleranceSet {
    fn default() -> Self {
        Self {
            herm: 1e-9,
            trace: 1e-9,
            psd: 1e-10,
            imag: 1e-9,
            supp: 1e-9,
        }
    }
}

/// Block dimensions of a direct sum of matrix algebras.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct AlgebraShape {
    block_dims: Vec<usize>,
}

impl AlgebraShape {
    pub fn new(block_dims: Vec<usize>) -> Result<Self> {
        if block_dims.is_empty() {
            return Err(Error::InvalidInput("algebra shape has no blocks".into()));
        }
        if block_dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidInput("block dimension must be at least 1".into()));
        }
        Ok(Self { block_dims })
    }

    /// `n` one-dimensional blocks: the probability simplex on `n` points.
    pub fn classical(n: usize) -> Self {
        Self::new(vec![1; n.max(1)]).expect("non-empty shape")
    }

    /// A single full matrix block of dimension `d`.
    pub fn matrix(d: usize) -> Self {
        Self::new(vec![d.max(1)]).expect("non-empty shape")
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn num_blocks(&self) -> usize {
        self.block_dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.block_dims.iter().sum()
    }

    pub fn is_classical(&self) -> bool {
        self.block_dims.iter().all(|&d| d == 1)
    }
}

impl<'de> Deserialize<'de> for AlgebraShape {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let dims = Vec::<usize>::deserialize(d)?;
        AlgebraShape::new(dims).map_err(serde::de::Error::custom)
    }
}

/// A block-diagonal complex matrix. Shared representation for states and
/// observables.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix {
    shape: AlgebraShape,
    blocks: Vec<CMatrix>,
}

impl BlockMatrix {
    pub fn new(shape: AlgebraShape, blocks: Vec<CMatrix>) -> Result<Self> {
        if blocks.len() != shape.num_blocks() {
            return Err(Error::ShapeMismatch(format!(
                "{} blocks given for a shape with {} blocks",
                blocks.len(),
                shape.num_blocks()
            )));
        }
        for (i, (b, &d)) in blocks.iter().zip(shape.block_dims()).enumerate() {
            if b.nrows() != d || b.ncols() != d {
                return Err(Error::ShapeMismatch(format!(
                    "block {i} is {}x{}, expected {d}x{d}",
                    b.nrows(),
                    b.ncols()
                )));
            }
        }
        Ok(Self { shape, blocks })
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let blocks = values
            .iter()
            .map(|&v| CMatrix::from_element(1, 1, Complex64::new(v, 0.0)))
            .collect();
        Self {
            shape: AlgebraShape::classical(values.len()),
            blocks,
        }
    }

    pub fn zeros(shape: &AlgebraShape) -> Self {
        let blocks = shape.block_dims().iter().map(|&d| CMatrix::zeros(d, d)).collect();
        Self {
            shape: shape.clone(),
            blocks,
        }
    }

    pub fn identity(shape: &AlgebraShape) -> Self {
        let blocks = shape
            .block_dims()
            .iter()
            .map(|&d| CMatrix::identity(d, d))
            .collect();
        Self {
            shape: shape.clone(),
            blocks,
        }
    }

    pub fn shape(&self) -> &AlgebraShape {
        &self.shape
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    pub fn into_blocks(self) -> Vec<CMatrix> {
        self.blocks
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch(format!(
                "{:?} vs {:?}",
                self.shape.block_dims(),
                other.shape.block_dims()
            )));
        }
        Ok(())
    }

    pub fn trace(&self) -> Complex64 {
        self.blocks.iter().map(|b| b.trace()).sum()
    }

    /// Hilbert-Schmidt pairing `Σ_b tr(a_b s_b)`.
    pub fn pairing(&self, other: &Self) -> Result<Complex64> {
        self.check_same_shape(other)?;
        Ok(self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, s)| {
                // tr(AB) = Σ_ij A_ij B_ji, avoids forming the product
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..a.nrows() {
                    for j in 0..a.ncols() {
                        acc += a[(i, j)] * s[(j, i)];
                    }
                }
                acc
            })
            .sum())
    }

    /// `Σ_i c_i m_i` over matrices of a common shape.
    pub fn linear_combination(terms: &[(f64, &BlockMatrix)]) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidInput("empty linear combination".into()))?
            .1;
        let mut out = BlockMatrix::zeros(first.shape());
        for (c, m) in terms {
            out.check_same_shape(m)?;
            let c = Complex64::new(*c, 0.0);
            for (o, b) in out.blocks.iter_mut().zip(&m.blocks) {
                *o += b * c;
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Self::linear_combination(&[(1.0, self), (-1.0, other)])
    }

    pub fn scale(&self, c: f64) -> Self {
        let c = Complex64::new(c, 0.0);
        Self {
            shape: self.shape.clone(),
            blocks: self.blocks.iter().map(|b| b * c).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            shape: self.shape.clone(),
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a * b).collect(),
        })
    }

    pub fn adjoint(&self) -> Self {
        Self {
            shape: self.shape.clone(),
            blocks: self.blocks.iter().map(|b| b.adjoint()).collect(),
        }
    }

    /// Largest entry of `A - A†` over all blocks.
    pub fn hermiticity_error(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                let d = b - b.adjoint();
                d.iter().map(|z| z.norm()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    /// Real diagonal entries when every block is 1x1.
    pub fn classical_values(&self) -> Option<Vec<f64>> {
        if !self.shape.is_classical() {
            return None;
        }
        Some(self.blocks.iter().map(|b| b[(0, 0)].re).collect())
    }

    /// Applies a real function to the spectrum of every (Hermitian) block.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                let (vals, vecs) = hermitian_eigen(b)?;
                let diag = CMatrix::from_diagonal(&DVector::from_iterator(
                    vals.len(),
                    vals.iter().map(|&v| Complex64::new(f(v), 0.0)),
                ));
                Ok(&vecs * diag * vecs.adjoint())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            shape: self.shape.clone(),
            blocks,
        })
    }
}

/// Eigen-decomposition of a Hermitian matrix. The input is symmetrised first
/// so tiny anti-Hermitian roundoff does not leak into the result.
pub fn hermitian_eigen(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = m.nrows();
    if n == 1 {
        return Ok((vec![m[(0, 0)].re], CMatrix::identity(1, 1)));
    }
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, EIGEN_MAX_ITER)
        .ok_or_else(|| Error::NumericalFailure(format!("eigensolver did not converge ({n}x{n})")))?;
    Ok((eig.eigenvalues.iter().copied().collect(), eig.eigenvectors))
}

/// A density matrix: Hermitian, positive semidefinite, unit trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BlockJson", into = "BlockJson")]
pub struct State(BlockMatrix);

/// A self-adjoint element of the algebra, paired with states via `tr(a s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BlockJson", into = "BlockJson")]
pub struct Observable(BlockMatrix);

impl State {
    /// Builds a state and validates it with the default tolerances.
    pub fn new(matrix: BlockMatrix) -> Result<Self> {
        let s = State(matrix);
        let report = validate_state(&s, &ToleranceSet::default());
        if !report.passed {
            return Err(Error::InvalidInput(format!("not a valid state: {report}")));
        }
        Ok(s)
    }

    /// Wraps a matrix without checking the state invariants.
    pub fn new_unchecked(matrix: BlockMatrix) -> Self {
        State(matrix)
    }

    pub fn classical(probs: &[f64]) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidInput("empty probability vector".into()));
        }
        Self::new(BlockMatrix::diagonal(probs))
    }

    /// Point mass on outcome `i` of an `n`-point simplex.
    pub fn vertex(n: usize, i: usize) -> Self {
        let mut p = vec![0.0; n];
        p[i] = 1.0;
        State(BlockMatrix::diagonal(&p))
    }

    pub fn uniform(n: usize) -> Self {
        State(BlockMatrix::diagonal(&vec![1.0 / n as f64; n]))
    }

    /// A single-block density matrix.
    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        let shape = AlgebraShape::new(vec![m.nrows()])?;
        Self::new(BlockMatrix::new(shape, vec![m])?)
    }

    /// Projection onto a (not necessarily normalised) vector.
    pub fn pure(vector: &[Complex64]) -> Result<Self> {
        let v = DVector::from_column_slice(vector);
        let norm = v.norm();
        if norm == 0.0 {
            return Err(Error::InvalidInput("zero vector".into()));
        }
        let v = v / Complex64::new(norm, 0.0);
        Self::from_matrix(&v * v.adjoint())
    }

    pub fn maximally_mixed(shape: &AlgebraShape) -> Self {
        State(BlockMatrix::identity(shape).scale(1.0 / shape.total_dim() as f64))
    }

    pub fn shape(&self) -> &AlgebraShape {
        self.0.shape()
    }

    pub fn blocks(&self) -> &[CMatrix] {
        self.0.blocks()
    }

    pub fn matrix(&self) -> &BlockMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> BlockMatrix {
        self.0
    }

    /// The probability vector, if the state is classical.
    pub fn probs(&self) -> Option<Vec<f64>> {
        self.0.classical_values()
    }

    pub(crate) fn require_probs(&self) -> Result<Vec<f64>> {
        self.probs()
            .ok_or_else(|| Error::ShapeMismatch("a classical state is required".into()))
    }
}

impl Observable {
    pub fn new(matrix: BlockMatrix) -> Result<Self> {
        let err = matrix.hermiticity_error();
        if err > ToleranceSet::default().herm {
            return Err(Error::InvalidInput(format!(
                "observable is not self-adjoint (error {err:e})"
            )));
        }
        Ok(Observable(matrix))
    }

    pub fn new_unchecked(matrix: BlockMatrix) -> Self {
        Observable(matrix)
    }

    /// A payoff vector on a finite outcome space.
    pub fn classical(values: &[f64]) -> Self {
        Observable(BlockMatrix::diagonal(values))
    }

    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        let shape = AlgebraShape::new(vec![m.nrows()])?;
        Self::new(BlockMatrix::new(shape, vec![m])?)
    }

    pub fn identity(shape: &AlgebraShape) -> Self {
        Observable(BlockMatrix::identity(shape))
    }

    pub fn shape(&self) -> &AlgebraShape {
        self.0.shape()
    }

    pub fn blocks(&self) -> &[CMatrix] {
        self.0.blocks()
    }

    pub fn matrix(&self) -> &BlockMatrix {
        &self.0
    }

    pub fn values(&self) -> Option<Vec<f64>> {
        self.0.classical_values()
    }
}

/// Descending eigenvalues of a state, concatenated over blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    NonHermitian,
    TraceMismatch,
    Negativity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantViolation {
    pub kind: ViolationKind,
    pub block: Option<usize>,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<InvariantViolation>,
    pub passed: bool,
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.passed {
            return write!(f, "valid");
        }
        let parts: Vec<String> = self
            .violations
            .iter()
            .map(|v| format!("{:?} ({:e})", v.kind, v.magnitude))
            .collect();
        write!(f, "{}", parts.join(", "))
    }
}

/// Checks hermiticity, trace and positivity, reporting every violated
/// invariant together with its magnitude.
pub fn validate_state(s: &State, tol: &ToleranceSet) -> ValidationReport {
    let mut violations = Vec::new();
    for (i, b) in s.blocks().iter().enumerate() {
        let herm = (b - b.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > tol.herm {
            violations.push(InvariantViolation {
                kind: ViolationKind::NonHermitian,
                block: Some(i),
                magnitude: herm,
            });
        }
        match hermitian_eigen(b) {
            Ok((vals, _)) => {
                let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
                if min < -tol.psd {
                    violations.push(InvariantViolation {
                        kind: ViolationKind::Negativity,
                        block: Some(i),
                        magnitude: -min,
                    });
                }
            }
            Err(_) => violations.push(InvariantViolation {
                kind: ViolationKind::Negativity,
                block: Some(i),
                magnitude: f64::NAN,
            }),
        }
    }
    let trace_err = (s.matrix().trace().re - 1.0).abs();
    if !(trace_err <= tol.trace) {
        violations.push(InvariantViolation {
            kind: ViolationKind::TraceMismatch,
            block: None,
            magnitude: trace_err,
        });
    }
    ValidationReport {
        passed: violations.is_empty(),
        violations,
    }
}

/// Expected value `⟨a, s⟩ = tr(a s)`.
pub fn inner(a: &Observable, s: &State) -> Result<f64> {
    Ok(a.matrix().pairing(s.matrix())?.re)
}

pub fn spectrum(s: &State) -> Result<Spectrum> {
    let mut eigenvalues = Vec::with_capacity(s.shape().total_dim());
    for b in s.blocks() {
        eigenvalues.extend(hermitian_eigen(b)?.0);
    }
    eigenvalues.sort_by(|a, b| b.total_cmp(a));
    Ok(Spectrum { eigenvalues })
}

/// `-x ln x`, with eigenvalues in `[-τ_psd, 0)` clamped to zero.
pub(crate) fn eta(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.ln()
    }
}

/// von Neumann entropy in nats; Shannon entropy for classical states.
pub fn entropy(s: &State) -> Result<f64> {
    if let Some(p) = s.probs() {
        return Ok(p.iter().map(|&x| eta(x)).sum());
    }
    Ok(spectrum(s)?.eigenvalues.iter().map(|&x| eta(x)).sum())
}

/// Convex combination `Σ t_i s_i`.
pub fn mix(states: &[State], weights: &[f64]) -> Result<State> {
    if states.len() != weights.len() || states.is_empty() {
        return Err(Error::BadWeights(format!(
            "{} states with {} weights",
            states.len(),
            weights.len()
        )));
    }
    check_probability_vector(weights).map_err(Error::BadWeights)?;
    let terms: Vec<(f64, &BlockMatrix)> =
        weights.iter().copied().zip(states.iter().map(State::matrix)).collect();
    Ok(State(BlockMatrix::linear_combination(&terms)?))
}

pub(crate) fn check_probability_vector(w: &[f64]) -> std::result::Result<(), String> {
    if w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err("entries must be finite and non-negative".into());
    }
    let sum: f64 = w.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(format!("entries sum to {sum}"));
    }
    Ok(())
}

/// `s₁ s₂ = s₂ s₁ = 0`, tested blockwise in Frobenius norm.
pub fn orthogonal(s1: &State, s2: &State, tol: f64) -> Result<bool> {
    let ab = s1.matrix().mul(s2.matrix())?;
    let ba = s2.matrix().mul(s1.matrix())?;
    Ok(ab.frobenius_norm() <= tol && ba.frobenius_norm() <= tol)
}

/// Projection onto the support of `s` (eigenvectors with eigenvalue above `tol`).
pub fn support_projection(s: &State, tol: f64) -> Result<BlockMatrix> {
    let blocks = s
        .blocks()
        .iter()
        .map(|b| {
            let (vals, vecs) = hermitian_eigen(b)?;
            let d = b.nrows();
            let mut p = CMatrix::zeros(d, d);
            for (k, &v) in vals.iter().enumerate() {
                if v > tol {
                    let col = vecs.column(k);
                    p += &col * col.adjoint();
                }
            }
            Ok(p)
        })
        .collect::<Result<Vec<_>>>()?;
    BlockMatrix::new(s.shape().clone(), blocks)
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    // Unit total variance, so |z|² is Exp(1).
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Full-support random state: `G G†` per block with complex Gaussian `G`,
/// normalised to unit total trace. On a classical shape this is the flat
/// Dirichlet distribution.
pub fn random_state<R: Rng + ?Sized>(shape: &AlgebraShape, rng: &mut R) -> State {
    let blocks: Vec<CMatrix> = shape
        .block_dims()
        .iter()
        .map(|&d| {
            let g = CMatrix::from_fn(d, d, |_, _| complex_gaussian(rng));
            let m = &g * g.adjoint();
            (&m + m.adjoint()) * Complex64::new(0.5, 0.0)
        })
        .collect();
    let m = BlockMatrix::new(shape.clone(), blocks).expect("shape-consistent blocks");
    let tr = m.trace().re;
    State(m.scale(1.0 / tr))
}

/// Flat-Dirichlet probability vector on `n` points.
pub fn random_probs<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let g: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            -(1.0 - u).ln()
        })
        .collect();
    let s: f64 = g.iter().sum();
    g.into_iter().map(|x| x / s).collect()
}

/// Haar-distributed unitary of size `d` (QR of a Ginibre matrix with the
/// phase of `R`'s diagonal absorbed).
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| complex_gaussian(rng));
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Replaces block `block` of `s` by `U s_b U†`.
pub fn conjugate_block(s: &State, block: usize, u: &CMatrix) -> Result<State> {
    let mut blocks = s.blocks().to_vec();
    let b = blocks
        .get(block)
        .ok_or_else(|| Error::ShapeMismatch(format!("no block {block}")))?;
    if u.nrows() != b.nrows() || u.ncols() != b.ncols() {
        return Err(Error::ShapeMismatch("unitary size does not match block".into()));
    }
    blocks[block] = u * b * u.adjoint();
    Ok(State(BlockMatrix::new(s.shape().clone(), blocks)?))
}

// JSON layout: {"shape": [d...], "blocks": [[[re, im], ...], ...]} with each
// block row-major, or the classical shorthand {"probs": [...]}.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum BlockJson {
    Full {
        shape: Vec<usize>,
        blocks: Vec<Vec<[f64; 2]>>,
    },
    Classical {
        probs: Vec<f64>,
    },
    Payoffs {
        values: Vec<f64>,
    },
}

impl TryFrom<BlockJson> for BlockMatrix {
    type Error = Error;

    fn try_from(j: BlockJson) -> Result<Self> {
        match j {
            BlockJson::Classical { probs: v } | BlockJson::Payoffs { values: v } => {
                if v.is_empty() {
                    return Err(Error::InvalidInput("empty vector".into()));
                }
                Ok(BlockMatrix::diagonal(&v))
            }
            BlockJson::Full { shape, blocks } => {
                let shape = AlgebraShape::new(shape)?;
                if blocks.len() != shape.num_blocks() {
                    return Err(Error::ShapeMismatch("block count does not match shape".into()));
                }
                let mats = blocks
                    .into_iter()
                    .zip(shape.block_dims())
                    .map(|(entries, &d)| {
                        if entries.len() != d * d {
                            return Err(Error::ShapeMismatch(format!(
                                "block of dimension {d} needs {} entries, got {}",
                                d * d,
                                entries.len()
                            )));
                        }
                        Ok(CMatrix::from_row_iterator(
                            d,
                            d,
                            entries.iter().map(|[re, im]| Complex64::new(*re, *im)),
                        ))
                    })
                    .collect::<Result<Vec<_>>>()?;
                BlockMatrix::new(shape, mats)
            }
        }
    }
}

fn to_json(m: BlockMatrix, shorthand: impl Fn(Vec<f64>) -> BlockJson) -> BlockJson {
    let exact_real = m
        .blocks()
        .iter()
        .all(|b| b[(0, 0)].im == 0.0 && b[(0, 0)].im.is_sign_positive());
    if m.shape().is_classical() && exact_real {
        return shorthand(m.classical_values().expect("classical"));
    }
    let shape = m.shape().block_dims().to_vec();
    let blocks = m
        .into_blocks()
        .into_iter()
        .map(|b| {
            let d = b.nrows();
            let mut out = Vec::with_capacity(d * d);
            for i in 0..d {
                for j in 0..d {
                    out.push([b[(i, j)].re, b[(i, j)].im]);
                }
            }
            out
        })
        .collect();
    BlockJson::Full { shape, blocks }
}

impl TryFrom<BlockJson> for State {
    type Error = Error;
    fn try_from(j: BlockJson) -> Result<Self> {
        State::new(BlockMatrix::try_from(j)?)
    }
}

impl From<State> for BlockJson {
    fn from(s: State) -> Self {
        to_json(s.0, |probs| BlockJson::Classical { probs })
    }
}

impl TryFrom<BlockJson> for Observable {
    type Error = Error;
    fn try_from(j: BlockJson) -> Result<Self> {
        Observable::new(BlockMatrix::try_from(j)?)
    }
}

impl From<Observable> for BlockJson {
    fn from(a: Observable) -> Self {
        to_json(a.0, |values| BlockJson::Payoffs { values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn qubit(entries: [[f64; 2]; 2]) -> State {
        State::new_unchecked(
            BlockMatrix::new(
                AlgebraShape::matrix(2),
                vec![CMatrix::from_row_slice(
                    2,
                    2,
                    &[c(entries[0][0], 0.0), c(entries[0][1], 0.0), c(entries[1][0], 0.0), c(entries[1][1], 0.0)],
                )],
            )
            .unwrap(),
        )
    }

    #[test]
    fn maximally_mixed_qubit_is_valid() {
        let s = State::maximally_mixed(&AlgebraShape::matrix(2));
        assert!(validate_state(&s, &ToleranceSet::default()).passed);
    }

    #[test]
    fn trace_excess_reported() {
        let s = qubit([[0.6, 0.0], [0.0, 0.5]]);
        let r = validate_state(&s, &ToleranceSet::default());
        assert!(!r.passed);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].kind, ViolationKind::TraceMismatch);
        assert!((r.violations[0].magnitude - 0.1).abs() < 1e-12);
    }

    #[test]
    fn negativity_reported() {
        let s = qubit([[1.01, 0.0], [0.0, -0.01]]);
        let r = validate_state(&s, &ToleranceSet::default());
        assert!(!r.passed);
        let neg = r
            .violations
            .iter()
            .find(|v| v.kind == ViolationKind::Negativity)
            .unwrap();
        assert!((neg.magnitude - 0.01).abs() < 1e-12);
    }

    #[test]
    fn non_hermitian_reported() {
        let m = CMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.1, 0.0), c(0.0, 0.0), c(0.5, 0.0)]);
        let s = State::new_unchecked(BlockMatrix::new(AlgebraShape::matrix(2), vec![m]).unwrap());
        let r = validate_state(&s, &ToleranceSet::default());
        assert!(r.violations.iter().any(|v| v.kind == ViolationKind::NonHermitian));
    }

    #[test]
    fn inner_products() {
        let shape = AlgebraShape::matrix(2);
        let s = State::maximally_mixed(&shape);
        assert!((inner(&Observable::identity(&shape), &s).unwrap() - 1.0).abs() < 1e-15);

        let a = Observable::classical(&[1.0, -1.0]);
        let p = State::classical(&[0.25, 0.75]).unwrap();
        assert!((inner(&a, &p).unwrap() + 0.5).abs() < 1e-15);

        let z = Observable::from_matrix(CMatrix::from_row_slice(
            2,
            2,
            &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)],
        ))
        .unwrap();
        let s = qubit([[0.9, 0.0], [0.0, 0.1]]);
        assert!((inner(&z, &s).unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn inner_rejects_shape_mismatch() {
        let a = Observable::classical(&[1.0, 2.0, 3.0]);
        let s = State::uniform(2);
        assert!(matches!(inner(&a, &s), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn spectrum_cases() {
        let s = State::classical(&[0.2, 0.5, 0.3]).unwrap();
        assert_eq!(spectrum(&s).unwrap().eigenvalues, vec![0.5, 0.3, 0.2]);

        let pure = State::pure(&[c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        let sp = spectrum(&pure).unwrap().eigenvalues;
        assert!((sp[0] - 1.0).abs() < 1e-12 && sp[1].abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_unitary(2, &mut rng);
        let s = qubit([[0.7, 0.0], [0.0, 0.3]]);
        let t = conjugate_block(&s, 0, &u).unwrap();
        let sp = spectrum(&t).unwrap().eigenvalues;
        assert!((sp[0] - 0.7).abs() < 1e-12 && (sp[1] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn entropy_cases() {
        let pure = State::pure(&[c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        assert!(entropy(&pure).unwrap().abs() < 1e-12);
        assert!((entropy(&State::uniform(4)).unwrap() - 4f64.ln()).abs() < 1e-15);
        let mm = State::maximally_mixed(&AlgebraShape::matrix(2));
        assert!((entropy(&mm).unwrap() - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn mixing() {
        let s = State::classical(&[0.3, 0.7]).unwrap();
        assert_eq!(mix(&[s.clone()], &[1.0]).unwrap(), s);

        let up = State::pure(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let down = State::pure(&[c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let m = mix(&[up, down], &[0.5, 0.5]).unwrap();
        assert_eq!(m, State::maximally_mixed(&AlgebraShape::matrix(2)));

        let m = mix(&[State::vertex(2, 0), State::vertex(2, 1)], &[1.0 / 3.0, 2.0 / 3.0]).unwrap();
        assert_eq!(m.probs().unwrap(), vec![1.0 / 3.0, 2.0 / 3.0]);

        assert!(matches!(
            mix(&[State::vertex(2, 0)], &[0.5]),
            Err(Error::BadWeights(_))
        ));
        assert!(matches!(
            mix(&[State::vertex(2, 0), State::vertex(3, 0)], &[0.5, 0.5]),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn orthogonality() {
        assert!(orthogonal(&State::vertex(2, 0), &State::vertex(2, 1), 1e-12).unwrap());
        let s = State::classical(&[0.4, 0.6]).unwrap();
        assert!(!orthogonal(&s, &s, 1e-12).unwrap());
        let zero = State::pure(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let plus = State::pure(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!(!orthogonal(&zero, &plus, 1e-12).unwrap());
        // |0⟩⟨0| |+⟩⟨+| = |0⟩⟨+|/√2
        let prod = zero.matrix().mul(plus.matrix()).unwrap();
        assert!((prod.frobenius_norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let shape = AlgebraShape::new(vec![1, 2, 3]).unwrap();
        let s = random_state(&shape, &mut rng);
        let text = serde_json::to_string(&s).unwrap();
        let back: State = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);

        let p = State::classical(&random_probs(5, &mut rng)).unwrap();
        let text = serde_json::to_string(&p).unwrap();
        assert!(text.starts_with("{\"probs\""));
        assert_eq!(serde_json::from_str::<State>(&text).unwrap(), p);
    }

    #[test]
    fn json_rejects_invalid_state() {
        assert!(serde_json::from_str::<State>(r#"{"probs": [0.6, 0.5]}"#).is_err());
        assert!(serde_json::from_str::<State>(r#"{"shape": [2], "blocks": [[[1,0]]]}"#).is_err());
    }
}
