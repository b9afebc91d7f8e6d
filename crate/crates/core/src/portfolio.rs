//! Constant-rebalanced portfolios: doubling rate, log-optimal portfolios,
//! the regret of investing for the wrong distribution, and the special
//! structure of two-outcome markets and gambling.
//!
//! A market is a `k × m` matrix of price relatives: row `i` is an asset,
//! column `j` an outcome.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::divergence::Divergence;
use crate::error::{Error, Result};
use crate::state::{check_probability_vector, State};
use crate::sufficiency::{monotonicity_check, ChannelSampler, CheckReport, VIOLATION_REL_TOL};

/// Default KKT tolerance for [`log_optimal_portfolio`].
pub const DEFAULT_TOL: f64 = 1e-9;

const MU_ITERATIONS: usize = 2000;
const ACTIVE_SET_ITERATIONS: usize = 500;

/// KKT residual below which a pure portfolio counts as optimal during
/// bisection; absorbs rounding in `(1 − t) + t`.
const BISECTION_KKT_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct PriceRelativeMatrix {
    x: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    matrix: Vec<Vec<f64>>,
}

impl TryFrom<MatrixJson> for PriceRelativeMatrix {
    type Error = Error;
    fn try_from(j: MatrixJson) -> Result<Self> {
        PriceRelativeMatrix::from_rows(&j.matrix)
    }
}

impl From<PriceRelativeMatrix> for MatrixJson {
    fn from(m: PriceRelativeMatrix) -> Self {
        MatrixJson { matrix: m.rows() }
    }
}

impl PriceRelativeMatrix {
    pub fn new(x: DMatrix<f64>) -> Result<Self> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::InvalidInput("empty market".into()));
        }
        if x.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidInput("price relatives must be finite and ≥ 0".into()));
        }
        for j in 0..x.ncols() {
            if x.column(j).iter().all(|&v| v == 0.0) {
                return Err(Error::InvalidInput(format!("outcome {j} pays nothing on every asset")));
            }
        }
        for i in 0..x.nrows() {
            if x.row(i).iter().all(|&v| v == 0.0) {
                return Err(Error::InvalidInput(format!("asset {i} is worthless in every outcome")));
            }
        }
        Ok(Self { x })
    }

    /// One row per asset.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::ShapeMismatch("ragged price relative matrix".into()));
        }
        Self::new(DMatrix::from_fn(k, m, |i, j| rows[i][j]))
    }

    /// Diagonal odds matrix: asset `i` pays `odds[i]` in outcome `i` only.
    pub fn gambling(odds: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(odds)))
    }

    pub fn assets(&self) -> usize {
        self.x.nrows()
    }

    pub fn outcomes(&self) -> usize {
        self.x.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.assets())
            .map(|i| self.x.row(i).iter().copied().collect())
            .collect()
    }

    /// `⟨X_j, b⟩` for every outcome.
    pub fn wealth(&self, b: &[f64]) -> Vec<f64> {
        (0..self.outcomes())
            .map(|j| self.x.column(j).iter().zip(b).map(|(x, w)| x * w).sum())
            .collect()
    }
}

/// Price relatives (2, ½) and (½, 2) for two assets.
pub fn example5_market() -> PriceRelativeMatrix {
    PriceRelativeMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 2.0]]).expect("valid market")
}

fn check_portfolio(x: &PriceRelativeMatrix, b: &[f64]) -> Result<()> {
    if b.len() != x.assets() {
        return Err(Error::ShapeMismatch(format!(
            "portfolio over {} assets, market has {}",
            b.len(),
            x.assets()
        )));
    }
    check_probability_vector(b).map_err(Error::BadWeights)
}

fn check_outcomes(x: &PriceRelativeMatrix, p: &[f64]) -> Result<()> {
    if p.len() != x.outcomes() {
        return Err(Error::ShapeMismatch(format!(
            "distribution over {} outcomes, market has {}",
            p.len(),
            x.outcomes()
        )));
    }
    check_probability_vector(p).map_err(Error::BadWeights)
}

/// `W(b, P) = Σ_j P_j ln⟨X_j, b⟩`, `−∞` when a likely outcome leaves no
/// wealth.
pub fn doubling_rate(x: &PriceRelativeMatrix, b: &[f64], p: &[f64]) -> Result<f64> {
    check_portfolio(x, b)?;
    check_outcomes(x, p)?;
    Ok(rate(x, b, p))
}

fn rate(x: &PriceRelativeMatrix, b: &[f64], p: &[f64]) -> f64 {
    let y = x.wealth(b);
    let mut w = 0.0;
    for (pj, yj) in p.iter().zip(&y) {
        if *pj > 0.0 {
            if *yj <= 0.0 {
                return f64::NEG_INFINITY;
            }
            w += pj * yj.ln();
        }
    }
    w
}

/// `r_i = Σ_j P_j X_ij / ⟨X_j, b⟩`; `None` when some likely outcome has zero
/// wealth.
fn ratios(x: &PriceRelativeMatrix, p: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let y = x.wealth(b);
    let mut r = vec![0.0; x.assets()];
    for j in 0..x.outcomes() {
        if p[j] == 0.0 {
            continue;
        }
        if y[j] <= 0.0 {
            return None;
        }
        for (i, ri) in r.iter_mut().enumerate() {
            *ri += p[j] * x.x[(i, j)] / y[j];
        }
    }
    Some(r)
}

/// `max_i (r_i − 1)₊ + max_{b_i > 0} b_i |r_i − 1|`; `b` is optimal for `P`
/// exactly when this vanishes.
pub fn kkt_residual(x: &PriceRelativeMatrix, p: &[f64], b: &[f64]) -> Result<f64> {
    check_portfolio(x, b)?;
    check_outcomes(x, p)?;
    Ok(kkt(x, p, b))
}

fn kkt(x: &PriceRelativeMatrix, p: &[f64], b: &[f64]) -> f64 {
    let Some(r) = ratios(x, p, b) else {
        return f64::INFINITY;
    };
    let excess = r.iter().map(|ri| (ri - 1.0).max(0.0)).fold(0.0, f64::max);
    let slack = r
        .iter()
        .zip(b)
        .filter(|(_, bi)| **bi > 0.0)
        .map(|(ri, bi)| bi * (ri - 1.0).abs())
        .fold(0.0, f64::max);
    excess + slack
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalPortfolio {
    pub portfolio: Vec<f64>,
    pub doubling_rate: f64,
    pub kkt_residual: f64,
}

/// Maximises `W(·, P)` over the simplex: multiplicative updates from the
/// uniform portfolio, then an active-set Newton refinement that settles
/// boundary optima exactly.
pub fn log_optimal_portfolio(x: &PriceRelativeMatrix, p: &[f64], tol: f64) -> Result<OptimalPortfolio> {
    check_outcomes(x, p)?;
    let k = x.assets();
    let mut b = vec![1.0 / k as f64; k];
    if !rate(x, &b, p).is_finite() {
        return Err(Error::Infeasible);
    }
    let mut res = kkt(x, p, &b);
    for _ in 0..MU_ITERATIONS {
        if res <= tol {
            break;
        }
        let r = ratios(x, p, &b).ok_or(Error::Infeasible)?;
        for (bi, ri) in b.iter_mut().zip(&r) {
            *bi *= ri;
        }
        let s: f64 = b.iter().sum();
        b.iter_mut().for_each(|bi| *bi /= s);
        let next = kkt(x, p, &b);
        if next.is_nan() {
            break;
        }
        // slow, boundary-driven progress: hand over to the Newton refinement
        if next > 0.5 * res && res < 1e-3 {
            res = next;
            break;
        }
        res = next;
    }
    // the updates only approach the boundary; the refinement lands on it
    let refined: Vec<f64> = Problem::simplex(x, p)
        .maximize(DVector::from_vec(b.clone()))?
        .iter()
        .copied()
        .collect();
    let refined_res = kkt(x, p, &refined);
    if refined_res <= tol.max(res) && rate(x, &refined, p) >= rate(x, &b, p) - 1e-15 {
        b = refined;
        res = refined_res;
    }
    if !(res <= tol) {
        return Err(Error::NumericalFailure(format!(
            "log-optimal portfolio reached KKT residual {res:e} > {tol:e}"
        )));
    }
    Ok(OptimalPortfolio {
        doubling_rate: rate(x, &b, p),
        portfolio: b,
        kkt_residual: res,
    })
}

/// `G(P) = max_b W(b, P)`.
pub fn optimal_rate(x: &PriceRelativeMatrix, p: &[f64]) -> Result<f64> {
    Ok(log_optimal_portfolio(x, p, DEFAULT_TOL)?.doubling_rate)
}

/// Concave program `max Σ w ln(⟨X_j, b⟩ + c)` over
/// `{b ≥ 0, b_i = 0 off allowed, E b = e}`.
struct Problem<'a> {
    x: &'a DMatrix<f64>,
    terms: Vec<(usize, f64, f64)>,
    eq: DMatrix<f64>,
}

impl<'a> Problem<'a> {
    fn simplex(x: &'a PriceRelativeMatrix, p: &[f64]) -> Self {
        Problem {
            x: &x.x,
            terms: p
                .iter()
                .enumerate()
                .filter(|(_, pj)| **pj > 0.0)
                .map(|(j, pj)| (j, *pj, 0.0))
                .collect(),
            eq: DMatrix::from_element(1, x.assets(), 1.0),
        }
    }

    fn objective(&self, b: &DVector<f64>) -> f64 {
        let mut v = 0.0;
        for &(j, w, c) in &self.terms {
            let y = self.x.column(j).dot(b) + c;
            if y <= 0.0 {
                return f64::NEG_INFINITY;
            }
            v += w * y.ln();
        }
        v
    }

    /// Gradient and the negated Hessian.
    fn derivatives(&self, b: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let k = b.len();
        let mut g = DVector::zeros(k);
        let mut h = DMatrix::zeros(k, k);
        for &(j, w, c) in &self.terms {
            let col = self.x.column(j);
            let y = col.dot(b) + c;
            g.axpy(w / y, &col, 1.0);
            h.ger(w / (y * y), &col, &col, 1.0);
        }
        (g, h)
    }

    /// Active-set method with Newton steps in the null space of the
    /// equality constraints restricted to the free variables. `b0` must be
    /// feasible with a finite objective.
    fn maximize(&self, b0: DVector<f64>) -> Result<DVector<f64>> {
        let k = b0.len();
        let mut b = b0;
        if !self.objective(&b).is_finite() {
            return Err(Error::NumericalFailure("infeasible starting portfolio".into()));
        }
        let mut fixed: Vec<bool> = b.iter().map(|&v| v <= 0.0).collect();
        for _ in 0..ACTIVE_SET_ITERATIONS {
            let free: Vec<usize> = (0..k).filter(|&i| !fixed[i]).collect();
            let (g, h) = self.derivatives(&b);
            let scale = g.amax().max(1.0);
            let e_free = self.eq.select_columns(&free);
            let z = null_space(&e_free);
            let mut stationary = true;
            if z.ncols() > 0 {
                let g_free = DVector::from_iterator(free.len(), free.iter().map(|&i| g[i]));
                let h_free = h.select_rows(&free).select_columns(&free);
                let rg = z.transpose() * &g_free;
                if rg.amax() > 1e-15 * scale {
                    let hr = z.transpose() * &h_free * &z;
                    let mut d_free = &z * pinv_sym(&hr) * &rg;
                    let mut slope = g_free.dot(&d_free);
                    if !(slope > 0.0) {
                        d_free = &z * &rg;
                        slope = g_free.dot(&d_free);
                    }
                    if slope > 1e-30 {
                        let mut d = DVector::zeros(k);
                        for (pos, &i) in free.iter().enumerate() {
                            d[i] = d_free[pos];
                        }
                        let mut alpha_max = f64::INFINITY;
                        let mut blocking = None;
                        for &i in &free {
                            if d[i] < 0.0 {
                                let a = b[i] / -d[i];
                                if a < alpha_max {
                                    alpha_max = a;
                                    blocking = Some(i);
                                }
                            }
                        }
                        let mut alpha = alpha_max.min(1.0);
                        let f0 = self.objective(&b);
                        let mut accepted = false;
                        while alpha > 1e-18 || alpha == alpha_max {
                            let cand = &b + &d * alpha;
                            let f1 = self.objective(&cand);
                            // a step onto a bound only needs not to lose ground
                            // beyond rounding
                            let onto_bound = alpha == alpha_max && f1 >= f0 - 1e-14 * f0.abs().max(1.0);
                            if onto_bound || f1 >= f0 + 1e-4 * alpha * slope || (f1 > f0 && alpha < 1e-8) {
                                accepted = true;
                                break;
                            }
                            alpha *= 0.5;
                        }
                        if accepted {
                            let hits_bound = alpha == alpha_max;
                            b.axpy(alpha, &d, 1.0);
                            if hits_bound {
                                if let Some(i) = blocking {
                                    b[i] = 0.0;
                                    fixed[i] = true;
                                }
                            }
                            for &i in &free {
                                if b[i] < 0.0 {
                                    b[i] = 0.0;
                                    fixed[i] = true;
                                }
                            }
                            stationary = false;
                        }
                    }
                }
            }
            if !stationary {
                continue;
            }
            // multipliers of the equalities, then of the active bounds
            let nu = if free.is_empty() {
                DVector::zeros(self.eq.nrows())
            } else {
                let g_free = DVector::from_iterator(free.len(), free.iter().map(|&i| g[i]));
                e_free
                    .transpose()
                    .svd(true, true)
                    .solve(&g_free, 1e-12)
                    .map_err(|e| Error::NumericalFailure(e.to_string()))?
            };
            let mut release = None;
            let mut worst = 1e-12 * scale;
            for i in (0..k).filter(|&i| fixed[i]) {
                let lambda = g[i] - self.eq.column(i).dot(&nu);
                if lambda > worst {
                    worst = lambda;
                    release = Some(i);
                }
            }
            match release {
                Some(i) => fixed[i] = false,
                None => return Ok(b),
            }
        }
        Ok(b)
    }
}

/// Orthonormal basis of `{d : E d = 0}`.
fn null_space(e: &DMatrix<f64>) -> DMatrix<f64> {
    let n = e.ncols();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let gram = e.transpose() * e;
    let eig = SymmetricEigen::new(gram);
    let top = eig.eigenvalues.amax().max(1.0);
    let cols: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] <= 1e-11 * top).collect();
    eig.eigenvectors.select_columns(&cols)
}

/// Pseudo-inverse of a symmetric positive semidefinite matrix.
fn pinv_sym(a: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(a.clone());
    let top = eig.eigenvalues.amax();
    let inv = eig
        .eigenvalues
        .map(|l| if l > 1e-13 * top { 1.0 / l } else { 0.0 });
    &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PortfolioRegret {
    pub regret: f64,
    /// Every portfolio optimal for `Q` loses everything in some outcome
    /// that `P` considers possible.
    pub infinite: bool,
    pub optimal_for_p: Vec<f64>,
    /// The `Q`-optimal portfolio that does best under `P`.
    pub chosen_for_q: Vec<f64>,
}

/// `D_G(P, Q) = G(P) − max W(b, P)` over portfolios `b` optimal for `Q`.
pub fn portfolio_regret(x: &PriceRelativeMatrix, p: &[f64], q: &[f64]) -> Result<f64> {
    Ok(portfolio_regret_detailed(x, p, q)?.regret)
}

/// The `Q`-optimal portfolios are exactly those with the optimal wealth
/// `⟨X_j, b⟩ = y_j` on every outcome `Q` considers possible. `W(·, P)` is
/// maximised over that face; if some `P`-possible outcome pays nothing
/// anywhere on the face the regret is `+∞`.
pub fn portfolio_regret_detailed(x: &PriceRelativeMatrix, p: &[f64], q: &[f64]) -> Result<PortfolioRegret> {
    check_outcomes(x, p)?;
    check_outcomes(x, q)?;
    let opt_p = log_optimal_portfolio(x, p, DEFAULT_TOL)?;
    let opt_q = log_optimal_portfolio(x, q, DEFAULT_TOL)?;
    let k = x.assets();
    let bq = DVector::from_vec(opt_q.portfolio.clone());

    let supp_q: Vec<usize> = (0..x.outcomes()).filter(|&j| q[j] > 0.0).collect();
    let open: Vec<usize> = (0..x.outcomes()).filter(|&j| p[j] > 0.0 && q[j] == 0.0).collect();

    let mut eq = DMatrix::zeros(supp_q.len() + 1, k);
    eq.row_mut(0).fill(1.0);
    for (r, &j) in supp_q.iter().enumerate() {
        eq.row_mut(r + 1).copy_from(&x.x.column(j).transpose());
    }

    let mut chosen = bq.clone();
    let mut infinite = false;
    if !open.is_empty() {
        let mut start = DVector::zeros(k);
        for &j in &open {
            let phase1 = Problem {
                x: &x.x,
                terms: vec![(j, 1.0, 1.0)],
                eq: eq.clone(),
            };
            let bj = phase1.maximize(bq.clone())?;
            if x.x.column(j).dot(&bj) <= 1e-12 {
                infinite = true;
                break;
            }
            start += bj;
        }
        if !infinite {
            start /= open.len() as f64;
            let main = Problem {
                x: &x.x,
                terms: open.iter().map(|&j| (j, p[j], 0.0)).collect(),
                eq,
            };
            chosen = main.maximize(start)?;
        }
    }
    let chosen: Vec<f64> = chosen.iter().map(|v| v.max(0.0)).collect();
    let regret = if infinite {
        f64::INFINITY
    } else {
        let w = rate(x, &chosen, p);
        if w == f64::NEG_INFINITY {
            infinite = true;
            f64::INFINITY
        } else {
            (opt_p.doubling_rate - w).max(0.0)
        }
    };
    Ok(PortfolioRegret {
        regret,
        infinite,
        optimal_for_p: opt_p.portfolio,
        chosen_for_q: chosen,
    })
}

/// `b1` dominates `b2` when it pays at least as much in every outcome
/// (strictly more, if `strict`).
pub fn dominates(x: &PriceRelativeMatrix, b1: &[f64], b2: &[f64], strict: bool) -> Result<bool> {
    check_portfolio(x, b1)?;
    check_portfolio(x, b2)?;
    let (y1, y2) = (x.wealth(b1), x.wealth(b2));
    Ok(y1
        .iter()
        .zip(&y2)
        .all(|(a, b)| if strict { a > b } else { a >= b }))
}

/// Closed interval of `t` for which the pure portfolio on asset `j` is
/// optimal when outcome `y` has probability `t`. Assets must be sorted by
/// strictly decreasing `x_i / y_i` (0-based `j`).
pub fn two_asset_thresholds(x: &[f64], y: &[f64], j: usize) -> Result<(f64, f64)> {
    let k = x.len();
    if y.len() != k {
        return Err(Error::ShapeMismatch("price relative vectors differ in length".into()));
    }
    if j >= k {
        return Err(Error::InvalidInput(format!("asset {j} out of range")));
    }
    for i in 0..k {
        if !(x[i] >= 0.0 && y[i] >= 0.0) || (x[i] == 0.0 && y[i] == 0.0) {
            return Err(Error::InvalidInput(format!("asset {i} has invalid price relatives")));
        }
    }
    for i in 1..k {
        // x_{i-1}/y_{i-1} > x_i/y_i without dividing by zero
        if !(x[i - 1] * y[i] > x[i] * y[i - 1]) {
            return Err(Error::InvalidInput(
                "assets must be sorted by strictly decreasing x/y; use prepare_two_outcome".into(),
            ));
        }
    }
    if y[j] == 0.0 {
        return Ok((0.0, 0.0));
    }
    if x[j] == 0.0 {
        return Ok((1.0, 1.0));
    }
    let bound = |other: usize| -> (f64, f64) {
        let a = x[other] / x[j];
        let c = y[other] / y[j];
        (1.0 - a, c - a)
    };
    let high = if j + 1 < k {
        let (num, den) = bound(j + 1);
        (num / den).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let low = if j > 0 {
        let (num, den) = bound(j - 1);
        (num / den).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok((low, high))
}

/// A two-outcome market with dominated assets removed and the rest sorted by
/// decreasing `x/y`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoOutcomeMarket {
    /// Original index of each kept asset.
    pub assets: Vec<usize>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl TwoOutcomeMarket {
    /// `(asset, t_low, t_high)` for every kept asset.
    pub fn intervals(&self) -> Result<Vec<(usize, f64, f64)>> {
        (0..self.assets.len())
            .map(|j| {
                let (lo, hi) = two_asset_thresholds(&self.x, &self.y, j)?;
                Ok((self.assets[j], lo, hi))
            })
            .collect()
    }
}

/// Removes assets dominated by another asset or by a mixture of two
/// neighbours, then sorts by decreasing `x/y`.
pub fn prepare_two_outcome(market: &PriceRelativeMatrix) -> Result<TwoOutcomeMarket> {
    if market.outcomes() != 2 {
        return Err(Error::ShapeMismatch("two outcomes required".into()));
    }
    let m = market.matrix();
    let mut idx: Vec<usize> = (0..market.assets()).collect();
    // decreasing x/y, i.e. a before b when x_a y_b > x_b y_a
    idx.sort_by(|&a, &b| {
        (m[(b, 0)] * m[(a, 1)])
            .total_cmp(&(m[(a, 0)] * m[(b, 1)]))
            .then(a.cmp(&b))
    });
    // equal ratios: keep only the larger asset
    let mut kept: Vec<usize> = Vec::new();
    for i in idx {
        if let Some(&last) = kept.last() {
            if m[(last, 0)] * m[(i, 1)] == m[(i, 0)] * m[(last, 1)] {
                if m[(i, 0)] + m[(i, 1)] > m[(last, 0)] + m[(last, 1)] {
                    kept.pop();
                    kept.push(i);
                }
                continue;
            }
        }
        kept.push(i);
    }
    // dominance by single assets or by mixtures of neighbours: keep the
    // upper-right convex hull of the points (x_i, y_i)
    let mut hull: Vec<usize> = Vec::new();
    for &i in &kept {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (m[(b, 0)] - m[(a, 0)]) * (m[(i, 1)] - m[(a, 1)])
                - (m[(b, 1)] - m[(a, 1)]) * (m[(i, 0)] - m[(a, 0)]);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    // drop assets dominated coordinatewise by another kept asset
    let hull: Vec<usize> = hull
        .iter()
        .copied()
        .filter(|&i| {
            !hull.iter().any(|&o| {
                o != i && m[(o, 0)] >= m[(i, 0)] && m[(o, 1)] >= m[(i, 1)]
            })
        })
        .collect();
    Ok(TwoOutcomeMarket {
        x: hull.iter().map(|&i| m[(i, 0)]).collect(),
        y: hull.iter().map(|&i| m[(i, 1)]).collect(),
        assets: hull,
    })
}

/// Locates the interval of `t` on which the pure portfolio on `asset` is
/// optimal by bisection on the KKT residual. Returns `None` if the asset is
/// never optimal on a grid of 1001 points.
pub fn optimality_interval_by_bisection(
    market: &PriceRelativeMatrix,
    asset: usize,
    tol: f64,
) -> Result<Option<(f64, f64)>> {
    if market.outcomes() != 2 {
        return Err(Error::ShapeMismatch("two outcomes required".into()));
    }
    let mut b = vec![0.0; market.assets()];
    b[asset] = 1.0;
    let optimal = |t: f64| kkt(market, &[1.0 - t, t], &b) <= BISECTION_KKT_TOL;
    let Some(inside) = (0..=1000).map(|i| i as f64 / 1000.0).find(|&t| optimal(t)) else {
        return Ok(None);
    };
    let edge = |mut good: f64, mut bad: f64| {
        if optimal(bad) {
            return bad;
        }
        while (bad - good).abs() > tol {
            let mid = 0.5 * (good + bad);
            if optimal(mid) {
                good = mid;
            } else {
                bad = mid;
            }
        }
        good
    };
    Ok(Some((edge(inside, 0.0), edge(inside, 1.0))))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fairness {
    Fair,
    SuperFair,
    SubFair,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DutchBook {
    pub portfolio: Vec<f64>,
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GamblingReport {
    /// Every asset is a gambling asset or the safe asset, and at least one
    /// gambling asset exists.
    pub is_gambling: bool,
    /// The market is a diagonal odds matrix up to relabelling.
    pub orthogonal: bool,
    pub gambling_assets: Vec<usize>,
    pub safe_assets: Vec<usize>,
    /// Best odds per outcome, when every outcome has a gambling asset.
    pub odds: Option<Vec<f64>>,
    pub fairness: Option<Fairness>,
    pub dutch_book: Option<DutchBook>,
}

/// Classifies the assets of a market. Fairness compares `Σ o_j⁻¹` with 1
/// using the best odds available on each outcome.
pub fn gambling_classifier(x: &PriceRelativeMatrix) -> GamblingReport {
    let m = x.matrix();
    let mut gambling = Vec::new();
    let mut safe = Vec::new();
    let mut other = false;
    let mut best: Vec<Option<(usize, f64)>> = vec![None; x.outcomes()];
    for i in 0..x.assets() {
        let row: Vec<f64> = m.row(i).iter().copied().collect();
        let positive: Vec<usize> = (0..row.len()).filter(|&j| row[j] > 0.0).collect();
        if positive.len() == 1 {
            let j = positive[0];
            gambling.push(i);
            if best[j].is_none_or(|(_, o)| row[j] > o) {
                best[j] = Some((i, row[j]));
            }
        } else if row.iter().all(|&v| v == 1.0) {
            safe.push(i);
        } else {
            other = true;
        }
    }
    let is_gambling = !other && !gambling.is_empty();
    let covered: Option<Vec<(usize, f64)>> = best.iter().copied().collect();
    let orthogonal = is_gambling
        && safe.is_empty()
        && covered.is_some()
        && gambling.len() == x.outcomes();
    let (odds, fairness, dutch_book) = match (is_gambling, covered) {
        (true, Some(c)) => {
            let inv: f64 = c.iter().map(|(_, o)| 1.0 / o).sum();
            let fairness = if (inv - 1.0).abs() <= 1e-12 {
                Fairness::Fair
            } else if inv < 1.0 {
                Fairness::SuperFair
            } else {
                Fairness::SubFair
            };
            let dutch = (fairness == Fairness::SuperFair).then(|| {
                let mut b = vec![0.0; x.assets()];
                for &(i, o) in &c {
                    b[i] = (1.0 / o) / inv;
                }
                DutchBook { portfolio: b, factor: 1.0 / inv }
            });
            (Some(c.iter().map(|(_, o)| *o).collect()), Some(fairness), dutch)
        }
        _ => (None, None, None),
    };
    GamblingReport {
        is_gambling,
        orthogonal,
        gambling_assets: gambling,
        safe_assets: safe,
        odds,
        fairness,
        dutch_book,
    }
}

/// `G(1 − t, t)` on `steps` evenly spaced points of `[0, 1]`.
pub fn g_curve(x: &PriceRelativeMatrix, steps: usize) -> Result<Vec<(f64, f64)>> {
    if x.outcomes() != 2 {
        return Err(Error::ShapeMismatch("the curve needs a two-outcome market".into()));
    }
    if steps < 2 {
        return Err(Error::InvalidInput("at least two points".into()));
    }
    (0..steps)
        .map(|i| {
            let t = i as f64 / (steps - 1) as f64;
            Ok((t, optimal_rate(x, &[1.0 - t, t])?))
        })
        .collect()
}

/// The regret `D_G` of a market as a divergence on its outcome simplex.
#[derive(Debug, Clone)]
pub struct PortfolioDivergence {
    market: PriceRelativeMatrix,
}

impl PortfolioDivergence {
    pub fn new(market: PriceRelativeMatrix) -> Self {
        Self { market }
    }
}

impl Divergence for PortfolioDivergence {
    fn name(&self) -> &str {
        "portfolio"
    }

    fn eval(&self, s1: &State, s2: &State) -> Result<f64> {
        portfolio_regret(&self.market, &s1.require_probs()?, &s2.require_probs()?)
    }

    fn differentiable(&self) -> bool {
        false
    }
}

/// Monotonicity of `D_G` under random stochastic maps of the outcomes.
pub fn monotone_regret_check(x: &PriceRelativeMatrix, n_samples: usize, seed: u64) -> Result<CheckReport> {
    let d = PortfolioDivergence::new(x.clone());
    monotonicity_check(
        &d,
        ChannelSampler::Stochastic { dim: x.outcomes() },
        n_samples,
        seed,
        VIOLATION_REL_TOL,
    )
}
