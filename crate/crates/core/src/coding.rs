//! Code-length functions: the Kraft inequality, Shannon and Huffman lengths,
//! the piecewise-linear value function of integer codes, and block codes
//! approximating real-valued lengths.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regret::ActionSet;
use crate::sample_rng;
use crate::state::check_probability_vector;

/// Slack allowed on the Kraft sum of a real-valued length function.
pub const KRAFT_TOL: f64 = 1e-12;

/// Largest alphabet accepted by the exhaustive integer-code search.
pub const MAX_ENUMERATION: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeLengthFunction {
    pub lengths: Vec<f64>,
    pub beta: u32,
}

impl CodeLengthFunction {
    pub fn new(lengths: Vec<f64>, beta: u32) -> Result<Self> {
        check_lengths(&lengths, beta)?;
        Ok(Self { lengths, beta })
    }

    pub fn kraft_sum(&self) -> f64 {
        raw_kraft(&self.lengths, self.beta)
    }

    pub fn is_admissible(&self) -> bool {
        self.kraft_sum() <= 1.0 + KRAFT_TOL
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegerCodeLengthFunction {
    pub lengths: Vec<u32>,
    pub beta: u32,
}

impl IntegerCodeLengthFunction {
    pub fn kraft_sum(&self) -> f64 {
        let l: Vec<f64> = self.lengths.iter().map(|&x| x as f64).collect();
        raw_kraft(&l, self.beta)
    }

    pub fn as_real(&self) -> CodeLengthFunction {
        CodeLengthFunction {
            lengths: self.lengths.iter().map(|&x| x as f64).collect(),
            beta: self.beta,
        }
    }
}

fn check_lengths(lengths: &[f64], beta: u32) -> Result<()> {
    if beta < 2 {
        return Err(Error::InvalidInput(format!("alphabet size {beta} < 2")));
    }
    if lengths.is_empty() {
        return Err(Error::InvalidInput("no code lengths".into()));
    }
    if let Some(l) = lengths.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
        return Err(Error::InvalidInput(format!("code length {l} is not positive")));
    }
    Ok(())
}

fn raw_kraft(lengths: &[f64], beta: u32) -> f64 {
    let b = beta as f64;
    lengths.iter().map(|&l| b.powf(-l)).sum()
}

/// `Σ β^{−ℓ(a)}`.
pub fn kraft_sum(lengths: &[f64], beta: u32) -> Result<f64> {
    check_lengths(lengths, beta)?;
    Ok(raw_kraft(lengths, beta))
}

fn probabilities(p: &[f64]) -> Result<()> {
    check_probability_vector(p).map_err(Error::BadWeights)
}

/// `ℓ(a) = −log_β p_a`.
pub fn shannon_lengths(p: &[f64], beta: u32) -> Result<CodeLengthFunction> {
    probabilities(p)?;
    if p.iter().any(|&x| x <= 0.0) {
        return Err(Error::DomainError("Shannon lengths need full support".into()));
    }
    let lb = (beta as f64).ln();
    let lengths: Vec<f64> = p.iter().map(|&x| -x.ln() / lb).collect();
    if p.len() == 1 {
        // a single symbol has length 0 under the formula; one digit is the floor
        return CodeLengthFunction::new(vec![1.0], beta);
    }
    CodeLengthFunction::new(lengths, beta)
}

pub fn expected_length(lengths: &[f64], p: &[f64]) -> Result<f64> {
    if lengths.len() != p.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} lengths for {} symbols",
            lengths.len(),
            p.len()
        )));
    }
    Ok(lengths.iter().zip(p).map(|(l, q)| l * q).sum())
}

/// Entropy in units of `ln β`.
pub fn entropy_base(p: &[f64], beta: u32) -> f64 {
    let h: f64 = p.iter().map(|&x| crate::state::eta(x)).sum();
    h / (beta as f64).ln()
}

#[derive(PartialEq)]
struct Node {
    weight: f64,
    id: usize,
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.weight.total_cmp(&other.weight).then(self.id.cmp(&other.id))
    }
}

/// Binary Huffman lengths.
pub fn huffman_lengths(p: &[f64]) -> Result<IntegerCodeLengthFunction> {
    huffman_lengths_beta(p, 2)
}

/// `β`-ary Huffman lengths. Ties merge the lowest node ids first; padding
/// symbols of probability zero make every merge take `β` nodes.
pub fn huffman_lengths_beta(p: &[f64], beta: u32) -> Result<IntegerCodeLengthFunction> {
    if beta < 2 {
        return Err(Error::InvalidInput(format!("alphabet size {beta} < 2")));
    }
    probabilities(p)?;
    let n = p.len();
    if n == 1 {
        return Ok(IntegerCodeLengthFunction { lengths: vec![1], beta });
    }
    let b = beta as usize;
    let pad = (b - 1 - (n - 1) % (b - 1)) % (b - 1);
    let mut parent: Vec<usize> = Vec::new();
    let mut heap = BinaryHeap::new();
    // padding ids come first so they are merged before real zero-mass symbols
    for i in 0..pad {
        heap.push(Reverse(Node { weight: 0.0, id: i }));
        parent.push(usize::MAX);
    }
    for (i, &w) in p.iter().enumerate() {
        heap.push(Reverse(Node { weight: w, id: pad + i }));
        parent.push(usize::MAX);
    }
    while heap.len() > 1 {
        let id = parent.len();
        parent.push(usize::MAX);
        let mut weight = 0.0;
        for _ in 0..b {
            let Reverse(node) = heap.pop().expect("heap holds at least β nodes");
            weight += node.weight;
            parent[node.id] = id;
        }
        heap.push(Reverse(Node { weight, id }));
    }
    let lengths = (0..n)
        .map(|i| {
            let mut depth = 0;
            let mut v = pad + i;
            while parent[v] != usize::MAX {
                v = parent[v];
                depth += 1;
            }
            depth
        })
        .collect();
    Ok(IntegerCodeLengthFunction { lengths, beta })
}

/// Optimal integer code for `P` with its value `F(P) = −min Σ ℓ p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegerCodeOptimum {
    pub value: f64,
    pub mean_length: f64,
    pub code: IntegerCodeLengthFunction,
}

/// `F(P) = −min_ℓ Σ ℓ(a) p_a` over binary integer lengths.
pub fn integer_value_function(p: &[f64]) -> Result<IntegerCodeOptimum> {
    optimal_integer_code(p, 2)
}

/// Exhaustive search over sorted length profiles `ℓ₁ ≤ … ≤ ℓ_n ≤ max(1, n−1)`
/// satisfying Kraft. For a fixed profile the best assignment pairs shorter
/// lengths with larger probabilities. Ties are broken towards the
/// lexicographically smallest length vector.
pub fn optimal_integer_code(p: &[f64], beta: u32) -> Result<IntegerCodeOptimum> {
    if beta < 2 {
        return Err(Error::InvalidInput(format!("alphabet size {beta} < 2")));
    }
    probabilities(p)?;
    let n = p.len();
    if n > MAX_ENUMERATION {
        return Err(Error::TooLarge(format!(
            "exhaustive code search is limited to {MAX_ENUMERATION} symbols, got {n}"
        )));
    }
    let max_len = (n.saturating_sub(1)).max(1) as u32;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| p[b].total_cmp(&p[a]).then(a.cmp(&b)));

    let mut best: Option<(f64, Vec<u32>)> = None;
    for profile in kraft_profiles(n, max_len, beta) {
        let mut lengths = vec![0u32; n];
        for (rank, &sym) in order.iter().enumerate() {
            lengths[sym] = profile[rank];
        }
        let mean: f64 = lengths.iter().zip(p).map(|(&l, &q)| l as f64 * q).sum();
        let better = match &best {
            None => true,
            Some((m, l)) => mean < *m - 1e-12 || ((mean - *m).abs() <= 1e-12 && lengths < *l),
        };
        if better {
            best = Some((mean, lengths));
        }
    }
    let (mean, lengths) = best.expect("the all-max profile always satisfies Kraft");
    Ok(IntegerCodeOptimum {
        value: -mean,
        mean_length: mean,
        code: IntegerCodeLengthFunction { lengths, beta },
    })
}

/// Non-decreasing length profiles of size `n` with entries in `1..=max_len`
/// and `Σ β^{−ℓ} ≤ 1`, checked exactly in integer arithmetic.
fn kraft_profiles(n: usize, max_len: u32, beta: u32) -> Vec<Vec<u32>> {
    let b = beta as u128;
    let unit = b.pow(max_len);
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(n);
    fn rec(
        n: usize,
        max_len: u32,
        b: u128,
        unit: u128,
        used: u128,
        cur: &mut Vec<u32>,
        out: &mut Vec<Vec<u32>>,
    ) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        let start = cur.last().copied().unwrap_or(1);
        let remaining = (n - cur.len()) as u128;
        for l in start..=max_len {
            let w = b.pow(max_len - l);
            // every later symbol needs weight at least 1
            if used + w + (remaining - 1) > unit {
                continue;
            }
            cur.push(l);
            rec(n, max_len, b, unit, used + w, cur, out);
            cur.pop();
        }
    }
    rec(n, max_len, b, unit, 0, &mut cur, &mut out);
    out
}

/// Every Kraft-complete binary length vector on `n` symbols, i.e. every
/// non-dominated integer code, as the action set with payoffs `−ℓ`.
pub fn integer_code_action_set(n: usize) -> Result<ActionSet> {
    if n == 0 {
        return Err(Error::InvalidInput("empty alphabet".into()));
    }
    if n > 7 {
        return Err(Error::TooLarge(format!("integer code action set limited to 7 symbols, got {n}")));
    }
    let codes = complete_codes(n, (n.saturating_sub(1)).max(1) as u32);
    let payoffs: Vec<Vec<f64>> = codes
        .iter()
        .map(|l| l.iter().map(|&x| -(x as f64)).collect())
        .collect();
    ActionSet::classical(&payoffs)
}

/// All binary length vectors (in symbol order) with entries in `1..=cap`
/// and Kraft sum exactly one.
pub fn complete_codes(n: usize, cap: u32) -> Vec<Vec<u32>> {
    let unit = 1u128 << cap;
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(n);
    fn rec(n: usize, cap: u32, unit: u128, used: u128, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == n {
            if used == unit {
                out.push(cur.clone());
            }
            return;
        }
        let remaining = (n - cur.len()) as u128;
        for l in 1..=cap {
            let w = 1u128 << (cap - l);
            if used + w + (remaining - 1) > unit {
                continue;
            }
            cur.push(l);
            rec(n, cap, unit, used + w, cur, out);
            cur.pop();
        }
    }
    if n == 1 {
        return vec![vec![1]];
    }
    rec(n, cap, unit, 0, &mut cur, &mut out);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShannonBounds {
    pub entropy: f64,
    pub optimal_length: f64,
    pub upper: f64,
    pub holds: bool,
    pub lengths: Vec<u32>,
}

/// `H_β(P) ≤ L* ≤ H_β(P) + 1` with `L*` from exhaustive search.
pub fn shannon_bounds_check(p: &[f64], beta: u32) -> Result<ShannonBounds> {
    let opt = optimal_integer_code(p, beta)?;
    let h = entropy_base(p, beta);
    let l = opt.mean_length;
    Ok(ShannonBounds {
        entropy: h,
        optimal_length: l,
        upper: h + 1.0,
        holds: h <= l + 1e-12 && l <= h + 1.0 + 1e-12,
        lengths: opt.code.lengths,
    })
}

/// Which strings of length `n` to encode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StringSelection {
    Exhaustive,
    Sampled { count: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockString {
    pub symbols: Vec<usize>,
    pub length: u64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockCodeReport {
    pub block_length: usize,
    pub strings: Vec<BlockString>,
    pub max_deviation: f64,
    /// Kraft sum of the block lengths over all `|A|ⁿ` strings.
    pub block_kraft_sum: Option<f64>,
    /// Whether the per-symbol lengths satisfy Kraft.
    pub admissible: bool,
}

const MAX_EXHAUSTIVE_STRINGS: usize = 1 << 20;

/// Block lengths `⌈Σ ℓ(a_i)⌉` for strings of length `n`, with the
/// per-symbol deviation `(⌈Σℓ⌉ − Σℓ)/n ≤ 1/n`. Inadmissible lengths are
/// encoded all the same and flagged.
pub fn block_code_lengths(
    l: &CodeLengthFunction,
    n: usize,
    selection: StringSelection,
) -> Result<BlockCodeReport> {
    check_lengths(&l.lengths, l.beta)?;
    if n == 0 {
        return Err(Error::InvalidInput("block length must be positive".into()));
    }
    let k = l.lengths.len();
    let strings: Vec<Vec<usize>> = match selection {
        StringSelection::Exhaustive => {
            let total = (k as f64).powi(n as i32);
            if total > MAX_EXHAUSTIVE_STRINGS as f64 {
                return Err(Error::TooLarge(format!("{total} strings")));
            }
            let total = total as usize;
            (0..total)
                .map(|mut idx| {
                    let mut s = vec![0; n];
                    for slot in s.iter_mut().rev() {
                        *slot = idx % k;
                        idx /= k;
                    }
                    s
                })
                .collect()
        }
        StringSelection::Sampled { count, seed } => (0..count)
            .map(|i| {
                let mut rng = sample_rng(seed, i as u64);
                (0..n).map(|_| rng.random_range(0..k)).collect()
            })
            .collect(),
    };
    let mut max_deviation: f64 = 0.0;
    let strings: Vec<BlockString> = strings
        .into_iter()
        .map(|symbols| {
            let total: f64 = symbols.iter().map(|&a| l.lengths[a]).sum();
            let length = total.ceil();
            let deviation = (length - total) / n as f64;
            max_deviation = max_deviation.max(deviation);
            BlockString {
                symbols,
                length: length as u64,
                deviation,
            }
        })
        .collect();
    Ok(BlockCodeReport {
        block_length: n,
        strings,
        max_deviation,
        block_kraft_sum: block_kraft_sum(l, n),
        admissible: l.is_admissible(),
    })
}

/// `Σ_strings β^{−⌈Σℓ⌉}`, summed over symbol-count multisets weighted by
/// their multinomial coefficients.
fn block_kraft_sum(l: &CodeLengthFunction, n: usize) -> Option<f64> {
    let k = l.lengths.len();
    let multisets = binomial(n + k - 1, k - 1);
    if multisets > 2e6 {
        return None;
    }
    let b = l.beta as f64;
    let ln_fact: Vec<f64> = (0..=n)
        .scan(0.0, |acc, i| {
            if i > 0 {
                *acc += (i as f64).ln();
            }
            Some(*acc)
        })
        .collect();
    let mut total = 0.0;
    let mut counts = vec![0usize; k];
    fn rec(
        pos: usize,
        left: usize,
        counts: &mut Vec<usize>,
        l: &[f64],
        b: f64,
        ln_fact: &[f64],
        total: &mut f64,
    ) {
        if pos == counts.len() - 1 {
            counts[pos] = left;
            let n: usize = counts.iter().sum();
            let ln_mult = ln_fact[n] - counts.iter().map(|&c| ln_fact[c]).sum::<f64>();
            let sum: f64 = counts.iter().zip(l).map(|(&c, &x)| c as f64 * x).sum();
            *total += (ln_mult - sum.ceil() * b.ln()).exp();
            return;
        }
        for c in 0..=left {
            counts[pos] = c;
            rec(pos + 1, left - c, counts, l, b, ln_fact, total);
        }
    }
    rec(0, n, &mut counts, &l.lengths, b, &ln_fact, &mut total);
    Some(total)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Canonical prefix code for integer lengths: symbols sorted by
/// `(length, index)` receive consecutive codewords in base `β`.
pub fn canonical_codewords(code: &IntegerCodeLengthFunction) -> Result<Vec<Vec<u32>>> {
    let l: Vec<f64> = code.lengths.iter().map(|&x| x as f64).collect();
    check_lengths(&l, code.beta)?;
    if code.kraft_sum() > 1.0 + KRAFT_TOL {
        return Err(Error::InvalidInput("lengths violate the Kraft inequality".into()));
    }
    let b = code.beta as u128;
    let mut order: Vec<usize> = (0..code.lengths.len()).collect();
    order.sort_by_key(|&i| (code.lengths[i], i));
    let mut words = vec![Vec::new(); code.lengths.len()];
    let mut value: u128 = 0;
    let mut prev_len = 0u32;
    for (rank, &sym) in order.iter().enumerate() {
        let len = code.lengths[sym];
        if rank > 0 {
            value += 1;
        }
        value *= b.pow(len - prev_len);
        prev_len = len;
        let mut digits = vec![0u32; len as usize];
        let mut v = value;
        for d in digits.iter_mut().rev() {
            *d = (v % b) as u32;
            v /= b;
        }
        words[sym] = digits;
    }
    Ok(words)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regret::{bregman_identity_residual, RegretDivergence, ValueFunction};
    use crate::state::State;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    /// Minimum expected length over every integer vector with entries in
    /// `1..=cap` satisfying Kraft.
    fn brute_force(p: &[f64], beta: u32, cap: u32) -> f64 {
        let n = p.len();
        let mut best = f64::INFINITY;
        let mut idx = vec![1u32; n];
        loop {
            let k: f64 = idx.iter().map(|&l| (beta as f64).powi(-(l as i32))).sum();
            if k <= 1.0 + 1e-12 {
                let m: f64 = idx.iter().zip(p).map(|(&l, &q)| l as f64 * q).sum();
                best = best.min(m);
            }
            let mut pos = 0;
            loop {
                if pos == n {
                    return best;
                }
                idx[pos] += 1;
                if idx[pos] <= cap {
                    break;
                }
                idx[pos] = 1;
                pos += 1;
            }
        }
    }

    #[test]
    fn kraft_values() {
        assert_eq!(kraft_sum(&[1.0, 2.0, 2.0], 2).unwrap(), 1.0);
        assert_eq!(kraft_sum(&[1.0, 1.0, 1.0], 2).unwrap(), 1.5);
        assert!(kraft_sum(&[0.0], 2).is_err());
        assert!(kraft_sum(&[1.0], 1).is_err());
    }

    #[test]
    fn shannon() {
        let l = shannon_lengths(&[0.5, 0.25, 0.25], 2).unwrap();
        assert_eq!(l.lengths, vec![1.0, 2.0, 2.0]);
        let l = shannon_lengths(&[1.0 / 3.0; 3], 3).unwrap();
        for x in &l.lengths {
            assert!(close(*x, 1.0, 1e-15));
        }
        let l = shannon_lengths(&[0.1, 0.2, 0.3, 0.4], 2).unwrap();
        assert!(close(l.kraft_sum(), 1.0, 1e-15));
        assert!(shannon_lengths(&[1.0, 0.0], 2).is_err());
    }

    #[test]
    fn huffman_examples() {
        let h = huffman_lengths(&[0.5, 0.25, 0.25]).unwrap();
        assert_eq!(h.lengths, vec![1, 2, 2]);
        assert_eq!(expected_length(&h.as_real().lengths, &[0.5, 0.25, 0.25]).unwrap(), 1.5);
        assert_eq!(huffman_lengths(&[1.0, 0.0]).unwrap().lengths, vec![1, 1]);
        assert_eq!(huffman_lengths(&[0.25; 4]).unwrap().lengths, vec![2, 2, 2, 2]);
        assert_eq!(huffman_lengths(&[1.0]).unwrap().lengths, vec![1]);
    }

    #[test]
    fn expected_length_cases() {
        assert_eq!(expected_length(&[1.0, 1.0], &[0.3, 0.7]).unwrap(), 1.0);
        assert_eq!(expected_length(&[2.0, 3.0], &[1.0, 0.0]).unwrap(), 2.0);
        assert!(expected_length(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn integer_value_examples() {
        let o = integer_value_function(&[0.5, 0.25, 0.25]).unwrap();
        assert_eq!(o.value, -1.5);
        assert_eq!(o.code.lengths, vec![1, 2, 2]);
        assert_eq!(integer_value_function(&[1.0, 0.0]).unwrap().value, -1.0);
        let o = integer_value_function(&[0.5, 0.5]).unwrap();
        assert_eq!((o.value, o.code.lengths), (-1.0, vec![1, 1]));
        assert!(matches!(
            integer_value_function(&[1.0 / 13.0; 13]),
            Err(Error::TooLarge(_))
        ));
    }

    #[test]
    fn enumeration_matches_brute_force() {
        let grid = [0.0, 0.1, 0.15, 0.3, 0.45];
        for &a in &grid {
            for &b in &grid {
                for &c in &grid {
                    let d = 1.0 - a - b - c;
                    if d < 0.0 {
                        continue;
                    }
                    let p = [a, b, c, d];
                    for beta in [2, 3] {
                        let o = optimal_integer_code(&p, beta).unwrap();
                        assert!(close(o.mean_length, brute_force(&p, beta, 5), 1e-12));
                        let h = huffman_lengths_beta(&p, beta).unwrap();
                        let hl: f64 = h.lengths.iter().zip(&p).map(|(&l, q)| l as f64 * q).sum();
                        assert!(close(hl, o.mean_length, 1e-12), "{p:?} β={beta}");
                    }
                }
            }
        }
    }

    #[test]
    fn huffman_optimal_on_three_simplex_grid() {
        for i in 0..=20 {
            for j in 0..=(20 - i) {
                let p = [i as f64 / 20.0, j as f64 / 20.0, (20 - i - j) as f64 / 20.0];
                let h = huffman_lengths(&p).unwrap();
                let hl: f64 = h.lengths.iter().zip(&p).map(|(&l, q)| l as f64 * q).sum();
                assert!(close(hl, brute_force(&p, 2, 4), 1e-12));
            }
        }
    }

    #[test]
    fn shannon_bounds() {
        let b = shannon_bounds_check(&[0.5, 0.25, 0.25], 2).unwrap();
        assert!(b.holds && close(b.optimal_length, b.entropy, 1e-15));
        let b = shannon_bounds_check(&[1.0 / 3.0; 3], 2).unwrap();
        assert!(close(b.entropy, 3f64.log2(), 1e-12));
        assert!(close(b.optimal_length, 5.0 / 3.0, 1e-12));
        assert!(b.holds);
        let b = shannon_bounds_check(&[1.0], 2).unwrap();
        assert_eq!((b.entropy, b.optimal_length, b.upper), (0.0, 1.0, 1.0));
        assert!(b.holds);
    }

    #[test]
    fn non_dominated_lengths_are_bounded() {
        for n in 2..=8 {
            let codes = complete_codes(n, n as u32 + 2);
            assert!(!codes.is_empty());
            assert!(codes.iter().flatten().all(|&l| l as usize <= n - 1), "n={n}");
        }
        assert_eq!(integer_code_action_set(3).unwrap().len(), 3);
    }

    #[test]
    fn block_kraft_closure() {
        for k in 2usize..=4 {
            for n in 1..=4 {
                let lengths: Vec<f64> = (0..k).map(|i| 1.0 + 0.37 * i as f64).collect();
                let l = CodeLengthFunction::new(lengths.clone(), 2).unwrap();
                let mut direct = 0.0;
                let total = k.pow(n as u32);
                for mut idx in 0..total {
                    let mut s = 0.0;
                    for _ in 0..n {
                        s += lengths[idx % k];
                        idx /= k;
                    }
                    direct += 2f64.powf(-s);
                }
                assert!(close(direct, l.kraft_sum().powi(n as i32), 1e-12));
                let rep = block_code_lengths(&l, n, StringSelection::Exhaustive).unwrap();
                let ceil_sum: f64 = rep.strings.iter().map(|s| 2f64.powf(-(s.length as f64))).sum();
                assert!(close(ceil_sum, rep.block_kraft_sum.unwrap(), 1e-12));
                assert!(ceil_sum <= direct + 1e-12);
            }
        }
    }

    #[test]
    fn block_code_examples() {
        let l = CodeLengthFunction { lengths: vec![0.5, 1.7], beta: 2 };
        let rep = block_code_lengths(&l, 10, StringSelection::Exhaustive).unwrap();
        assert!(rep.max_deviation <= 0.1);
        assert!(!rep.admissible);

        let l = CodeLengthFunction::new(vec![1.0, 2.0, 2.0], 2).unwrap();
        let rep = block_code_lengths(&l, 7, StringSelection::Sampled { count: 50, seed: 1 }).unwrap();
        assert_eq!(rep.max_deviation, 0.0);
        assert!(rep.admissible);

        let l = CodeLengthFunction::new(vec![1.3, 1.9], 2).unwrap();
        let rep = block_code_lengths(&l, 1, StringSelection::Exhaustive).unwrap();
        assert!(rep.max_deviation <= 1.0);
        assert_eq!(rep.strings[0].length, 2);
    }

    #[test]
    fn canonical_codes_are_prefix_free() {
        for lengths in [vec![1, 2, 2], vec![2, 2, 2, 2], vec![3, 1, 3, 2], vec![1, 3, 3, 4]] {
            let code = IntegerCodeLengthFunction { lengths: lengths.clone(), beta: 2 };
            let words = canonical_codewords(&code).unwrap();
            for (i, w) in words.iter().enumerate() {
                assert_eq!(w.len() as u32, lengths[i]);
                for (j, v) in words.iter().enumerate() {
                    if i != j {
                        assert!(!v.starts_with(w), "{w:?} prefixes {v:?}");
                    }
                }
            }
        }
        let ternary = IntegerCodeLengthFunction { lengths: vec![1, 1, 2, 2, 2], beta: 3 };
        assert_eq!(canonical_codewords(&ternary).unwrap()[4], vec![2, 2]);
        let bad = IntegerCodeLengthFunction { lengths: vec![1, 1, 1], beta: 2 };
        assert!(canonical_codewords(&bad).is_err());
    }

    #[test]
    fn integer_code_regret_is_not_bregman() {
        let d = RegretDivergence::new(ValueFunction::Finite(integer_code_action_set(3).unwrap()));
        let states = [
            State::classical(&[0.6, 0.2, 0.2]).unwrap(),
            State::classical(&[0.2, 0.6, 0.2]).unwrap(),
        ];
        let mut worst: f64 = 0.0;
        for q in [[0.4, 0.4, 0.2], [0.5, 0.3, 0.2], [0.3, 0.3, 0.4]] {
            let s = State::classical(&q).unwrap();
            let r = bregman_identity_residual(&d, &states, &[0.5, 0.5], &s).unwrap();
            worst = worst.max(r);
        }
        assert!(worst > 1e-3);
    }
}
