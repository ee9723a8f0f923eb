//! Maximum-entropy reconstruction from k-party marginals.
//!
//! For a target `rho` and locality `m` the state of largest entropy sharing
//! every m-party marginal with `rho` lies in the exponential family
//! `exp(sum_i l_i B_i) / Z`, where `B_i` runs over traceless products of
//! Gell-Mann matrices on at most `m` sites. We minimise the convex dual
//! `f(l) = ln Z(l) - l.t` whose gradient is `<B>_sigma - t`.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::Serialize;

use crate::closed_forms::total_correlation;
use crate::error::{Error, Result};
use crate::operators::gell_mann;
use crate::spectrum::{CorrelationSpectrum, Method};
use crate::tensor::{
    digits, kron_all, qutrit_dim, shannon_entropy, CMatrix, DensityMatrix, SiteOperator, C64,
    QUTRIT,
};

/// Sparse nonzero entries `(row, col, value)` of a local matrix.
type Entries = Vec<(usize, usize, C64)>;

#[derive(Debug, Clone)]
struct SupportBlock {
    sites: Vec<usize>,
    /// Full-space indices grouped by the digits outside `sites`; each entry
    /// is `(local index, full index)`.
    groups: Vec<Vec<(usize, usize)>>,
    terms: std::ops::Range<usize>,
}

impl SupportBlock {
    fn new(sites: Vec<usize>, n: usize, terms: std::ops::Range<usize>) -> Self {
        let k = sites.len();
        let mut groups = vec![Vec::with_capacity(qutrit_dim(k)); qutrit_dim(n - k)];
        for full in 0..qutrit_dim(n) {
            let d = digits(full, n);
            let (mut local, mut rest) = (0, 0);
            for (s, &digit) in d.iter().enumerate() {
                if sites.contains(&s) {
                    local = local * QUTRIT + digit;
                } else {
                    rest = rest * QUTRIT + digit;
                }
            }
            groups[rest].push((local, full));
        }
        Self {
            sites,
            groups,
            terms,
        }
    }

    fn local_dim(&self) -> usize {
        qutrit_dim(self.sites.len())
    }

    /// Adds `embed(local)` into `out`.
    fn embed_into(&self, local: &CMatrix, out: &mut CMatrix) {
        for group in &self.groups {
            for &(la, fa) in group {
                for &(lb, fb) in group {
                    out[(fa, fb)] += local[(la, lb)];
                }
            }
        }
    }

    fn marginal(&self, rho: &CMatrix) -> CMatrix {
        let d = self.local_dim();
        let mut out = CMatrix::zeros(d, d);
        for group in &self.groups {
            for &(la, fa) in group {
                for &(lb, fb) in group {
                    out[(la, lb)] += rho[(fa, fb)];
                }
            }
        }
        out
    }
}

/// Traceless Gell-Mann product basis over all supports of size `1..=level`.
#[derive(Debug, Clone)]
pub struct LocalBasis {
    sites: usize,
    level: usize,
    blocks: Vec<SupportBlock>,
    labels: Vec<Vec<usize>>,
    entries: Vec<Entries>,
}

pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for s in start..n {
            cur.push(s);
            rec(s + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

pub fn local_basis(sites: usize, level: usize) -> Result<LocalBasis> {
    if sites == 0 || level == 0 || level > sites {
        return Err(Error::OutOfRange(format!(
            "level {level} must lie in 1..={sites}"
        )));
    }
    let singles: Vec<CMatrix> = (1..=8).map(|k| gell_mann(k).expect("valid index")).collect();
    let mut blocks = Vec::new();
    let mut labels = Vec::new();
    let mut entries = Vec::new();
    for k in 1..=level {
        for support in combinations(sites, k) {
            let start = labels.len();
            for code in 0..8usize.pow(k as u32) {
                // base-8 digits, most significant first
                let label: Vec<usize> = (0..k)
                    .rev()
                    .map(|p| (code / 8usize.pow(p as u32)) % 8 + 1)
                    .collect();
                let m = kron_all(label.iter().map(|&l| &singles[l - 1]));
                let mut e = Entries::new();
                for r in 0..m.nrows() {
                    for c in 0..m.ncols() {
                        let v = m[(r, c)];
                        if v.norm() > 0.0 {
                            e.push((r, c, v));
                        }
                    }
                }
                labels.push(label);
                entries.push(e);
            }
            blocks.push(SupportBlock::new(support, sites, start..labels.len()));
        }
    }
    Ok(LocalBasis {
        sites,
        level,
        blocks,
        labels,
        entries,
    })
}

impl LocalBasis {
    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of distinct supports.
    pub fn support_count(&self) -> usize {
        self.blocks.len()
    }

    fn block_of(&self, i: usize) -> &SupportBlock {
        self.blocks
            .iter()
            .find(|b| b.terms.contains(&i))
            .expect("term index in range")
    }

    pub fn support(&self, i: usize) -> &[usize] {
        &self.block_of(i).sites
    }

    /// Gell-Mann indices (1..=8) of term `i`, one per support site.
    pub fn labels(&self, i: usize) -> &[usize] {
        &self.labels[i]
    }

    /// Term `i` as a site operator.
    pub fn term(&self, i: usize) -> SiteOperator {
        let block = self.block_of(i);
        let d = block.local_dim();
        let mut m = CMatrix::zeros(d, d);
        for &(r, c, v) in &self.entries[i] {
            m[(r, c)] = v;
        }
        SiteOperator::new(block.sites.clone(), m).expect("Gell-Mann products are Hermitian")
    }

    fn check(&self, dim: usize) -> Result<()> {
        let expected = qutrit_dim(self.sites);
        if dim != expected {
            return Err(Error::DimensionMismatch(dim, expected));
        }
        Ok(())
    }

    fn moments(&self, rho: &CMatrix) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for block in &self.blocks {
            let marg = block.marginal(rho);
            for i in block.terms.clone() {
                // tr(m B) = sum_{r,c} B[r,c] m[c,r]
                out[i] = self.entries[i]
                    .iter()
                    .map(|&(r, c, v)| (v * marg[(c, r)]).re)
                    .sum();
            }
        }
        out
    }

    /// `sum_i l_i embed(B_i)`.
    fn exponent(&self, lambda: &[f64]) -> CMatrix {
        let dim = qutrit_dim(self.sites);
        let mut h = CMatrix::zeros(dim, dim);
        for block in &self.blocks {
            let d = block.local_dim();
            let mut local = CMatrix::zeros(d, d);
            for i in block.terms.clone() {
                if lambda[i] != 0.0 {
                    for &(r, c, v) in &self.entries[i] {
                        local[(r, c)] += v * lambda[i];
                    }
                }
            }
            block.embed_into(&local, &mut h);
        }
        h
    }
}

/// `t_i = tr(rho B_i)`.
pub fn expectations(rho: &DensityMatrix, basis: &LocalBasis) -> Result<Vec<f64>> {
    basis.check(rho.dim())?;
    Ok(basis.moments(rho.matrix()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Max-abs marginal mismatch accepted as converged.
    pub grad_tol: f64,
    pub max_iters: usize,
    /// Mixing weights with the maximally mixed state, strictly decreasing.
    pub epsilon_schedule: Vec<f64>,
    /// Sufficient-decrease constant of the Armijo rule.
    pub armijo: f64,
    /// Step shrink factor while backtracking.
    pub backtrack: f64,
    /// Stored curvature pairs for the quasi-Newton direction.
    pub memory: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grad_tol: 1e-7,
            max_iters: 5000,
            epsilon_schedule: vec![1e-2, 1e-3, 1e-4],
            armijo: 1e-4,
            backtrack: 0.5,
            memory: 12,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0) || self.max_iters == 0 {
            return Err(Error::OutOfRange(
                "grad_tol and max_iters must be positive".into(),
            ));
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0)
            || !(self.backtrack > 0.0 && self.backtrack < 1.0)
        {
            return Err(Error::OutOfRange(
                "line-search constants must lie in (0, 1)".into(),
            ));
        }
        if self.epsilon_schedule.is_empty()
            || self
                .epsilon_schedule
                .iter()
                .any(|&e| !(e > 0.0 && e < 1.0))
            || self.epsilon_schedule.windows(2).any(|w| w[1] >= w[0])
        {
            return Err(Error::OutOfRange(
                "epsilon schedule must be strictly decreasing in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct MaxEntResult {
    pub sigma: DensityMatrix,
    pub entropy: f64,
    pub dual_params: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    /// Dual objective at every accepted iterate, starting from `l = 0`.
    pub objective_trace: Vec<f64>,
}

struct DualPoint {
    value: f64,
    grad: Vec<f64>,
    sigma: CMatrix,
    entropy: f64,
}

fn evaluate(basis: &LocalBasis, target: &[f64], lambda: &[f64]) -> Result<DualPoint> {
    let h = basis.exponent(lambda);
    let spec = crate::tensor::eigh(&h)?;
    let top = spec.eigenvalues[0];
    let weights: Vec<f64> = spec.eigenvalues.iter().map(|w| (w - top).exp()).collect();
    let z: f64 = weights.iter().sum();
    let p: Vec<f64> = weights.iter().map(|w| w / z).collect();
    let log_z = top + z.ln();
    let sigma = spec.apply_weights(&p);
    let moments = basis.moments(&sigma);
    let grad: Vec<f64> = moments.iter().zip(target).map(|(m, t)| m - t).collect();
    let value = log_z - dot(lambda, target);
    Ok(DualPoint {
        value,
        grad,
        sigma,
        entropy: shannon_entropy(&p),
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Two-loop recursion for `-H g`.
fn lbfgs_direction(grad: &[f64], pairs: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = grad.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = pairs.back() {
        let scale = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|x| *x *= scale);
    }
    for ((s, y, rho), a) in pairs.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter_mut().for_each(|x| *x = -*x);
    q
}

/// Maximum-entropy state with the same `level`-party marginals as `target`.
pub fn solve(target: &DensityMatrix, level: usize, config: &SolverConfig) -> Result<MaxEntResult> {
    config.validate()?;
    let n = target.sites();
    if level == 0 || level > n {
        return Err(Error::OutOfRange(format!(
            "level {level} must lie in 1..={n}"
        )));
    }
    if level == n {
        let entropy = target.entropy();
        return Ok(MaxEntResult {
            sigma: target.clone(),
            entropy,
            dual_params: Vec::new(),
            residual: 0.0,
            iterations: 0,
            objective_trace: Vec::new(),
        });
    }
    let min_eig = target.eigenvalues().last().copied().unwrap_or(0.0);
    if min_eig <= 1e-14 {
        return Err(Error::RankDeficient(min_eig));
    }
    let basis = local_basis(n, level)?;
    let t = basis.moments(target.matrix());
    let mut lambda = vec![0.0; basis.len()];
    let mut point = evaluate(&basis, &t, &lambda)?;
    let mut trace = vec![point.value];
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iterations = 0;

    while max_abs(&point.grad) > config.grad_tol {
        if iterations >= config.max_iters {
            return Err(Error::NoConvergence {
                iterations,
                residual: max_abs(&point.grad),
            });
        }
        iterations += 1;

        let mut dir = lbfgs_direction(&point.grad, &pairs);
        let mut slope = dot(&dir, &point.grad);
        if !(slope < 0.0) {
            pairs.clear();
            dir = point.grad.iter().map(|g| -g).collect();
            slope = dot(&dir, &point.grad);
        }
        // roundoff allowance on ln Z so that steps near the optimum are not rejected
        let slack = 8.0 * f64::EPSILON * (1.0 + point.value.abs());
        let mut step = if pairs.is_empty() {
            (1.0 / max_abs(&point.grad)).min(1.0)
        } else {
            1.0
        };
        let accepted = loop {
            let trial: Vec<f64> = lambda.iter().zip(&dir).map(|(l, d)| l + step * d).collect();
            let next = evaluate(&basis, &t, &trial)?;
            if next.value <= point.value + config.armijo * step * slope + slack {
                break Some((trial, next));
            }
            step *= config.backtrack;
            if step < 1e-16 {
                break None;
            }
        };
        let Some((trial, next)) = accepted else {
            if pairs.is_empty() {
                return Err(Error::NoConvergence {
                    iterations,
                    residual: max_abs(&point.grad),
                });
            }
            pairs.clear();
            continue;
        };

        let s: Vec<f64> = trial.iter().zip(&lambda).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next.grad.iter().zip(&point.grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-14 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() && sy > 0.0 {
            if pairs.len() == config.memory {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }
        lambda = trial;
        point = next;
        trace.push(point.value);
    }

    Ok(MaxEntResult {
        sigma: DensityMatrix::from_trusted(point.sigma),
        entropy: point.entropy,
        dual_params: lambda,
        residual: max_abs(&point.grad),
        iterations,
        objective_trace: trace,
    })
}

/// Correlations of one regularized copy of the target.
#[derive(Debug, Clone, Serialize)]
pub struct EpsilonRun {
    pub epsilon: f64,
    /// `S(rho~_k)` for `k = 1..=n`.
    pub entropies: Vec<f64>,
    pub spectrum: CorrelationSpectrum,
    /// `sum_i S(rho_eps^(i)) - S(rho_eps)`.
    pub total_correlation: f64,
    pub residuals: Vec<f64>,
    pub iterations: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSpectrum {
    pub runs: Vec<EpsilonRun>,
    /// Linear extrapolation to `eps = 0` through the two smallest weights.
    pub extrapolated: CorrelationSpectrum,
}

/// Irreducible correlations via maximum entropy at every level, for each
/// weight of the regularization schedule.
pub fn regularized_spectrum(
    target: &DensityMatrix,
    config: &SolverConfig,
) -> Result<OracleSpectrum> {
    config.validate()?;
    let n = target.sites();
    if n < 2 {
        return Err(Error::OutOfRange("need at least two sites".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..config.epsilon_schedule.len())
        .flat_map(|e| (1..n).map(move |k| (e, k)))
        .collect();
    let solved: Vec<Result<(usize, usize, f64, f64, usize)>> = jobs
        .par_iter()
        .map(|&(e, k)| {
            let rho = target.mixed_with_identity(config.epsilon_schedule[e]);
            let r = solve(&rho, k, config)?;
            Ok((e, k, r.entropy, r.residual, r.iterations))
        })
        .collect();

    let mut runs: Vec<EpsilonRun> = Vec::new();
    for (e, &eps) in config.epsilon_schedule.iter().enumerate() {
        let rho = target.mixed_with_identity(eps);
        let mut entropies = vec![0.0; n];
        let mut residuals = vec![0.0; n];
        let mut iterations = vec![0; n];
        entropies[n - 1] = rho.entropy();
        for r in &solved {
            let &(je, k, s, res, it) = r.as_ref().map_err(Clone::clone)?;
            if je == e {
                entropies[k - 1] = s;
                residuals[k - 1] = res;
                iterations[k - 1] = it;
            }
        }
        let mut spectrum = CorrelationSpectrum::zeros(n, Method::Oracle);
        for k in 2..=n {
            spectrum.add(k, entropies[k - 2] - entropies[k - 1]);
        }
        let total_correlation = total_correlation(&rho)?;
        spectrum.total = total_correlation;
        runs.push(EpsilonRun {
            epsilon: eps,
            entropies,
            spectrum,
            total_correlation,
            residuals,
            iterations,
        });
    }

    let extrapolated = extrapolate(&runs, n);
    Ok(OracleSpectrum { runs, extrapolated })
}

fn extrapolate(runs: &[EpsilonRun], n: usize) -> CorrelationSpectrum {
    let mut out = CorrelationSpectrum::zeros(n, Method::Oracle);
    let line = |f: &dyn Fn(&EpsilonRun) -> f64| -> f64 {
        match runs {
            [.., a, b] => {
                let (fa, fb) = (f(a), f(b));
                fb - b.epsilon * (fa - fb) / (a.epsilon - b.epsilon)
            }
            [only] => f(only),
            [] => 0.0,
        }
    };
    for k in 2..=n {
        out.add(k, line(&|r: &EpsilonRun| r.spectrum.value(k)));
    }
    out.total = line(&|r: &EpsilonRun| r.total_correlation);
    out
}
