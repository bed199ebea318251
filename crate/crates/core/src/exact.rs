//! Exact transient and stationary analysis of the open-boundary ASEP.
//!
//! Two independent transient solvers are shipped on the `2^N` configuration
//! space: uniformization (Poissonized powers of `P = I + Q/Lambda`, with a
//! certified truncation bound from the Poisson tail) and a dense
//! scaling-and-squaring exponential. Each acts as the other's oracle.
//! Stationary measures are likewise built along two independent routes: a
//! detailed-balance product over a spanning tree refined to residual
//! `1e-12`, and the projection of the Mallows element of the Hecke picture.
//!
//! The module also carries the coefficient-space generator of the Hecke
//! random walk `W_t` (left multiplication by `T_k` at rate 1 per edge and
//! `T_0` at rate `alpha`), giving `E[W_t]` by uniformization over the group
//! module, and the exact two-pipeline duality check built from it.

use crate::config::{Config, ConfigError, Distribution};
use crate::hecke::{HeckeAlgebra, HeckeElement, HeckeError, Scalar};
use crate::params::{ModelParams, ParamError};
use crate::perm::{ColorMap, SignedPermutation};
use num_rational::{BigRational, Rational64};
use num_traits::{One, Zero};
use rayon::prelude::*;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExactError {
    #[error("{what} capped at {cap}, got {got}")]
    Cap {
        what: &'static str,
        cap: usize,
        got: usize,
    },
    #[error("iteration failed to converge: {0}")]
    Convergence(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Hecke(#[from] HeckeError),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("exact rational rates required for this operation")]
    NeedExactRates,
}

/// Maximum segment length for `2^N` state-space builds.
pub const GENERATOR_CAP: usize = 14;
/// Maximum segment length for the all-starts TV profile.
pub const ALL_STARTS_CAP: usize = 10;
/// Maximum group size for Hecke-module expectations.
pub const HECKE_MODULE_CAP: usize = 5;
/// Maximum group size for enumerating the Mallows stationary measure.
pub const MALLOWS_STATIONARY_CAP: usize = 6;

/// Sparse CTMC generator on `{0,1}^N` (the `Config::to_index` encoding).
/// Off-diagonal rates are kept per row; the diagonal is the negative row
/// sum, so rows sum to zero by construction.
#[derive(Debug, Clone)]
pub struct Generator {
    n_sites: usize,
    rows: Vec<Vec<(usize, f64)>>,
    diag: Vec<f64>,
    uniform_rate: f64,
}

impl Generator {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Uniformization rate: the largest total exit rate.
    pub fn uniform_rate(&self) -> f64 {
        self.uniform_rate
    }

    /// One application of `P = I + Q/Lambda` to a distribution row vector.
    fn apply_p(&self, v: &[f64], out: &mut [f64]) {
        let lambda = self.uniform_rate;
        for (i, o) in out.iter_mut().enumerate() {
            *o = v[i] * (1.0 + self.diag[i] / lambda);
        }
        for (i, row) in self.rows.iter().enumerate() {
            let vi = v[i];
            if vi == 0.0 {
                continue;
            }
            for &(j, rate) in row {
                out[j] += vi * rate / lambda;
            }
        }
    }

    /// Residual `max_j |(mu Q)_j|` of a candidate stationary vector.
    pub fn stationary_residual(&self, mu: &[f64]) -> f64 {
        let mut res = vec![0.0f64; self.dim()];
        for (i, row) in self.rows.iter().enumerate() {
            res[i] += mu[i] * self.diag[i];
            for &(j, rate) in row {
                res[j] += mu[i] * rate;
            }
        }
        res.iter().fold(0.0f64, |a, &x| a.max(x.abs()))
    }

    /// Worst detailed-balance violation `|mu_i q_ij - mu_j q_ji|` over all
    /// transitions.
    pub fn detailed_balance_residual(&self, mu: &[f64]) -> f64 {
        let mut lookup: HashMap<(usize, usize), f64> = HashMap::new();
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, rate) in row {
                lookup.insert((i, j), rate);
            }
        }
        let mut worst = 0.0f64;
        for (&(i, j), &rate) in &lookup {
            let back = lookup.get(&(j, i)).copied().unwrap_or(0.0);
            worst = worst.max((mu[i] * rate - mu[j] * back).abs());
        }
        worst
    }
}

/// Build the generator of the open-boundary ASEP on `N <= 14` sites:
/// `(..10..) -> (..01..)` at rate 1 and back at rate `q` on each edge;
/// site 1 fills at rate `alpha` and empties at rate `gamma`.
pub fn build_generator(params: &ModelParams, n: usize) -> Result<Generator, ExactError> {
    if n > GENERATOR_CAP {
        return Err(ExactError::Cap {
            what: "generator sites",
            cap: GENERATOR_CAP,
            got: n,
        });
    }
    assert!(n >= 1);
    let dim = 1usize << n;
    let mut rows = vec![Vec::new(); dim];
    let mut diag = vec![0.0; dim];
    for s in 0..dim {
        let mut push = |t: usize, rate: f64| {
            rows[s].push((t, rate));
            diag[s] -= rate;
        };
        for x in 0..n.saturating_sub(1) {
            let a = (s >> x) & 1;
            let b = (s >> (x + 1)) & 1;
            if a == 1 && b == 0 {
                push(s ^ (1 << x) ^ (1 << (x + 1)), 1.0);
            } else if a == 0 && b == 1 {
                push(s ^ (1 << x) ^ (1 << (x + 1)), params.q);
            }
        }
        if s & 1 == 0 {
            push(s | 1, params.alpha);
        } else {
            push(s & !1, params.gamma);
        }
    }
    let uniform_rate = diag.iter().fold(0.0f64, |a, &d| a.max(-d)).max(1e-300);
    Ok(Generator {
        n_sites: n,
        rows,
        diag,
        uniform_rate,
    })
}

/// A transient distribution with a certified truncation bound.
#[derive(Debug, Clone)]
pub struct TransientResult {
    pub dist: Distribution,
    /// Upper bound on the total-variation error from series truncation.
    pub error_bound: f64,
}

/// Distribution at time `t` by uniformization, truncated once the Poisson
/// weights account for all but `tol` of their mass; that tail mass bounds
/// the TV error. Handles large `Lambda t` by keeping the weight recursion
/// in log space.
pub fn transient_distribution(
    gen: &Generator,
    initial: &Distribution,
    t: f64,
    tol: f64,
) -> Result<TransientResult, ExactError> {
    assert!(t >= 0.0 && tol > 0.0);
    let dim = gen.dim();
    assert_eq!(initial.probs().len(), dim);
    let lt = gen.uniform_rate * t;
    let mut v = initial.probs().to_vec();
    if lt == 0.0 {
        return Ok(TransientResult {
            dist: Distribution::new(gen.n_sites, v)?,
            error_bound: 0.0,
        });
    }
    let mut acc = vec![0.0f64; dim];
    let mut log_w = -lt; // log Poisson weight at k = 0
    let log_lt = lt.ln();
    let mut cum = 0.0f64;
    let mut k = 0usize;
    let max_iter = ((lt + 12.0 * lt.sqrt() + 80.0).ceil() as usize) * 2;
    let mut scratch = vec![0.0f64; dim];
    loop {
        let w = log_w.exp();
        if w > 0.0 {
            cum += w;
            for (a, x) in acc.iter_mut().zip(&v) {
                *a += w * x;
            }
        }
        if cum >= 1.0 - tol {
            break;
        }
        k += 1;
        if k > max_iter {
            return Err(ExactError::Convergence(format!(
                "uniformization did not reach mass 1-{tol} in {max_iter} terms (Lambda t = {lt})"
            )));
        }
        log_w += log_lt - (k as f64).ln();
        gen.apply_p(&v, &mut scratch);
        std::mem::swap(&mut v, &mut scratch);
    }
    let tail = (1.0 - cum).max(0.0);
    let sum: f64 = acc.iter().sum();
    for a in &mut acc {
        *a /= sum;
    }
    Ok(TransientResult {
        dist: Distribution::new(gen.n_sites, acc)?,
        error_bound: tail,
    })
}

/// Independent transient solver: dense `e^{tQ}` by scaling and squaring of
/// a Taylor series, then one row-vector product. Quadratic memory; intended
/// for small `N` as an oracle.
pub fn transient_dense(gen: &Generator, initial: &Distribution, t: f64) -> Distribution {
    let dim = gen.dim();
    let mut a = vec![0.0f64; dim * dim];
    for (i, row) in gen.rows.iter().enumerate() {
        a[i * dim + i] = gen.diag[i] * t;
        for &(j, rate) in row {
            a[i * dim + j] += rate * t;
        }
    }
    let norm: f64 = (0..dim)
        .map(|i| (0..dim).map(|j| a[i * dim + j].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let s = norm.max(1e-300).log2().ceil().max(0.0) as u32 + 1;
    let scale = 2f64.powi(-(s as i32));
    for x in &mut a {
        *x *= scale;
    }
    let mut result = mat_exp_taylor(&a, dim);
    for _ in 0..s {
        result = mat_mul(&result, &result, dim);
    }
    let mut out = vec![0.0f64; dim];
    for (i, &pi) in initial.probs().iter().enumerate() {
        if pi != 0.0 {
            for j in 0..dim {
                out[j] += pi * result[i * dim + j];
            }
        }
    }
    for o in &mut out {
        *o = o.max(0.0);
    }
    Distribution::from_weights(gen.n_sites, out).expect("renormalized row")
}

fn mat_mul(a: &[f64], b: &[f64], dim: usize) -> Vec<f64> {
    let mut c = vec![0.0f64; dim * dim];
    for i in 0..dim {
        for k in 0..dim {
            let aik = a[i * dim + k];
            if aik == 0.0 {
                continue;
            }
            let row = &b[k * dim..(k + 1) * dim];
            let dst = &mut c[i * dim..(i + 1) * dim];
            for (d, &bv) in dst.iter_mut().zip(row) {
                *d += aik * bv;
            }
        }
    }
    c
}

fn mat_exp_taylor(a: &[f64], dim: usize) -> Vec<f64> {
    let mut result = vec![0.0f64; dim * dim];
    for i in 0..dim {
        result[i * dim + i] = 1.0;
    }
    let mut term = result.clone();
    for k in 1..=24 {
        term = mat_mul(&term, a, dim);
        let inv = 1.0 / k as f64;
        for x in &mut term {
            *x *= inv;
        }
        for (r, &x) in result.iter_mut().zip(&term) {
            *r += x;
        }
    }
    result
}

/// Stationary distribution via the nullspace of the generator's transpose
/// action.
///
/// The chain is reversible, so a detailed-balance product over a BFS
/// spanning tree (in log space, which survives `q^{-l}`-type dynamic
/// ranges) seeds the vector; power-iteration sweeps with `P = I + Q/Lambda`
/// then refine until the residual `||mu Q||_inf` drops below `1e-12`.
pub fn stationary_nullspace(gen: &Generator) -> Result<Distribution, ExactError> {
    let dim = gen.dim();
    let mut logw = vec![f64::NEG_INFINITY; dim];
    logw[0] = 0.0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    let mut rate_of: HashMap<(usize, usize), f64> = HashMap::new();
    for (i, row) in gen.rows.iter().enumerate() {
        for &(j, rate) in row {
            rate_of.insert((i, j), rate);
        }
    }
    while let Some(i) = queue.pop_front() {
        for &(j, rate) in &gen.rows[i] {
            if logw[j] == f64::NEG_INFINITY {
                let back = rate_of
                    .get(&(j, i))
                    .copied()
                    .ok_or_else(|| ExactError::Convergence("one-way edge in state graph".into()))?;
                logw[j] = logw[i] + rate.ln() - back.ln();
                queue.push_back(j);
            }
        }
    }
    if logw.iter().any(|&w| w == f64::NEG_INFINITY) {
        return Err(ExactError::Convergence("state graph not connected".into()));
    }
    let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut mu: Vec<f64> = logw.iter().map(|&w| (w - max).exp()).collect();
    let sum: f64 = mu.iter().sum();
    for m in &mut mu {
        *m /= sum;
    }
    let mut scratch = vec![0.0f64; dim];
    for _ in 0..10_000 {
        if gen.stationary_residual(&mu) <= 1e-12 {
            return Ok(Distribution::from_weights(gen.n_sites, mu)?);
        }
        gen.apply_p(&mu, &mut scratch);
        std::mem::swap(&mut mu, &mut scratch);
        let sum: f64 = mu.iter().sum();
        for m in &mut mu {
            *m /= sum;
        }
    }
    Err(ExactError::Convergence(format!(
        "stationary residual stuck at {:e}",
        gen.stationary_residual(&mu)
    )))
}

/// Stationary distribution as the particle/hole projection of the Mallows
/// element `M_[0,N]` with `r = gamma/alpha` (negative values are
/// particles). Independent of the generator route.
pub fn stationary_mallows(params: &ModelParams, n: usize) -> Result<Distribution, ExactError> {
    if n > MALLOWS_STATIONARY_CAP {
        return Err(ExactError::Cap {
            what: "Mallows stationary sites",
            cap: MALLOWS_STATIONARY_CAP,
            got: n,
        });
    }
    let r = params.r();
    let q = params.q;
    let mut weights = vec![0.0f64; 1 << n];
    for pi in crate::perm::enumerate_group(n) {
        let lt = pi.length();
        let w = r.powi(-(lt.l0 as i32)) * q.powi(-(lt.l1 as i32));
        weights[pi.project_particles().to_index()] += w;
    }
    Ok(Distribution::from_weights(n, weights)?)
}

/// Which initial states the TV profile maximizes over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileMode {
    /// Every configuration: realizes the definition of `d_N(t)` exactly.
    AllStarts,
    /// Only the empty and full configurations.
    ExtremalStarts,
}

/// Exact `d_N(t) = max_eta TV(P_eta(eta_t in .), mu)` on a time grid.
///
/// Times must be nondecreasing; each start is stepped incrementally across
/// the grid so the total work scales with the final time, not the grid sum.
pub fn exact_tv_profile(
    params: &ModelParams,
    n: usize,
    times: &[f64],
    mode: ProfileMode,
) -> Result<Vec<(f64, f64)>, ExactError> {
    let cap = match mode {
        ProfileMode::AllStarts => ALL_STARTS_CAP,
        ProfileMode::ExtremalStarts => GENERATOR_CAP,
    };
    if n > cap {
        return Err(ExactError::Cap {
            what: "profile sites",
            cap,
            got: n,
        });
    }
    assert!(
        times.windows(2).all(|w| w[0] <= w[1]),
        "times must be sorted ascending"
    );
    let gen = build_generator(params, n)?;
    let stationary = stationary_nullspace(&gen)?;
    let starts: Vec<usize> = match mode {
        ProfileMode::AllStarts => (0..gen.dim()).collect(),
        ProfileMode::ExtremalStarts => {
            vec![Config::empty(n).to_index(), Config::full(n).to_index()]
        }
    };
    let step_tol = 1e-11 / (times.len().max(1) as f64);
    let per_start: Vec<Vec<f64>> = starts
        .par_iter()
        .map(|&s| {
            let mut dist = Distribution::point_mass(&Config::from_index(s, n));
            let mut prev_t = 0.0;
            let mut out = Vec::with_capacity(times.len());
            for &t in times {
                let dt = t - prev_t;
                if dt > 0.0 {
                    dist = transient_distribution(&gen, &dist, dt, step_tol)
                        .expect("uniformization step")
                        .dist;
                    prev_t = t;
                }
                out.push(crate::config::tv_distance(&dist, &stationary).expect("same support"));
            }
            out
        })
        .collect();
    Ok(times
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let d = per_start.iter().map(|row| row[j]).fold(0.0f64, f64::max);
            (t, d)
        })
        .collect())
}

/// Enumerated `B_n` with an index lookup and precomputed left generator
/// actions: the coefficient basis of the Hecke random-walk module.
pub struct GroupModule {
    pub elems: Vec<SignedPermutation>,
    pub index: HashMap<SignedPermutation, usize>,
    /// `actions[k][i] = (j, length_up)` where `s_k * elems[i] = elems[j]`.
    pub actions: Vec<Vec<(usize, bool)>>,
}

impl GroupModule {
    pub fn new(n: usize) -> Self {
        let elems = crate::perm::enumerate_group(n);
        let index: HashMap<_, _> = elems
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, pi)| (pi, i))
            .collect();
        let actions = (0..n)
            .map(|k| {
                elems
                    .iter()
                    .map(|pi| {
                        let moved = pi.apply_generator_left(k).unwrap();
                        (index[&moved], !pi.left_descent(k))
                    })
                    .collect()
            })
            .collect();
        GroupModule {
            elems,
            index,
            actions,
        }
    }

    pub fn dim(&self) -> usize {
        self.elems.len()
    }

    /// Left-multiplication kernel of `T_k` on a coefficient (measure)
    /// vector: mass moves wholesale when the length goes up, and splits
    /// `q_k / 1-q_k` when it goes down. Columns of the induced operator
    /// conserve total mass.
    pub fn apply_left_kernel(&self, k: usize, q_k: f64, v: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (i, &(j, up)) in self.actions[k].iter().enumerate() {
            let m = v[i];
            if m == 0.0 {
                continue;
            }
            if up {
                out[j] += m;
            } else {
                out[j] += q_k * m;
                out[i] += (1.0 - q_k) * m;
            }
        }
    }
}

/// `E[W_t]` for the Hecke walk `W_t` (start `T_id`, left-multiply `T_k` at
/// rate 1 per edge and `T_0` at rate `alpha`), by uniformization over the
/// group module. The result is a probability distribution within `tol`.
pub fn hecke_expectation(
    params: &ModelParams,
    n: usize,
    t: f64,
    tol: f64,
) -> Result<HeckeElement<f64>, ExactError> {
    if n > HECKE_MODULE_CAP {
        return Err(ExactError::Cap {
            what: "Hecke module size",
            cap: HECKE_MODULE_CAP,
            got: n,
        });
    }
    let module = GroupModule::new(n);
    let v = hecke_expectation_on(&module, params, n, t, tol)?;
    let mut out = HeckeElement::zero(n);
    for (i, &c) in v.iter().enumerate() {
        if c != 0.0 {
            out.add_term(module.elems[i].clone(), c);
        }
    }
    Ok(out)
}

fn hecke_expectation_on(
    module: &GroupModule,
    params: &ModelParams,
    n: usize,
    t: f64,
    tol: f64,
) -> Result<Vec<f64>, ExactError> {
    let alpha = params.alpha;
    let r = params.r();
    let lambda = alpha + (n as f64 - 1.0);
    let dim = module.dim();
    let id_idx = module.index[&SignedPermutation::identity(n)];
    let mut v = vec![0.0f64; dim];
    v[id_idx] = 1.0;
    let lt = lambda * t;
    if lt == 0.0 {
        return Ok(v);
    }
    let mut acc = vec![0.0f64; dim];
    let mut cum = 0.0f64;
    let mut log_w = -lt;
    let log_lt = lt.ln();
    let mut k = 0usize;
    let max_iter = ((lt + 12.0 * lt.sqrt() + 80.0).ceil() as usize) * 2;
    let mut kernel_out = vec![0.0f64; dim];
    let mut next = vec![0.0f64; dim];
    loop {
        let w = log_w.exp();
        if w > 0.0 {
            cum += w;
            for (a, x) in acc.iter_mut().zip(&v) {
                *a += w * x;
            }
        }
        if cum >= 1.0 - tol {
            break;
        }
        k += 1;
        if k > max_iter {
            return Err(ExactError::Convergence(
                "Hecke uniformization stalled".into(),
            ));
        }
        log_w += log_lt - (k as f64).ln();
        // P v = (alpha K_0 v + sum_{k>=1} K_k v) / Lambda
        next.fill(0.0);
        module.apply_left_kernel(0, r, &v, &mut kernel_out);
        for (nx, &ko) in next.iter_mut().zip(&kernel_out) {
            *nx += alpha * ko;
        }
        for gk in 1..n {
            module.apply_left_kernel(gk, params.q, &v, &mut kernel_out);
            for (nx, &ko) in next.iter_mut().zip(&kernel_out) {
                *nx += ko;
            }
        }
        for nx in &mut next {
            *nx /= lambda;
        }
        std::mem::swap(&mut v, &mut next);
    }
    let sum: f64 = acc.iter().sum();
    for a in &mut acc {
        *a /= sum;
    }
    Ok(acc)
}

/// Exact-rational partial Taylor sum for `E[W_t]` at small `t`:
/// `sum_{k<=depth} (tL)^k / k!` applied to `T_id`, everything in rational
/// arithmetic, plus a rigorous tail bound from `||L||_1 <= 2 Lambda`.
/// Requires exact rational rates; oracle-grade, intended for small `t`
/// where the truncation bound is tiny.
pub fn hecke_expectation_taylor_exact(
    params: &ModelParams,
    n: usize,
    t: Rational64,
    depth: usize,
) -> Result<(HeckeElement<BigRational>, f64), ExactError> {
    if n > 4 {
        return Err(ExactError::Cap {
            what: "exact Taylor module size",
            cap: 4,
            got: n,
        });
    }
    let exact = params.exact.ok_or(ExactError::NeedExactRates)?;
    let module = GroupModule::new(n);
    let dim = module.dim();
    let to_big =
        |x: Rational64| BigRational::new((*x.numer()).into(), (*x.denom()).into());
    let alpha = to_big(exact.alpha);
    let q = to_big(exact.q);
    let r = to_big(exact.gamma / exact.alpha);
    let tb = to_big(t);
    let id_idx = module.index[&SignedPermutation::identity(n)];
    let mut term: Vec<BigRational> = vec![BigRational::zero(); dim];
    term[id_idx] = BigRational::one();
    let mut acc = term.clone();
    // L v = alpha (K_0 v - v) + sum_{k>=1} (K_k v - v), rational kernels
    let apply_l = |v: &[BigRational]| -> Vec<BigRational> {
        let mut out = vec![BigRational::zero(); dim];
        for gk in 0..n {
            let (qk, scale) = if gk == 0 {
                (r.clone(), alpha.clone())
            } else {
                (q.clone(), BigRational::one())
            };
            for (i, &(j, up)) in module.actions[gk].iter().enumerate() {
                if v[i].is_zero() {
                    continue;
                }
                let m = v[i].clone();
                if up {
                    out[j] = out[j].clone() + scale.clone() * m.clone();
                } else {
                    out[j] = out[j].clone() + scale.clone() * qk.clone() * m.clone();
                    out[i] = out[i].clone()
                        + scale.clone() * (BigRational::one() - qk.clone()) * m.clone();
                }
                out[i] = out[i].clone() - scale.clone() * m;
            }
        }
        out
    };
    for k in 1..=depth {
        let lv = apply_l(&term);
        let factor = tb.clone() / BigRational::from_ratio(k as i64, 1);
        for (dst, x) in term.iter_mut().zip(lv) {
            *dst = x * factor.clone();
        }
        for (a, x) in acc.iter_mut().zip(&term) {
            *a = a.clone() + x.clone();
        }
    }
    let lambda = Scalar::to_f64(&alpha) + (n as f64 - 1.0);
    let z = 2.0 * lambda * Scalar::to_f64(&tb);
    let mut head = 1.0f64;
    for k in 1..=(depth + 1) {
        head *= z / k as f64;
    }
    let tail = if z < (depth + 2) as f64 {
        head / (1.0 - z / (depth + 2) as f64)
    } else {
        f64::INFINITY
    };
    let mut out = HeckeElement::zero(n);
    for (i, c) in acc.into_iter().enumerate() {
        if !c.is_zero() {
            out.add_term(module.elems[i].clone(), c);
        }
    }
    Ok((out, tail))
}

/// The two sides of the exact duality identity at integer threshold `m`
/// ("no hole strictly above m" against "no value above m at a positive
/// position").
///
/// - `p_left`: under the measure of `E[W_t] M_[1,S+N] M_[0,S]`, the
///   probability that the particle/hole projection has its rightmost empty
///   site at or below `m`;
/// - `p_right`: under the measure of `M_[0,S] M_[1,S+N] E[W_t]`, the
///   probability that the four-class projection thresholded at `m` contains
///   no `inf` label.
///
/// The anti-involution exchanges the two pipelines, so the values agree;
/// both products are computed independently here.
pub fn duality_check(
    params: &ModelParams,
    n_seg: usize,
    s_extra: usize,
    m: usize,
    t: f64,
    tol: f64,
) -> Result<(f64, f64), ExactError> {
    let n = n_seg + s_extra;
    if n > HECKE_MODULE_CAP {
        return Err(ExactError::Cap {
            what: "duality group size",
            cap: HECKE_MODULE_CAP,
            got: n,
        });
    }
    assert!(m >= 1, "threshold m must be a positive integer");
    assert!(s_extra >= 1, "need at least one reservoir site");
    let h = HeckeAlgebra::new(n, params.q, params.r());
    let e_wt = hecke_expectation(params, n, t, tol)?;
    let m1 = h.mallows(1, n)?;
    let m0 = h.mallows(0, s_extra)?;
    // left pipeline: E[W_t] * M_[1,n] * M_[0,S]
    let left = h.mul(&h.mul(&e_wt, &m1)?, &m0)?;
    let p_left: f64 = left
        .terms()
        .iter()
        .filter(|(pi, _)| pi.project_particles().rightmost_empty() <= m)
        .map(|(_, c)| *c)
        .sum();
    // right pipeline: M_[0,S] * M_[1,n] * E[W_t]
    let right = h.mul(&m0, &h.mul(&m1, &e_wt)?)?;
    let cmap = ColorMap::four_class(n, m);
    let p_right: f64 = right
        .terms()
        .iter()
        .filter(|(pi, _)| {
            pi.project(&cmap)
                .map(|cfg| {
                    cfg.sites()
                        .iter()
                        .all(|&s| s != crate::config::Species::Hole)
                })
                .unwrap_or(false)
        })
        .map(|(_, c)| *c)
        .sum();
    Ok((p_left, p_right))
}

impl HeckeElement<BigRational> {
    /// Lossy conversion to the float mode (oracle plumbing).
    pub fn into_f64(&self) -> HeckeElement<f64> {
        let mut out = HeckeElement::zero(self.n());
        for (pi, c) in self.terms() {
            out.add_term(pi.clone(), Scalar::to_f64(c));
        }
        out
    }
}
