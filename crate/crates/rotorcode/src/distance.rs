//! Distance estimation under the rotor weight models: exact X distance by
//! increasing-weight shell search, qudit-reduction lower bounds, Z-distance
//! upper bounds by continuous spreading of a logical phase over Z stabilizers,
//! and lower bounds from support-disjoint sets of unit-entry representatives.
//!
//! All searches and restarts reduce deterministically: minima are taken by
//! (weight, lexicographic witness) after collecting candidates, so results do
//! not depend on thread scheduling.

use crate::code::RotorCode;
use crate::exact::{snf_context, IntMatrix, SmithContext};
use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::{PI, TAU};
use thiserror::Error;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Noise-derived weight model: Z phases diffuse with spread sigma, X windings
/// jump on a ladder with ratio p_jump.
#[derive(Clone, Copy, Debug)]
pub struct WeightModel {
    pub sigma: f64,
    pub p_jump: f64,
}

impl WeightModel {
    pub fn new(sigma: f64, p_jump: f64) -> Self {
        assert!(sigma > 0.0 && p_jump > 0.0 && p_jump < 1.0);
        WeightModel { sigma, p_jump }
    }

    /// Inverse-temperature scale of the Z potential.
    pub fn beta_z(&self) -> f64 {
        1.0 / (self.sigma * self.sigma)
    }

    /// Inverse-temperature scale of the X potential.
    pub fn beta_x(&self) -> f64 {
        -self.p_jump.ln()
    }
}

/// W_X(m) = sum |m_j|.
pub fn weight_x(v: &[i64]) -> u64 {
    v.iter().map(|&x| x.unsigned_abs()).sum()
}

/// W_Z(phi) = sum sin^2(phi_j / 2).
pub fn weight_z(phi: &[f64]) -> f64 {
    phi.iter().map(|&p| (p / 2.0).sin().powi(2)).sum()
}

/// Run `f` over 0..n collecting all produced items in index order.
#[cfg(feature = "parallel")]
fn map_collect<T: Send, F: Fn(usize) -> Vec<T> + Sync + Send>(n: usize, f: F) -> Vec<T> {
    (0..n).into_par_iter().map(f).collect::<Vec<_>>().into_iter().flatten().collect()
}

#[cfg(not(feature = "parallel"))]
fn map_collect<T, F: Fn(usize) -> Vec<T>>(n: usize, f: F) -> Vec<T> {
    (0..n).flat_map(f).collect()
}

/// Greedy column ordering that keeps the set of "open" checks small during
/// the depth-first shell search: prefer columns that close open rows and
/// avoid opening new ones, so partial syndromes become fully determined (and
/// prunable) as early as possible.
fn search_column_order(hz: &[Vec<i64>], n: usize) -> Vec<usize> {
    let mut remaining: Vec<usize> = hz
        .iter()
        .map(|row| row.iter().filter(|&&x| x != 0).count())
        .collect();
    let mut open = vec![false; hz.len()];
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let mut best: Option<((i64, i64, usize), usize)> = None;
        for c in 0..n {
            if placed[c] {
                continue;
            }
            let mut opens = 0i64;
            let mut closes = 0i64;
            for (r, row) in hz.iter().enumerate() {
                if row[c] != 0 {
                    if !open[r] {
                        opens += 1;
                    }
                    if remaining[r] == 1 {
                        closes += 1;
                    }
                }
            }
            let key = ((opens - closes, opens, c), c);
            if best.as_ref().map(|(k, _)| key.0 < *k).unwrap_or(true) {
                best = Some(key);
            }
        }
        let c = best.expect("column available").1;
        placed[c] = true;
        order.push(c);
        for (r, row) in hz.iter().enumerate() {
            if row[c] != 0 {
                open[r] = true;
                remaining[r] -= 1;
            }
        }
    }
    order
}

/// Shared data for the shell searches: integer Z checks (columns permuted by
/// `perm` so checks close early), suffix maxima for pruning, and the Smith
/// context of [L_X; H_X] for class tests (in original coordinates).
struct SearchContext {
    n: usize,
    /// Search order: position i of the DFS is original column perm[i].
    perm: Vec<usize>,
    /// Z checks with columns in search order.
    hz: Vec<Vec<i64>>,
    /// Z checks in original column order.
    hz_orig: Vec<Vec<i64>>,
    /// suffix_max[r][j] = max_{j' >= j} |hz[r][j']| in search order.
    suffix_max: Vec<Vec<i64>>,
    class_ctx: SmithContext,
    k: usize,
    free_rank: usize,
    orders: Vec<BigInt>,
}

impl SearchContext {
    fn new(code: &RotorCode) -> Self {
        let n = code.n();
        let hz_orig = code.hz().to_i64_rows();
        let perm = search_column_order(&hz_orig, n);
        let hz: Vec<Vec<i64>> = hz_orig
            .iter()
            .map(|row| perm.iter().map(|&c| row[c]).collect())
            .collect();
        let suffix_max = hz
            .iter()
            .map(|row| {
                let mut s = vec![0i64; n + 1];
                for j in (0..n).rev() {
                    s[j] = s[j + 1].max(row[j].abs());
                }
                s
            })
            .collect();
        let stacked = code.hom.lx.vstack(code.hx());
        SearchContext {
            n,
            perm,
            hz,
            hz_orig,
            suffix_max,
            class_ctx: snf_context(&stacked),
            k: code.k(),
            free_rank: code.hom.free_rank,
            orders: code.hom.torsion_orders.clone(),
        }
    }

    /// Map a vector from search order back to original coordinates.
    fn to_original(&self, v: &[i64]) -> Vec<i64> {
        let mut out = vec![0i64; self.n];
        for (i, &c) in self.perm.iter().enumerate() {
            out[c] = v[i];
        }
        out
    }

    /// Class coordinates of a zero-syndrome vector, torsion entries reduced
    /// into [0, d).
    fn class_coords(&self, v: &[i64]) -> Vec<BigInt> {
        let big: Vec<BigInt> = v.iter().map(|&x| BigInt::from(x)).collect();
        let sol = self
            .class_ctx
            .solve_left(&big)
            .expect("zero-syndrome vectors decompose over logicals plus stabilizers");
        let mut coords = sol[..self.k].to_vec();
        for i in self.free_rank..self.k {
            let d = &self.orders[i - self.free_rank];
            coords[i] = ((&coords[i] % d) + d) % d;
        }
        coords
    }

    fn is_nontrivial(&self, v: &[i64]) -> bool {
        self.class_coords(v).iter().any(|c| !c.is_zero())
    }
}

/// Depth-first enumeration of v with sum |v_j| = budget, positions from `pos`,
/// running Z syndrome maintained incrementally; zero-syndrome leaves are
/// passed to `sink`.
fn shell_dfs(
    ctx: &SearchContext,
    pos: usize,
    budget: u64,
    v: &mut Vec<i64>,
    syn: &mut Vec<i64>,
    max_amp: u64,
    sink: &mut dyn FnMut(&[i64]),
) {
    if budget == 0 {
        if syn.iter().all(|&s| s == 0) {
            sink(v);
        }
        return;
    }
    if pos == ctx.n {
        return;
    }
    // Remaining checks can move each syndrome entry by at most
    // budget * suffix_max; anything larger is unreachable.
    for (r, &s) in syn.iter().enumerate() {
        if s.unsigned_abs() > budget * ctx.suffix_max[r][pos] as u64 {
            return;
        }
    }
    // Zero at this position.
    shell_dfs(ctx, pos + 1, budget, v, syn, max_amp, sink);
    // Nonzero amplitudes, cost |a|.
    let top = budget.min(max_amp) as i64;
    for mag in 1..=top {
        for sign in [1i64, -1] {
            let a = sign * mag;
            v[pos] = a;
            for (r, s) in syn.iter_mut().enumerate() {
                *s += a * ctx.hz[r][pos];
            }
            shell_dfs(ctx, pos + 1, budget - mag as u64, v, syn, max_amp, sink);
            for (r, s) in syn.iter_mut().enumerate() {
                *s -= a * ctx.hz[r][pos];
            }
            v[pos] = 0;
        }
    }
}

/// Collect all zero-syndrome vectors of exact weight `w`, one representative
/// per +-v pair (positive entry at the first support position in search
/// order), split by first-support position for parallelism. Results are in
/// original coordinates.
fn shell_candidates(ctx: &SearchContext, w: u64, max_amp: u64, unit_only: bool) -> Vec<Vec<i64>> {
    let amp_cap = if unit_only { 1 } else { max_amp };
    map_collect(ctx.n, |first| {
        let mut out = Vec::new();
        let top = if unit_only { 1 } else { w.min(amp_cap) };
        for mag in 1..=top as i64 {
            let mut v = vec![0i64; ctx.n];
            let mut syn = vec![0i64; ctx.hz.len()];
            v[first] = mag;
            for (r, s) in syn.iter_mut().enumerate() {
                *s += mag * ctx.hz[r][first];
            }
            shell_dfs(ctx, first + 1, w - mag as u64, &mut v, &mut syn, amp_cap, &mut |hit| {
                out.push(ctx.to_original(hit))
            });
        }
        out
    })
}

/// Exact X distance with witness, or None if no nontrivial logical exists at
/// weight <= max_weight (then d_X > max_weight).
#[derive(Clone, Debug, Serialize)]
pub struct XDistance {
    pub d_x: u64,
    /// Lexicographically smallest minimal-weight witness.
    pub witness: Vec<i64>,
}

pub fn x_distance_exact(code: &RotorCode, max_weight: u64) -> Option<XDistance> {
    assert!(max_weight >= 1);
    if code.k() == 0 {
        return None;
    }
    let ctx = SearchContext::new(code);
    for w in 1..=max_weight {
        let mut hits: Vec<Vec<i64>> = shell_candidates(&ctx, w, w, false)
            .into_iter()
            .filter(|v| ctx.is_nontrivial(v))
            .collect();
        if !hits.is_empty() {
            // One representative per +-v pair was enumerated; compare both
            // signs to find the lexicographically smallest witness.
            let mut best: Vec<Vec<i64>> = Vec::with_capacity(2 * hits.len());
            for v in hits.drain(..) {
                best.push(v.iter().map(|x| -x).collect());
                best.push(v);
            }
            best.sort();
            return Some(XDistance { d_x: w, witness: best.swap_remove(0) });
        }
    }
    None
}

/// True when `v` stays a nontrivial logical after reducing windings mod l.
pub fn survives_mod(code: &RotorCode, v: &[i64], l: u64) -> bool {
    let stacked = code.hx().vstack(&IntMatrix::identity(code.n()).scale(&BigInt::from(l)));
    let big: Vec<BigInt> = v.iter().map(|&x| BigInt::from(x)).collect();
    crate::exact::solve_left(&stacked, &big).is_none()
}

/// Minimal Hamming weight of a nontrivial logical of the mod-l qudit code, or
/// None when none exists at weight <= max_weight.
pub fn qudit_x_distance(code: &RotorCode, l: u64, max_weight: u64) -> Option<u64> {
    assert!(l >= 2);
    let n = code.n();
    let hz_orig = code.hz().to_i64_rows();
    let perm = search_column_order(&hz_orig, n);
    // Only the minimal weight is reported, so the search can run entirely in
    // permuted coordinates; triviality is checked on the unpermuted vector.
    let hz: Vec<Vec<i64>> = hz_orig
        .iter()
        .map(|row| perm.iter().map(|&c| row[c]).collect())
        .collect();
    let li = l as i64;
    let stacked = code.hx().vstack(&IntMatrix::identity(n).scale(&BigInt::from(l)));
    let ctx = snf_context(&stacked);
    let trivial = |v: &[i64]| -> bool {
        let mut orig = vec![BigInt::zero(); n];
        for (i, &c) in perm.iter().enumerate() {
            orig[c] = BigInt::from(v[i]);
        }
        ctx.solve_left(&orig).is_some()
    };
    // Suffix flags: does any check touch columns >= j.
    let touched: Vec<Vec<bool>> = hz
        .iter()
        .map(|row| {
            let mut t = vec![false; n + 1];
            for j in (0..n).rev() {
                t[j] = t[j + 1] || row[j] % li != 0;
            }
            t
        })
        .collect();
    fn dfs(
        n: usize,
        l: i64,
        hz: &[Vec<i64>],
        touched: &[Vec<bool>],
        pos: usize,
        remaining: u64,
        v: &mut Vec<i64>,
        syn: &mut Vec<i64>,
        first: bool,
        found: &mut bool,
        trivial: &dyn Fn(&[i64]) -> bool,
    ) {
        if *found {
            return;
        }
        if remaining == 0 {
            if syn.iter().all(|&s| s % l == 0) && !trivial(v) {
                *found = true;
            }
            return;
        }
        if pos == n {
            return;
        }
        for (r, &s) in syn.iter().enumerate() {
            if s % l != 0 && !touched[r][pos] {
                return;
            }
        }
        dfs(n, l, hz, touched, pos + 1, remaining, v, syn, first, found, trivial);
        // Negation symmetry: the first nonzero residue is restricted to 1..=l/2.
        let top = if first { l / 2 } else { l - 1 };
        for a in 1..=top {
            v[pos] = a;
            for (r, s) in syn.iter_mut().enumerate() {
                *s += a * hz[r][pos];
            }
            dfs(n, l, hz, touched, pos + 1, remaining - 1, v, syn, false, found, trivial);
            for (r, s) in syn.iter_mut().enumerate() {
                *s -= a * hz[r][pos];
            }
            v[pos] = 0;
        }
    }
    for w in 1..=max_weight {
        let mut v = vec![0i64; n];
        let mut syn = vec![0i64; hz.len()];
        let mut found = false;
        dfs(n, li, &hz, &touched, 0, w, &mut v, &mut syn, true, &mut found, &trivial);
        if found {
            return Some(w);
        }
    }
    None
}

/// Best qudit-reduction lower bound on d_X over the dimensions where the
/// minimal witness survives reduction.
pub fn theorem2_bound(code: &RotorCode, witness: &[i64], dims: &[u64], max_weight: u64) -> Option<u64> {
    dims.iter()
        .filter(|&&l| survives_mod(code, witness, l))
        .filter_map(|&l| qudit_x_distance(code, l, max_weight))
        .max()
}

#[derive(Debug, Error)]
pub enum RepSetError {
    #[error("empty representative set")]
    Empty,
    #[error("representative {0} has an entry outside -1..=1")]
    NotUnit(usize),
    #[error("representative {0} does not classify as the expected logical")]
    BadClass(usize),
    #[error("representatives {0} and {1} have overlapping support")]
    Overlapping(usize, usize),
    #[error("no unit-entry representative found within the search budget")]
    NoUnitRepresentative,
}

/// A set of unit-entry representatives of one X logical class, used in the
/// spread-Z lower bound. `disjoint` records whether supports are pairwise
/// disjoint (the bound's hypothesis) or were admitted with overlaps.
#[derive(Clone, Debug, Serialize)]
pub struct DisjointRepSet {
    pub reps: Vec<Vec<i64>>,
    pub class_coords: Vec<String>,
    pub disjoint: bool,
}

fn validate_reps(
    code: &RotorCode,
    reps: &[Vec<i64>],
    require_disjoint: bool,
) -> Result<(Vec<String>, bool), RepSetError> {
    if reps.is_empty() {
        return Err(RepSetError::Empty);
    }
    let ctx = SearchContext::new(code);
    for (i, r) in reps.iter().enumerate() {
        if r.iter().any(|&x| x.abs() > 1) {
            return Err(RepSetError::NotUnit(i));
        }
    }
    let mut coords0: Option<Vec<BigInt>> = None;
    for (i, r) in reps.iter().enumerate() {
        let syn_ok = ctx
            .hz_orig
            .iter()
            .all(|row| row.iter().zip(r).map(|(a, b)| a * b).sum::<i64>() == 0);
        if !syn_ok {
            return Err(RepSetError::BadClass(i));
        }
        let c = ctx.class_coords(r);
        if c.iter().all(|x| x.is_zero()) {
            return Err(RepSetError::BadClass(i));
        }
        match &coords0 {
            None => coords0 = Some(c),
            Some(c0) => {
                if &c != c0 {
                    return Err(RepSetError::BadClass(i));
                }
            }
        }
    }
    let mut disjoint = true;
    for i in 0..reps.len() {
        for j in i + 1..reps.len() {
            if reps[i]
                .iter()
                .zip(&reps[j])
                .any(|(&a, &b)| a != 0 && b != 0)
            {
                if require_disjoint {
                    return Err(RepSetError::Overlapping(i, j));
                }
                disjoint = false;
            }
        }
    }
    let coords = coords0.unwrap().iter().map(|c| c.to_string()).collect();
    Ok((coords, disjoint))
}

impl DisjointRepSet {
    pub fn new(code: &RotorCode, reps: Vec<Vec<i64>>) -> Result<Self, RepSetError> {
        let (class_coords, disjoint) = validate_reps(code, &reps, true)?;
        Ok(DisjointRepSet { reps, class_coords, disjoint })
    }

    /// Admit representatives whose supports overlap; the bound still applies
    /// when weights are equal and overlaps are sparse, so the caller decides.
    pub fn new_allowing_overlap(code: &RotorCode, reps: Vec<Vec<i64>>) -> Result<Self, RepSetError> {
        let (class_coords, disjoint) = validate_reps(code, &reps, false)?;
        Ok(DisjointRepSet { reps, class_coords, disjoint })
    }

    pub fn n_x(&self) -> usize {
        self.reps.len()
    }

    /// Largest representative weight.
    pub fn d_x_max(&self) -> u64 {
        self.reps.iter().map(|r| weight_x(r)).max().unwrap_or(0)
    }
}

/// Spread-Z lower bound at logical angle alpha: any phase vector whose
/// pairing with representative i is alpha must put weight at least
/// w_i sin^2(alpha/(2 w_i)) on its support, and supports are disjoint, so
/// delta_Z >= sum_i w_i sin^2(alpha/(2 w_i)) / sin^2(alpha/2). With equal
/// weights w_i = D_X this is N_X D_X sin^2(alpha/2D_X) / sin^2(alpha/2).
pub fn z_lower_bound(reps: &DisjointRepSet, alpha: f64) -> f64 {
    assert!(alpha > 0.0 && alpha <= PI);
    let denom = (alpha / 2.0).sin().powi(2);
    reps.reps
        .iter()
        .map(|r| {
            let w = weight_x(r) as f64;
            w * (alpha / (2.0 * w)).sin().powi(2)
        })
        .sum::<f64>()
        / denom
}

/// Limit of `z_lower_bound` as alpha -> 0: sum_i 1/w_i.
pub fn z_lower_bound_limit(reps: &DisjointRepSet) -> f64 {
    reps.reps.iter().map(|r| 1.0 / weight_x(r) as f64).sum()
}

/// Search for unit-entry representatives of logical class `class_id` up to
/// weight `weight_cap`, then greedily pack a support-disjoint subset (at most
/// `budget` candidates are classified).
pub fn find_disjoint_reps(
    code: &RotorCode,
    class_id: usize,
    weight_cap: u64,
    budget: usize,
) -> Result<DisjointRepSet, RepSetError> {
    assert!(class_id < code.k());
    let ctx = SearchContext::new(code);
    let mut target = vec![BigInt::zero(); code.k()];
    target[class_id] = BigInt::from(1);
    let mut candidates: Vec<Vec<i64>> = Vec::new();
    'outer: for w in 1..=weight_cap {
        for v in shell_candidates(&ctx, w, 1, true) {
            // Candidates have positive leading entry; check both signs for
            // the unit class coordinate.
            let neg: Vec<i64> = v.iter().map(|x| -x).collect();
            if ctx.class_coords(&v) == target {
                candidates.push(v);
            } else if ctx.class_coords(&neg) == target {
                candidates.push(neg);
            }
            if candidates.len() >= budget {
                break 'outer;
            }
        }
    }
    if candidates.is_empty() {
        return Err(RepSetError::NoUnitRepresentative);
    }
    candidates.sort_by_key(|v| (weight_x(v), v.clone()));
    let mut chosen: Vec<Vec<i64>> = Vec::new();
    let mut used = vec![false; code.n()];
    for c in candidates {
        if c.iter().enumerate().all(|(j, &x)| x == 0 || !used[j]) {
            for (j, &x) in c.iter().enumerate() {
                if x != 0 {
                    used[j] = true;
                }
            }
            chosen.push(c);
        }
    }
    DisjointRepSet::new(code, chosen)
}

/// Options for the spread-Z minimizer.
#[derive(Clone, Copy, Debug)]
pub struct SpreadOptions {
    pub max_iters: usize,
    pub step: f64,
    pub tol: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SpreadOptions {
    fn default() -> Self {
        SpreadOptions { max_iters: 4000, step: 0.25, tol: 1e-12, restarts: 8, seed: 0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpreadResult {
    /// Best W_Z(alpha lz + nu H_Z) / sin^2(alpha/2) found: an upper bound on
    /// delta_Z for this class and angle.
    pub value: f64,
    pub nu: Vec<f64>,
    pub phases: Vec<f64>,
    pub converged: bool,
}

/// Objective and analytic gradient of nu -> W_Z(alpha lz + nu H_Z), unscaled.
pub fn spread_objective_grad(
    base: &[f64],
    hz: &[Vec<f64>],
    nu: &[f64],
) -> (f64, Vec<f64>) {
    let n = base.len();
    let mut phi = base.to_vec();
    for (r, &x) in nu.iter().enumerate() {
        for j in 0..n {
            phi[j] += x * hz[r][j];
        }
    }
    let value = weight_z(&phi);
    // d/dphi sin^2(phi/2) = sin(phi)/2.
    let grad = (0..nu.len())
        .map(|r| (0..n).map(|j| phi[j].sin() / 2.0 * hz[r][j]).sum::<f64>())
        .collect();
    (value, grad)
}

fn lz_base(code: &RotorCode, class_id: usize, alpha: f64) -> Vec<f64> {
    code.hom
        .lz
        .row(class_id)
        .iter()
        .map(|v| alpha * v.to_f64().expect("lz entry out of f64 range"))
        .collect()
}

/// Upper-bound delta_Z for one logical class at angle alpha by projected
/// gradient descent over the Z-stabilizer phases, with seeded restarts.
/// Restart 0 always starts from nu = 0.
pub fn z_upper_spread(
    code: &RotorCode,
    class_id: usize,
    alpha: f64,
    opts: &SpreadOptions,
) -> SpreadResult {
    assert!(class_id < code.k());
    assert!(alpha > 0.0 && alpha <= PI);
    let base = lz_base(code, class_id, alpha);
    let hz: Vec<Vec<f64>> = code
        .hz()
        .to_i64_rows()
        .into_iter()
        .map(|row| row.into_iter().map(|x| x as f64).collect())
        .collect();
    let rz = hz.len();
    let denom = (alpha / 2.0).sin().powi(2);
    let runs: Vec<(f64, Vec<f64>, bool)> = map_collect(opts.restarts.max(1), |r| {
        let mut nu = if r == 0 {
            vec![0.0; rz]
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(r as u64));
            (0..rz).map(|_| rng.gen_range(0.0..TAU)).collect()
        };
        let mut step = opts.step;
        let (mut value, mut grad) = spread_objective_grad(&base, &hz, &nu);
        let mut converged = false;
        for _ in 0..opts.max_iters {
            let gnorm2: f64 = grad.iter().map(|g| g * g).sum();
            if gnorm2.sqrt() < opts.tol {
                converged = true;
                break;
            }
            // Backtracking on the fixed descent direction.
            let mut improved = false;
            while step > 1e-14 {
                let trial: Vec<f64> = nu
                    .iter()
                    .zip(&grad)
                    .map(|(x, g)| (x - step * g).rem_euclid(TAU))
                    .collect();
                let (tv, tg) = spread_objective_grad(&base, &hz, &trial);
                if tv < value - 1e-18 {
                    nu = trial;
                    value = tv;
                    grad = tg;
                    step *= 1.5;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                converged = true;
                break;
            }
        }
        vec![(value, nu, converged)]
    });
    let (value, nu, converged) = runs
        .into_iter()
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
        .expect("at least one restart");
    let mut phases = base.clone();
    for (r, &x) in nu.iter().enumerate() {
        for j in 0..phases.len() {
            phases[j] = (phases[j] + x * hz[r][j]).rem_euclid(TAU);
        }
    }
    SpreadResult { value: value / denom, nu, phases, converged }
}

/// Closed-form minimum of W_Z over phase vectors pairing to alpha on an
/// n-rotor unit chain: n sin^2(alpha/(2n)).
pub fn spread_min_closed_form(n: usize, alpha: f64) -> f64 {
    assert!(n >= 1 && alpha > 0.0 && alpha <= PI);
    let x = (alpha / (2.0 * n as f64)).sin();
    n as f64 * x * x
}

/// Numeric check of the closed form: minimize W_Z(phi) subject to
/// sum_j m_j phi_j = alpha + 2 pi k, sweeping winding offsets k. Projected
/// gradient on the constraint hyperplane.
pub fn constrained_min_numeric(signs: &[i64], alpha: f64, k_sweep: i64, iters: usize) -> f64 {
    let n = signs.len();
    assert!(n >= 1);
    assert!(signs.iter().all(|&s| s == 1 || s == -1));
    let mut best = f64::INFINITY;
    for k in -k_sweep..=k_sweep {
        let target = alpha + TAU * k as f64;
        // phi_j = s_j psi_j turns the constraint into sum psi_j = target with
        // the same objective, so optimize psi and report its weight.
        let mut psi = vec![target / n as f64; n];
        let mut step = 0.2;
        let mut value = weight_z(&psi);
        for _ in 0..iters {
            // Projected gradient: remove the mean to stay on the hyperplane.
            let mut grad: Vec<f64> = psi.iter().map(|&p| p.sin() / 2.0).collect();
            let mean = grad.iter().sum::<f64>() / n as f64;
            for g in grad.iter_mut() {
                *g -= mean;
            }
            if grad.iter().map(|g| g * g).sum::<f64>().sqrt() < 1e-14 {
                break;
            }
            let mut moved = false;
            while step > 1e-15 {
                let trial: Vec<f64> = psi.iter().zip(&grad).map(|(p, g)| p - step * g).collect();
                let tv = weight_z(&trial);
                if tv < value - 1e-18 {
                    psi = trial;
                    value = tv;
                    step *= 1.2;
                    moved = true;
                    break;
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
        }
        best = best.min(value);
    }
    best
}

/// One delta_Z line of the distance report.
#[derive(Clone, Debug, Serialize)]
pub struct DeltaZEntry {
    /// Logical angle; 0.0 encodes the alpha -> 0 limit.
    pub alpha: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub witness: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DistanceReport {
    pub code: String,
    pub d_x: Option<u64>,
    pub d_x_witness: Option<Vec<i64>>,
    /// "exact" when the shell search finished, "bound" when it ran out.
    pub d_x_method: String,
    pub qudit_bounds: std::collections::BTreeMap<u64, Option<u64>>,
    pub delta_z: Vec<DeltaZEntry>,
}

/// Knobs for `distance_report`.
#[derive(Clone, Debug)]
pub struct DistanceConfig {
    pub max_weight: u64,
    pub qudit_dims: Vec<u64>,
    pub alphas: Vec<f64>,
    pub rep_weight_cap: u64,
    pub rep_budget: usize,
    pub spread: SpreadOptions,
}

impl Default for DistanceConfig {
    fn default() -> Self {
        DistanceConfig {
            max_weight: 6,
            qudit_dims: vec![2, 3],
            alphas: vec![PI, PI / 2.0, PI / 8.0],
            rep_weight_cap: 6,
            rep_budget: 64,
            spread: SpreadOptions::default(),
        }
    }
}

/// Full distance report for the first logical class of a code.
pub fn distance_report(code: &RotorCode, cfg: &DistanceConfig) -> DistanceReport {
    let xd = x_distance_exact(code, cfg.max_weight);
    let (d_x, d_x_witness, method) = match &xd {
        Some(r) => (Some(r.d_x), Some(r.witness.clone()), "exact".to_string()),
        None => (None, None, "bound".to_string()),
    };
    let mut qudit_bounds = std::collections::BTreeMap::new();
    for &l in &cfg.qudit_dims {
        qudit_bounds.insert(l, qudit_x_distance(code, l, cfg.max_weight));
    }
    let mut delta_z = Vec::new();
    if code.k() > 0 {
        let reps = find_disjoint_reps(code, 0, cfg.rep_weight_cap, cfg.rep_budget).ok();
        // Qubit/qudit classes get the half-turn angle only; rotor classes get
        // the full grid plus the alpha -> 0 limit of the lower bound.
        let is_free = code.hom.free_rank > 0;
        let alphas: Vec<f64> = if is_free { cfg.alphas.clone() } else { vec![PI] };
        for &alpha in &alphas {
            let upper = z_upper_spread(code, 0, alpha, &cfg.spread);
            let lower = reps.as_ref().map(|r| z_lower_bound(r, alpha));
            if let Some(lo) = lower {
                assert!(
                    upper.value >= lo - 1e-9,
                    "spread upper bound fell below the disjoint-set lower bound"
                );
            }
            delta_z.push(DeltaZEntry {
                alpha,
                lower,
                upper: Some(upper.value),
                witness: Some(upper.phases),
            });
        }
        if is_free {
            delta_z.push(DeltaZEntry {
                alpha: 0.0,
                lower: reps.as_ref().map(z_lower_bound_limit),
                upper: None,
                witness: None,
            });
        }
    }
    DistanceReport {
        code: code.name.clone(),
        d_x,
        d_x_witness,
        d_x_method: method,
        qudit_bounds,
        delta_z,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions as cons;

    #[test]
    fn weights() {
        assert_eq!(weight_x(&[0, -1, 0, 1]), 2);
        let w = weight_z(&[0.0, 0.0, PI, PI]);
        assert!((w - 2.0).abs() < 1e-12);
        let n = 10;
        let eps = 1e-4;
        let wz = weight_z(&vec![eps; n]);
        assert!((wz - n as f64 * eps * eps / 4.0).abs() < 1e-10);
        let m = WeightModel::new(0.5, 0.25);
        assert!((m.beta_z() - 4.0).abs() < 1e-12);
        assert!((m.beta_x() - 4.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn x_distances_small_codes() {
        let c = cons::rp2_4();
        let r = x_distance_exact(&c, 4).unwrap();
        assert_eq!(r.d_x, 2);
        assert_eq!(r.witness, vec![-1, 0, 0, 1]);
        let c = cons::rp2_9();
        assert_eq!(x_distance_exact(&c, 4).unwrap().d_x, 3);
        let c = cons::moebius_thin(4).unwrap();
        assert_eq!(x_distance_exact(&c, 4).unwrap().d_x, 2);
        let c = cons::rp2_1();
        assert_eq!(x_distance_exact(&c, 2).unwrap().d_x, 1);
    }

    #[test]
    fn x_distance_matches_brute_force_small() {
        // Independent check: scan all vectors with entries in -2..=2.
        for code in [cons::rp2_4(), cons::moebius_thin(3).unwrap()] {
            let found = x_distance_exact(&code, 5).unwrap();
            let ctx = SearchContext::new(&code);
            let n = code.n();
            let mut best = u64::MAX;
            let mut v = vec![0i64; n];
            loop {
                let syn_ok = ctx
                    .hz_orig
                    .iter()
                    .all(|row| row.iter().zip(&v).map(|(a, b)| a * b).sum::<i64>() == 0);
                if syn_ok && v.iter().any(|&x| x != 0) && ctx.is_nontrivial(&v) {
                    best = best.min(weight_x(&v));
                }
                let mut i = 0;
                while i < n {
                    if v[i] < 2 {
                        v[i] += 1;
                        break;
                    }
                    v[i] = -2;
                    i += 1;
                }
                if i == n {
                    break;
                }
            }
            assert_eq!(found.d_x, best, "{}", code.name);
        }
    }

    #[test]
    fn torus_x_distance_is_min_side() {
        let c = cons::torus2(3, 4).unwrap();
        assert_eq!(x_distance_exact(&c, 4).unwrap().d_x, 3);
        let c = cons::torus2(2, 5).unwrap();
        assert_eq!(x_distance_exact(&c, 4).unwrap().d_x, 2);
    }

    #[test]
    fn qudit_distances() {
        let c = cons::rp2_9();
        assert_eq!(qudit_x_distance(&c, 2, 4), Some(3));
        let c = cons::rp2_4();
        assert_eq!(qudit_x_distance(&c, 3, 4), None);
        assert_eq!(qudit_x_distance(&c, 2, 4), Some(2));
        let c = cons::torus2(3, 3).unwrap();
        assert_eq!(qudit_x_distance(&c, 2, 4), Some(3));
    }

    #[test]
    fn theorem2_consistency() {
        for code in [cons::rp2_4(), cons::rp2_9(), cons::torus2(2, 3).unwrap()] {
            let r = x_distance_exact(&code, 5).unwrap();
            if let Some(b) = theorem2_bound(&code, &r.witness, &[2, 3], 5) {
                assert!(r.d_x >= b, "{}", code.name);
            }
        }
    }

    #[test]
    fn disjoint_reps_on_torus() {
        let c = cons::torus2(3, 4).unwrap();
        // Class 0 or 1 is the short horizontal loop family; accept either.
        let best = (0..2)
            .filter_map(|cls| find_disjoint_reps(&c, cls, 3, 256).ok())
            .max_by_key(|r| r.n_x())
            .unwrap();
        assert_eq!(best.n_x(), 4);
        assert_eq!(best.d_x_max(), 3);
        let lim = z_lower_bound_limit(&best);
        assert!((lim - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn rp2_9_lower_bound_from_stated_reps() {
        let c = cons::rp2_9();
        // Three weight-3 representatives; the first and third share index 5.
        let reps = vec![
            vec![-1, 0, 0, 0, 0, -1, 1, 0, 0],
            vec![0, -1, 0, 0, 0, 0, 0, 1, -1],
            vec![0, 0, -1, 0, 1, -1, 0, 0, 0],
        ];
        // Fix signs so all three classify identically.
        let mut fixed = Vec::new();
        let ctx = SearchContext::new(&c);
        let target = ctx.class_coords(&reps[0]);
        for r in reps {
            if ctx.class_coords(&r) == target {
                fixed.push(r);
            } else {
                fixed.push(r.iter().map(|x| -x).collect());
            }
        }
        let set = DisjointRepSet::new_allowing_overlap(&c, fixed).unwrap();
        assert_eq!(set.n_x(), 3);
        let lo = z_lower_bound(&set, PI);
        assert!((lo - 9.0 / 4.0).abs() < 1e-9, "got {lo}");
    }

    #[test]
    fn spread_upper_bounds() {
        let c = cons::rp2_4();
        let r = z_upper_spread(&c, 0, PI, &SpreadOptions::default());
        assert!((r.value - 2.0).abs() < 1e-6, "rp2_4 spread {}", r.value);
        for nn in 2..=4 {
            let c = cons::moebius_thin(nn).unwrap();
            let r = z_upper_spread(&c, 0, PI, &SpreadOptions::default());
            assert!((r.value - nn as f64).abs() < 1e-5, "thin({nn}) spread {}", r.value);
        }
    }

    #[test]
    fn sandwich_on_suite() {
        for code in [cons::rp2_4(), cons::rp2_9(), cons::moebius_thin(3).unwrap()] {
            let reps = find_disjoint_reps(&code, 0, 4, 128).unwrap();
            let lo = z_lower_bound(&reps, PI);
            let up = z_upper_spread(&code, 0, PI, &SpreadOptions::default());
            assert!(lo <= up.value + 1e-9, "{}: {lo} > {}", code.name, up.value);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let c = cons::rp2_9();
        let base = lz_base(&c, 0, PI);
        let hz: Vec<Vec<f64>> = c
            .hz()
            .to_i64_rows()
            .into_iter()
            .map(|row| row.into_iter().map(|x| x as f64).collect())
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let nu: Vec<f64> = (0..hz.len()).map(|_| rng.gen_range(0.0..TAU)).collect();
            let (_, grad) = spread_objective_grad(&base, &hz, &nu);
            for r in 0..nu.len() {
                let h = 1e-6;
                let mut p = nu.clone();
                p[r] += h;
                let (fp, _) = spread_objective_grad(&base, &hz, &p);
                p[r] -= 2.0 * h;
                let (fm, _) = spread_objective_grad(&base, &hz, &p);
                let fd = (fp - fm) / (2.0 * h);
                let scale = grad[r].abs().max(1.0);
                assert!((grad[r] - fd).abs() / scale < 1e-5, "{} vs {}", grad[r], fd);
            }
        }
    }

    #[test]
    fn closed_form_matches_numeric_minimizer() {
        for n in [1usize, 2, 5, 10, 20] {
            for alpha in [PI, PI / 2.0, 0.1] {
                let signs = vec![1i64; n];
                let num = constrained_min_numeric(&signs, alpha, 2, 20000);
                let cf = spread_min_closed_form(n, alpha);
                assert!((num - cf).abs() < 1e-6, "n={n} alpha={alpha}: {num} vs {cf}");
            }
        }
        // Sign patterns do not matter.
        let mixed = vec![1i64, -1, 1, -1, 1];
        let num = constrained_min_numeric(&mixed, PI / 2.0, 2, 20000);
        assert!((num - spread_min_closed_form(5, PI / 2.0)).abs() < 1e-6);
    }

    #[test]
    fn report_is_deterministic() {
        let c = cons::rp2_4();
        let cfg = DistanceConfig::default();
        let a = serde_json::to_string(&distance_report(&c, &cfg)).unwrap();
        let b = serde_json::to_string(&distance_report(&c, &cfg)).unwrap();
        assert_eq!(a, b);
    }
}
