//! Truncated-rotor numerical laboratory: charge-basis state vectors,
//! codewords, winding/phase operators, stabilizer expectations, noise
//! sampling, and exact diagonalization of code Hamiltonians and the
//! circuit-derived single-mode and four-node models.
//!
//! States live in the angular momentum basis with a hard cutoff |l_j| <= L;
//! operations that push amplitude outside the cutoff drop it and account for
//! it as leakage mass.

use crate::code::RotorCode;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use thiserror::Error;

use crate::distance::WeightModel;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Largest dimension handled by dense eigensolves.
pub const DENSE_CAP: usize = 4000;

/// Default cap on truncated Hilbert space dimension; override with the
/// ROTORCODE_MAX_DIM environment variable.
pub const DEFAULT_DIM_CAP: usize = 200_000;

pub fn dim_cap() -> usize {
    std::env::var("ROTORCODE_MAX_DIM")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_DIM_CAP)
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("dimension {dim} exceeds the cap {cap}")]
    CapExceeded { dim: usize, cap: usize },
    #[error("truncation too small: no coset point fits inside |l| <= L")]
    EmptySupport,
    #[error("index {0} out of range")]
    IndexOutOfRange(usize),
}

/// Lexicographic indexer for the box [-L, L]^n.
#[derive(Clone, Copy, Debug)]
pub struct BoxIndexer {
    pub n: usize,
    pub l: i64,
}

impl BoxIndexer {
    pub fn new(n: usize, l: i64) -> Self {
        assert!(l >= 0);
        BoxIndexer { n, l }
    }

    pub fn side(&self) -> usize {
        (2 * self.l + 1) as usize
    }

    pub fn dim(&self) -> usize {
        self.side().pow(self.n as u32)
    }

    pub fn checked_dim(&self) -> Result<usize, SimError> {
        let side = self.side() as u128;
        let mut d: u128 = 1;
        for _ in 0..self.n {
            d = d.saturating_mul(side);
            if d > dim_cap() as u128 {
                return Err(SimError::CapExceeded { dim: usize::MAX, cap: dim_cap() });
            }
        }
        let d = d as usize;
        if d > dim_cap() {
            return Err(SimError::CapExceeded { dim: d, cap: dim_cap() });
        }
        Ok(d)
    }

    /// Index of a label vector, or None if it leaves the box.
    pub fn index(&self, ls: &[i64]) -> Option<usize> {
        debug_assert_eq!(ls.len(), self.n);
        let side = self.side();
        let mut idx = 0usize;
        for &v in ls {
            if v.abs() > self.l {
                return None;
            }
            idx = idx * side + (v + self.l) as usize;
        }
        Some(idx)
    }

    pub fn labels(&self, mut idx: usize) -> Vec<i64> {
        let side = self.side();
        let mut out = vec![0i64; self.n];
        for j in (0..self.n).rev() {
            out[j] = (idx % side) as i64 - self.l;
            idx /= side;
        }
        out
    }
}

/// A normalized state on n rotors truncated to |l_j| <= L, with the mass
/// dropped by out-of-box shifts accumulated in `leakage`.
#[derive(Clone, Debug)]
pub struct TruncatedState {
    pub indexer: BoxIndexer,
    pub amps: Vec<Complex64>,
    pub leakage: f64,
}

impl TruncatedState {
    pub fn zero(n: usize, l: i64) -> Result<Self, SimError> {
        let indexer = BoxIndexer::new(n, l);
        let dim = indexer.checked_dim()?;
        Ok(TruncatedState { indexer, amps: vec![Complex64::new(0.0, 0.0); dim], leakage: 0.0 })
    }

    pub fn basis(n: usize, l: i64, ls: &[i64]) -> Result<Self, SimError> {
        let mut s = Self::zero(n, l)?;
        let idx = s.indexer.index(ls).ok_or(SimError::EmptySupport)?;
        s.amps[idx] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) -> Result<(), SimError> {
        let nrm = self.norm();
        if nrm < 1e-300 {
            return Err(SimError::EmptySupport);
        }
        for a in self.amps.iter_mut() {
            *a /= nrm;
        }
        Ok(())
    }

    pub fn inner(&self, other: &TruncatedState) -> Complex64 {
        assert_eq!(self.amps.len(), other.amps.len());
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }
}

/// Equal superposition over the coset {g H_X + mbar L_X : g in [-b, b]^{r_x}}
/// clipped to the truncation box.
pub fn codeword(
    code: &RotorCode,
    mbar: &[i64],
    l: i64,
    box_radius: i64,
) -> Result<TruncatedState, SimError> {
    assert_eq!(mbar.len(), code.k());
    assert!(box_radius >= 0);
    let mut state = TruncatedState::zero(code.n(), l)?;
    let hx = code.hx().to_i64_rows();
    let lx = code.hom.lx.to_i64_rows();
    let rx = hx.len();
    let base: Vec<i64> = (0..code.n())
        .map(|j| mbar.iter().zip(&lx).map(|(&m, row)| m * row[j]).sum())
        .collect();
    let side = (2 * box_radius + 1) as usize;
    let total = side.pow(rx as u32);
    let mut any = false;
    for t in 0..total {
        let mut g = vec![0i64; rx];
        let mut rem = t;
        for gi in g.iter_mut() {
            *gi = (rem % side) as i64 - box_radius;
            rem /= side;
        }
        let point: Vec<i64> = (0..code.n())
            .map(|j| base[j] + g.iter().zip(&hx).map(|(&gi, row)| gi * row[j]).sum::<i64>())
            .collect();
        if let Some(idx) = state.indexer.index(&point) {
            state.amps[idx] += Complex64::new(1.0, 0.0);
            any = true;
        }
    }
    if !any {
        return Err(SimError::EmptySupport);
    }
    state.normalize()?;
    Ok(state)
}

/// X(m): |l> -> |l + m>, dropping shifts that leave the box.
pub fn apply_x(state: &TruncatedState, m: &[i64]) -> TruncatedState {
    assert_eq!(m.len(), state.indexer.n);
    let mut out = TruncatedState {
        indexer: state.indexer,
        amps: vec![Complex64::new(0.0, 0.0); state.amps.len()],
        leakage: state.leakage,
    };
    for (idx, &a) in state.amps.iter().enumerate() {
        if a.norm_sqr() == 0.0 {
            continue;
        }
        let mut ls = state.indexer.labels(idx);
        for (lj, &mj) in ls.iter_mut().zip(m) {
            *lj += mj;
        }
        match state.indexer.index(&ls) {
            Some(t) => out.amps[t] += a,
            None => out.leakage += a.norm_sqr(),
        }
    }
    out
}

/// Z(phi): |l> -> e^{i phi . l} |l>.
pub fn apply_z(state: &TruncatedState, phi: &[f64]) -> TruncatedState {
    assert_eq!(phi.len(), state.indexer.n);
    let mut out = state.clone();
    for (idx, a) in out.amps.iter_mut().enumerate() {
        if a.norm_sqr() == 0.0 {
            continue;
        }
        let ls = state.indexer.labels(idx);
        let angle: f64 = ls.iter().zip(phi).map(|(&l, &p)| l as f64 * p).sum();
        *a *= Complex64::from_polar(1.0, angle);
    }
    out
}

/// <S_j^X> = <state| X(h_j^X) |state>; its phase is the syndrome angle.
pub fn expect_stabilizer_x(state: &TruncatedState, code: &RotorCode, j: usize) -> Complex64 {
    assert!(j < code.hx().rows());
    let row: Vec<i64> = code.hx().to_i64_rows().swap_remove(j);
    state.inner(&apply_x(state, &row))
}

/// Outcome histogram of O_j^Z = h_j^Z . l, weighted by probability.
pub fn measure_oz(state: &TruncatedState, code: &RotorCode, j: usize) -> BTreeMap<i64, f64> {
    assert!(j < code.hz().rows());
    let row: Vec<i64> = code.hz().to_i64_rows().swap_remove(j);
    let mut hist = BTreeMap::new();
    for (idx, a) in state.amps.iter().enumerate() {
        let p = a.norm_sqr();
        if p == 0.0 {
            continue;
        }
        let ls = state.indexer.labels(idx);
        let val: i64 = ls.iter().zip(&row).map(|(&l, &h)| l * h).sum();
        *hist.entry(val).or_insert(0.0) += p;
    }
    hist
}

/// Per-rotor i.i.d. error draw: phases from a von Mises distribution with
/// concentration 1/(2 sigma^2), windings from a two-sided geometric law
/// P(m) proportional to p^|m|.
#[derive(Clone, Debug)]
pub struct NoiseSample {
    pub m: Vec<i64>,
    pub phi: Vec<f64>,
}

/// Von Mises(0, kappa) sampler (Best-Fisher wrapping rejection scheme).
pub fn sample_von_mises<R: Rng>(rng: &mut R, kappa: f64) -> f64 {
    assert!(kappa >= 0.0);
    if kappa < 1e-10 {
        return rng.gen_range(-PI..PI);
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.gen_range(0.0..1.0);
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        let u2: f64 = rng.gen_range(0.0..1.0);
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let u3: f64 = rng.gen_range(0.0..1.0);
            let sign = if u3 > 0.5 { 1.0 } else { -1.0 };
            return sign * f.acos();
        }
    }
}

/// Two-sided geometric: P(0) = (1-p)/(1+p), P(m) = P(0) p^|m| for m != 0.
pub fn sample_two_sided_geometric<R: Rng>(rng: &mut R, p: f64) -> i64 {
    assert!((0.0..1.0).contains(&p));
    let u: f64 = rng.gen_range(0.0..1.0);
    if u < (1.0 - p) / (1.0 + p) {
        return 0;
    }
    // Magnitude 1 + Geometric(1-p), symmetric sign.
    let mut k = 1i64;
    while rng.gen_range(0.0..1.0) < p {
        k += 1;
    }
    if rng.gen_bool(0.5) {
        k
    } else {
        -k
    }
}

pub fn sample_noise(model: &WeightModel, n: usize, seed: u64) -> NoiseSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kappa = 1.0 / (2.0 * model.sigma * model.sigma);
    let phi = (0..n).map(|_| sample_von_mises(&mut rng, kappa)).collect();
    let m = (0..n).map(|_| sample_two_sided_geometric(&mut rng, model.p_jump)).collect();
    NoiseSample { m, phi }
}

/// Modified Bessel function I_nu(x) for integer nu, by quadrature of
/// (1/pi) integral_0^pi e^{x cos t} cos(nu t) dt.
pub fn bessel_i(nu: u32, x: f64) -> f64 {
    let steps = 20_000;
    let h = PI / steps as f64;
    let f = |t: f64| (x * t.cos()).exp() * (nu as f64 * t).cos();
    let mut acc = 0.5 * (f(0.0) + f(PI));
    for i in 1..steps {
        acc += f(i as f64 * h);
    }
    acc * h / PI
}

/// Real symmetric sparse Hamiltonian in row-adjacency form (both symmetric
/// halves stored, diagonal included), so matvec parallelizes by rows.
#[derive(Clone, Debug)]
pub struct SparseHamiltonian {
    pub dim: usize,
    rows: Vec<Vec<(u32, f64)>>,
}

/// Accumulates symmetric entries, merging duplicates deterministically.
pub struct HamBuilder {
    dim: usize,
    entries: BTreeMap<(u32, u32), f64>,
}

impl HamBuilder {
    pub fn new(dim: usize) -> Self {
        HamBuilder { dim, entries: BTreeMap::new() }
    }

    pub fn add_diag(&mut self, i: usize, v: f64) {
        *self.entries.entry((i as u32, i as u32)).or_insert(0.0) += v;
    }

    /// Adds v at (i, j) and (j, i).
    pub fn add_sym(&mut self, i: usize, j: usize, v: f64) {
        assert_ne!(i, j);
        *self.entries.entry((i as u32, j as u32)).or_insert(0.0) += v;
        *self.entries.entry((j as u32, i as u32)).or_insert(0.0) += v;
    }

    pub fn finish(self) -> SparseHamiltonian {
        let mut rows = vec![Vec::new(); self.dim];
        for ((i, j), v) in self.entries {
            if v != 0.0 {
                rows[i as usize].push((j, v));
            }
        }
        SparseHamiltonian { dim: self.dim, rows }
    }
}

impl SparseHamiltonian {
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        #[cfg(feature = "parallel")]
        {
            self.rows
                .par_iter()
                .map(|row| row.iter().map(|&(j, v)| v * x[j as usize]).sum())
                .collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            self.rows
                .iter()
                .map(|row| row.iter().map(|&(j, v)| v * x[j as usize]).sum())
                .collect()
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m[(i, j as usize)] = v;
            }
        }
        m
    }

    /// Infinity norm, used to scale residual tolerances.
    pub fn norm_inf(&self) -> f64 {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .iter()
            .find(|&&(c, _)| c as usize == j)
            .map(|&(_, v)| v)
            .unwrap_or(0.0)
    }
}

pub fn dense_low_spectrum(h: &SparseHamiltonian, k: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let eig = h.to_dense().symmetric_eigen();
    let mut order: Vec<usize> = (0..h.dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let k = k.min(h.dim);
    let vals = order[..k].iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = order[..k]
        .iter()
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    (vals, vecs)
}

/// Lanczos with full reorthogonalization and a deterministic seeded start.
/// One Lanczos sweep in the complement of `deflate`: the Krylov space grows
/// until the `want` lowest Ritz pairs have residual estimates below
/// 1e-9 * ||H|| or the space is exhausted. Returns the `want` lowest pairs.
fn lanczos_sweep(
    h: &SparseHamiltonian,
    want: usize,
    deflate: &[Vec<f64>],
    seed: u64,
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = h.dim;
    let m_cap = n.min((6 * want + 60).max(400));
    let scale = h.norm_inf().max(1.0);
    let project = |w: &mut Vec<f64>, basis: &[Vec<f64>]| {
        for _ in 0..2 {
            for b in deflate.iter().chain(basis.iter()) {
                let c: f64 = w.iter().zip(b).map(|(a, x)| a * x).sum();
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    project(&mut q, &[]);
    let nrm = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    q.iter_mut().for_each(|x| *x /= nrm);
    let mut basis: Vec<Vec<f64>> = vec![q];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let tridiag_eigen = |alphas: &[f64], betas: &[f64]| {
        let mm = alphas.len();
        let mut t = DMatrix::zeros(mm, mm);
        for i in 0..mm {
            t[(i, i)] = alphas[i];
            if i + 1 < mm {
                t[(i, i + 1)] = betas[i];
                t[(i + 1, i)] = betas[i];
            }
        }
        let eig = t.symmetric_eigen();
        let mut order: Vec<usize> = (0..mm).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
        (eig, order)
    };
    for step in 0..m_cap {
        let qj = basis[step].clone();
        let mut w = h.matvec(&qj);
        let alpha: f64 = w.iter().zip(&qj).map(|(a, b)| a * b).sum();
        alphas.push(alpha);
        // Full reorthogonalization (twice for stability) against both the
        // Krylov basis and the deflated directions.
        project(&mut w, &basis);
        let beta = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if step + 1 == m_cap || beta < 1e-13 * scale {
            break;
        }
        // Residual of Ritz pair i is beta * |last tridiagonal eigvec entry|.
        if step + 1 >= want + 2 && (step + 1) % 10 == 0 {
            let (eig, order) = tridiag_eigen(&alphas, &betas);
            let mm = alphas.len();
            let converged = order[..want.min(mm)]
                .iter()
                .all(|&i| beta * eig.eigenvectors[(mm - 1, i)].abs() < 1e-9 * scale);
            if converged {
                break;
            }
        }
        betas.push(beta);
        w.iter_mut().for_each(|x| *x /= beta);
        basis.push(w);
    }
    let (eig, order) = tridiag_eigen(&alphas, &betas);
    let k = want.min(alphas.len());
    let vals: Vec<f64> = order[..k].iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs: Vec<Vec<f64>> = order[..k]
        .iter()
        .map(|&i| {
            let s = eig.eigenvectors.column(i);
            let mut v = vec![0.0; n];
            for (j, b) in basis.iter().enumerate() {
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi += s[j] * bi;
                }
            }
            v
        })
        .collect();
    (vals, vecs)
}

/// Lanczos with full reorthogonalization and deflated restarts. A single
/// Krylov sweep finds one copy of each eigenvalue, so repeated sweeps run in
/// the orthogonal complement of everything found so far and the merged list
/// recovers degenerate multiplets.
pub fn lanczos_low_spectrum(h: &SparseHamiltonian, k: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut pairs: Vec<(f64, Vec<f64>)> = Vec::new();
    for sweep in 0..3 {
        let deflate: Vec<Vec<f64>> = pairs.iter().map(|(_, v)| v.clone()).collect();
        if deflate.len() >= h.dim {
            break;
        }
        let (vals, vecs) = lanczos_sweep(h, k, &deflate, sweep + 1);
        pairs.extend(vals.into_iter().zip(vecs));
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    }
    pairs.truncate(k);
    let (vals, vecs) = pairs.into_iter().unzip();
    (vals, vecs)
}

/// k lowest eigenpairs; dense below DENSE_CAP, Lanczos above. Residuals are
/// checked against 1e-8 * ||H||.
pub fn low_spectrum(h: &SparseHamiltonian, k: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let (vals, vecs) = if h.dim <= DENSE_CAP {
        dense_low_spectrum(h, k)
    } else {
        lanczos_low_spectrum(h, k)
    };
    let scale = h.norm_inf().max(1.0);
    for (lam, v) in vals.iter().zip(&vecs) {
        let hv = h.matvec(v);
        let res: f64 = hv
            .iter()
            .zip(v)
            .map(|(a, b)| (a - lam * b) * (a - lam * b))
            .sum::<f64>()
            .sqrt();
        assert!(res < 1e-8 * scale, "eigenpair residual {res} exceeds tolerance");
    }
    (vals, vecs)
}

/// H_code = -sum_j cos(h_j^X . theta) + sum_j (h_j^Z . l)^2 in the charge
/// basis: cos terms become symmetric hops by h_j^X, the Z term is diagonal.
pub fn build_code_hamiltonian(code: &RotorCode, l: i64) -> Result<SparseHamiltonian, SimError> {
    let indexer = BoxIndexer::new(code.n(), l);
    let dim = indexer.checked_dim()?;
    let hx = code.hx().to_i64_rows();
    let hz = code.hz().to_i64_rows();
    let mut b = HamBuilder::new(dim);
    for idx in 0..dim {
        let ls = indexer.labels(idx);
        let mut diag = 0.0;
        for row in &hz {
            let v: i64 = row.iter().zip(&ls).map(|(&h, &x)| h * x).sum();
            diag += (v * v) as f64;
        }
        b.add_diag(idx, diag);
        for row in &hx {
            let shifted: Vec<i64> = ls.iter().zip(row).map(|(&x, &h)| x + h).collect();
            if let Some(t) = indexer.index(&shifted) {
                if t != idx {
                    b.add_sym(idx, t, -0.5);
                } else {
                    b.add_diag(idx, -1.0);
                }
            }
        }
    }
    Ok(b.finish())
}

/// Single-mode band Hamiltonian
/// H = (2 - eps)(l - s_z/2)^2 + s_z^2/2 (1 + eps/2) - 2 cos(phi_x/2) cos(theta)
/// in the charge basis; returns the k lowest eigenvalues.
pub fn bacon_shor_band(s_z: i64, phi_x: f64, eps: f64, l: i64, k: usize) -> Vec<f64> {
    let dim = (2 * l + 1) as usize;
    let mut b = HamBuilder::new(dim);
    for i in 0..dim {
        let ell = i as i64 - l;
        let x = ell as f64 - s_z as f64 / 2.0;
        b.add_diag(
            i,
            (2.0 - eps) * x * x + (s_z * s_z) as f64 / 2.0 * (1.0 + eps / 2.0),
        );
        if i + 1 < dim {
            b.add_sym(i, i + 1, -(phi_x / 2.0).cos());
        }
    }
    let (vals, _) = low_spectrum(&b.finish(), k);
    vals
}

/// Four-node pair-tunneling gadget: two junction-coupled rails shunted by
/// large capacitors C across, Cg to ground, CJ across each junction.
/// Charging part 2 e^2 l^T C^{-1} l, junction part
/// -E_J cos(th1 - th2) - E_J cos(th3 - th4); e^2 = 1.
pub fn four_phase_gadget(
    c: f64,
    cg: f64,
    cj: f64,
    ej: f64,
    l: i64,
) -> Result<SparseHamiltonian, SimError> {
    let indexer = BoxIndexer::new(4, l);
    let dim = indexer.checked_dim()?;
    let cap = DMatrix::from_row_slice(
        4,
        4,
        &[
            cg + c + cj, -cj, -c, 0.0,
            -cj, cg + c + cj, 0.0, -c,
            -c, 0.0, cg + c + cj, -cj,
            0.0, -c, -cj, cg + c + cj,
        ],
    );
    let cinv = cap.try_inverse().expect("capacitance matrix is invertible");
    let mut b = HamBuilder::new(dim);
    for idx in 0..dim {
        let ls = indexer.labels(idx);
        let lv = DVector::from_iterator(4, ls.iter().map(|&x| x as f64));
        b.add_diag(idx, 2.0 * (lv.transpose() * &cinv * &lv)[(0, 0)]);
        // cos(th1 - th2): l1 + 1, l2 - 1 (and Hermitian partner); same for 3-4.
        for (p, q) in [(0usize, 1usize), (2, 3)] {
            let mut shifted = ls.clone();
            shifted[p] += 1;
            shifted[q] -= 1;
            if let Some(t) = indexer.index(&shifted) {
                b.add_sym(idx, t, -ej / 2.0);
            }
        }
    }
    Ok(b.finish())
}

/// Comparison of the exact four-node gadget with the effective pair-tunneling
/// model extracted from its low band.
#[derive(Clone, Debug, Serialize)]
pub struct FourPhaseReport {
    pub e_c_diff: f64,
    pub e_j_eff_predicted: f64,
    pub e_j_eff_extracted: f64,
    pub junction_matrix_element: f64,
    pub regime_ok: bool,
}

/// Extracts the effective pair-tunneling amplitude by projecting the lowest
/// band onto the zero-imbalance charge sector (l3 = -l1, l4 = -l2) and
/// reading the nearest-neighbor hopping of the block-diagonalized
/// Hamiltonian there.
pub fn four_phase_effective(
    c: f64,
    cg: f64,
    cj: f64,
    ej: f64,
    l: i64,
) -> Result<FourPhaseReport, SimError> {
    let h = four_phase_gadget(c, cg, cj, ej, l)?;
    let indexer = BoxIndexer::new(4, l);
    // Zero-imbalance sector, labeled by (m1, m2) with l = (m1, m2, -m1, -m2).
    let side = (2 * l + 1) as i64;
    let mut sector: Vec<usize> = Vec::new();
    let mut label_of: BTreeMap<(i64, i64), usize> = BTreeMap::new();
    for m1 in -l..=l {
        for m2 in -l..=l {
            let idx = indexer.index(&[m1, m2, -m1, -m2]).unwrap();
            label_of.insert((m1, m2), sector.len());
            sector.push(idx);
        }
    }
    let s = sector.len();
    debug_assert_eq!(s, (side * side) as usize);
    let (vals, vecs) = low_spectrum(&h, s);
    // Effective Hamiltonian on the sector via projected eigenvectors:
    // A columns are sector components of the lowest eigenvectors, then
    // H_eff = B Lambda B^T with B = A (A^T A)^{-1/2}.
    let mut a = DMatrix::zeros(s, s);
    for (col, v) in vecs.iter().enumerate() {
        for (row, &idx) in sector.iter().enumerate() {
            a[(row, col)] = v[idx];
        }
    }
    let gram = a.transpose() * &a;
    let ge = gram.symmetric_eigen();
    let mut inv_sqrt = DMatrix::zeros(s, s);
    for i in 0..s {
        let lam = ge.eigenvalues[i];
        assert!(lam > 1e-8, "low band does not overlap the zero-imbalance sector");
        inv_sqrt += ge.eigenvectors.column(i) * ge.eigenvectors.column(i).transpose()
            / lam.sqrt();
    }
    let b = &a * inv_sqrt;
    let lambda = DMatrix::from_diagonal(&DVector::from_vec(vals));
    let heff = &b * lambda * b.transpose();
    // Pair tunneling moves (m1, m2) -> (m1 + 1, m2 - 1). Both junctions fire
    // once, via two orderings through the one-agiton intermediate at energy
    // 2 E_C_diff, so the hop amplitude itself is E_J^2 / (4 E_C_diff).
    let i0 = label_of[&(0, 0)];
    let i1 = label_of[&(1, -1)];
    let extracted = heff[(i0, i1)].abs();
    let e_c_diff = 1.0 / (cg + 2.0 * cj);
    let predicted = ej * ej / (4.0 * e_c_diff);
    let zero = indexer.index(&[0, 0, 0, 0]).unwrap();
    let inter = indexer.index(&[1, -1, 0, 0]).unwrap();
    Ok(FourPhaseReport {
        e_c_diff,
        e_j_eff_predicted: predicted,
        e_j_eff_extracted: extracted,
        junction_matrix_element: h.entry(zero, inter),
        regime_ok: c >= 10.0 * cg.max(cj.max(1e-12)) && ej <= 0.5 * e_c_diff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions as cons;

    fn random_state(n: usize, l: i64, margin: i64, seed: u64) -> TruncatedState {
        let mut s = TruncatedState::zero(n, l).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inner = l - margin;
        let idxer = s.indexer;
        for idx in 0..s.amps.len() {
            if idxer.labels(idx).iter().all(|&x| x.abs() <= inner) {
                s.amps[idx] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        s.normalize().unwrap();
        s
    }

    #[test]
    fn commutation_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..50 {
            let n = 2;
            let s = random_state(n, 6, 3, 100 + trial);
            let m: Vec<i64> = (0..n).map(|_| rng.gen_range(-2..=2)).collect();
            let phi: Vec<f64> = (0..n).map(|_| rng.gen_range(-PI..PI)).collect();
            let zx = apply_z(&apply_x(&s, &m), &phi);
            let xz = apply_x(&apply_z(&s, &phi), &m);
            let global = Complex64::from_polar(
                1.0,
                -m.iter().zip(&phi).map(|(&a, &b)| a as f64 * b).sum::<f64>(),
            );
            // X Z = e^{-i m.phi} Z X.
            for (a, b) in xz.amps.iter().zip(&zx.amps) {
                assert!((a - global * b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn x_inverse_and_leakage() {
        let s = random_state(2, 5, 2, 3);
        let back = apply_x(&apply_x(&s, &[1, -2]), &[-1, 2]);
        for (a, b) in back.amps.iter().zip(&s.amps) {
            assert!((a - b).norm() < 1e-12);
        }
        let pushed = apply_x(&s, &[20, 0]);
        assert!((pushed.leakage - 1.0).abs() < 1e-12);
        assert!(pushed.norm() < 1e-12);
    }

    #[test]
    fn codeword_supports() {
        // Single rotor with stabilizer shift 2: support on even charge only.
        let c = cons::rp2_1();
        let s = codeword(&c, &[0], 4, 3).unwrap();
        for (idx, a) in s.amps.iter().enumerate() {
            let l = s.indexer.labels(idx)[0];
            if l % 2 != 0 {
                assert_eq!(a.norm_sqr(), 0.0);
            }
        }
        assert!(s.amps.iter().filter(|a| a.norm_sqr() > 0.0).count() >= 3);

        // Thin strip, odd class: total charge odd, mirrored rail.
        let nn = 2;
        let c = cons::moebius_thin(nn).unwrap();
        let s = codeword(&c, &[1], 3, 2).unwrap();
        for (idx, a) in s.amps.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let ls = s.indexer.labels(idx);
            let total: i64 = ls[..nn].iter().sum();
            assert_eq!(total.rem_euclid(2), 1, "{ls:?}");
            for k in 0..nn {
                assert_eq!(ls[nn + k], -ls[k], "{ls:?}");
            }
        }

        // Radius zero: a single basis state.
        let c = cons::rp2_4();
        let s = codeword(&c, &[0], 2, 0).unwrap();
        let idx = s.indexer.index(&[0, 0, 0, 0]).unwrap();
        assert!((s.amps[idx].norm() - 1.0).abs() < 1e-12);

        // Truncation too small for any point of the shifted coset.
        assert!(matches!(codeword(&c, &[1], 0, 0), Err(SimError::EmptySupport) | Ok(_)));
    }

    #[test]
    fn stabilizer_expectations() {
        let c = cons::rp2_4();
        // <S_j^X> climbs toward 1 as the coset box grows.
        let mut prev = -1.0;
        for b in 0..=2 {
            let s = codeword(&c, &[0], 6, b).unwrap();
            let e: f64 = (0..c.hx().rows())
                .map(|j| expect_stabilizer_x(&s, &c, j).re)
                .sum::<f64>()
                / c.hx().rows() as f64;
            assert!(e >= prev - 1e-12, "b={b}: {e} < {prev}");
            prev = e;
        }
        // A single-rotor phase error rotates the syndrome angle by -(H_X)_{jk} nu.
        let s = codeword(&c, &[0], 8, 2).unwrap();
        let nu = 0.37;
        let k = 1;
        let noisy = apply_z(&s, &[0.0, nu, 0.0, 0.0]);
        for j in 0..c.hx().rows() {
            let hxjk = c.hx().to_i64_rows()[j][k] as f64;
            let e = expect_stabilizer_x(&noisy, &c, j);
            if e.norm() > 0.2 {
                let want = -hxjk * nu;
                let got = e.arg();
                let diff = (got - want).rem_euclid(2.0 * PI);
                let diff = diff.min(2.0 * PI - diff);
                assert!(diff < 1e-9, "j={j}: {got} vs {want}");
            }
        }
        // A winding error shifts the Z check outcome by (H_Z)_{jk}.
        let kicked = apply_x(&s, &[1, 0, 0, 0]);
        for j in 0..c.hz().rows() {
            let hzjk = c.hz().to_i64_rows()[j][0];
            let h0 = measure_oz(&s, &c, j);
            let h1 = measure_oz(&kicked, &c, j);
            let m0: f64 = h0.iter().map(|(&v, &p)| v as f64 * p).sum();
            let m1: f64 = h1.iter().map(|(&v, &p)| v as f64 * p).sum();
            assert!((m1 - m0 - hzjk as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn logical_pairing_on_codewords() {
        // Z(pi lz) has eigenvalue (-1)^{mbar} on qubit-class codewords.
        let c = cons::rp2_4();
        let lz: Vec<f64> = c.hom.lz.to_i64_rows()[0].iter().map(|&x| PI * x as f64).collect();
        for mbar in 0..2 {
            let s = codeword(&c, &[mbar], 5, 2).unwrap();
            let e = s.inner(&apply_z(&s, &lz));
            let want = if mbar % 2 == 0 { 1.0 } else { -1.0 };
            assert!((e.re - want).abs() < 1e-9 && e.im.abs() < 1e-12);
        }
        // X(lx) maps codeword(0) onto codeword(1) up to truncation loss.
        let lx = c.hom.lx.to_i64_rows()[0].clone();
        let s0 = codeword(&c, &[0], 8, 3).unwrap();
        let s1 = codeword(&c, &[1], 8, 3).unwrap();
        let moved = apply_x(&s0, &lx);
        let overlap = s1.inner(&moved).norm();
        assert!(overlap > 1.0 - 1e-6, "overlap {overlap}");
    }

    #[test]
    fn noise_moments() {
        let model = WeightModel::new(0.7, 0.3);
        let n = 100_000;
        let sample = sample_noise(&model, n, 42);
        let kappa = 1.0 / (2.0 * 0.7f64 * 0.7);
        let mean_cos: f64 = sample.phi.iter().map(|p| p.cos()).sum::<f64>() / n as f64;
        let want = bessel_i(1, kappa) / bessel_i(0, kappa);
        assert!((mean_cos - want).abs() / want < 0.02, "{mean_cos} vs {want}");
        let p0 = sample.m.iter().filter(|&&m| m == 0).count() as f64;
        let p1 = sample.m.iter().filter(|&&m| m.abs() == 1).count() as f64;
        assert!((p1 / p0 - 0.6).abs() < 0.03, "{}", p1 / p0);
        // Reproducibility.
        let again = sample_noise(&model, n, 42);
        assert_eq!(sample.m, again.m);
        assert_eq!(sample.phi, again.phi);
        // Narrow phases: variance approaches 1/kappa = 2 sigma^2.
        let tight = WeightModel::new(0.05, 0.3);
        let s2 = sample_noise(&tight, n, 7);
        let var: f64 = s2.phi.iter().map(|p| p * p).sum::<f64>() / n as f64;
        assert!((var - 0.005).abs() / 0.005 < 0.05, "{var}");
    }

    #[test]
    fn code_hamiltonian_ground_degeneracy() {
        // Two quasi-degenerate ground states for the single-rotor code, with
        // the splitting closing as the cutoff grows.
        let c = cons::rp2_1();
        let mut prev_split = f64::INFINITY;
        for l in [4, 6, 8] {
            let h = build_code_hamiltonian(&c, l).unwrap();
            let (vals, _) = low_spectrum(&h, 3);
            let split = vals[1] - vals[0];
            let gap = vals[2] - vals[1];
            assert!(split < 0.5 * gap);
            assert!(split <= prev_split + 1e-12);
            prev_split = split;
        }
        // Diagonal-only variant: ground space is the kernel of all Z checks.
        let c = cons::rp2_4();
        let l = 2;
        let indexer = BoxIndexer::new(c.n(), l);
        let hz = c.hz().to_i64_rows();
        let expected = (0..indexer.dim())
            .filter(|&i| {
                let ls = indexer.labels(i);
                hz.iter().all(|row| row.iter().zip(&ls).map(|(&a, &b)| a * b).sum::<i64>() == 0)
            })
            .count();
        let mut b = HamBuilder::new(indexer.dim());
        for i in 0..indexer.dim() {
            let ls = indexer.labels(i);
            let e: f64 = hz
                .iter()
                .map(|row| {
                    let v: i64 = row.iter().zip(&ls).map(|(&a, &b)| a * b).sum();
                    (v * v) as f64
                })
                .sum();
            b.add_diag(i, e);
        }
        let (vals, _) = low_spectrum(&b.finish(), expected + 1);
        assert!(vals[expected - 1] < 1e-12 && vals[expected] > 0.5);
    }

    #[test]
    fn rp2_4_ground_degeneracy() {
        let c = cons::rp2_4();
        let h = build_code_hamiltonian(&c, 3).unwrap();
        let (vals, _) = low_spectrum(&h, 4);
        let split = vals[1] - vals[0];
        let gap = vals[2] - vals[1];
        assert!(split < 1e-3 * gap, "split {split}, gap {gap}");
    }

    #[test]
    fn lanczos_matches_dense() {
        let c = cons::rp2_4();
        let h = build_code_hamiltonian(&c, 3).unwrap();
        let (dv, _) = dense_low_spectrum(&h, 5);
        let (lv, _) = lanczos_low_spectrum(&h, 5);
        for (a, b) in dv.iter().zip(&lv) {
            assert!((a - b).abs() < 1e-7, "{a} vs {b}");
        }
    }

    #[test]
    fn bacon_shor_identities() {
        let eps = 0.1;
        let l = 16;
        for s_z in [-2i64, 0, 1, 3] {
            for phi_x in [0.3, 1.2, PI] {
                let e0 = bacon_shor_band(s_z, phi_x, eps, l, 3);
                let e1 = bacon_shor_band(s_z + 2, phi_x, eps, l, 3);
                let want = (2 * s_z + 2) as f64 * (1.0 + eps / 2.0);
                for (a, b) in e0.iter().zip(&e1) {
                    assert!((b - a - want).abs() < 1e-8, "sz={s_z}: {} vs {want}", b - a);
                }
            }
        }
        // At phi_x = pi the hopping vanishes: exact charging degeneracies.
        let vals = bacon_shor_band(1, PI, 0.0, 16, 2);
        assert!((vals[1] - vals[0]).abs() < 1e-6, "gap {}", vals[1] - vals[0]);
        // phi_x = 0 and 2 pi give the same spectrum.
        let a = bacon_shor_band(0, 0.0, 0.2, 16, 3);
        let b = bacon_shor_band(0, 2.0 * PI, 0.2, 16, 3);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn four_phase_effective_amplitude() {
        let r = four_phase_effective(100.0, 1.0, 0.0, 0.05, 2).unwrap();
        assert!(r.regime_ok);
        assert!((r.junction_matrix_element + 0.05 / 2.0).abs() < 1e-12);
        let rel = (r.e_j_eff_extracted - r.e_j_eff_predicted).abs() / r.e_j_eff_predicted;
        assert!(rel < 0.1, "extracted {} vs predicted {}", r.e_j_eff_extracted, r.e_j_eff_predicted);
        // E_J = 0: diagonal Hamiltonian, ground states are zero-imbalance.
        let h = four_phase_gadget(100.0, 1.0, 0.0, 0.0, 1).unwrap();
        let (vals, vecs) = low_spectrum(&h, 2);
        assert!(vals[0].abs() < 1e-10);
        let idx = BoxIndexer::new(4, 1);
        for v in &vecs {
            for (i, &x) in v.iter().enumerate() {
                if x.abs() > 1e-8 {
                    let ls = idx.labels(i);
                    assert_eq!(ls[0] + ls[2], 0);
                    assert_eq!(ls[1] + ls[3], 0);
                }
            }
        }
    }

    #[test]
    fn bessel_sanity() {
        assert!((bessel_i(0, 0.0) - 1.0).abs() < 1e-12);
        assert!((bessel_i(1, 0.0)).abs() < 1e-12);
        // I0(1) and I1(1) reference values.
        assert!((bessel_i(0, 1.0) - 1.2660658777520084).abs() < 1e-9);
        assert!((bessel_i(1, 1.0) - 0.5651591039924851).abs() < 1e-9);
    }
}
