//! Exact arbitrary-precision integer matrix algebra.
//!
//! Provides dense matrices over [`BigInt`], Smith normal form with tracked
//! unimodular transforms, lattice membership (left solve), left kernels, and
//! quotient-group (cokernel) structure. Everything downstream (homology,
//! classification, distance triviality checks) routes through here.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::fmt;

/// Dense matrix over arbitrary-precision integers, row-major.
///
/// A 0-by-n matrix is valid and represents an empty generator set.
#[derive(Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<BigInt>,
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "IntMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  [")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self[(i, j)])?;
            }
            writeln!(f, "]")?;
        }
        write!(f, "]")
    }
}

impl std::ops::Index<(usize, usize)> for IntMatrix {
    type Output = BigInt;
    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        debug_assert!(i < self.rows && j < self.cols);
        &self.entries[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.entries[i * self.cols + j]
    }
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, entries: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged rows");
        let entries = rows.iter().flat_map(|x| x.iter().map(|&v| BigInt::from(v))).collect();
        IntMatrix { rows: r, cols: c, entries }
    }

    /// Empty (0-row) matrix with a definite column count.
    pub fn empty(cols: usize) -> Self {
        Self::zeros(0, cols)
    }

    pub fn from_big_rows(rows: Vec<Vec<BigInt>>, cols: usize) -> Self {
        let r = rows.len();
        assert!(rows.iter().all(|x| x.len() == cols), "ragged rows");
        IntMatrix { rows: r, cols, entries: rows.into_iter().flatten().collect() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vec(&self, i: usize) -> Vec<BigInt> {
        self.row(i).to_vec()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "dimension mismatch in mul");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let t = a * &other[(k, j)];
                    out[(i, j)] += t;
                }
            }
        }
        out
    }

    pub fn neg(&self) -> Self {
        IntMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| -e).collect(),
        }
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        IntMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e * k).collect(),
        }
    }

    /// Kronecker product (row-major block layout).
    pub fn kron(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.rows * other.rows, self.cols * other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = &self[(i, j)];
                if a.is_zero() {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out[(i * other.rows + k, j * other.cols + l)] = a * &other[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// Horizontal concatenation [self | other].
    pub fn hstack(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows, "row mismatch in hstack");
        let mut out = Self::zeros(self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = self[(i, j)].clone();
            }
            for j in 0..other.cols {
                out[(i, self.cols + j)] = other[(i, j)].clone();
            }
        }
        out
    }

    /// Vertical concatenation [self; other].
    pub fn vstack(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols, "col mismatch in vstack");
        let mut entries = self.entries.clone();
        entries.extend_from_slice(&other.entries);
        IntMatrix { rows: self.rows + other.rows, cols: self.cols, entries }
    }

    pub fn submatrix_rows(&self, range: std::ops::Range<usize>) -> Self {
        let mut rows = Vec::with_capacity(range.len());
        for i in range {
            rows.push(self.row_vec(i));
        }
        Self::from_big_rows(rows, self.cols)
    }

    /// Entrywise reduction mod m into the symmetric-free range [0, m).
    pub fn mod_scalar(&self, m: &BigInt) -> Self {
        IntMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e.mod_floor(m)).collect(),
        }
    }

    pub fn to_i64_rows(&self) -> Vec<Vec<i64>> {
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .map(|e| i64::try_from(e).expect("entry exceeds i64"))
                    .collect()
            })
            .collect()
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> BigInt {
        assert_eq!(self.rows, self.cols, "det of non-square matrix");
        let n = self.rows;
        if n == 0 {
            return BigInt::one();
        }
        let mut m = self.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if m[(k, k)].is_zero() {
                let swap = (k + 1..n).find(|&i| !m[(i, k)].is_zero());
                match swap {
                    Some(i) => {
                        for j in 0..n {
                            let a = m[(k, j)].clone();
                            let b = m[(i, j)].clone();
                            m[(k, j)] = b;
                            m[(i, j)] = a;
                        }
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = &m[(i, j)] * &m[(k, k)] - &m[(i, k)] * &m[(k, j)];
                    m[(i, j)] = num.checked_div(&prev).expect("Bareiss divisibility");
                }
                m[(i, k)] = BigInt::zero();
            }
            prev = m[(k, k)].clone();
        }
        sign * m[(n - 1, n - 1)].clone()
    }

    pub fn is_unimodular(&self) -> bool {
        self.rows == self.cols && self.det().abs().is_one()
    }
}

/// Multiply a row vector by a matrix: v (1 x rows) * m (rows x cols).
pub fn row_times_matrix(v: &[BigInt], m: &IntMatrix) -> Vec<BigInt> {
    assert_eq!(v.len(), m.rows(), "dimension mismatch");
    let mut out = vec![BigInt::zero(); m.cols()];
    for (i, vi) in v.iter().enumerate() {
        if vi.is_zero() {
            continue;
        }
        for j in 0..m.cols() {
            out[j] += vi * &m[(i, j)];
        }
    }
    out
}

pub fn bigvec(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

/// Invariant-factor decomposition `u * a * v = diag(d)` with unimodular u, v.
#[derive(Clone, Debug)]
pub struct SmithForm {
    /// Nonnegative invariant factors along the diagonal, length min(rows, cols).
    pub d: Vec<BigInt>,
    pub u: IntMatrix,
    pub v: IntMatrix,
    /// Number of nonzero invariant factors.
    pub a_rank: usize,
}

/// Smith form plus the exact inverse of `v`, kept for coset-coordinate work.
#[derive(Clone, Debug)]
pub struct SmithContext {
    pub form: SmithForm,
    pub v_inv: IntMatrix,
    pub a: IntMatrix,
}

/// Structure of the quotient Z^ambient / rowspace(a).
#[derive(Clone, Debug)]
pub struct CokernelStructure {
    pub free_rank: usize,
    /// Orders > 1 in invariant-factor form (each divides the next).
    pub torsion_orders: Vec<BigInt>,
    /// One row per generator in the ambient space; free generators first,
    /// then torsion generators ascending by order.
    pub generator_lifts: IntMatrix,
    /// For torsion generator i (in torsion order), a row s with s*a = d_i * g_i.
    pub certificates: IntMatrix,
}

/// Compute the Smith normal form of `a` with a deterministic pivot rule:
/// smallest absolute nonzero entry, ties broken by row-major position.
pub fn snf(a: &IntMatrix) -> SmithForm {
    snf_context(a).form
}

/// Smith form with the tracked inverse of the column transform.
pub fn snf_context(a: &IntMatrix) -> SmithContext {
    let rows = a.rows();
    let cols = a.cols();
    let mut m = a.clone();
    let mut u = IntMatrix::identity(rows);
    let mut v = IntMatrix::identity(cols);
    let mut v_inv = IntMatrix::identity(cols);

    let nmin = rows.min(cols);
    let mut t = 0;
    while t < nmin {
        // Deterministic pivot: smallest |entry| != 0 in the trailing block,
        // ties broken by the lightest row-plus-column bit weight to slow the
        // coefficient growth in the elimination.
        let weight = |m: &IntMatrix, i: usize, j: usize| -> u64 {
            let mut w = 0u64;
            for jj in t..cols {
                w += m[(i, jj)].bits();
            }
            for ii in t..rows {
                w += m[(ii, j)].bits();
            }
            w
        };
        let mut pivot: Option<(usize, usize, u64)> = None;
        for i in t..rows {
            for j in t..cols {
                if m[(i, j)].is_zero() {
                    continue;
                }
                let better = match &pivot {
                    None => true,
                    Some((pi, pj, pw)) => {
                        let cur = m[(i, j)].abs();
                        let best = m[(*pi, *pj)].abs();
                        cur < best || (cur == best && weight(&m, i, j) < *pw)
                    }
                };
                if better {
                    let w = weight(&m, i, j);
                    pivot = Some((i, j, w));
                }
            }
        }
        let Some((pi, pj, _)) = pivot else { break };
        swap_rows(&mut m, &mut u, t, pi);
        swap_cols(&mut m, &mut v, &mut v_inv, t, pj);

        loop {
            // Clear column t below the pivot.
            let mut dirty = false;
            for i in t + 1..rows {
                if m[(i, t)].is_zero() {
                    continue;
                }
                let q = rounded_div(&m[(i, t)], &m[(t, t)]);
                if !q.is_zero() {
                    add_row(&mut m, &mut u, i, t, &-&q);
                }
                if !m[(i, t)].is_zero() {
                    // Remainder smaller than pivot: promote it to pivot.
                    swap_rows(&mut m, &mut u, t, i);
                    dirty = true;
                }
            }
            if dirty {
                continue;
            }
            for j in t + 1..cols {
                if m[(t, j)].is_zero() {
                    continue;
                }
                let q = rounded_div(&m[(t, j)], &m[(t, t)]);
                if !q.is_zero() {
                    add_col(&mut m, &mut v, &mut v_inv, j, t, &-&q);
                }
                if !m[(t, j)].is_zero() {
                    swap_cols(&mut m, &mut v, &mut v_inv, t, j);
                    dirty = true;
                    break;
                }
            }
            if dirty {
                continue;
            }
            // Pivot must divide every entry of the trailing block so the
            // diagonal comes out as a divisibility chain.
            let mut offender = None;
            'scan: for i in t + 1..rows {
                for j in t + 1..cols {
                    if !(&m[(i, j)] % &m[(t, t)]).is_zero() {
                        offender = Some(i);
                        break 'scan;
                    }
                }
            }
            match offender {
                Some(i) => {
                    let one = BigInt::one();
                    add_row(&mut m, &mut u, t, i, &one);
                }
                None => break,
            }
        }
        if m[(t, t)].is_negative() {
            negate_row(&mut m, &mut u, t);
        }
        t += 1;
    }

    let mut d = Vec::with_capacity(nmin);
    for i in 0..nmin {
        d.push(m[(i, i)].clone());
    }
    let a_rank = d.iter().take_while(|x| !x.is_zero()).count();
    debug_assert!(d.iter().skip(a_rank).all(|x| x.is_zero()));
    SmithContext { form: SmithForm { d, u, v, a_rank }, v_inv, a: a.clone() }
}

fn rounded_div(a: &BigInt, b: &BigInt) -> BigInt {
    // Quotient minimizing |a - q*b|; deterministic tie toward floor.
    let (q, r) = a.div_mod_floor(b);
    // Floor remainder has the divisor's sign, so |r - b| < |r| when we bump q.
    let two_r: BigInt = &r * 2;
    if two_r.abs() > b.abs() {
        q + 1
    } else {
        q
    }
}

fn swap_rows(m: &mut IntMatrix, u: &mut IntMatrix, i: usize, j: usize) {
    if i == j {
        return;
    }
    for c in 0..m.cols() {
        let a = m[(i, c)].clone();
        let b = m[(j, c)].clone();
        m[(i, c)] = b;
        m[(j, c)] = a;
    }
    for c in 0..u.cols() {
        let a = u[(i, c)].clone();
        let b = u[(j, c)].clone();
        u[(i, c)] = b;
        u[(j, c)] = a;
    }
}

fn negate_row(m: &mut IntMatrix, u: &mut IntMatrix, i: usize) {
    for c in 0..m.cols() {
        let x = -&m[(i, c)];
        m[(i, c)] = x;
    }
    for c in 0..u.cols() {
        let x = -&u[(i, c)];
        u[(i, c)] = x;
    }
}

/// row_i += k * row_j (applied to m and u).
fn add_row(m: &mut IntMatrix, u: &mut IntMatrix, i: usize, j: usize, k: &BigInt) {
    for c in 0..m.cols() {
        let t = k * &m[(j, c)];
        m[(i, c)] += t;
    }
    for c in 0..u.cols() {
        let t = k * &u[(j, c)];
        u[(i, c)] += t;
    }
}

fn swap_cols(m: &mut IntMatrix, v: &mut IntMatrix, v_inv: &mut IntMatrix, i: usize, j: usize) {
    if i == j {
        return;
    }
    for r in 0..m.rows() {
        let a = m[(r, i)].clone();
        let b = m[(r, j)].clone();
        m[(r, i)] = b;
        m[(r, j)] = a;
    }
    for r in 0..v.rows() {
        let a = v[(r, i)].clone();
        let b = v[(r, j)].clone();
        v[(r, i)] = b;
        v[(r, j)] = a;
    }
    // Inverse of a swap is the same swap, acting on rows of v_inv.
    for c in 0..v_inv.cols() {
        let a = v_inv[(i, c)].clone();
        let b = v_inv[(j, c)].clone();
        v_inv[(i, c)] = b;
        v_inv[(j, c)] = a;
    }
}

/// col_i += k * col_j (applied to m and v; the inverse op applied to v_inv rows).
fn add_col(m: &mut IntMatrix, v: &mut IntMatrix, v_inv: &mut IntMatrix, i: usize, j: usize, k: &BigInt) {
    for r in 0..m.rows() {
        let t = k * &m[(r, j)];
        m[(r, i)] += t;
    }
    for r in 0..v.rows() {
        let t = k * &v[(r, j)];
        v[(r, i)] += t;
    }
    // (I + k E_{ji})^{-1} = I - k E_{ji}: row_j -= k * row_i on v_inv.
    for c in 0..v_inv.cols() {
        let t = k * &v_inv[(i, c)];
        v_inv[(j, c)] -= t;
    }
}

impl SmithContext {
    /// Solve s * a = v over the integers; None if no solution exists.
    pub fn solve_left(&self, v: &[BigInt]) -> Option<Vec<BigInt>> {
        let rows = self.a.rows();
        let cols = self.a.cols();
        assert_eq!(v.len(), cols, "dimension mismatch");
        let w = row_times_matrix(v, &self.form.v);
        let mut t = vec![BigInt::zero(); rows];
        let rank = self.form.a_rank;
        for i in 0..rank {
            let (q, r) = w[i].div_mod_floor(&self.form.d[i]);
            if !r.is_zero() {
                return None;
            }
            t[i] = q;
        }
        for wi in w.iter().skip(rank) {
            if !wi.is_zero() {
                return None;
            }
        }
        let s = row_times_matrix(&t, &self.form.u);
        debug_assert_eq!(row_times_matrix(&s, &self.a), v.to_vec());
        Some(s)
    }

    /// Minimal d >= 1 with d*v in rowspace(a); None means infinite order.
    pub fn order_in_quotient(&self, v: &[BigInt]) -> Option<BigInt> {
        assert_eq!(v.len(), self.a.cols(), "dimension mismatch");
        let w = row_times_matrix(v, &self.form.v);
        let rank = self.form.a_rank;
        for wi in w.iter().skip(rank) {
            if !wi.is_zero() {
                return None;
            }
        }
        let mut order = BigInt::one();
        for i in 0..rank {
            let g = self.form.d[i].gcd(&w[i]);
            let need = self.form.d[i].checked_div(&g).unwrap();
            order = order.lcm(&need);
        }
        Some(order)
    }
}

/// Solve s * a = v over the integers (one-shot; reuse a SmithContext for batches).
pub fn solve_left(a: &IntMatrix, v: &[BigInt]) -> Option<Vec<BigInt>> {
    snf_context(a).solve_left(v)
}

/// Minimal d >= 1 with d*v in rowspace(a); None means infinite order.
pub fn order_in_quotient(a: &IntMatrix, v: &[BigInt]) -> Option<BigInt> {
    snf_context(a).order_in_quotient(v)
}

/// Z-basis of the left kernel {x : x * a = 0}, as rows.
///
/// Rows come from the unimodular transform, so they are primitive and their
/// span contains every integer left-null vector.
pub fn left_kernel_basis(a: &IntMatrix) -> IntMatrix {
    let ctx = snf_context(a);
    let rank = ctx.form.a_rank;
    ctx.form.u.submatrix_rows(rank..a.rows())
}

/// Row-style Hermite reduction data with pivot columns increasing.
struct HermiteRows {
    hnf: IntMatrix,
    /// Pivot column of each HNF row.
    pivots: Vec<usize>,
}

fn hermite_rows(a: &IntMatrix) -> HermiteRows {
    let rows = a.rows();
    let cols = a.cols();
    let mut m = a.clone();
    let mut t = IntMatrix::identity(rows);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r >= rows {
            break;
        }
        // gcd-combine rows r.. so only row r has a nonzero in column c
        loop {
            let mut best: Option<usize> = None;
            for i in r..rows {
                if m[(i, c)].is_zero() {
                    continue;
                }
                match best {
                    None => best = Some(i),
                    Some(b) => {
                        if m[(i, c)].abs() < m[(b, c)].abs() {
                            best = Some(i);
                        }
                    }
                }
            }
            let Some(b) = best else { break };
            swap_rows(&mut m, &mut t, r, b);
            let mut any = false;
            for i in r + 1..rows {
                if m[(i, c)].is_zero() {
                    continue;
                }
                let q = rounded_div(&m[(i, c)], &m[(r, c)]);
                add_row(&mut m, &mut t, i, r, &-&q);
                if !m[(i, c)].is_zero() {
                    any = true;
                }
            }
            if !any {
                break;
            }
        }
        if m[(r, c)].is_zero() {
            continue;
        }
        if m[(r, c)].is_negative() {
            negate_row(&mut m, &mut t, r);
        }
        // Reduce entries above the pivot into [0, pivot).
        for i in 0..r {
            let q = m[(i, c)].div_floor(&m[(r, c)]);
            if !q.is_zero() {
                add_row(&mut m, &mut t, i, r, &-&q);
            }
        }
        pivots.push(c);
        r += 1;
    }
    let _ = t;
    HermiteRows { hnf: m.submatrix_rows(0..r), pivots }
}

/// Structure of Z^ambient / rowspace(a). Free lifts are reduced modulo the
/// relation lattice; torsion lifts are kept basis-extendable (see below).
pub fn cokernel(a: &IntMatrix, ambient_dim: usize) -> CokernelStructure {
    assert_eq!(a.cols(), ambient_dim, "ambient dimension mismatch");
    let ctx = snf_context(a);
    let rank = ctx.form.a_rank;
    let herm = hermite_rows(a);

    let mut free_rows: Vec<Vec<BigInt>> = Vec::new();
    let mut tor_rows: Vec<Vec<BigInt>> = Vec::new();
    let mut tor_orders: Vec<BigInt> = Vec::new();
    let mut certs: Vec<Vec<BigInt>> = Vec::new();

    for i in rank..ambient_dim {
        free_rows.push(hnf_reduce(ctx.v_inv.row(i), &herm).0);
    }
    for i in 0..rank {
        if ctx.form.d[i].is_one() {
            continue;
        }
        let d = ctx.form.d[i].clone();
        // Torsion lifts stay as rows of V^-1, i.e. members of a basis in which
        // the relations are diagonal. Reducing them modulo the relation
        // lattice could move a lift off every extendable basis (for example
        // send f to (1+d)f), after which no dual row pairs with it exactly.
        // Row i of u satisfies u_i * a = d_i * g_i and is the order witness.
        let s = if i < ctx.form.u.rows() {
            ctx.form.u.row_vec(i)
        } else {
            vec![BigInt::zero(); a.rows()]
        };
        let g = ctx.v_inv.row(i).to_vec();
        debug_assert_eq!(
            row_times_matrix(&s, a),
            g.iter().map(|x| x * &d).collect::<Vec<_>>()
        );
        tor_rows.push(g);
        tor_orders.push(d);
        certs.push(s);
    }

    let mut lifts = free_rows;
    lifts.extend(tor_rows);
    CokernelStructure {
        free_rank: ambient_dim - rank,
        torsion_orders: tor_orders,
        generator_lifts: IntMatrix::from_big_rows(lifts, ambient_dim),
        certificates: IntMatrix::from_big_rows(certs, a.rows()),
    }
}

/// Reduce v modulo the Hermite rows; returns the reduced row and the
/// coefficient vector c with v_red = v - c * hnf.
fn hnf_reduce(v: &[BigInt], herm: &HermiteRows) -> (Vec<BigInt>, Vec<BigInt>) {
    let mut out = v.to_vec();
    let mut coeffs = vec![BigInt::zero(); herm.hnf.rows()];
    for (k, &p) in herm.pivots.iter().enumerate() {
        let q = out[p].div_floor(&herm.hnf[(k, p)]);
        if q.is_zero() {
            continue;
        }
        for j in 0..out.len() {
            let t = &q * &herm.hnf[(k, j)];
            out[j] -= t;
        }
        coeffs[k] = q;
    }
    (out, coeffs)
}

/// Rank of `a` over the prime field F_p.
pub fn rank_mod_p(a: &IntMatrix, p: u64) -> usize {
    let pb = BigInt::from(p);
    let mut m: Vec<Vec<u64>> = (0..a.rows())
        .map(|i| {
            a.row(i)
                .iter()
                .map(|e| u64::try_from(e.mod_floor(&pb)).unwrap())
                .collect()
        })
        .collect();
    let rows = a.rows();
    let cols = a.cols();
    let mut rank = 0;
    for c in 0..cols {
        if rank >= rows {
            break;
        }
        let Some(piv) = (rank..rows).find(|&i| m[i][c] % p != 0) else { continue };
        m.swap(rank, piv);
        let inv = mod_inverse(m[rank][c] % p, p);
        for j in c..cols {
            m[rank][j] = m[rank][j] % p * inv % p;
        }
        for i in 0..rows {
            if i == rank || m[i][c] % p == 0 {
                continue;
            }
            let f = m[i][c] % p;
            for j in c..cols {
                let sub = f * m[rank][j] % p;
                m[i][j] = (m[i][j] % p + p - sub) % p;
            }
        }
        rank += 1;
    }
    rank
}

fn mod_inverse(a: u64, p: u64) -> u64 {
    // Fermat inverse; p is prime.
    let mut base = a % p;
    let mut exp = p - 2;
    let mut acc = 1u64;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        exp >>= 1;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_of(form: &SmithForm, rows: usize, cols: usize) -> IntMatrix {
        let mut d = IntMatrix::zeros(rows, cols);
        for (i, x) in form.d.iter().enumerate() {
            d[(i, i)] = x.clone();
        }
        d
    }

    fn check_snf(a: &IntMatrix) -> SmithForm {
        let f = snf(a);
        assert!(f.u.is_unimodular(), "u not unimodular");
        assert!(f.v.is_unimodular(), "v not unimodular");
        let prod = f.u.mul(a).mul(&f.v);
        assert_eq!(prod, diag_of(&f, a.rows(), a.cols()), "multiply-back failed");
        for i in 0..f.a_rank.saturating_sub(1) {
            assert!((&f.d[i + 1] % &f.d[i]).is_zero(), "divisibility chain broken");
        }
        f
    }

    #[test]
    fn snf_single_two() {
        let f = check_snf(&IntMatrix::from_rows(&[vec![2]]));
        assert_eq!(f.d, bigvec(&[2]));
        assert_eq!(f.u, IntMatrix::identity(1));
        assert_eq!(f.v, IntMatrix::identity(1));
    }

    #[test]
    fn snf_identity() {
        let f = check_snf(&IntMatrix::identity(3));
        assert_eq!(f.d, bigvec(&[1, 1, 1]));
    }

    #[test]
    fn snf_wide_and_tall() {
        check_snf(&IntMatrix::from_rows(&[vec![2, 4, 4], vec![-6, 6, 12], vec![10, 4, 16]]));
        check_snf(&IntMatrix::from_rows(&[vec![0, 0], vec![0, 0]]));
        check_snf(&IntMatrix::from_rows(&[vec![1, 2, 3, 4, 5], vec![-2, 0, 1, 1, 3], vec![3, 3, 3, 3, 3], vec![0, 1, 0, -1, 0]]));
        check_snf(&IntMatrix::empty(4));
    }

    #[test]
    fn snf_context_v_inv_is_inverse() {
        let a = IntMatrix::from_rows(&[vec![2, 4, 4], vec![-6, 6, 12]]);
        let ctx = snf_context(&a);
        assert_eq!(ctx.form.v.mul(&ctx.v_inv), IntMatrix::identity(3));
    }

    #[test]
    fn solve_left_identity_and_obstruction() {
        let a = IntMatrix::identity(3);
        let v = bigvec(&[5, -7, 2]);
        assert_eq!(solve_left(&a, &v), Some(v.clone()));
        let a2 = IntMatrix::from_rows(&[vec![2]]);
        assert_eq!(solve_left(&a2, &bigvec(&[1])), None);
        assert_eq!(solve_left(&a2, &bigvec(&[6])), Some(bigvec(&[3])));
    }

    #[test]
    fn left_kernel_cases() {
        // Columns (1,1,1,1) and (-1,-1,-1,-1): kernel rank 3, rows sum to zero.
        let a = IntMatrix::from_rows(&[vec![1, -1], vec![1, -1], vec![1, -1], vec![1, -1]]);
        let k = left_kernel_basis(&a);
        assert_eq!(k.rows(), 3);
        assert!(k.mul(&a).is_zero());
        assert_eq!(left_kernel_basis(&IntMatrix::zeros(3, 2)), IntMatrix::identity(3));
        assert_eq!(left_kernel_basis(&IntMatrix::identity(2)).rows(), 0);
    }

    #[test]
    fn cokernel_cases() {
        let c = cokernel(&IntMatrix::from_rows(&[vec![2]]), 1);
        assert_eq!(c.free_rank, 0);
        assert_eq!(c.torsion_orders, bigvec(&[2]));
        assert_eq!(c.generator_lifts.row_vec(0), bigvec(&[1]));
        // certificate: s * [2] = 2 * [1]
        assert_eq!(c.certificates.row_vec(0), bigvec(&[1]));

        let c2 = cokernel(&IntMatrix::identity(4), 4);
        assert_eq!(c2.free_rank, 0);
        assert!(c2.torsion_orders.is_empty());

        let c3 = cokernel(&IntMatrix::from_rows(&[vec![2, 0], vec![0, 3]]), 2);
        assert_eq!(c3.free_rank, 0);
        assert_eq!(c3.torsion_orders, bigvec(&[6]));
    }

    #[test]
    fn order_in_quotient_cases() {
        let a = IntMatrix::from_rows(&[vec![2, 0], vec![0, 3]]);
        assert_eq!(order_in_quotient(&a, &bigvec(&[1, 0])), Some(BigInt::from(2)));
        assert_eq!(order_in_quotient(&a, &bigvec(&[1, 1])), Some(BigInt::from(6)));
        assert_eq!(order_in_quotient(&a, &bigvec(&[0, 0])), Some(BigInt::one()));
        let b = IntMatrix::from_rows(&[vec![2, 0]]);
        assert_eq!(order_in_quotient(&b, &bigvec(&[0, 1])), None);
    }

    #[test]
    fn rank_mod_p_basic() {
        let a = IntMatrix::from_rows(&[vec![2, 0], vec![0, 3]]);
        assert_eq!(rank_mod_p(&a, 2), 1);
        assert_eq!(rank_mod_p(&a, 3), 1);
        assert_eq!(rank_mod_p(&a, 5), 2);
    }

    #[test]
    fn det_cases() {
        assert_eq!(IntMatrix::identity(4).det(), BigInt::one());
        let m = IntMatrix::from_rows(&[vec![1, 0, 0], vec![1, 1, 0], vec![1, 2, 1]]);
        assert_eq!(m.det(), BigInt::one());
        let s = IntMatrix::from_rows(&[vec![3, 1], vec![1, 3]]);
        assert_eq!(s.det(), BigInt::from(8));
    }
}
