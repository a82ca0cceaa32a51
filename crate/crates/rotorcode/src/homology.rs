//! Length-3 integer chain complexes and their first homology.
//!
//! The complex is Z^{r_x} --H_X--> Z^n --H_Z^T--> Z^{r_z} (rows act from the
//! left). H_1 = ker(.H_Z^T) / rowspace(H_X) decomposes as Z^{k'} plus cyclic
//! torsion factors; free summands are logical rotors, each Z_d summand a
//! logical qudit. Torsion generators come with weak-boundary certificates
//! s with s*H_X = d*g, the exact witness that g has order d.

use crate::exact::{
    self, cokernel, left_kernel_basis, row_times_matrix, snf_context, IntMatrix,
};
use num_bigint::BigInt;
use num_traits::Zero;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ComplexError {
    #[error("H_X*H_Z^T != 0 at ({row},{col}): {value}")]
    CssViolation { row: usize, col: usize, value: BigInt },
    #[error("dimension mismatch: hx has {hx_cols} columns, hz has {hz_cols}")]
    DimensionMismatch { hx_cols: usize, hz_cols: usize },
}

/// Validated pair (H_X, H_Z) with H_X*H_Z^T = 0.
#[derive(Clone, Debug)]
pub struct ChainComplex3 {
    hx: IntMatrix,
    hz: IntMatrix,
    n: usize,
}

impl ChainComplex3 {
    pub fn hx(&self) -> &IntMatrix {
        &self.hx
    }

    pub fn hz(&self) -> &IntMatrix {
        &self.hz
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

pub fn new_complex(hx: IntMatrix, hz: IntMatrix) -> Result<ChainComplex3, ComplexError> {
    if hx.cols() != hz.cols() {
        return Err(ComplexError::DimensionMismatch { hx_cols: hx.cols(), hz_cols: hz.cols() });
    }
    let prod = hx.mul(&hz.transpose());
    for i in 0..prod.rows() {
        for j in 0..prod.cols() {
            if !prod[(i, j)].is_zero() {
                return Err(ComplexError::CssViolation { row: i, col: j, value: prod[(i, j)].clone() });
            }
        }
    }
    let n = hx.cols();
    Ok(ChainComplex3 { hx, hz, n })
}

/// H_1 content: free rank, torsion orders, paired generator matrices.
///
/// Row ordering in `lx`/`lz`: free generators first, then torsion generators
/// ascending by order. `weak_certs` has one row per torsion generator i with
/// weak_certs_i * H_X = d_i * lx_i.
#[derive(Clone, Debug)]
pub struct HomologyDecomposition {
    pub free_rank: usize,
    pub torsion_orders: Vec<BigInt>,
    pub lx: IntMatrix,
    pub lz: IntMatrix,
    pub weak_certs: IntMatrix,
}

impl HomologyDecomposition {
    /// Total number of logical generators (free + torsion).
    pub fn k(&self) -> usize {
        self.free_rank + self.torsion_orders.len()
    }

    /// Order of generator i: None for free (infinite), Some(d) for torsion.
    pub fn order(&self, i: usize) -> Option<&BigInt> {
        if i < self.free_rank {
            None
        } else {
            Some(&self.torsion_orders[i - self.free_rank])
        }
    }
}

/// Compute the homology decomposition of a validated complex.
pub fn homology(c: &ChainComplex3) -> HomologyDecomposition {
    // Basis of the cycle lattice ker(.H_Z^T); it is a direct summand of Z^n,
    // so H_X expressed in this basis has the same nonzero invariant factors.
    let k_basis = left_kernel_basis(&c.hz.transpose());
    let k_dim = k_basis.rows();
    let k_ctx = snf_context(&k_basis);

    // Rows of H_X in cycle coordinates: R * K = H_X.
    let mut rel_rows = Vec::with_capacity(c.hx.rows());
    for i in 0..c.hx.rows() {
        let r = k_ctx
            .solve_left(c.hx.row(i))
            .expect("CSS condition guarantees im(H_X) lies in the cycle lattice");
        rel_rows.push(r);
    }
    let rel = IntMatrix::from_big_rows(rel_rows, k_dim);

    let cok = cokernel(&rel, k_dim);
    let lx = cok.generator_lifts.mul(&k_basis);
    // Certificates transfer: s*rel = d*g in cycle coords, so s*H_X = d*(g*K).
    let weak_certs = cok.certificates.clone();
    debug_assert!({
        let mut ok = true;
        for (t, d) in cok.torsion_orders.iter().enumerate() {
            let i = cok.free_rank + t;
            let lhs = row_times_matrix(weak_certs.row(t), &c.hx);
            let rhs: Vec<BigInt> = lx.row(i).iter().map(|x| x * d).collect();
            ok &= lhs == rhs;
        }
        ok
    });

    let lz = solve_lz(c, &lx, cok.free_rank, &cok.torsion_orders);
    HomologyDecomposition {
        free_rank: cok.free_rank,
        torsion_orders: cok.torsion_orders,
        lx,
        lz,
        weak_certs,
    }
}

/// Solve for the dual generators: row i of L_Z satisfies L_X * lz_i^T = e_i
/// exactly and lz_i * H_X^T = 0 (free) or = d_i * (integer row) (torsion).
fn solve_lz(c: &ChainComplex3, lx: &IntMatrix, free_rank: usize, torsion: &[BigInt]) -> IntMatrix {
    let n = c.n;
    let rx = c.hx.rows();
    let k = lx.rows();
    let hxt = c.hx.transpose();
    let mut rows = Vec::with_capacity(k);
    for i in 0..k {
        let d = if i < free_rank { BigInt::zero() } else { torsion[i - free_rank].clone() };
        // Unknown (z, y): z*H_X^T - d*y = 0 and z*L_X^T = e_i, stacked as one
        // integer left-solve on an (n+rx) x (rx+k) matrix.
        let mut dblock = IntMatrix::zeros(rx, rx);
        for j in 0..rx {
            dblock[(j, j)] = -&d;
        }
        let top = hxt.hstack(&lx.transpose());
        let bottom = dblock.hstack(&IntMatrix::zeros(rx, k));
        let system = top.vstack(&bottom);
        let mut target = vec![BigInt::zero(); rx + k];
        target[rx + i] = BigInt::from(1);
        let sol = exact::solve_left(&system, &target)
            .expect("dual logical generators exist for every valid complex");
        rows.push(sol[..n].to_vec());
    }
    IntMatrix::from_big_rows(rows, n)
}

/// Torsion of H_1 recomputed from the cochain side: by universal coefficients
/// the torsion of Z^{r_x}/colspace(H_X) equals the torsion of H_1.
pub fn torsion_cochain(c: &ChainComplex3) -> Vec<BigInt> {
    cokernel(&c.hx.transpose(), c.hx.rows()).torsion_orders
}

/// Structure of H_0 = Z^{r_z} / image(.H_Z^T); used for mod-p cross-checks.
pub fn homology_zero(c: &ChainComplex3) -> exact::CokernelStructure {
    cokernel(&c.hz.transpose(), c.hz.rows())
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

#[derive(Debug, Error)]
#[error("{0} is not prime")]
pub struct NotPrime(pub u64);

/// Dimensions (dim H_2, dim H_1, dim H_0) over the prime field F_p.
pub fn homology_mod_p(c: &ChainComplex3, p: u64) -> Result<(usize, usize, usize), NotPrime> {
    if !is_prime(p) {
        return Err(NotPrime(p));
    }
    let rx = exact::rank_mod_p(&c.hx, p);
    let rz = exact::rank_mod_p(&c.hz, p);
    let h2 = c.hx.rows() - rx;
    let h1 = c.n - rz - rx;
    let h0 = c.hz.rows() - rz;
    Ok((h2, h1, h0))
}

/// Betti numbers (b_2, b_1, b_0) over the rationals.
pub fn betti_real(c: &ChainComplex3) -> (usize, usize, usize) {
    let rx = exact::snf(&c.hx).a_rank;
    let rz = exact::snf(&c.hz).a_rank;
    (c.hx.rows() - rx, c.n - rz - rx, c.hz.rows() - rz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::bigvec;
    use num_traits::One;

    pub fn rp2_4_matrices() -> (IntMatrix, IntMatrix) {
        (
            IntMatrix::from_rows(&[vec![1, -1, 0, 0], vec![0, 0, -1, 1], vec![-1, -1, 1, 1]]),
            IntMatrix::from_rows(&[vec![1, 1, 1, 1], vec![-1, -1, -1, -1]]),
        )
    }

    fn check_decomposition(c: &ChainComplex3, h: &HomologyDecomposition) {
        // lx rows are cycles
        assert!(h.lx.mul(&c.hz().transpose()).is_zero());
        // pairing is the exact identity
        assert_eq!(h.lx.mul(&h.lz.transpose()), IntMatrix::identity(h.k()));
        // commutation: free lz rows annihilate H_X^T; torsion rows vanish mod d
        let comm = h.lz.mul(&c.hx().transpose());
        for i in 0..h.k() {
            for j in 0..comm.cols() {
                match h.order(i) {
                    None => assert!(comm[(i, j)].is_zero()),
                    Some(d) => assert!((&comm[(i, j)] % d).is_zero()),
                }
            }
        }
        // orders are exact
        let ctx = snf_context(c.hx());
        for i in 0..h.k() {
            let ord = ctx.order_in_quotient(h.lx.row(i));
            match h.order(i) {
                None => assert_eq!(ord, None),
                Some(d) => assert_eq!(ord.as_ref(), Some(d)),
            }
        }
        // weak certificates
        for t in 0..h.torsion_orders.len() {
            let lhs = row_times_matrix(h.weak_certs.row(t), c.hx());
            let d = &h.torsion_orders[t];
            let rhs: Vec<BigInt> =
                h.lx.row(h.free_rank + t).iter().map(|x| x * d).collect();
            assert_eq!(lhs, rhs);
        }
        // duality: cochain-side torsion matches
        assert_eq!(torsion_cochain(c), h.torsion_orders);
    }

    #[test]
    fn rp2_4_homology() {
        let (hx, hz) = rp2_4_matrices();
        let c = new_complex(hx, hz).unwrap();
        let h = homology(&c);
        assert_eq!(h.free_rank, 0);
        assert_eq!(h.torsion_orders, bigvec(&[2]));
        check_decomposition(&c, &h);
        // the logical class of (0,-1,0,1) is the unit torsion class
        let ctx = snf_context(c.hx());
        assert_eq!(ctx.order_in_quotient(&bigvec(&[0, -1, 0, 1])), Some(BigInt::from(2)));
    }

    #[test]
    fn single_rotor_double_winding() {
        let c = new_complex(IntMatrix::from_rows(&[vec![2]]), IntMatrix::empty(1)).unwrap();
        let h = homology(&c);
        assert_eq!(h.free_rank, 0);
        assert_eq!(h.torsion_orders, bigvec(&[2]));
        assert_eq!(h.lx.row_vec(0), bigvec(&[1]));
        check_decomposition(&c, &h);
        assert_eq!(betti_real(&c), (0, 0, 0));
    }

    #[test]
    fn bare_rotor() {
        let c = new_complex(IntMatrix::empty(1), IntMatrix::empty(1)).unwrap();
        let h = homology(&c);
        assert_eq!(h.free_rank, 1);
        assert!(h.torsion_orders.is_empty());
        check_decomposition(&c, &h);
    }

    #[test]
    fn css_violation_detected() {
        let err = new_complex(IntMatrix::identity(1), IntMatrix::identity(1)).unwrap_err();
        match err {
            ComplexError::CssViolation { row: 0, col: 0, value } => assert!(value.is_one()),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rp2_4_mod_p_and_betti() {
        let (hx, hz) = rp2_4_matrices();
        let c = new_complex(hx, hz).unwrap();
        assert_eq!(homology_mod_p(&c, 2).unwrap().1, 1);
        assert_eq!(homology_mod_p(&c, 3).unwrap().1, 0);
        assert_eq!(betti_real(&c).1, 0);
        assert!(homology_mod_p(&c, 4).is_err());
    }
}
