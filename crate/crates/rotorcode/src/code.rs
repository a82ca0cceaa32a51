//! Rotor-code bookkeeping on top of a complex and its homology: syndromes,
//! Pauli classification, qudit reduction, and unimodular changes of variables.
//!
//! Phases live on the torus and are tracked two ways: an exact reduced
//! rational q per entry (the angle is 2*pi*q, q in [0,1)) and a float mirror.
//! Logical Z phases are always rational multiples of 2*pi, so triviality and
//! commutation checks are done exactly on the rational side.

use crate::exact::{self, snf_context, IntMatrix};
use crate::homology::{homology, new_complex, ChainComplex3, ComplexError, HomologyDecomposition};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use thiserror::Error;

fn mod1(q: &BigRational) -> BigRational {
    let f = q.floor();
    q - f
}

/// Vector of torus phases with an exact rational part (angle = 2*pi*q) and a
/// float mirror. The exact part is optional: purely numeric witnesses (e.g.
/// spread minimizers) carry floats only.
#[derive(Clone, Debug)]
pub struct PhaseVector {
    qs: Option<Vec<BigRational>>,
    floats: Vec<f64>,
}

impl PhaseVector {
    /// Build from exact rationals q_j (angle 2*pi*q_j), reduced mod 1.
    pub fn from_rationals(qs: Vec<BigRational>) -> Self {
        let qs: Vec<BigRational> = qs.iter().map(mod1).collect();
        let floats = qs
            .iter()
            .map(|q| q.to_f64().expect("rational out of f64 range") * TAU)
            .collect();
        PhaseVector { qs: Some(qs), floats }
    }

    /// Build from integer numerators over a common denominator: q_j = num_j/den.
    pub fn from_fractions(nums: &[i64], den: i64) -> Self {
        Self::from_rationals(
            nums.iter()
                .map(|&n| BigRational::new(BigInt::from(n), BigInt::from(den)))
                .collect(),
        )
    }

    /// Build from float angles (radians), wrapped into [0, 2*pi).
    pub fn from_angles(angles: &[f64]) -> Self {
        PhaseVector {
            qs: None,
            floats: angles.iter().map(|a| a.rem_euclid(TAU)).collect(),
        }
    }

    pub fn zero(n: usize) -> Self {
        Self::from_rationals(vec![BigRational::zero(); n])
    }

    pub fn len(&self) -> usize {
        self.floats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.floats.is_empty()
    }

    /// Float angles in radians, in [0, 2*pi).
    pub fn angles(&self) -> &[f64] {
        &self.floats
    }

    /// Exact rational parts if this vector was built exactly.
    pub fn rationals(&self) -> Option<&[BigRational]> {
        self.qs.as_deref()
    }

    pub fn is_exact(&self) -> bool {
        self.qs.is_some()
    }

    /// Exact check: all entries are 0 mod 2*pi. Panics if not exact.
    pub fn is_zero_exact(&self) -> bool {
        self.qs
            .as_ref()
            .expect("exact phases required")
            .iter()
            .all(|q| q.is_zero())
    }

    /// Float and exact mirrors agree within 1e-12 (absolute, on angles).
    pub fn mirrors_consistent(&self) -> bool {
        match &self.qs {
            None => true,
            Some(qs) => qs.iter().zip(&self.floats).all(|(q, f)| {
                let a = q.to_f64().unwrap() * TAU;
                (a - f).abs() < 1e-12
            }),
        }
    }
}

/// X-type Pauli: X(m) with integer winding vector m.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PauliX(pub Vec<BigInt>);

/// Z-type Pauli: Z(phi) with torus phase vector phi.
#[derive(Clone, Debug)]
pub struct PauliZ(pub PhaseVector);

/// Parameter record [[n, (k', torsion), (d_X?, delta_Z?)]], distances optional
/// until computed.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CodeParams {
    pub n: usize,
    pub free_rank: usize,
    /// Torsion orders in invariant-factor form.
    pub torsion: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_x: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_z_bounds: Option<(f64, f64)>,
}

impl CodeParams {
    pub fn display(&self) -> String {
        let tor = torsion_display(&self.torsion);
        let dx = self.d_x.map_or("?".to_string(), |d| d.to_string());
        let dz = self
            .delta_z_bounds
            .map_or("?".to_string(), |(lo, hi)| format!("[{lo:.4},{hi:.4}]"));
        format!("[[{},({},{}),({},{})]]", self.n, self.free_rank, tor, dx, dz)
    }
}

/// Group equal torsion factors for display: [2,2,4] -> "2^2*4"; empty -> "0".
pub fn torsion_display(torsion: &[u64]) -> String {
    if torsion.is_empty() {
        return "0".to_string();
    }
    let mut parts = Vec::new();
    let mut i = 0;
    while i < torsion.len() {
        let v = torsion[i];
        let mut cnt = 0;
        while i < torsion.len() && torsion[i] == v {
            cnt += 1;
            i += 1;
        }
        if cnt == 1 {
            parts.push(format!("{v}"));
        } else {
            parts.push(format!("{v}^{cnt}"));
        }
    }
    parts.join("*")
}

/// A validated complex bundled with its homology and parameter record.
#[derive(Clone, Debug)]
pub struct RotorCode {
    pub complex: ChainComplex3,
    pub hom: HomologyDecomposition,
    pub name: String,
    pub params: CodeParams,
}

/// Build a RotorCode by computing the homology of a validated complex.
pub fn analyze(complex: ChainComplex3, name: &str) -> RotorCode {
    let hom = homology(&complex);
    let params = CodeParams {
        n: complex.n(),
        free_rank: hom.free_rank,
        torsion: hom
            .torsion_orders
            .iter()
            .map(|d| d.to_u64().expect("torsion order exceeds u64"))
            .collect(),
        d_x: None,
        delta_z_bounds: None,
    };
    RotorCode { complex, hom, name: name.to_string(), params }
}

impl RotorCode {
    pub fn n(&self) -> usize {
        self.complex.n()
    }

    pub fn hx(&self) -> &IntMatrix {
        self.complex.hx()
    }

    pub fn hz(&self) -> &IntMatrix {
        self.complex.hz()
    }

    /// Number of logical generators (free + torsion).
    pub fn k(&self) -> usize {
        self.hom.k()
    }
}

/// Syndrome of an X error: H_Z * e^T.
pub fn x_syndrome(code: &RotorCode, e: &[BigInt]) -> Vec<BigInt> {
    assert_eq!(e.len(), code.n(), "length mismatch");
    let hz = code.hz();
    (0..hz.rows())
        .map(|i| hz.row(i).iter().zip(e).map(|(a, b)| a * b).sum())
        .collect()
}

/// Syndrome of a Z error: H_X * phi^T mod 2*pi (exact when phi is exact).
pub fn z_syndrome(code: &RotorCode, phi: &PhaseVector) -> PhaseVector {
    assert_eq!(phi.len(), code.n(), "length mismatch");
    let hx = code.hx();
    match phi.rationals() {
        Some(qs) => {
            let rows = (0..hx.rows())
                .map(|i| {
                    let mut acc = BigRational::zero();
                    for (j, q) in qs.iter().enumerate() {
                        acc += BigRational::from(hx[(i, j)].clone()) * q;
                    }
                    acc
                })
                .collect();
            PhaseVector::from_rationals(rows)
        }
        None => {
            let angles: Vec<f64> = (0..hx.rows())
                .map(|i| {
                    hx.row(i)
                        .iter()
                        .zip(phi.angles())
                        .map(|(a, p)| a.to_f64().unwrap() * p)
                        .sum::<f64>()
                })
                .collect();
            PhaseVector::from_angles(&angles)
        }
    }
}

/// Classification of an X operator against the stabilizer/logical structure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum XClass {
    Stabilizer,
    /// Class coordinates: free entries exact integers, torsion entries
    /// reduced into [0, d_i).
    Logical(Vec<BigInt>),
    NonCommuting(Vec<BigInt>),
}

pub fn classify_x(code: &RotorCode, v: &[BigInt]) -> XClass {
    assert_eq!(v.len(), code.n(), "length mismatch");
    let syn = x_syndrome(code, v);
    if syn.iter().any(|s| !s.is_zero()) {
        return XClass::NonCommuting(syn);
    }
    let stacked = code.hom.lx.vstack(code.hx());
    let sol = exact::solve_left(&stacked, v)
        .expect("cycles decompose over logical generators plus stabilizers");
    let k = code.k();
    let mut coords: Vec<BigInt> = sol[..k].to_vec();
    for i in 0..k {
        if let Some(d) = code.hom.order(i) {
            coords[i] = coords[i].clone() % d;
            if coords[i].is_negative() {
                coords[i] += d;
            }
        }
    }
    if coords.iter().all(|c| c.is_zero()) {
        XClass::Stabilizer
    } else {
        XClass::Logical(coords)
    }
}

#[derive(Clone, Debug)]
pub enum ZClass {
    Stabilizer,
    /// Logical phases as exact rationals q_i (angle 2*pi*q_i), mod 1.
    Logical(Vec<BigRational>),
    NonCommuting(PhaseVector),
}

/// Classify an exact Z operator: solve phi = psi*L_Z + nu*H_Z over the torus.
pub fn classify_z(code: &RotorCode, phi: &PhaseVector) -> ZClass {
    assert_eq!(phi.len(), code.n(), "length mismatch");
    let qs = phi.rationals().expect("classify_z requires exact phases");
    let syn = z_syndrome(code, phi);
    if !syn.is_zero_exact() {
        return ZClass::NonCommuting(syn);
    }
    // x * A = q (mod 1) with A = [L_Z; H_Z] is solvable iff q*V is integral
    // past the rank of A; then x = t*U with t_i = (q*V)_i / d_i.
    let a = code.hom.lz.vstack(code.hz());
    let ctx = snf_context(&a);
    let qv: Vec<BigRational> = {
        let v = &ctx.form.v;
        (0..v.cols())
            .map(|j| {
                let mut acc = BigRational::zero();
                for (i, q) in qs.iter().enumerate() {
                    acc += q * BigRational::from(v[(i, j)].clone());
                }
                acc
            })
            .collect()
    };
    let rank = ctx.form.a_rank;
    for x in qv.iter().skip(rank) {
        if !x.is_integer() {
            // phi commutes with all X stabilizers but is not generated by
            // L_Z and H_Z; report it as an unresolvable remainder.
            return ZClass::NonCommuting(syn);
        }
    }
    let mut t = vec![BigRational::zero(); a.rows()];
    for i in 0..rank {
        t[i] = &qv[i] / BigRational::from(ctx.form.d[i].clone());
    }
    let k = code.k();
    let psi: Vec<BigRational> = (0..k)
        .map(|j| {
            let mut acc = BigRational::zero();
            for (i, ti) in t.iter().enumerate() {
                acc += ti * BigRational::from(ctx.form.u[(i, j)].clone());
            }
            mod1(&acc)
        })
        .collect();
    if psi.iter().all(|p| p.is_zero()) {
        ZClass::Stabilizer
    } else {
        ZClass::Logical(psi)
    }
}

/// Qudit reduction C^d: H_X taken mod d, Z phases restricted to d-th roots.
#[derive(Clone, Debug)]
pub struct QuditCode {
    pub d: u64,
    pub hx_mod: IntMatrix,
    pub hz_mod: IntMatrix,
    /// Per rotor-logical generator: does its image stay a nontrivial qudit
    /// logical (no s with s*H_X = lx_i mod d)?
    pub survives: Vec<bool>,
}

#[derive(Debug, Error)]
#[error("qudit dimension must be >= 2, got {0}")]
pub struct BadQuditDim(pub u64);

pub fn qudit_reduce(code: &RotorCode, d: u64) -> Result<QuditCode, BadQuditDim> {
    if d < 2 {
        return Err(BadQuditDim(d));
    }
    let db = BigInt::from(d);
    let n = code.n();
    // s*H_X + d*t = lx_i solvable iff lx_i is in rowspace of [H_X; d*I].
    let mut dlat = IntMatrix::zeros(n, n);
    for i in 0..n {
        dlat[(i, i)] = db.clone();
    }
    let ctx = snf_context(&code.hx().vstack(&dlat));
    let survives = (0..code.k())
        .map(|i| ctx.solve_left(code.hom.lx.row(i)).is_none())
        .collect();
    Ok(QuditCode {
        d,
        hx_mod: code.hx().mod_scalar(&db),
        hz_mod: code.hz().mod_scalar(&db),
        survives,
    })
}

#[derive(Debug, Error)]
#[error("matrix is not unimodular (|det| != 1)")]
pub struct NotUnimodular;

/// Exact inverse of a unimodular integer matrix via its Smith form (D = I).
pub fn unimodular_inverse(m: &IntMatrix) -> Result<IntMatrix, NotUnimodular> {
    if !m.is_unimodular() {
        return Err(NotUnimodular);
    }
    let ctx = snf_context(m);
    // u*m*v = I, so m^{-1} = v*u.
    if ctx.form.d.iter().any(|d| !d.is_one()) {
        return Err(NotUnimodular);
    }
    Ok(ctx.form.v.mul(&ctx.form.u))
}

/// Rotor-variable change by a unimodular M: H_X' = H_X*M, H_Z' = H_Z*(M^T)^{-1}.
pub fn change_of_variables(code: &RotorCode, m: &IntMatrix) -> Result<RotorCode, NotUnimodular> {
    let m_inv = unimodular_inverse(m)?;
    let hx2 = code.hx().mul(m);
    let hz2 = code.hz().mul(&m_inv.transpose());
    let complex = new_complex(hx2, hz2).expect("unimodular change preserves the CSS condition");
    Ok(analyze(complex, &code.name))
}

/// On-disk code description: {name, n, hx, hz, meta?}.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CodeFile {
    pub name: String,
    pub n: usize,
    pub hx: Vec<Vec<i64>>,
    pub hz: Vec<Vec<i64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub meta: Option<serde_json::Value>,
}

#[derive(Debug, Error)]
pub enum CodeFileError {
    #[error("malformed code file: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error("declared n = {declared} but matrices have {actual} columns")]
    WrongN { declared: usize, actual: usize },
}

impl CodeFile {
    pub fn from_code(code: &RotorCode) -> Self {
        CodeFile {
            name: code.name.clone(),
            n: code.n(),
            hx: code.hx().to_i64_rows(),
            hz: code.hz().to_i64_rows(),
            meta: None,
        }
    }

    pub fn to_code(&self) -> Result<RotorCode, CodeFileError> {
        let hx = rows_to_matrix(&self.hx, self.n);
        let hz = rows_to_matrix(&self.hz, self.n);
        if hx.cols() != self.n || hz.cols() != self.n {
            return Err(CodeFileError::WrongN {
                declared: self.n,
                actual: hx.cols().max(hz.cols()),
            });
        }
        let complex = new_complex(hx, hz)?;
        Ok(analyze(complex, &self.name))
    }

    pub fn from_json(s: &str) -> Result<Self, CodeFileError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("code file serializes")
    }
}

/// Rows that may be empty inherit the declared column count.
fn rows_to_matrix(rows: &[Vec<i64>], n: usize) -> IntMatrix {
    if rows.is_empty() {
        IntMatrix::empty(n)
    } else {
        IntMatrix::from_rows(rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::bigvec;

    fn rp2_4() -> RotorCode {
        let hx = IntMatrix::from_rows(&[vec![1, -1, 0, 0], vec![0, 0, -1, 1], vec![-1, -1, 1, 1]]);
        let hz = IntMatrix::from_rows(&[vec![1, 1, 1, 1], vec![-1, -1, -1, -1]]);
        analyze(new_complex(hx, hz).unwrap(), "rp2_4")
    }

    #[test]
    fn analyze_params() {
        let code = rp2_4();
        assert_eq!(code.params.n, 4);
        assert_eq!(code.params.free_rank, 0);
        assert_eq!(code.params.torsion, vec![2]);
        assert_eq!(code.params.display(), "[[4,(0,2),(?,?)]]");
    }

    #[test]
    fn syndromes() {
        let code = rp2_4();
        assert_eq!(x_syndrome(&code, &bigvec(&[1, 0, 0, 0])), bigvec(&[1, -1]));
        let hx_row = code.hx().row_vec(0);
        assert!(x_syndrome(&code, &hx_row).iter().all(|x| x.is_zero()));
        // Z(0,0,pi,pi) commutes with all X stabilizers
        let phi = PhaseVector::from_fractions(&[0, 0, 1, 1], 2);
        assert!(z_syndrome(&code, &phi).is_zero_exact());
        // Z(0,0,pi/2,pi/2) is detected on the third stabilizer
        let bad = PhaseVector::from_fractions(&[0, 0, 1, 1], 4);
        let syn = z_syndrome(&code, &bad);
        assert!(!syn.is_zero_exact());
    }

    #[test]
    fn classify_x_cases() {
        let code = rp2_4();
        match classify_x(&code, &bigvec(&[0, -1, 0, 1])) {
            XClass::Logical(c) => assert_eq!(c, bigvec(&[1])),
            other => panic!("expected logical, got {other:?}"),
        }
        assert_eq!(classify_x(&code, &bigvec(&[0, -2, 0, 2])), XClass::Stabilizer);
        assert!(matches!(classify_x(&code, &bigvec(&[1, 0, 0, 0])), XClass::NonCommuting(_)));
    }

    #[test]
    fn classify_z_cases() {
        let code = rp2_4();
        let half = BigRational::new(BigInt::from(1), BigInt::from(2));
        match classify_z(&code, &PhaseVector::from_fractions(&[0, 0, 1, 1], 2)) {
            ZClass::Logical(psi) => assert_eq!(psi, vec![half.clone()]),
            other => panic!("expected logical, got {other:?}"),
        }
        // spread form (-pi/2, -pi/2, pi/2, pi/2)
        match classify_z(&code, &PhaseVector::from_fractions(&[-1, -1, 1, 1], 4)) {
            ZClass::Logical(psi) => assert_eq!(psi, vec![half]),
            other => panic!("expected logical, got {other:?}"),
        }
        // a stabilizer phase: 0.37-ish multiple of an H_Z row needs rationals
        let third = BigRational::new(BigInt::from(1), BigInt::from(3));
        let stab = PhaseVector::from_rationals(vec![third.clone(); 4]);
        assert!(matches!(classify_z(&code, &stab), ZClass::Stabilizer));
        assert!(matches!(
            classify_z(&code, &PhaseVector::from_fractions(&[1, 0, 0, 0], 4)),
            ZClass::NonCommuting(_)
        ));
    }

    #[test]
    fn qudit_reduction_survival() {
        let code = rp2_4();
        assert_eq!(qudit_reduce(&code, 2).unwrap().survives, vec![true]);
        assert_eq!(qudit_reduce(&code, 3).unwrap().survives, vec![false]);
        assert!(qudit_reduce(&code, 1).is_err());
    }

    #[test]
    fn change_of_variables_invariants() {
        let code = rp2_4();
        let id = IntMatrix::identity(4);
        let same = change_of_variables(&code, &id).unwrap();
        assert_eq!(same.hx(), code.hx());
        assert_eq!(same.hz(), code.hz());

        let pascal = IntMatrix::from_rows(&[
            vec![1, 0, 0, 0],
            vec![1, 1, 0, 0],
            vec![1, 2, 1, 0],
            vec![1, 3, 3, 1],
        ]);
        let moved = change_of_variables(&code, &pascal).unwrap();
        assert_eq!(moved.params.free_rank, code.params.free_rank);
        assert_eq!(moved.params.torsion, code.params.torsion);
        let back = change_of_variables(&moved, &unimodular_inverse(&pascal).unwrap()).unwrap();
        assert_eq!(back.hx(), code.hx());
        assert_eq!(back.hz(), code.hz());

        let not_uni = IntMatrix::from_rows(&[vec![2, 0, 0, 0]; 1]);
        assert!(unimodular_inverse(&not_uni.vstack(&IntMatrix::zeros(3, 4))).is_err());
    }

    #[test]
    fn code_file_roundtrip() {
        let code = rp2_4();
        let file = CodeFile::from_code(&code);
        let json = file.to_json();
        let parsed = CodeFile::from_json(&json).unwrap();
        let code2 = parsed.to_code().unwrap();
        assert_eq!(code2.hx(), code.hx());
        assert_eq!(code2.params, code.params);
        assert_eq!(parsed.to_json(), json);
    }

    #[test]
    fn phase_vector_mirrors() {
        let p = PhaseVector::from_fractions(&[1, -1, 3], 4);
        assert!(p.mirrors_consistent());
        assert!((p.angles()[1] - 3.0 * TAU / 4.0).abs() < 1e-12);
    }
}
