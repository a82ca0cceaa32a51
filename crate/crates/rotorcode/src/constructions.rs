//! Builders for the code families exercised by the test suite: small
//! projective-plane tessellations, cylinders and Moebius strips, 2D/3D tori,
//! a punctured quotient 3-lattice, and three tensor-product recipes on top of
//! the [7,4,3] Hamming code. Each builder returns an analyzed `RotorCode`;
//! `parameter_table` pairs the standard instances with their declared
//! parameters for table-driven regression.
//!
//! Index layouts are fixed and documented per builder so that distance
//! witnesses are reproducible across runs.

use crate::code::{analyze, PhaseVector, RotorCode};
use crate::exact::{cokernel, left_kernel_basis, IntMatrix};
use crate::homology::new_complex;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("invalid size parameter: {0}")]
    InvalidSize(String),
    #[error("factor structure violation: {0}")]
    FactorStructure(String),
    #[error("unknown construction: {0}")]
    UnknownName(String),
}

fn finish(hx_rows: Vec<Vec<i64>>, hz_rows: Vec<Vec<i64>>, n: usize, name: &str) -> RotorCode {
    let hx = if hx_rows.is_empty() {
        IntMatrix::empty(n)
    } else {
        IntMatrix::from_rows(&hx_rows)
    };
    let hz = if hz_rows.is_empty() {
        IntMatrix::empty(n)
    } else {
        IntMatrix::from_rows(&hz_rows)
    };
    let complex = new_complex(hx, hz).expect("builder produced a non-CSS pair");
    analyze(complex, name)
}

/// One-rotor projective plane: a single face traversing the lone edge twice.
pub fn rp2_1() -> RotorCode {
    finish(vec![vec![2]], vec![], 1, "rp2_1")
}

/// Four-rotor projective plane.
pub fn rp2_4() -> RotorCode {
    let hx = vec![vec![1, -1, 0, 0], vec![0, 0, -1, 1], vec![-1, -1, 1, 1]];
    let hz = vec![vec![1, 1, 1, 1], vec![-1, -1, -1, -1]];
    finish(hx, hz, 4, "rp2_4")
}

/// Nine-rotor projective plane.
pub fn rp2_9() -> RotorCode {
    let hx = vec![
        vec![1, -1, 0, 0, 0, 0, 0, 0, 0],
        vec![-1, 0, 1, 0, -1, 0, 1, 0, 0],
        vec![0, 0, 0, -1, 1, 0, 0, 1, -1],
        vec![0, 0, 0, 0, 0, -1, 1, -1, 1],
        vec![0, 1, 1, -1, 0, 1, 0, 0, 0],
    ];
    let hz = vec![
        vec![1, 1, 0, 1, 0, 0, 1, 1, 0],
        vec![0, 0, -1, -1, -1, 0, 0, 0, 0],
        vec![-1, -1, 0, 0, 1, 1, 0, 0, 1],
        vec![0, 0, 1, 0, 0, -1, -1, 0, 0],
        vec![0, 0, 0, 0, 0, 0, 0, -1, -1],
    ];
    finish(hx, hz, 9, "rp2_9")
}

/// Two-torus, w columns by N rows, periodic both ways.
///
/// Edge layout: horizontal edge h(x,y) (from (x,y) to (x+1,y)) at index x*N+y;
/// vertical edge v(x,y) (from (x,y) to (x,y+1)) at index w*N + x*N+y.
pub fn torus2(w: usize, nn: usize) -> Result<RotorCode, BuildError> {
    if w < 2 || nn < 2 {
        return Err(BuildError::InvalidSize(format!("torus2({w},{nn}): need w,N >= 2")));
    }
    let n = 2 * w * nn;
    let h = |x: usize, y: usize| (x % w) * nn + (y % nn);
    let v = |x: usize, y: usize| w * nn + (x % w) * nn + (y % nn);
    let mut hx_rows = Vec::new();
    let mut hz_rows = Vec::new();
    for x in 0..w {
        for y in 0..nn {
            let mut f = vec![0i64; n];
            f[h(x, y)] += 1;
            f[v(x + 1, y)] += 1;
            f[h(x, y + 1)] -= 1;
            f[v(x, y)] -= 1;
            hx_rows.push(f);
            let mut p = vec![0i64; n];
            p[h(x + w - 1, y)] += 1;
            p[h(x, y)] -= 1;
            p[v(x, y + nn - 1)] += 1;
            p[v(x, y)] -= 1;
            hz_rows.push(p);
        }
    }
    Ok(finish(hx_rows, hz_rows, n, &format!("torus2({w},{nn})")))
}

/// Shared body for the cylinder and the Moebius strip: N columns wrapped in x,
/// w vertical edges per column, rough top and bottom, optional orientation
/// twist at the x-wrap.
///
/// Edge layout: vertical edge V(x,r) (height r to r+1) at index x*w+r for
/// x in 0..N, r in 0..w; horizontal edge Hh(x,h) (column x to x+1, interior
/// height h in 1..w) at index N*w + x*(w-1) + (h-1).
fn strip(w: usize, nn: usize, twist: bool, name: &str) -> RotorCode {
    let n = 2 * nn * w - nn;
    let ev = |x: usize, r: usize| x * w + r;
    let eh = |x: usize, h: usize| nn * w + x * (w - 1) + (h - 1);
    let mut hz_rows = Vec::new();
    for x in 0..nn {
        for h in 1..w {
            let mut p = vec![0i64; n];
            p[ev(x, h - 1)] += 1;
            p[ev(x, h)] -= 1;
            p[eh(x, h)] -= 1;
            if x >= 1 {
                p[eh(x - 1, h)] += 1;
            } else if twist {
                p[eh(nn - 1, w - h)] += 1;
            } else {
                p[eh(nn - 1, h)] += 1;
            }
            hz_rows.push(p);
        }
    }
    let mut hx_rows = Vec::new();
    for x in 0..nn {
        for r in 0..w {
            let mut f = vec![0i64; n];
            f[ev(x, r)] += 1;
            if r + 1 <= w - 1 {
                f[eh(x, r + 1)] += 1;
            }
            if r >= 1 {
                f[eh(x, r)] -= 1;
            }
            if x < nn - 1 {
                f[ev(x + 1, r)] -= 1;
            } else if twist {
                f[ev(0, w - 1 - r)] += 1;
            } else {
                f[ev(0, r)] -= 1;
            }
            hx_rows.push(f);
        }
    }
    finish(hx_rows, hz_rows, n, name)
}

/// Cylinder: x-periodic strip with rough top/bottom boundaries.
pub fn cylinder(w: usize, nn: usize) -> Result<RotorCode, BuildError> {
    if w < 2 || nn < 2 {
        return Err(BuildError::InvalidSize(format!("cylinder({w},{nn}): need w,N >= 2")));
    }
    Ok(strip(w, nn, false, &format!("cylinder({w},{nn})")))
}

/// Moebius strip with rough boundaries: cylinder with an orientation twist.
pub fn moebius(w: usize, nn: usize) -> Result<RotorCode, BuildError> {
    if w < 2 || nn < 2 || w % 2 == 0 || nn % 2 == 0 {
        return Err(BuildError::InvalidSize(format!(
            "moebius({w},{nn}): need odd w,N >= 2"
        )));
    }
    Ok(strip(w, nn, true, &format!("moebius({w},{nn})")))
}

/// Thin Moebius strip on 2N rotors: N square faces in a twisted ring, edges
/// 0..N on the top rail and N..2N on the bottom rail.
pub fn moebius_thin(nn: usize) -> Result<RotorCode, BuildError> {
    if nn < 2 {
        return Err(BuildError::InvalidSize(format!("moebius_thin({nn}): need N >= 2")));
    }
    let n = 2 * nn;
    let mut hx_rows = Vec::new();
    for j in 0..nn - 1 {
        let mut f = vec![0i64; n];
        f[j] += 1;
        f[nn + j] -= 1;
        f[nn + j + 1] += 1;
        f[j + 1] -= 1;
        hx_rows.push(f);
    }
    let mut f = vec![0i64; n];
    f[nn - 1] += 1;
    f[2 * nn - 1] -= 1;
    f[nn] -= 1;
    f[0] += 1;
    hx_rows.push(f);
    let mut hz_rows = Vec::new();
    for j in 0..nn {
        let mut p = vec![0i64; n];
        p[j] += 1;
        p[nn + j] += 1;
        hz_rows.push(p);
    }
    Ok(finish(hx_rows, hz_rows, n, &format!("moebius_thin({nn})")))
}

/// Three-torus on 3N^3 edges, periodic in all directions.
///
/// Edge layout: direction-d edge at point p=(x,y,z) has index
/// d*N^3 + (x*N+y)*N + z.
pub fn torus3(nn: usize) -> Result<RotorCode, BuildError> {
    if nn < 2 {
        return Err(BuildError::InvalidSize(format!("torus3({nn}): need N >= 2")));
    }
    let n3 = nn * nn * nn;
    let n = 3 * n3;
    let e = |d: usize, x: usize, y: usize, z: usize| {
        d * n3 + ((x % nn) * nn + (y % nn)) * nn + (z % nn)
    };
    let step = |p: (usize, usize, usize), d: usize| match d {
        0 => (p.0 + 1, p.1, p.2),
        1 => (p.0, p.1 + 1, p.2),
        _ => (p.0, p.1, p.2 + 1),
    };
    let mut hx_rows = Vec::new();
    let mut hz_rows = Vec::new();
    for x in 0..nn {
        for y in 0..nn {
            for z in 0..nn {
                let p = (x, y, z);
                for (d1, d2) in [(0usize, 1usize), (0, 2), (1, 2)] {
                    let mut f = vec![0i64; n];
                    let p1 = step(p, d1);
                    let p2 = step(p, d2);
                    f[e(d1, p.0, p.1, p.2)] += 1;
                    f[e(d2, p1.0, p1.1, p1.2)] += 1;
                    f[e(d1, p2.0, p2.1, p2.2)] -= 1;
                    f[e(d2, p.0, p.1, p.2)] -= 1;
                    hx_rows.push(f);
                }
                let mut v = vec![0i64; n];
                v[e(0, x + nn - 1, y, z)] += 1;
                v[e(1, x, y + nn - 1, z)] += 1;
                v[e(2, x, y, z + nn - 1)] += 1;
                v[e(0, x, y, z)] -= 1;
                v[e(1, x, y, z)] -= 1;
                v[e(2, x, y, z)] -= 1;
                hz_rows.push(v);
            }
        }
    }
    Ok(finish(hx_rows, hz_rows, n, &format!("torus3({nn})")))
}

/// Klein-bottle test fixture: torus layout with an orientation flip on the
/// y-wrap. Used to exercise orientability classification.
pub fn klein(w: usize, nn: usize) -> Result<RotorCode, BuildError> {
    if w < 2 || nn < 2 {
        return Err(BuildError::InvalidSize(format!("klein({w},{nn}): need w,N >= 2")));
    }
    let n = 2 * w * nn;
    let h = |x: usize, y: usize| (x % w) * nn + y;
    let v = |x: usize, y: usize| w * nn + (x % w) * nn + y;
    let mut hx_rows = Vec::new();
    let mut hz_rows = Vec::new();
    for x in 0..w {
        for y in 0..nn {
            let mut f = vec![0i64; n];
            f[h(x, y)] += 1;
            f[v(x + 1, y)] += 1;
            if y + 1 < nn {
                f[h(x, y + 1)] -= 1;
                f[v(x, y)] -= 1;
            } else {
                // y-wrap with reflection: the top edge reappears reversed.
                f[h((2 * w - 1 - x) % w, 0)] += 1;
                f[v(x, y)] -= 1;
            }
            hx_rows.push(f);
            let mut p = vec![0i64; n];
            p[h(x + w - 1, y)] += 1;
            p[h(x, y)] -= 1;
            if y >= 1 {
                p[v(x, y - 1)] += 1;
            } else {
                p[v((2 * w - x) % w, nn - 1)] += 1;
            }
            p[v(x, y)] -= 1;
            hz_rows.push(p);
        }
    }
    Ok(finish(hx_rows, hz_rows, n, &format!("klein({w},{nn})")))
}

/// Union-find over oriented cells: each cell carries a sign relative to its
/// class representative, so gluing maps that reverse orientation are tracked
/// exactly. A cell identified with its own negation is a construction error.
struct SignedUnionFind {
    parent: Vec<usize>,
    sign: Vec<i64>,
}

impl SignedUnionFind {
    fn new(n: usize) -> Self {
        SignedUnionFind { parent: (0..n).collect(), sign: vec![1; n] }
    }

    fn find(&mut self, i: usize) -> (usize, i64) {
        if self.parent[i] == i {
            return (i, 1);
        }
        let (root, s) = self.find(self.parent[i]);
        self.parent[i] = root;
        self.sign[i] *= s;
        (root, self.sign[i])
    }

    /// Impose a = s * b. Panics on an inconsistent (self-negating) gluing.
    fn union(&mut self, a: usize, b: usize, s: i64) {
        let (ra, sa) = self.find(a);
        let (rb, sb) = self.find(b);
        if ra == rb {
            assert_eq!(sa, s * sb, "cell glued to its own negation");
            return;
        }
        // a = sa * ra, b = sb * rb, want a = s*b: ra = (sa * s * sb) * rb.
        self.parent[ra] = rb;
        self.sign[ra] = sa * s * sb;
    }
}

/// Punctured antipodal quotient of an N^3 cubic lattice: the four side planes
/// are glued antipodally with a height flip, the top and bottom are rough.
///
/// Raw cells before gluing, 0-based: z-edges Ez(x,y,z) with x,y in 0..=N and
/// z in 0..N; x-edges Ex(x,y,h) and y-edges Ey(x,y,h) at interior heights
/// h in 1..N. Gluing maps: Ez(N,y,z) = -Ez(0,N-y,N-1-z), Ez(x,N,z) =
/// -Ez(N-x,0,N-1-z), Ex(x,N,h) = -Ex(N-1-x,0,N-h), Ey(N,y,h) =
/// -Ey(0,N-1-y,N-h); vertices P(N,y,h) = P(0,N-y,N-h), P(x,N,h) =
/// P(N-x,0,N-h). Canonical indices are assigned to class representatives in
/// raw order.
pub fn rp3_punctured(nn: usize) -> Result<RotorCode, BuildError> {
    if nn < 2 {
        return Err(BuildError::InvalidSize(format!("rp3_punctured({nn}): need N >= 2")));
    }
    let np1 = nn + 1;
    let nm1 = nn - 1;
    // Raw edge indexing.
    let ez = |x: usize, y: usize, z: usize| (x * np1 + y) * nn + z;
    let n_ez = np1 * np1 * nn;
    let ex = move |x: usize, y: usize, h: usize| n_ez + (x * np1 + y) * nm1 + (h - 1);
    let n_ex = nn * np1 * nm1;
    let ey = move |x: usize, y: usize, h: usize| n_ez + n_ex + (x * nn + y) * nm1 + (h - 1);
    let n_ey = np1 * nn * nm1;
    let raw_edges = n_ez + n_ex + n_ey;

    let mut uf = SignedUnionFind::new(raw_edges);
    for y in 0..=nn {
        for z in 0..nn {
            uf.union(ez(nn, y, z), ez(0, nn - y, nn - 1 - z), -1);
        }
    }
    for x in 0..=nn {
        for z in 0..nn {
            uf.union(ez(x, nn, z), ez(nn - x, 0, nn - 1 - z), -1);
        }
    }
    for x in 0..nn {
        for h in 1..nn {
            uf.union(ex(x, nn, h), ex(nn - 1 - x, 0, nn - h), -1);
        }
    }
    for y in 0..nn {
        for h in 1..nn {
            uf.union(ey(nn, y, h), ey(0, nn - 1 - y, nn - h), -1);
        }
    }
    let mut edge_id = vec![usize::MAX; raw_edges];
    let mut n = 0;
    for i in 0..raw_edges {
        let (r, _) = uf.find(i);
        if r == i {
            edge_id[i] = n;
            n += 1;
        }
    }
    debug_assert_eq!(n, 3 * nn * nn * nn - 2 * nn * nn + nn);
    let canon = |uf: &mut SignedUnionFind, raw: usize| -> (usize, i64) {
        let (r, s) = uf.find(raw);
        (edge_id[r], s)
    };

    // Vertices at interior heights only (rough top/bottom).
    let pv = |x: usize, y: usize, h: usize| (x * np1 + y) * nm1 + (h - 1);
    let raw_verts = np1 * np1 * nm1;
    let mut vf = SignedUnionFind::new(raw_verts);
    for y in 0..=nn {
        for h in 1..nn {
            vf.union(pv(nn, y, h), pv(0, nn - y, nn - h), 1);
        }
    }
    for x in 0..=nn {
        for h in 1..nn {
            vf.union(pv(x, nn, h), pv(nn - x, 0, nn - h), 1);
        }
    }
    let mut vert_id = vec![usize::MAX; raw_verts];
    let mut n_verts = 0;
    for i in 0..raw_verts {
        let (r, _) = vf.find(i);
        if r == i {
            vert_id[i] = n_verts;
            n_verts += 1;
        }
    }

    // Vertex checks: +1 at each edge head, -1 at each tail, from each
    // canonical edge's own orientation.
    let mut hz_rows = vec![vec![0i64; n]; n_verts];
    let add_endpoint = |rows: &mut Vec<Vec<i64>>,
                            vf: &mut SignedUnionFind,
                            col: usize,
                            x: usize,
                            y: usize,
                            h: usize,
                            coeff: i64| {
        if h == 0 || h == nn {
            return;
        }
        let (r, _) = vf.find(pv(x, y, h));
        rows[vert_id[r]][col] += coeff;
    };
    for x in 0..=nn {
        for y in 0..=nn {
            for z in 0..nn {
                let raw = ez(x, y, z);
                if uf.find(raw).0 != raw {
                    continue;
                }
                let col = edge_id[raw];
                add_endpoint(&mut hz_rows, &mut vf, col, x, y, z + 1, 1);
                add_endpoint(&mut hz_rows, &mut vf, col, x, y, z, -1);
            }
        }
    }
    for x in 0..nn {
        for y in 0..=nn {
            for h in 1..nn {
                let raw = ex(x, y, h);
                if uf.find(raw).0 != raw {
                    continue;
                }
                let col = edge_id[raw];
                add_endpoint(&mut hz_rows, &mut vf, col, x + 1, y, h, 1);
                add_endpoint(&mut hz_rows, &mut vf, col, x, y, h, -1);
            }
        }
    }
    for x in 0..=nn {
        for y in 0..nn {
            for h in 1..nn {
                let raw = ey(x, y, h);
                if uf.find(raw).0 != raw {
                    continue;
                }
                let col = edge_id[raw];
                add_endpoint(&mut hz_rows, &mut vf, col, x, y + 1, h, 1);
                add_endpoint(&mut hz_rows, &mut vf, col, x, y, h, -1);
            }
        }
    }

    // Faces. Side-plane duplicates are skipped by restricting the transverse
    // coordinate; boundary edge references are canonicalized with signs.
    let mut hx_rows = Vec::new();
    {
        let mut push_face = |terms: Vec<(usize, i64)>| {
            let mut f = vec![0i64; n];
            for (raw, coeff) in terms {
                let (col, s) = canon(&mut uf, raw);
                f[col] += coeff * s;
            }
            hx_rows.push(f);
        };
        // x-z faces at planes y in 0..N (the y=N plane is the y=0 plane).
        for x in 0..nn {
            for y in 0..nn {
                for r in 0..nn {
                    let mut t = Vec::new();
                    if r >= 1 {
                        t.push((ex(x, y, r), 1));
                    }
                    t.push((ez(x + 1, y, r), 1));
                    if r + 1 < nn {
                        t.push((ex(x, y, r + 1), -1));
                    }
                    t.push((ez(x, y, r), -1));
                    push_face(t);
                }
            }
        }
        // y-z faces at planes x in 0..N.
        for x in 0..nn {
            for y in 0..nn {
                for r in 0..nn {
                    let mut t = Vec::new();
                    if r >= 1 {
                        t.push((ey(x, y, r), 1));
                    }
                    t.push((ez(x, y + 1, r), 1));
                    if r + 1 < nn {
                        t.push((ey(x, y, r + 1), -1));
                    }
                    t.push((ez(x, y, r), -1));
                    push_face(t);
                }
            }
        }
        // Horizontal faces at interior heights.
        for x in 0..nn {
            for y in 0..nn {
                for h in 1..nn {
                    push_face(vec![
                        (ex(x, y, h), 1),
                        (ey(x + 1, y, h), 1),
                        (ex(x, y + 1, h), -1),
                        (ey(x, y, h), -1),
                    ]);
                }
            }
        }
    }
    Ok(finish(hx_rows, hz_rows, n, &format!("rp3_punctured({nn})")))
}

/// Parity-check matrix of the [7,4,3] Hamming code.
pub fn hamming_h() -> IntMatrix {
    IntMatrix::from_rows(&[
        vec![1, 1, 1, 0, 0, 1, 0],
        vec![0, 1, 1, 1, 0, 0, 1],
        vec![1, 0, 1, 1, 1, 0, 0],
    ])
}

/// Generator matrix paired with `hamming_h`.
pub fn hamming_g() -> IntMatrix {
    IntMatrix::from_rows(&[
        vec![1, 0, 0, 0, -1, -1, 0],
        vec![0, 1, 0, 0, 0, -1, -1],
        vec![0, 0, 1, 0, -1, -1, -1],
        vec![0, 0, 0, 1, -1, 0, -1],
    ])
}

/// Complement-space generators for the row space of `hamming_h`.
pub fn hamming_e() -> IntMatrix {
    IntMatrix::from_rows(&[
        vec![1, 0, 0, 0, 0, 0, 0],
        vec![0, 0, 0, 0, 1, 0, 0],
        vec![0, 0, 0, 0, 0, 1, 0],
        vec![0, 0, 0, 0, 0, 0, 1],
    ])
}

/// The square full-rank matrix H^T H (entries reduced mod 2); its integer
/// cokernel is Z_2^3 + Z_4.
pub fn hamming_hth_mod2() -> IntMatrix {
    hamming_h()
        .transpose()
        .mul(&hamming_h())
        .mod_scalar(&BigInt::from(2))
}

/// Which Kuenneth term carries the logical content of a two-factor product.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProductFlavor {
    FreeFree,
    TorsionFree,
    TorsionTorsion,
}

/// Two boundary maps feeding the product builder. `dc` is m_C x n_C (rows map
/// into Z^{n_C}); `dd` is n_D x m_D (rows map into Z^{m_D}).
#[derive(Clone, Debug)]
pub struct ProductInput {
    pub dc: IntMatrix,
    pub dd: IntMatrix,
    pub flavor: ProductFlavor,
}

/// Length-3 product complex of two length-2 complexes:
/// H_X = (dc x 1_{n_D} | -(1_{m_C} x dd)), H_Z = (1_{n_C} x dd^T | dc^T x 1_{m_D}).
pub fn tensor_product(input: &ProductInput, name: &str) -> RotorCode {
    let dc = &input.dc;
    let dd = &input.dd;
    let (m_c, n_c) = (dc.rows(), dc.cols());
    let (n_d, m_d) = (dd.rows(), dd.cols());
    let hx = dc
        .kron(&IntMatrix::identity(n_d))
        .hstack(&IntMatrix::identity(m_c).kron(dd).neg());
    let hz = IntMatrix::identity(n_c)
        .kron(&dd.transpose())
        .hstack(&dc.transpose().kron(&IntMatrix::identity(m_d)));
    let complex = new_complex(hx, hz).expect("product blocks always anticommute");
    analyze(complex, name)
}

/// Logical generators of a product code, one row per generator.
/// Entry i of `orders` is None for a logical rotor (the Z phase row then
/// carries the representative at angle pi) and Some(d) for a Z_d qudit (the Z
/// phase row carries the 2*pi/d representative).
#[derive(Clone, Debug)]
pub struct ProductLogicals {
    pub lx: IntMatrix,
    pub lz: Vec<PhaseVector>,
    pub orders: Vec<Option<BigInt>>,
}

fn kron_rows(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x * y);
        }
    }
    out
}

fn phase_row(first: &[BigInt], second: &[BigInt], den: &BigInt) -> PhaseVector {
    let qs = first
        .iter()
        .chain(second.iter())
        .map(|v| BigRational::new(v.clone(), den.clone()))
        .collect();
    PhaseVector::from_rationals(qs)
}

/// Closed-form logical generators per flavor, derived from the factor
/// kernels, quotient generators, and weak-boundary certificates.
pub fn product_logicals(input: &ProductInput) -> Result<ProductLogicals, BuildError> {
    let dc = &input.dc;
    let dd = &input.dd;
    let (m_c, n_c) = (dc.rows(), dc.cols());
    let (n_d, m_d) = (dd.rows(), dd.cols());
    let zeros2 = vec![BigInt::zero(); m_c * m_d];
    let zeros1 = vec![BigInt::zero(); n_c * n_d];
    match input.flavor {
        ProductFlavor::FreeFree => {
            let cok_c = cokernel(dc, n_c);
            let g_d = left_kernel_basis(dd);
            if !cok_c.torsion_orders.is_empty() || cok_c.free_rank == 0 {
                return Err(BuildError::FactorStructure(
                    "FreeFree needs a torsion-free first-factor quotient of positive rank".into(),
                ));
            }
            if g_d.rows() == 0 {
                return Err(BuildError::FactorStructure(
                    "FreeFree needs a nontrivial second-factor kernel".into(),
                ));
            }
            if left_kernel_basis(dc).rows() != 0 || !cokernel(dd, m_d).torsion_orders.is_empty() {
                return Err(BuildError::FactorStructure(
                    "FreeFree needs full-rank dc and torsion-free dd quotient".into(),
                ));
            }
            let g_c = left_kernel_basis(&dc.transpose());
            let e_d = cokernel(&dd.transpose(), n_d);
            let mut lx_rows = Vec::new();
            let mut lz = Vec::new();
            let mut orders = Vec::new();
            for i in 0..cok_c.free_rank {
                for j in 0..g_d.rows() {
                    let mut row = kron_rows(cok_c.generator_lifts.row(i), g_d.row(j));
                    row.extend_from_slice(&zeros2);
                    lx_rows.push(row);
                    let zrow = kron_rows(g_c.row(i), e_d.generator_lifts.row(j));
                    lz.push(phase_row(&zrow, &zeros2, &BigInt::from(2)));
                    orders.push(None);
                }
            }
            Ok(ProductLogicals {
                lx: IntMatrix::from_big_rows(lx_rows, n_c * n_d + m_c * m_d),
                lz,
                orders,
            })
        }
        ProductFlavor::TorsionFree => {
            let cok_c = cokernel(dc, n_c);
            let g_d = left_kernel_basis(dd);
            if cok_c.free_rank != 0
                || cok_c.torsion_orders.is_empty()
                || left_kernel_basis(dc).rows() != 0
            {
                return Err(BuildError::FactorStructure(
                    "TorsionFree needs a full-rank square dc with torsion quotient".into(),
                ));
            }
            if g_d.rows() == 0 || !cokernel(dd, m_d).torsion_orders.is_empty() {
                return Err(BuildError::FactorStructure(
                    "TorsionFree needs a free dd kernel and torsion-free dd quotient".into(),
                ));
            }
            let k_c = cok_c.torsion_orders.len();
            let cok_ct = cokernel(&dc.transpose(), m_c);
            let e_d = cokernel(&dd.transpose(), n_d);
            let tor_lifts = cok_c
                .generator_lifts
                .submatrix_rows(cok_c.free_rank..cok_c.free_rank + k_c);
            let mut lx_rows = Vec::new();
            let mut lz = Vec::new();
            let mut orders = Vec::new();
            for i in 0..k_c {
                let d_i = cok_c.torsion_orders[i].clone();
                for j in 0..g_d.rows() {
                    let mut row = kron_rows(tor_lifts.row(i), g_d.row(j));
                    row.extend_from_slice(&zeros2);
                    lx_rows.push(row);
                    let zrow =
                        kron_rows(cok_ct.certificates.row(i), e_d.generator_lifts.row(j));
                    lz.push(phase_row(&zrow, &zeros2, &d_i));
                    orders.push(Some(d_i.clone()));
                }
            }
            Ok(ProductLogicals {
                lx: IntMatrix::from_big_rows(lx_rows, n_c * n_d + m_c * m_d),
                lz,
                orders,
            })
        }
        ProductFlavor::TorsionTorsion => {
            let cok_c = cokernel(dc, n_c);
            let cok_d = cokernel(dd, m_d);
            if cok_c.free_rank != 0
                || cok_d.free_rank != 0
                || cok_c.torsion_orders.is_empty()
                || cok_d.torsion_orders.is_empty()
                || left_kernel_basis(dc).rows() != 0
                || left_kernel_basis(dd).rows() != 0
            {
                return Err(BuildError::FactorStructure(
                    "TorsionTorsion needs full-rank square factors with torsion quotients".into(),
                ));
            }
            let cok_ct = cokernel(&dc.transpose(), m_c);
            let cok_dt = cokernel(&dd.transpose(), n_d);
            let k_c = cok_c.torsion_orders.len();
            let k_d = cok_d.torsion_orders.len();
            let mut lx_rows = Vec::new();
            let mut lz = Vec::new();
            let mut orders = Vec::new();
            for i in 0..k_c {
                let d_i = &cok_c.torsion_orders[i];
                for j in 0..k_d {
                    let p_j = &cok_d.torsion_orders[j];
                    let g = d_i.gcd(p_j);
                    if g.is_one() {
                        return Err(BuildError::FactorStructure(format!(
                            "coprime torsion pair ({d_i},{p_j}) yields only trivial logicals"
                        )));
                    }
                    let lam_c = d_i / &g;
                    let lam_d = p_j / &g;
                    let first = kron_rows(cok_c.generator_lifts.row(i), cok_d.certificates.row(j))
                        .iter()
                        .map(|v| v * &lam_c)
                        .collect::<Vec<_>>();
                    let second = kron_rows(cok_c.certificates.row(i), cok_d.generator_lifts.row(j))
                        .iter()
                        .map(|v| -(v * &lam_d))
                        .collect::<Vec<_>>();
                    let mut row = first;
                    row.extend(second);
                    lx_rows.push(row);
                    let (u, v) = smallest_bezout(d_i, p_j, &g);
                    let zfirst =
                        kron_rows(cok_ct.certificates.row(i), cok_dt.generator_lifts.row(j))
                            .iter()
                            .map(|w| w * &u)
                            .collect::<Vec<_>>();
                    let zsecond =
                        kron_rows(cok_ct.generator_lifts.row(i), cok_dt.certificates.row(j))
                            .iter()
                            .map(|w| w * &v)
                            .collect::<Vec<_>>();
                    debug_assert_eq!(zfirst.len(), zeros1.len());
                    lz.push(phase_row(&zfirst, &zsecond, &g));
                    orders.push(Some(g));
                }
            }
            Ok(ProductLogicals {
                lx: IntMatrix::from_big_rows(lx_rows, n_c * n_d + m_c * m_d),
                lz,
                orders,
            })
        }
    }
}

/// Smallest Bezout pair for d*u - p*v = gcd(d, p): minimal nonnegative u,
/// v determined by u.
fn smallest_bezout(d: &BigInt, p: &BigInt, g: &BigInt) -> (BigInt, BigInt) {
    let mut u = BigInt::zero();
    loop {
        let num = d * &u - g;
        if (&num % p).is_zero() {
            return (u.clone(), num / p);
        }
        u += 1;
    }
}

/// The 58-rotor product of the Hamming complex with its transpose.
pub fn product_58() -> (ProductInput, RotorCode) {
    let input = ProductInput {
        dc: hamming_h(),
        dd: hamming_h().transpose(),
        flavor: ProductFlavor::FreeFree,
    };
    let code = tensor_product(&input, "product_58");
    (input, code)
}

/// The 70-rotor product of the square torsion factor with the Hamming
/// transpose.
pub fn product_70() -> (ProductInput, RotorCode) {
    let input = ProductInput {
        dc: hamming_hth_mod2(),
        dd: hamming_h().transpose(),
        flavor: ProductFlavor::TorsionFree,
    };
    let code = tensor_product(&input, "product_70");
    (input, code)
}

/// The 98-rotor product of the square torsion factor with itself.
pub fn product_98() -> (ProductInput, RotorCode) {
    let input = ProductInput {
        dc: hamming_hth_mod2(),
        dd: hamming_hth_mod2(),
        flavor: ProductFlavor::TorsionTorsion,
    };
    let code = tensor_product(&input, "product_98");
    (input, code)
}

/// Finitely generated abelian group in invariant-factor form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbelianGroup {
    pub free_rank: usize,
    /// Invariant factors > 1, ascending, each dividing the next.
    pub torsion: Vec<BigInt>,
}

/// Rewrite an arbitrary multiset of cyclic orders in invariant-factor form.
pub fn invariant_factors(orders: &[BigInt]) -> Vec<BigInt> {
    use std::collections::HashMap;
    // Per prime, exponents sorted descending.
    let mut primes: HashMap<BigInt, Vec<u32>> = HashMap::new();
    for o in orders {
        let mut m = o.abs();
        if m <= BigInt::one() {
            continue;
        }
        let mut p = BigInt::from(2);
        while &p * &p <= m {
            if (&m % &p).is_zero() {
                let mut e = 0u32;
                while (&m % &p).is_zero() {
                    m /= &p;
                    e += 1;
                }
                primes.entry(p.clone()).or_default().push(e);
            }
            p += 1;
        }
        if m > BigInt::one() {
            primes.entry(m).or_default().push(1);
        }
    }
    let mut width = 0;
    for exps in primes.values_mut() {
        exps.sort_unstable_by(|a, b| b.cmp(a));
        width = width.max(exps.len());
    }
    let mut factors = vec![BigInt::one(); width];
    for (p, exps) in &primes {
        for (slot, &e) in exps.iter().enumerate() {
            for _ in 0..e {
                factors[slot] *= p;
            }
        }
    }
    // Slot 0 holds the largest factor; invariant factors ascend.
    factors.reverse();
    factors
}

/// Middle homology of a two-factor product assembled directly from the factor
/// kernels and quotients: ker(dc) x coker(dd) + coker(dc) x ker(dd) +
/// pairwise torsion gcds.
pub fn kunneth_h1(dc: &IntMatrix, dd: &IntMatrix) -> AbelianGroup {
    let a = left_kernel_basis(dc).rows();
    let kd = left_kernel_basis(dd).rows();
    let cok_c = cokernel(dc, dc.cols());
    let cok_d = cokernel(dd, dd.cols());
    let free_rank = a * cok_d.free_rank + cok_c.free_rank * kd;
    let mut orders = Vec::new();
    for p in &cok_d.torsion_orders {
        for _ in 0..a {
            orders.push(p.clone());
        }
    }
    for d in &cok_c.torsion_orders {
        for _ in 0..kd {
            orders.push(d.clone());
        }
    }
    for d in &cok_c.torsion_orders {
        for p in &cok_d.torsion_orders {
            let g = d.gcd(p);
            if g > BigInt::one() {
                orders.push(g);
            }
        }
    }
    AbelianGroup { free_rank, torsion: invariant_factors(&orders) }
}

/// Manifold-orientability classification of a face-edge incidence matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientability {
    Orientable,
    NonOrientableZ2,
    NotAManifoldBoundary,
}

/// Classify `hx` as the face boundary map of a 2-complex: every edge may
/// appear in at most two face slots counting multiplicity (fewer on rough
/// boundaries). Orientable iff some global face-sign flip cancels every
/// interior edge.
pub fn orientability_check(hx: &IntMatrix) -> Orientability {
    let rows = hx.rows();
    let cols = hx.cols();
    let mut constraints = Vec::new();
    let mut doubled = false;
    for j in 0..cols {
        let mut entries = Vec::new();
        let mut weight = BigInt::zero();
        for i in 0..rows {
            let v = &hx[(i, j)];
            if !v.is_zero() {
                entries.push((i, v.clone()));
                weight += v.abs();
            }
        }
        if weight > BigInt::from(2) {
            return Orientability::NotAManifoldBoundary;
        }
        match entries.len() {
            2 => constraints.push((entries[0].0, entries[1].0, entries[0].1.sign_i64() * entries[1].1.sign_i64())),
            1 if weight == BigInt::from(2) => doubled = true,
            _ => {}
        }
    }
    if doubled {
        return Orientability::NonOrientableZ2;
    }
    // s_i * a + s_j * b = 0 with a, b = +-1 forces s_i = -(a*b) s_j.
    let mut uf = SignedUnionFind::new(rows);
    for (i, j, ab) in constraints {
        let (ri, si) = uf.find(i);
        let (rj, sj) = uf.find(j);
        if ri == rj {
            if si != -ab * sj {
                return Orientability::NonOrientableZ2;
            }
        } else {
            uf.parent[ri] = rj;
            uf.sign[ri] = -ab * sj * si;
        }
    }
    Orientability::Orientable
}

trait SignI64 {
    fn sign_i64(&self) -> i64;
}

impl SignI64 for BigInt {
    fn sign_i64(&self) -> i64 {
        if self.is_negative() {
            -1
        } else {
            1
        }
    }
}

/// Declared parameters of a standard instance: rotor count, logical free
/// rank, and torsion invariant factors (ascending).
#[derive(Clone, Debug)]
pub struct DeclaredParams {
    pub n: usize,
    pub free_rank: usize,
    pub torsion: Vec<u64>,
}

/// A built standard instance paired with its declared parameters.
pub struct TableEntry {
    pub code: RotorCode,
    pub declared: DeclaredParams,
}

impl TableEntry {
    /// Free rank and torsion multiset of the computed homology match the
    /// declaration.
    pub fn matches(&self) -> bool {
        let hom = &self.code.hom;
        hom.free_rank == self.declared.free_rank
            && hom.torsion_orders.len() == self.declared.torsion.len()
            && hom
                .torsion_orders
                .iter()
                .zip(&self.declared.torsion)
                .all(|(a, &b)| *a == BigInt::from(b))
    }
}

fn entry(code: RotorCode, free_rank: usize, torsion: Vec<u64>) -> TableEntry {
    let n = code.n();
    TableEntry { code, declared: DeclaredParams { n, free_rank, torsion } }
}

/// All standard instances with their declared parameters, for table-driven
/// regression and the `paper-table` command.
pub fn parameter_table() -> Vec<TableEntry> {
    let mut t = Vec::new();
    t.push(entry(rp2_1(), 0, vec![2]));
    t.push(entry(rp2_4(), 0, vec![2]));
    t.push(entry(rp2_9(), 0, vec![2]));
    for nn in 2..=8 {
        t.push(entry(moebius_thin(nn).unwrap(), 0, vec![2]));
    }
    t.push(entry(moebius(3, 5).unwrap(), 0, vec![2]));
    t.push(entry(cylinder(3, 5).unwrap(), 1, vec![]));
    for w in 2..=5 {
        for nn in 2..=5 {
            t.push(entry(torus2(w, nn).unwrap(), 2, vec![]));
        }
    }
    t.push(entry(torus3(2).unwrap(), 3, vec![]));
    t.push(entry(rp3_punctured(2).unwrap(), 0, vec![2]));
    t.push(entry(product_58().1, 16, vec![]));
    t.push(entry(product_70().1, 0, {
        let mut v = vec![2u64; 12];
        v.extend([4, 4, 4, 4]);
        v
    }));
    t.push(entry(product_98().1, 0, {
        let mut v = vec![2u64; 15];
        v.push(4);
        v
    }));
    t
}

/// Build an instance from a textual name like `torus2(3,5)` or `product_58`.
pub fn build_named(spec: &str) -> Result<RotorCode, BuildError> {
    let spec = spec.trim();
    let (name, args): (&str, Vec<usize>) = match spec.find('(') {
        None => (spec, vec![]),
        Some(i) => {
            let inner = spec[i + 1..]
                .strip_suffix(')')
                .ok_or_else(|| BuildError::UnknownName(spec.into()))?;
            let args = inner
                .split(',')
                .map(|s| s.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| BuildError::UnknownName(spec.into()))?;
            (&spec[..i], args)
        }
    };
    let need = |k: usize| -> Result<(), BuildError> {
        if args.len() == k {
            Ok(())
        } else {
            Err(BuildError::InvalidSize(format!("{name}: expected {k} size argument(s)")))
        }
    };
    match name {
        "rp2_1" => need(0).map(|_| rp2_1()),
        "rp2_4" => need(0).map(|_| rp2_4()),
        "rp2_9" => need(0).map(|_| rp2_9()),
        "torus2" => need(2).and_then(|_| torus2(args[0], args[1])),
        "cylinder" => need(2).and_then(|_| cylinder(args[0], args[1])),
        "moebius" => need(2).and_then(|_| moebius(args[0], args[1])),
        "moebius_thin" => need(1).and_then(|_| moebius_thin(args[0])),
        "torus3" => need(1).and_then(|_| torus3(args[0])),
        "rp3_punctured" => need(1).and_then(|_| rp3_punctured(args[0])),
        "klein" => need(2).and_then(|_| klein(args[0], args[1])),
        "product_58" => need(0).map(|_| product_58().1),
        "product_70" => need(0).map(|_| product_70().1),
        "product_98" => need(0).map(|_| product_98().1),
        _ => Err(BuildError::UnknownName(spec.into())),
    }
}
