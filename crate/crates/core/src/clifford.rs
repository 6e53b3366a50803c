//! Real Clifford modules: the J-matrices of an H-type algebra.

use crate::error::{HtypeError, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// `m` skew-orthogonal n×n matrices with `J_i J_j + J_j J_i = -2 δ_ij I`.
///
/// `J[i][(b, a)]` is the component `g(J_{Z_i} X_a, X_b)`, so the index
/// convention `J^i_{ab}` used elsewhere reads `J[i][(b, a)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CliffordRep {
    pub n: usize,
    pub m: usize,
    pub j: Vec<DMatrix<f64>>,
}

/// Dimension of an irreducible real module of `Cl_m` (generators squaring to -1).
pub fn irreducible_dim(m: usize) -> usize {
    const TABLE: [usize; 8] = [2, 4, 4, 8, 8, 8, 8, 16];
    assert!(m >= 1);
    let mut k = m;
    let mut mult = 1;
    while k > 8 {
        k -= 8;
        mult *= 16;
    }
    TABLE[k - 1] * mult
}

pub fn admissible(n: usize, m: usize) -> bool {
    n >= 1 && m >= 1 && n % irreducible_dim(m) == 0
}

/// Octonion products `e_i e_j = e_k` on the imaginary units 1..7.
const OCT_TRIPLES: [(usize, usize, usize); 7] =
    [(1, 2, 3), (1, 4, 5), (1, 7, 6), (2, 4, 6), (2, 5, 7), (3, 4, 7), (3, 6, 5)];

fn octonion_left(a: usize) -> DMatrix<f64> {
    // basis (1, e1, ..., e7); column b = e_a * e_b
    let mut mat = DMatrix::zeros(8, 8);
    for b in 0..8 {
        let (k, s) = oct_mul(a, b);
        mat[(k, b)] = s;
    }
    mat
}

fn oct_mul(a: usize, b: usize) -> (usize, f64) {
    if a == 0 {
        return (b, 1.0);
    }
    if b == 0 {
        return (a, 1.0);
    }
    if a == b {
        return (0, -1.0);
    }
    for &(i, j, k) in OCT_TRIPLES.iter() {
        for (x, y, z) in [(i, j, k), (j, k, i), (k, i, j)] {
            if (a, b) == (x, y) {
                return (z, 1.0);
            }
            if (a, b) == (y, x) {
                return (z, -1.0);
            }
        }
    }
    unreachable!("octonion table incomplete")
}

fn quaternion_left(a: usize) -> DMatrix<f64> {
    // basis (1, i, j, k), a in 1..=3
    let table = |x: usize, y: usize| -> (usize, f64) {
        match (x, y) {
            (0, y) => (y, 1.0),
            (x, 0) => (x, 1.0),
            (x, y) if x == y => (0, -1.0),
            (1, 2) => (3, 1.0),
            (2, 3) => (1, 1.0),
            (3, 1) => (2, 1.0),
            (2, 1) => (3, -1.0),
            (3, 2) => (1, -1.0),
            (1, 3) => (2, -1.0),
            _ => unreachable!(),
        }
    };
    let mut mat = DMatrix::zeros(4, 4);
    for b in 0..4 {
        let (k, s) = table(a, b);
        mat[(k, b)] = s;
    }
    mat
}

fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// Generators of the irreducible module for 1 <= m <= 8.
fn base_generators(m: usize) -> Vec<DMatrix<f64>> {
    match m {
        1 => vec![DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])],
        2 | 3 => (1..=m).map(quaternion_left).collect(),
        4..=7 => (1..=m).map(octonion_left).collect(),
        8 => {
            let i8 = DMatrix::<f64>::identity(8, 8);
            let z8 = DMatrix::<f64>::zeros(8, 8);
            let mut gens: Vec<DMatrix<f64>> = (1..=7)
                .map(|a| {
                    let l = octonion_left(a);
                    block2(&z8, &l, &l, &z8)
                })
                .collect();
            gens.push(block2(&z8, &(-&i8), &i8, &z8));
            gens
        }
        _ => unreachable!(),
    }
}

fn block2(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, d: &DMatrix<f64>) -> DMatrix<f64> {
    let k = a.nrows();
    let mut out = DMatrix::zeros(2 * k, 2 * k);
    out.view_mut((0, 0), (k, k)).copy_from(a);
    out.view_mut((0, k), (k, k)).copy_from(b);
    out.view_mut((k, 0), (k, k)).copy_from(c);
    out.view_mut((k, k), (k, k)).copy_from(d);
    out
}

fn irreducible_generators(m: usize) -> Vec<DMatrix<f64>> {
    if m <= 8 {
        return base_generators(m);
    }
    // periodicity: Cl_{m} from Cl_8 ⊗ Cl_{m-8} using the Cl_8 volume element
    let g8 = base_generators(8);
    let inner = irreducible_generators(m - 8);
    let d = inner[0].nrows();
    let mut omega = DMatrix::<f64>::identity(16, 16);
    for g in &g8 {
        omega = omega * g;
    }
    let id = DMatrix::<f64>::identity(d, d);
    let mut gens: Vec<DMatrix<f64>> = g8.iter().map(|g| kron(g, &id)).collect();
    gens.extend(inner.iter().map(|g| kron(&omega, g)));
    gens
}

pub fn build_rep(n: usize, m: usize) -> Result<CliffordRep> {
    if n == 0 || m == 0 || !admissible(n, m) {
        let d = if m == 0 { 0 } else { irreducible_dim(m) };
        return Err(HtypeError::Inadmissible { n, m, d });
    }
    let gens = irreducible_generators(m);
    let d = gens[0].nrows();
    let copies = n / d;
    let j = gens
        .iter()
        .map(|g| kron(&DMatrix::<f64>::identity(copies, copies), g))
        .collect();
    Ok(CliffordRep { n, m, j })
}

/// Max-norm residuals of the four H-type invariants.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct HtypeResiduals {
    pub skew: f64,
    pub orthogonal: f64,
    pub square: f64,
    pub polarization: f64,
    pub tol: f64,
    pub pass: bool,
}

impl HtypeResiduals {
    pub fn max(&self) -> f64 {
        self.skew.max(self.orthogonal).max(self.square).max(self.polarization)
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, &x| a.max(x.abs()))
}

pub fn verify_htype(rep: &CliffordRep, tol: f64) -> HtypeResiduals {
    let n = rep.n;
    let id = DMatrix::<f64>::identity(n, n);
    let mut skew = 0.0f64;
    let mut orth = 0.0f64;
    let mut sq = 0.0f64;
    let mut pol = 0.0f64;
    for (i, ji) in rep.j.iter().enumerate() {
        skew = skew.max(max_abs(&(ji.transpose() + ji)));
        orth = orth.max(max_abs(&(ji.transpose() * ji - &id)));
        sq = sq.max(max_abs(&(ji * ji + &id)));
        for jj in rep.j.iter().skip(i + 1) {
            pol = pol.max(max_abs(&(ji * jj + jj * ji)));
        }
    }
    let mut r = HtypeResiduals { skew, orthogonal: orth, square: sq, polarization: pol, tol, pass: false };
    r.pass = r.max() <= tol && r.max().is_finite();
    r
}

impl CliffordRep {
    /// `J_z = Σ z^i J_i`.
    pub fn j_of(&self, z: &[f64]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n, self.n);
        for (zi, ji) in z.iter().zip(&self.j) {
            out += ji * *zi;
        }
        out
    }

    /// Component `J^i_{ab} = g(J_{Z_i} X_a, X_b)`.
    #[inline]
    pub fn comp(&self, i: usize, a: usize, b: usize) -> f64 {
        self.j[i][(b, a)]
    }
}

#[derive(Serialize, Deserialize)]
struct RepJson {
    n: usize,
    m: usize,
    #[serde(rename = "J")]
    j: Vec<Vec<Vec<f64>>>,
}

impl Serialize for CliffordRep {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let j = self
            .j
            .iter()
            .map(|mat| (0..self.n).map(|r| (0..self.n).map(|c| mat[(r, c)]).collect()).collect())
            .collect();
        RepJson { n: self.n, m: self.m, j }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CliffordRep {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RepJson::deserialize(d)?;
        if raw.j.len() != raw.m {
            return Err(serde::de::Error::custom("J must hold m matrices"));
        }
        let mut j = Vec::with_capacity(raw.m);
        for rows in &raw.j {
            if rows.len() != raw.n || rows.iter().any(|r| r.len() != raw.n) {
                return Err(serde::de::Error::custom("each J[i] must be n x n"));
            }
            j.push(DMatrix::from_fn(raw.n, raw.n, |r, c| rows[r][c]));
        }
        Ok(CliffordRep { n: raw.n, m: raw.m, j })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_values() {
        let d: Vec<usize> = (1..=9).map(irreducible_dim).collect();
        assert_eq!(d, vec![2, 4, 4, 8, 8, 8, 8, 16, 32]);
        assert!(admissible(2, 1));
        assert!(!admissible(3, 1));
        assert!(admissible(4, 3));
        assert!(!admissible(4, 4));
    }

    #[test]
    fn plane_rotation() {
        let r = build_rep(2, 1).unwrap();
        let e1 = nalgebra::DVector::from_vec(vec![1.0, 0.0]);
        let e2 = nalgebra::DVector::from_vec(vec![0.0, 1.0]);
        assert_eq!(&r.j[0] * &e1, e2);
        assert_eq!(&r.j[0] * &e2, -e1);
        assert_eq!(verify_htype(&r, 0.0).max(), 0.0);
    }

    #[test]
    fn quaternion_sign_convention() {
        let r = build_rep(4, 3).unwrap();
        assert_eq!(&r.j[0] * &r.j[1], r.j[2].clone());
    }

    #[test]
    fn scaled_generator_square_residual() {
        let mut r = build_rep(2, 1).unwrap();
        r.j[0] *= 2.0;
        let res = verify_htype(&r, 1e-12);
        assert_eq!(res.square, 3.0);
        assert!(!res.pass);
    }

    #[test]
    fn all_small_pairs_and_periodicity() {
        for m in 1..=9 {
            let d = irreducible_dim(m);
            for k in 1..=2 {
                let r = build_rep(k * d, m).unwrap();
                assert!(verify_htype(&r, 1e-14).pass, "n={} m={}", k * d, m);
            }
        }
    }

    #[test]
    fn rejects_inadmissible() {
        let e = build_rep(6, 3).unwrap_err();
        assert!(e.to_string().contains("d(m)=4"));
    }

    #[test]
    fn json_roundtrip() {
        let r = build_rep(8, 5).unwrap();
        let s = serde_json::to_string(&r).unwrap();
        let back: CliffordRep = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }
}
