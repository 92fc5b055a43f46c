//! The four normed division algebras R, C, H, O.
//!
//! All four are stored as `[f64; 8]` with the unused tail zeroed: the
//! basis `1, e1, ..., e7` is arranged so that `{1}`, `{1, e1}` and
//! `{1, e1, e2, e3}` span the real, complex and quaternion subalgebras.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

pub type Octonion = [f64; 8];

/// Oriented Fano-plane lines: `e_a e_b = e_c` and cyclic permutations.
const FANO_LINES: [[usize; 3]; 7] = [[1, 2, 3], [1, 4, 5], [1, 7, 6], [2, 4, 6], [2, 5, 7], [3, 4, 7], [3, 6, 5]];

/// `MUL[i][j] = (sign, k)` with `e_i e_j = sign * e_k`.
const MUL: [[(i8, usize); 8]; 8] = build_table();

const fn build_table() -> [[(i8, usize); 8]; 8] {
    let mut t = [[(1i8, 0usize); 8]; 8];
    let mut i = 0;
    while i < 8 {
        t[0][i] = (1, i);
        t[i][0] = (1, i);
        if i > 0 {
            t[i][i] = (-1, 0);
        }
        i += 1;
    }
    let mut l = 0;
    while l < 7 {
        let [a, b, c] = FANO_LINES[l];
        t[a][b] = (1, c);
        t[b][c] = (1, a);
        t[c][a] = (1, b);
        t[b][a] = (-1, c);
        t[c][b] = (-1, a);
        t[a][c] = (-1, b);
        l += 1;
    }
    t
}

pub fn mul(a: &Octonion, b: &Octonion) -> Octonion {
    let mut out = [0.0; 8];
    for i in 0..8 {
        if a[i] == 0.0 {
            continue;
        }
        for j in 0..8 {
            let (s, k) = MUL[i][j];
            out[k] += f64::from(s) * a[i] * b[j];
        }
    }
    out
}

pub fn conj(a: &Octonion) -> Octonion {
    let mut out = a.map(|x| -x);
    out[0] = a[0];
    out
}

pub fn norm_sq(a: &Octonion) -> f64 {
    a.iter().map(|x| x * x).sum()
}

pub fn add(a: &Octonion, b: &Octonion) -> Octonion {
    std::array::from_fn(|i| a[i] + b[i])
}

pub fn scale(a: &Octonion, s: f64) -> Octonion {
    a.map(|x| x * s)
}

/// Basis element `e_i` (with `e_0 = 1`).
pub fn unit(i: usize) -> Octonion {
    let mut e = [0.0; 8];
    e[i] = 1.0;
    e
}

/// Matrix of left multiplication by `e_i` on the first `dim` coordinates.
/// Integer entries; a signed permutation when `dim` is 1, 2, 4 or 8.
pub fn left_mul_matrix(i: usize, dim: usize) -> Vec<Vec<i8>> {
    let mut m = vec![vec![0i8; dim]; dim];
    for j in 0..dim {
        let (s, k) = MUL[i][j];
        m[k][j] = s;
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DivisionAlgebra {
    Real,
    Complex,
    Quaternion,
    Octonion,
}

impl DivisionAlgebra {
    pub const ALL: [DivisionAlgebra; 4] = [Self::Real, Self::Complex, Self::Quaternion, Self::Octonion];

    pub fn dim(self) -> usize {
        match self {
            Self::Real => 1,
            Self::Complex => 2,
            Self::Quaternion => 4,
            Self::Octonion => 8,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Self::Real => 'R',
            Self::Complex => 'C',
            Self::Quaternion => 'H',
            Self::Octonion => 'O',
        }
    }
}

impl fmt::Display for DivisionAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

impl FromStr for DivisionAlgebra {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "R" => Ok(Self::Real),
            "C" => Ok(Self::Complex),
            "H" => Ok(Self::Quaternion),
            "O" => Ok(Self::Octonion),
            other => Err(Error::Parse(format!("unknown division algebra `{other}`"))),
        }
    }
}
