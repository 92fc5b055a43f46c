//! Symmetric Clifford systems `{P_0, ..., P_m}` on `R^{2l}`.
//!
//! A symmetric Clifford system is a family of symmetric involutions with
//! `P_i P_j + P_j P_i = 2 delta_ij Id`. The construction here is integer
//! valued throughout: skew complex structures `E_1, ..., E_{m-1}` on the
//! irreducible module `R^{delta(m)}` come from left multiplication in the
//! division algebras (and Bott periodicity beyond dimension 8), and are
//! doubled into the `P_i`. Every generator is a signed permutation matrix,
//! so the defining relations hold exactly in floating point.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::division;
use crate::error::{Error, Result};
use crate::numkit::Mat;

type IntMat = DMatrix<i32>;

pub const MAX_M: usize = 16;

/// Multiplicities `(m1, m2)` of an isoparametric family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiplicityPair {
    pub m1: usize,
    pub m2: usize,
}

impl MultiplicityPair {
    pub fn new(m1: usize, m2: usize) -> Self {
        MultiplicityPair { m1, m2 }
    }
}

/// Dimension `delta(m)` of the irreducible module of a symmetric Clifford
/// system with `m + 1` generators on `R^{2 delta(m)}`.
pub fn irreducible_module_dim(m: usize) -> Result<usize> {
    const BASE: [usize; 8] = [1, 2, 4, 4, 8, 8, 8, 8];
    match m {
        1..=8 => Ok(BASE[m - 1]),
        9..=MAX_M => Ok(16 * BASE[m - 9]),
        _ => Err(Error::UnsupportedFamily(format!("Clifford systems with m = {m} (supported: 1..={MAX_M})"))),
    }
}

fn left_mul(i: usize, dim: usize) -> IntMat {
    let rows = division::left_mul_matrix(i, dim);
    IntMat::from_fn(dim, dim, |r, c| i32::from(rows[r][c]))
}

/// `count` anticommuting skew-symmetric complex structures (`E^2 = -Id`) on
/// the smallest possible space. Returns the space dimension and the
/// generators.
fn skew_generators(count: usize) -> (usize, Vec<IntMat>) {
    match count {
        0 => (1, Vec::new()),
        1 => (2, vec![left_mul(1, 2)]),
        2 | 3 => (4, (1..=count).map(|i| left_mul(i, 4)).collect()),
        4..=7 => (8, (1..=count).map(|i| left_mul(i, 8)).collect()),
        _ => {
            // Periodicity: Cl_{count} module = Cl_{count-8} module (x) Cl_8 module.
            let (d, inner) = skew_generators(count - 8);
            let eight = cl8_generators();
            let mut volume = IntMat::identity(16, 16);
            for c in &eight {
                volume *= c;
            }
            let id = IntMat::identity(d, d);
            let mut out: Vec<IntMat> = eight.iter().map(|c| id.kronecker(c)).collect();
            out.extend(inner.iter().map(|a| a.kronecker(&volume)));
            (16 * d, out)
        }
    }
}

/// Eight anticommuting complex structures on `R^16`.
fn cl8_generators() -> Vec<IntMat> {
    let mut out = Vec::with_capacity(8);
    for i in 1..=7 {
        let l = left_mul(i, 8);
        let mut c = IntMat::zeros(16, 16);
        c.view_mut((0, 0), (8, 8)).copy_from(&l);
        c.view_mut((8, 8), (8, 8)).copy_from(&(-l));
        out.push(c);
    }
    let mut j = IntMat::zeros(16, 16);
    for r in 0..8 {
        j[(r, r + 8)] = -1;
        j[(r + 8, r)] = 1;
    }
    out.push(j);
    out
}

/// `m + 1` symmetric generators on the irreducible module `R^{2 delta(m)}`.
fn irreducible_generators(m: usize) -> Result<Vec<IntMat>> {
    let delta = irreducible_module_dim(m)?;
    let (d, skew) = skew_generators(m - 1);
    debug_assert_eq!(d, delta);
    let n = 2 * d;
    let id = IntMat::identity(d, d);
    let mut p0 = IntMat::zeros(n, n);
    p0.view_mut((0, 0), (d, d)).copy_from(&id);
    p0.view_mut((d, d), (d, d)).copy_from(&(-&id));
    let mut p1 = IntMat::zeros(n, n);
    p1.view_mut((0, d), (d, d)).copy_from(&id);
    p1.view_mut((d, 0), (d, d)).copy_from(&id);
    let mut out = vec![p0, p1];
    for e in skew {
        let mut p = IntMat::zeros(n, n);
        p.view_mut((0, d), (d, d)).copy_from(&e);
        p.view_mut((d, 0), (d, d)).copy_from(&(-e));
        out.push(p);
    }
    Ok(out)
}

/// A symmetric Clifford system on `R^{2l}`, `l = k delta(m)`, assembled from
/// `k` irreducible blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct CliffordSystem {
    m: usize,
    k: usize,
    l: usize,
    sign_pattern: Vec<i8>,
    int_generators: Vec<IntMat>,
    generators: Vec<Mat>,
}

impl CliffordSystem {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l(&self) -> usize {
        self.l
    }

    /// Dimension `2l` of the space the generators act on.
    pub fn dim(&self) -> usize {
        2 * self.l
    }

    pub fn sign_pattern(&self) -> &[i8] {
        &self.sign_pattern
    }

    pub fn generators(&self) -> &[Mat] {
        &self.generators
    }

    /// `(m, k delta(m) - m - 1)`.
    pub fn multiplicities(&self) -> MultiplicityPair {
        MultiplicityPair::new(self.m, self.l - self.m - 1)
    }

    /// `P(c) = sum_i c_i P_i`.
    pub fn combination(&self, c: &[f64]) -> Mat {
        assert_eq!(c.len(), self.m + 1, "coefficient vector has wrong length");
        let n = self.dim();
        let mut out = Mat::zeros(n, n);
        for (ci, p) in c.iter().zip(&self.generators) {
            out += p * *ci;
        }
        out
    }

    /// Trace of `P_0 P_1 ... P_m`; distinguishes the inequivalent systems
    /// with `m = 0 mod 4`.
    pub fn product_trace(&self) -> i64 {
        let n = self.dim();
        let mut prod = IntMat::identity(n, n);
        for g in &self.int_generators {
            prod *= g;
        }
        (0..n).map(|i| i64::from(prod[(i, i)])).sum()
    }

    pub fn to_snapshot(&self) -> CliffordSnapshot {
        CliffordSnapshot {
            m: self.m,
            k: self.k,
            l: self.l,
            sign_pattern: self.sign_pattern.clone(),
            generators: self
                .int_generators
                .iter()
                .map(|g| (0..g.nrows()).map(|r| (0..g.ncols()).map(|c| g[(r, c)] as i8).collect()).collect())
                .collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_snapshot())?)
    }

    /// Rebuilds a system from a snapshot, re-validating the relations.
    pub fn from_snapshot(snap: &CliffordSnapshot) -> Result<Self> {
        let n = 2 * snap.l;
        if snap.generators.len() != snap.m + 1 || snap.sign_pattern.len() != snap.k {
            return Err(Error::contract("Clifford snapshot: inconsistent lengths"));
        }
        let mut int_generators = Vec::with_capacity(snap.m + 1);
        for g in &snap.generators {
            if g.len() != n || g.iter().any(|row| row.len() != n) {
                return Err(Error::contract("Clifford snapshot: generator has wrong size"));
            }
            int_generators.push(IntMat::from_fn(n, n, |r, c| i32::from(g[r][c])));
        }
        let system = CliffordSystem {
            m: snap.m,
            k: snap.k,
            l: snap.l,
            sign_pattern: snap.sign_pattern.clone(),
            generators: int_generators.iter().map(|g| g.map(f64::from)).collect(),
            int_generators,
        };
        let residual = verify_clifford(&system);
        if residual > 0.0 {
            return Err(Error::Integrity(format!(
                "Clifford snapshot violates the relations (residual {residual:.3e})"
            )));
        }
        Ok(system)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let snap: CliffordSnapshot = serde_json::from_str(text)?;
        Self::from_snapshot(&snap)
    }

    /// Replaces generator `i`; only meant for building deliberately broken
    /// systems in diagnostics.
    pub fn with_generator(mut self, i: usize, p: Mat) -> Self {
        self.generators[i] = p;
        self
    }
}

/// JSON form of a [`CliffordSystem`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliffordSnapshot {
    pub m: usize,
    pub k: usize,
    pub l: usize,
    pub sign_pattern: Vec<i8>,
    pub generators: Vec<Vec<Vec<i8>>>,
}

/// Builds the block-diagonal system over `k` irreducible modules. In block
/// `b` the last generator `P_m` is multiplied by `sign_pattern[b]`.
pub fn build_clifford_system(m: usize, k: usize, sign_pattern: &[i8]) -> Result<CliffordSystem> {
    let delta = irreducible_module_dim(m)?;
    if k == 0 {
        return Err(Error::contract("Clifford system needs k >= 1"));
    }
    if sign_pattern.len() != k {
        return Err(Error::contract(format!("sign pattern has {} entries, expected k = {k}", sign_pattern.len())));
    }
    if sign_pattern.iter().any(|s| *s != 1 && *s != -1) {
        return Err(Error::contract("sign pattern entries must be +1 or -1"));
    }
    let l = k * delta;
    let m2 = l as i64 - m as i64 - 1;
    if m2 < 1 {
        return Err(Error::Inadmissible { m, k, m2 });
    }
    let irr = irreducible_generators(m)?;
    let block = 2 * delta;
    let n = 2 * l;
    let mut int_generators = vec![IntMat::zeros(n, n); m + 1];
    for (b, &sign) in sign_pattern.iter().enumerate() {
        let off = b * block;
        for (i, p) in irr.iter().enumerate() {
            let s = if i == m { i32::from(sign) } else { 1 };
            int_generators[i].view_mut((off, off), (block, block)).copy_from(&(p * s));
        }
    }
    Ok(CliffordSystem {
        m,
        k,
        l,
        sign_pattern: sign_pattern.to_vec(),
        generators: int_generators.iter().map(|g| g.map(f64::from)).collect(),
        int_generators,
    })
}

/// Max over all pairs of `||P_i P_j + P_j P_i - 2 delta_ij Id||_F` and all
/// `||P_i - P_i^T||_F`.
pub fn verify_clifford(system: &CliffordSystem) -> f64 {
    let n = system.dim();
    let id = Mat::identity(n, n);
    let gens = &system.generators;
    let mut worst: f64 = 0.0;
    for (i, pi) in gens.iter().enumerate() {
        worst = worst.max((pi - pi.transpose()).norm());
        for (j, pj) in gens.iter().enumerate().skip(i) {
            let mut r = pi * pj + pj * pi;
            if i == j {
                r -= &id * 2.0;
            }
            worst = worst.max(r.norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::{eig_sym, random_unit, seeded_rng};

    #[test]
    fn module_dimensions() {
        let expect = [1, 2, 4, 4, 8, 8, 8, 8, 16, 32, 64, 64, 128, 128, 128, 128];
        for (m, d) in (1..=16).zip(expect) {
            assert_eq!(irreducible_module_dim(m).unwrap(), d, "m = {m}");
        }
        assert!(matches!(irreducible_module_dim(0), Err(Error::UnsupportedFamily(_))));
        assert!(matches!(irreducible_module_dim(17), Err(Error::UnsupportedFamily(_))));
    }

    #[test]
    fn every_supported_irreducible_module_is_valid() {
        for m in 1..=MAX_M {
            let int_generators = irreducible_generators(m).unwrap();
            let delta = irreducible_module_dim(m).unwrap();
            let sys = CliffordSystem {
                m,
                k: 1,
                l: delta,
                sign_pattern: vec![1],
                generators: int_generators.iter().map(|g| g.map(f64::from)).collect(),
                int_generators,
            };
            assert_eq!(sys.dim(), 2 * delta);
            assert_eq!(verify_clifford(&sys), 0.0, "m = {m}");
            assert_eq!(sys.generators().len(), m + 1);
        }
    }

    #[test]
    fn m1_pair_is_pauli_type() {
        let g = irreducible_generators(1).unwrap();
        assert_eq!(g[0], IntMat::from_row_slice(2, 2, &[1, 0, 0, -1]));
        assert_eq!(g[1], IntMat::from_row_slice(2, 2, &[0, 1, 1, 0]));
    }

    #[test]
    fn spec_examples() {
        let a = build_clifford_system(1, 4, &[1, 1, 1, 1]).unwrap();
        assert_eq!(a.dim(), 8);
        assert_eq!(a.multiplicities(), MultiplicityPair::new(1, 2));

        let plus = build_clifford_system(4, 2, &[1, 1]).unwrap();
        let mixed = build_clifford_system(4, 2, &[1, -1]).unwrap();
        assert_eq!(plus.dim(), 16);
        assert_eq!(plus.multiplicities(), MultiplicityPair::new(4, 3));
        assert_eq!(mixed.multiplicities(), MultiplicityPair::new(4, 3));
        assert_eq!(verify_clifford(&mixed), 0.0);
        assert_eq!(plus.product_trace().abs(), 16);
        assert_eq!(mixed.product_trace(), 0);

        let big = build_clifford_system(8, 2, &[1, 1]).unwrap();
        assert_eq!(big.dim(), 32);
        assert_eq!(big.multiplicities(), MultiplicityPair::new(8, 7));

        let seven = build_clifford_system(7, 2, &[1, 1]).unwrap();
        assert_eq!(seven.dim(), 32);
        assert_eq!(seven.multiplicities(), MultiplicityPair::new(7, 8));
    }

    #[test]
    fn inadmissible_and_bad_patterns() {
        assert!(matches!(build_clifford_system(1, 2, &[1, 1]), Err(Error::Inadmissible { .. })));
        assert!(matches!(build_clifford_system(8, 1, &[1]), Err(Error::Inadmissible { .. })));
        assert!(matches!(build_clifford_system(8, 2, &[1]), Err(Error::Contract(_))));
        assert!(matches!(build_clifford_system(2, 2, &[1, 0]), Err(Error::Contract(_))));
    }

    #[test]
    fn negated_generator_keeps_relations() {
        let sys = build_clifford_system(2, 2, &[1, 1]).unwrap();
        let flipped = -sys.generators()[1].clone();
        let sys = sys.with_generator(1, flipped);
        assert_eq!(verify_clifford(&sys), 0.0);
    }

    #[test]
    fn perturbed_generator_is_detected() {
        let sys = build_clifford_system(1, 4, &[1; 4]).unwrap();
        let n = sys.dim();
        let bumped = &sys.generators()[1] + Mat::identity(n, n) * 0.01;
        let bad = sys.with_generator(1, bumped);
        let r = verify_clifford(&bad);
        // 2((P + eps I)^2 - I) = 2(2 eps P + eps^2 I), with tr P = 0.
        let eps: f64 = 0.01;
        let exact = 2.0 * ((4.0 * eps * eps + eps.powi(4)) * n as f64).sqrt();
        assert!(r >= 0.02 * (n as f64).sqrt());
        assert!((r - exact).abs() < 1e-12);
    }

    #[test]
    fn generators_are_signed_permutations() {
        let sys = build_clifford_system(5, 1, &[1]).unwrap();
        for p in sys.generators() {
            for r in 0..p.nrows() {
                let row = p.row(r);
                assert_eq!(row.iter().filter(|x| **x != 0.0).count(), 1);
                assert!(row.iter().all(|x| [-1.0, 0.0, 1.0].contains(x)));
            }
        }
    }

    #[test]
    fn unit_combinations_are_balanced_involutions() {
        let sys = build_clifford_system(3, 2, &[1, -1]).unwrap();
        let mut rng = seeded_rng(11);
        for _ in 0..5 {
            let c = random_unit(&mut rng, sys.m() + 1);
            let p = sys.combination(c.as_slice());
            let n = sys.dim();
            assert!((&p * &p - Mat::identity(n, n)).amax() < 1e-13);
            let e = eig_sym(&p).unwrap();
            let plus = e.values.iter().filter(|v| **v > 0.0).count();
            assert_eq!(plus, sys.l());
        }
    }

    #[test]
    fn images_of_focal_points_are_orthonormal() {
        // x = (u + w)/sqrt(2) with u in E+(P0), w in E-(P0) orthogonal to P_i u.
        let sys = build_clifford_system(2, 2, &[1, 1]).unwrap();
        let mut rng = seeded_rng(5);
        let n = sys.dim();
        let p0 = &sys.generators()[0];
        let id = Mat::identity(n, n);
        let u = ((&id + p0) * 0.5) * crate::numkit::gaussian_vector(&mut rng, n);
        let u = &u / u.norm();
        let mut w = ((&id - p0) * 0.5) * crate::numkit::gaussian_vector(&mut rng, n);
        for p in &sys.generators()[1..] {
            let pu = p * &u;
            w -= &pu * pu.dot(&w);
        }
        let w = &w / w.norm();
        let x = (&u + &w) / 2f64.sqrt();
        let images: Vec<_> = sys.generators().iter().map(|p| p * &x).collect();
        for (i, a) in images.iter().enumerate() {
            assert!(a.dot(&x).abs() < 1e-14);
            for (j, b) in images.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((a.dot(b) - target).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn json_snapshot_round_trip() {
        let sys = build_clifford_system(4, 2, &[1, -1]).unwrap();
        let text = sys.to_json().unwrap();
        let back = CliffordSystem::from_json(&text).unwrap();
        assert_eq!(back, sys);
        let mut snap = sys.to_snapshot();
        snap.generators[0][0][0] = 0;
        assert!(CliffordSystem::from_snapshot(&snap).is_err());
    }
}
