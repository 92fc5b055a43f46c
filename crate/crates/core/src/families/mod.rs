//! Isoparametric families: Cartan–Münzner polynomial, multiplicities and a
//! computable presentation of both focal submanifolds.

pub mod calibrate;
pub mod jordan;
pub mod polynomial;
pub mod presentation;
pub mod registry;

use crate::clifford::{CliffordSystem, MultiplicityPair};
use crate::division::DivisionAlgebra;
use crate::error::{Error, Result};
use crate::numkit::{Mat, Vector};

pub use calibrate::{calibrate_coefficients, laplacian_constant, CalibrationSnapshot};
pub use jordan::HermitianCoords;
pub use polynomial::{PolyTerm, Polynomial};
pub use presentation::{Chart, Constraint, ConstraintSet, FocalPresentation, PresentationKind, Side};
pub use registry::{family_from_key, FamilyKey};

/// Seed and sample count used when calibrating templates.
pub const CALIBRATION_SEED: u64 = 0x5eed_ca1b;
pub const CALIBRATION_SAMPLES: usize = 48;

#[derive(Debug, Clone)]
pub struct IsoparFamily {
    /// Canonical registry key.
    pub key: String,
    pub name: String,
    pub g: usize,
    pub multiplicities: MultiplicityPair,
    pub ambient_dim: usize,
    pub polynomial: Polynomial,
    pub presentation_plus: FocalPresentation,
    pub presentation_minus: FocalPresentation,
    pub clifford: Option<CliffordSystem>,
    pub calibration: Option<CalibrationSnapshot>,
}

impl IsoparFamily {
    pub fn presentation(&self, side: Side) -> &FocalPresentation {
        match side {
            Side::Plus => &self.presentation_plus,
            Side::Minus => &self.presentation_minus,
        }
    }

    pub fn m1(&self) -> usize {
        self.multiplicities.m1
    }

    pub fn m2(&self) -> usize {
        self.multiplicities.m2
    }

    /// Codimension in the sphere: `m1 + 1` for `M+`, `m2 + 1` for `M-`.
    pub fn codim(&self, side: Side) -> usize {
        match side {
            Side::Plus => self.m1() + 1,
            Side::Minus => self.m2() + 1,
        }
    }

    pub fn focal_dim(&self, side: Side) -> usize {
        self.ambient_dim - 1 - self.codim(side)
    }

    /// `F` restricted to the unit sphere through `x / |x|`.
    pub fn f(&self, x: &Vector) -> f64 {
        self.polynomial.eval(&(x / x.norm()))
    }

    /// Absolute residuals of both Cartan–Münzner equations at `x`.
    pub fn cm_residual(&self, x: &Vector) -> (f64, f64) {
        calibrate::cm_residual_of(&self.polynomial, self.g, self.m1(), self.m2(), x)
    }

    pub fn laplacian_constant(&self) -> f64 {
        laplacian_constant(self.g, self.m1(), self.m2())
    }
}

fn constraint_presentation(ambient: usize, dim: usize, constraints: Vec<Constraint>) -> FocalPresentation {
    FocalPresentation {
        ambient,
        dim,
        codim: constraints.len(),
        kind: PresentationKind::RegularConstraints(ConstraintSet { constraints }),
    }
}

fn chart_presentation(ambient: usize, dim: usize, codim: usize, chart: Chart) -> FocalPresentation {
    FocalPresentation { ambient, dim, codim, kind: PresentationKind::Chart(chart) }
}

/// Flips the overall sign of a calibrated polynomial so that `f > 0` on the
/// plus side.
fn orient(poly: Polynomial, plus_point: &Vector) -> Polynomial {
    if poly.eval(plus_point) < 0.0 {
        let flipped: Vec<f64> = poly.coefficients().iter().map(|c| -c).collect();
        poly.with_coefficients(&flipped)
    } else {
        poly
    }
}

fn calibrated(
    key: &str,
    template: Polynomial,
    g: usize,
    mult: MultiplicityPair,
    plus_point: &Vector,
) -> Result<(Polynomial, CalibrationSnapshot)> {
    let (poly, residual) =
        calibrate_coefficients(&template, g, mult.m1, mult.m2, CALIBRATION_SAMPLES, CALIBRATION_SEED)?;
    let poly = orient(poly, plus_point);
    let snapshot = CalibrationSnapshot {
        family: key.to_string(),
        coefficients: poly.coefficients().to_vec(),
        seed: CALIBRATION_SEED,
        sample_count: CALIBRATION_SAMPLES,
        residual,
    };
    Ok((poly, snapshot))
}

/// OT-FKM family `F = |x|^4 - 2 sum_i <P_i x, x>^2`.
pub fn otfkm_family(system: CliffordSystem) -> IsoparFamily {
    let mult = system.multiplicities();
    let n = system.dim();
    let forms: Vec<Mat> = system.generators().to_vec();
    let polynomial = Polynomial::new(vec![
        (1.0, PolyTerm::RadiusFourth),
        (-2.0, PolyTerm::SquaredQuadrics { forms: forms.clone() }),
    ]);
    let plus_dim = 2 * mult.m2 + mult.m1;
    let minus_dim = 2 * mult.m1 + mult.m2;
    let plus = constraint_presentation(n, plus_dim, forms.into_iter().map(Constraint::Quadratic).collect());
    let minus = chart_presentation(n, minus_dim, mult.m2 + 1, Chart::CliffordEigenspace { system: system.clone() });
    let signs: String = system.sign_pattern().iter().map(|s| if *s > 0 { '+' } else { '-' }).collect();
    IsoparFamily {
        key: format!("otfkm:m={},k={},signs={signs}", system.m(), system.k()),
        name: format!("OT-FKM ({},{}) signs {signs}", mult.m1, mult.m2),
        g: 4,
        multiplicities: mult,
        ambient_dim: n,
        polynomial,
        presentation_plus: plus,
        presentation_minus: minus,
        clifford: Some(system),
        calibration: None,
    }
}

/// Cartan's `g = 3` family on trace-free Hermitian `3x3` matrices over the
/// given algebra, with focal sets the two Veronese embeddings.
pub fn cartan_g3_family(algebra: DivisionAlgebra) -> Result<IsoparFamily> {
    let coords = HermitianCoords::new(algebra);
    let m = algebra.dim();
    let n = coords.dim();
    let mult = MultiplicityPair::new(m, m);
    let key = format!("cartan3:{algebra}");
    let template = Polynomial::new(vec![(1.0, PolyTerm::JordanCubic { algebra })]);
    let mut e = [[0.0; 8]; 3];
    e[0][0] = 1.0;
    let plus_point = coords.to_coords(&jordan::Mat3::outer(&e)) * 1.5f64.sqrt();
    let (polynomial, snapshot) = calibrated(&key, template, 3, mult, &plus_point)?;
    Ok(IsoparFamily {
        name: format!("Cartan g=3 over {algebra}"),
        key,
        g: 3,
        multiplicities: mult,
        ambient_dim: n,
        polynomial,
        presentation_plus: chart_presentation(n, 2 * m, m + 1, Chart::Veronese { coords, sign: 1.0 }),
        presentation_minus: chart_presentation(n, 2 * m, m + 1, Chart::Veronese { coords, sign: -1.0 }),
        clifford: None,
        calibration: Some(snapshot),
    })
}

/// Quadratic forms `omega -> 2 Pf` of the five `4x4` principal minors of
/// `omega` in `Lambda^2 R^5`; together they give the coordinates of
/// `omega ^ omega`.
pub fn wedge_square_forms() -> Vec<Mat> {
    let pairs = presentation::wedge_index_pairs();
    let idx = |a: usize, b: usize| pairs.iter().position(|&p| p == (a, b)).expect("pair in range");
    let mut forms = Vec::with_capacity(5);
    for skip in (0..5).rev() {
        let s: Vec<usize> = (0..5).filter(|&i| i != skip).collect();
        let (a, b, c, d) = (s[0], s[1], s[2], s[3]);
        let mut q = Mat::zeros(10, 10);
        for (p1, p2, sign) in [((a, b), (c, d), 1.0), ((a, c), (b, d), -1.0), ((a, d), (b, c), 1.0)] {
            let (i, j) = (idx(p1.0, p1.1), idx(p2.0, p2.1));
            q[(i, j)] = sign;
            q[(j, i)] = sign;
        }
        forms.push(q);
    }
    forms
}

/// The `(2,2)` family on `Lambda^2 R^5`, focal sets the oriented
/// Grassmannian of 2-planes and the complex structures on 4-planes.
pub fn grassmann_g4_22_family() -> Result<IsoparFamily> {
    let mult = MultiplicityPair::new(2, 2);
    let key = "grassmann22".to_string();
    let template = Polynomial::new(vec![
        (1.0, PolyTerm::RadiusFourth),
        (-1.0, PolyTerm::SquaredQuadrics { forms: wedge_square_forms() }),
    ]);
    let mut plus_point = Vector::zeros(10);
    plus_point[0] = 1.0;
    let (polynomial, snapshot) = calibrated(&key, template, 4, mult, &plus_point)?;
    Ok(IsoparFamily {
        name: "Grassmann (2,2)".into(),
        key,
        g: 4,
        multiplicities: mult,
        ambient_dim: 10,
        polynomial,
        presentation_plus: chart_presentation(10, 6, 3, Chart::Plucker),
        presentation_minus: chart_presentation(10, 6, 3, Chart::ComplexStructure),
        clifford: None,
        calibration: Some(snapshot),
    })
}

/// `F = |x_1|^2 - |x_2|^2` on `R^{p+1} + R^{q+1}`; the focal sets are the
/// great spheres `S^p` (plus side) and `S^q` (minus side).
pub fn geodesic_sphere_g2_family(p_dim: usize, q_dim: usize) -> Result<IsoparFamily> {
    if p_dim < 1 || q_dim < 1 {
        return Err(Error::contract("great-sphere family needs p, q >= 1"));
    }
    let n = p_dim + q_dim + 2;
    let split = p_dim + 1;
    // M+ = S^p has codimension q + 1.
    let mult = MultiplicityPair::new(q_dim, p_dim);
    let key = format!("geodesic2:p={p_dim},q={q_dim}");
    let template = Polynomial::new(vec![
        (0.5, PolyTerm::BlockSquare { start: 0, end: split }),
        (-0.5, PolyTerm::BlockSquare { start: split, end: n }),
    ]);
    let mut plus_point = Vector::zeros(n);
    plus_point[0] = 1.0;
    let (polynomial, snapshot) = calibrated(&key, template, 2, mult, &plus_point)?;
    let unit = |i: usize| {
        let mut v = Vector::zeros(n);
        v[i] = 1.0;
        Constraint::Linear(v)
    };
    Ok(IsoparFamily {
        name: format!("great spheres S^{p_dim} x S^{q_dim}"),
        key,
        g: 2,
        multiplicities: mult,
        ambient_dim: n,
        polynomial,
        presentation_plus: constraint_presentation(n, p_dim, (split..n).map(unit).collect()),
        presentation_minus: constraint_presentation(n, q_dim, (0..split).map(unit).collect()),
        clifford: None,
        calibration: Some(snapshot),
    })
}
