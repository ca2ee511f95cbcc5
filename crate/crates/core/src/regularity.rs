//! Algebraic regularity classification: the vectors `B_k^i`, the regularity
//! determinants, the strong-regularity polynomial `F(s)` and the Plücker
//! coordinates of second-order conditions.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{BvpError, Result};
use crate::linalg::{det, CMatrix, CVector};
use crate::model::{NormalizedBoundaryConditions, RawBoundaryConditions};

/// `|Theta| <= THETA_TOL * prod(column norms)` declares a determinant zero.
pub const THETA_TOL: f64 = 1e-9;
/// `F` has a double root when `|c1^2 - 4 c0 c2| <= DISCRIMINANT_TOL (|c1|^2 + 4 |c0 c2|)`.
///
/// Tested on the discriminant rather than on the root gap: rounding of order
/// `u` in the coefficients splits a double root by `sqrt(u)`, far above any
/// sensible gap tolerance, while the scaled discriminant moves only by `O(u)`.
pub const DISCRIMINANT_TOL: f64 = 1e-12;

/// True when `c0 + c1 s + c2 s^2` is a genuine quadratic with two simple roots.
pub fn has_simple_roots(c: &[Complex64; 3]) -> bool {
    let disc = c[1] * c[1] - 4.0 * c[0] * c[2];
    let scale = c[1].norm_sqr() + 4.0 * (c[0] * c[2]).norm();
    quadratic_roots(c).len() == 2 && disc.norm() > DISCRIMINANT_TOL * scale
}

/// `eps_j = exp(2 pi i j / n)`.
pub fn unit_roots(n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64))
        .collect()
}

/// A sector `S_nu` together with its number `p` of decaying solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectorIndex {
    pub nu: u8,
    pub p: usize,
}

impl SectorIndex {
    pub fn new(n: usize, nu: u8) -> Self {
        SectorIndex { nu, p: p_value(n, nu) }
    }
}

/// Number of solutions decaying towards `x = 1` in sector `S_nu`.
///
/// Even order `n = 2q`: `p = q` in both sectors. Odd order `n = 2q + 1`:
/// `p = q + 1` in `S_0` and `p = q` in `S_1`.
pub fn p_value(n: usize, nu: u8) -> usize {
    assert!(nu <= 1, "sector index must be 0 or 1");
    let q = n / 2;
    if n % 2 == 0 || nu == 1 {
        q
    } else {
        q + 1
    }
}

/// `B_k^i`: stacked `b_row^i * eps_k^{order(row)}` over all normalized rows.
pub fn build_b(nbc: &NormalizedBoundaryConditions, k: usize, i: u8) -> CVector {
    let n = nbc.order();
    let eps = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64);
    CVector::from_iterator(
        n,
        nbc.rows().iter().map(|row| {
            let (b0, b1) = row.leading();
            let b = if i == 0 { b0 } else { b1 };
            b * eps.powu(row.order as u32)
        }),
    )
}

/// `Theta_p(first, second) = [B_k^first, k < p | B_k^second, k >= p]`.
pub fn theta_matrix(nbc: &NormalizedBoundaryConditions, p: usize, first: u8, second: u8) -> CMatrix {
    let n = nbc.order();
    let mut m = CMatrix::zeros(n, n);
    for k in 0..n {
        let i = if k < p { first } else { second };
        m.set_column(k, &build_b(nbc, k, i));
    }
    m
}

/// Regularity determinant of sector `nu` and its matrix.
pub fn theta(nbc: &NormalizedBoundaryConditions, nu: u8) -> (Complex64, CMatrix) {
    let p = p_value(nbc.order(), nu);
    let m = theta_matrix(nbc, p, 0, 1);
    (det(&m), m)
}

/// Coefficients `[c0, c1, c2]` of `F(s) = c0 + c1 s + c2 s^2` (even order only).
pub fn f_polynomial(nbc: &NormalizedBoundaryConditions) -> Result<[Complex64; 3]> {
    let n = nbc.order();
    if n % 2 == 1 {
        return Err(BvpError::OddOrder(n));
    }
    let q = n / 2;
    let column = |k: usize| -> CVector {
        if k < q {
            build_b(nbc, k, 0)
        } else {
            build_b(nbc, k, 1)
        }
    };
    // F is affine in s in columns 0 and q; expand by multilinearity.
    let with = |c0: CVector, cq: CVector| {
        let mut m = CMatrix::zeros(n, n);
        for k in 0..n {
            let col = match k {
                0 => c0.clone(),
                k if k == q => cq.clone(),
                k => column(k),
            };
            m.set_column(k, &col);
        }
        det(&m)
    };
    let (x, y) = (build_b(nbc, 0, 0), build_b(nbc, 0, 1));
    let (z, w) = (build_b(nbc, q, 0), build_b(nbc, q, 1));
    let c0 = with(x.clone(), w.clone());
    let c1 = with(x, z.clone()) + with(y.clone(), w);
    let c2 = with(y, z);
    Ok([c0, c1, c2])
}

/// Roots of `c0 + c1 s + c2 s^2`; fewer than two when the polynomial degenerates.
pub fn quadratic_roots(c: &[Complex64; 3]) -> Vec<Complex64> {
    let scale = c.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Vec::new();
    }
    let tiny = 1e-14 * scale;
    if c[2].norm() <= tiny {
        if c[1].norm() <= tiny {
            return Vec::new();
        }
        return vec![-c[0] / c[1]];
    }
    let disc = (c[1] * c[1] - 4.0 * c[2] * c[0]).sqrt();
    // stable pairing: avoid cancellation in -b +- sqrt(disc)
    let s = if (c[1].conj() * disc).re >= 0.0 { disc } else { -disc };
    let big = -(c[1] + s) / 2.0;
    if big.norm() == 0.0 {
        return vec![Complex64::new(0.0, 0.0); 2];
    }
    let r1 = big / c[2];
    let r2 = c[0] / big;
    vec![r1, r2]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegularityClass {
    #[serde(rename = "SR")]
    StronglyRegular,
    #[serde(rename = "WR")]
    WeaklyRegular,
    #[serde(rename = "IRR")]
    Irregular,
}

impl RegularityClass {
    pub fn short(&self) -> &'static str {
        match self {
            RegularityClass::StronglyRegular => "SR",
            RegularityClass::WeaklyRegular => "WR",
            RegularityClass::Irregular => "IRR",
        }
    }

    pub fn is_regular(&self) -> bool {
        !matches!(self, RegularityClass::Irregular)
    }
}

#[derive(Debug, Clone)]
pub struct RegularityReport {
    pub theta0: Complex64,
    pub theta1: Complex64,
    pub witnesses: [CMatrix; 2],
    pub f_coeffs: Option<[Complex64; 3]>,
    pub f_roots: Vec<Complex64>,
    pub klass: RegularityClass,
}

fn column_norm_product(m: &CMatrix) -> f64 {
    m.column_iter().map(|c| c.norm()).product()
}

/// True when `d` is zero relative to the Hadamard bound of `m`.
pub fn is_zero_determinant(d: Complex64, m: &CMatrix) -> bool {
    d.norm() <= THETA_TOL * column_norm_product(m)
}

pub fn classify(nbc: &NormalizedBoundaryConditions) -> RegularityReport {
    let n = nbc.order();
    let (theta0, m0) = theta(nbc, 0);
    let (theta1, m1) = theta(nbc, 1);
    let irregular = is_zero_determinant(theta0, &m0) || is_zero_determinant(theta1, &m1);
    let f_coeffs = f_polynomial(nbc).ok();
    let f_roots = f_coeffs.as_ref().map(quadratic_roots).unwrap_or_default();
    let simple = f_coeffs.as_ref().is_some_and(has_simple_roots);
    let klass = if irregular {
        RegularityClass::Irregular
    } else if n % 2 == 1 || simple {
        RegularityClass::StronglyRegular
    } else {
        RegularityClass::WeaklyRegular
    };
    RegularityReport {
        theta0,
        theta1,
        witnesses: [m0, m1],
        f_coeffs,
        f_roots,
        klass,
    }
}

/// Plücker coordinates `[p01, p02, p03, p12, p13, p23]` of a second-order system,
/// columns ordered `(y(0), Dy(0), y(1), Dy(1))`.
pub fn plucker(raw: &RawBoundaryConditions) -> Result<[Complex64; 6]> {
    if raw.order() != 2 {
        return Err(BvpError::WrongOrder {
            expected: 2,
            got: raw.order(),
        });
    }
    let m = raw.stacked();
    let minor = |i: usize, j: usize| m[(0, i)] * m[(1, j)] - m[(0, j)] * m[(1, i)];
    Ok([minor(0, 1), minor(0, 2), minor(0, 3), minor(1, 2), minor(1, 3), minor(2, 3)])
}

/// `p01 p23 - p02 p13 + p03 p12`, zero for every rank-two input.
///
/// Sign pattern follows the column order used by [`plucker`].
pub fn plucker_relation(p: &[Complex64; 6]) -> Complex64 {
    p[0] * p[5] - p[1] * p[4] + p[2] * p[3]
}
