use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::Result;
use crate::fss::{FundamentalSystem, RhoPoint};
use crate::linalg::{det, CMatrix, CVector};
use crate::model::NormalizedBoundaryConditions;
use crate::problem::Problem;

/// Boundary forms split by endpoint: `(V_0, V_1)` with
/// `V_i[row] = rho^{-order(row)} sum_k c^i_k d_i[k]`, where `d_0`, `d_1` are
/// the derivative values `D^k y` at `x = 0` and `x = 1`.
pub fn boundary_form_parts(
    nbc: &NormalizedBoundaryConditions,
    rho: Complex64,
    d0: &[Complex64],
    d1: &[Complex64],
) -> (CVector, CVector) {
    let n = nbc.order();
    let mut v0 = CVector::zeros(n);
    let mut v1 = CVector::zeros(n);
    for (r, row) in nbc.rows().iter().enumerate() {
        let scale = rho.powi(-(row.order as i32));
        let mut s0 = Complex64::new(0.0, 0.0);
        let mut s1 = Complex64::new(0.0, 0.0);
        for k in 0..=row.order {
            s0 += row.at_zero[k] * d0[k];
            s1 += row.at_one[k] * d1[k];
        }
        v0[r] = s0 * scale;
        v1[r] = s1 * scale;
    }
    (v0, v1)
}

/// `V(y) = (rho^{-order} U_row(y))` over the normalized rows.
pub fn boundary_form_v(nbc: &NormalizedBoundaryConditions, rho: Complex64, d0: &[Complex64], d1: &[Complex64]) -> CVector {
    let (v0, v1) = boundary_form_parts(nbc, rho, d0, d1);
    v0 + v1
}

/// `V` applied to every canonical solution: columns `V(z_0) .. V(z_{n-1})`.
#[derive(Debug, Clone)]
pub struct CharacteristicData {
    pub rho: RhoPoint,
    pub matrix: CMatrix,
    pub det: Complex64,
}

pub fn char_matrix(nbc: &NormalizedBoundaryConditions, fs: &FundamentalSystem) -> CharacteristicData {
    let n = nbc.order();
    let rho = fs.rho();
    let mut m = CMatrix::zeros(n, n);
    for k in 0..n {
        let col = boundary_form_v(nbc, rho.rho, &fs.z_derivs(k, 0.0), &fs.z_derivs(k, 1.0));
        m.set_column(k, &col);
    }
    let d = det(&m);
    CharacteristicData { rho, matrix: m, det: d }
}

/// Point on the bisector of sector `nu` at radius `r`.
pub fn bisector_point(n: usize, nu: u8, r: f64) -> Complex64 {
    Complex64::from_polar(r, (nu as f64 + 0.5) * PI / n as f64)
}

#[derive(Debug, Clone, Serialize)]
pub struct ThetaLimit {
    pub radii: Vec<f64>,
    pub values: Vec<[f64; 2]>,
    pub estimate: [f64; 2],
    pub converged: bool,
}

/// `Delta` along the bisector of `S_nu`, extrapolated assuming
/// `Delta(r) = Theta + c / r + ...` from the last two radii.
pub fn theta_limit_numeric(problem: &Problem, nu: u8, radii: &[f64], tol: f64) -> Result<ThetaLimit> {
    let n = problem.order();
    let values: Vec<Complex64> = radii
        .iter()
        .map(|&r| problem.delta(bisector_point(n, nu, r), nu))
        .collect::<Result<_>>()?;
    let extrapolate = |i: usize| {
        let (r1, r2) = (radii[i - 1], radii[i]);
        (values[i] * r2 - values[i - 1] * r1) / (r2 - r1)
    };
    let m = values.len();
    let (estimate, converged) = match m {
        0 => (Complex64::new(f64::NAN, f64::NAN), false),
        1 => (values[0], false),
        2 => (extrapolate(1), false),
        _ => {
            let (a, b) = (extrapolate(m - 2), extrapolate(m - 1));
            (b, (a - b).norm() <= tol * b.norm().max(1.0))
        }
    };
    Ok(ThetaLimit {
        radii: radii.to_vec(),
        values: values.iter().map(|z| [z.re, z.im]).collect(),
        estimate: [estimate.re, estimate.im],
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{normalize, presets};
    use crate::regularity::SectorIndex;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn dirichlet_boundary_form() {
        let nbc = normalize(&presets::dirichlet()).unwrap();
        let rho = c(3.0, 2.0);
        let fs = FundamentalSystem::exact(2, RhoPoint::from_rho(rho, 2), SectorIndex::new(2, 0));
        let d0: Vec<_> = (0..2).map(|k| fs.y(0, k, 0.0)).collect();
        let d1: Vec<_> = (0..2).map(|k| fs.y(0, k, 1.0)).collect();
        let v = boundary_form_v(&nbc, rho, &d0, &d1);
        assert!((v[0] - c(1.0, 0.0)).norm() < 1e-14);
        assert!((v[1] - (c(0.0, 1.0) * rho).exp()).norm() < 1e-14);
    }

    #[test]
    fn dirichlet_determinant_closed_form() {
        let p = Problem::free("d", presets::dirichlet()).unwrap();
        for &rho in &[c(2.0, 0.5), c(7.0, 3.0), c(0.4, 9.0)] {
            let d = p.delta(rho, 0).unwrap();
            let expect = c(1.0, 0.0) - (c(0.0, 2.0) * rho).exp();
            assert!((d - expect).norm() < 1e-13);
        }
        for k in 1..6 {
            assert!(p.delta(c(PI * k as f64, 0.0), 0).unwrap().norm() < 1e-12);
        }
    }

    #[test]
    fn limits_along_bisector() {
        let radii = [50.0, 100.0, 200.0];
        let lim = |raw| {
            let p = Problem::free("x", raw).unwrap();
            let t = theta_limit_numeric(&p, 0, &radii, 1e-6).unwrap();
            c(t.estimate[0], t.estimate[1])
        };
        assert!((lim(presets::dirichlet()) - c(1.0, 0.0)).norm() < 1e-6);
        assert!(lim(presets::cauchy()).norm() < 1e-6);
        assert!((lim(presets::periodic()) - c(2.0, 0.0)).norm() < 1e-6);
    }
}
