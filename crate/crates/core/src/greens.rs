//! Green's function of the boundary value problem and the modified
//! characteristic matrix.
//!
//! With the canonical system `z_k`, the functions `u_t` and the
//! characteristic matrix `C = [V(z_0) .. V(z_{n-1})]`,
//!
//! ```text
//! G(x, xi) = g0(x, xi) - (2 pi i / (n rho^{n-1})) sum_{t,k} a_tk z_k(x) u_t(xi),
//! C A_t = +-(eps_t / 2 pi) [B_t^#],
//! ```
//!
//! where `[B_t^1] = V_1(z_t) e^{-i rho eps_t}` for `t < p` (sign +) and
//! `[B_t^0] = V_0(z_t) e^{i rho eps_t}` for `t >= p` (sign -). The brackets are
//! formed from the modulated values directly, so no exponential is ever
//! evaluated outside its bounded range.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{BvpError, Result};
use crate::fss::FundamentalSystem;
use crate::linalg::{det, frobenius, min_singular_value, solve, spectral_norm, CMatrix, CVector};
use crate::model::NormalizedBoundaryConditions;
use crate::problem::Problem;
use crate::quadrature::GaussLegendre;
use crate::regularity::{is_zero_determinant, p_value, theta_matrix, unit_roots};
use crate::spectrum::{boundary_form_parts, boundary_form_v, char_matrix, CharacteristicData};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Green's function at a fixed `rho`, with everything that does not depend on
/// `(x, xi)` precomputed.
#[derive(Debug, Clone)]
pub struct GreenKernel {
    fs: FundamentalSystem,
    nbc: NormalizedBoundaryConditions,
    chr: CharacteristicData,
    brackets: Vec<CVector>,
    mcm: CMatrix,
    /// `n rho^{n-1}`
    scale: Complex64,
}

impl GreenKernel {
    pub fn new(problem: &Problem, rho: Complex64, nu: u8) -> Result<Self> {
        let fs = problem.fss(rho, nu)?;
        Self::from_system(problem.nbc().clone(), fs)
    }

    pub fn from_system(nbc: NormalizedBoundaryConditions, fs: FundamentalSystem) -> Result<Self> {
        let n = fs.order();
        let rho = fs.rho().rho;
        let chr = char_matrix(&nbc, &fs);
        if is_zero_determinant(chr.det, &chr.matrix) {
            return Err(BvpError::NearSpectrum {
                rho: format!("{rho}"),
                distance: chr.det.norm(),
            });
        }
        let brackets: Vec<CVector> = (0..n).map(|t| bracket(&nbc, &fs, t)).collect();
        let eps = unit_roots(n);
        let p = fs.sector().p;
        let lu = chr.matrix.clone().lu();
        let mut mcm = CMatrix::zeros(n, n);
        for t in 0..n {
            let sign = if t < p { 1.0 } else { -1.0 };
            let rhs = &brackets[t] * (eps[t] * sign / (2.0 * PI));
            let col = lu
                .solve(&rhs)
                .ok_or_else(|| BvpError::Singular("characteristic matrix".into()))?;
            mcm.set_column(t, &col);
        }
        let scale = rho.powu((n - 1) as u32) * n as f64;
        Ok(GreenKernel {
            fs,
            nbc,
            chr,
            brackets,
            mcm,
            scale,
        })
    }

    pub fn system(&self) -> &FundamentalSystem {
        &self.fs
    }

    pub fn characteristic(&self) -> &CharacteristicData {
        &self.chr
    }

    /// Modified characteristic matrix, `mcm[(k, t)] = a_tk`.
    pub fn mcm(&self) -> &CMatrix {
        &self.mcm
    }

    /// `[B_t^#]` for every `t`.
    pub fn brackets(&self) -> &[CVector] {
        &self.brackets
    }

    /// Residual of the defining systems `C A_t = +-(eps_t/2pi)[B_t^#]`.
    pub fn mcm_residual(&self) -> f64 {
        let n = self.fs.order();
        let eps = unit_roots(n);
        let p = self.fs.sector().p;
        (0..n)
            .map(|t| {
                let sign = if t < p { 1.0 } else { -1.0 };
                let lhs = &self.chr.matrix * self.mcm.column(t);
                (lhs - &self.brackets[t] * (eps[t] * sign / (2.0 * PI))).norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn g0(&self, x: f64, xi: f64) -> Result<Complex64> {
        self.fs.g0(x, xi)
    }

    /// `g = g0 n rho^{n-1} / i`, the kernel entering the bordered determinant.
    pub fn g(&self, x: f64, xi: f64) -> Result<Complex64> {
        Ok(self.fs.g0(x, xi)? * self.scale / I)
    }

    /// `H(xi) = V_x g(x, xi)` evaluated directly from the boundary values of `g`.
    pub fn h_direct(&self, xi: f64) -> Result<CVector> {
        let f = self.scale / I;
        let d0: Vec<Complex64> = self.fs.g0_derivs(0.0, xi)?.into_iter().map(|v| v * f).collect();
        let d1: Vec<Complex64> = self.fs.g0_derivs(1.0, xi)?.into_iter().map(|v| v * f).collect();
        Ok(boundary_form_v(&self.nbc, self.fs.rho().rho, &d0, &d1))
    }

    /// `H(xi) = sum_t (-1)^{1-#} [B_t^#] eps_t u_t(xi)`.
    pub fn h_sum(&self, xi: f64) -> Result<CVector> {
        let n = self.fs.order();
        let p = self.fs.sector().p;
        let eps = self.fs.eps();
        let u = self.fs.u_all(xi)?;
        let mut h = CVector::zeros(n);
        for t in 0..n {
            let sign = if t < p { 1.0 } else { -1.0 };
            h += &self.brackets[t] * (eps[t] * u[t] * sign);
        }
        Ok(h)
    }

    /// `G = (-1)^n Delta(x, xi) / (n rho^{n-1} Delta)` with the bordered
    /// determinant `Delta(x, xi) = i det [[z(x)^T, g], [C, H]]`.
    pub fn determinant_form(&self, x: f64, xi: f64) -> Result<Complex64> {
        let n = self.fs.order();
        let mut m = CMatrix::zeros(n + 1, n + 1);
        for k in 0..n {
            m[(0, k)] = self.fs.z(k, 0, x);
        }
        m[(0, n)] = self.g(x, xi)?;
        m.view_mut((1, 0), (n, n)).copy_from(&self.chr.matrix);
        let h = self.h_sum(xi)?;
        m.view_mut((1, n), (n, 1)).copy_from(&h);
        let bordered = I * det(&m);
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        Ok(bordered * sign / (self.scale * self.chr.det))
    }

    /// `G = g0 - (2 pi i/(n rho^{n-1})) z(x)^T A u(xi)`.
    pub fn expansion_form(&self, x: f64, xi: f64) -> Result<Complex64> {
        let n = self.fs.order();
        let u = CVector::from_vec(self.fs.u_all(xi)?);
        let z = CVector::from_iterator(n, (0..n).map(|k| self.fs.z(k, 0, x)));
        let finite = (z.transpose() * &self.mcm * u)[(0, 0)];
        Ok(self.fs.g0(x, xi)? - finite * (2.0 * PI) * I / self.scale)
    }

    /// Finite-rank part `z(x)^T A u(xi)` without the prefactor.
    pub fn finite_rank_part(&self, x: f64, xi: f64) -> Result<Complex64> {
        let n = self.fs.order();
        let u = CVector::from_vec(self.fs.u_all(xi)?);
        let z = CVector::from_iterator(n, (0..n).map(|k| self.fs.z(k, 0, x)));
        Ok((z.transpose() * &self.mcm * u)[(0, 0)])
    }

    pub fn eval(&self, x: f64, xi: f64) -> Result<Complex64> {
        self.expansion_form(x, xi)
    }

    /// Nystrom matrix `sqrt(w_i) G(x_i, x_j) sqrt(w_j)` on the rule `(xs, ws)`.
    pub fn nystrom(&self, xs: &[f64], ws: &[f64]) -> Result<CMatrix> {
        let m = xs.len();
        let n = self.fs.order();
        // columns: everything that depends on xi
        let cols: Vec<(Vec<Complex64>, CVector)> = xs
            .par_iter()
            .map(|&xi| {
                let c = self.fs.cofactor_column(xi)?;
                let u = CVector::from_vec(self.fs.u_all(xi)?);
                Ok((c, &self.mcm * u))
            })
            .collect::<Result<_>>()?;
        let rows: Vec<Vec<Complex64>> = xs
            .par_iter()
            .enumerate()
            .map(|(i, &x)| {
                let z: Vec<Complex64> = (0..n).map(|k| self.fs.z(k, 0, x)).collect();
                let ym: Vec<Complex64> = (0..n).map(|k| self.fs.modulated(k, x)[0]).collect();
                (0..m)
                    .map(|j| {
                        let xi = xs[j];
                        let (c, au) = &cols[j];
                        let g0 = self.g0_with(&ym, c, x, xi);
                        let fin: Complex64 = (0..n).map(|k| z[k] * au[k]).sum();
                        let g = g0 - fin * (2.0 * PI) * I / self.scale;
                        g * (ws[i] * ws[j]).sqrt()
                    })
                    .collect()
            })
            .collect();
        Ok(CMatrix::from_fn(m, m, |i, j| rows[i][j]))
    }

    fn g0_with(&self, ym: &[Complex64], c: &[Complex64], x: f64, xi: f64) -> Complex64 {
        let n = self.fs.order();
        let p = self.fs.sector().p;
        let sigma = self.fs.sigma();
        let (range, sign) = if x >= xi { (0..p, I) } else { (p..n, -I) };
        let mut acc = Complex64::new(0.0, 0.0);
        for k in range {
            acc += (sigma[k] * (x - xi)).exp() * ym[k] * c[k];
        }
        sign * acc * n as f64 / self.scale
    }

    /// `int_0^1 G(x, xi) f(xi) dxi`, split at `xi = x` so both pieces are smooth.
    pub fn apply<F: Fn(f64) -> Complex64>(&self, f: &F, x: f64, rule: &GaussLegendre) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, b) in [(0.0, x), (x, 1.0)] {
            if b - a <= 0.0 {
                continue;
            }
            let (xs, ws) = rule.on(a, b);
            for (&xi, &w) in xs.iter().zip(&ws) {
                acc += self.eval(x, xi)? * f(xi) * w;
            }
        }
        Ok(acc)
    }
}

/// `[B_t^#]`: the boundary form of `z_t` at the endpoint where it is largest,
/// divided by its exponential size.
pub fn bracket(nbc: &NormalizedBoundaryConditions, fs: &FundamentalSystem, t: usize) -> CVector {
    let n = fs.order();
    let rho = fs.rho().rho;
    let mu = rho * fs.eps()[t];
    let at = if t < fs.sector().p { 1.0 } else { 0.0 };
    let ym = fs.modulated(t, at);
    let mut m = Complex64::new(1.0, 0.0);
    let d: Vec<Complex64> = (0..n)
        .map(|k| {
            let v = m * ym[k];
            m *= mu;
            v
        })
        .collect();
    let zero = vec![Complex64::new(0.0, 0.0); n];
    if t < fs.sector().p {
        boundary_form_parts(nbc, rho, &zero, &d).1
    } else {
        boundary_form_parts(nbc, rho, &d, &zero).0
    }
}

/// `A_inf = Theta_p(b0, b1)^{-1} Theta_p(b1, b0) D`.
#[derive(Debug, Clone)]
pub struct LimitMatrix {
    pub a_inf: CMatrix,
    pub d_matrix: CMatrix,
    pub theta_forward: CMatrix,
    pub theta_reverse: CMatrix,
}

impl LimitMatrix {
    /// `Theta_p(b0,b1) A_inf - Theta_p(b1,b0) D`.
    pub fn identity_residual(&self) -> f64 {
        (&self.theta_forward * &self.a_inf - &self.theta_reverse * &self.d_matrix).norm()
    }
}

pub fn a_infinity(nbc: &NormalizedBoundaryConditions, nu: u8) -> Result<LimitMatrix> {
    let n = nbc.order();
    let p = p_value(n, nu);
    let fwd = theta_matrix(nbc, p, 0, 1);
    let rev = theta_matrix(nbc, p, 1, 0);
    if is_zero_determinant(det(&fwd), &fwd) {
        return Err(BvpError::IrregularLimit);
    }
    let eps = unit_roots(n);
    let d = CMatrix::from_fn(n, n, |i, j| {
        if i != j {
            Complex64::new(0.0, 0.0)
        } else if i < p {
            eps[i] / (2.0 * PI)
        } else {
            -eps[i] / (2.0 * PI)
        }
    });
    let rhs = &rev * &d;
    let lu = fwd.clone().lu();
    let a_inf = lu.solve(&rhs).ok_or(BvpError::IrregularLimit)?;
    Ok(LimitMatrix {
        a_inf,
        d_matrix: d,
        theta_forward: fwd,
        theta_reverse: rev,
    })
}

/// `(1/n) [Q^0 Psi^*, Q^1 Psi^*]` with `Q^i = [B_0^i .. B_{n-1}^i]` and
/// `Psi = (eps_k^j)`; equals the matrix carrying `b^0` in column `order(row)`
/// and `b^1` in column `n + order(row)`.
pub fn full_range_matrix(nbc: &NormalizedBoundaryConditions) -> (CMatrix, CMatrix) {
    let n = nbc.order();
    let eps = unit_roots(n);
    let psi = CMatrix::from_fn(n, n, |j, k| eps[k].powu(j as u32));
    let q = |i: u8| {
        let mut m = CMatrix::zeros(n, n);
        for k in 0..n {
            m.set_column(k, &crate::regularity::build_b(nbc, k, i));
        }
        m
    };
    let mut lhs = CMatrix::zeros(n, 2 * n);
    lhs.view_mut((0, 0), (n, n)).copy_from(&(q(0) * psi.adjoint() / Complex64::new(n as f64, 0.0)));
    lhs.view_mut((0, n), (n, n)).copy_from(&(q(1) * psi.adjoint() / Complex64::new(n as f64, 0.0)));
    let mut expect = CMatrix::zeros(n, 2 * n);
    for (r, row) in nbc.rows().iter().enumerate() {
        let (b0, b1) = row.leading();
        expect[(r, row.order)] = b0;
        expect[(r, n + row.order)] = b1;
    }
    (lhs, expect)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub rho: [f64; 2],
    pub mcm_error: f64,
    pub char_error: f64,
    pub mcm_frobenius: f64,
    pub min_sv_mcm: f64,
    pub min_sv_char: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub nu: u8,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `log ||A - A_inf||` against `log |rho|`.
    pub exponent: f64,
    pub a_inf: Vec<Vec<[f64; 2]>>,
}

/// Distance of `A(rho)` from `A_inf` and of the characteristic matrix from
/// `Theta_p(b0, b1)` at each probe point.
pub fn verify_limit(problem: &Problem, nu: u8, points: &[Complex64]) -> Result<ConvergenceReport> {
    let lim = a_infinity(problem.nbc(), nu)?;
    let rows: Vec<ConvergenceRow> = points
        .par_iter()
        .map(|&rho| {
            let fs = problem.fss_endpoints(rho, nu)?;
            let k = GreenKernel::from_system(problem.nbc().clone(), fs)?;
            let a = k.mcm();
            let c = &k.characteristic().matrix;
            let char_error = (c - &lim.theta_forward).iter().map(|z| z.norm()).fold(0.0, f64::max);
            Ok(ConvergenceRow {
                rho: [rho.re, rho.im],
                mcm_error: spectral_norm(&(a - &lim.a_inf)),
                char_error,
                mcm_frobenius: frobenius(a),
                min_sv_mcm: min_singular_value(a),
                min_sv_char: min_singular_value(c),
            })
        })
        .collect::<Result<_>>()?;
    let logs: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.mcm_error > 0.0)
        .map(|r| (Complex64::new(r.rho[0], r.rho[1]).norm().ln(), r.mcm_error.ln()))
        .collect();
    let exponent = fit_slope(&logs);
    let n = problem.order();
    Ok(ConvergenceReport {
        nu,
        rows,
        exponent,
        a_inf: (0..n)
            .map(|i| (0..n).map(|j| [lim.a_inf[(i, j)].re, lim.a_inf[(i, j)].im]).collect())
            .collect(),
    })
}

pub fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let m = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Operator norm of the finite-rank kernel `z(x)^T A u(xi)` on `L^2(0,1)`,
/// via `|| R_z A R_u^T ||` where `W^{1/2} Z = Q_z R_z` and `W^{1/2} U = Q_u R_u`.
pub fn finite_rank_norm(kernel: &GreenKernel, rule: &GaussLegendre) -> Result<f64> {
    let fs = kernel.system();
    let n = fs.order();
    let m = rule.len();
    let mut z = CMatrix::zeros(m, n);
    let mut u = CMatrix::zeros(m, n);
    for (i, (&x, &w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
        let sw = w.sqrt();
        let ut = fs.u_all(x)?;
        for k in 0..n {
            z[(i, k)] = fs.z(k, 0, x) * sw;
            u[(i, k)] = ut[k] * sw;
        }
    }
    let rz = z.qr().r();
    let ru = u.qr().r();
    Ok(spectral_norm(&(rz * kernel.mcm() * ru.transpose())))
}

/// `sum |a_tk|^2 / |rho|^2`, the coefficient surrogate for `||finite part||^2`.
pub fn coefficient_surrogate(kernel: &GreenKernel) -> f64 {
    let r = kernel.system().rho().rho.norm();
    frobenius(kernel.mcm()).powi(2) / (r * r)
}

/// Solves `C x = rhs`; thin wrapper used by eigenfunction code.
pub fn solve_char(chr: &CharacteristicData, rhs: &CVector) -> Option<CVector> {
    solve(&chr.matrix, rhs)
}
