//! Fundamental systems of solutions with Birkhoff asymptotics.
//!
//! Solution `j` is stored in modulated form
//!
//! ```text
//! D^k y_j(x) = mu_j^k exp(sigma_j x) Y_jk(x),   mu_j = rho eps_j,  sigma_j = i mu_j,
//! ```
//!
//! so that `Y_jk == 1` for `l = D^n` and `Y_jk = 1 + O(1/rho)` in general.
//! The exponential factor is never formed on its own; the canonically scaled
//! solutions `z_j` and the functions `u_t` combine it with the shift that keeps
//! it bounded in the current sector.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{BvpError, Result};
use crate::linalg::{det, solve, CMatrix, CVector};
use crate::model::DifferentialExpression;
use crate::ode::Dopri5;
use crate::regularity::{unit_roots, SectorIndex};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// `rho` together with `lambda = rho^n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoPoint {
    pub rho: Complex64,
    pub lambda: Complex64,
    pub n: usize,
}

impl RhoPoint {
    pub fn from_rho(rho: Complex64, n: usize) -> Self {
        RhoPoint {
            rho,
            lambda: rho.powu(n as u32),
            n,
        }
    }

    /// Sector containing `rho`: 0 when `arg rho < pi/n` (slightly negative
    /// arguments included), 1 otherwise.
    pub fn sector(&self) -> u8 {
        let a = self.rho.arg();
        if a < PI / self.n as f64 {
            0
        } else {
            1
        }
    }
}

/// Principal branch: `arg lambda in [0, 2 pi)`, `arg rho = arg lambda / n`.
pub fn rho_from_lambda(lambda: Complex64, n: usize) -> Result<RhoPoint> {
    if lambda.norm() == 0.0 {
        return Err(BvpError::ZeroLambda);
    }
    let mut arg = lambda.arg();
    if arg < 0.0 {
        arg += 2.0 * PI;
    }
    let rho = Complex64::from_polar(lambda.norm().powf(1.0 / n as f64), arg / n as f64);
    Ok(RhoPoint { rho, lambda, n })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FssMode {
    Exact,
    Integrated,
}

/// Modulated values of one solution on a uniform grid, with derivatives for
/// cubic Hermite interpolation.
#[derive(Debug, Clone)]
struct Track {
    values: Vec<Vec<Complex64>>,
    slopes: Vec<Vec<Complex64>>,
}

#[derive(Debug, Clone)]
pub struct FundamentalSystem {
    n: usize,
    rho: RhoPoint,
    sector: SectorIndex,
    eps: Vec<Complex64>,
    mu: Vec<Complex64>,
    sigma: Vec<Complex64>,
    tracks: Option<Vec<Track>>,
    /// Set when an integrated system is built below the asymptotic radius.
    pub below_r0: bool,
}

impl FundamentalSystem {
    /// `y_j = exp(i rho eps_j x)`, exact for `l = D^n`.
    pub fn exact(n: usize, rho: RhoPoint, sector: SectorIndex) -> Self {
        let eps = unit_roots(n);
        let mu: Vec<Complex64> = eps.iter().map(|e| rho.rho * e).collect();
        let sigma = mu.iter().map(|m| I * m).collect();
        FundamentalSystem {
            n,
            rho,
            sector,
            eps,
            mu,
            sigma,
            tracks: None,
            below_r0: false,
        }
    }

    /// Exact system when all `p_k` vanish, integrated otherwise.
    pub fn new(expr: &DifferentialExpression, rho: RhoPoint, sector: SectorIndex) -> Result<Self> {
        if expr.is_free() {
            Ok(Self::exact(expr.order(), rho, sector))
        } else {
            Self::integrated(expr, rho, sector)
        }
    }

    /// Solves the modulated system numerically. Decaying solutions (`j < p`)
    /// are anchored at `x = 1` and integrated backwards, growing ones at
    /// `x = 0` and integrated forwards, which is the stable direction for each.
    pub fn integrated(expr: &DifferentialExpression, rho: RhoPoint, sector: SectorIndex) -> Result<Self> {
        Self::integrated_on_grid(expr, rho, sector, grid_cells(rho.rho.norm()))
    }

    /// As [`integrated`](Self::integrated) with an explicit number of grid
    /// cells; `cells = 1` keeps only the endpoint values, which is all the
    /// characteristic determinant needs.
    pub fn integrated_on_grid(
        expr: &DifferentialExpression,
        rho: RhoPoint,
        sector: SectorIndex,
        cells: usize,
    ) -> Result<Self> {
        let mut fs = Self::exact(expr.order(), rho, sector);
        let n = fs.n;
        let cells = cells.max(1);
        let h = 1.0 / cells as f64;
        let solver = Dopri5::default();
        let mut tracks = Vec::with_capacity(n);
        for j in 0..n {
            let (mu, sigma) = (fs.mu[j], fs.sigma[j]);
            // mu^{k-n+1} for k = 0..n-2
            let weights: Vec<Complex64> = (0..n.saturating_sub(1))
                .map(|k| mu.powi(k as i32 - n as i32 + 1))
                .collect();
            let rhs = |x: f64, y: &[Complex64], dy: &mut [Complex64]| {
                modulated_rhs(expr, sigma, &weights, x, y, dy);
            };
            let forward = j >= sector.p;
            let (start, stops): (f64, Vec<f64>) = if forward {
                (0.0, (0..=cells).map(|i| i as f64 * h).collect())
            } else {
                (1.0, (0..=cells).rev().map(|i| i as f64 * h).collect())
            };
            let mut states = solver.integrate(rhs, start, &vec![ONE; n], &stops)?;
            if !forward {
                states.reverse();
            }
            let slopes = states
                .iter()
                .enumerate()
                .map(|(i, y)| {
                    let mut dy = vec![ZERO; n];
                    rhs(i as f64 * h, y, &mut dy);
                    dy
                })
                .collect();
            tracks.push(Track { values: states, slopes });
        }
        fs.tracks = Some(tracks);
        fs.below_r0 = rho.rho.norm() < expr.default_r0();
        Ok(fs)
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn rho(&self) -> RhoPoint {
        self.rho
    }

    pub fn sector(&self) -> SectorIndex {
        self.sector
    }

    pub fn mode(&self) -> FssMode {
        if self.tracks.is_some() {
            FssMode::Integrated
        } else {
            FssMode::Exact
        }
    }

    pub fn eps(&self) -> &[Complex64] {
        &self.eps
    }

    pub fn sigma(&self) -> &[Complex64] {
        &self.sigma
    }

    /// `Y_jk(x)`, k = 0..n-1.
    pub fn modulated(&self, j: usize, x: f64) -> Vec<Complex64> {
        match &self.tracks {
            None => vec![ONE; self.n],
            Some(tracks) => hermite(&tracks[j], x),
        }
    }

    /// `D^k y_j(x)` without any scaling (may overflow for large `|rho|`).
    pub fn y(&self, j: usize, k: usize, x: f64) -> Complex64 {
        self.scaled(j, k, x, 0.0)
    }

    /// `mu_j^k exp(sigma_j (x - shift)) Y_jk(x)`.
    pub fn scaled(&self, j: usize, k: usize, x: f64, shift: f64) -> Complex64 {
        let yk = match &self.tracks {
            None => ONE,
            Some(_) => self.modulated(j, x)[k],
        };
        self.mu[j].powu(k as u32) * (self.sigma[j] * (x - shift)).exp() * yk
    }

    /// Shift making `z_j` bounded: 0 for decaying, 1 for growing solutions.
    pub fn z_shift(&self, j: usize) -> f64 {
        if j < self.sector.p {
            0.0
        } else {
            1.0
        }
    }

    /// Canonical solution `z_j = y_j` (j < p) or `y_j / exp(i rho eps_j)` (j >= p); `D^k z_j(x)`.
    pub fn z(&self, j: usize, k: usize, x: f64) -> Complex64 {
        self.scaled(j, k, x, self.z_shift(j))
    }

    /// All `D^k z_j(x)` for k = 0..n-1.
    pub fn z_derivs(&self, j: usize, x: f64) -> Vec<Complex64> {
        let ym = self.modulated(j, x);
        let e = (self.sigma[j] * (x - self.z_shift(j))).exp();
        let mut m = ONE;
        (0..self.n)
            .map(|k| {
                let v = m * e * ym[k];
                m *= self.mu[j];
                v
            })
            .collect()
    }

    /// `N(x)[k][j] = eps_j^k Y_jk(x)`; the Wronskian matrix is
    /// `diag(rho^k) N(x) diag(exp(sigma_j x))`.
    pub fn n_matrix(&self, x: f64) -> CMatrix {
        let n = self.n;
        let mut m = CMatrix::zeros(n, n);
        for j in 0..n {
            let ym = self.modulated(j, x);
            let mut e = ONE;
            for k in 0..n {
                m[(k, j)] = e * ym[k];
                e *= self.eps[j];
            }
        }
        m
    }

    /// Wronskian `det[D^k y_j(x)]`.
    pub fn wronskian(&self, x: f64) -> Complex64 {
        let n = self.n;
        let total: Complex64 = self.sigma.iter().sum();
        self.rho.rho.powu((n * (n - 1) / 2) as u32) * det(&self.n_matrix(x)) * (total * x).exp()
    }

    /// Last column of `N(xi)^{-1}`, i.e. `(N^{-1})_{j, n-1}` for all j.
    pub fn cofactor_column(&self, xi: f64) -> Result<Vec<Complex64>> {
        let n = self.n;
        let mut e = CVector::zeros(n);
        e[n - 1] = ONE;
        match self.tracks {
            // N is the Fourier matrix: N^{-1} = N^* / n
            None => Ok(self.eps.iter().map(|ej| ej.powi(-(n as i32 - 1)) / n as f64).collect()),
            Some(_) => solve(&self.n_matrix(xi), &e)
                .map(|v| v.iter().copied().collect())
                .ok_or_else(|| BvpError::Singular("Wronskian".into())),
        }
    }

    /// `tilde y_j(xi) = W_j / W`, so that `sum_j y_j(x) tilde y_j(xi)` is the
    /// variation-of-constants kernel.
    pub fn tilde_y(&self, j: usize, xi: f64) -> Result<Complex64> {
        let c = self.cofactor_column(xi)?;
        Ok((-self.sigma[j] * xi).exp() * self.rho.rho.powi(-(self.n as i32 - 1)) * c[j])
    }

    /// Boxed functions `u_t(xi)`: `tilde y_t n (rho eps_t)^{n-1}`, times
    /// `exp(i rho eps_t)` when `t < p`.
    pub fn u(&self, t: usize, xi: f64) -> Result<Complex64> {
        let c = self.cofactor_column(xi)?;
        Ok(self.u_from(&c, t, xi))
    }

    fn u_from(&self, c: &[Complex64], t: usize, xi: f64) -> Complex64 {
        let n = self.n;
        let shift = 1.0 - self.z_shift(t);
        self.eps[t].powu((n - 1) as u32) * n as f64 * c[t] * (self.sigma[t] * (shift - xi)).exp()
    }

    /// All `u_t(xi)` at once.
    pub fn u_all(&self, xi: f64) -> Result<Vec<Complex64>> {
        let c = self.cofactor_column(xi)?;
        Ok((0..self.n).map(|t| self.u_from(&c, t, xi)).collect())
    }

    /// Particular-solution kernel
    /// `g0(x, xi) = i sum_{k<p} y_k(x) tilde y_k(xi)` for `x >= xi` and
    /// `-i sum_{k>=p} ...` for `x < xi`.
    pub fn g0(&self, x: f64, xi: f64) -> Result<Complex64> {
        let c = self.cofactor_column(xi)?;
        Ok(self.g0_from(&c, x, xi))
    }

    fn g0_from(&self, c: &[Complex64], x: f64, xi: f64) -> Complex64 {
        let n = self.n;
        let p = self.sector.p;
        let scale = self.rho.rho.powi(-(n as i32 - 1));
        let (range, sign) = if x >= xi { (0..p, I) } else { (p..n, -I) };
        let mut acc = ZERO;
        for k in range {
            let y0 = match &self.tracks {
                None => ONE,
                Some(_) => self.modulated(k, x)[0],
            };
            acc += (self.sigma[k] * (x - xi)).exp() * y0 * c[k];
        }
        sign * scale * acc
    }

    /// `g0` together with `D^m_x g0` for m = 0..n-1 (used by boundary forms).
    pub fn g0_derivs(&self, x: f64, xi: f64) -> Result<Vec<Complex64>> {
        let n = self.n;
        let p = self.sector.p;
        let c = self.cofactor_column(xi)?;
        let scale = self.rho.rho.powi(-(n as i32 - 1));
        let (range, sign) = if x >= xi { (0..p, I) } else { (p..n, -I) };
        let mut out = vec![ZERO; n];
        for k in range {
            let ym = self.modulated(k, x);
            let e = (self.sigma[k] * (x - xi)).exp() * c[k];
            let mut m = ONE;
            for (d, o) in out.iter_mut().enumerate() {
                *o += m * e * ym[d];
                m *= self.mu[k];
            }
        }
        Ok(out.into_iter().map(|v| sign * scale * v).collect())
    }

    /// `omega_lq = (1/q!) d^q/drho^q z_l` for the exact system:
    /// `(i eps_l (x - s_l))^q / q! * z_l(x)`.
    pub fn omega_exact(&self, l: usize, q: usize, x: f64) -> Result<Complex64> {
        if q > 5 {
            return Err(BvpError::DerivativeOrder(q));
        }
        let f = I * self.eps[l] * (x - self.z_shift(l));
        Ok(f.powu(q as u32) / factorial(q) * self.z(l, 0, x))
    }
}

fn factorial(q: usize) -> f64 {
    (1..=q).map(|v| v as f64).product()
}

/// Uniform grid resolving boundary layers of width `1/|rho|`.
fn grid_cells(r: f64) -> usize {
    ((8.0 * r).ceil() as usize + 64).min(40_000)
}

fn modulated_rhs(
    expr: &DifferentialExpression,
    sigma: Complex64,
    weights: &[Complex64],
    x: f64,
    y: &[Complex64],
    dy: &mut [Complex64],
) {
    let n = y.len();
    for k in 0..n - 1 {
        dy[k] = sigma * (y[k + 1] - y[k]);
    }
    let mut tail = ZERO;
    for (k, w) in weights.iter().enumerate() {
        let pk = expr.coefficient(k).eval(x);
        if pk != ZERO {
            tail += pk * w * y[k];
        }
    }
    dy[n - 1] = sigma * (y[0] - y[n - 1]) - I * tail;
}

fn hermite(track: &Track, x: f64) -> Vec<Complex64> {
    let cells = track.values.len() - 1;
    let h = 1.0 / cells as f64;
    let s = x.clamp(0.0, 1.0) * cells as f64;
    let i = (s.floor() as usize).min(cells - 1);
    let t = s - i as f64;
    let (y0, y1) = (&track.values[i], &track.values[i + 1]);
    let (d0, d1) = (&track.slopes[i], &track.slopes[i + 1]);
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = (t3 - 2.0 * t2 + t) * h;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = (t3 - t2) * h;
    (0..y0.len())
        .map(|k| y0[k] * h00 + d0[k] * h10 + y1[k] * h01 + d1[k] * h11)
        .collect()
}

/// `omega_lq` for an arbitrary expression: Cauchy-integral differentiation in
/// `rho` over a small circle, each node carrying its own fundamental system.
pub struct OmegaFamily {
    center: FundamentalSystem,
    ring: Vec<(Complex64, FundamentalSystem)>,
    radius: f64,
}

impl OmegaFamily {
    pub const NODES: usize = 16;

    pub fn new(expr: &DifferentialExpression, rho: RhoPoint, sector: SectorIndex) -> Result<Self> {
        let n = expr.order();
        let center = FundamentalSystem::new(expr, rho, sector)?;
        let radius = 0.25;
        let ring = if expr.is_free() {
            Vec::new()
        } else {
            (0..Self::NODES)
                .map(|m| {
                    let w = Complex64::from_polar(1.0, 2.0 * PI * m as f64 / Self::NODES as f64);
                    let pt = RhoPoint::from_rho(rho.rho + w * radius, n);
                    FundamentalSystem::integrated(expr, pt, sector).map(|fs| (w, fs))
                })
                .collect::<Result<_>>()?
        };
        Ok(OmegaFamily { center, ring, radius })
    }

    pub fn system(&self) -> &FundamentalSystem {
        &self.center
    }

    pub fn omega(&self, l: usize, q: usize, x: f64) -> Result<Complex64> {
        if q > 5 {
            return Err(BvpError::DerivativeOrder(q));
        }
        if self.ring.is_empty() {
            return self.center.omega_exact(l, q, x);
        }
        if q == 0 {
            return Ok(self.center.z(l, 0, x));
        }
        // (1/q!) f^{(q)}(rho) = mean_m f(rho + r w_m) (r w_m)^{-q}
        let mut acc = ZERO;
        for (w, fs) in &self.ring {
            acc += fs.z(l, 0, x) / (w * self.radius).powu(q as u32);
        }
        Ok(acc / Self::NODES as f64)
    }
}
