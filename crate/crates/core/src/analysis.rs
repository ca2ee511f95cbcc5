//! Eigenfunctions, Riesz projectors, projector-norm scaling, almost
//! orthogonality of the canonical system and expansion experiments.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{BvpError, Result};
use crate::fss::FundamentalSystem;
use crate::greens::GreenKernel;
use crate::linalg::{hermitian_condition, null_vectors, CMatrix, CVector};
use crate::problem::Problem;
use crate::quadrature::GaussLegendre;
use crate::spectrum::{boundary_form_v, power_norm, CharacteristicValue};

pub const DEFAULT_SEED: u64 = 0x5EED;

/// Relative singular-value threshold deciding the null-space dimension of the
/// characteristic matrix at a characteristic value.
const NULL_TOL: f64 = 1e-6;

/// Uniform grid on which eigenfunction samples are reported.
const SAMPLE_POINTS: usize = 101;

/// Composite Gauss–Legendre rule fine enough for oscillation `|rho|`.
pub fn fine_rule(rho: f64) -> (Vec<f64>, Vec<f64>) {
    let panels = ((rho.abs() / 2.0).ceil() as usize).max(16);
    GaussLegendre::new(16).composite(panels)
}

fn l2_norm(vals: &[Complex64], ws: &[f64]) -> f64 {
    vals.iter().zip(ws).map(|(v, w)| v.norm_sqr() * w).sum::<f64>().sqrt()
}

fn inner(a: &[Complex64], b: &[Complex64], ws: &[f64]) -> Complex64 {
    a.iter().zip(b).zip(ws).map(|((x, y), w)| x * y.conj() * *w).sum()
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenRecord {
    pub rho: Complex64,
    pub lambda: Complex64,
    /// Algebraic multiplicity (from the root search).
    pub multiplicity: usize,
    /// Dimension of the null space of the characteristic matrix.
    pub geometric: usize,
    /// Unit null vectors `d` over the canonical system `z_0 .. z_{n-1}`.
    pub coefficients: Vec<Vec<Complex64>>,
    pub grid: Vec<f64>,
    /// Samples of each normalized eigenfunction on `grid`.
    pub samples: Vec<Vec<Complex64>>,
    /// `max |U_j(u)|` over rows and eigenfunctions, for `||u|| = 1`.
    pub boundary_residual: f64,
    /// `||sum_l d_l z_l||^2 / sum_l |d_l|^2`.
    pub norm_ratio: f64,
}

/// Eigenfunctions at a characteristic value, assembled from the null space of
/// the characteristic matrix.
pub fn eigenfunction(problem: &Problem, cv: &CharacteristicValue) -> Result<EigenRecord> {
    let n = problem.order();
    let fs = problem.fss(cv.rho, cv.sector)?;
    let chr = crate::spectrum::char_matrix(problem.nbc(), &fs);
    let (vecs, sv) = null_vectors(&chr.matrix, n);
    let top = sv[0].max(1e-300);
    let geometric = sv.iter().filter(|&&s| s <= NULL_TOL * top.max(1.0)).count();
    if geometric == 0 {
        return Err(BvpError::NotCharacteristic(sv[n - 1] / top));
    }
    if geometric > cv.multiplicity {
        return Err(BvpError::NullSpaceMismatch {
            found: geometric,
            multiplicity: cv.multiplicity,
        });
    }
    let (xs, ws) = fine_rule(cv.rho.norm());
    let grid: Vec<f64> = (0..SAMPLE_POINTS).map(|i| i as f64 / (SAMPLE_POINTS - 1) as f64).collect();
    let mut coefficients = Vec::new();
    let mut samples = Vec::new();
    let mut residual: f64 = 0.0;
    let mut norm_ratio = 0.0;
    for d in vecs.iter().take(geometric) {
        let eval = |x: f64| (0..n).map(|l| d[l] * fs.z(l, 0, x)).sum::<Complex64>();
        let vals: Vec<Complex64> = xs.iter().map(|&x| eval(x)).collect();
        let norm = l2_norm(&vals, &ws);
        norm_ratio = norm * norm / d.norm_squared();
        let derivs = |x: f64| -> Vec<Complex64> {
            let mut acc = vec![Complex64::new(0.0, 0.0); n];
            for l in 0..n {
                for (a, v) in acc.iter_mut().zip(fs.z_derivs(l, x)) {
                    *a += d[l] * v;
                }
            }
            acc
        };
        // V rescales row j by rho^{-order}; undo it for the raw forms U_j.
        let v = boundary_form_v(problem.nbc(), cv.rho, &derivs(0.0), &derivs(1.0));
        for (r, row) in problem.nbc().rows().iter().enumerate() {
            let u = v[r] * cv.rho.powu(row.order as u32) / norm;
            residual = residual.max(u.norm() / cv.rho.norm().max(1.0).powi(row.order as i32));
        }
        coefficients.push(d.iter().copied().collect());
        samples.push(grid.iter().map(|&x| eval(x) / norm).collect());
    }
    Ok(EigenRecord {
        rho: cv.rho,
        lambda: cv.lambda,
        multiplicity: cv.multiplicity,
        geometric,
        coefficients,
        grid,
        samples,
        boundary_residual: residual,
        norm_ratio,
    })
}

/// Eigenfunctions of one characteristic value sampled on an arbitrary rule,
/// normalized in `L^2`.
fn eigenvectors_on(problem: &Problem, cv: &CharacteristicValue, xs: &[f64], ws: &[f64]) -> Result<Vec<Vec<Complex64>>> {
    let n = problem.order();
    let fs = problem.fss(cv.rho, cv.sector)?;
    let chr = crate::spectrum::char_matrix(problem.nbc(), &fs);
    let (vecs, sv) = null_vectors(&chr.matrix, n);
    let top = sv[0].max(1.0);
    let geometric = sv.iter().filter(|&&s| s <= NULL_TOL * top).count().max(1);
    Ok(vecs
        .iter()
        .take(geometric)
        .map(|d| {
            let vals: Vec<Complex64> = xs.iter().map(|&x| (0..n).map(|l| d[l] * fs.z(l, 0, x)).sum()).collect();
            let norm = l2_norm(&vals, ws);
            vals.into_iter().map(|v| v / norm).collect()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProjectorOptions {
    /// Gauss–Legendre nodes of the Nystrom discretization.
    pub spatial_nodes: usize,
    /// Trapezoid nodes on the circle in the `lambda` plane.
    pub contour_nodes: usize,
}

impl Default for ProjectorOptions {
    fn default() -> Self {
        ProjectorOptions {
            spatial_nodes: 128,
            contour_nodes: 48,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectorRecord {
    pub m: usize,
    pub lambda_m: Complex64,
    pub rho_m: Complex64,
    pub radius: f64,
    pub rank: usize,
    pub trace: Complex64,
    pub norm: f64,
    /// `||P_m|| (1 + |Im rho_m|) / exp(|Im rho_m|)`
    pub ratio: f64,
    /// `||P^2 - P|| / ||P||` on the Nystrom matrix.
    pub idempotency: f64,
}

/// Weighted Nystrom matrix `sqrt(w_i) P(x_i, x_j) sqrt(w_j)` of a Riesz projector.
#[derive(Debug, Clone)]
pub struct ProjectorKernel {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub matrix: CMatrix,
}

impl ProjectorKernel {
    /// `P f` on the nodes.
    pub fn apply(&self, f: &[Complex64]) -> Vec<Complex64> {
        let v = CVector::from_iterator(f.len(), f.iter().zip(&self.weights).map(|(y, w)| y * w.sqrt()));
        let pv = &self.matrix * v;
        pv.iter().zip(&self.weights).map(|(y, w)| y / w.sqrt()).collect()
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }
}

/// `P = -(1/2 pi i) oint (L - lambda)^{-1} dlambda` over the circle
/// `|lambda - center| = radius`, realized with the Green's function.
///
/// `rho_ref` fixes the branch: on the contour `rho = rho_ref (lambda/lambda_ref)^{1/n}`.
pub fn projector_kernel(
    problem: &Problem,
    center: Complex64,
    radius: f64,
    rho_ref: Complex64,
    nu: u8,
    opts: &ProjectorOptions,
) -> Result<ProjectorKernel> {
    let n = problem.order() as f64;
    let lambda_ref = rho_ref.powf(n);
    let rule = GaussLegendre::new(opts.spatial_nodes);
    let m = opts.contour_nodes;
    let parts: Vec<CMatrix> = (0..m)
        .into_par_iter()
        .map(|q| {
            let dl = Complex64::from_polar(radius, 2.0 * PI * (q as f64 + 0.5) / m as f64);
            let lambda = center + dl;
            let rho = rho_ref * (lambda / lambda_ref).powf(1.0 / n);
            let k = GreenKernel::new(problem, rho, nu)?;
            Ok(k.nystrom(&rule.nodes, &rule.weights)? * (-dl / m as f64))
        })
        .collect::<Result<_>>()?;
    let size = rule.len();
    let matrix = parts.into_iter().fold(CMatrix::zeros(size, size), |a, b| a + b);
    Ok(ProjectorKernel {
        nodes: rule.nodes.clone(),
        weights: rule.weights.clone(),
        matrix,
    })
}

/// Groups of characteristic values (indices into `cvs`, sorted by `|rho|`) closer
/// than `tol` to a neighbour.
pub fn eigen_groups(cvs: &[CharacteristicValue], tol: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, cv) in cvs.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if (cvs[*g.last().unwrap()].rho - cv.rho).norm() <= tol => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// Circle in the `lambda` plane around a group: centred at the mean eigenvalue,
/// radius half the distance to the nearest foreign eigenvalue (floor `1e-3`).
///
/// The origin counts as foreign: searches start at some `r_min > 0`, so a
/// value at (or near) `lambda = 0` is never in `cvs` but may well exist.
pub fn group_contour(cvs: &[CharacteristicValue], group: &[usize]) -> (Complex64, f64) {
    let center = group.iter().map(|&i| cvs[i].lambda).sum::<Complex64>() / group.len() as f64;
    let inner = group.iter().map(|&i| (cvs[i].lambda - center).norm()).fold(0.0, f64::max);
    let foreign = cvs
        .iter()
        .enumerate()
        .filter(|(i, _)| !group.contains(i))
        .map(|(_, c)| (c.lambda - center).norm())
        .fold(center.norm(), f64::min);
    (center, (0.5 * (inner + foreign)).max(inner + 1e-3))
}

/// Projector of one eigenvalue group, with rank, norm and idempotency checks.
pub fn projector(problem: &Problem, cvs: &[CharacteristicValue], group: &[usize], m: usize, opts: &ProjectorOptions) -> Result<(ProjectorRecord, ProjectorKernel)> {
    let (center, radius) = group_contour(cvs, group);
    let lead = &cvs[group[0]];
    let kernel = projector_kernel(problem, center, radius, lead.rho, lead.sector, opts)?;
    let expected: usize = group.iter().map(|&i| cvs[i].multiplicity).sum();
    let trace = kernel.trace();
    let rank = trace.re.round().max(0.0) as usize;
    if rank != expected {
        return Err(BvpError::ForeignSpectrum { rank, expected });
    }
    let norm = power_norm(&kernel.matrix, 60);
    let sq = &kernel.matrix * &kernel.matrix;
    let idempotency = crate::linalg::frobenius(&(sq - &kernel.matrix)) / crate::linalg::frobenius(&kernel.matrix);
    let s = lead.rho.im.abs();
    Ok((
        ProjectorRecord {
            m,
            lambda_m: center,
            rho_m: lead.rho,
            radius,
            rank,
            trace,
            norm,
            ratio: norm * (1.0 + s) / s.exp(),
            idempotency,
        },
        kernel,
    ))
}

/// Projectors of every group in `cvs`, each independent of the others.
pub fn projectors(problem: &Problem, cvs: &[CharacteristicValue], group_tol: f64, opts: &ProjectorOptions) -> Result<Vec<ProjectorRecord>> {
    let groups = eigen_groups(cvs, group_tol);
    groups
        .par_iter()
        .enumerate()
        .map(|(m, g)| projector(problem, cvs, g, m + 1, opts).map(|r| r.0))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub ratios: Vec<f64>,
    pub min: f64,
    pub max: f64,
    pub spread: f64,
}

/// Spread of `||P_m|| (1 + |Im rho_m|) / exp(|Im rho_m|)` over simple eigenvalues.
pub fn projector_norm_scaling(records: &[ProjectorRecord]) -> Result<ScalingReport> {
    if let Some(r) = records.iter().find(|r| r.rank != 1) {
        return Err(BvpError::MultipleEigenvalue(r.m));
    }
    let ratios: Vec<f64> = records.iter().map(|r| r.ratio).collect();
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max = ratios.iter().copied().fold(0.0, f64::max);
    Ok(ScalingReport {
        ratios,
        min,
        max,
        spread: max / min,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct OrthogonalityRatio {
    pub rho: Complex64,
    pub c_min: f64,
    pub c_max: f64,
}

/// Extremes of `||sum c_k y_k||^2 / sum |c_k|^2 ||y_k||^2` over `trials`
/// coefficient vectors drawn uniformly from the complex unit sphere.
pub fn almost_orthogonality_ratio(fs: &FundamentalSystem, trials: usize, seed: u64) -> OrthogonalityRatio {
    let n = fs.order();
    let rho = fs.rho().rho;
    let (xs, ws) = fine_rule(rho.norm());
    let cols: Vec<Vec<Complex64>> = (0..n).map(|k| xs.iter().map(|&x| fs.z(k, 0, x)).collect()).collect();
    let gram = CMatrix::from_fn(n, n, |i, j| inner(&cols[j], &cols[i], &ws));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut c_min, mut c_max) = (f64::INFINITY, 0.0f64);
    for _ in 0..trials {
        let mut c = CVector::from_fn(n, |_, _| {
            Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
        });
        let norm = c.norm();
        c /= Complex64::new(norm, 0.0);
        let num = (c.adjoint() * &gram * &c)[(0, 0)].re;
        let den: f64 = (0..n).map(|k| c[k].norm_sqr() * gram[(k, k)].re).sum();
        let r = num / den;
        c_min = c_min.min(r);
        c_max = c_max.max(r);
    }
    OrthogonalityRatio { rho, c_min, c_max }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpansionOptions {
    /// Numbers of eigenfunctions at which the report is taken.
    pub ks: Vec<usize>,
    pub paired: bool,
    /// Characteristic values closer than this (in `rho`) form one group.
    pub group_tol: f64,
    /// Also compute partial sums `sum P_m f` (one projector per group).
    pub partial_sums: bool,
    pub projector: ProjectorOptions,
}

impl Default for ExpansionOptions {
    fn default() -> Self {
        ExpansionOptions {
            ks: vec![5, 10, 20, 30],
            paired: false,
            group_tol: 1.5,
            partial_sums: false,
            projector: ProjectorOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpansionRow {
    pub k: usize,
    pub gram_condition: f64,
    pub partial_sum_error: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpansionReport {
    pub paired: bool,
    pub groups: Vec<Vec<usize>>,
    pub rows: Vec<ExpansionRow>,
}

/// Riesz-constant estimate (Gram condition number of normalized eigenfunctions,
/// or of orthonormalized group bases when `paired`) and partial-sum errors of
/// `f` after the first `k` eigenfunctions.
pub fn expansion_experiment<F>(problem: &Problem, cvs: &[CharacteristicValue], f: &F, opts: &ExpansionOptions) -> Result<ExpansionReport>
where
    F: Fn(f64) -> Complex64 + Sync,
{
    let groups = eigen_groups(cvs, opts.group_tol);
    let kmax = opts.ks.iter().copied().max().unwrap_or(0);
    let rmax = cvs.iter().map(|c| c.rho.norm()).fold(1.0, f64::max);
    let (xs, ws) = fine_rule(rmax);

    // group bases, in order, until kmax functions are collected
    let mut used = Vec::new();
    let mut count = 0;
    for g in &groups {
        if count >= kmax {
            break;
        }
        count += g.iter().map(|&i| cvs[i].multiplicity).sum::<usize>();
        used.push(g.clone());
    }
    if count < kmax {
        return Err(BvpError::InvalidArgument(format!(
            "only {count} eigenfunctions available, {kmax} requested"
        )));
    }
    let bases: Vec<Vec<Vec<Complex64>>> = used
        .par_iter()
        .map(|g| {
            let mut fns = Vec::new();
            for &i in g {
                fns.extend(eigenvectors_on(problem, &cvs[i], &xs, &ws)?);
            }
            if opts.paired {
                fns = orthonormalize(fns, &ws);
            }
            Ok(fns)
        })
        .collect::<Result<_>>()?;

    let kernels: Option<Vec<ProjectorKernel>> = if opts.partial_sums {
        Some(
            used.par_iter()
                .map(|g| projector(problem, cvs, g, 0, &opts.projector).map(|r| r.1))
                .collect::<Result<_>>()?,
        )
    } else {
        None
    };

    let mut rows = Vec::new();
    for &k in &opts.ks {
        // paired: whole groups only; unpaired: exactly k functions
        let mut taken = 0;
        let mut vecs: Vec<&Vec<Complex64>> = Vec::new();
        let mut ngroups = 0;
        for b in &bases {
            if taken >= k || (opts.paired && taken + b.len() > k) {
                break;
            }
            let take = if opts.paired { b.len() } else { b.len().min(k - taken) };
            taken += take;
            vecs.extend(b.iter().take(take));
            ngroups += 1;
        }
        let gram = CMatrix::from_fn(vecs.len(), vecs.len(), |i, j| inner(vecs[j], vecs[i], &ws));
        let partial_sum_error = kernels.as_ref().map(|ks| {
            let nodes = &ks[0].nodes;
            let wq = &ks[0].weights;
            let fv: Vec<Complex64> = nodes.iter().map(|&x| f(x)).collect();
            let mut s = vec![Complex64::new(0.0, 0.0); fv.len()];
            for kern in ks.iter().take(ngroups) {
                for (a, b) in s.iter_mut().zip(kern.apply(&fv)) {
                    *a += b;
                }
            }
            let diff: Vec<Complex64> = fv.iter().zip(&s).map(|(a, b)| a - b).collect();
            l2_norm(&diff, wq)
        });
        rows.push(ExpansionRow {
            k: taken,
            gram_condition: hermitian_condition(&gram),
            partial_sum_error,
        });
    }
    Ok(ExpansionReport {
        paired: opts.paired,
        groups: used,
        rows,
    })
}

/// Modified Gram–Schmidt in the weighted inner product.
fn orthonormalize(mut fns: Vec<Vec<Complex64>>, ws: &[f64]) -> Vec<Vec<Complex64>> {
    for i in 0..fns.len() {
        for j in 0..i {
            let c = inner(&fns[i], &fns[j], ws);
            let (head, tail) = fns.split_at_mut(i);
            for (a, b) in tail[0].iter_mut().zip(&head[j]) {
                *a -= c * b;
            }
        }
        let norm = l2_norm(&fns[i], ws);
        for a in fns[i].iter_mut() {
            *a /= norm;
        }
    }
    fns
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fss::RhoPoint;
    use crate::model::presets;
    use crate::regularity::SectorIndex;
    use crate::spectrum::{find_cvs, RootOptions, SearchRegion};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn spectrum(p: &Problem, r_max: f64) -> Vec<CharacteristicValue> {
        find_cvs(p, &SearchRegion::new(0.5, r_max), &RootOptions::default()).unwrap().cvs
    }

    #[test]
    fn dirichlet_eigenfunctions_are_sines() {
        let p = Problem::free("d", presets::dirichlet()).unwrap();
        for cv in spectrum(&p, 10.0) {
            let e = eigenfunction(&p, &cv).unwrap();
            assert_eq!(e.geometric, 1);
            assert!(e.boundary_residual < 1e-7);
            let k = (cv.rho.re / PI).round();
            // fix the phase at an interior point
            let i = 13;
            let phase = e.samples[0][i] / (2f64.sqrt() * (PI * k * e.grid[i]).sin());
            for (x, u) in e.grid.iter().zip(&e.samples[0]) {
                let want = phase * 2f64.sqrt() * (PI * k * x).sin();
                assert!((u - want).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn periodic_null_space_is_two_dimensional() {
        let p = Problem::free("p", presets::periodic()).unwrap();
        let cvs = spectrum(&p, 8.0);
        let cv = cvs.iter().find(|v| (v.rho - c(2.0 * PI, 0.0)).norm() < 1e-6).unwrap();
        assert_eq!(cv.multiplicity, 2);
        assert_eq!(eigenfunction(&p, cv).unwrap().geometric, 2);
    }

    #[test]
    fn dirichlet_projectors_are_orthogonal() {
        let p = Problem::free("d", presets::dirichlet()).unwrap();
        let cvs = spectrum(&p, 13.0);
        let recs = projectors(&p, &cvs, 1e-3, &ProjectorOptions::default()).unwrap();
        assert_eq!(recs.len(), 4);
        for r in &recs {
            assert_eq!(r.rank, 1);
            assert!((r.trace - 1.0).norm() < 1e-6);
            assert!((r.norm - 1.0).abs() < 1e-6, "{}", r.norm);
            assert!(r.idempotency < 1e-6);
        }
    }

    #[test]
    fn first_order_projector_norm() {
        // y(0) + c y(1) = 0: rho = pi - arg c + 2 pi k + i ln|c|, ||P|| = sinh(s)/s
        for &s in &[-2.0f64, 2.0] {
            let p = Problem::free("f", presets::first_order(c(s.exp(), 0.0))).unwrap();
            let cvs = find_cvs(&p, &SearchRegion::new(1.0, 12.0), &RootOptions::default()).unwrap().cvs;
            assert!(!cvs.is_empty());
            for cv in &cvs {
                assert!((cv.rho.im - s).abs() < 1e-10);
            }
            let recs = projectors(&p, &cvs, 1e-3, &ProjectorOptions::default()).unwrap();
            for r in &recs {
                assert!((r.norm - s.sinh() / s).abs() < 1e-6 * r.norm, "{} vs {}", r.norm, s.sinh() / s);
            }
        }
    }

    #[test]
    fn projector_algebra_and_reproduction() {
        let p = Problem::free("d", presets::dirichlet()).unwrap();
        let cvs = spectrum(&p, 10.0);
        let opts = ProjectorOptions::default();
        let (_, p1) = projector(&p, &cvs, &[0], 1, &opts).unwrap();
        let (_, p2) = projector(&p, &cvs, &[1], 2, &opts).unwrap();
        let cross = &p1.matrix * &p2.matrix;
        assert!(crate::linalg::frobenius(&cross) < 1e-6);
        let f: Vec<Complex64> = p1.nodes.iter().map(|&x| c((2.0 * PI * x).sin(), 0.0)).collect();
        let back = p2.apply(&f);
        for (a, b) in f.iter().zip(back) {
            assert!((a - b).norm() < 1e-7);
        }
    }

    #[test]
    fn orthogonal_harmonics_have_unit_ratio() {
        let fs = FundamentalSystem::exact(2, RhoPoint::from_rho(c(2.0 * PI, 0.0), 2), SectorIndex::new(2, 0));
        let r = almost_orthogonality_ratio(&fs, 50, DEFAULT_SEED);
        assert!((r.c_min - 1.0).abs() < 1e-12 && (r.c_max - 1.0).abs() < 1e-12);
        let fs = FundamentalSystem::exact(1, RhoPoint::from_rho(c(3.0, 1.0), 1), SectorIndex::new(1, 0));
        let r = almost_orthogonality_ratio(&fs, 20, DEFAULT_SEED);
        assert!((r.c_min - 1.0).abs() < 1e-12 && (r.c_max - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ratio_is_deterministic_under_seed() {
        let fs = FundamentalSystem::exact(2, RhoPoint::from_rho(Complex64::from_polar(30.0, PI / 4.0), 2), SectorIndex::new(2, 0));
        let a = almost_orthogonality_ratio(&fs, 200, DEFAULT_SEED);
        let b = almost_orthogonality_ratio(&fs, 200, DEFAULT_SEED);
        assert_eq!(a.c_min, b.c_min);
        assert!(a.c_max / a.c_min < 50.0);
    }

    #[test]
    fn dirichlet_expansion_converges() {
        let p = Problem::free("d", presets::dirichlet()).unwrap();
        let cvs = spectrum(&p, 40.0);
        let opts = ExpansionOptions {
            ks: vec![2, 6, 12],
            partial_sums: true,
            ..Default::default()
        };
        let rep = expansion_experiment(&p, &cvs, &|x: f64| c(x * (1.0 - x), 0.0), &opts).unwrap();
        for r in &rep.rows {
            assert!(r.gram_condition < 1.0 + 1e-6);
        }
        let errs: Vec<f64> = rep.rows.iter().map(|r| r.partial_sum_error.unwrap()).collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2] && errs[2] < 1e-3, "{errs:?}");
    }
}
