use num_complex::Complex64;
use serde::Serialize;

use super::geometry::{in_euclidean_disk, SectorGeometry};
use crate::error::{BvpError, Result};
use crate::greens::GreenKernel;
use crate::linalg::{frobenius, CMatrix, CVector};
use crate::problem::Problem;
use crate::quadrature::GaussLegendre;

/// Size of the resolvent `(L - rho^n)^{-1}` at one point.
#[derive(Debug, Clone, Serialize)]
pub struct ResolventProbe {
    pub rho: [f64; 2],
    pub hilbert_schmidt: f64,
    pub operator_norm: f64,
    /// `operator_norm * |rho|^{n-1}`
    pub scaled_norm: f64,
}

pub const PROBE_NODES: usize = 256;
const POWER_ITERATIONS: usize = 30;

/// Largest singular value by power iteration on `M^* M`.
pub fn power_norm(m: &CMatrix, iterations: usize) -> f64 {
    let k = m.ncols();
    let mut v = CVector::from_fn(k, |i, _| Complex64::new(1.0 + 0.1 * (i % 7) as f64, 0.05 * (i % 3) as f64));
    v /= Complex64::new(v.norm(), 0.0);
    let mut s = 0.0;
    for _ in 0..iterations {
        let w = m * &v;
        let u = m.adjoint() * &w;
        let nu = u.norm();
        if nu == 0.0 {
            return 0.0;
        }
        s = w.norm();
        v = u / Complex64::new(nu, 0.0);
    }
    s.max((m * &v).norm())
}

/// Hilbert–Schmidt and operator norm of the resolvent at `rho`, refused when
/// `rho` sits within `1e-6 (1 + |rho|)` of a known characteristic value.
pub fn resolvent_probe(problem: &Problem, rho: Complex64, nu: u8, known: &[Complex64]) -> Result<ResolventProbe> {
    resolvent_probe_with(problem, rho, nu, known, PROBE_NODES)
}

pub fn resolvent_probe_with(
    problem: &Problem,
    rho: Complex64,
    nu: u8,
    known: &[Complex64],
    nodes: usize,
) -> Result<ResolventProbe> {
    let guard = 1e-6 * (1.0 + rho.norm());
    if let Some(d) = known.iter().map(|&z| (z - rho).norm()).filter(|&d| d < guard).reduce(f64::min) {
        return Err(BvpError::NearSpectrum {
            rho: format!("{rho}"),
            distance: d,
        });
    }
    let kernel = GreenKernel::new(problem, rho, nu)?;
    let rule = GaussLegendre::new(nodes);
    let m = kernel.nystrom(&rule.nodes, &rule.weights)?;
    let op = power_norm(&m, POWER_ITERATIONS);
    Ok(ResolventProbe {
        rho: [rho.re, rho.im],
        hilbert_schmidt: frobenius(&m),
        operator_norm: op,
        scaled_norm: op * rho.norm().powi(problem.order() as i32 - 1),
    })
}

/// Probe point `tau_m` chosen in the annulus `r_m <= |rho| <= r_{m+1}`,
/// `r_m = (1 + delta)^m`, of the sub-sector with the disks around all
/// characteristic values and the boundary strips removed.
#[derive(Debug, Clone, Serialize)]
pub struct ProbePoint {
    pub m: u32,
    pub tau: [f64; 2],
    pub removed_fraction: f64,
    /// `min_j |tau - rho_j| / |tau|`
    pub separation: f64,
}

const RADIAL_SAMPLES: usize = 24;
const ANGULAR_SAMPLES: usize = 48;

pub fn probe_sequence(geom: &SectorGeometry, cvs: &[Complex64], m_min: u32, m_max: u32) -> Result<Vec<ProbePoint>> {
    let d1 = geom.delta1();
    let strip = geom.strip_angle();
    let bis = geom.bisector();
    (m_min..=m_max)
        .map(|m| {
            let r0 = (1.0 + geom.delta).powi(m as i32);
            let r1 = r0 * (1.0 + geom.delta);
            let target = Complex64::from_polar(r0 * (1.0 + geom.delta / 2.0), bis);
            let mut best: Option<(f64, Complex64)> = None;
            let mut removed = 0usize;
            let mut total = 0usize;
            for a in 0..RADIAL_SAMPLES {
                let r = r0 + (r1 - r0) * (a as f64 + 0.5) / RADIAL_SAMPLES as f64;
                for b in 0..ANGULAR_SAMPLES {
                    let t = -geom.epsilon + 2.0 * geom.epsilon * (b as f64 + 0.5) / ANGULAR_SAMPLES as f64;
                    total += 1;
                    let z = Complex64::from_polar(r, bis + t);
                    let near_edge = geom.epsilon - t.abs() < strip;
                    if near_edge || cvs.iter().any(|&w| in_euclidean_disk(w, z, d1)) {
                        removed += 1;
                        continue;
                    }
                    let d = (z - target).norm();
                    if best.is_none_or(|(bd, _)| d < bd) {
                        best = Some((d, z));
                    }
                }
            }
            let fraction = removed as f64 / total as f64;
            let (_, tau) = best.ok_or(BvpError::EmptyGoodDomain { m: m as usize, removed: fraction })?;
            let separation = cvs.iter().map(|&w| (w - tau).norm()).fold(f64::INFINITY, f64::min) / tau.norm();
            Ok(ProbePoint {
                m,
                tau: [tau.re, tau.im],
                removed_fraction: fraction,
                separation,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;
    use std::f64::consts::PI;

    #[test]
    fn power_norm_of_diagonal() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![
            Complex64::new(3.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.5, 0.0),
        ]));
        assert!((power_norm(&m, 60) - 3.0).abs() < 1e-10);
    }

    #[test]
    fn refuses_points_on_the_spectrum() {
        let p = Problem::free("d", presets::dirichlet()).unwrap();
        let err = resolvent_probe(&p, Complex64::new(PI, 0.0), 0, &[Complex64::new(PI, 0.0)]).unwrap_err();
        assert!(matches!(err, BvpError::NearSpectrum { .. }));
    }

    #[test]
    fn dirichlet_resolvent_norm_off_axis() {
        // self-adjoint: ||R|| = 1 / dist(lambda, {(k pi)^2})
        let p = Problem::free("d", presets::dirichlet()).unwrap();
        let rho = Complex64::new(10.0, 0.8);
        let pr = resolvent_probe_with(&p, rho, 0, &[], 128).unwrap();
        let lam = rho * rho;
        let dist = (1..40).map(|k| (lam - (PI * k as f64).powi(2)).norm()).fold(f64::INFINITY, f64::min);
        assert!((pr.operator_norm * dist - 1.0).abs() < 1e-3, "{}", pr.operator_norm * dist);
    }

    #[test]
    fn probe_points_avoid_disks() {
        let g = SectorGeometry::default_for(2, 0);
        let cvs: Vec<Complex64> = (1..60).map(|k| Complex64::new(PI * k as f64, 0.0)).collect();
        let pts = probe_sequence(&g, &cvs, 40, 60).unwrap();
        for p in &pts {
            let tau = Complex64::new(p.tau[0], p.tau[1]);
            assert!(g.contains(tau));
            assert!(cvs.iter().all(|&w| !in_euclidean_disk(w, tau, g.delta1())));
        }
    }
}
