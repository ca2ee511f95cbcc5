use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{BvpError, Result};

/// Sub-sector `S_nu(eps) = { |arg rho - (nu + 1/2) pi / n| <= eps }` and the
/// hyperbolic radius `delta` used for sparseness and probe points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectorGeometry {
    pub n: usize,
    pub nu: u8,
    pub epsilon: f64,
    pub delta: f64,
}

impl SectorGeometry {
    pub fn new(n: usize, nu: u8, epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < PI / (2.0 * n as f64)) {
            return Err(BvpError::InvalidArgument(format!("epsilon must lie in (0, pi/2n), got {epsilon}")));
        }
        if !(delta > 0.0 && delta < 1.0 / 3.0) {
            return Err(BvpError::InvalidArgument(format!("delta must lie in (0, 1/3), got {delta}")));
        }
        if nu > 1 {
            return Err(BvpError::InvalidArgument(format!("sector index must be 0 or 1, got {nu}")));
        }
        Ok(SectorGeometry { n, nu, epsilon, delta })
    }

    /// Defaults `eps = pi/(4n)`, `delta = 0.05`.
    pub fn default_for(n: usize, nu: u8) -> Self {
        SectorGeometry {
            n,
            nu,
            epsilon: PI / (4.0 * n as f64),
            delta: 0.05,
        }
    }

    pub fn bisector(&self) -> f64 {
        (self.nu as f64 + 0.5) * PI / self.n as f64
    }

    /// Signed angular offset of `rho` from the bisector, in (-pi, pi].
    pub fn offset(&self, rho: Complex64) -> f64 {
        let mut d = rho.arg() - self.bisector();
        while d > PI {
            d -= 2.0 * PI;
        }
        while d <= -PI {
            d += 2.0 * PI;
        }
        d
    }

    pub fn contains(&self, rho: Complex64) -> bool {
        rho.norm() > 0.0 && self.offset(rho).abs() <= self.epsilon
    }

    /// `delta_1 = 2 delta / (1 - delta)`, radius factor of the disk enclosing `K(rho, delta)`.
    pub fn delta1(&self) -> f64 {
        2.0 * self.delta / (1.0 - self.delta)
    }

    /// Angular width of the strip along each boundary ray of `S_nu(eps)` that
    /// disks `D(rho_j, delta_1)` centred outside the sub-sector can reach.
    pub fn strip_angle(&self) -> f64 {
        let s = self.delta1() * (PI / (2.0 * self.n as f64) + self.epsilon).sin();
        s.min(1.0).asin()
    }
}

/// Normalized Blaschke factor of the upper half-plane,
/// `b_l(z) = |l^2 + 1| / (l^2 + 1) * (z - l) / (z - conj l)`, with `b_i(z) = (z - i)/(z + i)`.
pub fn blaschke(lambda: Complex64, z: Complex64) -> Result<Complex64> {
    let denom = z - lambda.conj();
    if denom.norm() == 0.0 {
        return Err(BvpError::InvalidArgument("Blaschke factor evaluated at the conjugate point".into()));
    }
    let q = lambda * lambda + 1.0;
    let unimodular = if q.norm() == 0.0 { Complex64::new(1.0, 0.0) } else { q.norm() / q };
    Ok(unimodular * (z - lambda) / denom)
}

/// `z` lies in `K(center, delta) = { |b_center(z)| <= delta }`.
///
/// For a real centre the set degenerates to the centre itself.
pub fn in_hyperbolic_circle(center: Complex64, z: Complex64, delta: f64) -> bool {
    let den = (z - center.conj()).norm();
    if den == 0.0 {
        return false;
    }
    (z - center).norm() <= delta * den
}

/// Euclidean centre and radius of `K(rho, delta)` (an Apollonius disk).
pub fn hyperbolic_disk(rho: Complex64, delta: f64) -> (Complex64, f64) {
    let d2 = delta * delta;
    let center = (rho - rho.conj() * d2) / (1.0 - d2);
    let radius = 2.0 * delta * rho.im.abs() / (1.0 - d2);
    (center, radius)
}

/// `D(rho, delta) = { |z - rho| <= delta |Im rho| }`.
pub fn in_euclidean_disk(rho: Complex64, z: Complex64, delta: f64) -> bool {
    (z - rho).norm() <= delta * rho.im.abs()
}

#[derive(Debug, Clone, Serialize)]
pub struct SparsenessEntry {
    pub rho: [f64; 2],
    pub count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SparsenessReport {
    pub geometry: SectorGeometry,
    /// Distinct characteristic values of the sub-sector, each with the number of
    /// distinct values of the sub-sector inside its hyperbolic circle.
    pub entries: Vec<SparsenessEntry>,
    pub max_count: usize,
    /// Same count over all supplied values (not restricted to the sub-sector).
    pub full_max_count: usize,
    pub bound: usize,
    pub violation: bool,
}

/// Counts distinct characteristic values inside hyperbolic circles; the
/// sequence is `N`-sparse with `N = n` when no circle holds more than `n`.
pub fn sparseness_audit(cvs: &[Complex64], geom: &SectorGeometry, merge_tol: f64) -> SparsenessReport {
    let mut distinct: Vec<Complex64> = Vec::new();
    for &z in cvs {
        if !distinct.iter().any(|w| (w - z).norm() <= merge_tol * (1.0 + z.norm())) {
            distinct.push(z);
        }
    }
    let count_in = |center: Complex64, pool: &[Complex64]| {
        pool.iter()
            .filter(|&&w| (w - center).norm() == 0.0 || in_hyperbolic_circle(center, w, geom.delta))
            .count()
    };
    let inner: Vec<Complex64> = distinct.iter().copied().filter(|&z| geom.contains(z)).collect();
    let entries: Vec<SparsenessEntry> = inner
        .iter()
        .map(|&z| SparsenessEntry {
            rho: [z.re, z.im],
            count: count_in(z, &inner),
        })
        .collect();
    let max_count = entries.iter().map(|e| e.count).max().unwrap_or(0);
    let full_max_count = distinct.iter().map(|&z| count_in(z, &distinct)).max().unwrap_or(0);
    SparsenessReport {
        geometry: *geom,
        entries,
        max_count,
        full_max_count,
        bound: geom.n,
        violation: max_count > geom.n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn blaschke_values() {
        let i = c(0.0, 1.0);
        assert!(blaschke(i, i).unwrap().norm() < 1e-15);
        assert!((blaschke(i, c(0.0, 2.0)).unwrap().norm() - 1.0 / 3.0).abs() < 1e-15);
        let l = c(0.7, 2.3);
        for &x in &[-3.0, 0.0, 1.5, 40.0] {
            assert!((blaschke(l, c(x, 0.0)).unwrap().norm() - 1.0).abs() < 1e-14);
        }
        assert!(blaschke(l, l.conj()).is_err());
    }

    #[test]
    fn disk_inclusions() {
        let delta = 0.05;
        let g = SectorGeometry::new(2, 0, PI / 8.0, delta).unwrap();
        let d1 = g.delta1();
        for &rho in &[c(3.0, 4.0), c(50.0, 50.0), c(-2.0, 0.3)] {
            let (center, radius) = hyperbolic_disk(rho, delta);
            for k in 0..64 {
                let w = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / 64.0);
                // boundary of D(rho, delta) lies in K
                let z = rho + w * (delta * rho.im.abs() * (1.0 - 1e-12));
                assert!(in_hyperbolic_circle(rho, z, delta));
                // boundary of K lies in D(rho, delta_1)
                let z = center + w * radius;
                assert!((blaschke(rho, z).unwrap().norm() - delta).abs() < 1e-10);
                assert!(in_euclidean_disk(rho, z, d1 * (1.0 + 1e-12)));
            }
        }
    }

    #[test]
    fn synthetic_cluster_is_flagged() {
        let g = SectorGeometry::default_for(2, 0);
        let base = Complex64::from_polar(30.0, g.bisector());
        let cluster: Vec<Complex64> = (0..3).map(|k| base + c(0.01 * k as f64, 0.0)).collect();
        let rep = sparseness_audit(&cluster, &g, 1e-9);
        assert_eq!(rep.max_count, 3);
        assert!(rep.violation);
    }

    #[test]
    fn real_values_have_degenerate_circles() {
        let g = SectorGeometry::default_for(2, 0);
        let cvs: Vec<Complex64> = (1..=15).map(|k| c(PI * k as f64, 0.0)).collect();
        let rep = sparseness_audit(&cvs, &g, 1e-6);
        assert_eq!(rep.max_count, 0);
        assert_eq!(rep.full_max_count, 1);
        assert!(!rep.violation);
    }
}
