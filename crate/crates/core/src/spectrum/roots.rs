//! Zeros of the characteristic determinant by argument-principle box counting.
//!
//! The search runs over polar boxes `[r0, r1] x [t0, t1]`. The winding number
//! of `Delta` around a box is obtained by tracking its phase along the edges,
//! bisecting wherever consecutive samples differ by more than `PHASE_STEP`.
//! Boxes with one zero go to Newton's method; boxes with several are split
//! until they either separate or shrink below the merge tolerance, in which
//! case the cluster is reported with its total multiplicity.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{BvpError, Result};
use crate::problem::Problem;

const PHASE_STEP: f64 = PI / 6.0;
const MAX_BISECT: usize = 40;
const MAX_RETRIES: usize = 5;
/// Boxes smaller than this (in `rho`) holding several zeros try the cluster shortcut.
const CLUSTER_PROBE: f64 = 1.0;


/// Closed annulus `r_min <= |rho| <= r_max` intersected with the chosen sectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchRegion {
    pub r_min: f64,
    pub r_max: f64,
    pub sectors: Vec<u8>,
}

impl SearchRegion {
    pub fn new(r_min: f64, r_max: f64) -> Self {
        SearchRegion {
            r_min,
            r_max,
            sectors: vec![0, 1],
        }
    }

    pub fn sector(mut self, nu: u8) -> Self {
        self.sectors = vec![nu];
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RootOptions {
    /// Relative merge tolerance: values closer than `merge_tol (1 + |rho|)` are one.
    pub merge_tol: f64,
    /// Target size of the initial boxes, in units of `rho`.
    pub box_size: f64,
    /// Newton stopping tolerance, relative to `1 + |rho|`.
    pub newton_tol: f64,
}

impl Default for RootOptions {
    fn default() -> Self {
        RootOptions {
            merge_tol: 1e-6,
            box_size: 16.0,
            newton_tol: 1e-14,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharacteristicValue {
    pub rho: Complex64,
    pub lambda: Complex64,
    pub multiplicity: usize,
    pub residual: f64,
    pub sector: u8,
}

#[derive(Debug, Clone, Serialize)]
pub struct Spectrum {
    pub cvs: Vec<CharacteristicValue>,
    pub region: SearchRegion,
    pub max_residual: f64,
}

impl Spectrum {
    pub fn rhos(&self) -> Vec<Complex64> {
        self.cvs.iter().map(|c| c.rho).collect()
    }

    pub fn lambdas(&self) -> Vec<Complex64> {
        self.cvs.iter().map(|c| c.lambda).collect()
    }

    /// Total count with multiplicities.
    pub fn total_multiplicity(&self) -> usize {
        self.cvs.iter().map(|c| c.multiplicity).sum()
    }
}

/// Polar box `[r0, r1] x [t0, t1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarBox {
    pub r0: f64,
    pub r1: f64,
    pub t0: f64,
    pub t1: f64,
}

impl PolarBox {
    pub fn new(r0: f64, r1: f64, t0: f64, t1: f64) -> Self {
        PolarBox { r0, r1, t0, t1 }
    }

    pub fn center(&self) -> Complex64 {
        Complex64::from_polar(0.5 * (self.r0 + self.r1), 0.5 * (self.t0 + self.t1))
    }

    pub fn size(&self) -> f64 {
        (self.r1 - self.r0).max(self.r1 * (self.t1 - self.t0))
    }

    pub fn contains(&self, z: Complex64, margin: f64) -> bool {
        let r = z.norm();
        let mut t = z.arg();
        // bring the angle next to the box
        let mid = 0.5 * (self.t0 + self.t1);
        while t - mid > PI {
            t -= 2.0 * PI;
        }
        while mid - t > PI {
            t += 2.0 * PI;
        }
        r >= self.r0 - margin && r <= self.r1 + margin && t * r >= self.t0 * r - margin && t * r <= self.t1 * r + margin
    }

    /// Box of half-size `h` centred at `z`, angles taken next to this box.
    fn around(&self, z: Complex64, h: f64) -> PolarBox {
        let r = z.norm();
        let mid = 0.5 * (self.t0 + self.t1);
        let mut t = z.arg();
        while t - mid > PI {
            t -= 2.0 * PI;
        }
        while mid - t > PI {
            t += 2.0 * PI;
        }
        PolarBox::new(r - h, r + h, t - h / r, t + h / r)
    }

    /// Four children splitting at fraction `f` of each side.
    pub fn split(&self, f: f64) -> [PolarBox; 4] {
        let rm = self.r0 + f * (self.r1 - self.r0);
        let tm = self.t0 + f * (self.t1 - self.t0);
        [
            PolarBox::new(self.r0, rm, self.t0, tm),
            PolarBox::new(rm, self.r1, self.t0, tm),
            PolarBox::new(self.r0, rm, tm, self.t1),
            PolarBox::new(rm, self.r1, tm, self.t1),
        ]
    }

    /// Boundary as four parametrized edges, counter-clockwise.
    fn edges(&self) -> [Edge; 4] {
        [
            Edge::Radial { t: self.t0, a: self.r0, b: self.r1 },
            Edge::Arc { r: self.r1, a: self.t0, b: self.t1 },
            Edge::Radial { t: self.t1, a: self.r1, b: self.r0 },
            Edge::Arc { r: self.r0, a: self.t1, b: self.t0 },
        ]
    }
}

#[derive(Debug, Clone, Copy)]
enum Edge {
    Radial { t: f64, a: f64, b: f64 },
    Arc { r: f64, a: f64, b: f64 },
}

impl Edge {
    fn at(&self, s: f64) -> Complex64 {
        match *self {
            Edge::Radial { t, a, b } => Complex64::from_polar(a + s * (b - a), t),
            Edge::Arc { r, a, b } => Complex64::from_polar(r, a + s * (b - a)),
        }
    }

    fn length(&self) -> f64 {
        match *self {
            Edge::Radial { a, b, .. } => (b - a).abs(),
            Edge::Arc { r, a, b } => r * (b - a).abs(),
        }
    }
}

/// The contour passed (numerically) through a zero.
#[derive(Debug)]
struct Hit;

fn phase_step(a: Complex64, b: Complex64) -> f64 {
    (b / a).arg()
}

fn edge_phase<F>(f: &F, edge: &Edge) -> std::result::Result<f64, Hit>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    // the midpoint check in `refine` doubles the effective density
    let samples = ((edge.length() / 0.5).ceil() as usize).max(4);
    let eval = |s: f64| -> std::result::Result<Complex64, Hit> {
        match f(edge.at(s)) {
            Ok(v) if v.norm() > 0.0 && v.re.is_finite() && v.im.is_finite() => Ok(v),
            _ => Err(Hit),
        }
    };
    let mut total = 0.0;
    let mut s_prev = 0.0;
    let mut f_prev = eval(0.0)?;
    for i in 1..=samples {
        let s = i as f64 / samples as f64;
        let fs = eval(s)?;
        total += refine(&eval, s_prev, s, f_prev, fs, 0)?;
        s_prev = s;
        f_prev = fs;
    }
    Ok(total)
}

fn refine<E>(eval: &E, sa: f64, sb: f64, fa: Complex64, fb: Complex64, depth: usize) -> std::result::Result<f64, Hit>
where
    E: Fn(f64) -> std::result::Result<Complex64, Hit>,
{
    let step = phase_step(fa, fb);
    let ratio = fb.norm() / fa.norm();
    let sm = 0.5 * (sa + sb);
    let fm = eval(sm)?;
    if step.abs() <= PHASE_STEP && (0.25..=4.0).contains(&ratio) {
        // the midpoint guards against a full turn aliased to a small step,
        // which happens when the edge grazes a multiple zero
        let (s1, s2) = (phase_step(fa, fm), phase_step(fm, fb));
        let r1 = fm.norm() / fa.norm();
        if s1.abs() <= PHASE_STEP && s2.abs() <= PHASE_STEP && (s1 + s2 - step).abs() < 1e-6 && (0.25..=4.0).contains(&r1) {
            return Ok(step);
        }
    }
    if depth >= MAX_BISECT {
        return Err(Hit);
    }
    Ok(refine(eval, sa, sm, fa, fm, depth + 1)? + refine(eval, sm, sb, fm, fb, depth + 1)?)
}

fn box_winding<F>(f: &F, b: &PolarBox) -> std::result::Result<i64, Hit>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let mut total = 0.0;
    for e in b.edges() {
        total += edge_phase(f, &e)?;
    }
    let w = total / (2.0 * PI);
    let rounded = w.round();
    if (w - rounded).abs() > 0.05 || rounded < 0.0 {
        return Err(Hit);
    }
    Ok(rounded as i64)
}

/// Number of zeros of `Delta` (sector `nu` scaling) inside `b`, counted with multiplicity.
pub fn winding_number(problem: &Problem, nu: u8, b: &PolarBox) -> Result<i64> {
    let f = |z: Complex64| problem.delta(z, nu);
    box_winding(&f, b).map_err(|_| BvpError::RootSearch("contour passes through a zero".into()))
}

enum Outcome {
    Roots(Vec<CharacteristicValue>),
    Split(Vec<(PolarBox, i64)>),
}

/// Returns the best iterate, its residual and whether the step criterion was met.
fn newton<F>(f: &F, start: Complex64, m: usize, tol: f64) -> Result<(Complex64, f64, bool)>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let mut z = start;
    let mut fz = f(z)?;
    let mut best = (z, fz.norm());
    for _ in 0..60 {
        if fz.norm() == 0.0 {
            return Ok((z, 0.0, true));
        }
        let h = 1e-6 * (1.0 + z.norm());
        // an iterate that wanders off where Delta cannot be evaluated has not converged
        let d = match (f(z + h), f(z - h)) {
            (Ok(a), Ok(b)) => (a - b) / (2.0 * h),
            _ => break,
        };
        if d.norm() == 0.0 {
            break;
        }
        let step = fz / d * m as f64;
        z -= step;
        fz = match f(z) {
            Ok(v) => v,
            Err(_) => break,
        };
        if fz.norm() < best.1 {
            best = (z, fz.norm());
        }
        let scale = 1.0 + z.norm();
        // modified Newton on clusters only reaches ~sqrt(eps)
        let stop = if m == 1 { tol } else { tol.sqrt().max(1e-9) };
        if step.norm() <= stop * scale {
            return Ok((best.0, best.1, true));
        }
        if !z.re.is_finite() || !z.im.is_finite() {
            break;
        }
    }
    Ok((best.0, best.1, false))
}

fn process<F>(f: &F, nu: u8, n: usize, b: PolarBox, w: i64, opts: &RootOptions) -> Result<Outcome>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    if w == 0 {
        return Ok(Outcome::Roots(Vec::new()));
    }
    let c = b.center();
    let merge = opts.merge_tol * (1.0 + c.norm());
    let make = |rho: Complex64, residual: f64, m: usize| CharacteristicValue {
        rho,
        lambda: rho.powu(n as u32),
        multiplicity: m,
        residual,
        sector: nu,
    };
    if w == 1 {
        let (z, res, ok) = newton(f, c, 1, opts.newton_tol)?;
        if ok && b.contains(z, 1e-9 * (1.0 + z.norm())) {
            return Ok(Outcome::Roots(vec![make(z, res, 1)]));
        }
        if b.size() < merge {
            return Ok(Outcome::Roots(vec![make(c, f(c)?.norm(), 1)]));
        }
    } else if b.size() < merge {
        let (z, res, _) = newton(f, c, w as usize, opts.newton_tol)?;
        let z = if (z - c).norm() <= 2.0 * b.size() { z } else { c };
        let res = if z == c { f(c)?.norm() } else { res };
        return Ok(Outcome::Roots(vec![make(z, res, w as usize)]));
    } else if b.size() < CLUSTER_PROBE {
        // Shortcut for tight clusters: aim a merge-sized box at the modified
        // Newton estimate and accept it if it carries the whole count.
        let (z, res, _) = newton(f, c, w as usize, opts.newton_tol)?;
        if b.contains(z, 0.0) {
            let tiny = b.around(z, 0.5 * merge);
            if matches!(box_winding(f, &tiny), Ok(k) if k == w) {
                return Ok(Outcome::Roots(vec![make(z, res, w as usize)]));
            }
        }
    }
    for attempt in 0..=MAX_RETRIES {
        let frac = 0.5 + 0.037 * attempt as f64 * if attempt % 2 == 0 { 1.0 } else { -1.0 };
        let children = b.split(frac);
        let counts: std::result::Result<Vec<i64>, Hit> = children.iter().map(|cb| box_winding(f, cb)).collect();
        if let Ok(counts) = counts {
            if counts.iter().sum::<i64>() == w {
                return Ok(Outcome::Split(children.into_iter().zip(counts).collect()));
            }
        }
    }
    Err(BvpError::RootSearch(format!(
        "winding number inconsistent under subdivision near rho = {c}"
    )))
}

/// Angular search ranges per sector; together they cover one period
/// `[-pad, 2 pi / n - pad)` so every characteristic value is found once.
fn sector_ranges(n: usize, r_max: f64, attempt: usize) -> [(f64, f64); 2] {
    let half = PI / n as f64;
    let jitter = 1.0 + 0.31 * attempt as f64;
    let pad = (0.25 / r_max.max(1.0)).min(0.05) * jitter;
    let mid = half + (0.37 / r_max.max(1.0)).min(0.05) * jitter;
    [(-pad, mid), (mid, 2.0 * half - pad)]
}

/// All zeros of `Delta` in `region`, with multiplicities.
pub fn find_cvs(problem: &Problem, region: &SearchRegion, opts: &RootOptions) -> Result<Spectrum> {
    if !(region.r_min > 0.0 && region.r_max > region.r_min) {
        return Err(BvpError::InvalidArgument(format!(
            "search annulus [{}, {}] is empty or touches the origin",
            region.r_min, region.r_max
        )));
    }
    let mut last_err = None;
    for attempt in 0..=MAX_RETRIES {
        match search(problem, region, opts, attempt) {
            Ok(s) => return Ok(s),
            Err(e @ BvpError::RootSearch(_)) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or_else(|| BvpError::RootSearch("search failed".into())))
}

fn search(problem: &Problem, region: &SearchRegion, opts: &RootOptions, attempt: usize) -> Result<Spectrum> {
    let n = problem.order();
    let ranges = sector_ranges(n, region.r_max, attempt);
    let shell = 1e-7 * attempt as f64 * (1.0 + region.r_max);
    let (r_lo, r_hi) = (region.r_min - shell, region.r_max + shell);
    let annuli = ((r_hi - r_lo) / opts.box_size).ceil().max(1.0) as usize;
    let dr = (r_hi - r_lo) / annuli as f64;

    let mut found = Vec::new();
    for &nu in &region.sectors {
        let (ta, tb) = ranges[nu as usize];
        let mut boxes = Vec::new();
        for i in 0..annuli {
            let (r0, r1) = (r_lo + i as f64 * dr, r_lo + (i + 1) as f64 * dr);
            let arcs = ((r1 * (tb - ta)) / opts.box_size).ceil().max(1.0) as usize;
            let dt = (tb - ta) / arcs as f64;
            for j in 0..arcs {
                boxes.push(PolarBox::new(r0, r1, ta + j as f64 * dt, ta + (j + 1) as f64 * dt));
            }
        }
        let f = |z: Complex64| problem.delta(z, nu);
        let counted: Vec<std::result::Result<i64, Hit>> = boxes.par_iter().map(|b| box_winding(&f, b)).collect();
        let mut level: Vec<(PolarBox, i64)> = Vec::with_capacity(boxes.len());
        for (b, w) in boxes.into_iter().zip(counted) {
            match w {
                Ok(w) => level.push((b, w)),
                Err(Hit) => return Err(BvpError::RootSearch("initial contour passes through a zero".into())),
            }
        }
        while !level.is_empty() {
            let outcomes: Vec<Result<Outcome>> = level
                .par_iter()
                .map(|&(b, w)| process(&f, nu, n, b, w, opts))
                .collect();
            let mut next = Vec::new();
            for o in outcomes {
                match o? {
                    Outcome::Roots(r) => found.extend(r),
                    Outcome::Split(children) => next.extend(children.into_iter().filter(|&(_, w)| w > 0)),
                }
            }
            level = next;
        }
    }

    found.sort_by(|a, b| {
        a.rho
            .norm()
            .total_cmp(&b.rho.norm())
            .then(a.rho.arg().total_cmp(&b.rho.arg()))
    });
    let mut cvs: Vec<CharacteristicValue> = Vec::with_capacity(found.len());
    for c in found {
        if let Some(prev) = cvs
            .iter_mut()
            .find(|p| (p.rho - c.rho).norm() <= opts.merge_tol * (1.0 + c.rho.norm()))
        {
            prev.multiplicity = prev.multiplicity.max(c.multiplicity);
            continue;
        }
        cvs.push(c);
    }
    let max_residual = cvs.iter().map(|c| c.residual).fold(0.0, f64::max);
    Ok(Spectrum {
        cvs,
        region: region.clone(),
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;

    #[test]
    fn dirichlet_values_are_multiples_of_pi() {
        let p = Problem::free("d", presets::dirichlet()).unwrap();
        let s = find_cvs(&p, &SearchRegion::new(1.0, 20.0), &RootOptions::default()).unwrap();
        assert_eq!(s.cvs.len(), 6);
        for (k, cv) in s.cvs.iter().enumerate() {
            assert_eq!(cv.multiplicity, 1);
            assert!((cv.rho - Complex64::new(PI * (k + 1) as f64, 0.0)).norm() < 1e-9, "{:?}", cv.rho);
        }
    }

    #[test]
    fn antiperiodic_values_are_double() {
        let p = Problem::free("a", presets::antiperiodic()).unwrap();
        let s = find_cvs(&p, &SearchRegion::new(1.0, 12.0), &RootOptions::default()).unwrap();
        assert_eq!(s.cvs.len(), 2);
        for (k, cv) in s.cvs.iter().enumerate() {
            assert_eq!(cv.multiplicity, 2);
            assert!((cv.rho - Complex64::new(PI * (2 * k + 1) as f64, 0.0)).norm() < 1e-6);
        }
    }

    #[test]
    fn empty_below_first_zero() {
        let p = Problem::free("d", presets::dirichlet()).unwrap();
        let s = find_cvs(&p, &SearchRegion::new(0.5, 3.0), &RootOptions::default()).unwrap();
        assert!(s.cvs.is_empty());
    }

    #[test]
    fn winding_is_additive_under_subdivision() {
        let p = Problem::free("n", presets::neumann()).unwrap();
        let b = PolarBox::new(2.0, 11.0, -0.1, 0.4);
        let w = winding_number(&p, 0, &b).unwrap();
        assert_eq!(w, 3);
        let sum: i64 = b.split(0.43).iter().map(|c| winding_number(&p, 0, c).unwrap()).sum();
        assert_eq!(sum, w);
    }
}
