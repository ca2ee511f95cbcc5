//! Problem data model: the differential expression, boundary conditions in raw
//! and normalized form, and the JSON problem document.
//!
//! Throughout, `D = -i d/dx` and a problem of order `n` reads
//!
//! ```text
//! l(y) = D^n y + sum_{k <= n-2} p_k(x) D^k y = lambda y,   0 <= x <= 1,
//! U_j(y) = sum_k ( a_jk D^k y(0) + b_jk D^k y(1) ) = 0,      j = 0..n-1.
//! ```

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{BvpError, Result};
use crate::linalg::{numerical_rank, CMatrix};
use crate::quadrature::GaussLegendre;

/// Relative tolerance used when deciding the rank of a leading block.
pub const NORMALIZE_TOL: f64 = 1e-10;

/// A coefficient function `p_k` on [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient {
    /// Polynomial `c_0 + c_1 x + c_2 x^2 + ...`.
    Poly(Vec<Complex64>),
    /// Uniform samples at `x_i = i/(m-1)`, interpolated with local cubics.
    Samples(Vec<Complex64>),
}

impl Coefficient {
    pub fn zero() -> Self {
        Coefficient::Poly(Vec::new())
    }

    pub fn constant(c: Complex64) -> Self {
        Coefficient::Poly(vec![c])
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Coefficient::Poly(c) | Coefficient::Samples(c) => c.iter().all(|z| *z == Complex64::new(0.0, 0.0)),
        }
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        match self {
            Coefficient::Poly(c) => c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &ck| acc * x + ck),
            Coefficient::Samples(v) => interpolate_uniform(v, x),
        }
    }

    fn values(&self) -> &[Complex64] {
        match self {
            Coefficient::Poly(c) | Coefficient::Samples(c) => c,
        }
    }
}

fn interpolate_uniform(v: &[Complex64], x: f64) -> Complex64 {
    match v.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => v[0],
        m => {
            let t = x.clamp(0.0, 1.0) * (m - 1) as f64;
            let i = (t.floor() as usize).min(m - 2);
            // four-point stencil clamped to the table
            let lo = i.saturating_sub(1).min(m.saturating_sub(4));
            let hi = (lo + 4).min(m);
            let nodes: Vec<usize> = (lo..hi).collect();
            let mut acc = Complex64::new(0.0, 0.0);
            for (a, &ia) in nodes.iter().enumerate() {
                let mut w = 1.0;
                for (b, &ib) in nodes.iter().enumerate() {
                    if a != b {
                        w *= (t - ib as f64) / (ia as f64 - ib as f64);
                    }
                }
                acc += v[ia] * w;
            }
            acc
        }
    }
}

/// `l(y) = D^n y + sum_{k<=n-2} p_k D^k y`.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferentialExpression {
    order: usize,
    coefficients: Vec<Coefficient>,
}

impl DifferentialExpression {
    /// Expression with all `p_k = 0`.
    pub fn free(order: usize) -> Self {
        assert!(order >= 1, "order must be at least 1");
        DifferentialExpression {
            order,
            coefficients: vec![Coefficient::zero(); order - 1],
        }
    }

    /// `coefficients[k]` is `p_k`; there must be exactly `order - 1` of them.
    pub fn new(order: usize, coefficients: Vec<Coefficient>) -> Result<Self> {
        if order == 0 {
            return Err(BvpError::Schema {
                path: "order".into(),
                message: "order must be at least 1".into(),
            });
        }
        if coefficients.len() != order - 1 {
            return Err(BvpError::Schema {
                path: "coefficients".into(),
                message: format!("expected {} coefficient slots, got {}", order - 1, coefficients.len()),
            });
        }
        Ok(DifferentialExpression { order, coefficients })
    }

    pub fn with_coefficient(mut self, k: usize, c: Coefficient) -> Self {
        assert!(k + 1 < self.order, "p_k exists only for k <= n-2");
        self.coefficients[k] = c;
        self
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coefficients(&self) -> &[Coefficient] {
        &self.coefficients
    }

    pub fn coefficient(&self, k: usize) -> &Coefficient {
        &self.coefficients[k]
    }

    pub fn is_free(&self) -> bool {
        self.coefficients.iter().all(Coefficient::is_zero)
    }

    /// `sum_k ||p_k||_{L^1(0,1)}`.
    pub fn l1_norm(&self) -> f64 {
        let g = GaussLegendre::new(16);
        let (xs, ws) = g.composite(8);
        self.coefficients
            .iter()
            .map(|c| xs.iter().zip(&ws).map(|(&x, &w)| w * c.eval(x).norm()).sum::<f64>())
            .sum()
    }

    /// Default asymptotic radius `R0 = 5 (1 + sum ||p_k||_1)`.
    pub fn default_r0(&self) -> f64 {
        5.0 * (1.0 + self.l1_norm())
    }
}

/// Raw boundary conditions: row `j` encodes `U_j(y) = sum_k a_jk D^k y(0) + b_jk D^k y(1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawBoundaryConditions {
    pub a: CMatrix,
    pub b: CMatrix,
}

impl RawBoundaryConditions {
    pub fn new(a: CMatrix, b: CMatrix) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n || b.ncols() != n {
            return Err(BvpError::OrderMismatch {
                path: "boundary".into(),
                rows: b.nrows(),
                order: n,
            });
        }
        let raw = RawBoundaryConditions { a, b };
        let rank = numerical_rank(&raw.stacked(), NORMALIZE_TOL);
        if rank < n {
            return Err(BvpError::RankDeficient { rank, order: n });
        }
        Ok(raw)
    }

    /// Builds from real row-major entries; convenient for tests and presets.
    pub fn from_real_rows(a: &[&[f64]], b: &[&[f64]]) -> Result<Self> {
        let n = a.len();
        let to = |rows: &[&[f64]]| {
            DMatrix::from_fn(n, n, |i, j| Complex64::new(rows[i][j], 0.0))
        };
        RawBoundaryConditions::new(to(a), to(b))
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    /// The n x 2n matrix `[a | b]`.
    pub fn stacked(&self) -> CMatrix {
        let n = self.order();
        let mut m = CMatrix::zeros(n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&self.a);
        m.view_mut((0, n), (n, n)).copy_from(&self.b);
        m
    }
}

/// One normalized condition `b^0 D^j y(0) + b^1 D^j y(1) + (lower order terms)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedRow {
    /// Highest derivative order `j` present in the row.
    pub order: usize,
    /// Coefficients of `D^k y(0)`, `k = 0..n-1`; zero above `order`.
    pub at_zero: Vec<Complex64>,
    /// Coefficients of `D^k y(1)`.
    pub at_one: Vec<Complex64>,
}

impl NormalizedRow {
    pub fn leading(&self) -> (Complex64, Complex64) {
        (self.at_zero[self.order], self.at_one[self.order])
    }

    pub fn has_tail(&self) -> bool {
        (0..self.order).any(|k| self.at_zero[k].norm() > 0.0 || self.at_one[k].norm() > 0.0)
    }
}

/// Boundary conditions in normal form, rows sorted by ascending derivative order.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedBoundaryConditions {
    order: usize,
    ranks: Vec<usize>,
    rows: Vec<NormalizedRow>,
}

impl NormalizedBoundaryConditions {
    pub fn order(&self) -> usize {
        self.order
    }

    /// `r_j` for `j = 0..n-1`.
    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn rows(&self) -> &[NormalizedRow] {
        &self.rows
    }

    /// Leading vectors `(b_j^0, b_j^1)` of order `j`, each of length `r_j`.
    pub fn leading(&self, j: usize) -> (Vec<Complex64>, Vec<Complex64>) {
        self.rows
            .iter()
            .filter(|r| r.order == j)
            .map(|r| r.leading())
            .unzip()
    }

    /// Back to raw `(a, b)` matrices, one row per normalized condition.
    pub fn render(&self) -> RawBoundaryConditions {
        let n = self.order;
        let a = DMatrix::from_fn(n, n, |i, k| self.rows[i].at_zero[k]);
        let b = DMatrix::from_fn(n, n, |i, k| self.rows[i].at_one[k]);
        RawBoundaryConditions { a, b }
    }
}

/// Brings boundary conditions to normal form by Gaussian elimination processed
/// from the highest derivative order down.
///
/// At each order `j` the two columns `D^j y(0)`, `D^j y(1)` of the remaining
/// rows are reduced to rank-revealing form; rows that receive a pivot get
/// order `j` and leave the pool. Lower-order entries of a row (its tail) are
/// kept as they are after elimination.
pub fn normalize(raw: &RawBoundaryConditions) -> Result<NormalizedBoundaryConditions> {
    let n = raw.order();
    let mut m = raw.stacked();
    // unit max-norm rows so a single absolute threshold is meaningful
    for i in 0..n {
        let s = m.row(i).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if s > 0.0 {
            let inv = Complex64::new(1.0 / s, 0.0);
            for z in m.row_mut(i).iter_mut() {
                *z *= inv;
            }
        }
    }
    let tol = NORMALIZE_TOL;
    let mut pool: Vec<usize> = (0..n).collect();
    let mut ranks = vec![0usize; n];
    let mut picked: Vec<NormalizedRow> = Vec::with_capacity(n);

    for j in (0..n).rev() {
        let cols = [j, n + j];
        // first pivot over both columns; ties favour the x = 0 column
        let Some((p1, c1, mag1)) = best_pivot(&m, &pool, &cols) else { continue };
        if mag1 < tol {
            continue;
        }
        check_ambiguity(j, mag1, tol)?;
        eliminate(&mut m, &pool, p1, c1);
        pool.retain(|&r| r != p1);
        let c2 = if c1 == j { n + j } else { j };
        let second = best_pivot(&m, &pool, &[c2]).filter(|&(_, _, mag)| mag >= tol);
        match second {
            Some((p2, _, mag2)) => {
                check_ambiguity(j, mag2, tol)?;
                eliminate(&mut m, &pool, p2, c2);
                // clear c2 from the first pivot row as well
                let f = m[(p1, c2)] / m[(p2, c2)];
                for col in 0..2 * n {
                    let v = m[(p2, col)];
                    m[(p1, col)] -= f * v;
                }
                pool.retain(|&r| r != p2);
                ranks[j] = 2;
                let (r0, r1) = if c1 == j { (p1, p2) } else { (p2, p1) };
                picked.push(make_row(&m, r0, j, n, j));
                picked.push(make_row(&m, r1, j, n, n + j));
            }
            None => {
                ranks[j] = 1;
                picked.push(make_row(&m, p1, j, n, c1));
            }
        }
    }

    let total: usize = ranks.iter().sum();
    if total < n {
        return Err(BvpError::RankDeficient { rank: total, order: n });
    }
    // ascending derivative order, stable within an order
    picked.sort_by_key(|r| r.order);
    Ok(NormalizedBoundaryConditions {
        order: n,
        ranks,
        rows: picked,
    })
}

fn best_pivot(m: &CMatrix, pool: &[usize], cols: &[usize]) -> Option<(usize, usize, f64)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for &c in cols {
        for &r in pool {
            let mag = m[(r, c)].norm();
            let better = match best {
                None => true,
                Some((_, _, b)) => mag > b * (1.0 + 1e-12),
            };
            if better {
                best = Some((r, c, mag));
            }
        }
    }
    best
}

fn check_ambiguity(order: usize, mag: f64, tol: f64) -> Result<()> {
    if mag < 1e3 * tol {
        return Err(BvpError::RankAmbiguous { order, ratio: mag });
    }
    Ok(())
}

fn eliminate(m: &mut CMatrix, pool: &[usize], pivot_row: usize, col: usize) {
    let piv = m[(pivot_row, col)];
    for &r in pool {
        if r == pivot_row {
            continue;
        }
        let f = m[(r, col)] / piv;
        if f.norm() == 0.0 {
            continue;
        }
        for c in 0..m.ncols() {
            let v = m[(pivot_row, c)];
            m[(r, c)] -= f * v;
        }
        m[(r, col)] = Complex64::new(0.0, 0.0);
    }
}

fn make_row(m: &CMatrix, r: usize, order: usize, n: usize, pivot_col: usize) -> NormalizedRow {
    let inv = Complex64::new(1.0, 0.0) / m[(r, pivot_col)];
    let mut at_zero: Vec<Complex64> = (0..n).map(|k| m[(r, k)] * inv).collect();
    let mut at_one: Vec<Complex64> = (0..n).map(|k| m[(r, n + k)] * inv).collect();
    for k in order + 1..n {
        at_zero[k] = Complex64::new(0.0, 0.0);
        at_one[k] = Complex64::new(0.0, 0.0);
    }
    // exact unit pivot; a partner below the rank threshold is elimination
    // residue and must read as an exact zero, or the Hadamard-scaled theta
    // test sees a tiny column instead of a zero one
    let (pivot, partner) = if pivot_col < n {
        (&mut at_zero[order], &mut at_one[order])
    } else {
        (&mut at_one[order], &mut at_zero[order])
    };
    *pivot = Complex64::new(1.0, 0.0);
    if partner.norm() < NORMALIZE_TOL {
        *partner = Complex64::new(0.0, 0.0);
    }
    NormalizedRow { order, at_zero, at_one }
}

/// A complete problem: expression plus boundary conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct BvpSpec {
    pub label: String,
    pub expression: DifferentialExpression,
    pub boundary: RawBoundaryConditions,
}

impl BvpSpec {
    pub fn new(label: impl Into<String>, expression: DifferentialExpression, boundary: RawBoundaryConditions) -> Result<Self> {
        if expression.order() != boundary.order() {
            return Err(BvpError::OrderMismatch {
                path: "boundary.a".into(),
                rows: boundary.order(),
                order: expression.order(),
            });
        }
        Ok(BvpSpec {
            label: label.into(),
            expression,
            boundary,
        })
    }

    pub fn order(&self) -> usize {
        self.expression.order()
    }

    pub fn normalized(&self) -> Result<NormalizedBoundaryConditions> {
        normalize(&self.boundary)
    }

    pub fn to_document(&self) -> BvpDocument {
        let n = self.order();
        let coefficients = self
            .expression
            .coefficients()
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| CoefficientDocument {
                k,
                kind: match c {
                    Coefficient::Poly(_) => CoefficientKind::Poly,
                    Coefficient::Samples(_) => CoefficientKind::Samples,
                },
                values: c.values().iter().map(|z| [z.re, z.im]).collect(),
            })
            .collect();
        let mat = |m: &CMatrix| {
            (0..n)
                .map(|i| (0..n).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                .collect()
        };
        BvpDocument {
            label: self.label.clone(),
            order: n,
            coefficients,
            boundary: BoundaryDocument {
                a: mat(&self.boundary.a),
                b: mat(&self.boundary.b),
            },
        }
    }
}

/// JSON shape of a problem document; complex numbers are `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BvpDocument {
    pub label: String,
    pub order: usize,
    #[serde(default)]
    pub coefficients: Vec<CoefficientDocument>,
    pub boundary: BoundaryDocument,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoefficientKind {
    Poly,
    Samples,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientDocument {
    pub k: usize,
    pub kind: CoefficientKind,
    pub values: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryDocument {
    pub a: Vec<Vec<[f64; 2]>>,
    pub b: Vec<Vec<[f64; 2]>>,
}

/// Parses and validates a JSON problem document.
pub fn parse_spec(document: &str) -> Result<BvpSpec> {
    let de = &mut serde_json::Deserializer::from_str(document);
    let doc: BvpDocument = serde_path_to_error::deserialize(de).map_err(|e| BvpError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    spec_from_document(&doc)
}

pub fn spec_from_document(doc: &BvpDocument) -> Result<BvpSpec> {
    let n = doc.order;
    if n == 0 {
        return Err(BvpError::Schema {
            path: "order".into(),
            message: "order must be at least 1".into(),
        });
    }
    let mut coefficients = vec![Coefficient::zero(); n - 1];
    let mut seen = vec![false; n.saturating_sub(1)];
    for (i, c) in doc.coefficients.iter().enumerate() {
        let path = format!("coefficients[{i}]");
        if c.k + 1 >= n {
            return Err(BvpError::Schema {
                path: format!("{path}.k"),
                message: format!("p_{} does not exist for order {n} (k must be <= n-2)", c.k),
            });
        }
        if seen[c.k] {
            return Err(BvpError::Schema {
                path: format!("{path}.k"),
                message: format!("duplicate coefficient p_{}", c.k),
            });
        }
        seen[c.k] = true;
        if c.values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(BvpError::Schema {
                path: format!("{path}.values"),
                message: "non-finite value".into(),
            });
        }
        let vals: Vec<Complex64> = c.values.iter().map(|v| Complex64::new(v[0], v[1])).collect();
        coefficients[c.k] = match c.kind {
            CoefficientKind::Poly => Coefficient::Poly(vals),
            CoefficientKind::Samples => {
                if vals.len() < 2 {
                    return Err(BvpError::Schema {
                        path: format!("{path}.values"),
                        message: "samples need at least two values".into(),
                    });
                }
                Coefficient::Samples(vals)
            }
        };
    }
    let expression = DifferentialExpression::new(n, coefficients)?;
    let a = matrix_from_doc(&doc.boundary.a, n, "boundary.a")?;
    let b = matrix_from_doc(&doc.boundary.b, n, "boundary.b")?;
    let boundary = RawBoundaryConditions::new(a, b)?;
    BvpSpec::new(doc.label.clone(), expression, boundary)
}

fn matrix_from_doc(rows: &[Vec<[f64; 2]>], n: usize, path: &str) -> Result<CMatrix> {
    if rows.len() != n {
        return Err(BvpError::OrderMismatch {
            path: path.into(),
            rows: rows.len(),
            order: n,
        });
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != n {
            return Err(BvpError::Schema {
                path: format!("{path}[{i}]"),
                message: format!("expected {n} entries, got {}", r.len()),
            });
        }
        if r.iter().flatten().any(|v| !v.is_finite()) {
            return Err(BvpError::Schema {
                path: format!("{path}[{i}]"),
                message: "non-finite value".into(),
            });
        }
    }
    Ok(DMatrix::from_fn(n, n, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1])))
}

/// Named boundary conditions used in tests, examples and the CLI.
pub mod presets {
    use super::*;

    fn raw(a: &[&[f64]], b: &[&[f64]]) -> RawBoundaryConditions {
        RawBoundaryConditions::from_real_rows(a, b).expect("preset is full rank")
    }

    /// `y(0) = y(1) = 0`.
    pub fn dirichlet() -> RawBoundaryConditions {
        raw(&[&[1.0, 0.0], &[0.0, 0.0]], &[&[0.0, 0.0], &[1.0, 0.0]])
    }

    /// `Dy(0) = Dy(1) = 0`.
    pub fn neumann() -> RawBoundaryConditions {
        raw(&[&[0.0, 1.0], &[0.0, 0.0]], &[&[0.0, 0.0], &[0.0, 1.0]])
    }

    /// `y(0) - y(1) = 0`, `Dy(0) - Dy(1) = 0`.
    pub fn periodic() -> RawBoundaryConditions {
        raw(&[&[1.0, 0.0], &[0.0, 1.0]], &[&[-1.0, 0.0], &[0.0, -1.0]])
    }

    /// `y(0) + y(1) = 0`, `Dy(0) + Dy(1) = 0`.
    pub fn antiperiodic() -> RawBoundaryConditions {
        raw(&[&[1.0, 0.0], &[0.0, 1.0]], &[&[1.0, 0.0], &[0.0, 1.0]])
    }

    /// `y(0) = Dy(0) = 0`.
    pub fn cauchy() -> RawBoundaryConditions {
        raw(&[&[1.0, 0.0], &[0.0, 1.0]], &[&[0.0, 0.0], &[0.0, 0.0]])
    }

    /// Third order: `y(0) = y(1) = Dy(0) = 0`.
    pub fn third_order() -> RawBoundaryConditions {
        raw(
            &[&[1.0, 0.0, 0.0], &[0.0, 0.0, 0.0], &[0.0, 1.0, 0.0]],
            &[&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 0.0, 0.0]],
        )
    }

    /// Fourth order clamped: `y(0) = y(1) = Dy(0) = Dy(1) = 0`.
    pub fn clamped4() -> RawBoundaryConditions {
        raw(
            &[&[1.0, 0.0, 0.0, 0.0], &[0.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0], &[0.0, 0.0, 0.0, 0.0]],
            &[&[0.0, 0.0, 0.0, 0.0], &[1.0, 0.0, 0.0, 0.0], &[0.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0]],
        )
    }

    /// First order `y(0) + c y(1) = 0`.
    pub fn first_order(c: Complex64) -> RawBoundaryConditions {
        RawBoundaryConditions::new(
            DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0)),
            DMatrix::from_element(1, 1, c),
        )
        .expect("rank one")
    }

    /// Weakly regular pair-splitting conditions
    /// `y(0) = 0`, `Dy(0) - Dy(1) + c y(1) = 0`.
    ///
    /// With `l = D^2` the characteristic values split into `2 pi k` and a
    /// companion sequence approaching it like `O(1/k)`, with eigenfunctions
    /// whose angle tends to zero.
    pub fn walker(c: Complex64) -> RawBoundaryConditions {
        let z = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        RawBoundaryConditions::new(
            DMatrix::from_row_slice(2, 2, &[one, z, z, one]),
            DMatrix::from_row_slice(2, 2, &[z, z, c, -one]),
        )
        .expect("rank two")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    const DIRICHLET: &str = r#"{
        "label": "dirichlet", "order": 2, "coefficients": [],
        "boundary": { "a": [[[1,0],[0,0]],[[0,0],[0,0]]], "b": [[[0,0],[0,0]],[[1,0],[0,0]]] }
    }"#;

    #[test]
    fn parses_dirichlet() {
        let spec = parse_spec(DIRICHLET).unwrap();
        assert_eq!(spec.order(), 2);
        assert_eq!(numerical_rank(&spec.boundary.stacked(), 1e-10), 2);
        assert!(spec.expression.is_free());
    }

    #[test]
    fn duplicated_row_is_rank_deficient() {
        let doc = r#"{ "label": "dup", "order": 2,
            "boundary": { "a": [[[1,0],[0,0]],[[1,0],[0,0]]], "b": [[[0,0],[0,0]],[[0,0],[0,0]]] } }"#;
        let err = parse_spec(doc).unwrap_err();
        assert!(matches!(err, BvpError::RankDeficient { rank: 1, order: 2 }), "{err}");
        assert!(err.to_string().contains("boundary rank deficient"));
    }

    #[test]
    fn row_count_must_match_order() {
        let doc = r#"{ "label": "short", "order": 3,
            "boundary": { "a": [[[1,0],[0,0],[0,0]],[[0,0],[0,0],[0,0]]],
                          "b": [[[0,0],[0,0],[0,0]],[[1,0],[0,0],[0,0]]] } }"#;
        let err = parse_spec(doc).unwrap_err();
        match err {
            BvpError::OrderMismatch { ref path, rows, order } => {
                assert_eq!((path.as_str(), rows, order), ("boundary.a", 2, 3));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn schema_errors_carry_field_path() {
        let doc = r#"{ "label": "x", "order": 2, "coefficients": [{"k": 0, "kind": "spline", "values": []}],
            "boundary": { "a": [], "b": [] } }"#;
        match parse_spec(doc).unwrap_err() {
            BvpError::Schema { path, .. } => assert_eq!(path, "coefficients[0].kind"),
            other => panic!("unexpected {other}"),
        }
        let doc = r#"{ "label": "x", "order": 2, "coefficients": [{"k": 1, "kind": "poly", "values": [[1,0]]}],
            "boundary": { "a": [[[1,0],[0,0]],[[0,0],[0,0]]], "b": [[[0,0],[0,0]],[[1,0],[0,0]]] } }"#;
        match parse_spec(doc).unwrap_err() {
            BvpError::Schema { path, .. } => assert_eq!(path, "coefficients[0].k"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn normalize_dirichlet_gives_identity_block() {
        let nbc = normalize(&presets::dirichlet()).unwrap();
        assert_eq!(nbc.ranks(), &[2, 0]);
        let (b0, b1) = nbc.leading(0);
        assert_eq!(b0, vec![c(1.0), c(0.0)]);
        assert_eq!(b1, vec![c(0.0), c(1.0)]);
    }

    #[test]
    fn normalize_cauchy_and_periodic_are_fixed_points() {
        let nbc = normalize(&presets::cauchy()).unwrap();
        assert_eq!(nbc.ranks(), &[1, 1]);
        assert_eq!(nbc.leading(0), (vec![c(1.0)], vec![c(0.0)]));
        assert_eq!(nbc.leading(1), (vec![c(1.0)], vec![c(0.0)]));

        let nbc = normalize(&presets::periodic()).unwrap();
        assert_eq!(nbc.ranks(), &[1, 1]);
        assert_eq!(nbc.leading(0), (vec![c(1.0)], vec![c(-1.0)]));
        assert_eq!(nbc.leading(1), (vec![c(1.0)], vec![c(-1.0)]));
    }

    #[test]
    fn tails_survive_elimination() {
        // Dy(0) + 3 y(0) = 0 and y(1) = 0
        let raw = RawBoundaryConditions::from_real_rows(&[&[3.0, 1.0], &[0.0, 0.0]], &[&[0.0, 0.0], &[1.0, 0.0]]).unwrap();
        let nbc = normalize(&raw).unwrap();
        assert_eq!(nbc.ranks(), &[1, 1]);
        let top = nbc.rows().iter().find(|r| r.order == 1).unwrap();
        assert!(top.has_tail());
        assert_eq!(top.at_zero[0], c(3.0));
    }

    #[test]
    fn sampled_coefficients_interpolate_cubics_exactly() {
        let f = |x: f64| 1.0 + 2.0 * x - x * x + 0.5 * x * x * x;
        let vals: Vec<Complex64> = (0..11).map(|i| c(f(i as f64 / 10.0))).collect();
        let coef = Coefficient::Samples(vals);
        for &x in &[0.0, 0.03, 0.37, 0.5, 0.91, 1.0] {
            assert!((coef.eval(x).re - f(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn document_round_trip() {
        let spec = parse_spec(DIRICHLET).unwrap();
        let text = serde_json::to_string(&spec.to_document()).unwrap();
        let again = parse_spec(&text).unwrap();
        assert_eq!(spec, again);
    }
}
