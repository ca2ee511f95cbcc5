//! A validated problem: expression, normalized boundary conditions and class.

use num_complex::Complex64;

use crate::error::Result;
use crate::fss::{FundamentalSystem, RhoPoint};
use crate::model::{BvpSpec, DifferentialExpression, NormalizedBoundaryConditions, RawBoundaryConditions};
use crate::regularity::{classify, RegularityReport, SectorIndex};
use crate::spectrum::{char_matrix, CharacteristicData};

#[derive(Debug, Clone)]
pub struct Problem {
    spec: BvpSpec,
    nbc: NormalizedBoundaryConditions,
    regularity: RegularityReport,
}

impl Problem {
    pub fn new(spec: BvpSpec) -> Result<Self> {
        let nbc = spec.normalized()?;
        let regularity = classify(&nbc);
        Ok(Problem { spec, nbc, regularity })
    }

    pub fn from_parts(label: &str, expression: DifferentialExpression, boundary: RawBoundaryConditions) -> Result<Self> {
        Self::new(BvpSpec::new(label, expression, boundary)?)
    }

    /// `l = D^n` with the given conditions.
    pub fn free(label: &str, boundary: RawBoundaryConditions) -> Result<Self> {
        let n = boundary.order();
        Self::from_parts(label, DifferentialExpression::free(n), boundary)
    }

    pub fn spec(&self) -> &BvpSpec {
        &self.spec
    }

    pub fn label(&self) -> &str {
        &self.spec.label
    }

    pub fn order(&self) -> usize {
        self.spec.order()
    }

    pub fn expression(&self) -> &DifferentialExpression {
        &self.spec.expression
    }

    pub fn nbc(&self) -> &NormalizedBoundaryConditions {
        &self.nbc
    }

    pub fn regularity(&self) -> &RegularityReport {
        &self.regularity
    }

    pub fn sector(&self, nu: u8) -> SectorIndex {
        SectorIndex::new(self.order(), nu)
    }

    /// Fundamental system usable at every `x` in [0, 1].
    pub fn fss(&self, rho: Complex64, nu: u8) -> Result<FundamentalSystem> {
        let pt = RhoPoint::from_rho(rho, self.order());
        FundamentalSystem::new(self.expression(), pt, self.sector(nu))
    }

    /// Fundamental system valid at the endpoints only (cheaper when integrated).
    pub fn fss_endpoints(&self, rho: Complex64, nu: u8) -> Result<FundamentalSystem> {
        let pt = RhoPoint::from_rho(rho, self.order());
        if self.expression().is_free() {
            Ok(FundamentalSystem::exact(self.order(), pt, self.sector(nu)))
        } else {
            FundamentalSystem::integrated_on_grid(self.expression(), pt, self.sector(nu), 1)
        }
    }

    pub fn characteristic(&self, rho: Complex64, nu: u8) -> Result<CharacteristicData> {
        Ok(char_matrix(&self.nbc, &self.fss_endpoints(rho, nu)?))
    }

    /// `Delta(rho)` with the canonical scaling of sector `nu`.
    pub fn delta(&self, rho: Complex64, nu: u8) -> Result<Complex64> {
        Ok(self.characteristic(rho, nu)?.det)
    }

    /// Default asymptotic radius.
    pub fn r0(&self) -> f64 {
        self.expression().default_r0()
    }
}
