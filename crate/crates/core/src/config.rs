//! Every tunable default in one place.

use std::f64::consts::PI;

use serde::Serialize;

use crate::analysis::{ProjectorOptions, DEFAULT_SEED};
use crate::regularity::{DISCRIMINANT_TOL, THETA_TOL};
use crate::spectrum::{RootOptions, PROBE_NODES};

pub const THREADS_ENV: &str = "BIRKHOFF_THREADS";

#[derive(Debug, Clone, Serialize)]
pub struct Defaults {
    pub seed: u64,
    pub theta_tol: f64,
    pub discriminant_tol: f64,
    pub merge_tol: f64,
    pub newton_tol: f64,
    pub box_size: f64,
    /// Sub-sector half-width is `epsilon_factor * pi / n`.
    pub epsilon_factor: f64,
    pub delta: f64,
    pub probe_nodes: usize,
    pub projector_spatial_nodes: usize,
    pub projector_contour_nodes: usize,
    pub orthogonality_trials: usize,
    pub threads_env: &'static str,
}

impl Default for Defaults {
    fn default() -> Self {
        let roots = RootOptions::default();
        let proj = ProjectorOptions::default();
        Defaults {
            seed: DEFAULT_SEED,
            theta_tol: THETA_TOL,
            discriminant_tol: DISCRIMINANT_TOL,
            merge_tol: roots.merge_tol,
            newton_tol: roots.newton_tol,
            box_size: roots.box_size,
            epsilon_factor: 0.25,
            delta: 0.05,
            probe_nodes: PROBE_NODES,
            projector_spatial_nodes: proj.spatial_nodes,
            projector_contour_nodes: proj.contour_nodes,
            orthogonality_trials: 200,
            threads_env: THREADS_ENV,
        }
    }
}

impl Defaults {
    pub fn epsilon(&self, n: usize) -> f64 {
        self.epsilon_factor * PI / n as f64
    }

    pub fn root_options(&self) -> RootOptions {
        RootOptions {
            merge_tol: self.merge_tol,
            box_size: self.box_size,
            newton_tol: self.newton_tol,
        }
    }

    pub fn projector_options(&self) -> ProjectorOptions {
        ProjectorOptions {
            spatial_nodes: self.projector_spatial_nodes,
            contour_nodes: self.projector_contour_nodes,
        }
    }
}

/// Worker count requested through `BIRKHOFF_THREADS`, if set and positive.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}
