//! Adaptive Dormand–Prince 5(4) for small complex systems.

use num_complex::Complex64;

use crate::error::{BvpError, Result};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Dopri5 {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 200_000,
        }
    }
}

impl Dopri5 {
    /// Integrates `y' = f(t, y)` from `t0` through the monotone list `stops`
    /// (forward or backward) and returns the state at every stop.
    pub fn integrate<F>(&self, f: F, t0: f64, y0: &[Complex64], stops: &[f64]) -> Result<Vec<Vec<Complex64>>>
    where
        F: Fn(f64, &[Complex64], &mut [Complex64]),
    {
        let dim = y0.len();
        let mut out = Vec::with_capacity(stops.len());
        let Some(&last) = stops.last() else { return Ok(out) };
        let dir = if last >= t0 { 1.0 } else { -1.0 };

        let mut t = t0;
        let mut y = y0.to_vec();
        let mut k: Vec<Vec<Complex64>> = vec![vec![Complex64::new(0.0, 0.0); dim]; 7];
        f(t, &y, &mut k[0]);
        let scale0 = y.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
        let rate = k[0].iter().map(|z| z.norm()).fold(0.0, f64::max) / scale0;
        let mut h = (0.05 / rate.max(1e-3)).min((last - t0).abs().max(1e-12));
        let mut ytmp = vec![Complex64::new(0.0, 0.0); dim];
        let mut ynew = vec![Complex64::new(0.0, 0.0); dim];
        let mut steps = 0usize;

        for &stop in stops {
            while (stop - t) * dir > 0.0 {
                steps += 1;
                if steps > self.max_steps {
                    return Err(BvpError::Integration(format!("step budget exhausted at t = {t}")));
                }
                let remaining = (stop - t).abs();
                let hit = h >= remaining;
                let hs = if hit { remaining } else { h } * dir;
                for s in 1..7 {
                    for i in 0..dim {
                        let mut acc = y[i];
                        for (j, kj) in k.iter().enumerate().take(s) {
                            acc += kj[i] * (hs * A[s][j]);
                        }
                        ytmp[i] = acc;
                    }
                    f(t + C[s] * hs, &ytmp, &mut k[s]);
                }
                // stage 7 was evaluated at the fifth-order solution
                ynew.copy_from_slice(&ytmp);
                let mut err = 0.0;
                for i in 0..dim {
                    let mut e = Complex64::new(0.0, 0.0);
                    for (s, ks) in k.iter().enumerate() {
                        e += ks[i] * (hs * E[s]);
                    }
                    let sc = self.atol + self.rtol * y[i].norm().max(ynew[i].norm());
                    err += (e.norm() / sc).powi(2);
                }
                let err = (err / dim as f64).sqrt();
                if !err.is_finite() {
                    return Err(BvpError::Integration(format!("non-finite state at t = {t}")));
                }
                if err <= 1.0 {
                    t = if hit { stop } else { t + hs };
                    y.copy_from_slice(&ynew);
                    let last_stage = k[6].clone();
                    k[0] = last_stage;
                }
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                let proposed = hs.abs() * factor;
                h = if err <= 1.0 && hit { h.max(proposed) } else { proposed };
                if h < 1e-14 * (1.0 + t.abs()) {
                    return Err(BvpError::Integration(format!("step size underflow at t = {t}")));
                }
            }
            out.push(y.clone());
        }
        Ok(out)
    }
}
