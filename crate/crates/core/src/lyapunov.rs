//! Lyapunov exponents of discrete propagators.
//!
//! An orthonormal frame is pushed through the per-step tangents `F_i` and
//! re-orthonormalized by QR every few steps; the accumulated `ln |R_jj|`
//! divided by the averaging time gives the exponents.

use crate::error::{Error, Result};
use crate::linalg::qr_orthonormalize;
use crate::odes::{OdeSystem, State, Tangent};
use crate::steppers::Stepper;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovConfig {
    /// Time integrated before averaging starts, to settle onto the attractor.
    pub spinup_time: f64,
    /// Averaging window.
    pub run_time: f64,
    /// Steps between re-orthonormalizations.
    pub reorth_interval: usize,
}

impl Default for LyapunovConfig {
    fn default() -> Self {
        Self {
            spinup_time: 100.0,
            run_time: 1000.0,
            reorth_interval: 10,
        }
    }
}

impl LyapunovConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.spinup_time >= 0.0) || !(self.run_time > 0.0) || self.reorth_interval == 0 {
            return Err(Error::Config(format!(
                "invalid Lyapunov configuration {self:?}"
            )));
        }
        Ok(())
    }
}

/// Lyapunov spectrum (per unit time, sorted descending) of `stepper` with
/// step `h`, starting from `u0`.
pub fn lyapunov_spectrum<const N: usize, S: OdeSystem<N>, P: Stepper>(
    system: &S,
    stepper: &P,
    u0: State<N>,
    h: f64,
    config: &LyapunovConfig,
) -> Result<Vec<f64>> {
    config.validate()?;
    if !(h > 0.0) {
        return Err(Error::Config(format!(
            "step size must be positive, got {h}"
        )));
    }
    let spinup_steps = (config.spinup_time / h).round() as usize;
    let run_steps = ((config.run_time / h).round() as usize).max(1);

    let mut u = u0;
    for i in 0..spinup_steps {
        u = checked(stepper.step(system, &u, h)?, i)?;
    }

    let mut frame = Tangent::<N>::identity();
    let mut growth = [0.0f64; N];
    for i in 0..run_steps {
        let (next, f) = stepper.step_with_tangent(system, &u, h)?;
        u = checked(next, spinup_steps + i)?;
        frame = f * frame;
        if (i + 1) % config.reorth_interval == 0 || i + 1 == run_steps {
            let (q, r) = qr_orthonormalize(&frame);
            for (g, r) in growth.iter_mut().zip(r) {
                *g += r.ln();
            }
            frame = q;
        }
    }

    let time = run_steps as f64 * h;
    let mut exponents: Vec<f64> = growth.iter().map(|g| g / time).collect();
    exponents.sort_by(|a, b| b.total_cmp(a));
    Ok(exponents)
}

fn checked<const N: usize>(u: State<N>, index: usize) -> Result<State<N>> {
    let norm = u.norm();
    if norm.is_finite() && norm <= crate::mgrit::OVERFLOW_NORM {
        Ok(u)
    } else {
        Err(Error::Overflow { index, norm })
    }
}

/// Time for perturbations to grow tenfold: `ln(10) / λ₀`.
pub fn lyapunov_time(lambda0: f64) -> Result<f64> {
    if !(lambda0 > 0.0) {
        return Err(Error::NonChaotic { lambda0 });
    }
    Ok(std::f64::consts::LN_10 / lambda0)
}

/// Condition estimate `10^(T_f / T_λ)` of the initial value problem.
pub fn condition_estimate(t_final: f64, lambda0: f64) -> Result<f64> {
    Ok(10f64.powf(t_final / lyapunov_time(lambda0)?))
}

/// Longest horizon, in Lyapunov times, over which a residual tolerance `tol`
/// is reachable at machine precision `eps`: `log10(tol / eps)`.
pub fn precision_horizon(tol: f64, eps: f64) -> f64 {
    (tol / eps).log10()
}
