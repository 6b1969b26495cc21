use serde::{Deserialize, Serialize};

use mgrit_core::{FineScheme, Lorenz, MgritConfig, State};

use crate::{CliError, Result, NOMINAL_LAMBDA0};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Solve,
    LyapunovSweep,
    Table1,
    Table2,
    Table3,
    Fig1,
    Fig3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fine {
    Fe,
    Be,
}

impl From<Fine> for FineScheme {
    fn from(f: Fine) -> Self {
        match f {
            Fine::Fe => FineScheme::ForwardEuler,
            Fine::Be => FineScheme::BackwardEuler,
        }
    }
}

/// Everything needed to reproduce one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub command: Command,
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
    pub u0: [f64; 3],
    /// Final time in Lyapunov times.
    pub tf: f64,
    pub nt: usize,
    pub levels: usize,
    pub cf: usize,
    pub theta: bool,
    pub delta: bool,
    pub fine_scheme: Fine,
    pub tol: f64,
    pub max_iters: usize,
    /// Step sizes for the Lyapunov sweep.
    pub h_values: Vec<f64>,
    pub spinup_time: f64,
    pub run_time: f64,
    pub reorth_interval: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        let lz = Lorenz::default();
        Self {
            command: Command::Solve,
            sigma: lz.sigma,
            rho: lz.rho,
            beta: lz.beta,
            u0: [1.0, 1.0, 1.0],
            tf: 4.0,
            nt: 8192,
            levels: 2,
            cf: 2,
            theta: false,
            delta: false,
            fine_scheme: Fine::Fe,
            tol: 1e-10,
            max_iters: 100,
            h_values: vec![2e-4, 5e-4, 1e-3, 2e-3, 4e-3],
            spinup_time: 100.0,
            run_time: 1000.0,
            reorth_interval: 10,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.tf > 0.0) || !self.tf.is_finite() {
            return Err(CliError::Parse(format!(
                "tf must be positive, got {}",
                self.tf
            )));
        }
        if self.nt < 2 {
            return Err(CliError::Parse(format!(
                "nt must be at least 2, got {}",
                self.nt
            )));
        }
        if self.u0.iter().any(|x| !x.is_finite()) {
            return Err(CliError::Parse("u0 must be finite".into()));
        }
        self.mgrit_config().validate()?;
        Ok(())
    }

    pub fn system(&self) -> Lorenz {
        Lorenz::new(self.sigma, self.rho, self.beta)
    }

    pub fn initial_state(&self) -> State<3> {
        State::<3>::from(self.u0)
    }

    /// Final time in the system's own time units.
    pub fn final_time(&self) -> f64 {
        self.tf * nominal_lyapunov_time()
    }

    pub fn mgrit_config(&self) -> MgritConfig {
        MgritConfig {
            num_levels: self.levels,
            coarsening_factor: self.cf,
            use_delta: self.delta,
            use_theta: self.theta,
            fine_scheme: self.fine_scheme.into(),
            tol: self.tol,
            max_iters: self.max_iters,
            ..MgritConfig::default()
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec is always serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| CliError::Parse(e.to_string()))
    }
}

pub fn nominal_lyapunov_time() -> f64 {
    std::f64::consts::LN_10 / NOMINAL_LAMBDA0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_spec_is_valid() {
        ExperimentSpec::default().validate().unwrap();
        assert!((nominal_lyapunov_time() - 2.5584).abs() < 1e-4);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let bad = ExperimentSpec {
            tf: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = ExperimentSpec {
            nt: 1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = ExperimentSpec {
            levels: 1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn json_round_trip(
            tf in 0.01..20.0f64,
            nt in 2usize..100_000,
            levels in 2usize..8,
            theta: bool,
            delta: bool,
            tol in 1e-14..1e-2f64,
            u in prop::array::uniform3(-30.0..30.0f64),
        ) {
            let spec = ExperimentSpec { tf, nt, levels, theta, delta, tol, u0: u, fine_scheme: Fine::Be, ..Default::default() };
            prop_assert_eq!(ExperimentSpec::from_json(&spec.to_json()).unwrap(), spec);
        }
    }
}
