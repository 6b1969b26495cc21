//! FAS multigrid reduction in time.
//!
//! Level `l` of the hierarchy holds the block system
//!
//! ```text
//! v_0 = f_0
//! v_j = Φ_l(v_{j−1}) + Δ_j v_{j−1} + f_j        j = 1, …, n_l
//! ```
//!
//! where `Φ_l` is the level's one-step propagator with step `m^l h`. On the
//! finest level `Δ ≡ 0` and `f` only carries the initial condition. Coarser
//! levels receive their forcing (`f + τ`) and their `Δ` matrices from the
//! level above during a V-cycle:
//!
//! ```text
//! Δ_i = D_uΦ^m(v_{i−m}) − D_uΦ_c(v_{i−m})
//! τ_i = Φ^m(v_{i−m}) − Φ_c(v_{i−m}) − Δ_i v_{i−m}
//! ```
//!
//! `Φ^m` is `m` steps of the level's own (Δ-corrected) propagator, with the
//! level's forcing injected at the interior points of the coarse interval.
//! Restriction and interpolation are injection; relaxation is F-relaxation.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::odes::{OdeSystem, State, Tangent};
use crate::steppers::{theta_asymptotic, FineScheme, Scheme, Stepper, ThetaParams};

/// Any state whose norm exceeds this is treated as numerical blow-up.
pub const OVERFLOW_NORM: f64 = 1e100;

/// Uniform multilevel time grids with a constant coarsening factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeHierarchy {
    num_levels: usize,
    coarsening_factor: usize,
    fine_step: f64,
    num_steps: usize,
}

impl TimeHierarchy {
    pub fn new(
        t_final: f64,
        num_steps: usize,
        num_levels: usize,
        coarsening_factor: usize,
    ) -> Result<Self> {
        if num_levels == 0 {
            return Err(Error::Config("num_levels must be positive".into()));
        }
        if coarsening_factor < 2 {
            return Err(Error::Config(format!(
                "coarsening factor must be at least 2, got {coarsening_factor}"
            )));
        }
        if !(t_final > 0.0) || !t_final.is_finite() {
            return Err(Error::Config(format!(
                "final time must be positive, got {t_final}"
            )));
        }
        if num_steps == 0 {
            return Err(Error::Config(
                "number of time steps must be positive".into(),
            ));
        }
        let span = coarsening_factor
            .checked_pow((num_levels - 1) as u32)
            .ok_or_else(|| {
                Error::Config("coarsening factor overflows for this many levels".into())
            })?;
        if num_steps % span != 0 {
            return Err(Error::Config(format!(
                "n_t = {num_steps} is not divisible by {coarsening_factor}^{} = {span}",
                num_levels - 1
            )));
        }
        Ok(Self {
            num_levels,
            coarsening_factor,
            fine_step: t_final / num_steps as f64,
            num_steps,
        })
    }

    pub fn num_levels(&self) -> usize {
        self.num_levels
    }

    pub fn coarsening_factor(&self) -> usize {
        self.coarsening_factor
    }

    pub fn final_time(&self) -> f64 {
        self.fine_step * self.num_steps as f64
    }

    /// `m^l`, the number of fine steps spanned by one step on level `l`.
    pub fn stride(&self, level: usize) -> usize {
        self.coarsening_factor.pow(level as u32)
    }

    pub fn step_size(&self, level: usize) -> f64 {
        self.fine_step * self.stride(level) as f64
    }

    /// Number of intervals `n_l` on level `l`; the level has `n_l + 1` points.
    pub fn num_intervals(&self, level: usize) -> usize {
        self.num_steps / self.stride(level)
    }

    pub fn num_points(&self, level: usize) -> usize {
        self.num_intervals(level) + 1
    }

    pub fn is_c_point(&self, index: usize) -> bool {
        index % self.coarsening_factor == 0
    }

    /// Time of point `index` on level `level`.
    pub fn time(&self, level: usize, index: usize) -> f64 {
        (index * self.stride(level)) as f64 * self.fine_step
    }
}

/// How interval-parallel work is scheduled. Results are bitwise identical.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MgritConfig {
    pub num_levels: usize,
    pub coarsening_factor: usize,
    pub use_delta: bool,
    pub use_theta: bool,
    pub fine_scheme: FineScheme,
    pub tol: f64,
    pub max_iters: usize,
    /// Stop with [`SolveStatus::Diverged`] as soon as the residual is not finite.
    pub halt_on_nan: bool,
    /// Stop with [`SolveStatus::Stalled`] when progress stops; see [`Mgrit::run`].
    pub detect_stall: bool,
    /// Newton settings for every implicit step in the hierarchy.
    pub newton_tol: f64,
    pub newton_max_iters: usize,
    /// Replaces the propagator on every coarse level (e.g. [`Scheme::Zero`]).
    pub coarse_override: Option<Scheme>,
    pub execution: Execution,
}

impl Default for MgritConfig {
    fn default() -> Self {
        Self {
            num_levels: 2,
            coarsening_factor: 2,
            use_delta: false,
            use_theta: false,
            fine_scheme: FineScheme::ForwardEuler,
            tol: 1e-10,
            max_iters: 100,
            halt_on_nan: true,
            detect_stall: true,
            newton_tol: ThetaParams::default().newton_tol,
            newton_max_iters: ThetaParams::default().newton_max_iters,
            coarse_override: None,
            execution: Execution::Parallel,
        }
    }
}

impl MgritConfig {
    pub fn two_level() -> Self {
        Self::default()
    }

    pub fn with_levels(mut self, num_levels: usize) -> Self {
        self.num_levels = num_levels;
        self
    }

    pub fn with_delta(mut self, on: bool) -> Self {
        self.use_delta = on;
        self
    }

    pub fn with_theta(mut self, on: bool) -> Self {
        self.use_theta = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_levels < 2 {
            return Err(Error::Config(format!(
                "num_levels must be at least 2, got {}",
                self.num_levels
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.coarsening_factor < 2 {
            return Err(Error::Config(format!(
                "coarsening factor must be at least 2, got {}",
                self.coarsening_factor
            )));
        }
        self.theta_params(0.5).validate()
    }

    fn theta_params(&self, theta: f64) -> ThetaParams {
        ThetaParams {
            theta,
            newton_tol: self.newton_tol,
            newton_max_iters: self.newton_max_iters,
        }
    }

    /// The propagator used on `level` (level 0 is the fine grid).
    ///
    /// With θ enabled, level `l` uses the asymptotic θ for `m = cf^l`;
    /// otherwise it reuses the fine scheme with the coarsened step.
    pub fn level_scheme(&self, level: usize) -> Scheme {
        let fine = match self.fine_scheme {
            FineScheme::ForwardEuler => Scheme::ForwardEuler,
            FineScheme::BackwardEuler => Scheme::Theta(self.theta_params(0.0)),
        };
        if level == 0 {
            return fine;
        }
        if let Some(s) = self.coarse_override {
            return s;
        }
        if self.use_theta {
            let m = self.coarsening_factor.pow(level as u32);
            Scheme::Theta(self.theta_params(theta_asymptotic(m, self.fine_scheme)))
        } else {
            fine
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    Stalled,
    MaxIters,
    Diverged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// Residual 2-norm after the initial F-relaxation, then after each V-cycle.
    pub residual_history: Vec<f64>,
    pub iterations: usize,
    pub status: SolveStatus,
    /// Per iteration (starting with the initial guess), `‖v_i − u_i‖₂` at every
    /// fine C-point, when a reference solution was supplied.
    pub error_history_vs_reference: Option<Vec<Vec<f64>>>,
    /// The failure that ended a diverged run.
    pub failure: Option<Error>,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        *self
            .residual_history
            .last()
            .expect("residual history is never empty")
    }
}

/// Per-level arrays.
#[derive(Debug, Clone)]
pub struct LevelData<const N: usize> {
    pub step: f64,
    pub scheme: Scheme,
    pub v: Vec<State<N>>,
    /// Forcing. On coarse levels this is the injected `f + τ` of the finer level.
    pub f: Vec<State<N>>,
    /// Incoming Δ matrices indexed by target point; entry 0 is unused.
    pub delta: Option<Vec<Tangent<N>>>,
}

impl<const N: usize> LevelData<N> {
    /// `Φ_l(u) + Δ_j u`, the level's operator for the step ending at point `j`.
    fn propagate<S: OdeSystem<N>>(&self, system: &S, j: usize, u: &State<N>) -> Result<State<N>> {
        let mut w = self.scheme.step(system, u, self.step)?;
        if let Some(delta) = &self.delta {
            w += delta[j] * u;
        }
        Ok(w)
    }

    fn propagate_with_tangent<S: OdeSystem<N>>(
        &self,
        system: &S,
        j: usize,
        u: &State<N>,
    ) -> Result<(State<N>, Tangent<N>)> {
        let (mut w, mut t) = self.scheme.step_with_tangent(system, u, self.step)?;
        if let Some(delta) = &self.delta {
            w += delta[j] * u;
            t += delta[j];
        }
        Ok((w, t))
    }
}

fn check_finite<const N: usize>(u: State<N>, index: usize) -> Result<State<N>> {
    let norm = u.norm();
    if norm.is_finite() && norm <= OVERFLOW_NORM {
        Ok(u)
    } else {
        Err(Error::Overflow { index, norm })
    }
}

/// Plain sequential time-marching: `u_0 = u0`, `u_{i+1} = Φ(u_i)`.
pub fn sequential_solve<const N: usize, S: OdeSystem<N>>(
    system: &S,
    scheme: &Scheme,
    u0: State<N>,
    h: f64,
    num_steps: usize,
) -> Result<Vec<State<N>>> {
    let mut u = Vec::with_capacity(num_steps + 1);
    u.push(u0);
    for i in 1..=num_steps {
        let next = check_finite(scheme.step(system, &u[i - 1], h)?, i)?;
        u.push(next);
    }
    Ok(u)
}

/// An MGRIT solver bound to one system, configuration and time grid.
pub struct Mgrit<'a, const N: usize, S: OdeSystem<N>> {
    system: &'a S,
    config: MgritConfig,
    hierarchy: TimeHierarchy,
    levels: Vec<LevelData<N>>,
}

impl<'a, const N: usize, S: OdeSystem<N>> Mgrit<'a, N, S> {
    /// Builds the hierarchy and the initial guess: `u0` replicated at every
    /// time-point, followed by one F-relaxation.
    pub fn new(
        system: &'a S,
        config: MgritConfig,
        u0: State<N>,
        t_final: f64,
        num_steps: usize,
    ) -> Result<Self> {
        config.validate()?;
        let hierarchy = TimeHierarchy::new(
            t_final,
            num_steps,
            config.num_levels,
            config.coarsening_factor,
        )?;
        let levels = (0..config.num_levels)
            .map(|l| {
                let n = hierarchy.num_points(l);
                LevelData {
                    step: hierarchy.step_size(l),
                    scheme: config.level_scheme(l),
                    v: vec![u0; n],
                    f: vec![State::<N>::zeros(); n],
                    delta: None,
                }
            })
            .collect();
        let mut mgrit = Self {
            system,
            config,
            hierarchy,
            levels,
        };
        mgrit.levels[0].f[0] = u0;
        mgrit.f_relax(0)?;
        Ok(mgrit)
    }

    pub fn hierarchy(&self) -> &TimeHierarchy {
        &self.hierarchy
    }

    pub fn config(&self) -> &MgritConfig {
        &self.config
    }

    pub fn level(&self, l: usize) -> &LevelData<N> {
        &self.levels[l]
    }

    pub fn level_mut(&mut self, l: usize) -> &mut LevelData<N> {
        &mut self.levels[l]
    }

    pub fn solution(&self) -> &[State<N>] {
        &self.levels[0].v
    }

    pub fn into_solution(self) -> Vec<State<N>> {
        self.levels
            .into_iter()
            .next()
            .map(|l| l.v)
            .unwrap_or_default()
    }

    /// Overwrites the fine-grid iterate. `v[0]` is forced back to `f_0`.
    pub fn set_solution(&mut self, v: Vec<State<N>>) -> Result<()> {
        let level = &mut self.levels[0];
        if v.len() != level.v.len() {
            return Err(Error::Config(format!(
                "expected {} states, got {}",
                level.v.len(),
                v.len()
            )));
        }
        level.v = v;
        level.v[0] = level.f[0];
        Ok(())
    }

    /// `Φ^m` from C-point `i` of level `l`: `m` steps of the level's
    /// operator with its forcing injected at the interior points, and
    /// optionally the tangent product `F_{i+m−1} ⋯ F_i`.
    pub fn ideal_coarse_step(
        &self,
        l: usize,
        i: usize,
        v_i: &State<N>,
        with_tangent: bool,
    ) -> Result<(State<N>, Option<Tangent<N>>)> {
        let level = &self.levels[l];
        let m = self.config.coarsening_factor;
        let mut w = *v_i;
        let mut tangent = with_tangent.then(Tangent::<N>::identity);
        for j in i + 1..=i + m {
            w = match tangent.as_mut() {
                Some(t) => {
                    let (next, f) = level.propagate_with_tangent(self.system, j, &w)?;
                    *t = f * *t;
                    next
                }
                None => level.propagate(self.system, j, &w)?,
            };
            if j < i + m {
                w += level.f[j];
            }
            w = check_finite(w, j)?;
        }
        Ok((w, tangent))
    }

    fn tau_delta_at(&self, l: usize, k: usize) -> Result<(State<N>, Option<Tangent<N>>)> {
        let m = self.config.coarsening_factor;
        let coarse = &self.levels[l + 1].scheme;
        let coarse_step = self.levels[l + 1].step;
        let start = (k - 1) * m;
        let v = &self.levels[l].v[start];
        let (ideal, ideal_tangent) = self.ideal_coarse_step(l, start, v, self.config.use_delta)?;
        match ideal_tangent {
            Some(w) => {
                let (c, ct) = coarse.step_with_tangent(self.system, v, coarse_step)?;
                let delta = w - ct;
                Ok((ideal - c - delta * v, Some(delta)))
            }
            None => {
                let c = coarse.step(self.system, v, coarse_step)?;
                Ok((ideal - c, None))
            }
        }
    }

    /// τ and Δ at every C-point of level `l`, indexed by coarse point
    /// (entry 0 is zero). Δ is `None` when the correction is disabled.
    pub fn assemble_tau_delta(&self, l: usize) -> Result<(Vec<State<N>>, Option<Vec<Tangent<N>>>)> {
        assert!(l + 1 < self.levels.len(), "level {l} has no coarser level");
        let n_coarse = self.hierarchy.num_intervals(l + 1);
        let pairs: Vec<(State<N>, Option<Tangent<N>>)> = match self.config.execution {
            Execution::Parallel => (1..=n_coarse)
                .into_par_iter()
                .map(|k| self.tau_delta_at(l, k))
                .collect::<Result<_>>()?,
            Execution::Sequential => (1..=n_coarse)
                .map(|k| self.tau_delta_at(l, k))
                .collect::<Result<_>>()?,
        };
        let mut tau = Vec::with_capacity(n_coarse + 1);
        tau.push(State::<N>::zeros());
        let mut delta = self.config.use_delta.then(|| {
            let mut d = Vec::with_capacity(n_coarse + 1);
            d.push(Tangent::<N>::zeros());
            d
        });
        for (t, d) in pairs {
            tau.push(t);
            if let (Some(all), Some(d)) = (delta.as_mut(), d) {
                all.push(d);
            }
        }
        Ok((tau, delta))
    }

    /// Propagates every C-point of level `l` across its coarse interval,
    /// overwriting the F-points. Intervals are independent.
    pub fn f_relax(&mut self, l: usize) -> Result<()> {
        let m = self.config.coarsening_factor;
        let system = self.system;
        let execution = self.config.execution;
        let level = &mut self.levels[l];
        let mut v = std::mem::take(&mut level.v);
        let level = &*level;
        let relax = |(c, chunk): (usize, &mut [State<N>])| -> Result<()> {
            let start = c * m;
            for p in 1..chunk.len() {
                let j = start + p;
                let next = level.propagate(system, j, &chunk[p - 1])? + level.f[j];
                chunk[p] = check_finite(next, j)?;
            }
            Ok(())
        };
        let result = match execution {
            Execution::Parallel => v.par_chunks_mut(m).enumerate().try_for_each(relax),
            Execution::Sequential => v.chunks_mut(m).enumerate().try_for_each(relax),
        };
        self.levels[l].v = v;
        result
    }

    /// Sequential forward substitution on level `l`.
    pub fn coarse_grid_solve(&mut self, l: usize) -> Result<()> {
        let system = self.system;
        let level = &mut self.levels[l];
        level.v[0] = level.f[0];
        for j in 1..level.v.len() {
            let next = level.propagate(system, j, &level.v[j - 1])? + level.f[j];
            level.v[j] = check_finite(next, j)?;
        }
        Ok(())
    }

    /// One V-cycle starting on level `l`.
    pub fn v_cycle(&mut self, l: usize) -> Result<()> {
        let m = self.config.coarsening_factor;
        let (tau, delta) = self.assemble_tau_delta(l)?;
        {
            let (fine, coarse) = self.levels.split_at_mut(l + 1);
            let (fine, coarse) = (&fine[l], &mut coarse[0]);
            for (k, t) in tau.iter().enumerate() {
                coarse.v[k] = fine.v[k * m];
                coarse.f[k] = fine.f[k * m] + t;
            }
            coarse.delta = delta;
        }
        if l + 2 == self.levels.len() {
            self.coarse_grid_solve(l + 1)?;
        } else {
            self.v_cycle(l + 1)?;
        }
        {
            let (fine, coarse) = self.levels.split_at_mut(l + 1);
            let (fine, coarse) = (&mut fine[l], &coarse[0]);
            for (k, v) in coarse.v.iter().enumerate() {
                fine.v[k * m] = *v;
            }
        }
        self.f_relax(l)
    }

    /// Residual vector `r_j = f_j + Φ_l(v_{j−1}) + Δ_j v_{j−1} − v_j` on level `l`.
    pub fn residual(&self, l: usize) -> Result<Vec<State<N>>> {
        let level = &self.levels[l];
        let mut r = Vec::with_capacity(level.v.len());
        r.push(level.f[0] - level.v[0]);
        for j in 1..level.v.len() {
            r.push(level.f[j] + level.propagate(self.system, j, &level.v[j - 1])? - level.v[j]);
        }
        Ok(r)
    }

    /// Space-time Euclidean norm of the fine-grid residual. Non-finite when a
    /// step fails.
    pub fn residual_norm(&self) -> f64 {
        match self.residual(0) {
            Ok(r) => r.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt(),
            Err(_) => f64::NAN,
        }
    }

    fn c_point_errors(&self, reference: &[State<N>]) -> Vec<f64> {
        let m = self.config.coarsening_factor;
        self.solution()
            .iter()
            .zip(reference)
            .step_by(m)
            .map(|(v, u)| (v - u).norm())
            .collect()
    }

    /// Iterates V-cycles until the residual drops to `tol`, stalls, diverges
    /// or `max_iters` is reached.
    ///
    /// Stalled means five consecutive V-cycles each reduced the residual by
    /// less than 1%.
    pub fn run(&mut self, reference: Option<&[State<N>]>) -> SolveReport {
        const STALL_WINDOW: usize = 5;
        const STALL_FACTOR: f64 = 0.99;

        let mut errors = reference.map(|r| vec![self.c_point_errors(r)]);
        let mut history = vec![self.residual_norm()];
        let mut iterations = 0;
        let mut failure = None;
        let mut slow = 0;

        let status = loop {
            let r = *history.last().unwrap();
            if !r.is_finite() && self.config.halt_on_nan {
                break SolveStatus::Diverged;
            }
            if r <= self.config.tol {
                break SolveStatus::Converged;
            }
            if history.len() > 1 {
                if r > STALL_FACTOR * history[history.len() - 2] {
                    slow += 1;
                } else {
                    slow = 0;
                }
            }
            if self.config.detect_stall && slow >= STALL_WINDOW {
                break SolveStatus::Stalled;
            }
            if iterations >= self.config.max_iters {
                break SolveStatus::MaxIters;
            }
            iterations += 1;
            if let Err(e) = self.v_cycle(0) {
                failure = Some(e);
                history.push(f64::NAN);
                break SolveStatus::Diverged;
            }
            history.push(self.residual_norm());
            if let (Some(errors), Some(reference)) = (errors.as_mut(), reference) {
                errors.push(self.c_point_errors(reference));
            }
        };

        SolveReport {
            residual_history: history,
            iterations,
            status,
            error_history_vs_reference: errors,
            failure,
        }
    }
}

/// Solves `u' = g(u)` on `[0, t_final]` with `num_steps` fine steps.
pub fn solve<const N: usize, S: OdeSystem<N>>(
    system: &S,
    config: &MgritConfig,
    u0: State<N>,
    t_final: f64,
    num_steps: usize,
) -> Result<(Vec<State<N>>, SolveReport)> {
    let mut mgrit = match Mgrit::new(system, config.clone(), u0, t_final, num_steps) {
        Ok(m) => m,
        Err(e) if e.is_instability() => {
            return Ok((
                Vec::new(),
                SolveReport {
                    residual_history: vec![f64::NAN],
                    iterations: 0,
                    status: SolveStatus::Diverged,
                    error_history_vs_reference: None,
                    failure: Some(e),
                },
            ))
        }
        Err(e) => return Err(e),
    };
    let report = mgrit.run(None);
    Ok((mgrit.into_solution(), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::odes::{LinearScalar, Lorenz};

    fn s1(x: f64) -> State<1> {
        State::<1>::new(x)
    }

    #[test]
    fn hierarchy_geometry() {
        let h = TimeHierarchy::new(1.6, 16, 3, 2).unwrap();
        assert_eq!(h.num_points(0), 17);
        assert_eq!(h.num_points(1), 9);
        assert_eq!(h.num_points(2), 5);
        assert!((h.step_size(2) - 0.4).abs() < 1e-15);
        assert!(h.is_c_point(4) && !h.is_c_point(3));
        assert!((h.final_time() - 1.6).abs() < 1e-15);
        assert!(TimeHierarchy::new(1.0, 12, 4, 2).is_err());
        assert!(TimeHierarchy::new(1.0, 12, 2, 1).is_err());
    }

    #[test]
    fn level_schemes() {
        let cfg = MgritConfig::default().with_levels(4).with_theta(true);
        assert_eq!(cfg.level_scheme(0), Scheme::ForwardEuler);
        assert_eq!(cfg.level_scheme(1).theta_value(), Some(0.75));
        assert_eq!(cfg.level_scheme(2).theta_value(), Some(5.0 / 8.0));
        let plain = MgritConfig::default();
        assert_eq!(plain.level_scheme(3), Scheme::ForwardEuler);
    }

    #[test]
    fn config_validation() {
        assert!(MgritConfig::default().with_levels(1).validate().is_err());
        assert!(MgritConfig {
            tol: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        let lz = Lorenz::default();
        let err = solve(
            &lz,
            &MgritConfig::default().with_levels(3),
            State::<3>::new(1.0, 1.0, 1.0),
            1.0,
            6,
        );
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn ideal_coarse_step_scalar_decay() {
        let sys = LinearScalar::new(-1.0);
        let mgrit = Mgrit::new(&sys, MgritConfig::default(), s1(1.0), 0.4, 4).unwrap();
        let (w, t) = mgrit.ideal_coarse_step(0, 0, &s1(1.0), true).unwrap();
        assert!((w[0] - 0.81).abs() < 1e-15);
        assert!((t.unwrap()[0] - 0.81).abs() < 1e-15);
    }

    #[test]
    fn tau_delta_scalar_decay() {
        let sys = LinearScalar::new(-1.0);
        let mgrit = Mgrit::new(
            &sys,
            MgritConfig::default().with_delta(true),
            s1(1.0),
            0.4,
            4,
        )
        .unwrap();
        let (tau, delta) = mgrit.assemble_tau_delta(0).unwrap();
        let delta = delta.unwrap();
        assert!((delta[1][0] - 0.01).abs() < 1e-15);
        assert!(tau[1][0].abs() < 1e-15);
    }

    #[test]
    fn exact_coarse_operator_gives_zero_corrections() {
        // u' = 0: both Φ^m and Φ_c are the identity.
        let sys = LinearScalar::new(0.0);
        let mgrit = Mgrit::new(
            &sys,
            MgritConfig::default().with_delta(true),
            s1(1.0),
            1.0,
            8,
        )
        .unwrap();
        let (tau, delta) = mgrit.assemble_tau_delta(0).unwrap();
        assert!(tau.iter().all(|t| t[0] == 0.0));
        assert!(delta.unwrap().iter().all(|d| d[0] == 0.0));
    }

    #[test]
    fn delta_disabled_gives_no_matrices() {
        let lz = Lorenz::default();
        let mgrit = Mgrit::new(
            &lz,
            MgritConfig::default(),
            State::<3>::new(1.0, 1.0, 1.0),
            1.0,
            64,
        )
        .unwrap();
        let (_, delta) = mgrit.assemble_tau_delta(0).unwrap();
        assert!(delta.is_none());
    }

    #[test]
    fn coarse_solve_two_points() {
        let sys = LinearScalar::new(-1.0);
        let mut mgrit = Mgrit::new(
            &sys,
            MgritConfig::default().with_delta(true),
            s1(1.0),
            0.2,
            2,
        )
        .unwrap();
        let coarse = mgrit.level_mut(1);
        coarse.f = vec![s1(1.0), s1(0.05)];
        coarse.delta = Some(vec![Tangent::<1>::zeros(), Tangent::<1>::new(0.01)]);
        mgrit.coarse_grid_solve(1).unwrap();
        // Φ_c(1) = 1 - 0.2, plus Δ·1 = 0.01, plus τ = 0.05
        assert!((mgrit.level(1).v[1][0] - 0.86).abs() < 1e-15);
    }

    #[test]
    fn initial_residual_includes_initial_condition() {
        let lz = Lorenz::default();
        let u0 = State::<3>::new(1.0, 1.0, 1.0);
        let mut mgrit = Mgrit::new(&lz, MgritConfig::default(), u0, 1.0, 16).unwrap();
        mgrit.level_mut(0).v = vec![State::<3>::zeros(); 17];
        assert!(mgrit.residual_norm() >= u0.norm());
    }

    #[test]
    fn overflow_is_reported_as_divergence() {
        let sys = LinearScalar::new(1e3);
        let (_, report) = solve(&sys, &MgritConfig::default(), s1(1.0), 100.0, 64).unwrap();
        assert_eq!(report.status, SolveStatus::Diverged);
        assert!(matches!(report.failure, Some(Error::Overflow { .. })));
    }
}
