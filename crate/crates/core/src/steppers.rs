//! One-step propagators `Φ(u) ≈ u(t + h)` and their exact discrete tangents.
//!
//! The θ method
//!
//! ```text
//! w = u + h [θ g(u) + (1 − θ) g(w)]
//! ```
//!
//! interpolates between forward Euler (θ = 1), the trapezoid rule (θ = ½) and
//! backward Euler (θ = 0). The implicit equation is solved by Newton's method
//! with the analytic Jacobian, starting from the forward-Euler predictor.

use crate::error::{Error, Result};
use crate::linalg::{condition_1, Lu};
use crate::odes::{OdeSystem, State, Tangent};

/// Condition estimates above this make an implicit step's tangent unusable.
pub const MAX_CONDITION: f64 = 1e14;

/// A single-step time propagator with tangent evaluation.
pub trait Stepper: Sync {
    fn step<const N: usize, S: OdeSystem<N>>(
        &self,
        system: &S,
        u: &State<N>,
        h: f64,
    ) -> Result<State<N>>;

    /// The step value together with its Jacobian `D_uΦ(u)`.
    fn step_with_tangent<const N: usize, S: OdeSystem<N>>(
        &self,
        system: &S,
        u: &State<N>,
        h: f64,
    ) -> Result<(State<N>, Tangent<N>)>;

    fn step_tangent<const N: usize, S: OdeSystem<N>>(
        &self,
        system: &S,
        u: &State<N>,
        h: f64,
    ) -> Result<Tangent<N>> {
        self.step_with_tangent(system, u, h).map(|(_, t)| t)
    }
}

/// Parameters of the θ method and of its inner Newton solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaParams {
    pub theta: f64,
    pub newton_tol: f64,
    pub newton_max_iters: usize,
}

impl Default for ThetaParams {
    fn default() -> Self {
        Self {
            theta: 0.5,
            newton_tol: 1e-12,
            newton_max_iters: 25,
        }
    }
}

impl ThetaParams {
    pub fn new(theta: f64) -> Self {
        Self {
            theta,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::Config(format!(
                "theta must lie in [0, 1], got {}",
                self.theta
            )));
        }
        if !(self.newton_tol > 0.0) {
            return Err(Error::Config(format!(
                "newton_tol must be positive, got {}",
                self.newton_tol
            )));
        }
        if self.newton_max_iters == 0 {
            return Err(Error::Config("newton_max_iters must be positive".into()));
        }
        Ok(())
    }
}

/// The scheme used on the finest grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FineScheme {
    ForwardEuler,
    BackwardEuler,
}

/// Concrete propagators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    ForwardEuler,
    Theta(ThetaParams),
    /// `Φ ≡ 0`. Only meaningful as a coarse propagator, where Δ-corrected
    /// two-grid MGRIT reduces to Newton's method.
    Zero,
}

impl Scheme {
    pub fn backward_euler() -> Self {
        Scheme::Theta(ThetaParams::new(0.0))
    }

    pub fn theta(theta: f64) -> Self {
        Scheme::Theta(ThetaParams::new(theta))
    }

    /// The θ that characterizes this scheme, if it is a θ method.
    /// Forward Euler reports 1.
    pub fn theta_value(&self) -> Option<f64> {
        match self {
            Scheme::ForwardEuler => Some(1.0),
            Scheme::Theta(p) => Some(p.theta),
            Scheme::Zero => None,
        }
    }
}

impl From<FineScheme> for Scheme {
    fn from(s: FineScheme) -> Self {
        match s {
            FineScheme::ForwardEuler => Scheme::ForwardEuler,
            FineScheme::BackwardEuler => Scheme::backward_euler(),
        }
    }
}

impl Stepper for Scheme {
    fn step<const N: usize, S: OdeSystem<N>>(
        &self,
        system: &S,
        u: &State<N>,
        h: f64,
    ) -> Result<State<N>> {
        match self {
            Scheme::ForwardEuler => Ok(forward_euler_step(system, u, h)),
            Scheme::Theta(p) => theta_step(system, u, h, p),
            Scheme::Zero => Ok(State::<N>::zeros()),
        }
    }

    fn step_with_tangent<const N: usize, S: OdeSystem<N>>(
        &self,
        system: &S,
        u: &State<N>,
        h: f64,
    ) -> Result<(State<N>, Tangent<N>)> {
        match self {
            Scheme::ForwardEuler => Ok((
                forward_euler_step(system, u, h),
                forward_euler_tangent(system, u, h),
            )),
            Scheme::Theta(p) => theta_step_with_tangent(system, u, h, p),
            Scheme::Zero => Ok((State::<N>::zeros(), Tangent::<N>::zeros())),
        }
    }
}

pub fn forward_euler_step<const N: usize, S: OdeSystem<N>>(
    system: &S,
    u: &State<N>,
    h: f64,
) -> State<N> {
    u + system.rhs(u) * h
}

/// `I + h J(u)`.
pub fn forward_euler_tangent<const N: usize, S: OdeSystem<N>>(
    system: &S,
    u: &State<N>,
    h: f64,
) -> Tangent<N> {
    Tangent::<N>::identity() + system.jacobian(u) * h
}

/// One θ-method step, solved by Newton's method on
/// `R(w) = w − u − h[θ g(u) + (1 − θ) g(w)]` until `‖R(w)‖₂ ≤ newton_tol`.
pub fn theta_step<const N: usize, S: OdeSystem<N>>(
    system: &S,
    u: &State<N>,
    h: f64,
    params: &ThetaParams,
) -> Result<State<N>> {
    let theta = params.theta;
    let implicit = h * (1.0 - theta);
    let gu = system.rhs(u);
    let explicit = gu * theta;

    // forward-Euler predictor
    let mut w = u + gu * h;
    let mut residual = f64::INFINITY;
    for _ in 0..=params.newton_max_iters {
        let r = w - u - (explicit + system.rhs(&w) * (1.0 - theta)) * h;
        residual = r.norm();
        if residual <= params.newton_tol {
            return Ok(w);
        }
        if !residual.is_finite() {
            break;
        }
        let newton = Tangent::<N>::identity() - system.jacobian(&w) * implicit;
        let lu = Lu::new(&newton).ok_or(Error::SingularMatrix {
            condition: f64::INFINITY,
        })?;
        w -= lu.solve(&r);
    }
    Err(Error::NoConvergence {
        iterations: params.newton_max_iters,
        residual,
    })
}

/// Tangent of the θ step at `u`, given the converged step value `w`:
/// `(I − h(1−θ)J(w))⁻¹ (I + hθJ(u))`.
pub fn theta_tangent_at<const N: usize, S: OdeSystem<N>>(
    system: &S,
    u: &State<N>,
    w: &State<N>,
    h: f64,
    theta: f64,
) -> Result<Tangent<N>> {
    let explicit = Tangent::<N>::identity() + system.jacobian(u) * (h * theta);
    if theta == 1.0 {
        return Ok(explicit);
    }
    let implicit = Tangent::<N>::identity() - system.jacobian(w) * (h * (1.0 - theta));
    let lu = Lu::new(&implicit).ok_or(Error::SingularMatrix {
        condition: f64::INFINITY,
    })?;
    let condition = condition_1(&implicit, &lu);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::SingularMatrix { condition });
    }
    Ok(lu.solve(&explicit))
}

pub fn theta_step_tangent<const N: usize, S: OdeSystem<N>>(
    system: &S,
    u: &State<N>,
    h: f64,
    params: &ThetaParams,
) -> Result<Tangent<N>> {
    theta_step_with_tangent(system, u, h, params).map(|(_, t)| t)
}

pub fn theta_step_with_tangent<const N: usize, S: OdeSystem<N>>(
    system: &S,
    u: &State<N>,
    h: f64,
    params: &ThetaParams,
) -> Result<(State<N>, Tangent<N>)> {
    let w = theta_step(system, u, h, params)?;
    let t = theta_tangent_at(system, u, &w, h, params.theta)?;
    Ok((w, t))
}

/// Asymptotic θ for a coarse step spanning `m` fine steps:
/// `(m+1)/(2m)` over a forward-Euler fine grid, `(m−1)/(2m)` over backward Euler.
pub fn theta_asymptotic(m: usize, fine_scheme: FineScheme) -> f64 {
    assert!(m >= 1, "coarsening ratio must be positive");
    theta_asymptotic_ratio(m as f64, fine_scheme)
}

/// [`theta_asymptotic`] for a real step-size ratio `m ≥ 1`.
pub fn theta_asymptotic_ratio(m: f64, fine_scheme: FineScheme) -> f64 {
    match fine_scheme {
        FineScheme::ForwardEuler => (m + 1.0) / (2.0 * m),
        FineScheme::BackwardEuler => (m - 1.0) / (2.0 * m),
    }
}

/// The θ for which one θ step of size `m h` reproduces `m` scalar forward-Euler
/// steps exactly, given the slopes `f(u_0), …, f(u_m)` along the fine trajectory.
pub fn theta_exact_scalar(f_values: &[f64]) -> Result<f64> {
    if f_values.len() < 2 {
        return Err(Error::Config("need at least two slope values".into()));
    }
    let m = f_values.len() - 1;
    let (f0, fm) = (f_values[0], f_values[m]);
    let scale = f_values.iter().fold(0.0f64, |acc, f| acc.max(f.abs()));
    let difference = fm - f0;
    if difference.abs() <= 1e-14 * scale || difference == 0.0 {
        return Err(Error::DegenerateInterval { difference });
    }
    let mean = f_values[..m].iter().sum::<f64>() / m as f64;
    Ok((fm - mean) / difference)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::odes::{LinearScalar, Logistic, Lorenz};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn s1(x: f64) -> State<1> {
        State::<1>::new(x)
    }

    fn fd_tangent<const N: usize, S: OdeSystem<N>>(
        scheme: &Scheme,
        sys: &S,
        u: &State<N>,
        h: f64,
        eps: f64,
    ) -> Tangent<N> {
        let mut t = Tangent::<N>::zeros();
        for j in 0..N {
            let mut up = *u;
            let mut um = *u;
            up[j] += eps;
            um[j] -= eps;
            let col = (scheme.step(sys, &up, h).unwrap() - scheme.step(sys, &um, h).unwrap())
                / (2.0 * eps);
            t.set_column(j, &col);
        }
        t
    }

    fn max_rel_err<const N: usize>(a: &Tangent<N>, b: &Tangent<N>) -> f64 {
        (a - b).amax() / (1.0 + b.amax())
    }

    #[test]
    fn forward_euler_examples() {
        let lz = Lorenz::default();
        let u = State::<3>::new(1.0, 1.0, 1.0);
        assert_eq!(forward_euler_step(&lz, &u, 0.0), u);
        let expected = u + State::<3>::new(0.0, 26.0, -5.0 / 3.0) * 0.01;
        assert!((forward_euler_step(&lz, &u, 0.01) - expected).amax() < 1e-15);
        assert!((forward_euler_step(&Logistic, &s1(0.5), 0.1)[0] - 0.525).abs() < 1e-15);
    }

    #[test]
    fn theta_one_is_forward_euler_bitwise() {
        let lz = Lorenz::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let u = State::<3>::new(
                rng.gen_range(-20.0..20.0),
                rng.gen_range(-20.0..20.0),
                rng.gen_range(0.0..45.0),
            );
            let h = rng.gen_range(0.0..0.02);
            let a = theta_step(&lz, &u, h, &ThetaParams::new(1.0)).unwrap();
            let b = forward_euler_step(&lz, &u, h);
            for k in 0..3 {
                assert_eq!(a[k].to_bits(), b[k].to_bits());
            }
        }
    }

    #[test]
    fn theta_zero_and_half_closed_forms() {
        let lin = LinearScalar::new(-1.0);
        let be = theta_step(&lin, &s1(1.0), 0.5, &ThetaParams::new(0.0)).unwrap();
        assert!((be[0] - 2.0 / 3.0).abs() <= 1e-12);
        let tr = theta_step(&lin, &s1(1.0), 0.5, &ThetaParams::new(0.5)).unwrap();
        assert!((tr[0] - 0.6).abs() <= 1e-12);
    }

    #[test]
    fn zero_step_is_identity() {
        let lz = Lorenz::default();
        let u = State::<3>::new(1.0, 2.0, 3.0);
        for scheme in [
            Scheme::ForwardEuler,
            Scheme::theta(0.75),
            Scheme::backward_euler(),
        ] {
            let (w, t) = scheme.step_with_tangent(&lz, &u, 0.0).unwrap();
            assert_eq!(w, u);
            assert_eq!(t, Tangent::<3>::identity());
        }
    }

    #[test]
    fn theta_one_tangent_is_forward_euler_tangent() {
        let lz = Lorenz::default();
        let u = State::<3>::new(1.0, 2.0, 3.0);
        let t = theta_step_tangent(&lz, &u, 0.01, &ThetaParams::new(1.0)).unwrap();
        assert_eq!(t, forward_euler_tangent(&lz, &u, 0.01));
    }

    #[test]
    fn theta_tangent_matches_finite_differences_at_123() {
        let lz = Lorenz::default();
        let u = State::<3>::new(1.0, 2.0, 3.0);
        let scheme = Scheme::theta(0.75);
        let t = scheme.step_tangent(&lz, &u, 0.02).unwrap();
        let fd = fd_tangent(&scheme, &lz, &u, 0.02, 1e-6);
        assert!(max_rel_err(&t, &fd) <= 1e-6, "{}", max_rel_err(&t, &fd));
    }

    #[test]
    fn tangents_match_finite_differences_on_random_states() {
        let lz = Lorenz::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let schemes = [
            Scheme::ForwardEuler,
            Scheme::backward_euler(),
            Scheme::theta(0.75),
            Scheme::theta(0.5),
        ];
        for _ in 0..100 {
            let u = State::<3>::new(
                rng.gen_range(-20.0..20.0),
                rng.gen_range(-25.0..25.0),
                rng.gen_range(0.0..45.0),
            );
            for h in [1e-3, 1e-2] {
                for s in &schemes {
                    let t = s.step_tangent(&lz, &u, h).unwrap();
                    let fd = fd_tangent(s, &lz, &u, h, 1e-6);
                    assert!(
                        max_rel_err(&t, &fd) <= 1e-6,
                        "{s:?} h={h} err={}",
                        max_rel_err(&t, &fd)
                    );
                }
            }
        }
    }

    #[test]
    fn newton_failure_reports_no_convergence() {
        // u' = u(1-u) with a huge backward step from far away has no nearby root.
        let params = ThetaParams {
            theta: 0.0,
            newton_tol: 1e-12,
            newton_max_iters: 2,
        };
        let err = theta_step(&Logistic, &s1(50.0), 10.0, &params).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { .. }));
    }

    #[test]
    fn singular_implicit_matrix_is_rejected() {
        // 1 − h(1−θ)λ = 0 for λ = 1, h = 1, θ = 0.
        let lin = LinearScalar::new(1.0);
        let err = theta_tangent_at(&lin, &s1(1.0), &s1(1.0), 1.0, 0.0).unwrap_err();
        assert!(matches!(err, Error::SingularMatrix { .. }));
    }

    #[test]
    fn theta_params_validation() {
        assert!(ThetaParams::new(1.5).validate().is_err());
        assert!(ThetaParams {
            newton_tol: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(ThetaParams::new(0.25).validate().is_ok());
    }

    #[test]
    fn asymptotic_theta_values() {
        assert_eq!(theta_asymptotic(2, FineScheme::ForwardEuler), 0.75);
        assert_eq!(theta_asymptotic(2, FineScheme::BackwardEuler), 0.25);
        assert_eq!(theta_asymptotic(1, FineScheme::ForwardEuler), 1.0);
        assert_eq!(theta_asymptotic(1, FineScheme::BackwardEuler), 0.0);
        let m = 1 << 20;
        assert!((theta_asymptotic(m, FineScheme::ForwardEuler) - 0.5).abs() <= 1e-5);
        assert!((theta_asymptotic(m, FineScheme::BackwardEuler) - 0.5).abs() <= 1e-5);
    }

    #[test]
    fn exact_scalar_theta_examples() {
        assert!(matches!(
            theta_exact_scalar(&[1.0; 5]),
            Err(Error::DegenerateInterval { .. })
        ));
        assert_eq!(theta_exact_scalar(&[0.0, 1.0, 2.0]).unwrap(), 0.75);
    }

    fn forward_euler_slopes(u0: f64, h: f64, m: usize) -> (Vec<f64>, f64) {
        let mut u = s1(u0);
        let mut slopes = vec![Logistic.rhs(&u)[0]];
        for _ in 0..m {
            u = forward_euler_step(&Logistic, &u, h);
            slopes.push(Logistic.rhs(&u)[0]);
        }
        (slopes, u[0])
    }

    #[test]
    fn exact_scalar_theta_reproduces_fine_steps() {
        let (slopes, fine) = forward_euler_slopes(0.2, 0.05, 4);
        let theta = theta_exact_scalar(&slopes).unwrap();
        let coarse = theta_step(&Logistic, &s1(0.2), 4.0 * 0.05, &ThetaParams::new(theta)).unwrap();
        assert!((coarse[0] - fine).abs() <= 1e-12);
    }

    #[test]
    fn order_of_accuracy_on_linear_decay() {
        let lin = LinearScalar::new(-1.0);
        let t_end = 1.0;
        let exact = (-t_end as f64).exp();
        let error = |theta: f64, n: usize| {
            let h = t_end / n as f64;
            let mut u = s1(1.0);
            for _ in 0..n {
                u = theta_step(&lin, &u, h, &ThetaParams::new(theta)).unwrap();
            }
            (u[0] - exact).abs()
        };
        for (theta, lo, hi) in [(0.5, 1.9, 2.1), (0.0, 0.9, 1.1), (1.0, 0.9, 1.1)] {
            for n in [64, 128, 256] {
                let order = (error(theta, n) / error(theta, 2 * n)).log2();
                assert!(
                    order >= lo && order <= hi,
                    "theta={theta} n={n} order={order}"
                );
            }
        }
    }
}
