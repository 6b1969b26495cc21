//! ODE right-hand sides `u' = g(u)` and their Jacobians.

use nalgebra::{SMatrix, SVector};

/// A point in phase space.
pub type State<const N: usize> = SVector<f64, N>;

/// An `N × N` Jacobian, either of a right-hand side or of a propagator.
pub type Tangent<const N: usize> = SMatrix<f64, N, N>;

/// An autonomous ODE system `u' = g(u)`.
///
/// Implementations must be pure: the same input gives bitwise the same output.
pub trait OdeSystem<const N: usize>: Sync {
    fn rhs(&self, u: &State<N>) -> State<N>;

    /// Jacobian `∂g/∂u` evaluated at `u`.
    fn jacobian(&self, u: &State<N>) -> Tangent<N>;

    fn dim(&self) -> usize {
        N
    }
}

/// The Lorenz system
///
/// ```text
/// x' = σ(y − x)
/// y' = x(ρ − z) − y
/// z' = xy − βz
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lorenz {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
}

impl Default for Lorenz {
    /// The classical chaotic regime σ = 10, ρ = 28, β = 8/3.
    fn default() -> Self {
        Self {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
        }
    }
}

impl Lorenz {
    pub fn new(sigma: f64, rho: f64, beta: f64) -> Self {
        Self { sigma, rho, beta }
    }

    /// The origin and the two nontrivial fixed points `C±`.
    ///
    /// `C±` only exist for `ρ ≥ 1`; below that the square root is NaN.
    pub fn equilibria(&self) -> [State<3>; 3] {
        let r = (self.beta * (self.rho - 1.0)).sqrt();
        [
            State::<3>::zeros(),
            State::<3>::new(r, r, self.rho - 1.0),
            State::<3>::new(-r, -r, self.rho - 1.0),
        ]
    }

    /// Trace of the Jacobian, which is constant: `−(σ + 1 + β)`.
    pub fn divergence(&self) -> f64 {
        -(self.sigma + 1.0 + self.beta)
    }
}

impl OdeSystem<3> for Lorenz {
    fn rhs(&self, u: &State<3>) -> State<3> {
        let (x, y, z) = (u[0], u[1], u[2]);
        State::<3>::new(
            self.sigma * (y - x),
            x * (self.rho - z) - y,
            x * y - self.beta * z,
        )
    }

    #[rustfmt::skip]
    fn jacobian(&self, u: &State<3>) -> Tangent<3> {
        let (x, y, z) = (u[0], u[1], u[2]);
        Tangent::<3>::new(
            -self.sigma,   self.sigma, 0.0,
            self.rho - z,  -1.0,       -x,
            y,             x,          -self.beta,
        )
    }
}

/// Scalar logistic growth `u' = u(1 − u)`.
///
/// Its slope varies along trajectories, so `g(u_m) ≠ g(u_0)` on generic
/// intervals; used to exercise the exact scalar θ.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Logistic;

impl OdeSystem<1> for Logistic {
    fn rhs(&self, u: &State<1>) -> State<1> {
        State::<1>::new(u[0] * (1.0 - u[0]))
    }

    fn jacobian(&self, u: &State<1>) -> Tangent<1> {
        Tangent::<1>::new(1.0 - 2.0 * u[0])
    }
}

/// Scalar linear decay/growth `u' = λu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearScalar {
    pub lambda: f64,
}

impl LinearScalar {
    pub fn new(lambda: f64) -> Self {
        Self { lambda }
    }
}

impl OdeSystem<1> for LinearScalar {
    fn rhs(&self, u: &State<1>) -> State<1> {
        u * self.lambda
    }

    fn jacobian(&self, _u: &State<1>) -> Tangent<1> {
        Tangent::<1>::new(self.lambda)
    }
}
