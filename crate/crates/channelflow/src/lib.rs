//! Steady 2D incompressible Navier-Stokes flows in channels with Navier slip
//! boundary conditions: flux-carrier decomposition, mixed finite elements on
//! truncated domains, and a verification harness for the quantitative
//! estimates (Dirichlet-norm growth, far-field convergence, decay rates,
//! functional-inequality constants).

pub mod assemble;
pub mod band;
pub mod basis;
pub mod carrier;
pub mod dofmap;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod inequality;
pub mod mesh;
pub mod mollifier;
pub mod quad;
pub mod repar;
pub mod scalar;
pub mod shear;
pub mod solver;
pub mod state;
pub mod system;
pub mod verifier;

pub use scalar::Scalar;

/// Default scalar for the shipped binaries and scenarios.
pub type Real = f64;

/// Concrete aliases for the default scalar.
pub type Profile = geometry::ChannelProfile<Real>;
pub type Domain = geometry::TruncatedDomain<Real>;
pub type Carrier = carrier::FluxCarrier<Real>;
pub type Shear = shear::ShearFlow<Real>;
pub type Repar = repar::Reparametrization<Real>;
