//! Construction and numerical verification of biconservative surfaces in the
//! three-dimensional space forms R³, S³ and H³.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`curvature`] integrates the intrinsic curvature ODE of the profile curve
//!    and tracks its prime integral `(k')² = -(16c/9)k² - 16k⁴ + C k^{7/2}`.
//! 2. [`profile`] rebuilds the profile curve, either in closed form (R³) or by
//!    integrating a Frenet frame in a totally geodesic S² or H².
//! 3. [`surface`] sweeps the profile into an evaluable patch `X(u, v)` with
//!    analytic first partials.
//! 4. [`verify`] recomputes the geometry of any patch from scratch and reports
//!    the residuals of the biconservative identities.
//!
//! [`pipeline`] wires the stages together with centralized defaults, and
//! [`io`] writes CSV, JSON, OBJ and PLY output.

pub mod ambient;
pub mod curvature;
pub mod error;
pub mod io;
pub mod mesh;
pub mod ode;
pub mod pipeline;
pub mod profile;
pub mod surface;
pub mod verify;

pub use ambient::{orthonormal_complement, AmbientVector, Signature, SpaceForm};
pub use curvature::{solve_curvature, CurvatureSolution};
pub use error::{CurvatureError, Error, GeometryError, ProfileError, SurfaceError, VerifyError};
