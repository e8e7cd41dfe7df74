//! Numerical verification toolkit for the spectral form of local
//! p-Brunn-Minkowski inequalities and strong Brascamp-Lieb inequalities of
//! symmetric convex bodies with homogeneous log-concave potentials.
//!
//! The crate computes the geometric fields of a body (gauge, support
//! function, their sphere maps), discretizes the associated variance and
//! Dirichlet quadratic forms on the sphere and on Euclidean boxes, estimates
//! best spectral constants on even functions, and evaluates the closed-form
//! constant-transfer criteria that link the two worlds.

pub mod body;
pub mod criteria;
pub mod measure;
pub mod quad;
pub mod santalo;
pub mod spectral;
pub mod sphere;
