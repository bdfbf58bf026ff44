//! The model's differential operators: advection `L_phi f`, stretching
//! `T_g f`, the transport-stretching pair `B_i f = L_{xi_i} f + T_{xi_i} f`,
//! its adjoint, the commutator with the Laplacian, the Leray-projected
//! nonlinear term and the Ito-Stratonovich corrector `1/2 sum_i P B_i^2`.
//!
//! Torus and disk workspaces expose the same coefficient-space surface
//! through [`GalerkinSystem`] so the SDE driver is geometry-agnostic.

pub mod disk_ops;
pub mod torus_ops;

pub use disk_ops::DiskWorkspace;
pub use torus_ops::TorusWorkspace;

/// Coefficient-space view of the Galerkin system consumed by the SDE driver.
///
/// All methods return coefficients against the full tabulated basis; the
/// driver applies its own truncation.
pub trait GalerkinSystem: Send + Sync {
    fn n_modes(&self) -> usize;
    fn eigenvalues(&self) -> &[f64];
    fn xi_count(&self) -> usize;
    /// Coefficients of `P L_u u`.
    fn nonlinear(&self, u: &[f64]) -> Vec<f64>;
    /// Coefficients of `1/2 sum_i P B_i (B_i u)`.
    fn corrector(&self, u: &[f64]) -> Vec<f64>;
    /// Coefficients of `P B_i u` for one correlate.
    fn p_salt(&self, i: usize, u: &[f64]) -> Vec<f64>;
    /// Coefficients of `P B_i u` for every correlate (shared evaluation).
    fn p_salt_all(&self, u: &[f64]) -> Vec<Vec<f64>> {
        (0..self.xi_count()).map(|i| self.p_salt(i, u)).collect()
    }
}
