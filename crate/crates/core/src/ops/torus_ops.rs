//! Torus operator workspace: everything is evaluated through dynamically
//! sized dealiased grids, so operator compositions are exact within their
//! bands and identity residuals sit at rounding level.

use std::sync::Arc;

use crate::error::{CoreError, Result};
use crate::field::{SpectralField, StokesBasis};
use crate::ops::GalerkinSystem;
use crate::torus::fourier::{advect, advect_scalar, stretch, stretch_adjoint, Spec2, SpecScalar2};
use crate::torus::TorusBasis;

pub struct TorusWorkspace {
    basis: Arc<TorusBasis>,
    xi: Vec<Spec2>,
    /// Generation stamp of the noise family the caches were built from.
    pub xi_stamp: String,
}

impl TorusWorkspace {
    pub fn new(basis: Arc<TorusBasis>, xi_members: &[SpectralField], xi_stamp: &str) -> Result<Self> {
        let xi = xi_members
            .iter()
            .map(|m| basis.to_spec2(m))
            .collect::<Result<Vec<_>>>()?;
        Ok(TorusWorkspace {
            basis,
            xi,
            xi_stamp: xi_stamp.to_string(),
        })
    }

    pub fn basis(&self) -> &TorusBasis {
        &self.basis
    }

    pub fn xi(&self, i: usize) -> &Spec2 {
        &self.xi[i]
    }

    pub fn to_spec(&self, f: &SpectralField) -> Result<Spec2> {
        self.basis.to_spec2(f)
    }

    pub fn project(&self, s: &Spec2) -> Result<SpectralField> {
        self.basis.project_spec2(s)
    }

    /// `B_i f = L_{xi} f + T_{xi} f` for an arbitrary correlate field.
    pub fn salt_with(&self, xi: &Spec2, f: &Spec2) -> Result<Spec2> {
        advect(xi, f)?.add(&stretch(xi, f)?)
    }

    pub fn salt(&self, i: usize, f: &Spec2) -> Result<Spec2> {
        self.salt_with(&self.xi[i], f)
    }

    /// `B_i^* f = -L_{xi} f + T_{xi}^* f`.
    pub fn salt_adjoint(&self, i: usize, f: &Spec2) -> Result<Spec2> {
        let xi = &self.xi[i];
        stretch_adjoint(xi, f)?.sub(&advect(xi, f)?)
    }

    /// `[Delta, B_i] f = Delta B_i f - B_i Delta f`.
    ///
    /// Errors unless `band(xi) + band(f)` stays within the basis band, so the
    /// result is expressible against the mode table without truncation.
    pub fn commutator_delta_salt(&self, i: usize, f: &Spec2) -> Result<Spec2> {
        let xi = &self.xi[i];
        if xi.band + f.band > self.basis.k_max as f64 + 1e-9 {
            return Err(CoreError::BandViolation(format!(
                "commutator needs band(xi) + band(f) <= K: {} + {} > {}",
                xi.band, f.band, self.basis.k_max
            )));
        }
        let b_f = self.salt_with(xi, f)?;
        let lap_b = b_f.laplacian();
        let b_lap = self.salt_with(xi, &f.laplacian())?;
        lap_b.sub(&b_lap)
    }

    /// Scalar advection `L_{xi_i} w` used by the vorticity identity.
    pub fn advect_curl(&self, i: usize, w: &SpecScalar2) -> Result<SpecScalar2> {
        advect_scalar(&self.xi[i], w)
    }

    /// Galerkin coefficients of `P L_u u`.
    pub fn nonlinear_coeffs(&self, u: &SpectralField) -> Result<SpectralField> {
        let s = self.to_spec(u)?;
        let adv = advect(&s, &s)?;
        self.project(&adv)
    }

    /// Galerkin coefficients of `P B_i u`.
    pub fn p_salt_coeffs(&self, i: usize, u: &SpectralField) -> Result<SpectralField> {
        let s = self.to_spec(u)?;
        self.project(&self.salt(i, &s)?)
    }

    /// Galerkin coefficients of `1/2 sum_i P B_i(B_i u)`.
    pub fn corrector_coeffs(&self, u: &SpectralField) -> Result<SpectralField> {
        let s = self.to_spec(u)?;
        let mut acc = SpectralField::zeros(self.basis.as_ref());
        for xi in &self.xi {
            let b1 = self.salt_with(xi, &s)?;
            let b2 = self.salt_with(xi, &b1)?;
            acc = acc.add(&self.project(&b2)?)?;
        }
        Ok(acc.scaled(0.5))
    }
}

impl GalerkinSystem for TorusWorkspace {
    fn n_modes(&self) -> usize {

        self.basis.len()
    }

    fn eigenvalues(&self) -> &[f64] {

        self.basis.eigenvalues()
    }

    fn xi_count(&self) -> usize {
        self.xi.len()
    }

    fn nonlinear(&self, u: &[f64]) -> Vec<f64> {

        let f = SpectralField::new(self.basis.id().clone(), u.to_vec()).expect("finite state");
        self.nonlinear_coeffs(&f)
            .expect("bound state")
            .coeffs()
            .to_vec()
    }

    fn corrector(&self, u: &[f64]) -> Vec<f64> {

        let f = SpectralField::new(self.basis.id().clone(), u.to_vec()).expect("finite state");
        self.corrector_coeffs(&f)
            .expect("bound state")
            .coeffs()
            .to_vec()
    }

    fn p_salt(&self, i: usize, u: &[f64]) -> Vec<f64> {

        let f = SpectralField::new(self.basis.id().clone(), u.to_vec()).expect("finite state");
        self.p_salt_coeffs(i, &f)
            .expect("bound state")
            .coeffs()
            .to_vec()
    }

    fn p_salt_all(&self, u: &[f64]) -> Vec<Vec<f64>> {

        let f = SpectralField::new(self.basis.id().clone(), u.to_vec()).expect("finite state");
        let s = self.to_spec(&f).expect("bound state");
        self.xi
            .iter()
            .map(|xi| {
                let b = self.salt_with(xi, &s).expect("salt");
                self.project(&b).expect("project").coeffs().to_vec()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{SpectralField, StokesBasis};
    use crate::torus::build_torus_basis;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    fn basis(k: u32) -> Arc<TorusBasis> {
        Arc::new(build_torus_basis(2, k, (2 * k + 4) as usize).unwrap())
    }

    fn random_field(basis: &TorusBasis, band: f64, rng: &mut ChaCha12Rng) -> SpectralField {
        let coeffs: Vec<f64> = basis
            .modes
            .iter()
            .map(|m| {
                if m.lambda.sqrt() <= band {
                    rng.gen_range(-1.0..1.0)
                } else {
                    0.0
                }
            })
            .collect();
        SpectralField::new(basis.id().clone(), coeffs).unwrap()
    }

    fn workspace(k: u32, n_xi: usize) -> (Arc<TorusBasis>, TorusWorkspace) {
        let b = basis(k);
        let members: Vec<SpectralField> = (0..n_xi)
            .map(|i| SpectralField::unit_mode(b.as_ref(), i).scaled(1.0 / (i + 1) as f64))
            .collect();
        let ws = TorusWorkspace::new(b.clone(), &members, "test").unwrap();
        (b, ws)
    }

    #[test]
    fn advect_of_zero_is_zero() {
        let (b, ws) = workspace(4, 1);
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let f = ws.to_spec(&random_field(&b, 3.0, &mut rng)).unwrap();
        let zero = Spec2::zeros(b.grid, 0.0);
        assert!(advect(&zero, &f).unwrap().norm() < 1e-15);
        assert!(stretch(&zero, &f).unwrap().norm() < 1e-15);
    }

    #[test]
    fn advection_is_antisymmetric_for_divergence_free_transport() {
        let (b, ws) = workspace(6, 1);
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        for _ in 0..5 {
            let phi = ws.to_spec(&random_field(&b, 3.0, &mut rng)).unwrap();
            let f = ws.to_spec(&random_field(&b, 3.0, &mut rng)).unwrap();
            let g = ws.to_spec(&random_field(&b, 3.0, &mut rng)).unwrap();
            let lhs = advect(&phi, &f).unwrap().inner(&g).unwrap();
            let rhs = advect(&phi, &g).unwrap().inner(&f).unwrap();
            let scale = f.norm() * g.norm() * phi.norm();
            assert!((lhs + rhs).abs() <= 1e-9 * scale.max(1.0), "{lhs} vs {rhs}");
            // energy cancellation
            let ee = advect(&phi, &f).unwrap().inner(&f).unwrap();
            assert!(ee.abs() <= 1e-9 * scale.max(1.0));
        }
    }

    #[test]
    fn stretch_of_constant_correlate_vanishes() {
        // constant fields have zero gradient; T_g f = 0. A constant is the
        // k = 0 Fourier mode.
        let (b, ws) = workspace(4, 1);
        let mut cst = Spec2::zeros(b.grid, 0.0);
        cst.hat[0][(0, 0)] = num_complex::Complex64::new(0.7, 0.0);
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let f = ws.to_spec(&random_field(&b, 3.0, &mut rng)).unwrap();
        assert!(stretch(&cst, &f).unwrap().norm() < 1e-14);
    }

    #[test]
    fn salt_is_linear_in_the_field() {
        let (b, ws) = workspace(5, 2);
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let f = ws.to_spec(&random_field(&b, 3.0, &mut rng)).unwrap();
        let g = ws.to_spec(&random_field(&b, 3.0, &mut rng)).unwrap();
        let sum = ws.salt(1, &f.add(&g).unwrap()).unwrap();
        let parts = ws.salt(1, &f).unwrap().add(&ws.salt(1, &g).unwrap()).unwrap();
        assert!(sum.sub(&parts).unwrap().norm() <= 1e-12 * sum.norm().max(1.0));
    }

    #[test]
    fn curl_of_salt_is_advected_curl() {
        let (b, ws) = workspace(6, 2);
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for i in 0..2 {
            let f = ws.to_spec(&random_field(&b, 3.0, &mut rng)).unwrap();
            let lhs = ws.salt(i, &f).unwrap().curl();
            let rhs = ws.advect_curl(i, &f.curl()).unwrap();
            let g = lhs.g.max(rhs.g);
            let d = (&lhs.resized(g).unwrap().hat - &rhs.resized(g).unwrap().hat)
                .iter()
                .map(|c| c.norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(d <= 1e-9 * lhs.norm().max(1.0), "residual {d}");
        }
    }

    #[test]
    fn adjoint_pairing_holds() {
        let (b, ws) = workspace(6, 1);
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        for _ in 0..10 {
            let f = ws.to_spec(&random_field(&b, 3.0, &mut rng)).unwrap();
            let g = ws.to_spec(&random_field(&b, 3.0, &mut rng)).unwrap();
            let lhs = ws.salt(0, &f).unwrap().inner(&g).unwrap();
            let rhs = ws.salt_adjoint(0, &g).unwrap().inner(&f).unwrap();
            assert_relative_eq!(lhs, rhs, epsilon = 1e-9 * f.norm() * g.norm());
        }
    }

    #[test]
    fn transport_part_cancels_in_symmetrized_salt() {
        // <(B + B*) f, f> = <(T + T*) f, f>
        let (b, ws) = workspace(6, 1);
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let f = ws.to_spec(&random_field(&b, 3.0, &mut rng)).unwrap();
        let bsum = ws
            .salt(0, &f)
            .unwrap()
            .add(&ws.salt_adjoint(0, &f).unwrap())
            .unwrap()
            .inner(&f)
            .unwrap();
        let xi = ws.xi(0);
        let tsum = stretch(xi, &f)
            .unwrap()
            .add(&stretch_adjoint(xi, &f).unwrap())
            .unwrap()
            .inner(&f)
            .unwrap();
        assert_relative_eq!(bsum, tsum, epsilon = 1e-10 * f.norm().powi(2).max(1.0));
    }

    #[test]
    fn commutator_vanishes_for_constant_correlate() {
        let (b, _) = workspace(5, 1);
        let mut cst = Spec2::zeros(b.grid, 0.0);
        cst.hat[1][(0, 0)] = num_complex::Complex64::new(-0.4, 0.0);
        let ws = TorusWorkspace {
            basis: b.clone(),
            xi: vec![cst],
            xi_stamp: "const".into(),
        };
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let f = ws.to_spec(&random_field(&b, 2.0, &mut rng)).unwrap();
        let c = ws.commutator_delta_salt(0, &f).unwrap();
        assert!(c.norm() < 1e-12);
    }

    #[test]
    fn commutator_matches_single_mode_hand_expansion() {
        // xi = c_n (0,1) cos(x1), f = c_n (1,0) cos(x2):
        //   B f = L_xi f = -c_n^2 (1,0) cos(x1) sin(x2), T part vanishes;
        //   [Delta, B] f = (lambda_f - |k|^2) on each product wavevector
        //   with |k|^2 = 2, lambda_f = 1, so [Delta, B] f = -B f.
        let b = basis(4);
        let i1 = b.find_mode([1, 0, 0], crate::torus::Trig::Cos, 0).unwrap();
        let i2 = b.find_mode([0, 1, 0], crate::torus::Trig::Cos, 0).unwrap();
        // mode i1 has polarization (0, 1) (k-perp of (1,0)); mode i2 has (-1, 0)
        let xi = SpectralField::unit_mode(b.as_ref(), i1);
        let ws = TorusWorkspace::new(b.clone(), &[xi], "hand").unwrap();
        let f = ws
            .to_spec(&SpectralField::unit_mode(b.as_ref(), i2).scaled(-1.0))
            .unwrap();
        let bf = ws.salt(0, &f).unwrap();
        let comm = ws.commutator_delta_salt(0, &f).unwrap();
        let expect = bf.scaled(-1.0);
        assert!(
            comm.sub(&expect).unwrap().norm() <= 1e-12 * bf.norm().max(1e-12),
            "commutator does not match the hand expansion"
        );
        // and the hand form of B f itself
        let cn = (2.0 / (crate::torus::fourier::TAU.powi(2))).sqrt();
        let g = bf.g;
        let grid = bf.component(0).to_grid();
        for i in 0..g {
            for j in 0..g {
                let x1 = crate::torus::fourier::TAU * i as f64 / g as f64;
                let x2 = crate::torus::fourier::TAU * j as f64 / g as f64;
                assert_relative_eq!(
                    grid[(i, j)],
                    -cn * cn * x1.cos() * x2.sin(),
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn commutator_rejects_band_violations() {
        let (b, ws) = workspace(3, 1);
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let f = ws.to_spec(&random_field(&b, 3.0, &mut rng)).unwrap();
        assert!(matches!(
            ws.commutator_delta_salt(0, &f),
            Err(CoreError::BandViolation(_))
        ));
    }

    #[test]
    fn nonlinear_single_mode_self_advection_projects_to_zero() {
        // for k = (1,0) the product L_u u is a gradient-type k-parallel
        // field at 2k; Leray projection onto the basis kills it
        let b = basis(4);
        let ws = TorusWorkspace::new(b.clone(), &[], "none").unwrap();
        let i = b.find_mode([1, 0, 0], crate::torus::Trig::Cos, 0).unwrap();
        let u = SpectralField::unit_mode(b.as_ref(), i);
        let n = ws.nonlinear_coeffs(&u).unwrap();
        let norm: f64 = n.coeffs().iter().map(|c| c * c).sum::<f64>().sqrt();
        assert!(norm < 1e-12, "self-advection leaked: {norm}");
    }

    #[test]
    fn nonlinear_is_energy_neutral() {
        let b = basis(6);
        let ws = TorusWorkspace::new(b.clone(), &[], "none").unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        for _ in 0..5 {
            let u = random_field(&b, 3.0, &mut rng);
            let n = ws.nonlinear_coeffs(&u).unwrap();
            let dot: f64 = n.coeffs().iter().zip(u.coeffs()).map(|(a, c)| a * c).sum();
            let scale: f64 = u.coeffs().iter().map(|c| c * c).sum::<f64>();
            assert!(dot.abs() <= 1e-9 * scale.max(1.0), "energy leak {dot}");
        }
    }

    #[test]
    fn projected_salt_ignores_non_solenoidal_parts() {
        // P B_i f = P B_i P f on band-limited, generally non-solenoidal input
        let (b, ws) = workspace(6, 1);
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        // solenoidal part within the basis + a gradient part
        let sol = ws.to_spec(&random_field(&b, 3.0, &mut rng)).unwrap();
        let mut phi = SpecScalar2::zeros(b.grid, 3.0);
        for _ in 0..6 {
            let kx: i64 = rng.gen_range(-2..=2);
            let ky: i64 = rng.gen_range(-2..=2);
            let v = num_complex::Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
            let (i, j) = (
                kx.rem_euclid(b.grid as i64) as usize,
                ky.rem_euclid(b.grid as i64) as usize,
            );
            let (im, jm) = (
                (-kx).rem_euclid(b.grid as i64) as usize,
                (-ky).rem_euclid(b.grid as i64) as usize,
            );
            phi.hat[(i, j)] += v;
            phi.hat[(im, jm)] += v.conj();
        }
        let grad = Spec2::from_components(phi.derivative(0), phi.derivative(1)).unwrap();
        let g = sol.add(&grad).unwrap();
        let direct = ws.project(&ws.salt(0, &g).unwrap()).unwrap();
        let pg = ws.to_spec(&ws.project(&g).unwrap()).unwrap();
        let through = ws.project(&ws.salt(0, &pg).unwrap()).unwrap();
        let scale: f64 = direct.coeffs().iter().map(|c| c * c).sum::<f64>().sqrt();
        for (a, c) in direct.coeffs().iter().zip(through.coeffs()) {
            assert!((a - c).abs() <= 1e-11 * scale.max(1.0));
        }
    }

    #[test]
    fn corrector_is_half_the_composed_salt_for_single_mode() {
        let (b, ws) = workspace(6, 1);
        let u = SpectralField::unit_mode(b.as_ref(), 5);
        let c = ws.corrector_coeffs(&u).unwrap();
        let s = ws.to_spec(&u).unwrap();
        let b2 = ws.salt(0, &ws.salt(0, &s).unwrap()).unwrap();
        let direct = ws.project(&b2).unwrap().scaled(0.5);
        for (a, e) in c.coeffs().iter().zip(direct.coeffs()) {
            assert_relative_eq!(a, e, epsilon = 1e-13);
        }
    }
}
