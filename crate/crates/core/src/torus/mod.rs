//! Divergence-free Fourier eigenbasis of the Stokes operator on the torus.
//!
//! Wavevectors `k` with `0 < |k|^2 <= K^2` are paired `{k, -k}` and folded
//! into real cosine/sine modes; each mode carries a polarization orthogonal
//! to `k` (one in 2D, two in 3D), so every tabulated field is divergence-free
//! and zero-mean by construction, and the Laplacian acts diagonally with
//! eigenvalue `|k|^2`.

pub mod fourier;

use ndarray::{ArrayD, IxDyn};
use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::error::{CoreError, Result};
use crate::field::{BasisId, SpectralField, StokesBasis};
use fourier::{Spec2, TAU};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Trig {
    Cos,
    Sin,
}

#[derive(Debug, Clone)]
pub struct TorusMode {
    /// Canonical wavevector of the `{k, -k}` pair (first nonzero entry > 0).
    pub k: [i64; 3],
    pub trig: Trig,
    /// Index of the polarization vector (always 0 in 2D).
    pub pol_idx: u8,
    /// Unit polarization, orthogonal to `k`.
    pub pol: [f64; 3],
    pub lambda: f64,
}

#[derive(Debug)]
pub struct TorusBasis {
    id: BasisId,
    pub dim: usize,
    pub k_max: u32,
    pub grid: usize,
    pub modes: Vec<TorusMode>,
    eigenvalues: Vec<f64>,
}

/// Real velocity samples on the uniform `grid^dim` lattice.
#[derive(Debug, Clone)]
pub struct GridField {
    pub dim: usize,
    pub grid: usize,
    pub comps: Vec<ArrayD<f64>>,
}

impl GridField {
    pub fn zeros(dim: usize, grid: usize) -> Self {
        let shape: Vec<usize> = vec![grid; dim];
        GridField {
            dim,
            grid,
            comps: (0..dim).map(|_| ArrayD::zeros(IxDyn(&shape))).collect(),
        }
    }

    pub fn check_shape(&self, basis: &TorusBasis) -> Result<()> {
        if self.dim != basis.dim || self.grid != basis.grid {
            return Err(CoreError::ShapeMismatch(format!(
                "grid field is {}^{} but basis expects {}^{}",
                self.grid, self.dim, basis.grid, basis.dim
            )));
        }
        for c in &self.comps {
            if c.iter().any(|v| !v.is_finite()) {
                return Err(CoreError::InvalidField("non-finite grid sample".into()));
            }
        }
        Ok(())
    }

    /// Mean of each component (diagnostic: removed by `from_grid`).
    pub fn means(&self) -> Vec<f64> {
        self.comps
            .iter()
            .map(|c| c.sum() / c.len() as f64)
            .collect()
    }
}

fn canonical(k: &[i64]) -> bool {
    for &c in k {
        if c > 0 {
            return true;
        }
        if c < 0 {
            return false;
        }
    }
    false
}

fn polarizations(k: [i64; 3], dim: usize) -> Vec<[f64; 3]> {
    let kf = [k[0] as f64, k[1] as f64, k[2] as f64];
    let norm = (kf[0] * kf[0] + kf[1] * kf[1] + kf[2] * kf[2]).sqrt();
    if dim == 2 {
        // k-perp / |k|
        vec![[-kf[1] / norm, kf[0] / norm, 0.0]]
    } else {
        // deterministic orthonormal pair perpendicular to k: cross with the
        // axis of smallest |k| component, then complete the frame
        let mut axis = [0.0, 0.0, 0.0];
        let amin = (0..3)
            .min_by(|&a, &b| kf[a].abs().partial_cmp(&kf[b].abs()).unwrap())
            .unwrap();
        axis[amin] = 1.0;
        let cross = |a: [f64; 3], b: [f64; 3]| {
            [
                a[1] * b[2] - a[2] * b[1],
                a[2] * b[0] - a[0] * b[2],
                a[0] * b[1] - a[1] * b[0],
            ]
        };
        let e1 = cross(kf, axis);
        let n1 = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
        let e1 = [e1[0] / n1, e1[1] / n1, e1[2] / n1];
        let e2 = cross(kf, e1);
        let n2 = (e2[0] * e2[0] + e2[1] * e2[1] + e2[2] * e2[2]).sqrt();
        vec![e1, [e2[0] / n2, e2[1] / n2, e2[2] / n2]]
    }
}

/// Normalization making each real mode `pol * trig(k.x)` unit in `L^2(T^dim)`.
fn mode_norm_const(dim: usize) -> f64 {
    (2.0 / TAU.powi(dim as i32)).sqrt()
}

pub fn build_torus_basis(dim: usize, k_max: u32, grid: usize) -> Result<TorusBasis> {
    if !(dim == 2 || dim == 3) {
        return Err(CoreError::Construction(format!(
            "torus dimension must be 2 or 3, got {dim}"
        )));
    }
    if k_max < 1 {
        return Err(CoreError::Construction("K must be at least 1".into()));
    }
    if grid < 2 * k_max as usize + 1 {
        return Err(CoreError::Construction(format!(
            "grid {grid} cannot represent modes up to K={k_max}; need at least {}",
            2 * k_max + 1
        )));
    }
    if 2 * grid < 3 * k_max as usize + 2 {
        return Err(CoreError::Construction(format!(
            "grid {grid} violates the 2/3-rule dealiasing requirement G >= 3K/2 + 1 = {}",
            (3 * k_max as usize) / 2 + 1
        )));
    }
    let kk = k_max as i64;
    let mut modes = Vec::new();
    let ks2: i64 = kk * kk;
    let range = -kk..=kk;
    let mut wavevectors = Vec::new();
    for k0 in range.clone() {
        for k1 in range.clone() {
            if dim == 2 {
                let k = [k0, k1, 0];
                let n2 = k0 * k0 + k1 * k1;
                if n2 > 0 && n2 <= ks2 && canonical(&k[..2]) {
                    wavevectors.push(k);
                }
            } else {
                for k2 in range.clone() {
                    let k = [k0, k1, k2];
                    let n2 = k0 * k0 + k1 * k1 + k2 * k2;
                    if n2 > 0 && n2 <= ks2 && canonical(&k) {
                        wavevectors.push(k);
                    }
                }
            }
        }
    }
    for k in wavevectors {
        let lambda = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
        for (pi, pol) in polarizations(k, dim).into_iter().enumerate() {
            for trig in [Trig::Cos, Trig::Sin] {
                modes.push(TorusMode {
                    k,
                    trig,
                    pol_idx: pi as u8,
                    pol,
                    lambda,
                });
            }
        }
    }
    modes.sort_by(|a, b| {
        a.lambda
            .partial_cmp(&b.lambda)
            .unwrap()
            .then(a.k.cmp(&b.k))
            .then(a.pol_idx.cmp(&b.pol_idx))
            .then(a.trig.cmp(&b.trig))
    });
    let eigenvalues = modes.iter().map(|m| m.lambda).collect();
    let id = BasisId(format!("torus{dim}:K={k_max}:G={grid}"));
    Ok(TorusBasis {
        id,
        dim,
        k_max,
        grid,
        modes,
        eigenvalues,
    })
}

impl StokesBasis for TorusBasis {
    fn id(&self) -> &BasisId {
        &self.id
    }
    fn len(&self) -> usize {
        self.modes.len()
    }
    fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }
}

impl TorusBasis {
    /// Hash of the mode table, recorded in run manifests.
    pub fn table_hash(&self) -> String {
        let mut h = Sha256::new();
        for m in &self.modes {
            for c in m.k {
                h.update(c.to_le_bytes());
            }
            h.update([m.pol_idx, if m.trig == Trig::Cos { 0 } else { 1 }]);
            for p in m.pol {
                h.update(p.to_bits().to_le_bytes());
            }
        }
        hex::encode(&h.finalize()[..16])
    }

    pub fn mode(&self, idx: usize) -> &TorusMode {
        &self.modes[idx]
    }

    /// Index of the mode with the given signature, if tabulated.
    pub fn find_mode(&self, k: [i64; 3], trig: Trig, pol_idx: u8) -> Option<usize> {
        self.modes
            .iter()
            .position(|m| m.k == k && m.trig == trig && m.pol_idx == pol_idx)
    }

    // ----- 2D fast path -------------------------------------------------

    /// Spectral field -> full Fourier representation (2D only).
    pub fn to_spec2(&self, f: &SpectralField) -> Result<Spec2> {
        assert_eq!(self.dim, 2, "to_spec2 is the 2D path");
        f.check_bound(self)?;
        let g = self.grid;
        let cn = mode_norm_const(2);
        // tight band: the largest |k| actually carrying a coefficient
        let band = f
            .coeffs()
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(idx, _)| self.modes[idx].lambda.sqrt())
            .fold(0.0_f64, f64::max);
        let mut out = Spec2::zeros(g, band);
        for (idx, c) in f.coeffs().iter().enumerate() {
            if *c == 0.0 {
                continue;
            }
            let m = &self.modes[idx];
            let (i, j) = (
                m.k[0].rem_euclid(g as i64) as usize,
                m.k[1].rem_euclid(g as i64) as usize,
            );
            let (im, jm) = (
                (-m.k[0]).rem_euclid(g as i64) as usize,
                (-m.k[1]).rem_euclid(g as i64) as usize,
            );
            let amp = 0.5 * c * cn;
            let (fwd, bwd) = match m.trig {
                Trig::Cos => (Complex64::new(amp, 0.0), Complex64::new(amp, 0.0)),
                Trig::Sin => (Complex64::new(0.0, -amp), Complex64::new(0.0, amp)),
            };
            for l in 0..2 {
                out.hat[l][(i, j)] += fwd * m.pol[l];
                out.hat[l][(im, jm)] += bwd * m.pol[l];
            }
        }
        Ok(out)
    }

    /// Projection of an arbitrary Fourier field onto the tabulated modes;
    /// this is the Leray projection composed with band truncation (2D only).
    pub fn project_spec2(&self, s: &Spec2) -> Result<SpectralField> {
        assert_eq!(self.dim, 2, "project_spec2 is the 2D path");
        let g = s.g;
        let cn = mode_norm_const(2);
        let mut coeffs = vec![0.0; self.modes.len()];
        for (idx, m) in self.modes.iter().enumerate() {
            let limit = (g - 1) / 2;
            if m.k[0].unsigned_abs() as usize > limit || m.k[1].unsigned_abs() as usize > limit {
                continue;
            }
            let (i, j) = (
                m.k[0].rem_euclid(g as i64) as usize,
                m.k[1].rem_euclid(g as i64) as usize,
            );
            let v = s.hat[0][(i, j)] * m.pol[0] + s.hat[1][(i, j)] * m.pol[1];
            coeffs[idx] = match m.trig {
                Trig::Cos => 2.0 * v.re / cn,
                Trig::Sin => -2.0 * v.im / cn,
            };
        }
        SpectralField::new(self.id.clone(), coeffs)
    }

    // ----- transforms ----------------------------------------------------

    pub fn to_grid(&self, f: &SpectralField) -> Result<GridField> {
        f.check_bound(self)?;
        if self.dim == 2 {
            let s = self.to_spec2(f)?;
            let mut out = GridField::zeros(2, self.grid);
            for l in 0..2 {
                let plane = s.component(l).to_grid();
                out.comps[l] = plane.into_dyn();
            }
            Ok(out)
        } else {
            self.to_grid_direct(f)
        }
    }

    /// Projects grid samples onto the tabulated divergence-free modes.
    /// Returns the field and the removed component means (diagnostic).
    pub fn from_grid(&self, grid: &GridField) -> Result<(SpectralField, Vec<f64>)> {
        grid.check_shape(self)?;
        let means = grid.means();
        if self.dim == 2 {
            let c0 = fourier::SpecScalar2::from_grid(
                &grid.comps[0]
                    .view()
                    .into_dimensionality::<ndarray::Ix2>()
                    .map_err(|e| CoreError::ShapeMismatch(e.to_string()))?
                    .to_owned(),
                self.k_max as f64,
            );
            let c1 = fourier::SpecScalar2::from_grid(
                &grid.comps[1]
                    .view()
                    .into_dimensionality::<ndarray::Ix2>()
                    .map_err(|e| CoreError::ShapeMismatch(e.to_string()))?
                    .to_owned(),
                self.k_max as f64,
            );
            let s = Spec2::from_components(c0, c1)?;
            Ok((self.project_spec2(&s)?, means))
        } else {
            Ok((self.from_grid_direct(grid)?, means))
        }
    }

    // ----- 3D slow-but-exact path ---------------------------------------

    fn grid_coords(&self) -> Vec<f64> {
        (0..self.grid).map(|i| TAU * i as f64 / self.grid as f64).collect()
    }

    fn to_grid_direct(&self, f: &SpectralField) -> Result<GridField> {
        let g = self.grid;
        let xs = self.grid_coords();
        let cn = mode_norm_const(self.dim);
        let mut out = GridField::zeros(self.dim, g);
        for (idx, c) in f.coeffs().iter().enumerate() {
            if *c == 0.0 {
                continue;
            }
            let m = &self.modes[idx];
            for i in 0..g {
                for j in 0..g {
                    for l in 0..g {
                        let phase =
                            m.k[0] as f64 * xs[i] + m.k[1] as f64 * xs[j] + m.k[2] as f64 * xs[l];
                        let v = match m.trig {
                            Trig::Cos => phase.cos(),
                            Trig::Sin => phase.sin(),
                        } * cn
                            * c;
                        for d in 0..3 {
                            out.comps[d][[i, j, l]] += v * m.pol[d];
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    fn from_grid_direct(&self, grid: &GridField) -> Result<SpectralField> {
        let g = self.grid;
        let xs = self.grid_coords();
        let cn = mode_norm_const(self.dim);
        let w = (TAU / g as f64).powi(self.dim as i32);
        let mut coeffs = vec![0.0; self.modes.len()];
        for (idx, m) in self.modes.iter().enumerate() {
            let mut acc = 0.0;
            for i in 0..g {
                for j in 0..g {
                    for l in 0..g {
                        let phase =
                            m.k[0] as f64 * xs[i] + m.k[1] as f64 * xs[j] + m.k[2] as f64 * xs[l];
                        let t = match m.trig {
                            Trig::Cos => phase.cos(),
                            Trig::Sin => phase.sin(),
                        } * cn;
                        for d in 0..3 {
                            acc += grid.comps[d][[i, j, l]] * t * m.pol[d];
                        }
                    }
                }
            }
            coeffs[idx] = acc * w;
        }
        SpectralField::new(self.id.clone(), coeffs)
    }

    /// Vorticity of a 2D grid field by spectral differentiation (exact for
    /// band-limited inputs).
    pub fn curl_grid(&self, g: &GridField) -> Result<ndarray::Array2<f64>> {
        let s = self.grid_to_spec2(g)?;
        Ok(s.curl().to_grid())
    }

    /// Gradient of a scalar sampled on the 2D grid.
    pub fn grad_grid(&self, scalar: &ndarray::Array2<f64>) -> Result<GridField> {
        let s = fourier::SpecScalar2::from_grid(scalar, (self.grid / 2) as f64);
        let mut out = GridField::zeros(2, self.grid);
        out.comps[0] = s.derivative(0).to_grid().into_dyn();
        out.comps[1] = s.derivative(1).to_grid().into_dyn();
        Ok(out)
    }

    /// Componentwise Laplacian of a 2D grid field.
    pub fn laplacian_grid(&self, g: &GridField) -> Result<GridField> {
        let s = self.grid_to_spec2(g)?;
        let lap = s.laplacian();
        let mut out = GridField::zeros(2, self.grid);
        for l in 0..2 {
            out.comps[l] = lap.component(l).to_grid().into_dyn();
        }
        Ok(out)
    }

    fn grid_to_spec2(&self, g: &GridField) -> Result<Spec2> {
        g.check_shape(self)?;
        assert_eq!(self.dim, 2, "grid differential operators are the 2D path");
        let band = ((self.grid - 1) / 2) as f64;
        let c0 = fourier::SpecScalar2::from_grid(
            &g.comps[0]
                .view()
                .into_dimensionality::<ndarray::Ix2>()
                .map_err(|e| CoreError::ShapeMismatch(e.to_string()))?
                .to_owned(),
            band,
        );
        let c1 = fourier::SpecScalar2::from_grid(
            &g.comps[1]
                .view()
                .into_dimensionality::<ndarray::Ix2>()
                .map_err(|e| CoreError::ShapeMismatch(e.to_string()))?
                .to_owned(),
            band,
        );
        Spec2::from_components(c0, c1)
    }

    /// `L^2(T^dim)` quadrature of two grid fields (trapezoid = exact for
    /// band-limited inputs).
    pub fn grid_inner(&self, a: &GridField, b: &GridField) -> Result<f64> {
        a.check_shape(self)?;
        b.check_shape(self)?;
        let w = (TAU / self.grid as f64).powi(self.dim as i32);
        let mut acc = 0.0;
        for (ca, cb) in a.comps.iter().zip(&b.comps) {
            acc += ca.iter().zip(cb.iter()).map(|(x, y)| x * y).sum::<f64>();
        }
        Ok(acc * w)
    }
}

/// Per-wavevector Leray projection `v -> v - (k.v) k / |k|^2`.
/// The zero wavevector is returned unchanged; mean handling lives in
/// the full-field projector.
pub fn leray_project_fourier(k: &[f64], v: &[Complex64]) -> Vec<Complex64> {
    let kk: f64 = k.iter().map(|c| c * c).sum();
    if kk == 0.0 {
        return v.to_vec();
    }
    let kv: Complex64 = k.iter().zip(v).map(|(ki, vi)| vi * *ki).sum();
    k.iter()
        .zip(v)
        .map(|(ki, vi)| vi - kv * (*ki / kk))
        .collect()
}
