//! Band-limited Fourier fields on the 2D torus `[0, 2pi)^2`.
//!
//! [`Spec2`] / [`SpecScalar2`] hold complex Fourier coefficients of real
//! (not necessarily divergence-free) fields together with a guaranteed
//! Euclidean band limit. Every pointwise product is formed on a grid large
//! enough that the result's coefficients are exact within its band, so
//! operator compositions stay alias-free as long as callers respect their
//! band margins.

use std::cell::RefCell;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{CoreError, Result};

pub const TAU: f64 = 2.0 * std::f64::consts::PI;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Smallest grid size >= `n` with only factors 2, 3 and 5.
pub fn fast_grid_size(n: usize) -> usize {
    let mut m = n.max(4);
    loop {
        let mut r = m;
        for f in [2, 3, 5] {
            while r % f == 0 {
                r /= f;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Grid size on which a field of Euclidean band `b` can be multiplied
/// against another without aliasing into the combined band.
pub fn grid_for_band(band: f64) -> usize {
    fast_grid_size(2 * band.ceil() as usize + 1)
}

/// FFT index -> signed wavenumber on a grid of `g` points.
#[inline]
pub fn wavenumber(idx: usize, g: usize) -> i64 {
    if idx <= g / 2 {
        idx as i64
    } else {
        idx as i64 - g as i64
    }
}

fn fft2_inplace(a: &mut Array2<Complex64>, forward: bool) {
    let g = a.nrows();
    PLANNER.with(|p| {
        let fft = if forward {
            p.borrow_mut().plan_fft_forward(g)
        } else {
            p.borrow_mut().plan_fft_inverse(g)
        };
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        let mut line = vec![Complex64::default(); g];
        for i in 0..g {
            for j in 0..g {
                line[j] = a[(i, j)];
            }
            fft.process_with_scratch(&mut line, &mut scratch);
            for j in 0..g {
                a[(i, j)] = line[j];
            }
        }
        for j in 0..g {
            for i in 0..g {
                line[i] = a[(i, j)];
            }
            fft.process_with_scratch(&mut line, &mut scratch);
            for i in 0..g {
                a[(i, j)] = line[i];
            }
        }
    });
}

/// Scalar band-limited field in coefficient form.
#[derive(Debug, Clone)]
pub struct SpecScalar2 {
    pub g: usize,
    pub band: f64,
    pub hat: Array2<Complex64>,
}

/// Two-component band-limited field in coefficient form.
#[derive(Debug, Clone)]
pub struct Spec2 {
    pub g: usize,
    pub band: f64,
    pub hat: [Array2<Complex64>; 2],
}

impl SpecScalar2 {
    pub fn zeros(g: usize, band: f64) -> Self {
        SpecScalar2 {
            g,
            band,
            hat: Array2::default((g, g)),
        }
    }

    pub fn resized(&self, g: usize) -> Result<SpecScalar2> {
        Ok(SpecScalar2 {
            g,
            band: self.band,
            hat: resize_hat(&self.hat, self.g, g, self.band)?,
        })
    }

    /// Physical samples on this coefficient grid.
    pub fn to_grid(&self) -> Array2<f64> {
        let mut h = self.hat.clone();
        fft2_inplace(&mut h, false);
        h.mapv(|c| c.re)
    }

    pub fn from_grid(samples: &Array2<f64>, band: f64) -> SpecScalar2 {
        let g = samples.nrows();
        let mut h = samples.mapv(|v| Complex64::new(v, 0.0));
        fft2_inplace(&mut h, true);
        let scale = 1.0 / (g * g) as f64;
        h.mapv_inplace(|c| c * scale);
        SpecScalar2 { g, band, hat: h }
    }

    pub fn derivative(&self, axis: usize) -> SpecScalar2 {
        let mut out = self.hat.clone();
        for ((i, j), v) in out.indexed_iter_mut() {
            let k = wavenumber(if axis == 0 { i } else { j }, self.g) as f64;
            *v *= Complex64::new(0.0, k);
        }
        SpecScalar2 {
            g: self.g,
            band: self.band,
            hat: out,
        }
    }

    pub fn laplacian(&self) -> SpecScalar2 {
        let mut out = self.hat.clone();
        for ((i, j), v) in out.indexed_iter_mut() {
            let k1 = wavenumber(i, self.g) as f64;
            let k2 = wavenumber(j, self.g) as f64;
            *v *= -(k1 * k1 + k2 * k2);
        }
        SpecScalar2 {
            g: self.g,
            band: self.band,
            hat: out,
        }
    }

    /// Exact (dealiased) pointwise product; the result's band is the sum of
    /// the operands' bands.
    pub fn product(&self, other: &SpecScalar2) -> Result<SpecScalar2> {
        let band = self.band + other.band;
        let g = grid_for_band(band);
        let a = self.resized(g)?.to_grid();
        let b = other.resized(g)?.to_grid();
        Ok(SpecScalar2::from_grid(&(&a * &b), band))
    }

    /// `L^2(T^2)` inner product via Parseval (exact for tabulated bands).
    pub fn inner(&self, other: &SpecScalar2) -> Result<f64> {
        let g = self.g.max(other.g);
        let a = self.resized(g)?;
        let b = other.resized(g)?;
        let mut acc = 0.0;
        for (x, y) in a.hat.iter().zip(b.hat.iter()) {
            acc += (x * y.conj()).re;
        }
        Ok(acc * TAU * TAU)
    }

    pub fn norm(&self) -> f64 {
        let acc: f64 = self.hat.iter().map(|c| c.norm_sqr()).sum();
        (acc * TAU * TAU).sqrt()
    }

    /// Supremum over the sample grid (one refinement level finer than the
    /// band's minimum), used for the `W^{k,inf}` tables.
    pub fn grid_sup(&self) -> f64 {
        let g = fast_grid_size(2 * self.g);
        let fine = self.resized(g).expect("upsample");
        fine.to_grid().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

impl Spec2 {
    pub fn zeros(g: usize, band: f64) -> Self {
        Spec2 {
            g,
            band,
            hat: [Array2::default((g, g)), Array2::default((g, g))],
        }
    }

    pub fn component(&self, l: usize) -> SpecScalar2 {
        SpecScalar2 {
            g: self.g,
            band: self.band,
            hat: self.hat[l].clone(),
        }
    }

    pub fn from_components(x: SpecScalar2, y: SpecScalar2) -> Result<Spec2> {
        let band = x.band.max(y.band);
        let g = x.g.max(y.g);
        Ok(Spec2 {
            g,
            band,
            hat: [x.resized(g)?.hat, y.resized(g)?.hat],
        })
    }

    pub fn resized(&self, g: usize) -> Result<Spec2> {
        Ok(Spec2 {
            g,
            band: self.band,
            hat: [
                resize_hat(&self.hat[0], self.g, g, self.band)?,
                resize_hat(&self.hat[1], self.g, g, self.band)?,
            ],
        })
    }

    pub fn scaled(&self, a: f64) -> Spec2 {
        Spec2 {
            g: self.g,
            band: self.band,
            hat: [self.hat[0].mapv(|c| c * a), self.hat[1].mapv(|c| c * a)],
        }
    }

    pub fn add(&self, other: &Spec2) -> Result<Spec2> {
        let g = self.g.max(other.g);
        let a = self.resized(g)?;
        let b = other.resized(g)?;
        Ok(Spec2 {
            g,
            band: self.band.max(other.band),
            hat: [&a.hat[0] + &b.hat[0], &a.hat[1] + &b.hat[1]],
        })
    }

    pub fn sub(&self, other: &Spec2) -> Result<Spec2> {
        self.add(&other.scaled(-1.0))
    }

    pub fn laplacian(&self) -> Spec2 {
        Spec2 {
            g: self.g,
            band: self.band,
            hat: [
                self.component(0).laplacian().hat,
                self.component(1).laplacian().hat,
            ],
        }
    }

    /// `curl f = d1 f^2 - d2 f^1`.
    pub fn curl(&self) -> SpecScalar2 {
        let a = self.component(1).derivative(0);
        let b = self.component(0).derivative(1);
        SpecScalar2 {
            g: self.g,
            band: self.band,
            hat: &a.hat - &b.hat,
        }
    }

    /// Leray projection: per wavevector `v -> v - (k.v) k / |k|^2`; the mean
    /// mode is removed.
    pub fn leray(&self) -> Spec2 {
        let g = self.g;
        let mut out = self.clone();
        for i in 0..g {
            for j in 0..g {
                let k1 = wavenumber(i, g) as f64;
                let k2 = wavenumber(j, g) as f64;
                let v1 = self.hat[0][(i, j)];
                let v2 = self.hat[1][(i, j)];
                if k1 == 0.0 && k2 == 0.0 {
                    out.hat[0][(i, j)] = Complex64::default();
                    out.hat[1][(i, j)] = Complex64::default();
                } else {
                    let kk = k1 * k1 + k2 * k2;
                    let kv = (v1 * k1 + v2 * k2) / kk;
                    out.hat[0][(i, j)] = v1 - kv * k1;
                    out.hat[1][(i, j)] = v2 - kv * k2;
                }
            }
        }
        out
    }

    pub fn inner(&self, other: &Spec2) -> Result<f64> {
        Ok(self.component(0).inner(&other.component(0))?
            + self.component(1).inner(&other.component(1))?)
    }

    pub fn norm(&self) -> f64 {
        (self.component(0).norm().powi(2) + self.component(1).norm().powi(2)).sqrt()
    }

    /// `W^{m,2}` inner product, evaluated spectrally:
    /// `sum_{|alpha| <= m} <D^a f, D^a g>`.
    pub fn sobolev_inner(&self, other: &Spec2, m: usize) -> Result<f64> {
        let g = self.g.max(other.g);
        let a = self.resized(g)?;
        let b = other.resized(g)?;
        let mut acc = 0.0;
        for i in 0..g {
            for j in 0..g {
                let k1 = wavenumber(i, g) as f64;
                let k2 = wavenumber(j, g) as f64;
                let mut w = 0.0;
                for a1 in 0..=m {
                    for a2 in 0..=(m - a1) {
                        w += k1.powi(2 * a1 as i32) * k2.powi(2 * a2 as i32);
                    }
                }
                for l in 0..2 {
                    acc += w * (a.hat[l][(i, j)] * b.hat[l][(i, j)].conj()).re;
                }
            }
        }
        Ok(acc * TAU * TAU)
    }

    pub fn sobolev_norm(&self, m: usize) -> f64 {
        self.sobolev_inner(self, m).expect("same grid").sqrt()
    }

    /// `W^{k,inf}` norm estimated as the supremum over multi-indices
    /// `|alpha| <= k` of the grid sup of `D^alpha f`, per component.
    pub fn sup_norm_wk(&self, k: usize) -> f64 {
        let mut best = 0.0_f64;
        for l in 0..2 {
            let base = self.component(l);
            for a1 in 0..=k {
                for a2 in 0..=(k - a1) {
                    let mut d = base.clone();
                    for _ in 0..a1 {
                        d = d.derivative(0);
                    }
                    for _ in 0..a2 {
                        d = d.derivative(1);
                    }
                    best = best.max(d.grid_sup());
                }
            }
        }
        best
    }

    pub fn max_component_wavenumber(&self) -> i64 {
        let mut best = 0;
        for l in 0..2 {
            for ((i, j), v) in self.hat[l].indexed_iter() {
                if v.norm_sqr() > 0.0 {
                    best = best
                        .max(wavenumber(i, self.g).abs())
                        .max(wavenumber(j, self.g).abs());
                }
            }
        }
        best
    }
}

fn resize_hat(
    hat: &Array2<Complex64>,
    from: usize,
    to: usize,
    band: f64,
) -> Result<Array2<Complex64>> {
    if from == to {
        return Ok(hat.clone());
    }
    let limit = (to - 1) / 2;
    if to < from && (band.ceil() as usize) > limit {
        return Err(CoreError::BandViolation(format!(
            "cannot shrink a band-{band} field onto a {to}-point grid"
        )));
    }
    let mut out = Array2::default((to, to));
    for i in 0..from {
        let k1 = wavenumber(i, from);
        if k1.unsigned_abs() as usize > limit.min((from - 1) / 2) {
            continue;
        }
        for j in 0..from {
            let k2 = wavenumber(j, from);
            if k2.unsigned_abs() as usize > limit.min((from - 1) / 2) {
                continue;
            }
            let v = hat[(i, j)];
            if v == Complex64::default() {
                continue;
            }
            let ni = k1.rem_euclid(to as i64) as usize;
            let nj = k2.rem_euclid(to as i64) as usize;
            out[(ni, nj)] = v;
        }
    }
    Ok(out)
}

/// Advection `L_phi f = sum_j phi^j d_j f`, exact within the combined band.
pub fn advect(phi: &Spec2, f: &Spec2) -> Result<Spec2> {
    let band = phi.band + f.band;
    let g = grid_for_band(band);
    let phi_g: Vec<Array2<f64>> = (0..2).map(|l| phi.component(l).resized(g).unwrap().to_grid()).collect();
    let mut out_comps = Vec::with_capacity(2);
    for l in 0..2 {
        let mut acc = Array2::<f64>::zeros((g, g));
        for j in 0..2 {
            let dj = f.component(l).derivative(j).resized(g)?.to_grid();
            acc = acc + &phi_g[j] * &dj;
        }
        out_comps.push(SpecScalar2::from_grid(&acc, band));
    }
    Spec2::from_components(out_comps.remove(0), out_comps.remove(0))
}

/// Advection of a scalar: `L_phi w = sum_j phi^j d_j w`.
pub fn advect_scalar(phi: &Spec2, w: &SpecScalar2) -> Result<SpecScalar2> {
    let band = phi.band + w.band;
    let g = grid_for_band(band);
    let mut acc = Array2::<f64>::zeros((g, g));
    for j in 0..2 {
        let pj = phi.component(j).resized(g)?.to_grid();
        let dj = w.derivative(j).resized(g)?.to_grid();
        acc = acc + &pj * &dj;
    }
    Ok(SpecScalar2::from_grid(&acc, band))
}

/// Stretching `T_g f = sum_j f^j grad g^j`.
pub fn stretch(gfield: &Spec2, f: &Spec2) -> Result<Spec2> {
    let band = gfield.band + f.band;
    let g = grid_for_band(band);
    let f_g: Vec<Array2<f64>> = (0..2).map(|j| f.component(j).resized(g).unwrap().to_grid()).collect();
    let mut out_comps = Vec::with_capacity(2);
    for l in 0..2 {
        let mut acc = Array2::<f64>::zeros((g, g));
        for j in 0..2 {
            // (T_g f)^l = sum_j f^j d_l g^j
            let dl = gfield.component(j).derivative(l).resized(g)?.to_grid();
            acc = acc + &f_g[j] * &dl;
        }
        out_comps.push(SpecScalar2::from_grid(&acc, band));
    }
    Spec2::from_components(out_comps.remove(0), out_comps.remove(0))
}

/// Adjoint of the stretching term: pointwise Jacobian of `g` applied to `f`,
/// `(T_g^* f)^j = sum_l d_l g^j f^l`.
pub fn stretch_adjoint(gfield: &Spec2, f: &Spec2) -> Result<Spec2> {
    let band = gfield.band + f.band;
    let g = grid_for_band(band);
    let f_g: Vec<Array2<f64>> = (0..2).map(|l| f.component(l).resized(g).unwrap().to_grid()).collect();
    let mut out_comps = Vec::with_capacity(2);
    for j in 0..2 {
        let mut acc = Array2::<f64>::zeros((g, g));
        for l in 0..2 {
            let dl = gfield.component(j).derivative(l).resized(g)?.to_grid();
            acc = acc + &f_g[l] * &dl;
        }
        out_comps.push(SpecScalar2::from_grid(&acc, band));
    }
    Spec2::from_components(out_comps.remove(0), out_comps.remove(0))
}
