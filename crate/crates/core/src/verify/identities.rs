//! Machine-precision identity suite over both geometries, plus the disk
//! basis certification (eigen-residuals, boundary conditions, Gram matrix,
//! smallest eigenvalue against an independent oracle) and the Green's
//! identity check.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;

use crate::disk::{build_disk_basis, DiskBasis};
use crate::error::Result;
use crate::field::{
    apply_fractional_stokes, as_inner, as_norm, galerkin_project, SobolevIndex, SpectralField,
    StokesBasis,
};
use crate::noise::make_torus_xi;
use crate::ops::TorusWorkspace;
use crate::rng::CounterRng;
use crate::torus::fourier::{advect, Spec2, SpecScalar2};
use crate::torus::{build_torus_basis, TorusBasis};
use crate::verify::{CheckStatus, VerificationReport};

pub const TOL_EXACT: f64 = 1e-11;
pub const TOL_QUADRATURE: f64 = 1e-9;
pub const TOL_COEFF: f64 = 1e-12;
pub const TOL_COMMUTATION: f64 = 1e-8;
pub const TOL_DISK_EIGEN: f64 = 1e-6;
pub const TOL_DISK_BOUNDARY: f64 = 1e-8;
pub const TOL_DISK_GRAM: f64 = 1e-8;
pub const TOL_DISK_LAMBDA1: f64 = 1e-8;
pub const TOL_GREENS: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct IdentityConfig {
    pub torus_k: u32,
    pub torus_grid: usize,
    pub disk_n: u32,
    pub disk_m: u32,
    pub seed: u64,
    pub samples: usize,
}

impl Default for IdentityConfig {
    fn default() -> Self {
        IdentityConfig {
            torus_k: 8,
            torus_grid: 32,
            disk_n: 6,
            disk_m: 6,
            seed: 2024,
            samples: 20,
        }
    }
}

fn report(
    id: &str,
    anchor: &str,
    measure: f64,
    threshold: f64,
    samples: usize,
    resolutions: Vec<String>,
    seeds: Vec<u64>,
) -> VerificationReport {
    VerificationReport {
        check_id: id.into(),
        anchor: anchor.into(),
        status: if measure <= threshold {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        measure,
        threshold,
        samples,
        resolutions,
        seeds,
        notes: String::new(),
    }
}

/// Random real band-limited, generally non-solenoidal Fourier field.
pub fn random_spec2(g: usize, band: i64, rng: &CounterRng, stream: u64, base: u64) -> Spec2 {
    let mut out = Spec2::zeros(g, band as f64);
    let mut ctr = base;
    for kx in -band..=band {
        for ky in -band..=band {
            let n2 = kx * kx + ky * ky;
            if n2 == 0 || n2 > band * band {
                continue;
            }
            // canonical half only; conjugate mirror keeps the field real
            if !(kx > 0 || (kx == 0 && ky > 0)) {
                continue;
            }
            let (i, j) = (kx.rem_euclid(g as i64) as usize, ky.rem_euclid(g as i64) as usize);
            let (im, jm) = (
                (-kx).rem_euclid(g as i64) as usize,
                (-ky).rem_euclid(g as i64) as usize,
            );
            for l in 0..2 {
                let v = Complex64::new(
                    rng.gaussian(stream, ctr),
                    rng.gaussian(stream, ctr + 1),
                );
                ctr += 2;
                out.hat[l][(i, j)] += v;
                out.hat[l][(im, jm)] += v.conj();
            }
        }
    }
    out
}

fn random_field(basis: &TorusBasis, band: f64, rng: &CounterRng, stream: u64) -> SpectralField {
    let coeffs: Vec<f64> = basis
        .modes
        .iter()
        .enumerate()
        .map(|(i, m)| {
            if m.lambda.sqrt() <= band {
                rng.gaussian(stream, i as u64)
            } else {
                0.0
            }
        })
        .collect();
    SpectralField::new(basis.id().clone(), coeffs).expect("finite")
}

fn random_coeffs(n: usize, rng: &CounterRng, stream: u64) -> Vec<f64> {
    (0..n).map(|k| rng.gaussian(stream, k as u64)).collect()
}

// ---------------------------------------------------------------------------
// torus identities
// ---------------------------------------------------------------------------

fn torus_curl_leray(cfg: &IdentityConfig) -> VerificationReport {
    let rng = CounterRng::new(cfg.seed, "curl-leray");
    let mut worst = 0.0_f64;
    let mut resolutions = Vec::new();
    for (ri, gmul) in [1usize, 2].iter().enumerate() {
        let g = cfg.torus_grid * gmul;
        resolutions.push(format!("G={g}"));
        for s in 0..cfg.samples {
            let f = random_spec2(g, cfg.torus_k as i64, &rng, (ri * cfg.samples + s) as u64, 0);
            let lhs = f.leray().curl();
            let rhs = f.curl();
            let diff = lhs
                .hat
                .iter()
                .zip(rhs.hat.iter())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            worst = worst.max(diff / rhs.norm().max(1e-300));
        }
    }
    report(
        "torus.curl_leray",
        "curl passes through the Leray projection",
        worst,
        TOL_EXACT,
        2 * cfg.samples,
        resolutions,
        vec![cfg.seed],
    )
}

fn torus_salt_projection(cfg: &IdentityConfig) -> Result<VerificationReport> {
    let rng = CounterRng::new(cfg.seed, "salt-projection");
    let mut worst = 0.0_f64;
    let mut resolutions = Vec::new();
    for (ri, gmul) in [1usize, 2].iter().enumerate() {
        let g = cfg.torus_grid * gmul;
        resolutions.push(format!("G={g}"));
        let basis = Arc::new(build_torus_basis(2, cfg.torus_k, g)?);
        let fam = make_torus_xi(&basis, 2, 3.0, 1.0, cfg.seed, 2, 2)?;
        let ws = TorusWorkspace::new(basis.clone(), &fam.members, &fam.stamp.to_string())?;
        for s in 0..cfg.samples {
            let stream = (ri * cfg.samples + s) as u64;
            // solenoidal-in-span plus gradient: band-limited input whose
            // solenoidal part the table resolves exactly
            let sol = ws.to_spec(&random_field(&basis, cfg.torus_k as f64 / 2.0, &rng, stream))?;
            let mut phi = SpecScalar2::zeros(g, cfg.torus_k as f64 / 2.0);
            let half_band = (cfg.torus_k / 2) as i64;
            let mut ctr = 10_000;
            for kx in -half_band..=half_band {
                for ky in -half_band..=half_band {
                    if kx * kx + ky * ky == 0 || !(kx > 0 || (kx == 0 && ky > 0)) {
                        continue;
                    }
                    let v = Complex64::new(
                        rng.gaussian(stream, ctr),
                        rng.gaussian(stream, ctr + 1),
                    );
                    ctr += 2;
                    let (i, j) =
                        (kx.rem_euclid(g as i64) as usize, ky.rem_euclid(g as i64) as usize);
                    let (im, jm) = (
                        (-kx).rem_euclid(g as i64) as usize,
                        (-ky).rem_euclid(g as i64) as usize,
                    );
                    phi.hat[(i, j)] += v;
                    phi.hat[(im, jm)] += v.conj();
                }
            }
            let grad = Spec2::from_components(phi.derivative(0), phi.derivative(1))?;
            let full = sol.add(&grad)?;
            for i in 0..2 {
                let direct = ws.project(&ws.salt(i, &full)?)?;
                let pfull = ws.to_spec(&ws.project(&full)?)?;
                let through = ws.project(&ws.salt(i, &pfull)?)?;
                let scale: f64 = direct.coeffs().iter().map(|c| c * c).sum::<f64>().sqrt();
                let diff: f64 = direct
                    .coeffs()
                    .iter()
                    .zip(through.coeffs())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                worst = worst.max(diff / scale.max(1e-300));
            }
        }
    }
    Ok(report(
        "torus.salt_projection",
        "projected transport-stretching operator is blind to gradient parts",
        worst,
        TOL_EXACT,
        2 * cfg.samples,
        resolutions,
        vec![cfg.seed],
    ))
}

fn torus_curl_salt(cfg: &IdentityConfig) -> Result<VerificationReport> {
    let rng = CounterRng::new(cfg.seed, "curl-salt");
    let mut worst = 0.0_f64;
    let mut resolutions = Vec::new();
    for (ri, gmul) in [1usize, 2].iter().enumerate() {
        let g = cfg.torus_grid * gmul;
        resolutions.push(format!("G={g}"));
        let basis = Arc::new(build_torus_basis(2, cfg.torus_k, g)?);
        let fam = make_torus_xi(&basis, 2, 3.0, 1.0, cfg.seed, 2, 2)?;
        let ws = TorusWorkspace::new(basis.clone(), &fam.members, &fam.stamp.to_string())?;
        for s in 0..cfg.samples {
            let stream = (ri * cfg.samples + s) as u64;
            let f = ws.to_spec(&random_field(&basis, cfg.torus_k as f64 / 2.0, &rng, stream))?;
            for i in 0..2 {
                let lhs = ws.salt(i, &f)?.curl();
                let rhs = ws.advect_curl(i, &f.curl())?;
                let gg = lhs.g.max(rhs.g);
                let diff = (&lhs.resized(gg)?.hat - &rhs.resized(gg)?.hat)
                    .iter()
                    .map(|c| c.norm_sqr())
                    .sum::<f64>()
                    .sqrt()
                    * crate::torus::fourier::TAU;
                worst = worst.max(diff / lhs.norm().max(1e-300));
            }
        }
    }
    Ok(report(
        "torus.curl_salt",
        "vorticity of the transport-stretching operator is pure transport",
        worst,
        TOL_QUADRATURE,
        2 * cfg.samples,
        resolutions,
        vec![cfg.seed],
    ))
}

fn torus_advection_symmetry(cfg: &IdentityConfig) -> Result<Vec<VerificationReport>> {
    let rng = CounterRng::new(cfg.seed, "advect");
    let mut worst_anti = 0.0_f64;
    let mut worst_cancel = 0.0_f64;
    let mut resolutions = Vec::new();
    for (ri, gmul) in [1usize, 2].iter().enumerate() {
        let g = cfg.torus_grid * gmul;
        resolutions.push(format!("G={g}"));
        let basis = Arc::new(build_torus_basis(2, cfg.torus_k, g)?);
        let ws = TorusWorkspace::new(basis.clone(), &[], "none")?;
        for s in 0..cfg.samples {
            let stream = (ri * cfg.samples + s) as u64 * 3;
            let phi = ws.to_spec(&random_field(&basis, cfg.torus_k as f64, &rng, stream))?;
            let f = ws.to_spec(&random_field(&basis, cfg.torus_k as f64, &rng, stream + 1))?;
            let gfull = ws.to_spec(&random_field(&basis, cfg.torus_k as f64, &rng, stream + 2))?;
            let scale = phi.norm() * f.norm() * gfull.norm();
            let lf = advect(&phi, &f)?;
            let lg = advect(&phi, &gfull)?;
            worst_anti = worst_anti
                .max((lf.inner(&gfull)? + lg.inner(&f)?).abs() / scale.max(1e-300));
            worst_cancel =
                worst_cancel.max(lf.inner(&f)?.abs() / (phi.norm() * f.norm() * f.norm()));
        }
    }
    Ok(vec![
        report(
            "torus.advect_antisym",
            "advection pairing is antisymmetric for solenoidal transport",
            worst_anti,
            TOL_QUADRATURE,
            2 * cfg.samples,
            resolutions.clone(),
            vec![cfg.seed],
        ),
        report(
            "torus.advect_cancel",
            "advection has zero energy pairing",
            worst_cancel,
            TOL_QUADRATURE,
            2 * cfg.samples,
            resolutions,
            vec![cfg.seed],
        ),
    ])
}

/// High-order commutation rearrangement on the torus, k in {1, 2}:
/// `A^k P B f = P B A^k f + (-1)^k P sum_j Delta^{k-j} [Delta, B] Delta^{j-1} f`.
fn torus_commutation(cfg: &IdentityConfig, k_order: u32) -> Result<VerificationReport> {
    let rng = CounterRng::new(cfg.seed, "commutation");
    let basis = Arc::new(build_torus_basis(2, cfg.torus_k, cfg.torus_grid)?);
    let fam = make_torus_xi(&basis, 2, 3.0, 1.0, cfg.seed, 2, 2)?;
    let ws = TorusWorkspace::new(basis.clone(), &fam.members, &fam.stamp.to_string())?;
    let samples = 50;
    let mut worst = 0.0_f64;
    // correlates occupy the lowest shells; keep f within the remaining band
    let f_band = cfg.torus_k as f64 - 2.0;
    for s in 0..samples {
        let u = random_field(&basis, f_band, &rng, (k_order as usize * samples + s) as u64);
        let i = s % 2;
        let f = ws.to_spec(&u)?;
        // left side: coefficients of P B f, then A^k diagonally
        let pbf = ws.project(&ws.salt(i, &f)?)?;
        let lhs = apply_fractional_stokes(basis.as_ref(), &pbf, SobolevIndex::new(k_order as f64)?)?;
        // right side, first term: P B (A^k f)
        let akf = apply_fractional_stokes(basis.as_ref(), &u, SobolevIndex::new(k_order as f64)?)?;
        let pbakf = ws.project(&ws.salt(i, &ws.to_spec(&akf)?)?)?;
        // right side, commutator sum
        let mut sum: Option<Spec2> = None;
        for j in 1..=k_order {
            let mut inner = f.clone();
            for _ in 0..(j - 1) {
                inner = inner.laplacian();
            }
            let mut term = ws.commutator_delta_salt(i, &inner)?;
            for _ in 0..(k_order - j) {
                term = term.laplacian();
            }
            sum = Some(match sum {
                None => term,
                Some(acc) => acc.add(&term)?,
            });
        }
        let sign = if k_order % 2 == 0 { 1.0 } else { -1.0 };
        let psum = ws.project(&sum.expect("k >= 1"))?.scaled(sign);
        let rhs = pbakf.add(&psum)?;
        let scale: f64 = lhs.coeffs().iter().map(|c| c * c).sum::<f64>().sqrt();
        let diff: f64 = lhs
            .coeffs()
            .iter()
            .zip(rhs.coeffs())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        worst = worst.max(diff / scale.max(1e-300));
    }
    Ok(report(
        &format!("torus.commutation_k{k_order}"),
        "iterated commutator rearrangement of the projected noise",
        worst,
        TOL_COMMUTATION,
        samples,
        vec![format!("K={} G={}", cfg.torus_k, cfg.torus_grid)],
        vec![cfg.seed],
    ))
}

// ---------------------------------------------------------------------------
// coefficient-space identities (geometry-independent)
// ---------------------------------------------------------------------------

fn spectral_checks(basis: &dyn StokesBasis, tag: &str, seed: u64) -> Result<Vec<VerificationReport>> {
    let rng = CounterRng::new(seed, "spectral");
    let n = basis.len();
    let samples = 30;
    let mut worst_semi = 0.0_f64;
    let mut worst_split = 0.0_f64;
    let mut worst_selfadj = 0.0_f64;
    let mut tail_violations = 0usize;
    let mut tail_checked = 0usize;
    let s_list = [0.0, 0.5, 1.0, 1.5, 2.0];
    for s in 0..samples {
        let f = SpectralField::new(
            basis.id().clone(),
            random_coeffs(n, &rng, 2 * s as u64),
        )?;
        let g = SpectralField::new(
            basis.id().clone(),
            random_coeffs(n, &rng, 2 * s as u64 + 1),
        )?;
        // semigroup
        let half = SobolevIndex::new(0.75)?;
        let once = apply_fractional_stokes(
            basis,
            &apply_fractional_stokes(basis, &f, half)?,
            half,
        )?;
        let direct = apply_fractional_stokes(basis, &f, SobolevIndex::new(1.5)?)?;
        let num: f64 = once
            .coeffs()
            .iter()
            .zip(direct.coeffs())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let den: f64 = direct.coeffs().iter().map(|c| c * c).sum::<f64>().sqrt();
        worst_semi = worst_semi.max(num / den.max(1e-300));
        // split inner product, p + q = 2s
        let sv = SobolevIndex::new(0.75)?;
        let want = as_inner(basis, &f, &g, sv)?;
        for (p, q) in [(1.5, 0.0), (1.0, 0.5)] {
            let fp = apply_fractional_stokes(basis, &f, SobolevIndex::new(p)?)?;
            let gq = apply_fractional_stokes(basis, &g, SobolevIndex::new(q)?)?;
            let got = as_inner(basis, &fp, &gq, SobolevIndex::new(0.0)?)?;
            worst_split = worst_split.max((want - got).abs() / want.abs().max(1e-300));
        }
        // projection self-adjointness in every tested inner product
        let ntrunc = 1 + (s % (n - 1));
        let pf = galerkin_project(basis, &f, ntrunc)?.field;
        let pg = galerkin_project(basis, &g, ntrunc)?.field;
        for &sv in &s_list {
            let si = SobolevIndex::new(sv)?;
            let a = as_inner(basis, &pf, &g, si)?;
            let b = as_inner(basis, &f, &pg, si)?;
            let scale = as_norm(basis, &f, si)? * as_norm(basis, &g, si)?;
            worst_selfadj = worst_selfadj.max((a - b).abs() / scale.max(1e-300));
        }
        // truncation tail bound for r < s, from the first eigenvalue >= 1
        let start = basis.first_index_lambda_ge_one().unwrap_or(0).max(1);
        let (r, sbig) = (0.5, 1.5);
        for ntrunc in [start, (start + n / 2).min(n - 1)] {
            // tail = f - P_n f
            let mut tailc = f.coeffs().to_vec();
            for c in tailc.iter_mut().take(ntrunc) {
                *c = 0.0;
            }
            let tail = SpectralField::new(basis.id().clone(), tailc)?;
            let lhs = as_norm(basis, &tail, SobolevIndex::new(r)?)?.powi(2);
            let lam_n = basis.eigenvalue(ntrunc - 1);
            let rhs = lam_n.powf(-2.0 * (sbig - r))
                * as_norm(basis, &f, SobolevIndex::new(sbig)?)?.powi(2);
            tail_checked += 1;
            if lhs > rhs * (1.0 + 1e-12) {
                tail_violations += 1;
            }
        }
    }
    Ok(vec![
        report(
            &format!("{tag}.semigroup"),
            "fractional powers compose additively in the exponent",
            worst_semi,
            TOL_COEFF,
            samples,
            vec![format!("n={n}")],
            vec![seed],
        ),
        report(
            &format!("{tag}.split_inner"),
            "graded inner product splits across any exponent partition",
            worst_split,
            TOL_COEFF,
            samples,
            vec![format!("n={n}")],
            vec![seed],
        ),
        report(
            &format!("{tag}.projection_selfadjoint"),
            "Galerkin truncation is self-adjoint in every graded inner product",
            worst_selfadj,
            TOL_COEFF,
            samples,
            vec![format!("n={n}")],
            vec![seed],
        ),
        report(
            &format!("{tag}.tail_bound"),
            "truncation tails contract by the gap eigenvalue power",
            tail_violations as f64,
            0.0,
            tail_checked,
            vec![format!("n={n}")],
            vec![seed],
        ),
    ])
}

// ---------------------------------------------------------------------------
// disk certification
// ---------------------------------------------------------------------------

/// Independent oracle for the first Dirichlet zero: power series of the
/// zeroth Bessel function plus bisection (no shared code with the basis
/// construction, which uses the downward recurrence).
pub fn series_bisect_j0_zero() -> f64 {
    let series = |x: f64| {
        let mut term = 1.0;
        let mut acc = 1.0;
        for j in 1..60 {
            term *= -(0.25 * x * x) / ((j * j) as f64);
            acc += term;
        }
        acc
    };
    let (mut lo, mut hi) = (2.0, 3.0);
    let mut flo = series(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = series(mid);
        if flo.signum() == fm.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Finite-difference Laplacian of every tabulated mode at the quadrature
/// nodes (fourth order, step `h`); the independent check of the
/// eigen-relation and the Green's identity input.
pub fn fd_laplacian_table(basis: &DiskBasis, h: f64) -> Vec<Array2<f64>> {
    let nodes = basis.nodes();
    let points: Vec<(f64, f64)> = (0..nodes).map(|n| basis.node_xy(n)).collect();
    let offsets = [
        (-2.0, 0.0, -1.0),
        (-1.0, 0.0, 16.0),
        (1.0, 0.0, 16.0),
        (2.0, 0.0, -1.0),
        (0.0, -2.0, -1.0),
        (0.0, -1.0, 16.0),
        (0.0, 1.0, 16.0),
        (0.0, 2.0, -1.0),
    ];
    let center_w = -30.0 * 2.0; // both axes share the center sample
    (0..basis.len())
        .map(|mode| {
            let mut acc = Array2::<f64>::zeros((nodes, 2));
            let center = basis.velocity_block(mode, &points);
            for (node, v) in center.iter().enumerate() {
                acc[(node, 0)] += center_w * v[0];
                acc[(node, 1)] += center_w * v[1];
            }
            for (dx, dy, w) in offsets {
                let shifted: Vec<(f64, f64)> = points
                    .iter()
                    .map(|&(x, y)| (x + dx * h, y + dy * h))
                    .collect();
                let vals = basis.velocity_block(mode, &shifted);
                for (node, v) in vals.iter().enumerate() {
                    acc[(node, 0)] += w * v[0];
                    acc[(node, 1)] += w * v[1];
                }
            }
            let scale = 1.0 / (12.0 * h * h);
            acc.mapv_inplace(|v| v * scale);
            acc
        })
        .collect()
}

pub struct DiskCertification {
    pub reports: Vec<VerificationReport>,
    pub basis: Arc<DiskBasis>,
    pub fd_laplacian: Vec<Array2<f64>>,
}

pub fn disk_certification(cfg: &IdentityConfig) -> Result<DiskCertification> {
    let basis = Arc::new(build_disk_basis(cfg.disk_n, cfg.disk_m, None, None)?);
    let resolution = vec![format!(
        "n_max={} m_max={} R={} T={}",
        cfg.disk_n,
        cfg.disk_m,
        basis.r_nodes.len(),
        basis.n_theta
    )];
    let mut reports = Vec::new();

    // smallest eigenvalue against the series-bisection oracle
    let oracle = series_bisect_j0_zero();
    let lam_err = (basis.eigenvalue(0) - oracle * oracle).abs() / (oracle * oracle);
    reports.push(report(
        "disk.lambda1",
        "smallest eigenvalue is the squared first Dirichlet zero",
        lam_err,
        TOL_DISK_LAMBDA1,
        1,
        resolution.clone(),
        vec![cfg.seed],
    ));

    // eigen-residual by independent finite differences
    let h = 5e-4;
    let fd = fd_laplacian_table(&basis, h);
    let mut worst_eig = 0.0_f64;
    for mode in 0..basis.len() {
        let lam = basis.eigenvalue(mode);
        let mut num = 0.0;
        let mut den = 0.0;
        for node in 0..basis.nodes() {
            let w = basis.node_weights[node];
            for c in 0..2 {
                let r = fd[mode][(node, c)] + lam * basis.val[(mode, node, c)];
                num += w * r * r;
                den += w * basis.val[(mode, node, c)] * basis.val[(mode, node, c)];
            }
        }
        worst_eig = worst_eig.max(num.sqrt() / (lam * den.sqrt()));
    }
    reports.push(report(
        "disk.eigen_residual",
        "velocities satisfy the eigen-relation of the Stokes operator",
        worst_eig,
        TOL_DISK_EIGEN,
        basis.len(),
        resolution.clone(),
        vec![cfg.seed],
    ));

    // boundary conditions: normal component and vorticity on the ring
    let mut worst_bc = 0.0_f64;
    for mode in 0..basis.len() {
        let sup = basis.interior_sup(mode);
        // interior vorticity scale
        let mut curl_sup = 0.0_f64;
        for node in 0..basis.nodes() {
            let c = basis.d1[(mode, node, 1, 0)] - basis.d1[(mode, node, 0, 1)];
            curl_sup = curl_sup.max(c.abs());
        }
        for jt in 0..basis.n_theta {
            let (x, y) = basis.boundary_xy(jt);
            let an = basis.bval[(mode, jt, 0)] * x + basis.bval[(mode, jt, 1)] * y;
            worst_bc = worst_bc.max(an.abs() / sup);
            worst_bc = worst_bc.max(basis.bcurl[(mode, jt)].abs() / curl_sup);
        }
    }
    reports.push(report(
        "disk.boundary",
        "slip and zero-vorticity conditions hold on the boundary ring",
        worst_bc,
        TOL_DISK_BOUNDARY,
        basis.len(),
        resolution.clone(),
        vec![cfg.seed],
    ));

    // Gram matrix
    let mut worst_gram = 0.0_f64;
    for i in 0..basis.len() {
        for j in i..basis.len() {
            let mut acc = 0.0;
            for node in 0..basis.nodes() {
                acc += basis.node_weights[node]
                    * (basis.val[(i, node, 0)] * basis.val[(j, node, 0)]
                        + basis.val[(i, node, 1)] * basis.val[(j, node, 1)]);
            }
            let expect = if i == j { 1.0 } else { 0.0 };
            worst_gram = worst_gram.max((acc - expect).abs());
        }
    }
    reports.push(report(
        "disk.gram",
        "velocities are orthonormal under the quadrature",
        worst_gram,
        TOL_DISK_GRAM,
        basis.len() * (basis.len() + 1) / 2,
        resolution.clone(),
        vec![cfg.seed],
    ));

    Ok(DiskCertification {
        reports,
        basis,
        fd_laplacian: fd,
    })
}

/// Green's identity with the free-boundary coefficients (`alpha = 2`,
/// `kappa = 1`): `<Delta f, phi> + <f, phi>_1 + <f, phi>_boundary = 0`,
/// each term by independent quadrature; the Laplacian by finite
/// differences.
pub fn disk_greens(cert: &DiskCertification, seed: u64, pairs: usize) -> VerificationReport {
    let basis = &cert.basis;
    let rng = CounterRng::new(seed, "greens");
    let n = basis.len();
    let mut worst = 0.0_f64;
    for s in 0..pairs {
        let cf = random_coeffs(n, &rng, 2 * s as u64);
        let dg = random_coeffs(n, &rng, 2 * s as u64 + 1);
        // term 1: <Delta f, phi> with the FD Laplacian
        let mut t1 = 0.0;
        // term 2: <f, phi>_1 = sum_j <d_j f, d_j phi> from the derivative tables
        let mut t2 = 0.0;
        for node in 0..basis.nodes() {
            let w = basis.node_weights[node];
            for c in 0..2 {
                let mut lap = 0.0;
                let mut pv = 0.0;
                let mut fd1 = [0.0; 2];
                let mut pd1 = [0.0; 2];
                for mode in 0..n {
                    if cf[mode] != 0.0 {
                        lap += cf[mode] * cert.fd_laplacian[mode][(node, c)];
                        fd1[0] += cf[mode] * basis.d1[(mode, node, c, 0)];
                        fd1[1] += cf[mode] * basis.d1[(mode, node, c, 1)];
                    }
                    if dg[mode] != 0.0 {
                        pv += dg[mode] * basis.val[(mode, node, c)];
                        pd1[0] += dg[mode] * basis.d1[(mode, node, c, 0)];
                        pd1[1] += dg[mode] * basis.d1[(mode, node, c, 1)];
                    }
                }
                t1 += w * lap * pv;
                t2 += w * (fd1[0] * pd1[0] + fd1[1] * pd1[1]);
            }
        }
        // term 3: boundary pairing
        let mut t3 = 0.0;
        let wt = 2.0 * std::f64::consts::PI / basis.n_theta as f64;
        for jt in 0..basis.n_theta {
            for c in 0..2 {
                let mut fb = 0.0;
                let mut pb = 0.0;
                for mode in 0..n {
                    fb += cf[mode] * basis.bval[(mode, jt, c)];
                    pb += dg[mode] * basis.bval[(mode, jt, c)];
                }
                t3 += wt * fb * pb;
            }
        }
        let resid = (t1 + t2 + t3).abs();
        let scale = t1.abs().max(t2.abs()).max(t3.abs()).max(1e-300);
        worst = worst.max(resid / scale);
    }
    report(
        "disk.greens",
        "integration by parts closes with the boundary friction term",
        worst,
        TOL_GREENS,
        pairs,
        vec![format!(
            "n_max={} m_max={} R={}",
            basis.n_max,
            basis.m_max,
            basis.r_nodes.len()
        )],
        vec![seed],
    )
}

/// Full identity suite at the configured resolutions.
pub fn identity_suite(cfg: &IdentityConfig) -> Result<Vec<VerificationReport>> {
    let mut reports = Vec::new();
    reports.push(torus_curl_leray(cfg));
    reports.push(torus_salt_projection(cfg)?);
    reports.push(torus_curl_salt(cfg)?);
    reports.extend(torus_advection_symmetry(cfg)?);
    reports.push(torus_commutation(cfg, 1)?);
    reports.push(torus_commutation(cfg, 2)?);
    let torus = build_torus_basis(2, cfg.torus_k, cfg.torus_grid)?;
    reports.extend(spectral_checks(&torus, "torus.spectral", cfg.seed)?);
    let cert = disk_certification(cfg)?;
    reports.extend(spectral_checks(cert.basis.as_ref(), "disk.spectral", cfg.seed)?);
    reports.push(disk_greens(&cert, cfg.seed, 50));
    reports.extend(cert.reports);
    reports.sort_by(|a, b| a.check_id.cmp(&b.check_id));
    Ok(reports)
}
