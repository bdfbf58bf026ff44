//! Ito-Stratonovich conversion study and strong-order diagnostics.
//!
//! Both schemes integrate the same trajectory family: a coarse Brownian
//! path is refined dyadically so every step size sees the identical
//! randomness. The corrected Euler-Maruyama (Ito) and Heun (Stratonovich)
//! runs approximate the same solution, so their terminal gap must shrink
//! with the step size; the study reports the log-log slope and enforces
//! monotone decrease.

use crate::error::Result;
use crate::noise::{refine, sample_path, BrownianPath};
use crate::ops::GalerkinSystem;
use crate::rng::split_seed;
use crate::sde::{run_with_path, Form, Integrator, NoiseMode, SdeConfig};
use crate::verify::calibration::{
    CONVERSION_SLOPE_BAND, EM_SELF_SLOPE_MIN, HEUN_SELF_SLOPE_BAND,
};
use crate::verify::{CheckStatus, VerificationReport};

#[derive(Debug, Clone)]
pub struct ConversionConfig {
    /// Step sizes `2^-e` for each exponent, ascending.
    pub dt_exponents: Vec<u32>,
    pub horizon: f64,
    pub paths: usize,
    pub seed: u64,
    pub truncation: usize,
    pub nu: f64,
    pub beta: u32,
    pub enable_nonlinear: bool,
    pub noise: NoiseMode,
    /// Integrating factor for the viscous part in both schemes.
    pub imex: bool,
}

fn l2_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn regression_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

fn scheme_cfg(cfg: &ConversionConfig, form: Form, dt: f64) -> SdeConfig {
    SdeConfig {
        truncation: cfg.truncation,
        nu: cfg.nu,
        beta: cfg.beta,
        form,
        integrator: if cfg.imex {
            Integrator::ExponentialImex
        } else if form == Form::Ito {
            Integrator::EulerMaruyama
        } else {
            Integrator::Heun
        },
        noise: cfg.noise.clone(),
        enable_nonlinear: cfg.enable_nonlinear,
        dt,
        horizon: cfg.horizon,
        record_stride: usize::MAX,
        record_s_halves: vec![1],
        seed: cfg.seed,
        blowup_factor: 1e6,
        track_balance: false,
    }
}

/// Paths at every step size of the study, sharing one refinement family.
fn path_family(cfg: &ConversionConfig, path_seed: u64) -> Result<Vec<BrownianPath>> {
    let emin = *cfg.dt_exponents.iter().min().expect("nonempty");
    let streams = match &cfg.noise {
        NoiseMode::Salt => usize::MAX, // resolved by caller
        NoiseMode::DiagonalLinear(s) => s.len(),
        NoiseMode::Off => 1,
    };
    let _ = streams;
    let coarse_steps = (cfg.horizon * (1u64 << emin) as f64).round() as usize;
    let m = match &cfg.noise {
        NoiseMode::DiagonalLinear(s) => s.len(),
        _ => 8, // upper bound; unused streams are free
    };
    let mut chain = vec![sample_path(m, 2f64.powi(-(emin as i32)), coarse_steps, path_seed)?];
    let emax = *cfg.dt_exponents.iter().max().expect("nonempty");
    for _ in emin..emax {
        let next = refine(chain.last().expect("nonempty"));
        chain.push(next);
    }
    Ok(cfg
        .dt_exponents
        .iter()
        .map(|e| chain[(e - emin) as usize].clone())
        .collect())
}

pub struct ConversionOutcome {
    pub report: VerificationReport,
    /// `(dt, mean strong difference)` rows.
    pub rows: Vec<(f64, f64)>,
    pub slope: f64,
}

/// Strong difference at the horizon between corrected Euler-Maruyama and
/// Heun on identical paths, per step size.
pub fn conversion_study(
    system: &dyn GalerkinSystem,
    cfg: &ConversionConfig,
    u0: &[f64],
) -> Result<ConversionOutcome> {
    let mut diffs = vec![0.0; cfg.dt_exponents.len()];
    let mut blew_up = false;
    for p in 0..cfg.paths {
        let path_seed = split_seed(cfg.seed, "conversion-path", p as u64);
        let paths = path_family(cfg, path_seed)?;
        for (i, e) in cfg.dt_exponents.iter().enumerate() {
            let dt = 2f64.powi(-(*e as i32));
            let ito = run_with_path(system, &scheme_cfg(cfg, Form::Ito, dt), u0, &paths[i])?;
            let strat = run_with_path(
                system,
                &scheme_cfg(cfg, Form::Stratonovich, dt),
                u0,
                &paths[i],
            )?;
            blew_up |= ito.blew_up || strat.blew_up;
            diffs[i] += l2_diff(&ito.final_state, &strat.final_state);
        }
    }
    for d in diffs.iter_mut() {
        *d /= cfg.paths as f64;
    }
    let dts: Vec<f64> = cfg
        .dt_exponents
        .iter()
        .map(|e| 2f64.powi(-(*e as i32)))
        .collect();
    let xs: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = diffs.iter().map(|d| d.max(1e-300).ln()).collect();
    let slope = regression_slope(&xs, &ys);
    // exponents ascend => dt descends => differences must decrease
    let monotone = diffs.windows(2).all(|w| w[1] < w[0]);
    let (lo, hi) = CONVERSION_SLOPE_BAND;
    let status = if blew_up {
        CheckStatus::Info
    } else if slope >= lo && slope <= hi && monotone {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    };
    let rows: Vec<(f64, f64)> = dts.into_iter().zip(diffs.iter().copied()).collect();
    Ok(ConversionOutcome {
        report: VerificationReport {
            check_id: "conversion.slope".into(),
            anchor: "corrected Ito and Stratonovich schemes converge to the same solution"
                .into(),
            status,
            measure: slope,
            threshold: lo,
            samples: cfg.paths,
            resolutions: cfg
                .dt_exponents
                .iter()
                .map(|e| format!("dt=2^-{e}"))
                .collect(),
            seeds: vec![cfg.seed],
            notes: format!(
                "slope band [{lo}, {hi}]; monotone = {monotone}; blow-up = {blew_up}; rows = {rows:?}"
            ),
        },
        rows,
        slope,
    })
}

/// Self-convergence of one scheme against its own refined reference.
pub fn strong_order_study(
    system: &dyn GalerkinSystem,
    cfg: &ConversionConfig,
    u0: &[f64],
    form: Form,
) -> Result<ConversionOutcome> {
    let mut diffs = vec![0.0; cfg.dt_exponents.len()];
    let emax = *cfg.dt_exponents.iter().max().expect("nonempty");
    let ref_exp = emax + 2;
    for p in 0..cfg.paths {
        let path_seed = split_seed(cfg.seed, "order-path", p as u64);
        let mut wide = cfg.clone();
        wide.dt_exponents = (cfg
            .dt_exponents
            .iter()
            .copied()
            .chain(std::iter::once(ref_exp)))
        .collect();
        let paths = path_family(&wide, path_seed)?;
        let fine = paths.last().expect("reference");
        let dt_ref = 2f64.powi(-(ref_exp as i32));
        let reference = run_with_path(system, &scheme_cfg(cfg, form, dt_ref), u0, fine)?;
        for (i, e) in cfg.dt_exponents.iter().enumerate() {
            let dt = 2f64.powi(-(*e as i32));
            let t = run_with_path(system, &scheme_cfg(cfg, form, dt), u0, &paths[i])?;
            diffs[i] += l2_diff(&t.final_state, &reference.final_state);
        }
    }
    for d in diffs.iter_mut() {
        *d /= cfg.paths as f64;
    }
    let dts: Vec<f64> = cfg
        .dt_exponents
        .iter()
        .map(|e| 2f64.powi(-(*e as i32)))
        .collect();
    let xs: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = diffs.iter().map(|d| d.max(1e-300).ln()).collect();
    let slope = regression_slope(&xs, &ys);
    let (status, threshold, id, anchor) = match form {
        Form::Ito => (
            if slope >= EM_SELF_SLOPE_MIN {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            EM_SELF_SLOPE_MIN,
            "order.euler_maruyama",
            "Euler-Maruyama self-convergence at strong order one half",
        ),
        Form::Stratonovich => {
            let (lo, hi) = HEUN_SELF_SLOPE_BAND;
            (
                if slope >= lo && slope <= hi {
                    CheckStatus::Pass
                } else {
                    CheckStatus::Fail
                },
                lo,
                "order.heun",
                "Heun self-convergence at strong order about one",
            )
        }
    };
    let rows: Vec<(f64, f64)> = dts.into_iter().zip(diffs.iter().copied()).collect();
    Ok(ConversionOutcome {
        report: VerificationReport {
            check_id: id.into(),
            anchor: anchor.into(),
            status,
            measure: slope,
            threshold,
            samples: cfg.paths,
            resolutions: cfg
                .dt_exponents
                .iter()
                .map(|e| format!("dt=2^-{e}"))
                .collect(),
            seeds: vec![cfg.seed],
            notes: format!("rows = {rows:?}"),
        },
        rows,
        slope,
    })
}

/// Plot-ready CSV of a study's rows.
pub fn conversion_rows_csv(rows: &[(f64, f64)]) -> String {
    let mut out = String::from("dt,strong_difference\n");
    for (dt, d) in rows {
        out.push_str(&format!("{dt:?},{d:?}\n"));
    }
    out
}
