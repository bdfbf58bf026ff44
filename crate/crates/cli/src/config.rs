//! Run configuration: flat key-value TOML with sections, echoed verbatim
//! into run manifests. The documented schema ships as `configs/schema.toml`
//! at the repository root.

use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use serde::Deserialize;

use saltns_core::disk::{build_disk_basis, DiskBasis};
use saltns_core::noise::{make_disk_xi, make_torus_xi};
use saltns_core::ops::{DiskWorkspace, GalerkinSystem, TorusWorkspace};
use saltns_core::sde::{Form, InitialCondition, Integrator, NoiseMode, SdeConfig};
use saltns_core::torus::{build_torus_basis, TorusBasis};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub run: RunSection,
    pub basis: BasisSection,
    #[serde(default)]
    pub noise: NoiseSection,
    pub sde: Option<SdeSection>,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub ensemble: EnsembleSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub seed: Option<u64>,
    pub output: String,
    #[serde(default)]
    pub fail_on_blowup: bool,
    pub workers: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSection {
    pub geometry: String,
    pub dimension: Option<usize>,
    pub k_max: Option<u32>,
    pub grid: Option<usize>,
    pub n_max: Option<u32>,
    pub m_max: Option<u32>,
    pub radial_nodes: Option<usize>,
    pub angular_nodes: Option<usize>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub kind: Option<String>,
    pub count: Option<usize>,
    pub decay: Option<f64>,
    pub amplitude: Option<f64>,
    pub support_radius: Option<f64>,
    pub sigmas: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdeSection {
    pub truncation: Option<usize>,
    pub nu: f64,
    #[serde(default = "one")]
    pub beta: u32,
    pub form: String,
    pub integrator: String,
    #[serde(default = "yes")]
    pub nonlinear: bool,
    pub dt: f64,
    pub horizon: f64,
    #[serde(default = "ten")]
    pub record_stride: usize,
    pub record_s: Option<Vec<f64>>,
    #[serde(default)]
    pub track_balance: bool,
}

fn one() -> u32 {
    1
}
fn yes() -> bool {
    true
}
fn ten() -> usize {
    10
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub kind: Option<String>,
    pub amplitude: Option<f64>,
    pub decay: Option<f64>,
    pub index: Option<usize>,
    pub modes: Option<Vec<(usize, f64)>>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    pub paths: Option<usize>,
}

pub enum Geometry {
    Torus(Arc<TorusBasis>),
    Disk(Arc<DiskBasis>),
}

pub struct BuiltSystem {
    pub system: Box<dyn GalerkinSystem>,
    pub geometry: Geometry,
    pub basis_hash: String,
    pub xi_stamp: String,
    pub xi_table_csv: Option<String>,
    pub noise_mode: NoiseMode,
    pub warnings: Vec<String>,
}

pub struct LoadedConfig {
    pub file: FileConfig,
    pub raw_text: String,
    pub seed: u64,
    pub output: PathBuf,
}

pub fn load(path: &std::path::Path) -> anyhow::Result<LoadedConfig> {
    let raw_text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let file: FileConfig = toml::from_str(&raw_text).map_err(|e| anyhow!("config: {e}"))?;
    if let Some(s) = &file.sde {
        if s.dt <= 0.0 {
            bail!("config: key `sde.dt` must be positive, got {}", s.dt);
        }
        if s.horizon < 0.0 {
            bail!("config: key `sde.horizon` must be nonnegative");
        }
    }
    // all randomness flows from one master seed; generate and record when absent
    let seed = file.run.seed.unwrap_or_else(|| {
        use std::time::{SystemTime, UNIX_EPOCH};
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_nanos() as u64)
            .unwrap_or(1)
    });
    let root = std::env::var("SALTNS_OUTPUT_ROOT").unwrap_or_default();
    let output = if root.is_empty() {
        PathBuf::from(&file.run.output)
    } else {
        PathBuf::from(root).join(&file.run.output)
    };
    Ok(LoadedConfig {
        file,
        raw_text,
        seed,
        output,
    })
}

pub fn build_system(cfg: &LoadedConfig) -> anyhow::Result<BuiltSystem> {
    let b = &cfg.file.basis;
    match b.geometry.as_str() {
        "torus" => {
            let dim = b.dimension.unwrap_or(2);
            let k = b
                .k_max
                .ok_or_else(|| anyhow!("config: key `basis.k_max` required for the torus"))?;
            let grid = b.grid.unwrap_or((2 * k + 4) as usize);
            let basis = Arc::new(build_torus_basis(dim, k, grid)?);
            if dim != 2 {
                bail!("config: key `basis.dimension` must be 2 for simulation runs (3 is basis/transform only)");
            }
            let n = &cfg.file.noise;
            let (members, stamp, table, warnings, noise_mode) =
                match n.kind.as_deref().unwrap_or("off") {
                    "torus-modes" => {
                        let fam = make_torus_xi(
                            &basis,
                            n.count.unwrap_or(4),
                            n.decay.unwrap_or(3.0),
                            n.amplitude.unwrap_or(0.05),
                            cfg.seed,
                            5,
                            2,
                        )?;
                        (
                            fam.members,
                            fam.stamp.to_string(),
                            Some(saltns_core::io::xi_table_to_csv(&fam.table)),
                            fam.warnings,
                            NoiseMode::Salt,
                        )
                    }
                    "diagonal" => {
                        let sigmas = n.sigmas.clone().unwrap_or_else(|| vec![0.1]);
                        (
                            vec![],
                            format!("diagonal:{sigmas:?}"),
                            None,
                            vec![],
                            NoiseMode::DiagonalLinear(sigmas),
                        )
                    }
                    "off" => (vec![], "off".to_string(), None, vec![], NoiseMode::Off),
                    other => bail!(
                        "config: key `noise.kind` = `{other}`; accepted for the torus: torus-modes, diagonal, off"
                    ),
                };
            let hash = basis.table_hash();
            let ws = TorusWorkspace::new(basis.clone(), &members, &stamp)?;
            Ok(BuiltSystem {
                system: Box::new(ws),
                geometry: Geometry::Torus(basis),
                basis_hash: hash,
                xi_stamp: stamp,
                xi_table_csv: table,
                noise_mode,
                warnings,
            })
        }
        "disk" => {
            let n_max = b
                .n_max
                .ok_or_else(|| anyhow!("config: key `basis.n_max` required for the disk"))?;
            let m_max = b
                .m_max
                .ok_or_else(|| anyhow!("config: key `basis.m_max` required for the disk"))?;
            let basis = Arc::new(build_disk_basis(
                n_max,
                m_max,
                b.radial_nodes,
                b.angular_nodes,
            )?);
            let n = &cfg.file.noise;
            let (members, stamp, table, noise_mode) = match n.kind.as_deref().unwrap_or("off")
            {
                "disk-rings" => {
                    let fam = make_disk_xi(
                        n.count.unwrap_or(4),
                        n.support_radius.unwrap_or(0.8),
                        n.decay.unwrap_or(2.0),
                        n.amplitude.unwrap_or(0.05),
                        cfg.seed,
                        5,
                    )?;
                    (
                        fam.members,
                        fam.stamp.to_string(),
                        Some(saltns_core::io::xi_table_to_csv(&fam.table)),
                        NoiseMode::Salt,
                    )
                }
                "diagonal" => {
                    let sigmas = n.sigmas.clone().unwrap_or_else(|| vec![0.1]);
                    (
                        vec![],
                        format!("diagonal:{sigmas:?}"),
                        None,
                        NoiseMode::DiagonalLinear(sigmas),
                    )
                }
                "off" => (vec![], "off".to_string(), None, NoiseMode::Off),
                other => bail!(
                    "config: key `noise.kind` = `{other}`; accepted for the disk: disk-rings, diagonal, off"
                ),
            };
            let hash = basis.table_hash();
            let ws = DiskWorkspace::new(basis.clone(), &members, &stamp);
            Ok(BuiltSystem {
                system: Box::new(ws),
                geometry: Geometry::Disk(basis),
                basis_hash: hash,
                xi_stamp: stamp,
                xi_table_csv: table,
                noise_mode,
                warnings: vec![],
            })
        }
        other => bail!("config: key `basis.geometry` = `{other}`; accepted: torus, disk"),
    }
}

pub fn sde_config(
    cfg: &LoadedConfig,
    built: &BuiltSystem,
    seed: u64,
) -> anyhow::Result<SdeConfig> {
    let s = cfg
        .file
        .sde
        .as_ref()
        .ok_or_else(|| anyhow!("config: section `[sde]` required for simulation"))?;
    let form = match s.form.as_str() {
        "ito" => Form::Ito,
        "stratonovich" => Form::Stratonovich,
        other => bail!("config: key `sde.form` = `{other}`; accepted: ito, stratonovich"),
    };
    let integrator = match s.integrator.as_str() {
        "euler-maruyama" => Integrator::EulerMaruyama,
        "heun" => Integrator::Heun,
        "exponential-imex" => Integrator::ExponentialImex,
        other => bail!(
            "config: key `sde.integrator` = `{other}`; accepted: euler-maruyama, heun, exponential-imex"
        ),
    };
    let record_s_halves = s
        .record_s
        .clone()
        .unwrap_or_else(|| vec![0.5, 1.0])
        .into_iter()
        .map(|v| {
            let h = (2.0 * v).round();
            if (2.0 * v - h).abs() > 1e-12 || h < 0.0 {
                bail!("config: key `sde.record_s` entries must be nonnegative half-integers, got {v}")
            } else {
                Ok(h as u32)
            }
        })
        .collect::<anyhow::Result<Vec<u32>>>()?;
    Ok(SdeConfig {
        truncation: s.truncation.unwrap_or(built.system.n_modes()),
        nu: s.nu,
        beta: s.beta,
        form,
        integrator,
        noise: built.noise_mode.clone(),
        enable_nonlinear: s.nonlinear,
        dt: s.dt,
        horizon: s.horizon,
        record_stride: s.record_stride,
        record_s_halves,
        seed,
        blowup_factor: 1e6,
        track_balance: s.track_balance,
    })
}

pub fn initial_condition(cfg: &LoadedConfig) -> anyhow::Result<InitialCondition> {
    let i = &cfg.file.initial;
    Ok(match i.kind.as_deref().unwrap_or("random-band") {
        "single-mode" => InitialCondition::SingleMode {
            index: i.index.unwrap_or(0),
            amplitude: i.amplitude.unwrap_or(1.0),
        },
        "random-band" => InitialCondition::RandomBand {
            amplitude: i.amplitude.unwrap_or(1.0),
            decay: i.decay.unwrap_or(1.0),
        },
        "mixture" => InitialCondition::Mixture(
            i.modes
                .clone()
                .ok_or_else(|| anyhow!("config: key `initial.modes` required for mixture"))?,
        ),
        other => bail!(
            "config: key `initial.kind` = `{other}`; accepted: single-mode, random-band, mixture"
        ),
    })
}
