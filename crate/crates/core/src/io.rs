//! Run persistence: field records (CSV and a compact binary layout),
//! trajectory tables, eigen-table dumps, digests and run manifests.
//!
//! Every writer is deterministic: identical inputs produce byte-identical
//! files, which the manifests certify through content digests.

use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{CoreError, Result};
use crate::field::{BasisId, SpectralField};
use crate::sde::Trajectory;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

// ---------------------------------------------------------------------------
// spectral field records
// ---------------------------------------------------------------------------

/// Flat CSV record: `basis_id, n, c_1, ..., c_n` (RFC-4180 quoting).
pub fn field_to_csv(f: &SpectralField) -> String {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    let mut row: Vec<String> = vec![f.basis_id().0.clone(), f.order().to_string()];
    row.extend(f.coeffs().iter().map(|c| format!("{c:?}")));
    w.write_record(&row).expect("in-memory write");
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

pub fn field_from_csv(text: &str) -> Result<SpectralField> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes());
    let rec = r
        .records()
        .next()
        .ok_or_else(|| CoreError::Other("empty field record".into()))?
        .map_err(|e| CoreError::Other(format!("csv: {e}")))?;
    if rec.len() < 2 {
        return Err(CoreError::Other("field record needs id and length".into()));
    }
    let id = BasisId(rec[0].to_string());
    let n: usize = rec[1]
        .parse()
        .map_err(|e| CoreError::Other(format!("bad length: {e}")))?;
    if rec.len() != n + 2 {
        return Err(CoreError::Other(format!(
            "field record claims {n} coefficients but carries {}",
            rec.len() - 2
        )));
    }
    let coeffs = rec
        .iter()
        .skip(2)
        .map(|s| s.parse::<f64>().map_err(|e| CoreError::Other(e.to_string())))
        .collect::<Result<Vec<f64>>>()?;
    SpectralField::new(id, coeffs)
}

/// Compact binary layout: `u32 id_len | id bytes | u32 n | n * f64`, all
/// little-endian.
pub fn field_to_binary(f: &SpectralField) -> Vec<u8> {
    let id = f.basis_id().0.as_bytes();
    let mut out = Vec::with_capacity(8 + id.len() + 8 * f.order());
    out.extend((id.len() as u32).to_le_bytes());
    out.extend(id);
    out.extend((f.order() as u32).to_le_bytes());
    for c in f.coeffs() {
        out.extend(c.to_le_bytes());
    }
    out
}

pub fn field_from_binary(bytes: &[u8]) -> Result<SpectralField> {
    let fail = |m: &str| CoreError::Other(format!("binary field record: {m}"));
    if bytes.len() < 4 {
        return Err(fail("truncated header"));
    }
    let id_len = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
    let mut at = 4 + id_len;
    if bytes.len() < at + 4 {
        return Err(fail("truncated id"));
    }
    let id = String::from_utf8(bytes[4..4 + id_len].to_vec()).map_err(|_| fail("id not utf8"))?;
    let n = u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
    at += 4;
    if bytes.len() != at + 8 * n {
        return Err(fail("length mismatch"));
    }
    let coeffs = (0..n)
        .map(|i| f64::from_le_bytes(bytes[at + 8 * i..at + 8 * i + 8].try_into().unwrap()))
        .collect();
    SpectralField::new(BasisId(id), coeffs)
}

// ---------------------------------------------------------------------------
// trajectory and table exports
// ---------------------------------------------------------------------------

/// `t, l2, a_{s1}, a_{s2}, ...` with the recording exponents in the header.
pub fn trajectory_to_csv(traj: &Trajectory, s_halves: &[u32]) -> String {
    let mut out = String::from("t,l2");
    for h in s_halves {
        out.push_str(&format!(",a_{}", *h as f64 / 2.0));
    }
    out.push('\n');
    for (i, t) in traj.times.iter().enumerate() {
        out.push_str(&format!("{t:?},{:?}", traj.l2[i]));
        for col in &traj.norms {
            out.push_str(&format!(",{:?}", col[i]));
        }
        out.push('\n');
    }
    out
}

/// Disk eigen-table export: `n, m, branch, zero, lambda, normalization`.
pub fn disk_table_to_csv(basis: &crate::disk::DiskBasis) -> String {
    let mut out = String::from("n,m,branch,zero,lambda,normalization\n");
    for p in &basis.pairs {
        out.push_str(&format!(
            "{},{},{},{:?},{:?},{:?}\n",
            p.n,
            p.m,
            match p.branch {
                crate::disk::Trig::Cos => "cos",
                crate::disk::Trig::Sin => "sin",
            },
            p.zero,
            p.lambda,
            p.stream_scale
        ));
    }
    out
}

/// Torus basis manifest: dimension, K, grid and the mode-table hash.
pub fn torus_manifest(basis: &crate::torus::TorusBasis) -> String {
    use crate::field::StokesBasis;
    format!(
        "dimension = {}\nk_max = {}\ngrid = {}\nmodes = {}\ntable_hash = {}\n",
        basis.dim,
        basis.k_max,
        basis.grid,
        basis.len(),
        basis.table_hash()
    )
}

/// Torus grid-field export: `x1, x2, u1, u2` rows (2D only).
pub fn torus_grid_to_csv(basis: &crate::torus::TorusBasis, g: &crate::torus::GridField) -> String {
    let mut out = String::from("x1,x2,u1,u2\n");
    let n = basis.grid;
    for i in 0..n {
        for j in 0..n {
            let x1 = crate::torus::fourier::TAU * i as f64 / n as f64;
            let x2 = crate::torus::fourier::TAU * j as f64 / n as f64;
            out.push_str(&format!(
                "{x1:?},{x2:?},{:?},{:?}\n",
                g.comps[0][[i, j]],
                g.comps[1][[i, j]]
            ));
        }
    }
    out
}

/// Disk grid-field export: `r, theta, u1, u2` rows over the quadrature nodes.
pub fn disk_grid_to_csv(basis: &crate::disk::DiskBasis, g: &crate::disk::DiskGridField) -> String {
    let mut out = String::from("r,theta,u1,u2\n");
    for node in 0..basis.nodes() {
        let ri = node / basis.n_theta;
        let jt = node % basis.n_theta;
        let r = basis.r_nodes[ri];
        let theta = 2.0 * std::f64::consts::PI * jt as f64 / basis.n_theta as f64;
        out.push_str(&format!(
            "{r:?},{theta:?},{:?},{:?}\n",
            g.vals[(node, 0)],
            g.vals[(node, 1)]
        ));
    }
    out
}

/// Noise-family manifest: `i, amplitude-proxy, W^{k,inf}` norms per member.
pub fn xi_table_to_csv(table: &crate::noise::NormTable) -> String {
    let mut out = String::from("i");
    for k in 0..=table.k_max {
        out.push_str(&format!(",w{k}inf"));
    }
    out.push('\n');
    for (i, row) in table.rows.iter().enumerate() {
        out.push_str(&format!("{}", i + 1));
        for v in row {
            out.push_str(&format!(",{v:?}"));
        }
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// run manifests
// ---------------------------------------------------------------------------

/// Inventory-carrying manifest, written last so its presence marks a
/// complete output directory.
pub struct RunManifest {
    pub tool_version: String,
    pub config_echo: String,
    pub seeds: Vec<u64>,
    pub basis_hash: String,
    pub xi_stamp: String,
    pub started: String,
    pub finished: String,
    /// `(relative path, sha256)`
    pub files: Vec<(String, String)>,
}

impl RunManifest {
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str("[run]\n");
        out.push_str(&format!("tool_version = {}\n", self.tool_version));
        out.push_str(&format!("started = {}\n", self.started));
        out.push_str(&format!("finished = {}\n", self.finished));
        out.push_str(&format!("basis_hash = {}\n", self.basis_hash));
        out.push_str(&format!("xi_stamp = {}\n", self.xi_stamp));
        out.push_str(&format!(
            "seeds = {}\n",
            self.seeds
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(",")
        ));
        out.push_str("\n[config]\n");
        out.push_str(&self.config_echo);
        if !self.config_echo.ends_with('\n') {
            out.push('\n');
        }
        out.push_str("\n[files]\n");
        for (path, digest) in &self.files {
            out.push_str(&format!("{path} = sha256:{digest}\n"));
        }
        out
    }
}

/// Writes files into a directory, collecting digests; the manifest lands
/// last under `manifest.txt`.
pub struct OutputDir {
    root: PathBuf,
    files: Vec<(String, String)>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root)?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut f = std::fs::File::create(&path)?;
        f.write_all(bytes)?;
        self.files.push((name.to_string(), sha256_hex(bytes)));
        Ok(())
    }

    pub fn files(&self) -> &[(String, String)] {
        &self.files
    }

    pub fn finish(mut self, manifest: &mut RunManifest) -> Result<PathBuf> {
        manifest.files = std::mem::take(&mut self.files);
        let path = self.root.join("manifest.txt");
        std::fs::write(&path, manifest.render())?;
        Ok(path)
    }
}
