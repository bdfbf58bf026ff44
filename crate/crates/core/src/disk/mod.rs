//! Stokes eigenbasis on the unit disk with free-boundary Navier conditions
//! (`alpha = 2 kappa`, `kappa = 1`).
//!
//! Stream functions `psi_{n,m} = J_n(j_{n,m} r) {cos,sin}(n theta)` satisfy
//! `Delta psi = -lambda psi` with `psi = 0` on the boundary; the velocities
//! `a = perp-grad psi` are then divergence-free Stokes eigenfunctions with
//! `a . n = 0` and `curl a = 0` on the boundary. Cartesian derivatives of
//! every order are obtained through the ladder identities
//! `d_x u_n = j/2 (u_{n-1} - u_{n+1})`, `d_y u_n = i j/2 (u_{n-1} + u_{n+1})`
//! for `u_n = J_n(j r) e^{i n theta}`, which keeps evaluation stable down to
//! the disk center.

pub mod bessel;
pub mod polyfield;

use std::collections::BTreeMap;

use ndarray::{Array2, Array3, Array4};
use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::error::{CoreError, Result};
use crate::field::{BasisId, SpectralField, StokesBasis};
pub use crate::torus::Trig;
use bessel::{bessel_j_upto, bessel_zeros, gauss_legendre_unit};
use polyfield::PolyField;

pub const KAPPA: f64 = 1.0;
pub const ALPHA: f64 = 2.0;

#[derive(Debug, Clone)]
pub struct DiskEigenpair {
    /// Angular index `|n|`.
    pub n: u32,
    /// Radial index (1-based).
    pub m: u32,
    pub branch: Trig,
    /// Bessel zero `j_{n,m}`.
    pub zero: f64,
    /// `lambda = j^2`.
    pub lambda: f64,
    /// Scale making the velocity unit in `L^2`.
    pub stream_scale: f64,
}

/// Velocity samples on the quadrature nodes plus the boundary ring.
#[derive(Debug, Clone)]
pub struct DiskGridField {
    /// `[node, component]`, node index = `ri * n_theta + tj`.
    pub vals: Array2<f64>,
    /// `[tj, component]` samples at `r = 1`.
    pub boundary: Array2<f64>,
}

impl DiskGridField {
    pub fn zeros(nodes: usize, ntheta: usize) -> Self {
        DiskGridField {
            vals: Array2::zeros((nodes, 2)),
            boundary: Array2::zeros((ntheta, 2)),
        }
    }
}

#[derive(Debug)]
pub struct DiskBasis {
    id: BasisId,
    pub n_max: u32,
    pub m_max: u32,
    pub pairs: Vec<DiskEigenpair>,
    eigenvalues: Vec<f64>,
    // quadrature
    pub r_nodes: Vec<f64>,
    pub r_weights: Vec<f64>,
    pub n_theta: usize,
    pub node_weights: Vec<f64>,
    /// velocity values `[mode, node, comp]`
    pub val: Array3<f64>,
    /// first derivatives `[mode, node, comp, axis]`
    pub d1: Array4<f64>,
    /// second derivatives `[mode, node, comp, xx|xy|yy]`
    pub d2: Array4<f64>,
    /// boundary velocity `[mode, tj, comp]`
    pub bval: Array3<f64>,
    /// boundary vorticity `[mode, tj]`
    pub bcurl: Array2<f64>,
}

impl StokesBasis for DiskBasis {
    fn id(&self) -> &BasisId {
        &self.id
    }
    fn len(&self) -> usize {
        self.pairs.len()
    }
    fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }
}

type Ladder = BTreeMap<i64, Complex64>;

fn ladder_dx(j: f64, e: &Ladder) -> Ladder {
    let mut out = Ladder::new();
    for (&q, &c) in e {
        *out.entry(q - 1).or_insert(Complex64::default()) += c * (0.5 * j);
        *out.entry(q + 1).or_insert(Complex64::default()) -= c * (0.5 * j);
    }
    out
}

fn ladder_dy(j: f64, e: &Ladder) -> Ladder {
    let mut out = Ladder::new();
    let f = Complex64::new(0.0, 0.5 * j);
    for (&q, &c) in e {
        *out.entry(q - 1).or_insert(Complex64::default()) += c * f;
        *out.entry(q + 1).or_insert(Complex64::default()) += c * f;
    }
    out
}

/// All ladder expansions of `D^alpha u_n` needed for velocity values plus
/// first and second velocity derivatives (psi-derivatives up to order 3).
struct PsiLadders {
    dx: Ladder,
    dy: Ladder,
    dxx: Ladder,
    dxy: Ladder,
    dyy: Ladder,
    dxxx: Ladder,
    dxxy: Ladder,
    dxyy: Ladder,
    dyyy: Ladder,
}

impl PsiLadders {
    fn build(n: u32, j: f64) -> Self {
        let mut base = Ladder::new();
        base.insert(n as i64, Complex64::new(1.0, 0.0));
        let dx = ladder_dx(j, &base);
        let dy = ladder_dy(j, &base);
        let dxx = ladder_dx(j, &dx);
        let dxy = ladder_dy(j, &dx);
        let dyy = ladder_dy(j, &dy);
        PsiLadders {
            dxxx: ladder_dx(j, &dxx),
            dxxy: ladder_dy(j, &dxx),
            dxyy: ladder_dy(j, &dxy),
            dyyy: ladder_dy(j, &dyy),
            dx,
            dy,
            dxx,
            dxy,
            dyy,
        }
    }
}

/// Evaluate a ladder expansion at `(r, theta)` given a table of
/// `J_0..J_qmax` at `j * r`.
fn eval_ladder(e: &Ladder, jtab: &[f64], theta: f64) -> Complex64 {
    let mut acc = Complex64::default();
    for (&q, &c) in e {
        let aq = q.unsigned_abs() as usize;
        let mut jv = jtab[aq];
        if q < 0 && aq % 2 == 1 {
            jv = -jv;
        }
        let phase = Complex64::from_polar(1.0, q as f64 * theta);
        acc += c * jv * phase;
    }
    acc
}

fn branch_part(v: Complex64, branch: Trig) -> f64 {
    match branch {
        Trig::Cos => v.re,
        Trig::Sin => v.im,
    }
}

/// Default quadrature sizes. The radial count is chosen so that products of
/// tabulated eigenfields integrate to machine precision at `m_max = 6`
/// (Gauss-Legendre needs roughly `j_{max}/pi` points per oscillation plus
/// margin; `2 m_max + 8` falls measurably short of the certification
/// tolerances).
pub fn default_quadrature(n_max: u32, m_max: u32) -> (usize, usize) {
    ((3 * m_max + 10) as usize, (4 * n_max + 8) as usize)
}

/// Stream-function eigenpairs `(n, m)` for `n <= n_max`, `m <= m_max`, with
/// cos/sin branches for `n >= 1`, sorted by eigenvalue.
pub fn dirichlet_stream_eigenpairs(n_max: u32, m_max: u32) -> Result<Vec<DiskEigenpair>> {
    if m_max < 1 {
        return Err(CoreError::Construction("m_max must be at least 1".into()));
    }
    let mut pairs = Vec::new();
    for n in 0..=n_max {
        let zeros = bessel_zeros(n as usize, m_max as usize).map_err(|e| {
            CoreError::Construction(format!("Bessel zeros failed for n={n}: {e}"))
        })?;
        for m in 1..=m_max {
            let j = zeros[(m - 1) as usize];
            let lambda = j * j;
            // || psi ||^2 = ang * J_{n+1}(j)^2 / 2, ang = 2 pi (n = 0) or pi
            let ang = if n == 0 {
                2.0 * std::f64::consts::PI
            } else {
                std::f64::consts::PI
            };
            let jn1 = bessel::bessel_j(n as usize + 1, j);
            let psi_norm = (ang * jn1 * jn1 / 2.0).sqrt();
            let stream_scale = 1.0 / (lambda.sqrt() * psi_norm);
            let branches: &[Trig] = if n == 0 {
                &[Trig::Cos]
            } else {
                &[Trig::Cos, Trig::Sin]
            };
            for &branch in branches {
                pairs.push(DiskEigenpair {
                    n,
                    m,
                    branch,
                    zero: j,
                    lambda,
                    stream_scale,
                });
            }
        }
    }
    pairs.sort_by(|a, b| {
        a.lambda
            .partial_cmp(&b.lambda)
            .unwrap()
            .then(a.n.cmp(&b.n))
            .then(a.branch.cmp(&b.branch))
    });
    Ok(pairs)
}

pub fn build_disk_basis(
    n_max: u32,
    m_max: u32,
    radial_nodes: Option<usize>,
    angular_nodes: Option<usize>,
) -> Result<DiskBasis> {
    let (dr, dt) = default_quadrature(n_max, m_max);
    let nr = radial_nodes.unwrap_or(dr);
    let ntheta = angular_nodes.unwrap_or(dt);
    let pairs = dirichlet_stream_eigenpairs(n_max, m_max)?;
    let eigenvalues: Vec<f64> = pairs.iter().map(|p| p.lambda).collect();
    let (r_nodes, r_weights) = gauss_legendre_unit(nr);
    let wt = 2.0 * std::f64::consts::PI / ntheta as f64;
    let nodes = nr * ntheta;
    let mut node_weights = vec![0.0; nodes];
    for (i, (&r, &wr)) in r_nodes.iter().zip(&r_weights).enumerate() {
        for jt in 0..ntheta {
            node_weights[i * ntheta + jt] = wr * r * wt;
        }
    }
    let nmodes = pairs.len();
    let mut val = Array3::zeros((nmodes, nodes, 2));
    let mut d1 = Array4::zeros((nmodes, nodes, 2, 2));
    let mut d2 = Array4::zeros((nmodes, nodes, 2, 3));
    let mut bval = Array3::zeros((nmodes, ntheta, 2));
    let mut bcurl = Array2::zeros((nmodes, ntheta));

    for (mi, p) in pairs.iter().enumerate() {
        let lad = PsiLadders::build(p.n, p.zero);
        let qmax = p.n as usize + 3;
        let fill = |r: f64,
                    theta: f64,
                    out_val: &mut [f64],
                    out_d1: Option<&mut [f64]>,
                    out_d2: Option<&mut [f64]>,
                    out_curl: Option<&mut f64>| {
            let jtab = bessel_j_upto(qmax, p.zero * r);
            let s = p.stream_scale;
            let gx = branch_part(eval_ladder(&lad.dx, &jtab, theta), p.branch) * s;
            let gy = branch_part(eval_ladder(&lad.dy, &jtab, theta), p.branch) * s;
            // a = (-psi_y, psi_x)
            out_val[0] = -gy;
            out_val[1] = gx;
            let gxx = branch_part(eval_ladder(&lad.dxx, &jtab, theta), p.branch) * s;
            let gxy = branch_part(eval_ladder(&lad.dxy, &jtab, theta), p.branch) * s;
            let gyy = branch_part(eval_ladder(&lad.dyy, &jtab, theta), p.branch) * s;
            if let Some(o) = out_d1 {
                // d_axis a_comp: a_x = -psi_y, a_y = psi_x
                o[0] = -gxy; // d_x a_x
                o[1] = -gyy; // d_y a_x
                o[2] = gxx; // d_x a_y
                o[3] = gxy; // d_y a_y
            }
            if let Some(o) = out_d2 {
                let gxxx = branch_part(eval_ladder(&lad.dxxx, &jtab, theta), p.branch) * s;
                let gxxy = branch_part(eval_ladder(&lad.dxxy, &jtab, theta), p.branch) * s;
                let gxyy = branch_part(eval_ladder(&lad.dxyy, &jtab, theta), p.branch) * s;
                let gyyy = branch_part(eval_ladder(&lad.dyyy, &jtab, theta), p.branch) * s;
                o[0] = -gxxy; // a_x xx
                o[1] = -gxyy; // a_x xy
                o[2] = -gyyy; // a_x yy
                o[3] = gxxx; // a_y xx
                o[4] = gxxy; // a_y xy
                o[5] = gxyy; // a_y yy
            }
            if let Some(c) = out_curl {
                // curl a = psi_xx + psi_yy
                *c = gxx + gyy;
            }
        };
        for (ri, &r) in r_nodes.iter().enumerate() {
            for jt in 0..ntheta {
                let theta = wt * jt as f64;
                let node = ri * ntheta + jt;
                let mut v = [0.0; 2];
                let mut dd1 = [0.0; 4];
                let mut dd2 = [0.0; 6];
                fill(r, theta, &mut v, Some(&mut dd1), Some(&mut dd2), None);
                for c in 0..2 {
                    val[(mi, node, c)] = v[c];
                    for ax in 0..2 {
                        d1[(mi, node, c, ax)] = dd1[c * 2 + ax];
                    }
                    for k in 0..3 {
                        d2[(mi, node, c, k)] = dd2[c * 3 + k];
                    }
                }
            }
        }
        for jt in 0..ntheta {
            let theta = wt * jt as f64;
            let mut v = [0.0; 2];
            let mut curl = 0.0;
            fill(1.0, theta, &mut v, None, None, Some(&mut curl));
            bval[(mi, jt, 0)] = v[0];
            bval[(mi, jt, 1)] = v[1];
            bcurl[(mi, jt)] = curl;
        }
    }

    let id = BasisId(format!("disk:n={n_max}:m={m_max}:R={nr}:T={ntheta}"));
    Ok(DiskBasis {
        id,
        n_max,
        m_max,
        pairs,
        eigenvalues,
        r_nodes,
        r_weights,
        n_theta: ntheta,
        node_weights,
        val,
        d1,
        d2,
        bval,
        bcurl,
    })
}

impl DiskBasis {
    pub fn nodes(&self) -> usize {
        self.node_weights.len()
    }

    pub fn table_hash(&self) -> String {
        let mut h = Sha256::new();
        for p in &self.pairs {
            h.update(p.n.to_le_bytes());
            h.update(p.m.to_le_bytes());
            h.update([if p.branch == Trig::Cos { 0 } else { 1 }]);
            h.update(p.zero.to_bits().to_le_bytes());
            h.update(p.lambda.to_bits().to_le_bytes());
        }
        hex::encode(&h.finalize()[..16])
    }

    /// Cartesian coordinates of a quadrature node.
    pub fn node_xy(&self, node: usize) -> (f64, f64) {
        let ri = node / self.n_theta;
        let jt = node % self.n_theta;
        let r = self.r_nodes[ri];
        let theta = 2.0 * std::f64::consts::PI * jt as f64 / self.n_theta as f64;
        (r * theta.cos(), r * theta.sin())
    }

    pub fn boundary_xy(&self, jt: usize) -> (f64, f64) {
        let theta = 2.0 * std::f64::consts::PI * jt as f64 / self.n_theta as f64;
        (theta.cos(), theta.sin())
    }

    /// Stream function of a tabulated pair at polar coordinates.
    pub fn psi_at(&self, mode: usize, r: f64, theta: f64) -> f64 {
        let p = &self.pairs[mode];
        let jtab = bessel_j_upto(p.n as usize, p.zero * r);
        let ang = match p.branch {
            Trig::Cos => (p.n as f64 * theta).cos(),
            Trig::Sin => (p.n as f64 * theta).sin(),
        };
        p.stream_scale * jtab[p.n as usize] * ang
    }

    /// Velocity of a tabulated pair at an arbitrary Cartesian point (the
    /// formula extends smoothly past `r = 1`, which finite-difference
    /// stencils near the boundary rely on).
    pub fn velocity_at(&self, mode: usize, x: f64, y: f64) -> [f64; 2] {
        let p = &self.pairs[mode];
        let r = x.hypot(y);
        let theta = y.atan2(x);
        let lad = PsiLadders::build(p.n, p.zero);
        let jtab = bessel_j_upto(p.n as usize + 3, p.zero * r);
        let s = p.stream_scale;
        let gx = branch_part(eval_ladder(&lad.dx, &jtab, theta), p.branch) * s;
        let gy = branch_part(eval_ladder(&lad.dy, &jtab, theta), p.branch) * s;
        [-gy, gx]
    }

    /// Velocity of one mode at many points; amortizes the ladder setup.
    pub fn velocity_block(&self, mode: usize, points: &[(f64, f64)]) -> Vec<[f64; 2]> {
        let p = &self.pairs[mode];
        let lad = PsiLadders::build(p.n, p.zero);
        let s = p.stream_scale;
        points
            .iter()
            .map(|&(x, y)| {
                let r = x.hypot(y);
                let theta = y.atan2(x);
                let jtab = bessel_j_upto(p.n as usize + 3, p.zero * r);
                let gx = branch_part(eval_ladder(&lad.dx, &jtab, theta), p.branch) * s;
                let gy = branch_part(eval_ladder(&lad.dy, &jtab, theta), p.branch) * s;
                [-gy, gx]
            })
            .collect()
    }

    /// Velocity of a coefficient vector at an arbitrary point.
    pub fn field_at(&self, f: &SpectralField, x: f64, y: f64) -> Result<[f64; 2]> {
        f.check_bound(self)?;
        let mut out = [0.0; 2];
        for (mi, &c) in f.coeffs().iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let v = self.velocity_at(mi, x, y);
            out[0] += c * v[0];
            out[1] += c * v[1];
        }
        Ok(out)
    }

    pub fn to_grid(&self, f: &SpectralField) -> Result<DiskGridField> {
        f.check_bound(self)?;
        let mut out = DiskGridField::zeros(self.nodes(), self.n_theta);
        for (mi, &c) in f.coeffs().iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for node in 0..self.nodes() {
                out.vals[(node, 0)] += c * self.val[(mi, node, 0)];
                out.vals[(node, 1)] += c * self.val[(mi, node, 1)];
            }
            for jt in 0..self.n_theta {
                out.boundary[(jt, 0)] += c * self.bval[(mi, jt, 0)];
                out.boundary[(jt, 1)] += c * self.bval[(mi, jt, 1)];
            }
        }
        Ok(out)
    }

    /// Samples of a closed-form field on the quadrature nodes and ring.
    pub fn sample(&self, f: &PolyField) -> DiskGridField {
        let mut out = DiskGridField::zeros(self.nodes(), self.n_theta);
        for node in 0..self.nodes() {
            let (x, y) = self.node_xy(node);
            let v = f.eval(x, y);
            out.vals[(node, 0)] = v[0];
            out.vals[(node, 1)] = v[1];
        }
        for jt in 0..self.n_theta {
            let (x, y) = self.boundary_xy(jt);
            let v = f.eval(x, y);
            out.boundary[(jt, 0)] = v[0];
            out.boundary[(jt, 1)] = v[1];
        }
        out
    }

    /// `L^2` quadrature over the disk.
    pub fn quadrature_inner(&self, f: &DiskGridField, g: &DiskGridField) -> Result<f64> {
        if f.vals.dim() != g.vals.dim() || f.vals.nrows() != self.nodes() {
            return Err(CoreError::ShapeMismatch(
                "disk grid fields must share the basis quadrature".into(),
            ));
        }
        let mut acc = 0.0;
        for node in 0..self.nodes() {
            acc += self.node_weights[node]
                * (f.vals[(node, 0)] * g.vals[(node, 0)] + f.vals[(node, 1)] * g.vals[(node, 1)]);
        }
        Ok(acc)
    }

    /// `L^2(boundary)` inner product over the ring.
    pub fn boundary_inner(&self, f: &DiskGridField, g: &DiskGridField) -> Result<f64> {
        if f.boundary.nrows() != self.n_theta || g.boundary.nrows() != self.n_theta {
            return Err(CoreError::ShapeMismatch(
                "boundary rings must share the basis angular grid".into(),
            ));
        }
        let wt = 2.0 * std::f64::consts::PI / self.n_theta as f64;
        let mut acc = 0.0;
        for jt in 0..self.n_theta {
            acc += f.boundary[(jt, 0)] * g.boundary[(jt, 0)]
                + f.boundary[(jt, 1)] * g.boundary[(jt, 1)];
        }
        Ok(acc * wt)
    }

    /// Leray projection realized as expansion against the (orthonormal in
    /// `L^2_sigma`) eigenbasis.
    pub fn leray_project(&self, g: &DiskGridField) -> Result<SpectralField> {
        let mut coeffs = vec![0.0; self.pairs.len()];
        for (mi, c) in coeffs.iter_mut().enumerate() {
            let mut acc = 0.0;
            for node in 0..self.nodes() {
                acc += self.node_weights[node]
                    * (g.vals[(node, 0)] * self.val[(mi, node, 0)]
                        + g.vals[(node, 1)] * self.val[(mi, node, 1)]);
            }
            *c = acc;
        }
        SpectralField::new(self.id.clone(), coeffs)
    }

    /// Grid-computed `W^{m,2}` norm of a tabulated field, `m <= 2`.
    pub fn sobolev_norm(&self, f: &SpectralField, m: usize) -> Result<f64> {
        f.check_bound(self)?;
        let nodes = self.nodes();
        let mut acc = 0.0;
        for node in 0..nodes {
            let w = self.node_weights[node];
            for c in 0..2 {
                let mut v = 0.0;
                let mut g = [0.0; 2];
                let mut h = [0.0; 3];
                for (mi, &cf) in f.coeffs().iter().enumerate() {
                    if cf == 0.0 {
                        continue;
                    }
                    v += cf * self.val[(mi, node, c)];
                    if m >= 1 {
                        g[0] += cf * self.d1[(mi, node, c, 0)];
                        g[1] += cf * self.d1[(mi, node, c, 1)];
                    }
                    if m >= 2 {
                        h[0] += cf * self.d2[(mi, node, c, 0)];
                        h[1] += cf * self.d2[(mi, node, c, 1)];
                        h[2] += cf * self.d2[(mi, node, c, 2)];
                    }
                }
                let mut s = v * v;
                if m >= 1 {
                    s += g[0] * g[0] + g[1] * g[1];
                }
                if m >= 2 {
                    s += h[0] * h[0] + h[1] * h[1] + h[2] * h[2];
                }
                acc += w * s;
            }
        }
        Ok(acc.sqrt())
    }

    /// Velocity `a = perp-grad psi` from stream-function samples on the
    /// quadrature grid `[radial node, angular node]`. The radial derivative
    /// differentiates the interpolating polynomial through the
    /// Gauss-Legendre nodes; the angular derivative is spectral.
    pub fn velocity_from_stream(&self, psi: &Array2<f64>) -> Result<DiskGridField> {
        let nr = self.r_nodes.len();
        let nt = self.n_theta;
        if psi.dim() != (nr, nt) {
            return Err(CoreError::ShapeMismatch(format!(
                "stream samples are {:?}, expected ({nr}, {nt})",
                psi.dim()
            )));
        }
        let dmat = radial_diff_matrix(&self.r_nodes);
        let psi_r = dmat.dot(psi);
        let psi_t = angular_derivative(psi);
        let mut out = DiskGridField::zeros(self.nodes(), nt);
        for i in 0..nr {
            let r = self.r_nodes[i];
            for j in 0..nt {
                let th = 2.0 * std::f64::consts::PI * j as f64 / nt as f64;
                let (c, s) = (th.cos(), th.sin());
                let px = c * psi_r[(i, j)] - s / r * psi_t[(i, j)];
                let py = s * psi_r[(i, j)] + c / r * psi_t[(i, j)];
                let node = i * nt + j;
                out.vals[(node, 0)] = -py;
                out.vals[(node, 1)] = px;
            }
        }
        // boundary ring by polynomial extrapolation of the radial factor
        let ext = barycentric_eval_row(&self.r_nodes, 1.0);
        for j in 0..nt {
            let th = 2.0 * std::f64::consts::PI * j as f64 / nt as f64;
            let (c, s) = (th.cos(), th.sin());
            let mut pr = 0.0;
            let mut pt = 0.0;
            for i in 0..nr {
                pr += ext[i] * psi_r[(i, j)];
                pt += ext[i] * psi_t[(i, j)];
            }
            let px = c * pr - s * pt;
            let py = s * pr + c * pt;
            out.boundary[(j, 0)] = -py;
            out.boundary[(j, 1)] = px;
        }
        Ok(out)
    }

    /// Interior sup of a tabulated mode over the quadrature nodes.
    pub fn interior_sup(&self, mode: usize) -> f64 {
        let mut best = 0.0_f64;
        for node in 0..self.nodes() {
            best = best
                .max(self.val[(mode, node, 0)].abs())
                .max(self.val[(mode, node, 1)].abs());
        }
        best
    }
}

/// Barycentric weights of an interpolation node set.
fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut w = vec![1.0; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                w[i] /= nodes[i] - nodes[j];
            }
        }
    }
    w
}

/// Row vector evaluating the interpolating polynomial at `x`.
pub fn barycentric_eval_row(nodes: &[f64], x: f64) -> Vec<f64> {
    let w = barycentric_weights(nodes);
    if let Some(hit) = nodes.iter().position(|&r| r == x) {
        let mut row = vec![0.0; nodes.len()];
        row[hit] = 1.0;
        return row;
    }
    let terms: Vec<f64> = nodes
        .iter()
        .zip(&w)
        .map(|(&r, &wi)| wi / (x - r))
        .collect();
    let denom: f64 = terms.iter().sum();
    terms.into_iter().map(|t| t / denom).collect()
}

/// Differentiation matrix of the interpolating polynomial through `nodes`.
pub fn radial_diff_matrix(nodes: &[f64]) -> Array2<f64> {
    let n = nodes.len();
    let w = barycentric_weights(nodes);
    let mut d = Array2::zeros((n, n));
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = (w[j] / w[i]) / (nodes[i] - nodes[j]);
                d[(i, j)] = v;
                diag -= v;
            }
        }
        d[(i, i)] = diag;
    }
    d
}

/// Spectral derivative along the (uniform, periodic) angular axis.
fn angular_derivative(f: &Array2<f64>) -> Array2<f64> {
    use rustfft::FftPlanner;
    let (nr, nt) = f.dim();
    let mut out = Array2::zeros((nr, nt));
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(nt);
    let inv = planner.plan_fft_inverse(nt);
    let mut buf = vec![Complex64::default(); nt];
    for i in 0..nr {
        for (j, b) in buf.iter_mut().enumerate() {
            *b = Complex64::new(f[(i, j)], 0.0);
        }
        fwd.process(&mut buf);
        for (m, b) in buf.iter_mut().enumerate() {
            let k = if m <= nt / 2 { m as i64 } else { m as i64 - nt as i64 };
            // zero the unmatched Nyquist mode for a real derivative
            let k = if nt % 2 == 0 && m == nt / 2 { 0 } else { k };
            *b *= Complex64::new(0.0, k as f64 / nt as f64);
        }
        inv.process(&mut buf);
        for j in 0..nt {
            out[(i, j)] = buf[j].re;
        }
    }
    out
}
