//! Noise machinery: the spatial correlates `(xi_i)` with their sup-norm
//! tables and summability diagnostics, and the truncated cylindrical
//! Brownian motion driving the Galerkin system.

use crate::disk::polyfield::PolyField;
use crate::error::{CoreError, Result};
use crate::field::{SpectralField, StokesBasis};
use crate::ops::disk_ops::ring_correlate;
use crate::rng::CounterRng;
use crate::torus::TorusBasis;

/// Identifies one generated family: reproducible from `(seed, recipe)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XiStamp {
    pub seed: u64,
    pub recipe: String,
}

impl std::fmt::Display for XiStamp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}#{}", self.recipe, self.seed)
    }
}

/// `table[i][k] = ||xi_i||_{W^{k,inf}}` grid estimates, `k = 0..=k_max`.
#[derive(Debug, Clone)]
pub struct NormTable {
    pub rows: Vec<Vec<f64>>,
    pub k_max: usize,
}

impl NormTable {
    /// `sum_i ||xi_i||^2_{W^{k,inf}}` over the truncated family.
    pub fn sum_sq(&self, k: usize) -> f64 {
        self.rows.iter().map(|r| r[k] * r[k]).sum()
    }

    /// Rows must be nonnegative and nondecreasing in `k`.
    pub fn validate(&self) -> Result<()> {
        for (i, r) in self.rows.iter().enumerate() {
            for (k, v) in r.iter().enumerate() {
                if !v.is_finite() || *v < 0.0 {
                    return Err(CoreError::InvalidField(format!(
                        "norm table entry ({i}, {k}) = {v}"
                    )));
                }
                if k > 0 && r[k] < r[k - 1] - 1e-12 * r[k - 1].abs() {
                    return Err(CoreError::InvalidField(format!(
                        "norm table row {i} not monotone at k = {k}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Log-log decay slope of `||xi_i||^2_{W^{k,inf}}` against the member
    /// index; summability needs slope < -1.
    pub fn decay_slope(&self, k: usize) -> Option<f64> {
        if self.rows.len() < 3 {
            return None;
        }
        let pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r[k] > 0.0)
            .map(|(i, r)| ((i as f64 + 1.0).ln(), (r[k] * r[k]).ln()))
            .collect();
        if pts.len() < 3 {
            return None;
        }
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        Some((n * sxy - sx * sy) / (n * sxx - sx * sx))
    }

    /// Heuristic summability flag for the `W^{m+2,inf}` hypothesis.
    pub fn summable(&self, m: usize) -> bool {
        let k = (m + 2).min(self.k_max);
        match self.decay_slope(k) {
            Some(s) => s < -1.05,
            None => true, // too few members to diagnose; sums are finite anyway
        }
    }
}

// ---------------------------------------------------------------------------
// torus family
// ---------------------------------------------------------------------------

pub struct TorusXiFamily {
    pub members: Vec<SpectralField>,
    pub table: NormTable,
    pub stamp: XiStamp,
    pub warnings: Vec<String>,
}

/// `xi_i = amplitude * i^{-p} * a_i` over the first `m_count` basis modes.
pub fn make_torus_xi(
    basis: &TorusBasis,
    m_count: usize,
    decay_p: f64,
    amplitude: f64,
    seed: u64,
    k_max: usize,
    m_target: u32,
) -> Result<TorusXiFamily> {
    if m_count < 1 {
        return Err(CoreError::Config {
            key: "xi.count".into(),
            message: "need at least one correlate".into(),
        });
    }
    if m_count > basis.len() {
        return Err(CoreError::Config {
            key: "xi.count".into(),
            message: format!(
                "family of {m_count} exceeds the {} tabulated modes",
                basis.len()
            ),
        });
    }
    let mut warnings = Vec::new();
    if decay_p <= (m_target + 2) as f64 {
        warnings.push(format!(
            "decay exponent p = {decay_p} is not above m + 2 = {}; the W^{{{},inf}} summability hypothesis may fail at this truncation",
            m_target + 2,
            m_target + 2
        ));
    }
    let mut members = Vec::with_capacity(m_count);
    let mut rows = Vec::with_capacity(m_count);
    for i in 0..m_count {
        let amp = amplitude * ((i + 1) as f64).powf(-decay_p);
        let member = SpectralField::unit_mode(basis, i).scaled(amp);
        let spec = basis.to_spec2(&member)?;
        let row: Vec<f64> = (0..=k_max).map(|k| spec.sup_norm_wk(k)).collect();
        rows.push(row);
        members.push(member);
    }
    let table = NormTable { rows, k_max };
    table.validate()?;
    Ok(TorusXiFamily {
        members,
        table,
        stamp: XiStamp {
            seed,
            recipe: format!("torus-modes:M={m_count}:p={decay_p}:amp={amplitude}"),
        },
        warnings,
    })
}

// ---------------------------------------------------------------------------
// disk family
// ---------------------------------------------------------------------------

pub struct DiskXiFamily {
    pub members: Vec<PolyField>,
    pub table: NormTable,
    pub stamp: XiStamp,
    pub support_radius: f64,
}

/// Shifted-Legendre modulation in `t / rho^2` of degree `deg`.
fn shifted_legendre(deg: usize, rho2: f64) -> Vec<f64> {
    // Legendre P_deg(2 t / rho^2 - 1) expanded in powers of t
    let mut p0 = vec![1.0];
    if deg == 0 {
        return p0;
    }
    // x = 2 t / rho2 - 1 as a linear polynomial in t
    let x = [-1.0, 2.0 / rho2];
    let mul_x = |p: &[f64]| {
        let mut out = vec![0.0; p.len() + 1];
        for (i, c) in p.iter().enumerate() {
            out[i] += c * x[0];
            out[i + 1] += c * x[1];
        }
        out
    };
    let mut p1 = mul_x(&p0);
    for k in 2..=deg {
        let kf = k as f64;
        let a = (2.0 * kf - 1.0) / kf;
        let b = (kf - 1.0) / kf;
        let xp1 = mul_x(&p1);
        let mut p2 = vec![0.0; xp1.len()];
        for (i, c) in xp1.iter().enumerate() {
            p2[i] += a * c;
        }
        for (i, c) in p0.iter().enumerate() {
            p2[i] -= b * c;
        }
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Compactly supported ring correlates `xi_i = perp-grad of
/// amplitude i^{-p} (rho^2 - r^2)^8 P_{i-1}(2 r^2 / rho^2 - 1)`.
pub fn make_disk_xi(
    m_count: usize,
    support_radius: f64,
    decay_p: f64,
    amplitude: f64,
    seed: u64,
    k_max: usize,
) -> Result<DiskXiFamily> {
    if !(support_radius > 0.0 && support_radius < 1.0) {
        return Err(CoreError::Config {
            key: "xi.support_radius".into(),
            message: format!("must lie strictly inside the disk, got {support_radius}"),
        });
    }
    if m_count < 1 {
        return Err(CoreError::Config {
            key: "xi.count".into(),
            message: "need at least one correlate".into(),
        });
    }
    let rho2 = support_radius * support_radius;
    let mut members = Vec::with_capacity(m_count);
    let mut rows = Vec::with_capacity(m_count);
    for i in 0..m_count {
        let amp = amplitude * ((i + 1) as f64).powf(-decay_p);
        let modulation = shifted_legendre(i, rho2);
        let xi = ring_correlate(amp, support_radius, 8, &modulation);
        let row: Vec<f64> = (0..=k_max)
            .map(|k| xi.sup_norm_wk(k as u32, 160, 48))
            .collect();
        rows.push(row);
        members.push(xi);
    }
    let table = NormTable { rows, k_max };
    table.validate()?;
    Ok(DiskXiFamily {
        members,
        table,
        stamp: XiStamp {
            seed,
            recipe: format!(
                "disk-rings:M={m_count}:rho={support_radius}:p={decay_p}:amp={amplitude}"
            ),
        },
        support_radius,
    })
}

// ---------------------------------------------------------------------------
// Brownian paths
// ---------------------------------------------------------------------------

/// Truncated cylindrical Brownian increments with dyadic refinement.
///
/// Increments are keyed by `(seed, stream, level, index)` through the
/// counter-based generator, so refining a path preserves the coarse
/// increments exactly and two refinements of the same seed agree.
///
/// All stored values are quantized to the `2^-44` lattice; sums and
/// differences of lattice points are exact in f64, which makes the bridge
/// identity `left + right == parent` hold bitwise. The quantization
/// perturbs each draw by less than `6e-14`.
#[derive(Debug, Clone)]
pub struct BrownianPath {
    pub seed: u64,
    pub dt: f64,
    pub level: u32,
    /// `increments[stream][step] ~ Normal(0, dt)`.
    pub increments: Vec<Vec<f64>>,
}

fn level_key(level: u32, index: u64) -> u64 {
    ((level as u64) << 48) | index
}

const LATTICE: f64 = 17592186044416.0; // 2^44

fn quantize(x: f64) -> f64 {
    (x * LATTICE).round() / LATTICE
}

pub fn sample_path(streams: usize, dt: f64, steps: usize, seed: u64) -> Result<BrownianPath> {
    if dt <= 0.0 {
        return Err(CoreError::Config {
            key: "dt".into(),
            message: format!("time step must be positive, got {dt}"),
        });
    }
    let rng = CounterRng::new(seed, "brownian");
    let sq = dt.sqrt();
    let increments = (0..streams)
        .map(|s| {
            (0..steps)
                .map(|i| quantize(sq * rng.gaussian(s as u64, level_key(0, i as u64))))
                .collect()
        })
        .collect();
    Ok(BrownianPath {
        seed,
        dt,
        level: 0,
        increments,
    })
}

/// Halve `dt`, inserting midpoints by Brownian-bridge sampling; summing the
/// two children of any step reproduces the parent increment bitwise.
pub fn refine(path: &BrownianPath) -> BrownianPath {
    let rng = CounterRng::new(path.seed, "brownian");
    let level = path.level + 1;
    let half = 0.5 * path.dt.sqrt();
    let increments = path
        .increments
        .iter()
        .enumerate()
        .map(|(s, stream)| {
            let mut out = Vec::with_capacity(stream.len() * 2);
            for (i, &d) in stream.iter().enumerate() {
                // conditional law of the midpoint: N(d/2, dt/4); the left
                // child lands on the lattice, so `d - left` is exact and the
                // pair sums back to the parent bitwise
                let z = rng.gaussian(s as u64, level_key(level, i as u64));
                let left = quantize(0.5 * d + half * z);
                out.push(left);
                out.push(d - left);
            }
            out
        })
        .collect();
    BrownianPath {
        seed: path.seed,
        dt: 0.5 * path.dt,
        level,
        increments,
    }
}

impl BrownianPath {
    pub fn steps(&self) -> usize {
        self.increments.first().map(|s| s.len()).unwrap_or(0)
    }

    pub fn streams(&self) -> usize {
        self.increments.len()
    }

    /// Refine down to the requested step count (must be a power-of-two
    /// multiple of the current one).
    pub fn refined_to(&self, steps: usize) -> Result<BrownianPath> {
        let mut cur = self.clone();
        while cur.steps() < steps {
            cur = refine(&cur);
        }
        if cur.steps() != steps {
            return Err(CoreError::Config {
                key: "steps".into(),
                message: format!(
                    "{steps} is not a dyadic refinement of {} base steps",
                    self.steps()
                ),
            });
        }
        Ok(cur)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::build_torus_basis;

    #[test]
    fn single_member_family_sum_is_its_own_square() {
        let b = build_torus_basis(2, 2, 8).unwrap();
        let fam = make_torus_xi(&b, 1, 3.0, 1.0, 1, 3, 2).unwrap();
        let s = fam.table.sum_sq(0);
        let r = fam.table.rows[0][0];
        assert!((s - r * r).abs() < 1e-15);
    }

    #[test]
    fn partial_sums_match_direct_summation_oracle() {
        // sum_i (i^-3)^2 ||mode_i||_{W^{0,inf}}^2 against direct summation
        let b = build_torus_basis(2, 6, 16).unwrap();
        let fam = make_torus_xi(&b, 64, 3.0, 1.0, 1, 0, 0).unwrap();
        let direct: f64 = (0..64)
            .map(|i| {
                let amp = ((i + 1) as f64).powf(-3.0);
                let sup = fam.table.rows[i][0] / amp; // per-mode sup
                (amp * sup).powi(2)
            })
            .sum();
        assert!((fam.table.sum_sq(0) - direct).abs() <= 1e-12 * direct);
    }

    #[test]
    fn decay_flag_is_true_for_strong_decay() {
        let b = build_torus_basis(2, 6, 16).unwrap();
        let fam = make_torus_xi(&b, 32, 5.0, 1.0, 1, 4, 2).unwrap();
        assert!(fam.table.summable(2), "p = 5 family should be summable at m = 2");
        assert!(fam.warnings.is_empty());
    }

    #[test]
    fn weak_decay_is_flagged() {
        let b = build_torus_basis(2, 4, 12).unwrap();
        let fam = make_torus_xi(&b, 8, 1.0, 1.0, 1, 4, 2).unwrap();
        assert!(!fam.warnings.is_empty());
    }

    #[test]
    fn disk_members_vanish_outside_support_and_are_divergence_free() {
        let fam = make_disk_xi(3, 0.8, 2.0, 1.0, 7, 4).unwrap();
        for xi in &fam.members {
            assert_eq!(xi.eval(0.95, 0.0), [0.0, 0.0]);
            let div = xi.divergence();
            for (x, y) in [(0.2, 0.1), (0.5, -0.4)] {
                assert!(div.eval(x, y).abs() < 1e-9);
            }
            assert_eq!(xi.curl().eval(1.0, 0.0), 0.0);
        }
        assert!(make_disk_xi(2, 1.2, 2.0, 1.0, 7, 2).is_err());
    }

    #[test]
    fn disk_norm_table_is_stable_under_grid_doubling() {
        let fam = make_disk_xi(2, 0.8, 2.0, 1.0, 7, 3).unwrap();
        for (i, xi) in fam.members.iter().enumerate() {
            for k in 0..=3 {
                let coarse = fam.table.rows[i][k];
                let fine = xi.sup_norm_wk(k as u32, 320, 96);
                assert!(
                    (fine - coarse).abs() <= 0.05 * fine.max(1e-12),
                    "member {i} k={k}: {coarse} vs {fine}"
                );
            }
        }
    }

    #[test]
    fn refined_pairs_sum_to_coarse_increments_exactly() {
        let p = sample_path(3, 0.25, 16, 99).unwrap();
        let r = refine(&p);
        assert_eq!(r.steps(), 32);
        assert_eq!(r.dt, 0.125);
        for s in 0..3 {
            for i in 0..16 {
                let sum = r.increments[s][2 * i] + r.increments[s][2 * i + 1];
                assert_eq!(sum, p.increments[s][i], "bridge must preserve parents");
            }
        }
    }

    #[test]
    fn same_seed_reproduces_streams() {
        let a = sample_path(2, 0.5, 64, 5).unwrap();
        let b = sample_path(2, 0.5, 64, 5).unwrap();
        assert_eq!(a.increments, b.increments);
        let a2 = refine(&a);
        let b2 = refine(&b);
        assert_eq!(a2.increments, b2.increments);
    }

    #[test]
    fn increment_variance_within_chi_square_bounds() {
        let dt = 0.01;
        let n = 100_000;
        let p = sample_path(1, dt, n, 1234).unwrap();
        let mean: f64 = p.increments[0].iter().sum::<f64>() / n as f64;
        let var: f64 =
            p.increments[0].iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1) as f64;
        // chi-square 3-sigma band for the sample variance
        let band = 3.0 * (2.0 / n as f64).sqrt();
        assert!(
            (var / dt - 1.0).abs() < band,
            "variance ratio {} outside band {band}",
            var / dt
        );
    }

    #[test]
    fn refinement_variance_is_consistent() {
        // refined increments must have variance dt/2
        let dt = 0.02;
        let p = sample_path(1, dt, 50_000, 777).unwrap();
        let r = refine(&p);
        let n = r.steps();
        let var: f64 = r.increments[0].iter().map(|d| d * d).sum::<f64>() / n as f64;
        let band = 3.0 * (2.0 / n as f64).sqrt();
        assert!(
            (var / (dt / 2.0) - 1.0).abs() < band,
            "refined variance ratio {}",
            var / (dt / 2.0)
        );
    }
}
