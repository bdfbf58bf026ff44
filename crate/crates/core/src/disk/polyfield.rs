//! Closed-form scalar and vector fields on the disk built from terms
//! `c * x^a * y^b * P(t)` with `t = x^2 + y^2`, optionally cut off outside
//! `t <= support_t`.
//!
//! The family is closed under partial differentiation, so compactly
//! supported noise correlates and analytic test fields carry exact
//! derivatives of every order.

use std::collections::BTreeMap;

/// Dense polynomial in one variable, coefficients by ascending power.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn constant(c: f64) -> Self {
        Poly(vec![c])
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    pub fn deriv(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly(vec![0.0]);
        }
        Poly(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c)
                .collect(),
        )
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        let mut out = vec![0.0; n];
        for (i, a) in self.0.iter().enumerate() {
            out[i] += a;
        }
        for (i, b) in other.0.iter().enumerate() {
            out[i] += b;
        }
        Poly(out)
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly(self.0.iter().map(|c| c * s).collect())
    }

    /// `(c0 + c1 t)^q` as a dense polynomial.
    pub fn linear_pow(c0: f64, c1: f64, q: u32) -> Poly {
        let mut p = Poly(vec![1.0]);
        let lin = Poly(vec![c0, c1]);
        for _ in 0..q {
            p = p.mul(&lin);
        }
        p
    }
}

/// Scalar field `sum_i c_i x^{a_i} y^{b_i} P_i(t)`, zero outside the support.
#[derive(Debug, Clone)]
pub struct PolyScalar {
    terms: BTreeMap<(u32, u32), Poly>,
    /// Cutoff in `t = r^2`; `None` means supported on the whole plane.
    pub support_t: Option<f64>,
}

impl PolyScalar {
    pub fn zero() -> Self {
        PolyScalar {
            terms: BTreeMap::new(),
            support_t: None,
        }
    }

    pub fn term(a: u32, b: u32, poly: Poly, support_t: Option<f64>) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert((a, b), poly);
        PolyScalar { terms, support_t }
    }

    pub fn add_term(&mut self, a: u32, b: u32, poly: Poly) {
        self.terms
            .entry((a, b))
            .and_modify(|p| *p = p.add(&poly))
            .or_insert(poly);
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let t = x * x + y * y;
        if let Some(cut) = self.support_t {
            if t >= cut {
                return 0.0;
            }
        }
        let mut acc = 0.0;
        for (&(a, b), p) in &self.terms {
            acc += x.powi(a as i32) * y.powi(b as i32) * p.eval(t);
        }
        acc
    }

    pub fn dx(&self) -> PolyScalar {
        let mut out = PolyScalar {
            terms: BTreeMap::new(),
            support_t: self.support_t,
        };
        for (&(a, b), p) in &self.terms {
            if a > 0 {
                out.add_term(a - 1, b, p.scale(a as f64));
            }
            out.add_term(a + 1, b, p.deriv().scale(2.0));
        }
        out
    }

    pub fn dy(&self) -> PolyScalar {
        let mut out = PolyScalar {
            terms: BTreeMap::new(),
            support_t: self.support_t,
        };
        for (&(a, b), p) in &self.terms {
            if b > 0 {
                out.add_term(a, b - 1, p.scale(b as f64));
            }
            out.add_term(a, b + 1, p.deriv().scale(2.0));
        }
        out
    }

    pub fn derivative(&self, ax: u32, ay: u32) -> PolyScalar {
        let mut cur = self.clone();
        for _ in 0..ax {
            cur = cur.dx();
        }
        for _ in 0..ay {
            cur = cur.dy();
        }
        cur
    }
}

/// Two-component field with exact derivatives.
#[derive(Debug, Clone)]
pub struct PolyField {
    pub comps: [PolyScalar; 2],
}

impl PolyField {
    /// Perpendicular gradient of a scalar: `(-d_y s, d_x s)`; divergence-free
    /// by construction.
    pub fn perp_grad(s: &PolyScalar) -> PolyField {
        PolyField {
            comps: [s.dy().scale(-1.0), s.dx()],
        }
    }

    /// Plain gradient `(d_x s, d_y s)`.
    pub fn grad(s: &PolyScalar) -> PolyField {
        PolyField {
            comps: [s.dx(), s.dy()],
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> [f64; 2] {
        [self.comps[0].eval(x, y), self.comps[1].eval(x, y)]
    }

    pub fn divergence(&self) -> PolyScalar {
        let mut d = self.comps[0].dx();
        let dy = self.comps[1].dy();
        for (&(a, b), p) in &dy.terms {
            d.add_term(a, b, p.clone());
        }
        d
    }

    pub fn curl(&self) -> PolyScalar {
        let mut c = self.comps[1].dx();
        let dy = self.comps[0].dy().scale(-1.0);
        for (&(a, b), p) in &dy.terms {
            c.add_term(a, b, p.clone());
        }
        c
    }

    /// Sup over a fine polar grid of `|D^alpha f^l|` for all `|alpha| <= k`:
    /// the `W^{k,inf}` grid estimate.
    pub fn sup_norm_wk(&self, k: u32, nr: usize, ntheta: usize) -> f64 {
        let rmax = self
            .comps
            .iter()
            .filter_map(|c| c.support_t)
            .fold(1.0_f64, |m, t| m.min(t.sqrt()));
        let mut best = 0.0_f64;
        for comp in &self.comps {
            for ax in 0..=k {
                for ay in 0..=(k - ax) {
                    let d = comp.derivative(ax, ay);
                    for i in 0..nr {
                        let r = rmax * (i as f64 + 0.5) / nr as f64;
                        for j in 0..ntheta {
                            let th = 2.0 * std::f64::consts::PI * j as f64 / ntheta as f64;
                            best = best.max(d.eval(r * th.cos(), r * th.sin()).abs());
                        }
                    }
                }
            }
        }
        best
    }
}

impl PolyScalar {
    fn scale(&self, s: f64) -> PolyScalar {
        PolyScalar {
            terms: self
                .terms
                .iter()
                .map(|(&k, p)| (k, p.scale(s)))
                .collect(),
            support_t: self.support_t,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn derivatives_of_x2y_match_hand_computation() {
        // f = x^2 y: fx = 2xy, fy = x^2, fxx = 2y, fxy = 2x
        let f = PolyScalar::term(2, 1, Poly::constant(1.0), None);
        let (x, y) = (0.3, -0.7);
        assert_relative_eq!(f.eval(x, y), x * x * y, epsilon = 1e-15);
        assert_relative_eq!(f.dx().eval(x, y), 2.0 * x * y, epsilon = 1e-15);
        assert_relative_eq!(f.dy().eval(x, y), x * x, epsilon = 1e-15);
        assert_relative_eq!(f.derivative(2, 0).eval(x, y), 2.0 * y, epsilon = 1e-15);
        assert_relative_eq!(f.derivative(1, 1).eval(x, y), 2.0 * x, epsilon = 1e-15);
    }

    #[test]
    fn radial_poly_chain_rule() {
        // f = (1 - t)^2, t = x^2 + y^2: fx = -4x(1 - t)
        let f = PolyScalar::term(0, 0, Poly::linear_pow(1.0, -1.0, 2), None);
        let (x, y) = (0.25, 0.5);
        let t = x * x + y * y;
        assert_relative_eq!(f.eval(x, y), (1.0 - t) * (1.0 - t), epsilon = 1e-15);
        assert_relative_eq!(f.dx().eval(x, y), -4.0 * x * (1.0 - t), epsilon = 1e-14);
    }

    #[test]
    fn perp_grad_is_divergence_free_and_supported() {
        let bump = PolyScalar::term(0, 0, Poly::linear_pow(0.64, -1.0, 6), Some(0.64));
        let xi = PolyField::perp_grad(&bump);
        let div = xi.divergence();
        for (x, y) in [(0.1, 0.2), (0.5, -0.3), (0.0, 0.7)] {
            assert!(div.eval(x, y).abs() < 1e-12);
        }
        // vanishes outside r = 0.8
        assert_eq!(xi.eval(0.95, 0.0), [0.0, 0.0]);
        assert_eq!(xi.eval(0.6, 0.6), [0.0, 0.0]);
    }

    #[test]
    fn finite_difference_cross_check() {
        let bump = PolyScalar::term(1, 2, Poly::linear_pow(1.0, -0.5, 3), None);
        let h = 1e-5;
        let (x, y) = (0.4, -0.2);
        let fd = (bump.eval(x + h, y) - bump.eval(x - h, y)) / (2.0 * h);
        assert_relative_eq!(bump.dx().eval(x, y), fd, epsilon = 1e-9);
    }
}
