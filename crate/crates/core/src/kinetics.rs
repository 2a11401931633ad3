//! Cubic reaction terms and the growth constants they satisfy.
//!
//! For a cubic `f(s) = c3 s³ + c2 s² + c1 s + c0` with `c3 < 0`, the
//! constants returned by [`Kinetics::assumption_constants`] satisfy, for all `s`,
//!
//! ```text
//! s f(s)  ≤ −λ s⁴ + φ
//! |f(s)|  ≤ α |s|³ + ζ
//! |f'(s)| ≤ β s² + ξ
//! f'(s)   ≤ γ
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Kinetics {
    /// `f(s) = s − s³/3`.
    #[default]
    ClassicCubic,
    /// `f(s) = κ s (s − c)(1 − s)`.
    GeneralCubic { kappa: f64, c: f64 },
    /// Arbitrary cubic with negative leading coefficient.
    Cubic { c3: f64, c2: f64, c1: f64, c0: f64 },
    /// `f ≡ 0`; only for exercising the linear part of the scheme.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssumptionConstants {
    pub lambda: f64,
    pub phi: f64,
    pub alpha: f64,
    pub zeta: f64,
    pub beta: f64,
    pub xi: f64,
    pub gamma: f64,
}

/// Floor applied to `γ` when `sup f'` is not positive.
pub const GAMMA_FLOOR: f64 = 1e-12;

impl Kinetics {
    /// `[c0, c1, c2, c3]`.
    pub fn coefficients(&self) -> [f64; 4] {
        match *self {
            Kinetics::ClassicCubic => [0.0, 1.0, 0.0, -1.0 / 3.0],
            // κ s (s − c)(1 − s) = −κ s³ + κ(1 + c) s² − κ c s
            Kinetics::GeneralCubic { kappa, c } => [0.0, -kappa * c, kappa * (1.0 + c), -kappa],
            Kinetics::Cubic { c3, c2, c1, c0 } => [c0, c1, c2, c3],
            Kinetics::Zero => [0.0; 4],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Kinetics::GeneralCubic { kappa, c } = *self {
            if !(kappa > 0.0) {
                return Err(Error::Kinetics("kappa must be > 0".into()));
            }
            if !(c > 0.0 && c < 1.0) {
                return Err(Error::Kinetics("c must lie in (0, 1)".into()));
            }
        }
        let c = self.coefficients();
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::Kinetics("coefficients must be finite".into()));
        }
        if !(c[3] < 0.0) {
            return Err(Error::Kinetics("leading cubic coefficient must be < 0".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn f(&self, s: f64) -> f64 {
        let [c0, c1, c2, c3] = self.coefficients();
        ((c3 * s + c2) * s + c1) * s + c0
    }

    #[inline]
    pub fn f_prime(&self, s: f64) -> f64 {
        let [_, c1, c2, c3] = self.coefficients();
        (3.0 * c3 * s + 2.0 * c2) * s + c1
    }

    /// Constants of the four growth bounds.
    ///
    /// `λ` is half the magnitude of the quartic coefficient of `s f(s)`, which
    /// keeps `φ = max_s (s f(s) + λ s⁴)` finite; the maximum is found from the
    /// real critical points of that quartic. The remaining constants come from
    /// `s² ≤ |s|³ + 1` and `|s| ≤ |s|³ + 1`.
    pub fn assumption_constants(&self) -> Result<AssumptionConstants> {
        self.validate()?;
        let [c0, c1, c2, c3] = self.coefficients();
        let lambda = 0.5 * c3.abs();

        // g(s) = s f(s) + λ s⁴ = (c3/2) s⁴ + c2 s³ + c1 s² + c0 s
        let g = |s: f64| (((0.5 * c3 * s + c2) * s + c1) * s + c0) * s;
        let phi = real_cubic_roots(2.0 * c3, 3.0 * c2, 2.0 * c1, c0)
            .into_iter()
            .map(g)
            .fold(0.0f64, f64::max);

        let alpha = c3.abs() + c2.abs() + c1.abs();
        let zeta = c2.abs() + c1.abs() + c0.abs();
        let beta = 3.0 * c3.abs() + c2.abs();
        let xi = c2.abs() + c1.abs();
        // f' is a concave parabola with vertex value c1 − c2²/(3 c3).
        let gamma = (c1 - c2 * c2 / (3.0 * c3)).max(GAMMA_FLOOR);

        Ok(AssumptionConstants { lambda, phi, alpha, zeta, beta, xi, gamma })
    }
}

impl AssumptionConstants {
    /// Counts grid points of `[−s_max, s_max]` where any of the four bounds fails,
    /// allowing a relative rounding slack.
    pub fn grid_violations(&self, k: &Kinetics, s_max: f64, n: usize) -> usize {
        const REL: f64 = 1e-12;
        (0..n)
            .map(|i| -s_max + 2.0 * s_max * i as f64 / (n - 1) as f64)
            .filter(|&s| {
                let f = k.f(s);
                let fp = k.f_prime(s);
                let s2 = s * s;
                let s3 = s2 * s.abs();
                let bound1 = -self.lambda * s2 * s2 + self.phi;
                let bound2 = self.alpha * s3 + self.zeta;
                let bound3 = self.beta * s2 + self.xi;
                let slack = |x: f64, y: f64| REL * (x.abs() + y.abs() + 1.0);
                s * f > bound1 + slack(s * f, bound1)
                    || f.abs() > bound2 + slack(f, bound2)
                    || fp.abs() > bound3 + slack(fp, bound3)
                    || fp > self.gamma + slack(fp, self.gamma)
            })
            .count()
    }
}

/// Real roots of `a x³ + b x² + c x + d`, polished by Newton steps.
/// Degenerates gracefully to lower degree when leading coefficients vanish.
pub(crate) fn real_cubic_roots(a: f64, b: f64, c: f64, d: f64) -> Vec<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs()).max(d.abs());
    if scale == 0.0 {
        return vec![0.0];
    }
    if a.abs() <= 1e-14 * scale {
        if b.abs() <= 1e-14 * scale {
            return if c != 0.0 { vec![-d / c] } else { vec![] };
        }
        let disc = c * c - 4.0 * b * d;
        if disc < 0.0 {
            return vec![];
        }
        let sq = disc.sqrt();
        return vec![(-c + sq) / (2.0 * b), (-c - sq) / (2.0 * b)];
    }
    // Depressed cubic t³ + pt + q with x = t − b/(3a).
    let (b, c, d) = (b / a, c / a, d / a);
    let shift = b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let mut roots = if disc > 0.0 {
        let sq = disc.sqrt();
        vec![(-q / 2.0 + sq).cbrt() + (-q / 2.0 - sq).cbrt()]
    } else if p == 0.0 {
        vec![0.0]
    } else {
        let r = (-p / 3.0).sqrt();
        let arg = (-q / (2.0 * r * r * r)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3)
            .map(|k| 2.0 * r * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos())
            .collect()
    };
    for t in roots.iter_mut() {
        *t -= shift;
        for _ in 0..3 {
            let fx = ((*t + b) * *t + c) * *t + d;
            let dfx = (3.0 * *t + 2.0 * b) * *t + c;
            if dfx != 0.0 {
                *t -= fx / dfx;
            }
        }
    }
    roots
}
