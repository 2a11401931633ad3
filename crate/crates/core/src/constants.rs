//! Closed-form constants of the absorbing-set, regularity and synchronization
//! estimates, and the Poincaré constants of the domain.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kinetics::AssumptionConstants;
use crate::mesh::Mesh;
use crate::operators::stiffness_matrix;
use crate::params::ModelParams;
use crate::solver::solve_spd;

/// Constants that enter only the regularity estimate and have no formula of
/// their own. All four must be supplied together.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct SemigroupEstimates {
    /// Semigroup smoothing constant.
    pub c: f64,
    /// Spectral gap of the shifted operator.
    pub alpha0: f64,
    /// Lipschitz constant of the nonlinearity on the absorbing set.
    pub c4: f64,
    /// Trace constant `‖v‖²_{L²(Γ)} ≤ C* ‖v‖²_{H¹}`.
    pub c_star: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoincareConstants {
    pub eta1: f64,
    pub eta2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoremConstants {
    pub m: usize,
    pub omega: f64,
    /// `‖φ‖² = φ²|Ω|`.
    pub phi_norm_sq: f64,
    /// `‖ξ‖ = ξ√|Ω|`.
    pub xi_norm: f64,
    pub c1: f64,
    pub c2: f64,
    pub r: f64,
    pub q: f64,
    pub c3: f64,
    pub delta: f64,
    pub l: f64,
    pub big_m: Option<f64>,
    pub k: Option<f64>,
    pub pi: Option<f64>,
    pub eta1: f64,
    pub eta2: f64,
    /// Threshold `R` for the boundary signal strength.
    pub threshold: f64,
    pub mu: f64,
    /// `max{C1,1}/min{C1,1}`.
    pub energy_ratio: f64,
}

/// One line of the constants report.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantLine {
    pub name: &'static str,
    pub value: Option<f64>,
    pub formula: &'static str,
}

const UNDETERMINED: &str = "not numerically determined without estimates of c, alpha0, C4 and C*";

impl TheoremConstants {
    pub fn report(&self) -> Vec<ConstantLine> {
        let line = |name, value, formula| ConstantLine { name, value, formula };
        vec![
            line("C1", Some(self.c1), "eps*b*lambda / (2*sigma^2)"),
            line(
                "C2",
                Some(self.c2),
                "C1 + C1*lambda/2 + C1*J^2/(2*lambda) + eps*a^2/b + 4*eps*sigma^2/(lambda^2*b^3)",
            ),
            line("r", Some(self.r), "min{4*sigma^2/(lambda*b^2), eps*b/2}"),
            line("Q", Some(self.q), "1 + 2m/(r*min{C1,1}) * (C1*|phi|^2 + C2*|Omega|)"),
            line("C3", Some(self.c3), "14*sigma^2 / (eps*b*lambda)"),
            line("delta", Some(self.delta), "2*min{lambda, sigma^2/(C3*lambda)}"),
            line(
                "L",
                Some(self.l),
                "m/(delta*min{1,2C3}) * [24/lambda*(1+|phi|^2) + (24J^2/lambda + 4C3*eps*a^2/b + lambda/2*(1+2C3*eps/(b*lambda))^2)*|Omega|]",
            ),
            line("M", self.big_m, if self.big_m.is_some() { "C4*(2*sqrt(L) + |xi|) + eps + sigma" } else { UNDETERMINED }),
            line(
                "K",
                self.k,
                if self.k.is_some() { "2cQ + 2c^2*M*Q*pi*exp(c^2*M^2/alpha0)" } else { UNDETERMINED },
            ),
            line("Pi", self.pi, if self.pi.is_some() { "C* K^2" } else { UNDETERMINED }),
            line("eta1", Some(self.eta1), "first nonzero Neumann eigenvalue of -Laplacian"),
            line("eta2", Some(self.eta2), "eta1 / |Omega|"),
            line("R", Some(self.threshold), "m(m-1) * (eta2*d*|Omega| + gamma + 3|eps-sigma|) * Q"),
            line("mu", Some(self.mu), "2*min{eta1*d, eps*b}"),
        ]
    }

    /// Time after which the energy bound guarantees entry into the ball of
    /// radius² `Q`, for an initial energy `e0 = Σ ‖g_i⁰‖²`.
    pub fn absorbing_entry_time(&self, e0: f64) -> f64 {
        let x = self.energy_ratio * e0;
        if x <= 1.0 {
            0.0
        } else {
            x.ln() / self.r
        }
    }

    /// Right-hand side of the energy bound at time `t`.
    pub fn dissipative_bound(&self, t: f64, e0: f64) -> f64 {
        self.energy_ratio * (-self.r * t).exp() * e0 + (self.q - 1.0)
    }

    /// Right-hand side of the differential inequality for the weighted energy.
    pub fn gronwall_rhs(&self) -> f64 {
        let m = self.m as f64;
        2.0 * self.c1 * m * self.phi_norm_sq + 2.0 * self.c2 * m * self.omega
    }
}

/// Evaluates every constant from the model, the kinetics constants and the domain.
pub fn compute_theorem_constants(
    params: &ModelParams,
    assumption: &AssumptionConstants,
    omega: f64,
    poincare: Option<PoincareConstants>,
    estimates: Option<SemigroupEstimates>,
) -> Result<TheoremConstants> {
    let PoincareConstants { eta1, eta2 } = poincare.ok_or(Error::Missing("Poincaré constants eta1, eta2"))?;
    let positive = |name: &'static str, v: f64| {
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParam { name, requirement: "> 0" })
        }
    };
    positive("omega", omega)?;
    positive("eta1", eta1)?;
    positive("eta2", eta2)?;
    positive("lambda", assumption.lambda)?;
    positive("d", params.d)?;
    positive("sigma", params.sigma)?;
    positive("epsilon", params.epsilon)?;
    positive("b", params.b)?;

    let (eps, b, a, sigma, d) = (params.epsilon, params.b, params.a, params.sigma, params.d);
    let j = params.abs_j();
    let lam = assumption.lambda;
    let m = params.m as f64;
    let phi_norm_sq = assumption.phi * assumption.phi * omega;
    let xi_norm = assumption.xi * omega.sqrt();

    let c1 = eps * b * lam / (2.0 * sigma * sigma);
    let c2 = c1 + c1 * lam / 2.0 + c1 * j * j / (2.0 * lam) + eps * a * a / b
        + 4.0 * eps * sigma * sigma / (lam * lam * b.powi(3));
    let r = (4.0 * sigma * sigma / (lam * b * b)).min(eps * b / 2.0);
    let c1_min = c1.min(1.0);
    let q = 1.0 + 2.0 * m / (r * c1_min) * (c1 * phi_norm_sq + c2 * omega);
    let c3 = 14.0 * sigma * sigma / (eps * b * lam);
    let delta = 2.0 * lam.min(sigma * sigma / (c3 * lam));
    let l = m / (delta * 1f64.min(2.0 * c3))
        * (24.0 / lam * (1.0 + phi_norm_sq)
            + (24.0 * j * j / lam
                + 4.0 * c3 * eps * a * a / b
                + lam / 2.0 * (1.0 + 2.0 * c3 * eps / (b * lam)).powi(2))
                * omega);

    let (big_m, k, pi) = match estimates {
        Some(e) => {
            for (name, v) in [("c", e.c), ("alpha0", e.alpha0), ("C4", e.c4), ("C*", e.c_star)] {
                positive(name, v)?;
            }
            let big_m = e.c4 * (2.0 * l.sqrt() + xi_norm) + eps + sigma;
            let k = 2.0 * e.c * q
                + 2.0 * e.c * e.c * big_m * q * std::f64::consts::PI * (e.c * e.c * big_m * big_m / e.alpha0).exp();
            (Some(big_m), Some(k), Some(e.c_star * k * k))
        }
        None => (None, None, None),
    };

    let threshold = m * (m - 1.0) * (eta2 * d * omega + assumption.gamma + 3.0 * (eps - sigma).abs()) * q;
    let mu = 2.0 * (eta1 * d).min(eps * b);

    Ok(TheoremConstants {
        m: params.m,
        omega,
        phi_norm_sq,
        xi_norm,
        c1,
        c2,
        r,
        q,
        c3,
        delta,
        l,
        big_m,
        k,
        pi,
        eta1,
        eta2,
        threshold,
        mu,
        energy_ratio: c1.max(1.0) / c1_min,
    })
}

/// Threshold `R` evaluated directly from the model inputs, independently of
/// the `Q` stored in `constants`.
#[allow(non_snake_case)]
pub fn compute_R(constants: &TheoremConstants, params: &ModelParams, assumption: &AssumptionConstants, omega: f64) -> f64 {
    let m = params.m as f64;
    let phi_sq = assumption.phi.powi(2) * omega;
    let bracket =
        1.0 + (2.0 * m / (constants.r * constants.c1.min(1.0))) * (constants.c1 * phi_sq + constants.c2 * omega);
    let coeff = constants.eta2 * params.d * omega + assumption.gamma + 3.0 * (params.epsilon - params.sigma).abs();
    m * (m - 1.0) * coeff * bracket
}

/// Result of the discrete eigenvalue estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoincareEstimate {
    /// First nonzero eigenvalue of the discrete zero-flux Laplacian.
    pub eta1_discrete: f64,
    /// `π² / L_max²` for the interval or rectangle.
    pub eta1_analytic: f64,
    pub omega: f64,
    pub iterations: usize,
}

impl PoincareEstimate {
    /// Constants with `η2 = η1/|Ω|`, which balances the mean and mean-free
    /// branches of the generalized inequality. The analytic value is used
    /// when `analytic` is set.
    pub fn constants(&self, analytic: bool) -> PoincareConstants {
        let eta1 = if analytic { self.eta1_analytic } else { self.eta1_discrete };
        PoincareConstants { eta1, eta2: eta1 / self.omega }
    }
}

/// Shifted inverse iteration with the constants deflated in the mass inner product.
pub fn estimate_poincare_constants(mesh: &Mesh) -> Result<PoincareEstimate> {
    let k = stiffness_matrix(mesh);
    let mass = mesh.mass();
    let omega = mesh.volume();
    let l_max = mesh.max_extent();
    let shift = 1.0 / (l_max * l_max);
    let system = k.scale_add_diag(1.0, shift, mass);

    let deflate = |v: &mut [f64]| {
        let mean: f64 = v.iter().zip(mass).map(|(v, m)| v * m).sum::<f64>() / omega;
        v.iter_mut().for_each(|x| *x -= mean);
    };
    let normalize = |v: &mut [f64]| {
        let norm = v.iter().zip(mass).map(|(v, m)| v * v * m).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
    };
    let (lx, ly) = match mesh.spec {
        crate::mesh::DomainSpec::Interval { length, .. } => (length, 1.0),
        crate::mesh::DomainSpec::Rectangle { lx, ly, .. } => (lx, ly),
    };
    let mut v = mesh.sample(|x, y| x / lx + 0.3 * (y / ly).powi(2) + 0.1 * (x * y / (lx * ly)));
    deflate(&mut v);
    normalize(&mut v);

    let mut rayleigh = f64::INFINITY;
    for it in 1..=500 {
        let rhs: Vec<f64> = v.iter().zip(mass).map(|(v, m)| v * m).collect();
        let (mut x, _) = solve_spd(&system, &rhs, Some(&v), 1e-13, 10_000)?;
        deflate(&mut x);
        normalize(&mut x);
        let kx = k.mul(&x);
        let next: f64 = kx.iter().zip(&x).map(|(a, b)| a * b).sum();
        v = x;
        if (next - rayleigh).abs() <= 1e-13 * next {
            return Ok(PoincareEstimate {
                eta1_discrete: next,
                eta1_analytic: std::f64::consts::PI.powi(2) / (l_max * l_max),
                omega,
                iterations: it,
            });
        }
        rayleigh = next;
    }
    Err(Error::EigenDiverged { iterations: 500 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetics::Kinetics;
    use crate::mesh::DomainSpec;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn example() -> TheoremConstants {
        let params = ModelParams::desk_default(1.0, 2);
        let ac = Kinetics::ClassicCubic.assumption_constants().unwrap();
        let pc = PoincareConstants { eta1: PI * PI, eta2: PI * PI };
        compute_theorem_constants(&params, &ac, 1.0, Some(pc), None).unwrap()
    }

    #[test]
    fn missing_poincare_is_an_error() {
        let params = ModelParams::desk_default(1.0, 2);
        let ac = Kinetics::ClassicCubic.assumption_constants().unwrap();
        assert!(matches!(compute_theorem_constants(&params, &ac, 1.0, None, None), Err(Error::Missing(_))));
    }

    #[test]
    fn regularity_constants_need_estimates() {
        let c = example();
        assert!(c.k.is_none() && c.pi.is_none() && c.big_m.is_none());
        assert!(c.report().iter().filter(|l| l.value.is_none()).all(|l| l.formula == UNDETERMINED));
    }

    #[test]
    fn supplied_estimates_fill_k_and_pi() {
        let params = ModelParams::desk_default(1.0, 2);
        let ac = Kinetics::ClassicCubic.assumption_constants().unwrap();
        let pc = PoincareConstants { eta1: PI * PI, eta2: PI * PI };
        let est = SemigroupEstimates { c: 0.01, alpha0: 1.0, c4: 0.1, c_star: 2.0 };
        let c = compute_theorem_constants(&params, &ac, 1.0, Some(pc), Some(est)).unwrap();
        let big_m = 0.1 * (2.0 * c.l.sqrt() + 1.0) + 0.08 + 1.0;
        assert_relative_eq!(c.big_m.unwrap(), big_m, max_relative = 1e-14);
        let k = 0.02 * c.q + 2e-4 * big_m * c.q * PI * (1e-4 * big_m * big_m).exp();
        assert_relative_eq!(c.k.unwrap(), k, max_relative = 1e-12);
        assert_relative_eq!(c.pi.unwrap(), 2.0 * k * k, max_relative = 1e-12);
    }

    #[test]
    fn threshold_matches_direct_evaluation() {
        let c = example();
        let params = ModelParams::desk_default(1.0, 2);
        let ac = Kinetics::ClassicCubic.assumption_constants().unwrap();
        assert_relative_eq!(compute_R(&c, &params, &ac, 1.0), c.threshold, max_relative = 1e-12);
    }

    #[test]
    fn equal_rates_drop_the_difference_term() {
        let params = ModelParams { epsilon: 1.0, sigma: 1.0, ..ModelParams::desk_default(1.0, 2) };
        let ac = Kinetics::ClassicCubic.assumption_constants().unwrap();
        let pc = PoincareConstants { eta1: 2.0, eta2: 3.0 };
        let c = compute_theorem_constants(&params, &ac, 1.0, Some(pc), None).unwrap();
        assert_relative_eq!(c.threshold, 2.0 * (3.0 + ac.gamma) * c.q, max_relative = 1e-14);
    }

    #[test]
    fn entry_time_and_bound_are_consistent() {
        let c = example();
        let e0 = 50.0;
        let t = c.absorbing_entry_time(e0);
        assert_relative_eq!(c.dissipative_bound(t, e0), c.q, max_relative = 1e-10);
        assert_eq!(c.absorbing_entry_time(0.0), 0.0);
    }

    #[test]
    fn interval_eigenvalue_is_the_discrete_cosine_mode() {
        for (length, n) in [(1.0, 17), (2.0, 33)] {
            let mesh = Mesh::build(DomainSpec::Interval { length, n }).unwrap();
            let h: f64 = length / (n - 1) as f64;
            let exact = 4.0 / (h * h) * (PI * h / (2.0 * length)).sin().powi(2);
            let est = estimate_poincare_constants(&mesh).unwrap();
            assert_relative_eq!(est.eta1_discrete, exact, max_relative = 1e-9);
            assert_relative_eq!(est.eta1_analytic, PI * PI / (length * length), max_relative = 1e-15);
        }
    }

    #[test]
    fn rectangle_takes_the_long_axis_mode() {
        let mesh = Mesh::build(DomainSpec::Rectangle { lx: 2.0, ly: 1.0, nx: 33, ny: 17 }).unwrap();
        let est = estimate_poincare_constants(&mesh).unwrap();
        assert!((est.eta1_discrete / (PI * PI / 4.0) - 1.0).abs() < 1e-3);
        let pc = est.constants(true);
        assert_relative_eq!(pc.eta2, PI * PI / 8.0, max_relative = 1e-14);
    }
}
