//! Physical parameters, case tags, derived constants, and validation.
//!
//! Every other module consumes these types. All quantities are dimensionless;
//! the adiabatic exponent is tied to the dimension by γ = (2N−2)/N and the
//! viscosity exponent θ depends on the solution case.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which member of the solution family is being constructed.
///
/// `Case1a`, `Case1b`, and `Case2` are the viscous self-similar families;
/// `LegacyGW` and `Legacy2D` are the prior inviscid Emden-type families
/// (power-law profile for N ≥ 3, exponential profile for N = 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolutionCase {
    #[serde(rename = "case1a")]
    Case1a,
    #[serde(rename = "case1b")]
    Case1b,
    #[serde(rename = "case2")]
    Case2,
    #[serde(rename = "legacy_gw")]
    LegacyGW,
    #[serde(rename = "legacy_2d")]
    Legacy2D,
}

impl SolutionCase {
    pub fn label(&self) -> &'static str {
        match self {
            SolutionCase::Case1a => "case1a",
            SolutionCase::Case1b => "case1b",
            SolutionCase::Case2 => "case2",
            SolutionCase::LegacyGW => "legacy_gw",
            SolutionCase::Legacy2D => "legacy_2d",
        }
    }
}

/// All scalar parameters of the system.
///
/// `delta` is the force sign (+1 self-gravity, −1 repulsion, 0 none),
/// `lambda` the background constant Λ, `(m, n)` the scaling-law
/// coefficients with a(0) = n > 0, `alpha_ic` the profile center value
/// f(0) = α > 0, and `lambda_legacy` the constant λ of the legacy scaling
/// equation ä = −λ/a^{N−1}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub n_dim: u32,
    pub k_pressure: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub theta: f64,
    pub delta: i8,
    pub lambda: f64,
    pub m: f64,
    pub n: f64,
    pub alpha_ic: f64,
    pub lambda_legacy: f64,
}

impl PhysicalParams {
    /// Builds parameters for `case` with the exponents set to their exact
    /// rational values for the dimension.
    #[allow(clippy::too_many_arguments)]
    pub fn for_case(
        case: SolutionCase,
        n_dim: u32,
        k_pressure: f64,
        kappa: f64,
        delta: i8,
        lambda: f64,
        m: f64,
        n: f64,
        alpha_ic: f64,
    ) -> Result<Self> {
        let (gamma, theta) = exponents_for(case, n_dim)?;
        let params = PhysicalParams {
            n_dim,
            k_pressure,
            kappa,
            gamma,
            theta,
            delta,
            lambda,
            m,
            n,
            alpha_ic,
            lambda_legacy: 0.0,
        };
        let report = validate(&params, case);
        if !report.is_valid() {
            return Err(Error::InvalidParams(report.to_string()));
        }
        Ok(params)
    }

    pub fn with_lambda_legacy(mut self, lambda_legacy: f64) -> Self {
        self.lambda_legacy = lambda_legacy;
        self
    }

    pub fn delta_f64(&self) -> f64 {
        f64::from(self.delta)
    }

    /// δ·α(N)·Λ, the combination that drives the exponential scaling of case 2.
    pub fn delta_alpha_lambda(&self) -> Result<f64> {
        Ok(self.delta_f64() * alpha_const(self.n_dim)? * self.lambda)
    }
}

/// Result of [`validate`]: the list of violated invariants (empty = valid).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, msg: impl Into<String>) {
        self.violations.push(msg.into());
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_valid() {
            write!(f, "valid")
        } else {
            write!(f, "{}", self.violations.join("; "))
        }
    }
}

/// Γ(x) for positive half-integer x, passed as 2x. Exact closed forms:
/// Γ(k) = (k−1)! and Γ(k + 1/2) = (2k)!·√π/(4^k·k!).
pub(crate) fn gamma_half_integer(twice_x: u32) -> f64 {
    assert!(twice_x > 0, "gamma argument must be positive");
    if twice_x.is_multiple_of(2) {
        let k = twice_x / 2;
        factorial(k - 1)
    } else {
        // twice_x = 2k + 1 → x = k + 1/2
        let k = (twice_x - 1) / 2;
        factorial(2 * k) * std::f64::consts::PI.sqrt() / (4f64.powi(k as i32) * factorial(k))
    }
}

fn factorial(k: u32) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

/// Volume of the unit ball in R^N: π^{N/2} / Γ(N/2 + 1).
pub fn unit_ball_volume(n_dim: u32) -> Result<f64> {
    if n_dim == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let half_n = n_dim as f64 / 2.0;
    Ok(std::f64::consts::PI.powf(half_n) / gamma_half_integer(n_dim + 2))
}

/// The Poisson coupling constant α(N): 2 for N=1, 2π for N=2, and
/// N(N−2)·Vol(N) for N ≥ 3.
pub fn alpha_const(n_dim: u32) -> Result<f64> {
    match n_dim {
        0 => Err(Error::InvalidArgument(
            "alpha_const requires a positive dimension".into(),
        )),
        1 => Ok(2.0),
        2 => Ok(2.0 * std::f64::consts::PI),
        n => {
            let nf = n as f64;
            Ok(nf * (nf - 2.0) * unit_ball_volume(n)?)
        }
    }
}

/// Exact rational exponent pair (γ, θ) for a case and dimension.
///
/// γ = (2N−2)/N throughout. θ is (2N−3)/N for case 1a, (3N−4)/(2N) for
/// case 1b, and equals γ for case 2 (the value the reduction algebra
/// actually closes with). The legacy families are inviscid; they report
/// θ = 0.
pub fn exponents_for(case: SolutionCase, n_dim: u32) -> Result<(f64, f64)> {
    if n_dim < 2 {
        return Err(Error::InvalidArgument(format!(
            "dimension N = {n_dim} not supported (need N >= 2)"
        )));
    }
    let nf = n_dim as f64;
    let gamma = (2.0 * nf - 2.0) / nf;
    match case {
        SolutionCase::Case1a => Ok((gamma, (2.0 * nf - 3.0) / nf)),
        SolutionCase::Case1b => Ok((gamma, (3.0 * nf - 4.0) / (2.0 * nf))),
        SolutionCase::Case2 => Ok((gamma, gamma)),
        SolutionCase::LegacyGW => {
            if n_dim < 3 {
                return Err(Error::InvalidArgument(
                    "legacy power-law family requires N >= 3".into(),
                ));
            }
            Ok((gamma, 0.0))
        }
        SolutionCase::Legacy2D => {
            if n_dim != 2 {
                return Err(Error::InvalidArgument(
                    "legacy exponential family requires N = 2".into(),
                ));
            }
            Ok((1.0, 0.0))
        }
    }
}

/// Checks every invariant of `params` against `case` and lists violations.
///
/// Report-style: never errors, returns the (possibly empty) violation list.
pub fn validate(params: &PhysicalParams, case: SolutionCase) -> ValidationReport {
    let mut report = ValidationReport::default();

    if params.n_dim < 2 {
        report.push(format!("N >= 2 required (got {})", params.n_dim));
        return report;
    }
    if !(params.n > 0.0) {
        report.push("n>0 required");
    }
    if !(params.alpha_ic > 0.0) {
        report.push("alpha>0 required");
    }
    if !(params.k_pressure > 0.0) {
        report.push("K>0 required");
    }
    if params.kappa < 0.0 {
        report.push("kappa>=0 required");
    }
    if params.theta < 0.0 {
        report.push("theta>=0 required");
    }
    if !matches!(params.delta, -1..=1) {
        report.push(format!("delta must be -1, 0, or +1 (got {})", params.delta));
    }
    if params.lambda < 0.0 {
        report.push("Lambda>=0 required");
    }
    if !params.m.is_finite() || !params.n.is_finite() {
        report.push("m, n must be finite");
    }

    match exponents_for(case, params.n_dim) {
        Ok((gamma, theta)) => {
            let eps = 4.0 * f64::EPSILON;
            if (params.gamma - gamma).abs() > eps * gamma.abs().max(1.0) {
                report.push(format!(
                    "gamma must equal (2N-2)/N = {gamma:.17} for {} (got {:.17})",
                    case.label(),
                    params.gamma
                ));
            }
            // Legacy families carry no viscosity exponent; skip the theta check.
            if !matches!(case, SolutionCase::LegacyGW | SolutionCase::Legacy2D)
                && (params.theta - theta).abs() > eps * theta.abs().max(1.0)
            {
                report.push(format!(
                    "theta must equal {theta:.17} for {} (got {:.17})",
                    case.label(),
                    params.theta
                ));
            }
        }
        Err(e) => report.push(e.to_string()),
    }

    if matches!(case, SolutionCase::Case1a | SolutionCase::Case1b)
        && params.delta != 0
        && params.lambda != 0.0
    {
        report.push("cases 1a/1b require Lambda = 0 when the force term is active");
    }

    if case == SolutionCase::Case2 {
        let dl = params.delta_f64() * params.lambda;
        if !(dl > 0.0) {
            report.push("delta·Lambda must be positive");
        } else if let Ok(alpha) = alpha_const(params.n_dim) {
            let root =
                (params.n_dim as f64 * params.delta_f64() * alpha * params.lambda).sqrt();
            let coeff = params.gamma * params.k_pressure - params.kappa * params.theta * root;
            let floor = 1e-12 * (params.gamma * params.k_pressure).abs().max(1.0);
            if coeff.abs() < floor {
                report.push(format!(
                    "case 2 coefficient gammaK - kappa·theta·sqrt(N·delta·alpha(N)·Lambda) \
                     is degenerate ({coeff:.3e})"
                ));
            }
        }
    }

    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    /// Lanczos approximation of Γ(x), used only as an independent oracle
    /// against the closed-form half-integer values.
    #[allow(clippy::excessive_precision)]
    fn lanczos_gamma(x: f64) -> f64 {
        const G: f64 = 7.0;
        const COEF: [f64; 9] = [
            0.99999999999980993,
            676.5203681218851,
            -1259.1392167224028,
            771.32342877765313,
            -176.61502916214059,
            12.507343278686905,
            -0.13857109526572012,
            9.9843695780195716e-6,
            1.5056327351493116e-7,
        ];
        if x < 0.5 {
            PI / ((PI * x).sin() * lanczos_gamma(1.0 - x))
        } else {
            let x = x - 1.0;
            let mut a = COEF[0];
            let t = x + G + 0.5;
            for (i, &c) in COEF.iter().enumerate().skip(1) {
                a += c / (x + i as f64);
            }
            (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
        }
    }

    #[test]
    fn gamma_half_integers_match_lanczos() {
        for twice_x in 1..=24 {
            let x = twice_x as f64 / 2.0;
            assert_relative_eq!(
                gamma_half_integer(twice_x),
                lanczos_gamma(x),
                max_relative = 1e-12
            );
        }
        // Γ(5/2) = 3√π/4, the value used to pin Vol(3) = 4π/3.
        assert_relative_eq!(
            gamma_half_integer(5),
            3.0 * PI.sqrt() / 4.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn alpha_const_special_values() {
        assert_eq!(alpha_const(1).unwrap(), 2.0);
        assert_relative_eq!(alpha_const(2).unwrap(), 2.0 * PI, max_relative = 1e-15);
        // α(3) = 3·1·Vol(3) = 4π via Γ(5/2) = 3√π/4.
        assert_relative_eq!(alpha_const(3).unwrap(), 4.0 * PI, max_relative = 1e-14);
    }

    #[test]
    fn alpha_const_rejects_nonpositive_dimension() {
        assert!(matches!(alpha_const(0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn alpha_const_agrees_with_direct_formula() {
        for n in 3..=10u32 {
            let nf = n as f64;
            let direct = nf * (nf - 2.0) * PI.powf(nf / 2.0) / lanczos_gamma(nf / 2.0 + 1.0);
            assert_relative_eq!(alpha_const(n).unwrap(), direct, max_relative = 1e-14);
        }
    }

    #[test]
    fn exponents_case1a_n3() {
        let (gamma, theta) = exponents_for(SolutionCase::Case1a, 3).unwrap();
        assert_relative_eq!(gamma, 4.0 / 3.0, max_relative = 1e-16);
        assert_relative_eq!(theta, 1.0, max_relative = 1e-16);
    }

    #[test]
    fn exponents_case1b_n2() {
        let (gamma, theta) = exponents_for(SolutionCase::Case1b, 2).unwrap();
        assert_eq!(gamma, 1.0);
        assert_eq!(theta, 0.5);
    }

    #[test]
    fn exponents_coincide_at_n2() {
        // At N = 2 the two case-1 exponent pairs are identical.
        let a = exponents_for(SolutionCase::Case1a, 2).unwrap();
        let b = exponents_for(SolutionCase::Case1b, 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn exponents_pure_and_total() {
        for case in [
            SolutionCase::Case1a,
            SolutionCase::Case1b,
            SolutionCase::Case2,
        ] {
            for n in 2..=10 {
                let first = exponents_for(case, n).unwrap();
                let second = exponents_for(case, n).unwrap();
                assert_eq!(first, second, "exponents must be bit-identical");
            }
        }
        assert!(exponents_for(SolutionCase::LegacyGW, 2).is_err());
        assert!(exponents_for(SolutionCase::Legacy2D, 3).is_err());
        assert!(exponents_for(SolutionCase::Case1a, 1).is_err());
    }

    #[test]
    fn validate_accepts_reference_case1a() {
        let params =
            PhysicalParams::for_case(SolutionCase::Case1a, 3, 1.0, 1.0, 1, 0.0, -1.0, 1.0, 1.0)
                .unwrap();
        let report = validate(&params, SolutionCase::Case1a);
        assert!(report.is_valid(), "unexpected violations: {report}");
    }

    #[test]
    fn validate_flags_case2_without_background() {
        let mut params =
            PhysicalParams::for_case(SolutionCase::Case1a, 3, 1.0, 1.0, 1, 0.0, -1.0, 1.0, 1.0)
                .unwrap();
        let (gamma, theta) = exponents_for(SolutionCase::Case2, 3).unwrap();
        params.gamma = gamma;
        params.theta = theta;
        params.lambda = 0.0;
        let report = validate(&params, SolutionCase::Case2);
        assert!(report
            .violations
            .iter()
            .any(|v| v.contains("delta·Lambda must be positive")));
    }

    #[test]
    fn validate_flags_nonpositive_n() {
        let mut params =
            PhysicalParams::for_case(SolutionCase::Case1a, 3, 1.0, 1.0, 1, 0.0, -1.0, 1.0, 1.0)
                .unwrap();
        params.n = 0.0;
        let report = validate(&params, SolutionCase::Case1a);
        assert!(report.violations.iter().any(|v| v.contains("n>0")));
    }

    #[test]
    fn validate_flags_exponent_mismatch() {
        let mut params =
            PhysicalParams::for_case(SolutionCase::Case1a, 3, 1.0, 1.0, 1, 0.0, -1.0, 1.0, 1.0)
                .unwrap();
        params.gamma = 1.4;
        let report = validate(&params, SolutionCase::Case1a);
        assert!(report.violations.iter().any(|v| v.contains("gamma")));
    }
}
