//! Integration of the self-similar profile equations.
//!
//! The momentum equation reduces, on the profile variable z = r/a(t), to an
//! integro-differential equation
//!
//! ```text
//! D(f)·f'(z) + g·M(z)/z^{N−1} = forcing(z),    M(z) = ∫₀^z f(s)·s^{N−1} ds,
//! D(f) = A·f^{γ−2} − c_v·f^{θ−2},              g = δ·α(N),
//! ```
//!
//! which this module integrates as the first-order system (f, M) with
//! dM/dz = f·z^{N−1}. The z → 0 singularity is removable through the even
//! series expansion of f about the center; integration starts at a small
//! z₀ > 0 from that expansion, and the node at z = 0 carries the exact
//! series jet so dense output covers [0, z₀] too.
//!
//! Free-boundary handling: with negative exponents γ−2 and θ−2 the
//! denominator D(f) diverges as f → 0, so profiles can reach vacuum either
//! through a genuine contact point at finite z (single-term denominators:
//! f ~ (Z−z)^{N/(N−2)}) or through an asymptotic tail. The integrator
//! reports which one happened in [`SupportKind`] instead of asserting that
//! a finite first zero always exists.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{alpha_const, validate, PhysicalParams, SolutionCase};
use crate::ode::{
    self, Halt, IntegratorStats, OdeSystem, QuinticSegment, StepControl, StepVerdict,
};

/// How the integrated profile terminated at the outer edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportKind {
    /// f reached zero at finite z (free boundary at Z_μ).
    ZeroCrossing,
    /// f decayed below the vacuum cutoff with a bounded logarithmic slope.
    AsymptoticDecay,
    /// Integration stopped at z_max with f still positive.
    Truncated,
}

/// Coefficients of the case-specific profile equation.
///
/// `pressure_coeff` is A, the coefficient of f^{γ−2} in D(f) (for case 2 the
/// viscosity is folded into A and `visc_coeff` is zero); `visc_coeff` is the
/// drag coefficient c_v multiplying f^{θ−2}; the forcing is linear in z with
/// slope `forcing_slope`; `gravity_coeff` is δ·α(N).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileOdeForm {
    pub n_dim: u32,
    pub gamma: f64,
    pub theta: f64,
    pub pressure_coeff: f64,
    pub visc_coeff: f64,
    pub forcing_slope: f64,
    pub gravity_coeff: f64,
    pub denom_floor: f64,
}

impl ProfileOdeForm {
    /// Builds the ODE coefficients for a validated (params, case) pair.
    pub fn for_case(params: &PhysicalParams, case: SolutionCase) -> Result<Self> {
        let alpha_n = alpha_const(params.n_dim)?;
        let nf = params.n_dim as f64;
        let gamma_k = params.gamma * params.k_pressure;
        let (pressure_coeff, visc_coeff, forcing_slope) = match case {
            SolutionCase::Case1a => (gamma_k, params.m * params.kappa * params.theta * nf, 0.0),
            SolutionCase::Case1b => (
                gamma_k,
                2.0 * params.m * params.kappa * params.theta,
                2.0 * (nf - 2.0) * params.m * params.m / (nf * nf),
            ),
            SolutionCase::Case2 => {
                let root = (nf * params.delta_f64() * alpha_n * params.lambda).sqrt();
                (gamma_k - params.kappa * params.theta * root, 0.0, 0.0)
            }
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "profile equation is defined for cases 1a, 1b, 2 (got {})",
                    case.label()
                )))
            }
        };
        let denom_floor = 1e-12 * (gamma_k * params.alpha_ic.powf(params.gamma - 2.0)).max(1.0);
        Ok(ProfileOdeForm {
            n_dim: params.n_dim,
            gamma: params.gamma,
            theta: params.theta,
            pressure_coeff,
            visc_coeff,
            forcing_slope,
            gravity_coeff: params.delta_f64() * alpha_n,
            denom_floor,
        })
    }

    pub fn forcing(&self, z: f64) -> f64 {
        self.forcing_slope * z
    }

    /// D(f) = A·f^{γ−2} − c_v·f^{θ−2}. Zero-coefficient terms are skipped so
    /// inviscid forms stay finite arbitrarily close to the vacuum boundary.
    pub fn denominator(&self, f: f64) -> f64 {
        let mut d = self.pressure_coeff * f.powf(self.gamma - 2.0);
        if self.visc_coeff != 0.0 {
            d -= self.visc_coeff * f.powf(self.theta - 2.0);
        }
        d
    }

    /// Right-hand side of the (f, M) system at z > 0:
    /// df/dz = [forcing(z) − g·M/z^{N−1}] / D(f), dM/dz = f·z^{N−1}.
    pub fn ode_rhs(&self, z: f64, f: f64, m: f64) -> Result<(f64, f64)> {
        if !(z > 0.0) {
            return Err(Error::InvalidArgument(
                "profile right-hand side requires z > 0".into(),
            ));
        }
        if !(f > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "profile right-hand side requires f > 0 (got {f:.3e} at z = {z:.6e})"
            )));
        }
        let d = self.denominator(f);
        if d.abs() < self.denom_floor {
            return Err(Error::DegenerateDenominator { z, f });
        }
        let zn1 = z.powi(self.n_dim as i32 - 1);
        let df = (self.forcing(z) - self.gravity_coeff * m / zn1) / d;
        Ok((df, f * zn1))
    }

    /// Center curvature f₂ of the series f(z) = α + ½·f₂·z² + O(z⁴).
    pub fn curvature_at_origin(&self, alpha_ic: f64) -> Result<f64> {
        let d = self.denominator(alpha_ic);
        if d.abs() < self.denom_floor {
            return Err(Error::DegenerateDenominator {
                z: 0.0,
                f: alpha_ic,
            });
        }
        Ok((self.forcing_slope - self.gravity_coeff * alpha_ic / self.n_dim as f64) / d)
    }
}

/// Cubic Hermite of g on [x0, x1] from endpoint values and slopes.
fn cubic_hermite(x0: f64, x1: f64, g0: f64, dg0: f64, g1: f64, dg1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let u = (x - x0) / h;
    let delta = g1 - g0;
    let c2 = 3.0 * delta - (2.0 * dg0 + dg1) * h;
    let c3 = -2.0 * delta + (dg0 + dg1) * h;
    g0 + u * (dg0 * h + u * (c2 + u * c3))
}

/// Consistent starting values (f, M, f') at 0 < z₀ ≪ 1 from the two-term
/// center expansion.
pub fn series_start(form: &ProfileOdeForm, alpha_ic: f64, z0: f64) -> Result<(f64, f64, f64)> {
    if !(z0 > 0.0 && z0 < 1.0) {
        return Err(Error::InvalidArgument(
            "series start requires 0 < z0 < 1".into(),
        ));
    }
    let f2 = form.curvature_at_origin(alpha_ic)?;
    let nf = form.n_dim as f64;
    let f = alpha_ic + 0.5 * f2 * z0 * z0;
    let fprime = f2 * z0;
    let m = alpha_ic * z0.powi(form.n_dim as i32) / nf
        + 0.5 * f2 * z0.powi(form.n_dim as i32 + 2) / (nf + 2.0);
    Ok((f, m, fprime))
}

/// Dense radial profile: f, f', M at the accepted nodes, the detected free
/// boundary, and how the support terminated.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileSolution {
    pub case: SolutionCase,
    pub form: ProfileOdeForm,
    pub alpha_ic: f64,
    pub z_nodes: Vec<f64>,
    pub f_values: Vec<f64>,
    pub fprime_values: Vec<f64>,
    pub fsecond_values: Vec<f64>,
    pub m_values: Vec<f64>,
    pub z_mu: Option<f64>,
    pub support_kind: SupportKind,
    pub stats: IntegratorStats,
}

/// Interpolated profile data at one z.
#[derive(Debug, Clone, Copy)]
pub struct ProfilePoint {
    pub f: f64,
    pub f_prime: f64,
    pub m: f64,
}

/// One plug-back residual evaluation: signed value plus the magnitude of the
/// largest constituent term (the natural normalization scale).
#[derive(Debug, Clone, Copy)]
pub struct ResidualSample {
    pub value: f64,
    pub scale: f64,
}

impl ResidualSample {
    pub fn magnitude(&self) -> f64 {
        self.value.abs()
    }

    pub fn scaled(&self) -> f64 {
        self.value.abs() / self.scale.max(f64::MIN_POSITIVE)
    }
}

impl ProfileSolution {
    /// Outer edge of the integrated support (Z_μ when a crossing was found,
    /// otherwise the last node).
    pub fn support_end(&self) -> f64 {
        self.z_mu
            .unwrap_or_else(|| *self.z_nodes.last().expect("profile has nodes"))
    }

    /// Cumulative mass integral at the outer edge.
    pub fn total_profile_mass(&self) -> f64 {
        *self.m_values.last().expect("profile has nodes")
    }

    fn segment_index(&self, z: f64) -> Option<usize> {
        let last = *self.z_nodes.last()?;
        if !(0.0..=last).contains(&z) {
            return None;
        }
        let i = self.z_nodes.partition_point(|&node| node <= z);
        Some(i.clamp(1, self.z_nodes.len() - 1) - 1)
    }

    fn m_prime(&self, i: usize) -> f64 {
        self.f_values[i] * self.z_nodes[i].powi(self.form.n_dim as i32 - 1)
    }

    fn m_second(&self, i: usize) -> f64 {
        let z = self.z_nodes[i];
        let nm1 = self.form.n_dim as i32 - 1;
        self.fprime_values[i] * z.powi(nm1)
            + nm1 as f64 * self.f_values[i] * z.powi(nm1 - 1)
    }

    /// Interpolation of (f, f', M) at z within the support: quintic Hermite
    /// for the values, cubic Hermite on the nodal (f', f'') for the
    /// derivative. Interpolating f' from its own data matters: near the
    /// center f varies by ~f₂·h²/2 per segment, which drowns in the
    /// rounding of values O(α), while f' itself is small and clean.
    ///
    /// Works straight off the node arrays, so it reflects any mutation of
    /// them — plug-back checks read exactly what the struct holds.
    pub fn eval(&self, z: f64) -> Option<ProfilePoint> {
        let i = self.segment_index(z)?;
        let f_seg = QuinticSegment::<1>::from_jets(
            self.z_nodes[i],
            self.z_nodes[i + 1],
            &[self.f_values[i]],
            &[self.fprime_values[i]],
            &[self.fsecond_values[i]],
            &[self.f_values[i + 1]],
            &[self.fprime_values[i + 1]],
            &[self.fsecond_values[i + 1]],
        );
        let m_seg = QuinticSegment::<1>::from_jets(
            self.z_nodes[i],
            self.z_nodes[i + 1],
            &[self.m_values[i]],
            &[self.m_prime(i)],
            &[self.m_second(i)],
            &[self.m_values[i + 1]],
            &[self.m_prime(i + 1)],
            &[self.m_second(i + 1)],
        );
        // Derivative: the quintic's own derivative is an order more accurate
        // wherever the segment's f-variation is resolved above value
        // rounding; otherwise its coefficients are cancellation noise and
        // the cubic Hermite built from (f', f'') — small, clean numbers —
        // takes over.
        let variation = (self.f_values[i + 1] - self.f_values[i]).abs();
        let resolved = variation > 1e-5 * self.f_values[i].abs().max(self.f_values[i + 1].abs());
        let f_prime = if resolved {
            f_seg.derivative(z)[0]
        } else {
            cubic_hermite(
                self.z_nodes[i],
                self.z_nodes[i + 1],
                self.fprime_values[i],
                self.fsecond_values[i],
                self.fprime_values[i + 1],
                self.fsecond_values[i + 1],
                z,
            )
        };
        Some(ProfilePoint {
            f: f_seg.value(z)[0],
            f_prime,
            m: m_seg.value(z)[0],
        })
    }

    /// First zero of f: a sign change bracketed by the stored nodes is
    /// refined by bisection of the dense output to 1e−12 relative; absent
    /// that, a free boundary recorded during integration is returned.
    pub fn first_zero(&self) -> Option<f64> {
        for i in 0..self.f_values.len().saturating_sub(1) {
            if self.f_values[i] > 0.0 && self.f_values[i + 1] < 0.0 {
                return Some(self.bisect_f_zero(self.z_nodes[i], self.z_nodes[i + 1]));
            }
        }
        match self.support_kind {
            SupportKind::ZeroCrossing => self.z_mu,
            _ => None,
        }
    }

    fn bisect_f_zero(&self, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= 1e-12 * mid.abs().max(f64::MIN_POSITIVE) {
                return mid;
            }
            let f_mid = self.eval(mid).map(|p| p.f).unwrap_or(f64::NAN);
            if f_mid > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Plug-back residual of the profile equation at z, evaluated from the
    /// interpolated (f, f', M):
    ///
    /// ```text
    /// A·f^{γ−2}·f' − c_v·f^{θ−2}·f' + g·M/z^{N−1} − forcing(z)
    /// ```
    ///
    /// Identically zero on the exact solution; on the dense output it
    /// measures interpolation defect only.
    pub fn profile_residual(&self, z: f64) -> Result<ResidualSample> {
        let last = *self.z_nodes.last().expect("profile has nodes");
        if !(z > 0.0 && z < last) {
            return Err(Error::InvalidArgument(format!(
                "residual point z = {z:.6e} outside (0, {last:.6e})"
            )));
        }
        let p = self.eval(z).expect("z inside support");
        if !(p.f > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "profile residual requires f(z) > 0 (got {:.3e})",
                p.f
            )));
        }
        let form = &self.form;
        let t_pressure = form.pressure_coeff * p.f.powf(form.gamma - 2.0) * p.f_prime;
        let t_visc = if form.visc_coeff != 0.0 {
            -form.visc_coeff * p.f.powf(form.theta - 2.0) * p.f_prime
        } else {
            0.0
        };
        let t_gravity = form.gravity_coeff * p.m / z.powi(form.n_dim as i32 - 1);
        let t_forcing = -form.forcing(z);
        let value = t_pressure + t_visc + t_gravity + t_forcing;
        let scale = t_pressure
            .abs()
            .max(t_visc.abs())
            .max(t_gravity.abs())
            .max(t_forcing.abs());
        Ok(ResidualSample { value, scale })
    }
}

/// Tunable knobs for [`integrate_profile_opts`]. Defaults match the
/// documented configuration defaults.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProfileOptions {
    pub z_max: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub z0: f64,
    pub eps_cut: f64,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions {
            z_max: 10.0,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            z0: 1e-6,
            eps_cut: 1e-8,
        }
    }
}

// Vacuum-tail classification: once f < eps_cut·α the run stops; it counts as
// asymptotic decay only if the logarithmic slope stays bounded,
// |f'|·max(z,1) ≤ DECAY_LOG_SLOPE·f. Free-boundary contact has
// f'/f ~ 1/f^{1/(N/(N-2))·…} → ∞ there, so it keeps integrating and is
// caught by the positivity stall instead. A fixed absolute slope tolerance
// cannot separate the two (both f and f' vanish at contact).
const DECAY_LOG_SLOPE: f64 = 100.0;

/// Integration chart: the profile is advanced in a transformed state
/// u = chart(f) in which the vacuum boundary is regular.
///
/// With a single-term denominator (visc_coeff = 0) the combination
/// u = f^{γ−1} obeys u' = (γ−1)·Q(z)/A, which crosses u = 0 with nonzero
/// slope at the free boundary — a simple root instead of an
/// infinite-order contact. With viscosity the θ term dominates the
/// denominator near vacuum and u = f^{θ−1} plays the same role. When the
/// dominant exponent is exactly 1 the power transform degenerates and
/// u = ln f is the regular variable (no finite contact exists there).
/// Error control in u is relative control in f at every density scale,
/// which pins both the free-boundary location and the vacuum-tail
/// interpolation defect to the requested tolerance.
#[derive(Debug, Clone, Copy)]
enum Chart {
    Log,
    Power { p: f64 },
}

impl Chart {
    fn select(form: &ProfileOdeForm) -> Chart {
        let p = if form.visc_coeff != 0.0 {
            form.theta - 1.0
        } else {
            form.gamma - 1.0
        };
        if p.abs() < 1e-9 {
            Chart::Log
        } else {
            Chart::Power { p }
        }
    }

    fn u_of(&self, f: f64) -> f64 {
        match self {
            Chart::Log => f.ln(),
            Chart::Power { p } => f.powf(*p),
        }
    }

    /// f(u). None means the profile diverged (u hit the f → ∞ branch of a
    /// negative-power chart). Past-contact values (u ≤ 0, p > 0) clamp to
    /// vacuum so a step may complete across the free boundary before the
    /// crossing is refined and clipped.
    fn f_of(&self, u: f64) -> Option<f64> {
        match self {
            Chart::Log => Some(u.exp()),
            Chart::Power { p } if *p > 0.0 => Some(if u <= 0.0 { 0.0 } else { u.powf(1.0 / p) }),
            Chart::Power { p } => {
                if u > 0.0 {
                    Some(u.powf(1.0 / p))
                } else {
                    None
                }
            }
        }
    }

    /// (f, f', f'') from a u-jet (u, u', u'').
    fn f_jet(&self, u: f64, du: f64, d2u: f64) -> (f64, f64, f64) {
        match self {
            Chart::Log => {
                let f = u.exp();
                (f, f * du, f * (d2u + du * du))
            }
            Chart::Power { p } => {
                if *p > 0.0 && u <= 0.0 {
                    return (0.0, 0.0, 0.0);
                }
                let inv = 1.0 / p;
                let f = u.powf(inv);
                let fp = inv * u.powf(inv - 1.0) * du;
                let fpp = inv * (inv - 1.0) * u.powf(inv - 2.0) * du * du
                    + inv * u.powf(inv - 1.0) * d2u;
                (
                    f,
                    if fp.is_finite() { fp } else { 0.0 },
                    if fpp.is_finite() { fpp } else { 0.0 },
                )
            }
        }
    }

    /// f' from (u, u').
    fn f_prime(&self, u: f64, du: f64) -> f64 {
        let (_, fp, _) = self.f_jet(u, du, 0.0);
        fp
    }
}

struct ChartedProfileSystem<'a> {
    form: &'a ProfileOdeForm,
    chart: Chart,
    /// Below this u the step cap is released and the crossing step runs.
    u_floor: f64,
}

#[derive(Debug, Clone, Copy)]
enum ProfileRhsError {
    /// f left the chart's domain upward (profile diverged).
    Diverged,
    Degenerate { z: f64, f: f64 },
}

impl ChartedProfileSystem<'_> {
    /// Reduced denominator E and companion data for the chart:
    /// Log: E = f·D(f) = A·f^{γ−1} − c_v·f^{θ−1}, u' = Q/E.
    /// Power(p): E = f^{1−p}·D(f) = A·f^{γ−1−p} − c_v·f^{θ−1−p}, u' = p·Q/E.
    /// Both stay finite where D itself diverges (f → 0).
    fn reduced_denominator(&self, f: f64) -> f64 {
        let form = self.form;
        let shift = match self.chart {
            Chart::Log => 0.0,
            Chart::Power { p } => p,
        };
        let mut e = form.pressure_coeff * f.powf(form.gamma - 1.0 - shift);
        if form.visc_coeff != 0.0 {
            e -= form.visc_coeff * f.powf(form.theta - 1.0 - shift);
        }
        e
    }

    /// |D(f)| < floor expressed through the reduced denominator.
    fn is_degenerate(&self, f: f64, e: f64) -> bool {
        if f <= 0.0 {
            return false;
        }
        let back = match self.chart {
            Chart::Log => f,
            Chart::Power { p } => f.powf(1.0 - p),
        };
        e.abs() < self.form.denom_floor * back
    }
}

impl OdeSystem<2> for ChartedProfileSystem<'_> {
    type Error = ProfileRhsError;

    /// Approaching the free boundary, u = f^p falls linearly through zero;
    /// cap the relative u-decrease per step so the f-space dense output
    /// (which varies like u^{1/p}) keeps relative accuracy on each segment.
    fn max_step(&self, _z: f64, y: &[f64; 2], dy: &[f64; 2]) -> f64 {
        match self.chart {
            Chart::Power { p } if p > 0.0 && y[0] > self.u_floor && dy[0] < 0.0 => {
                0.25 * y[0] / -dy[0]
            }
            _ => f64::INFINITY,
        }
    }

    fn rhs(&self, z: f64, y: &[f64; 2], dy: &mut [f64; 2]) -> std::result::Result<(), ProfileRhsError> {
        let (u, m) = (y[0], y[1]);
        let Some(f) = self.chart.f_of(u) else {
            return Err(ProfileRhsError::Diverged);
        };
        if !f.is_finite() {
            return Err(ProfileRhsError::Diverged);
        }
        let form = self.form;
        let zn1 = z.powi(form.n_dim as i32 - 1);
        let q = form.forcing(z) - form.gravity_coeff * m / zn1;
        let e = self.reduced_denominator(f);
        if self.is_degenerate(f, e) {
            return Err(ProfileRhsError::Degenerate { z, f });
        }
        dy[0] = match self.chart {
            Chart::Log => q / e,
            Chart::Power { p } => p * q / e,
        };
        dy[1] = f * zn1;
        Ok(())
    }

    fn second_derivative(&self, z: f64, y: &[f64; 2], dy: &[f64; 2], d2y: &mut [f64; 2]) {
        let (u, m) = (y[0], y[1]);
        let du = dy[0];
        let form = self.form;
        let nf = form.n_dim as f64;
        let f = self.chart.f_of(u).unwrap_or(0.0);
        let fp = self.chart.f_prime(u, du);

        let q = form.forcing(z) - form.gravity_coeff * m / z.powi(form.n_dim as i32 - 1);
        let q_prime = form.forcing_slope
            - form.gravity_coeff * (f + (1.0 - nf) * m / z.powi(form.n_dim as i32));

        let e = self.reduced_denominator(f);
        let shift = match self.chart {
            Chart::Log => 0.0,
            Chart::Power { p } => p,
        };
        // dE/dz, with the f^{…}·f' products contracted so nothing blows up
        // as f → 0 on the exponents used here.
        let mut e_prime = if f > 0.0 {
            let g = form.gamma - 1.0 - shift;
            let mut v = form.pressure_coeff * g * f.powf(g - 1.0) * fp;
            if form.visc_coeff != 0.0 {
                let t = form.theta - 1.0 - shift;
                v -= form.visc_coeff * t * f.powf(t - 1.0) * fp;
            }
            v
        } else {
            0.0
        };
        if !e_prime.is_finite() {
            e_prime = 0.0;
        }
        let scale = match self.chart {
            Chart::Log => 1.0,
            Chart::Power { p } => p,
        };
        d2y[0] = scale * (q_prime * e - q * e_prime) / (e * e);

        let nm1 = form.n_dim as i32 - 1;
        d2y[1] = fp * z.powi(nm1) + nm1 as f64 * f * z.powi(nm1 - 1);
    }
}

/// Integrates the profile equation for (params, case) out to z_max with the
/// default origin offset and vacuum cutoff.
pub fn integrate_profile(
    params: &PhysicalParams,
    case: SolutionCase,
    z_max: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<ProfileSolution> {
    integrate_profile_opts(
        params,
        case,
        &ProfileOptions {
            z_max,
            rel_tol,
            abs_tol,
            ..ProfileOptions::default()
        },
    )
}

/// Fully configurable profile integration.
pub fn integrate_profile_opts(
    params: &PhysicalParams,
    case: SolutionCase,
    opts: &ProfileOptions,
) -> Result<ProfileSolution> {
    let report = validate(params, case);
    if !report.is_valid() {
        return Err(Error::InvalidParams(report.to_string()));
    }
    if !(opts.z_max > opts.z0) {
        return Err(Error::InvalidArgument(format!(
            "z_max = {} must exceed z0 = {}",
            opts.z_max, opts.z0
        )));
    }
    for (name, tol) in [("rel_tol", opts.rel_tol), ("abs_tol", opts.abs_tol)] {
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "{name} must lie in (0, 1), got {tol:.3e}"
            )));
        }
    }

    let form = ProfileOdeForm::for_case(params, case)?;
    let alpha = params.alpha_ic;
    let f2 = form.curvature_at_origin(alpha)?;
    let (f_start, m_start, _) = series_start(&form, alpha, opts.z0)?;

    let chart = Chart::select(&form);
    let u_floor = match chart {
        Chart::Power { p } if p > 0.0 => (opts.eps_cut * alpha).powf(p),
        _ => 0.0,
    };
    let sys = ChartedProfileSystem {
        form: &form,
        chart,
        u_floor,
    };
    // abs_tol is specified in f units; map it through du/df at the center.
    let abs_tol_u = match chart {
        Chart::Log => opts.abs_tol / alpha,
        Chart::Power { p } => opts.abs_tol * p.abs() * alpha.powf(p - 1.0),
    };
    let ctrl = StepControl {
        rel_tol: opts.rel_tol,
        abs_tol: abs_tol_u.min(opts.abs_tol.max(1e-300)),
        // Geometric stepping away from the removable origin singularity:
        // M ~ α z^N / N spans many decades and needs relative resolution.
        h_initial: Some(opts.z0),
        h_max_rel: 0.5,
        ..StepControl::default()
    };

    let eps_cut = opts.eps_cut * alpha;
    let crossing_possible = matches!(chart, Chart::Power { p } if p > 0.0);
    let mut decay_stop = false;
    let mut crossing_stop = false;
    let (mut traj, halt) = ode::integrate(
        &sys,
        opts.z0,
        [chart.u_of(f_start), m_start],
        opts.z_max,
        &ctrl,
        |traj| {
            let z = traj.last_x();
            let u = traj.last_y()[0];
            if crossing_possible && u <= 0.0 {
                crossing_stop = true;
                return StepVerdict::Stop;
            }
            let du = traj.dys.last().expect("node present")[0];
            let f = chart.f_of(u).unwrap_or(f64::INFINITY);
            let fp = chart.f_prime(u, du);
            if f < eps_cut && fp.abs() * z.max(1.0) <= DECAY_LOG_SLOPE * f {
                decay_stop = true;
                StepVerdict::Stop
            } else {
                StepVerdict::Continue
            }
        },
    );

    let (support_kind, z_mu) = match halt {
        Halt::ReachedEnd => (SupportKind::Truncated, None),
        Halt::Observer if crossing_stop => {
            // The free boundary is a simple root of u, but the step that
            // detected it integrated across the vacuum kink, so its dense
            // output is not trusted for the root. Newton-refine instead:
            // re-integrate short runs from the last interior node to the
            // current estimate and correct with the endpoint (u, u').
            let i = traj.len() - 2;
            let z_lo = traj.xs[i];
            let y_lo = traj.ys[i];
            let z_hi = traj.xs[i + 1];
            let mut z_est = traj.bisect_component(0, 0.0, z_lo, z_hi, 1e-13);
            // Drop the past-contact node; the refined tail replaces it.
            traj.xs.pop();
            traj.ys.pop();
            traj.dys.pop();
            traj.d2ys.pop();

            let mut tail: Option<ode::Trajectory<2>> = None;
            for _ in 0..6 {
                let (mini, mini_halt) =
                    ode::integrate(&sys, z_lo, y_lo, z_est, &ctrl, |_| StepVerdict::Continue);
                if !matches!(mini_halt, Halt::ReachedEnd) {
                    break;
                }
                let u_end = mini.last_y()[0];
                let du_end = mini.dys.last().expect("node present")[0];
                traj.stats.rhs_evaluations += mini.stats.rhs_evaluations;
                traj.stats.steps_accepted += mini.stats.steps_accepted;
                traj.stats.steps_rejected += mini.stats.steps_rejected;
                tail = Some(mini);
                if du_end == 0.0 || !du_end.is_finite() {
                    break;
                }
                let dz = -u_end / du_end;
                let z_new = (z_est + dz).clamp(z_lo + opts.z0, z_hi);
                let converged = (z_new - z_est).abs() <= 1e-13 * z_est.abs();
                z_est = z_new;
                if converged {
                    break;
                }
            }
            if let Some(mini) = tail {
                for j in 1..mini.len() {
                    traj.xs.push(mini.xs[j]);
                    traj.ys.push(mini.ys[j]);
                    traj.dys.push(mini.dys[j]);
                    traj.d2ys.push(mini.d2ys[j]);
                }
                (SupportKind::ZeroCrossing, Some(traj.last_x()))
            } else {
                // Refinement could not run; keep the dense-output estimate.
                traj.truncate_at(z_est);
                (SupportKind::ZeroCrossing, Some(z_est))
            }
        }
        Halt::Observer => {
            debug_assert!(decay_stop);
            (SupportKind::AsymptoticDecay, None)
        }
        Halt::RhsStall { x, y, error } => match error {
            ProfileRhsError::Degenerate { z, f } => {
                return Err(Error::DegenerateDenominator { z, f })
            }
            ProfileRhsError::Diverged => {
                let f = chart.f_of(y[0]).unwrap_or(f64::INFINITY);
                return Err(Error::StiffnessFailure {
                    x,
                    state: vec![f, y[1]],
                });
            }
        },
        Halt::StepSizeUnderflow { x, y } => {
            let f = chart.f_of(y[0]).unwrap_or(f64::INFINITY);
            return Err(Error::StiffnessFailure {
                x,
                state: vec![f, y[1]],
            });
        }
        Halt::MaxSteps { x } => return Err(Error::MaxSteps { x }),
    };

    // Convert the u-space nodes to f-space jets.
    let mut f_values = Vec::with_capacity(traj.len() + 1);
    let mut fprime_values = Vec::with_capacity(traj.len() + 1);
    let mut fsecond_values = Vec::with_capacity(traj.len() + 1);
    for i in 0..traj.len() {
        let (f, fp, fpp) = chart.f_jet(traj.ys[i][0], traj.dys[i][0], traj.d2ys[i][0]);
        f_values.push(f);
        fprime_values.push(fp);
        fsecond_values.push(fpp);
    }
    let mut z_nodes = traj.xs.clone();
    let mut m_values: Vec<f64> = traj.ys.iter().map(|y| y[1]).collect();

    // Exact series jet at the center: f' = 0, f'' = f₂, M = 0 (the M-jet is
    // derived from the f arrays during interpolation).
    z_nodes.insert(0, 0.0);
    f_values.insert(0, alpha);
    fprime_values.insert(0, 0.0);
    fsecond_values.insert(0, f2);
    m_values.insert(0, 0.0);

    Ok(ProfileSolution {
        case,
        form,
        alpha_ic: alpha,
        z_nodes,
        f_values,
        fprime_values,
        fsecond_values,
        m_values,
        z_mu,
        support_kind,
        stats: traj.stats,
    })
}

/// Right-hand side of the profile system (see [`ProfileOdeForm::ode_rhs`]).
pub fn ode_rhs(z: f64, f: f64, m: f64, form: &ProfileOdeForm) -> Result<(f64, f64)> {
    form.ode_rhs(z, f, m)
}

/// First zero of an integrated profile (see [`ProfileSolution::first_zero`]).
pub fn first_zero(profile: &ProfileSolution) -> Option<f64> {
    profile.first_zero()
}

/// Plug-back residual of the profile equation (see
/// [`ProfileSolution::profile_residual`]).
pub fn profile_residual(profile: &ProfileSolution, z: f64) -> Result<ResidualSample> {
    profile.profile_residual(z)
}
