//! The temporal scaling factor a(t): closed forms for the viscous cases and
//! the integrated legacy scaling equation ä = −λ/a^{N−1}.
//!
//! Case 1a: a(t) = m·t + n. Case 1b: a(t) = (m·t + n)^{2/N}. Case 2:
//! a(t) = exp(ω·t) with ω = √(δ·α(N)·Λ/N). For m < 0 the case-1 factors
//! vanish at T = −n/m and the density amplitude blows up there.

use crate::error::{Error, Result};
use crate::model::{alpha_const, validate, PhysicalParams, SolutionCase};
use crate::ode::{self, Halt, IntegratorStats, OdeSystem, StepControl, StepVerdict, Trajectory};

/// Positivity floor for the legacy scaling integration, relative to a(0):
/// the right-hand side −λ·a^{1−N} stiffens without bound as a → 0.
pub const COLLAPSE_FLOOR_FRACTION: f64 = 1e-8;

/// Guard below which a scaling factor is treated as having vanished.
const SCALE_UNDERFLOW: f64 = 1e-300;

/// Temporal scaling factor with derivatives.
#[derive(Debug, Clone)]
pub struct ScalingFunction {
    pub case: SolutionCase,
    kind: ScalingKind,
    pub blowup_time: Option<f64>,
}

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)] // the dense trajectory variant is the point
enum ScalingKind {
    /// a = m·t + n
    Linear { m: f64, n: f64 },
    /// a = (m·t + n)^{2/N}
    Power { m: f64, n: f64, n_dim: u32 },
    /// a = exp(rate·t)
    Exponential { rate: f64 },
    /// dense trajectory of ä = −λ/a^{N−1}
    Emden(EmdenScaling),
}

/// Integrated legacy scaling trajectory and its first-integral diagnostics.
#[derive(Debug, Clone)]
pub struct EmdenScaling {
    pub lambda: f64,
    pub n_dim: u32,
    pub a0: f64,
    pub a1: f64,
    pub collapse_detected: bool,
    pub collapse_time: Option<f64>,
    /// max over nodes of |E(t) − E(0)| / max(|E(0)|, |kin| + |pot|).
    pub energy_drift: f64,
    pub stats: IntegratorStats,
    traj: Trajectory<2>,
}

impl EmdenScaling {
    pub fn t_end(&self) -> f64 {
        self.traj.last_x()
    }

    /// Conserved first integral E = ȧ²/2 + λ·a^{2−N}/(2−N) (N ≥ 3);
    /// E = ȧ²/2 + λ·ln a for N = 2.
    pub fn energy(&self, a: f64, a_dot: f64) -> f64 {
        energy_first_integral(self.lambda, self.n_dim, a, a_dot)
    }
}

fn energy_first_integral(lambda: f64, n_dim: u32, a: f64, a_dot: f64) -> f64 {
    let kin = 0.5 * a_dot * a_dot;
    if n_dim == 2 {
        kin + lambda * a.ln()
    } else {
        let p = 2.0 - n_dim as f64;
        kin + lambda * a.powf(p) / p
    }
}

impl ScalingFunction {
    /// Closed-form scaling factor for cases 1a, 1b, and 2.
    pub fn closed_form(params: &PhysicalParams, case: SolutionCase) -> Result<Self> {
        let report = validate(params, case);
        if !report.is_valid() {
            return Err(Error::InvalidParams(report.to_string()));
        }
        let blowup = if params.m < 0.0 {
            Some(-params.n / params.m)
        } else {
            None
        };
        let kind = match case {
            SolutionCase::Case1a => ScalingKind::Linear {
                m: params.m,
                n: params.n,
            },
            SolutionCase::Case1b => ScalingKind::Power {
                m: params.m,
                n: params.n,
                n_dim: params.n_dim,
            },
            SolutionCase::Case2 => {
                let rate =
                    (params.delta_f64() * alpha_const(params.n_dim)? * params.lambda
                        / params.n_dim as f64)
                        .sqrt();
                ScalingKind::Exponential { rate }
            }
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "closed-form scaling is defined for cases 1a, 1b, 2 (got {})",
                    case.label()
                )))
            }
        };
        let blowup_time = match kind {
            ScalingKind::Exponential { .. } => None,
            _ => blowup,
        };
        Ok(ScalingFunction {
            case,
            kind,
            blowup_time,
        })
    }

    /// Growth rate ω of the case-2 exponential (zero otherwise).
    pub fn exponential_rate(&self) -> f64 {
        match self.kind {
            ScalingKind::Exponential { rate } => rate,
            _ => 0.0,
        }
    }

    /// The integrated legacy trajectory, when this scaling was produced by
    /// [`emden_scaling_integrate`].
    pub fn emden(&self) -> Option<&EmdenScaling> {
        match &self.kind {
            ScalingKind::Emden(e) => Some(e),
            _ => None,
        }
    }

    /// (a, ȧ, ä) at time t.
    pub fn a_eval(&self, t: f64) -> Result<(f64, f64, f64)> {
        if let Some(bt) = self.blowup_time {
            if t >= bt {
                return Err(Error::BlowupReached { t, blowup_time: bt });
            }
        }
        match &self.kind {
            ScalingKind::Linear { m, n } => {
                let a = m * t + n;
                if a <= 0.0 {
                    return Err(Error::ScaleDomain { t });
                }
                Ok((a, *m, 0.0))
            }
            ScalingKind::Power { m, n, n_dim } => {
                let s = m * t + n;
                if s <= 0.0 {
                    return Err(Error::ScaleDomain { t });
                }
                let e = 2.0 / *n_dim as f64;
                let a = s.powf(e);
                if a.abs() < SCALE_UNDERFLOW {
                    return Err(Error::BlowupReached {
                        t,
                        blowup_time: self.blowup_time.unwrap_or(t),
                    });
                }
                let a_dot = e * m * s.powf(e - 1.0);
                let a_ddot = e * (e - 1.0) * m * m * s.powf(e - 2.0);
                Ok((a, a_dot, a_ddot))
            }
            ScalingKind::Exponential { rate } => {
                let a = (rate * t).exp();
                Ok((a, rate * a, rate * rate * a))
            }
            ScalingKind::Emden(emden) => {
                let (y, _) = emden.traj.eval(t).ok_or_else(|| Error::InvalidArgument(
                    format!(
                        "t = {t:.6e} outside the integrated scaling trajectory [0, {:.6e}]",
                        emden.t_end()
                    ),
                ))?;
                let (a, a_dot) = (y[0], y[1]);
                if a <= 0.0 {
                    return Err(Error::ScaleDomain { t });
                }
                let a_ddot = -emden.lambda * a.powf(1.0 - emden.n_dim as f64);
                Ok((a, a_dot, a_ddot))
            }
        }
    }
}

/// Root of a(t) for the case-1 factors: T = −n/m when m < 0, absent
/// otherwise (case 2 never vanishes; the legacy trajectory records its
/// collapse separately).
pub fn blowup_time(s: &ScalingFunction) -> Option<f64> {
    s.blowup_time
}

struct EmdenScalingSystem {
    lambda: f64,
    n_dim: u32,
}

#[derive(Debug, Clone, Copy)]
struct NonPositiveScale;

impl OdeSystem<2> for EmdenScalingSystem {
    type Error = NonPositiveScale;

    fn rhs(&self, _t: f64, y: &[f64; 2], dy: &mut [f64; 2]) -> std::result::Result<(), NonPositiveScale> {
        let a = y[0];
        if !(a > 0.0) {
            return Err(NonPositiveScale);
        }
        dy[0] = y[1];
        dy[1] = -self.lambda * a.powf(1.0 - self.n_dim as f64);
        Ok(())
    }

    fn second_derivative(&self, _t: f64, y: &[f64; 2], dy: &[f64; 2], d2y: &mut [f64; 2]) {
        let a = y[0];
        d2y[0] = dy[1];
        d2y[1] = -self.lambda * (1.0 - self.n_dim as f64) * a.powf(-(self.n_dim as f64)) * dy[0];
    }
}

/// Integrates ä = −λ/a^{N−1}, a(0) = a₀ > 0, ȧ(0) = a₁ until t_max or until
/// a falls to the positivity floor (collapse). The energy first integral is
/// monitored along the way.
pub fn emden_scaling_integrate(
    lambda_legacy: f64,
    a0: f64,
    a1: f64,
    n_dim: u32,
    t_max: f64,
    rel_tol: f64,
) -> Result<ScalingFunction> {
    if !(a0 > 0.0) {
        return Err(Error::InvalidArgument("a0 must be positive".into()));
    }
    if n_dim < 2 {
        return Err(Error::InvalidArgument("N >= 2 required".into()));
    }
    if !(t_max > 0.0) {
        return Err(Error::InvalidArgument("t_max must be positive".into()));
    }

    let sys = EmdenScalingSystem {
        lambda: lambda_legacy,
        n_dim,
    };
    let floor = COLLAPSE_FLOOR_FRACTION * a0;
    // The absolute floor of the error weights sits two decades below the
    // collapse floor, so a keeps relative accuracy all the way down and the
    // monitored first integral is not polluted by absolute-tolerance slack.
    let ctrl = StepControl {
        rel_tol,
        abs_tol: rel_tol * 1e-2 * floor,
        ..StepControl::default()
    };
    let mut hit_floor = false;
    let (mut traj, halt) = ode::integrate(&sys, 0.0, [a0, a1], t_max, &ctrl, |traj| {
        if traj.last_y()[0] <= floor {
            hit_floor = true;
            StepVerdict::Stop
        } else {
            StepVerdict::Continue
        }
    });

    let mut collapse_detected = false;
    let mut collapse_time = None;
    match halt {
        Halt::ReachedEnd => {}
        Halt::Observer => {
            // Refine the floor crossing inside the last step and truncate.
            debug_assert!(hit_floor);
            let i = traj.len() - 2;
            let t_cross = traj.bisect_component(0, floor, traj.xs[i], traj.xs[i + 1], 1e-12);
            traj.truncate_at(t_cross);
            collapse_detected = true;
            collapse_time = Some(t_cross);
        }
        Halt::RhsStall { x, .. } => {
            // a ran out of positivity faster than the floor check sampled it.
            collapse_detected = true;
            collapse_time = Some(x);
        }
        Halt::StepSizeUnderflow { x, y } => {
            // The right-hand side stiffens as a^{1−N} approaching collapse;
            // dying close to the floor is the collapse, anything else is a
            // genuine integration failure.
            if y[0] <= 1e3 * floor {
                collapse_detected = true;
                collapse_time = Some(x);
            } else {
                return Err(Error::StiffnessFailure { x, state: y });
            }
        }
        Halt::MaxSteps { x } => return Err(Error::MaxSteps { x }),
    }

    // First-integral drift. Near collapse the energy is the difference of
    // two huge terms, so each node is judged against its own energy scale;
    // a problem-level unit keeps the denominator meaningful when E₀ ≈ 0.
    let e0 = energy_first_integral(lambda_legacy, n_dim, a0, a1);
    let unit = 0.5 * a1 * a1
        + if n_dim == 2 {
            lambda_legacy.abs()
        } else {
            lambda_legacy.abs() * a0.powf(2.0 - n_dim as f64) / (n_dim as f64 - 2.0)
        };
    let mut drift: f64 = 0.0;
    for (y, _t) in traj.ys.iter().zip(traj.xs.iter()) {
        let e = energy_first_integral(lambda_legacy, n_dim, y[0], y[1]);
        let kin = 0.5 * y[1] * y[1];
        let pot = (e - kin).abs();
        let scale = e0.abs().max(kin + pot).max(unit).max(f64::MIN_POSITIVE);
        drift = drift.max((e - e0).abs() / scale);
    }

    let case = if n_dim == 2 {
        SolutionCase::Legacy2D
    } else {
        SolutionCase::LegacyGW
    };
    Ok(ScalingFunction {
        case,
        kind: ScalingKind::Emden(EmdenScaling {
            lambda: lambda_legacy,
            n_dim,
            a0,
            a1,
            collapse_detected,
            collapse_time,
            energy_drift: drift,
            stats: traj.stats,
            traj,
        }),
        blowup_time: None,
    })
}
