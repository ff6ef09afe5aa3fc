//! Adaptive explicit Runge-Kutta integration with dense output.
//!
//! A Dormand-Prince 5(4) pair drives the stepping; dense output is a
//! per-segment quintic Hermite built from state, first, and second
//! derivatives at the accepted nodes. The second derivative comes from the
//! system's closed-form jet, so the interpolant carries no tableau-specific
//! magic constants and its derivative is accurate to one order higher than
//! a cubic Hermite — which is what keeps plug-back residuals at the
//! tolerance level between nodes.
//!
//! Right-hand sides are fallible: a stage evaluation may report that the
//! state left the system's domain (non-positive density, degenerate
//! denominator). The driver then bisects the step toward the boundary.
//! If the step size underflows against a persistently failing stage the
//! run halts with [`Halt::RhsStall`], which is how free-boundary contact
//! is detected without ever evaluating fractional powers of negative
//! numbers.

use serde::{Deserialize, Serialize};

/// Autonomous-in-form ODE system y' = rhs(x, y) with an analytic jet.
pub trait OdeSystem<const D: usize> {
    type Error;

    /// First derivative at (x, y). May fail if (x, y) is outside the
    /// system's domain.
    fn rhs(&self, x: f64, y: &[f64; D], dy: &mut [f64; D]) -> Result<(), Self::Error>;

    /// Second derivative of the solution through (x, y), given dy = rhs(x, y).
    /// Used only for dense output at accepted nodes.
    fn second_derivative(&self, x: f64, y: &[f64; D], dy: &[f64; D], d2y: &mut [f64; D]);

    /// State-dependent step ceiling evaluated at the start of every attempt
    /// (infinite by default). Lets a system keep relative resolution of a
    /// component that is heading for a domain boundary.
    fn max_step(&self, _x: f64, _y: &[f64; D], _dy: &[f64; D]) -> f64 {
        f64::INFINITY
    }
}

/// Step-size control settings.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Initial step size; chosen heuristically when absent.
    pub h_initial: Option<f64>,
    pub h_max: f64,
    /// Cap on the step relative to the current abscissa (h ≤ h_max_rel·x for
    /// x > 0). Keeps relative resolution when integrating away from a
    /// removable singularity at the origin.
    pub h_max_rel: f64,
    pub max_steps: usize,
    /// Cap on successive halvings of a single step against a failing RHS.
    pub max_shrink_retries: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            h_initial: None,
            h_max: f64::INFINITY,
            h_max_rel: f64::INFINITY,
            max_steps: 1_000_000,
            max_shrink_retries: 200,
        }
    }
}

/// Counters describing an integration run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegratorStats {
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub rhs_evaluations: usize,
    pub shrink_retries: usize,
    pub min_step: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

/// Why an integration run stopped.
#[derive(Debug)]
pub enum Halt<E> {
    /// Integrated through to x_end.
    ReachedEnd,
    /// The observer asked to stop after an accepted step.
    Observer,
    /// The step size underflowed against a failing RHS evaluation: the
    /// solution reached the domain boundary at (or just past) `x`.
    RhsStall { x: f64, y: Vec<f64>, error: E },
    /// Error control forced the step below the representable floor.
    StepSizeUnderflow { x: f64, y: Vec<f64> },
    /// Step budget exhausted.
    MaxSteps { x: f64 },
}

/// Observer verdict after each accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepVerdict {
    Continue,
    Stop,
}

/// Dense solution: accepted nodes plus the data needed for quintic
/// Hermite evaluation anywhere inside the integrated span.
#[derive(Debug, Clone)]
pub struct Trajectory<const D: usize> {
    pub xs: Vec<f64>,
    pub ys: Vec<[f64; D]>,
    pub dys: Vec<[f64; D]>,
    pub d2ys: Vec<[f64; D]>,
    pub stats: IntegratorStats,
}

impl<const D: usize> Trajectory<D> {
    fn with_seed(x0: f64, y0: [f64; D], dy0: [f64; D], d2y0: [f64; D]) -> Self {
        Trajectory {
            xs: vec![x0],
            ys: vec![y0],
            dys: vec![dy0],
            d2ys: vec![d2y0],
            stats: IntegratorStats::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn first_x(&self) -> f64 {
        self.xs[0]
    }

    pub fn last_x(&self) -> f64 {
        *self.xs.last().expect("trajectory has at least one node")
    }

    pub fn last_y(&self) -> &[f64; D] {
        self.ys.last().expect("trajectory has at least one node")
    }

    /// Inserts an analytically known node in front of the integrated span
    /// (used to seed the singular origin of the profile equations).
    pub fn prepend_node(&mut self, x: f64, y: [f64; D], dy: [f64; D], d2y: [f64; D]) {
        assert!(x < self.xs[0], "prepended node must precede the trajectory");
        self.xs.insert(0, x);
        self.ys.insert(0, y);
        self.dys.insert(0, dy);
        self.d2ys.insert(0, d2y);
    }

    /// Index of the segment [x_i, x_{i+1}] containing x.
    fn segment_index(&self, x: f64) -> Option<usize> {
        if self.xs.len() < 2 || x < self.first_x() || x > self.last_x() {
            return None;
        }
        // partition_point returns the first index with xs[i] > x.
        let i = self.xs.partition_point(|&node| node <= x);
        Some(i.clamp(1, self.xs.len() - 1) - 1)
    }

    /// Value and first derivative of the dense solution at x.
    pub fn eval(&self, x: f64) -> Option<([f64; D], [f64; D])> {
        let i = self.segment_index(x)?;
        let seg = self.segment(i);
        Some((seg.value(x), seg.derivative(x)))
    }

    /// Value, first, and second derivative of the dense solution at x.
    pub fn eval_with_second(&self, x: f64) -> Option<([f64; D], [f64; D], [f64; D])> {
        let i = self.segment_index(x)?;
        let seg = self.segment(i);
        Some((seg.value(x), seg.derivative(x), seg.second(x)))
    }

    fn segment(&self, i: usize) -> QuinticSegment<D> {
        QuinticSegment::from_jets(
            self.xs[i],
            self.xs[i + 1],
            &self.ys[i],
            &self.dys[i],
            &self.d2ys[i],
            &self.ys[i + 1],
            &self.dys[i + 1],
            &self.d2ys[i + 1],
        )
    }

    /// Cuts the trajectory at x_cut (inside the span), replacing everything
    /// beyond with a single interpolated node.
    pub fn truncate_at(&mut self, x_cut: f64) {
        let Some((y, dy, d2y)) = self.eval_with_second(x_cut) else {
            return;
        };
        let keep = self.xs.partition_point(|&node| node < x_cut);
        self.xs.truncate(keep);
        self.ys.truncate(keep);
        self.dys.truncate(keep);
        self.d2ys.truncate(keep);
        self.xs.push(x_cut);
        self.ys.push(y);
        self.dys.push(dy);
        self.d2ys.push(d2y);
    }

    /// Bisects the dense output of component `c` for a root of
    /// y_c(x) = level inside [x_lo, x_hi], to relative tolerance `rel`.
    pub fn bisect_component(
        &self,
        c: usize,
        level: f64,
        mut x_lo: f64,
        mut x_hi: f64,
        rel: f64,
    ) -> f64 {
        let g = |x: f64| self.eval(x).map(|(y, _)| y[c] - level).unwrap_or(f64::NAN);
        let mut g_lo = g(x_lo);
        for _ in 0..200 {
            let mid = 0.5 * (x_lo + x_hi);
            if (x_hi - x_lo).abs() <= rel * mid.abs().max(f64::MIN_POSITIVE) {
                return mid;
            }
            let g_mid = g(mid);
            if g_mid == 0.0 {
                return mid;
            }
            if (g_lo <= 0.0) == (g_mid <= 0.0) {
                x_lo = mid;
                g_lo = g_mid;
            } else {
                x_hi = mid;
            }
        }
        0.5 * (x_lo + x_hi)
    }
}

/// Quintic Hermite interpolant over one step, in monomial form on the
/// normalized variable u = (x - x0)/h.
pub(crate) struct QuinticSegment<const D: usize> {
    x0: f64,
    h: f64,
    coeffs: [[f64; 6]; D],
}

impl<const D: usize> QuinticSegment<D> {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_jets(
        x0: f64,
        x1: f64,
        y0: &[f64; D],
        dy0: &[f64; D],
        d2y0: &[f64; D],
        y1: &[f64; D],
        dy1: &[f64; D],
        d2y1: &[f64; D],
    ) -> Self {
        let h = x1 - x0;
        let mut coeffs = [[0.0; 6]; D];
        for i in 0..D {
            let delta = y1[i] - y0[i];
            let m0 = dy0[i] * h;
            let m1 = dy1[i] * h;
            let s0 = d2y0[i] * h * h;
            let s1 = d2y1[i] * h * h;
            coeffs[i] = [
                y0[i],
                m0,
                0.5 * s0,
                10.0 * delta - 6.0 * m0 - 4.0 * m1 - 1.5 * s0 + 0.5 * s1,
                -15.0 * delta + 8.0 * m0 + 7.0 * m1 + 1.5 * s0 - s1,
                6.0 * delta - 3.0 * (m0 + m1) - 0.5 * s0 + 0.5 * s1,
            ];
        }
        QuinticSegment { x0, h, coeffs }
    }

    pub(crate) fn value(&self, x: f64) -> [f64; D] {
        let u = (x - self.x0) / self.h;
        let mut out = [0.0; D];
        for (o, c) in out.iter_mut().zip(&self.coeffs) {
            *o = c[0] + u * (c[1] + u * (c[2] + u * (c[3] + u * (c[4] + u * c[5]))));
        }
        out
    }

    pub(crate) fn derivative(&self, x: f64) -> [f64; D] {
        let u = (x - self.x0) / self.h;
        let mut out = [0.0; D];
        for (o, c) in out.iter_mut().zip(&self.coeffs) {
            *o = (c[1] + u * (2.0 * c[2] + u * (3.0 * c[3] + u * (4.0 * c[4] + u * 5.0 * c[5]))))
                / self.h;
        }
        out
    }

    pub(crate) fn second(&self, x: f64) -> [f64; D] {
        let u = (x - self.x0) / self.h;
        let mut out = [0.0; D];
        for (o, c) in out.iter_mut().zip(&self.coeffs) {
            *o = (2.0 * c[2] + u * (6.0 * c[3] + u * (12.0 * c[4] + u * 20.0 * c[5])))
                / (self.h * self.h);
        }
        out
    }
}

// Dormand-Prince 5(4) tableau. FSAL: the 7th stage is the derivative at the
// accepted endpoint and seeds the next step.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;

/// Integrates `sys` from (x0, y0) toward x_end, calling `observer` after
/// each accepted step. Returns the dense trajectory together with the halt
/// reason; the caller maps the halt onto its own domain semantics.
pub fn integrate<const D: usize, S, F>(
    sys: &S,
    x0: f64,
    y0: [f64; D],
    x_end: f64,
    ctrl: &StepControl,
    mut observer: F,
) -> (Trajectory<D>, Halt<S::Error>)
where
    S: OdeSystem<D>,
    F: FnMut(&Trajectory<D>) -> StepVerdict,
{
    debug_assert!(x_end > x0, "forward integration only");
    let mut stats = IntegratorStats {
        rel_tol: ctrl.rel_tol,
        abs_tol: ctrl.abs_tol,
        min_step: f64::INFINITY,
        ..IntegratorStats::default()
    };

    let mut dy0 = [0.0; D];
    stats.rhs_evaluations += 1;
    if let Err(e) = sys.rhs(x0, &y0, &mut dy0) {
        let mut traj = Trajectory::with_seed(x0, y0, [0.0; D], [0.0; D]);
        traj.stats = stats;
        return (
            traj,
            Halt::RhsStall {
                x: x0,
                y: y0.to_vec(),
                error: e,
            },
        );
    }
    let mut d2y0 = [0.0; D];
    sys.second_derivative(x0, &y0, &dy0, &mut d2y0);

    let mut traj = Trajectory::with_seed(x0, y0, dy0, d2y0);

    let mut x = x0;
    let mut y = y0;
    let mut k1 = dy0;
    let mut h = ctrl.h_initial.unwrap_or_else(|| {
        initial_step(&y, &k1, x_end - x0, ctrl.rel_tol, ctrl.abs_tol).min(ctrl.h_max)
    });

    let mut just_rejected = false;
    let mut shrink_retries_this_step = 0usize;

    'steps: loop {
        if stats.steps_accepted >= ctrl.max_steps {
            traj.stats = stats;
            return (traj, Halt::MaxSteps { x });
        }
        let remaining = x_end - x;
        if remaining <= step_floor(x) {
            traj.stats = stats;
            return (traj, Halt::ReachedEnd);
        }
        h = h.min(remaining).min(ctrl.h_max);
        if x > 0.0 && ctrl.h_max_rel.is_finite() {
            h = h.min(ctrl.h_max_rel * x);
        }
        let state_cap = sys.max_step(x, &y, &k1);
        if state_cap.is_finite() {
            h = h.min(state_cap.max(4.0 * step_floor(x)));
        }
        if h <= step_floor(x) {
            traj.stats = stats;
            return (
                traj,
                Halt::StepSizeUnderflow {
                    x,
                    y: y.to_vec(),
                },
            );
        }

        // Stage sweep. Any domain failure or non-finite value shrinks the
        // step toward the last good state.
        let mut k = [[0.0; D]; 7];
        k[0] = k1;
        let mut stage_failure: Option<S::Error> = None;
        let mut stages_clean = true;
        let mut y1 = y;
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    for i in 0..D {
                        ys[i] += h * a * kj[i];
                    }
                }
            }
            stats.rhs_evaluations += 1;
            match sys.rhs(x + C[s] * h, &ys, &mut k[s]) {
                Ok(()) => {
                    if k[s].iter().any(|v| !v.is_finite()) {
                        stages_clean = false;
                        break;
                    }
                }
                Err(e) => {
                    stage_failure = Some(e);
                    stages_clean = false;
                    break;
                }
            }
            if s == 6 {
                // The stage-7 state is the 5th-order endpoint (FSAL).
                y1 = ys;
            }
        }

        if stages_clean {
            let mut err_norm_sq = 0.0;
            for i in 0..D {
                let mut e = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    e += (B5[j] - B4[j]) * kj[i];
                }
                e *= h;
                let w = ctrl.abs_tol + ctrl.rel_tol * y[i].abs().max(y1[i].abs());
                err_norm_sq += (e / w) * (e / w);
            }
            let err_norm = (err_norm_sq / D as f64).sqrt();

            if err_norm.is_finite() {
                if err_norm <= 1.0 {
                    // Accept. k[6] is the FSAL derivative at (x + h, y1).
                    stats.steps_accepted += 1;
                    stats.min_step = stats.min_step.min(h);
                    let dy1 = k[6];
                    let mut d2y1 = [0.0; D];
                    sys.second_derivative(x + h, &y1, &dy1, &mut d2y1);
                    x += h;
                    y = y1;
                    k1 = dy1;
                    traj.xs.push(x);
                    traj.ys.push(y);
                    traj.dys.push(dy1);
                    traj.d2ys.push(d2y1);

                    shrink_retries_this_step = 0;
                    let fac = if err_norm == 0.0 {
                        FAC_MAX
                    } else {
                        (SAFETY * err_norm.powf(-0.2)).clamp(FAC_MIN, FAC_MAX)
                    };
                    h *= if just_rejected { fac.min(1.0) } else { fac };
                    just_rejected = false;

                    traj.stats = stats;
                    if observer(&traj) == StepVerdict::Stop {
                        return (traj, Halt::Observer);
                    }
                } else {
                    // Error-controlled rejection.
                    stats.steps_rejected += 1;
                    just_rejected = true;
                    h *= (SAFETY * err_norm.powf(-0.2)).clamp(FAC_MIN, 1.0);
                    if h <= step_floor(x) {
                        traj.stats = stats;
                        return (
                            traj,
                            Halt::StepSizeUnderflow {
                                x,
                                y: y.to_vec(),
                            },
                        );
                    }
                }
                continue 'steps;
            }
            // Non-finite error estimate: fall through to the shrink path.
        }

        // A stage failed (domain error or non-finite). Bisect the step
        // toward the domain boundary.
        stats.shrink_retries += 1;
        shrink_retries_this_step += 1;
        just_rejected = true;
        h *= 0.5;
        if h <= step_floor(x) || shrink_retries_this_step > ctrl.max_shrink_retries {
            traj.stats = stats;
            return match stage_failure {
                Some(error) => (
                    traj,
                    Halt::RhsStall {
                        x,
                        y: y.to_vec(),
                        error,
                    },
                ),
                None => (
                    traj,
                    Halt::StepSizeUnderflow {
                        x,
                        y: y.to_vec(),
                    },
                ),
            };
        }
    }
}

fn step_floor(x: f64) -> f64 {
    16.0 * f64::EPSILON * x.abs().max(1e-3)
}

fn initial_step<const D: usize>(
    y: &[f64; D],
    dy: &[f64; D],
    span: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> f64 {
    // Conservative guess; the controller corrects it within a few steps.
    let mut ratio: f64 = f64::INFINITY;
    for i in 0..D {
        let scale = abs_tol + rel_tol * y[i].abs();
        if dy[i] != 0.0 {
            ratio = ratio.min(scale.powf(0.2) * y[i].abs().max(1.0) / dy[i].abs());
        }
    }
    let guess = if ratio.is_finite() { 0.1 * ratio } else { 1e-3 * span };
    guess.clamp(1e-10 * span.max(1.0), 1e-2 * span)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::convert::Infallible;

    /// Tableau consistency: row sums of A equal the nodes C and the weights
    /// of both embedded orders sum to one. Guards against transcription
    /// typos in the rational constants.
    #[test]
    fn tableau_is_consistent() {
        for s in 0..7 {
            let row: f64 = A[s].iter().sum();
            assert_relative_eq!(row, C[s], epsilon = 1e-15);
        }
        assert_relative_eq!(B5.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(B4.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        // FSAL: the last stage row equals the 5th-order weights.
        for j in 0..6 {
            assert_relative_eq!(A[6][j], B5[j], epsilon = 1e-16);
        }
    }

    struct Exponential;
    impl OdeSystem<1> for Exponential {
        type Error = Infallible;
        fn rhs(&self, _x: f64, y: &[f64; 1], dy: &mut [f64; 1]) -> Result<(), Infallible> {
            dy[0] = y[0];
            Ok(())
        }
        fn second_derivative(&self, _x: f64, y: &[f64; 1], _dy: &[f64; 1], d2: &mut [f64; 1]) {
            d2[0] = y[0];
        }
    }

    #[test]
    fn integrates_exponential_to_tolerance() {
        let ctrl = StepControl {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            ..StepControl::default()
        };
        let (traj, halt) = integrate(&Exponential, 0.0, [1.0], 1.0, &ctrl, |_| {
            StepVerdict::Continue
        });
        assert!(matches!(halt, Halt::ReachedEnd));
        assert_relative_eq!(traj.last_y()[0], 1f64.exp(), max_relative = 1e-11);
    }

    struct Harmonic;
    impl OdeSystem<2> for Harmonic {
        type Error = Infallible;
        fn rhs(&self, _x: f64, y: &[f64; 2], dy: &mut [f64; 2]) -> Result<(), Infallible> {
            dy[0] = y[1];
            dy[1] = -y[0];
            Ok(())
        }
        fn second_derivative(&self, _x: f64, y: &[f64; 2], dy: &[f64; 2], d2: &mut [f64; 2]) {
            d2[0] = -y[0];
            d2[1] = -dy[0];
        }
    }

    #[test]
    fn dense_output_tracks_harmonic_oscillator() {
        let ctrl = StepControl {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            ..StepControl::default()
        };
        let (traj, halt) = integrate(&Harmonic, 0.0, [1.0, 0.0], 6.0, &ctrl, |_| {
            StepVerdict::Continue
        });
        assert!(matches!(halt, Halt::ReachedEnd));
        // Probe between nodes: value and derivative of the interpolant.
        let mut x = 0.05;
        while x < 6.0 {
            let (y, dy) = traj.eval(x).unwrap();
            assert_relative_eq!(y[0], x.cos(), epsilon = 1e-9);
            assert_relative_eq!(y[1], -x.sin(), epsilon = 1e-9);
            assert_relative_eq!(dy[0], -x.sin(), epsilon = 1e-8);
            x += 0.173;
        }
    }

    /// The quintic segment reproduces an exact quintic polynomial from its
    /// endpoint jets, including derivatives.
    #[test]
    fn quintic_segment_reproduces_quintic() {
        // p(x) = 1 + 2x − x² + 0.5x³ + 0.25x⁴ − 0.125x⁵
        let p = |x: f64| {
            1.0 + 2.0 * x - x * x + 0.5 * x.powi(3) + 0.25 * x.powi(4) - 0.125 * x.powi(5)
        };
        let dp = |x: f64| 2.0 - 2.0 * x + 1.5 * x * x + x.powi(3) - 0.625 * x.powi(4);
        let d2p = |x: f64| -2.0 + 3.0 * x + 3.0 * x * x - 2.5 * x.powi(3);
        let (x0, x1) = (0.3, 1.1);
        let seg = QuinticSegment::<1>::from_jets(
            x0,
            x1,
            &[p(x0)],
            &[dp(x0)],
            &[d2p(x0)],
            &[p(x1)],
            &[dp(x1)],
            &[d2p(x1)],
        );
        let mut x = x0;
        while x <= x1 {
            assert_relative_eq!(seg.value(x)[0], p(x), epsilon = 1e-12);
            assert_relative_eq!(seg.derivative(x)[0], dp(x), epsilon = 1e-11);
            assert_relative_eq!(seg.second(x)[0], d2p(x), epsilon = 1e-10);
            x += 0.07;
        }
    }

    /// RHS failure on a domain boundary bisects down and halts with a stall
    /// at the boundary location.
    struct SqrtDecay;
    #[derive(Debug)]
    struct WentNegative;
    impl OdeSystem<1> for SqrtDecay {
        type Error = WentNegative;
        fn rhs(&self, _x: f64, y: &[f64; 1], dy: &mut [f64; 1]) -> Result<(), WentNegative> {
            if y[0] <= 0.0 {
                return Err(WentNegative);
            }
            dy[0] = -2.0 * y[0].sqrt();
            Ok(())
        }
        fn second_derivative(&self, _x: f64, y: &[f64; 1], dy: &[f64; 1], d2: &mut [f64; 1]) {
            d2[0] = if y[0] > 0.0 { -dy[0] / y[0].sqrt() } else { 0.0 };
        }
    }

    #[test]
    fn stalls_at_quadratic_contact_point() {
        // y' = -2√y from y(0) = 1 reaches zero at exactly x = 1.
        let ctrl = StepControl {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            ..StepControl::default()
        };
        let (traj, halt) = integrate(&SqrtDecay, 0.0, [1.0], 10.0, &ctrl, |_| {
            StepVerdict::Continue
        });
        match halt {
            Halt::RhsStall { x, .. } => {
                assert_relative_eq!(x, 1.0, epsilon = 1e-9);
            }
            other => panic!("expected stall at the boundary, got {other:?}"),
        }
        assert!(traj.last_y()[0] >= 0.0);
    }

    #[test]
    fn truncate_at_interpolates_node() {
        let ctrl = StepControl::default();
        let (mut traj, _) = integrate(&Harmonic, 0.0, [1.0, 0.0], 3.0, &ctrl, |_| {
            StepVerdict::Continue
        });
        traj.truncate_at(1.5);
        assert_relative_eq!(traj.last_x(), 1.5, epsilon = 1e-14);
        assert_relative_eq!(traj.last_y()[0], 1.5f64.cos(), epsilon = 1e-9);
    }
}
