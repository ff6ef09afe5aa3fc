//! Adaptive quadrature (globally adaptive Simpson with Richardson update).

/// Integrates `f` over [a, b] to the requested relative accuracy (with an
/// absolute floor for integrals near zero).
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fm = f(0.5 * (a + b));
    let fb = f(b);
    let whole = simpson(a, b, fa, fm, fb);
    let scale = whole.abs().max(abs_tol / rel_tol.max(f64::MIN_POSITIVE));
    adaptive(&f, a, b, fa, fm, fb, whole, rel_tol * scale, 60)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn integrates_polynomial_exactly() {
        // Simpson is exact on cubics: ∫₀¹ x³ dx = 1/4.
        let v = integrate(|x| x * x * x, 0.0, 1.0, 1e-12, 1e-15);
        assert_relative_eq!(v, 0.25, max_relative = 1e-14);
    }

    #[test]
    fn integrates_oscillatory_to_tolerance() {
        let v = integrate(|x| (10.0 * x).sin(), 0.0, 2.0, 1e-12, 1e-15);
        let exact = (1.0 - (20.0f64).cos()) / 10.0;
        assert_relative_eq!(v, exact, max_relative = 1e-11);
    }

    #[test]
    fn handles_zero_width_interval() {
        assert_eq!(integrate(|x| x, 1.0, 1.0, 1e-10, 1e-12), 0.0);
    }
}
