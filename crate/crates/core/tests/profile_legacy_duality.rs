//! Cross-route consistency: the inviscid N=3 profile equation and the
//! legacy power-law Emden equation describe the same solution in different
//! variables.
//!
//! For κ = 0, N = 3 the profile equation integrates to
//! 4K·(f^{1/3})'' + (8K/z)·(f^{1/3})'/2 … i.e. g = f^{1/3} satisfies the
//! index-3 polytrope equation g̈ + (2/z)ġ + (α(3)/(4K))·g³ = 0 with
//! g(0) = α^{1/3}. Integrating both routes independently and comparing
//! f ↔ y³ checks the entire reduction algebra numerically.

use collapsar_core::{
    integrate_emden, integrate_profile, EmdenKind, PhysicalParams, SolutionCase, SupportKind,
};

#[test]
fn inviscid_profile_is_cubed_polytrope_solution() {
    let params =
        PhysicalParams::for_case(SolutionCase::Case1a, 3, 1.0, 0.0, 1, 0.0, -1.0, 1.0, 1.0)
            .unwrap();
    let profile = integrate_profile(&params, SolutionCase::Case1a, 10.0, 1e-11, 1e-13).unwrap();
    assert_eq!(profile.support_kind, SupportKind::ZeroCrossing);

    let emden = integrate_emden(EmdenKind::PowerLaw, 3, 1.0, 0.0, 1.0, 10.0, 1e-11).unwrap();

    // Same free boundary from two independent formulations.
    let z_profile = profile.first_zero().expect("profile crossing");
    let z_emden = emden.first_zero().expect("polytrope first zero");
    assert!(
        (z_profile - z_emden).abs() <= 1e-8 * z_profile,
        "free boundaries disagree: {z_profile} vs {z_emden}"
    );

    // Pointwise f = y³ across the support.
    let end = z_profile.min(z_emden);
    for k in 1..60 {
        let z = end * k as f64 / 60.0;
        let f = profile.eval(z).unwrap().f;
        let (y, _, _) = emden.eval(z).unwrap();
        let expected = y * y * y;
        assert!(
            (f - expected).abs() <= 1e-9 * expected.abs().max(1e-3),
            "f(z) != y(z)^3 at z = {z}: {f} vs {expected}"
        );
    }
}
