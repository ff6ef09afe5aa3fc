//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line. Run with `cargo test --test acceptance -- --nocapture`
//! to see the summary lines.

use std::process::Command;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use collapsar_core::{
    blowup_time, emden_scaling_integrate, integrate_emden, integrate_profile, verify_solution,
    EmdenKind, PhysicalParams, ProfileOptions, RadialSolution, ScalingFunction, SolutionCase,
};

fn check(criterion: &str, pass: bool, detail: String) {
    if pass {
        println!("[PASS] {criterion}: {detail}");
    } else {
        println!("[FAIL] {criterion}: {detail}");
        panic!("{criterion} failed: {detail}");
    }
}

fn reference_params(case: SolutionCase) -> PhysicalParams {
    match case {
        SolutionCase::Case1a => {
            PhysicalParams::for_case(SolutionCase::Case1a, 3, 1.0, 1.0, 1, 0.0, -1.0, 1.0, 1.0)
                .unwrap()
        }
        SolutionCase::Case1b => {
            PhysicalParams::for_case(SolutionCase::Case1b, 3, 1.0, 1.0, 1, 0.0, -1.0, 1.0, 1.0)
                .unwrap()
        }
        SolutionCase::Case2 => {
            // Λ = 0.02 keeps δ·Λ > 0 and the folded coefficient positive.
            PhysicalParams::for_case(SolutionCase::Case2, 3, 1.0, 1.0, 1, 0.02, -1.0, 1.0, 1.0)
                .unwrap()
        }
        other => panic!("no reference parameters for {other:?}"),
    }
}

/// 5-point time grid: up to 0.9·T for blowup cases, [0, 1] otherwise.
fn time_grid(params: &PhysicalParams, case: SolutionCase) -> Vec<f64> {
    let scaling = ScalingFunction::closed_form(params, case).unwrap();
    let t_hi = blowup_time(&scaling).map(|t| 0.9 * t).unwrap_or(1.0);
    (0..5).map(|i| t_hi * i as f64 / 4.0).collect()
}

#[test]
fn criterion_1_mass_equation_exactness() {
    let mut worst: f64 = 0.0;
    for case in [SolutionCase::Case1a, SolutionCase::Case1b, SolutionCase::Case2] {
        let params = reference_params(case);
        let ts = time_grid(&params, case);
        let report = verify_solution(&params, case, &ts, 50, 1e-10).unwrap();
        worst = worst.max(report.mass_residual_max);
    }
    check(
        "criterion 1 (mass-equation exactness)",
        worst <= 1e-10,
        format!("max scaled mass residual {worst:.3e} <= 1e-10 over 5x50 grids"),
    );
}

#[test]
fn criterion_2_momentum_equation_verification() {
    let mut worst: f64 = 0.0;
    let mut worst_ratio = f64::INFINITY;
    for case in [SolutionCase::Case1a, SolutionCase::Case1b, SolutionCase::Case2] {
        let params = reference_params(case);
        let ts = time_grid(&params, case);
        let loose = verify_solution(&params, case, &ts, 50, 1e-10).unwrap();
        let tight = verify_solution(&params, case, &ts, 50, 1e-12).unwrap();
        worst = worst.max(loose.momentum_residual_max);
        worst_ratio =
            worst_ratio.min(loose.momentum_residual_max / tight.momentum_residual_max);
    }
    check(
        "criterion 2 (momentum residual)",
        worst <= 1e-6,
        format!("max scaled momentum residual {worst:.3e} <= 1e-6 at rel_tol 1e-10"),
    );
    check(
        "criterion 2 (momentum residual convergence)",
        worst_ratio >= 10.0,
        format!("tightening rel_tol 1e-10 -> 1e-12 reduced the residual {worst_ratio:.1}x >= 10x"),
    );
}

#[test]
fn criterion_3_trivial_closed_form() {
    // δ = 0 with zero forcing: f ≡ α and every residual term cancels.
    let params =
        PhysicalParams::for_case(SolutionCase::Case1a, 3, 1.0, 1.0, 0, 0.0, -1.0, 1.0, 1.0)
            .unwrap();
    let sol = RadialSolution::build(&params, SolutionCase::Case1a, &ProfileOptions::default())
        .unwrap();
    let exact = sol
        .profile
        .f_values
        .iter()
        .all(|&f| (f - 1.0).abs() <= f64::EPSILON);
    check(
        "criterion 3 (constant profile)",
        exact,
        "f identically alpha at every node to machine epsilon".to_string(),
    );

    let mut worst: f64 = 0.0;
    for &t in &[0.0, 0.25, 0.5] {
        let r_edge = sol.support_radius(t).unwrap();
        for j in 0..50 {
            let r = (j as f64 + 0.5) / 50.0 * r_edge;
            worst = worst.max(sol.mass_residual(t, r).unwrap().magnitude());
            worst = worst.max(sol.momentum_residual(t, r).unwrap().magnitude());
        }
    }
    check(
        "criterion 3 (raw residuals)",
        worst <= 1e-13,
        format!("max raw residual {worst:.3e} <= 1e-13"),
    );
}

#[test]
fn criterion_4_n2_case_coincidence() {
    let p1a = PhysicalParams::for_case(SolutionCase::Case1a, 2, 1.0, 1.0, 1, 0.0, -1.0, 1.0, 1.0)
        .unwrap();
    let p1b = PhysicalParams::for_case(SolutionCase::Case1b, 2, 1.0, 1.0, 1, 0.0, -1.0, 1.0, 1.0)
        .unwrap();
    let a = integrate_profile(&p1a, SolutionCase::Case1a, 5.0, 1e-10, 1e-12).unwrap();
    let b = integrate_profile(&p1b, SolutionCase::Case1b, 5.0, 1e-10, 1e-12).unwrap();
    let end = a.support_end().min(b.support_end());
    let mut worst_f: f64 = 0.0;
    for k in 1..100 {
        let z = end * k as f64 / 100.0;
        worst_f = worst_f.max((a.eval(z).unwrap().f - b.eval(z).unwrap().f).abs());
    }
    let sa = ScalingFunction::closed_form(&p1a, SolutionCase::Case1a).unwrap();
    let sb = ScalingFunction::closed_form(&p1b, SolutionCase::Case1b).unwrap();
    let mut worst_a: f64 = 0.0;
    for k in 0..50 {
        let t = 0.99 * k as f64 / 49.0;
        worst_a = worst_a.max((sa.a_eval(t).unwrap().0 - sb.a_eval(t).unwrap().0).abs());
    }
    check(
        "criterion 4 (N=2 coincidence)",
        worst_f <= 1e-10 && worst_a <= 1e-10,
        format!("case 1a vs 1b at N=2: profile diff {worst_f:.3e}, scaling diff {worst_a:.3e} <= 1e-10"),
    );
}

#[test]
fn criterion_5_blowup_law() {
    let params = reference_params(SolutionCase::Case1a);
    let sol = RadialSolution::build(&params, SolutionCase::Case1a, &ProfileOptions::default())
        .unwrap();
    let t_blowup = blowup_time(&sol.scaling);
    check(
        "criterion 5 (blowup time)",
        t_blowup == Some(1.0),
        format!("T = {t_blowup:?} for m = -1, n = 1"),
    );

    // a(1 − 10⁻³) = 10⁻³ in closed form: the center amplifies by 10^{3N}.
    let t = 1.0 - 1e-3;
    let rho_c = sol.density(t, 0.0).unwrap();
    let expected = 1e9;
    let rel = (rho_c - expected).abs() / expected;
    check(
        "criterion 5 (central density amplification)",
        rel <= 1e-9,
        format!("rho(t, 0) = {rho_c:.6e} vs alpha*10^(3N) = {expected:.1e} (rel {rel:.3e})"),
    );

    let m0 = sol.total_mass(0.0).unwrap();
    let mut worst: f64 = 0.0;
    for &t in &[0.5, 0.999] {
        let m = sol.total_mass(t).unwrap();
        worst = worst.max((m - m0).abs() / m0);
    }
    check(
        "criterion 5 (mass conservation)",
        worst <= 1e-9,
        format!("total mass constant across t in {{0, 0.5, 0.999}} (max rel drift {worst:.3e})"),
    );
}

#[test]
fn criterion_6_legacy_polytrope_first_zero() {
    // coeff = α(3)/(4K) normalized to 1 with K = π.
    let profile = integrate_emden(
        EmdenKind::PowerLaw,
        3,
        std::f64::consts::PI,
        0.0,
        1.0,
        10.0,
        1e-10,
    )
    .unwrap();
    let z1 = profile.first_zero().expect("first zero exists");
    let oracle = integrate_emden(
        EmdenKind::PowerLaw,
        3,
        std::f64::consts::PI,
        0.0,
        1.0,
        10.0,
        1e-12,
    )
    .unwrap()
    .first_zero()
    .unwrap();
    check(
        "criterion 6 (polytrope first zero)",
        (z1 - 6.8968).abs() <= 1e-3 && (z1 - oracle).abs() <= 1e-6,
        format!("first zero {z1:.6} = 6.8968 +/- 1e-3 (oracle at rel_tol 1e-12: {oracle:.8})"),
    );
}

#[test]
fn criterion_7_legacy_scaling_energy() {
    let s = emden_scaling_integrate(1.0, 1.0, 0.0, 3, 10.0, 1e-13).unwrap();
    let emden = s.emden().unwrap();
    check(
        "criterion 7 (legacy scaling energy)",
        emden.collapse_detected && emden.energy_drift <= 1e-9,
        format!(
            "first integral conserved to {:.3e} <= 1e-9 until the positivity floor (collapse at t = {:.6})",
            emden.energy_drift,
            emden.collapse_time.unwrap_or(f64::NAN)
        ),
    );
}

/// Test-local adaptive Simpson quadrature, independent of the library's
/// integration machinery.
fn oracle_quad(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, m: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let left = simpson(f, a, 0.5 * (a + m), m);
        let right = simpson(f, m, 0.5 * (m + b), b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, a, m, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, right, 0.5 * tol, depth - 1)
        }
    }
    let whole = simpson(f, a, 0.5 * (a + b), b);
    recurse(f, a, b, whole, tol, 50)
}

#[test]
fn criterion_8_poisson_field() {
    let params = reference_params(SolutionCase::Case1a);
    let sol = RadialSolution::build(&params, SolutionCase::Case1a, &ProfileOptions::default())
        .unwrap();
    let alpha_n = collapsar_core::alpha_const(3).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(0x70_15_50_4e);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let t: f64 = rng.gen_range(0.0..0.8);
        let frac: f64 = rng.gen_range(0.02..0.98);
        let r = frac * sol.support_radius(t).unwrap();
        let integral = oracle_quad(
            &|s| {
                if s == 0.0 {
                    0.0
                } else {
                    (sol.density(t, s).unwrap() - params.lambda) * s * s
                }
            },
            0.0,
            r,
            1e-14,
        );
        let expected = alpha_n / (r * r) * integral;
        let got = sol.phi_r(t, r).unwrap();
        worst = worst.max((got - expected).abs() / expected.abs().max(1e-300));
    }
    check(
        "criterion 8 (Poisson field vs quadrature)",
        worst <= 1e-9,
        format!("100 random interior points agree to {worst:.3e} <= 1e-9"),
    );

    // Synthetic uniform background: δ = 0 profile stays at α; Λ = α makes
    // ρ − Λ vanish inside the fluid, so the field must cancel.
    let mut uniform =
        PhysicalParams::for_case(SolutionCase::Case1a, 3, 1.0, 1.0, 0, 0.0, -1.0, 1.0, 0.7)
            .unwrap();
    uniform.lambda = 0.7;
    let flat = RadialSolution::build(&uniform, SolutionCase::Case1a, &ProfileOptions::default())
        .unwrap();
    let mut worst_bg: f64 = 0.0;
    for j in 1..20 {
        let r = j as f64 / 20.0 * flat.support_radius(0.0).unwrap();
        worst_bg = worst_bg.max(flat.phi_r(0.0, r).unwrap().abs());
    }
    check(
        "criterion 8 (uniform background cancellation)",
        worst_bg <= 1e-12,
        format!("uniform-density field magnitude {worst_bg:.3e} <= 1e-12"),
    );
}

#[test]
fn criterion_9_cli_contract() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_collapsar");

    // Criterion-1 configuration: reference case 1a.
    let config = r#"{
        "case": "case1a",
        "params": {"n_dim": 3, "k": 1.0, "kappa": 1.0, "delta": 1, "m": -1.0, "n": 1.0, "alpha": 1.0},
        "grid": {"t_samples": 5, "r_samples": 50}
    }"#;
    let cfg_path = dir.path().join("case1a.json");
    std::fs::write(&cfg_path, config).unwrap();
    let out_dir = dir.path().join("out");

    let status = Command::new(bin)
        .args(["verify", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out_dir)
        .status()
        .unwrap();
    let summary_text = std::fs::read_to_string(out_dir.join("summary.json")).unwrap();
    let summary: serde_json::Value = serde_json::from_str(&summary_text).unwrap();
    let schema_ok = summary["pass"]["overall"].as_bool() == Some(true)
        && summary["mass_residual_max"].is_number()
        && summary["momentum_residual_max"].is_number()
        && summary["worst_momentum"].as_array().map(|v| v.len()) == Some(5)
        && summary["t_grid"].as_array().map(|v| v.len()) == Some(5);
    check(
        "criterion 9 (verify exits 0 with schema-valid summary)",
        status.code() == Some(0) && schema_ok,
        format!("exit {:?}, summary keys valid: {schema_ok}", status.code()),
    );

    // Corrupted configuration: truncated JSON.
    let bad_path = dir.path().join("bad.json");
    std::fs::write(&bad_path, &config[..40]).unwrap();
    let status = Command::new(bin)
        .args(["verify", "--config"])
        .arg(&bad_path)
        .status()
        .unwrap();
    check(
        "criterion 9 (corrupted config exits 2)",
        status.code() == Some(2),
        format!("exit {:?}", status.code()),
    );

    // Zero thresholds force the failure path.
    let zero = config.replace(
        r#""grid": {"t_samples": 5, "r_samples": 50}"#,
        r#""grid": {"t_samples": 5, "r_samples": 50},
           "thresholds": {"mass_scaled_max": 0.0, "momentum_scaled_max": 0.0}"#,
    );
    let zero_path = dir.path().join("zero.json");
    std::fs::write(&zero_path, zero).unwrap();
    let status = Command::new(bin)
        .args(["verify", "--config"])
        .arg(&zero_path)
        .arg("--out")
        .arg(dir.path().join("out_zero"))
        .status()
        .unwrap();
    check(
        "criterion 9 (zero thresholds exit 4)",
        status.code() == Some(4),
        format!("exit {:?}", status.code()),
    );
}
