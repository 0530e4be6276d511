use super::*;
use crate::model::fixtures;

#[test]
fn error_bound_scan_on_ex22_has_unit_constant() {
    // Hand computation: in every quadrant the l1 distance to the axis pair
    // {x1 <= 0, x2 = 0} ∪ {x1 = 0, x2 >= 0} equals the residual, so all
    // recorded ratios are exactly 1 on the oracle lattice.
    let prob = fixtures::ex22();
    let scan = scan_error_bound(&prob, &[0.0, 0.0], 0.1, 500, 42).unwrap();
    assert!(!scan.unbounded_flag);
    assert!(!scan.records.is_empty());
    assert!(!scan.approximate);
    for r in &scan.records {
        assert!(r.ratio <= scan.c_hat);
    }
    assert!(
        (scan.c_hat - 1.0).abs() <= 1e-6,
        "c_hat {} should be 1 on this fixture",
        scan.c_hat
    );

    // Doubling the sample count keeps c_hat within the oracle error bar.
    let scan2 = scan_error_bound(&prob, &[0.0, 0.0], 0.1, 1000, 42).unwrap();
    assert!((scan.c_hat - scan2.c_hat).abs() <= scan.oracle_error_bar);
}

#[test]
fn error_bound_scan_with_no_infeasible_samples() {
    // Feasible everywhere near the center: no ratios get recorded.
    let vars = crate::expr::VarSpace::new(["x1", "x2"]).unwrap();
    let e = |s: &str| crate::expr::parse_expr(s, &vars).unwrap();
    let prob = MpvcProblem::new(
        "slack",
        vars.clone(),
        e("0"),
        vec![],
        vec![],
        vec![(e("-1"), e("x1 + 10"))],
    )
    .unwrap();
    let scan = scan_error_bound(&prob, &[0.0, 0.0], 0.1, 200, 7).unwrap();
    assert_eq!(scan.c_hat, 0.0);
    assert!(scan.records.is_empty());
    assert!(!scan.unbounded_flag);
}

#[test]
fn error_bound_scan_on_ex41_is_finite() {
    // Frozen from the grid oracle: the worst ratio on this fixture sits at 2
    // (points (-t, t) cost both coordinates to repair but only one residual).
    let prob = fixtures::ex41();
    let scan = scan_error_bound(&prob, &[0.0, 0.0], 0.1, 500, 42).unwrap();
    assert!(!scan.unbounded_flag);
    assert!(scan.c_hat >= 1.0 && scan.c_hat <= 2.0 + 1e-6, "c_hat {}", scan.c_hat);
}

#[test]
fn error_bound_scan_rejects_infeasible_center() {
    let prob = fixtures::ex22();
    assert!(scan_error_bound(&prob, &[1.0, 1.0], 0.1, 10, 1).is_err());
}

#[test]
fn penalty_sweep_on_remark_problem_stays_at_origin() {
    let prob = fixtures::ex22();
    let profile = penalty_sweep(
        &prob,
        &[0.0, 0.0],
        &[0.0, 0.1, 1.0, 10.0],
        &SolveConfig::default(),
    )
    .unwrap();
    for row in &profile.rows {
        assert!(
            row.dist_to_center <= 1e-6,
            "alpha {}: minimizer {:?}",
            row.alpha,
            row.minimizer
        );
    }
    assert_eq!(profile.alpha_bar, Some(0.0));
}

#[test]
fn penalty_sweep_single_alpha_zero() {
    // alpha = 0 minimizes the bare objective.
    let prob = fixtures::ex22();
    let profile =
        penalty_sweep(&prob, &[0.0, 0.0], &[0.0], &SolveConfig::default()).unwrap();
    assert_eq!(profile.rows.len(), 1);
    assert!(profile.rows[0].penalty_value <= 1e-10);
}

#[test]
fn penalty_sweep_records_stabilization_on_shifted_objective() {
    // ex21 constraints, objective pulled toward (-1, -1): small alphas drift,
    // large alphas pin the minimizer near the feasible corner set.
    let base = fixtures::ex21();
    let vars = base.vars().clone();
    let e = |s: &str| crate::expr::parse_expr(s, &vars).unwrap();
    let prob = MpvcProblem::new(
        "ex21-shifted",
        vars.clone(),
        e("(x1 + 1)^2 + (x2 + 1)^2"),
        base.ineq().to_vec(),
        vec![],
        base.vc().to_vec(),
    )
    .unwrap();
    let profile = penalty_sweep(
        &prob,
        &[-1.0, -1.0],
        &[0.0, 0.1, 1.0, 10.0, 100.0],
        &SolveConfig::default(),
    )
    .unwrap();
    assert_eq!(profile.rows.len(), 5);
    // The unconstrained minimum (-1, -1) is feasible here (H = x1 < 0? no:
    // H(x) = x1 = -1 < 0 infeasible), so some drift must occur and the
    // distances are monotone nonincreasing past the recorded threshold.
    if let Some(bar) = profile.alpha_bar {
        let from = profile.rows.iter().position(|r| r.alpha == bar).unwrap();
        for w in profile.rows[from..].windows(2) {
            assert!(w[1].dist_to_center <= w[0].dist_to_center + 1e-6);
        }
    }
}

#[test]
fn penalty_sweep_rejects_bad_grids() {
    let prob = fixtures::ex22();
    assert!(matches!(
        penalty_sweep(&prob, &[0.0, 0.0], &[1.0, 0.5], &SolveConfig::default()),
        Err(EmpiricsError::BadAlphaGrid)
    ));
    assert!(matches!(
        penalty_sweep(&prob, &[0.0, 0.0], &[], &SolveConfig::default()),
        Err(EmpiricsError::BadAlphaGrid)
    ));
}

#[test]
fn acq_probe_on_ex41_corroborates() {
    let prob = fixtures::ex41();
    let report = probe_acq(&prob, &[0.0, 0.0], 72, &ProbeConfig::default()).unwrap();
    assert_eq!(report.acq_mpvc, AcqVerdict::Corroborated, "{:?}", report.counterexamples_mpvc);
    assert_eq!(report.acq_product, AcqVerdict::Corroborated);
}

#[test]
fn acq_probe_on_ex22_separates_the_two_cones() {
    let prob = fixtures::ex22();
    let report = probe_acq(&prob, &[0.0, 0.0], 72, &ProbeConfig::default()).unwrap();
    // The open quadrant directions sit in L_MPVC but fail the probe.
    assert_eq!(report.acq_mpvc, AcqVerdict::Refuted);
    assert_eq!(report.acq_product, AcqVerdict::Corroborated);
    assert!(report.mpvc_only_directions > 0);
    // Counterexamples re-verify: inside the linearized cone, probe NO.
    let sets = model::classify(&prob, &[0.0, 0.0], 1e-8).unwrap();
    for d in &report.counterexamples_mpvc {
        assert!(cones::in_linearized_mpvc(&prob, &[0.0, 0.0], &sets, d).unwrap());
        let probe =
            cones::tangent_probe(&prob, &[0.0, 0.0], d, &ProbeConfig::default()).unwrap();
        assert_eq!(probe.outcome, ProbeOutcome::No);
        // The witness direction points into the open quadrant.
        assert!(d[0] < 0.0 && d[1] > 0.0);
    }
}

#[test]
fn generated_instances_are_feasible_at_origin_with_expected_classes() {
    let cfg = GeneratorConfig::default();
    let mut biactive_instances = 0;
    for index in 0..50 {
        let prob = generate_instance(&cfg, 11, index);
        let x = vec![0.0; prob.dim()];
        let res = model::residuals(&prob, &x).unwrap();
        assert_eq!(res.total, 0.0, "origin must be exactly feasible");
        let sets = model::classify(&prob, &x, 1e-8).unwrap();
        if !sets.i_biactive.is_empty() {
            biactive_instances += 1;
        }
    }
    assert!(
        biactive_instances >= 15,
        "biactive population should be forced in roughly half the corpus, got {biactive_instances}"
    );
}

#[test]
fn audit_small_corpus_is_clean_and_reproducible() {
    let cfg = GeneratorConfig {
        instances: 12,
        ..GeneratorConfig::default()
    };
    let a = audit_corpus(&cfg, 7).unwrap();
    assert_eq!(a.chain_violation_total, 0, "{:#?}", a.per_instance);
    let b = audit_corpus(&cfg, 7).unwrap();
    assert_eq!(a, b, "audit must be bit-reproducible");

    let json_a = serde_json::to_string(&a).unwrap();
    let json_b = serde_json::to_string(&b).unwrap();
    assert_eq!(json_a, json_b);
}

#[test]
fn audit_empty_corpus() {
    let cfg = GeneratorConfig {
        instances: 0,
        ..GeneratorConfig::default()
    };
    let report = audit_corpus(&cfg, 1).unwrap();
    assert_eq!(report.instances, 0);
    assert!(report.per_instance.is_empty());
    assert_eq!(report.chain_violation_total, 0);
}

#[test]
fn fixture_corpus_has_zero_chain_violations() {
    for prob in [fixtures::ex21(), fixtures::ex22(), fixtures::ex41()] {
        let report = cq::full_report(&prob, &[0.0, 0.0]).unwrap();
        assert!(
            report.chain_violations.is_empty(),
            "{}: {:?}",
            prob.name(),
            report.chain_violations
        );
    }
}
