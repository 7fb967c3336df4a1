use warpflow::error::Error;
use warpflow::flow::{integrate, profiles, FlowCoeffs, FlowState, Stepper};
use warpflow::verify::{
    compute_f, verify_f_consistency, verify_f_evolution, verify_metric_evolution, verify_named,
    verify_ricci_evolution, verify_warp_evolution, EinsteinFiberContext, FlowTrajectory, IndexForm,
    TimeOrder, VerifyOptions,
};

fn trajectory(s: &FlowState, dt: f64, t_end: f64, stride: usize) -> FlowTrajectory {
    let mut snaps = Vec::new();
    integrate(s, dt, t_end, &Stepper::default(), stride, |st| {
        snaps.push(st.clone());
        Ok(())
    })
    .unwrap();
    FlowTrajectory::new(snaps).unwrap()
}

fn fourth() -> VerifyOptions {
    VerifyOptions {
        time_order: TimeOrder::Fourth,
        ..Default::default()
    }
}

#[test]
fn constant_warp_ricci_flow() {
    // λ² = λ₀² − 2ct exactly
    let s = profiles::cylinder(3, 1.5, 21, FlowCoeffs::RICCI).unwrap();
    let traj = trajectory(&s, 1e-4, 0.05, 10);
    let ctx = EinsteinFiberContext::for_state(&s);
    let warp = verify_warp_evolution(&traj, Some(&ctx), &VerifyOptions::default()).unwrap();
    assert!(warp.summary.linf("warp-rf").unwrap() < 1e-8);
    let metric = verify_metric_evolution(&traj, &VerifyOptions::default()).unwrap();
    assert!(metric.summary.linf("fiber-metric-rf").unwrap() < 1e-6);
    assert!(metric.summary.linf("base-metric-rf").unwrap() < 1e-10);
}

#[test]
fn constant_warp_hyperbolic_flow() {
    // λ² = λ₀² − c t² from rest
    let s = profiles::cylinder(2, 1.0, 21, FlowCoeffs::HYPERBOLIC).unwrap();
    let traj = trajectory(&s, 1e-3, 0.3, 10);
    let ctx = EinsteinFiberContext::for_state(&s);
    let warp = verify_warp_evolution(&traj, Some(&ctx), &VerifyOptions::default()).unwrap();
    assert!(warp.summary.linf("warp-hgf").unwrap() < 1e-6);
    for snap in traj.snapshots() {
        let want = 1.0 - snap.t * snap.t;
        assert!((snap.lam[0].powi(2) - want).abs() < 1e-8);
    }
}

#[test]
fn cylinder_ricci_evolution() {
    let s = profiles::cylinder(2, 1.0, 21, FlowCoeffs::RICCI).unwrap();
    let traj = trajectory(&s, 1e-4, 0.02, 10);
    let ctx = EinsteinFiberContext::for_state(&s);
    let opts = VerifyOptions::default();
    let r = verify_ricci_evolution(&traj, Some(&ctx), &opts, IndexForm::General).unwrap();
    // every term carries Ric_xx or Hess λ, both zero up to rounding
    assert!(r.summary.linf("ricci-base-rf").unwrap() < 1e-8);
    assert!(r.summary.linf("ricci-fiber-einstein-rf").unwrap() < 1e-4);
}

#[test]
fn f_equation_on_a_shrinking_cylinder() {
    // flat base, constant λ: f = c/(λ₀² − 2ct) solves f_t = 2f²
    let s = profiles::cylinder(2, 1.0, 11, FlowCoeffs::RICCI).unwrap();
    let traj = trajectory(&s, 5e-5, 0.4 + 5e-4, 5);
    let ctx = EinsteinFiberContext::for_state(&s);
    let r = verify_f_evolution(&traj, Some(&ctx), &fourth(), IndexForm::Collapsed).unwrap();
    let last = r.reports.last().unwrap().t.unwrap();
    assert!(
        r.reports[0].t.unwrap() < 1e-3 && last >= 0.4 - 1e-12,
        "{last}"
    );
    assert!(
        r.summary.linf("f-evolution").unwrap() < 1e-7,
        "{:?}",
        r.summary
    );
    for snap in traj.snapshots() {
        let f = compute_f(Some(&ctx), snap).unwrap();
        let want = 1.0 / (1.0 - 2.0 * snap.t);
        assert!(f.closed.iter().all(|v| (v / want - 1.0).abs() < 1e-8));
    }
}

#[test]
fn f_forms_agree_on_cylinders() {
    for (n, r0) in [(2, 1.0), (3, 0.5), (4, 2.0)] {
        let s = profiles::cylinder(n, r0, 21, FlowCoeffs::RICCI).unwrap();
        let ctx = EinsteinFiberContext::for_state(&s);
        let r = verify_f_consistency(Some(&ctx), &s, &VerifyOptions::default()).unwrap();
        assert!(r.linf("f-consistency").unwrap() < 1e-10);
        assert!(r.linf("fiber-proportionality").unwrap() < 1e-10);
        let f = compute_f(Some(&ctx), &s).unwrap();
        let want = (n as f64 - 1.0) / (r0 * r0);
        assert!(f.closed.iter().all(|v| (v - want).abs() < 1e-12));
    }
}

#[test]
fn flat_product_residuals_are_zero() {
    let s = profiles::flat_product(2, 16, FlowCoeffs::RICCI).unwrap();
    let traj = trajectory(&s, 1e-3, 0.01, 2);
    let ctx = EinsteinFiberContext::for_state(&s);
    let names: Vec<String> = [
        "flow-consistency",
        "base-metric-rf",
        "fiber-metric-rf",
        "warp-rf",
        "ricci-base-rf",
        "ricci-fiber-rf",
        "ricci-fiber-einstein-rf",
        "f-consistency",
        "fiber-proportionality",
        "f-evolution",
        "rf-char",
        "rf-char-hess",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let r = verify_named(&traj, Some(&ctx), &VerifyOptions::default(), &names).unwrap();
    assert_eq!(r.summary.residuals.len(), names.len());
    assert_eq!(r.summary.max_linf(), 0.0, "{:?}", r.summary);
}

#[test]
fn injected_perturbation_is_flagged() {
    let s = profiles::cylinder(2, 1.0, 21, FlowCoeffs::RICCI).unwrap();
    let traj = trajectory(&s, 1e-4, 0.01, 10);
    let mut snaps = traj.snapshots().to_vec();
    for l in &mut snaps[5].lam {
        *l *= 1.01;
    }
    let bad = FlowTrajectory::new(snaps).unwrap();
    let ctx = EinsteinFiberContext::for_state(&s);
    let opts = VerifyOptions::default();
    let clean = verify_warp_evolution(&traj, Some(&ctx), &opts).unwrap();
    let hit = verify_warp_evolution(&bad, Some(&ctx), &opts).unwrap();
    assert!(clean.summary.linf("warp-rf").unwrap() < 1e-8);
    assert!(hit.summary.linf("warp-rf").unwrap() > 1.0);
}

#[test]
fn hyperbolic_runs_reject_ricci_only_checks() {
    let s = profiles::cylinder(2, 1.0, 21, FlowCoeffs::HYPERBOLIC).unwrap();
    let traj = trajectory(&s, 1e-3, 0.01, 2);
    let ctx = EinsteinFiberContext::for_state(&s);
    let r = verify_ricci_evolution(
        &traj,
        Some(&ctx),
        &VerifyOptions::default(),
        IndexForm::General,
    );
    assert!(matches!(r, Err(Error::InvalidCoefficients(_))));
}
