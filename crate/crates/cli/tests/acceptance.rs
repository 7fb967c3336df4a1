//! One PASS/FAIL line per acceptance criterion. Exits non-zero if any fails.

use std::f64::consts::FRAC_PI_2;
use std::time::{Duration, Instant};

use anyhow::{ensure, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tempfile::TempDir;
use warpflow::flow::{hgf_rhs, rf_rhs, Boundary, FlowCoeffs, FlowState, Grid, Scheme, Stepper};
use warpflow::manifold::{catalog as metrics, curvature_direct};
use warpflow::verify::{
    f_closed_form, f_trace_form, verify_f_evolution, verify_ricci_evolution, EinsteinFiberContext,
    FlowTrajectory, IndexForm, VerifyOptions,
};
use warpflow::warped::{catalog as specs, product_curvature, sample_points};
use warpflow_cli::run::simulate;
use warpflow_cli::{Outcome, ScenarioConfig, Status};

fn scenario(cfg: Value) -> Result<(Outcome, TempDir)> {
    let cfg = ScenarioConfig::from_json(&cfg.to_string())?;
    let tmp = TempDir::new()?;
    let out = warpflow_cli::run(&cfg, tmp.path())?;
    Ok((out, tmp))
}

fn worst(out: &Outcome, name: &str) -> f64 {
    out.checks()
        .iter()
        .find(|c| c.name == name)
        .map(|c| c.linf)
        .unwrap_or(f64::NAN)
}

fn flow(profile: &str, coeffs: &str, points: usize, dt: f64, t_end: f64, stride: usize) -> Value {
    json!({
        "profile": profile,
        "coeffs": coeffs,
        "points": points,
        "dt": dt,
        "t_end": t_end,
        "stride": stride
    })
}

fn oracle_equivalence() -> Result<String> {
    let catalog = [
        "direct:euclidean:2/sphere:2",
        "direct:sphere:2/hyperbolic:2",
        "cylinder:2,1",
        "sphere-split:2",
        "bump-warp:2",
    ];
    let mut notes = Vec::new();
    for spec in catalog {
        for (fd, tol) in [(false, 1e-6), (true, 1e-4)] {
            let start = Instant::now();
            let (out, _tmp) = scenario(json!({
                "mode": "curvature",
                "curvature": { "spec": spec, "finite_difference": fd },
                "tolerances": { "default": tol }
            }))?;
            let elapsed = start.elapsed();
            let max = out.checks().iter().map(|c| c.linf).fold(0.0, f64::max);
            ensure!(
                out.status == Status::Pass,
                "{spec} fd={fd}: residual {max:e} >= {tol:e}"
            );
            ensure!(elapsed < Duration::from_secs(10), "{spec} took {elapsed:?}");
            if fd {
                notes.push(format!("{spec} {max:.1e}"));
            }
        }
    }
    Ok(format!("finite-difference worst: {}", notes.join(", ")))
}

fn constant_curvature() -> Result<String> {
    let wp = specs::from_name("sphere-split:2")?;
    let mut worst_scal = 0.0f64;
    let mut worst_ric = 0.0f64;
    for p in sample_points(&wp, 8, 0.1) {
        let c = product_curvature(&wp, &p, 1e-3)?;
        worst_scal = worst_scal.max((c.scalar - 6.0).abs());
        worst_ric = worst_ric.max((&c.ricci - 2.0 * &c.metric).amax());
    }
    ensure!(
        worst_scal < 1e-6 && worst_ric < 1e-6,
        "S3: {worst_scal:e} {worst_ric:e}"
    );
    let s2 = metrics::sphere(2);
    let mut worst_s2 = 0.0f64;
    for p in [[0.4, 0.0], [1.0, 2.0], [FRAC_PI_2, 4.0], [2.7, 5.9]] {
        let c = curvature_direct(&s2, &p, 1e-3)?;
        worst_s2 = worst_s2.max((&c.ricci - &c.metric).amax());
    }
    ensure!(worst_s2 < 1e-8, "unit S2: {worst_s2:e}");
    Ok(format!(
        "S3 scal {worst_scal:.1e}, Ric {worst_ric:.1e}; S2 Ric {worst_s2:.1e}"
    ))
}

fn ricci_cylinder() -> Result<String> {
    let cfg = ScenarioConfig::from_json(
        &json!({"mode": "flow", "flow": flow("cylinder:2,1", "ricci", 41, 1e-4, 0.1, 100)})
            .to_string(),
    )?;
    let sim = simulate(cfg.flow()?)?;
    // λ² = r0² − 2(n−1)t
    let exact = 1.0 - 2.0 * 0.1;
    let err = sim
        .last
        .lam
        .iter()
        .map(|l| (l * l - exact).abs())
        .fold(0.0, f64::max);
    ensure!(err < 1e-8, "lambda^2 error {err:e}");
    let (out, _tmp) = scenario(json!({
        "mode": "flow",
        "flow": flow("cylinder:2,1", "ricci", 41, 1e-4, 0.6, 100)
    }))?;
    ensure!(out.status == Status::Singularity, "no singularity reported");
    let t = out.summary["singularity"]["t"]
        .as_f64()
        .context("singularity time")?;
    ensure!((t - 0.5).abs() <= 2e-4, "singular at t = {t}");
    Ok(format!("lambda^2 error {err:.1e}; singular at t = {t}"))
}

fn hyperbolic_cylinder() -> Result<String> {
    let mut f = flow("cylinder:3,1", "hyperbolic", 41, 1e-3, 0.5, 100);
    f["velocity"] = json!({"lambda": "0.3"});
    let cfg = ScenarioConfig::from_json(&json!({"mode": "flow", "flow": f}).to_string())?;
    let sim = simulate(cfg.flow()?)?;
    // λ² = λ0² + 2λ0v0t − (n−1)t²
    let t = 0.5;
    let exact = 1.0 + 2.0 * 0.3 * t - 2.0 * t * t;
    let err = sim
        .last
        .lam
        .iter()
        .map(|l| (l * l - exact).abs())
        .fold(0.0, f64::max);
    ensure!(err < 1e-6, "lambda^2 error {err:e}");
    Ok(format!("lambda^2 error {err:.1e} at t = 0.5"))
}

fn orders(out: &Outcome) -> Vec<f64> {
    out.summary["rows"]
        .as_array()
        .map(|rows| rows.iter().filter_map(|r| r["order"].as_f64()).collect())
        .unwrap_or_default()
}

fn span(v: &[f64]) -> String {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    format!("[{lo:.2}, {hi:.2}]")
}

fn convergence_orders() -> Result<String> {
    let (dt, _a) = scenario(json!({
        "mode": "sweep",
        "flow": flow("cylinder:2,1", "ricci", 21, 4e-3, 0.4, 10),
        "sweep": { "kind": "flow-dt", "values": [4e-3, 2e-3, 1e-3], "min_order": 3.5 }
    }))?;
    let (h, _b) = scenario(json!({
        "mode": "sweep",
        "curvature": { "spec": "bump-warp:2" },
        "sweep": {
            "kind": "oracle-h",
            "values": [4e-2, 2e-2, 1e-2],
            "min_order": 1.7,
            "max_order": 2.3
        }
    }))?;
    let (ot, oh) = (orders(&dt), orders(&h));
    ensure!(
        dt.status == Status::Pass && !ot.is_empty(),
        "rk4 orders {ot:?}"
    );
    ensure!(
        h.status == Status::Pass && !oh.is_empty(),
        "oracle orders {oh:?}"
    );
    Ok(format!("rk4 {}, oracle {}", span(&ot), span(&oh)))
}

fn einstein_fiber_identities() -> Result<String> {
    let mut hgf = flow("cylinder:3,1", "hyperbolic", 21, 1e-3, 0.5, 50);
    hgf["velocity"] = json!({"lambda": "0.3"});
    let runs = [
        flow("cylinder:2,1", "ricci", 21, 1e-4, 0.4, 100),
        hgf,
        flow("flat-product:2", "ricci", 21, 1e-4, 0.1, 100),
    ];
    let mut prop = 0.0f64;
    let mut cons = 0.0f64;
    for f in runs {
        let (out, _tmp) = scenario(json!({
            "mode": "verify",
            "flow": f,
            "verify": { "equations": ["fiber-proportionality", "f-consistency"] },
            "tolerances": { "fiber-proportionality": 1e-6, "f-consistency": 1e-8 }
        }))?;
        prop = prop.max(worst(&out, "fiber-proportionality"));
        cons = cons.max(worst(&out, "f-consistency"));
        ensure!(
            out.status == Status::Pass,
            "{} {prop:e} {cons:e}",
            f["profile"]
        );
    }
    let mut forms = 0.0f64;
    for name in ["cylinder:2,1", "sphere-split:2", "bump-warp:3"] {
        let wp = specs::from_name(name)?;
        for p in sample_points(&wp, 6, 0.1) {
            let trace = f_trace_form(&wp, &p, 1e-3)?;
            forms = forms.max((trace - f_closed_form(&wp, &p[..wp.m1()], 1e-3)?).abs());
        }
    }
    ensure!(forms < 1e-8, "trace vs closed form {forms:e}");
    Ok(format!(
        "proportionality {prop:.1e}, f along runs {cons:.1e}, trace vs closed {forms:.1e}"
    ))
}

fn f_equation() -> Result<String> {
    let (out, _tmp) = scenario(json!({
        "mode": "verify",
        "flow": flow("cylinder:2,1", "ricci", 21, 5e-5, 0.4005, 5),
        "verify": { "equations": ["f-evolution"], "time_order": "fourth" },
        "tolerances": { "f-evolution": 1e-7 }
    }))?;
    let r = worst(&out, "f-evolution");
    ensure!(out.status == Status::Pass, "f residual {r:e}");
    Ok(format!("f_t - 2f^2 residual {r:.1e} on [0, 0.4]"))
}

fn evolution_consistency() -> Result<String> {
    let rf = [
        "base-metric-rf",
        "fiber-metric-rf",
        "warp-rf",
        "ricci-base-rf",
        "ricci-fiber-einstein-rf",
    ];
    let hgf = ["base-metric-hgf", "warp-hgf"];
    let mut notes = Vec::new();
    for profile in ["sphere-profile:2,3", "bump-warp:2"] {
        for (coeffs, eqs) in [("ricci", &rf[..]), ("hyperbolic", &hgf[..])] {
            let (out, _tmp) = scenario(json!({
                "mode": "sweep",
                "flow": flow(profile, coeffs, 101, 4e-4, 0.04, 10),
                "verify": { "equations": eqs },
                "sweep": {
                    "kind": "verify-grid",
                    "levels": [
                        { "points": 101, "dt": 4e-4 },
                        { "points": 201, "dt": 2e-4 },
                        { "points": 401, "dt": 1e-4 }
                    ],
                    "steps": 100,
                    "min_order": 1.8
                },
                "tolerances": { "default": 1e-3 }
            }))?;
            let finest = out.checks().iter().map(|c| c.linf).fold(0.0, f64::max);
            let o = orders(&out);
            ensure!(
                out.status == Status::Pass,
                "{profile} {coeffs}: orders {o:?}, finest {finest:e}"
            );
            notes.push(format!("{profile} {coeffs} {} {finest:.1e}", span(&o)));
        }
    }
    Ok(notes.join("; "))
}

fn characterization() -> Result<String> {
    let (cyl, _a) = scenario(json!({
        "mode": "verify",
        "flow": flow("cylinder:2,1", "ricci", 21, 1e-4, 0.01, 10),
        "verify": { "equations": ["rf-char-hess"] },
        "tolerances": { "default": 1e-12 }
    }))?;
    let hess = worst(&cyl, "rf-char-hess");
    ensure!(hess == 0.0, "cylinder Hess residual {hess:e}");
    for (coeffs, eqs) in [
        ("ricci", ["rf-char", "rf-char-hess"]),
        ("hyperbolic", ["hgf-char", "hgf-char-offdiag"]),
    ] {
        let (out, _tmp) = scenario(json!({
            "mode": "verify",
            "flow": flow("flat-product:2", coeffs, 21, 1e-3, 0.05, 10),
            "verify": { "equations": eqs },
            "tolerances": { "default": 1e-12 }
        }))?;
        for e in eqs {
            let r = worst(&out, e);
            ensure!(r == 0.0, "flat product {e} = {r:e}");
        }
    }
    let (kicked, _b) = scenario(json!({
        "mode": "verify",
        "flow": flow("cylinder:2,1", "ricci", 21, 1e-4, 0.01, 10),
        "verify": {
            "equations": ["warp-rf"],
            "perturb": { "snapshot": 5, "lambda_scale": 1.01 }
        },
        "tolerances": { "default": 1e-6 }
    }))?;
    let r = worst(&kicked, "warp-rf");
    ensure!(
        kicked.status == Status::Fail && kicked.exit_code() == 1,
        "perturbation not flagged: {r:e}"
    );
    Ok(format!(
        "flat product all zero; 1% kick gives {r:.1e} > 1e-6"
    ))
}

fn random_state(rng: &mut ChaCha8Rng, coeffs: FlowCoeffs) -> FlowState {
    let boundary = [Boundary::Periodic, Boundary::Neumann, Boundary::Pole][rng.random_range(0..3)];
    let (lo, hi) = match boundary {
        Boundary::Periodic => (0.0, std::f64::consts::TAU),
        Boundary::Neumann => (-1.0, 1.0),
        Boundary::Pole => (0.0, std::f64::consts::PI),
    };
    let g = Grid::new(rng.random_range(24..64), lo, hi, boundary).unwrap();
    let a: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..0.3)).collect();
    let xs = g.points();
    let (lam, mu): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .map(|x| match boundary {
            Boundary::Pole => (
                x.sin() * (1.0 + a[0] * x.cos().powi(2)),
                1.0 + a[1] * x.sin().powi(2),
            ),
            _ => (
                2.0 + a[0] * (2.0 * x).cos() + a[1] * x.cos(),
                1.0 + a[2] * (3.0 * x).cos(),
            ),
        })
        .unzip();
    let n = rng.random_range(2..5);
    let s = FlowState::new(g, mu, lam, coeffs, n, 1.0).unwrap();
    if coeffs.alpha == 0.0 {
        return s;
    }
    let mv = xs.iter().map(|x| a[3] * x.cos()).collect();
    let lv = xs
        .iter()
        .map(|x| match boundary {
            Boundary::Pole => a[4] * x.sin(),
            _ => a[4] * x.cos().powi(2),
        })
        .collect();
    s.with_velocities(mv, lv).unwrap()
}

fn axpy(base: &[f64], terms: &[(&[f64], f64)]) -> Vec<f64> {
    let mut out = base.to_vec();
    for (d, w) in terms {
        out.iter_mut().zip(d.iter()).for_each(|(o, v)| *o += w * v);
    }
    out
}

/// Classical RK4 on the dedicated right-hand sides.
fn dedicated_step(s: &FlowState, dt: f64) -> FlowState {
    let second = s.coeffs.alpha != 0.0;
    // (dmu, dlam, dmu_vel, dlam_vel)
    let rates = |st: &FlowState| -> [Vec<f64>; 4] {
        if second {
            let (mtt, ltt) = hgf_rhs(st).unwrap();
            [
                st.mu_vel.clone().unwrap(),
                st.lam_vel.clone().unwrap(),
                mtt,
                ltt,
            ]
        } else {
            let (dm, dl) = rf_rhs(st).unwrap();
            [dm, dl, Vec::new(), Vec::new()]
        }
    };
    let shift = |ks: &[(&[Vec<f64>; 4], f64)]| {
        let pick =
            |i: usize| -> Vec<(&[f64], f64)> { ks.iter().map(|(k, w)| (&k[i][..], *w)).collect() };
        let mut next = s.clone();
        next.mu = axpy(&s.mu, &pick(0));
        next.lam = axpy(&s.lam, &pick(1));
        if second {
            next.mu_vel = Some(axpy(s.mu_vel.as_ref().unwrap(), &pick(2)));
            next.lam_vel = Some(axpy(s.lam_vel.as_ref().unwrap(), &pick(3)));
        }
        next
    };
    let k1 = rates(s);
    let k2 = rates(&shift(&[(&k1, 0.5 * dt)]));
    let k3 = rates(&shift(&[(&k2, 0.5 * dt)]));
    let k4 = rates(&shift(&[(&k3, dt)]));
    let w = dt / 6.0;
    shift(&[(&k1, w), (&k2, 2.0 * w), (&k3, 2.0 * w), (&k4, w)])
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs().max(1e-300))
        .fold(0.0, f64::max)
}

fn reductions() -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let stepper = Stepper::new(Scheme::Rk4);
    let mut worst_step = 0.0f64;
    for _ in 0..10 {
        for coeffs in [FlowCoeffs::RICCI, FlowCoeffs::HYPERBOLIC] {
            let s = random_state(&mut rng, coeffs);
            let dt = 0.5 * stepper.max_dt(&s);
            let unified = stepper.step(&s, dt)?;
            let dedicated = dedicated_step(&s, dt);
            worst_step = worst_step
                .max(rel(&unified.mu, &dedicated.mu))
                .max(rel(&unified.lam, &dedicated.lam));
            if let (Some(a), Some(b)) = (&unified.lam_vel, &dedicated.lam_vel) {
                worst_step = worst_step.max(rel(a, b));
            }
            if let (Some(a), Some(b)) = (&unified.mu_vel, &dedicated.mu_vel) {
                worst_step = worst_step.max(rel(a, b));
            }
        }
    }
    ensure!(
        worst_step <= 1e-14,
        "unified vs dedicated step {worst_step:e}"
    );

    let mut worst_form = 0.0f64;
    for profile in ["bump-warp:3", "sphere-profile:2,3"] {
        let cfg = ScenarioConfig::from_json(
            &json!({"mode": "flow", "flow": flow(profile, "ricci", 61, 1e-4, 1e-3, 2)}).to_string(),
        )?;
        let traj = FlowTrajectory::new(simulate(cfg.flow()?)?.snapshots)?;
        let ctx = EinsteinFiberContext::for_state(&traj.snapshots()[0]);
        let opts = VerifyOptions::default();
        let pairs = [
            (
                verify_ricci_evolution(&traj, Some(&ctx), &opts, IndexForm::General)?,
                verify_ricci_evolution(&traj, Some(&ctx), &opts, IndexForm::Collapsed)?,
            ),
            (
                verify_f_evolution(&traj, Some(&ctx), &opts, IndexForm::General)?,
                verify_f_evolution(&traj, Some(&ctx), &opts, IndexForm::Collapsed)?,
            ),
        ];
        for (g, c) in &pairs {
            ensure!(g.reports.len() == c.reports.len(), "report counts differ");
            for (a, b) in g.reports.iter().zip(&c.reports) {
                for (name, ra) in &a.residuals {
                    let rb = b.get(name).context("missing residual")?;
                    worst_form = worst_form.max((ra.linf - rb.linf).abs() / ra.linf.max(1e-300));
                }
            }
        }
    }
    ensure!(worst_form <= 1e-12, "general vs collapsed {worst_form:e}");
    Ok(format!(
        "step mismatch {worst_step:.1e} on 10 seeded states; index forms agree to {worst_form:.1e}"
    ))
}

type Criterion = (&'static str, fn() -> Result<String>);

fn main() {
    let criteria: [Criterion; 10] = [
        ("oracle equivalence", oracle_equivalence),
        ("constant curvature calibration", constant_curvature),
        ("Ricci flow cylinder", ricci_cylinder),
        ("hyperbolic flow cylinder", hyperbolic_cylinder),
        ("convergence orders", convergence_orders),
        ("Einstein fiber identities", einstein_fiber_identities),
        ("f equation", f_equation),
        ("evolution consistency", evolution_consistency),
        ("characterization residuals", characterization),
        ("reduction identities", reductions),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = check();
        let secs = start.elapsed().as_secs_f64();
        match res {
            Ok(detail) => println!("PASS {:>2} {name} ({secs:.1}s): {detail}", i + 1),
            Err(e) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({secs:.1}s): {e:#}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
