//! Acceptance criteria 1 to 12: one PASS/FAIL line each, nonzero exit on any failure.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::Instant;

use impulse_core::adjoint::{audit_lifted_commutativity, lifted_samples, pull_back_adjoint, solve_transformed_adjoint};
use impulse_core::certify::{certify, CertifyOptions};
use impulse_core::io::{load_signals, read_ordinary, read_system};
use impulse_core::propagate::{
    approximation_check, integrate_impulsive, integrate_smooth, random_pairs, robustness_gap,
};
use impulse_core::sampling::state_control_points;
use impulse_core::signals::{ControlSignal, OrdinarySignal, Side};
use impulse_core::{SystemDocument, SystemSpec, TransformContext};

type Outcome = Result<(bool, String), String>;
type Criterion = Box<dyn Fn() -> Outcome>;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn system(name: &str) -> SystemSpec {
    read_system(&data(&format!("{name}.json"))).expect("canonical system loads")
}

fn err(e: impulse_core::Error) -> String {
    e.to_string()
}

fn sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Criterion 1: flow-box residual on the commuting systems.
fn flow_box() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for name in ["s_const", "s_lin", "s_comm2"] {
        let spec = system(name);
        let ctx = TransformContext::new(&spec);
        let samples = state_control_points(spec.x0(), 2.0, spec.u_box(), 100, Some(11));
        let report = ctx.verify_flowbox(&samples, 1e-6);
        if !report.failures.is_empty() {
            return Ok((false, format!("{name}: {} sample failures", report.failures.len())));
        }
        worst = worst.max(report.max_residual);
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((
        worst <= 1e-6 && secs < 5.0,
        format!("max residual {worst:.3e} (<= 1e-6), {secs:.2} s (< 5 s)"),
    ))
}

/// Criterion 2: phi^-1 after phi is the identity.
fn round_trip() -> Outcome {
    let mut worst: f64 = 0.0;
    for name in ["s_const", "s_lin", "s_comm2"] {
        let spec = system(name);
        let ctx = TransformContext::new(&spec);
        for (x, z) in state_control_points(spec.x0(), 2.0, spec.u_box(), 100, Some(12)) {
            let (xi, eta) = ctx.phi(&x, &z).map_err(err)?;
            let (xb, zb) = ctx.phi_inverse(&xi, &eta).map_err(err)?;
            worst = worst.max(sup(&x, &xb)).max(sup(&z, &zb));
        }
    }
    Ok((worst <= 1e-8, format!("max round-trip error {worst:.3e} (<= 1e-8)")))
}

/// Criterion 3: commutativity audit. Hand bracket on S_noncomm: [g1, g2] = (1, 0, 0, 0).
fn commutativity() -> Outcome {
    let comm = system("s_comm2");
    let report = comm.check_commutativity(&comm.default_samples(200, 2.0), 1e-8);
    let non = system("s_noncomm");
    let bad = non.check_commutativity(&non.default_samples(200, 2.0), 1e-8);
    let pair = bad
        .pairs
        .iter()
        .find(|p| p.alpha == 1 && p.beta == 2)
        .ok_or("pair (1,2) missing")?;
    let ok = report.pass && !bad.pass && !pair.pass && (pair.max_norm - 1.0).abs() <= 0.05;
    Ok((
        ok,
        format!(
            "s_comm2 pass = {}, s_noncomm pair (1,2) norm {:.6} (within 5% of 1)",
            report.pass, pair.max_norm
        ),
    ))
}

/// Criterion 4: direct and transformed integration agree for continuous controls.
fn smooth_equivalence() -> Outcome {
    let spec = system("s_lin");
    let ctx = TransformContext::new(&spec);
    let (u, a) = load_signals(&spec, &data("ramp.json"), &data("a_one.json")).map_err(err)?;
    let direct = integrate_smooth(&ctx, &u, &a, 1e-3).map_err(err)?;
    let transformed = integrate_impulsive(&ctx, &u, &a, 1e-3).map_err(err)?;
    if direct.times() != transformed.times() {
        return Ok((false, "grids differ".into()));
    }
    let gap = direct
        .nodes()
        .iter()
        .zip(transformed.nodes())
        .map(|(d, t)| sup(d.x(), t.x()))
        .fold(0.0, f64::max);
    Ok((gap <= 1e-5, format!("sup-norm gap {gap:.3e} (<= 1e-5)")))
}

fn lin_with_u0(x0: f64, u0: f64) -> SystemSpec {
    let text = std::fs::read_to_string(data("s_lin.json")).unwrap();
    let mut doc: SystemDocument = serde_json::from_str(&text).unwrap();
    doc.x0 = vec![x0];
    doc.u0 = vec![u0];
    SystemSpec::from_document(&doc).unwrap()
}

/// Criterion 5: closed forms. S_const: x(1) = 1 + 2 with a = 1 and a jump of +2.
/// S_lin with a = 0: x = x0 exp(u - u0), so a step to ln 2 gives 2 x0 exp(-u0).
fn closed_forms() -> Outcome {
    let spec = system("s_const");
    let ctx = TransformContext::new(&spec);
    let (u, a) = load_signals(&spec, &data("step.json"), &data("a_one.json")).map_err(err)?;
    let x1 = integrate_impulsive(&ctx, &u, &a, 1e-3).map_err(err)?.final_state()[0];
    let e_const = (x1 - 3.0).abs();

    let mut e_lin: f64 = 0.0;
    for (x0, u0) in [(1.0, 0.0), (0.8, 0.3), (-1.5, -1.0)] {
        let spec = lin_with_u0(x0, u0);
        let ctx = TransformContext::new(&spec);
        let ln2 = std::f64::consts::LN_2;
        let u =
            ControlSignal::piecewise_constant(vec![0.0, 0.5, 1.0], vec![u0], vec![vec![u0], vec![ln2]]).map_err(err)?;
        let a = OrdinarySignal::constant(1.0, vec![0.0]);
        let x = integrate_impulsive(&ctx, &u, &a, 1e-3).map_err(err)?.final_state()[0];
        e_lin = e_lin.max((x - 2.0 * x0 * (-u0).exp()).abs());
    }
    Ok((
        e_const <= 1e-8 && e_lin <= 1e-6,
        format!("s_const |x(1) - 3| = {e_const:.3e} (<= 1e-8), s_lin max error {e_lin:.3e} (<= 1e-6)"),
    ))
}

/// Criterion 6: L1 gaps halve when k doubles.
fn convergence() -> Outcome {
    let mut ratios = Vec::new();
    for name in ["s_const", "s_lin"] {
        let spec = system(name);
        let ctx = TransformContext::new(&spec);
        let (u, a) = load_signals(&spec, &data("step.json"), &data("a_one.json")).map_err(err)?;
        let rows = approximation_check(&ctx, &u, &a, &[10, 20, 40, 80], 1e-3).map_err(err)?;
        ratios.extend(rows.iter().filter_map(|r| r.ratio));
    }
    let ok = ratios.len() == 6 && ratios.iter().all(|r| (0.4..=0.6).contains(r));
    let shown: Vec<String> = ratios.iter().map(|r| format!("{r:.4}")).collect();
    Ok((ok, format!("ratios [{}] (in [0.4, 0.6])", shown.join(", "))))
}

/// Criterion 7: the empirical robustness constant is finite and grid-stable.
fn robustness() -> Outcome {
    let spec = system("s_lin");
    let a = read_ordinary(&data("a_one.json"), &spec).map_err(err)?;
    let pairs = random_pairs(&spec, 50, 6, 0.5, 7);
    let coarse = robustness_gap(&spec, &pairs, &a, 1e-3, 1e-9).map_err(err)?;
    let fine = robustness_gap(&spec, &pairs, &a, 5e-4, 1e-9).map_err(err)?;
    let change = (fine.max_ratio - coarse.max_ratio).abs() / coarse.max_ratio;
    let consistent = coarse.rows.iter().chain(&fine.rows).all(|r| !r.inconsistent);
    let ok = coarse.max_ratio.is_finite() && fine.max_ratio.is_finite() && consistent && change <= 0.2;
    Ok((
        ok,
        format!(
            "max ratio {:.6} -> {:.6}, change {:.3e} (<= 20%)",
            coarse.max_ratio, fine.max_ratio, change
        ),
    ))
}

/// Original adjoint integrated directly for a continuous piecewise-linear control:
/// p' = -p (DF + sum DG_i u_i'), p(T) = grad gamma. Jacobians by central differences.
fn direct_adjoint(spec: &SystemSpec, u: &ControlSignal, a: &[f64], h: f64) -> Vec<(f64, Vec<f64>)> {
    let (n, m) = (spec.n(), spec.m());
    let d = n + m;
    let rhs = |y: &[f64], t: f64| -> Vec<f64> {
        let j = u.piece_index(t);
        let slope = u.piece_slope(j);
        let (x, z) = y.split_at(n);
        let mut v = spec.eval_aug_f(x, z, a).unwrap();
        for (i, s) in slope.iter().enumerate() {
            let g = spec.eval_aug_g(i + 1, x, z).unwrap();
            for k in 0..d {
                v[k] += g[k] * s;
            }
        }
        v
    };
    let steps = (spec.horizon() / h).round() as usize;
    let half = h / 2.0;
    // forward states at every half step
    let mut ys = vec![[spec.x0(), spec.u0()].concat()];
    for k in 0..2 * steps {
        let t = k as f64 * half;
        let y = ys.last().unwrap().clone();
        let add = |b: &[f64], c: f64, s: &[f64]| -> Vec<f64> { b.iter().zip(s).map(|(p, q)| p + c * q).collect() };
        let tm = t + half / 2.0;
        let k1 = rhs(&y, tm);
        let k2 = rhs(&add(&y, half / 2.0, &k1), tm);
        let k3 = rhs(&add(&y, half / 2.0, &k2), tm);
        let k4 = rhs(&add(&y, half, &k3), tm);
        ys.push(
            (0..d)
                .map(|i| y[i] + half / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                .collect(),
        );
    }
    let costate_rhs = |p: &[f64], y: &[f64], t: f64| -> Vec<f64> {
        (0..d)
            .map(|l| {
                let e = 1e-6 * y[l].abs().max(1.0);
                let (mut yp, mut ym) = (y.to_vec(), y.to_vec());
                yp[l] += e;
                ym[l] -= e;
                let (fp, fm) = (rhs(&yp, t), rhs(&ym, t));
                -(0..d).map(|k| p[k] * (fp[k] - fm[k]) / (2.0 * e)).sum::<f64>()
            })
            .collect()
    };
    let y_end = ys.last().unwrap();
    let mut p = spec.grad_cost(&y_end[..n], &y_end[n..]).unwrap();
    let mut out = vec![(spec.horizon(), p.clone())];
    for k in (0..steps).rev() {
        let (t0, t1) = (k as f64 * h, (k + 1) as f64 * h);
        let tm = 0.5 * (t0 + t1);
        let (y0, ym, y1) = (&ys[2 * k], &ys[2 * k + 1], &ys[2 * k + 2]);
        let add = |b: &[f64], c: f64, s: &[f64]| -> Vec<f64> { b.iter().zip(s).map(|(p, q)| p + c * q).collect() };
        let k1 = costate_rhs(&p, y1, tm);
        let k2 = costate_rhs(&add(&p, -h / 2.0, &k1), ym, tm);
        let k3 = costate_rhs(&add(&p, -h / 2.0, &k2), ym, tm);
        let k4 = costate_rhs(&add(&p, -h, &k3), y0, tm);
        p = (0..d)
            .map(|i| p[i] - h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();
        out.push((t0, p.clone()));
    }
    out.reverse();
    out
}

/// Criterion 8: terminal costate and agreement with the directly integrated original adjoint.
fn adjoint_pull_back() -> Outcome {
    let spec = system("s_lin");
    let ctx = TransformContext::new(&spec);
    let mut terminal: f64 = 0.0;
    for control in ["step_ln2.json", "ramp.json"] {
        let (u, a) = load_signals(&spec, &data(control), &data("a_one.json")).map_err(err)?;
        let traj = integrate_impulsive(&ctx, &u, &a, 1e-3).map_err(err)?;
        let arc = solve_transformed_adjoint(&ctx, &traj).map_err(err)?;
        let p = pull_back_adjoint(&ctx, &arc, &traj).map_err(err)?;
        let end = traj.nodes().last().unwrap();
        let grad = spec.grad_cost(end.x(), end.u()).map_err(err)?;
        terminal = terminal.max(sup(&p.nodes().last().unwrap().p_left, &grad));
    }

    let (u, a) = load_signals(&spec, &data("ramp.json"), &data("a_one.json")).map_err(err)?;
    let traj = integrate_impulsive(&ctx, &u, &a, 1e-3).map_err(err)?;
    let arc = solve_transformed_adjoint(&ctx, &traj).map_err(err)?;
    let p = pull_back_adjoint(&ctx, &arc, &traj).map_err(err)?;
    let oracle = direct_adjoint(&spec, &u, &[1.0], 1e-3);
    if oracle.len() != p.nodes().len() {
        return Ok((false, format!("grid sizes {} vs {}", oracle.len(), p.nodes().len())));
    }
    let mut gap: f64 = 0.0;
    for ((t, q), node) in oracle.iter().zip(p.nodes()) {
        if (t - node.t).abs() > 1e-9 {
            return Ok((false, format!("time mismatch {t} vs {}", node.t)));
        }
        gap = gap.max(sup(q, &node.p_left)).max(sup(q, &node.p_right));
    }
    // S_lin with gamma = x1: p1(t) = exp(u(T) - u(t)), p2 = 0.
    let u_end = u.value_at(1.0, Side::Pointwise).map_err(err)?[0];
    let mut closed: f64 = 0.0;
    for node in p.nodes() {
        let ut = u.value_at(node.t, Side::Pointwise).map_err(err)?[0];
        closed = closed.max(sup(&node.p_left, &[(u_end - ut).exp(), 0.0]));
    }
    Ok((
        terminal <= 1e-7 && gap <= 1e-5 && closed <= 1e-5,
        format!(
            "terminal {terminal:.3e} (<= 1e-7), direct adjoint gap {gap:.3e} (<= 1e-5), closed form gap {closed:.3e}"
        ),
    ))
}

/// Criterion 9: lifted impulse fields commute.
fn lifted() -> Outcome {
    let spec = system("s_comm2");
    let report = audit_lifted_commutativity(&spec, &lifted_samples(&spec, 50, 2.0, 9), 1e-8).map_err(err)?;
    Ok((
        report.pass && report.max_norm <= 1e-8,
        format!("max lifted bracket norm {:.3e} (<= 1e-8)", report.max_norm),
    ))
}

/// Criterion 10: bracket identities between original and transformed coordinates.
/// For any pi with p = pi dphi: p.[g_i, f] = pi1 dF/d eta_i and
/// p.[g_j, [g_k, f]] = pi1 d2F/d eta_j d eta_k, the latter symmetric since [g_j, g_k] = 0.
fn bracket_identities() -> Outcome {
    let (mut first, mut second, mut asym): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for name in ["s_lin", "s_comm2"] {
        let spec = system(name);
        let ctx = TransformContext::new(&spec);
        let (n, m) = (spec.n(), spec.m());
        let inner: Vec<_> = spec.impulses().iter().map(|g| spec.bracket(g, spec.drift())).collect();
        let pts = state_control_points(spec.x0(), 1.0, spec.u_box(), 20, Some(10));
        for (s, (x, u)) in pts.iter().enumerate() {
            let a = vec![0.5 - 0.05 * s as f64];
            let pi: Vec<f64> = (0..n + m).map(|k| 1.0 - 0.3 * k as f64 + 0.1 * s as f64).collect();
            let dphi = ctx.dphi(x, u).map_err(err)?;
            let p: Vec<f64> = (0..n + m)
                .map(|c| (0..n + m).map(|r| pi[r] * dphi[(r, c)]).sum())
                .collect();
            let (xi, eta) = ctx.phi(x, u).map_err(err)?;
            let h_of = |shift: &[(usize, f64)]| -> Result<f64, String> {
                let mut e = eta.clone();
                for (i, d) in shift {
                    e[*i] += d;
                }
                Ok(dot(&pi[..n], &ctx.transformed_f(&xi, &e, &a).map_err(err)?))
            };
            let eps = 1e-4;
            for i in 0..m {
                let sym = dot(&p, &spec.eval_field(&inner[i], x, u, Some(&a)).map_err(err)?);
                let e1 = 1e-5;
                let fd = (h_of(&[(i, e1)])? - h_of(&[(i, -e1)])?) / (2.0 * e1);
                first = first.max((sym - fd).abs());
                for k in 0..m {
                    let q_ik = dot(
                        &p,
                        &spec
                            .eval_field(&spec.bracket(&spec.impulses()[i], &inner[k]), x, u, Some(&a))
                            .map_err(err)?,
                    );
                    let q_ki = dot(
                        &p,
                        &spec
                            .eval_field(&spec.bracket(&spec.impulses()[k], &inner[i]), x, u, Some(&a))
                            .map_err(err)?,
                    );
                    asym = asym.max((q_ik - q_ki).abs());
                    let hess = if i == k {
                        (h_of(&[(i, eps)])? - 2.0 * h_of(&[])? + h_of(&[(i, -eps)])?) / (eps * eps)
                    } else {
                        (h_of(&[(i, eps), (k, eps)])? - h_of(&[(i, eps), (k, -eps)])? - h_of(&[(i, -eps), (k, eps)])?
                            + h_of(&[(i, -eps), (k, -eps)])?)
                            / (4.0 * eps * eps)
                    };
                    second = second.max((q_ik - hess).abs());
                }
            }
        }
    }
    Ok((
        first <= 1e-6 && second <= 1e-5 && asym <= 1e-7,
        format!(
            "first order {first:.3e} (<= 1e-6), second order {second:.3e} (<= 1e-5), asymmetry {asym:.3e} (<= 1e-7)"
        ),
    ))
}

/// Independent S_const simulator: jumps move x by the control increment, a drives x linearly.
fn s_const_cost(levels: &[f64], times: &[f64], a: f64, horizon: f64) -> f64 {
    let mut x = 0.0;
    let mut u = 0.0;
    for (j, &v) in levels.iter().enumerate() {
        x += v - u;
        u = v;
        let end = times.get(j + 1).copied().unwrap_or(horizon);
        x += a * (end - times[j]);
    }
    x
}

/// Criterion 11: the grid-search optimum certifies; a* = +1 fails H-MIN-A with margin -2.
fn certification() -> Outcome {
    let spec = system("s_const");
    let ctx = TransformContext::new(&spec);
    let times = [0.0, 0.2, 0.4, 0.6, 0.8];
    let grid: Vec<f64> = (0..9).map(|k| -2.0 + 0.5 * k as f64).collect();
    let mut best = (f64::INFINITY, vec![], 0.0);
    for a in [-1.0, 0.0, 1.0] {
        for code in 0..9usize.pow(5) {
            let levels: Vec<f64> = (0..5).map(|j| grid[(code / 9usize.pow(j as u32)) % 9]).collect();
            let cost = s_const_cost(&levels, &times, a, 1.0);
            if cost < best.0 {
                best = (cost, levels, a);
            }
        }
    }
    let (cost, levels, a_best) = best;
    let mut bps = times.to_vec();
    bps.push(1.0);
    let u_star =
        ControlSignal::piecewise_constant(bps, vec![0.0], levels.iter().map(|v| vec![*v]).collect()).map_err(err)?;
    let options = CertifyOptions {
        tol: 1e-6,
        ..CertifyOptions::default()
    };
    let good = certify(&ctx, &u_star, &OrdinarySignal::constant(1.0, vec![a_best]), &options).map_err(err)?;
    let bad = certify(&ctx, &u_star, &OrdinarySignal::constant(1.0, vec![1.0]), &options).map_err(err)?;
    let ha = bad.condition("H-MIN-A").ok_or("H-MIN-A missing")?;
    let failed: Vec<&str> = good
        .conditions
        .iter()
        .filter(|c| !c.pass)
        .map(|c| c.condition)
        .collect();
    let ok = good.pass && !ha.pass && (ha.margin + 2.0).abs() <= 1e-6;
    Ok((
        ok,
        format!(
            "optimum cost {cost} (u = {levels:?}, a = {a_best}) certified = {} {failed:?}, a = +1 H-MIN-A margin {:.9}",
            good.pass, ha.margin
        ),
    ))
}

fn run_cli(args: &[&str], out: &std::path::Path) -> (i32, Vec<u8>) {
    let mut argv: Vec<String> = vec!["impulse".into()];
    argv.extend(args.iter().map(|s| s.to_string()));
    argv.extend(["--out".to_string(), out.display().to_string()]);
    let code = impulse_core::cli::run(argv);
    (code, std::fs::read(out).unwrap_or_default())
}

/// Criterion 12: reproducibility under a fixed seed, and the wall-clock budget.
fn reproducibility(started: Instant) -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = |f: &str| data(f).display().to_string();
    let runs: Vec<Vec<String>> = vec![
        vec![
            "certify",
            "--system",
            &d("s_const.json"),
            "--candidate-u",
            &d("optimum_u.json"),
            "--candidate-a",
            &d("a_minus_one.json"),
            "--seed",
            "5",
        ]
        .into_iter()
        .map(String::from)
        .collect(),
        vec![
            "robustness",
            "--system",
            &d("s_lin.json"),
            "--ordinary",
            &d("a_one.json"),
            "--seed",
            "5",
            "--samples",
            "20",
        ]
        .into_iter()
        .map(String::from)
        .collect(),
        vec![
            "flowbox",
            "--system",
            &d("s_comm2.json"),
            "--seed",
            "5",
            "--format",
            "json",
        ]
        .into_iter()
        .map(String::from)
        .collect(),
        vec![
            "simulate",
            "--system",
            &d("s_comm2.json"),
            "--control",
            &d("comm2_control.json"),
            "--ordinary",
            &d("a_one.json"),
        ]
        .into_iter()
        .map(String::from)
        .collect(),
    ];
    for (k, args) in runs.iter().enumerate() {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let first = run_cli(&args, &dir.path().join(format!("{k}a")));
        let second = run_cli(&args, &dir.path().join(format!("{k}b")));
        if first.0 != 0 || first.1.is_empty() || first != second {
            return Ok((
                false,
                format!("run `{}` not reproducible or failed (exit {})", args[0], first.0),
            ));
        }
    }
    let secs = started.elapsed().as_secs_f64();
    Ok((
        secs < 60.0,
        format!(
            "{} CLI runs byte-identical, acceptance wall clock {secs:.1} s (< 60 s)",
            runs.len()
        ),
    ))
}

fn main() {
    let started = Instant::now();
    let criteria: Vec<(&str, Criterion)> = vec![
        ("flow-box residual", Box::new(flow_box)),
        ("diffeomorphism round trip", Box::new(round_trip)),
        ("commutativity audit", Box::new(commutativity)),
        ("smooth equivalence", Box::new(smooth_equivalence)),
        ("impulsive closed forms", Box::new(closed_forms)),
        ("generalized-solution convergence", Box::new(convergence)),
        ("robustness constant", Box::new(robustness)),
        ("adjoint pull-back", Box::new(adjoint_pull_back)),
        ("lifted commutativity", Box::new(lifted)),
        ("bracket and derivative identities", Box::new(bracket_identities)),
        ("certification soundness", Box::new(certification)),
        (
            "wall clock and reproducibility",
            Box::new(move || reproducibility(started)),
        ),
    ];
    let mut failures = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let (pass, detail) = match outcome {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "criterion {:>2} {}: {name}: {detail} [{:.2} s]",
            k + 1,
            if pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
