//! Property tests: expression calculus, transforms, signals and the CLI exit-code contract.

use std::path::PathBuf;

use impulse_core::expr::{parse, Names};
use impulse_core::signals::{l1_distance, ControlSignal};
use impulse_core::{SystemSpec, TransformContext};
use proptest::prelude::*;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn expr_source() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x1".to_string()),
        Just("x2".to_string()),
        Just("u1".to_string()),
        Just("a1".to_string()),
        (-3i32..=3).prop_map(|k| format!("{}", k as f64 * 0.5)),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{a} * {b}")),
            inner.clone().prop_map(|a| format!("-{a}")),
            inner.clone().prop_map(|a| format!("({a})^2")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("exp(0.3 * {a})")),
            inner.prop_map(|a| format!("tanh({a})")),
        ]
    })
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.5f64..1.5, 4)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, ..ProptestConfig::default() })]

    #[test]
    fn symbolic_derivative_matches_central_difference(src in expr_source(), at in point()) {
        let names = Names::standard(2, 1, 1);
        let e = parse(&src, &names).unwrap();
        for v in 0..4 {
            let d = e.diff(impulse_core::expr::VarId(v)).eval(&at).unwrap();
            let h = 1e-6;
            let (mut p, mut m) = (at.clone(), at.clone());
            p[v] += h;
            m[v] -= h;
            let fd = (e.eval(&p).unwrap() - e.eval(&m).unwrap()) / (2.0 * h);
            prop_assume!(d.is_finite() && fd.is_finite() && d.abs() < 1e6);
            prop_assert!((d - fd).abs() <= 1e-5 * d.abs().max(1.0), "{src}: d/d{v} {d} vs {fd}");
        }
    }

    #[test]
    fn display_reparses_to_the_same_function(src in expr_source(), at in point()) {
        let names = Names::standard(2, 1, 1);
        let e = parse(&src, &names).unwrap();
        let shown = e.display(&names).to_string();
        let again = parse(&shown, &names).unwrap();
        let (a, b) = (e.eval(&at).unwrap(), again.eval(&at).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{src} -> {shown}");
        let derivative = e.diff(impulse_core::expr::VarId(0));
        let reparsed = parse(&derivative.display(&names).to_string(), &names).unwrap();
        let (c, d) = (derivative.eval(&at).unwrap(), reparsed.eval(&at).unwrap());
        prop_assert!((c - d).abs() <= 1e-12 * c.abs().max(1.0));
    }

    #[test]
    fn phi_round_trip_on_linear_fields(x in prop::collection::vec(-2.0f64..2.0, 2), z in prop::collection::vec(-2.0f64..2.0, 2)) {
        let spec = impulse_core::io::read_system(&data("s_comm2.json")).unwrap();
        let ctx = TransformContext::new(&spec);
        let (xi, eta) = ctx.phi(&x, &z).unwrap();
        // closed form for g_i = x_i e_i: xi_i = x_i exp(-z_i)
        for i in 0..2 {
            prop_assert!((xi[i] - x[i] * (-z[i]).exp()).abs() <= 1e-8 * xi[i].abs().max(1.0));
        }
        let (xb, zb) = ctx.phi_inverse(&xi, &eta).unwrap();
        for i in 0..2 {
            prop_assert!((xb[i] - x[i]).abs() <= 1e-8 && (zb[i] - z[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn mollified_l1_gap_is_jump_mass_over_2k(
        jumps in prop::collection::vec(-1.0f64..1.0, 1..4),
        k in 10usize..60,
    ) {
        // jumps at evenly spaced interior times, far enough apart for unclipped ramps
        let count = jumps.len();
        let mut bps = vec![0.0];
        bps.extend((1..=count).map(|j| j as f64 / (count + 1) as f64));
        bps.push(1.0);
        let mut level = 0.0;
        let mut pieces = vec![vec![0.0]];
        for d in &jumps {
            level += d;
            pieces.push(vec![level]);
        }
        let u = ControlSignal::piecewise_constant(bps, vec![0.0], pieces).unwrap();
        let w = u.mollify(k);
        let mass: f64 = jumps.iter().map(|d| d.abs()).sum();
        prop_assert!((l1_distance(&u, &w) - mass / (2.0 * k as f64)).abs() <= 1e-12);
        prop_assert!(w.is_continuous());
        prop_assert!((w.total_variation() - u.total_variation()).abs() <= 1e-12);
    }
}

fn run(args: &[String]) -> i32 {
    let mut argv = vec!["impulse".to_string()];
    argv.extend_from_slice(args);
    impulse_core::cli::run(argv)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    /// Any byte-level corruption of a system file yields exit 0, 1 or 2, never a panic;
    /// a truncated document is always an input error.
    #[test]
    fn malformed_systems_never_panic(cut in 1usize..150, edit in 0usize..200, byte in prop::sample::select(vec![b'x', b'"', b'-', b'[', b'9', b' ', b'}'])) {
        let text = std::fs::read(data("s_lin.json")).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let truncated = dir.path().join("truncated.json");
        std::fs::write(&truncated, &text[..cut.min(text.len() - 2)]).unwrap();
        prop_assert_eq!(run(&["validate".into(), "--system".into(), truncated.display().to_string()]), 2);

        let mut edited = text.clone();
        let pos = edit % edited.len();
        edited[pos] = byte;
        let path = dir.path().join("edited.json");
        std::fs::write(&path, &edited).unwrap();
        let out = dir.path().join("report.json").display().to_string();
        let code = run(&["validate".into(), "--system".into(), path.display().to_string(), "--samples".into(), "5".into(), "--out".into(), out]);
        prop_assert!((0..=2).contains(&code));
        if SystemSpec::load(std::str::from_utf8(&edited).unwrap_or("")).is_err() {
            prop_assert_eq!(code, 2);
        }
    }

    #[test]
    fn malformed_signals_are_input_errors(which in 0usize..5) {
        let dir = tempfile::tempdir().unwrap();
        let bad = [
            r#"{"kind": "pwc", "breakpoints": [0, 0.6, 0.5, 1], "left": [[0],[0],[0],[0]], "right": [[0],[0],[0],[0]]}"#,
            r#"{"kind": "pwc", "breakpoints": [0, 1], "left": [[0],[5]], "right": [[5],[5]]}"#,
            r#"{"kind": "pwc", "breakpoints": [0, 1], "left": [[1],[1]], "right": [[1],[1]]}"#,
            r#"{"kind": "pwq", "breakpoints": [0, 1], "left": [[0],[0]], "right": [[0],[0]]}"#,
            r#"{"kind": "pwc", "breakpoints": [0, 1], "left": [[0]], "right": [[0],[0]]}"#,
        ];
        let path = dir.path().join("u.json");
        std::fs::write(&path, bad[which]).unwrap();
        let args: Vec<String> = ["simulate", "--system", &data("s_const.json").display().to_string(), "--control",
            &path.display().to_string(), "--ordinary", &data("a_one.json").display().to_string(),
            "--out", &dir.path().join("o.csv").display().to_string()]
            .iter().map(|s| s.to_string()).collect();
        prop_assert_eq!(run(&args), 2);
    }
}

#[test]
fn signal_errors_name_the_problem() {
    let spec = impulse_core::io::read_system(&data("s_const.json")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let write = |text: &str| {
        let p = dir.path().join("u.json");
        std::fs::write(&p, text).unwrap();
        p
    };
    let unsorted = write(
        r#"{"kind": "pwc", "breakpoints": [0, 0.6, 0.5, 1], "left": [[0],[0],[0],[0]], "right": [[0],[0],[0],[0]]}"#,
    );
    let e = impulse_core::io::read_control(&unsorted, &spec)
        .unwrap_err()
        .to_string();
    assert!(e.contains("breakpoints not increasing"), "{e}");
    let outside =
        write(r#"{"kind": "pwc", "breakpoints": [0, 0.5, 1], "left": [[0],[0],[3]], "right": [[0],[3],[3]]}"#);
    let e = impulse_core::io::read_control(&outside, &spec).unwrap_err().to_string();
    assert!(e.contains("u1 = 3 at t =") && e.contains("outside U"), "{e}");
    let step = impulse_core::io::read_control(&data("step.json"), &spec).unwrap();
    assert_eq!(
        step.value_at(0.5, impulse_core::signals::Side::Pointwise).unwrap(),
        vec![2.0]
    );
}
