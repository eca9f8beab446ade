use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dropfee::trace::read_csv;
use dropfee::{DynamicsError, PriceKind, PricingError};
use dropfee_cli::commands::{cmd_compare, cmd_simulate, format_table};
use dropfee_cli::config::Overrides;
use dropfee_cli::CliError;

fn dropfee(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dropfee"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn svg_doc(text: &str) -> roxmltree::Document<'_> {
    roxmltree::Document::parse(text).expect("well-formed svg")
}

fn count_class(doc: &roxmltree::Document, class: &str) -> usize {
    doc.descendants()
        .filter(|n| n.attribute("class") == Some(class))
        .count()
}

#[test]
fn default_run_with_seed_7_gets_close() {
    let dir = tempfile::tempdir().unwrap();
    let ov = Overrides {
        seed: Some(7),
        ..Overrides::default()
    };
    let run = cmd_simulate(None, &ov, dir.path(), false).unwrap();
    assert!(run.trace.final_cost() <= 6.6, "{}", run.trace.final_cost());
    let text = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let records = read_csv(text.as_bytes()).unwrap();
    assert_eq!(records, run.trace.records);
}

#[test]
fn zero_steps_keeps_only_initial_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let o = dropfee(
        &["simulate", "--steps", "0", "--k", "5", "--out", "z"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let records = read_csv(fs::File::open(dir.path().join("z/trace.csv")).unwrap()).unwrap();
    assert_eq!(records.len(), 1);
    assert_eq!(records[0].n, 0);
    assert_eq!(records[0].positions.len(), 5);
}

#[test]
fn repeated_invocation_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        [
            "simulate",
            "--k",
            "6",
            "--seed",
            "3",
            "--schedule",
            "iid",
            "--out",
            out,
        ]
    };
    assert!(dropfee(&args("a"), dir.path()).status.success());
    assert!(dropfee(&args("b"), dir.path()).status.success());
    let a = fs::read(dir.path().join("a/trace.csv")).unwrap();
    let b = fs::read(dir.path().join("b/trace.csv")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn manifest_reruns_reproduce_trace() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("tri.region"),
        "# triangle\n0 0\n2 0\n0.5 1.5\n",
    )
    .unwrap();
    fs::write(
        dir.path().join("exp.toml"),
        "region = \"tri.region\"\nk = 5\nmode = \"sync\"\nsteps = 12\nseed = 11\nprice = \"v\"\nneighbors = 2\n[solver]\ngrid_resolution = 16\n",
    )
    .unwrap();
    let first = dropfee(
        &["simulate", "--config", "exp.toml", "--out", "one"],
        dir.path(),
    );
    assert!(first.status.success(), "{}", stderr(&first));
    let again = dropfee(
        &["simulate", "--config", "one/manifest.toml", "--out", "two"],
        dir.path(),
    );
    assert!(again.status.success(), "{}", stderr(&again));
    let a = fs::read(dir.path().join("one/trace.csv")).unwrap();
    let b = fs::read(dir.path().join("two/trace.csv")).unwrap();
    assert_eq!(a, b);
    let m1 = fs::read_to_string(dir.path().join("one/manifest.toml")).unwrap();
    let m2 = fs::read_to_string(dir.path().join("two/manifest.toml")).unwrap();
    let config_part = |m: &str| m[m.find("[config]").unwrap()..].to_string();
    assert_eq!(config_part(&m1), config_part(&m2));
}

#[test]
fn malformed_config_names_key() {
    let dir = tempfile::tempdir().unwrap();
    for (text, key) in [
        ("k = 9\nstep_size = 0.1\n", "step_size"),
        ("k = -3\n", "k"),
        ("schedule = \"round-robin\"\n", "schedule"),
        ("[solver]\ngrid_resolution = 1\n", "grid_resolution"),
    ] {
        fs::write(dir.path().join("bad.toml"), text).unwrap();
        let o = dropfee(&["simulate", "--config", "bad.toml"], dir.path());
        assert_eq!(o.status.code(), Some(2), "{text}");
        assert!(stderr(&o).contains(key), "{text}: {}", stderr(&o));
    }
}

#[test]
fn degenerate_states_exit_with_three() {
    let err: CliError = DynamicsError::Degenerate {
        step: 4,
        source: PricingError::Coincident(0, 1),
    }
    .into();
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn unknown_objective_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = dropfee(&["optimum", "--objective", "sum-q"], dir.path());
    assert!(!o.status.success());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn optimum_command_values() {
    let dir = tempfile::tempdir().unwrap();
    for (k, want) in [(1, 2.0), (9, 6.0)] {
        let ks = k.to_string();
        let o = dropfee(&["optimum", "--k", &ks, "--out", "opt"], dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
        let out = stdout(&o);
        let cost: f64 = out
            .split_whitespace()
            .find_map(|w| w.strip_prefix("cost="))
            .unwrap()
            .parse()
            .unwrap();
        assert!((cost - want).abs() <= 0.02 * want, "k = {k}: {cost}");
        let positions = fs::read_to_string(dir.path().join("opt/optimum.txt")).unwrap();
        assert_eq!(positions.lines().count(), k);
    }
}

#[test]
fn render_grid_trace() {
    let dir = tempfile::tempdir().unwrap();
    let o = dropfee(
        &["simulate", "--init", "grid", "--out", "g", "--svg"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let r = dropfee(&["render", "g/trace.csv", "-o", "grid.svg"], dir.path());
    assert!(r.status.success(), "{}", stderr(&r));
    let text = fs::read_to_string(dir.path().join("grid.svg")).unwrap();
    let doc = svg_doc(&text);
    assert_eq!(count_class(&doc, "cell"), 9);
    let radii: Vec<f64> = doc
        .descendants()
        .filter(|n| n.attribute("class") == Some("inscribed"))
        .map(|n| n.attribute("r").unwrap().parse().unwrap())
        .collect();
    assert_eq!(radii.len(), 9);
    // 560 px across the unit square.
    for r in radii {
        assert!((r - 560.0 / 6.0).abs() < 1e-2, "{r}");
    }
    assert_eq!(
        fs::read_to_string(dir.path().join("g/trace.svg")).unwrap(),
        text
    );
}

#[test]
fn render_single_car() {
    let dir = tempfile::tempdir().unwrap();
    assert!(
        dropfee(&["simulate", "--k", "1", "--out", "one"], dir.path())
            .status
            .success()
    );
    let r = dropfee(&["render", "one/trace.csv", "-o", "one.svg"], dir.path());
    assert!(r.status.success(), "{}", stderr(&r));
    let text = fs::read_to_string(dir.path().join("one.svg")).unwrap();
    let doc = svg_doc(&text);
    assert_eq!(count_class(&doc, "cell"), 1);
    let circle = doc
        .descendants()
        .find(|n| n.attribute("class") == Some("inscribed"))
        .unwrap();
    let r: f64 = circle.attribute("r").unwrap().parse().unwrap();
    assert!((r - 280.0).abs() < 1e-2);
}

#[test]
fn render_33_cars() {
    let dir = tempfile::tempdir().unwrap();
    let o = dropfee(
        &["simulate", "--k", "33", "--steps", "99", "--out", "big"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let r = dropfee(&["render", "big/trace.csv", "-o", "big.svg"], dir.path());
    assert!(r.status.success(), "{}", stderr(&r));
    let text = fs::read_to_string(dir.path().join("big.svg")).unwrap();
    let doc = svg_doc(&text);
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    assert_eq!(count_class(&doc, "cell"), 33);
    assert_eq!(count_class(&doc, "inscribed"), 33);
}

#[test]
fn render_rejects_empty_trace() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("empty.csv"),
        "n,moved_car,car_id,x,y,social_cost\n",
    )
    .unwrap();
    let r = dropfee(&["render", "empty.csv", "-o", "x.svg"], dir.path());
    assert!(!r.status.success());
}

#[test]
fn compare_single_price_gives_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = dropfee(
        &["compare", "--k", "4", "--seed", "2", "--out", "cmp"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 2, "{out}");
    assert!(out.lines().next().unwrap().contains("ratio"));
    assert!(dir.path().join("cmp/compare.txt").is_file());
}

#[test]
fn compare_ustar_against_w() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("cmp.toml"),
        "prices = [\"ustar\", \"w:3\"]\nseed = 1\n",
    )
    .unwrap();
    let rows = cmd_compare(
        Some(&dir.path().join("cmp.toml")),
        &Overrides::default(),
        None,
    )
    .unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].ratio <= 1.1, "{}", format_table(&rows));
    assert!(rows[1].ratio > rows[0].ratio, "{}", format_table(&rows));
}

#[test]
fn compare_reports_v_and_ustar() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("cmp.toml"),
        "prices = [\"v\", \"ustar\"]\nneighbors = 3\nseeds = [0, 1]\n",
    )
    .unwrap();
    let rows = cmd_compare(
        Some(&dir.path().join("cmp.toml")),
        &Overrides::default(),
        None,
    )
    .unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0].price.kind, PriceKind::V);
    assert_eq!(rows[0].price.neighborhood, 3);
    assert!(rows
        .iter()
        .all(|r| r.ratio.is_finite() && r.reference == 6.0));
}
