use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use forklab_core::model::validate_profile;
use forklab_core::profile_csv::read_profile;

fn forklab(args: &[&str]) -> Output {
    forklab_env(args, None)
}

fn forklab_env(args: &[&str], out_env: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_forklab"));
    cmd.args(args).env_remove("FORKLAB_OUT");
    if let Some(dir) = out_env {
        cmd.env("FORKLAB_OUT", dir);
    }
    cmd.output().expect("spawn forklab")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_universal_against_tent_reports_full_fork() {
    let dir = tempfile::tempdir().unwrap();
    let o = forklab(&[
        "run",
        "--out",
        path(dir.path()),
        "--rule",
        "tent",
        "--strategy",
        "universal:direction=stilde",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let line = stdout(&o);
    assert!(line.trim_end().ends_with("fork_length=1781"), "{line}");
    assert!(line.starts_with("winner="));
    let log = fs::read_to_string(dir.path().join("transcript.log")).unwrap();
    assert!(log.contains("round,gamma,move,arg,lock,a_i,h_i"));
}

#[test]
fn run_weight_attack_wins() {
    let dir = tempfile::tempdir().unwrap();
    let o = forklab(&[
        "run",
        "--out",
        path(dir.path()),
        "--rule",
        "weight",
        "--strategy",
        "weight-attack",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "winner=1 fork_length=200");
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = path(dir.path());
    for args in [
        vec!["run", "--out", d, "--rule", "tent:delta"],
        vec!["run", "--out", d, "--rule", "longest"],
        vec!["run", "--out", d, "--strategy", "universal:direction=up"],
        vec!["run", "--out", d, "--phi", "0.5"],
        vec!["run", "--out", d, "--phi", "2,3"],
        vec!["run", "--out", d, "--rho", "x"],
        vec!["sweep", "--out", d, "--frobnicate"],
        vec!["fly"],
    ] {
        let o = forklab(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn run_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = forklab(&[
        "run",
        "--out",
        path(dir.path()),
        "--phi",
        "2",
        "--epsilon",
        "0.5",
        "--rho",
        "2",
        "--rule",
        "tent",
        "--strategy",
        "grid-search:max_fork=1",
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let o = forklab(&["replay", path(&dir.path().join("missing.log"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn tampered_transcript_fails_replay() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("t.log");
    let o = forklab(&[
        "run",
        "--phi",
        "2",
        "--epsilon",
        "0.5",
        "--rho",
        "2",
        "--strategy",
        "weight-attack",
        "--transcript",
        path(&log),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let ok = forklab(&["replay", path(&log)]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(
        stdout(&ok).starts_with("winner=1 fork_length=6"),
        "{}",
        stdout(&ok)
    );

    let text = fs::read_to_string(&log).unwrap();
    let row = text.lines().find(|l| l.starts_with("2,")).unwrap();
    let mut fields: Vec<String> = row.split(',').map(String::from).collect();
    fields[5] = "0.25".into();
    fs::write(&log, text.replace(row, &fields.join(","))).unwrap();
    let bad = forklab(&["replay", path(&log)]);
    assert_eq!(bad.status.code(), Some(1), "{}", stdout(&bad));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.json");
    let out = dir.path().join("from-config");
    fs::write(
        &cfg,
        format!(
            r#"{{"phi": [3.0], "epsilon": [0.1], "rho": [2], "rules": ["weight"], "strategies": ["weight-attack"], "out_dir": {:?}}}"#,
            path(&out)
        ),
    )
    .unwrap();
    let o = forklab(&["run", "--config", path(&cfg), "--phi", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let log = fs::read_to_string(out.join("transcript.log")).unwrap();
    assert!(log.contains("# params phi=2 epsilon=0.1 rho=2"), "{log}");

    fs::write(&cfg, r#"{"phi": []}"#).unwrap();
    let o = forklab(&["sweep", "--config", path(&cfg), "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(2), "empty grid: {}", stderr(&o));

    fs::write(&cfg, r#"{"phi": [2.0], "seed": 4}"#).unwrap();
    let o = forklab(&["run", "--config", path(&cfg), "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn out_env_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let env_dir = dir.path().join("env");
    let flag_dir = dir.path().join("flag");
    let o = forklab_env(
        &["profiles", "--phi", "2", "--epsilon", "0.5", "--rho", "2"],
        Some(&env_dir),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(env_dir.join("profiles.svg").exists());
    let o = forklab_env(
        &[
            "profiles",
            "--phi",
            "2",
            "--epsilon",
            "0.5",
            "--rho",
            "2",
            "--out",
            path(&flag_dir),
        ],
        Some(&env_dir),
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(flag_dir.join("profiles.svg").exists());
}

fn points(node: roxmltree::Node) -> Vec<(f64, f64)> {
    node.attribute("points")
        .unwrap()
        .split_whitespace()
        .map(|p| {
            let (x, y) = p.split_once(',').unwrap();
            (x.parse().unwrap(), y.parse().unwrap())
        })
        .collect()
}

#[test]
fn profiles_reference_point() {
    let dir = tempfile::tempdir().unwrap();
    let o = forklab(&["profiles", "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "k=70 l=1641 fork_length=1781");

    let s_text = fs::read_to_string(dir.path().join("profile_s.csv")).unwrap();
    assert!(s_text.starts_with("index,space\n"));
    let s = read_profile(s_text.as_bytes()).unwrap();
    let s_tilde =
        read_profile(fs::File::open(dir.path().join("profile_s_tilde.csv")).unwrap()).unwrap();
    let (peak_at, peak) = s
        .iter()
        .enumerate()
        .fold((0, 0.0), |m, (i, &v)| if v > m.1 { (i, v) } else { m });
    assert_eq!(peak_at, 70);
    assert!((peak - 2.00676).abs() < 5e-6, "{peak}");
    assert!(s_tilde.iter().take(1642).all(|&v| v == 1.0));
    assert!(validate_profile(&s, 0.01).unwrap().is_valid());
    assert!(validate_profile(&s_tilde, 0.01).unwrap().is_valid());

    let svg = fs::read_to_string(dir.path().join("profiles.svg")).unwrap();
    let doc = roxmltree::Document::parse(&svg).expect("valid XML");
    let lines: Vec<_> = doc
        .descendants()
        .filter(|n| n.has_tag_name("polyline"))
        .collect();
    assert_eq!(lines.len(), 4);
    let dashed: Vec<bool> = lines
        .iter()
        .map(|n| n.attribute("stroke-dasharray").is_some())
        .collect();
    assert_eq!(dashed, [false, false, true, true]);
    assert!(doc
        .descendants()
        .any(|n| n.has_tag_name("text") && n.text() == Some("500")));

    // Pixel rows measured from the x axis: adversarial curves sit at 1/phi height.
    let base: f64 = doc
        .descendants()
        .find(|n| n.has_tag_name("line"))
        .and_then(|n| n.attribute("y1"))
        .unwrap()
        .parse()
        .unwrap();
    for (solid, dash) in [(0, 2), (1, 3)] {
        for ((xs, ys), (xd, yd)) in points(lines[solid]).into_iter().zip(points(lines[dash])) {
            assert_eq!(xs, xd);
            assert!(
                ((base - ys) / 2.0 - (base - yd)).abs() <= 0.011,
                "{ys} {yd}"
            );
        }
    }
}

#[test]
fn bounds_table() {
    let o = forklab(&["bounds"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = stdout(&o);
    let mut rows = table.lines();
    assert_eq!(
        rows.next(),
        Some("phi,epsilon,rho,k,ell_weight,ell_genesis,ell_universal,ell_tent_lower")
    );
    assert_eq!(rows.count(), 36);
    assert!(table.contains("\n2,0.01,4,70,200,8,1781,124\n"));
    assert!(table.contains("\n2,0.5,2,2,4,4,44,2\n"));
    assert!(stderr(&o).contains("ell_tent_lower is negative at phi=1.1"));

    let o = forklab(&[
        "bounds",
        "--phi",
        "2",
        "--epsilon",
        "0.01",
        "--rho",
        "4",
        "--genesis-k",
        "3",
    ]);
    assert_eq!(
        stdout(&o).lines().nth(1),
        Some("2,0.01,4,70,200,24,1781,124")
    );
}

fn universal_sweep(out: &Path) -> Vec<csv::StringRecord> {
    let o = forklab(&[
        "sweep",
        "--out",
        path(out),
        "--phi",
        "1.5,2,3",
        "--epsilon",
        "0.5,0.1,0.01",
        "--rho",
        "2,4,8",
        "--rule",
        "weight",
        "--rule",
        "genesis:k=2",
        "--rule",
        "tent",
        "--strategy",
        "universal:direction=s",
        "--strategy",
        "universal:direction=stilde",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut r = csv::Reader::from_path(out.join("sweep.csv")).unwrap();
    assert_eq!(
        r.headers().unwrap(),
        vec![
            "phi",
            "epsilon",
            "rho",
            "rule",
            "strategy",
            "winner",
            "fork_length",
            "bound_ell",
            "match"
        ]
    );
    r.records().map(Result::unwrap).collect()
}

#[test]
fn sweep_universal_grid_rows_and_match() {
    let dir = tempfile::tempdir().unwrap();
    let rows = universal_sweep(dir.path());
    assert_eq!(rows.len(), 162);
    for row in &rows {
        assert_eq!(&row[6], &row[7], "{row:?}");
        assert_eq!(&row[8], "true");
    }
    let fields = |i: usize| rows[i].iter().collect::<Vec<_>>();
    assert_eq!(
        fields(0)[0..5],
        ["1.5", "0.5", "2", "weight", "universal:direction=s"]
    );
    assert_eq!(
        fields(5)[3..5],
        ["tent:delta=1.5", "universal:direction=stilde"]
    );
}

#[test]
fn sweep_universal_grid_defeats_each_rule() {
    let dir = tempfile::tempdir().unwrap();
    let rows = universal_sweep(dir.path());
    let undefeated: Vec<String> = rows
        .chunks(2)
        .filter(|pair| pair.iter().all(|r| &r[5] == "0"))
        .map(|pair| {
            format!(
                "{},{},{} {}",
                &pair[0][0], &pair[0][1], &pair[0][2], &pair[0][3]
            )
        })
        .collect();
    assert!(
        undefeated.is_empty(),
        "{} undefeated: {:?}",
        undefeated.len(),
        &undefeated[..3.min(undefeated.len())]
    );
}

#[test]
fn sweep_records_failures_in_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = forklab(&[
        "sweep",
        "--out",
        path(dir.path()),
        "--phi",
        "2",
        "--epsilon",
        "0.5",
        "--rho",
        "2",
        "--rule",
        "weight",
        "--rule",
        "tent",
        "--strategy",
        "grid-search:max_fork=1",
        "--strategy",
        "weight-attack:horizon=min",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(
        lines[1],
        "2,0.5,2,weight,grid-search:max_fork=1,error:0,,9,false"
    );
    assert_eq!(
        lines[2],
        "2,0.5,2,weight,weight-attack:horizon=min,1,6,9,true"
    );
    assert!(lines[3].starts_with("2,0.5,2,tent:delta=1.5,grid-search:max_fork=1,error:0,"));
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        for args in [
            vec!["profiles", "--phi", "1.5", "--epsilon", "0.1", "--rho", "4"],
            vec![
                "run",
                "--phi",
                "1.5",
                "--epsilon",
                "0.1",
                "--rho",
                "4",
                "--rule",
                "genesis:k=2",
                "--strategy",
                "universal:direction=s",
            ],
            vec![
                "sweep",
                "--phi",
                "1.1,3",
                "--epsilon",
                "0.1",
                "--rho",
                "2",
                "--strategy",
                "weight-attack",
                "--strategy",
                "genesis-attack:k=2",
            ],
        ] {
            let mut args = args.clone();
            args.extend(["--out", path(dir)]);
            assert_eq!(forklab(&args).status.code(), Some(0));
        }
    }
    for name in [
        "profile_s.csv",
        "profile_s_tilde.csv",
        "profiles.svg",
        "transcript.log",
        "sweep.csv",
    ] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}
