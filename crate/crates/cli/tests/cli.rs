use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn layerwalk(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_layerwalk"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("THREADS", t),
        None => cmd.env_remove("THREADS"),
    };
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let out = dir.join("out");
    let path = dir.join("run.cfg");
    fs::write(&path, format!("{body}\noutput_dir = {}\n", out.display())).unwrap();
    path.display().to_string()
}

fn outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir.join("out"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn version_subcommand() {
    let out = layerwalk(&["version"], None);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), format!("layerwalk {}", env!("CARGO_PKG_VERSION")));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "experiment = variance\nscheme = alternating\nlaw = constant(1.0)\nhorizons = 8,16,32");
    let out = layerwalk(&["run", &cfg], None);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("p in (0,1)") && err.contains("line 3"), "{err}");

    let out = layerwalk(&["run", dir.path().join("missing.cfg").to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));

    let cfg = write_config(dir.path(), "experiment = variance\nscheme = alternating\nlaw = constant(0.5)\nhorizons = 8,16,32");
    let out = layerwalk(&["run", &cfg], Some("zero"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "experiment = limit\nscheme = alternating\nlaw = constant(0.5)\nhorizons = 64\nreplicas = 10",
    );
    let out = layerwalk(&["run", &cfg], None);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stderr).unwrap().contains("limit degenerate"));
    let report = fs::read_to_string(dir.path().join("out/report.json")).unwrap();
    assert!(report.contains("\"error\""), "{report}");
}

#[test]
fn returns_table_has_one_row_per_horizon() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "experiment = returns\nscheme = alternating\nlaw = two_point(1/3,2/3,0.5)\nhorizons = 1e3,1e4,1e5\nreplicas = 20\nseed = 5",
    );
    let out = layerwalk(&["run", &cfg], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(dir.path().join("out/returns.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "horizon,mean,se");
    assert_eq!(lines.len(), 4);
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let configs = [
        "experiment = simulate\nscheme = iid_rademacher\nlaw = beta(2,3)\nhorizons = 100,500\nreplicas = 40",
        "experiment = variance\nscheme = alternating\nlaw = two_point(1/3,2/3,0.5)\nhorizons = 16,32,64\nreplicas = 300",
        "experiment = exponent\nscheme = iid_rademacher\nlaw = stable_tail(1.5,1)\nhorizons = 16,32,64\nreplicas = 300",
        "experiment = exponent\nstatistic = sd\nscheme = iid_rademacher\nlaw = two_point(1/3,2/3,0.5)\nhorizons = 16,32,64\nreplicas = 300",
        "experiment = returns\nscheme = alternating\nlaw = constant(0.5)\nhorizons = 10,100,1000\nreplicas = 100",
        "experiment = limit\nscheme = iid_rademacher\nlaw = two_point(1/3,2/3,0.5)\nhorizons = 256\nreplicas = 200\nlimit_draws = 50\ndt = 1e-3\nbin_width = 0.05",
        "experiment = limit\nscheme = iid_rademacher\nlaw = stable_tail(1.5,1)\nhorizons = 256\nreplicas = 200\nlimit_draws = 50\ndt = 1e-3\ncalibration_n = 100",
    ];
    for body in configs {
        let body = format!("{body}\nseed = 11");
        let one = tempfile::tempdir().unwrap();
        let eight = tempfile::tempdir().unwrap();
        let again = tempfile::tempdir().unwrap();
        for (dir, threads) in [(&one, "1"), (&eight, "8"), (&again, "1")] {
            let cfg = write_config(dir.path(), &body);
            let out = layerwalk(&["run", &cfg], Some(threads));
            assert!(out.status.success(), "{body}: {}", String::from_utf8_lossy(&out.stderr));
        }
        let reference = outputs(one.path());
        assert!(!reference.is_empty());
        assert_eq!(reference, outputs(eight.path()), "{body}");
        assert_eq!(reference, outputs(again.path()), "{body}");
    }
}

#[test]
fn report_lists_every_file_and_echoes_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "experiment = simulate\nscheme = alternating\nlaw = constant(0.5)\nhorizons = 50\nreplicas = 5\nseed = 3",
    );
    let out = layerwalk(&["run", &cfg], None);
    assert!(out.status.success());
    let report = fs::read_to_string(dir.path().join("out/report.json")).unwrap();
    for name in ["endpoints.csv", "path_direct.csv", "path_embedded.csv", "report.json"] {
        assert!(report.contains(name), "{name}");
    }
    for key in ["\"config_echo\"", "\"wall_seconds\"", "\"version\"", "\"seed\": 3", "\"law\": \"constant(0.5)\""] {
        assert!(report.contains(key), "{key}\n{report}");
    }
    for (name, bytes) in outputs(dir.path()) {
        assert!(!bytes.is_empty(), "{name}");
    }
    let path = fs::read_to_string(dir.path().join("out/path_direct.csv")).unwrap();
    assert!(path.starts_with("step,x,y\n0,0,0\n"));
    let embedded = fs::read_to_string(dir.path().join("out/path_embedded.csv")).unwrap();
    assert!(embedded.starts_with("k,S,xi,X,T\n"));
}

#[test]
fn validate_passes_with_default_seed() {
    let out = layerwalk(&["validate"], None);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.lines().all(|l| l.starts_with("PASS")), "{text}");
    assert!(text.contains("sojourn_mean") && text.contains("oracle_direct"));
}
