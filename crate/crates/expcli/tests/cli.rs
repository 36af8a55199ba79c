use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn oscidisc(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_oscidisc"));
    cmd.args(args).env_remove("OSCIDISC_OUTPUT_DIR");
    if let Some(dir) = env_out {
        cmd.env("OSCIDISC_OUTPUT_DIR", dir);
    }
    cmd.output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const SWEEP: &str = r#"
experiment = "dimension_sweep"
name = "tiny"
seed = 3

[network]
p = 0.3
coupling = { kuramoto = 5.0, fhn = 0.2 }
fhn = { kind = "fhn", alpha1 = -0.1, alpha2 = 1.1, alpha3 = -1.0, c_gain = 0.1, b_decay = 0.1, stimulus = 0.2 }
n_kuramoto = 10
dt = 0.05
t_end = 40.0
transient = 20.0
record_every = 4

[sweep]
trials = 2
n_total = 10
axis1 = { param = "n_kuramoto", values = [0, 10] }
axis2 = { param = "coupling_kuramoto", values = [2.0, 5.0] }
"#;

#[test]
fn validate_accepts_shipped_configs() {
    for name in [
        "rayleigh_hybrid.toml",
        "vdp_hybrid.toml",
        "kuramoto_network.toml",
        "fhn_network.toml",
        "mixed_network.toml",
        "sweep_nk.toml",
        "sweep_threshold.toml",
    ] {
        let path = repo_config(name);
        let o = oscidisc(&["validate", path.to_str().unwrap()], None);
        assert!(o.status.success(), "{name}: {}", stderr(&o));
    }
}

#[test]
fn unknown_oscillator_kind_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "bad.toml",
        r#"
experiment = "canonical_hybrid"
[canonical]
system = { kind = "duffing", mu = 1.0 }
x0 = [1.0, 0.0]
dt = 0.01
t_end = 10.0
transient = 1.0
"#,
    );
    let o = oscidisc(&["run", cfg.to_str().unwrap()], Some(tmp.path()));
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("canonical.system"), "{err}");
}

#[test]
fn malformed_config_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "bad.toml", "experiment = \"dimension_sweep\"\nseed = \"x\"\n");
    let o = oscidisc(&["validate", cfg.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("seed"), "{}", stderr(&o));
}

#[test]
fn plot_on_empty_dir_lists_expected_files() {
    let tmp = tempfile::tempdir().unwrap();
    let o = oscidisc(&["plot", tmp.path().to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert!(err.contains("sweep.json") && err.contains("modes.csv"), "{err}");
}

#[test]
fn canonical_run_then_plot() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("vdp");
    let cfg = repo_config("vdp_hybrid.toml");
    let o = oscidisc(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["trajectory.csv", "trim_mask.csv", "hybrid_model.json", "hybrid_sim.csv", "report.json"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report["cycle_period_rel_err"].as_f64().unwrap() < 0.05);

    let o = oscidisc(&["plot", out.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut rdr = csv::Reader::from_path(out.join("phase_plane.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["x", "y", "label"]);
    let mut labels = std::collections::BTreeSet::new();
    for rec in rdr.records() {
        labels.insert(rec.unwrap()[2].to_string());
    }
    assert!(labels.contains("slow") && labels.contains("fast_1"), "{labels:?}");
    assert!(labels.iter().all(|l| l == "slow" || l.starts_with("fast_")), "{labels:?}");
}

#[test]
fn env_var_overrides_output_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "sweep.toml", SWEEP);
    let target = tmp.path().join("from_env");
    let o = oscidisc(&["sweep", cfg.to_str().unwrap()], Some(&target));
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(target.join("sweep.json").exists());
}

fn sweep_once(dir: &Path, cfg: &Path, jobs: &str) -> Vec<(String, Vec<u8>)> {
    let o = oscidisc(
        &["sweep", cfg.to_str().unwrap(), "--jobs", jobs, "--out", dir.to_str().unwrap()],
        None,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn sweep_reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "sweep.toml", SWEEP);
    let a = sweep_once(&tmp.path().join("a"), &cfg, "1");
    let b = sweep_once(&tmp.path().join("b"), &cfg, "2");
    let names: Vec<&str> = a.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["dims_audit.csv", "heatmap_90.csv", "heatmap_95.csv", "heatmap_99.csv"]);
    assert_eq!(a, b);

    let o = oscidisc(&["plot", tmp.path().join("a").to_str().unwrap()], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut rdr = csv::Reader::from_path(tmp.path().join("a/heatmap_99.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap().len(), 3);
    assert_eq!(rdr.records().count(), 2);
}

#[test]
fn forced_shared_seed_gives_zero_spread() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SWEEP.replace("trials = 2", "trials = 3\nforce_same_seed = true");
    let cfg = write(tmp.path(), "sweep.toml", &text);
    let out = tmp.path().join("out");
    let o = oscidisc(&["sweep", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let result: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("sweep.json")).unwrap()).unwrap();
    for cell in result["cells"].as_array().unwrap() {
        for s in cell["std"].as_array().unwrap() {
            assert_eq!(s.as_f64(), Some(0.0));
        }
    }
}

#[test]
fn aggregation_matches_audit_log() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "sweep.toml", SWEEP);
    let out = tmp.path().join("out");
    let o = oscidisc(&["sweep", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let result: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("sweep.json")).unwrap()).unwrap();
    let mut rdr = csv::Reader::from_path(out.join("dims_audit.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let cell_col = headers.iter().position(|h| h == "cell").unwrap();
    let dim_col = headers.iter().position(|h| h == "dim_99").unwrap();
    let mut sums = std::collections::BTreeMap::<usize, (f64, usize)>::new();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let cell: usize = rec[cell_col].parse().unwrap();
        if let Ok(d) = rec[dim_col].parse::<f64>() {
            let e = sums.entry(cell).or_default();
            e.0 += d;
            e.1 += 1;
        }
    }
    for (k, cell) in result["cells"].as_array().unwrap().iter().enumerate() {
        let (s, n) = sums[&k];
        let mean = cell["mean"][2].as_f64().unwrap();
        assert!((mean - s / n as f64).abs() < 1e-12, "cell {k}: {mean} vs {}", s / n as f64);
    }
}
