use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_acc-cutin"));
    c.env("RUST_LOG", "error");
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn manifest(out: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(out.with_extension("manifest.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn min_gap(path: &Path) -> f64 {
    let (h, rows) = read_csv(path);
    let t = h.iter().position(|x| x == "t").unwrap();
    let g = h.iter().position(|x| x == "gap").unwrap();
    rows.iter()
        // cut-in happens one second into the plotted window
        .filter(|r| r[t].parse::<f64>().unwrap() >= 1.0 - 1e-9)
        .map(|r| r[g].parse::<f64>().unwrap())
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn simulate_writes_trajectory_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("traj.csv");
    let o = run(dir.path(), &["simulate", "--theta", "0.3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("min gap"));
    let (h, rows) = read_csv(&out);
    assert_eq!(h.join(","), "t,p_l,v_l,a_l,p_c,v_c,a_c,p_f,v_f,a_f,ds_c,dv_c,gap");
    assert_eq!(rows.len(), 611);
    assert_eq!(rows[0][0], "0");
    let m = manifest(&out);
    assert_eq!(m["command"], "simulate");
    assert_eq!(m["config"]["theta"], 0.3);
    assert_eq!(m["config"]["ufb"], -5.0);
    assert_eq!(m["seed"], 1);
    assert_eq!(m["params"]["set"]["ks"], 0.26);
}

#[test]
fn anticipation_widens_the_minimum_gap() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (out, phi) in [(&a, "0"), (&b, "1")] {
        let o = run(dir.path(), &["simulate", "--theta", "0.3", "--phi", phi, "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
    }
    assert!(min_gap(&b) > min_gap(&a));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "theta = 0.2\nphi = 0.1\nmode = \"worst_case_braking\"\nseed = 5\ndt = 0.05\n").unwrap();
    let out = dir.path().join("t.csv");
    let o = run(dir.path(), &["simulate", "--config", cfg.to_str().unwrap(), "--theta", "0.1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out);
    assert_eq!(m["config"]["theta"], 0.1);
    assert_eq!(m["config"]["phi"], 0.1);
    assert_eq!(m["config"]["mode"], "worst_case_braking");
    assert_eq!(m["seed"], 5);
    assert_eq!(read_csv(&out).1.len(), 1221);
}

#[test]
fn input_errors_exit_2_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let o = dir.path().to_str().unwrap();
    let bad_cfg = dir.path().join("bad.toml");
    std::fs::write(&bad_cfg, "bogus = 3\n").unwrap();
    let bad_params = dir.path().join("bad.csv");
    std::fs::write(&bad_params, "id,ks,kv,ka,tau,l,TL\n1,0.26,0.71,-1.31,-1,7.64,0.37\n").unwrap();
    let cases: Vec<Vec<String>> = vec![
        vec!["simulate".into(), "--config".into(), format!("{o}/missing.toml")],
        vec!["simulate".into(), "--config".into(), bad_cfg.display().to_string()],
        vec!["simulate".into(), "--theta".into(), "-0.1".into()],
        vec!["simulate".into(), "--params".into(), bad_params.display().to_string()],
        vec!["stability".into(), "--params".into(), format!("{o}/none.csv")],
        vec!["sweep".into(), "cutin".into(), "--axis".into(), "nope=0:1:1".into()],
        vec!["ttc-dist".into(), "--params".into(), bad_params.display().to_string()],
        vec!["lambert-plot".into(), "--grid".into(), "1:0:5".into()],
    ];
    for args in cases {
        let mut full: Vec<&str> = args.iter().map(String::as_str).collect();
        full.extend(["--out", out.to_str().unwrap()]);
        let r = run(dir.path(), &full);
        assert_eq!(r.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&r.stderr));
        assert!(String::from_utf8_lossy(&r.stderr).starts_with("error:"));
        assert!(!out.exists() && !out.with_extension("manifest.json").exists(), "{args:?}");
    }
    let r = run(dir.path(), &["simulate", "--out", "/nonexistent/dir/x.csv"]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn numerical_failures_map_to_exit_1() {
    use acc_cutin::commands::exit_code;
    use acc_cutin::Error;
    assert_eq!(exit_code(&Ok(())), 0);
    assert_eq!(exit_code(&Err(Error::BranchSolve { branch: 0, residual: 1.0 })), 1);
    assert_eq!(exit_code(&Err(Error::Validation { field: "dt".into(), reason: "must be > 0".into() })), 2);
}

#[test]
fn stability_on_reference_and_synthetic_sets() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let t2 = fixture("reference.csv");
    for theta in ["0", "0.3"] {
        let o = run(dir.path(), &["stability", "--params", t2.to_str().unwrap(), "--theta", theta, "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
        let (h, rows) = read_csv(&out);
        assert_eq!(h[..7].join(","), "id,ks,kv,ka,tau,l,TL");
        assert_eq!(rows.len(), 1);
        let verdict = h.iter().position(|x| x == "verdict").unwrap();
        assert_eq!(rows[0][verdict], "stable");
    }
    let o = run(dir.path(), &["stability", "--synthetic", "334", "--spread", "0.4", "--theta", "0.3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("307 stable, 26 unstable, 1 failed of 334"));
}

#[test]
fn lambert_plot_rows_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w.csv");
    let o = run(dir.path(), &["lambert-plot", "--branches", "2", "--grid", "-1/e:5:41", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let (h, rows) = read_csv(&out);
    assert_eq!(h.join(","), "y,k,re,im");
    let mut saw_branch_point = false;
    for r in &rows {
        let y: f64 = r[0].parse().unwrap();
        let k: i32 = r[1].parse().unwrap();
        let w = num_complex::Complex64::new(r[2].parse().unwrap(), r[3].parse().unwrap());
        assert!((w * w.exp() - y).norm() <= 1e-10 * y.abs().max(1.0), "{r:?}");
        if k == 0 && r[0] == (-(-1.0f64).exp()).to_string() {
            assert!((w.re + 1.0).abs() < 1e-8 && w.im.abs() < 1e-8);
            saw_branch_point = true;
        }
    }
    assert!(saw_branch_point);
    assert_eq!(manifest(&out)["command"], "lambert-plot");
}

#[test]
fn sweeps_are_reproducible_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("pop.csv");
    let mut outs = vec![];
    for i in 0..2 {
        let out = dir.path().join(format!("s{i}.csv"));
        let o = run(
            dir.path(),
            &[
                "sweep", "delay-anticipation", "--synthetic", "6", "--seed", "3",
                "--axis", "theta=0:0.3:0.3", "--axis", "phi=0:1:0.5", "--out", out.to_str().unwrap(),
            ],
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outs.push(out);
    }
    let a = std::fs::read(&outs[0]).unwrap();
    assert_eq!(a, std::fs::read(&outs[1]).unwrap());
    let (h, rows) = read_csv(&outs[0]);
    assert_eq!(h[..5].join(","), "theta,phi,M,collision_probability,expectation_inverse_ttc");
    assert_eq!(rows.len(), 6);
    let m = manifest(&outs[0]);
    assert_eq!(m["command"], "sweep delay-anticipation");
    assert_eq!(m["config"]["scenario"]["anticipation_success_prob"], 0.997);
    // the drawn population is saved and can be fed back in
    std::fs::copy(outs[0].with_extension("params.csv"), &params).unwrap();
    let again = dir.path().join("again.csv");
    let o = run(
        dir.path(),
        &[
            "sweep", "delay-anticipation", "--params", params.to_str().unwrap(), "--seed", "3",
            "--axis", "theta=0:0.3:0.3", "--axis", "phi=0:1:0.5", "--out", again.to_str().unwrap(),
        ],
    );
    assert!(o.status.success());
    assert_eq!(a, std::fs::read(&again).unwrap());
}

#[test]
fn cutin_sweep_and_ttc_distribution() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.csv");
    let o = run(
        dir.path(),
        &["sweep", "cutin", "--synthetic", "5", "--theta", "0.3", "--axis", "ds_c=-5:-3:2", "--axis", "dv_c=-5", "--out", out.to_str().unwrap()],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read_csv(&out).1.len(), 2);

    let dist = dir.path().join("d.csv");
    let o = run(dir.path(), &["ttc-dist", "--synthetic", "5", "--theta", "0.3", "--out", dist.to_str().unwrap()]);
    assert!(o.status.success());
    let (h, rows) = read_csv(&dist);
    assert_eq!(h.join(","), "gamma,cdf,count");
    let cdf: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(cdf.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(*cdf.last().unwrap(), 1.0);
    let total: usize = rows.iter().map(|r| r[2].parse::<usize>().unwrap()).sum();
    assert_eq!(total, 5);
}
