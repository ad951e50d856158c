use std::process::Command;

const DESK: &[&str] = &[
    "--channel.n_r=32",
    "--channel.n_rf=8",
    "--code.data=8,3*12,0*3",
    "--code.parity=0,5*12,8*3",
    "--sim.noise=snr",
    "--sim.ebn0_db=20",
];

fn ura(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ura"))
        .args(args)
        .args(DESK)
        .output()
        .expect("run ura")
}

#[test]
fn simulate_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = ura(&[
        "simulate",
        "--oracle-cs",
        "--decoders",
        "traditional,hard",
        "--sim.trials=3",
        "--sim.ka=4,6",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "decoder,ebn0_db,ka,p_md,p_fa,p_err,trials,seconds");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("traditional,20,4,"));
    // progress goes to stderr, results only to the file
    assert!(o.stdout.is_empty());
    assert!(String::from_utf8_lossy(&o.stderr).contains("[2/2]"));
}

#[test]
fn simulate_json_to_stdout() {
    let o = ura(&[
        "simulate",
        "--oracle-cs",
        "--decoders",
        "hard",
        "--sim.trials=2",
        "--sim.ka=3",
        "--format",
        "json",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 1);
    assert_eq!(v[0]["decoder"], "hard");
    assert_eq!(v[0]["trials"], 2);
}

#[test]
fn analyze_and_trial() {
    let o = ura(&["analyze", "--sim.ka=10,20"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("ka,p_match,"));
    assert_eq!(text.lines().count(), 3);

    let o = ura(&["trial", "--erase", "1", "--sim.ka=5", "--seed", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("soft"));
    assert_eq!(
        text.lines()
            .filter(|l| l.trim_start().starts_with(char::is_numeric))
            .count(),
        16
    );
}

#[test]
fn errors_exit_nonzero() {
    let o = ura(&["simulate", "--sim.bogus=1"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown key"));
    let o = ura(&["simulate", "--config", "/nonexistent/ura.cfg"]);
    assert!(!o.status.success());
    let o = ura(&[
        "simulate",
        "--sim.trials=1",
        "--sim.ka=2",
        "--oracle-cs",
        "--out",
        "/nonexistent/dir/x.csv",
    ]);
    assert!(!o.status.success());
}

#[test]
fn config_file_is_read() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "[sim]\ntrials = 2\nka = 3\noracle_cs = true\ndecoders = traditional\n",
    )
    .unwrap();
    let o = ura(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 2);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!((row[0], row[2], row[6]), ("traditional", "3", "2"));
}
