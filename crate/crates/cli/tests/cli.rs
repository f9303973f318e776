//! End-to-end tests of the `cantor-ei` binary: output formats, exit codes,
//! config-file merging, and byte-level determinism.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cantor-ei"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

#[test]
fn theta_exact_prints_exact_rational() {
    let out = run(&[
        "theta-exact",
        "--map",
        "mx_mod1:3",
        "--level",
        "6",
        "--gaps",
        "6",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("theta = 1/3"), "{text}");
    assert!(text.contains("config-sha256:"), "{text}");

    let out = run(&[
        "theta-exact",
        "--map",
        "mx_mod1:9",
        "--level",
        "5",
        "--gaps",
        "2",
    ]);
    assert!(stdout(&out).contains("theta = 5/9"));
}

#[test]
fn theta_exact_csv_and_set_dump() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("theta.csv");
    let dump = dir.path().join("a_set.txt");
    let out = run(&[
        "theta-exact",
        "--map",
        "mx_mod1:3",
        "--level",
        "1",
        "--gaps",
        "1",
        "--csv",
        csv.to_str().unwrap(),
        "--dump-set",
        dump.to_str().unwrap(),
    ]);
    assert!(out.status.success());

    let csv_text = std::fs::read_to_string(&csv).unwrap();
    assert!(csv_text.contains("level,q,mu_U,mu_A,theta"));
    assert!(csv_text.contains("1,1,2/3,2/9,1/3"));

    // A_{1,1} = [1/9,2/9] ∪ [7/9,8/9], one interval per line
    let dump_text = std::fs::read_to_string(&dump).unwrap();
    let lines: Vec<&str> = dump_text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(lines, vec!["1/9 2/9", "7/9 8/9"]);
}

#[test]
fn digraph_dump_matches_index_rules() {
    let out = run(&["digraph", "--m", "3", "--q", "1", "--dump-matrix"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let pairs: Vec<&str> = text
        .lines()
        .filter(|l| {
            !l.starts_with('#')
                && l.chars().next().is_some_and(|c| c.is_ascii_digit())
                && l.contains(' ')
                && !l.contains('=')
        })
        .collect();
    assert_eq!(
        pairs,
        vec!["1 1", "2 2", "2 4", "3 1", "3 5", "4 2", "4 4", "5 5"]
    );
    assert!(text.contains("spectral_radius = 2.0"));
}

#[test]
fn sweep_csv_shape_and_determinism() {
    let args = [
        "sweep",
        "--map",
        "mx_mod1:3",
        "--observable",
        "ladder",
        "--n",
        "2000",
        "--ell",
        "10",
        "--seed",
        "7",
        "--u-min",
        "2",
        "--u-max",
        "6",
        "--q",
        "1,5",
    ];
    let a = run(&args);
    assert!(a.status.success());
    let text = stdout(&a);
    assert!(text.contains("map,observable,n,ell,seed,u,q,mean_theta,sd_theta,defined_count"));
    let rows: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("mx_mod1:3,"))
        .collect();
    assert_eq!(rows.len(), 5 * 2);
    assert!(rows[0].starts_with("mx_mod1:3,ladder,2000,10,7,2,1,"));

    // identical invocation is byte-identical, also under --threads 1 vs 4
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    let mut with_threads = vec!["--threads", "1"];
    with_threads.extend_from_slice(&args);
    let c = run(&with_threads);
    with_threads[1] = "4";
    let d = run(&with_threads);
    assert_eq!(a.stdout, c.stdout);
    assert_eq!(c.stdout, d.stdout);
}

#[test]
fn repro_is_reproducible_and_covers_figures() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    for out in [&out_a, &out_b] {
        let res = run(&[
            "repro",
            "fig3",
            "--n",
            "800",
            "--ell",
            "6",
            "--seed",
            "7",
            "--quiet",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(res.status.success());
    }
    let a = std::fs::read(&out_a).unwrap();
    let b = std::fs::read(&out_b).unwrap();
    assert_eq!(a, b, "repro must be byte-identical for equal configs");

    let text = String::from_utf8(a).unwrap();
    assert!(text.contains("# config: subcommand=repro figure=fig3"));
    assert!(text.contains("mx_mod1:3,ladder,800,6,7,"));
    assert!(text.contains("mx_mod1:9,ladder,800,6,7,"));

    // every preset (and alias) resolves
    for fig in [
        "fig4",
        "fig7",
        "fig8",
        "fig9",
        "ladder-m3-m9",
        "quadratic-survivor",
    ] {
        let res = run(&[
            "repro",
            fig,
            "--n",
            "200",
            "--ell",
            "2",
            "--quiet",
            "--out",
            dir.path().join(format!("{fig}.csv")).to_str().unwrap(),
        ]);
        assert!(res.status.success(), "figure {fig}");
    }
}

#[test]
fn simulate_dumps_one_file_per_orbit() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "simulate",
        "--map",
        "mx_mod1:5",
        "--observable",
        "ladder",
        "--n",
        "100",
        "--ell",
        "3",
        "--seed",
        "9",
        "--dump-series",
        dir.path().to_str().unwrap(),
        "--quiet",
    ]);
    assert!(out.status.success());
    let mut files: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    files.sort();
    assert_eq!(
        files,
        vec!["orbit_00000.txt", "orbit_00001.txt", "orbit_00002.txt"]
    );
    let body = std::fs::read_to_string(dir.path().join("orbit_00000.txt")).unwrap();
    let levels: Vec<&str> = body.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(levels.len(), 100);
    assert!(levels.iter().all(|l| l.parse::<u32>().is_ok()));
}

#[test]
fn ifs_theta_reads_spec_files() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("ternary.ifs");
    std::fs::write(&spec, "1/3 0/1\n1/3 2/3\n").unwrap();
    let out = run(&[
        "ifs-theta",
        "--spec",
        spec.to_str().unwrap(),
        "--k",
        "2",
        "--n",
        "3",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("theta = 5/9"), "{text}");
    assert!(text.contains("limit = 5/9"), "{text}");
}

#[test]
fn counts_reports_dim_estimate() {
    let out = run(&[
        "counts", "--m", "2", "--q", "1", "--n-min", "2", "--n-max", "10",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("n,n_star,n_refined"));
    let dim_line = text
        .lines()
        .find(|l| l.starts_with("# dim_estimate"))
        .expect("dim estimate printed");
    let value: f64 = dim_line.rsplit(' ').next().unwrap().parse().unwrap();
    // box dimension of the intersection is at most 1/2 (finite-level
    // transient tolerated)
    assert!(value <= 0.5 + 0.1, "{dim_line}");
}

#[test]
fn config_file_merging_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "map=mx_mod1:3\nlevel=4\ngaps=4\n").unwrap();
    let from_cfg = run(&["--config", cfg.to_str().unwrap(), "theta-exact"]);
    assert!(from_cfg.status.success());
    assert!(stdout(&from_cfg).contains("theta = 1/3"));

    // flags override the file
    let overridden = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "theta-exact",
        "--map",
        "mx_mod1:9",
        "--level",
        "3",
        "--gaps",
        "1",
    ]);
    assert!(overridden.status.success());
    assert!(stdout(&overridden).contains("theta = 5/9"));
}

#[test]
fn exit_codes_by_error_class() {
    // 2: config errors (missing/unknown parameters, unknown maps)
    let out = run(&["theta-exact", "--level", "3", "--gaps", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&[
        "theta-exact",
        "--map",
        "tent",
        "--level",
        "3",
        "--gaps",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["repro", "fig1"]);
    assert_eq!(out.status.code(), Some(2));

    // 3: resource caps
    let out = run(&[
        "theta-exact",
        "--map",
        "mx_mod1:3",
        "--level",
        "25",
        "--gaps",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&[
        "theta-exact",
        "--map",
        "mx_mod1:5",
        "--level",
        "8",
        "--gaps",
        "6",
        "--max-denom-bits",
        "16",
    ]);
    assert_eq!(out.status.code(), Some(3));

    // 5: I/O failures
    let out = run(&[
        "sweep",
        "--map",
        "mx_mod1:3",
        "--n",
        "50",
        "--ell",
        "2",
        "--out",
        "/nonexistent-dir/x.csv",
    ]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn quiet_touches_logs_only() {
    let args = [
        "sweep",
        "--map",
        "mx_mod1:3",
        "--n",
        "500",
        "--ell",
        "3",
        "--seed",
        "1",
        "--u-min",
        "1",
        "--u-max",
        "3",
        "--q",
        "1",
    ];
    let noisy = run(&args);
    let mut quiet_args = args.to_vec();
    quiet_args.push("--quiet");
    let quiet = run(&quiet_args);
    assert_eq!(noisy.stdout, quiet.stdout);
    assert!(!noisy.stderr.is_empty());
    assert!(quiet.stderr.is_empty());
}

#[test]
fn dumped_set_round_trips_through_the_text_format() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("set.txt");
    let out = run(&[
        "theta-exact",
        "--map",
        "mx_mod1:3",
        "--level",
        "3",
        "--gaps",
        "3",
        "--dump-set",
        dump.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let _ = Path::new(&dump);
    let text = std::fs::read_to_string(&dump).unwrap();
    let parsed = cantor_ei::exact::IntervalSet::from_text(&text).unwrap();
    // A_{3,3} = C_3 \ C_4 has measure (2/3)^3 - (2/3)^4
    use cantor_ei::exact::rat;
    assert_eq!(parsed.measure(), rat(8, 27) - rat(16, 81));
}
