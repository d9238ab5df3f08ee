use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const STEADY: &str = "
command = solve
[problem]
domain = interval(1.0, 8, gamma1=right)
gamma = linear(2.0)
beta = physical(h=1.0, s=1.0)
h = beta_of(0.8)
u0 = 0.8
final_time = 0.5
[solver]
tau = 0.1
lambda_schedule = [0]
mass_regularization = false
";

fn run(args: &[&str], config: Option<(&Path, &str)>) -> Output {
    if let Some((path, text)) = config {
        fs::write(path, text).unwrap();
    }
    Command::new(env!("CARGO_BIN_EXE_monoheat")).args(args).output().unwrap()
}

fn solve_in(dir: &Path, text: &str, extra: &[&str]) -> Output {
    let cfg = dir.join("run.cfg");
    let out = dir.join("out");
    let mut args = vec!["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args, Some((&cfg, text)))
}

#[test]
fn steady_solve_writes_constant_solution() {
    let dir = tempfile::tempdir().unwrap();
    let o = solve_in(dir.path(), STEADY, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("out/solution.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("k,t,node_id,u,v"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 6 * 9);
    for row in rows {
        let u: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
        assert!((u - 0.8).abs() < 1e-12, "{row}");
    }
    for name in ["boundary.csv", "estimates.csv", "summary.txt"] {
        assert!(dir.path().join("out").join(name).exists(), "{name}");
    }
    let summary = fs::read_to_string(dir.path().join("out/summary.txt")).unwrap();
    assert!(summary.contains("check.A1 = pass"));
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let text = STEADY
        .replace("u0 = 0.8", "u0 = random(seed=3, low=0, high=1)")
        .replace("command = solve", "command = continuation")
        .replace("lambda_schedule = [0]", "lambda_schedule = [0.5, 0.25, 0.125]");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    fs::create_dir_all(&a).unwrap();
    fs::create_dir_all(&b).unwrap();
    assert_eq!(solve_in(&a, &text, &[]).status.code(), Some(0));
    assert_eq!(solve_in(&b, &text, &[]).status.code(), Some(0));
    for name in ["solution.csv", "boundary.csv", "estimates.csv", "continuation.csv", "summary.txt"] {
        let x = fs::read(a.join("out").join(name)).unwrap();
        let y = fs::read(b.join("out").join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
}

#[test]
fn graph_check_on_builtins() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("gc");
    let o = run(&["graph-check", "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(out.join("graph_check.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.ends_with(",true")));
    for g in ["\"linear(2)\"", "\"saturating(1, 1)\"", "\"power(3)\"", "\"sign()\""] {
        assert!(rows.iter().any(|r| r.starts_with(g)), "{g}");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let dep = STEADY.replace("command = solve", "command = dependence").replace("linear(2.0)", "saturating(1.0, 1.0)") + "[perturbation]\nu0 = 1.0\n";
    assert_eq!(solve_in(dir.path(), &dep, &[]).status.code(), Some(3));

    let increasing = STEADY.replace("lambda_schedule = [0]", "lambda_schedule = [0.125, 0.25, 0.5]");
    let o = solve_in(dir.path(), &increasing, &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("decreasing"));

    let unknown = STEADY.replace("u0 = 0.8", "u0 = 0.8\nconductivity = 2");
    let o = solve_in(dir.path(), &unknown, &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 9"));
    let o = solve_in(dir.path(), &unknown, &["--strict", "false"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));

    let stuck = STEADY.replace("mass_regularization = false", "mass_regularization = false\nmax_iters = 1\nsolver = picard\npicard_tol = 1e-15");
    let stuck = stuck.replace("u0 = 0.8", "u0 = 0.3");
    assert_eq!(solve_in(dir.path(), &stuck, &[]).status.code(), Some(1));

    let o = run(&["solve", "--config", "/nonexistent/run.cfg"], None);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn dependence_and_convergence_commands() {
    let dir = tempfile::tempdir().unwrap();
    let dep = STEADY.replace("command = solve", "command = dependence") + "[perturbation]\nu0 = 1.0\ng = 0.5\n";
    let o = solve_in(dir.path(), &dep, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(dir.path().join("out/summary.txt")).unwrap();
    assert!(summary.contains("check.dependence = pass"));

    let conv = "
command = convergence
[problem]
domain = interval(1.0, 128, gamma1=right)
gamma = linear(2.0)
beta = linear(1.0)
final_time = 1.0
[convergence]
exact = affine(a=1, b=1, kx=pi/2)
resolutions = [8, 16, 32]
space_tau = 0.25
taus = [0.2, 0.1, 0.05]
";
    let o = solve_in(dir.path(), conv, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(dir.path().join("out/summary.txt")).unwrap();
    let order: f64 = summary
        .lines()
        .find_map(|l| l.strip_prefix("order_space = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((1.9..=2.1).contains(&order), "{summary}");
    assert!(summary.contains("order_time = "));
}
