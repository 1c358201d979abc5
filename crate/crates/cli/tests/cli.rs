use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fluxnet_cli::commands::{default_grid, default_half_width, parse_grid};
use fluxnet_cli::data_section;
use nalgebra::DVector;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fluxnet"));
    c.env_remove("FLUXNET_THREADS");
    c
}

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.toml"))
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fluxnet-cli-tests-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

fn run(args: &[&str], spec: &Path) -> Output {
    bin().arg(args[0]).arg(spec).args(&args[1..]).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const UNCONTROLLABLE: &str = r#"
oscillators = ["a", "b"]
kappa_sq = [[1.0, 0.0], [0.0, 2.0]]

[[boundary]]
id = "a"
gamma = 1.0
theta = 1.0
"#;

#[test]
fn validate_reports_manifest_and_succeeds() {
    let o = run(&["validate"], &config("lozenge_1_2_4"));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    for key in ["# command: validate", "# input_sha256: ", "# version: ", "# seed: none", "# tol_acceptance: ", "# wall_clock_s: "] {
        assert!(out.contains(key), "missing {key}");
    }
    assert!(out.contains("\nquantity,value\n"));
    assert!(out.contains("controllable,true"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("(C): OK, dim L=1"));
}

#[test]
fn input_hash_matches_file_contents() {
    use sha2::{Digest, Sha256};
    let path = config("lozenge_eq");
    let expect = hex::encode(Sha256::digest(std::fs::read(&path).unwrap()));
    let out = stdout(&run(&["validate"], &path));
    assert!(out.contains(&format!("# input_sha256: {expect}")));
}

#[test]
fn uncontrollable_network_exits_with_input_error() {
    let p = scratch("uncontrollable.toml", UNCONTROLLABLE);
    let o = run(&["validate"], &p);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("controllable,false"));
    for cmd in ["gap-scan", "rate", "cgf"] {
        assert_eq!(run(&[cmd], &p).status.code(), Some(2), "{cmd}");
    }
}

#[test]
fn malformed_and_missing_files_exit_with_input_error() {
    let p = scratch("broken.toml", "oscillators = [\"a\"\nkappa_sq = 3");
    assert_eq!(run(&["validate"], &p).status.code(), Some(2));
    let p = scratch("indefinite.toml", "oscillators = [\"a\", \"b\"]\nkappa_sq = [[1.0, 2.0], [2.0, 1.0]]\n[[boundary]]\nid = \"a\"\ngamma = 1.0\ntheta = 1.0\n");
    assert_eq!(run(&["validate"], &p).status.code(), Some(2));
    assert_eq!(run(&["validate"], Path::new("/nonexistent/net.toml")).status.code(), Some(2));
    let bad_xi = run(&["cgf", "--xi", "1,2"], &config("lozenge_eq"));
    assert_eq!(bad_xi.status.code(), Some(2));
}

#[test]
fn gap_scan_reports_verdict_footer() {
    let o = run(&["gap-scan", "--dirs", "16"], &config("lozenge_eq"));
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("dir_index,azimuth,radius,xi_1,xi_2,xi_3,lambda_plus,lambda_minus,gap"));
    assert!(out.contains("# condition_R: true"));
    assert_eq!(out.lines().filter(|l| !l.starts_with('#')).count(), 17);
}

#[test]
fn cgf_outside_points_have_blank_cells() {
    let o = run(&["cgf", "--xi", "0.1,0.2,0.3", "--xi", "-50,0,50"], &config("lozenge_1_2_4"));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].contains(",true,"));
    assert!(rows[2].starts_with("1,-5e1,0e0,5e1,false,,"));
    assert!(out.contains("# inside_domain: 1"));
}

#[test]
fn json_output_has_manifest_and_rows() {
    let o = run(&["gap-scan", "--dirs", "8", "--json"], &config("triangular_eq"));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["manifest"]["command"], "gap-scan");
    assert_eq!(v["rows"].as_array().unwrap().len(), 8);
    assert_eq!(v["summary"]["condition_R"], true);
}

#[test]
fn out_flag_and_records_write_files() {
    let dir = std::env::temp_dir().join(format!("fluxnet-cli-out-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let (out, rec) = (dir.join("sim.csv"), dir.join("records.csv"));
    let o = run(
        &["simulate", "--traj", "40", "--T", "2", "--step", "0.05", "--bootstrap", "20", "--out", out.to_str().unwrap(), "--records", rec.to_str().unwrap()],
        &config("lozenge_1_2_4"),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    assert!(std::fs::read_to_string(&out).unwrap().contains("quantity,index,xi,empirical"));
    let records = std::fs::read_to_string(&rec).unwrap();
    assert!(records.contains("trajectory,flux_T_1,flux_T_2,flux_T_3,flux_2T_1"));
    assert_eq!(records.lines().filter(|l| !l.starts_with('#')).count(), 41);
}

#[test]
fn simulate_is_deterministic_and_seed_sensitive() {
    let args = |seed: &'static str| ["simulate", "--seed", seed, "--traj", "60", "--T", "4", "--step", "0.05", "--bootstrap", "30"];
    let spec = config("lozenge_1_2_4");
    let a = data_section(&stdout(&run(&args("3"), &spec)));
    let b = data_section(&stdout(&bin().arg("simulate").arg(&spec).args(&args("3")[1..]).env("FLUXNET_THREADS", "3").output().unwrap()));
    let c = data_section(&stdout(&run(&args("4"), &spec)));
    assert!(a.contains("# seed: 3"));
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn invalid_simulation_settings_are_input_errors() {
    let o = run(&["simulate", "--traj", "10", "--T", "0.1", "--step", "0.05"], &config("lozenge_1_2_4"));
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["simulate", "--threads", "0"], &config("lozenge_1_2_4"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn grid_syntax_and_defaults() {
    assert_eq!(parse_grid("10x10").unwrap().counts, vec![10, 10]);
    let g = parse_grid("5x5x4@0.75").unwrap();
    assert_eq!((g.counts, g.half_width), (vec![5, 5, 4], Some(0.75)));
    for bad in ["", "3x", "0x4", "4x4@-1", "ax2"] {
        assert_eq!(parse_grid(bad).unwrap_err().code, 2, "{bad}");
    }
    assert_eq!(default_grid(2), vec![10, 10]);
    assert_eq!(default_grid(3), vec![5, 5, 4]);
    assert_eq!(default_grid(3).iter().product::<usize>(), 100);
    assert_eq!(default_half_width(&DVector::zeros(3)), 0.5);
    assert!((default_half_width(&DVector::from_vec(vec![3.0, 4.0])) - 15.0).abs() < 1e-12);
}

#[test]
fn rate_on_equilibrium_network_uses_unit_box() {
    let o = run(&["rate", "--grid", "3x3"], &config("lozenge_eq"));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("# grid_half_width: 5e-1"));
    assert!(out.contains("# fr_holds: true"));
}
