//! End-to-end acceptance checks. Each criterion prints exactly one
//! `PASS` or `FAIL` line with its measured runtime and budget.

use std::path::PathBuf;
use std::process::Command as Process;
use std::time::{Duration, Instant};

use clap::Parser;
use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fluxnet::cgf::{e_matrix, g_gradient, g_hessian, g_riccati, g_value, gap_matrix, lineality_space, section_boundary, Method};
use fluxnet::ldp::{entropy_production, feasibility_normal, section_directions, RateSolver};
use fluxnet::linalg::{complex_det, eigenvalues, hamiltonian_matrix, min_eig_sym, riccati_maximal, to_complex};
use fluxnet::network::presets::random_network;
use fluxnet::{parse_spec, Geometry, Model};
use fluxnet_cli::{data_section, run, Cell, Cli, Outcome};

type Check = Result<String, String>;

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.toml"))
}

fn load(name: &str) -> Model {
    let text = std::fs::read_to_string(config(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    Model::assemble(&parse_spec(&text).unwrap()).unwrap()
}

fn with_geometry(name: &str) -> (Model, Geometry) {
    let m = load(name);
    let g = lineality_space(&m).unwrap();
    (m, g)
}

fn examples() -> Vec<(&'static str, Model)> {
    ["lozenge_1_2_4", "triangular_1_2_4", "heatpump_10"].into_iter().map(|n| (n, load(n))).collect()
}

fn random_models(count: usize, equilibrium: bool) -> Vec<Model> {
    (0u64..)
        .filter_map(|seed| {
            let n = 1 + (seed as usize % 6);
            let m = Model::assemble(&random_network(n, 1000 + seed, equilibrium).ok()?).ok()?;
            m.kalman_controllable().ok()?.controllable.then_some(m)
        })
        .take(count)
        .collect()
}

fn random_d0(m: &Model, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(m.d, |j, _| m.theta_inv[j] * rng.random_range(0.05..0.95))
}

fn cli(args: &[&str]) -> Result<Outcome, String> {
    let cli = Cli::try_parse_from(std::iter::once("fluxnet").chain(args.iter().copied())).map_err(|e| e.to_string())?;
    run(&cli.command).map_err(|e| e.to_string())
}

fn footer_bool(o: &Outcome, key: &str) -> Option<bool> {
    match o.report.table.footer_value(key) {
        Some(Cell::Bool(b)) => Some(*b),
        _ => None,
    }
}

fn footer_f64(o: &Outcome, key: &str) -> Option<f64> {
    match o.report.table.footer_value(key) {
        Some(Cell::Float(v)) => Some(*v),
        _ => None,
    }
}

fn column(o: &Outcome, name: &str) -> usize {
    o.report.table.columns.iter().position(|c| c == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn structural() -> Check {
    let mut worst: f64 = 0.0;
    let mut models: Vec<Model> = examples().into_iter().map(|(_, m)| m).collect();
    models.extend(random_models(20, false));
    for m in &models {
        worst = worst.max(m.structural_report().map_err(|e| e.to_string())?.max_violation());
    }
    let msg = format!("{} networks, max violation {worst:.2e}", models.len());
    if worst < 1e-10 { Ok(msg) } else { Err(msg) }
}

fn equilibrium_covariance() -> Check {
    let mut worst: f64 = 0.0;
    let mut models = vec![load("lozenge_eq"), load("triangular_eq")];
    models.extend(random_models(10, true));
    for (i, m) in models.iter().enumerate() {
        let t0 = [1.0, 0.4, 2.5][i % 3];
        let m = m.rescaled(t0);
        let dim = m.dim();
        let err = (&m.steady_state().map_err(|e| e.to_string())?.m - DMatrix::identity(dim, dim) * t0).norm();
        worst = worst.max(err);
    }
    let msg = format!("{} equilibrium networks, max |M - T0 I| {worst:.2e}", models.len());
    if worst < 1e-10 { Ok(msg) } else { Err(msg) }
}

fn three_routes() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut worst: f64 = 0.0;
    for (name, m) in examples() {
        let geom = lineality_space(&m).unwrap();
        for _ in 0..50 {
            let xi = random_d0(&m, &mut rng);
            let r = g_value(&m, &geom, &xi, Method::All).map_err(|e| format!("{name}: {e}"))?;
            let (i, s, q) = (r.g_integral.unwrap(), r.g_spectral.unwrap(), r.g_riccati.unwrap());
            worst = worst.max((i - s).abs()).max((s - q).abs());
        }
    }
    let msg = format!("150 points, max route difference {worst:.2e}");
    if worst < 1e-6 { Ok(msg) } else { Err(msg) }
}

fn zeros_and_symmetry() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    let (mut zero, mut sym): (f64, f64) = (0.0, 0.0);
    for (_, m) in examples() {
        let geom = lineality_space(&m).unwrap();
        let g = |xi: &DVector<f64>| fluxnet::cgf::g_spectral(&m, xi).map_err(|e| e.to_string());
        zero = zero.max(g(&DVector::zeros(m.d))?.abs()).max(g(&m.theta_inv)?.abs());
        for _ in 0..50 {
            let xi = random_d0(&m, &mut rng);
            let base = g(&xi)?;
            let eta = geom.lineality.column(0) * rng.random_range(-3.0..3.0);
            sym = sym.max((g(&(&m.theta_inv - &xi))? - base).abs()).max((g(&(&xi + eta))? - base).abs());
        }
    }
    let msg = format!("anchors {zero:.2e}, symmetry/translation {sym:.2e}");
    if zero < 1e-8 && sym < 1e-8 { Ok(msg) } else { Err(msg) }
}

fn determinant_identity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let models = examples();
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let m = &models[k % models.len()].1;
        let xi = random_d0(m, &mut rng);
        let w: f64 = rng.random_range(-4.0..4.0) * m.spectral_scale;
        let (kx, _, _) = hamiltonian_matrix(m, &xi);
        let mut kw = to_complex(&kx);
        for i in 0..kw.nrows() {
            kw[(i, i)] -= Complex::new(0.0, w);
        }
        let mut aw = to_complex(&m.a);
        for i in 0..aw.nrows() {
            aw[(i, i)] += Complex::new(0.0, w);
        }
        let mut ie = -e_matrix(m, &xi, w).map_err(|e| e.to_string())?;
        for i in 0..m.d {
            ie[(i, i)] += Complex::new(1.0, 0.0);
        }
        let lhs = complex_det(&kw);
        let rhs = complex_det(&aw).norm_sqr() * complex_det(&ie);
        worst = worst.max((lhs - rhs).norm() / lhs.norm().max(rhs.norm()));
    }
    let msg = format!("100 points, max relative error {worst:.2e}");
    if worst < 1e-8 { Ok(msg) } else { Err(msg) }
}

fn riccati_anchors() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let (mut anchor, mut residual): (f64, f64) = (0.0, 0.0);
    let mut failures = Vec::new();
    let mut count = 0;
    for (name, m) in examples() {
        let geom = lineality_space(&m).unwrap();
        let zero = riccati_maximal(&m, &DVector::zeros(m.d)).map_err(|e| e.to_string())?;
        let top = riccati_maximal(&m, &m.theta_inv).map_err(|e| e.to_string())?;
        let th = m.theta_matrix();
        let minv = m.steady_state().unwrap().m.clone().try_inverse().ok_or("singular covariance")?;
        anchor = anchor.max(zero.x.norm()).max((&top.x - &th * minv * &th).norm());
        let k = geom.section_dim();
        for p in 0..17 {
            let xi = if p % 2 == 0 {
                random_d0(&m, &mut rng)
            } else {
                let y = DVector::from_fn(k, |_, _| rng.random_range(-1.0..1.0));
                let u = geom.from_frame(&y.normalize());
                let r = section_boundary(&m, &geom, &u).map_err(|e| e.to_string())?.radius();
                &geom.center + u * (r * rng.random_range(0.0..0.9))
            };
            count += 1;
            let x = riccati_maximal(&m, &xi).map_err(|e| e.to_string())?;
            let dual = riccati_maximal(&m, &(&m.theta_inv - &xi)).map_err(|e| e.to_string())?;
            residual = residual.max(x.relative_residual());
            let stable = eigenvalues(&x.d).map_err(|e| e.to_string())?.iter().all(|z| z.re < 0.0);
            let gap = min_eig_sym(&gap_matrix(&m, &x, &dual)).map_err(|e| e.to_string())?;
            if !stable || gap <= 0.0 {
                failures.push(format!("{name} point {p}: stable {stable}, min eig Y {gap:.2e}"));
            }
        }
    }
    let msg = format!("anchors {anchor:.2e}, max residual {residual:.2e} on {count} points, {} stability failures", failures.len());
    if anchor < 1e-8 && residual < 1e-9 && failures.is_empty() && count >= 50 { Ok(msg) } else { Err(format!("{msg} {failures:?}")) }
}

fn derivatives() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    let (mut grad_err, mut hess_err): (f64, f64) = (0.0, 0.0);
    let models = examples();
    for p in 0..20 {
        let m = &models[p % models.len()].1;
        let geom = lineality_space(m).unwrap();
        let xi = random_d0(m, &mut rng);
        let f = |x: &DVector<f64>| g_riccati(m, x).unwrap();
        let grad = g_gradient(m, &xi).map_err(|e| e.to_string())?.grad;
        let h = 1e-5;
        let fd = DVector::from_fn(m.d, |j, _| {
            let mut e = DVector::zeros(m.d);
            e[j] = h;
            (f(&(&xi + &e)) - f(&(&xi - &e))) / (2.0 * h)
        });
        grad_err = grad_err.max((&fd - &grad).norm() / grad.norm());
        let k = geom.section_dim();
        let hess = g_hessian(m, &xi, &geom.frame).map_err(|e| e.to_string())?;
        let s = 1e-3;
        let u = |a: usize| geom.frame.column(a) * s;
        let fd_h = DMatrix::from_fn(k, k, |a, b| {
            let (ua, ub) = (u(a), u(b));
            (f(&(&xi + &ua + &ub)) - f(&(&xi + &ua - &ub)) - f(&(&xi - &ua + &ub)) + f(&(&xi - &ua - &ub))) / (4.0 * s * s)
        });
        hess_err = hess_err.max((&fd_h - &hess).norm() / hess.norm());
    }
    let msg = format!("20 points, gradient {grad_err:.2e}, Hessian {hess_err:.2e}");
    if grad_err < 1e-5 && hess_err < 1e-4 { Ok(msg) } else { Err(msg) }
}

fn triangular_disk() -> Check {
    let (m, geom) = with_geometry("triangular_eq");
    if geom.section_dim() != 2 {
        return Err(format!("section dimension {}", geom.section_dim()));
    }
    let target = 3f64.sqrt() / 2.0;
    let mut worst: f64 = 0.0;
    for k in 0..64 {
        let a = std::f64::consts::TAU * k as f64 / 64.0;
        let u = geom.from_frame(&DVector::from_vec(vec![a.cos(), a.sin()]));
        let r = section_boundary(&m, &geom, &u).map_err(|e| e.to_string())?.radius();
        worst = worst.max((r - target).abs());
    }
    let msg = format!("64 directions, max |r - sqrt(3)/2| {worst:.2e}");
    if worst < 1e-3 { Ok(msg) } else { Err(msg) }
}

fn condition_r() -> Check {
    let cases = [("lozenge_eq", true), ("lozenge_1_2_64", false), ("triangular_eq", true), ("heatpump_10", true)];
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, expect) in cases {
        let t = Instant::now();
        let path = config(name);
        let o = cli(&["gap-scan", path.to_str().unwrap(), "--dirs", "64"])?;
        let elapsed = t.elapsed();
        let verdict = footer_bool(&o, "condition_R").ok_or("missing verdict")?;
        let min_gap = footer_f64(&o, "min_gap").unwrap_or(f64::NAN);
        ok &= verdict == expect && elapsed < Duration::from_secs(120);
        parts.push(format!("{name}={verdict} (gap {min_gap:.3}, {:.1}s)", elapsed.as_secs_f64()));
    }
    let msg = parts.join(", ");
    if ok { Ok(msg) } else { Err(msg) }
}

fn fluctuation_relation() -> Check {
    let hp = config("heatpump_10");
    let o = cli(&["rate", hp.to_str().unwrap()])?;
    let points = o.report.table.rows.len();
    let hp_worst = footer_f64(&o, "max_abs_delta").ok_or("missing max_abs_delta")?;
    let lz = config("lozenge_1_2_64");
    let o = cli(&["rate", lz.to_str().unwrap()])?;
    let d = column(&o, "delta");
    let lz_worst = o.report.table.rows.iter().filter_map(|r| if let Cell::Float(v) = r[d] { Some(v.abs()) } else { None }).fold(0.0, f64::max);

    let (m, geom) = with_geometry("lozenge_1_2_64");
    let solver = RateSolver::new(&m, &geom);
    let mut strict = Vec::new();
    for dir in section_directions::<f64>(geom.section_dim(), 72) {
        let (xi, inside) = solver.sinf_boundary(&dir).map_err(|e| e.to_string())?;
        if inside {
            strict.push(xi);
        }
    }
    if strict.len() < 5 {
        return Err(format!("only {} boundary probes", strict.len()));
    }
    let mut ruled: f64 = 0.0;
    for i in 0..5 {
        let xi = &strict[i * (strict.len() - 1) / 4];
        let phi0 = g_gradient(&m, xi).map_err(|e| e.to_string())?.grad;
        let eta = feasibility_normal(&m, &geom, xi, 1e-6).map_err(|e| e.to_string())?;
        let i0 = solver.rate(&phi0).map_err(|e| e.to_string())?.i_value;
        for lambda in [0.1, 0.5, 1.0] {
            let r = solver.rate(&(&phi0 + &eta * lambda)).map_err(|e| e.to_string())?;
            ruled = ruled.max((r.i_value - (i0 + lambda * eta.dot(xi))).abs());
        }
    }
    let msg = format!("heat pump {points} points max |defect| {hp_worst:.2e}; lozenge 1:2:64 max |defect| {lz_worst:.2e}; ruled surface error {ruled:.2e}");
    if points == 100 && hp_worst < 1e-6 && lz_worst > 1e-3 && ruled < 1e-5 { Ok(msg) } else { Err(msg) }
}

fn entropy() -> Check {
    let mut eq: f64 = 0.0;
    for name in ["lozenge_eq", "triangular_eq"] {
        eq = eq.max(entropy_production(&load(name)).map_err(|e| e.to_string())?.ep.abs());
    }
    let ep = entropy_production(&load("heatpump_10")).map_err(|e| e.to_string())?;
    let f = &ep.mean_flux;
    let pattern = f[0] > 0.0 && f[1] < 0.0 && f[2] < 0.0 && f[3] > 0.0;
    let msg = format!("equilibrium ep {eq:.2e}; heat pump ep {:.4}, fluxes [{:.4}, {:.4}, {:.4}, {:.4}]", ep.ep, f[0], f[1], f[2], f[3]);
    if eq < 1e-9 && ep.ep > 0.0 && pattern { Ok(msg) } else { Err(msg) }
}

fn monte_carlo() -> Check {
    let path = config("lozenge_1_2_4");
    let o = cli(&["simulate", path.to_str().unwrap(), "--seed", "20241014", "--traj", "10000", "--T", "200", "--step", "0.05"])?;
    let (q, c, e) = (column(&o, "quantity"), column(&o, "consistent"), column(&o, "empirical"));
    let mut counts = std::collections::BTreeMap::<String, (usize, usize)>::new();
    let mut details = Vec::new();
    for row in &o.report.table.rows {
        let Cell::Text(kind) = &row[q] else { continue };
        let entry = counts.entry(kind.clone()).or_default();
        entry.0 += 1;
        entry.1 += usize::from(row[c] == Cell::Bool(true));
        if kind.ends_with("ratio") {
            if let Cell::Float(v) = row[e] {
                details.push(format!("{kind} {v:.3}"));
            }
        }
    }
    let summary: Vec<String> = counts.iter().map(|(k, (n, ok))| format!("{k} {ok}/{n}")).collect();
    let expected = [("cgf", 5), ("conserved_variance_ratio", 1), ("mean_flux", 3), ("step_halving_ratio", 1)];
    let all = expected.iter().all(|(k, n)| counts.get(*k) == Some(&(*n, *n)));
    let msg = format!("{}; {}", summary.join(", "), details.join(", "));
    if all { Ok(msg) } else { Err(msg) }
}

fn determinism() -> Check {
    let bin = env!("CARGO_BIN_EXE_fluxnet");
    let path = config("lozenge_1_2_4");
    let run_once = |threads: &str| -> Result<String, String> {
        let out = Process::new(bin)
            .args(["simulate", path.to_str().unwrap(), "--seed", "7", "--traj", "400", "--T", "20", "--step", "0.05", "--bootstrap", "100"])
            .env("FLUXNET_THREADS", threads)
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!("exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)));
        }
        Ok(data_section(&String::from_utf8_lossy(&out.stdout)))
    };
    let a = run_once("1")?;
    let b = run_once("1")?;
    let c = run_once("4")?;
    let msg = format!("{} data bytes; repeat identical: {}, 1 vs 4 threads identical: {}", a.len(), a == b, a == c);
    if a == b && a == c { Ok(msg) } else { Err(msg) }
}

fn main() {
    let criteria: [(&str, u64, fn() -> Check); 13] = [
        ("structural identities", 1, structural),
        ("equilibrium covariance", 1, equilibrium_covariance),
        ("three-way g agreement", 30, three_routes),
        ("zeros and symmetry of g", 10, zeros_and_symmetry),
        ("determinant identity", 5, determinant_identity),
        ("Riccati anchors", 10, riccati_anchors),
        ("gradient and Hessian vs finite differences", 60, derivatives),
        ("triangular equilibrium section", 60, triangular_disk),
        ("Condition (R) verdicts", 480, condition_r),
        ("fluctuation relation defect", 300, fluctuation_relation),
        ("entropy production", 10, entropy),
        ("Monte Carlo consistency", 600, monte_carlo),
        ("determinism", 60, determinism),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        let (status, detail) = match result {
            Ok(d) if secs <= *budget as f64 => ("PASS", d),
            Ok(d) => ("FAIL", format!("{d}; over budget")),
            Err(d) => ("FAIL", d),
        };
        failed += usize::from(status == "FAIL");
        println!("{status} [{:>2}] {name}: {detail} ({secs:.2}s, budget {budget}s)", i + 1);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
