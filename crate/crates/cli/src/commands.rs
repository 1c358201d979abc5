use std::fs;
use std::path::Path;
use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use fluxnet::cgf::{g_spectral, g_value, lineality_space, Method};
use fluxnet::ldp::{condition_r_scan, entropy_production, phi_grid, RateSolver};
use fluxnet::sim::{default_horizon, default_step, simulate, SimConfig};
use fluxnet::{parse_spec, Error, Geometry, Model, NetworkSpec};

use crate::args::{CgfArgs, Command, Common, GapScanArgs, RateArgs, SimulateArgs};
use crate::output::{format_float, Cell, Manifest, Report, Table};

/// Failure of a command with its exit code.
#[derive(Debug, Clone)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self { code: if e.is_input_error() { 2 } else { 1 }, message: e.to_string() }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

/// Result of a successful command.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    /// One-line human summary.
    pub summary: String,
    pub exit_code: i32,
    /// Additional outputs as `(path, contents)`.
    pub extra: Vec<(std::path::PathBuf, String)>,
}

struct Loaded {
    spec: NetworkSpec,
    model: Model,
    manifest: Manifest,
}

fn load(command: &str, common: &Common, default_tol: f64) -> Result<Loaded, CliError> {
    let bytes = fs::read(&common.spec).map_err(|e| CliError::input(format!("cannot read {}: {e}", common.spec.display())))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| CliError::input(format!("{} is not UTF-8", common.spec.display())))?;
    let spec = parse_spec(&text).map_err(|e| CliError::input(format!("{}: {e}", common.spec.display())))?;
    let model = Model::assemble(&spec)?;
    let mut manifest = Manifest {
        command: command.to_string(),
        input: common.spec.display().to_string(),
        input_sha256: hex::encode(Sha256::digest(&bytes)),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: None,
        tolerances: vec![("acceptance".into(), common.tol.unwrap_or(default_tol))],
        params: Vec::new(),
        wall_clock_s: 0.0,
    };
    manifest.param("oscillators", spec.n());
    manifest.param("reservoirs", spec.d());
    if let Some(raw) = &spec.raw_temperatures {
        manifest.param("raw_temperatures", join(raw));
    }
    manifest.param("temperatures", join(&spec.temperatures()));
    Ok(Loaded { spec, model, manifest })
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format_float(*x)).collect::<Vec<_>>().join(";")
}

fn join_vec(v: &DVector<f64>) -> String {
    join(v.as_slice())
}

fn indexed(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}_{i}")).collect()
}

fn cells(v: &DVector<f64>) -> Vec<Cell> {
    v.iter().map(|&x| Cell::Float(x)).collect()
}

fn geometry(model: &Model) -> Result<Geometry, CliError> {
    model.require_controllable()?;
    Ok(lineality_space(model)?)
}

/// Runs one command.
pub fn run(command: &Command) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let mut outcome = match command {
        Command::Validate(c) => validate(c),
        Command::GapScan(a) => gap_scan(a),
        Command::Rate(a) => rate(a),
        Command::Cgf(a) => cgf(a),
        Command::Simulate(a) => simulate_cmd(a),
    }?;
    outcome.report.manifest.wall_clock_s = start.elapsed().as_secs_f64();
    Ok(outcome)
}

fn validate(common: &Common) -> Result<Outcome, CliError> {
    let tol = common.tol.unwrap_or(1e-10);
    let Loaded { spec, model, mut manifest } = load("validate", common, tol)?;
    manifest.param("kalman_threshold", "1e-9");
    let mut t = Table::new(["quantity", "value"]);
    let structural = model.structural_report()?;
    let kalman = model.kalman_controllable()?;
    let equilibrium = spec.is_equilibrium();
    t.push(vec!["oscillators".into(), spec.n().into()]);
    t.push(vec!["reservoirs".into(), spec.d().into()]);
    t.push(vec!["equilibrium".into(), equilibrium.into()]);
    t.push(vec!["structural_max_violation".into(), structural.max_violation().into()]);
    t.push(vec!["structural_ok".into(), structural.holds(tol).into()]);
    t.push(vec!["kalman_rank".into(), kalman.rank.into()]);
    t.push(vec!["kalman_dim".into(), kalman.dim.into()]);
    t.push(vec!["controllable".into(), kalman.controllable.into()]);
    if !kalman.controllable {
        let summary = format!("(C): FAILS, Kalman rank {} < {}", kalman.rank, kalman.dim);
        return Ok(Outcome { report: Report { manifest, table: t }, summary, exit_code: 2, extra: Vec::new() });
    }
    let geom = lineality_space(&model)?;
    let ep = entropy_production(&model)?;
    t.push(vec!["dim_L".into(), geom.lineality_dim().into()]);
    t.push(vec!["dim_conserved_forms".into(), geom.algebraic_dim.into()]);
    t.push(vec!["dim_section".into(), geom.section_dim().into()]);
    t.push(vec!["ep".into(), ep.ep.into()]);
    for (j, f) in ep.mean_flux.iter().enumerate() {
        t.push(vec![format!("phi_bar_{}", j + 1).into(), (*f).into()]);
    }
    t.footer("controllable", true);
    let ep_text = if ep.ep.abs() < 1e-9 { "ep≈0".to_string() } else { format!("ep={:.6e}", ep.ep) };
    let summary = format!("(C): OK, dim L={}, {ep_text}{}", geom.lineality_dim(), if equilibrium { ", equilibrium" } else { "" });
    Ok(Outcome { report: Report { manifest, table: t }, summary, exit_code: 0, extra: Vec::new() })
}

fn gap_scan(args: &GapScanArgs) -> Result<Outcome, CliError> {
    let Loaded { model, mut manifest, .. } = load("gap-scan", &args.common, 0.0)?;
    let geom = geometry(&model)?;
    manifest.param("directions", args.dirs);
    manifest.param("section_center", join_vec(&geom.center));
    manifest.param("angle_zero", "projected inverse temperatures");
    let scan = condition_r_scan(&model, &geom, args.dirs)?;
    let k = geom.section_dim();
    let mut columns = vec!["dir_index".to_string(), "azimuth".into()];
    if k >= 3 {
        columns.push("inclination".into());
    }
    columns.push("radius".into());
    columns.extend(indexed("xi", model.d));
    columns.extend(["lambda_plus".to_string(), "lambda_minus".into(), "gap".into()]);
    let mut t = Table::new(columns);
    for s in &scan.samples {
        let mut row = vec![s.index.into(), s.angles.azimuth.into()];
        if k >= 3 {
            row.push(s.angles.inclination.into());
        }
        row.push(s.radius.into());
        row.extend(cells(&s.xi));
        row.extend([s.lambda_plus.into(), s.lambda_minus.into(), s.gap.into()]);
        t.push(row);
    }
    t.footer("min_gap", scan.min_gap);
    t.footer("condition_R", scan.condition_r);
    let summary = format!("min gap {:.6e}, Condition (R) {}", scan.min_gap, if scan.condition_r { "holds" } else { "fails" });
    Ok(Outcome { report: Report { manifest, table: t }, summary, exit_code: 0, extra: Vec::new() })
}

/// Parsed `--grid` value.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub counts: Vec<usize>,
    pub half_width: Option<f64>,
}

/// Parses `N1xN2x…[@H]`.
pub fn parse_grid(text: &str) -> Result<GridSpec, CliError> {
    let (counts, half) = match text.split_once('@') {
        Some((c, h)) => (c, Some(h.trim().parse::<f64>().map_err(|_| CliError::input(format!("bad grid half width '{h}'")))?)),
        None => (text, None),
    };
    let counts = counts
        .split(['x', 'X'])
        .map(|c| c.trim().parse::<usize>().map_err(|_| CliError::input(format!("bad grid count '{c}' in '{text}'"))))
        .collect::<Result<Vec<_>, _>>()?;
    if counts.iter().any(|&c| c == 0) || half.is_some_and(|h| !(h > 0.0 && h.is_finite())) {
        return Err(CliError::input(format!("grid '{text}' needs positive counts and half width")));
    }
    Ok(GridSpec { counts, half_width: half })
}

/// `[10, 10]` in two dimensions, `[5, 5, 4]` in three, about 100 points otherwise.
pub fn default_grid(section_dim: usize) -> Vec<usize> {
    match section_dim {
        0 => Vec::new(),
        1 => vec![100],
        2 => vec![10, 10],
        3 => vec![5, 5, 4],
        k => vec![(100f64.powf(1.0 / k as f64).round() as usize).max(2); k],
    }
}

/// Grid half width: `3‖φ̄‖`, or `0.5` when the mean current vanishes.
pub fn default_half_width(mean_flux: &DVector<f64>) -> f64 {
    let n = mean_flux.norm();
    if n < 1e-9 { 0.5 } else { 3.0 * n }
}

fn rate(args: &RateArgs) -> Result<Outcome, CliError> {
    let tol = args.common.tol.unwrap_or(1e-6);
    let Loaded { model, mut manifest, .. } = load("rate", &args.common, tol)?;
    let geom = geometry(&model)?;
    let k = geom.section_dim();
    if k == 0 {
        return Err(CliError::input("the section is a single point; there is no flux grid"));
    }
    let ep = entropy_production(&model)?;
    let spec = match &args.grid {
        Some(g) => parse_grid(g)?,
        None => GridSpec { counts: default_grid(k), half_width: None },
    };
    let half = spec.half_width.unwrap_or_else(|| default_half_width(&ep.mean_flux));
    manifest.param("grid", spec.counts.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("x"));
    manifest.param("grid_half_width", format_float(half));
    manifest.param("grid_center", join_vec(&ep.mean_flux));
    manifest.param("grid_axes", "section frame, first axis along projected inverse temperatures");
    let grid = phi_grid(&geom, &ep.mean_flux, half, &spec.counts)?;
    let solver = RateSolver::new(&model, &geom);
    let results = grid.par_iter().map(|phi| solver.rate_with_delta(phi)).collect::<Result<Vec<_>, _>>()?;
    let mut columns = vec!["index".to_string()];
    columns.extend(indexed("phi", model.d));
    columns.extend(indexed("y", k));
    columns.extend(["I".to_string(), "delta".into(), "interior".into(), "in_F0".into(), "kkt".into()]);
    let mut t = Table::new(columns);
    let mut worst: f64 = 0.0;
    let mut boundary = 0;
    for (i, r) in results.iter().enumerate() {
        let delta = r.delta.unwrap_or(f64::NAN);
        worst = worst.max(delta.abs());
        boundary += usize::from(!r.interior);
        let mut row = vec![i.into()];
        row.extend(cells(&r.phi));
        row.extend(cells(&geom.to_frame(&r.phi)));
        row.extend([r.i_value.into(), delta.into(), r.interior.into(), r.in_f0.into(), r.kkt.into()]);
        t.push(row);
    }
    let holds = worst < tol;
    t.footer("points", results.len());
    t.footer("boundary_points", boundary);
    t.footer("max_abs_delta", worst);
    t.footer("fr_holds", holds);
    let summary = format!("{} points, {boundary} on the boundary regime, max |delta| {worst:.3e}", results.len());
    Ok(Outcome { report: Report { manifest, table: t }, summary, exit_code: 0, extra: Vec::new() })
}

fn parse_vector(text: &str, d: usize) -> Result<DVector<f64>, CliError> {
    let v = text
        .split([',', ';'])
        .map(|c| c.trim().parse::<f64>().map_err(|_| CliError::input(format!("bad number '{c}' in '{text}'"))))
        .collect::<Result<Vec<_>, _>>()?;
    if v.len() != d {
        return Err(CliError::input(format!("'{text}' has {} components, expected {d}", v.len())));
    }
    Ok(DVector::from_vec(v))
}

fn cgf(args: &CgfArgs) -> Result<Outcome, CliError> {
    let tol = args.common.tol.unwrap_or(1e-6);
    let Loaded { model, mut manifest, .. } = load("cgf", &args.common, tol)?;
    let geom = geometry(&model)?;
    let tilts: Vec<DVector<f64>> = if args.xi.is_empty() {
        if args.grid < 2 {
            return Err(CliError::input("--grid needs at least two points"));
        }
        manifest.param("tilts", format!("s * theta_inv, s in [-0.25, 1.25], {} points", args.grid));
        (0..args.grid).map(|i| &model.theta_inv * (-0.25 + 1.5 * i as f64 / (args.grid - 1) as f64)).collect()
    } else {
        manifest.param("tilts", "explicit");
        args.xi.iter().map(|s| parse_vector(s, model.d)).collect::<Result<_, _>>()?
    };
    let results = tilts
        .par_iter()
        .map(|xi| match g_value(&model, &geom, xi, Method::All) {
            Ok(r) => Ok(Some(r)),
            Err(Error::OutsideDomain { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let d = model.d;
    let mut columns = vec!["index".to_string()];
    columns.extend(indexed("xi", d));
    columns.extend(["in_D".to_string(), "g_integral".into(), "g_spectral".into(), "g_riccati".into(), "route_spread".into()]);
    columns.extend(indexed("grad", d));
    columns.extend(["lambda_minus".to_string(), "lambda_plus".into(), "in_Dinf".into()]);
    let mut t = Table::new(columns);
    let mut all_agree = true;
    let mut inside = 0;
    for (i, (xi, r)) in tilts.iter().zip(&results).enumerate() {
        let mut row = vec![i.into()];
        row.extend(cells(xi));
        match r {
            Some(r) => {
                let vals = [r.g_integral, r.g_spectral, r.g_riccati];
                let present: Vec<f64> = vals.iter().flatten().copied().collect();
                let spread = present.iter().fold(f64::MIN, |a, &b| a.max(b)) - present.iter().fold(f64::MAX, |a, &b| a.min(b));
                all_agree &= spread <= tol * (1.0 + r.value().abs());
                inside += usize::from(r.in_d);
                row.extend([r.in_d.into(), r.g_integral.into(), r.g_spectral.into(), r.g_riccati.into(), spread.into()]);
                match &r.grad {
                    Some(g) => row.extend(cells(g)),
                    None => row.extend(std::iter::repeat_n(Cell::Empty, d)),
                }
                row.extend([r.lambda_minus.into(), r.lambda_plus.into(), r.in_dinf.into()]);
            }
            None => {
                row.push(false.into());
                row.extend(std::iter::repeat_n(Cell::Empty, 4 + d + 3));
            }
        }
        t.push(row);
    }
    t.footer("points", tilts.len());
    t.footer("inside_domain", inside);
    t.footer("routes_agree", all_agree);
    let summary = format!("{inside} of {} tilts inside the domain, routes agree: {all_agree}", tilts.len());
    Ok(Outcome { report: Report { manifest, table: t }, summary, exit_code: if all_agree { 0 } else { 1 }, extra: Vec::new() })
}

/// Five small tilts in the section: `±0.02` and `±0.04` times the projected
/// inverse temperatures and `0.03‖Πϑ⁻¹‖` along the second frame axis (or,
/// at equilibrium, multiples of the frame axes).
pub fn default_tilts(model: &Model, geom: &Geometry) -> Vec<DVector<f64>> {
    let k = geom.section_dim();
    if k == 0 {
        return Vec::new();
    }
    let p = geom.project(&model.theta_inv);
    let (base, scale) = if p.norm() > 1e-9 { (p.clone(), p.norm()) } else { (geom.frame.column(0) * 0.5, 0.5) };
    let mut out: Vec<DVector<f64>> = [-0.04, -0.02, 0.02, 0.04].iter().map(|s| &base * *s).collect();
    let side = if k >= 2 { geom.frame.column(1) * (0.03 * scale) } else { &base * 0.03 };
    out.push(side);
    out
}

fn simulate_cmd(args: &SimulateArgs) -> Result<Outcome, CliError> {
    let Loaded { model, mut manifest, .. } = load("simulate", &args.common, 3.0)?;
    let geom = geometry(&model)?;
    let h = match args.step {
        Some(h) => h,
        None => default_step(&model)?,
    };
    let horizon = match args.horizon {
        Some(t) => t,
        None => default_horizon(&model, h)?,
    };
    manifest.seed = Some(args.seed);
    manifest.param("trajectories", args.traj);
    manifest.param("horizon", format_float(horizon));
    manifest.param("step", format_float(h));
    manifest.param("bootstrap", args.bootstrap);
    manifest.param("rng", "ChaCha8, stream = trajectory index");
    let mut cfg = SimConfig::new(args.seed, args.traj, horizon, h);
    cfg.bootstrap = args.bootstrap;
    cfg.tilts = default_tilts(&model, &geom);
    cfg.keep_records = args.records.is_some();
    cfg.cross_check_traj = cfg.cross_check_traj.min(args.traj);
    if cfg.steps() % 2 == 1 {
        cfg.cross_check_traj = 0;
    }
    let stats = simulate(&model, &geom, &cfg)?;
    let z_max = args.common.tol.unwrap_or(3.0);
    let mean = fluxnet::cgf::g_gradient(&model, &DVector::zeros(model.d))?.grad;
    let mut t = Table::new(["quantity", "index", "xi", "empirical", "std_error", "ci_low", "ci_high", "analytic", "consistent"]);
    let mut all = true;
    for j in 0..model.d {
        let (e, se) = (stats.mean_flux[j], stats.mean_flux_se[j]);
        let ok = (e - mean[j]).abs() <= z_max * se;
        all &= ok;
        t.push(vec!["mean_flux".into(), j.into(), Cell::Empty, e.into(), se.into(), (e - z_max * se).into(), (e + z_max * se).into(), mean[j].into(), ok.into()]);
    }
    for (i, c) in stats.cgf.iter().enumerate() {
        let g = g_spectral(&model, &c.xi)?;
        let ok = c.reliable && c.ci_low <= g && g <= c.ci_high;
        all &= ok;
        t.push(vec!["cgf".into(), i.into(), join_vec(&c.xi).into(), c.estimate.into(), c.std_error.into(), c.ci_low.into(), c.ci_high.into(), g.into(), ok.into()]);
    }
    for (l, c) in stats.conserved.iter().enumerate() {
        let ok = (0.8..=1.25).contains(&c.ratio);
        all &= ok;
        t.push(vec!["conserved_variance_ratio".into(), l.into(), join_vec(&c.direction).into(), c.ratio.into(), Cell::Empty, 0.8.into(), 1.25.into(), 1.0.into(), ok.into()]);
    }
    if let Some((at_h, at_2h, ratio)) = stats.cross {
        let ok = (0.4..=0.6).contains(&ratio);
        all &= ok;
        t.push(vec!["step_halving_ratio".into(), 0usize.into(), Cell::Empty, ratio.into(), Cell::Empty, 0.4.into(), 0.6.into(), 0.5.into(), ok.into()]);
        t.footer("discrepancy_h", at_h);
        t.footer("discrepancy_2h", at_2h);
    }
    t.footer("all_consistent", all);
    let mut extra = Vec::new();
    if let Some(path) = &args.records {
        let mut rec = Table::new(
            std::iter::once("trajectory".to_string()).chain(indexed("flux_T", model.d)).chain(indexed("flux_2T", model.d)).collect::<Vec<_>>(),
        );
        for r in &stats.records {
            let mut row = vec![r.index.into()];
            row.extend(cells(&r.flux));
            match &r.flux_2t {
                Some(f) => row.extend(cells(f)),
                None => row.extend(std::iter::repeat_n(Cell::Empty, model.d)),
            }
            rec.push(row);
        }
        let mut m = manifest.clone();
        m.command = "simulate-records".into();
        let report = Report { manifest: m, table: rec };
        extra.push((path.clone(), if args.common.json { report.to_json() } else { report.to_csv() }));
    }
    let summary = format!("{} trajectories, T={}, h={}: all checks consistent: {all}", args.traj, format_float(horizon), format_float(h));
    Ok(Outcome { report: Report { manifest, table: t }, summary, exit_code: 0, extra })
}

/// Writes `contents` to `path`, or to standard output for `None`.
pub fn emit(path: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, contents).map_err(|e| CliError::numerical(format!("cannot write {}: {e}", p.display()))),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(contents.as_bytes()).map_err(|e| CliError::numerical(format!("cannot write output: {e}")))
        }
    }
}
