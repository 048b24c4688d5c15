use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use symcocycle::cocycle::{
    cocycle_by_action, cocycle_by_path, hamiltonian_test, normalize_compact, GridFunction, GridSpec,
};
use symcocycle::cover::{lifted_cocycle, periodicity_residual, LiftedMap};
use symcocycle::distortion::{distortion_csv, distortion_table, GeneratorSet, TableSettings};
use symcocycle::dynamics::{compose, symplecticity_residual, Diffeo, GroupWord};
use symcocycle::invariants::{
    calabi, calabi_from_hamiltonian, find_fixed_points, flux_compare, polterovich, polterovich_along_segment,
    twist_check, FluxSettings,
};
use symcocycle::verify::{run_all, Check, VerifySettings};
use symcocycle::{Point, Window};

use crate::config::{NamedMap, Scenario};
use crate::output::{emit, emit_grid, num, Scalars};
use crate::{CliError, Command, Method, Normalize};

pub struct Context {
    pub scenario: Scenario,
    pub out: Option<PathBuf>,
    pub seed: u64,
}

pub fn dispatch(ctx: &Context, command: Command) -> Result<(), CliError> {
    match command {
        Command::Cocycle { map, method, normalize } => cocycle(ctx, map.name.as_deref(), method, normalize),
        Command::Calabi { map } => calabi_cmd(ctx, map.name.as_deref()),
        Command::Polterovich { map, x, y, auto_fixed_points } => {
            polterovich_cmd(ctx, map.name.as_deref(), x.zip(y), auto_fixed_points)
        }
        Command::Osc { map } => {
            let (name, k) = path_cocycle(ctx, map.name.as_deref())?;
            let mut s = Scalars::default();
            s.text("map", name).real("oscillation", k.oscillation());
            emit(ctx.out.as_deref(), &s.render())
        }
        Command::TwistCheck { map } => twist_cmd(ctx, map.name.as_deref()),
        Command::Lift { map, periods } => lift_cmd(ctx, map.name.as_deref(), periods),
        Command::Flux { map } => flux_cmd(ctx, map.name.as_deref()),
        Command::Distortion { word, n_max, radius, x, y } => distortion_cmd(ctx, &word, n_max, radius, x.zip(y)),
        Command::FixedPoints { map } => {
            let sc = &ctx.scenario;
            let (_, m) = sc.map(map.name.as_deref())?;
            let report = find_fixed_points(m.diffeo().as_ref(), &sc.model, &scan_grid(sc)?, Some(&sc.primitive))?;
            emit(ctx.out.as_deref(), &report.to_csv())
        }
        Command::Verify { scenario_only } => verify_cmd(ctx, scenario_only),
    }
}

fn scan_grid(sc: &Scenario) -> Result<GridSpec, CliError> {
    Ok(GridSpec::square(sc.model.window, sc.tolerances.fixed_point_scan)?)
}

/// The path cocycle, after checking exactness on the cylinder.
fn path_cocycle<'a>(ctx: &'a Context, name: Option<&str>) -> Result<(&'a str, GridFunction), CliError> {
    let sc = &ctx.scenario;
    let (name, m) = sc.map(name)?;
    let f = m.diffeo();
    require_exact(sc, name, f.as_ref())?;
    let k = cocycle_by_path(f.as_ref(), &sc.primitive, &sc.model, sc.basepoint, &sc.grid, sc.path_settings())?;
    Ok((name, k))
}

fn require_exact(sc: &Scenario, name: &str, f: &dyn Diffeo) -> Result<(), CliError> {
    let test = hamiltonian_test(f, &sc.primitive, &sc.model, None, sc.tolerances.exactness)?;
    if test.in_ham_hat {
        Ok(())
    } else {
        Err(CliError::Hypothesis(format!(
            "`{name}` is not Hamiltonian on the cylinder: f*α − α has period {} over the core loop (try `flux` or `lift`)",
            num(test.period)
        )))
    }
}

fn cocycle(ctx: &Context, name: Option<&str>, method: Method, normalize: Normalize) -> Result<(), CliError> {
    let sc = &ctx.scenario;
    let (name, k) = match method {
        Method::Path => path_cocycle(ctx, name)?,
        Method::Action => {
            let (name, flow) = sc.flow(name)?;
            require_exact(sc, name, flow.as_ref())?;
            let k = cocycle_by_action(&flow, &sc.primitive, &sc.grid)?;
            // pin like the path method so both outputs are comparable
            let x0 = sc.basepoint.unwrap_or_else(|| sc.grid.window.center());
            let k0 = k.interpolate(x0)?;
            (name, k.shift(-k0))
        }
    };
    let k = match normalize {
        Normalize::Pinned => k,
        Normalize::Compact => normalize_compact(&k, support_of(sc, name).as_ref(), sc.tolerances.collar)?,
    };
    let path = emit_grid(ctx.out.as_deref(), &format!("cocycle_{name}.csv"), &k.to_csv())?;
    eprintln!("wrote {} ({}x{} nodes, oscillation {})", path.display(), k.spec().n_p, k.spec().n_q, num(k.oscillation()));
    Ok(())
}

fn support_of(sc: &Scenario, name: &str) -> Option<Window> {
    match sc.map(Some(name)) {
        Ok((_, NamedMap::Flow(f))) => f.spec().support_claim,
        _ => None,
    }
}

fn calabi_cmd(ctx: &Context, name: Option<&str>) -> Result<(), CliError> {
    let sc = &ctx.scenario;
    let (name, k) = path_cocycle(ctx, name)?;
    let k = normalize_compact(&k, support_of(sc, name).as_ref(), sc.tolerances.collar)?;
    let mut s = Scalars::default();
    s.text("map", name).real("calabi", calabi(&k)?);
    if let Ok((_, NamedMap::Flow(f))) = sc.map(Some(name)) {
        s.real("hamiltonian_formula", calabi_from_hamiltonian(f.spec(), &sc.model.window, sc.tolerances.quadrature)?);
    }
    emit(ctx.out.as_deref(), &s.render())
}

fn polterovich_cmd(ctx: &Context, name: Option<&str>, pair: Option<(Point, Point)>, auto: bool) -> Result<(), CliError> {
    let sc = &ctx.scenario;
    let (name, k) = path_cocycle(ctx, name)?;
    let (_, m) = sc.map(Some(name))?;
    let f = m.diffeo();
    let pairs = match (pair, auto) {
        (Some(p), _) => vec![p],
        (None, true) => {
            let report = find_fixed_points(f.as_ref(), &sc.model, &scan_grid(sc)?, None)?;
            let pts: Vec<Point> = report.points.iter().filter(|p| p.contractible).map(|p| p.location).collect();
            if pts.len() < 2 {
                log::warn!("fewer than two contractible fixed points found on the scan grid");
            }
            pts.iter().enumerate().flat_map(|(i, &x)| pts[i + 1..].iter().map(move |&y| (x, y))).collect()
        }
        (None, false) => return Err(CliError::Config("polterovich needs --x and --y, or --auto-fixed-points".into())),
    };
    let mut body = String::from("x_p,x_q,y_p,y_q,value\n");
    for (x, y) in pairs {
        let v = polterovich(f.as_ref(), &k, &sc.model, x, y)?;
        body.push_str(&format!("{},{},{},{},{}\n", num(x.p), num(x.q), num(y.p), num(y.q), num(v)));
    }
    emit(ctx.out.as_deref(), &body)
}

fn twist_cmd(ctx: &Context, name: Option<&str>) -> Result<(), CliError> {
    let sc = &ctx.scenario;
    let (name, tw) = sc.twist(name)?;
    let r = twist_check(&tw, &sc.primitive, &sc.model, sc.tolerances.twist)?;
    let mut s = Scalars::default();
    s.text("map", name)
        .real("boundary_difference", r.boundary_difference)
        .real("expected", r.expected)
        .real("profile_integral", r.profile_integral)
        .text("compactly_supported", r.compactly_supported);
    emit(ctx.out.as_deref(), &s.render())
}

fn sample_points(window: &Window, n: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Point::new(rng.gen_range(window.p_min..window.p_max), rng.gen_range(-10.0 * window.height()..10.0 * window.height())))
        .collect()
}

fn lift_cmd(ctx: &Context, name: Option<&str>, periods: usize) -> Result<(), CliError> {
    let sc = &ctx.scenario;
    let c = sc.model.circumference().ok_or_else(|| CliError::Hypothesis("lift needs a cylinder".into()))?;
    if periods < 2 {
        return Err(CliError::Config("--periods must be at least 2".into()));
    }
    let (name, m) = sc.map(name)?;
    let w = sc.model.window;
    let lifted_window = Window::new(w.p_min, w.p_max, w.q_min, w.q_min + periods as f64 * c)?;
    let n_q = periods * (sc.grid.n_q - 1) + 1;
    let grid = GridSpec::new(lifted_window, sc.grid.n_p, n_q)?;
    let k = lifted_cocycle(m.isotopy(), &sc.primitive, &sc.model, &grid, sc.path_settings())?;
    let deck = LiftedMap::new(m.isotopy(), sc.model)?.deck_residual(&sample_points(&w, 100, ctx.seed))?;
    let default_name = format!("lift_{name}.csv");
    // the grid goes to --out, the scalars to stdout
    let path = emit_grid(ctx.out.as_deref(), &default_name, &k.to_csv())?;
    let mut s = Scalars::default();
    s.text("map", name)
        .text("grid", path.display())
        .real("periodicity_residual", periodicity_residual(&k, c)?)
        .real("deck_residual", deck);
    emit(None, &s.render())
}

fn flux_cmd(ctx: &Context, name: Option<&str>) -> Result<(), CliError> {
    let sc = &ctx.scenario;
    let (name, m) = sc.map(name)?;
    let settings = FluxSettings { bound_tol: sc.tolerances.growth, path: sc.path_settings(), ..FluxSettings::default() };
    let r = flux_compare(m.isotopy(), &sc.model, &sc.primitive, settings)?;
    let mut s = Scalars::default();
    s.text("map", name)
        .real("flux", r.flux_value)
        .real("growth_rate", r.growth_rate)
        .text("bounded", r.bounded)
        .real("bound_tol", r.bound_tol);
    emit(ctx.out.as_deref(), &s.render())
}

fn distortion_cmd(ctx: &Context, word: &str, n_max: u64, radius: usize, pair: Option<(Point, Point)>) -> Result<(), CliError> {
    let sc = &ctx.scenario;
    if sc.generators.is_empty() {
        return Err(CliError::Config("distortion needs a non-empty `generators` list".into()));
    }
    let word: GroupWord = word.parse()?;
    let gens = GeneratorSet::compute(&sc.generators, &sc.primitive, &sc.model, &sc.grid, sc.path_settings())?;
    let target = compose(&word, &sc.generators)?;
    let (x, y) = match pair {
        Some(p) => p,
        None => widest_pair(sc, &target)?,
    };
    log::info!("bound uses fixed points {x} and {y}");
    let settings = TableSettings { n_max, radius_cap: radius, seed: ctx.seed, tol: sc.tolerances.quadrature };
    let (rows, collisions) = distortion_table(&gens, &word, x, y, settings)?;
    for c in &collisions {
        log::warn!("`{}` and `{}` agree on the primary probes only (gap {})", c.kept, c.colliding, num(c.secondary_gap));
    }
    emit(ctx.out.as_deref(), &distortion_csv(&rows))
}

/// The pair of contractible fixed points with the largest `|P|`.
fn widest_pair(sc: &Scenario, f: &dyn Diffeo) -> Result<(Point, Point), CliError> {
    let report = find_fixed_points(f, &sc.model, &scan_grid(sc)?, None)?;
    let pts: Vec<Point> = report.points.iter().filter(|p| p.contractible).map(|p| p.location).take(12).collect();
    let mut best: Option<(f64, Point, Point)> = None;
    for (i, &x) in pts.iter().enumerate() {
        for &y in &pts[i + 1..] {
            let v = polterovich_along_segment(f, &sc.primitive, &sc.model, x, y, sc.tolerances.quadrature)?.abs();
            if best.map_or(true, |b| v > b.0) {
                best = Some((v, x, y));
            }
        }
    }
    best.map(|(_, x, y)| (x, y))
        .ok_or_else(|| CliError::Hypothesis("the word has fewer than two contractible fixed points on the scan grid; pass --x and --y".into()))
}

fn scenario_checks(ctx: &Context) -> Vec<Check> {
    let sc = &ctx.scenario;
    let mut out = Vec::new();
    for (name, m) in &sc.maps {
        let outcome = match m {
            NamedMap::Flow(_) => flow_checks(ctx, name, m),
            NamedMap::Twist(_) => twist_checks(ctx, name, m),
        };
        match outcome {
            Ok(checks) => out.extend(checks),
            Err(e) => out.push(Check { criterion: 0, name: "scenario map", passed: false, detail: format!("`{name}`: {e}") }),
        }
    }
    out
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { criterion: 0, name, passed, detail }
}

fn flow_checks(ctx: &Context, name: &str, m: &NamedMap) -> Result<Vec<Check>, CliError> {
    let sc = &ctx.scenario;
    let NamedMap::Flow(flow) = m else { unreachable!() };
    let f = flow.as_ref();
    let w = sc.model.window;
    let pts: Vec<Point> = (0..7)
        .flat_map(|i| (0..7).map(move |j| Point::new(w.p_min + w.width() * (i as f64 + 0.5) / 7.0, w.q_min + w.height() * (j as f64 + 0.5) / 7.0)))
        .collect();
    let sym = symplecticity_residual(f, &pts)?;
    let mut checks = vec![check("area preservation", sym < 1e-6, format!("`{name}`: |det Df − 1| ≤ {sym:.3e} on 49 points (< 1e-6)"))];

    let test = hamiltonian_test(f, &sc.primitive, &sc.model, None, sc.tolerances.exactness)?;
    if sc.model.is_cylinder() {
        let flux = flux_compare(flow.clone(), &sc.model, &sc.primitive, FluxSettings { path: sc.path_settings(), ..FluxSettings::default() })?;
        let gap = (flux.flux_value - test.period).abs();
        checks.push(check(
            "loop period equals flux",
            gap < 1e-6,
            format!("`{name}`: period {:.10}, flux {:.10} (gap {gap:.3e} < 1e-6)", test.period, flux.flux_value),
        ));
    }
    if !test.in_ham_hat {
        return Ok(checks);
    }

    let kp = cocycle_by_path(f, &sc.primitive, &sc.model, sc.basepoint, &sc.grid, sc.path_settings())?;
    let ka = cocycle_by_action(flow, &sc.primitive, &sc.grid)?;
    let gap = kp.sub(&ka)?.oscillation();
    checks.push(check("path and action methods agree", gap < 1e-4, format!("`{name}`: osc(K_path − K_action) = {gap:.3e} (< 1e-4)")));

    let report = find_fixed_points(f, &sc.model, &scan_grid(sc)?, None)?;
    let fixed: Vec<Point> = report.points.iter().filter(|p| p.contractible).map(|p| p.location).collect();
    let values = fixed.iter().map(|&x| kp.interpolate(x)).collect::<Result<Vec<_>, _>>()?;
    let hi = values.iter().fold(kp.max(), |a, v| a.max(*v));
    let lo = values.iter().fold(kp.min(), |a, v| a.min(*v));
    let mut ok = true;
    let mut worst = 0.0f64;
    for (i, &x) in fixed.iter().enumerate() {
        for &y in &fixed[i + 1..] {
            let p = polterovich(f, &kp, &sc.model, x, y)?;
            ok &= p.abs() <= hi - lo;
            worst = worst.max(p.abs());
        }
    }
    checks.push(check(
        "Polterovich bounded by oscillation",
        ok,
        format!("`{name}`: max |P| = {worst:.6} ≤ osc(K) = {:.6} over {} fixed points", hi - lo, fixed.len()),
    ));

    if let Ok(k) = normalize_compact(&kp, flow.spec().support_claim.as_ref(), sc.tolerances.collar) {
        let lhs = calabi(&k)?;
        let rhs = calabi_from_hamiltonian(flow.spec(), &w, sc.tolerances.quadrature)?;
        let rel = (lhs - rhs).abs() / rhs.abs().max(1e-300);
        checks.push(check("Calabi factor", rel < 1e-3, format!("`{name}`: calabi(K) = {lhs:.8}, 2∫∬F = {rhs:.8} (relative gap {rel:.3e} < 1e-3)")));
    }
    Ok(checks)
}

fn twist_checks(ctx: &Context, name: &str, m: &NamedMap) -> Result<Vec<Check>, CliError> {
    let sc = &ctx.scenario;
    let NamedMap::Twist(tw) = m else { unreachable!() };
    let r = twist_check(tw, &sc.primitive, &sc.model, sc.tolerances.twist)?;
    let gap = (r.boundary_difference - r.expected).abs();
    let k = cocycle_by_path(tw.as_ref(), &sc.primitive, &sc.model, sc.basepoint, &sc.grid, sc.path_settings())?;
    let normalizable = normalize_compact(&k, None, sc.tolerances.collar).is_ok();
    Ok(vec![
        check(
            "twist boundary difference",
            gap < sc.tolerances.twist,
            format!("`{name}`: {:.10} vs [p·t(p)] − ∫t = {:.10}", r.boundary_difference, r.expected),
        ),
        check(
            "twist normalization",
            normalizable == r.compactly_supported,
            format!("`{name}`: compact normalization {}, boundary difference {}", if normalizable { "succeeds" } else { "fails" }, num(r.boundary_difference)),
        ),
    ])
}

fn verify_cmd(ctx: &Context, scenario_only: bool) -> Result<(), CliError> {
    let sc = &ctx.scenario;
    let settings = VerifySettings { resolution: sc.grid.n_p.max(sc.grid.n_q), integrator: sc.integrator, seed: ctx.seed };
    let mut checks = if scenario_only { Vec::new() } else { run_all(&settings) };
    checks.extend(scenario_checks(ctx));
    let failed = checks.iter().filter(|c| !c.passed).count();
    let mut body: String = checks.iter().map(|c| format!("{c}\n")).collect();
    body.push_str(&format!("{} of {} checks passed\n", checks.len() - failed, checks.len()));
    emit(ctx.out.as_deref(), &body)?;
    if failed > 0 {
        return Err(CliError::SuiteFailed(failed, checks.len()));
    }
    Ok(())
}
