mod args;
mod output;

use std::fs;
use std::io;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use serde::Serialize;
use serde_json::{json, Value};

use hopfx_core::search::compare_golden;
use hopfx_core::stability::MeshRecord;
use hopfx_core::{
    bisect_codim2, bracket_l1_sign_change, classify, hopf_surface_mesh, integrate, lyapunov_at, reproduce_tables,
    verify_direction, Codim2Record, DirectionConfig, GridSpec, Parameters, ProbeSide, RangeSpec,
};

use args::{Cli, Command, Format, Model, Side};
use output::{emit, Cell, Payload, Table};

/// Everything that ends a run with a nonzero status.
#[derive(Debug)]
enum Failure {
    Core(hopfx_core::Error),
    Usage(String),
    Domain(String),
    Golden(String),
    Io(io::Error),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        use hopfx_core::Error as E;
        match self {
            Failure::Core(E::Usage(_) | E::InvalidParameters(_)) | Failure::Usage(_) | Failure::Io(_) => 1,
            Failure::Core(E::Domain(_)) | Failure::Domain(_) => 2,
            Failure::Core(E::Numerical(_)) => 3,
            Failure::Golden(_) => 4,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Usage(m) => write!(f, "usage: {m}"),
            Failure::Domain(m) => write!(f, "{m}"),
            Failure::Golden(m) => write!(f, "golden table mismatch: {m}"),
            Failure::Io(e) => write!(f, "i/o: {e}"),
        }
    }
}

impl From<hopfx_core::Error> for Failure {
    fn from(e: hopfx_core::Error) -> Self {
        Failure::Core(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

type Outcome<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("hopfx: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}

fn configure_threads() -> Outcome<()> {
    let Ok(raw) = std::env::var("HOPFX_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Failure::Usage(format!("HOPFX_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Usage(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Outcome<()> {
    configure_threads()?;
    let format = cli.format;
    let (payload, deferred) = match cli.command {
        Command::Classify { model, r } => (cmd_classify(&model, r, format)?, None),
        Command::HopfSurface {
            n,
            beta0,
            k_min,
            k_max,
            k_steps,
            delta_min,
            delta_max,
            delta_steps,
        } => {
            let ks = RangeSpec::new(k_min, k_max, k_steps)?;
            let deltas = RangeSpec::new(delta_min, delta_max, delta_steps)?;
            (cmd_hopf_surface(n, beta0, &ks, &deltas, format)?, None)
        }
        Command::Lyapunov { model, l2 } => (cmd_lyapunov(&model, l2, format)?, None),
        Command::FindCodim2 {
            n,
            beta0,
            k,
            delta_lo,
            delta_hi,
            tol,
        } => (cmd_find_codim2(n, beta0, k, delta_lo.zip(delta_hi), tol, format)?, None),
        Command::Tables { preset, grid, all } => {
            let grid_spec = match &grid {
                Some(path) => GridSpec::from_json(&fs::read_to_string(path)?)?,
                None => GridSpec::paper(),
            };
            // the golden comparison applies to the built-in grid only
            let golden = grid.is_none() || preset.is_some();
            cmd_tables(&grid_spec, golden, all, format)?
        }
        Command::Simulate {
            model,
            r,
            offset,
            tmax,
            steps_per_delay,
        } => (cmd_simulate(&model, r, offset, tmax, steps_per_delay, format)?, None),
        Command::VerifyDirection {
            model,
            offsets,
            side,
            steps_per_delay,
        } => (cmd_verify(&model, &offsets, side, steps_per_delay)?, None),
    };
    emit(&payload, cli.output.as_deref())?;
    match deferred {
        Some(f) => Err(f),
        None => Ok(()),
    }
}

fn params(model: &Model, r: Option<f64>) -> Outcome<Parameters> {
    let p = Parameters::new(model.beta0, model.n, model.delta, model.k, r)?;
    p.check_k_upper()?;
    Ok(p)
}

fn to_json(value: &impl Serialize) -> Value {
    serde_json::to_value(value).expect("plain data serializes")
}

fn cmd_classify(model: &Model, r: f64, format: Format) -> Outcome<Payload> {
    let v = classify(&params(model, Some(r))?)?;
    let stable = if v.asymptotically_stable { "stable" } else { "unstable" };
    let verdict = format!("{}, {stable}", v.case_label);
    if format == Format::Json {
        let mut value = to_json(&v);
        value["verdict"] = json!(verdict);
        return Ok(Payload::Json(value));
    }
    let label = to_json(&v.case_label).as_str().unwrap_or_default().to_owned();
    let mut t = Table::new(&[
        "verdict",
        "case_label",
        "asymptotically_stable",
        "stable_r_lo",
        "stable_r_hi",
        "omega0",
        "b1",
        "p",
        "q",
        "condition_inapplicable",
    ]);
    t.push(vec![
        verdict.into(),
        label.into(),
        v.asymptotically_stable.into(),
        v.stable_r_window.map(|w| w.lo).into(),
        v.stable_r_window.map(|w| w.hi.unwrap_or(f64::INFINITY)).into(),
        v.omega0.into(),
        v.b1.into(),
        v.p.into(),
        v.q.into(),
        v.condition_inapplicable.into(),
    ]);
    Ok(Payload::Csv(t))
}

fn cmd_hopf_surface(n: f64, beta0: f64, ks: &RangeSpec, deltas: &RangeSpec, format: Format) -> Outcome<Payload> {
    Parameters::without_delay(beta0, n, deltas.min, ks.min)?;
    Parameters::without_delay(beta0, n, deltas.max, ks.max)?.check_k_upper()?;
    let mesh = hopf_surface_mesh(n, beta0, ks, deltas)?;
    eprintln!("hopfx: {} grid points without a Hopf point omitted", mesh.omitted);
    if format == Format::Json {
        return Ok(Payload::Json(to_json(&mesh)));
    }
    let mut t = Table::new(&["n", "beta0", "k", "delta", "r", "omega"]);
    for &MeshRecord {
        n,
        beta0,
        k,
        delta,
        r,
        omega,
    } in &mesh.records
    {
        t.push(vec![n.into(), beta0.into(), k.into(), delta.into(), r.into(), omega.into()]);
    }
    Ok(Payload::Csv(t))
}

fn cmd_lyapunov(model: &Model, want_l2: bool, format: Format) -> Outcome<Payload> {
    let rep = lyapunov_at(&params(model, None)?, want_l2)?;
    if format == Format::Json {
        return Ok(Payload::Json(to_json(&rep)));
    }
    let h = &rep.hopf;
    let mut t = Table::new(&["n", "beta0", "k", "delta", "r", "omega", "x2", "l1", "l2", "criticality"]);
    t.push(vec![
        h.params.n.into(),
        h.params.beta0.into(),
        h.params.k.into(),
        h.params.delta.into(),
        h.r().into(),
        h.omega_star.into(),
        h.x2.into(),
        rep.l1.into(),
        rep.l2.into(),
        rep.criticality.to_string().into(),
    ]);
    Ok(Payload::Csv(t))
}

fn codim2_table<'a>(records: impl IntoIterator<Item = &'a Codim2Record>) -> Table {
    let mut t = Table::new(&Codim2Record::CSV_HEADER);
    for rec in records {
        t.push(rec.values().iter().map(|&x| x.into()).collect());
    }
    t
}

fn cmd_find_codim2(
    n: f64,
    beta0: f64,
    k: f64,
    bracket: Option<(f64, f64)>,
    tol: f64,
    format: Format,
) -> Outcome<Payload> {
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Failure::Usage(format!("--tol must be nonnegative, got {tol}")));
    }
    let base = Parameters::without_delay(beta0, n, 1.0, k)?;
    base.check_k_upper()?;
    let (lo, hi) = match bracket {
        Some((lo, hi)) => {
            Parameters::without_delay(beta0, n, lo, k)?;
            Parameters::without_delay(beta0, n, hi, k)?;
            (lo, hi)
        }
        None => bracket_l1_sign_change(n, beta0, k, &GridSpec::paper()).ok_or_else(|| {
            Failure::Domain(format!(
                "no sign change of l1 on the Hopf surface for n = {n}, beta0 = {beta0}, k = {k}"
            ))
        })?,
    };
    let rec = bisect_codim2(n, beta0, k, lo, hi, tol)?;
    Ok(match format {
        Format::Json => Payload::Json(to_json(&rec)),
        Format::Csv => Payload::Csv(codim2_table([&rec])),
    })
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{v:.6}"))
}

fn cmd_tables(grid: &GridSpec, golden: bool, all: bool, format: Format) -> Outcome<(Payload, Option<Failure>)> {
    let report = reproduce_tables(grid)?;
    for s in &report.summaries {
        let note = if s.found == 0 { "  (no codimension-two point)" } else { "" };
        eprintln!(
            "hopfx: n = {}: {} cells, {} located, {} failed, r* in [{}, {}]{note}",
            s.n,
            s.cells,
            s.found,
            s.failed,
            fmt_opt(s.min_r_star),
            fmt_opt(s.max_r_star)
        );
    }
    for f in &report.failures {
        eprintln!("hopfx: search failed: {}", to_json(f));
    }
    let checks = golden.then(|| compare_golden(&report.records));
    let mut mismatch = None;
    if let Some(checks) = &checks {
        let bad: Vec<_> = checks.iter().filter(|c| !c.pass).collect();
        for c in &bad {
            eprintln!("hopfx: golden row beta0 = {}, k = {} fails: {}", c.beta0, c.k, to_json(c));
        }
        if !bad.is_empty() {
            mismatch = Some(Failure::Golden(format!("{} of {} rows out of tolerance", bad.len(), checks.len())));
        }
    }
    let has_n2 = grid.n_values.contains(&2.0);
    let rows: Vec<&Codim2Record> = report
        .records
        .iter()
        .filter(|r| all || !has_n2 || r.n == 2.0)
        .collect();
    let payload = match format {
        Format::Json => Payload::Json(json!({
            "records": to_json(&rows),
            "summaries": to_json(&report.summaries),
            "failures": to_json(&report.failures),
            "golden": checks.as_ref().map(to_json),
        })),
        Format::Csv => Payload::Csv(codim2_table(rows)),
    };
    Ok((payload, mismatch))
}

fn cmd_simulate(model: &Model, r: f64, offset: f64, tmax: f64, spd: usize, format: Format) -> Outcome<Payload> {
    let traj = integrate(&params(model, Some(r))?, offset, tmax, spd)?;
    if format == Format::Json {
        return Ok(Payload::Json(to_json(&traj)));
    }
    let mut t = Table::new(&["t", "x"]);
    for (&ti, &xi) in traj.t.iter().zip(&traj.x) {
        t.push(vec![Cell::Num(ti), Cell::Num(xi)]);
    }
    Ok(Payload::Csv(t))
}

fn cmd_verify(model: &Model, offsets: &[f64], side: Side, spd: usize) -> Outcome<Payload> {
    let p = params(model, None)?;
    if spd < hopfx_core::ddesim::MIN_STEPS_PER_DELAY {
        return Err(Failure::Usage(format!("--steps-per-delay must be at least 100, got {spd}")));
    }
    if let Some(bad) = offsets.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
        return Err(Failure::Usage(format!("offsets must be positive, got {bad}")));
    }
    let rep = lyapunov_at(&p, false)?;
    let cfg = DirectionConfig {
        side: match side {
            Side::Transversality => ProbeSide::Transversality,
            Side::Below => ProbeSide::Below,
            Side::Above => ProbeSide::Above,
        },
        steps_per_delay: spd,
        ..DirectionConfig::default()
    };
    let report = verify_direction(&rep.hopf, rep.l1, offsets, &cfg)?;
    Ok(Payload::Json(to_json(&report)))
}
