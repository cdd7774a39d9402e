use std::fs;
use std::path::Path;

use perpetua::diagnostics::{
    check_c0_with, contradictions, implication_violations, CheckContext, CheckRegistry, Condition,
    Thresholds, Verdict,
};
use perpetua::gallery::{self, FamilyRegistry, GalleryId, GalleryParams, SearchSettings};
use perpetua::law::{LawDocument, LawRegistry};
use perpetua::simulate::{run_ensemble, run_trajectory, write_trace_file, RunConfig, DEFAULT_X_GRID};
use perpetua::spectral;
use perpetua::{Error, Result, SquareMatrix};
use serde_json::{json, Value};

use crate::{
    Command, ConstantArgs, GalleryCommand, RunArgs, SearchOptions, SimArgs, ThresholdArgs, VerifyArgs,
    EXIT_OK, EXIT_VERIFY_FAILED,
};

const DEFAULT_HORIZON: usize = 1000;
const DEFAULT_REPLICATIONS: usize = 32;
const GALLERY_HORIZON: usize = 200;

pub(crate) fn execute(command: Command) -> Result<i32> {
    let output = match &command {
        Command::Simulate(a) | Command::Diagnose(a) | Command::Lyapunov(a) => a.output.clone(),
        Command::Constant(a) => a.output.clone(),
        Command::Gallery(GalleryCommand::List(o)) => o.clone(),
        Command::Gallery(GalleryCommand::Verify(a)) => a.output.clone(),
        Command::Gallery(GalleryCommand::Search(a)) => a.options.output.clone(),
        Command::Search(a) => a.options.output.clone(),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(output.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker threads: {e}")))?;
    let (mut report, code) = pool.install(|| match command {
        Command::Simulate(a) => simulate(&a).map(ok),
        Command::Diagnose(a) => diagnose(&a).map(ok),
        Command::Lyapunov(a) => lyapunov(&a).map(ok),
        Command::Constant(a) => constant(&a).map(ok),
        Command::Gallery(GalleryCommand::List(_)) => gallery_list().map(ok),
        Command::Gallery(GalleryCommand::Verify(a)) => gallery_verify(&a),
        Command::Gallery(GalleryCommand::Search(a)) => search(&a.family, &a.options, "gallery search").map(ok),
        Command::Search(a) => search(&a.family, &a.options, "search").map(ok),
    })?;
    if let (Some(epoch), Some(map)) = (&output.epoch, report.as_object_mut()) {
        map.insert("epoch".into(), json!(epoch));
    }
    emit(&report, output.out.as_deref())?;
    Ok(code)
}

fn ok(report: Value) -> (Value, i32) {
    (report, EXIT_OK)
}

fn emit(report: &Value, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Error::Config(format!("cannot write report to {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Inline JSON when the argument starts with `{` or `[`, otherwise a file path.
fn read_json(arg: &str, what: &str) -> Result<Value> {
    let trimmed = arg.trim_start();
    let text = if trimmed.starts_with('{') || trimmed.starts_with('[') {
        arg.to_string()
    } else {
        fs::read_to_string(arg).map_err(|e| Error::Config(format!("cannot read {what} file {arg:?}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("malformed {what} JSON: {e}")))
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let t = text.trim();
    let grid: Vec<f64> = if t.starts_with('[') {
        serde_json::from_str(t).map_err(|e| Error::Config(format!("malformed --x-grid: {e}")))?
    } else {
        t.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Config(format!("bad --x-grid value {s:?}: {e}"))))
            .collect::<Result<_>>()?
    };
    Ok(grid)
}

fn resolve_thresholds(a: &ThresholdArgs) -> Result<Thresholds> {
    let mut th = Thresholds::default();
    if let Some(s) = a.c0_sigma {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::Config(format!("--c0-sigma must be positive, got {s}")));
        }
        th.c0_sigma = s;
    }
    if let Some(q) = a.quorum {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::Config(format!("--quorum must lie in [0, 1], got {q}")));
        }
        th.quorum = q;
    }
    if let Some(t) = a.tail_tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Config(format!("--tail-tol must be positive, got {t}")));
        }
        th.tail_tol = t;
    }
    th.x_grid = match &a.x_grid {
        Some(g) => parse_grid(g)?,
        None => DEFAULT_X_GRID.to_vec(),
    };
    th.validate()?;
    Ok(th)
}

struct Resolved {
    doc: LawDocument,
    cfg: RunConfig,
    thresholds: Thresholds,
}

impl Resolved {
    fn config_json(&self) -> Value {
        json!({
            "law": self.doc.to_json(),
            "horizon": self.cfg.horizon,
            "replications": self.cfg.replications,
            "seed": self.cfg.seed,
            "suffix_stats": self.cfg.suffix_stats,
            "thresholds": self.thresholds,
        })
    }
}

fn sim_sizes(sim: &SimArgs, horizon: usize) -> (usize, usize) {
    (sim.horizon.unwrap_or(horizon), sim.replications.unwrap_or(DEFAULT_REPLICATIONS))
}

fn resolve(a: &RunArgs) -> Result<Resolved> {
    let doc = LawDocument::parse(&read_json(&a.law, "law")?, &LawRegistry::with_builtins())?;
    let thresholds = resolve_thresholds(&a.thresholds)?;
    let (horizon, replications) = sim_sizes(&a.sim, DEFAULT_HORIZON);
    let cfg = RunConfig::new(doc.law.clone(), doc.z0.clone(), horizon, replications, a.sim.seed)?;
    Ok(Resolved { doc, cfg, thresholds })
}

fn write_trace(cfg: &RunConfig, path: Option<&Path>, first: Option<&[perpetua::simulate::RunRecord]>) -> Result<()> {
    let Some(path) = path else { return Ok(()) };
    match first {
        Some(records) => write_trace_file(records, path),
        None => write_trace_file(&run_trajectory(cfg, 0)?, path),
    }
}

fn simulate(a: &RunArgs) -> Result<Value> {
    let r = resolve(a)?;
    let ens = run_ensemble(&r.cfg)?;
    write_trace(&r.cfg, a.trace.as_deref(), ens.paths.first().map(Vec::as_slice))?;
    Ok(json!({
        "command": "simulate",
        "config": r.config_json(),
        "summary": ens.summary(&r.thresholds.x_grid),
    }))
}

fn diagnose(a: &RunArgs) -> Result<Value> {
    let r = resolve(a)?;
    if !r.cfg.suffix_stats {
        return Err(Error::Config(format!(
            "diagnose needs suffix statistics for (vi); use --T {} or less",
            r.cfg.t_max
        )));
    }
    let ens = run_ensemble(&r.cfg)?;
    write_trace(&r.cfg, a.trace.as_deref(), ens.paths.first().map(Vec::as_slice))?;
    let ctx = CheckContext {
        law: &r.doc.law,
        z0: &r.doc.z0,
        ensemble: &ens,
        thresholds: &r.thresholds,
        seed: r.cfg.seed,
    };
    let reports = CheckRegistry::with_builtins().run_all(&ctx)?;
    let c0_holds = reports.iter().any(|x| x.condition == Condition::C0 && x.verdict == Verdict::Holds);
    let (mode, violations) = if c0_holds {
        ("equivalence", contradictions(&reports))
    } else {
        ("implications", implication_violations(&reports))
    };
    Ok(json!({
        "command": "diagnose",
        "config": r.config_json(),
        "reports": reports,
        "consistency": {"mode": mode, "violations": violations},
    }))
}

fn lyapunov(a: &RunArgs) -> Result<Value> {
    let r = resolve(a)?;
    let (est, c0) = check_c0_with(&r.doc.law, r.cfg.horizon, r.cfg.replications, r.cfg.seed, &r.thresholds)?;
    write_trace(&r.cfg, a.trace.as_deref(), None)?;
    Ok(json!({
        "command": "lyapunov",
        "config": r.config_json(),
        "estimate": est,
        "c0": c0,
    }))
}

fn constant(a: &ConstantArgs) -> Result<Value> {
    let rows: Vec<Vec<f64>> = serde_json::from_value(read_json(&a.matrix, "matrix")?)
        .map_err(|e| Error::Config(format!("--matrix must be a list of rows: {e}")))?;
    let m = SquareMatrix::from_rows(&rows)?;
    Ok(json!({"command": "constant", "analysis": spectral::analyze(&m)?}))
}

fn gallery_list() -> Result<Value> {
    let entries: Vec<Value> = gallery::list()?.iter().map(|e| e.summary()).collect();
    Ok(json!({"command": "gallery list", "entries": entries}))
}

fn gallery_verify(a: &VerifyArgs) -> Result<(Value, i32)> {
    let id: GalleryId = a.id.parse()?;
    let params: GalleryParams = match &a.params {
        Some(p) => serde_json::from_value(read_json(p, "params")?)
            .map_err(|e| Error::Config(format!("bad --params: {e}")))?,
        None => GalleryParams::default(),
    };
    let entry = gallery::build(id, params)?;
    let th = resolve_thresholds(&a.thresholds)?;
    let (horizon, replications) = sim_sizes(&a.sim, GALLERY_HORIZON);
    let report = gallery::verify(&entry, horizon, replications, a.sim.seed, &th)?;
    let code = if report.passed { EXIT_OK } else { EXIT_VERIFY_FAILED };
    Ok((json!({"command": "gallery verify", "report": report}), code))
}

fn search(family: &str, o: &SearchOptions, command: &str) -> Result<Value> {
    let family = FamilyRegistry::with_builtins().parse(&read_json(family, "family")?)?;
    let defaults = SearchSettings::default();
    let settings = SearchSettings {
        horizon: o.sim.horizon.unwrap_or(defaults.horizon),
        replications: o.sim.replications.unwrap_or(defaults.replications),
        thresholds: resolve_thresholds(&o.thresholds)?,
    };
    let report = gallery::search_open_problem(family.as_ref(), o.budget, o.sim.seed, &settings)?;
    Ok(json!({"command": command, "report": report}))
}

