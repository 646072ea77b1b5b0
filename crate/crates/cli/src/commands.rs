use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use serde_json::json;

use sprayopt::csvio::solution_set_to_string;
use sprayopt::desirability::maximize_desirability;
use sprayopt::nsga2::{run_with_progress, GenerationRecord};
use sprayopt::pareto::non_dominated_indices;
use sprayopt::problem::{validate_against_published, Status, TolerancePolicy};
use sprayopt::weighted_sum::{weight_lattice, weighted_sum_sweep};
use sprayopt::{Direction, ModelRegistry, ParameterSpace, ParameterVector, Problem, ProblemSpec, SolutionSet};

use crate::args::{ExportArgs, ExportKind, Method, OptimizeArgs, ParetoArgs, PredictArgs, ValidateArgs};
use crate::output::{sidecar, write_atomic, write_json, RunManifest};
use crate::svg;

/// Exit status for a failed gating validation.
pub const EXIT_VALIDATION: i32 = 1;

pub fn load_registry(path: Option<&Path>) -> Result<ModelRegistry> {
    match path {
        None => Ok(ModelRegistry::builtin()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            ModelRegistry::from_json(&text).with_context(|| format!("parsing registry {}", p.display()))
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

pub fn predict(args: &PredictArgs, registry: &ModelRegistry) -> Result<i32> {
    let s = &args.setting;
    let x = ParameterVector::new(s.pfr, s.sod, s.lambda, s.cv, s.tgf);
    if !x.is_finite() {
        bail!("parameter values must be finite");
    }
    let space = ParameterSpace::wc_10co_4cr();
    if !space.contains(&x) {
        log::warn!("setting lies outside the experimental region; predictions are extrapolated");
    }
    let z = space.normalize(&x)?;
    let names: Vec<String> = if args.all {
        registry.names().map(str::to_string).collect()
    } else {
        args.model.clone()
    };
    let mut out = String::new();
    for name in &names {
        let m = registry.get(name)?;
        out.push_str(&format!("{:<12} {:>14.6} {}\n", m.name(), m.predict(&z)?, m.unit()));
    }
    io::stdout().write_all(out.as_bytes())?;
    Ok(0)
}

/// Problem definition with command-line overrides applied.
struct Resolved {
    spec: ProblemSpec,
    seed: u64,
}

fn resolve(args: &OptimizeArgs) -> Result<Resolved> {
    let mut spec = match (&args.problem, &args.config) {
        (Some(name), None) => ProblemSpec::builtin(name)?,
        (None, Some(path)) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ProblemSpec::from_json(&text).with_context(|| format!("parsing config {}", path.display()))?
        }
        _ => bail!("exactly one of --problem or --config is required"),
    };
    let m = &mut spec.methods;
    if let Some(n) = args.pop {
        m.nsga2.population = n;
    }
    if let Some(g) = args.gens {
        m.nsga2.generations = g;
    }
    if let Some(step) = args.step {
        m.weighted_sum.step = step;
    }
    if let Some(n) = args.starts {
        m.weighted_sum.sqp.multistart = n;
    }
    if let Some(n) = args.restarts {
        m.desirability.search.restarts = n;
    }
    let seed = args.seed.unwrap_or(m.nsga2.seed);
    m.nsga2.seed = seed;
    spec.validate()?;
    validate_method(&spec, args.method)?;
    Ok(Resolved { spec, seed })
}

fn validate_method(spec: &ProblemSpec, method: Method) -> Result<()> {
    let m = &spec.methods;
    match method {
        Method::Nsga2 => m.nsga2.validate()?,
        Method::WeightedSum => m.weighted_sum.sqp.validate()?,
        Method::Desirability => m.desirability.search.validate()?,
    }
    Ok(())
}

fn write_svgs(set: &SolutionSet, problem: &Problem, out: &Path) -> Result<Vec<PathBuf>> {
    let k = problem.k();
    let label = |i: usize| format!("{} ({})", problem.labels()[i], problem.units()[i]);
    let column = |i: usize| -> Vec<f64> { set.candidates().iter().map(|c| c.objectives.raw_values()[i]).collect() };
    let mut written = Vec::new();
    let pairs: Vec<(usize, usize)> = match k {
        2 => vec![(0, 1)],
        3 => vec![(0, 1), (0, 2), (1, 2)],
        _ => {
            log::warn!("SVG output needs 2 or 3 objectives; skipped");
            return Ok(written);
        }
    };
    for (a, b) in pairs {
        let points: Vec<(f64, f64)> = column(a).into_iter().zip(column(b)).collect();
        let title = format!("Problem {} front", problem.name());
        let text = svg::scatter(&points, &label(a), &label(b), &title, k == 2);
        let path = if k == 2 {
            sidecar(out, "svg")
        } else {
            sidecar(out, &format!("{}-{}.svg", problem.labels()[a], problem.labels()[b]))
        };
        write_atomic(&path, text.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

fn progress_line<T: Serialize>(value: &T) {
    if let Ok(line) = serde_json::to_string(value) {
        eprintln!("{line}");
    }
}

pub fn optimize(args: &OptimizeArgs, registry: &ModelRegistry, registry_path: Option<&Path>) -> Result<i32> {
    let started = Instant::now();
    let Resolved { spec, seed } = resolve(args)?;
    let problem = spec.bind(registry)?;
    let mut outputs = vec![args.out.clone()];
    let mut warnings: Vec<String> = Vec::new();

    let mut summary = match args.method {
        Method::Nsga2 => {
            let config = &spec.methods.nsga2;
            let result = run_with_progress(&problem, config, |r: &GenerationRecord| {
                if args.progress {
                    progress_line(r);
                }
            })?;
            if result.failures > 0 {
                warnings.push(format!("{} evaluations failed and were penalized", result.failures));
            }
            write_atomic(&args.out, solution_set_to_string(&result.set)?.as_bytes())?;
            if args.svg {
                outputs.extend(write_svgs(&result.set, &problem, &args.out)?);
            }
            json!({
                "front_size": result.set.len(),
                "generations": config.generations,
                "population": config.population,
                "evaluation_failures": result.failures,
                "reference": result.reference,
                "final_hypervolume": result.history.last().and_then(|r| r.hypervolume),
                "history": result.history,
            })
        }
        Method::WeightedSum => {
            let ws = &spec.methods.weighted_sum;
            let weights = weight_lattice(problem.k(), ws.step)?;
            let result = weighted_sum_sweep(&problem, &weights, &ws.sqp, seed)?;
            let skipped = result.runs.iter().filter(|r| r.skipped).count();
            if skipped > 0 {
                warnings.push(format!("{skipped} weight vectors had no converged start and were skipped"));
            }
            if args.progress {
                for r in &result.runs {
                    progress_line(r);
                }
            }
            write_atomic(&args.out, solution_set_to_string(&result.set)?.as_bytes())?;
            if args.svg {
                outputs.extend(write_svgs(&result.set, &problem, &args.out)?);
            }
            json!({
                "weights": weights.len(),
                "skipped": skipped,
                "deduplicated": result.deduplicated,
                "front_size": result.set.len(),
                "runs": result.runs,
            })
        }
        Method::Desirability => {
            let d = &spec.methods.desirability;
            let outcome = maximize_desirability(&problem, &spec.desirability_spec()?, &d.search, seed)?;
            if outcome.all_zero {
                warnings.push("no restart reached a point with positive overall desirability".into());
            }
            if args.svg {
                warnings.push("desirability yields a single point; no SVG written".into());
            }
            write_json(&args.out, &outcome)?;
            json!({
                "overall": outcome.overall,
                "restart": outcome.restart,
                "evaluations": outcome.evaluations,
            })
        }
    };
    for w in &warnings {
        log::warn!("{w}");
    }

    let wall_time = args.timing.then(|| started.elapsed().as_secs_f64());
    let summary_path = sidecar(&args.out, "summary.json");
    let manifest_path = sidecar(&args.out, "manifest.json");
    let obj = summary.as_object_mut().expect("summary is an object");
    obj.insert("problem".into(), json!(problem.name()));
    obj.insert("method".into(), json!(args.method.name()));
    obj.insert("seed".into(), json!(seed));
    obj.insert("warnings".into(), json!(warnings));
    if let Some(t) = wall_time {
        obj.insert("wall_time_seconds".into(), json!(t));
    }
    write_json(&summary_path, &summary)?;
    outputs.push(summary_path);
    outputs.push(manifest_path.clone());

    let manifest = RunManifest {
        command: "optimize".into(),
        tool_version: env!("CARGO_PKG_VERSION"),
        problem: args.problem.clone(),
        config_path: args.config.as_ref().map(|p| p.display().to_string()),
        registry_path: registry_path.map(|p| p.display().to_string()),
        method: args.method.name().into(),
        seed,
        resolved: spec,
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        wall_time_seconds: wall_time,
    };
    write_json(&manifest_path, &manifest)?;
    Ok(0)
}

fn parse_objective(s: &str) -> Result<(String, Direction)> {
    let (col, dir) = s
        .rsplit_once(':')
        .ok_or_else(|| anyhow!("objective `{s}` must look like column:min or column:max"))?;
    let dir = Direction::parse(dir.trim()).ok_or_else(|| anyhow!("unknown direction `{dir}` in `{s}`"))?;
    Ok((col.trim().to_string(), dir))
}

/// Keeps the non-dominated rows of `input`, copied verbatim in input order.
pub fn pareto_filter_csv(input: &str, objectives: &[(String, Direction)]) -> Result<String> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input.as_bytes());
    let header = reader.headers()?.clone();
    let columns: Vec<(usize, Direction)> = objectives
        .iter()
        .map(|(name, dir)| {
            header
                .iter()
                .position(|h| h.trim() == name)
                .map(|i| (i, *dir))
                .ok_or_else(|| anyhow!("no column named `{name}`"))
        })
        .collect::<Result<_>>()?;
    let mut records = Vec::new();
    let mut points = Vec::new();
    let mut bad = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec?;
        let p: Option<Vec<f64>> = columns
            .iter()
            .map(|&(c, d)| {
                rec.get(c)
                    .and_then(|v| sprayopt::csvio::parse_number(v.trim()))
                    .filter(|v| v.is_finite())
                    .map(|v| d.canonical(v))
            })
            .collect();
        match p {
            Some(p) if rec.len() == header.len() => {
                points.push(p);
                records.push(rec);
            }
            _ => bad.push(line),
        }
    }
    if !bad.is_empty() {
        bail!("malformed rows at lines {bad:?}");
    }
    let keep = if points.is_empty() { Vec::new() } else { non_dominated_indices(&points)? };
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(&header)?;
    for i in keep {
        writer.write_record(&records[i])?;
    }
    Ok(String::from_utf8(writer.into_inner().map_err(|e| anyhow!("{e}"))?)?)
}

pub fn pareto(args: &ParetoArgs) -> Result<i32> {
    let objectives = args.objectives.iter().map(|s| parse_objective(s)).collect::<Result<Vec<_>>>()?;
    let text = fs::read_to_string(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    emit(args.out.as_deref(), &pareto_filter_csv(&text, &objectives)?)?;
    Ok(0)
}

pub fn validate(args: &ValidateArgs, registry: &ModelRegistry) -> Result<i32> {
    let policy = match args.strict {
        Some(t) if t > 0.0 && t.is_finite() => TolerancePolicy::strict(t),
        Some(t) => bail!("--strict needs a positive tolerance, got {t}"),
        None => TolerancePolicy::default(),
    };
    let report = validate_against_published(registry, &policy)?;
    let mut out = format!(
        "{:<8} {:<14} {:<12} {:>12} {:>12} {:>9} {:>9}  {}\n",
        "problem", "solution", "model", "theoretical", "predicted", "dev %", "tol %", "status"
    );
    for r in &report.rows {
        let tol = r.tolerance.map(|t| format!("{:.2}", 100.0 * t)).unwrap_or_else(|| "-".into());
        let status = match r.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Info => "INFO",
        };
        out.push_str(&format!(
            "{:<8} {:<14} {:<12} {:>12.4} {:>12.4} {:>+9.3} {:>9}  {}\n",
            r.problem,
            r.solution,
            r.model,
            r.theoretical,
            r.predicted,
            100.0 * r.deviation,
            tol,
            status
        ));
    }
    io::stdout().write_all(out.as_bytes())?;
    if let Some(p) = &args.json {
        write_json(p, &report)?;
    }
    Ok(if report.passed() { 0 } else { EXIT_VALIDATION })
}

pub fn export(args: &ExportArgs, registry: &ModelRegistry) -> Result<i32> {
    let mut text = match args.what {
        ExportKind::Problem => {
            let name = args.problem.as_deref().ok_or_else(|| anyhow!("--problem is required"))?;
            ProblemSpec::builtin(name)?.to_json()?
        }
        ExportKind::Registry => registry.to_json()?,
    };
    text.push('\n');
    emit(args.out.as_deref(), &text)?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    const A_TO_F: &str = "name,f1,f2\nA,2,8\nB,3,6\nC,4,5\nD,4,3\nE,6,4\nF,8,7\n";

    fn max_min() -> Vec<(String, Direction)> {
        vec![("f1".into(), Direction::Maximize), ("f2".into(), Direction::Minimize)]
    }

    #[test]
    fn filter_keeps_d_e_f() {
        let out = pareto_filter_csv(A_TO_F, &max_min()).unwrap();
        assert_eq!(out, "name,f1,f2\nD,4,3\nE,6,4\nF,8,7\n");
    }

    #[test]
    fn filter_is_idempotent() {
        let once = pareto_filter_csv(A_TO_F, &max_min()).unwrap();
        assert_eq!(pareto_filter_csv(&once, &max_min()).unwrap(), once);
    }

    #[test]
    fn single_row_unchanged() {
        let one = "name,f1,f2\nA,2,8\n";
        assert_eq!(pareto_filter_csv(one, &max_min()).unwrap(), one);
    }

    #[test]
    fn malformed_rows_are_listed() {
        let bad = "name,f1,f2\nA,2,8\nB,x,6\nC,4\nD,4,3\n";
        let err = pareto_filter_csv(bad, &max_min()).unwrap_err().to_string();
        assert!(err.contains("[3, 4]"), "{err}");
    }

    #[test]
    fn objective_parsing() {
        assert_eq!(parse_objective("hardness:max").unwrap(), ("hardness".into(), Direction::Maximize));
        assert!(parse_objective("hardness").is_err());
        assert!(parse_objective("hardness:up").is_err());
    }
}
