use std::path::{Path, PathBuf};
use std::time::Instant;

use bvm_core::engine::{
    averaged_boolean_ratio, bvm_factor, bvm_ratio, estimate_bvm_density,
    estimate_bvm_discretized, estimate_bvm_mc, parse_axis, ratio_grid_csv, sweep, BvmEstimate,
    Ratio, Scenario,
};
use bvm_core::agreement::AgreementRule;
use bvm_core::reproduce::{self, ExampleId};
use serde::Serialize;

use crate::config::{self, EstimatorSection, Format, ScenarioConfig};
use crate::error::{CliError, Result};
use crate::record::{write_file, EstimateRecord, RatioRecord, RunRecord};

/// Overrides shared by the config-driven commands.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

/// Load a config and fold the command-line overrides into it.
pub fn load_resolved(path: &Path, opts: &RunOptions) -> Result<ScenarioConfig> {
    let mut c = config::load(path)?;
    c.estimator = c.estimator.with_overrides(opts.seed, opts.samples);
    Ok(c)
}

pub fn estimate(c: &ScenarioConfig, s: &Scenario) -> Result<BvmEstimate> {
    let est = match c.estimator {
        EstimatorSection::Mc { samples, seed } => estimate_bvm_mc(s, samples, seed)?,
        EstimatorSection::Grid {
            points_per_dim,
            span,
        } => estimate_bvm_discretized(
            s,
            &bvm_core::distributions::DiscretizeOptions {
                points_per_dim,
                span,
            },
        )?,
        EstimatorSection::Density {
            samples,
            seed,
            bins,
        } => {
            let f = c.comparison.as_ref().expect("checked at resolve");
            estimate_bvm_density(s, f, samples, bins, seed)?
        }
    };
    Ok(est)
}

fn label_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn output_target(c: &ScenarioConfig, opts: &RunOptions) -> (Option<PathBuf>, Format) {
    let section = c.output.as_ref();
    let out = opts
        .out
        .clone()
        .or_else(|| section.and_then(|o| o.path.clone()));
    let format = opts
        .format
        .or_else(|| section.map(|o| o.format))
        .unwrap_or_default();
    (out, format)
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => write_file(p, text),
        None => {
            println!("{}", text.trim_end());
            Ok(())
        }
    }
}

fn rule_json(rule: &AgreementRule) -> String {
    serde_json::to_string(rule).expect("rule serializes")
}

fn method_name(e: &BvmEstimate) -> String {
    match serde_json::to_value(e.method).expect("method serializes") {
        serde_json::Value::String(s) => s,
        other => other.to_string(),
    }
}

fn summarize(label: &str, e: &BvmEstimate, rule: &AgreementRule) {
    eprintln!(
        "{label}: P(A|M,D,B) = {} ± {} ({} samples, {})",
        e.p_hat,
        e.std_error,
        e.n_samples,
        method_name(e)
    );
    let rule = rule_json(rule);
    if rule.len() <= 400 {
        eprintln!("  B = {rule}");
    } else {
        eprintln!("  B = {}… ({} bytes, full rule in the run record)", &rule[..200], rule.len());
    }
}

pub fn validate(path: &Path, opts: &RunOptions) -> Result<RunRecord> {
    let start = Instant::now();
    let c = load_resolved(path, opts)?;
    let s = c.resolve()?;
    let est = estimate(&c, &s)?;
    let label = label_of(path);
    summarize(&label, &est, &s.rule);
    let mut record = RunRecord::new("validate");
    record.seed = c.estimator.seed();
    record.estimates.push(EstimateRecord {
        label,
        rule: s.rule,
        estimate: est,
    });
    let (out, format) = output_target(&c, opts);
    record.configs.push(c);
    record.wall_time_s = start.elapsed().as_secs_f64();
    emit(&record.render(format), out.as_deref())?;
    Ok(record)
}

/// First section on which two configs differ, among those that must match.
fn mismatch(a: &ScenarioConfig, b: &ScenarioConfig) -> Option<&'static str> {
    if a.data != b.data {
        Some("data")
    } else if a.comparison != b.comparison {
        Some("comparison")
    } else if a.agreement != b.agreement {
        Some("agreement")
    } else {
        None
    }
}

pub fn ratio(
    paths: &[PathBuf],
    prior: f64,
    prior_alt: f64,
    opts: &RunOptions,
) -> Result<RunRecord> {
    let start = Instant::now();
    let [p1, p2] = paths else {
        return Err(CliError::config("config", "ratio takes exactly two configs"));
    };
    let (c1, c2) = (load_resolved(p1, opts)?, load_resolved(p2, opts)?);
    if let Some(section) = mismatch(&c1, &c2) {
        return Err(CliError::RuleMismatch(section.into()));
    }
    let (s1, s2) = (c1.resolve()?, c2.resolve()?);
    if s1.data != s2.data {
        return Err(CliError::RuleMismatch("data (resolved)".into()));
    }
    let (e1, e2) = (estimate(&c1, &s1)?, estimate(&c2, &s2)?);
    let (l1, l2) = (label_of(p1), label_of(p2));
    summarize(&l1, &e1, &s1.rule);
    summarize(&l2, &e2, &s2.rule);
    let k = bvm_factor(&e1, &e2);
    let r = bvm_ratio(k, prior, prior_alt).map_err(|e| CliError::config("prior", e.to_string()))?;
    eprintln!("K(B) = {}", show_ratio(&k));
    eprintln!("R(B) = {} (priors {prior}:{prior_alt})", show_ratio(&r));
    let mut record = RunRecord::new("ratio");
    record.seed = c1.estimator.seed();
    record.estimates = vec![
        EstimateRecord {
            label: l1,
            rule: s1.rule,
            estimate: e1,
        },
        EstimateRecord {
            label: l2,
            rule: s2.rule,
            estimate: e2,
        },
    ];
    record.ratios = vec![
        RatioRecord {
            label: "factor".into(),
            ratio: k,
        },
        RatioRecord {
            label: "ratio".into(),
            ratio: r,
        },
    ];
    let (out, format) = output_target(&c1, opts);
    record.configs = vec![c1, c2];
    record.wall_time_s = start.elapsed().as_secs_f64();
    emit(&record.render(format), out.as_deref())?;
    Ok(record)
}

pub fn show_ratio(r: &Ratio) -> String {
    match r {
        Ratio::Finite(v) => format!("{v:.4}"),
        other => other.status().to_string(),
    }
}

#[derive(Debug, Clone)]
pub struct SweepAxes {
    pub gamma: String,
    pub epsilon: String,
    pub m: Option<f64>,
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    record: &'a RunRecord,
    grids: Vec<&'a bvm_core::engine::SweepGrid>,
}

pub fn run_sweep(paths: &[PathBuf], axes: &SweepAxes, opts: &RunOptions) -> Result<RunRecord> {
    let start = Instant::now();
    if paths.is_empty() || paths.len() > 2 {
        return Err(CliError::config("config", "sweep takes one or two configs"));
    }
    let out = opts
        .out
        .clone()
        .ok_or_else(|| CliError::config("out", "sweep writes several files; give an output directory"))?;
    let gammas = parse_axis(&axes.gamma).map_err(|e| CliError::config("gamma", e.to_string()))?;
    let epsilons =
        parse_axis(&axes.epsilon).map_err(|e| CliError::config("epsilon", e.to_string()))?;
    let configs = paths
        .iter()
        .map(|p| load_resolved(p, opts))
        .collect::<Result<Vec<_>>>()?;
    if let [a, b] = configs.as_slice() {
        if a.data != b.data {
            return Err(CliError::RuleMismatch("data".into()));
        }
    }
    let m = match (axes.m, &configs[0].agreement) {
        (Some(m), _) => m,
        (None, AgreementRule::GammaEpsilon { m, .. }) => *m,
        _ => {
            return Err(CliError::config(
                "m",
                "give --m or a gamma_epsilon agreement rule to take it from",
            ))
        }
    };
    let mut grids = Vec::new();
    for (p, c) in paths.iter().zip(&configs) {
        let model = c.model.resolve()?;
        let data = c.data.resolve(c.seed())?;
        let g = sweep(&model, &data, &gammas, &epsilons, m, &c.estimator.sweep_estimator()?)?;
        eprintln!("{}: {} agreeing cells of {}", label_of(p), g.total(), g.cells.len());
        grids.push(g);
    }
    let mut record = RunRecord::new("sweep");
    record.seed = configs[0].estimator.seed();
    for (i, g) in grids.iter().enumerate() {
        write_file(&out.join(format!("grid_{}.csv", i + 1)), &g.to_csv())?;
    }
    if let [g1, g2] = grids.as_slice() {
        let r = averaged_boolean_ratio(g1, g2)?;
        println!("averaged ratio: {} ({})", show_ratio(&r), r.status());
        write_file(&out.join("ratio.csv"), &ratio_grid_csv(g1, g2)?)?;
        record.ratios.push(RatioRecord {
            label: "averaged_boolean".into(),
            ratio: r,
        });
    }
    record.configs = configs;
    record.wall_time_s = start.elapsed().as_secs_f64();
    let summary = SweepSummary {
        record: &record,
        grids: grids.iter().collect(),
    };
    write_file(
        &out.join("record.json"),
        &serde_json::to_string_pretty(&summary).expect("sweep serializes"),
    )?;
    Ok(record)
}

pub fn run_reproduce(example: ExampleId, seed: u64, out: Option<&Path>) -> Result<RunRecord> {
    let start = Instant::now();
    let rep = reproduce::run(example, seed)?;
    for c in &rep.checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        let published = c
            .published
            .map(|p| format!(", published {p}"))
            .unwrap_or_default();
        println!(
            "[{tag}] {example} {}: {}{published}, accept [{}, {}]",
            c.name,
            show_value(c.value),
            c.accept_lo,
            c.accept_hi
        );
    }
    let mut record = RunRecord::new("reproduce");
    record.example = Some(example);
    record.seed = Some(seed);
    record.checks = rep.checks.clone();
    record.wall_time_s = start.elapsed().as_secs_f64();
    if let Some(dir) = out {
        for (name, csv) in &rep.tables {
            write_file(&dir.join(format!("{name}.csv")), csv)?;
        }
        write_file(&dir.join("record.json"), &record.to_json())?;
    }
    let failed = rep.checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(CliError::Acceptance(failed));
    }
    Ok(record)
}

fn show_value(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{v}")
    } else {
        format!("{v:.4}")
    }
}
